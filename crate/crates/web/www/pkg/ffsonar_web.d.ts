/* tslint:disable */
/* eslint-disable */

/**
 * A single `y(x)` curve.
 */
export class Curve {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly x: Float64Array;
    readonly y: Float64Array;
}

/**
 * A synthesized recording, its matched-filter envelope and what the
 * estimator recovered from it.
 */
export class Scene {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * |f| of the target on the estimator's frequency bins.
     */
    readonly analytic: Curve;
    readonly direct_index: number;
    readonly envelope: Float64Array;
    /**
     * |f| recovered from the recording.
     */
    readonly estimate: Curve;
    readonly peak_index: number;
    /**
     * Estimated range to the facing surface.
     */
    readonly range_m: number;
    readonly recording: Float64Array;
    readonly time_s: Float64Array;
}

/**
 * |f| of an aluminium shell in water between 20 and 170 kHz.
 */
export function formFunction(radius_mm: number, thickness_mm: number, filler_name: string, points: number): Curve;

/**
 * Synthesizes one tank recording with the default pulse, then segments
 * it and estimates range and form function.
 */
export function simulateScene(radius_mm: number, thickness_mm: number, filler_name: string, range_m: number, snr_db: number, clutter: boolean, seed: bigint): Scene;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_curve_free: (a: number, b: number) => void;
    readonly __wbg_scene_free: (a: number, b: number) => void;
    readonly curve_x: (a: number) => [number, number];
    readonly curve_y: (a: number) => [number, number];
    readonly formFunction: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly scene_analytic: (a: number) => number;
    readonly scene_direct_index: (a: number) => number;
    readonly scene_envelope: (a: number) => [number, number];
    readonly scene_estimate: (a: number) => number;
    readonly scene_peak_index: (a: number) => number;
    readonly scene_range_m: (a: number) => number;
    readonly scene_recording: (a: number) => [number, number];
    readonly scene_time_s: (a: number) => [number, number];
    readonly simulateScene: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: bigint) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
