/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_curve_free: (a: number, b: number) => void;
export const __wbg_scene_free: (a: number, b: number) => void;
export const curve_x: (a: number) => [number, number];
export const curve_y: (a: number) => [number, number];
export const formFunction: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const scene_analytic: (a: number) => number;
export const scene_direct_index: (a: number) => number;
export const scene_envelope: (a: number) => [number, number];
export const scene_estimate: (a: number) => number;
export const scene_peak_index: (a: number) => number;
export const scene_range_m: (a: number) => number;
export const scene_recording: (a: number) => [number, number];
export const scene_time_s: (a: number) => [number, number];
export const simulateScene: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: bigint) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_start: () => void;
