//! On-disk formats: raw sample files, the dataset manifest and descriptor
//! matrices.
//!
//! A raw sample file is a `u64` sample count and an `f64` sample rate, both
//! little-endian, followed by the samples as little-endian `f32`.

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::DescriptorKind;
use crate::signal::Waveform;
use crate::synth::{DatasetSpec, FillerClass, LabeledRecording};

pub const MANIFEST_VERSION: u32 = 1;
const RAW_HEADER_LEN: usize = 16;

pub fn write_raw<W: Write>(w: &Waveform, mut out: W) -> Result<()> {
    out.write_all(&(w.len() as u64).to_le_bytes())?;
    out.write_all(&w.sample_rate_hz.to_le_bytes())?;
    for &s in &w.samples {
        out.write_all(&(s as f32).to_le_bytes())?;
    }
    Ok(())
}

pub fn read_raw<R: Read>(mut input: R) -> Result<Waveform> {
    let mut header = [0u8; RAW_HEADER_LEN];
    input.read_exact(&mut header)?;
    let count = u64::from_le_bytes(header[..8].try_into().expect("8 bytes"));
    let rate = f64::from_le_bytes(header[8..].try_into().expect("8 bytes"));
    let mut body = Vec::new();
    input.read_to_end(&mut body)?;
    if body.len() as u64 != count * 4 {
        return Err(Error::Format(format!(
            "header announces {count} samples, body holds {} bytes",
            body.len()
        )));
    }
    let samples = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    Waveform::new(samples, rate).map_err(|e| Error::Format(e.to_string()))
}

pub fn save_raw(w: &Waveform, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    write_raw(w, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn load_raw(path: &Path) -> Result<Waveform> {
    read_raw(BufReader::new(fs::File::open(path)?))
}

/// Ground truth of one recording as listed in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: usize,
    pub label: FillerClass,
    /// Relative to the manifest's directory.
    pub file: String,
    pub range_m: f64,
    pub outer_radius_m: f64,
    pub thickness_m: f64,
    pub snr_db: f64,
    pub clutter_enabled: bool,
    #[serde(with = "hex_u64")]
    pub seed: u64,
}

impl ManifestEntry {
    pub fn of(rec: &LabeledRecording) -> Self {
        Self {
            id: rec.id,
            label: rec.label,
            file: raw_file_name(rec.id),
            range_m: rec.truth.range_m,
            outer_radius_m: rec.truth.target.outer_radius_m,
            thickness_m: rec.truth.target.thickness_m,
            snr_db: rec.truth.snr_db,
            clutter_enabled: rec.truth.clutter_enabled,
            seed: rec.truth.seed,
        }
    }
}

pub fn raw_file_name(id: usize) -> String {
    format!("rec_{id:05}.f32")
}

/// Dataset description written next to the raw files, as TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    #[serde(with = "hex_u64")]
    pub master_seed: u64,
    pub n_per_class: usize,
    pub spec: DatasetSpec,
    #[serde(default)]
    pub examples: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(master_seed: u64, n_per_class: usize, spec: DatasetSpec, recs: &[LabeledRecording]) -> Self {
        Self {
            version: MANIFEST_VERSION,
            master_seed,
            n_per_class,
            spec,
            examples: recs.iter().map(ManifestEntry::of).collect(),
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let m: Self = toml::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if m.version != MANIFEST_VERSION {
            return Err(Error::Format(format!("unsupported manifest version {}", m.version)));
        }
        Ok(m)
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let mut counts = [0; 2];
        for e in &self.examples {
            counts[e.label.index()] += 1;
        }
        counts
    }
}

pub const MANIFEST_FILE: &str = "manifest.toml";

/// Writes every recording and the manifest into `dir`.
pub fn save_dataset(dir: &Path, manifest: &Manifest, recs: &[LabeledRecording]) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (entry, rec) in manifest.examples.iter().zip(recs) {
        save_raw(&rec.recording, &dir.join(&entry.file))?;
    }
    fs::write(dir.join(MANIFEST_FILE), manifest.to_toml()?)?;
    Ok(())
}

pub fn load_manifest(dir: &Path) -> Result<Manifest> {
    Manifest::from_toml(&fs::read_to_string(dir.join(MANIFEST_FILE))?)
}

/// Descriptor matrix as CSV: header `id,label,<kind>_0,...`, one row per
/// example.
pub fn write_descriptor_csv<W: Write>(
    kind: DescriptorKind,
    ids: &[usize],
    labels: &[FillerClass],
    rows: &[Vec<f64>],
    out: W,
) -> Result<()> {
    let len = rows.first().map_or(0, Vec::len);
    if ids.len() != rows.len() || labels.len() != rows.len() || rows.iter().any(|r| r.len() != len) {
        return Err(Error::Format("descriptor matrix is ragged".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["id".to_string(), "label".to_string()];
    header.extend((0..len).map(|i| format!("{}_{i}", kind.name())));
    w.write_record(&header).map_err(csv_err)?;
    for ((id, label), row) in ids.iter().zip(labels).zip(rows) {
        let mut rec = vec![id.to_string(), label.name().to_string()];
        rec.extend(row.iter().map(|v| format!("{v:e}")));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Two-column `x,y` CSV.
pub fn write_xy_csv<W: Write>(x_name: &str, y_name: &str, xs: &[f64], ys: &[f64], out: W) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::Format("x and y lengths differ".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record([x_name, y_name]).map_err(csv_err)?;
    for (x, y) in xs.iter().zip(ys) {
        w.write_record([format!("{x:e}"), format!("{y:e}")]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// TOML integers are signed 64-bit, so seeds are stored as hex strings.
mod hex_u64 {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{v:#018x}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        let text = String::deserialize(d)?;
        let digits = text.strip_prefix("0x").unwrap_or(&text);
        u64::from_str_radix(digits, 16).map_err(D::Error::custom)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::generate_dataset;

    #[test]
    fn raw_roundtrip_matches_f32() {
        let w = Waveform::new(vec![0.1, -2.5, 1e-7, 3.0], 250e3).unwrap();
        let mut buf = Vec::new();
        write_raw(&w, &mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 4 * 4);
        let back = read_raw(buf.as_slice()).unwrap();
        assert_eq!(back.sample_rate_hz, 250e3);
        for (a, b) in w.samples.iter().zip(&back.samples) {
            assert_eq!(*b, *a as f32 as f64);
        }
        assert!(read_raw(&buf[..buf.len() - 1]).is_err());
    }

    #[test]
    fn manifest_roundtrip() {
        let spec = DatasetSpec::default();
        let recs = generate_dataset(1, &spec, 11).unwrap();
        let m = Manifest::new(11, 1, spec, &recs);
        let back = Manifest::from_toml(&m.to_toml().unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.class_counts(), [1, 1]);
    }

    #[test]
    fn descriptor_csv_shape() {
        let mut buf = Vec::new();
        write_descriptor_csv(
            DescriptorKind::Time,
            &[0, 1],
            &[FillerClass::Air, FillerClass::Water],
            &[vec![1.0, 2.0], vec![3.0, 4.0]],
            &mut buf,
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "id,label,time_0,time_1");
        assert_eq!(lines[2], "1,water,3e0,4e0");
    }
}
