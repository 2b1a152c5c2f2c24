//! Versioned little-endian binary files for trained classifiers.
//!
//! Layout: magic `FFSM`, `u32` version, `u8` kind (1 MLP, 2 SVM), the model
//! body, then a `u8` flag and, if set, the standardizer mean and std.

use std::io::{Read, Write};

use super::{MlpModel, SvmModel};
use crate::error::{Error, Result};
use crate::features::Standardizer;

const MAGIC: &[u8; 4] = b"FFSM";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    Mlp(MlpModel),
    Svm(SvmModel),
}

impl Classifier {
    pub fn input_len(&self) -> usize {
        match self {
            Classifier::Mlp(m) => m.input_len(),
            Classifier::Svm(m) => m.dim(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        match self {
            Classifier::Mlp(m) => m.predict(x),
            Classifier::Svm(m) => m.predict(x),
        }
    }
}

/// A classifier with the standardization it was trained behind.
#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub classifier: Classifier,
    pub standardizer: Option<Standardizer>,
}

impl SavedModel {
    /// Standardizes `raw` (when a standardizer is stored) and predicts.
    pub fn predict_raw(&self, raw: &[f64]) -> Result<usize> {
        match &self.standardizer {
            Some(s) => self.classifier.predict(&s.transform(raw)),
            None => self.classifier.predict(raw),
        }
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        put_u32(&mut w, FORMAT_VERSION)?;
        match &self.classifier {
            Classifier::Mlp(m) => {
                m.validate()?;
                w.write_all(&[1])?;
                put_u32(&mut w, m.layer_sizes.len() as u32)?;
                for &s in &m.layer_sizes {
                    put_u32(&mut w, s as u32)?;
                }
                put_f64(&mut w, m.dropout_p)?;
                for (wl, bl) in m.weights.iter().zip(&m.biases) {
                    put_all(&mut w, wl)?;
                    put_all(&mut w, bl)?;
                }
            }
            Classifier::Svm(m) => {
                m.validate()?;
                w.write_all(&[2])?;
                put_u32(&mut w, m.support_vectors.len() as u32)?;
                put_u32(&mut w, m.dim() as u32)?;
                put_f64(&mut w, m.gamma)?;
                put_f64(&mut w, m.c)?;
                put_f64(&mut w, m.bias)?;
                put_all(&mut w, &m.dual_coeffs)?;
                for sv in &m.support_vectors {
                    put_all(&mut w, sv)?;
                }
            }
        }
        match &self.standardizer {
            Some(s) => {
                if s.mean.len() != self.classifier.input_len() || s.std.len() != s.mean.len() {
                    return Err(Error::Format("standardizer length differs from model input".into()));
                }
                w.write_all(&[1])?;
                put_all(&mut w, &s.mean)?;
                put_all(&mut w, &s.std)?;
            }
            None => w.write_all(&[0])?,
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a model file".into()));
        }
        let version = get_u32(&mut r)?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported model version {version}")));
        }
        let classifier = match get_u8(&mut r)? {
            1 => {
                let n = get_len(&mut r, 64)?;
                let mut sizes = Vec::with_capacity(n);
                for _ in 0..n {
                    sizes.push(get_len(&mut r, 1 << 20)?);
                }
                let dropout_p = get_f64(&mut r)?;
                let mut weights = Vec::new();
                let mut biases = Vec::new();
                for pair in sizes.windows(2) {
                    weights.push(get_vec(&mut r, pair[0] * pair[1])?);
                    biases.push(get_vec(&mut r, pair[1])?);
                }
                let m = MlpModel {
                    layer_sizes: sizes,
                    weights,
                    biases,
                    dropout_p,
                };
                m.validate().map_err(|e| Error::Format(e.to_string()))?;
                Classifier::Mlp(m)
            }
            2 => {
                let n = get_len(&mut r, 1 << 24)?;
                let d = get_len(&mut r, 1 << 20)?;
                let gamma = get_f64(&mut r)?;
                let c = get_f64(&mut r)?;
                let bias = get_f64(&mut r)?;
                let dual_coeffs = get_vec(&mut r, n)?;
                let support_vectors = (0..n).map(|_| get_vec(&mut r, d)).collect::<Result<_>>()?;
                let m = SvmModel {
                    support_vectors,
                    dual_coeffs,
                    bias,
                    gamma,
                    c,
                };
                m.validate().map_err(|e| Error::Format(e.to_string()))?;
                Classifier::Svm(m)
            }
            k => return Err(Error::Format(format!("unknown model kind {k}"))),
        };
        let standardizer = match get_u8(&mut r)? {
            0 => None,
            1 => {
                let d = classifier.input_len();
                Some(Standardizer {
                    mean: get_vec(&mut r, d)?,
                    std: get_vec(&mut r, d)?,
                })
            }
            f => return Err(Error::Format(format!("bad standardizer flag {f}"))),
        };
        Ok(Self {
            classifier,
            standardizer,
        })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        Ok(buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::read_from(bytes)
    }
}

fn put_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn put_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn put_all<W: Write>(w: &mut W, vs: &[f64]) -> Result<()> {
    vs.iter().try_for_each(|&v| put_f64(w, v))
}

fn get_u8<R: Read>(r: &mut R) -> Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}

fn get_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn get_len<R: Read>(r: &mut R, max: usize) -> Result<usize> {
    let v = get_u32(r)? as usize;
    if v > max {
        return Err(Error::Format(format!("length {v} exceeds {max}")));
    }
    Ok(v)
}

fn get_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn get_vec<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>> {
    (0..n).map(|_| get_f64(r)).collect()
}
