use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::gru::GruWeights;
use super::ModelKind;
use crate::error::{EngnError, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Learned parameters of one layer, one variant per model kind. All matrices
/// map row vectors: shapes are `in_dim x out_dim`.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSet<S> {
    Gcn {
        w: Matrix<S>,
        bias: Option<Vec<S>>,
    },
    GsPool {
        /// F x P pooling projection.
        pool: Matrix<S>,
        pool_bias: Vec<S>,
        /// (P + F) x H, applied to `concat(aggregated, own)`.
        w: Matrix<S>,
        bias: Option<Vec<S>>,
    },
    Rgcn {
        /// One F x H matrix per relation.
        relations: Vec<Matrix<S>>,
        /// F x H self connection.
        self_w: Matrix<S>,
        bias: Option<Vec<S>>,
    },
    GatedGcn {
        /// F x F gate projection of the destination.
        gate_dst: Matrix<S>,
        /// F x F gate projection of the source.
        gate_src: Matrix<S>,
        w: Matrix<S>,
        bias: Option<Vec<S>>,
    },
    Grn {
        w: Matrix<S>,
        /// F x H projection of the carried state; required when F != H.
        state_proj: Option<Matrix<S>>,
        gru: GruWeights<S>,
    },
}

fn cast_vec<S: Scalar, T: Scalar>(v: &[S]) -> Vec<T> {
    v.iter().map(|x| T::from_f64(x.to_f64())).collect()
}

fn expect_shape<S: Scalar>(name: &str, m: &Matrix<S>, rows: usize, cols: usize) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(EngnError::DimensionMismatch(format!(
            "{name} is {}x{}, expected {rows}x{cols}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

fn expect_len<S>(name: &str, v: &[S], len: usize) -> Result<()> {
    if v.len() != len {
        return Err(EngnError::DimensionMismatch(format!(
            "{name} has length {}, expected {len}",
            v.len()
        )));
    }
    Ok(())
}

impl<S: Scalar> WeightSet<S> {
    pub fn kind(&self) -> ModelKind {
        match self {
            WeightSet::Gcn { .. } => ModelKind::Gcn,
            WeightSet::GsPool { .. } => ModelKind::GsPool,
            WeightSet::Rgcn { .. } => ModelKind::Rgcn,
            WeightSet::GatedGcn { .. } => ModelKind::GatedGcn,
            WeightSet::Grn { .. } => ModelKind::Grn,
        }
    }

    pub fn num_relations(&self) -> usize {
        match self {
            WeightSet::Rgcn { relations, .. } => relations.len(),
            _ => 1,
        }
    }

    /// Width of the GS-Pool pooled feature; `None` for other kinds.
    pub fn pool_dim(&self) -> Option<usize> {
        match self {
            WeightSet::GsPool { pool, .. } => Some(pool.cols()),
            _ => None,
        }
    }

    pub fn check_dims(&self, f: usize, h: usize) -> Result<()> {
        let bias_ok = |b: &Option<Vec<S>>| b.as_ref().map_or(Ok(()), |b| expect_len("bias", b, h));
        match self {
            WeightSet::Gcn { w, bias } => {
                expect_shape("W", w, f, h)?;
                bias_ok(bias)
            }
            WeightSet::GsPool {
                pool,
                pool_bias,
                w,
                bias,
            } => {
                if pool.rows() != f || pool.cols() == 0 {
                    return Err(EngnError::DimensionMismatch(format!(
                        "W_pool is {}x{}, expected {f}xP with P >= 1",
                        pool.rows(),
                        pool.cols()
                    )));
                }
                expect_len("b_pool", pool_bias, pool.cols())?;
                expect_shape("W", w, pool.cols() + f, h)?;
                bias_ok(bias)
            }
            WeightSet::Rgcn {
                relations,
                self_w,
                bias,
            } => {
                if relations.is_empty() {
                    return Err(EngnError::InvalidArgument(
                        "R-GCN needs at least one relation".into(),
                    ));
                }
                for (r, w) in relations.iter().enumerate() {
                    expect_shape(&format!("W_{r}"), w, f, h)?;
                }
                expect_shape("W_0", self_w, f, h)?;
                bias_ok(bias)
            }
            WeightSet::GatedGcn {
                gate_dst,
                gate_src,
                w,
                bias,
            } => {
                expect_shape("W_H", gate_dst, f, f)?;
                expect_shape("W_C", gate_src, f, f)?;
                expect_shape("W", w, f, h)?;
                bias_ok(bias)
            }
            WeightSet::Grn { w, state_proj, gru } => {
                expect_shape("W", w, f, h)?;
                match state_proj {
                    Some(p) => expect_shape("state projection", p, f, h)?,
                    None if f != h => {
                        return Err(EngnError::DimensionMismatch(format!(
                            "GRN with F = {f} != H = {h} needs a state projection"
                        )))
                    }
                    None => {}
                }
                gru.check_dims(h)
            }
        }
    }

    pub fn cast<T: Scalar>(&self) -> WeightSet<T> {
        let cb = |b: &Option<Vec<S>>| b.as_ref().map(|b| cast_vec(b));
        match self {
            WeightSet::Gcn { w, bias } => WeightSet::Gcn {
                w: w.convert(),
                bias: cb(bias),
            },
            WeightSet::GsPool {
                pool,
                pool_bias,
                w,
                bias,
            } => WeightSet::GsPool {
                pool: pool.convert(),
                pool_bias: cast_vec(pool_bias),
                w: w.convert(),
                bias: cb(bias),
            },
            WeightSet::Rgcn {
                relations,
                self_w,
                bias,
            } => WeightSet::Rgcn {
                relations: relations.iter().map(Matrix::convert).collect(),
                self_w: self_w.convert(),
                bias: cb(bias),
            },
            WeightSet::GatedGcn {
                gate_dst,
                gate_src,
                w,
                bias,
            } => WeightSet::GatedGcn {
                gate_dst: gate_dst.convert(),
                gate_src: gate_src.convert(),
                w: w.convert(),
                bias: cb(bias),
            },
            WeightSet::Grn { w, state_proj, gru } => WeightSet::Grn {
                w: w.convert(),
                state_proj: state_proj.as_ref().map(Matrix::convert),
                gru: gru.cast(),
            },
        }
    }
}

impl WeightSet<f64> {
    /// Seeded uniform init scaled by `1/sqrt(fan_in)`. GS-Pool uses P = H.
    pub fn random(kind: ModelKind, f: usize, h: usize, num_relations: usize, seed: u64) -> Result<Self> {
        if f == 0 || h == 0 {
            return Err(EngnError::InvalidArgument("layer dims must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = |fan_in: usize| 1.0 / (fan_in as f64).sqrt();
        let mut mat = |rows: usize, cols: usize| Matrix::random(rows, cols, scale(rows), &mut rng);
        let ws = match kind {
            ModelKind::Gcn => WeightSet::Gcn {
                w: mat(f, h),
                bias: Some(vec![0.0; h]),
            },
            ModelKind::GsPool => {
                let pool = mat(f, h);
                let w = mat(h + f, h);
                WeightSet::GsPool {
                    pool,
                    pool_bias: vec![0.01; h],
                    w,
                    bias: Some(vec![0.0; h]),
                }
            }
            ModelKind::Rgcn => {
                if num_relations == 0 {
                    return Err(EngnError::InvalidArgument(
                        "R-GCN needs at least one relation".into(),
                    ));
                }
                let relations = (0..num_relations).map(|_| mat(f, h)).collect();
                let self_w = mat(f, h);
                WeightSet::Rgcn {
                    relations,
                    self_w,
                    bias: Some(vec![0.0; h]),
                }
            }
            ModelKind::GatedGcn => {
                let gate_dst = mat(f, f);
                let gate_src = mat(f, f);
                let w = mat(f, h);
                WeightSet::GatedGcn {
                    gate_dst,
                    gate_src,
                    w,
                    bias: Some(vec![0.0; h]),
                }
            }
            ModelKind::Grn => {
                let w = mat(f, h);
                let state_proj = (f != h).then(|| mat(f, h));
                let gru = GruWeights::random(h, &mut rng);
                WeightSet::Grn { w, state_proj, gru }
            }
        };
        Ok(ws)
    }

    /// Replaces the primary F x H matrix (GCN/Gated-GCN/GRN `W`, R-GCN `W_0`,
    /// GS-Pool `W_pool`).
    pub fn replace_primary(&mut self, m: Matrix<f64>) {
        match self {
            WeightSet::Gcn { w, .. }
            | WeightSet::GatedGcn { w, .. }
            | WeightSet::Grn { w, .. } => *w = m,
            WeightSet::Rgcn { self_w, .. } => *self_w = m,
            WeightSet::GsPool { pool, .. } => *pool = m,
        }
    }
}

/// Magic bytes of the binary weight format: `ENGW`, then little-endian u32
/// rows, u32 cols and `rows * cols` f32 values in row-major order.
pub const WEIGHT_MAGIC: [u8; 4] = *b"ENGW";

/// Loads a weight matrix from either the binary format or whitespace
/// separated row-major text (one matrix row per line, `#` comments allowed).
pub fn load_weight_matrix(path: impl AsRef<Path>) -> Result<Matrix<f64>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| EngnError::io(path, e))?;
    if bytes.starts_with(&WEIGHT_MAGIC) {
        parse_binary(&bytes)
    } else {
        let text = String::from_utf8(bytes).map_err(|_| EngnError::Parse {
            line: 0,
            msg: format!("{} is neither binary weights nor UTF-8 text", path.display()),
        })?;
        parse_text(&text)
    }
}

fn parse_binary(bytes: &[u8]) -> Result<Matrix<f64>> {
    let header = |at: usize| -> Result<usize> {
        bytes
            .get(at..at + 4)
            .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
            .ok_or_else(|| EngnError::Parse {
                line: 0,
                msg: "truncated weight header".into(),
            })
    };
    let rows = header(4)?;
    let cols = header(8)?;
    let body = &bytes[12..];
    if body.len() != rows * cols * 4 {
        return Err(EngnError::Parse {
            line: 0,
            msg: format!(
                "weight payload is {} bytes, expected {} for {rows}x{cols}",
                body.len(),
                rows * cols * 4
            ),
        });
    }
    let data = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Matrix::from_vec(rows, cols, data)
}

fn parse_text(text: &str) -> Result<Matrix<f64>> {
    let mut data = Vec::new();
    let mut cols: Option<usize> = None;
    let mut rows = 0;
    for (idx, line) in text.lines().enumerate() {
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let row: Vec<f64> = body
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>().map_err(|_| EngnError::Parse {
                    line: idx + 1,
                    msg: format!("invalid weight value {t:?}"),
                })
            })
            .collect::<Result<_>>()?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(EngnError::Parse {
                    line: idx + 1,
                    msg: format!("row has {} values, expected {c}", row.len()),
                })
            }
            _ => {}
        }
        data.extend(row);
        rows += 1;
    }
    let cols = cols.ok_or_else(|| EngnError::Empty("weight file has no rows".into()))?;
    Matrix::from_vec(rows, cols, data)
}

pub fn save_weight_matrix_binary(m: &Matrix<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::with_capacity(12 + m.data().len() * 4);
    out.extend_from_slice(&WEIGHT_MAGIC);
    out.extend_from_slice(&(m.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u32).to_le_bytes());
    for &x in m.data() {
        out.extend_from_slice(&(x as f32).to_le_bytes());
    }
    fs::write(path, out).map_err(|e| EngnError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixed::Fixed32;

    #[test]
    fn text_and_binary_loaders() {
        let dir = tempfile::tempdir().unwrap();
        let txt = dir.path().join("w.txt");
        fs::write(&txt, "# 2x3\n1 2 3\n0.5 -0.25 4\n").unwrap();
        let m = load_weight_matrix(&txt).unwrap();
        assert_eq!(m.shape(), (2, 3));
        assert_eq!(m.get(1, 1), -0.25);

        let bin = dir.path().join("w.bin");
        save_weight_matrix_binary(&m, &bin).unwrap();
        let back = load_weight_matrix(&bin).unwrap();
        assert_eq!(back, m);
        let q: Matrix<Fixed32> = back.to_fixed();
        assert_eq!(q.get(1, 2), Fixed32::from_f64(4.0));
    }

    #[test]
    fn loader_errors() {
        let dir = tempfile::tempdir().unwrap();
        let ragged = dir.path().join("r.txt");
        fs::write(&ragged, "1 2\n3\n").unwrap();
        assert!(matches!(load_weight_matrix(&ragged), Err(EngnError::Parse { line: 2, .. })));
        let short = dir.path().join("s.bin");
        let mut bytes = WEIGHT_MAGIC.to_vec();
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&2u32.to_le_bytes());
        bytes.extend_from_slice(&[0u8; 8]);
        fs::write(&short, bytes).unwrap();
        assert!(load_weight_matrix(&short).is_err());
        let missing = dir.path().join("nope.bin");
        match load_weight_matrix(&missing) {
            Err(EngnError::Io { path, .. }) => assert_eq!(path, missing),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn random_weights_have_consistent_dims() {
        for kind in ModelKind::ALL {
            for (f, h) in [(4, 4), (5, 3), (2, 7)] {
                let ws = WeightSet::random(kind, f, h, 3, 1).unwrap();
                ws.check_dims(f, h).unwrap();
                assert!(ws.check_dims(f + 1, h).is_err());
            }
        }
    }
}
