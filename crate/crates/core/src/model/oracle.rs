//! Dense-adjacency reference implementation in f64.
//!
//! Everything here is written against an explicit N x N adjacency matrix and
//! shares no code path with the edge-centric stages beyond `Matrix` algebra
//! and the scalar activation functions.

use super::{Aggregator, LayerSpec, WeightSet};
use crate::error::{EngnError, Result};
use crate::graph::Graph;
use crate::matrix::Matrix;

pub const ORACLE_MAX_VERTICES: usize = 4096;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

/// `adj[v][u]` counts edges `u -> v`, optionally restricted to one relation.
fn adjacency(g: &Graph, relation: Option<usize>) -> Matrix<f64> {
    let n = g.num_vertices();
    let mut a = Matrix::zeros(n, n);
    for e in g.edges() {
        if relation.is_some_and(|r| e.relation_index() != r) {
            continue;
        }
        let (v, u) = (e.dst as usize, e.src as usize);
        a.set(v, u, a.get(v, u) + 1.0);
    }
    a
}

fn add_bias_relu(mut m: Matrix<f64>, bias: &Option<Vec<f64>>) -> Matrix<f64> {
    if let Some(b) = bias {
        for r in 0..m.rows() {
            for (x, &y) in m.row_mut(r).iter_mut().zip(b) {
                *x += y;
            }
        }
    }
    m.map(relu)
}

fn elementwise_add(a: &Matrix<f64>, b: &Matrix<f64>) -> Matrix<f64> {
    Matrix::from_fn(a.rows(), a.cols(), |r, c| a.get(r, c) + b.get(r, c))
}

pub fn dense_oracle(layer: &LayerSpec, props: &Matrix<f64>, g: &Graph) -> Result<Matrix<f64>> {
    let n = g.num_vertices();
    if n > ORACLE_MAX_VERTICES {
        return Err(EngnError::Capacity(format!(
            "dense oracle is limited to {ORACLE_MAX_VERTICES} vertices, graph has {n}"
        )));
    }
    if props.shape() != (n, layer.f()) {
        return Err(EngnError::DimensionMismatch(format!(
            "oracle properties are {}x{}, expected {n}x{}",
            props.rows(),
            props.cols(),
            layer.f()
        )));
    }
    let x = props;
    match layer.weights() {
        WeightSet::Gcn { w, bias } => {
            let mut a = adjacency(g, None);
            for i in 0..n {
                a.set(i, i, a.get(i, i) + 1.0);
            }
            // row sums (in-degree side) and column sums (out-degree side)
            let din: Vec<f64> = (0..n).map(|v| a.row(v).iter().sum()).collect();
            let dout: Vec<f64> = (0..n).map(|u| (0..n).map(|v| a.get(v, u)).sum()).collect();
            let norm = Matrix::from_fn(n, n, |v, u| a.get(v, u) / (din[v] * dout[u]).sqrt());
            let out = norm.matmul(&x.matmul(w)?)?;
            Ok(add_bias_relu(out, bias))
        }
        WeightSet::GsPool {
            pool,
            pool_bias,
            w,
            bias,
        } => {
            let a = adjacency(g, None);
            let pooled = add_bias_relu(x.matmul(pool)?, &Some(pool_bias.clone()));
            let p = pooled.cols();
            let agg = match layer.aggregator() {
                Aggregator::Max => Matrix::from_fn(n, p, |v, c| {
                    (0..n)
                        .filter(|&u| a.get(v, u) > 0.0)
                        .map(|u| pooled.get(u, c))
                        .fold(pooled.get(v, c), f64::max)
                }),
                _ => {
                    let sum = a.matmul(&pooled)?;
                    Matrix::from_fn(n, p, |v, c| {
                        let deg: f64 = a.row(v).iter().sum();
                        if deg == 0.0 {
                            0.0
                        } else if layer.aggregator() == Aggregator::Mean {
                            sum.get(v, c) / deg
                        } else {
                            sum.get(v, c)
                        }
                    })
                }
            };
            let cat = Matrix::hconcat(&[agg, x.clone()])?;
            Ok(add_bias_relu(cat.matmul(w)?, bias))
        }
        WeightSet::Rgcn {
            relations,
            self_w,
            bias,
        } => {
            let mut out = x.matmul(self_w)?;
            for (r, wr) in relations.iter().enumerate() {
                let a = adjacency(g, Some(r));
                let inv = Matrix::from_fn(n, n, |v, u| {
                    let c: f64 = a.row(v).iter().sum();
                    if c == 0.0 {
                        0.0
                    } else {
                        a.get(v, u) / c
                    }
                });
                out = elementwise_add(&out, &inv.matmul(x)?.matmul(wr)?);
            }
            Ok(add_bias_relu(out, bias))
        }
        WeightSet::GatedGcn {
            gate_dst,
            gate_src,
            w,
            bias,
        } => {
            let a = adjacency(g, None);
            let f = layer.f();
            let mut agg = Matrix::zeros(n, f);
            for v in 0..n {
                for u in 0..n {
                    let mult = a.get(v, u);
                    if mult == 0.0 {
                        continue;
                    }
                    for c in 0..f {
                        let mut pre = 0.0;
                        for k in 0..f {
                            pre += x.get(v, k) * gate_dst.get(k, c) + x.get(u, k) * gate_src.get(k, c);
                        }
                        agg.set(v, c, agg.get(v, c) + mult * sigmoid(pre) * x.get(u, c));
                    }
                }
            }
            Ok(add_bias_relu(agg.matmul(w)?, bias))
        }
        WeightSet::Grn { w, state_proj, gru } => {
            let a = adjacency(g, None);
            let input = a.matmul(x)?.matmul(w)?;
            let state = match state_proj {
                Some(p) => x.matmul(p)?,
                None => x.clone(),
            };
            let gate = |wx: &Matrix<f64>, uh: &Matrix<f64>, hin: &Matrix<f64>, b: &[f64]| -> Result<Matrix<f64>> {
                let s = elementwise_add(&input.matmul(wx)?, &hin.matmul(uh)?);
                Ok(Matrix::from_fn(s.rows(), s.cols(), |r, c| s.get(r, c) + b[c]))
            };
            let z = gate(&gru.w_z, &gru.u_z, &state, &gru.b_z)?.map(sigmoid);
            let r = gate(&gru.w_r, &gru.u_r, &state, &gru.b_r)?.map(sigmoid);
            let rh = Matrix::from_fn(n, state.cols(), |i, c| r.get(i, c) * state.get(i, c));
            let cand = gate(&gru.w_h, &gru.u_h, &rh, &gru.b_h)?.map(f64::tanh);
            Ok(Matrix::from_fn(n, state.cols(), |i, c| {
                let zz = z.get(i, c);
                (1.0 - zz) * state.get(i, c) + zz * cand.get(i, c)
            }))
        }
    }
}
