use rand::Rng;

use crate::error::{EngnError, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Gate parameters of a standard GRU cell with hidden and input width H.
///
/// ```text
/// z  = sigmoid(x W_z + h U_z + b_z)
/// r  = sigmoid(x W_r + h U_r + b_r)
/// h~ = tanh(x W_h + (r * h) U_h + b_h)
/// h' = (1 - z) * h + z * h~
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct GruWeights<S> {
    pub w_z: Matrix<S>,
    pub u_z: Matrix<S>,
    pub b_z: Vec<S>,
    pub w_r: Matrix<S>,
    pub u_r: Matrix<S>,
    pub b_r: Vec<S>,
    pub w_h: Matrix<S>,
    pub u_h: Matrix<S>,
    pub b_h: Vec<S>,
}

impl<S: Scalar> GruWeights<S> {
    pub fn zeros(h: usize) -> Self {
        GruWeights {
            w_z: Matrix::zeros(h, h),
            u_z: Matrix::zeros(h, h),
            b_z: vec![S::ZERO; h],
            w_r: Matrix::zeros(h, h),
            u_r: Matrix::zeros(h, h),
            b_r: vec![S::ZERO; h],
            w_h: Matrix::zeros(h, h),
            u_h: Matrix::zeros(h, h),
            b_h: vec![S::ZERO; h],
        }
    }

    pub fn dim(&self) -> usize {
        self.b_z.len()
    }

    pub fn check_dims(&self, h: usize) -> Result<()> {
        let mats = [&self.w_z, &self.u_z, &self.w_r, &self.u_r, &self.w_h, &self.u_h];
        let vecs = [&self.b_z, &self.b_r, &self.b_h];
        if mats.iter().any(|m| m.shape() != (h, h)) || vecs.iter().any(|v| v.len() != h) {
            return Err(EngnError::DimensionMismatch(format!(
                "GRU gates must be {h}x{h} with length-{h} biases"
            )));
        }
        Ok(())
    }

    pub fn cast<T: Scalar>(&self) -> GruWeights<T> {
        let v = |b: &[S]| b.iter().map(|x| T::from_f64(x.to_f64())).collect();
        GruWeights {
            w_z: self.w_z.convert(),
            u_z: self.u_z.convert(),
            b_z: v(&self.b_z),
            w_r: self.w_r.convert(),
            u_r: self.u_r.convert(),
            b_r: v(&self.b_r),
            w_h: self.w_h.convert(),
            u_h: self.u_h.convert(),
            b_h: v(&self.b_h),
        }
    }
}

impl GruWeights<f64> {
    pub fn random<R: Rng>(h: usize, rng: &mut R) -> Self {
        let s = 1.0 / (h as f64).sqrt();
        let mut m = || Matrix::random(h, h, s, rng);
        let (w_z, u_z, w_r, u_r, w_h, u_h) = (m(), m(), m(), m(), m(), m());
        let mut b = || (0..h).map(|_| rng.gen_range(-0.1..=0.1)).collect::<Vec<f64>>();
        let (b_z, b_r, b_h) = (b(), b(), b());
        GruWeights {
            w_z,
            u_z,
            b_z,
            w_r,
            u_r,
            b_r,
            w_h,
            u_h,
            b_h,
        }
    }
}

fn gate<S: Scalar>(x: &[S], h: &[S], w: &Matrix<S>, u: &Matrix<S>, b: &[S]) -> Result<Vec<S>> {
    let xw = w.vecmul(x)?;
    let hu = u.vecmul(h)?;
    Ok(xw.iter().zip(&hu).zip(b).map(|((&a, &c), &d)| a + c + d).collect())
}

pub fn gru_cell<S: Scalar>(h: &[S], x: &[S], weights: &GruWeights<S>) -> Result<Vec<S>> {
    let dim = weights.dim();
    if h.len() != dim || x.len() != dim {
        return Err(EngnError::DimensionMismatch(format!(
            "GRU of width {dim} given state {} and input {}",
            h.len(),
            x.len()
        )));
    }
    let z: Vec<S> = gate(x, h, &weights.w_z, &weights.u_z, &weights.b_z)?
        .into_iter()
        .map(S::sigmoid)
        .collect();
    let r: Vec<S> = gate(x, h, &weights.w_r, &weights.u_r, &weights.b_r)?
        .into_iter()
        .map(S::sigmoid)
        .collect();
    let rh: Vec<S> = r.iter().zip(h).map(|(&a, &b)| a * b).collect();
    let cand: Vec<S> = gate(x, &rh, &weights.w_h, &weights.u_h, &weights.b_h)?
        .into_iter()
        .map(S::tanh)
        .collect();
    Ok((0..dim)
        .map(|i| (S::ONE - z[i]) * h[i] + z[i] * cand[i])
        .collect())
}
