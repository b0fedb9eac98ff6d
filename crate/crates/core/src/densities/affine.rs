use super::{Density, TailEnvelope};
use crate::error::{Result, ShapeError};
use crate::points::{norm, PointSet};
use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use std::sync::Arc;

/// Law of A·Y + b for Y drawn from an inner density.
#[derive(Debug, Clone)]
pub struct AffineDensity {
    inner: Arc<dyn Density>,
    a: DMatrix<f64>,
    a_inv: DMatrix<f64>,
    b: DVector<f64>,
    ln_abs_det: f64,
    op_norm: f64,
}

impl AffineDensity {
    pub fn new(inner: Arc<dyn Density>, a: DMatrix<f64>, b: Vec<f64>) -> Result<Self> {
        let d = inner.dim();
        if a.nrows() != d || a.ncols() != d || b.len() != d {
            return Err(ShapeError::InvalidDimension {
                dim: d,
                reason: "affine map must be d×d with a length-d shift".into(),
            });
        }
        let det = a.determinant();
        let a_inv = a
            .clone()
            .try_inverse()
            .filter(|_| det.abs() > 0.0)
            .ok_or_else(|| ShapeError::Domain("affine map is singular".into()))?;
        let op_norm = a.singular_values().max();
        Ok(AffineDensity {
            inner,
            a,
            a_inv,
            b: DVector::from_vec(b),
            ln_abs_det: det.abs().ln(),
            op_norm,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn shift(&self) -> &[f64] {
        self.b.as_slice()
    }

    fn pull_back(&self, x: &[f64]) -> Vec<f64> {
        let v = &self.a_inv * (DVector::from_column_slice(x) - &self.b);
        v.as_slice().to_vec()
    }
}

impl Density for AffineDensity {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn log_eval(&self, x: &[f64]) -> f64 {
        self.inner.log_eval(&self.pull_back(x)) - self.ln_abs_det
    }

    fn support_radius(&self) -> f64 {
        self.op_norm * self.inner.support_radius() + self.b.norm()
    }

    fn is_log_concave(&self) -> bool {
        self.inner.is_log_concave()
    }

    fn sample_with(&self, n: usize, rng: &mut StdRng) -> Result<PointSet> {
        let ys = self.inner.sample_with(n, rng)?;
        let mut out = PointSet::with_capacity(self.dim(), n);
        for y in ys.iter() {
            let x = &self.a * DVector::from_column_slice(y) + &self.b;
            out.push(x.as_slice());
        }
        Ok(out)
    }

    fn cdf(&self, x: f64) -> Option<f64> {
        if self.dim() != 1 {
            return None;
        }
        let a = self.a[(0, 0)];
        let y = (x - self.b[0]) / a;
        let f = self.inner.cdf(y)?;
        Some(if a > 0.0 { f } else { 1.0 - f })
    }

    fn breakpoints(&self) -> Vec<f64> {
        if self.dim() != 1 {
            return Vec::new();
        }
        self.inner.breakpoints().iter().map(|y| self.a[(0, 0)] * y + self.b[0]).collect()
    }

    /// ‖A⁻¹(x − b)‖ ≥ (‖x‖ − ‖b‖)/‖A‖ turns the inner envelope into one for x.
    fn tail_envelope(&self) -> Option<TailEnvelope> {
        let e = self.inner.tail_envelope()?;
        let c_a = e.c_a / self.op_norm;
        Some(TailEnvelope::new(
            self.dim(),
            c_a,
            e.c_b + c_a * norm(self.b.as_slice()) - self.ln_abs_det,
        ))
    }
}
