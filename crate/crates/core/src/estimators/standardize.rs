use crate::error::{Result, ShapeError};
use crate::points::PointSet;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// x ↦ W x − μ, with W = Σ̂^{−1/2}.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub matrix: DMatrix<f64>,
    pub shift: Vec<f64>,
    inverse: DMatrix<f64>,
}

impl AffineMap {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let y = &self.matrix * DVector::from_column_slice(x);
        y.iter().zip(&self.shift).map(|(a, b)| a - b).collect()
    }

    pub fn invert(&self, y: &[f64]) -> Vec<f64> {
        let v = DVector::from_iterator(y.len(), y.iter().zip(&self.shift).map(|(a, b)| a + b));
        (&self.inverse * v).iter().copied().collect()
    }

    pub fn apply_all(&self, pts: &PointSet) -> PointSet {
        let mut out = PointSet::with_capacity(pts.dim(), pts.len());
        for p in pts.iter() {
            out.push(&self.apply(p));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Standardized {
    pub map: AffineMap,
    /// The last third, transformed.
    pub points: PointSet,
    pub covariance_range: std::ops::Range<usize>,
    pub mean_range: std::ops::Range<usize>,
    pub output_range: std::ops::Range<usize>,
}

/// Covariance from the first third, mean (after whitening) from the second,
/// and the whitened, centred last third. Trailing points beyond a multiple
/// of three are dropped.
pub fn standardize(samples: &PointSet) -> Result<Standardized> {
    let d = samples.dim();
    let m = samples.len() / 3;
    if m < 2 {
        return Err(ShapeError::InsufficientData { needed: 6, got: samples.len() });
    }
    let first = samples.slice(0..m);
    let mu0 = first.mean();
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for p in first.iter() {
        let v = DVector::from_iterator(d, p.iter().zip(&mu0).map(|(a, b)| a - b));
        cov += &v * v.transpose();
    }
    cov /= (m - 1) as f64;
    let eig = SymmetricEigen::new(cov);
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, b| a.max(*b));
    let rank = eig.eigenvalues.iter().filter(|&&l| l > 1e-12 * top.max(1e-300)).count();
    if rank < d || top <= 0.0 {
        return Err(ShapeError::RankDeficient { rank, dim: d });
    }
    let q = &eig.eigenvectors;
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    let sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let w = q * inv_sqrt * q.transpose();
    let inverse = q * sqrt * q.transpose();
    let mut map = AffineMap {
        matrix: w,
        shift: vec![0.0; d],
        inverse,
    };
    let second = map.apply_all(&samples.slice(m..2 * m));
    map.shift = second.mean();
    let points = map.apply_all(&samples.slice(2 * m..3 * m));
    Ok(Standardized {
        map,
        points,
        covariance_range: 0..m,
        mean_range: m..2 * m,
        output_range: 2 * m..3 * m,
    })
}
