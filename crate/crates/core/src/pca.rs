//! Principal component analysis over standardized feature vectors.
//!
//! Components are eigenvectors of the sample covariance matrix, computed with
//! a cyclic Jacobi sweep (the matrix is a fixed 13x13 symmetric problem, so a
//! dependency-free solver is both simple and accurate to machine precision).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FEATURE_COUNT;

/// A fitted PCA basis. `components` always holds the full orthonormal basis,
/// ordered by explained variance; `n_kept` controls how many of them
/// [`PcaModel::project`] uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub components: Vec<[f64; FEATURE_COUNT]>,
    pub explained_variance_ratio: Vec<f64>,
    pub n_kept: usize,
}

/// Fits PCA on standardized rows. Requires at least as many rows as
/// dimensions; rank-deficient inputs are fine (trailing ratios are 0).
#[allow(clippy::needless_range_loop)] // indexed form mirrors the matrix algebra
pub fn fit_pca(standardized: &[[f64; FEATURE_COUNT]], n_kept: usize) -> Result<PcaModel> {
    let n = standardized.len();
    if n < FEATURE_COUNT {
        return Err(Error::data(format!(
            "PCA needs at least {FEATURE_COUNT} samples, got {n}"
        )));
    }
    if n_kept == 0 || n_kept > FEATURE_COUNT {
        return Err(Error::config(format!(
            "n_kept must be in 1..={FEATURE_COUNT}, got {n_kept}"
        )));
    }

    // Sample covariance (n-1 denominator) of the standardized data.
    let mut means = [0.0; FEATURE_COUNT];
    for row in standardized {
        for (m, v) in means.iter_mut().zip(row.iter()) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= n as f64;
    }
    let mut cov = [[0.0; FEATURE_COUNT]; FEATURE_COUNT];
    for row in standardized {
        for i in 0..FEATURE_COUNT {
            let di = row[i] - means[i];
            for j in i..FEATURE_COUNT {
                cov[i][j] += di * (row[j] - means[j]);
            }
        }
    }
    for i in 0..FEATURE_COUNT {
        for j in i..FEATURE_COUNT {
            cov[i][j] /= (n - 1) as f64;
            cov[j][i] = cov[i][j];
        }
    }

    let (mut eigenvalues, vectors) = jacobi_eigh(&cov);

    // Sort by eigenvalue descending; clamp tiny negatives from roundoff.
    let mut order: Vec<usize> = (0..FEATURE_COUNT).collect();
    order.sort_by(|&a, &b| eigenvalues[b].total_cmp(&eigenvalues[a]));
    for v in &mut eigenvalues {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let trace: f64 = eigenvalues.iter().sum();
    let mut components = Vec::with_capacity(FEATURE_COUNT);
    let mut ratios = Vec::with_capacity(FEATURE_COUNT);
    for &idx in &order {
        let mut comp = [0.0; FEATURE_COUNT];
        for (row, c) in comp.iter_mut().enumerate() {
            *c = vectors[row][idx];
        }
        // Sign convention: the largest-magnitude entry is positive.
        let lead = comp
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        if comp[lead] < 0.0 {
            for c in &mut comp {
                *c = -*c;
            }
        }
        components.push(comp);
        ratios.push(if trace > 0.0 {
            eigenvalues[idx] / trace
        } else {
            0.0
        });
    }

    Ok(PcaModel {
        components,
        explained_variance_ratio: ratios,
        n_kept,
    })
}

impl PcaModel {
    /// Projects a standardized vector onto the first `n_kept` components.
    pub fn project(&self, z: &[f64; FEATURE_COUNT]) -> Vec<f64> {
        self.components[..self.n_kept]
            .iter()
            .map(|c| dot(c, z))
            .collect()
    }

    /// Projection onto the full basis.
    pub fn project_full(&self, z: &[f64; FEATURE_COUNT]) -> [f64; FEATURE_COUNT] {
        let mut out = [0.0; FEATURE_COUNT];
        for (o, c) in out.iter_mut().zip(self.components.iter()) {
            *o = dot(c, z);
        }
        out
    }

    /// Inverse map from full-basis coordinates back to the original space.
    pub fn reconstruct(&self, coords: &[f64; FEATURE_COUNT]) -> [f64; FEATURE_COUNT] {
        let mut out = [0.0; FEATURE_COUNT];
        for (coeff, comp) in coords.iter().zip(self.components.iter()) {
            for (o, c) in out.iter_mut().zip(comp.iter()) {
                *o += coeff * c;
            }
        }
        out
    }

    /// Sum of the first `n` explained-variance ratios.
    pub fn accumulated_ratio(&self, n: usize) -> f64 {
        self.explained_variance_ratio[..n.min(FEATURE_COUNT)]
            .iter()
            .sum()
    }
}

fn dot(a: &[f64; FEATURE_COUNT], b: &[f64; FEATURE_COUNT]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
/// Returns (eigenvalues, eigenvectors-as-columns).
#[allow(clippy::needless_range_loop)] // indexed form mirrors the matrix algebra
fn jacobi_eigh(
    matrix: &[[f64; FEATURE_COUNT]; FEATURE_COUNT],
) -> ([f64; FEATURE_COUNT], [[f64; FEATURE_COUNT]; FEATURE_COUNT]) {
    let n = FEATURE_COUNT;
    let mut a = *matrix;
    let mut v = [[0.0; FEATURE_COUNT]; FEATURE_COUNT];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }

    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[i][j] * a[i][j];
            }
        }
        if off.sqrt() < 1e-14 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                // Rotation angle that zeroes a[p][q].
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in &mut v {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }

    let mut eigenvalues = [0.0; FEATURE_COUNT];
    for (i, e) in eigenvalues.iter_mut().enumerate() {
        *e = a[i][i];
    }
    (eigenvalues, v)
}
