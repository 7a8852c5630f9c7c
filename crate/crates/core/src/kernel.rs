//! Gram matrices, positive-semidefiniteness and strong-kernel checks.

use crate::error::{Error, Result};

pub const DEFAULT_PSD_TOL: f64 = 1e-8;

const OFF_DIAGONAL_TOL: f64 = 1e-12;

/// `entries[i][j] = sim(items[i], items[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub n: usize,
    pub entries: Vec<Vec<f64>>,
}

impl GramMatrix {
    pub fn from_rows(entries: Vec<Vec<f64>>) -> Result<GramMatrix> {
        let n = entries.len();
        if entries.iter().any(|r| r.len() != n) {
            return Err(Error::Precondition("gram matrix must be square".into()));
        }
        Ok(GramMatrix { n, entries })
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i + 1..self.n {
                worst = worst.max((self.entries[i][j] - self.entries[j][i]).abs());
            }
        }
        worst
    }
}

pub fn gram<T>(items: &[T], mut sim: impl FnMut(&T, &T) -> f64) -> GramMatrix {
    GramMatrix {
        n: items.len(),
        entries: items.iter().map(|a| items.iter().map(|b| sim(a, b)).collect()).collect(),
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
///
/// Stops once the off-diagonal Frobenius norm drops below 1e-12 or after
/// 100·n² sweeps.
pub fn symmetric_eigenvalues(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let off = |a: &[Vec<f64>]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i][j] * a[i][j];
                }
            }
        }
        s.sqrt()
    };
    let max_sweeps = 100 * n * n;
    for _ in 0..max_sweeps {
        if off(&a) < OFF_DIAGONAL_TOL {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
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
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Smallest eigenvalue of the symmetrized matrix; `+inf` when empty.
pub fn min_eigenvalue(g: &GramMatrix) -> f64 {
    let sym: Vec<Vec<f64>> = (0..g.n)
        .map(|i| (0..g.n).map(|j| 0.5 * (g.entries[i][j] + g.entries[j][i])).collect())
        .collect();
    symmetric_eigenvalues(&sym).into_iter().fold(f64::INFINITY, f64::min)
}

/// Whether the minimum eigenvalue is at least `-tol`.
pub fn is_psd(g: &GramMatrix, tol: f64) -> Result<bool> {
    let asym = g.max_asymmetry();
    if asym > tol {
        return Err(Error::Precondition(format!("matrix is not symmetric (difference {asym:e})")));
    }
    Ok(min_eigenvalue(g) >= -tol)
}

/// Whether `sim(x,x) >= sim(x,y)` (up to 1e-9) for every pair of items.
pub fn is_strong<T>(items: &[T], mut sim: impl FnMut(&T, &T) -> f64) -> bool {
    items.iter().all(|x| {
        let own = sim(x, x);
        items.iter().all(|y| own >= sim(x, y) - 1e-9)
    })
}
