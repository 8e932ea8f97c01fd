// SPDX-License-Identifier: Apache-2.0
//! Dense LU factorisation with partial pivoting.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is {rows}x{cols} but right-hand side has {rhs} entries")]
    Dimension { rows: usize, cols: usize, rhs: usize },
    /// Pivot collapsed while eliminating `column` (the unknown index).
    #[error("singular matrix at unknown {column}")]
    Singular { column: usize },
}

/// Pivots smaller than this fraction of the largest initial row magnitude are
/// treated as zero.
pub const PIVOT_REL_TOL: f64 = 1e-13;

/// In-place LU factors of a square matrix, row-major.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &[f64], n: usize) -> Result<Self, LinalgError> {
        if a.len() != n * n {
            return Err(LinalgError::Dimension {
                rows: n,
                cols: a.len() / n.max(1),
                rhs: n,
            });
        }
        let mut lu = a.to_vec();
        let mut row_max: Vec<f64> = (0..n)
            .map(|r| lu[r * n..(r + 1) * n].iter().fold(0.0f64, |m, x| m.max(x.abs())))
            .collect();
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|r| (r, lu[r * n + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if !(pivot > PIVOT_REL_TOL * row_max[p]) || pivot == 0.0 {
                return Err(LinalgError::Singular { column: k });
            }
            if p != k {
                for c in 0..n {
                    lu.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
                row_max.swap(k, p);
            }
            let d = lu[k * n + k];
            for r in k + 1..n {
                let f = lu[r * n + k] / d;
                if f == 0.0 {
                    continue;
                }
                lu[r * n + k] = f;
                for c in k + 1..n {
                    lu[r * n + c] -= f * lu[k * n + c];
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.n;
        if b.len() != n {
            return Err(LinalgError::Dimension {
                rows: n,
                cols: n,
                rhs: b.len(),
            });
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        for r in 0..n {
            let mut s = x[r];
            for c in 0..r {
                s -= self.lu[r * n + c] * x[c];
            }
            x[r] = s;
        }
        for r in (0..n).rev() {
            let mut s = x[r];
            for c in r + 1..n {
                s -= self.lu[r * n + c] * x[c];
            }
            x[r] = s / self.lu[r * n + r];
        }
        Ok(x)
    }
}

/// Solve `a x = b` for a dense square `a` given as rows.
pub fn solve_linear(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let n = a.len();
    if let Some(row) = a.iter().find(|r| r.len() != n) {
        return Err(LinalgError::Dimension {
            rows: n,
            cols: row.len(),
            rhs: b.len(),
        });
    }
    if b.len() != n {
        return Err(LinalgError::Dimension {
            rows: n,
            cols: n,
            rhs: b.len(),
        });
    }
    let flat: Vec<f64> = a.iter().flatten().copied().collect();
    Lu::factor(&flat, n)?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_returns_rhs() {
        let a = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        assert_eq!(solve_linear(&a, &[3.0, -2.0, 0.5]).unwrap(), vec![3.0, -2.0, 0.5]);
    }

    #[test]
    fn diagonal_two_by_two() {
        let a = vec![vec![2.0, 0.0], vec![0.0, 4.0]];
        assert_eq!(solve_linear(&a, &[2.0, 8.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn needs_pivoting() {
        let a = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert_eq!(solve_linear(&a, &[5.0, 7.0]).unwrap(), vec![7.0, 5.0]);
    }

    #[test]
    fn random_well_conditioned_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for _ in 0..10 {
            let n = 20;
            let mut a: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            for (i, row) in a.iter_mut().enumerate() {
                row[i] += n as f64;
            }
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let x = solve_linear(&a, &b).unwrap();
            let resid = a
                .iter()
                .zip(&b)
                .map(|(row, bi)| (row.iter().zip(&x).map(|(r, xi)| r * xi).sum::<f64>() - bi).abs())
                .fold(0.0, f64::max);
            let bmax = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(resid <= 1e-9 * bmax, "residual {resid}");
        }
    }

    #[test]
    fn singular_reports_column() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert_eq!(solve_linear(&a, &[1.0, 2.0]), Err(LinalgError::Singular { column: 1 }));
    }

    #[test]
    fn dimension_mismatch() {
        let a = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!(matches!(solve_linear(&a, &[1.0]), Err(LinalgError::Dimension { .. })));
    }
}
