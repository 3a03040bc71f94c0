//! Linear least squares via Householder QR.

use crate::error::{Error, Result};
use crate::numeric::Matrix;

/// Automatic ridge applied when a zero-ridge system turns out rank deficient.
pub const FALLBACK_RIDGE: f64 = 1e-10;

/// Solution of a least-squares problem.
#[derive(Debug, Clone)]
pub struct LsqSolution {
    /// The minimizer of `‖Ax − b‖² + ridge·‖x‖²`.
    pub x: Vec<f64>,
    /// Set when a rank-deficient zero-ridge system was re-solved with
    /// [`FALLBACK_RIDGE`].
    pub ridge_fallback: bool,
}

/// Minimize `‖Ax − b‖² + ridge·‖x‖²`.
///
/// With `ridge = 0` and full column rank this is the unique least-squares
/// minimizer. A rank-deficient zero-ridge system is re-solved with a ridge of
/// [`FALLBACK_RIDGE`] and the result is flagged.
pub fn solve_least_squares(a: &Matrix, b: &[f64], ridge: f64) -> Result<LsqSolution> {
    if a.rows() != b.len() {
        return Err(Error::InvalidInput(format!(
            "least squares: {} rows but {} targets",
            a.rows(),
            b.len()
        )));
    }
    if ridge < 0.0 || !ridge.is_finite() {
        return Err(Error::InvalidInput("ridge must be finite and >= 0".into()));
    }
    if !a.is_finite() || b.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "least squares: non-finite entries".into(),
        ));
    }
    if a.cols() == 0 {
        return Ok(LsqSolution {
            x: Vec::new(),
            ridge_fallback: false,
        });
    }

    match qr_solve(a, b, ridge) {
        Some(x) => Ok(LsqSolution {
            x,
            ridge_fallback: false,
        }),
        None => {
            let x = qr_solve(a, b, FALLBACK_RIDGE).ok_or_else(|| {
                Error::InvalidInput("least squares: singular even with fallback ridge".into())
            })?;
            Ok(LsqSolution {
                x,
                ridge_fallback: true,
            })
        }
    }
}

/// Householder QR on the ridge-augmented system `[A; √ridge·I] x = [b; 0]`.
/// Returns `None` when a diagonal of R is negligible (rank deficiency).
fn qr_solve(a: &Matrix, b: &[f64], ridge: f64) -> Option<Vec<f64>> {
    let n = a.cols();
    let extra = if ridge > 0.0 { n } else { 0 };
    let m = a.rows() + extra;
    if m < n {
        // Underdetermined even after augmentation; treat as deficient.
        return None;
    }

    // Work in an augmented column-major buffer [A | b] for cache-friendly
    // Householder updates.
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|c| {
            let mut col = vec![0.0; m];
            for r in 0..a.rows() {
                col[r] = a.get(r, c);
            }
            if ridge > 0.0 {
                col[a.rows() + c] = ridge.sqrt();
            }
            col
        })
        .collect();
    let mut rhs = vec![0.0; m];
    rhs[..b.len()].copy_from_slice(b);

    let mut max_diag: f64 = 0.0;
    let mut diags = vec![0.0_f64; n];

    for k in 0..n {
        // Householder vector for column k below row k.
        let norm_x = cols[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm_x == 0.0 {
            diags[k] = 0.0;
            continue;
        }
        let alpha = if cols[k][k] >= 0.0 { -norm_x } else { norm_x };
        let mut v: Vec<f64> = cols[k][k..].to_vec();
        v[0] -= alpha;
        let v_norm2 = v.iter().map(|x| x * x).sum::<f64>();
        if v_norm2 > 0.0 {
            for col in cols.iter_mut().skip(k) {
                reflect(&v, &mut col[k..], v_norm2);
            }
            reflect(&v, &mut rhs[k..], v_norm2);
        }
        cols[k][k] = alpha;
        diags[k] = alpha.abs();
        max_diag = max_diag.max(alpha.abs());
    }

    // Rank check on R's diagonal.
    let tol = max_diag * 1e-12;
    if diags.iter().any(|d| *d <= tol) {
        return None;
    }

    // Back substitution on R x = Qᵀb.
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = rhs[k];
        for j in k + 1..n {
            s -= cols[j][k] * x[j];
        }
        x[k] = s / cols[k][k];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

/// Apply the Householder reflection `I − 2vvᵀ/‖v‖²` to `target`.
fn reflect(v: &[f64], target: &mut [f64], v_norm2: f64) {
    let dot: f64 = v.iter().zip(target.iter()).map(|(a, b)| a * b).sum();
    let scale = 2.0 * dot / v_norm2;
    for (t, vi) in target.iter_mut().zip(v) {
        *t -= scale * vi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use crate::numeric::RngStream;

    /// Independent oracle: normal equations (AᵀA + ridge·I)x = Aᵀb solved by
    /// Gauss elimination with full pivoting.
    pub(crate) fn normal_equations_oracle(a: &Matrix, b: &[f64], ridge: f64) -> Vec<f64> {
        let n = a.cols();
        let at = a.transpose();
        let mut lhs = at.matmul(a).unwrap();
        for i in 0..n {
            lhs.set(i, i, lhs.get(i, i) + ridge);
        }
        let mut rhs = at.matvec(b).unwrap();

        // Full-pivot elimination.
        let mut col_perm: Vec<usize> = (0..n).collect();
        let mut m: Vec<Vec<f64>> = (0..n).map(|r| lhs.row(r).to_vec()).collect();
        for k in 0..n {
            let (mut pr, mut pc, mut best) = (k, k, 0.0_f64);
            for r in k..n {
                for c in k..n {
                    if m[r][c].abs() > best {
                        best = m[r][c].abs();
                        pr = r;
                        pc = c;
                    }
                }
            }
            m.swap(k, pr);
            rhs.swap(k, pr);
            for row in m.iter_mut() {
                row.swap(k, pc);
            }
            col_perm.swap(k, pc);
            for r in k + 1..n {
                let f = m[r][k] / m[k][k];
                for c in k..n {
                    m[r][c] -= f * m[k][c];
                }
                rhs[r] -= f * rhs[k];
            }
        }
        let mut y = vec![0.0; n];
        for k in (0..n).rev() {
            let mut s = rhs[k];
            for c in k + 1..n {
                s -= m[k][c] * y[c];
            }
            y[k] = s / m[k][k];
        }
        let mut x = vec![0.0; n];
        for k in 0..n {
            x[col_perm[k]] = y[k];
        }
        x
    }

    #[test]
    fn identity_system() {
        let a = Matrix::identity(2);
        let sol = solve_least_squares(&a, &[3.0, 4.0], 0.0).unwrap();
        assert_relative_eq!(sol.x[0], 3.0, max_relative = 1e-12);
        assert_relative_eq!(sol.x[1], 4.0, max_relative = 1e-12);
        assert!(!sol.ridge_fallback);
    }

    #[test]
    fn mean_minimizes_sse() {
        let a = Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let sol = solve_least_squares(&a, &[1.0, 3.0], 0.0).unwrap();
        assert_relative_eq!(sol.x[0], 2.0, max_relative = 1e-12);
    }

    #[test]
    fn matches_normal_equations_oracle() {
        let mut rng = RngStream::new(7, 0);
        for case in 0..20 {
            let data: Vec<f64> = (0..18).map(|_| rng.gaussian(0.0, 1.0)).collect();
            let a = Matrix::from_vec(6, 3, data).unwrap();
            let b: Vec<f64> = (0..6).map(|_| rng.gaussian(0.0, 1.0)).collect();
            let ridge = if case % 2 == 0 { 0.0 } else { 0.3 };
            let sol = solve_least_squares(&a, &b, ridge).unwrap();
            let oracle = normal_equations_oracle(&a, &b, ridge);
            for (got, want) in sol.x.iter().zip(&oracle) {
                assert_relative_eq!(got, want, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn rank_deficient_falls_back_to_ridge() {
        // Two identical columns.
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]]).unwrap();
        let sol = solve_least_squares(&a, &[1.0, 2.0, 3.0], 0.0).unwrap();
        assert!(sol.ridge_fallback);
        // The ridge solution splits the coefficient between the twin columns.
        assert_relative_eq!(sol.x[0], sol.x[1], max_relative = 1e-6);
        assert_relative_eq!(sol.x[0] + sol.x[1], 1.0, max_relative = 1e-6);
    }

    #[test]
    fn rejects_non_finite() {
        let a = Matrix::identity(2);
        assert!(solve_least_squares(&a, &[f64::INFINITY, 0.0], 0.0).is_err());
    }

    #[test]
    fn residual_beats_random_perturbations() {
        let mut rng = RngStream::new(11, 0);
        let data: Vec<f64> = (0..24).map(|_| rng.gaussian(0.0, 1.0)).collect();
        let a = Matrix::from_vec(8, 3, data).unwrap();
        let b: Vec<f64> = (0..8).map(|_| rng.gaussian(0.0, 1.0)).collect();
        let sol = solve_least_squares(&a, &b, 0.0).unwrap();
        let resid = |x: &[f64]| -> f64 {
            a.matvec(x)
                .unwrap()
                .iter()
                .zip(&b)
                .map(|(y, t)| (y - t) * (y - t))
                .sum()
        };
        let base = resid(&sol.x);
        for _ in 0..100 {
            let perturbed: Vec<f64> = sol
                .x
                .iter()
                .map(|v| v + rng.gaussian(0.0, 0.1))
                .collect();
            assert!(base <= resid(&perturbed) + 1e-12);
        }
    }
}
