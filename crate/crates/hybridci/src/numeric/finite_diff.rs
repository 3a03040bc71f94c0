//! Central-difference gradient, the verification oracle for every analytic
//! gradient in the toolkit.

use crate::error::{Error, Result};

/// Central-difference gradient of `f` at `x` with step `h`:
/// `(f(x + h·eᵢ) − f(x − h·eᵢ)) / 2h` per coordinate.
pub fn finite_diff_gradient<F>(mut f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if h <= 0.0 || !h.is_finite() {
        return Err(Error::InvalidInput("finite difference step must be > 0".into()));
    }
    let mut grad = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::InvalidInput(format!(
                "objective not finite near coordinate {}",
                i
            )));
        }
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_function_has_zero_gradient() {
        let g = finite_diff_gradient(|_| 7.5, &[1.0, 2.0, 3.0], 1e-6).unwrap();
        assert_eq!(g, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn square_has_derivative_two_x() {
        let g = finite_diff_gradient(|x| x[0] * x[0], &[3.0], 1e-6).unwrap();
        assert_relative_eq!(g[0], 6.0, epsilon = 1e-4);
    }

    #[test]
    fn quadratic_error_shrinks_with_h() {
        // On x'Qx central differences are exact to O(h^2): halving h cuts the
        // error by at least 3x (4x in exact arithmetic).
        let q = [[2.0, 0.5], [0.5, 1.0]];
        let f = |x: &[f64]| {
            let mut s = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    s += x[i] * q[i][j] * x[j];
                }
            }
            // Cubic term so the gradient is not exactly linear.
            s + 0.3 * x[0] * x[0] * x[0]
        };
        let x = [0.7, -0.4];
        let exact = [
            2.0 * (q[0][0] * x[0] + q[0][1] * x[1]) + 0.9 * x[0] * x[0],
            2.0 * (q[1][0] * x[0] + q[1][1] * x[1]),
        ];
        let err = |h: f64| {
            let g = finite_diff_gradient(f, &x, h).unwrap();
            g.iter()
                .zip(&exact)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let coarse = err(1e-3);
        let fine = err(5e-4);
        assert!(coarse >= 3.0 * fine, "coarse {} fine {}", coarse, fine);
    }

    #[test]
    fn propagates_non_finite_objective() {
        let res = finite_diff_gradient(|x| (1.0 / x[0]).ln(), &[0.0], 1e-6);
        assert!(res.is_err());
    }
}
