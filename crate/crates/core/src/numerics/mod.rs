//! Dense numeric kernel: matrices, activations, seeded RNG streams and a
//! central-difference gradient checker used to certify hand-derived gradients.

mod matrix;
mod rng;

pub use matrix::{axpy, dot, gemm, DenseMatrix};
pub use rng::{stream, Rng, RngState};

use crate::error::{Error, Result};

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln σ(x)` without overflow for large `|x|`.
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

#[inline]
pub fn leaky_relu(x: f64, slope: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        slope * x
    }
}

#[inline]
pub fn leaky_relu_grad(x: f64, slope: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        slope
    }
}

/// Maximum over coordinates of `|central_diff - analytic| / max(1, |analytic|)`.
pub fn grad_check<F>(mut f: F, analytic: &[f64], point: &[f64], eps: f64) -> Result<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    if analytic.len() != point.len() {
        return Err(Error::shape(
            "grad_check",
            format!("{} gradient entries for {} coordinates", analytic.len(), point.len()),
        ));
    }
    if !(eps > 0.0) {
        return Err(Error::invalid("grad_check step must be positive"));
    }
    let mut x = point.to_vec();
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + eps;
        let plus = f(&x);
        x[i] = orig - eps;
        let minus = f(&x);
        x[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::GradCheck { coordinate: i });
        }
        let numeric = (plus - minus) / (2.0 * eps);
        let err = (numeric - analytic[i]).abs() / analytic[i].abs().max(1.0);
        worst = worst.max(err);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        let mut rng = Rng::new(1);
        for _ in 0..100 {
            let x = rng.normal() * 10.0;
            assert!((sigmoid(x) + sigmoid(-x) - 1.0).abs() < 1e-15);
            assert!((log_sigmoid(x) - sigmoid(x).ln()).abs() < 1e-12);
        }
        assert!(log_sigmoid(-800.0).is_finite());
    }

    #[test]
    fn leaky_relu_values() {
        assert!((leaky_relu(-2.0, 0.2) + 0.4).abs() < 1e-15);
        assert_eq!(leaky_relu(3.0, 0.2), 3.0);
    }

    #[test]
    fn grad_check_square() {
        let err = grad_check(|x| x[0] * x[0], &[6.0], &[3.0], 1e-5).unwrap();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn grad_check_sigmoid() {
        let err = grad_check(|x| sigmoid(x[0]), &[0.25], &[0.0], 1e-5).unwrap();
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn grad_check_flags_wrong_gradient() {
        let err = grad_check(|x| x[0] * x[0], &[5.0], &[3.0], 1e-5).unwrap();
        assert!(err > 0.1);
    }

    #[test]
    fn grad_check_non_finite_names_coordinate() {
        let r = grad_check(
            |x| if x[1] > 0.5 { f64::NAN } else { x[0] },
            &[1.0, 0.0],
            &[0.0, 0.5],
            1e-3,
        );
        assert!(matches!(r, Err(Error::GradCheck { coordinate: 1 })));
    }
}
