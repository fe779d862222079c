//! Dense matrix kernel, activations, initialisers, and finite differences.

mod matrix;
mod rng;

pub use matrix::Matrix;
pub(crate) use matrix::{dot, gemv_acc, gemv_t_acc, outer_acc};
pub use rng::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(x),
            Activation::Tanh => x.tanh(),
        }
    }
}

/// Elementwise activation.
pub fn activate(kind: Activation, x: &Matrix) -> Matrix {
    x.map(|v| kind.apply(v))
}

/// Logistic function, evaluated on the side that cannot overflow.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Glorot-uniform weights: `U(-s, s)` with `s = sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
    let s = (6.0 / (rows + cols) as f64).sqrt();
    let mut m = Matrix::zeros(rows, cols);
    m.as_mut_slice()
        .iter_mut()
        .for_each(|v| *v = rng.uniform(-s, s));
    m
}

/// Central-difference gradient `(f(p + εeᵢ) − f(p − εeᵢ)) / 2ε` per coordinate.
pub fn finite_difference_gradient<F>(mut f: F, params: &[f64], epsilon: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    let mut p = params.to_vec();
    let mut grad = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + epsilon;
        let plus = f(&p);
        p[i] = orig - epsilon;
        let minus = f(&p);
        p[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::numeric(
                "finite differences",
                format!("non-finite loss at coordinate {i}"),
            ));
        }
        grad.push((plus - minus) / (2.0 * epsilon));
    }
    Ok(grad)
}

/// Worst per-coordinate error `|a − n| / max(1, |a|)` between two gradients.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(1.0))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use super::Rng;

    #[test]
    fn activation_fixed_points() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(Activation::Tanh.apply(0.0), 0.0);
        let m = activate(Activation::Sigmoid, &Matrix::column(&[-1e4, 1e4, -800.0]));
        assert!(m.all_finite());
        assert!(m[(0, 0)] >= 0.0 && m[(0, 0)] < 1e-300);
        assert_eq!(m[(1, 0)], 1.0);
    }

    proptest! {
        #[test]
        fn activations_are_bounded_and_monotone(a in -30.0f64..30.0, b in -30.0f64..30.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            for kind in [Activation::Sigmoid, Activation::Tanh] {
                prop_assert!(kind.apply(lo) <= kind.apply(hi));
            }
            let s = sigmoid(a);
            prop_assert!(s > 0.0 && s < 1.0);
            let t = Activation::Tanh.apply(a);
            prop_assert!((-1.0..=1.0).contains(&t));
        }
    }

    #[test]
    fn finite_differences_of_simple_functions() {
        let g = finite_difference_gradient(|p| p[0] * p[0], &[3.0], 1e-5).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-8);

        let g = finite_difference_gradient(|_| 4.2, &[1.0, -2.0, 0.5], 1e-5).unwrap();
        assert_eq!(g, vec![0.0; 3]);

        assert!(finite_difference_gradient(|p| 1.0 / (p[0] - p[0]), &[1.0], 1e-5).is_err());
        assert!(finite_difference_gradient(|p| p[0], &[1.0], 0.0).is_err());
    }

    #[test]
    fn glorot_bounds() {
        let mut rng = Rng::new(1);
        let m = glorot_uniform(15, 15, &mut rng);
        let s = (6.0f64 / 30.0).sqrt();
        assert!(m.as_slice().iter().all(|v| v.abs() <= s));
        let mut rng = Rng::new(1);
        assert_eq!(glorot_uniform(15, 15, &mut rng), m);
    }
}
