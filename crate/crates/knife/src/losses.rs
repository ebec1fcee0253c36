//! Loss functions and their derivatives with respect to fitted values.
//!
//! Losses are sums over observations, not means. The hinge loss is kept for
//! evaluation only; iterative fitting requires one of the smooth surrogates
//! (squared hinge or Huberized hinge) because the alternating solver needs
//! gradients everywhere.

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{KnifeError, Result};

pub const DEFAULT_HUBER_DELTA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum LossSpec {
    SquaredError,
    Hinge,
    SquaredHinge,
    HuberHinge { delta: f64 },
    BinomialDeviance,
}

impl LossSpec {
    pub fn huber_hinge(delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(KnifeError::InvalidParameter {
                name: "delta",
                reason: format!("must be a positive finite real, got {delta}"),
            });
        }
        Ok(LossSpec::HuberHinge { delta })
    }

    /// Classification families model labels in `{-1, +1}` and use an
    /// unpenalized intercept; squared error is for regression and never does.
    pub fn uses_intercept(self) -> bool {
        !matches!(self, LossSpec::SquaredError)
    }

    pub fn is_classification(self) -> bool {
        self.uses_intercept()
    }

    /// Whether the loss has a gradient everywhere (everything except hinge).
    pub fn is_smooth(self) -> bool {
        !matches!(self, LossSpec::Hinge)
    }
}

impl std::fmt::Display for LossSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LossSpec::SquaredError => write!(f, "squared-error"),
            LossSpec::Hinge => write!(f, "hinge"),
            LossSpec::SquaredHinge => write!(f, "squared-hinge"),
            LossSpec::HuberHinge { delta } => write!(f, "huber-hinge(delta={delta})"),
            LossSpec::BinomialDeviance => write!(f, "binomial-deviance"),
        }
    }
}

fn validate_pair(loss: LossSpec, y: ArrayView1<f64>, f: ArrayView1<f64>) -> Result<()> {
    if y.len() != f.len() {
        return Err(KnifeError::DimensionMismatch {
            context: "loss: y vs f",
            expected: y.len(),
            got: f.len(),
        });
    }
    if loss.is_classification() {
        for &v in y.iter() {
            if v != 1.0 && v != -1.0 {
                return Err(KnifeError::InvalidLabel(v));
            }
        }
    }
    Ok(())
}

/// Huberized hinge of the margin `t = y*f`: zero above 1, quadratic on
/// `[1-delta, 1]`, linear below.
#[inline]
fn huber_term(t: f64, delta: f64) -> f64 {
    if t > 1.0 {
        0.0
    } else if t >= 1.0 - delta {
        let r = 1.0 - t;
        r * r / (2.0 * delta)
    } else {
        (1.0 - t) - delta / 2.0
    }
}

#[inline]
fn log1p_exp_neg(t: f64) -> f64 {
    // log(1 + exp(-t)) without overflow for very negative t
    if t < -30.0 {
        -t
    } else {
        (-t).exp().ln_1p()
    }
}

/// Total loss `L(y, f)` summed over observations.
pub fn loss_value(loss: LossSpec, y: ArrayView1<f64>, f: ArrayView1<f64>) -> Result<f64> {
    validate_pair(loss, y, f)?;
    let total = match loss {
        LossSpec::SquaredError => y
            .iter()
            .zip(f.iter())
            .map(|(yi, fi)| (yi - fi) * (yi - fi))
            .sum(),
        LossSpec::Hinge => y
            .iter()
            .zip(f.iter())
            .map(|(yi, fi)| (1.0 - yi * fi).max(0.0))
            .sum(),
        LossSpec::SquaredHinge => y
            .iter()
            .zip(f.iter())
            .map(|(yi, fi)| {
                let m = (1.0 - yi * fi).max(0.0);
                m * m
            })
            .sum(),
        LossSpec::HuberHinge { delta } => y
            .iter()
            .zip(f.iter())
            .map(|(yi, fi)| huber_term(yi * fi, delta))
            .sum(),
        LossSpec::BinomialDeviance => y
            .iter()
            .zip(f.iter())
            .map(|(yi, fi)| log1p_exp_neg(yi * fi))
            .sum(),
    };
    Ok(total)
}

/// Componentwise `dL/df_i`. Hinge is rejected: its subgradient is only used
/// for reporting, never inside a solver.
pub fn loss_gradient(loss: LossSpec, y: ArrayView1<f64>, f: ArrayView1<f64>) -> Result<Array1<f64>> {
    validate_pair(loss, y, f)?;
    if let LossSpec::Hinge = loss {
        return Err(KnifeError::UnsupportedGradient { family: "hinge" });
    }
    let n = y.len();
    let mut g = Array1::zeros(n);
    match loss {
        LossSpec::SquaredError => {
            for i in 0..n {
                g[i] = 2.0 * (f[i] - y[i]);
            }
        }
        LossSpec::SquaredHinge => {
            for i in 0..n {
                let m = 1.0 - y[i] * f[i];
                if m > 0.0 {
                    g[i] = -2.0 * y[i] * m;
                }
            }
        }
        LossSpec::HuberHinge { delta } => {
            for i in 0..n {
                let t = y[i] * f[i];
                let dt = if t > 1.0 {
                    0.0
                } else if t >= 1.0 - delta {
                    -(1.0 - t) / delta
                } else {
                    -1.0
                };
                g[i] = y[i] * dt;
            }
        }
        LossSpec::BinomialDeviance => {
            for i in 0..n {
                let t = y[i] * f[i];
                // d/dt log(1+exp(-t)) = -1/(1+exp(t))
                let s = if t > 30.0 {
                    0.0
                } else if t < -30.0 {
                    1.0
                } else {
                    1.0 / (1.0 + t.exp())
                };
                g[i] = -y[i] * s;
            }
        }
        LossSpec::Hinge => unreachable!(),
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;

    fn smooth_families() -> Vec<LossSpec> {
        vec![
            LossSpec::SquaredError,
            LossSpec::SquaredHinge,
            LossSpec::HuberHinge { delta: 0.5 },
            LossSpec::HuberHinge { delta: 1.3 },
            LossSpec::BinomialDeviance,
        ]
    }

    #[test]
    fn squared_error_zero_at_exact_fit() {
        let y = array![1.0, -2.0, 0.5];
        assert_eq!(loss_value(LossSpec::SquaredError, y.view(), y.view()).unwrap(), 0.0);
    }

    #[test]
    fn hinge_zero_when_margins_satisfied() {
        let y = array![1.0, -1.0, 1.0];
        let f = array![1.0, -2.5, 3.0];
        assert_eq!(loss_value(LossSpec::Hinge, y.view(), f.view()).unwrap(), 0.0);
    }

    #[test]
    fn huber_hinge_quadratic_zone_value() {
        // t = y*f = 0.75 with delta = 0.5 sits in the quadratic zone:
        // (1 - 0.75)^2 / (2 * 0.5) = 0.0625
        let y = array![1.0];
        let f = array![0.75];
        let v = loss_value(LossSpec::HuberHinge { delta: 0.5 }, y.view(), f.view()).unwrap();
        assert!((v - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn invalid_labels_rejected_for_classification() {
        let y = array![1.0, 0.0];
        let f = array![0.3, -0.2];
        assert!(loss_value(LossSpec::SquaredHinge, y.view(), f.view()).is_err());
        assert!(loss_value(LossSpec::Hinge, y.view(), f.view()).is_err());
        // squared error places no label restriction
        assert!(loss_value(LossSpec::SquaredError, y.view(), f.view()).is_ok());
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let y = array![1.0, -1.0];
        let f = array![0.3];
        assert!(loss_value(LossSpec::Hinge, y.view(), f.view()).is_err());
    }

    #[test]
    fn hinge_gradient_is_unsupported() {
        let y = array![1.0];
        let f = array![0.5];
        assert!(matches!(
            loss_gradient(LossSpec::Hinge, y.view(), f.view()),
            Err(KnifeError::UnsupportedGradient { .. })
        ));
    }

    #[test]
    fn squared_error_gradient_closed_form() {
        let y = array![1.0, -2.0];
        let f = array![0.5, 1.0];
        let g = loss_gradient(LossSpec::SquaredError, y.view(), f.view()).unwrap();
        assert_eq!(g[0], 2.0 * (0.5 - 1.0));
        assert_eq!(g[1], 2.0 * (1.0 + 2.0));
    }

    #[test]
    fn squared_hinge_gradient_flat_beyond_margin() {
        let y = array![1.0];
        let f = array![1.5];
        let g = loss_gradient(LossSpec::SquaredHinge, y.view(), f.view()).unwrap();
        assert_eq!(g[0], 0.0);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = crate::rng::substream(31, 0);
        let n = 20;
        for loss in smooth_families() {
            let y = if loss.is_classification() {
                Array1::from_shape_fn(n, |_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            } else {
                Array1::from_shape_fn(n, |_| rng.random_range(-2.0..2.0))
            };
            let f = Array1::from_shape_fn(n, |_| rng.random_range(-2.0..2.0));
            let g = loss_gradient(loss, y.view(), f.view()).unwrap();
            let h = 1e-6;
            for i in 0..n {
                let mut fp = f.clone();
                let mut fm = f.clone();
                fp[i] += h;
                fm[i] -= h;
                let vp = loss_value(loss, y.view(), fp.view()).unwrap();
                let vm = loss_value(loss, y.view(), fm.view()).unwrap();
                let fd = (vp - vm) / (2.0 * h);
                let tol = 1e-6 * g[i].abs().max(1.0);
                assert!((g[i] - fd).abs() < tol, "{loss}: i={i} {} vs {fd}", g[i]);
            }
        }
    }

    #[test]
    fn losses_nonnegative_and_convex_spot_check() {
        let mut rng = crate::rng::substream(32, 0);
        let n = 12;
        let mut families = smooth_families();
        families.push(LossSpec::Hinge);
        for loss in families {
            let y = if loss.is_classification() {
                Array1::from_shape_fn(n, |_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            } else {
                Array1::from_shape_fn(n, |_| rng.random_range(-2.0..2.0))
            };
            for _ in 0..25 {
                let f1 = Array1::from_shape_fn(n, |_| rng.random_range(-3.0..3.0));
                let f2 = Array1::from_shape_fn(n, |_| rng.random_range(-3.0..3.0));
                let t: f64 = rng.random_range(0.0..1.0);
                let fm = &f1 * t + &f2 * (1.0 - t);
                let lm = loss_value(loss, y.view(), fm.view()).unwrap();
                let l1 = loss_value(loss, y.view(), f1.view()).unwrap();
                let l2 = loss_value(loss, y.view(), f2.view()).unwrap();
                assert!(l1 >= 0.0 && l2 >= 0.0);
                assert!(lm <= t * l1 + (1.0 - t) * l2 + 1e-10, "{loss}");
            }
        }
    }

    #[test]
    fn huber_approaches_hinge_as_delta_shrinks() {
        // |h_delta(t) - hinge(t)| <= delta/2 for all t
        for &delta in &[0.5, 0.1, 0.01] {
            let mut t = -3.0;
            while t <= 3.0 {
                let h = huber_term(t, delta);
                let hinge = (1.0 - t).max(0.0);
                assert!((h - hinge).abs() <= delta / 2.0 + 1e-15, "t={t} delta={delta}");
                t += 0.01;
            }
        }
    }
}
