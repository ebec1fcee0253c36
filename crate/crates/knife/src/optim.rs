//! The two convex sub-solvers of the alternating loop: coefficient fitting
//! at fixed weights, and weight fitting on the linearized kernel under the
//! `[0,1]` box with the (linear, since `w >= 0`) L1 penalty.
//!
//! Squared error admits a closed-form coefficient step. The smooth
//! classification losses use gradient descent with a backtracking
//! (Armijo) line search; the weight step uses projected gradient with the
//! same line search along the projection arc. Both solvers never move
//! uphill relative to their warm start.

use ndarray::{Array1, Array2};

use crate::error::{KnifeError, Result};
use crate::kernels::{LinearizedKernel, WeightVector};
use crate::losses::{loss_gradient, loss_value, LossSpec};

const ARMIJO_C: f64 = 1e-4;
const MIN_STEP: f64 = 1e-18;

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub max_inner_iter: usize,
    pub grad_tol: f64,
    pub backtrack_beta: f64,
    pub initial_step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_inner_iter: 500,
            grad_tol: 1e-8,
            backtrack_beta: 0.5,
            initial_step: 1.0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_inner_iter == 0 {
            return Err(KnifeError::InvalidParameter {
                name: "max_inner_iter",
                reason: "must be positive".into(),
            });
        }
        if !(self.grad_tol > 0.0) {
            return Err(KnifeError::InvalidParameter {
                name: "grad_tol",
                reason: "must be positive".into(),
            });
        }
        if !(self.backtrack_beta > 0.0 && self.backtrack_beta < 1.0) {
            return Err(KnifeError::InvalidParameter {
                name: "backtrack_beta",
                reason: "must lie in (0,1)".into(),
            });
        }
        if !(self.initial_step > 0.0) {
            return Err(KnifeError::InvalidParameter {
                name: "initial_step",
                reason: "must be positive".into(),
            });
        }
        Ok(())
    }
}

/// Solves `min_alpha L(y, alpha0 + K alpha) + lambda1 alpha' K alpha`.
///
/// Squared error: closed form `alpha = (K + lambda1 I)^{-1} y`, no intercept.
/// Smooth classification losses: warm-started gradient descent over
/// `(alpha, alpha0)` with backtracking, stopping when the gradient norm
/// falls below `grad_tol * (1 + |objective|)`.
pub fn fit_coefficients(
    loss: LossSpec,
    k: &Array2<f64>,
    y: &Array1<f64>,
    lambda1: f64,
    warm: Option<(&Array1<f64>, f64)>,
    opts: &SolverOptions,
) -> Result<(Array1<f64>, f64)> {
    opts.validate()?;
    let n = y.len();
    if k.nrows() != n || k.ncols() != n {
        return Err(KnifeError::DimensionMismatch {
            context: "fit_coefficients: K vs y",
            expected: n,
            got: k.nrows().max(k.ncols()),
        });
    }
    if lambda1 < 0.0 {
        return Err(KnifeError::InvalidParameter {
            name: "lambda1",
            reason: "must be nonnegative".into(),
        });
    }
    if !loss.is_smooth() {
        return Err(KnifeError::NonSmoothLoss);
    }

    if let LossSpec::SquaredError = loss {
        return Ok((solve_regularized(k, y, lambda1)?, 0.0));
    }

    // Smooth classification loss: descend on (alpha, alpha0).
    let use_intercept = loss.uses_intercept();
    let (mut alpha, mut alpha0) = match warm {
        Some((a, a0)) => {
            if a.len() != n {
                return Err(KnifeError::DimensionMismatch {
                    context: "fit_coefficients: warm alpha",
                    expected: n,
                    got: a.len(),
                });
            }
            (a.clone(), if use_intercept { a0 } else { 0.0 })
        }
        None => (Array1::zeros(n), 0.0),
    };

    let mut k_alpha = k.dot(&alpha);
    let objective = |ka: &Array1<f64>, a: &Array1<f64>, a0: f64| -> Result<f64> {
        let f = ka.mapv(|v| v + a0);
        let pen = lambda1 * a.dot(ka);
        Ok(loss_value(loss, y.view(), f.view())? + pen)
    };

    let mut obj = objective(&k_alpha, &alpha, alpha0)?;
    if !obj.is_finite() {
        return Err(KnifeError::NonFinite("fit_coefficients objective"));
    }
    let mut step = opts.initial_step;

    for iter in 0..opts.max_inner_iter {
        // refresh the cached product occasionally to stop drift
        if iter > 0 && iter % 64 == 0 {
            k_alpha = k.dot(&alpha);
        }
        let f = k_alpha.mapv(|v| v + alpha0);
        let lg = loss_gradient(loss, y.view(), f.view())?;
        let u = &lg + &(alpha.mapv(|v| 2.0 * lambda1 * v));
        let grad_alpha = k.dot(&u);
        let grad_alpha0 = if use_intercept { lg.sum() } else { 0.0 };

        let grad_sq = grad_alpha.dot(&grad_alpha) + grad_alpha0 * grad_alpha0;
        if grad_sq.sqrt() <= opts.grad_tol * (1.0 + obj.abs()) {
            break;
        }

        // direction d = -grad; caching K*d makes each trial objective O(n)
        let k_d = k.dot(&grad_alpha).mapv(|v| -v);
        let d_dot_k_alpha = -grad_alpha.dot(&k_alpha);
        let d_dot_k_d = -grad_alpha.dot(&k_d);
        let alpha_dot_k_alpha = alpha.dot(&k_alpha);

        let mut t = step;
        let mut accepted = false;
        while t >= MIN_STEP {
            let ka_trial = &k_alpha + &(k_d.mapv(|v| t * v));
            let a0_trial = alpha0 - t * grad_alpha0;
            // penalty via cached pieces: (a + t d)' K (a + t d)
            let pen_trial =
                lambda1 * (alpha_dot_k_alpha + 2.0 * t * d_dot_k_alpha + t * t * d_dot_k_d);
            let f_trial = ka_trial.mapv(|v| v + a0_trial);
            let obj_trial = loss_value(loss, y.view(), f_trial.view())? + pen_trial;
            if obj_trial.is_finite() && obj_trial <= obj - ARMIJO_C * t * grad_sq {
                alpha = &alpha - &(grad_alpha.mapv(|v| t * v));
                alpha0 = a0_trial;
                k_alpha = ka_trial;
                obj = obj_trial;
                step = t / opts.backtrack_beta; // let the next iteration try a bigger step
                accepted = true;
                break;
            }
            t *= opts.backtrack_beta;
        }
        if !accepted {
            break; // no acceptable step; gradient is numerically flat
        }
    }
    Ok((alpha, alpha0))
}

/// Cholesky solve of `(K + lambda1 I) alpha = y`.
fn solve_regularized(k: &Array2<f64>, y: &Array1<f64>, lambda1: f64) -> Result<Array1<f64>> {
    let n = y.len();
    let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = k[[i, j]];
        }
        m[(i, i)] += lambda1;
    }
    let rhs = nalgebra::DVector::from_iterator(n, y.iter().copied());
    match m.clone().cholesky() {
        Some(chol) => {
            let sol = chol.solve(&rhs);
            Ok(Array1::from_iter(sol.iter().copied()))
        }
        None => {
            // fall back to LU for indefinite-but-invertible systems
            match m.lu().solve(&rhs) {
                Some(sol) if sol.iter().all(|v| v.is_finite()) => {
                    Ok(Array1::from_iter(sol.iter().copied()))
                }
                _ => Err(KnifeError::SingularSystem),
            }
        }
    }
}

/// Solves the linearized weight subproblem
/// `min_w L(y, alpha0 + B alpha + A w) + lambda1 (alpha'B alpha + alpha'A w) + lambda2 sum w`
/// over the box `[0,1]^p` by projected gradient with backtracking.
///
/// Weights at exactly zero stay at zero: the matching column of `A` is
/// identically zero (the kernel gradient carries the anchor weight factor),
/// so the objective gradient in that coordinate is `lambda2 >= 0` and the
/// projection clamps the coordinate back to zero.
pub fn fit_weights(
    loss: LossSpec,
    lin: &LinearizedKernel,
    alpha: &Array1<f64>,
    alpha0: f64,
    y: &Array1<f64>,
    lambda1: f64,
    lambda2: f64,
    warm: &WeightVector,
    opts: &SolverOptions,
) -> Result<WeightVector> {
    opts.validate()?;
    if !loss.is_smooth() {
        return Err(KnifeError::NonSmoothLoss);
    }
    let n = y.len();
    let p = lin.a_matrix.ncols();
    if lin.a_matrix.nrows() != n || lin.b_matrix.nrows() != n {
        return Err(KnifeError::DimensionMismatch {
            context: "fit_weights: linearization vs y",
            expected: n,
            got: lin.a_matrix.nrows(),
        });
    }
    if warm.len() != p {
        return Err(KnifeError::DimensionMismatch {
            context: "fit_weights: warm vs A columns",
            expected: p,
            got: warm.len(),
        });
    }
    if alpha.len() != n {
        return Err(KnifeError::DimensionMismatch {
            context: "fit_weights: alpha",
            expected: n,
            got: alpha.len(),
        });
    }

    let a = &lin.a_matrix;
    let base = lin.b_matrix.dot(alpha).mapv(|v| v + alpha0);
    let pen_const = lambda1 * alpha.dot(&lin.b_matrix.dot(alpha));
    // gradient of lambda1 * alpha'A w with respect to w
    let pen_lin = a.t().dot(alpha).mapv(|v| lambda1 * v);

    let mut w = warm.values().clone();
    let objective = |wv: &Array1<f64>| -> Result<f64> {
        let f = &base + &a.dot(wv);
        let v = loss_value(loss, y.view(), f.view())?
            + pen_const
            + pen_lin.dot(wv)
            + lambda2 * wv.sum();
        if !v.is_finite() {
            return Err(KnifeError::NonFinite("fit_weights objective"));
        }
        Ok(v)
    };

    let mut obj = objective(&w)?;
    let mut step = opts.initial_step;

    for _ in 0..opts.max_inner_iter {
        let f = &base + &a.dot(&w);
        let lg = loss_gradient(loss, y.view(), f.view())?;
        let mut grad = a.t().dot(&lg) + &pen_lin;
        grad.mapv_inplace(|v| v + lambda2);

        // projected-gradient residual at unit step
        let resid_sq: f64 = (0..p)
            .map(|j| {
                let r = w[j] - (w[j] - grad[j]).clamp(0.0, 1.0);
                r * r
            })
            .sum();
        if resid_sq.sqrt() <= opts.grad_tol * (1.0 + obj.abs()) {
            break;
        }

        let mut t = step;
        let mut accepted = false;
        while t >= MIN_STEP {
            let w_trial = Array1::from_shape_fn(p, |j| (w[j] - t * grad[j]).clamp(0.0, 1.0));
            let delta = &w_trial - &w;
            let obj_trial = objective(&w_trial)?;
            if obj_trial <= obj + ARMIJO_C * grad.dot(&delta) {
                w = w_trial;
                obj = obj_trial;
                step = t / opts.backtrack_beta;
                accepted = true;
                break;
            }
            t *= opts.backtrack_beta;
        }
        if !accepted {
            break;
        }
    }
    Ok(WeightVector::from_clamped(w))
}

/// Objective value of the linearized weight subproblem, including the
/// constant `lambda1 alpha'B alpha` piece so it agrees with the exact
/// objective at the anchor.
pub fn linearized_objective(
    loss: LossSpec,
    lin: &LinearizedKernel,
    alpha: &Array1<f64>,
    alpha0: f64,
    y: &Array1<f64>,
    lambda1: f64,
    lambda2: f64,
    w: &WeightVector,
) -> Result<f64> {
    let base = lin.b_matrix.dot(alpha).mapv(|v| v + alpha0);
    let f = &base + &lin.a_matrix.dot(w.values());
    let pen = lambda1 * (alpha.dot(&lin.b_matrix.dot(alpha)) + alpha.dot(&lin.a_matrix.dot(w.values())));
    Ok(loss_value(loss, y.view(), f.view())? + pen + lambda2 * w.values().sum())
}
