//! Feature-weighted kernels.
//!
//! Every kernel evaluation in the fitting loop uses the squared-weight
//! parametrization: a weight vector `w` in `[0,1]^p` enters the kernel as
//! `w_j^2`. The gradient with respect to `w` therefore carries a factor
//! `w_j`, which is what makes zero weights sticky: once a weight reaches
//! exactly zero its gradient component is exactly zero and it can never
//! re-enter the model.
//!
//! [`linearize`] produces the first-order expansion of each kernel matrix
//! entry around a weight anchor. The expansion is packaged as the pair
//! `(B, A)` so that the linearized fitted values are `B*alpha + A*w` and the
//! linearized quadratic penalty is `alpha'*B*alpha + alpha'*A*w`, both affine
//! in `w`.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{KnifeError, Result};

/// Kernel family with its shape parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelSpec {
    Linear,
    Gaussian { gamma: f64 },
    PolyHomogeneous { degree: u32 },
    PolyInhomogeneous { degree: u32 },
}

impl KernelSpec {
    pub fn gaussian(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(KnifeError::InvalidParameter {
                name: "gamma",
                reason: format!("must be a positive finite real, got {gamma}"),
            });
        }
        Ok(KernelSpec::Gaussian { gamma })
    }

    pub fn poly_homogeneous(degree: u32) -> Result<Self> {
        if degree < 1 {
            return Err(KnifeError::InvalidParameter {
                name: "degree",
                reason: "must be at least 1".into(),
            });
        }
        Ok(KernelSpec::PolyHomogeneous { degree })
    }

    pub fn poly_inhomogeneous(degree: u32) -> Result<Self> {
        if degree < 1 {
            return Err(KnifeError::InvalidParameter {
                name: "degree",
                reason: "must be at least 1".into(),
            });
        }
        Ok(KernelSpec::PolyInhomogeneous { degree })
    }
}

impl std::fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KernelSpec::Linear => write!(f, "linear"),
            KernelSpec::Gaussian { gamma } => write!(f, "gaussian(gamma={gamma})"),
            KernelSpec::PolyHomogeneous { degree } => write!(f, "poly-h(degree={degree})"),
            KernelSpec::PolyInhomogeneous { degree } => write!(f, "poly(degree={degree})"),
        }
    }
}

/// Per-feature weights, box-constrained to `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Array1<f64>);

impl WeightVector {
    /// Validates the box constraint `0 <= w_j <= 1`.
    pub fn new(w: Array1<f64>) -> Result<Self> {
        for &v in w.iter() {
            if !v.is_finite() {
                return Err(KnifeError::NonFinite("weight vector"));
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(KnifeError::InvalidParameter {
                    name: "w",
                    reason: format!("weights must lie in [0,1], got {v}"),
                });
            }
        }
        Ok(WeightVector(w))
    }

    /// Internal constructor for values already clamped to the box.
    pub(crate) fn from_clamped(w: Array1<f64>) -> Self {
        debug_assert!(w.iter().all(|v| (0.0..=1.0).contains(v)));
        WeightVector(w)
    }

    pub fn ones(p: usize) -> Self {
        WeightVector(Array1::ones(p))
    }

    pub fn zeros(p: usize) -> Self {
        WeightVector(Array1::zeros(p))
    }

    pub fn values(&self) -> &Array1<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Indices with strictly positive weight.
    pub fn support(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(j, _)| j)
            .collect()
    }

    pub fn support_size(&self) -> usize {
        self.0.iter().filter(|&&v| v > 0.0).count()
    }
}

/// First-order expansion of the kernel matrix around `w_anchor`.
///
/// Entrywise, `K(w) ~ B + G(w)` where `G(w)(i,i') = grad_k(i,i')' * w`.
/// `b_matrix` is symmetric; `a_matrix` row `i` is `sum_i' alpha_i' * grad_k(i,i')`,
/// so fitted values under the expansion are `(B*alpha) + (A*w)`.
#[derive(Debug, Clone)]
pub struct LinearizedKernel {
    pub b_matrix: Array2<f64>,
    pub a_matrix: Array2<f64>,
    pub w_anchor: WeightVector,
    pub alpha_anchor: Array1<f64>,
}

fn check_same_len(context: &'static str, a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(KnifeError::DimensionMismatch {
            context,
            expected: a,
            got: b,
        });
    }
    Ok(())
}

fn check_finite(context: &'static str, xs: &[ArrayView1<f64>]) -> Result<()> {
    for x in xs {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(KnifeError::NonFinite(context));
        }
    }
    Ok(())
}

/// `sum_j w_j^2 x_j x'_j`
#[inline]
fn weighted_dot(w: &[f64], x: &[f64], y: &[f64]) -> f64 {
    let mut acc = 0.0;
    for j in 0..w.len() {
        acc += w[j] * w[j] * x[j] * y[j];
    }
    acc
}

/// `sum_j w_j^2 (x_j - x'_j)^2`
#[inline]
fn weighted_sqdist(w: &[f64], x: &[f64], y: &[f64]) -> f64 {
    let mut acc = 0.0;
    for j in 0..w.len() {
        let d = x[j] - y[j];
        acc += w[j] * w[j] * d * d;
    }
    acc
}

#[inline]
fn value_unchecked(spec: KernelSpec, w: &[f64], x: &[f64], y: &[f64]) -> f64 {
    match spec {
        KernelSpec::Linear => weighted_dot(w, x, y),
        KernelSpec::Gaussian { gamma } => (-gamma * weighted_sqdist(w, x, y)).exp(),
        KernelSpec::PolyHomogeneous { degree } => weighted_dot(w, x, y).powi(degree as i32),
        KernelSpec::PolyInhomogeneous { degree } => {
            (weighted_dot(w, x, y) + 1.0).powi(degree as i32)
        }
    }
}

/// Writes the gradient of `k_{w^2}(x, y)` with respect to `w` into `out`.
#[inline]
fn gradient_unchecked(spec: KernelSpec, w: &[f64], x: &[f64], y: &[f64], out: &mut [f64]) {
    match spec {
        KernelSpec::Linear => {
            for j in 0..w.len() {
                out[j] = 2.0 * w[j] * x[j] * y[j];
            }
        }
        KernelSpec::Gaussian { gamma } => {
            let k = (-gamma * weighted_sqdist(w, x, y)).exp();
            for j in 0..w.len() {
                let d = x[j] - y[j];
                out[j] = -2.0 * gamma * w[j] * d * d * k;
            }
        }
        KernelSpec::PolyHomogeneous { degree } => {
            let s = weighted_dot(w, x, y);
            let outer = (degree as f64) * s.powi(degree as i32 - 1);
            for j in 0..w.len() {
                out[j] = 2.0 * w[j] * x[j] * y[j] * outer;
            }
        }
        KernelSpec::PolyInhomogeneous { degree } => {
            let s = weighted_dot(w, x, y) + 1.0;
            let outer = (degree as f64) * s.powi(degree as i32 - 1);
            for j in 0..w.len() {
                out[j] = 2.0 * w[j] * x[j] * y[j] * outer;
            }
        }
    }
}

/// Evaluates `k_{w^2}(x, x')`.
pub fn kernel_value(
    spec: KernelSpec,
    w: &WeightVector,
    x: ArrayView1<f64>,
    y: ArrayView1<f64>,
) -> Result<f64> {
    check_same_len("kernel_value: x vs w", w.len(), x.len())?;
    check_same_len("kernel_value: x' vs w", w.len(), y.len())?;
    check_finite("kernel_value", &[x, y])?;
    let (xs, ys) = (x.as_standard_layout(), y.as_standard_layout());
    Ok(value_unchecked(
        spec,
        w.values().as_slice().unwrap(),
        xs.as_slice().unwrap(),
        ys.as_slice().unwrap(),
    ))
}

/// The n-by-n kernel matrix of the rows of `x`.
pub fn kernel_matrix(spec: KernelSpec, w: &WeightVector, x: &Array2<f64>) -> Result<Array2<f64>> {
    check_same_len("kernel_matrix: columns vs w", w.len(), x.ncols())?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(KnifeError::NonFinite("kernel_matrix input"));
    }
    let n = x.nrows();
    let xs = x.as_standard_layout();
    let rows: Vec<&[f64]> = (0..n)
        .map(|i| &xs.as_slice().unwrap()[i * x.ncols()..(i + 1) * x.ncols()])
        .collect();
    let ws = w.values().as_slice().unwrap();
    let mut k = Array2::zeros((n, n));
    for i in 0..n {
        for ip in i..n {
            let v = value_unchecked(spec, ws, rows[i], rows[ip]);
            k[[i, ip]] = v;
            k[[ip, i]] = v;
        }
    }
    Ok(k)
}

/// The m-by-n matrix of kernel values between the rows of `x_new` and the
/// rows of `x_train`.
pub fn kernel_cross_matrix(
    spec: KernelSpec,
    w: &WeightVector,
    x_train: &Array2<f64>,
    x_new: &Array2<f64>,
) -> Result<Array2<f64>> {
    check_same_len("kernel_cross_matrix: train columns vs w", w.len(), x_train.ncols())?;
    check_same_len("kernel_cross_matrix: new columns vs w", w.len(), x_new.ncols())?;
    if x_train.iter().chain(x_new.iter()).any(|v| !v.is_finite()) {
        return Err(KnifeError::NonFinite("kernel_cross_matrix input"));
    }
    let p = x_train.ncols();
    let (xt, xn) = (x_train.as_standard_layout(), x_new.as_standard_layout());
    let (ts, ns) = (xt.as_slice().unwrap(), xn.as_slice().unwrap());
    let ws = w.values().as_slice().unwrap();
    let mut k = Array2::zeros((x_new.nrows(), x_train.nrows()));
    for i in 0..x_new.nrows() {
        for j in 0..x_train.nrows() {
            k[[i, j]] = value_unchecked(spec, ws, &ns[i * p..(i + 1) * p], &ts[j * p..(j + 1) * p]);
        }
    }
    Ok(k)
}

/// Gradient of `k_{w^2}(x, x')` with respect to `w`.
///
/// Component `j` carries a factor `w_j`, so it vanishes exactly at `w_j = 0`.
pub fn kernel_gradient(
    spec: KernelSpec,
    w: &WeightVector,
    x: ArrayView1<f64>,
    y: ArrayView1<f64>,
) -> Result<Array1<f64>> {
    check_same_len("kernel_gradient: x vs w", w.len(), x.len())?;
    check_same_len("kernel_gradient: x' vs w", w.len(), y.len())?;
    check_finite("kernel_gradient", &[x, y])?;
    let (xs, ys) = (x.as_standard_layout(), y.as_standard_layout());
    let mut g = vec![0.0; w.len()];
    gradient_unchecked(
        spec,
        w.values().as_slice().unwrap(),
        xs.as_slice().unwrap(),
        ys.as_slice().unwrap(),
        &mut g,
    );
    Ok(Array1::from_vec(g))
}

/// Element-wise first-order expansion of the kernel matrix around `w_prev`,
/// folded with `alpha` so the weight subproblem sees fitted values
/// `B*alpha + A*w`.
pub fn linearize(
    spec: KernelSpec,
    w_prev: &WeightVector,
    x: &Array2<f64>,
    alpha: &Array1<f64>,
) -> Result<LinearizedKernel> {
    check_same_len("linearize: columns vs w", w_prev.len(), x.ncols())?;
    check_same_len("linearize: alpha vs rows", x.nrows(), alpha.len())?;
    if x.iter().any(|v| !v.is_finite()) || alpha.iter().any(|v| !v.is_finite()) {
        return Err(KnifeError::NonFinite("linearize input"));
    }
    let n = x.nrows();
    let p = x.ncols();
    let xs = x.as_standard_layout();
    let rows: Vec<&[f64]> = (0..n)
        .map(|i| &xs.as_slice().unwrap()[i * p..(i + 1) * p])
        .collect();
    let ws = w_prev.values().as_slice().unwrap();

    let mut b = Array2::zeros((n, n));
    let mut a = Array2::zeros((n, p));
    let mut g = vec![0.0; p];
    for i in 0..n {
        for ip in i..n {
            let k = value_unchecked(spec, ws, rows[i], rows[ip]);
            gradient_unchecked(spec, ws, rows[i], rows[ip], &mut g);
            let mut gw = 0.0;
            for j in 0..p {
                gw += g[j] * ws[j];
            }
            let bv = k - gw;
            b[[i, ip]] = bv;
            b[[ip, i]] = bv;
            // A row i accumulates alpha_{i'} * grad; the gradient is symmetric
            // in (i, i'), so the mirrored entry feeds row i'.
            let (ai, aip) = (alpha[ip], alpha[i]);
            for j in 0..p {
                a[[i, j]] += ai * g[j];
            }
            if ip != i {
                for j in 0..p {
                    a[[ip, j]] += aip * g[j];
                }
            }
        }
    }
    Ok(LinearizedKernel {
        b_matrix: b,
        a_matrix: a,
        w_anchor: w_prev.clone(),
        alpha_anchor: alpha.clone(),
    })
}
