//! Training-based least-squares channel estimation and spatial noise
//! covariance estimation.
//!
//! Both estimators operate on the received samples at the training positions
//! only. Residuals (and LS rows) whose `L`-tap history would reach outside
//! the training window are dropped, leaving `K0 - L + 1` usable rows out of
//! a `K0`-symbol midamble; this costs a few equations but keeps unknown
//! payload symbols out of the estimates.

use crate::error::{Error, Result};
use crate::numkit::{hermitian_factor, toeplitz_shift, CholeskyFactor, HermitianMatrix};
use crate::sigmodel::SimoCir;
use num_complex::Complex64;

/// Relative diagonal loading for estimated covariances; short windows make
/// the sample covariance rank deficient, and stage two needs its inverse.
const COV_LOADING: f64 = 1e-6;
/// Absolute floor so that a zero-residual window still yields a usable
/// (tiny, isotropic) covariance.
const COV_FLOOR: f64 = 1e-30;

/// Spatial covariance of interference-plus-noise across diversity branches.
#[derive(Debug, Clone)]
pub struct NoiseCov {
    r: HermitianMatrix,
    factor: CholeskyFactor,
}

impl NoiseCov {
    /// Wraps a sample covariance: symmetrizes, applies diagonal loading
    /// `1e-6 * trace / N` (with an absolute floor), and factorizes.
    pub fn from_estimate(mut raw: HermitianMatrix) -> Result<Self> {
        raw.hermitize();
        let eps = (COV_LOADING * raw.trace() / raw.dim() as f64).max(COV_FLOOR);
        raw.load_diagonal(eps);
        let factor = raw
            .cholesky()
            .map_err(|_| Error::SingularMatrix("noise_covariance"))?;
        Ok(NoiseCov { r: raw, factor })
    }

    /// Uses a caller-supplied covariance as is (no loading); fails unless it
    /// is Hermitian positive definite.
    pub fn from_matrix(mut m: HermitianMatrix) -> Result<Self> {
        m.hermitize();
        let factor = m
            .cholesky()
            .map_err(|_| Error::SingularMatrix("noise_covariance"))?;
        Ok(NoiseCov { r: m, factor })
    }

    pub fn scaled_identity(dim: usize, n0: f64) -> Result<Self> {
        if !(n0 > 0.0) || !n0.is_finite() {
            return Err(Error::Config(format!(
                "noise covariance needs a positive variance, got {}",
                n0
            )));
        }
        Self::from_matrix(HermitianMatrix::scaled_identity(dim, n0))
    }

    pub fn dim(&self) -> usize {
        self.r.dim()
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.r
    }

    /// `R^{-1} x`.
    pub fn solve(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.factor.solve(x)
    }

    /// Whitening transform `L^{-1} x` where `R = L L^H`.
    pub fn whiten(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.factor.forward(x)
    }

    pub fn condition_estimate(&self) -> Option<f64> {
        self.r.condition_estimate()
    }
}

/// Least-squares channel estimate from the training window.
///
/// `windows[n]` holds the `K0` received samples of branch `n` at the
/// training positions, `training` the `K0` known symbols. Only the
/// `K0 - L + 1` rows with full in-window history enter the fit:
/// `h_hat = (S^H S)^{-1} S^H y` with `S` the shift matrix of the training.
pub fn ls_channel_estimate(
    windows: &[Vec<Complex64>],
    training: &[Complex64],
    l: usize,
) -> Result<SimoCir> {
    let k0 = training.len();
    if l == 0 {
        return Err(Error::InvalidDimension(
            "ls_channel_estimate: L must be positive".into(),
        ));
    }
    if k0 < l {
        return Err(Error::InsufficientTraining(format!(
            "training window {} shorter than channel ({} taps)",
            k0, l
        )));
    }
    if windows.is_empty() || windows.iter().any(|w| w.len() != k0) {
        return Err(Error::InvalidDimension(
            "ls_channel_estimate: window/training length mismatch".into(),
        ));
    }
    let s = toeplitz_shift(training, l)?;
    let rows = s.len();

    // Normal equations, factored once and reused across branches.
    let gram = HermitianMatrix::from_fn(l, |i, j| {
        let mut acc = Complex64::default();
        for row in &s {
            acc += row[i].conj() * row[j];
        }
        acc
    });
    let factor = hermitian_factor(&gram).map_err(|_| Error::SingularMatrix("ls_channel_estimate"))?;

    let mut taps = Vec::with_capacity(windows.len());
    for w in windows {
        let mut rhs = vec![Complex64::default(); l];
        for (r, row) in s.iter().enumerate().take(rows) {
            let y = w[l - 1 + r];
            for (j, &sv) in row.iter().enumerate() {
                rhs[j] += sv.conj() * y;
            }
        }
        taps.push(factor.solve(&rhs));
    }
    SimoCir::from_taps(taps)
}

/// Spatial interference-plus-noise covariance from training residuals:
/// `z_k = y_k - sum_l h_hat_l x_{k-l}`, averaged over the in-window rows,
/// then symmetrized and loaded.
pub fn noise_covariance(
    windows: &[Vec<Complex64>],
    training: &[Complex64],
    cir: &SimoCir,
) -> Result<NoiseCov> {
    let k0 = training.len();
    let l = cir.n_taps();
    let n = cir.n_branches();
    if windows.len() != n || windows.iter().any(|w| w.len() != k0) {
        return Err(Error::InvalidDimension(
            "noise_covariance: window/branch mismatch".into(),
        ));
    }
    if k0 < l {
        return Err(Error::InsufficientTraining(format!(
            "training window {} shorter than channel ({} taps)",
            k0, l
        )));
    }
    let rows = k0 - l + 1;
    let mut acc = HermitianMatrix::zeros(n);
    let mut z = vec![Complex64::default(); n];
    for r in 0..rows {
        let t = l - 1 + r;
        for (bn, w) in windows.iter().enumerate() {
            let mut pred = Complex64::default();
            for (tap, &h) in cir.branch(bn).iter().enumerate() {
                pred += h * training[t - tap];
            }
            z[bn] = w[t] - pred;
        }
        for i in 0..n {
            for j in 0..n {
                let v = acc.entry(i, j) + z[i] * z[j].conj();
                acc.set_entry(i, j, v);
            }
        }
    }
    let scale = 1.0 / rows as f64;
    for i in 0..n {
        for j in 0..n {
            let v = acc.entry(i, j) * scale;
            acc.set_entry(i, j, v);
        }
    }
    NoiseCov::from_estimate(acc)
}
