//! Stage one: the N x N bank of short least-squares filters that suppresses
//! co-channel interference while preserving the target user's ISI channel.
//!
//! For output branch `n` the stacked filter `W_n` minimizes
//! `|sum_m w_{n,m} * y^m - h_hat^n * x|^2` over the training window, where
//! `x` is the training sequence and `h_hat^n` the stage-zero channel
//! estimate. A causal `L_w`-tap filter aligns its output `L_w - 1` samples
//! late, so the bank's nominal pass-through is a pure delay of `L_w - 1`
//! samples; [`apply_cci_filters`] removes that delay again, which keeps the
//! midamble position invariant and discards the leading transient.
//!
//! Only design rows whose full channel and filter history lies inside the
//! training window are used (`K0 - L_w - L + 2` equations), mirroring the
//! windowing policy of the estimators.

use crate::error::{Error, Result};
use crate::numkit::{c, HermitianMatrix};
use crate::sigmodel::SimoCir;
use num_complex::Complex64;

/// Relative diagonal loading for the design Gram matrix. Strong enough to
/// keep degenerate training observations invertible, weak enough that a
/// consistent noise-free system is still solved to ~1e-9.
const DESIGN_LOADING: f64 = 1e-9;

/// Bank of `N x N` interference-suppression filters, `L_w` taps each.
#[derive(Debug, Clone)]
pub struct CciFilterBank {
    /// `w[n][m]` filters input branch `m` into output branch `n`.
    w: Vec<Vec<Vec<Complex64>>>,
    lw: usize,
}

impl CciFilterBank {
    pub fn n_branches(&self) -> usize {
        self.w.len()
    }

    pub fn lw(&self) -> usize {
        self.lw
    }

    pub fn filter(&self, n: usize, m: usize) -> &[Complex64] {
        &self.w[n][m]
    }

    /// Pass-through bank: a unit tap at index `L_w - 1` on the diagonal
    /// (the bank's nominal delay), zeros elsewhere.
    pub fn identity(n: usize, lw: usize) -> Self {
        let mut w = vec![vec![vec![Complex64::default(); lw]; n]; n];
        for (i, row) in w.iter_mut().enumerate() {
            row[i][lw - 1] = c(1.0, 0.0);
        }
        CciFilterBank { w, lw }
    }

    pub fn from_filters(w: Vec<Vec<Vec<Complex64>>>) -> Result<Self> {
        let n = w.len();
        if n == 0 || w.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidDimension(
                "CciFilterBank: bank must be N x N".into(),
            ));
        }
        let lw = w[0][0].len();
        if lw == 0 || w.iter().flatten().any(|f| f.len() != lw) {
            return Err(Error::InvalidDimension(
                "CciFilterBank: filters must share a positive tap count".into(),
            ));
        }
        Ok(CciFilterBank { w, lw })
    }
}

/// Designs the filter bank from the received training windows (one `K0`
/// sample window per branch), the training sequence, and the stage-zero
/// channel estimate.
pub fn design_cci_filters(
    windows: &[Vec<Complex64>],
    training: &[Complex64],
    cir: &SimoCir,
    lw: usize,
) -> Result<CciFilterBank> {
    let n = windows.len();
    let k0 = training.len();
    let l = cir.n_taps();
    if lw == 0 {
        return Err(Error::Design("L_w must be positive".into()));
    }
    if n == 0 || cir.n_branches() != n {
        return Err(Error::InvalidDimension(
            "design_cci_filters: branch count mismatch".into(),
        ));
    }
    if windows.iter().any(|w| w.len() != k0) {
        return Err(Error::InvalidDimension(
            "design_cci_filters: window/training length mismatch".into(),
        ));
    }
    if k0 < l + lw - 1 {
        return Err(Error::Design(format!(
            "training window {} too short for L = {} and L_w = {}",
            k0, l, lw
        )));
    }

    // Equation rows r = L-1 .. K0-L_w: filtered output at window position
    // L_w-1+r is matched to the clean target-channel signal at position r.
    let rows: Vec<usize> = (l - 1..=k0 - lw).collect();
    let unknowns = n * lw;
    let mut a = vec![vec![Complex64::default(); unknowns]; rows.len()];
    for (e, &r) in rows.iter().enumerate() {
        for m in 0..n {
            for j in 0..lw {
                a[e][m * lw + j] = windows[m][lw - 1 + r - j];
            }
        }
    }
    let mut rhs = vec![vec![Complex64::default(); rows.len()]; n];
    for (bn, rhs_n) in rhs.iter_mut().enumerate() {
        for (e, &r) in rows.iter().enumerate() {
            let mut acc = Complex64::default();
            for (tap, &h) in cir.branch(bn).iter().enumerate() {
                acc += h * training[r - tap];
            }
            rhs_n[e] = acc;
        }
    }

    let stacked = solve_ls(&a, &rhs)?;

    let w = stacked
        .into_iter()
        .map(|wn| wn.chunks(lw).map(|ch| ch.to_vec()).collect())
        .collect();
    Ok(CciFilterBank { w, lw })
}

/// Least-squares solve for all right-hand sides, switching between the
/// normal-equations form (tall system) and the minimum-norm form (fat
/// system); both are diagonally loaded.
fn solve_ls(a: &[Vec<Complex64>], rhs: &[Vec<Complex64>]) -> Result<Vec<Vec<Complex64>>> {
    let rows = a.len();
    let cols = a[0].len();
    let energy: f64 = a.iter().flatten().map(|v| v.norm_sqr()).sum();
    if !(energy > 0.0) {
        return Err(Error::Design(
            "degenerate training: all-zero observations".into(),
        ));
    }

    if rows >= cols {
        // (A^H A + eps I) w = A^H b
        let mut gram = HermitianMatrix::from_fn(cols, |i, j| {
            let mut acc = Complex64::default();
            for row in a {
                acc += row[i].conj() * row[j];
            }
            acc
        });
        gram.load_diagonal(DESIGN_LOADING * gram.trace() / cols as f64);
        let factor = gram
            .cholesky()
            .map_err(|_| Error::SingularMatrix("design_cci_filters"))?;
        rhs.iter()
            .map(|b| {
                let mut atb = vec![Complex64::default(); cols];
                for (row, &bv) in a.iter().zip(b.iter()) {
                    for (i, &av) in row.iter().enumerate() {
                        atb[i] += av.conj() * bv;
                    }
                }
                Ok(factor.solve(&atb))
            })
            .collect()
    } else {
        // w = A^H (A A^H + eps I)^{-1} b
        let mut outer = HermitianMatrix::from_fn(rows, |i, j| {
            let mut acc = Complex64::default();
            for p in 0..cols {
                acc += a[i][p] * a[j][p].conj();
            }
            acc
        });
        outer.load_diagonal(DESIGN_LOADING * outer.trace() / rows as f64);
        let factor = outer
            .cholesky()
            .map_err(|_| Error::SingularMatrix("design_cci_filters"))?;
        rhs.iter()
            .map(|b| {
                let y = factor.solve(b);
                let mut w = vec![Complex64::default(); cols];
                for (row, &yv) in a.iter().zip(y.iter()) {
                    for (i, &av) in row.iter().enumerate() {
                        w[i] += av.conj() * yv;
                    }
                }
                Ok(w)
            })
            .collect()
    }
}

/// Applies the bank: `y_out_n[t] = sum_m (w_{n,m} * y^m)[t + L_w - 1]`,
/// i.e. the full convolution re-aligned so the bank's nominal delay is
/// removed. Output streams have the same length as the inputs; the trailing
/// `L_w - 1` positions mix in zero padding beyond the burst.
pub fn apply_cci_filters(
    bank: &CciFilterBank,
    streams: &[Vec<Complex64>],
) -> Result<Vec<Vec<Complex64>>> {
    let n = bank.n_branches();
    if streams.len() != n {
        return Err(Error::InvalidDimension(format!(
            "apply_cci_filters: bank has {} branches, got {} streams",
            n,
            streams.len()
        )));
    }
    let t_len = streams[0].len();
    if streams.iter().any(|s| s.len() != t_len) {
        return Err(Error::InvalidDimension(
            "apply_cci_filters: streams differ in length".into(),
        ));
    }
    let lw = bank.lw();
    let mut out = vec![vec![Complex64::default(); t_len]; n];
    for (bn, out_n) in out.iter_mut().enumerate() {
        for m in 0..n {
            let w = bank.filter(bn, m);
            let y = &streams[m];
            for (t, o) in out_n.iter_mut().enumerate() {
                let mut acc = Complex64::default();
                for (j, &wv) in w.iter().enumerate() {
                    let idx = t + lw - 1;
                    if idx >= j && idx - j < t_len {
                        acc += wv * y[idx - j];
                    }
                }
                *o += acc;
            }
        }
    }
    Ok(out)
}

/// Regularized design objective actually minimized by
/// [`design_cci_filters`]: `|A w - b|^2 + eps |w|^2` over the in-window
/// design rows. Exposed for diagnostics and tests.
pub fn design_residual(
    windows: &[Vec<Complex64>],
    training: &[Complex64],
    cir: &SimoCir,
    bank: &CciFilterBank,
    out_branch: usize,
) -> Result<f64> {
    let n = windows.len();
    let k0 = training.len();
    let l = cir.n_taps();
    let lw = bank.lw();
    if k0 < l + lw - 1 {
        return Err(Error::Design("training window too short".into()));
    }
    let rows: Vec<usize> = (l - 1..=k0 - lw).collect();
    let mut res = 0.0;
    let mut wnorm = 0.0;
    for &r in &rows {
        let mut filt = Complex64::default();
        for m in 0..n {
            for (j, &wv) in bank.filter(out_branch, m).iter().enumerate() {
                filt += wv * windows[m][lw - 1 + r - j];
            }
        }
        let mut target = Complex64::default();
        for (tap, &h) in cir.branch(out_branch).iter().enumerate() {
            target += h * training[r - tap];
        }
        res += (filt - target).norm_sqr();
    }
    for m in 0..n {
        for &wv in bank.filter(out_branch, m) {
            wnorm += wv.norm_sqr();
        }
    }
    // Same loading scale the solver used: the Gram trace sums each used
    // window sample once per tap column.
    let mut tr = 0.0;
    for &r in &rows {
        for m in 0..n {
            for j in 0..lw {
                tr += windows[m][lw - 1 + r - j].norm_sqr();
            }
        }
    }
    let rows_n = rows.len();
    let cols = n * lw;
    let eps = if rows_n >= cols {
        DESIGN_LOADING * tr / cols as f64
    } else {
        DESIGN_LOADING * tr / rows_n as f64
    };
    Ok(res + eps * wnorm)
}
