//! Stage two: the channel shortener that maximizes a mutual-information
//! lower bound under a banded Ungerboeck detection model, together with a
//! dense block-circulant oracle used for verification.
//!
//! The burst is treated as one length-`K` circular block, so the SIMO
//! channel becomes block circulant and diagonalizes over the DFT. The whole
//! design then runs per frequency bin:
//!
//! 1. per-branch channel spectra `lambda_{k,n}`;
//! 2. `Delta_k = 1 / (lambda_k^H R^{-1} lambda_k + 1)` (the MSE spectrum);
//! 3. `b_s = IDFT(Delta)` (entries of the circulant MSE matrix `B`);
//! 4. the banded factor `u` from the order-`nu` Toeplitz system in `b`;
//! 5. the target response `g` from the autocorrelation of `u`;
//! 6. `U_s = DFT(conj(u))`;
//! 7. `Theta_s = |U_s|^2 Delta_s R^{-1} lambda_s`;
//! 8. per-branch prefilters `v_n = IDFT(Theta_{.,n})`.
//!
//! The achieved rate is `I_R = K + log det(I+G) - Tr(B (I+G))` with both
//! terms evaluated in the circulant frame: `log det = sum_s log |U_s|^2`
//! and the trace in banded form. [`shorten_oracle`] recomputes everything
//! from explicit dense matrices.

use crate::error::{Error, Result};
use crate::estimate::NoiseCov;
use crate::numkit::{c, convolve, dft, hermitian_solve, idft, HermitianMatrix};
use crate::sigmodel::SimoCir;
use num_complex::Complex64;

/// Output of the shortener: per-branch prefilters, the banded target
/// response, its spectral factor, and the achieved rate in nats per block.
#[derive(Debug, Clone)]
pub struct ShorteningSolution {
    /// `v[n]`: `K` circular-filter taps for diversity branch `n`.
    pub v: Vec<Vec<Complex64>>,
    /// Target response `[g_0 .. g_nu]`; `g_0` is real.
    pub g: Vec<Complex64>,
    /// Factor `[u_0 .. u_nu]` with `u_0` real positive; the autocorrelation
    /// of `u` reconstructs `I + G`.
    pub u: Vec<Complex64>,
    /// Achieved information-rate lower bound, nats per block.
    pub i_rate: f64,
    /// Circular block size `K`.
    pub block_size: usize,
}

impl ShorteningSolution {
    pub fn n_branches(&self) -> usize {
        self.v.len()
    }

    pub fn nu(&self) -> usize {
        self.g.len() - 1
    }

    /// Rate per symbol in bits.
    pub fn i_rate_bits_per_symbol(&self) -> f64 {
        self.i_rate / self.block_size as f64 / std::f64::consts::LN_2
    }

    /// Stable CSV dump of the solution (prefilter taps, `g`, `u`, rate).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("component,branch,tap,re,im\n");
        for (n, taps) in self.v.iter().enumerate() {
            for (k, t) in taps.iter().enumerate() {
                out.push_str(&format!("v,{},{},{:.8e},{:.8e}\n", n, k, t.re, t.im));
            }
        }
        for (k, t) in self.g.iter().enumerate() {
            out.push_str(&format!("g,0,{},{:.8e},{:.8e}\n", k, t.re, t.im));
        }
        for (k, t) in self.u.iter().enumerate() {
            out.push_str(&format!("u,0,{},{:.8e},{:.8e}\n", k, t.re, t.im));
        }
        out.push_str(&format!("i_rate_nats,0,0,{:.8e},0.0\n", self.i_rate));
        out.push_str(&format!(
            "i_rate_bits_per_symbol,0,0,{:.8e},0.0\n",
            self.i_rate_bits_per_symbol()
        ));
        out
    }
}

/// Per-bin intermediates of the design; exposed for verification.
#[derive(Debug, Clone)]
pub struct MilbWork {
    /// `lambda[k][n]`: channel spectrum of branch `n` at bin `k`.
    pub lambda: Vec<Vec<Complex64>>,
    /// `R^{-1} lambda_k` per bin.
    pub rinv_lambda: Vec<Vec<Complex64>>,
    /// MSE spectrum, each in `(0, 1]`.
    pub delta: Vec<f64>,
    /// IDFT of the MSE spectrum; `b[0]` is real positive.
    pub b: Vec<Complex64>,
    /// `U_s = DFT(conj(u))`.
    pub uspec: Vec<Complex64>,
    /// `Theta[s][n]`, the prefilter spectrum of branch `n`.
    pub theta: Vec<Vec<Complex64>>,
}

fn check_dims(cir: &SimoCir, r: &NoiseCov, nu: usize, k: usize) -> Result<()> {
    let l = cir.n_taps();
    if r.dim() != cir.n_branches() {
        return Err(Error::InvalidDimension(format!(
            "shorten: covariance dimension {} vs {} branches",
            r.dim(),
            cir.n_branches()
        )));
    }
    if k < l {
        return Err(Error::InvalidDimension(format!(
            "shorten: block size {} shorter than channel ({} taps)",
            k, l
        )));
    }
    if 2 * nu + 1 > k {
        return Err(Error::InvalidMemory(format!(
            "shorten: band 2*{}+1 exceeds block size {}",
            nu, k
        )));
    }
    Ok(())
}

/// Solves the order-`nu` banded factor from the sequence `b`:
/// `u_0 = 1/sqrt(b_0 - b_nu B_nu^{-1} b_nu^H)`,
/// `[u_1..u_nu] = -u_0 b_nu B_nu^{-1}`.
fn optimal_u(b: &dyn Fn(usize) -> Complex64, nu: usize) -> Result<Vec<Complex64>> {
    let b0 = b(0).re;
    if !(b0 > 0.0) || !b0.is_finite() {
        return Err(Error::ShorteningDegenerate(format!(
            "b_0 = {} is not positive",
            b0
        )));
    }
    if nu == 0 {
        return Ok(vec![c(1.0 / b0.sqrt(), 0.0)]);
    }
    let bmat = HermitianMatrix::from_fn(nu, |i, j| {
        if i >= j {
            b(i - j)
        } else {
            b(j - i).conj()
        }
    });
    let bvec: Vec<Complex64> = (1..=nu).map(|m| b(m)).collect();
    let w = hermitian_solve(&bmat, &bvec)
        .map_err(|_| Error::ShorteningDegenerate("banded subsystem is singular".into()))?;
    let quad: f64 = bvec
        .iter()
        .zip(w.iter())
        .map(|(bv, wv)| (bv.conj() * wv).re)
        .sum();
    let pe = b0 - quad;
    if !(pe > 0.0) || !pe.is_finite() {
        return Err(Error::ShorteningDegenerate(format!(
            "prediction error {} is not positive",
            pe
        )));
    }
    let u0 = 1.0 / pe.sqrt();
    let mut u = Vec::with_capacity(nu + 1);
    u.push(c(u0, 0.0));
    u.extend(w.iter().map(|wv| -wv.conj() * u0));
    Ok(u)
}

/// `g_m = sum_j u_j conj(u_{j+m})`, with 1 subtracted from `g_0`.
fn g_from_u(u: &[Complex64]) -> Vec<Complex64> {
    let nu = u.len() - 1;
    (0..=nu)
        .map(|m| {
            let mut acc = Complex64::default();
            for j in 0..=(nu - m) {
                acc += u[j] * u[j + m].conj();
            }
            if m == 0 {
                acc -= c(1.0, 0.0);
            }
            acc
        })
        .collect()
}

/// `I_R = K + sum_s log |U_s|^2 - K (b_0 (1+g_0) + 2 sum_m Re(b_m g_m^*))`.
fn i_rate_closed_form(
    uspec: &[Complex64],
    b: &[Complex64],
    g: &[Complex64],
    k: usize,
) -> Result<f64> {
    let mut logdet = 0.0;
    for us in uspec {
        let p = us.norm_sqr();
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::ShorteningDegenerate(
                "target spectrum touches zero".into(),
            ));
        }
        logdet += p.ln();
    }
    let mut tr = b[0].re * (1.0 + g[0].re);
    for (m, gm) in g.iter().enumerate().skip(1) {
        tr += 2.0 * (b[m] * gm.conj()).re;
    }
    Ok(k as f64 + logdet - k as f64 * tr)
}

/// Designs the shortener for a channel estimate and noise covariance at
/// trellis memory `nu` over a circular block of `k` samples.
pub fn shorten(cir: &SimoCir, r: &NoiseCov, nu: usize, k: usize) -> Result<ShorteningSolution> {
    Ok(shorten_with_work(cir, r, nu, k)?.0)
}

/// [`shorten`] plus the per-bin intermediates.
pub fn shorten_with_work(
    cir: &SimoCir,
    r: &NoiseCov,
    nu: usize,
    k: usize,
) -> Result<(ShorteningSolution, MilbWork)> {
    check_dims(cir, r, nu, k)?;
    let n = cir.n_branches();

    // Step 1: per-branch spectra, gathered per bin.
    let spectra: Vec<Vec<Complex64>> = (0..n)
        .map(|bn| dft(cir.branch(bn), k))
        .collect::<Result<_>>()?;
    let lambda: Vec<Vec<Complex64>> = (0..k)
        .map(|bin| (0..n).map(|bn| spectra[bn][bin]).collect())
        .collect();

    // Step 2: MSE spectrum.
    let rinv_lambda: Vec<Vec<Complex64>> = lambda.iter().map(|lk| r.solve(lk)).collect();
    let delta: Vec<f64> = lambda
        .iter()
        .zip(rinv_lambda.iter())
        .map(|(lk, rl)| {
            let q: f64 = lk
                .iter()
                .zip(rl.iter())
                .map(|(a, b)| (a.conj() * b).re)
                .sum::<f64>()
                .max(0.0);
            1.0 / (q + 1.0)
        })
        .collect();

    // Step 3.
    let delta_c: Vec<Complex64> = delta.iter().map(|&d| c(d, 0.0)).collect();
    let b = idft(&delta_c, k)?;

    // Steps 4 and 5.
    let bfn = |m: usize| b[m];
    let u = optimal_u(&bfn, nu)?;
    let g = g_from_u(&u);

    // Step 6.
    let u_conj: Vec<Complex64> = u.iter().map(|v| v.conj()).collect();
    let uspec = dft(&u_conj, k)?;

    // Step 7.
    let theta: Vec<Vec<Complex64>> = (0..k)
        .map(|s| {
            let scale = uspec[s].norm_sqr() * delta[s];
            rinv_lambda[s].iter().map(|&v| v * scale).collect()
        })
        .collect();

    // Step 8.
    let mut v = Vec::with_capacity(n);
    for bn in 0..n {
        let col: Vec<Complex64> = theta.iter().map(|t| t[bn]).collect();
        v.push(idft(&col, k)?);
    }

    let i_rate = i_rate_closed_form(&uspec, &b, &g, k)?;
    log::debug!(
        "shorten: nu={} K={} I_R={:.6} nats/block = {:.6} bits/symbol",
        nu,
        k,
        i_rate,
        i_rate / k as f64 / std::f64::consts::LN_2
    );

    let sol = ShorteningSolution {
        v,
        g,
        u,
        i_rate,
        block_size: k,
    };
    let work = MilbWork {
        lambda,
        rinv_lambda,
        delta,
        b,
        uspec,
        theta,
    };
    Ok((sol, work))
}

/// The achieved rate alone.
pub fn info_rate(cir: &SimoCir, r: &NoiseCov, nu: usize, k: usize) -> Result<f64> {
    Ok(shorten_with_work(cir, r, nu, k)?.0.i_rate)
}

/// Filters each branch with its prefilter and sums the branches into one
/// stream: spectrally, `yhat_s = sum_n conj(Theta_{s,n}) Y_{n,s}` (the
/// adjoint of the prefilter matrix acting on the stacked block), then an
/// IDFT back to time. Streams shorter than the block are zero padded.
pub fn apply_prefilter(
    sol: &ShorteningSolution,
    streams: &[Vec<Complex64>],
) -> Result<Vec<Complex64>> {
    let k = sol.block_size;
    if streams.len() != sol.n_branches() {
        return Err(Error::InvalidDimension(format!(
            "apply_prefilter: {} streams for {} prefilters",
            streams.len(),
            sol.n_branches()
        )));
    }
    let mut acc = vec![Complex64::default(); k];
    for (vn, yn) in sol.v.iter().zip(streams.iter()) {
        if yn.len() > k {
            return Err(Error::InvalidDimension(format!(
                "apply_prefilter: stream length {} exceeds block size {}",
                yn.len(),
                k
            )));
        }
        let theta_n = dft(vn, k)?;
        let yspec = dft(yn, k)?;
        for s in 0..k {
            acc[s] += theta_n[s].conj() * yspec[s];
        }
    }
    idft(&acc, k)
}

// ---------------------------------------------------------------------------
// Dense block-circulant oracle
// ---------------------------------------------------------------------------

/// Maximum block size the dense oracle accepts.
const ORACLE_MAX_K: usize = 64;

/// Dense-matrix recomputation of [`shorten`]: builds the `NK x K` block
/// circulant channel matrix explicitly, inverts
/// `H^H (I (x) R^{-1}) H + I` for the MSE matrix, reads the banded
/// subsystem off its first column, and extracts the prefilters from
/// `(H H^H + I (x) R)^{-1} H (I+G)`.
pub fn shorten_oracle(
    cir: &SimoCir,
    r: &NoiseCov,
    nu: usize,
    k: usize,
) -> Result<ShorteningSolution> {
    check_dims(cir, r, nu, k)?;
    if k > ORACLE_MAX_K {
        return Err(Error::OracleScale(format!(
            "dense oracle limited to K <= {}, got {}",
            ORACLE_MAX_K, k
        )));
    }
    let n = cir.n_branches();
    let l = cir.n_taps();
    let nk = n * k;

    // Block circulant H, rows indexed t*N + branch.
    let mut h = vec![vec![Complex64::default(); k]; nk];
    for col in 0..k {
        for tap in 0..l {
            let t = (col + tap) % k;
            for bn in 0..n {
                h[t * n + bn][col] += cir.branch(bn)[tap];
            }
        }
    }

    // Dense R^{-1}.
    let rinv: Vec<Vec<Complex64>> = (0..n)
        .map(|j| {
            let mut e = vec![Complex64::default(); n];
            e[j] = c(1.0, 0.0);
            r.solve(&e)
        })
        .collect();

    // W = (I (x) R^{-1}) H.
    let mut w = vec![vec![Complex64::default(); k]; nk];
    for t in 0..k {
        for bn in 0..n {
            for col in 0..k {
                let mut acc = Complex64::default();
                for bm in 0..n {
                    acc += rinv[bm][bn] * h[t * n + bm][col];
                }
                w[t * n + bn][col] = acc;
            }
        }
    }

    // B = (H^H W + I)^{-1}.
    let m1 = HermitianMatrix::from_fn(k, |i, j| {
        let mut acc = if i == j {
            c(1.0, 0.0)
        } else {
            Complex64::default()
        };
        for row in 0..nk {
            acc += h[row][i].conj() * w[row][j];
        }
        acc
    });
    let f1 = m1
        .cholesky()
        .map_err(|_| Error::SingularMatrix("shorten_oracle"))?;
    let bdense: Vec<Vec<Complex64>> = (0..k)
        .map(|j| {
            let mut e = vec![Complex64::default(); k];
            e[j] = c(1.0, 0.0);
            f1.solve(&e)
        })
        .collect();
    // bdense[j] is column j; entries b_s read off the first column.
    let bcol0: Vec<Complex64> = (0..k).map(|i| bdense[0][i]).collect();

    let bfn = |m: usize| bcol0[m];
    let u = optimal_u(&bfn, nu)?;

    // g through the generic convolution route: u * reverse(conj(u)).
    let u_rev_conj: Vec<Complex64> = u.iter().rev().map(|v| v.conj()).collect();
    let conv = convolve(&u, &u_rev_conj)?;
    let g: Vec<Complex64> = (0..=nu)
        .map(|m| {
            let v = conv[nu - m];
            if m == 0 {
                v - c(1.0, 0.0)
            } else {
                v
            }
        })
        .collect();

    // Dense banded circulant I + G.
    let mut igc = vec![vec![Complex64::default(); k]; k];
    for (i, row) in igc.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            let d = (i + k - j) % k;
            if d == 0 {
                *e = c(1.0 + g[0].re, 0.0);
            } else if d <= nu {
                *e = g[d];
            } else if k - d <= nu {
                *e = g[k - d].conj();
            }
        }
    }

    // I_R from dense log det and trace.
    let igc_h = HermitianMatrix::from_fn(k, |i, j| igc[i][j]);
    let logdet = igc_h
        .cholesky()
        .map_err(|_| Error::ShorteningDegenerate("dense I+G not positive definite".into()))?
        .log_det();
    let mut tr = 0.0;
    for i in 0..k {
        for j in 0..k {
            // B[i][j] = column j entry i.
            tr += (bdense[j][i] * igc[j][i]).re;
        }
    }
    let i_rate = k as f64 + logdet - tr;

    // V = (H H^H + I (x) R)^{-1} H (I+G); prefilters from the first block
    // column: v_n[t] = V[(t,n), 0].
    let m2 = HermitianMatrix::from_fn(nk, |row_i, row_j| {
        let mut acc = Complex64::default();
        for col in 0..k {
            acc += h[row_i][col] * h[row_j][col].conj();
        }
        let (ti, ni) = (row_i / n, row_i % n);
        let (tj, nj) = (row_j / n, row_j % n);
        if ti == tj {
            acc += r.matrix().entry(ni, nj);
        }
        acc
    });
    let f2 = m2
        .cholesky()
        .map_err(|_| Error::SingularMatrix("shorten_oracle"))?;
    // Only the first column of V is needed: rhs = H * (I+G) e_0.
    let ig_col0: Vec<Complex64> = (0..k).map(|i| igc[i][0]).collect();
    let mut rhs = vec![Complex64::default(); nk];
    for (row, hr) in h.iter().enumerate() {
        let mut acc = Complex64::default();
        for (col, &hv) in hr.iter().enumerate() {
            acc += hv * ig_col0[col];
        }
        rhs[row] = acc;
    }
    let vcol = f2.solve(&rhs);
    let v: Vec<Vec<Complex64>> = (0..n)
        .map(|bn| (0..k).map(|t| vcol[t * n + bn]).collect())
        .collect();

    Ok(ShorteningSolution {
        v,
        g,
        u,
        i_rate,
        block_size: k,
    })
}

/// Dense circulant MSE matrix of the oracle, exposed for structure checks.
pub fn oracle_mse_matrix(cir: &SimoCir, r: &NoiseCov, k: usize) -> Result<Vec<Vec<Complex64>>> {
    if k > ORACLE_MAX_K {
        return Err(Error::OracleScale(format!(
            "dense oracle limited to K <= {}, got {}",
            ORACLE_MAX_K, k
        )));
    }
    check_dims(cir, r, 0, k)?;
    let n = cir.n_branches();
    let l = cir.n_taps();
    let nk = n * k;
    let mut h = vec![vec![Complex64::default(); k]; nk];
    for col in 0..k {
        for tap in 0..l {
            let t = (col + tap) % k;
            for bn in 0..n {
                h[t * n + bn][col] += cir.branch(bn)[tap];
            }
        }
    }
    let rinv: Vec<Vec<Complex64>> = (0..n)
        .map(|j| {
            let mut e = vec![Complex64::default(); n];
            e[j] = c(1.0, 0.0);
            r.solve(&e)
        })
        .collect();
    let mut w = vec![vec![Complex64::default(); k]; nk];
    for t in 0..k {
        for bn in 0..n {
            for col in 0..k {
                let mut acc = Complex64::default();
                for bm in 0..n {
                    acc += rinv[bm][bn] * h[t * n + bm][col];
                }
                w[t * n + bn][col] = acc;
            }
        }
    }
    let m1 = HermitianMatrix::from_fn(k, |i, j| {
        let mut acc = if i == j {
            c(1.0, 0.0)
        } else {
            Complex64::default()
        };
        for row in 0..nk {
            acc += h[row][i].conj() * w[row][j];
        }
        acc
    });
    let f1 = m1
        .cholesky()
        .map_err(|_| Error::SingularMatrix("shorten_oracle"))?;
    let cols: Vec<Vec<Complex64>> = (0..k)
        .map(|j| {
            let mut e = vec![Complex64::default(); k];
            e[j] = c(1.0, 0.0);
            f1.solve(&e)
        })
        .collect();
    Ok((0..k)
        .map(|i| (0..k).map(|j| cols[j][i]).collect())
        .collect())
}
