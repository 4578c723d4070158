//! Trellis equalizers and their bookkeeping.
//!
//! Two detectors share the reduced-state trellis over `S^nu` states:
//!
//! - [`mlm_ungerboeck`]: single-stream max-log-MAP on the Ungerboeck branch
//!   metric `-2 Re{x_k^* (yhat_k - sum_l g_l x_{k-l})} + g_0 |x_k|^2`, fed by
//!   the stage-two prefilter output. No channel tails survive the shortener,
//!   so no feedback is needed.
//! - [`ddf_mlm_forney`]: per-branch Forney (Euclidean) metric with
//!   per-survivor decision feedback canceling the taps beyond the trellis
//!   memory; the baseline detector behind the minimum-phase prefilter.
//!
//! Both report hard symbol labels, max-log bit LLRs (positive means bit 1),
//! and a count of the real multiplications actually executed in the branch
//! metric loops. [`full_mlse_oracle`] does exhaustive sequence search for
//! cross-checks, and [`count_ops`] evaluates the per-stage complexity
//! formulas the implementations are held to.

use crate::error::{Error, Result};
use crate::estimate::NoiseCov;
use crate::numkit::{c, dft, idft};
use crate::sigmodel::{Alphabet, SimoCir};
use num_complex::Complex64;

/// Saturation magnitude for LLRs when no surviving path disagrees on a bit.
const LLR_SAT: f64 = 1e4;

/// Branch metric families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    /// Matched-filter-domain metric with target response `g`; single stream.
    Ungerboeck,
    /// Euclidean metric with decision feedback beyond the trellis memory.
    ForneyDdf,
    /// Euclidean metric with the trellis covering the whole channel.
    ForneyFull,
}

/// Trellis configuration shared by the equalizers and the op counters.
#[derive(Debug, Clone)]
pub struct TrellisSpec {
    pub alphabet: Alphabet,
    pub nu: usize,
    pub metric: MetricKind,
    /// Total channel length `L`; fixes the feedback depth `L - 1 - nu`.
    pub l_full: usize,
}

impl TrellisSpec {
    pub fn new(alphabet: Alphabet, nu: usize, metric: MetricKind, l_full: usize) -> Result<Self> {
        alphabet
            .size()
            .checked_pow(nu as u32)
            .filter(|&s| s <= 1 << 20)
            .ok_or_else(|| {
                Error::InvalidMemory(format!(
                    "trellis with S={} nu={} has too many states",
                    alphabet.size(),
                    nu
                ))
            })?;
        Ok(TrellisSpec {
            alphabet,
            nu,
            metric,
            l_full,
        })
    }

    pub fn n_states(&self) -> usize {
        self.alphabet.size().pow(self.nu as u32)
    }
}

/// Soft and hard equalizer output.
#[derive(Debug, Clone)]
pub struct EqualizerOutput {
    /// Hard symbol labels (bit labels, MSB first).
    pub hard: Vec<usize>,
    /// Bit LLRs, `bits_per_symbol` per trellis stage; positive means 1.
    pub llrs: Vec<f64>,
    /// Real multiplications executed in the branch-metric inner loop.
    pub real_mults: u64,
}

impl EqualizerOutput {
    pub fn hard_bits(&self, alphabet: &Alphabet) -> Vec<u8> {
        alphabet.bits_from_labels(&self.hard)
    }
}

// ---------------------------------------------------------------------------
// Ungerboeck max-log-MAP
// ---------------------------------------------------------------------------

/// Max-log forward/backward detection of `yhat` under the banded Ungerboeck
/// metric with target response `g = [g_0 .. g_nu]`. Symbols before the burst
/// are taken as zero; `yhat` must already be de-rotated.
pub fn mlm_ungerboeck(
    yhat: &[Complex64],
    g: &[Complex64],
    spec: &TrellisSpec,
) -> Result<EqualizerOutput> {
    if yhat.is_empty() {
        return Err(Error::InvalidDimension("mlm_ungerboeck: empty stream".into()));
    }
    if g.len() != spec.nu + 1 {
        return Err(Error::InvalidDimension(format!(
            "mlm_ungerboeck: {} target coefficients for memory {}",
            g.len(),
            spec.nu
        )));
    }
    let t_len = yhat.len();
    let s = spec.alphabet.size();
    let nu = spec.nu;
    let n_states = spec.n_states();
    let n_branches = n_states * s;
    let pts = spec.alphabet.points();
    let bps = spec.alphabet.bits_per_symbol();
    // g_0 |x|^2 per label, precomputed once (excluded from the mult count).
    let g0abs2: Vec<f64> = pts.iter().map(|p| g[0].re * p.norm_sqr()).collect();
    let s_pow: Vec<usize> = (0..=nu).map(|i| s.pow(i as u32)).collect();
    let shift_mod = if nu == 0 { 1 } else { s_pow[nu - 1] };

    let mut mults: u64 = 0;
    // Branch metrics (to maximize), stored per stage for the backward pass.
    let mut metrics = vec![0.0f64; t_len * n_branches];
    for k in 0..t_len {
        let row = &mut metrics[k * n_branches..(k + 1) * n_branches];
        for state in 0..n_states {
            for a in 0..s {
                // Inner ISI sum over the hypothesized history; positions
                // before the burst contribute a zero symbol (the multiply
                // still runs, matching the per-branch operation count).
                let mut inner = Complex64::default();
                for l in 1..=nu {
                    let digit = (state / s_pow[l - 1]) % s;
                    let x_past = if k >= l { pts[digit] } else { Complex64::default() };
                    inner += g[l] * x_past;
                    mults += 4;
                }
                let z = yhat[k] - inner;
                let xa = pts[a];
                let corr = xa.re * z.re + xa.im * z.im;
                mults += 2;
                row[state * s + a] = 2.0 * corr - g0abs2[a];
            }
        }
    }

    // Forward pass from the unique zero-history state.
    let mut alpha = vec![f64::NEG_INFINITY; (t_len + 1) * n_states];
    alpha[0] = 0.0;
    for k in 0..t_len {
        let row = &metrics[k * n_branches..(k + 1) * n_branches];
        let (prev, next) = alpha.split_at_mut((k + 1) * n_states);
        let prev = &prev[k * n_states..];
        let next = &mut next[..n_states];
        for state in 0..n_states {
            let base = prev[state];
            if base == f64::NEG_INFINITY {
                continue;
            }
            for a in 0..s {
                let ns = if nu == 0 { 0 } else { a + s * (state % shift_mod) };
                let m = base + row[state * s + a];
                if m > next[ns] {
                    next[ns] = m;
                }
            }
        }
    }

    // Backward pass.
    let mut beta = vec![f64::NEG_INFINITY; (t_len + 1) * n_states];
    for v in beta[t_len * n_states..].iter_mut() {
        *v = 0.0;
    }
    for k in (0..t_len).rev() {
        let row = &metrics[k * n_branches..(k + 1) * n_branches];
        for state in 0..n_states {
            let mut best = f64::NEG_INFINITY;
            for a in 0..s {
                let ns = if nu == 0 { 0 } else { a + s * (state % shift_mod) };
                let m = row[state * s + a] + beta[(k + 1) * n_states + ns];
                if m > best {
                    best = m;
                }
            }
            beta[k * n_states + state] = best;
        }
    }

    // Per-symbol max-log posteriors, hard decisions, and bit LLRs.
    let mut hard = Vec::with_capacity(t_len);
    let mut llrs = Vec::with_capacity(t_len * bps);
    let mut delta = vec![f64::NEG_INFINITY; s];
    for k in 0..t_len {
        let row = &metrics[k * n_branches..(k + 1) * n_branches];
        for d in delta.iter_mut() {
            *d = f64::NEG_INFINITY;
        }
        for state in 0..n_states {
            let base = alpha[k * n_states + state];
            if base == f64::NEG_INFINITY {
                continue;
            }
            for a in 0..s {
                let ns = if nu == 0 { 0 } else { a + s * (state % shift_mod) };
                let m = base + row[state * s + a] + beta[(k + 1) * n_states + ns];
                if m > delta[a] {
                    delta[a] = m;
                }
            }
        }
        let mut best_a = 0usize;
        for a in 1..s {
            if delta[a] > delta[best_a] {
                best_a = a;
            }
        }
        hard.push(best_a);
        for i in 0..bps {
            let mut best1 = f64::NEG_INFINITY;
            let mut best0 = f64::NEG_INFINITY;
            for (a, &d) in delta.iter().enumerate() {
                if (a >> (bps - 1 - i)) & 1 == 1 {
                    if d > best1 {
                        best1 = d;
                    }
                } else if d > best0 {
                    best0 = d;
                }
            }
            let llr = match (best1.is_finite(), best0.is_finite()) {
                (true, true) => (best1 - best0).clamp(-LLR_SAT, LLR_SAT),
                (true, false) => LLR_SAT,
                (false, true) => -LLR_SAT,
                (false, false) => 0.0,
            };
            llrs.push(llr);
        }
    }

    Ok(EqualizerOutput {
        hard,
        llrs,
        real_mults: mults,
    })
}

// ---------------------------------------------------------------------------
// Forney decision-feedback Viterbi
// ---------------------------------------------------------------------------

/// Viterbi detection of `num_symbols` symbols from the per-branch streams
/// under the Forney metric, with per-survivor decision feedback canceling
/// taps `nu+1 .. L-1`. Stream samples beyond `num_symbols` (up to the
/// channel tail) are consumed as flush stages. LLRs come from metric
/// differences across the surviving paths, saturated when all survivors
/// agree.
pub fn ddf_mlm_forney(
    streams: &[Vec<Complex64>],
    cirs: &SimoCir,
    spec: &TrellisSpec,
    num_symbols: usize,
) -> Result<EqualizerOutput> {
    let n = cirs.n_branches();
    if streams.len() != n {
        return Err(Error::InvalidDimension(format!(
            "ddf_mlm_forney: {} streams for {} branches",
            streams.len(),
            n
        )));
    }
    if num_symbols == 0 || streams.iter().any(|st| st.len() < num_symbols) {
        return Err(Error::InvalidDimension(
            "ddf_mlm_forney: streams shorter than the symbol count".into(),
        ));
    }
    let l = cirs.n_taps();
    let nu = spec.nu.min(l.saturating_sub(1));
    let fb_depth = l - 1 - nu;
    let s = spec.alphabet.size();
    let n_states = s.pow(nu as u32);
    let pts = spec.alphabet.points();
    let bps = spec.alphabet.bits_per_symbol();
    let s_pow: Vec<usize> = (0..=nu).map(|i| s.pow(i as u32)).collect();
    let shift_mod = if nu == 0 { 1 } else { s_pow[nu - 1] };
    let t_len = num_symbols;
    let flush_len = streams[0].len().min(t_len + l - 1);

    let mut mults: u64 = 0;
    let mut metric = vec![f64::INFINITY; n_states];
    metric[0] = 0.0;
    // Feedback window per state: labels of x_{k-nu-1} .. x_{k-L+1}.
    let mut feedback = vec![0u16; n_states * fb_depth.max(1)];
    let mut survivors: Vec<(u32, u16)> = vec![(0, 0); t_len * n_states];

    let mut new_metric = vec![f64::INFINITY; n_states];
    let mut new_feedback = vec![0u16; n_states * fb_depth.max(1)];
    for k in 0..t_len {
        for v in new_metric.iter_mut() {
            *v = f64::INFINITY;
        }
        for state in 0..n_states {
            let base = metric[state];
            if base == f64::INFINITY {
                continue;
            }
            for a in 0..s {
                // Reconstruct the hypothesized received sample per branch.
                let mut gamma = 0.0f64;
                for bn in 0..n {
                    let taps = cirs.branch(bn);
                    let mut pred = pts[a] * taps[0];
                    mults += 4;
                    for lag in 1..=nu.min(k) {
                        let digit = (state / s_pow[lag - 1]) % s;
                        pred += taps[lag] * pts[digit];
                        mults += 4;
                    }
                    for lag in nu.min(k) + 1..=nu {
                        // Pre-burst positions: zero symbol, multiply still runs.
                        pred += taps[lag] * Complex64::default();
                        mults += 4;
                    }
                    for j in 0..fb_depth {
                        let lag = nu + 1 + j;
                        let x = if k >= lag {
                            pts[feedback[state * fb_depth + j] as usize]
                        } else {
                            Complex64::default()
                        };
                        pred += taps[lag] * x;
                        mults += 4;
                    }
                    let d = streams[bn][k] - pred;
                    gamma += d.norm_sqr();
                    mults += 2;
                }
                let total = base + gamma;
                let ns = if nu == 0 { 0 } else { a + s * (state % shift_mod) };
                if total < new_metric[ns] {
                    new_metric[ns] = total;
                    survivors[k * n_states + ns] = (state as u32, a as u16);
                    if fb_depth > 0 {
                        // Symbol leaving the trellis memory enters feedback.
                        let entering = if nu == 0 {
                            a as u16
                        } else {
                            ((state / s_pow[nu - 1]) % s) as u16
                        };
                        let (dst, src) = (ns * fb_depth, state * fb_depth);
                        new_feedback[dst] = entering;
                        for j in 1..fb_depth {
                            new_feedback[dst + j] = feedback[src + j - 1];
                        }
                    }
                }
            }
        }
        std::mem::swap(&mut metric, &mut new_metric);
        std::mem::swap(&mut feedback, &mut new_feedback);
    }

    // Flush stages: no new symbols, each survivor absorbs the channel tail
    // of its own recent history.
    for k in t_len..flush_len {
        let d = k - t_len; // tail offset
        for state in 0..n_states {
            if metric[state] == f64::INFINITY {
                continue;
            }
            let mut gamma = 0.0;
            for bn in 0..n {
                let taps = cirs.branch(bn);
                let mut pred = Complex64::default();
                for lag in d + 1..l {
                    let age = lag - d - 1; // x_{t_len-1-age}
                    let x = if age < nu {
                        pts[(survivor_digit(state, age, s, &s_pow)) as usize]
                    } else if age - nu < fb_depth {
                        pts[feedback[state * fb_depth + (age - nu)] as usize]
                    } else {
                        Complex64::default()
                    };
                    if t_len >= age + 1 {
                        pred += taps[lag] * x;
                        mults += 4;
                    }
                }
                let diff = streams[bn][k] - pred;
                gamma += diff.norm_sqr();
                mults += 2;
            }
            metric[state] += gamma;
        }
    }

    // Best final survivor; ties resolve to the lower state index.
    let mut best_state = 0usize;
    for st in 1..n_states {
        if metric[st] < metric[best_state] {
            best_state = st;
        }
    }
    if metric[best_state] == f64::INFINITY {
        return Err(Error::InvalidDimension(
            "ddf_mlm_forney: no surviving path".into(),
        ));
    }

    // Full histories of all final survivors (needed for soft output).
    let mut histories = vec![0u16; n_states * t_len];
    for init in 0..n_states {
        if metric[init] == f64::INFINITY {
            continue;
        }
        let mut st = init;
        for k in (0..t_len).rev() {
            let (prev, a) = survivors[k * n_states + st];
            histories[init * t_len + k] = a;
            st = prev as usize;
        }
    }
    let hard: Vec<usize> = (0..t_len)
        .map(|k| histories[best_state * t_len + k] as usize)
        .collect();

    let best_metric = metric[best_state];
    let mut llrs = Vec::with_capacity(t_len * bps);
    for k in 0..t_len {
        let best_label = hard[k];
        for i in 0..bps {
            let best_bit = (best_label >> (bps - 1 - i)) & 1;
            let mut opp = f64::INFINITY;
            for st in 0..n_states {
                if metric[st] == f64::INFINITY {
                    continue;
                }
                let lbl = histories[st * t_len + k] as usize;
                if (lbl >> (bps - 1 - i)) & 1 != best_bit {
                    opp = opp.min(metric[st]);
                }
            }
            let mag = if opp.is_finite() {
                (opp - best_metric).min(LLR_SAT)
            } else {
                LLR_SAT
            };
            llrs.push(if best_bit == 1 { mag } else { -mag });
        }
    }

    Ok(EqualizerOutput {
        hard,
        llrs,
        real_mults: mults,
    })
}

#[inline]
fn survivor_digit(state: usize, age: usize, s: usize, s_pow: &[usize]) -> u16 {
    ((state / s_pow[age]) % s) as u16
}

// ---------------------------------------------------------------------------
// Minimum-phase prefilter (homomorphic baseline)
// ---------------------------------------------------------------------------

/// Spatial whitener plus per-branch all-pass filters that map each whitened
/// branch channel to its minimum-phase equivalent.
#[derive(Debug, Clone)]
pub struct MinPhasePrefilter {
    /// Rows of `Lc^{-1}` where `R = Lc Lc^H`.
    whitener: Vec<Vec<Complex64>>,
    /// Whitened-domain channels before phase correction.
    whitened: SimoCir,
    /// Minimum-phase equivalents, same magnitude spectra.
    minphase: SimoCir,
}

impl MinPhasePrefilter {
    pub fn shortened_cirs(&self) -> &SimoCir {
        &self.minphase
    }

    pub fn whitened_cirs(&self) -> &SimoCir {
        &self.whitened
    }
}

/// Designs the baseline prefilter: whiten across branches with the Cholesky
/// factor of `R`, then per branch compute the minimum-phase equivalent CIR
/// by cepstral spectral factorization.
pub fn minphase_prefilter(cir: &SimoCir, r: &NoiseCov) -> Result<MinPhasePrefilter> {
    let n = cir.n_branches();
    let l = cir.n_taps();
    if r.dim() != n {
        return Err(Error::InvalidDimension(
            "minphase_prefilter: covariance/branch mismatch".into(),
        ));
    }
    if cir.energy() <= 0.0 {
        return Err(Error::Design("minphase_prefilter: all-zero channel".into()));
    }
    // Whitener rows: W = Lc^{-1}, obtained column-by-column.
    let mut wcols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = vec![Complex64::default(); n];
        e[j] = c(1.0, 0.0);
        wcols.push(r.whiten(&e));
    }
    let whitener: Vec<Vec<Complex64>> = (0..n)
        .map(|i| (0..n).map(|j| wcols[j][i]).collect())
        .collect();

    // Whitened channels: hbar_l = W h_l, reassembled per branch.
    let mut wh = vec![vec![Complex64::default(); l]; n];
    for tap in 0..l {
        let col: Vec<Complex64> = (0..n).map(|bn| cir.branch(bn)[tap]).collect();
        for (i, row) in whitener.iter().enumerate() {
            let mut acc = Complex64::default();
            for (j, &w) in row.iter().enumerate() {
                acc += w * col[j];
            }
            wh[i][tap] = acc;
        }
    }
    let whitened = SimoCir::from_taps(wh)?;

    let nfft = (32 * l).next_power_of_two().max(1024);
    let mp_taps: Vec<Vec<Complex64>> = (0..n)
        .map(|bn| minimum_phase_fir(whitened.branch(bn), nfft, l))
        .collect::<Result<_>>()?;
    let minphase = SimoCir::from_taps(mp_taps)?;

    Ok(MinPhasePrefilter {
        whitener,
        whitened,
        minphase,
    })
}

/// Minimum-phase equivalent of `h` via the real cepstrum of its power
/// spectrum, truncated to `out_len` taps.
fn minimum_phase_fir(h: &[Complex64], nfft: usize, out_len: usize) -> Result<Vec<Complex64>> {
    let spec = dft(h, nfft)?;
    let pmax = spec.iter().map(|v| v.norm_sqr()).fold(0.0f64, f64::max);
    if pmax <= 0.0 {
        return Err(Error::Design("minimum_phase_fir: zero spectrum".into()));
    }
    let floor = 1e-12 * pmax;
    let logp: Vec<Complex64> = spec
        .iter()
        .map(|v| c(v.norm_sqr().max(floor).ln(), 0.0))
        .collect();
    let cep = idft(&logp, nfft)?;
    // Causal fold: keep DC and Nyquist halves, the causal part in full.
    let mut folded = vec![Complex64::default(); nfft];
    folded[0] = cep[0] * 0.5;
    for i in 1..nfft / 2 {
        folded[i] = cep[i];
    }
    folded[nfft / 2] = cep[nfft / 2] * 0.5;
    let log_hmp = dft(&folded, nfft)?;
    let hmp_spec: Vec<Complex64> = log_hmp.iter().map(|v| v.exp()).collect();
    let hmp = idft(&hmp_spec, nfft)?;
    Ok(hmp[..out_len].to_vec())
}

/// Applies the whitener and the per-branch all-pass correction over a
/// circular block of `k` samples. The all-pass is
/// `A = Hmp conj(H) / (|H|^2 + floor)` on the `k`-point grid, so the
/// filtered branch sees exactly the (truncated) minimum-phase CIR.
pub fn apply_minphase(
    pf: &MinPhasePrefilter,
    streams: &[Vec<Complex64>],
    k: usize,
) -> Result<Vec<Vec<Complex64>>> {
    let n = pf.whitener.len();
    if streams.len() != n {
        return Err(Error::InvalidDimension(
            "apply_minphase: branch count mismatch".into(),
        ));
    }
    let t_len = streams[0].len();
    if streams.iter().any(|s| s.len() != t_len) || t_len > k {
        return Err(Error::InvalidDimension(
            "apply_minphase: stream lengths incompatible with block".into(),
        ));
    }
    // Whiten across branches sample by sample.
    let mut white = vec![vec![Complex64::default(); t_len]; n];
    for t in 0..t_len {
        for (i, row) in pf.whitener.iter().enumerate() {
            let mut acc = Complex64::default();
            for (j, &w) in row.iter().enumerate() {
                acc += w * streams[j][t];
            }
            white[i][t] = acc;
        }
    }
    // Per-branch spectral all-pass.
    let mut out = Vec::with_capacity(n);
    for bn in 0..n {
        let hk = dft(pf.whitened.branch(bn), k)?;
        let hmpk = dft(pf.minphase.branch(bn), k)?;
        let pmax = hk.iter().map(|v| v.norm_sqr()).fold(0.0f64, f64::max);
        let floor = 1e-12 * pmax.max(1e-300);
        let yspec = dft(&white[bn], k)?;
        let filtered: Vec<Complex64> = (0..k)
            .map(|s| yspec[s] * hmpk[s] * hk[s].conj() / (hk[s].norm_sqr() + floor))
            .collect();
        out.push(idft(&filtered, k)?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Exhaustive MLSE oracle
// ---------------------------------------------------------------------------

/// Exhaustive minimization of
/// `sum_k sum_n |y_k^n - sum_l h_l^n x_{k-l}|^2` over all `S^T` sequences,
/// summed over the full length of the given streams with `x` zero outside
/// the burst. Ties resolve to the lexicographically smallest sequence.
pub fn full_mlse_oracle(
    streams: &[Vec<Complex64>],
    cirs: &SimoCir,
    alphabet: &Alphabet,
    num_symbols: usize,
) -> Result<Vec<usize>> {
    let n = cirs.n_branches();
    if streams.len() != n || num_symbols == 0 {
        return Err(Error::InvalidDimension(
            "full_mlse_oracle: bad stream/branch arrangement".into(),
        ));
    }
    let s = alphabet.size();
    let total = s
        .checked_pow(num_symbols as u32)
        .filter(|&t| t <= 1 << 22)
        .ok_or_else(|| {
            Error::OracleScale(format!(
                "S^K = {}^{} is not enumerable",
                s, num_symbols
            ))
        })?;
    let l = cirs.n_taps();
    let pts = alphabet.points();
    let mut best_seq = vec![0usize; num_symbols];
    let mut best_metric = f64::INFINITY;
    let mut seq = vec![0usize; num_symbols];
    for idx in 0..total {
        // Lexicographic order: x_0 is the most significant digit.
        let mut rem = idx;
        for pos in (0..num_symbols).rev() {
            seq[pos] = rem % s;
            rem /= s;
        }
        let mut metric = 0.0;
        for (bn, stream) in streams.iter().enumerate() {
            let taps = cirs.branch(bn);
            for (k, &y) in stream.iter().enumerate() {
                let mut pred = Complex64::default();
                for (lag, &h) in taps.iter().enumerate().take(l) {
                    if k >= lag && k - lag < num_symbols {
                        pred += h * pts[seq[k - lag]];
                    }
                }
                metric += (y - pred).norm_sqr();
            }
            if metric >= best_metric {
                break;
            }
        }
        if metric < best_metric {
            best_metric = metric;
            best_seq.copy_from_slice(&seq);
        }
    }
    Ok(best_seq)
}

// ---------------------------------------------------------------------------
// Operation counters
// ---------------------------------------------------------------------------

/// Per-stage operation counts for a trellis configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpCounter {
    pub real_mults_per_stage: u64,
    pub lut_ops_per_stage: u64,
}

/// Evaluates the per-stage complexity formulas: `S^(nu+1)` branch metrics,
/// each costing `4 nu + 2` real multiplications on the Ungerboeck metric or
/// `N (4 L + 2)` on the Forney metric. With `use_lut`, precomputed
/// tap-symbol products reduce the multiplications to `S` (Ungerboeck) or
/// `N S` (Forney) per metric, at `nu + 1` resp. `N L` table lookups each.
pub fn count_ops(spec: &TrellisSpec, n: usize, l: usize, use_lut: bool) -> OpCounter {
    let s = spec.alphabet.size() as u64;
    let branches = s.pow(spec.nu as u32 + 1);
    let (mults_per_metric, luts_per_metric) = match spec.metric {
        MetricKind::Ungerboeck => {
            if use_lut {
                (s, spec.nu as u64 + 1)
            } else {
                (4 * spec.nu as u64 + 2, 0)
            }
        }
        MetricKind::ForneyDdf | MetricKind::ForneyFull => {
            if use_lut {
                (n as u64 * s, (n * l) as u64)
            } else {
                (n as u64 * (4 * l as u64 + 2), 0)
            }
        }
    };
    OpCounter {
        real_mults_per_stage: mults_per_metric * branches,
        lut_ops_per_stage: luts_per_metric * branches,
    }
}

/// Alternate Forney count with the per-metric cost pinned at 40 real
/// multiplications: `N * 40 * S^(nu+1)`. The printed formula
/// `N (4L + 2) S^(nu+1)` gives 34 per metric at L = 8; the fixed constant
/// 40 reproduces the reference complexity table instead. Both are exposed.
pub fn forney_table_mode_mults(n: usize, s: usize, nu: usize) -> u64 {
    (n as u64) * 40 * (s as u64).pow(nu as u32 + 1)
}
