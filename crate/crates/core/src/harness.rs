//! Monte-Carlo experiment engine: assembles the full two-stage receiver per
//! burst, sweeps S/N or S/I, and measures uncoded BER and (coded) BLER.
//!
//! Per-trial random streams are derived by counter-based seeding from
//! `(master seed, axis index, trial index)`, and per-point aggregation is a
//! plain sum of integer counts, so results are bit-identical under serial
//! and parallel execution. Early stopping operates on fixed-size trial
//! batches, which keeps the stopping point independent of scheduling.

pub mod coding;

use crate::ccistage::{apply_cci_filters, design_cci_filters};
use crate::equalize::{
    apply_minphase, ddf_mlm_forney, minphase_prefilter, mlm_ungerboeck, MetricKind, TrellisSpec,
};
use crate::error::{Error, Result};
use crate::estimate::{ls_channel_estimate, noise_covariance, NoiseCov};
use crate::milb::{apply_prefilter, shorten};
use crate::numkit::HermitianMatrix;
use crate::sigmodel::{
    derotate, draw_channel, draw_interferers, fixed_channel, Alphabet, AlphabetKind, BurstFrame,
    BurstLayout, ChannelProfile, InterfererSet,
};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Trials evaluated between early-stop checks.
const BATCH: u64 = 500;

/// Which detector runs stage two.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Demodulator {
    /// Rate-optimal shortener + single-stream Ungerboeck max-log-MAP.
    Milb,
    /// Minimum-phase prefilter + per-branch decision-feedback Viterbi.
    Hom,
}

impl Demodulator {
    pub fn name(&self) -> &'static str {
        match self {
            Demodulator::Milb => "milb",
            Demodulator::Hom => "hom",
        }
    }
}

/// Modulation-and-coding scheme: alphabet plus nominal code rate.
#[derive(Debug, Clone)]
pub struct McsConfig {
    pub name: String,
    pub alphabet: AlphabetKind,
    pub code_rate: f64,
}

impl McsConfig {
    pub fn mcs1() -> Self {
        McsConfig {
            name: "mcs1".into(),
            alphabet: AlphabetKind::GmskBin,
            code_rate: 0.53,
        }
    }

    pub fn mcs5() -> Self {
        McsConfig {
            name: "mcs5".into(),
            alphabet: AlphabetKind::Psk8,
            code_rate: 0.37,
        }
    }

    pub fn mcs8() -> Self {
        McsConfig {
            name: "mcs8".into(),
            alphabet: AlphabetKind::Qam16,
            code_rate: 0.67,
        }
    }

    pub fn mcs10() -> Self {
        McsConfig {
            name: "mcs10".into(),
            alphabet: AlphabetKind::Qam32,
            code_rate: 0.65,
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "mcs1" => Ok(Self::mcs1()),
            "mcs5" => Ok(Self::mcs5()),
            "mcs8" => Ok(Self::mcs8()),
            "mcs10" => Ok(Self::mcs10()),
            other => Err(Error::Config(format!(
                "unknown MCS '{}' (expected mcs1|mcs5|mcs8|mcs10)",
                other
            ))),
        }
    }
}

/// Channel draw mode: Rayleigh block fading or the deterministic
/// square-root-power taps (AWGN-style reference runs).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FadingMode {
    Rayleigh,
    Fixed,
}

/// Fully resolved per-run configuration.
#[derive(Debug, Clone)]
pub struct RunSetup {
    pub demodulator: Demodulator,
    pub mcs: McsConfig,
    pub profile: ChannelProfile,
    pub n_branches: usize,
    pub n_interferers: usize,
    pub lw: usize,
    pub nu: usize,
    /// Circular block size; 0 selects the smallest power of two covering
    /// both the padded burst and eight channel lengths.
    pub block_size: usize,
    pub snr_db: f64,
    pub sir_db: f64,
    pub coding: bool,
    pub no_is: bool,
    pub perfect_csi: bool,
    pub fading: FadingMode,
    pub layout: BurstLayout,
    pub training: Vec<Complex64>,
}

impl Default for RunSetup {
    fn default() -> Self {
        RunSetup {
            demodulator: Demodulator::Milb,
            mcs: McsConfig::mcs5(),
            profile: ChannelProfile::tu6(),
            n_branches: 2,
            n_interferers: 0,
            lw: 4,
            nu: 1,
            block_size: 0,
            snr_db: 10.0,
            sir_db: 10.0,
            coding: true,
            no_is: false,
            perfect_csi: false,
            fading: FadingMode::Rayleigh,
            layout: BurstLayout::default(),
            training: crate::sigmodel::default_training(),
        }
    }
}

impl RunSetup {
    pub fn validate(&self) -> Result<()> {
        let l = self.profile.len();
        if !(1..=8).contains(&self.n_branches) {
            return Err(Error::Config(format!(
                "n = {} out of range [1, 8]",
                self.n_branches
            )));
        }
        if self.nu + 1 > l {
            return Err(Error::Config(format!(
                "nu = {} out of range [0, {}] for a {}-tap profile",
                self.nu,
                l - 1,
                l
            )));
        }
        if self.lw == 0 {
            return Err(Error::Config("lw must be at least 1".into()));
        }
        if self.training.len() != self.layout.training_len {
            return Err(Error::Config(format!(
                "training length {} does not match burst layout ({})",
                self.training.len(),
                self.layout.training_len
            )));
        }
        if self.training.len() < 2 * l - 1 {
            return Err(Error::Config(format!(
                "training length {} too short for a {}-tap channel",
                self.training.len(),
                l
            )));
        }
        if !self.no_is && !self.perfect_csi && self.training.len() < l + self.lw - 1 {
            return Err(Error::Config(format!(
                "training length {} too short for lw = {}",
                self.training.len(),
                self.lw
            )));
        }
        if !self.snr_db.is_finite() || !self.sir_db.is_finite() {
            return Err(Error::Config("snr/sir must be finite".into()));
        }
        let k = self.effective_block();
        if k < self.layout.burst_len() + l - 1 {
            return Err(Error::Config(format!(
                "block size {} cannot hold the padded burst ({})",
                k,
                self.layout.burst_len() + l - 1
            )));
        }
        if self.coding {
            let bps = Alphabet::new(self.mcs.alphabet).bits_per_symbol();
            coding::info_bits_for(self.layout.payload_symbols() * bps, self.mcs.code_rate)?;
        }
        Ok(())
    }

    /// The circular block size actually used.
    pub fn effective_block(&self) -> usize {
        if self.block_size > 0 {
            self.block_size
        } else {
            let l = self.profile.len();
            (8 * l)
                .max(self.layout.burst_len() + l - 1)
                .next_power_of_two()
        }
    }
}

/// Counts from one simulated burst.
#[derive(Debug, Clone, Copy, Default)]
pub struct BurstOutcome {
    pub bit_errors: u64,
    /// Raw payload bits counted for BER (wrap-edge symbols excluded).
    pub bits: u64,
    pub block_error: bool,
    pub erased: bool,
    pub nu_fallback: bool,
}

/// Runs one burst through the full receive pipeline. Numerical failures in
/// any stage erase the burst (counted as a block error, bits excluded from
/// the BER denominator).
pub fn run_burst(setup: &RunSetup, rng: &mut ChaCha8Rng) -> BurstOutcome {
    match try_run_burst(setup, rng) {
        Ok(outcome) => outcome,
        Err(e) => {
            log::warn!("burst erased: {}", e);
            BurstOutcome {
                bit_errors: 0,
                bits: 0,
                block_error: true,
                erased: true,
                nu_fallback: false,
            }
        }
    }
}

fn try_run_burst(setup: &RunSetup, rng: &mut ChaCha8Rng) -> Result<BurstOutcome> {
    let alphabet = Alphabet::new(setup.mcs.alphabet);
    let bps = alphabet.bits_per_symbol();
    let layout = &setup.layout;
    let channel_bits = layout.payload_symbols() * bps;
    let l = setup.profile.len();
    let k_block = setup.effective_block();
    let burst_len = layout.burst_len();
    let n0 = 10f64.powf(-setup.snr_db / 10.0);

    // Source bits, optionally encoded.
    let use_coding = setup.coding && setup.mcs.code_rate < 1.0;
    let (info_bits, tx_bits) = if use_coding {
        let k_info = coding::info_bits_for(channel_bits, setup.mcs.code_rate)?;
        let info: Vec<u8> = (0..k_info).map(|_| rng.gen_range(0..2u8)).collect();
        let coded = coding::encode(&info, channel_bits)?;
        (info, coded)
    } else {
        let raw: Vec<u8> = (0..channel_bits).map(|_| rng.gen_range(0..2u8)).collect();
        (Vec::new(), raw)
    };

    let frame = BurstFrame::build(&tx_bits, &alphabet, &setup.training, layout)?;
    let tx = frame.tx_symbols(&alphabet);

    // Channel, interference, noise over the whole block.
    let cir = match setup.fading {
        FadingMode::Rayleigh => draw_channel(&setup.profile, setup.n_branches, rng),
        FadingMode::Fixed => fixed_channel(&setup.profile, setup.n_branches),
    };
    let interferers = if setup.n_interferers > 0 {
        draw_interferers(
            &setup.profile,
            setup.n_branches,
            setup.n_interferers,
            setup.sir_db,
            &alphabet,
            rng,
        )
    } else {
        InterfererSet::empty()
    };
    let raw_rx = crate::sigmodel::propagate(&tx, &cir, &interferers, n0, k_block, rng)?;

    // De-rotate once; everything downstream sees the un-rotated alphabet.
    let mut streams: Vec<Vec<Complex64>> = raw_rx
        .iter()
        .map(|s| derotate(s, alphabet.rotation()))
        .collect();
    let true_cir = cir.derotated(alphabet.rotation());

    let k0 = layout.training_start();
    let k0_end = k0 + layout.training_len;

    // Stage zero/one: estimation and interference suppression. The
    // perfect-CSI hook bypasses both and feeds the true channel and the
    // true spatial covariance straight into stage two. Re-estimation after
    // the (delay-compensated) filtering keeps the L-tap model: the design
    // pins the filtered training response to the stage-zero estimate, so
    // residual precursors and tails sit at the filter-fit noise level.
    let (h_use, r_use) = if setup.perfect_csi {
        (true_cir.clone(), true_covariance(&interferers, n0, setup.n_branches)?)
    } else {
        let windows: Vec<Vec<Complex64>> =
            streams.iter().map(|s| s[k0..k0_end].to_vec()).collect();
        let mut est_h = ls_channel_estimate(&windows, &setup.training, l)?;
        let mut est_r = noise_covariance(&windows, &setup.training, &est_h)?;
        if !setup.no_is {
            let bank = design_cci_filters(&windows, &setup.training, &est_h, setup.lw)?;
            if log::log_enabled!(log::Level::Debug) {
                for bn in 0..setup.n_branches {
                    if let Ok(res) = crate::ccistage::design_residual(
                        &windows,
                        &setup.training,
                        &est_h,
                        &bank,
                        bn,
                    ) {
                        log::debug!("stage-one residual power, branch {}: {:.6e}", bn, res);
                    }
                }
            }
            streams = apply_cci_filters(&bank, &streams)?;
            let windows2: Vec<Vec<Complex64>> =
                streams.iter().map(|s| s[k0..k0_end].to_vec()).collect();
            est_h = ls_channel_estimate(&windows2, &setup.training, l)?;
            est_r = noise_covariance(&windows2, &setup.training, &est_h)?;
        }
        (est_h, est_r)
    };
    let l_model = h_use.n_taps();

    if log::log_enabled!(log::Level::Debug) {
        if let Some(cond) = r_use.condition_estimate() {
            log::debug!("noise covariance condition estimate {:.3e}", cond);
        }
    }

    // Stage two and detection.
    let mut nu_fallback = false;
    let eq = match setup.demodulator {
        Demodulator::Milb => {
            let mut nu = setup.nu;
            let sol = loop {
                match shorten(&h_use, &r_use, nu, k_block) {
                    Ok(sol) => break sol,
                    Err(Error::ShorteningDegenerate(msg)) if nu > 0 => {
                        log::warn!("shortener degenerate at nu={} ({}); retrying", nu, msg);
                        nu_fallback = true;
                        nu -= 1;
                    }
                    Err(e) => return Err(e),
                }
            };
            let yhat = apply_prefilter(&sol, &streams)?;
            let spec = TrellisSpec::new(alphabet.clone(), nu, MetricKind::Ungerboeck, l_model)?;
            mlm_ungerboeck(&yhat[..burst_len], &sol.g, &spec)?
        }
        Demodulator::Hom => {
            let pf = minphase_prefilter(&h_use, &r_use)?;
            let filtered = apply_minphase(&pf, &streams, k_block)?;
            let spec =
                TrellisSpec::new(alphabet.clone(), setup.nu, MetricKind::ForneyDdf, l_model)?;
            let span = (burst_len + l_model - 1).min(k_block);
            let sliced: Vec<Vec<Complex64>> =
                filtered.iter().map(|s| s[..span].to_vec()).collect();
            ddf_mlm_forney(&sliced, pf.shortened_cirs(), &spec, burst_len)?
        }
    };

    // Error counting on the payload, excluding the wrap-edge symbols at the
    // burst boundaries (the filtered effective channel sets the edge width).
    let excl = l_model - 1;
    let positions = frame.payload_positions();
    let mut bit_errors = 0u64;
    let mut bits = 0u64;
    for (i, &pos) in positions.iter().enumerate() {
        let tx_label = frame.payload_labels[i];
        let rx_label = eq.hard[pos];
        let diff = (tx_label ^ rx_label).count_ones() as u64;
        if pos >= excl && pos + excl < burst_len {
            bit_errors += diff;
            bits += bps as u64;
        }
    }

    let block_error = if use_coding {
        let mut payload_llrs = Vec::with_capacity(channel_bits);
        for &pos in &positions {
            for i in 0..bps {
                payload_llrs.push(eq.llrs[pos * bps + i]);
            }
        }
        let decoded = coding::decode(&payload_llrs, info_bits.len())?;
        decoded != info_bits
    } else {
        bit_errors > 0
    };

    Ok(BurstOutcome {
        bit_errors,
        bits,
        block_error,
        erased: false,
        nu_fallback,
    })
}

/// True spatial interference-plus-noise covariance given the drawn
/// interferer channels (the perfect-CSI hook).
fn true_covariance(interferers: &InterfererSet, n0: f64, n: usize) -> Result<NoiseCov> {
    let mut m = HermitianMatrix::scaled_identity(n, n0.max(1e-30));
    for intf in &interferers.members {
        let p = intf.cir.branches();
        let s2 = intf.scale * intf.scale;
        for tap in 0..intf.cir.n_taps() {
            for i in 0..n {
                for j in 0..n {
                    let v = m.entry(i, j) + p[i][tap] * p[j][tap].conj() * s2;
                    m.set_entry(i, j, v);
                }
            }
        }
    }
    NoiseCov::from_matrix(m)
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// The swept quantity; the other one stays at its configured value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Snr,
    Sir,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Snr => "snr",
            SweepAxis::Sir => "sir",
        }
    }
}

/// Aggregated counts for one axis point.
#[derive(Debug, Clone, Default)]
pub struct PointStats {
    pub axis_db: f64,
    pub bit_errors: u64,
    pub bits: u64,
    pub block_errors: u64,
    pub trials: u64,
    pub erasures: u64,
    pub nu_fallbacks: u64,
}

impl PointStats {
    pub fn ber(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.bit_errors as f64 / self.bits as f64
        }
    }

    pub fn bler(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.block_errors as f64 / self.trials as f64
        }
    }

    /// 95% normal-approximation half width for the BER.
    pub fn ber_ci(&self) -> f64 {
        binomial_ci(self.ber(), self.bits)
    }

    pub fn bler_ci(&self) -> f64 {
        binomial_ci(self.bler(), self.trials)
    }

    fn add(&mut self, o: &BurstOutcome) {
        self.bit_errors += o.bit_errors;
        self.bits += o.bits;
        self.block_errors += o.block_error as u64;
        self.trials += 1;
        self.erasures += o.erased as u64;
        self.nu_fallbacks += o.nu_fallback as u64;
    }

    fn merge(&mut self, o: &PointStats) {
        self.bit_errors += o.bit_errors;
        self.bits += o.bits;
        self.block_errors += o.block_errors;
        self.trials += o.trials;
        self.erasures += o.erasures;
        self.nu_fallbacks += o.nu_fallbacks;
    }
}

fn binomial_ci(p: f64, n: u64) -> f64 {
    if n == 0 {
        0.0
    } else {
        1.96 * (p * (1.0 - p) / n as f64).sqrt()
    }
}

/// A finished sweep.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub points: Vec<PointStats>,
    pub seed: u64,
    pub demodulator: Demodulator,
    pub mcs: String,
    pub profile: String,
}

impl SweepResult {
    /// Stable CSV: header first, one row per axis point, C-locale numbers
    /// with nine significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("axis_db,ber,ber_ci,bler,bler_ci,trials,erasures\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{:.8e},{:.8e},{:.8e},{:.8e},{},{}\n",
                p.axis_db,
                p.ber(),
                p.ber_ci(),
                p.bler(),
                p.bler_ci(),
                p.trials,
                p.erasures
            ));
        }
        out
    }
}

/// Per-trial generator: counter-based, independent of execution order.
pub fn trial_rng(seed: u64, axis_idx: u64, trial: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&axis_idx.to_le_bytes());
    key[16..24].copy_from_slice(&trial.to_le_bytes());
    key[24..32].copy_from_slice(&0x62757273_74727800u64.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

fn run_point(
    setup: &RunSetup,
    axis: SweepAxis,
    axis_idx: usize,
    value_db: f64,
    trials: u64,
    seed: u64,
    exact_trials: bool,
    parallel: bool,
) -> PointStats {
    let mut point_setup = setup.clone();
    match axis {
        SweepAxis::Snr => point_setup.snr_db = value_db,
        SweepAxis::Sir => point_setup.sir_db = value_db,
    }
    let mut stats = PointStats {
        axis_db: value_db,
        ..PointStats::default()
    };
    let mut start = 0u64;
    while start < trials {
        let end = (start + BATCH).min(trials);
        let batch = batch_stats(&point_setup, axis_idx as u64, start..end, seed, parallel);
        stats.merge(&batch);
        start = end;
        if !exact_trials && stats.bit_errors > 0 {
            let p = stats.ber();
            if binomial_ci(p, stats.bits) < 0.1 * p {
                break;
            }
        }
    }
    stats
}

#[cfg(feature = "parallel")]
fn batch_stats(
    setup: &RunSetup,
    axis_idx: u64,
    range: std::ops::Range<u64>,
    seed: u64,
    parallel: bool,
) -> PointStats {
    if parallel {
        return range
            .into_par_iter()
            .map(|trial| {
                let mut rng = trial_rng(seed, axis_idx, trial);
                let o = run_burst(setup, &mut rng);
                let mut s = PointStats::default();
                s.add(&o);
                s
            })
            .reduce(PointStats::default, |mut a, b| {
                a.merge(&b);
                a
            });
    }
    batch_stats_serial(setup, axis_idx, range, seed)
}

#[cfg(not(feature = "parallel"))]
fn batch_stats(
    setup: &RunSetup,
    axis_idx: u64,
    range: std::ops::Range<u64>,
    seed: u64,
    _parallel: bool,
) -> PointStats {
    batch_stats_serial(setup, axis_idx, range, seed)
}

fn batch_stats_serial(
    setup: &RunSetup,
    axis_idx: u64,
    range: std::ops::Range<u64>,
    seed: u64,
) -> PointStats {
    let mut s = PointStats::default();
    for trial in range {
        let mut rng = trial_rng(seed, axis_idx, trial);
        let o = run_burst(setup, &mut rng);
        s.add(&o);
    }
    s
}

fn sweep_impl(
    setup: &RunSetup,
    axis: SweepAxis,
    values: &[f64],
    trials: u64,
    seed: u64,
    exact_trials: bool,
    parallel: bool,
) -> Result<SweepResult> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    if values.is_empty() {
        return Err(Error::Config("sweep axis is empty".into()));
    }
    if axis == SweepAxis::Sir && setup.n_interferers == 0 {
        return Err(Error::Config(
            "sweeping S/I requires at least one interferer (m >= 1)".into(),
        ));
    }
    setup.validate()?;
    let points = values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            run_point(setup, axis, i, v, trials, seed, exact_trials, parallel)
        })
        .collect();
    Ok(SweepResult {
        axis,
        points,
        seed,
        demodulator: setup.demodulator,
        mcs: setup.mcs.name.clone(),
        profile: setup.profile.name().to_string(),
    })
}

/// Runs the sweep, using the rayon pool when the `parallel` feature is on.
pub fn sweep(
    setup: &RunSetup,
    axis: SweepAxis,
    values: &[f64],
    trials: u64,
    seed: u64,
    exact_trials: bool,
) -> Result<SweepResult> {
    sweep_impl(
        setup,
        axis,
        values,
        trials,
        seed,
        exact_trials,
        cfg!(feature = "parallel"),
    )
}

/// Sequential reference path; bit-identical to [`sweep`].
pub fn sweep_serial(
    setup: &RunSetup,
    axis: SweepAxis,
    values: &[f64],
    trials: u64,
    seed: u64,
    exact_trials: bool,
) -> Result<SweepResult> {
    sweep_impl(setup, axis, values, trials, seed, exact_trials, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet_setup(demod: Demodulator, mcs: McsConfig) -> RunSetup {
        RunSetup {
            demodulator: demod,
            mcs,
            ..RunSetup::default()
        }
    }

    #[test]
    fn perfect_csi_noise_free_has_zero_errors_all_mcs_and_profiles() {
        for profile in [ChannelProfile::tu6(), ChannelProfile::ht8()] {
            for mcs in [
                McsConfig::mcs1(),
                McsConfig::mcs5(),
                McsConfig::mcs8(),
                McsConfig::mcs10(),
            ] {
                for demod in [Demodulator::Milb, Demodulator::Hom] {
                    let setup = RunSetup {
                        profile: profile.clone(),
                        snr_db: 100.0,
                        perfect_csi: true,
                        ..quiet_setup(demod, mcs.clone())
                    };
                    setup.validate().unwrap();
                    for trial in 0..5 {
                        let mut rng = trial_rng(1234, 0, trial);
                        let out = run_burst(&setup, &mut rng);
                        assert!(!out.erased, "{} {} erased", mcs.name, demod.name());
                        assert_eq!(
                            out.bit_errors, 0,
                            "{} {} {} trial {}",
                            profile.name(),
                            mcs.name,
                            demod.name(),
                            trial
                        );
                        assert!(!out.block_error);
                    }
                }
            }
        }
    }

    #[test]
    fn milb_and_hom_agree_on_single_tap_channels() {
        // With L = 1 there is no ISI to shorten: both receivers reduce to
        // matched-filter detection and must make identical decisions.
        let base = RunSetup {
            profile: ChannelProfile::awgn(),
            nu: 0,
            snr_db: 8.0,
            coding: false,
            fading: FadingMode::Fixed,
            n_branches: 1,
            ..RunSetup::default()
        };
        for trial in 0..50 {
            let milb = RunSetup {
                demodulator: Demodulator::Milb,
                ..base.clone()
            };
            let hom = RunSetup {
                demodulator: Demodulator::Hom,
                ..base.clone()
            };
            let mut r1 = trial_rng(77, 0, trial);
            let mut r2 = trial_rng(77, 0, trial);
            let o1 = run_burst(&milb, &mut r1);
            let o2 = run_burst(&hom, &mut r2);
            assert_eq!(o1.bit_errors, o2.bit_errors, "trial {}", trial);
        }
    }

    #[test]
    fn sweep_is_deterministic_and_parallel_matches_serial() {
        let setup = RunSetup {
            coding: false,
            snr_db: 6.0,
            ..RunSetup::default()
        };
        let values = [4.0, 8.0];
        let a = sweep(&setup, SweepAxis::Snr, &values, 40, 9, true).unwrap();
        let b = sweep(&setup, SweepAxis::Snr, &values, 40, 9, true).unwrap();
        let c = sweep_serial(&setup, SweepAxis::Snr, &values, 40, 9, true).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.to_csv(), c.to_csv());
        assert!(a.to_csv().starts_with("axis_db,ber,ber_ci,bler,bler_ci,trials,erasures\n"));
    }

    #[test]
    fn single_trial_ber_is_a_simple_ratio() {
        let setup = RunSetup {
            coding: false,
            snr_db: 2.0,
            ..RunSetup::default()
        };
        let res = sweep(&setup, SweepAxis::Snr, &[2.0], 1, 3, true).unwrap();
        let p = &res.points[0];
        assert_eq!(p.trials, 1);
        assert!(p.bit_errors <= p.bits);
    }

    #[test]
    fn doubling_trials_shrinks_the_ci_by_sqrt2() {
        let setup = RunSetup {
            coding: false,
            snr_db: 4.0,
            ..RunSetup::default()
        };
        let a = sweep(&setup, SweepAxis::Snr, &[4.0], 1000, 5, true).unwrap();
        let b = sweep(&setup, SweepAxis::Snr, &[4.0], 2000, 5, true).unwrap();
        let ratio = a.points[0].ber_ci() / b.points[0].ber_ci();
        assert!(
            (ratio - 2f64.sqrt()).abs() < 0.1 * 2f64.sqrt(),
            "CI ratio {}",
            ratio
        );
    }

    #[test]
    fn early_stop_truncates_high_error_points() {
        let setup = RunSetup {
            coding: false,
            snr_db: 0.0,
            ..RunSetup::default()
        };
        let res = sweep(&setup, SweepAxis::Snr, &[0.0], 100_000, 6, false).unwrap();
        assert!(res.points[0].trials < 100_000, "early stop did not engage");
        // And the CI goal was met.
        let p = &res.points[0];
        assert!(p.ber_ci() < 0.1 * p.ber());
    }

    #[test]
    fn config_validation_catches_bad_ranges() {
        let mut s = RunSetup::default();
        s.nu = 9;
        assert!(matches!(s.validate(), Err(Error::Config(_))));
        let mut s = RunSetup::default();
        s.n_branches = 9;
        assert!(s.validate().is_err());
        let mut s = RunSetup::default();
        s.block_size = 64;
        assert!(s.validate().is_err());
        let s = RunSetup::default();
        assert!(sweep(&s, SweepAxis::Sir, &[5.0], 10, 1, true).is_err());
    }

    #[test]
    fn milb_ber_degrades_monotonically_as_memory_shrinks() {
        // Same seeds across runs, so the three memories see identical
        // channels, payloads, and noise.
        let base = RunSetup {
            mcs: McsConfig::mcs1(),
            profile: ChannelProfile::tu6(),
            snr_db: 10.0,
            coding: false,
            ..RunSetup::default()
        };
        let mut ber = Vec::new();
        for nu in [1usize, 2, 5] {
            let setup = RunSetup { nu, ..base.clone() };
            let res = sweep(&setup, SweepAxis::Snr, &[10.0], 10_000, 13, true).unwrap();
            ber.push((res.points[0].ber(), res.points[0].ber_ci()));
        }
        assert!(
            ber[0].0 >= ber[1].0 - ber[1].1,
            "nu=1 {}±{} vs nu=2 {}±{}",
            ber[0].0,
            ber[0].1,
            ber[1].0,
            ber[1].1
        );
        assert!(
            ber[1].0 >= ber[2].0 - ber[2].1,
            "nu=2 {:?} vs nu=5 {:?}",
            ber[1],
            ber[2]
        );
    }

    #[test]
    fn coded_blocks_decode_cleanly_at_high_snr() {
        let setup = RunSetup {
            snr_db: 30.0,
            ..RunSetup::default()
        };
        let res = sweep(&setup, SweepAxis::Snr, &[30.0], 50, 11, true).unwrap();
        let p = &res.points[0];
        assert!(p.erasures == 0);
        assert!(
            p.bler() < 0.1,
            "BLER {} too high at 30 dB with rate-0.37 coding",
            p.bler()
        );
    }
}
