//! Run configuration: TOML file plus flag overrides (flags win). Unknown
//! keys in the file are hard errors.

use burstrx_core::harness::{Demodulator, FadingMode, McsConfig, RunSetup, SweepAxis};
use burstrx_core::numkit::c;
use burstrx_core::sigmodel::ChannelProfile;
use burstrx_core::{Complex64, Error, Result};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub channel: ChannelSection,
    pub receiver: ReceiverSection,
    pub sweep: SweepSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    pub profile: Option<String>,
    /// Custom relative tap powers in dB; overrides `profile` when set.
    pub taps_db: Option<Vec<f64>>,
    pub fading: Option<String>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    /// Training sequence as a 0/1 string (0 maps to +1); must match the
    /// 26-symbol midamble slot.
    pub training_bits: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReceiverSection {
    pub demodulator: Option<String>,
    pub mcs: Option<String>,
    pub lw: Option<usize>,
    pub nu: Option<usize>,
    pub k: Option<usize>,
    pub coding: Option<bool>,
    pub no_is: Option<bool>,
    pub perfect_csi: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub axis: Option<String>,
    pub snr: Option<String>,
    pub sir: Option<String>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub exact_trials: Option<bool>,
}

/// Flag-level overrides collected by the `sweep` subcommand.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub demodulator: Option<String>,
    pub mcs: Option<String>,
    pub profile: Option<String>,
    pub fading: Option<String>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub lw: Option<usize>,
    pub nu: Option<usize>,
    pub k: Option<usize>,
    pub coding: Option<bool>,
    pub no_is: bool,
    pub perfect_csi: bool,
    pub axis: Option<String>,
    pub snr: Option<String>,
    pub sir: Option<String>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub exact_trials: bool,
}

/// A fully resolved sweep request.
#[derive(Debug, Clone)]
pub struct SweepRequest {
    pub setup: RunSetup,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub exact_trials: bool,
}

pub fn load_file(path: &str) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config '{}': {}", path, e)))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("config '{}': {}", path, e)))
}

/// Axis values: a single number, a comma list, or `start:step:stop`.
pub fn parse_axis_values(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    let bad = |what: &str| Error::Config(format!("axis spec '{}': {}", spec, what));
    if spec.is_empty() {
        return Err(bad("empty"));
    }
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected start:step:stop"));
        }
        let start: f64 = parts[0].parse().map_err(|_| bad("bad start"))?;
        let step: f64 = parts[1].parse().map_err(|_| bad("bad step"))?;
        let stop: f64 = parts[2].parse().map_err(|_| bad("bad stop"))?;
        if !(step > 0.0) {
            return Err(bad("step must be positive"));
        }
        if stop < start {
            return Err(bad("stop below start"));
        }
        let count = ((stop - start) / step + 1.0 + 1e-9).floor() as usize;
        return Ok((0..count).map(|i| start + step * i as f64).collect());
    }
    spec.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad("bad number")))
        .collect()
}

fn parse_demod(s: &str) -> Result<Demodulator> {
    match s {
        "milb" => Ok(Demodulator::Milb),
        "hom" => Ok(Demodulator::Hom),
        other => Err(Error::Config(format!(
            "demodulator '{}' (expected milb|hom)",
            other
        ))),
    }
}

fn parse_fading(s: &str) -> Result<FadingMode> {
    match s {
        "rayleigh" => Ok(FadingMode::Rayleigh),
        "fixed" => Ok(FadingMode::Fixed),
        other => Err(Error::Config(format!(
            "fading '{}' (expected rayleigh|fixed)",
            other
        ))),
    }
}

fn parse_training_bits(s: &str) -> Result<Vec<Complex64>> {
    let mut out = Vec::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '0' => out.push(c(1.0, 0.0)),
            '1' => out.push(c(-1.0, 0.0)),
            ' ' | '_' => {}
            other => {
                return Err(Error::Config(format!(
                    "training_bits: unexpected character '{}'",
                    other
                )))
            }
        }
    }
    Ok(out)
}

/// Merges file (if any) and flag overrides into a validated request.
pub fn resolve(file: Option<FileConfig>, ov: &Overrides) -> Result<SweepRequest> {
    let file = file.unwrap_or_default();
    let mut setup = RunSetup::default();

    // Channel.
    if let Some(db) = &file.channel.taps_db {
        setup.profile = ChannelProfile::from_powers_db("custom", db)?;
    } else if let Some(p) = &file.channel.profile {
        setup.profile = ChannelProfile::by_name(p)?;
    }
    if let Some(p) = &ov.profile {
        setup.profile = ChannelProfile::by_name(p)?;
    }
    let fading = ov.fading.as_deref().or(file.channel.fading.as_deref());
    if let Some(f) = fading {
        setup.fading = parse_fading(f)?;
    }
    setup.n_branches = ov.n.or(file.channel.n).unwrap_or(setup.n_branches);
    setup.n_interferers = ov.m.or(file.channel.m).unwrap_or(setup.n_interferers);
    if let Some(bits) = &file.channel.training_bits {
        setup.training = parse_training_bits(bits)?;
    }

    // Receiver.
    let demod = ov
        .demodulator
        .as_deref()
        .or(file.receiver.demodulator.as_deref());
    if let Some(d) = demod {
        setup.demodulator = parse_demod(d)?;
    }
    let mcs = ov.mcs.as_deref().or(file.receiver.mcs.as_deref());
    if let Some(m) = mcs {
        setup.mcs = McsConfig::by_name(m)?;
    }
    setup.lw = ov.lw.or(file.receiver.lw).unwrap_or(setup.lw);
    setup.nu = ov.nu.or(file.receiver.nu).unwrap_or(setup.nu);
    setup.block_size = ov.k.or(file.receiver.k).unwrap_or(setup.block_size);
    setup.coding = ov.coding.or(file.receiver.coding).unwrap_or(setup.coding);
    setup.no_is = ov.no_is || file.receiver.no_is.unwrap_or(false);
    setup.perfect_csi = ov.perfect_csi || file.receiver.perfect_csi.unwrap_or(false);

    // Sweep.
    let axis_name = ov
        .axis
        .as_deref()
        .or(file.sweep.axis.as_deref())
        .unwrap_or("snr");
    let axis = match axis_name {
        "snr" => SweepAxis::Snr,
        "sir" => SweepAxis::Sir,
        other => {
            return Err(Error::Config(format!(
                "axis '{}' (expected snr|sir)",
                other
            )))
        }
    };
    let snr_spec = ov
        .snr
        .clone()
        .or(file.sweep.snr.clone())
        .unwrap_or_else(|| "0:2:20".into());
    let sir_spec = ov
        .sir
        .clone()
        .or(file.sweep.sir.clone())
        .unwrap_or_else(|| "10".into());
    let snr_values = parse_axis_values(&snr_spec)?;
    let sir_values = parse_axis_values(&sir_spec)?;
    let values = match axis {
        SweepAxis::Snr => {
            if sir_values.len() != 1 {
                return Err(Error::Config(
                    "sweeping snr: sir must be a single value".into(),
                ));
            }
            setup.sir_db = sir_values[0];
            snr_values
        }
        SweepAxis::Sir => {
            if snr_values.len() != 1 {
                return Err(Error::Config(
                    "sweeping sir: snr must be a single value".into(),
                ));
            }
            setup.snr_db = snr_values[0];
            sir_values
        }
    };
    let trials = ov.trials.or(file.sweep.trials).unwrap_or(10_000);
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let seed = ov.seed.or(file.sweep.seed).unwrap_or(1);
    let exact_trials = ov.exact_trials || file.sweep.exact_trials.unwrap_or(false);

    setup.validate()?;
    Ok(SweepRequest {
        setup,
        axis,
        values,
        trials,
        seed,
        exact_trials,
    })
}
