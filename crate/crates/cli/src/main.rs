//! `burstrx`: command-line front end for the SIMO burst-receiver simulator.
//!
//! Subcommands: `sweep` (Monte-Carlo BER/BLER, CSV output), `shorten`
//! (stage-two prefilter design from a channel file), `ops` (per-stage
//! complexity grid), `selftest` (built-in oracle checks). Exit code 0 on
//! success, 1 on configuration errors, 2 on numerical-stage errors.
//!
//! All randomness derives from `--seed`; the tool never reads the clock or
//! environment variables.

mod config;

use burstrx_core::equalize::{count_ops, forney_table_mode_mults, MetricKind, TrellisSpec};
use burstrx_core::estimate::NoiseCov;
use burstrx_core::harness;
use burstrx_core::milb;
use burstrx_core::numkit::{c, HermitianMatrix};
use burstrx_core::sigmodel::{Alphabet, AlphabetKind, SimoCir};
use burstrx_core::{Complex64, Error, Result};
use clap::{ArgAction, Parser, Subcommand};

const CHANNEL_FILE_HELP: &str = "\
Channel file format: two blank-line-separated blocks of whitespace-separated
re:im pairs. Block one has one line per diversity branch (the channel taps),
block two has N lines of N pairs (the noise covariance R). Lines starting
with '#' are comments.

Example (N=1, single tap, unit noise):
    1.0:0.0

    1.0:0.0";

#[derive(Parser)]
#[command(name = "burstrx", version, about = "Two-stage SIMO burst receiver simulator")]
struct Cli {
    /// Verbose logging (per-stage rates, residuals, condition numbers).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    verbose: u8,

    /// Only report errors.
    #[arg(short, long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo BER/BLER sweep and print CSV.
    ///
    /// Precedence: built-in defaults < config file < command-line flags.
    Sweep {
        /// TOML config with [channel], [receiver], [sweep] sections.
        #[arg(long)]
        config: Option<String>,
        /// Also write the CSV to this file.
        #[arg(long)]
        out: Option<String>,
        /// Detector: milb | hom.
        #[arg(long)]
        demod: Option<String>,
        /// MCS: mcs1 | mcs5 | mcs8 | mcs10.
        #[arg(long)]
        mcs: Option<String>,
        /// Channel profile: tu6 | ht8 | awgn.
        #[arg(long)]
        profile: Option<String>,
        /// Channel draw: rayleigh | fixed.
        #[arg(long)]
        fading: Option<String>,
        /// Diversity branches (1..=8).
        #[arg(long)]
        n: Option<usize>,
        /// Co-channel interferers.
        #[arg(long)]
        m: Option<usize>,
        /// Stage-one filter taps.
        #[arg(long)]
        lw: Option<usize>,
        /// Trellis memory.
        #[arg(long)]
        nu: Option<usize>,
        /// Circular block size (0 = automatic).
        #[arg(long)]
        k: Option<usize>,
        /// Enable/disable the convolutional code.
        #[arg(long)]
        coding: Option<bool>,
        /// Disable stage-one interference suppression.
        #[arg(long)]
        no_is: bool,
        /// Feed true channel and covariance into stage two (test hook).
        #[arg(long)]
        perfect_csi: bool,
        /// Sweep axis: snr | sir.
        #[arg(long)]
        axis: Option<String>,
        /// S/N in dB: value, comma list, or start:step:stop.
        #[arg(long)]
        snr: Option<String>,
        /// S/I in dB: value, comma list, or start:step:stop.
        #[arg(long)]
        sir: Option<String>,
        /// Bursts per axis point.
        #[arg(long)]
        trials: Option<u64>,
        /// Master seed; all randomness derives from it.
        #[arg(long)]
        seed: Option<u64>,
        /// Never stop a point early, even once the CI goal is met.
        #[arg(long)]
        exact_trials: bool,
    },
    /// Design the stage-two shortener for a channel read from a file.
    #[command(after_help = CHANNEL_FILE_HELP)]
    Shorten {
        /// Channel + covariance file (see below).
        #[arg(long)]
        channel: String,
        /// Target trellis memory.
        #[arg(long, default_value_t = 1)]
        nu: usize,
        /// Circular block size.
        #[arg(long, default_value_t = 64)]
        k: usize,
        /// Dump the solution (v taps, g, u, rate) as CSV.
        #[arg(long)]
        csv: Option<String>,
        /// Use the dense-matrix oracle instead of the DFT path.
        #[arg(long)]
        oracle: bool,
    },
    /// Print the per-stage complexity grid for all four alphabets.
    Ops {
        /// Diversity branches.
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Channel length.
        #[arg(long, default_value_t = 8)]
        l: usize,
        /// Trellis memory.
        #[arg(long, default_value_t = 1)]
        nu: usize,
        /// Also print lookup-table-mode counts.
        #[arg(long)]
        lut: bool,
    },
    /// Run the built-in oracle-equivalence checks.
    Selftest,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };

    let level = if cli.quiet {
        log::LevelFilter::Error
    } else if cli.verbose > 0 {
        log::LevelFilter::Debug
    } else {
        log::LevelFilter::Warn
    };
    env_logger::Builder::new().filter_level(level).init();

    match run(cli.command) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {}", e);
            std::process::exit(if e.is_config() { 1 } else { 2 });
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Sweep {
            config,
            out,
            demod,
            mcs,
            profile,
            fading,
            n,
            m,
            lw,
            nu,
            k,
            coding,
            no_is,
            perfect_csi,
            axis,
            snr,
            sir,
            trials,
            seed,
            exact_trials,
        } => {
            let file = match config {
                Some(path) => Some(config::load_file(&path)?),
                None => None,
            };
            let ov = config::Overrides {
                demodulator: demod,
                mcs,
                profile,
                fading,
                n,
                m,
                lw,
                nu,
                k,
                coding,
                no_is,
                perfect_csi,
                axis,
                snr,
                sir,
                trials,
                seed,
                exact_trials,
            };
            let req = config::resolve(file, &ov)?;
            log::debug!(
                "sweep: demod={} mcs={} profile={} n={} m={} axis={} points={} trials={} seed={}",
                req.setup.demodulator.name(),
                req.setup.mcs.name,
                req.setup.profile.name(),
                req.setup.n_branches,
                req.setup.n_interferers,
                req.axis.name(),
                req.values.len(),
                req.trials,
                req.seed
            );
            let result = harness::sweep(
                &req.setup,
                req.axis,
                &req.values,
                req.trials,
                req.seed,
                req.exact_trials,
            )?;
            let csv = result.to_csv();
            print!("{}", csv);
            if let Some(path) = out {
                std::fs::write(&path, &csv)
                    .map_err(|e| Error::Config(format!("cannot write '{}': {}", path, e)))?;
            }
            Ok(())
        }
        Command::Shorten {
            channel,
            nu,
            k,
            csv,
            oracle,
        } => {
            let (cir, cov) = read_channel_file(&channel)?;
            let sol = if oracle {
                milb::shorten_oracle(&cir, &cov, nu, k)?
            } else {
                milb::shorten(&cir, &cov, nu, k)?
            };
            print_solution(&sol);
            if let Some(path) = csv {
                std::fs::write(&path, sol.to_csv())
                    .map_err(|e| Error::Config(format!("cannot write '{}': {}", path, e)))?;
            }
            Ok(())
        }
        Command::Ops { n, l, nu, lut } => {
            print_ops(n, l, nu, lut)?;
            Ok(())
        }
        Command::Selftest => {
            let results = burstrx_core::selftest::run_all();
            let mut ok = true;
            for r in &results {
                println!(
                    "{} {} ({})",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    r.detail
                );
                ok &= r.passed;
            }
            if ok {
                Ok(())
            } else {
                Err(Error::ShorteningDegenerate("selftest failed".into()))
            }
        }
    }
}

/// Reads the `shorten` input: branch taps, then the covariance rows.
fn read_channel_file(path: &str) -> Result<(SimoCir, NoiseCov)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read channel file '{}': {}", path, e)))?;
    let mut blocks: Vec<Vec<Vec<Complex64>>> = vec![];
    let mut current: Vec<Vec<Complex64>> = vec![];
    for raw in text.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            if !current.is_empty() {
                blocks.push(std::mem::take(&mut current));
            }
            continue;
        }
        let row: Result<Vec<Complex64>> = line.split_whitespace().map(parse_pair).collect();
        current.push(row?);
    }
    if !current.is_empty() {
        blocks.push(current);
    }
    if blocks.len() != 2 {
        return Err(Error::Config(format!(
            "channel file '{}': expected two blocks (taps, covariance), found {}",
            path,
            blocks.len()
        )));
    }
    let (taps, rrows) = (blocks.remove(0), blocks.remove(0));
    let n = taps.len();
    if rrows.len() != n || rrows.iter().any(|r| r.len() != n) {
        return Err(Error::Config(format!(
            "channel file '{}': covariance must be {} x {}",
            path, n, n
        )));
    }
    let cir = SimoCir::from_taps(taps)?;
    let cov = NoiseCov::from_matrix(HermitianMatrix::from_rows(&rrows)?)?;
    Ok((cir, cov))
}

fn parse_pair(tok: &str) -> Result<Complex64> {
    let mut it = tok.split(':');
    let (re, im) = (it.next(), it.next());
    if it.next().is_some() {
        return Err(Error::Config(format!("bad re:im pair '{}'", tok)));
    }
    match (re, im) {
        (Some(re), Some(im)) => {
            let re: f64 = re
                .parse()
                .map_err(|_| Error::Config(format!("bad real part in '{}'", tok)))?;
            let im: f64 = im
                .parse()
                .map_err(|_| Error::Config(format!("bad imaginary part in '{}'", tok)))?;
            Ok(c(re, im))
        }
        _ => Err(Error::Config(format!("bad re:im pair '{}'", tok))),
    }
}

fn print_solution(sol: &milb::ShorteningSolution) {
    println!(
        "i_rate: {:.9} bits/symbol ({:.9} nats/block, K = {})",
        sol.i_rate_bits_per_symbol(),
        sol.i_rate,
        sol.block_size
    );
    print_taps("g", &sol.g);
    print_taps("u", &sol.u);
    for (n, v) in sol.v.iter().enumerate() {
        print_taps(&format!("v[{}]", n), v);
    }
}

fn print_taps(name: &str, taps: &[Complex64]) {
    let body: Vec<String> = taps
        .iter()
        .map(|t| format!("{:.9}:{:.9}", t.re, t.im))
        .collect();
    println!("{}: {}", name, body.join(" "));
}

fn print_ops(n: usize, l: usize, nu: usize, lut: bool) -> Result<()> {
    let kinds = [
        AlphabetKind::GmskBin,
        AlphabetKind::Psk8,
        AlphabetKind::Qam16,
        AlphabetKind::Qam32,
    ];
    println!("real multiplications per trellis stage (N={}, L={}, nu={})", n, l, nu);
    println!(
        "{:<12} {:>5} {:>8} {:>12} {:>10} {:>8}",
        "modulation", "S", "states", "hom_formula", "hom_table", "milb"
    );
    for kind in kinds {
        let alphabet = Alphabet::new(kind);
        let s = alphabet.size();
        let states = s.pow(nu as u32);
        let hom = TrellisSpec::new(alphabet.clone(), nu, MetricKind::ForneyDdf, l)?;
        let milb_spec = TrellisSpec::new(alphabet, nu, MetricKind::Ungerboeck, l)?;
        println!(
            "{:<12} {:>5} {:>8} {:>12} {:>10} {:>8}",
            kind.name(),
            s,
            states,
            count_ops(&hom, n, l, false).real_mults_per_stage,
            forney_table_mode_mults(n, s, nu),
            count_ops(&milb_spec, n, l, false).real_mults_per_stage
        );
    }
    println!(
        "milb/hom ratio (formula): (4nu+2)/(N(4L+2)) = {:.6}",
        (4 * nu + 2) as f64 / (n as f64 * (4 * l + 2) as f64)
    );
    println!(
        "note: hom_formula evaluates N(4L+2)S^(nu+1) ({} real mults per metric at L={}); \
         hom_table pins the per-metric cost at 40, and the two disagree whenever 4L+2 != 40.",
        4 * l + 2,
        l
    );
    if lut {
        println!();
        println!("lookup-table mode:");
        println!(
            "{:<12} {:>12} {:>12} {:>12} {:>12}",
            "modulation", "hom_mults", "hom_luts", "milb_mults", "milb_luts"
        );
        for kind in kinds {
            let alphabet = Alphabet::new(kind);
            let hom = TrellisSpec::new(alphabet.clone(), nu, MetricKind::ForneyDdf, l)?;
            let milb_spec = TrellisSpec::new(alphabet, nu, MetricKind::Ungerboeck, l)?;
            let ch = count_ops(&hom, n, l, true);
            let cm = count_ops(&milb_spec, n, l, true);
            println!(
                "{:<12} {:>12} {:>12} {:>12} {:>12}",
                kind.name(),
                ch.real_mults_per_stage,
                ch.lut_ops_per_stage,
                cm.real_mults_per_stage,
                cm.lut_ops_per_stage
            );
        }
        println!(
            "per-branch lookup ratio milb/hom: (nu+1)/L = {:.6}",
            (nu + 1) as f64 / l as f64
        );
    }
    Ok(())
}
