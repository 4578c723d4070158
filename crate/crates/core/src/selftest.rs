//! Quick built-in oracle-equivalence checks, surfaced by the CLI `selftest`
//! subcommand. Each check is a trimmed version of the corresponding test
//! suite: fast enough for an install sanity run, strict enough to catch a
//! broken kernel.

use crate::equalize::{count_ops, full_mlse_oracle, mlm_ungerboeck, MetricKind, TrellisSpec};
use crate::estimate::NoiseCov;
use crate::milb::{shorten, shorten_oracle};
use crate::numkit::{c, dft, idft};
use crate::sigmodel::{complex_gaussian, draw_channel, Alphabet, AlphabetKind, ChannelProfile};
use crate::numkit::HermitianMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Outcome of one self-check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name,
        passed,
        detail,
    }
}

/// Runs every self-check; all should pass on a healthy build.
pub fn run_all() -> Vec<CheckResult> {
    let mut out = Vec::new();
    out.push(dft_roundtrip());
    out.push(identity_shortening());
    out.push(shortener_vs_dense_oracle());
    out.push(ungerboeck_vs_exhaustive());
    out.push(mult_count_agreement());
    out.push(minphase_magnitude());
    out
}

fn dft_roundtrip() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let x: Vec<Complex64> = (0..64).map(|_| complex_gaussian(&mut rng)).collect();
    let err = match dft(&x, 64).and_then(|s| idft(&s, 64)) {
        Ok(back) => x
            .iter()
            .zip(back.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max),
        Err(_) => f64::INFINITY,
    };
    check(
        "dft-roundtrip",
        err < 1e-12,
        format!("max roundtrip error {:.3e}", err),
    )
}

fn identity_shortening() -> CheckResult {
    let cir = crate::sigmodel::SimoCir::from_taps(vec![vec![c(1.0, 0.0)]]).unwrap();
    let r = NoiseCov::scaled_identity(1, 1.0).unwrap();
    match shorten(&cir, &r, 1, 16) {
        Ok(sol) => {
            let e_u = (sol.u[0] - c(2f64.sqrt(), 0.0)).norm() + sol.u[1].norm();
            let e_rate = (sol.i_rate_bits_per_symbol() - 1.0).abs();
            check(
                "identity-shortening",
                e_u < 1e-10 && e_rate < 1e-10,
                format!("|u - [sqrt2, 0]| = {:.3e}, rate error {:.3e}", e_u, e_rate),
            )
        }
        Err(e) => check("identity-shortening", false, e.to_string()),
    }
}

fn shortener_vs_dense_oracle() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for trial in 0..5 {
        let n = 1 + trial % 3;
        let profile = ChannelProfile::from_linear("t", &[1.0, 1.0, 1.0]).unwrap();
        let cir = draw_channel(&profile, n, &mut rng);
        let g: Vec<Vec<Complex64>> = (0..n)
            .map(|_| (0..n).map(|_| complex_gaussian(&mut rng) * 0.4).collect())
            .collect();
        let m = HermitianMatrix::from_fn(n, |i, j| {
            let mut acc = if i == j { c(0.3, 0.0) } else { Complex64::default() };
            for p in 0..n {
                acc += g[i][p] * g[j][p].conj();
            }
            acc
        });
        let r = NoiseCov::from_matrix(m).unwrap();
        let fast = shorten(&cir, &r, 1 + trial % 2, 32);
        let dense = shorten_oracle(&cir, &r, 1 + trial % 2, 32);
        match (fast, dense) {
            (Ok(a), Ok(b)) => {
                worst = worst.max((a.i_rate - b.i_rate).abs());
                for (x, y) in a.u.iter().zip(b.u.iter()) {
                    worst = worst.max((x - y).norm());
                }
                for bn in 0..n {
                    for (x, y) in a.v[bn].iter().zip(b.v[bn].iter()) {
                        worst = worst.max((x - y).norm());
                    }
                }
            }
            _ => return check("shortener-vs-oracle", false, "solver error".into()),
        }
    }
    check(
        "shortener-vs-oracle",
        worst < 1e-8,
        format!("max deviation {:.3e}", worst),
    )
}

fn ungerboeck_vs_exhaustive() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let a = Alphabet::new(AlphabetKind::GmskBin);
    let profile = ChannelProfile::from_linear("t", &[1.0, 0.6, 0.3]).unwrap();
    for trial in 0..3 {
        let t_len = 8;
        let cirs = draw_channel(&profile, 1 + trial % 2, &mut rng);
        let labels: Vec<usize> = (0..t_len).map(|_| rng.gen_range(0..2)).collect();
        let x: Vec<Complex64> = labels.iter().map(|&l| a.point(l)).collect();
        let streams: Vec<Vec<Complex64>> = (0..cirs.n_branches())
            .map(|bn| {
                let taps = cirs.branch(bn);
                (0..t_len + taps.len() - 1)
                    .map(|k| {
                        let mut acc = complex_gaussian(&mut rng) * 0.3;
                        for (lag, &h) in taps.iter().enumerate() {
                            if k >= lag && k - lag < t_len {
                                acc += h * x[k - lag];
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        let oracle = match full_mlse_oracle(&streams, &cirs, &a, t_len) {
            Ok(o) => o,
            Err(e) => return check("ungerboeck-vs-mlse", false, e.to_string()),
        };
        // Linear matched filter and Gram target.
        let l = cirs.n_taps();
        let mut yhat = vec![Complex64::default(); t_len];
        for (bn, stream) in streams.iter().enumerate() {
            let taps = cirs.branch(bn);
            for (k, y) in yhat.iter_mut().enumerate() {
                for (lag, &hv) in taps.iter().enumerate() {
                    if k + lag < stream.len() {
                        *y += stream[k + lag] * hv.conj();
                    }
                }
            }
        }
        let g: Vec<Complex64> = (0..l)
            .map(|m| {
                let mut acc = Complex64::default();
                for bn in 0..cirs.n_branches() {
                    let taps = cirs.branch(bn);
                    for lag in 0..l - m {
                        acc += taps[lag].conj() * taps[lag + m];
                    }
                }
                acc
            })
            .collect();
        let spec = TrellisSpec::new(a.clone(), l - 1, MetricKind::Ungerboeck, l).unwrap();
        match mlm_ungerboeck(&yhat, &g, &spec) {
            Ok(out) if out.hard == oracle => {}
            Ok(_) => {
                return check(
                    "ungerboeck-vs-mlse",
                    false,
                    format!("decision mismatch at trial {}", trial),
                )
            }
            Err(e) => return check("ungerboeck-vs-mlse", false, e.to_string()),
        }
    }
    check("ungerboeck-vs-mlse", true, "3/3 instances agree".into())
}

fn mult_count_agreement() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for kind in [
        AlphabetKind::GmskBin,
        AlphabetKind::Psk8,
        AlphabetKind::Qam16,
        AlphabetKind::Qam32,
    ] {
        let spec = TrellisSpec::new(Alphabet::new(kind), 1, MetricKind::Ungerboeck, 8).unwrap();
        let t_len = 17;
        let yhat: Vec<Complex64> = (0..t_len).map(|_| complex_gaussian(&mut rng)).collect();
        let g = vec![c(1.0, 0.0), c(0.3, 0.2)];
        match mlm_ungerboeck(&yhat, &g, &spec) {
            Ok(out) => {
                let want = count_ops(&spec, 2, 8, false).real_mults_per_stage * t_len as u64;
                if out.real_mults != want {
                    return check(
                        "mult-count",
                        false,
                        format!("{}: {} vs {}", kind.name(), out.real_mults, want),
                    );
                }
            }
            Err(e) => return check("mult-count", false, e.to_string()),
        }
    }
    check("mult-count", true, "all four alphabets agree".into())
}

fn minphase_magnitude() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let taps: Vec<Complex64> = (0..4).map(|_| complex_gaussian(&mut rng)).collect();
    let cir = crate::sigmodel::SimoCir::from_taps(vec![taps.clone()]).unwrap();
    let r = NoiseCov::scaled_identity(1, 1.0).unwrap();
    match crate::equalize::minphase_prefilter(&cir, &r) {
        Ok(pf) => {
            let nfft = 1024;
            let ha = dft(&taps, nfft).unwrap();
            let hb = dft(pf.shortened_cirs().branch(0), nfft).unwrap();
            let worst = (0..nfft)
                .map(|s| (ha[s].norm() - hb[s].norm()).abs() / (1.0 + ha[s].norm()))
                .fold(0.0, f64::max);
            check(
                "minphase-magnitude",
                worst < 1e-6,
                format!("max relative magnitude deviation {:.3e}", worst),
            )
        }
        Err(e) => check("minphase-magnitude", false, e.to_string()),
    }
}
