//! Rate-matched convolutional coding: a rate-1/2 mother code (constraint
//! length 5, generators 23/35 octal) brought to the target rate by
//! deterministic decimation (puncturing) or repetition, decoded with a
//! terminated soft-input Viterbi.
//!
//! The channel mapping is `channel[j] = mother[floor(j * M / C)]` with `M`
//! mother bits and `C` channel bits; for `M > C` this punctures evenly, for
//! `M < C` it repeats evenly, and the decoder folds repeated LLRs back onto
//! their mother bit (punctured bits see LLR zero).

use crate::error::{Error, Result};

const G0: u32 = 0o23; // 10011
const G1: u32 = 0o35; // 11101
const MEMORY: usize = 4;
const N_STATES: usize = 1 << MEMORY;

/// Info-bit budget for a channel-bit budget at a nominal rate; the realized
/// rate `k / C` lands within a few percent of nominal.
pub fn info_bits_for(channel_bits: usize, rate: f64) -> Result<usize> {
    if !(0.0..=1.0).contains(&rate) || rate <= 0.0 {
        return Err(Error::Config(format!("coding rate {} out of (0, 1]", rate)));
    }
    if rate >= 1.0 {
        return Ok(channel_bits);
    }
    let k = (rate * channel_bits as f64).floor() as usize;
    if k == 0 || channel_bits < k + MEMORY {
        return Err(Error::Config(format!(
            "channel budget {} too small for rate {}",
            channel_bits, rate
        )));
    }
    Ok(k)
}

#[inline]
fn outputs(reg: u32) -> (u8, u8) {
    (
        ((reg & G0).count_ones() & 1) as u8,
        ((reg & G1).count_ones() & 1) as u8,
    )
}

fn mother_encode(info: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(2 * (info.len() + MEMORY));
    let mut state = 0u32; // b_{t-1}..b_{t-4}, MSB most recent
    for &b in info.iter().chain(std::iter::repeat(&0u8).take(MEMORY)) {
        let reg = ((b as u32) << MEMORY) | state;
        let (o0, o1) = outputs(reg);
        out.push(o0);
        out.push(o1);
        state = ((b as u32) << (MEMORY - 1)) | (state >> 1);
    }
    out
}

/// Encodes `info` and rate-matches the mother stream to exactly
/// `channel_bits` output bits.
pub fn encode(info: &[u8], channel_bits: usize) -> Result<Vec<u8>> {
    if info.is_empty() || channel_bits == 0 {
        return Err(Error::Framing("encode: empty payload".into()));
    }
    let mother = mother_encode(info);
    let m = mother.len();
    Ok((0..channel_bits).map(|j| mother[j * m / channel_bits]).collect())
}

/// Terminated Viterbi decode from channel-bit LLRs (positive means 1).
pub fn decode(llrs: &[f64], info_len: usize) -> Result<Vec<u8>> {
    if info_len == 0 {
        return Err(Error::Framing("decode: empty payload".into()));
    }
    let m = 2 * (info_len + MEMORY);
    let c = llrs.len();
    if c == 0 {
        return Err(Error::Framing("decode: no LLRs".into()));
    }
    // Fold channel LLRs back onto mother bits.
    let mut mother_llr = vec![0.0f64; m];
    for (j, &l) in llrs.iter().enumerate() {
        mother_llr[j * m / c] += l;
    }

    let steps = info_len + MEMORY;
    let mut metric = vec![f64::NEG_INFINITY; N_STATES];
    metric[0] = 0.0;
    let mut decisions = vec![0u8; steps * N_STATES];
    let mut next = vec![f64::NEG_INFINITY; N_STATES];
    for t in 0..steps {
        let l0 = mother_llr[2 * t];
        let l1 = mother_llr[2 * t + 1];
        for v in next.iter_mut() {
            *v = f64::NEG_INFINITY;
        }
        let inputs: &[u8] = if t < info_len { &[0, 1] } else { &[0] };
        for state in 0..N_STATES {
            let base = metric[state];
            if base == f64::NEG_INFINITY {
                continue;
            }
            for &b in inputs {
                let reg = ((b as u32) << MEMORY) | state as u32;
                let (o0, o1) = outputs(reg);
                let gain = if o0 == 1 { l0 } else { -l0 } + if o1 == 1 { l1 } else { -l1 };
                let ns = (((b as usize) << (MEMORY - 1)) | (state >> 1)) & (N_STATES - 1);
                let total = base + gain;
                if total > next[ns] {
                    next[ns] = total;
                    decisions[t * N_STATES + ns] = (b << 4) | state as u8;
                }
            }
        }
        std::mem::swap(&mut metric, &mut next);
    }

    // Terminated: trace back from state 0.
    let mut state = 0usize;
    let mut bits = vec![0u8; steps];
    for t in (0..steps).rev() {
        let d = decisions[t * N_STATES + state];
        bits[t] = d >> 4;
        state = (d & 0xf) as usize;
    }
    bits.truncate(info_len);
    Ok(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TABLE_RATES: [f64; 4] = [0.53, 0.37, 0.67, 0.65];

    #[test]
    fn realized_rates_are_within_three_percent() {
        for (rate, channel_bits) in [(0.53, 116), (0.37, 348), (0.67, 464), (0.65, 580)] {
            let k = info_bits_for(channel_bits, rate).unwrap();
            let realized = k as f64 / channel_bits as f64;
            assert!(
                (realized - rate).abs() <= 0.03 * rate,
                "rate {}: realized {}",
                rate,
                realized
            );
        }
    }

    #[test]
    fn noise_free_llrs_decode_exactly_at_every_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(70);
        for &rate in &TABLE_RATES {
            for &channel_bits in &[116usize, 348, 464, 580] {
                let k = info_bits_for(channel_bits, rate).unwrap();
                let info: Vec<u8> = (0..k).map(|_| rng.gen_range(0..2u8)).collect();
                let tx = encode(&info, channel_bits).unwrap();
                let llrs: Vec<f64> = tx.iter().map(|&b| if b == 1 { 5.0 } else { -5.0 }).collect();
                let rx = decode(&llrs, k).unwrap();
                assert_eq!(rx, info, "rate {} C {}", rate, channel_bits);
            }
        }
    }

    #[test]
    fn hard_decision_roundtrip_over_many_payloads() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let channel_bits = 116;
        let k = info_bits_for(channel_bits, 0.53).unwrap();
        for _ in 0..10_000 {
            let info: Vec<u8> = (0..k).map(|_| rng.gen_range(0..2u8)).collect();
            let tx = encode(&info, channel_bits).unwrap();
            let llrs: Vec<f64> = tx.iter().map(|&b| if b == 1 { 1.0 } else { -1.0 }).collect();
            let rx = decode(&llrs, k).unwrap();
            assert_eq!(rx, info);
        }
    }

    #[test]
    fn repetition_rate_survives_erasures_better_than_uncoded() {
        // Sanity: at rate 0.37 the code corrects a sprinkling of flipped
        // LLRs that would be raw bit errors without coding.
        let mut rng = ChaCha8Rng::seed_from_u64(72);
        let channel_bits = 348;
        let k = info_bits_for(channel_bits, 0.37).unwrap();
        let info: Vec<u8> = (0..k).map(|_| rng.gen_range(0..2u8)).collect();
        let tx = encode(&info, channel_bits).unwrap();
        let mut llrs: Vec<f64> =
            tx.iter().map(|&b| if b == 1 { 1.0 } else { -1.0 }).collect();
        for _ in 0..20 {
            let idx = rng.gen_range(0..llrs.len());
            llrs[idx] = -llrs[idx];
        }
        let rx = decode(&llrs, k).unwrap();
        assert_eq!(rx, info);
    }

    #[test]
    fn bad_configs_are_rejected() {
        assert!(info_bits_for(100, 0.0).is_err());
        assert!(info_bits_for(100, 1.5).is_err());
        assert!(info_bits_for(3, 0.37).is_err());
        assert!(encode(&[], 10).is_err());
        assert!(decode(&[], 4).is_err());
    }
}
