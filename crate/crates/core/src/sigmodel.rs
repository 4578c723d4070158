//! Symbol alphabets, burst construction, and the generative SIMO channel:
//! symbol-spaced multipath for the target user, optional co-channel
//! interferers, and circular complex Gaussian noise.
//!
//! The continuous-phase modulation of the narrowband 2G waveform is modeled
//! at symbol rate as a binary antipodal alphabet with a pi/2 per-symbol phase
//! rotation; the receiver de-rotates once before any processing. All
//! alphabets are unit average energy.

use crate::error::{Error, Result};
use crate::numkit::c;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

// ---------------------------------------------------------------------------
// Alphabets
// ---------------------------------------------------------------------------

/// Supported modulation alphabets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphabetKind {
    /// Binary +-1 with pi/2 per-symbol rotation.
    GmskBin,
    /// Gray-labeled 8-PSK with 3*pi/8 rotation.
    Psk8,
    /// Square 16-QAM, per-axis Gray labels, pi/4 rotation.
    Qam16,
    /// Rectangular 8x4 32-QAM, per-axis Gray labels, -pi/4 rotation.
    Qam32,
}

impl AlphabetKind {
    pub fn name(&self) -> &'static str {
        match self {
            AlphabetKind::GmskBin => "gmsk",
            AlphabetKind::Psk8 => "8psk",
            AlphabetKind::Qam16 => "16qam",
            AlphabetKind::Qam32 => "32qam",
        }
    }
}

/// A concrete constellation: points are indexed by their bit label, so
/// `points[label]` carries the bits of `label` directly (MSB first).
#[derive(Debug, Clone)]
pub struct Alphabet {
    kind: AlphabetKind,
    points: Vec<Complex64>,
    rotation: f64,
}

fn gray(m: usize) -> usize {
    m ^ (m >> 1)
}

/// Gray-labeled PAM levels: returns `levels[label] = amplitude` for a
/// `2^bits`-level axis with spacing 2 (un-normalized).
fn pam_gray(bits: usize) -> Vec<f64> {
    let m = 1usize << bits;
    let mut levels = vec![0.0; m];
    for idx in 0..m {
        levels[gray(idx)] = (2 * idx) as f64 - (m - 1) as f64;
    }
    levels
}

impl Alphabet {
    pub fn new(kind: AlphabetKind) -> Self {
        let (points, rotation) = match kind {
            AlphabetKind::GmskBin => (vec![c(1.0, 0.0), c(-1.0, 0.0)], PI / 2.0),
            AlphabetKind::Psk8 => {
                let mut pts = vec![Complex64::default(); 8];
                for m in 0..8 {
                    let ang = 2.0 * PI * m as f64 / 8.0;
                    pts[gray(m)] = c(ang.cos(), ang.sin());
                }
                (pts, 3.0 * PI / 8.0)
            }
            AlphabetKind::Qam16 => {
                let axis = pam_gray(2);
                let scale = 1.0 / 10.0f64.sqrt();
                let mut pts = vec![Complex64::default(); 16];
                for (li, &i) in axis.iter().enumerate() {
                    for (lq, &q) in axis.iter().enumerate() {
                        pts[(li << 2) | lq] = c(i * scale, q * scale);
                    }
                }
                (pts, PI / 4.0)
            }
            AlphabetKind::Qam32 => {
                let iaxis = pam_gray(3);
                let qaxis = pam_gray(2);
                let scale = 1.0 / 26.0f64.sqrt();
                let mut pts = vec![Complex64::default(); 32];
                for (li, &i) in iaxis.iter().enumerate() {
                    for (lq, &q) in qaxis.iter().enumerate() {
                        pts[(li << 2) | lq] = c(i * scale, q * scale);
                    }
                }
                (pts, -PI / 4.0)
            }
        };
        Alphabet {
            kind,
            points,
            rotation,
        }
    }

    pub fn kind(&self) -> AlphabetKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.points.len().trailing_zeros() as usize
    }

    pub fn rotation(&self) -> f64 {
        self.rotation
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    #[inline]
    pub fn point(&self, label: usize) -> Complex64 {
        self.points[label]
    }

    /// Bit `i` (MSB first) of a symbol label.
    #[inline]
    pub fn bit_of(&self, label: usize, i: usize) -> u8 {
        ((label >> (self.bits_per_symbol() - 1 - i)) & 1) as u8
    }

    /// Packs bits (MSB first) into symbol labels.
    pub fn labels_from_bits(&self, bits: &[u8]) -> Result<Vec<usize>> {
        let bps = self.bits_per_symbol();
        if bits.len() % bps != 0 {
            return Err(Error::Framing(format!(
                "{} bits do not frame into {}-bit symbols",
                bits.len(),
                bps
            )));
        }
        Ok(bits
            .chunks(bps)
            .map(|chunk| chunk.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize))
            .collect())
    }

    /// Unpacks symbol labels into bits (MSB first).
    pub fn bits_from_labels(&self, labels: &[usize]) -> Vec<u8> {
        let bps = self.bits_per_symbol();
        let mut out = Vec::with_capacity(labels.len() * bps);
        for &l in labels {
            for i in 0..bps {
                out.push(((l >> (bps - 1 - i)) & 1) as u8);
            }
        }
        out
    }

    /// Nearest-point hard demap of an un-rotated sample.
    pub fn hard_demap(&self, y: Complex64) -> usize {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (l, &p) in self.points.iter().enumerate() {
            let d = (y - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = l;
            }
        }
        best
    }
}

/// Maps bits to symbols and applies the per-symbol rotation `exp(j k rot)`,
/// with `k` counted from zero.
pub fn modulate(bits: &[u8], alphabet: &Alphabet) -> Result<Vec<Complex64>> {
    let labels = alphabet.labels_from_bits(bits)?;
    Ok(labels
        .iter()
        .enumerate()
        .map(|(k, &l)| alphabet.point(l) * rot_phasor(alphabet.rotation(), k))
        .collect())
}

#[inline]
fn rot_phasor(rotation: f64, k: usize) -> Complex64 {
    let ang = rotation * k as f64;
    c(ang.cos(), ang.sin())
}

/// Removes the per-symbol rotation from a received stream.
pub fn derotate(stream: &[Complex64], rotation: f64) -> Vec<Complex64> {
    stream
        .iter()
        .enumerate()
        .map(|(k, &y)| y * rot_phasor(-rotation, k))
        .collect()
}

// ---------------------------------------------------------------------------
// Channel profiles and CIR draws
// ---------------------------------------------------------------------------

/// Relative tap powers of a symbol-spaced delay line, normalized to sum 1.
#[derive(Debug, Clone)]
pub struct ChannelProfile {
    name: String,
    powers: Vec<f64>,
}

impl ChannelProfile {
    /// Builds a profile from relative tap powers in dB and normalizes them.
    pub fn from_powers_db(name: &str, db: &[f64]) -> Result<Self> {
        let lin: Vec<f64> = db.iter().map(|d| 10f64.powf(d / 10.0)).collect();
        Self::from_linear(name, &lin)
    }

    pub fn from_linear(name: &str, powers: &[f64]) -> Result<Self> {
        if powers.is_empty() || powers.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::Config(format!(
                "profile '{}': tap powers must be finite and non-negative",
                name
            )));
        }
        let total: f64 = powers.iter().sum();
        if total <= 0.0 {
            return Err(Error::Config(format!(
                "profile '{}': tap powers sum to zero",
                name
            )));
        }
        Ok(ChannelProfile {
            name: name.to_string(),
            powers: powers.iter().map(|p| p / total).collect(),
        })
    }

    /// Six-tap urban-style profile.
    pub fn tu6() -> Self {
        Self::from_powers_db("tu6", &[-3.0, 0.0, -2.0, -6.0, -8.0, -10.0]).unwrap()
    }

    /// Eight-tap profile with a long tail; hard to shorten.
    pub fn ht8() -> Self {
        Self::from_powers_db("ht8", &[0.0, -2.0, -4.0, -7.0, -6.0, -9.0, -12.0, -14.0]).unwrap()
    }

    /// Single-tap profile (pure AWGN once fading is disabled).
    pub fn awgn() -> Self {
        Self::from_linear("awgn", &[1.0]).unwrap()
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "tu6" => Ok(Self::tu6()),
            "ht8" => Ok(Self::ht8()),
            "awgn" => Ok(Self::awgn()),
            other => Err(Error::Config(format!(
                "unknown channel profile '{}' (expected tu6|ht8|awgn or custom taps)",
                other
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.powers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.powers.is_empty()
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }
}

/// The target user's channel: `taps[n][l]` is tap `l` on diversity branch `n`.
#[derive(Debug, Clone)]
pub struct SimoCir {
    taps: Vec<Vec<Complex64>>,
}

impl SimoCir {
    pub fn from_taps(taps: Vec<Vec<Complex64>>) -> Result<Self> {
        if taps.is_empty() || taps[0].is_empty() {
            return Err(Error::InvalidDimension(
                "SimoCir: need at least one branch and one tap".into(),
            ));
        }
        let l = taps[0].len();
        if taps.iter().any(|b| b.len() != l) {
            return Err(Error::InvalidDimension(
                "SimoCir: branches disagree on tap count".into(),
            ));
        }
        if taps
            .iter()
            .any(|b| b.iter().any(|t| !t.re.is_finite() || !t.im.is_finite()))
        {
            return Err(Error::InvalidDimension("SimoCir: non-finite tap".into()));
        }
        Ok(SimoCir { taps })
    }

    pub fn n_branches(&self) -> usize {
        self.taps.len()
    }

    pub fn n_taps(&self) -> usize {
        self.taps[0].len()
    }

    pub fn branch(&self, n: usize) -> &[Complex64] {
        &self.taps[n]
    }

    pub fn branches(&self) -> &[Vec<Complex64>] {
        &self.taps
    }

    /// Total tap energy summed over branches.
    pub fn energy(&self) -> f64 {
        self.taps
            .iter()
            .flat_map(|b| b.iter())
            .map(|t| t.norm_sqr())
            .sum()
    }

    /// Applies `tap_l -> tap_l * exp(-j rot l)`, the tap transform that makes
    /// a de-rotated stream see an un-rotated alphabet.
    pub fn derotated(&self, rotation: f64) -> SimoCir {
        let taps = self
            .taps
            .iter()
            .map(|b| {
                b.iter()
                    .enumerate()
                    .map(|(l, &t)| t * rot_phasor(-rotation, l))
                    .collect()
            })
            .collect();
        SimoCir { taps }
    }
}

/// One circular complex Gaussian sample, unit variance.
pub fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen();
    let r = (-u1.ln()).sqrt();
    let ang = 2.0 * PI * u2;
    c(r * ang.cos(), r * ang.sin())
}

/// Draws a block-fading channel: `taps[n][l] = sqrt(power[l]) * g` with `g`
/// circular complex Gaussian, independent across branches and taps.
pub fn draw_channel(profile: &ChannelProfile, n: usize, rng: &mut ChaCha8Rng) -> SimoCir {
    let taps = (0..n)
        .map(|_| {
            profile
                .powers()
                .iter()
                .map(|&p| complex_gaussian(rng) * p.sqrt())
                .collect()
        })
        .collect();
    SimoCir { taps }
}

/// Deterministic draw: `taps[n][l] = sqrt(power[l])` exactly. Used for
/// AWGN-style reference runs and tests.
pub fn fixed_channel(profile: &ChannelProfile, n: usize) -> SimoCir {
    let taps = (0..n)
        .map(|_| profile.powers().iter().map(|&p| c(p.sqrt(), 0.0)).collect())
        .collect();
    SimoCir { taps }
}

// ---------------------------------------------------------------------------
// Training sequence and burst framing
// ---------------------------------------------------------------------------

/// Binary +-1 training sequence from a maximal-length shift register
/// (x^5 + x^2 + 1, seed 1); bit 0 maps to +1.
pub fn lfsr_training(len: usize) -> Vec<Complex64> {
    let mut state = 1u8; // 5-bit LFSR state
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let bit = state & 1;
        out.push(if bit == 0 { c(1.0, 0.0) } else { c(-1.0, 0.0) });
        let fb = (state ^ (state >> 2)) & 1;
        state = (state >> 1) | (fb << 4);
    }
    out
}

/// The default 26-symbol midamble.
pub fn default_training() -> Vec<Complex64> {
    lfsr_training(26)
}

/// Burst framing: leading payload, midamble, trailing payload.
#[derive(Debug, Clone, Copy)]
pub struct BurstLayout {
    pub head_payload: usize,
    pub training_len: usize,
    pub tail_payload: usize,
}

impl Default for BurstLayout {
    fn default() -> Self {
        BurstLayout {
            head_payload: 58,
            training_len: 26,
            tail_payload: 58,
        }
    }
}

impl BurstLayout {
    pub fn burst_len(&self) -> usize {
        self.head_payload + self.training_len + self.tail_payload
    }

    pub fn training_start(&self) -> usize {
        self.head_payload
    }

    pub fn payload_symbols(&self) -> usize {
        self.head_payload + self.tail_payload
    }

    pub fn payload_spans(&self) -> Vec<(usize, usize)> {
        vec![
            (0, self.head_payload),
            (self.head_payload + self.training_len, self.tail_payload),
        ]
    }
}

/// A transmit burst. `base_symbols` are un-rotated; [`BurstFrame::tx_symbols`]
/// applies the alphabet rotation by burst position.
#[derive(Debug, Clone)]
pub struct BurstFrame {
    pub base_symbols: Vec<Complex64>,
    pub training_span: (usize, usize),
    pub payload_spans: Vec<(usize, usize)>,
    pub payload_labels: Vec<usize>,
    pub bits: Vec<u8>,
}

impl BurstFrame {
    /// Assembles a burst from payload channel bits, the training sequence,
    /// and a layout. Bit count must fill the payload symbols exactly.
    pub fn build(
        bits: &[u8],
        alphabet: &Alphabet,
        training: &[Complex64],
        layout: &BurstLayout,
    ) -> Result<BurstFrame> {
        if training.len() != layout.training_len {
            return Err(Error::Config(format!(
                "training sequence length {} does not match layout ({})",
                training.len(),
                layout.training_len
            )));
        }
        let labels = alphabet.labels_from_bits(bits)?;
        if labels.len() != layout.payload_symbols() {
            return Err(Error::Framing(format!(
                "{} payload symbols provided, layout needs {}",
                labels.len(),
                layout.payload_symbols()
            )));
        }
        let mut base = Vec::with_capacity(layout.burst_len());
        base.extend(labels[..layout.head_payload].iter().map(|&l| alphabet.point(l)));
        base.extend_from_slice(training);
        base.extend(
            labels[layout.head_payload..]
                .iter()
                .map(|&l| alphabet.point(l)),
        );
        Ok(BurstFrame {
            base_symbols: base,
            training_span: (layout.training_start(), layout.training_len),
            payload_spans: layout.payload_spans(),
            payload_labels: labels,
            bits: bits.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.base_symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base_symbols.is_empty()
    }

    /// Burst positions of payload symbols in payload order.
    pub fn payload_positions(&self) -> Vec<usize> {
        self.payload_spans
            .iter()
            .flat_map(|&(start, len)| start..start + len)
            .collect()
    }

    /// Transmitted (rotated) symbols.
    pub fn tx_symbols(&self, alphabet: &Alphabet) -> Vec<Complex64> {
        self.base_symbols
            .iter()
            .enumerate()
            .map(|(k, &s)| s * rot_phasor(alphabet.rotation(), k))
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Interferers and propagation
// ---------------------------------------------------------------------------

/// One co-channel interferer: its own SIMO channel, alphabet, and amplitude
/// scale derived from the configured signal-to-interference ratio.
#[derive(Debug, Clone)]
pub struct Interferer {
    pub cir: SimoCir,
    pub alphabet: Alphabet,
    pub scale: f64,
}

/// The set of active interferers for one burst.
#[derive(Debug, Clone)]
pub struct InterfererSet {
    pub members: Vec<Interferer>,
}

impl InterfererSet {
    pub fn empty() -> Self {
        InterfererSet { members: vec![] }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Draws `m` interferers with channels from `profile` scaled so that the
/// expected total interferer power per branch is `10^(-sir_db/10)` relative
/// to the unit-power target signal.
pub fn draw_interferers(
    profile: &ChannelProfile,
    n: usize,
    m: usize,
    sir_db: f64,
    alphabet: &Alphabet,
    rng: &mut ChaCha8Rng,
) -> InterfererSet {
    if m == 0 {
        return InterfererSet::empty();
    }
    let scale = (10f64.powf(-sir_db / 10.0) / m as f64).sqrt();
    let members = (0..m)
        .map(|_| Interferer {
            cir: draw_channel(profile, n, rng),
            alphabet: alphabet.clone(),
            scale,
        })
        .collect();
    InterfererSet { members }
}

/// Propagates a transmit burst through the SIMO channel: per branch `n`,
/// `y[t] = sum_l h[n][l] x[t-l] + interference + noise`, with noise
/// `CN(0, n0)` i.i.d. over all `out_len` samples and interferer symbol
/// streams drawn independently per call.
pub fn propagate(
    tx: &[Complex64],
    cir: &SimoCir,
    interferers: &InterfererSet,
    n0: f64,
    out_len: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<Complex64>>> {
    let l = cir.n_taps();
    if tx.len() < l {
        return Err(Error::InvalidDimension(format!(
            "propagate: burst length {} shorter than channel ({} taps)",
            tx.len(),
            l
        )));
    }
    if out_len == 0 {
        return Err(Error::InvalidDimension("propagate: empty output".into()));
    }
    let n = cir.n_branches();
    let mut streams = vec![vec![Complex64::default(); out_len]; n];

    add_conv(&mut streams, tx, cir, 1.0);

    for intf in &interferers.members {
        let syms = random_symbols(&intf.alphabet, tx.len(), rng);
        if intf.cir.n_branches() != n {
            return Err(Error::InvalidDimension(
                "propagate: interferer branch count mismatch".into(),
            ));
        }
        add_conv(&mut streams, &syms, &intf.cir, intf.scale);
    }

    if n0 > 0.0 {
        let sigma = n0.sqrt();
        for branch in streams.iter_mut() {
            for y in branch.iter_mut() {
                *y += complex_gaussian(rng) * sigma;
            }
        }
    }
    Ok(streams)
}

/// Random rotated symbol stream for an interferer.
fn random_symbols(alphabet: &Alphabet, len: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    (0..len)
        .map(|k| {
            let label = rng.gen_range(0..alphabet.size());
            alphabet.point(label) * rot_phasor(alphabet.rotation(), k)
        })
        .collect()
}

fn add_conv(streams: &mut [Vec<Complex64>], x: &[Complex64], cir: &SimoCir, scale: f64) {
    let out_len = streams[0].len();
    for (n, branch) in streams.iter_mut().enumerate() {
        let taps = cir.branch(n);
        for (t, y) in branch.iter_mut().enumerate().take(out_len) {
            let mut acc = Complex64::default();
            for (l, &h) in taps.iter().enumerate() {
                if t >= l && t - l < x.len() {
                    acc += h * x[t - l];
                }
            }
            *y += acc * scale;
        }
    }
}
