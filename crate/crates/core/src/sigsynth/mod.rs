//! Clean complex-baseband waveform synthesis for the modulation classes and
//! the ISM-band technology classes.

mod constellation;
mod pulse;
mod technology;

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

pub use constellation::table as constellation;
pub use pulse::{convolve_same, gaussian_taps, rrc_taps};
pub use technology::{synthesize_technology, Technology, TechnologyClass, TECH_SAMPLE_RATE};

use crate::transforms;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("{bits} bits is not a multiple of {per_symbol} bits per symbol")]
    BitCount { bits: usize, per_symbol: usize },
    #[error("bit value {0} is not 0 or 1")]
    InvalidBit(u8),
    #[error("{0:?} is not supported by this operation")]
    UnsupportedScheme(ModulationScheme),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("message peak {0} exceeds 1; normalize the message first")]
    MessageNotNormalized(f64),
    #[error("unknown technology class {tech:?} channel {channel}")]
    UnknownClass { tech: Technology, channel: u8 },
}

pub type Result<T> = std::result::Result<T, SynthError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModulationScheme {
    Bpsk,
    Qpsk,
    Psk8,
    Qam16,
    Qam64,
    Cpfsk,
    Gfsk,
    Pam4,
    Wbfm,
    AmDsb,
    AmSsb,
}

impl ModulationScheme {
    /// Class order used for dataset labels.
    pub const ALL: [ModulationScheme; 11] = [
        ModulationScheme::Bpsk,
        ModulationScheme::Qpsk,
        ModulationScheme::Psk8,
        ModulationScheme::Qam16,
        ModulationScheme::Qam64,
        ModulationScheme::Cpfsk,
        ModulationScheme::Gfsk,
        ModulationScheme::Pam4,
        ModulationScheme::Wbfm,
        ModulationScheme::AmDsb,
        ModulationScheme::AmSsb,
    ];

    pub fn name(self) -> &'static str {
        use ModulationScheme::*;
        match self {
            Bpsk => "BPSK",
            Qpsk => "QPSK",
            Psk8 => "8PSK",
            Qam16 => "QAM16",
            Qam64 => "QAM64",
            Cpfsk => "CPFSK",
            Gfsk => "GFSK",
            Pam4 => "PAM4",
            Wbfm => "WBFM",
            AmDsb => "AM-DSB",
            AmSsb => "AM-SSB",
        }
    }

    /// Bits per symbol for the linear (table-driven) schemes.
    pub fn bits_per_symbol(self) -> Option<usize> {
        use ModulationScheme::*;
        match self {
            Bpsk => Some(1),
            Qpsk | Pam4 => Some(2),
            Psk8 => Some(3),
            Qam16 => Some(4),
            Qam64 => Some(6),
            _ => None,
        }
    }

    pub fn is_linear(self) -> bool {
        self.bits_per_symbol().is_some()
    }

    pub fn is_analog(self) -> bool {
        matches!(self, ModulationScheme::Wbfm | ModulationScheme::AmDsb | ModulationScheme::AmSsb)
    }
}

impl fmt::Display for ModulationScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolStream {
    pub scheme: ModulationScheme,
    pub symbols: Vec<Complex64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasebandSignal {
    pub samples: Vec<Complex64>,
    pub sample_rate: f64,
    /// Samples per symbol; `None` for analog waveforms.
    pub sps: Option<usize>,
}

impl BasebandSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64, sps: Option<usize>) -> Self {
        BasebandSignal { samples, sample_rate, sps }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn power(&self) -> f64 {
        mean_power(&self.samples)
    }

    /// Same metadata, new samples.
    pub fn with_samples(&self, samples: Vec<Complex64>) -> Self {
        BasebandSignal { samples, sample_rate: self.sample_rate, sps: self.sps }
    }

    /// Multiply by `e^{j2π·f·n/fs}`.
    pub fn frequency_shift(&self, hz: f64) -> Self {
        let step = 2.0 * PI * hz / self.sample_rate;
        self.with_samples(
            self.samples
                .iter()
                .enumerate()
                .map(|(n, &x)| x * Complex64::from_polar(1.0, step * n as f64))
                .collect(),
        )
    }
}

pub fn mean_power(x: &[Complex64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64
}

/// Gray-coded mapping of `bits` (each 0 or 1, MSB first within a symbol).
pub fn map_bits_to_symbols(bits: &[u8], scheme: ModulationScheme) -> Result<SymbolStream> {
    let per_symbol = scheme.bits_per_symbol().ok_or(SynthError::UnsupportedScheme(scheme))?;
    if bits.len() % per_symbol != 0 {
        return Err(SynthError::BitCount { bits: bits.len(), per_symbol });
    }
    if let Some(&b) = bits.iter().find(|&&b| b > 1) {
        return Err(SynthError::InvalidBit(b));
    }
    let table = constellation(scheme).expect("linear scheme has a table");
    let symbols = bits
        .chunks_exact(per_symbol)
        .map(|word| table[word.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize)])
        .collect();
    Ok(SymbolStream { scheme, symbols })
}

/// Root-raised-cosine interpolation by `sps`. The filter transient is
/// trimmed symmetrically so the output has exactly `symbols·sps` samples and
/// symbol `k` peaks at sample `k·sps`.
pub fn pulse_shape(symbols: &SymbolStream, sps: usize, rolloff: f64, span: usize) -> Result<BasebandSignal> {
    if sps < 2 {
        return Err(SynthError::Parameter(format!("sps must be at least 2, got {sps}")));
    }
    if span < 4 {
        return Err(SynthError::Parameter(format!("filter span must be at least 4 symbols, got {span}")));
    }
    if !(0.0..=1.0).contains(&rolloff) {
        return Err(SynthError::Parameter(format!("rolloff must lie in [0, 1], got {rolloff}")));
    }
    let taps = rrc_taps(sps, rolloff, span);
    let delay = (taps.len() - 1) / 2;
    let len = symbols.symbols.len() * sps;
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for (k, &s) in symbols.symbols.iter().enumerate() {
        // tap index i contributes to output n = k·sps + i − delay
        let first = (k * sps) as isize - delay as isize;
        for (i, &h) in taps.iter().enumerate() {
            let n = first + i as isize;
            if n >= 0 && (n as usize) < len {
                out[n as usize] += s * h;
            }
        }
    }
    Ok(BasebandSignal::new(out, sps as f64, Some(sps)))
}

/// Continuous-phase FSK. Each bit maps to `±1` (1 → +1); the frequency pulse
/// is rectangular over one symbol (CPFSK) or Gaussian-smoothed with
/// bandwidth-time product `bt` (GFSK). Sample `n` carries the phase
/// accumulated through increment `n`, so it has unit magnitude.
pub fn modulate_fsk(
    bits: &[u8],
    scheme: ModulationScheme,
    sps: usize,
    mod_index: f64,
    bt: f64,
) -> Result<BasebandSignal> {
    if !matches!(scheme, ModulationScheme::Cpfsk | ModulationScheme::Gfsk) {
        return Err(SynthError::UnsupportedScheme(scheme));
    }
    if sps < 1 {
        return Err(SynthError::Parameter("sps must be positive".into()));
    }
    if !(mod_index > 0.0) {
        return Err(SynthError::Parameter(format!("modulation index must be positive, got {mod_index}")));
    }
    if let Some(&b) = bits.iter().find(|&&b| b > 1) {
        return Err(SynthError::InvalidBit(b));
    }
    let mut freq: Vec<f64> = bits
        .iter()
        .flat_map(|&b| std::iter::repeat_n(if b == 1 { 1.0 } else { -1.0 }, sps))
        .collect();
    if scheme == ModulationScheme::Gfsk {
        if !(bt > 0.0) {
            return Err(SynthError::Parameter(format!("BT product must be positive, got {bt}")));
        }
        freq = convolve_same(&freq, &gaussian_taps(sps, bt, 4));
    }
    let step = PI * mod_index / sps as f64;
    let mut phase = 0.0;
    let samples = freq
        .iter()
        .map(|&f| {
            phase += step * f;
            Complex64::from_polar(1.0, phase)
        })
        .collect();
    Ok(BasebandSignal::new(samples, sps as f64, Some(sps)))
}

/// Parameters of the analog modulators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalogParams {
    pub sample_rate: f64,
    /// AM modulation depth μ in `1 + μ·m`.
    pub am_index: f64,
    /// WBFM frequency deviation per unit message amplitude, Hz.
    pub fm_deviation_hz: f64,
}

impl Default for AnalogParams {
    fn default() -> Self {
        AnalogParams { sample_rate: MOD_SAMPLE_RATE, am_index: 0.8, fm_deviation_hz: 50e3 }
    }
}

/// AM-DSB: `1 + μ·m`. AM-SSB: the analytic signal `m + j·H{m}` (upper
/// sideband, suppressed carrier). WBFM: `e^{j2π·k_f·Σm/fs}`.
pub fn modulate_analog(scheme: ModulationScheme, message: &[f64], params: &AnalogParams) -> Result<BasebandSignal> {
    let peak = message.iter().fold(0.0f64, |p, m| p.max(m.abs()));
    if !(peak <= 1.0 + 1e-12) {
        return Err(SynthError::MessageNotNormalized(peak));
    }
    let samples = match scheme {
        ModulationScheme::AmDsb => {
            message.iter().map(|&m| Complex64::new(1.0 + params.am_index * m, 0.0)).collect()
        }
        ModulationScheme::AmSsb => analytic_signal(message),
        ModulationScheme::Wbfm => {
            let step = 2.0 * PI * params.fm_deviation_hz / params.sample_rate;
            let mut phase = 0.0;
            message
                .iter()
                .map(|&m| {
                    phase += step * m;
                    Complex64::from_polar(1.0, phase)
                })
                .collect()
        }
        other => return Err(SynthError::UnsupportedScheme(other)),
    };
    Ok(BasebandSignal::new(samples, params.sample_rate, None))
}

/// `m + j·H{m}` by zeroing negative frequencies; zero-pads to a power of two.
fn analytic_signal(message: &[f64]) -> Vec<Complex64> {
    let n = message.len();
    if n == 0 {
        return Vec::new();
    }
    let padded = n.next_power_of_two();
    let mut buf: Vec<Complex64> = message.iter().map(|&m| Complex64::new(m, 0.0)).collect();
    buf.resize(padded, Complex64::new(0.0, 0.0));
    transforms::fft_in_place(&mut buf, false);
    for (k, v) in buf.iter_mut().enumerate() {
        let gain = if k == 0 || k == padded / 2 {
            1.0
        } else if k < padded / 2 {
            2.0
        } else {
            0.0
        };
        *v *= gain;
    }
    transforms::fft_in_place(&mut buf, true);
    let scale = 1.0 / padded as f64;
    buf.truncate(n);
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// Synthetic audio: 3–5 random tones in 0.3–5 kHz, peak-normalized to 1,
/// with silence gaps covering 0–30% of the duration.
pub fn audio_surrogate<R: Rng + ?Sized>(len: usize, sample_rate: f64, rng: &mut R) -> Vec<f64> {
    let tones: Vec<(f64, f64, f64)> = (0..rng.random_range(3..=5))
        .map(|_| {
            (
                rng.random_range(300.0..5000.0),
                rng.random_range(0.2..1.0),
                rng.random_range(0.0..2.0 * PI),
            )
        })
        .collect();
    let mut m: Vec<f64> = (0..len)
        .map(|n| {
            let t = n as f64 / sample_rate;
            tones.iter().map(|&(f, a, p)| a * (2.0 * PI * f * t + p).sin()).sum()
        })
        .collect();
    let peak = m.iter().fold(0.0f64, |p, v| p.max(v.abs()));
    if peak > 0.0 {
        m.iter_mut().for_each(|v| *v /= peak);
    }

    let silence = (rng.random_range(0.0..0.3) * len as f64) as usize;
    let gaps = rng.random_range(1..=3usize);
    let mut remaining = silence;
    for g in 0..gaps {
        let width = if g + 1 == gaps { remaining } else { rng.random_range(0..=remaining) };
        remaining -= width;
        if width == 0 || width >= len {
            continue;
        }
        let start = rng.random_range(0..=len - width);
        m[start..start + width].iter_mut().for_each(|v| *v = 0.0);
    }
    m
}

pub(crate) fn random_bits<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<u8> {
    (0..n).map(|_| rng.random_range(0..=1u8)).collect()
}

/// Nominal sample rate of the modulation-recognition captures.
pub const MOD_SAMPLE_RATE: f64 = 1e6;
/// Samples per symbol drawn per example; 128 samples hold 8–16 symbols.
pub const SPS_CHOICES: [usize; 5] = [8, 10, 12, 14, 16];
pub const RRC_ROLLOFF: f64 = 0.35;
pub const RRC_SPAN: usize = 8;
pub const FSK_MOD_INDEX: f64 = 0.5;
pub const GFSK_BT: f64 = 0.3;

/// One clean waveform of at least `len` samples for `scheme`, with the
/// per-example parameters (sps, payload, audio message) drawn from `rng`.
pub fn synthesize_modulation<R: Rng + ?Sized>(
    scheme: ModulationScheme,
    len: usize,
    rng: &mut R,
) -> BasebandSignal {
    let sps = SPS_CHOICES[rng.random_range(0..SPS_CHOICES.len())];
    let nsym = len.div_ceil(sps) + 1;
    let mut sig = if let Some(bps) = scheme.bits_per_symbol() {
        let symbols = map_bits_to_symbols(&random_bits(rng, nsym * bps), scheme).expect("bit count is a multiple");
        pulse_shape(&symbols, sps, RRC_ROLLOFF, RRC_SPAN).expect("valid shaping parameters")
    } else if scheme.is_analog() {
        // A long message, cropped, so a capture can fall inside a silence gap.
        let long = (len * 16).max(4096);
        let message = audio_surrogate(long, MOD_SAMPLE_RATE, rng);
        let start = rng.random_range(0..=long - len);
        modulate_analog(scheme, &message[start..start + len], &AnalogParams::default())
            .expect("surrogate message is peak-normalized")
    } else {
        modulate_fsk(&random_bits(rng, nsym), scheme, sps, FSK_MOD_INDEX, GFSK_BT).expect("valid FSK parameters")
    };
    sig.samples.truncate(len);
    sig.sample_rate = MOD_SAMPLE_RATE;
    sig
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;

    fn peak_bin(x: &[Complex64]) -> usize {
        let w = transforms::dft(x);
        (0..w.len()).max_by(|&a, &b| w[a].norm().total_cmp(&w[b].norm())).unwrap()
    }

    #[test]
    fn bpsk_qpsk_pam4_examples() {
        let s = map_bits_to_symbols(&[0, 1], ModulationScheme::Bpsk).unwrap();
        assert_eq!(s.symbols, vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]);

        let s = map_bits_to_symbols(&[0, 0], ModulationScheme::Qpsk).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert!((s.symbols[0] - Complex64::new(r, r)).norm() < 1e-15);

        let s = map_bits_to_symbols(&[0, 0, 0, 1, 1, 1, 1, 0], ModulationScheme::Pam4).unwrap();
        let r5 = 5f64.sqrt();
        let want = [-3.0 / r5, -1.0 / r5, 1.0 / r5, 3.0 / r5];
        for (got, w) in s.symbols.iter().zip(want) {
            assert!((got.re - w).abs() < 1e-15 && got.im == 0.0);
        }
    }

    #[test]
    fn mapping_errors() {
        assert_eq!(
            map_bits_to_symbols(&[0, 1, 1], ModulationScheme::Qpsk),
            Err(SynthError::BitCount { bits: 3, per_symbol: 2 })
        );
        for s in [ModulationScheme::Cpfsk, ModulationScheme::Gfsk, ModulationScheme::Wbfm, ModulationScheme::AmSsb] {
            assert_eq!(map_bits_to_symbols(&[0, 1], s), Err(SynthError::UnsupportedScheme(s)));
        }
        assert_eq!(map_bits_to_symbols(&[2], ModulationScheme::Bpsk), Err(SynthError::InvalidBit(2)));
    }

    #[test]
    fn pulse_shape_examples() {
        let one = SymbolStream { scheme: ModulationScheme::Bpsk, symbols: vec![Complex64::new(1.0, 0.0)] };
        let sig = pulse_shape(&one, 8, 0.35, 8).unwrap();
        let taps = rrc_taps(8, 0.35, 8);
        assert_eq!(sig.len(), 8);
        let peak = sig.samples.iter().map(|v| v.re).fold(f64::MIN, f64::max);
        assert_eq!(peak, taps[taps.len() / 2]);

        let zeros = SymbolStream { scheme: ModulationScheme::Qpsk, symbols: vec![Complex64::new(0.0, 0.0); 10] };
        assert!(pulse_shape(&zeros, 8, 0.35, 8).unwrap().samples.iter().all(|v| v.norm() == 0.0));

        assert!(matches!(pulse_shape(&one, 1, 0.35, 8), Err(SynthError::Parameter(_))));
        assert!(matches!(pulse_shape(&one, 8, 0.35, 3), Err(SynthError::Parameter(_))));
    }

    #[test]
    fn alternating_bpsk_peaks_at_half_symbol_rate() {
        let bits: Vec<u8> = (0..64).map(|k| (k % 2) as u8).collect();
        let syms = map_bits_to_symbols(&bits, ModulationScheme::Bpsk).unwrap();
        let sig = pulse_shape(&syms, 8, 0.35, 8).unwrap();
        assert_eq!(sig.len(), 512);
        // f_sym/2 = fs/16 → bin 32 or its mirror 480
        let k = peak_bin(&sig.samples);
        assert!(k == 32 || k == 480, "peak at bin {k}");
    }

    #[test]
    fn cpfsk_constant_ones_is_quarter_symbol_rate_tone() {
        let sig = modulate_fsk(&[1; 32], ModulationScheme::Cpfsk, 8, 0.5, 0.0).unwrap();
        assert_eq!(sig.len(), 256);
        // f = h/(2T) = f_sym/4 = fs/32 → bin 256/32 = 8
        assert_eq!(peak_bin(&sig.samples), 8);
    }

    #[test]
    fn cpfsk_phase_excursion() {
        let h = 0.5;
        let sig = modulate_fsk(&[1, 0], ModulationScheme::Cpfsk, 8, h, 0.0).unwrap();
        let mut unwrapped = Vec::new();
        let mut prev = 0.0;
        let mut acc = 0.0;
        for x in &sig.samples {
            let mut d = x.arg() - prev;
            while d > PI {
                d -= 2.0 * PI;
            }
            while d < -PI {
                d += 2.0 * PI;
            }
            acc += d;
            prev = x.arg();
            unwrapped.push(acc);
        }
        assert!((unwrapped[7] - PI * h).abs() < 1e-12);
        assert!(unwrapped[15].abs() < 1e-12);
    }

    #[test]
    fn fsk_constant_envelope_and_bounded_increment() {
        let mut rng = rng_from(11);
        let bits: Vec<u8> = (0..200).map(|_| rng.random_range(0..=1u8)).collect();
        for scheme in [ModulationScheme::Cpfsk, ModulationScheme::Gfsk] {
            let sps = 10;
            let h = 0.5;
            let sig = modulate_fsk(&bits, scheme, sps, h, 0.3).unwrap();
            assert!(sig.samples.iter().all(|x| (x.norm() - 1.0).abs() <= 1e-9));
            let bound = PI * h / sps as f64 + 1e-12;
            for w in sig.samples.windows(2) {
                assert!((w[1] * w[0].conj()).arg().abs() <= bound);
            }
        }
        assert!(matches!(
            modulate_fsk(&bits, ModulationScheme::Bpsk, 8, 0.5, 0.3),
            Err(SynthError::UnsupportedScheme(_))
        ));
        assert!(matches!(modulate_fsk(&bits, ModulationScheme::Cpfsk, 8, 0.0, 0.3), Err(SynthError::Parameter(_))));
    }

    #[test]
    fn gfsk_is_smoother_than_cpfsk() {
        let bits: Vec<u8> = (0..64).map(|k| (k % 2) as u8).collect();
        let c = modulate_fsk(&bits, ModulationScheme::Cpfsk, 8, 0.5, 0.3).unwrap();
        let g = modulate_fsk(&bits, ModulationScheme::Gfsk, 8, 0.5, 0.3).unwrap();
        let swing = |s: &BasebandSignal| {
            s.samples.windows(2).map(|w| (w[1] * w[0].conj()).arg().abs()).fold(0.0, f64::max)
        };
        assert!(swing(&g) < swing(&c));
    }

    #[test]
    fn am_dsb_silence_is_unit_carrier() {
        let sig = modulate_analog(ModulationScheme::AmDsb, &[0.0; 64], &AnalogParams::default()).unwrap();
        assert!(sig.samples.iter().all(|x| *x == Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn wbfm_constant_message_is_tone() {
        let params = AnalogParams { sample_rate: 1e6, am_index: 0.8, fm_deviation_hz: 50e3 };
        let n = 256;
        let c = 0.625; // k_f·c = 31.25 kHz = bin 8 of a 256-point DFT at 1 MS/s
        let sig = modulate_analog(ModulationScheme::Wbfm, &vec![c; n], &params).unwrap();
        assert!(sig.samples.iter().all(|x| (x.norm() - 1.0).abs() <= 1e-6));
        assert_eq!(peak_bin(&sig.samples), 8);
    }

    #[test]
    fn am_ssb_single_sideband() {
        let n = 256;
        let msg: Vec<f64> = (0..n).map(|k| (2.0 * PI * 12.0 * k as f64 / n as f64).cos()).collect();
        let sig = modulate_analog(ModulationScheme::AmSsb, &msg, &AnalogParams::default()).unwrap();
        let w = transforms::dft(&sig.samples);
        assert!(w[12].norm() > 100.0);
        assert!(w[n - 12].norm() < 1e-9, "mirror image {}", w[n - 12].norm());
        let other: f64 = w.iter().enumerate().filter(|&(k, _)| k != 12).map(|(_, v)| v.norm()).sum();
        assert!(other < 1e-6);
    }

    #[test]
    fn analog_rejects_unnormalized_message() {
        assert_eq!(
            modulate_analog(ModulationScheme::AmDsb, &[0.5, 1.5], &AnalogParams::default()),
            Err(SynthError::MessageNotNormalized(1.5))
        );
        assert!(matches!(
            modulate_analog(ModulationScheme::Qpsk, &[0.5], &AnalogParams::default()),
            Err(SynthError::UnsupportedScheme(_))
        ));
    }

    #[test]
    fn audio_surrogate_properties() {
        let mut rng = rng_from(5);
        for _ in 0..20 {
            let m = audio_surrogate(4096, 1e6, &mut rng);
            let peak = m.iter().fold(0.0f64, |p, v| p.max(v.abs()));
            assert!(peak <= 1.0 + 1e-12);
            let silent = m.iter().filter(|&&v| v == 0.0).count();
            assert!(silent as f64 <= 0.3 * 4096.0 + 1.0);
        }
    }

    #[test]
    fn every_scheme_synthesizes_deterministically() {
        for scheme in ModulationScheme::ALL {
            let a = synthesize_modulation(scheme, 256, &mut rng_from(42));
            let b = synthesize_modulation(scheme, 256, &mut rng_from(42));
            assert_eq!(a, b);
            assert_eq!(a.len(), 256);
            assert!(a.samples.iter().all(|x| x.re.is_finite() && x.im.is_finite()));
            if let Some(sps) = a.sps {
                let symbols_in_capture = 128 / sps;
                assert!((8..=16).contains(&symbols_in_capture), "{scheme}: sps {sps}");
            }
        }
    }
}
