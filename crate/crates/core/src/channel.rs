//! Receiver-side impairment chain: multipath fading, carrier-frequency
//! offset, oscillator phase noise, sample-clock drift and AWGN.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use thiserror::Error;

use crate::seed;
use crate::sigsynth::{mean_power, BasebandSignal};

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("fading channel needs at least one tap")]
    EmptyTaps,
    #[error("first tap must have zero delay, got {0}")]
    FirstTapDelay(f64),
    #[error("cannot add noise at a target SNR to a zero-power signal")]
    ZeroPower,
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

pub type Result<T> = std::result::Result<T, ChannelError>;

/// One propagation path: complex gain and delay in (possibly fractional) samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tap {
    pub gain: Complex64,
    pub delay: f64,
}

impl Tap {
    pub fn new(gain: Complex64, delay: f64) -> Self {
        Tap { gain, delay }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    /// Multipath fading, CFO, phase noise, clock drift, AWGN.
    Rich,
    /// One complex tap and AWGN.
    Flat,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelParams {
    /// Target segment SNR; `f64::INFINITY` disables the noise stage.
    pub snr_db: f64,
    pub taps: Vec<Tap>,
    pub cfo_hz: f64,
    pub sample_rate: f64,
    /// Per-sample standard deviation of the Wiener phase walk, radians.
    pub phase_noise_std: f64,
    pub clock_skew_ppm: f64,
    pub profile: Profile,
}

/// Declared draw ranges for the random channel realizations.
pub mod draw {
    pub const MAX_PATHS: usize = 4;
    pub const MAX_DELAY: usize = 3;
    /// Per-tap power decay of the exponential power-delay profile.
    pub const PDP_DECAY: f64 = 0.5;
    pub const CFO_MAX_HZ: f64 = 500.0;
    pub const PHASE_NOISE_STD: f64 = 0.01;
    pub const SKEW_MAX_PPM: f64 = 50.0;
}

impl ChannelParams {
    /// A channel that changes nothing.
    pub fn identity(profile: Profile, sample_rate: f64) -> Self {
        ChannelParams {
            snr_db: f64::INFINITY,
            taps: vec![Tap::new(Complex64::new(1.0, 0.0), 0.0)],
            cfo_hz: 0.0,
            sample_rate,
            phase_noise_std: 0.0,
            clock_skew_ppm: 0.0,
            profile,
        }
    }

    /// Random time-varying-multipath realization: 1–4 Rayleigh paths with an
    /// exponential power-delay profile on distinct delays 0–3 (first path at
    /// delay 0), CFO uniform in ±500 Hz, fixed phase-noise step, clock skew
    /// uniform in ±50 ppm.
    pub fn draw_rich<R: Rng + ?Sized>(snr_db: f64, sample_rate: f64, rng: &mut R) -> Self {
        let paths = rng.random_range(1..=draw::MAX_PATHS);
        let mut delays: Vec<usize> = (1..=draw::MAX_DELAY).collect();
        // partial Fisher–Yates for the extra path delays
        for i in 0..delays.len() {
            let j = rng.random_range(i..delays.len());
            delays.swap(i, j);
        }
        let mut chosen = vec![0usize];
        chosen.extend(delays.into_iter().take(paths - 1));
        chosen.sort_unstable();

        let total: f64 = chosen.iter().map(|&d| draw::PDP_DECAY.powi(d as i32)).sum();
        let taps = chosen
            .iter()
            .map(|&d| {
                let power = draw::PDP_DECAY.powi(d as i32) / total;
                Tap::new(rayleigh(rng) * power.sqrt(), d as f64)
            })
            .collect();
        ChannelParams {
            snr_db,
            taps,
            cfo_hz: rng.random_range(-draw::CFO_MAX_HZ..=draw::CFO_MAX_HZ),
            sample_rate,
            phase_noise_std: draw::PHASE_NOISE_STD,
            clock_skew_ppm: rng.random_range(-draw::SKEW_MAX_PPM..=draw::SKEW_MAX_PPM),
            profile: Profile::Rich,
        }
    }

    /// Random flat-fading realization: one Rayleigh tap.
    pub fn draw_flat<R: Rng + ?Sized>(snr_db: f64, sample_rate: f64, rng: &mut R) -> Self {
        ChannelParams {
            taps: vec![Tap::new(rayleigh(rng), 0.0)],
            snr_db,
            ..ChannelParams::identity(Profile::Flat, sample_rate)
        }
    }

    fn validate(&self) -> Result<()> {
        let first = self.taps.first().ok_or(ChannelError::EmptyTaps)?;
        if first.delay != 0.0 {
            return Err(ChannelError::FirstTapDelay(first.delay));
        }
        if self.snr_db.is_nan() || (self.snr_db.is_infinite() && self.snr_db < 0.0) {
            return Err(ChannelError::Parameter(format!("snr {} dB", self.snr_db)));
        }
        Ok(())
    }
}

/// Unit-power circular complex Gaussian.
fn rayleigh<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) / 2f64.sqrt()
}

/// `x[n − d]` for fractional `d`, linear interpolation, zero before the start.
fn delayed(x: &[Complex64], n: usize, delay: f64) -> Complex64 {
    let zero = Complex64::new(0.0, 0.0);
    let at = |i: isize| if i >= 0 && (i as usize) < x.len() { x[i as usize] } else { zero };
    let whole = delay.floor();
    let frac = delay - whole;
    let i = n as isize - whole as isize;
    at(i) * (1.0 - frac) + at(i - 1) * frac
}

/// `y[n] = Σ α_i · x[n − τ_i]`, length preserved.
pub fn apply_fading(x: &BasebandSignal, taps: &[Tap]) -> Result<BasebandSignal> {
    if taps.is_empty() {
        return Err(ChannelError::EmptyTaps);
    }
    if let Some(t) = taps.iter().find(|t| !(t.delay >= 0.0)) {
        return Err(ChannelError::Parameter(format!("negative tap delay {}", t.delay)));
    }
    let y = (0..x.len())
        .map(|n| taps.iter().map(|t| t.gain * delayed(&x.samples, n, t.delay)).sum())
        .collect();
    Ok(x.with_samples(y))
}

/// `y[n] = x[n]·e^{j2π·cfo·n/fs}`.
pub fn apply_cfo(x: &BasebandSignal, cfo_hz: f64, fs: f64) -> Result<BasebandSignal> {
    if !(cfo_hz.abs() < fs / 2.0) {
        return Err(ChannelError::Parameter(format!("|cfo| {cfo_hz} Hz must be below fs/2 = {}", fs / 2.0)));
    }
    if cfo_hz == 0.0 {
        return Ok(x.clone());
    }
    let step = 2.0 * PI * cfo_hz / fs;
    Ok(x.with_samples(
        x.samples.iter().enumerate().map(|(n, &v)| v * Complex64::from_polar(1.0, step * n as f64)).collect(),
    ))
}

/// Zero-start Wiener phase walk with per-step standard deviation `std`.
pub fn phase_walk(len: usize, std: f64, seed: u64) -> Vec<f64> {
    let mut rng = seed::rng_from(seed);
    let mut theta = 0.0;
    let mut out = Vec::with_capacity(len);
    for n in 0..len {
        if n > 0 && std > 0.0 {
            let step: f64 = StandardNormal.sample(&mut rng);
            theta += std * step;
        }
        out.push(theta);
    }
    out
}

/// `y[n] = x[n]·e^{jθ[n]}` with θ from [`phase_walk`].
pub fn apply_phase_noise(x: &BasebandSignal, std: f64, seed: u64) -> Result<BasebandSignal> {
    if !(std >= 0.0) {
        return Err(ChannelError::Parameter(format!("phase noise std must be non-negative, got {std}")));
    }
    if std == 0.0 {
        return Ok(x.clone());
    }
    let theta = phase_walk(x.len(), std, seed);
    Ok(x.with_samples(x.samples.iter().zip(&theta).map(|(&v, &t)| v * Complex64::from_polar(1.0, t)).collect()))
}

/// Sample `x` at positions `offset + n·rate` by linear interpolation,
/// clamping past the last sample; output length equals input length.
pub fn resample_linear(x: &[Complex64], rate: f64, offset: f64) -> Vec<Complex64> {
    let len = x.len();
    if len == 0 {
        return Vec::new();
    }
    (0..len)
        .map(|n| {
            let pos = offset + n as f64 * rate;
            let i = pos.floor();
            let frac = pos - i;
            let i = i as usize;
            if i + 1 >= len {
                x[len - 1]
            } else {
                x[i] * (1.0 - frac) + x[i + 1] * frac
            }
        })
        .collect()
}

/// Clock skew: resample at rate `1 + skew·1e-6` from a random initial
/// fractional offset in [0, 1).
pub fn apply_timing_drift(x: &BasebandSignal, skew_ppm: f64, seed: u64) -> Result<BasebandSignal> {
    if !(skew_ppm.abs() <= 200.0) {
        return Err(ChannelError::Parameter(format!("|skew| {skew_ppm} ppm exceeds 200")));
    }
    let offset: f64 = seed::rng_from(seed).random_range(0.0..1.0);
    Ok(x.with_samples(resample_linear(&x.samples, 1.0 + skew_ppm * 1e-6, offset)))
}

/// Add circular complex Gaussian noise whose realized power over the segment
/// is exactly `P_signal · 10^{−snr/10}`. `snr_db = +∞` returns the input.
pub fn apply_awgn(x: &BasebandSignal, snr_db: f64, seed: u64) -> Result<BasebandSignal> {
    if snr_db == f64::INFINITY {
        return Ok(x.clone());
    }
    if !snr_db.is_finite() {
        return Err(ChannelError::Parameter(format!("snr {snr_db} dB")));
    }
    let ps = x.power();
    if !(ps > 0.0) {
        return Err(ChannelError::ZeroPower);
    }
    Ok(add_noise(x, ps * 10f64.powf(-snr_db / 10.0), seed))
}

/// Add circular complex Gaussian noise whose realized power over the segment
/// is exactly `noise_power`.
pub fn add_noise(x: &BasebandSignal, noise_power: f64, seed: u64) -> BasebandSignal {
    let mut rng = seed::rng_from(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let noise: Vec<Complex64> =
        (0..x.len()).map(|_| Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng))).collect();
    let scale = (noise_power / mean_power(&noise)).sqrt();
    x.with_samples(x.samples.iter().zip(&noise).map(|(&s, &n)| s + n * scale).collect())
}

/// Everything except the noise stage: fading → CFO → phase noise → drift for
/// [`Profile::Rich`], the single tap for [`Profile::Flat`].
pub fn propagate(x: &BasebandSignal, params: &ChannelParams, seed: u64) -> Result<BasebandSignal> {
    params.validate()?;
    match params.profile {
        Profile::Rich => {
            let y = apply_fading(x, &params.taps)?;
            let y = apply_cfo(&y, params.cfo_hz, params.sample_rate)?;
            let y = apply_phase_noise(&y, params.phase_noise_std, seed::derive(seed, 1, 0))?;
            apply_timing_drift(&y, params.clock_skew_ppm, seed::derive(seed, 2, 0))
        }
        Profile::Flat => apply_fading(x, &params.taps[..1]),
    }
}

/// Full chain with AWGN last, so the SNR tag is exact at the receiver.
pub fn channel_pipeline(x: &BasebandSignal, params: &ChannelParams, seed: u64) -> Result<BasebandSignal> {
    let y = propagate(x, params, seed)?;
    apply_awgn(&y, params.snr_db, seed::derive(seed, 3, 0))
}

/// Segment SNR in dB of `received` against the clean reference.
pub fn measured_snr_db(clean: &[Complex64], received: &[Complex64]) -> f64 {
    let noise: Vec<Complex64> = received.iter().zip(clean).map(|(r, c)| r - c).collect();
    10.0 * (mean_power(clean) / mean_power(&noise)).log10()
}
