//! Simplified ISM-band emitters inside a 10 MS/s capture window.
//!
//! The waveforms keep each technology's bandwidth, modulation and
//! channelization; they are not standards-compliant PHYs.
//!
//! | tech   | classes | offsets (MHz)              | waveform                                 |
//! |--------|---------|----------------------------|------------------------------------------|
//! | WiFi   | 3       | −2, 0, +2                  | Barker-11 DSSS BPSK, 5 Mchip/s, RRC 0.2  |
//! | Zigbee | 5       | −3, −1.5, 0, +1.5, +3      | O-QPSK half-sine, 2 Mchip/s, 32-chip PN  |
//! | BT     | 7       | −3, −2, −1, 0, +1, +2, +3  | GFSK 1 Msym/s, h 0.32, BT 0.5            |

use std::fmt;

use num_complex::Complex64;
use rand::Rng;

use super::{convolve_same, modulate_fsk, random_bits, rrc_taps, BasebandSignal, ModulationScheme};
use super::{Result, SynthError};
use crate::seed;

pub const TECH_SAMPLE_RATE: f64 = 10e6;

const WIFI_OFFSETS_MHZ: [f64; 3] = [-2.0, 0.0, 2.0];
const ZIGBEE_OFFSETS_MHZ: [f64; 5] = [-3.0, -1.5, 0.0, 1.5, 3.0];
const BT_OFFSETS_MHZ: [f64; 7] = [-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Technology {
    Wifi80211bg,
    Zigbee802154,
    Bt802151,
}

impl Technology {
    fn offsets_mhz(self) -> &'static [f64] {
        match self {
            Technology::Wifi80211bg => &WIFI_OFFSETS_MHZ,
            Technology::Zigbee802154 => &ZIGBEE_OFFSETS_MHZ,
            Technology::Bt802151 => &BT_OFFSETS_MHZ,
        }
    }

    pub fn channel_count(self) -> usize {
        self.offsets_mhz().len()
    }

    pub fn name(self) -> &'static str {
        match self {
            Technology::Wifi80211bg => "WiFi",
            Technology::Zigbee802154 => "Zigbee",
            Technology::Bt802151 => "BT",
        }
    }

    /// Nominal occupied bandwidth, Hz.
    pub fn bandwidth_hz(self) -> f64 {
        match self {
            Technology::Wifi80211bg => 6e6,
            Technology::Zigbee802154 => 2e6,
            Technology::Bt802151 => 1e6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TechnologyClass {
    pub tech: Technology,
    pub channel_index: u8,
}

impl TechnologyClass {
    pub fn new(tech: Technology, channel_index: u8) -> Result<Self> {
        let cls = TechnologyClass { tech, channel_index };
        cls.offset_hz()?;
        Ok(cls)
    }

    /// All 15 classes in label order: WiFi, then Zigbee, then BT, each by
    /// ascending offset.
    pub fn all() -> Vec<TechnologyClass> {
        [Technology::Wifi80211bg, Technology::Zigbee802154, Technology::Bt802151]
            .into_iter()
            .flat_map(|tech| (0..tech.channel_count() as u8).map(move |channel_index| TechnologyClass { tech, channel_index }))
            .collect()
    }

    pub fn offset_hz(&self) -> Result<f64> {
        self.tech
            .offsets_mhz()
            .get(self.channel_index as usize)
            .map(|mhz| mhz * 1e6)
            .ok_or(SynthError::UnknownClass { tech: self.tech, channel: self.channel_index })
    }

    pub fn bandwidth_hz(&self) -> f64 {
        self.tech.bandwidth_hz()
    }
}

impl fmt::Display for TechnologyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.offset_hz() {
            Ok(hz) => write!(f, "{}{:+.1}MHz", self.tech.name(), hz / 1e6),
            Err(_) => write!(f, "{}?{}", self.tech.name(), self.channel_index),
        }
    }
}

const BARKER_11: [f64; 11] = [1.0, -1.0, 1.0, 1.0, -1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0];
const WIFI_SPS: usize = 2;

const ZIGBEE_BASE_CHIPS: u32 = 0b1101_1001_1100_0011_0101_0010_0010_1110;
const ZIGBEE_SAMPLES_PER_CHIP: usize = 5;

const BT_SPS: usize = 10;
const BT_MOD_INDEX: f64 = 0.32;
const BT_BT: f64 = 0.5;

/// 32-chip sequence of a 4-bit Zigbee symbol: symbols 0–7 are 4-chip
/// rotations of the base sequence, 8–15 the same with odd chips inverted.
fn zigbee_chips(symbol: usize) -> [f64; 32] {
    let base: Vec<u8> = (0..32).map(|i| ((ZIGBEE_BASE_CHIPS >> (31 - i)) & 1) as u8).collect();
    let shift = 4 * (symbol % 8);
    let mut chips = [0.0; 32];
    for (i, c) in chips.iter_mut().enumerate() {
        let mut bit = base[(i + 32 - shift) % 32];
        if symbol >= 8 && i % 2 == 1 {
            bit ^= 1;
        }
        *c = if bit == 1 { 1.0 } else { -1.0 };
    }
    chips
}

fn wifi_waveform<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<Complex64> {
    let nbits = len.div_ceil(WIFI_SPS * BARKER_11.len()) + 2;
    let mut level = 1.0;
    let mut chips = Vec::with_capacity(nbits * 11);
    for b in random_bits(rng, nbits) {
        if b == 1 {
            level = -level; // differential encoding
        }
        chips.extend(BARKER_11.iter().map(|c| c * level));
    }
    let mut up = vec![0.0; chips.len() * WIFI_SPS];
    for (k, c) in chips.iter().enumerate() {
        up[k * WIFI_SPS] = *c;
    }
    let shaped = convolve_same(&up, &rrc_taps(WIFI_SPS, 0.2, 8));
    shaped.into_iter().map(|v| Complex64::new(v, 0.0)).collect()
}

fn zigbee_waveform<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<Complex64> {
    let spc = ZIGBEE_SAMPLES_PER_CHIP;
    let nsym = len.div_ceil(32 * spc) + 1;
    let chips: Vec<f64> = (0..nsym).flat_map(|_| zigbee_chips(rng.random_range(0..16usize))).collect();
    // Even chips on I, odd chips on Q delayed by one chip; each chip a
    // half-sine spanning two chip periods.
    let total = chips.len() * spc + 2 * spc;
    let mut i_arm = vec![0.0; total];
    let mut q_arm = vec![0.0; total];
    let pulse: Vec<f64> =
        (0..2 * spc).map(|n| (std::f64::consts::PI * (n as f64 + 0.5) / (2 * spc) as f64).sin()).collect();
    for (k, &c) in chips.iter().enumerate() {
        let start = k * spc;
        let arm = if k % 2 == 0 { &mut i_arm } else { &mut q_arm };
        for (n, p) in pulse.iter().enumerate() {
            arm[start + n] += c * p;
        }
    }
    i_arm.iter().zip(&q_arm).skip(spc).take(len).map(|(&i, &q)| Complex64::new(i, q)).collect()
}

fn bt_waveform<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<Complex64> {
    let bits = random_bits(rng, len.div_ceil(BT_SPS) + 1);
    let sig = modulate_fsk(&bits, ModulationScheme::Gfsk, BT_SPS, BT_MOD_INDEX, BT_BT).expect("valid GFSK parameters");
    sig.samples
}

/// Clean emission of `cls` at 10 MS/s, shifted to the class's channel offset.
pub fn synthesize_technology(cls: TechnologyClass, duration_samples: usize, seed: u64) -> Result<BasebandSignal> {
    let offset = cls.offset_hz()?;
    if duration_samples == 0 {
        return Err(SynthError::Parameter("duration must be positive".into()));
    }
    let mut rng = seed::rng_from(seed);
    let mut samples = match cls.tech {
        Technology::Wifi80211bg => wifi_waveform(duration_samples, &mut rng),
        Technology::Zigbee802154 => zigbee_waveform(duration_samples, &mut rng),
        Technology::Bt802151 => bt_waveform(duration_samples, &mut rng),
    };
    samples.truncate(duration_samples);
    let sps = match cls.tech {
        Technology::Wifi80211bg => WIFI_SPS,
        Technology::Zigbee802154 => ZIGBEE_SAMPLES_PER_CHIP,
        Technology::Bt802151 => BT_SPS,
    };
    Ok(BasebandSignal::new(samples, TECH_SAMPLE_RATE, Some(sps)).frequency_shift(offset))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::dft;

    /// Averaged periodogram over consecutive 256-sample blocks, DC first.
    fn psd(x: &[Complex64]) -> Vec<f64> {
        let n = 256;
        let mut acc = vec![0.0; n];
        let blocks = x.len() / n;
        for b in 0..blocks {
            let w = dft(&x[b * n..(b + 1) * n]);
            for (a, v) in acc.iter_mut().zip(&w) {
                *a += v.norm_sqr() / blocks as f64;
            }
        }
        acc
    }

    fn bin_hz(k: usize, n: usize) -> f64 {
        let k = if k >= n / 2 { k as f64 - n as f64 } else { k as f64 };
        k * TECH_SAMPLE_RATE / n as f64
    }

    fn centroid_hz(p: &[f64]) -> f64 {
        let total: f64 = p.iter().sum();
        p.iter().enumerate().map(|(k, v)| bin_hz(k, p.len()) * v).sum::<f64>() / total
    }

    /// Total width of the bins within 3 dB of the peak, Hz.
    fn bandwidth_3db(p: &[f64]) -> f64 {
        let peak = p.iter().copied().fold(0.0, f64::max);
        p.iter().filter(|&&v| v >= peak / 2.0).count() as f64 * TECH_SAMPLE_RATE / p.len() as f64
    }

    #[test]
    fn fifteen_classes() {
        let all = TechnologyClass::all();
        assert_eq!(all.len(), 15);
        for c in &all {
            let off = c.offset_hz().unwrap();
            assert!(off.abs() + c.bandwidth_hz() / 2.0 <= TECH_SAMPLE_RATE / 2.0, "{c}");
        }
        assert!(TechnologyClass::new(Technology::Wifi80211bg, 3).is_err());
    }

    #[test]
    fn unknown_class_is_rejected() {
        let bogus = TechnologyClass { tech: Technology::Zigbee802154, channel_index: 9 };
        assert_eq!(
            synthesize_technology(bogus, 256, 1),
            Err(SynthError::UnknownClass { tech: Technology::Zigbee802154, channel: 9 })
        );
    }

    #[test]
    fn bluetooth_centroid_at_channel_offset() {
        let cls = TechnologyClass::new(Technology::Bt802151, 5).unwrap();
        assert_eq!(cls.offset_hz().unwrap(), 2e6);
        let sig = synthesize_technology(cls, 256 * 64, 3).unwrap();
        let c = centroid_hz(&psd(&sig.samples));
        assert!((c - 2e6).abs() <= 200e3, "centroid {c}");
    }

    /// Two-sided 3 dB width of the half-sine O-QPSK spectrum
    /// `[cos(2πfT) / (1 − 16f²T²)]²` for chip period `T`, by bisection.
    fn half_sine_oqpsk_3db(chip_rate: f64) -> f64 {
        let t = 1.0 / chip_rate;
        let psd = |f: f64| (2.0 * std::f64::consts::PI * f * t).cos().powi(2) / (1.0 - 16.0 * f * f * t * t).powi(2);
        let (mut lo, mut hi) = (0.0, 0.5 / t);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if psd(mid) > 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        2.0 * lo
    }

    #[test]
    fn zigbee_bandwidth() {
        let want = half_sine_oqpsk_3db(2e6);
        assert!((want - 1.18e6).abs() < 0.01e6, "{want}");
        let cls = TechnologyClass::new(Technology::Zigbee802154, 2).unwrap();
        let sig = synthesize_technology(cls, 256 * 400, 9).unwrap();
        let p = psd(&sig.samples);
        let bw = bandwidth_3db(&p);
        assert!((bw - want).abs() <= 0.25 * want, "3 dB bandwidth {bw}");
        assert!(centroid_hz(&p).abs() < 100e3);
    }

    #[test]
    fn wifi_is_wide() {
        let cls = TechnologyClass::new(Technology::Wifi80211bg, 1).unwrap();
        let sig = synthesize_technology(cls, 256 * 400, 4).unwrap();
        let bw = bandwidth_3db(&psd(&sig.samples));
        assert!(bw > 3e6, "3 dB bandwidth {bw}");
    }

    #[test]
    fn deterministic_per_seed() {
        for cls in TechnologyClass::all() {
            let a = synthesize_technology(cls, 300, 77).unwrap();
            let b = synthesize_technology(cls, 300, 77).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.len(), 300);
            assert!(a.power() > 0.1);
            let c = synthesize_technology(cls, 300, 78).unwrap();
            assert_ne!(a, c);
        }
    }

    #[test]
    fn zigbee_chip_table() {
        let s0 = zigbee_chips(0);
        let s1 = zigbee_chips(1);
        // rotation by four chips
        for i in 0..32 {
            assert_eq!(s1[(i + 4) % 32], s0[i]);
        }
        let s8 = zigbee_chips(8);
        for i in 0..32 {
            assert_eq!(s8[i], if i % 2 == 1 { -s0[i] } else { s0[i] });
        }
    }
}
