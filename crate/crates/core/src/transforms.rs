//! Capture representations: IQ, amplitude/phase and FFT, each a 2×N real
//! matrix, plus per-example normalization.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::dataset::IqVector;

/// Which mapping produced a [`FeatureVector`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Representation {
    Iq,
    AmpPhase,
    Fft,
}

impl Representation {
    pub const ALL: [Representation; 3] =
        [Representation::Iq, Representation::AmpPhase, Representation::Fft];

    pub fn tag(self) -> u8 {
        match self {
            Representation::Iq => 0,
            Representation::AmpPhase => 1,
            Representation::Fft => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Representation::Iq),
            1 => Some(Representation::AmpPhase),
            2 => Some(Representation::Fft),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Representation::Iq => "iq",
            Representation::AmpPhase => "ap",
            Representation::Fft => "fft",
        }
    }

    /// Raw capture to normalized features.
    pub fn apply(self, capture: &IqVector) -> FeatureVector {
        let fv = match self {
            Representation::Iq => to_iq(capture),
            Representation::AmpPhase => to_amp_phase(capture),
            Representation::Fft => to_fft_repr(capture),
        };
        normalize(&fv)
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Representation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "iq" => Ok(Representation::Iq),
            "ap" | "amp_phase" | "amp-phase" => Ok(Representation::AmpPhase),
            "fft" => Ok(Representation::Fft),
            other => Err(format!("unknown representation '{other}' (expected iq, ap or fft)")),
        }
    }
}

/// A 2×N real matrix stored row-major: row 0 then row 1.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    data: Vec<f64>,
    repr: Representation,
}

impl FeatureVector {
    pub fn from_rows(row0: &[f64], row1: &[f64], repr: Representation) -> Self {
        assert_eq!(row0.len(), row1.len(), "rows must have equal length");
        let mut data = Vec::with_capacity(row0.len() * 2);
        data.extend_from_slice(row0);
        data.extend_from_slice(row1);
        FeatureVector { data, repr }
    }

    pub fn len(&self) -> usize {
        self.data.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        (2, self.len())
    }

    pub fn repr(&self) -> Representation {
        self.repr
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let n = self.len();
        &self.data[r * n..(r + 1) * n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Row-major single-precision copy, the network's input layout.
    pub fn to_f32(&self) -> Vec<f32> {
        self.data.iter().map(|&v| v as f32).collect()
    }

    /// Rebuild complex samples from an IQ or FFT matrix (row 0 real, row 1 imaginary).
    pub fn to_complex(&self) -> Vec<Complex64> {
        self.row(0)
            .iter()
            .zip(self.row(1))
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect()
    }
}

/// Row 0 in-phase, row 1 quadrature.
pub fn to_iq(r: &IqVector) -> FeatureVector {
    let (i, q): (Vec<f64>, Vec<f64>) =
        r.samples().iter().map(|s| (s.re as f64, s.im as f64)).unzip();
    FeatureVector::from_rows(&i, &q, Representation::Iq)
}

/// Row 0 magnitude, row 1 four-quadrant phase divided by π, so in (−1, 1].
/// A zero sample maps to phase 0.
pub fn to_amp_phase(r: &IqVector) -> FeatureVector {
    let (a, p): (Vec<f64>, Vec<f64>) = r
        .samples()
        .iter()
        .map(|s| {
            let (re, im) = (s.re as f64, s.im as f64);
            let amp = re.hypot(im);
            let phase = if amp == 0.0 { 0.0 } else { im.atan2(re) / PI };
            (amp, phase)
        })
        .unzip();
    FeatureVector::from_rows(&a, &p, Representation::AmpPhase)
}

/// Inverse of [`to_amp_phase`]: `A·e^{jπφ}`.
pub fn from_amp_phase(fv: &FeatureVector) -> Vec<Complex64> {
    fv.row(0)
        .iter()
        .zip(fv.row(1))
        .map(|(&a, &p)| Complex64::from_polar(a, p * PI))
        .collect()
}

/// Row 0 real part, row 1 imaginary part of the unnormalized DFT.
pub fn to_fft_repr(r: &IqVector) -> FeatureVector {
    let w = dft(&r.to_complex64());
    let (re, im): (Vec<f64>, Vec<f64>) = w.iter().map(|c| (c.re, c.im)).unzip();
    FeatureVector::from_rows(&re, &im, Representation::Fft)
}

/// Unnormalized forward DFT, `W[k] = Σ x[n] e^{−j2πkn/N}`, DC bin first.
/// Radix-2 for power-of-two lengths, direct evaluation otherwise.
pub fn dft(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    if buf.len().is_power_of_two() {
        fft_in_place(&mut buf, false);
        buf
    } else {
        direct_dft(x, false)
    }
}

/// Inverse DFT with the 1/N factor, so `idft(dft(x)) == x`.
pub fn idft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf = if n.is_power_of_two() {
        let mut b = x.to_vec();
        fft_in_place(&mut b, true);
        b
    } else {
        direct_dft(x, true)
    };
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

fn direct_dft(x: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let n = x.len();
    let sign = if inverse { 1.0 } else { -1.0 };
    (0..n)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(t, &v)| {
                    // reduce k·t mod n first to keep the angle small
                    let angle = sign * 2.0 * PI * ((k * t) % n) as f64 / n as f64;
                    v * Complex64::from_polar(1.0, angle)
                })
                .sum()
        })
        .collect()
}

/// Iterative decimation-in-time radix-2 FFT. No scaling in either direction.
///
/// Panics if the length is not a power of two.
pub fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    if n <= 1 {
        return;
    }
    assert!(n.is_power_of_two(), "radix-2 FFT needs a power-of-two length, got {n}");

    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }

    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let step = sign * 2.0 * PI / len as f64;
        let twiddles: Vec<Complex64> =
            (0..half).map(|k| Complex64::from_polar(1.0, step * k as f64)).collect();
        for block in buf.chunks_exact_mut(len) {
            let (lo, hi) = block.split_at_mut(half);
            for ((a, b), w) in lo.iter_mut().zip(hi.iter_mut()).zip(&twiddles) {
                let t = *b * w;
                *b = *a - t;
                *a += t;
            }
        }
        len <<= 1;
    }
}

/// Per-example scaling. IQ and FFT: the whole matrix to unit RMS.
/// Amplitude/phase: amplitude row to unit RMS, phase row untouched.
/// An all-zero matrix (or zero amplitude row) is returned unchanged.
pub fn normalize(x: &FeatureVector) -> FeatureVector {
    fn rms(v: &[f64]) -> f64 {
        (v.iter().map(|a| a * a).sum::<f64>() / v.len().max(1) as f64).sqrt()
    }

    let mut out = x.clone();
    let n = x.len();
    let target = match x.repr {
        Representation::Iq | Representation::Fft => &mut out.data[..],
        Representation::AmpPhase => &mut out.data[..n],
    };
    let r = rms(target);
    if r > 0.0 && r.is_finite() {
        target.iter_mut().for_each(|v| *v /= r);
    }
    out
}
