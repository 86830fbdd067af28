use std::f64::consts::PI;

/// Root-raised-cosine impulse response with `span·sps + 1` taps, centred,
/// scaled so `Σh² = sps` (unit-energy symbols give unit mean sample power).
pub fn rrc_taps(sps: usize, rolloff: f64, span: usize) -> Vec<f64> {
    let n = span * sps;
    let beta = rolloff;
    let mut taps: Vec<f64> = (0..=n)
        .map(|i| {
            let t = (i as f64 - n as f64 / 2.0) / sps as f64;
            if t.abs() < 1e-12 {
                1.0 - beta + 4.0 * beta / PI
            } else if beta > 0.0 && (t.abs() - 1.0 / (4.0 * beta)).abs() < 1e-9 {
                (beta / 2f64.sqrt())
                    * ((1.0 + 2.0 / PI) * (PI / (4.0 * beta)).sin()
                        + (1.0 - 2.0 / PI) * (PI / (4.0 * beta)).cos())
            } else {
                let num = (PI * t * (1.0 - beta)).sin() + 4.0 * beta * t * (PI * t * (1.0 + beta)).cos();
                let den = PI * t * (1.0 - (4.0 * beta * t).powi(2));
                num / den
            }
        })
        .collect();
    let energy: f64 = taps.iter().map(|h| h * h).sum();
    let scale = (sps as f64 / energy).sqrt();
    taps.iter_mut().for_each(|h| *h *= scale);
    taps
}

/// Sampled Gaussian frequency-smoothing filter for GFSK with bandwidth-time
/// product `bt`, spanning `span` symbols, normalized to unit DC gain.
pub fn gaussian_taps(sps: usize, bt: f64, span: usize) -> Vec<f64> {
    let n = span * sps;
    let sigma = (2f64.ln()).sqrt() / (2.0 * PI * bt); // in symbol periods
    let mut taps: Vec<f64> = (0..=n)
        .map(|i| {
            let t = (i as f64 - n as f64 / 2.0) / sps as f64;
            (-t * t / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|h| *h /= sum);
    taps
}

/// Centred ("same") linear convolution: output length equals `x.len()`.
pub fn convolve_same(x: &[f64], taps: &[f64]) -> Vec<f64> {
    let delay = (taps.len() - 1) / 2;
    (0..x.len())
        .map(|n| {
            let mut acc = 0.0;
            for (k, &h) in taps.iter().enumerate() {
                if let Some(idx) = (n + delay).checked_sub(k) {
                    if idx < x.len() {
                        acc += h * x[idx];
                    }
                }
            }
            acc
        })
        .collect()
}
