//! Constellation tables for the linear digital schemes.
//!
//! Every table is indexed by the bit word it encodes, MSB first, is
//! Gray-coded (nearest neighbours differ in one bit) and has unit mean
//! energy.
//!
//! | scheme | bits | construction                                   | scale  |
//! |--------|------|------------------------------------------------|--------|
//! | BPSK   | 1    | 0 → +1, 1 → −1                                 | 1      |
//! | QPSK   | 2    | (1−2b₀) + j(1−2b₁)                             | 1/√2   |
//! | 8-PSK  | 3    | e^{j2πk/8} at word gray(k)                     | 1      |
//! | 4-PAM  | 2    | 00 → −3, 01 → −1, 11 → +1, 10 → +3             | 1/√5   |
//! | 16-QAM | 4    | I from bits 0..2, Q from bits 2..4, Gray 4-PAM | 1/√10  |
//! | 64-QAM | 6    | I from bits 0..3, Q from bits 3..6, Gray 8-PAM | 1/√42  |

use std::f64::consts::PI;

use num_complex::Complex64;

use super::ModulationScheme;

fn gray(k: usize) -> usize {
    k ^ (k >> 1)
}

/// Gray-coded PAM levels `{−(M−1), …, M−1}` indexed by bit word, unscaled.
fn gray_pam(bits: u32) -> Vec<f64> {
    let m = 1usize << bits;
    let mut table = vec![0.0; m];
    for k in 0..m {
        table[gray(k)] = (2 * k) as f64 - (m - 1) as f64;
    }
    table
}

fn square_qam(bits_per_axis: u32) -> Vec<Complex64> {
    let pam = gray_pam(bits_per_axis);
    let m = pam.len();
    let scale = (2.0 * pam.iter().map(|v| v * v).sum::<f64>() / m as f64).sqrt();
    let mut table = Vec::with_capacity(m * m);
    for word in 0..m * m {
        let (i, q) = (word >> bits_per_axis, word & (m - 1));
        table.push(Complex64::new(pam[i], pam[q]) / scale);
    }
    table
}

/// Table for `scheme`, or `None` for the non-linear and analog schemes.
pub fn table(scheme: ModulationScheme) -> Option<Vec<Complex64>> {
    use ModulationScheme::*;
    let t = match scheme {
        Bpsk => vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)],
        Qpsk => {
            let s = 1.0 / 2f64.sqrt();
            (0..4)
                .map(|w| {
                    let (b0, b1) = ((w >> 1) & 1, w & 1);
                    Complex64::new(1.0 - 2.0 * b0 as f64, 1.0 - 2.0 * b1 as f64) * s
                })
                .collect()
        }
        Psk8 => {
            let mut t = vec![Complex64::new(0.0, 0.0); 8];
            for k in 0..8 {
                t[gray(k)] = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / 8.0);
            }
            t
        }
        Pam4 => {
            let s = 5f64.sqrt();
            gray_pam(2).into_iter().map(|v| Complex64::new(v / s, 0.0)).collect()
        }
        Qam16 => square_qam(2),
        Qam64 => square_qam(3),
        Cpfsk | Gfsk | Wbfm | AmDsb | AmSsb => return None,
    };
    Some(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINEAR: [ModulationScheme; 6] = [
        ModulationScheme::Bpsk,
        ModulationScheme::Qpsk,
        ModulationScheme::Psk8,
        ModulationScheme::Pam4,
        ModulationScheme::Qam16,
        ModulationScheme::Qam64,
    ];

    #[test]
    fn unit_energy_by_enumeration() {
        for s in LINEAR {
            let t = table(s).unwrap();
            assert_eq!(t.len(), 1 << s.bits_per_symbol().unwrap());
            let e = t.iter().map(|c| c.norm_sqr()).sum::<f64>() / t.len() as f64;
            assert!((e - 1.0).abs() <= 1e-9, "{s:?}: {e}");
        }
    }

    #[test]
    fn gray_adjacency_by_enumeration() {
        for s in LINEAR {
            let t = table(s).unwrap();
            let dmin = (0..t.len())
                .flat_map(|a| (0..t.len()).filter(move |&b| b != a).map(move |b| (a, b)))
                .map(|(a, b)| (t[a] - t[b]).norm())
                .fold(f64::INFINITY, f64::min);
            for a in 0..t.len() {
                for b in 0..t.len() {
                    if a != b && (t[a] - t[b]).norm() <= dmin * (1.0 + 1e-9) {
                        assert_eq!((a ^ b).count_ones(), 1, "{s:?}: words {a:b} and {b:b} are neighbours");
                    }
                }
            }
        }
    }

    #[test]
    fn distinct_points() {
        for s in LINEAR {
            let t = table(s).unwrap();
            for a in 0..t.len() {
                for b in a + 1..t.len() {
                    assert!((t[a] - t[b]).norm() > 1e-6);
                }
            }
        }
    }
}
