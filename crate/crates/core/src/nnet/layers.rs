use rand::Rng;

use super::gemm::{gemm_nn, gemm_nt, gemm_tn};
use super::{NnetError, Real, Result, Tensor};
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Padding {
    /// Zero-pad so the output keeps the input extent; for even kernels the
    /// extra row/column goes after.
    Same,
    /// No padding: the extent shrinks by `kernel − 1`.
    Valid,
}

impl Padding {
    fn before_after(self, kernel: usize) -> (usize, usize) {
        match self {
            Padding::Same => {
                let before = (kernel - 1) / 2;
                (before, kernel - 1 - before)
            }
            Padding::Valid => (0, 0),
        }
    }

    fn out_len(self, len: usize, kernel: usize) -> Option<usize> {
        match self {
            Padding::Same => Some(len),
            Padding::Valid => len.checked_sub(kernel - 1).filter(|&v| v > 0),
        }
    }
}

/// 2-D convolution in cross-correlation form:
/// `out[f,i,j] = b[f] + Σ_c Σ_{u,v} x[c, i+u−p_h, j+v−p_w] · W[f,c,u,v]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvLayer<T> {
    /// `[filters, in_channels, kh, kw]`
    pub weights: Tensor<T>,
    pub bias: Vec<T>,
    pub pad_h: Padding,
    pub pad_w: Padding,
}

impl<T: Real> ConvLayer<T> {
    pub fn new(weights: Tensor<T>, bias: Vec<T>, pad_h: Padding, pad_w: Padding) -> Result<Self> {
        let s = weights.shape();
        if s.len() != 4 || s.contains(&0) {
            return Err(NnetError::Shape(format!("conv weights must be [F, C, kh, kw], got {s:?}")));
        }
        if bias.len() != s[0] {
            return Err(NnetError::Shape(format!("conv bias has {} entries for {} filters", bias.len(), s[0])));
        }
        Ok(ConvLayer { weights, bias, pad_h, pad_w })
    }

    pub fn filters(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn kernel(&self) -> (usize, usize) {
        (self.weights.shape()[2], self.weights.shape()[3])
    }

    /// Output `[F, H', W']` for input `[C, H, W]`.
    pub fn output_shape(&self, input: &[usize]) -> Result<[usize; 3]> {
        let [c, h, w] = match input {
            &[c, h, w] => [c, h, w],
            other => return Err(NnetError::Shape(format!("conv input must be [C, H, W], got {other:?}"))),
        };
        if c != self.in_channels() {
            return Err(NnetError::Shape(format!("conv expects {} channels, got {c}", self.in_channels())));
        }
        let (kh, kw) = self.kernel();
        let ho = self.pad_h.out_len(h, kh);
        let wo = self.pad_w.out_len(w, kw);
        match (ho, wo) {
            (Some(ho), Some(wo)) => Ok([self.filters(), ho, wo]),
            _ => Err(NnetError::Shape(format!("kernel {kh}×{kw} does not fit input {h}×{w}"))),
        }
    }

    fn col_rows(&self) -> usize {
        let (kh, kw) = self.kernel();
        self.in_channels() * kh * kw
    }

    /// Unfold one `[C, H, W]` example into `[C·kh·kw, H'·W']` columns.
    fn im2col(&self, x: &[T], h: usize, w: usize, ho: usize, wo: usize, cols: &mut [T]) {
        let (kh, kw) = self.kernel();
        let (ph, _) = self.pad_h.before_after(kh);
        let (pw, _) = self.pad_w.before_after(kw);
        let hw = ho * wo;
        for c in 0..self.in_channels() {
            for u in 0..kh {
                for v in 0..kw {
                    let row = &mut cols[((c * kh + u) * kw + v) * hw..][..hw];
                    for i in 0..ho {
                        let si = (i + u) as isize - ph as isize;
                        let dst = &mut row[i * wo..(i + 1) * wo];
                        if si < 0 || si as usize >= h {
                            dst.fill(T::zero());
                            continue;
                        }
                        let src = &x[(c * h + si as usize) * w..][..w];
                        for (j, d) in dst.iter_mut().enumerate() {
                            let sj = (j + v) as isize - pw as isize;
                            *d = if sj < 0 || sj as usize >= w { T::zero() } else { src[sj as usize] };
                        }
                    }
                }
            }
        }
    }

    /// Fold `[C·kh·kw, H'·W']` column gradients back onto `[C, H, W]`.
    fn col2im(&self, dcols: &[T], h: usize, w: usize, ho: usize, wo: usize, dx: &mut [T]) {
        let (kh, kw) = self.kernel();
        let (ph, _) = self.pad_h.before_after(kh);
        let (pw, _) = self.pad_w.before_after(kw);
        let hw = ho * wo;
        for c in 0..self.in_channels() {
            for u in 0..kh {
                for v in 0..kw {
                    let row = &dcols[((c * kh + u) * kw + v) * hw..][..hw];
                    for i in 0..ho {
                        let si = (i + u) as isize - ph as isize;
                        if si < 0 || si as usize >= h {
                            continue;
                        }
                        let dst = &mut dx[(c * h + si as usize) * w..][..w];
                        for j in 0..wo {
                            let sj = (j + v) as isize - pw as isize;
                            if sj >= 0 && (sj as usize) < w {
                                dst[sj as usize] += row[i * wo + j];
                            }
                        }
                    }
                }
            }
        }
    }

    /// Batched forward over `[B, C, H, W]`; returns the output and the
    /// unfolded columns for the backward pass.
    pub(crate) fn forward_batch(&self, x: &Tensor<T>) -> Result<(Tensor<T>, Vec<T>)> {
        let (b, in_shape) = split_batch(x)?;
        let [f, ho, wo] = self.output_shape(in_shape)?;
        let (h, w) = (in_shape[1], in_shape[2]);
        let (rows, hw) = (self.col_rows(), ho * wo);
        let in_len: usize = in_shape.iter().product();
        let mut cols = vec![T::zero(); b * rows * hw];
        let mut out = vec![T::zero(); b * f * hw];
        for e in 0..b {
            let c = &mut cols[e * rows * hw..][..rows * hw];
            self.im2col(&x.data()[e * in_len..][..in_len], h, w, ho, wo, c);
            let o = &mut out[e * f * hw..][..f * hw];
            for (fi, chunk) in o.chunks_exact_mut(hw).enumerate() {
                chunk.fill(self.bias[fi]);
            }
            gemm_nn(f, rows, hw, self.weights.data(), c, o);
        }
        Ok((Tensor::from_vec(&[b, f, ho, wo], out)?, cols))
    }

    /// Accumulates weight and bias gradients; returns the input gradient when
    /// `input_shape` is given.
    pub(crate) fn backward_batch(
        &self,
        dout: &Tensor<T>,
        cols: &[T],
        input_shape: Option<&[usize]>,
        dw: &mut [T],
        db: &mut [T],
    ) -> Option<Tensor<T>> {
        let s = dout.shape();
        let (b, f, ho, wo) = (s[0], s[1], s[2], s[3]);
        let (rows, hw) = (self.col_rows(), ho * wo);
        let mut dx = input_shape.map(|sh| Tensor::zeros(sh));
        let mut dcols = vec![T::zero(); rows * hw];
        for e in 0..b {
            let g = &dout.data()[e * f * hw..][..f * hw];
            let c = &cols[e * rows * hw..][..rows * hw];
            gemm_nt(f, hw, rows, g, c, dw);
            for (fi, chunk) in g.chunks_exact(hw).enumerate() {
                db[fi] += chunk.iter().copied().sum::<T>();
            }
            if let Some(dx) = dx.as_mut() {
                let (h, w) = (dx.shape()[2], dx.shape()[3]);
                let in_len = dx.shape()[1..].iter().product::<usize>();
                dcols.fill(T::zero());
                gemm_tn(rows, f, hw, self.weights.data(), g, &mut dcols);
                self.col2im(&dcols, h, w, ho, wo, &mut dx.data_mut()[e * in_len..][..in_len]);
            }
        }
        dx
    }
}

/// Single-example convolution of `x: [C, H, W]`.
pub fn conv2d_forward<T: Real>(x: &Tensor<T>, layer: &ConvLayer<T>) -> Result<Tensor<T>> {
    let mut shape = vec![1];
    shape.extend_from_slice(x.shape());
    let batch = x.clone().reshape(&shape)?;
    let (out, _) = layer.forward_batch(&batch)?;
    let s = out.shape()[1..].to_vec();
    out.reshape(&s)
}

/// `y = W·x + b` with `W: [out, in]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer<T> {
    pub weights: Tensor<T>,
    pub bias: Vec<T>,
}

impl<T: Real> DenseLayer<T> {
    pub fn new(weights: Tensor<T>, bias: Vec<T>) -> Result<Self> {
        let s = weights.shape();
        if s.len() != 2 || s[0] == 0 || s[1] == 0 {
            return Err(NnetError::Shape(format!("dense weights must be [out, in], got {s:?}")));
        }
        if bias.len() != s[0] {
            return Err(NnetError::Shape(format!("dense bias has {} entries for {} outputs", bias.len(), s[0])));
        }
        Ok(DenseLayer { weights, bias })
    }

    pub fn outputs(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn inputs(&self) -> usize {
        self.weights.shape()[1]
    }

    pub(crate) fn forward_batch(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let s = x.shape();
        if s.len() != 2 || s[1] != self.inputs() {
            return Err(NnetError::Shape(format!("dense layer expects [B, {}], got {s:?}", self.inputs())));
        }
        let (b, o) = (s[0], self.outputs());
        let mut out = Vec::with_capacity(b * o);
        for _ in 0..b {
            out.extend_from_slice(&self.bias);
        }
        gemm_nt(b, self.inputs(), o, x.data(), self.weights.data(), &mut out);
        Tensor::from_vec(&[b, o], out)
    }

    pub(crate) fn backward_batch(
        &self,
        dout: &Tensor<T>,
        input: &Tensor<T>,
        need_dx: bool,
        dw: &mut [T],
        db: &mut [T],
    ) -> Option<Tensor<T>> {
        let (b, o, i) = (dout.shape()[0], self.outputs(), self.inputs());
        gemm_tn(o, b, i, dout.data(), input.data(), dw);
        for row in dout.data().chunks_exact(o) {
            for (d, &g) in db.iter_mut().zip(row) {
                *d += g;
            }
        }
        need_dx.then(|| {
            let mut dx = vec![T::zero(); b * i];
            gemm_nn(b, o, i, dout.data(), self.weights.data(), &mut dx);
            Tensor::from_vec(&[b, i], dx).expect("shape by construction")
        })
    }
}

fn split_batch<T: Real>(x: &Tensor<T>) -> Result<(usize, &[usize])> {
    match x.shape() {
        [b, rest @ ..] if !rest.is_empty() => Ok((*b, rest)),
        other => Err(NnetError::Shape(format!("expected a batched tensor, got {other:?}"))),
    }
}

/// `max(0, x)` element-wise.
pub fn relu<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Inverted-dropout mask: 0 with probability `rate`, else `1/(1−rate)`.
pub fn dropout_mask<T: Real, R: Rng + ?Sized>(len: usize, rate: f64, rng: &mut R) -> Vec<T> {
    let keep = T::of(1.0 / (1.0 - rate));
    (0..len).map(|_| if rng.random::<f64>() < rate { T::zero() } else { keep }).collect()
}

/// Inverted dropout. Identity in eval mode or at rate 0.
pub fn dropout<T: Real>(x: &Tensor<T>, rate: f64, mode: Mode, seed: u64) -> Result<Tensor<T>> {
    if !(0.0..1.0).contains(&rate) {
        return Err(NnetError::Config(format!("dropout rate {rate} outside [0, 1)")));
    }
    if mode == Mode::Eval || rate == 0.0 {
        return Ok(x.clone());
    }
    let mask: Vec<T> = dropout_mask(x.len(), rate, &mut seed::rng_from(seed));
    let data = x.data().iter().zip(&mask).map(|(&v, &m)| v * m).collect();
    Tensor::from_vec(x.shape(), data)
}

/// Max-shifted softmax.
pub fn softmax<T: Real>(z: &[T]) -> Vec<T> {
    let max = z.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub const LOG_CLIP: f64 = 1e-12;

/// `−Σ y_i · log(ŷ_i + 1e-12)`.
pub fn cross_entropy<T: Real>(yhat: &[T], y: &[T]) -> T {
    let clip = T::of(LOG_CLIP);
    -yhat.iter().zip(y).map(|(&p, &t)| if t == T::zero() { T::zero() } else { t * (p + clip).ln() }).sum::<T>()
}
