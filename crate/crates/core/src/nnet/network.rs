use rand::Rng;
use rayon::prelude::*;

use super::layers::{dropout_mask, softmax, ConvLayer, DenseLayer, Padding, LOG_CLIP};
use super::{NnetError, Real, Result, Tensor};
use crate::seed;
use crate::transforms::FeatureVector;

/// Examples per work unit. Gradients are summed per chunk and the chunk sums
/// are reduced in index order, so results do not depend on the thread count.
pub const CHUNK: usize = 16;

#[derive(Clone, Debug, PartialEq)]
pub enum Layer<T> {
    Conv(ConvLayer<T>),
    Dense(DenseLayer<T>),
    Relu,
    /// Drop probability.
    Dropout(f64),
    Flatten,
    Softmax,
}

impl<T: Real> Layer<T> {
    fn cast<U: Real>(&self) -> Layer<U> {
        match self {
            Layer::Conv(c) => Layer::Conv(ConvLayer {
                weights: c.weights.cast(),
                bias: c.bias.iter().map(|&b| U::from(b).unwrap()).collect(),
                pad_h: c.pad_h,
                pad_w: c.pad_w,
            }),
            Layer::Dense(d) => Layer::Dense(DenseLayer {
                weights: d.weights.cast(),
                bias: d.bias.iter().map(|&b| U::from(b).unwrap()).collect(),
            }),
            Layer::Relu => Layer::Relu,
            Layer::Dropout(r) => Layer::Dropout(*r),
            Layer::Flatten => Layer::Flatten,
            Layer::Softmax => Layer::Softmax,
        }
    }

    /// Output shape for one example.
    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match self {
            Layer::Conv(c) => Ok(c.output_shape(input)?.to_vec()),
            Layer::Dense(d) => {
                if input != [d.inputs()] {
                    return Err(NnetError::Shape(format!("dense layer expects [{}], got {input:?}", d.inputs())));
                }
                Ok(vec![d.outputs()])
            }
            Layer::Flatten => Ok(vec![input.iter().product()]),
            Layer::Softmax if input.len() != 1 => Err(NnetError::Shape(format!("softmax expects a vector, got {input:?}"))),
            Layer::Dropout(r) if !(0.0..1.0).contains(r) => Err(NnetError::Config(format!("dropout rate {r} outside [0, 1)"))),
            _ => Ok(input.to_vec()),
        }
    }
}

/// Recorded alongside the weights so evaluation and prediction need no
/// repeated flags. Tags are kept raw so that files with unknown tags still
/// load and can be rejected by the caller.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelMeta {
    pub task_tag: u8,
    pub repr_tag: u8,
    pub seed: u64,
    pub train_frac: f64,
}

impl Default for ModelMeta {
    fn default() -> Self {
        ModelMeta { task_tag: 255, repr_tag: 255, seed: 0, train_frac: 0.67 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model<T> {
    layers: Vec<Layer<T>>,
    input_shape: Vec<usize>,
    num_classes: usize,
    pub meta: ModelMeta,
}

/// Per-parameter-tensor gradients in [`Model::params`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub tensors: Vec<Vec<T>>,
}

impl<T: Real> Gradients<T> {
    pub fn norm(&self) -> f64 {
        self.tensors.iter().flatten().map(|v| v.to_f64().unwrap().powi(2)).sum::<f64>().sqrt()
    }

    fn add(&mut self, other: &Gradients<T>) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    fn scale(&mut self, s: T) {
        self.tensors.iter_mut().flatten().for_each(|v| *v *= s);
    }
}

/// Result of a forward/backward pass over one batch.
#[derive(Clone, Debug)]
pub struct BatchResult<T> {
    /// Mean cross-entropy over the batch.
    pub loss: f64,
    pub correct: usize,
    /// Gradients of the mean loss.
    pub grads: Gradients<T>,
}

struct Trace<T> {
    inputs: Vec<Tensor<T>>,
    cols: Vec<Vec<T>>,
    masks: Vec<Option<Vec<T>>>,
}

impl<T: Real> Model<T> {
    /// Validates the shape chain; the last layer must be a softmax.
    pub fn new(layers: Vec<Layer<T>>, input_shape: &[usize]) -> Result<Self> {
        if !matches!(layers.last(), Some(Layer::Softmax)) {
            return Err(NnetError::Config("the last layer must be a softmax".into()));
        }
        if layers[..layers.len() - 1].iter().any(|l| matches!(l, Layer::Softmax)) {
            return Err(NnetError::Config("softmax is only allowed as the last layer".into()));
        }
        let mut shape = input_shape.to_vec();
        for l in &layers {
            shape = l.output_shape(&shape)?;
        }
        Ok(Model { layers, input_shape: input_shape.to_vec(), num_classes: shape[0], meta: ModelMeta::default() })
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    /// Per-example input shape `[C, H, W]`.
    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Per-example output shape of every layer, in order.
    pub fn shape_chain(&self) -> Vec<Vec<usize>> {
        let mut shape = self.input_shape.clone();
        self.layers
            .iter()
            .map(|l| {
                shape = l.output_shape(&shape).expect("validated at construction");
                shape.clone()
            })
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Weights then biases of every conv and dense layer.
    pub fn params(&self) -> Vec<&[T]> {
        let mut out = Vec::new();
        for l in &self.layers {
            match l {
                Layer::Conv(c) => out.extend([c.weights.data(), &c.bias[..]]),
                Layer::Dense(d) => out.extend([d.weights.data(), &d.bias[..]]),
                _ => {}
            }
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut [T]> {
        let mut out: Vec<&mut [T]> = Vec::new();
        for l in &mut self.layers {
            match l {
                Layer::Conv(c) => {
                    out.push(c.weights.data_mut());
                    out.push(&mut c.bias);
                }
                Layer::Dense(d) => {
                    out.push(d.weights.data_mut());
                    out.push(&mut d.bias);
                }
                _ => {}
            }
        }
        out
    }

    pub fn cast<U: Real>(&self) -> Model<U> {
        Model {
            layers: self.layers.iter().map(|l| l.cast()).collect(),
            input_shape: self.input_shape.clone(),
            num_classes: self.num_classes,
            meta: self.meta,
        }
    }

    /// Replaces every dropout rate.
    pub fn set_dropout(&mut self, rate: f64) -> Result<()> {
        if !(0.0..1.0).contains(&rate) {
            return Err(NnetError::Config(format!("dropout rate {rate} outside [0, 1)")));
        }
        for l in &mut self.layers {
            if let Layer::Dropout(r) = l {
                *r = rate;
            }
        }
        Ok(())
    }

    fn example_len(&self) -> usize {
        self.input_shape.iter().product()
    }

    fn check_batch(&self, x: &Tensor<T>) -> Result<usize> {
        let s = x.shape();
        if s.len() != self.input_shape.len() + 1 || s[1..] != self.input_shape[..] {
            return Err(NnetError::Shape(format!("model expects [B, {:?}], got {s:?}", self.input_shape)));
        }
        Ok(s[0])
    }

    fn chunk(&self, x: &Tensor<T>, start: usize, end: usize) -> Tensor<T> {
        let len = self.example_len();
        let mut shape = vec![end - start];
        shape.extend_from_slice(&self.input_shape);
        Tensor::from_vec(&shape, x.data()[start * len..end * len].to_vec()).expect("shape by construction")
    }

    /// Runs every layer. Dropout is active only when per-example seeds are
    /// given. Returns the softmax output and optionally the backward cache.
    fn run(&self, x: Tensor<T>, dropout_seeds: Option<&[u64]>, keep: bool) -> Result<(Tensor<T>, Option<Trace<T>>, Vec<Tensor<T>>)> {
        self.run_inner(x, dropout_seeds, keep, false)
    }

    fn run_inner(
        &self,
        mut x: Tensor<T>,
        dropout_seeds: Option<&[u64]>,
        keep: bool,
        record: bool,
    ) -> Result<(Tensor<T>, Option<Trace<T>>, Vec<Tensor<T>>)> {
        let b = x.shape()[0];
        let mut trace = keep.then(|| Trace { inputs: Vec::new(), cols: Vec::new(), masks: Vec::new() });
        let mut outputs = Vec::new();
        for (li, layer) in self.layers.iter().enumerate() {
            let mut cols = Vec::new();
            let mut mask = None;
            let y = match layer {
                Layer::Conv(c) => {
                    let (y, c) = c.forward_batch(&x)?;
                    cols = c;
                    y
                }
                Layer::Dense(d) => d.forward_batch(&x)?,
                Layer::Relu => x.map(|v| if v > T::zero() { v } else { T::zero() }),
                Layer::Dropout(rate) => match dropout_seeds {
                    Some(seeds) if *rate > 0.0 => {
                        let per = x.len() / b;
                        let mut m = Vec::with_capacity(x.len());
                        for &s in &seeds[..b] {
                            m.extend(dropout_mask::<T, _>(per, *rate, &mut seed::rng(s, seed::stream::DROPOUT, li as u64)));
                        }
                        let data = x.data().iter().zip(&m).map(|(&v, &k)| v * k).collect();
                        mask = Some(m);
                        Tensor::from_vec(x.shape(), data)?
                    }
                    _ => x.clone(),
                },
                Layer::Flatten => {
                    let per = x.len() / b;
                    x.clone().reshape(&[b, per])?
                }
                Layer::Softmax => {
                    let k = x.shape()[1];
                    let data = x.data().chunks_exact(k).flat_map(softmax).collect();
                    Tensor::from_vec(x.shape(), data)?
                }
            };
            if record {
                outputs.push(y.clone());
            }
            if let Some(t) = trace.as_mut() {
                t.inputs.push(x);
                t.cols.push(cols);
                t.masks.push(mask);
            }
            x = y;
        }
        Ok((x, trace, outputs))
    }

    /// Output of every layer for a batch `[B, C, H, W]`, in order.
    pub fn activations(&self, x: &Tensor<T>, dropout_seeds: Option<&[u64]>) -> Result<Vec<Tensor<T>>> {
        self.check_batch(x)?;
        Ok(self.run_inner(x.clone(), dropout_seeds, false, true)?.2)
    }

    /// Eval-mode class probabilities `[B, K]`.
    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let b = self.check_batch(x)?;
        let parts: Vec<Vec<T>> = (0..b)
            .step_by(CHUNK)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|s| self.run(self.chunk(x, s, (s + CHUNK).min(b)), None, false).map(|r| r.0.into_data()))
            .collect::<Result<_>>()?;
        Tensor::from_vec(&[b, self.num_classes], parts.concat())
    }

    /// Mean cross-entropy and gradients for a labelled batch. Dropout is
    /// applied in train mode when `dropout_seeds` (one per example) is given.
    pub fn backward(&self, x: &Tensor<T>, labels: &[usize], dropout_seeds: Option<&[u64]>) -> Result<BatchResult<T>> {
        let b = self.check_batch(x)?;
        if labels.len() != b || dropout_seeds.is_some_and(|s| s.len() != b) {
            return Err(NnetError::Shape(format!("batch of {b} examples with {} labels", labels.len())));
        }
        if b == 0 {
            return Err(NnetError::Shape("empty batch".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= self.num_classes) {
            return Err(NnetError::Shape(format!("label {bad} outside {} classes", self.num_classes)));
        }
        let starts: Vec<usize> = (0..b).step_by(CHUNK).collect();
        let parts: Vec<(f64, usize, Gradients<T>)> = starts
            .into_par_iter()
            .map(|s| {
                let e = (s + CHUNK).min(b);
                self.backward_chunk(self.chunk(x, s, e), &labels[s..e], dropout_seeds.map(|d| &d[s..e]))
            })
            .collect::<Result<_>>()?;
        let mut it = parts.into_iter();
        let (mut loss, mut correct, mut grads) = it.next().expect("non-empty batch");
        for (l, c, g) in it {
            loss += l;
            correct += c;
            grads.add(&g);
        }
        grads.scale(T::one() / T::of(b as f64));
        Ok(BatchResult { loss: loss / b as f64, correct, grads })
    }

    /// Summed loss, correct count and summed gradients of one chunk.
    fn backward_chunk(&self, x: Tensor<T>, labels: &[usize], seeds: Option<&[u64]>) -> Result<(f64, usize, Gradients<T>)> {
        let (probs, trace, _) = self.run(x, seeds, true)?;
        let trace = trace.expect("trace requested");
        let k = self.num_classes;
        let clip = T::of(LOG_CLIP);
        let mut loss = 0.0;
        let mut correct = 0;
        let mut dz = probs.data().to_vec();
        for (e, &y) in labels.iter().enumerate() {
            let p = &probs.data()[e * k..(e + 1) * k];
            loss -= (p[y] + clip).ln().to_f64().unwrap();
            if argmax(p) == y {
                correct += 1;
            }
            // d/dz of −log(p_y + ε) = p_y/(p_y + ε) · (p − onehot)
            let s = p[y] / (p[y] + clip);
            let row = &mut dz[e * k..(e + 1) * k];
            row[y] -= T::one();
            row.iter_mut().for_each(|v| *v *= s);
        }
        let mut grad = Tensor::from_vec(probs.shape(), dz)?;

        let mut grads: Vec<Vec<T>> = self.params().iter().map(|p| vec![T::zero(); p.len()]).collect();
        let mut slot = grads.len();
        let last = self.layers.len() - 1;
        for li in (0..last).rev() {
            let input = &trace.inputs[li];
            grad = match &self.layers[li] {
                Layer::Dense(d) => {
                    slot -= 2;
                    let (gw, gb) = grads.split_at_mut(slot + 1);
                    match d.backward_batch(&grad, input, li > 0, &mut gw[slot], &mut gb[0]) {
                        Some(g) => g,
                        None => break,
                    }
                }
                Layer::Conv(c) => {
                    slot -= 2;
                    let (gw, gb) = grads.split_at_mut(slot + 1);
                    let shape = (li > 0).then(|| input.shape().to_vec());
                    match c.backward_batch(&grad, &trace.cols[li], shape.as_deref(), &mut gw[slot], &mut gb[0]) {
                        Some(g) => g,
                        None => break,
                    }
                }
                Layer::Relu => {
                    let data = grad.data().iter().zip(input.data()).map(|(&g, &v)| if v > T::zero() { g } else { T::zero() }).collect();
                    Tensor::from_vec(input.shape(), data)?
                }
                Layer::Dropout(_) => match &trace.masks[li] {
                    Some(m) => {
                        let data = grad.data().iter().zip(m).map(|(&g, &k)| g * k).collect();
                        Tensor::from_vec(input.shape(), data)?
                    }
                    None => grad,
                },
                Layer::Flatten => grad.reshape(input.shape())?,
                Layer::Softmax => unreachable!("softmax is last"),
            };
        }
        Ok((loss, correct, Gradients { tensors: grads }))
    }

    /// Eval-mode mean loss and accuracy.
    pub fn evaluate(&self, x: &Tensor<T>, labels: &[usize]) -> Result<(f64, f64)> {
        let probs = self.forward(x)?;
        if labels.len() != probs.shape()[0] {
            return Err(NnetError::Shape(format!("{} labels for {} examples", labels.len(), probs.shape()[0])));
        }
        let k = self.num_classes;
        let clip = T::of(LOG_CLIP);
        let (mut loss, mut correct) = (0.0, 0usize);
        for (p, &y) in probs.data().chunks_exact(k).zip(labels) {
            loss -= (p[y] + clip).ln().to_f64().unwrap();
            correct += usize::from(argmax(p) == y);
        }
        let n = labels.len().max(1) as f64;
        Ok((loss / n, correct as f64 / n))
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<T: PartialOrd + Copy>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate().skip(1) {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

fn feature_tensor<T: Real>(model: &Model<T>, xs: &[&FeatureVector]) -> Result<Tensor<T>> {
    let want: usize = model.input_shape().iter().product();
    let mut data = Vec::with_capacity(xs.len() * want);
    for x in xs {
        let (rows, n) = x.shape();
        if rows * n != want || model.input_shape()[1..] != [rows, n] {
            return Err(NnetError::Shape(format!("model expects {:?}, got 2×{n} features", model.input_shape())));
        }
        data.extend(x.as_slice().iter().map(|&v| T::of(v)));
    }
    let mut shape = vec![xs.len()];
    shape.extend_from_slice(model.input_shape());
    Tensor::from_vec(&shape, data)
}

/// Top-1 class and the probability vector for one feature matrix.
pub fn predict<T: Real>(model: &Model<T>, x: &FeatureVector) -> Result<(usize, Vec<T>)> {
    let p = model.forward(&feature_tensor(model, &[x])?)?.into_data();
    Ok((argmax(&p), p))
}

pub fn predict_batch<T: Real>(model: &Model<T>, xs: &[FeatureVector]) -> Result<Vec<(usize, Vec<T>)>> {
    let refs: Vec<&FeatureVector> = xs.iter().collect();
    let k = model.num_classes();
    let p = model.forward(&feature_tensor(model, &refs)?)?;
    Ok(p.data().chunks_exact(k).map(|row| (argmax(row), row.to_vec())).collect())
}

/// Architecture of the classifier:
/// conv(1×3, SAME) → ReLU → dropout → conv(2×3, VALID×SAME) → ReLU → dropout
/// → flatten → dense → ReLU → dropout → dense(K) → softmax.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelConfig {
    pub input_rows: usize,
    pub input_len: usize,
    pub conv1_filters: usize,
    pub conv2_filters: usize,
    pub dense_units: usize,
    pub dropout: f64,
    pub num_classes: usize,
}

impl ModelConfig {
    /// Full-size network: 256 and 80 filters, 256 dense units.
    pub fn paper(num_classes: usize) -> Self {
        ModelConfig { input_rows: 2, input_len: 128, conv1_filters: 256, conv2_filters: 80, dense_units: 256, dropout: 0.6, num_classes }
    }

    /// Reduced network for CPU-sized experiments.
    pub fn desk(num_classes: usize) -> Self {
        ModelConfig { conv1_filters: 64, conv2_filters: 32, dense_units: 128, ..Self::paper(num_classes) }
    }

    pub fn with_input_len(self, input_len: usize) -> Self {
        ModelConfig { input_len, ..self }
    }

    pub fn input_shape(&self) -> [usize; 3] {
        [1, self.input_rows, self.input_len]
    }

    /// Glorot-uniform weights, zero biases.
    pub fn build<T: Real>(&self, seed: u64) -> Result<Model<T>> {
        if self.num_classes < 2 || self.input_rows < 2 || self.input_len == 0 {
            return Err(NnetError::Config(format!("unusable model configuration {self:?}")));
        }
        let conv = |idx: u64, f: usize, c: usize, kh: usize, kw: usize, ph: Padding| {
            let limit = (6.0 / ((c * kh * kw + f * kh * kw) as f64)).sqrt();
            ConvLayer::new(uniform(&[f, c, kh, kw], limit, seed, idx), vec![T::zero(); f], ph, Padding::Same)
        };
        let dense = |idx: u64, out: usize, inp: usize| {
            let limit = (6.0 / ((inp + out) as f64)).sqrt();
            DenseLayer::new(uniform(&[out, inp], limit, seed, idx), vec![T::zero(); out])
        };
        let flat = self.conv2_filters * (self.input_rows - 1) * self.input_len;
        let layers = vec![
            Layer::Conv(conv(0, self.conv1_filters, 1, 1, 3, Padding::Same)?),
            Layer::Relu,
            Layer::Dropout(self.dropout),
            Layer::Conv(conv(1, self.conv2_filters, self.conv1_filters, 2, 3, Padding::Valid)?),
            Layer::Relu,
            Layer::Dropout(self.dropout),
            Layer::Flatten,
            Layer::Dense(dense(2, self.dense_units, flat)?),
            Layer::Relu,
            Layer::Dropout(self.dropout),
            Layer::Dense(dense(3, self.num_classes, self.dense_units)?),
            Layer::Softmax,
        ];
        Model::new(layers, &self.input_shape())
    }
}

fn uniform<T: Real>(shape: &[usize], limit: f64, seed: u64, idx: u64) -> Tensor<T> {
    let mut rng = seed::rng(seed, seed::stream::INIT, idx);
    let n = shape.iter().product();
    let data = (0..n).map(|_| T::of(rng.random_range(-limit..limit))).collect();
    Tensor::from_vec(shape, data).expect("shape by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_scale_shape_chain() {
        let m: Model<f32> = ModelConfig::paper(11).build(1).unwrap();
        let chain = m.shape_chain();
        assert_eq!(chain[0], vec![256, 2, 128]);
        assert_eq!(chain[3], vec![80, 1, 128]);
        assert_eq!(chain[6], vec![10240]);
        assert_eq!(chain[7], vec![256]);
        assert_eq!(chain[10], vec![11]);
        assert_eq!(m.num_classes(), 11);
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
    }

    #[test]
    fn forward_is_chunk_invariant() {
        let m: Model<f64> = ModelConfig::desk(3).with_input_len(8).build(3).unwrap();
        let mut rng = seed::rng_from(4);
        let b = CHUNK + 5;
        let x = Tensor::from_vec(&[b, 1, 2, 8], (0..b * 16).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let all = m.forward(&x).unwrap();
        for e in [0, CHUNK, b - 1] {
            let one = m.forward(&m.chunk(&x, e, e + 1)).unwrap();
            for (a, b) in one.data().iter().zip(&all.data()[e * 3..e * 3 + 3]) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
