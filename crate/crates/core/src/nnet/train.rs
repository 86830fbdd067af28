use log::{debug, info};
use rand::seq::SliceRandom;

use super::network::{Model, ModelConfig};
use super::{NnetError, Real, Result, Tensor};
use crate::dataset::Dataset;
use crate::seed;
use crate::transforms::Representation;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Drop probability applied to every dropout layer.
    pub dropout: f64,
    pub seed: u64,
    /// Kept for interface stability: batches are always reduced in a fixed
    /// order, so runs are bit-reproducible either way.
    pub deterministic: bool,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Also score the training set in eval mode after each epoch (costs one
    /// extra forward pass); otherwise train accuracy is the running
    /// dropout-mode figure.
    pub train_eval: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            batch_size: 1024,
            epochs: 70,
            dropout: 0.6,
            seed: 0,
            deterministic: true,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            train_eval: false,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(NnetError::Config(format!("learning rate {} must be positive", self.lr)));
        }
        if self.batch_size == 0 {
            return Err(NnetError::Config("batch size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(NnetError::Config(format!("dropout rate {} outside [0, 1)", self.dropout)));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.eps > 0.0) {
            return Err(NnetError::Config("Adam betas must lie in [0, 1) and eps must be positive".into()));
        }
        Ok(())
    }
}

/// First and second moment accumulators for one parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamMoments<T> {
    pub m: Vec<T>,
    pub v: Vec<T>,
}

impl<T: Real> AdamMoments<T> {
    pub fn zeros(len: usize) -> Self {
        AdamMoments { m: vec![T::zero(); len], v: vec![T::zero(); len] }
    }
}

/// One bias-corrected Adam update at step `t ≥ 1`.
pub fn adam_step<T: Real>(params: &mut [T], grads: &[T], state: &mut AdamMoments<T>, t: u64, cfg: &TrainConfig) {
    let (b1, b2) = (T::of(cfg.beta1), T::of(cfg.beta2));
    let c1 = T::of(1.0 - cfg.beta1.powi(t as i32));
    let c2 = T::of(1.0 - cfg.beta2.powi(t as i32));
    let (lr, eps) = (T::of(cfg.lr), T::of(cfg.eps));
    for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut state.m).zip(&mut state.v) {
        *m = b1 * *m + (T::one() - b1) * g;
        *v = b2 * *v + (T::one() - b2) * g * g;
        let mhat = *m / c1;
        let vhat = *v / c2;
        *p = *p - lr * mhat / (vhat.sqrt() + eps);
    }
}

/// Transformed, normalized features in one flat `f32` buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureSet {
    pub data: Vec<f32>,
    pub labels: Vec<usize>,
    pub snr_db: Vec<i16>,
    pub rows: usize,
    pub n: usize,
    pub num_classes: usize,
}

impl FeatureSet {
    pub fn from_dataset(ds: &Dataset, repr: Representation) -> Self {
        use rayon::prelude::*;
        let rows = 2;
        let feats: Vec<Vec<f32>> = ds.examples.par_iter().map(|e| repr.apply(&e.capture).to_f32()).collect();
        FeatureSet {
            data: feats.concat(),
            labels: ds.examples.iter().map(|e| e.label).collect(),
            snr_db: ds.examples.iter().map(|e| e.snr_db).collect(),
            rows,
            n: ds.n,
            num_classes: ds.num_classes(),
        }
    }

    /// Builds a set from raw rows; `data` holds `labels.len()` row-major
    /// `rows × n` matrices.
    pub fn from_parts(data: Vec<f32>, labels: Vec<usize>, rows: usize, n: usize, num_classes: usize) -> Result<Self> {
        if data.len() != labels.len() * rows * n {
            return Err(NnetError::Shape(format!("{} values for {} examples of {rows}×{n}", data.len(), labels.len())));
        }
        let snr_db = vec![0; labels.len()];
        Ok(FeatureSet { data, labels, snr_db, rows, n, num_classes })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn example(&self, i: usize) -> &[f32] {
        let len = self.rows * self.n;
        &self.data[i * len..(i + 1) * len]
    }

    /// `[B, 1, rows, n]` tensor of the selected examples.
    pub fn batch<T: Real>(&self, idx: &[usize]) -> Tensor<T> {
        let mut data = Vec::with_capacity(idx.len() * self.rows * self.n);
        for &i in idx {
            data.extend(self.example(i).iter().map(|&v| T::from(v).unwrap()));
        }
        Tensor::from_vec(&[idx.len(), 1, self.rows, self.n], data).expect("shape by construction")
    }

    pub fn all<T: Real>(&self) -> Tensor<T> {
        self.batch(&(0..self.len()).collect::<Vec<_>>())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters from the epoch with the lowest validation loss.
    pub model: Model<f32>,
    pub history: Vec<EpochRecord>,
    /// 1-based epoch of the selected parameters; `None` when no epoch ran.
    pub best_epoch: Option<usize>,
}

fn check_set(set: &FeatureSet, model: &Model<f32>, what: &str) -> Result<()> {
    if set.is_empty() {
        return Err(NnetError::Shape(format!("{what} set is empty")));
    }
    if model.input_shape()[1..] != [set.rows, set.n] {
        return Err(NnetError::Shape(format!("{what} features are {}×{}, model expects {:?}", set.rows, set.n, model.input_shape())));
    }
    if set.num_classes != model.num_classes() {
        return Err(NnetError::Shape(format!("{what} set has {} classes, model has {}", set.num_classes, model.num_classes())));
    }
    Ok(())
}

/// Mini-batch Adam on shuffled batches; keeps the parameters with the lowest
/// validation loss.
pub fn train(model_cfg: &ModelConfig, train_set: &FeatureSet, val_set: &FeatureSet, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut model: Model<f32> = model_cfg.build(cfg.seed)?;
    model.set_dropout(cfg.dropout)?;
    train_model(model, train_set, val_set, cfg)
}

/// Same as [`train`] starting from given parameters.
pub fn train_model(mut model: Model<f32>, train_set: &FeatureSet, val_set: &FeatureSet, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    check_set(train_set, &model, "training")?;
    check_set(val_set, &model, "validation")?;

    let val_x: Tensor<f32> = val_set.all();
    let mut moments: Vec<AdamMoments<f32>> = model.params().iter().map(|p| AdamMoments::zeros(p.len())).collect();
    let mut step = 0u64;
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, usize, Model<f32>)> = None;
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 1..=cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut seed::rng(cfg.seed, seed::stream::SHUFFLE, epoch as u64));
        let epoch_seed = seed::derive(cfg.seed, seed::stream::DROPOUT, epoch as u64);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for (bi, idx) in order.chunks(cfg.batch_size).enumerate() {
            let x = train_set.batch::<f32>(idx);
            let labels: Vec<usize> = idx.iter().map(|&i| train_set.labels[i]).collect();
            let seeds: Vec<u64> = idx.iter().map(|&i| seed::derive(epoch_seed, seed::stream::EXAMPLE, i as u64)).collect();
            let r = model.backward(&x, &labels, Some(&seeds))?;
            if !r.loss.is_finite() || !r.grads.tensors.iter().flatten().all(|g| g.is_finite()) {
                return Err(NnetError::NonFinite {
                    epoch,
                    batch: bi,
                    detail: format!("loss {} with gradient norm {}", r.loss, r.grads.norm()),
                });
            }
            step += 1;
            for ((p, g), m) in model.params_mut().into_iter().zip(&r.grads.tensors).zip(&mut moments) {
                adam_step(p, g, m, step, cfg);
            }
            if !model.params().iter().all(|p| p.iter().all(|v| v.is_finite())) {
                return Err(NnetError::NonFinite { epoch, batch: bi, detail: "parameters diverged".into() });
            }
            loss_sum += r.loss * idx.len() as f64;
            correct += r.correct;
            debug!("epoch {epoch} batch {bi}: loss {:.4}", r.loss);
        }
        let n = train_set.len() as f64;
        let (train_loss, mut train_acc) = (loss_sum / n, correct as f64 / n);
        if cfg.train_eval {
            train_acc = model.evaluate(&train_set.all::<f32>(), &train_set.labels)?.1;
        }
        let (val_loss, val_acc) = model.evaluate(&val_x, &val_set.labels)?;
        if !val_loss.is_finite() {
            return Err(NnetError::NonFinite { epoch, batch: 0, detail: format!("validation loss {val_loss}") });
        }
        info!("epoch {epoch}: train loss {train_loss:.4} acc {train_acc:.3}, val loss {val_loss:.4} acc {val_acc:.3}");
        history.push(EpochRecord { epoch, train_loss, train_acc, val_loss, val_acc });
        if best.as_ref().is_none_or(|(l, _, _)| val_loss < *l) {
            best = Some((val_loss, epoch, model.clone()));
        }
    }
    Ok(match best {
        Some((_, epoch, m)) => TrainOutcome { model: m, history, best_epoch: Some(epoch) },
        None => TrainOutcome { model, history, best_epoch: None },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adam_zero_gradient_is_noop() {
        let mut p = vec![0.5f64, -1.0];
        let mut s = AdamMoments::zeros(2);
        adam_step(&mut p, &[0.0, 0.0], &mut s, 1, &TrainConfig::default());
        assert_eq!(p, vec![0.5, -1.0]);
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let cfg = TrainConfig::default();
        for g in [1e-3, 0.5, 40.0] {
            let mut p = vec![0.0f64];
            let mut s = AdamMoments::zeros(1);
            adam_step(&mut p, &[g], &mut s, 1, &cfg);
            // |Δ| = α·g/(|g| + ε)
            let want = cfg.lr * g / (g + cfg.eps);
            assert!((p[0].abs() - want).abs() < 1e-12, "{g}: {}", p[0]);
            assert!((p[0].abs() - cfg.lr).abs() < 1e-7);
        }
    }
}
