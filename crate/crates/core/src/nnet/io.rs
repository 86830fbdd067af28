//! `SPECNN01` model files.
//!
//! Little-endian: magic, u32 version, u32 layer count; per layer a u8 kind,
//! u32 dim count + u32 dims, f32 weights, f32 biases; then u32 K, u32 dim
//! count + u32 input dims, and a metadata block (u8 task tag, u8
//! representation tag, u64 seed, f64 train fraction).
//!
//! Kinds: 1–4 conv with (h, w) padding SAME/SAME, VALID/SAME, SAME/VALID,
//! VALID/VALID; 5 dense; 6 ReLU; 7 dropout (dims `[1]`, one weight = rate);
//! 8 flatten; 9 softmax. Parameter-free layers have zero dims.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::layers::{ConvLayer, DenseLayer, Padding};
use super::network::{Layer, Model, ModelMeta};
use super::{NnetError, Result, Tensor};

pub const MAGIC: &[u8; 8] = b"SPECNN01";
pub const VERSION: u32 = 1;
const MAX_DIMS: u32 = 8;

fn conv_kind(c: &ConvLayer<f32>) -> u8 {
    match (c.pad_h, c.pad_w) {
        (Padding::Same, Padding::Same) => 1,
        (Padding::Valid, Padding::Same) => 2,
        (Padding::Same, Padding::Valid) => 3,
        (Padding::Valid, Padding::Valid) => 4,
    }
}

fn put_u32<W: Write>(w: &mut W, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn put_dims<W: Write>(w: &mut W, dims: &[usize]) -> std::io::Result<()> {
    put_u32(w, dims.len() as u32)?;
    dims.iter().try_for_each(|&d| put_u32(w, d as u32))
}

fn put_f32s<W: Write>(w: &mut W, v: &[f32]) -> std::io::Result<()> {
    v.iter().try_for_each(|x| w.write_all(&x.to_le_bytes()))
}

pub fn write_model<W: Write>(model: &Model<f32>, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    put_u32(&mut w, VERSION)?;
    put_u32(&mut w, model.layers().len() as u32)?;
    for layer in model.layers() {
        match layer {
            Layer::Conv(c) => {
                w.write_all(&[conv_kind(c)])?;
                put_dims(&mut w, c.weights.shape())?;
                put_f32s(&mut w, c.weights.data())?;
                put_f32s(&mut w, &c.bias)?;
            }
            Layer::Dense(d) => {
                w.write_all(&[5])?;
                put_dims(&mut w, d.weights.shape())?;
                put_f32s(&mut w, d.weights.data())?;
                put_f32s(&mut w, &d.bias)?;
            }
            Layer::Dropout(rate) => {
                w.write_all(&[7])?;
                put_dims(&mut w, &[1])?;
                put_f32s(&mut w, &[*rate as f32])?;
            }
            other => {
                let kind = match other {
                    Layer::Relu => 6,
                    Layer::Flatten => 8,
                    _ => 9,
                };
                w.write_all(&[kind])?;
                put_dims(&mut w, &[])?;
            }
        }
    }
    put_u32(&mut w, model.num_classes() as u32)?;
    put_dims(&mut w, model.input_shape())?;
    let m = model.meta;
    w.write_all(&[m.task_tag, m.repr_tag])?;
    w.write_all(&m.seed.to_le_bytes())?;
    w.write_all(&m.train_frac.to_le_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn save_model(model: &Model<f32>, path: impl AsRef<Path>) -> Result<()> {
    write_model(model, BufWriter::new(File::create(path)?))
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const K: usize>(&mut self, what: &str) -> Result<[u8; K]> {
        let mut buf = [0u8; K];
        self.inner.read_exact(&mut buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => NnetError::Format(format!("file ends inside {what}")),
            _ => NnetError::Io(e),
        })?;
        Ok(buf)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.bytes::<1>(what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(what)?))
    }

    fn dims(&mut self, what: &str) -> Result<Vec<usize>> {
        let n = self.u32(what)?;
        if n > MAX_DIMS {
            return Err(NnetError::Format(format!("{what}: {n} dimensions")));
        }
        (0..n).map(|_| self.u32(what).map(|d| d as usize)).collect()
    }

    fn f32s(&mut self, n: usize, what: &str) -> Result<Vec<f32>> {
        let mut raw = vec![0u8; n.checked_mul(4).ok_or_else(|| NnetError::Format(format!("{what} too large")))?];
        self.inner.read_exact(&mut raw).map_err(|_| NnetError::Format(format!("file ends inside {what}")))?;
        Ok(raw.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
    }
}

pub fn read_model<R: Read>(r: R) -> Result<Model<f32>> {
    let mut r = Reader { inner: r };
    if &r.bytes::<8>("magic")? != MAGIC {
        return Err(NnetError::BadMagic);
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(NnetError::Version(version));
    }
    let count = r.u32("layer count")?;
    if count > 64 {
        return Err(NnetError::Format(format!("{count} layers")));
    }
    let mut layers = Vec::with_capacity(count as usize);
    for i in 0..count {
        let kind = r.u8("layer kind")?;
        let dims = r.dims("layer dims")?;
        let want = |n: usize| -> Result<()> {
            if dims.len() != n {
                return Err(NnetError::Format(format!("layer {i} (kind {kind}) has {} dims", dims.len())));
            }
            Ok(())
        };
        let layer = match kind {
            1..=4 => {
                want(4)?;
                let (ph, pw) = match kind {
                    1 => (Padding::Same, Padding::Same),
                    2 => (Padding::Valid, Padding::Same),
                    3 => (Padding::Same, Padding::Valid),
                    _ => (Padding::Valid, Padding::Valid),
                };
                let w = r.f32s(dims.iter().product(), "conv weights")?;
                let b = r.f32s(dims[0], "conv bias")?;
                Layer::Conv(ConvLayer::new(Tensor::from_vec(&dims, w)?, b, ph, pw)?)
            }
            5 => {
                want(2)?;
                let w = r.f32s(dims.iter().product(), "dense weights")?;
                let b = r.f32s(dims[0], "dense bias")?;
                Layer::Dense(DenseLayer::new(Tensor::from_vec(&dims, w)?, b)?)
            }
            7 => {
                if dims != [1] {
                    return Err(NnetError::Format(format!("dropout layer {i} dims {dims:?}")));
                }
                // shortest decimal form, so a saved 0.6 reloads as 0.6 and not 0.6000000238
                let rate = r.f32s(1, "dropout rate")?[0];
                Layer::Dropout(rate.to_string().parse().map_err(|_| NnetError::Format(format!("dropout rate {rate}")))?)
            }
            6 | 8 | 9 => {
                want(0)?;
                match kind {
                    6 => Layer::Relu,
                    8 => Layer::Flatten,
                    _ => Layer::Softmax,
                }
            }
            other => return Err(NnetError::Format(format!("unknown layer kind {other}"))),
        };
        layers.push(layer);
    }
    let k = r.u32("class count")? as usize;
    let input = r.dims("input shape")?;
    let task_tag = r.u8("metadata")?;
    let repr_tag = r.u8("metadata")?;
    let seed = u64::from_le_bytes(r.bytes("metadata")?);
    let train_frac = f64::from_le_bytes(r.bytes("metadata")?);
    let mut model = Model::new(layers, &input).map_err(|e| NnetError::Format(e.to_string()))?;
    if model.num_classes() != k {
        return Err(NnetError::Shape(format!("trailer says {k} classes, layers produce {}", model.num_classes())));
    }
    model.meta = ModelMeta { task_tag, repr_tag, seed, train_frac };
    Ok(model)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model<f32>> {
    read_model(BufReader::new(File::open(path)?))
}
