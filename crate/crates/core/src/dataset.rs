//! Capture framing, labelled dataset generation, train/validation/test
//! split, and the `SPECDS01` container.
//!
//! Container layout, all little-endian:
//!
//! ```text
//! magic    "SPECDS01"                       8 bytes
//! version  u32 = 1
//! N        u32  samples per capture
//! K        u32  class count
//! records  u32
//! S        u32  SNR grid length
//! grid     S × i16 (dB)
//! names    K × (u16 byte length, UTF-8 bytes)
//! record   u16 label, i16 snr_db, N × (f32 I, f32 Q)   repeated `records` times
//! ```

use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use num_complex::{Complex32, Complex64};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::channel::{self, ChannelParams};
use crate::seed;
use crate::sigsynth::{self, BasebandSignal, ModulationScheme, TechnologyClass, MOD_SAMPLE_RATE, TECH_SAMPLE_RATE};

pub const MAGIC: &[u8; 8] = b"SPECDS01";
pub const VERSION: u32 = 1;
pub const DEFAULT_N: usize = 128;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not a dataset container (bad magic)")]
    BadMagic,
    #[error("unsupported container version {0} (expected {VERSION})")]
    Version(u32),
    #[error("container truncated: header promises {expected} records, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("record {index} has label {label} but only {k} classes exist")]
    LabelOutOfRange { index: usize, label: usize, k: usize },
    #[error("malformed container: {0}")]
    Format(String),
    #[error("stream of {len} samples is shorter than one {n}-sample capture")]
    ShortStream { len: usize, n: usize },
    #[error("invalid capture: {0}")]
    Capture(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Synth(#[from] sigsynth::SynthError),
    #[error(transparent)]
    Channel(#[from] channel::ChannelError),
}

pub type Result<T> = std::result::Result<T, DatasetError>;

/// One capture of N complex baseband samples, stored in single precision
/// (the container's resolution).
#[derive(Clone, Debug, PartialEq)]
pub struct IqVector(Vec<Complex32>);

impl IqVector {
    pub fn new(samples: Vec<Complex32>) -> Result<Self> {
        if samples.is_empty() {
            return Err(DatasetError::Capture("empty capture".into()));
        }
        if samples.iter().any(|s| !s.re.is_finite() || !s.im.is_finite()) {
            return Err(DatasetError::Capture("non-finite sample".into()));
        }
        Ok(IqVector(samples))
    }

    pub fn from_complex64(samples: &[Complex64]) -> Result<Self> {
        IqVector::new(samples.iter().map(|s| Complex32::new(s.re as f32, s.im as f32)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn samples(&self) -> &[Complex32] {
        &self.0
    }

    pub fn to_complex64(&self) -> Vec<Complex64> {
        self.0.iter().map(|s| Complex64::new(s.re as f64, s.im as f64)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Task {
    Modulation,
    Interference,
}

impl Task {
    pub fn num_classes(self) -> usize {
        match self {
            Task::Modulation => ModulationScheme::ALL.len(),
            Task::Interference => TechnologyClass::all().len(),
        }
    }

    pub fn class_names(self) -> Vec<String> {
        match self {
            Task::Modulation => ModulationScheme::ALL.iter().map(|s| s.name().to_string()).collect(),
            Task::Interference => TechnologyClass::all().iter().map(|c| c.to_string()).collect(),
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            Task::Modulation => 0,
            Task::Interference => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Task::Modulation),
            1 => Some(Task::Interference),
            _ => None,
        }
    }

    /// The task whose class list is exactly `names`.
    pub fn from_class_names(names: &[String]) -> Option<Self> {
        [Task::Modulation, Task::Interference].into_iter().find(|t| t.class_names() == names)
    }

    pub fn sample_rate(self) -> f64 {
        match self {
            Task::Modulation => MOD_SAMPLE_RATE,
            Task::Interference => TECH_SAMPLE_RATE,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Modulation => "mod",
            Task::Interference => "if",
        })
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mod" | "modulation" => Ok(Task::Modulation),
            "if" | "interference" => Ok(Task::Interference),
            other => Err(format!("unknown task '{other}' (expected mod or if)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledExample {
    pub capture: IqVector,
    pub label: usize,
    pub snr_db: i16,
}

impl LabeledExample {
    /// K-vector with a single 1 at `label`.
    pub fn onehot(&self, k: usize) -> Vec<f64> {
        let mut v = vec![0.0; k];
        v[self.label] = 1.0;
        v
    }
}

/// How a dataset was generated. Not persisted by the container.
#[derive(Clone, Debug, PartialEq)]
pub struct GenerationMeta {
    pub seed: u64,
    pub per_class_per_snr: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub task: Task,
    pub n: usize,
    pub class_names: Vec<String>,
    pub snr_grid: Vec<i16>,
    pub examples: Vec<LabeledExample>,
    pub meta: Option<GenerationMeta>,
}

impl Dataset {
    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Same header, different examples.
    pub fn with_examples(&self, examples: Vec<LabeledExample>) -> Dataset {
        Dataset { examples, ..self.clone_header() }
    }

    fn clone_header(&self) -> Dataset {
        Dataset {
            task: self.task,
            n: self.n,
            class_names: self.class_names.clone(),
            snr_grid: self.snr_grid.clone(),
            examples: Vec::new(),
            meta: self.meta.clone(),
        }
    }

    /// Examples per class index.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for e in &self.examples {
            counts[e.label] += 1;
        }
        counts
    }
}

/// Non-overlapping consecutive `n`-sample windows; the remainder is dropped.
pub fn segment(stream: &BasebandSignal, n: usize) -> Result<Vec<IqVector>> {
    if n == 0 {
        return Err(DatasetError::Parameter("capture length must be positive".into()));
    }
    if stream.len() < n {
        return Err(DatasetError::ShortStream { len: stream.len(), n });
    }
    stream.samples.chunks_exact(n).map(IqVector::from_complex64).collect()
}

/// Parse an inclusive `start:step:end` SNR grid in dB.
pub fn parse_snr_grid(spec: &str) -> Result<Vec<i16>> {
    let bad = |why: &str| DatasetError::Parameter(format!("bad SNR grid '{spec}': {why}"));
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let num = |s: &str| s.parse::<i32>().map_err(|_| bad("expected integers"));
    let grid: Vec<i32> = match parts.as_slice() {
        [single] => vec![num(single)?],
        [start, step, end] => {
            let (start, step, end) = (num(start)?, num(step)?, num(end)?);
            if step == 0 {
                return Err(bad("step must be nonzero"));
            }
            if (end - start).signum() * step.signum() < 0 {
                return Err(bad("step points away from the end"));
            }
            let mut v = Vec::new();
            let mut s = start;
            while (step > 0 && s <= end) || (step < 0 && s >= end) {
                v.push(s);
                s += step;
            }
            v
        }
        _ => return Err(bad("expected start:step:end")),
    };
    if let Some(s) = grid.iter().find(|s| !(-20..=20).contains(*s)) {
        return Err(bad(&format!("{s} dB is outside [-20, 20]")));
    }
    Ok(grid.into_iter().map(|s| s as i16).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerateConfig {
    pub task: Task,
    pub per_class_per_snr: usize,
    pub snr_grid: Vec<i16>,
    pub seed: u64,
    pub n: usize,
}

/// One labelled capture: fresh payload, fresh channel draw, AWGN applied on
/// the final N-sample window at the target SNR.
fn generate_example(task: Task, label: usize, snr_db: i16, n: usize, example_seed: u64) -> Result<LabeledExample> {
    let mut rng = seed::rng_from(example_seed);
    let stream_len = 2 * n;
    let (clean, params) = match task {
        Task::Modulation => {
            let scheme = ModulationScheme::ALL[label];
            let clean = sigsynth::synthesize_modulation(scheme, stream_len, &mut rng);
            (clean, ChannelParams::draw_rich(snr_db as f64, MOD_SAMPLE_RATE, &mut rng))
        }
        Task::Interference => {
            let cls = TechnologyClass::all()[label];
            let clean = sigsynth::synthesize_technology(cls, stream_len, rng.random())?;
            (clean, ChannelParams::draw_flat(snr_db as f64, TECH_SAMPLE_RATE, &mut rng))
        }
    };
    let channel_seed: u64 = rng.random();
    let propagated = channel::propagate(&clean, &params, channel_seed)?;
    // skip the multipath start-up transient
    let start = rng.random_range(channel::draw::MAX_DELAY + 1..=stream_len - n);
    let window = propagated.with_samples(propagated.samples[start..start + n].to_vec());
    let noise_seed = seed::derive(channel_seed, 3, 0);
    let received = if window.power() > 0.0 {
        channel::apply_awgn(&window, params.snr_db, noise_seed)?
    } else {
        // a silent stretch of an analog message: noise-only capture at the
        // level a unit-power transmission would have after the taps
        let reference: f64 = params.taps.iter().map(|t| t.gain.norm_sqr()).sum();
        channel::add_noise(&window, reference * 10f64.powf(-params.snr_db / 10.0), noise_seed)
    };
    Ok(LabeledExample { capture: IqVector::from_complex64(&received.samples)?, label, snr_db })
}

/// `K · |grid| · M` examples ordered by class, then SNR, then repetition.
/// Each example draws from its own counter-derived seed, so the result does
/// not depend on thread count.
pub fn generate_dataset(cfg: &GenerateConfig) -> Result<Dataset> {
    if cfg.per_class_per_snr == 0 {
        return Err(DatasetError::Parameter("examples per class per SNR must be at least 1".into()));
    }
    if cfg.snr_grid.is_empty() {
        return Err(DatasetError::Parameter("SNR grid is empty".into()));
    }
    if cfg.n < 8 {
        return Err(DatasetError::Parameter(format!("capture length {} is too short", cfg.n)));
    }
    let k = cfg.task.num_classes();
    let s = cfg.snr_grid.len();
    let m = cfg.per_class_per_snr;
    let examples = (0..k * s * m)
        .into_par_iter()
        .map(|i| {
            let label = i / (s * m);
            let snr = cfg.snr_grid[(i / m) % s];
            generate_example(cfg.task, label, snr, cfg.n, seed::derive(cfg.seed, seed::stream::EXAMPLE, i as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        task: cfg.task,
        n: cfg.n,
        class_names: cfg.task.class_names(),
        snr_grid: cfg.snr_grid.clone(),
        examples,
        meta: Some(GenerationMeta { seed: cfg.seed, per_class_per_snr: m }),
    })
}

/// Train / validation / test partition sizes for `len` examples: train is
/// `floor(len·train_frac)`, the rest is halved with the odd one going to
/// validation.
pub fn split_sizes(len: usize, train_frac: f64) -> (usize, usize, usize) {
    let train = ((len as f64 * train_frac) + 1e-9).floor() as usize;
    let train = train.min(len);
    let rest = len - train;
    let test = rest / 2;
    (train, rest - test, test)
}

/// Seeded random permutation cut into train / validation / test.
pub fn split(ds: &Dataset, train_frac: f64, seed: u64) -> Result<(Dataset, Dataset, Dataset)> {
    if ds.is_empty() {
        return Err(DatasetError::Parameter("cannot split an empty dataset".into()));
    }
    if !(0.0..=1.0).contains(&train_frac) {
        return Err(DatasetError::Parameter(format!("train fraction {train_frac} outside [0, 1]")));
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(&mut seed::rng(seed, seed::stream::SPLIT, 0));
    let (a, b, _) = split_sizes(ds.len(), train_frac);
    let pick = |idx: &[usize]| ds.with_examples(idx.iter().map(|&i| ds.examples[i].clone()).collect());
    Ok((pick(&order[..a]), pick(&order[a..a + b]), pick(&order[a + b..])))
}

pub fn write_container<W: Write>(ds: &Dataset, mut w: W) -> Result<()> {
    let k = ds.num_classes();
    if let Some((index, e)) = ds.examples.iter().enumerate().find(|(_, e)| e.label >= k) {
        return Err(DatasetError::LabelOutOfRange { index, label: e.label, k });
    }
    if let Some(e) = ds.examples.iter().find(|e| e.capture.len() != ds.n) {
        return Err(DatasetError::Capture(format!("capture of {} samples in an N={} dataset", e.capture.len(), ds.n)));
    }
    let u32_of = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| DatasetError::Parameter(format!("{what} {v} does not fit the container")))
    };
    w.write_all(MAGIC)?;
    for v in [VERSION, u32_of(ds.n, "N")?, u32_of(k, "K")?, u32_of(ds.len(), "record count")?, u32_of(ds.snr_grid.len(), "grid")?] {
        w.write_all(&v.to_le_bytes())?;
    }
    for s in &ds.snr_grid {
        w.write_all(&s.to_le_bytes())?;
    }
    for name in &ds.class_names {
        let len = u16::try_from(name.len()).map_err(|_| DatasetError::Parameter("class name too long".into()))?;
        w.write_all(&len.to_le_bytes())?;
        w.write_all(name.as_bytes())?;
    }
    let mut record = Vec::with_capacity(4 + 8 * ds.n);
    for e in &ds.examples {
        record.clear();
        record.extend_from_slice(&(e.label as u16).to_le_bytes());
        record.extend_from_slice(&e.snr_db.to_le_bytes());
        for s in e.capture.samples() {
            record.extend_from_slice(&s.re.to_le_bytes());
            record.extend_from_slice(&s.im.to_le_bytes());
        }
        w.write_all(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_container(ds, BufWriter::new(File::create(path)?))
}

/// Fill `buf`; `Ok(false)` on a clean EOF before the first byte.
fn read_exact_or_eof<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<bool> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    if filled == buf.len() {
        Ok(true)
    } else if filled == 0 {
        Ok(false)
    } else {
        Err(DatasetError::Format(format!("partial field: {filled} of {} bytes", buf.len())))
    }
}

fn header_field<const W: usize, R: Read>(r: &mut R, what: &str) -> Result<[u8; W]> {
    let mut b = [0u8; W];
    if !read_exact_or_eof(r, &mut b)? {
        return Err(DatasetError::Format(format!("header ends before {what}")));
    }
    Ok(b)
}

pub fn read_container<R: Read>(mut r: R) -> Result<Dataset> {
    let mut magic = [0u8; 8];
    if !read_exact_or_eof(&mut r, &mut magic).unwrap_or(false) || &magic != MAGIC {
        return Err(DatasetError::BadMagic);
    }
    let mut u32_field = |what: &str| -> Result<u32> { Ok(u32::from_le_bytes(header_field::<4, _>(&mut r, what)?)) };
    let version = u32_field("version")?;
    if version != VERSION {
        return Err(DatasetError::Version(version));
    }
    let n = u32_field("N")? as usize;
    let k = u32_field("K")? as usize;
    let count = u32_field("record count")? as usize;
    let grid_len = u32_field("SNR grid length")? as usize;
    if n == 0 || k == 0 {
        return Err(DatasetError::Format(format!("N={n}, K={k}")));
    }

    let snr_grid = (0..grid_len)
        .map(|_| Ok(i16::from_le_bytes(header_field::<2, _>(&mut r, "SNR grid")?)))
        .collect::<Result<Vec<_>>>()?;
    let mut class_names = Vec::with_capacity(k);
    for _ in 0..k {
        let len = u16::from_le_bytes(header_field::<2, _>(&mut r, "class name")?) as usize;
        let mut bytes = vec![0u8; len];
        if len > 0 && !read_exact_or_eof(&mut r, &mut bytes)? {
            return Err(DatasetError::Format("header ends inside class names".into()));
        }
        class_names.push(String::from_utf8(bytes).map_err(|_| DatasetError::Format("class name is not UTF-8".into()))?);
    }
    let task = Task::from_class_names(&class_names)
        .ok_or_else(|| DatasetError::Format(format!("unrecognised class list {class_names:?}")))?;

    let mut examples = Vec::with_capacity(count.min(1 << 20));
    let mut record = vec![0u8; 4 + 8 * n];
    for index in 0..count {
        match read_exact_or_eof(&mut r, &mut record) {
            Ok(true) => {}
            Ok(false) | Err(DatasetError::Format(_)) => {
                return Err(DatasetError::Truncated { expected: count, found: index })
            }
            Err(e) => return Err(e),
        }
        let label = u16::from_le_bytes([record[0], record[1]]) as usize;
        if label >= k {
            return Err(DatasetError::LabelOutOfRange { index, label, k });
        }
        let snr_db = i16::from_le_bytes([record[2], record[3]]);
        let samples = record[4..]
            .chunks_exact(8)
            .map(|c| {
                Complex32::new(
                    f32::from_le_bytes([c[0], c[1], c[2], c[3]]),
                    f32::from_le_bytes([c[4], c[5], c[6], c[7]]),
                )
            })
            .collect();
        examples.push(LabeledExample { capture: IqVector::new(samples)?, label, snr_db });
    }
    let mut extra = [0u8; 1];
    if read_exact_or_eof(&mut r, &mut extra)? {
        return Err(DatasetError::Format(format!("trailing bytes after {count} records")));
    }
    Ok(Dataset { task, n, class_names, snr_grid, examples, meta: None })
}

pub fn load(path: impl AsRef<Path>) -> Result<Dataset> {
    read_container(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{HashMap, HashSet};

    fn ramp(len: usize) -> BasebandSignal {
        BasebandSignal::new((0..len).map(|k| Complex64::new(k as f64, -(k as f64))).collect(), 1e6, None)
    }

    fn small(task: Task, m: usize, grid: &[i16], seed: u64) -> Dataset {
        generate_dataset(&GenerateConfig { task, per_class_per_snr: m, snr_grid: grid.to_vec(), seed, n: DEFAULT_N })
            .unwrap()
    }

    fn encode(ds: &Dataset) -> Vec<u8> {
        let mut buf = Vec::new();
        write_container(ds, &mut buf).unwrap();
        buf
    }

    #[test]
    fn segment_examples() {
        assert_eq!(segment(&ramp(256), 128).unwrap().len(), 2);
        let one = segment(&ramp(128), 128).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0], IqVector::from_complex64(&ramp(128).samples).unwrap());
        let two = segment(&ramp(300), 128).unwrap();
        assert_eq!(two.len(), 2);
        assert_eq!(two[1].samples()[127].re, 255.0);
        assert!(matches!(segment(&ramp(100), 128), Err(DatasetError::ShortStream { len: 100, n: 128 })));
    }

    #[test]
    fn snr_grid_syntax() {
        assert_eq!(parse_snr_grid("-20:2:18").unwrap().len(), 20);
        assert_eq!(parse_snr_grid("-20:4:16").unwrap(), vec![-20, -16, -12, -8, -4, 0, 4, 8, 12, 16]);
        assert_eq!(parse_snr_grid("0").unwrap(), vec![0]);
        assert_eq!(parse_snr_grid("10:-5:0").unwrap(), vec![10, 5, 0]);
        for bad in ["", "a:b:c", "0:0:10", "10:2:0", "-30:2:0", "0:1"] {
            assert!(parse_snr_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn generation_counts() {
        let ds = small(Task::Modulation, 2, &[0], 1);
        assert_eq!(ds.len(), 22);
        assert_eq!(ds.class_counts(), vec![2; 11]);

        let ds = small(Task::Interference, 1, &[-8, 18], 1);
        assert_eq!(ds.len(), 30);
        let mut per: HashMap<(usize, i16), usize> = HashMap::new();
        for e in &ds.examples {
            *per.entry((e.label, e.snr_db)).or_default() += 1;
            assert_eq!(e.capture.len(), 128);
            assert_eq!(e.onehot(15).iter().sum::<f64>(), 1.0);
            assert_eq!(e.onehot(15)[e.label], 1.0);
        }
        assert_eq!(per.len(), 30);
        assert!(per.values().all(|&c| c == 1));
    }

    #[test]
    fn generation_is_deterministic() {
        let a = small(Task::Modulation, 1, &[-4, 10], 99);
        let b = small(Task::Modulation, 1, &[-4, 10], 99);
        assert_eq!(encode(&a), encode(&b));
        let c = small(Task::Modulation, 1, &[-4, 10], 100);
        assert_ne!(encode(&a), encode(&c));
    }

    #[test]
    fn generated_snr_tracks_label() {
        // at +20 dB the received capture must be mostly signal, at -20 mostly noise:
        // compare normalized lag-1 autocorrelation, which noise destroys
        let ds = small(Task::Interference, 4, &[-20, 20], 5);
        let corr = |e: &LabeledExample| {
            let x = e.capture.to_complex64();
            let num: Complex64 = x.windows(2).map(|w| w[1] * w[0].conj()).sum();
            num.norm() / x.iter().map(|v| v.norm_sqr()).sum::<f64>()
        };
        let mean = |snr: i16| {
            let v: Vec<f64> = ds.examples.iter().filter(|e| e.snr_db == snr).map(corr).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!(mean(20) > 3.0 * mean(-20));
    }

    #[test]
    fn split_sizes_and_partition() {
        assert_eq!(split_sizes(100, 0.67), (67, 17, 16));
        let ds = small(Task::Modulation, 3, &[0, 10], 4);
        let (tr, va, te) = split(&ds, 0.67, 8).unwrap();
        let (a, b, c) = split_sizes(ds.len(), 0.67);
        assert_eq!((tr.len(), va.len(), te.len()), (a, b, c));

        let key = |e: &LabeledExample| encode(&ds.with_examples(vec![e.clone()]));
        let all: HashSet<Vec<u8>> = ds.examples.iter().map(key).collect();
        let parts: Vec<HashSet<Vec<u8>>> =
            [&tr, &va, &te].iter().map(|d| d.examples.iter().map(key).collect()).collect();
        assert!(parts[0].is_disjoint(&parts[1]) && parts[0].is_disjoint(&parts[2]) && parts[1].is_disjoint(&parts[2]));
        let union: HashSet<Vec<u8>> = parts.into_iter().flatten().collect();
        assert_eq!(union, all);

        let (tr2, va2, te2) = split(&ds, 0.67, 8).unwrap();
        assert_eq!((tr, va, te), (tr2, va2, te2));
        assert!(split(&ds.with_examples(vec![]), 0.67, 1).is_err());
    }

    #[test]
    fn container_round_trip() {
        let ds = small(Task::Interference, 1, &[-8, 18], 3);
        let back = read_container(encode(&ds).as_slice()).unwrap();
        assert_eq!(back.examples, ds.examples);
        assert_eq!(back.class_names, ds.class_names);
        assert_eq!(back.snr_grid, ds.snr_grid);
        assert_eq!(back.task, Task::Interference);
        assert_eq!(encode(&back), encode(&ds));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.spds");
        save(&ds, &path).unwrap();
        assert_eq!(load(&path).unwrap().examples, ds.examples);
    }

    #[test]
    fn container_errors_are_distinct() {
        let ds = small(Task::Modulation, 1, &[0], 3);
        let good = encode(&ds);

        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(matches!(read_container(bad.as_slice()), Err(DatasetError::BadMagic)));

        let mut bad = good.clone();
        bad[8..12].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(read_container(bad.as_slice()), Err(DatasetError::Version(2))));

        let record = 4 + 8 * 128;
        let cut = &good[..good.len() - record - 10];
        assert!(matches!(read_container(cut), Err(DatasetError::Truncated { expected: 11, found: 9 })));
        let cut = &good[..good.len() - record];
        assert!(matches!(read_container(cut), Err(DatasetError::Truncated { expected: 11, found: 10 })));

        let mut bad = good.clone();
        let first_record = good.len() - 11 * record;
        bad[first_record..first_record + 2].copy_from_slice(&11u16.to_le_bytes());
        assert!(matches!(
            read_container(bad.as_slice()),
            Err(DatasetError::LabelOutOfRange { index: 0, label: 11, k: 11 })
        ));

        let mut bad = good.clone();
        bad.push(0);
        assert!(matches!(read_container(bad.as_slice()), Err(DatasetError::Format(_))));
    }

    #[test]
    fn header_layout_is_pinned() {
        let ds = small(Task::Modulation, 1, &[-2, 6], 3);
        let buf = encode(&ds);
        assert_eq!(&buf[..8], b"SPECDS01");
        let u32_at = |o: usize| u32::from_le_bytes(buf[o..o + 4].try_into().unwrap());
        assert_eq!([u32_at(8), u32_at(12), u32_at(16), u32_at(20), u32_at(24)], [1, 128, 11, 22, 2]);
        assert_eq!(i16::from_le_bytes([buf[28], buf[29]]), -2);
        assert_eq!(i16::from_le_bytes([buf[30], buf[31]]), 6);
        assert_eq!(u16::from_le_bytes([buf[32], buf[33]]), 4);
        assert_eq!(&buf[34..38], b"BPSK");
        let names: usize = ds.class_names.iter().map(|n| 2 + n.len()).sum();
        assert_eq!(buf.len(), 32 + names + 22 * (4 + 8 * 128));
    }
}
