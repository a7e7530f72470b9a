//! A small synthetic experiment: scene-biased moving-sprite clips, a pooled
//! linear soft-label classifier, and a deterministic training loop that can
//! put every batch through one of the mixers.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixers::{cutout_video, mixup_video, videomix_batch, BatchMixConfig, MixSource};
use crate::pipeline::{multiview_crops, resize_bilinear, ClipSpec, ViewSpec};
use crate::rng::{RngStream, BATCH_LEVEL};
use crate::sampler::{MixVariant, Ratio};
use crate::tensor::{BatchItem, ClipBatch, Shape, SoftLabel, VideoClip};

/// Pooling block over `(frames, height, width)`; channels are averaged too.
pub const POOL: (usize, usize, usize) = (2, 4, 4);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub classes: usize,
    pub clips_per_class: usize,
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    /// Probability that a training clip's background is its class color.
    pub bias: Ratio,
    /// Uniform pixel noise amplitude.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            classes: 4,
            clips_per_class: 200,
            frames: 8,
            height: 32,
            width: 32,
            channels: 3,
            bias: Ratio::new(0.9).unwrap(),
            noise: 0.1,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn shape(&self) -> Shape {
        Shape::new(self.frames, self.height, self.width, self.channels)
    }

    fn sprite_side(&self) -> usize {
        (self.height.min(self.width) / 5).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(invalid("classes", "need at least 2"));
        }
        if self.clips_per_class == 0 {
            return Err(invalid("clips_per_class", "must be positive"));
        }
        self.shape().check_nonzero()?;
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(invalid("noise", "must be finite and non-negative"));
        }
        Ok(())
    }
}

fn invalid(key: &str, reason: impl Into<String>) -> Error {
    Error::InvalidConfig {
        key: key.to_owned(),
        reason: reason.into(),
    }
}

/// Background color of class `k`: channel-mean luminance rises with `k`,
/// plus a zero-mean tint.
pub fn palette(k: usize, classes: usize, channels: usize) -> Vec<f32> {
    let lum = 0.1 + 0.4 * k as f64 / (classes - 1) as f64;
    let phase = std::f64::consts::TAU * k as f64 / classes as f64;
    (0..channels)
        .map(|c| {
            let tint = if channels > 1 {
                0.05 * (phase + std::f64::consts::TAU * c as f64 / channels as f64).cos()
            } else {
                0.0
            };
            (lum + tint) as f32
        })
        .collect()
}

/// Renders one clip. Draw order: start row, start column, then one noise
/// draw per value in storage order.
fn render_clip(spec: &SyntheticSpec, class: usize, background: usize, gen: &mut impl Rng) -> VideoClip {
    let shape = spec.shape();
    let side = spec.sprite_side();
    let color = palette(background, spec.classes, spec.channels);
    let span = (spec.frames.max(2) - 1) as f64;
    let step = if spec.frames > 1 {
        (spec.height.min(spec.width) - side) as f64 / (2.0 * span)
    } else {
        0.0
    };
    let angle = std::f64::consts::TAU * class as f64 / spec.classes as f64;
    let (vy, vx) = (step * angle.sin(), step * angle.cos());
    let start = |v: f64, extent: usize, u: f64| {
        let lo = (-v * span).max(0.0);
        let hi = (extent - side) as f64 - (v * span).max(0.0);
        lo + u * (hi - lo).max(0.0)
    };
    let y0 = start(vy, spec.height, gen.random::<f64>());
    let x0 = start(vx, spec.width, gen.random::<f64>());

    let mut data = Vec::with_capacity(shape.len());
    for t in 0..spec.frames {
        let top = (y0 + vy * t as f64).round() as usize;
        let left = (x0 + vx * t as f64).round() as usize;
        for h in 0..spec.height {
            for w in 0..spec.width {
                let sprite = (top..top + side).contains(&h) && (left..left + side).contains(&w);
                for &bg in &color {
                    let base = if sprite { 1.0 } else { f64::from(bg) };
                    let n = spec.noise * (2.0 * gen.random::<f64>() - 1.0);
                    data.push((base + n).clamp(0.0, 1.0) as f32);
                }
            }
        }
    }
    VideoClip::from_parts_unchecked(shape, data)
}

fn gen_split(spec: &SyntheticSpec, split: u64, bias: Option<Ratio>) -> Result<ClipBatch> {
    let k = spec.classes;
    let n = k * spec.clips_per_class;
    let name = if split == 0 { "train" } else { "test" };
    let items = (0..n)
        .into_par_iter()
        .map(|i| {
            let class = i % k;
            let mut gen = RngStream::new(spec.seed).with_epoch(split).with_sample(i as u64).generator();
            let background = match bias {
                Some(b) => {
                    if gen.random::<f64>() < b.get() {
                        class
                    } else {
                        let j = gen.random_range(0..k - 1);
                        if j >= class {
                            j + 1
                        } else {
                            j
                        }
                    }
                }
                None => gen.random_range(0..k),
            };
            Ok(BatchItem {
                id: format!("{name}-{i:05}-bg{background}"),
                clip: render_clip(spec, class, background, &mut gen),
                label: SoftLabel::one_hot(class, k)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ClipBatch::new(items)
}

/// Training clips follow `spec.bias`; test clips draw backgrounds uniformly.
pub fn gen_biased_dataset(spec: &SyntheticSpec) -> Result<(ClipBatch, ClipBatch)> {
    spec.validate()?;
    Ok((gen_split(spec, 0, Some(spec.bias))?, gen_split(spec, 1, None)?))
}

/// Background index recorded in a generated item's id.
pub fn background_of(item: &BatchItem) -> Option<usize> {
    item.id.rsplit_once("-bg")?.1.parse().ok()
}

/// Pooled linear classifier: channel/block averaging, then `K x F` weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyModel {
    pub input: Shape,
    pub classes: usize,
    /// Row-major `K x F`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

pub fn pooled_dims(input: Shape) -> Result<(usize, usize, usize)> {
    let (pt, ph, pw) = POOL;
    if !input.frames.is_multiple_of(pt) || !input.height.is_multiple_of(ph) || !input.width.is_multiple_of(pw) {
        return Err(invalid(
            "input shape",
            format!("{input} is not divisible by the {pt}x{ph}x{pw} pooling block"),
        ));
    }
    Ok((input.frames / pt, input.height / ph, input.width / pw))
}

/// Average over channels and `POOL` blocks, flattened `t, h, w`.
pub fn pool_features(clip: &VideoClip) -> Result<Vec<f64>> {
    let s = clip.shape();
    let (ft, fh, fw) = pooled_dims(s)?;
    let (pt, ph, pw) = POOL;
    let mut out = vec![0.0; ft * fh * fw];
    for t in 0..s.frames {
        for h in 0..s.height {
            let row = ((t / pt) * fh + h / ph) * fw;
            for w in 0..s.width {
                let v: f64 = clip.voxel(t, h, w).iter().map(|&x| f64::from(x)).sum();
                out[row + w / pw] += v;
            }
        }
    }
    let norm = (pt * ph * pw * s.channels) as f64;
    out.iter_mut().for_each(|v| *v /= norm);
    Ok(out)
}

impl ToyModel {
    /// Weights drawn from `N(0, 0.01^2)`, zero biases.
    pub fn new(input: Shape, classes: usize, seed: u64) -> Result<Self> {
        input.check_nonzero()?;
        let (ft, fh, fw) = pooled_dims(input)?;
        let f = ft * fh * fw;
        let normal = Normal::new(0.0, 0.01).expect("valid normal");
        let mut gen = RngStream::new(seed).with_epoch(BATCH_LEVEL).generator();
        Ok(Self {
            input,
            classes,
            weights: (0..classes * f).map(|_| normal.sample(&mut gen)).collect(),
            bias: vec![0.0; classes],
        })
    }

    pub fn features(&self) -> usize {
        self.weights.len() / self.classes
    }

    fn check_input(&self, clip: &VideoClip) -> Result<()> {
        if clip.shape() != self.input {
            return Err(Error::ShapeMismatch {
                field: "model input",
                left: clip.shape().to_string(),
                right: self.input.to_string(),
            });
        }
        Ok(())
    }

    pub fn logits_from_features(&self, f: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(f.len())
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(f).map(|(w, x)| w * x).sum::<f64>() + b)
            .collect()
    }

    pub fn logits(&self, clip: &VideoClip) -> Result<Vec<f64>> {
        self.check_input(clip)?;
        Ok(self.logits_from_features(&pool_features(clip)?))
    }

    /// Loss and parameter gradient for one example.
    pub fn loss_and_grad(&self, clip: &VideoClip, label: &SoftLabel) -> Result<(f64, Gradient)> {
        self.check_input(clip)?;
        let f = pool_features(clip)?;
        let (loss, g) = soft_ce_loss(&self.logits_from_features(&f), label)?;
        let weights = g.iter().flat_map(|&gk| f.iter().map(move |&x| gk * x)).collect();
        Ok((loss, Gradient { weights, bias: g }))
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

/// `-sum_k y_k log softmax(z)_k` and its gradient `softmax(z) - y`.
pub fn soft_ce_loss(logits: &[f64], label: &SoftLabel) -> Result<(f64, Vec<f64>)> {
    let y = label.masses();
    if logits.len() != y.len() {
        return Err(Error::LabelDimMismatch {
            left: logits.len(),
            right: y.len(),
        });
    }
    if logits.iter().any(|z| !z.is_finite()) {
        return Err(Error::NonFinite { field: "logits" });
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    let loss = -y
        .iter()
        .zip(logits)
        .map(|(&yk, &z)| yk * (z - max - log_sum))
        .sum::<f64>();
    let grad = softmax(logits).iter().zip(y).map(|(p, yk)| p - yk).collect();
    Ok((loss, grad))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Augmentation {
    None,
    Mixup,
    Cutout,
    VideoMix(MixVariant),
}

impl Augmentation {
    pub fn all() -> Vec<Augmentation> {
        let mut out = vec![Augmentation::None, Augmentation::Mixup, Augmentation::Cutout];
        out.extend(MixVariant::ALL.iter().map(|&v| Augmentation::VideoMix(v)));
        out
    }
}

impl fmt::Display for Augmentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Augmentation::None => f.write_str("none"),
            Augmentation::Mixup => f.write_str("mixup"),
            Augmentation::Cutout => f.write_str("cutout"),
            Augmentation::VideoMix(v) => write!(f, "videomix-{}", v.cli_name()),
        }
    }
}

impl FromStr for Augmentation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Augmentation::all()
            .into_iter()
            .find(|a| a.to_string() == s)
            .ok_or_else(|| {
                let names: Vec<String> = Augmentation::all().iter().map(|a| a.to_string()).collect();
                invalid("aug", format!("unknown augmentation '{s}', expected one of {}", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub aug: Augmentation,
    pub alpha: f64,
    pub prob: f64,
    pub n_videos: usize,
    pub cutout_side: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 60,
            batch_size: 32,
            lr: 0.3,
            aug: Augmentation::None,
            alpha: 1.0,
            prob: 1.0,
            n_videos: 2,
            cutout_side: 16,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(invalid("epochs", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(invalid("batch_size", "must be positive"));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(invalid("lr", "must be finite and non-negative"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(invalid("alpha", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.prob) {
            return Err(invalid("prob", "must lie in [0, 1]"));
        }
        if !(2..=4).contains(&self.n_videos) {
            return Err(invalid("n_videos", "must be 2, 3 or 4"));
        }
        if self.cutout_side == 0 {
            return Err(invalid("cutout_side", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_top1: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub epochs: Vec<EpochMetrics>,
}

impl Metrics {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss,val_top1\n");
        for m in &self.epochs {
            out.push_str(&format!("{},{},{},{}\n", m.epoch, m.train_loss, m.val_loss, m.val_top1));
        }
        out
    }

    pub fn last(&self) -> Option<&EpochMetrics> {
        self.epochs.last()
    }
}

/// Shared gate and pairing draws for the batch-level baselines.
fn gate_and_pairing(batch: &ClipBatch, prob: f64, rng: RngStream) -> Option<Vec<usize>> {
    let mut gen = rng.batch_level().generator();
    if gen.random::<f64>() >= prob {
        return None;
    }
    let mut perm: Vec<usize> = (0..batch.len()).collect();
    perm.shuffle(&mut gen);
    Some(perm)
}

/// Applies the configured augmentation to one training batch.
pub fn augment_batch(batch: &ClipBatch, cfg: &TrainConfig, rng: RngStream) -> Result<ClipBatch> {
    let items = batch.items();
    let rebuild = |out: Vec<(VideoClip, SoftLabel)>| {
        ClipBatch::new(
            items
                .iter()
                .zip(out)
                .map(|(it, (clip, label))| BatchItem {
                    id: it.id.clone(),
                    clip,
                    label,
                })
                .collect(),
        )
    };
    match cfg.aug {
        Augmentation::None => Ok(batch.clone()),
        Augmentation::VideoMix(variant) => {
            if batch.len() < 2 {
                return Ok(batch.clone());
            }
            let mix = BatchMixConfig {
                variant,
                alpha: cfg.alpha,
                prob: cfg.prob,
                n_videos: cfg.n_videos,
            };
            videomix_batch(batch, &mix, rng)?.into_clip_batch()
        }
        Augmentation::Mixup => {
            let Some(perm) = gate_and_pairing(batch, cfg.prob, rng) else {
                return Ok(batch.clone());
            };
            let out = (0..items.len())
                .into_par_iter()
                .map(|i| {
                    let (clip, label, _) = mixup_video(
                        MixSource::from(&items[i]),
                        MixSource::from(&items[perm[i]]),
                        cfg.alpha,
                        rng.with_sample(i as u64),
                    )?;
                    Ok((clip, label))
                })
                .collect::<Result<Vec<_>>>()?;
            rebuild(out)
        }
        Augmentation::Cutout => {
            let mut gen = rng.batch_level().generator();
            if gen.random::<f64>() >= cfg.prob {
                return Ok(batch.clone());
            }
            let out = (0..items.len())
                .into_par_iter()
                .map(|i| {
                    let (clip, _) = cutout_video(&items[i].clip, cfg.cutout_side, rng.with_sample(i as u64))?;
                    Ok((clip, items[i].label.clone()))
                })
                .collect::<Result<Vec<_>>>()?;
            rebuild(out)
        }
    }
}

/// Mean loss and top-1 accuracy (ties to the lowest class index).
pub fn loss_and_accuracy(model: &ToyModel, data: &ClipBatch) -> Result<(f64, f64)> {
    let per_item = data
        .items()
        .par_iter()
        .map(|it| {
            let logits = model.logits(&it.clip)?;
            let (loss, _) = soft_ce_loss(&logits, &it.label)?;
            let hit = crate::tensor::argmax(&logits) == it.label.argmax();
            Ok((loss, hit))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = per_item.len() as f64;
    let loss = per_item.iter().map(|p| p.0).sum::<f64>() / n;
    let acc = per_item.iter().filter(|p| p.1).count() as f64 / n;
    Ok((loss, acc))
}

/// Mini-batch gradient descent over `data`, evaluating on `val` after each
/// epoch. Every random choice derives from `cfg.seed`.
pub fn train(model: &ToyModel, data: &ClipBatch, val: &ClipBatch, cfg: &TrainConfig) -> Result<(ToyModel, Metrics)> {
    cfg.validate()?;
    for batch in [data, val] {
        if batch.shape() != model.input {
            return Err(Error::ShapeMismatch {
                field: "training data",
                left: batch.shape().to_string(),
                right: model.input.to_string(),
            });
        }
        if batch.classes() != model.classes {
            return Err(Error::LabelDimMismatch {
                left: batch.classes(),
                right: model.classes,
            });
        }
    }
    let mut model = model.clone();
    let mut metrics = Metrics::default();
    for epoch in 0..cfg.epochs {
        let stream = RngStream::new(cfg.seed).with_epoch(epoch as u64);
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut stream.with_batch(BATCH_LEVEL).batch_level().generator());

        let mut loss_sum = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch = augment_batch(&data.select(chunk)?, cfg, stream.with_batch(b as u64))?;
            let grads = batch
                .items()
                .par_iter()
                .map(|it| model.loss_and_grad(&it.clip, &it.label))
                .collect::<Result<Vec<_>>>()?;
            let scale = cfg.lr / grads.len() as f64;
            for (loss, g) in &grads {
                loss_sum += loss;
                model.weights.iter_mut().zip(&g.weights).for_each(|(w, d)| *w -= scale * d);
                model.bias.iter_mut().zip(&g.bias).for_each(|(w, d)| *w -= scale * d);
            }
        }
        let train_loss = loss_sum / data.len() as f64;
        let (val_loss, val_top1) = loss_and_accuracy(&model, val)?;
        if !train_loss.is_finite() || !val_loss.is_finite() || model.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Diverged { epoch });
        }
        metrics.epochs.push(EpochMetrics {
            epoch,
            train_loss,
            val_loss,
            val_top1,
        });
    }
    Ok((model, metrics))
}

/// Evaluation views: the temporal window spec plus the crop grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalViews {
    pub clip: ClipSpec,
    pub views: ViewSpec,
}

/// Top-1 accuracy. With views, each crop is resized to the model input and
/// the per-view probabilities are averaged before the argmax.
pub fn evaluate(model: &ToyModel, data: &ClipBatch, views: Option<&EvalViews>) -> Result<Ratio> {
    let Some(v) = views else {
        let (_, acc) = loss_and_accuracy(model, data)?;
        return Ratio::new(acc);
    };
    if v.clip.frames != model.input.frames {
        return Err(Error::DimMismatch {
            field: "view frames",
            expected: model.input.frames,
            actual: v.clip.frames,
        });
    }
    let hits = data
        .items()
        .par_iter()
        .map(|it| {
            let crops = multiview_crops(&it.clip, &v.clip, &v.views)?;
            let mut avg = vec![0.0; model.classes];
            for crop in &crops {
                let s = crop.shape();
                let input = if (s.height, s.width) == (model.input.height, model.input.width) {
                    crop.clone()
                } else {
                    resize_bilinear(crop, model.input.height, model.input.width)?
                };
                for (a, p) in avg.iter_mut().zip(softmax(&model.logits(&input)?)) {
                    *a += p;
                }
            }
            avg.iter_mut().for_each(|a| *a /= crops.len() as f64);
            Ok(crate::tensor::argmax(&avg) == it.label.argmax())
        })
        .collect::<Result<Vec<bool>>>()?;
    Ratio::new(hits.iter().filter(|&&h| h).count() as f64 / hits.len() as f64)
}

/// Dataset plus training settings, loadable from a flat `key = value` file.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data: SyntheticSpec,
    pub train: TrainConfig,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| invalid(key, format!("cannot parse '{value}'")))
}

impl ExperimentConfig {
    /// Blank lines and `#` comments are ignored; unknown or repeated keys
    /// are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut seen = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| invalid(&format!("line {}", n + 1), "expected 'key = value'"))?;
            let key = key.trim().to_owned();
            if seen.insert(key.clone(), value.trim().to_owned()).is_some() {
                return Err(invalid(&key, "given more than once"));
            }
        }
        let mut cfg = ExperimentConfig::default();
        for (key, value) in &seen {
            let (k, v) = (key.as_str(), value.as_str());
            match k {
                "classes" => cfg.data.classes = parse_value(k, v)?,
                "clips_per_class" => cfg.data.clips_per_class = parse_value(k, v)?,
                "frames" => cfg.data.frames = parse_value(k, v)?,
                "height" => cfg.data.height = parse_value(k, v)?,
                "width" => cfg.data.width = parse_value(k, v)?,
                "channels" => cfg.data.channels = parse_value(k, v)?,
                "bias" => {
                    cfg.data.bias = Ratio::new(parse_value(k, v)?).map_err(|_| invalid(k, "must lie in [0, 1]"))?
                }
                "noise" => cfg.data.noise = parse_value(k, v)?,
                "data_seed" => cfg.data.seed = parse_value(k, v)?,
                "epochs" => cfg.train.epochs = parse_value(k, v)?,
                "batch_size" => cfg.train.batch_size = parse_value(k, v)?,
                "lr" => cfg.train.lr = parse_value(k, v)?,
                "aug" => cfg.train.aug = v.parse()?,
                "alpha" => cfg.train.alpha = parse_value(k, v)?,
                "prob" => cfg.train.prob = parse_value(k, v)?,
                "n_videos" => cfg.train.n_videos = parse_value(k, v)?,
                "cutout_side" => cfg.train.cutout_side = parse_value(k, v)?,
                "seed" => cfg.train.seed = parse_value(k, v)?,
                _ => return Err(invalid(k, "unknown key")),
            }
        }
        cfg.data.validate()?;
        cfg.train.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub model: ToyModel,
    pub metrics: Metrics,
    pub test_top1: f64,
}

/// Generates the dataset, trains from a seeded initialization with the test
/// split as validation set, and reports final test accuracy.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let (train_set, test_set) = gen_biased_dataset(&cfg.data)?;
    let init = ToyModel::new(cfg.data.shape(), cfg.data.classes, cfg.train.seed)?;
    let (model, metrics) = train(&init, &train_set, &test_set, &cfg.train)?;
    let test_top1 = evaluate(&model, &test_set, None)?.get();
    Ok(ExperimentOutcome {
        model,
        metrics,
        test_top1,
    })
}
