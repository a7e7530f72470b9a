//! Synthetic weakly-labelled feature videos and a mean-pooled linear head,
//! used to exercise feature mixing end to end against the mAP evaluator.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featmix::{temporal_featmix, FeatureSequence};
use crate::localize::{compute_tcam, evaluate_map, extract_proposals, ClassHead, GtSegment, MapReport, ProposalConfig};
use crate::rng::{RngStream, BATCH_LEVEL};
use crate::tensor::{argmax, SoftLabel};
use crate::toylab::soft_ce_loss;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVideoSpec {
    pub videos: usize,
    pub classes: usize,
    pub segments: usize,
    pub dim: usize,
    /// Planted action length range, in segments (inclusive).
    pub action_len: (usize, usize),
    /// Standard deviation of per-value Gaussian noise.
    pub noise: f64,
    pub seed: u64,
}

impl Default for FeatureVideoSpec {
    fn default() -> Self {
        Self {
            videos: 80,
            classes: 4,
            segments: 100,
            dim: 16,
            action_len: (15, 40),
            noise: 0.5,
            seed: 0,
        }
    }
}

/// Class prototypes (rows `0..K`) followed by the background prototype.
fn prototypes(spec: &FeatureVideoSpec) -> Vec<Vec<f64>> {
    let normal = Normal::new(0.0, 1.0).expect("valid normal");
    let mut gen = RngStream::new(spec.seed).with_epoch(BATCH_LEVEL).generator();
    (0..=spec.classes)
        .map(|_| (0..spec.dim).map(|_| normal.sample(&mut gen)).collect())
        .collect()
}

/// Video `i` has class `i % K` and one planted action interval; segments
/// inside it are the class prototype plus noise, the rest background.
pub fn gen_feature_videos(spec: &FeatureVideoSpec, split: u64) -> Result<(Vec<FeatureSequence>, Vec<GtSegment>)> {
    let (lo, hi) = spec.action_len;
    if spec.classes < 2 || spec.dim == 0 || lo == 0 || lo > hi || hi > spec.segments {
        return Err(Error::InvalidConfig {
            key: "feature video spec".into(),
            reason: format!("{spec:?}"),
        });
    }
    let protos = prototypes(spec);
    let normal = Normal::new(0.0, spec.noise).map_err(|_| Error::InvalidConfig {
        key: "noise".into(),
        reason: "must be finite and non-negative".into(),
    })?;
    let made = (0..spec.videos)
        .into_par_iter()
        .map(|i| {
            let class = i % spec.classes;
            let mut gen = RngStream::new(spec.seed).with_epoch(split).with_sample(i as u64).generator();
            let len = gen.random_range(lo..=hi);
            let start = gen.random_range(0..=spec.segments - len);
            let mut data = Vec::with_capacity(spec.segments * spec.dim);
            for s in 0..spec.segments {
                let proto = if (start..start + len).contains(&s) {
                    &protos[class]
                } else {
                    &protos[spec.classes]
                };
                data.extend(proto.iter().map(|&m| (m + normal.sample(&mut gen)) as f32));
            }
            let id = format!("video-{split}-{i:04}");
            let gt = GtSegment {
                video_id: id.clone(),
                class,
                start,
                end: start + len,
            };
            let seq = FeatureSequence::new(id, spec.segments, spec.dim, data, SoftLabel::one_hot(class, spec.classes)?)?;
            Ok((seq, gt))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(made.into_iter().unzip())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Mix every batch with temporal feature mixing.
    pub featmix: bool,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for HeadTrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 16,
            lr: 0.1,
            featmix: false,
            alpha: 1.0,
            seed: 0,
        }
    }
}

fn mean_feature(f: &FeatureSequence) -> Vec<f64> {
    let mut out = vec![0.0; f.dim()];
    for s in 0..f.segments() {
        for (o, &x) in out.iter_mut().zip(f.row(s)) {
            *o += f64::from(x);
        }
    }
    out.iter_mut().for_each(|o| *o /= f.segments() as f64);
    out
}

/// Video logits are the segment mean of the T-CAM, which for a linear head
/// equals the head applied to the mean feature.
pub fn video_logits(head: &ClassHead, f: &FeatureSequence) -> Vec<f64> {
    let m = mean_feature(f);
    head.weights
        .iter()
        .zip(&head.bias)
        .map(|(w, b)| w.iter().zip(&m).map(|(a, x)| a * x).sum::<f64>() + b)
        .collect()
}

/// Trains a zero-initialized head with soft-label cross-entropy on the
/// mean-pooled video logits.
pub fn train_head(videos: &[FeatureSequence], cfg: &HeadTrainConfig) -> Result<ClassHead> {
    let first = videos.first().ok_or(Error::EmptyBatch)?;
    let (k, d) = (first.label.classes(), first.dim());
    let mut head = ClassHead {
        weights: vec![vec![0.0; d]; k],
        bias: vec![0.0; k],
    };
    for epoch in 0..cfg.epochs {
        let stream = RngStream::new(cfg.seed).with_epoch(epoch as u64);
        let mut order: Vec<usize> = (0..videos.len()).collect();
        order.shuffle(&mut stream.with_batch(BATCH_LEVEL).batch_level().generator());
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let bstream = stream.with_batch(b as u64);
            let batch: Vec<FeatureSequence> = if cfg.featmix && chunk.len() > 1 {
                let mut perm: Vec<usize> = chunk.to_vec();
                perm.shuffle(&mut bstream.batch_level().generator());
                chunk
                    .par_iter()
                    .zip(&perm)
                    .enumerate()
                    .map(|(i, (&a, &p))| {
                        temporal_featmix(&videos[a], &videos[p], cfg.alpha, bstream.with_sample(i as u64)).map(|m| m.0)
                    })
                    .collect::<Result<_>>()?
            } else {
                chunk.iter().map(|&i| videos[i].clone()).collect()
            };
            let scale = cfg.lr / batch.len() as f64;
            let mut steps = Vec::with_capacity(batch.len());
            for f in &batch {
                let (loss, g) = soft_ce_loss(&video_logits(&head, f), &f.label)?;
                if !loss.is_finite() {
                    return Err(Error::Diverged { epoch });
                }
                steps.push((mean_feature(f), g));
            }
            for (m, g) in &steps {
                for (kk, gk) in g.iter().enumerate() {
                    for (w, x) in head.weights[kk].iter_mut().zip(m) {
                        *w -= scale * gk * x;
                    }
                    head.bias[kk] -= scale * gk;
                }
            }
        }
    }
    Ok(head)
}

/// Proposals for each video's top-scoring class, scored against `gts`.
pub fn localization_report(
    head: &ClassHead,
    videos: &[FeatureSequence],
    gts: &[GtSegment],
    thresholds: &[f64],
) -> Result<MapReport> {
    let cfg = ProposalConfig::default();
    let mut proposals = Vec::new();
    for f in videos {
        let class = argmax(&video_logits(head, f));
        let tcam = compute_tcam(f, head)?;
        proposals.extend(extract_proposals(&tcam, class, &f.id, &cfg));
    }
    Ok(evaluate_map(&proposals, gts, thresholds))
}
