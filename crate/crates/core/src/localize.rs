//! Temporal class activation sequences, threshold-based action proposals
//! and average-precision evaluation over temporal IoU thresholds.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::featmix::FeatureSequence;
use crate::sampler::Ratio;
use crate::tensor::VideoClip;

/// Per-class linear head: `K x D` weights (row-major) plus `K` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassHead {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl ClassHead {
    pub fn classes(&self) -> usize {
        self.weights.len()
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.weights.is_empty() {
            return Err(Error::DimZero { field: "classes" });
        }
        if self.bias.len() != self.weights.len() {
            return Err(Error::DimMismatch {
                field: "bias length",
                expected: self.weights.len(),
                actual: self.bias.len(),
            });
        }
        for row in &self.weights {
            if row.len() != dim {
                return Err(Error::DimMismatch {
                    field: "weight row length",
                    expected: dim,
                    actual: row.len(),
                });
            }
        }
        Ok(())
    }
}

/// `S x K` per-segment class activations.
#[derive(Debug, Clone, PartialEq)]
pub struct TCam {
    segments: usize,
    classes: usize,
    scores: Vec<f64>,
}

impl TCam {
    pub fn new(segments: usize, classes: usize, scores: Vec<f64>) -> Result<Self> {
        if segments == 0 {
            return Err(Error::DimZero { field: "segments" });
        }
        if classes == 0 {
            return Err(Error::DimZero { field: "classes" });
        }
        if scores.len() != segments * classes {
            return Err(Error::LengthMismatch {
                field: "tcam scores",
                expected: segments * classes,
                actual: scores.len(),
            });
        }
        if scores.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { field: "tcam scores" });
        }
        Ok(Self {
            segments,
            classes,
            scores,
        })
    }

    /// Reads an `S x 1 x 1 x K` tensor.
    pub fn from_clip(clip: &VideoClip) -> Result<Self> {
        let s = clip.shape();
        if s.height != 1 || s.width != 1 {
            return Err(Error::ShapeMismatch {
                field: "tcam tensor",
                left: s.to_string(),
                right: format!("{}x1x1x{}", s.frames, s.channels),
            });
        }
        Self::new(
            s.frames,
            s.channels,
            clip.data().iter().map(|&v| f64::from(v)).collect(),
        )
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn score(&self, s: usize, k: usize) -> f64 {
        self.scores[s * self.classes + k]
    }

    pub fn class_scores(&self, k: usize) -> Vec<f64> {
        (0..self.segments).map(|s| self.score(s, k)).collect()
    }
}

/// `scores[s,k] = sum_d features[s,d] * weights[k,d] + bias[k]`.
pub fn compute_tcam(features: &FeatureSequence, head: &ClassHead) -> Result<TCam> {
    head.validate(features.dim())?;
    let mut scores = Vec::with_capacity(features.segments() * head.classes());
    for s in 0..features.segments() {
        let row = features.row(s);
        for (w, b) in head.weights.iter().zip(&head.bias) {
            let mut acc = 0.0;
            for (&x, &wd) in row.iter().zip(w) {
                acc += f64::from(x) * wd;
            }
            scores.push(acc + b);
        }
    }
    TCam::new(features.segments(), head.classes(), scores)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proposal {
    pub video_id: String,
    #[serde(rename = "class")]
    pub class: usize,
    pub start: usize,
    pub end: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GtSegment {
    pub video_id: String,
    #[serde(rename = "class")]
    pub class: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProposalConfig {
    /// Segments scoring at least `threshold_ratio * max` are kept.
    pub threshold_ratio: f64,
    /// When the class maximum is not positive, shift scores by `-min`
    /// before thresholding.
    pub shift_nonpositive: bool,
}

impl Default for ProposalConfig {
    fn default() -> Self {
        Self {
            threshold_ratio: 0.5,
            shift_nonpositive: true,
        }
    }
}

/// Maximal runs of segments scoring `>= threshold_ratio * max` for class
/// `class`. Each run is scored by its mean (unshifted) activation.
pub fn extract_proposals(tcam: &TCam, class: usize, video_id: &str, cfg: &ProposalConfig) -> Vec<Proposal> {
    let raw = tcam.class_scores(class);
    let max = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let shift = if cfg.shift_nonpositive && max <= 0.0 {
        -raw.iter().cloned().fold(f64::INFINITY, f64::min)
    } else {
        0.0
    };
    let theta = cfg.threshold_ratio * (max + shift);
    let keep: Vec<bool> = raw.iter().map(|&v| v + shift >= theta).collect();

    let mut out = Vec::new();
    let mut s = 0;
    while s < keep.len() {
        if !keep[s] {
            s += 1;
            continue;
        }
        let start = s;
        while s < keep.len() && keep[s] {
            s += 1;
        }
        let score = raw[start..s].iter().sum::<f64>() / (s - start) as f64;
        out.push(Proposal {
            video_id: video_id.to_owned(),
            class,
            start,
            end: s,
            score,
        });
    }
    out
}

/// Intersection over union of two half-open intervals.
pub fn temporal_iou(a: (usize, usize), b: (usize, usize)) -> Result<Ratio> {
    for &(start, end) in &[a, b] {
        if start >= end {
            return Err(Error::EmptyInterval { start, end });
        }
    }
    let inter = a.1.min(b.1).saturating_sub(a.0.max(b.0));
    let union = (a.1 - a.0) + (b.1 - b.0) - inter;
    Ratio::new(inter as f64 / union as f64)
}

fn iou_unchecked(a: (usize, usize), b: (usize, usize)) -> f64 {
    temporal_iou(a, b).map(Ratio::get).unwrap_or(0.0)
}

/// Average precision for one class at one IoU threshold.
///
/// Proposals are ranked by descending score (stable on ties). Each one
/// claims the highest-IoU unmatched ground truth of the same video and class
/// if that IoU reaches `iou_thr`; otherwise it is a false positive. The AP
/// is the sum of precision at each true-positive rank divided by the number
/// of ground truths. Returns `None` when the class has neither ground truths
/// nor proposals, and `Some(0.0)` when it has proposals but no ground truth.
pub fn average_precision(proposals: &[Proposal], gts: &[GtSegment], class: usize, iou_thr: f64) -> Option<f64> {
    let mut ranked: Vec<&Proposal> = proposals.iter().filter(|p| p.class == class).collect();
    let truth: Vec<&GtSegment> = gts.iter().filter(|g| g.class == class).collect();
    if truth.is_empty() {
        return if ranked.is_empty() { None } else { Some(0.0) };
    }
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score));

    let mut matched = vec![false; truth.len()];
    let mut tp = 0usize;
    let mut precision_sum = 0.0;
    for (rank, p) in ranked.iter().enumerate() {
        let best = truth
            .iter()
            .enumerate()
            .filter(|(j, g)| !matched[*j] && g.video_id == p.video_id)
            .map(|(j, g)| (j, iou_unchecked((p.start, p.end), (g.start, g.end))))
            .fold(None, |best: Option<(usize, f64)>, (j, iou)| match best {
                Some((_, b)) if b >= iou => best,
                _ => Some((j, iou)),
            });
        if let Some((j, iou)) = best {
            if iou >= iou_thr {
                matched[j] = true;
                tp += 1;
                precision_sum += tp as f64 / (rank + 1) as f64;
            }
        }
    }
    Some(precision_sum / truth.len() as f64)
}

/// IoU thresholds `0.1, 0.2, ..., 0.9`.
pub fn default_thresholds() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub per_class: BTreeMap<usize, f64>,
    pub mean_ap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapReport {
    /// Keyed by the threshold's decimal rendering.
    pub thresholds: BTreeMap<String, ThresholdReport>,
    #[serde(rename = "mAP")]
    pub map: f64,
}

/// Mean over thresholds of the mean AP over classes that have ground truth.
pub fn evaluate_map(proposals: &[Proposal], gts: &[GtSegment], thresholds: &[f64]) -> MapReport {
    let classes: BTreeSet<usize> = gts.iter().map(|g| g.class).collect();
    let mut reports = BTreeMap::new();
    let mut total = 0.0;
    for &thr in thresholds {
        let per_class: BTreeMap<usize, f64> = classes
            .iter()
            .map(|&k| (k, average_precision(proposals, gts, k, thr).unwrap_or(0.0)))
            .collect();
        let mean_ap = if per_class.is_empty() {
            0.0
        } else {
            per_class.values().sum::<f64>() / per_class.len() as f64
        };
        total += mean_ap;
        reports.insert(format!("{thr}"), ThresholdReport { per_class, mean_ap });
    }
    let map = if thresholds.is_empty() {
        0.0
    } else {
        total / thresholds.len() as f64
    };
    MapReport {
        thresholds: reports,
        map,
    }
}

pub fn mean_map(proposals: &[Proposal], gts: &[GtSegment], thresholds: &[f64]) -> f64 {
    evaluate_map(proposals, gts, thresholds).map
}
