//! Feature-space augmentation for localization models trained on
//! precomputed per-segment features.

use rand::Rng;

use crate::error::{Error, Result};
use crate::mixers::{mix_with_cuboids, MixRecipe, MixSource};
use crate::pipeline::bin_bounds;
use crate::rng::RngStream;
use crate::sampler::{sample_lambda, sample_temporal_cuboid, CuboidCoords, Extent, MixVariant, Ratio};
use crate::tensor::{Shape, SoftLabel, VideoClip};

pub const DEFAULT_HIDE_BINS: usize = 16;
pub const DEFAULT_HIDE_PROB: f64 = 0.5;

/// An `S x D` matrix of segment features with a video-level label.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    pub id: String,
    features: VideoClip,
    pub label: SoftLabel,
}

impl FeatureSequence {
    pub fn new(id: impl Into<String>, segments: usize, dim: usize, data: Vec<f32>, label: SoftLabel) -> Result<Self> {
        let features = VideoClip::new(Shape::new(segments, 1, 1, dim), data)?;
        Ok(Self {
            id: id.into(),
            features,
            label,
        })
    }

    /// Wraps an `S x 1 x 1 x D` tensor, the on-disk layout of feature files.
    pub fn from_clip(id: impl Into<String>, clip: VideoClip, label: SoftLabel) -> Result<Self> {
        let s = clip.shape();
        if s.height != 1 || s.width != 1 {
            return Err(Error::ShapeMismatch {
                field: "feature tensor",
                left: s.to_string(),
                right: format!("{}x1x1x{}", s.frames, s.channels),
            });
        }
        Ok(Self {
            id: id.into(),
            features: clip,
            label,
        })
    }

    pub fn segments(&self) -> usize {
        self.features.shape().frames
    }

    pub fn dim(&self) -> usize {
        self.features.shape().channels
    }

    pub fn data(&self) -> &[f32] {
        self.features.data()
    }

    pub fn row(&self, s: usize) -> &[f32] {
        self.features.frame(s)
    }

    pub fn as_clip(&self) -> &VideoClip {
        &self.features
    }

    fn source(&self) -> MixSource<'_> {
        MixSource {
            id: &self.id,
            clip: &self.features,
            label: &self.label,
        }
    }
}

fn check_compatible(a: &FeatureSequence, b: &FeatureSequence) -> Result<()> {
    if a.features.shape() != b.features.shape() {
        return Err(Error::ShapeMismatch {
            field: "feature sequence",
            left: format!("{}x{}", b.segments(), b.dim()),
            right: format!("{}x{}", a.segments(), a.dim()),
        });
    }
    Ok(())
}

/// Replaces the segment rows `[cut.t1, cut.t2)` of `a` with those of `b`.
pub fn featmix_at(
    a: &FeatureSequence,
    b: &FeatureSequence,
    lambda: Ratio,
    cut: CuboidCoords,
    alpha: f64,
    rng: RngStream,
) -> Result<(FeatureSequence, MixRecipe)> {
    check_compatible(a, b)?;
    let (features, label, recipe) = mix_with_cuboids(
        a.source(),
        &[(b.source(), lambda, vec![cut])],
        MixVariant::Temporal,
        alpha,
        rng,
    )?;
    Ok((
        FeatureSequence {
            id: a.id.clone(),
            features,
            label,
        },
        recipe,
    ))
}

/// Temporal mixing on features: one contiguous segment interval of length
/// `S * lambda` (clamped) is taken from `b`; labels follow the retained
/// fraction.
pub fn temporal_featmix(
    a: &FeatureSequence,
    b: &FeatureSequence,
    alpha: f64,
    rng: RngStream,
) -> Result<(FeatureSequence, MixRecipe)> {
    check_compatible(a, b)?;
    let mut gen = rng.generator();
    let lambda = sample_lambda(alpha, &mut gen)?;
    let cut = sample_temporal_cuboid(lambda, Extent::new(a.segments(), 1, 1), &mut gen);
    featmix_at(a, b, lambda, cut, alpha, rng)
}

/// Zeroes each of `n_bins` contiguous segment bins independently with
/// probability `hide_prob`. Returns the hidden flag of every bin.
pub fn hide_and_seek(
    f: &FeatureSequence,
    n_bins: usize,
    hide_prob: Ratio,
    rng: RngStream,
) -> Result<(FeatureSequence, Vec<bool>)> {
    if n_bins == 0 || n_bins > f.segments() {
        return Err(Error::TooManyBins {
            bins: n_bins,
            segments: f.segments(),
        });
    }
    let mut gen = rng.generator();
    let dim = f.dim();
    let mut data = f.data().to_vec();
    let mut hidden = Vec::with_capacity(n_bins);
    for (lo, hi) in bin_bounds(f.segments(), n_bins) {
        let hide = gen.random::<f64>() < hide_prob.get();
        if hide {
            data[lo * dim..hi * dim].fill(0.0);
        }
        hidden.push(hide);
    }
    let out = FeatureSequence::new(f.id.clone(), f.segments(), dim, data, f.label.clone())?;
    Ok((out, hidden))
}
