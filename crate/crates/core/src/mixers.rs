//! Cuboid cut-and-paste mixing of clip pairs and batches, plus the
//! video-level Mixup and Cutout baselines.
//!
//! A mix starts from the primary clip and pastes one or more donor cuboids
//! over it, broadcasting across channels. Every pasted voxel is tracked in an
//! ownership map, and each source's label weight is the fraction of voxels it
//! owns in the output. For a single donor this is the usual rule: the primary
//! label is weighted by the fraction of voxels it keeps.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sampler::{
    sample_cuboids, sample_lambda, CuboidCoords, Extent, MixVariant, Ratio,
};
use crate::tensor::{BatchItem, ClipBatch, SoftLabel, VideoClip};

/// One labelled clip taking part in a mix.
#[derive(Debug, Clone, Copy)]
pub struct MixSource<'a> {
    pub id: &'a str,
    pub clip: &'a VideoClip,
    pub label: &'a SoftLabel,
}

impl<'a> From<&'a BatchItem> for MixSource<'a> {
    fn from(item: &'a BatchItem) -> Self {
        Self {
            id: &item.id,
            clip: &item.clip,
            label: &item.label,
        }
    }
}

/// One donor pasted over the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Paste {
    pub donor_id: String,
    pub lambda_sampled: Ratio,
    /// A single cuboid, or one cuboid per frame for per-frame mixing.
    pub cuboids: Vec<CuboidCoords>,
}

/// Full provenance of one mixed item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixRecipe {
    pub variant: MixVariant,
    pub alpha: f64,
    pub primary_id: String,
    pub pastes: Vec<Paste>,
    /// Fraction of output voxels still owned by the primary clip.
    pub keep_fraction: Ratio,
    /// Fraction of output voxels owned by any donor.
    pub cut_fraction: Ratio,
    /// Surviving voxel fraction of each source, primary first then donors in
    /// paste order.
    pub source_fractions: Vec<f64>,
    pub rng: RngStream,
}

impl MixRecipe {
    pub fn donor_ids(&self) -> Vec<&str> {
        self.pastes.iter().map(|p| p.donor_id.as_str()).collect()
    }
}

pub(crate) fn check_same_shape(a: &VideoClip, b: &VideoClip) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            field: "donor clip",
            left: b.shape().to_string(),
            right: a.shape().to_string(),
        });
    }
    Ok(())
}

fn check_same_classes(a: &SoftLabel, b: &SoftLabel) -> Result<()> {
    if a.classes() != b.classes() {
        return Err(Error::LabelDimMismatch {
            left: b.classes(),
            right: a.classes(),
        });
    }
    Ok(())
}

/// Output of a paste sequence: the mixed clip and, per source, how many
/// voxels it owns.
#[derive(Debug, Clone)]
pub struct PasteResult {
    pub clip: VideoClip,
    pub owner_counts: Vec<usize>,
}

/// Copies each donor's cuboids over the primary, in order. Later pastes
/// overwrite earlier ones.
pub fn paste_cuboids(
    primary: &VideoClip,
    donors: &[&VideoClip],
    cuboids: &[Vec<CuboidCoords>],
) -> Result<PasteResult> {
    assert_eq!(donors.len(), cuboids.len(), "one cuboid list per donor");
    let shape = primary.shape();
    let extent = Extent::from(shape);
    let mut data = primary.data().to_vec();
    let mut owner = vec![0u8; extent.voxels()];
    for (k, (donor, boxes)) in donors.iter().zip(cuboids).enumerate() {
        check_same_shape(primary, donor)?;
        let src = donor.data();
        for c in boxes {
            c.validate(extent)?;
            for t in c.t1..c.t2 {
                for h in c.h1..c.h2 {
                    let row = (t * extent.height + h) * extent.width;
                    owner[row + c.w1..row + c.w2].fill(k as u8 + 1);
                    let lo = shape.offset(t, h, c.w1, 0);
                    let hi = shape.offset(t, h, c.w2, 0);
                    data[lo..hi].copy_from_slice(&src[lo..hi]);
                }
            }
        }
    }
    let mut owner_counts = vec![0usize; donors.len() + 1];
    for &o in &owner {
        owner_counts[usize::from(o)] += 1;
    }
    Ok(PasteResult {
        clip: VideoClip::from_parts_unchecked(shape, data),
        owner_counts,
    })
}

/// Mixes fixed donor cuboids into the primary and weights labels by voxel
/// ownership. All randomness has already been resolved.
pub fn mix_with_cuboids(
    primary: MixSource<'_>,
    donors: &[(MixSource<'_>, Ratio, Vec<CuboidCoords>)],
    variant: MixVariant,
    alpha: f64,
    rng: RngStream,
) -> Result<(VideoClip, SoftLabel, MixRecipe)> {
    for (d, _, _) in donors {
        check_same_shape(primary.clip, d.clip)?;
        check_same_classes(primary.label, d.label)?;
    }
    let clips: Vec<&VideoClip> = donors.iter().map(|(d, _, _)| d.clip).collect();
    let boxes: Vec<Vec<CuboidCoords>> = donors.iter().map(|(_, _, c)| c.clone()).collect();
    let pasted = paste_cuboids(primary.clip, &clips, &boxes)?;

    let total = primary.clip.shape().voxels() as f64;
    let fractions: Vec<f64> = pasted
        .owner_counts
        .iter()
        .map(|&n| n as f64 / total)
        .collect();
    let parts: Vec<(f64, &SoftLabel)> = std::iter::once(primary.label)
        .chain(donors.iter().map(|(d, _, _)| d.label))
        .zip(&fractions)
        .map(|(l, &f)| (f, l))
        .collect();
    let label = SoftLabel::mix(&parts)?;

    let recipe = MixRecipe {
        variant,
        alpha,
        primary_id: primary.id.to_owned(),
        pastes: donors
            .iter()
            .map(|(d, lambda, cuboids)| Paste {
                donor_id: d.id.to_owned(),
                lambda_sampled: *lambda,
                cuboids: cuboids.clone(),
            })
            .collect(),
        keep_fraction: Ratio::named("keep fraction", fractions[0])?,
        cut_fraction: Ratio::named(
            "cut fraction",
            (pasted.owner_counts[1..].iter().sum::<usize>()) as f64 / total,
        )?,
        source_fractions: fractions,
        rng,
    };
    Ok((pasted.clip, label, recipe))
}

/// Samples one `(lambda, cuboids)` paste per donor from `rng`, in order.
fn sample_pastes<R: Rng + ?Sized>(
    n: usize,
    variant: MixVariant,
    alpha: f64,
    extent: Extent,
    rng: &mut R,
) -> Result<Vec<(Ratio, Vec<CuboidCoords>)>> {
    (0..n)
        .map(|_| {
            let lambda = sample_lambda(alpha, rng)?;
            Ok((lambda, sample_cuboids(variant, lambda, extent, rng)))
        })
        .collect()
}

/// Mixes `donors` into `primary` with fresh draws from `rng`: per donor one
/// ratio then its cuboid centers.
pub fn videomix_multi(
    primary: MixSource<'_>,
    donors: &[MixSource<'_>],
    variant: MixVariant,
    alpha: f64,
    rng: RngStream,
) -> Result<(VideoClip, SoftLabel, MixRecipe)> {
    for d in donors {
        check_same_shape(primary.clip, d.clip)?;
        check_same_classes(primary.label, d.label)?;
    }
    let extent = Extent::from(primary.clip.shape());
    let mut gen = rng.generator();
    let pastes = sample_pastes(donors.len(), variant, alpha, extent, &mut gen)?;
    let donors: Vec<_> = donors
        .iter()
        .zip(pastes)
        .map(|(d, (lambda, boxes))| (*d, lambda, boxes))
        .collect();
    mix_with_cuboids(primary, &donors, variant, alpha, rng)
}

/// Pastes a cuboid of `b` into `a`; the label is
/// `keep * y_a + (1 - keep) * y_b` with `keep` the fraction of voxels left
/// from `a`.
pub fn videomix_pair(
    a: MixSource<'_>,
    b: MixSource<'_>,
    variant: MixVariant,
    alpha: f64,
    rng: RngStream,
) -> Result<(VideoClip, SoftLabel, MixRecipe)> {
    videomix_multi(a, &[b], variant, alpha, rng)
}

/// Per-frame mixing: one shared ratio, an independent spatial box per frame.
pub fn perframe_videomix(
    a: MixSource<'_>,
    b: MixSource<'_>,
    alpha: f64,
    rng: RngStream,
) -> Result<(VideoClip, SoftLabel, MixRecipe)> {
    videomix_pair(a, b, MixVariant::PerFrame, alpha, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchMixConfig {
    pub variant: MixVariant,
    pub alpha: f64,
    /// Probability that a given batch is mixed at all.
    pub prob: f64,
    /// Sources per output item, primary included (2 to 4).
    pub n_videos: usize,
}

impl BatchMixConfig {
    pub fn new(variant: MixVariant, alpha: f64) -> Self {
        Self {
            variant,
            alpha,
            prob: 1.0,
            n_videos: 2,
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || self.alpha <= 0.0 {
            return Err(Error::NonPositiveAlpha { alpha: self.alpha });
        }
        Ratio::named("prob", self.prob)?;
        if !(2..=4).contains(&self.n_videos) {
            return Err(Error::UnsupportedVideoCount { n: self.n_videos });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedItem {
    pub id: String,
    pub clip: VideoClip,
    pub label: SoftLabel,
    pub recipe: Option<MixRecipe>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedBatch {
    pub items: Vec<MixedItem>,
}

impl MixedBatch {
    fn passthrough(batch: &ClipBatch) -> Self {
        Self {
            items: batch
                .items()
                .iter()
                .map(|it| MixedItem {
                    id: it.id.clone(),
                    clip: it.clip.clone(),
                    label: it.label.clone(),
                    recipe: None,
                })
                .collect(),
        }
    }

    pub fn into_clip_batch(self) -> Result<ClipBatch> {
        ClipBatch::new(
            self.items
                .into_iter()
                .map(|m| BatchItem {
                    id: m.id,
                    clip: m.clip,
                    label: m.label,
                })
                .collect(),
        )
    }
}

/// Batch mixing with explicit pairings: item `i` receives donors
/// `perms[0][i], perms[1][i], ...`. Item `i` draws from
/// `rng.with_sample(i)`, so results do not depend on scheduling.
pub fn mix_batch_with_permutations(
    batch: &ClipBatch,
    perms: &[Vec<usize>],
    variant: MixVariant,
    alpha: f64,
    rng: RngStream,
) -> Result<MixedBatch> {
    for p in perms {
        if p.len() != batch.len() || p.iter().any(|&j| j >= batch.len()) {
            return Err(Error::DimMismatch {
                field: "pairing permutation",
                expected: batch.len(),
                actual: p.len(),
            });
        }
    }
    let items = batch.items();
    let mixed = (0..items.len())
        .into_par_iter()
        .map(|i| {
            let donors: Vec<MixSource<'_>> =
                perms.iter().map(|p| MixSource::from(&items[p[i]])).collect();
            let stream = rng.with_sample(i as u64).with_draw(0);
            let (clip, label, recipe) =
                videomix_multi(MixSource::from(&items[i]), &donors, variant, alpha, stream)?;
            Ok(MixedItem {
                id: items[i].id.clone(),
                clip,
                label,
                recipe: Some(recipe),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MixedBatch { items: mixed })
}

/// Mixes a batch. With probability `cfg.prob` (one draw per batch) every
/// item is mixed with donors chosen by `n_videos - 1` independent uniform
/// permutations of the batch; otherwise the batch passes through.
pub fn videomix_batch(batch: &ClipBatch, cfg: &BatchMixConfig, rng: RngStream) -> Result<MixedBatch> {
    cfg.validate()?;
    if cfg.prob > 0.0 && batch.len() < 2 {
        return Err(Error::BatchTooSmall { len: batch.len() });
    }
    let mut gen = rng.batch_level().generator();
    let apply = gen.random::<f64>() < cfg.prob;
    if !apply {
        return Ok(MixedBatch::passthrough(batch));
    }
    let perms: Vec<Vec<usize>> = (1..cfg.n_videos)
        .map(|_| {
            let mut p: Vec<usize> = (0..batch.len()).collect();
            p.shuffle(&mut gen);
            p
        })
        .collect();
    mix_batch_with_permutations(batch, &perms, cfg.variant, cfg.alpha, rng)
}

/// `b + lambda * (a - b)` voxel-wise; equal inputs come back unchanged.
pub fn mixup_with_lambda(
    a: MixSource<'_>,
    b: MixSource<'_>,
    lambda: Ratio,
) -> Result<(VideoClip, SoftLabel)> {
    check_same_shape(a.clip, b.clip)?;
    check_same_classes(a.label, b.label)?;
    let l = lambda.get();
    let data = a
        .clip
        .data()
        .iter()
        .zip(b.clip.data())
        .map(|(&xa, &xb)| {
            let (xa, xb) = (f64::from(xa), f64::from(xb));
            (xb + l * (xa - xb)) as f32
        })
        .collect();
    let label = SoftLabel::mix(&[(l, a.label), (1.0 - l, b.label)])?;
    Ok((VideoClip::from_parts_unchecked(a.clip.shape(), data), label))
}

/// Global blend of two clips with `lambda ~ Beta(alpha, alpha)`.
pub fn mixup_video(
    a: MixSource<'_>,
    b: MixSource<'_>,
    alpha: f64,
    rng: RngStream,
) -> Result<(VideoClip, SoftLabel, Ratio)> {
    let lambda = sample_lambda(alpha, &mut rng.generator())?;
    let (clip, label) = mixup_with_lambda(a, b, lambda)?;
    Ok((clip, label, lambda))
}

/// Zeroes a `side x side` square centered at `(center_h, center_w)` and
/// clamped to the frame, in every frame and channel.
pub fn cutout_at(
    clip: &VideoClip,
    side: usize,
    center_h: f64,
    center_w: f64,
) -> Result<(VideoClip, CuboidCoords)> {
    let s = clip.shape();
    if side > s.height.min(s.width) {
        return Err(Error::MaskTooLarge {
            side,
            height: s.height,
            width: s.width,
        });
    }
    let clamp = |v: f64, ext: usize| v.round().clamp(0.0, ext as f64) as usize;
    let half = side as f64 / 2.0;
    let coords = CuboidCoords::new(
        0,
        s.frames,
        clamp(center_h - half, s.height),
        clamp(center_h + half, s.height),
        clamp(center_w - half, s.width),
        clamp(center_w + half, s.width),
    );
    let mut data = clip.data().to_vec();
    for t in 0..s.frames {
        for h in coords.h1..coords.h2 {
            data[s.offset(t, h, coords.w1, 0)..s.offset(t, h, coords.w2, 0)].fill(0.0);
        }
    }
    Ok((VideoClip::from_parts_unchecked(s, data), coords))
}

/// Cutout with a uniformly drawn center. Labels are not touched.
pub fn cutout_video(clip: &VideoClip, side: usize, rng: RngStream) -> Result<(VideoClip, CuboidCoords)> {
    let s = clip.shape();
    let mut gen = rng.generator();
    let center_w = gen.random::<f64>() * s.width as f64;
    let center_h = gen.random::<f64>() * s.height as f64;
    cutout_at(clip, side, center_h, center_w)
}
