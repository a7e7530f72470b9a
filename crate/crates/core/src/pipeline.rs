//! Training-clip sampling, evaluation views and the standard spatial
//! augmentations applied before mixing.
//!
//! Spatial parameters are drawn once per clip and applied to every frame.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::tensor::{Shape, VideoClip};

/// `frames` frames taken every `stride` frames from a `window`-frame span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClipSpec {
    pub window: usize,
    pub frames: usize,
    pub stride: usize,
}

impl ClipSpec {
    pub const DEFAULT_WINDOW: usize = 64;

    pub fn new(frames: usize, stride: usize) -> Self {
        Self {
            window: Self::DEFAULT_WINDOW,
            frames,
            stride,
        }
    }

    /// Every frame of a `frames`-long video, in order.
    pub fn dense(frames: usize) -> Self {
        Self {
            window: frames,
            frames,
            stride: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::DimZero { field: "window" });
        }
        if self.frames == 0 {
            return Err(Error::DimZero { field: "frames" });
        }
        if self.stride == 0 {
            return Err(Error::DimZero { field: "stride" });
        }
        let span = (self.frames - 1) * self.stride;
        if span >= self.window {
            return Err(Error::SpecInfeasible {
                span,
                window: self.window,
            });
        }
        Ok(())
    }

    /// Length of the (possibly looped) video the window slides over.
    fn looped_len(&self, video_frames: usize) -> usize {
        video_frames.max(self.window)
    }

    /// Source frame indices for a window starting at `start`. Videos shorter
    /// than the window are looped.
    pub fn indices(&self, video_frames: usize, start: usize) -> Vec<usize> {
        (0..self.frames)
            .map(|k| (start + k * self.stride) % video_frames)
            .collect()
    }
}

/// `n_temporal` windows times `n_spatial` square crops of side `crop`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewSpec {
    pub n_temporal: usize,
    pub n_spatial: usize,
    pub crop: usize,
}

impl ViewSpec {
    pub fn new(crop: usize) -> Self {
        Self {
            n_temporal: 10,
            n_spatial: 3,
            crop,
        }
    }
}

pub fn training_clip_at(video: &VideoClip, spec: &ClipSpec, start: usize) -> Result<VideoClip> {
    spec.validate()?;
    let limit = spec.looped_len(video.shape().frames) - spec.window;
    if start > limit {
        return Err(Error::CoordsOutOfRange {
            axis: "t",
            lo: start,
            hi: start + spec.window,
            extent: spec.looped_len(video.shape().frames),
        });
    }
    video.select_frames(&spec.indices(video.shape().frames, start))
}

/// Picks a window start uniformly, then takes every `stride`-th frame.
pub fn sample_training_clip(video: &VideoClip, spec: &ClipSpec, rng: RngStream) -> Result<VideoClip> {
    spec.validate()?;
    let limit = spec.looped_len(video.shape().frames) - spec.window;
    let start = rng.generator().random_range(0..=limit);
    training_clip_at(video, spec, start)
}

/// Splits `total` indices into `bins` contiguous half-open ranges whose
/// sizes differ by at most one; the first `total % bins` are the longer ones.
pub fn bin_bounds(total: usize, bins: usize) -> Vec<(usize, usize)> {
    let (base, extra) = (total / bins, total % bins);
    let mut start = 0;
    (0..bins)
        .map(|b| {
            let len = base + usize::from(b < extra);
            let r = (start, start + len);
            start += len;
            r
        })
        .collect()
}

/// One uniformly drawn frame index per bin.
pub fn jittered_bin_indices(total: usize, frames: usize, rng: RngStream) -> Result<Vec<usize>> {
    if frames == 0 {
        return Err(Error::DimZero { field: "frames" });
    }
    if total < frames {
        return Err(Error::TooFewFrames {
            available: total,
            requested: frames,
        });
    }
    let mut gen = rng.generator();
    Ok(bin_bounds(total, frames)
        .into_iter()
        .map(|(lo, hi)| gen.random_range(lo..hi))
        .collect())
}

pub fn jittered_bin_sample(video: &VideoClip, frames: usize, rng: RngStream) -> Result<VideoClip> {
    let idx = jittered_bin_indices(video.shape().frames, frames, rng)?;
    video.select_frames(&idx)
}

/// `n` offsets of a `size` window over `extent`, first at 0 and last flush
/// with the far edge; a single offset is centered.
pub fn even_offsets(extent: usize, size: usize, n: usize) -> Vec<usize> {
    let room = extent.saturating_sub(size) as f64;
    if n == 1 {
        return vec![(room / 2.0).round() as usize];
    }
    (0..n)
        .map(|k| (k as f64 * room / (n - 1) as f64).round() as usize)
        .collect()
}

/// Evaluation views in temporal-major order: for each evenly spaced window,
/// `n_spatial` square crops along the longer spatial side (width on ties),
/// centered on the shorter side.
pub fn multiview_crops(video: &VideoClip, clip: &ClipSpec, views: &ViewSpec) -> Result<Vec<VideoClip>> {
    clip.validate()?;
    let s = video.shape();
    if views.n_temporal == 0 || views.n_spatial == 0 || views.crop == 0 {
        return Err(Error::DimZero { field: "view count" });
    }
    if views.crop > s.height.min(s.width) {
        return Err(Error::CropTooLarge {
            crop: views.crop,
            height: s.height,
            width: s.width,
        });
    }
    let starts = even_offsets(clip.looped_len(s.frames), clip.window, views.n_temporal);
    let along_width = s.width >= s.height;
    let (long, short) = if along_width {
        (s.width, s.height)
    } else {
        (s.height, s.width)
    };
    let across = even_offsets(short, views.crop, 1)[0];
    let mut out = Vec::with_capacity(starts.len() * views.n_spatial);
    for start in starts {
        let window = training_clip_at(video, clip, start)?;
        for off in even_offsets(long, views.crop, views.n_spatial) {
            let (top, left) = if along_width { (across, off) } else { (off, across) };
            out.push(window.crop(top, left, views.crop, views.crop)?);
        }
    }
    Ok(out)
}

/// Bilinear resize of every frame with half-pixel sample centers.
pub fn resize_bilinear(clip: &VideoClip, out_h: usize, out_w: usize) -> Result<VideoClip> {
    let s = clip.shape();
    if out_h == 0 || out_w == 0 {
        return Err(Error::DimZero { field: "resize target" });
    }
    let taps = |out: usize, input: usize| -> Vec<(usize, usize, f64)> {
        let scale = input as f64 / out as f64;
        (0..out)
            .map(|d| {
                let src = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (input - 1) as f64);
                let lo = src.floor() as usize;
                let hi = (lo + 1).min(input - 1);
                (lo, hi, src - lo as f64)
            })
            .collect()
    };
    let (rows, cols) = (taps(out_h, s.height), taps(out_w, s.width));
    let out = Shape::new(s.frames, out_h, out_w, s.channels);
    let mut data = Vec::with_capacity(out.len());
    for t in 0..s.frames {
        for &(h0, h1, fy) in &rows {
            for &(w0, w1, fx) in &cols {
                for c in 0..s.channels {
                    let v = |h, w| f64::from(clip.get(t, h, w, c));
                    let top = v(h0, w0) * (1.0 - fx) + v(h0, w1) * fx;
                    let bottom = v(h1, w0) * (1.0 - fx) + v(h1, w1) * fx;
                    data.push((top * (1.0 - fy) + bottom * fy) as f32);
                }
            }
        }
    }
    VideoClip::new(out, data)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentSpec {
    /// Crop area as a fraction of the largest centered square, `(lo, hi)`.
    pub scale: (f64, f64),
    pub out_side: usize,
    pub flip: bool,
}

/// The per-clip parameters one [`standard_augment`] call drew.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentParams {
    pub scale: f64,
    pub top: usize,
    pub left: usize,
    pub side: usize,
    pub flipped: bool,
}

/// Random resized square crop plus optional horizontal mirror, drawn once
/// and applied to every frame.
pub fn standard_augment(
    clip: &VideoClip,
    spec: &AugmentSpec,
    rng: RngStream,
) -> Result<(VideoClip, AugmentParams)> {
    let (lo, hi) = spec.scale;
    if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
        return Err(Error::DegenerateScaleRange { lo, hi });
    }
    if spec.out_side == 0 {
        return Err(Error::DimZero { field: "out_side" });
    }
    let s = clip.shape();
    let mut gen = rng.generator();
    let scale = if lo == hi { lo } else { gen.random_range(lo..=hi) };
    let short = s.height.min(s.width);
    let side = ((scale.sqrt() * short as f64).round() as usize).clamp(1, short);
    let top = gen.random_range(0..=s.height - side);
    let left = gen.random_range(0..=s.width - side);
    let flipped = spec.flip && gen.random::<f64>() < 0.5;
    let cropped = clip.crop(top, left, side, side)?;
    let mut out = resize_bilinear(&cropped, spec.out_side, spec.out_side)?;
    if flipped {
        out = out.hflip();
    }
    Ok((
        out,
        AugmentParams {
            scale,
            top,
            left,
            side,
            flipped,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Each voxel stores its own frame index.
    fn frame_tagged(frames: usize) -> VideoClip {
        VideoClip::from_fn(Shape::new(frames, 2, 2, 1), |t, _, _, _| t as f32).unwrap()
    }

    fn frame_tags(clip: &VideoClip) -> Vec<usize> {
        (0..clip.shape().frames).map(|t| clip.frame(t)[0] as usize).collect()
    }

    #[test]
    fn training_clip_arithmetic() {
        let v = frame_tagged(300);
        let spec = ClipSpec::new(8, 8);
        let out = training_clip_at(&v, &spec, 100).unwrap();
        assert_eq!(frame_tags(&out), (0..8).map(|k| 100 + 8 * k).collect::<Vec<_>>());

        let v64 = frame_tagged(64);
        for seed in 0..20 {
            let out = sample_training_clip(&v64, &spec, RngStream::new(seed)).unwrap();
            assert_eq!(frame_tags(&out), vec![0, 8, 16, 24, 32, 40, 48, 56]);
        }
    }

    #[test]
    fn short_videos_loop() {
        let v = frame_tagged(40);
        let spec = ClipSpec::new(8, 8);
        // explicit concatenation oracle: the video repeated until it covers the window
        let looped: Vec<usize> = (0..2).flat_map(|_| 0..40).collect();
        let out = training_clip_at(&v, &spec, 0).unwrap();
        let expected: Vec<usize> = (0..8).map(|k| looped[8 * k]).collect();
        assert_eq!(frame_tags(&out), expected);
        assert_eq!(frame_tags(&out)[5..], [0, 8, 16]);
        assert!(training_clip_at(&v, &spec, 1).is_err());
    }

    #[test]
    fn infeasible_spec() {
        let v = frame_tagged(10);
        let spec = ClipSpec {
            window: 16,
            frames: 3,
            stride: 8,
        };
        assert!(matches!(
            sample_training_clip(&v, &spec, RngStream::new(0)),
            Err(Error::SpecInfeasible { span: 16, window: 16 })
        ));
    }

    #[test]
    fn bins() {
        assert_eq!(bin_bounds(10, 4), vec![(0, 3), (3, 6), (6, 8), (8, 10)]);
        assert_eq!(bin_bounds(32, 8)[3], (12, 16));
        for seed in 0..50 {
            let idx = jittered_bin_indices(32, 8, RngStream::new(seed)).unwrap();
            for (k, &i) in idx.iter().enumerate() {
                assert!((4 * k..4 * k + 4).contains(&i));
            }
            assert!(idx.windows(2).all(|w| w[0] < w[1]));
        }
        let v = frame_tagged(8);
        assert_eq!(jittered_bin_sample(&v, 8, RngStream::new(1)).unwrap(), v);
        assert!(matches!(
            jittered_bin_sample(&v, 9, RngStream::new(1)),
            Err(Error::TooFewFrames { .. })
        ));
    }

    #[test]
    fn view_offsets() {
        assert_eq!(even_offsets(320, 256, 3), vec![0, 32, 64]);
        let starts = even_offsets(300, 64, 10);
        let expected: Vec<usize> = (0..10).map(|k| (k as f64 * 236.0 / 9.0).round() as usize).collect();
        assert_eq!(starts, expected);
        assert_eq!(starts[..3], [0, 26, 52]);
        assert_eq!(starts[9], 236);
        assert_eq!(even_offsets(10, 4, 1), vec![3]);
    }

    #[test]
    fn multiview_layout() {
        let s = Shape::new(12, 4, 6, 1);
        let v = VideoClip::from_fn(s, |t, h, w, _| (t * 100 + h * 10 + w) as f32).unwrap();
        let clip = ClipSpec {
            window: 4,
            frames: 2,
            stride: 2,
        };
        let views = ViewSpec {
            n_temporal: 3,
            n_spatial: 2,
            crop: 4,
        };
        let out = multiview_crops(&v, &clip, &views).unwrap();
        assert_eq!(out.len(), 6);
        // temporal starts {0, 4, 8}, horizontal offsets {0, 2}
        assert_eq!(out[0].get(0, 0, 0, 0), 0.0);
        assert_eq!(out[1].get(0, 0, 0, 0), 2.0);
        assert_eq!(out[2].get(1, 0, 0, 0), 600.0);
        assert_eq!(out[5].get(1, 3, 3, 0), 1000.0 + 35.0);

        let ident = ViewSpec {
            n_temporal: 1,
            n_spatial: 1,
            crop: 4,
        };
        let square = VideoClip::from_fn(Shape::new(3, 4, 4, 2), |t, h, w, c| (t + h + w + c) as f32).unwrap();
        assert_eq!(
            multiview_crops(&square, &ClipSpec::dense(3), &ident).unwrap(),
            vec![square.clone()]
        );
        assert!(matches!(
            multiview_crops(&square, &ClipSpec::dense(3), &ViewSpec { crop: 5, ..ident }),
            Err(Error::CropTooLarge { .. })
        ));
    }

    #[test]
    fn resize_identity_and_upsample() {
        let clip = VideoClip::from_fn(Shape::new(2, 3, 5, 2), |t, h, w, c| (t + 2 * h + 3 * w + c) as f32 / 20.0)
            .unwrap();
        assert_eq!(resize_bilinear(&clip, 3, 5).unwrap(), clip);
        let up = resize_bilinear(&clip, 6, 10).unwrap();
        assert_eq!(up.shape(), Shape::new(2, 6, 10, 2));
        let lo = clip.data().iter().cloned().fold(f32::INFINITY, f32::min);
        let hi = clip.data().iter().cloned().fold(f32::NEG_INFINITY, f32::max);
        assert!(up.data().iter().all(|&v| v >= lo - 1e-6 && v <= hi + 1e-6));
    }

    #[test]
    fn augment_identity_and_errors() {
        let clip = VideoClip::from_fn(Shape::new(2, 8, 8, 3), |t, h, w, c| ((t + h * w + c) % 7) as f32 / 7.0)
            .unwrap();
        let spec = AugmentSpec {
            scale: (1.0, 1.0),
            out_side: 8,
            flip: false,
        };
        let (out, p) = standard_augment(&clip, &spec, RngStream::new(3)).unwrap();
        assert_eq!(out, clip);
        assert_eq!((p.top, p.left), (0, 0));
        for scale in [(0.0, 0.5), (0.6, 0.5), (0.5, 1.5)] {
            assert!(matches!(
                standard_augment(&clip, &AugmentSpec { scale, ..spec }, RngStream::new(0)),
                Err(Error::DegenerateScaleRange { .. })
            ));
        }
    }

    #[test]
    fn augment_is_constant_along_time() {
        // identical frames stay identical only if every frame got the same window
        let frame = VideoClip::from_fn(Shape::new(1, 16, 20, 2), |_, h, w, c| ((h * 31 + w * 7 + c) % 13) as f32 / 13.0)
            .unwrap();
        let clip = frame.select_frames(&[0; 6]).unwrap();
        let spec = AugmentSpec {
            scale: (0.2, 1.0),
            out_side: 12,
            flip: true,
        };
        let mut flips = 0;
        for seed in 0..100 {
            let (out, p) = standard_augment(&clip, &spec, RngStream::new(seed)).unwrap();
            flips += usize::from(p.flipped);
            for t in 1..6 {
                assert_eq!(out.frame(t), out.frame(0), "seed {seed}");
            }
            let single = standard_augment(&frame, &spec, RngStream::new(seed)).unwrap().0;
            assert_eq!(out.frame(0), single.frame(0));
        }
        assert!((20..80).contains(&flips));
    }
}
