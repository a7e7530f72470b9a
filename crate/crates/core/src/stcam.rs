//! Spatio-temporal class activation maps: a channel contraction of a
//! `C x T x H x W` feature map with one class's weight vector, and a
//! renderer that turns the result into a viewable 1-channel clip.

use crate::error::{Error, Result};
use crate::sampler::Extent;
use crate::tensor::{Shape, VideoClip};

/// A channel-major `C x T x H x W` feature map.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    channels: usize,
    extent: Extent,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(channels: usize, extent: Extent, data: Vec<f64>) -> Result<Self> {
        if channels == 0 || extent.voxels() == 0 {
            return Err(Error::DimZero { field: "feature map" });
        }
        if data.len() != channels * extent.voxels() {
            return Err(Error::LengthMismatch {
                field: "feature map",
                expected: channels * extent.voxels(),
                actual: data.len(),
            });
        }
        Ok(Self {
            channels,
            extent,
            data,
        })
    }

    /// Transposes a channels-last clip (the VCT layout) into channel-major.
    pub fn from_clip(clip: &VideoClip) -> Result<Self> {
        let s = clip.shape();
        let extent = Extent::from(s);
        let n = extent.voxels();
        let mut data = vec![0.0; s.len()];
        for (v, voxel) in clip.data().chunks_exact(s.channels).enumerate() {
            for (c, &x) in voxel.iter().enumerate() {
                data[c * n + v] = f64::from(x);
            }
        }
        Self::new(s.channels, extent, data)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn extent(&self) -> Extent {
        self.extent
    }

    pub fn get(&self, c: usize, t: usize, h: usize, w: usize) -> f64 {
        let e = self.extent;
        self.data[((c * e.frames + t) * e.height + h) * e.width + w]
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.extent.voxels();
        &self.data[c * n..(c + 1) * n]
    }
}

/// A `T x H x W` class activation volume.
#[derive(Debug, Clone, PartialEq)]
pub struct StCam {
    pub extent: Extent,
    pub volume: Vec<f64>,
}

impl StCam {
    pub fn get(&self, t: usize, h: usize, w: usize) -> f64 {
        self.volume[(t * self.extent.height + h) * self.extent.width + w]
    }
}

/// `volume[t,h,w] = sum_c feature_map[c,t,h,w] * class_weight[c]`.
pub fn st_cam(feature_map: &FeatureMap, class_weight: &[f64]) -> Result<StCam> {
    if class_weight.len() != feature_map.channels {
        return Err(Error::DimMismatch {
            field: "class weight length",
            expected: feature_map.channels,
            actual: class_weight.len(),
        });
    }
    let mut volume = vec![0.0; feature_map.extent.voxels()];
    for (c, &wc) in class_weight.iter().enumerate() {
        for (acc, &x) in volume.iter_mut().zip(feature_map.channel(c)) {
            *acc += x * wc;
        }
    }
    Ok(StCam {
        extent: feature_map.extent,
        volume,
    })
}

/// Min-max normalizes the volume to `[0, 1]` (a constant volume maps to
/// 0.5), then nearest-neighbor resamples it to `target` as a 1-channel clip.
pub fn render_cam(cam: &StCam, target: Extent) -> Result<VideoClip> {
    if target.voxels() == 0 {
        return Err(Error::DimZero { field: "render target" });
    }
    let lo = cam.volume.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = cam.volume.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let normalize = |v: f64| if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
    let src = cam.extent;
    let nearest = |d: usize, out: usize, input: usize| d * input / out;
    let shape = Shape::new(target.frames, target.height, target.width, 1);
    VideoClip::from_fn(shape, |t, h, w, _| {
        normalize(cam.get(
            nearest(t, target.frames, src.frames),
            nearest(h, target.height, src.height),
            nearest(w, target.width, src.width),
        )) as f32
    })
}
