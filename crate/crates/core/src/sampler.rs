//! Mix-ratio and cuboid sampling for every mixing variant.
//!
//! A cuboid is a half-open box `[t1,t2) x [h1,h2) x [w1,w2)`. Each sampled
//! axis gets a real-valued center drawn uniformly over the axis and a side
//! length derived from the mix ratio; endpoints are rounded to the nearest
//! integer and clamped into `[0, extent]`. Clamping changes the voxel count,
//! so the fraction that actually gets mixed is always recomputed from the
//! integer coordinates (see [`exact_fraction`]).

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Shape;

/// A real number in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Ratio(f64);

impl Ratio {
    pub const ZERO: Ratio = Ratio(0.0);
    pub const ONE: Ratio = Ratio(1.0);

    pub fn new(value: f64) -> Result<Self> {
        Self::named("ratio", value)
    }

    pub(crate) fn named(field: &'static str, value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::RatioOutOfRange { field, value })
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    /// `1 - self`.
    pub fn complement(self) -> Self {
        Self(1.0 - self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MixVariant {
    /// Spatial box pasted across every frame.
    Spatial,
    /// Frame interval pasted at full resolution.
    Temporal,
    /// Free 3D box.
    SpatioTemporal,
    /// Independent spatial box per frame with one shared ratio.
    PerFrame,
}

impl MixVariant {
    pub const ALL: [MixVariant; 4] = [
        Self::Spatial,
        Self::Temporal,
        Self::SpatioTemporal,
        Self::PerFrame,
    ];

    pub fn cli_name(self) -> &'static str {
        match self {
            Self::Spatial => "spatial",
            Self::Temporal => "temporal",
            Self::SpatioTemporal => "st",
            Self::PerFrame => "perframe",
        }
    }
}

impl fmt::Display for MixVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.cli_name())
    }
}

impl FromStr for MixVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "spatial" => Ok(Self::Spatial),
            "temporal" => Ok(Self::Temporal),
            "st" | "spatio-temporal" | "spatiotemporal" => Ok(Self::SpatioTemporal),
            "perframe" | "per-frame" => Ok(Self::PerFrame),
            other => Err(format!(
                "unknown variant {other:?} (expected spatial, temporal, st or perframe)"
            )),
        }
    }
}

/// The spatio-temporal extent a cuboid lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Extent {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
}

impl Extent {
    pub const fn new(frames: usize, height: usize, width: usize) -> Self {
        Self {
            frames,
            height,
            width,
        }
    }

    pub fn voxels(&self) -> usize {
        self.frames * self.height * self.width
    }
}

impl From<Shape> for Extent {
    fn from(s: Shape) -> Self {
        Self::new(s.frames, s.height, s.width)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CuboidCoords {
    pub t1: usize,
    pub t2: usize,
    pub h1: usize,
    pub h2: usize,
    pub w1: usize,
    pub w2: usize,
}

impl CuboidCoords {
    pub const fn new(t1: usize, t2: usize, h1: usize, h2: usize, w1: usize, w2: usize) -> Self {
        Self {
            t1,
            t2,
            h1,
            h2,
            w1,
            w2,
        }
    }

    pub fn full(extent: Extent) -> Self {
        Self::new(0, extent.frames, 0, extent.height, 0, extent.width)
    }

    pub fn empty() -> Self {
        Self::new(0, 0, 0, 0, 0, 0)
    }

    pub fn volume(&self) -> usize {
        (self.t2 - self.t1) * (self.h2 - self.h1) * (self.w2 - self.w1)
    }

    pub fn contains(&self, t: usize, h: usize, w: usize) -> bool {
        (self.t1..self.t2).contains(&t)
            && (self.h1..self.h2).contains(&h)
            && (self.w1..self.w2).contains(&w)
    }

    pub fn validate(&self, extent: Extent) -> Result<()> {
        for (axis, lo, hi, ext) in [
            ("t", self.t1, self.t2, extent.frames),
            ("h", self.h1, self.h2, extent.height),
            ("w", self.w1, self.w2, extent.width),
        ] {
            if lo > hi || hi > ext {
                return Err(Error::CoordsOutOfRange {
                    axis,
                    lo,
                    hi,
                    extent: ext,
                });
            }
        }
        Ok(())
    }
}

/// Draws `lambda ~ Beta(alpha, alpha)` as `X / (X + Y)` with
/// `X, Y ~ Gamma(alpha, 1)`.
pub fn sample_lambda<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> Result<Ratio> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::NonPositiveAlpha { alpha });
    }
    let gamma = Gamma::new(alpha, 1.0).map_err(|_| Error::NonPositiveAlpha { alpha })?;
    loop {
        let x: f64 = gamma.sample(rng);
        let y: f64 = gamma.sample(rng);
        let sum = x + y;
        // both variates can underflow to zero for very small alpha
        if sum > 0.0 && sum.is_finite() {
            return Ok(Ratio(x / sum));
        }
    }
}

/// Rounded, clamped endpoints of an interval of real length `side`
/// centered at `center` on an axis of length `extent`.
fn interval(center: f64, side: f64, extent: usize) -> (usize, usize) {
    let clamp = |v: f64| v.round().clamp(0.0, extent as f64) as usize;
    (clamp(center - side / 2.0), clamp(center + side / 2.0))
}

fn uniform_center<R: Rng + ?Sized>(extent: usize, rng: &mut R) -> f64 {
    rng.random::<f64>() * extent as f64
}

/// Spatial box with area `lambda * H * W` (before clamping) centered at
/// `(center_h, center_w)`, spanning every frame.
pub fn spatial_cuboid_at(lambda: Ratio, extent: Extent, center_h: f64, center_w: f64) -> CuboidCoords {
    let root = lambda.get().sqrt();
    let (h1, h2) = interval(center_h, extent.height as f64 * root, extent.height);
    let (w1, w2) = interval(center_w, extent.width as f64 * root, extent.width);
    CuboidCoords::new(0, extent.frames, h1, h2, w1, w2)
}

pub fn sample_spatial_cuboid<R: Rng + ?Sized>(lambda: Ratio, extent: Extent, rng: &mut R) -> CuboidCoords {
    let center_w = uniform_center(extent.width, rng);
    let center_h = uniform_center(extent.height, rng);
    spatial_cuboid_at(lambda, extent, center_h, center_w)
}

/// Frame interval of length `lambda * T` (before clamping) at full
/// spatial extent.
pub fn temporal_cuboid_at(lambda: Ratio, extent: Extent, center_t: f64) -> CuboidCoords {
    let (t1, t2) = interval(center_t, extent.frames as f64 * lambda.get(), extent.frames);
    CuboidCoords::new(t1, t2, 0, extent.height, 0, extent.width)
}

pub fn sample_temporal_cuboid<R: Rng + ?Sized>(lambda: Ratio, extent: Extent, rng: &mut R) -> CuboidCoords {
    let center_t = uniform_center(extent.frames, rng);
    temporal_cuboid_at(lambda, extent, center_t)
}

/// Box whose every side is `extent * cbrt(lambda)`, so the unclamped volume
/// fraction is `lambda`.
pub fn st_cuboid_at(lambda: Ratio, extent: Extent, center: (f64, f64, f64)) -> CuboidCoords {
    let root = lambda.get().cbrt();
    let (t1, t2) = interval(center.0, extent.frames as f64 * root, extent.frames);
    let (h1, h2) = interval(center.1, extent.height as f64 * root, extent.height);
    let (w1, w2) = interval(center.2, extent.width as f64 * root, extent.width);
    CuboidCoords::new(t1, t2, h1, h2, w1, w2)
}

pub fn sample_st_cuboid<R: Rng + ?Sized>(lambda: Ratio, extent: Extent, rng: &mut R) -> CuboidCoords {
    let center_w = uniform_center(extent.width, rng);
    let center_h = uniform_center(extent.height, rng);
    let center_t = uniform_center(extent.frames, rng);
    st_cuboid_at(lambda, extent, (center_t, center_h, center_w))
}

/// One spatial box per frame, each with its own center and the shared
/// target area `lambda * H * W`. Box `t` spans exactly frame `t`.
pub fn sample_perframe_cuboids<R: Rng + ?Sized>(
    lambda: Ratio,
    extent: Extent,
    rng: &mut R,
) -> Vec<CuboidCoords> {
    (0..extent.frames)
        .map(|t| {
            let c = sample_spatial_cuboid(lambda, extent, rng);
            CuboidCoords { t1: t, t2: t + 1, ..c }
        })
        .collect()
}

/// Samples the paste region(s) for one mix. Every variant but
/// [`MixVariant::PerFrame`] yields a single cuboid.
pub fn sample_cuboids<R: Rng + ?Sized>(
    variant: MixVariant,
    lambda: Ratio,
    extent: Extent,
    rng: &mut R,
) -> Vec<CuboidCoords> {
    match variant {
        MixVariant::Spatial => vec![sample_spatial_cuboid(lambda, extent, rng)],
        MixVariant::Temporal => vec![sample_temporal_cuboid(lambda, extent, rng)],
        MixVariant::SpatioTemporal => vec![sample_st_cuboid(lambda, extent, rng)],
        MixVariant::PerFrame => sample_perframe_cuboids(lambda, extent, rng),
    }
}

/// Fraction of the extent covered by the cuboid, from integer voxel counts.
pub fn exact_fraction(coords: &CuboidCoords, extent: Extent) -> Result<Ratio> {
    coords.validate(extent)?;
    Ok(Ratio(coords.volume() as f64 / extent.voxels() as f64))
}

/// A binary `T x H x W` membership tensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    extent: Extent,
    data: Vec<u8>,
}

impl Mask {
    pub fn extent(&self) -> Extent {
        self.extent
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, t: usize, h: usize, w: usize) -> bool {
        self.data[(t * self.extent.height + h) * self.extent.width + w] != 0
    }

    pub fn count(&self) -> usize {
        self.data.iter().map(|&b| usize::from(b)).sum()
    }

    pub fn mean(&self) -> f64 {
        self.count() as f64 / self.data.len() as f64
    }

    /// Union of several cuboids.
    pub fn from_cuboids(cuboids: &[CuboidCoords], extent: Extent) -> Result<Self> {
        let mut data = vec![0u8; extent.voxels()];
        for c in cuboids {
            c.validate(extent)?;
            for t in c.t1..c.t2 {
                for h in c.h1..c.h2 {
                    let row = (t * extent.height + h) * extent.width;
                    data[row + c.w1..row + c.w2].fill(1);
                }
            }
        }
        Ok(Self { extent, data })
    }
}

/// `M[t,h,w] = 1` inside the cuboid, `0` outside.
pub fn build_mask(coords: &CuboidCoords, extent: Extent) -> Result<Mask> {
    Mask::from_cuboids(std::slice::from_ref(coords), extent)
}
