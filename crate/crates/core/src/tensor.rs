//! Dense video tensors, soft labels and homogeneous clip batches.
//!
//! Voxels are stored row-major in frame, row, column, channel order, so the
//! channels of one voxel are contiguous and a whole frame is one slice.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the total mass of a [`SoftLabel`].
pub const LABEL_MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl Shape {
    pub const fn new(frames: usize, height: usize, width: usize, channels: usize) -> Self {
        Self {
            frames,
            height,
            width,
            channels,
        }
    }

    pub fn len(&self) -> usize {
        self.frames * self.height * self.width * self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of spatio-temporal positions, ignoring channels.
    pub fn voxels(&self) -> usize {
        self.frames * self.height * self.width
    }

    pub fn frame_len(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub fn offset(&self, t: usize, h: usize, w: usize, c: usize) -> usize {
        ((t * self.height + h) * self.width + w) * self.channels + c
    }

    pub(crate) fn check_nonzero(&self) -> Result<()> {
        for (field, v) in [
            ("frames", self.frames),
            ("height", self.height),
            ("width", self.width),
            ("channels", self.channels),
        ] {
            if v == 0 {
                return Err(Error::DimZero { field });
            }
        }
        Ok(())
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}x{}x{}x{}",
            self.frames, self.height, self.width, self.channels
        )
    }
}

/// A dense `T x H x W x C` clip. Pixel clips hold values in `[0, 1]`;
/// feature tensors may hold any finite value.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoClip {
    shape: Shape,
    data: Vec<f32>,
}

impl VideoClip {
    /// Builds a clip holding arbitrary finite values.
    pub fn new(shape: Shape, data: Vec<f32>) -> Result<Self> {
        shape.check_nonzero()?;
        if data.len() != shape.len() {
            return Err(Error::LengthMismatch {
                field: "clip data",
                expected: shape.len(),
                actual: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { field: "clip data" });
        }
        Ok(Self { shape, data })
    }

    /// Builds a pixel clip, rejecting anything outside `[0, 1]`.
    pub fn pixels(shape: Shape, data: Vec<f32>) -> Result<Self> {
        let clip = Self::new(shape, data)?;
        clip.check_unit_range()?;
        Ok(clip)
    }

    pub fn filled(shape: Shape, value: f32) -> Result<Self> {
        Self::new(shape, vec![value; shape.len()])
    }

    pub fn zeros(shape: Shape) -> Result<Self> {
        Self::filled(shape, 0.0)
    }

    pub fn from_fn(
        shape: Shape,
        mut f: impl FnMut(usize, usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(shape.len());
        for t in 0..shape.frames {
            for h in 0..shape.height {
                for w in 0..shape.width {
                    for c in 0..shape.channels {
                        data.push(f(t, h, w, c));
                    }
                }
            }
        }
        Self::new(shape, data)
    }

    /// Crate-internal constructor for buffers whose shape and contents are
    /// already known to be valid.
    pub(crate) fn from_parts_unchecked(shape: Shape, data: Vec<f32>) -> Self {
        debug_assert_eq!(shape.len(), data.len());
        Self { shape, data }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn get(&self, t: usize, h: usize, w: usize, c: usize) -> f32 {
        self.data[self.shape.offset(t, h, w, c)]
    }

    /// All channels of the voxel at `(t, h, w)`.
    pub fn voxel(&self, t: usize, h: usize, w: usize) -> &[f32] {
        let start = self.shape.offset(t, h, w, 0);
        &self.data[start..start + self.shape.channels]
    }

    pub fn frame(&self, t: usize) -> &[f32] {
        let n = self.shape.frame_len();
        &self.data[t * n..(t + 1) * n]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| f64::from(v)).sum::<f64>() / self.data.len() as f64
    }

    pub fn check_unit_range(&self) -> Result<()> {
        match self
            .data
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            Some((index, &value)) => Err(Error::ValueOutOfRange { index, value }),
            None => Ok(()),
        }
    }

    /// Gathers the given frame indices (in order) into a new clip.
    pub fn select_frames(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::DimZero { field: "frames" });
        }
        let n = self.shape.frame_len();
        let mut data = Vec::with_capacity(indices.len() * n);
        for &t in indices {
            if t >= self.shape.frames {
                return Err(Error::CoordsOutOfRange {
                    axis: "t",
                    lo: t,
                    hi: t + 1,
                    extent: self.shape.frames,
                });
            }
            data.extend_from_slice(self.frame(t));
        }
        let shape = Shape {
            frames: indices.len(),
            ..self.shape
        };
        Ok(Self::from_parts_unchecked(shape, data))
    }

    /// Spatial crop `[top, top+height) x [left, left+width)` of every frame.
    pub fn crop(&self, top: usize, left: usize, height: usize, width: usize) -> Result<Self> {
        let s = self.shape;
        if height == 0 || top + height > s.height {
            return Err(Error::CoordsOutOfRange {
                axis: "h",
                lo: top,
                hi: top + height,
                extent: s.height,
            });
        }
        if width == 0 || left + width > s.width {
            return Err(Error::CoordsOutOfRange {
                axis: "w",
                lo: left,
                hi: left + width,
                extent: s.width,
            });
        }
        let out = Shape::new(s.frames, height, width, s.channels);
        let mut data = Vec::with_capacity(out.len());
        for t in 0..s.frames {
            for h in top..top + height {
                let start = s.offset(t, h, left, 0);
                data.extend_from_slice(&self.data[start..start + width * s.channels]);
            }
        }
        Ok(Self::from_parts_unchecked(out, data))
    }

    /// Mirrors every frame left-to-right.
    pub fn hflip(&self) -> Self {
        let s = self.shape;
        let mut data = Vec::with_capacity(s.len());
        for t in 0..s.frames {
            for h in 0..s.height {
                for w in (0..s.width).rev() {
                    data.extend_from_slice(self.voxel(t, h, w));
                }
            }
        }
        Self::from_parts_unchecked(s, data)
    }
}

/// A nonnegative class-mass vector summing to one.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SoftLabel(Vec<f64>);

impl SoftLabel {
    pub fn one_hot(class: usize, classes: usize) -> Result<Self> {
        if classes < 2 {
            return Err(Error::EmptyLabel { len: classes });
        }
        if class >= classes {
            return Err(Error::DimMismatch {
                field: "class index",
                expected: classes,
                actual: class,
            });
        }
        let mut m = vec![0.0; classes];
        m[class] = 1.0;
        Ok(Self(m))
    }

    pub fn masses(&self) -> &[f64] {
        &self.0
    }

    pub fn classes(&self) -> usize {
        self.0.len()
    }

    /// Index of the largest mass; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax(&self.0)
    }

    /// Convex combination `sum_i weights[i] * labels[i]`. Weights must be
    /// nonnegative and sum to one; the result is validated.
    pub fn mix(parts: &[(f64, &SoftLabel)]) -> Result<Self> {
        let k = parts.first().map(|(_, l)| l.classes()).unwrap_or(0);
        let mut out = vec![0.0; k];
        for (weight, label) in parts {
            if label.classes() != k {
                return Err(Error::LabelDimMismatch {
                    left: label.classes(),
                    right: k,
                });
            }
            for (o, m) in out.iter_mut().zip(label.masses()) {
                *o += weight * m;
            }
        }
        validate_label(&out)
    }
}

/// Checks a raw mass vector without renormalizing it.
pub fn validate_label(raw: &[f64]) -> Result<SoftLabel> {
    if raw.len() < 2 {
        return Err(Error::EmptyLabel { len: raw.len() });
    }
    if let Some((index, &value)) = raw.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NegativeMass { index, value });
    }
    if let Some((index, &value)) = raw.iter().enumerate().find(|(_, &v)| v < 0.0) {
        return Err(Error::NegativeMass { index, value });
    }
    let sum: f64 = raw.iter().sum();
    if (sum - 1.0).abs() > LABEL_MASS_TOLERANCE {
        return Err(Error::MassNotUnit { sum });
    }
    Ok(SoftLabel(raw.to_vec()))
}

impl<'de> Deserialize<'de> for SoftLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<f64>::deserialize(d)?;
        validate_label(&raw).map_err(serde::de::Error::custom)
    }
}

/// Lowest index of the maximum.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchItem {
    pub id: String,
    pub clip: VideoClip,
    pub label: SoftLabel,
}

/// A nonempty batch whose clips share one shape and whose labels share one
/// class count.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipBatch {
    items: Vec<BatchItem>,
}

impl ClipBatch {
    pub fn new(items: Vec<BatchItem>) -> Result<Self> {
        let first = items.first().ok_or(Error::EmptyBatch)?;
        let (shape, classes) = (first.clip.shape(), first.label.classes());
        for item in &items[1..] {
            if item.clip.shape() != shape {
                return Err(Error::ShapeMismatch {
                    field: "batch clip",
                    left: item.clip.shape().to_string(),
                    right: shape.to_string(),
                });
            }
            if item.label.classes() != classes {
                return Err(Error::LabelDimMismatch {
                    left: item.label.classes(),
                    right: classes,
                });
            }
        }
        Ok(Self { items })
    }

    /// Builds a batch from flat contiguous buffers: `data` holds `N` clips of
    /// `shape` back to back, `labels` holds `N` rows of `classes` masses.
    pub fn from_buffers(
        ids: Vec<String>,
        shape: Shape,
        data: &[f32],
        classes: usize,
        labels: &[f64],
    ) -> Result<Self> {
        let n = ids.len();
        if data.len() != n * shape.len() {
            return Err(Error::LengthMismatch {
                field: "batch data",
                expected: n * shape.len(),
                actual: data.len(),
            });
        }
        if labels.len() != n * classes {
            return Err(Error::LengthMismatch {
                field: "batch labels",
                expected: n * classes,
                actual: labels.len(),
            });
        }
        let items = ids
            .into_iter()
            .enumerate()
            .map(|(i, id)| {
                let clip =
                    VideoClip::new(shape, data[i * shape.len()..(i + 1) * shape.len()].to_vec())?;
                let label = validate_label(&labels[i * classes..(i + 1) * classes])?;
                Ok(BatchItem { id, clip, label })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(items)
    }

    pub fn items(&self) -> &[BatchItem] {
        &self.items
    }

    pub fn into_items(self) -> Vec<BatchItem> {
        self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn shape(&self) -> Shape {
        self.items[0].clip.shape()
    }

    pub fn classes(&self) -> usize {
        self.items[0].label.classes()
    }

    /// Sub-batch of the given item positions, in order.
    pub fn select(&self, positions: &[usize]) -> Result<Self> {
        Self::new(positions.iter().map(|&i| self.items[i].clone()).collect())
    }
}
