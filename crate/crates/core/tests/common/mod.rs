#![allow(dead_code)]

use std::io::Write;

use rand::Rng;
use videomix::{Shape, SoftLabel, VideoClip};

/// Clip with values on the 1/255 grid, so every voxel is finite and >= 0.
pub fn grid_clip<R: Rng>(shape: Shape, rng: &mut R) -> VideoClip {
    let data = (0..shape.len()).map(|_| f32::from(rng.random::<u8>()) / 255.0).collect();
    VideoClip::new(shape, data).unwrap()
}

pub fn random_shape<R: Rng>(rng: &mut R, max_t: usize, max_hw: usize, max_c: usize) -> Shape {
    Shape::new(
        rng.random_range(1..=max_t),
        rng.random_range(1..=max_hw),
        rng.random_range(1..=max_hw),
        rng.random_range(1..=max_c),
    )
}

/// Either a one-hot or a normalized random mass vector.
pub fn random_label<R: Rng>(rng: &mut R, classes: usize) -> SoftLabel {
    if rng.random::<bool>() {
        return SoftLabel::one_hot(rng.random_range(0..classes), classes).unwrap();
    }
    let raw: Vec<f64> = (0..classes).map(|_| rng.random::<f64>() + 1e-3).collect();
    let sum: f64 = raw.iter().sum();
    let mut masses: Vec<f64> = raw.iter().map(|v| v / sum).collect();
    let rest: f64 = masses[1..].iter().sum();
    masses[0] = 1.0 - rest;
    videomix::tensor::validate_label(&masses).unwrap()
}

/// Writes straight to the process stdout so the line survives capture.
pub fn report(criterion: u32, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("acceptance criterion {criterion:>2}: {verdict} | {detail}\n");
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
}
