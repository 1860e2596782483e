//! Hairline detection by an upward color scan from the nose.
//!
//! A reference color is sampled `start_offset` rows above the nose. Rows above
//! it are visited one at a time, moving up the nose column, until the
//! window-averaged color is farther than `threshold` (Euclidean RGB distance)
//! from the reference. That row is the hairline.
//!
//! The averaging window is `window` columns wide, centered on the nose column,
//! and `window` rows tall, spanning the visited row and the rows directly below
//! it (the part of the column already scanned). Pixels outside the image are
//! clamped to the nearest edge. With `window = 1` the scan compares single
//! pixels.

use crate::error::{Error, Result};
use crate::image::RasterImage;
use crate::landmarks::Point2D;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HairlineConfig {
    pub threshold: f64,
    pub window: usize,
    pub start_offset: usize,
}

impl Default for HairlineConfig {
    fn default() -> Self {
        Self {
            threshold: 60.0,
            window: 3,
            start_offset: 5,
        }
    }
}

impl HairlineConfig {
    fn check(&self) -> Result<()> {
        if !self.threshold.is_finite() || self.threshold < 0.0 {
            return Err(Error::invalid("threshold must be finite and >= 0"));
        }
        if self.window == 0 || self.window.is_multiple_of(2) {
            return Err(Error::invalid("window must be an odd integer >= 1"));
        }
        Ok(())
    }
}

pub fn detect_hairline(img: &RasterImage, nose: Point2D, cfg: &HairlineConfig) -> Result<Point2D> {
    cfg.check()?;
    if !nose.is_finite() {
        return Err(Error::invalid("nose point is not finite"));
    }
    let (col, row) = (nose.x.round(), nose.y.round());
    if col < 0.0 || row < 0.0 || col >= img.width() as f64 || row >= img.height() as f64 {
        return Err(Error::invalid(format!(
            "nose ({}, {}) lies outside the {}x{} image",
            nose.x,
            nose.y,
            img.width(),
            img.height()
        )));
    }
    let (col, row) = (col as usize, row as usize);
    let start = row.checked_sub(cfg.start_offset).ok_or_else(|| {
        Error::invalid(format!(
            "nose row {row} is less than start offset {}",
            cfg.start_offset
        ))
    })?;

    let reference = window_mean(img, col, start, cfg.window);
    for y in (0..start).rev() {
        let c = window_mean(img, col, y, cfg.window);
        if color_distance(&c, &reference) > cfg.threshold {
            return Ok(Point2D::new(nose.x, y as f64));
        }
    }
    Err(Error::NoHairlineFound { start_row: start })
}

pub fn color_distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

fn window_mean(img: &RasterImage, col: usize, row: usize, window: usize) -> [f64; 3] {
    let half = (window / 2) as isize;
    let clamp = |v: isize, hi: usize| v.clamp(0, hi as isize - 1) as usize;
    let mut acc = [0.0; 3];
    for dy in 0..window as isize {
        let y = clamp(row as isize + dy, img.height());
        for dx in -half..=half {
            let x = clamp(col as isize + dx, img.width());
            let p = img.pixel(x, y);
            for (a, v) in acc.iter_mut().zip(p) {
                *a += v as f64;
            }
        }
    }
    let n = (window * window) as f64;
    acc.map(|a| a / n)
}
