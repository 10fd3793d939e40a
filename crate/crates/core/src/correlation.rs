//! Correlation costs between frame-1 features and frame-2 candidates.
//!
//! Two routes produce the same [`CostFeatures`]:
//!
//! * [`lookup_precomputed`] materialises the all-pairs [`CostVolume`], pools
//!   it over the frame-2 axes into a [`CostPyramid`] and samples that.
//!   Memory grows with `H1·W1·H2·W2`.
//! * [`lookup_on_demand`] pools the frame-2 *features* instead
//!   ([`FeaturePyramid`]) and, per pixel and level, computes only the small
//!   window of dot products the bilinear lookup touches.
//!
//! The dot product is linear in the frame-2 features, so pooling and
//! bilinear sampling commute with it and the two routes agree up to
//! floating-point summation order.
//!
//! Lookup positions for pixel `x` on level `l` are `(x + flow(x)) / 2^l + d`
//! for integer offsets `d ∈ [-r, r]²`, enumerated row-major (`dy` outer,
//! `dx` inner).

use rayon::prelude::*;

use crate::error::{check_dims, Error, Result};
use crate::flowcore::{avg_pool2, pool_plane, pooled_len, sample_plane, AxisPos, FeatureMap, FlowField};

/// Default refusal threshold for [`build_all_pairs`], in entries (1 GiB of f64).
pub const DEFAULT_MAX_VOLUME_ENTRIES: usize = 1 << 27;

/// All-pairs correlation `c(x1, x2) = <F1(x1), F2(x2)> / sqrt(C)`.
///
/// Stored frame-1 pixel major: the `H2×W2` cost plane of pixel `(y1, x1)`
/// starts at `(y1·W1 + x1)·H2·W2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostVolume {
    h1: usize,
    w1: usize,
    h2: usize,
    w2: usize,
    data: Vec<f64>,
}

impl CostVolume {
    pub fn frame1_dims(&self) -> (usize, usize) {
        (self.h1, self.w1)
    }

    pub fn frame2_dims(&self) -> (usize, usize) {
        (self.h2, self.w2)
    }

    pub fn get(&self, y1: usize, x1: usize, y2: usize, x2: usize) -> f64 {
        self.data[((y1 * self.w1 + x1) * self.h2 + y2) * self.w2 + x2]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Builds a volume from raw frame-1-major data.
    pub fn from_data(h1: usize, w1: usize, h2: usize, w2: usize, data: Vec<f64>) -> Result<Self> {
        if [h1, w1, h2, w2].contains(&0) || data.len() != h1 * w1 * h2 * w2 {
            return Err(Error::InvalidDimensions(format!(
                "cost volume {h1}x{w1}x{h2}x{w2} with {} entries",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("cost volume"));
        }
        Ok(Self { h1, w1, h2, w2, data })
    }
}

#[derive(Debug, Clone, PartialEq)]
struct CostLevel {
    h2: usize,
    w2: usize,
    data: Vec<f64>,
}

/// Cost volume pooled repeatedly over its frame-2 axes.
#[derive(Debug, Clone, PartialEq)]
pub struct CostPyramid {
    h1: usize,
    w1: usize,
    levels: Vec<CostLevel>,
}

impl CostPyramid {
    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn frame1_dims(&self) -> (usize, usize) {
        (self.h1, self.w1)
    }

    /// Frame-2 dims of level `l`.
    pub fn level_dims(&self, l: usize) -> (usize, usize) {
        (self.levels[l].h2, self.levels[l].w2)
    }

    pub fn get(&self, l: usize, y1: usize, x1: usize, y2: usize, x2: usize) -> f64 {
        let lv = &self.levels[l];
        lv.data[((y1 * self.w1 + x1) * lv.h2 + y2) * lv.w2 + x2]
    }
}

/// Frame-2 features and their successive 2×2 average poolings.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePyramid {
    levels: Vec<FeatureMap>,
}

/// Largest level count whose coarsest pooled map still has an axis of at
/// least one full 2×2 block per halving, i.e. `2^(L-1) <= min(H, W)`.
pub fn max_levels(height: usize, width: usize) -> usize {
    let m = height.min(width).max(1);
    (usize::BITS - m.leading_zeros()) as usize
}

fn check_levels(levels: usize, h: usize, w: usize) -> Result<()> {
    if levels == 0 || levels > max_levels(h, w) {
        return Err(Error::InvalidArgument(format!(
            "{levels} pyramid levels requested for a {h}x{w} frame (allowed 1..={})",
            max_levels(h, w)
        )));
    }
    Ok(())
}

impl FeaturePyramid {
    pub fn new(features: FeatureMap, levels: usize) -> Result<Self> {
        check_levels(levels, features.height(), features.width())?;
        let mut out = Vec::with_capacity(levels);
        out.push(features);
        for _ in 1..levels {
            let next = avg_pool2(out.last().expect("non-empty"));
            out.push(next);
        }
        Ok(Self { levels: out })
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, l: usize) -> &FeatureMap {
        &self.levels[l]
    }

    pub fn levels(&self) -> &[FeatureMap] {
        &self.levels
    }

    pub fn channels(&self) -> usize {
        self.levels[0].channels()
    }
}

/// Per frame-1 pixel: one `(2r+1)²` cost window for each pyramid level.
///
/// Layout is pixel-major, then level, then offset (`dy` outer, `dx` inner).
#[derive(Debug, Clone, PartialEq)]
pub struct CostFeatures {
    height: usize,
    width: usize,
    levels: usize,
    radius: usize,
    data: Vec<f64>,
}

impl CostFeatures {
    /// Builds cost features from raw values in the documented layout.
    pub fn new(height: usize, width: usize, levels: usize, radius: usize, data: Vec<f64>) -> Result<Self> {
        let k = window_len(radius);
        if height == 0 || width == 0 || levels == 0 || data.len() != height * width * levels * k {
            return Err(Error::InvalidDimensions(format!(
                "cost features {height}x{width}, {levels} levels, radius {radius} with {} values",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("cost features"));
        }
        Ok(Self {
            height,
            width,
            levels,
            radius,
            data,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn window_len(&self) -> usize {
        window_len(self.radius)
    }

    pub fn per_pixel(&self) -> usize {
        self.levels * self.window_len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// All `L·(2r+1)²` values of pixel `(y, x)`.
    pub fn pixel(&self, y: usize, x: usize) -> &[f64] {
        let n = self.per_pixel();
        let start = (y * self.width + x) * n;
        &self.data[start..start + n]
    }

    /// The `(2r+1)²` window of one level at pixel `(y, x)`.
    pub fn window(&self, y: usize, x: usize, level: usize) -> &[f64] {
        let k = self.window_len();
        &self.pixel(y, x)[level * k..(level + 1) * k]
    }

    /// Offset `(dx, dy)` of window entry `k`.
    pub fn offset(&self, k: usize) -> (i64, i64) {
        let side = 2 * self.radius + 1;
        let r = self.radius as i64;
        ((k % side) as i64 - r, (k / side) as i64 - r)
    }

    /// Entry with the largest `|a − b| / max(|a|, |b|, 1)` between two
    /// cost feature sets of the same shape. The floor of 1 keeps
    /// near-zero costs from inflating the ratio.
    pub fn max_relative_deviation(&self, other: &CostFeatures) -> Result<Deviation> {
        check_dims("cost features", self.dims(), other.dims())?;
        if (self.levels, self.radius) != (other.levels, other.radius) {
            return Err(Error::InvalidArgument(format!(
                "cost features differ in shape: {} levels r={} vs {} levels r={}",
                self.levels, self.radius, other.levels, other.radius
            )));
        }
        let mut worst = (0.0, 0);
        for (i, (a, b)) in self.data.iter().zip(&other.data).enumerate() {
            let rel = (a - b).abs() / a.abs().max(b.abs()).max(1.0);
            if rel > worst.0 {
                worst = (rel, i);
            }
        }
        let (relative, i) = worst;
        let per_pixel = self.per_pixel();
        let k = self.window_len();
        let pixel = i / per_pixel;
        Ok(Deviation {
            relative,
            y: pixel / self.width,
            x: pixel % self.width,
            level: (i % per_pixel) / k,
            offset: self.offset(i % k),
            left: self.data[i],
            right: other.data[i],
        })
    }
}

/// Location and size of the worst disagreement found by
/// [`CostFeatures::max_relative_deviation`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Deviation {
    pub relative: f64,
    pub y: usize,
    pub x: usize,
    pub level: usize,
    /// `(dx, dy)` within the window.
    pub offset: (i64, i64),
    pub left: f64,
    pub right: f64,
}

pub fn window_len(radius: usize) -> usize {
    (2 * radius + 1) * (2 * radius + 1)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Materialises every frame-1/frame-2 pair. Refuses volumes above
/// [`DEFAULT_MAX_VOLUME_ENTRIES`] before allocating anything.
pub fn build_all_pairs(f1: &FeatureMap, f2: &FeatureMap) -> Result<CostVolume> {
    build_all_pairs_with_limit(f1, f2, DEFAULT_MAX_VOLUME_ENTRIES)
}

pub fn build_all_pairs_with_limit(f1: &FeatureMap, f2: &FeatureMap, max_entries: usize) -> Result<CostVolume> {
    if f1.channels() != f2.channels() {
        return Err(Error::ChannelMismatch {
            left: f1.channels(),
            right: f2.channels(),
        });
    }
    let (h1, w1) = f1.dims();
    let (h2, w2) = f2.dims();
    let entries = h1 as u128 * w1 as u128 * h2 as u128 * w2 as u128;
    if entries > max_entries as u128 {
        return Err(Error::VolumeTooLarge {
            entries,
            limit: max_entries,
        });
    }
    let c = f1.channels();
    let norm = (c as f64).sqrt();
    let a = f1.to_pixel_major();
    let b = f2.to_pixel_major();
    let plane = h2 * w2;
    let mut data = vec![0.0; h1 * w1 * plane];
    data.par_chunks_mut(plane).enumerate().for_each(|(p1, out)| {
        let v1 = &a[p1 * c..(p1 + 1) * c];
        for (p2, slot) in out.iter_mut().enumerate() {
            *slot = dot(v1, &b[p2 * c..(p2 + 1) * c]) / norm;
        }
    });
    Ok(CostVolume { h1, w1, h2, w2, data })
}

/// Pools the volume's frame-2 axes `levels - 1` times.
pub fn build_cost_pyramid(volume: CostVolume, levels: usize) -> Result<CostPyramid> {
    let CostVolume { h1, w1, h2, w2, data } = volume;
    check_levels(levels, h2, w2)?;
    let mut out = vec![CostLevel { h2, w2, data }];
    for _ in 1..levels {
        let prev = out.last().expect("non-empty");
        let (ph, pw) = (pooled_len(prev.h2), pooled_len(prev.w2));
        let src = prev.h2 * prev.w2;
        let mut data = vec![0.0; h1 * w1 * ph * pw];
        data.par_chunks_mut(ph * pw).enumerate().for_each(|(p1, dst)| {
            dst.copy_from_slice(&pool_plane(&prev.data[p1 * src..(p1 + 1) * src], prev.h2, prev.w2));
        });
        out.push(CostLevel { h2: ph, w2: pw, data });
    }
    Ok(CostPyramid { h1, w1, levels: out })
}

/// Lookup centre of pixel `(y, x)` on level `l`, split for bilinear weights.
#[inline]
fn lookup_centre(flow: &FlowField, y: usize, x: usize, level: usize) -> (AxisPos, AxisPos) {
    let (u, v) = flow.get(y, x);
    let scale = 0.5f64.powi(level as i32);
    (
        AxisPos::new((x as f64 + u) * scale),
        AxisPos::new((y as f64 + v) * scale),
    )
}

fn check_flow(flow: &FlowField, dims: (usize, usize)) -> Result<()> {
    check_dims("flow field", dims, flow.dims())?;
    if !flow.is_finite() {
        return Err(Error::NonFinite("flow field"));
    }
    Ok(())
}

/// Samples the precomputed pyramid around every pixel's flow target.
pub fn lookup_precomputed(pyramid: &CostPyramid, flow: &FlowField, radius: usize) -> Result<CostFeatures> {
    check_flow(flow, pyramid.frame1_dims())?;
    let (h1, w1) = pyramid.frame1_dims();
    let levels = pyramid.num_levels();
    let k = window_len(radius);
    let r = radius as i64;
    let mut data = vec![0.0; h1 * w1 * levels * k];
    data.par_chunks_mut(levels * k).enumerate().for_each(|(p, out)| {
        let (y, x) = (p / w1, p % w1);
        for (l, lv) in pyramid.levels.iter().enumerate() {
            let (cx, cy) = lookup_centre(flow, y, x, l);
            let plane_len = lv.h2 * lv.w2;
            let plane = &lv.data[p * plane_len..(p + 1) * plane_len];
            let dst = &mut out[l * k..(l + 1) * k];
            let mut i = 0;
            for dy in -r..=r {
                for dx in -r..=r {
                    dst[i] = sample_plane(plane, lv.h2, lv.w2, cx.shifted(dx), cy.shifted(dy));
                    i += 1;
                }
            }
        }
    });
    Ok(CostFeatures {
        height: h1,
        width: w1,
        levels,
        radius,
        data,
    })
}

/// Computes cost windows directly from features, never holding more than
/// one `(2r+2)²` window of dot products per worker.
///
/// For each pixel and level, the window spans every grid cell a bilinear
/// corner of the `(2r+1)²` lookup positions can touch; cells outside the
/// pooled frame-2 grid contribute zero.
pub fn lookup_on_demand(
    f1: &FeatureMap,
    pyramid: &FeaturePyramid,
    flow: &FlowField,
    radius: usize,
) -> Result<CostFeatures> {
    if f1.channels() != pyramid.channels() {
        return Err(Error::ChannelMismatch {
            left: f1.channels(),
            right: pyramid.channels(),
        });
    }
    check_flow(flow, f1.dims())?;
    let (h1, w1) = f1.dims();
    let c = f1.channels();
    let norm = (c as f64).sqrt();
    let levels = pyramid.num_levels();
    let k = window_len(radius);
    let r = radius as i64;
    let side = 2 * radius + 2;

    let a = f1.to_pixel_major();
    let pooled: Vec<(usize, usize, Vec<f64>)> = pyramid
        .levels()
        .iter()
        .map(|m| (m.height(), m.width(), m.to_pixel_major()))
        .collect();

    let mut data = vec![0.0; h1 * w1 * levels * k];
    data.par_chunks_mut(levels * k).enumerate().for_each_init(
        || vec![0.0; side * side],
        |window, (p, out)| {
            let (y, x) = (p / w1, p % w1);
            let v1 = &a[p * c..(p + 1) * c];
            for (l, (h2, w2, b)) in pooled.iter().enumerate() {
                let (cx, cy) = lookup_centre(flow, y, x, l);
                let (x0, y0) = (cx.base - r, cy.base - r);
                for wy in 0..side {
                    let gy = y0 + wy as i64;
                    for wx in 0..side {
                        let gx = x0 + wx as i64;
                        window[wy * side + wx] = if gy >= 0 && gx >= 0 && (gy as usize) < *h2 && (gx as usize) < *w2 {
                            let q = gy as usize * w2 + gx as usize;
                            dot(v1, &b[q * c..(q + 1) * c]) / norm
                        } else {
                            0.0
                        };
                    }
                }
                // window-local positions: corner base r + d, same fractions
                let lx = AxisPos { base: r, frac: cx.frac };
                let ly = AxisPos { base: r, frac: cy.frac };
                let dst = &mut out[l * k..(l + 1) * k];
                let mut i = 0;
                for dy in -r..=r {
                    for dx in -r..=r {
                        dst[i] = sample_plane(window, side, side, lx.shifted(dx), ly.shifted(dy));
                        i += 1;
                    }
                }
            }
        },
    );
    Ok(CostFeatures {
        height: h1,
        width: w1,
        levels,
        radius,
        data,
    })
}
