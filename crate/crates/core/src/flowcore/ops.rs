use super::grid::{FeatureMap, FlowField, GridCoords, PixelMask};
use crate::error::{Error, Result};

/// Bases further than this from the origin are clamped; every grid in this
/// crate is far smaller, so clamped positions still sample only padding.
const BASE_LIMIT: f64 = (1u64 << 40) as f64;

/// One coordinate split into its integer corner and fractional weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct AxisPos {
    pub base: i64,
    pub frac: f64,
}

impl AxisPos {
    pub fn new(x: f64) -> Self {
        let floor = x.floor();
        Self {
            base: floor.clamp(-BASE_LIMIT, BASE_LIMIT) as i64,
            frac: x - floor,
        }
    }

    /// Shift by an integer number of cells, keeping the fractional weight.
    /// Lookups use this so that every window offset shares one weight pair.
    pub fn shifted(self, d: i64) -> Self {
        Self {
            base: self.base + d,
            frac: self.frac,
        }
    }
}

#[inline]
fn at(plane: &[f64], h: usize, w: usize, y: i64, x: i64) -> f64 {
    if y >= 0 && x >= 0 && (y as usize) < h && (x as usize) < w {
        plane[y as usize * w + x as usize]
    } else {
        0.0
    }
}

/// Bilinear read of one `h×w` plane with zero padding outside the grid.
#[inline]
pub(crate) fn sample_plane(plane: &[f64], h: usize, w: usize, px: AxisPos, py: AxisPos) -> f64 {
    let (x0, y0) = (px.base, py.base);
    let (fx, fy) = (px.frac, py.frac);
    (1.0 - fx) * (1.0 - fy) * at(plane, h, w, y0, x0)
        + fx * (1.0 - fy) * at(plane, h, w, y0, x0 + 1)
        + (1.0 - fx) * fy * at(plane, h, w, y0 + 1, x0)
        + fx * fy * at(plane, h, w, y0 + 1, x0 + 1)
}

/// Samples every channel of `map` at each coordinate.
///
/// The result is coordinate-major: entry `i * C + c` holds channel `c` at
/// `coords[i]`. Corners outside `[0, W-1]×[0, H-1]` read as zero, so a grid
/// point returns its stored value exactly and far-away points return zeros.
pub fn bilinear_sample(map: &FeatureMap, coords: &GridCoords) -> Vec<f64> {
    let (h, w) = map.dims();
    let c = map.channels();
    let mut out = Vec::with_capacity(coords.len() * c);
    for &[x, y] in coords.points() {
        let (px, py) = (AxisPos::new(x), AxisPos::new(y));
        for ch in 0..c {
            out.push(sample_plane(map.channel(ch), h, w, px, py));
        }
    }
    out
}

pub(crate) fn pooled_len(n: usize) -> usize {
    n.div_ceil(2)
}

/// Non-overlapping 2×2 means of one plane; odd trailing rows/columns average
/// only the cells that exist.
pub(crate) fn pool_plane(plane: &[f64], h: usize, w: usize) -> Vec<f64> {
    let (oh, ow) = (pooled_len(h), pooled_len(w));
    let mut out = Vec::with_capacity(oh * ow);
    for oy in 0..oh {
        let ys = 2 * oy..(2 * oy + 2).min(h);
        for ox in 0..ow {
            let xs = 2 * ox..(2 * ox + 2).min(w);
            let mut sum = 0.0;
            let mut count = 0usize;
            for y in ys.clone() {
                for x in xs.clone() {
                    sum += plane[y * w + x];
                    count += 1;
                }
            }
            out.push(sum / count as f64);
        }
    }
    out
}

/// Halves the resolution with 2×2 block means (`⌈H/2⌉×⌈W/2⌉` output).
pub fn avg_pool2(map: &FeatureMap) -> FeatureMap {
    let (h, w) = map.dims();
    let mut data = Vec::with_capacity(map.channels() * pooled_len(h) * pooled_len(w));
    for c in 0..map.channels() {
        data.extend(pool_plane(map.channel(c), h, w));
    }
    FeatureMap::from_parts(map.channels(), pooled_len(h), pooled_len(w), data)
}

/// Source coordinate of target cell `i` when resampling `n` cells to `m`,
/// pixel-centre aligned and clamped into the source grid.
fn resample_coord(i: usize, n: usize, m: usize) -> f64 {
    let s = (i as f64 + 0.5) * (n as f64 / m as f64) - 0.5;
    s.clamp(0.0, (n - 1) as f64)
}

fn resize_plane(plane: &[f64], h: usize, w: usize, th: usize, tw: usize) -> Vec<f64> {
    let xs: Vec<AxisPos> = (0..tw).map(|x| AxisPos::new(resample_coord(x, w, tw))).collect();
    let mut out = Vec::with_capacity(th * tw);
    for y in 0..th {
        let py = AxisPos::new(resample_coord(y, h, th));
        out.extend(xs.iter().map(|&px| sample_plane(plane, h, w, px, py)));
    }
    out
}

fn check_target(th: usize, tw: usize) -> Result<()> {
    if th == 0 || tw == 0 {
        return Err(Error::InvalidDimensions(format!(
            "resize target {th}x{tw} has an empty axis"
        )));
    }
    Ok(())
}

/// Resizes a flow field bilinearly and rescales its displacements to the
/// target grid (`u` by `W'/W`, `v` by `H'/H`).
pub fn scale_flow(flow: &FlowField, target_h: usize, target_w: usize) -> Result<FlowField> {
    check_target(target_h, target_w)?;
    let (h, w) = flow.dims();
    if (h, w) == (target_h, target_w) {
        return Ok(flow.clone());
    }
    let su = target_w as f64 / w as f64;
    let sv = target_h as f64 / h as f64;
    let u = resize_plane(flow.u(), h, w, target_h, target_w)
        .into_iter()
        .map(|x| x * su)
        .collect();
    let v = resize_plane(flow.v(), h, w, target_h, target_w)
        .into_iter()
        .map(|x| x * sv)
        .collect();
    Ok(FlowField::from_parts(target_h, target_w, u, v))
}

/// Resamples a mask on the same grid [`scale_flow`] uses; a target pixel is
/// valid iff every source pixel contributing a non-zero weight is valid.
pub fn scale_mask(mask: &PixelMask, target_h: usize, target_w: usize) -> Result<PixelMask> {
    check_target(target_h, target_w)?;
    let (h, w) = mask.dims();
    if (h, w) == (target_h, target_w) {
        return Ok(mask.clone());
    }
    let corners = |p: AxisPos, n: usize| -> Vec<usize> {
        let mut v = vec![p.base as usize];
        if p.frac > 0.0 && (p.base as usize + 1) < n {
            v.push(p.base as usize + 1);
        }
        v
    };
    PixelMask::from_fn(target_h, target_w, |y, x| {
        let ys = corners(AxisPos::new(resample_coord(y, h, target_h)), h);
        let xs = corners(AxisPos::new(resample_coord(x, w, target_w)), w);
        ys.iter().all(|&sy| xs.iter().all(|&sx| mask.get(sy, sx)))
    })
}
