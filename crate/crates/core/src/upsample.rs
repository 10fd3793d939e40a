//! ×2 convex upsampling and forward warping for warm starts.

use crate::error::{check_dims, Error, Result};
use crate::flowcore::FlowField;

/// Number of coarse neighbours each fine pixel blends.
pub const NEIGHBOURS: usize = 9;

/// Non-negative blend weights over the 3×3 coarse neighbourhood of each fine
/// pixel's parent. Neighbour `k` sits at `(k / 3 - 1, k % 3 - 1)` rows/cols
/// from the parent.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexMask {
    coarse_h: usize,
    coarse_w: usize,
    weights: Vec<f64>,
}

const SUM_TOLERANCE: f64 = 1e-6;

impl ConvexMask {
    /// Equal weights everywhere.
    pub fn uniform(coarse_h: usize, coarse_w: usize) -> Result<Self> {
        let n = 4 * coarse_h * coarse_w * NEIGHBOURS;
        Self::from_weights(coarse_h, coarse_w, vec![1.0 / NEIGHBOURS as f64; n])
    }

    /// Wraps already-normalised weights (fine-pixel major, 9 per pixel).
    pub fn from_weights(coarse_h: usize, coarse_w: usize, weights: Vec<f64>) -> Result<Self> {
        if coarse_h == 0 || coarse_w == 0 || weights.len() != 4 * coarse_h * coarse_w * NEIGHBOURS {
            return Err(Error::InvalidDimensions(format!(
                "convex mask for {coarse_h}x{coarse_w} coarse grid with {} weights",
                weights.len()
            )));
        }
        for (i, w) in weights.chunks_exact(NEIGHBOURS).enumerate() {
            if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "negative or non-finite weight at fine pixel {i}"
                )));
            }
            let s: f64 = w.iter().sum();
            if (s - 1.0).abs() > SUM_TOLERANCE {
                return Err(Error::InvalidArgument(format!("weights of fine pixel {i} sum to {s}")));
            }
        }
        Ok(Self {
            coarse_h,
            coarse_w,
            weights,
        })
    }

    pub fn coarse_dims(&self) -> (usize, usize) {
        (self.coarse_h, self.coarse_w)
    }

    pub fn fine_dims(&self) -> (usize, usize) {
        (2 * self.coarse_h, 2 * self.coarse_w)
    }

    /// The 9 weights of fine pixel `(fy, fx)`.
    pub fn weights(&self, fy: usize, fx: usize) -> &[f64] {
        let i = fy * 2 * self.coarse_w + fx;
        &self.weights[i * NEIGHBOURS..(i + 1) * NEIGHBOURS]
    }

    pub fn raw(&self) -> &[f64] {
        &self.weights
    }
}

/// Softmax over each fine pixel's 9 logits.
pub fn normalize_mask(coarse_h: usize, coarse_w: usize, logits: &[f64]) -> Result<ConvexMask> {
    if logits.len() != 4 * coarse_h * coarse_w * NEIGHBOURS {
        return Err(Error::InvalidDimensions(format!(
            "{} logits for a {coarse_h}x{coarse_w} coarse grid",
            logits.len()
        )));
    }
    if logits.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("mask logits"));
    }
    let mut weights = Vec::with_capacity(logits.len());
    for chunk in logits.chunks_exact(NEIGHBOURS) {
        let m = chunk.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = chunk.iter().map(|x| (x - m).exp()).collect();
        let s: f64 = e.iter().sum();
        weights.extend(e.iter().map(|x| x / s));
    }
    ConvexMask::from_weights(coarse_h, coarse_w, weights)
}

/// Doubles the resolution: each fine value is twice the convex combination
/// of its parent's 3×3 coarse neighbourhood.
///
/// Neighbours outside the coarse grid are dropped and the remaining weights
/// renormalised; if every in-range weight is zero the parent value is used.
/// Results are clamped to the neighbourhood's range so the convexity bound
/// holds exactly in floating point.
pub fn convex_upsample2(flow: &FlowField, mask: &ConvexMask) -> Result<FlowField> {
    check_dims("convex mask", flow.dims(), mask.coarse_dims())?;
    let (h, w) = flow.dims();
    let (fh, fw) = (2 * h, 2 * w);
    let mut u = Vec::with_capacity(fh * fw);
    let mut v = Vec::with_capacity(fh * fw);
    for fy in 0..fh {
        for fx in 0..fw {
            let (py, px) = (fy / 2, fx / 2);
            let wts = mask.weights(fy, fx);
            let mut acc = [0.0f64; 2];
            let mut lo = [f64::INFINITY; 2];
            let mut hi = [f64::NEG_INFINITY; 2];
            let mut wsum = 0.0;
            for (k, &wk) in wts.iter().enumerate() {
                let ny = py as i64 + (k / 3) as i64 - 1;
                let nx = px as i64 + (k % 3) as i64 - 1;
                if ny < 0 || nx < 0 || ny >= h as i64 || nx >= w as i64 {
                    continue;
                }
                let val = flow.get(ny as usize, nx as usize);
                for (c, x) in [val.0, val.1].into_iter().enumerate() {
                    lo[c] = lo[c].min(x);
                    hi[c] = hi[c].max(x);
                    acc[c] += wk * x;
                }
                wsum += wk;
            }
            let blended = if wsum > 0.0 {
                [(acc[0] / wsum).clamp(lo[0], hi[0]), (acc[1] / wsum).clamp(lo[1], hi[1])]
            } else {
                let p = flow.get(py, px);
                [p.0, p.1]
            };
            u.push(2.0 * blended[0]);
            v.push(2.0 * blended[1]);
        }
    }
    Ok(FlowField::from_parts(fh, fw, u, v))
}

/// Nearest-integer rounding with ties toward +∞.
fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

/// Splats every pixel's flow to `x + round(flow(x))`. Targets hit several
/// times hold the mean of the incoming vectors; untouched targets and
/// off-grid splats are zero/dropped.
pub fn forward_warp(prev: &FlowField) -> FlowField {
    let (h, w) = prev.dims();
    let n = h * w;
    let mut sum_u = vec![0.0; n];
    let mut sum_v = vec![0.0; n];
    let mut count = vec![0u32; n];
    for y in 0..h {
        for x in 0..w {
            let (u, v) = prev.get(y, x);
            let tx = x as f64 + round_half_up(u);
            let ty = y as f64 + round_half_up(v);
            if tx < 0.0 || ty < 0.0 || tx >= w as f64 || ty >= h as f64 {
                continue;
            }
            let t = ty as usize * w + tx as usize;
            sum_u[t] += u;
            sum_v[t] += v;
            count[t] += 1;
        }
    }
    let mean = |s: Vec<f64>| -> Vec<f64> {
        s.into_iter()
            .zip(&count)
            .map(|(s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
            .collect()
    };
    FlowField::from_parts(h, w, mean(sum_u), mean(sum_v))
}

/// What the previous pair of a sequence can offer as initialisation.
///
/// Only the immediately preceding pair is ever held, and that pair's flow is
/// expected to come from a zero-initialised estimate.
#[derive(Debug, Clone, PartialEq)]
pub enum WarmStartState {
    /// First pair of a sequence, or the previous frame is unavailable.
    NoPrevious,
    /// Zero-initialised flow of the previous pair.
    Previous(FlowField),
}

/// Initial flow for a `height×width` pair.
pub fn warm_start_init(state: &WarmStartState, height: usize, width: usize) -> Result<FlowField> {
    match state {
        WarmStartState::NoPrevious => FlowField::zeros(height, width),
        WarmStartState::Previous(prev) => {
            check_dims("previous flow", (height, width), prev.dims())?;
            Ok(forward_warp(prev))
        }
    }
}
