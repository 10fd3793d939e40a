//! Training losses and evaluation metrics.
//!
//! The per-sample losses reduce a whole flow field to one scalar. The
//! multi-scale loss sums them over every iterate of every scale with
//! exponentially growing weight towards the last iteration of each scale.

use std::fmt;

use crate::error::{check_dims, Error, Result};
use crate::flowcore::{scale_flow, scale_mask, FlowField, PixelMask};
use crate::pipeline::EstimateTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossMode {
    /// Mean Euclidean endpoint error.
    L2,
    /// `(mean L1 error + ε)^q`, one value per sample.
    Robust,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossConfig {
    pub mode: LossMode,
    pub q: f64,
    pub epsilon: f64,
    /// Decay applied per iteration counted back from the last one of a scale.
    pub gamma: f64,
    /// Per-scale weights, coarsest first. `None` means uniform `1/S`.
    pub scale_weights: Option<Vec<f64>>,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self::robust()
    }
}

impl LossConfig {
    /// Robust loss with `q = 0.7`, `ε = 0.01`, `γ = 0.8`.
    pub fn robust() -> Self {
        Self {
            mode: LossMode::Robust,
            q: 0.7,
            epsilon: 0.01,
            gamma: 0.8,
            scale_weights: None,
        }
    }

    /// Same decay and weights, L2 sample loss.
    pub fn l2() -> Self {
        Self {
            mode: LossMode::L2,
            ..Self::robust()
        }
    }

    /// Checks the parameter ranges and returns the weights for `scales` scales.
    pub fn weights_for(&self, scales: usize) -> Result<Vec<f64>> {
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(Error::InvalidArgument(format!("q = {} must lie in (0, 1]", self.q)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "epsilon = {} must be positive",
                self.epsilon
            )));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "gamma = {} must lie in (0, 1]",
                self.gamma
            )));
        }
        match &self.scale_weights {
            None if scales == 0 => Err(Error::InvalidArgument("trace has no scales".into())),
            None => Ok(vec![1.0 / scales as f64; scales]),
            Some(w) if w.len() != scales => Err(Error::InvalidArgument(format!(
                "{} scale weights for {scales} scales",
                w.len()
            ))),
            Some(w) if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) => Err(Error::InvalidArgument(
                "scale weights must be finite and non-negative".into(),
            )),
            Some(w) => Ok(w.clone()),
        }
    }
}

fn check_pair(f: &FlowField, gt: &FlowField, valid: &PixelMask) -> Result<usize> {
    check_dims("ground truth", f.dims(), gt.dims())?;
    check_dims("validity mask", f.dims(), valid.dims())?;
    match valid.count() {
        0 => Err(Error::EmptyMask),
        n => Ok(n),
    }
}

fn mean_l1(f: &FlowField, gt: &FlowField, valid: &PixelMask, n: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..f.len() {
        if valid.flags()[i] {
            sum += (f.u()[i] - gt.u()[i]).abs() + (f.v()[i] - gt.v()[i]).abs();
        }
    }
    sum / n as f64
}

/// `((1/|valid|)·Σ ‖f − gt‖₁ + ε)^q`.
pub fn robust_sample_loss(f: &FlowField, gt: &FlowField, valid: &PixelMask, q: f64, epsilon: f64) -> Result<f64> {
    let n = check_pair(f, gt, valid)?;
    Ok((mean_l1(f, gt, valid, n) + epsilon).powf(q))
}

/// Mean endpoint error over the valid pixels.
pub fn l2_sample_loss(f: &FlowField, gt: &FlowField, valid: &PixelMask) -> Result<f64> {
    let n = check_pair(f, gt, valid)?;
    let mut sum = 0.0;
    for i in 0..f.len() {
        if valid.flags()[i] {
            sum += (f.u()[i] - gt.u()[i]).hypot(f.v()[i] - gt.v()[i]);
        }
    }
    Ok(sum / n as f64)
}

/// Analytic gradient of [`robust_sample_loss`] with respect to `f`.
///
/// A residual component of exactly zero contributes 0; invalid pixels get 0.
pub fn grad_robust_loss(f: &FlowField, gt: &FlowField, valid: &PixelMask, q: f64, epsilon: f64) -> Result<FlowField> {
    let n = check_pair(f, gt, valid)?;
    let m = mean_l1(f, gt, valid, n);
    let coef = q * (m + epsilon).powf(q - 1.0) / n as f64;
    let sign = |r: f64| {
        if r > 0.0 {
            1.0
        } else if r < 0.0 {
            -1.0
        } else {
            0.0
        }
    };
    let (h, w) = f.dims();
    let mut gu = vec![0.0; f.len()];
    let mut gv = vec![0.0; f.len()];
    for i in 0..f.len() {
        if valid.flags()[i] {
            gu[i] = coef * sign(f.u()[i] - gt.u()[i]);
            gv[i] = coef * sign(f.v()[i] - gt.v()[i]);
        }
    }
    FlowField::new(h, w, gu, gv)
}

/// Multi-scale, multi-iteration loss over a full estimation trace.
///
/// `Σ_s w_s Σ_i γ^(T_s − i) · ℓ(f_{s,i}, gt_s)` where `gt_s` is the
/// ground truth resized to scale `s` with [`scale_flow`] and its validity
/// mask with [`scale_mask`].
pub fn ms_mi_loss(trace: &EstimateTrace, gt: &FlowField, valid: &PixelMask, config: &LossConfig) -> Result<f64> {
    check_dims("validity mask", gt.dims(), valid.dims())?;
    check_dims("ground truth", trace.final_flow.dims(), gt.dims())?;
    let weights = config.weights_for(trace.scales.len())?;
    let mut total = 0.0;
    for (scale, &w_s) in trace.scales.iter().zip(&weights) {
        let (h, w) = scale.init.dims();
        let gt_s = scale_flow(gt, h, w)?;
        let valid_s = scale_mask(valid, h, w)?;
        let t = scale.iterates.len();
        let mut sum = 0.0;
        for (i, f) in scale.iterates.iter().enumerate() {
            let loss = match config.mode {
                LossMode::L2 => l2_sample_loss(f, &gt_s, &valid_s)?,
                LossMode::Robust => robust_sample_loss(f, &gt_s, &valid_s, config.q, config.epsilon)?,
            };
            sum += config.gamma.powi((t - 1 - i) as i32) * loss;
        }
        total += w_s * sum;
    }
    Ok(total)
}

/// Endpoint-error threshold of the outlier rule, in pixels.
pub const OUTLIER_ABS_PX: f64 = 3.0;
/// Relative threshold of the outlier rule, as a fraction of `‖gt‖`.
pub const OUTLIER_REL: f64 = 0.05;

/// Evaluation metrics. A field is `None` when its pixel set is empty.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FlowMetrics {
    pub epe_all: Option<f64>,
    pub epe_matched: Option<f64>,
    pub epe_unmatched: Option<f64>,
    pub fl_all: Option<f64>,
    pub fl_noc: Option<f64>,
    pub s0_10: Option<f64>,
    pub s10_40: Option<f64>,
    pub s40plus: Option<f64>,
}

impl FlowMetrics {
    /// Fields in serialization order.
    pub fn entries(&self) -> [(&'static str, Option<f64>); 8] {
        [
            ("epe_all", self.epe_all),
            ("epe_matched", self.epe_matched),
            ("epe_unmatched", self.epe_unmatched),
            ("fl_all", self.fl_all),
            ("fl_noc", self.fl_noc),
            ("s0_10", self.s0_10),
            ("s10_40", self.s10_40),
            ("s40plus", self.s40plus),
        ]
    }
}

/// One `name value` line per metric, four decimals, `n/a` when absent.
impl fmt::Display for FlowMetrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, value) in self.entries() {
            match value {
                Some(v) => writeln!(f, "{name} {v:.4}")?,
                None => writeln!(f, "{name} n/a")?,
            }
        }
        Ok(())
    }
}

#[derive(Default)]
struct Acc {
    sum: f64,
    outliers: usize,
    n: usize,
}

impl Acc {
    fn push(&mut self, epe: f64, outlier: bool) {
        self.sum += epe;
        self.outliers += outlier as usize;
        self.n += 1;
    }

    fn mean(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }

    fn outlier_pct(&self) -> Option<f64> {
        (self.n > 0).then(|| 100.0 * self.outliers as f64 / self.n as f64)
    }
}

/// Endpoint errors, outlier rates and displacement-binned errors.
///
/// `valid` selects the pixels with ground truth; `noc` marks the
/// non-occluded ones. A pixel is an outlier when its endpoint error exceeds
/// both 3 px and 5% of `‖gt‖` (strictly).
pub fn compute_metrics(f: &FlowField, gt: &FlowField, valid: &PixelMask, noc: &PixelMask) -> Result<FlowMetrics> {
    check_dims("ground truth", f.dims(), gt.dims())?;
    check_dims("validity mask", f.dims(), valid.dims())?;
    check_dims("non-occlusion mask", f.dims(), noc.dims())?;
    let (mut all, mut matched, mut unmatched) = (Acc::default(), Acc::default(), Acc::default());
    let mut bins: [Acc; 3] = Default::default();
    for i in 0..f.len() {
        if !valid.flags()[i] {
            continue;
        }
        let (gu, gv) = (gt.u()[i], gt.v()[i]);
        let epe = (f.u()[i] - gu).hypot(f.v()[i] - gv);
        let mag = gu.hypot(gv);
        let outlier = epe > OUTLIER_ABS_PX && epe > OUTLIER_REL * mag;
        all.push(epe, outlier);
        if noc.flags()[i] {
            matched.push(epe, outlier);
        } else {
            unmatched.push(epe, outlier);
        }
        let bin = if mag < 10.0 {
            0
        } else if mag < 40.0 {
            1
        } else {
            2
        };
        bins[bin].push(epe, outlier);
    }
    Ok(FlowMetrics {
        epe_all: all.mean(),
        epe_matched: matched.mean(),
        epe_unmatched: unmatched.mean(),
        fl_all: all.outlier_pct(),
        fl_noc: matched.outlier_pct(),
        s0_10: bins[0].mean(),
        s10_40: bins[1].mean(),
        s40plus: bins[2].mean(),
    })
}

/// `100·(old − new)/old`, rounded to one decimal. Positive means `new` is
/// better (lower).
pub fn improvement_pct(old: f64, new: f64) -> Result<f64> {
    if !(old > 0.0 && old.is_finite()) || !new.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "improvement needs a positive baseline, got old = {old}, new = {new}"
        )));
    }
    let pct = 100.0 * (old - new) / old;
    Ok((pct * 10.0).round() / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::ScaleTrace;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn field(h: usize, w: usize, f: impl Fn(usize) -> (f64, f64)) -> FlowField {
        let mut i = 0;
        FlowField::from_fn(h, w, |_, _| {
            let r = f(i);
            i += 1;
            r
        })
        .unwrap()
    }

    #[test]
    fn robust_loss_closed_forms() {
        let gt = FlowField::constant(3, 4, 1.5, -2.0).unwrap();
        let valid = PixelMask::all(3, 4).unwrap();
        let l = robust_sample_loss(&gt, &gt, &valid, 0.7, 0.01).unwrap();
        assert_relative_eq!(l, 0.01f64.powf(0.7), max_relative = 1e-15);
        assert!((l - 0.0398).abs() < 5e-5);

        let f = FlowField::constant(3, 4, 2.5, -1.0).unwrap();
        let l = robust_sample_loss(&f, &gt, &valid, 0.7, 0.01).unwrap();
        assert_relative_eq!(l, 2.01f64.powf(0.7), max_relative = 1e-15);

        // q = 1 and no stabilizer leave the plain mean L1 error
        let f = field(3, 4, |i| (gt.u()[i] + i as f64, gt.v()[i] - 0.5));
        let expected = (0..12).map(|i| i as f64 + 0.5).sum::<f64>() / 12.0;
        assert_relative_eq!(
            robust_sample_loss(&f, &gt, &valid, 1.0, 0.0).unwrap(),
            expected,
            max_relative = 1e-14
        );
    }

    #[test]
    fn invalid_pixels_are_ignored() {
        let gt = FlowField::zeros(1, 3).unwrap();
        let f = FlowField::new(1, 3, vec![1.0, 100.0, 1.0], vec![0.0; 3]).unwrap();
        let valid = PixelMask::new(1, 3, vec![true, false, true]).unwrap();
        assert_eq!(l2_sample_loss(&f, &gt, &valid).unwrap(), 1.0);
        assert_eq!(robust_sample_loss(&f, &gt, &valid, 1.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn l2_loss_examples() {
        let gt = FlowField::zeros(2, 5).unwrap();
        let valid = PixelMask::all(2, 5).unwrap();
        assert_eq!(l2_sample_loss(&gt, &gt, &valid).unwrap(), 0.0);
        let f = field(2, 5, |i| if i == 7 { (3.0, 4.0) } else { (0.0, 0.0) });
        assert_relative_eq!(l2_sample_loss(&f, &gt, &valid).unwrap(), 5.0 / 10.0);
    }

    #[test]
    fn empty_mask_is_rejected() {
        let gt = FlowField::zeros(2, 2).unwrap();
        let none = PixelMask::new(2, 2, vec![false; 4]).unwrap();
        assert_eq!(l2_sample_loss(&gt, &gt, &none), Err(Error::EmptyMask));
        assert_eq!(robust_sample_loss(&gt, &gt, &none, 0.7, 0.01), Err(Error::EmptyMask));
        assert_eq!(grad_robust_loss(&gt, &gt, &none, 0.7, 0.01), Err(Error::EmptyMask));
    }

    #[test]
    fn gradient_sign_conventions() {
        let gt = FlowField::new(1, 3, vec![0.0, 1.0, 2.0], vec![0.0, -1.0, 0.5]).unwrap();
        let valid = PixelMask::all(1, 3).unwrap();
        let g = grad_robust_loss(&gt, &gt, &valid, 0.7, 0.01).unwrap();
        assert!(g.u().iter().chain(g.v()).all(|&x| x == 0.0));

        let f = FlowField::new(1, 3, vec![1.0, 1.0, 0.0], vec![0.0, -3.0, 0.5]).unwrap();
        let g = grad_robust_loss(&f, &gt, &valid, 1.0, 0.0).unwrap();
        assert_eq!(g.u(), &[1.0 / 3.0, 0.0, -1.0 / 3.0]);
        assert_eq!(g.v(), &[0.0, -1.0 / 3.0, 0.0]);
    }

    #[test]
    fn gradient_matches_central_differences() {
        // fixed pseudo-random instance; the acceptance suite runs many more
        let (h, w) = (4, 5);
        let mut s = 0x2545_f491_4f6c_dd1du64;
        let mut next = || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 * 4.0 - 2.0
        };
        let gt = FlowField::from_fn(h, w, |_, _| (next(), next())).unwrap();
        let f = FlowField::from_fn(h, w, |_, _| (next(), next())).unwrap();
        let valid = PixelMask::from_fn(h, w, |y, x| (y + x) % 4 != 0).unwrap();
        let g = grad_robust_loss(&f, &gt, &valid, 0.7, 0.01).unwrap();
        let eps = 1e-5;
        for i in 0..h * w {
            for comp in 0..2 {
                let bump = |d: f64| {
                    let (mut u, mut v) = (f.u().to_vec(), f.v().to_vec());
                    if comp == 0 {
                        u[i] += d
                    } else {
                        v[i] += d
                    }
                    let ff = FlowField::new(h, w, u, v).unwrap();
                    robust_sample_loss(&ff, &gt, &valid, 0.7, 0.01).unwrap()
                };
                let fd = (bump(eps) - bump(-eps)) / (2.0 * eps);
                let an = if comp == 0 { g.u()[i] } else { g.v()[i] };
                assert!(
                    (fd - an).abs() <= 1e-4 * an.abs().max(1e-12) + 1e-12,
                    "{i} {comp}: {fd} vs {an}"
                );
            }
        }
    }

    fn trace_of(scales: Vec<Vec<FlowField>>, final_dims: (usize, usize)) -> EstimateTrace {
        EstimateTrace {
            scales: scales
                .into_iter()
                .map(|iterates| ScaleTrace {
                    init: FlowField::zeros(iterates[0].height(), iterates[0].width()).unwrap(),
                    iterates,
                })
                .collect(),
            final_flow: FlowField::zeros(final_dims.0, final_dims.1).unwrap(),
        }
    }

    #[test]
    fn ms_loss_vanishes_on_downscaled_truth() {
        let gt = FlowField::constant(16, 16, 4.0, -8.0).unwrap();
        let valid = PixelMask::all(16, 16).unwrap();
        let dims = [(1, 1), (2, 2), (4, 4), (8, 8)];
        let scales = dims
            .iter()
            .map(|&(h, w)| vec![scale_flow(&gt, h, w).unwrap(); 3])
            .collect();
        let trace = trace_of(scales, (16, 16));
        assert_eq!(ms_mi_loss(&trace, &gt, &valid, &LossConfig::l2()).unwrap(), 0.0);
    }

    #[test]
    fn ms_loss_single_scale_reduces_to_sample_loss() {
        let gt = FlowField::constant(4, 4, 1.0, 1.0).unwrap();
        let valid = PixelMask::all(4, 4).unwrap();
        let it = FlowField::constant(2, 2, 0.0, 2.0).unwrap();
        let trace = trace_of(vec![vec![it.clone()]], (4, 4));
        let cfg = LossConfig {
            scale_weights: Some(vec![1.0]),
            gamma: 0.3,
            ..LossConfig::robust()
        };
        let gt_s = scale_flow(&gt, 2, 2).unwrap();
        let expected = robust_sample_loss(&it, &gt_s, &PixelMask::all(2, 2).unwrap(), 0.7, 0.01).unwrap();
        assert_eq!(ms_mi_loss(&trace, &gt, &valid, &cfg).unwrap(), expected);
    }

    #[test]
    fn ms_loss_weighted_sum_by_hand() {
        // four scales with one iterate each, zero ground truth, error e_s = s+1
        // in u only: L2 loss is e_s and every decay factor is γ^0 = 1
        let gt = FlowField::zeros(16, 16).unwrap();
        let valid = PixelMask::all(16, 16).unwrap();
        let dims = [(1, 1), (2, 2), (4, 4), (8, 8)];
        let scales = dims
            .iter()
            .enumerate()
            .map(|(s, &(h, w))| vec![FlowField::constant(h, w, s as f64 + 1.0, 0.0).unwrap()])
            .collect();
        let trace = trace_of(scales, (16, 16));
        let l = ms_mi_loss(&trace, &gt, &valid, &LossConfig::l2()).unwrap();
        assert_relative_eq!(l, (1.0 + 2.0 + 3.0 + 4.0) / 4.0, max_relative = 1e-15);

        // two iterates on one scale: γ·e1 + e2
        let scales = vec![vec![
            FlowField::constant(8, 8, 2.0, 0.0).unwrap(),
            FlowField::constant(8, 8, 0.5, 0.0).unwrap(),
        ]];
        let trace = trace_of(scales, (16, 16));
        let l = ms_mi_loss(&trace, &gt, &valid, &LossConfig::l2()).unwrap();
        assert_relative_eq!(l, 0.8 * 2.0 + 0.5, max_relative = 1e-15);
    }

    #[test]
    fn loss_config_validation() {
        let bad_q = LossConfig {
            q: 1.5,
            ..LossConfig::robust()
        };
        assert!(bad_q.weights_for(4).is_err());
        let bad_eps = LossConfig {
            epsilon: 0.0,
            ..LossConfig::robust()
        };
        assert!(bad_eps.weights_for(4).is_err());
        let bad_w = LossConfig {
            scale_weights: Some(vec![0.5, -0.5]),
            ..LossConfig::robust()
        };
        assert!(bad_w.weights_for(2).is_err());
        assert!(LossConfig::robust()
            .weights_for(3)
            .unwrap()
            .iter()
            .all(|&w| w == 1.0 / 3.0));
    }

    #[test]
    fn metrics_examples() {
        let gt = FlowField::constant(10, 10, 6.0, 8.0).unwrap();
        let valid = PixelMask::all(10, 10).unwrap();
        let m = compute_metrics(&gt, &gt, &valid, &valid).unwrap();
        assert_eq!(m.epe_all, Some(0.0));
        assert_eq!(m.fl_all, Some(0.0));
        assert_eq!(m.epe_unmatched, None);

        let f = field(10, 10, |i| if i == 42 { (10.0, 8.0) } else { (6.0, 8.0) });
        let m = compute_metrics(&f, &gt, &valid, &valid).unwrap();
        assert_relative_eq!(m.epe_all.unwrap(), 0.04, max_relative = 1e-12);
        assert_relative_eq!(m.fl_all.unwrap(), 1.0, max_relative = 1e-12);
        // |gt| = 10 falls in the middle bin
        assert_eq!(m.s0_10, None);
        assert_relative_eq!(m.s10_40.unwrap(), 0.04, max_relative = 1e-12);

        // exactly 3 px is not an outlier
        let f = field(10, 10, |i| if i == 0 { (9.0, 8.0) } else { (6.0, 8.0) });
        let m = compute_metrics(&f, &gt, &valid, &valid).unwrap();
        assert_eq!(m.fl_all, Some(0.0));
    }

    #[test]
    fn metrics_split_by_occlusion_and_magnitude() {
        let gt = FlowField::new(1, 4, vec![1.0, 20.0, 50.0, 0.0], vec![0.0; 4]).unwrap();
        let f = FlowField::new(1, 4, vec![2.0, 20.0, 60.0, 0.0], vec![0.0; 4]).unwrap();
        let valid = PixelMask::new(1, 4, vec![true, true, true, false]).unwrap();
        let noc = PixelMask::new(1, 4, vec![true, false, false, true]).unwrap();
        let m = compute_metrics(&f, &gt, &valid, &noc).unwrap();
        assert_relative_eq!(m.epe_all.unwrap(), 11.0 / 3.0);
        assert_eq!(m.epe_matched, Some(1.0));
        assert_eq!(m.epe_unmatched, Some(5.0));
        assert_relative_eq!(m.fl_all.unwrap(), 100.0 / 3.0);
        assert_eq!(m.fl_noc, Some(0.0));
        assert_eq!((m.s0_10, m.s10_40, m.s40plus), (Some(1.0), Some(0.0), Some(10.0)));
    }

    #[test]
    fn metrics_table_format() {
        let m = FlowMetrics {
            epe_all: Some(0.04),
            fl_all: Some(1.0),
            ..Default::default()
        };
        let text = m.to_string();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 8);
        assert_eq!(lines[0], "epe_all 0.0400");
        assert_eq!(lines[1], "epe_matched n/a");
        assert_eq!(lines[3], "fl_all 1.0000");
    }

    #[test]
    fn improvement_examples() {
        assert_eq!(improvement_pct(4.88, 4.15).unwrap(), 15.0);
        assert_eq!(improvement_pct(1.374, 1.232).unwrap(), 10.3);
        assert_eq!(improvement_pct(0.184, 0.142).unwrap(), 22.8);
        assert!(improvement_pct(0.0, 1.0).is_err());
        assert!(improvement_pct(-1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn robust_loss_grows_with_residual_scale(
            res in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 6),
            s in 1.01f64..4.0,
        ) {
            prop_assume!(res.iter().any(|&(a, b)| a != 0.0 || b != 0.0));
            let gt = FlowField::zeros(2, 3).unwrap();
            let valid = PixelMask::all(2, 3).unwrap();
            let f = field(2, 3, |i| res[i]);
            let fs = f.scaled(s);
            let a = robust_sample_loss(&f, &gt, &valid, 0.7, 0.01).unwrap();
            let b = robust_sample_loss(&fs, &gt, &valid, 0.7, 0.01).unwrap();
            prop_assert!(b > a);
        }

        #[test]
        fn robust_loss_monotone_per_component(
            res in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 6),
            k in 0usize..6,
            grow in 0.0f64..3.0,
        ) {
            let gt = FlowField::zeros(2, 3).unwrap();
            let valid = PixelMask::all(2, 3).unwrap();
            let f = field(2, 3, |i| res[i]);
            let g = field(2, 3, |i| {
                let (u, v) = res[i];
                if i == k { (u + grow * if u < 0.0 { -1.0 } else { 1.0 }, v) } else { (u, v) }
            });
            let a = robust_sample_loss(&f, &gt, &valid, 0.7, 0.01).unwrap();
            let b = robust_sample_loss(&g, &gt, &valid, 0.7, 0.01).unwrap();
            prop_assert!(b >= a);
        }

        #[test]
        fn metrics_are_permutation_invariant(
            px in proptest::collection::vec(
                ((-20.0f64..20.0, -20.0f64..20.0), (-50.0f64..50.0, -50.0f64..50.0), any::<bool>(), any::<bool>()),
                12,
            ),
            rot in 0usize..12,
        ) {
            let build = |order: &[usize]| {
                let f = field(3, 4, |i| px[order[i]].0);
                let gt = field(3, 4, |i| px[order[i]].1);
                let valid = PixelMask::new(3, 4, order.iter().map(|&j| px[j].2).collect()).unwrap();
                let noc = PixelMask::new(3, 4, order.iter().map(|&j| px[j].3).collect()).unwrap();
                compute_metrics(&f, &gt, &valid, &noc).unwrap()
            };
            let id: Vec<usize> = (0..12).collect();
            let mut perm: Vec<usize> = (0..12).rev().collect();
            perm.rotate_left(rot);
            let (a, b) = (build(&id), build(&perm));
            for ((_, x), (_, y)) in a.entries().into_iter().zip(b.entries()) {
                match (x, y) {
                    (Some(x), Some(y)) => prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0)),
                    (x, y) => prop_assert_eq!(x, y),
                }
            }
            if let Some(epe) = a.epe_all {
                let errs: Vec<f64> = (0..12)
                    .filter(|&i| px[i].2)
                    .map(|i| (px[i].0.0 - px[i].1.0).hypot(px[i].0.1 - px[i].1.1))
                    .collect();
                let lo = errs.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = errs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                prop_assert!(epe >= lo - 1e-12 && epe <= hi + 1e-12);
            }
        }

        #[test]
        fn improvement_sign_follows_direction(old in 0.01f64..100.0, d in 0.0f64..50.0) {
            prop_assert_eq!(improvement_pct(old, old).unwrap(), 0.0);
            prop_assert!(improvement_pct(old, old + d).unwrap() <= 0.0);
            prop_assert!(improvement_pct(old, (old - d).max(0.0)).unwrap() >= 0.0);
            prop_assert_eq!(
                improvement_pct(old, old + d).unwrap(),
                -improvement_pct(old, old - d).unwrap()
            );
        }
    }
}
