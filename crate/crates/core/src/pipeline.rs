//! Coarse-to-fine recurrent estimation.
//!
//! Flow is estimated first at the coarsest scale, refined by a shared
//! [`UpdateOperator`] for `T_s` iterations per scale, then carried to the
//! next scale with [`convex_upsample2`]. The finest scale sits at half the
//! image resolution and one last ×2 convex upsampling yields full-resolution
//! flow. Every iteration reads its costs through
//! [`lookup_on_demand`], so no all-pairs volume is ever built.

use crate::correlation::{lookup_on_demand, max_levels, CostFeatures, FeaturePyramid};
use crate::error::{check_dims, Error, Result};
use crate::flowcore::{avg_pool2, scale_flow, FeatureMap, FlowField};
use crate::upsample::{convex_upsample2, warm_start_init, ConvexMask, WarmStartState};

/// Recurrent iterations per scale, coarsest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IterationSchedule(Vec<usize>);

impl IterationSchedule {
    /// Iterations used while training: 4, 5, 5, 6.
    pub fn training() -> Self {
        Self(vec![4, 5, 5, 6])
    }

    /// Iterations used for inference on every benchmark: 4, 6, 5, 10.
    pub fn inference() -> Self {
        Self(vec![4, 6, 5, 10])
    }

    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() || counts.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "iteration schedule {counts:?} needs at least one scale and counts >= 1"
            )));
        }
        Ok(Self(counts))
    }

    pub fn counts(&self) -> &[usize] {
        &self.0
    }

    pub fn scales(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

/// Everything one scale of the estimator reads.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleLevel {
    pub features1: FeatureMap,
    pub pyramid2: FeaturePyramid,
    pub context: FeatureMap,
}

impl ScaleLevel {
    pub fn dims(&self) -> (usize, usize) {
        self.features1.dims()
    }
}

/// Per-scale inputs, coarsest first, with resolutions doubling scale to
/// scale and the finest at half the image resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleInputs {
    levels: Vec<ScaleLevel>,
    image_dims: (usize, usize),
}

impl ScaleInputs {
    pub fn new(levels: Vec<ScaleLevel>, image_h: usize, image_w: usize) -> Result<Self> {
        let Some(finest) = levels.last() else {
            return Err(Error::InvalidArgument("no scales supplied".into()));
        };
        check_dims("finest scale", (image_h / 2, image_w / 2), finest.dims())?;
        if !image_h.is_multiple_of(2) || !image_w.is_multiple_of(2) {
            return Err(Error::InvalidDimensions(format!(
                "image {image_h}x{image_w} is not even"
            )));
        }
        for (s, lv) in levels.iter().enumerate() {
            check_dims("frame-2 features", lv.dims(), lv.pyramid2.level(0).dims())?;
            check_dims("context features", lv.dims(), lv.context.dims())?;
            if lv.features1.channels() != lv.pyramid2.channels() {
                return Err(Error::ChannelMismatch {
                    left: lv.features1.channels(),
                    right: lv.pyramid2.channels(),
                });
            }
            if s > 0 {
                let (h, w) = levels[s - 1].dims();
                check_dims("scale resolution", (2 * h, 2 * w), lv.dims())?;
            }
        }
        Ok(Self {
            levels,
            image_dims: (image_h, image_w),
        })
    }

    pub fn levels(&self) -> &[ScaleLevel] {
        &self.levels
    }

    pub fn scales(&self) -> usize {
        self.levels.len()
    }

    pub fn image_dims(&self) -> (usize, usize) {
        self.image_dims
    }

    pub fn coarsest_dims(&self) -> (usize, usize) {
        self.levels[0].dims()
    }
}

/// The recurrent refinement unit: maps cost features, the current flow and
/// context features to a flow increment of the same size.
///
/// One instance is shared by every scale and iteration.
pub trait UpdateOperator: Send + Sync {
    fn update(&self, costs: &CostFeatures, flow: &FlowField, context: &FeatureMap) -> Result<FlowField>;
}

/// Source of the convex weights used for each ×2 upsampling.
pub trait MaskProvider: Send + Sync {
    fn mask(&self, flow: &FlowField, context: &FeatureMap) -> Result<ConvexMask>;
}

/// Equal weights over every 3×3 neighbourhood.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformMasks;

impl MaskProvider for UniformMasks {
    fn mask(&self, flow: &FlowField, _context: &FeatureMap) -> Result<ConvexMask> {
        ConvexMask::uniform(flow.height(), flow.width())
    }
}

/// Costs closer than this to the window maximum count as tied.
pub const ARGMAX_TIE_TOLERANCE: f64 = 1e-9;

/// Deterministic stand-in for the learned update unit.
///
/// Per pixel it moves the flow by the level-0 offset with the highest cost;
/// ties go to the smallest offset norm, then to row-major order, so a flat
/// window yields no motion. Context is ignored.
///
/// With `snap_to_grid` the updated flow is additionally rounded to whole
/// pixels of the current scale (ties toward +∞). Integer offsets alone can
/// never remove the fractional part a convex upsampling introduces; snapping
/// lets later scales land exactly on integer correspondences.
///
/// With `min_cost` a pixel only moves when its best cost reaches the
/// threshold. Costs from [`extract_features`] are normalized
/// cross-correlations in `[-1, 1]`, so the default 0.8 keeps coarse scales
/// from chasing sub-pixel motion they cannot represent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArgmaxUpdater {
    pub snap_to_grid: bool,
    pub min_cost: Option<f64>,
}

/// Default confidence gate of [`ArgmaxUpdater`].
pub const DEFAULT_MIN_COST: f64 = 0.8;

impl Default for ArgmaxUpdater {
    fn default() -> Self {
        Self {
            snap_to_grid: true,
            min_cost: Some(DEFAULT_MIN_COST),
        }
    }
}

impl ArgmaxUpdater {
    /// Index of the winning entry in one `(2r+1)²` window.
    pub fn best_offset(window: &[f64], radius: usize) -> usize {
        let side = 2 * radius + 1;
        let r = radius as i64;
        let norm2 = |k: usize| {
            let (dx, dy) = ((k % side) as i64 - r, (k / side) as i64 - r);
            dx * dx + dy * dy
        };
        let max = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tol = ARGMAX_TIE_TOLERANCE * max.abs().max(1.0);
        (0..window.len())
            .filter(|&k| window[k] >= max - tol)
            .min_by_key(|&k| (norm2(k), k))
            .expect("non-empty window")
    }
}

impl UpdateOperator for ArgmaxUpdater {
    fn update(&self, costs: &CostFeatures, flow: &FlowField, _context: &FeatureMap) -> Result<FlowField> {
        check_dims("cost features", flow.dims(), costs.dims())?;
        let (h, w) = flow.dims();
        let r = costs.radius();
        FlowField::from_fn(h, w, |y, x| {
            let win = costs.window(y, x, 0);
            let k = Self::best_offset(win, r);
            let (dx, dy) = match self.min_cost {
                Some(t) if win[k] < t => (0, 0),
                _ => costs.offset(k),
            };
            let (dx, dy) = (dx as f64, dy as f64);
            if self.snap_to_grid {
                let (u, v) = flow.get(y, x);
                ((u + dx + 0.5).floor() - u, (v + dy + 0.5).floor() - v)
            } else {
                (dx, dy)
            }
        })
    }
}

/// Shape parameters of [`extract_features`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureConfig {
    /// Number of estimation scales; the coarsest sits at `1 / 2^scales`.
    pub scales: usize,
    /// Requested correlation pyramid depth, capped per scale so the
    /// coarsest pooled map keeps at least one cell.
    pub levels: usize,
    /// Half-width of the square patch each descriptor summarises.
    pub patch_radius: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            scales: 4,
            levels: 4,
            patch_radius: 2,
        }
    }
}

impl FeatureConfig {
    pub fn descriptor_channels(&self, image_channels: usize) -> usize {
        let side = 2 * self.patch_radius + 1;
        image_channels * side * side
    }
}

/// Zero-mean patch descriptors of an intensity grid.
///
/// Every pixel gets the `(2p+1)²` neighbourhood of each channel (borders
/// replicate), minus its mean. The vector is scaled to squared length
/// `√D` for `D` descriptor channels, so the correlation cost `⟨a, b⟩ / √D`
/// of two descriptors is exactly their normalised cross-correlation. Flat
/// patches give the zero vector.
pub fn patch_descriptors(image: &FeatureMap, patch_radius: usize) -> FeatureMap {
    let (h, w) = image.dims();
    let c = image.channels();
    let side = 2 * patch_radius + 1;
    let k = side * side;
    let dc = c * k;
    let p = patch_radius as i64;
    let mut data = vec![0.0; dc * h * w];
    let mut patch = vec![0.0; dc];
    for y in 0..h {
        for x in 0..w {
            for ch in 0..c {
                for (i, (dy, dx)) in (-p..=p).flat_map(|dy| (-p..=p).map(move |dx| (dy, dx))).enumerate() {
                    let sy = (y as i64 + dy).clamp(0, h as i64 - 1) as usize;
                    let sx = (x as i64 + dx).clamp(0, w as i64 - 1) as usize;
                    patch[ch * k + i] = image.get(ch, sy, sx);
                }
            }
            let mean = patch.iter().sum::<f64>() / dc as f64;
            patch.iter_mut().for_each(|v| *v -= mean);
            let norm = patch.iter().map(|v| v * v).sum::<f64>().sqrt();
            let scale = if norm > 1e-12 {
                (dc as f64).powf(0.25) / norm
            } else {
                0.0
            };
            for (i, v) in patch.iter().enumerate() {
                data[(i * h + y) * w + x] = v * scale;
            }
        }
    }
    FeatureMap::from_parts(dc, h, w, data)
}

/// Deterministic feature encoder standing in for a learned one.
///
/// Both images are average-pooled down a `/2, /4, …, /2^scales` ladder and
/// each pooled level is turned into [`patch_descriptors`]. Context features
/// are a copy of the frame-1 features. Images must share size and channel
/// count, with both sides divisible by `2^scales`.
pub fn extract_features(image1: &FeatureMap, image2: &FeatureMap, config: &FeatureConfig) -> Result<ScaleInputs> {
    if image1.channels() != image2.channels() {
        return Err(Error::ChannelMismatch {
            left: image1.channels(),
            right: image2.channels(),
        });
    }
    check_dims("second image", image1.dims(), image2.dims())?;
    if config.scales == 0 || config.levels == 0 {
        return Err(Error::InvalidArgument(
            "feature extraction needs scales >= 1 and levels >= 1".into(),
        ));
    }
    let (h, w) = image1.dims();
    let factor = 1usize << config.scales;
    if h % factor != 0 || w % factor != 0 {
        return Err(Error::InvalidDimensions(format!(
            "image {h}x{w} must be divisible by {factor}; pad it first"
        )));
    }
    let mut pooled1 = Vec::with_capacity(config.scales);
    let mut pooled2 = Vec::with_capacity(config.scales);
    let (mut a, mut b) = (image1.clone(), image2.clone());
    for _ in 0..config.scales {
        a = avg_pool2(&a);
        b = avg_pool2(&b);
        pooled1.push(a.clone());
        pooled2.push(b.clone());
    }
    // finest first in the pooled lists; scales run coarsest first
    let mut levels = Vec::with_capacity(config.scales);
    for (p1, p2) in pooled1.iter().zip(&pooled2).rev() {
        let f1 = patch_descriptors(p1, config.patch_radius);
        let f2 = patch_descriptors(p2, config.patch_radius);
        let depth = config.levels.min(max_levels(f2.height(), f2.width()));
        levels.push(ScaleLevel {
            context: f1.clone(),
            features1: f1,
            pyramid2: FeaturePyramid::new(f2, depth)?,
        });
    }
    ScaleInputs::new(levels, h, w)
}

/// The flows one scale went through.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleTrace {
    /// Flow the scale started from (zero/warm init or the upsampled result
    /// of the previous scale).
    pub init: FlowField,
    /// Flow after each update, in order.
    pub iterates: Vec<FlowField>,
}

/// Every intermediate flow plus the full-resolution result.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateTrace {
    pub scales: Vec<ScaleTrace>,
    pub final_flow: FlowField,
}

impl EstimateTrace {
    /// Total number of recorded iterates.
    pub fn len(&self) -> usize {
        self.scales.iter().map(|s| s.iterates.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Last iterate of scale `s`.
    pub fn scale_result(&self, s: usize) -> &FlowField {
        let sc = &self.scales[s];
        sc.iterates.last().unwrap_or(&sc.init)
    }
}

/// Runs the coarse-to-fine loop.
///
/// Per scale: `T_s` rounds of on-demand lookup, update and accumulation;
/// after every scale (including the finest) one convex ×2 upsampling.
pub fn estimate(
    inputs: &ScaleInputs,
    schedule: &IterationSchedule,
    updater: &dyn UpdateOperator,
    masks: &dyn MaskProvider,
    init: &FlowField,
    radius: usize,
) -> Result<EstimateTrace> {
    if schedule.scales() != inputs.scales() {
        return Err(Error::InvalidArgument(format!(
            "schedule has {} scales, inputs have {}",
            schedule.scales(),
            inputs.scales()
        )));
    }
    check_dims("initial flow", inputs.coarsest_dims(), init.dims())?;
    if !init.is_finite() {
        return Err(Error::NonFinite("initial flow"));
    }
    let mut flow = init.clone();
    let mut scales = Vec::with_capacity(inputs.scales());
    for (s, (level, &iters)) in inputs.levels().iter().zip(schedule.counts()).enumerate() {
        let start = flow.clone();
        let mut iterates = Vec::with_capacity(iters);
        for i in 0..iters {
            let costs = lookup_on_demand(&level.features1, &level.pyramid2, &flow, radius)?;
            let delta = updater.update(&costs, &flow, &level.context)?;
            check_dims("flow update", flow.dims(), delta.dims())?;
            flow = flow.add(&delta)?;
            if !flow.is_finite() {
                return Err(Error::NumericFailure {
                    scale: s + 1,
                    iteration: i + 1,
                });
            }
            iterates.push(flow.clone());
        }
        scales.push(ScaleTrace { init: start, iterates });
        let mask = masks.mask(&flow, &level.context)?;
        flow = convex_upsample2(&flow, &mask)?;
    }
    Ok(EstimateTrace {
        scales,
        final_flow: flow,
    })
}

/// Settings for running [`estimate_sequence`].
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceConfig {
    pub features: FeatureConfig,
    pub schedule: IterationSchedule,
    pub radius: usize,
    pub warm_start: bool,
}

impl Default for SequenceConfig {
    fn default() -> Self {
        Self {
            features: FeatureConfig::default(),
            schedule: IterationSchedule::inference(),
            radius: 4,
            warm_start: false,
        }
    }
}

/// Result of one consecutive frame pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairEstimate {
    /// Full-resolution initialisation handed to the estimator (before it is
    /// resized to the coarsest scale).
    pub init: FlowField,
    /// Pair whose zero-initialised flow was forward-warped into `init`.
    pub warm_source: Option<usize>,
    pub trace: EstimateTrace,
    /// Final flow of the same pair started from zero; the only flow a
    /// following pair may warm-start from.
    pub cold_flow: FlowField,
}

impl PairEstimate {
    pub fn flow(&self) -> &FlowField {
        &self.trace.final_flow
    }
}

/// Estimates every consecutive pair of `frames`.
///
/// With warm starts on, pair `k > 0` is initialised by forward-warping the
/// zero-initialised flow of pair `k - 1` only (no recursion through
/// earlier pairs); pair 0 always starts from zero.
pub fn estimate_sequence(
    frames: &[FeatureMap],
    config: &SequenceConfig,
    updater: &dyn UpdateOperator,
    masks: &dyn MaskProvider,
) -> Result<Vec<PairEstimate>> {
    if frames.len() < 2 {
        return Err(Error::InvalidArgument("a sequence needs at least two frames".into()));
    }
    let mut out: Vec<PairEstimate> = Vec::with_capacity(frames.len() - 1);
    for (k, pair) in frames.windows(2).enumerate() {
        let inputs = extract_features(&pair[0], &pair[1], &config.features)?;
        let (h, w) = inputs.image_dims();
        let (ch, cw) = inputs.coarsest_dims();
        let zero = FlowField::zeros(h, w)?;
        let cold = estimate(
            &inputs,
            &config.schedule,
            updater,
            masks,
            &FlowField::zeros(ch, cw)?,
            config.radius,
        )?;
        let previous = if config.warm_start && k > 0 { Some(k - 1) } else { None };
        let record = match previous {
            None => PairEstimate {
                init: zero,
                warm_source: None,
                cold_flow: cold.final_flow.clone(),
                trace: cold,
            },
            Some(src) => {
                let state = WarmStartState::Previous(out[src].cold_flow.clone());
                let init = warm_start_init(&state, h, w)?;
                let coarse = scale_flow(&init, ch, cw)?;
                let trace = estimate(&inputs, &config.schedule, updater, masks, &coarse, config.radius)?;
                PairEstimate {
                    init,
                    warm_source: Some(src),
                    cold_flow: cold.final_flow,
                    trace,
                }
            }
        };
        out.push(record);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn window_with(radius: usize, entries: &[((i64, i64), f64)]) -> Vec<f64> {
        let side = 2 * radius + 1;
        let mut w = vec![0.0; side * side];
        for &((dx, dy), v) in entries {
            let k = (dy + radius as i64) as usize * side + (dx + radius as i64) as usize;
            w[k] = v;
        }
        w
    }

    fn offset_of(k: usize, radius: usize) -> (i64, i64) {
        let side = 2 * radius + 1;
        ((k % side) as i64 - radius as i64, (k / side) as i64 - radius as i64)
    }

    #[test]
    fn presets_match_published_counts() {
        assert_eq!(IterationSchedule::training().counts(), &[4, 5, 5, 6]);
        assert_eq!(IterationSchedule::inference().counts(), &[4, 6, 5, 10]);
        assert_eq!(IterationSchedule::training().total(), 20);
        assert_eq!(IterationSchedule::inference().total(), 25);
        assert!(IterationSchedule::new(vec![1, 0, 2]).is_err());
        assert!(IterationSchedule::new(vec![]).is_err());
    }

    #[test]
    fn argmax_at_centre() {
        let w = window_with(2, &[((0, 0), 3.0), ((1, 1), 2.0)]);
        assert_eq!(offset_of(ArgmaxUpdater::best_offset(&w, 2), 2), (0, 0));
    }

    #[test]
    fn argmax_unique_off_centre() {
        let w = window_with(3, &[((-2, 1), 0.9), ((0, 0), 0.5), ((3, 3), 0.89)]);
        // brute-force scan
        let k = (0..w.len()).max_by(|&a, &b| w[a].partial_cmp(&w[b]).unwrap()).unwrap();
        assert_eq!(offset_of(k, 3), (-2, 1));
        assert_eq!(offset_of(ArgmaxUpdater::best_offset(&w, 3), 3), (-2, 1));
    }

    #[test]
    fn argmax_flat_window_stays() {
        let w = vec![0.25; 81];
        assert_eq!(offset_of(ArgmaxUpdater::best_offset(&w, 4), 4), (0, 0));
    }

    #[test]
    fn argmax_ties_prefer_small_norm_then_row_major() {
        let w = window_with(2, &[((2, 0), 1.0), ((0, -1), 1.0), ((1, 0), 1.0)]);
        assert_eq!(offset_of(ArgmaxUpdater::best_offset(&w, 2), 2), (0, -1));
    }

    #[test]
    fn snapping_rounds_updated_flow() {
        let r = 1;
        let mut data = vec![0.0; 9];
        data[5] = 1.0; // offset (1, 0)
        let costs = CostFeatures::new(1, 1, 1, r, data).unwrap();
        let flow = FlowField::new(1, 1, vec![0.7], vec![-0.2]).unwrap();
        let ctx = FeatureMap::zeros(1, 1, 1).unwrap();
        let d = ArgmaxUpdater {
            snap_to_grid: false,
            min_cost: None,
        }
        .update(&costs, &flow, &ctx)
        .unwrap();
        assert_eq!(d.get(0, 0), (1.0, 0.0));
        let d = ArgmaxUpdater {
            snap_to_grid: true,
            min_cost: None,
        }
        .update(&costs, &flow, &ctx)
        .unwrap();
        let (u, v) = flow.add(&d).unwrap().get(0, 0);
        assert!((u - 2.0).abs() < 1e-12 && v.abs() < 1e-12);
    }

    #[test]
    fn ladder_for_32x32() {
        let img = FeatureMap::from_fn(1, 32, 32, |_, y, x| ((x * 7 + y * 3) % 5) as f64).unwrap();
        let inputs = extract_features(&img, &img, &FeatureConfig::default()).unwrap();
        let dims: Vec<_> = inputs.levels().iter().map(|l| l.dims()).collect();
        assert_eq!(dims, vec![(2, 2), (4, 4), (8, 8), (16, 16)]);
        let depths: Vec<_> = inputs.levels().iter().map(|l| l.pyramid2.num_levels()).collect();
        assert_eq!(depths, vec![2, 3, 4, 4]);
    }

    #[test]
    fn constant_image_gives_constant_features() {
        let img = FeatureMap::from_fn(1, 32, 16, |_, _, _| 0.4).unwrap();
        let inputs = extract_features(&img, &img, &FeatureConfig::default()).unwrap();
        for lv in inputs.levels() {
            let first = lv.features1.data()[0];
            assert!(lv.features1.data().iter().all(|&v| v == first));
        }
    }

    #[test]
    fn impulse_shift_preserved_at_every_scale() {
        // one-hot at (16, 16) in frame 1 and at (32, 48) in frame 2: the shift
        // (16, 32) is a whole number of cells at every scale
        let img1 = FeatureMap::from_fn(1, 64, 64, |_, y, x| f64::from(y == 16 && x == 16)).unwrap();
        let img2 = FeatureMap::from_fn(1, 64, 64, |_, y, x| f64::from(y == 32 && x == 48)).unwrap();
        let inputs = extract_features(&img1, &img2, &FeatureConfig::default()).unwrap();
        for (s, lv) in inputs.levels().iter().enumerate() {
            let f = 1usize << (4 - s);
            let (sy, sx) = (16 / f, 32 / f);
            let f2 = lv.pyramid2.level(0);
            let (h, w) = lv.dims();
            for y in 0..h {
                for x in 0..w {
                    if y + sy < h && x + sx < w && y >= 2 && x >= 2 && y + sy + 2 < h && x + sx + 2 < w {
                        assert_eq!(lv.features1.pixel(y, x), f2.pixel(y + sy, x + sx), "scale {s}");
                    }
                }
            }
        }
    }

    #[test]
    fn feature_extraction_validates_inputs() {
        let a = FeatureMap::zeros(1, 24, 32).unwrap();
        assert!(matches!(
            extract_features(&a, &a, &FeatureConfig::default()),
            Err(Error::InvalidDimensions(_))
        ));
        let b = FeatureMap::zeros(3, 32, 32).unwrap();
        let c = FeatureMap::zeros(1, 32, 32).unwrap();
        assert!(extract_features(&b, &c, &FeatureConfig::default()).is_err());
    }

    #[test]
    fn identical_frames_give_zero_flow() {
        let img =
            FeatureMap::from_fn(1, 32, 32, |_, y, x| (((x * 31 + y * 17) * 2654435761usize) % 97) as f64).unwrap();
        let inputs = extract_features(&img, &img, &FeatureConfig::default()).unwrap();
        let (h, w) = inputs.coarsest_dims();
        let trace = estimate(
            &inputs,
            &IterationSchedule::inference(),
            &ArgmaxUpdater::default(),
            &UniformMasks,
            &FlowField::zeros(h, w).unwrap(),
            4,
        )
        .unwrap();
        assert_eq!(trace.len(), 25);
        assert_eq!(trace.final_flow, FlowField::zeros(32, 32).unwrap());
    }

    struct Explode;
    impl UpdateOperator for Explode {
        fn update(&self, _: &CostFeatures, flow: &FlowField, _: &FeatureMap) -> Result<FlowField> {
            let (h, w) = flow.dims();
            Ok(FlowField::from_parts(
                h,
                w,
                vec![f64::INFINITY; h * w],
                vec![0.0; h * w],
            ))
        }
    }

    #[test]
    fn non_finite_update_reports_position() {
        let img = FeatureMap::zeros(1, 32, 32).unwrap();
        let inputs = extract_features(&img, &img, &FeatureConfig::default()).unwrap();
        let err = estimate(
            &inputs,
            &IterationSchedule::training(),
            &Explode,
            &UniformMasks,
            &FlowField::zeros(2, 2).unwrap(),
            4,
        )
        .unwrap_err();
        assert_eq!(err, Error::NumericFailure { scale: 1, iteration: 1 });
    }

    #[test]
    fn init_dims_checked() {
        let img = FeatureMap::zeros(1, 32, 32).unwrap();
        let inputs = extract_features(&img, &img, &FeatureConfig::default()).unwrap();
        let res = estimate(
            &inputs,
            &IterationSchedule::training(),
            &ArgmaxUpdater::default(),
            &UniformMasks,
            &FlowField::zeros(4, 4).unwrap(),
            4,
        );
        assert!(matches!(res, Err(Error::DimensionMismatch { .. })));
    }
}
