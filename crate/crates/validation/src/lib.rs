//! Instrumentation shared by the acceptance suite: call-counting wrappers
//! around the estimator's pluggable parts and synthetic frame sequences
//! with known motion.

use std::sync::atomic::{AtomicUsize, Ordering};

use msraft::correlation::CostFeatures;
use msraft::flowcore::{FeatureMap, FlowField};
use msraft::pipeline::{MaskProvider, UpdateOperator};
use msraft::synthetic::smooth_texture;
use msraft::upsample::ConvexMask;

/// Forwards to an inner updater and counts calls.
pub struct CountingUpdater<U> {
    pub inner: U,
    calls: AtomicUsize,
}

impl<U> CountingUpdater<U> {
    pub fn new(inner: U) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<U: UpdateOperator> UpdateOperator for CountingUpdater<U> {
    fn update(&self, costs: &CostFeatures, flow: &FlowField, context: &FeatureMap) -> msraft::Result<FlowField> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.update(costs, flow, context)
    }
}

/// Forwards to an inner mask provider and counts requests. The estimator
/// asks for exactly one mask per ×2 upsampling.
pub struct CountingMasks<M> {
    pub inner: M,
    calls: AtomicUsize,
}

impl<M> CountingMasks<M> {
    pub fn new(inner: M) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl<M: MaskProvider> MaskProvider for CountingMasks<M> {
    fn mask(&self, flow: &FlowField, context: &FeatureMap) -> msraft::Result<ConvexMask> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.mask(flow, context)
    }
}

/// `frames` crops of one texture, frame `k` moved by `k·t`:
/// `frame_k(y + k·tv, x + k·tu) = frame_0(y, x)`.
pub fn translating_sequence(
    height: usize,
    width: usize,
    translation: (i64, i64),
    frames: usize,
    seed: u64,
) -> msraft::Result<Vec<FeatureMap>> {
    let (tu, tv) = translation;
    let span = frames.saturating_sub(1) as i64;
    let margin = (tu.abs().max(tv.abs()) * span) as usize;
    let tex = smooth_texture(height + 2 * margin, width + 2 * margin, seed)?;
    let m = margin as i64;
    (0..frames as i64)
        .map(|k| {
            FeatureMap::from_fn(1, height, width, |_, y, x| {
                tex.get(0, (y as i64 + m - k * tv) as usize, (x as i64 + m - k * tu) as usize)
            })
        })
        .collect()
}
