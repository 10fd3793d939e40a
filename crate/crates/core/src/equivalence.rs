//! Seeded comparison of the two correlation lookup paths.
//!
//! Builds random features and sub-pixel flows, evaluates both
//! [`lookup_precomputed`] and [`lookup_on_demand`], and reports the worst
//! disagreement. Used as a self-test by the command-line tool.

use rand_core::{Rng, SeedableRng};
use rand_pcg::Pcg64;

use crate::correlation::{
    build_all_pairs, build_cost_pyramid, lookup_on_demand, lookup_precomputed, Deviation, FeaturePyramid,
};
use crate::error::{Error, Result};
use crate::flowcore::{FeatureMap, FlowField};

/// Shape of the random instances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckConfig {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub levels: usize,
    pub radius: usize,
    /// Flow components are drawn uniformly from `[-max_flow, max_flow]`.
    pub max_flow: f64,
    /// Use frame-1 features for frame 2 and a zero flow.
    pub identical: bool,
    /// Added to one on-demand cost; a non-zero value must make the check fail.
    pub perturb: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            height: 16,
            width: 16,
            channels: 8,
            levels: 4,
            radius: 4,
            max_flow: 6.0,
            identical: false,
            perturb: 0.0,
        }
    }
}

/// Outcome of one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckReport {
    pub deviation: Deviation,
    /// With `identical`, the worst relative gap between the level-0 centre
    /// cost and `‖F1(x)‖² / √C`.
    pub centre_deviation: Option<f64>,
}

fn uniform(rng: &mut Pcg64, lo: f64, hi: f64) -> f64 {
    let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    lo + (hi - lo) * u
}

/// Runs one seeded instance.
pub fn check_instance(config: &CheckConfig, seed: u64) -> Result<CheckReport> {
    let CheckConfig {
        height: h,
        width: w,
        channels: c,
        ..
    } = *config;
    if !(config.max_flow.is_finite() && config.max_flow >= 0.0) {
        return Err(Error::InvalidArgument(format!("max_flow = {}", config.max_flow)));
    }
    let mut rng = Pcg64::seed_from_u64(seed);
    let f1 = FeatureMap::from_fn(c, h, w, |_, _, _| uniform(&mut rng, -1.0, 1.0))?;
    let f2 = if config.identical {
        f1.clone()
    } else {
        FeatureMap::from_fn(c, h, w, |_, _, _| uniform(&mut rng, -1.0, 1.0))?
    };
    let m = config.max_flow;
    let flow = if config.identical {
        FlowField::zeros(h, w)?
    } else {
        FlowField::from_fn(h, w, |_, _| (uniform(&mut rng, -m, m), uniform(&mut rng, -m, m)))?
    };
    let precomputed = lookup_precomputed(
        &build_cost_pyramid(build_all_pairs(&f1, &f2)?, config.levels)?,
        &flow,
        config.radius,
    )?;
    let mut on_demand = lookup_on_demand(&f1, &FeaturePyramid::new(f2, config.levels)?, &flow, config.radius)?;
    if config.perturb != 0.0 {
        on_demand.data_mut()[0] += config.perturb;
    }
    let deviation = on_demand.max_relative_deviation(&precomputed)?;
    let centre_deviation = config.identical.then(|| {
        let centre = on_demand.window_len() / 2;
        let mut worst: f64 = 0.0;
        for y in 0..h {
            for x in 0..w {
                let p = f1.pixel(y, x);
                let expected = p.iter().map(|v| v * v).sum::<f64>() / (c as f64).sqrt();
                let got = on_demand.window(y, x, 0)[centre];
                worst = worst.max((got - expected).abs() / expected.abs().max(1.0));
            }
        }
        worst
    });
    Ok(CheckReport {
        deviation,
        centre_deviation,
    })
}
