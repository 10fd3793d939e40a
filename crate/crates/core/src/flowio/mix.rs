use std::fmt;
use std::str::FromStr;

use rand_core::{Rng, SeedableRng};
use rand_pcg::Pcg64;

use crate::error::{Error, Result};

/// Named datasets with the fraction of training samples drawn from each.
#[derive(Debug, Clone, PartialEq)]
pub struct MixSpec {
    entries: Vec<(String, f64)>,
}

impl MixSpec {
    /// Proportions must be finite, non-negative and sum to 1 within 1e-9.
    pub fn new(entries: Vec<(String, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("mixing spec is empty".into()));
        }
        if let Some((name, p)) = entries.iter().find(|(_, p)| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidArgument(format!("proportion {p} for {name}")));
        }
        let total: f64 = entries.iter().map(|(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("proportions sum to {total}, not 1")));
        }
        Ok(Self { entries })
    }

    /// Fine-tuning mixture: Sintel 30%, VIPER 30%, KITTI 28%, Things 10%, HD1K 2%.
    pub fn rvc_default() -> Self {
        let e = [
            ("sintel", 0.30),
            ("viper", 0.30),
            ("kitti", 0.28),
            ("things", 0.10),
            ("hd1k", 0.02),
        ];
        Self::new(e.iter().map(|(n, p)| (n.to_string(), *p)).collect()).expect("valid default")
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Parses `name=p,name=p,…`.
impl FromStr for MixSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, p) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("expected name=proportion, got {part:?}")))?;
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad proportion in {part:?}")))?;
            entries.push((name.trim().to_string(), p));
        }
        Self::new(entries)
    }
}

impl fmt::Display for MixSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (n, p)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{n}={p}")?;
        }
        Ok(())
    }
}

/// Seeded i.i.d. draws of dataset indices.
///
/// The generator is PCG-64 (XSL-RR 128/64) seeded with
/// `Pcg64::seed_from_u64`. Each draw takes one 64-bit output, keeps its top
/// 53 bits as a uniform `u ∈ [0, 1)` and picks the first dataset whose
/// cumulative proportion exceeds `u`. Cloning forks the stream.
#[derive(Debug, Clone)]
pub struct MixSampler {
    cumulative: Vec<f64>,
    last_positive: usize,
    rng: Pcg64,
}

impl MixSampler {
    pub fn new(spec: &MixSpec, seed: u64) -> Self {
        let mut acc = 0.0;
        let cumulative = spec
            .entries
            .iter()
            .map(|(_, p)| {
                acc += p;
                acc
            })
            .collect();
        let last_positive = spec.entries.iter().rposition(|(_, p)| *p > 0.0).unwrap_or(0);
        Self {
            cumulative,
            last_positive,
            rng: Pcg64::seed_from_u64(seed),
        }
    }

    /// Index into the spec of the next draw.
    pub fn next_index(&mut self) -> usize {
        let u = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        self.cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.last_positive)
    }
}

/// `n` dataset names drawn from `spec`.
pub fn mix_sampler(spec: &MixSpec, seed: u64, n: usize) -> Vec<String> {
    let mut s = MixSampler::new(spec, seed);
    (0..n).map(|_| spec.entries[s.next_index()].0.clone()).collect()
}

/// Keeps every tenth frame: indices divisible by 10.
pub fn viper_frame_filter(indices: &[usize]) -> Vec<usize> {
    indices.iter().copied().filter(|i| i % 10 == 0).collect()
}
