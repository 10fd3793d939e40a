//! Seeded test imagery with known motion.

use rand_core::{Rng, SeedableRng};
use rand_pcg::Pcg64;

use crate::error::{Error, Result};
use crate::flowcore::FeatureMap;

/// Lattice spacing and amplitude of each noise octave.
const OCTAVES: [(usize, f64); 5] = [(1, 0.15), (2, 0.3), (4, 0.6), (8, 1.0), (16, 1.4)];

/// Multi-octave value noise: random lattice values at spacings 1 to 16,
/// bilinearly interpolated and summed. Smooth enough for coarse scales to
/// see structure, detailed enough for fine scales to localise it.
pub fn smooth_texture(height: usize, width: usize, seed: u64) -> Result<FeatureMap> {
    let mut rng = Pcg64::seed_from_u64(seed);
    let mut img = vec![0.0; height * width];
    for &(step, amp) in &OCTAVES {
        let (gh, gw) = (height / step + 2, width / step + 2);
        let lattice: Vec<f64> = (0..gh * gw)
            .map(|_| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5)
            .collect();
        for y in 0..height {
            for x in 0..width {
                let (fy, fx) = (y as f64 / step as f64, x as f64 / step as f64);
                let (y0, x0) = (fy.floor() as usize, fx.floor() as usize);
                let (ay, ax) = (fy - y0 as f64, fx - x0 as f64);
                let at = |yy: usize, xx: usize| lattice[yy * gw + xx];
                let v = (1.0 - ay) * ((1.0 - ax) * at(y0, x0) + ax * at(y0, x0 + 1))
                    + ay * ((1.0 - ax) * at(y0 + 1, x0) + ax * at(y0 + 1, x0 + 1));
                img[y * width + x] += amp * v;
            }
        }
    }
    FeatureMap::new(1, height, width, img)
}

/// Two `height×width` crops of one texture such that
/// `frame2(y + tv, x + tu) = frame1(y, x)` wherever both sides are in frame.
/// Translations up to `margin` pixels per axis are supported.
pub fn translated_pair(
    height: usize,
    width: usize,
    translation: (i64, i64),
    margin: usize,
    seed: u64,
) -> Result<(FeatureMap, FeatureMap)> {
    let (tu, tv) = translation;
    let m = margin as i64;
    if tu.abs() > m || tv.abs() > m {
        return Err(Error::InvalidArgument(format!(
            "translation ({tu}, {tv}) exceeds margin {margin}"
        )));
    }
    let tex = smooth_texture(height + 2 * margin, width + 2 * margin, seed)?;
    let f1 = FeatureMap::from_fn(1, height, width, |_, y, x| tex.get(0, y + margin, x + margin))?;
    let f2 = FeatureMap::from_fn(1, height, width, |_, y, x| {
        tex.get(0, (y as i64 + m - tv) as usize, (x as i64 + m - tu) as usize)
    })?;
    Ok((f1, f2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_is_an_exact_translation() {
        let (a, b) = translated_pair(20, 24, (3, -2), 8, 1).unwrap();
        for y in 0..20i64 {
            for x in 0..24i64 {
                let (ty, tx) = (y - 2, x + 3);
                if (0..20).contains(&ty) && (0..24).contains(&tx) {
                    assert_eq!(a.get(0, y as usize, x as usize), b.get(0, ty as usize, tx as usize));
                }
            }
        }
    }

    #[test]
    fn texture_is_seeded_and_varied() {
        let a = smooth_texture(16, 16, 4).unwrap();
        assert_eq!(a, smooth_texture(16, 16, 4).unwrap());
        assert_ne!(a, smooth_texture(16, 16, 5).unwrap());
        let mean = a.data().iter().sum::<f64>() / 256.0;
        let var = a.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 256.0;
        assert!(var > 1e-3);
    }

    #[test]
    fn oversized_translation_is_rejected() {
        assert!(translated_pair(8, 8, (9, 0), 8, 0).is_err());
    }
}
