//! Reliability-sorted 2D phase unwrapping.
//!
//! Each pixel gets a reliability score (inverse second-difference magnitude),
//! each horizontal/vertical edge the sum of its endpoint scores. Edges are
//! processed in descending reliability order, merging pixel regions with a
//! per-region integer 2-pi offset chosen so the joining edge has no wrap
//! jump. Equal reliabilities break ties by edge enumeration order, which
//! makes the whole pass deterministic.

use crate::field::{wrap_phase, PhaseKind, PhaseMap};
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum UnwrapError {
    #[error("input map is empty")]
    EmptyInput,
    #[error("input map must be wrapped")]
    NotWrapped,
}

/// Per-pixel reliability scores; higher is more reliable.
#[derive(Debug, Clone)]
pub struct ReliabilityMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

/// Second-difference reliability of every pixel, with replicate padding at
/// the borders.
pub fn reliability_map(wrapped: &PhaseMap) -> ReliabilityMap {
    let w = wrapped.width();
    let h = wrapped.height();
    let at = |x: isize, y: isize| {
        let xc = x.clamp(0, w as isize - 1) as usize;
        let yc = y.clamp(0, h as isize - 1) as usize;
        wrapped.get(xc, yc)
    };
    let mut values = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let c = at(x, y);
            let hh = wrap_phase(at(x - 1, y) - c) - wrap_phase(c - at(x + 1, y));
            let vv = wrap_phase(at(x, y - 1) - c) - wrap_phase(c - at(x, y + 1));
            let d1 = wrap_phase(at(x - 1, y - 1) - c) - wrap_phase(c - at(x + 1, y + 1));
            let d2 = wrap_phase(at(x - 1, y + 1) - c) - wrap_phase(c - at(x + 1, y - 1));
            let d = (hh * hh + vv * vv + d1 * d1 + d2 * d2).sqrt();
            values.push(1.0 / (d + 1e-30));
        }
    }
    ReliabilityMap {
        width: w,
        height: h,
        values,
    }
}

/// Union-find over pixels carrying an integer 2-pi multiple per node
/// relative to its parent.
struct Regions {
    parent: Vec<u32>,
    rank: Vec<u8>,
    /// k(node) - k(parent(node)), in units of 2 pi
    delta: Vec<i32>,
}

impl Regions {
    fn new(n: usize) -> Self {
        Regions {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
            delta: vec![0; n],
        }
    }

    /// Returns (root, total offset of `x` relative to the root).
    fn find(&mut self, x: usize) -> (usize, i64) {
        let p = self.parent[x] as usize;
        if p == x {
            return (x, 0);
        }
        let (root, k_parent) = self.find(p);
        let total = k_parent + self.delta[x] as i64;
        self.parent[x] = root as u32;
        self.delta[x] = total as i32;
        (root, total)
    }
}

/// Unwrap a wrapped phase map.
///
/// The output is congruent to the input modulo 2 pi at every pixel, and the
/// pixel with the highest reliability keeps its wrapped value (global offset
/// convention).
pub fn unwrap(wrapped: &PhaseMap) -> Result<PhaseMap, UnwrapError> {
    if wrapped.values().is_empty() {
        return Err(UnwrapError::EmptyInput);
    }
    if wrapped.kind() != PhaseKind::Wrapped {
        return Err(UnwrapError::NotWrapped);
    }
    let w = wrapped.width();
    let h = wrapped.height();
    let n = w * h;
    let rel = reliability_map(wrapped);

    // Edges: all horizontal pairs in scan order, then all vertical pairs.
    // Edge reliability is the sum of the endpoint reliabilities.
    let mut edges: Vec<(f64, u32, u32)> = Vec::with_capacity(2 * n);
    for y in 0..h {
        for x in 0..w.saturating_sub(1) {
            let a = (y * w + x) as u32;
            edges.push((rel.values[a as usize] + rel.values[a as usize + 1], a, a + 1));
        }
    }
    for y in 0..h.saturating_sub(1) {
        for x in 0..w {
            let a = (y * w + x) as u32;
            let b = a + w as u32;
            edges.push((rel.values[a as usize] + rel.values[b as usize], a, b));
        }
    }
    // Stable sort keeps enumeration order for ties.
    edges.sort_by(|p, q| q.0.partial_cmp(&p.0).unwrap_or(std::cmp::Ordering::Equal));

    let mut regions = Regions::new(n);
    let vals = wrapped.values();
    for &(_, a, b) in &edges {
        let (a, b) = (a as usize, b as usize);
        let (ra, ka) = regions.find(a);
        let (rb, kb) = regions.find(b);
        if ra == rb {
            continue;
        }
        // Choose the integer m so that value(a) and value(b)+2*pi*m differ
        // by less than pi.
        let va = vals[a] + TAU * ka as f64;
        let vb = vals[b] + TAU * kb as f64;
        let m = ((va - vb) / TAU).round() as i64;
        // Merge by rank: shifting region b by +m and shifting region a by -m
        // are equivalent up to the global offset fixed at the end.
        if regions.rank[ra] >= regions.rank[rb] {
            regions.parent[rb] = ra as u32;
            regions.delta[rb] = m as i32;
            if regions.rank[ra] == regions.rank[rb] {
                regions.rank[ra] += 1;
            }
        } else {
            regions.parent[ra] = rb as u32;
            regions.delta[ra] = (-m) as i32;
        }
    }

    // Resolve every pixel's integer multiple.
    let mut k = vec![0i64; n];
    for i in 0..n {
        let (_, ki) = regions.find(i);
        k[i] = ki;
    }

    // Global convention: the most reliable pixel keeps its wrapped value.
    let mut anchor = 0usize;
    for i in 1..n {
        if rel.values[i] > rel.values[anchor] {
            anchor = i;
        }
    }
    let k0 = k[anchor];
    let values: Vec<f64> = (0..n)
        .map(|i| vals[i] + TAU * (k[i] - k0) as f64)
        .collect();
    Ok(PhaseMap::new(w, h, values, PhaseKind::Unwrapped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PhaseKind;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn wrap_map(truth: &PhaseMap) -> PhaseMap {
        truth.wrapped()
    }

    /// Max deviation from truth after removing one global 2-pi multiple.
    fn max_error_mod_tau(est: &PhaseMap, truth: &PhaseMap) -> f64 {
        let diff0 = est.values()[0] - truth.values()[0];
        let k = (diff0 / TAU).round();
        est.values()
            .iter()
            .zip(truth.values())
            .map(|(e, t)| (e - t - TAU * k).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn recovers_linear_ramp() {
        let truth = PhaseMap::from_fn(64, 64, PhaseKind::Unwrapped, |x, _| 0.3 * x as f64);
        let un = unwrap(&wrap_map(&truth)).unwrap();
        assert!(max_error_mod_tau(&un, &truth) < 1e-9);
    }

    #[test]
    fn smooth_map_gets_global_offset_only() {
        let truth = PhaseMap::from_fn(32, 32, PhaseKind::Unwrapped, |x, y| {
            0.02 * x as f64 - 0.03 * y as f64 + 1.0
        });
        let un = unwrap(&wrap_map(&truth)).unwrap();
        let d0 = un.values()[0] - truth.values()[0];
        for (u, t) in un.values().iter().zip(truth.values()) {
            assert!((u - t - d0).abs() < 1e-9);
        }
        assert!((d0 / TAU - (d0 / TAU).round()).abs() < 1e-12);
    }

    #[test]
    fn recovers_tall_gaussian_peak() {
        let truth = PhaseMap::from_fn(128, 128, PhaseKind::Unwrapped, |x, y| {
            let dx = (x as f64 - 64.0) / 20.0;
            let dy = (y as f64 - 64.0) / 20.0;
            12.0 * (-0.5 * (dx * dx + dy * dy)).exp()
        });
        let un = unwrap(&wrap_map(&truth)).unwrap();
        assert!(max_error_mod_tau(&un, &truth) < 1e-9);
    }

    #[test]
    fn congruence_on_noisy_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let wrapped = PhaseMap::from_fn(48, 40, PhaseKind::Wrapped, |_, _| {
            wrap_phase(rng.gen_range(-10.0..10.0))
        });
        let un = unwrap(&wrapped).unwrap();
        for (u, w) in un.values().iter().zip(wrapped.values()) {
            assert!(
                wrap_phase(u - w).abs() < 1e-12,
                "congruence violated: {u} vs {w}"
            );
        }
    }

    #[test]
    fn anchor_pixel_in_principal_interval() {
        let truth = PhaseMap::from_fn(32, 32, PhaseKind::Unwrapped, |x, y| {
            20.0 + 0.1 * x as f64 + 0.05 * y as f64
        });
        let un = unwrap(&wrap_map(&truth)).unwrap();
        let rel = reliability_map(&wrap_map(&truth));
        let mut anchor = 0;
        for i in 1..rel.values.len() {
            if rel.values[i] > rel.values[anchor] {
                anchor = i;
            }
        }
        let v = un.values()[anchor];
        assert!(v > -std::f64::consts::PI && v <= std::f64::consts::PI);
    }

    #[test]
    fn rejects_empty_and_unwrapped_input() {
        let m = PhaseMap::from_fn(4, 4, PhaseKind::Unwrapped, |_, _| 0.0);
        assert!(matches!(unwrap(&m), Err(UnwrapError::NotWrapped)));
    }

    #[test]
    fn offset_equivariance() {
        let truth = PhaseMap::from_fn(24, 24, PhaseKind::Unwrapped, |x, y| {
            0.2 * x as f64 + 0.15 * y as f64
        });
        let shifted = PhaseMap::from_fn(24, 24, PhaseKind::Unwrapped, |x, y| {
            0.2 * x as f64 + 0.15 * y as f64 + TAU
        });
        let ua = unwrap(&wrap_map(&truth)).unwrap();
        let ub = unwrap(&wrap_map(&shifted)).unwrap();
        let d = ub.values()[0] - ua.values()[0];
        assert!((d / TAU - (d / TAU).round()).abs() < 1e-9);
        for (a, b) in ua.values().iter().zip(ub.values()) {
            assert!((b - a - d).abs() < 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        /// Any smooth surface with neighbor differences < pi is recovered
        /// exactly (mod one global 2-pi multiple).
        #[test]
        fn exact_on_smooth_surfaces(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ax = rng.gen_range(-1.2..1.2);
            let ay = rng.gen_range(-1.2..1.2);
            let amp = rng.gen_range(0.0..8.0);
            let sx = rng.gen_range(0.05..0.3);
            let sy = rng.gen_range(0.05..0.3);
            let n = 24;
            let truth = PhaseMap::from_fn(n, n, PhaseKind::Unwrapped, |x, y| {
                let fx = x as f64 / n as f64 - 0.5;
                let fy = y as f64 / n as f64 - 0.5;
                ax * x as f64 + ay * y as f64
                    + amp * (-(fx * fx) / (2.0 * sx * sx) - (fy * fy) / (2.0 * sy * sy)).exp()
            });
            // enforce the neighbor-difference hypothesis
            let mut ok = true;
            'outer: for y in 0..n {
                for x in 0..n {
                    if x + 1 < n && (truth.get(x + 1, y) - truth.get(x, y)).abs() >= 3.1 {
                        ok = false;
                        break 'outer;
                    }
                    if y + 1 < n && (truth.get(x, y + 1) - truth.get(x, y)).abs() >= 3.1 {
                        ok = false;
                        break 'outer;
                    }
                }
            }
            prop_assume!(ok);
            let un = unwrap(&wrap_map(&truth)).unwrap();
            prop_assert!(max_error_mod_tau(&un, &truth) < 1e-9);
        }
    }
}
