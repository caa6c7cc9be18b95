//! Reproducible three-component Brownian increments with exact coarsening.
//!
//! A path stores its increments at the finest resolution only; every coarser
//! resolution is derived by summing children, so one sampled path can drive
//! every scheme and every step size of a comparison with common random
//! numbers. Each finest increment is a deterministic function of
//! `(seed, sample_index, step, component)` through a counter-based generator,
//! which makes paths reproducible at any thread count and lets distinct
//! samples run in parallel without shared state.
//!
//! Power-of-two coarsening factors are reduced by repeated pairwise halving.
//! That choice makes multi-level consistency exact: coarsening to `N2` and
//! then to `N1` performs bit-for-bit the same additions as coarsening to `N1`
//! directly, for any power-of-two chain `N1 | N2 | N_ref`.

use std::io::{self, Read, Write};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NoiseError {
    #[error("requested resolution {requested} does not divide the stored resolution {finest}")]
    IncompatibleResolution { requested: usize, finest: usize },
}

/// Three-component Brownian increment hierarchy over `[0, horizon]`.
#[derive(Clone, Debug)]
pub struct WienerPath {
    seed: u64,
    sample_index: u64,
    horizon: f64,
    finest: Vec<[f64; 3]>,
}

impl WienerPath {
    /// Sample the finest-level increments; each stored triple is distributed
    /// `N(0, h_ref I_3)` with `h_ref = horizon / n_ref`.
    pub fn sample(seed: u64, sample_index: u64, horizon: f64, n_ref: usize) -> Self {
        assert!(n_ref >= 1, "need at least one increment");
        assert!(horizon > 0.0, "horizon must be positive");
        let scale = (horizon / n_ref as f64).sqrt();
        let finest = (0..n_ref)
            .map(|step| {
                [
                    scale * standard_normal(seed, sample_index, step as u64, 0),
                    scale * standard_normal(seed, sample_index, step as u64, 1),
                    scale * standard_normal(seed, sample_index, step as u64, 2),
                ]
            })
            .collect();
        WienerPath {
            seed,
            sample_index,
            horizon,
            finest,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sample_index(&self) -> u64 {
        self.sample_index
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn finest_len(&self) -> usize {
        self.finest.len()
    }

    pub fn finest_step(&self) -> f64 {
        self.horizon / self.finest.len() as f64
    }

    pub fn finest(&self) -> &[[f64; 3]] {
        &self.finest
    }

    /// Increments over the coarse grid with `n` steps; entry `k` is the exact
    /// sum of its children in `[t_k, t_{k+1})`. Integrators divide by
    /// `sqrt(h)` to obtain the scaled normals they consume.
    pub fn increments_at(&self, n: usize) -> Result<Vec<[f64; 3]>, NoiseError> {
        if n == 0 || self.finest.len() % n != 0 {
            return Err(NoiseError::IncompatibleResolution {
                requested: n,
                finest: self.finest.len(),
            });
        }
        Ok(coarsen(&self.finest, n))
    }

    /// Dump the finest increments as little-endian f64, row-major
    /// `[step][component]`, for cross-implementation replay.
    pub fn write_finest<W: Write>(&self, w: &mut W) -> io::Result<()> {
        for triple in &self.finest {
            for v in triple {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Read increments written by [`WienerPath::write_finest`].
    pub fn read_finest<R: Read>(r: &mut R, n_ref: usize) -> io::Result<Vec<[f64; 3]>> {
        let mut out = Vec::with_capacity(n_ref);
        let mut buf = [0u8; 8];
        for _ in 0..n_ref {
            let mut triple = [0.0f64; 3];
            for t in &mut triple {
                r.read_exact(&mut buf)?;
                *t = f64::from_le_bytes(buf);
            }
            out.push(triple);
        }
        Ok(out)
    }
}

/// Reduce increments to `n_coarse` blocks: odd cofactors are summed
/// left-to-right, the power-of-two part by repeated pairwise halving.
pub fn coarsen(increments: &[[f64; 3]], n_coarse: usize) -> Vec<[f64; 3]> {
    assert!(n_coarse >= 1 && increments.len() % n_coarse == 0);
    let factor = increments.len() / n_coarse;
    let halvings = factor.trailing_zeros();
    let odd = factor >> halvings;

    let mut current: Vec<[f64; 3]> = if odd == 1 {
        increments.to_vec()
    } else {
        increments
            .chunks(odd)
            .map(|chunk| {
                let mut acc = [0.0; 3];
                for c in chunk {
                    acc[0] += c[0];
                    acc[1] += c[1];
                    acc[2] += c[2];
                }
                acc
            })
            .collect()
    };
    for _ in 0..halvings {
        current = current
            .chunks(2)
            .map(|pair| {
                [
                    pair[0][0] + pair[1][0],
                    pair[0][1] + pair[1][1],
                    pair[0][2] + pair[1][2],
                ]
            })
            .collect();
    }
    current
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn split_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter stream keyed by the full coordinate of one uniform draw.
fn keyed_bits(seed: u64, sample: u64, step: u64, component: u32, lane: u32) -> u64 {
    let mut h = split_mix(seed ^ GOLDEN);
    h = split_mix(h ^ sample.wrapping_mul(GOLDEN));
    h = split_mix(h ^ step);
    h = split_mix(h ^ (u64::from(component) << 32 | u64::from(lane)));
    h
}

/// Uniform in (0, 1], safe to feed into a logarithm.
fn unit_interval(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

/// One standard normal draw by Box-Muller over the counter stream; any draw
/// is computable independently of all others.
fn standard_normal(seed: u64, sample: u64, step: u64, component: u32) -> f64 {
    let u1 = unit_interval(keyed_bits(seed, sample, step, component, 0));
    let u2 = unit_interval(keyed_bits(seed, sample, step, component, 1));
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sampling_is_deterministic() {
        let a = WienerPath::sample(42, 7, 1.0, 64);
        let b = WienerPath::sample(42, 7, 1.0, 64);
        assert_eq!(a.finest(), b.finest());
        let c = WienerPath::sample(42, 8, 1.0, 64);
        assert_ne!(a.finest(), c.finest());
    }

    #[test]
    fn identity_refinement_returns_stored_array() {
        let path = WienerPath::sample(1, 0, 2.0, 32);
        let incs = path.increments_at(32).unwrap();
        assert_eq!(incs.as_slice(), path.finest());
    }

    #[test]
    fn total_sum_telescopes() {
        // the single coarse increment is the pairwise-tree sum of all
        // children; reproduce the tree in place as the oracle.
        let path = WienerPath::sample(3, 5, 1.0, 64);
        let total = path.increments_at(1).unwrap()[0];
        let mut tree: Vec<[f64; 3]> = path.finest().to_vec();
        while tree.len() > 1 {
            tree = tree
                .chunks(2)
                .map(|p| [p[0][0] + p[1][0], p[0][1] + p[1][1], p[0][2] + p[1][2]])
                .collect();
        }
        assert_eq!(total, tree[0]);
    }

    #[test]
    fn halving_sums_adjacent_children_exactly() {
        let path = WienerPath::sample(9, 2, 1.0, 16);
        let coarse = path.increments_at(8).unwrap();
        for (k, c) in coarse.iter().enumerate() {
            let f = path.finest();
            for comp in 0..3 {
                assert_eq!(c[comp], f[2 * k][comp] + f[2 * k + 1][comp]);
            }
        }
    }

    #[test]
    fn incompatible_resolution_rejected() {
        let path = WienerPath::sample(0, 0, 1.0, 16);
        assert_eq!(
            path.increments_at(3),
            Err(NoiseError::IncompatibleResolution {
                requested: 3,
                finest: 16
            })
        );
        assert!(path.increments_at(0).is_err());
    }

    #[test]
    fn variance_matches_horizon() {
        // Monte-Carlo oracle: Var W_k(T) = T, sampled over many paths.
        let n = 10_000;
        let horizon = 0.7;
        let mut sums = vec![[0.0f64; 3]; n];
        for (i, s) in sums.iter_mut().enumerate() {
            let path = WienerPath::sample(2024, i as u64, horizon, 8);
            *s = path.increments_at(1).unwrap()[0];
        }
        for comp in 0..3 {
            let mean = sums.iter().map(|s| s[comp]).sum::<f64>() / n as f64;
            let var = sums
                .iter()
                .map(|s| (s[comp] - mean).powi(2))
                .sum::<f64>()
                / (n - 1) as f64;
            // 3-sigma band for the sample variance of a Gaussian
            let band = 3.0 * horizon * (2.0 / n as f64).sqrt();
            assert!(
                (var - horizon).abs() < band.min(0.05 * horizon),
                "component {comp}: var {var} vs horizon {horizon}"
            );
        }
    }

    #[test]
    fn components_are_uncorrelated() {
        let n = 10_000;
        let horizon = 1.0;
        let mut cov = [0.0f64; 3]; // pairs (0,1), (0,2), (1,2)
        for i in 0..n {
            let w = WienerPath::sample(7, i as u64, horizon, 4)
                .increments_at(1)
                .unwrap()[0];
            cov[0] += w[0] * w[1];
            cov[1] += w[0] * w[2];
            cov[2] += w[1] * w[2];
        }
        let band = 3.0 * horizon / (n as f64).sqrt();
        for (k, c) in cov.iter().enumerate() {
            let sample_cov = c / n as f64;
            assert!(sample_cov.abs() < band, "pair {k}: covariance {sample_cov}");
        }
    }

    #[test]
    fn increment_scaling_has_unit_variance() {
        let n_ref = 1 << 12;
        let path = WienerPath::sample(11, 0, 2.0, n_ref);
        for n in [n_ref, n_ref / 4, 64] {
            let h = path.horizon() / n as f64;
            let incs = path.increments_at(n).unwrap();
            let mut sq = 0.0;
            for w in &incs {
                for comp in 0..3 {
                    sq += (w[comp] / h.sqrt()).powi(2);
                }
            }
            let var = sq / (3 * n) as f64;
            let band = 3.0 * (2.0 / (3 * n) as f64).sqrt();
            assert!((var - 1.0).abs() < band, "n={n}: scaled variance {var}");
        }
    }

    #[test]
    fn dump_round_trips() {
        let path = WienerPath::sample(5, 1, 1.0, 8);
        let mut buf = Vec::new();
        path.write_finest(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 * 3 * 8);
        let back = WienerPath::read_finest(&mut buf.as_slice(), 8).unwrap();
        assert_eq!(back.as_slice(), path.finest());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn coarsening_is_consistent_across_power_of_two_levels(
            seed in any::<u64>(), sample in 0u64..1000,
            k1 in 0u32..3, k2 in 0u32..3, k3 in 0u32..3,
        ) {
            // N1 | N2 | N_ref: coarsening via the middle level is bit-exact
            let n_ref = 1usize << (k1 + k2 + k3 + 2);
            let n2 = n_ref >> k1;
            let n1 = n2 >> k2;
            let path = WienerPath::sample(seed, sample, 1.0, n_ref);
            let direct = path.increments_at(n1).unwrap();
            let mid = path.increments_at(n2).unwrap();
            let via = coarsen(&mid, n1);
            prop_assert_eq!(direct, via);
        }
    }
}
