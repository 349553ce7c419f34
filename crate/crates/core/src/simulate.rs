//! Two-dimensional classification scenarios.
//!
//! * `basic`: `K` Gaussian classes with means spaced `separation` apart along
//!   the diagonal `(1, 1)/√2`. Each class has unit spread along the diagonal
//!   and `elongation` spread across it, so the classes separate cleanly along
//!   an oblique direction but overlap on either coordinate axis.
//! * `outlier`: as `basic`, but a share of the last class is moved to a
//!   second cluster one spacing beyond its neighbouring class, so that class
//!   flanks its neighbour on both sides.
//! * `mixsim`: `K` components with random means in the unit square and random
//!   full covariances (eigenvalues in `[0.5, 1.5]`). The means are then
//!   scaled so that the average pairwise overlap, approximated as
//!   `2 Φ(-d/2)` for components at distance `d` with unit covariance,
//!   matches the `overlap` knob. Spacing is capped at a closest-pair distance
//!   of 12, which is what `overlap = 0` yields.
//!
//! Rows are emitted grouped by class in increasing class order. Class sizes
//! are equal, with the remainder going to the earliest classes.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{ClassId, Dataset};
use crate::error::{Error, Result};

/// Largest closest-pair spacing (in component standard deviations) used by
/// the mixture scenario.
pub const MAX_MIXTURE_SPACING: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    #[serde(alias = "basic_sim", alias = "basic-sim")]
    Basic,
    #[serde(alias = "sim_outlier", alias = "sim-outlier")]
    Outlier,
    #[serde(alias = "mixture", alias = "mix_sim")]
    Mixsim,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Basic => "basic",
            Scenario::Outlier => "outlier",
            Scenario::Mixsim => "mixsim",
        })
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
            .map_err(|_| Error::invalid(format!("unknown scenario {s:?} (basic, outlier, mixsim)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimSpec {
    pub scenario: Scenario,
    pub n: usize,
    pub k: usize,
    /// Mixture only: target average pairwise overlap in `[0, 1)`.
    pub overlap: f64,
    /// Mixture only: accepted for interface parity; has no effect.
    pub max_overlap: Option<f64>,
    /// Basic/outlier: distance between consecutive class means.
    pub separation: f64,
    /// Basic/outlier: spread across the class axis relative to along it.
    pub elongation: f64,
    /// Outlier only: share of the last class moved to the flanking cluster.
    pub outlier_fraction: f64,
    pub seed: u64,
}

impl Default for SimSpec {
    fn default() -> Self {
        SimSpec {
            scenario: Scenario::Basic,
            n: 300,
            k: 3,
            overlap: 0.05,
            max_overlap: None,
            separation: 6.0,
            elongation: 3.0,
            outlier_fraction: 0.15,
            seed: 1,
        }
    }
}

impl SimSpec {
    pub fn basic(k: usize, n: usize, seed: u64) -> Self {
        SimSpec {
            scenario: Scenario::Basic,
            k,
            n,
            seed,
            ..SimSpec::default()
        }
    }

    pub fn outlier(k: usize, n: usize, fraction: f64, seed: u64) -> Self {
        SimSpec {
            scenario: Scenario::Outlier,
            k,
            n,
            outlier_fraction: fraction,
            seed,
            ..SimSpec::default()
        }
    }

    pub fn mixsim(k: usize, n: usize, overlap: f64, seed: u64) -> Self {
        SimSpec {
            scenario: Scenario::Mixsim,
            k,
            n,
            overlap,
            seed,
            ..SimSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::invalid(format!(
                "need at least 2 groups, got {}",
                self.k
            )));
        }
        if self.n < self.k {
            return Err(Error::invalid(format!(
                "n = {} is smaller than k = {}",
                self.n, self.k
            )));
        }
        match self.scenario {
            Scenario::Basic | Scenario::Outlier => {
                if !(self.separation > 0.0 && self.separation.is_finite()) {
                    return Err(Error::invalid("separation must be positive"));
                }
                if !(self.elongation > 0.0 && self.elongation.is_finite()) {
                    return Err(Error::invalid("elongation must be positive"));
                }
                if self.scenario == Scenario::Outlier
                    && !(self.outlier_fraction > 0.0 && self.outlier_fraction < 0.5)
                {
                    return Err(Error::invalid("outlier_fraction must lie in (0, 0.5)"));
                }
                if self.scenario == Scenario::Outlier && self.n / self.k < 2 {
                    return Err(Error::invalid(
                        "outlier scenario needs at least 2 rows per class",
                    ));
                }
            }
            Scenario::Mixsim => {
                if !(0.0..1.0).contains(&self.overlap) {
                    return Err(Error::invalid("overlap must lie in [0, 1)"));
                }
            }
        }
        Ok(())
    }
}

/// Dispatches on `spec.scenario`.
pub fn simulate(spec: &SimSpec) -> Result<Dataset> {
    match spec.scenario {
        Scenario::Basic => sim_basic(spec),
        Scenario::Outlier => sim_outlier(spec),
        Scenario::Mixsim => sim_mixture(spec),
    }
}

fn class_sizes(n: usize, k: usize) -> Vec<usize> {
    (0..k).map(|g| n / k + usize::from(g < n % k)).collect()
}

/// Position of class `g` (0-based) along the diagonal.
fn chain_offset(g: usize, k: usize, separation: f64) -> f64 {
    (g as f64 - (k as f64 - 1.0) / 2.0) * separation
}

struct ChainSampler {
    elongation: f64,
}

impl ChainSampler {
    /// Point at diagonal offset `t`, with unit noise along the diagonal and
    /// `elongation` noise across it.
    fn draw(&self, rng: &mut ChaCha8Rng, t: f64) -> [f64; 2] {
        let along = t + rng.sample::<f64, _>(StandardNormal);
        let across = self.elongation * rng.sample::<f64, _>(StandardNormal);
        [
            FRAC_1_SQRT_2 * (along + across),
            FRAC_1_SQRT_2 * (along - across),
        ]
    }
}

pub fn sim_basic(spec: &SimSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sampler = ChainSampler {
        elongation: spec.elongation,
    };
    let mut features = Vec::with_capacity(spec.n * 2);
    let mut labels = Vec::with_capacity(spec.n);
    for (g, size) in class_sizes(spec.n, spec.k).into_iter().enumerate() {
        let t = chain_offset(g, spec.k, spec.separation);
        for _ in 0..size {
            features.extend(sampler.draw(&mut rng, t));
            labels.push(g as ClassId + 1);
        }
    }
    Dataset::new(features, 2, labels)
}

/// Number of rows of the last class placed in the flanking cluster.
pub fn outlier_count(spec: &SimSpec) -> usize {
    let last = *class_sizes(spec.n, spec.k).last().unwrap();
    ((spec.outlier_fraction * last as f64).round() as usize).clamp(1, last - 1)
}

pub fn sim_outlier(spec: &SimSpec) -> Result<Dataset> {
    if spec.scenario != Scenario::Outlier {
        return sim_outlier(&SimSpec {
            scenario: Scenario::Outlier,
            ..*spec
        });
    }
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sampler = ChainSampler {
        elongation: spec.elongation,
    };
    let sizes = class_sizes(spec.n, spec.k);
    let k = spec.k;
    let n_out = outlier_count(spec);
    // one spacing beyond the neighbour of the last class
    let flank = chain_offset(k - 2, k, spec.separation) - spec.separation;

    let mut features = Vec::with_capacity(spec.n * 2);
    let mut labels = Vec::with_capacity(spec.n);
    for (g, &size) in sizes.iter().enumerate() {
        let t = chain_offset(g, k, spec.separation);
        let main = if g == k - 1 { size - n_out } else { size };
        for _ in 0..main {
            features.extend(sampler.draw(&mut rng, t));
            labels.push(g as ClassId + 1);
        }
        if g == k - 1 {
            for _ in 0..n_out {
                features.extend(sampler.draw(&mut rng, flank));
                labels.push(g as ClassId + 1);
            }
        }
    }
    Dataset::new(features, 2, labels)
}

/// Generating parameters of a mixture scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureComponents {
    pub means: Vec<[f64; 2]>,
    /// Row-major 2×2 covariances.
    pub covariances: Vec<[[f64; 2]; 2]>,
}

impl MixtureComponents {
    /// Component with the highest density at `x` (equal weights).
    pub fn most_likely(&self, x: &[f64]) -> ClassId {
        let mut best = (f64::NEG_INFINITY, 1);
        for (g, (m, s)) in self.means.iter().zip(&self.covariances).enumerate() {
            let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
            let (dx, dy) = (x[0] - m[0], x[1] - m[1]);
            let q = (s[1][1] * dx * dx - 2.0 * s[0][1] * dx * dy + s[0][0] * dy * dy) / det;
            let ll = -0.5 * q - 0.5 * det.ln();
            if ll > best.0 {
                best = (ll, g as ClassId + 1);
            }
        }
        best.1
    }
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

fn mean_pairwise_overlap(dists: &[f64], scale: f64) -> f64 {
    dists
        .iter()
        .map(|d| 2.0 * std_normal_cdf(-scale * d / 2.0))
        .sum::<f64>()
        / dists.len() as f64
}

/// Means scale so the surrogate average overlap equals `overlap`.
fn mixture_scale(dists: &[f64], overlap: f64) -> f64 {
    let d_min = dists.iter().copied().fold(f64::INFINITY, f64::min);
    let cap = MAX_MIXTURE_SPACING / d_min;
    if overlap <= 0.0 || mean_pairwise_overlap(dists, cap) >= overlap {
        return cap;
    }
    let (mut lo, mut hi) = (0.0, cap);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_pairwise_overlap(dists, mid) > overlap {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn mixture_components(spec: &SimSpec) -> Result<MixtureComponents> {
    spec.validate()?;
    if let Some(m) = spec.max_overlap {
        log::warn!("max_overlap = {m} has no effect on the mixture surrogate");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let k = spec.k;
    let min_gap = 0.5 / (k as f64).sqrt();
    let mut raw: Vec<[f64; 2]> = vec![];
    for _ in 0..10_000 {
        raw = (0..k)
            .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        if pair_distances(&raw)
            .into_iter()
            .fold(f64::INFINITY, f64::min)
            >= min_gap
        {
            break;
        }
    }
    let dists = pair_distances(&raw);
    let scale = mixture_scale(&dists, spec.overlap);
    let means = raw.iter().map(|m| [m[0] * scale, m[1] * scale]).collect();
    let covariances = (0..k)
        .map(|_| {
            let theta = rng.random::<f64>() * PI;
            let l1 = 0.5 + rng.random::<f64>();
            let l2 = 0.5 + rng.random::<f64>();
            let (c, s) = (theta.cos(), theta.sin());
            [
                [l1 * c * c + l2 * s * s, (l1 - l2) * c * s],
                [(l1 - l2) * c * s, l1 * s * s + l2 * c * c],
            ]
        })
        .collect();
    Ok(MixtureComponents { means, covariances })
}

fn pair_distances(points: &[[f64; 2]]) -> Vec<f64> {
    let mut out = vec![];
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            out.push(
                ((points[i][0] - points[j][0]).powi(2) + (points[i][1] - points[j][1]).powi(2))
                    .sqrt(),
            );
        }
    }
    out
}

pub fn sim_mixture(spec: &SimSpec) -> Result<Dataset> {
    let comps = mixture_components(spec)?;
    // separate stream so component draws don't shift the sample
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(1);
    let mut features = Vec::with_capacity(spec.n * 2);
    let mut labels = Vec::with_capacity(spec.n);
    for (g, size) in class_sizes(spec.n, spec.k).into_iter().enumerate() {
        let m = comps.means[g];
        let s = comps.covariances[g];
        // Cholesky of the 2×2 covariance
        let l11 = s[0][0].sqrt();
        let l21 = s[1][0] / l11;
        let l22 = (s[1][1] - l21 * l21).sqrt();
        for _ in 0..size {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            features.extend([m[0] + l11 * a, m[1] + l21 * a + l22 * b]);
            labels.push(g as ClassId + 1);
        }
    }
    Dataset::new(features, 2, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_labels() {
        for scenario in [Scenario::Basic, Scenario::Outlier, Scenario::Mixsim] {
            let spec = SimSpec {
                scenario,
                n: 301,
                k: 3,
                ..SimSpec::default()
            };
            let d = simulate(&spec).unwrap();
            assert_eq!(d.n_rows(), 301);
            assert_eq!(d.present_classes(), vec![1, 2, 3]);
            let counts: Vec<usize> = (1..=3)
                .map(|c| d.labels().iter().filter(|&&l| l == c).count())
                .collect();
            assert_eq!(counts, vec![101, 100, 100]);
            // grouped by class
            assert!(d.labels().windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        for scenario in [Scenario::Basic, Scenario::Outlier, Scenario::Mixsim] {
            let spec = SimSpec {
                scenario,
                seed: 42,
                ..SimSpec::default()
            };
            assert_eq!(simulate(&spec).unwrap(), simulate(&spec).unwrap());
            let other = SimSpec { seed: 43, ..spec };
            assert_ne!(simulate(&spec).unwrap(), simulate(&other).unwrap());
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(sim_basic(&SimSpec::basic(1, 100, 1)).is_err());
        assert!(sim_outlier(&SimSpec::outlier(2, 100, 0.6, 1)).is_err());
        assert!(sim_outlier(&SimSpec::outlier(2, 100, 0.0, 1)).is_err());
        assert!(sim_mixture(&SimSpec::mixsim(3, 100, 1.0, 1)).is_err());
        assert!(sim_basic(&SimSpec {
            separation: 0.0,
            ..SimSpec::default()
        })
        .is_err());
    }

    #[test]
    fn outlier_cluster_flanks_neighbour() {
        let spec = SimSpec::outlier(2, 600, 0.15, 3);
        let d = sim_outlier(&spec).unwrap();
        let n_out = outlier_count(&spec);
        assert_eq!(n_out, 45);
        // diagonal coordinate of each row
        let t: Vec<f64> = d.rows().map(|r| (r[0] + r[1]) * FRAC_1_SQRT_2).collect();
        let class1_mean = t[..300].iter().sum::<f64>() / 300.0;
        let outliers = &t[600 - n_out..];
        let out_mean = outliers.iter().sum::<f64>() / n_out as f64;
        assert!(out_mean < class1_mean - 4.0);
        assert!((out_mean - (-9.0)).abs() < 0.5);
    }

    #[test]
    fn mixture_overlap_is_monotone_in_spacing() {
        let dists = [0.3, 0.5, 0.9];
        let mut prev = f64::INFINITY;
        for omega in [0.0, 0.01, 0.05, 0.2, 0.4, 0.8] {
            let s = mixture_scale(&dists, omega);
            assert!(s <= prev);
            if omega > 0.0 && s < MAX_MIXTURE_SPACING / 0.3 {
                assert!((mean_pairwise_overlap(&dists, s) - omega).abs() < 1e-9);
            }
            prev = s;
        }
    }

    #[test]
    fn scenario_names() {
        assert_eq!("basic".parse::<Scenario>().unwrap(), Scenario::Basic);
        assert_eq!("MixSim".parse::<Scenario>().unwrap(), Scenario::Mixsim);
        assert!("tour".parse::<Scenario>().is_err());
    }
}
