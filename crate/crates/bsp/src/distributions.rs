//! Finite-support value distributions, auction instances, and the synthetic
//! lognormal instance generator.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, LogNormal};

use crate::{BspError, Result};

const PROB_SUM_TOL: f64 = 1e-12;

/// A finite-support nonnegative value distribution with exact tail queries.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    support: Vec<f64>,
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if support.len() != probs.len() || support.is_empty() {
            return Err(BspError::InvalidDistribution(format!(
                "support length {} vs probs length {}",
                support.len(),
                probs.len()
            )));
        }
        for w in support.windows(2) {
            if w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater) {
                return Err(BspError::InvalidDistribution(
                    "support must be strictly increasing".into(),
                ));
            }
        }
        if support[0] < 0.0 || !support.iter().all(|v| v.is_finite()) {
            return Err(BspError::InvalidDistribution(
                "support must be nonnegative and finite".into(),
            ));
        }
        if probs
            .iter()
            .any(|&p| !(0.0..=1.0 + PROB_SUM_TOL).contains(&p))
        {
            return Err(BspError::InvalidDistribution(
                "probabilities must lie in [0,1]".into(),
            ));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(BspError::InvalidDistribution(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        Ok(Self { support, probs })
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn max_value(&self) -> f64 {
        *self.support.last().unwrap()
    }

    pub fn expected_value(&self) -> f64 {
        self.support
            .iter()
            .zip(&self.probs)
            .map(|(v, p)| v * p)
            .sum()
    }
}

/// Pr[v >= tau] (strict = false) or Pr[v > tau] (strict = true).
pub fn tail_probability(dist: &DiscreteDistribution, tau: f64, strict: bool) -> f64 {
    debug_assert!(tau >= 0.0);
    dist.support
        .iter()
        .zip(&dist.probs)
        .filter(|(v, _)| if strict { **v > tau } else { **v >= tau })
        .map(|(_, p)| *p)
        .sum()
}

/// n distributions + position-weight vector + capacity k.
#[derive(Debug, Clone)]
pub struct AuctionInstance {
    distributions: Vec<DiscreteDistribution>,
    weights: Vec<f64>,
    capacity: usize,
}

impl AuctionInstance {
    pub fn new(
        distributions: Vec<DiscreteDistribution>,
        weights: Vec<f64>,
        capacity: usize,
    ) -> Result<Self> {
        let n = distributions.len();
        if n == 0 {
            return Err(BspError::InvalidInstance("no distributions".into()));
        }
        if weights.len() != n {
            return Err(BspError::InvalidInstance(format!(
                "weights length {} != n = {n}",
                weights.len()
            )));
        }
        if weights.iter().any(|&w| !(0.0..=1.0).contains(&w)) {
            return Err(BspError::InvalidInstance(
                "weights must lie in [0,1]".into(),
            ));
        }
        if weights.windows(2).any(|w| w[1] > w[0]) {
            return Err(BspError::InvalidInstance(
                "weights must be non-increasing".into(),
            ));
        }
        if capacity == 0 || capacity > n {
            return Err(BspError::InvalidInstance(format!(
                "capacity {capacity} must satisfy 1 <= k <= n = {n}"
            )));
        }
        Ok(Self {
            distributions,
            weights,
            capacity,
        })
    }

    pub fn n(&self) -> usize {
        self.distributions.len()
    }

    pub fn k(&self) -> usize {
        self.capacity
    }

    pub fn distributions(&self) -> &[DiscreteDistribution] {
        &self.distributions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn to_json(&self) -> String {
        let wire = InstanceWire {
            n: self.n(),
            k: self.capacity,
            weights: self.weights.clone(),
            distributions: self
                .distributions
                .iter()
                .map(|d| DistWire {
                    support: d.support.clone(),
                    probs: d.probs.clone(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&wire).expect("instance serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let wire: InstanceWire = serde_json::from_str(text).map_err(|e| BspError::Json {
            path: "<instance json>".into(),
            source: e,
        })?;
        if wire.distributions.len() != wire.n {
            return Err(BspError::InvalidInstance(format!(
                "declared n = {} but {} distributions given",
                wire.n,
                wire.distributions.len()
            )));
        }
        let dists = wire
            .distributions
            .into_iter()
            .map(|d| DiscreteDistribution::new(d.support, d.probs))
            .collect::<Result<Vec<_>>>()?;
        Self::new(dists, wire.weights, wire.k)
    }
}

#[derive(Serialize, Deserialize)]
struct InstanceWire {
    n: usize,
    k: usize,
    weights: Vec<f64>,
    distributions: Vec<DistWire>,
}

#[derive(Serialize, Deserialize)]
struct DistWire {
    support: Vec<f64>,
    probs: Vec<f64>,
}

/// Sorted union of {0} and all supports; welfare integrals are exact finite
/// sums over the segments between consecutive points.
#[derive(Debug, Clone)]
pub struct ThresholdGrid {
    points: Vec<f64>,
    segment_lengths: Vec<f64>,
}

impl ThresholdGrid {
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn segment_lengths(&self) -> &[f64] {
        &self.segment_lengths
    }

    /// Number of segments (points.len() - 1).
    pub fn num_segments(&self) -> usize {
        self.segment_lengths.len()
    }
}

pub fn build_threshold_grid(instance: &AuctionInstance) -> ThresholdGrid {
    let mut points = vec![0.0];
    for d in instance.distributions() {
        points.extend_from_slice(d.support());
    }
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points.dedup();
    let segment_lengths = points.windows(2).map(|w| w[1] - w[0]).collect();
    ThresholdGrid {
        points,
        segment_lengths,
    }
}

/// Position weights used by the synthetic benchmark: full weight for the top
/// fifth of the k slots, 0.2 for the next two fifths, zero after, padded to n.
/// Floor boundaries would zero out everything for k < 5, so position 1 is
/// always given weight 1.
pub fn default_position_weights(k: usize, n: usize) -> Vec<f64> {
    assert!(k >= 1 && k <= n);
    let a = (0.2 * k as f64).floor() as usize;
    let b = (0.6 * k as f64).floor() as usize;
    let mut w = vec![0.0; n];
    for (i, wi) in w.iter_mut().enumerate() {
        let pos = i + 1;
        if pos <= a {
            *wi = 1.0;
        } else if pos <= b {
            *wi = 0.2;
        }
    }
    if a == 0 {
        w[0] = 1.0;
    }
    w
}

/// Discretize Lognormal(mu, sigma^2) onto {0} u {1 + i/g : i = 0..g-1}:
/// the mass of each interval inside [0,2] moves to its left endpoint, and the
/// mass on (2, inf) is redistributed proportionally to the in-range
/// probabilities (uniformly if those are all zero).
fn discretize_lognormal(mu: f64, sigma: f64, grid_size: usize) -> DiscreteDistribution {
    let g = grid_size;
    let mut support = Vec::with_capacity(g + 1);
    support.push(0.0);
    for i in 0..g {
        support.push(1.0 + i as f64 / g as f64);
    }
    let mut probs = vec![0.0; g + 1];

    if sigma == 0.0 {
        // Degenerate lognormal: point mass at e^mu.
        let v = mu.exp();
        if v > 2.0 {
            let u = 1.0 / (g + 1) as f64;
            probs.iter_mut().for_each(|p| *p = u);
        } else if v < 1.0 {
            probs[0] = 1.0;
        } else {
            let idx = (((v - 1.0) * g as f64).floor() as usize).min(g - 1);
            probs[1 + idx] = 1.0;
        }
    } else {
        let ln = LogNormal::new(mu, sigma).expect("sigma > 0");
        probs[0] = ln.cdf(1.0);
        for i in 0..g {
            let lo = 1.0 + i as f64 / g as f64;
            let hi = 1.0 + (i + 1) as f64 / g as f64;
            probs[1 + i] = ln.cdf(hi) - ln.cdf(lo);
        }
        let total: f64 = probs.iter().sum();
        if total > 0.0 {
            // Scaling by 1/total adds exactly the (2, inf) leftover 1 - total,
            // split proportionally.
            probs.iter_mut().for_each(|p| *p /= total);
        } else {
            let u = 1.0 / (g + 1) as f64;
            probs.iter_mut().for_each(|p| *p = u);
        }
    }

    // Guard against accumulated rounding in the CDF differences.
    let sum: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= sum);
    DiscreteDistribution::new(support, probs).expect("discretization yields a valid distribution")
}

/// Synthetic benchmark instances: per bidder, mu ~ U[0,0.2], sigma ~ U[0,0.5],
/// lognormal discretized onto the common grid; weights from
/// `default_position_weights`. Deterministic given the seed.
pub fn generate_lognormal_instance(
    n: usize,
    k: usize,
    seed: u64,
    grid_size: usize,
) -> Result<AuctionInstance> {
    if grid_size < 2 {
        return Err(BspError::InfeasibleParameters(format!(
            "grid_size {grid_size} < 2"
        )));
    }
    if n < k || k == 0 {
        return Err(BspError::InfeasibleParameters(format!(
            "need n >= k >= 1, got n = {n}, k = {k}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dists = Vec::with_capacity(n);
    for _ in 0..n {
        let mu = rng.gen_range(0.0..0.2);
        let sigma = rng.gen_range(0.0..0.5);
        dists.push(discretize_lognormal(mu, sigma, grid_size));
    }
    let weights = default_position_weights(k, n);
    AuctionInstance::new(dists, weights, k)
}
