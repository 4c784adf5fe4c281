//! Exact and Monte-Carlo evaluation of expected social welfare for
//! fractional and integral bidder sets.
//!
//! All exact evaluations integrate the per-threshold Bernoulli term over the
//! threshold grid: the integrand is constant on each segment (tau_j, tau_{j+1}]
//! and equals the weighted Bernoulli term at the strict tails Pr[v_i > tau_j],
//! so the integral is a finite sum. See `distributions::tests::
//! expected_value_matches_tail_integral` for the single-bidder sanity of this
//! convention.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::distributions::{build_threshold_grid, AuctionInstance, ThresholdGrid};
use crate::objectives::{h_ber_weighted, BernoulliVector};
use crate::{BspError, Result};

const BOX_TOL: f64 = 1e-9;

/// Inclusion probabilities x in [0,1]^n with sum x <= k.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalSolution {
    x: Vec<f64>,
}

impl FractionalSolution {
    pub fn new(x: Vec<f64>) -> Self {
        Self { x }
    }

    pub fn values(&self) -> &[f64] {
        &self.x
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.x.iter().sum()
    }

    pub fn indicator(n: usize, members: &[usize]) -> Self {
        let mut x = vec![0.0; n];
        for &i in members {
            x[i] = 1.0;
        }
        Self { x }
    }

    /// Box + budget feasibility for the owning instance.
    pub fn validate(&self, instance: &AuctionInstance) -> Result<()> {
        if self.x.len() != instance.n() {
            return Err(BspError::DimensionMismatch {
                expected: instance.n(),
                got: self.x.len(),
            });
        }
        if self
            .x
            .iter()
            .any(|&v| !(-BOX_TOL..=1.0 + BOX_TOL).contains(&v))
        {
            return Err(BspError::InvalidInstance(
                "fractional solution outside [0,1]^n".into(),
            ));
        }
        if self.total() > instance.k() as f64 + BOX_TOL {
            return Err(BspError::InvalidInstance(format!(
                "fractional solution sums to {} > k = {}",
                self.total(),
                instance.k()
            )));
        }
        Ok(())
    }
}

/// An integral subset of bidders, |S| <= k.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionSet {
    members: Vec<usize>,
}

impl SelectionSet {
    /// Members are stored sorted and must be distinct.
    pub fn new(mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.windows(2).for_each(|w| assert!(w[0] != w[1]));
        Self { members }
    }

    pub fn empty() -> Self {
        Self { members: vec![] }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }
}

/// Caches the threshold grid and the per-segment strict-tail matrix for one
/// instance, and counts exact set evaluations (the baseline cost metric).
pub struct WelfareEvaluator<'a> {
    instance: &'a AuctionInstance,
    grid: ThresholdGrid,
    /// seg_tails[j][i] = Pr[v_i > tau_j] for segment j's left endpoint.
    seg_tails: Vec<Vec<f64>>,
    set_evals: AtomicU64,
}

impl<'a> WelfareEvaluator<'a> {
    pub fn new(instance: &'a AuctionInstance) -> Self {
        let grid = build_threshold_grid(instance);
        let seg_tails = strict_tail_matrix(instance, &grid);
        Self {
            instance,
            grid,
            seg_tails,
            set_evals: AtomicU64::new(0),
        }
    }

    pub fn instance(&self) -> &AuctionInstance {
        self.instance
    }

    pub fn grid(&self) -> &ThresholdGrid {
        &self.grid
    }

    pub fn seg_tails(&self) -> &[Vec<f64>] {
        &self.seg_tails
    }

    /// Number of `sw_set` calls so far.
    pub fn set_eval_count(&self) -> u64 {
        self.set_evals.load(Ordering::Relaxed)
    }

    /// Exact expected welfare of the multilinear extension at x.
    pub fn sw_fractional(&self, x: &FractionalSolution) -> Result<f64> {
        if x.len() != self.instance.n() {
            return Err(BspError::DimensionMismatch {
                expected: self.instance.n(),
                got: x.len(),
            });
        }
        if x.values()
            .iter()
            .any(|&v| !(-BOX_TOL..=1.0 + BOX_TOL).contains(&v))
        {
            return Err(BspError::InvalidInstance(
                "fractional solution outside [0,1]^n".into(),
            ));
        }
        let w = self.instance.weights();
        let mut acc = 0.0;
        for (j, &len) in self.grid.segment_lengths().iter().enumerate() {
            let q: Vec<f64> = x
                .values()
                .iter()
                .zip(&self.seg_tails[j])
                .map(|(xi, ti)| (xi * ti).clamp(0.0, 1.0))
                .collect();
            let q = BernoulliVector::new(q)?;
            acc += len * h_ber_weighted(&q, w);
        }
        Ok(acc)
    }

    /// Exact expected welfare of the integral set S; equals `sw_fractional`
    /// at the indicator vector but skips the zero coordinates.
    pub fn sw_set(&self, s: &SelectionSet) -> f64 {
        self.set_evals.fetch_add(1, Ordering::Relaxed);
        if s.is_empty() {
            return 0.0;
        }
        let w = self.instance.weights();
        let mut acc = 0.0;
        let mut q = Vec::with_capacity(s.len());
        for (j, &len) in self.grid.segment_lengths().iter().enumerate() {
            q.clear();
            q.extend(s.members().iter().map(|&i| self.seg_tails[j][i]));
            let q = BernoulliVector::new(q.clone()).expect("tails are probabilities");
            acc += len * h_ber_weighted(&q, w);
        }
        acc
    }
}

/// seg_tails[j][i] = Pr[v_i > tau_j], for each segment left endpoint tau_j.
pub fn strict_tail_matrix(instance: &AuctionInstance, grid: &ThresholdGrid) -> Vec<Vec<f64>> {
    let num_segs = grid.num_segments();
    let mut m = Vec::with_capacity(num_segs);
    for j in 0..num_segs {
        let tau = grid.points()[j];
        m.push(
            instance
                .distributions()
                .iter()
                .map(|d| crate::distributions::tail_probability(d, tau, true))
                .collect(),
        );
    }
    m
}

/// Monte-Carlo welfare of the multilinear extension: sample inclusion
/// y ~ Ber(x) and a value per included bidder, sort values descending (ties
/// by bidder index), accumulate sum w_l v^(l). Returns (mean, stderr).
pub fn sw_monte_carlo(
    instance: &AuctionInstance,
    x: &FractionalSolution,
    samples: usize,
    seed: u64,
) -> (f64, f64) {
    assert!(samples >= 1);
    assert_eq!(x.len(), instance.n());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = instance.weights();

    // Per-bidder CDF for inverse-transform sampling.
    let cdfs: Vec<Vec<f64>> = instance
        .distributions()
        .iter()
        .map(|d| {
            let mut acc = 0.0;
            d.probs()
                .iter()
                .map(|p| {
                    acc += p;
                    acc
                })
                .collect()
        })
        .collect();

    let mut mean = 0.0;
    let mut m2 = 0.0;
    let mut values: Vec<(f64, usize)> = Vec::with_capacity(instance.n());
    for t in 0..samples {
        values.clear();
        for (i, (cdf, xi)) in cdfs.iter().zip(x.values()).enumerate() {
            if rng.gen::<f64>() < *xi {
                let u: f64 = rng.gen();
                let idx = cdf.partition_point(|&c| c < u).min(cdf.len() - 1);
                values.push((instance.distributions()[i].support()[idx], i));
            }
        }
        values.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let sw: f64 = values
            .iter()
            .enumerate()
            .map(|(l, (v, _))| w.get(l).copied().unwrap_or(0.0) * v)
            .sum();
        let delta = sw - mean;
        mean += delta / (t + 1) as f64;
        m2 += delta * (sw - mean);
    }
    let var = if samples > 1 {
        m2 / (samples - 1) as f64
    } else {
        0.0
    };
    (mean, (var / samples as f64).sqrt())
}
