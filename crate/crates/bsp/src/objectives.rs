//! Objective kernels shared by the welfare evaluator and the relaxation
//! solver: the exact Bernoulli (Poisson-binomial) term, the Chernoff
//! surrogate min(sum q, l), and the Poisson surrogate E[min(Pois(lambda), l)]
//! with analytic derivatives.

use statrs::function::gamma::ln_gamma;

use crate::{BspError, Result};

const CLAMP_TOL: f64 = 1e-12;

/// Switch the Poisson pmf recurrence to log-space evaluation once e^{-lambda}
/// underflows.
const LOG_SPACE_LAMBDA: f64 = 700.0;

/// Per-bidder exceedance probabilities q_i = x_i * Pr[v_i > tau].
#[derive(Debug, Clone)]
pub struct BernoulliVector {
    q: Vec<f64>,
}

impl BernoulliVector {
    /// Entries slightly outside [0,1] (within 1e-12, from projection
    /// roundoff) are clamped; larger violations are errors.
    pub fn new(mut q: Vec<f64>) -> Result<Self> {
        for v in &mut q {
            if *v < 0.0 {
                if *v < -CLAMP_TOL {
                    return Err(BspError::InvalidInstance(format!(
                        "Bernoulli probability {v} out of range"
                    )));
                }
                *v = 0.0;
            } else if *v > 1.0 {
                if *v > 1.0 + CLAMP_TOL {
                    return Err(BspError::InvalidInstance(format!(
                        "Bernoulli probability {v} out of range"
                    )));
                }
                *v = 1.0;
            }
        }
        Ok(Self { q })
    }

    pub fn entries(&self) -> &[f64] {
        &self.q
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// lambda = sum of entries.
    pub fn total(&self) -> f64 {
        self.q.iter().sum()
    }

    /// delta = max entry (0 for the empty vector).
    pub fn max_entry(&self) -> f64 {
        self.q.iter().cloned().fold(0.0, f64::max)
    }
}

/// Law of Z = sum of independent Bernoulli(q_i).
#[derive(Debug, Clone)]
pub struct CountDistribution {
    pmf: Vec<f64>,
}

impl CountDistribution {
    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    /// Pr[Z >= j] for j = 0..=n.
    pub fn upper_tails(&self) -> Vec<f64> {
        let mut tails = vec![0.0; self.pmf.len()];
        let mut acc = 0.0;
        for j in (0..self.pmf.len()).rev() {
            acc += self.pmf[j];
            tails[j] = acc.min(1.0);
        }
        tails
    }
}

/// Exact Poisson-binomial pmf by the O(n^2) convolution fold
/// p'_j = p_j (1 - q_i) + p_{j-1} q_i.
pub fn poisson_binomial_pmf(q: &BernoulliVector) -> CountDistribution {
    let mut pmf = Vec::with_capacity(q.len() + 1);
    pmf.push(1.0);
    for &qi in q.entries() {
        pmf.push(0.0);
        for j in (0..pmf.len()).rev() {
            let stay = if j < pmf.len() - 1 { pmf[j] * (1.0 - qi) } else { 0.0 };
            let up = if j > 0 { pmf[j - 1] * qi } else { 0.0 };
            pmf[j] = stay + up;
        }
    }
    CountDistribution { pmf }
}

/// Bernoulli objective term E[min(Z, l)], Z ~ PoissonBinomial(q).
pub fn h_ber(q: &BernoulliVector, l: usize) -> f64 {
    assert!(l >= 1);
    let pmf = poisson_binomial_pmf(q);
    pmf.pmf()
        .iter()
        .enumerate()
        .map(|(j, p)| j.min(l) as f64 * p)
        .sum()
}

/// Position-auction Bernoulli term: sum over l of (w_l - w_{l+1}) h_ber(q, l),
/// computed as the equivalent single pass sum_j w_j Pr[Z >= j].
pub fn h_ber_weighted(q: &BernoulliVector, w: &[f64]) -> f64 {
    let tails = poisson_binomial_pmf(q).upper_tails();
    tails
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, t)| w.get(j - 1).copied().unwrap_or(0.0) * t)
        .sum()
}

/// Chernoff objective term min(sum q, l).
pub fn h_cher(q: &BernoulliVector, l: usize) -> f64 {
    assert!(l >= 1);
    q.total().min(l as f64)
}

pub fn h_cher_weighted(q: &BernoulliVector, w: &[f64]) -> f64 {
    h_cher_weighted_lambda(q.total(), w)
}

/// Weighted Chernoff term as a function of lambda = sum q alone.
pub fn h_cher_weighted_lambda(lambda: f64, w: &[f64]) -> f64 {
    let n = w.len();
    let mut acc = 0.0;
    for l in 1..=n {
        let diff = w[l - 1] - if l < n { w[l] } else { 0.0 };
        if diff != 0.0 {
            acc += diff * lambda.min(l as f64);
        }
    }
    acc
}

/// Subgradient of `h_cher_weighted_lambda` in lambda; at the kinks lambda = l
/// the flat side is taken (subgradient of min is 0 there).
pub fn h_cher_weighted_lambda_deriv(lambda: f64, w: &[f64]) -> f64 {
    let m = lambda.floor() as usize; // contributes for every l > lambda
    w.get(m).copied().unwrap_or(0.0)
}

/// Poisson pmf terms Pr[Y = j] for j = 0..=max_j, Y ~ Pois(lambda).
fn poisson_pmf_terms(lambda: f64, max_j: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(max_j + 1);
    if lambda <= LOG_SPACE_LAMBDA {
        let mut term = (-lambda).exp();
        t.push(term);
        for j in 0..max_j {
            term *= lambda / (j + 1) as f64;
            t.push(term);
        }
    } else {
        let ll = lambda.ln();
        for j in 0..=max_j {
            t.push((j as f64 * ll - ln_gamma(j as f64 + 1.0) - lambda).exp());
        }
    }
    t
}

/// Poisson objective term E[min(Y, l)] = l - sum_{j<l} Pr[Y=j] (l - j).
pub fn h_pois(lambda: f64, l: usize) -> f64 {
    assert!(l >= 1);
    assert!(lambda >= 0.0);
    if lambda == 0.0 {
        return 0.0;
    }
    let terms = poisson_pmf_terms(lambda, l - 1);
    let deficit: f64 = terms
        .iter()
        .enumerate()
        .map(|(j, t)| t * (l - j) as f64)
        .sum();
    (l as f64 - deficit).max(0.0)
}

/// d h_pois / d lambda = Pr[Y <= l-1], always in [0,1].
pub fn h_pois_deriv(lambda: f64, l: usize) -> f64 {
    assert!(l >= 1);
    assert!(lambda >= 0.0);
    if lambda == 0.0 {
        return 1.0;
    }
    let sum: f64 = poisson_pmf_terms(lambda, l - 1).iter().sum();
    sum.clamp(0.0, 1.0)
}

/// Pr[Y >= j] for j = 0..=max_j, Y ~ Pois(lambda).
fn poisson_upper_tails(lambda: f64, max_j: usize) -> Vec<f64> {
    let terms = poisson_pmf_terms(lambda, max_j);
    let mut tails = Vec::with_capacity(max_j + 1);
    let mut below = 0.0f64;
    for t in terms {
        tails.push((1.0 - below).clamp(0.0, 1.0));
        below += t;
    }
    tails
}

/// Weighted Poisson term sum_l (w_l - w_{l+1}) h_pois(lambda, l), evaluated
/// as sum_j w_j Pr[Y >= j].
pub fn h_pois_weighted(lambda: f64, w: &[f64]) -> f64 {
    assert!(lambda >= 0.0);
    if lambda == 0.0 {
        return 0.0;
    }
    let tails = poisson_upper_tails(lambda, w.len());
    w.iter()
        .enumerate()
        .map(|(i, wi)| wi * tails[i + 1])
        .sum()
}

/// Derivative of `h_pois_weighted` in lambda:
/// sum_l (w_l - w_{l+1}) Pr[Y <= l-1].
pub fn h_pois_weighted_deriv(lambda: f64, w: &[f64]) -> f64 {
    assert!(lambda >= 0.0);
    if lambda == 0.0 {
        return w.first().copied().unwrap_or(0.0);
    }
    let n = w.len();
    let tails = poisson_upper_tails(lambda, n);
    let mut acc = 0.0;
    for l in 1..=n {
        let diff = w[l - 1] - if l < n { w[l] } else { 0.0 };
        if diff != 0.0 {
            acc += diff * (1.0 - tails[l]);
        }
    }
    acc
}

/// Total variation distance between PoissonBinomial(q) and Pois(sum q):
/// sum_{j=0..n} |Pr[Z=j] - Pr[Y=j]| plus the Poisson tail beyond n.
/// Test oracle for the TV <= max_i q_i bound.
pub fn total_variation_pb_vs_poisson(q: &BernoulliVector) -> f64 {
    let pb = poisson_binomial_pmf(q);
    let lambda = q.total();
    let n = q.len();
    if lambda == 0.0 {
        return 0.0;
    }
    let pois = poisson_pmf_terms(lambda, n);
    let mut tv = 0.0;
    let mut pois_mass = 0.0;
    for (pb_j, pois_j) in pb.pmf().iter().zip(&pois) {
        tv += (pb_j - pois_j).abs();
        pois_mass += pois_j;
    }
    // TV as plain sum over the union support: the PB law has no mass above n,
    // the Poisson law does.
    tv + (1.0 - pois_mass).max(0.0)
}
