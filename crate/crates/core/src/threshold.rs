//! Optimal stopping threshold for the renewal-reward throughput.
//!
//! A pure threshold policy transmits whenever the rate on offer is at least
//! `x`. Its rate of return is
//!
//! ```text
//! Φ(x) = Σ_i w_i·E[R_i; R_i ≥ x] / (slot_cost + Σ_i w_i·P(R_i ≥ x))
//! ```
//!
//! where each component `i` is a channel state that offers a transmission
//! with probability `w_i` per slot. The best threshold is the fixed point
//! `x_max = Φ(x_max)`, which is also the throughput it achieves.

use serde::Serialize;

use crate::distribution::RateDistribution;
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-8;

const MAX_ITERATIONS: u32 = 200;

/// Per-slot offers of a transmission opportunity, each with a probability
/// and a rate distribution, plus the cost of one contention slot.
#[derive(Debug, Clone)]
pub struct CompoundReward<'a> {
    components: Vec<(f64, &'a RateDistribution)>,
    slot_cost: f64,
}

impl<'a> CompoundReward<'a> {
    pub fn new(components: Vec<(f64, &'a RateDistribution)>, slot_cost: f64) -> Result<Self> {
        if !(slot_cost > 0.0 && slot_cost.is_finite()) {
            return Err(Error::config(
                "delta",
                format!("slot cost {slot_cost} must be positive"),
            ));
        }
        let mut total = 0.0;
        for &(w, _) in &components {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::config("target_ps", format!("state weight {w} outside [0, 1]")));
            }
            total += w;
        }
        if total > 1.0 + 1e-12 {
            return Err(Error::config("target_ps", format!("state weights sum to {total} > 1")));
        }
        Ok(CompoundReward { components, slot_cost })
    }

    /// Two contention groups with success probabilities `p1s`, `p2s`. A lone
    /// winner offers a single-link rate; two winners offer the two-link sum
    /// rate. Each meta-slot costs `2·delta`.
    pub fn two_group(
        p1s: f64,
        p2s: f64,
        single: &'a RateDistribution,
        pair_sum: &'a RateDistribution,
        delta: f64,
    ) -> Result<Self> {
        Self::new(
            vec![
                (p1s * (1.0 - p2s), single),
                (p2s * (1.0 - p1s), single),
                (p1s * p2s, pair_sum),
            ],
            2.0 * delta,
        )
    }

    /// One contention group with success probability `ps`; mini-slots cost `delta`.
    pub fn single_group(ps: f64, single: &'a RateDistribution, delta: f64) -> Result<Self> {
        Self::new(vec![(ps, single)], delta)
    }

    pub fn slot_cost(&self) -> f64 {
        self.slot_cost
    }

    pub fn components(&self) -> &[(f64, &'a RateDistribution)] {
        &self.components
    }

    /// Largest rate any component can offer.
    pub fn upper_rate(&self) -> f64 {
        self.components.iter().map(|(_, d)| d.upper_rate()).fold(0.0, f64::max)
    }

    /// `Φ(x)`, the rate of return of the threshold policy at `x`.
    pub fn return_map(&self, x: f64) -> f64 {
        let (mut reward, mut time) = (0.0, self.slot_cost);
        for &(w, d) in &self.components {
            reward += w * d.truncated_mean(x);
            time += w * d.tail_prob(x);
        }
        reward / time
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdSolution {
    pub x_max: f64,
    /// `|x_max − Φ(x_max)|`.
    pub residual: f64,
    pub iterations: u32,
    pub bracket: (f64, f64),
}

/// Bisection on `Φ(x) − x` over `[0, upper_rate]`.
pub fn solve_threshold(reward: &CompoundReward<'_>, tol: f64) -> Result<ThresholdSolution> {
    if !(tol > 0.0) {
        return Err(Error::config("tol", format!("{tol} must be positive")));
    }
    let g = |x: f64| reward.return_map(x) - x;
    let at_zero = g(0.0);
    if !(at_zero > 0.0) {
        return Err(Error::NoSignChange { value_at_zero: at_zero });
    }
    let (mut lo, mut hi) = (0.0, reward.upper_rate());
    let mut iterations = 0;
    let (mut x, mut gx) = (0.0, at_zero);
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        x = 0.5 * (lo + hi);
        gx = g(x);
        if gx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if gx.abs() <= 0.5 * tol && hi - lo <= tol {
            break;
        }
        if hi - lo <= f64::EPSILON * hi.max(1.0) {
            break;
        }
    }
    Ok(ThresholdSolution {
        x_max: x,
        residual: gx.abs(),
        iterations,
        bracket: (lo, hi),
    })
}
