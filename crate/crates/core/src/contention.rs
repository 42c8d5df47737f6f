//! Group-based splitting contention.
//!
//! Each meta-slot holds one mini-slot per group. Every link of a group
//! contends in its group's mini-slot independently with its own probability;
//! the mini-slot succeeds iff exactly one link contends. Idle and collision
//! outcomes are indistinguishable and cost the same.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::LinkSnrConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    First,
    Second,
}

impl Group {
    pub fn index(self) -> usize {
        match self {
            Group::First => 0,
            Group::Second => 1,
        }
    }

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }
}

/// A scenario: per-link contention probabilities, a fixed group assignment,
/// the probing overhead `δ = τ/T` and the link SNRs.
#[derive(Debug, Clone, PartialEq)]
pub struct ContentionConfig {
    link_probs: Vec<f64>,
    group_of: Vec<Group>,
    delta: f64,
    snr: LinkSnrConfig,
    members: [Vec<usize>; 2],
}

impl ContentionConfig {
    pub fn new(link_probs: Vec<f64>, group_of: Vec<Group>, delta: f64, snr: LinkSnrConfig) -> Result<Self> {
        if link_probs.is_empty() {
            return Err(Error::config("link_probs", "at least one link is required"));
        }
        if link_probs.len() != group_of.len() {
            return Err(Error::config(
                "group_of",
                format!("{} groups for {} links", group_of.len(), link_probs.len()),
            ));
        }
        if let Some(p) = link_probs.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
            return Err(Error::config("link_probs", format!("probability {p} outside (0, 1]")));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::config("delta", format!("must be positive, got {delta}")));
        }
        let mut members = [Vec::new(), Vec::new()];
        for (i, g) in group_of.iter().enumerate() {
            members[g.index()].push(i);
        }
        if members[0].is_empty() {
            return Err(Error::EmptyGroup { group: 1 });
        }
        Ok(ContentionConfig {
            link_probs,
            group_of,
            delta,
            snr,
            members,
        })
    }

    /// `links_per_group` links in each of two groups, all contending with `p`.
    pub fn two_group(links_per_group: usize, p: f64, delta: f64, snr: LinkSnrConfig) -> Result<Self> {
        let n = 2 * links_per_group;
        let groups = (0..n)
            .map(|i| {
                if i < links_per_group {
                    Group::First
                } else {
                    Group::Second
                }
            })
            .collect();
        Self::new(vec![p; n], groups, delta, snr)
    }

    /// `links` links in a single group.
    pub fn single_group(links: usize, p: f64, delta: f64, snr: LinkSnrConfig) -> Result<Self> {
        Self::new(vec![p; links], vec![Group::First; links], delta, snr)
    }

    pub fn link_probs(&self) -> &[f64] {
        &self.link_probs
    }

    pub fn group_of(&self) -> &[Group] {
        &self.group_of
    }

    pub fn members(&self, group: Group) -> &[usize] {
        &self.members[group.index()]
    }

    pub fn is_single_group(&self) -> bool {
        self.members[1].is_empty()
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn snr(&self) -> &LinkSnrConfig {
        &self.snr
    }
}

/// Outcome of one meta-slot. `winner1`/`winner2` hold the successful link of
/// each group, so `c_i = 1` iff the winner is present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ChannelState {
    pub winner1: Option<usize>,
    pub winner2: Option<usize>,
}

impl ChannelState {
    pub fn c1(&self) -> bool {
        self.winner1.is_some()
    }

    pub fn c2(&self) -> bool {
        self.winner2.is_some()
    }

    /// Index into `{0,0}, {0,1}, {1,0}, {1,1}`.
    pub fn code(&self) -> usize {
        (usize::from(self.c1()) << 1) | usize::from(self.c2())
    }
}

/// `Σ_ℓ p_ℓ Π_{j≠ℓ} (1 − p_j)` over the links of `group`.
pub fn success_prob(config: &ContentionConfig, group: Group) -> Result<f64> {
    let members = config.members(group);
    if members.is_empty() {
        return Err(Error::EmptyGroup { group: group.number() });
    }
    let probs = config.link_probs();
    let total = members
        .iter()
        .map(|&l| {
            probs[l]
                * members
                    .iter()
                    .filter(|&&j| j != l)
                    .map(|&j| 1.0 - probs[j])
                    .product::<f64>()
        })
        .sum::<f64>();
    Ok(total.clamp(0.0, 1.0))
}

/// One mini-slot of `group`: the successful link, if exactly one contended.
pub fn draw_mini_slot<R: Rng + ?Sized>(config: &ContentionConfig, group: Group, rng: &mut R) -> Option<usize> {
    let mut winner = None;
    let mut contenders = 0u32;
    for &l in config.members(group) {
        if rng.random::<f64>() < config.link_probs[l] {
            contenders += 1;
            winner = Some(l);
        }
    }
    if contenders == 1 {
        winner
    } else {
        None
    }
}

/// One meta-slot: group 1's mini-slot, then group 2's.
pub fn draw_meta_slot<R: Rng + ?Sized>(config: &ContentionConfig, rng: &mut R) -> ChannelState {
    ChannelState {
        winner1: draw_mini_slot(config, Group::First, rng),
        winner2: draw_mini_slot(config, Group::Second, rng),
    }
}

/// Symmetric per-link probability `p` with `K p (1 − p)^{K−1} = target`,
/// taken on the increasing branch `p ∈ (0, 1/K]`.
pub fn calibrate_probs(target_ps: f64, num_links: usize) -> Result<Vec<f64>> {
    if num_links == 0 {
        return Err(Error::config("links_per_group", "must be positive"));
    }
    if !(target_ps > 0.0 && target_ps <= 1.0) {
        return Err(Error::config("target_ps", format!("{target_ps} outside (0, 1]")));
    }
    if num_links == 1 {
        return Ok(vec![target_ps]);
    }
    let k = num_links as f64;
    let ps = |p: f64| k * p * (1.0 - p).powi(num_links as i32 - 1);
    let max = (1.0 - 1.0 / k).powi(num_links as i32 - 1);
    if target_ps > max {
        return Err(Error::UnachievableTarget {
            target: target_ps,
            max,
            links: num_links,
        });
    }
    // The curve peaks at 1/K, where bisection only resolves the root to
    // about the square root of machine precision.
    if target_ps >= max * (1.0 - 1e-12) {
        return Ok(vec![1.0 / k; num_links]);
    }
    let (mut lo, mut hi) = (0.0, 1.0 / k);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ps(mid) < target_ps {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 {
            break;
        }
    }
    Ok(vec![0.5 * (lo + hi); num_links])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    fn snr() -> LinkSnrConfig {
        LinkSnrConfig::new(10.0, 1.0).unwrap()
    }

    /// Enumerates all contention outcomes of a group.
    fn enumerate_success(probs: &[f64]) -> f64 {
        let n = probs.len();
        (0u32..1 << n)
            .filter(|mask| mask.count_ones() == 1)
            .map(|mask| {
                (0..n)
                    .map(|i| if mask & (1 << i) != 0 { probs[i] } else { 1.0 - probs[i] })
                    .product::<f64>()
            })
            .sum()
    }

    #[test]
    fn success_prob_examples() {
        let one = ContentionConfig::single_group(1, 1.0, 0.1, snr()).unwrap();
        assert_eq!(success_prob(&one, Group::First).unwrap(), 1.0);

        let two = ContentionConfig::single_group(2, 0.5, 0.1, snr()).unwrap();
        assert_eq!(success_prob(&two, Group::First).unwrap(), 0.5);

        let probs = vec![0.3, 0.2, 0.1];
        let cfg = ContentionConfig::new(probs.clone(), vec![Group::First; 3], 0.1, snr()).unwrap();
        let oracle = enumerate_success(&probs);
        assert_relative_eq!(oracle, 0.398, epsilon = 1e-15);
        assert_relative_eq!(success_prob(&cfg, Group::First).unwrap(), oracle, epsilon = 1e-15);

        assert!(matches!(
            success_prob(&cfg, Group::Second),
            Err(Error::EmptyGroup { group: 2 })
        ));
    }

    #[test]
    fn config_validation() {
        assert!(ContentionConfig::single_group(2, 0.0, 0.1, snr()).is_err());
        assert!(ContentionConfig::single_group(2, 1.5, 0.1, snr()).is_err());
        assert!(ContentionConfig::single_group(2, 0.5, 0.0, snr()).is_err());
        assert!(ContentionConfig::single_group(0, 0.5, 0.1, snr()).is_err());
        assert!(ContentionConfig::new(vec![0.5], vec![Group::Second], 0.1, snr()).is_err());
    }

    #[test]
    fn forced_outcomes() {
        let mut rng = StreamKey::new(1).rng();
        let crowded = ContentionConfig::two_group(3, 1.0, 0.1, snr()).unwrap();
        let lone = ContentionConfig::two_group(1, 1.0, 0.1, snr()).unwrap();
        for _ in 0..100 {
            assert_eq!(draw_meta_slot(&crowded, &mut rng).code(), 0);
            let s = draw_meta_slot(&lone, &mut rng);
            assert_eq!((s.winner1, s.winner2), (Some(0), Some(1)));
        }
    }

    #[test]
    fn winners_belong_to_their_group() {
        let cfg = ContentionConfig::two_group(4, 0.25, 0.1, snr()).unwrap();
        let mut rng = StreamKey::new(3).rng();
        for _ in 0..10_000 {
            let s = draw_meta_slot(&cfg, &mut rng);
            if let Some(w) = s.winner1 {
                assert_eq!(cfg.group_of()[w], Group::First);
            }
            if let Some(w) = s.winner2 {
                assert_eq!(cfg.group_of()[w], Group::Second);
            }
        }
    }

    #[test]
    fn empirical_success_frequency() {
        let probs = vec![0.3, 0.2, 0.1, 0.25, 0.25];
        let groups = vec![Group::First, Group::First, Group::First, Group::Second, Group::Second];
        let cfg = ContentionConfig::new(probs, groups, 0.1, snr()).unwrap();
        let p1 = success_prob(&cfg, Group::First).unwrap();
        let mut rng = StreamKey::new(17).rng();
        let n = 1_000_000;
        let hits = (0..n).filter(|_| draw_meta_slot(&cfg, &mut rng).c1()).count();
        assert!((hits as f64 / n as f64 - p1).abs() < 0.002);
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let cfg = ContentionConfig::two_group(5, 0.2, 0.1, snr()).unwrap();
        let run = || {
            let mut rng = StreamKey::new(8).rng();
            (0..1000).map(|_| draw_meta_slot(&cfg, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn calibration_examples() {
        assert_relative_eq!(calibrate_probs((-1f64).exp(), 1).unwrap()[0], 1.0 / E, epsilon = 1e-15);
        assert_relative_eq!(calibrate_probs(0.5, 2).unwrap()[0], 0.5, epsilon = 1e-12);
        let p = calibrate_probs(1.0 / E, 10).unwrap();
        assert_eq!(p.len(), 10);
        assert!(p[0] <= 0.1);
        assert!((10.0 * p[0] * (1.0 - p[0]).powi(9) - 1.0 / E).abs() <= 1e-9);
        assert!(matches!(
            calibrate_probs(0.5, 10),
            Err(Error::UnachievableTarget { .. })
        ));
        assert!(calibrate_probs(0.0, 3).is_err());
    }

    #[test]
    fn state_probabilities_sum_to_one() {
        let cfg = ContentionConfig::two_group(10, calibrate_probs(1.0 / E, 10).unwrap()[0], 0.1, snr()).unwrap();
        let p1 = success_prob(&cfg, Group::First).unwrap();
        let p2 = success_prob(&cfg, Group::Second).unwrap();
        let total = p1 * p2 + p1 * (1.0 - p2) + (1.0 - p1) * p2 + (1.0 - p1) * (1.0 - p2);
        assert_relative_eq!(total, 1.0, epsilon = 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn success_prob_matches_enumeration(probs in proptest::collection::vec(0.01f64..=1.0, 1..8)) {
                let n = probs.len();
                let cfg = ContentionConfig::new(probs.clone(), vec![Group::First; n], 0.1, snr()).unwrap();
                let p = success_prob(&cfg, Group::First).unwrap();
                prop_assert!((0.0..=1.0).contains(&p));
                prop_assert!((p - enumerate_success(&probs)).abs() < 1e-12);
            }
        }
    }
}
