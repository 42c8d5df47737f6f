//! Renewal-reward Monte Carlo of the three scheduling protocols.
//!
//! Each renewal runs contention slots until some winner transmits. A winner
//! transmits iff the rate on offer clears the threshold; otherwise everyone
//! re-contends and the elapsed time keeps counting. Rates are drawn from
//! sampled channels (or, for CSIR in paper mode, by inverting the published
//! laws), never from the tabulated distributions the solver uses.
//!
//! Renewals are split into batches. Each batch owns the substreams
//! `key/batch[b]/contention[0]` and `key/batch[b]/channel[0]`, batches run in
//! parallel, and their tallies merge in batch order, so a report depends only
//! on the key and the inputs.

mod report;
mod scenario;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    gain_mrc, rate_sl_csir, rate_sl_csit, rate_tl_csir_sum, rate_tl_csit, sample_channel, sample_vector, sinr_oc,
    LinkSnrConfig,
};
use crate::contention::{draw_meta_slot, draw_mini_slot, ContentionConfig, Group};
use crate::distribution::csir::PaperCsirSampler;
use crate::distribution::CsirMode;
use crate::error::{Error, Result};
use crate::rng::StreamKey;

pub use report::{batch_means_halfwidth, SimReport};
pub use scenario::{sweep_snr, Scenario, SnrRow};

use report::BatchTally;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    TgCsit,
    TgCsir,
    SgCsit,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 3] = [ProtocolKind::TgCsit, ProtocolKind::TgCsir, ProtocolKind::SgCsit];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::TgCsit => "tg_csit",
            ProtocolKind::TgCsir => "tg_csir",
            ProtocolKind::SgCsit => "sg_csit",
        }
    }

    pub fn is_two_group(self) -> bool {
        !matches!(self, ProtocolKind::SgCsit)
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    /// Accepts `tg_csit`, `tg-csit` and `TG-CSIT` alike.
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "tg_csit" => Ok(ProtocolKind::TgCsit),
            "tg_csir" => Ok(ProtocolKind::TgCsir),
            "sg_csit" => Ok(ProtocolKind::SgCsit),
            _ => Err(Error::config("protocol", format!("unknown protocol `{s}`"))),
        }
    }
}

/// How a two-winner slot is resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionRule {
    /// Compare the two-link sum rate to the threshold; both links transmit or neither.
    #[default]
    ApproxSum,
    /// Take the best of the two single-link rates and the sum rate.
    ExactMax,
}

impl fmt::Display for DecisionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecisionRule::ApproxSum => "approx_sum",
            DecisionRule::ExactMax => "exact_max",
        })
    }
}

impl FromStr for DecisionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "approx_sum" => Ok(DecisionRule::ApproxSum),
            "exact_max" => Ok(DecisionRule::ExactMax),
            _ => Err(Error::config("decision_rule", format!("unknown decision rule `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicySpec {
    pub threshold: f64,
    /// Only consulted by TG-CSIT.
    pub decision_rule: DecisionRule,
}

impl PolicySpec {
    pub fn new(threshold: f64) -> Self {
        PolicySpec {
            threshold,
            decision_rule: DecisionRule::ApproxSum,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub batches: usize,
    pub csir_mode: CsirMode,
    /// A renewal that needs more slots than this ends its batch early.
    pub max_slots_per_renewal: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            batches: 20,
            csir_mode: CsirMode::Paper,
            max_slots_per_renewal: 1_000_000,
        }
    }
}

/// Draws offered rates for one protocol.
#[derive(Debug, Clone, Copy)]
enum RateSource {
    Csit(LinkSnrConfig),
    CsirPhysical(LinkSnrConfig),
    CsirPaper(PaperCsirSampler),
}

/// What a slot offers after contention.
enum Offer {
    Single(f64),
    /// Best action of a two-winner slot: its rate and whether both links transmit.
    Pair {
        rate: f64,
        both: bool,
    },
}

impl RateSource {
    fn new(kind: ProtocolKind, snr: &LinkSnrConfig, mode: CsirMode) -> Result<Self> {
        Ok(match (kind, mode) {
            (ProtocolKind::TgCsir, CsirMode::Paper) => RateSource::CsirPaper(PaperCsirSampler::new(snr)?),
            (ProtocolKind::TgCsir, CsirMode::Physical) => RateSource::CsirPhysical(*snr),
            _ => RateSource::Csit(*snr),
        })
    }

    fn single<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            RateSource::Csit(snr) => rate_sl_csit(&sample_channel(rng), snr).value,
            RateSource::CsirPhysical(snr) => rate_sl_csir(gain_mrc(&sample_vector(rng)), snr).value,
            RateSource::CsirPaper(s) => s.sample_sl(rng),
        }
    }

    fn pair<R: Rng + ?Sized>(&self, rule: DecisionRule, rng: &mut R) -> Offer {
        match self {
            RateSource::Csit(snr) => {
                let h1 = sample_channel(rng);
                let h2 = sample_channel(rng);
                let sum = rate_tl_csit(&h1, snr).value + rate_tl_csit(&h2, snr).value;
                match rule {
                    DecisionRule::ApproxSum => Offer::Pair { rate: sum, both: true },
                    DecisionRule::ExactMax => {
                        let best_single = rate_sl_csit(&h1, snr).value.max(rate_sl_csit(&h2, snr).value);
                        if sum >= best_single {
                            Offer::Pair { rate: sum, both: true }
                        } else {
                            Offer::Pair {
                                rate: best_single,
                                both: false,
                            }
                        }
                    }
                }
            }
            RateSource::CsirPhysical(snr) => {
                let (h11, h21) = (sample_vector(rng), sample_vector(rng));
                let (h22, h12) = (sample_vector(rng), sample_vector(rng));
                let sum = rate_tl_csir_sum(sinr_oc(&h11, &h21, snr), sinr_oc(&h22, &h12, snr)).value;
                Offer::Pair { rate: sum, both: true }
            }
            RateSource::CsirPaper(s) => Offer::Pair {
                rate: s.sample_tl_link(rng) + s.sample_tl_link(rng),
                both: true,
            },
        }
    }
}

fn slot_cost(kind: ProtocolKind, config: &ContentionConfig) -> f64 {
    if kind.is_two_group() {
        2.0 * config.delta()
    } else {
        config.delta()
    }
}

fn check_shape(kind: ProtocolKind, config: &ContentionConfig) -> Result<()> {
    if kind.is_two_group() == config.is_single_group() {
        let want = if kind.is_two_group() { "two groups" } else { "one group" };
        return Err(Error::config(
            "protocol",
            format!("{kind} needs a contention config with {want}"),
        ));
    }
    Ok(())
}

fn run_batch(
    kind: ProtocolKind,
    config: &ContentionConfig,
    policy: &PolicySpec,
    source: &RateSource,
    renewals: u64,
    key: StreamKey,
    max_slots: u64,
) -> BatchTally {
    let mut contention = key.child("contention", 0).rng();
    let mut channel = key.child("channel", 0).rng();
    let mut tally = BatchTally::default();
    let x = policy.threshold;
    for _ in 0..renewals {
        let mut used = 0u64;
        loop {
            if used == max_slots {
                tally.truncated = true;
                return tally;
            }
            used += 1;
            tally.slots += 1;
            let offer = if kind.is_two_group() {
                let state = draw_meta_slot(config, &mut contention);
                tally.state_counts[state.code()] += 1;
                match (state.c1(), state.c2()) {
                    (false, false) => None,
                    (true, true) => Some(source.pair(policy.decision_rule, &mut channel)),
                    _ => Some(Offer::Single(source.single(&mut channel))),
                }
            } else {
                let won = draw_mini_slot(config, Group::First, &mut contention).is_some();
                tally.state_counts[if won { 2 } else { 0 }] += 1;
                won.then(|| Offer::Single(source.single(&mut channel)))
            };
            match offer {
                Some(Offer::Single(r)) if r >= x => {
                    tally.reward += r;
                    tally.single_tx += 1;
                    break;
                }
                Some(Offer::Pair { rate, both }) if rate >= x => {
                    tally.reward += rate;
                    if both {
                        tally.pair_tx += 1;
                    } else {
                        tally.single_tx += 1;
                    }
                    break;
                }
                _ => {}
            }
        }
    }
    tally
}

/// Simulates `renewals` transmissions under a fixed threshold policy.
pub fn run_protocol(
    kind: ProtocolKind,
    config: &ContentionConfig,
    policy: &PolicySpec,
    renewals: u64,
    key: StreamKey,
    options: &SimOptions,
) -> Result<SimReport> {
    check_shape(kind, config)?;
    if renewals == 0 {
        return Err(Error::config("renewals", "must be positive"));
    }
    if !(policy.threshold >= 0.0) || policy.threshold.is_nan() {
        return Err(Error::config(
            "threshold",
            format!("{} must be a nonnegative number", policy.threshold),
        ));
    }
    if options.batches == 0 {
        return Err(Error::config("batches", "must be positive"));
    }
    let source = RateSource::new(kind, config.snr(), options.csir_mode)?;
    let batches = (options.batches as u64).min(renewals);
    let (base, extra) = (renewals / batches, renewals % batches);
    let tallies: Vec<BatchTally> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let n = base + u64::from(b < extra);
            run_batch(
                kind,
                config,
                policy,
                &source,
                n,
                key.child("batch", b),
                options.max_slots_per_renewal,
            )
        })
        .collect();
    Ok(SimReport::from_batches(&tallies, slot_cost(kind, config)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdPoint {
    pub threshold: f64,
    pub throughput: f64,
    pub ci95: f64,
}

/// Simulated throughput at each threshold; point `i` uses substream `key/threshold[i]`.
pub fn sweep_threshold(
    kind: ProtocolKind,
    config: &ContentionConfig,
    thresholds: &[f64],
    decision_rule: DecisionRule,
    renewals: u64,
    key: StreamKey,
    options: &SimOptions,
) -> Result<Vec<ThresholdPoint>> {
    if thresholds.is_empty() {
        return Err(Error::config("thresholds", "grid is empty"));
    }
    if thresholds.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::config("thresholds", "must be strictly increasing"));
    }
    thresholds
        .par_iter()
        .enumerate()
        .map(|(i, &threshold)| {
            let policy = PolicySpec {
                threshold,
                decision_rule,
            };
            let r = run_protocol(
                kind,
                config,
                &policy,
                renewals,
                key.child("threshold", i as u64),
                options,
            )?;
            Ok(ThresholdPoint {
                threshold,
                throughput: r.throughput,
                ci95: r.ci_halfwidth,
            })
        })
        .collect()
}

/// Rates offered by a protocol's contention winners, for distribution checks.
pub fn sample_offered_rates<R: Rng + ?Sized>(
    kind: ProtocolKind,
    snr: &LinkSnrConfig,
    mode: CsirMode,
    pair: bool,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let source = RateSource::new(kind, snr, mode)?;
    Ok((0..n)
        .map(|_| {
            if pair {
                match source.pair(DecisionRule::ApproxSum, rng) {
                    Offer::Pair { rate, .. } | Offer::Single(rate) => rate,
                }
            } else {
                source.single(rng)
            }
        })
        .collect())
}
