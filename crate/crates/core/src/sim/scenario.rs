use rayon::prelude::*;
use serde::Serialize;

use crate::channel::LinkSnrConfig;
use crate::contention::{calibrate_probs, success_prob, ContentionConfig, Group};
use crate::distribution::{
    cdf_sl_csir, cdf_sl_csit, cdf_tl_csir_sum, cdf_tl_csit_sum, CsirMode, QuadratureSpec, RateDistribution,
};
use crate::error::{Error, Result};
use crate::rng::StreamKey;
use crate::threshold::{solve_threshold, CompoundReward, ThresholdSolution, DEFAULT_TOL};

use super::{run_protocol, DecisionRule, PolicySpec, ProtocolKind, SimOptions};

/// One operating point: SNRs, probing overhead and contention target.
///
/// Two-group protocols put `links_per_group` links in each group, calibrated
/// so each group succeeds with probability `target_ps`. The single-group
/// protocol pools all `2·links_per_group` links into one group with the same
/// success target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scenario {
    pub snr_db: f64,
    pub rho_n: f64,
    pub delta: f64,
    pub target_ps: f64,
    pub links_per_group: usize,
    pub csir_mode: CsirMode,
    pub decision_rule: DecisionRule,
    pub quadrature: QuadratureSpec,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            snr_db: 20.0,
            rho_n: 1.0,
            delta: 0.1,
            target_ps: (-1f64).exp(),
            links_per_group: 10,
            csir_mode: CsirMode::Paper,
            decision_rule: DecisionRule::ApproxSum,
            quadrature: QuadratureSpec::default(),
        }
    }
}

/// Rate distributions offered by one protocol's channel states.
#[derive(Debug, Clone)]
pub struct ProtocolDistributions {
    pub single: RateDistribution,
    /// Two-link sum rate; absent for the single-group protocol.
    pub pair_sum: Option<RateDistribution>,
}

impl Scenario {
    pub fn snr(&self) -> Result<LinkSnrConfig> {
        LinkSnrConfig::from_db(self.snr_db, self.rho_n)
    }

    pub fn with_snr_db(&self, snr_db: f64) -> Self {
        Scenario { snr_db, ..*self }
    }

    pub fn contention_config(&self, kind: ProtocolKind) -> Result<ContentionConfig> {
        if self.links_per_group == 0 {
            return Err(Error::config("links_per_group", "must be positive"));
        }
        let snr = self.snr()?;
        if kind.is_two_group() {
            let p = calibrate_probs(self.target_ps, self.links_per_group)?[0];
            ContentionConfig::two_group(self.links_per_group, p, self.delta, snr)
        } else {
            let links = 2 * self.links_per_group;
            let p = calibrate_probs(self.target_ps, links)?[0];
            ContentionConfig::single_group(links, p, self.delta, snr)
        }
    }

    pub fn distributions(&self, kind: ProtocolKind) -> Result<ProtocolDistributions> {
        let snr = self.snr()?;
        let q = &self.quadrature;
        Ok(match kind {
            ProtocolKind::TgCsit => ProtocolDistributions {
                single: cdf_sl_csit(snr.rho_s, q)?,
                pair_sum: Some(cdf_tl_csit_sum(&snr, q)?),
            },
            ProtocolKind::TgCsir => ProtocolDistributions {
                single: cdf_sl_csir(snr.rho_s, self.csir_mode, q)?,
                pair_sum: Some(cdf_tl_csir_sum(&snr, self.csir_mode, q)?),
            },
            ProtocolKind::SgCsit => ProtocolDistributions {
                single: cdf_sl_csit(snr.rho_s, q)?,
                pair_sum: None,
            },
        })
    }

    /// Optimal threshold for `kind`, using the analytic success probabilities
    /// of its contention config.
    pub fn solve(&self, kind: ProtocolKind) -> Result<ThresholdSolution> {
        let config = self.contention_config(kind)?;
        let dists = self.distributions(kind)?;
        solve_with(&config, &dists)
    }
}

pub(crate) fn solve_with(config: &ContentionConfig, dists: &ProtocolDistributions) -> Result<ThresholdSolution> {
    let p1 = success_prob(config, Group::First)?;
    let reward = match &dists.pair_sum {
        Some(pair) => {
            let p2 = success_prob(config, Group::Second)?;
            CompoundReward::two_group(p1, p2, &dists.single, pair, config.delta())?
        }
        None => CompoundReward::single_group(p1, &dists.single, config.delta())?,
    };
    solve_threshold(&reward, DEFAULT_TOL)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnrRow {
    pub protocol: ProtocolKind,
    pub snr_db: f64,
    pub x_max: f64,
    pub sim_throughput: f64,
    pub ci95: f64,
    /// `x_max` of this protocol over that of SG-CSIT at the same SNR.
    pub ratio_vs_sg_csit: f64,
}

/// Solves and simulates every protocol at every SNR. Rows come out SNR-major
/// in the order of `kinds`; the run for SNR `i` and protocol `k` uses
/// substream `key/snr[i]/<k>[0]`.
pub fn sweep_snr(
    kinds: &[ProtocolKind],
    snr_db_grid: &[f64],
    base: &Scenario,
    renewals: u64,
    key: StreamKey,
    options: &SimOptions,
) -> Result<Vec<SnrRow>> {
    if kinds.is_empty() {
        return Err(Error::config("protocol", "no protocols requested"));
    }
    if snr_db_grid.is_empty() {
        return Err(Error::config("snr_db", "grid is empty"));
    }
    let options = SimOptions {
        csir_mode: base.csir_mode,
        ..*options
    };
    let per_snr: Vec<Vec<SnrRow>> = snr_db_grid
        .par_iter()
        .enumerate()
        .map(|(i, &snr_db)| {
            let scenario = base.with_snr_db(snr_db);
            let reference = scenario.solve(ProtocolKind::SgCsit)?.x_max;
            kinds
                .iter()
                .map(|&kind| {
                    let config = scenario.contention_config(kind)?;
                    let x_max = solve_with(&config, &scenario.distributions(kind)?)?.x_max;
                    let policy = PolicySpec {
                        threshold: x_max,
                        decision_rule: scenario.decision_rule,
                    };
                    let stream = key.child("snr", i as u64).child(kind.name(), 0);
                    let report = run_protocol(kind, &config, &policy, renewals, stream, &options)?;
                    Ok(SnrRow {
                        protocol: kind,
                        snr_db,
                        x_max,
                        sim_throughput: report.throughput,
                        ci95: report.ci_halfwidth,
                        ratio_vs_sg_csit: x_max / reference,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(per_snr.into_iter().flatten().collect())
}
