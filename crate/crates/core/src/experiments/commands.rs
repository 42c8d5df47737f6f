use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::LinkSnrConfig;
use crate::contention::{success_prob, Group};
use crate::distribution::csir::{mrc_gain_cdf_printed, oc_sinr_cdf_printed, OcPhysical};
use crate::distribution::{
    cdf_sl_csir, cdf_sl_csit, cdf_tl_csir_link, cdf_tl_csir_sum, cdf_tl_csit_link, cdf_tl_csit_sum, CsirMode,
    RateDistribution,
};
use crate::error::{Error, Result};
use crate::numfmt::sig9;
use crate::rng::StreamKey;
use crate::sim::{sample_offered_rates, sweep_snr, sweep_threshold, ProtocolKind};
use crate::threshold::{solve_threshold, CompoundReward, ThresholdSolution, DEFAULT_TOL};

use super::config::{DistSelector, ExperimentConfig};
use super::output::CommandOutput;

/// Points in the default threshold grid of `sweep-threshold`.
pub const DEFAULT_SWEEP_POINTS: usize = 31;

/// Largest KS distance accepted by `verify`.
pub const KS_LIMIT: f64 = 0.01;

const SELF_TEST_DELTA: f64 = 0.1;
const SELF_TEST_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveRecord {
    pub protocol: ProtocolKind,
    pub snr_db: f64,
    pub p1s: f64,
    /// Absent for the single-group protocol.
    pub p2s: Option<f64>,
    #[serde(flatten)]
    pub solution: ThresholdSolution,
}

/// Solver run on mean-1 exponential rewards with one always-successful link
/// and `δ = 0.1`. The fixed point solves `x·eˣ = 1/δ`.
pub fn self_test() -> Result<(ThresholdSolution, f64)> {
    let dist = RateDistribution::exponential(1.0, 40.0, 80_001)?;
    let reward = CompoundReward::single_group(1.0, &dist, SELF_TEST_DELTA)?;
    let solution = solve_threshold(&reward, DEFAULT_TOL)?;
    Ok((solution, lambert_w(1.0 / SELF_TEST_DELTA)))
}

/// Principal branch of Lambert W for `y ≥ 0`, by bisection on `x·eˣ = y`.
pub fn lambert_w(y: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, y.max(1.0));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid * mid.exp() < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn cmd_solve(config: &ExperimentConfig, run_self_test: bool) -> Result<CommandOutput> {
    config.validate()?;
    let mut out = CommandOutput::default();
    if run_self_test {
        let (s, reference) = self_test()?;
        let error = (s.x_max - reference).abs();
        writeln!(
            out.stdout,
            "self_test x_max={} reference={} error={} residual={} iterations={}",
            sig9(s.x_max),
            sig9(reference),
            sig9(error),
            sig9(s.residual),
            s.iterations
        )
        .unwrap();
        if error > SELF_TEST_TOL {
            return Err(Error::VerifyFailed(format!(
                "self-test error {error:e} exceeds {SELF_TEST_TOL:e}"
            )));
        }
        let json = serde_json::to_vec_pretty(&serde_json::json!({
            "self_test": s,
            "reference": reference,
            "error": error,
        }))
        .expect("serializable");
        if let Some(p) = &config.output_path {
            out.files.push((p.clone(), json));
        }
        return Ok(out);
    }
    let jobs: Vec<(ProtocolKind, f64)> = config
        .snr_db
        .points()
        .into_iter()
        .flat_map(|db| config.protocol.kinds().into_iter().map(move |k| (k, db)))
        .collect();
    let records: Vec<SolveRecord> = jobs
        .par_iter()
        .map(|&(kind, snr_db)| {
            let scenario = config.scenario(snr_db);
            let contention = scenario.contention_config(kind)?;
            let p1s = success_prob(&contention, Group::First)?;
            let p2s = if kind.is_two_group() {
                Some(success_prob(&contention, Group::Second)?)
            } else {
                None
            };
            Ok(SolveRecord {
                protocol: kind,
                snr_db,
                p1s,
                p2s,
                solution: scenario.solve(kind)?,
            })
        })
        .collect::<Result<_>>()?;
    for r in &records {
        writeln!(
            out.stdout,
            "{} snr_db={} x_max={} residual={} iterations={}",
            r.protocol,
            sig9(r.snr_db),
            sig9(r.solution.x_max),
            sig9(r.solution.residual),
            r.solution.iterations
        )
        .unwrap();
    }
    if let Some(p) = &config.output_path {
        let mut json = serde_json::to_vec_pretty(&records).expect("serializable");
        json.push(b'\n');
        out.files.push((p.clone(), json));
    }
    Ok(out)
}

/// `n` evenly spaced thresholds on `[0, 2·x_max]`, centred on `x_max`.
pub fn default_thresholds(x_max: f64, n: usize) -> Vec<f64> {
    let half = (n - 1) as f64 / 2.0;
    (0..n).map(|i| x_max * i as f64 / half).collect()
}

pub fn cmd_sweep_threshold(config: &ExperimentConfig) -> Result<CommandOutput> {
    config.validate()?;
    let root = StreamKey::new(config.seed).child("sweep_threshold", 0);
    let options = config.sim_options();
    let mut csv = String::from("protocol,snr_db,threshold_nats,throughput_nats,ci95,x_max\n");
    for (i, snr_db) in config.snr_db.points().into_iter().enumerate() {
        let scenario = config.scenario(snr_db);
        for kind in config.protocol.kinds() {
            let x_max = scenario.solve(kind)?.x_max;
            let thresholds = match config.thresholds {
                Some(t) => t.points(),
                None => default_thresholds(x_max, DEFAULT_SWEEP_POINTS),
            };
            let contention = scenario.contention_config(kind)?;
            let key = root.child("snr", i as u64).child(kind.name(), 0);
            let points = sweep_threshold(
                kind,
                &contention,
                &thresholds,
                config.decision_rule,
                config.renewals,
                key,
                &options,
            )?;
            for p in points {
                writeln!(
                    csv,
                    "{kind},{},{},{},{},{}",
                    sig9(snr_db),
                    sig9(p.threshold),
                    sig9(p.throughput),
                    sig9(p.ci95),
                    sig9(x_max)
                )
                .unwrap();
            }
        }
    }
    let mut out = CommandOutput::default();
    out.emit(config.output_path.as_deref(), csv.into_bytes());
    Ok(out)
}

pub fn cmd_sweep_snr(config: &ExperimentConfig) -> Result<CommandOutput> {
    config.validate()?;
    let key = StreamKey::new(config.seed).child("sweep_snr", 0);
    let rows = sweep_snr(
        &config.protocol.kinds(),
        &config.snr_db.points(),
        &config.scenario(0.0),
        config.renewals,
        key,
        &config.sim_options(),
    )?;
    let mut csv = String::from("protocol,snr_db,x_max,sim_throughput,ci95,ratio_vs_sg_csit\n");
    for r in rows {
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.protocol,
            sig9(r.snr_db),
            sig9(r.x_max),
            sig9(r.sim_throughput),
            sig9(r.ci95),
            sig9(r.ratio_vs_sg_csit)
        )
        .unwrap();
    }
    let mut out = CommandOutput::default();
    out.emit(config.output_path.as_deref(), csv.into_bytes());
    Ok(out)
}

/// Tabulates one rate variable at one SNR.
pub fn build_distribution(config: &ExperimentConfig, which: DistSelector, snr_db: f64) -> Result<RateDistribution> {
    let snr = LinkSnrConfig::from_db(snr_db, config.rho_n)?;
    let q = config.quadrature();
    let mode = config.csir_mode;
    match which {
        DistSelector::SlCsit => cdf_sl_csit(snr.rho_s, &q),
        DistSelector::TlCsitLink => cdf_tl_csit_link(&snr, &q),
        DistSelector::TlCsitSum => cdf_tl_csit_sum(&snr, &q),
        DistSelector::SlCsir => cdf_sl_csir(snr.rho_s, mode, &q),
        DistSelector::TlCsirLink => cdf_tl_csir_link(&snr, mode, &q),
        DistSelector::TlCsirSum => cdf_tl_csir_sum(&snr, mode, &q),
    }
}

#[derive(Debug, Serialize)]
struct DumpSidecar {
    which: DistSelector,
    snr_db: f64,
    rho_n: f64,
    csir_mode: CsirMode,
    grid_points: usize,
    upper_rate: f64,
    tail_mass: f64,
    mean: f64,
    cdf_at_upper: f64,
}

pub fn cmd_dump_dist(config: &ExperimentConfig) -> Result<CommandOutput> {
    config.validate()?;
    let path = config
        .output_path
        .clone()
        .ok_or_else(|| Error::config("output_path", "dump-dist writes a CSV and a JSON sidecar; set --out"))?;
    let sidecar = sidecar_path(&path);
    if sidecar == path {
        return Err(Error::config("output_path", "must not end in .json"));
    }
    let points = config.snr_db.points();
    let [snr_db] = points.as_slice() else {
        return Err(Error::config("snr_db", "dump-dist takes a single SNR"));
    };
    let dist = build_distribution(config, config.which, *snr_db)?;
    let mut csv = Vec::new();
    dist.write_csv(&mut csv).expect("in-memory write");
    let meta = DumpSidecar {
        which: config.which,
        snr_db: *snr_db,
        rho_n: config.rho_n,
        csir_mode: config.csir_mode,
        grid_points: dist.grid().len(),
        upper_rate: dist.upper_rate(),
        tail_mass: dist.tail_mass(),
        mean: dist.mean(),
        cdf_at_upper: *dist.cdf_values().last().expect("nonempty grid"),
    };
    let mut json = serde_json::to_vec_pretty(&meta).expect("serializable");
    json.push(b'\n');
    let mut out = CommandOutput::default();
    out.files.push((path, csv));
    out.files.push((sidecar, json));
    Ok(out)
}

/// `out.csv` → `out.json`.
pub fn sidecar_path(path: &std::path::Path) -> PathBuf {
    path.with_extension("json")
}

/// One Monte Carlo check of a tabulated law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyCheck {
    pub name: &'static str,
    pub protocol: ProtocolKind,
    pub mode: CsirMode,
    pub pair: bool,
    pub which: DistSelector,
}

pub const VERIFY_CHECKS: [VerifyCheck; 6] = [
    VerifyCheck {
        name: "sl_csit",
        protocol: ProtocolKind::TgCsit,
        mode: CsirMode::Paper,
        pair: false,
        which: DistSelector::SlCsit,
    },
    VerifyCheck {
        name: "tl_csit_sum",
        protocol: ProtocolKind::TgCsit,
        mode: CsirMode::Paper,
        pair: true,
        which: DistSelector::TlCsitSum,
    },
    VerifyCheck {
        name: "sl_csir_physical",
        protocol: ProtocolKind::TgCsir,
        mode: CsirMode::Physical,
        pair: false,
        which: DistSelector::SlCsir,
    },
    VerifyCheck {
        name: "tl_csir_sum_paper",
        protocol: ProtocolKind::TgCsir,
        mode: CsirMode::Paper,
        pair: true,
        which: DistSelector::TlCsirSum,
    },
    VerifyCheck {
        name: "sl_csir_paper",
        protocol: ProtocolKind::TgCsir,
        mode: CsirMode::Paper,
        pair: false,
        which: DistSelector::SlCsir,
    },
    VerifyCheck {
        name: "tl_csir_sum_physical",
        protocol: ProtocolKind::TgCsir,
        mode: CsirMode::Physical,
        pair: true,
        which: DistSelector::TlCsirSum,
    },
];

const CHUNK: usize = 1 << 16;

/// KS distance between the tabulated law of `check` and `samples` offered rates
/// drawn the way the simulator draws them.
pub fn ks_check(
    config: &ExperimentConfig,
    check: &VerifyCheck,
    snr_db: f64,
    samples: usize,
    key: StreamKey,
) -> Result<f64> {
    let snr = LinkSnrConfig::from_db(snr_db, config.rho_n)?;
    let table_config = ExperimentConfig {
        csir_mode: check.mode,
        ..config.clone()
    };
    let dist = build_distribution(&table_config, check.which, snr_db)?;
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = CHUNK.min(samples - c * CHUNK);
            let mut rng = key.child("chunk", c as u64).rng();
            sample_offered_rates(check.protocol, &snr, check.mode, check.pair, n, &mut rng)
        })
        .collect::<Result<_>>()?;
    let mut all: Vec<f64> = parts.concat();
    Ok(dist.ks_distance(&mut all))
}

/// Largest gap between the published MRC output-SNR CDF and the exact Gamma(2) law.
pub fn printed_mrc_deviation(rho_s: f64) -> f64 {
    (0..=4000)
        .map(|i| {
            let g = rho_s * i as f64 * 0.01;
            let t = g / rho_s;
            let exact = 1.0 - (1.0 + t) * (-t).exp();
            (mrc_gain_cdf_printed(g, rho_s) - exact).abs()
        })
        .fold(0.0, f64::max)
}

/// Largest gap between the published optimal-combining SINR CDF and the exact law.
pub fn printed_oc_deviation(snr: &LinkSnrConfig) -> f64 {
    let oc = OcPhysical::new(snr, 1024);
    (0..=4000)
        .map(|i| {
            let g = snr.rho_s * i as f64 * 0.01;
            (oc_sinr_cdf_printed(g, snr) - oc.cdf_sinr(g)).abs()
        })
        .fold(0.0, f64::max)
}

pub fn cmd_verify(config: &ExperimentConfig) -> Result<CommandOutput> {
    config.validate()?;
    let root = StreamKey::new(config.seed).child("verify", 0);
    let mut csv = String::from("check,snr_db,samples,statistic,limit,status\n");
    let mut failures = Vec::new();
    for (i, snr_db) in config.snr_db.points().into_iter().enumerate() {
        for (j, check) in VERIFY_CHECKS.iter().enumerate() {
            let key = root.child("snr", i as u64).child("check", j as u64);
            let ks = ks_check(config, check, snr_db, config.samples, key)?;
            let pass = ks < KS_LIMIT;
            if !pass {
                failures.push(format!("{} at {snr_db} dB: KS {ks}", check.name));
            }
            writeln!(
                csv,
                "{},{},{},{},{},{}",
                check.name,
                sig9(snr_db),
                config.samples,
                sig9(ks),
                sig9(KS_LIMIT),
                if pass { "pass" } else { "fail" }
            )
            .unwrap();
        }
        let snr = LinkSnrConfig::from_db(snr_db, config.rho_n)?;
        for (name, dev) in [
            ("printed_mrc_cdf_deviation", printed_mrc_deviation(snr.rho_s)),
            ("printed_oc_cdf_deviation", printed_oc_deviation(&snr)),
        ] {
            writeln!(csv, "{name},{},0,{},,info", sig9(snr_db), sig9(dev)).unwrap();
        }
    }
    let mut out = CommandOutput::default();
    out.emit(config.output_path.as_deref(), csv.into_bytes());
    if !failures.is_empty() {
        // The report is still written so the failing rows can be inspected.
        out.commit()?;
        return Err(Error::VerifyFailed(failures.join("; ")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambert_w_reference() {
        let w = lambert_w(10.0);
        assert!((w * w.exp() - 10.0).abs() < 1e-12);
        assert!((w - 1.745528).abs() < 1e-6);
    }

    #[test]
    fn self_test_hits_reference() {
        let (s, w) = self_test().unwrap();
        assert!((s.x_max - w).abs() <= 1e-6);
    }

    #[test]
    fn default_grid_is_centred() {
        let g = default_thresholds(4.0, 31);
        assert_eq!(g.len(), 31);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[15], 4.0);
        assert_eq!(g[30], 8.0);
    }

    #[test]
    fn printed_laws_deviate() {
        // The published MRC law has the wrong scale; the OC law is close but inexact.
        assert!(printed_mrc_deviation(10.0) > 0.1);
        let snr = LinkSnrConfig::from_db(10.0, 1.0).unwrap();
        assert!(printed_oc_deviation(&snr) > 1e-3);
    }

    #[test]
    fn sidecar_replaces_extension() {
        assert_eq!(sidecar_path(std::path::Path::new("a/b.csv")), PathBuf::from("a/b.json"));
    }
}
