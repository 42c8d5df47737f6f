//! Flat `key = value` experiment configuration.
//!
//! Keys are the field names of [`ExperimentConfig`]. Blank lines and lines
//! starting with `#` are skipped. Command-line overrides are applied with the
//! same keys after the file, and the result is validated as a whole before
//! any command runs.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::distribution::{CsirMode, QuadratureSpec};
use crate::error::{Error, Result};
use crate::sim::{DecisionRule, ProtocolKind, Scenario, SimOptions};

/// Either one value or an inclusive `from:to:step` sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Sweep {
    Single(f64),
    Range { from: f64, to: f64, step: f64 },
}

impl Sweep {
    pub fn points(&self) -> Vec<f64> {
        match *self {
            Sweep::Single(v) => vec![v],
            Sweep::Range { from, to, step } => {
                let n = ((to - from) / step + 1e-9).floor() as usize + 1;
                (0..n).map(|i| from + i as f64 * step).collect()
            }
        }
    }
}

impl FromStr for Sweep {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let num = |p: &str| {
            p.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("`{p}` is not a finite number"))
        };
        match parts.as_slice() {
            [v] => Ok(Sweep::Single(num(v)?)),
            [from, to, step] => {
                let (from, to, step) = (num(from)?, num(to)?, num(step)?);
                if !(step > 0.0) {
                    return Err(format!("sweep step {step} must be positive"));
                }
                if to < from {
                    return Err(format!("sweep end {to} is below its start {from}"));
                }
                Ok(Sweep::Range { from, to, step })
            }
            _ => Err(format!("`{s}` is neither a number nor from:to:step")),
        }
    }
}

impl fmt::Display for Sweep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sweep::Single(v) => write!(f, "{v}"),
            Sweep::Range { from, to, step } => write!(f, "{from}:{to}:{step}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProtocolSelection {
    One(ProtocolKind),
    All,
}

impl ProtocolSelection {
    pub fn kinds(&self) -> Vec<ProtocolKind> {
        match self {
            ProtocolSelection::One(k) => vec![*k],
            ProtocolSelection::All => ProtocolKind::ALL.to_vec(),
        }
    }
}

impl FromStr for ProtocolSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("all") {
            Ok(ProtocolSelection::All)
        } else {
            s.parse().map(ProtocolSelection::One)
        }
    }
}

/// Rate variable selected by `dump-dist`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DistSelector {
    SlCsit,
    TlCsitLink,
    TlCsitSum,
    SlCsir,
    TlCsirLink,
    TlCsirSum,
}

impl DistSelector {
    pub fn name(self) -> &'static str {
        match self {
            DistSelector::SlCsit => "sl_csit",
            DistSelector::TlCsitLink => "tl_csit_link",
            DistSelector::TlCsitSum => "tl_csit_sum",
            DistSelector::SlCsir => "sl_csir",
            DistSelector::TlCsirLink => "tl_csir_link",
            DistSelector::TlCsirSum => "tl_csir_sum",
        }
    }
}

impl FromStr for DistSelector {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let all = [
            DistSelector::SlCsit,
            DistSelector::TlCsitLink,
            DistSelector::TlCsitSum,
            DistSelector::SlCsir,
            DistSelector::TlCsirLink,
            DistSelector::TlCsirSum,
        ];
        let key = s.to_ascii_lowercase().replace('-', "_");
        all.into_iter()
            .find(|d| d.name() == key)
            .ok_or_else(|| format!("unknown distribution `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub protocol: ProtocolSelection,
    pub snr_db: Sweep,
    pub rho_n: f64,
    pub delta: f64,
    pub target_ps: f64,
    pub links_per_group: usize,
    pub renewals: u64,
    pub seed: u64,
    pub csir_mode: CsirMode,
    pub decision_rule: DecisionRule,
    pub output_path: Option<PathBuf>,
    /// Threshold grid for `sweep-threshold`; by default 31 points on `[0, 2·x_max]`.
    pub thresholds: Option<Sweep>,
    pub which: DistSelector,
    pub batches: usize,
    pub grid_points: usize,
    /// Monte Carlo sample count per `verify` check.
    pub samples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let scenario = Scenario::default();
        ExperimentConfig {
            protocol: ProtocolSelection::One(ProtocolKind::TgCsit),
            snr_db: Sweep::Single(scenario.snr_db),
            rho_n: scenario.rho_n,
            delta: scenario.delta,
            target_ps: scenario.target_ps,
            links_per_group: scenario.links_per_group,
            renewals: 100_000,
            seed: 1,
            csir_mode: scenario.csir_mode,
            decision_rule: scenario.decision_rule,
            output_path: None,
            thresholds: None,
            which: DistSelector::SlCsit,
            batches: SimOptions::default().batches,
            grid_points: QuadratureSpec::default().grid_points,
            samples: 1_000_000,
        }
    }
}

fn parsed<T: FromStr>(value: &str) -> std::result::Result<T, String>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| format!("`{value}`: {e}"))
}

fn finite(value: &str) -> std::result::Result<f64, String> {
    let v: f64 = parsed(value)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{value}` is not finite"))
    }
}

impl ExperimentConfig {
    pub const KEYS: [&'static str; 16] = [
        "protocol",
        "snr_db",
        "rho_n",
        "delta",
        "target_ps",
        "links_per_group",
        "renewals",
        "seed",
        "csir_mode",
        "decision_rule",
        "output_path",
        "thresholds",
        "which",
        "batches",
        "grid_points",
        "samples",
    ];

    /// Sets one field from its textual value. Range checks happen in [`validate`](Self::validate).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let field_err = |reason: String| Error::config(key, reason);
        match key {
            "protocol" => self.protocol = value.parse()?,
            "snr_db" => self.snr_db = value.parse().map_err(field_err)?,
            "rho_n" => self.rho_n = finite(value).map_err(field_err)?,
            "delta" => self.delta = finite(value).map_err(field_err)?,
            "target_ps" => self.target_ps = finite(value).map_err(field_err)?,
            "links_per_group" => self.links_per_group = parsed(value).map_err(field_err)?,
            "renewals" => self.renewals = parsed(value).map_err(field_err)?,
            "seed" => self.seed = parsed(value).map_err(field_err)?,
            "csir_mode" => self.csir_mode = value.parse().map_err(field_err)?,
            "decision_rule" => self.decision_rule = value.parse()?,
            "output_path" => self.output_path = (!value.is_empty()).then(|| PathBuf::from(value)),
            "thresholds" => self.thresholds = Some(value.parse().map_err(field_err)?),
            "which" => self.which = value.parse().map_err(field_err)?,
            "batches" => self.batches = parsed(value).map_err(field_err)?,
            "grid_points" => self.grid_points = parsed(value).map_err(field_err)?,
            "samples" => self.samples = parsed(value).map_err(field_err)?,
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`, reporting the line of the first failure.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigLine {
                line: i + 1,
                field: line.to_string(),
                reason: "expected `key = value`".into(),
            })?;
            let key = key.trim();
            self.set(key, value).map_err(|e| match e {
                Error::InvalidConfig { reason, .. } => Error::ConfigLine {
                    line: i + 1,
                    field: key.to_string(),
                    reason,
                },
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::default();
        config.apply_text(&text)?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(field, format!("{v} must be positive")))
            }
        };
        positive("rho_n", self.rho_n)?;
        positive("delta", self.delta)?;
        if !(self.target_ps > 0.0 && self.target_ps <= 1.0) {
            return Err(Error::config("target_ps", format!("{} outside (0, 1]", self.target_ps)));
        }
        for (field, v) in [
            ("links_per_group", self.links_per_group as u64),
            ("renewals", self.renewals),
            ("batches", self.batches as u64),
            ("samples", self.samples as u64),
        ] {
            if v == 0 {
                return Err(Error::config(field, "must be positive"));
            }
        }
        if let Some(Sweep::Single(t) | Sweep::Range { from: t, .. }) = self.thresholds {
            if t < 0.0 {
                return Err(Error::config("thresholds", format!("threshold {t} is negative")));
            }
        }
        if self.snr_db.points().len() > 10_000 {
            return Err(Error::config("snr_db", "sweep has more than 10000 points"));
        }
        self.quadrature().validate()?;
        // Calibration must be feasible for both group layouts.
        for kind in self.protocol.kinds() {
            self.scenario(self.snr_db.points()[0]).contention_config(kind)?;
        }
        Ok(())
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec {
            grid_points: self.grid_points,
            ..QuadratureSpec::default()
        }
    }

    pub fn scenario(&self, snr_db: f64) -> Scenario {
        Scenario {
            snr_db,
            rho_n: self.rho_n,
            delta: self.delta,
            target_ps: self.target_ps,
            links_per_group: self.links_per_group,
            csir_mode: self.csir_mode,
            decision_rule: self.decision_rule,
            quadrature: self.quadrature(),
        }
    }

    pub fn sim_options(&self) -> SimOptions {
        SimOptions {
            batches: self.batches,
            csir_mode: self.csir_mode,
            ..SimOptions::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweeps_parse_and_expand() {
        assert_eq!("20".parse::<Sweep>().unwrap().points(), vec![20.0]);
        assert_eq!(
            "0:25:5".parse::<Sweep>().unwrap().points(),
            vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0]
        );
        assert_eq!("0:1:0.1".parse::<Sweep>().unwrap().points().len(), 11);
        assert_eq!("-5:-5:1".parse::<Sweep>().unwrap().points(), vec![-5.0]);
        assert!("1:0:1".parse::<Sweep>().is_err());
        assert!("0:1:0".parse::<Sweep>().is_err());
        assert!("0:1".parse::<Sweep>().is_err());
        assert!("x".parse::<Sweep>().is_err());
    }

    #[test]
    fn file_lines_apply_in_order() {
        let mut c = ExperimentConfig::default();
        c.apply_text("# scenario\nprotocol = all\n\nsnr_db = 0:25:5\ndelta=0.2\nseed = 7\ncsir_mode = physical\n")
            .unwrap();
        assert_eq!(c.protocol, ProtocolSelection::All);
        assert_eq!(c.snr_db.points().len(), 6);
        assert_eq!(c.delta, 0.2);
        assert_eq!(c.seed, 7);
        assert_eq!(c.csir_mode, CsirMode::Physical);
        c.validate().unwrap();
    }

    #[test]
    fn errors_name_line_and_field() {
        let mut c = ExperimentConfig::default();
        let e = c.apply_text("seed = 1\n\ndelta = fast\n").unwrap_err();
        match e {
            Error::ConfigLine { line, field, .. } => assert_eq!((line, field.as_str()), (3, "delta")),
            other => panic!("{other}"),
        }
        let e = c.apply_text("colour = red").unwrap_err();
        assert!(matches!(e, Error::ConfigLine { line: 1, .. }), "{e}");
        assert!(c.apply_text("no equals sign").is_err());
    }

    #[test]
    fn validation_rejects_bad_values() {
        let bad = [
            ("delta", "0"),
            ("delta", "-0.1"),
            ("rho_n", "0"),
            ("target_ps", "1.5"),
            ("target_ps", "0.9"),
            ("links_per_group", "0"),
            ("renewals", "0"),
            ("grid_points", "8"),
            ("thresholds", "-1:2:0.5"),
        ];
        for (k, v) in bad {
            let mut c = ExperimentConfig::default();
            let r = c.set(k, v).and_then(|_| c.validate());
            let e = r.expect_err(k);
            assert_eq!(e.exit_code(), 2, "{k}={v}: {e}");
        }
    }

    #[test]
    fn every_key_is_settable() {
        let values = [
            "sg_csit",
            "10",
            "1",
            "0.1",
            "0.3",
            "4",
            "100",
            "3",
            "paper",
            "exact_max",
            "out.csv",
            "0:10:1",
            "tl_csir_sum",
            "5",
            "1024",
            "1000",
        ];
        let mut c = ExperimentConfig::default();
        for (k, v) in ExperimentConfig::KEYS.iter().zip(values) {
            c.set(k, v).unwrap();
        }
        c.validate().unwrap();
        assert_eq!(c.which, DistSelector::TlCsirSum);
    }
}
