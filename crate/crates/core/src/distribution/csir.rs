//! Single-stream rate distributions (CSI at the receiver only).
//!
//! Two families are provided, selected by [`CsirMode`]:
//!
//! - `Paper`: the published closed forms for the MRC rate and the optimal
//!   combining rate, with `2^r` read as `e^r`. The MRC rate CDF as published
//!   is not monotone when `ρs > 1` (it dips below zero before rising to one);
//!   it is used through its monotone rearrangement, i.e. `F = 0` up to the
//!   point where the printed expression returns to zero.
//! - `Physical`: laws derived from the sampled vector model. The MRC power
//!   gain is Gamma(2, 1). The optimal-combining SINR against one rank-one
//!   interferer `q` is `ρs (E1 + a E2)` with `E1, E2 ~ Exp(1)` and
//!   `a = 1/(1 + ρn ‖q‖²)`, `‖q‖² ~ Gamma(2, 1)`; its CDF is a 1-D integral
//!   over `‖q‖²`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::quadrature::CompositeRule;
use super::{convolve_iid, refine, QuadratureSpec, RateDistribution};
use crate::channel::LinkSnrConfig;
use crate::error::{Error, Result};

/// Truncation scale in units of the relevant exponential scale.
const TAIL_SCALE: f64 = 45.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CsirMode {
    Paper,
    Physical,
}

impl std::str::FromStr for CsirMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "paper" => Ok(CsirMode::Paper),
            "physical" => Ok(CsirMode::Physical),
            other => Err(format!("unknown csir mode `{other}` (expected paper or physical)")),
        }
    }
}

impl std::fmt::Display for CsirMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CsirMode::Paper => "paper",
            CsirMode::Physical => "physical",
        })
    }
}

/// Published CDF of the MRC output SNR, verbatim: `1 − (1 + γ/2) e^{−γ/(2ρs)}`.
pub fn mrc_gain_cdf_printed(gamma: f64, rho_s: f64) -> f64 {
    1.0 - (1.0 + gamma / 2.0) * (-gamma / (2.0 * rho_s)).exp()
}

/// Published CDF of the optimal-combining SINR, verbatim.
pub fn oc_sinr_cdf_printed(gamma: f64, snr: &LinkSnrConfig) -> f64 {
    let a = 1.0 / (2.0 * snr.rho_n);
    1.0 - (1.0 + a) * (-gamma / snr.rho_s).exp() + a * (-(1.0 + 2.0 * snr.rho_n) * gamma / snr.rho_s).exp()
}

/// Published MRC rate CDF (natural log), verbatim. Not a valid CDF for `ρs > 1`.
pub fn sl_csir_rate_cdf_printed(r: f64, rho_s: f64) -> f64 {
    let x = r.exp_m1();
    1.0 - (1.0 + x / (2.0 * rho_s)) * (-x / (2.0 * rho_s * rho_s)).exp()
}

/// Monotone rearrangement of the published MRC rate law, in `X = e^r − 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaperSlCsir {
    rho_s: f64,
    support_x: f64,
}

impl PaperSlCsir {
    pub fn new(rho_s: f64) -> Self {
        PaperSlCsir {
            rho_s,
            support_x: paper_sl_support(rho_s),
        }
    }

    /// Rate below which the rearranged CDF is identically zero.
    pub fn support_start(&self) -> f64 {
        self.support_x.ln_1p()
    }

    fn raw_cdf_x(&self, x: f64) -> f64 {
        let rho = self.rho_s;
        1.0 - (1.0 + x / (2.0 * rho)) * (-x / (2.0 * rho * rho)).exp()
    }

    pub fn cdf_x(&self, x: f64) -> f64 {
        if x <= self.support_x {
            0.0
        } else {
            self.raw_cdf_x(x).clamp(0.0, 1.0)
        }
    }

    /// Right-continuous density; positive at the support start.
    pub fn pdf_x(&self, x: f64) -> f64 {
        if x < self.support_x {
            return 0.0;
        }
        let rho = self.rho_s;
        let c = 2.0 * rho * rho;
        ((-x / c).exp() * ((1.0 + x / (2.0 * rho)) / c - 1.0 / (2.0 * rho))).max(0.0)
    }

    pub fn cdf(&self, r: f64) -> f64 {
        self.cdf_x(r.exp_m1())
    }

    pub fn pdf(&self, r: f64) -> f64 {
        self.pdf_x(r.exp_m1()) * r.exp()
    }

    /// Rate at probability level `u` (inverse CDF).
    pub fn quantile(&self, u: f64) -> f64 {
        invert_increasing(|x| self.cdf_x(x), u, self.support_x, 2.0 * self.rho_s * self.rho_s).ln_1p()
    }
}

/// Smallest `X > 0` where the published MRC rate CDF returns to zero, i.e.
/// the positive root of `ln(1 + ρ u) = u` with `X = 2ρ²u`; zero when `ρ ≤ 1`.
fn paper_sl_support(rho: f64) -> f64 {
    if rho <= 1.0 {
        return 0.0;
    }
    let h = |u: f64| (rho * u).ln_1p() - u;
    let mut lo = (rho - 1.0) / rho;
    let mut hi = 2.0 * lo + 1.0;
    while h(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    2.0 * rho * rho * hi
}

/// Published optimal-combining law, per link, in SINR space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaperTlCsir {
    snr: LinkSnrConfig,
}

impl PaperTlCsir {
    pub fn new(snr: &LinkSnrConfig) -> Result<Self> {
        if snr.rho_n <= 0.0 {
            return Err(Error::config("rho_n", "the published combining law needs rho_n > 0"));
        }
        Ok(PaperTlCsir { snr: *snr })
    }

    pub fn cdf_sinr(&self, gamma: f64) -> f64 {
        oc_sinr_cdf_printed(gamma, &self.snr).clamp(0.0, 1.0)
    }

    pub fn pdf_sinr(&self, gamma: f64) -> f64 {
        let LinkSnrConfig { rho_s, rho_n } = self.snr;
        let a = 1.0 / (2.0 * rho_n);
        let t = gamma / rho_s;
        ((1.0 + a) / rho_s * ((-t).exp() - (-(1.0 + 2.0 * rho_n) * t).exp())).max(0.0)
    }

    pub fn cdf(&self, r: f64) -> f64 {
        self.cdf_sinr(r.exp_m1())
    }

    pub fn pdf(&self, r: f64) -> f64 {
        self.pdf_sinr(r.exp_m1()) * r.exp()
    }

    pub fn quantile(&self, u: f64) -> f64 {
        invert_increasing(|g| self.cdf_sinr(g), u, 0.0, self.snr.rho_s).ln_1p()
    }
}

/// Physical MRC rate: `F(r) = 1 − (1 + g) e^{−g}`, `g = (e^r − 1)/ρs`.
pub fn sl_csir_physical_cdf(r: f64, rho_s: f64) -> f64 {
    let g = r.exp_m1() / rho_s;
    1.0 - (1.0 + g) * (-g).exp()
}

pub fn sl_csir_physical_pdf(r: f64, rho_s: f64) -> f64 {
    let g = r.exp_m1() / rho_s;
    g * (-g).exp() * r.exp() / rho_s
}

/// Physical optimal-combining SINR law against a single rank-one interferer.
#[derive(Debug, Clone)]
pub struct OcPhysical {
    rho_s: f64,
    /// `(a, d = 1 − a, weight)` per quadrature node in `s = ‖q‖²`.
    nodes: Vec<(f64, f64, f64)>,
}

impl OcPhysical {
    pub fn new(snr: &LinkSnrConfig, points: usize) -> Self {
        let rule = CompositeRule::with_points(points);
        let mut nodes = Vec::with_capacity(points);
        rule.for_each_node(0.0, 60.0, |s, w| {
            let d = snr.rho_n * s / (1.0 + snr.rho_n * s);
            nodes.push((1.0 - d, d, w * s * (-s).exp()));
        });
        OcPhysical {
            rho_s: snr.rho_s,
            nodes,
        }
    }

    /// `P(E1 + a E2 > t) = e^{−t} (1 + a q)` and density `e^{−t} q` with
    /// `q = (1 − e^{−t d / a}) / d`, stable as `d → 0`.
    fn q(t: f64, a: f64, d: f64) -> f64 {
        if d == 0.0 {
            t / a
        } else {
            -(-t * d / a).exp_m1() / d
        }
    }

    pub fn cdf_sinr(&self, gamma: f64) -> f64 {
        let t = gamma / self.rho_s;
        let et = (-t).exp();
        let tail: f64 = self
            .nodes
            .iter()
            .map(|&(a, d, w)| w * et * (1.0 + a * Self::q(t, a, d)))
            .sum();
        (1.0 - tail).clamp(0.0, 1.0)
    }

    pub fn pdf_sinr(&self, gamma: f64) -> f64 {
        let t = gamma / self.rho_s;
        let et = (-t).exp();
        let dens: f64 = self.nodes.iter().map(|&(a, d, w)| w * et * Self::q(t, a, d)).sum();
        dens / self.rho_s
    }

    pub fn cdf(&self, r: f64) -> f64 {
        self.cdf_sinr(r.exp_m1())
    }

    pub fn pdf(&self, r: f64) -> f64 {
        self.pdf_sinr(r.exp_m1()) * r.exp()
    }
}

/// Inverse-CDF sampler of the published CSIR laws, used by the simulator in
/// paper mode. Bisection runs on the closed forms, not on any tabulation.
#[derive(Debug, Clone, Copy)]
pub struct PaperCsirSampler {
    sl: PaperSlCsir,
    tl: PaperTlCsir,
}

impl PaperCsirSampler {
    pub fn new(snr: &LinkSnrConfig) -> Result<Self> {
        Ok(PaperCsirSampler {
            sl: PaperSlCsir::new(snr.rho_s),
            tl: PaperTlCsir::new(snr)?,
        })
    }

    pub fn sample_sl<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sl.quantile(rng.random::<f64>())
    }

    pub fn sample_tl_link<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.tl.quantile(rng.random::<f64>())
    }
}

/// Solves `F(x) = u` for a nondecreasing `F` on `[lo, ∞)` with `F(lo) <= u`.
fn invert_increasing<F: Fn(f64) -> f64>(f: F, u: f64, lo: f64, scale: f64) -> f64 {
    let mut lo = lo;
    let mut hi = lo + scale.max(1e-300);
    while f(hi) < u {
        lo = hi;
        hi = lo + 2.0 * (hi - lo).max(scale);
        if !hi.is_finite() {
            return lo;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi.max(1e-300) {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn tabulate(
    grid: Vec<f64>,
    cdf: impl Fn(f64) -> f64,
    pdf: impl Fn(f64) -> f64,
    bound: f64,
    budget: f64,
) -> Result<RateDistribution> {
    let c = grid.iter().map(|&r| cdf(r)).collect();
    let p = grid.iter().map(|&r| pdf(r)).collect();
    RateDistribution::from_tabulation(grid, c, p, bound, budget)
}

/// Grid for a law that is identically zero below `start`: nodes `0, start`,
/// then a grid from just above `start` so the jump in the density sits inside
/// a cell of negligible width. Spacing grows linearly away from `start`
/// (half the uniform step there), where the density is steepest.
fn grid_with_support(start: f64, upper: f64, points: usize) -> Vec<f64> {
    let graded = |from: f64, m: usize| {
        let len = upper - from;
        (0..m).map(move |k| {
            let s = k as f64 / (m - 1) as f64;
            if k == m - 1 {
                upper
            } else {
                from + len * 0.5 * s * (1.0 + s)
            }
        })
    };
    if start <= 0.0 {
        return graded(0.0, points).collect();
    }
    let first = start + 1e-9 * upper.max(1.0);
    let mut g = vec![0.0, start];
    g.extend(graded(first, points - 2));
    g
}

/// Single-link MRC rate distribution.
pub fn cdf_sl_csir(rho_s: f64, mode: CsirMode, spec: &QuadratureSpec) -> Result<RateDistribution> {
    refine(spec, |s| sl_csir_table(rho_s, mode, s))
}

fn sl_csir_table(rho_s: f64, mode: CsirMode, spec: &QuadratureSpec) -> Result<RateDistribution> {
    if !(rho_s.is_finite() && rho_s > 0.0) {
        return Err(Error::config("rho_s", "must be positive"));
    }
    match mode {
        CsirMode::Paper => {
            let law = PaperSlCsir::new(rho_s);
            let upper = spec.upper_or((2.0 * rho_s * rho_s * TAIL_SCALE).ln_1p());
            let x_hi = upper.exp_m1();
            let bound = (1.0 + x_hi / (2.0 * rho_s)) * (-x_hi / (2.0 * rho_s * rho_s)).exp();
            let start = law.support_start();
            let grid = grid_with_support(start, upper, spec.grid_points);
            let cdf = grid.iter().map(|&r| law.cdf(r)).collect();
            // Nodes at or below a positive support start carry the left limit 0.
            let pdf = grid
                .iter()
                .map(|&r| if start > 0.0 && r <= start { 0.0 } else { law.pdf(r) })
                .collect();
            RateDistribution::from_tabulation(grid, cdf, pdf, bound, spec.tail_budget)
        }
        CsirMode::Physical => {
            let upper = spec.upper_or((rho_s * TAIL_SCALE).ln_1p());
            let g_hi = upper.exp_m1() / rho_s;
            let bound = (1.0 + g_hi) * (-g_hi).exp();
            tabulate(
                spec.uniform_grid(upper),
                |r| sl_csir_physical_cdf(r, rho_s),
                |r| sl_csir_physical_pdf(r, rho_s),
                bound,
                spec.tail_budget,
            )
        }
    }
}

/// Per-link rate of two simultaneous single-stream links with optimal combining.
pub fn cdf_tl_csir_link(snr: &LinkSnrConfig, mode: CsirMode, spec: &QuadratureSpec) -> Result<RateDistribution> {
    refine(spec, |s| tl_csir_link_table(snr, mode, s))
}

fn tl_csir_link_table(snr: &LinkSnrConfig, mode: CsirMode, spec: &QuadratureSpec) -> Result<RateDistribution> {
    let upper = spec.upper_or((snr.rho_s * TAIL_SCALE).ln_1p());
    let t_hi = upper.exp_m1() / snr.rho_s;
    let grid = spec.uniform_grid(upper);
    match mode {
        CsirMode::Paper => {
            let law = PaperTlCsir::new(snr)?;
            let bound = (1.0 + 1.0 / (2.0 * snr.rho_n)) * (-t_hi).exp();
            tabulate(grid, |r| law.cdf(r), |r| law.pdf(r), bound, spec.tail_budget)
        }
        CsirMode::Physical => {
            let law = OcPhysical::new(snr, spec.inner_points);
            // SINR <= ρs ‖h‖², and ‖h‖² is Gamma(2, 1).
            let bound = (1.0 + t_hi) * (-t_hi).exp();
            tabulate(grid, |r| law.cdf(r), |r| law.pdf(r), bound, spec.tail_budget)
        }
    }
}

/// Sum rate of two simultaneous links, by convolution of the per-link law.
pub fn cdf_tl_csir_sum(snr: &LinkSnrConfig, mode: CsirMode, spec: &QuadratureSpec) -> Result<RateDistribution> {
    refine(spec, |s| {
        convolve_iid(&tl_csir_link_table(snr, mode, s)?, s.tail_budget)
    })
}
