//! Tabulated rate distributions.
//!
//! A [`RateDistribution`] holds a CDF and PDF sampled on a grid of rates that
//! starts at 0. Queries interpolate linearly between grid points. The threshold
//! solver only needs two functionals of each distribution, `1 − F(x)` and
//! `∫_x^∞ r dF(r)`, both exposed here.
//!
//! Constructors:
//!
//! - [`cdf_sl_csit`], [`cdf_tl_csit_link`], [`cdf_tl_csit_sum`]: eigen-beamforming
//!   rates, by region quadrature over the joint eigenvalue density.
//! - [`cdf_sl_csir`], [`cdf_tl_csir_link`], [`cdf_tl_csir_sum`]: single-stream
//!   rates, from closed forms in either [`CsirMode`].
//! - [`convolve_iid`]: the sum of two independent copies of a distribution.

mod convolve;
pub mod csir;
mod csit;
pub mod quadrature;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numfmt::sig9;

pub use convolve::convolve_iid;
pub use csir::{cdf_sl_csir, cdf_tl_csir_link, cdf_tl_csir_sum, CsirMode};
pub use csit::{cdf_sl_csit, cdf_tl_csit_link, cdf_tl_csit_sum, joint_eig_pdf};

/// Largest grid tried when a table misses its tail budget at the requested
/// size. Each retry doubles the grid.
pub const MAX_GRID_POINTS: usize = 16_384;

/// Runs `build` at `spec`, doubling the grid while the result exceeds the tail
/// budget and the grid is below [`MAX_GRID_POINTS`].
pub(crate) fn refine<F>(spec: &QuadratureSpec, build: F) -> Result<RateDistribution>
where
    F: Fn(&QuadratureSpec) -> Result<RateDistribution>,
{
    spec.validate()?;
    let mut current = *spec;
    loop {
        match build(&current) {
            Err(Error::QuadratureBudget { .. }) if current.grid_points < MAX_GRID_POINTS => {
                current.grid_points = (2 * current.grid_points).min(MAX_GRID_POINTS);
            }
            other => return other,
        }
    }
}

/// Largest allowed mismatch between a CDF increment and the trapezoid of the
/// PDF over the same cell.
pub const CELL_CONSISTENCY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub grid_points: usize,
    /// Grid truncation in nats/sec/Hz. `None` picks a per-distribution bound
    /// that keeps the truncated mass negligible.
    pub upper_rate: Option<f64>,
    /// Nodes of the outer (or only) numerical integral per grid point.
    pub inner_points: usize,
    /// Largest acceptable declared tail mass.
    pub tail_budget: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            grid_points: 2048,
            upper_rate: None,
            inner_points: 512,
            tail_budget: 1e-6,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 64 {
            return Err(Error::config("grid_points", "must be at least 64"));
        }
        if self.inner_points < 16 {
            return Err(Error::config("inner_points", "must be at least 16"));
        }
        if let Some(u) = self.upper_rate {
            if !(u.is_finite() && u > 0.0) {
                return Err(Error::config("upper_rate", "must be positive"));
            }
        }
        if !(self.tail_budget > 0.0 && self.tail_budget < 1.0) {
            return Err(Error::config("tail_budget", "must lie in (0, 1)"));
        }
        Ok(())
    }

    pub(crate) fn upper_or(&self, automatic: f64) -> f64 {
        self.upper_rate.unwrap_or(automatic)
    }

    /// Uniform grid `0, h, …, upper` with `grid_points` nodes.
    pub(crate) fn uniform_grid(&self, upper: f64) -> Vec<f64> {
        let n = self.grid_points;
        let h = upper / (n - 1) as f64;
        (0..n).map(|k| if k == n - 1 { upper } else { k as f64 * h }).collect()
    }
}

/// CDF and PDF of a nonnegative rate on a grid starting at 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RateDistribution {
    grid: Vec<f64>,
    cdf: Vec<f64>,
    pdf: Vec<f64>,
    tail_mass: f64,
    /// `suffix[k] = ∫_{grid[k]}^{upper} r f(r) dr` by the trapezoid rule.
    suffix: Vec<f64>,
}

impl RateDistribution {
    /// Builds a distribution and checks every invariant: grid starts at 0 and
    /// strictly increases, CDF is nondecreasing in `[0, 1]` and reaches
    /// `1 − tail_mass`, PDF is nonnegative, integrates to within `2·tail_mass`
    /// of one, and agrees with the CDF cell by cell.
    pub fn new(grid: Vec<f64>, cdf: Vec<f64>, pdf: Vec<f64>, tail_mass: f64) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidDistribution(m));
        let n = grid.len();
        if n < 2 || cdf.len() != n || pdf.len() != n {
            return bad(format!("grid/cdf/pdf lengths {}/{}/{}", n, cdf.len(), pdf.len()));
        }
        if grid[0] != 0.0 {
            return bad(format!("grid starts at {} instead of 0", grid[0]));
        }
        if let Some(k) = grid.windows(2).position(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return bad(format!("grid not strictly increasing at index {}", k + 1));
        }
        if !(tail_mass.is_finite() && (0.0..1.0).contains(&tail_mass)) {
            return bad(format!("tail mass {tail_mass} outside [0, 1)"));
        }
        if let Some(k) = cdf.iter().position(|&c| !(0.0..=1.0).contains(&c)) {
            return bad(format!("cdf[{k}] = {} outside [0, 1]", cdf[k]));
        }
        if let Some(k) = cdf.windows(2).position(|w| w[1] < w[0]) {
            return bad(format!("cdf decreases at index {}", k + 1));
        }
        if let Some(k) = pdf.iter().position(|&p| !(p >= 0.0 && p.is_finite())) {
            return bad(format!("pdf[{k}] = {} is negative or not finite", pdf[k]));
        }
        if cdf[n - 1] < 1.0 - tail_mass {
            return bad(format!("final cdf {} below 1 − tail mass {}", cdf[n - 1], tail_mass));
        }
        let mut mass = 0.0;
        for k in 1..n {
            let cell = 0.5 * (grid[k] - grid[k - 1]) * (pdf[k] + pdf[k - 1]);
            let inc = cdf[k] - cdf[k - 1];
            if (cell - inc).abs() > CELL_CONSISTENCY_TOL {
                return bad(format!(
                    "pdf/cdf mismatch {:e} on cell [{}, {}]",
                    cell - inc,
                    grid[k - 1],
                    grid[k]
                ));
            }
            mass += cell;
        }
        mass += cdf[0];
        if (mass - 1.0).abs() > 2.0 * tail_mass {
            return bad(format!("pdf integrates to {mass}, tail mass {tail_mass:e}"));
        }
        let mut suffix = vec![0.0; n];
        for k in (0..n - 1).rev() {
            let cell = 0.5 * (grid[k + 1] - grid[k]) * (grid[k] * pdf[k] + grid[k + 1] * pdf[k + 1]);
            suffix[k] = suffix[k + 1] + cell;
        }
        Ok(RateDistribution {
            grid,
            cdf,
            pdf,
            tail_mass,
            suffix,
        })
    }

    /// Declares the tail mass from the tabulation itself: the larger of the
    /// analytic truncation bound, the CDF shortfall at the last grid point and
    /// the PDF normalization error. Fails when that exceeds `budget`.
    pub fn from_tabulation(
        grid: Vec<f64>,
        mut cdf: Vec<f64>,
        pdf: Vec<f64>,
        truncation_bound: f64,
        budget: f64,
    ) -> Result<Self> {
        // Monotone clean-up of round-off.
        let mut run = 0.0f64;
        for c in cdf.iter_mut() {
            run = run.max(c.clamp(0.0, 1.0));
            *c = run;
        }
        let n = grid.len();
        let integral: f64 = cdf.first().copied().unwrap_or(0.0)
            + (1..n)
                .map(|k| 0.5 * (grid[k] - grid[k - 1]) * (pdf[k] + pdf[k - 1]))
                .sum::<f64>();
        let shortfall = 1.0 - cdf.last().copied().unwrap_or(0.0);
        let tail_mass = truncation_bound
            .max(shortfall)
            .max(0.5 * (1.0 - integral).abs())
            .max(f64::EPSILON);
        if tail_mass > budget {
            return Err(Error::QuadratureBudget { tail_mass, budget });
        }
        Self::new(grid, cdf, pdf, tail_mass)
    }

    /// Exponential law with the given mean, tabulated exactly at `points`
    /// uniform nodes on `[0, upper]`.
    pub fn exponential(mean: f64, upper: f64, points: usize) -> Result<Self> {
        if !(mean > 0.0 && mean.is_finite()) {
            return Err(Error::InvalidDistribution(format!(
                "exponential mean {mean} must be positive"
            )));
        }
        if points < 2 || !(upper > 0.0) {
            return Err(Error::InvalidDistribution(
                "exponential grid needs two nodes and a positive upper rate".into(),
            ));
        }
        let h = upper / (points - 1) as f64;
        let grid: Vec<f64> = (0..points)
            .map(|k| if k == points - 1 { upper } else { k as f64 * h })
            .collect();
        let cdf = grid.iter().map(|r| -(-r / mean).exp_m1()).collect();
        let pdf = grid.iter().map(|r| (-r / mean).exp() / mean).collect();
        Self::from_tabulation(grid, cdf, pdf, (-upper / mean).exp(), 1e-5)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn cdf_values(&self) -> &[f64] {
        &self.cdf
    }

    pub fn pdf_values(&self) -> &[f64] {
        &self.pdf
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn upper_rate(&self) -> f64 {
        *self.grid.last().expect("nonempty grid")
    }

    /// Index `k` with `grid[k] <= x < grid[k+1]`; requires `0 <= x < upper`.
    fn cell(&self, x: f64) -> usize {
        self.grid.partition_point(|&g| g <= x) - 1
    }

    /// Linearly interpolated CDF; 0 below the grid, the last value above it.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        if x >= self.upper_rate() {
            return *self.cdf.last().unwrap();
        }
        let k = self.cell(x);
        let t = (x - self.grid[k]) / (self.grid[k + 1] - self.grid[k]);
        self.cdf[k] + t * (self.cdf[k + 1] - self.cdf[k])
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 || x > self.upper_rate() {
            return 0.0;
        }
        if x == self.upper_rate() {
            return *self.pdf.last().unwrap();
        }
        let k = self.cell(x);
        let t = (x - self.grid[k]) / (self.grid[k + 1] - self.grid[k]);
        self.pdf[k] + t * (self.pdf[k + 1] - self.pdf[k])
    }

    /// `1 − F(x)`.
    pub fn tail_prob(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    /// `∫_x^∞ r dF(r)`: trapezoid of `r·f(r)` over the grid above `x`, with
    /// the cell containing `x` cut at `x`.
    pub fn truncated_mean(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return self.suffix[0];
        }
        if x >= self.upper_rate() {
            return 0.0;
        }
        let k = self.cell(x);
        let gx = x * self.pdf(x);
        let right = self.grid[k + 1] * self.pdf[k + 1];
        0.5 * (self.grid[k + 1] - x) * (gx + right) + self.suffix[k + 1]
    }

    pub fn mean(&self) -> f64 {
        self.truncated_mean(0.0)
    }

    /// Kolmogorov–Smirnov distance between this CDF and the empirical CDF of
    /// `samples` (sorted in place).
    pub fn ks_distance(&self, samples: &mut [f64]) -> f64 {
        samples.sort_unstable_by(f64::total_cmp);
        let n = samples.len() as f64;
        samples
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let f = self.cdf(s);
                (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max)
    }

    /// Two-column CSV `rate_nats,cdf`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "rate_nats,cdf")?;
        for (r, c) in self.grid.iter().zip(&self.cdf) {
            writeln!(w, "{},{}", sig9(*r), sig9(*c))?;
        }
        Ok(())
    }
}

/// Centered differences of a tabulated CDF, one-sided at both ends.
pub(crate) fn centered_differences(grid: &[f64], cdf: &[f64]) -> Vec<f64> {
    let n = grid.len();
    (0..n)
        .map(|k| {
            let (a, b) = match k {
                0 => (0, 1),
                k if k == n - 1 => (n - 2, n - 1),
                k => (k - 1, k + 1),
            };
            ((cdf[b] - cdf[a]) / (grid[b] - grid[a])).max(0.0)
        })
        .collect()
}
