//! Eigen-beamforming rate distributions (full CSI at the transmitter).
//!
//! `F(r) = P(ln(1+ρλ1) + ln(1+ρλ2) ≤ r)` is the mass of the joint eigenvalue
//! density under the level curve `λ2 = ((e^r)/(1+ρλ1) − 1)/ρ`. The inner
//! integral over `λ2` has the closed form
//!
//! ```text
//! ∫_0^v ½ e^{-(x+y)} (x−y)² dy = ½ e^{-x} [P(0) − e^{-v} P(v)],
//! P(y) = (x−y)² − 2(x−y) + 2,
//! ```
//!
//! and the outer integral over `λ1` is done numerically.

use super::quadrature::GradedRule;
use super::{centered_differences, convolve_iid, refine, QuadratureSpec, RateDistribution};
use crate::channel::LinkSnrConfig;
use crate::error::{Error, Result};

/// Eigenvalue scale beyond which the joint density carries no usable mass.
const LAMBDA_BAR: f64 = 45.0;
/// The outer integral stops here; `∫_60^∞` of the marginal is below 1e-22.
const LAMBDA_CUTOFF: f64 = 60.0;

/// Joint density of the (unordered) eigenvalues of `HᴴH` for a 2×2
/// Rayleigh channel.
pub fn joint_eig_pdf(l1: f64, l2: f64) -> f64 {
    0.5 * (-(l1 + l2)).exp() * (l1 - l2) * (l1 - l2)
}

fn inner_closed_form(x: f64, v: f64) -> f64 {
    let p = |y: f64| {
        let d = x - y;
        d * d - 2.0 * d + 2.0
    };
    0.5 * (-x).exp() * (p(0.0) - (-v).exp() * p(v))
}

fn region_cdf(r: f64, rho: f64, rule: &GradedRule) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let em1 = r.exp_m1();
    let lambda1_max = (em1 / rho).min(LAMBDA_CUTOFF);
    let v = |l1: f64| ((em1 - rho * l1) / (rho * (1.0 + rho * l1))).max(0.0);
    rule.integrate(lambda1_max, |l1| inner_closed_form(l1, v(l1)))
}

/// `P(tr(HᴴH) > t)`; the trace is Gamma(4, 1).
fn trace_tail(t: f64) -> f64 {
    (-t).exp() * (1.0 + t + t * t / 2.0 + t * t * t / 6.0)
}

/// By concavity the rate is at most `2 ln(1 + ρ tr/2)`, so the mass above
/// `upper` is bounded by the trace tail at `2 (e^{upper/2} − 1)/ρ`.
fn truncation_bound(upper: f64, rho: f64) -> f64 {
    trace_tail(2.0 * (0.5 * upper).exp_m1() / rho)
}

fn eigen_rate_distribution(rho: f64, spec: &QuadratureSpec) -> Result<RateDistribution> {
    spec.validate()?;
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::config("rho_s", "must be positive"));
    }
    let upper = spec.upper_or(2.0 * (0.5 * rho * LAMBDA_BAR).ln_1p());
    let grid = spec.uniform_grid(upper);
    let rule = GradedRule::with_points(spec.inner_points);
    let cdf: Vec<f64> = grid.iter().map(|&r| region_cdf(r, rho, &rule)).collect();
    let pdf = centered_differences(&grid, &cdf);
    RateDistribution::from_tabulation(grid, cdf, pdf, truncation_bound(upper, rho), spec.tail_budget)
}

/// Single-link eigen-beamforming rate at SNR `ρs`.
pub fn cdf_sl_csit(rho_s: f64, spec: &QuadratureSpec) -> Result<RateDistribution> {
    refine(spec, |s| eigen_rate_distribution(rho_s, s))
}

/// Per-link rate with two simultaneous links: the single-link law at
/// `ρs/(1+ρn)`.
pub fn cdf_tl_csit_link(snr: &LinkSnrConfig, spec: &QuadratureSpec) -> Result<RateDistribution> {
    refine(spec, |s| eigen_rate_distribution(snr.effective_tl(), s))
}

/// Sum rate of two simultaneous links (two independent per-link rates).
pub fn cdf_tl_csit_sum(snr: &LinkSnrConfig, spec: &QuadratureSpec) -> Result<RateDistribution> {
    refine(spec, |s| {
        convolve_iid(&eigen_rate_distribution(snr.effective_tl(), s)?, s.tail_budget)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::quadrature::CompositeRule;
    use approx::assert_relative_eq;

    #[test]
    fn joint_pdf_examples() {
        assert_eq!(joint_eig_pdf(1.0, 1.0), 0.0);
        assert_eq!(joint_eig_pdf(0.0, 0.0), 0.0);
        assert_relative_eq!(joint_eig_pdf(2.0, 0.0), 2.0 * (-2f64).exp());
    }

    #[test]
    fn joint_pdf_normalizes_on_square() {
        let rule = CompositeRule::new(40, 16);
        let total = rule.integrate(0.0, 40.0, |x| rule.integrate(0.0, 40.0, |y| joint_eig_pdf(x, y)));
        assert!((total - 1.0).abs() < 1e-6, "{total}");
    }

    #[test]
    fn inner_integral_matches_numeric() {
        let rule = CompositeRule::new(20, 16);
        for &(x, v) in &[(0.3, 0.7), (2.0, 5.0), (7.5, 0.01), (0.0, 30.0)] {
            let numeric = rule.integrate(0.0, v, |y| joint_eig_pdf(x, y));
            assert_relative_eq!(inner_closed_form(x, v), numeric, epsilon = 1e-13);
        }
    }

    #[test]
    fn boundary_values() {
        for rho in [1.0, 10.0, 100.0, 316.0] {
            let d = cdf_sl_csit(rho, &QuadratureSpec::default()).unwrap();
            assert_eq!(d.cdf(0.0), 0.0);
            assert!(d.cdf(d.upper_rate()) >= 1.0 - 1e-6);
            assert!(d.tail_mass() <= 1e-6);
        }
    }

    #[test]
    fn mean_matches_eigenvalue_expectation() {
        // E[ln(1+ρλ1) + ln(1+ρλ2)] by 2-D quadrature of the joint density.
        let rho = 10.0;
        let rule = CompositeRule::new(30, 16);
        let direct = rule.integrate(0.0, 60.0, |x| {
            rule.integrate(0.0, 60.0, |y| {
                joint_eig_pdf(x, y) * ((rho * x).ln_1p() + (rho * y).ln_1p())
            })
        });
        let d = cdf_sl_csit(rho, &QuadratureSpec::default()).unwrap();
        assert_relative_eq!(d.mean(), direct, max_relative = 1e-5);
    }

    #[test]
    fn no_interference_link_equals_single_link() {
        let spec = QuadratureSpec::default();
        let a = cdf_sl_csit(10.0, &spec).unwrap();
        let b = cdf_tl_csit_link(&LinkSnrConfig::new(10.0, 0.0).unwrap(), &spec).unwrap();
        for (x, y) in a.cdf_values().iter().zip(b.cdf_values()) {
            assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn sum_mean_is_twice_link_mean() {
        let spec = QuadratureSpec::default();
        let snr = LinkSnrConfig::new(10.0, 1.0).unwrap();
        let link = cdf_tl_csit_link(&snr, &spec).unwrap();
        let sum = cdf_tl_csit_sum(&snr, &spec).unwrap();
        assert_relative_eq!(sum.mean(), 2.0 * link.mean(), max_relative = 1e-6);
    }

    #[test]
    fn higher_snr_dominates() {
        let spec = QuadratureSpec::default();
        let lo = cdf_sl_csit(3.0, &spec).unwrap();
        let hi = cdf_sl_csit(30.0, &spec).unwrap();
        for &r in lo.grid() {
            assert!(hi.cdf(r) <= lo.cdf(r) + 1e-12);
        }
    }
}
