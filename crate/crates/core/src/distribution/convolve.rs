use super::RateDistribution;
use crate::error::{Error, Result};

/// Distribution of `X + Y` for independent `X, Y` drawn from `dist`.
///
/// Requires a uniform grid of step `h`. The sum PDF on `k·h` is the trapezoid
/// rule for `∫ f(s) f(kh − s) ds`, and the sum CDF is the running trapezoid of
/// that PDF, so the result is cell-consistent by construction.
pub fn convolve_iid(dist: &RateDistribution, budget: f64) -> Result<RateDistribution> {
    let grid = dist.grid();
    let n = grid.len();
    let h = grid[1] - grid[0];
    let uniform = grid.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h);
    if !uniform {
        return Err(Error::InvalidDistribution("convolution needs a uniform grid".into()));
    }
    let f = dist.pdf_values();
    let m = 2 * n - 1;
    let mut pdf = vec![0.0; m];
    for (k, out) in pdf.iter_mut().enumerate() {
        let lo = k.saturating_sub(n - 1);
        let hi = k.min(n - 1);
        if lo == hi {
            // A single node carries no trapezoid area.
            continue;
        }
        let mut s = 0.5 * (f[lo] * f[k - lo] + f[hi] * f[k - hi]);
        for j in lo + 1..hi {
            s += f[j] * f[k - j];
        }
        *out = s * h;
    }
    let sum_grid: Vec<f64> = (0..m).map(|k| k as f64 * h).collect();
    let mut cdf = vec![0.0; m];
    for k in 1..m {
        cdf[k] = cdf[k - 1] + 0.5 * h * (pdf[k] + pdf[k - 1]);
    }
    // The sum exceeds 2·upper only if one of the terms exceeds upper.
    RateDistribution::from_tabulation(sum_grid, cdf, pdf, 2.0 * dist.tail_mass(), budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_sum_is_gamma_two() {
        let d = RateDistribution::exponential(1.0, 40.0, 4001).unwrap();
        let s = convolve_iid(&d, 1e-3).unwrap();
        for &r in &[0.5, 1.0, 2.0, 5.0] {
            assert_relative_eq!(s.pdf(r), r * (-r).exp(), epsilon = 1e-4);
            assert_relative_eq!(s.cdf(r), 1.0 - (1.0 + r) * (-r).exp(), epsilon = 1e-4);
        }
    }

    #[test]
    fn rejects_nonuniform_grid() {
        let d = RateDistribution::new(vec![0.0, 1.0, 3.0], vec![0.0, 0.25, 1.0], vec![0.25, 0.25, 0.5], 0.0).unwrap();
        assert!(convolve_iid(&d, 1e-6).is_err());
    }
}
