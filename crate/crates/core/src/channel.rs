//! 2×2 Rayleigh MIMO channels and instantaneous rates.
//!
//! All rates are in nats/sec/Hz. Channel entries are i.i.d. circularly
//! symmetric complex Gaussian with unit variance per complex entry.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Matrix2 = [[Complex64; 2]; 2];
pub type Vector2 = [Complex64; 2];

/// Average SNRs of a homogeneous network: `rho_s` on the desired link,
/// `rho_n` on every interfering link (both linear, not dB).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkSnrConfig {
    pub rho_s: f64,
    pub rho_n: f64,
}

impl LinkSnrConfig {
    /// `rho_n = 0` is accepted as the interference-free limit.
    pub fn new(rho_s: f64, rho_n: f64) -> Result<Self> {
        if !(rho_s.is_finite() && rho_s > 0.0) {
            return Err(Error::config(
                "rho_s",
                format!("must be a positive finite number, got {rho_s}"),
            ));
        }
        if !(rho_n.is_finite() && rho_n >= 0.0) {
            return Err(Error::config(
                "rho_n",
                format!("must be a nonnegative finite number, got {rho_n}"),
            ));
        }
        Ok(LinkSnrConfig { rho_s, rho_n })
    }

    pub fn from_db(snr_db: f64, rho_n: f64) -> Result<Self> {
        Self::new(db_to_linear(snr_db), rho_n)
    }

    /// SNR seen by one of two simultaneous links when the other link's
    /// signal is treated as Gaussian noise of variance `rho_n`.
    pub fn effective_tl(&self) -> f64 {
        self.rho_s / (1.0 + self.rho_n)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RateKind {
    SlCsit,
    TlCsitPerLink,
    TlCsitSum,
    SlCsir,
    TlCsirPerLink,
    TlCsirSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSample {
    pub value: f64,
    pub kind: RateKind,
}

/// One draw of `H` together with the eigenvalues of `HᴴH`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelRealization {
    entries: Matrix2,
    eigenvalues: [f64; 2],
}

impl ChannelRealization {
    /// Eigenvalues come from the trace and determinant of `HᴴH`:
    /// `tr = ‖H‖²_F`, `det = |det H|²`, so `λ = tr/2 ± sqrt(tr²/4 − det)`.
    pub fn from_matrix(entries: Matrix2) -> Self {
        let trace: f64 = entries.iter().flatten().map(|z| z.norm_sqr()).sum();
        let det = (entries[0][0] * entries[1][1] - entries[0][1] * entries[1][0]).norm_sqr();
        let half = 0.5 * trace;
        let disc = (half * half - det).max(0.0).sqrt();
        let l1 = half + disc;
        // The small root via the product avoids cancellation in `half - disc`.
        let l2 = if l1 > 0.0 { (det / l1).min(l1) } else { 0.0 };
        ChannelRealization {
            entries,
            eigenvalues: [l1, l2.max(0.0)],
        }
    }

    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let entries = [
            [sample_entry(rng), sample_entry(rng)],
            [sample_entry(rng), sample_entry(rng)],
        ];
        Self::from_matrix(entries)
    }

    pub fn entries(&self) -> &Matrix2 {
        &self.entries
    }

    /// `(λ1, λ2)` with `λ1 ≥ λ2 ≥ 0`.
    pub fn eigenvalues(&self) -> [f64; 2] {
        self.eigenvalues
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.entries.iter().flatten().map(|z| z.norm_sqr()).sum()
    }

    pub fn det_abs_sq(&self) -> f64 {
        let h = &self.entries;
        (h[0][0] * h[1][1] - h[0][1] * h[1][0]).norm_sqr()
    }
}

pub fn sample_channel<R: Rng + ?Sized>(rng: &mut R) -> ChannelRealization {
    ChannelRealization::sample(rng)
}

/// Unit-variance circularly symmetric complex Gaussian.
pub fn sample_entry<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

pub fn sample_vector<R: Rng + ?Sized>(rng: &mut R) -> Vector2 {
    [sample_entry(rng), sample_entry(rng)]
}

fn eigen_rate(ch: &ChannelRealization, snr: f64) -> f64 {
    ch.eigenvalues.iter().map(|&l| (snr * l).ln_1p()).sum()
}

/// Single-link eigen-beamforming rate `Σ ln(1 + ρs λm)`.
pub fn rate_sl_csit(ch: &ChannelRealization, snr: &LinkSnrConfig) -> RateSample {
    RateSample {
        value: eigen_rate(ch, snr.rho_s),
        kind: RateKind::SlCsit,
    }
}

/// Per-link rate when two links transmit at once, interference treated as
/// Gaussian noise: `Σ ln(1 + ρs/(1+ρn) λm)`.
pub fn rate_tl_csit(ch: &ChannelRealization, snr: &LinkSnrConfig) -> RateSample {
    RateSample {
        value: eigen_rate(ch, snr.effective_tl()),
        kind: RateKind::TlCsitPerLink,
    }
}

pub fn rate_tl_csit_sum(ch1: &ChannelRealization, ch2: &ChannelRealization, snr: &LinkSnrConfig) -> RateSample {
    RateSample {
        value: rate_tl_csit(ch1, snr).value + rate_tl_csit(ch2, snr).value,
        kind: RateKind::TlCsitSum,
    }
}

/// Post-MRC channel power gain `‖h‖²`.
pub fn gain_mrc(h: &Vector2) -> f64 {
    h[0].norm_sqr() + h[1].norm_sqr()
}

/// Output SINR of the optimal combiner against one rank-one interferer:
/// `ρs hᴴ (I + ρn q qᴴ)⁻¹ h`, evaluated with Sherman–Morrison as
/// `ρs (‖h‖² − ρn |qᴴh|² / (1 + ρn ‖q‖²))`.
pub fn sinr_oc(desired: &Vector2, interferer: &Vector2, snr: &LinkSnrConfig) -> f64 {
    let hh = gain_mrc(desired);
    let qq = gain_mrc(interferer);
    let qh = interferer[0].conj() * desired[0] + interferer[1].conj() * desired[1];
    let whitened = hh - snr.rho_n * qh.norm_sqr() / (1.0 + snr.rho_n * qq);
    (snr.rho_s * whitened).clamp(0.0, snr.rho_s * hh)
}

/// Single-stream MRC rate `ln(1 + ρs γ)` with `γ` the channel power gain.
pub fn rate_sl_csir(gamma: f64, snr: &LinkSnrConfig) -> RateSample {
    RateSample {
        value: (snr.rho_s * gamma).ln_1p(),
        kind: RateKind::SlCsir,
    }
}

/// `ln(1 + γ)` where `γ` is an SINR that already includes `ρs`.
pub fn rate_tl_csir(gamma: f64) -> RateSample {
    RateSample {
        value: gamma.ln_1p(),
        kind: RateKind::TlCsirPerLink,
    }
}

pub fn rate_tl_csir_sum(gamma1: f64, gamma2: f64) -> RateSample {
    RateSample {
        value: gamma1.ln_1p() + gamma2.ln_1p(),
        kind: RateKind::TlCsirSum,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;
    use approx::assert_relative_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn diag(a: f64, b: f64) -> ChannelRealization {
        ChannelRealization::from_matrix([[c(a), c(0.0)], [c(0.0), c(b)]])
    }

    fn eig_channel(l1: f64, l2: f64) -> ChannelRealization {
        diag(l1.sqrt(), l2.sqrt())
    }

    #[test]
    fn closed_form_eigenvalues() {
        assert_eq!(diag(1.0, 1.0).eigenvalues(), [1.0, 1.0]);
        assert_eq!(diag(2.0, 0.0).eigenvalues(), [4.0, 0.0]);
        // Rank one with a full row: HᴴH has eigenvalues 2 and 0.
        let h = ChannelRealization::from_matrix([[c(1.0), c(1.0)], [c(0.0), c(0.0)]]);
        let [l1, l2] = h.eigenvalues();
        assert_relative_eq!(l1, 2.0, epsilon = 1e-15);
        assert_relative_eq!(l2, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn sl_csit_examples() {
        let snr = LinkSnrConfig::new(1.0, 1.0).unwrap();
        assert_relative_eq!(
            rate_sl_csit(&eig_channel(1.0, 1.0), &snr).value,
            2.0 * 2f64.ln(),
            epsilon = 1e-12
        );
        assert_eq!(rate_sl_csit(&eig_channel(0.0, 0.0), &snr).value, 0.0);
        let snr10 = LinkSnrConfig::new(10.0, 1.0).unwrap();
        assert_relative_eq!(
            rate_sl_csit(&eig_channel(4.0, 0.0), &snr10).value,
            41f64.ln(),
            epsilon = 1e-12
        );
        assert_relative_eq!(41f64.ln(), 3.71357, epsilon = 1e-5);
    }

    #[test]
    fn tl_csit_examples() {
        let snr = LinkSnrConfig::new(1.0, 1.0).unwrap();
        let r = rate_tl_csit(&eig_channel(1.0, 1.0), &snr);
        assert_relative_eq!(r.value, 2.0 * 1.5f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(r.value, 0.81093, epsilon = 1e-5);
        assert_eq!(r.kind, RateKind::TlCsitPerLink);

        let no_interf = LinkSnrConfig::new(3.7, 0.0).unwrap();
        let ch = eig_channel(2.5, 0.3);
        assert_eq!(rate_tl_csit(&ch, &no_interf).value, rate_sl_csit(&ch, &no_interf).value);

        let snr = LinkSnrConfig::new(10.0, 1.0).unwrap();
        let r = rate_tl_csit(&eig_channel(2.0, 1.0), &snr).value;
        assert_relative_eq!(r, 11f64.ln() + 6f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(r, 4.18965, epsilon = 1e-5);
    }

    #[test]
    fn combining_examples() {
        assert_eq!(gain_mrc(&[c(1.0), c(0.0)]), 1.0);
        assert_eq!(gain_mrc(&[c(1.0), c(1.0)]), 2.0);

        let snr = LinkSnrConfig::new(1.0, 1.0).unwrap();
        assert_eq!(sinr_oc(&[c(1.0), c(0.0)], &[c(0.0), c(0.0)], &snr), 1.0);
        assert_eq!(sinr_oc(&[c(0.0), c(0.0)], &[c(1.0), c(0.5)], &snr), 0.0);
        // Interferer aligned with the desired vector: (1 − 1/2) of the gain survives.
        assert_relative_eq!(
            sinr_oc(&[c(1.0), c(0.0)], &[c(1.0), c(0.0)], &snr),
            0.5,
            epsilon = 1e-15
        );
        // Orthogonal interferer is nulled for free.
        assert_relative_eq!(
            sinr_oc(&[c(1.0), c(0.0)], &[c(0.0), c(3.0)], &snr),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn csir_rate_examples() {
        let snr1 = LinkSnrConfig::new(1.0, 1.0).unwrap();
        let snr10 = LinkSnrConfig::new(10.0, 1.0).unwrap();
        assert_eq!(rate_sl_csir(0.0, &snr1).value, 0.0);
        assert_relative_eq!(rate_sl_csir(1.0, &snr1).value, std::f64::consts::LN_2, epsilon = 1e-12);
        assert_relative_eq!(rate_sl_csir(3.0, &snr10).value, 31f64.ln(), epsilon = 1e-12);
        assert_eq!(rate_tl_csir(0.0).value, 0.0);
        assert_relative_eq!(rate_tl_csir(std::f64::consts::E - 1.0).value, 1.0, epsilon = 1e-15);
        assert_relative_eq!(rate_tl_csir(1.5).value, 0.91629, epsilon = 1e-5);
        assert_eq!(rate_tl_csir_sum(1.5, 0.0).kind, RateKind::TlCsirSum);
    }

    #[test]
    fn snr_validation() {
        assert!(LinkSnrConfig::new(0.0, 1.0).is_err());
        assert!(LinkSnrConfig::new(1.0, -1.0).is_err());
        assert!(LinkSnrConfig::new(f64::NAN, 1.0).is_err());
        assert_relative_eq!(LinkSnrConfig::from_db(20.0, 1.0).unwrap().rho_s, 100.0, epsilon = 1e-12);
    }

    #[test]
    fn trace_determinant_identities_per_draw() {
        let mut rng = StreamKey::new(11).rng();
        for _ in 0..10_000 {
            let ch = sample_channel(&mut rng);
            let [l1, l2] = ch.eigenvalues();
            assert!(l1 >= l2 && l2 >= 0.0);
            let tr = ch.frobenius_sq();
            let det = ch.det_abs_sq();
            assert!(((l1 + l2) - tr).abs() <= 1e-10 * tr);
            assert!((l1 * l2 - det).abs() <= 1e-10 * det.max(f64::MIN_POSITIVE));
        }
    }

    #[test]
    fn mean_trace_is_four() {
        let mut rng = StreamKey::new(5).rng();
        let n = 1_000_000;
        let mean = (0..n).map(|_| sample_channel(&mut rng).frobenius_sq()).sum::<f64>() / n as f64;
        assert!((mean - 4.0).abs() < 0.01, "mean trace {mean}");
    }
}
