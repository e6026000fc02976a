//! Base acquisitions (UCB, TS, EI, PI) and their Lipschitz-mixed variants:
//! truncation of the improvement integral to the envelope-feasible value
//! range (TEI, TPI, TUCB) and accept-reject filtering (AR-UCB, AR-TS).

use crate::error::{Error, Result};
use crate::gp::PredictiveMoments;
use crate::lipschitz::EnvelopeValues;
use crate::stats::{norm_cdf, norm_pdf};

/// Base acquisition family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum BaseAcquisition {
    Ucb,
    ThompsonSampling,
    Ei,
    Pi,
}

impl BaseAcquisition {
    pub fn label(&self) -> &'static str {
        match self {
            BaseAcquisition::Ucb => "ucb",
            BaseAcquisition::ThompsonSampling => "ts",
            BaseAcquisition::Ei => "ei",
            BaseAcquisition::Pi => "pi",
        }
    }
}

/// How Lipschitz information wraps the base acquisition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum LboMode {
    Off,
    Truncated,
    AcceptReject,
}

impl LboMode {
    pub fn label(&self) -> &'static str {
        match self {
            LboMode::Off => "off",
            LboMode::Truncated => "truncated",
            LboMode::AcceptReject => "ar",
        }
    }
}

/// A validated base + wrapper pairing. Truncation applies to EI/PI/UCB,
/// accept-reject to UCB/TS (the evaluated pairings TEI, TPI, TUCB, AR-UCB,
/// AR-TS).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct AcquisitionSpec {
    pub base: BaseAcquisition,
    pub lbo: LboMode,
}

impl AcquisitionSpec {
    pub fn new(base: BaseAcquisition, lbo: LboMode) -> Result<Self> {
        let ok = match lbo {
            LboMode::Off => true,
            LboMode::Truncated => matches!(
                base,
                BaseAcquisition::Ei | BaseAcquisition::Pi | BaseAcquisition::Ucb
            ),
            LboMode::AcceptReject => {
                matches!(base, BaseAcquisition::Ucb | BaseAcquisition::ThompsonSampling)
            }
        };
        if ok {
            Ok(AcquisitionSpec { base, lbo })
        } else {
            Err(Error::InvalidArgument(format!(
                "{} cannot be combined with lbo mode {}",
                base.label(),
                lbo.label()
            )))
        }
    }

    /// Method name used in traces, CSV rows and plots ("ei", "tei", "ar-ts", ...).
    pub fn label(&self) -> String {
        match self.lbo {
            LboMode::Off => self.base.label().to_string(),
            LboMode::Truncated => format!("t{}", self.base.label()),
            LboMode::AcceptReject => format!("ar-{}", self.base.label()),
        }
    }
}

/// Integration limits for the truncated improvement integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationLimits {
    pub lo: f64,
    pub hi: f64,
}

/// z(u, v) = (mu(u) - v) / sigma(u).
pub fn z_score(mu: f64, sigma: f64, v: f64) -> f64 {
    debug_assert!(sigma > 0.0);
    (mu - v) / sigma
}

/// UCB(x) = mu + sqrt(beta_t) * sigma.
pub fn ucb(m: PredictiveMoments, beta_t: f64) -> f64 {
    debug_assert!(beta_t >= 0.0);
    m.mu + beta_t.sqrt() * m.sigma
}

/// Expected improvement over `y_star`.
pub fn ei(m: PredictiveMoments, y_star: f64) -> f64 {
    if m.sigma <= 0.0 {
        return (m.mu - y_star).max(0.0);
    }
    let z = z_score(m.mu, m.sigma, y_star);
    m.sigma * (z * norm_cdf(z) + norm_pdf(z))
}

/// Probability of improvement over `y_star`.
pub fn pi(m: PredictiveMoments, y_star: f64) -> f64 {
    if m.sigma <= 0.0 {
        return if m.mu >= y_star { 1.0 } else { 0.0 };
    }
    norm_cdf(z_score(m.mu, m.sigma, y_star))
}

/// Limits of the feasible value range at a point. The upper limit is always
/// f_u; the lower limit is y* clamped into the envelope: y* inside keeps y*,
/// y* above the envelope collapses the range (a rejected point), and y* below
/// f_l starts the integral at f_l since improvement there is certain.
pub fn truncation_limits(env: EnvelopeValues, y_star: f64) -> TruncationLimits {
    debug_assert!(env.lower <= env.upper);
    TruncationLimits { lo: y_star.clamp(env.lower, env.upper), hi: env.upper }
}

/// Truncated expected improvement: the EI integral restricted to [lo, hi].
pub fn tei(m: PredictiveMoments, y_star: f64, lim: TruncationLimits) -> f64 {
    debug_assert!(lim.lo <= lim.hi);
    if m.sigma <= 0.0 {
        return if m.mu >= lim.lo && m.mu <= lim.hi { (m.mu - y_star).max(0.0) } else { 0.0 };
    }
    let z_lo = z_score(m.mu, m.sigma, lim.lo);
    let z_hi = z_score(m.mu, m.sigma, lim.hi);
    let z_star = z_score(m.mu, m.sigma, y_star);
    m.sigma * z_star * (norm_cdf(z_lo) - norm_cdf(z_hi))
        + m.sigma * (norm_pdf(z_lo) - norm_pdf(z_hi))
}

/// Truncated probability of improvement: Phi(z(x, lo)) - Phi(z(x, hi)).
pub fn tpi(m: PredictiveMoments, lim: TruncationLimits) -> f64 {
    debug_assert!(lim.lo <= lim.hi);
    if m.sigma <= 0.0 {
        return if m.mu > lim.lo && m.mu <= lim.hi { 1.0 } else { 0.0 };
    }
    let z_lo = z_score(m.mu, m.sigma, lim.lo);
    let z_hi = z_score(m.mu, m.sigma, lim.hi);
    norm_cdf(z_lo) - norm_cdf(z_hi)
}

/// Truncated UCB: the optimistic value capped by the Lipschitz upper bound.
pub fn tucb(ucb_value: f64, env: EnvelopeValues) -> f64 {
    ucb_value.min(env.upper)
}

/// Accept-reject wrapper: keep the acquisition value when it is consistent
/// with the envelope, otherwise an ordered sentinel below every real.
pub fn accept_reject(g_value: f64, env: EnvelopeValues) -> f64 {
    if g_value >= env.lower && g_value <= env.upper {
        g_value
    } else {
        f64::NEG_INFINITY
    }
}

/// Exploration schedule for UCB.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum BetaSchedule {
    /// c * d * ln(2t); stand-in for the externally cited practical schedule.
    Practical { c: f64 },
    /// beta_t^{1/2} = 2 ln(|D| pi_t / delta) read literally, pi_t = pi^2 t^2 / 6.
    TheoremLiteral { space_size: usize, delta: f64 },
    /// The conventional reading beta_t = 2 ln(|D| pi_t / delta).
    TheoremSrinivas { space_size: usize, delta: f64 },
    /// Constant beta (supports the beta = 1e16 stress experiments exactly).
    Fixed(f64),
}

pub const DEFAULT_PRACTICAL_C: f64 = 0.2;

impl BetaSchedule {
    pub fn beta(&self, t: usize, dim: usize) -> f64 {
        assert!(t >= 1, "beta schedule starts at t = 1");
        match *self {
            BetaSchedule::Practical { c } => c * dim as f64 * (2.0 * t as f64).ln(),
            BetaSchedule::TheoremLiteral { space_size, delta } => {
                let half = 2.0 * Self::log_term(space_size, delta, t);
                half * half
            }
            BetaSchedule::TheoremSrinivas { space_size, delta } => {
                2.0 * Self::log_term(space_size, delta, t)
            }
            BetaSchedule::Fixed(v) => v,
        }
    }

    fn log_term(space_size: usize, delta: f64, t: usize) -> f64 {
        let pi_t = std::f64::consts::PI.powi(2) * (t * t) as f64 / 6.0;
        (space_size as f64 * pi_t / delta).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(mu: f64, sigma: f64) -> PredictiveMoments {
        PredictiveMoments { mu, sigma }
    }

    #[test]
    fn z_score_examples() {
        assert_eq!(z_score(1.0, 2.0, 0.0), 0.5);
        assert_eq!(z_score(1.0, 2.0, 1.0), 0.0);
        assert!(z_score(1.0, 2.0, 2.0) < 0.0);
    }

    #[test]
    fn ucb_examples() {
        assert_eq!(ucb(m(0.5, 0.0), 4.0), 0.5);
        assert_eq!(ucb(m(0.5, 1.0), 0.0), 0.5);
        assert_eq!(ucb(m(0.0, 1.0), 4.0), 2.0);
    }

    #[test]
    fn ei_at_incumbent_mean_is_phi_zero() {
        let v = ei(m(1.0, 1.0), 1.0);
        assert!((v - 0.398_942_280_401_432_7).abs() < 1e-12);
    }

    #[test]
    fn ei_zero_sigma_limits() {
        assert_eq!(ei(m(0.5, 0.0), 1.0), 0.0);
        assert_eq!(ei(m(1.5, 0.0), 1.0), 0.5);
    }

    #[test]
    fn ei_dominates_mean_gap() {
        for &(mu, sigma, ys) in
            &[(0.0, 1.0, 0.5), (2.0, 0.3, 1.0), (-1.0, 2.0, 3.0), (0.0, 0.01, -5.0)]
        {
            let v = ei(m(mu, sigma), ys);
            assert!(v >= 0.0);
            assert!(v >= mu - ys - 1e-12);
        }
    }

    #[test]
    fn pi_examples() {
        assert!((pi(m(1.0, 1.0), 1.0) - 0.5).abs() < 1e-15);
        assert!((pi(m(2.0, 1.0), 0.0) - 0.977_249_868_051_820_8).abs() < 1e-12);
        assert!(pi(m(0.5, 1.0), 0.0) < pi(m(1.0, 1.0), 0.0));
        assert_eq!(pi(m(0.5, 0.0), 1.0), 0.0);
        assert_eq!(pi(m(1.0, 0.0), 1.0), 1.0);
    }

    #[test]
    fn truncation_limits_three_cases() {
        let env = EnvelopeValues { lower: -1.0, upper: 1.0 };
        // y* inside the envelope
        assert_eq!(truncation_limits(env, 0.0), TruncationLimits { lo: 0.0, hi: 1.0 });
        // y* above: rejected point, zero-width range
        assert_eq!(truncation_limits(env, 2.0), TruncationLimits { lo: 1.0, hi: 1.0 });
        // y* below the envelope: improvement certain, full feasible range
        assert_eq!(truncation_limits(env, -2.0), TruncationLimits { lo: -1.0, hi: 1.0 });
    }

    #[test]
    fn tei_reduces_to_ei_without_lipschitz_information() {
        // No Lipschitz info => envelope (-inf, inf) => limits (y*, inf).
        for &(mu, sigma, ys) in
            &[(0.0, 1.0, 0.0), (1.0, 0.5, 0.3), (-2.0, 3.0, 1.0), (0.2, 0.01, 0.5)]
        {
            let lim = truncation_limits(EnvelopeValues::unbounded(), ys);
            assert_eq!(lim.lo, ys);
            assert_eq!(lim.hi, f64::INFINITY);
            let a = tei(m(mu, sigma), ys, lim);
            let b = ei(m(mu, sigma), ys);
            assert!((a - b).abs() < 1e-12, "tei {a} vs ei {b}");
        }
    }

    #[test]
    fn tei_zero_width_is_zero() {
        let v = tei(m(0.3, 1.0), 0.0, TruncationLimits { lo: 0.5, hi: 0.5 });
        assert_eq!(v, 0.0);
    }

    #[test]
    fn tei_matches_frozen_quadrature_value() {
        // integral of f * phi(f; 0, 1) over [0, 2], 30-digit arithmetic
        let v = tei(m(0.0, 1.0), 0.0, TruncationLimits { lo: 0.0, hi: 2.0 });
        assert!((v - 0.344_951_313_888_244_6).abs() < 1e-8);
    }

    #[test]
    fn tpi_reduces_to_pi() {
        for &(mu, sigma, ys) in &[(0.0, 1.0, 0.0), (1.0, 0.5, 0.3), (-2.0, 3.0, 1.0)] {
            let lim = TruncationLimits { lo: ys, hi: f64::INFINITY };
            assert!((tpi(m(mu, sigma), lim) - pi(m(mu, sigma), ys)).abs() < 1e-15);
        }
    }

    #[test]
    fn tpi_frozen_interval_value() {
        let v = tpi(m(0.0, 1.0), TruncationLimits { lo: -1.0, hi: 1.0 });
        assert!((v - 0.682_689_492_137_085_9).abs() < 1e-12);
    }

    #[test]
    fn tpi_zero_sigma_indicator() {
        let lim = TruncationLimits { lo: 0.0, hi: 1.0 };
        assert_eq!(tpi(m(0.5, 0.0), lim), 1.0);
        assert_eq!(tpi(m(0.0, 0.0), lim), 0.0); // boundary lo excluded
        assert_eq!(tpi(m(1.0, 0.0), lim), 1.0); // boundary hi included
        assert_eq!(tpi(m(2.0, 0.0), lim), 0.0);
    }

    #[test]
    fn tucb_examples() {
        let env = EnvelopeValues { lower: -1.0, upper: 2.0 };
        assert_eq!(tucb(3.0, env), 2.0);
        assert_eq!(tucb(1.0, env), 1.0);
        assert_eq!(tucb(1.0, EnvelopeValues::unbounded()), 1.0);
    }

    #[test]
    fn accept_reject_examples() {
        let env = EnvelopeValues { lower: -1.0, upper: 1.0 };
        assert_eq!(accept_reject(0.5, env), 0.5);
        assert_eq!(accept_reject(1.5, env), f64::NEG_INFINITY);
        assert_eq!(accept_reject(1.0, env), 1.0); // closed interval
        assert_eq!(accept_reject(-1.0, env), -1.0);
    }

    #[test]
    fn rejected_points_are_null_under_all_wrappers() {
        // y* at or above f_u: the point cannot improve.
        let env = EnvelopeValues { lower: -0.5, upper: 0.8 };
        let y_star = 1.0;
        let lim = truncation_limits(env, y_star);
        let mm = m(0.3, 0.7);
        assert_eq!(tpi(mm, lim), 0.0);
        assert_eq!(tei(mm, y_star, lim), 0.0);
        assert_eq!(accept_reject(1.2, env), f64::NEG_INFINITY);
        assert!(tucb(5.0, env) <= y_star);
    }

    #[test]
    fn spec_validation_rules() {
        use BaseAcquisition::*;
        assert!(AcquisitionSpec::new(Ei, LboMode::Truncated).is_ok());
        assert!(AcquisitionSpec::new(Pi, LboMode::Truncated).is_ok());
        assert!(AcquisitionSpec::new(Ucb, LboMode::Truncated).is_ok());
        assert!(AcquisitionSpec::new(ThompsonSampling, LboMode::Truncated).is_err());
        assert!(AcquisitionSpec::new(Ucb, LboMode::AcceptReject).is_ok());
        assert!(AcquisitionSpec::new(ThompsonSampling, LboMode::AcceptReject).is_ok());
        assert!(AcquisitionSpec::new(Ei, LboMode::AcceptReject).is_err());
        assert!(AcquisitionSpec::new(Pi, LboMode::AcceptReject).is_err());
        assert_eq!(AcquisitionSpec::new(Ei, LboMode::Truncated).unwrap().label(), "tei");
        assert_eq!(
            AcquisitionSpec::new(ThompsonSampling, LboMode::AcceptReject).unwrap().label(),
            "ar-ts"
        );
    }

    #[test]
    fn beta_schedule_examples() {
        let practical = BetaSchedule::Practical { c: 0.2 };
        assert!((practical.beta(1, 2) - 0.277_258_872_223_978_1).abs() < 1e-13);
        let literal = BetaSchedule::TheoremLiteral { space_size: 100, delta: 0.1 };
        assert!((literal.beta(1, 1) - 219.363_089_475_486_6).abs() < 1e-9);
        let srinivas = BetaSchedule::TheoremSrinivas { space_size: 100, delta: 0.1 };
        assert!((srinivas.beta(1, 1).powi(2) / 4.0 - literal.beta(1, 1) / 4.0).abs() < 1.0);
        assert_eq!(BetaSchedule::Fixed(1e16).beta(17, 3), 1e16);
    }

    #[test]
    fn beta_nondecreasing_in_t() {
        for sched in [
            BetaSchedule::Practical { c: 0.2 },
            BetaSchedule::TheoremLiteral { space_size: 50, delta: 0.1 },
            BetaSchedule::TheoremSrinivas { space_size: 50, delta: 0.1 },
        ] {
            let mut prev = 0.0;
            for t in 1..50 {
                let b = sched.beta(t, 2);
                assert!(b >= prev);
                prev = b;
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn prop_reduction_identities(
            mu in -5.0f64..5.0,
            sigma in 1e-3f64..10.0,
            y_star in -5.0f64..5.0,
        ) {
            let mm = m(mu, sigma);
            let lim_ei = truncation_limits(EnvelopeValues::unbounded(), y_star);
            prop_assert!((tei(mm, y_star, lim_ei) - ei(mm, y_star)).abs() <= 1e-10);
            let lim_pi = TruncationLimits { lo: y_star, hi: f64::INFINITY };
            prop_assert!((tpi(mm, lim_pi) - pi(mm, y_star)).abs() <= 1e-10);
        }

        #[test]
        fn prop_tpi_range_and_monotonicity(
            mu in -3.0f64..3.0,
            sigma in 1e-3f64..5.0,
            lo in -4.0f64..2.0,
            width in 0.0f64..4.0,
            widen in 0.0f64..2.0,
        ) {
            let mm = m(mu, sigma);
            let narrow = TruncationLimits { lo, hi: lo + width };
            let wide = TruncationLimits { lo: lo - widen, hi: lo + width + widen };
            let a = tpi(mm, narrow);
            let b = tpi(mm, wide);
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!(b + 1e-12 >= a);
        }

        #[test]
        fn prop_tei_nonnegative_when_lo_at_least_y_star(
            mu in -3.0f64..3.0,
            sigma in 1e-3f64..5.0,
            y_star in -3.0f64..3.0,
            gap in 0.0f64..2.0,
            width in 0.0f64..4.0,
        ) {
            let lim = TruncationLimits { lo: y_star + gap, hi: y_star + gap + width };
            prop_assert!(tei(m(mu, sigma), y_star, lim) >= -1e-12);
        }
    }
}
