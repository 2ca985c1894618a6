//! The type I extreme value law of the centered coherence statistic.
//!
//! As both dimensions grow with `n/p` bounded away from 0 and infinity, the
//! statistic `T = n L^2 - a(p)` converges in law to
//!
//! ```text
//! P(T <= t) -> exp(-(1 / sqrt(8 pi)) * e^(-t/2))
//! ```
//!
//! a Gumbel-type distribution with rate constant `c0 = 1/sqrt(8 pi)`. This
//! module evaluates that law: CDF, upper tail (p-values), quantiles, and
//! random variates, all generic over the scalar.

use rand::Rng;
use thiserror::Error;

use crate::scalar::Real;

/// Rate constant `1 / sqrt(8 pi)` of the limit law.
pub const C0: f64 = 0.199_471_140_200_716_35;

#[derive(Debug, Error, PartialEq)]
pub enum LimitError {
    #[error("probability must lie strictly inside (0, 1), got {0}")]
    InvalidProbability(f64),
}

/// Smallest p-value reported before clamping kicks in.
///
/// Below this the double precision tail is still exact (the upper tail is
/// computed as `-expm1(-c0 e^{-t/2})`, which first underflows near
/// `t ~ 1415`), but downstream consumers treat anything smaller as "beyond
/// numerical resolution" and flag it rather than print denormal noise.
pub const P_CLAMP: f64 = 1e-300;

/// CDF of the limit law, `exp(-c0 e^{-t/2})`.
pub fn cdf<T: Real>(t: T) -> T {
    let c0 = T::of(C0);
    (-c0 * (-t / T::of(2.0)).exp()).exp()
}

/// Upper tail `1 - cdf(t)`, evaluated as `-expm1(-c0 e^{-t/2})` so small
/// p-values keep full relative accuracy.
pub fn pvalue<T: Real>(t: T) -> T {
    let c0 = T::of(C0);
    -(-c0 * (-t / T::of(2.0)).exp()).exp_m1()
}

/// Upper tail together with the clamping policy: p-values below [`P_CLAMP`]
/// are reported as the smallest positive normal value with `clamped = true`.
pub fn pvalue_clamped<T: Real>(t: T) -> (T, bool) {
    let p = pvalue(t);
    if p < T::of(P_CLAMP) {
        (T::min_positive_value(), true)
    } else {
        (p, false)
    }
}

/// Quantile function, `quantile(q) = -2 log(sqrt(8 pi) (-log q))`.
pub fn quantile<T: Real>(q: T) -> Result<T, LimitError> {
    if !(q > T::zero() && q < T::one()) {
        return Err(LimitError::InvalidProbability(q.widen()));
    }
    let sqrt_8pi = T::of(1.0 / C0);
    Ok(-T::of(2.0) * (sqrt_8pi * (-q.ln())).ln())
}

/// Draws a variate of the limit law by inverting the CDF at a uniform.
pub fn sample_variate<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    // Uniform in (0, 1): zero would map to -inf, one to +inf.
    let u: f64 = loop {
        let u = rng.gen::<f64>();
        if u > 0.0 {
            break u;
        }
    };
    quantile(T::of(u)).expect("u lies in (0,1)")
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_frozen_anchors() {
        // cdf(0) = exp(-c0).
        assert!((cdf(0.0f64) - 0.8191638613764112).abs() < 1e-15);
        // At t = -2 log sqrt(8 pi) the exponent is exactly -1.
        let t = -(8.0 * std::f64::consts::PI).ln();
        assert!((cdf(t) - (-1f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn pvalue_frozen_anchors() {
        assert!((pvalue(0.0f64) - 0.18083613862358885).abs() < 1e-15);
        assert!((pvalue(16.623692073271773f64) - 4.8986968491144793e-5).abs() < 1e-17);
    }

    #[test]
    fn pvalue_keeps_relative_accuracy_deep_in_the_tail() {
        // For large t, 1 - cdf ~ c0 e^{-t/2}; expm1 keeps that structure.
        for t in [40.0f64, 80.0, 200.0, 600.0] {
            let expect = C0 * (-t / 2.0).exp();
            let got = pvalue(t);
            assert!(
                ((got - expect) / expect).abs() < 1e-6,
                "t = {t}: {got} vs {expect}"
            );
        }
    }

    #[test]
    fn cdf_plus_pvalue_is_one_in_the_body() {
        let mut t = -16.0f64;
        while t <= 30.0 {
            assert!((cdf(t) + pvalue(t) - 1.0).abs() < 1e-15, "t = {t}");
            t += 0.25;
        }
    }

    #[test]
    fn clamping_flags_microscopic_pvalues() {
        let (p, clamped) = pvalue_clamped(1400.0f64);
        assert!(clamped);
        assert_eq!(p, f64::MIN_POSITIVE);
        let (p, clamped) = pvalue_clamped(10.0f64);
        assert!(!clamped);
        assert!(p > 1e-3);
    }

    #[test]
    fn quantile_frozen_values() {
        assert!((quantile(0.5f64).unwrap() - -2.4911455863659073).abs() < 1e-12);
        // The median of the law feeds the finite-n weak law prediction.
        assert_eq!(quantile(0.0f64).unwrap_err(), LimitError::InvalidProbability(0.0));
        assert_eq!(quantile(1.0f64).unwrap_err(), LimitError::InvalidProbability(1.0));
    }

    #[test]
    fn quantile_inverts_cdf_in_the_well_conditioned_band() {
        // Round trip in t-space. Double precision supports 1e-10 here only
        // while 1 - cdf(t) stays well above the ulp of 1 (t up to ~22) and
        // cdf(t) stays above the underflow threshold (t down to ~ -16.4).
        let mut t = -16.0f64;
        while t <= 22.0 {
            let back = quantile(cdf(t)).unwrap();
            assert!((back - t).abs() < 1e-10, "t = {t}, back = {back}");
            t += 0.125;
        }
    }

    #[test]
    fn cdf_inverts_quantile_everywhere() {
        // Round trip in q-space is well conditioned over the whole range.
        for k in 1..400 {
            let q = k as f64 / 400.0;
            let back = cdf(quantile(q).unwrap());
            assert!((back - q).abs() < 1e-12, "q = {q}");
        }
        for q in [1e-300f64, 1e-100, 1e-12, 1.0 - 1e-12, 1.0 - 1e-15] {
            let back = cdf(quantile(q).unwrap());
            assert!((back - q).abs() < 1e-10, "q = {q}");
        }
    }

    #[test]
    fn empirical_cdf_of_variates_tracks_the_law() {
        let mut rng = crate::dist::RandomStream::substream(31, 0);
        let values: Vec<f64> = (0..100_000).map(|_| sample_variate(&mut rng)).collect();
        let ks = crate::mc::ks_statistic(&values, cdf).unwrap();
        // KS of a true sample of size 1e5 concentrates near 0.004.
        assert!(ks < 0.01, "ks = {ks}");
    }

    #[test]
    fn cdf_is_monotone_increasing() {
        let mut prev = 0.0f64;
        let mut t = -16.0f64;
        while t <= 60.0 {
            let c = cdf(t);
            assert!(c >= prev, "t = {t}");
            prev = c;
            t += 0.01;
        }
    }

    #[test]
    fn f32_instantiation_is_consistent() {
        let c = cdf(0.0f32);
        assert!((c - 0.819_163_9f32).abs() < 1e-6);
        let q = quantile(0.5f32).unwrap();
        assert!((q - -2.491_145_6f32).abs() < 1e-5);
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn cdf_stays_in_unit_interval(t in -1e3..1e3f64) {
            let c = cdf(t);
            prop_assert!((0.0..=1.0).contains(&c));
        }

        #[test]
        fn quantile_round_trip_from_q(q in 1e-6..0.999_999f64) {
            let t = quantile(q).unwrap();
            prop_assert!((cdf(t) - q).abs() < 1e-11);
        }

        #[test]
        fn pvalue_complements_cdf(t in -10.0..25.0f64) {
            prop_assert!((cdf(t) + pvalue(t) - 1.0).abs() < 1e-14);
        }
    }
}
