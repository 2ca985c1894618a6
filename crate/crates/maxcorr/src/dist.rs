//! Symmetric data laws: sampling, tails, and absolute moments.
//!
//! Every family here is symmetric about zero with finite variance, the
//! standing hypotheses of the coherence limit theory. A law is described by
//! the survival function of its absolute value, `S(x) = P(|X| > x)`, which
//! is all the condition quadrature ever needs; densities are never used.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Pareto, StandardNormal, StudentT as StudentTSampler, Uniform};
use statrs::distribution::{ContinuousCDF, StudentsT};
use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::numeric::{bisect_nonincreasing, expand_upper, integrate_tail};
use crate::scalar::Real;

const BISECT_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum DistError {
    #[error("{0} has infinite variance")]
    InfiniteVariance(String),
    #[error("invalid distribution parameter: {0}")]
    InvalidParameter(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
}

// ---------------------------------------------------------------------------
// Random streams
// ---------------------------------------------------------------------------

/// Counter-based random stream: substream `id` of a master seed.
///
/// Built on ChaCha, whose (seed, stream) pairs index independent keystreams.
/// Replication `r` of a run always draws from `substream(seed, r)`, so
/// results do not depend on how replications are scheduled across threads.
#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha8Rng,
}

impl RandomStream {
    /// Substream `id` of `master`; equal inputs give equal draw sequences.
    pub fn substream(master: u64, id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master);
        rng.set_stream(id);
        Self { rng }
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

// ---------------------------------------------------------------------------
// Families
// ---------------------------------------------------------------------------

/// Survival-specified law of `|X|`: the tail function, the support start,
/// and optional known jump locations (atoms) that quadrature should split at.
#[derive(Clone)]
pub struct TailLaw {
    pub survival: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub x0: f64,
    pub label: String,
    pub jumps: Vec<f64>,
}

impl fmt::Debug for TailLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TailLaw").field("x0", &self.x0).field("label", &self.label).finish()
    }
}

#[derive(Debug, Clone)]
pub enum Family {
    StandardNormal,
    StudentT { dof: f64 },
    SymmetricPareto { alpha: f64, x_min: f64 },
    Rademacher,
    UniformSym { half_width: f64 },
    TailSpecified(TailLaw),
}

/// A symmetric law plus an optional rescaling to unit second moment.
///
/// `scale` multiplies raw draws; analytics are expressed through it, e.g.
/// `survival(x) = S_raw(x / scale)`.
#[derive(Debug, Clone)]
pub struct DistributionSpec {
    family: Family,
    standardized: bool,
    scale: f64,
}

impl DistributionSpec {
    /// Wraps a family after validating its parameters.
    pub fn new(family: Family) -> Result<Self, DistError> {
        match &family {
            Family::StudentT { dof } => {
                if !dof.is_finite() || *dof <= 2.0 {
                    return Err(DistError::InfiniteVariance(format!("student t with nu = {dof}")));
                }
            }
            Family::SymmetricPareto { alpha, x_min } => {
                if !alpha.is_finite() || *alpha <= 2.0 {
                    return Err(DistError::InfiniteVariance(format!(
                        "symmetric Pareto with alpha = {alpha}"
                    )));
                }
                if !x_min.is_finite() || *x_min <= 0.0 {
                    return Err(DistError::InvalidParameter(format!("pareto x_min = {x_min}")));
                }
            }
            Family::UniformSym { half_width } => {
                if !half_width.is_finite() || *half_width <= 0.0 {
                    return Err(DistError::InvalidParameter(format!(
                        "uniform half width = {half_width}"
                    )));
                }
            }
            Family::TailSpecified(law) => validate_tail_law(law)?,
            Family::StandardNormal | Family::Rademacher => {}
        }
        Ok(Self { family, standardized: false, scale: 1.0 })
    }

    /// The documented boundary-exploration preset:
    /// `S(x) = min(1, e^6 x^{-6} (log x)^{-beta})` with support start `e`.
    ///
    /// Its tail index is exactly 6, the edge the sixth-moment conditions
    /// probe; `beta` tunes the logarithmic correction. The preset makes no
    /// claim about which `beta` satisfy which condition; it exists to be
    /// measured.
    pub fn boundary_preset(beta: f64) -> Result<Self, DistError> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(DistError::InvalidParameter(format!("boundary beta = {beta}")));
        }
        let e = std::f64::consts::E;
        let c = e.powi(6);
        let survival = move |x: f64| {
            if x <= e {
                1.0
            } else {
                (c * x.powi(-6) * x.ln().powf(-beta)).min(1.0)
            }
        };
        Self::new(Family::TailSpecified(TailLaw {
            survival: Arc::new(survival),
            x0: e,
            label: format!("boundary:{beta}"),
            jumps: Vec::new(),
        }))
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    /// Scale factor applied to raw draws (1 unless standardized).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Rescaled copy with `E X^2 = 1`.
    pub fn standardize(&self) -> Result<Self, DistError> {
        let m2 = self.raw_second_moment()?;
        if !m2.is_finite() || m2 <= 0.0 {
            return Err(DistError::InfiniteVariance(self.to_string()));
        }
        Ok(Self { family: self.family.clone(), standardized: true, scale: m2.sqrt().recip() })
    }

    /// Raw `E X^2`, closed form where available.
    fn raw_second_moment(&self) -> Result<f64, DistError> {
        Ok(match &self.family {
            Family::StandardNormal | Family::Rademacher => 1.0,
            Family::StudentT { dof } => dof / (dof - 2.0),
            Family::SymmetricPareto { alpha, x_min } => alpha / (alpha - 2.0) * x_min * x_min,
            Family::UniformSym { half_width } => half_width * half_width / 3.0,
            Family::TailSpecified(law) => tail_law_moment(law, 2.0).ok_or_else(|| {
                DistError::InfiniteVariance(law.label.clone())
            })?,
        })
    }
}

fn validate_tail_law(law: &TailLaw) -> Result<(), DistError> {
    let s = &law.survival;
    if !(law.x0 >= 0.0) || !law.x0.is_finite() {
        return Err(DistError::InvalidParameter(format!("tail law x0 = {}", law.x0)));
    }
    if (s(law.x0) - 1.0).abs() > 1e-9 {
        return Err(DistError::InvalidParameter(format!(
            "tail law must start at S(x0) = 1, got S({}) = {}",
            law.x0,
            s(law.x0)
        )));
    }
    // Spot-check monotone decay on a geometric grid.
    let mut prev = 1.0;
    let mut x = law.x0.max(1e-6);
    for _ in 0..60 {
        let v = s(x);
        if v > prev + 1e-12 || !(0.0..=1.0 + 1e-12).contains(&v) {
            return Err(DistError::InvalidParameter(format!(
                "tail law survival not nonincreasing near x = {x}"
            )));
        }
        prev = v;
        x *= 1.6;
    }
    if prev > 1e-4 {
        return Err(DistError::InvalidParameter(
            "tail law survival does not appear to vanish".into(),
        ));
    }
    if tail_law_moment(law, 2.0).is_none() {
        return Err(DistError::InfiniteVariance(law.label.clone()));
    }
    Ok(())
}

/// `E |X|^r` of a raw tail law via `x0^r + int r x^{r-1} S(x) dx`.
fn tail_law_moment(law: &TailLaw, r: f64) -> Option<f64> {
    let s = law.survival.clone();
    let f = move |x: f64| r * x.powf(r - 1.0) * s(x);
    let below = law.x0.powf(r); // S = 1 on [0, x0)
    integrate_tail(&f, law.x0, 1e-12, 1e-10).map(|q| below + q.value)
}

// ---------------------------------------------------------------------------
// Analytics
// ---------------------------------------------------------------------------

impl DistributionSpec {
    /// Survival function of the absolute value, `P(|X| > x)`.
    pub fn survival(&self, x: f64) -> f64 {
        debug_assert!(x >= 0.0);
        raw_survival(&self.family, x / self.scale)
    }

    /// Nonstrict tail `P(|X| >= x)`; differs from [`survival`] only at atoms.
    pub fn survival_geq(&self, x: f64) -> f64 {
        let y = x / self.scale;
        match &self.family {
            Family::Rademacher => {
                if y <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            // Continuous families: the two tails agree.
            Family::StandardNormal
            | Family::StudentT { .. }
            | Family::SymmetricPareto { .. }
            | Family::UniformSym { .. } => raw_survival(&self.family, y),
            // Left limit, nudged just below any jump at y.
            Family::TailSpecified(law) => {
                (law.survival)(y * (1.0 - 1e-12) - f64::MIN_POSITIVE)
            }
        }
    }

    /// Smallest `x` with `1 - S(x) >= q` (the quantile of `|X|`).
    pub fn quantile_abs(&self, q: f64) -> Result<f64, DistError> {
        if !(q > 0.0 && q < 1.0) {
            return Err(DistError::InvalidParameter(format!("quantile level {q} not in (0,1)")));
        }
        Ok(self.scale * raw_inverse_survival(&self.family, 1.0 - q))
    }

    /// Inverse survival: smallest `x` with `S(x) <= u`. Shared by the
    /// quantile-domain quadrature and conditional tail sampling.
    pub(crate) fn inverse_survival(&self, u: f64) -> f64 {
        self.scale * raw_inverse_survival(&self.family, u)
    }

    /// Known survival jump locations in the scaled coordinate, for seeding
    /// quadrature.
    pub(crate) fn survival_jumps(&self) -> Vec<f64> {
        match &self.family {
            Family::Rademacher => vec![self.scale],
            Family::TailSpecified(law) => law.jumps.iter().map(|j| j * self.scale).collect(),
            _ => Vec::new(),
        }
    }

    /// `E |X|^r`, or `+inf` when `r` reaches the tail index.
    pub fn moment_abs(&self, r: f64) -> Result<f64, DistError> {
        if !(r > 0.0) {
            return Err(DistError::InvalidParameter(format!("moment order {r} must be > 0")));
        }
        let raw = match &self.family {
            // E|Z|^r = 2^{r/2} Gamma((r+1)/2) / sqrt(pi)
            Family::StandardNormal => {
                (0.5 * r * 2f64.ln() + ln_gamma(0.5 * (r + 1.0)) - 0.5 * std::f64::consts::PI.ln())
                    .exp()
            }
            // E|T|^r = nu^{r/2} Gamma((r+1)/2) Gamma((nu-r)/2) / (sqrt(pi) Gamma(nu/2))
            Family::StudentT { dof } => {
                if r >= *dof {
                    f64::INFINITY
                } else {
                    (0.5 * r * dof.ln() + ln_gamma(0.5 * (r + 1.0)) + ln_gamma(0.5 * (dof - r))
                        - 0.5 * std::f64::consts::PI.ln()
                        - ln_gamma(0.5 * dof))
                    .exp()
                }
            }
            Family::SymmetricPareto { alpha, x_min } => {
                if r >= *alpha {
                    f64::INFINITY
                } else {
                    alpha / (alpha - r) * x_min.powf(r)
                }
            }
            Family::Rademacher => 1.0,
            Family::UniformSym { half_width } => half_width.powf(r) / (r + 1.0),
            Family::TailSpecified(law) => tail_law_moment(law, r).unwrap_or(f64::INFINITY),
        };
        Ok(self.scale.powf(r) * raw)
    }
}

fn raw_survival(family: &Family, x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    match family {
        Family::StandardNormal => erfc(x / std::f64::consts::SQRT_2),
        Family::StudentT { dof } => {
            let t = StudentsT::new(0.0, 1.0, *dof).expect("validated dof");
            2.0 * t.cdf(-x)
        }
        Family::SymmetricPareto { alpha, x_min } => {
            if x <= *x_min {
                1.0
            } else {
                (x / x_min).powf(-alpha)
            }
        }
        Family::Rademacher => {
            if x < 1.0 {
                1.0
            } else {
                0.0
            }
        }
        Family::UniformSym { half_width } => {
            if x >= *half_width {
                0.0
            } else {
                1.0 - x / half_width
            }
        }
        Family::TailSpecified(law) => {
            if x <= law.x0 {
                1.0
            } else {
                (law.survival)(x).clamp(0.0, 1.0)
            }
        }
    }
}

/// Smallest `x >= 0` with `S_raw(x) <= u`, for `u` in `[0, 1]`.
fn raw_inverse_survival(family: &Family, u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    match family {
        Family::StandardNormal => {
            if u >= 1.0 {
                0.0
            } else {
                std::f64::consts::SQRT_2 * erfc_inv(u)
            }
        }
        Family::StudentT { dof } => {
            if u >= 1.0 {
                0.0
            } else {
                let t = StudentsT::new(0.0, 1.0, *dof).expect("validated dof");
                -t.inverse_cdf(0.5 * u)
            }
        }
        Family::SymmetricPareto { alpha, x_min } => {
            if u >= 1.0 {
                *x_min
            } else {
                x_min * u.powf(-1.0 / alpha)
            }
        }
        Family::Rademacher => 1.0,
        Family::UniformSym { half_width } => half_width * (1.0 - u),
        Family::TailSpecified(law) => {
            if u >= 1.0 {
                return law.x0;
            }
            let s = |x: f64| raw_survival(family, x);
            let hi = match expand_upper(s, u, law.x0.max(1.0) * 2.0, 1e300) {
                Some(hi) => hi,
                None => return f64::MAX, // S does not decay; prevented at construction
            };
            bisect_nonincreasing(s, u, law.x0, hi, BISECT_TOL)
        }
    }
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

impl DistributionSpec {
    /// Draws `count` i.i.d. values.
    pub fn sample<T: Real>(&self, stream: &mut RandomStream, count: usize) -> Vec<T> {
        let mut out = vec![T::zero(); count];
        self.sample_into(stream, &mut out);
        out
    }

    /// Fills `out` with i.i.d. draws; draw order is fixed per family, so a
    /// given substream always yields the same values.
    pub fn sample_into<T: Real>(&self, stream: &mut RandomStream, out: &mut [T]) {
        let scale = self.scale;
        match &self.family {
            Family::StandardNormal => {
                for o in out.iter_mut() {
                    let z: f64 = StandardNormal.sample(stream);
                    *o = T::of(scale * z);
                }
            }
            Family::StudentT { dof } => {
                let d = StudentTSampler::new(*dof).expect("validated dof");
                for o in out.iter_mut() {
                    *o = T::of(scale * d.sample(stream));
                }
            }
            Family::SymmetricPareto { alpha, x_min } => {
                let d = Pareto::new(*x_min, *alpha).expect("validated parameters");
                for o in out.iter_mut() {
                    let mag: f64 = d.sample(stream);
                    let sign = if stream.gen::<bool>() { 1.0 } else { -1.0 };
                    *o = T::of(scale * sign * mag);
                }
            }
            Family::Rademacher => {
                for o in out.iter_mut() {
                    let sign = if stream.gen::<bool>() { 1.0 } else { -1.0 };
                    *o = T::of(scale * sign);
                }
            }
            Family::UniformSym { half_width } => {
                let d = Uniform::new(-half_width, *half_width);
                for o in out.iter_mut() {
                    *o = T::of(scale * d.sample(stream));
                }
            }
            Family::TailSpecified(_) => {
                for o in out.iter_mut() {
                    // u in (0, 1]: inversion of the survival function.
                    let u = 1.0 - stream.gen::<f64>();
                    let mag = raw_inverse_survival(&self.family, u);
                    let sign = if stream.gen::<bool>() { 1.0 } else { -1.0 };
                    *o = T::of(scale * sign * mag);
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Naming and parsing
// ---------------------------------------------------------------------------

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match &self.family {
            Family::StandardNormal => "normal".to_string(),
            Family::StudentT { dof } => format!("student-t:{dof}"),
            Family::SymmetricPareto { alpha, x_min } => format!("pareto:{alpha},{x_min}"),
            Family::Rademacher => "rademacher".to_string(),
            Family::UniformSym { half_width } => format!("uniform:{half_width}"),
            Family::TailSpecified(law) => law.label.clone(),
        };
        if self.standardized {
            write!(f, "{name}+std")
        } else {
            write!(f, "{name}")
        }
    }
}

impl std::str::FromStr for DistributionSpec {
    type Err = DistError;

    /// Parses the CLI form, e.g. `normal`, `student-t:5`, `pareto:4,1`,
    /// `uniform:1.5`, `rademacher`, `boundary:1.5`, with an optional `+std`
    /// suffix requesting standardization.
    fn from_str(s: &str) -> Result<Self, DistError> {
        let (body, std_suffix) = match s.strip_suffix("+std") {
            Some(b) => (b, true),
            None => (s, false),
        };
        let (name, args) = match body.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (body.trim(), None),
        };
        let parse_f64 = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| DistError::InvalidParameter(format!("bad number '{v}' in '{s}'")))
        };
        let spec = match (name, args) {
            ("normal", None) => Self::new(Family::StandardNormal)?,
            ("rademacher", None) => Self::new(Family::Rademacher)?,
            ("student-t" | "student_t" | "t", Some(a)) => {
                Self::new(Family::StudentT { dof: parse_f64(a)? })?
            }
            ("pareto", Some(a)) => {
                let (alpha, x_min) = match a.split_once(',') {
                    Some((l, r)) => (parse_f64(l)?, parse_f64(r)?),
                    None => (parse_f64(a)?, 1.0),
                };
                Self::new(Family::SymmetricPareto { alpha, x_min })?
            }
            ("uniform", Some(a)) => Self::new(Family::UniformSym { half_width: parse_f64(a)? })?,
            ("boundary", Some(a)) => Self::boundary_preset(parse_f64(a)?)?,
            _ => {
                return Err(DistError::InvalidParameter(format!(
                    "unknown distribution '{s}' (expected normal, student-t:NU, \
                     pareto:ALPHA[,XMIN], uniform:H, rademacher, or boundary:BETA)"
                )))
            }
        };
        if std_suffix {
            spec.standardize()
        } else {
            Ok(spec)
        }
    }
}

impl serde::Serialize for DistributionSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for DistributionSpec {
    /// Parses the canonical string form. Survival-specified laws other than
    /// the named presets serialize to their label but cannot be read back.
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn normal() -> DistributionSpec {
        DistributionSpec::new(Family::StandardNormal).unwrap()
    }

    fn pareto41() -> DistributionSpec {
        DistributionSpec::new(Family::SymmetricPareto { alpha: 4.0, x_min: 1.0 }).unwrap()
    }

    // ---- validation ----

    #[test]
    fn rejects_infinite_variance_parameters() {
        assert!(matches!(
            DistributionSpec::new(Family::StudentT { dof: 2.0 }),
            Err(DistError::InfiniteVariance(_))
        ));
        assert!(matches!(
            DistributionSpec::new(Family::SymmetricPareto { alpha: 1.5, x_min: 1.0 }),
            Err(DistError::InfiniteVariance(_))
        ));
        assert!(matches!(
            DistributionSpec::new(Family::UniformSym { half_width: 0.0 }),
            Err(DistError::InvalidParameter(_))
        ));
    }

    #[test]
    fn tail_law_construction_is_checked() {
        // Growing "survival" must be rejected.
        let bad = TailLaw {
            survival: Arc::new(|x| (x / 10.0).min(1.0)),
            x0: 0.0,
            label: "bad".into(),
            jumps: vec![],
        };
        assert!(DistributionSpec::new(Family::TailSpecified(bad)).is_err());
        // The boundary preset is accepted.
        assert!(DistributionSpec::boundary_preset(1.5).is_ok());
    }

    // ---- standardization ----

    #[test]
    fn standardization_scales_match_closed_forms() {
        let t5 = DistributionSpec::new(Family::StudentT { dof: 5.0 }).unwrap().standardize().unwrap();
        assert!((t5.scale() - (3f64 / 5.0).sqrt()).abs() < 1e-14);
        let p = pareto41().standardize().unwrap();
        assert!((p.scale() - 0.5f64.sqrt()).abs() < 1e-14);
        let n = normal().standardize().unwrap();
        assert_eq!(n.scale(), 1.0);
        let u = DistributionSpec::new(Family::UniformSym { half_width: 3f64.sqrt() })
            .unwrap()
            .standardize()
            .unwrap();
        assert!((u.scale() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn standardized_second_moment_is_one() {
        for spec in [
            normal().standardize().unwrap(),
            pareto41().standardize().unwrap(),
            DistributionSpec::new(Family::StudentT { dof: 5.0 }).unwrap().standardize().unwrap(),
            DistributionSpec::boundary_preset(1.5).unwrap().standardize().unwrap(),
        ] {
            let m2 = spec.moment_abs(2.0).unwrap();
            assert!((m2 - 1.0).abs() < 1e-8, "{spec}: {m2}");
        }
    }

    // ---- survival and quantiles ----

    #[test]
    fn survival_frozen_values() {
        assert!((pareto41().survival(2.0) - 0.0625).abs() < 1e-15);
        assert_eq!(pareto41().survival(0.5), 1.0);
        let rad = DistributionSpec::new(Family::Rademacher).unwrap();
        assert_eq!(rad.survival(1.5), 0.0);
        assert_eq!(rad.survival(0.0), 1.0);
        assert_eq!(rad.survival_geq(1.0), 1.0, "nonstrict tail keeps the atom");
        assert_eq!(rad.survival(1.0), 0.0, "strict tail drops the atom");
        assert_eq!(normal().survival(0.0), 1.0);
    }

    #[test]
    fn quantile_abs_frozen_values() {
        let q = pareto41().quantile_abs(1.0 - 0.0625).unwrap();
        assert!((q - 2.0).abs() < 1e-12);
        let rad = DistributionSpec::new(Family::Rademacher).unwrap();
        assert_eq!(rad.quantile_abs(0.3).unwrap(), 1.0);
        assert_eq!(rad.quantile_abs(0.9).unwrap(), 1.0);
        assert!(normal().quantile_abs(1.2).is_err());
    }

    #[test]
    fn survival_inverts_quantile_for_continuous_families() {
        let t5 = DistributionSpec::new(Family::StudentT { dof: 5.0 }).unwrap();
        let bnd = DistributionSpec::boundary_preset(1.0).unwrap();
        for spec in [normal(), pareto41(), t5, bnd] {
            for q in [0.05, 0.3, 0.5, 0.9, 0.99, 0.9999] {
                let x = spec.quantile_abs(q).unwrap();
                let back = 1.0 - spec.survival(x);
                assert!((back - q).abs() < 1e-9, "{spec} at q = {q}: {back}");
            }
        }
    }

    #[test]
    fn student_survival_against_symmetry() {
        let t5 = DistributionSpec::new(Family::StudentT { dof: 5.0 }).unwrap();
        assert!((t5.survival(0.0) - 1.0).abs() < 1e-12);
        assert!(t5.survival(50.0) < 1e-6);
    }

    // ---- moments ----

    #[test]
    fn moment_frozen_values() {
        let t5 = DistributionSpec::new(Family::StudentT { dof: 5.0 }).unwrap().standardize().unwrap();
        assert!((t5.moment_abs(4.0).unwrap() - 9.0).abs() < 9.0 * 0.005, "kurtosis 3 + 6/(nu-4)");
        let p = pareto41().standardize().unwrap();
        assert!((p.moment_abs(3.0).unwrap() - 2f64.sqrt()).abs() < 2f64.sqrt() * 0.005);
        // Raw pareto: E|X|^3 = alpha/(alpha-3) = 4.
        assert!((pareto41().moment_abs(3.0).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn moments_hit_the_infinity_marker_at_the_tail_index() {
        assert_eq!(pareto41().moment_abs(4.0).unwrap(), f64::INFINITY);
        assert_eq!(pareto41().moment_abs(5.0).unwrap(), f64::INFINITY);
        let t5 = DistributionSpec::new(Family::StudentT { dof: 5.0 }).unwrap();
        assert_eq!(t5.moment_abs(5.0).unwrap(), f64::INFINITY);
        assert!(t5.moment_abs(4.999).unwrap().is_finite());
        // Boundary preset has tail index 6.
        let b = DistributionSpec::boundary_preset(1.5).unwrap();
        assert_eq!(b.moment_abs(6.5).unwrap(), f64::INFINITY);
        assert!(b.moment_abs(4.0).unwrap().is_finite());
    }

    #[test]
    fn normal_moments_match_known_values() {
        let n = normal();
        assert!((n.moment_abs(2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((n.moment_abs(4.0).unwrap() - 3.0).abs() < 1e-12);
        // E|Z| = sqrt(2/pi)
        let expect = (2.0 / std::f64::consts::PI).sqrt();
        assert!((n.moment_abs(1.0).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn quadrature_moment_matches_closed_form_for_pareto_shaped_tail_law() {
        // Same law as pareto(4,1) but specified only through its survival.
        let law = TailLaw {
            survival: Arc::new(|x: f64| if x <= 1.0 { 1.0 } else { x.powi(-4) }),
            x0: 1.0,
            label: "pareto-by-tail".into(),
            jumps: vec![],
        };
        let spec = DistributionSpec::new(Family::TailSpecified(law)).unwrap();
        for r in [1.0, 2.0, 3.0] {
            let expect = 4.0 / (4.0 - r);
            let got = spec.moment_abs(r).unwrap();
            assert!((got - expect).abs() < 1e-6 * expect, "r = {r}: {got} vs {expect}");
        }
    }

    // ---- sampling ----

    #[test]
    fn sampling_respects_support() {
        let mut s = RandomStream::substream(7, 0);
        let rad = DistributionSpec::new(Family::Rademacher).unwrap();
        for v in rad.sample::<f64>(&mut s, 2000) {
            assert!(v == 1.0 || v == -1.0);
        }
        let p = pareto41();
        for v in p.sample::<f64>(&mut s, 2000) {
            assert!(v.abs() >= 1.0);
        }
        let u = DistributionSpec::new(Family::UniformSym { half_width: 2.0 }).unwrap();
        for v in u.sample::<f64>(&mut s, 2000) {
            assert!(v.abs() < 2.0);
        }
    }

    #[test]
    fn substreams_are_reproducible_and_distinct() {
        let spec = normal();
        let a: Vec<f64> = spec.sample(&mut RandomStream::substream(9, 4), 16);
        let b: Vec<f64> = spec.sample(&mut RandomStream::substream(9, 4), 16);
        let c: Vec<f64> = spec.sample(&mut RandomStream::substream(9, 5), 16);
        assert_eq!(a, b, "same (seed, id) must reproduce");
        assert_ne!(a, c, "different ids must differ");
    }

    #[test]
    fn million_draw_variance_and_symmetry() {
        // 3 sigma bands: variance within ~3 sqrt(2/n), mean within 3 sqrt(1/n).
        let families = [
            normal().standardize().unwrap(),
            DistributionSpec::new(Family::StudentT { dof: 5.0 }).unwrap().standardize().unwrap(),
            pareto41().standardize().unwrap(),
            DistributionSpec::new(Family::Rademacher).unwrap().standardize().unwrap(),
            DistributionSpec::new(Family::UniformSym { half_width: 0.4 }).unwrap().standardize().unwrap(),
        ];
        let n = 1_000_000usize;
        for (k, spec) in families.iter().enumerate() {
            let mut stream = RandomStream::substream(1234, k as u64);
            let xs: Vec<f64> = spec.sample(&mut stream, n);
            let mean = xs.iter().sum::<f64>() / n as f64;
            assert!(mean.abs() < 3e-3, "{spec}: mean {mean}");
            if matches!(spec.family(), Family::StandardNormal) {
                let var = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
                assert!((0.99..=1.01).contains(&var), "variance {var}");
            }
        }
    }

    #[test]
    fn tail_specified_sampling_follows_its_survival() {
        let spec = DistributionSpec::boundary_preset(1.5).unwrap();
        let mut stream = RandomStream::substream(5, 0);
        let xs: Vec<f64> = spec.sample(&mut stream, 100_000);
        // Compare empirical tail at a few points against S.
        for x in [3.0, 4.0, 6.0] {
            let emp = xs.iter().filter(|v| v.abs() > x).count() as f64 / xs.len() as f64;
            let s = spec.survival(x);
            let se = (s * (1.0 - s) / xs.len() as f64).sqrt();
            assert!((emp - s).abs() < 4.0 * se + 1e-4, "x = {x}: {emp} vs {s}");
        }
    }

    // ---- naming ----

    #[test]
    fn display_and_parse_round_trip() {
        for s in ["normal", "student-t:5", "pareto:4,1", "uniform:1.5", "rademacher", "boundary:1.5"] {
            let spec: DistributionSpec = s.parse().unwrap();
            let shown = spec.to_string();
            let again: DistributionSpec = shown.parse().unwrap();
            assert_eq!(shown, again.to_string(), "{s}");
        }
        let spec: DistributionSpec = "pareto:4,1+std".parse().unwrap();
        assert!(spec.is_standardized());
        assert!((spec.scale() - 0.5f64.sqrt()).abs() < 1e-14);
        assert!("gamma:2".parse::<DistributionSpec>().is_err());
    }
}
