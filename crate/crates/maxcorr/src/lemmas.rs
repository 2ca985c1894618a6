//! Statistics behind the lemmas that support the coherence limit law.
//!
//! Each operation is a pure function of one simulated pair of columns (plus
//! independent copies where symmetrization is involved), so the Monte Carlo
//! harness can estimate tail curves `n * P(stat > a)` for any of them
//! without duplicating formulas.

use thiserror::Error;

use crate::corr::{pearson_pair, CorrError, DataMatrix};
use crate::numeric::{dot, sum};
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum LemmaError {
    #[error(transparent)]
    Corr(#[from] CorrError),
    #[error("statistic requires an independent copy, but none was attached")]
    MissingCopy,
}

/// Two i.i.d. columns of length `n`, optionally with independent copies
/// `x1p`, `x2p` of the same length for symmetrized statistics.
///
/// Single-observation samples are allowed (the sign-symmetry identities are
/// meaningful even at `n = 1`); statistics that scale by `sqrt(n / log n)`
/// require `n >= 2` and say so at call time.
#[derive(Debug, Clone)]
pub struct PairSample<T> {
    x1: Vec<T>,
    x2: Vec<T>,
    x1p: Option<Vec<T>>,
    x2p: Option<Vec<T>>,
}

impl<T: Real> PairSample<T> {
    pub fn new(x1: Vec<T>, x2: Vec<T>) -> Result<Self, LemmaError> {
        check_columns(&[(&x1, 0), (&x2, 1)])?;
        Ok(Self { x1, x2, x1p: None, x2p: None })
    }

    /// Attaches independent copies drawn from the same law.
    pub fn with_copies(
        x1: Vec<T>,
        x2: Vec<T>,
        x1p: Vec<T>,
        x2p: Vec<T>,
    ) -> Result<Self, LemmaError> {
        check_columns(&[(&x1, 0), (&x2, 1), (&x1p, 2), (&x2p, 3)])?;
        if x1p.len() != x1.len() || x2p.len() != x1.len() {
            return Err(CorrError::ShapeMismatch(x1p.len().min(x2p.len()), x1.len(), 2).into());
        }
        Ok(Self { x1, x2, x1p: Some(x1p), x2p: Some(x2p) })
    }

    pub fn n(&self) -> usize {
        self.x1.len()
    }

    pub fn x1(&self) -> &[T] {
        &self.x1
    }

    pub fn x2(&self) -> &[T] {
        &self.x2
    }
}

fn check_columns<T: Real>(cols: &[(&Vec<T>, usize)]) -> Result<(), LemmaError> {
    let n = cols[0].0.len();
    if n == 0 {
        return Err(CorrError::InsufficientSamples(0).into());
    }
    for (col, id) in cols {
        if col.len() != n {
            return Err(CorrError::ShapeMismatch(col.len(), n, 1).into());
        }
        for (row, v) in col.iter().enumerate() {
            if !v.is_finite() {
                return Err(CorrError::NonFinite { row, col: *id }.into());
            }
        }
    }
    Ok(())
}

/// `sqrt(n / log n)` as the working scalar; errors below `n = 2` where the
/// logarithm vanishes.
fn log_scaling<T: Real>(n: usize) -> Result<T, LemmaError> {
    if n < 2 {
        return Err(CorrError::InsufficientSamples(n).into());
    }
    let nf = n as f64;
    Ok(T::of((nf / nf.ln()).sqrt()))
}

fn norms<T: Real>(s: &PairSample<T>) -> Result<(T, T), LemmaError> {
    let n1 = dot(&s.x1, &s.x1).sqrt();
    let n2 = dot(&s.x2, &s.x2).sqrt();
    if n1 <= T::zero() {
        return Err(CorrError::DegenerateColumn(0).into());
    }
    if n2 <= T::zero() {
        return Err(CorrError::DegenerateColumn(1).into());
    }
    Ok((n1, n2))
}

/// Self-normalized cross sum
/// `sqrt(n/log n) |sum_k x_{k,1} x_{k,2}| / (||x1|| ||x2||)`.
///
/// The law of the logarithm says this converges to 2 in probability along
/// i.i.d. pairs when the limit theory applies.
pub fn pair_self_normalized<T: Real>(s: &PairSample<T>) -> Result<T, LemmaError> {
    let (n1, n2) = norms(s)?;
    let scale: T = log_scaling(s.n())?;
    Ok(scale * dot(&s.x1, &s.x2).abs() / (n1 * n2))
}

/// Mean-product statistic
/// `n sqrt(n/log n) |mean(x1) mean(x2)| / (||x1|| ||x2||)`, the quantity
/// whose vanishing lets centered and uncentered coherence agree.
pub fn mean_product_stat<T: Real>(s: &PairSample<T>) -> Result<T, LemmaError> {
    let (n1, n2) = norms(s)?;
    let scale: T = log_scaling(s.n())?;
    let nf = T::of(s.n() as f64);
    let m1 = sum(&s.x1) / nf;
    let m2 = sum(&s.x2) / nf;
    Ok(nf * scale * (m1 * m2).abs() / (n1 * n2))
}

/// Symmetrization ratio `sum_k (x_k - x'_k)^2 / sum_k x_k^2` for the first
/// column and its independent copy.
///
/// Concentrates near 2; the supporting theory needs it to stay above any
/// fixed level below 2 with probability `1 - o(1/n)`.
pub fn symmetrized_ratio<T: Real>(s: &PairSample<T>) -> Result<T, LemmaError> {
    let x1p = s.x1p.as_ref().ok_or(LemmaError::MissingCopy)?;
    let denom = dot(&s.x1, &s.x1);
    if denom <= T::zero() {
        return Err(CorrError::DegenerateColumn(0).into());
    }
    let diff: Vec<T> = s.x1.iter().zip(x1p).map(|(a, b)| *a - *b).collect();
    Ok(dot(&diff, &diff) / denom)
}

/// The Lemma on single products: returns
/// `n^{1/4} max_j |x_{j,1} x_{j,2}| / (||x1|| ||x2||)` together with the
/// same expression built from the first entry only.
pub fn max_vs_single_product<T: Real>(s: &PairSample<T>) -> Result<(T, T), LemmaError> {
    let (n1, n2) = norms(s)?;
    let quarter = T::of((s.n() as f64).powf(0.25));
    let denom = n1 * n2;
    let mut max_prod = T::zero();
    for (a, b) in s.x1.iter().zip(&s.x2) {
        let v = (*a * *b).abs();
        if v > max_prod {
            max_prod = v;
        }
    }
    let single = (s.x1[0] * s.x2[0]).abs();
    Ok((quarter * max_prod / denom, quarter * single / denom))
}

/// Symmetrized normalized products: with `xh = x - x'`,
/// `V_j = xh_{j,1} xh_{j,2} / (||xh_1|| ||xh_2||)`; returns
/// `(max_j |V_j|, |sum_j V_j|)`.
///
/// The reflection inequality under test bounds the first by twice the tail
/// of the second: `P(max |V_j| > t) <= 2 P(|sum V_j| > t)`.
pub fn levy_terms<T: Real>(s: &PairSample<T>) -> Result<(T, T), LemmaError> {
    let x1p = s.x1p.as_ref().ok_or(LemmaError::MissingCopy)?;
    let x2p = s.x2p.as_ref().ok_or(LemmaError::MissingCopy)?;
    let h1: Vec<T> = s.x1.iter().zip(x1p).map(|(a, b)| *a - *b).collect();
    let h2: Vec<T> = s.x2.iter().zip(x2p).map(|(a, b)| *a - *b).collect();
    let n1 = dot(&h1, &h1).sqrt();
    let n2 = dot(&h2, &h2).sqrt();
    if n1 <= T::zero() {
        return Err(CorrError::DegenerateColumn(0).into());
    }
    if n2 <= T::zero() {
        return Err(CorrError::DegenerateColumn(1).into());
    }
    let denom = n1 * n2;
    let v: Vec<T> = h1.iter().zip(&h2).map(|(a, b)| *a * *b / denom).collect();
    let max_abs = v.iter().fold(T::zero(), |m, x| if x.abs() > m { x.abs() } else { m });
    let abs_sum = sum(&v).abs();
    Ok((max_abs, abs_sum))
}

/// Coherence over the disjoint pairs `(1,2), (3,4), ...` only; with an odd
/// number of columns the last one is ignored.
///
/// A subset of the full scan, so always bounded by the coherence; its limit
/// behavior distinguishes the full maximum from independent-block maxima.
pub fn disjoint_pair_max<T: Real>(m: &DataMatrix<T>) -> Result<T, LemmaError> {
    if m.p() < 2 {
        return Err(CorrError::InsufficientColumns(m.p()).into());
    }
    let mut best = T::of(-1.0);
    for i in 0..m.p() / 2 {
        let r = pearson_pair(m, 2 * i, 2 * i + 1)?.abs();
        if r > best {
            best = r;
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn finite_vec(len: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-100.0..100.0f64, len)
    }

    proptest! {
        #[test]
        fn triangle_inequality_for_levy(
            x1 in finite_vec(12), x2 in finite_vec(12),
            x1p in finite_vec(12), x2p in finite_vec(12),
        ) {
            let s = match PairSample::with_copies(x1, x2, x1p, x2p) {
                Ok(s) => s,
                Err(_) => return Ok(()),
            };
            match levy_terms(&s) {
                Ok((max_v, sum_v)) => {
                    prop_assert!(sum_v <= 12.0 * max_v + 1e-9);
                    prop_assert!((0.0..=1.0 + 1e-12).contains(&max_v));
                }
                Err(LemmaError::Corr(CorrError::DegenerateColumn(_))) => {}
                Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
            }
        }

        #[test]
        fn self_normalized_bounded_by_cauchy_schwarz(
            x1 in finite_vec(9), x2 in finite_vec(9),
        ) {
            let s = match PairSample::new(x1, x2) {
                Ok(s) => s,
                Err(_) => return Ok(()),
            };
            match pair_self_normalized(&s) {
                // |dot| <= ||x1|| ||x2||, so the stat is at most the scaling.
                Ok(v) => prop_assert!(v <= (9.0f64 / 9f64.ln()).sqrt() + 1e-9),
                Err(LemmaError::Corr(CorrError::DegenerateColumn(_))) => {}
                Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
            }
        }
    }
}
