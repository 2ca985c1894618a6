//! Column standardization and the coherence kernel.
//!
//! The coherence of an `n x p` data matrix is the largest absolute
//! off-diagonal entry of its sample correlation matrix,
//! `L = max_{i<j} |r_ij|`. Once columns are centered and scaled to unit
//! norm, every `r_ij` is a plain dot product, so the kernel reduces to a
//! blocked scan over column pairs with a deterministic max reduction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{dot, sum};
use crate::scalar::Real;

/// Default column block width for the pairwise kernel.
///
/// Two blocks of 64 columns cover a few hundred KiB for typical `n`, which
/// keeps both operands resident in L2 while a block pair is scanned.
pub const DEFAULT_BLOCK: usize = 64;

#[derive(Debug, Error, PartialEq)]
pub enum CorrError {
    #[error("need at least 2 samples, got {0}")]
    InsufficientSamples(usize),
    #[error("need at least 2 columns, got {0}")]
    InsufficientColumns(usize),
    #[error("column {0} has zero centered variance")]
    DegenerateColumn(usize),
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: {0} values for {1} x {2}")]
    ShapeMismatch(usize, usize, usize),
    #[error("centering constant requires p >= 2, got {0}")]
    InvalidP(usize),
    #[error("coherence must lie in [0, 1], got {0}")]
    InvalidStatistic(f64),
}

// ---------------------------------------------------------------------------
// Data matrix
// ---------------------------------------------------------------------------

/// Column-major `n x p` data matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix<T> {
    n: usize,
    p: usize,
    values: Vec<T>,
}

impl<T: Real> DataMatrix<T> {
    /// Builds a matrix from column-major storage, validating shape and
    /// finiteness.
    pub fn new(n: usize, p: usize, values: Vec<T>) -> Result<Self, CorrError> {
        if values.len() != n * p {
            return Err(CorrError::ShapeMismatch(values.len(), n, p));
        }
        for (idx, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(CorrError::NonFinite { row: idx % n, col: idx / n });
            }
        }
        Ok(Self { n, p, values })
    }

    /// Builds a matrix from equal-length columns.
    pub fn from_columns(cols: &[Vec<T>]) -> Result<Self, CorrError> {
        let p = cols.len();
        let n = cols.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(n * p);
        for (j, c) in cols.iter().enumerate() {
            if c.len() != n {
                return Err(CorrError::ShapeMismatch(c.len(), n, j));
            }
            values.extend_from_slice(c);
        }
        Self::new(n, p, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn column(&self, j: usize) -> &[T] {
        &self.values[j * self.n..(j + 1) * self.n]
    }

    /// Copy of the matrix without the given (sorted, deduplicated) columns.
    pub fn drop_columns(&self, drop: &[usize]) -> DataMatrix<T> {
        let mut values = Vec::with_capacity(self.n * (self.p - drop.len()));
        let mut kept = 0;
        for j in 0..self.p {
            if !drop.contains(&j) {
                values.extend_from_slice(self.column(j));
                kept += 1;
            }
        }
        DataMatrix { n: self.n, p: kept, values }
    }
}

// ---------------------------------------------------------------------------
// Standardization
// ---------------------------------------------------------------------------

/// Matrix whose non-degenerate columns are centered and scaled to unit
/// Euclidean norm. Degenerate columns (zero centered variance) are stored as
/// zeros and listed in `degenerate`; consumers decide the policy.
#[derive(Debug, Clone)]
pub struct Standardized<T> {
    n: usize,
    p: usize,
    values: Vec<T>,
    degenerate: Vec<usize>,
}

impl<T: Real> Standardized<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn column(&self, j: usize) -> &[T] {
        &self.values[j * self.n..(j + 1) * self.n]
    }

    /// Indices of columns with zero centered variance, ascending.
    pub fn degenerate_columns(&self) -> &[usize] {
        &self.degenerate
    }
}

/// Centers every column and scales it to unit norm.
///
/// With two samples a non-degenerate centered column is exactly
/// `+-(d, -d)`, so it standardizes to `+-(1, -1)/sqrt(2)`; that case is
/// written out directly, which keeps the two-sample coherence exactly 1.
pub fn standardize_columns<T: Real>(m: &DataMatrix<T>) -> Result<Standardized<T>, CorrError> {
    if m.n < 2 {
        return Err(CorrError::InsufficientSamples(m.n));
    }
    let inv_n = T::one() / T::of(m.n as f64);
    let mut values = vec![T::zero(); m.n * m.p];
    let mut degenerate = Vec::new();
    for j in 0..m.p {
        let col = m.column(j);
        let out = &mut values[j * m.n..(j + 1) * m.n];
        let mean = sum(col) * inv_n;
        for (o, &x) in out.iter_mut().zip(col) {
            *o = x - mean;
        }
        let ss = dot(out, out);
        if ss == T::zero() {
            degenerate.push(j);
            continue;
        }
        if m.n == 2 {
            let half = T::of(std::f64::consts::FRAC_1_SQRT_2);
            let s = if col[0] > col[1] { half } else { -half };
            out[0] = s;
            out[1] = -s;
            continue;
        }
        let inv_norm = T::one() / ss.sqrt();
        for o in out.iter_mut() {
            *o = *o * inv_norm;
        }
    }
    Ok(Standardized { n: m.n, p: m.p, values, degenerate })
}

// ---------------------------------------------------------------------------
// Pairwise statistics
// ---------------------------------------------------------------------------

/// Pearson correlation of columns `i` and `j`, clamped to `[-1, 1]`.
pub fn pearson_pair<T: Real>(m: &DataMatrix<T>, i: usize, j: usize) -> Result<T, CorrError> {
    let z = standardize_columns(m)?;
    for &d in z.degenerate_columns() {
        if d == i || d == j {
            return Err(CorrError::DegenerateColumn(d));
        }
    }
    Ok(clamp_corr(dot(z.column(i), z.column(j))))
}

#[inline]
fn clamp_corr<T: Real>(r: T) -> T {
    r.min(T::one()).max(-T::one())
}

/// Candidate for the running maximum: value first, then the lexicographically
/// smallest `(i, j)` among exact ties. This is a total order, so any
/// reduction tree (and hence any thread schedule) yields the same winner.
#[derive(Debug, Clone, Copy)]
struct Best<T> {
    value: T,
    pair: (usize, usize),
}

impl<T: Real> Best<T> {
    fn seed() -> Self {
        Best { value: -T::one(), pair: (usize::MAX, usize::MAX) }
    }

    fn merge(self, other: Self) -> Self {
        if other.value > self.value || (other.value == self.value && other.pair < self.pair) {
            other
        } else {
            self
        }
    }
}

/// Coherence `L = max_{i<j} |z_i . z_j|` with its argmax pair (0-based).
///
/// The scan is blocked over column pairs and runs in parallel; because each
/// dot product is computed over the full column with a fixed summation tree
/// and the reduction is a total-order max, the result does not depend on
/// `block` or on the number of worker threads.
pub fn largest_offdiag<T: Real>(
    z: &Standardized<T>,
    block: usize,
) -> Result<(T, (usize, usize)), CorrError> {
    if let Some(&d) = z.degenerate_columns().first() {
        return Err(CorrError::DegenerateColumn(d));
    }
    if z.p < 2 {
        return Err(CorrError::InsufficientColumns(z.p));
    }
    let b = block.max(1);
    let nb = z.p.div_ceil(b);
    let block_pairs: Vec<(usize, usize)> =
        (0..nb).flat_map(|bi| (bi..nb).map(move |bj| (bi, bj))).collect();

    let best = block_pairs
        .par_iter()
        .map(|&(bi, bj)| {
            let mut local = Best::seed();
            for i in bi * b..((bi + 1) * b).min(z.p) {
                let zi = z.column(i);
                let j_lo = (bj * b).max(i + 1);
                for j in j_lo..((bj + 1) * b).min(z.p) {
                    let v = clamp_corr(dot(zi, z.column(j))).abs();
                    local = local.merge(Best { value: v, pair: (i, j) });
                }
            }
            local
        })
        .reduce(Best::seed, Best::merge);

    Ok((best.value, best.pair))
}

/// Textbook `O(n p^2)` coherence scan, kept as an oracle for the blocked
/// kernel: plain double loop, no blocking, no parallelism. Shares the
/// dot-product reduction, so on data with exact ties (discrete laws
/// produce duplicate columns) the argmax agrees bit for bit and only the
/// traversal order is under test.
pub fn largest_offdiag_naive<T: Real>(
    z: &Standardized<T>,
) -> Result<(T, (usize, usize)), CorrError> {
    if let Some(&d) = z.degenerate_columns().first() {
        return Err(CorrError::DegenerateColumn(d));
    }
    if z.p < 2 {
        return Err(CorrError::InsufficientColumns(z.p));
    }
    let mut best = Best::seed();
    for i in 0..z.p - 1 {
        for j in i + 1..z.p {
            let v = clamp_corr(dot(z.column(i), z.column(j))).abs();
            best = best.merge(Best { value: v, pair: (i, j) });
        }
    }
    Ok((best.value, best.pair))
}

// ---------------------------------------------------------------------------
// Test statistic
// ---------------------------------------------------------------------------

/// Centering constant `a(p) = 4 log p - log log p`.
pub fn centering_constant(p: usize) -> Result<f64, CorrError> {
    if p < 2 {
        return Err(CorrError::InvalidP(p));
    }
    let lp = (p as f64).ln();
    Ok(4.0 * lp - lp.ln())
}

/// The centered statistic `t = n L^2 - a(p)` and the law-of-the-logarithm
/// scaling `sqrt(n / log n) L` for a coherence value `l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestStatistic {
    pub t: f64,
    pub weak_law: f64,
}

pub fn test_statistic<T: Real>(n: usize, l: T, p: usize) -> Result<TestStatistic, CorrError> {
    if n < 2 {
        return Err(CorrError::InsufficientSamples(n));
    }
    let l = l.widen();
    if !(0.0..=1.0).contains(&l) {
        return Err(CorrError::InvalidStatistic(l));
    }
    let a = centering_constant(p)?;
    let nf = n as f64;
    Ok(TestStatistic { t: nf * l * l - a, weak_law: (nf / nf.ln()).sqrt() * l })
}

/// Largest absolute pairwise cross product after shifting every entry by a
/// common constant `c`: `max_{i<j} |sum_k (x_ki - c)(x_kj - c)|`.
///
/// Unlike the coherence this is not scale-free; it is the raw object whose
/// concentration drives the correlation results, exposed for diagnostics.
pub fn max_shifted_cross<T: Real>(m: &DataMatrix<T>, c: T) -> Result<T, CorrError> {
    if m.n < 1 {
        return Err(CorrError::InsufficientSamples(m.n));
    }
    if m.p < 2 {
        return Err(CorrError::InsufficientColumns(m.p));
    }
    let shifted: Vec<T> = m.values.iter().map(|&x| x - c).collect();
    let col = |j: usize| &shifted[j * m.n..(j + 1) * m.n];
    let mut best = T::zero();
    for i in 0..m.p - 1 {
        for j in i + 1..m.p {
            best = best.max(dot(col(i), col(j)).abs());
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(cols: &[&[f64]]) -> DataMatrix<f64> {
        DataMatrix::from_columns(&cols.iter().map(|c| c.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    // ---- construction and validation ----

    #[test]
    fn rejects_non_finite_and_bad_shape() {
        let err = DataMatrix::new(2, 1, vec![1.0, f64::NAN]).unwrap_err();
        assert_eq!(err, CorrError::NonFinite { row: 1, col: 0 });
        let err = DataMatrix::new(2, 2, vec![1.0, 2.0, 3.0]).unwrap_err();
        assert_eq!(err, CorrError::ShapeMismatch(3, 2, 2));
    }

    #[test]
    fn standardize_requires_two_samples() {
        let m = DataMatrix::new(1, 2, vec![1.0, 2.0]).unwrap();
        assert_eq!(standardize_columns(&m).unwrap_err(), CorrError::InsufficientSamples(1));
    }

    // ---- standardization ----

    #[test]
    fn standardizes_the_frozen_example_column() {
        // (1, 2, 4): mean 7/3, residuals (-4, -1, 5)/3, norm sqrt(42)/3.
        let m = matrix(&[&[1.0, 2.0, 4.0]]);
        let z = standardize_columns(&m).unwrap();
        let s42 = 42f64.sqrt();
        let expect = [-4.0 / s42, -1.0 / s42, 5.0 / s42];
        for (got, want) in z.column(0).iter().zip(expect) {
            assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        }
    }

    #[test]
    fn flags_constant_columns_as_degenerate() {
        let m = matrix(&[&[3.0, 3.0, 3.0], &[1.0, 2.0, 3.0]]);
        let z = standardize_columns(&m).unwrap();
        assert_eq!(z.degenerate_columns(), &[0]);
        assert!(z.column(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_norm_after_standardization() {
        let m = matrix(&[&[0.3, -1.2, 5.0, 2.2, 0.0]]);
        let z = standardize_columns(&m).unwrap();
        let ss: f64 = z.column(0).iter().map(|v| v * v).sum();
        assert!((ss - 1.0).abs() < 1e-12);
        let mean: f64 = z.column(0).iter().sum();
        assert!(mean.abs() < 1e-12);
    }

    // ---- pearson ----

    #[test]
    fn pearson_matches_the_frozen_example() {
        let m = matrix(&[&[1.0, 2.0, 4.0], &[1.0, 3.0, 5.0]]);
        let r = pearson_pair(&m, 0, 1).unwrap();
        assert!((r - 9.0 / 84f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn pearson_is_affine_invariant() {
        let m = matrix(&[&[1.0, 2.0, 4.0, -1.0], &[0.5, -2.0, 1.0, 3.0]]);
        let scaled: Vec<f64> = m.column(0).iter().map(|x| -3.0 * x + 11.0).collect();
        let m2 = matrix(&[&scaled, m.column(1)]);
        let r1 = pearson_pair(&m, 0, 1).unwrap();
        let r2 = pearson_pair(&m2, 0, 1).unwrap();
        assert!((r1 + r2).abs() < 1e-12, "sign flips, magnitude stays");
    }

    #[test]
    fn pearson_rejects_degenerate_operands() {
        let m = matrix(&[&[1.0, 1.0, 1.0], &[1.0, 3.0, 5.0]]);
        assert_eq!(pearson_pair(&m, 0, 1).unwrap_err(), CorrError::DegenerateColumn(0));
    }

    #[test]
    fn two_sample_pairs_are_perfectly_correlated() {
        let m = matrix(&[&[0.1, 0.3], &[5.0, -2.0], &[1e8, 1e8 + 3.0]]);
        let z = standardize_columns(&m).unwrap();
        let (l, _) = largest_offdiag(&z, DEFAULT_BLOCK).unwrap();
        assert_eq!(l, 1.0, "coherence is exactly one with two samples");
        assert_eq!(pearson_pair(&m, 0, 1).unwrap().abs(), 1.0);
    }

    // ---- coherence kernel ----

    #[test]
    fn coherence_of_a_known_three_column_matrix() {
        let m = matrix(&[&[1.0, 2.0, 4.0], &[1.0, 3.0, 5.0], &[2.0, -1.0, 0.5]]);
        let z = standardize_columns(&m).unwrap();
        let (l, pair) = largest_offdiag(&z, DEFAULT_BLOCK).unwrap();
        assert_eq!(pair, (0, 1));
        assert!((l - 9.0 / 84f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn ties_resolve_to_the_lexicographically_smallest_pair() {
        // Copies and sign flips of one column: every pairwise dot product is
        // the same bit pattern up to sign (IEEE negation is exact), so all
        // six pairs tie exactly and the scan must settle on (0, 1).
        let c = [1.0, 2.0, 4.0];
        let neg = [-1.0, -2.0, -4.0];
        let m = matrix(&[&c, &c, &neg, &c]);
        let z = standardize_columns(&m).unwrap();
        for block in [1, 2, 64] {
            let (l, pair) = largest_offdiag(&z, block).unwrap();
            assert_eq!(pair, (0, 1), "block {block}");
            assert!((l - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn blocked_kernel_is_block_size_invariant() {
        let m = deterministic_matrix(23, 17);
        let z = standardize_columns(&m).unwrap();
        let reference = largest_offdiag(&z, 64).unwrap();
        for block in [1, 2, 3, 5, 16, 17, 100] {
            let got = largest_offdiag(&z, block).unwrap();
            assert_eq!(got.1, reference.1, "block {block}");
            assert!((got.0 - reference.0).abs() < 1e-12, "block {block}");
        }
    }

    #[test]
    fn blocked_kernel_matches_the_naive_oracle() {
        for (n, p) in [(5, 7), (12, 31), (40, 9)] {
            let m = deterministic_matrix(n, p);
            let z = standardize_columns(&m).unwrap();
            let blocked = largest_offdiag(&z, 8).unwrap();
            let naive = largest_offdiag_naive(&z).unwrap();
            assert_eq!(blocked.1, naive.1);
            assert!((blocked.0 - naive.0).abs() < 1e-12);
        }
    }

    /// Seedless pseudo-data so unit tests stay dependency-free here.
    fn deterministic_matrix(n: usize, p: usize) -> DataMatrix<f64> {
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let values: Vec<f64> = (0..n * p).map(|_| next()).collect();
        DataMatrix::new(n, p, values).unwrap()
    }

    // ---- statistic ----

    #[test]
    fn centering_constant_frozen_values() {
        assert!((centering_constant(2).unwrap() - 3.1391016428214455).abs() < 1e-12);
        assert!((centering_constant(10).unwrap() - 8.376307926728227).abs() < 1e-12);
        assert_eq!(centering_constant(1).unwrap_err(), CorrError::InvalidP(1));
        // Near 4e - 1 at p = e^e where the two logs balance.
        assert!((centering_constant(15).unwrap() - 9.836).abs() < 5e-3);
    }

    #[test]
    fn test_statistic_frozen_value() {
        let s = test_statistic(100, 0.5, 10).unwrap();
        assert!((s.t - 16.623692073271773).abs() < 1e-12);
        assert!((s.weak_law - (100f64 / 100f64.ln()).sqrt() * 0.5).abs() < 1e-14);
    }

    #[test]
    fn test_statistic_validates_range() {
        assert_eq!(
            test_statistic(100, 1.5, 10).unwrap_err(),
            CorrError::InvalidStatistic(1.5)
        );
        assert!(test_statistic(1, 0.5, 10).is_err());
    }

    // ---- shifted cross products ----

    #[test]
    fn shifted_cross_max_hand_value() {
        // Columns (1,2), (3,5), c = 1: shifted (0,1) and (2,4), product 4.
        let m = matrix(&[&[1.0, 2.0], &[3.0, 5.0]]);
        assert_eq!(max_shifted_cross(&m, 1.0).unwrap(), 4.0);
        // c = 0 gives the raw cross moment 3 + 10.
        assert_eq!(max_shifted_cross(&m, 0.0).unwrap(), 13.0);
    }

    #[test]
    fn f32_instantiation_agrees_with_f64() {
        let m64 = deterministic_matrix(30, 6);
        let vals32: Vec<f32> = (0..6)
            .flat_map(|j| m64.column(j).iter().map(|&v| v as f32))
            .collect();
        let m32 = DataMatrix::new(30, 6, vals32).unwrap();
        let l64 = largest_offdiag(&standardize_columns(&m64).unwrap(), 4).unwrap();
        let l32 = largest_offdiag(&standardize_columns(&m32).unwrap(), 4).unwrap();
        assert_eq!(l64.1, l32.1);
        assert!((l64.0 - l32.0 as f64).abs() < 1e-5);
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn column(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-1e3..1e3f64, n)
    }

    proptest! {
        #[test]
        fn coherence_is_within_unit_range(cols in proptest::collection::vec(column(8), 2..6)) {
            let m = DataMatrix::from_columns(&cols).unwrap();
            let z = standardize_columns(&m).unwrap();
            if z.degenerate_columns().is_empty() {
                let (l, (i, j)) = largest_offdiag(&z, 3).unwrap();
                prop_assert!((0.0..=1.0).contains(&l));
                prop_assert!(i < j && j < m.p());
            }
        }

        #[test]
        fn coherence_is_location_scale_invariant(
            col_a in column(12),
            col_b in column(12),
            col_c in column(12),
            scale in prop_oneof![-50.0..-0.1f64, 0.1..50.0f64],
            shift in -100.0..100.0f64,
        ) {
            let m1 = DataMatrix::from_columns(&[col_a.clone(), col_b.clone(), col_c.clone()]).unwrap();
            let moved: Vec<f64> = col_b.iter().map(|x| scale * x + shift).collect();
            let m2 = DataMatrix::from_columns(&[col_a, moved, col_c]).unwrap();
            let z1 = standardize_columns(&m1).unwrap();
            let z2 = standardize_columns(&m2).unwrap();
            if z1.degenerate_columns().is_empty() && z2.degenerate_columns().is_empty() {
                let (l1, p1) = largest_offdiag(&z1, 2).unwrap();
                let (l2, p2) = largest_offdiag(&z2, 2).unwrap();
                prop_assert!((l1 - l2).abs() < 1e-9, "{l1} vs {l2}");
                prop_assert_eq!(p1, p2);
            }
        }

        #[test]
        fn blocked_equals_naive_on_random_input(
            cols in proptest::collection::vec(column(6), 2..8),
            block in 1usize..10,
        ) {
            let m = DataMatrix::from_columns(&cols).unwrap();
            let z = standardize_columns(&m).unwrap();
            if z.degenerate_columns().is_empty() {
                let a = largest_offdiag(&z, block).unwrap();
                let b = largest_offdiag_naive(&z).unwrap();
                prop_assert!((a.0 - b.0).abs() < 1e-12);
                prop_assert_eq!(a.1, b.1);
            }
        }
    }
}
