//! Shared numeric primitives: deterministic summation, bisection, and
//! adaptive quadrature.
//!
//! Everything here is deliberately order-fixed. The statistic kernels must
//! produce bit-identical results for a given input regardless of block size
//! or thread count, so sums and dot products use a pairwise scheme whose
//! reduction tree depends only on the slice length.

use crate::scalar::Real;

// ---------------------------------------------------------------------------
// Deterministic summation
// ---------------------------------------------------------------------------

const PAIRWISE_BASE: usize = 32;

/// Dot product with pairwise (cascade) summation.
///
/// The reduction tree is a function of the length alone, so the result is
/// bit-identical across call sites, block decompositions, and thread counts,
/// with the usual `O(log n)` pairwise error growth instead of `O(n)`.
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    if a.len() <= PAIRWISE_BASE {
        return dot_base(a, b);
    }
    let mid = a.len() / 2;
    dot(&a[..mid], &b[..mid]) + dot(&a[mid..], &b[mid..])
}

#[inline]
fn dot_base<T: Real>(a: &[T], b: &[T]) -> T {
    let mut lanes = [T::zero(); 4];
    let mut chunks_a = a.chunks_exact(4);
    let mut chunks_b = b.chunks_exact(4);
    for (ca, cb) in (&mut chunks_a).zip(&mut chunks_b) {
        for k in 0..4 {
            lanes[k] = lanes[k] + ca[k] * cb[k];
        }
    }
    let mut tail = T::zero();
    for (x, y) in chunks_a.remainder().iter().zip(chunks_b.remainder()) {
        tail += *x * *y;
    }
    (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]) + tail
}

/// Pairwise sum with the same fixed reduction tree as [`dot`].
pub fn sum<T: Real>(xs: &[T]) -> T {
    if xs.len() <= PAIRWISE_BASE {
        let mut lanes = [T::zero(); 4];
        let mut chunks = xs.chunks_exact(4);
        for c in &mut chunks {
            for k in 0..4 {
                lanes[k] = lanes[k] + c[k];
            }
        }
        let mut tail = T::zero();
        for x in chunks.remainder() {
            tail += *x;
        }
        return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]) + tail;
    }
    let mid = xs.len() / 2;
    sum(&xs[..mid]) + sum(&xs[mid..])
}

// ---------------------------------------------------------------------------
// Bisection
// ---------------------------------------------------------------------------

/// Smallest `x` in `[lo, hi]` with `f(x) <= target`, for nonincreasing `f`.
///
/// Requires `f(hi) <= target`; if `f(lo) <= target` already, returns `lo`.
/// Resolves `x` to an absolute tolerance of `tol * max(1, |x|)`.
pub fn bisect_nonincreasing(f: impl Fn(f64) -> f64, target: f64, lo: f64, hi: f64, tol: f64) -> f64 {
    if f(lo) <= target {
        return lo;
    }
    let (mut lo, mut hi) = (lo, hi);
    // Invariant: f(lo) > target >= f(hi).
    while hi - lo > tol * lo.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // interval no longer splittable in f64
        }
        if f(mid) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Doubles `hi` until `f(hi) <= target`, returning the bracket end.
///
/// Gives up (returns `None`) once `hi` exceeds `max_hi`, which callers treat
/// as "the survival function does not reach `target`" (a modelling error).
pub fn expand_upper(f: impl Fn(f64) -> f64, target: f64, start: f64, max_hi: f64) -> Option<f64> {
    let mut hi = start.max(1e-300);
    while f(hi) > target {
        hi *= 2.0;
        if hi > max_hi {
            return None;
        }
    }
    Some(hi)
}

// ---------------------------------------------------------------------------
// Adaptive quadrature
// ---------------------------------------------------------------------------

/// Result of an adaptive quadrature pass: value plus an error estimate.
#[derive(Debug, Clone, Copy)]
pub struct Quad {
    pub value: f64,
    pub abs_error: f64,
}

/// Adaptive Simpson integration of `f` over `[a, b]`.
///
/// `seeds` lists interior points where the integrand is known to be
/// non-smooth (atom boundaries of a discrete law, say); the interval is
/// pre-split there so the refinement does not have to discover the kinks.
/// The effective tolerance is `max(abs_tol, rel_tol * |rough estimate|)`.
pub fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    seeds: &[f64],
) -> Quad {
    if !(b > a) {
        return Quad { value: 0.0, abs_error: 0.0 };
    }
    let mut cuts = vec![a];
    for &s in seeds {
        if s > a && s < b {
            cuts.push(s);
        }
    }
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    // Rough whole-domain estimate to give the relative tolerance a scale.
    let mut rough = 0.0;
    for w in cuts.windows(2) {
        rough += simpson(f, w[0], w[1], f(w[0]), f(0.5 * (w[0] + w[1])), f(w[1])).0;
    }
    let tol = abs_tol.max(rel_tol * rough.abs());

    let mut value = 0.0;
    let mut err = 0.0;
    let segments = cuts.len() - 1;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let fl = f(lo);
        let fm = f(0.5 * (lo + hi));
        let fh = f(hi);
        let (s, m) = simpson(f, lo, hi, fl, fm, fh);
        let q = refine(f, lo, hi, fl, fm, fh, s, m, tol * (hi - lo) / (b - a) / segments as f64, 48);
        value += q.value;
        err += q.abs_error;
    }
    Quad { value, abs_error: err }
}

/// Simpson rule over `[a, b]`; returns the estimate and the midpoint used.
#[inline]
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> (f64, f64) {
    let _ = f;
    let m = 0.5 * (a + b);
    ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m)
}

#[allow(clippy::too_many_arguments)]
fn refine(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    m: f64,
    tol: f64,
    depth: u32,
) -> Quad {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol || (b - a) < 1e-300 {
        return Quad { value: left + right + delta / 15.0, abs_error: (delta / 15.0).abs() };
    }
    let lq = refine(f, a, m, fa, flm, fm, left, lm, 0.5 * tol, depth - 1);
    let rq = refine(f, m, b, fm, frm, fb, right, rm, 0.5 * tol, depth - 1);
    Quad { value: lq.value + rq.value, abs_error: lq.abs_error + rq.abs_error }
}

/// Integral of a decaying nonnegative `f` over `[x0, inf)`.
///
/// Integrates geometrically widening panels until their contribution falls
/// below the tolerance. Returns `None` when the panel contributions fail to
/// decay (a divergent tail such as a moment at or past the tail index).
pub fn integrate_tail(f: &dyn Fn(f64) -> f64, x0: f64, abs_tol: f64, rel_tol: f64) -> Option<Quad> {
    let mut total = 0.0;
    let mut err = 0.0;
    let mut lo = x0;
    let mut width = x0.abs().max(1.0);
    let mut flat_panels = 0u32;
    let mut last: Option<f64> = None;
    for _ in 0..220 {
        let hi = lo + width;
        let q = adaptive_simpson(f, lo, hi, abs_tol * 0.01, rel_tol * 0.1, &[]);
        total += q.value;
        err += q.abs_error;
        let done = q.value.abs() < abs_tol.max(rel_tol * total.abs()) * 0.01;
        if done {
            return Some(Quad { value: total, abs_error: err + q.value.abs() });
        }
        if let Some(prev) = last {
            // Panels double in width; a convergent integral of a regularly
            // decaying tail must see contributions shrink eventually.
            if q.value >= prev * 0.999 {
                flat_panels += 1;
                if flat_panels >= 12 {
                    return None;
                }
            } else {
                flat_panels = 0;
            }
        }
        last = Some(q.value);
        lo = hi;
        width *= 2.0;
    }
    None
}

// ---------------------------------------------------------------------------
