//! Moran-type equations: `Σ ρ_j^s = 1` for the dimension, its truncations,
//! and `Σ P_j² ρ_j^{-β} = 1` for the correlation exponent.
//!
//! Roots are found by bisection where each comparison against 1 is decided
//! on a certified enclosure of the series. The bracket of a result therefore
//! satisfies `Φ(lo) ≥ 1 ≥ Φ(hi)` rigorously, up to the outward rounding pad.

use crate::error::{Error, Result};
use crate::ifs::sequences::{RatioKind, RatioSequence, WeightSequence};
use crate::series::{Interval, Series};

pub const DEFAULT_TOL: f64 = 1e-10;

/// Offset above the convergence abscissa where the bracket search starts.
const ABSCISSA_OFFSET: f64 = 1e-6;

/// How the series was cut off.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Truncation {
    /// Finite sum over the first `m` terms (finite families or explicit truncation).
    Head(usize),
    /// Exact closed form for a geometric remainder.
    ClosedFormTail,
    /// Integral-comparison or ratio-test bounds for the remainder.
    BoundedTail,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DimensionResult {
    pub exponent: f64,
    pub bracket: Interval,
    pub truncation: Truncation,
    /// Bound on `|Φ(exponent) − 1|`.
    pub residual: f64,
}

fn truncation_of(series: &Series) -> Truncation {
    use crate::series::Tail;
    match series.tail() {
        Tail::None => Truncation::Head(series.head_len()),
        Tail::Geometric { .. } => Truncation::ClosedFormTail,
        Tail::PowerGeometric { .. } => Truncation::BoundedTail,
    }
}

/// Certified enclosure of `Φ(s) = Σ ρ_j^s` of width at most `tol` where the
/// tail bounds allow it.
pub fn phi(ratios: &RatioSequence, s: f64, tol: f64) -> Result<Interval> {
    if !(s > ratios.abscissa()) {
        return Err(Error::Divergent {
            exponent: s,
            abscissa: ratios.abscissa(),
        });
    }
    Ok(ratios.series().powf(s).sum(tol))
}

#[derive(Clone, Copy, PartialEq)]
enum Side {
    Above,
    Below,
    Undecided,
}

fn side(iv: Interval) -> Side {
    if iv.lo > 1.0 {
        Side::Above
    } else if iv.hi < 1.0 {
        Side::Below
    } else {
        Side::Undecided
    }
}

/// Finds the root of a decreasing (`increasing = false`) or increasing
/// family `x ↦ Σ_j a_j(x)` crossing 1, given a bracket whose ends are
/// already decided on the correct sides.
fn bisect<F>(mut lo: f64, mut hi: f64, tol: f64, increasing: bool, series_at: F) -> (Interval, f64)
where
    F: Fn(f64) -> Series,
{
    // `left` is the side of 1 on which Φ(lo) lies.
    let (left, right) = if increasing {
        (Side::Below, Side::Above)
    } else {
        (Side::Above, Side::Below)
    };
    let classify = |x: f64| side(series_at(x).decide(1.0));
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match classify(mid) {
            s if s == left => lo = mid,
            s if s == right => hi = mid,
            _ => {
                // Inside the zone where rounding hides the sign: shrink each
                // end toward the zone separately.
                let (mut a, mut b) = (lo, mid);
                while b - a > tol / 4.0 {
                    let m = 0.5 * (a + b);
                    if m <= a || m >= b {
                        break;
                    }
                    if classify(m) == left {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                let (mut c, mut d) = (mid, hi);
                while d - c > tol / 4.0 {
                    let m = 0.5 * (c + d);
                    if m <= c || m >= d {
                        break;
                    }
                    if classify(m) == right {
                        d = m;
                    } else {
                        c = m;
                    }
                }
                lo = a;
                hi = d;
                break;
            }
        }
    }
    let x = 0.5 * (lo + hi);
    let residual = series_at(x).sum(0.0).max_deviation(1.0);
    (Interval::new(lo, hi), residual)
}

fn solve_decreasing(series: &Series, abscissa: f64, tol: f64) -> Result<DimensionResult> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let at = |s: f64| series.powf(s);
    let mut lo = abscissa + ABSCISSA_OFFSET;
    let start = at(lo).decide(1.0);
    match side(start) {
        Side::Above => {}
        Side::Below => {
            let closer = abscissa + ABSCISSA_OFFSET * 1e-6;
            let iv = at(closer).decide(1.0);
            if side(iv) != Side::Above {
                return Err(Error::NoSolution(format!(
                    "Σ ρ_j^s stays below 1 above the abscissa {abscissa}; sup found ≈ {}",
                    iv.hi
                )));
            }
            lo = closer;
        }
        Side::Undecided => {
            return Ok(DimensionResult {
                exponent: lo,
                bracket: Interval::new(abscissa, lo),
                truncation: truncation_of(series),
                residual: start.max_deviation(1.0),
            })
        }
    }
    let mut hi = (2.0 * lo).max(1.0);
    while side(at(hi).decide(1.0)) != Side::Below {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::NoSolution("Σ ρ_j^s does not fall below 1".into()));
        }
    }
    let (bracket, residual) = bisect(lo, hi, tol, false, at);
    Ok(DimensionResult {
        exponent: bracket.mid(),
        bracket,
        truncation: truncation_of(series),
        residual,
    })
}

/// Solves `Σ_j ρ_j^s = 1`.
pub fn solve_moran(ratios: &RatioSequence, tol: f64) -> Result<DimensionResult> {
    solve_decreasing(&ratios.series(), ratios.abscissa(), tol)
}

/// Solves the truncated equation `Σ_{j≤m} ρ_j^s = 1`.
pub fn solve_truncated(ratios: &RatioSequence, m: usize, tol: f64) -> Result<DimensionResult> {
    let m = ratios.len().map_or(m, |len| len.min(m));
    if m < 2 {
        return Err(Error::NoSolution(
            "a single ratio below 1 never solves ρ^s = 1".into(),
        ));
    }
    let head = ratios.series().truncate(m);
    let mut out = solve_decreasing(&head, 0.0, tol)?;
    out.truncation = Truncation::Head(m);
    Ok(out)
}

/// The series `Ψ(β) = Σ P_j² ρ_j^{-β}`.
pub(crate) fn psi_series(ratios: &RatioSequence, weights: &WeightSequence, beta: f64) -> Series {
    weights.series().powf(2.0).mul(&ratios.series().powf(-beta))
}

/// Certified enclosure of `Ψ(β)`.
pub fn psi(ratios: &RatioSequence, weights: &WeightSequence, beta: f64, tol: f64) -> Interval {
    let series = psi_series(ratios, weights, beta);
    if !series.converges() {
        return Interval::new(0.0, f64::INFINITY);
    }
    series.sum(tol)
}

/// Supremum of the `β` for which `Ψ(β)` converges (infinite for finite families).
pub fn beta_abscissa(ratios: &RatioSequence, weights: &WeightSequence) -> f64 {
    let conv = |b: f64| psi_series(ratios, weights, b).converges();
    let mut hi = 1.0;
    while conv(hi) {
        hi *= 2.0;
        if hi > 1e6 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if conv(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Solves `Σ_j P_j² ρ_j^{-β} = 1`.
pub fn solve_beta(
    ratios: &RatioSequence,
    weights: &WeightSequence,
    tol: f64,
) -> Result<DimensionResult> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let at = |b: f64| psi_series(ratios, weights, b);
    let start = at(0.0).decide(1.0);
    if side(start) != Side::Below {
        return Err(Error::NoFiniteBeta(format!(
            "Σ P_j² = {} is not below 1",
            start.mid()
        )));
    }
    let beta_c = beta_abscissa(ratios, weights);
    let mut lo = 0.0;
    let mut hi = if beta_c.is_finite() {
        beta_c * 0.5
    } else {
        1.0
    };
    loop {
        match side(at(hi).decide(1.0)) {
            Side::Above => break,
            Side::Below => {
                lo = hi;
                if beta_c.is_finite() {
                    let gap = beta_c - hi;
                    if gap < 1e-12 * beta_c.max(1.0) {
                        return Err(Error::NoFiniteBeta(format!(
                            "Ψ stays below 1 up to the divergence point β_c = {beta_c}"
                        )));
                    }
                    hi = beta_c - 0.5 * gap;
                } else {
                    hi *= 2.0;
                    if hi > 1e6 {
                        return Err(Error::NoFiniteBeta("Ψ does not reach 1".into()));
                    }
                }
            }
            Side::Undecided => {
                // `hi` lies in the rounding zone around the root; pull back.
                let (bracket, residual) = bisect(lo, hi + tol, tol, true, at);
                return Ok(DimensionResult {
                    exponent: bracket.mid(),
                    bracket,
                    truncation: truncation_of(&at(0.0)),
                    residual,
                });
            }
        }
    }
    let (bracket, residual) = bisect(lo, hi, tol, true, at);
    Ok(DimensionResult {
        exponent: bracket.mid(),
        bracket,
        truncation: truncation_of(&at(0.0)),
        residual,
    })
}

/// Dimension bounds for families of non-similar contractions with upper
/// Lipschitz constants `c_j` and lower ones `b_j`: returns `(min{d, l}, u)`
/// where `Σ b_j^l = 1` and `Σ c_j^u = 1`.
pub fn dimension_bounds_nonsimilar(
    upper_lip: &RatioSequence,
    lower_lip: &RatioSequence,
    d: usize,
    tol: f64,
) -> Result<(f64, f64)> {
    if upper_lip.len() != lower_lip.len() {
        return Err(Error::invalid("Lipschitz sequences differ in length"));
    }
    let checked = upper_lip.len().unwrap_or(4096);
    for j in 1..=checked {
        let (b, c) = (lower_lip.ratio(j).unwrap(), upper_lip.ratio(j).unwrap());
        if b > c {
            return Err(Error::invalid(format!(
                "lower constant b_{j} = {b} exceeds upper c_{j} = {c}"
            )));
        }
    }
    if let (RatioKind::Geometric { ratio: qc, .. }, RatioKind::Geometric { ratio: qb, .. }) =
        (upper_lip.kind(), lower_lip.kind())
    {
        if qb > qc {
            return Err(Error::invalid(
                "lower constants decay slower than upper ones",
            ));
        }
    }
    let u = solve_moran(upper_lip, tol)?.exponent;
    let l = solve_moran(lower_lip, tol)?.exponent;
    Ok(((d as f64).min(l), u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn golden_exponent() -> f64 {
        // x = 2^{-s} with x² + x − 1 = 0
        -((5f64.sqrt() - 1.0) / 2.0).log2()
    }

    #[test]
    fn phi_closed_forms() {
        let g = RatioSequence::geometric(1.0, 0.5).unwrap();
        assert!(phi(&g, 1.0, 1e-14).unwrap().contains(1.0));
        let c = RatioSequence::finite(vec![1.0 / 3.0; 2]).unwrap();
        let iv = phi(&c, 2f64.ln() / 3f64.ln(), 1e-14).unwrap();
        assert!(iv.max_deviation(1.0) < 1e-14);
        let p = RatioSequence::power_law(0.5, 2.0).unwrap();
        let z = 0.5 * std::f64::consts::PI.powi(2) / 6.0;
        let iv = phi(&p, 1.0, 1e-12).unwrap();
        assert!(iv.contains(z), "{iv}");
        assert!(matches!(phi(&p, 0.5, 1e-12), Err(Error::Divergent { .. })));
    }

    #[test]
    fn moran_closed_forms() {
        for (q, want) in [(0.5, 1.0), (0.25, 0.5)] {
            let r = RatioSequence::geometric(1.0, q).unwrap();
            let res = solve_moran(&r, 1e-12).unwrap();
            assert_abs_diff_eq!(res.exponent, want, epsilon = 1e-12);
            assert!(res.bracket.width() <= 1e-12);
            assert_eq!(res.truncation, Truncation::ClosedFormTail);
        }
    }

    #[test]
    fn bracket_is_certified() {
        let r = RatioSequence::power_law(0.5, 2.0).unwrap();
        let res = solve_moran(&r, 1e-10).unwrap();
        assert!(res.bracket.lo <= res.exponent && res.exponent <= res.bracket.hi);
        assert!(res.bracket.width() <= 1e-10);
        assert!(r.series().powf(res.bracket.lo).sum(0.0).lo >= 1.0 - res.residual);
        assert!(r.series().powf(res.bracket.hi).sum(0.0).hi <= 1.0 + res.residual);
    }

    #[test]
    fn truncated_golden_ratio() {
        let r = RatioSequence::geometric(1.0, 0.5).unwrap();
        let res = solve_truncated(&r, 2, 1e-13).unwrap();
        assert_abs_diff_eq!(res.exponent, golden_exponent(), epsilon = 1e-12);
        assert_abs_diff_eq!(res.exponent, 0.6942, epsilon = 1e-4);
        assert_eq!(res.truncation, Truncation::Head(2));
        assert!(matches!(
            solve_truncated(&r, 1, 1e-10),
            Err(Error::NoSolution(_))
        ));
    }

    #[test]
    fn truncations_increase_toward_full_root() {
        let r = RatioSequence::power_law(0.5, 2.0).unwrap();
        let full = solve_moran(&r, 1e-12).unwrap();
        let s: Vec<f64> = [10, 100, 1000]
            .iter()
            .map(|&m| solve_truncated(&r, m, 1e-12).unwrap().exponent)
            .collect();
        assert!(s[0] < s[1] && s[1] < s[2] && s[2] < full.bracket.hi);
    }

    #[test]
    fn beta_closed_forms() {
        let c = RatioSequence::finite(vec![1.0 / 3.0; 2]).unwrap();
        let w = WeightSequence::finite(vec![0.5, 0.5]).unwrap();
        let b = solve_beta(&c, &w, 1e-12).unwrap();
        assert_abs_diff_eq!(b.exponent, 2f64.ln() / 3f64.ln(), epsilon = 1e-12);

        let g = RatioSequence::geometric(1.0, 0.5).unwrap();
        let w = WeightSequence::geometric(0.5).unwrap();
        let b = solve_beta(&g, &w, 1e-12).unwrap();
        assert_abs_diff_eq!(b.exponent, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn natural_weights_give_beta_equal_s() {
        let r = RatioSequence::power_law(0.5, 2.0).unwrap();
        let s = solve_moran(&r, 1e-12).unwrap().exponent;
        let w = WeightSequence::natural(&r, s).unwrap();
        let b = solve_beta(&r, &w, 1e-12).unwrap().exponent;
        assert_abs_diff_eq!(b, s, epsilon = 2e-11);
    }

    #[test]
    fn beta_needs_two_weights() {
        let r = RatioSequence::finite(vec![0.5, 0.5]).unwrap();
        let w = WeightSequence::finite(vec![1.0, 0.0]).unwrap();
        assert!(matches!(
            solve_beta(&r, &w, 1e-10),
            Err(Error::NoFiniteBeta(_))
        ));
    }

    #[test]
    fn beta_before_divergence() {
        // P_j = 2^{-j}, ρ_j = 0.9·0.9^j: Ψ geometric with ratio 0.25/0.9^β,
        // diverging at β_c = ln 4 / ln(10/9); the root lies below it.
        let r = RatioSequence::geometric(1.0, 0.9).unwrap();
        let w = WeightSequence::geometric(0.5).unwrap();
        let bc = beta_abscissa(&r, &w);
        assert_abs_diff_eq!(bc, 4f64.ln() / (10.0f64 / 9.0).ln(), epsilon = 1e-9);
        let b = solve_beta(&r, &w, 1e-12).unwrap().exponent;
        assert!(b < bc);
        assert!(psi(&r, &w, b, 1e-14).max_deviation(1.0) < 1e-9);
    }

    #[test]
    fn nonsimilar_bounds() {
        let c = RatioSequence::geometric(1.0, 0.5).unwrap();
        let b = RatioSequence::geometric(1.0, 0.25).unwrap();
        let (lo, hi) = dimension_bounds_nonsimilar(&c, &b, 2, 1e-12).unwrap();
        assert_abs_diff_eq!(lo, 0.5, epsilon = 1e-11);
        assert_abs_diff_eq!(hi, 1.0, epsilon = 1e-11);

        let half = RatioSequence::geometric(0.5, 0.5).unwrap();
        let (lo, hi) = dimension_bounds_nonsimilar(&c, &half, 1, 1e-12).unwrap();
        assert_abs_diff_eq!(lo, golden_exponent(), epsilon = 1e-11);
        assert_abs_diff_eq!(hi, 1.0, epsilon = 1e-11);

        assert!(dimension_bounds_nonsimilar(&b, &c, 1, 1e-10).is_err());

        let (lo, hi) = dimension_bounds_nonsimilar(&c, &c, 1, 1e-12).unwrap();
        assert!(lo <= hi);
        assert_abs_diff_eq!(lo, hi, epsilon = 1e-11);
    }
}
