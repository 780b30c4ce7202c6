//! Contraction-ratio and weight sequences, finite or infinite.

use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::series::{Accumulator, Interval, Series};

/// Tolerance within which certified weight sums must bracket 1.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

const CDF_BLOCK: usize = 1024;
const CDF_CAP: usize = 1 << 22;

#[derive(Clone, Debug, PartialEq)]
pub enum RatioKind {
    /// `ρ_1..ρ_m` listed explicitly.
    Finite(Vec<f64>),
    /// `ρ_j = scale · ratio^j`.
    Geometric { scale: f64, ratio: f64 },
    /// `ρ_j = coef · j^(-exponent)`.
    PowerLaw { coef: f64, exponent: f64 },
    /// Explicit head `ρ_1..ρ_m`, then `ρ_{m+i} = scale · ratio^i`.
    HeadGeometric {
        head: Vec<f64>,
        scale: f64,
        ratio: f64,
    },
}

/// The sequence `{ρ_j}` of contraction ratios.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioSequence {
    kind: RatioKind,
}

fn check_open_unit(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} = {x} not in (0,1)")))
    }
}

impl RatioSequence {
    pub fn finite(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("empty ratio list"));
        }
        for &r in &values {
            check_open_unit("ratio", r)?;
        }
        Ok(RatioSequence {
            kind: RatioKind::Finite(values),
        })
    }

    pub fn geometric(scale: f64, ratio: f64) -> Result<Self> {
        check_open_unit("geometric ratio", ratio)?;
        if !(scale > 0.0) {
            return Err(Error::invalid("geometric scale must be positive"));
        }
        check_open_unit("first ratio", scale * ratio)?;
        Ok(RatioSequence {
            kind: RatioKind::Geometric { scale, ratio },
        })
    }

    pub fn power_law(coef: f64, exponent: f64) -> Result<Self> {
        check_open_unit("power-law coefficient", coef)?;
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::invalid("power-law exponent must be positive"));
        }
        Ok(RatioSequence {
            kind: RatioKind::PowerLaw { coef, exponent },
        })
    }

    pub fn head_geometric(head: Vec<f64>, scale: f64, ratio: f64) -> Result<Self> {
        for &r in &head {
            check_open_unit("ratio", r)?;
        }
        check_open_unit("geometric ratio", ratio)?;
        if !(scale > 0.0) {
            return Err(Error::invalid("geometric scale must be positive"));
        }
        check_open_unit("first tail ratio", scale * ratio)?;
        Ok(RatioSequence {
            kind: RatioKind::HeadGeometric { head, scale, ratio },
        })
    }

    pub fn kind(&self) -> &RatioKind {
        &self.kind
    }

    /// Number of maps, `None` for infinite families.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> Option<usize> {
        match &self.kind {
            RatioKind::Finite(v) => Some(v.len()),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.len().is_some()
    }

    /// `ρ_j` (one-based), `None` past the end of a finite family.
    pub fn ratio(&self, j: usize) -> Option<f64> {
        assert!(j >= 1, "map index is one-based");
        match &self.kind {
            RatioKind::Finite(v) => v.get(j - 1).copied(),
            RatioKind::Geometric { scale, ratio } => Some(scale * ratio.powf(j as f64)),
            RatioKind::PowerLaw { coef, exponent } => Some(coef * (j as f64).powf(-exponent)),
            RatioKind::HeadGeometric { head, scale, ratio } => Some(if j <= head.len() {
                head[j - 1]
            } else {
                scale * ratio.powf((j - head.len()) as f64)
            }),
        }
    }

    /// Index after which `ρ_j` is non-increasing (the declared head length).
    pub fn monotone_from(&self) -> usize {
        match &self.kind {
            RatioKind::Finite(v) => v.len(),
            RatioKind::Geometric { .. } | RatioKind::PowerLaw { .. } => 0,
            RatioKind::HeadGeometric { head, .. } => head.len(),
        }
    }

    /// `sup_j ρ_j`.
    pub fn sup(&self) -> f64 {
        match &self.kind {
            RatioKind::Finite(v) => v.iter().copied().fold(0.0, f64::max),
            RatioKind::Geometric { scale, ratio } => scale * ratio,
            RatioKind::PowerLaw { coef, .. } => *coef,
            RatioKind::HeadGeometric { head, scale, ratio } => {
                head.iter().copied().fold(scale * ratio, f64::max)
            }
        }
    }

    /// The series `Σ_j ρ_j`, whose `powf(s)` is the Moran series.
    pub fn series(&self) -> Series {
        match &self.kind {
            RatioKind::Finite(v) => Series::finite(v.clone()),
            RatioKind::Geometric { scale, ratio } => {
                Series::geometric(vec![], scale * ratio, *ratio)
            }
            RatioKind::PowerLaw { coef, exponent } => {
                Series::power_geometric(vec![], *coef, 1.0, -exponent)
            }
            RatioKind::HeadGeometric { head, scale, ratio } => {
                Series::geometric(head.clone(), scale * ratio, *ratio)
            }
        }
    }

    /// Convergence abscissa of `Σ ρ_j^s`: the series converges for every `s` above it.
    pub fn abscissa(&self) -> f64 {
        match &self.kind {
            RatioKind::PowerLaw { exponent, .. } => 1.0 / exponent,
            _ => 0.0,
        }
    }

    /// `Σ_{j≤m} ρ_j^s`: a certified lower bound for the full sum.
    pub fn partial_sum(&self, s: f64, m: usize) -> f64 {
        let mut acc = Accumulator::default();
        let n = self.len().map_or(m, |len| len.min(m));
        for j in 1..=n {
            acc.add(self.ratio(j).unwrap().powf(s));
        }
        acc.value() * (1.0 - 16.0 * f64::EPSILON)
    }

    /// Certified upper bound for `Σ_{j>m} ρ_j^s`, infinite at or below the abscissa.
    pub fn tail_upper(&self, s: f64, m: usize) -> f64 {
        self.series().powf(s).sum_from(m + 1, f64::INFINITY).hi
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum WeightKind {
    Finite(Vec<f64>),
    /// `P_j = (1 − ratio) · ratio^(j−1)`.
    Geometric {
        ratio: f64,
    },
    /// `P_j = j^(-exponent) / norm` with `norm = ζ(exponent)`.
    PowerLaw {
        exponent: f64,
        norm: f64,
    },
    /// Explicit head, then `P_{m+i} = first · ratio^(i−1)`.
    HeadGeometric {
        head: Vec<f64>,
        first: f64,
        ratio: f64,
    },
}

/// Lazily extended cumulative table for power-law weights.
#[derive(Debug)]
struct PowerCdf {
    exponent: f64,
    norm: f64,
    state: RwLock<(Vec<f64>, Accumulator)>,
}

impl PowerCdf {
    fn new(exponent: f64, norm: f64) -> Self {
        PowerCdf {
            exponent,
            norm,
            state: RwLock::new((Vec::new(), Accumulator::default())),
        }
    }

    fn weight(&self, j: usize) -> f64 {
        (j as f64).powf(-self.exponent) / self.norm
    }

    fn extend_to(&self, n: usize) {
        let mut guard = self.state.write().unwrap();
        let (table, acc) = &mut *guard;
        while table.len() < n {
            let j = table.len() + 1;
            acc.add(self.weight(j));
            table.push(acc.value().min(1.0));
        }
    }

    /// Integral approximation of the mass beyond `j` (midpoint rule).
    fn approx_tail(&self, j: usize) -> f64 {
        let k = self.exponent;
        (j as f64 + 0.5).powf(1.0 - k) / ((k - 1.0) * self.norm)
    }

    fn cdf(&self, j: usize) -> f64 {
        if j == 0 {
            return 0.0;
        }
        if j <= CDF_CAP {
            {
                let guard = self.state.read().unwrap();
                if j <= guard.0.len() {
                    return guard.0[j - 1];
                }
            }
            self.extend_to(j.div_ceil(CDF_BLOCK) * CDF_BLOCK);
            return self.state.read().unwrap().0[j - 1];
        }
        1.0 - self.approx_tail(j)
    }

    fn sample_index(&self, u: f64) -> usize {
        loop {
            {
                let guard = self.state.read().unwrap();
                let table = &guard.0;
                if let Some(&last) = table.last() {
                    if u < last {
                        return table.partition_point(|&c| c <= u) + 1;
                    }
                }
                if table.len() >= CDF_CAP {
                    break;
                }
            }
            let len = self.state.read().unwrap().0.len();
            self.extend_to((len + CDF_BLOCK).min(CDF_CAP));
        }
        // Beyond the table: invert the integral tail and settle the index locally.
        let k = self.exponent;
        let target = (1.0 - u) * (k - 1.0) * self.norm;
        let guess = (target.powf(1.0 / (1.0 - k)) - 0.5).ceil();
        let mut j = if guess.is_finite() && guess > CDF_CAP as f64 {
            guess.min(usize::MAX as f64 / 4.0) as usize
        } else {
            CDF_CAP + 1
        };
        while self.cdf(j) <= u && j < usize::MAX / 4 {
            j += 1;
        }
        while j > CDF_CAP + 1 && self.cdf(j - 1) > u {
            j -= 1;
        }
        j
    }
}

/// The probability sequence `{P_j}`.
#[derive(Clone, Debug)]
pub struct WeightSequence {
    kind: WeightKind,
    natural_beta: Option<f64>,
    /// Cumulative sums of an explicit list (finite kind, or the head).
    head_cdf: Vec<f64>,
    power: Option<Arc<PowerCdf>>,
}

impl PartialEq for WeightSequence {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.natural_beta == other.natural_beta
    }
}

fn cumulative(values: &[f64]) -> Vec<f64> {
    let mut acc = Accumulator::default();
    values
        .iter()
        .map(|&p| {
            acc.add(p);
            acc.value()
        })
        .collect()
}

impl WeightSequence {
    fn build(kind: WeightKind, natural_beta: Option<f64>) -> Result<Self> {
        let head_cdf = match &kind {
            WeightKind::Finite(v) => cumulative(v),
            WeightKind::HeadGeometric { head, .. } => cumulative(head),
            _ => Vec::new(),
        };
        let power = match kind {
            WeightKind::PowerLaw { exponent, norm } => {
                Some(Arc::new(PowerCdf::new(exponent, norm)))
            }
            _ => None,
        };
        let w = WeightSequence {
            kind,
            natural_beta,
            head_cdf,
            power,
        };
        let total = w.total();
        if total.lo < 1.0 - WEIGHT_SUM_TOL || total.hi > 1.0 + WEIGHT_SUM_TOL {
            return Err(Error::invalid(format!(
                "weights do not sum to 1 (certified enclosure {total})"
            )));
        }
        Ok(w)
    }

    pub fn finite(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("empty weight list"));
        }
        if values.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::invalid("weights must be non-negative"));
        }
        Self::build(WeightKind::Finite(values), None)
    }

    /// `P_j = (1 − p) p^(j−1)`.
    pub fn geometric(ratio: f64) -> Result<Self> {
        check_open_unit("geometric weight ratio", ratio)?;
        Self::build(WeightKind::Geometric { ratio }, None)
    }

    /// `P_j ∝ j^(-exponent)`, normalized by a certified `ζ(exponent)`.
    pub fn power_law(exponent: f64) -> Result<Self> {
        if !(exponent > 1.0 && exponent.is_finite()) {
            return Err(Error::invalid("power-law weight exponent must exceed 1"));
        }
        let norm = Series::power_geometric(vec![], 1.0, 1.0, -exponent)
            .sum(1e-15)
            .mid();
        Self::build(WeightKind::PowerLaw { exponent, norm }, None)
    }

    /// Explicit head followed by a geometric tail of the given ratio carrying
    /// the remaining mass.
    pub fn head_geometric(head: Vec<f64>, ratio: f64) -> Result<Self> {
        check_open_unit("geometric weight ratio", ratio)?;
        if head.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::invalid("weights must be non-negative"));
        }
        let rest = 1.0 - cumulative(&head).last().copied().unwrap_or(0.0);
        if !(rest > 0.0) {
            return Err(Error::invalid("head weights leave no mass for the tail"));
        }
        let first = rest * (1.0 - ratio);
        Self::build(WeightKind::HeadGeometric { head, first, ratio }, None)
    }

    /// Natural weights `P_j = ρ_j^β / Σ_i ρ_i^β`.
    ///
    /// Each ratio family maps onto a closed-form weight family so the
    /// normalization is exact: geometric ratios give geometric weights,
    /// power-law ratios give ζ-normalized power-law weights.
    pub fn natural(ratios: &RatioSequence, beta: f64) -> Result<Self> {
        if !(beta > ratios.abscissa()) {
            return Err(Error::Divergent {
                exponent: beta,
                abscissa: ratios.abscissa(),
            });
        }
        let kind = match ratios.kind() {
            RatioKind::Finite(v) => {
                let raw: Vec<f64> = v.iter().map(|r| r.powf(beta)).collect();
                let z = ratios.series().powf(beta).sum(0.0).mid();
                WeightKind::Finite(raw.into_iter().map(|p| p / z).collect())
            }
            RatioKind::Geometric { ratio, .. } => WeightKind::Geometric {
                ratio: ratio.powf(beta),
            },
            RatioKind::PowerLaw { exponent, .. } => {
                let k = exponent * beta;
                let norm = Series::power_geometric(vec![], 1.0, 1.0, -k)
                    .sum(1e-15)
                    .mid();
                WeightKind::PowerLaw { exponent: k, norm }
            }
            RatioKind::HeadGeometric { head, scale, ratio } => {
                let z = ratios.series().powf(beta).sum(0.0).mid();
                WeightKind::HeadGeometric {
                    head: head.iter().map(|r| r.powf(beta) / z).collect(),
                    first: (scale * ratio).powf(beta) / z,
                    ratio: ratio.powf(beta),
                }
            }
        };
        Self::build(kind, Some(beta))
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    /// The exponent used if these are natural weights.
    pub fn natural_beta(&self) -> Option<f64> {
        self.natural_beta
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> Option<usize> {
        match &self.kind {
            WeightKind::Finite(v) => Some(v.len()),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.len().is_some()
    }

    /// Number of explicitly listed leading weights; beyond it `P_j` is non-increasing.
    pub fn monotone_from(&self) -> usize {
        match &self.kind {
            WeightKind::Finite(v) => v.len(),
            WeightKind::HeadGeometric { head, .. } => head.len(),
            _ => 0,
        }
    }

    pub fn series(&self) -> Series {
        match &self.kind {
            WeightKind::Finite(v) => Series::finite(v.clone()),
            WeightKind::Geometric { ratio } => Series::geometric(vec![], 1.0 - ratio, *ratio),
            WeightKind::PowerLaw { exponent, norm } => {
                Series::power_geometric(vec![], 1.0 / norm, 1.0, -exponent)
            }
            WeightKind::HeadGeometric { head, first, ratio } => {
                Series::geometric(head.clone(), *first, *ratio)
            }
        }
    }

    /// Certified enclosure of `Σ P_j`.
    pub fn total(&self) -> Interval {
        self.series().sum(1e-14)
    }

    /// `P_j` (one-based); zero past the end of a finite list.
    pub fn weight(&self, j: usize) -> f64 {
        assert!(j >= 1, "map index is one-based");
        match &self.kind {
            WeightKind::Finite(v) => v.get(j - 1).copied().unwrap_or(0.0),
            WeightKind::Geometric { ratio } => (1.0 - ratio) * ratio.powf((j - 1) as f64),
            WeightKind::PowerLaw { exponent, norm } => (j as f64).powf(-exponent) / norm,
            WeightKind::HeadGeometric { head, first, ratio } => {
                if j <= head.len() {
                    head[j - 1]
                } else {
                    first * ratio.powf((j - head.len() - 1) as f64)
                }
            }
        }
    }

    /// `Σ_{i≤j} P_i`.
    pub fn cdf(&self, j: usize) -> f64 {
        if j == 0 {
            return 0.0;
        }
        match &self.kind {
            WeightKind::Finite(_) => self.head_cdf[(j - 1).min(self.head_cdf.len() - 1)],
            WeightKind::Geometric { ratio } => -(j as f64 * ratio.ln()).exp_m1(),
            WeightKind::PowerLaw { .. } => self.power.as_ref().unwrap().cdf(j),
            WeightKind::HeadGeometric { head, first, ratio } => {
                let m = head.len();
                if j <= m {
                    return self.head_cdf[j - 1];
                }
                let base = self.head_cdf.last().copied().unwrap_or(0.0);
                let i = (j - m) as f64;
                base - first * (i * ratio.ln()).exp_m1() / (1.0 - ratio)
            }
        }
    }

    /// Smallest `j` with `cdf(j) > u`, for `u ∈ [0, 1)`.
    pub fn sample_index(&self, u: f64) -> usize {
        debug_assert!((0.0..1.0).contains(&u), "u = {u}");
        match &self.kind {
            WeightKind::Finite(v) => {
                let j = self.head_cdf.partition_point(|&c| c <= u) + 1;
                if j <= v.len() {
                    j
                } else {
                    // Rounding left the last partial sum at or below u.
                    v.iter().rposition(|&p| p > 0.0).unwrap() + 1
                }
            }
            WeightKind::Geometric { ratio } => {
                let guess = ((-u).ln_1p() / ratio.ln()).floor() + 1.0;
                self.settle(guess.max(1.0) as usize, u)
            }
            WeightKind::PowerLaw { .. } => self.power.as_ref().unwrap().sample_index(u),
            WeightKind::HeadGeometric { head, first, ratio } => {
                let m = head.len();
                if let Some(&last) = self.head_cdf.last() {
                    if u < last {
                        return self.head_cdf.partition_point(|&c| c <= u) + 1;
                    }
                }
                let base = self.head_cdf.last().copied().unwrap_or(0.0);
                let x = 1.0 - (u - base) * (1.0 - ratio) / first;
                let guess = if x > 0.0 {
                    (x.ln() / ratio.ln()).floor() + 1.0
                } else {
                    1.0
                };
                self.settle(m + guess.max(1.0) as usize, u)
            }
        }
    }

    fn settle(&self, mut j: usize, u: f64) -> usize {
        while self.cdf(j) <= u {
            j += 1;
        }
        while j > 1 && self.cdf(j - 1) > u {
            j -= 1;
        }
        j
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn ratio_kinds_evaluate() {
        let g = RatioSequence::geometric(1.0, 0.5).unwrap();
        assert_eq!(g.ratio(3), Some(0.125));
        let p = RatioSequence::power_law(0.5, 2.0).unwrap();
        assert_eq!(p.ratio(2), Some(0.125));
        let h = RatioSequence::head_geometric(vec![0.3, 0.2], 0.5, 0.5).unwrap();
        assert_eq!(h.ratio(2), Some(0.2));
        assert_eq!(h.ratio(3), Some(0.25));
        assert_eq!(h.ratio(4), Some(0.125));
        let f = RatioSequence::finite(vec![0.5, 0.25]).unwrap();
        assert_eq!(f.ratio(3), None);
    }

    #[test]
    fn ratio_validation() {
        assert!(RatioSequence::finite(vec![0.5, 1.0]).is_err());
        assert!(RatioSequence::geometric(3.0, 0.5).is_err());
        assert!(RatioSequence::power_law(1.2, 2.0).is_err());
        assert!(RatioSequence::finite(vec![]).is_err());
    }

    #[test]
    fn partial_and_tail_bracket_zeta() {
        let p = RatioSequence::power_law(0.5, 2.0).unwrap();
        let target = 0.5 * std::f64::consts::PI.powi(2) / 6.0;
        let lo = p.partial_sum(1.0, 1000);
        let hi = lo + p.tail_upper(1.0, 1000);
        assert!(lo <= target && target <= hi, "{lo} {target} {hi}");
        // Σ_{j>1000} j^{-2}/2 ≈ 5e-4.
        assert!(hi - lo < 5.1e-4 && hi - lo > 4.9e-4);
    }

    #[test]
    fn tail_upper_is_infinite_at_abscissa() {
        let p = RatioSequence::power_law(0.5, 2.0).unwrap();
        assert!(p.tail_upper(0.5, 10).is_infinite());
    }

    #[test]
    fn weight_sum_is_certified() {
        assert!(WeightSequence::finite(vec![0.5, 0.4]).is_err());
        assert!(WeightSequence::finite(vec![0.5, -0.1, 0.6]).is_err());
        let w = WeightSequence::power_law(2.0).unwrap();
        assert!(w.total().contains(1.0));
    }

    #[test]
    fn natural_weights_canonical_forms() {
        let g = RatioSequence::geometric(1.0, 0.5).unwrap();
        let w = WeightSequence::natural(&g, 1.0).unwrap();
        assert_eq!(w.kind(), &WeightKind::Geometric { ratio: 0.5 });
        assert_relative_eq!(w.weight(3), 0.125, max_relative = 1e-15);

        let c = RatioSequence::finite(vec![1.0 / 3.0; 2]).unwrap();
        let w = WeightSequence::natural(&c, 2f64.ln() / 3f64.ln()).unwrap();
        assert_relative_eq!(w.weight(1), 0.5, max_relative = 1e-15);

        let h = RatioSequence::head_geometric(vec![0.3], 0.5, 0.4).unwrap();
        let w = WeightSequence::natural(&h, 0.8).unwrap();
        for j in 1..6 {
            let raw = h.ratio(j).unwrap().powf(0.8);
            assert_relative_eq!(
                w.weight(j) / w.weight(1),
                raw / 0.3f64.powf(0.8),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn sample_index_examples() {
        let half = WeightSequence::finite(vec![0.5, 0.5]).unwrap();
        assert_eq!(half.sample_index(0.25), 1);
        let dy = WeightSequence::geometric(0.5).unwrap();
        assert_eq!(dy.sample_index(0.75), 3);
        assert_eq!(dy.sample_index(0.74), 2);
        assert_eq!(dy.sample_index(0.0), 1);
    }

    #[test]
    fn power_law_sampling_far_tail() {
        let w = WeightSequence::power_law(1.5).unwrap();
        let u = 1.0 - 1e-5;
        let j = w.sample_index(u);
        assert!(w.cdf(j) > u);
        assert!(j == 1 || w.cdf(j - 1) <= u);
    }

    proptest! {
        #[test]
        fn sample_index_is_smallest_exceeding(u in 0.0f64..0.999_999, which in 0usize..4) {
            let w = match which {
                0 => WeightSequence::finite(vec![0.1, 0.2, 0.3, 0.4]).unwrap(),
                1 => WeightSequence::geometric(0.7).unwrap(),
                2 => WeightSequence::power_law(2.5).unwrap(),
                _ => WeightSequence::head_geometric(vec![0.2, 0.05], 0.6).unwrap(),
            };
            let j = w.sample_index(u);
            prop_assert!(w.cdf(j) > u);
            prop_assert!(j == 1 || w.cdf(j - 1) <= u);
        }
    }
}
