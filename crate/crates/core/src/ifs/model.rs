use std::borrow::Cow;
use std::sync::RwLock;

use crate::error::{Error, Result};
use crate::ifs::map::SimilarityMap;
use crate::ifs::sequences::{RatioSequence, WeightSequence};
use crate::series::{Accumulator, Series, Tail};

/// Bounded open set witnessing the open set condition.
#[derive(Clone, Debug, PartialEq)]
pub enum OpenSet {
    /// Open axis-aligned box `Π (lo_i, hi_i)`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Interior of a convex polygon, vertices counter-clockwise.
    Polygon(Vec<[f64; 2]>),
}

impl OpenSet {
    pub fn unit_box(d: usize) -> Self {
        OpenSet::Box {
            lo: vec![0.0; d],
            hi: vec![1.0; d],
        }
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::invalid(
                "box corners must be nonempty and of equal length",
            ));
        }
        if lo
            .iter()
            .zip(&hi)
            .any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite())
        {
            return Err(Error::invalid("box must be bounded and nonempty"));
        }
        Ok(OpenSet::Box { lo, hi })
    }

    /// Convex polygon; vertices are reordered counter-clockwise if needed.
    pub fn polygon(mut vertices: Vec<[f64; 2]>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::invalid("polygon needs at least three vertices"));
        }
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        let n = vertices.len();
        for i in 0..n {
            let (a, b, c) = (vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
            let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
            if cross <= 0.0 {
                return Err(Error::invalid("polygon must be strictly convex"));
            }
        }
        Ok(OpenSet::Polygon(vertices))
    }

    pub fn dim(&self) -> usize {
        match self {
            OpenSet::Box { lo, .. } => lo.len(),
            OpenSet::Polygon(_) => 2,
        }
    }

    /// Corner points of the closure.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        match self {
            OpenSet::Box { lo, hi } => {
                let d = lo.len();
                (0..1usize << d)
                    .map(|mask| {
                        (0..d)
                            .map(|i| if mask >> i & 1 == 1 { hi[i] } else { lo[i] })
                            .collect()
                    })
                    .collect()
            }
            OpenSet::Polygon(v) => v.iter().map(|p| p.to_vec()).collect(),
        }
    }

    pub fn center(&self) -> Vec<f64> {
        match self {
            OpenSet::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect(),
            OpenSet::Polygon(v) => {
                let n = v.len() as f64;
                vec![
                    v.iter().map(|p| p[0]).sum::<f64>() / n,
                    v.iter().map(|p| p[1]).sum::<f64>() / n,
                ]
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        let verts = self.vertices();
        let mut best = 0.0f64;
        for (i, a) in verts.iter().enumerate() {
            for b in &verts[i + 1..] {
                best = best.max(dist(a, b));
            }
        }
        best
    }

    /// Membership in the open set.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            OpenSet::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (a, b))| a < v && v < b),
            OpenSet::Polygon(v) => {
                let n = v.len();
                (0..n).all(|i| {
                    let (a, b) = (v[i], v[(i + 1) % n]);
                    (b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]) > 0.0
                })
            }
        }
    }

    /// Membership in the closure inflated by `slack`.
    pub fn contains_closed(&self, x: &[f64], slack: f64) -> bool {
        match self {
            OpenSet::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (a, b))| a - slack <= *v && *v <= b + slack),
            OpenSet::Polygon(v) => {
                let n = v.len();
                (0..n).all(|i| {
                    let (a, b) = (v[i], v[(i + 1) % n]);
                    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
                    (b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]) >= -slack * len
                })
            }
        }
    }
}

fn signed_area(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Gap left after image `j` when images are packed left to right.
#[derive(Clone, Debug, PartialEq)]
pub enum GapSchedule {
    /// `g_j = c · ρ_j`.
    Proportional(f64),
    /// `g_j = coef · P_j^exponent`.
    WeightPower { coef: f64, exponent: f64 },
}

/// How `S_j` is realized from `ρ_j`.
#[derive(Clone, Debug, PartialEq)]
pub enum MapRule {
    /// Explicit translations (and optional row-major orthogonal parts, identity
    /// if omitted) for a finite family.
    Explicit {
        translations: Vec<Vec<f64>>,
        orthogonals: Option<Vec<Vec<f64>>>,
    },
    /// One-dimensional packing into the open interval: image `j` is placed at
    /// relative offset `start + Σ_{i<j} (ρ_i + g_i)`, orientation preserved.
    Packed { start: f64, gaps: GapSchedule },
}

/// Prefix sums `Σ_{j≤n} a_j`, closed form for geometric tails and a lazily
/// extended table otherwise.
#[derive(Debug)]
struct PrefixSums {
    series: Series,
    table: RwLock<(Vec<f64>, Accumulator)>,
}

const PREFIX_CAP: usize = 1 << 22;

impl PrefixSums {
    fn new(series: Series) -> Self {
        PrefixSums {
            series,
            table: RwLock::new((Vec::new(), Accumulator::default())),
        }
    }

    fn get(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        if !matches!(self.series.tail(), Tail::PowerGeometric { .. }) {
            return self.series.partial(n);
        }
        let upto = n.min(PREFIX_CAP);
        {
            let guard = self.table.read().unwrap();
            if upto <= guard.0.len() {
                return guard.0[upto - 1] + self.beyond_cap(n);
            }
        }
        {
            let mut guard = self.table.write().unwrap();
            let (table, acc) = &mut *guard;
            let target = upto.next_power_of_two().min(PREFIX_CAP);
            while table.len() < target {
                acc.add(self.series.term(table.len() + 1));
                table.push(acc.value());
            }
        }
        self.table.read().unwrap().0[upto - 1] + self.beyond_cap(n)
    }

    /// Approximate `Σ_{cap<j≤n} a_j` by the midpoint integral; these terms
    /// are below 1e-12 for every shipped family.
    fn beyond_cap(&self, n: usize) -> f64 {
        if n <= PREFIX_CAP {
            return 0.0;
        }
        match *self.series.tail() {
            Tail::PowerGeometric {
                coef,
                base: 1.0,
                power,
            } => {
                let a = PREFIX_CAP as f64 + 0.5;
                let b = n as f64 + 0.5;
                if (power + 1.0).abs() < 1e-12 {
                    coef * (b / a).ln()
                } else {
                    coef * (b.powf(power + 1.0) - a.powf(power + 1.0)) / (power + 1.0)
                }
            }
            _ => {
                let mut acc = Accumulator::default();
                for j in PREFIX_CAP + 1..=n {
                    let t = self.series.term(j);
                    acc.add(t);
                    if t == 0.0 {
                        break;
                    }
                }
                acc.value()
            }
        }
    }
}

#[derive(Debug)]
pub(crate) struct Packing {
    start: f64,
    lo: f64,
    length: f64,
    ratio_prefix: PrefixSums,
    gap_prefix: PrefixSums,
    gaps: Series,
}

impl Packing {
    /// Relative gap after image `j`.
    pub(crate) fn gap(&self, j: usize) -> f64 {
        self.gaps.term(j)
    }

    pub(crate) fn length(&self) -> f64 {
        self.length
    }

    fn left_end(&self, j: usize) -> f64 {
        let offset = self.start + self.ratio_prefix.get(j - 1) + self.gap_prefix.get(j - 1);
        self.lo + self.length * offset
    }
}

#[derive(Debug)]
enum Realization {
    Table(Vec<SimilarityMap>),
    Packed(Box<Packing>),
}

/// A finite or infinite family of contracting similarities with weights.
#[derive(Debug)]
pub struct IFSModel {
    name: String,
    dim: usize,
    ratios: RatioSequence,
    weights: WeightSequence,
    rule: MapRule,
    realization: Realization,
    open_set: OpenSet,
    anchor: Vec<f64>,
    seed_diameter: f64,
}

impl IFSModel {
    /// Builds a model. The seed set `E_0` defaults to the closure of the open
    /// set, anchored at its center.
    pub fn new(
        name: impl Into<String>,
        ratios: RatioSequence,
        weights: WeightSequence,
        rule: MapRule,
        open_set: OpenSet,
    ) -> Result<Self> {
        let dim = open_set.dim();
        match (ratios.len(), weights.len()) {
            (Some(m), Some(n)) if m != n => {
                return Err(Error::invalid(format!("{m} ratios but {n} weights")));
            }
            (None, Some(_)) => {
                return Err(Error::invalid("finite weights need a finite ratio list"));
            }
            (Some(_), None) => {
                return Err(Error::invalid(
                    "infinite weights need an infinite ratio family",
                ));
            }
            _ => {}
        }
        let realization = match &rule {
            MapRule::Explicit {
                translations,
                orthogonals,
            } => {
                let m = ratios
                    .len()
                    .ok_or_else(|| Error::invalid("explicit maps need a finite ratio list"))?;
                if translations.len() != m {
                    return Err(Error::invalid(format!(
                        "{m} ratios but {} translations",
                        translations.len()
                    )));
                }
                if let Some(o) = orthogonals {
                    if o.len() != m {
                        return Err(Error::invalid("one orthogonal matrix per map required"));
                    }
                }
                let mut maps = Vec::with_capacity(m);
                for (j, b) in translations.iter().enumerate() {
                    if b.len() != dim {
                        return Err(Error::DimensionMismatch {
                            expected: dim,
                            got: b.len(),
                        });
                    }
                    let rho = ratios.ratio(j + 1).unwrap();
                    let map = match orthogonals {
                        Some(o) => SimilarityMap::new(rho, o[j].clone(), b.clone())?,
                        None => SimilarityMap::scaling(rho, b.clone())?,
                    };
                    maps.push(map);
                }
                Realization::Table(maps)
            }
            MapRule::Packed { start, gaps } => {
                let (lo, hi) = match &open_set {
                    OpenSet::Box { lo, hi } if dim == 1 => (lo[0], hi[0]),
                    _ => {
                        return Err(Error::Unsupported(
                            "packed realization needs a one-dimensional interval".into(),
                        ))
                    }
                };
                if !(*start >= 0.0) {
                    return Err(Error::invalid("packing start must be non-negative"));
                }
                let gap_series = match gaps {
                    GapSchedule::Proportional(c) => {
                        if !(*c >= 0.0) {
                            return Err(Error::invalid("gap factor must be non-negative"));
                        }
                        ratios.series().scale(*c)
                    }
                    GapSchedule::WeightPower { coef, exponent } => {
                        if !(*coef >= 0.0 && *exponent > 0.0) {
                            return Err(Error::invalid(
                                "gap schedule needs coef ≥ 0, exponent > 0",
                            ));
                        }
                        weights.series().powf(*exponent).scale(*coef)
                    }
                };
                let used = ratios.series().sum(1e-13).hi + gap_series.sum(1e-13).hi;
                if start + used > 1.0 + 1e-12 {
                    return Err(Error::invalid(format!(
                        "packed images overflow the open interval (relative length {})",
                        start + used
                    )));
                }
                Realization::Packed(Box::new(Packing {
                    start: *start,
                    lo,
                    length: hi - lo,
                    ratio_prefix: PrefixSums::new(ratios.series()),
                    gap_prefix: PrefixSums::new(gap_series.clone()),
                    gaps: gap_series,
                }))
            }
        };
        let anchor = open_set.center();
        let seed_diameter = open_set.diameter();
        Ok(IFSModel {
            name: name.into(),
            dim,
            ratios,
            weights,
            rule,
            realization,
            open_set,
            anchor,
            seed_diameter,
        })
    }

    /// Overrides the seed set's anchor point and diameter `|E_0|`.
    pub fn with_seed(mut self, anchor: Vec<f64>, seed_diameter: f64) -> Result<Self> {
        if anchor.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: anchor.len(),
            });
        }
        if !(seed_diameter > 0.0) {
            return Err(Error::invalid("seed diameter must be positive"));
        }
        self.anchor = anchor;
        self.seed_diameter = seed_diameter;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ratios(&self) -> &RatioSequence {
        &self.ratios
    }

    pub fn weights(&self) -> &WeightSequence {
        &self.weights
    }

    pub fn rule(&self) -> &MapRule {
        &self.rule
    }

    pub fn open_set(&self) -> &OpenSet {
        &self.open_set
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn seed_diameter(&self) -> f64 {
        self.seed_diameter
    }

    /// Number of maps, `None` for infinite families.
    pub fn num_maps(&self) -> Option<usize> {
        self.ratios.len()
    }

    pub(crate) fn packing(&self) -> Option<&Packing> {
        match &self.realization {
            Realization::Packed(p) => Some(p),
            Realization::Table(_) => None,
        }
    }

    pub(crate) fn check_letter(&self, j: usize) -> Result<()> {
        if j == 0 {
            return Err(Error::invalid("letters are one-based"));
        }
        if let Some(m) = self.num_maps() {
            if j > m {
                return Err(Error::invalid(format!("letter {j} exceeds the {m} maps")));
            }
        }
        Ok(())
    }

    /// `S_j` (one-based).
    pub fn map(&self, j: usize) -> Result<Cow<'_, SimilarityMap>> {
        self.check_letter(j)?;
        Ok(match &self.realization {
            Realization::Table(maps) => Cow::Borrowed(&maps[j - 1]),
            Realization::Packed(p) => {
                let rho = self.ratios.ratio(j).unwrap();
                let b = p.left_end(j) - rho * p.lo;
                Cow::Owned(SimilarityMap::scaling(rho, vec![b])?)
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn geometric_packed(gap: f64) -> Result<IFSModel> {
        let r = RatioSequence::geometric(1.0, 0.4)?;
        let s = crate::dimension::solve_moran(&r, 1e-13)?.exponent;
        let w = WeightSequence::natural(&r, s)?;
        IFSModel::new(
            "gapped",
            r,
            w,
            MapRule::Packed {
                start: 0.0,
                gaps: GapSchedule::Proportional(gap),
            },
            OpenSet::unit_box(1),
        )
    }

    #[test]
    fn realized_ratio_matches_sequence_exactly() {
        let m = geometric_packed(0.5).unwrap();
        for j in 1..30 {
            assert_eq!(m.map(j).unwrap().ratio(), m.ratios().ratio(j).unwrap());
        }
    }

    #[test]
    fn packed_images_follow_gap_schedule() {
        let m = geometric_packed(0.5).unwrap();
        let s1 = m.map(1).unwrap();
        let s2 = m.map(2).unwrap();
        // S_1(O) = (0, 0.4), gap 0.2, S_2(O) = (0.6, 0.76)
        assert_relative_eq!(s1.translation()[0], 0.0);
        assert_relative_eq!(s2.translation()[0], 0.6, epsilon = 1e-15);
        assert_relative_eq!(s2.apply(&[1.0]).unwrap()[0], 0.76, epsilon = 1e-15);
    }

    #[test]
    fn overflowing_packing_is_rejected() {
        assert!(geometric_packed(0.6).is_err());
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let r = RatioSequence::finite(vec![0.5, 0.5]).unwrap();
        let w = WeightSequence::finite(vec![1.0]).unwrap();
        let rule = MapRule::Explicit {
            translations: vec![vec![0.0], vec![0.5]],
            orthogonals: None,
        };
        assert!(IFSModel::new("x", r, w, rule, OpenSet::unit_box(1)).is_err());
    }

    #[test]
    fn letters_validated() {
        let m = geometric_packed(0.5).unwrap();
        assert!(m.map(0).is_err());
        assert!(m.map(100).is_ok());
    }

    #[test]
    fn polygon_orientation_and_membership() {
        let p = OpenSet::polygon(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]).unwrap();
        assert!(p.contains(&[0.2, 0.2]));
        assert!(!p.contains(&[0.6, 0.6]));
        assert!(p.contains_closed(&[0.5, 0.5], 1e-12));
        assert!(OpenSet::polygon(vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]).is_err());
    }
}
