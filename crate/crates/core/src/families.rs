//! Constructors for the shipped model families.
//!
//! Each function builds the same model as the matching file under `models/`.

use std::f64::consts::FRAC_PI_2;

use crate::dimension::solve_moran;
use crate::error::Result;
use crate::ifs::model::{GapSchedule, IFSModel, MapRule, OpenSet};
use crate::ifs::sequences::{RatioSequence, WeightSequence};

const NATURAL_TOL: f64 = 1e-14;

fn natural(ratios: &RatioSequence) -> Result<WeightSequence> {
    let s = solve_moran(ratios, NATURAL_TOL)?.exponent;
    WeightSequence::natural(ratios, s)
}

fn explicit(translations: &[f64]) -> MapRule {
    MapRule::Explicit {
        translations: translations.iter().map(|&b| vec![b]).collect(),
        orthogonals: None,
    }
}

/// Middle-thirds Cantor set with natural weights (1/2, 1/2).
pub fn cantor() -> Result<IFSModel> {
    let r = RatioSequence::finite(vec![1.0 / 3.0; 2])?;
    let w = natural(&r)?;
    IFSModel::new(
        "cantor",
        r,
        w,
        explicit(&[0.0, 2.0 / 3.0]),
        OpenSet::unit_box(1),
    )
}

/// `ρ_j = q^j` packed into `(0,1)` with gaps `g_j = gap · ρ_j`, natural weights.
pub fn geometric(q: f64, gap: f64) -> Result<IFSModel> {
    let r = RatioSequence::geometric(1.0, q)?;
    let w = natural(&r)?;
    IFSModel::new(
        format!("geometric(q={q}, gap={gap})"),
        r,
        w,
        MapRule::Packed {
            start: 0.0,
            gaps: GapSchedule::Proportional(gap),
        },
        OpenSet::unit_box(1),
    )
}

/// `ρ_j = 2^{-j}` tiling `(0,1)`: `s = 1`, natural weights `P_j = 2^{-j}`.
pub fn geometric2() -> Result<IFSModel> {
    geometric(0.5, 0.0)
}

/// `ρ_j = 4^{-j}` with gaps equal to the images: `s = 1/2`.
pub fn geometric4() -> Result<IFSModel> {
    geometric(0.25, 1.0)
}

/// `ρ_j = 0.4^j` with gaps `ρ_j / 2`, which exactly fill `(0,1)`.
/// Images are strictly separated, so the strong open set condition holds.
pub fn gapped() -> Result<IFSModel> {
    geometric(0.4, 0.5)
}

/// `ρ_j = j^{-2} / 2` packed with gaps `0.2 ρ_j`, natural weights.
pub fn powerlaw() -> Result<IFSModel> {
    let r = RatioSequence::power_law(0.5, 2.0)?;
    let w = natural(&r)?;
    IFSModel::new(
        "powerlaw",
        r,
        w,
        MapRule::Packed {
            start: 0.0,
            gaps: GapSchedule::Proportional(0.2),
        },
        OpenSet::unit_box(1),
    )
}

/// Two halves of `[0,1]` with equal weights: `μ` is Lebesgue measure.
pub fn dyadic_lebesgue() -> Result<IFSModel> {
    let r = RatioSequence::finite(vec![0.5, 0.5])?;
    let w = WeightSequence::finite(vec![0.5, 0.5])?;
    IFSModel::new(
        "lebesgue",
        r,
        w,
        explicit(&[0.0, 0.5]),
        OpenSet::unit_box(1),
    )
}

/// Ratios `1/2, 1/3` at `0, 2/3`: non-arithmetic, natural weights.
pub fn mixed23() -> Result<IFSModel> {
    let r = RatioSequence::finite(vec![0.5, 1.0 / 3.0])?;
    let w = natural(&r)?;
    IFSModel::new(
        "mixed23",
        r,
        w,
        explicit(&[0.0, 2.0 / 3.0]),
        OpenSet::unit_box(1),
    )
}

/// Three maps `0.5, 0.3, 0.2` tiling `(0,1)` with weights equal to the ratios.
pub fn three_map() -> Result<IFSModel> {
    let r = RatioSequence::finite(vec![0.5, 0.3, 0.2])?;
    let w = WeightSequence::finite(vec![0.5, 0.3, 0.2])?;
    IFSModel::new(
        "three-map",
        r,
        w,
        explicit(&[0.0, 0.5, 0.8]),
        OpenSet::unit_box(1),
    )
}

/// Planar pair: `S_1` a scaled quarter turn about the origin, `S_2(x) = x/2 + (1/2, 0)`.
pub fn planar_pair() -> Result<IFSModel> {
    let r = RatioSequence::finite(vec![0.5, 0.5])?;
    let w = WeightSequence::finite(vec![0.5, 0.5])?;
    let (s, c) = FRAC_PI_2.sin_cos();
    let rule = MapRule::Explicit {
        translations: vec![vec![0.0, 0.0], vec![0.5, 0.0]],
        orthogonals: Some(vec![vec![c, -s, s, c], vec![1.0, 0.0, 0.0, 1.0]]),
    };
    IFSModel::new(
        "planar-pair",
        r,
        w,
        rule,
        OpenSet::boxed(vec![-1.0, -1.0], vec![1.0, 1.0])?,
    )
}

/// Four corner squares of the unit square with ratio 1/4 and equal weights.
pub fn corner_squares() -> Result<IFSModel> {
    let r = RatioSequence::finite(vec![0.25; 4])?;
    let w = WeightSequence::finite(vec![0.25; 4])?;
    let rule = MapRule::Explicit {
        translations: vec![
            vec![0.0, 0.0],
            vec![0.75, 0.0],
            vec![0.0, 0.75],
            vec![0.75, 0.75],
        ],
        orthogonals: None,
    };
    IFSModel::new("corner-squares", r, w, rule, OpenSet::unit_box(2))
}

/// One map `x ↦ x/2`: `μ` is the point mass at 0.
pub fn point_mass() -> Result<IFSModel> {
    let r = RatioSequence::finite(vec![0.5])?;
    let w = WeightSequence::finite(vec![1.0])?;
    IFSModel::new("point-mass", r, w, explicit(&[0.0]), OpenSet::unit_box(1))
}

/// All file-backed families by name.
pub fn shipped() -> Result<Vec<(&'static str, IFSModel)>> {
    Ok(vec![
        ("cantor", cantor()?),
        ("geometric2", geometric2()?),
        ("geometric4", geometric4()?),
        ("powerlaw", powerlaw()?),
        ("gapped", gapped()?),
        ("lebesgue", dyadic_lebesgue()?),
        ("mixed23", mixed23()?),
    ])
}
