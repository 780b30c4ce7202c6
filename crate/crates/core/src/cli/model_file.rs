//! TOML model files.
//!
//! ```toml
//! [model]
//! name = "cantor"
//! dimension = 1
//! maps = "explicit"
//! translations = [[0.0], ["2/3"]]
//!
//! [ratios]
//! kind = "finite"
//! values = ["1/3", "1/3"]
//!
//! [weights]
//! kind = "natural"
//!
//! [open_set]
//! kind = "box"
//! lo = [0.0]
//! hi = [1.0]
//!
//! [run]
//! seed = 7
//! ```
//!
//! Numbers may be written as TOML floats, integers, or `"p/q"` strings.
//! Unknown keys are rejected.

use std::path::Path;

use serde::Deserialize;

use crate::dimension::solve_moran;
use crate::error::{Error, Result};
use crate::ifs::model::{GapSchedule, IFSModel, MapRule, OpenSet};
use crate::ifs::sequences::{RatioSequence, WeightSequence};

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Num {
    Float(f64),
    Int(i64),
    Text(String),
}

impl Num {
    pub fn value(&self) -> Result<f64> {
        let v = match self {
            Num::Float(x) => *x,
            Num::Int(i) => *i as f64,
            Num::Text(s) => parse_number(s)?,
        };
        if !v.is_finite() {
            return Err(Error::Parse(format!("non-finite number {v}")));
        }
        Ok(v)
    }
}

/// Parses `x` or `p/q`.
pub fn parse_number(s: &str) -> Result<f64> {
    let bad = || Error::Parse(format!("cannot read '{s}' as a number"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0.0 {
                return Err(bad());
            }
            Ok(p / q)
        }
        None => s.trim().parse().map_err(|_| bad()),
    }
}

fn values(v: &[Num]) -> Result<Vec<f64>> {
    v.iter().map(Num::value).collect()
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub model: ModelSection,
    pub ratios: RatioSection,
    pub weights: WeightSection,
    pub open_set: OpenSetSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum MapsKind {
    #[default]
    Explicit,
    Packed,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GapWeightPower {
    pub coef: Num,
    pub exponent: Num,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub name: String,
    pub dimension: usize,
    #[serde(default)]
    pub maps: MapsKind,
    pub translations: Option<Vec<Vec<Num>>>,
    /// Row-major orthogonal part per map.
    pub orthogonal: Option<Vec<Vec<Num>>>,
    pub start: Option<Num>,
    /// Gap after image `j` as a multiple of `ρ_j`.
    pub gap: Option<Num>,
    pub gap_weight_power: Option<GapWeightPower>,
    pub anchor: Option<Vec<Num>>,
    pub seed_diameter: Option<Num>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RatioSection {
    Finite {
        values: Vec<Num>,
    },
    Geometric {
        ratio: Num,
        scale: Option<Num>,
    },
    PowerLaw {
        coef: Num,
        exponent: Num,
    },
    HeadGeometric {
        head: Vec<Num>,
        ratio: Num,
        scale: Option<Num>,
    },
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSection {
    Finite {
        values: Vec<Num>,
    },
    Geometric {
        ratio: Num,
    },
    PowerLaw {
        exponent: Num,
    },
    HeadGeometric {
        head: Vec<Num>,
        ratio: Num,
    },
    /// `P_j ∝ ρ_j^β`; `beta = "auto"` (the default) uses the similarity dimension.
    Natural {
        beta: Option<Num>,
    },
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OpenSetSection {
    Box { lo: Vec<Num>, hi: Vec<Num> },
    Polygon { vertices: Vec<[Num; 2]> },
}

#[derive(Clone, Debug, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub depth_tol: Option<f64>,
    pub mass_tol: Option<f64>,
    pub head: Option<usize>,
    pub pairs: Option<usize>,
    pub points: Option<usize>,
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn ratios(&self) -> Result<RatioSequence> {
        match &self.ratios {
            RatioSection::Finite { values: v } => RatioSequence::finite(values(v)?),
            RatioSection::Geometric { ratio, scale } => RatioSequence::geometric(
                scale.as_ref().map_or(Ok(1.0), Num::value)?,
                ratio.value()?,
            ),
            RatioSection::PowerLaw { coef, exponent } => {
                RatioSequence::power_law(coef.value()?, exponent.value()?)
            }
            RatioSection::HeadGeometric { head, ratio, scale } => RatioSequence::head_geometric(
                values(head)?,
                scale.as_ref().map_or(Ok(1.0), Num::value)?,
                ratio.value()?,
            ),
        }
    }

    pub fn weights(&self, ratios: &RatioSequence) -> Result<WeightSequence> {
        match &self.weights {
            WeightSection::Finite { values: v } => WeightSequence::finite(values(v)?),
            WeightSection::Geometric { ratio } => WeightSequence::geometric(ratio.value()?),
            WeightSection::PowerLaw { exponent } => WeightSequence::power_law(exponent.value()?),
            WeightSection::HeadGeometric { head, ratio } => {
                WeightSequence::head_geometric(values(head)?, ratio.value()?)
            }
            WeightSection::Natural { beta } => {
                let b = match beta {
                    None => solve_moran(ratios, 1e-14)?.exponent,
                    Some(Num::Text(s)) if s == "auto" => solve_moran(ratios, 1e-14)?.exponent,
                    Some(n) => n.value()?,
                };
                WeightSequence::natural(ratios, b)
            }
        }
    }

    pub fn open_set(&self) -> Result<OpenSet> {
        let o = match &self.open_set {
            OpenSetSection::Box { lo, hi } => OpenSet::boxed(values(lo)?, values(hi)?)?,
            OpenSetSection::Polygon { vertices } => OpenSet::polygon(
                vertices
                    .iter()
                    .map(|[x, y]| Ok([x.value()?, y.value()?]))
                    .collect::<Result<Vec<_>>>()?,
            )?,
        };
        if o.dim() != self.model.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.model.dimension,
                got: o.dim(),
            });
        }
        Ok(o)
    }

    fn rule(&self) -> Result<MapRule> {
        let m = &self.model;
        match m.maps {
            MapsKind::Explicit => {
                if m.start.is_some() || m.gap.is_some() || m.gap_weight_power.is_some() {
                    return Err(Error::invalid("start/gap keys apply to packed maps only"));
                }
                let translations = m
                    .translations
                    .as_ref()
                    .ok_or_else(|| Error::invalid("explicit maps need translations"))?
                    .iter()
                    .map(|t| values(t))
                    .collect::<Result<Vec<_>>>()?;
                let orthogonals = m
                    .orthogonal
                    .as_ref()
                    .map(|o| o.iter().map(|q| values(q)).collect::<Result<Vec<_>>>())
                    .transpose()?;
                Ok(MapRule::Explicit {
                    translations,
                    orthogonals,
                })
            }
            MapsKind::Packed => {
                if m.translations.is_some() || m.orthogonal.is_some() {
                    return Err(Error::invalid("packed maps take no translations"));
                }
                let gaps = match (&m.gap, &m.gap_weight_power) {
                    (Some(_), Some(_)) => {
                        return Err(Error::invalid("give either gap or gap_weight_power"))
                    }
                    (Some(g), None) => GapSchedule::Proportional(g.value()?),
                    (None, Some(p)) => GapSchedule::WeightPower {
                        coef: p.coef.value()?,
                        exponent: p.exponent.value()?,
                    },
                    (None, None) => GapSchedule::Proportional(0.0),
                };
                Ok(MapRule::Packed {
                    start: m.start.as_ref().map_or(Ok(0.0), Num::value)?,
                    gaps,
                })
            }
        }
    }

    pub fn build(&self) -> Result<IFSModel> {
        let ratios = self.ratios()?;
        let weights = self.weights(&ratios)?;
        let model = IFSModel::new(
            self.model.name.clone(),
            ratios,
            weights,
            self.rule()?,
            self.open_set()?,
        )?;
        match (&self.model.anchor, &self.model.seed_diameter) {
            (None, None) => Ok(model),
            (a, d) => {
                let anchor = match a {
                    Some(a) => values(a)?,
                    None => model.anchor().to_vec(),
                };
                let diam = match d {
                    Some(d) => d.value()?,
                    None => model.seed_diameter(),
                };
                model.with_seed(anchor, diam)
            }
        }
    }
}

pub fn load_model(path: &Path) -> Result<(ModelFile, IFSModel)> {
    let file = ModelFile::load(path)?;
    let model = file.build()?;
    Ok((file, model))
}
