use crate::conditions::geometry::{images, Shape};
use crate::conditions::{fmt_num, ConditionId, ConditionReport, Verdict};
use crate::error::{Error, Result};
use crate::ifs::model::IFSModel;
use crate::series::Accumulator;

fn head_size(model: &IFSModel, head_m: usize) -> Result<usize> {
    if head_m == 0 {
        return Err(Error::invalid("head size must be positive"));
    }
    Ok(model.num_maps().map_or(head_m, |n| n.min(head_m)))
}

fn scale(model: &IFSModel) -> f64 {
    model.open_set().diameter()
}

/// Open set condition on `S_1, …, S_m`: containment in `O` and pairwise
/// disjoint images.
pub fn check_osc(model: &IFSModel, head_m: usize) -> Result<ConditionReport> {
    let m = head_size(model, head_m)?;
    let tol = 1e-12 * scale(model);
    let o = Shape::of_open_set(model.open_set());
    let imgs = images(model, m)?;
    for (j, img) in imgs.iter().enumerate() {
        if !o.contains(img, tol) {
            return Ok(
                ConditionReport::new(ConditionId::Osc, Verdict::Fails, m).with("outside", j + 1)
            );
        }
    }
    for i in 0..m {
        for j in i + 1..m {
            if imgs[i].interiors_overlap(&imgs[j], tol) {
                return Ok(ConditionReport::new(ConditionId::Osc, Verdict::Fails, m)
                    .with("pair", format!("{},{}", i + 1, j + 1)));
            }
        }
    }
    Ok(ConditionReport::new(
        ConditionId::Osc,
        Verdict::HoldsOnHead,
        m,
    ))
}

/// Distances `d_{jk}` between the closures of `S_j(O)` and `S_k(O)`, `j, k ≤ m`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    pub m: usize,
    values: Vec<f64>,
    /// Pairs `j < k` whose closures touch.
    pub violations: Vec<(usize, usize)>,
}

impl DistanceMatrix {
    /// `d_{jk}` (one-based); the diagonal reads 0.
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[(j - 1) * self.m + (k - 1)]
    }
}

/// Packed images sit in order along the interval, so
/// `d_{j,k+1} = d_{jk} + L(ρ_k + g_k)` with `d_{j,j+1} = L g_j`; no
/// cancellation occurs however small the images are.
fn packed_distances(model: &IFSModel, m: usize) -> Option<Vec<f64>> {
    let p = model.packing()?;
    let l = p.length();
    let rho: Vec<f64> = (1..=m).map(|j| model.ratios().ratio(j).unwrap()).collect();
    let gap: Vec<f64> = (1..=m).map(|j| p.gap(j)).collect();
    let mut v = vec![0.0; m * m];
    for j in 0..m {
        let mut acc = Accumulator::default();
        for k in j + 1..m {
            if k > j + 1 {
                acc.add(rho[k - 1]);
            }
            acc.add(gap[k - 1]);
            let d = l * acc.value();
            v[j * m + k] = d;
            v[k * m + j] = d;
        }
    }
    Some(v)
}

pub fn pairwise_distances(model: &IFSModel, head_m: usize) -> Result<DistanceMatrix> {
    let m = head_size(model, head_m)?;
    let (values, threshold) = match packed_distances(model, m) {
        Some(v) => (v, 0.0),
        None => {
            let imgs = images(model, m)?;
            let mut v = vec![0.0; m * m];
            for j in 0..m {
                for k in j + 1..m {
                    let d = imgs[j].distance(&imgs[k]);
                    v[j * m + k] = d;
                    v[k * m + j] = d;
                }
            }
            (v, 4.0 * f64::EPSILON * scale(model))
        }
    };
    let violations = (0..m)
        .flat_map(|j| (j + 1..m).map(move |k| (j, k)))
        .filter(|&(j, k)| values[j * m + k] <= threshold)
        .map(|(j, k)| (j + 1, k + 1))
        .collect();
    Ok(DistanceMatrix {
        m,
        values,
        violations,
    })
}

/// Strong open set condition on the head: disjoint closures of the images
/// and a point of `K` inside `O`. The point is searched among the fixed
/// points of `S_j` and `S_i ∘ S_j`, all of which lie in `K`.
pub fn check_strong_osc(model: &IFSModel, head_m: usize) -> Result<ConditionReport> {
    let osc = check_osc(model, head_m)?;
    let m = osc.head;
    if osc.verdict == Verdict::Fails {
        return Ok(ConditionReport {
            condition: ConditionId::StrongOsc,
            ..osc
        });
    }
    let dist = pairwise_distances(model, m)?;
    if let Some(&(j, k)) = dist.violations.first() {
        return Ok(
            ConditionReport::new(ConditionId::StrongOsc, Verdict::Fails, m)
                .with("pair", format!("{j},{k}"))
                .with("distance", fmt_num(dist.get(j, k))),
        );
    }
    let min_d = (1..=m)
        .flat_map(|j| (j + 1..=m).map(move |k| (j, k)))
        .map(|(j, k)| dist.get(j, k))
        .fold(f64::INFINITY, f64::min);
    let o = model.open_set();
    let mut candidates = Vec::new();
    for j in 1..=m.min(16) {
        candidates.push((format!("{j}"), model.map(j)?.fixed_point()));
    }
    for i in 1..=m.min(8) {
        for j in 1..=m.min(8) {
            let composed = model
                .map(i)?
                .as_affine()
                .compose(model.map(j)?.as_affine())?;
            let p = crate::ifs::map::SimilarityMap::new(
                composed.scale(),
                composed.orthogonal().to_vec(),
                composed.translation().to_vec(),
            )?
            .fixed_point();
            candidates.push((format!("{i}{j}"), p));
        }
    }
    let base = ConditionReport::new(ConditionId::StrongOsc, Verdict::HoldsOnHead, m);
    let base = if min_d.is_finite() {
        base.with("min_distance", fmt_num(min_d))
    } else {
        base
    };
    let inset = -1e-9 * scale(model);
    match candidates
        .into_iter()
        .find(|(_, p)| o.contains_closed(p, inset))
    {
        Some((word, p)) => Ok(base.with("fixed_point_word", word).with(
            "point",
            p.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(" "),
        )),
        None => Ok(ConditionReport {
            verdict: Verdict::Inconclusive,
            ..base
        }
        .with("reason", "no fixed point found inside O")),
    }
}
