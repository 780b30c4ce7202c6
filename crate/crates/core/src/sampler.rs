//! Sampling from the self-similar measure `μ` by drawing random words, and
//! discretizing `μ` onto a grid of cells.

use std::collections::HashMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::ifs::cylinder::{enumerate_stopping_set, CylinderIndex};
use crate::ifs::map::AffineMap;
use crate::ifs::model::IFSModel;
use crate::ifs::sequences::WeightSequence;

/// Maximum number of letters drawn for one sample.
pub const DEPTH_BUDGET: usize = 10_000;

/// The RNG stream for sample `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Smallest `j` with `CDF(j) > u`.
pub fn sample_index(weights: &WeightSequence, u: f64) -> usize {
    weights.sample_index(u)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplePoint {
    pub coords: Vec<f64>,
    pub word_used: CylinderIndex,
    /// `ρ_J · |E_0|`, a bound on the distance to the support point the word codes.
    pub position_error: f64,
}

/// Draws letters until `ρ_J |E_0| ≤ depth_tol`, composing the maps into
/// `composed` and pushing letters into `word`. Returns `P_J`.
fn draw_word<R: Rng>(
    model: &IFSModel,
    depth_tol: f64,
    rng: &mut R,
    composed: &mut AffineMap,
    word: &mut Vec<usize>,
) -> Result<f64> {
    let diam = model.seed_diameter();
    let weights = model.weights();
    let mut mass = 1.0;
    while composed.scale() * diam > depth_tol {
        if word.len() >= DEPTH_BUDGET {
            return Err(Error::DepthBudget(DEPTH_BUDGET));
        }
        let j = weights.sample_index(rng.gen::<f64>());
        let map = model.map(j)?;
        composed.then_apply_inner(map.ratio(), map.orthogonal(), map.translation());
        mass *= weights.weight(j);
        word.push(j);
    }
    Ok(mass)
}

/// One point of `K` distributed approximately by `μ`.
pub fn sample_point<R: Rng>(model: &IFSModel, depth_tol: f64, rng: &mut R) -> Result<SamplePoint> {
    if !(depth_tol > 0.0) {
        return Err(Error::invalid("depth_tol must be positive"));
    }
    let mut composed = AffineMap::identity(model.dim());
    let mut word = Vec::new();
    let mass = draw_word(model, depth_tol, rng, &mut composed, &mut word)?;
    let coords = composed.apply(model.anchor())?;
    let rho = composed.scale();
    Ok(SamplePoint {
        coords,
        position_error: rho * model.seed_diameter(),
        word_used: CylinderIndex {
            word,
            rho,
            mass,
            composed,
        },
    })
}

/// Coordinates only, without keeping the word. Used by the estimators.
pub(crate) fn sample_coords<R: Rng>(
    model: &IFSModel,
    depth_tol: f64,
    rng: &mut R,
    scratch: &mut (AffineMap, Vec<usize>),
    out: &mut [f64],
) -> Result<()> {
    let (composed, word) = scratch;
    *composed = AffineMap::identity(model.dim());
    word.clear();
    draw_word(model, depth_tol, rng, composed, word)?;
    composed.apply_into(model.anchor(), out);
    Ok(())
}

/// `n` independent samples; sample `i` uses stream `i` of `seed`, so the
/// cloud does not depend on the worker count.
pub fn sample_cloud(
    model: &IFSModel,
    n: usize,
    depth_tol: f64,
    seed: u64,
    exec: Exec,
) -> Result<Vec<SamplePoint>> {
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    exec.map(n, |i| {
        sample_point(model, depth_tol, &mut stream(seed, i as u64))
    })
    .into_iter()
    .collect()
}

/// Coordinates of `n` samples drawn exactly as in [`sample_cloud`].
pub fn sample_cloud_coords(
    model: &IFSModel,
    n: usize,
    depth_tol: f64,
    seed: u64,
    exec: Exec,
) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    if !(depth_tol > 0.0) {
        return Err(Error::invalid("depth_tol must be positive"));
    }
    let d = model.dim();
    exec.map(n, |i| {
        let mut scratch = (AffineMap::identity(d), Vec::new());
        let mut out = vec![0.0; d];
        sample_coords(
            model,
            depth_tol,
            &mut stream(seed, i as u64),
            &mut scratch,
            &mut out,
        )?;
        Ok(out)
    })
    .into_iter()
    .collect()
}

/// Writes a cloud as CSV with columns `x1..xd, rho_J, word_len`.
pub fn write_cloud_csv<W: Write>(points: &[SamplePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let d = points.first().map_or(0, |p| p.coords.len());
    let mut header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    header.push("rho_J".into());
    header.push("word_len".into());
    w.write_record(&header).map_err(io_err)?;
    for p in points {
        let mut row: Vec<String> = p.coords.iter().map(|x| format!("{x:.16e}")).collect();
        row.push(format!("{:.16e}", p.word_used.rho));
        row.push(p.word_used.len().to_string());
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush()
        .map_err(|e| Error::Invalid(format!("write failed: {e}")))?;
    Ok(())
}

pub(crate) fn io_err(e: csv::Error) -> Error {
    Error::Invalid(format!("write failed: {e}"))
}

/// `μ` deposited on a grid of side `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct CellMeasure {
    pub h: f64,
    pub dim: usize,
    /// Cell `k` is `Π [k_i h, (k_i + 1) h)`.
    pub cells: HashMap<Vec<i64>, f64>,
    pub total_mass: f64,
    /// Mass not deposited because the stopping-set head was truncated.
    pub dropped: f64,
    /// Largest distance between a deposited point and the cylinder it stands for.
    pub displacement: f64,
}

impl CellMeasure {
    pub fn from_cells(
        h: f64,
        dim: usize,
        cells: HashMap<Vec<i64>, f64>,
        displacement: f64,
    ) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::invalid("cell size must be positive"));
        }
        if cells.values().any(|m| !(*m >= 0.0)) {
            return Err(Error::invalid("cell masses must be non-negative"));
        }
        if cells.keys().any(|k| k.len() != dim) {
            return Err(Error::invalid("cell index of the wrong dimension"));
        }
        let total_mass = cells.values().sum();
        Ok(CellMeasure {
            h,
            dim,
            cells,
            total_mass,
            dropped: 0.0,
            displacement,
        })
    }

    /// Multiplies every cell mass by `lambda`.
    pub fn scaled(&self, lambda: f64) -> CellMeasure {
        let mut out = self.clone();
        for m in out.cells.values_mut() {
            *m *= lambda;
        }
        out.total_mass *= lambda;
        out
    }

    pub fn cell_of(&self, x: &[f64]) -> Vec<i64> {
        x.iter().map(|v| (v / self.h).floor() as i64).collect()
    }
}

/// Deposits the mass of every word of the `Λ` head at resolution `h` into
/// the cell containing the image of the anchor.
pub fn discretize(model: &IFSModel, h: f64, mass_tol: f64) -> Result<CellMeasure> {
    if !(h > 0.0) {
        return Err(Error::invalid("resolution must be positive"));
    }
    let diam = model.seed_diameter();
    let t = h / diam;
    if t >= 1.0 {
        return Err(Error::invalid(format!(
            "resolution {h} is not below the seed diameter {diam}"
        )));
    }
    let set = enumerate_stopping_set(model, t, mass_tol)?;
    let mut cells: HashMap<Vec<i64>, f64> = HashMap::new();
    let mut displacement = 0.0f64;
    let mut point = vec![0.0; model.dim()];
    for c in &set.words {
        c.composed.apply_into(model.anchor(), &mut point);
        let key: Vec<i64> = point.iter().map(|v| (v / h).floor() as i64).collect();
        *cells.entry(key).or_insert(0.0) += c.mass;
        displacement = displacement.max(c.rho * diam);
    }
    let total_mass = cells.values().sum();
    Ok(CellMeasure {
        h,
        dim: model.dim(),
        cells,
        total_mass,
        dropped: (1.0 - set.retained_mass).max(0.0),
        displacement,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;
    use approx::assert_relative_eq;

    #[test]
    fn sample_index_examples() {
        let two = WeightSequence::finite(vec![0.5, 0.5]).unwrap();
        assert_eq!(sample_index(&two, 0.25), 1);
        let g = WeightSequence::geometric(0.5).unwrap();
        assert_eq!(sample_index(&g, 0.75), 3);
        assert_eq!(sample_index(&g, 0.74), 2);
        assert_eq!(sample_index(&g, 0.0), 1);
    }

    #[test]
    fn coarse_tolerance_returns_anchor() {
        let m = families::gapped().unwrap();
        let p = sample_point(&m, 1.0, &mut stream(1, 0)).unwrap();
        assert_eq!(p.coords, m.anchor().to_vec());
        assert!(p.word_used.is_empty());
        assert_eq!(p.position_error, 1.0);
    }

    #[test]
    fn cantor_digits_avoid_one() {
        let m = families::cantor().unwrap();
        let cloud = sample_cloud_coords(&m, 100_000, 1e-6, 7, Exec::default()).unwrap();
        for x in cloud {
            // Ternary digits down to 3^-12 ≥ 1e-6.
            let mut v = x[0];
            for _ in 0..12 {
                v *= 3.0;
                let digit = v.floor();
                assert!(digit == 0.0 || digit == 2.0, "x = {}", x[0]);
                v -= digit;
            }
        }
    }

    #[test]
    fn position_error_within_tolerance() {
        let m = families::powerlaw().unwrap();
        let cloud = sample_cloud(&m, 2000, 1e-5, 3, Exec::default()).unwrap();
        for p in &cloud {
            assert!(p.position_error <= 1e-5);
            assert!(m.open_set().contains_closed(&p.coords, 1e-5));
            let rebuilt = crate::ifs::word_map(&m, &p.word_used.word).unwrap();
            assert_relative_eq!(rebuilt.rho, p.word_used.rho, max_relative = 1e-13);
        }
    }

    #[test]
    fn geometric_mean_matches_fixed_point_equation() {
        // m = Σ P_j (ρ_j m + b_j) ⇒ m = Σ P_j b_j / (1 − Σ P_j ρ_j).
        let model = families::geometric2().unwrap();
        let mut pb = 0.0;
        let mut pr = 0.0;
        for j in 1..200 {
            let map = model.map(j).unwrap();
            let p = model.weights().weight(j);
            pb += p * map.translation()[0];
            pr += p * map.ratio();
        }
        let exact = pb / (1.0 - pr);
        let n = 1_000_000;
        let cloud = sample_cloud_coords(&model, n, 1e-9, 11, Exec::default()).unwrap();
        let xs: Vec<f64> = cloud.iter().map(|p| p[0]).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - exact).abs() < 4.0 * se, "{mean} vs {exact} ± {se}");
    }

    #[test]
    fn cloud_is_deterministic_and_scheduler_independent() {
        let m = families::cantor().unwrap();
        let a = sample_cloud(&m, 500, 1e-6, 5, Exec::Sequential).unwrap();
        let b = sample_cloud(&m, 500, 1e-6, 5, Exec::Parallel).unwrap();
        assert_eq!(a, b);
        assert!(sample_cloud(&m, 0, 1e-6, 5, Exec::Sequential).is_err());
    }

    #[test]
    fn cantor_left_third_has_half_the_mass() {
        let m = families::cantor().unwrap();
        let n = 100_000;
        let cloud = sample_cloud_coords(&m, n, 1e-7, 9, Exec::default()).unwrap();
        let frac = cloud.iter().filter(|p| p[0] <= 1.0 / 3.0).count() as f64 / n as f64;
        let se = (0.25 / n as f64).sqrt();
        assert!((frac - 0.5).abs() < 3.0 * se, "{frac}");
    }

    #[test]
    fn self_similarity_of_empirical_measure() {
        // μ(B) = Σ_j P_j μ(S_j^{-1} B) for B = [0.1, 0.3] on the three-map family.
        let m = families::three_map().unwrap();
        let n = 200_000;
        let cloud = sample_cloud_coords(&m, n, 1e-8, 13, Exec::default()).unwrap();
        let mu = |a: f64, b: f64| {
            cloud.iter().filter(|p| p[0] >= a && p[0] <= b).count() as f64 / n as f64
        };
        let (a, b) = (0.1, 0.3);
        let lhs = mu(a, b);
        let mut rhs = 0.0;
        for j in 1..=3 {
            let s = m.map(j).unwrap();
            let (r, t) = (s.ratio(), s.translation()[0]);
            rhs += m.weights().weight(j) * mu((a - t) / r, (b - t) / r);
        }
        let se = (lhs * (1.0 - lhs) / n as f64).sqrt() * 2.0;
        assert!((lhs - rhs).abs() < 4.0 * se, "{lhs} vs {rhs}");
    }

    #[test]
    fn dyadic_cells_at_quarter() {
        let m = families::dyadic_lebesgue().unwrap();
        let cm = discretize(&m, 0.25, 1e-12).unwrap();
        assert_eq!(cm.cells.len(), 4);
        for k in 0..4 {
            assert_relative_eq!(cm.cells[&vec![k]], 0.25);
        }
        assert_relative_eq!(cm.total_mass, 1.0);
    }

    #[test]
    fn cantor_cells_at_ninth() {
        let m = families::cantor().unwrap();
        let cm = discretize(&m, 1.0 / 9.0, 1e-12).unwrap();
        let mut keys: Vec<i64> = cm.cells.keys().map(|k| k[0]).collect();
        keys.sort();
        assert_eq!(keys, vec![0, 2, 6, 8]);
        for v in cm.cells.values() {
            assert_relative_eq!(*v, 0.25, max_relative = 1e-12);
        }
    }

    #[test]
    fn loose_mass_tolerance_keeps_half() {
        let m = families::geometric2().unwrap();
        let cm = discretize(&m, 1e-3, 0.5).unwrap();
        assert!(cm.total_mass >= 0.5 && cm.total_mass <= 1.0 + 1e-12);
        assert!(cm.dropped <= 0.5);
    }

    #[test]
    fn csv_columns() {
        let m = families::planar_pair().unwrap();
        let cloud = sample_cloud(&m, 3, 1e-3, 1, Exec::Sequential).unwrap();
        let mut buf = Vec::new();
        write_cloud_csv(&cloud, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x1,x2,rho_J,word_len\n"));
        assert_eq!(text.lines().count(), 4);
    }
}
