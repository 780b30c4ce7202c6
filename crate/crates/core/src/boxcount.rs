//! Box-counting and local mass exponents of sampled point clouds.
//!
//! Both are empirical proxies for the similarity dimension: the box-counting
//! slope of the attractor and the scaling exponent of `μ(B_t(x))`.

use std::io::Write;

use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::ifs::model::IFSModel;
use crate::sampler::{io_err, sample_cloud_coords, stream};

/// Scales whose mean count is below this are too coarse to fit.
pub const MIN_BOXES: f64 = 8.0;
/// Scales whose mean count exceeds `n / SATURATION_DIVISOR` are saturated.
pub const SATURATION_DIVISOR: f64 = 20.0;
pub const DEFAULT_OFFSETS: usize = 8;

/// Number of grid cells of side `eps`, shifted by `offset`, holding at least one point.
pub fn box_count(points: &[Vec<f64>], eps: f64, offset: &[f64]) -> usize {
    let mut keys: Vec<Vec<i64>> = points
        .iter()
        .map(|p| {
            p.iter()
                .zip(offset)
                .map(|(x, o)| ((x - o) / eps).floor() as i64)
                .collect()
        })
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScaleCount {
    pub eps: f64,
    pub mean: f64,
    pub std: f64,
    /// Whether the scale is inside the fitted window.
    pub used: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DimensionFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `(ε_min, ε_max)` of the fitted scales.
    pub window: (f64, f64),
    pub scales: Vec<ScaleCount>,
}

/// Ordinary least squares `y = a + b x`; returns `(b, a, r²)`.
fn ols(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let b = sxy / sxx;
    let r2 = if syy <= 1e-300 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    (b, my - b * mx, r2)
}

/// `extent · 2^{-k}`, `k = 1..=levels`, with `extent` the largest side of
/// the cloud's bounding box.
pub fn default_eps_grid(points: &[Vec<f64>], levels: usize) -> Vec<f64> {
    let d = points.first().map_or(1, Vec::len);
    let extent = (0..d)
        .map(|i| {
            let (lo, hi) = points.iter().fold((f64::MAX, f64::MIN), |(lo, hi), p| {
                (lo.min(p[i]), hi.max(p[i]))
            });
            hi - lo
        })
        .fold(0.0, f64::max);
    let extent = if extent > 0.0 { extent } else { 1.0 };
    (1..=levels)
        .map(|k| extent * 0.5f64.powi(k as i32))
        .collect()
}

/// Slope of `log N̄(ε)` against `log(1/ε)`, with `N̄` averaged over
/// `n_offsets` random grid shifts. Scales with `N̄ < 8` or `N̄ > n/20` are
/// left out of the fit; if every unsaturated scale is coarse (a cloud with
/// a handful of distinct points), all unsaturated scales are fitted.
pub fn estimate_box_dim(
    points: &[Vec<f64>],
    eps_grid: &[f64],
    n_offsets: usize,
    seed: u64,
    exec: Exec,
) -> Result<DimensionFit> {
    let n = points.len();
    if n < 1000 {
        return Err(Error::invalid(format!(
            "need at least 1000 points, got {n}"
        )));
    }
    if eps_grid.len() < 6 || eps_grid.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::invalid("need at least 6 positive scales"));
    }
    if n_offsets == 0 {
        return Err(Error::invalid("need at least one offset"));
    }
    let d = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: p.len(),
        });
    }
    let jobs = eps_grid.len() * n_offsets;
    let counts = exec.map(jobs, |i| {
        let eps = eps_grid[i / n_offsets];
        let mut rng = stream(seed, i as u64);
        let offset: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() * eps).collect();
        box_count(points, eps, &offset) as f64
    });
    let mut scales: Vec<ScaleCount> = eps_grid
        .iter()
        .enumerate()
        .map(|(s, &eps)| {
            let c = &counts[s * n_offsets..(s + 1) * n_offsets];
            let mean = c.iter().sum::<f64>() / n_offsets as f64;
            let var = if n_offsets > 1 {
                c.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n_offsets - 1) as f64
            } else {
                0.0
            };
            ScaleCount {
                eps,
                mean,
                std: var.sqrt(),
                used: false,
            }
        })
        .collect();
    let cap = n as f64 / SATURATION_DIVISOR;
    let unsaturated = |s: &ScaleCount| s.mean <= cap;
    let mut used: Vec<usize> = (0..scales.len())
        .filter(|&i| unsaturated(&scales[i]) && scales[i].mean >= MIN_BOXES)
        .collect();
    if used.is_empty() && scales.iter().all(|s| s.mean < MIN_BOXES || !unsaturated(s)) {
        used = (0..scales.len())
            .filter(|&i| unsaturated(&scales[i]))
            .collect();
    }
    let distinct: Vec<f64> = {
        let mut e: Vec<f64> = used.iter().map(|&i| scales[i].eps).collect();
        e.sort_by(f64::total_cmp);
        e.dedup();
        e
    };
    if distinct.len() < 2 {
        return Err(Error::NoSolution(format!(
            "scale window holds {} distinct scales; widen the grid or add points",
            distinct.len()
        )));
    }
    for &i in &used {
        scales[i].used = true;
    }
    let pts: Vec<(f64, f64)> = used
        .iter()
        .map(|&i| (-scales[i].eps.ln(), scales[i].mean.ln()))
        .collect();
    let (slope, intercept, r_squared) = ols(&pts);
    Ok(DimensionFit {
        slope,
        intercept,
        r_squared,
        window: (distinct[0], *distinct.last().unwrap()),
        scales,
    })
}

/// CSV with columns `eps, N_mean, N_std, used` and a final `slope` row.
pub fn write_boxdim_csv<W: Write>(fit: &DimensionFit, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["eps", "N_mean", "N_std", "used"])
        .map_err(io_err)?;
    for s in &fit.scales {
        w.write_record([
            format!("{:.16e}", s.eps),
            format!("{:.16e}", s.mean),
            format!("{:.16e}", s.std),
            s.used.to_string(),
        ])
        .map_err(io_err)?;
    }
    w.write_record([
        "slope".to_string(),
        format!("{:.16e}", fit.slope),
        format!("{:.16e}", fit.r_squared),
        String::new(),
    ])
    .map_err(io_err)?;
    w.flush().map_err(|e| io_err(csv::Error::from(e)))?;
    Ok(())
}

/// Median of a non-empty list.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Per-center slope of `log μ̂(B_t(x))` against `log t`, with `μ̂` the
/// empirical measure of `reference`. Radii with an empty ball are dropped;
/// centers left with fewer than two radii give no slope.
pub fn local_mass_exponent_at(
    centers: &[Vec<f64>],
    reference: &[Vec<f64>],
    t_grid: &[f64],
    exec: Exec,
) -> Result<Vec<f64>> {
    if t_grid.len() < 2 || t_grid.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::invalid("need at least two positive radii"));
    }
    if reference.is_empty() {
        return Err(Error::invalid("empty reference cloud"));
    }
    let mut sorted = reference.to_vec();
    sorted.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let firsts: Vec<f64> = sorted.iter().map(|p| p[0]).collect();
    let n = sorted.len() as f64;
    let slopes = exec.map_slice(centers, |c| {
        let pts: Vec<(f64, f64)> = t_grid
            .iter()
            .filter_map(|&t| {
                let lo = firsts.partition_point(|x| *x < c[0] - t);
                let hi = firsts.partition_point(|x| *x <= c[0] + t);
                let t2 = t * t;
                let k = sorted[lo..hi]
                    .iter()
                    .filter(|p| p.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum::<f64>() <= t2)
                    .count();
                (k > 0).then(|| (t.ln(), (k as f64 / n).ln()))
            })
            .collect();
        let mut ts: Vec<f64> = pts.iter().map(|p| p.0).collect();
        ts.dedup();
        (ts.len() >= 2).then(|| ols(&pts).0)
    });
    let slopes: Vec<f64> = slopes.into_iter().flatten().collect();
    if slopes.is_empty() {
        return Err(Error::NoSolution(
            "every center met empty balls at all but one radius".into(),
        ));
    }
    Ok(slopes)
}

/// Local mass exponents at `n_centers` points drawn from `μ`, measured
/// against an independent reference cloud of `n_reference` points.
pub fn local_mass_exponent(
    model: &IFSModel,
    n_centers: usize,
    t_grid: &[f64],
    n_reference: usize,
    depth_tol: f64,
    seed: u64,
    exec: Exec,
) -> Result<Vec<f64>> {
    let reference = sample_cloud_coords(model, n_reference, depth_tol, seed, exec)?;
    let centers = sample_cloud_coords(model, n_centers, depth_tol, seed.wrapping_add(1), exec)?;
    local_mass_exponent_at(&centers, &reference, t_grid, exec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families;
    use rand::SeedableRng;

    fn uniform(n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| vec![rng.gen::<f64>()]).collect()
    }

    #[test]
    fn count_examples() {
        assert_eq!(box_count(&[vec![0.3]], 0.01, &[0.0]), 1);
        let pts = vec![vec![0.0], vec![0.5], vec![0.99]];
        assert_eq!(box_count(&pts, 0.5, &[0.0]), 2);
        assert_eq!(box_count(&pts, 1e-6, &[0.0]), 3);
    }

    #[test]
    fn uniform_slope_is_one() {
        let pts = uniform(100_000, 3);
        let grid = default_eps_grid(&pts, 20);
        let fit = estimate_box_dim(&pts, &grid, 8, 1, Exec::default()).unwrap();
        assert!((fit.slope - 1.0).abs() < 0.05, "{}", fit.slope);
        assert!(fit.r_squared > 0.99);
    }

    #[test]
    fn repeated_point_has_slope_zero() {
        let pts = vec![vec![0.25, 0.75]; 2000];
        let grid = default_eps_grid(&pts, 10);
        let fit = estimate_box_dim(&pts, &grid, 4, 1, Exec::Sequential).unwrap();
        // Offsets can split the point's coordinates across cells only when
        // they land exactly on a boundary, which they do not here.
        assert!(fit.slope.abs() < 0.2, "{}", fit.slope);
    }

    #[test]
    fn cantor_slope() {
        let m = families::cantor().unwrap();
        let pts = sample_cloud_coords(&m, 100_000, 1e-9, 5, Exec::default()).unwrap();
        let grid = default_eps_grid(&pts, 24);
        let fit = estimate_box_dim(&pts, &grid, 8, 2, Exec::default()).unwrap();
        assert!(
            (fit.slope - 2f64.ln() / 3f64.ln()).abs() < 0.05,
            "{}",
            fit.slope
        );
    }

    #[test]
    fn rejects_small_inputs() {
        let pts = uniform(999, 1);
        let grid = default_eps_grid(&pts, 10);
        assert!(estimate_box_dim(&pts, &grid, 8, 1, Exec::Sequential).is_err());
        let pts = uniform(2000, 1);
        assert!(estimate_box_dim(&pts, &grid[..5], 8, 1, Exec::Sequential).is_err());
    }

    #[test]
    fn rigid_motion_invariance() {
        let m = families::corner_squares().unwrap();
        let pts = sample_cloud_coords(&m, 50_000, 1e-9, 9, Exec::default()).unwrap();
        let (s, c) = 0.7f64.sin_cos();
        let moved: Vec<Vec<f64>> = pts
            .iter()
            .map(|p| vec![c * p[0] - s * p[1] + 3.0, s * p[0] + c * p[1] - 1.0])
            .collect();
        let grid = default_eps_grid(&pts, 18);
        let a = estimate_box_dim(&pts, &grid, 8, 4, Exec::default()).unwrap();
        let b = estimate_box_dim(&moved, &grid, 8, 4, Exec::default()).unwrap();
        assert!(
            (a.slope - b.slope).abs() < 0.05,
            "{} vs {}",
            a.slope,
            b.slope
        );
        assert!((a.slope - 1.0).abs() < 0.06, "{}", a.slope);
    }

    #[test]
    fn lebesgue_local_exponent() {
        let m = families::dyadic_lebesgue().unwrap();
        let t: Vec<f64> = (2..=6).map(|k| 10f64.powf(-0.5 * k as f64)).collect();
        let slopes = local_mass_exponent(&m, 200, &t, 100_000, 1e-9, 7, Exec::default()).unwrap();
        assert!((median(&slopes) - 1.0).abs() < 0.05, "{}", median(&slopes));
    }

    #[test]
    fn cantor_local_exponent() {
        let m = families::cantor().unwrap();
        let t: Vec<f64> = (1..=8).map(|k| 3f64.powi(-k)).collect();
        let slopes = local_mass_exponent(&m, 200, &t, 100_000, 1e-9, 7, Exec::default()).unwrap();
        let s = 2f64.ln() / 3f64.ln();
        assert!((median(&slopes) - s).abs() < 0.05, "{}", median(&slopes));
    }

    #[test]
    fn single_center_at_anchor() {
        let m = families::cantor().unwrap();
        let reference = sample_cloud_coords(&m, 10_000, 1e-9, 1, Exec::Sequential).unwrap();
        let t = [0.3, 0.1, 0.03];
        let slopes =
            local_mass_exponent_at(&[vec![0.0]], &reference, &t, Exec::Sequential).unwrap();
        assert_eq!(slopes.len(), 1);
    }
}
