use crate::error::{Error, Result};
use crate::mqv::estimate::{MQVEstimate, MqvEstimator};

/// `base^e` for `e = e_start, e_start ∓ 1/per_unit, …, e_end`.
pub fn geometric_grid(base: f64, e_start: f64, e_end: f64, per_unit: usize) -> Result<Vec<f64>> {
    if !(base > 1.0) || per_unit == 0 {
        return Err(Error::invalid(
            "grid needs base > 1 and at least one point per unit",
        ));
    }
    let steps = ((e_end - e_start).abs() * per_unit as f64).round() as usize;
    let sign = if e_end >= e_start { 1.0 } else { -1.0 };
    Ok((0..=steps)
        .map(|i| base.powf(e_start + sign * i as f64 / per_unit as f64))
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbePoint {
    pub estimate: MQVEstimate,
    /// `D(t) = V(t) − V(ρt)` when `ρt` is on the grid.
    pub diff: Option<f64>,
    /// `√(se(t)² + se(ρt)²)`.
    pub diff_err: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicityReport {
    pub rho: f64,
    /// Grid points per period.
    pub k: usize,
    /// Decreasing in `t`.
    pub points: Vec<ProbePoint>,
    /// `[t_min, 10 t_min]`.
    pub last_decade: (f64, f64),
    pub max_abs_diff: f64,
    /// Combined error at the point attaining `max_abs_diff`.
    pub max_diff_err: f64,
    /// Largest `|D| / err` over the last decade.
    pub worst_ratio: f64,
    /// `max V − min V` over the last decade.
    pub drift: f64,
    pub drift_err: f64,
}

impl PeriodicityReport {
    /// Whether every `|D(t)|` in the last decade is at most `factor` times
    /// its combined error.
    pub fn within(&self, factor: f64) -> bool {
        self.points
            .iter()
            .filter(|p| p.estimate.t <= self.last_decade.1 * (1.0 + 1e-12))
            .filter_map(|p| Some((p.diff?, p.diff_err?)))
            .all(|(d, e)| d.abs() <= factor * e)
    }
}

/// Evaluates `D(t) = V(t) − V(ρt)` on a geometric grid whose ratio is
/// `ρ^{1/k}`, `k ≥ 4`.
pub fn periodicity_probe(
    est: &dyn MqvEstimator,
    t_grid: &[f64],
    rho: f64,
) -> Result<PeriodicityReport> {
    if !(rho > 1.0) {
        return Err(Error::invalid("period ρ must exceed 1"));
    }
    let mut ts = t_grid.to_vec();
    if ts.len() < 2 || ts.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
        return Err(Error::invalid(
            "t grid must have at least two points in (0,1)",
        ));
    }
    ts.sort_by(|a, b| b.total_cmp(a));
    let step = ts[0] / ts[1];
    for w in ts.windows(2) {
        if ((w[0] / w[1]) / step - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("t grid is not geometric"));
        }
    }
    let kf = rho.ln() / step.ln();
    let k = kf.round() as usize;
    if (kf - k as f64).abs() > 1e-6 || k < 4 {
        return Err(Error::invalid(format!(
            "grid ratio {step} is not ρ^(1/k) with integer k ≥ 4 (k ≈ {kf})"
        )));
    }
    let estimates = ts
        .iter()
        .map(|&t| est.estimate(t))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<ProbePoint> = (0..estimates.len())
        .map(|i| {
            let (diff, diff_err) = if i >= k {
                let (a, b) = (&estimates[i], &estimates[i - k]);
                (
                    Some(a.value - b.value),
                    Some((a.stderr.powi(2) + b.stderr.powi(2)).sqrt()),
                )
            } else {
                (None, None)
            };
            ProbePoint {
                estimate: estimates[i].clone(),
                diff,
                diff_err,
            }
        })
        .collect();
    let t_min = *ts.last().unwrap();
    let decade = (t_min, 10.0 * t_min);
    let in_decade: Vec<&ProbePoint> = points
        .iter()
        .filter(|p| p.estimate.t <= decade.1 * (1.0 + 1e-12))
        .collect();
    let (mut max_abs_diff, mut max_diff_err, mut worst_ratio) = (0.0f64, 0.0f64, 0.0f64);
    for p in &in_decade {
        if let (Some(d), Some(e)) = (p.diff, p.diff_err) {
            if d.abs() >= max_abs_diff {
                max_abs_diff = d.abs();
                max_diff_err = e;
            }
            let r = if e > 0.0 {
                d.abs() / e
            } else if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            worst_ratio = worst_ratio.max(r);
        }
    }
    let vmax = in_decade
        .iter()
        .map(|p| p.estimate.value)
        .fold(f64::MIN, f64::max);
    let vmin = in_decade
        .iter()
        .map(|p| p.estimate.value)
        .fold(f64::MAX, f64::min);
    let smax = in_decade
        .iter()
        .map(|p| p.estimate.stderr)
        .fold(0.0, f64::max);
    Ok(PeriodicityReport {
        rho,
        k,
        points,
        last_decade: decade,
        max_abs_diff,
        max_diff_err,
        worst_ratio,
        drift: vmax - vmin,
        drift_err: std::f64::consts::SQRT_2 * smax,
    })
}
