use crate::conditions::osc::pairwise_distances;
use crate::conditions::{fmt_num, ConditionId, ConditionReport, Verdict};
use crate::dimension::psi_series;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::ifs::model::IFSModel;
use crate::series::Accumulator;

/// Increments of the partial sums must shrink at least this fast per map.
pub const CONDITION6_RATE: f64 = 0.95;

pub fn default_m_grid() -> Vec<usize> {
    (1..=12).map(|i| 4 * i).collect()
}

/// `T_m = Σ_{j≠k≤m} P_j P_k d_{jk}^{-β}` on `m_grid`, with a geometric decay
/// fit of the increments.
pub fn condition6_diagnostic(
    model: &IFSModel,
    beta: f64,
    m_grid: &[usize],
) -> Result<ConditionReport> {
    let mut grid: Vec<usize> = m_grid.iter().copied().filter(|&m| m >= 2).collect();
    grid.sort_unstable();
    grid.dedup();
    let finite = model.num_maps();
    if let Some(n) = finite {
        grid.retain(|&m| m < n);
        grid.push(n);
    }
    let m_max = *grid
        .last()
        .ok_or_else(|| Error::invalid("m grid needs a value of at least 2"))?;
    let dist = pairwise_distances(model, m_max)?;
    if let Some(&(j, k)) = dist.violations.first() {
        return Ok(
            ConditionReport::new(ConditionId::DistanceSum, Verdict::Fails, m_max)
                .with("pair", format!("{j},{k}"))
                .with("distance", fmt_num(dist.get(j, k))),
        );
    }
    let w = model.weights();
    let mut acc = Accumulator::default();
    let mut sums = Vec::with_capacity(grid.len());
    let mut next = grid.iter().peekable();
    for k in 2..=m_max {
        let mut row = Accumulator::default();
        for j in 1..k {
            row.add(w.weight(j) * dist.get(j, k).powf(-beta));
        }
        acc.add(2.0 * w.weight(k) * row.value());
        if next.peek() == Some(&&k) {
            next.next();
            sums.push((k, acc.value()));
        }
    }
    let (m_last, t_last) = *sums.last().unwrap();
    let report = |v| ConditionReport::new(ConditionId::DistanceSum, v, m_last);
    let mut out = if finite.is_some() {
        report(Verdict::HoldsOnHead).with("sum", fmt_num(t_last))
    } else {
        // Mean increment per map between consecutive grid points.
        let pts: Vec<(f64, f64)> = sums
            .windows(2)
            .filter_map(|w| {
                let inc = (w[1].1 - w[0].1) / (w[1].0 - w[0].0) as f64;
                (inc > 0.0).then(|| (w[1].0 as f64, inc.ln()))
            })
            .collect();
        if pts.len() < 2 {
            report(Verdict::Inconclusive)
                .with("partial_sum", fmt_num(t_last))
                .with("reason", "fewer than two positive increments")
        } else {
            let rate = fit_slope(&pts).exp();
            let v = if rate < CONDITION6_RATE {
                Verdict::HoldsOnHead
            } else {
                Verdict::Inconclusive
            };
            report(v)
                .with("partial_sum", fmt_num(t_last))
                .with("rate", fmt_num(rate))
        }
    };
    for (m, t) in &sums {
        out = out.with(&format!("T_{m}"), fmt_num(*t));
    }
    Ok(out)
}

fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// `q(λ) = Σ_{ρ_j ≤ λ} P_j² ρ_j^{-β}`.
///
/// Beyond the non-monotone head the ratios are non-increasing, so the
/// tail is a certified sum from the first index with `ρ_j ≤ λ`.
pub fn q_lambda(model: &IFSModel, beta: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::invalid("λ must be positive"));
    }
    let ratios = model.ratios();
    let weights = model.weights();
    let series = psi_series(ratios, weights, beta);
    if !series.converges() {
        return Err(Error::Divergent {
            exponent: beta,
            abscissa: crate::dimension::beta_abscissa(ratios, weights),
        });
    }
    let term = |j: usize| {
        let p = weights.weight(j);
        p * p * ratios.ratio(j).unwrap().powf(-beta)
    };
    let mut acc = Accumulator::default();
    let head = match ratios.len() {
        Some(n) => n,
        None => ratios.monotone_from().max(weights.monotone_from()),
    };
    for j in 1..=head {
        if ratios.ratio(j).unwrap() <= lambda {
            acc.add(term(j));
        }
    }
    if ratios.len().is_none() {
        let first = first_at_most(|j| ratios.ratio(j).unwrap(), head + 1, lambda);
        acc.add(series.sum_from_relative(first, 1e-13).mid());
    }
    Ok(acc.value())
}

/// Smallest `j ≥ start` with `f(j) ≤ λ` for non-increasing `f`.
fn first_at_most(f: impl Fn(usize) -> f64, start: usize, lambda: f64) -> usize {
    if f(start) <= lambda {
        return start;
    }
    let mut lo = start;
    let mut step = 1usize;
    let mut hi = loop {
        let cand = start.saturating_add(step);
        if f(cand) <= lambda || cand == usize::MAX {
            break cand;
        }
        lo = cand;
        step = step.saturating_mul(2);
    };
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if f(mid) <= lambda {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

pub fn default_eps_grid() -> Vec<f64> {
    (1..=19).map(|i| 0.05 * i as f64).collect()
}

/// Geometric grid with 64 points per decade over `[min head ratio, 1]`.
pub fn default_lambda_grid(model: &IFSModel, head_m: usize) -> Vec<f64> {
    let m = model.num_maps().map_or(head_m, |n| n.min(head_m)).max(1);
    let lo = (1..=m)
        .map(|j| model.ratios().ratio(j).unwrap())
        .fold(1.0, f64::min);
    let decades = -lo.log10();
    let n = (decades * 64.0).ceil() as usize;
    (0..=n).map(|i| 10f64.powf(-(i as f64) / 64.0)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeasiblePair {
    pub eps: f64,
    pub delta: f64,
    /// `(1 − δ) ε^β`, the bound the stopping-set argument actually yields.
    pub margin: f64,
    /// `(δ^{-1} − 1) ε^β`; infinite when `δ̂ = 0`.
    pub inverse_margin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Condition7Search {
    pub beta: f64,
    /// `(ε, δ̂(ε))` for every `ε` with at least one usable `λ`.
    pub deltas: Vec<(f64, f64)>,
    pub feasible: Vec<FeasiblePair>,
    /// Feasible pair with the largest margin.
    pub best: Option<FeasiblePair>,
    /// Grid points `λ` dropped because `q(λ) = 0`.
    pub excluded: usize,
    pub report: ConditionReport,
}

/// For each `ε`, `δ̂(ε) = max_λ q(ελ) / q(λ)` over `λ` with `q(λ) > 0`.
pub fn condition7_search(
    model: &IFSModel,
    beta: f64,
    eps_grid: &[f64],
    lambda_grid: &[f64],
    exec: Exec,
) -> Result<Condition7Search> {
    if eps_grid
        .iter()
        .chain(lambda_grid)
        .any(|x| !(*x > 0.0 && *x <= 1.0))
    {
        return Err(Error::invalid("ε and λ grids must lie in (0,1]"));
    }
    if eps_grid.iter().any(|e| *e >= 1.0) {
        return Err(Error::invalid("ε must be below 1"));
    }
    let q_lam = exec
        .map_slice(lambda_grid, |&l| q_lambda(model, beta, l))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let usable: Vec<(f64, f64)> = lambda_grid
        .iter()
        .zip(&q_lam)
        .filter(|(_, q)| **q > 0.0)
        .map(|(l, q)| (*l, *q))
        .collect();
    let excluded = lambda_grid.len() - usable.len();
    let per_eps = exec
        .map_slice(eps_grid, |&eps| -> Result<Option<f64>> {
            let mut worst: Option<f64> = None;
            for &(l, q) in &usable {
                let r = q_lambda(model, beta, eps * l)? / q;
                worst = Some(worst.map_or(r, |w| w.max(r)));
            }
            Ok(worst)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let deltas: Vec<(f64, f64)> = eps_grid
        .iter()
        .zip(per_eps)
        .filter_map(|(e, d)| d.map(|d| (*e, d)))
        .collect();
    let feasible: Vec<FeasiblePair> = deltas
        .iter()
        .filter(|(_, d)| *d < 1.0)
        .map(|&(eps, delta)| FeasiblePair {
            eps,
            delta,
            margin: (1.0 - delta) * eps.powf(beta),
            inverse_margin: (1.0 / delta - 1.0) * eps.powf(beta),
        })
        .collect();
    let best = feasible
        .iter()
        .copied()
        .max_by(|a, b| a.margin.total_cmp(&b.margin));
    // Maps resolved by the grid: those with ρ_j ≥ min λ.
    let lam_min = lambda_grid.iter().copied().fold(1.0, f64::min);
    let ratios = model.ratios();
    let head = match ratios.len() {
        Some(n) => (1..=n)
            .filter(|&j| ratios.ratio(j).unwrap() >= lam_min)
            .count(),
        None => {
            let h = ratios.monotone_from();
            first_at_most(|j| ratios.ratio(j).unwrap(), h + 1, lam_min * (1.0 - 1e-12)) - 1
        }
    };
    let report = match (&best, deltas.iter().min_by(|a, b| a.1.total_cmp(&b.1))) {
        (Some(b), _) => ConditionReport::new(ConditionId::TailRatio, Verdict::HoldsOnHead, head)
            .with("eps", fmt_num(b.eps))
            .with("delta", fmt_num(b.delta))
            .with("margin", fmt_num(b.margin))
            .with("inverse_margin", fmt_num(b.inverse_margin))
            .with("feasible_eps", feasible.len()),
        (None, Some(&(eps, delta))) => {
            ConditionReport::new(ConditionId::TailRatio, Verdict::Fails, head)
                .with("eps", fmt_num(eps))
                .with("smallest_delta", fmt_num(delta))
        }
        (None, None) => ConditionReport::new(ConditionId::TailRatio, Verdict::Inconclusive, head)
            .with("reason", "q vanishes on the whole λ grid"),
    }
    .with("lambda_points", lambda_grid.len())
    .with("excluded_lambda", excluded);
    Ok(Condition7Search {
        beta,
        deltas,
        feasible,
        best,
        excluded,
        report,
    })
}
