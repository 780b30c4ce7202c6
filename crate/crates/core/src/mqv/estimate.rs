use std::fmt;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::ifs::map::AffineMap;
use crate::ifs::model::{dist, IFSModel};
use crate::mqv::volume::ball_intersection_volume;
use crate::sampler::{discretize, sample_coords, stream, CellMeasure};

/// Pairs handled per work unit; fixes the summation order.
const PAIR_CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorKind {
    McPairs,
    Grid,
    Constant,
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimatorKind::McPairs => "mc-pairs",
            EstimatorKind::Grid => "grid",
            EstimatorKind::Constant => "constant",
        })
    }
}

/// An estimate of `V_β(t; μ)`. For the grid estimator `stderr` holds the
/// deterministic first-order error bound.
#[derive(Clone, Debug, PartialEq)]
pub struct MQVEstimate {
    pub t: f64,
    pub value: f64,
    pub stderr: f64,
    pub n: usize,
    pub estimator: EstimatorKind,
    pub beta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McConfig {
    pub n_pairs: usize,
    /// Sampling depth as a fraction of `t`; at most 1/100.
    pub depth_ratio: f64,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n_pairs: 200_000,
            depth_ratio: 0.01,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

#[derive(Clone, Copy, Default)]
struct Moments {
    n: usize,
    sa: f64,
    sb: f64,
    saa: f64,
    sbb: f64,
    sab: f64,
}

impl Moments {
    fn push(&mut self, a: f64, b: f64) {
        self.n += 1;
        self.sa += a;
        self.sb += b;
        self.saa += a * a;
        self.sbb += b * b;
        self.sab += a * b;
    }

    fn merge(&mut self, o: &Moments) {
        self.n += o.n;
        self.sa += o.sa;
        self.sb += o.sb;
        self.saa += o.saa;
        self.sbb += o.sbb;
        self.sab += o.sab;
    }

    fn mean_a(&self) -> f64 {
        self.sa / self.n as f64
    }

    fn mean_b(&self) -> f64 {
        self.sb / self.n as f64
    }

    /// Sample (co)variances of `a`, `b` and their covariance.
    fn cov(&self) -> (f64, f64, f64) {
        let n = self.n as f64;
        let (ma, mb) = (self.mean_a(), self.mean_b());
        let k = n / (n - 1.0);
        (
            ((self.saa / n - ma * ma) * k).max(0.0),
            ((self.sbb / n - mb * mb) * k).max(0.0),
            (self.sab / n - ma * mb) * k,
        )
    }
}

/// Accumulates `a = f(ξ) f(η) ω_d(B_t(ξ) ∩ B_t(η)) / t^d` and `b` the same
/// with `f ≡ 1` over independent `μ`-pairs. Pair `i` is drawn from stream `i`.
fn pair_moments<F>(model: &IFSModel, t: f64, cfg: &McConfig, f: &F) -> Result<Moments>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if !(t > 0.0) {
        return Err(Error::invalid("t must be positive"));
    }
    if !(cfg.depth_ratio > 0.0 && cfg.depth_ratio <= 0.01) {
        return Err(Error::invalid("sampling depth must be at most t/100"));
    }
    if cfg.n_pairs < 2 {
        return Err(Error::invalid("at least two pairs are needed"));
    }
    let d = model.dim();
    let depth_tol = cfg.depth_ratio * t;
    let td = t.powi(d as i32);
    let parts = cfg
        .exec
        .map_chunks(cfg.n_pairs, PAIR_CHUNK, |range| -> Result<Moments> {
            let mut m = Moments::default();
            let mut scratch = (AffineMap::identity(d), Vec::new());
            let (mut xi, mut eta) = (vec![0.0; d], vec![0.0; d]);
            for i in range {
                let mut rng = stream(cfg.seed, i as u64);
                sample_coords(model, depth_tol, &mut rng, &mut scratch, &mut xi)?;
                sample_coords(model, depth_tol, &mut rng, &mut scratch, &mut eta)?;
                let b = ball_intersection_volume(d, t, dist(&xi, &eta)) / td;
                let a = if b == 0.0 { 0.0 } else { f(&xi) * f(&eta) * b };
                m.push(a, b);
            }
            Ok(m)
        });
    let mut total = Moments::default();
    for p in parts {
        total.merge(&p?);
    }
    Ok(total)
}

/// Monte Carlo estimate of `V_β(t; μ)` from the double-integral identity
/// `V_β(t) = t^{-(d+β)} ∬ ω_d(B_t(ξ) ∩ B_t(η)) dμ(ξ) dμ(η)`.
pub fn estimate_mqv_mc(model: &IFSModel, beta: f64, t: f64, cfg: &McConfig) -> Result<MQVEstimate> {
    estimate_mqv_f(model, beta, t, |_: &[f64]| 1.0, cfg)
}

/// Monte Carlo estimate of `t^{-(d+β)} ∫ |μ_f(B_t(x))|² dx` with `dμ_f = f dμ`.
pub fn estimate_mqv_f<F>(
    model: &IFSModel,
    beta: f64,
    t: f64,
    f: F,
    cfg: &McConfig,
) -> Result<MQVEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let m = pair_moments(model, t, cfg, &f)?;
    let scale = t.powf(-beta);
    let (va, _, _) = m.cov();
    Ok(MQVEstimate {
        t,
        value: scale * m.mean_a(),
        stderr: scale * (va / m.n as f64).sqrt(),
        n: m.n,
        estimator: EstimatorKind::McPairs,
        beta,
    })
}

/// `V_f(t) / V_1(t)` from shared pairs, with a delta-method standard error.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioEstimate {
    pub t: f64,
    pub ratio: f64,
    pub stderr: f64,
    pub numerator: MQVEstimate,
    pub denominator: MQVEstimate,
}

pub fn estimate_mqv_ratio<F>(
    model: &IFSModel,
    beta: f64,
    t: f64,
    f: F,
    cfg: &McConfig,
) -> Result<RatioEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let m = pair_moments(model, t, cfg, &f)?;
    let n = m.n as f64;
    let (va, vb, cab) = m.cov();
    let (ma, mb) = (m.mean_a(), m.mean_b());
    if mb == 0.0 {
        return Err(Error::NoSolution("no overlapping pairs at this t".into()));
    }
    let ratio = ma / mb;
    let var = (va - 2.0 * ratio * cab + ratio * ratio * vb) / (mb * mb * n);
    let scale = t.powf(-beta);
    let est = |value: f64, v: f64| MQVEstimate {
        t,
        value: scale * value,
        stderr: scale * (v / n).sqrt(),
        n: m.n,
        estimator: EstimatorKind::McPairs,
        beta,
    };
    Ok(RatioEstimate {
        t,
        ratio,
        stderr: var.max(0.0).sqrt(),
        numerator: est(ma, va),
        denominator: est(mb, vb),
    })
}

/// Grid estimate of `t^{-(d+β)} ∫ |μ(B_t(x))|² dx` for `d ∈ {1, 2}`.
///
/// `x` runs over the cell corners. In `d = 1` each cell's mass is spread
/// uniformly over the cell and partially covered cells contribute their
/// covered fraction; in `d = 2` a cell counts when its center lies in the
/// disk. `stderr` is the first-order bound `2d (δ/t) V` with `δ` the mass
/// displacement plus the cell diagonal.
pub fn estimate_mqv_grid(
    cells: &CellMeasure,
    beta: f64,
    t: f64,
    exec: Exec,
) -> Result<MQVEstimate> {
    let h = cells.h;
    if !(t > 0.0) {
        return Err(Error::invalid("t must be positive"));
    }
    if h > t / 10.0 * (1.0 + 1e-12) {
        return Err(Error::invalid(format!(
            "cell size {h} too coarse for t = {t}; need h ≤ t/10"
        )));
    }
    if cells.cells.is_empty() {
        return Err(Error::invalid("empty cell measure"));
    }
    let integral = match cells.dim {
        1 => grid_integral_1d(cells, t / h, exec) * h,
        2 => grid_integral_2d(cells, t / h, exec) * h * h,
        d => {
            return Err(Error::Unsupported(format!(
                "grid estimator is implemented for d ≤ 2, not {d}"
            )))
        }
    };
    let d = cells.dim;
    let value = integral * t.powf(-(d as f64 + beta));
    let delta = cells.displacement + h * (d as f64).sqrt();
    Ok(MQVEstimate {
        t,
        value,
        stderr: 2.0 * d as f64 * delta / t * value,
        n: cells.cells.len(),
        estimator: EstimatorKind::Grid,
        beta,
    })
}

/// `Σ_i μ̂(B_τ(i))²` over integer `x` positions, in cell units.
fn grid_integral_1d(cells: &CellMeasure, tau: f64, exec: Exec) -> f64 {
    let kmin = cells.cells.keys().map(|k| k[0]).min().unwrap();
    let kmax = cells.cells.keys().map(|k| k[0]).max().unwrap();
    let len = (kmax - kmin + 1) as usize;
    let mut mass = vec![0.0; len];
    for (k, m) in &cells.cells {
        mass[(k[0] - kmin) as usize] += m;
    }
    // prefix[k] = Σ_{c<k} mass[c]
    let mut prefix = vec![0.0; len + 1];
    for k in 0..len {
        prefix[k + 1] = prefix[k] + mass[k];
    }
    let cell = |k: i64| -> f64 {
        if k < 0 || k >= len as i64 {
            0.0
        } else {
            mass[k as usize]
        }
    };
    let range_sum = |a: i64, b: i64| -> f64 {
        // Σ_{a ≤ c < b}
        let a = a.clamp(0, len as i64) as usize;
        let b = b.clamp(0, len as i64) as usize;
        if b > a {
            prefix[b] - prefix[a]
        } else {
            0.0
        }
    };
    let w = tau.ceil() as i64 + 1;
    let (lo, hi) = (-w, len as i64 + w);
    let n = (hi - lo + 1) as usize;
    let parts = exec.map_chunks(n, 4096, |range| {
        let mut s = 0.0;
        for idx in range {
            let x = (lo + idx as i64) as f64;
            let (a, b) = (x - tau, x + tau);
            let (fa, fb) = (a.floor(), b.floor());
            let total = if fa == fb {
                cell(fa as i64) * (b - a)
            } else {
                let full = range_sum(fa as i64 + 1, fb as i64);
                full + cell(fa as i64) * (fa + 1.0 - a) + cell(fb as i64) * (b - fb)
            };
            s += total * total;
        }
        s
    });
    parts.iter().sum()
}

fn grid_integral_2d(cells: &CellMeasure, tau: f64, exec: Exec) -> f64 {
    let kx0 = cells.cells.keys().map(|k| k[0]).min().unwrap();
    let kx1 = cells.cells.keys().map(|k| k[0]).max().unwrap();
    let ky0 = cells.cells.keys().map(|k| k[1]).min().unwrap();
    let ky1 = cells.cells.keys().map(|k| k[1]).max().unwrap();
    let nx = (kx1 - kx0 + 1) as usize;
    let ny = (ky1 - ky0 + 1) as usize;
    // Row-wise prefix sums: row r holds Σ_{c<k} mass[r][c] at index k.
    let mut prefix = vec![0.0; ny * (nx + 1)];
    for (k, m) in &cells.cells {
        let (x, y) = ((k[0] - kx0) as usize, (k[1] - ky0) as usize);
        prefix[y * (nx + 1) + x + 1] += m;
    }
    for y in 0..ny {
        for x in 0..nx {
            prefix[y * (nx + 1) + x + 1] += prefix[y * (nx + 1) + x];
        }
    }
    let w = tau.ceil() as i64 + 1;
    let xs = (nx as i64 + 2 * w + 1) as usize;
    let ys = (ny as i64 + 2 * w + 1) as usize;
    let rows = exec.map(ys, |iy| {
        let yj = iy as i64 - w;
        let mut s = 0.0;
        for ix in 0..xs {
            let xi = ix as i64 - w;
            let mut total = 0.0;
            let ylo = ((yj as f64 - 0.5 - tau).ceil() as i64).max(0);
            let yhi = ((yj as f64 - 0.5 + tau).floor() as i64).min(ny as i64 - 1);
            for r in ylo..=yhi {
                let dy = r as f64 + 0.5 - yj as f64;
                let half = (tau * tau - dy * dy).max(0.0).sqrt();
                let a = ((xi as f64 - 0.5 - half).ceil() as i64).clamp(0, nx as i64);
                let b = ((xi as f64 - 0.5 + half).floor() as i64 + 1).clamp(0, nx as i64);
                if b > a {
                    let row = &prefix[r as usize * (nx + 1)..];
                    total += row[b as usize] - row[a as usize];
                }
            }
            s += total * total;
        }
        s
    });
    rows.iter().sum()
}

/// Source of `V_β(t)` estimates at arbitrary `t`.
pub trait MqvEstimator: Sync {
    fn estimate(&self, t: f64) -> Result<MQVEstimate>;
}

pub struct McEstimator<'a> {
    pub model: &'a IFSModel,
    pub beta: f64,
    pub config: McConfig,
}

impl MqvEstimator for McEstimator<'_> {
    fn estimate(&self, t: f64) -> Result<MQVEstimate> {
        estimate_mqv_mc(self.model, self.beta, t, &self.config)
    }
}

pub struct GridEstimator<'a> {
    pub model: &'a IFSModel,
    pub beta: f64,
    /// Cell size as a fraction of `t`.
    pub resolution_ratio: f64,
    pub mass_tol: f64,
    pub exec: Exec,
}

impl MqvEstimator for GridEstimator<'_> {
    fn estimate(&self, t: f64) -> Result<MQVEstimate> {
        let cells = discretize(self.model, self.resolution_ratio * t, self.mass_tol)?;
        estimate_mqv_grid(&cells, self.beta, t, self.exec)
    }
}

/// Returns the same value at every `t`; a harness self-test.
pub struct ConstantEstimator {
    pub value: f64,
    pub beta: f64,
}

impl MqvEstimator for ConstantEstimator {
    fn estimate(&self, t: f64) -> Result<MQVEstimate> {
        Ok(MQVEstimate {
            t,
            value: self.value,
            stderr: 0.0,
            n: 0,
            estimator: EstimatorKind::Constant,
            beta: self.beta,
        })
    }
}
