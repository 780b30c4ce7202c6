//! Acceptance suite. Runs every criterion at its stated tolerance, prints
//! one PASS/FAIL line each and exits nonzero if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use common::{compensated_sum, load, POWERLAW_S, SHIPPED};
use moranlab::boxcount::{default_eps_grid as box_grid, estimate_box_dim};
use moranlab::conditions::{condition7_search, default_eps_grid, default_lambda_grid};
use moranlab::dimension::{solve_beta, solve_moran, solve_truncated};
use moranlab::families;
use moranlab::ifs::cylinder::enumerate_stopping_set;
use moranlab::ifs::IFSModel;
use moranlab::mqv::{
    estimate_mqv_grid, estimate_mqv_mc, estimate_mqv_ratio, geometric_grid, lattice_classify,
    periodicity_probe, unit_ball_volume, Classification, McConfig, McEstimator,
    DEFAULT_LATTICE_TOL,
};
use moranlab::sampler::{discretize, sample_cloud_coords};
use moranlab::{Exec, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-14;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        pass,
        detail: detail.into(),
    })
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

fn c1_closed_forms() -> Result<Outcome> {
    let cases = [
        ("geometric2", 1.0),
        ("geometric4", 0.5),
        ("cantor", 2f64.ln() / 3f64.ln()),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, want) in cases {
        let m = load(name);
        let (r, dt) = timed(|| solve_moran(m.ratios(), 1e-12));
        let s = r?.exponent;
        let ok = (s - want).abs() <= 1e-9 && dt < Duration::from_secs(1);
        pass &= ok;
        parts.push(format!("{name} s={s:.12} ({:.0?})", dt));
    }
    outcome(pass, parts.join(", "))
}

fn c2_truncations() -> Result<Outcome> {
    let m = load("geometric2");
    let mut prev = f64::NEG_INFINITY;
    let mut first_flat = None;
    let mut last = 0.0;
    for k in 2..=1024 {
        let s = solve_truncated(m.ratios(), k, TOL)?.exponent;
        if s <= prev && first_flat.is_none() {
            first_flat = Some(k);
        }
        prev = s;
        last = s;
    }
    let gap_ok = 1.0 - last < 1e-3;
    let detail = match first_flat {
        None => format!("strictly increasing, 1 - s^(1024) = {:.3e}", 1.0 - last),
        Some(k) => format!(
            "s^(m) stops increasing in f64 at m = {k}; 1 - s^(1024) = {:.3e}",
            1.0 - last
        ),
    };
    outcome(first_flat.is_none() && gap_ok, detail)
}

fn c3_powerlaw() -> Result<Outcome> {
    let s = solve_moran(load("powerlaw").ratios(), 1e-12)?.exponent;
    let err = (s - POWERLAW_S).abs();
    outcome(
        err <= 1e-8,
        format!("s = {s:.13}, |s - oracle| = {err:.2e}"),
    )
}

fn c4_natural_weights() -> Result<Outcome> {
    let mut worst: (f64, &str) = (0.0, "");
    for name in SHIPPED {
        let m = load(name);
        let s = solve_moran(m.ratios(), TOL)?.exponent;
        let b = solve_beta(m.ratios(), m.weights(), TOL)?.exponent;
        if (s - b).abs() >= worst.0 {
            worst = ((s - b).abs(), name);
        }
    }
    outcome(
        worst.0 <= 2e-10,
        format!(
            "max |β - s| = {:.2e} ({}) over {} families",
            worst.0,
            worst.1,
            SHIPPED.len()
        ),
    )
}

fn c5_box_dimension() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["cantor", "gapped"] {
        let m = load(name);
        let s = solve_moran(m.ratios(), TOL)?.exponent;
        let (fit, dt) = timed(|| -> Result<f64> {
            let pts = sample_cloud_coords(&m, 100_000, 1e-9, 7, Exec::default())?;
            let grid = box_grid(&pts, 24);
            Ok(estimate_box_dim(&pts, &grid, 8, 7, Exec::default())?.slope)
        });
        let slope = fit?;
        let ok = (slope - s).abs() <= 0.05 && dt < Duration::from_secs(60);
        pass &= ok;
        parts.push(format!("{name} slope={slope:.4} vs s={s:.4} ({:.1?})", dt));
    }
    outcome(pass, parts.join(", "))
}

fn c6_lower_bound() -> Result<Outcome> {
    let m = load("gapped");
    let beta = solve_beta(m.ratios(), m.weights(), TOL)?.exponent;
    let search = condition7_search(
        &m,
        beta,
        &default_eps_grid(),
        &default_lambda_grid(&m, 64),
        Exec::default(),
    )?;
    let Some(pair) = search.best else {
        return outcome(false, "no feasible (ε, δ) found");
    };
    let bound = pair.inverse_margin;
    let c = unit_ball_volume(m.dim()) * 0.5f64.powi(m.dim() as i32);
    let cfg = McConfig {
        seed: 11,
        ..McConfig::default()
    };
    let mut mc_ok = true;
    let mut min_mc = f64::INFINITY;
    let mut exact_ok = true;
    let mut min_exact = f64::INFINITY;
    for k in 1..=4 {
        let t = 10f64.powi(-k);
        let e = estimate_mqv_mc(&m, beta, t, &cfg)?;
        min_mc = min_mc.min(e.value + 4.0 * e.stderr);
        mc_ok &= e.value + 4.0 * e.stderr >= c * bound;
        let set = enumerate_stopping_set(&m, t, 1e-9)?;
        let lhs = t.powf(-beta) * compensated_sum(set.words.iter().map(|w| w.mass * w.mass));
        min_exact = min_exact.min(lhs);
        exact_ok &= lhs >= bound;
    }
    outcome(
        mc_ok && exact_ok,
        format!(
            "ε={:.2}, δ={:.3}, bound (δ⁻¹-1)ε^β={bound:.4}; min V+4se={min_mc:.4} vs {:.4} [{}]; \
             min t^-β ΣP² = {min_exact:.4} [{}] (vs (1-δ)ε^β = {:.4})",
            pair.eps,
            pair.delta,
            c * bound,
            if mc_ok { "ok" } else { "violated" },
            if exact_ok { "ok" } else { "violated" },
            pair.margin,
        ),
    )
}

fn c7_lebesgue() -> Result<Outcome> {
    let m = load("lebesgue");
    let t = 0.01;
    let exact = 4.0 - 8.0 * t / 3.0;
    let mc = estimate_mqv_mc(
        &m,
        1.0,
        t,
        &McConfig {
            seed: 3,
            ..McConfig::default()
        },
    )?;
    let cells = discretize(&m, 0.05 * t, 1e-9)?;
    let grid = estimate_mqv_grid(&cells, 1.0, t, Exec::default())?;
    let comb = |a: f64, b: f64| (a * a + b * b).sqrt();
    let mc_ok = (mc.value - exact).abs() <= 3.0 * mc.stderr;
    let grid_ok = (grid.value - exact).abs() <= 3.0 * grid.stderr;
    let pair_ok = (mc.value - grid.value).abs() <= 3.0 * comb(mc.stderr, grid.stderr);
    let rel = (grid.value - exact).abs() / exact;
    outcome(
        mc_ok && grid_ok && pair_ok && rel <= 0.02,
        format!(
            "exact={exact:.5}, mc={:.5}±{:.5}, grid={:.5}±{:.5}, grid rel err {rel:.2e}",
            mc.value, mc.stderr, grid.value, grid.stderr
        ),
    )
}

fn c8_lattice() -> Result<Outcome> {
    let g2 = lattice_classify(load("geometric2").ratios(), 64, DEFAULT_LATTICE_TOL);
    let g2_ok = g2.classification == Classification::Arithmetic
        && g2.rho.is_some_and(|r| (r - 2.0).abs() < 1e-9);
    let mx = lattice_classify(load("mixed23").ratios(), 64, DEFAULT_LATTICE_TOL);
    let mx_ok = mx.classification == Classification::NonArithmetic;
    let cantor = load("cantor");
    let est = McEstimator {
        model: &cantor,
        beta: solve_beta(cantor.ratios(), cantor.weights(), TOL)?.exponent,
        config: McConfig {
            seed: 5,
            ..McConfig::default()
        },
    };
    let grid = geometric_grid(3.0, -2.0, -8.0, 4)?;
    let probe = periodicity_probe(&est, &grid, 3.0)?;
    let probe_ok = probe.within(5.0);
    outcome(
        g2_ok && mx_ok && probe_ok,
        format!(
            "geometric2 {} ρ={:?}; mixed23 {}; cantor max|D|={:.4} (err {:.4}, worst |D|/err {:.2})",
            g2.classification,
            g2.rho,
            mx.classification,
            probe.max_abs_diff,
            probe.max_diff_err,
            probe.worst_ratio
        ),
    )
}

fn c9_ratio() -> Result<Outcome> {
    let m = load("cantor");
    let beta = solve_beta(m.ratios(), m.weights(), TOL)?.exponent;
    let cfg = McConfig {
        seed: 9,
        ..McConfig::default()
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for t in [1e-2, 1e-3] {
        let r = estimate_mqv_ratio(&m, beta, t, |x| if x[0] < 0.5 { 1.0 } else { 0.0 }, &cfg)?;
        let ok = (r.ratio - 0.5).abs() <= 4.0 * r.stderr;
        pass &= ok;
        parts.push(format!("t={t:e}: {:.4}±{:.4}", r.ratio, r.stderr));
    }
    outcome(pass, parts.join(", "))
}

fn c10_stopping_sets() -> Result<Outcome> {
    let finite: Vec<(&str, IFSModel, bool)> = vec![
        ("cantor", families::cantor()?, true),
        ("lebesgue", families::dyadic_lebesgue()?, true),
        ("corner-squares", families::corner_squares()?, true),
        ("mixed23", families::mixed23()?, false),
        ("three-map", families::three_map()?, false),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut pass = true;
    let mut worst_mass = 0.0f64;
    let mut worst_psi = 0.0f64;
    for (name, m, dyadic) in &finite {
        let beta = solve_beta(m.ratios(), m.weights(), TOL)?.exponent;
        for _ in 0..20 {
            let t = 10f64.powf(-rng.gen_range(0.5..3.5));
            let set = enumerate_stopping_set(m, t, 0.0)?;
            let mass = compensated_sum(set.words.iter().map(|w| w.mass));
            let psi = compensated_sum(
                set.words
                    .iter()
                    .map(|w| w.mass * w.mass * w.rho.powf(-beta)),
            );
            let dm = (mass - 1.0).abs();
            let dp = (psi - 1.0).abs();
            worst_mass = worst_mass.max(dm);
            worst_psi = worst_psi.max(dp);
            let mass_ok = if *dyadic {
                dm == 0.0
            } else {
                dm <= 4.0 * f64::EPSILON
            };
            if !(set.exhausted && mass_ok && dp <= 1e-12) {
                pass = false;
                eprintln!("  {name} t={t:e}: |ΣP-1|={dm:e}, |ΣP²ρ^-β-1|={dp:e}");
            }
        }
    }
    outcome(
        pass,
        format!(
            "{} families x 20 t: max |ΣP_J - 1| = {worst_mass:.1e}, max |ΣP_J²ρ_J^-β - 1| = {worst_psi:.1e}",
            finite.len()
        ),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Result<Outcome>);
    let criteria: [Criterion; 10] = [
        ("dimension closed forms", c1_closed_forms),
        ("truncation convergence", c2_truncations),
        ("power-law oracle", c3_powerlaw),
        ("natural-weights identity", c4_natural_weights),
        ("box-dimension validation", c5_box_dimension),
        ("MQV lower bound", c6_lower_bound),
        ("estimator cross-validation", c7_lebesgue),
        ("lattice dichotomy probes", c8_lattice),
        ("weighted ratio", c9_ratio),
        ("stopping-set identities", c10_stopping_sets),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (res, dt) = timed(run);
        let (pass, detail) = match res {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} [{:>2}] {name}: {detail} ({:.1?})",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            dt
        );
    }
    println!(
        "{} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
