use std::f64::consts::PI;

use statrs::function::beta::beta_reg;

/// Volume `v_d` of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    // v_0 = 1, v_1 = 2, v_d = v_{d-2} · 2π / d
    let mut v = [1.0, 2.0];
    if d < 2 {
        return v[d];
    }
    for k in 2..=d {
        v[k % 2] *= 2.0 * PI / k as f64;
    }
    v[d % 2]
}

/// Volume of `B_t(ξ) ∩ B_t(η)` with `|ξ − η| = r`.
pub fn ball_intersection_volume(d: usize, t: f64, r: f64) -> f64 {
    assert!(d >= 1, "dimension must be positive");
    if r >= 2.0 * t {
        return 0.0;
    }
    let r = r.max(0.0);
    match d {
        1 => 2.0 * t - r,
        2 => {
            let c = (r / (2.0 * t)).min(1.0);
            2.0 * t * t * c.acos() - 0.5 * r * (4.0 * t * t - r * r).max(0.0).sqrt()
        }
        3 => PI / 12.0 * (4.0 * t + r) * (2.0 * t - r).powi(2),
        _ => {
            let x = 1.0 - (r / (2.0 * t)).powi(2);
            unit_ball_volume(d) * t.powi(d as i32) * beta_reg(0.5 * (d as f64 + 1.0), 0.5, x)
        }
    }
}

/// Lens volume in general dimension through the regularized incomplete beta
/// function; exposed so the closed forms can be compared against it.
pub fn ball_intersection_volume_beta(d: usize, t: f64, r: f64) -> f64 {
    if r >= 2.0 * t {
        return 0.0;
    }
    let x = 1.0 - (r / (2.0 * t)).powi(2);
    unit_ball_volume(d) * t.powi(d as i32) * beta_reg(0.5 * (d as f64 + 1.0), 0.5, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn ball_volumes() {
        assert_relative_eq!(unit_ball_volume(1), 2.0);
        assert_relative_eq!(unit_ball_volume(2), PI);
        assert_relative_eq!(unit_ball_volume(3), 4.0 * PI / 3.0);
        assert_relative_eq!(unit_ball_volume(4), PI * PI / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn interval_lens() {
        assert_eq!(ball_intersection_volume(1, 0.3, 0.0), 0.6);
        assert_relative_eq!(ball_intersection_volume(1, 0.3, 0.3), 0.3);
        assert_eq!(ball_intersection_volume(1, 0.3, 0.6), 0.0);
    }

    #[test]
    fn disk_lens_extremes() {
        assert_eq!(ball_intersection_volume(2, 0.5, 1.0), 0.0);
        assert_relative_eq!(
            ball_intersection_volume(2, 0.5, 0.0),
            PI * 0.25,
            max_relative = 1e-15
        );
    }

    #[test]
    fn closed_forms_match_beta_formula() {
        for d in 1..=3 {
            for k in 0..=20 {
                let r = 2.0 * k as f64 / 20.0;
                let a = ball_intersection_volume(d, 1.0, r);
                let b = ball_intersection_volume_beta(d, 1.0, r);
                assert!((a - b).abs() < 1e-12, "d={d} r={r}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn high_dimension_full_overlap() {
        for d in 4..=7 {
            assert_relative_eq!(
                ball_intersection_volume(d, 0.7, 0.0),
                unit_ball_volume(d) * 0.7f64.powi(d as i32),
                max_relative = 1e-12
            );
        }
    }

    proptest! {
        #[test]
        fn non_increasing_in_distance(d in 1usize..6, t in 0.01f64..2.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let (r1, r2) = (2.0 * t * a.min(b), 2.0 * t * a.max(b));
            let v1 = ball_intersection_volume(d, t, r1);
            let v2 = ball_intersection_volume(d, t, r2);
            prop_assert!(v2 <= v1 * (1.0 + 1e-12) + 1e-300);
            prop_assert!(v1 >= 0.0 && v2 >= 0.0);
        }

        #[test]
        fn continuous_at_tangency(d in 1usize..6, t in 0.01f64..2.0) {
            let v = ball_intersection_volume(d, t, 2.0 * t * (1.0 - 1e-9));
            prop_assert!(v <= 1e-6 * unit_ball_volume(d) * t.powi(d as i32));
        }
    }
}
