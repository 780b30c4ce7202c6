use crate::ifs::sequences::RatioSequence;

pub const DEFAULT_LATTICE_TOL: f64 = 1e-9;
const MAX_EUCLID_STEPS: usize = 40;
/// Generators needing a multiple beyond this are not distinguishable from
/// a collapse at the tested precision.
const MAX_MULTIPLE: f64 = 1e4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    Arithmetic,
    NonArithmetic,
    Undetermined,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::Arithmetic => "arithmetic",
            Classification::NonArithmetic => "non-arithmetic",
            Classification::Undetermined => "undetermined",
        })
    }
}

/// Whether `{−ln ρ_j : j ≤ head}` lies in a lattice `h Z`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeReport {
    pub classification: Classification,
    pub h: Option<f64>,
    /// `e^h`.
    pub rho: Option<f64>,
    /// `|−ln ρ_j − n_j h|` per tested ratio (empty unless arithmetic).
    pub residuals: Vec<f64>,
    pub head: usize,
}

enum Gcd {
    Found(f64),
    Collapsed,
    Unresolved,
}

/// Euclid with nearest-integer remainders; a remainder within `eps` of 0
/// ends the run, one below `floor` counts as a collapse.
fn real_gcd(a: f64, b: f64, eps: f64, floor: f64) -> Gcd {
    let (mut a, mut b) = (a.max(b), a.min(b));
    for _ in 0..MAX_EUCLID_STEPS {
        if b <= eps {
            return Gcd::Found(a);
        }
        if b < floor {
            return Gcd::Collapsed;
        }
        let r = (a - (a / b).round() * b).abs();
        a = b;
        b = r;
    }
    Gcd::Unresolved
}

/// Real-GCD classification of the lattice generated by `−ln ρ_j`, `j ≤ head_m`.
pub fn lattice_classify(ratios: &RatioSequence, head_m: usize, tol: f64) -> LatticeReport {
    let m = ratios.len().map_or(head_m, |n| n.min(head_m)).max(1);
    let xs: Vec<f64> = (1..=m).map(|j| -ratios.ratio(j).unwrap().ln()).collect();
    let scale = xs.iter().copied().fold(0.0, f64::max);
    let eps = tol * scale;
    let floor = tol.sqrt() * scale;
    let undetermined = |head| LatticeReport {
        classification: Classification::Undetermined,
        h: None,
        rho: None,
        residuals: Vec::new(),
        head,
    };
    let mut g = xs[0];
    for &x in &xs[1..] {
        match real_gcd(g, x, eps, floor) {
            Gcd::Found(v) => g = v,
            Gcd::Collapsed => {
                return LatticeReport {
                    classification: Classification::NonArithmetic,
                    h: None,
                    rho: None,
                    residuals: Vec::new(),
                    head: m,
                }
            }
            Gcd::Unresolved => return undetermined(m),
        }
    }
    let n: Vec<f64> = xs.iter().map(|x| (x / g).round()).collect();
    if n.iter().any(|&k| k > MAX_MULTIPLE) {
        return undetermined(m);
    }
    // Least-squares refinement of the generator.
    let h =
        xs.iter().zip(&n).map(|(x, k)| x * k).sum::<f64>() / n.iter().map(|k| k * k).sum::<f64>();
    let residuals: Vec<f64> = xs.iter().zip(&n).map(|(x, k)| (x - k * h).abs()).collect();
    if residuals.iter().any(|&r| r > floor) {
        return undetermined(m);
    }
    LatticeReport {
        classification: Classification::Arithmetic,
        h: Some(h),
        rho: Some(h.exp()),
        residuals,
        head: m,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn dyadic_geometric_is_arithmetic() {
        let r = RatioSequence::geometric(1.0, 0.5).unwrap();
        let rep = lattice_classify(&r, 32, DEFAULT_LATTICE_TOL);
        assert_eq!(rep.classification, Classification::Arithmetic);
        assert_relative_eq!(rep.h.unwrap(), 2f64.ln(), max_relative = 1e-12);
        assert_relative_eq!(rep.rho.unwrap(), 2.0, max_relative = 1e-12);
        assert_eq!(rep.residuals.len(), 32);
    }

    #[test]
    fn half_and_third_are_incommensurable() {
        let r = RatioSequence::finite(vec![0.5, 1.0 / 3.0]).unwrap();
        let rep = lattice_classify(&r, 2, DEFAULT_LATTICE_TOL);
        assert_eq!(rep.classification, Classification::NonArithmetic);
        assert!(rep.h.is_none());
    }

    #[test]
    fn quarter_and_sixteenth_share_generator() {
        let r = RatioSequence::finite(vec![0.25, 1.0 / 16.0]).unwrap();
        let rep = lattice_classify(&r, 2, DEFAULT_LATTICE_TOL);
        assert_eq!(rep.classification, Classification::Arithmetic);
        assert_relative_eq!(rep.h.unwrap(), 2.0 * 2f64.ln(), max_relative = 1e-12);
        assert_relative_eq!(rep.rho.unwrap(), 4.0, max_relative = 1e-12);
    }

    #[test]
    fn single_ratio_generates_itself() {
        let r = RatioSequence::finite(vec![1.0 / 3.0, 1.0 / 3.0]).unwrap();
        let rep = lattice_classify(&r, 2, DEFAULT_LATTICE_TOL);
        assert_eq!(rep.classification, Classification::Arithmetic);
        assert_relative_eq!(rep.rho.unwrap(), 3.0, max_relative = 1e-12);
    }

    #[test]
    fn power_law_head_is_not_a_lattice() {
        let r = RatioSequence::power_law(0.5, 2.0).unwrap();
        let rep = lattice_classify(&r, 16, DEFAULT_LATTICE_TOL);
        assert_ne!(rep.classification, Classification::Arithmetic);
    }
}
