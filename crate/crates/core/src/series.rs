//! Positive series `Σ_{j≥1} a_j` with certified enclosures.
//!
//! A series is an explicit head `a_1..a_n` followed by a structured tail
//! whose remainder after any index can be bounded in closed form:
//!
//! * geometric tails `a_{n+i} = first · ratio^(i-1)` have an exact remainder;
//! * power–geometric tails `a_j = coef · base^j · j^power` are bounded by a
//!   ratio test when `base < 1`, and by integral comparison for the pure
//!   power law `base = 1, power < -1` (midpoint rule from above, trapezoid
//!   rule from below, both valid because the summand is convex decreasing).
//!
//! Enclosures are padded outward for floating-point rounding.

use std::fmt;

/// Largest number of explicit terms summed before giving up on refinement.
pub const MAX_TERMS: usize = 1 << 22;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi || lo.is_nan() || hi.is_nan(), "{lo} > {hi}");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        if self.hi.is_infinite() {
            return self.hi;
        }
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Distance from `x` to the far end of the interval.
    pub fn max_deviation(&self, x: f64) -> f64 {
        (self.lo - x).abs().max((self.hi - x).abs())
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.17e}, {:.17e}]", self.lo, self.hi)
    }
}

/// Compensated (Neumaier) accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Accumulator {
    sum: f64,
    comp: f64,
}

impl Accumulator {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Tail {
    None,
    /// `a_{n+i} = first · ratio^(i-1)` for `i ≥ 1`, `n` the head length.
    Geometric {
        first: f64,
        ratio: f64,
    },
    /// `a_j = coef · base^j · j^power` for `j > n`.
    PowerGeometric {
        coef: f64,
        base: f64,
        power: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    head: Vec<f64>,
    tail: Tail,
}

fn rounding_pad(n_terms: usize) -> f64 {
    let eps = f64::EPSILON;
    16.0 * eps + n_terms as f64 * eps * eps
}

impl Series {
    pub fn finite(head: Vec<f64>) -> Self {
        Series {
            head,
            tail: Tail::None,
        }
    }

    pub fn geometric(head: Vec<f64>, first: f64, ratio: f64) -> Self {
        Series {
            head,
            tail: Tail::Geometric { first, ratio },
        }
    }

    pub fn power_geometric(head: Vec<f64>, coef: f64, base: f64, power: f64) -> Self {
        Series {
            head,
            tail: Tail::PowerGeometric { coef, base, power },
        }
    }

    pub fn head_len(&self) -> usize {
        self.head.len()
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.tail, Tail::None)
    }

    pub(crate) fn tail(&self) -> &Tail {
        &self.tail
    }

    /// `a_j`, one-based. Zero beyond the end of a finite series.
    pub fn term(&self, j: usize) -> f64 {
        assert!(j >= 1, "series index is one-based");
        let n = self.head.len();
        if j <= n {
            return self.head[j - 1];
        }
        match self.tail {
            Tail::None => 0.0,
            Tail::Geometric { first, ratio } => first * ratio.powf((j - n - 1) as f64),
            Tail::PowerGeometric { coef, base, power } => {
                let jf = j as f64;
                if base == 1.0 {
                    coef * jf.powf(power)
                } else {
                    coef * base.powf(jf) * jf.powf(power)
                }
            }
        }
    }

    /// Termwise power `a_j^e`.
    pub fn powf(&self, e: f64) -> Series {
        let head = self.head.iter().map(|a| a.powf(e)).collect();
        let tail = match self.tail {
            Tail::None => Tail::None,
            Tail::Geometric { first, ratio } => Tail::Geometric {
                first: first.powf(e),
                ratio: ratio.powf(e),
            },
            Tail::PowerGeometric { coef, base, power } => Tail::PowerGeometric {
                coef: coef.powf(e),
                base: base.powf(e),
                power: power * e,
            },
        };
        Series { head, tail }
    }

    pub fn scale(&self, c: f64) -> Series {
        let head = self.head.iter().map(|a| a * c).collect();
        let tail = match self.tail {
            Tail::None => Tail::None,
            Tail::Geometric { first, ratio } => Tail::Geometric {
                first: first * c,
                ratio,
            },
            Tail::PowerGeometric { coef, base, power } => Tail::PowerGeometric {
                coef: coef * c,
                base,
                power,
            },
        };
        Series { head, tail }
    }

    /// Materializes the first `n` terms into the head (no-op if already longer).
    fn expanded(&self, n: usize) -> Series {
        if n <= self.head.len() || self.is_finite() {
            return self.clone();
        }
        let old = self.head.len();
        let mut head = self.head.clone();
        head.extend((old + 1..=n).map(|j| self.term(j)));
        let tail = match self.tail {
            Tail::Geometric { first, ratio } => Tail::Geometric {
                first: first * ratio.powf((n - old) as f64),
                ratio,
            },
            ref t => t.clone(),
        };
        Series { head, tail }
    }

    /// Termwise product `a_j · b_j`.
    pub fn mul(&self, other: &Series) -> Series {
        let n = self.head.len().max(other.head.len());
        let a = self.expanded(n);
        let b = other.expanded(n);
        let len = match (&a.tail, &b.tail) {
            (Tail::None, Tail::None) => a.head.len().min(b.head.len()),
            (Tail::None, _) => a.head.len(),
            (_, Tail::None) => b.head.len(),
            _ => n,
        };
        let head: Vec<f64> = (1..=len).map(|j| a.term(j) * b.term(j)).collect();
        let tail = match (&a.tail, &b.tail) {
            (Tail::None, _) | (_, Tail::None) => Tail::None,
            (
                Tail::Geometric {
                    first: f1,
                    ratio: r1,
                },
                Tail::Geometric {
                    first: f2,
                    ratio: r2,
                },
            ) => Tail::Geometric {
                first: f1 * f2,
                ratio: r1 * r2,
            },
            (t1, t2) => {
                let (c1, x1, p1) = as_power_geometric(t1, n);
                let (c2, x2, p2) = as_power_geometric(t2, n);
                Tail::PowerGeometric {
                    coef: c1 * c2,
                    base: x1 * x2,
                    power: p1 + p2,
                }
            }
        };
        Series { head, tail }
    }

    /// Keeps the first `m` terms only.
    pub fn truncate(&self, m: usize) -> Series {
        Series::finite((1..=m).map(|j| self.term(j)).collect())
    }

    pub fn converges(&self) -> bool {
        match self.tail {
            Tail::None => true,
            Tail::Geometric { first, ratio } => first == 0.0 || ratio < 1.0,
            Tail::PowerGeometric { coef, base, power } => {
                coef == 0.0 || base < 1.0 || (base == 1.0 && power < -1.0)
            }
        }
    }

    /// Enclosure of `Σ_{j>m} a_j` for `m ≥` head length.
    fn remainder(&self, m: usize) -> Interval {
        let n = self.head.len();
        debug_assert!(m >= n);
        match self.tail {
            Tail::None => Interval::point(0.0),
            Tail::Geometric { first, ratio } => {
                if ratio >= 1.0 && first > 0.0 {
                    return Interval::new(0.0, f64::INFINITY);
                }
                let lead = first * ratio.powf((m - n) as f64);
                Interval::point(lead / (1.0 - ratio))
            }
            Tail::PowerGeometric { coef, base, power } => {
                if coef == 0.0 {
                    return Interval::point(0.0);
                }
                let j0 = (m + 1) as f64;
                if base == 1.0 {
                    if power >= -1.0 {
                        return Interval::new(0.0, f64::INFINITY);
                    }
                    let p = -power;
                    let integral = |a: f64| coef * a.powf(1.0 - p) / (p - 1.0);
                    let lo = integral(j0) + 0.5 * coef * j0.powf(-p);
                    let hi = integral(j0 - 0.5);
                    Interval::new(lo.min(hi), hi)
                } else if base < 1.0 {
                    let lead = self.term(m + 1);
                    let factor = (1.0 + 1.0 / j0).powf(power);
                    let r_min = base * factor.min(1.0);
                    let r_max = base * factor.max(1.0);
                    let lo = lead / (1.0 - r_min);
                    let hi = if r_max < 1.0 {
                        lead / (1.0 - r_max)
                    } else {
                        f64::INFINITY
                    };
                    Interval::new(lo, hi)
                } else {
                    Interval::new(0.0, f64::INFINITY)
                }
            }
        }
    }

    /// Closed-form-aware partial sum `Σ_{j≤n} a_j` (uncertified).
    pub fn partial(&self, n: usize) -> f64 {
        let h = self.head.len();
        let mut acc = Accumulator::default();
        for &a in self.head.iter().take(n) {
            acc.add(a);
        }
        if n <= h {
            return acc.value();
        }
        match self.tail {
            Tail::None => {}
            Tail::Geometric { first, ratio } => {
                let k = (n - h) as f64;
                if ratio == 1.0 {
                    acc.add(first * k);
                } else {
                    acc.add(first * (1.0 - ratio.powf(k)) / (1.0 - ratio));
                }
            }
            Tail::PowerGeometric { .. } => {
                for j in h + 1..=n {
                    acc.add(self.term(j));
                }
            }
        }
        acc.value()
    }

    /// Refines `Σ_{j≥first} a_j` by summing more explicit terms until
    /// `done` accepts the enclosure or [`MAX_TERMS`] is reached.
    fn refine(&self, first: usize, done: impl Fn(Interval) -> bool) -> Interval {
        let first = first.max(1);
        let n = self.head.len();
        let mut m = n.max(first - 1);
        if let Tail::PowerGeometric { .. } = self.tail {
            m = m.max(63);
        }
        let mut acc = Accumulator::default();
        let mut summed = 0usize;
        for j in first..=m {
            acc.add(self.term(j));
            summed += 1;
        }
        loop {
            let rem = self.remainder(m);
            let pad = rounding_pad(summed);
            let base = acc.value();
            let iv = Interval::new((base + rem.lo) * (1.0 - pad), (base + rem.hi) * (1.0 + pad));
            let refinable = matches!(self.tail, Tail::PowerGeometric { .. });
            if !refinable || done(iv) || m >= MAX_TERMS {
                return iv;
            }
            let next = (2 * m + 1).min(MAX_TERMS);
            for j in m + 1..=next {
                acc.add(self.term(j));
                summed += 1;
            }
            m = next;
        }
    }

    /// Certified enclosure of the full sum, refined to width `width_tol` when possible.
    pub fn sum(&self, width_tol: f64) -> Interval {
        self.sum_from(1, width_tol)
    }

    /// Certified enclosure of `Σ_{j≥first} a_j`.
    pub fn sum_from(&self, first: usize, width_tol: f64) -> Interval {
        self.refine(first, |iv| iv.width() <= width_tol)
    }

    /// Certified enclosure of `Σ_{j≥first} a_j` with relative width `rel`
    /// when reachable.
    pub fn sum_from_relative(&self, first: usize, rel: f64) -> Interval {
        self.refine(first, |iv| iv.width() <= rel * iv.hi)
    }

    /// Refines until the enclosure excludes `target` or cannot shrink further.
    pub fn decide(&self, target: f64) -> Interval {
        self.refine(1, |iv| {
            iv.lo > target || iv.hi < target || (iv.hi.is_finite() && iv.width() <= 1e-15 * iv.hi)
        })
    }
}

/// Rewrites a tail that starts after index `n` as `coef · base^j · j^power`.
fn as_power_geometric(tail: &Tail, n: usize) -> (f64, f64, f64) {
    match *tail {
        Tail::PowerGeometric { coef, base, power } => (coef, base, power),
        Tail::Geometric { first, ratio } => {
            // first · ratio^(j-n-1) = first · ratio^-(n+1) · ratio^j
            let coef = (first.ln() - (n as f64 + 1.0) * ratio.ln()).exp();
            (coef, ratio, 0.0)
        }
        Tail::None => unreachable!("finite tails are handled by the caller"),
    }
}
