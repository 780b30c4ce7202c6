use crate::error::{Error, Result};

/// Entrywise tolerance on `RᵀR = I`.
pub const ORTHOGONALITY_TOL: f64 = 1e-12;

/// `x ↦ scale · R x + translation` with `R` orthogonal, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    scale: f64,
    orthogonal: Vec<f64>,
    translation: Vec<f64>,
}

fn identity_matrix(d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    m
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

impl AffineMap {
    pub fn identity(d: usize) -> Self {
        AffineMap {
            scale: 1.0,
            orthogonal: identity_matrix(d),
            translation: vec![0.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn orthogonal(&self) -> &[f64] {
        &self.orthogonal
    }

    pub fn translation(&self) -> &[f64] {
        &self.translation
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        let mut out = vec![0.0; x.len()];
        self.apply_into(x, &mut out);
        Ok(out)
    }

    pub(crate) fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        for (i, o) in out.iter_mut().enumerate().take(d) {
            let row = &self.orthogonal[i * d..(i + 1) * d];
            let rx: f64 = row.iter().zip(x).map(|(r, v)| r * v).sum();
            *o = self.scale * rx + self.translation[i];
        }
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffineMap) -> Result<AffineMap> {
        check_dim(self.dim(), inner.dim())?;
        let mut out = self.clone();
        out.then_apply_inner(inner.scale, &inner.orthogonal, &inner.translation);
        Ok(out)
    }

    /// Replaces `self` with `self ∘ (x ↦ ratio · R x + b)`.
    pub(crate) fn then_apply_inner(&mut self, ratio: f64, orth: &[f64], b: &[f64]) {
        let d = self.dim();
        if d == 1 {
            self.translation[0] += self.scale * self.orthogonal[0] * b[0];
            self.orthogonal[0] *= orth[0];
            self.scale *= ratio;
            return;
        }
        for i in 0..d {
            let row = &self.orthogonal[i * d..(i + 1) * d];
            let rb: f64 = row.iter().zip(b).map(|(r, v)| r * v).sum();
            self.translation[i] += self.scale * rb;
        }
        let mut prod = vec![0.0; d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.orthogonal[i * d + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..d {
                    prod[i * d + j] += a * orth[k * d + j];
                }
            }
        }
        self.orthogonal = prod;
        self.scale *= ratio;
    }
}

/// One contraction `S(x) = ρ R x + b` with `0 < ρ < 1` and `R` orthogonal.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMap {
    inner: AffineMap,
}

impl SimilarityMap {
    pub fn new(ratio: f64, orthogonal: Vec<f64>, translation: Vec<f64>) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::invalid(format!(
                "contraction ratio {ratio} not in (0,1)"
            )));
        }
        let d = translation.len();
        if d == 0 {
            return Err(Error::invalid("zero-dimensional map"));
        }
        if orthogonal.len() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                got: orthogonal.len(),
            });
        }
        for i in 0..d {
            for j in 0..d {
                let dot: f64 = (0..d)
                    .map(|k| orthogonal[k * d + i] * orthogonal[k * d + j])
                    .sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).abs() > ORTHOGONALITY_TOL {
                    return Err(Error::invalid(format!(
                        "orthogonal part fails RᵀR = I at ({i},{j}): {dot}"
                    )));
                }
            }
        }
        Ok(SimilarityMap {
            inner: AffineMap {
                scale: ratio,
                orthogonal,
                translation,
            },
        })
    }

    /// `x ↦ ratio · x + translation`.
    pub fn scaling(ratio: f64, translation: Vec<f64>) -> Result<Self> {
        let d = translation.len();
        Self::new(ratio, identity_matrix(d), translation)
    }

    /// Planar similarity with rotation angle `theta` (radians).
    pub fn rotation2d(ratio: f64, theta: f64, translation: [f64; 2]) -> Result<Self> {
        let (s, c) = theta.sin_cos();
        Self::new(ratio, vec![c, -s, s, c], translation.to_vec())
    }

    pub fn ratio(&self) -> f64 {
        self.inner.scale
    }

    pub fn orthogonal(&self) -> &[f64] {
        &self.inner.orthogonal
    }

    pub fn translation(&self) -> &[f64] {
        &self.inner.translation
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn as_affine(&self) -> &AffineMap {
        &self.inner
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.inner.apply(x)
    }

    /// The unique fixed point `x = ρ R x + b`, i.e. `(I − ρR) x = b`.
    pub fn fixed_point(&self) -> Vec<f64> {
        let d = self.dim();
        let mut a = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                a[i * d + j] = -self.ratio() * self.orthogonal()[i * d + j];
            }
            a[i * d + i] += 1.0;
        }
        solve_linear(a, self.translation().to_vec())
    }
}

/// Gaussian elimination with partial pivoting; `a` is nonsingular here.
fn solve_linear(mut a: Vec<f64>, mut b: Vec<f64>) -> Vec<f64> {
    let d = b.len();
    for col in 0..d {
        let pivot = (col..d)
            .max_by(|&i, &j| a[i * d + col].abs().total_cmp(&a[j * d + col].abs()))
            .unwrap();
        if pivot != col {
            for k in 0..d {
                a.swap(col * d + k, pivot * d + k);
            }
            b.swap(col, pivot);
        }
        let p = a[col * d + col];
        for row in col + 1..d {
            let f = a[row * d + col] / p;
            for k in col..d {
                a[row * d + k] -= f * a[col * d + k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; d];
    for row in (0..d).rev() {
        let s: f64 = (row + 1..d).map(|k| a[row * d + k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row * d + row];
    }
    x
}

/// Applies `map` to `x`.
pub fn map_apply(map: &SimilarityMap, x: &[f64]) -> Result<Vec<f64>> {
    map.apply(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn scaling_only() {
        let m = SimilarityMap::scaling(0.5, vec![0.0]).unwrap();
        assert_eq!(map_apply(&m, &[1.0]).unwrap(), vec![0.5]);
    }

    #[test]
    fn quarter_turn_then_shift() {
        let m = SimilarityMap::rotation2d(0.5, FRAC_PI_2, [1.0, 0.0]).unwrap();
        let y = map_apply(&m, &[1.0, 0.0]).unwrap();
        assert_relative_eq!(y[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(y[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn right_cantor_map_fixes_one() {
        let m = SimilarityMap::scaling(1.0 / 3.0, vec![2.0 / 3.0]).unwrap();
        assert_relative_eq!(map_apply(&m, &[1.0]).unwrap()[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(m.fixed_point()[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(SimilarityMap::scaling(1.0, vec![0.0]).is_err());
        assert!(SimilarityMap::scaling(0.0, vec![0.0]).is_err());
        assert!(SimilarityMap::new(0.5, vec![1.0, 0.1, 0.0, 1.0], vec![0.0, 0.0]).is_err());
        let m = SimilarityMap::scaling(0.5, vec![0.0, 0.0]).unwrap();
        assert_eq!(
            map_apply(&m, &[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        );
    }

    #[test]
    fn compose_is_left_to_right() {
        let a = SimilarityMap::rotation2d(0.5, 0.3, [1.0, -0.2]).unwrap();
        let b = SimilarityMap::rotation2d(0.25, -1.1, [0.1, 0.7]).unwrap();
        let ab = a.as_affine().compose(b.as_affine()).unwrap();
        let x = [0.3, -0.9];
        let direct = a.apply(&b.apply(&x).unwrap()).unwrap();
        let composed = ab.apply(&x).unwrap();
        for i in 0..2 {
            assert_relative_eq!(direct[i], composed[i], epsilon = 1e-15);
        }
        assert_relative_eq!(ab.scale(), 0.125);
    }

    proptest! {
        #[test]
        fn distances_scale_by_ratio(
            ratio in 0.01f64..0.99, theta in -3.2f64..3.2,
            bx in -5.0f64..5.0, by in -5.0f64..5.0,
            x in proptest::array::uniform2(-10.0f64..10.0),
            y in proptest::array::uniform2(-10.0f64..10.0),
        ) {
            let m = SimilarityMap::rotation2d(ratio, theta, [bx, by]).unwrap();
            let (fx, fy) = (m.apply(&x).unwrap(), m.apply(&y).unwrap());
            let d0 = ((x[0]-y[0]).powi(2) + (x[1]-y[1]).powi(2)).sqrt();
            let d1 = ((fx[0]-fy[0]).powi(2) + (fx[1]-fy[1]).powi(2)).sqrt();
            prop_assert!((d1 - ratio * d0).abs() <= 1e-12 * (1.0 + d0));
        }
    }
}
