//! Small dense matrices and a partial-pivoting linear solver.
//!
//! Only the 3×3 and 6×6 sizes are used by the integrators: 3×3 for field
//! Jacobians and the SLERP midpoint derivative, 6×6 for the coupled
//! `(velocity, position)` Newton systems.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Relative pivot threshold below which a matrix is reported singular.
pub const SINGULAR_PIVOT_RTOL: f64 = 1e-14;

/// Square matrix stored row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matrix<const N: usize>(pub [[f64; N]; N]);

pub type Mat3 = Matrix<3>;
pub type Mat6 = Matrix<6>;

impl<const N: usize> Matrix<N> {
    pub const fn zeros() -> Self {
        Matrix([[0.0; N]; N])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.0[i][i] = 1.0;
        }
        m
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = f(i, j);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        N
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(|i, j| self.0[j][i])
    }

    pub fn mul_vec(&self, v: &[f64; N]) -> [f64; N] {
        let mut out = [0.0; N];
        for (i, row) in self.0.iter().enumerate() {
            out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|r| r.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_fn(|i, j| self.0[i][j] * s)
    }
}

impl Mat3 {
    pub fn apply(&self, v: Vec3) -> Vec3 {
        Vec3::from(self.mul_vec(&v.to_array()))
    }

    /// The matrix `[a]×` with `[a]× b = a × b`.
    pub fn skew(a: Vec3) -> Self {
        Matrix([[0.0, -a.z, a.y], [a.z, 0.0, -a.x], [-a.y, a.x, 0.0]])
    }

    pub fn outer(a: Vec3, b: Vec3) -> Self {
        let (a, b) = (a.to_array(), b.to_array());
        Self::from_fn(|i, j| a[i] * b[j])
    }

    pub fn diag(d: [f64; 3]) -> Self {
        Self::from_fn(|i, j| if i == j { d[i] } else { 0.0 })
    }
}

impl Mat6 {
    /// Assemble `[[a, b], [c, d]]` from four 3×3 blocks.
    pub fn from_blocks(a: &Mat3, b: &Mat3, c: &Mat3, d: &Mat3) -> Self {
        Self::from_fn(|i, j| {
            let blk = match (i < 3, j < 3) {
                (true, true) => a,
                (true, false) => b,
                (false, true) => c,
                (false, false) => d,
            };
            blk.0[i % 3][j % 3]
        })
    }
}

impl<const N: usize> Index<(usize, usize)> for Matrix<N> {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[i][j]
    }
}

impl<const N: usize> IndexMut<(usize, usize)> for Matrix<N> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.0[i][j]
    }
}

impl<const N: usize> Add for Matrix<N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] + rhs.0[i][j])
    }
}

impl<const N: usize> Sub for Matrix<N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| self.0[i][j] - rhs.0[i][j])
    }
}

impl<const N: usize> Neg for Matrix<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const N: usize> Mul for Matrix<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self::from_fn(|i, j| (0..N).map(|k| self.0[i][k] * rhs.0[k][j]).sum())
    }
}

impl<const N: usize> Mul<f64> for Matrix<N> {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        self.scale(s)
    }
}

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
///
/// A pivot smaller than `SINGULAR_PIVOT_RTOL * max|a|` is reported as
/// [`Error::SingularMatrix`].
#[allow(clippy::needless_range_loop)]
pub fn solve_linear<const N: usize>(a: &Matrix<N>, b: &[f64; N]) -> Result<[f64; N]> {
    let scale = a.max_abs();
    let threshold = SINGULAR_PIVOT_RTOL * scale;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::SingularMatrix {
            pivot: 0.0,
            threshold,
        });
    }
    let mut m = a.0;
    let mut x = *b;

    for col in 0..N {
        let (piv_row, piv_abs) =
            (col..N)
                .map(|r| (r, m[r][col].abs()))
                .fold(
                    (col, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
        if piv_abs < threshold || !piv_abs.is_finite() {
            return Err(Error::SingularMatrix {
                pivot: piv_abs,
                threshold,
            });
        }
        if piv_row != col {
            m.swap(piv_row, col);
            x.swap(piv_row, col);
        }
        let pivot = m[col][col];
        for r in col + 1..N {
            let factor = m[r][col] / pivot;
            if factor == 0.0 {
                continue;
            }
            m[r][col] = 0.0;
            for c in col + 1..N {
                m[r][c] -= factor * m[col][c];
            }
            x[r] -= factor * x[col];
        }
    }

    for row in (0..N).rev() {
        let tail: f64 = (row + 1..N).map(|c| m[row][c] * x[c]).sum();
        x[row] = (x[row] - tail) / m[row][row];
    }
    Ok(x)
}

pub fn inf_norm<const N: usize>(v: &[f64; N]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}
