//! 2×2 matrices indexed by sign pairs.

use std::ops::{Index, IndexMut, Mul, Sub};

use crate::{Analytic, Error, Result, Scalar, Sign};

/// Entries `m[(ε, ε')]`, with `+ → 0` and `- → 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix2<S> {
    pub m: [[S; 2]; 2],
}

impl<S: Scalar> Matrix2<S> {
    pub fn new(a: S, b: S, c: S, d: S) -> Self {
        Matrix2 { m: [[a, b], [c, d]] }
    }

    pub fn from_fn(mut f: impl FnMut(Sign, Sign) -> S) -> Self {
        let [p, n] = Sign::BOTH;
        Matrix2::new(f(p, p), f(p, n), f(n, p), f(n, n))
    }

    pub fn try_from_fn(mut f: impl FnMut(Sign, Sign) -> Result<S>) -> Result<Self> {
        let [p, n] = Sign::BOTH;
        Ok(Matrix2::new(f(p, p)?, f(p, n)?, f(n, p)?, f(n, n)?))
    }

    pub fn identity() -> Self {
        Matrix2::diag(S::one(), S::one())
    }

    pub fn diag(a: S, d: S) -> Self {
        Matrix2::new(a, S::zero(), S::zero(), d)
    }

    pub fn det(&self) -> S {
        self.m[0][0].clone() * &self.m[1][1] - self.m[0][1].clone() * &self.m[1][0]
    }

    pub fn scale(&self, s: &S) -> Self {
        Matrix2::from_fn(|a, b| self[(a, b)].clone() * s)
    }

    pub fn add(&self, o: &Self) -> Self {
        Matrix2::from_fn(|a, b| self[(a, b)].clone() + &o[(a, b)])
    }
}

impl<S: Analytic> Matrix2<S> {
    /// Max-row-sum norm.
    pub fn norm(&self) -> f64 {
        (0..2).map(|i| self.m[i][0].abs() + self.m[i][1].abs()).fold(0.0, f64::max)
    }

    /// Inverse by adjugate; fails when `|det| ≤ 1e-12 · ‖m‖²`.
    pub fn inverse(&self) -> Result<Self> {
        let d = self.det();
        let n = self.norm();
        if !(d.abs() > 1e-12 * n * n) {
            return Err(Error::Singular(format!("2x2 inverse: |det| = {:e}, |m| = {n:e}", d.abs())));
        }
        let [[a, b], [c, e]] = &self.m;
        Ok(Matrix2::new(e.clone() / &d, -b.clone() / &d, -c.clone() / &d, a.clone() / &d))
    }

    /// `‖self - o‖ / max(‖self‖, ‖o‖)`.
    pub fn rel_diff(&self, o: &Self) -> f64 {
        let m = self.norm().max(o.norm());
        if m == 0.0 {
            0.0
        } else {
            (self - o).norm() / m
        }
    }
}

impl<S> Index<(Sign, Sign)> for Matrix2<S> {
    type Output = S;
    fn index(&self, (a, b): (Sign, Sign)) -> &S {
        &self.m[a.idx()][b.idx()]
    }
}

impl<S> IndexMut<(Sign, Sign)> for Matrix2<S> {
    fn index_mut(&mut self, (a, b): (Sign, Sign)) -> &mut S {
        &mut self.m[a.idx()][b.idx()]
    }
}

impl<S: Scalar> Mul for &Matrix2<S> {
    type Output = Matrix2<S>;
    fn mul(self, o: &Matrix2<S>) -> Matrix2<S> {
        let e = |i: usize, j: usize| self.m[i][0].clone() * &o.m[0][j] + self.m[i][1].clone() * &o.m[1][j];
        Matrix2::new(e(0, 0), e(0, 1), e(1, 0), e(1, 1))
    }
}

impl<S: Scalar> Sub for &Matrix2<S> {
    type Output = Matrix2<S>;
    fn sub(self, o: &Matrix2<S>) -> Matrix2<S> {
        Matrix2::from_fn(|a, b| self[(a, b)].clone() - &o[(a, b)])
    }
}
