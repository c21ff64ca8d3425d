//! Dense two-phase simplex with Bland's rule, generic over exact rationals
//! and floats.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Scalar arithmetic used by [`Simplex`].
pub trait LpScalar: Clone + Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(v: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn is_pos(&self) -> bool;
    fn is_neg(&self) -> bool;
    fn lt(&self, o: &Self) -> bool;
    fn is_zero_ish(&self) -> bool {
        !self.is_pos() && !self.is_neg()
    }
}

const FLOAT_EPS: f64 = 1e-11;

impl LpScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn is_pos(&self) -> bool {
        *self > FLOAT_EPS
    }
    fn is_neg(&self) -> bool {
        *self < -FLOAT_EPS
    }
    fn lt(&self, o: &Self) -> bool {
        *self < *o - FLOAT_EPS
    }
}

impl LpScalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_f64(v: f64) -> Self {
        BigRational::from_float(v).unwrap_or_else(|| BigRational::from_integer(BigInt::zero()))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn is_pos(&self) -> bool {
        self.is_positive()
    }
    fn is_neg(&self) -> bool {
        self.is_negative()
    }
    fn lt(&self, o: &Self) -> bool {
        self < o
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<S> {
    Optimal { x: Vec<S>, value: S },
    Infeasible,
    Unbounded,
}

/// `min c·x` subject to row constraints and `x >= 0`.
#[derive(Debug, Clone)]
pub struct Simplex<S> {
    c: Vec<S>,
    rows: Vec<(Vec<S>, Sense, S)>,
}

struct Tableau<S> {
    /// `m` constraint rows followed by the cost row; last column is the rhs.
    t: Vec<Vec<S>>,
    basis: Vec<usize>,
}

impl<S: LpScalar> Tableau<S> {
    fn width(&self) -> usize {
        self.t[0].len() - 1
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.t[row][col].clone();
        for v in self.t[row].iter_mut() {
            *v = v.div(&p);
        }
        let pivot_row = self.t[row].clone();
        for (i, r) in self.t.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            if r[col].is_zero_ish() {
                r[col] = S::zero();
                continue;
            }
            let f = r[col].clone();
            for (v, pv) in r.iter_mut().zip(&pivot_row) {
                if !pv.is_zero_ish() {
                    *v = v.sub(&f.mul(pv));
                }
            }
            r[col] = S::zero();
        }
        self.basis[row] = col;
    }

    /// Runs Bland's rule over columns `< allowed`. Returns false when
    /// unbounded.
    fn optimize(&mut self, allowed: usize) -> bool {
        let m = self.basis.len();
        let rhs = self.width();
        loop {
            let cost = &self.t[m];
            let Some(col) = (0..allowed).find(|&j| cost[j].is_neg()) else {
                return true;
            };
            let mut best: Option<(usize, S)> = None;
            for i in 0..m {
                let a = &self.t[i][col];
                if !a.is_pos() {
                    continue;
                }
                let ratio = self.t[i][rhs].div(a);
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio.lt(&br) || (!br.lt(&ratio) && self.basis[i] < self.basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            match best {
                Some((row, _)) => self.pivot(row, col),
                None => return false,
            }
        }
    }
}

impl<S: LpScalar> Simplex<S> {
    pub fn new(c: Vec<S>) -> Self {
        Simplex { c, rows: Vec::new() }
    }

    pub fn constraint(&mut self, coeffs: Vec<S>, sense: Sense, rhs: S) -> &mut Self {
        assert_eq!(coeffs.len(), self.c.len(), "constraint width");
        self.rows.push((coeffs, sense, rhs));
        self
    }

    pub fn solve(&self) -> LpOutcome<S> {
        let n = self.c.len();
        let m = self.rows.len();
        let slacks = self.rows.iter().filter(|r| r.1 != Sense::Eq).count();
        // Normalize to nonnegative rhs, then decide which rows need an
        // artificial variable.
        let mut rows = Vec::with_capacity(m);
        for (coeffs, sense, rhs) in &self.rows {
            if rhs.is_neg() {
                let flipped = match sense {
                    Sense::Le => Sense::Ge,
                    Sense::Ge => Sense::Le,
                    Sense::Eq => Sense::Eq,
                };
                rows.push((
                    coeffs.iter().map(|v| S::zero().sub(v)).collect::<Vec<_>>(),
                    flipped,
                    S::zero().sub(rhs),
                ));
            } else {
                rows.push((coeffs.clone(), *sense, rhs.clone()));
            }
        }
        let artificials = rows.iter().filter(|r| r.1 != Sense::Le).count();
        let width = n + slacks + artificials;
        let mut t = vec![vec![S::zero(); width + 1]; m + 1];
        let mut basis = vec![0; m];
        let (mut next_slack, mut next_art) = (n, n + slacks);
        for (i, (coeffs, sense, rhs)) in rows.iter().enumerate() {
            t[i][..n].clone_from_slice(coeffs);
            t[i][width] = rhs.clone();
            match sense {
                Sense::Le => {
                    t[i][next_slack] = S::one();
                    basis[i] = next_slack;
                    next_slack += 1;
                }
                Sense::Ge => {
                    t[i][next_slack] = S::zero().sub(&S::one());
                    next_slack += 1;
                    t[i][next_art] = S::one();
                    basis[i] = next_art;
                    next_art += 1;
                }
                Sense::Eq => {
                    t[i][next_art] = S::one();
                    basis[i] = next_art;
                    next_art += 1;
                }
            }
        }
        let first_art = n + slacks;
        // Phase 1 cost row: minimize the sum of artificials.
        for i in 0..m {
            if basis[i] >= first_art {
                for j in 0..=width {
                    if j < first_art || j == width {
                        t[m][j] = t[m][j].sub(&t[i][j]);
                    }
                }
            }
        }
        let mut tab = Tableau { t, basis };
        tab.optimize(width);
        if tab.t[m][width].is_neg() {
            return LpOutcome::Infeasible;
        }
        // Drive remaining artificials out of the basis.
        let mut i = 0;
        while i < tab.basis.len() {
            if tab.basis[i] >= first_art {
                if let Some(col) = (0..first_art).find(|&j| !tab.t[i][j].is_zero_ish()) {
                    tab.pivot(i, col);
                } else {
                    tab.t.remove(i);
                    tab.basis.remove(i);
                    continue;
                }
            }
            i += 1;
        }
        let m = tab.basis.len();
        // Phase 2 cost row.
        let mut cost = vec![S::zero(); width + 1];
        cost[..n].clone_from_slice(&self.c);
        for i in 0..m {
            let cb = if tab.basis[i] < n { self.c[tab.basis[i]].clone() } else { S::zero() };
            if cb.is_zero_ish() {
                continue;
            }
            for j in 0..=width {
                cost[j] = cost[j].sub(&cb.mul(&tab.t[i][j]));
            }
        }
        for v in cost.iter_mut().skip(first_art).take(artificials) {
            *v = S::zero();
        }
        tab.t[m] = cost;
        if !tab.optimize(first_art) {
            return LpOutcome::Unbounded;
        }
        let mut x = vec![S::zero(); n];
        for (i, &b) in tab.basis.iter().enumerate() {
            if b < n {
                x[b] = tab.t[i][width].clone();
            }
        }
        let value = x.iter().zip(&self.c).fold(S::zero(), |acc, (a, b)| acc.add(&a.mul(b)));
        LpOutcome::Optimal { x, value }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn textbook_problem() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> 36 at (2, 6).
        let mut lp = Simplex::new(vec![r(-3, 1), r(-5, 1)]);
        lp.constraint(vec![r(1, 1), r(0, 1)], Sense::Le, r(4, 1))
            .constraint(vec![r(0, 1), r(2, 1)], Sense::Le, r(12, 1))
            .constraint(vec![r(3, 1), r(2, 1)], Sense::Le, r(18, 1));
        match lp.solve() {
            LpOutcome::Optimal { x, value } => {
                assert_eq!(value, r(-36, 1));
                assert_eq!(x, vec![r(2, 1), r(6, 1)]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = Simplex::new(vec![1.0]);
        lp.constraint(vec![1.0], Sense::Ge, 2.0).constraint(vec![1.0], Sense::Le, 1.0);
        assert_eq!(lp.solve(), LpOutcome::Infeasible);
        let mut lp = Simplex::new(vec![-1.0, 0.0]);
        lp.constraint(vec![1.0, -1.0], Sense::Le, 1.0);
        assert_eq!(lp.solve(), LpOutcome::Unbounded);
    }

    #[test]
    fn equality_rows() {
        // min x + 2y s.t. x + y = 3, x - y >= -1 (flipped rhs) -> x = 3, y = 0.
        let mut lp = Simplex::new(vec![1.0, 2.0]);
        lp.constraint(vec![1.0, 1.0], Sense::Eq, 3.0)
            .constraint(vec![1.0, -1.0], Sense::Ge, -1.0);
        match lp.solve() {
            LpOutcome::Optimal { value, .. } => assert!((value - 3.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }
}
