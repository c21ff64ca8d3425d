use num_rational::BigRational;
use serde::Serialize;

use crate::channel::RankPmf;
use crate::error::{Error, Result};

use super::simplex::{LpOutcome, LpScalar, Sense, Simplex};

/// `ρ^(n) = max_{r <= n N*} r Pr{rank H^(n) >= r} / (n E[rank H])`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoReport {
    pub n: usize,
    pub rho_n: f64,
    /// Smallest maximizing `r`.
    pub r: usize,
    pub e_rank: f64,
}

pub fn rho_n(pmf: &RankPmf, n: usize, n_star: usize) -> Result<RhoReport> {
    if n == 0 {
        return Err(Error::domain("n must be >= 1"));
    }
    let e = pmf.mean();
    if e <= 0.0 {
        return Err(Error::domain("ρ needs E[rank H] > 0"));
    }
    let dist = pmf.convolve_power(n);
    let top = (n * n_star).min(dist.len() - 1);
    // tail[r] = Pr{rank >= r}
    let mut tail = vec![0.0; dist.len() + 1];
    for r in (0..dist.len()).rev() {
        tail[r] = tail[r + 1] + dist[r];
    }
    let mut best = (0.0, 0);
    for r in 1..=top {
        let v = r as f64 * tail[r];
        if v > best.0 {
            best = (v, r);
        }
    }
    Ok(RhoReport {
        n,
        rho_n: (best.0 / (n as f64 * e)).min(1.0),
        r: best.1,
        e_rank: e,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LpArithmetic {
    Exact,
    Float,
}

/// Optimum of the `ρ_min` linear program.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoMin {
    pub c: f64,
    pub n_star: usize,
    pub rho_min: f64,
    /// Minimizing rank pmf on `0..=N*`.
    pub pmf: Vec<f64>,
    /// Largest constraint violation of `pmf` evaluated in floating point.
    pub residual: f64,
    pub arithmetic: LpArithmetic,
}

/// Largest `N*` solved with exact rational pivoting by [`rho_min`].
pub const EXACT_LP_LIMIT: usize = 12;

/// `min_p max_r r Pr{rank >= r} / c` over pmfs on `0..=N*` with mean `c`.
pub fn rho_min(c: f64, n_star: usize) -> Result<RhoMin> {
    let mode = if n_star <= EXACT_LP_LIMIT { LpArithmetic::Exact } else { LpArithmetic::Float };
    rho_min_with(c, n_star, mode)
}

pub fn rho_min_with(c: f64, n_star: usize, arithmetic: LpArithmetic) -> Result<RhoMin> {
    if !(c > 0.0 && c <= n_star as f64) {
        return Err(Error::domain(format!("need 0 < c <= N* (c = {c}, N* = {n_star})")));
    }
    let (pmf, rho) = match arithmetic {
        LpArithmetic::Exact => solve::<BigRational>(c, n_star)?,
        LpArithmetic::Float => solve::<f64>(c, n_star)?,
    };
    let residual = residual(&pmf, c, rho);
    Ok(RhoMin {
        c,
        n_star,
        rho_min: rho,
        pmf,
        residual,
        arithmetic,
    })
}

/// Variables `p_0..p_{N*}` then `t`.
fn solve<S: LpScalar>(c: f64, n_star: usize) -> Result<(Vec<f64>, f64)> {
    let width = n_star + 2;
    let int = |v: usize| S::from_f64(v as f64);
    let cs = S::from_f64(c);
    let mut cost = vec![S::zero(); width];
    cost[n_star + 1] = S::one();
    let mut lp = Simplex::new(cost);
    for r in 1..=n_star {
        let mut row = vec![S::zero(); width];
        for v in row.iter_mut().take(n_star + 1).skip(r) {
            *v = int(r);
        }
        row[n_star + 1] = S::zero().sub(&cs);
        lp.constraint(row, Sense::Le, S::zero());
    }
    let mut total = vec![S::one(); width];
    total[n_star + 1] = S::zero();
    lp.constraint(total, Sense::Eq, S::one());
    let mut mean: Vec<S> = (0..=n_star).map(int).collect();
    mean.push(S::zero());
    lp.constraint(mean, Sense::Eq, cs);
    match lp.solve() {
        LpOutcome::Optimal { x, value } => {
            let pmf = x[..=n_star].iter().map(|v| v.to_f64().max(0.0)).collect();
            Ok((pmf, value.to_f64()))
        }
        LpOutcome::Infeasible => Err(Error::domain(format!("no rank pmf on 0..={n_star} has mean {c}"))),
        LpOutcome::Unbounded => Err(Error::Internal("ρ_min LP reported unbounded".into())),
    }
}

fn residual(pmf: &[f64], c: f64, rho: f64) -> f64 {
    let n_star = pmf.len() - 1;
    let mut worst = (pmf.iter().sum::<f64>() - 1.0).abs();
    let mean: f64 = pmf.iter().enumerate().map(|(s, p)| s as f64 * p).sum();
    worst = worst.max((mean - c).abs());
    let mut tail = 0.0;
    for r in (1..=n_star).rev() {
        tail += pmf[r];
        worst = worst.max(r as f64 * tail - rho * c);
    }
    worst.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_rank_is_one() {
        for n in [1, 3, 10] {
            assert!((rho_n(&RankPmf::point(3, 3), n, 3).unwrap().rho_n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_or_r_support_also_attains_one() {
        let pmf = RankPmf::new(vec![0.5, 0.5]).unwrap();
        assert!((rho_n(&pmf, 1, 1).unwrap().rho_n - 1.0).abs() < 1e-12);
    }

    #[test]
    fn table_endpoints() {
        let six = rho_min(6.0, 6).unwrap();
        assert!((six.rho_min - 1.0).abs() < 1e-12);
        let three = rho_min(3.0, 6).unwrap();
        assert!((three.rho_min - 0.460).abs() < 1e-3, "{three:?}");
        assert!(three.residual < 1e-9);
        let one = rho_min(1.0, 6).unwrap();
        assert!((one.rho_min - 0.408).abs() < 1e-3);
    }

    #[test]
    fn exact_and_float_agree() {
        for c in [1.0, 2.5, 4.0] {
            let a = rho_min_with(c, 8, LpArithmetic::Exact).unwrap();
            let b = rho_min_with(c, 8, LpArithmetic::Float).unwrap();
            assert!((a.rho_min - b.rho_min).abs() < 1e-9);
        }
    }

    #[test]
    fn infeasible_mean() {
        assert!(rho_min(7.0, 6).is_err());
        assert!(rho_min(0.0, 6).is_err());
    }
}
