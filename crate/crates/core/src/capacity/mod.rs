//! Capacity bounds, optimal input ranks and throughput ratios.
//!
//! Rates with a `_norm` suffix are normalized by `T log2 q`, i.e. measured
//! in `q`-ary symbols per channel use.

mod optimal;
mod rho;
mod simplex;

pub use optimal::{
    blahut_arimoto, c_sub_symmetric, exact_capacity, find_t0, find_t1, g_table, optimal_input_rank, theta,
    theta_report, BlahutArimoto, GTable, KktReport, SymmetricOptimum, ThetaReport, DEFAULT_TOLERANCE, ITERATION_CAP,
    KKT_TOLERANCE,
};
pub use rho::{rho_min, rho_min_with, rho_n, LpArithmetic, RhoMin, RhoReport, EXACT_LP_LIMIT};
pub use simplex::{LpOutcome, LpScalar, Sense, Simplex};

use std::collections::HashMap;

use serde::Serialize;

use crate::channel::{AlphaInput, ChannelModel, Lens, RankPmf};
use crate::counting::CountingContext;
use crate::error::{Error, Result};
use crate::linalg::all_matrices;

/// `C_co = E[rank H] T log2 q` in bits.
pub fn coherent_capacity(pmf: &RankPmf, t: usize, q: u64) -> Result<f64> {
    let ctx = CountingContext::new(q)?;
    Ok(pmf.mean() * t as f64 * ctx.log2_q())
}

/// `(1 - M/T) E[rank H]`, normalized.
pub fn channel_training_rate(pmf: &RankPmf, t: usize, m: usize) -> Result<f64> {
    if t < m || t == 0 {
        return Err(Error::domain(format!("channel training needs T >= M (T = {t}, M = {m})")));
    }
    Ok((1.0 - m as f64 / t as f64) * pmf.mean())
}

/// Lower and upper bounds for extended channel training.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EctBounds {
    pub lower: f64,
    pub lower_r: usize,
    pub upper: f64,
    pub upper_r: usize,
}

/// Extended channel training bounds. The lower bound ranges over `r < M`
/// joined with the `r = M` channel training rate when `T >= M`.
pub fn ect_bounds(pmf: &RankPmf, t: usize, m: usize, q: u64) -> Result<EctBounds> {
    if t == 0 {
        return Err(Error::domain("T must be positive"));
    }
    let ctx = CountingContext::new(q)?;
    let p = |k: usize| if k <= m { pmf.get(k) } else { 0.0 };
    let frac = |r: usize| 1.0 - r as f64 / t as f64;

    let mut lower = f64::NEG_INFINITY;
    let mut lower_r = 0;
    for r in 0..m {
        let mut term = 0.0;
        for k in 0..r {
            if p(k) > 0.0 {
                term += p(k) * k as f64 * ctx.chi_tilde(r, k)?;
            }
        }
        for k in r..=m {
            if p(k) > 0.0 {
                term += r as f64 * p(k) * ctx.chi_tilde(k, r)?;
            }
        }
        let v = frac(r) * term;
        if v > lower {
            lower = v;
            lower_r = r;
        }
    }
    if t >= m {
        let ct = channel_training_rate(pmf, t, m)?;
        if ct > lower || m == 0 {
            lower = ct;
            lower_r = m;
        }
    }

    let mut upper = f64::NEG_INFINITY;
    let mut upper_r = 0;
    for r in 0..=m {
        let a: f64 = (0..r).map(|s| s as f64 * p(s)).sum::<f64>() + r as f64 * (r..=m).map(p).sum::<f64>();
        let v = frac(r) * a;
        if v > upper {
            upper = v;
            upper_r = r;
        }
    }
    Ok(EctBounds {
        lower,
        lower_r,
        upper,
        upper_r,
    })
}

/// Rate of the rank-`M` α-type input, normalized, and its gap `ε` above the
/// channel training rate.
pub fn subspace_lower_bound(pmf: &RankPmf, t: usize, m: usize, q: u64) -> Result<(f64, f64)> {
    let ct = channel_training_rate(pmf, t, m)?;
    let ctx = CountingContext::new(q)?;
    let mut bits = 0.0;
    for s in 0..=m.min(pmf.max_rank()) {
        let ps = pmf.get(s);
        if ps > 0.0 {
            bits += ps * (ctx.log2_chi(t, s)? - ctx.log2_chi(m, s)?);
        }
    }
    let rate = bits / (t as f64 * ctx.log2_q());
    Ok((rate, rate - ct))
}

/// All normalized rates at one block length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub t: usize,
    pub m: usize,
    pub n: usize,
    pub q: u64,
    pub e_rank: f64,
    pub c_coherent_norm: f64,
    pub c_ct_norm: Option<f64>,
    pub ect_lower_norm: f64,
    pub ect_lower_r: usize,
    pub ect_upper_norm: f64,
    pub ect_upper_r: usize,
    pub subspace_lower_norm: Option<f64>,
    pub epsilon_t_q: Option<f64>,
    pub upper_norm: f64,
}

pub fn bounds_report(pmf: &RankPmf, t: usize, m: usize, n: usize, q: u64) -> Result<BoundsReport> {
    let ect = ect_bounds(pmf, t, m, q)?;
    let (c_ct_norm, subspace_lower_norm, epsilon_t_q) = if t >= m {
        let (rate, eps) = subspace_lower_bound(pmf, t, m, q)?;
        (Some(channel_training_rate(pmf, t, m)?), Some(rate), Some(eps))
    } else {
        (None, None, None)
    };
    Ok(BoundsReport {
        t,
        m,
        n,
        q,
        e_rank: pmf.mean(),
        c_coherent_norm: pmf.mean(),
        c_ct_norm,
        ect_lower_norm: ect.lower,
        ect_lower_r: ect.lower_r,
        ect_upper_norm: ect.upper,
        ect_upper_r: ect.upper_r,
        subspace_lower_norm,
        epsilon_t_q,
        upper_norm: pmf.mean(),
    })
}

/// `J = Σ p(r,s) log2(χ[T s] / χ[r s])` for a joint rank pmf `joint[r][s]`.
pub fn decomposition_j(joint: &[Vec<f64>], t: usize, q: u64) -> Result<f64> {
    let ctx = CountingContext::new(q)?;
    let mut j = 0.0;
    for (r, row) in joint.iter().enumerate() {
        for (s, &p) in row.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            if s > r || r > t {
                return Err(Error::domain(format!("joint pmf has mass at (r, s) = ({r}, {s})")));
            }
            j += p * (ctx.log2_chi(t, s)? - ctx.log2_chi(r, s)?);
        }
    }
    Ok(j)
}

/// Both sides of `I(<X>;<Y>) = I(rank X; rank Y) + J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecompositionCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub i_rank: f64,
    pub j: f64,
}

/// Evaluates both sides by enumeration. The joint rank pmf behind `J` is
/// tallied separately from the mutual information computations.
pub fn decomposition_check(model: &ChannelModel, alpha: &AlphaInput) -> Result<DecompositionCheck> {
    let input = alpha.enumerate(model.field(), model.t(), model.m())?;
    let lhs = model.exact_mutual_information(&input, Lens::Subspace)?;
    let i_rank = model.exact_mutual_information(&input, Lens::Rank)?;
    let top = model.t().min(model.m());
    let mut joint = vec![vec![0.0; top + 1]; top + 1];
    for (x, px) in &input {
        if *px == 0.0 {
            continue;
        }
        let r = x.rank();
        for (y, py) in model.output_distribution(x)? {
            joint[r][y.rank()] += px * py;
        }
    }
    let j = decomposition_j(&joint, model.t(), model.field().q() as u64)?;
    Ok(DecompositionCheck {
        lhs,
        rhs: i_rank + j,
        i_rank,
        j,
    })
}

/// Transition matrix of the full channel `X -> Y` over all `T x M` inputs,
/// with outputs indexed in order of first appearance.
pub fn transition_matrix(model: &ChannelModel) -> Result<Vec<Vec<f64>>> {
    let inputs = all_matrices(model.field(), model.t(), model.m(), crate::channel::ENUMERATION_LIMIT)?;
    let mut index: HashMap<crate::linalg::Mat, usize> = HashMap::new();
    let mut rows = Vec::with_capacity(inputs.len());
    for x in &inputs {
        let mut row = Vec::new();
        for (y, p) in model.output_distribution(x)? {
            let next = index.len();
            let j = *index.entry(y).or_insert(next);
            row.push((j, p));
        }
        rows.push(row);
    }
    let width = index.len();
    Ok(rows
        .into_iter()
        .map(|row| {
            let mut dense = vec![0.0; width];
            for (j, p) in row {
                dense[j] += p;
            }
            dense
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelKind;
    use crate::field::FieldSpec;

    #[test]
    fn training_rate_examples() {
        assert_eq!(channel_training_rate(&RankPmf::point(1, 1), 2, 1).unwrap(), 0.5);
        assert_eq!(channel_training_rate(&RankPmf::point(3, 3), 3, 3).unwrap(), 0.0);
        assert!(channel_training_rate(&RankPmf::point(1, 1), 1, 2).is_err());
        assert_eq!(coherent_capacity(&RankPmf::point(1, 1), 2, 2).unwrap(), 2.0);
    }

    #[test]
    fn subspace_bound_small() {
        let (rate, eps) = subspace_lower_bound(&RankPmf::point(1, 1), 2, 1, 2).unwrap();
        assert!((rate - 3f64.log2() / 2.0).abs() < 1e-12);
        assert!((eps - (3f64.log2() / 2.0 - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn ect_constant_rank() {
        let b = ect_bounds(&RankPmf::point(3, 3), 10, 3, 2).unwrap();
        assert!((b.lower - 0.7 * 3.0).abs() < 1e-12);
        assert!((b.upper - 0.7 * 3.0).abs() < 1e-12);
        assert_eq!(b.upper_r, 3);
    }

    #[test]
    fn decomposition_small() {
        let f = FieldSpec::prime(2).unwrap();
        let model = ChannelModel::new(f, 2, 2, 2, ChannelKind::PurelyRandom).unwrap();
        let alpha = AlphaInput::uniform(vec![0.25, 0.25, 0.5]).unwrap();
        let c = decomposition_check(&model, &alpha).unwrap();
        assert!((c.lhs - c.rhs).abs() < 1e-9, "{c:?}");
        assert_eq!(decomposition_j(&[vec![1.0]], 3, 2).unwrap(), 0.0);
    }
}
