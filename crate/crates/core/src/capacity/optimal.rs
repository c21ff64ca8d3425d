use serde::Serialize;

use crate::channel::{ChannelModel, KernelTable, RankPmf};
use crate::counting::CountingContext;
use crate::error::{Error, Result};

use super::transition_matrix;

const LOG2_E: f64 = std::f64::consts::LOG2_E;
/// Slack on `Θ >= threshold` comparisons.
const THETA_SLACK: f64 = 1e-12;
pub const KKT_TOLERANCE: f64 = 1e-7;
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const ITERATION_CAP: usize = 100_000;
/// Letters with `R(r)` below this are treated as outside the support.
const SUPPORT_FLOOR: f64 = 1e-6;

/// `gbar[r] = g(Ũ)` for any `r`-dimensional `Ũ` of a dimension-symmetric
/// channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GTable {
    pub t: usize,
    pub m: usize,
    pub n: usize,
    pub q: u64,
    pub gbar: Vec<f64>,
    pub r_star: usize,
    pub c_csub_norm: f64,
    /// `log2 min{M, N} / (T log2 q)`.
    pub gap_bound_norm: f64,
    /// `log2(min{M, N} + 1) / (T log2 q)`, which bounds `I(rank X; rank Y)`
    /// for every input.
    pub gap_bound_safe_norm: f64,
}

pub fn g_table(kernel: &KernelTable, t: usize, m: usize, n: usize, q: u64) -> Result<GTable> {
    let ctx = CountingContext::new(q)?;
    let mut gbar = Vec::with_capacity(kernel.num_inputs());
    for (r, row) in kernel.rows().iter().enumerate() {
        let mut g = 0.0;
        for (s, &p) in row.iter().enumerate() {
            if p > 0.0 && s <= r {
                g += p * (ctx.log2_chi(t, s)? - ctx.log2_chi(r, s)?);
            }
        }
        gbar.push(g);
    }
    let r_star = argmax(&gbar);
    let norm = t as f64 * ctx.log2_q();
    let mn = m.min(n) as f64;
    Ok(GTable {
        t,
        m,
        n,
        q,
        c_csub_norm: gbar[r_star] / norm,
        gbar,
        r_star,
        gap_bound_norm: mn.log2() / norm,
        gap_bound_safe_norm: (mn + 1.0).log2() / norm,
    })
}

/// `(r*, C_csub)` with `C_csub` normalized.
pub fn optimal_input_rank(kernel: &KernelTable, t: usize, m: usize, n: usize, q: u64) -> Result<(usize, f64)> {
    let g = g_table(kernel, t, m, n, q)?;
    Ok((g.r_star, g.c_csub_norm))
}

/// Lowest index attaining the maximum.
fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// `Θ(T, r, H)`, defined for `r < rank*(H)`.
pub fn theta(t: usize, r: usize, pmf: &RankPmf, m: usize, q: u64) -> Result<f64> {
    let star = pmf.rank_star();
    if r >= star {
        return Err(Error::domain(format!("Θ needs r < rank*(H) = {star}, got r = {r}")));
    }
    if star > m {
        return Err(Error::domain("rank pmf has support beyond M"));
    }
    let ctx = CountingContext::new(q)?;
    let slope = (star - r) as f64 * pmf.get(star);
    Ok((t as f64 - m as f64) * slope - (r * (m - r)) as f64 + ctx.log2_chi_tilde(r, r)? / ctx.log2_q())
}

/// Least `T >= M` with `Θ(T, r) >= threshold` for all `r < r_max`.
fn least_t(pmf: &RankPmf, m: usize, q: u64, r_max: usize, threshold: f64) -> Result<usize> {
    let star = pmf.rank_star();
    let p_star = pmf.get(star);
    let mut t = m;
    for r in 0..r_max {
        let at_m = theta(m, r, pmf, m, q)?;
        if at_m + THETA_SLACK >= threshold {
            continue;
        }
        let slope = (star - r) as f64 * p_star;
        let mut need = m + ((threshold - at_m - THETA_SLACK) / slope).ceil().max(0.0) as usize;
        // Guard against rounding in the division.
        while theta(need, r, pmf, m, q)? + THETA_SLACK < threshold {
            need += 1;
        }
        while need > m && theta(need - 1, r, pmf, m, q)? + THETA_SLACK >= threshold {
            need -= 1;
        }
        t = t.max(need);
    }
    Ok(t)
}

/// Least `T >= M` with `Θ(T, r) >= 0` for every `r < rank*(H)`.
pub fn find_t0(pmf: &RankPmf, m: usize, q: u64) -> Result<usize> {
    least_t(pmf, m, q, pmf.rank_star(), 0.0)
}

/// Least `T >= M` with `Θ(T, r) >= -log2 min_{s<M} p(s)` for every `r < M`.
pub fn find_t1(pmf: &RankPmf, m: usize, q: u64) -> Result<usize> {
    if !pmf.is_regular(m) {
        return Err(Error::RequiresRegular);
    }
    let min_p = (0..m).map(|s| pmf.get(s)).fold(f64::INFINITY, f64::min);
    least_t(pmf, m, q, m, -min_p.log2())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaRow {
    pub t: usize,
    /// `Θ(T, r)` for `r < rank*(H)`.
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaReport {
    pub rank_star: usize,
    pub t0: usize,
    /// `None` when the pmf is not regular.
    pub t1: Option<usize>,
    pub rows: Vec<ThetaRow>,
}

pub fn theta_report(pmf: &RankPmf, m: usize, q: u64, ts: &[usize]) -> Result<ThetaReport> {
    let rank_star = pmf.rank_star();
    let t1 = match find_t1(pmf, m, q) {
        Ok(t) => Some(t),
        Err(Error::RequiresRegular) => None,
        Err(e) => return Err(e),
    };
    let rows = ts
        .iter()
        .map(|&t| {
            Ok(ThetaRow {
                t,
                theta: (0..rank_star).map(|r| theta(t, r, pmf, m, q)).collect::<Result<_>>()?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ThetaReport {
        rank_star,
        t0: find_t0(pmf, m, q)?,
        t1,
        rows,
    })
}

/// Result of a Blahut–Arimoto run on a channel matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlahutArimoto {
    /// Best lower bound on the optimum, in bits.
    pub value: f64,
    /// Upper bound `max_x c_x` at the final iterate.
    pub upper: f64,
    pub input: Vec<f64>,
    /// `c_x = D(W(.|x) || P_Y) + reward[x]` at the final iterate.
    pub scores: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Maximizes `I(X;Y) + Σ_x p(x) reward[x]` over input pmfs by multiplicative
/// updates. Stops once the duality gap is below `tol` and the iterate has
/// settled, or after `cap` iterations.
fn ba_core(rows: &[Vec<f64>], reward: &[f64], tol: f64, cap: usize) -> BlahutArimoto {
    let nx = rows.len();
    let ny = rows.iter().map(Vec::len).max().unwrap_or(0);
    let mut p = vec![1.0 / nx as f64; nx];
    let mut scores = vec![0.0; nx];
    let mut py = vec![0.0; ny];
    let mut iterations = 0;
    let mut converged = false;
    let (mut lower, mut upper);
    loop {
        py.iter_mut().for_each(|v| *v = 0.0);
        for (row, &px) in rows.iter().zip(&p) {
            for (y, &w) in row.iter().enumerate() {
                py[y] += px * w;
            }
        }
        for (x, row) in rows.iter().enumerate() {
            let d: f64 = row
                .iter()
                .enumerate()
                .filter(|(_, &w)| w > 0.0)
                .map(|(y, &w)| w * (w / py[y]).log2())
                .sum();
            scores[x] = d + reward[x];
        }
        lower = p.iter().zip(&scores).map(|(a, b)| a * b).sum();
        upper = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if iterations >= cap {
            break;
        }
        let mut next: Vec<f64> = p.iter().zip(&scores).map(|(&a, &c)| a * (c - upper).exp2()).collect();
        let z: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= z);
        let step = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let settled = step < tol * 1e-3;
        p = next;
        iterations += 1;
        if upper - lower < tol && settled {
            converged = true;
            break;
        }
    }
    BlahutArimoto {
        value: lower,
        upper,
        input: p,
        scores,
        iterations,
        converged,
    }
}

/// Capacity in bits of the channel with transition rows `w[x][y]`.
pub fn blahut_arimoto(w: &[Vec<f64>], tol: f64) -> Result<BlahutArimoto> {
    if w.is_empty() {
        return Err(Error::domain("empty channel"));
    }
    for row in w {
        if (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::domain("channel rows must sum to 1"));
        }
    }
    Ok(ba_core(w, &vec![0.0; w.len()], tol, ITERATION_CAP))
}

/// Capacity of the full matrix channel `X -> Y` by enumeration.
pub fn exact_capacity(model: &ChannelModel, tol: f64) -> Result<BlahutArimoto> {
    blahut_arimoto(&transition_matrix(model)?, tol)
}

/// Diagnostics for the stationarity conditions of the α-type problem with
/// uniform `Q_r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktReport {
    /// `λ_r = R(r) c_r - log2 e`.
    pub lambda_r: Vec<f64>,
    /// `λ̄ = C - log2 e`.
    pub lambda_bar: f64,
    /// `Σ_r λ_r + (M - 1) log2 e`, reported alongside `λ̄` for comparison.
    pub lambda_sum: f64,
    /// `∂I/∂R(r) + gbar[r]` for every `r`.
    pub partials: Vec<f64>,
    pub max_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmetricOptimum {
    /// `C_sub` in bits.
    pub value: f64,
    pub value_norm: f64,
    pub r: Vec<f64>,
    pub gbar: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub kkt: KktReport,
}

/// Maximizes `I(rank X; rank Y) + Σ R(r) gbar[r]` over rank laws `R`.
pub fn c_sub_symmetric(kernel: &KernelTable, t: usize, m: usize, q: u64, tol: f64) -> Result<SymmetricOptimum> {
    let g = g_table(kernel, t, m, m, q)?;
    let ba = ba_core(kernel.rows(), &g.gbar, tol, ITERATION_CAP);
    let value = ba.value;
    let lambda_bar = value - LOG2_E;
    let partials: Vec<f64> = ba.scores.iter().map(|c| c - LOG2_E).collect();
    let mut max_violation: f64 = 0.0;
    for (r, &d) in partials.iter().enumerate() {
        let excess = d - lambda_bar;
        let v = if ba.input[r] >= SUPPORT_FLOOR { excess.abs() } else { excess.max(0.0) };
        max_violation = max_violation.max(v);
    }
    let lambda_r: Vec<f64> = ba.input.iter().zip(&ba.scores).map(|(p, c)| p * c - LOG2_E).collect();
    let lambda_sum = lambda_r.iter().sum::<f64>() + (m as f64 - 1.0) * LOG2_E;
    let ctx = CountingContext::new(q)?;
    Ok(SymmetricOptimum {
        value,
        value_norm: value / (t as f64 * ctx.log2_q()),
        r: ba.input,
        gbar: g.gbar,
        iterations: ba.iterations,
        converged: ba.converged,
        kkt: KktReport {
            lambda_r,
            lambda_bar,
            lambda_sum,
            partials,
            max_violation,
            tolerance: KKT_TOLERANCE,
            pass: max_violation <= KKT_TOLERANCE,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelKind, Provenance};
    use crate::field::FieldSpec;

    fn full_rank_kernel(q: u32, t: usize, m: usize) -> KernelTable {
        let f = FieldSpec::prime(q).unwrap();
        let model = ChannelModel::new(f, t, m, m, ChannelKind::FullRankUniform).unwrap();
        model.kernel_table::<rand_chacha::ChaCha8Rng>(None).unwrap()
    }

    #[test]
    fn t0_full_rank() {
        assert_eq!(find_t0(&RankPmf::point(2, 2), 2, 2).unwrap(), 4);
        assert_eq!(find_t0(&RankPmf::point(3, 3), 3, 2).unwrap(), 7);
        assert_eq!(find_t0(&RankPmf::point(2, 2), 2, 3).unwrap(), 4);
        assert_eq!(find_t0(&RankPmf::point(3, 3), 3, 3).unwrap(), 6);
    }

    #[test]
    fn t1_requires_regular() {
        assert_eq!(find_t1(&RankPmf::point(2, 2), 2, 2), Err(Error::RequiresRegular));
        let pmf = RankPmf::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let t1 = find_t1(&pmf, 3, 2).unwrap();
        let thr = -(0.1f64).log2();
        for r in 0..3 {
            assert!(theta(t1, r, &pmf, 3, 2).unwrap() >= thr - 1e-12);
        }
        assert!((0..3).any(|r| theta(t1 - 1, r, &pmf, 3, 2).unwrap() < thr));
    }

    #[test]
    fn g_table_full_rank_optimal_rank() {
        let k = full_rank_kernel(2, 5, 2);
        let g = g_table(&k, 5, 2, 2, 2).unwrap();
        assert_eq!(g.gbar[0], 0.0);
        assert_eq!(g.r_star, 2);
        let k = full_rank_kernel(3, 4, 2);
        assert_eq!(g_table(&k, 4, 2, 2, 3).unwrap().r_star, 2);
    }

    #[test]
    fn single_letter_value() {
        let k = KernelTable::new(vec![vec![1.0]], Provenance::ClosedForm).unwrap();
        let opt = c_sub_symmetric(&k, 3, 1, 2, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(opt.value, 0.0);
        assert!(opt.kkt.pass);
    }

    #[test]
    fn full_rank_matches_projective_space() {
        let ctx = CountingContext::new(2).unwrap();
        for (t, m) in [(2, 1), (3, 2), (5, 2)] {
            let k = full_rank_kernel(2, t, m);
            let opt = c_sub_symmetric(&k, t, m, 2, DEFAULT_TOLERANCE).unwrap();
            let want = ctx.log2_pj_size(m, t).unwrap();
            assert!((opt.value - want).abs() < 1e-7, "T={t} M={m}: {} vs {want}", opt.value);
            assert!(opt.kkt.pass, "{:?}", opt.kkt);
        }
    }

    #[test]
    fn ba_binary_symmetric() {
        let e: f64 = 0.11;
        let w = vec![vec![1.0 - e, e], vec![e, 1.0 - e]];
        let ba = blahut_arimoto(&w, 1e-12).unwrap();
        let h = -e * e.log2() - (1.0 - e) * (1.0 - e).log2();
        assert!((ba.value - (1.0 - h)).abs() < 1e-9);
    }
}
