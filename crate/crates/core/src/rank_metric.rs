//! Gabidulin codes, lifting, and decoding with the transfer matrix known
//! at the receiver.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{ChannelModel, RankPmf, ENUMERATION_LIMIT};
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::linalg::{solve_left, Mat, Solution};
use crate::rng::{trial_rng, RNG_ID};

/// `d(a, b) = rank(a - b)`.
pub fn rank_distance(a: &Mat, b: &Mat) -> Result<usize> {
    if a.shape() != b.shape() {
        return Err(Error::shape("rank distance needs equal shapes"));
    }
    Ok(a.sub(b)?.rank())
}

/// A Gabidulin code over a prime field `GF(q)`: codewords are `t × m_cols`
/// matrices whose column `j` holds the coordinates of `f(g_j)`, where
/// `f(z) = Σ_{i<k} u_i z^{q^i}` and the `g_j` are points of `GF(q^t)`
/// that are linearly independent over `GF(q)`.
#[derive(Debug, Clone)]
pub struct GabidulinCode {
    base: FieldSpec,
    ext: FieldSpec,
    t: usize,
    m_cols: usize,
    k: usize,
    points: Vec<u32>,
    basis: Vec<Mat>,
}

impl GabidulinCode {
    /// Uses the polynomial basis `1, x, .., x^{m_cols-1}` as evaluation
    /// points.
    pub fn new(base: &FieldSpec, t: usize, m_cols: usize, k: usize) -> Result<Self> {
        let p = base.p() as usize;
        let points = (0..m_cols.min(t)).map(|j| p.pow(j as u32) as u32).collect();
        Self::with_points(base, t, m_cols, k, points)
    }

    pub fn with_points(base: &FieldSpec, t: usize, m_cols: usize, k: usize, points: Vec<u32>) -> Result<Self> {
        if !base.is_prime_field() {
            return Err(Error::NotConstructible("the base field must be a prime field".into()));
        }
        if t < m_cols {
            return Err(Error::NotConstructible(format!(
                "Gabidulin codes need t >= m_cols (t = {t}, m_cols = {m_cols})"
            )));
        }
        if k == 0 || k > m_cols {
            return Err(Error::domain(format!("need 1 <= k <= m_cols (k = {k})")));
        }
        if points.len() != m_cols {
            return Err(Error::shape(format!("expected {m_cols} evaluation points")));
        }
        let ext = FieldSpec::new(base.p(), t as u32)?;
        if points.iter().any(|&g| !ext.contains(g)) {
            return Err(Error::InvalidField("evaluation point outside GF(q^t)".into()));
        }
        let mut code = GabidulinCode {
            base: base.clone(),
            ext,
            t,
            m_cols,
            k,
            points,
            basis: Vec::new(),
        };
        let coords = code.coordinates(&code.points);
        if coords.rank() < m_cols {
            return Err(Error::domain("evaluation points are linearly dependent over GF(q)"));
        }
        let mut basis = Vec::with_capacity(t * k);
        for i in 0..k {
            for b in 0..t {
                let mut msg = vec![0u32; k];
                msg[i] = code.ext.from_coeffs(&unit(t, b));
                basis.push(code.encode(&msg)?);
            }
        }
        code.basis = basis;
        Ok(code)
    }

    /// `t × len` matrix whose columns are the coordinates of `elems`.
    fn coordinates(&self, elems: &[u32]) -> Mat {
        let mut m = Mat::zeros(&self.base, self.t, elems.len());
        for (j, &e) in elems.iter().enumerate() {
            for (i, c) in self.ext.coeffs(e).into_iter().enumerate().take(self.t) {
                m.set(i, j, c);
            }
        }
        m
    }

    pub fn base(&self) -> &FieldSpec {
        &self.base
    }

    pub fn ext(&self) -> &FieldSpec {
        &self.ext
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn m_cols(&self) -> usize {
        self.m_cols
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn points(&self) -> &[u32] {
        &self.points
    }

    /// Minimum rank distance `m_cols - k + 1`.
    pub fn d(&self) -> usize {
        self.m_cols - self.k + 1
    }

    /// Dimension over the base field, `t k`.
    pub fn dimension(&self) -> usize {
        self.t * self.k
    }

    /// `log_q |C|`.
    pub fn log_q_size(&self) -> f64 {
        self.dimension() as f64
    }

    /// `log_q |C| / t <= m_cols - D + 1`.
    pub fn satisfies_singleton(&self) -> bool {
        self.log_q_size() / self.t as f64 <= (self.m_cols - self.d() + 1) as f64 + 1e-12
    }

    /// Encodes `k` symbols of `GF(q^t)`.
    pub fn encode(&self, message: &[u32]) -> Result<Mat> {
        if message.len() != self.k {
            return Err(Error::shape(format!("message must have {} symbols", self.k)));
        }
        if message.iter().any(|&u| !self.ext.contains(u)) {
            return Err(Error::InvalidField("message symbol outside GF(q^t)".into()));
        }
        let values: Vec<u32> = self
            .points
            .iter()
            .map(|&g| {
                message.iter().enumerate().fold(0, |acc, (i, &u)| {
                    self.ext.add(acc, self.ext.mul(u, self.ext.frobenius(g, i as u32)))
                })
            })
            .collect();
        Ok(self.coordinates(&values))
    }

    /// Encodes `t k` base-field coordinates (symbol `i` takes
    /// `coeffs[i t..(i + 1) t]`).
    pub fn encode_coordinates(&self, coeffs: &[u32]) -> Result<Mat> {
        if coeffs.len() != self.dimension() {
            return Err(Error::shape(format!("expected {} coordinates", self.dimension())));
        }
        let msg: Vec<u32> = coeffs.chunks(self.t).map(|c| self.ext.from_coeffs(c)).collect();
        self.encode(&msg)
    }

    /// Codewords of the unit messages, in coordinate order. They form a
    /// basis of the code over `GF(q)`.
    pub fn basis_codewords(&self) -> &[Mat] {
        &self.basis
    }

    /// All `q^{tk}` codewords (enumeration-sized codes only).
    pub fn codewords(&self) -> Result<Vec<Mat>> {
        let q = self.base.q() as u64;
        let count = q.checked_pow(self.dimension() as u32).filter(|&c| c <= ENUMERATION_LIMIT);
        let Some(count) = count else {
            return Err(Error::TooLarge(format!("q^(tk) = {q}^{}", self.dimension())));
        };
        (0..count)
            .map(|idx| {
                let mut rest = idx;
                let coeffs: Vec<u32> = (0..self.dimension())
                    .map(|_| {
                        let c = (rest % q) as u32;
                        rest /= q;
                        c
                    })
                    .collect();
                self.encode_coordinates(&coeffs)
            })
            .collect()
    }

    /// Minimum rank over nonzero codewords, by enumeration.
    pub fn min_distance_exhaustive(&self) -> Result<usize> {
        Ok(self
            .codewords()?
            .iter()
            .map(Mat::rank)
            .filter(|&r| r > 0)
            .min()
            .unwrap_or(0))
    }
}

fn unit(len: usize, i: usize) -> Vec<u32> {
    let mut v = vec![0; len];
    v[i] = 1;
    v
}

/// `n` blocks of size `T × M`, each `[I_M; X̃_i]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiftedCodeword {
    pub blocks: Vec<Mat>,
}

/// Prepends `I_M` to each `(T - M) × M` block.
pub fn lift(blocks: &[Mat], m: usize) -> Result<LiftedCodeword> {
    let field = blocks
        .first()
        .ok_or_else(|| Error::shape("nothing to lift"))?
        .field()
        .clone();
    let id = Mat::identity(&field, m);
    let blocks = blocks
        .iter()
        .map(|b| {
            if b.cols() != m {
                return Err(Error::shape(format!("code blocks must have {m} columns")));
            }
            id.vstack(b)
        })
        .collect::<Result<_>>()?;
    Ok(LiftedCodeword { blocks })
}

/// Splits a `(T - M) × nM` matrix into `n` blocks and lifts them.
pub fn lift_codeword(c: &Mat, n: usize, m: usize) -> Result<LiftedCodeword> {
    if c.cols() != n * m {
        return Err(Error::shape(format!("codeword must have nM = {} columns", n * m)));
    }
    let blocks: Vec<Mat> = (0..n).map(|i| c.submatrix(0..c.rows(), i * m..(i + 1) * m)).collect();
    lift(&blocks, m)
}

/// `log_q |C| / (n T)`.
pub fn lifted_rate(log_q_size: f64, n: usize, t: usize) -> f64 {
    log_q_size / (n * t) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RmOutcome {
    Decoded { message: Vec<u32>, codeword: Mat },
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmDecode {
    pub outcome: RmOutcome,
    /// `rank(H^(n)) >= nM - D + 1`.
    pub guaranteed: bool,
    pub rank_h: usize,
}

/// A Gabidulin code with `t = T - M` rows and `m_cols = nM` columns, used
/// over `n` channel blocks.
#[derive(Debug, Clone)]
pub struct LiftedRankMetricCode {
    code: GabidulinCode,
    t: usize,
    m: usize,
    n: usize,
}

impl LiftedRankMetricCode {
    pub fn new(base: &FieldSpec, t: usize, m: usize, n: usize, k: usize) -> Result<Self> {
        Self::with_points(base, t, m, n, k, None)
    }

    /// As [`new`](Self::new), with explicit evaluation points in `GF(q^{T-M})`.
    pub fn with_points(
        base: &FieldSpec,
        t: usize,
        m: usize,
        n: usize,
        k: usize,
        points: Option<Vec<u32>>,
    ) -> Result<Self> {
        if n == 0 || m == 0 || t <= m {
            return Err(Error::domain(format!("need n >= 1 and T > M >= 1 (T = {t}, M = {m})")));
        }
        if t - m < n * m {
            return Err(Error::NotConstructible(format!(
                "T - M = {} < nM = {}: no MRD code is available",
                t - m,
                n * m
            )));
        }
        let code = match points {
            Some(p) => GabidulinCode::with_points(base, t - m, n * m, k, p)?,
            None => GabidulinCode::new(base, t - m, n * m, k)?,
        };
        Ok(LiftedRankMetricCode {
            code,
            t,
            m,
            n,
        })
    }

    pub fn code(&self) -> &GabidulinCode {
        &self.code
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.code.d()
    }

    /// Decoding is guaranteed iff `rank(H^(n))` reaches this.
    pub fn threshold(&self) -> usize {
        self.n * self.m - self.d() + 1
    }

    pub fn rate(&self) -> f64 {
        lifted_rate(self.code.log_q_size(), self.n, self.t)
    }

    pub fn encode(&self, coeffs: &[u32]) -> Result<LiftedCodeword> {
        lift_codeword(&self.code.encode_coordinates(coeffs)?, self.n, self.m)
    }

    /// Recovers `H_i` from the identity part of each received block and
    /// solves `X̃^(n) H^(n) = Ỹ^(n)` over the code's coordinates.
    pub fn decode(&self, received: &[Mat]) -> Result<RmDecode> {
        if received.len() != self.n {
            return Err(Error::shape(format!("expected {} received blocks", self.n)));
        }
        let (m, t) = (self.m, self.t);
        let mut hs = Vec::with_capacity(self.n);
        let mut y = Vec::new();
        for b in received {
            if b.rows() != t {
                return Err(Error::shape(format!("received blocks must have {t} rows")));
            }
            hs.push(b.submatrix(0..m, 0..b.cols()));
            y.extend_from_slice(b.submatrix(m..t, 0..b.cols()).data());
        }
        let rank_h: usize = hs.iter().map(Mat::rank).sum();
        let base = self.code.base();
        let mut rows = Vec::with_capacity(self.code.dimension());
        for e in self.code.basis_codewords() {
            let mut v = Vec::with_capacity(y.len());
            for (i, h) in hs.iter().enumerate() {
                let block = e.submatrix(0..e.rows(), i * m..(i + 1) * m);
                v.extend_from_slice(block.mul(h)?.data());
            }
            rows.push(v);
        }
        let f = Mat::from_rows(base, &rows)?;
        let target = Mat::new(base.clone(), 1, y.len(), y)?;
        let outcome = match solve_left(&f, &target)? {
            Solution::Unique(x) => {
                let message = x.data().to_vec();
                let codeword = self.code.encode_coordinates(&message)?;
                RmOutcome::Decoded { message, codeword }
            }
            Solution::Multiple => RmOutcome::Ambiguous,
            Solution::Inconsistent => {
                return Err(Error::Internal("received blocks are not consistent with any codeword".into()))
            }
        };
        Ok(RmDecode {
            outcome,
            guaranteed: rank_h >= self.threshold(),
            rank_h,
        })
    }
}

/// Distribution of `rank(H^(n))` for block-diagonal `H^(n)`, by a direct
/// recursion over blocks.
fn block_rank_distribution(pmf: &RankPmf, n: usize) -> Vec<f64> {
    let top = pmf.max_rank();
    let mut dist = vec![0.0; n * top + 1];
    dist[0] = 1.0;
    for used in 0..n {
        let mut next = vec![0.0; n * top + 1];
        for (acc, &pa) in dist.iter().enumerate().take(used * top + 1) {
            for s in 0..=top {
                next[acc + s] += pa * pmf.get(s);
            }
        }
        dist = next;
    }
    dist
}

/// `TP_RM = R^(n) Pr{rank(H^(n)) >= nM - D + 1}` for an MRD code with
/// `k` message symbols.
pub fn throughput_rm(pmf: &RankPmf, t: usize, m: usize, n: usize, k: usize) -> Result<f64> {
    if t <= m || t - m < n * m {
        return Err(Error::NotConstructible(format!("T - M < nM (T = {t}, M = {m}, n = {n})")));
    }
    if k > n * m {
        return Err(Error::domain("k exceeds nM"));
    }
    let rate = lifted_rate(((t - m) * k) as f64, n, t);
    let d = n * m + 1 - k;
    let need = n * m + 1 - d;
    let dist = block_rank_distribution(pmf, n);
    let tail: f64 = dist.iter().skip(need).sum();
    Ok(rate * tail)
}

/// `(k, TP_RM)` for every `k = 0..=nM`.
pub fn throughput_rm_sweep(pmf: &RankPmf, t: usize, m: usize, n: usize) -> Result<Vec<(usize, f64)>> {
    (0..=n * m).map(|k| Ok((k, throughput_rm(pmf, t, m, n, k)?))).collect()
}

/// Monte Carlo summary of lifted rank-metric decoding.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RmReport {
    pub t: usize,
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub rate: f64,
    pub trials: usize,
    pub guaranteed: usize,
    pub decoded: usize,
    pub ambiguous: usize,
    /// Decoded to a wrong message.
    pub errors: usize,
    /// Guaranteed trials that did not decode correctly.
    pub guarantee_violations: usize,
    pub tp_analytic: f64,
    pub seed: u64,
    pub rng: String,
}

#[derive(Default, Clone, Copy)]
struct Tally {
    guaranteed: usize,
    decoded: usize,
    ambiguous: usize,
    errors: usize,
    violations: usize,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally {
            guaranteed: self.guaranteed + o.guaranteed,
            decoded: self.decoded + o.decoded,
            ambiguous: self.ambiguous + o.ambiguous,
            errors: self.errors + o.errors,
            violations: self.violations + o.violations,
        }
    }
}

/// Sends uniformly random messages through `model` and decodes them.
pub fn simulate_rm(model: &ChannelModel, code: &LiftedRankMetricCode, trials: usize, seed: u64) -> Result<RmReport> {
    if model.t() != code.t || model.m() != code.m || *model.field() != *code.code.base() {
        return Err(Error::domain("code and channel disagree on T, M or the field"));
    }
    let q = model.field().q();
    let dim = code.code.dimension();
    let tally = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<Tally> {
            let mut rng = trial_rng(seed, i as u64);
            let msg: Vec<u32> = (0..dim).map(|_| rng.gen_range(0..q)).collect();
            let sent = code.encode(&msg)?;
            let received = sent
                .blocks
                .iter()
                .map(|x| model.transmit(x, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            let out = code.decode(&received)?;
            let mut t = Tally::default();
            let correct = match &out.outcome {
                RmOutcome::Decoded { message, .. } => {
                    t.decoded = 1;
                    if *message != msg {
                        t.errors = 1;
                    }
                    *message == msg
                }
                RmOutcome::Ambiguous => {
                    t.ambiguous = 1;
                    false
                }
            };
            if out.guaranteed {
                t.guaranteed = 1;
                if !correct {
                    t.violations = 1;
                }
            }
            Ok(t)
        })
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;
    let pmf = model.rank_pmf()?;
    Ok(RmReport {
        t: code.t,
        m: code.m,
        n: code.n,
        k: code.code.k(),
        d: code.d(),
        rate: code.rate(),
        trials,
        guaranteed: tally.guaranteed,
        decoded: tally.decoded,
        ambiguous: tally.ambiguous,
        errors: tally.errors,
        guarantee_violations: tally.violations,
        tp_analytic: throughput_rm(&pmf, code.t, code.m, code.n, code.code.k())?,
        seed,
        rng: RNG_ID.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::all_matrices;

    fn gf2() -> FieldSpec {
        FieldSpec::prime(2).unwrap()
    }

    #[test]
    fn distance_examples() {
        let f = gf2();
        let a = Mat::from_rows(&f, &[vec![1, 1], vec![0, 0]]).unwrap();
        let b = Mat::from_rows(&f, &[vec![0, 0], vec![1, 1]]).unwrap();
        assert_eq!(rank_distance(&a, &b).unwrap(), 1);
        assert_eq!(rank_distance(&a, &a).unwrap(), 0);
        assert_eq!(rank_distance(&Mat::zeros(&f, 3, 3), &Mat::identity(&f, 3)).unwrap(), 3);
    }

    #[test]
    fn small_code_is_mrd() {
        let f = gf2();
        for k in 1..=3 {
            let c = GabidulinCode::new(&f, 3, 3, k).unwrap();
            assert_eq!(c.min_distance_exhaustive().unwrap(), 4 - k);
            assert!(c.satisfies_singleton());
        }
        let c = GabidulinCode::new(&f, 3, 3, 1).unwrap();
        assert_eq!(c.codewords().unwrap().len(), 8);
        assert!(c.encode(&[0]).unwrap().is_zero());
    }

    #[test]
    fn refuses_short_codes() {
        assert!(matches!(GabidulinCode::new(&gf2(), 2, 3, 1), Err(Error::NotConstructible(_))));
        assert!(matches!(
            LiftedRankMetricCode::new(&gf2(), 5, 3, 1, 1),
            Err(Error::NotConstructible(_))
        ));
    }

    #[test]
    fn lifted_rate_example() {
        let c = LiftedRankMetricCode::new(&gf2(), 6, 3, 1, 1).unwrap();
        assert!((c.rate() - 0.5).abs() < 1e-12);
        let lifted = c.encode(&[1, 0, 1]).unwrap();
        for b in &lifted.blocks {
            assert_eq!(b.submatrix(0..3, 0..3), Mat::identity(&gf2(), 3));
        }
    }

    #[test]
    fn decoder_guarantee_both_ways() {
        let f = gf2();
        let code = LiftedRankMetricCode::new(&f, 6, 3, 1, 2).unwrap();
        let hs = all_matrices(&f, 3, 3, 1 << 16).unwrap();
        let msg = [1, 0, 1, 1, 1, 0];
        let sent = code.encode(&msg).unwrap();
        for h in &hs {
            let y = sent.blocks[0].mul(h).unwrap();
            let out = code.decode(&[y]).unwrap();
            match out.outcome {
                RmOutcome::Decoded { message, .. } => {
                    assert!(out.guaranteed);
                    assert_eq!(message, msg);
                }
                RmOutcome::Ambiguous => assert!(!out.guaranteed),
            }
        }
    }

    #[test]
    fn throughput_constant_rank() {
        let pmf = RankPmf::point(3, 3);
        let tp = throughput_rm(&pmf, 12, 3, 1, 3).unwrap();
        assert!((tp - 0.75 * 3.0).abs() < 1e-12);
        assert_eq!(throughput_rm(&pmf, 12, 3, 1, 0).unwrap(), 0.0);
    }
}
