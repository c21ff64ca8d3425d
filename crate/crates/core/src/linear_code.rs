//! Lifted linear matrix codes with pseudorandom generators, Chernoff-type
//! failure bounds, and the rateless feedback protocol.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{ChannelModel, RankPmf};
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::linalg::{random_element, IncrementalBasis, Insert, Mat};
use crate::rank_metric::{lift, LiftedCodeword};
use crate::rng::{construction_rng, trial_rng, RNG_ID};

/// `⌊n s⌋`, tolerant of representation error in `s`.
pub fn floor_ns(n: usize, s: f64) -> usize {
    (n as f64 * s + 1e-9).floor().max(0.0) as usize
}

/// A `⌊ns⌋ × nM` generator drawn from a seeded stream, used over `n` blocks
/// of a `T × M` channel input.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMatrixCode {
    field: FieldSpec,
    t: usize,
    m: usize,
    n: usize,
    s: f64,
    seed: u64,
    g: Mat,
}

impl LinearMatrixCode {
    pub fn new(field: &FieldSpec, t: usize, m: usize, n: usize, s: f64, seed: u64) -> Result<Self> {
        if n == 0 || m == 0 || t <= m {
            return Err(Error::domain(format!("need n >= 1 and T > M >= 1 (T = {t}, M = {m})")));
        }
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::domain(format!("design rate s = {s} must be positive")));
        }
        let rows = floor_ns(n, s);
        let mut rng = construction_rng(seed);
        let data = (0..rows * n * m).map(|_| random_element(field, &mut rng)).collect();
        Ok(LinearMatrixCode {
            field: field.clone(),
            t,
            m,
            n,
            s,
            seed,
            g: Mat::new(field.clone(), rows, n * m, data)?,
        })
    }

    /// Uses an explicit generator with `nM` columns.
    pub fn with_generator(t: usize, m: usize, n: usize, g: Mat) -> Result<Self> {
        if g.cols() != n * m || t <= m {
            return Err(Error::shape(format!("generator must have nM = {} columns and T > M", n * m)));
        }
        Ok(LinearMatrixCode {
            field: g.field().clone(),
            t,
            m,
            n,
            s: g.rows() as f64 / n as f64,
            seed: 0,
            g,
        })
    }

    pub fn generator(&self) -> &Mat {
        &self.g
    }

    pub fn rows(&self) -> usize {
        self.g.rows()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `(1 - M/T) ⌊ns⌋ / n`.
    pub fn rate(&self) -> f64 {
        (1.0 - self.m as f64 / self.t as f64) * self.rows() as f64 / self.n as f64
    }

    /// Lifts `B G`, split into `n` blocks of width `M`.
    pub fn encode(&self, b: &Mat) -> Result<LiftedCodeword> {
        if b.shape() != (self.t - self.m, self.rows()) {
            return Err(Error::shape(format!("message must be {}x{}", self.t - self.m, self.rows())));
        }
        let x = b.mul(&self.g)?;
        let blocks: Vec<Mat> = (0..self.n)
            .map(|i| x.submatrix(0..x.rows(), i * self.m..(i + 1) * self.m))
            .collect();
        lift(&blocks, self.m)
    }

    /// Solves `Ỹ^(n) = B G^(n) H^(n)` with `H_i` read off the identity part
    /// of each block. Returns `None` when `G^(n) H^(n)` has rank below
    /// `⌊ns⌋`.
    pub fn decode(&self, received: &[Mat]) -> Result<Option<Mat>> {
        if received.len() != self.n {
            return Err(Error::shape(format!("expected {} received blocks", self.n)));
        }
        let mut acc = IncrementalBasis::new(&self.field, self.rows(), self.t - self.m);
        for (i, y) in received.iter().enumerate() {
            let gi = self.g.submatrix(0..self.rows(), i * self.m..(i + 1) * self.m);
            absorb(&mut acc, &gi, y, self.m)?;
            if acc.is_complete() {
                break;
            }
        }
        Ok(acc.solution().map(|bt| bt.transpose()))
    }
}

/// Adds the equations of one received block: column `c` of `G_i H_i`
/// against column `c` of the payload rows of `y`.
fn absorb(acc: &mut IncrementalBasis, gi: &Mat, y: &Mat, m: usize) -> Result<()> {
    if y.rows() <= m {
        return Err(Error::shape("received block has no payload rows"));
    }
    let h = y.submatrix(0..m, 0..y.cols());
    let f = gi.mul(&h)?;
    for c in 0..f.cols() {
        let payload: Vec<u32> = (m..y.rows()).map(|r| y.get(r, c)).collect();
        if acc.insert(&f.column(c), &payload)? == Insert::Inconsistent {
            return Err(Error::Internal("received block contradicts earlier blocks".into()));
        }
    }
    Ok(())
}

/// Inputs of the Chernoff-type tail bound for `τ` on `0..=m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChernoffParams {
    pub alpha: f64,
    pub m: usize,
    pub a: f64,
    pub b: f64,
    pub g: f64,
    /// `exp(-2 (α - E τ)^2 / m^2)`, the per-block Hoeffding factor.
    pub hoeffding: f64,
}

/// `g(α) = E[(A/B)^{(τ-α)/m}]` for `α < E[τ]`.
pub fn chernoff(pmf: &RankPmf, alpha: f64, m: usize) -> Result<ChernoffParams> {
    let mean = pmf.mean();
    if !(alpha < mean) {
        return Err(Error::domain(format!("need α < E[τ] (α = {alpha}, E[τ] = {mean})")));
    }
    if m == 0 || pmf.rank_star() > m {
        return Err(Error::domain("τ must lie in 0..=m with m >= 1"));
    }
    let mut a = 0.0;
    let mut b = 0.0;
    for (r, &p) in pmf.probs().iter().enumerate() {
        let d = r as f64 - alpha;
        if d < 0.0 {
            a -= d * p;
        } else if d > 0.0 {
            b += d * p;
        }
    }
    if b <= 0.0 {
        return Err(Error::Internal("no mass above α although α < E[τ]".into()));
    }
    let g = if a == 0.0 {
        0.0
    } else {
        let ratio = a / b;
        pmf.probs()
            .iter()
            .enumerate()
            .map(|(r, &p)| p * ratio.powf((r as f64 - alpha) / m as f64))
            .sum()
    };
    Ok(ChernoffParams {
        alpha,
        m,
        a,
        b,
        g,
        hoeffding: (-2.0 * (alpha - mean).powi(2) / (m * m) as f64).exp(),
    })
}

pub fn chernoff_g(pmf: &RankPmf, alpha: f64, m: usize) -> Result<f64> {
    Ok(chernoff(pmf, alpha, m)?.g)
}

/// `g(α)^n`, an upper bound on `Pr{Σ_{i≤n} τ_i < nα}`.
pub fn tail_bound(pmf: &RankPmf, alpha: f64, m: usize, n: usize) -> Result<f64> {
    Ok(chernoff_g(pmf, alpha, m)?.powi(n as i32))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FailureBound {
    pub epsilon: f64,
    /// `q^{-⌊nε⌋}/(q-1) + g(s+ε)^n`, averaged over uniform generators.
    pub average: f64,
    /// Twice the average: met by more than half of all generators.
    pub half_of_generators: f64,
}

/// Failure bound for rate parameter `s` over `n` blocks. `epsilon`
/// defaults to `(E[rank H] - s)/2`.
pub fn failure_bound(pmf: &RankPmf, n: usize, s: f64, epsilon: Option<f64>, q: u64) -> Result<FailureBound> {
    let mean = pmf.mean();
    let eps = epsilon.unwrap_or((mean - s) / 2.0);
    if !(s > 0.0 && eps > 0.0 && s + eps < mean) {
        return Err(Error::domain(format!(
            "need 0 < s < s + ε < E[rank H] (s = {s}, ε = {eps}, E = {mean})"
        )));
    }
    if q < 2 {
        return Err(Error::domain("q must be at least 2"));
    }
    let qf = q as f64;
    let m = pmf.max_rank().max(1);
    let first = qf.powf(-(floor_ns(n, eps) as f64)) / (qf - 1.0);
    let average = first + tail_bound(pmf, s + eps, m, n)?;
    Ok(FailureBound {
        epsilon: eps,
        average,
        half_of_generators: 2.0 * average,
    })
}

/// The smallest [`failure_bound`] over a grid of `steps` values of ε
/// spread evenly across `(0, E[rank H] - s)`.
pub fn best_failure_bound(pmf: &RankPmf, n: usize, s: f64, q: u64, steps: usize) -> Result<FailureBound> {
    let span = pmf.mean() - s;
    if !(s > 0.0 && span > 0.0) || steps == 0 {
        return Err(Error::domain(format!("need 0 < s < E[rank H] (s = {s}, E = {})", pmf.mean())));
    }
    let mut best: Option<FailureBound> = None;
    for i in 1..=steps {
        let eps = span * i as f64 / (steps + 1) as f64;
        let fb = failure_bound(pmf, n, s, Some(eps), q)?;
        if best.as_ref().is_none_or(|b| fb.average < b.average) {
            best = Some(fb);
        }
    }
    Ok(best.expect("steps > 0"))
}

/// `1 - 2 (q^{-⌊nε⌋}/(q-1) + g(R/n + ε)^n)`: success probability after `n`
/// blocks met by some generator series. `epsilon` defaults to half the
/// admissible range.
pub fn rateless_success_bound(pmf: &RankPmf, width: usize, n: usize, epsilon: Option<f64>, q: u64) -> Result<f64> {
    let s = width as f64 / n as f64;
    Ok(1.0 - failure_bound(pmf, n, s, epsilon, q)?.half_of_generators)
}

/// Monte Carlo summary of a fixed lifted linear matrix code.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LmcReport {
    pub t: usize,
    pub m: usize,
    pub n: usize,
    pub s: f64,
    pub rows: usize,
    pub rate: f64,
    pub trials: usize,
    pub failures: usize,
    pub failure_rate: f64,
    /// Decoded messages that differ from the sent one.
    pub wrong_decodes: usize,
    pub bound: Option<FailureBound>,
    pub generator_seed: u64,
    pub seed: u64,
    pub rng: String,
}

pub fn simulate_lmc(
    model: &ChannelModel,
    code: &LinearMatrixCode,
    trials: usize,
    seed: u64,
    epsilon: Option<f64>,
) -> Result<LmcReport> {
    if model.t() != code.t || model.m() != code.m || *model.field() != code.field {
        return Err(Error::domain("code and channel disagree on T, M or the field"));
    }
    let (failures, wrong) = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<(usize, usize)> {
            let mut rng = trial_rng(seed, i as u64);
            let (b, decoded) = lmc_trial(model, code, &mut rng)?;
            Ok(match decoded {
                None => (1, 0),
                Some(d) => (0, usize::from(d != b)),
            })
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    let pmf = model.rank_pmf()?;
    let q = model.field().q() as u64;
    let bound = failure_bound(&pmf, code.n, code.s, epsilon, q).ok();
    Ok(LmcReport {
        t: code.t,
        m: code.m,
        n: code.n,
        s: code.s,
        rows: code.rows(),
        rate: code.rate(),
        trials,
        failures,
        failure_rate: failures as f64 / trials.max(1) as f64,
        wrong_decodes: wrong,
        bound,
        generator_seed: code.seed,
        seed,
        rng: RNG_ID.to_string(),
    })
}

fn random_mat<R: Rng + ?Sized>(field: &FieldSpec, rows: usize, cols: usize, rng: &mut R) -> Mat {
    let data = (0..rows * cols).map(|_| random_element(field, rng)).collect();
    Mat::new(field.clone(), rows, cols, data).expect("shape")
}

/// One transmission of a uniformly random message.
pub fn lmc_trial<R: Rng + ?Sized>(
    model: &ChannelModel,
    code: &LinearMatrixCode,
    rng: &mut R,
) -> Result<(Mat, Option<Mat>)> {
    let b = random_mat(&code.field, code.t - code.m, code.rows(), rng);
    let sent = code.encode(&b)?;
    let received = sent
        .blocks
        .iter()
        .map(|x| model.transmit(x, rng))
        .collect::<Result<Vec<_>>>()?;
    let decoded = code.decode(&received)?;
    Ok((b, decoded))
}

/// Outcome of one rateless session.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatelessSession {
    pub blocks_used: usize,
    pub success: bool,
    /// `rank(G^(n) H^(n))` after each block.
    pub ranks: Vec<usize>,
    /// Whether a from-scratch rank agreed with the running rank after every
    /// block (only checked when requested).
    pub batch_agrees: Option<bool>,
}

/// The series `G_1, G_2, ..` of `width × M` generators for a seed.
pub struct GeneratorSeries {
    field: FieldSpec,
    width: usize,
    m: usize,
    rng: rand_chacha::ChaCha8Rng,
}

impl GeneratorSeries {
    pub fn new(field: &FieldSpec, width: usize, m: usize, seed: u64) -> Self {
        GeneratorSeries {
            field: field.clone(),
            width,
            m,
            rng: construction_rng(seed),
        }
    }
}

impl Iterator for GeneratorSeries {
    type Item = Mat;

    fn next(&mut self) -> Option<Mat> {
        Some(random_mat(&self.field, self.width, self.m, &mut self.rng))
    }
}

/// Sends `L(B G_i)` until `G^(n) H^(n)` reaches rank `width` or
/// `max_blocks` are used.
pub fn rateless_session<R: Rng + ?Sized>(
    model: &ChannelModel,
    width: usize,
    series_seed: u64,
    max_blocks: usize,
    check_batch: bool,
    rng: &mut R,
) -> Result<RatelessSession> {
    if width == 0 {
        return Err(Error::domain("message width R must be >= 1"));
    }
    let (t, m) = (model.t(), model.m());
    if t <= m {
        return Err(Error::domain("need T > M"));
    }
    let field = model.field().clone();
    let b = random_mat(&field, t - m, width, rng);
    let mut acc = IncrementalBasis::new(&field, width, t - m);
    let mut ranks = Vec::new();
    let mut stacked: Option<Mat> = None;
    let mut agrees = true;
    for g in GeneratorSeries::new(&field, width, m, series_seed).take(max_blocks) {
        let x = lift(&[b.mul(&g)?], m)?.blocks.remove(0);
        let y = model.transmit(&x, rng)?;
        absorb(&mut acc, &g, &y, m)?;
        ranks.push(acc.rank());
        if check_batch {
            let f = g.mul(&y.submatrix(0..m, 0..y.cols()))?;
            let all = match stacked.take() {
                None => f,
                Some(prev) => prev.hstack(&f)?,
            };
            agrees &= all.rank() == acc.rank();
            stacked = Some(all);
        }
        if acc.is_complete() {
            let decoded = acc.solution().map(|bt| bt.transpose());
            return Ok(RatelessSession {
                blocks_used: ranks.len(),
                success: decoded.as_ref() == Some(&b),
                ranks,
                batch_agrees: check_batch.then_some(agrees),
            });
        }
    }
    Ok(RatelessSession {
        blocks_used: ranks.len(),
        success: false,
        ranks,
        batch_agrees: check_batch.then_some(agrees),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatelessReport {
    pub width: usize,
    pub max_blocks: usize,
    pub sessions: usize,
    pub successes: usize,
    pub mean_blocks: f64,
    /// Fraction of sessions decoded within `n` blocks, for `n = 1..=max_blocks`.
    pub success_by: Vec<f64>,
    pub batch_mismatches: usize,
    pub series_seed: u64,
    pub seed: u64,
    pub rng: String,
}

pub fn simulate_rateless(
    model: &ChannelModel,
    width: usize,
    max_blocks: usize,
    sessions: usize,
    series_seed: u64,
    seed: u64,
    check_batch: bool,
) -> Result<RatelessReport> {
    let runs = (0..sessions)
        .into_par_iter()
        .map(|i| rateless_session(model, width, series_seed, max_blocks, check_batch, &mut trial_rng(seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let mut by = vec![0usize; max_blocks + 1];
    let mut successes = 0;
    let mut total_blocks = 0;
    let mut mismatches = 0;
    for r in &runs {
        total_blocks += r.blocks_used;
        if r.success {
            successes += 1;
            by[r.blocks_used] += 1;
        }
        if r.batch_agrees == Some(false) {
            mismatches += 1;
        }
    }
    let mut cumulative = 0;
    let success_by = (1..=max_blocks)
        .map(|n| {
            cumulative += by[n];
            cumulative as f64 / sessions.max(1) as f64
        })
        .collect();
    Ok(RatelessReport {
        width,
        max_blocks,
        sessions,
        successes,
        mean_blocks: total_blocks as f64 / sessions.max(1) as f64,
        success_by,
        batch_mismatches: mismatches,
        series_seed,
        seed,
        rng: RNG_ID.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelKind;

    fn gf2() -> FieldSpec {
        FieldSpec::prime(2).unwrap()
    }

    #[test]
    fn generator_shape_and_determinism() {
        let a = LinearMatrixCode::new(&gf2(), 4, 2, 4, 1.5, 9).unwrap();
        assert_eq!(a.generator().shape(), (6, 8));
        let b = LinearMatrixCode::new(&gf2(), 4, 2, 4, 1.5, 9).unwrap();
        assert_eq!(a, b);
        assert!((a.rate() - 0.5 * 6.0 / 4.0).abs() < 1e-12);
    }

    #[test]
    fn identity_round_trip() {
        let f = gf2();
        let code = LinearMatrixCode::with_generator(4, 2, 1, Mat::identity(&f, 2)).unwrap();
        let b = Mat::from_rows(&f, &[vec![1, 0], vec![1, 1]]).unwrap();
        let x = code.encode(&b).unwrap();
        assert_eq!(code.decode(&x.blocks).unwrap(), Some(b));
        let zero_h = Mat::zeros(&f, 4, 2);
        assert_eq!(code.decode(&[zero_h]).unwrap(), None);
    }

    #[test]
    fn bernoulli_chernoff() {
        let pmf = RankPmf::new(vec![0.5, 0.5]).unwrap();
        let g = chernoff_g(&pmf, 0.25, 1).unwrap();
        let want = 0.5 * 3f64.powf(0.25) + 0.5 * 3f64.powf(-0.75);
        assert!((g - want).abs() < 1e-12);
        assert!((g - 0.87739).abs() < 1e-5);
        assert_eq!(chernoff_g(&RankPmf::point(2, 2), 1.0, 2).unwrap(), 0.0);
        assert!(chernoff_g(&pmf, 0.5, 1).is_err());
    }

    #[test]
    fn failure_bound_preconditions() {
        let pmf = RankPmf::new(vec![0.0, 0.5, 0.5]).unwrap();
        assert!(failure_bound(&pmf, 8, 0.75, Some(0.75), 2).is_err());
        let fb = failure_bound(&pmf, 8, 0.75, Some(0.25), 2).unwrap();
        assert!((fb.average - 0.25).abs() < 1e-12);
        let best = best_failure_bound(&pmf, 16, 6.0 / 16.0, 2, 99).unwrap();
        assert!(best.average <= failure_bound(&pmf, 16, 6.0 / 16.0, None, 2).unwrap().average + 1e-15);
    }

    #[test]
    fn rateless_stops_on_identity() {
        let f = gf2();
        let model = ChannelModel::new(f.clone(), 4, 2, 2, ChannelKind::FixedMatrix(Mat::zeros(&f, 2, 2))).unwrap();
        let mut rng = trial_rng(1, 0);
        let s = rateless_session(&model, 2, 3, 10, true, &mut rng).unwrap();
        assert!(!s.success);
        assert_eq!(s.blocks_used, 10);
        let model = ChannelModel::new(f.clone(), 4, 2, 2, ChannelKind::FullRankUniform).unwrap();
        let s = rateless_session(&model, 3, 3, 20, true, &mut rng).unwrap();
        assert!(s.success);
        assert_eq!(s.batch_agrees, Some(true));
    }
}
