//! Linear operator channels `Y = X H` in the matrix formulation: one `H`
//! per `T`-block, `X` is `T × M`, `H` is `M × N`.

use std::collections::HashMap;
use std::hash::Hash;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::counting::CountingContext;
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::linalg::{all_matrices, combinations, random_element, sample_matrix, Mat, MatrixKind, Subspace};

/// Guard for exact enumeration: at most this many matrices.
pub const ENUMERATION_LIMIT: u64 = 1 << 16;

const PMF_TOL: f64 = 1e-12;

/// Probability mass function of `rank(H)` on `0..=len-1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankPmf {
    probs: Vec<f64>,
    mean: f64,
}

impl RankPmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::domain("rank pmf is empty"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::domain("rank pmf has a negative or non-finite entry"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PMF_TOL {
            return Err(Error::domain(format!("rank pmf sums to {total}, not 1")));
        }
        let mean = probs.iter().enumerate().map(|(s, p)| s as f64 * p).sum();
        Ok(RankPmf { probs, mean })
    }

    /// Point mass at `rank` on `0..=max_rank`.
    pub fn point(rank: usize, max_rank: usize) -> Self {
        let mut probs = vec![0.0; max_rank.max(rank) + 1];
        probs[rank] = 1.0;
        RankPmf::new(probs).expect("point mass")
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, s: usize) -> f64 {
        self.probs.get(s).copied().unwrap_or(0.0)
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Largest representable rank (`len - 1`).
    pub fn max_rank(&self) -> usize {
        self.probs.len() - 1
    }

    /// `rank*(H)`: the largest rank with positive probability.
    pub fn rank_star(&self) -> usize {
        self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }

    /// Positive probability at every rank `0..=m`.
    pub fn is_regular(&self, m: usize) -> bool {
        (0..=m).all(|s| self.get(s) > 0.0)
    }

    pub fn is_constant(&self) -> bool {
        self.probs.iter().filter(|&&p| p > 0.0).count() == 1
    }

    /// Pads with zeros up to `max_rank`.
    pub fn padded(&self, max_rank: usize) -> RankPmf {
        let mut probs = self.probs.clone();
        if probs.len() < max_rank + 1 {
            probs.resize(max_rank + 1, 0.0);
        }
        RankPmf { probs, mean: self.mean }
    }

    /// Distribution of the sum of `n` independent copies (the rank of the
    /// block-diagonal `H^(n)`).
    pub fn convolve_power(&self, n: usize) -> Vec<f64> {
        let mut acc = vec![1.0];
        for _ in 0..n {
            let mut next = vec![0.0; acc.len() + self.probs.len() - 1];
            for (i, &a) in acc.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (j, &b) in self.probs.iter().enumerate() {
                    next[i + j] += a * b;
                }
            }
            acc = next;
        }
        acc
    }
}

/// How `H` is distributed.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelKind {
    /// iid uniform entries.
    PurelyRandom,
    /// Uniform over full-rank `M × N` matrices.
    FullRankUniform,
    /// Rank `k ~ pmf`, then uniform over rank-`k` matrices.
    RankUniform(RankPmf),
    FixedMatrix(Mat),
    /// `H = [[a1, a2 b1], [0, b2]]` with iid uniform coefficients, or the
    /// fixed coefficients `[a1, a2, b1, b2]`.
    NetworkExample { coefficients: Option<[u32; 4]> },
    /// Binary `y = x h` with `Pr{h = 0} = p`.
    ZChannel(f64),
}

/// A LOC: field, inaction period `T`, dimension `M × N`, and law of `H`.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    field: FieldSpec,
    t: usize,
    m: usize,
    n: usize,
    kind: ChannelKind,
    rank_sampler: Option<WeightedIndex<f64>>,
}

impl PartialEq for ChannelModel {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field
            && self.t == other.t
            && self.m == other.m
            && self.n == other.n
            && self.kind == other.kind
    }
}

/// Which marginal of `(X, Y)` the mutual-information oracle looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lens {
    Matrix,
    /// Column spaces `⟨X⟩`, `⟨Y⟩`.
    Subspace,
    Rank,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Key {
    Mat(Mat),
    Sub(Subspace),
    Rank(usize),
}

fn project(m: &Mat, lens: Lens) -> Key {
    match lens {
        Lens::Matrix => Key::Mat(m.clone()),
        Lens::Subspace => Key::Sub(Subspace::column_space(m)),
        Lens::Rank => Key::Rank(m.rank()),
    }
}

impl ChannelModel {
    pub fn new(field: FieldSpec, t: usize, m: usize, n: usize, kind: ChannelKind) -> Result<Self> {
        if t == 0 || m == 0 || n == 0 {
            return Err(Error::domain("T, M and N must all be >= 1"));
        }
        let mut rank_sampler = None;
        match &kind {
            ChannelKind::RankUniform(pmf) => {
                if pmf.max_rank() > m.min(n) {
                    return Err(Error::domain(format!(
                        "rank pmf has support beyond min(M, N) = {}",
                        m.min(n)
                    )));
                }
                rank_sampler = Some(
                    WeightedIndex::new(pmf.probs())
                        .map_err(|e| Error::domain(format!("rank pmf: {e}")))?,
                );
            }
            ChannelKind::FixedMatrix(h) => {
                if h.shape() != (m, n) {
                    return Err(Error::shape(format!("fixed H must be {m}x{n}")));
                }
                if *h.field() != field {
                    return Err(Error::FieldMismatch);
                }
            }
            ChannelKind::NetworkExample { coefficients } => {
                if m != 2 || n != 2 {
                    return Err(Error::domain("the network example has M = N = 2"));
                }
                if let Some(c) = coefficients {
                    if c.iter().any(|&v| !field.contains(v)) {
                        return Err(Error::InvalidField("network coefficient out of range".into()));
                    }
                }
            }
            ChannelKind::ZChannel(p) => {
                if field.q() != 2 || t != 1 || m != 1 || n != 1 {
                    return Err(Error::domain("the Z-channel needs q = 2 and T = M = N = 1"));
                }
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::domain(format!("Z-channel crossover {p} not in [0, 1]")));
                }
            }
            ChannelKind::PurelyRandom | ChannelKind::FullRankUniform => {}
        }
        Ok(ChannelModel {
            field,
            t,
            m,
            n,
            kind,
            rank_sampler,
        })
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &ChannelKind {
        &self.kind
    }

    /// The same `H` law with a different inaction period.
    pub fn with_t(&self, t: usize) -> Result<Self> {
        ChannelModel::new(self.field.clone(), t, self.m, self.n, self.kind.clone())
    }

    fn counting(&self) -> CountingContext {
        CountingContext::for_field(&self.field)
    }

    /// Whether `P(s | Ũ)` depends on `Ũ` only through its dimension for
    /// structural reasons (the law of `H` is invariant under `H ↦ A H`).
    pub fn is_dimension_symmetric(&self) -> bool {
        matches!(
            self.kind,
            ChannelKind::PurelyRandom | ChannelKind::FullRankUniform | ChannelKind::RankUniform(_)
        )
    }

    /// Distribution of `rank(H)` on `0..=min(M, N)`.
    pub fn rank_pmf(&self) -> Result<RankPmf> {
        let top = self.m.min(self.n);
        let ctx = self.counting();
        match &self.kind {
            ChannelKind::PurelyRandom => {
                let total = (self.m * self.n) as f64 * ctx.log2_q();
                let mut probs: Vec<f64> = (0..=top)
                    .map(|r| {
                        let l = ctx.log2_chi(self.m, r).unwrap() + ctx.log2_chi(self.n, r).unwrap()
                            - ctx.log2_chi(r, r).unwrap();
                        (l - total).exp2()
                    })
                    .collect();
                let s: f64 = probs.iter().sum();
                probs.iter_mut().for_each(|p| *p /= s);
                RankPmf::new(probs)
            }
            ChannelKind::FullRankUniform => Ok(RankPmf::point(top, top)),
            ChannelKind::RankUniform(p) => Ok(p.padded(top)),
            ChannelKind::FixedMatrix(h) => Ok(RankPmf::point(h.rank(), top)),
            ChannelKind::ZChannel(p) => RankPmf::new(vec![*p, 1.0 - p]),
            ChannelKind::NetworkExample { .. } => {
                let mut probs = vec![0.0; top + 1];
                for (h, p) in self.h_support()? {
                    probs[h.rank()] += p;
                }
                RankPmf::new(probs)
            }
        }
    }

    fn network_h(&self, c: [u32; 4]) -> Mat {
        let f = &self.field;
        let [a1, a2, b1, b2] = c;
        Mat::from_rows(f, &[vec![a1, f.mul(a2, b1)], vec![0, b2]]).expect("2x2")
    }

    pub fn sample_h<R: Rng + ?Sized>(&self, rng: &mut R) -> Mat {
        let (m, n) = (self.m, self.n);
        let f = &self.field;
        match &self.kind {
            ChannelKind::PurelyRandom => sample_matrix(f, m, n, MatrixKind::PurelyRandom, rng).unwrap(),
            ChannelKind::FullRankUniform => sample_matrix(f, m, n, MatrixKind::FullRank, rng).unwrap(),
            ChannelKind::RankUniform(_) => {
                let k = self.rank_sampler.as_ref().expect("sampler").sample(rng);
                sample_matrix(f, m, n, MatrixKind::RankExact(k), rng).unwrap()
            }
            ChannelKind::FixedMatrix(h) => h.clone(),
            ChannelKind::NetworkExample { coefficients } => {
                let c = coefficients.unwrap_or_else(|| {
                    [0; 4].map(|_| random_element(f, rng))
                });
                self.network_h(c)
            }
            ChannelKind::ZChannel(p) => {
                let h = if rng.gen::<f64>() < *p { 0 } else { 1 };
                Mat::from_rows(f, &[vec![h]]).unwrap()
            }
        }
    }

    fn check_input(&self, x: &Mat) -> Result<()> {
        if *x.field() != self.field {
            return Err(Error::FieldMismatch);
        }
        if x.cols() != self.m {
            return Err(Error::shape(format!("input must have M = {} columns", self.m)));
        }
        Ok(())
    }

    /// One channel use: draws a fresh `H` and returns `X H`.
    pub fn transmit<R: Rng + ?Sized>(&self, x: &Mat, rng: &mut R) -> Result<Mat> {
        self.check_input(x)?;
        if x.rows() != self.t {
            return Err(Error::shape(format!("input must be {}x{}", self.t, self.m)));
        }
        x.mul(&self.sample_h(rng))
    }

    /// The exact law of `H` as `(matrix, probability)` pairs.
    pub fn h_support(&self) -> Result<Vec<(Mat, f64)>> {
        let (m, n) = (self.m, self.n);
        let f = &self.field;
        let guard = || -> Result<Vec<Mat>> {
            all_matrices(f, m, n, ENUMERATION_LIMIT).map_err(|_| {
                Error::ExactKernelUnavailable(format!("H has q^{} > 2^16 support points", m * n))
            })
        };
        match &self.kind {
            ChannelKind::FixedMatrix(h) => Ok(vec![(h.clone(), 1.0)]),
            ChannelKind::ZChannel(p) => Ok(vec![
                (Mat::zeros(f, 1, 1), *p),
                (Mat::identity(f, 1), 1.0 - p),
            ]),
            ChannelKind::NetworkExample { coefficients: Some(c) } => Ok(vec![(self.network_h(*c), 1.0)]),
            ChannelKind::NetworkExample { coefficients: None } => {
                let q = f.q() as u64;
                let w = 1.0 / (q.pow(4) as f64);
                let mut acc: HashMap<Mat, f64> = HashMap::new();
                for idx in 0..q.pow(4) {
                    let mut v = idx;
                    let c = [0; 4].map(|_| {
                        let d = (v % q) as u32;
                        v /= q;
                        d
                    });
                    *acc.entry(self.network_h(c)).or_default() += w;
                }
                let mut out: Vec<_> = acc.into_iter().collect();
                out.sort_by_key(|(h, _)| h.data().to_vec());
                Ok(out)
            }
            ChannelKind::PurelyRandom => {
                let all = guard()?;
                let w = 1.0 / all.len() as f64;
                Ok(all.into_iter().map(|h| (h, w)).collect())
            }
            ChannelKind::FullRankUniform | ChannelKind::RankUniform(_) => {
                let pmf = self.rank_pmf()?;
                let ctx = self.counting();
                let all = guard()?;
                let mut out = Vec::new();
                for h in all {
                    let r = h.rank();
                    let p = pmf.get(r);
                    if p > 0.0 {
                        let count = crate::counting::biguint_log2(&ctx.rank_count(m, n, r)?);
                        out.push((h, p * (-count).exp2()));
                    }
                }
                Ok(out)
            }
        }
    }

    /// `P(Y | X) = Pr{X H = Y}`. Uses the closed forms for purely random
    /// and full-rank (`M ≤ N`) `H`; otherwise sums over the support of `H`.
    pub fn exact_transition(&self, x: &Mat, y: &Mat) -> Result<f64> {
        self.check_input(x)?;
        if y.rows() != x.rows() || y.cols() != self.n {
            return Err(Error::shape("Y must be T x N with the same T as X"));
        }
        let cx = Subspace::column_space(x);
        let cy = Subspace::column_space(y);
        if !cy.is_subspace_of(&cx) {
            return Ok(0.0);
        }
        let r = cx.dim();
        match &self.kind {
            ChannelKind::PurelyRandom => Ok((-((self.n * r) as f64) * self.field.log2_q()).exp2()),
            ChannelKind::FullRankUniform if self.m <= self.n => {
                if cy.dim() != r {
                    return Ok(0.0);
                }
                Ok((-self.counting().log2_chi(self.n, r)?).exp2())
            }
            _ => self.transition_by_summation(x, y),
        }
    }

    /// `Pr{X H = Y}` by summing over the support of `H`.
    pub fn transition_by_summation(&self, x: &Mat, y: &Mat) -> Result<f64> {
        self.check_input(x)?;
        let mut total = 0.0;
        for (h, p) in self.h_support()? {
            if &x.mul(&h)? == y {
                total += p;
            }
        }
        Ok(total)
    }

    /// The distribution of `X H` for a fixed `X`.
    pub fn output_distribution(&self, x: &Mat) -> Result<Vec<(Mat, f64)>> {
        self.check_input(x)?;
        let f = &self.field;
        let closed = match &self.kind {
            ChannelKind::PurelyRandom => Some(false),
            ChannelKind::FullRankUniform if self.m <= self.n => Some(true),
            _ => None,
        };
        if let Some(full_rank) = closed {
            // Y = B C where B spans ⟨X⟩ and C is r×N (full rank if required).
            let (b, _) = crate::linalg::full_rank_decompose(x);
            let r = b.cols();
            let cs = all_matrices(f, r, self.n, ENUMERATION_LIMIT)?;
            let cs: Vec<Mat> = if full_rank {
                cs.into_iter().filter(|c| c.rank() == r).collect()
            } else {
                cs
            };
            let w = 1.0 / cs.len() as f64;
            return cs
                .into_iter()
                .map(|c| Ok((b.mul(&c)?, w)))
                .collect();
        }
        let mut acc: HashMap<Mat, f64> = HashMap::new();
        for (h, p) in self.h_support()? {
            *acc.entry(x.mul(&h)?).or_default() += p;
        }
        let mut out: Vec<_> = acc.into_iter().collect();
        out.sort_by_key(|(y, _)| y.data().to_vec());
        Ok(out)
    }

    /// Checks `P(BD → BE) = Pr{D H = E}` for `B` of full column rank with
    /// `T` rows. The left side uses [`exact_transition`](Self::exact_transition),
    /// the right side sums over `H` directly.
    pub fn symmetry_check(&self, b: &Mat, d: &Mat, e: &Mat) -> Result<SymmetryOutcome> {
        if b.rows() != self.t {
            return Err(Error::shape("B must have T rows"));
        }
        if b.rank() != b.cols() {
            return Err(Error::NotFullRank);
        }
        let lhs = self.exact_transition(&b.mul(d)?, &b.mul(e)?)?;
        let rhs = self.transition_by_summation(d, e)?;
        Ok(SymmetryOutcome {
            lhs,
            rhs,
            pass: (lhs - rhs).abs() <= 1e-12,
        })
    }

    /// `Pr{rank(D H) = s}` for `s = 0..=min(M, N)` where `D` has the given
    /// row-space law.
    pub fn rank_kernel(&self, input: &KernelInput) -> Result<KernelRow> {
        let top = self.m.min(self.n);
        let r = input.dim();
        if r > self.m {
            return Err(Error::domain(format!("input dimension {r} exceeds M = {}", self.m)));
        }
        if let KernelInput::Subspace(u) = input {
            if u.ambient_dim() != self.m || *u.field() != self.field {
                return Err(Error::shape("subspace must live in F^M"));
            }
        }
        if self.is_dimension_symmetric() {
            let pmf = self.rank_pmf()?;
            let ctx = self.counting();
            let mut probs = vec![0.0; top + 1];
            for k in 0..=pmf.max_rank() {
                let pk = pmf.get(k);
                if pk == 0.0 {
                    continue;
                }
                for (s, slot) in probs.iter_mut().enumerate().take(r.min(k) + 1) {
                    *slot += pk * fixed_input_rank_transition(&ctx, self.m, r, k, s)?;
                }
            }
            return Ok(KernelRow {
                probs,
                provenance: Provenance::ClosedForm,
            });
        }
        let support = self.h_support()?;
        let subspaces = match input {
            KernelInput::Subspace(u) => vec![u.clone()],
            KernelInput::AlphaUniform(r) => {
                let ctx = self.counting();
                let count = ctx.gaussian_binomial(self.m, *r)?;
                if count > num_bigint::BigUint::from(ENUMERATION_LIMIT) {
                    return Err(Error::ExactKernelUnavailable(format!(
                        "too many {r}-dimensional subspaces to average over"
                    )));
                }
                Subspace::enumerate(&self.field, self.m, *r)
            }
        };
        let w = 1.0 / subspaces.len() as f64;
        let mut probs = vec![0.0; top + 1];
        for u in &subspaces {
            for (h, p) in &support {
                probs[u.basis().mul(h)?.rank()] += w * p;
            }
        }
        Ok(KernelRow {
            probs,
            provenance: Provenance::Enumerated,
        })
    }

    /// Monte Carlo estimate of [`rank_kernel`](Self::rank_kernel).
    pub fn rank_kernel_monte_carlo<R: Rng + ?Sized>(
        &self,
        input: &KernelInput,
        samples: usize,
        rng: &mut R,
    ) -> Result<KernelRow> {
        let top = self.m.min(self.n);
        let mut counts = vec![0usize; top + 1];
        for _ in 0..samples {
            let d = match input {
                KernelInput::Subspace(u) => u.basis().clone(),
                KernelInput::AlphaUniform(r) => {
                    sample_matrix(&self.field, *r, self.m, MatrixKind::FullRank, rng)?
                }
            };
            counts[d.mul(&self.sample_h(rng))?.rank()] += 1;
        }
        Ok(KernelRow {
            probs: counts.iter().map(|&c| c as f64 / samples as f64).collect(),
            provenance: Provenance::MonteCarlo { samples },
        })
    }

    /// Rows `r = 0..=min(T, M)` of `P(rank Y = s | rank X = r)` under the
    /// uniform subspace law. Falls back to Monte Carlo with
    /// `fallback_samples` draws per row when no exact path exists.
    pub fn kernel_table<R: Rng + ?Sized>(&self, fallback_samples: Option<(usize, &mut R)>) -> Result<KernelTable> {
        let rows = self.t.min(self.m);
        let mut out = Vec::with_capacity(rows + 1);
        let mut fallback = fallback_samples;
        for r in 0..=rows {
            let input = KernelInput::AlphaUniform(r);
            let row = match self.rank_kernel(&input) {
                Ok(row) => row,
                Err(Error::ExactKernelUnavailable(msg)) => match fallback.as_mut() {
                    Some((n, rng)) => self.rank_kernel_monte_carlo(&input, *n, *rng)?,
                    None => return Err(Error::ExactKernelUnavailable(msg)),
                },
                Err(e) => return Err(e),
            };
            out.push(row);
        }
        // The table is only as exact as its least exact row.
        let provenance = out
            .iter()
            .map(|r| r.provenance.clone())
            .max_by_key(|p| match p {
                Provenance::ClosedForm => 0,
                Provenance::Enumerated => 1,
                Provenance::MonteCarlo { .. } => 2,
            })
            .expect("at least one row");
        KernelTable::new(out.iter().map(|r| r.probs.clone()).collect(), provenance)
    }

    /// Exact `I` between projections of `X` and `Y`, in bits, for an input
    /// pmf given as `(X, p)` pairs.
    pub fn exact_mutual_information(&self, input: &[(Mat, f64)], lens: Lens) -> Result<f64> {
        let q = self.field.q() as u64;
        let inputs = q.checked_pow((self.t * self.m) as u32);
        if inputs.is_none_or(|n| n > ENUMERATION_LIMIT) {
            return Err(Error::TooLarge(format!("q^(TM) = {q}^{} inputs", self.t * self.m)));
        }
        let mut joint: HashMap<(Key, Key), f64> = HashMap::new();
        for (x, px) in input {
            if *px == 0.0 {
                continue;
            }
            if x.rows() != self.t {
                return Err(Error::shape("input matrices must be T x M"));
            }
            let kx = project(x, lens);
            for (y, py) in self.output_distribution(x)? {
                *joint.entry((kx.clone(), project(&y, lens))).or_default() += px * py;
            }
        }
        Ok(mutual_information(&joint))
    }

    /// `I(X; Y, H)` with the channel known at the receiver.
    pub fn receiver_ci_mutual_information(&self, input: &[(Mat, f64)]) -> Result<f64> {
        let mut total = 0.0;
        for (h, ph) in self.h_support()? {
            let mut joint: HashMap<(Mat, Mat), f64> = HashMap::new();
            for (x, px) in input {
                if *px > 0.0 {
                    *joint.entry((x.clone(), x.mul(&h)?)).or_default() += px;
                }
            }
            total += ph * mutual_information(&joint);
        }
        Ok(total)
    }
}

/// Mutual information in bits of a joint pmf keyed by `(x, y)`.
pub fn mutual_information<A: Eq + Hash + Clone, B: Eq + Hash + Clone>(joint: &HashMap<(A, B), f64>) -> f64 {
    let mut px: HashMap<A, f64> = HashMap::new();
    let mut py: HashMap<B, f64> = HashMap::new();
    for ((a, b), &p) in joint {
        *px.entry(a.clone()).or_default() += p;
        *py.entry(b.clone()).or_default() += p;
    }
    joint
        .iter()
        .filter(|(_, &p)| p > 0.0)
        .map(|((a, b), &p)| p * (p / (px[a] * py[b])).log2())
        .sum()
}

/// `Pr{rank(D H) = s}` for a fixed full-rank `r × M` matrix `D` and `H`
/// uniform over rank-`k` `M × N` matrices. `rank(DH) = k - dim(⟨H⟩ ∩ ker D)`,
/// and the number of `k`-dimensional subspaces meeting an
/// `(M - r)`-dimensional subspace in exactly `k - s` dimensions is
/// `q^{s(M-r-k+s)} [M-r, k-s] [r, s]`.
pub fn fixed_input_rank_transition(ctx: &CountingContext, m: usize, r: usize, k: usize, s: usize) -> Result<f64> {
    if r > m || k > m {
        return Err(Error::domain("need r <= M and k <= M"));
    }
    if s > r.min(k) || k - s > m - r {
        return Ok(0.0);
    }
    let lg = |a: usize, b: usize| ctx.log2_gaussian_binomial(a, b);
    let exp = (s * ((m - r) - (k - s))) as f64 * ctx.log2_q();
    Ok((exp + lg(m - r, k - s)? + lg(r, s)? - lg(m, k)?).exp2())
}

/// `Pr{rank(G H) = s | rank(H) = k}` for `G` a purely random `r × M`
/// matrix: `χ̃[k s] χ̃[r s] / (χ̃[s s] q^{(k-s)(r-s)})`.
pub fn purely_random_mixing_rank_transition(ctx: &CountingContext, r: usize, k: usize, s: usize) -> Result<f64> {
    if s > r.min(k) {
        return Ok(0.0);
    }
    let l = ctx.log2_chi_tilde(k, s)? + ctx.log2_chi_tilde(r, s)?
        - ctx.log2_chi_tilde(s, s)?
        - ((k - s) * (r - s)) as f64 * ctx.log2_q();
    Ok(l.exp2())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryOutcome {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Input row-space law for [`ChannelModel::rank_kernel`].
#[derive(Debug, Clone, PartialEq)]
pub enum KernelInput {
    /// `Ũ` uniform over `r`-dimensional subspaces of `F^M`.
    AlphaUniform(usize),
    Subspace(Subspace),
}

impl KernelInput {
    pub fn dim(&self) -> usize {
        match self {
            KernelInput::AlphaUniform(r) => *r,
            KernelInput::Subspace(u) => u.dim(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    Enumerated,
    MonteCarlo { samples: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelRow {
    pub probs: Vec<f64>,
    pub provenance: Provenance,
}

/// `P(s | r)`: rank of the output given rank of the input.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelTable {
    rows: Vec<Vec<f64>>,
    pub provenance: Provenance,
}

impl KernelTable {
    pub fn new(rows: Vec<Vec<f64>>, provenance: Provenance) -> Result<Self> {
        for (r, row) in rows.iter().enumerate() {
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::domain(format!("kernel row {r} sums to {total}")));
            }
            if row.iter().skip(r + 1).any(|&p| p > 1e-15) {
                return Err(Error::domain(format!("kernel row {r} has mass above s = r")));
            }
        }
        Ok(KernelTable { rows, provenance })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn p(&self, s: usize, r: usize) -> f64 {
        self.rows[r].get(s).copied().unwrap_or(0.0)
    }

    /// Number of input ranks (`min(T, M) + 1`).
    pub fn num_inputs(&self) -> usize {
        self.rows.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.rows.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// An α-type input: rank law `R` and per-rank row-space laws `Q_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaInput {
    r: Vec<f64>,
    /// Explicit `Q_r`; `None` means uniform over `r`-dimensional subspaces.
    q_laws: Option<Vec<Vec<(Subspace, f64)>>>,
}

impl AlphaInput {
    pub fn uniform(r: Vec<f64>) -> Result<Self> {
        RankPmf::new(r.clone())?;
        Ok(AlphaInput { r, q_laws: None })
    }

    pub fn with_laws(r: Vec<f64>, laws: Vec<Vec<(Subspace, f64)>>) -> Result<Self> {
        RankPmf::new(r.clone())?;
        if laws.len() != r.len() {
            return Err(Error::shape("need one subspace law per rank"));
        }
        for (dim, law) in laws.iter().enumerate() {
            if r[dim] == 0.0 {
                continue;
            }
            if law.iter().any(|(u, _)| u.dim() != dim) {
                return Err(Error::domain(format!("Q_{dim} has mass off {dim}-dimensional subspaces")));
            }
            let total: f64 = law.iter().map(|(_, p)| p).sum();
            if (total - 1.0).abs() > PMF_TOL {
                return Err(Error::domain(format!("Q_{dim} sums to {total}")));
            }
        }
        Ok(AlphaInput { r, q_laws: Some(laws) })
    }

    pub fn rank_law(&self) -> &[f64] {
        &self.r
    }

    fn q_of(&self, field: &FieldSpec, m: usize, u: &Subspace) -> f64 {
        let dim = u.dim();
        match &self.q_laws {
            Some(laws) => laws[dim]
                .iter()
                .find(|(v, _)| v == u)
                .map_or(0.0, |(_, p)| *p),
            None => {
                let ctx = CountingContext::for_field(field);
                (-ctx.log2_gaussian_binomial(m, dim).unwrap()).exp2()
            }
        }
    }

    /// `r ~ R`, `Ũ ~ Q_r`, `B` uniform full rank `T × r`, returns `B · basis(Ũ)`.
    pub fn sample<R: Rng + ?Sized>(&self, field: &FieldSpec, t: usize, m: usize, rng: &mut R) -> Result<Mat> {
        if self.r.len() > t.min(m) + 1 && self.r[t.min(m) + 1..].iter().any(|&p| p > 0.0) {
            return Err(Error::domain("rank law exceeds min(T, M)"));
        }
        let dim = WeightedIndex::new(&self.r)
            .map_err(|e| Error::domain(format!("rank law: {e}")))?
            .sample(rng);
        if dim == 0 {
            return Ok(Mat::zeros(field, t, m));
        }
        let basis = match &self.q_laws {
            None => Subspace::row_space(&sample_matrix(field, dim, m, MatrixKind::FullRank, rng)?)
                .basis()
                .clone(),
            Some(laws) => {
                let law = &laws[dim];
                let idx = WeightedIndex::new(law.iter().map(|(_, p)| *p))
                    .map_err(|e| Error::domain(format!("Q_{dim}: {e}")))?
                    .sample(rng);
                law[idx].0.basis().clone()
            }
        };
        let b = sample_matrix(field, t, dim, MatrixKind::FullRank, rng)?;
        b.mul(&basis)
    }

    /// `p(X) = R(rank X) Q_{rank X}(⟨Xᵀ⟩) / χ[T, rank X]`.
    pub fn pmf(&self, x: &Mat) -> f64 {
        let u = Subspace::row_space(x);
        let dim = u.dim();
        let rp = self.r.get(dim).copied().unwrap_or(0.0);
        if rp == 0.0 {
            return 0.0;
        }
        let ctx = CountingContext::for_field(x.field());
        let chi = ctx.log2_chi(x.rows(), dim).unwrap();
        rp * self.q_of(x.field(), x.cols(), &u) * (-chi).exp2()
    }

    /// The full input pmf over `F^{T×M}`, omitting zero-probability matrices.
    pub fn enumerate(&self, field: &FieldSpec, t: usize, m: usize) -> Result<Vec<(Mat, f64)>> {
        let all = all_matrices(field, t, m, ENUMERATION_LIMIT)?;
        Ok(all
            .into_iter()
            .map(|x| {
                let p = self.pmf(&x);
                (x, p)
            })
            .filter(|(_, p)| *p > 0.0)
            .collect())
    }
}

/// Every full-column-rank `t × r` matrix (for exhaustive symmetry checks).
pub fn full_column_rank_matrices(field: &FieldSpec, t: usize, r: usize) -> Result<Vec<Mat>> {
    Ok(all_matrices(field, t, r, ENUMERATION_LIMIT)?
        .into_iter()
        .filter(|b| b.rank() == r)
        .collect())
}

/// Every `r`-subset of columns, used to build canonical full-rank `D`.
pub fn unit_row_matrices(field: &FieldSpec, r: usize, m: usize) -> Vec<Mat> {
    combinations(m, r)
        .into_iter()
        .map(|cols| {
            let mut d = Mat::zeros(field, r, m);
            for (i, c) in cols.into_iter().enumerate() {
                d.set(i, c, 1);
            }
            d
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gf2() -> FieldSpec {
        FieldSpec::prime(2).unwrap()
    }

    fn col(f: &FieldSpec, v: &[u32]) -> Mat {
        Mat::new(f.clone(), v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn transmit_examples() {
        let f = gf2();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let fixed = ChannelModel::new(f.clone(), 2, 2, 2, ChannelKind::FixedMatrix(Mat::identity(&f, 2))).unwrap();
        let x = Mat::from_rows(&f, &[vec![1, 0], vec![1, 1]]).unwrap();
        assert_eq!(fixed.transmit(&x, &mut rng).unwrap(), x);
        let z = ChannelModel::new(f.clone(), 1, 1, 1, ChannelKind::ZChannel(1.0)).unwrap();
        for _ in 0..100 {
            assert!(z.transmit(&Mat::identity(&f, 1), &mut rng).unwrap().is_zero());
        }
        let pr = ChannelModel::new(f.clone(), 1, 1, 1, ChannelKind::PurelyRandom).unwrap();
        let n = 100_000;
        let zeros = (0..n)
            .filter(|_| pr.transmit(&Mat::identity(&f, 1), &mut rng).unwrap().is_zero())
            .count();
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((zeros as f64 - n as f64 / 2.0).abs() < 3.0 * sigma);
    }

    #[test]
    fn invalid_models() {
        let f = gf2();
        assert!(ChannelModel::new(f.clone(), 2, 1, 1, ChannelKind::ZChannel(0.3)).is_err());
        assert!(ChannelModel::new(f.clone(), 1, 2, 2, ChannelKind::RankUniform(RankPmf::new(vec![0.0, 0.0, 0.5, 0.5]).unwrap())).is_err());
        assert!(ChannelModel::new(f.clone(), 0, 1, 1, ChannelKind::PurelyRandom).is_err());
        assert!(RankPmf::new(vec![0.5, 0.4]).is_err());
    }

    #[test]
    fn transition_examples() {
        let f = gf2();
        let pr = ChannelModel::new(f.clone(), 2, 2, 1, ChannelKind::PurelyRandom).unwrap();
        let x = Mat::from_rows(&f, &[vec![1, 0], vec![0, 0]]).unwrap();
        assert_eq!(pr.exact_transition(&x, &col(&f, &[0, 1])).unwrap(), 0.0);
        assert_eq!(pr.exact_transition(&x, &col(&f, &[1, 0])).unwrap(), 0.5);
        assert_eq!(pr.exact_transition(&x, &col(&f, &[0, 0])).unwrap(), 0.5);
        let full = ChannelModel::new(f.clone(), 1, 1, 1, ChannelKind::FullRankUniform).unwrap();
        let one = Mat::identity(&f, 1);
        assert_eq!(full.exact_transition(&one, &one).unwrap(), 1.0);
    }

    #[test]
    fn closed_forms_match_summation() {
        let f = gf2();
        for kind in [ChannelKind::PurelyRandom, ChannelKind::FullRankUniform] {
            let model = ChannelModel::new(f.clone(), 2, 2, 2, kind).unwrap();
            let xs = all_matrices(&f, 2, 2, 16).unwrap();
            for x in &xs {
                let mut total = 0.0;
                for y in &xs {
                    let a = model.exact_transition(x, y).unwrap();
                    let b = model.transition_by_summation(x, y).unwrap();
                    assert!((a - b).abs() < 1e-12, "{x:?} {y:?}");
                    total += a;
                }
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rank_kernel_examples() {
        let f = gf2();
        let pr = ChannelModel::new(f.clone(), 1, 1, 1, ChannelKind::PurelyRandom).unwrap();
        assert_eq!(pr.rank_kernel(&KernelInput::AlphaUniform(0)).unwrap().probs, vec![1.0, 0.0]);
        let row = pr.rank_kernel(&KernelInput::AlphaUniform(1)).unwrap();
        assert!((row.probs[1] - 0.5).abs() < 1e-15);
        let ctx = CountingContext::new(2).unwrap();
        assert!((purely_random_mixing_rank_transition(&ctx, 1, 1, 1).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fixed_input_formula_matches_enumeration() {
        let f = gf2();
        let ctx = CountingContext::new(2).unwrap();
        for (m, n) in [(2, 2), (3, 2), (2, 3), (3, 3)] {
            let hs = all_matrices(&f, m, n, 1 << 16).unwrap();
            for r in 0..=m {
                let d = &unit_row_matrices(&f, r, m)[0];
                for k in 0..=m.min(n) {
                    let with_k: Vec<&Mat> = hs.iter().filter(|h| h.rank() == k).collect();
                    for s in 0..=r.min(k) {
                        let count = with_k.iter().filter(|h| d.mul(h).unwrap().rank() == s).count();
                        let want = count as f64 / with_k.len() as f64;
                        let got = fixed_input_rank_transition(&ctx, m, r, k, s).unwrap();
                        assert!((want - got).abs() < 1e-12, "m={m} n={n} r={r} k={k} s={s}");
                    }
                }
            }
        }
    }

    #[test]
    fn mixing_formula_matches_enumeration() {
        let f = gf2();
        let ctx = CountingContext::new(2).unwrap();
        let (m, n) = (3, 3);
        let hs = all_matrices(&f, m, n, 1 << 16).unwrap();
        for r in 0..=m {
            let gs = all_matrices(&f, r, m, 1 << 16).unwrap();
            for k in 0..=m {
                let h = hs.iter().find(|h| h.rank() == k).unwrap();
                for s in 0..=r.min(k) {
                    let count = gs.iter().filter(|g| g.mul(h).unwrap().rank() == s).count();
                    let want = count as f64 / gs.len() as f64;
                    let got = purely_random_mixing_rank_transition(&ctx, r, k, s).unwrap();
                    assert!((want - got).abs() < 1e-12, "r={r} k={k} s={s}");
                }
            }
        }
    }

    #[test]
    fn kernel_row_invariant_to_d() {
        let f = gf2();
        let model = ChannelModel::new(
            f.clone(),
            3,
            3,
            2,
            ChannelKind::RankUniform(RankPmf::new(vec![0.2, 0.3, 0.5]).unwrap()),
        )
        .unwrap();
        for r in 0..=3 {
            let closed = model.rank_kernel(&KernelInput::AlphaUniform(r)).unwrap();
            for u in Subspace::enumerate(&f, 3, r) {
                let row = model.rank_kernel(&KernelInput::Subspace(u.clone())).unwrap();
                assert_eq!(row.probs, closed.probs);
                // enumeration over H with every full-rank D spanning u
                let support = model.h_support().unwrap();
                let mut probs = [0.0; 3];
                for (h, p) in &support {
                    probs[u.basis().mul(h).unwrap().rank()] += p;
                }
                for s in 0..3 {
                    assert!((probs[s] - closed.probs[s]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn alpha_input_examples() {
        let f = gf2();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let zero = AlphaInput::uniform(vec![1.0, 0.0]).unwrap();
        let x = zero.sample(&f, 2, 1, &mut rng).unwrap();
        assert!(x.is_zero());
        assert_eq!(zero.pmf(&x), 1.0);
        let full = AlphaInput::uniform(vec![0.0, 0.0, 1.0]).unwrap();
        let x = Mat::from_rows(&f, &[vec![1, 0], vec![0, 1], vec![1, 1]]).unwrap();
        let ctx = CountingContext::new(2).unwrap();
        let want = 1.0 / ctx.chi(3, 2).unwrap().to_string().parse::<f64>().unwrap();
        assert!((full.pmf(&x) - want).abs() < 1e-15);
        let total: f64 = full.enumerate(&f, 3, 2).unwrap().iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);

        let one = AlphaInput::uniform(vec![0.0, 1.0]).unwrap();
        let mut counts = [0usize; 4];
        let n = 100_000;
        for _ in 0..n {
            let x = one.sample(&f, 2, 1, &mut rng).unwrap();
            counts[crate::linalg::matrix_index(&x) as usize] += 1;
        }
        assert_eq!(counts[0], 0);
        let e = n as f64 / 3.0;
        let chi2: f64 = counts[1..].iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        assert!(chi2 < 13.82, "chi2 = {chi2}"); // 2 dof, 0.999 quantile
    }

    #[test]
    fn z_channel_capacity() {
        let f = gf2();
        for p in [0.1, 0.3, 0.5, 0.8] {
            let model = ChannelModel::new(f.clone(), 1, 1, 1, ChannelKind::ZChannel(p)).unwrap();
            let p0 = (1.0 - p.powf(1.0 / (1.0 - p))) / (1.0 + (1.0 - p) * p.powf(p / (1.0 - p)));
            let input = vec![(Mat::zeros(&f, 1, 1), p0), (Mat::identity(&f, 1), 1.0 - p0)];
            let mi = model.exact_mutual_information(&input, Lens::Matrix).unwrap();
            let cap = (1.0 + (1.0 - p) * p.powf(p / (1.0 - p))).log2();
            assert!((mi - cap).abs() < 1e-12, "p={p}: {mi} vs {cap}");
        }
    }

    #[test]
    fn zero_channel_has_no_information() {
        let f = gf2();
        let model = ChannelModel::new(f.clone(), 2, 2, 2, ChannelKind::FixedMatrix(Mat::zeros(&f, 2, 2))).unwrap();
        let input = AlphaInput::uniform(vec![0.2, 0.3, 0.5]).unwrap().enumerate(&f, 2, 2).unwrap();
        assert!(model.exact_mutual_information(&input, Lens::Matrix).unwrap().abs() < 1e-15);
    }

    #[test]
    fn receiver_ci_matches_coherent_formula() {
        let f = gf2();
        let model = ChannelModel::new(f.clone(), 1, 1, 1, ChannelKind::PurelyRandom).unwrap();
        let input = vec![(Mat::zeros(&f, 1, 1), 0.5), (Mat::identity(&f, 1), 0.5)];
        assert!((model.receiver_ci_mutual_information(&input).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn network_example_support() {
        let f = gf2();
        let model = ChannelModel::new(f.clone(), 2, 2, 2, ChannelKind::NetworkExample { coefficients: None }).unwrap();
        let support = model.h_support().unwrap();
        let total: f64 = support.iter().map(|(_, p)| p).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for (h, _) in &support {
            assert_eq!(h.get(1, 0), 0);
        }
        let pmf = model.rank_pmf().unwrap();
        // rank 2 iff a1 = b2 = 1: probability 1/4
        assert!((pmf.get(2) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn convolution_sums() {
        let pmf = RankPmf::new(vec![0.5, 0.5]).unwrap();
        let c = pmf.convolve_power(3);
        assert_eq!(c, vec![0.125, 0.375, 0.375, 0.125]);
    }
}
