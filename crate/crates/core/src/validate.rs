//! Brute-force validation suites. Each suite returns one [`Check`] per
//! property, so a report can be printed or serialized as-is.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;

use crate::capacity::decomposition_check;
use crate::channel::{full_column_rank_matrices, AlphaInput, ChannelKind, ChannelModel, RankPmf, ENUMERATION_LIMIT};
use crate::counting::{verify_counting, Check, CountingContext};
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::linalg::{all_matrices, sample_matrix, MatrixKind, Subspace};
use crate::linear_code::simulate_rateless;
use crate::rank_metric::{simulate_rm, GabidulinCode, LiftedRankMetricCode, RmOutcome};
use crate::rng::trial_rng;

/// Tolerance for equalities between float-valued kernels.
pub const EXACT_TOL: f64 = 1e-12;
pub const DECOMPOSITION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Counting,
    Symmetry,
    Decomposition,
    Codes,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Counting, Suite::Symmetry, Suite::Decomposition, Suite::Codes];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Counting => "counting",
            Suite::Symmetry => "symmetry",
            Suite::Decomposition => "decomposition",
            Suite::Codes => "codes",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown suite `{s}` (expected counting, symmetry, decomposition or codes)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub passed: usize,
    pub failed: usize,
    pub pass: bool,
    pub checks: Vec<Check>,
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<SuiteReport> {
    let checks = match suite {
        Suite::Counting => counting_suite()?,
        Suite::Symmetry => symmetry_suite(seed)?,
        Suite::Decomposition => decomposition_suite(seed, 50)?,
        Suite::Codes => codes_suite(seed)?,
    };
    let passed = checks.iter().filter(|c| c.pass).count();
    Ok(SuiteReport {
        suite,
        seed,
        passed,
        failed: checks.len() - passed,
        pass: passed == checks.len(),
        checks,
    })
}

/// Closed-form counts against enumeration for `q = 2` (dimensions up to 4)
/// and `q = 3` (up to 3), plus the analytic constants.
pub fn counting_suite() -> Result<Vec<Check>> {
    let mut checks = verify_counting(2, 4)?;
    checks.extend(verify_counting(3, 3)?);
    let ctx = CountingContext::new(2)?;
    let xi = ctx.xi(1)?;
    checks.push(Check::with_pass("Xi_2(1) ≈ 0.28879", 0.28879, format!("{xi:.6}"), (xi - 0.28879).abs() < 1e-4));
    for q in [2u64, 3, 4, 5, 7, 8] {
        let ctx = CountingContext::new(q)?;
        let mut worst: f64 = 0.0;
        for m in 1..=12 {
            for r in 0..=m {
                worst = worst.max(-ctx.log2_chi_tilde(m, r)?);
            }
        }
        checks.push(Check::with_pass(
            format!("q={q} max -log2 chi_tilde < 1.8"),
            "< 1.8",
            format!("{worst:.6}"),
            worst < 1.8,
        ));
    }
    Ok(checks)
}

/// `P(BD → BE) = Pr{DH = E}` over every `(B, D, E)` with `q = 2`, `T = 3`,
/// `M = N = 2`, and invariance of `P(X → Y)` under random invertible `Φ`.
pub fn symmetry_suite(seed: u64) -> Result<Vec<Check>> {
    let f = FieldSpec::prime(2)?;
    let (t, m, n) = (3, 2, 2);
    let kinds = [
        ("purely_random", ChannelKind::PurelyRandom),
        ("full_rank", ChannelKind::FullRankUniform),
        ("rank_uniform", ChannelKind::RankUniform(RankPmf::new(vec![0.2, 0.3, 0.5])?)),
    ];
    let mut rng = trial_rng(seed, 0);
    let phis: Vec<_> = (0..5)
        .map(|_| sample_matrix(&f, t, t, MatrixKind::FullRank, &mut rng))
        .collect::<Result<_>>()?;
    let xs = all_matrices(&f, t, m, ENUMERATION_LIMIT)?;
    let ys = all_matrices(&f, t, n, ENUMERATION_LIMIT)?;
    let mut checks = Vec::new();
    for (name, kind) in kinds {
        let model = ChannelModel::new(f.clone(), t, m, n, kind)?;
        for r in 1..=m {
            let mut worst: f64 = 0.0;
            let mut cases = 0usize;
            for b in full_column_rank_matrices(&f, t, r)? {
                for d in all_matrices(&f, r, m, ENUMERATION_LIMIT)? {
                    for e in all_matrices(&f, r, n, ENUMERATION_LIMIT)? {
                        let out = model.symmetry_check(&b, &d, &e)?;
                        worst = worst.max((out.lhs - out.rhs).abs());
                        cases += 1;
                    }
                }
            }
            checks.push(Check::with_pass(
                format!("{name} full column rank r={r} ({cases} cases)"),
                format!("<= {EXACT_TOL:e}"),
                format!("{worst:e}"),
                worst <= EXACT_TOL,
            ));
        }
        let base: Vec<Vec<f64>> = xs
            .iter()
            .map(|x| ys.iter().map(|y| model.exact_transition(x, y)).collect())
            .collect::<Result<_>>()?;
        for (i, phi) in phis.iter().enumerate() {
            let mut worst: f64 = 0.0;
            for (x, row) in xs.iter().zip(&base) {
                let px = phi.mul(x)?;
                for (y, &p) in ys.iter().zip(row) {
                    worst = worst.max((model.exact_transition(&px, &phi.mul(y)?)? - p).abs());
                }
            }
            checks.push(Check::with_pass(
                format!("{name} Phi-invariance #{i}"),
                format!("<= {EXACT_TOL:e}"),
                format!("{worst:e}"),
                worst <= EXACT_TOL,
            ));
        }
    }
    Ok(checks)
}

/// A random α-type input: rank law and subspace laws with independent
/// uniform weights, normalized.
pub fn random_alpha_input<R: Rng + ?Sized>(field: &FieldSpec, t: usize, m: usize, rng: &mut R) -> Result<AlphaInput> {
    let top = t.min(m);
    let mut r: Vec<f64> = (0..=top).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = r.iter().sum();
    r.iter_mut().for_each(|p| *p /= total);
    let laws = (0..=top)
        .map(|dim| {
            let subs = Subspace::enumerate(field, m, dim);
            let w: Vec<f64> = subs.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
            let total: f64 = w.iter().sum();
            subs.into_iter().zip(w).map(|(u, p)| (u, p / total)).collect()
        })
        .collect();
    AlphaInput::with_laws(r, laws)
}

/// `I(⟨X⟩;⟨Y⟩) = I(rank X; rank Y) + J` on `q = 2`, `T = 2`, `M = N = 2`
/// purely random `H` for `inputs` random α-type inputs.
pub fn decomposition_suite(seed: u64, inputs: usize) -> Result<Vec<Check>> {
    let f = FieldSpec::prime(2)?;
    let model = ChannelModel::new(f.clone(), 2, 2, 2, ChannelKind::PurelyRandom)?;
    (0..inputs)
        .map(|i| {
            let mut rng = trial_rng(seed, i as u64);
            let alpha = random_alpha_input(&f, 2, 2, &mut rng)?;
            let c = decomposition_check(&model, &alpha)?;
            Ok(Check::with_pass(
                format!("decomposition input #{i}"),
                format!("{:.12}", c.lhs),
                format!("{:.12}", c.rhs),
                (c.lhs - c.rhs).abs() <= DECOMPOSITION_TOL,
            ))
        })
        .collect()
}

/// Gabidulin distance, the decoder guarantee in both directions, a Monte
/// Carlo run, and agreement of incremental and batch rank in rateless
/// sessions.
pub fn codes_suite(seed: u64) -> Result<Vec<Check>> {
    let f = FieldSpec::prime(2)?;
    let mut checks = Vec::new();
    for k in 1..=3 {
        let code = GabidulinCode::new(&f, 3, 3, k)?;
        checks.push(Check::new(
            format!("Gabidulin q=2 t=3 m=3 k={k} min distance"),
            4 - k,
            code.min_distance_exhaustive()?,
        ));
    }
    let hs = all_matrices(&f, 3, 3, ENUMERATION_LIMIT)?;
    for k in 1..=3 {
        let code = LiftedRankMetricCode::new(&f, 6, 3, 1, k)?;
        let mut rng = trial_rng(seed, k as u64);
        let msg: Vec<u32> = (0..code.code().dimension()).map(|_| rng.gen_range(0..2)).collect();
        let sent = code.encode(&msg)?;
        let mut mismatches = 0usize;
        for h in &hs {
            let out = code.decode(&[sent.blocks[0].mul(h)?])?;
            let correct = matches!(&out.outcome, RmOutcome::Decoded { message, .. } if *message == msg);
            let decoded = matches!(out.outcome, RmOutcome::Decoded { .. });
            if out.guaranteed != decoded || (decoded && !correct) {
                mismatches += 1;
            }
        }
        checks.push(Check::new(format!("decoded iff rank H >= {} (k={k}, all H)", code.threshold()), 0, mismatches));
    }
    let pmf = RankPmf::new(vec![0.0, 0.0, 0.5, 0.5])?;
    let model = ChannelModel::new(f.clone(), 6, 3, 3, ChannelKind::RankUniform(pmf))?;
    let code = LiftedRankMetricCode::new(&f, 6, 3, 1, 2)?;
    let rep = simulate_rm(&model, &code, 2000, seed)?;
    checks.push(Check::new("rank-metric Monte Carlo wrong decodes", 0, rep.errors));
    checks.push(Check::new("rank-metric guarantee violations", 0, rep.guarantee_violations));

    let model = ChannelModel::new(
        f.clone(),
        4,
        2,
        2,
        ChannelKind::RankUniform(RankPmf::new(vec![0.0, 0.5, 0.5])?),
    )?;
    let rep = simulate_rateless(&model, 6, 24, 200, seed, seed, true)?;
    checks.push(Check::new("rateless incremental rank = batch rank", 0, rep.batch_mismatches));
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!(matches!("bogus".parse::<Suite>(), Err(Error::Usage(_))));
    }

    #[test]
    fn decomposition_small() {
        assert!(decomposition_suite(7, 3).unwrap().iter().all(|c| c.pass));
    }
}
