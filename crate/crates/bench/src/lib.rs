//! Benchmark fixtures shared by the criterion targets.

use loclab_core::linalg::{sample_matrix, MatrixKind};
use loclab_core::linear_code::LinearMatrixCode;
use loclab_core::rng::trial_rng;
use loclab_core::{ChannelKind, ChannelModel, FieldSpec, Mat, RankPmf};
use rand::Rng;

pub fn random_matrix(field: &FieldSpec, rows: usize, cols: usize, seed: u64) -> Mat {
    let mut rng = trial_rng(seed, 0);
    sample_matrix(field, rows, cols, MatrixKind::PurelyRandom, &mut rng).expect("valid shape")
}

/// A lifted linear matrix code on the `q = 2`, `T = 4`, `M = 2` channel
/// with `p(1) = p(2) = 1/2`, plus one received codeword.
pub struct LmcFixture {
    pub code: LinearMatrixCode,
    pub received: Vec<Mat>,
}

pub fn lmc_fixture(n: usize, seed: u64) -> LmcFixture {
    let f = FieldSpec::prime(2).expect("prime");
    let pmf = RankPmf::new(vec![0.0, 0.5, 0.5]).expect("pmf");
    let model = ChannelModel::new(f.clone(), 4, 2, 2, ChannelKind::RankUniform(pmf)).expect("model");
    let code = LinearMatrixCode::new(&f, 4, 2, n, 0.75, seed).expect("code");
    let mut rng = trial_rng(seed, 1);
    let data = (0..2 * code.rows()).map(|_| rng.gen_range(0..2)).collect();
    let b = Mat::new(f, 2, code.rows(), data).expect("message");
    let received = code
        .encode(&b)
        .expect("encode")
        .blocks
        .iter()
        .map(|x| model.transmit(x, &mut rng).expect("transmit"))
        .collect();
    LmcFixture { code, received }
}
