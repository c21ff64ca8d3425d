use loclab_core::capacity::{
    bounds_report, channel_training_rate, rho_min, rho_n, subspace_lower_bound,
};
use loclab_core::config::{parse, ChannelConfig, KindName};
use loclab_core::linalg::{solve_left, IncrementalBasis, Solution};
use loclab_core::rank_metric::{rank_distance, throughput_rm_sweep};
use loclab_core::{CountingContext, FieldConfig, FieldSpec, Mat, RankPmf};
use num_bigint::BigUint;
use proptest::prelude::*;

fn field_strategy() -> impl Strategy<Value = FieldSpec> {
    prop_oneof![
        Just((2u32, 1u32)),
        Just((3, 1)),
        Just((2, 3)),
        Just((2, 4)),
        Just((3, 2)),
        Just((5, 1)),
        Just((7, 2)),
    ]
    .prop_map(|(p, k)| FieldSpec::new(p, k).unwrap())
}

fn mat(field: FieldSpec, rows: usize, cols: usize) -> impl Strategy<Value = Mat> {
    let q = field.q();
    prop::collection::vec(0..q, rows * cols).prop_map(move |d| Mat::new(field.clone(), rows, cols, d).unwrap())
}

fn gf2_mat(rows: usize, cols: usize) -> impl Strategy<Value = Mat> {
    mat(FieldSpec::prime(2).unwrap(), rows, cols)
}

fn pmf(max_rank: usize) -> impl Strategy<Value = RankPmf> {
    prop::collection::vec(0.01f64..1.0, max_rank + 1).prop_map(|w| {
        let total: f64 = w.iter().sum();
        RankPmf::new(w.into_iter().map(|x| x / total).collect()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn field_axioms((f, a, b, c) in field_strategy().prop_flat_map(|f| {
        let q = f.q();
        (Just(f), 0..q, 0..q, 0..q)
    })) {
        prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
        prop_assert_eq!(f.mul(a, b), f.mul_reference(a, b));
        prop_assert_eq!(f.sub(f.add(a, b), b), a);
        if b != 0 {
            prop_assert_eq!(f.mul(f.div(a, b).unwrap(), b), a);
        }
        prop_assert_eq!(f.pow(a, f.q() as u64), a);
    }

    #[test]
    fn rank_distance_is_a_metric(a in gf2_mat(3, 4), b in gf2_mat(3, 4), c in gf2_mat(3, 4)) {
        let ab = rank_distance(&a, &b).unwrap();
        prop_assert_eq!(ab, rank_distance(&b, &a).unwrap());
        prop_assert_eq!(rank_distance(&a, &a).unwrap(), 0);
        prop_assert_eq!(ab == 0, a == b);
        prop_assert!(ab <= rank_distance(&a, &c).unwrap() + rank_distance(&c, &b).unwrap());
    }

    #[test]
    fn rank_inequalities((a, b, c) in field_strategy().prop_flat_map(|f| (mat(f.clone(), 3, 4), mat(f.clone(), 3, 4), mat(f, 4, 2)))) {
        prop_assert!(a.add(&b).unwrap().rank() <= a.rank() + b.rank());
        let ac = a.mul(&c).unwrap().rank();
        prop_assert!(ac <= a.rank().min(c.rank()));
        prop_assert!(ac + 4 >= a.rank() + c.rank());
        prop_assert_eq!(a.rank(), a.transpose().rank());
    }

    #[test]
    fn solve_left_recovers_consistent_systems((a, u) in field_strategy().prop_flat_map(|f| (mat(f.clone(), 3, 5), mat(f, 1, 3)))) {
        let y = u.mul(&a).unwrap();
        match solve_left(&a, &y).unwrap() {
            Solution::Unique(x) => {
                prop_assert_eq!(a.rank(), 3);
                prop_assert_eq!(x, u);
            }
            Solution::Multiple => prop_assert!(a.rank() < 3),
            Solution::Inconsistent => prop_assert!(false, "consistent system reported inconsistent"),
        }
    }

    #[test]
    fn incremental_rank_matches_batch((rows, f) in field_strategy().prop_flat_map(|f| (mat(f.clone(), 7, 5), Just(f)))) {
        let mut inc = IncrementalBasis::new(&f, 5, 1);
        for i in 0..rows.rows() {
            inc.insert(rows.row(i), &[0]).unwrap();
            prop_assert_eq!(inc.rank(), rows.submatrix(0..i + 1, 0..5).rank());
        }
    }

    #[test]
    fn counting_identities(q in prop::sample::select(vec![2u64, 3, 4, 5, 7, 9]), m in 1usize..6, n in 1usize..6) {
        let ctx = CountingContext::new(q).unwrap();
        let total: BigUint = (0..=m.min(n)).map(|r| ctx.rank_count(m, n, r).unwrap()).sum();
        prop_assert_eq!(total, BigUint::from(q).pow((m * n) as u32));
        for r in 0..=m {
            prop_assert_eq!(ctx.gaussian_binomial(m, r).unwrap(), ctx.gaussian_binomial(m, m - r).unwrap());
            prop_assert!(-ctx.log2_chi_tilde(m, r).unwrap() < 1.8);
        }
        prop_assert_eq!(ctx.rank_count(m, n, m.min(n)).unwrap(), ctx.chi(m.max(n), m.min(n)).unwrap());
    }

    #[test]
    fn bound_chain((m, p) in (1usize..6).prop_flat_map(|m| (Just(m), pmf(m))), extra in 0usize..40, q in prop::sample::select(vec![2u64, 3, 4])) {
        let t = m + 1 + extra;
        let b = bounds_report(&p, t, m, m, q).unwrap();
        let ct = b.c_ct_norm.unwrap();
        let sub = b.subspace_lower_norm.unwrap();
        let eps = b.epsilon_t_q.unwrap();
        let bits = (q as f64).log2();
        prop_assert!(eps > 0.0 && eps < 1.8 / (t as f64 * bits));
        prop_assert!(ct < sub && sub <= p.mean() + 1e-12);
        prop_assert!(b.ect_lower_norm >= ct - 1e-12);
        prop_assert!(b.ect_upper_norm >= b.ect_lower_norm - 1e-12);
        prop_assert!(b.ect_upper_norm <= p.mean() + 1e-12);
        let (rate, e2) = subspace_lower_bound(&p, t, m, q).unwrap();
        prop_assert!((rate - sub).abs() < 1e-15 && (e2 - eps).abs() < 1e-15);
    }

    #[test]
    fn throughput_identity((m, p) in (1usize..5).prop_flat_map(|m| (Just(m), pmf(m))), extra in 0usize..10) {
        let t = 2 * m + extra;
        let best = throughput_rm_sweep(&p, t, m, 1).unwrap().into_iter().map(|(_, v)| v).fold(0.0, f64::max);
        let other = rho_n(&p, 1, m).unwrap().rho_n * channel_training_rate(&p, t, m).unwrap();
        prop_assert!((best - other).abs() <= 1e-12);
    }

    #[test]
    fn rho_n_is_a_fraction((m, p) in (1usize..5).prop_flat_map(|m| (Just(m), pmf(m))), n in 1usize..30) {
        let r = rho_n(&p, n, m).unwrap().rho_n;
        prop_assert!(r > 0.0 && r <= 1.0);
    }

    #[test]
    fn config_round_trip(t in 2usize..20, m in 1usize..4, probs in prop::collection::vec(0.01f64..1.0, 4)) {
        let total: f64 = probs[..=m].iter().sum();
        let cfg = ChannelConfig {
            field: FieldConfig::from(&FieldSpec::prime(2).unwrap()),
            t: t.max(m),
            m,
            n: m,
            kind: KindName::RankUniform,
            rank_pmf: Some(probs[..=m].iter().map(|x| x / total).collect()),
            h: None,
            p: None,
            coefficients: None,
            seed: None,
        };
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ChannelConfig = parse(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert!(back.build().is_ok());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn rho_min_non_increasing_in_support(c in 0.5f64..3.0, n_star in 3usize..9) {
        let a = rho_min(c, n_star).unwrap().rho_min;
        let b = rho_min(c, n_star + 1).unwrap().rho_min;
        prop_assert!(b <= a + 1e-12);
        prop_assert!(a > 0.0 && a <= 1.0 + 1e-12);
    }
}
