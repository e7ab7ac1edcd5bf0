use grandab_core::channel_info::{blahut_arimoto, qfunc, CAPACITY_MAX_ITER, CAPACITY_TOL};
use grandab_core::mot::{
    empirical_cond_entropy, empirical_mi, entropy, joint_type, mutual_info, shell_size, type_class_size,
};
use grandab_core::ranking::{psi, rank_g, strict_rank_ghat};
use grandab_core::{Channel, NType, Pmf, Sequence};
use proptest::prelude::*;

fn pair(max_n: usize, k: usize, l: usize) -> impl Strategy<Value = (Sequence, Sequence)> {
    (1..=max_n).prop_flat_map(move |n| {
        (prop::collection::vec(0..k, n), prop::collection::vec(0..l, n))
            .prop_map(move |(x, y)| (Sequence::new(x, k).unwrap(), Sequence::new(y, l).unwrap()))
    })
}

fn channel(k: usize, l: usize) -> impl Strategy<Value = Channel> {
    prop::collection::vec(prop::collection::vec(0.01f64..1.0, l), k).prop_map(|rows| {
        Channel::new(
            rows.into_iter()
                .map(|r| {
                    let s: f64 = r.iter().sum();
                    r.into_iter().map(|v| v / s).collect()
                })
                .collect(),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn chain_rule((x, y) in pair(40, 3, 3)) {
        let hx = x.composition().entropy();
        let lhs = empirical_cond_entropy(&x, &y).unwrap();
        prop_assert!((lhs - (hx - empirical_mi(&x, &y).unwrap())).abs() < 1e-12);
    }

    #[test]
    fn joint_type_marginals((x, y) in pair(40, 3, 2)) {
        let j = joint_type(&x, &y).unwrap();
        prop_assert_eq!(j.input_type(), x.composition());
        prop_assert_eq!(j.output_type(), y.composition());
        prop_assert!(shell_size(&j) <= type_class_size(&x.composition()));
    }

    #[test]
    fn psi_sandwich_and_rank_order((x, y) in pair(10, 2, 3)) {
        let comp = x.composition();
        let p = psi(&x, &y, &comp).unwrap();
        prop_assert!(p.within_bounds());
        prop_assert!(p.value > 0.0 && p.value <= 1.0);
        let g = rank_g(&x, &y, &comp).unwrap();
        let ghat = strict_rank_ghat(&x, &y, &comp).unwrap();
        prop_assert!(ghat <= g.rank);
        prop_assert_eq!(&p.numerator, &g.rank);
    }

    #[test]
    fn q_symmetry(z in -8.0f64..8.0) {
        prop_assert!((qfunc(z) + qfunc(-z) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn capacity_dominates_any_input(w in channel(3, 3), raw in prop::collection::vec(0.0f64..1.0, 3)) {
        let s: f64 = raw.iter().sum::<f64>() + 1e-9;
        let p = Pmf::new(raw.iter().map(|v| (v + 1e-9 / 3.0) / s).collect()).unwrap();
        let c = blahut_arimoto(&w, CAPACITY_TOL, CAPACITY_MAX_ITER).unwrap();
        prop_assert!(mutual_info(&p, &w).unwrap() <= c.capacity + 1e-9);
        prop_assert!(c.capacity <= entropy(&c.caid) + 1e-12);
    }

    #[test]
    fn nearest_type_sums_to_n(n in 1u32..500, raw in prop::collection::vec(0.001f64..1.0, 1..5)) {
        let s: f64 = raw.iter().sum();
        let p = Pmf::new(raw.iter().map(|v| v / s).collect()).unwrap();
        let t = NType::nearest(n, &p).unwrap();
        prop_assert_eq!(t.n(), n);
        for (c, q) in t.counts().iter().zip(p.probs()) {
            prop_assert!((*c as f64 - q * n as f64).abs() < 1.0 + 1e-9);
        }
    }
}
