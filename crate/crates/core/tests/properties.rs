use std::sync::OnceLock;

use proptest::prelude::*;

use subwalk::bernstein::{coefficients, power_coefficient_closed_form, BernsteinSpec};
use subwalk::capacity::{equilibrium, PointSet};
use subwalk::exec::Execution;
use subwalk::green::{GreenConfig, GreenEvaluator};
use subwalk::massiveness::{thorn_series_terms, LatticeSetSpec, Massiveness, SetKind, ThornProfile};
use subwalk::montecarlo::{hitting_by_horizon, hitting_probability, SimConfig, Stopping};
use subwalk::renewal::{generating_identity_residual, recurrence_term, renewal_sequence};
use subwalk::walk_kernel::{pmf_table, LatticePoint, TransitionTable};

fn table() -> &'static TransitionTable {
    static T: OnceLock<TransitionTable> = OnceLock::new();
    T.get_or_init(|| pmf_table(3, 40, 40).unwrap())
}

fn evaluator() -> &'static GreenEvaluator {
    static G: OnceLock<GreenEvaluator> = OnceLock::new();
    G.get_or_init(|| {
        let cfg = GreenConfig {
            k_exact: 128,
            radius: 48,
            ..GreenConfig::default()
        };
        GreenEvaluator::new(&BernsteinSpec::power(1.0).unwrap(), 3, cfg).unwrap()
    })
}

fn small_set() -> impl Strategy<Value = PointSet> {
    prop::collection::vec(prop::collection::vec(-4i64..=4, 3), 1..10)
        .prop_map(|pts| PointSet::new(pts.into_iter().map(|c| LatticePoint::new(c).unwrap()).collect()).unwrap())
}

fn signed_perm(x: &[i64], perm: &[usize], signs: &[bool]) -> Vec<i64> {
    perm.iter()
        .zip(signs)
        .map(|(&i, &s)| if s { -x[i] } else { x[i] })
        .collect()
}

fn perm3() -> impl Strategy<Value = Vec<usize>> {
    Just(vec![0usize, 1, 2]).prop_shuffle()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn coefficients_are_nonnegative_and_match_closed_form(alpha in 0.05f64..1.95, n in 1usize..200) {
        let c = coefficients(&BernsteinSpec::power(alpha).unwrap(), 200).unwrap();
        prop_assert!(c.as_slice().iter().all(|&v| v >= -1e-14));
        let closed = power_coefficient_closed_form(alpha, n);
        prop_assert!(((c.get(n) - closed) / closed).abs() < 1e-12);
    }

    #[test]
    fn coefficient_tail_follows_power_law(alpha in 0.2f64..1.9) {
        let n = 2000usize;
        let c = coefficients(&BernsteinSpec::power(alpha).unwrap(), n).unwrap();
        let deficit = 1.0 - c.total_mass();
        let bound = 2.0 * (n as f64).powf(-alpha / 2.0) / statrs::function::gamma::gamma(1.0 - alpha / 2.0);
        prop_assert!(deficit >= 0.0 && deficit <= bound);
    }

    #[test]
    fn renewal_recurrence_is_bit_exact(alpha in 0.1f64..2.0, n in 1usize..600) {
        let c = coefficients(&BernsteinSpec::power(alpha).unwrap(), 600).unwrap();
        let seq = renewal_sequence(&c, 600).unwrap();
        prop_assert_eq!(recurrence_term(c.as_slice(), seq.values(), n).to_bits(), seq.get(n).to_bits());
    }

    #[test]
    fn generating_identity_holds(alpha in 0.2f64..1.9) {
        let c = coefficients(&BernsteinSpec::power(alpha).unwrap(), 4096).unwrap();
        let seq = renewal_sequence(&c, 4096).unwrap();
        for z in [0.1, 0.5, 0.9] {
            let (res, bound) = generating_identity_residual(&seq, z).unwrap();
            prop_assert!(res <= bound, "z={} res={} bound={}", z, res, bound);
        }
    }

    #[test]
    fn transition_table_parity_and_symmetry(
        k in 0usize..=40,
        x in prop::collection::vec(-12i64..=12, 3),
        perm in perm3(),
        signs in prop::collection::vec(any::<bool>(), 3),
    ) {
        let t = table();
        let p = LatticePoint::new(x.clone()).unwrap();
        let v = t.get(k, &p).unwrap();
        if (p.l1() as usize + k) % 2 == 1 {
            prop_assert_eq!(v, 0.0);
        }
        let q = LatticePoint::new(signed_perm(&x, &perm, &signs)).unwrap();
        prop_assert_eq!(t.get(k, &q).unwrap(), v);
    }

    #[test]
    fn green_is_symmetric(
        x in prop::collection::vec(-30i64..=30, 3),
        perm in perm3(),
        signs in prop::collection::vec(any::<bool>(), 3),
    ) {
        let g = evaluator();
        let a = g.green_full_unchecked(&LatticePoint::new(x.clone()).unwrap()).value;
        let b = g.green_full_unchecked(&LatticePoint::new(signed_perm(&x, &perm, &signs)).unwrap()).value;
        prop_assert!((a - b).abs() <= 1e-14 * a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn capacity_translation_invariance(set in small_set(), z in prop::collection::vec(-20i64..=20, 3)) {
        let g = evaluator();
        let a = equilibrium(g, &set).unwrap().capacity;
        let b = equilibrium(g, &set.translate(&LatticePoint::new(z).unwrap())).unwrap().capacity;
        prop_assert!(((a - b) / a).abs() < 1e-9);
    }

    #[test]
    fn capacity_subadditivity_and_monotonicity(a in small_set(), b in small_set()) {
        let g = evaluator();
        let ca = equilibrium(g, &a).unwrap().capacity;
        let cb = equilibrium(g, &b).unwrap().capacity;
        let cu = equilibrium(g, &a.union(&b).unwrap()).unwrap().capacity;
        prop_assert!(cu <= (ca + cb) * (1.0 + 1e-9));
        prop_assert!(cu >= ca.max(cb) * (1.0 - 1e-9));
    }

    #[test]
    fn enlarging_a_thorn_never_loses_massiveness(b1 in 0.05f64..4.0, b2 in 0.05f64..4.0, alpha in 0.1f64..1.9) {
        // n/log(1+n)^β shrinks as β grows.
        let (wide, narrow) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
        let w = thorn_series_terms(&ThornProfile::LinOverLog(wide), 3, alpha, 1..=4).unwrap();
        let n = thorn_series_terms(&ThornProfile::LinOverLog(narrow), 3, alpha, 1..=4).unwrap();
        prop_assert!(!(n.classification == Some(Massiveness::Massive) && w.classification == Some(Massiveness::NonMassive)));
    }

    #[test]
    fn simulation_is_deterministic_and_budget_monotone(seed in any::<u64>()) {
        let set = LatticeSetSpec::new(3, SetKind::Hyperplane(2)).unwrap();
        let mut cfg = SimConfig::new(BernsteinSpec::power(1.0).unwrap(), vec![0, 0, 6], 400, Stopping::Horizon(1 << 10), seed);
        let a = hitting_probability(&cfg, &set).unwrap();
        cfg.exec = Execution::Sequential;
        let b = hitting_probability(&cfg, &set).unwrap();
        prop_assert_eq!(a.hits, b.hits);
        let ests = hitting_by_horizon(&cfg, &set, &[1 << 8, 1 << 9, 1 << 10]).unwrap();
        prop_assert!(ests.windows(2).all(|w| w[1].hits >= w[0].hits));
        prop_assert_eq!(ests[2].hits, a.hits);
    }
}
