use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use kclust::cost::{integral_cost, open_set_cost};
use kclust::graph::SourceOrder;
use kclust::harness::trim_to_k;
use kclust::lmp::lmp_round;
use kclust::lp::{nearest_mass_sets, solve_relaxation, DEFAULT_ACCURACY};
use kclust::preprocess::pipage_round;
use kclust::pseudo::{kcenter_finish, KCenterInput};
use kclust::reduction::{brute_force_opt, pseudo_to_true, PseudoSolution};
use kclust::Instance;

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..10.0f64, 2)
}

/// Euclidean plane instance with `k` drawn below the facility count.
fn instance(max_clients: usize, max_facilities: usize) -> impl Strategy<Value = Instance> {
    instance_from(1, max_clients, max_facilities)
}

fn instance_from(min_facilities: usize, max_clients: usize, max_facilities: usize) -> impl Strategy<Value = Instance> {
    (
        prop::collection::vec(point(), 1..=max_clients),
        prop::collection::vec(point(), min_facilities..=max_facilities),
        prop::sample::select(vec![1.0, 2.0]),
        any::<prop::sample::Index>(),
    )
        .prop_map(|(c, f, p, k)| {
            let k = 1 + k.index(f.len());
            Instance::euclidean(&c, &f, k, p).unwrap()
        })
}

fn nearest_by_hand(inst: &Instance, open: &[usize]) -> f64 {
    (0..inst.n_clients())
        .map(|j| open.iter().map(|&i| inst.pow(inst.d_cf(j, i))).fold(f64::INFINITY, f64::min))
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn integral_cost_is_nearest_open(inst in instance(8, 6), mask in 1u32..64) {
        let open: Vec<usize> = (0..inst.n_facilities()).filter(|i| mask >> i & 1 == 1).collect();
        prop_assume!(!open.is_empty());
        let sol = integral_cost(&inst, &open).unwrap();
        let by_hand = nearest_by_hand(&inst, &open);
        prop_assert!((sol.total_cost - by_hand).abs() <= 1e-9 * by_hand.max(1.0));
        prop_assert!(sol.assignment.iter().all(|i| open.contains(i)));
    }

    #[test]
    fn json_round_trip(inst in instance(6, 5)) {
        let back = Instance::from_json(&inst.to_json().unwrap()).unwrap();
        prop_assert_eq!(back.k(), inst.k());
        prop_assert_eq!(back.n_clients(), inst.n_clients());
        for j in 0..inst.n_clients() {
            for i in 0..inst.n_facilities() {
                prop_assert!((back.d_cf(j, i) - inst.d_cf(j, i)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn relaxation_is_feasible_and_below_optimum(inst in instance(7, 6)) {
        let lp = solve_relaxation(&inst, DEFAULT_ACCURACY).unwrap();
        lp.validate(&inst).unwrap();
        prop_assert!(lp.total_opening() <= inst.k() as f64 + 1e-6);
        let opt = brute_force_opt(&inst).unwrap();
        prop_assert!((opt.total_cost - nearest_by_hand(&inst, &opt.open)).abs() <= 1e-9 * opt.total_cost.max(1.0));
        let lp_cost = kclust::cost::fractional_cost(&inst, &lp).unwrap();
        prop_assert!(lp_cost <= opt.total_cost * (1.0 + 1e-6) + 1e-9);
    }

    #[test]
    fn lmp_opens_valid_facilities(inst in instance(7, 6), seed in any::<u64>()) {
        let lp = solve_relaxation(&inst, DEFAULT_ACCURACY).unwrap();
        let nm = nearest_mass_sets(&inst, &lp.y).unwrap();
        let order = SourceOrder::new(&nm.instance);
        let open = lmp_round(&nm.y, &order, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert!(!open.is_empty());
        prop_assert!(open.iter().all(|&i| i < nm.instance.n_facilities()));
    }

    #[test]
    fn pipage_keeps_set_sums(
        y in prop::collection::vec(0.0..=1.0f64, 2..12),
        g in prop::sample::select(vec![0.25, 0.125, 0.0625]),
        seed in any::<u64>(),
    ) {
        let n = y.len();
        let family = vec![(0..n / 2).collect::<Vec<_>>(), (0..n).collect()];
        let out = pipage_round(&y, &family, g, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        for (v, &u) in out.y.iter().zip(&out.units) {
            prop_assert!((v - u as f64 * g).abs() < 1e-9);
        }
        for set in &family {
            let before: f64 = set.iter().map(|&i| y[i]).sum();
            let after: f64 = set.iter().map(|&i| out.y[i]).sum();
            prop_assert!((before - after).abs() < g + 1e-9, "set {:?}: {} -> {}", set, before, after);
        }
    }

    #[test]
    fn kcenter_finish_guarantees(inst in instance(8, 6), weights in prop::collection::vec(0u8..=4, 6)) {
        let n = inst.n_facilities();
        let mut ybar: Vec<f64> = (0..n).map(|i| f64::from(weights[i]) / 4.0).collect();
        if ybar.iter().sum::<f64>() < 1.0 {
            ybar[0] = 1.0;
        }
        let kc = KCenterInput::new(&inst, ybar.clone()).unwrap();
        let out = kcenter_finish(&kc, &inst).unwrap();
        let open = &out.solution.open;
        prop_assert!(open.len() as f64 <= kc.total().ceil() + 1e-9);
        for i in (0..n).filter(|&i| ybar[i] >= 1.0) {
            prop_assert!(open.contains(&i));
        }
        for j in 0..inst.n_clients() {
            let d = open.iter().map(|&i| inst.d_cf(j, i)).fold(f64::INFINITY, f64::min);
            prop_assert!(d <= 3.0 * kc.radius[j] + 1e-9);
        }
    }

    #[test]
    fn trim_reaches_k(inst in instance(8, 6)) {
        let all: Vec<usize> = (0..inst.n_facilities()).collect();
        let trimmed = trim_to_k(&inst, &all);
        prop_assert_eq!(trimmed.len(), inst.k());
        prop_assert!(open_set_cost(&inst, &trimmed) >= brute_force_opt(&inst).unwrap().total_cost - 1e-9);
    }

    #[test]
    fn reduction_respects_k(inst in instance_from(3, 6, 5), extra in 1usize..=2) {
        let k = inst.k().min(inst.n_facilities() - extra);
        let inst = inst.with_k(k).unwrap();
        let open: Vec<usize> = (0..k + extra).collect();
        let pseudo = PseudoSolution::new(&inst, &open).unwrap();
        let opt = brute_force_opt(&inst).unwrap().total_cost;
        let out = pseudo_to_true(&inst, &pseudo, 2.0, 0.25, opt, |local, _| {
            Ok((0..local.k().min(local.n_facilities())).collect())
        })
        .unwrap();
        prop_assert!(out.solution.open.len() <= k);
        prop_assert!((out.solution.total_cost - nearest_by_hand(&inst, &out.solution.open)).abs() < 1e-9 * opt.max(1.0));
    }
}
