//! Cross-checks of the solver against a naive expansion built only from the
//! public belief-update API, and against values frozen from an independent
//! implementation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rmab_core::{
    auxiliary_value, enumerate_outcomes, myopic_action, myopic_value, optimal_value, BeliefVector,
    Instance, InstanceSpec, RewardKind,
};

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect())
        .collect()
}

/// `V` with `h` slots left, by brute force over actions and outcomes.
fn naive(inst: &Instance, b: &BeliefVector, h: usize, optimal: bool) -> f64 {
    let actions = if optimal {
        subsets(inst.n(), inst.k())
    } else {
        vec![myopic_action(b, inst.k()).unwrap().into_inner()]
    };
    actions
        .iter()
        .map(|a| {
            let args: Vec<f64> = a.iter().map(|&c| b[c]).collect();
            let r = inst.reward().evaluate(&args);
            if h == 1 {
                return r;
            }
            let future: f64 = enumerate_outcomes(b, a, inst.sensing())
                .unwrap()
                .into_iter()
                .map(|(obs, p)| {
                    let next = b.update(&obs, inst.params(), inst.sensing()).unwrap();
                    p * naive(inst, &next, h - 1, optimal)
                })
                .sum();
            r + inst.beta() * future
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let n = rng.random_range(2..=4);
    let k = rng.random_range(1..=2.min(n));
    let t = rng.random_range(1..=3);
    let p01 = rng.random_range(0.05..0.5);
    let p11 = rng.random_range(p01 + 0.01..0.95);
    let reward = if rng.random() { RewardKind::SumThroughput } else { RewardKind::AnySuccess };
    let beliefs = (0..n).map(|_| rng.random::<f64>()).collect();
    InstanceSpec::new(n, k, t, rng.random(), p01, p11)
        .epsilon(rng.random_range(0.0..0.5))
        .reward(reward)
        .initial(beliefs)
        .build()
        .unwrap()
}

#[test]
fn solver_matches_naive_expansion() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..60 {
        let inst = random_instance(&mut rng);
        let h = inst.horizon();
        let opt = optimal_value(&inst).unwrap();
        let my = myopic_value(&inst).unwrap();
        assert!((opt.recursion_value - naive(&inst, inst.initial(), h, true)).abs() < 1e-12);
        assert!((my.recursion_value - naive(&inst, inst.initial(), h, false)).abs() < 1e-12);
        assert!((opt.value - inst.beta() * opt.recursion_value).abs() < 1e-15);
    }
}

#[test]
fn frozen_reference_values() {
    // (reward, beliefs, k, T, p01, p11, ε, β, V_1 of both myopic and optimal)
    let cases = [
        (RewardKind::SumThroughput, vec![0.6, 0.4, 0.5, 0.35], 2, 4, 0.3, 0.7, 0.1, 0.9, 3.549052139320514),
        (RewardKind::AnySuccess, vec![0.6, 0.4, 0.5, 0.35], 2, 4, 0.3, 0.7, 0.1, 0.9, 2.633122380145838),
        (RewardKind::AnySuccess, vec![0.2, 0.9, 0.5], 1, 3, 0.1, 0.9, 0.0, 0.95, 2.470046),
        (RewardKind::SumThroughput, vec![0.5, 0.5], 1, 2, 0.3, 0.7, 0.1, 0.5, 0.7155),
    ];
    for (reward, beliefs, k, t, p01, p11, eps, beta, want) in cases {
        let inst = InstanceSpec::new(beliefs.len(), k, t, beta, p01, p11)
            .epsilon(eps)
            .reward(reward)
            .initial(beliefs)
            .build()
            .unwrap();
        let opt = optimal_value(&inst).unwrap();
        let my = myopic_value(&inst).unwrap();
        assert!((opt.recursion_value - want).abs() < 1e-12, "{reward}: {}", opt.recursion_value);
        assert!((my.recursion_value - want).abs() < 1e-12, "{reward}: {}", my.recursion_value);
    }
}

#[test]
fn auxiliary_value_is_myopic_value_on_sorted_beliefs() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..40 {
        let p01 = rng.random_range(0.05..0.5);
        let p11 = rng.random_range(p01 + 0.01..0.95);
        let bound = p01 * (1.0 - p11) / (p11 * (1.0 - p01));
        let n = rng.random_range(2..=4);
        let beliefs: Vec<f64> = (0..n).map(|_| rng.random_range(p01..=p11)).collect();
        let inst = InstanceSpec::new(n, rng.random_range(1..=2.min(n)), 4, rng.random(), p01, p11)
            .epsilon(bound * rng.random::<f64>())
            .reward(RewardKind::AnySuccess)
            .initial(beliefs.clone())
            .build()
            .unwrap();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| beliefs[b].total_cmp(&beliefs[a]).then(a.cmp(&b)));
        let w = auxiliary_value(&inst, &order).unwrap();
        let m = myopic_value(&inst).unwrap();
        assert!((w - m.recursion_value).abs() < 1e-9);
    }
}
