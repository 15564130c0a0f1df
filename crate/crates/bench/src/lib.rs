//! Fixed instances shared by the benchmarks.

use rmab_core::{Instance, InstanceSpec, RewardKind};

/// Sum-throughput instance inside the optimality region.
pub fn sum_throughput(n: usize, k: usize, horizon: usize) -> Instance {
    spread(InstanceSpec::new(n, k, horizon, 0.9, 0.3, 0.7).epsilon(0.1), n)
}

/// Any-success instance with a small discount factor.
pub fn any_success(n: usize, k: usize, horizon: usize) -> Instance {
    spread(
        InstanceSpec::new(n, k, horizon, 0.2, 0.3, 0.7)
            .epsilon(0.05)
            .reward(RewardKind::AnySuccess),
        n,
    )
}

fn spread(spec: InstanceSpec, n: usize) -> Instance {
    let (lo, hi) = (spec.p01, spec.p11);
    let beliefs = (0..n)
        .map(|i| if n == 1 { lo } else { hi - (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect();
    spec.initial(beliefs).build().expect("valid fixture")
}
