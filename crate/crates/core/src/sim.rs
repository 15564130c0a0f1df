//! Monte Carlo simulation of true channel states, ACK feedback and belief
//! tracking.
//!
//! A sensed channel ACKs with probability `1-ε` when it is good and never
//! when it is bad. Realized reward per slot is the number of ACKs for
//! sum-throughput and `1{any ACK}` for any-success; both have conditional
//! mean `F` given the beliefs. Custom rewards are credited `F` itself.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{BeliefVector, Observation};
use crate::error::{Error, Result};
use crate::fmt::sig17;
use crate::instance::Instance;
use crate::policy::{Policy, PolicyKind};
use crate::reward::RewardKind;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotRecord {
    pub t: usize,
    pub states: Vec<bool>,
    pub action: Vec<usize>,
    pub acks: Vec<usize>,
    /// Realized, undiscounted.
    pub reward: f64,
    pub beliefs_before: Vec<f64>,
    pub beliefs_after: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeTrace {
    pub slots: Vec<SlotRecord>,
    /// `Σ_t β^t r_t`.
    pub discounted_return: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimResult {
    pub mean: f64,
    pub std_error: f64,
    pub episodes: usize,
    pub seed: u64,
}

/// Generator for episode `index` under `root`: the ChaCha stream number is
/// the episode index, so episodes do not depend on batching.
pub fn episode_rng(root: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(index);
    rng
}

/// One episode driven by a generator seeded with `seed`.
pub fn run_episode(inst: &Instance, policy: &mut dyn Policy, seed: u64) -> Result<EpisodeTrace> {
    simulate(inst, policy, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// One episode using `rng` for every draw: initial states, then per slot the
/// ACK draws of the sensed channels and the state transitions, each in
/// ascending channel order.
pub fn simulate(inst: &Instance, policy: &mut dyn Policy, rng: &mut ChaCha8Rng) -> Result<EpisodeTrace> {
    let n = inst.n();
    let (params, sensing) = (inst.params(), inst.sensing());
    let keep = 1.0 - sensing.epsilon();
    let mut belief = inst.initial().clone();
    let mut states: Vec<bool> = belief
        .as_slice()
        .iter()
        .map(|&w| rng.random::<f64>() < w)
        .collect();
    let mut slots = Vec::with_capacity(inst.horizon());
    let mut total = 0.0;
    let mut discount = 1.0;
    for t in 1..=inst.horizon() {
        let action = policy.act(&belief, t);
        if action.len() != inst.k() || action.channels().iter().any(|&c| c >= n) {
            return Err(Error::InvalidAction(format!(
                "policy `{}` returned {action} at slot {t}",
                policy.name()
            )));
        }
        let sensed = action.channels().to_vec();
        let acks: Vec<usize> = sensed
            .iter()
            .copied()
            .filter(|&c| {
                let u = rng.random::<f64>();
                states[c] && u < keep
            })
            .collect();
        let reward = match inst.reward().kind() {
            RewardKind::SumThroughput => acks.len() as f64,
            RewardKind::AnySuccess => f64::from(u8::from(!acks.is_empty())),
            RewardKind::Custom => {
                let args: Vec<f64> = sensed.iter().map(|&c| belief[c]).collect();
                inst.reward().evaluate(&args)
            }
        };
        discount *= inst.beta();
        total += discount * reward;
        let obs = Observation::new(sensed.clone(), acks.clone())?;
        let next = belief.update(&obs, params, sensing)?;
        slots.push(SlotRecord {
            t,
            states: states.clone(),
            action: sensed,
            acks,
            reward,
            beliefs_before: belief.as_slice().to_vec(),
            beliefs_after: next.as_slice().to_vec(),
        });
        belief = next;
        for s in states.iter_mut() {
            let p = if *s { params.p11() } else { params.p01() };
            *s = rng.random::<f64>() < p;
        }
    }
    Ok(EpisodeTrace {
        slots,
        discounted_return: total,
    })
}

/// Episode `index` for a policy chosen by kind. The random policy draws its
/// own seed from the episode generator first.
pub fn run_indexed_episode(
    inst: &Instance,
    policy: &PolicyKind,
    root: u64,
    index: u64,
) -> Result<EpisodeTrace> {
    let mut rng = episode_rng(root, index);
    let policy_seed: u64 = rng.random();
    let mut p = policy.build(inst.n(), inst.k(), policy_seed)?;
    simulate(inst, p.as_mut(), &mut rng)
}

/// Mean discounted return over `episodes` independent episodes with its
/// standard error.
pub fn estimate_value(
    inst: &Instance,
    policy: &PolicyKind,
    episodes: usize,
    seed: u64,
) -> Result<SimResult> {
    if episodes < 2 {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 episodes, got {episodes}"
        )));
    }
    policy.build(inst.n(), inst.k(), 0)?;
    let returns: Vec<f64> = (0..episodes as u64)
        .into_par_iter()
        .map(|i| run_indexed_episode(inst, policy, seed, i).map(|e| e.discounted_return))
        .collect::<Result<_>>()?;
    let n = episodes as f64;
    let mean = pairwise_sum(&returns) / n;
    let sq: Vec<f64> = returns.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0);
    Ok(SimResult {
        mean,
        std_error: (var / n).sqrt(),
        episodes,
        seed,
    })
}

/// Sum with a fixed binary split, independent of thread count.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 64;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

pub const TRACE_HEADER: &str = "t,state_bits,action_ids,ack_ids,reward,beliefs_after";

fn join_ids(ids: &[usize]) -> String {
    ids.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";")
}

pub fn write_trace_csv<W: Write>(trace: &EpisodeTrace, out: W) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidArgument(format!("writing CSV: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER.split(',')).map_err(io)?;
    for s in &trace.slots {
        let bits: String = s.states.iter().map(|&b| if b { '1' } else { '0' }).collect();
        let beliefs: Vec<String> = s.beliefs_after.iter().map(|&x| sig17(x)).collect();
        w.write_record([
            s.t.to_string(),
            bits,
            join_ids(&s.action),
            join_ids(&s.acks),
            sig17(s.reward),
            beliefs.join(";"),
        ])
        .map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidArgument(format!("writing CSV: {e}")))?;
    Ok(())
}

/// Replays the observations of `trace` through the belief update.
pub fn replay_beliefs(inst: &Instance, trace: &EpisodeTrace) -> Result<Vec<BeliefVector>> {
    let mut b = inst.initial().clone();
    let mut out = Vec::with_capacity(trace.slots.len());
    for s in &trace.slots {
        let obs = Observation::new(s.action.clone(), s.acks.clone())?;
        b = b.update(&obs, inst.params(), inst.sensing())?;
        out.push(b.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::InstanceSpec;
    use crate::policy::Myopic;
    use crate::solver::myopic_value;

    fn inst() -> Instance {
        InstanceSpec::new(4, 2, 4, 0.9, 0.3, 0.7)
            .epsilon(0.1)
            .initial(vec![0.6, 0.4, 0.5, 0.35])
            .build()
            .unwrap()
    }

    #[test]
    fn certain_good_channels_always_ack() {
        let inst = InstanceSpec::new(3, 2, 5, 0.8, 0.2, 1.0)
            .initial(vec![1.0; 3])
            .build()
            .unwrap();
        let tr = run_episode(&inst, &mut Myopic::new(2), 4).unwrap();
        let want: f64 = (1..=5).map(|t| 0.8f64.powi(t) * 2.0).sum();
        assert!((tr.discounted_return - want).abs() < 1e-12);
        assert!(tr.slots.iter().all(|s| s.acks == s.action));
    }

    #[test]
    fn traces_are_reproducible_and_consistent() {
        let inst = inst();
        let a = run_episode(&inst, &mut Myopic::new(2), 17).unwrap();
        let b = run_episode(&inst, &mut Myopic::new(2), 17).unwrap();
        assert_eq!(a, b);
        let replay = replay_beliefs(&inst, &a).unwrap();
        for (s, r) in a.slots.iter().zip(&replay) {
            assert_eq!(s.beliefs_after.as_slice(), r.as_slice());
            for &c in &s.acks {
                assert!(s.states[c] && s.action.contains(&c));
            }
        }
        let mut buf = Vec::new();
        write_trace_csv(&a, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), TRACE_HEADER);
        assert_eq!(text.lines().count(), 5);
    }

    #[test]
    fn zero_discount_has_zero_error() {
        let z = inst().with_beta(0.0).unwrap();
        let r = estimate_value(&z, &PolicyKind::Myopic, 100, 1).unwrap();
        assert_eq!((r.mean, r.std_error), (0.0, 0.0));
        assert!(estimate_value(&z, &PolicyKind::Myopic, 1, 1).is_err());
    }

    #[test]
    fn matches_exact_value() {
        let inst = inst();
        let exact = myopic_value(&inst).unwrap().value;
        let r = estimate_value(&inst, &PolicyKind::Myopic, 40_000, 99).unwrap();
        assert!((r.mean - exact).abs() <= 3.0 * r.std_error, "{r:?} vs {exact}");
    }

    #[test]
    fn standard_error_scales() {
        let inst = inst();
        let a = estimate_value(&inst, &PolicyKind::Myopic, 20_000, 5).unwrap();
        let b = estimate_value(&inst, &PolicyKind::Myopic, 40_000, 5).unwrap();
        let ratio = b.std_error / a.std_error;
        assert!((ratio * 2f64.sqrt() - 1.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn realized_reward_has_mean_f() {
        let one = inst().with_horizon(1).unwrap().with_beta(1.0).unwrap();
        let f = one.reward().evaluate(&[0.6, 0.5]);
        let r = estimate_value(&one, &PolicyKind::Myopic, 50_000, 3).unwrap();
        assert!((r.mean - f).abs() <= 3.0 * r.std_error);
    }

    #[test]
    fn episodes_do_not_depend_on_batch() {
        let inst = inst();
        let a = run_indexed_episode(&inst, &PolicyKind::Random, 8, 3).unwrap();
        let b = run_indexed_episode(&inst, &PolicyKind::Random, 8, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(pairwise_sum(&[1.0; 1000]), 1000.0);
    }
}
