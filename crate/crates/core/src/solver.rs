//! Exact finite-horizon values by expanding the ACK-outcome tree.
//!
//! Two discount conventions appear here. `recursion_value` is `V_1`, the
//! recursion with the current-slot reward undiscounted and a factor `β` per
//! step. `value` is the total `Σ_{t=1..T} β^t E[R_t]`, which equals
//! `β · recursion_value`. [`auxiliary_value`] uses the recursion convention.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::channel::{outcome_weight, write_posterior};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::policy::{Action, Myopic, Policy};

pub const DEFAULT_BUDGET: f64 = 1e8;

const MEMO_QUANTUM: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Upper limit on `(C(N,k)·2^k)^T`.
    pub budget: f64,
    /// Share values between belief nodes that agree after rounding to 1e-9.
    pub memo: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            memo: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueReport {
    /// `Σ_{t=1..T} β^t E[R_t]`.
    pub value: f64,
    /// `V_1(Ω(1))` with the slot-1 reward undiscounted.
    pub recursion_value: f64,
    /// `β^t E[R_t]` per slot, when available.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_slot: Option<Vec<f64>>,
    pub nodes_expanded: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalReport {
    pub value: f64,
    pub recursion_value: f64,
    pub first_action: Action,
    pub nodes_expanded: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub myopic: ValueReport,
    pub optimal: OptimalReport,
    /// `optimal.value - myopic.value`.
    pub gap: f64,
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `(C(N,k)·2^k)^T`, the number of expansions the exact solver budgets for.
pub fn expansion_cost(n: usize, k: usize, horizon: usize) -> f64 {
    (binomial(n, k) * 2f64.powi(k as i32)).powi(horizon as i32)
}

fn check_budget(cost: f64, bound: &'static str, budget: f64) -> Result<()> {
    if cost > budget {
        return Err(Error::BudgetExceeded {
            bound,
            required: cost,
            limit: budget,
        });
    }
    Ok(())
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub(crate) fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < n - k + i) else {
            return out;
        };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// One posterior buffer and one reward-argument buffer per tree depth.
struct Level {
    post: Vec<f64>,
    args: Vec<f64>,
}

fn levels(n: usize, k: usize, depth: usize) -> Vec<Level> {
    (0..depth)
        .map(|_| Level {
            post: vec![0.0; n],
            args: Vec::with_capacity(k),
        })
        .collect()
}

/// Exact value of a deterministic policy from `inst.initial()`.
pub fn evaluate_policy(inst: &Instance, policy: &mut dyn Policy) -> Result<ValueReport> {
    evaluate_policy_with(inst, policy, &SolverOptions::default())
}

pub fn evaluate_policy_with(
    inst: &Instance,
    policy: &mut dyn Policy,
    opts: &SolverOptions,
) -> Result<ValueReport> {
    if !policy.is_deterministic() {
        return Err(Error::StochasticPolicy(policy.name().to_string()));
    }
    let t = inst.horizon();
    check_budget(
        2f64.powi(inst.k() as i32).powi(t as i32 - 1),
        "(2^k)^(T-1)",
        opts.budget,
    )?;
    let first = policy.act(inst.initial(), 1);
    if first.len() != inst.k() || first.channels().iter().any(|&c| c >= inst.n()) {
        return Err(Error::InvalidAction(format!(
            "policy `{}` returned {first} for N = {}, k = {}",
            policy.name(),
            inst.n(),
            inst.k()
        )));
    }
    let mut eval = PolicyEval {
        inst,
        policy,
        per_slot: vec![0.0; t],
        nodes: 0,
    };
    let mut lv = levels(inst.n(), inst.k(), t);
    let v = eval.node(inst.initial().as_slice(), 1, 1.0, &mut lv, Some(first))?;
    let beta = inst.beta();
    let per_slot: Vec<f64> = eval
        .per_slot
        .iter()
        .enumerate()
        .map(|(i, r)| beta.powi(i as i32 + 1) * r)
        .collect();
    Ok(ValueReport {
        value: beta * v,
        recursion_value: v,
        per_slot: Some(per_slot),
        nodes_expanded: eval.nodes,
    })
}

struct PolicyEval<'a> {
    inst: &'a Instance,
    policy: &'a mut dyn Policy,
    per_slot: Vec<f64>,
    nodes: u64,
}

impl PolicyEval<'_> {
    fn node(
        &mut self,
        beliefs: &[f64],
        t: usize,
        reach: f64,
        lv: &mut [Level],
        given: Option<Action>,
    ) -> Result<f64> {
        self.nodes += 1;
        let inst = self.inst;
        let action = match given {
            Some(a) => a,
            None => {
                let b = crate::channel::BeliefVector::new(beliefs.to_vec())?;
                let a = self.policy.act(&b, t);
                if a.len() != inst.k() || a.channels().iter().any(|&c| c >= inst.n()) {
                    return Err(Error::InvalidAction(format!("policy returned {a}")));
                }
                a
            }
        };
        let sensed = action.channels();
        let (mine, rest) = lv.split_first_mut().expect("depth");
        let r = inst.reward().evaluate_at(beliefs, sensed, &mut mine.args);
        self.per_slot[t - 1] += reach * r;
        if t == inst.horizon() {
            return Ok(r);
        }
        let mut future = 0.0;
        for mask in 0..1usize << sensed.len() {
            let w = outcome_weight(beliefs, sensed, mask, inst.sensing());
            if w == 0.0 {
                continue;
            }
            write_posterior(&mut mine.post, beliefs, sensed, mask, inst.params(), inst.sensing());
            let post = std::mem::take(&mut mine.post);
            let v = self.node(&post, t + 1, reach * w, rest, None);
            mine.post = post;
            future += w * v?;
        }
        Ok(r + inst.beta() * future)
    }
}

/// Myopic value; shorthand for [`evaluate_policy`] with [`Myopic`].
pub fn myopic_value(inst: &Instance) -> Result<ValueReport> {
    evaluate_policy(inst, &mut Myopic::new(inst.k()))
}

/// Bellman backward induction over every `k`-subset at every reachable
/// belief node.
pub fn optimal_value(inst: &Instance) -> Result<OptimalReport> {
    optimal_value_with(inst, &SolverOptions::default())
}

pub fn optimal_value_with(inst: &Instance, opts: &SolverOptions) -> Result<OptimalReport> {
    let (n, k, t) = (inst.n(), inst.k(), inst.horizon());
    check_budget(expansion_cost(n, k, t), "(C(N,k)*2^k)^T", opts.budget)?;
    let subsets = k_subsets(n, k);
    let dp = Dp {
        inst,
        subsets: &subsets,
    };
    let beliefs = inst.initial().as_slice();

    // each root action is solved independently, then combined in index order
    let q: Vec<(f64, u64)> = subsets
        .par_iter()
        .map(|a| {
            let mut lv = levels(n, k, t);
            let mut memo = opts.memo.then(HashMap::new);
            let mut nodes = 0;
            let v = dp.q(beliefs, a, t, &mut lv, &mut memo, &mut nodes);
            (v, nodes)
        })
        .collect();

    let mut best = 0;
    for (i, &(v, _)) in q.iter().enumerate() {
        if v > q[best].0 {
            best = i;
        }
    }
    let v = q[best].0;
    Ok(OptimalReport {
        value: inst.beta() * v,
        recursion_value: v,
        first_action: Action::new(subsets[best].clone(), n, k)?,
        nodes_expanded: 1 + q.iter().map(|&(_, c)| c).sum::<u64>(),
    })
}

type Memo = Option<HashMap<(usize, Vec<i64>), f64>>;

struct Dp<'a> {
    inst: &'a Instance,
    subsets: &'a [Vec<usize>],
}

impl Dp<'_> {
    /// `V` with `remaining` slots left, including the current one.
    fn v(
        &self,
        beliefs: &[f64],
        remaining: usize,
        lv: &mut [Level],
        memo: &mut Memo,
        nodes: &mut u64,
    ) -> f64 {
        let key = memo.as_ref().map(|_| {
            (
                remaining,
                beliefs
                    .iter()
                    .map(|w| (w / MEMO_QUANTUM).round() as i64)
                    .collect::<Vec<_>>(),
            )
        });
        if let (Some(m), Some(key)) = (memo.as_ref(), key.as_ref()) {
            if let Some(&v) = m.get(key) {
                return v;
            }
        }
        *nodes += 1;
        let mut best = f64::NEG_INFINITY;
        for a in self.subsets {
            let q = self.q(beliefs, a, remaining, lv, memo, nodes);
            if q > best {
                best = q;
            }
        }
        if let (Some(m), Some(key)) = (memo.as_mut(), key) {
            m.insert(key, best);
        }
        best
    }

    /// Value of sensing `a` now and acting optimally afterwards.
    fn q(
        &self,
        beliefs: &[f64],
        a: &[usize],
        remaining: usize,
        lv: &mut [Level],
        memo: &mut Memo,
        nodes: &mut u64,
    ) -> f64 {
        let inst = self.inst;
        let (mine, rest) = lv.split_first_mut().expect("depth");
        let r = inst.reward().evaluate_at(beliefs, a, &mut mine.args);
        if remaining == 1 {
            return r;
        }
        let mut future = 0.0;
        for mask in 0..1usize << a.len() {
            let w = outcome_weight(beliefs, a, mask, inst.sensing());
            if w == 0.0 {
                continue;
            }
            write_posterior(&mut mine.post, beliefs, a, mask, inst.params(), inst.sensing());
            let post = std::mem::take(&mut mine.post);
            future += w * self.v(&post, remaining - 1, rest, memo, nodes);
            mine.post = post;
        }
        r + inst.beta() * future
    }
}

/// Myopic and optimal values plus their difference.
pub fn optimality_gap(inst: &Instance) -> Result<GapReport> {
    optimality_gap_with(inst, &SolverOptions::default())
}

pub fn optimality_gap_with(inst: &Instance, opts: &SolverOptions) -> Result<GapReport> {
    let optimal = optimal_value_with(inst, opts)?;
    let myopic = evaluate_policy_with(inst, &mut Myopic::new(inst.k()), opts)?;
    Ok(GapReport {
        gap: optimal.value - myopic.value,
        myopic,
        optimal,
    })
}

/// `W_1` for `inst.initial()` listed in `ordering`.
pub fn auxiliary_value(inst: &Instance, ordering: &[usize]) -> Result<f64> {
    let n = inst.n();
    let mut seen = vec![false; n];
    if ordering.len() != n {
        return Err(Error::InvalidOrdering(format!(
            "expected {n} entries, got {}",
            ordering.len()
        )));
    }
    for &c in ordering {
        if c >= n || seen[c] {
            return Err(Error::InvalidOrdering(format!(
                "{ordering:?} is not a permutation of 0..{n}"
            )));
        }
        seen[c] = true;
    }
    let b = inst.initial();
    let ordered: Vec<f64> = ordering.iter().map(|&c| b[c]).collect();
    Ok(w_value(inst, &ordered, inst.horizon()))
}

/// `W_t` on a position-ordered belief list with `residual = T - t + 1` slots
/// left. Only the model, reward and `β` of `inst` are used.
///
/// The first `k` positions are sensed. On ACK pattern `E` the next list is
/// the ACKed channels at `p11`, then the unsensed positions at `τ(ω)`, then
/// the sensed-but-silent channels at `τ(φ(ω))`, each group keeping its order.
pub fn w_value(inst: &Instance, ordered: &[f64], residual: usize) -> f64 {
    let n = ordered.len();
    let k = inst.k();
    assert!(k <= n && residual >= 1, "need k <= N and residual >= 1");
    let mut lv = levels(n, k, residual);
    w_node(inst, ordered, residual, &mut lv)
}

fn w_node(inst: &Instance, ordered: &[f64], residual: usize, lv: &mut [Level]) -> f64 {
    let k = inst.k();
    let (mine, rest) = lv.split_first_mut().expect("depth");
    let r = inst.reward().evaluate(&ordered[..k]);
    if residual == 1 {
        return r;
    }
    let (params, sensing) = (inst.params(), inst.sensing());
    let mut future = 0.0;
    for mask in 0..1usize << k {
        let w = (0..k).fold(1.0, |acc, j| {
            let a = sensing.ack_probability(ordered[j]);
            acc * if mask >> j & 1 == 1 { a } else { 1.0 - a }
        });
        let next = &mut mine.post;
        next.clear();
        next.extend((0..k).filter(|j| mask >> j & 1 == 1).map(|_| params.p11()));
        next.extend(ordered[k..].iter().map(|&x| params.tau(x)));
        next.extend(
            (0..k)
                .filter(|j| mask >> j & 1 == 0)
                .map(|j| params.tau(sensing.phi(ordered[j]))),
        );
        let next = std::mem::take(&mut mine.post);
        future += w * w_node(inst, &next, residual - 1, rest);
        mine.post = next;
    }
    r + inst.beta() * future
}
