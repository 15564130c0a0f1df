//! Sensing policies: maps from the belief vector to a set of `k` channels.

use std::fmt;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::BeliefVector;
use crate::error::{Error, Result};

/// A sorted, duplicate-free set of channel ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct Action(Vec<usize>);

impl Action {
    /// Validates `channels` against `n` channels and sensing budget `k`.
    pub fn new(mut channels: Vec<usize>, n: usize, k: usize) -> Result<Self> {
        channels.sort_unstable();
        if channels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidAction(format!("duplicate channel in {channels:?}")));
        }
        if let Some(&c) = channels.iter().find(|&&c| c >= n) {
            return Err(Error::InvalidAction(format!("channel {c} out of range for N = {n}")));
        }
        if channels.len() != k {
            return Err(Error::InvalidAction(format!(
                "expected {k} channels, got {}",
                channels.len()
            )));
        }
        Ok(Self(channels))
    }

    pub fn channels(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "{{{}}}", ids.join(","))
    }
}

pub trait Policy {
    fn name(&self) -> &str;

    /// Channels to sense at slot `t` (1-based).
    fn act(&mut self, belief: &BeliefVector, t: usize) -> Action;

    /// Whether `act` depends only on `(belief, t)`.
    fn is_deterministic(&self) -> bool {
        true
    }
}

/// Indices of the `k` largest beliefs; ties go to the smaller index.
pub fn myopic_action(belief: &BeliefVector, k: usize) -> Result<Action> {
    let n = belief.len();
    if k == 0 || k > n {
        return Err(Error::InvalidAction(format!("k = {k} must lie in 1..={n}")));
    }
    Ok(Action(top_k(belief.as_slice(), k)))
}

pub(crate) fn top_k(beliefs: &[f64], k: usize) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..beliefs.len()).collect();
    ids.sort_by(|&a, &b| beliefs[b].total_cmp(&beliefs[a]).then(a.cmp(&b)));
    ids.truncate(k);
    ids.sort_unstable();
    ids
}

#[derive(Debug, Clone)]
pub struct Myopic {
    k: usize,
}

impl Myopic {
    pub fn new(k: usize) -> Self {
        Self { k }
    }
}

impl Policy for Myopic {
    fn name(&self) -> &str {
        "myopic"
    }

    fn act(&mut self, belief: &BeliefVector, _t: usize) -> Action {
        Action(top_k(belief.as_slice(), self.k))
    }
}

/// Uniform k-subset per call.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    k: usize,
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(k: usize, seed: u64) -> Self {
        Self::from_rng(k, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn from_rng(k: usize, rng: ChaCha8Rng) -> Self {
        Self { k, rng }
    }
}

impl Policy for RandomPolicy {
    fn name(&self) -> &str {
        "random"
    }

    fn act(&mut self, belief: &BeliefVector, _t: usize) -> Action {
        let mut ids = sample(&mut self.rng, belief.len(), self.k).into_vec();
        ids.sort_unstable();
        Action(ids)
    }

    fn is_deterministic(&self) -> bool {
        false
    }
}

pub fn random_policy(k: usize, seed: u64) -> RandomPolicy {
    RandomPolicy::new(k, seed)
}

#[derive(Debug, Clone)]
pub struct FixedPolicy {
    action: Action,
}

impl FixedPolicy {
    pub fn new(action: Action) -> Self {
        Self { action }
    }
}

impl Policy for FixedPolicy {
    fn name(&self) -> &str {
        "fixed"
    }

    fn act(&mut self, _belief: &BeliefVector, _t: usize) -> Action {
        self.action.clone()
    }
}

pub fn fixed_policy(channels: Vec<usize>, n: usize, k: usize) -> Result<FixedPolicy> {
    Ok(FixedPolicy::new(Action::new(channels, n, k)?))
}

/// Policy selection by name, as it appears in configs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Myopic,
    Random,
    Fixed(Vec<usize>),
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Myopic => "myopic",
            PolicyKind::Random => "random",
            PolicyKind::Fixed(_) => "fixed",
        }
    }

    pub fn is_deterministic(&self) -> bool {
        !matches!(self, PolicyKind::Random)
    }

    /// Instantiates the policy for `n` channels with budget `k`. `seed` only
    /// matters for the random policy.
    pub fn build(&self, n: usize, k: usize, seed: u64) -> Result<Box<dyn Policy + Send>> {
        if k == 0 || k > n {
            return Err(Error::InvalidAction(format!("k = {k} must lie in 1..={n}")));
        }
        Ok(match self {
            PolicyKind::Myopic => Box::new(Myopic::new(k)),
            PolicyKind::Random => Box::new(RandomPolicy::new(k, seed)),
            PolicyKind::Fixed(ids) => Box::new(fixed_policy(ids.clone(), n, k)?),
        })
    }
}
