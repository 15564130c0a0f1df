//! TOML run configuration.
//!
//! ```toml
//! [instance]
//! n = 4
//! k = 2
//! horizon = 4
//! beta = 0.9
//! p01 = 0.3
//! p11 = 0.7
//! epsilon = 0.1            # default 0
//! delta = 0.0              # default 0
//! reward = "any-success"   # default "sum-throughput"
//! initial = "stationary"   # or an explicit list
//! delta_domain = "unit"    # or "band"
//!
//! [policy]
//! kind = "myopic"          # "random" | "fixed"
//! channels = [0, 1]        # fixed only
//!
//! [simulate]
//! episodes = 100000
//! seed = 1
//! trace = "trace.csv"
//!
//! [verify]
//! trials = 10000
//! seed = 1
//!
//! [sweep]
//! epsilon = { start = 0.0, stop = 0.2, steps = 11 }
//! beta = [0.5, 0.9, 1.0]
//! reward = ["sum-throughput"]
//! budget = 1e12
//! ```
//!
//! Command-line flags override file values; file values override defaults.
//! Sweep axes that are absent fall back to the single `[instance]` value.

use std::path::PathBuf;

use rmab_core::theorem::{SweepGrid, SweepInitial};
use rmab_core::{DeltaDomain, InitialBelief, InstanceSpec, PolicyKind, RewardKind};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub instance: InstanceSection,
    #[serde(default)]
    pub policy: PolicySection,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSection {
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub horizon: Option<usize>,
    pub beta: Option<f64>,
    pub p01: Option<f64>,
    pub p11: Option<f64>,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub reward: Option<RewardKind>,
    pub initial: Option<InitialBelief>,
    pub delta_domain: Option<DeltaDomain>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyName {
    #[default]
    Myopic,
    Random,
    Fixed,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySection {
    pub kind: Option<PolicyName>,
    pub channels: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub episodes: Option<usize>,
    pub seed: Option<u64>,
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub trials: Option<usize>,
    pub seed: Option<u64>,
}

/// A sweep axis: one value, a list, or an evenly spaced range.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Axis<T> {
    One(T),
    List(Vec<T>),
    Range { start: f64, stop: f64, steps: usize },
}

impl Axis<f64> {
    pub fn values(&self, field: &str) -> Result<Vec<f64>, CliError> {
        match self {
            Axis::One(x) => Ok(vec![*x]),
            Axis::List(v) => Ok(v.clone()),
            Axis::Range { start, stop, steps } => match steps {
                0 => Err(CliError::Config(format!("sweep.{field}: steps must be at least 1"))),
                1 => Ok(vec![*start]),
                &s => Ok((0..s)
                    .map(|i| start + (stop - start) * i as f64 / (s - 1) as f64)
                    .collect()),
            },
        }
    }
}

impl<T: Clone> Axis<T> {
    fn discrete(&self, field: &str) -> Result<Vec<T>, CliError> {
        match self {
            Axis::One(x) => Ok(vec![x.clone()]),
            Axis::List(v) => Ok(v.clone()),
            Axis::Range { .. } => Err(CliError::Config(format!(
                "sweep.{field}: ranges are only allowed for real-valued axes"
            ))),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub p01: Option<Axis<f64>>,
    pub p11: Option<Axis<f64>>,
    pub epsilon: Option<Axis<f64>>,
    pub beta: Option<Axis<f64>>,
    pub n: Option<Axis<usize>>,
    pub k: Option<Axis<usize>>,
    pub horizon: Option<Axis<usize>>,
    pub reward: Option<Axis<RewardKind>>,
    pub delta_domain: Option<DeltaDomain>,
    pub initial: Option<SweepInitial>,
    pub budget: Option<f64>,
}

fn need<T>(v: Option<T>, name: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("instance.{name}: missing")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn instance_spec(&self) -> Result<InstanceSpec, CliError> {
        let s = &self.instance;
        Ok(InstanceSpec {
            n: need(s.n, "n")?,
            k: need(s.k, "k")?,
            horizon: need(s.horizon, "horizon")?,
            beta: need(s.beta, "beta")?,
            p01: need(s.p01, "p01")?,
            p11: need(s.p11, "p11")?,
            epsilon: s.epsilon.unwrap_or(0.0),
            delta: s.delta.unwrap_or(0.0),
            reward: s.reward.unwrap_or(RewardKind::SumThroughput),
            initial: s.initial.clone().unwrap_or_default(),
            delta_domain: s.delta_domain.unwrap_or_default(),
        })
    }

    pub fn policy_kind(&self) -> Result<PolicyKind, CliError> {
        match self.policy.kind.unwrap_or_default() {
            PolicyName::Myopic => Ok(PolicyKind::Myopic),
            PolicyName::Random => Ok(PolicyKind::Random),
            PolicyName::Fixed => self
                .policy
                .channels
                .clone()
                .map(PolicyKind::Fixed)
                .ok_or_else(|| CliError::Config("policy.channels: required for a fixed policy".into())),
        }
    }

    pub fn sweep_grid(&self) -> Result<SweepGrid, CliError> {
        let s = &self.sweep;
        let i = &self.instance;
        let real = |axis: &Option<Axis<f64>>, fallback: Option<f64>, name: &str| match axis {
            Some(a) => a.values(name),
            None => fallback
                .map(|x| vec![x])
                .ok_or_else(|| CliError::Config(format!("sweep.{name}: missing (no instance.{name} either)"))),
        };
        let count = |axis: &Option<Axis<usize>>, fallback: Option<usize>, name: &str| match axis {
            Some(a) => a.discrete(name),
            None => fallback
                .map(|x| vec![x])
                .ok_or_else(|| CliError::Config(format!("sweep.{name}: missing (no instance.{name} either)"))),
        };
        let reward = match &s.reward {
            Some(a) => a.discrete("reward")?,
            None => vec![i.reward.unwrap_or(RewardKind::SumThroughput)],
        };
        Ok(SweepGrid {
            p01: real(&s.p01, i.p01, "p01")?,
            p11: real(&s.p11, i.p11, "p11")?,
            epsilon: real(&s.epsilon, Some(i.epsilon.unwrap_or(0.0)), "epsilon")?,
            beta: real(&s.beta, i.beta, "beta")?,
            n: count(&s.n, i.n, "n")?,
            k: count(&s.k, i.k, "k")?,
            horizon: count(&s.horizon, i.horizon, "horizon")?,
            reward,
            delta_domain: s.delta_domain.or(i.delta_domain).unwrap_or_default(),
            initial: s.initial.unwrap_or_default(),
        })
    }
}
