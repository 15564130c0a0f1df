use serde::{Deserialize, Serialize};

use crate::channel::{BeliefVector, ChannelParams, SensingModel};
use crate::error::{Error, Result};
use crate::reward::{DeltaDomain, RewardKind, RewardSpec};

/// Initial belief: the stationary distribution on every channel, or an
/// explicit per-channel list.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawInitial", into = "RawInitial")]
pub enum InitialBelief {
    #[default]
    Stationary,
    Explicit(Vec<f64>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawInitial {
    Mode(String),
    List(Vec<f64>),
}

impl TryFrom<RawInitial> for InitialBelief {
    type Error = String;

    fn try_from(raw: RawInitial) -> std::result::Result<Self, String> {
        match raw {
            RawInitial::Mode(m) if m == "stationary" => Ok(InitialBelief::Stationary),
            RawInitial::Mode(m) => Err(format!(
                "unknown initial belief mode `{m}`, expected \"stationary\" or a list"
            )),
            RawInitial::List(v) => Ok(InitialBelief::Explicit(v)),
        }
    }
}

impl From<InitialBelief> for RawInitial {
    fn from(b: InitialBelief) -> Self {
        match b {
            InitialBelief::Stationary => RawInitial::Mode("stationary".into()),
            InitialBelief::Explicit(v) => RawInitial::List(v),
        }
    }
}

fn default_reward() -> RewardKind {
    RewardKind::SumThroughput
}

/// Plain-data description of an [`Instance`]; the serialized form used in
/// configs and failure artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub n: usize,
    pub k: usize,
    pub horizon: usize,
    pub beta: f64,
    pub p01: f64,
    pub p11: f64,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "default_reward")]
    pub reward: RewardKind,
    #[serde(default)]
    pub initial: InitialBelief,
    #[serde(default)]
    pub delta_domain: DeltaDomain,
}

impl InstanceSpec {
    /// Sum-throughput, perfect sensing, stationary start.
    pub fn new(n: usize, k: usize, horizon: usize, beta: f64, p01: f64, p11: f64) -> Self {
        Self {
            n,
            k,
            horizon,
            beta,
            p01,
            p11,
            epsilon: 0.0,
            delta: 0.0,
            reward: RewardKind::SumThroughput,
            initial: InitialBelief::Stationary,
            delta_domain: DeltaDomain::Unit,
        }
    }

    pub fn epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn reward(mut self, reward: RewardKind) -> Self {
        self.reward = reward;
        self
    }

    pub fn initial(mut self, omegas: Vec<f64>) -> Self {
        self.initial = InitialBelief::Explicit(omegas);
        self
    }

    pub fn delta_domain(mut self, domain: DeltaDomain) -> Self {
        self.delta_domain = domain;
        self
    }

    /// Validates every field and builds the instance with a built-in reward.
    pub fn build(&self) -> Result<Instance> {
        let sensing = self.sensing()?;
        let reward = match self.reward {
            RewardKind::Custom => {
                return Err(Error::InvalidInstance {
                    field: "reward",
                    reason: "custom rewards cannot be built from a spec".into(),
                })
            }
            kind => RewardSpec::builtin(kind, self.k.max(1), &sensing)?,
        };
        self.build_with_reward(reward)
    }

    /// Like [`build`](Self::build) but with a caller-supplied reward of
    /// arity `k`.
    pub fn build_with_reward(&self, reward: RewardSpec) -> Result<Instance> {
        if self.n == 0 {
            return Err(invalid("n", "need at least one channel"));
        }
        if self.k == 0 || self.k > self.n {
            return Err(invalid("k", format!("must lie in 1..={}, got {}", self.n, self.k)));
        }
        if self.horizon == 0 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(invalid("beta", format!("must lie in [0, 1], got {}", self.beta)));
        }
        if reward.arity() != self.k {
            return Err(invalid(
                "reward",
                format!("arity {} does not match k = {}", reward.arity(), self.k),
            ));
        }
        let params = ChannelParams::new(self.p01, self.p11)?;
        let sensing = self.sensing()?;
        let initial = match &self.initial {
            InitialBelief::Stationary => BeliefVector::stationary(&params, self.n)?,
            InitialBelief::Explicit(v) => {
                if v.len() != self.n {
                    return Err(invalid(
                        "initial",
                        format!("expected {} beliefs, got {}", self.n, v.len()),
                    ));
                }
                BeliefVector::new(v.clone()).map_err(|e| invalid("initial", e.to_string()))?
            }
        };
        Ok(Instance {
            k: self.k,
            horizon: self.horizon,
            beta: self.beta,
            params,
            sensing,
            reward,
            initial,
            delta_domain: self.delta_domain,
        })
    }

    fn sensing(&self) -> Result<SensingModel> {
        SensingModel::new(self.epsilon, self.delta)
    }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidInstance {
        field,
        reason: reason.into(),
    }
}

/// A validated problem: `N` channels, sensing budget `k`, horizon `T`,
/// discount `β`, channel and sensing models, reward `F` and `Ω(1)`.
#[derive(Debug, Clone)]
pub struct Instance {
    k: usize,
    horizon: usize,
    beta: f64,
    params: ChannelParams,
    sensing: SensingModel,
    reward: RewardSpec,
    initial: BeliefVector,
    delta_domain: DeltaDomain,
}

impl Instance {
    pub fn n(&self) -> usize {
        self.initial.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn sensing(&self) -> &SensingModel {
        &self.sensing
    }

    pub fn reward(&self) -> &RewardSpec {
        &self.reward
    }

    pub fn initial(&self) -> &BeliefVector {
        &self.initial
    }

    pub fn delta_domain(&self) -> DeltaDomain {
        self.delta_domain
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&beta) {
            return Err(invalid("beta", format!("must lie in [0, 1], got {beta}")));
        }
        Ok(Self { beta, ..self.clone() })
    }

    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(invalid("horizon", "must be at least 1"));
        }
        Ok(Self {
            horizon,
            ..self.clone()
        })
    }

    pub fn with_initial(&self, initial: BeliefVector) -> Result<Self> {
        if initial.len() < self.k {
            return Err(invalid("initial", format!("need at least k = {} channels", self.k)));
        }
        Ok(Self {
            initial,
            ..self.clone()
        })
    }

    pub fn with_sensing(&self, sensing: SensingModel) -> Self {
        Self {
            sensing,
            ..self.clone()
        }
    }

    pub fn to_spec(&self) -> InstanceSpec {
        InstanceSpec {
            n: self.n(),
            k: self.k,
            horizon: self.horizon,
            beta: self.beta,
            p01: self.params.p01(),
            p11: self.params.p11(),
            epsilon: self.sensing.epsilon(),
            delta: self.sensing.delta(),
            reward: self.reward.kind(),
            initial: InitialBelief::Explicit(self.initial.as_slice().to_vec()),
            delta_domain: self.delta_domain,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> InstanceSpec {
        InstanceSpec::new(3, 1, 3, 0.5, 0.3, 0.7).epsilon(0.05)
    }

    #[test]
    fn builds_stationary() {
        let inst = base().build().unwrap();
        assert_eq!(inst.n(), 3);
        assert!(inst.initial().as_slice().iter().all(|&w| (w - 0.5).abs() < 1e-15));
    }

    #[test]
    fn field_addressed_errors() {
        let cases: Vec<(InstanceSpec, &str)> = vec![
            (InstanceSpec { k: 4, ..base() }, "k"),
            (InstanceSpec { k: 0, ..base() }, "k"),
            (InstanceSpec { horizon: 0, ..base() }, "horizon"),
            (InstanceSpec { beta: 1.5, ..base() }, "beta"),
            (base().initial(vec![0.5, 0.5]), "initial"),
            (base().initial(vec![0.5, 0.5, 1.5]), "initial"),
            (InstanceSpec { n: 0, ..base() }, "n"),
            (base().reward(RewardKind::Custom), "reward"),
        ];
        for (spec, field) in cases {
            match spec.build() {
                Err(Error::InvalidInstance { field: f, .. }) => assert_eq!(f, field),
                other => panic!("{field}: {other:?}"),
            }
        }
        assert!(matches!(
            InstanceSpec { p01: 0.8, ..base() }.build(),
            Err(Error::NotPositivelyCorrelated { .. })
        ));
        assert!(matches!(
            InstanceSpec { epsilon: 1.0, ..base() }.build(),
            Err(Error::InvalidProbability { name: "epsilon", .. })
        ));
    }

    #[test]
    fn spec_roundtrip() {
        let inst = base().initial(vec![0.6, 0.4, 0.5]).build().unwrap();
        let spec = inst.to_spec();
        let json = serde_json::to_string(&spec).unwrap();
        let back: InstanceSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        let rebuilt = back.build().unwrap();
        assert_eq!(rebuilt.initial(), inst.initial());
    }

    #[test]
    fn initial_modes_parse() {
        let s: InstanceSpec = serde_json::from_str(
            r#"{"n":2,"k":1,"horizon":2,"beta":0.9,"p01":0.2,"p11":0.8,"initial":"stationary"}"#,
        )
        .unwrap();
        assert_eq!(s.initial, InitialBelief::Stationary);
        assert_eq!(s.reward, RewardKind::SumThroughput);
        let bad = serde_json::from_str::<InstanceSpec>(
            r#"{"n":2,"k":1,"horizon":2,"beta":0.9,"p01":0.2,"p11":0.8,"initial":"uniform"}"#,
        );
        assert!(bad.is_err());
        let unknown = serde_json::from_str::<InstanceSpec>(
            r#"{"n":2,"k":1,"horizon":2,"beta":0.9,"p01":0.2,"p11":0.8,"gamma":1}"#,
        );
        assert!(unknown.is_err());
    }
}
