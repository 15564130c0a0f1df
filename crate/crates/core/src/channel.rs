//! Two-state Markov channels observed through an imperfect sensor with ACK
//! feedback.
//!
//! Every channel is an i.i.d. copy of the same good(1)/bad(0) chain with
//! transition probabilities `p01 = Pr{bad -> good}` and `p11 = Pr{good -> good}`.
//! A channel that is sensed and truly good returns an ACK with probability
//! `1 - ε`; a bad channel never does. The user's knowledge is summarised by
//! the belief vector `ω`, where `ω_i` is the posterior probability that
//! channel `i` is good in the current slot. After each slot the belief of
//! channel `i` becomes
//!
//! ```text
//! p11          if i was sensed and ACKed
//! τ(φ(ω_i))    if i was sensed and not ACKed
//! τ(ω_i)       if i was not sensed
//! ```
//!
//! with `τ(ω) = ω·p11 + (1-ω)·p01` and `φ(ω) = εω / (εω + 1 - ω)`.

use serde::Serialize;

use crate::error::{Error, Result};

fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidProbability {
            name,
            value,
            range: "[0, 1]",
        })
    }
}

/// Transition probabilities of the (shared) two-state channel chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelParams {
    p01: f64,
    p11: f64,
}

impl ChannelParams {
    /// Builds a positively correlated chain (`p01 < p11`).
    pub fn new(p01: f64, p11: f64) -> Result<Self> {
        check_probability("p01", p01)?;
        check_probability("p11", p11)?;
        if p01 >= p11 {
            return Err(Error::NotPositivelyCorrelated { p01, p11 });
        }
        Ok(Self { p01, p11 })
    }

    pub fn p01(&self) -> f64 {
        self.p01
    }

    pub fn p11(&self) -> f64 {
        self.p11
    }

    /// One-step belief propagation `τ(ω) = ω·p11 + (1-ω)·p01`.
    #[inline]
    pub fn tau(&self, omega: f64) -> f64 {
        omega * self.p11 + (1.0 - omega) * self.p01
    }

    /// Stationary probability of the good state, `p01 / (p01 + 1 - p11)`.
    pub fn stationary(&self) -> Result<f64> {
        let denom = self.p01 + (1.0 - self.p11);
        if denom <= 0.0 {
            return Err(Error::NoStationaryBelief {
                p01: self.p01,
                p11: self.p11,
            });
        }
        Ok(self.p01 / denom)
    }

    /// Largest false-alarm rate for which `φ` maps the band `[p01, p11]`
    /// below `p01`: `p01(1-p11) / (p11(1-p01))`.
    pub fn epsilon_bound(&self) -> f64 {
        self.p01 * (1.0 - self.p11) / (self.p11 * (1.0 - self.p01))
    }

    /// Whether `omega` lies in `[p01, p11]`.
    pub fn in_band(&self, omega: f64) -> bool {
        (self.p01..=self.p11).contains(&omega)
    }
}

/// Sensing error model.
///
/// Only `epsilon` enters the belief and reward formulas: a good channel that
/// is sensed produces an ACK with probability `1 - ε`. `delta` (miss
/// detection) is carried for reporting; under the transmit-only-when-idle
/// protocol a bad channel never ACKs whatever its value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SensingModel {
    epsilon: f64,
    delta: f64,
    #[serde(skip)]
    phi_epsilon_scale: f64,
}

impl SensingModel {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        for (name, value) in [("epsilon", epsilon), ("delta", delta)] {
            if !(value.is_finite() && (0.0..1.0).contains(&value)) {
                return Err(Error::InvalidProbability {
                    name,
                    value,
                    range: "[0, 1)",
                });
            }
        }
        Ok(Self {
            epsilon,
            delta,
            phi_epsilon_scale: 1.0,
        })
    }

    /// Perfect sensing (`ε = δ = 0`).
    pub fn perfect() -> Self {
        Self {
            epsilon: 0.0,
            delta: 0.0,
            phi_epsilon_scale: 1.0,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Fault injection for mutation tests: `φ` uses `scale·ε` while the ACK
    /// probability keeps using `ε`.
    #[doc(hidden)]
    pub fn with_phi_fault(mut self, scale: f64) -> Self {
        self.phi_epsilon_scale = scale;
        self
    }

    #[doc(hidden)]
    pub fn has_fault(&self) -> bool {
        self.phi_epsilon_scale != 1.0
    }

    /// Posterior good-state probability after a sensed channel returns no ACK,
    /// `φ(ω) = εω / (εω + 1 - ω)`.
    ///
    /// At `ε = 0, ω = 1` the ratio is `0/0`; it evaluates to 1 there.
    #[inline]
    pub fn phi(&self, omega: f64) -> f64 {
        let e = self.epsilon * self.phi_epsilon_scale;
        let denom = e * omega + (1.0 - omega);
        if denom == 0.0 {
            return 1.0;
        }
        e * omega / denom
    }

    /// Probability that a sensed channel with belief `omega` returns an ACK.
    #[inline]
    pub fn ack_probability(&self, omega: f64) -> f64 {
        (1.0 - self.epsilon) * omega
    }
}

/// Per-channel probabilities of the good state, indexed by channel id.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct BeliefVector(Vec<f64>);

impl BeliefVector {
    pub fn new(omegas: Vec<f64>) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::InvalidBelief("belief vector is empty".into()));
        }
        if let Some((i, w)) = omegas
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && (0.0..=1.0).contains(*w)))
        {
            return Err(Error::InvalidBelief(format!(
                "entry {i} = {w} is not a probability"
            )));
        }
        Ok(Self(omegas))
    }

    /// All `n` channels at the stationary probability of the good state.
    pub fn stationary(params: &ChannelParams, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidBelief("belief vector is empty".into()));
        }
        Ok(Self(vec![params.stationary()?; n]))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Whether every entry lies in `[p01, p11]`.
    pub fn in_band(&self, params: &ChannelParams) -> bool {
        self.0.iter().all(|&w| params.in_band(w))
    }

    /// Bayes update after observing `obs` at the end of a slot.
    pub fn update(
        &self,
        obs: &Observation,
        params: &ChannelParams,
        sensing: &SensingModel,
    ) -> Result<Self> {
        if let Some(&c) = obs.sensed.iter().find(|&&c| c >= self.len()) {
            return Err(Error::InvalidObservation(format!(
                "channel {c} out of range for {} channels",
                self.len()
            )));
        }
        let mut next: Vec<f64> = self.0.iter().map(|&w| params.tau(w)).collect();
        for &c in &obs.sensed {
            next[c] = if obs.acks.contains(&c) {
                params.p11()
            } else {
                params.tau(sensing.phi(self.0[c]))
            };
        }
        Ok(Self(next))
    }
}

impl std::ops::Index<usize> for BeliefVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// End-of-slot feedback: the sensed set and the subset of it that ACKed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Observation {
    sensed: Vec<usize>,
    acks: Vec<usize>,
}

impl Observation {
    pub fn new(mut sensed: Vec<usize>, mut acks: Vec<usize>) -> Result<Self> {
        sensed.sort_unstable();
        acks.sort_unstable();
        if sensed.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidObservation("duplicate sensed channel".into()));
        }
        if acks.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidObservation("duplicate ACK channel".into()));
        }
        if let Some(a) = acks.iter().find(|a| sensed.binary_search(a).is_err()) {
            return Err(Error::InvalidObservation(format!(
                "channel {a} ACKed but was not sensed"
            )));
        }
        Ok(Self { sensed, acks })
    }

    pub fn sensed(&self) -> &[usize] {
        &self.sensed
    }

    pub fn acks(&self) -> &[usize] {
        &self.acks
    }

    /// Observation for `sensed` where bit `j` of `mask` marks an ACK on the
    /// `j`-th sensed channel.
    pub(crate) fn from_mask(sensed: &[usize], mask: usize) -> Self {
        let acks = sensed
            .iter()
            .enumerate()
            .filter(|(j, _)| mask >> j & 1 == 1)
            .map(|(_, &c)| c)
            .collect();
        Self {
            sensed: sensed.to_vec(),
            acks,
        }
    }
}

/// Every ACK pattern over `action` with its probability under `belief`.
///
/// Outcomes are listed by bitmask: bit `j` set means the `j`-th channel of
/// `action` (ascending id) ACKed.
pub fn enumerate_outcomes(
    belief: &BeliefVector,
    action: &[usize],
    sensing: &SensingModel,
) -> Result<Vec<(Observation, f64)>> {
    if action.is_empty() {
        return Err(Error::InvalidAction("action must sense at least one channel".into()));
    }
    if action.len() >= usize::BITS as usize {
        return Err(Error::InvalidAction("too many sensed channels".into()));
    }
    let mut sensed = action.to_vec();
    sensed.sort_unstable();
    if sensed.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidAction("duplicate channel".into()));
    }
    if let Some(&c) = sensed.iter().find(|&&c| c >= belief.len()) {
        return Err(Error::InvalidAction(format!("channel {c} out of range")));
    }
    Ok((0..1usize << sensed.len())
        .map(|mask| {
            let p = outcome_weight(belief.as_slice(), &sensed, mask, sensing);
            (Observation::from_mask(&sensed, mask), p)
        })
        .collect())
}

/// `Π_{acked} (1-ε)ω · Π_{not acked} [1 - (1-ε)ω]` over the sensed channels.
#[inline]
pub(crate) fn outcome_weight(
    beliefs: &[f64],
    sensed: &[usize],
    mask: usize,
    sensing: &SensingModel,
) -> f64 {
    sensed.iter().enumerate().fold(1.0, |acc, (j, &c)| {
        let a = sensing.ack_probability(beliefs[c]);
        acc * if mask >> j & 1 == 1 { a } else { 1.0 - a }
    })
}

/// Writes the posterior belief vector for ACK pattern `mask` into `out`.
#[inline]
pub(crate) fn write_posterior(
    out: &mut [f64],
    beliefs: &[f64],
    sensed: &[usize],
    mask: usize,
    params: &ChannelParams,
    sensing: &SensingModel,
) {
    for (o, &w) in out.iter_mut().zip(beliefs) {
        *o = params.tau(w);
    }
    for (j, &c) in sensed.iter().enumerate() {
        out[c] = if mask >> j & 1 == 1 {
            params.p11()
        } else {
            params.tau(sensing.phi(beliefs[c]))
        };
    }
}
