//! Sufficient conditions for myopic optimality, numerical checks of the
//! supporting lemmas on `W`, and a classifying parameter sweep.
//!
//! The conditions are
//!
//! ```text
//! F regular
//! ε < p01(1-p11) / (p11(1-p01))                                   (strict)
//! β ≤ Δmin / (Δmax·[(1-ε)(1-p01) + ε(p11-p01)/(1-(1-ε)(p11-p01))])  (non-strict)
//! p01 ≤ ω_i(1) ≤ p11 for every channel
//! ```
//!
//! Verifiers sample beliefs uniformly from `[p01, p11]^N` and the residual
//! horizon `h = T - t + 1` from `1..=T`.

use std::io::Write;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, SensingModel};
use crate::error::{Error, Result};
use crate::fmt::sig17;
use crate::instance::{InitialBelief, Instance, InstanceSpec};
use crate::reward::{check_regularity, delta_bounds, DeltaDomain, DeltaMethod, RewardKind};
use crate::solver::{expansion_cost, optimality_gap, w_value, GapReport, DEFAULT_BUDGET};

/// Largest gap still counted as "myopic is optimal".
pub const GAP_TOL: f64 = 1e-9;
/// Smallest gap reported as a counterexample.
pub const COUNTEREXAMPLE_GAP: f64 = 1e-6;
/// Slack on lemma inequalities and on identity residuals.
pub const LEMMA_TOL: f64 = 1e-9;

const REGULARITY_SAMPLES: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub f_regular: bool,
    pub epsilon: f64,
    pub epsilon_bound: f64,
    pub epsilon_ok: bool,
    pub beta: f64,
    pub beta_bound: f64,
    pub beta_ok: bool,
    pub beliefs_in_band: bool,
    pub delta_min: f64,
    pub delta_max: f64,
    pub delta_domain: DeltaDomain,
    pub delta_method: DeltaMethod,
    pub all_ok: bool,
}

impl ConditionReport {
    /// Conditions on `F`, `ε` and `β`, ignoring where the beliefs start.
    pub fn model_ok(&self) -> bool {
        self.f_regular && self.epsilon_ok && self.beta_ok
    }
}

/// `(1-ε)(1-p01) + ε(p11-p01)/(1-(1-ε)(p11-p01))`.
pub fn beta_bracket(params: &ChannelParams, epsilon: f64) -> f64 {
    let (p01, p11) = (params.p01(), params.p11());
    let d = p11 - p01;
    (1.0 - epsilon) * (1.0 - p01) + epsilon * d / (1.0 - (1.0 - epsilon) * d)
}

pub fn beta_bound(delta_min: f64, delta_max: f64, params: &ChannelParams, epsilon: f64) -> f64 {
    if delta_max == 0.0 {
        return f64::INFINITY;
    }
    delta_min / (delta_max * beta_bracket(params, epsilon))
}

pub fn check_conditions(inst: &Instance) -> Result<ConditionReport> {
    let reward = inst.reward();
    let f_regular = reward.is_builtin() || check_regularity(reward, REGULARITY_SAMPLES, 0).passed;
    let params = inst.params();
    let eps = inst.sensing().epsilon();
    let delta = delta_bounds(reward, params, inst.delta_domain())?;
    let epsilon_bound = params.epsilon_bound();
    let beta_bound = beta_bound(delta.delta_min, delta.delta_max, params, eps);
    let epsilon_ok = eps < epsilon_bound;
    let beta_ok = inst.beta() <= beta_bound;
    let beliefs_in_band = inst.initial().in_band(params);
    Ok(ConditionReport {
        f_regular,
        epsilon: eps,
        epsilon_bound,
        epsilon_ok,
        beta: inst.beta(),
        beta_bound,
        beta_ok,
        beliefs_in_band,
        delta_min: delta.delta_min,
        delta_max: delta.delta_max,
        delta_domain: inst.delta_domain(),
        delta_method: delta.method,
        all_ok: f_regular && epsilon_ok && beta_ok && beliefs_in_band,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    /// `lhs <= rhs`; the margin is `rhs - lhs`.
    Inequality,
    /// `lhs == rhs`; the residual is `|lhs - rhs|`.
    Identity,
}

/// A failed check, with enough context to replay it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub detail: String,
    pub beliefs: Vec<f64>,
    pub residual_horizon: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub instance: InstanceSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaReport {
    pub name: &'static str,
    pub kind: CheckKind,
    pub trials: usize,
    pub checks: usize,
    /// Smallest margin (inequalities) or largest residual (identities);
    /// `None` when nothing was checked.
    pub worst: Option<f64>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violation: Option<Violation>,
}

struct Tally<'a> {
    name: &'static str,
    kind: CheckKind,
    trials: usize,
    checks: usize,
    worst: Option<f64>,
    violation: Option<Violation>,
    inst: &'a Instance,
}

impl<'a> Tally<'a> {
    fn new(name: &'static str, kind: CheckKind, trials: usize, inst: &'a Instance) -> Self {
        Self {
            name,
            kind,
            trials,
            checks: 0,
            worst: None,
            violation: None,
            inst,
        }
    }

    /// Records `lhs <= rhs` or `lhs == rhs` depending on the kind.
    fn record(&mut self, lhs: f64, rhs: f64, beliefs: &[f64], h: usize, detail: impl FnOnce() -> String) {
        self.checks += 1;
        let (score, bad) = match self.kind {
            CheckKind::Inequality => {
                let m = rhs - lhs;
                (m, m.is_nan() || m < -LEMMA_TOL)
            }
            CheckKind::Identity => {
                let r = (lhs - rhs).abs();
                (r, r.is_nan() || r > LEMMA_TOL)
            }
        };
        self.worst = Some(match (self.worst, self.kind) {
            (None, _) => score,
            (Some(w), CheckKind::Inequality) => w.min(score),
            (Some(w), CheckKind::Identity) => w.max(score),
        });
        if bad && self.violation.is_none() {
            self.violation = Some(Violation {
                detail: detail(),
                beliefs: beliefs.to_vec(),
                residual_horizon: h,
                lhs,
                rhs,
                instance: self.inst.to_spec(),
            });
        }
    }

    fn finish(self) -> LemmaReport {
        LemmaReport {
            name: self.name,
            kind: self.kind,
            trials: self.trials,
            checks: self.checks,
            worst: self.worst,
            passed: self.violation.is_none(),
            skipped: None,
            violation: self.violation,
        }
    }
}

fn band_sample(rng: &mut ChaCha8Rng, params: &ChannelParams, n: usize) -> Vec<f64> {
    let (lo, hi) = (params.p01(), params.p11());
    (0..n).map(|_| lo + (hi - lo) * rng.random::<f64>()).collect()
}

fn horizon_sample(rng: &mut ChaCha8Rng, inst: &Instance) -> usize {
    rng.random_range(1..=inst.horizon())
}

/// Two distinct positions `l < m`.
fn pair(rng: &mut ChaCha8Rng, upper: usize) -> (usize, usize) {
    let v = sample(rng, upper, 2).into_vec();
    (v[0].min(v[1]), v[0].max(v[1]))
}

fn require_model(inst: &Instance, lemma: &str) -> Result<ConditionReport> {
    let c = check_conditions(inst)?;
    if !c.model_ok() {
        return Err(Error::HypothesesNotMet(format!(
            "{lemma} needs F regular, ε < {} and β <= {}",
            c.epsilon_bound, c.beta_bound
        )));
    }
    Ok(c)
}

/// `τ` is non-decreasing and maps `[0, 1]` into `[p01, p11]`.
pub fn verify_tau(inst: &Instance, trials: usize, seed: u64) -> LemmaReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = inst.params();
    let mut t = Tally::new("tau-bounds", CheckKind::Inequality, trials, inst);
    for _ in 0..trials {
        let (a, b): (f64, f64) = (rng.random(), rng.random());
        let (lo, hi) = (a.min(b), a.max(b));
        let (ta, tb) = (p.tau(lo), p.tau(hi));
        t.record(ta, tb, &[lo, hi], 0, || "τ not monotone".into());
        t.record(p.p01(), ta, &[lo], 0, || "τ below p01".into());
        t.record(tb, p.p11(), &[hi], 0, || "τ above p11".into());
    }
    t.finish()
}

/// `φ` is non-decreasing with `φ(0) = 0`, `φ(1) = 1`, and `φ(ω) <= p01` on
/// the band when `ε` is within its bound.
pub fn verify_phi(inst: &Instance, trials: usize, seed: u64) -> LemmaReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = inst.params();
    let s = inst.sensing();
    let bounded = s.epsilon() <= p.epsilon_bound();
    let mut t = Tally::new("phi-bounds", CheckKind::Inequality, trials, inst);
    if trials > 0 {
        t.record(s.phi(0.0), 0.0, &[0.0], 0, || "φ(0) > 0".into());
        t.record(1.0, s.phi(1.0), &[1.0], 0, || "φ(1) < 1".into());
    }
    for _ in 0..trials {
        let (a, b): (f64, f64) = (rng.random(), rng.random());
        let (lo, hi) = (a.min(b), a.max(b));
        t.record(s.phi(lo), s.phi(hi), &[lo, hi], 0, || "φ not monotone".into());
        if bounded {
            let w = p.p01() + (p.p11() - p.p01()) * rng.random::<f64>();
            t.record(s.phi(w), p.p01(), &[w], 0, || "φ(ω) > p01 on the band".into());
        }
    }
    t.finish()
}

/// `W` is unchanged by swapping two of the first `k` positions.
pub fn verify_symmetry(inst: &Instance, trials: usize, seed: u64) -> LemmaReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::new("w-symmetry", CheckKind::Identity, trials, inst);
    if inst.k() < 2 {
        return t.finish();
    }
    for _ in 0..trials {
        let w = band_sample(&mut rng, inst.params(), inst.n());
        let h = horizon_sample(&mut rng, inst);
        let (l, m) = pair(&mut rng, inst.k());
        let mut s = w.clone();
        s.swap(l, m);
        let (a, b) = (w_value(inst, &w, h), w_value(inst, &s, h));
        t.record(a, b, &w, h, || format!("swap of sensed positions {l} and {m}"));
    }
    t.finish()
}

/// `W(.., ω_i, ..) = ω_i W(.., 1, ..) + (1 - ω_i) W(.., 0, ..)`.
pub fn verify_decomposability(inst: &Instance, trials: usize, seed: u64) -> LemmaReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::new("w-decomposability", CheckKind::Identity, trials, inst);
    for _ in 0..trials {
        let w = band_sample(&mut rng, inst.params(), inst.n());
        let h = horizon_sample(&mut rng, inst);
        let i = rng.random_range(0..inst.n());
        let mut e = w.clone();
        e[i] = 1.0;
        let one = w_value(inst, &e, h);
        e[i] = 0.0;
        let zero = w_value(inst, &e, h);
        let lhs = w_value(inst, &w, h);
        let rhs = w[i] * one + (1.0 - w[i]) * zero;
        t.record(lhs, rhs, &w, h, || format!("position {i}"));
    }
    t.finish()
}

/// `W(..ω_l..ω_m..) - W(..ω_m..ω_l..) = (ω_l - ω_m)[W(..1..0..) - W(..0..1..)]`.
pub fn verify_decomposability_corollary(inst: &Instance, trials: usize, seed: u64) -> LemmaReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::new("w-swap-identity", CheckKind::Identity, trials, inst);
    if inst.n() < 2 {
        return t.finish();
    }
    for _ in 0..trials {
        let w = band_sample(&mut rng, inst.params(), inst.n());
        let h = horizon_sample(&mut rng, inst);
        let (l, m) = pair(&mut rng, inst.n());
        let mut s = w.clone();
        s.swap(l, m);
        let lhs = w_value(inst, &w, h) - w_value(inst, &s, h);
        let mut e = w.clone();
        (e[l], e[m]) = (1.0, 0.0);
        let hi = w_value(inst, &e, h);
        (e[l], e[m]) = (0.0, 1.0);
        let lo = w_value(inst, &e, h);
        let rhs = (w[l] - w[m]) * (hi - lo);
        t.record(lhs, rhs, &w, h, || format!("positions {l} and {m}"));
    }
    t.finish()
}

/// Raising one belief does not lower `W`.
pub fn verify_monotonicity(inst: &Instance, trials: usize, seed: u64) -> LemmaReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p11 = inst.params().p11();
    let mut t = Tally::new("w-monotonicity", CheckKind::Inequality, trials, inst);
    for _ in 0..trials {
        let w = band_sample(&mut rng, inst.params(), inst.n());
        let h = horizon_sample(&mut rng, inst);
        let i = rng.random_range(0..inst.n());
        let mut up = w.clone();
        up[i] += (p11 - w[i]) * rng.random::<f64>();
        t.record(w_value(inst, &w, h), w_value(inst, &up, h), &w, h, || {
            format!("raising position {i} to {}", up[i])
        });
    }
    t.finish()
}

/// With `ω_l >= ω_m` and `l < m`, swapping them does not raise `W`.
pub fn verify_swap_lemma(inst: &Instance, trials: usize, seed: u64) -> Result<LemmaReport> {
    require_model(inst, "the swap lemma")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Tally::new("w-swap", CheckKind::Inequality, trials, inst);
    if inst.n() < 2 {
        return Ok(t.finish());
    }
    for _ in 0..trials {
        let mut w = band_sample(&mut rng, inst.params(), inst.n());
        let h = horizon_sample(&mut rng, inst);
        let (l, m) = pair(&mut rng, inst.n());
        if w[l] < w[m] {
            w.swap(l, m);
        }
        let mut s = w.clone();
        s.swap(l, m);
        t.record(w_value(inst, &s, h), w_value(inst, &w, h), &w, h, || {
            format!("positions {l} and {m}")
        });
    }
    Ok(t.finish())
}

/// Both upper bounds on `W` differences for beliefs sorted decreasing:
///
/// ```text
/// W(ω_1..ω_N) - W(ω_N, ω_1..ω_{N-1}) <= (1 - ω_N)·Δmax
/// W(ω_1..ω_N) - W(ω_N, ω_2..ω_{N-1}, ω_1) <= (p11-p01)·Δmax·(1 - x^h)/(1 - x)
/// ```
///
/// with `x = β(1-ε)(p11-p01)`.
pub fn verify_upper_bounds(inst: &Instance, trials: usize, seed: u64) -> Result<LemmaReport> {
    let c = require_model(inst, "the upper-bound lemma")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = inst.params();
    let d = p.p11() - p.p01();
    let x = inst.beta() * (1.0 - inst.sensing().epsilon()) * d;
    let mut t = Tally::new("w-upper-bounds", CheckKind::Inequality, trials, inst);
    let n = inst.n();
    if n < 2 {
        return Ok(t.finish());
    }
    for _ in 0..trials {
        let mut w = band_sample(&mut rng, p, n);
        w.sort_by(|a, b| b.total_cmp(a));
        let h = horizon_sample(&mut rng, inst);
        let base = w_value(inst, &w, h);

        let mut cyc = w.clone();
        cyc.rotate_right(1);
        let bound1 = (1.0 - w[n - 1]) * c.delta_max;
        t.record(base - w_value(inst, &cyc, h), bound1, &w, h, || "cyclic shift bound".into());

        let mut sw = w.clone();
        sw.swap(0, n - 1);
        let geom = (1.0 - x.powi(h as i32)) / (1.0 - x);
        let bound2 = d * c.delta_max * geom;
        t.record(base - w_value(inst, &sw, h), bound2, &w, h, || "end swap bound".into());
    }
    Ok(t.finish())
}

/// `(1-ε)ω·p11 + [1-(1-ε)ω]·τ(φ(ω)) = τ(ω)` on random `(ω, ε, p01, p11)`.
pub fn verify_bayes_consistency(trials: usize, seed: u64) -> (usize, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < trials {
        let (a, b): (f64, f64) = (rng.random(), rng.random());
        let Ok(p) = ChannelParams::new(a.min(b), a.max(b)) else {
            continue;
        };
        let s = SensingModel::new(rng.random_range(0.0..1.0), 0.0).expect("ε in [0, 1)");
        let w: f64 = rng.random();
        let ack = s.ack_probability(w);
        let mixed = ack * p.p11() + (1.0 - ack) * p.tau(s.phi(w));
        worst = worst.max((mixed - p.tau(w)).abs());
        done += 1;
    }
    (done, worst)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremReport {
    pub conditions: ConditionReport,
    pub gap: GapReport,
    pub passed: bool,
}

/// Under satisfied conditions, checks that myopic is optimal within
/// [`GAP_TOL`].
pub fn verify_theorem(inst: &Instance) -> Result<TheoremReport> {
    let conditions = check_conditions(inst)?;
    if !conditions.all_ok {
        return Err(Error::HypothesesNotMet("optimality conditions do not hold".into()));
    }
    let gap = optimality_gap(inst)?;
    Ok(TheoremReport {
        passed: gap.gap <= GAP_TOL,
        conditions,
        gap,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub conditions: ConditionReport,
    pub lemmas: Vec<LemmaReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theorem: Option<TheoremReport>,
    pub warnings: Vec<String>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn first_violation(&self) -> Option<&Violation> {
        self.lemmas.iter().find_map(|l| l.violation.as_ref())
    }
}

fn skipped(name: &'static str, kind: CheckKind, trials: usize, reason: String) -> LemmaReport {
    LemmaReport {
        name,
        kind,
        trials,
        checks: 0,
        worst: None,
        passed: true,
        skipped: Some(reason),
        violation: None,
    }
}

type GatedVerifier = fn(&Instance, usize, u64) -> Result<LemmaReport>;

/// Runs every verifier with `trials` samples each, then the theorem check
/// when its hypotheses hold.
pub fn verify_all(inst: &Instance, trials: usize, seed: u64) -> Result<SuiteReport> {
    let conditions = check_conditions(inst)?;
    let sub = |i: u64| seed.wrapping_add(i.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut lemmas = vec![
        verify_tau(inst, trials, sub(1)),
        verify_phi(inst, trials, sub(2)),
        verify_symmetry(inst, trials, sub(3)),
        verify_decomposability(inst, trials, sub(4)),
        verify_decomposability_corollary(inst, trials, sub(5)),
        verify_monotonicity(inst, trials, sub(6)),
    ];
    let gated: [(&'static str, GatedVerifier); 2] = [
        ("w-swap", verify_swap_lemma),
        ("w-upper-bounds", verify_upper_bounds),
    ];
    for (i, (name, f)) in gated.into_iter().enumerate() {
        lemmas.push(match f(inst, trials, sub(7 + i as u64)) {
            Ok(r) => r,
            Err(Error::HypothesesNotMet(why)) => skipped(name, CheckKind::Inequality, trials, why),
            Err(e) => return Err(e),
        });
    }
    let mut warnings = Vec::new();
    if trials == 0 {
        warnings.push("trials = 0: randomized checks are vacuous".to_string());
    }
    for l in &lemmas {
        if l.skipped.is_none() && l.checks == 0 && trials > 0 {
            warnings.push(format!("{}: nothing to check for N = {}, k = {}", l.name, inst.n(), inst.k()));
        }
    }
    let theorem = if conditions.all_ok {
        Some(verify_theorem(inst)?)
    } else {
        warnings.push("optimality conditions do not hold; theorem check skipped".into());
        None
    };
    let passed = lemmas.iter().all(|l| l.passed) && theorem.as_ref().is_none_or(|t| t.passed);
    Ok(SuiteReport {
        conditions,
        lemmas,
        theorem,
        warnings,
        passed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Class {
    #[serde(rename = "PROVEN")]
    Proven,
    #[serde(rename = "EMPIRICAL-OPTIMAL")]
    EmpiricalOptimal,
    #[serde(rename = "COUNTEREXAMPLE")]
    Counterexample,
    /// Conditions hold but the gap exceeds [`GAP_TOL`].
    #[serde(rename = "THEOREM-VIOLATION")]
    TheoremViolation,
    #[serde(rename = "BUDGET-EXCEEDED")]
    BudgetExceeded,
    #[serde(rename = "INVALID")]
    Invalid,
    #[serde(rename = "TRUNCATED")]
    Truncated,
}

impl Class {
    pub fn as_str(&self) -> &'static str {
        match self {
            Class::Proven => "PROVEN",
            Class::EmpiricalOptimal => "EMPIRICAL-OPTIMAL",
            Class::Counterexample => "COUNTEREXAMPLE",
            Class::TheoremViolation => "THEOREM-VIOLATION",
            Class::BudgetExceeded => "BUDGET-EXCEEDED",
            Class::Invalid => "INVALID",
            Class::Truncated => "TRUNCATED",
        }
    }

    pub fn is_marker(&self) -> bool {
        matches!(self, Class::BudgetExceeded | Class::Invalid | Class::Truncated)
    }
}

/// Gaps in `(GAP_TOL, COUNTEREXAMPLE_GAP]` under failed conditions count as
/// empirically optimal.
pub fn classify(conditions_ok: bool, gap: f64) -> Class {
    match (conditions_ok, gap <= GAP_TOL) {
        (true, true) => Class::Proven,
        (true, false) => Class::TheoremViolation,
        (false, _) if gap > COUNTEREXAMPLE_GAP => Class::Counterexample,
        (false, _) => Class::EmpiricalOptimal,
    }
}

/// How sweep points choose `Ω(1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepInitial {
    /// Every channel at the stationary belief.
    #[default]
    Stationary,
    /// Evenly spaced from `p11` down to `p01`.
    Spread,
}

/// Cartesian grid; points are visited with `p01` outermost and `reward`
/// innermost, the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub p01: Vec<f64>,
    pub p11: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub beta: Vec<f64>,
    pub n: Vec<usize>,
    pub k: Vec<usize>,
    pub horizon: Vec<usize>,
    pub reward: Vec<RewardKind>,
    #[serde(default)]
    pub delta_domain: DeltaDomain,
    #[serde(default)]
    pub initial: SweepInitial,
}

impl SweepGrid {
    pub fn len(&self) -> usize {
        self.p01.len()
            * self.p11.len()
            * self.epsilon.len()
            * self.beta.len()
            * self.n.len()
            * self.k.len()
            * self.horizon.len()
            * self.reward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> Vec<InstanceSpec> {
        let mut out = Vec::with_capacity(self.len());
        for &p01 in &self.p01 {
            for &p11 in &self.p11 {
                for &epsilon in &self.epsilon {
                    for &beta in &self.beta {
                        for &n in &self.n {
                            for &k in &self.k {
                                for &horizon in &self.horizon {
                                    for &reward in &self.reward {
                                        out.push(InstanceSpec {
                                            n,
                                            k,
                                            horizon,
                                            beta,
                                            p01,
                                            p11,
                                            epsilon,
                                            delta: 0.0,
                                            reward,
                                            initial: self.initial_for(n, p01, p11),
                                            delta_domain: self.delta_domain,
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    fn initial_for(&self, n: usize, p01: f64, p11: f64) -> InitialBelief {
        match self.initial {
            SweepInitial::Stationary => InitialBelief::Stationary,
            SweepInitial::Spread if n < 2 => InitialBelief::Stationary,
            SweepInitial::Spread => InitialBelief::Explicit(
                (0..n)
                    .map(|i| p11 - (p11 - p01) * i as f64 / (n - 1) as f64)
                    .collect(),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub spec: InstanceSpec,
    pub eps_bound: Option<f64>,
    pub beta_bound: Option<f64>,
    pub conditions_ok: Option<bool>,
    pub myopic_value: Option<f64>,
    pub optimal_value: Option<f64>,
    pub gap: Option<f64>,
    pub class: Class,
}

impl SweepRow {
    fn marker(spec: InstanceSpec, class: Class) -> Self {
        Self {
            spec,
            eps_bound: None,
            beta_bound: None,
            conditions_ok: None,
            myopic_value: None,
            optimal_value: None,
            gap: None,
            class,
        }
    }
}

pub const SWEEP_HEADER: &str =
    "p01,p11,epsilon,beta,N,k,T,reward_kind,eps_bound,beta_bound,conditions_ok,myopic_value,optimal_value,gap,class";

fn solve_point(spec: InstanceSpec) -> SweepRow {
    let Ok(inst) = spec.build() else {
        return SweepRow::marker(spec, Class::Invalid);
    };
    if expansion_cost(inst.n(), inst.k(), inst.horizon()) > DEFAULT_BUDGET {
        return SweepRow::marker(spec, Class::BudgetExceeded);
    }
    let conditions = match check_conditions(&inst) {
        Ok(c) => c,
        Err(_) => return SweepRow::marker(spec, Class::Invalid),
    };
    let gap = match optimality_gap(&inst) {
        Ok(g) => g,
        Err(Error::BudgetExceeded { .. }) => return SweepRow::marker(spec, Class::BudgetExceeded),
        Err(_) => return SweepRow::marker(spec, Class::Invalid),
    };
    SweepRow {
        eps_bound: Some(conditions.epsilon_bound),
        beta_bound: Some(conditions.beta_bound),
        conditions_ok: Some(conditions.all_ok),
        myopic_value: Some(gap.myopic.value),
        optimal_value: Some(gap.optimal.value),
        gap: Some(gap.gap),
        class: classify(conditions.all_ok, gap.gap),
        spec,
    }
}

/// Solves and classifies every grid point.
///
/// `budget` caps the summed `(C(N,k)·2^k)^T` over the points taken in grid
/// order; the first point that would exceed it is replaced by a `TRUNCATED`
/// row and the sweep stops. Rows come back in grid order whatever the
/// thread count.
pub fn counterexample_sweep(grid: &SweepGrid, budget: f64) -> Vec<SweepRow> {
    let mut taken = Vec::new();
    let mut spent = 0.0;
    let mut truncated = None;
    for spec in grid.points() {
        let cost = if spec.k <= spec.n {
            expansion_cost(spec.n, spec.k, spec.horizon)
        } else {
            0.0
        };
        if cost <= DEFAULT_BUDGET && spent + cost > budget {
            truncated = Some(spec);
            break;
        }
        if cost <= DEFAULT_BUDGET {
            spent += cost;
        }
        taken.push(spec);
    }
    let mut rows: Vec<SweepRow> = taken.into_par_iter().map(solve_point).collect();
    if let Some(spec) = truncated {
        rows.push(SweepRow::marker(spec, Class::Truncated));
    }
    rows
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let io = |e: csv::Error| Error::InvalidArgument(format!("writing CSV: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER.split(',')).map_err(io)?;
    let num = |x: Option<f64>| x.map(sig17).unwrap_or_default();
    for r in rows {
        let s = &r.spec;
        w.write_record([
            sig17(s.p01),
            sig17(s.p11),
            sig17(s.epsilon),
            sig17(s.beta),
            s.n.to_string(),
            s.k.to_string(),
            s.horizon.to_string(),
            s.reward.as_str().to_string(),
            num(r.eps_bound),
            num(r.beta_bound),
            r.conditions_ok.map(|b| b.to_string()).unwrap_or_default(),
            num(r.myopic_value),
            num(r.optimal_value),
            num(r.gap),
            r.class.as_str().to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::InvalidArgument(format!("writing CSV: {e}")))?;
    Ok(())
}
