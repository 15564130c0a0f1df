//! Immediate-reward functions `F` over the beliefs of the `k` sensed channels.
//!
//! The analysis requires `F` to be *regular*: symmetric in its arguments,
//! non-decreasing in each of them, and affine in each argument separately
//! (`F(.., ω, ..) = ω·F(.., 1, ..) + (1-ω)·F(.., 0, ..)`). The two built-in
//! families are regular by construction; [`check_regularity`] tests the
//! axioms numerically for anything else.
//!
//! [`delta_bounds`] returns the extrema of `F(1, ω₋ᵢ) - F(0, ω₋ᵢ)` over a box of
//! the remaining `k-1` beliefs, which drive the discount condition in
//! [`crate::theorem::check_conditions`].

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, SensingModel};
use crate::error::{Error, Result};

/// Absolute tolerance of the regularity axioms.
pub const REGULARITY_TOL: f64 = 1e-9;

/// Largest `k - 1` accepted by the grid search.
pub const MAX_GRID_DIMS: usize = 6;

/// Grid resolution per axis when the full grid is affordable.
pub const GRID_POINTS: usize = 101;

const GRID_EVAL_CAP: f64 = 2.0e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardKind {
    /// `F = (1-ε) Σ ω_i`: one unit per good sensed channel.
    SumThroughput,
    /// `F = 1 - Π [1 - (1-ε) ω_i]`: one unit if any sensed channel delivers.
    AnySuccess,
    Custom,
}

impl RewardKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            RewardKind::SumThroughput => "sum-throughput",
            RewardKind::AnySuccess => "any-success",
            RewardKind::Custom => "custom",
        }
    }
}

impl fmt::Display for RewardKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

type CustomFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A reward function of fixed arity `k`.
#[derive(Clone)]
pub struct RewardSpec {
    arity: usize,
    kind: RewardKind,
    epsilon: f64,
    label: String,
    custom: Option<CustomFn>,
}

impl fmt::Debug for RewardSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RewardSpec")
            .field("arity", &self.arity)
            .field("kind", &self.kind)
            .field("epsilon", &self.epsilon)
            .field("label", &self.label)
            .finish()
    }
}

fn check_arity(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidReward("arity k must be at least 1".into()));
    }
    Ok(())
}

impl RewardSpec {
    pub fn sum_throughput(k: usize, sensing: &SensingModel) -> Result<Self> {
        check_arity(k)?;
        Ok(Self {
            arity: k,
            kind: RewardKind::SumThroughput,
            epsilon: sensing.epsilon(),
            label: RewardKind::SumThroughput.as_str().into(),
            custom: None,
        })
    }

    pub fn any_success(k: usize, sensing: &SensingModel) -> Result<Self> {
        check_arity(k)?;
        Ok(Self {
            arity: k,
            kind: RewardKind::AnySuccess,
            epsilon: sensing.epsilon(),
            label: RewardKind::AnySuccess.as_str().into(),
            custom: None,
        })
    }

    pub fn builtin(kind: RewardKind, k: usize, sensing: &SensingModel) -> Result<Self> {
        match kind {
            RewardKind::SumThroughput => Self::sum_throughput(k, sensing),
            RewardKind::AnySuccess => Self::any_success(k, sensing),
            RewardKind::Custom => Err(Error::InvalidReward(
                "custom rewards need a function; use RewardSpec::custom".into(),
            )),
        }
    }

    /// A user-supplied reward. Regularity is not assumed; run
    /// [`check_regularity`] before relying on it.
    pub fn custom<F>(k: usize, label: impl Into<String>, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        check_arity(k)?;
        Ok(Self {
            arity: k,
            kind: RewardKind::Custom,
            epsilon: 0.0,
            label: label.into(),
            custom: Some(Arc::new(f)),
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn kind(&self) -> RewardKind {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_builtin(&self) -> bool {
        self.custom.is_none()
    }

    /// Evaluates `F` on exactly `arity` beliefs.
    #[inline]
    pub fn evaluate(&self, beliefs: &[f64]) -> f64 {
        debug_assert_eq!(beliefs.len(), self.arity);
        let keep = 1.0 - self.epsilon;
        match self.kind {
            RewardKind::SumThroughput => keep * beliefs.iter().sum::<f64>(),
            RewardKind::AnySuccess => {
                1.0 - beliefs.iter().map(|&w| 1.0 - keep * w).product::<f64>()
            }
            RewardKind::Custom => (self.custom.as_ref().expect("custom reward"))(beliefs),
        }
    }

    /// `F` evaluated on `beliefs[ids]`.
    #[inline]
    pub(crate) fn evaluate_at(&self, beliefs: &[f64], ids: &[usize], scratch: &mut Vec<f64>) -> f64 {
        scratch.clear();
        scratch.extend(ids.iter().map(|&c| beliefs[c]));
        self.evaluate(scratch)
    }

    /// `F(1, rest) - F(0, rest)` with the varied argument in position `pos`.
    fn marginal(&self, rest: &[f64], pos: usize, buf: &mut Vec<f64>) -> f64 {
        buf.clear();
        buf.extend_from_slice(&rest[..pos]);
        buf.push(1.0);
        buf.extend_from_slice(&rest[pos..]);
        let hi = self.evaluate(buf);
        buf[pos] = 0.0;
        hi - self.evaluate(buf)
    }
}

/// Box over which `ω₋ᵢ` ranges when computing [`DeltaBounds`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeltaDomain {
    /// `[0, 1]^{k-1}`.
    #[default]
    Unit,
    /// `[p01, p11]^{k-1}`.
    Band,
}

impl DeltaDomain {
    pub fn interval(&self, params: &ChannelParams) -> (f64, f64) {
        match self {
            DeltaDomain::Unit => (0.0, 1.0),
            DeltaDomain::Band => (params.p01(), params.p11()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum DeltaMethod {
    ClosedForm,
    Grid { points_per_axis: usize, refined: bool },
}

/// Extrema of `F(1, ω₋ᵢ) - F(0, ω₋ᵢ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeltaBounds {
    pub delta_min: f64,
    pub delta_max: f64,
    #[serde(flatten)]
    pub method: DeltaMethod,
}

/// Δ bounds of `spec` over `domain`.
///
/// Built-ins use closed forms. For sum-throughput the marginal is the
/// constant `1-ε`. For any-success it is `(1-ε) Π_{j≠i} [1 - (1-ε)ω_j]`, which
/// is decreasing in every `ω_j`, so over `[lo, hi]^{k-1}`
///
/// ```text
/// Δmin = (1-ε)(1 - (1-ε)·hi)^{k-1}
/// Δmax = (1-ε)(1 - (1-ε)·lo)^{k-1}
/// ```
///
/// Custom rewards fall back to [`grid_delta_bounds`].
pub fn delta_bounds(
    spec: &RewardSpec,
    params: &ChannelParams,
    domain: DeltaDomain,
) -> Result<DeltaBounds> {
    let (lo, hi) = domain.interval(params);
    let keep = 1.0 - spec.epsilon;
    let dims = spec.arity as i32 - 1;
    let closed = |delta_min, delta_max| DeltaBounds {
        delta_min,
        delta_max,
        method: DeltaMethod::ClosedForm,
    };
    match spec.kind {
        RewardKind::SumThroughput => Ok(closed(keep, keep)),
        RewardKind::AnySuccess => Ok(closed(
            keep * (1.0 - keep * hi).powi(dims),
            keep * (1.0 - keep * lo).powi(dims),
        )),
        RewardKind::Custom => grid_delta_bounds(spec, lo, hi),
    }
}

/// Brute-force Δ bounds: a regular grid over `[lo, hi]^{k-1}`, refined once
/// around each incumbent extremum. Every argument position is scanned, so
/// the result is meaningful for non-symmetric `F` too.
pub fn grid_delta_bounds(spec: &RewardSpec, lo: f64, hi: f64) -> Result<DeltaBounds> {
    let dims = spec.arity - 1;
    if dims > MAX_GRID_DIMS {
        return Err(Error::InvalidReward(format!(
            "grid search supports k - 1 <= {MAX_GRID_DIMS}, got {dims}"
        )));
    }
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(Error::InvalidArgument(format!("empty interval [{lo}, {hi}]")));
    }
    let points = grid_points_per_axis(dims);
    let mut buf = Vec::with_capacity(spec.arity);

    if dims == 0 {
        let v = (0..spec.arity)
            .map(|pos| spec.marginal(&[], pos, &mut Vec::new()))
            .collect::<Vec<_>>();
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        return Ok(DeltaBounds {
            delta_min: min,
            delta_max: max,
            method: DeltaMethod::Grid {
                points_per_axis: 1,
                refined: false,
            },
        });
    }

    let axis = |a: f64, b: f64| -> Vec<f64> {
        if points == 1 || a == b {
            return vec![a];
        }
        (0..points)
            .map(|i| a + (b - a) * i as f64 / (points - 1) as f64)
            .collect()
    };

    let mut scan = |boxes: &[(f64, f64)], best: &mut Extrema| {
        let axes: Vec<Vec<f64>> = boxes.iter().map(|&(a, b)| axis(a, b)).collect();
        let mut idx = vec![0usize; dims];
        let mut point = vec![0.0; dims];
        loop {
            for (d, &i) in idx.iter().enumerate() {
                point[d] = axes[d][i];
            }
            for pos in 0..spec.arity {
                let v = spec.marginal(&point, pos, &mut buf);
                best.observe(v, &point);
            }
            // odometer increment
            let mut d = 0;
            loop {
                if d == dims {
                    return;
                }
                idx[d] += 1;
                if idx[d] < axes[d].len() {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
        }
    };

    let mut best = Extrema::default();
    scan(&vec![(lo, hi); dims], &mut best);

    let step = if points > 1 { (hi - lo) / (points - 1) as f64 } else { 0.0 };
    let local = |centre: &[f64]| -> Vec<(f64, f64)> {
        centre
            .iter()
            .map(|&c| ((c - step).max(lo), (c + step).min(hi)))
            .collect()
    };
    let (min_at, max_at) = (best.min_at.clone(), best.max_at.clone());
    scan(&local(&min_at), &mut best);
    scan(&local(&max_at), &mut best);

    Ok(DeltaBounds {
        delta_min: best.min,
        delta_max: best.max,
        method: DeltaMethod::Grid {
            points_per_axis: points,
            refined: true,
        },
    })
}

/// 101 per axis while the full grid stays below the evaluation cap, else the
/// largest resolution that fits (at least 5).
pub fn grid_points_per_axis(dims: usize) -> usize {
    if dims == 0 {
        return 1;
    }
    if (GRID_POINTS as f64).powi(dims as i32) <= GRID_EVAL_CAP {
        return GRID_POINTS;
    }
    let mut p = GRID_EVAL_CAP.powf(1.0 / dims as f64).floor() as usize;
    while (p as f64).powi(dims as i32) > GRID_EVAL_CAP {
        p -= 1;
    }
    p.max(5)
}

struct Extrema {
    min: f64,
    max: f64,
    min_at: Vec<f64>,
    max_at: Vec<f64>,
}

impl Default for Extrema {
    fn default() -> Self {
        Self {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            min_at: Vec::new(),
            max_at: Vec::new(),
        }
    }
}

impl Extrema {
    fn observe(&mut self, v: f64, at: &[f64]) {
        if v < self.min {
            self.min = v;
            self.min_at = at.to_vec();
        }
        if v > self.max {
            self.max = v;
            self.max_at = at.to_vec();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axiom {
    Symmetry,
    Monotonicity,
    Decomposability,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityViolation {
    pub axiom: Axiom,
    pub point: Vec<f64>,
    pub other: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub samples: usize,
    pub passed: bool,
    pub violation: Option<RegularityViolation>,
}

/// Samples `samples` argument tuples from `[0,1]^k` and tests symmetry,
/// coordinate-wise monotonicity and decomposability. Stops at the first
/// counterexample.
pub fn check_regularity(spec: &RewardSpec, samples: usize, seed: u64) -> RegularityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = spec.arity;
    let fail = |axiom, point: &[f64], other: Vec<f64>, lhs, rhs| RegularityReport {
        samples,
        passed: false,
        violation: Some(RegularityViolation {
            axiom,
            point: point.to_vec(),
            other,
            lhs,
            rhs,
        }),
    };

    for _ in 0..samples {
        let point: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let value = spec.evaluate(&point);

        let mut permuted = point.clone();
        for i in (1..k).rev() {
            permuted.swap(i, rng.random_range(0..=i));
        }
        let pv = spec.evaluate(&permuted);
        if (pv - value).abs() > REGULARITY_TOL {
            return fail(Axiom::Symmetry, &point, permuted, value, pv);
        }

        let i = rng.random_range(0..k);
        let mut raised = point.clone();
        raised[i] += rng.random::<f64>() * (1.0 - raised[i]);
        let rv = spec.evaluate(&raised);
        if rv < value - REGULARITY_TOL {
            return fail(Axiom::Monotonicity, &point, raised, value, rv);
        }

        for i in 0..k {
            let mut at = point.clone();
            at[i] = 1.0;
            let one = spec.evaluate(&at);
            at[i] = 0.0;
            let zero = spec.evaluate(&at);
            let affine = point[i] * one + (1.0 - point[i]) * zero;
            if (affine - value).abs() > REGULARITY_TOL {
                return fail(Axiom::Decomposability, &point, vec![i as f64], value, affine);
            }
        }
    }
    RegularityReport {
        samples,
        passed: true,
        violation: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sensing(eps: f64) -> SensingModel {
        SensingModel::new(eps, 0.0).unwrap()
    }

    #[test]
    fn sum_throughput_values() {
        let f = RewardSpec::sum_throughput(2, &sensing(0.1)).unwrap();
        assert!((f.evaluate(&[0.5, 0.5]) - 0.9).abs() < 1e-15);
        let f = RewardSpec::sum_throughput(4, &sensing(0.3)).unwrap();
        assert_eq!(f.evaluate(&[0.0; 4]), 0.0);
    }

    #[test]
    fn any_success_values() {
        let f = RewardSpec::any_success(2, &sensing(0.0)).unwrap();
        assert!((f.evaluate(&[0.5, 0.5]) - 0.75).abs() < 1e-15);
        assert_eq!(f.evaluate(&[1.0, 1.0]), 1.0);
        let f = RewardSpec::any_success(3, &sensing(0.2)).unwrap();
        assert_eq!(f.evaluate(&[0.0; 3]), 0.0);
    }

    #[test]
    fn zero_arity_rejected() {
        assert!(RewardSpec::sum_throughput(0, &sensing(0.0)).is_err());
        assert!(RewardSpec::builtin(RewardKind::Custom, 2, &sensing(0.0)).is_err());
    }

    #[test]
    fn sum_throughput_delta_is_constant() {
        let p = ChannelParams::new(0.3, 0.7).unwrap();
        for eps in [0.0, 0.1, 0.4] {
            let f = RewardSpec::sum_throughput(3, &sensing(eps)).unwrap();
            for domain in [DeltaDomain::Unit, DeltaDomain::Band] {
                let d = delta_bounds(&f, &p, domain).unwrap();
                assert_eq!(d.delta_min, 1.0 - eps);
                assert_eq!(d.delta_max, 1.0 - eps);
            }
        }
    }

    #[test]
    fn any_success_delta_closed_form() {
        let p = ChannelParams::new(0.3, 0.7).unwrap();
        // k = 1: F(1) - F(0) = 1 - ε
        let f = RewardSpec::any_success(1, &sensing(0.0)).unwrap();
        let d = delta_bounds(&f, &p, DeltaDomain::Band).unwrap();
        assert_eq!((d.delta_min, d.delta_max), (1.0, 1.0));
        let f = RewardSpec::any_success(1, &sensing(0.2)).unwrap();
        let d = delta_bounds(&f, &p, DeltaDomain::Band).unwrap();
        assert!((d.delta_min - 0.8).abs() < 1e-15 && (d.delta_max - 0.8).abs() < 1e-15);
        // k = 2, ε = 0: marginal is 1 - ω_other, so [1 - p11, 1 - p01]
        let f = RewardSpec::any_success(2, &sensing(0.0)).unwrap();
        let d = delta_bounds(&f, &p, DeltaDomain::Band).unwrap();
        assert!((d.delta_min - 0.3).abs() < 1e-15);
        assert!((d.delta_max - 0.7).abs() < 1e-15);
        let d = delta_bounds(&f, &p, DeltaDomain::Unit).unwrap();
        assert_eq!((d.delta_min, d.delta_max), (0.0, 1.0));
    }

    #[test]
    fn grid_brackets_closed_form() {
        let p = ChannelParams::new(0.25, 0.85).unwrap();
        for k in 1..=4 {
            for eps in [0.0, 0.05, 0.3] {
                for kind in [RewardKind::SumThroughput, RewardKind::AnySuccess] {
                    let f = RewardSpec::builtin(kind, k, &sensing(eps)).unwrap();
                    for domain in [DeltaDomain::Unit, DeltaDomain::Band] {
                        let (lo, hi) = domain.interval(&p);
                        let closed = delta_bounds(&f, &p, domain).unwrap();
                        let grid = grid_delta_bounds(&f, lo, hi).unwrap();
                        // grid extrema lie inside the true range and, since
                        // both extrema sit on grid corners, reach it
                        assert!(grid.delta_min >= closed.delta_min - 1e-12, "{kind} k={k}");
                        assert!(grid.delta_max <= closed.delta_max + 1e-12, "{kind} k={k}");
                        assert!((grid.delta_min - closed.delta_min).abs() < 1e-12);
                        assert!((grid.delta_max - closed.delta_max).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn custom_delta_uses_grid() {
        let p = ChannelParams::new(0.2, 0.6).unwrap();
        let f = RewardSpec::custom(2, "weighted", |w: &[f64]| 0.5 * w[0] + 0.5 * w[1] + 0.25 * w[0] * w[1])
            .unwrap();
        let d = delta_bounds(&f, &p, DeltaDomain::Band).unwrap();
        assert!(matches!(d.method, DeltaMethod::Grid { points_per_axis: 101, refined: true }));
        assert!((d.delta_min - (0.5 + 0.25 * 0.2)).abs() < 1e-12);
        assert!((d.delta_max - (0.5 + 0.25 * 0.6)).abs() < 1e-12);
    }

    #[test]
    fn custom_grid_rejects_high_arity() {
        let f = RewardSpec::custom(8, "sum", |w: &[f64]| w.iter().sum()).unwrap();
        assert!(grid_delta_bounds(&f, 0.0, 1.0).is_err());
        assert_eq!(grid_points_per_axis(3), 101);
        assert!(grid_points_per_axis(6).pow(6) as f64 <= 2.0e6);
    }

    #[test]
    fn builtins_are_regular() {
        for kind in [RewardKind::SumThroughput, RewardKind::AnySuccess] {
            for k in 1..=4 {
                let f = RewardSpec::builtin(kind, k, &sensing(0.15)).unwrap();
                let r = check_regularity(&f, 500, 11);
                assert!(r.passed, "{kind} k={k}: {:?}", r.violation);
            }
        }
    }

    #[test]
    fn max_is_not_decomposable() {
        let f = RewardSpec::custom(2, "max", |w: &[f64]| w[0].max(w[1])).unwrap();
        // the identity already fails at (0.5, 0.2): 0.5 vs 0.5·1 + 0.5·0.2
        let affine = 0.5 * f.evaluate(&[1.0, 0.2]) + 0.5 * f.evaluate(&[0.0, 0.2]);
        assert!((affine - f.evaluate(&[0.5, 0.2]) - 0.1).abs() < 1e-15);
        let r = check_regularity(&f, 100, 3);
        assert!(!r.passed);
        assert_eq!(r.violation.unwrap().axiom, Axiom::Decomposability);
    }

    #[test]
    fn asymmetric_and_decreasing_rewards_detected() {
        let f = RewardSpec::custom(2, "skew", |w: &[f64]| 2.0 * w[0] + w[1]).unwrap();
        assert_eq!(check_regularity(&f, 100, 3).violation.unwrap().axiom, Axiom::Symmetry);
        let f = RewardSpec::custom(2, "neg", |w: &[f64]| -(w[0] + w[1])).unwrap();
        assert_eq!(
            check_regularity(&f, 100, 3).violation.unwrap().axiom,
            Axiom::Monotonicity
        );
    }
}
