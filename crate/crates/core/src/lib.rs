//! Multi-channel opportunistic access as a restless bandit with imperfect
//! sensing: belief tracking under ACK feedback, the myopic policy, exact
//! finite-horizon solving, numerical checks of the conditions under which
//! myopic sensing is optimal, and Monte Carlo evaluation.

pub mod channel;
pub mod error;
pub mod fmt;
pub mod instance;
pub mod policy;
pub mod reward;
pub mod sim;
pub mod solver;
pub mod theorem;

pub use channel::{enumerate_outcomes, BeliefVector, ChannelParams, Observation, SensingModel};
pub use error::{Error, Result};
pub use instance::{InitialBelief, Instance, InstanceSpec};
pub use policy::{
    fixed_policy, myopic_action, random_policy, Action, FixedPolicy, Myopic, Policy, PolicyKind,
    RandomPolicy,
};
pub use reward::{
    check_regularity, delta_bounds, DeltaBounds, DeltaDomain, RegularityReport, RewardKind,
    RewardSpec,
};
pub use sim::{estimate_value, run_episode, EpisodeTrace, SimResult};
pub use solver::{
    auxiliary_value, evaluate_policy, myopic_value, optimal_value, optimality_gap, w_value,
    GapReport, OptimalReport, SolverOptions, ValueReport,
};
pub use theorem::{
    check_conditions, counterexample_sweep, verify_all, verify_theorem, Class, ConditionReport,
    LemmaReport, SuiteReport, SweepGrid, SweepRow,
};
