//! Magic-state production models.
//!
//! Three mechanisms feed the scheduler:
//!
//! * **Distillation.** `F` 15-to-1 factories each finish a round every
//!   `t_prod` cycles and abort it with probability `15p + 105p²`. Output goes
//!   to one unbounded shared buffer. Factories are staggered evenly over one
//!   round.
//! * **Cultivation.** Each unit runs attempts of two stages, `t_inject + r1`
//!   and `t_escape + r2` cycles long. Stage `k` survives with probability
//!   `(1 - qk)^rk`. Any failure restarts the unit from step 1 on the next
//!   cycle. Accepted states go to a buffer of capacity `F`; a unit that
//!   finishes while the buffer is full holds its state until a slot frees.
//! * **Rz synthesis.** Units prepare angle-specific states by
//!   repeat-until-success. Attempts take `t_attempt` cycles and fail with
//!   probability `q_round`. The `F` units are a budget shared by all angles
//!   and are assigned to demands first come, first served.
//!
//! A state produced at cycle `c` is consumable from cycle `c + handoff`.

mod bank;
mod buffer;

pub use bank::{BankStats, ProductionBank};
pub use buffer::Buffer;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::UnitMode;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid production config: {0}")]
pub struct ConfigError(pub String);

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError(msg()))
    }
}

fn prob(name: &str, q: f64) -> Result<(), ConfigError> {
    check((0.0..1.0).contains(&q), || {
        format!("{name} = {q} must lie in [0, 1)")
    })
}

/// Discard probability of one 15-to-1 round, `15p + 105p²`.
pub fn abort_rate_15to1(p_phys: f64) -> Result<f64, ConfigError> {
    check((0.0..=0.01).contains(&p_phys), || {
        format!("p_phys = {p_phys} outside [0, 0.01] for the 15-to-1 abort formula")
    })?;
    Ok(15.0 * p_phys + 105.0 * p_phys * p_phys)
}

/// Code distance used for the logical patches of the distillation preset.
pub const DISTILLATION_DISTANCE: u32 = 7;
/// Physical qubits per 15-to-1 factory in the physical preset.
pub const PHYSICAL_FACTORY_QUBITS: u64 = 810;
/// Logical tiles per 15-to-1 factory in the logical-tiles preset.
pub const LOGICAL_FACTORY_TILES: u64 = 11;
/// Multiplier `c` of the per-round discard defaults `q = c·p·d²`.
pub const DISCARD_COEFF: f64 = 10.0;

fn tile(d: u32) -> u64 {
    2 * u64::from(d) * u64::from(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistillationConfig {
    pub p_phys: f64,
    pub t_prod: u32,
    /// Overrides the `15p + 105p²` default.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abort_rate: Option<f64>,
    pub stagger: bool,
    /// Overrides the cost preset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost_per_factory: Option<u64>,
}

impl Default for DistillationConfig {
    fn default() -> Self {
        DistillationConfig {
            p_phys: 1e-4,
            t_prod: 18,
            abort_rate: None,
            stagger: true,
            cost_per_factory: None,
        }
    }
}

impl DistillationConfig {
    pub fn abort_rate(&self) -> f64 {
        self.abort_rate
            .unwrap_or(15.0 * self.p_phys + 105.0 * self.p_phys * self.p_phys)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.abort_rate.is_none() {
            abort_rate_15to1(self.p_phys)?;
        }
        prob("abort_rate", self.abort_rate())?;
        check(self.t_prod >= 1, || "t_prod must be at least 1".into())?;
        check(self.cost_per_factory != Some(0), || {
            "cost_per_factory must be positive".into()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CultivationConfig {
    pub d1: u32,
    pub d2: u32,
    pub r1: u32,
    pub r2: u32,
    pub p_phys: f64,
    /// Per-round discard probability in stage 1; default `10·p·d1²`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q1: Option<f64>,
    /// Per-round discard probability in stage 2; default `10·p·d2²`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q2: Option<f64>,
    pub t_inject: u32,
    /// Default `d2`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_escape: Option<u32>,
    /// Default: the unit count.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub buffer_capacity: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost_per_unit: Option<u64>,
    /// Fail each round independently and restart at once, instead of
    /// resolving each stage at its last round.
    pub early_abort: bool,
}

impl Default for CultivationConfig {
    fn default() -> Self {
        CultivationConfig {
            d1: 3,
            d2: 7,
            r1: 3,
            r2: 5,
            p_phys: 1e-3,
            q1: None,
            q2: None,
            t_inject: 1,
            t_escape: None,
            buffer_capacity: None,
            cost_per_unit: None,
            early_abort: false,
        }
    }
}

impl CultivationConfig {
    pub fn q1(&self) -> f64 {
        self.q1
            .unwrap_or(DISCARD_COEFF * self.p_phys * f64::from(self.d1 * self.d1))
    }

    pub fn q2(&self) -> f64 {
        self.q2
            .unwrap_or(DISCARD_COEFF * self.p_phys * f64::from(self.d2 * self.d2))
    }

    pub fn t_escape(&self) -> u32 {
        self.t_escape.unwrap_or(self.d2)
    }

    /// Cycles of stage 1 (injection plus `r1` rounds).
    pub fn stage1_len(&self) -> u32 {
        self.t_inject + self.r1
    }

    /// Cycles of stage 2 (escape plus `r2` rounds).
    pub fn stage2_len(&self) -> u32 {
        self.t_escape() + self.r2
    }

    pub fn s1(&self) -> f64 {
        (1.0 - self.q1()).powi(self.r1 as i32)
    }

    pub fn s2(&self) -> f64 {
        (1.0 - self.q2()).powi(self.r2 as i32)
    }

    pub fn buffer_capacity(&self, units: u32) -> u32 {
        self.buffer_capacity.unwrap_or(units)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        prob("q1", self.q1())?;
        prob("q2", self.q2())?;
        check(self.r1 >= 1 && self.r2 >= 1, || {
            "r1 and r2 must be at least 1".into()
        })?;
        check(self.d2 > self.d1, || {
            format!("d2 = {} must exceed d1 = {}", self.d2, self.d1)
        })?;
        check(self.t_inject + self.t_escape() >= 1, || {
            "attempt length must be positive".into()
        })?;
        check(self.buffer_capacity != Some(0), || {
            "buffer_capacity must be positive".into()
        })?;
        check(self.cost_per_unit != Some(0), || {
            "cost_per_unit must be positive".into()
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitBudgetPolicy {
    /// One global pool of `F` units; demands are served in arrival order.
    #[default]
    SharedFifo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RzSynthConfig {
    pub d: u32,
    pub p_phys: f64,
    /// Failure probability of one attempt; default `10·p·d²`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_round: Option<f64>,
    /// Default `d`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_attempt: Option<u32>,
    pub unit_budget_policy: UnitBudgetPolicy,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cost_per_unit: Option<u64>,
}

impl Default for RzSynthConfig {
    fn default() -> Self {
        RzSynthConfig {
            d: 3,
            p_phys: 1e-3,
            q_round: None,
            t_attempt: None,
            unit_budget_policy: UnitBudgetPolicy::SharedFifo,
            cost_per_unit: None,
        }
    }
}

impl RzSynthConfig {
    pub fn q_round(&self) -> f64 {
        self.q_round
            .unwrap_or(DISCARD_COEFF * self.p_phys * f64::from(self.d * self.d))
    }

    pub fn t_attempt(&self) -> u32 {
        self.t_attempt.unwrap_or(self.d)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        prob("q_round", self.q_round())?;
        check(self.t_attempt() >= 1, || {
            "t_attempt must be at least 1".into()
        })?;
        check(self.cost_per_unit != Some(0), || {
            "cost_per_unit must be positive".into()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismConfig {
    Distillation(DistillationConfig),
    Cultivation(CultivationConfig),
    Rz(RzSynthConfig),
}

impl Default for MechanismConfig {
    fn default() -> Self {
        MechanismConfig::Distillation(DistillationConfig::default())
    }
}

impl MechanismConfig {
    pub fn name(&self) -> &'static str {
        match self {
            MechanismConfig::Distillation(_) => "distillation",
            MechanismConfig::Cultivation(_) => "cultivation",
            MechanismConfig::Rz(_) => "rz",
        }
    }

    /// Default config of the named mechanism.
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "distillation" => MechanismConfig::Distillation(Default::default()),
            "cultivation" => MechanismConfig::Cultivation(Default::default()),
            "rz" => MechanismConfig::Rz(Default::default()),
            _ => return None,
        })
    }

    pub fn is_rz(&self) -> bool {
        matches!(self, MechanismConfig::Rz(_))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self {
            MechanismConfig::Distillation(c) => c.validate(),
            MechanismConfig::Cultivation(c) => c.validate(),
            MechanismConfig::Rz(c) => c.validate(),
        }
    }

    /// The same mechanism with every failure probability forced to 0.
    pub fn deterministic(&self) -> Self {
        match self {
            MechanismConfig::Distillation(c) => MechanismConfig::Distillation(DistillationConfig {
                abort_rate: Some(0.0),
                ..c.clone()
            }),
            MechanismConfig::Cultivation(c) => MechanismConfig::Cultivation(CultivationConfig {
                q1: Some(0.0),
                q2: Some(0.0),
                ..c.clone()
            }),
            MechanismConfig::Rz(c) => MechanismConfig::Rz(RzSynthConfig {
                q_round: Some(0.0),
                ..c.clone()
            }),
        }
    }

    /// Re-derives the error-dependent defaults at a new physical error rate
    /// and code distance. `d` sets `d2` for cultivation and `d` for Rz
    /// synthesis; distillation has no distance parameter.
    pub fn rederived(&self, p_phys: f64, d: Option<u32>) -> Self {
        match self {
            MechanismConfig::Distillation(c) => MechanismConfig::Distillation(DistillationConfig {
                p_phys,
                abort_rate: None,
                ..c.clone()
            }),
            MechanismConfig::Cultivation(c) => MechanismConfig::Cultivation(CultivationConfig {
                p_phys,
                d2: d.unwrap_or(c.d2),
                q1: None,
                q2: None,
                t_escape: None,
                ..c.clone()
            }),
            MechanismConfig::Rz(c) => MechanismConfig::Rz(RzSynthConfig {
                p_phys,
                d: d.unwrap_or(c.d),
                q_round: None,
                t_attempt: None,
                ..c.clone()
            }),
        }
    }

    /// Qubit units per production unit under `mode`, unless overridden.
    pub fn unit_cost(&self, mode: UnitMode) -> u64 {
        match (self, mode) {
            (MechanismConfig::Distillation(c), UnitMode::LogicalTiles) => {
                c.cost_per_factory.unwrap_or(LOGICAL_FACTORY_TILES)
            }
            (MechanismConfig::Distillation(c), UnitMode::Physical) => {
                c.cost_per_factory.unwrap_or(PHYSICAL_FACTORY_QUBITS)
            }
            (MechanismConfig::Cultivation(c), UnitMode::LogicalTiles) => {
                c.cost_per_unit.unwrap_or(1)
            }
            (MechanismConfig::Cultivation(c), UnitMode::Physical) => {
                c.cost_per_unit.unwrap_or(tile(c.d2))
            }
            (MechanismConfig::Rz(c), UnitMode::LogicalTiles) => c.cost_per_unit.unwrap_or(1),
            (MechanismConfig::Rz(c), UnitMode::Physical) => c.cost_per_unit.unwrap_or(tile(c.d)),
        }
    }

    /// Qubit units per logical circuit qubit under `mode`.
    pub fn logical_qubit_cost(&self, mode: UnitMode) -> u64 {
        match mode {
            UnitMode::LogicalTiles => 1,
            UnitMode::Physical => tile(match self {
                MechanismConfig::Distillation(_) => DISTILLATION_DISTANCE,
                MechanismConfig::Cultivation(c) => c.d2,
                MechanismConfig::Rz(c) => c.d,
            }),
        }
    }

    /// Cycles from a cold start until the first state can exist.
    pub fn min_latency(&self) -> u64 {
        match self {
            MechanismConfig::Distillation(c) => u64::from(c.t_prod),
            MechanismConfig::Cultivation(c) => u64::from(c.stage1_len() + c.stage2_len()),
            MechanismConfig::Rz(c) => u64::from(c.t_attempt()),
        }
    }

    /// Expected accepted states per cycle per unit, ignoring buffer stalls.
    /// Zero when no attempt can ever succeed.
    pub fn expected_throughput(&self) -> f64 {
        match self {
            MechanismConfig::Distillation(c) => (1.0 - c.abort_rate()) / f64::from(c.t_prod),
            MechanismConfig::Cultivation(c) => {
                let (s1, s2) = (c.s1(), c.s2());
                let (e1, e2) = if c.early_abort {
                    (
                        f64::from(c.t_inject) + expected_rounds(c.q1(), c.r1),
                        f64::from(c.t_escape()) + expected_rounds(c.q2(), c.r2),
                    )
                } else {
                    (f64::from(c.stage1_len()), f64::from(c.stage2_len()))
                };
                s1 * s2 / (e1 + s1 * e2)
            }
            MechanismConfig::Rz(c) => (1.0 - c.q_round()) / f64::from(c.t_attempt()),
        }
    }

    /// Expected cycles per accepted state for one unit; infinite when the
    /// mechanism can never succeed.
    pub fn expected_time_per_state(&self) -> f64 {
        let r = self.expected_throughput();
        if r > 0.0 {
            1.0 / r
        } else {
            f64::INFINITY
        }
    }
}

/// Expected rounds run before the first failure, capped at `r`.
fn expected_rounds(q: f64, r: u32) -> f64 {
    if q <= 0.0 {
        f64::from(r)
    } else {
        (1.0 - (1.0 - q).powi(r as i32)) / q
    }
}
