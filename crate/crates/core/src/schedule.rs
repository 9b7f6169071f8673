//! Training schedules: mix weights, context-length stages, and replay.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("alpha range [{min}, {max}] must satisfy 0 <= min <= max <= 1")]
    InvalidAlphaRange { min: f64, max: f64 },
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("step {t} is outside the schedule, which ends at {limit}")]
    StepOutOfRange { t: u64, limit: u64 },
    #[error("length schedule needs at least one stage")]
    EmptyStages,
    #[error("stage {index} does not end after the stage before it")]
    UnsortedStages { index: usize },
    #[error("stage {index} shrinks max_tokens; stages must only grow")]
    DecreasingTokens { index: usize },
    #[error("replay weighting needs at least one task")]
    EmptyReplaySet,
    #[error("task {index} was last trained at step {last_trained}, after now = {now}")]
    FutureTrainingStep {
        index: usize,
        last_trained: u64,
        now: u64,
    },
}

/// Sigmoid ramp from `alpha_min` to `alpha_max` over `t_mid` steps, centered
/// at the halfway point with warmup temperature `tau_warm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingSchedule {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub t_mid: u64,
    pub tau_warm: f64,
}

impl MixingSchedule {
    pub fn new(
        alpha_min: f64,
        alpha_max: f64,
        t_mid: u64,
        tau_warm: f64,
    ) -> Result<Self, ScheduleError> {
        if !(0.0..=1.0).contains(&alpha_min)
            || !(0.0..=1.0).contains(&alpha_max)
            || alpha_min > alpha_max
        {
            return Err(ScheduleError::InvalidAlphaRange {
                min: alpha_min,
                max: alpha_max,
            });
        }
        if t_mid == 0 {
            return Err(ScheduleError::NonPositive("t_mid"));
        }
        if !(tau_warm > 0.0) {
            return Err(ScheduleError::NonPositive("tau_warm"));
        }
        Ok(Self {
            alpha_min,
            alpha_max,
            t_mid,
            tau_warm,
        })
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Fraction of the training mix drawn from the agentic pool at step `t`.
///
/// `alpha(t) = alpha_min + (alpha_max - alpha_min) * sigmoid((t - t_mid/2) / tau_warm)`,
/// defined for `t` in `[0, t_mid]`.
pub fn agentic_mix_weight(t: u64, sched: &MixingSchedule) -> Result<f64, ScheduleError> {
    if t > sched.t_mid {
        return Err(ScheduleError::StepOutOfRange {
            t,
            limit: sched.t_mid,
        });
    }
    let midpoint = sched.t_mid as f64 / 2.0;
    let ramp = sigmoid((t as f64 - midpoint) / sched.tau_warm);
    Ok(sched.alpha_min + (sched.alpha_max - sched.alpha_min) * ramp)
}

/// One stage of the context-length curriculum: `max_tokens` applies to every
/// step up to and including `until_step`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthStage {
    pub until_step: u64,
    pub max_tokens: u64,
}

/// Staged context-length curriculum with strictly increasing stage ends and
/// nondecreasing token caps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthSchedule {
    stages: Vec<LengthStage>,
}

impl LengthSchedule {
    pub fn new(stages: Vec<LengthStage>) -> Result<Self, ScheduleError> {
        if stages.is_empty() {
            return Err(ScheduleError::EmptyStages);
        }
        for index in 1..stages.len() {
            if stages[index].until_step <= stages[index - 1].until_step {
                return Err(ScheduleError::UnsortedStages { index });
            }
            if stages[index].max_tokens < stages[index - 1].max_tokens {
                return Err(ScheduleError::DecreasingTokens { index });
            }
        }
        Ok(Self { stages })
    }

    pub fn stages(&self) -> &[LengthStage] {
        &self.stages
    }

    /// Step of the final stage boundary.
    pub fn last_step(&self) -> u64 {
        self.stages[self.stages.len() - 1].until_step
    }

    /// Token cap in force at step `t`: the first stage whose end is at or
    /// past `t`.
    pub fn max_tokens_at(&self, t: u64) -> Result<u64, ScheduleError> {
        self.stages
            .iter()
            .find(|stage| stage.until_step >= t)
            .map(|stage| stage.max_tokens)
            .ok_or(ScheduleError::StepOutOfRange {
                t,
                limit: self.last_step(),
            })
    }
}

/// Forgetting-curve state for one replayable task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplayState {
    /// Forgetting rate per step.
    pub lambda_f: f64,
    /// Step at which the task was last trained.
    pub last_trained: u64,
}

/// Estimated fraction of the task still retained after `delta_t` steps.
pub fn retention(lambda_f: f64, delta_t: u64) -> f64 {
    (-lambda_f * delta_t as f64).exp()
}

/// Replay sampling weights at step `now`, proportional to how much of each
/// task has decayed: `1 - exp(-lambda_f * delta_t)`, normalized to sum to 1.
/// When every task is fully retained the weights fall back to uniform.
pub fn replay_weights(states: &[ReplayState], now: u64) -> Result<Vec<f64>, ScheduleError> {
    if states.is_empty() {
        return Err(ScheduleError::EmptyReplaySet);
    }
    let mut raw = Vec::with_capacity(states.len());
    for (index, state) in states.iter().enumerate() {
        if state.last_trained > now {
            return Err(ScheduleError::FutureTrainingStep {
                index,
                last_trained: state.last_trained,
                now,
            });
        }
        raw.push(1.0 - retention(state.lambda_f, now - state.last_trained));
    }
    let total: f64 = raw.iter().sum();
    if total == 0.0 {
        let uniform = 1.0 / states.len() as f64;
        return Ok(vec![uniform; states.len()]);
    }
    Ok(raw.into_iter().map(|w| w / total).collect())
}
