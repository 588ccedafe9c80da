//! Per-tree sampling temperature control.
//!
//! The update rule is the swarm-style position update
//!
//! ```text
//! T[n] = w0 * T[n-1] + a1 * (pb[n-1] - x[n]) + a2 * (gb[n-1] - x[n])
//! ```
//!
//! followed by a closed-interval clamp to `[temp_min, temp_max]`. Personal and
//! global bests are maxima over the evaluation history and are folded in
//! *after* the temperature for the next step has been computed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControllerError {
    #[error("non-finite controller input `{name}` = {value}")]
    NonFinite { name: &'static str, value: f64 },
    #[error("invalid controller parameters: {0}")]
    InvalidParams(String),
    #[error("swarm has no trees")]
    EmptySwarm,
}

/// Coefficients and bounds of the temperature update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsoParams {
    pub inertial_weight: f64,
    pub accel_personal: f64,
    pub accel_global: f64,
    pub temp_min: f64,
    pub temp_max: f64,
    pub temp_init: f64,
    /// Optional score that seeds the personal best before the first
    /// observation. `None` means the first observation initializes it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_best: Option<f64>,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self::game24()
    }
}

impl PsoParams {
    /// Arithmetic-puzzle preset: unit inertia, 0.1 gains, start at 0.7.
    pub fn game24() -> Self {
        Self {
            inertial_weight: 1.0,
            accel_personal: 0.1,
            accel_global: 0.1,
            temp_min: 0.1,
            temp_max: 1.0,
            temp_init: 0.7,
            initial_best: None,
        }
    }

    /// Writing preset: unit inertia, -0.005 gains against a 0-100 score.
    pub fn creative_writing() -> Self {
        Self {
            accel_personal: -0.005,
            accel_global: -0.005,
            ..Self::game24()
        }
    }

    /// Same bounds and start, with the difference terms switched off.
    pub fn frozen(self) -> Self {
        Self {
            inertial_weight: 1.0,
            accel_personal: 0.0,
            accel_global: 0.0,
            ..self
        }
    }

    pub fn validate(&self) -> Result<(), ControllerError> {
        let named = [
            ("inertial_weight", self.inertial_weight),
            ("accel_personal", self.accel_personal),
            ("accel_global", self.accel_global),
            ("temp_min", self.temp_min),
            ("temp_max", self.temp_max),
            ("temp_init", self.temp_init),
        ];
        for (name, value) in named {
            check_finite(name, value)?;
        }
        if let Some(best) = self.initial_best {
            check_finite("initial_best", best)?;
        }
        if self.temp_min < 0.0 {
            return Err(ControllerError::InvalidParams(format!(
                "temp_min {} is negative",
                self.temp_min
            )));
        }
        if !(self.temp_min <= self.temp_init && self.temp_init <= self.temp_max) {
            return Err(ControllerError::InvalidParams(format!(
                "need temp_min <= temp_init <= temp_max, got {} / {} / {}",
                self.temp_min, self.temp_init, self.temp_max
            )));
        }
        Ok(())
    }
}

fn check_finite(name: &'static str, value: f64) -> Result<(), ControllerError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(ControllerError::NonFinite { name, value })
    }
}

/// Closed-interval clamp.
pub fn clamp(t: f64, t_min: f64, t_max: f64) -> f64 {
    t.max(t_min).min(t_max)
}

/// Unclamped value of the update rule.
pub fn raw_update(params: &PsoParams, temp: f64, pb: f64, x: f64, gb: f64) -> f64 {
    params.inertial_weight * temp + params.accel_personal * (pb - x) + params.accel_global * (gb - x)
}

/// One entry per temperature update: the temperature it produced and the
/// inputs it saw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub step: usize,
    pub temperature: f64,
    pub x: f64,
    pub pb: f64,
    pub gb: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureState {
    pub current_temp: f64,
    pub personal_best: Option<f64>,
    pub step_index: usize,
    pub history: Vec<HistoryEntry>,
}

impl TemperatureState {
    pub fn new(params: &PsoParams) -> Self {
        Self {
            current_temp: params.temp_init,
            personal_best: params.initial_best,
            step_index: 0,
            history: Vec::new(),
        }
    }

    /// Personal best as seen by an update that observes `x`: the stored value,
    /// or `x` itself before anything was recorded.
    pub fn personal_best_or(&self, x: f64) -> f64 {
        self.personal_best.unwrap_or(x)
    }
}

/// Computes the next temperature from `x` and the *previous* bests, clamps it,
/// stores it as the current temperature and appends a history entry. The
/// personal best is left untouched; see [`update_personal_best`].
pub fn update_temperature(
    params: &PsoParams,
    state: &mut TemperatureState,
    x: f64,
    gb: f64,
) -> Result<f64, ControllerError> {
    check_finite("x", x)?;
    check_finite("gb", gb)?;
    check_finite("current_temp", state.current_temp)?;
    let pb = state.personal_best_or(x);
    check_finite("pb", pb)?;
    let next = clamp(
        raw_update(params, state.current_temp, pb, x, gb),
        params.temp_min,
        params.temp_max,
    );
    state.history.push(HistoryEntry {
        step: state.step_index,
        temperature: next,
        x,
        pb,
        gb,
    });
    state.current_temp = next;
    state.step_index += 1;
    Ok(next)
}

/// `pb <- max(pb, x)`; the first observation initializes it.
pub fn update_personal_best(state: &mut TemperatureState, x: f64) {
    state.personal_best = Some(match state.personal_best {
        Some(pb) => pb.max(x),
        None => x,
    });
}

/// Personal bests of every tree plus their running maximum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwarmState {
    pub personal_bests: Vec<Option<f64>>,
    pub global_best: Option<f64>,
}

impl SwarmState {
    pub fn new(tree_count: usize) -> Result<Self, ControllerError> {
        if tree_count == 0 {
            return Err(ControllerError::EmptySwarm);
        }
        Ok(Self {
            personal_bests: vec![None; tree_count],
            global_best: None,
        })
    }

    pub fn tree_count(&self) -> usize {
        self.personal_bests.len()
    }

    /// Global best as seen by tree updates that observe `x`.
    pub fn global_best_or(&self, x: f64) -> f64 {
        self.global_best.unwrap_or(x)
    }
}

/// `gb <- max(gb, max(pbs))`. Never decreases.
pub fn update_global_best(swarm: &mut SwarmState) -> Option<f64> {
    let best = swarm
        .personal_bests
        .iter()
        .flatten()
        .copied()
        .chain(swarm.global_best)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
    swarm.global_best = best;
    best
}

/// How a tree picks the temperature for its next step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ControllerKind {
    Pso { params: PsoParams },
    Fixed { temperature: f64 },
    Random { t_min: f64, t_max: f64, seed: u64 },
}

/// A temperature source plus the personal-best bookkeeping every tree keeps,
/// whichever way its temperature is chosen.
#[derive(Debug, Clone)]
pub struct Controller {
    kind: ControllerKind,
    state: TemperatureState,
    rng: Option<ChaCha8Rng>,
}

impl Controller {
    pub fn pso(params: PsoParams) -> Result<Self, ControllerError> {
        params.validate()?;
        Ok(Self {
            kind: ControllerKind::Pso { params },
            state: TemperatureState::new(&params),
            rng: None,
        })
    }

    /// Constant temperature, the plain tree-of-thought baseline.
    pub fn fixed(temperature: f64) -> Result<Self, ControllerError> {
        check_finite("temperature", temperature)?;
        if temperature < 0.0 {
            return Err(ControllerError::InvalidParams(format!(
                "fixed temperature {temperature} is negative"
            )));
        }
        Ok(Self {
            kind: ControllerKind::Fixed { temperature },
            state: TemperatureState {
                current_temp: temperature,
                personal_best: None,
                step_index: 0,
                history: Vec::new(),
            },
            rng: None,
        })
    }

    /// Independent uniform draw from the open interval `(t_min, t_max)` at
    /// every step, including the first.
    pub fn random(t_min: f64, t_max: f64, seed: u64) -> Result<Self, ControllerError> {
        check_finite("t_min", t_min)?;
        check_finite("t_max", t_max)?;
        if !(t_min < t_max) || t_min < 0.0 {
            return Err(ControllerError::InvalidParams(format!(
                "random range ({t_min}, {t_max}) is empty or negative"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let first = draw_open(&mut rng, t_min, t_max);
        Ok(Self {
            kind: ControllerKind::Random { t_min, t_max, seed },
            state: TemperatureState {
                current_temp: first,
                personal_best: None,
                step_index: 0,
                history: Vec::new(),
            },
            rng: Some(rng),
        })
    }

    pub fn from_kind(kind: ControllerKind) -> Result<Self, ControllerError> {
        match kind {
            ControllerKind::Pso { params } => Self::pso(params),
            ControllerKind::Fixed { temperature } => Self::fixed(temperature),
            ControllerKind::Random { t_min, t_max, seed } => Self::random(t_min, t_max, seed),
        }
    }

    pub fn kind(&self) -> &ControllerKind {
        &self.kind
    }

    pub fn temperature(&self) -> f64 {
        self.state.current_temp
    }

    pub fn state(&self) -> &TemperatureState {
        &self.state
    }

    pub fn personal_best(&self) -> Option<f64> {
        self.state.personal_best
    }

    /// Produces the temperature for the next step after observing `x`, with
    /// `gb` the global best from before this step.
    pub fn advance(&mut self, x: f64, gb: f64) -> Result<f64, ControllerError> {
        match self.kind {
            ControllerKind::Pso { params } => update_temperature(&params, &mut self.state, x, gb),
            ControllerKind::Fixed { temperature } => {
                self.record(temperature, x, gb)?;
                Ok(temperature)
            }
            ControllerKind::Random { t_min, t_max, .. } => {
                let rng = self.rng.as_mut().expect("random controller owns an rng");
                let t = draw_open(rng, t_min, t_max);
                self.record(t, x, gb)?;
                Ok(t)
            }
        }
    }

    pub fn observe_best(&mut self, x: f64) {
        update_personal_best(&mut self.state, x);
    }

    fn record(&mut self, temperature: f64, x: f64, gb: f64) -> Result<(), ControllerError> {
        check_finite("x", x)?;
        check_finite("gb", gb)?;
        let pb = self.state.personal_best_or(x);
        self.state.history.push(HistoryEntry {
            step: self.state.step_index,
            temperature,
            x,
            pb,
            gb,
        });
        self.state.current_temp = temperature;
        self.state.step_index += 1;
        Ok(())
    }
}

pub fn make_fixed_controller(t0: f64) -> Result<Controller, ControllerError> {
    Controller::fixed(t0)
}

pub fn make_random_controller(t_min: f64, t_max: f64, seed: u64) -> Result<Controller, ControllerError> {
    Controller::random(t_min, t_max, seed)
}

fn draw_open(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    loop {
        let t = rng.random_range(lo..hi);
        if t > lo {
            return t;
        }
    }
}
