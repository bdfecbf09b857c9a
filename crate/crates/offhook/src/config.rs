//! Experiment configuration: a JSON document plus flag overrides.

use std::path::{Path, PathBuf};

use offhook_core::approximation::StateZ;
use offhook_core::sim::Frame;
use offhook_core::{
    x_to_z, z_to_x, ControlGains, ControlInput, IntegratorConfig, LengthParams, StateX,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    NilpotentClosedLoop,
    OriginalOpenLoop,
    OriginalClosedLoop,
    OrderStudy,
    Verify,
    Params,
}

impl Mode {
    pub fn label(&self) -> &'static str {
        match self {
            Mode::NilpotentClosedLoop => "nilpotent-closed-loop",
            Mode::OriginalOpenLoop => "original-open-loop",
            Mode::OriginalClosedLoop => "original-closed-loop",
            Mode::OrderStudy => "order-study",
            Mode::Verify => "verify",
            Mode::Params => "params",
        }
    }
}

/// Initial state in either the original or the privileged coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub frame: Frame,
    pub values: [f64; 5],
}

impl InitialState {
    pub fn as_z(&self, p: &LengthParams) -> StateZ {
        match self.frame {
            Frame::Z => StateZ(self.values),
            Frame::X => x_to_z(p, &StateX(self.values)),
        }
    }

    pub fn as_x(&self, p: &LengthParams) -> Result<StateX, CliError> {
        match self.frame {
            Frame::X => Ok(StateX(self.values)),
            Frame::Z => z_to_x(p, &StateZ(self.values)).map_err(CliError::config),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lengths: LengthParams,
    pub gains: ControlGains,
    pub initial_state: InitialState,
    /// Horizon in sampling periods.
    pub periods: usize,
    /// RK4 substeps per period; derived from the gains when absent.
    pub substeps: Option<usize>,
    pub record_stride: usize,
    pub mode: Mode,
    /// Output directory.
    pub out: PathBuf,
    /// Sampling periods of the order study, decreasing.
    pub eps_list: Vec<f64>,
    /// Constant input of open-loop runs.
    pub open_loop_input: ControlInput,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            lengths: LengthParams::UNIT,
            gains: ControlGains::REFERENCE,
            initial_state: InitialState {
                frame: Frame::Z,
                values: [1.0, -2.0, 2.0, -1.0, 1.0],
            },
            periods: 300,
            substeps: None,
            record_stride: 1,
            mode: Mode::NilpotentClosedLoop,
            out: PathBuf::from("out"),
            eps_list: vec![0.1, 0.05, 0.025, 0.0125],
            open_loop_input: ControlInput::new(1.0, 0.0),
        }
    }
}

/// Long-form flags that override the configuration document.
#[derive(Clone, Debug, Default, clap::Args)]
pub struct Overrides {
    /// JSON configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Hook offset of trailer 1 behind the car axle.
    #[arg(long)]
    pub d0: Option<f64>,
    /// Hook offset of trailer 2 behind the trailer-1 axle.
    #[arg(long)]
    pub d1: Option<f64>,
    /// Drawbar length of trailer 1.
    #[arg(long)]
    pub l1: Option<f64>,
    /// Drawbar length of trailer 2.
    #[arg(long)]
    pub l2: Option<f64>,
    /// Contraction gain.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Sampling period.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Frequency multiplier of the first control pair.
    #[arg(long)]
    pub k12: Option<u32>,
    /// Frequency multiplier of the second control pair.
    #[arg(long)]
    pub k112: Option<u32>,
    /// Frequency multiplier of the third control pair.
    #[arg(long)]
    pub k1112: Option<u32>,
    /// Experiment mode.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Number of sampling periods.
    #[arg(long)]
    pub periods: Option<usize>,
    /// RK4 substeps per period.
    #[arg(long)]
    pub substeps: Option<usize>,
    /// Keep every n-th RK4 node in the trajectory.
    #[arg(long)]
    pub record_stride: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Initial state in privileged coordinates, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        conflicts_with = "x0"
    )]
    pub z0: Option<Vec<f64>>,
    /// Initial state in vehicle coordinates, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    /// Order-study sampling periods, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    /// Write the effective configuration to this file.
    #[arg(long)]
    pub dump_config: Option<PathBuf>,
}

fn read_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

impl ExperimentConfig {
    /// Loads the document named by `--config` (or the defaults), applies
    /// the flags and validates the result.
    pub fn resolve(o: &Overrides) -> Result<Self, CliError> {
        let mut c = match &o.config {
            Some(path) => read_config(path)?,
            None => ExperimentConfig::default(),
        };
        let l = &mut c.lengths;
        for (slot, v) in [
            (&mut l.d0, o.d0),
            (&mut l.d1, o.d1),
            (&mut l.l1, o.l1),
            (&mut l.l2, o.l2),
        ] {
            if let Some(v) = v {
                *slot = v;
            }
        }
        let g = &mut c.gains;
        if let Some(v) = o.gamma {
            g.gamma = v;
        }
        if let Some(v) = o.epsilon {
            g.epsilon = v;
        }
        for (slot, v) in [
            (&mut g.k12, o.k12),
            (&mut g.k112, o.k112),
            (&mut g.k1112, o.k1112),
        ] {
            if let Some(v) = v {
                *slot = v;
            }
        }
        if let Some(m) = o.mode {
            c.mode = m;
        }
        if let Some(n) = o.periods {
            c.periods = n;
        }
        if o.substeps.is_some() {
            c.substeps = o.substeps;
        }
        if let Some(s) = o.record_stride {
            c.record_stride = s;
        }
        if let Some(out) = &o.out {
            c.out = out.clone();
        }
        if let Some(v) = &o.z0 {
            c.initial_state = InitialState {
                frame: Frame::Z,
                values: five(v)?,
            };
        }
        if let Some(v) = &o.x0 {
            c.initial_state = InitialState {
                frame: Frame::X,
                values: five(v)?,
            };
        }
        if let Some(e) = &o.eps {
            c.eps_list = e.clone();
        }
        c.validate()?;
        if let Some(path) = &o.dump_config {
            let text = serde_json::to_string_pretty(&c).map_err(CliError::io)?;
            std::fs::write(path, text + "\n")
                .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.lengths.validate().map_err(CliError::config)?;
        self.gains.validate().map_err(CliError::config)?;
        if self.periods == 0 {
            return Err(CliError::config("periods must be at least 1"));
        }
        if self.substeps == Some(0) {
            return Err(CliError::config("substeps must be at least 1"));
        }
        if self.record_stride == 0 {
            return Err(CliError::config("record_stride must be at least 1"));
        }
        if !self.initial_state.values.iter().all(|v| v.is_finite()) {
            return Err(CliError::config("initial state must be finite"));
        }
        if !self.open_loop_input.is_finite() {
            return Err(CliError::config("open-loop input must be finite"));
        }
        if self.eps_list.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(CliError::config("order-study epsilons must be positive"));
        }
        Ok(())
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            substeps_per_period: self
                .substeps
                .unwrap_or_else(|| self.gains.default_substeps()),
            record_stride: self.record_stride,
        }
    }
}

fn five(v: &[f64]) -> Result<[f64; 5], CliError> {
    v.try_into()
        .map_err(|_| CliError::config(format!("expected 5 state components, got {}", v.len())))
}
