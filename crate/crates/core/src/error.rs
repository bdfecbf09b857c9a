use crate::controller::Resonance;
use crate::vehicle::LengthParams;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("length {name} must be positive and finite, got {value}")]
    InvalidLength { name: &'static str, value: f64 },

    #[error("invalid gain {name} = {value}")]
    InvalidGain { name: &'static str, value: f64 },

    #[error("field evaluation produced a non-finite value (singular input)")]
    NonFinite,

    #[error("bracket word must be non-empty and use only letters 1 and 2")]
    InvalidWord,

    #[error("bracket word of length {len} exceeds the depth cap of {max}")]
    WordTooLong { len: usize, max: usize },

    #[error("coordinate change is singular for lengths {0:?}")]
    SingularTransform(LengthParams),

    #[error("frequency multipliers violate the no-resonance condition: {0}")]
    Resonance(Resonance),

    #[error("state became non-finite at node {node}; last good time {last_good_time}")]
    BlowUp { node: usize, last_good_time: f64 },

    #[error("need at least {need} samples, got {have}")]
    InsufficientSamples { have: usize, need: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
