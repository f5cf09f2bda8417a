//! TSV-to-TSV crosstalk modeling for 3D-IC vertical buses.
//!
//! * [`model`]: transition algebra, the 40-class crosstalk taxonomy and the
//!   planar and TSV delay formulas.
//! * [`layout`]: bit placement on an `R x N` grid, victims and control TSVs.
//! * [`codec`]: the retention codec (`3dcam`) and the uncoded baseline.
//! * [`oracle`]: exhaustive enumeration of all 3x3 transition patterns.
//! * [`trace`]: trace files and the seeded generator.
//! * [`replay`]: lockstep trace replay, run metrics and threshold sweeps.
//! * [`config`] and [`report`]: run configuration and output files.

pub mod codec;
pub mod config;
pub mod error;
pub mod layout;
pub mod model;
pub mod oracle;
pub mod replay;
pub mod report;
pub mod trace;

pub use codec::{
    decode, encode, reset_channel, uncoded_encode, ChannelState, CodecSpec, EncodeResult,
    LinkCodec, SwitchThreshold,
};
pub use error::{Error, Result};
pub use layout::{BitOrder, GridLayout};
pub use model::{
    ceff2d, class_of, delay2d, delay3d, transition_of, Coefficient, CouplingParams, CrosstalkClass,
    Role, Slot, Transition, TransitionPattern, CLASS_COUNT,
};
pub use replay::{normalized_delay, replay, sweep_st, Aggregation, ReplayOptions, RunReport};
pub use trace::{
    generate, parse_binary_trace, parse_text_trace, GeneratorKind, GeneratorSpec, Trace, Word,
};
