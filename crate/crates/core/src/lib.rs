//! Simulation and exhaustive verification of multiparty-controlled
//! teleportation of an arbitrary two-qubit state over two GHZ channels,
//! with the secret-sharing applications built on the same engine.
//!
//! Layers, bottom up: [`statevec`] (dense simulator), [`bellcodec`] (Bell
//! measurement and outcome ledger), [`channel`] (GHZ resources and wire
//! layout), [`protocol`] (cascade, corrections, verifier), [`qss`],
//! [`netsim`] (parties on a message bus) and [`cli`].

pub mod bellcodec;
pub mod channel;
pub mod cli;
pub mod error;
pub mod netsim;
pub mod protocol;
pub mod qss;
pub mod statevec;

pub use bellcodec::{BellOutcome, MeasureMode, OutcomeLedger, Sign};
pub use channel::{ChannelVariant, WireMap};
pub use error::{Error, Result};
pub use protocol::{run_teleport, verify_all_branches, CorrectionRule, ModePlan, TeleportTrace};
pub use statevec::{Gate, StateVector, TwoQubitInput};
