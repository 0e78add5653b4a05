//! The teleportation engine: measurement cascade, correction lookup, and
//! exhaustive verification against the tabulated and analytic results.

mod engine;
mod predictor;
pub mod tables;
mod verify;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::statevec::{Gate, StateVector};

pub(crate) use engine::derive_seed;
pub use engine::{run_teleport, run_with_map, Cascade, ModePlan, RunStatus, TeleportTrace};
pub use predictor::{predicted_final, subsystem_coeffs, OutcomeCounts, SubsystemCoeffs};
pub use tables::{correction_lookup, golden_row, golden_table, lookup_key, GoldenRow, NParity, TableKey};
pub use verify::{
    branch_is_invertible, derive_correction_table, verify_all_branches, verify_with_map, walk_branches, BranchFailure,
    DerivedRow, DerivedTable, Leaf, VerifyReport, MAX_VERIFY_CONTROLLERS,
};

/// Local operations `U_a ⊗ U_b` on the receiver's pair, optionally followed
/// by a CNOT with `a` as control and `b` as target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CorrectionRule {
    #[serde(rename = "ua")]
    pub u_on_a: Gate,
    #[serde(rename = "ub")]
    pub u_on_b: Gate,
    #[serde(rename = "cnot")]
    pub apply_cnot: bool,
}

impl CorrectionRule {
    /// All 32 rules built from `U0..U3` and the CNOT flag.
    pub fn search_space() -> impl Iterator<Item = CorrectionRule> {
        Gate::PAULI_CORRECTIONS.into_iter().flat_map(|ua| {
            Gate::PAULI_CORRECTIONS.into_iter().flat_map(move |ub| {
                [false, true].into_iter().map(move |apply_cnot| CorrectionRule {
                    u_on_a: ua,
                    u_on_b: ub,
                    apply_cnot,
                })
            })
        })
    }

    /// Applies the rule to a two-qubit state `(a, b)`.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        let s = state.apply_single(self.u_on_a, 0)?.apply_single(self.u_on_b, 1)?;
        if self.apply_cnot {
            s.apply_cnot(0, 1)
        } else {
            Ok(s)
        }
    }
}

impl fmt::Display for CorrectionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}⊗{}", self.u_on_a, self.u_on_b)?;
        if self.apply_cnot {
            f.write_str(" + CNot")?;
        }
        Ok(())
    }
}
