use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bellcodec::{bell_project, bell_sample, BellOutcome, MeasureMode, OutcomeLedger, Sign};
use crate::channel::{assemble_composite, ChannelVariant, MeasurementSlot, Wire, WireMap};
use crate::error::{Error, Result};
use crate::statevec::{Gate, StateVector, TwoQubitInput};

use super::tables::{lookup_key, NParity, TableKey};
use super::CorrectionRule;

/// Measurement modes for the `n + 2` Bell measurements of a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModePlan {
    /// The same mode for every measurement. A sampling seed is expanded
    /// into one derived seed per measurement.
    Broadcast(MeasureMode),
    /// One mode per measurement, in cascade order.
    PerMeasurement(Vec<MeasureMode>),
}

impl ModePlan {
    pub fn forced(outcomes: &[BellOutcome]) -> Self {
        ModePlan::PerMeasurement(outcomes.iter().map(|o| MeasureMode::Forced(*o)).collect())
    }

    pub fn sample(seed: u64) -> Self {
        ModePlan::Broadcast(MeasureMode::Sample(seed))
    }

    pub fn check_len(&self, total: usize) -> Result<()> {
        if let ModePlan::PerMeasurement(v) = self {
            if v.len() != total {
                return Err(Error::InvalidConfig(format!(
                    "expected {total} measurement modes, got {}",
                    v.len()
                )));
            }
        }
        Ok(())
    }

    pub fn mode_for(&self, slot: usize, total: usize) -> Result<MeasureMode> {
        self.check_len(total)?;
        let mode = match self {
            ModePlan::Broadcast(MeasureMode::Sample(seed)) => MeasureMode::Sample(derive_seed(*seed, slot as u64)),
            ModePlan::Broadcast(m) => *m,
            ModePlan::PerMeasurement(v) => v[slot],
        };
        if mode == MeasureMode::Enumerate {
            return Err(Error::InvalidConfig(
                "a single run cannot enumerate branches; use the exhaustive verifier".into(),
            ));
        }
        Ok(mode)
    }
}

/// SplitMix64 step, used to spread one user seed over several draws.
pub(crate) fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The shrinking register of one run. Each Bell measurement removes its two
/// wires; what is left at the end is the receiver's pair.
#[derive(Debug, Clone)]
pub struct Cascade {
    state: StateVector,
    live: Vec<Wire>,
    probability: f64,
}

impl Cascade {
    pub fn new(state: StateVector, map: &WireMap) -> Self {
        Self {
            state,
            live: map.wires(),
            probability: 1.0,
        }
    }

    fn position(&self, wire: Wire) -> Result<usize> {
        self.live
            .iter()
            .position(|w| *w == wire)
            .ok_or_else(|| Error::InvalidConfig(format!("wire {wire} was already measured")))
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    /// Joint probability of the outcomes observed so far.
    pub fn probability(&self) -> f64 {
        self.probability
    }

    pub fn live_wires(&self) -> &[Wire] {
        &self.live
    }

    pub fn hadamard(&mut self, wire: Wire) -> Result<()> {
        let p = self.position(wire)?;
        self.state = self.state.apply_single(Gate::H, p)?;
        Ok(())
    }

    /// Runs one scheduled measurement, including the variant's Hadamard.
    pub fn measure_slot(&mut self, slot: &MeasurementSlot, mode: MeasureMode) -> Result<BellOutcome> {
        if slot.hadamard_second {
            self.hadamard(slot.second)?;
        }
        let i = self.position(slot.first)?;
        let j = self.position(slot.second)?;
        let branch = match mode {
            MeasureMode::Forced(o) => bell_project(&self.state, i, j, o)?,
            MeasureMode::Sample(seed) => bell_sample(&self.state, i, j, &mut ChaCha8Rng::seed_from_u64(seed))?,
            MeasureMode::Enumerate => return Err(Error::InvalidConfig("enumerate is not a single-branch mode".into())),
        };
        self.state = branch.collapsed;
        self.probability *= branch.probability;
        self.live.retain(|w| *w != slot.first && *w != slot.second);
        Ok(branch.outcome)
    }

    /// The receiver's two wires, `a` first.
    pub fn receiver_state(&self) -> Result<StateVector> {
        if self.live.len() != 2 {
            return Err(Error::InvalidConfig(format!(
                "{} wires still unmeasured",
                self.live.len().saturating_sub(2)
            )));
        }
        Ok(self.state.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    /// Corrections were looked up and applied.
    Reconstructed,
    /// Direct channel: no correction exists for a generic input, the raw
    /// collapsed state is reported.
    EprClassDemo,
    /// The receiver is missing at least one controller's outcome.
    Unreconstructable,
}

/// Full record of one protocol run.
#[derive(Debug, Clone, PartialEq)]
pub struct TeleportTrace {
    pub input: TwoQubitInput,
    pub n: usize,
    pub variant: ChannelVariant,
    pub receiver: usize,
    pub ledger: OutcomeLedger,
    pub v_total: u8,
    pub p_total: Sign,
    pub key: TableKey,
    pub correction: Option<CorrectionRule>,
    /// Joint probability of the observed branch.
    pub probability: f64,
    pub pre_correction: StateVector,
    pub post_correction: StateVector,
    /// `λ` with `post ≈ λ·input`.
    pub global_phase: Complex64,
    pub fidelity: f64,
    pub status: RunStatus,
}

impl TeleportTrace {
    /// Looks up and applies the correction for a completed ledger.
    pub fn finish(
        input: TwoQubitInput,
        map: &WireMap,
        variant: ChannelVariant,
        ledger: OutcomeLedger,
        pre_correction: StateVector,
        probability: f64,
    ) -> Result<Self> {
        let n = map.controllers_count();
        let outcomes = ledger.outcomes();
        let key = TableKey::from_outcomes(&outcomes)?;
        let (v_total, p_total) = ledger.totals()?;
        let (correction, post, status) = match variant {
            ChannelVariant::Direct => (None, pre_correction.clone(), RunStatus::EprClassDemo),
            _ => {
                let rule = lookup_key(key, NParity::of(n));
                (Some(rule), rule.apply(&pre_correction)?, RunStatus::Reconstructed)
            }
        };
        let target = input.to_state();
        Ok(Self {
            input,
            n,
            variant,
            receiver: map.receiver(),
            ledger,
            v_total,
            p_total,
            key,
            correction,
            probability,
            global_phase: post.global_phase(&target)?,
            fidelity: post.fidelity(&target)?,
            pre_correction,
            post_correction: post,
            status,
        })
    }
}

impl TeleportTrace {
    /// Record for a receiver missing some broadcasts. Totals cover only the
    /// outcomes that arrived; the state is left uncorrected.
    pub fn unreconstructable(
        input: TwoQubitInput,
        map: &WireMap,
        variant: ChannelVariant,
        ledger: OutcomeLedger,
        pre_correction: StateVector,
        probability: f64,
    ) -> Result<Self> {
        let key = TableKey::from_outcomes(&ledger.outcomes())?;
        let (v_total, p_total) = ledger.totals()?;
        let target = input.to_state();
        Ok(Self {
            input,
            n: map.controllers_count(),
            variant,
            receiver: map.receiver(),
            ledger,
            v_total,
            p_total,
            key,
            correction: None,
            probability,
            global_phase: pre_correction.global_phase(&target)?,
            fidelity: pre_correction.fidelity(&target)?,
            post_correction: pre_correction.clone(),
            pre_correction,
            status: RunStatus::Unreconstructable,
        })
    }
}

/// One full session with the default roles (agent `n+1` receives).
pub fn run_teleport(
    input: &TwoQubitInput,
    n: usize,
    variant: ChannelVariant,
    modes: &ModePlan,
) -> Result<TeleportTrace> {
    run_with_map(input, &WireMap::new(n), variant, modes)
}

/// One full session with explicit roles.
pub fn run_with_map(
    input: &TwoQubitInput,
    map: &WireMap,
    variant: ChannelVariant,
    modes: &ModePlan,
) -> Result<TeleportTrace> {
    let n = map.controllers_count();
    let (state, _) = assemble_composite(input, n, variant)?;
    let slots = map.measurement_slots(variant);
    modes.check_len(slots.len())?;
    let mut cascade = Cascade::new(state, map);
    let mut ledger = OutcomeLedger::new();
    for (idx, slot) in slots.iter().enumerate() {
        let outcome = cascade.measure_slot(slot, modes.mode_for(idx, slots.len())?)?;
        ledger.push(slot.label(), outcome);
    }
    let pre = cascade.receiver_state()?;
    TeleportTrace::finish(*input, map, variant, ledger, pre, cascade.probability())
}
