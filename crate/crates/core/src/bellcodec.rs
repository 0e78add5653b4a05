//! Bell basis, Bell-basis measurement and the bit-value / parity bookkeeping
//! that keys the correction tables.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevec::StateVector;

/// Probabilities below this are treated as exact zeros produced by
/// destructive interference.
pub const ZERO_PROBABILITY: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BellOutcome {
    #[serde(rename = "phi+")]
    PhiPlus,
    #[serde(rename = "phi-")]
    PhiMinus,
    #[serde(rename = "psi+")]
    PsiPlus,
    #[serde(rename = "psi-")]
    PsiMinus,
}

/// A `±` sign, the parity of a Bell outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    /// `+ → 0`, `− → 1`.
    pub fn bit(self) -> u8 {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

impl Mul for Sign {
    type Output = Sign;

    fn mul(self, rhs: Sign) -> Sign {
        if self == rhs {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

impl FromStr for Sign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+" | "+1" => Ok(Sign::Plus),
            "-" | "−" | "-1" => Ok(Sign::Minus),
            other => Err(Error::InvalidConfig(format!("not a sign: {other:?}"))),
        }
    }
}

impl BellOutcome {
    pub const ALL: [BellOutcome; 4] = [
        BellOutcome::PhiPlus,
        BellOutcome::PhiMinus,
        BellOutcome::PsiPlus,
        BellOutcome::PsiMinus,
    ];

    /// `0` for the parallel states `Φ±`, `1` for the antiparallel `Ψ±`.
    pub fn bit_value(self) -> u8 {
        match self {
            BellOutcome::PhiPlus | BellOutcome::PhiMinus => 0,
            BellOutcome::PsiPlus | BellOutcome::PsiMinus => 1,
        }
    }

    /// The sign inside the superposition.
    pub fn parity(self) -> Sign {
        match self {
            BellOutcome::PhiPlus | BellOutcome::PsiPlus => Sign::Plus,
            BellOutcome::PhiMinus | BellOutcome::PsiMinus => Sign::Minus,
        }
    }

    pub fn from_value_parity(v: u8, p: Sign) -> Self {
        match (v & 1, p) {
            (0, Sign::Plus) => BellOutcome::PhiPlus,
            (0, Sign::Minus) => BellOutcome::PhiMinus,
            (_, Sign::Plus) => BellOutcome::PsiPlus,
            (_, Sign::Minus) => BellOutcome::PsiMinus,
        }
    }

    /// Position in `ALL`.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn amplitudes(self) -> [Complex64; 4] {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let z = Complex64::new(0.0, 0.0);
        match self {
            BellOutcome::PhiPlus => [h, z, z, h],
            BellOutcome::PhiMinus => [h, z, z, -h],
            BellOutcome::PsiPlus => [z, h, h, z],
            BellOutcome::PsiMinus => [z, h, -h, z],
        }
    }

    pub fn state(self) -> StateVector {
        bell_state(self)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BellOutcome::PhiPlus => "Φ+",
            BellOutcome::PhiMinus => "Φ-",
            BellOutcome::PsiPlus => "Ψ+",
            BellOutcome::PsiMinus => "Ψ-",
        }
    }

    pub fn ascii(self) -> &'static str {
        match self {
            BellOutcome::PhiPlus => "phi+",
            BellOutcome::PhiMinus => "phi-",
            BellOutcome::PsiPlus => "psi+",
            BellOutcome::PsiMinus => "psi-",
        }
    }
}

impl fmt::Display for BellOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for BellOutcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().replace('−', "-");
        match t.to_lowercase().as_str() {
            "phi+" | "φ+" | "phiplus" => Ok(BellOutcome::PhiPlus),
            "phi-" | "φ-" | "phiminus" => Ok(BellOutcome::PhiMinus),
            "psi+" | "ψ+" | "psiplus" => Ok(BellOutcome::PsiPlus),
            "psi-" | "ψ-" | "psiminus" => Ok(BellOutcome::PsiMinus),
            _ => Err(Error::InvalidConfig(format!("not a Bell outcome: {s:?}"))),
        }
    }
}

pub fn bell_state(outcome: BellOutcome) -> StateVector {
    StateVector::from_amplitudes(outcome.amplitudes().to_vec()).expect("Bell states are normalized")
}

pub fn bit_value(outcome: BellOutcome) -> u8 {
    outcome.bit_value()
}

pub fn parity(outcome: BellOutcome) -> Sign {
    outcome.parity()
}

/// XOR of bit values and product of parities.
pub fn ledger_totals(outcomes: &[BellOutcome]) -> Result<(u8, Sign)> {
    if outcomes.is_empty() {
        return Err(Error::EmptyLedger);
    }
    Ok(outcomes
        .iter()
        .fold((0u8, Sign::Plus), |(v, p), o| (v ^ o.bit_value(), p * o.parity())))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub label: String,
    pub outcome: BellOutcome,
}

/// Published Bell outcomes in measurement order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeLedger {
    entries: Vec<LedgerEntry>,
}

impl OutcomeLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, label: impl Into<String>, outcome: BellOutcome) {
        self.entries.push(LedgerEntry {
            label: label.into(),
            outcome,
        });
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn outcomes(&self) -> Vec<BellOutcome> {
        self.entries.iter().map(|e| e.outcome).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<BellOutcome> {
        self.entries.iter().find(|e| e.label == label).map(|e| e.outcome)
    }

    pub fn totals(&self) -> Result<(u8, Sign)> {
        ledger_totals(&self.outcomes())
    }

    pub fn v_total(&self) -> Result<u8> {
        Ok(self.totals()?.0)
    }

    pub fn p_total(&self) -> Result<Sign> {
        Ok(self.totals()?.1)
    }
}

/// How a Bell measurement picks its branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureMode {
    /// Born-rule draw from a generator seeded with this value.
    Sample(u64),
    /// Post-select the given outcome; fails if it has zero probability.
    Forced(BellOutcome),
    /// Every branch with nonzero probability.
    Enumerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub outcome: BellOutcome,
    pub probability: f64,
    pub collapsed: StateVector,
}

/// Unnormalized projections onto all four Bell states, with probabilities.
fn project_all(state: &StateVector, i: usize, j: usize) -> Result<Vec<(BellOutcome, f64, Vec<Complex64>)>> {
    BellOutcome::ALL
        .iter()
        .map(|&o| {
            let raw = state.partial_inner(&bell_state(o), i, j)?;
            let p = raw.iter().map(|a| a.norm_sqr()).sum();
            Ok((o, p, raw))
        })
        .collect()
}

fn into_branch(outcome: BellOutcome, probability: f64, raw: Vec<Complex64>) -> Branch {
    Branch {
        outcome,
        probability,
        collapsed: StateVector::normalized(raw).expect("nonzero projection"),
    }
}

/// Projects onto one specific Bell outcome.
pub fn bell_project(state: &StateVector, i: usize, j: usize, outcome: BellOutcome) -> Result<Branch> {
    let raw = state.partial_inner(&bell_state(outcome), i, j)?;
    let p: f64 = raw.iter().map(|a| a.norm_sqr()).sum();
    if p <= ZERO_PROBABILITY {
        return Err(Error::ImpossibleBranch { outcome, i, j });
    }
    Ok(into_branch(outcome, p, raw))
}

/// Born-rule draw using a caller-supplied generator.
pub fn bell_sample<R: Rng + ?Sized>(state: &StateVector, i: usize, j: usize, rng: &mut R) -> Result<Branch> {
    let all = project_all(state, i, j)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut chosen = None;
    for (idx, (_, p, _)) in all.iter().enumerate() {
        if *p <= ZERO_PROBABILITY {
            continue;
        }
        chosen = Some(idx);
        acc += p;
        if u < acc {
            break;
        }
    }
    let idx = chosen.expect("probabilities of a normalized state sum to one");
    let (o, p, raw) = all.into_iter().nth(idx).expect("index in range");
    Ok(into_branch(o, p, raw))
}

/// Bell-basis measurement of wires `(i, j)`; the first listed wire is the
/// first qubit of the Bell pair.
pub fn bell_measure(state: &StateVector, i: usize, j: usize, mode: MeasureMode) -> Result<Vec<Branch>> {
    match mode {
        MeasureMode::Forced(o) => Ok(vec![bell_project(state, i, j, o)?]),
        MeasureMode::Sample(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(vec![bell_sample(state, i, j, &mut rng)?])
        }
        MeasureMode::Enumerate => Ok(project_all(state, i, j)?
            .into_iter()
            .filter(|(_, p, _)| *p > ZERO_PROBABILITY)
            .map(|(o, p, raw)| into_branch(o, p, raw))
            .collect()),
    }
}
