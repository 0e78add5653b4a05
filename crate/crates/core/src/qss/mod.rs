//! Secret sharing on top of the teleportation engine: a classical two-bit
//! secret carried by a Bell state, an arbitrary two-qubit quantum secret,
//! and the channel check run before either.

mod setup;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bellcodec::{BellOutcome, MeasureMode, OutcomeLedger, Sign};
use crate::channel::{assemble_composite, ChannelVariant, WireMap};
use crate::error::{Error, Result};
use crate::protocol::{lookup_key, run_with_map, walk_branches, Cascade, ModePlan, NParity, TableKey, TeleportTrace};
use crate::statevec::{Gate, StateVector, TwoQubitInput, STATE_TOL};

pub use setup::{setup_channel, ChannelReport, ChannelSetup, Decision, EavesdropModel};

/// Two classical bits written in the code alphabet `0+, 1−, 0−, 1+`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClassicalMessage {
    pub digit: u8,
    pub sign: Sign,
}

impl ClassicalMessage {
    pub const ALL: [ClassicalMessage; 4] = [
        ClassicalMessage {
            digit: 0,
            sign: Sign::Plus,
        },
        ClassicalMessage {
            digit: 1,
            sign: Sign::Minus,
        },
        ClassicalMessage {
            digit: 0,
            sign: Sign::Minus,
        },
        ClassicalMessage {
            digit: 1,
            sign: Sign::Plus,
        },
    ];

    /// `[digit, sign bit]` with `+ → 0`, `− → 1`.
    pub fn bits(self) -> [u8; 2] {
        [self.digit, self.sign.bit()]
    }
}

impl fmt::Display for ClassicalMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.digit, self.sign)
    }
}

impl FromStr for ClassicalMessage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().replace('−', "-");
        let mut chars = t.chars();
        let (Some(d), Some(sg), None) = (chars.next(), chars.next(), chars.next()) else {
            return Err(Error::UnknownCode(s.to_string()));
        };
        let digit = match d {
            '0' => 0,
            '1' => 1,
            _ => return Err(Error::UnknownCode(s.to_string())),
        };
        let sign = sg.to_string().parse().map_err(|_| Error::UnknownCode(s.to_string()))?;
        Ok(ClassicalMessage { digit, sign })
    }
}

pub fn encode_classical(msg: ClassicalMessage) -> BellOutcome {
    match (msg.digit, msg.sign) {
        (0, Sign::Plus) => BellOutcome::PhiPlus,
        (1, Sign::Minus) => BellOutcome::PhiMinus,
        (0, Sign::Minus) => BellOutcome::PsiPlus,
        _ => BellOutcome::PsiMinus,
    }
}

pub fn message_for(carrier: BellOutcome) -> ClassicalMessage {
    ClassicalMessage::ALL[carrier.index()]
}

pub fn carrier_input(carrier: BellOutcome) -> TwoQubitInput {
    let [a, b, c, d] = carrier.amplitudes();
    TwoQubitInput::new(a, b, c, d).expect("Bell states are normalized")
}

/// What the receiver reads off his pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BobRecord {
    /// Bell-basis result, used for an even controller count.
    Bell(BellOutcome),
    /// `σx` on `a` and `σz` on `b`, used for an odd controller count.
    Product { x: Sign, z: u8 },
}

impl fmt::Display for BobRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BobRecord::Bell(o) => write!(f, "{o}"),
            BobRecord::Product { x, z } => write!(f, "{x}x,{z}z"),
        }
    }
}

fn product_state(x: Sign, z: u8) -> StateVector {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let xa = [h, h * x.as_f64()];
    let zb = [(z == 0) as u8 as f64, (z == 1) as u8 as f64];
    let amps = (0..4).map(|k| Complex64::new(xa[k >> 1] * zb[k & 1], 0.0)).collect();
    StateVector::from_amplitudes(amps).expect("product of unit vectors")
}

/// The receiver's measurement basis for a parity class.
fn bob_basis(parity: NParity) -> Vec<(BobRecord, StateVector)> {
    match parity {
        NParity::Even => BellOutcome::ALL
            .iter()
            .map(|&o| (BobRecord::Bell(o), o.state()))
            .collect(),
        NParity::Odd => [Sign::Plus, Sign::Minus]
            .into_iter()
            .flat_map(|x| [0u8, 1].map(move |z| (BobRecord::Product { x, z }, product_state(x, z))))
            .collect(),
    }
}

/// Born-rule measurement of the receiver's pair.
pub fn bob_measure<R: Rng + ?Sized>(state: &StateVector, parity: NParity, rng: &mut R) -> Result<BobRecord> {
    let basis = bob_basis(parity);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = None;
    for (rec, s) in &basis {
        let p = s.fidelity(state)?;
        if p <= STATE_TOL {
            continue;
        }
        last = Some(*rec);
        acc += p;
        if u < acc {
            return Ok(*rec);
        }
    }
    last.ok_or_else(|| Error::InconsistentRecord("receiver state has no support".into()))
}

/// The receiver's result when it is certain, which holds for every Bell
/// carrier and every branch.
pub fn bob_certain(state: &StateVector, parity: NParity) -> Result<BobRecord> {
    for (rec, s) in bob_basis(parity) {
        if 1.0 - s.fidelity(state)? <= STATE_TOL {
            return Ok(rec);
        }
    }
    Err(Error::InconsistentRecord(
        "receiver's result is not deterministic".into(),
    ))
}

fn pauli_index(v_total: u8, p_total: Sign) -> Gate {
    Gate::PAULI_CORRECTIONS[((v_total as usize & 1) << 1) | p_total.bit() as usize]
}

/// Receiver's state for a carrier and ledger totals: `(U0⊗Uj)Ψ_c` for even
/// controller counts, followed by a CNOT for odd ones.
pub fn classical_final_state(carrier: BellOutcome, v_total: u8, p_total: Sign, parity: NParity) -> Result<StateVector> {
    let s = carrier.state().apply_single(pauli_index(v_total, p_total), 1)?;
    match parity {
        NParity::Even => Ok(s),
        NParity::Odd => s.apply_cnot(0, 1),
    }
}

fn classify_bell(state: &StateVector) -> Result<BellOutcome> {
    for o in BellOutcome::ALL {
        if 1.0 - o.state().fidelity(state)? <= STATE_TOL {
            return Ok(o);
        }
    }
    Err(Error::InconsistentRecord("not a Bell state".into()))
}

/// Recovers the message from the published totals and the receiver's result.
pub fn decode(v_total: u8, p_total: Sign, bob: BobRecord, parity: NParity) -> Result<ClassicalMessage> {
    let observed = match (parity, bob) {
        (NParity::Even, BobRecord::Bell(o)) => o.state(),
        (NParity::Odd, BobRecord::Product { x, z }) => product_state(x, z).apply_cnot(0, 1)?,
        (p, r) => {
            return Err(Error::InconsistentRecord(format!(
                "result {r} does not belong to the {p} measurement"
            )))
        }
    };
    let carrier = classify_bell(&observed.apply_single(pauli_index(v_total, p_total), 1)?)?;
    Ok(message_for(carrier))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QssTranscript {
    pub message: ClassicalMessage,
    pub carrier: BellOutcome,
    pub n: usize,
    pub ledger: OutcomeLedger,
    pub v_total: u8,
    pub p_total: Sign,
    pub bob: BobRecord,
    pub decoded: ClassicalMessage,
}

/// One classical-secret session. Everybody, the receiver included, measures.
pub fn qss_run(msg: ClassicalMessage, n: usize, modes: &ModePlan) -> Result<(ClassicalMessage, QssTranscript)> {
    let carrier = encode_classical(msg);
    let map = WireMap::new(n);
    let variant = ChannelVariant::XSecond;
    let (state, _) = assemble_composite(&carrier_input(carrier), n, variant)?;
    let slots = map.measurement_slots(variant);
    modes.check_len(slots.len())?;
    let mut cascade = Cascade::new(state, &map);
    let mut ledger = OutcomeLedger::new();
    for (idx, slot) in slots.iter().enumerate() {
        let outcome = cascade.measure_slot(slot, modes.mode_for(idx, slots.len())?)?;
        ledger.push(slot.label(), outcome);
    }
    let parity = NParity::of(n);
    let pre = cascade.receiver_state()?;
    let bob = match modes {
        ModePlan::Broadcast(MeasureMode::Sample(seed)) => bob_measure(
            &pre,
            parity,
            &mut ChaCha8Rng::seed_from_u64(crate::protocol::derive_seed(*seed, slots.len() as u64)),
        )?,
        _ => bob_certain(&pre, parity)?,
    };
    let (v_total, p_total) = ledger.totals()?;
    let decoded = decode(v_total, p_total, bob, parity)?;
    Ok((
        decoded,
        QssTranscript {
            message: msg,
            carrier,
            n,
            ledger,
            v_total,
            p_total,
            bob,
            decoded,
        },
    ))
}

/// Exhaustive classical round trip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QssSweep {
    pub message: ClassicalMessage,
    pub n: usize,
    pub branches: usize,
    pub decoded_correctly: usize,
    /// Branches whose receiver state matched the tabulated `Ψ_f`.
    pub matched_table: usize,
}

impl QssSweep {
    pub fn all_correct(&self) -> bool {
        self.branches == 4usize.pow(self.n as u32 + 2)
            && self.decoded_correctly == self.branches
            && self.matched_table == self.branches
    }
}

pub fn qss_exhaustive(msg: ClassicalMessage, n: usize) -> Result<QssSweep> {
    let carrier = encode_classical(msg);
    let parity = NParity::of(n);
    let leaves = walk_branches(&carrier_input(carrier), &WireMap::new(n), ChannelVariant::XSecond)?;
    let mut sweep = QssSweep {
        message: msg,
        n,
        branches: leaves.len(),
        decoded_correctly: 0,
        matched_table: 0,
    };
    for leaf in &leaves {
        let key = TableKey::from_outcomes(&leaf.outcomes)?;
        let expect = classical_final_state(carrier, key.v_total, key.p_total, parity)?;
        if leaf.state.equal_up_to_global_phase(&expect, STATE_TOL)? {
            sweep.matched_table += 1;
        }
        let decoded = decode(key.v_total, key.p_total, bob_certain(&leaf.state, parity)?, parity)?;
        if decoded == msg {
            sweep.decoded_correctly += 1;
        }
    }
    Ok(sweep)
}

/// Quantum-secret mode: any of the `n + 1` agents can be the one who
/// rebuilds the state; the others act as controllers.
pub fn share_quantum_secret(
    input: &TwoQubitInput,
    n: usize,
    receiver: usize,
    modes: &ModePlan,
) -> Result<TeleportTrace> {
    run_with_map(
        input,
        &WireMap::with_receiver(n, receiver)?,
        ChannelVariant::XSecond,
        modes,
    )
}

/// Fidelity averaged over a uniform guess of the outcomes at positions
/// `missing` (indices into `outcomes`), with everything else known.
pub fn average_guess_fidelity(
    input: &TwoQubitInput,
    outcomes: &[BellOutcome],
    pre_correction: &StateVector,
    missing: &[usize],
) -> Result<f64> {
    if let Some(bad) = missing.iter().find(|&&m| m >= outcomes.len()) {
        return Err(Error::InvalidConfig(format!("no measurement at position {bad}")));
    }
    let parity = NParity::of(outcomes.len() - 2);
    let target = input.to_state();
    let guesses = 4usize.pow(missing.len() as u32);
    let mut total = 0.0;
    for g in 0..guesses {
        let mut o = outcomes.to_vec();
        for (k, &m) in missing.iter().enumerate() {
            o[m] = BellOutcome::ALL[(g >> (2 * k)) & 3];
        }
        let rule = lookup_key(TableKey::from_outcomes(&o)?, parity);
        total += rule.apply(pre_correction)?.fidelity(&target)?;
    }
    Ok(total / guesses as f64)
}

/// Receiver's expected fidelity, over all branches, when controller `k`
/// (1-based cascade order) keeps her outcome to herself.
pub fn withheld_fidelity(input: &TwoQubitInput, n: usize, controller: usize) -> Result<f64> {
    if controller == 0 || controller > n {
        return Err(Error::InvalidConfig(format!("no controller {controller} among {n}")));
    }
    let leaves = walk_branches(input, &WireMap::new(n), ChannelVariant::XSecond)?;
    let mut total = 0.0;
    for leaf in &leaves {
        total += leaf.probability * average_guess_fidelity(input, &leaf.outcomes, &leaf.state, &[1 + controller])?;
    }
    Ok(total)
}

/// Exact outcome distribution of every measurement in the cascade, indexed
/// by [`BellOutcome::index`].
pub fn outcome_marginals(input: &TwoQubitInput, n: usize) -> Result<Vec<[f64; 4]>> {
    let leaves = walk_branches(input, &WireMap::new(n), ChannelVariant::XSecond)?;
    let mut m = vec![[0.0; 4]; n + 2];
    for leaf in &leaves {
        for (slot, o) in leaf.outcomes.iter().enumerate() {
            m[slot][o.index()] += leaf.probability;
        }
    }
    Ok(m)
}

/// Largest `|p − 1/4|` across all marginals.
pub fn max_marginal_deviation(marginals: &[[f64; 4]]) -> f64 {
    marginals.iter().flatten().map(|p| (p - 0.25).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use BellOutcome::*;

    fn generic_input() -> TwoQubitInput {
        TwoQubitInput::random(&mut ChaCha8Rng::seed_from_u64(21))
    }

    #[test]
    fn code_alphabet() {
        let expect = [("0+", PhiPlus), ("1-", PhiMinus), ("0-", PsiPlus), ("1+", PsiMinus)];
        for (s, o) in expect {
            let m: ClassicalMessage = s.parse().unwrap();
            assert_eq!(encode_classical(m), o);
            assert_eq!(message_for(o), m);
            assert_eq!(m.to_string(), s);
        }
        assert_eq!("1−".parse::<ClassicalMessage>().unwrap(), message_for(PhiMinus));
        for bad in ["2+", "0", "0+x", "+0", ""] {
            assert!(
                matches!(bad.parse::<ClassicalMessage>(), Err(Error::UnknownCode(_))),
                "{bad}"
            );
        }
        assert_eq!(message_for(PhiMinus).bits(), [1, 1]);
    }

    #[test]
    fn decode_examples() {
        let even = NParity::Even;
        assert_eq!(
            decode(0, Sign::Plus, BobRecord::Bell(PhiPlus), even)
                .unwrap()
                .to_string(),
            "0+"
        );
        // (U0⊗U3)Φ+ = −Ψ−
        assert_eq!(
            decode(1, Sign::Minus, BobRecord::Bell(PsiMinus), even)
                .unwrap()
                .to_string(),
            "0+"
        );
        // CNOT·Φ+ = |+x⟩|0⟩
        let rec = BobRecord::Product { x: Sign::Plus, z: 0 };
        assert_eq!(decode(0, Sign::Plus, rec, NParity::Odd).unwrap().to_string(), "0+");
        assert!(matches!(
            decode(0, Sign::Plus, BobRecord::Bell(PhiPlus), NParity::Odd),
            Err(Error::InconsistentRecord(_))
        ));
    }

    #[test]
    fn odd_final_states_are_product_eigenstates() {
        for carrier in BellOutcome::ALL {
            for v in 0..2 {
                for p in [Sign::Plus, Sign::Minus] {
                    let s = classical_final_state(carrier, v, p, NParity::Odd).unwrap();
                    bob_certain(&s, NParity::Odd).unwrap();
                    let e = classical_final_state(carrier, v, p, NParity::Even).unwrap();
                    bob_certain(&e, NParity::Even).unwrap();
                }
            }
        }
    }

    #[test]
    fn forced_examples() {
        let m: ClassicalMessage = "0+".parse().unwrap();
        let (d, t) = qss_run(m, 2, &ModePlan::forced(&[PhiPlus; 4])).unwrap();
        assert_eq!(d, m);
        assert_eq!(t.bob, BobRecord::Bell(PhiPlus));
        // n = 1 with totals (1, −): (x,a1)=Ψ−, rest Φ+
        let (d, t) = qss_run(m, 1, &ModePlan::forced(&[PsiMinus, PhiPlus, PhiPlus])).unwrap();
        assert_eq!((t.v_total, t.p_total), (1, Sign::Minus));
        assert_eq!(d, m);
    }

    #[test]
    fn exhaustive_round_trip_small_n() {
        for n in 0..=3 {
            for m in ClassicalMessage::ALL {
                let s = qss_exhaustive(m, n).unwrap();
                assert!(s.all_correct(), "{m} n={n}: {s:?}");
            }
        }
    }

    #[test]
    fn sampled_runs_decode() {
        for seed in 0..20 {
            for m in ClassicalMessage::ALL {
                let (d, _) = qss_run(m, 1 + (seed as usize % 3), &ModePlan::sample(seed)).unwrap();
                assert_eq!(d, m);
            }
        }
    }

    #[test]
    fn any_agent_can_receive() {
        let inp = generic_input();
        for r in 1..=3 {
            let t = share_quantum_secret(&inp, 2, r, &ModePlan::sample(r as u64)).unwrap();
            assert!((t.fidelity - 1.0).abs() < 1e-10, "receiver {r}");
            assert_eq!(t.receiver, r);
        }
        let solo = share_quantum_secret(&inp, 0, 1, &ModePlan::sample(3)).unwrap();
        assert!((solo.fidelity - 1.0).abs() < 1e-10);
        assert!(share_quantum_secret(&inp, 2, 4, &ModePlan::sample(0)).is_err());
    }

    #[test]
    fn withholding_hurts() {
        let inp = generic_input();
        for n in 1..=2 {
            for k in 1..=n {
                let f = withheld_fidelity(&inp, n, k).unwrap();
                assert!(f < 1.0 - 1e-3, "n={n} k={k} f={f}");
            }
        }
        assert!(withheld_fidelity(&inp, 1, 2).is_err());
    }

    #[test]
    fn marginals_are_uniform_and_message_blind() {
        for n in 1..=2 {
            let base = outcome_marginals(&carrier_input(PhiPlus), n).unwrap();
            assert!(max_marginal_deviation(&base) < 1e-10);
            for m in ClassicalMessage::ALL {
                let other = outcome_marginals(&carrier_input(encode_classical(m)), n).unwrap();
                assert_eq!(other.len(), n + 2);
                assert!(max_marginal_deviation(&other) < 1e-10);
            }
        }
    }
}
