use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bellcodec::{BellOutcome, MeasureMode, Sign};
use crate::channel::{assemble_composite, ChannelVariant, MeasurementSlot, WireMap};
use crate::error::{Error, Result};
use crate::statevec::{StateVector, TwoQubitInput, STATE_TOL};

use super::engine::Cascade;
use super::predictor::{predicted_final, subsystem_coeffs, OutcomeCounts};
use super::tables::{golden_row, golden_table, lookup_key, terms_string, Amp, NParity, TableKey, Term};
use super::CorrectionRule;

/// Largest controller count the exhaustive walk accepts (`4^8` leaves).
pub const MAX_VERIFY_CONTROLLERS: usize = 6;

/// Largest distance between two unit vectors.
const MAX_DISTANCE: f64 = 2.0;

/// One complete outcome branch.
#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    pub outcomes: Vec<BellOutcome>,
    pub probability: f64,
    /// Receiver's pair before correction.
    pub state: StateVector,
}

fn walk(cascade: Cascade, slots: &[MeasurementSlot], prefix: Vec<BellOutcome>) -> Result<Vec<Leaf>> {
    let Some((slot, rest)) = slots.split_first() else {
        return Ok(vec![Leaf {
            outcomes: prefix,
            probability: cascade.probability(),
            state: cascade.receiver_state()?,
        }]);
    };
    let subtrees: Vec<Result<Vec<Leaf>>> = BellOutcome::ALL
        .par_iter()
        .map(|&o| {
            let mut next = cascade.clone();
            match next.measure_slot(slot, MeasureMode::Forced(o)) {
                Ok(_) => {}
                Err(Error::ImpossibleBranch { .. }) => return Ok(Vec::new()),
                Err(e) => return Err(e),
            }
            let mut p = prefix.clone();
            p.push(o);
            walk(next, rest, p)
        })
        .collect();
    let mut leaves = Vec::new();
    for s in subtrees {
        leaves.extend(s?);
    }
    Ok(leaves)
}

/// Every possible outcome branch of one session, in lexicographic outcome
/// order. Zero-probability branches are left out.
pub fn walk_branches(input: &TwoQubitInput, map: &WireMap, variant: ChannelVariant) -> Result<Vec<Leaf>> {
    let n = map.controllers_count();
    if n > MAX_VERIFY_CONTROLLERS {
        return Err(Error::InvalidConfig(format!(
            "exhaustive walk supports at most {MAX_VERIFY_CONTROLLERS} controllers, got {n}"
        )));
    }
    let (state, _) = assemble_composite(input, n, variant)?;
    let slots = map.measurement_slots(variant);
    walk(Cascade::new(state, map), &slots, Vec::new())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchFailure {
    pub outcomes: Vec<BellOutcome>,
    pub probability: f64,
    pub fidelity: f64,
    pub predictor_distance: f64,
    pub golden_distance: f64,
    pub reasons: Vec<String>,
}

/// Summary of an exhaustive branch walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub n: usize,
    pub variant: ChannelVariant,
    pub receiver: usize,
    pub branches: usize,
    pub passed: usize,
    pub expected_probability: f64,
    pub max_probability_deviation: f64,
    /// `max(1 − fidelity)` after correction.
    pub max_fidelity_deviation: f64,
    /// Largest phase-aligned distance between the simulated pre-correction
    /// state and the normalized analytic prediction.
    pub max_predictor_distance: f64,
    /// Same against the tabulated intermediate state.
    pub max_golden_distance: f64,
    pub cnot_used: bool,
    pub failures: Vec<BranchFailure>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.failures.is_empty() && self.branches == 4usize.pow(self.n as u32 + 2)
    }
}

struct LeafCheck {
    probability_deviation: f64,
    fidelity: f64,
    predictor_distance: f64,
    golden_distance: f64,
    cnot: bool,
}

fn check_leaf(
    leaf: &Leaf,
    input: &TwoQubitInput,
    n: usize,
    variant: ChannelVariant,
    expected: f64,
) -> Result<LeafCheck> {
    let parity = NParity::of(n);
    let key = TableKey::from_outcomes(&leaf.outcomes)?;
    let target = input.to_state();
    let (post, cnot) = match variant {
        ChannelVariant::Direct => (leaf.state.clone(), false),
        _ => {
            let rule = lookup_key(key, parity);
            (rule.apply(&leaf.state)?, rule.apply_cnot)
        }
    };
    let coeffs = subsystem_coeffs(input, leaf.outcomes[0], leaf.outcomes[1]);
    let counts = OutcomeCounts::from_outcomes(&leaf.outcomes[2..]);
    let predictor_distance = match StateVector::normalized(predicted_final(&coeffs, &counts).to_vec()) {
        Ok(p) => leaf.state.phase_distance(&p)?,
        Err(_) => MAX_DISTANCE,
    };
    Ok(LeafCheck {
        probability_deviation: (leaf.probability - expected).abs(),
        fidelity: post.fidelity(&target)?,
        predictor_distance,
        golden_distance: leaf.state.phase_distance(&golden_row(key, parity).state_for(input))?,
        cnot,
    })
}

/// Walks all `4^(n+2)` branches with the default roles and checks each one.
pub fn verify_all_branches(input: &TwoQubitInput, n: usize, variant: ChannelVariant) -> Result<VerifyReport> {
    verify_with_map(input, &WireMap::new(n), variant)
}

pub fn verify_with_map(input: &TwoQubitInput, map: &WireMap, variant: ChannelVariant) -> Result<VerifyReport> {
    let n = map.controllers_count();
    let leaves = walk_branches(input, map, variant)?;
    let expected = 0.25f64.powi(n as i32 + 2);
    let checks: Vec<LeafCheck> = leaves
        .par_iter()
        .map(|leaf| check_leaf(leaf, input, n, variant, expected))
        .collect::<Result<_>>()?;

    let mut report = VerifyReport {
        n,
        variant,
        receiver: map.receiver(),
        branches: leaves.len(),
        passed: 0,
        expected_probability: expected,
        max_probability_deviation: 0.0,
        max_fidelity_deviation: 0.0,
        max_predictor_distance: 0.0,
        max_golden_distance: 0.0,
        cnot_used: false,
        failures: Vec::new(),
    };
    for (leaf, c) in leaves.iter().zip(&checks) {
        report.max_probability_deviation = report.max_probability_deviation.max(c.probability_deviation);
        report.max_fidelity_deviation = report.max_fidelity_deviation.max(1.0 - c.fidelity);
        report.max_predictor_distance = report.max_predictor_distance.max(c.predictor_distance);
        report.max_golden_distance = report.max_golden_distance.max(c.golden_distance);
        report.cnot_used |= c.cnot;

        let mut reasons = Vec::new();
        if c.probability_deviation > STATE_TOL {
            reasons.push(format!("probability {} differs from {expected}", leaf.probability));
        }
        if 1.0 - c.fidelity > STATE_TOL {
            reasons.push(format!("fidelity {}", c.fidelity));
        }
        if c.predictor_distance > STATE_TOL {
            reasons.push(format!("predictor distance {:.3e}", c.predictor_distance));
        }
        if c.golden_distance > STATE_TOL {
            reasons.push(format!("tabulated state distance {:.3e}", c.golden_distance));
        }
        if reasons.is_empty() {
            report.passed += 1;
        } else {
            report.failures.push(BranchFailure {
                outcomes: leaf.outcomes.clone(),
                probability: leaf.probability,
                fidelity: c.fidelity,
                predictor_distance: c.predictor_distance,
                golden_distance: c.golden_distance,
                reasons,
            });
        }
    }
    Ok(report)
}

/// A re-derived table row.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedRow {
    pub key: TableKey,
    pub rule: CorrectionRule,
    /// Receiver's pre-correction state as a signed permutation of the input
    /// amplitudes, normalized so the first term is positive. `None` if the
    /// branch map is not of that form.
    pub state: Option<[Term; 4]>,
    /// Branches that fell into this class.
    pub branches: usize,
}

impl DerivedRow {
    pub fn state_string(&self) -> String {
        match &self.state {
            Some(t) => terms_string(t),
            None => "(not a signed permutation)".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivedTable {
    pub parity: NParity,
    pub variant: ChannelVariant,
    /// Controller count of the instance the table was derived on.
    pub n: usize,
    pub inputs: usize,
    pub rows: Vec<DerivedRow>,
}

impl DerivedTable {
    /// Row indices whose rule or state differs from the hard-coded table.
    pub fn golden_mismatches(&self) -> Vec<usize> {
        let golden = golden_table(self.parity);
        self.rows
            .iter()
            .zip(&golden)
            .enumerate()
            .filter(|(_, (d, g))| d.rule != g.rule || d.state != Some(g.state))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn matches_golden(&self) -> bool {
        self.golden_mismatches().is_empty()
    }
}

const DERIVE_INPUTS: usize = 3;

/// Unnormalized projection of `input` onto one branch, or `None` if the
/// branch cannot occur.
fn branch_projection(
    input: &TwoQubitInput,
    map: &WireMap,
    variant: ChannelVariant,
    outcomes: &[BellOutcome],
) -> Result<Option<Vec<Complex64>>> {
    let (state, _) = assemble_composite(input, map.controllers_count(), variant)?;
    let mut cascade = Cascade::new(state, map);
    for (slot, &o) in map.measurement_slots(variant).iter().zip(outcomes) {
        match cascade.measure_slot(slot, MeasureMode::Forced(o)) {
            Ok(_) => {}
            Err(Error::ImpossibleBranch { .. }) => return Ok(None),
            Err(e) => return Err(e),
        }
    }
    let scale = cascade.probability().sqrt();
    Ok(Some(
        cascade
            .receiver_state()?
            .amplitudes()
            .iter()
            .map(|a| a * scale)
            .collect(),
    ))
}

/// Whether the branch maps inputs to receiver states by a multiple of a
/// unitary, i.e. whether any two-qubit correction at all could undo it.
pub fn branch_is_invertible(map: &WireMap, variant: ChannelVariant, outcomes: &[BellOutcome]) -> Result<bool> {
    let zero = vec![Complex64::new(0.0, 0.0); 4];
    let mut columns = Vec::with_capacity(4);
    for k in 0..4 {
        columns.push(branch_projection(&basis_input(k), map, variant, outcomes)?.unwrap_or_else(|| zero.clone()));
    }
    let gram =
        |i: usize, j: usize| -> Complex64 { columns[i].iter().zip(&columns[j]).map(|(x, y)| x.conj() * y).sum() };
    let scale = gram(0, 0).re;
    if scale <= STATE_TOL {
        return Ok(false);
    }
    for i in 0..4 {
        for j in 0..4 {
            let expect = if i == j { scale } else { 0.0 };
            if (gram(i, j) - expect).norm() > STATE_TOL * scale.max(1.0) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn basis_input(k: usize) -> TwoQubitInput {
    let mut amps = [Complex64::new(0.0, 0.0); 4];
    amps[k] = Complex64::new(1.0, 0.0);
    TwoQubitInput::new(amps[0], amps[1], amps[2], amps[3]).expect("basis state")
}

/// Reads the branch's linear map off the four basis inputs and writes it as
/// signed amplitude letters.
fn symbolic_state(map: &WireMap, variant: ChannelVariant, outcomes: &[BellOutcome]) -> Result<Option<[Term; 4]>> {
    let zero = vec![Complex64::new(0.0, 0.0); 4];
    let mut columns = Vec::with_capacity(4);
    for k in 0..4 {
        columns.push(branch_projection(&basis_input(k), map, variant, outcomes)?.unwrap_or_else(|| zero.clone()));
    }
    let mut phase: Option<Complex64> = None;
    let mut terms = Vec::with_capacity(4);
    #[allow(clippy::needless_range_loop)]
    for row in 0..4 {
        let nonzero: Vec<usize> = (0..4).filter(|&k| columns[k][row].norm() > STATE_TOL).collect();
        let [k] = nonzero[..] else { return Ok(None) };
        let entry = columns[k][row];
        let lambda = *phase.get_or_insert(entry);
        let ratio = entry / lambda;
        let sign = if (ratio - 1.0).norm() < STATE_TOL {
            Sign::Plus
        } else if (ratio + 1.0).norm() < STATE_TOL {
            Sign::Minus
        } else {
            return Ok(None);
        };
        terms.push(Term { sign, amp: Amp::ALL[k] });
    }
    Ok(terms.try_into().ok())
}

/// Re-derives the 16-row correction table by brute force: on a concrete
/// instance (`n = 1` odd, `n = 2` even), every forced branch is tested
/// against all 32 candidate rules with seeded random inputs. Each branch must
/// admit exactly one rule and all branches of a class must agree.
pub fn derive_correction_table(parity: NParity, variant: ChannelVariant, seed: u64) -> Result<DerivedTable> {
    let n = match parity {
        NParity::Odd => 1,
        NParity::Even => 2,
    };
    let map = WireMap::new(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<TwoQubitInput> = (0..DERIVE_INPUTS).map(|_| TwoQubitInput::random(&mut rng)).collect();
    let walks: Vec<BTreeMap<Vec<BellOutcome>, StateVector>> = inputs
        .iter()
        .map(|inp| {
            walk_branches(inp, &map, variant).map(|leaves| leaves.into_iter().map(|l| (l.outcomes, l.state)).collect())
        })
        .collect::<Result<_>>()?;

    let mut branch_rules: BTreeMap<TableKey, (CorrectionRule, Vec<BellOutcome>, usize)> = BTreeMap::new();
    for outcomes in walks[0].keys() {
        let states: Vec<&StateVector> = walks
            .iter()
            .map(|w| {
                w.get(outcomes)
                    .ok_or_else(|| Error::OracleFailure(format!("branch {outcomes:?} occurs for only some inputs")))
            })
            .collect::<Result<_>>()?;
        let mut found = Vec::new();
        for rule in CorrectionRule::search_space() {
            let mut ok = true;
            for (inp, st) in inputs.iter().zip(&states) {
                if 1.0 - rule.apply(st)?.fidelity(&inp.to_state())? > STATE_TOL {
                    ok = false;
                    break;
                }
            }
            if ok {
                found.push(rule);
            }
        }
        let rule = match found[..] {
            [r] => r,
            [] => {
                return Err(Error::OracleFailure(format!(
                    "no correction recovers branch {outcomes:?}"
                )))
            }
            _ => {
                return Err(Error::OracleFailure(format!(
                    "{} corrections recover branch {outcomes:?}",
                    found.len()
                )))
            }
        };
        let key = TableKey::from_outcomes(outcomes)?;
        match branch_rules.get_mut(&key) {
            None => {
                branch_rules.insert(key, (rule, outcomes.clone(), 1));
            }
            Some((r, first, count)) => {
                if *r != rule {
                    return Err(Error::OracleFailure(format!(
                        "class {key} needs {r} for {first:?} but {rule} for {outcomes:?}"
                    )));
                }
                *count += 1;
            }
        }
    }

    let mut rows = Vec::with_capacity(16);
    for row in 0..16 {
        let key = TableKey::from_row(row);
        let (rule, representative, branches) = branch_rules
            .remove(&key)
            .ok_or_else(|| Error::OracleFailure(format!("no branch falls into class {key}")))?;
        rows.push(DerivedRow {
            key,
            rule,
            state: symbolic_state(&map, variant, &representative)?,
            branches,
        });
    }
    Ok(DerivedTable {
        parity,
        variant,
        n,
        inputs: DERIVE_INPUTS,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn generic_input() -> TwoQubitInput {
        // all four moduli distinct
        TwoQubitInput::renormalized(
            [
                Complex64::new(0.1, 0.2),
                Complex64::new(0.3, -0.1),
                Complex64::new(-0.5, 0.4),
                Complex64::new(0.6, 0.25),
            ],
            10.0,
        )
        .unwrap()
        .0
    }

    #[test]
    fn branch_counts_and_pass() {
        let inp = generic_input();
        for (n, count) in [(0, 16), (1, 64), (2, 256)] {
            let r = verify_all_branches(&inp, n, ChannelVariant::XSecond).unwrap();
            assert_eq!(r.branches, count);
            assert!(r.all_passed(), "n={n}: {:?}", r.failures.first());
            assert_eq!(r.cnot_used, n % 2 == 1);
        }
    }

    #[test]
    fn guard_on_size() {
        assert!(verify_all_branches(&generic_input(), 7, ChannelVariant::XSecond).is_err());
    }

    #[test]
    fn derived_tables_match_golden() {
        for parity in [NParity::Odd, NParity::Even] {
            let t = derive_correction_table(parity, ChannelVariant::XSecond, 11).unwrap();
            assert!(t.matches_golden(), "{parity}: rows {:?}", t.golden_mismatches());
            assert!(t.rows.iter().all(|r| r.rule.apply_cnot == (parity == NParity::Odd)));
            let per_class = 4usize.pow(t.n as u32 + 2) / 16;
            assert!(t.rows.iter().all(|r| r.branches == per_class));
        }
    }

    #[test]
    fn skipping_the_cnot_breaks_some_odd_branch() {
        let inp = generic_input();
        for n in [1, 3] {
            let leaves = walk_branches(&inp, &WireMap::new(n), ChannelVariant::XSecond).unwrap();
            let worst = leaves
                .iter()
                .map(|l| {
                    let mut rule = lookup_key(TableKey::from_outcomes(&l.outcomes).unwrap(), NParity::Odd);
                    rule.apply_cnot = false;
                    rule.apply(&l.state).unwrap().fidelity(&inp.to_state()).unwrap()
                })
                .fold(1.0f64, f64::min);
            assert!(worst < 1.0 - 1e-3, "n={n}: {worst}");
        }
    }

    #[test]
    fn only_outcome_counts_matter() {
        use BellOutcome::*;
        let inp = generic_input();
        let map = WireMap::new(3);
        let leaves: BTreeMap<Vec<BellOutcome>, StateVector> = walk_branches(&inp, &map, ChannelVariant::XSecond)
            .unwrap()
            .into_iter()
            .map(|l| (l.outcomes, l.state))
            .collect();
        let base = [PsiMinus, PhiMinus];
        let controllers = [PhiPlus, PsiPlus, PhiMinus];
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let reference = {
            let mut o = base.to_vec();
            o.extend(controllers);
            leaves[&o].clone()
        };
        for p in perms {
            let mut o = base.to_vec();
            o.extend(p.map(|i| controllers[i]));
            assert!(leaves[&o].equal_up_to_global_phase(&reference, STATE_TOL).unwrap());
        }
    }

    #[test]
    fn relabeled_receiver_uses_same_tables() {
        let inp = generic_input();
        for r in 1..=3 {
            let map = WireMap::with_receiver(2, r).unwrap();
            let rep = verify_with_map(&inp, &map, ChannelVariant::XSecond).unwrap();
            assert!(rep.all_passed(), "receiver {r}");
        }
    }

    #[test]
    fn symbolic_state_of_first_odd_row() {
        use BellOutcome::*;
        let s = symbolic_state(&WireMap::new(1), ChannelVariant::XSecond, &[PhiPlus, PhiPlus, PhiPlus]).unwrap();
        assert_eq!(terms_string(&s.unwrap()), "+a|00⟩ +b|01⟩ +d|10⟩ +c|11⟩");
    }

    #[test]
    fn late_hadamard_variant_only_works_without_controllers() {
        let inp = generic_input();
        // with no controller the two GHZ pairs are plain Bell pairs
        assert!(verify_all_branches(&inp, 0, ChannelVariant::ZLateH)
            .unwrap()
            .all_passed());
        for n in [1, 2] {
            let r = verify_all_branches(&inp, n, ChannelVariant::ZLateH).unwrap();
            assert!(r.max_fidelity_deviation > 1e-3, "n={n}");
        }
        for parity in [NParity::Odd, NParity::Even] {
            assert!(matches!(
                derive_correction_table(parity, ChannelVariant::ZLateH, 11),
                Err(Error::OracleFailure(_))
            ));
        }
    }

    #[test]
    fn invertibility_check() {
        use BellOutcome::*;
        assert!(branch_is_invertible(
            &WireMap::new(1),
            ChannelVariant::XSecond,
            &[PsiMinus, PhiMinus, PsiMinus]
        )
        .unwrap());
        assert!(!branch_is_invertible(&WireMap::new(1), ChannelVariant::Direct, &[PhiPlus; 3]).unwrap());
    }

    #[test]
    fn direct_channel_fails_generic_inputs() {
        let r = verify_all_branches(&generic_input(), 1, ChannelVariant::Direct).unwrap();
        assert!(!r.all_passed());
        assert!(!r.cnot_used);
    }
}
