//! Hard-coded correction tables for odd and even controller counts, and the
//! table of post-Alice subsystem coefficients.
//!
//! Rows are stored in the order `(v_xa1, v_total, p_yb1, p_total)` with bits
//! ascending and `+` before `−`, so row `r` has key
//! `v_xa1 = r>>3`, `v_total = (r>>2)&1`, `p_yb1 = (r>>1)&1`, `p_total = r&1`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bellcodec::{BellOutcome, Sign};
use crate::error::{Error, Result};
use crate::statevec::{Gate, StateVector, TwoQubitInput};

use super::CorrectionRule;

/// Parity class of the controller count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NParity {
    Even,
    Odd,
}

impl NParity {
    pub fn of(n: usize) -> Self {
        if n.is_multiple_of(2) {
            NParity::Even
        } else {
            NParity::Odd
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NParity::Even => "even",
            NParity::Odd => "odd",
        }
    }
}

impl fmt::Display for NParity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for NParity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "even" => Ok(NParity::Even),
            "odd" => Ok(NParity::Odd),
            other => Err(Error::InvalidConfig(format!(
                "parity must be even or odd, got {other:?}"
            ))),
        }
    }
}

/// The four classical values a correction depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TableKey {
    pub v_xa1: u8,
    pub v_total: u8,
    pub p_yb1: Sign,
    pub p_total: Sign,
}

impl TableKey {
    pub fn from_row(row: usize) -> Self {
        Self {
            v_xa1: ((row >> 3) & 1) as u8,
            v_total: ((row >> 2) & 1) as u8,
            p_yb1: Sign::from_bit(((row >> 1) & 1) as u8),
            p_total: Sign::from_bit((row & 1) as u8),
        }
    }

    pub fn row(self) -> usize {
        ((self.v_xa1 as usize & 1) << 3)
            | ((self.v_total as usize & 1) << 2)
            | ((self.p_yb1.bit() as usize) << 1)
            | self.p_total.bit() as usize
    }

    /// Key of a full cascade; the first two outcomes are Alice's `(x,a1)`
    /// and `(y,b1)`.
    pub fn from_outcomes(outcomes: &[BellOutcome]) -> Result<Self> {
        if outcomes.len() < 2 {
            return Err(Error::InconsistentRecord(format!(
                "need Alice's two outcomes, got {}",
                outcomes.len()
            )));
        }
        let (v_total, p_total) = crate::bellcodec::ledger_totals(outcomes)?;
        Ok(Self {
            v_xa1: outcomes[0].bit_value(),
            v_total,
            p_yb1: outcomes[1].parity(),
            p_total,
        })
    }
}

impl fmt::Display for TableKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.v_xa1, self.v_total, self.p_yb1, self.p_total)
    }
}

/// One of the input amplitudes `a, b, c, d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Amp {
    A,
    B,
    C,
    D,
}

impl Amp {
    pub const ALL: [Amp; 4] = [Amp::A, Amp::B, Amp::C, Amp::D];

    fn parse(c: char) -> Option<Self> {
        match c {
            'a' => Some(Amp::A),
            'b' => Some(Amp::B),
            'c' => Some(Amp::C),
            'd' => Some(Amp::D),
            _ => None,
        }
    }

    pub fn of(self, input: &TwoQubitInput) -> Complex64 {
        match self {
            Amp::A => input.a,
            Amp::B => input.b,
            Amp::C => input.c,
            Amp::D => input.d,
        }
    }

    fn letter(self) -> char {
        match self {
            Amp::A => 'a',
            Amp::B => 'b',
            Amp::C => 'c',
            Amp::D => 'd',
        }
    }
}

/// `±amp`, one coefficient of a tabulated two-qubit state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Term {
    pub sign: Sign,
    pub amp: Amp,
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.sign, self.amp.letter())
    }
}

fn parse_terms(s: &str) -> [Term; 4] {
    let terms: Vec<Term> = s
        .split_whitespace()
        .map(|t| {
            let (sign, rest) = match t.strip_prefix('-') {
                Some(r) => (Sign::Minus, r),
                None => (Sign::Plus, t.trim_start_matches('+')),
            };
            let amp = rest.chars().next().and_then(Amp::parse).expect("golden table letter");
            Term { sign, amp }
        })
        .collect();
    terms.try_into().expect("four terms per row")
}

/// A row of the correction tables: Bob's state before correcting, written in
/// terms of the input amplitudes on `|00⟩, |01⟩, |10⟩, |11⟩`, and the fix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldenRow {
    pub key: TableKey,
    pub state: [Term; 4],
    pub rule: CorrectionRule,
}

impl GoldenRow {
    pub fn state_for(&self, input: &TwoQubitInput) -> StateVector {
        let amps = self.state.iter().map(|t| t.amp.of(input) * t.sign.as_f64()).collect();
        StateVector::from_amplitudes(amps).expect("signed permutation of a normalized input")
    }

    pub fn state_string(&self) -> String {
        terms_string(&self.state)
    }
}

/// Renders `[+a, +b, -d, -c]` as `+a|00⟩ +b|01⟩ -d|10⟩ -c|11⟩`.
pub fn terms_string(terms: &[Term; 4]) -> String {
    let kets = ["|00⟩", "|01⟩", "|10⟩", "|11⟩"];
    terms
        .iter()
        .zip(kets)
        .map(|(t, k)| format!("{t}{k}"))
        .collect::<Vec<_>>()
        .join(" ")
}

use Gate::{U0, U1, U2, U3};

const ODD_ROWS: [(&str, Gate, Gate); 16] = [
    ("+a +b +d +c", U0, U0),
    ("+a +b -d -c", U1, U0),
    ("+a -b +d -c", U0, U1),
    ("+a -b -d +c", U1, U1),
    ("+b +a +c +d", U0, U2),
    ("+b +a -c -d", U1, U2),
    ("+b -a +c -d", U0, U3),
    ("+b -a -c +d", U1, U3),
    ("+d +c +a +b", U2, U0),
    ("+d +c -a -b", U3, U0),
    ("+d -c +a -b", U2, U1),
    ("+d -c -a +b", U3, U1),
    ("+c +d +b +a", U2, U2),
    ("+c +d -b -a", U3, U2),
    ("+c -d +b -a", U2, U3),
    ("+c -d -b +a", U3, U3),
];

const EVEN_ROWS: [(&str, Gate, Gate); 16] = [
    ("+a +b +c +d", U0, U0),
    ("+a +b -c -d", U1, U0),
    ("+a -b -c +d", U1, U1),
    ("+a -b +c -d", U0, U1),
    ("+b +a +d +c", U0, U2),
    ("+b +a -d -c", U1, U2),
    ("+b -a -d +c", U1, U3),
    ("+b -a +d -c", U0, U3),
    ("+d +c +b +a", U2, U2),
    ("+d +c -b -a", U3, U2),
    ("+d -c -b +a", U3, U3),
    ("+d -c +b -a", U2, U3),
    ("+c +d +a +b", U2, U0),
    ("+c +d -a -b", U3, U0),
    ("+c -d -a +b", U3, U1),
    ("+c -d +a -b", U2, U1),
];

/// The golden 16-row table for a parity class.
pub fn golden_table(parity: NParity) -> Vec<GoldenRow> {
    let (rows, cnot) = match parity {
        NParity::Odd => (&ODD_ROWS, true),
        NParity::Even => (&EVEN_ROWS, false),
    };
    rows.iter()
        .enumerate()
        .map(|(r, (state, ua, ub))| GoldenRow {
            key: TableKey::from_row(r),
            state: parse_terms(state),
            rule: CorrectionRule {
                u_on_a: *ua,
                u_on_b: *ub,
                apply_cnot: cnot,
            },
        })
        .collect()
}

pub fn golden_row(key: TableKey, parity: NParity) -> GoldenRow {
    golden_table(parity).swap_remove(key.row())
}

/// Correction for the given classical values.
pub fn correction_lookup(v_xa1: u8, v_total: u8, p_yb1: Sign, p_total: Sign, parity: NParity) -> CorrectionRule {
    let key = TableKey {
        v_xa1: v_xa1 & 1,
        v_total: v_total & 1,
        p_yb1,
        p_total,
    };
    let (ua, ub) = match parity {
        NParity::Odd => (ODD_ROWS[key.row()].1, ODD_ROWS[key.row()].2),
        NParity::Even => (EVEN_ROWS[key.row()].1, EVEN_ROWS[key.row()].2),
    };
    CorrectionRule {
        u_on_a: ua,
        u_on_b: ub,
        apply_cnot: parity == NParity::Odd,
    }
}

pub fn lookup_key(key: TableKey, parity: NParity) -> CorrectionRule {
    correction_lookup(key.v_xa1, key.v_total, key.p_yb1, key.p_total, parity)
}

/// `s·(p ± q)` with `p, q` input amplitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignedPair {
    pub sign: Sign,
    pub first: Amp,
    pub op: Sign,
    pub second: Amp,
}

impl SignedPair {
    fn parse(s: &str) -> Self {
        let c: Vec<char> = s.chars().collect();
        // "+(a-b)"
        assert!(c.len() == 6 && c[1] == '(' && c[5] == ')', "bad coefficient {s:?}");
        let sign_of = |ch: char| if ch == '-' { Sign::Minus } else { Sign::Plus };
        Self {
            sign: sign_of(c[0]),
            first: Amp::parse(c[2]).expect("letter"),
            op: sign_of(c[3]),
            second: Amp::parse(c[4]).expect("letter"),
        }
    }

    pub fn eval(&self, input: &TwoQubitInput) -> Complex64 {
        (self.first.of(input) + self.second.of(input) * self.op.as_f64()) * self.sign.as_f64()
    }
}

/// Rows keyed by `(v_xa1, v_yb1, p_xa1, p_yb1)` in the same bit order as
/// the correction tables. Columns are `α, β, γ, δ`.
const COEFF_ROWS: [[&str; 4]; 16] = [
    ["+(a+b)", "+(a-b)", "+(c+d)", "+(c-d)"],
    ["+(a-b)", "+(a+b)", "+(c-d)", "+(c+d)"],
    ["+(a+b)", "+(a-b)", "-(c+d)", "-(c-d)"],
    ["+(a-b)", "+(a+b)", "-(c-d)", "-(c+d)"],
    ["+(a+b)", "-(a-b)", "+(c+d)", "-(c-d)"],
    ["+(a-b)", "-(a+b)", "+(c-d)", "-(c+d)"],
    ["+(a+b)", "-(a-b)", "-(c+d)", "+(c-d)"],
    ["+(a-b)", "-(a+b)", "-(c-d)", "+(c+d)"],
    ["+(c+d)", "+(c-d)", "+(a+b)", "+(a-b)"],
    ["+(c-d)", "+(c+d)", "+(a-b)", "+(a+b)"],
    ["-(c+d)", "-(c-d)", "+(a+b)", "+(a-b)"],
    ["-(c-d)", "-(c+d)", "+(a-b)", "+(a+b)"],
    ["+(c+d)", "-(c-d)", "+(a+b)", "-(a-b)"],
    ["+(c-d)", "-(c+d)", "+(a-b)", "-(a+b)"],
    ["-(c+d)", "+(c-d)", "+(a+b)", "-(a-b)"],
    ["-(c-d)", "+(c+d)", "+(a-b)", "-(a+b)"],
];

pub fn coefficient_row(r_xa1: BellOutcome, r_yb1: BellOutcome) -> [SignedPair; 4] {
    let row = ((r_xa1.bit_value() as usize) << 3)
        | ((r_yb1.bit_value() as usize) << 2)
        | ((r_xa1.parity().bit() as usize) << 1)
        | r_yb1.parity().bit() as usize;
    COEFF_ROWS[row].map(SignedPair::parse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevec::STATE_TOL;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn key_round_trips_through_row_index() {
        for r in 0..16 {
            assert_eq!(TableKey::from_row(r).row(), r);
        }
    }

    #[test]
    fn lookup_examples() {
        let r = correction_lookup(1, 0, Sign::Minus, Sign::Minus, NParity::Odd);
        assert_eq!((r.u_on_a, r.u_on_b, r.apply_cnot), (U3, U1, true));
        let r = correction_lookup(0, 0, Sign::Plus, Sign::Plus, NParity::Even);
        assert_eq!((r.u_on_a, r.u_on_b, r.apply_cnot), (U0, U0, false));
        let r = correction_lookup(0, 0, Sign::Plus, Sign::Plus, NParity::Odd);
        assert_eq!((r.u_on_a, r.u_on_b, r.apply_cnot), (U0, U0, true));
    }

    #[test]
    fn cnot_flag_follows_parity() {
        for p in [NParity::Even, NParity::Odd] {
            for row in golden_table(p) {
                assert_eq!(row.rule.apply_cnot, p == NParity::Odd);
            }
        }
    }

    /// Each tabulated state, corrected by its tabulated rule, gives back the
    /// input up to a global phase.
    #[test]
    fn golden_rows_are_self_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for p in [NParity::Even, NParity::Odd] {
            for row in golden_table(p) {
                for _ in 0..3 {
                    let input = TwoQubitInput::random(&mut rng);
                    let fixed = row.rule.apply(&row.state_for(&input)).unwrap();
                    assert!(
                        fixed.equal_up_to_global_phase(&input.to_state(), STATE_TOL).unwrap(),
                        "{p} row {}",
                        row.key
                    );
                }
            }
        }
    }

    #[test]
    fn worked_example_restores_with_minus_sign() {
        // d|00⟩ − c|01⟩ − a|10⟩ + b|11⟩ under U3⊗U1 then CNOT
        let input = TwoQubitInput::random(&mut ChaCha8Rng::seed_from_u64(4));
        let row = golden_row(
            TableKey {
                v_xa1: 1,
                v_total: 0,
                p_yb1: Sign::Minus,
                p_total: Sign::Minus,
            },
            NParity::Odd,
        );
        assert_eq!(row.state_string(), "+d|00⟩ -c|01⟩ -a|10⟩ +b|11⟩");
        let fixed = row.rule.apply(&row.state_for(&input)).unwrap();
        let lambda = fixed.global_phase(&input.to_state()).unwrap();
        assert!((lambda - Complex64::new(-1.0, 0.0)).norm() < STATE_TOL);
    }

    #[test]
    fn coefficient_table_examples() {
        use BellOutcome::*;
        let input = TwoQubitInput::random(&mut ChaCha8Rng::seed_from_u64(8));
        let (a, b, c, d) = (input.a, input.b, input.c, input.d);
        let got = coefficient_row(PhiPlus, PhiPlus).map(|p| p.eval(&input));
        let want = [a + b, a - b, c + d, c - d];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).norm() < 1e-15);
        }
        let got = coefficient_row(PsiMinus, PsiMinus).map(|p| p.eval(&input));
        let want = [-(c - d), c + d, a - b, -(a + b)];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).norm() < 1e-15);
        }
    }
}
