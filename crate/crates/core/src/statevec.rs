//! Dense pure-state simulation over labeled qubit wires.
//!
//! Wire 0 is the most significant bit of the amplitude index: in a
//! 3-qubit register, `|w0 w1 w2⟩` lives at index `w0·4 + w1·2 + w2`.
//! Every module in the crate uses this one convention.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on squared norms and probabilities.
pub const NORM_TOL: f64 = 1e-12;
/// Tolerance on amplitude-level state equality.
pub const STATE_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Measurement basis for single-qubit readout and GHZ preparation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    /// σ_z eigenbasis {|0⟩, |1⟩}.
    Z,
    /// σ_x eigenbasis {|+x⟩, |−x⟩}.
    X,
}

/// The fixed single-qubit gates used by the protocol.
///
/// `U3` is `|0⟩⟨1| − |1⟩⟨0|`, which differs from the Pauli Y by a
/// factor of `i`. The sign matters for the global phases reported in
/// traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gate {
    U0,
    U1,
    U2,
    U3,
    H,
}

impl Gate {
    pub const PAULI_CORRECTIONS: [Gate; 4] = [Gate::U0, Gate::U1, Gate::U2, Gate::U3];

    /// Row-major 2×2 matrix.
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let r = |x: f64| Complex64::new(x, 0.0);
        match self {
            Gate::U0 => [[r(1.0), r(0.0)], [r(0.0), r(1.0)]],
            Gate::U1 => [[r(1.0), r(0.0)], [r(0.0), r(-1.0)]],
            Gate::U2 => [[r(0.0), r(1.0)], [r(1.0), r(0.0)]],
            Gate::U3 => [[r(0.0), r(1.0)], [r(-1.0), r(0.0)]],
            Gate::H => [
                [r(FRAC_1_SQRT_2), r(FRAC_1_SQRT_2)],
                [r(FRAC_1_SQRT_2), r(-FRAC_1_SQRT_2)],
            ],
        }
    }

    /// Index into `PAULI_CORRECTIONS`, `None` for `H`.
    pub fn correction_index(self) -> Option<usize> {
        match self {
            Gate::U0 => Some(0),
            Gate::U1 => Some(1),
            Gate::U2 => Some(2),
            Gate::U3 => Some(3),
            Gate::H => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Gate::U0 => "U0",
            Gate::U1 => "U1",
            Gate::U2 => "U2",
            Gate::U3 => "U3",
            Gate::H => "H",
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A normalized pure state over `num_qubits` wires.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

/// Result of projecting two wires of a register onto a two-qubit state.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub probability: f64,
    pub collapsed: StateVector,
}

#[inline]
fn bit_pos(num_qubits: usize, wire: usize) -> usize {
    num_qubits - 1 - wire
}

#[inline]
fn remove_bit(k: usize, pos: usize) -> usize {
    ((k >> (pos + 1)) << pos) | (k & ((1 << pos) - 1))
}

fn norm_sqr(amps: &[Complex64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum()
}

impl StateVector {
    /// Builds a state from amplitudes, checking length and normalization.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(len));
        }
        let n = norm_sqr(&amps);
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sqr: n });
        }
        Ok(Self {
            num_qubits: len.trailing_zeros() as usize,
            amps,
        })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(len));
        }
        let n = norm_sqr(&amps);
        if n <= 0.0 || !n.is_finite() {
            return Err(Error::NotNormalized { norm_sqr: n });
        }
        let s = 1.0 / n.sqrt();
        Ok(Self {
            num_qubits: len.trailing_zeros() as usize,
            amps: amps.into_iter().map(|a| a * s).collect(),
        })
    }

    /// Computational basis state from a bit string such as `"101"`.
    pub fn basis_state(num_qubits: usize, bits: &str) -> Result<Self> {
        let got = bits.chars().count();
        if num_qubits == 0 || got != num_qubits {
            return Err(Error::LengthMismatch {
                expected: num_qubits,
                got,
            });
        }
        let mut index = 0usize;
        for c in bits.chars() {
            index <<= 1;
            match c {
                '0' => {}
                '1' => index |= 1,
                other => return Err(Error::InvalidBit(other)),
            }
        }
        let mut amps = vec![ZERO; 1 << num_qubits];
        amps[index] = ONE;
        Ok(Self { num_qubits, amps })
    }

    /// The empty register, a scalar of modulus one.
    pub fn scalar(phase: Complex64) -> Self {
        Self {
            num_qubits: 0,
            amps: vec![phase],
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amps)
    }

    fn check_wire(&self, wire: usize) -> Result<()> {
        if wire >= self.num_qubits {
            Err(Error::QubitOutOfRange {
                index: wire,
                num_qubits: self.num_qubits,
            })
        } else {
            Ok(())
        }
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        self.check_wire(i)?;
        self.check_wire(j)?;
        if i == j {
            return Err(Error::SameWire(i));
        }
        Ok(())
    }

    fn check_same_size(&self, other: &Self) -> Result<()> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::SizeMismatch {
                left: self.num_qubits,
                right: other.num_qubits,
            });
        }
        Ok(())
    }

    /// `self ⊗ other`, with `self`'s wires first.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Self {
            num_qubits: self.num_qubits + other.num_qubits,
            amps,
        }
    }

    pub fn apply_single(&self, gate: Gate, target: usize) -> Result<Self> {
        self.apply_matrix(&gate.matrix(), target)
    }

    pub fn apply_matrix(&self, m: &[[Complex64; 2]; 2], target: usize) -> Result<Self> {
        self.check_wire(target)?;
        let mask = 1 << bit_pos(self.num_qubits, target);
        let mut amps = self.amps.clone();
        for k in 0..amps.len() {
            if k & mask == 0 {
                let a0 = self.amps[k];
                let a1 = self.amps[k | mask];
                amps[k] = m[0][0] * a0 + m[0][1] * a1;
                amps[k | mask] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        Ok(Self {
            num_qubits: self.num_qubits,
            amps,
        })
    }

    pub fn apply_cnot(&self, control: usize, target: usize) -> Result<Self> {
        self.check_pair(control, target)?;
        let cmask = 1 << bit_pos(self.num_qubits, control);
        let tmask = 1 << bit_pos(self.num_qubits, target);
        let mut amps = self.amps.clone();
        for (k, amp) in amps.iter_mut().enumerate() {
            if k & cmask != 0 {
                *amp = self.amps[k ^ tmask];
            }
        }
        Ok(Self {
            num_qubits: self.num_qubits,
            amps,
        })
    }

    /// Unnormalized partial inner product `⟨basis|_{ij} |self⟩`.
    ///
    /// The remaining wires keep their relative order.
    pub fn partial_inner(&self, basis: &StateVector, i: usize, j: usize) -> Result<Vec<Complex64>> {
        self.check_pair(i, j)?;
        if basis.num_qubits != 2 {
            return Err(Error::SizeMismatch {
                left: 2,
                right: basis.num_qubits,
            });
        }
        let n = self.num_qubits;
        let (pi, pj) = (bit_pos(n, i), bit_pos(n, j));
        let (hi, lo) = if pi > pj { (pi, pj) } else { (pj, pi) };
        let bra: Vec<Complex64> = basis.amps.iter().map(|a| a.conj()).collect();
        let mut out = vec![ZERO; 1 << (n - 2)];
        for (k, amp) in self.amps.iter().enumerate() {
            if *amp == ZERO {
                continue;
            }
            let bi = (k >> pi) & 1;
            let bj = (k >> pj) & 1;
            let r = remove_bit(remove_bit(k, hi), lo);
            out[r] += bra[(bi << 1) | bj] * amp;
        }
        Ok(out)
    }

    /// Projects wires `(i, j)` onto `basis`, removes them from the register
    /// and renormalizes what is left.
    pub fn project_pair(&self, basis: &StateVector, i: usize, j: usize) -> Result<Projection> {
        let raw = self.partial_inner(basis, i, j)?;
        let probability = norm_sqr(&raw);
        if probability <= f64::EPSILON * f64::EPSILON {
            return Err(Error::ZeroProbability { i, j });
        }
        let s = 1.0 / probability.sqrt();
        Ok(Projection {
            probability,
            collapsed: Self {
                num_qubits: self.num_qubits - 2,
                amps: raw.into_iter().map(|a| a * s).collect(),
            },
        })
    }

    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.check_same_size(other)?;
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|⟨self|other⟩|²`, clamped to `[0, 1]`.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr().clamp(0.0, 1.0))
    }

    /// The unit-modulus `λ` minimizing `‖self − λ·reference‖`.
    ///
    /// Falls back to `1` when the states are orthogonal.
    pub fn global_phase(&self, reference: &Self) -> Result<Complex64> {
        let ip = reference.inner(self)?;
        let m = ip.norm();
        Ok(if m > 0.0 { ip / m } else { ONE })
    }

    /// `min_λ ‖self − λ·other‖` over unit-modulus `λ`.
    pub fn phase_distance(&self, other: &Self) -> Result<f64> {
        let lambda = self.global_phase(other)?;
        let dist_sqr: f64 = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - lambda * b).norm_sqr())
            .sum();
        Ok(dist_sqr.sqrt())
    }

    pub fn equal_up_to_global_phase(&self, other: &Self, tol: f64) -> Result<bool> {
        Ok(self.phase_distance(other)? <= tol)
    }

    /// Probability that `wire` reads `0` in the given basis.
    fn prob_zero(&self, wire: usize, basis: Basis) -> Result<f64> {
        let rotated = match basis {
            Basis::Z => None,
            Basis::X => Some(self.apply_single(Gate::H, wire)?),
        };
        let s = rotated.as_ref().unwrap_or(self);
        let mask = 1 << bit_pos(s.num_qubits, wire);
        Ok(s.amps
            .iter()
            .enumerate()
            .filter(|(k, _)| k & mask == 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Projective single-wire measurement that leaves the wire in place,
    /// collapsed to the observed eigenstate. Returns `false` for `|0⟩`/`|+x⟩`.
    pub fn measure_wire<R: Rng + ?Sized>(&self, wire: usize, basis: Basis, rng: &mut R) -> Result<(bool, Self)> {
        self.check_wire(wire)?;
        let p0 = self.prob_zero(wire, basis)?;
        let outcome = rng.random::<f64>() >= p0;
        let rotated = match basis {
            Basis::Z => self.clone(),
            Basis::X => self.apply_single(Gate::H, wire)?,
        };
        let mask = 1 << bit_pos(self.num_qubits, wire);
        let mut amps: Vec<Complex64> = rotated
            .amps
            .iter()
            .enumerate()
            .map(|(k, a)| if ((k & mask) != 0) == outcome { *a } else { ZERO })
            .collect();
        let n = norm_sqr(&amps);
        let s = 1.0 / n.sqrt();
        amps.iter_mut().for_each(|a| *a *= s);
        let collapsed = Self {
            num_qubits: self.num_qubits,
            amps,
        };
        let collapsed = match basis {
            Basis::Z => collapsed,
            Basis::X => collapsed.apply_single(Gate::H, wire)?,
        };
        Ok((outcome, collapsed))
    }

    /// Measures every wire in `basis` and returns the bits in wire order.
    pub fn measure_all<R: Rng + ?Sized>(&self, basis: Basis, rng: &mut R) -> Result<Vec<bool>> {
        let mut s = self.clone();
        if basis == Basis::X {
            for w in 0..self.num_qubits {
                s = s.apply_single(Gate::H, w)?;
            }
        }
        let u = rng.random::<f64>();
        let mut acc = 0.0;
        let mut index = s.amps.len() - 1;
        for (k, a) in s.amps.iter().enumerate() {
            acc += a.norm_sqr();
            if u < acc {
                index = k;
                break;
            }
        }
        Ok((0..self.num_qubits)
            .map(|w| (index >> bit_pos(self.num_qubits, w)) & 1 == 1)
            .collect())
    }
}

/// The unknown two-qubit state `a|00⟩ + b|01⟩ + c|10⟩ + d|11⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitInput {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl TwoQubitInput {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        let input = Self { a, b, c, d };
        let n = input.norm_sqr();
        if (n - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sqr: n });
        }
        Ok(input)
    }

    /// Accepts amplitudes whose squared norm is off by at most `slack` and
    /// rescales them. The flag reports whether rescaling happened.
    pub fn renormalized(amps: [Complex64; 4], slack: f64) -> Result<(Self, bool)> {
        let n: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (n - 1.0).abs() > slack || n <= 0.0 {
            return Err(Error::NotNormalized { norm_sqr: n });
        }
        let s = 1.0 / n.sqrt();
        let rescaled = (n - 1.0).abs() > NORM_TOL;
        Ok((
            Self {
                a: amps[0] * s,
                b: amps[1] * s,
                c: amps[2] * s,
                d: amps[3] * s,
            },
            rescaled,
        ))
    }

    /// Gaussian-sampled amplitudes, uniform on the unit sphere of ℂ⁴.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        loop {
            let mut amps = [ZERO; 4];
            for a in &mut amps {
                *a = Complex64::new(gaussian(rng), gaussian(rng));
            }
            if let Ok((input, _)) = Self::renormalized(amps, f64::INFINITY) {
                let n: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
                if n > 1e-6 {
                    return input;
                }
            }
        }
    }

    pub fn amplitudes(&self) -> [Complex64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes().iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn to_state(&self) -> StateVector {
        StateVector {
            num_qubits: 2,
            amps: self.amplitudes().to_vec(),
        }
    }
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
