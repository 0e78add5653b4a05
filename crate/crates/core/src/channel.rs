//! GHZ resources and the composite register `x, y, a_1…a_{n+2}, b_1…b_{n+2}`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevec::{Basis, Gate, StateVector, TwoQubitInput};

/// Largest controller count a composite register is built for (22 wires).
pub const MAX_CONTROLLERS: usize = 8;

/// How the second GHZ channel is prepared and used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelVariant {
    /// Second GHZ state rotated into the x basis by Alice.
    XSecond,
    /// Both GHZ states in the z basis; the last controller applies H to her
    /// b-wire right before her Bell measurement.
    ZLateH,
    /// Both GHZ states in the z basis and no H anywhere. Only EPR-class
    /// states survive this channel.
    Direct,
}

impl ChannelVariant {
    pub const ALL: [ChannelVariant; 3] = [ChannelVariant::XSecond, ChannelVariant::ZLateH, ChannelVariant::Direct];

    pub fn second_basis(self) -> Basis {
        match self {
            ChannelVariant::XSecond => Basis::X,
            ChannelVariant::ZLateH | ChannelVariant::Direct => Basis::Z,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ChannelVariant::XSecond => "x-second",
            ChannelVariant::ZLateH => "z-late-h",
            ChannelVariant::Direct => "direct",
        }
    }
}

impl fmt::Display for ChannelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChannelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "x-second" | "xsecond" | "x" => Ok(ChannelVariant::XSecond),
            "z-late-h" | "zlateh" | "z" => Ok(ChannelVariant::ZLateH),
            "direct" => Ok(ChannelVariant::Direct),
            other => Err(Error::InvalidConfig(format!("unknown channel variant {other:?}"))),
        }
    }
}

/// `(|0…0⟩ + |1…1⟩)/√2` over `k` wires, optionally with H on every wire.
pub fn make_ghz(k: usize, basis: Basis) -> Result<StateVector> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!(
            "a GHZ state needs at least 2 wires, got {k}"
        )));
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << k];
    amps[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    amps[(1 << k) - 1] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let mut s = StateVector::from_amplitudes(amps)?;
    if basis == Basis::X {
        for w in 0..k {
            s = s.apply_single(Gate::H, w)?;
        }
    }
    Ok(s)
}

/// A named wire of the composite register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Wire {
    X,
    Y,
    /// `a_i`, 1-based.
    A(usize),
    /// `b_i`, 1-based.
    B(usize),
}

impl fmt::Display for Wire {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Wire::X => f.write_str("x"),
            Wire::Y => f.write_str("y"),
            Wire::A(i) => write!(f, "a{i}"),
            Wire::B(i) => write!(f, "b{i}"),
        }
    }
}

/// A protocol participant. Agents are numbered `1..=n+1`; agent `k` holds
/// `a_{k+1}` and `b_{k+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Party {
    Alice,
    Agent(usize),
}

/// One scheduled Bell measurement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementSlot {
    pub party: Party,
    pub first: Wire,
    pub second: Wire,
    /// Apply H to `second` right before measuring.
    pub hadamard_second: bool,
}

impl MeasurementSlot {
    pub fn label(&self) -> String {
        format!("{},{}", self.first, self.second)
    }
}

/// Layout of the composite register and who owns which wire.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireMap {
    n: usize,
    receiver: usize,
}

impl WireMap {
    /// Default roles: agents `1..=n` control, agent `n+1` receives.
    pub fn new(n: usize) -> Self {
        Self { n, receiver: n + 1 }
    }

    pub fn with_receiver(n: usize, receiver: usize) -> Result<Self> {
        if receiver == 0 || receiver > n + 1 {
            return Err(Error::InvalidConfig(format!(
                "receiver must be an agent in 1..={}, got {receiver}",
                n + 1
            )));
        }
        Ok(Self { n, receiver })
    }

    pub fn controllers_count(&self) -> usize {
        self.n
    }

    pub fn num_wires(&self) -> usize {
        2 * self.n + 6
    }

    pub fn receiver(&self) -> usize {
        self.receiver
    }

    pub fn index(&self, wire: Wire) -> usize {
        let k = self.n + 2;
        match wire {
            Wire::X => 0,
            Wire::Y => 1,
            Wire::A(i) => {
                assert!((1..=k).contains(&i), "a{i} out of range");
                1 + i
            }
            Wire::B(i) => {
                assert!((1..=k).contains(&i), "b{i} out of range");
                1 + k + i
            }
        }
    }

    /// Wires in register order.
    pub fn wires(&self) -> Vec<Wire> {
        let k = self.n + 2;
        let mut w = vec![Wire::X, Wire::Y];
        w.extend((1..=k).map(Wire::A));
        w.extend((1..=k).map(Wire::B));
        w
    }

    pub fn owner(&self, wire: Wire) -> Party {
        match wire {
            Wire::X | Wire::Y | Wire::A(1) | Wire::B(1) => Party::Alice,
            Wire::A(i) | Wire::B(i) => Party::Agent(i - 1),
        }
    }

    pub fn owned_by(&self, party: Party) -> Vec<Wire> {
        self.wires().into_iter().filter(|w| self.owner(*w) == party).collect()
    }

    /// Controlling agents in index order.
    pub fn controllers(&self) -> Vec<usize> {
        (1..=self.n + 1).filter(|&k| k != self.receiver).collect()
    }

    pub fn receiver_wires(&self) -> (Wire, Wire) {
        (Wire::A(self.receiver + 1), Wire::B(self.receiver + 1))
    }

    pub fn is_receiver(&self, party: Party) -> bool {
        party == Party::Agent(self.receiver)
    }

    pub fn party_name(&self, party: Party) -> String {
        match party {
            Party::Alice => "Alice".to_string(),
            Party::Agent(k) if k == self.receiver => "Bob".to_string(),
            Party::Agent(k) => format!("Charlie_{k}"),
        }
    }

    /// The measurement cascade: Alice's two pairs, then each controller.
    pub fn measurement_slots(&self, variant: ChannelVariant) -> Vec<MeasurementSlot> {
        let mut slots = vec![
            MeasurementSlot {
                party: Party::Alice,
                first: Wire::X,
                second: Wire::A(1),
                hadamard_second: false,
            },
            MeasurementSlot {
                party: Party::Alice,
                first: Wire::Y,
                second: Wire::B(1),
                hadamard_second: false,
            },
        ];
        let controllers = self.controllers();
        let last = controllers.last().copied();
        for k in controllers {
            slots.push(MeasurementSlot {
                party: Party::Agent(k),
                first: Wire::A(k + 1),
                second: Wire::B(k + 1),
                hadamard_second: variant == ChannelVariant::ZLateH && Some(k) == last,
            });
        }
        slots
    }
}

/// `input ⊗ GHZ_z(n+2) ⊗ GHZ_second(n+2)` with the default wire map.
pub fn assemble_composite(input: &TwoQubitInput, n: usize, variant: ChannelVariant) -> Result<(StateVector, WireMap)> {
    if n > MAX_CONTROLLERS {
        return Err(Error::InvalidConfig(format!(
            "at most {MAX_CONTROLLERS} controllers are supported, got {n}"
        )));
    }
    let first = make_ghz(n + 2, Basis::Z)?;
    let second = make_ghz(n + 2, variant.second_basis())?;
    let state = input.to_state().tensor(&first).tensor(&second);
    Ok((state, WireMap::new(n)))
}
