use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bellcodec::BellOutcome;
use crate::statevec::TwoQubitInput;

use super::tables::coefficient_row;

/// Coefficients of the unnormalized state left after Alice's two Bell
/// measurements:
///
/// `|0…0⟩_a (α|+x…⟩ + β|−x…⟩)_b + |1…1⟩_a (γ|+x…⟩ + δ|−x…⟩)_b`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsystemCoeffs {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub gamma: Complex64,
    pub delta: Complex64,
}

pub fn subsystem_coeffs(input: &TwoQubitInput, r_xa1: BellOutcome, r_yb1: BellOutcome) -> SubsystemCoeffs {
    let [alpha, beta, gamma, delta] = coefficient_row(r_xa1, r_yb1).map(|p| p.eval(input));
    SubsystemCoeffs {
        alpha,
        beta,
        gamma,
        delta,
    }
}

/// How many controllers saw `Φ+, Φ−, Ψ+, Ψ−`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OutcomeCounts {
    pub k: usize,
    pub l: usize,
    pub m: usize,
    pub r: usize,
}

impl OutcomeCounts {
    pub fn from_outcomes(outcomes: &[BellOutcome]) -> Self {
        let mut c = Self::default();
        for o in outcomes {
            match o {
                BellOutcome::PhiPlus => c.k += 1,
                BellOutcome::PhiMinus => c.l += 1,
                BellOutcome::PsiPlus => c.m += 1,
                BellOutcome::PsiMinus => c.r += 1,
            }
        }
        c
    }

    pub fn n(&self) -> usize {
        self.k + self.l + self.m + self.r
    }
}

fn sign(exp: usize) -> f64 {
    if exp.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Receiver's unnormalized pre-correction amplitudes on
/// `|00⟩, |01⟩, |10⟩, |11⟩` for the given controller counts.
pub fn predicted_final(coeffs: &SubsystemCoeffs, counts: &OutcomeCounts) -> [Complex64; 4] {
    let n = counts.n();
    let (k, l, m) = (counts.k, counts.l, counts.m);
    let s_ab = sign(n - l - k);
    let s_outer = sign(n - m - k);
    let s_cd = sign(k + l);
    let SubsystemCoeffs {
        alpha,
        beta,
        gamma,
        delta,
    } = *coeffs;
    [
        alpha + beta * s_ab,
        alpha - beta * s_ab,
        (gamma + delta * s_cd) * s_outer,
        (gamma - delta * s_cd) * s_outer,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bellcodec::{bell_project, BellOutcome::*};
    use crate::channel::{assemble_composite, ChannelVariant, Wire};
    use crate::statevec::{Gate, StateVector, STATE_TOL};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close4(a: [Complex64; 4], b: [Complex64; 4]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).norm() < 1e-12)
    }

    #[test]
    fn even_all_phi_plus_gives_the_input() {
        let input = TwoQubitInput::random(&mut ChaCha8Rng::seed_from_u64(1));
        let co = subsystem_coeffs(&input, PhiPlus, PhiPlus);
        let got = predicted_final(
            &co,
            &OutcomeCounts {
                k: 2,
                ..Default::default()
            },
        );
        let two = |z: Complex64| z * 2.0;
        assert!(close4(got, [two(input.a), two(input.b), two(input.c), two(input.d)]));
    }

    #[test]
    fn odd_single_phi_plus_matches_first_odd_row() {
        // k = 1 evaluates to (2a, 2b, 2d, 2c)
        let input = TwoQubitInput::random(&mut ChaCha8Rng::seed_from_u64(2));
        let co = subsystem_coeffs(&input, PhiPlus, PhiPlus);
        let got = predicted_final(
            &co,
            &OutcomeCounts {
                k: 1,
                ..Default::default()
            },
        );
        let (a, b, c, d) = (input.a, input.b, input.c, input.d);
        assert!(close4(got, [a * 2.0, b * 2.0, d * 2.0, c * 2.0]));
        let normalized = StateVector::normalized(got.to_vec()).unwrap();
        let row = StateVector::from_amplitudes(vec![a, b, d, c]).unwrap();
        assert!(normalized.equal_up_to_global_phase(&row, STATE_TOL).unwrap());
    }

    #[test]
    fn cancellation_when_alpha_equals_beta() {
        let one = Complex64::new(0.5, 0.0);
        let co = SubsystemCoeffs {
            alpha: one,
            beta: one,
            gamma: one,
            delta: one,
        };
        let got = predicted_final(
            &co,
            &OutcomeCounts {
                k: 2,
                ..Default::default()
            },
        );
        assert_eq!(got[1], Complex64::new(0.0, 0.0));
        assert_eq!(got[3], Complex64::new(0.0, 0.0));
    }

    /// After Alice's two measurements, the simulated register is proportional
    /// to the superposition built from the tabulated α, β, γ, δ.
    #[test]
    fn coefficient_table_matches_simulation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 0..=2 {
            let input = TwoQubitInput::random(&mut rng);
            let (state, map) = assemble_composite(&input, n, ChannelVariant::XSecond).unwrap();
            let k = n + 1; // remaining wires per GHZ
            for rx in BellOutcome::ALL {
                for ry in BellOutcome::ALL {
                    let s1 = bell_project(&state, map.index(Wire::X), map.index(Wire::A(1)), rx)
                        .unwrap()
                        .collapsed;
                    // wires now: y, a2.., b1, b2..; y at 0, b1 at 1 + k
                    let s2 = bell_project(&s1, 0, 1 + k, ry).unwrap().collapsed;

                    let co = subsystem_coeffs(&input, rx, ry);
                    let zeros = StateVector::basis_state(k, &"0".repeat(k)).unwrap();
                    let ones = StateVector::basis_state(k, &"1".repeat(k)).unwrap();
                    let mut plus = zeros.clone();
                    let mut minus = ones.clone();
                    for w in 0..k {
                        plus = plus.apply_single(Gate::H, w).unwrap();
                        minus = minus.apply_single(Gate::H, w).unwrap();
                    }
                    let dim = 1 << (2 * k);
                    let mut expect = vec![Complex64::new(0.0, 0.0); dim];
                    for (ia, (z, o)) in zeros.amplitudes().iter().zip(ones.amplitudes()).enumerate() {
                        for (ib, (p, q)) in plus.amplitudes().iter().zip(minus.amplitudes()).enumerate() {
                            expect[(ia << k) | ib] =
                                z * (co.alpha * p + co.beta * q) + o * (co.gamma * p + co.delta * q);
                        }
                    }
                    let expect = StateVector::normalized(expect).unwrap();
                    assert!(
                        s2.equal_up_to_global_phase(&expect, STATE_TOL).unwrap(),
                        "n={n} {rx} {ry}"
                    );
                }
            }
        }
    }
}
