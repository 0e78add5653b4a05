use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bellcodec::BellOutcome;
use crate::channel::make_ghz;
use crate::error::{Error, Result};
use crate::protocol::derive_seed;
use crate::statevec::{Basis, StateVector};

/// What happens to qubits on their way from Alice to the first agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EavesdropModel {
    None,
    /// Each round is attacked with probability `fraction`: the qubit is
    /// measured in a random `z`/`x` basis and the eigenstate is sent on.
    InterceptResend {
        fraction: f64,
    },
}

impl EavesdropModel {
    fn fraction(self) -> f64 {
        match self {
            EavesdropModel::None => 0.0,
            EavesdropModel::InterceptResend { fraction } => fraction,
        }
    }

    /// Expected error rate of a check round. An attack in the wrong basis
    /// randomizes the checked correlation, so it errs half the time.
    pub fn expected_error_rate(self) -> f64 {
        self.fraction() / 4.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Abort,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSetup {
    pub rounds: usize,
    /// Share of rounds whose GHZ state is sacrificed for a correlation check.
    pub sample_fraction: f64,
    /// Share of rounds replaced by an Alice-held Bell-pair decoy.
    pub decoy_fraction: f64,
    pub eve: EavesdropModel,
    /// Abort above this error rate. Defaults to half the full-attack rate.
    pub threshold: Option<f64>,
    /// Controller count; each GHZ state has `controllers + 2` qubits.
    pub controllers: usize,
    pub seed: u64,
}

impl Default for ChannelSetup {
    fn default() -> Self {
        Self {
            rounds: 10_000,
            sample_fraction: 0.5,
            decoy_fraction: 0.25,
            eve: EavesdropModel::None,
            threshold: None,
            controllers: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    pub rounds: usize,
    pub sample_fraction: f64,
    pub sampled_rounds: usize,
    pub decoy_rounds: usize,
    pub errors: usize,
    pub error_rate: f64,
    pub expected_error_rate: f64,
    pub threshold: f64,
    pub decision: Decision,
}

#[derive(Default)]
struct Tally {
    sampled: usize,
    decoys: usize,
    errors: usize,
}

fn random_basis<R: Rng>(rng: &mut R) -> Basis {
    if rng.random::<bool>() {
        Basis::X
    } else {
        Basis::Z
    }
}

/// One check: Eve may intercept wire 1, then every wire is read in a basis
/// Alice announces. Returns whether the check failed.
fn check_round<R: Rng>(state: StateVector, eve: EavesdropModel, rng: &mut R) -> Result<bool> {
    let mut state = state;
    if rng.random::<f64>() < eve.fraction() {
        let (_, collapsed) = state.measure_wire(1, random_basis(rng), rng)?;
        state = collapsed;
    }
    let basis = random_basis(rng);
    let bits = state.measure_all(basis, rng)?;
    let ones = bits.iter().filter(|b| **b).count();
    Ok(match (basis, bits.len()) {
        // Bell pair Φ+ agrees in both bases
        (_, 2) => bits[0] != bits[1],
        (Basis::Z, _) => ones != 0 && ones != bits.len(),
        (Basis::X, _) => ones % 2 == 1,
    })
}

/// Simulates distribution of the GHZ sequence with random sampling and decoy
/// checks and decides whether to keep the channel.
pub fn setup_channel(cfg: &ChannelSetup) -> Result<ChannelReport> {
    let in_unit = |x: f64| (0.0..=1.0).contains(&x);
    if cfg.rounds == 0 {
        return Err(Error::InvalidConfig("at least one round is required".into()));
    }
    if !in_unit(cfg.sample_fraction) || !in_unit(cfg.decoy_fraction) || cfg.sample_fraction + cfg.decoy_fraction > 1.0 {
        return Err(Error::InvalidConfig(
            "sample and decoy fractions must lie in [0, 1] and sum to at most 1".into(),
        ));
    }
    if !in_unit(cfg.eve.fraction()) {
        return Err(Error::InvalidConfig("intercept fraction must lie in [0, 1]".into()));
    }
    let ghz = make_ghz(cfg.controllers + 2, Basis::Z)?;
    let decoy = BellOutcome::PhiPlus.state();

    let tally = (0..cfg.rounds)
        .into_par_iter()
        .map(|round| -> Result<Tally> {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, round as u64));
            let u: f64 = rng.random();
            let mut t = Tally::default();
            if u < cfg.sample_fraction {
                t.sampled = 1;
                t.errors = check_round(ghz.clone(), cfg.eve, &mut rng)? as usize;
            } else if u < cfg.sample_fraction + cfg.decoy_fraction {
                t.decoys = 1;
                t.errors = check_round(decoy.clone(), cfg.eve, &mut rng)? as usize;
            }
            Ok(t)
        })
        .try_reduce(Tally::default, |a, b| {
            Ok(Tally {
                sampled: a.sampled + b.sampled,
                decoys: a.decoys + b.decoys,
                errors: a.errors + b.errors,
            })
        })?;

    let checked = tally.sampled + tally.decoys;
    let error_rate = if checked == 0 {
        0.0
    } else {
        tally.errors as f64 / checked as f64
    };
    let full_attack = EavesdropModel::InterceptResend { fraction: 1.0 }.expected_error_rate();
    let threshold = cfg.threshold.unwrap_or(full_attack / 2.0);
    Ok(ChannelReport {
        rounds: cfg.rounds,
        sample_fraction: cfg.sample_fraction,
        sampled_rounds: tally.sampled,
        decoy_rounds: tally.decoys,
        errors: tally.errors,
        error_rate,
        expected_error_rate: cfg.eve.expected_error_rate(),
        threshold,
        decision: if error_rate <= threshold {
            Decision::Accept
        } else {
            Decision::Abort
        },
    })
}
