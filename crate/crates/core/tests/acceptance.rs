//! Acceptance criteria. Runs without the libtest harness so every criterion
//! prints its PASS/FAIL line; exits non-zero if any criterion fails.

use std::time::Instant;

use cteleport::bellcodec::{BellOutcome, Sign};
use cteleport::channel::{ChannelVariant, WireMap};
use cteleport::netsim::efficiency_report;
use cteleport::protocol::{
    branch_is_invertible, derive_correction_table, run_teleport, verify_all_branches, walk_branches, DerivedTable,
    ModePlan, NParity, RunStatus,
};
use cteleport::qss::{
    max_marginal_deviation, outcome_marginals, qss_exhaustive, setup_channel, withheld_fidelity, ChannelSetup,
    ClassicalMessage, Decision, EavesdropModel,
};
use cteleport::statevec::{StateVector, TwoQubitInput};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Verdict = (&'static str, bool, String);

fn random_inputs(seed: u64, count: usize) -> Vec<TwoQubitInput> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| TwoQubitInput::random(&mut rng)).collect()
}

fn generic_input() -> TwoQubitInput {
    TwoQubitInput::renormalized(
        [
            Complex64::new(0.5, 0.1),
            Complex64::new(-0.3, 0.4),
            Complex64::new(0.2, -0.6),
            Complex64::new(0.1, 0.25),
        ],
        1.0,
    )
    .unwrap()
    .0
}

/// Table derivation plus exhaustive branch checks over random inputs.
/// Returns (ok, detail).
fn table_check(parity: NParity, variant: ChannelVariant, seed: u64) -> (bool, String) {
    let n = match parity {
        NParity::Odd => 1,
        NParity::Even => 2,
    };
    let started = Instant::now();
    let table: DerivedTable = match derive_correction_table(parity, variant, seed) {
        Ok(t) => t,
        Err(e) => return (false, format!("derivation failed: {e}")),
    };
    let mismatched = table.golden_mismatches();
    let mut branches = 0;
    let mut worst = 0.0f64;
    let mut failed = 0;
    let mut cnot_used = false;
    for input in random_inputs(seed ^ 0x5eed, 20) {
        let r = verify_all_branches(&input, n, variant).unwrap();
        branches = r.branches;
        worst = worst.max(r.max_fidelity_deviation);
        failed += r.branches - r.passed;
        cnot_used |= r.cnot_used;
    }
    let mut ok = mismatched.is_empty() && failed == 0 && worst <= 1e-10;
    if parity == NParity::Even {
        ok &= !cnot_used;
    }
    let detail = format!(
        "{}/16 rows match, {branches} branches x 20 inputs, {failed} failures, max |1-F| = {worst:.2e}, cnot used = {cnot_used}, {:.2}s",
        16 - mismatched.len(),
        started.elapsed().as_secs_f64()
    );
    (ok, detail)
}

fn criterion_01_odd_correction_table() -> Verdict {
    let (ok, detail) = table_check(NParity::Odd, ChannelVariant::XSecond, 11);
    ("odd-parity correction table", ok, detail)
}

fn criterion_02_even_correction_table() -> Verdict {
    let (ok, detail) = table_check(NParity::Even, ChannelVariant::XSecond, 12);
    ("even-parity correction table", ok, detail)
}

fn criterion_03_worked_example() -> Verdict {
    use BellOutcome::*;
    let input = generic_input();
    let t = run_teleport(
        &input,
        1,
        ChannelVariant::XSecond,
        &ModePlan::forced(&[PsiMinus, PhiMinus, PsiMinus]),
    )
    .unwrap();
    let rule = t.correction.expect("a correction");
    let ok = t.key.v_xa1 == 1
        && t.v_total == 0
        && t.key.p_yb1 == Sign::Minus
        && t.p_total == Sign::Minus
        && rule.to_string() == "U3⊗U1 + CNot"
        && (t.fidelity - 1.0).abs() <= 1e-10;
    (
        "worked example",
        ok,
        format!(
            "V_xa1={} V_total={} P_yb1={} P_total={} correction {rule} fidelity {:.12}",
            t.key.v_xa1,
            t.v_total,
            t.key.p_yb1.symbol(),
            t.p_total.symbol(),
            t.fidelity
        ),
    )
}

fn criterion_04_direct_channel_limitation() -> Verdict {
    let input = generic_input();
    let t = run_teleport(
        &input,
        1,
        ChannelVariant::Direct,
        &ModePlan::forced(&[BellOutcome::PhiPlus; 3]),
    )
    .unwrap();
    let zero = Complex64::new(0.0, 0.0);
    let epr = StateVector::normalized(vec![input.a, zero, zero, input.d]).unwrap();
    let dist = t.pre_correction.phase_distance(&epr).unwrap();
    let ok = dist <= 1e-12 && t.status == RunStatus::EprClassDemo;
    (
        "direct channel keeps only the a|00>+d|11> part",
        ok,
        format!("distance {dist:.2e}, status {:?}", t.status),
    )
}

fn criterion_05_closed_form_predictor() -> Verdict {
    let mut worst = 0.0f64;
    let mut checked = 0;
    for n in 0..=4 {
        for input in random_inputs(500 + n as u64, 3) {
            let r = verify_all_branches(&input, n, ChannelVariant::XSecond).unwrap();
            worst = worst.max(r.max_predictor_distance);
            checked += r.branches;
        }
    }
    (
        "closed-form predictor",
        worst <= 1e-10,
        format!("{checked} branches over n=0..4, max distance {worst:.2e}"),
    )
}

fn criterion_06_branch_uniformity() -> Verdict {
    let mut worst = 0.0f64;
    let mut checked = 0;
    for n in 0..=4 {
        let expect = 4f64.powi(-(n as i32 + 2));
        for input in random_inputs(600 + n as u64, 3) {
            let leaves = walk_branches(&input, &WireMap::new(n), ChannelVariant::XSecond).unwrap();
            assert_eq!(leaves.len(), 4usize.pow(n as u32 + 2));
            for leaf in &leaves {
                worst = worst.max((leaf.probability - expect).abs());
            }
            checked += leaves.len();
        }
    }
    (
        "branch uniformity",
        worst <= 1e-10,
        format!("{checked} branches over n=0..4, max |p-4^-(n+2)| = {worst:.2e}"),
    )
}

fn criterion_07_late_hadamard_equivalence() -> Verdict {
    let (odd_ok, odd) = table_check(NParity::Odd, ChannelVariant::ZLateH, 11);
    let (even_ok, even) = table_check(NParity::Even, ChannelVariant::ZLateH, 12);
    // Whether any two-qubit correction at all could undo each branch.
    let mut invertible = Vec::new();
    for n in 1..=2 {
        let map = WireMap::new(n);
        let leaves = walk_branches(&generic_input(), &map, ChannelVariant::ZLateH).unwrap();
        let good = leaves
            .iter()
            .filter(|l| branch_is_invertible(&map, ChannelVariant::ZLateH, &l.outcomes).unwrap())
            .count();
        invertible.push(format!("n={n}: {good}/{} branches invertible", leaves.len()));
    }
    (
        "late-Hadamard variant gives identical tables",
        odd_ok && even_ok,
        format!("odd: {odd}; even: {even}; {}", invertible.join(", ")),
    )
}

fn criterion_08_classical_secret_round_trip() -> Verdict {
    let mut lines = Vec::new();
    let mut ok = true;
    for n in 1..=3 {
        for msg in ClassicalMessage::ALL {
            let s = qss_exhaustive(msg, n).unwrap();
            ok &= s.all_correct();
            lines.push(format!("{msg}@n={n} {}/{}", s.decoded_correctly, s.branches));
        }
    }
    ("classical secret round trip", ok, lines.join(", "))
}

fn criterion_09_efficiency() -> Verdict {
    let one = efficiency_report(1);
    let mut ok = (one.eta_q - 1.0 / 3.0).abs() < 1e-15;
    for n in 0..=6 {
        let r = efficiency_report(n);
        ok &= (r.eta_q - 1.0 / (n as f64 + 2.0)).abs() < 1e-15;
    }
    (
        "qubit efficiency",
        ok,
        format!("eta_q(1) = {:.4}, eta_t(1) = {:.4}", one.eta_q, one.eta_t),
    )
}

fn criterion_10_controller_privacy() -> Verdict {
    let mut worst_marginal = 0.0f64;
    let mut worst_dependence = 0.0f64;
    let inputs = random_inputs(1000, 3);
    for n in 1..=3 {
        let base = outcome_marginals(&inputs[0], n).unwrap();
        worst_marginal = worst_marginal.max(max_marginal_deviation(&base));
        for input in &inputs[1..] {
            let m = outcome_marginals(input, n).unwrap();
            worst_marginal = worst_marginal.max(max_marginal_deviation(&m));
            for (x, y) in m.iter().flatten().zip(base.iter().flatten()) {
                worst_dependence = worst_dependence.max((x - y).abs());
            }
        }
    }
    let mut guesses = Vec::new();
    let mut below = true;
    for n in 1..=3 {
        for c in 1..=n {
            let f = withheld_fidelity(&generic_input(), n, c).unwrap();
            below &= f < 1.0 - 1e-6;
            guesses.push(format!("n={n} c={c} F={f:.4}"));
        }
    }
    let ok = worst_marginal <= 1e-10 && worst_dependence <= 1e-10 && below;
    ("controller privacy",
        ok,
        format!(
            "max marginal deviation {worst_marginal:.2e}, max input dependence {worst_dependence:.2e}, withheld guess fidelity {}",
            guesses.join(", ")
        ),
    )
}

fn criterion_11_intercept_resend_detection() -> Verdict {
    let attacked = ChannelSetup {
        rounds: 10_000,
        eve: EavesdropModel::InterceptResend { fraction: 1.0 },
        seed: 2024,
        ..ChannelSetup::default()
    };
    let r = setup_channel(&attacked).unwrap();
    let clean = setup_channel(&ChannelSetup {
        seed: 2024,
        ..ChannelSetup::default()
    })
    .unwrap();
    let ok = (r.error_rate - r.expected_error_rate).abs() <= 0.02
        && r.decision == Decision::Abort
        && clean.errors == 0
        && clean.error_rate == 0.0
        && clean.decision == Decision::Accept;
    (
        "intercept-resend detection",
        ok,
        format!(
            "attacked rate {:.4} vs oracle {:.4} over {} samples, clean rate {}",
            r.error_rate, r.expected_error_rate, r.sampled_rounds, clean.error_rate
        ),
    )
}

fn main() {
    let criteria: [fn() -> Verdict; 11] = [
        criterion_01_odd_correction_table,
        criterion_02_even_correction_table,
        criterion_03_worked_example,
        criterion_04_direct_channel_limitation,
        criterion_05_closed_form_predictor,
        criterion_06_branch_uniformity,
        criterion_07_late_hadamard_equivalence,
        criterion_08_classical_secret_round_trip,
        criterion_09_efficiency,
        criterion_10_controller_privacy,
        criterion_11_intercept_resend_detection,
    ];
    let mut failed = Vec::new();
    for (i, check) in criteria.iter().enumerate() {
        let id = i + 1;
        let (name, ok, detail) = match std::panic::catch_unwind(check) {
            Ok(v) => v,
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
                ("panicked", false, msg.unwrap_or_default())
            }
        };
        println!(
            "criterion {id}: {name}: {} ({detail})",
            if ok { "PASS" } else { "FAIL" }
        );
        if !ok {
            failed.push(id);
        }
    }
    println!(
        "acceptance: {}/{} criteria pass",
        criteria.len() - failed.len(),
        criteria.len()
    );
    if !failed.is_empty() {
        println!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
