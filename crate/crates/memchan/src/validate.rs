//! Runtime invariant suite.
//!
//! Mirrors the structural guarantees the test suite relies on, but callable
//! from a built binary: channel completeness, relaxation-family behavior,
//! causality of the sequence composition, purification invariance and the
//! attenuation trajectory constraints. Supports injecting an out-of-range
//! relaxation parameter as a negative control.

use crate::attenuation::{
    closed_form_gbar, iterate_environment, iterated_gbar, modified_map, AttenuationError,
    AttenuationProtocol,
};
use crate::channels::{
    amplitude_damping, apply_sequence, compose_sequence, eta_profile, memoryless_map,
    phase_damping, CarrierSequence, EnvironmentModel,
};
use crate::linalg::ComplexMatrix;
use crate::markov::DecoherentRelaxation;
use crate::quantum::{partial_trace, purify, DensityOperator, PureState, QuantumChannel};
use crate::rates::{coherent_information, coherent_information_from_purification};
use crate::sampling;
use crate::scalar::Scalar;
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of one named check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn pass(name: &'static str, detail: impl Into<String>) -> Self {
        Self { name, passed: true, detail: detail.into() }
    }

    fn fail(name: &'static str, detail: impl Into<String>) -> Self {
        Self { name, passed: false, detail: detail.into() }
    }
}

/// Options for the suite; the fault shifts the relaxation parameter above
/// one so the relaxation-family checks must fail.
#[derive(Debug, Clone, Copy, Default)]
pub struct ValidateOptions {
    pub inject_eta_fault: bool,
}

/// Runs every check and returns the results in a fixed order; deterministic
/// from run to run.
pub fn run_suite<T: Scalar>(opts: ValidateOptions) -> Vec<CheckResult> {
    let tau_e = T::one();
    let eta_at = move |tau: T| {
        let eta = eta_profile(tau, tau_e);
        if opts.inject_eta_fault {
            eta + T::lit(0.1)
        } else {
            eta
        }
    };

    vec![
        check_relaxation_stationarity(eta_at, tau_e),
        check_relaxation_full_reset(eta_at, tau_e),
        check_relaxation_identity_at_zero(eta_at),
        check_kraus_completeness::<T>(),
        check_memoryless_factorization::<T>(),
        check_sequence_causality::<T>(),
        check_purification_invariance::<T>(),
        check_trajectory_y_zero::<T>(),
        check_closed_form_consistency::<T>(),
        check_gbar_endpoints::<T>(),
    ]
}

pub fn all_passed(results: &[CheckResult]) -> bool {
    results.iter().all(|r| r.passed)
}

fn check_relaxation_stationarity<T: Scalar>(
    eta_at: impl Fn(T) -> T,
    tau_e: T,
) -> CheckResult {
    const NAME: &str = "relaxation-stationarity";
    let ground = DensityOperator::pure(&PureState::<T>::basis(2, 0));
    let mut worst = T::zero();
    for frac in [0.0, 0.25, 0.5, 1.0, 2.0] {
        let tau = tau_e * T::lit(frac);
        let channel = match amplitude_damping(eta_at(tau)) {
            Ok(c) => c,
            Err(e) => {
                return CheckResult::fail(
                    NAME,
                    format!("relaxation channel invalid at tau = {frac} tau_e: {e}"),
                )
            }
        };
        match channel.apply(&ground) {
            Ok(out) => worst = worst.max(out.max_abs_diff(&ground)),
            Err(e) => return CheckResult::fail(NAME, format!("apply failed: {e}")),
        }
    }
    if worst <= T::HERMITIAN_TOL {
        CheckResult::pass(NAME, format!("max drift {worst:e}"))
    } else {
        CheckResult::fail(NAME, format!("stationary state drifts by {worst:e}"))
    }
}

fn check_relaxation_full_reset<T: Scalar>(eta_at: impl Fn(T) -> T, tau_e: T) -> CheckResult {
    const NAME: &str = "relaxation-full-reset";
    let ground = DensityOperator::pure(&PureState::<T>::basis(2, 0));
    let mut worst = T::zero();
    for frac in [1.0, 1.5, 2.0] {
        let tau = tau_e * T::lit(frac);
        let channel = match amplitude_damping(eta_at(tau)) {
            Ok(c) => c,
            Err(e) => {
                return CheckResult::fail(
                    NAME,
                    format!("relaxation channel invalid at tau = {frac} tau_e: {e}"),
                )
            }
        };
        // Operator basis of the LE: the map must send every element to
        // sigma0 times its trace.
        for i in 0..2 {
            for j in 0..2 {
                let mut basis_op = ComplexMatrix::zeros(2, 2);
                basis_op.set(i, j, Complex::new(T::one(), T::zero()));
                let out = channel.apply_matrix(&basis_op);
                let expect = if i == j { ground.matrix().clone() } else { ComplexMatrix::zeros(2, 2) };
                worst = worst.max(out.max_abs_diff(&expect));
            }
        }
    }
    if worst <= T::HERMITIAN_TOL {
        CheckResult::pass(NAME, format!("max defect {worst:e}"))
    } else {
        CheckResult::fail(NAME, format!("reset defect {worst:e}"))
    }
}

fn check_relaxation_identity_at_zero<T: Scalar>(eta_at: impl Fn(T) -> T) -> CheckResult {
    const NAME: &str = "relaxation-identity-at-zero";
    let channel = match amplitude_damping(eta_at(T::zero())) {
        Ok(c) => c,
        Err(e) => return CheckResult::fail(NAME, format!("relaxation channel invalid at tau = 0: {e}")),
    };
    let distance = channel.choi().distance(&QuantumChannel::identity(2).choi());
    if distance < T::MAP_EQ_TOL {
        CheckResult::pass(NAME, format!("Choi distance {distance:e}"))
    } else {
        CheckResult::fail(NAME, format!("Choi distance {distance:e}"))
    }
}

fn check_kraus_completeness<T: Scalar>() -> CheckResult {
    const NAME: &str = "kraus-completeness";
    let mut worst = T::zero();
    let mut record = |defect: T| worst = worst.max(defect);

    for eta in [0.0, 0.3, 1.0] {
        match amplitude_damping(T::lit(eta)) {
            Ok(c) => record(c.kraus_completeness_defect()),
            Err(e) => return CheckResult::fail(NAME, format!("amplitude damping: {e}")),
        }
    }
    for g in [-0.5, 0.0, 0.5, 1.0] {
        match phase_damping(T::lit(g)) {
            Ok(c) => record(c.kraus_completeness_defect()),
            Err(e) => return CheckResult::fail(NAME, format!("phase damping: {e}")),
        }
    }
    for lambda in [0.25, 0.7] {
        let env = match EnvironmentModel::dephasing_qubit(T::lit(lambda), T::one()) {
            Ok(env) => env,
            Err(e) => return CheckResult::fail(NAME, format!("model: {e}")),
        };
        record(memoryless_map(&env).kraus_completeness_defect());
        let s = CarrierSequence::uniform(T::lit(0.4));
        match compose_sequence(&env, &s, 2) {
            Ok(c) => record(c.kraus_completeness_defect()),
            Err(e) => return CheckResult::fail(NAME, format!("sequence map: {e}")),
        }
        let proto = AttenuationProtocol::new(2, T::lit(0.5), T::lit(0.2), T::lit(lambda), T::one())
            .expect("valid protocol");
        match modified_map(&proto) {
            Ok(c) => record(c.kraus_completeness_defect()),
            Err(e) => return CheckResult::fail(NAME, format!("programmed map: {e}")),
        }
    }
    record(DecoherentRelaxation::<T>::qubit_rotation(T::one()).channel(T::lit(0.3)).kraus_completeness_defect());

    if worst <= T::KRAUS_TOL {
        CheckResult::pass(NAME, format!("max completeness defect {worst:e}"))
    } else {
        CheckResult::fail(NAME, format!("completeness defect {worst:e}"))
    }
}

fn check_memoryless_factorization<T: Scalar>() -> CheckResult {
    const NAME: &str = "memoryless-factorization";
    let mut worst = T::zero();
    for lambda in [0.25, 0.7] {
        let env = match EnvironmentModel::dephasing_qubit(T::lit(lambda), T::one()) {
            Ok(env) => env,
            Err(e) => return CheckResult::fail(NAME, format!("model: {e}")),
        };
        let s = CarrierSequence::uniform(T::one());
        let composed = match compose_sequence(&env, &s, 2) {
            Ok(c) => c,
            Err(e) => return CheckResult::fail(NAME, format!("sequence map: {e}")),
        };
        let single = memoryless_map(&env);
        worst = worst.max(composed.choi().distance(&single.tensor(&single).choi()));
    }
    if worst < T::MAP_EQ_TOL {
        CheckResult::pass(NAME, format!("max Choi distance {worst:e}"))
    } else {
        CheckResult::fail(NAME, format!("Choi distance {worst:e}"))
    }
}

fn check_sequence_causality<T: Scalar>() -> CheckResult {
    const NAME: &str = "sequence-causality";
    let env = match EnvironmentModel::dephasing_qubit(T::lit(0.15), T::one()) {
        Ok(env) => env,
        Err(e) => return CheckResult::fail(NAME, format!("model: {e}")),
    };
    let s = CarrierSequence::uniform(T::lit(0.2));
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d656d63);
    let first = sampling::random_density::<T, _>(&mut rng, 2);
    let mut previous: Option<DensityOperator<T>> = None;
    let mut worst = T::zero();
    for _ in 0..4 {
        let second = sampling::random_density::<T, _>(&mut rng, 2);
        let out = match apply_sequence(&env, &s, 2, &first.tensor(&second)) {
            Ok(out) => out,
            Err(e) => return CheckResult::fail(NAME, format!("composition failed: {e}")),
        };
        let reduced = match partial_trace(&out, &[2, 2], &[0]) {
            Ok(r) => r,
            Err(e) => return CheckResult::fail(NAME, format!("partial trace failed: {e}")),
        };
        if let Some(prev) = &previous {
            worst = worst.max(prev.max_abs_diff(&reduced));
        }
        previous = Some(reduced);
    }
    if worst < T::MAP_EQ_TOL {
        CheckResult::pass(NAME, format!("max first-carrier drift {worst:e}"))
    } else {
        CheckResult::fail(NAME, format!("first carrier depends on later input: {worst:e}"))
    }
}

fn check_purification_invariance<T: Scalar>() -> CheckResult {
    const NAME: &str = "purification-invariance";
    let channel = match phase_damping(T::lit(0.5)) {
        Ok(c) => c,
        Err(e) => return CheckResult::fail(NAME, format!("channel: {e}")),
    };
    let rho = match DensityOperator::diagonal(&[T::lit(0.7), T::lit(0.3)]) {
        Ok(r) => r,
        Err(e) => return CheckResult::fail(NAME, format!("state: {e}")),
    };
    let canonical = match coherent_information(&channel, &rho) {
        Ok(j) => j,
        Err(e) => return CheckResult::fail(NAME, format!("coherent information: {e}")),
    };
    let psi = match purify(&rho) {
        Ok(p) => p,
        Err(e) => return CheckResult::fail(NAME, format!("purification: {e}")),
    };
    // Rotate the ancilla with a Hadamard; the value must not move.
    let h = T::one() / T::lit(2.0).sqrt();
    let mut rotated = vec![Complex::new(T::zero(), T::zero()); 4];
    for i in 0..2 {
        rotated[i * 2] = (psi.amplitude(i * 2) + psi.amplitude(i * 2 + 1)).scale(h);
        rotated[i * 2 + 1] = (psi.amplitude(i * 2) - psi.amplitude(i * 2 + 1)).scale(h);
    }
    let psi2 = match PureState::new(rotated) {
        Ok(p) => p,
        Err(e) => return CheckResult::fail(NAME, format!("rotated purification: {e}")),
    };
    let alt = match coherent_information_from_purification(&channel, &psi2, 2) {
        Ok(j) => j,
        Err(e) => return CheckResult::fail(NAME, format!("coherent information: {e}")),
    };
    let diff = (canonical - alt).abs();
    if diff < T::lit(1e-9).max(T::EIGENVALUE_FLOOR) {
        CheckResult::pass(NAME, format!("difference {diff:e}"))
    } else {
        CheckResult::fail(NAME, format!("purification dependence {diff:e}"))
    }
}

fn check_trajectory_y_zero<T: Scalar>() -> CheckResult {
    const NAME: &str = "trajectory-y-zero";
    let mut rng = ChaCha8Rng::seed_from_u64(0x74726a79);
    let mut worst = T::zero();
    for _ in 0..25 {
        let proto = AttenuationProtocol::new(
            rng.gen_range(0..20),
            T::lit(rng.gen_range(0.05..1.5)),
            T::lit(rng.gen_range(0.0..1.0)),
            T::lit(rng.gen_range(0.0..1.0)),
            T::one(),
        )
        .expect("sampled parameters are valid");
        let trajectory = iterate_environment(&proto);
        if !trajectory.all_valid() {
            return CheckResult::fail(NAME, "trajectory left the Bloch ball".to_string());
        }
        worst = worst.max(trajectory.max_abs_y());
    }
    if worst < T::PROB_FLOOR {
        CheckResult::pass(NAME, format!("max |y| {worst:e}"))
    } else {
        CheckResult::fail(NAME, format!("transverse component |y| reached {worst:e}"))
    }
}

fn check_closed_form_consistency<T: Scalar>() -> CheckResult {
    const NAME: &str = "closed-form-consistency";
    let mut rng = ChaCha8Rng::seed_from_u64(0x636c6f73);
    let mut worst = T::zero();
    let mut checked = 0;
    while checked < 20 {
        let proto = AttenuationProtocol::new(
            rng.gen_range(0..=30),
            T::lit(rng.gen_range(0.01..1.5)),
            T::lit(rng.gen_range(0.0..1.0)),
            T::lit(rng.gen_range(0.0..1.0)),
            T::one(),
        )
        .expect("sampled parameters are valid");
        match closed_form_gbar(&proto) {
            Ok(g) => {
                worst = worst.max((g - iterated_gbar(&proto)).abs());
                checked += 1;
            }
            Err(AttenuationError::DegenerateSpectrum) => continue,
            Err(e) => return CheckResult::fail(NAME, format!("unexpected error: {e}")),
        }
    }
    if worst < T::lit(1e-9).max(T::EIGENVALUE_FLOOR) {
        CheckResult::pass(NAME, format!("max |closed - iterated| {worst:e}"))
    } else {
        CheckResult::fail(NAME, format!("routes disagree by {worst:e}"))
    }
}

fn check_gbar_endpoints<T: Scalar>() -> CheckResult {
    const NAME: &str = "gbar-endpoints";
    let mut worst = T::zero();
    for lambda in [0.04, 0.36, 0.81] {
        let l = T::lit(lambda);
        let idle = AttenuationProtocol::new(0, T::lit(0.5), T::lit(0.3), l, T::one())
            .expect("valid protocol");
        let ground = AttenuationProtocol::new(6, T::lit(0.5), T::one(), l, T::one())
            .expect("valid protocol");
        worst = worst.max((iterated_gbar(&idle) - l.sqrt()).abs());
        worst = worst.max((iterated_gbar(&ground) - l.sqrt()).abs());
    }
    if worst <= T::KRAUS_TOL {
        CheckResult::pass(NAME, format!("max endpoint defect {worst:e}"))
    } else {
        CheckResult::fail(NAME, format!("endpoint defect {worst:e}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_suite_passes() {
        let results = run_suite::<f64>(ValidateOptions::default());
        for r in &results {
            assert!(r.passed, "{} failed: {}", r.name, r.detail);
        }
    }

    #[test]
    fn injected_eta_fault_fails_stationarity_first() {
        let results = run_suite::<f64>(ValidateOptions { inject_eta_fault: true });
        assert!(!all_passed(&results));
        let stationarity = results.iter().find(|r| r.name == "relaxation-stationarity").unwrap();
        assert!(!stationarity.passed);
        assert!(stationarity.detail.contains("invalid"));
    }

    #[test]
    fn suite_is_deterministic() {
        let a = run_suite::<f64>(ValidateOptions::default());
        let b = run_suite::<f64>(ValidateOptions::default());
        let render = |rs: &[CheckResult]| {
            rs.iter().map(|r| format!("{}|{}|{}", r.name, r.passed, r.detail)).collect::<Vec<_>>()
        };
        assert_eq!(render(&a), render(&b));
    }
}
