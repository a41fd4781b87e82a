//! Markovian branch decomposition of sequence maps under decoherent
//! relaxation.
//!
//! When the relaxation family kills every off-diagonal element of a fixed
//! LE basis and sends each basis state to a pure state, the composite map on
//! `n` carriers splits into a sum over classical LE-label paths. Each path
//! contributes a tensor product of per-carrier operators weighted by a chain
//! of conditional probabilities — correlated noise with Markov structure.

use crate::channels::{CarrierSequence, ChannelError, EnvironmentModel};
use crate::linalg::ComplexMatrix;
use crate::quantum::{DensityOperator, PureState, QuantumChannel, QuantumError};
use crate::scalar::Scalar;
use num_complex::Complex;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MarkovError {
    #[error("relaxation family is not decoherent: {0}")]
    NotDecoherent(String),
    #[error("path enumeration budget exceeded: {0} paths")]
    BudgetExceeded(usize),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

/// Relaxation family that dephases the LE in a fixed orthonormal basis and
/// maps basis state `l` to the pure state `post(l, tau)`; every post state
/// collapses onto the stationary basis state once `tau` reaches the
/// relaxation time.
#[derive(Clone)]
pub struct DecoherentRelaxation<T> {
    basis: Vec<PureState<T>>,
    post: Arc<dyn Fn(usize, T) -> PureState<T> + Send + Sync>,
    stationary_index: usize,
    tau_e: T,
}

impl<T: Scalar> DecoherentRelaxation<T> {
    pub fn new(
        basis: Vec<PureState<T>>,
        post: Arc<dyn Fn(usize, T) -> PureState<T> + Send + Sync>,
        stationary_index: usize,
        tau_e: T,
    ) -> Result<Self, MarkovError> {
        let dim = basis.len();
        if dim == 0 || basis.iter().any(|b| b.dim() != dim) {
            return Err(MarkovError::NotDecoherent("basis must be square and non-empty".into()));
        }
        for i in 0..dim {
            for j in 0..dim {
                let mut overlap = Complex::new(T::zero(), T::zero());
                for k in 0..dim {
                    overlap += basis[i].amplitude(k).conj() * basis[j].amplitude(k);
                }
                let expect = if i == j { T::one() } else { T::zero() };
                if (overlap.norm() - expect).abs() > T::PURE_NORM_TOL {
                    return Err(MarkovError::NotDecoherent("basis is not orthonormal".into()));
                }
            }
        }
        let spec = Self { basis, post, stationary_index, tau_e };
        // Stationary basis state must be a fixed point, and every post state
        // must land on it after one relaxation time.
        for frac in [0.25, 0.5, 1.0, 2.0] {
            let tau = tau_e * T::lit(frac);
            let fixed = (spec.post)(stationary_index, tau);
            if overlap_deficit(&fixed, &spec.basis[stationary_index]) > T::PURE_NORM_TOL {
                return Err(MarkovError::NotDecoherent(
                    "stationary basis state is not fixed by the post-state map".into(),
                ));
            }
        }
        for l in 0..dim {
            for frac in [1.0, 1.7] {
                let tau = tau_e * T::lit(frac);
                let collapsed = (spec.post)(l, tau);
                if overlap_deficit(&collapsed, &spec.basis[stationary_index]) > T::PURE_NORM_TOL {
                    return Err(MarkovError::NotDecoherent(format!(
                        "post state of basis index {l} does not collapse after tau_e"
                    )));
                }
            }
        }
        Ok(spec)
    }

    pub fn env_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn tau_e(&self) -> T {
        self.tau_e
    }

    pub fn basis(&self) -> &[PureState<T>] {
        &self.basis
    }

    pub fn stationary_index(&self) -> usize {
        self.stationary_index
    }

    pub fn post_state(&self, l: usize, tau: T) -> PureState<T> {
        (self.post)(l, tau)
    }

    /// The induced LE channel at idle time `tau`: Kraus set
    /// `{ |post(l, tau)><basis_l| }`.
    pub fn channel(&self, tau: T) -> QuantumChannel<T> {
        let dim = self.env_dim();
        let kraus = (0..dim)
            .map(|l| {
                let psi = self.post_state(l, tau);
                ComplexMatrix::from_fn(dim, dim, |i, j| {
                    psi.amplitude(i) * self.basis[l].amplitude(j).conj()
                })
            })
            .collect();
        QuantumChannel::new(kraus).expect("unit post states give a complete Kraus set")
    }

    /// Worked qubit family: `post(0) = |0>` always, `post(1)` rotates from
    /// |1> down to |0> linearly in the polar angle as `tau` grows.
    pub fn qubit_rotation(tau_e: T) -> Self {
        let basis = vec![PureState::basis(2, 0), PureState::basis(2, 1)];
        let post = Arc::new(move |l: usize, tau: T| {
            if l == 0 {
                PureState::basis(2, 0)
            } else {
                let frac = (T::one() - tau / tau_e).max(T::zero());
                let angle = T::FRAC_PI_2() * frac;
                PureState::new(vec![
                    Complex::new(angle.cos(), T::zero()),
                    Complex::new(angle.sin(), T::zero()),
                ])
                .expect("unit norm by construction")
            }
        });
        Self::new(basis, post, 0, tau_e).expect("qubit rotation family is decoherent")
    }
}

fn overlap_deficit<T: Scalar>(a: &PureState<T>, b: &PureState<T>) -> T {
    let mut overlap = Complex::new(T::zero(), T::zero());
    for k in 0..a.dim() {
        overlap += a.amplitude(k).conj() * b.amplitude(k);
    }
    (T::one() - overlap.norm()).abs()
}

/// Environment whose relaxation family is decoherent; the stationary state
/// is the selected basis state.
#[derive(Clone)]
pub struct DecoherentEnvironment<T> {
    coupling: ComplexMatrix<T>,
    carrier_dim: usize,
    relaxation: DecoherentRelaxation<T>,
    tau_e: T,
}

impl<T: Scalar> DecoherentEnvironment<T> {
    pub fn new(
        coupling: ComplexMatrix<T>,
        carrier_dim: usize,
        relaxation: DecoherentRelaxation<T>,
        tau_e: T,
    ) -> Result<Self, MarkovError> {
        if coupling.rows() != carrier_dim * relaxation.env_dim() || !coupling.is_square() {
            return Err(QuantumError::DimensionMismatch(format!(
                "coupling is {}x{}, expected {}",
                coupling.rows(),
                coupling.cols(),
                carrier_dim * relaxation.env_dim()
            ))
            .into());
        }
        Ok(Self { coupling, carrier_dim, relaxation, tau_e })
    }

    pub fn relaxation(&self) -> &DecoherentRelaxation<T> {
        &self.relaxation
    }

    pub fn carrier_dim(&self) -> usize {
        self.carrier_dim
    }

    /// View as a general environment model, for composing the sequence map
    /// directly (the oracle against which the path sum is checked).
    pub fn to_model(&self) -> Result<EnvironmentModel<T>, MarkovError> {
        let relax = self.relaxation.clone();
        let sigma0 = DensityOperator::pure(&self.relaxation.basis()[self.relaxation.stationary_index()]);
        Ok(EnvironmentModel::new(
            self.carrier_dim,
            self.relaxation.env_dim(),
            self.coupling.clone(),
            Arc::new(move |tau: T| relax.channel(tau)),
            sigma0,
            self.tau_e,
        )?)
    }
}

/// Trace convention for the branch probabilities.
///
/// `Normalized` divides each `tr(A†A)` by the carrier dimension so that the
/// outgoing probabilities of every label sum to one; `RawTrace` keeps the
/// bare trace (the sums then equal the carrier dimension). The path sum is
/// invariant: probabilities cancel against the normalized operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbabilityConvention {
    Normalized,
    RawTrace,
}

/// One branch of the decomposition: the carrier-space operator for a label
/// transition, its probability, and the probability-normalized operator
/// (absent when the branch probability is at the numerical floor).
#[derive(Debug, Clone)]
pub struct MarkovBranch<T> {
    pub op: ComplexMatrix<T>,
    pub prob: T,
    pub normalized: Option<ComplexMatrix<T>>,
}

/// Markov decomposition of the sequence map on `n` carriers.
#[derive(Debug, Clone)]
pub struct MarkovDecomposition<T> {
    carrier_dim: usize,
    env_dim: usize,
    convention: ProbabilityConvention,
    /// Branches of the first interaction, indexed by the outgoing label.
    first: Vec<MarkovBranch<T>>,
    /// Branches of step `j+1`, indexed by `next * env_dim + prev`.
    steps: Vec<Vec<MarkovBranch<T>>>,
}

impl<T: Scalar> MarkovDecomposition<T> {
    pub fn carriers(&self) -> usize {
        self.steps.len() + 1
    }

    pub fn env_dim(&self) -> usize {
        self.env_dim
    }

    pub fn convention(&self) -> ProbabilityConvention {
        self.convention
    }

    pub fn first(&self) -> &[MarkovBranch<T>] {
        &self.first
    }

    pub fn step(&self, j: usize, next: usize, prev: usize) -> &MarkovBranch<T> {
        &self.steps[j][next * self.env_dim + prev]
    }

    /// Outgoing probability sums `Σ_next p(next | prev)` for every step and
    /// conditioning label. One exactly, under the normalized convention.
    pub fn outgoing_sums(&self) -> Vec<Vec<T>> {
        self.steps
            .iter()
            .map(|table| {
                (0..self.env_dim)
                    .map(|prev| {
                        (0..self.env_dim)
                            .map(|next| table[next * self.env_dim + prev].prob)
                            .fold(T::zero(), |a, b| a + b)
                    })
                    .collect()
            })
            .collect()
    }

    /// Diagnostic sums `Σ_prev p(next | prev)`; not an enforced invariant.
    pub fn incoming_sums(&self) -> Vec<Vec<T>> {
        self.steps
            .iter()
            .map(|table| {
                (0..self.env_dim)
                    .map(|next| {
                        (0..self.env_dim)
                            .map(|prev| table[next * self.env_dim + prev].prob)
                            .fold(T::zero(), |a, b| a + b)
                    })
                    .collect()
            })
            .collect()
    }
}

/// Builds the branch tables for the first `n` carriers of sequence `s`.
pub fn markov_decompose<T: Scalar>(
    env: &DecoherentEnvironment<T>,
    s: &CarrierSequence<T>,
    n: usize,
    convention: ProbabilityConvention,
) -> Result<MarkovDecomposition<T>, MarkovError> {
    if n == 0 {
        return Err(ChannelError::EmptySequence.into());
    }
    let d = env.carrier_dim();
    let de = env.relaxation.env_dim();
    let intervals = s.intervals(n - 1)?;
    let norm = match convention {
        ProbabilityConvention::Normalized => T::from_count(d),
        ProbabilityConvention::RawTrace => T::one(),
    };

    let branch = |op: ComplexMatrix<T>| -> MarkovBranch<T> {
        let prob = op.adjoint().mul(&op).trace().re / norm;
        let normalized =
            (prob > T::PROB_FLOOR).then(|| op.scale(T::one() / prob.sqrt()));
        MarkovBranch { op, prob, normalized }
    };

    let stationary = &env.relaxation.basis()[env.relaxation.stationary_index()];
    let first = (0..de)
        .map(|next| branch(sandwich(&env.coupling, d, de, &env.relaxation.basis()[next], stationary)))
        .collect();

    let mut steps = Vec::with_capacity(n - 1);
    for &tau in &intervals {
        let mut table = Vec::with_capacity(de * de);
        for next in 0..de {
            for prev in 0..de {
                let post = env.relaxation.post_state(prev, tau);
                table.push(branch(sandwich(
                    &env.coupling,
                    d,
                    de,
                    &env.relaxation.basis()[next],
                    &post,
                )));
            }
        }
        steps.push(table);
    }
    Ok(MarkovDecomposition { carrier_dim: d, env_dim: de, convention, first, steps })
}

/// Carrier-space matrix element `<out| U |in>` over the LE factor.
fn sandwich<T: Scalar>(
    coupling: &ComplexMatrix<T>,
    carrier_dim: usize,
    env_dim: usize,
    out: &PureState<T>,
    input: &PureState<T>,
) -> ComplexMatrix<T> {
    ComplexMatrix::from_fn(carrier_dim, carrier_dim, |c, cp| {
        let mut acc = Complex::new(T::zero(), T::zero());
        for e in 0..env_dim {
            let bra = out.amplitude(e).conj();
            if bra.norm_sqr() == T::zero() {
                continue;
            }
            for ep in 0..env_dim {
                acc += bra * coupling.get(c * env_dim + e, cp * env_dim + ep) * input.amplitude(ep);
            }
        }
        acc
    })
}

/// Path-sum reconstruction of the sequence map from its decomposition:
/// probability-weighted chains of normalized per-carrier operators, one
/// tensor factor per carrier, summed over all surviving label paths.
pub fn markov_reconstruct<T: Scalar>(
    decomp: &MarkovDecomposition<T>,
    input: &DensityOperator<T>,
) -> Result<DensityOperator<T>, MarkovError> {
    let n = decomp.carriers();
    let d = decomp.carrier_dim;
    let dim = d.pow(n as u32);
    if input.dim() != dim {
        return Err(QuantumError::DimensionMismatch(format!(
            "input dim {} vs {n} carriers of dim {d}",
            input.dim()
        ))
        .into());
    }
    let path_count = decomp.env_dim.pow(n as u32);
    if path_count > 1 << 20 {
        return Err(MarkovError::BudgetExceeded(path_count));
    }

    let mut out = ComplexMatrix::zeros(dim, dim);
    // Depth-first walk over label paths, extending the tensor chain one
    // carrier at a time and pruning floored branches.
    let mut stack: Vec<(usize, usize, T, ComplexMatrix<T>)> = Vec::new();
    for (label, b) in decomp.first.iter().enumerate() {
        if let Some(m) = &b.normalized {
            stack.push((1, label, b.prob, m.clone()));
        }
    }
    while let Some((depth, label, weight, chain)) = stack.pop() {
        if depth == n {
            let term = chain.mul(input.matrix()).mul(&chain.adjoint()).scale(weight);
            out = out.add(&term);
            continue;
        }
        for next in 0..decomp.env_dim {
            let b = decomp.step(depth - 1, next, label);
            if let Some(m) = &b.normalized {
                stack.push((depth + 1, next, weight * b.prob, chain.kron(m)));
            }
        }
    }
    Ok(DensityOperator::from_matrix_unchecked(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{apply_sequence, qubit_control_coupling};
    use crate::quantum::trace_distance;
    use crate::sampling;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn qubit_env(lambda: f64) -> DecoherentEnvironment<f64> {
        DecoherentEnvironment::new(
            qubit_control_coupling(lambda).unwrap(),
            2,
            DecoherentRelaxation::qubit_rotation(1.0),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn decoherent_channel_is_complete_and_kills_off_diagonals() {
        let spec = DecoherentRelaxation::<f64>::qubit_rotation(1.0);
        for tau in [0.1, 0.5, 0.9, 1.5] {
            let ch = spec.channel(tau);
            assert!(ch.kraus_completeness_defect() < 1e-12);
            let e01 = ComplexMatrix::from_real(2, &[0.0, 1.0, 0.0, 0.0]);
            assert!(ch.apply_matrix(&e01).max_abs_entry() < 1e-14);
        }
    }

    #[test]
    fn decoherent_channel_resets_after_relaxation_time() {
        let spec = DecoherentRelaxation::<f64>::qubit_rotation(1.0);
        let ch = spec.channel(1.2);
        let out = ch.apply(&DensityOperator::maximally_mixed(2)).unwrap();
        let ground = DensityOperator::pure(&PureState::<f64>::basis(2, 0));
        assert!(out.max_abs_diff(&ground) < 1e-14);
    }

    #[test]
    fn decoherent_channel_with_frozen_posts_is_basis_dephasing() {
        let basis = vec![PureState::<f64>::basis(2, 0), PureState::basis(2, 1)];
        let post = Arc::new(|l: usize, tau: f64| {
            if tau >= 1.0 {
                PureState::basis(2, 0)
            } else {
                PureState::basis(2, l)
            }
        });
        let spec = DecoherentRelaxation::new(basis, post, 0, 1.0).unwrap();
        let ch = spec.channel(0.5);
        let plus = DensityOperator::pure(&PureState::<f64>::plus());
        let out = ch.apply(&plus).unwrap();
        assert!(out.max_abs_diff(&DensityOperator::maximally_mixed(2)) < 1e-14);
    }

    #[test]
    fn decoherent_channel_splits_mixed_input_into_post_states() {
        let spec = DecoherentRelaxation::<f64>::qubit_rotation(1.0);
        let tau = 0.4;
        let ch = spec.channel(tau);
        let out = ch.apply(&DensityOperator::maximally_mixed(2)).unwrap();
        let psi1 = spec.post_state(1, tau);
        let expect = ComplexMatrix::from_fn(2, 2, |i, j| {
            (DensityOperator::pure(&PureState::<f64>::basis(2, 0)).matrix().get(i, j)
                + DensityOperator::pure(&psi1).matrix().get(i, j))
            .scale(0.5)
        });
        assert!(out.matrix().max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn rejects_non_orthonormal_basis() {
        let basis = vec![PureState::<f64>::basis(2, 0), PureState::plus()];
        let post = Arc::new(|_: usize, _: f64| PureState::<f64>::basis(2, 0));
        assert!(matches!(
            DecoherentRelaxation::new(basis, post, 0, 1.0),
            Err(MarkovError::NotDecoherent(_))
        ));
    }

    #[test]
    fn single_interaction_branches_resolve_the_coupling() {
        let env = qubit_env(0.25);
        let s = CarrierSequence::uniform(0.5);
        let d = markov_decompose(&env, &s, 1, ProbabilityConvention::Normalized).unwrap();
        // Σ A†A over outgoing labels is the carrier identity.
        let mut sum = ComplexMatrix::<f64>::zeros(2, 2);
        for b in d.first() {
            sum = sum.add(&b.op.adjoint().mul(&b.op));
        }
        assert!(sum.max_abs_diff(&ComplexMatrix::identity(2)) < 1e-13);
        let total: f64 = d.first().iter().map(|b| b.prob).sum();
        assert!((total - 1.0).abs() < 1e-13);
        // First-step probabilities for the control coupling at lambda = 1/4.
        assert!((d.first()[0].prob - 0.625).abs() < 1e-13);
        assert!((d.first()[1].prob - 0.375).abs() < 1e-13);
    }

    #[test]
    fn diagonal_coupling_floors_the_flip_branch() {
        let env = qubit_env(1.0);
        let s = CarrierSequence::uniform(0.5);
        let d = markov_decompose(&env, &s, 1, ProbabilityConvention::Normalized).unwrap();
        assert!(d.first()[1].prob <= 1e-14);
        assert!(d.first()[1].normalized.is_none());
    }

    #[test]
    fn outgoing_sums_are_normalized() {
        let env = qubit_env(0.3);
        let s = CarrierSequence::periodic(vec![0.3, 0.8]).unwrap();
        let d = markov_decompose(&env, &s, 3, ProbabilityConvention::Normalized).unwrap();
        for step in d.outgoing_sums() {
            for sum in step {
                assert!((sum - 1.0).abs() < 1e-12);
            }
        }
        for step in d.incoming_sums() {
            for sum in step {
                assert!(sum >= -1e-14);
            }
        }
    }

    #[test]
    fn reconstruction_matches_direct_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let env = qubit_env(0.25);
        let model = env.to_model().unwrap();
        for _ in 0..10 {
            let n = rng.gen_range(1..=3usize);
            let s = CarrierSequence::periodic(vec![
                rng.gen_range(0.05..1.2),
                rng.gen_range(0.05..1.2),
            ])
            .unwrap();
            let input = sampling::random_density(&mut rng, 1 << n);
            let d = markov_decompose(&env, &s, n, ProbabilityConvention::Normalized).unwrap();
            let rebuilt = markov_reconstruct(&d, &input).unwrap();
            let direct = apply_sequence(&model, &s, n, &input).unwrap();
            assert!(trace_distance(&rebuilt, &direct) < 1e-10);
        }
    }

    #[test]
    fn reconstruction_is_convention_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let env = qubit_env(0.6);
        let s = CarrierSequence::uniform(0.45);
        let input = sampling::random_density(&mut rng, 4);
        let a = markov_reconstruct(
            &markov_decompose(&env, &s, 2, ProbabilityConvention::Normalized).unwrap(),
            &input,
        )
        .unwrap();
        let b = markov_reconstruct(
            &markov_decompose(&env, &s, 2, ProbabilityConvention::RawTrace).unwrap(),
            &input,
        )
        .unwrap();
        assert!(a.max_abs_diff(&b) < 1e-13);
    }

    #[test]
    fn reconstruction_rejects_mismatched_input() {
        let env = qubit_env(0.4);
        let s = CarrierSequence::uniform(0.5);
        let d = markov_decompose(&env, &s, 2, ProbabilityConvention::Normalized).unwrap();
        let wrong = DensityOperator::<f64>::maximally_mixed(2);
        assert!(matches!(
            markov_reconstruct(&d, &wrong),
            Err(MarkovError::Quantum(QuantumError::DimensionMismatch(_)))
        ));
    }

    #[test]
    fn ground_carriers_pass_unchanged() {
        let env = qubit_env(0.25);
        let s = CarrierSequence::uniform(0.5);
        let d = markov_decompose(&env, &s, 2, ProbabilityConvention::Normalized).unwrap();
        let ground = DensityOperator::pure(&PureState::<f64>::basis(2, 0))
            .tensor(&DensityOperator::pure(&PureState::<f64>::basis(2, 0)));
        let out = markov_reconstruct(&d, &ground).unwrap();
        assert!(out.max_abs_diff(&ground) < 1e-12);
    }
}
