//! Channel constructors and the carrier-sequence composition engine.
//!
//! A communication line is modeled as carriers that interact one at a time
//! with a finite local environment (LE). Between interactions the LE relaxes
//! toward a stationary state under a one-parameter family of channels. The
//! composite map on `n` carriers is built by alternating the fixed coupling
//! unitary with the relaxation channels and tracing the LE out at the end.

use crate::linalg::{hermitian_eigen, ComplexMatrix};
use crate::quantum::{DensityOperator, QuantumChannel, QuantumError};
use crate::scalar::Scalar;
use num_complex::Complex;
use std::sync::Arc;
use thiserror::Error;

/// Largest joint dimension (carriers ⊗ LE) for which an explicit Kraus-set
/// channel is constructed. Map-level objects square the state dimension, so
/// this is deliberately tighter than [`MAX_STATE_JOINT_DIM`].
pub const MAX_CHANNEL_JOINT_DIM: usize = 128;

/// Largest joint dimension for the state-evolution path.
pub const MAX_STATE_JOINT_DIM: usize = 4096;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("parameter {name} = {value} outside [{lo}, {hi}]")]
    ParamOutOfRange { name: &'static str, value: f64, lo: f64, hi: f64 },
    #[error("joint dimension {dim} exceeds budget {budget}")]
    BudgetExceeded { dim: usize, budget: usize },
    #[error("sequence provides {available} intervals but {needed} are needed")]
    SequenceTooShort { available: usize, needed: usize },
    #[error("sequence pattern must be non-empty with positive intervals")]
    InvalidSequence,
    #[error("carrier count must be at least 1")]
    EmptySequence,
    #[error("coupling is not carrier-controlled")]
    NotCarrierControlled,
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

/// Relaxation parameter of the local environment after an idle time `tau`:
/// linear decay over one relaxation time, zero afterwards. `eta = 1` means no
/// relaxation happened, `eta = 0` means the LE has fully reset.
pub fn eta_profile<T: Scalar>(tau: T, tau_e: T) -> T {
    if tau < tau_e {
        T::one() - tau / tau_e
    } else {
        T::zero()
    }
}

/// The 2x2 reflection the environment undergoes when the carrier is excited:
/// `[[sqrt(l), sqrt(1-l)], [sqrt(1-l), -sqrt(l)]]`. Low `lambda` is strong
/// coupling, `lambda = 1` leaves the LE populations untouched.
pub fn coupling_reflection<T: Scalar>(lambda: T) -> Result<ComplexMatrix<T>, ChannelError> {
    check_unit_interval("lambda", lambda)?;
    let a = lambda.sqrt();
    let b = (T::one() - lambda).sqrt();
    let mut m = ComplexMatrix::zeros(2, 2);
    m.set(0, 0, Complex::new(a, T::zero()));
    m.set(0, 1, Complex::new(b, T::zero()));
    m.set(1, 0, Complex::new(b, T::zero()));
    m.set(1, 1, Complex::new(-a, T::zero()));
    Ok(m)
}

/// Control-unitary coupling on carrier ⊗ LE (both qubits): the LE is left
/// alone for carrier |0> and reflected by [`coupling_reflection`] for |1>.
pub fn qubit_control_coupling<T: Scalar>(lambda: T) -> Result<ComplexMatrix<T>, ChannelError> {
    let theta = coupling_reflection(lambda)?;
    let mut u = ComplexMatrix::zeros(4, 4);
    u.set(0, 0, Complex::new(T::one(), T::zero()));
    u.set(1, 1, Complex::new(T::one(), T::zero()));
    for i in 0..2 {
        for j in 0..2 {
            u.set(2 + i, 2 + j, theta.get(i, j));
        }
    }
    debug_assert!(u.unitary_defect() <= T::UNITARY_TOL);
    Ok(u)
}

/// Qubit amplitude damping with survival probability `eta` for the excited
/// level; `eta = 1` is the identity, `eta = 0` the full reset onto |0>.
pub fn amplitude_damping<T: Scalar>(eta: T) -> Result<QuantumChannel<T>, ChannelError> {
    check_unit_interval("eta", eta)?;
    let mut k0 = ComplexMatrix::zeros(2, 2);
    k0.set(0, 0, Complex::new(T::one(), T::zero()));
    k0.set(1, 1, Complex::new(eta.sqrt(), T::zero()));
    let mut k1 = ComplexMatrix::zeros(2, 2);
    k1.set(0, 1, Complex::new((T::one() - eta).sqrt(), T::zero()));
    Ok(QuantumChannel::new(vec![k0, k1])?)
}

/// Qubit phase damping: populations fixed, coherences scaled by `g`.
pub fn phase_damping<T: Scalar>(g: T) -> Result<QuantumChannel<T>, ChannelError> {
    if g.abs() > T::one() {
        return Err(ChannelError::ParamOutOfRange {
            name: "g",
            value: g.to_f64().unwrap_or(f64::NAN),
            lo: -1.0,
            hi: 1.0,
        });
    }
    let mut k0 = ComplexMatrix::zeros(2, 2);
    k0.set(0, 0, Complex::new(T::one(), T::zero()));
    k0.set(1, 1, Complex::new(g, T::zero()));
    let mut k1 = ComplexMatrix::zeros(2, 2);
    k1.set(1, 1, Complex::new((T::one() - g * g).sqrt(), T::zero()));
    Ok(QuantumChannel::new(vec![k0, k1])?)
}

/// The dynamical model: a uniform carrier-LE coupling, a relaxation family
/// with stationary state `sigma0`, and the relaxation time after which the
/// family resets every input onto `sigma0`.
#[derive(Clone)]
pub struct EnvironmentModel<T> {
    carrier_dim: usize,
    env_dim: usize,
    coupling: ComplexMatrix<T>,
    relaxation: Arc<dyn Fn(T) -> QuantumChannel<T> + Send + Sync>,
    sigma0: DensityOperator<T>,
    tau_e: T,
}

impl<T: Scalar> std::fmt::Debug for EnvironmentModel<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EnvironmentModel")
            .field("carrier_dim", &self.carrier_dim)
            .field("env_dim", &self.env_dim)
            .field("tau_e", &self.tau_e)
            .finish()
    }
}

impl<T: Scalar> EnvironmentModel<T> {
    /// Validates dimensions, coupling unitarity and stationarity of `sigma0`
    /// at a small sample of idle times.
    pub fn new(
        carrier_dim: usize,
        env_dim: usize,
        coupling: ComplexMatrix<T>,
        relaxation: Arc<dyn Fn(T) -> QuantumChannel<T> + Send + Sync>,
        sigma0: DensityOperator<T>,
        tau_e: T,
    ) -> Result<Self, ChannelError> {
        if coupling.rows() != carrier_dim * env_dim || !coupling.is_square() {
            return Err(QuantumError::DimensionMismatch(format!(
                "coupling is {}x{}, expected {}",
                coupling.rows(),
                coupling.cols(),
                carrier_dim * env_dim
            ))
            .into());
        }
        if sigma0.dim() != env_dim {
            return Err(QuantumError::DimensionMismatch(format!(
                "sigma0 dim {} vs env dim {env_dim}",
                sigma0.dim()
            ))
            .into());
        }
        let defect = coupling.unitary_defect();
        if defect > T::UNITARY_TOL {
            return Err(QuantumError::InvalidState(format!("coupling unitarity defect {defect}")).into());
        }
        for frac in [0.0, 0.25, 0.5, 1.0, 2.0] {
            let tau = tau_e * T::lit(frac);
            let fixed = relaxation(tau).apply(&sigma0)?;
            let drift = fixed.max_abs_diff(&sigma0);
            if drift > T::TRACE_TOL {
                return Err(QuantumError::InvalidState(format!(
                    "sigma0 is not stationary: drift {drift} at tau = {frac} tau_e"
                ))
                .into());
            }
        }
        Ok(Self { carrier_dim, env_dim, coupling, relaxation, sigma0, tau_e })
    }

    /// The worked qubit instance: control coupling of strength `lambda`,
    /// amplitude-damping relaxation with the linear profile, stationary |0>.
    pub fn dephasing_qubit(lambda: T, tau_e: T) -> Result<Self, ChannelError> {
        let coupling = qubit_control_coupling(lambda)?;
        let sigma0 = DensityOperator::pure(&crate::quantum::PureState::basis(2, 0));
        let relaxation = Arc::new(move |tau: T| {
            amplitude_damping(eta_profile(tau, tau_e)).expect("eta profile stays in [0, 1]")
        });
        Self::new(2, 2, coupling, relaxation, sigma0, tau_e)
    }

    pub fn carrier_dim(&self) -> usize {
        self.carrier_dim
    }

    pub fn env_dim(&self) -> usize {
        self.env_dim
    }

    pub fn coupling(&self) -> &ComplexMatrix<T> {
        &self.coupling
    }

    pub fn relaxation(&self, tau: T) -> QuantumChannel<T> {
        (self.relaxation)(tau)
    }

    pub fn sigma0(&self) -> &DensityOperator<T> {
        &self.sigma0
    }

    pub fn tau_e(&self) -> T {
        self.tau_e
    }

    /// Same model with a different relaxation family; used to inject faults
    /// in the validation suite and to swap in decoherent families.
    pub fn with_relaxation(
        &self,
        relaxation: Arc<dyn Fn(T) -> QuantumChannel<T> + Send + Sync>,
    ) -> Self {
        Self { relaxation, ..self.clone() }
    }
}

/// Time-ordered list of intervals between consecutive carriers. A periodic
/// sequence repeats its pattern indefinitely.
#[derive(Debug, Clone)]
pub struct CarrierSequence<T> {
    pattern: Vec<T>,
    periodic: bool,
}

impl<T: Scalar> CarrierSequence<T> {
    pub fn new(pattern: Vec<T>, periodic: bool) -> Result<Self, ChannelError> {
        if pattern.is_empty() || pattern.iter().any(|&t| t <= T::zero()) {
            return Err(ChannelError::InvalidSequence);
        }
        Ok(Self { pattern, periodic })
    }

    pub fn uniform(tau: T) -> Self {
        Self { pattern: vec![tau], periodic: true }
    }

    pub fn finite(pattern: Vec<T>) -> Result<Self, ChannelError> {
        Self::new(pattern, false)
    }

    pub fn periodic(pattern: Vec<T>) -> Result<Self, ChannelError> {
        Self::new(pattern, true)
    }

    pub fn pattern(&self) -> &[T] {
        &self.pattern
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    /// First `count` intervals, cycling the pattern when periodic.
    pub fn intervals(&self, count: usize) -> Result<Vec<T>, ChannelError> {
        if count == 0 {
            return Ok(Vec::new());
        }
        if self.periodic {
            Ok((0..count).map(|i| self.pattern[i % self.pattern.len()]).collect())
        } else if count <= self.pattern.len() {
            Ok(self.pattern[..count].to_vec())
        } else {
            Err(ChannelError::SequenceTooShort { available: self.pattern.len(), needed: count })
        }
    }

    /// Entry time of carrier `j` (0-based); carrier 0 enters at t = 0.
    pub fn entry_time(&self, j: usize) -> Result<T, ChannelError> {
        Ok(self.intervals(j)?.into_iter().fold(T::zero(), |a, b| a + b))
    }
}

/// Single-carrier map: one interaction with the stationary environment.
pub fn memoryless_map<T: Scalar>(env: &EnvironmentModel<T>) -> QuantumChannel<T> {
    build_sequence_channel(env, env.sigma0(), &[], 1).expect("single carrier fits any budget")
}

/// Composite map on the first `n` carriers of sequence `s`: interactions
/// alternate with relaxations over the listed intervals; no relaxation
/// follows the final interaction; the LE starts in the stationary state and
/// is traced out.
pub fn compose_sequence<T: Scalar>(
    env: &EnvironmentModel<T>,
    s: &CarrierSequence<T>,
    n: usize,
) -> Result<QuantumChannel<T>, ChannelError> {
    if n == 0 {
        return Err(ChannelError::EmptySequence);
    }
    let intervals = s.intervals(n - 1)?;
    compose_with_intervals(env, &intervals, n)
}

/// [`compose_sequence`] with explicit intervals. A zero interval is accepted
/// here and means the idealized no-relaxation step.
pub fn compose_with_intervals<T: Scalar>(
    env: &EnvironmentModel<T>,
    intervals: &[T],
    n: usize,
) -> Result<QuantumChannel<T>, ChannelError> {
    if n == 0 {
        return Err(ChannelError::EmptySequence);
    }
    if intervals.len() != n - 1 {
        return Err(ChannelError::SequenceTooShort { available: intervals.len(), needed: n - 1 });
    }
    let relaxations: Vec<QuantumChannel<T>> = intervals.iter().map(|&t| env.relaxation(t)).collect();
    build_sequence_channel(env, env.sigma0(), &relaxations, n)
}

/// Composite map with every relaxation suppressed: the LE keeps its memory
/// across all `n` interactions.
pub fn perfect_memory_map<T: Scalar>(
    env: &EnvironmentModel<T>,
    n: usize,
) -> Result<QuantumChannel<T>, ChannelError> {
    if n == 0 {
        return Err(ChannelError::EmptySequence);
    }
    let identities = vec![QuantumChannel::identity(env.env_dim()); n - 1];
    build_sequence_channel(env, env.sigma0(), &identities, n)
}

/// Map of one group of `m = intra.len() + 1` carriers separated by the given
/// intra-group intervals, entered with the LE in its stationary state.
pub fn grouped_map<T: Scalar>(
    env: &EnvironmentModel<T>,
    intra_intervals: &[T],
) -> Result<QuantumChannel<T>, ChannelError> {
    compose_with_intervals(env, intra_intervals, intra_intervals.len() + 1)
}

/// Kraus-set construction of the full sequence map, with an arbitrary
/// initial LE state (used by the noise-attenuation protocol where the LE has
/// been steered away from `sigma0`).
pub(crate) fn build_sequence_channel<T: Scalar>(
    env: &EnvironmentModel<T>,
    initial_env_state: &DensityOperator<T>,
    relaxations: &[QuantumChannel<T>],
    n: usize,
) -> Result<QuantumChannel<T>, ChannelError> {
    let d = env.carrier_dim();
    let de = env.env_dim();
    let carriers_dim = d.checked_pow(n as u32).ok_or(ChannelError::BudgetExceeded {
        dim: usize::MAX,
        budget: MAX_CHANNEL_JOINT_DIM,
    })?;
    let joint = carriers_dim * de;
    if joint > MAX_CHANNEL_JOINT_DIM {
        return Err(ChannelError::BudgetExceeded { dim: joint, budget: MAX_CHANNEL_JOINT_DIM });
    }
    assert_eq!(relaxations.len(), n - 1, "one relaxation between consecutive interactions");

    let mut dims = vec![d; n];
    dims.push(de);

    // Injection: carriers ⊗ (spectral decomposition of the initial LE state).
    let eig = hermitian_eigen(initial_env_state.matrix()).map_err(QuantumError::from)?;
    let mut set: Vec<ComplexMatrix<T>> = Vec::new();
    for (k, &value) in eig.values.iter().enumerate() {
        if value <= T::PROB_FLOOR {
            continue;
        }
        let weight = value.sqrt();
        let mut column = ComplexMatrix::zeros(de, 1);
        for i in 0..de {
            column.set(i, 0, eig.vectors.get(i, k).scale(weight));
        }
        set.push(ComplexMatrix::identity(carriers_dim).kron(&column));
    }

    for j in 0..n {
        let u = embed_operator(env.coupling(), &dims, &[j, n]);
        set = set.iter().map(|m| u.mul(m)).collect();
        if j + 1 < n {
            let mut next = Vec::with_capacity(set.len() * relaxations[j].kraus().len());
            for k in relaxations[j].kraus() {
                let embedded = embed_operator(k, &dims, &[n]);
                for m in &set {
                    let product = embedded.mul(m);
                    if product.frobenius_norm_sqr() > T::PROB_FLOOR {
                        next.push(product);
                    }
                }
            }
            set = next;
        }
    }

    // Trace out the LE: project onto each of its basis states.
    let mut final_set = Vec::with_capacity(set.len() * de);
    for b in 0..de {
        let mut bra = ComplexMatrix::zeros(1, de);
        bra.set(0, b, Complex::new(T::one(), T::zero()));
        let projector = ComplexMatrix::identity(carriers_dim).kron(&bra);
        for m in &set {
            let product = projector.mul(m);
            if product.frobenius_norm_sqr() > T::PROB_FLOOR {
                final_set.push(product);
            }
        }
    }
    Ok(QuantumChannel::new(final_set)?)
}

/// Joint (carriers ⊗ LE) state after all `n` interactions, before the LE is
/// traced out. State-evolution path; honors the larger state budget.
pub fn evolve_joint<T: Scalar>(
    env: &EnvironmentModel<T>,
    s: &CarrierSequence<T>,
    n: usize,
    input: &DensityOperator<T>,
) -> Result<DensityOperator<T>, ChannelError> {
    if n == 0 {
        return Err(ChannelError::EmptySequence);
    }
    let d = env.carrier_dim();
    let de = env.env_dim();
    let carriers_dim = d.pow(n as u32);
    let joint = carriers_dim * de;
    if joint > MAX_STATE_JOINT_DIM {
        return Err(ChannelError::BudgetExceeded { dim: joint, budget: MAX_STATE_JOINT_DIM });
    }
    if input.dim() != carriers_dim {
        return Err(QuantumError::DimensionMismatch(format!(
            "input dim {} vs {n} carriers of dim {d}",
            input.dim()
        ))
        .into());
    }
    let intervals = s.intervals(n - 1)?;
    let mut dims = vec![d; n];
    dims.push(de);

    let mut joint_state = input.matrix().kron(env.sigma0().matrix());
    for j in 0..n {
        joint_state = conjugate_on_factors(&joint_state, &dims, &[j, n], env.coupling());
        if j + 1 < n {
            let relax = env.relaxation(intervals[j]);
            let mut next = ComplexMatrix::zeros(joint, joint);
            for k in relax.kraus() {
                next = next.add(&conjugate_on_factors(&joint_state, &dims, &[n], k));
            }
            joint_state = next;
        }
    }
    Ok(DensityOperator::from_matrix_unchecked(joint_state))
}

/// Output state of the first `n` carriers: [`evolve_joint`] with the LE
/// traced out.
pub fn apply_sequence<T: Scalar>(
    env: &EnvironmentModel<T>,
    s: &CarrierSequence<T>,
    n: usize,
    input: &DensityOperator<T>,
) -> Result<DensityOperator<T>, ChannelError> {
    let joint = evolve_joint(env, s, n, input)?;
    let mut dims = vec![env.carrier_dim(); n];
    dims.push(env.env_dim());
    let keep: Vec<usize> = (0..n).collect();
    Ok(crate::quantum::partial_trace(&joint, &dims, &keep)?)
}

/// Carrier blocks of a carrier-controlled coupling: `U = Σ_c |c><c| ⊗ V_c`.
/// Returns `None` when the coupling mixes carrier levels.
pub fn carrier_controlled_blocks<T: Scalar>(env: &EnvironmentModel<T>) -> Option<Vec<ComplexMatrix<T>>> {
    let d = env.carrier_dim();
    let de = env.env_dim();
    let u = env.coupling();
    let mut blocks = Vec::with_capacity(d);
    for c in 0..d {
        for cp in 0..d {
            if c == cp {
                continue;
            }
            for e in 0..de {
                for ep in 0..de {
                    if u.get(c * de + e, cp * de + ep).norm() > T::UNITARY_TOL {
                        return None;
                    }
                }
            }
        }
        blocks.push(ComplexMatrix::from_fn(de, de, |e, ep| u.get(c * de + e, c * de + ep)));
    }
    Some(blocks)
}

/// Coherence weights of a carrier-controlled sequence map: the composite
/// channel acts entrywise in the carrier product basis, scaling `|i><j|` by
/// `w[i, j]`. Computed by threading a single LE-sized operator through the
/// sequence per basis pair, so it scales to carrier counts far beyond the
/// explicit channel budget.
pub fn controlled_sequence_weights<T: Scalar>(
    env: &EnvironmentModel<T>,
    intervals: &[T],
    n: usize,
) -> Result<ComplexMatrix<T>, ChannelError> {
    let blocks = carrier_controlled_blocks(env).ok_or(ChannelError::NotCarrierControlled)?;
    if intervals.len() != n - 1 {
        return Err(ChannelError::SequenceTooShort { available: intervals.len(), needed: n - 1 });
    }
    let d = env.carrier_dim();
    let dim = d.checked_pow(n as u32).ok_or(ChannelError::BudgetExceeded {
        dim: usize::MAX,
        budget: MAX_STATE_JOINT_DIM,
    })?;
    let relaxations: Vec<QuantumChannel<T>> = intervals.iter().map(|&t| env.relaxation(t)).collect();

    let digits = |mut idx: usize| -> Vec<usize> {
        let mut out = vec![0usize; n];
        for k in (0..n).rev() {
            out[k] = idx % d;
            idx /= d;
        }
        out
    };

    let mut weights = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        let di = digits(i);
        for j in i..dim {
            let dj = digits(j);
            let mut x = env.sigma0().matrix().clone();
            for k in 0..n {
                x = blocks[di[k]].mul(&x).mul(&blocks[dj[k]].adjoint());
                if k + 1 < n {
                    x = relaxations[k].apply_matrix(&x);
                }
            }
            let w = x.trace();
            weights.set(i, j, w);
            weights.set(j, i, w.conj());
        }
    }
    Ok(weights)
}

/// Dense embedding of `op` acting on the listed factors of a composite
/// space, identity elsewhere. `targets` order defines the row/column order
/// of `op`'s own indices.
pub(crate) fn embed_operator<T: Scalar>(
    op: &ComplexMatrix<T>,
    dims: &[usize],
    targets: &[usize],
) -> ComplexMatrix<T> {
    let full_dim: usize = dims.iter().product();
    let target_dim: usize = targets.iter().map(|&t| dims[t]).product();
    assert_eq!(op.rows(), target_dim, "operator must match target dimensions");
    let rest: Vec<usize> = (0..dims.len()).filter(|k| !targets.contains(k)).collect();
    let rest_dim: usize = rest.iter().map(|&k| dims[k]).product();

    let compose = |target_idx: usize, rest_idx: usize| -> usize {
        let mut digit = vec![0usize; dims.len()];
        let mut t = target_idx;
        for &k in targets.iter().rev() {
            digit[k] = t % dims[k];
            t /= dims[k];
        }
        let mut r = rest_idx;
        for &k in rest.iter().rev() {
            digit[k] = r % dims[k];
            r /= dims[k];
        }
        let mut full = 0usize;
        for (k, &dk) in dims.iter().enumerate() {
            full = full * dk + digit[k];
        }
        full
    };

    let mut out = ComplexMatrix::zeros(full_dim, full_dim);
    for r in 0..rest_dim {
        for a in 0..target_dim {
            for b in 0..target_dim {
                let v = op.get(a, b);
                if v.norm_sqr() > T::zero() {
                    out.set(compose(a, r), compose(b, r), v);
                }
            }
        }
    }
    out
}

/// `(op on targets) · m · (op on targets)†` without materializing the
/// embedded operator; used on states too large for the channel engine.
pub(crate) fn conjugate_on_factors<T: Scalar>(
    m: &ComplexMatrix<T>,
    dims: &[usize],
    targets: &[usize],
    op: &ComplexMatrix<T>,
) -> ComplexMatrix<T> {
    let left = left_apply_on_factors(m, dims, targets, op, false);
    let right = left_apply_on_factors(&left.adjoint(), dims, targets, op, false);
    right.adjoint()
}

fn left_apply_on_factors<T: Scalar>(
    m: &ComplexMatrix<T>,
    dims: &[usize],
    targets: &[usize],
    op: &ComplexMatrix<T>,
    conjugate_op: bool,
) -> ComplexMatrix<T> {
    let full_dim: usize = dims.iter().product();
    assert_eq!(m.rows(), full_dim);
    let target_dim: usize = targets.iter().map(|&t| dims[t]).product();
    let rest: Vec<usize> = (0..dims.len()).filter(|k| !targets.contains(k)).collect();
    let rest_dim: usize = rest.iter().map(|&k| dims[k]).product();

    // Precompute the full index for every (target, rest) pair.
    let mut full_of = vec![0usize; target_dim * rest_dim];
    for a in 0..target_dim {
        for r in 0..rest_dim {
            let mut digit = vec![0usize; dims.len()];
            let mut t = a;
            for &k in targets.iter().rev() {
                digit[k] = t % dims[k];
                t /= dims[k];
            }
            let mut rr = r;
            for &k in rest.iter().rev() {
                digit[k] = rr % dims[k];
                rr /= dims[k];
            }
            let mut full = 0usize;
            for (k, &dk) in dims.iter().enumerate() {
                full = full * dk + digit[k];
            }
            full_of[a * rest_dim + r] = full;
        }
    }

    let mut out = ComplexMatrix::zeros(m.rows(), m.cols());
    for a in 0..target_dim {
        for ap in 0..target_dim {
            let mut coeff = op.get(a, ap);
            if conjugate_op {
                coeff = coeff.conj();
            }
            if coeff.norm_sqr() == T::zero() {
                continue;
            }
            for r in 0..rest_dim {
                let row_out = full_of[a * rest_dim + r];
                let row_in = full_of[ap * rest_dim + r];
                for col in 0..m.cols() {
                    let v = out.get(row_out, col) + coeff * m.get(row_in, col);
                    out.set(row_out, col, v);
                }
            }
        }
    }
    out
}

fn check_unit_interval<T: Scalar>(name: &'static str, value: T) -> Result<(), ChannelError> {
    if value < T::zero() || value > T::one() {
        return Err(ChannelError::ParamOutOfRange {
            name,
            value: value.to_f64().unwrap_or(f64::NAN),
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{partial_trace, DensityOperator, PureState};
    use crate::sampling;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type M = ComplexMatrix<f64>;

    #[test]
    fn eta_profile_values() {
        assert_eq!(eta_profile(0.0, 1.0), 1.0);
        assert_eq!(eta_profile(0.5, 1.0), 0.5);
        assert_eq!(eta_profile(2.0, 1.0), 0.0);
        assert_eq!(eta_profile(1.0, 1.0), 0.0);
    }

    #[test]
    fn coupling_reflection_entries() {
        let full = coupling_reflection(1.0f64).unwrap();
        assert!(full.max_abs_diff(&M::from_real(2, &[1.0, 0.0, 0.0, -1.0])) < 1e-15);
        let flip = coupling_reflection(0.0f64).unwrap();
        assert!(flip.max_abs_diff(&M::from_real(2, &[0.0, 1.0, 1.0, 0.0])) < 1e-15);
        let s3 = 0.75f64.sqrt();
        let quarter = coupling_reflection(0.25f64).unwrap();
        assert!(quarter.max_abs_diff(&M::from_real(2, &[0.5, s3, s3, -0.5])) < 1e-15);
    }

    #[test]
    fn control_coupling_is_unitary_and_blocked() {
        for lambda in [0.0, 0.25, 0.5, 0.9, 1.0] {
            let u = qubit_control_coupling(lambda).unwrap();
            assert!(u.unitary_defect() < 1e-12);
        }
        assert!(qubit_control_coupling(1.5f64).is_err());
        assert!(qubit_control_coupling(-0.1f64).is_err());
    }

    #[test]
    fn reflection_tensor_identity_block_structure() {
        let theta = coupling_reflection(0.25f64).unwrap();
        let big = theta.kron(&M::identity(2));
        let s3 = 0.75f64.sqrt();
        let expect = M::from_real(4, &[
            0.5, 0.0, s3, 0.0,
            0.0, 0.5, 0.0, s3,
            s3, 0.0, -0.5, 0.0,
            0.0, s3, 0.0, -0.5,
        ]);
        assert!(big.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn amplitude_damping_action() {
        let identity = amplitude_damping(1.0f64).unwrap();
        assert!(identity.choi().same_map(&QuantumChannel::identity(2).choi()));

        let reset = amplitude_damping(0.0f64).unwrap();
        let out = reset.apply(&DensityOperator::maximally_mixed(2)).unwrap();
        let ground = DensityOperator::pure(&PureState::<f64>::basis(2, 0));
        assert!(out.max_abs_diff(&ground) < 1e-14);

        let half = amplitude_damping(0.5f64).unwrap();
        let excited = DensityOperator::pure(&PureState::<f64>::basis(2, 1));
        let out = half.apply(&excited).unwrap();
        assert!(out.max_abs_diff(&DensityOperator::diagonal(&[0.5, 0.5]).unwrap()) < 1e-14);

        // Coherence element scales with sqrt(eta).
        let e01 = M::from_real(2, &[0.0, 1.0, 0.0, 0.0]);
        let out = half.apply_matrix(&e01);
        assert!((out.get(0, 1).re - 0.5f64.sqrt()).abs() < 1e-14);
        assert!(out.get(1, 0).norm() < 1e-14 && out.get(0, 0).norm() < 1e-14);

        assert!(amplitude_damping(1.2f64).is_err());
    }

    #[test]
    fn phase_damping_action() {
        assert!(phase_damping(1.0f64).unwrap().choi().same_map(&QuantumChannel::identity(2).choi()));

        let full = phase_damping(0.0f64).unwrap();
        let plus = DensityOperator::pure(&PureState::<f64>::plus());
        let out = full.apply(&plus).unwrap();
        assert!(out.max_abs_diff(&DensityOperator::maximally_mixed(2)) < 1e-14);

        let half = phase_damping(0.5f64).unwrap();
        let out = half.apply(&plus).unwrap();
        let expect = DensityOperator::new(M::from_real(2, &[0.5, 0.25, 0.25, 0.5])).unwrap();
        assert!(out.max_abs_diff(&expect) < 1e-14);

        assert!(phase_damping(1.1f64).is_err());
        assert!(phase_damping(-0.5f64).is_ok());
    }

    #[test]
    fn memoryless_map_is_phase_damping_with_sqrt_lambda() {
        for lambda in [1.0f64, 0.25, 0.01] {
            let env = EnvironmentModel::dephasing_qubit(lambda, 1.0).unwrap();
            let n = memoryless_map(&env);
            let expected = phase_damping(lambda.sqrt()).unwrap();
            assert!(
                n.choi().same_map(&expected.choi()),
                "memoryless map at lambda = {lambda} is not phase damping"
            );
        }
    }

    #[test]
    fn single_carrier_composition_reduces_to_memoryless() {
        let env = EnvironmentModel::dephasing_qubit(0.3, 1.0).unwrap();
        let s = CarrierSequence::uniform(0.7);
        let composed = compose_sequence(&env, &s, 1).unwrap();
        assert!(composed.choi().same_map(&memoryless_map(&env).choi()));
    }

    #[test]
    fn long_spacing_factorizes_into_product() {
        let env = EnvironmentModel::dephasing_qubit(0.37, 1.0).unwrap();
        let s = CarrierSequence::uniform(1.0);
        let composed = compose_sequence(&env, &s, 2).unwrap();
        let n = memoryless_map(&env);
        assert!(composed.choi().distance(&n.tensor(&n).choi()) < 1e-10);
    }

    #[test]
    fn zero_interval_equals_perfect_memory() {
        let env = EnvironmentModel::dephasing_qubit(0.25, 1.0).unwrap();
        let composed = compose_with_intervals(&env, &[0.0], 2).unwrap();
        let perfect = perfect_memory_map(&env, 2).unwrap();
        assert!(composed.choi().distance(&perfect.choi()) < 1e-12);
    }

    #[test]
    fn short_spacing_approaches_perfect_memory() {
        let env = EnvironmentModel::dephasing_qubit(0.25, 1.0).unwrap();
        let s = CarrierSequence::uniform(1e-9);
        let composed = compose_sequence(&env, &s, 2).unwrap();
        let perfect = perfect_memory_map(&env, 2).unwrap();
        assert!(composed.choi().distance(&perfect.choi()) < 1e-4);
    }

    #[test]
    fn perfect_memory_differs_from_memoryless_product() {
        let env = EnvironmentModel::dephasing_qubit(0.25, 1.0).unwrap();
        let perfect = perfect_memory_map(&env, 2).unwrap();
        let n = memoryless_map(&env);
        assert!(perfect.choi().distance(&n.tensor(&n).choi()) > 0.01);
    }

    #[test]
    fn perfect_memory_single_carrier_is_memoryless() {
        let env = EnvironmentModel::dephasing_qubit(0.6, 1.0).unwrap();
        assert!(perfect_memory_map(&env, 1)
            .unwrap()
            .choi()
            .same_map(&memoryless_map(&env).choi()));
    }

    #[test]
    fn single_carrier_group_is_memoryless() {
        let env = EnvironmentModel::dephasing_qubit(0.35, 1.0).unwrap();
        let single = grouped_map(&env, &[]).unwrap();
        assert!(single.choi().same_map(&memoryless_map(&env).choi()));
    }

    #[test]
    fn grouped_map_with_long_intra_interval_factorizes() {
        let env = EnvironmentModel::dephasing_qubit(0.5, 1.0).unwrap();
        let grouped = grouped_map(&env, &[1.5]).unwrap();
        let n = memoryless_map(&env);
        assert!(grouped.choi().distance(&n.tensor(&n).choi()) < 1e-10);
    }

    #[test]
    fn two_groups_with_long_separation_factorize() {
        let env = EnvironmentModel::dephasing_qubit(0.2, 1.0).unwrap();
        let intra = 0.3;
        let s = CarrierSequence::finite(vec![intra, 1.0, intra]).unwrap();
        let composite = compose_sequence(&env, &s, 4).unwrap();
        let group = grouped_map(&env, &[intra]).unwrap();
        assert!(composite.choi().distance(&group.tensor(&group).choi()) < 1e-10);
    }

    #[test]
    fn channel_and_state_paths_agree() {
        let env = EnvironmentModel::dephasing_qubit(0.3, 1.0).unwrap();
        let s = CarrierSequence::periodic(vec![0.4, 0.9]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=3usize {
            let channel = compose_sequence(&env, &s, n).unwrap();
            let input = sampling::random_density(&mut rng, 1 << n);
            let via_channel = channel.apply(&input).unwrap();
            let via_state = apply_sequence(&env, &s, n, &input).unwrap();
            assert!(via_channel.max_abs_diff(&via_state) < 1e-12);
        }
    }

    #[test]
    fn joint_state_reduces_to_product_when_relaxed() {
        // Two carriers with full relaxation in between: tracing the LE out
        // of the joint state must give the product of single-carrier maps.
        let env = EnvironmentModel::dephasing_qubit(0.25, 1.0).unwrap();
        let s = CarrierSequence::uniform(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let input = sampling::random_density(&mut rng, 4);
        let joint = evolve_joint(&env, &s, 2, &input).unwrap();
        assert_eq!(joint.dim(), 8);
        let reduced = partial_trace(&joint, &[2, 2, 2], &[0, 1]).unwrap();
        let n = memoryless_map(&env);
        let expected = n.tensor(&n).apply(&input).unwrap();
        assert!(reduced.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn first_carrier_output_ignores_later_inputs() {
        let env = EnvironmentModel::dephasing_qubit(0.15, 1.0).unwrap();
        let s = CarrierSequence::uniform(0.2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let first = sampling::random_density(&mut rng, 2);
        let mut outputs = Vec::new();
        for _ in 0..3 {
            let second = sampling::random_density(&mut rng, 2);
            let joint_in = first.tensor(&second);
            let out = apply_sequence(&env, &s, 2, &joint_in).unwrap();
            outputs.push(partial_trace(&out, &[2, 2], &[0]).unwrap());
        }
        for w in outputs.windows(2) {
            assert!(w[0].max_abs_diff(&w[1]) < 1e-10);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let env = EnvironmentModel::dephasing_qubit(0.5, 1.0).unwrap();
        let s = CarrierSequence::uniform(0.5);
        assert!(matches!(
            compose_sequence(&env, &s, 12),
            Err(ChannelError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn finite_sequences_refuse_to_overrun() {
        let s = CarrierSequence::finite(vec![0.5, 0.5]).unwrap();
        assert!(s.intervals(3).is_err());
        assert!(CarrierSequence::finite(vec![0.0]).is_err());
        assert!(CarrierSequence::<f64>::finite(vec![]).is_err());
    }

    #[test]
    fn controlled_weights_match_channel_action() {
        let env = EnvironmentModel::dephasing_qubit(0.3, 1.0).unwrap();
        let intervals = [0.4, 0.7];
        let weights = controlled_sequence_weights(&env, &intervals, 3).unwrap();
        let channel = compose_with_intervals(&env, &intervals, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let input = sampling::random_density(&mut rng, 8);
        let direct = channel.apply(&input).unwrap();
        let via_weights = M::from_fn(8, 8, |i, j| weights.get(i, j) * input.matrix().get(i, j));
        assert!(direct.matrix().max_abs_diff(&via_weights) < 1e-12);
    }

    #[test]
    fn stationary_state_survives_every_interval() {
        let env = EnvironmentModel::dephasing_qubit(0.7, 2.0).unwrap();
        for frac in [0.0, 0.25, 0.5, 1.0, 2.0] {
            let out = env.relaxation(2.0 * frac).apply(env.sigma0()).unwrap();
            assert!(out.max_abs_diff(env.sigma0()) < 1e-10);
        }
    }
}
