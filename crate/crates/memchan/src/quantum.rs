//! Quantum-information primitives: states, channels and Choi matrices.
//!
//! Everything is an immutable value and every operation is a pure function,
//! so concurrent evaluation needs no coordination.

use crate::linalg::{hermitian_eigen, hermitian_eigenvalues, ComplexMatrix, LinalgError};
use crate::scalar::Scalar;
use num_complex::Complex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuantumError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("not a valid density operator: {0}")]
    InvalidState(String),
    #[error("not a valid pure state: norm defect {0}")]
    InvalidPureState(String),
    #[error("Kraus completeness defect {0} exceeds tolerance")]
    IncompleteKraus(String),
    #[error("dimension budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Positive, unit-trace operator on a finite-dimensional space.
#[derive(Debug, Clone)]
pub struct DensityOperator<T> {
    dim: usize,
    matrix: ComplexMatrix<T>,
}

impl<T: Scalar> DensityOperator<T> {
    /// Validates Hermiticity, unit trace and positivity before wrapping.
    pub fn new(matrix: ComplexMatrix<T>) -> Result<Self, QuantumError> {
        if !matrix.is_square() {
            return Err(QuantumError::InvalidState("matrix is not square".into()));
        }
        let defect = matrix.hermitian_defect();
        if defect > T::HERMITIAN_TOL {
            return Err(QuantumError::InvalidState(format!("Hermitian defect {defect}")));
        }
        let trace = matrix.trace();
        if (trace.re - T::one()).abs() > T::TRACE_TOL || trace.im.abs() > T::TRACE_TOL {
            return Err(QuantumError::InvalidState(format!("trace {trace}")));
        }
        let eigs = hermitian_eigenvalues(&matrix)?;
        if eigs[0] < -T::POSITIVITY_TOL {
            return Err(QuantumError::InvalidState(format!("negative eigenvalue {}", eigs[0])));
        }
        Ok(Self { dim: matrix.rows(), matrix })
    }

    /// Wraps without validation; for internal paths that construct states
    /// from operations already known to preserve validity.
    pub(crate) fn from_matrix_unchecked(matrix: ComplexMatrix<T>) -> Self {
        Self { dim: matrix.rows(), matrix }
    }

    pub fn pure(state: &PureState<T>) -> Self {
        let mat = ComplexMatrix::from_fn(state.dim(), state.dim(), |i, j| {
            state.amplitude(i) * state.amplitude(j).conj()
        });
        Self::from_matrix_unchecked(mat)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self::from_matrix_unchecked(ComplexMatrix::identity(dim).scale(T::one() / T::from_count(dim)))
    }

    /// Diagonal state from a probability vector (renormalization not applied).
    pub fn diagonal(populations: &[T]) -> Result<Self, QuantumError> {
        let n = populations.len();
        let mat = ComplexMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex::new(populations[i], T::zero())
            } else {
                Complex::new(T::zero(), T::zero())
            }
        });
        Self::new(mat)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> Result<Vec<T>, QuantumError> {
        Ok(hermitian_eigenvalues(&self.matrix)?)
    }

    /// Largest absolute entry difference to another state.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.matrix.max_abs_diff(&other.matrix)
    }

    /// Tensor product with another state.
    pub fn tensor(&self, other: &Self) -> Self {
        Self::from_matrix_unchecked(self.matrix.kron(&other.matrix))
    }
}

/// Unit-norm state vector.
#[derive(Debug, Clone)]
pub struct PureState<T> {
    amplitudes: Vec<Complex<T>>,
}

impl<T: Scalar> PureState<T> {
    pub fn new(amplitudes: Vec<Complex<T>>) -> Result<Self, QuantumError> {
        let norm_sqr: T = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        let defect = (norm_sqr.sqrt() - T::one()).abs();
        if defect > T::PURE_NORM_TOL {
            return Err(QuantumError::InvalidPureState(format!("{defect}")));
        }
        Ok(Self { amplitudes })
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex::new(T::zero(), T::zero()); dim];
        amplitudes[index] = Complex::new(T::one(), T::zero());
        Self { amplitudes }
    }

    /// |+> on a qubit.
    pub fn plus() -> Self {
        let h = T::one() / T::lit(2.0).sqrt();
        Self { amplitudes: vec![Complex::new(h, T::zero()), Complex::new(h, T::zero())] }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitude(&self, i: usize) -> Complex<T> {
        self.amplitudes[i]
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut amplitudes = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amplitudes.push(a * b);
            }
        }
        Self { amplitudes }
    }
}

/// Kronecker product realizing the composite-system ordering used throughout:
/// the first factor indexes the slowest-varying part of the joint index.
pub fn tensor<T: Scalar>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> ComplexMatrix<T> {
    a.kron(b)
}

/// Reduced state over the kept factors of a composite system.
///
/// `dims` lists the factor dimensions in tensor order; `keep` the indices of
/// factors to retain (in their original order). Trace and positivity are
/// preserved exactly up to floating-point addition.
pub fn partial_trace<T: Scalar>(
    state: &DensityOperator<T>,
    dims: &[usize],
    keep: &[usize],
) -> Result<DensityOperator<T>, QuantumError> {
    let total: usize = dims.iter().product();
    if total != state.dim() {
        return Err(QuantumError::DimensionMismatch(format!(
            "factors give dimension {total} but state has {}",
            state.dim()
        )));
    }
    let mat = partial_trace_matrix(state.matrix(), dims, keep);
    Ok(DensityOperator::from_matrix_unchecked(mat))
}

/// Partial trace on a bare matrix; used for operator-valued checks.
pub fn partial_trace_matrix<T: Scalar>(
    matrix: &ComplexMatrix<T>,
    dims: &[usize],
    keep: &[usize],
) -> ComplexMatrix<T> {
    let n = dims.len();
    let traced: Vec<usize> = (0..n).filter(|k| !keep.contains(k)).collect();
    let keep_dim: usize = keep.iter().map(|&k| dims[k]).product();
    let traced_dim: usize = traced.iter().map(|&k| dims[k]).product();

    // Mixed-radix helpers over the kept / traced factor groups.
    let compose = |kept_idx: usize, traced_idx: usize| -> usize {
        let mut digits = vec![0usize; n];
        let mut rem = kept_idx;
        for &k in keep.iter().rev() {
            digits[k] = rem % dims[k];
            rem /= dims[k];
        }
        let mut rem = traced_idx;
        for &k in traced.iter().rev() {
            digits[k] = rem % dims[k];
            rem /= dims[k];
        }
        let mut full = 0usize;
        for (k, &d) in digits.iter().enumerate() {
            full = full * dims[k] + d;
        }
        full
    };

    ComplexMatrix::from_fn(keep_dim, keep_dim, |i, j| {
        let mut acc = Complex::new(T::zero(), T::zero());
        for t in 0..traced_dim {
            acc += matrix.get(compose(i, t), compose(j, t));
        }
        acc
    })
}

/// Von Neumann entropy in bits. Eigenvalues at or below the scalar's
/// eigenvalue floor contribute zero; eigenvalues are clipped to [0, 1].
pub fn von_neumann_entropy<T: Scalar>(state: &DensityOperator<T>) -> T {
    let eigs = hermitian_eigenvalues(state.matrix()).expect("density operator is Hermitian");
    entropy_of_spectrum(&eigs)
}

/// Shannon entropy (bits) of a clipped spectrum.
pub fn entropy_of_spectrum<T: Scalar>(eigenvalues: &[T]) -> T {
    let ln2 = T::lit(2.0).ln();
    eigenvalues
        .iter()
        .map(|&v| v.max(T::zero()).min(T::one()))
        .filter(|&v| v > T::EIGENVALUE_FLOOR)
        .map(|v| -v * v.ln() / ln2)
        .sum()
}

/// Overlap `<psi| rho |psi>` between a pure input and a mixed output.
pub fn fidelity<T: Scalar>(
    state: &PureState<T>,
    rho: &DensityOperator<T>,
) -> Result<T, QuantumError> {
    if state.dim() != rho.dim() {
        return Err(QuantumError::DimensionMismatch(format!(
            "pure state dim {} vs density dim {}",
            state.dim(),
            rho.dim()
        )));
    }
    let v = rho.matrix().matvec(state.amplitudes());
    let mut acc = Complex::new(T::zero(), T::zero());
    for (a, b) in state.amplitudes().iter().zip(v) {
        acc += a.conj() * b;
    }
    Ok(acc.re)
}

/// Canonical purification built from the eigendecomposition: the ancilla is a
/// copy of the system and carries the eigenbasis labels, so tracing it out
/// recovers the input exactly.
pub fn purify<T: Scalar>(rho: &DensityOperator<T>) -> Result<PureState<T>, QuantumError> {
    let eig = hermitian_eigen(rho.matrix())?;
    let d = rho.dim();
    let mut amplitudes = vec![Complex::new(T::zero(), T::zero()); d * d];
    for (k, &value) in eig.values.iter().enumerate() {
        let weight = value.max(T::zero()).sqrt();
        if weight == T::zero() {
            continue;
        }
        for i in 0..d {
            // System index i, ancilla index k.
            amplitudes[i * d + k] += eig.vectors.get(i, k).scale(weight);
        }
    }
    PureState::new(amplitudes)
}

/// Trace distance `0.5 * || rho - sigma ||_1` between two states.
pub fn trace_distance<T: Scalar>(a: &DensityOperator<T>, b: &DensityOperator<T>) -> T {
    let diff = a.matrix().sub(b.matrix());
    let eigs = hermitian_eigenvalues(&diff).expect("difference of states is Hermitian");
    eigs.iter().map(|v| v.abs()).sum::<T>() / T::lit(2.0)
}

/// Completely positive trace-preserving map stored as a Kraus set.
#[derive(Debug, Clone)]
pub struct QuantumChannel<T> {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<ComplexMatrix<T>>,
}

impl<T: Scalar> QuantumChannel<T> {
    /// Validates Kraus completeness `Σ K†K = 1` before wrapping.
    pub fn new(kraus: Vec<ComplexMatrix<T>>) -> Result<Self, QuantumError> {
        let first = kraus.first().ok_or_else(|| {
            QuantumError::IncompleteKraus("empty Kraus set".into())
        })?;
        let dim_in = first.cols();
        let dim_out = first.rows();
        let mut sum = ComplexMatrix::zeros(dim_in, dim_in);
        for k in &kraus {
            if k.cols() != dim_in || k.rows() != dim_out {
                return Err(QuantumError::DimensionMismatch(
                    "Kraus operators must share a common shape".into(),
                ));
            }
            sum = sum.add(&k.adjoint().mul(k));
        }
        let defect = sum.max_abs_diff(&ComplexMatrix::identity(dim_in));
        if defect > T::KRAUS_TOL {
            return Err(QuantumError::IncompleteKraus(format!("{defect}")));
        }
        Ok(Self { dim_in, dim_out, kraus })
    }

    pub fn identity(dim: usize) -> Self {
        Self { dim_in: dim, dim_out: dim, kraus: vec![ComplexMatrix::identity(dim)] }
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[ComplexMatrix<T>] {
        &self.kraus
    }

    pub fn kraus_completeness_defect(&self) -> T {
        let mut sum = ComplexMatrix::zeros(self.dim_in, self.dim_in);
        for k in &self.kraus {
            sum = sum.add(&k.adjoint().mul(k));
        }
        sum.max_abs_diff(&ComplexMatrix::identity(self.dim_in))
    }

    pub fn apply(&self, rho: &DensityOperator<T>) -> Result<DensityOperator<T>, QuantumError> {
        if rho.dim() != self.dim_in {
            return Err(QuantumError::DimensionMismatch(format!(
                "channel input dim {} vs state dim {}",
                self.dim_in,
                rho.dim()
            )));
        }
        Ok(DensityOperator::from_matrix_unchecked(self.apply_matrix(rho.matrix())))
    }

    /// Linear action on an arbitrary operator.
    pub fn apply_matrix(&self, op: &ComplexMatrix<T>) -> ComplexMatrix<T> {
        let mut out = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out = out.add(&k.mul(op).mul(&k.adjoint()));
        }
        out
    }

    /// Tensor product of two channels acting on a composite input.
    pub fn tensor(&self, other: &Self) -> Self {
        let kraus = self
            .kraus
            .iter()
            .flat_map(|a| other.kraus.iter().map(move |b| a.kron(b)))
            .collect();
        Self {
            dim_in: self.dim_in * other.dim_in,
            dim_out: self.dim_out * other.dim_out,
            kraus,
        }
    }

    /// Sequential composition `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Result<Self, QuantumError> {
        if other.dim_out != self.dim_in {
            return Err(QuantumError::DimensionMismatch(format!(
                "composition needs inner dims to agree ({} vs {})",
                other.dim_out, self.dim_in
            )));
        }
        let kraus = self
            .kraus
            .iter()
            .flat_map(|a| other.kraus.iter().map(move |b| a.mul(b)))
            .collect();
        Ok(Self { dim_in: other.dim_in, dim_out: self.dim_out, kraus })
    }

    /// Choi matrix of the channel; the canonical object for map equality.
    pub fn choi(&self) -> ChoiMatrix<T> {
        let d_in = self.dim_in;
        let d_out = self.dim_out;
        let dim = d_in * d_out;
        let mut mat = ComplexMatrix::zeros(dim, dim);
        // Sum_k (1 ⊗ K) |Ω><Ω| (1 ⊗ K)† with the unnormalized |Ω> = Σ |ii>.
        for k in &self.kraus {
            for i in 0..d_in {
                for j in 0..d_in {
                    for a in 0..d_out {
                        for b in 0..d_out {
                            let v = mat.get(i * d_out + a, j * d_out + b)
                                + k.get(a, i) * k.get(b, j).conj();
                            mat.set(i * d_out + a, j * d_out + b, v);
                        }
                    }
                }
            }
        }
        ChoiMatrix { dim_in: d_in, dim_out: d_out, matrix: mat }
    }
}

/// Choi matrix with the input copy as the slow index.
///
/// Two channels are declared equal exactly when the largest absolute entry
/// difference of their Choi matrices is below [`Scalar::MAP_EQ_TOL`]; Kraus
/// sets are never compared directly because of Kraus freedom.
#[derive(Debug, Clone)]
pub struct ChoiMatrix<T> {
    dim_in: usize,
    dim_out: usize,
    matrix: ComplexMatrix<T>,
}

impl<T: Scalar> ChoiMatrix<T> {
    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.matrix
    }

    /// Largest absolute entry difference to another Choi matrix.
    pub fn distance(&self, other: &Self) -> T {
        self.matrix.max_abs_diff(&other.matrix)
    }

    pub fn same_map(&self, other: &Self) -> bool {
        self.dim_in == other.dim_in
            && self.dim_out == other.dim_out
            && self.distance(other) < T::MAP_EQ_TOL
    }

    /// Most negative eigenvalue; ≥ -tolerance for a completely positive map.
    pub fn min_eigenvalue(&self) -> Result<T, QuantumError> {
        Ok(hermitian_eigenvalues(&self.matrix)?[0])
    }

    /// Defect of trace preservation: partial trace over the output factor
    /// must equal the identity on the input copy.
    pub fn trace_preservation_defect(&self) -> T {
        let dims = [self.dim_in, self.dim_out];
        let reduced = partial_trace_matrix(&self.matrix, &dims, &[0]);
        reduced.max_abs_diff(&ComplexMatrix::identity(self.dim_in))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    type M = ComplexMatrix<f64>;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bell() -> DensityOperator<f64> {
        let h = 1.0 / 2f64.sqrt();
        let psi = PureState::new(vec![c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)]).unwrap();
        DensityOperator::pure(&psi)
    }

    #[test]
    fn tensor_identity_case() {
        let i2 = M::identity(2);
        assert_eq!(tensor(&i2, &i2).max_abs_diff(&M::identity(4)), 0.0);
    }

    #[test]
    fn partial_trace_of_product_state() {
        let a = DensityOperator::diagonal(&[0.75, 0.25]).unwrap();
        let b = DensityOperator::<f64>::maximally_mixed(2);
        let ab = a.tensor(&b);
        let ra = partial_trace(&ab, &[2, 2], &[0]).unwrap();
        assert!(ra.max_abs_diff(&a) < 1e-14);
        let rb = partial_trace(&ab, &[2, 2], &[1]).unwrap();
        assert!(rb.max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let reduced = partial_trace(&bell(), &[2, 2], &[0]).unwrap();
        assert!(reduced.max_abs_diff(&DensityOperator::maximally_mixed(2)) < 1e-14);
    }

    #[test]
    fn partial_trace_rejects_mismatched_factors() {
        let rho = DensityOperator::<f64>::maximally_mixed(4);
        assert!(partial_trace(&rho, &[2, 3], &[0]).is_err());
    }

    #[test]
    fn partial_trace_preserves_trace_and_positivity() {
        let rho = DensityOperator::new(M::from_fn(4, 4, |i, j| {
            if i == j {
                c(0.25, 0.0)
            } else {
                c(0.05, if i < j { 0.02 } else { -0.02 })
            }
        }))
        .unwrap();
        let reduced = partial_trace(&rho, &[2, 2], &[1]).unwrap();
        let tr = reduced.matrix().trace();
        assert!((tr.re - 1.0).abs() < 1e-12 && tr.im.abs() < 1e-12);
        assert!(reduced.eigenvalues().unwrap()[0] > -1e-10);
    }

    #[test]
    fn entropy_of_pure_state_is_zero() {
        let rho = DensityOperator::pure(&PureState::<f64>::basis(2, 0));
        assert_eq!(von_neumann_entropy(&rho), 0.0);
    }

    #[test]
    fn entropy_of_maximally_mixed_qubit_is_one() {
        let rho = DensityOperator::<f64>::maximally_mixed(2);
        assert!((von_neumann_entropy(&rho) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_matches_binary_entropy_oracle() {
        // Independent oracle: direct -Σ p log2 p over the diagonal.
        let p = [0.75, 0.25];
        let oracle: f64 = p.iter().map(|&x: &f64| -x * x.log2()).sum();
        let rho = DensityOperator::diagonal(&p).unwrap();
        let s = von_neumann_entropy(&rho);
        assert!((s - oracle).abs() < 1e-12);
        assert!((s - 0.811_278_124_459_132_8).abs() < 1e-12);
    }

    #[test]
    fn entropy_additivity_on_products() {
        let a = DensityOperator::<f64>::diagonal(&[0.6, 0.4]).unwrap();
        let b = DensityOperator::diagonal(&[0.1, 0.2, 0.7]).unwrap();
        let ab = a.tensor(&b);
        let lhs = von_neumann_entropy(&ab);
        let rhs = von_neumann_entropy(&a) + von_neumann_entropy(&b);
        assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn fidelity_with_own_projector_is_one() {
        let psi = PureState::<f64>::plus();
        let rho = DensityOperator::pure(&psi);
        assert!((fidelity(&psi, &rho).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn fidelity_of_orthogonal_states_is_zero() {
        let zero = PureState::<f64>::basis(2, 0);
        let one = DensityOperator::pure(&PureState::<f64>::basis(2, 1));
        assert_eq!(fidelity(&zero, &one).unwrap(), 0.0);
    }

    #[test]
    fn fidelity_through_phase_damping_averages_the_coherence() {
        // Oracle: <+| P_g(|+><+|) |+> = (1 + g)/2, from the 2x2 entries.
        let plus = PureState::<f64>::plus();
        let input = DensityOperator::pure(&plus);
        for g in [0.0f64, 0.3, 0.8, 1.0] {
            let mut k0 = M::zeros(2, 2);
            k0.set(0, 0, c(1.0, 0.0));
            k0.set(1, 1, c(g, 0.0));
            let mut k1 = M::zeros(2, 2);
            k1.set(1, 1, c((1.0 - g * g).sqrt(), 0.0));
            let channel = QuantumChannel::new(vec![k0, k1]).unwrap();
            let f = fidelity(&plus, &channel.apply(&input).unwrap()).unwrap();
            assert!((f - (1.0 + g) / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn fidelity_rejects_dimension_mismatch() {
        let zero = PureState::<f64>::basis(3, 0);
        let one = DensityOperator::pure(&PureState::<f64>::basis(2, 1));
        assert!(fidelity(&zero, &one).is_err());
    }

    #[test]
    fn purify_pure_state_is_product() {
        let rho = DensityOperator::pure(&PureState::<f64>::basis(2, 0));
        let psi = purify(&rho).unwrap();
        let joint = DensityOperator::pure(&psi);
        let back = partial_trace(&joint, &[2, 2], &[0]).unwrap();
        assert!(back.max_abs_diff(&rho) < 1e-10);
    }

    #[test]
    fn purify_maximally_mixed_gives_maximal_entanglement() {
        let rho = DensityOperator::<f64>::maximally_mixed(2);
        let psi = purify(&rho).unwrap();
        let joint = DensityOperator::pure(&psi);
        let anc = partial_trace(&joint, &[2, 2], &[1]).unwrap();
        assert!(anc.max_abs_diff(&DensityOperator::maximally_mixed(2)) < 1e-10);
    }

    #[test]
    fn purify_schmidt_coefficients() {
        let rho = DensityOperator::<f64>::diagonal(&[0.75, 0.25]).unwrap();
        let psi = purify(&rho).unwrap();
        let joint = DensityOperator::pure(&psi);
        let back = partial_trace(&joint, &[2, 2], &[0]).unwrap();
        assert!(back.max_abs_diff(&rho) < 1e-10);
        // Schmidt spectrum of the purification equals the eigenvalues.
        let anc = partial_trace(&joint, &[2, 2], &[1]).unwrap();
        let eigs = anc.eigenvalues().unwrap();
        assert!((eigs[0] - 0.25).abs() < 1e-12 && (eigs[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn purify_then_trace_recovers_random_mixed_state() {
        let rho = DensityOperator::new(M::from_fn(3, 3, |i, j| {
            if i == j {
                c(1.0 / 3.0, 0.0)
            } else {
                c(0.05, 0.03 * (j as f64 - i as f64))
            }
        }))
        .unwrap();
        let psi = purify(&rho).unwrap();
        let joint = DensityOperator::pure(&psi);
        let back = partial_trace(&joint, &[3, 3], &[0]).unwrap();
        assert!(back.max_abs_diff(&rho) < 1e-10);
    }

    #[test]
    fn identity_channel_choi_is_scaled_bell_projector() {
        let choi = QuantumChannel::<f64>::identity(2).choi();
        let expected = bell().matrix().scale(2.0);
        assert!(choi.matrix().max_abs_diff(&expected) < 1e-14);
        assert!(choi.trace_preservation_defect() < 1e-14);
    }

    #[test]
    fn kraus_freedom_yields_identical_choi() {
        // Two Kraus presentations of full dephasing.
        let p0 = M::from_real(2, &[1.0, 0.0, 0.0, 0.0]);
        let p1 = M::from_real(2, &[0.0, 0.0, 0.0, 1.0]);
        let dephase = QuantumChannel::new(vec![p0.clone(), p1.clone()]).unwrap();
        let h = 1.0 / 2f64.sqrt();
        let mixed = QuantumChannel::new(vec![
            p0.add(&p1).scale(h),
            p0.sub(&p1).scale(h),
        ])
        .unwrap();
        assert!(dephase.choi().same_map(&mixed.choi()));
        // Full dephasing has a diagonal Choi matrix.
        let choi = dephase.choi();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(choi.matrix().get(i, j).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn channel_validation_rejects_incomplete_kraus() {
        let half = M::identity(2).scale(0.5);
        assert!(QuantumChannel::new(vec![half]).is_err());
    }

    #[test]
    fn trace_distance_of_orthogonal_pure_states() {
        let a = DensityOperator::pure(&PureState::<f64>::basis(2, 0));
        let b = DensityOperator::pure(&PureState::<f64>::basis(2, 1));
        assert!((trace_distance(&a, &b) - 1.0).abs() < 1e-12);
    }
}
