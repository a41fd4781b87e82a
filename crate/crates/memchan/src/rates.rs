//! Sequence analytics, information measures and transmission rates.
//!
//! Rates are dimensional figures of merit — qubits or bits per unit time —
//! and connect to per-use capacities through the average carrier spacing of
//! a regular sequence. For the dephasing qubit instance the capacities are
//! known in closed form; for everything else the crate computes certified
//! single-copy lower bounds (coherent information, Holevo information).

use crate::attenuation::{gbar, optimize_gbar, AttenuationError, AttenuationProtocol};
use crate::channels::{
    carrier_controlled_blocks, controlled_sequence_weights, CarrierSequence, ChannelError,
    EnvironmentModel,
};
use crate::linalg::{hermitian_eigenvalues, ComplexMatrix};
use crate::quantum::{
    entropy_of_spectrum, purify, von_neumann_entropy, DensityOperator, PureState, QuantumChannel,
    QuantumError,
};
use crate::scalar::Scalar;
use num_complex::Complex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RatesError {
    #[error("parameter {name} = {value} outside its valid range")]
    ParamOutOfRange { name: &'static str, value: f64 },
    #[error("sequence is not regular; use the rate bounds instead")]
    NotRegular,
    #[error("empty sequence pattern")]
    EmptyPattern,
    #[error("rate ratio undefined: reference capacity is zero")]
    UndefinedRatio,
    #[error("channel must map one qubit to one qubit")]
    NotQubitChannel,
    #[error("coupling is not carrier-controlled; no computable capacity bound")]
    NotCarrierControlled,
    #[error("dimension budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Attenuation(#[from] AttenuationError),
    #[error(transparent)]
    Linalg(#[from] crate::linalg::LinalgError),
}

/// Binary entropy in bits, with the 0·log 0 = 0 convention and clipping to
/// the unit interval.
pub fn binary_entropy<T: Scalar>(x: T) -> T {
    let x = x.max(T::zero()).min(T::one());
    let ln2 = T::lit(2.0).ln();
    let mut h = T::zero();
    if x > T::EIGENVALUE_FLOOR {
        h -= x * x.ln() / ln2;
    }
    let y = T::one() - x;
    if y > T::EIGENVALUE_FLOOR {
        h -= y * y.ln() / ln2;
    }
    h
}

/// Quantum capacity of the qubit phase-damping channel with coherence
/// factor `g`: `1 - H2(1/2 + g/2)` qubits per use.
pub fn dephasing_quantum_capacity<T: Scalar>(g: T) -> Result<T, RatesError> {
    if g.abs() > T::one() {
        return Err(RatesError::ParamOutOfRange { name: "g", value: g.to_f64().unwrap_or(f64::NAN) });
    }
    Ok(T::one() - binary_entropy((T::one() + g) / T::lit(2.0)))
}

/// Classical capacity of the qubit phase-damping channel: one bit per use
/// for every coherence factor, since populations pass undisturbed.
pub fn dephasing_classical_capacity<T: Scalar>(g: T) -> Result<T, RatesError> {
    if g.abs() > T::one() {
        return Err(RatesError::ParamOutOfRange { name: "g", value: g.to_f64().unwrap_or(f64::NAN) });
    }
    Ok(T::one())
}

/// Coherent information `S(Φ(ρ)) - S((Φ ⊗ 1)(Ψ_ρ))` with the canonical
/// purification, in qubits.
pub fn coherent_information<T: Scalar>(
    channel: &QuantumChannel<T>,
    rho: &DensityOperator<T>,
) -> Result<T, RatesError> {
    if channel.dim_in() != rho.dim() {
        return Err(QuantumError::DimensionMismatch(format!(
            "channel input dim {} vs state dim {}",
            channel.dim_in(),
            rho.dim()
        ))
        .into());
    }
    if rho.dim() * rho.dim() > 4096 {
        return Err(RatesError::BudgetExceeded(format!(
            "purification dimension {} exceeds 4096",
            rho.dim() * rho.dim()
        )));
    }
    let psi = purify(rho)?;
    coherent_information_from_purification(channel, &psi, rho.dim())
}

/// Coherent information evaluated on an explicit purification of the input;
/// the value does not depend on which purification is supplied.
pub fn coherent_information_from_purification<T: Scalar>(
    channel: &QuantumChannel<T>,
    psi: &PureState<T>,
    system_dim: usize,
) -> Result<T, RatesError> {
    if !psi.dim().is_multiple_of(system_dim) {
        return Err(QuantumError::DimensionMismatch(format!(
            "purification dim {} is not a multiple of system dim {system_dim}",
            psi.dim()
        ))
        .into());
    }
    let anc_dim = psi.dim() / system_dim;
    let rho = reduce_purification(psi, system_dim, anc_dim);
    let out = channel.apply(&DensityOperator::from_matrix_unchecked(rho))?;

    // Joint output (Φ ⊗ 1)|ψ><ψ| assembled from per-Kraus image vectors.
    let joint_dim = channel.dim_out() * anc_dim;
    let mut joint = ComplexMatrix::zeros(joint_dim, joint_dim);
    for k in channel.kraus() {
        let image = apply_left_factor(k, psi.amplitudes(), system_dim, anc_dim);
        for a in 0..joint_dim {
            if image[a].norm_sqr() == T::zero() {
                continue;
            }
            for b in 0..joint_dim {
                let v = joint.get(a, b) + image[a] * image[b].conj();
                joint.set(a, b, v);
            }
        }
    }
    let s_out = von_neumann_entropy(&out);
    let joint_eigs = hermitian_eigenvalues(&joint)?;
    Ok(s_out - entropy_of_spectrum(&joint_eigs))
}

fn reduce_purification<T: Scalar>(
    psi: &PureState<T>,
    system_dim: usize,
    anc_dim: usize,
) -> ComplexMatrix<T> {
    ComplexMatrix::from_fn(system_dim, system_dim, |i, j| {
        let mut acc = Complex::new(T::zero(), T::zero());
        for k in 0..anc_dim {
            acc += psi.amplitude(i * anc_dim + k) * psi.amplitude(j * anc_dim + k).conj();
        }
        acc
    })
}

fn apply_left_factor<T: Scalar>(
    op: &ComplexMatrix<T>,
    amplitudes: &[Complex<T>],
    system_dim: usize,
    anc_dim: usize,
) -> Vec<Complex<T>> {
    let mut out = vec![Complex::new(T::zero(), T::zero()); op.rows() * anc_dim];
    for a in 0..op.rows() {
        for i in 0..system_dim {
            let coeff = op.get(a, i);
            if coeff.norm_sqr() == T::zero() {
                continue;
            }
            for k in 0..anc_dim {
                out[a * anc_dim + k] += coeff * amplitudes[i * anc_dim + k];
            }
        }
    }
    out
}

/// Discrete ensemble of input states with probabilities summing to one.
#[derive(Debug, Clone)]
pub struct Ensemble<T> {
    items: Vec<(T, DensityOperator<T>)>,
}

impl<T: Scalar> Ensemble<T> {
    pub fn new(items: Vec<(T, DensityOperator<T>)>) -> Result<Self, RatesError> {
        if items.is_empty() {
            return Err(RatesError::EmptyPattern);
        }
        let dim = items[0].1.dim();
        let mut total = T::zero();
        for (p, state) in &items {
            if *p < T::zero() {
                return Err(RatesError::ParamOutOfRange {
                    name: "probability",
                    value: p.to_f64().unwrap_or(f64::NAN),
                });
            }
            if state.dim() != dim {
                return Err(QuantumError::DimensionMismatch(
                    "ensemble states must share a dimension".into(),
                )
                .into());
            }
            total += *p;
        }
        if (total - T::one()).abs() > T::PURE_NORM_TOL {
            return Err(RatesError::ParamOutOfRange {
                name: "probability sum",
                value: total.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { items })
    }

    pub fn items(&self) -> &[(T, DensityOperator<T>)] {
        &self.items
    }

    pub fn average(&self) -> DensityOperator<T> {
        let dim = self.items[0].1.dim();
        let mut avg = ComplexMatrix::zeros(dim, dim);
        for (p, state) in &self.items {
            avg = avg.add(&state.matrix().scale(*p));
        }
        DensityOperator::from_matrix_unchecked(avg)
    }
}

/// Holevo information `S(Φ(ρ̄)) - Σ p_k S(Φ(ρ_k))` in bits.
pub fn holevo_information<T: Scalar>(
    channel: &QuantumChannel<T>,
    ensemble: &Ensemble<T>,
) -> Result<T, RatesError> {
    let avg_out = channel.apply(&ensemble.average())?;
    let mut chi = von_neumann_entropy(&avg_out);
    for (p, state) in ensemble.items() {
        chi -= *p * von_neumann_entropy(&channel.apply(state)?);
    }
    Ok(chi)
}

/// Single-copy lower bound on the quantum capacity of a qubit channel:
/// coherent information maximized over the Bloch ball by coarse grid plus
/// coordinate-wise golden refinement.
pub fn one_shot_q_lower<T: Scalar>(channel: &QuantumChannel<T>) -> Result<T, RatesError> {
    if channel.dim_in() != 2 || channel.dim_out() != 2 {
        return Err(RatesError::NotQubitChannel);
    }
    let eval = |r: [T; 3]| -> T {
        let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        let r = if norm > T::one() { [r[0] / norm, r[1] / norm, r[2] / norm] } else { r };
        let rho = bloch_state(r);
        coherent_information(channel, &rho).expect("qubit inputs stay within budget")
    };

    const GRID: i32 = 5;
    let mut best = [T::zero(); 3];
    let mut best_value = eval(best);
    for ix in -GRID..=GRID {
        for iy in -GRID..=GRID {
            for iz in -GRID..=GRID {
                let r = [
                    T::from_f64(ix as f64 / GRID as f64).unwrap(),
                    T::from_f64(iy as f64 / GRID as f64).unwrap(),
                    T::from_f64(iz as f64 / GRID as f64).unwrap(),
                ];
                if r[0] * r[0] + r[1] * r[1] + r[2] * r[2] > T::one() {
                    continue;
                }
                let value = eval(r);
                if value > best_value {
                    best_value = value;
                    best = r;
                }
            }
        }
    }

    // Coordinate-wise golden-section passes around the best grid point.
    let phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut width = T::one() / T::lit(GRID as f64);
    for _ in 0..3 {
        for coord in 0..3 {
            let mut lo = (best[coord] - width).max(-T::one());
            let mut hi = (best[coord] + width).min(T::one());
            let at = |v: T| {
                let mut r = best;
                r[coord] = v;
                eval(r)
            };
            let mut a = hi - phi * (hi - lo);
            let mut b = lo + phi * (hi - lo);
            let mut fa = at(a);
            let mut fb = at(b);
            while hi - lo > T::lit(1e-7) {
                if fa < fb {
                    lo = a;
                    a = b;
                    fa = fb;
                    b = lo + phi * (hi - lo);
                    fb = at(b);
                } else {
                    hi = b;
                    b = a;
                    fb = fa;
                    a = hi - phi * (hi - lo);
                    fa = at(a);
                }
            }
            let mid = (lo + hi) / T::lit(2.0);
            let value = at(mid);
            if value > best_value {
                best_value = value;
                best[coord] = mid;
            }
        }
        width /= T::lit(4.0);
    }
    Ok(best_value)
}

fn bloch_state<T: Scalar>(r: [T; 3]) -> DensityOperator<T> {
    let half = T::lit(0.5);
    let mut m = ComplexMatrix::zeros(2, 2);
    m.set(0, 0, Complex::new(half * (T::one() + r[2]), T::zero()));
    m.set(0, 1, Complex::new(half * r[0], -half * r[1]));
    m.set(1, 0, Complex::new(half * r[0], half * r[1]));
    m.set(1, 1, Complex::new(half * (T::one() - r[2]), T::zero()));
    DensityOperator::from_matrix_unchecked(m)
}

/// Carrier-spacing statistics of a sequence.
///
/// `tau_prime` is the spacing that bounds the rate from above (the inverse
/// of the highest sustained carrier density), `tau_double_prime` the one
/// that bounds it from below; they coincide exactly for regular sequences.
#[derive(Debug, Clone, Copy)]
pub struct SequenceStats<T> {
    pub tau_prime: T,
    pub tau_double_prime: T,
    pub regular: bool,
    pub tau_s: Option<T>,
}

/// Spacing statistics: the exact long-time limit for periodic sequences
/// (both extremes equal the pattern mean), prefix-average extremes for
/// finite patterns.
pub fn sequence_stats<T: Scalar>(s: &CarrierSequence<T>) -> Result<SequenceStats<T>, RatesError> {
    let pattern = s.pattern();
    if pattern.is_empty() {
        return Err(RatesError::EmptyPattern);
    }
    if s.is_periodic() {
        let mean = pattern.iter().fold(T::zero(), |a, &b| a + b) / T::from_count(pattern.len());
        return Ok(SequenceStats {
            tau_prime: mean,
            tau_double_prime: mean,
            regular: true,
            tau_s: Some(mean),
        });
    }
    let mut sum = T::zero();
    let mut min_avg = T::infinity();
    let mut max_avg = T::zero();
    for (k, &tau) in pattern.iter().enumerate() {
        sum += tau;
        let avg = sum / T::from_count(k + 1);
        min_avg = min_avg.min(avg);
        max_avg = max_avg.max(avg);
    }
    let regular = (max_avg - min_avg) <= T::lit(1e-12);
    Ok(SequenceStats {
        tau_prime: min_avg,
        tau_double_prime: max_avg,
        regular,
        tau_s: regular.then_some(min_avg),
    })
}

/// Number of carriers that enter the line strictly before `horizon`, with
/// carrier 0 entering at t = 0.
pub fn carriers_before<T: Scalar>(s: &CarrierSequence<T>, horizon: T) -> usize {
    if horizon <= T::zero() {
        return 0;
    }
    let max_carriers = if s.is_periodic() { usize::MAX } else { s.pattern().len() + 1 };
    let mut count = 0usize;
    let mut t = T::zero();
    let mut idx = 0usize;
    while t < horizon && count < max_carriers {
        count += 1;
        if let Ok(intervals) = s.intervals(idx + 1) {
            t += intervals[idx];
            idx += 1;
        } else {
            break;
        }
    }
    count
}

/// Operating regime a rate report refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Memoryless,
    Perfect,
    Grouped,
    Attenuation,
    Bound,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Regime::Memoryless => "memoryless",
            Regime::Perfect => "perfect",
            Regime::Grouped => "grouped",
            Regime::Attenuation => "attenuation",
            Regime::Bound => "bound",
        };
        write!(f, "{name}")
    }
}

/// Quantum and classical transmission rates with the universal upper bound
/// in force for the regime.
#[derive(Debug, Clone, Copy)]
pub struct RateReport<T> {
    pub r_q: T,
    pub r_c: T,
    pub regime: Regime,
    pub upper_bound: T,
}

/// Rate of a regular sequence: capacity per use over the average spacing.
pub fn rate_regular<T: Scalar>(capacity: T, tau_s: T) -> Result<T, RatesError> {
    if !(tau_s > T::zero()) {
        return Err(RatesError::ParamOutOfRange {
            name: "tau_s",
            value: tau_s.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(capacity / tau_s)
}

/// Rate interval `[capacity/tau'', capacity/tau']` for a sequence that is
/// not regular; collapses to a point exactly when the stats are regular.
pub fn rate_bounds<T: Scalar>(capacity: T, stats: &SequenceStats<T>) -> (T, T) {
    (capacity / stats.tau_double_prime, capacity / stats.tau_prime)
}

/// Rates of the noise-attenuation protocol at the protocol's own population
/// `p`: capacities of the programmed map over the cycle time.
pub fn rate_attenuation<T: Scalar>(proto: &AttenuationProtocol<T>) -> Result<RateReport<T>, RatesError> {
    let g = gbar(proto);
    let cycle = proto.cycle_time();
    let min_interval = if proto.n == 0 { proto.tau_e } else { proto.tau.min(proto.tau_e) };
    Ok(RateReport {
        r_q: dephasing_quantum_capacity(g)? / cycle,
        r_c: dephasing_classical_capacity(g)? / cycle,
        regime: Regime::Attenuation,
        upper_bound: T::one() / min_interval,
    })
}

/// Quantum-rate gain of the population-optimized attenuation protocol over
/// the memoryless line at spacing `tau_e`:
/// `[tau_e / (n tau + tau_e)] · [Q(gbar*) / Q(sqrt(lambda))]`.
pub fn gamma_ratio<T: Scalar>(lambda: T, n: usize, tau: T, tau_e: T) -> Result<T, RatesError> {
    let reference = dephasing_quantum_capacity(lambda.sqrt())?;
    if reference <= T::zero() {
        return Err(RatesError::UndefinedRatio);
    }
    if n == 0 {
        return Ok(T::one());
    }
    let (_, g_star) = optimize_gbar(lambda, n, tau, tau_e)?;
    let time_factor = tau_e / (T::from_count(n) * tau + tau_e);
    Ok(time_factor * dephasing_quantum_capacity(g_star)? / reference)
}

/// Winning configuration of a rate search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Candidate<T> {
    /// Group of `m` carriers at the minimum spacing, groups separated by a
    /// full relaxation window.
    Group { m: usize },
    /// Attenuation protocol with `n` programming carriers at spacing `tau`
    /// and optimized population `p`.
    Attenuation { n: usize, tau: T, p: T },
}

/// Outcome of [`best_rate_search`].
#[derive(Debug, Clone)]
pub struct BestRateSearch<T> {
    pub report: RateReport<T>,
    pub best_quantum: Candidate<T>,
    pub best_classical: Candidate<T>,
}

/// Largest group for which the exact maximally-mixed coherent information is
/// evaluated through the coherence-weight spectrum (carrier_dim^m <= 256).
const EXPLICIT_GROUP_DIM_CAP: usize = 256;

/// Lower bound on the achievable transmission rates when every spacing must
/// be at least `tau_min`, maximized over two families of configurations:
///
/// * groups of `m` carriers packed at `tau_min` and separated by
///   `max(tau_min, tau_e)`, with the per-group quantum capacity bounded
///   below by maximally-mixed coherent information — exactly through the
///   coherence-weight spectrum for small groups, and for arbitrary `m`
///   through the environment-record bound `m·log2(D) - S(LE) - Σ S(ancilla)`
///   (subadditivity of the complementary output entropy, evaluated from the
///   exact single-step marginals);
/// * attenuation protocols with `tau >= tau_min` and up to `budget`
///   programming carriers, when the model is the analytic qubit instance.
///
/// `budget` caps the group size and the programming length. Candidates are
/// scanned in a fixed order (groups by ascending size, then protocols by
/// ascending `n` and `tau`) with ties keeping the earliest, so the search is
/// deterministic. The universal upper bound `log2(D)/tau_min` is reported
/// alongside.
pub fn best_rate_search<T: Scalar>(
    tau_min: T,
    env: &EnvironmentModel<T>,
    budget: usize,
) -> Result<BestRateSearch<T>, RatesError> {
    if !(tau_min > T::zero()) {
        return Err(RatesError::ParamOutOfRange {
            name: "tau_min",
            value: tau_min.to_f64().unwrap_or(f64::NAN),
        });
    }
    let blocks = carrier_controlled_blocks(env).ok_or(RatesError::NotCarrierControlled)?;
    let d = env.carrier_dim();
    let log2_d = T::from_count(d).log2();
    let upper = log2_d / tau_min;
    let separation = tau_min.max(env.tau_e());

    let mut best_q = T::neg_infinity();
    let mut best_q_cand = Candidate::Group { m: 1 };
    let mut best_c = T::neg_infinity();
    let mut best_c_cand = Candidate::Group { m: 1 };
    let mut consider_q = |rate: T, cand: Candidate<T>| {
        if rate > best_q {
            best_q = rate;
            best_q_cand = cand;
        }
    };
    let mut consider_c = |rate: T, cand: Candidate<T>| {
        if rate > best_c {
            best_c = rate;
            best_c_cand = cand;
        }
    };

    // Exact small groups.
    let m_budget = budget.max(1);
    let mut m = 1usize;
    while m <= m_budget && d.pow(m as u32) <= EXPLICIT_GROUP_DIM_CAP {
        let denom = T::from_count(m - 1) * tau_min + separation;
        let mut j = group_coherent_info_exact(env, tau_min, m)?;
        if m == 1 && d == 2 {
            let single = crate::channels::memoryless_map(env);
            j = j.max(one_shot_q_lower(&single)?);
        }
        consider_q(j.max(T::zero()) / denom, Candidate::Group { m });
        consider_c(T::from_count(m) * log2_d / denom, Candidate::Group { m });
        m += 1;
    }

    // Environment-record bound, one pass over all group sizes up to the
    // budget: marginals of the LE and of each relaxation ancilla are exact,
    // subadditivity certifies the bound.
    let relax = env.relaxation(tau_min);
    let de = env.env_dim();
    let mut sigma = env.sigma0().matrix().clone();
    let mut ancilla_entropy = T::zero();
    let inv_d = T::one() / T::from_count(d);
    for m in 1..=m_budget {
        // Interaction with a maximally mixed carrier.
        let mut after = ComplexMatrix::zeros(de, de);
        for block in &blocks {
            after = after.add(&block.mul(&sigma).mul(&block.adjoint()));
        }
        sigma = after.scale(inv_d);

        let s_env = entropy_of_spectrum(&hermitian_eigenvalues(&sigma)?);
        let j = T::from_count(m) * log2_d - s_env - ancilla_entropy;
        let denom = T::from_count(m - 1) * tau_min + separation;
        consider_q(j.max(T::zero()) / denom, Candidate::Group { m });
        consider_c(T::from_count(m) * log2_d / denom, Candidate::Group { m });

        if m < m_budget {
            // Marginal of the dilation ancilla recording this relaxation.
            let kraus = relax.kraus();
            let anc = ComplexMatrix::from_fn(kraus.len(), kraus.len(), |i, j| {
                kraus[i].mul(&sigma).mul(&kraus[j].adjoint()).trace()
            });
            ancilla_entropy += entropy_of_spectrum(&hermitian_eigenvalues(&anc)?);
            sigma = relax.apply_matrix(&sigma);
        }
    }

    // Attenuation protocols, when the model is the analytic qubit instance.
    if let Some(lambda) = dephasing_instance_strength(env, &blocks) {
        let n_max = budget.clamp(1, 64);
        let tau_grid: Vec<T> = if tau_min >= env.tau_e() {
            vec![tau_min]
        } else {
            const TAU_POINTS: usize = 25;
            (0..TAU_POINTS)
                .map(|i| {
                    tau_min
                        + (env.tau_e() - tau_min) * T::from_count(i) / T::from_count(TAU_POINTS - 1)
                })
                .collect()
        };
        for n in 1..=n_max {
            for &tau in &tau_grid {
                let (p_star, g_star) = optimize_gbar(lambda, n, tau, env.tau_e())?;
                let cycle = T::from_count(n) * tau + env.tau_e();
                let cand = Candidate::Attenuation { n, tau, p: p_star };
                consider_q(dephasing_quantum_capacity(g_star)? / cycle, cand);
                consider_c(T::one() / cycle, cand);
            }
        }
    }

    // The universal bound holds exactly; strip float noise from ties.
    let report = RateReport {
        r_q: best_q.min(upper),
        r_c: best_c.min(upper),
        regime: Regime::Bound,
        upper_bound: upper,
    };
    Ok(BestRateSearch { report, best_quantum: best_q_cand, best_classical: best_c_cand })
}

/// Exact coherent information of the `m`-carrier group map at the maximally
/// mixed input. Carrier-controlled couplings make the map entrywise in the
/// carrier product basis, so the joint output with the reference system is
/// supported on a `D^m`-dimensional block whose matrix is the normalized
/// coherence-weight matrix.
pub fn group_coherent_info_exact<T: Scalar>(
    env: &EnvironmentModel<T>,
    intra_interval: T,
    m: usize,
) -> Result<T, RatesError> {
    let d = env.carrier_dim();
    let dim = d.pow(m as u32);
    if dim > EXPLICIT_GROUP_DIM_CAP {
        return Err(RatesError::BudgetExceeded(format!(
            "group dimension {dim} exceeds {EXPLICIT_GROUP_DIM_CAP}"
        )));
    }
    let intervals = vec![intra_interval; m - 1];
    let weights = controlled_sequence_weights(env, &intervals, m)?;
    let normalized = weights.scale(T::one() / T::from_count(dim));
    let eigs = hermitian_eigenvalues(&normalized)?;
    Ok(T::from_count(m) * T::from_count(d).log2() - entropy_of_spectrum(&eigs))
}

/// Coupling strength of the analytic qubit instance, when the model matches
/// it: identity block for carrier |0>, coupling reflection for carrier |1>.
fn dephasing_instance_strength<T: Scalar>(
    env: &EnvironmentModel<T>,
    blocks: &[ComplexMatrix<T>],
) -> Option<T> {
    if env.carrier_dim() != 2 || env.env_dim() != 2 || blocks.len() != 2 {
        return None;
    }
    let tol = T::lit(1e-9);
    if blocks[0].max_abs_diff(&ComplexMatrix::identity(2)) > tol {
        return None;
    }
    let lambda = blocks[1].get(0, 0).re * blocks[1].get(0, 0).re;
    if lambda < T::zero() || lambda > T::one() {
        return None;
    }
    match crate::channels::coupling_reflection(lambda) {
        Ok(theta) if blocks[1].max_abs_diff(&theta) <= tol => Some(lambda),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::phase_damping;
    use crate::linalg::ComplexMatrix;
    use crate::quantum::{DensityOperator, PureState, QuantumChannel};

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.0f64), 0.0);
        assert_eq!(binary_entropy(1.0f64), 0.0);
        assert!((binary_entropy(0.5f64) - 1.0).abs() < 1e-15);
        assert!((binary_entropy(0.75f64) - 0.811_278_124_459_132_8).abs() < 1e-14);
    }

    #[test]
    fn dephasing_capacities() {
        assert_eq!(dephasing_quantum_capacity(1.0f64).unwrap(), 1.0);
        assert!(dephasing_quantum_capacity(0.0f64).unwrap().abs() < 1e-15);
        assert!((dephasing_quantum_capacity(0.5f64).unwrap() - 0.188_721_875_540_867_17).abs() < 1e-14);
        for g in [0.0f64, 0.37, 1.0] {
            assert_eq!(dephasing_classical_capacity(g).unwrap(), 1.0);
        }
        assert!(dephasing_quantum_capacity(1.5f64).is_err());
        // Sign of the coherence factor does not matter.
        assert!(
            (dephasing_quantum_capacity(-0.5f64).unwrap()
                - dephasing_quantum_capacity(0.5f64).unwrap())
            .abs()
                < 1e-15
        );
    }

    #[test]
    fn quantum_capacity_is_monotone_in_g() {
        let mut prev = -1.0f64;
        for i in 0..=1000 {
            let g = i as f64 / 1000.0;
            let q = dephasing_quantum_capacity(g).unwrap();
            assert!(q + 1e-12 >= prev, "capacity dipped at g = {g}");
            prev = q;
        }
    }

    #[test]
    fn coherent_information_of_identity_is_input_entropy() {
        let id = QuantumChannel::<f64>::identity(2);
        let rho = DensityOperator::maximally_mixed(2);
        assert!((coherent_information(&id, &rho).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn coherent_information_of_pure_input_is_zero() {
        let channel = phase_damping(0.3f64).unwrap();
        let rho = DensityOperator::pure(&PureState::<f64>::basis(2, 0));
        assert!(coherent_information(&channel, &rho).unwrap().abs() < 1e-10);
    }

    #[test]
    fn coherent_information_matches_dephasing_formula() {
        for g in [0.0f64, 0.25, 0.5, 0.9] {
            let channel = phase_damping(g).unwrap();
            let rho = DensityOperator::maximally_mixed(2);
            let j = coherent_information(&channel, &rho).unwrap();
            let expect = dephasing_quantum_capacity(g).unwrap();
            assert!((j - expect).abs() < 1e-10, "J = {j}, formula = {expect} at g = {g}");
        }
    }

    #[test]
    fn coherent_information_is_purification_independent() {
        let channel = phase_damping(0.5f64).unwrap();
        let rho = DensityOperator::diagonal(&[0.7, 0.3]).unwrap();
        let j_canonical = coherent_information(&channel, &rho).unwrap();
        // Alternative purification: rotate the ancilla by a Hadamard.
        let psi = purify(&rho).unwrap();
        let h = 1.0 / 2f64.sqrt();
        let had = ComplexMatrix::<f64>::from_real(2, &[h, h, h, -h]);
        let mut rotated = vec![num_complex::Complex64::new(0.0, 0.0); 4];
        for i in 0..2 {
            for k in 0..2 {
                for kp in 0..2 {
                    rotated[i * 2 + k] += had.get(k, kp) * psi.amplitude(i * 2 + kp);
                }
            }
        }
        let psi2 = PureState::new(rotated).unwrap();
        let j_rotated = coherent_information_from_purification(&channel, &psi2, 2).unwrap();
        assert!((j_canonical - j_rotated).abs() < 1e-9);
    }

    #[test]
    fn holevo_of_singleton_is_zero() {
        let channel = phase_damping(0.4f64).unwrap();
        let ens = Ensemble::new(vec![(1.0, DensityOperator::maximally_mixed(2))]).unwrap();
        assert!(holevo_information(&channel, &ens).unwrap().abs() < 1e-12);
    }

    #[test]
    fn holevo_of_basis_ensemble_is_one_bit() {
        for g in [0.0f64, 0.3, 1.0] {
            let channel = phase_damping(g).unwrap();
            let ens = Ensemble::new(vec![
                (0.5, DensityOperator::pure(&PureState::<f64>::basis(2, 0))),
                (0.5, DensityOperator::pure(&PureState::<f64>::basis(2, 1))),
            ])
            .unwrap();
            assert!((holevo_information(&channel, &ens).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn holevo_vanishes_when_outputs_coincide() {
        // Full dephasing maps |+> and |-> to the same output.
        let channel = phase_damping(0.0f64).unwrap();
        let h = 1.0 / 2f64.sqrt();
        let minus = PureState::new(vec![
            num_complex::Complex64::new(h, 0.0),
            num_complex::Complex64::new(-h, 0.0),
        ])
        .unwrap();
        let ens = Ensemble::new(vec![
            (0.5, DensityOperator::pure(&PureState::<f64>::plus())),
            (0.5, DensityOperator::pure(&minus)),
        ])
        .unwrap();
        assert!(holevo_information(&channel, &ens).unwrap().abs() < 1e-12);
    }

    #[test]
    fn holevo_of_overlapping_ensemble() {
        // Oracle: eigenvalues of (|0><0| + |+><+|)/2 are (2 ± sqrt 2)/4.
        let lp: f64 = (2.0 + 2f64.sqrt()) / 4.0;
        let lm: f64 = (2.0 - 2f64.sqrt()) / 4.0;
        let oracle = -lp * lp.log2() - lm * lm.log2();
        let channel = QuantumChannel::<f64>::identity(2);
        let ens = Ensemble::new(vec![
            (0.5, DensityOperator::pure(&PureState::<f64>::basis(2, 0))),
            (0.5, DensityOperator::pure(&PureState::<f64>::plus())),
        ])
        .unwrap();
        let chi = holevo_information(&channel, &ens).unwrap();
        assert!((chi - oracle).abs() < 1e-12);
        assert!((chi - 0.600_876_036_692_856_2).abs() < 1e-12);
    }

    #[test]
    fn one_shot_bound_on_identity_and_full_dephasing() {
        assert!((one_shot_q_lower(&QuantumChannel::<f64>::identity(2)).unwrap() - 1.0).abs() < 1e-6);
        assert!(one_shot_q_lower(&phase_damping(0.0f64).unwrap()).unwrap().abs() < 1e-9);
    }

    #[test]
    fn one_shot_bound_recovers_dephasing_capacity() {
        let q = one_shot_q_lower(&phase_damping(0.5f64).unwrap()).unwrap();
        assert!((q - 0.188_721_875_540_867_17).abs() < 1e-4);
    }

    #[test]
    fn stats_of_uniform_periodic_sequence() {
        let s = CarrierSequence::uniform(1.0f64);
        let stats = sequence_stats(&s).unwrap();
        assert!(stats.regular);
        assert_eq!(stats.tau_s, Some(1.0));
        assert_eq!((stats.tau_prime, stats.tau_double_prime), (1.0, 1.0));
    }

    #[test]
    fn stats_of_alternating_periodic_sequence() {
        let s = CarrierSequence::periodic(vec![1.0f64, 2.0]).unwrap();
        let stats = sequence_stats(&s).unwrap();
        assert!(stats.regular);
        assert_eq!(stats.tau_s, Some(1.5));
    }

    #[test]
    fn stats_of_irregular_finite_pattern() {
        let s = CarrierSequence::finite(vec![1.0f64, 2.0]).unwrap();
        let stats = sequence_stats(&s).unwrap();
        assert!(!stats.regular);
        assert_eq!(stats.tau_prime, 1.0);
        assert_eq!(stats.tau_double_prime, 1.5);
        assert!(stats.tau_s.is_none());
        let (lo, hi) = rate_bounds(0.3, &stats);
        assert!(lo <= hi);
        assert!((lo - 0.2).abs() < 1e-15 && (hi - 0.3).abs() < 1e-15);
    }

    #[test]
    fn carrier_count_follows_entry_convention() {
        let s = CarrierSequence::uniform(1.0f64);
        assert_eq!(carriers_before(&s, 3.5), 4);
        assert_eq!(carriers_before(&s, 1.0), 1);
        assert_eq!(carriers_before(&s, 0.0), 0);
        let f = CarrierSequence::finite(vec![1.0f64]).unwrap();
        assert_eq!(carriers_before(&f, 10.0), 2);
    }

    #[test]
    fn regular_rates() {
        assert_eq!(rate_regular(1.0f64, 1.0).unwrap(), 1.0);
        assert_eq!(rate_regular(0.0f64, 2.0).unwrap(), 0.0);
        let q = dephasing_quantum_capacity(0.25f64.sqrt()).unwrap();
        assert!((rate_regular(q, 1.0).unwrap() - 0.188_721_875_540_867_17).abs() < 1e-14);
        assert!(rate_regular(1.0f64, 0.0).is_err());
    }

    #[test]
    fn attenuation_rates_and_ordering() {
        let proto = AttenuationProtocol::<f64>::new(1, 0.5, 0.0, 0.01, 1.0).unwrap();
        let report = rate_attenuation(&proto).unwrap();
        assert!((report.r_c - 1.0 / 1.5).abs() < 1e-12);
        assert!(report.r_q <= report.r_c && report.r_c <= report.upper_bound);
        // No programming block: memoryless rates at spacing tau_e.
        let idle = AttenuationProtocol::<f64>::new(0, 0.5, 1.0, 0.25, 1.0).unwrap();
        let report = rate_attenuation(&idle).unwrap();
        assert!((report.r_q - 0.188_721_875_540_867_17).abs() < 1e-12);
        assert!((report.r_c - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gamma_without_programming_is_exactly_one() {
        assert_eq!(gamma_ratio(0.25f64, 0, 0.4, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn gamma_is_undefined_at_zero_coupling_strength() {
        assert!(matches!(gamma_ratio(0.0f64, 1, 0.5, 1.0), Err(RatesError::UndefinedRatio)));
    }

    #[test]
    fn gamma_peak_in_strong_coupling() {
        let g = gamma_ratio(0.01f64, 1, 0.5, 1.0).unwrap();
        assert!(g > 1.2 && g < 1.4, "gamma = {g}");
    }

    #[test]
    fn gamma_stays_below_one_in_weak_coupling() {
        for n in [1usize, 3] {
            for tau in [0.2f64, 0.5, 0.9] {
                let g = gamma_ratio(0.81f64, n, tau, 1.0).unwrap();
                assert!(g <= 1.0 + 1e-9, "gamma = {g} at n = {n}, tau = {tau}");
            }
        }
    }

    #[test]
    fn group_info_at_one_carrier_matches_capacity_formula() {
        let env = EnvironmentModel::<f64>::dephasing_qubit(0.25, 1.0).unwrap();
        let j = group_coherent_info_exact(&env, 1.0, 1).unwrap();
        assert!((j - 0.188_721_875_540_867_17).abs() < 1e-12);
    }

    #[test]
    fn group_info_factorizes_at_long_spacing() {
        let env = EnvironmentModel::<f64>::dephasing_qubit(0.4, 1.0).unwrap();
        let j1 = group_coherent_info_exact(&env, 1.0, 1).unwrap();
        let j3 = group_coherent_info_exact(&env, 1.0, 3).unwrap();
        assert!((j3 - 3.0 * j1).abs() < 1e-10);
    }

    #[test]
    fn search_at_long_tau_min_returns_memoryless_rates() {
        let env = EnvironmentModel::<f64>::dephasing_qubit(0.25, 1.0).unwrap();
        let out = best_rate_search(1.0, &env, 2000).unwrap();
        let q = dephasing_quantum_capacity(0.5f64).unwrap();
        assert!((out.report.r_q - q).abs() < 1e-4, "r_q = {}", out.report.r_q);
        assert!((out.report.r_c - 1.0).abs() < 1e-12);
        assert_eq!(out.report.upper_bound, 1.0);
    }

    #[test]
    fn search_never_exceeds_universal_bound() {
        let env = EnvironmentModel::<f64>::dephasing_qubit(0.25, 1.0).unwrap();
        for tau_min in [0.05f64, 0.3, 1.0, 2.0] {
            let out = best_rate_search(tau_min, &env, 500).unwrap();
            assert!(out.report.r_q <= out.report.upper_bound + 1e-12);
            assert!(out.report.r_c <= out.report.upper_bound + 1e-12);
            assert!(out.report.r_q <= out.report.r_c + 1e-12);
        }
        // Above the relaxation time the memoryless value scales with the
        // forced spacing.
        let out = best_rate_search(2.0, &env, 500).unwrap();
        let q = dephasing_quantum_capacity(0.5f64).unwrap();
        assert!((out.report.r_q - q / 2.0).abs() < 1e-9);
        assert!((out.report.r_c - 0.5).abs() < 1e-12);
    }

    #[test]
    fn coherent_information_rejects_oversized_inputs() {
        let channel = QuantumChannel::<f64>::identity(70);
        let rho = DensityOperator::maximally_mixed(70);
        assert!(matches!(
            coherent_information(&channel, &rho),
            Err(RatesError::BudgetExceeded(_))
        ));
    }

    #[test]
    fn search_approaches_bound_at_short_tau_min() {
        let env = EnvironmentModel::<f64>::dephasing_qubit(0.25, 1.0).unwrap();
        let out = best_rate_search(0.01, &env, 200_000).unwrap();
        assert!(
            out.report.r_q >= 0.9 * out.report.upper_bound,
            "r_q = {} vs bound {}",
            out.report.r_q,
            out.report.upper_bound
        );
        match out.best_quantum {
            Candidate::Group { m } => assert!(m >= 10),
            other => panic!("expected a large group, got {other:?}"),
        }
    }

    #[test]
    fn rejects_non_positive_tau_min() {
        let env = EnvironmentModel::<f64>::dephasing_qubit(0.25, 1.0).unwrap();
        assert!(best_rate_search(0.0, &env, 10).is_err());
    }

    #[test]
    fn perfect_memory_identity_coupling_transfers_full_qubits() {
        // With the diagonal coupling the perfect-memory group map is the
        // identity on every carrier; the per-carrier one-shot bound is 1.
        let env = EnvironmentModel::<f64>::dephasing_qubit(1.0, 1.0).unwrap();
        let perfect = crate::channels::perfect_memory_map(&env, 2).unwrap();
        let rho = DensityOperator::maximally_mixed(4);
        let j = coherent_information(&perfect, &rho).unwrap();
        assert!((j - 2.0).abs() < 1e-6, "J = {j}");
    }
}
