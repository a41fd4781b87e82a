//! Noise attenuation by environment programming.
//!
//! A block of `n` sacrificial carriers, all prepared in the same diagonal
//! state and spaced by `tau`, steers the local environment away from its
//! stationary state before a message-carrying qubit goes through. For the
//! qubit instance the resulting map is again phase damping, with a damping
//! factor that can exceed the memoryless value `sqrt(lambda)` — the carrier
//! arrives less dephased than it would through the untouched environment.
//!
//! Two independent routes compute the programmed damping factor: stepwise
//! iteration of the environment state, and a closed form from the spectral
//! solution of the affine two-component recursion obeyed by the trajectory.

use crate::channels::{build_sequence_channel, eta_profile, ChannelError, EnvironmentModel};
use crate::linalg::ComplexMatrix;
use crate::quantum::{partial_trace, DensityOperator, QuantumChannel, QuantumError};
use crate::scalar::Scalar;
use num_complex::Complex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AttenuationError {
    #[error("parameter {name} = {value} outside its valid range")]
    ParamOutOfRange { name: &'static str, value: f64 },
    #[error("recursion spectrum unsuitable for the closed form; fall back to iteration")]
    DegenerateSpectrum,
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

/// Parameters of the uniform environment-programming block: `n` sacrificial
/// carriers in `diag(p, 1-p)`, spaced `tau` apart, with coupling strength
/// `lambda` and environment relaxation time `tau_e`.
#[derive(Debug, Clone, Copy)]
pub struct AttenuationProtocol<T> {
    pub n: usize,
    pub tau: T,
    pub p: T,
    pub lambda: T,
    pub tau_e: T,
}

impl<T: Scalar> AttenuationProtocol<T> {
    pub fn new(n: usize, tau: T, p: T, lambda: T, tau_e: T) -> Result<Self, AttenuationError> {
        if !(tau > T::zero()) {
            return Err(AttenuationError::ParamOutOfRange {
                name: "tau",
                value: tau.to_f64().unwrap_or(f64::NAN),
            });
        }
        if !(tau_e > T::zero()) {
            return Err(AttenuationError::ParamOutOfRange {
                name: "tau_e",
                value: tau_e.to_f64().unwrap_or(f64::NAN),
            });
        }
        for (name, v) in [("p", p), ("lambda", lambda)] {
            if v < T::zero() || v > T::one() {
                return Err(AttenuationError::ParamOutOfRange {
                    name,
                    value: v.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(Self { n, tau, p, lambda, tau_e })
    }

    pub fn eta(&self) -> T {
        eta_profile(self.tau, self.tau_e)
    }

    /// Spacing between consecutive message carriers: the block of `n`
    /// sacrificial carriers plus the final relaxation window.
    pub fn cycle_time(&self) -> T {
        T::from_count(self.n) * self.tau + self.tau_e
    }
}

/// Environment trajectory in the (x, y, z) parameterization of
/// `sigma = [[1-z, x+iy], [x-iy, z]]`, starting from the stationary state
/// (x = y = z = 0) and recording one point per programming step.
#[derive(Debug, Clone)]
pub struct EnvTrajectory<T> {
    pub points: Vec<[T; 3]>,
}

impl<T: Scalar> EnvTrajectory<T> {
    pub fn last(&self) -> [T; 3] {
        *self.points.last().expect("trajectory has the initial point")
    }

    /// Bloch-ball validity of every point: `z in [0,1]`,
    /// `x² + y² <= z(1-z)` up to the positivity tolerance.
    pub fn all_valid(&self) -> bool {
        self.points.iter().all(|&[x, y, z]| {
            z >= -T::POSITIVITY_TOL
                && z <= T::one() + T::POSITIVITY_TOL
                && x * x + y * y <= z * (T::one() - z) + T::POSITIVITY_TOL
        })
    }

    pub fn max_abs_y(&self) -> T {
        self.points.iter().map(|p| p[1].abs()).fold(T::zero(), T::max)
    }
}

/// One programming step in the (x, y, z) coordinates: interaction with a
/// `diag(p, 1-p)` carrier followed by amplitude-damping relaxation `eta`.
fn step<T: Scalar>(p: T, lambda: T, eta: T, x: T, y: T, z: T) -> (T, T, T) {
    let c = (lambda * (T::one() - lambda)).sqrt();
    let one = T::one();
    let two = T::lit(2.0);
    let q = one - p;
    let z_int = p * z + q * ((one - lambda) * (one - z) - two * c * x + lambda * z);
    let x_int = p * x + q * (c * (one - two * z) + (one - two * lambda) * x);
    let y_int = (two * p - one) * y;
    (eta.sqrt() * x_int, eta.sqrt() * y_int, eta * z_int)
}

/// Trajectory of the environment under the programming block, from the
/// stationary state.
pub fn iterate_environment<T: Scalar>(proto: &AttenuationProtocol<T>) -> EnvTrajectory<T> {
    let eta = proto.eta();
    let mut points = Vec::with_capacity(proto.n + 1);
    let (mut x, mut y, mut z) = (T::zero(), T::zero(), T::zero());
    points.push([x, y, z]);
    for _ in 0..proto.n {
        let next = step(proto.p, proto.lambda, eta, x, y, z);
        x = next.0;
        y = next.1;
        z = next.2;
        points.push([x, y, z]);
    }
    EnvTrajectory { points }
}

/// Generic trajectory for an arbitrary (possibly coherent) carrier state:
/// alternates the partial-traced interaction with the model's relaxation.
pub fn iterate_environment_general<T: Scalar>(
    env: &EnvironmentModel<T>,
    carrier_state: &DensityOperator<T>,
    tau: T,
    n: usize,
) -> Result<Vec<DensityOperator<T>>, AttenuationError> {
    if carrier_state.dim() != env.carrier_dim() {
        return Err(QuantumError::DimensionMismatch(format!(
            "carrier state dim {} vs model carrier dim {}",
            carrier_state.dim(),
            env.carrier_dim()
        ))
        .into());
    }
    let relax = env.relaxation(tau);
    let dims = [env.carrier_dim(), env.env_dim()];
    let mut sigma = env.sigma0().clone();
    let mut out = Vec::with_capacity(n + 1);
    out.push(sigma.clone());
    for _ in 0..n {
        let joint = carrier_state.tensor(&sigma);
        let rotated = crate::channels::conjugate_on_factors(
            joint.matrix(),
            &dims,
            &[0, 1],
            env.coupling(),
        );
        let after = partial_trace(
            &DensityOperator::from_matrix_unchecked(rotated),
            &dims,
            &[1],
        )?;
        sigma = relax.apply(&after)?;
        out.push(sigma.clone());
    }
    Ok(out)
}

fn gbar_from_point<T: Scalar>(lambda: T, x: T, z: T) -> T {
    let two = T::lit(2.0);
    lambda.sqrt() - two * (lambda.sqrt() * z - (T::one() - lambda).sqrt() * x)
}

/// Damping factor of the programmed map, via iteration.
pub fn iterated_gbar<T: Scalar>(proto: &AttenuationProtocol<T>) -> T {
    let [x, _, z] = iterate_environment(proto).last();
    gbar_from_point(proto.lambda, x, z)
}

/// Damping factor of the programmed map, in closed form.
///
/// The trajectory obeys `v_{j+1} = A v_j + w` with `v_j = (z_j / eta^{1/4},
/// x_j)`; the solution is resummed over the spectrum of the symmetric 2x2
/// matrix `A` with geometric weights `(1 - mu^n) / (1 - mu)`. Signals
/// [`AttenuationError::DegenerateSpectrum`] when an eigenvalue reaches unit
/// magnitude or the eigenbasis degenerates, in which case callers fall back
/// to [`iterated_gbar`].
pub fn closed_form_gbar<T: Scalar>(proto: &AttenuationProtocol<T>) -> Result<T, AttenuationError> {
    let (p, lambda, eta) = (proto.p, proto.lambda, proto.eta());
    let n = proto.n;
    let one = T::one();
    let two = T::lit(2.0);

    // Inert corners where the environment never leaves the stationary state.
    if n == 0 || p == one || eta == T::zero() {
        return Ok(lambda.sqrt());
    }

    let q = one - p;
    let c = (lambda * (one - lambda)).sqrt();
    let se = eta.sqrt();
    let e14 = eta.sqrt().sqrt();
    let e34 = se * e14;

    // Driving vector w = (1-p) (eta^{3/4} (1-lambda), eta^{1/2} sqrt(lambda(1-lambda))).
    let w = [q * e34 * (one - lambda), q * se * c];

    let s = (one + se) * p + q * (one - se) * (one - two * lambda);
    let disc = T::lit(4.0) * se * (one - two * p) + s * s;
    if disc < T::zero() {
        // Complex eigenvalue pair; the real spectral form does not apply.
        return Err(AttenuationError::DegenerateSpectrum);
    }
    let delta = disc.sqrt();
    let mu_plus = se / two * (s + delta);
    let mu_minus = se / two * (s - delta);
    let margin = T::lit(1e-9);
    if mu_plus.abs() >= one - margin || mu_minus.abs() >= one - margin {
        return Err(AttenuationError::DegenerateSpectrum);
    }

    // Orthonormal eigenvectors of the symmetric recursion matrix.
    let alpha_num = T::lit(4.0) * e14 * q * c;
    let mut pair = [[T::zero(); 2]; 2];
    for (slot, sign) in [(0usize, one), (1usize, -one)] {
        let beta_num = (se - one) * p - q * (one - two * lambda) * (one + se) - sign * delta;
        let norm = (alpha_num * alpha_num + beta_num * beta_num).sqrt();
        if norm <= T::lit(1e-300) {
            return Err(AttenuationError::DegenerateSpectrum);
        }
        pair[slot] = [alpha_num / norm, beta_num / norm];
    }
    let [alpha_p, beta_p] = pair[0];
    let [alpha_m, beta_m] = pair[1];

    let geometric = |mu: T| -> T {
        if (one - mu).abs() < T::lit(1e-12) {
            T::from_count(n)
        } else {
            (one - mu.powi(n as i32)) / (one - mu)
        }
    };
    let xi_p = geometric(mu_plus);
    let xi_m = geometric(mu_minus);

    let u = xi_p * alpha_p * alpha_p + xi_m * alpha_m * alpha_m;
    let v = xi_p * beta_p * beta_p + xi_m * beta_m * beta_m;
    let t = xi_p * alpha_p * beta_p + xi_m * alpha_m * beta_m;

    // v_n = Σ xi (e·w) e, unpacked back into z_n = eta^{1/4} v_n[0], x_n = v_n[1].
    let z_n = e14 * (u * w[0] + t * w[1]);
    let x_n = t * w[0] + v * w[1];
    Ok(gbar_from_point(lambda, x_n, z_n))
}

/// Damping factor by the closed form, falling back to iteration when the
/// spectral preconditions fail.
pub fn gbar<T: Scalar>(proto: &AttenuationProtocol<T>) -> T {
    closed_form_gbar(proto).unwrap_or_else(|_| iterated_gbar(proto))
}

/// The programmed single-carrier map: one interaction with the environment
/// left in the final trajectory state.
pub fn modified_map<T: Scalar>(
    proto: &AttenuationProtocol<T>,
) -> Result<QuantumChannel<T>, AttenuationError> {
    let env = EnvironmentModel::dephasing_qubit(proto.lambda, proto.tau_e)?;
    let [x, y, z] = iterate_environment(proto).last();
    let sigma_n = DensityOperator::new(sigma_from_bloch(x, y, z))?;
    Ok(build_sequence_channel(&env, &sigma_n, &[], 1)?)
}

fn sigma_from_bloch<T: Scalar>(x: T, y: T, z: T) -> ComplexMatrix<T> {
    let mut m = ComplexMatrix::zeros(2, 2);
    m.set(0, 0, Complex::new(T::one() - z, T::zero()));
    m.set(0, 1, Complex::new(x, y));
    m.set(1, 0, Complex::new(x, -y));
    m.set(1, 1, Complex::new(z, T::zero()));
    m
}

/// Maximizes the programmed damping factor over the sacrificial-carrier
/// population `p`. Coarse grid followed by golden-section refinement; the
/// objective is smooth and the `p = 1` endpoint (value `sqrt(lambda)`) is
/// always feasible.
pub fn optimize_gbar<T: Scalar>(
    lambda: T,
    n: usize,
    tau: T,
    tau_e: T,
) -> Result<(T, T), AttenuationError> {
    let objective = |p: T| -> Result<T, AttenuationError> {
        let proto = AttenuationProtocol::new(n, tau, p, lambda, tau_e)?;
        Ok(gbar(&proto))
    };

    const GRID: usize = 101;
    let mut best_p = T::one();
    let mut best_g = objective(T::one())?;
    for i in 0..GRID {
        let p = T::from_count(i) / T::from_count(GRID - 1);
        let g = objective(p)?;
        if g > best_g {
            best_g = g;
            best_p = p;
        }
    }

    // Golden-section refinement on the bracketing grid cell.
    let cell = T::one() / T::from_count(GRID - 1);
    let mut lo = (best_p - cell).max(T::zero());
    let mut hi = (best_p + cell).min(T::one());
    let phi = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
    let mut a = hi - phi * (hi - lo);
    let mut b = lo + phi * (hi - lo);
    let mut fa = objective(a)?;
    let mut fb = objective(b)?;
    while hi - lo > T::lit(1e-6) {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + phi * (hi - lo);
            fb = objective(b)?;
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - phi * (hi - lo);
            fa = objective(a)?;
        }
    }
    let p_star = (lo + hi) / T::lit(2.0);
    let g_star = objective(p_star)?;
    if g_star >= best_g {
        Ok((p_star, g_star))
    } else {
        Ok((best_p, best_g))
    }
}
