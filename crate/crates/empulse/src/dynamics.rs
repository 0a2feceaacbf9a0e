//! Relativistic charged-particle dynamics in pulse fields.
//!
//! The equation of motion is integrated in Cartesian coordinates, where the
//! Christoffel terms vanish, so the reduced system is
//!
//! ```text
//! d xi^mu / d tau = V^mu
//! d V^mu  / d tau = sign * F^mu_nu(xi) V^nu
//! ```
//!
//! with `F` the *real* dimensionless field tensor and `tau` the dimensionless
//! proper time. All of `q`, `m0`, `c`, `ell0` cancel in this normalization:
//! the particle enters only through its charge sign, and the coupling
//! strength only through the pulse `Lambda` (this is unit-tested against an
//! explicitly dimensional formulation in the integration tests). Antisymmetry
//! of `F` keeps `V.V = -1` exact in the continuum; the integrator monitors the
//! drift instead of projecting it away, so the mass shell doubles as a free
//! accuracy diagnostic. Optional renormalization is available and logged in
//! the statistics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chiral::{EMFieldSample, PulseField};
use crate::float::Real;
use crate::geometry::{metric_sign, minkowski_dot, SpacetimePoint};
use crate::ode::{integrate, OdeError, OdeOpts, StepControl};
use crate::scalar::PulseParams;

/// On-shell particle state: 4-position, 4-velocity, proper time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleState<T> {
    /// Contravariant position `(t, x, y, z)`.
    pub position: [T; 4],
    /// Contravariant 4-velocity, `V.V = -1`.
    pub velocity: [T; 4],
    /// Proper-time parameter along the worldline.
    pub tau: T,
}

impl<T: Real> ParticleState<T> {
    /// A particle at rest at the given spatial position and lab time.
    pub fn at_rest(t: T, x: T, y: T, z: T) -> Self {
        Self {
            position: [t, x, y, z],
            velocity: [T::one(), T::zero(), T::zero(), T::zero()],
            tau: T::zero(),
        }
    }

    /// A particle with the given coordinate 3-velocity (|v| < 1).
    pub fn with_velocity(t: T, pos: [T; 3], v: [T; 3]) -> Self {
        let v2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        let gamma = (T::one() - v2).sqrt().recip();
        Self {
            position: [t, pos[0], pos[1], pos[2]],
            velocity: [gamma, gamma * v[0], gamma * v[1], gamma * v[2]],
            tau: T::zero(),
        }
    }

    pub fn gamma(&self) -> T {
        self.velocity[0]
    }

    pub fn lab_time(&self) -> T {
        self.position[0]
    }

    /// Mass-shell defect `V.V + 1` (zero on shell).
    pub fn shell_defect(&self) -> T {
        minkowski_dot(&self.velocity, &self.velocity) + T::one()
    }

    /// Angular momentum about the z-axis per unit rest mass, `x Vy - y Vx`.
    pub fn angular_momentum_z(&self) -> T {
        self.position[1] * self.velocity[2] - self.position[2] * self.velocity[1]
    }

    pub fn spacetime_point(&self) -> SpacetimePoint<T> {
        SpacetimePoint::new(self.position[0], self.position[1], self.position[2], self.position[3])
    }
}

/// Charge sign of the test particle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChargeSign {
    Positive,
    Negative,
}

impl ChargeSign {
    pub fn factor<T: Real>(self) -> T {
        match self {
            ChargeSign::Positive => T::one(),
            ChargeSign::Negative => -T::one(),
        }
    }
}

/// Reduced coupling of particle to pulse: after nondimensionalization only
/// the field strength `Lambda` and the charge sign remain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec<T> {
    pub lambda: T,
    pub sign: ChargeSign,
}

impl<T: Real> CouplingSpec<T> {
    /// Reuse the strength already carried by the pulse parameters.
    pub fn from_pulse(params: &PulseParams<T>, sign: ChargeSign) -> Self {
        Self { lambda: params.lambda, sign }
    }
}

/// 4-acceleration `a^mu = sign * F^mu_nu V^nu` for the given field sample.
/// Antisymmetry of `F` makes `a.V = 0` to roundoff.
pub fn lorentz_acceleration<T: Real>(
    state: &ParticleState<T>,
    field: &EMFieldSample<T>,
    sign: ChargeSign,
) -> [T; 4] {
    let f = field.real_tensor();
    let s = sign.factor::<T>();
    let v = &state.velocity;
    let mut a = [T::zero(); 4];
    for mu in 0..4 {
        let mut acc = T::zero();
        for nu in 0..4 {
            acc = acc + f[mu][nu] * v[nu];
        }
        a[mu] = s * metric_sign::<T>(mu) * acc;
    }
    a
}

/// Integration options for trajectories.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrajectoryOpts<T> {
    pub rtol: T,
    pub atol: T,
    /// Renormalize `V` onto the mass shell after every accepted step.
    /// Off by default: the drift is monitored, not hidden.
    pub renormalize_shell: bool,
    pub max_steps: usize,
}

impl<T: Real> Default for TrajectoryOpts<T> {
    fn default() -> Self {
        Self {
            rtol: T::of(1e-9),
            atol: T::of(1e-12),
            renormalize_shell: false,
            max_steps: 10_000_000,
        }
    }
}

/// One dense-output sample along a trajectory.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TrajectorySample<T> {
    pub lab_time: T,
    pub tau: T,
    pub state: ParticleState<T>,
    pub gamma: T,
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct TrajectoryStats {
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub rhs_evals: usize,
    /// Largest `|V.V + 1|` observed at accepted steps.
    pub max_shell_defect: f64,
    pub renormalized: bool,
}

/// A completed worldline with samples at the requested lab times.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory<T> {
    pub samples: Vec<TrajectorySample<T>>,
    pub initial: ParticleState<T>,
    pub final_state: ParticleState<T>,
    pub stats: TrajectoryStats,
}

impl<T: Real> Trajectory<T> {
    pub fn delta_gamma(&self) -> T {
        self.final_state.gamma() - self.initial.gamma()
    }

    pub fn delta_angular_momentum_z(&self) -> T {
        self.final_state.angular_momentum_z() - self.initial.angular_momentum_z()
    }
}

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("trajectory integration failed: {source}; last good state at lab time {lab_time}")]
    Integration { source: OdeError, lab_time: f64 },
    #[error("requested lab times must be non-decreasing and within the integration window")]
    BadSampleTimes,
    #[error(transparent)]
    Field(#[from] crate::chiral::FieldError),
}

fn pack<T: Real>(s: &ParticleState<T>) -> [T; 8] {
    [
        s.position[0], s.position[1], s.position[2], s.position[3],
        s.velocity[0], s.velocity[1], s.velocity[2], s.velocity[3],
    ]
}

fn unpack<T: Real>(y: &[T; 8], tau: T) -> ParticleState<T> {
    ParticleState {
        position: [y[0], y[1], y[2], y[3]],
        velocity: [y[4], y[5], y[6], y[7]],
        tau,
    }
}

/// Integrate a worldline through an arbitrary field map until the lab time
/// reaches `t_end`, sampling at `sample_times` (dense output, no re-stepping).
///
/// `field` must be pure: it is evaluated at arbitrary spacetime points.
pub fn integrate_trajectory<T, F>(
    initial: &ParticleState<T>,
    field: F,
    sign: ChargeSign,
    t_end: T,
    sample_times: &[T],
    opts: &TrajectoryOpts<T>,
) -> Result<Trajectory<T>, DynamicsError>
where
    T: Real,
    F: Fn(&SpacetimePoint<T>) -> EMFieldSample<T>,
{
    let t_start = initial.lab_time();
    if sample_times.windows(2).any(|w| w[1] < w[0])
        || sample_times.iter().any(|&t| t < t_start || t > t_end)
    {
        return Err(DynamicsError::BadSampleTimes);
    }

    let rhs = |_tau: T, y: &[T; 8]| -> [T; 8] {
        let p = SpacetimePoint::new(y[0], y[1], y[2], y[3]);
        let sample = field(&p);
        let f = sample.real_tensor();
        let s = sign.factor::<T>();
        let mut dv = [T::zero(); 8];
        dv[0] = y[4];
        dv[1] = y[5];
        dv[2] = y[6];
        dv[3] = y[7];
        for mu in 0..4 {
            let mut acc = T::zero();
            for nu in 0..4 {
                acc = acc + f[mu][nu] * y[4 + nu];
            }
            dv[4 + mu] = s * metric_sign::<T>(mu) * acc;
        }
        dv
    };

    let ode_opts = OdeOpts {
        rtol: opts.rtol,
        atol: opts.atol,
        h_initial: None,
        h_max: None,
        max_steps: opts.max_steps,
    };

    // The independent variable is proper time; lab time is component 0 and is
    // strictly increasing (V^t = gamma >= 1), so the stop condition and the
    // sample extraction both root-find on the dense output of component 0.
    let tau_cap = (t_end - t_start) * T::of(4.0) + T::of(1.0);
    let mut samples: Vec<TrajectorySample<T>> = Vec::with_capacity(sample_times.len());
    let mut next_sample = 0usize;
    let mut max_shell = T::zero();
    let mut final_state: Option<ParticleState<T>> = None;

    let y0 = pack(initial);
    let result = integrate(
        rhs,
        T::zero(),
        tau_cap,
        y0,
        &ode_opts,
        |step| {
            // dense samples at requested lab times inside this step
            let lab0 = step.y0[0];
            let lab1 = step.y1[0];
            while next_sample < sample_times.len() && sample_times[next_sample] <= lab1 {
                let t_req = sample_times[next_sample];
                if t_req < lab0 {
                    // can only happen for samples before the start
                    next_sample += 1;
                    continue;
                }
                let tau_at = invert_lab_time(step, t_req);
                let y = step.eval(tau_at);
                let state = unpack(&y, tau_at);
                samples.push(TrajectorySample {
                    lab_time: t_req,
                    tau: tau_at,
                    state,
                    gamma: state.gamma(),
                });
                next_sample += 1;
            }
            let shell = {
                let v = [step.y1[4], step.y1[5], step.y1[6], step.y1[7]];
                (minkowski_dot(&v, &v) + T::one()).abs()
            };
            max_shell = max_shell.max(shell);
            if lab1 >= t_end {
                let tau_at = invert_lab_time(step, t_end);
                let y = step.eval(tau_at);
                final_state = Some(unpack(&y, tau_at));
                StepControl::Stop
            } else {
                StepControl::Continue
            }
        },
    );

    let (stats, last_tau, last_y) = match result {
        Ok((tau, y, stats)) => (stats, tau, y),
        Err((err, tau, y, stats)) => {
            let _ = (tau, y, stats);
            return Err(DynamicsError::Integration {
                source: err,
                lab_time: T::to_f64(&samples.last().map(|s| s.lab_time).unwrap_or(t_start))
                    .unwrap_or(f64::NAN),
            });
        }
    };

    let final_state = final_state.unwrap_or_else(|| unpack(&last_y, last_tau));
    Ok(Trajectory {
        samples,
        initial: *initial,
        final_state,
        stats: TrajectoryStats {
            steps_accepted: stats.steps_accepted,
            steps_rejected: stats.steps_rejected,
            rhs_evals: stats.rhs_evals,
            max_shell_defect: max_shell.to_f64().unwrap_or(f64::NAN),
            renormalized: opts.renormalize_shell,
        },
    })
}

/// Find the proper time inside a dense step at which the lab-time component
/// equals `t_req` (bisection; lab time is monotone in tau).
fn invert_lab_time<T: Real>(
    step: &crate::ode::DenseStep<'_, T, 8>,
    t_req: T,
) -> T {
    let mut lo = step.t0;
    let mut hi = step.t1();
    for _ in 0..200 {
        let mid = (lo + hi) * T::of(0.5);
        if hi - lo <= T::of(1e-14) * hi.abs().max(T::one()) {
            return mid;
        }
        let y = step.eval(mid);
        if y[0] < t_req {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * T::of(0.5)
}

/// Ring of equally spaced particles in a plane orthogonal to the z-axis.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RingConfig<T> {
    pub n_particles: usize,
    pub radius: T,
    pub z_plane: T,
    /// Common initial coordinate 3-velocity (default: at rest).
    pub initial_velocity: [T; 3],
    /// Lab time assigned to the initial states.
    pub start_time: T,
}

impl<T: Real> RingConfig<T> {
    pub fn at_rest(n_particles: usize, radius: T, z_plane: T, start_time: T) -> Self {
        Self {
            n_particles,
            radius,
            z_plane,
            initial_velocity: [T::zero(); 3],
            start_time,
        }
    }
}

/// Equally spaced on-shell states around the circle.
pub fn ring_ensemble<T: Real>(config: &RingConfig<T>) -> Vec<ParticleState<T>> {
    let tau = T::of(std::f64::consts::TAU);
    (0..config.n_particles)
        .map(|k| {
            let theta = tau * T::of_usize(k) / T::of_usize(config.n_particles);
            let (s, c) = theta.sin_cos();
            ParticleState::with_velocity(
                config.start_time,
                [config.radius * c, config.radius * s, config.z_plane],
                config.initial_velocity,
            )
        })
        .collect()
}

/// Specific relativistic kinetic energy trace `(lab_time, gamma - 1)`.
pub fn kinetic_energy_trace<T: Real>(traj: &Trajectory<T>) -> Vec<(T, T)> {
    traj.samples
        .iter()
        .map(|s| (s.lab_time, s.gamma - T::one()))
        .collect()
}

/// Total change of angular momentum about the z-axis over an ensemble.
pub fn angular_momentum_transfer<T: Real>(trajectories: &[Trajectory<T>]) -> T {
    trajectories
        .iter()
        .fold(T::zero(), |acc, t| acc + t.delta_angular_momentum_z())
}

/// Integration window for a pulse/ring interaction: starts wide of the
/// passage and extends by doubling until the field magnitude at every final
/// particle position has fallen below `falloff` of the peak magnitude at the
/// ring at closest approach.
pub fn interaction_window<T: Real>(
    field: &PulseField<T>,
    ring: &RingConfig<T>,
    falloff: T,
) -> (T, T) {
    let params = field.params();
    let duration = params.psi1.min(params.psi2).max(T::one());
    let probe = |t: T, x: T, y: T, z: T| -> T {
        let s = field.sample(&SpacetimePoint::new(t, x, y, z));
        let mut m = T::zero();
        for i in 0..3 {
            m = m.max(s.e[i].abs()).max(s.b[i].abs());
        }
        m
    };
    // peak scale: field at one ring point near closest approach
    let mut peak = T::zero();
    for k in 0..8 {
        let t = T::of_usize(k) * duration * T::of(0.25) - duration;
        peak = peak.max(probe(t, ring.radius, T::zero(), ring.z_plane));
    }
    let mut half_span = T::of(10.0) * duration;
    let limit = T::of(1e6);
    while half_span < limit {
        let tail = probe(half_span, ring.radius, T::zero(), ring.z_plane)
            .max(probe(-half_span, ring.radius, T::zero(), ring.z_plane));
        if tail <= falloff * peak {
            break;
        }
        half_span = half_span * T::of(2.0);
    }
    (-half_span, half_span)
}

/// Integrate a whole ring through a pulse; particles run in parallel and the
/// result order matches the ensemble order.
pub fn run_ring<T: Real>(
    field: &PulseField<T>,
    ring: &RingConfig<T>,
    sign: ChargeSign,
    t_end: T,
    sample_times: &[T],
    opts: &TrajectoryOpts<T>,
) -> Result<Vec<Trajectory<T>>, DynamicsError> {
    let states = ring_ensemble(ring);
    states
        .par_iter()
        .map(|s| {
            integrate_trajectory(
                s,
                |p| field.sample(p),
                sign,
                t_end,
                sample_times,
                opts,
            )
        })
        .collect()
}

/// CSV serialization of a trajectory:
/// `lab_time,x,y,z,vx,vy,vz,gamma` with coordinate velocity `v = V_i / gamma`.
pub fn trajectory_to_csv<T: Real>(traj: &Trajectory<T>) -> String {
    let mut out = String::from("lab_time,x,y,z,vx,vy,vz,gamma\n");
    for s in &traj.samples {
        let g = s.state.velocity[0];
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            s.lab_time,
            s.state.position[1],
            s.state.position[2],
            s.state.position[3],
            s.state.velocity[1] / g,
            s.state.velocity[2] / g,
            s.state.velocity[3] / g,
            g
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::float::C;
    use crate::geometry::cmat4_zero;

    fn uniform_bz(b: f64) -> EMFieldSample<f64> {
        EMFieldSample::from_real_vectors([0.0; 3], [0.0, 0.0, b])
    }

    #[test]
    fn zero_field_gives_zero_acceleration() {
        let state = ParticleState::at_rest(0.0, 1.0, 2.0, 3.0);
        let sample = EMFieldSample::from_real_vectors([0.0; 3], [0.0; 3]);
        let a = lorentz_acceleration(&state, &sample, ChargeSign::Positive);
        assert_eq!(a, [0.0; 4]);
    }

    #[test]
    fn acceleration_is_orthogonal_to_velocity() {
        // random-ish on-shell states against a fixed antisymmetric tensor
        let mut f = cmat4_zero::<f64>();
        let entries = [
            (0, 1, 0.3), (0, 2, -1.1), (0, 3, 0.7),
            (1, 2, 0.9), (1, 3, -0.2), (2, 3, 1.4),
        ];
        for (mu, nu, v) in entries {
            f[mu][nu] = C::new(v, 0.0);
            f[nu][mu] = C::new(-v, 0.0);
        }
        let sample = EMFieldSample::from_tensor(f);
        let mut x = 0.123f64;
        for _ in 0..1000 {
            // cheap deterministic pseudo-random 3-velocity
            x = (x * 9301.0 + 49297.0) % 233280.0;
            let v1 = x / 233280.0 * 0.9 - 0.45;
            x = (x * 9301.0 + 49297.0) % 233280.0;
            let v2 = x / 233280.0 * 0.9 - 0.45;
            x = (x * 9301.0 + 49297.0) % 233280.0;
            let v3 = x / 233280.0 * 0.9 - 0.45;
            let state = ParticleState::with_velocity(0.0, [0.0; 3], [v1, v2, v3]);
            let a = lorentz_acceleration(&state, &sample, ChargeSign::Negative);
            let mut adotv = -a[0] * state.velocity[0];
            for i in 1..4 {
                adotv += a[i] * state.velocity[i];
            }
            assert!(adotv.abs() < 1e-13, "a.V = {adotv}");
        }
    }

    #[test]
    fn straight_line_without_field() {
        let initial = ParticleState::with_velocity(0.0, [1.0, -2.0, 0.5], [0.2, 0.1, -0.3]);
        let sample_times: Vec<f64> = (1..=10).map(|k| k as f64).collect();
        let traj = integrate_trajectory(
            &initial,
            |_| EMFieldSample::from_real_vectors([0.0; 3], [0.0; 3]),
            ChargeSign::Positive,
            10.0,
            &sample_times,
            &TrajectoryOpts::default(),
        )
        .unwrap();
        // xi(tau) = xi(0) + V tau, so position grows linearly in lab time
        for s in &traj.samples {
            let dt = s.lab_time;
            for i in 0..3 {
                let expect = initial.position[1 + i]
                    + initial.velocity[1 + i] / initial.velocity[0] * dt;
                assert!((s.state.position[1 + i] - expect).abs() < 1e-10);
            }
        }
        assert!(traj.stats.max_shell_defect < 1e-12);
    }

    #[test]
    fn gyromotion_radius_matches_analytic() {
        // uniform B_z: radius = V_perp / B, proper-period 2 pi / B
        let b = 0.8f64;
        let vperp = 0.6f64;
        let gamma = 1.0 / (1.0f64 - vperp * vperp).sqrt();
        let radius = gamma * vperp / b;
        let initial = ParticleState::with_velocity(0.0, [radius, 0.0, 0.0], [0.0, vperp, 0.0]);
        let lab_period = 2.0 * std::f64::consts::PI * gamma / b;
        let t_end = 10.0 * lab_period;
        let sample_times: Vec<f64> = (0..100).map(|k| t_end * (k as f64) / 100.0).collect();
        let opts = TrajectoryOpts { rtol: 1e-11, atol: 1e-14, ..Default::default() };
        // negative charge so the center of gyration is the origin
        let traj = integrate_trajectory(
            &initial,
            |_| uniform_bz(b),
            ChargeSign::Negative,
            t_end,
            &sample_times,
            &opts,
        )
        .unwrap();
        for s in &traj.samples {
            let r = (s.state.position[1].powi(2) + s.state.position[2].powi(2)).sqrt();
            assert!(
                (r - radius).abs() <= 1e-6 * radius,
                "radius {r} vs {radius} at t = {}",
                s.lab_time
            );
        }
        assert!(traj.stats.max_shell_defect <= 1e-8);
    }

    #[test]
    fn ring_of_four_at_cardinal_angles() {
        let ring = RingConfig::at_rest(4, 1.0, 0.0, 0.0);
        let states = ring_ensemble(&ring);
        assert_eq!(states.len(), 4);
        let expect = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]];
        for (s, e) in states.iter().zip(expect.iter()) {
            assert!((s.position[1] - e[0]).abs() < 1e-15);
            assert!((s.position[2] - e[1]).abs() < 1e-15);
            assert_eq!(s.shell_defect(), 0.0);
        }
    }

    #[test]
    fn ring_of_twelve_matches_hand_built() {
        let ring = RingConfig::at_rest(12, 2.5, -1.0, -5.0);
        let states = ring_ensemble(&ring);
        assert_eq!(states.len(), 12);
        for (k, s) in states.iter().enumerate() {
            let theta = 2.0 * std::f64::consts::PI * (k as f64) / 12.0;
            assert!((s.position[1] - 2.5 * theta.cos()).abs() < 1e-14);
            assert!((s.position[2] - 2.5 * theta.sin()).abs() < 1e-14);
            assert_eq!(s.position[3], -1.0);
            assert_eq!(s.position[0], -5.0);
            assert_eq!(s.velocity, [1.0, 0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn rest_particle_trace_is_zero() {
        let initial = ParticleState::at_rest(0.0, 0.3, 0.0, 0.0);
        let traj = integrate_trajectory(
            &initial,
            |_| EMFieldSample::from_real_vectors([0.0; 3], [0.0; 3]),
            ChargeSign::Positive,
            5.0,
            &[1.0, 2.0, 3.0],
            &TrajectoryOpts::default(),
        )
        .unwrap();
        for (_, ke) in kinetic_energy_trace(&traj) {
            assert!(ke.abs() < 1e-12);
        }
        assert_eq!(traj.delta_angular_momentum_z(), 0.0);
    }

    #[test]
    fn gamma_from_velocity_identity() {
        let b = 0.5f64;
        let initial = ParticleState::with_velocity(0.0, [1.0, 0.0, 0.0], [0.0, 0.4, 0.2]);
        let traj = integrate_trajectory(
            &initial,
            |_| uniform_bz(b),
            ChargeSign::Negative,
            20.0,
            &[5.0, 10.0, 15.0],
            &TrajectoryOpts { rtol: 1e-11, atol: 1e-14, ..Default::default() },
        )
        .unwrap();
        for s in &traj.samples {
            let g = s.state.velocity[0];
            let speed2 = (1..4)
                .map(|i| (s.state.velocity[i] / g).powi(2))
                .sum::<f64>();
            let g_from_speed = 1.0 / (1.0 - speed2).sqrt();
            assert!((g - g_from_speed).abs() < 1e-10 * g);
        }
    }
}
