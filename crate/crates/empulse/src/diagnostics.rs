//! Energy accounting and pulse characterization.
//!
//! Everything here works in the reduced units of the field modules
//! (`eps0 = mu0 = c = 1`), so the energy density is `rho = (e.e + b.b)/2` and
//! the axial Poynting component is `(e x b)_z`. Total energy is computed two
//! independent ways:
//!
//! * through a constant-z plane over all time (time-integrated flux), and
//! * over all space at a fixed time (volume integral),
//!
//! which agree up to the quadrature estimate plus the (tiny, physical)
//! fraction of energy that counter-propagates. Characterization tracks the
//! dominant maximum of the transverse-integrated energy profile, measures its
//! range, width and speed, and converts to MKS units once a pulse duration in
//! picoseconds is chosen.

use serde::{Deserialize, Serialize};
use std::cell::Cell;
use thiserror::Error;

use crate::chiral::{EMFieldSample, PulseField};
use crate::float::Real;
use crate::geometry::SpacetimePoint;
use crate::quad::{
    integrate_full_line, integrate_half_line, periodic_trapezoid, QuadOpts,
};

/// Speed of light in vacuum, metres per second.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Electromagnetic energy density `rho = (e.e + b.b) / 2` (reduced units).
pub fn energy_density<T: Real>(sample: &EMFieldSample<T>) -> T {
    let e = &sample.e;
    let b = &sample.b;
    let half = T::of(0.5);
    half * (e[0] * e[0] + e[1] * e[1] + e[2] * e[2] + b[0] * b[0] + b[1] * b[1] + b[2] * b[2])
}

/// Axial component of the Poynting vector `(e x b)_z`.
pub fn poynting_z<T: Real>(sample: &EMFieldSample<T>) -> T {
    sample.e[0] * sample.b[1] - sample.e[1] * sample.b[0]
}

/// Quadrature budgets for the nested energy integrals.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QuadBudget<T> {
    /// Relative tolerance of the outermost integral.
    pub rel_tol: T,
    /// Evaluation cap per one-dimensional pass.
    pub max_evals: usize,
}

impl<T: Real> Default for QuadBudget<T> {
    fn default() -> Self {
        Self { rel_tol: T::of(1e-7), max_evals: 60_000 }
    }
}

impl<T: Real> QuadBudget<T> {
    fn outer(&self) -> QuadOpts<T> {
        QuadOpts { rel_tol: self.rel_tol, abs_tol: T::zero(), max_evals: self.max_evals }
    }

    /// Inner levels run two orders tighter so the outer estimate dominates.
    fn inner(&self) -> QuadOpts<T> {
        QuadOpts {
            rel_tol: self.rel_tol * T::of(1e-2),
            abs_tol: T::zero(),
            max_evals: self.max_evals,
        }
    }

    fn theta(&self) -> QuadOpts<T> {
        QuadOpts {
            rel_tol: self.rel_tol * T::of(1e-3),
            abs_tol: T::zero(),
            max_evals: 8192,
        }
    }
}

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("quadrature for {stage} did not converge within budget: value {value} error {error}")]
    Quadrature { stage: &'static str, value: f64, error: f64 },
    #[error("characterization failed at stage `{stage}`: {detail}")]
    Characterization { stage: &'static str, detail: String },
}

/// An integral value with its accumulated error estimate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Integral<T> {
    pub value: T,
    pub error: T,
    pub evals: usize,
}

/// Integrate `rho` over the transverse plane at `(t, z)`:
/// `int_0^inf R dR int_0^2pi d theta rho`.
pub fn transverse_energy<T: Real>(
    field: &PulseField<T>,
    t: T,
    z: T,
    budget: &QuadBudget<T>,
) -> Result<Integral<T>, DiagnosticsError> {
    let inner_err = Cell::new(T::zero());
    let evals = Cell::new(0usize);
    let radial = integrate_half_line(
        |r| {
            let ring = periodic_trapezoid(
                |theta| {
                    let p = SpacetimePoint::from_cylindrical(t, r, theta, z);
                    energy_density(&field.sample(&p))
                },
                &budget.theta(),
            );
            let ring = match ring {
                Ok(res) => res,
                Err(e) => e.partial(),
            };
            inner_err.set(inner_err.get().max(relative_of(&ring)));
            evals.set(evals.get() + ring.evals);
            r * ring.value
        },
        &budget.inner(),
    );
    finish("transverse energy", radial, inner_err.get(), evals.get())
}

fn relative_of<T: Real>(r: &crate::quad::QuadResult<T>) -> T {
    if r.value.abs() > T::zero() {
        r.error / r.value.abs()
    } else {
        T::zero()
    }
}

fn finish<T: Real>(
    stage: &'static str,
    result: Result<crate::quad::QuadResult<T>, crate::quad::QuadError<T>>,
    worst_inner_rel: T,
    inner_evals: usize,
) -> Result<Integral<T>, DiagnosticsError> {
    match result {
        Ok(r) => Ok(Integral {
            value: r.value,
            error: r.error + worst_inner_rel * r.value.abs(),
            evals: r.evals + inner_evals,
        }),
        Err(e) => {
            let p = e.partial();
            Err(DiagnosticsError::Quadrature {
                stage,
                value: p.value.to_f64().unwrap_or(f64::NAN),
                error: p.error.to_f64().unwrap_or(f64::NAN),
            })
        }
    }
}

/// Total energy through the plane `z = z0`, integrated over all time; the
/// surface is oriented away from the origin (toward the half-space the pulse
/// propagates into), so the result is positive when `z0` lies on the
/// propagation side.
pub fn poynting_flux_energy<T: Real>(
    field: &PulseField<T>,
    z0: T,
    budget: &QuadBudget<T>,
) -> Result<Integral<T>, DiagnosticsError> {
    let orientation = if z0 < T::zero() { -T::one() } else { T::one() };
    let inner_err = Cell::new(T::zero());
    let evals = Cell::new(0usize);
    let outer = integrate_full_line(
        |t| {
            let radial = integrate_half_line(
                |r| {
                    let ring = periodic_trapezoid(
                        |theta| {
                            let p = SpacetimePoint::from_cylindrical(t, r, theta, z0);
                            poynting_z(&field.sample(&p))
                        },
                        &budget.theta(),
                    );
                    let ring = match ring {
                        Ok(res) => res,
                        Err(e) => e.partial(),
                    };
                    evals.set(evals.get() + ring.evals);
                    r * ring.value
                },
                &budget.inner(),
            );
            let radial = match radial {
                Ok(res) => res,
                Err(e) => e.partial(),
            };
            inner_err.set(inner_err.get().max(relative_of(&radial)));
            radial.value
        },
        &budget.outer(),
    );
    let integral = finish("poynting flux", outer, inner_err.get(), evals.get())?;
    Ok(Integral {
        value: orientation * integral.value,
        error: integral.error,
        evals: integral.evals,
    })
}

/// Total energy over all space at fixed time `t`.
pub fn volume_energy<T: Real>(
    field: &PulseField<T>,
    t: T,
    budget: &QuadBudget<T>,
) -> Result<Integral<T>, DiagnosticsError> {
    let inner_err = Cell::new(T::zero());
    let evals = Cell::new(0usize);
    let outer = integrate_full_line(
        |z| {
            let tr = transverse_energy(field, t, z, budget);
            match tr {
                Ok(r) => {
                    if r.value.abs() > T::zero() {
                        inner_err.set(inner_err.get().max(r.error / r.value.abs()));
                    }
                    evals.set(evals.get() + r.evals);
                    r.value
                }
                Err(_) => T::zero(),
            }
        },
        &budget.outer(),
    );
    finish("volume energy", outer, inner_err.get(), evals.get())
}

/// Transverse-integrated axial energy profile at the given axial stations.
pub fn axial_energy_profile<T: Real>(
    field: &PulseField<T>,
    t: T,
    z_grid: &[T],
    budget: &QuadBudget<T>,
) -> Result<Vec<(T, T)>, DiagnosticsError> {
    z_grid
        .iter()
        .map(|&z| transverse_energy(field, t, z, budget).map(|r| (z, r.value)))
        .collect()
}

/// Flux/volume energy pair with the combined quadrature error estimate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyReport<T> {
    /// Time-integrated Poynting flux through the reference plane.
    pub j_flux: T,
    /// Volume energy at the reference time.
    pub e_volume: T,
    /// `Gamma` with `J = ell0 * Gamma` in MKS; numerically equal to `j_flux`
    /// because the length-scale square was absorbed into the reduced units.
    pub gamma_factor: T,
    /// Combined quadrature error estimate for the two integrals.
    pub quadrature_error: T,
}

/// Compute flux (through `z = z0`) and volume (at time `t`) energies.
pub fn energy_report<T: Real>(
    field: &PulseField<T>,
    z0: T,
    t: T,
    budget: &QuadBudget<T>,
) -> Result<EnergyReport<T>, DiagnosticsError> {
    let flux = poynting_flux_energy(field, z0, budget)?;
    let volume = volume_energy(field, t, budget)?;
    Ok(EnergyReport {
        j_flux: flux.value,
        e_volume: volume.value,
        gamma_factor: flux.value,
        quadrature_error: flux.error + volume.error,
    })
}

/// MKS quantities derived from the dimensionless characteristics once the
/// pulse duration is pinned to `n_picoseconds`:
///
/// `ell0 = c beta N / Z_w * 1e-12 m`, `J = Gamma beta c N / Z_w * 1e-12 J`,
/// `z_rg = Xi beta c N Z_rg / Z_w * 1e-12 m`, `z_w = Xi c beta N * 1e-12 m`,
/// `r_s = c beta N Phi R_s / Z_w * 1e-12 m`, `t0 = ell0 T0 / c = N * 1e-12 s`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MksCharacteristics<T> {
    pub n_picoseconds: T,
    pub ell0_m: T,
    pub energy_joules: T,
    pub z_rg_m: T,
    pub z_w_m: T,
    pub spot_radius_m: T,
    pub duration_s: T,
    /// Axial speed `v = Xi beta c` in m/s (equals `beta c` when `Xi = 1`).
    pub axial_speed_m_per_s: T,
}

/// Dimensionless pulse characteristics plus their MKS image.
#[derive(Debug, Clone, Serialize)]
pub struct PulseCharacteristics<T> {
    /// Half-height propagation distance of the dominant maximum.
    pub z_rg: T,
    /// Time at which the tracked peak has half its initial height.
    pub t1: T,
    /// Axial width at half height, measured at `t1`.
    pub z_w: T,
    /// Dimensionless axial speed `|Z_rg| / T1`.
    pub beta: T,
    /// Duration `T0 = Z_w / beta`.
    pub t0: T,
    /// Direction of the dominant maximum along z: `+1` or `-1`.
    pub direction: i8,
    /// Mean radius of the principal maxima of the axial power density at the
    /// spot station, and the spread of the per-azimuth radii.
    pub spot_radius: T,
    pub spot_radius_spread: T,
    /// Axial station (measured along the propagation direction) of the spot.
    pub spot_z0: T,
    /// Relative width change between `t = 0` and `t = t1`.
    pub deformation: T,
    /// Set when the peak deforms by more than 20% over the tracked interval.
    pub out_of_regime: bool,
    /// Dimensionless flux energy (`Gamma` factor).
    pub gamma_factor: T,
    pub mks: MksCharacteristics<T>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CharacterizeOpts<T> {
    /// Pulse duration in picoseconds used for the MKS conversion.
    pub n_picoseconds: T,
    /// Axial station for the spot-size measurement, along the propagation
    /// direction; defaults to half the measured range.
    pub spot_z0: Option<T>,
    /// Azimuthal stations for the spot-radius search.
    pub spot_angles: usize,
    pub budget: QuadBudget<T>,
}

impl<T: Real> Default for CharacterizeOpts<T> {
    fn default() -> Self {
        Self {
            n_picoseconds: T::one(),
            spot_z0: None,
            spot_angles: 32,
            budget: QuadBudget::default(),
        }
    }
}

/// Golden-section maximization of `f` on `[a, b]` (unimodal bracket).
fn golden_max<T: Real, F: Fn(T) -> T>(f: F, mut a: T, mut b: T, tol: T) -> (T, T) {
    let inv_phi = T::of(0.618_033_988_749_894_8);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc > fd { (c, fc) } else { (d, fd) }
}

/// Bisection for `f(x) = target` given a bracketing pair `f(lo) >= target`,
/// `f(hi) < target`.
fn bisect_to_target<T: Real, F: Fn(T) -> T>(f: F, mut lo: T, mut hi: T, target: T, tol: T) -> T {
    for _ in 0..200 {
        let mid = (lo + hi) * T::of(0.5);
        if (hi - lo).abs() <= tol {
            return mid;
        }
        if f(mid) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * T::of(0.5)
}

struct PeakTracker<'a, T: Real> {
    field: &'a PulseField<T>,
    budget: QuadBudget<T>,
}

impl<'a, T: Real> PeakTracker<'a, T> {
    fn profile(&self, t: T, z: T) -> T {
        transverse_energy(self.field, t, z, &self.budget)
            .map(|r| r.value)
            .unwrap_or(T::zero())
    }

    /// Refine the peak near `z_guess` within a +-window bracket.
    fn refine(&self, t: T, z_guess: T, window: T) -> (T, T) {
        let n = 17;
        let mut best_z = z_guess;
        let mut best_v = T::neg_infinity();
        for i in 0..n {
            let z = z_guess - window
                + (window + window) * T::of_usize(i) / T::of_usize(n - 1);
            let v = self.profile(t, z);
            if v > best_v {
                best_v = v;
                best_z = z;
            }
        }
        let step = (window + window) / T::of_usize(n - 1);
        golden_max(|z| self.profile(t, z), best_z - step, best_z + step, T::of(1e-9) * window.max(T::one()))
    }
}

/// Track, measure and convert: the full characterization pipeline.
///
/// Stages: (1) locate the `t = 0` peak height of the transverse-integrated
/// profile, (2) follow the dominant maximum in time until its height halves,
/// (3) measure the half-height width at `t1` (nearest crossings around the
/// tracked peak), (4) locate the spot radius by per-azimuth maximization of
/// the axial power density, (5) compute the flux energy and the MKS set.
pub fn characterize<T: Real>(
    field: &PulseField<T>,
    opts: &CharacterizeOpts<T>,
) -> Result<PulseCharacteristics<T>, DiagnosticsError> {
    let params = *field.params();
    let tracker = PeakTracker { field, budget: opts.budget };
    let psi_scale = (params.psi1 * params.psi2).sqrt();
    let width_guess = params.psi1.min(params.psi2);

    // stage 1: t = 0 reference peak (the profile is symmetric in z at t = 0,
    // so the two humps tie; either gives the reference height)
    let span0 = T::of(2.0) + T::of(2.0) * psi_scale;
    let n0 = 257;
    let mut best_z = T::zero();
    let mut best_v = T::neg_infinity();
    for i in 0..n0 {
        let z = -span0 + (span0 + span0) * T::of_usize(i) / T::of_usize(n0 - 1);
        let v = tracker.profile(T::zero(), z);
        if v > best_v {
            best_v = v;
            best_z = z;
        }
    }
    if !(best_v > T::zero()) {
        return Err(DiagnosticsError::Characterization {
            stage: "reference peak",
            detail: "transverse energy profile vanished on the search grid".into(),
        });
    }
    let grid_step = (span0 + span0) / T::of_usize(n0 - 1);
    let (z_ref, h_ref) = golden_max(
        |z| tracker.profile(T::zero(), z),
        best_z - grid_step,
        best_z + grid_step,
        T::of(1e-9) * span0,
    );
    let target = h_ref * T::of(0.5);

    // stage 2: march the dominant maximum until it halves
    let t_step = T::of(0.5).max(psi_scale * T::of(0.5));
    let t_max = T::of(40.0) * (params.psi1 + params.psi2);
    // seed: at t = t_step the symmetry is already broken, take the global max
    let seed_span = z_ref.abs() + t_step * T::of(1.5);
    let mut t_prev = t_step;
    let (mut z_prev, mut h_prev) = {
        let n = 129;
        let mut bz = T::zero();
        let mut bv = T::neg_infinity();
        for i in 0..n {
            let z = -seed_span + (seed_span + seed_span) * T::of_usize(i) / T::of_usize(n - 1);
            let v = tracker.profile(t_step, z);
            if v > bv {
                bv = v;
                bz = z;
            }
        }
        let step = (seed_span + seed_span) / T::of_usize(n - 1);
        golden_max(
            |z| tracker.profile(t_step, z),
            bz - step,
            bz + step,
            T::of(1e-9) * seed_span,
        )
    };
    let mut bracket = None;
    let mut t = t_prev;
    while t < t_max {
        t = t + t_step;
        let drift = t - t_prev;
        let (z_pk, h_pk) = tracker.refine(t, z_prev + (z_prev.signum() * drift), drift * T::of(1.2));
        if h_pk < target {
            bracket = Some((t_prev, z_prev, t, z_pk));
            break;
        }
        t_prev = t;
        z_prev = z_pk;
        h_prev = h_pk;
    }
    let _ = h_prev;
    let (t_lo, z_lo, t_hi, _z_hi) = bracket.ok_or_else(|| DiagnosticsError::Characterization {
        stage: "half-height bracket",
        detail: format!(
            "tracked peak stayed above half of the reference height up to T = {}",
            t_max
        ),
    })?;

    // bisect in time on the tracked peak height
    let peak_at = |time: T| -> (T, T) {
        let drift = (time - t_lo).abs() + t_step;
        tracker.refine(time, z_lo + z_lo.signum() * (time - t_lo), drift * T::of(1.2))
    };
    let mut lo = t_lo;
    let mut hi = t_hi;
    let t_tol = T::of(1e-8) * t_hi.max(T::one());
    for _ in 0..120 {
        if (hi - lo).abs() <= t_tol {
            break;
        }
        let mid = (lo + hi) * T::of(0.5);
        let (_, h_mid) = peak_at(mid);
        if h_mid >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t1 = (lo + hi) * T::of(0.5);
    let (z_rg_signed, _) = peak_at(t1);
    let direction: i8 = if z_rg_signed >= T::zero() { 1 } else { -1 };
    let z_rg = z_rg_signed.abs();
    if !(t1 > T::zero()) {
        return Err(DiagnosticsError::Characterization {
            stage: "half-height time",
            detail: "bisection collapsed to T1 = 0".into(),
        });
    }
    let beta = z_rg / t1;

    // stage 3: widths by nearest half-height crossings around the peak
    let width_at = |time: T, z_peak: T, h_peak: T| -> Result<T, DiagnosticsError> {
        let tgt = h_peak * T::of(0.5);
        let mut half = [T::zero(); 2];
        for (slot, side) in [(0usize, -T::one()), (1usize, T::one())] {
            let mut step = (width_guess * T::of(0.1)).max(T::of(0.02));
            let mut inner = z_peak;
            let mut outer;
            loop {
                outer = inner + side * step;
                let v = tracker.profile(time, outer);
                if v < tgt {
                    break;
                }
                inner = outer;
                step = step * T::of(1.5);
                if (outer - z_peak).abs() > T::of(100.0) * (T::one() + psi_scale) {
                    return Err(DiagnosticsError::Characterization {
                        stage: "half-height width",
                        detail: "no half-height crossing found near the peak".into(),
                    });
                }
            }
            // nearest crossing between inner (>= target) and outer (< target)
            let crossing = bisect_to_target(
                |z| tracker.profile(time, z),
                inner,
                outer,
                tgt,
                T::of(1e-8) * (T::one() + z_peak.abs()),
            );
            half[slot] = crossing;
        }
        Ok((half[1] - half[0]).abs())
    };

    let (z_pk1, h_pk1) = peak_at(t1);
    let z_w = width_at(t1, z_pk1, h_pk1)?;
    // reference width at t = 0 on the same side as the propagation direction
    let z_ref_dir = z_ref.abs() * T::of(direction as f64);
    let (z_pk0, h_pk0) = golden_max(
        |z| tracker.profile(T::zero(), z),
        z_ref_dir - grid_step,
        z_ref_dir + grid_step,
        T::of(1e-9) * span0,
    );
    let z_w0 = width_at(T::zero(), z_pk0, h_pk0)?;
    let deformation = ((z_w - z_w0) / z_w0).abs();
    let out_of_regime = deformation > T::of(0.2);

    let t0 = z_w / beta;

    // stage 4: spot radius at the requested station
    let spot_z0 = opts.spot_z0.unwrap_or(z_rg * T::of(0.5));
    let spot_time = spot_z0 / beta;
    let z_station = spot_z0 * T::of(direction as f64);
    let dir_sign = T::of(direction as f64);
    let power = |r: T, theta: T| -> T {
        let p = SpacetimePoint::from_cylindrical(spot_time, r, theta, z_station);
        dir_sign * r * poynting_z(&field.sample(&p))
    };
    let r_max = T::of(4.0) * (T::one() + (psi_scale * psi_scale + spot_z0 * spot_z0).sqrt());
    let mut radii = Vec::with_capacity(opts.spot_angles);
    for k in 0..opts.spot_angles {
        let theta = T::of(std::f64::consts::TAU) * T::of_usize(k) / T::of_usize(opts.spot_angles);
        // coarse bracket then golden refinement
        let n = 96;
        let mut bz = r_max * T::of(0.5);
        let mut bv = T::neg_infinity();
        for i in 1..=n {
            let r = r_max * T::of_usize(i) / T::of_usize(n);
            let v = power(r, theta);
            if v > bv {
                bv = v;
                bz = r;
            }
        }
        let step = r_max / T::of_usize(n);
        let (r_star, _) = golden_max(
            |r| power(r.max(T::zero()), theta),
            (bz - step).max(T::zero()),
            bz + step,
            T::of(1e-9) * r_max,
        );
        radii.push(r_star);
    }
    let mut r_mean = T::zero();
    let mut r_min = radii[0];
    let mut r_maxv = radii[0];
    for &r in &radii {
        r_mean = r_mean + r;
        r_min = r_min.min(r);
        r_maxv = r_maxv.max(r);
    }
    r_mean = r_mean / T::of_usize(radii.len());

    // stage 5: flux energy on the propagation side and the MKS set
    let flux_plane = dir_sign * T::one().max(z_rg * T::of(0.5));
    let gamma_factor = poynting_flux_energy(field, flux_plane, &opts.budget)?.value;

    let n_ps = opts.n_picoseconds;
    let c = T::of(SPEED_OF_LIGHT);
    let pico = T::of(1e-12);
    let ell0_m = c * beta * n_ps / z_w * pico;
    let energy_joules = gamma_factor * beta * c * n_ps / z_w * pico;
    let z_rg_m = params.xi * beta * c * n_ps * z_rg / z_w * pico;
    let z_w_m = params.xi * c * beta * n_ps * pico;
    let spot_radius_m = c * beta * n_ps * params.phi * r_mean / z_w * pico;
    let duration_s = ell0_m * t0 / c;
    let axial_speed = params.xi * beta * c;

    Ok(PulseCharacteristics {
        z_rg,
        t1,
        z_w,
        beta,
        t0,
        direction,
        spot_radius: r_mean,
        spot_radius_spread: r_maxv - r_min,
        spot_z0,
        deformation,
        out_of_regime,
        gamma_factor,
        mks: MksCharacteristics {
            n_picoseconds: n_ps,
            ell0_m,
            energy_joules,
            z_rg_m,
            z_w_m,
            spot_radius_m,
            duration_s,
            axial_speed_m_per_s: axial_speed,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chiral::{ChiralMode, ModeFamily, SuperpositionSpec};
    use crate::scalar::PulseParams;

    fn ce0_field(lambda: f64, psi1: f64, psi2: f64) -> PulseField<f64> {
        let params = PulseParams::new(lambda, psi1, psi2).unwrap();
        let mode = ChiralMode::new(ModeFamily::CE, 0).unwrap();
        PulseField::new(params, SuperpositionSpec::single(mode)).unwrap()
    }

    #[test]
    fn energy_density_zero_field() {
        let s = EMFieldSample::from_real_vectors([0.0; 3], [0.0; 3]);
        assert_eq!(energy_density(&s), 0.0);
    }

    #[test]
    fn energy_density_quadruples_with_doubled_lambda() {
        let f1 = ce0_field(1.0, 4.0, 0.5);
        let f2 = ce0_field(2.0, 4.0, 0.5);
        let p = SpacetimePoint::new(0.3, 1.1, -0.2, 0.7);
        let r1 = energy_density(&f1.sample(&p));
        let r2 = energy_density(&f2.sample(&p));
        assert!((r2 / r1 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn mks_arithmetic_identity() {
        // N = 1, beta = 1, Z_w = 1 -> ell0 = c * 1e-12 m
        let ell0 = SPEED_OF_LIGHT * 1.0 * 1.0 / 1.0 * 1e-12;
        assert!((ell0 - 2.99792458e-4).abs() < 1e-19);
    }

    #[test]
    fn transverse_energy_positive_and_finite() {
        let field = ce0_field(1.0, 1.0, 10.0);
        let r = transverse_energy(&field, 0.0, 0.5, &QuadBudget::default()).unwrap();
        assert!(r.value > 0.0);
        assert!(r.error < 1e-4 * r.value);
    }

    #[test]
    fn golden_finds_parabola_vertex() {
        let (x, v) = golden_max(|x: f64| 3.0 - (x - 1.25) * (x - 1.25), -4.0, 5.0, 1e-10);
        assert!((x - 1.25).abs() < 1e-8);
        assert!((v - 3.0).abs() < 1e-12);
    }
}
