//! Quantized bi-qutrit pulse states and their free unitary evolution.
//!
//! States live in `L2(R^3, C^3) (x) L2(R^3, C^3)`: each tensor factor is a
//! spatial momentum amplitude times a 3-component internal vector. The free
//! Hamiltonian is kinetic on each factor and the identity on the internal
//! indices, so evolution multiplies each momentum amplitude by
//! `exp(-i E(p) t / hbar)` and never touches the internal qutrit content.
//!
//! Two interchangeable spatial representations:
//!
//! * [`GaussianPacket`] - analytic Gaussians with a quadratic chirp, closed
//!   under nonrelativistic evolution; overlaps, moments and widths all have
//!   closed forms, which makes this the oracle representation;
//! * [`MomentumGrid`] - uniform momentum grid supporting arbitrary packets
//!   and the relativistic dispersion, with an aliasing guard.
//!
//! Dispersion: `E = |p|^2 / (2 mu)` or, relativistically (in `c = 1` units),
//! `E = sqrt(|p|^2 + mu^2) - mu`, evaluated in the cancellation-free form
//! `|p|^2 / (sqrt(|p|^2 + mu^2) + mu)`.
//!
//! Interaction with optical media is out of scope; the
//! [`InteractionPotential`] trait is the declared extension point for a
//! Hermitian 3x3 position-dependent term.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::float::{c64, czero, C, Real};

/// Kinetic energy of one factor. Relativistic form uses `c = 1` units.
pub fn dispersion<T: Real>(p: [T; 3], mu: T, relativistic: bool) -> T {
    let p2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
    if relativistic {
        p2 / ((p2 + mu * mu).sqrt() + mu)
    } else {
        p2 / (T::of(2.0) * mu)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("evolution parameter `{name}` must be strictly positive, got {value}")]
    BadParameter { name: &'static str, value: f64 },
    #[error("relativistic dispersion requires the momentum-grid representation; convert the Gaussian packet with `to_grid` first")]
    NeedsGrid,
    #[error("momentum grid too coarse: the evolution phase changes by {phase:.3} > pi between adjacent nodes on axis {axis}; refine the grid or shorten the step")]
    GridAliasing { axis: usize, phase: f64 },
    #[error("grid representations must share the same axes for overlaps")]
    GridMismatch,
    #[error("state has zero norm")]
    ZeroNorm,
}

/// Evolution parameters: factor masses, action scale, dispersion choice, time.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EvolutionSpec<T> {
    pub mu1: T,
    pub mu2: T,
    pub hbar: T,
    pub relativistic: bool,
    pub t: T,
}

impl<T: Real> EvolutionSpec<T> {
    pub fn validate(&self) -> Result<(), QuantumError> {
        for (name, v) in [("mu1", self.mu1), ("mu2", self.mu2), ("hbar", self.hbar)] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(QuantumError::BadParameter {
                    name,
                    value: v.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(())
    }

    pub fn nonrelativistic(mu1: T, mu2: T, t: T) -> Self {
        Self { mu1, mu2, hbar: T::one(), relativistic: false, t }
    }
}

/// Analytic momentum-space Gaussian with quadratic chirp:
///
/// ```text
/// phi(p) = N * exp( -sum_j (p_j - p0_j)^2 (1/(4 sigma_j^2) + i c_j)
///                   - i p . x0 / hbar + i phase )
/// ```
///
/// `sigma` is the momentum-space standard deviation per axis. Free
/// nonrelativistic evolution maps this family to itself: the chirp absorbs
/// the quadratic phase, `x0` the group drift, `phase` the constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPacket<T> {
    pub center_p: [T; 3],
    pub sigma_p: [T; 3],
    pub center_x: [T; 3],
    pub chirp: [T; 3],
    pub phase: T,
}

impl<T: Real> GaussianPacket<T> {
    /// Unit-norm packet at rest in space with zero chirp.
    pub fn new(center_p: [T; 3], sigma_p: [T; 3]) -> Result<Self, QuantumError> {
        for &s in &sigma_p {
            if !(s > T::zero()) || !s.is_finite() {
                return Err(QuantumError::BadParameter {
                    name: "sigma_p",
                    value: s.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(Self {
            center_p,
            sigma_p,
            center_x: [T::zero(); 3],
            chirp: [T::zero(); 3],
            phase: T::zero(),
        })
    }

    pub fn with_position(mut self, x0: [T; 3]) -> Self {
        self.center_x = x0;
        self
    }

    /// Exact nonrelativistic free evolution for time `t`.
    fn evolved(&self, mu: T, hbar: T, t: T) -> Self {
        let mut out = *self;
        let half = T::of(0.5);
        let mut p0sq = T::zero();
        for j in 0..3 {
            out.chirp[j] = self.chirp[j] + half * t / (mu * hbar);
            out.center_x[j] = self.center_x[j] + self.center_p[j] * t / mu;
            p0sq = p0sq + self.center_p[j] * self.center_p[j];
        }
        out.phase = self.phase + half * t * p0sq / (mu * hbar);
        out
    }

    /// Position-space width (standard deviation) per axis:
    /// `Var x = hbar^2 |a|^2 / Re a` with `a = 1/(4 sigma^2) + i chirp`.
    pub fn position_sigma(&self, hbar: T) -> [T; 3] {
        let mut out = [T::zero(); 3];
        for j in 0..3 {
            let re = (T::of(4.0) * self.sigma_p[j] * self.sigma_p[j]).recip();
            let im = self.chirp[j];
            let var = hbar * hbar * (re * re + im * im) / re;
            out[j] = var.sqrt();
        }
        out
    }

    /// `<phi|phi'>` together with the first moments `<phi| p_j |phi'>`.
    fn overlap_with_moments(&self, other: &Self, hbar: T) -> (C<T>, [C<T>; 3]) {
        let mut overlap = c64::<T>(1.0, 0.0);
        let mut axis_ratio = [czero::<T>(); 3]; // B/(2A) per axis: the mean of p
        let mut axis_overlap = [czero::<T>(); 3];
        for j in 0..3 {
            let a_bar = C::new(
                (T::of(4.0) * self.sigma_p[j] * self.sigma_p[j]).recip(),
                -self.chirp[j],
            );
            let a_pri = C::new(
                (T::of(4.0) * other.sigma_p[j] * other.sigma_p[j]).recip(),
                other.chirp[j],
            );
            let n_bar = norm_factor(self.sigma_p[j]);
            let n_pri = norm_factor(other.sigma_p[j]);
            let p_bar = self.center_p[j];
            let p_pri = other.center_p[j];
            let big_a = a_bar + a_pri;
            let big_b = a_bar * C::new(T::of(2.0) * p_bar, T::zero())
                + a_pri * C::new(T::of(2.0) * p_pri, T::zero())
                + C::new(T::zero(), (self.center_x[j] - other.center_x[j]) / hbar);
            let big_c = -(a_bar * C::new(p_bar * p_bar, T::zero())
                + a_pri * C::new(p_pri * p_pri, T::zero()));
            // int exp(-A p^2 + B p + C) dp = sqrt(pi / A) exp(B^2 / 4A + C)
            let pi = C::new(T::of(std::f64::consts::PI), T::zero());
            let four = C::new(T::of(4.0), T::zero());
            let two = C::new(T::of(2.0), T::zero());
            let val = (pi / big_a).sqrt() * (big_b * big_b / (big_a * four) + big_c).exp();
            let val = val * C::new(n_bar * n_pri, T::zero());
            axis_overlap[j] = val;
            axis_ratio[j] = big_b / (big_a * two);
            overlap = overlap * val;
        }
        let phase = C::new(T::zero(), other.phase - self.phase).exp();
        overlap = overlap * phase;
        // <p_j> factorizes: the mean of the axis-j Gaussian times the overlap
        let mut moments = [czero::<T>(); 3];
        for j in 0..3 {
            moments[j] = overlap * axis_ratio[j];
        }
        (overlap, moments)
    }

    /// `<phi| x_j |phi'>` given the overlap machinery: `x = i hbar d/dp`.
    fn position_moment(&self, other: &Self, hbar: T, j: usize) -> C<T> {
        let (overlap, pmom) = self.overlap_with_moments(other, hbar);
        let a_pri = C::new(
            (T::of(4.0) * other.sigma_p[j] * other.sigma_p[j]).recip(),
            other.chirp[j],
        );
        // i hbar d phi'/dp_j = i hbar (-2 a'(p - p0') - i x0'/hbar) phi'
        let ihbar = C::new(T::zero(), hbar);
        let p0 = C::new(other.center_p[j], T::zero());
        let x0 = C::new(other.center_x[j], T::zero());
        let minus_2a = a_pri * C::new(-T::of(2.0), T::zero());
        ihbar * (minus_2a * (pmom[j] - p0 * overlap)) + x0 * overlap
    }

    /// Sample the packet amplitude at momentum `p`.
    pub fn amplitude(&self, p: [T; 3], hbar: T) -> C<T> {
        let mut exponent = C::new(T::zero(), self.phase);
        for j in 0..3 {
            let dp = p[j] - self.center_p[j];
            let a = C::new(
                (T::of(4.0) * self.sigma_p[j] * self.sigma_p[j]).recip(),
                self.chirp[j],
            );
            exponent = exponent - a * C::new(dp * dp, T::zero());
            exponent = exponent - C::new(T::zero(), p[j] * self.center_x[j] / hbar);
        }
        let mut norm = T::one();
        for j in 0..3 {
            norm = norm * norm_factor(self.sigma_p[j]);
        }
        exponent.exp() * C::new(norm, T::zero())
    }
}

/// 1D normalization `(2 pi sigma^2)^(-1/4)`.
fn norm_factor<T: Real>(sigma: T) -> T {
    (T::of(std::f64::consts::TAU) * sigma * sigma).powf(-T::of(0.25))
}

/// Uniform momentum grid: amplitudes at `p = origin + index * step` per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxes<T> {
    pub origin: [T; 3],
    pub step: [T; 3],
    pub shape: [usize; 3],
}

impl<T: Real> GridAxes<T> {
    pub fn node(&self, idx: [usize; 3]) -> [T; 3] {
        [
            self.origin[0] + self.step[0] * T::of_usize(idx[0]),
            self.origin[1] + self.step[1] * T::of_usize(idx[1]),
            self.origin[2] + self.step[2] * T::of_usize(idx[2]),
        ]
    }

    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1] * self.shape[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_volume(&self) -> T {
        self.step[0] * self.step[1] * self.step[2]
    }
}

/// Momentum-grid spatial amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumGrid<T> {
    pub axes: GridAxes<T>,
    /// Row-major amplitudes, axis 2 fastest.
    pub amps: Vec<C<T>>,
}

impl<T: Real> MomentumGrid<T> {
    /// Sample a Gaussian packet onto a grid.
    pub fn from_packet(packet: &GaussianPacket<T>, axes: GridAxes<T>, hbar: T) -> Self {
        let mut amps = Vec::with_capacity(axes.len());
        for i in 0..axes.shape[0] {
            for j in 0..axes.shape[1] {
                for k in 0..axes.shape[2] {
                    amps.push(packet.amplitude(axes.node([i, j, k]), hbar));
                }
            }
        }
        Self { axes, amps }
    }

    pub fn norm_sqr(&self) -> T {
        let cell = self.axes.cell_volume();
        self.amps.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr()) * cell
    }

    fn overlap(&self, other: &Self) -> Result<C<T>, QuantumError> {
        if self.axes != other.axes {
            return Err(QuantumError::GridMismatch);
        }
        let cell = self.axes.cell_volume();
        let mut acc = czero::<T>();
        for (a, b) in self.amps.iter().zip(other.amps.iter()) {
            acc = acc + a.conj() * *b;
        }
        Ok(acc * C::new(cell, T::zero()))
    }

    /// Apply `exp(-i E(p) t / hbar)`; errors out if the phase advances by more
    /// than pi between adjacent nodes anywhere on the grid.
    fn evolved(&self, mu: T, hbar: T, t: T, relativistic: bool) -> Result<Self, QuantumError> {
        // aliasing check along each axis at the extreme momenta
        for axis in 0..3 {
            let mut corner = self.axes.origin;
            for a in 0..3 {
                if a != axis {
                    corner[a] = self.axes.origin[a];
                }
            }
            let far = self.axes.origin[axis]
                + self.axes.step[axis] * T::of_usize(self.axes.shape[axis].saturating_sub(1));
            let mut pa = corner;
            pa[axis] = far;
            let mut pb = corner;
            pb[axis] = far - self.axes.step[axis];
            let de = (dispersion(pa, mu, relativistic) - dispersion(pb, mu, relativistic)).abs();
            let phase = de * t.abs() / hbar;
            if phase > T::of(std::f64::consts::PI) {
                return Err(QuantumError::GridAliasing {
                    axis,
                    phase: phase.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        let mut amps = Vec::with_capacity(self.amps.len());
        let mut idx = 0usize;
        for i in 0..self.axes.shape[0] {
            for j in 0..self.axes.shape[1] {
                for k in 0..self.axes.shape[2] {
                    let p = self.axes.node([i, j, k]);
                    let e = dispersion(p, mu, relativistic);
                    let rot = C::new(T::zero(), -e * t / hbar).exp();
                    amps.push(self.amps[idx] * rot);
                    idx += 1;
                }
            }
        }
        Ok(Self { axes: self.axes.clone(), amps })
    }

    /// Unnormalized cross moments `<self| p_j |other>` on matching grids.
    fn momentum_cross(&self, other: &Self) -> Result<[C<T>; 3], QuantumError> {
        if self.axes != other.axes {
            return Err(QuantumError::GridMismatch);
        }
        let cell = self.axes.cell_volume();
        let mut acc = [czero::<T>(); 3];
        let mut idx = 0usize;
        for i in 0..self.axes.shape[0] {
            for j in 0..self.axes.shape[1] {
                for k in 0..self.axes.shape[2] {
                    let w = self.amps[idx].conj() * other.amps[idx];
                    let p = self.axes.node([i, j, k]);
                    for a in 0..3 {
                        acc[a] = acc[a] + w * C::new(p[a] * cell, T::zero());
                    }
                    idx += 1;
                }
            }
        }
        Ok(acc)
    }

    /// Unnormalized `<self| x_j |other> = <self| i hbar d/dp_j |other>` by
    /// central differences on matching grids.
    fn position_cross(&self, other: &Self, hbar: T) -> Result<[C<T>; 3], QuantumError> {
        if self.axes != other.axes {
            return Err(QuantumError::GridMismatch);
        }
        let cell = self.axes.cell_volume();
        let sh = self.axes.shape;
        let index = |i: usize, j: usize, k: usize| (i * sh[1] + j) * sh[2] + k;
        let mut out = [czero::<T>(); 3];
        for axis in 0..3 {
            let mut acc = czero::<T>();
            let two_h = T::of(2.0) * self.axes.step[axis];
            for i in 0..sh[0] {
                for j in 0..sh[1] {
                    for k in 0..sh[2] {
                        let idx = [i, j, k];
                        if idx[axis] == 0 || idx[axis] + 1 >= sh[axis] {
                            continue;
                        }
                        let mut up = idx;
                        up[axis] += 1;
                        let mut dn = idx;
                        dn[axis] -= 1;
                        let deriv = (other.amps[index(up[0], up[1], up[2])]
                            - other.amps[index(dn[0], dn[1], dn[2])])
                            / C::new(two_h, T::zero());
                        acc = acc + self.amps[index(i, j, k)].conj() * deriv;
                    }
                }
            }
            out[axis] = acc * C::new(T::zero(), hbar * cell);
        }
        Ok(out)
    }
}

/// Spatial amplitude of one tensor factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PacketRepr<T> {
    Gaussian(GaussianPacket<T>),
    Grid(MomentumGrid<T>),
}

/// One tensor factor: spatial packet times internal C^3 amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QutritFactorState<T> {
    pub packet: PacketRepr<T>,
    /// Internal qutrit amplitudes, unit norm.
    pub internal: [C<T>; 3],
}

impl<T: Real> QutritFactorState<T> {
    pub fn gaussian(packet: GaussianPacket<T>, internal: [C<T>; 3]) -> Result<Self, QuantumError> {
        let state = Self { packet: PacketRepr::Gaussian(packet), internal };
        state.check_internal()?;
        Ok(state)
    }

    pub fn grid(grid: MomentumGrid<T>, internal: [C<T>; 3]) -> Result<Self, QuantumError> {
        let state = Self { packet: PacketRepr::Grid(grid), internal };
        state.check_internal()?;
        Ok(state)
    }

    fn check_internal(&self) -> Result<(), QuantumError> {
        let n: T = self.internal.iter().fold(T::zero(), |acc, c| acc + c.norm_sqr());
        if !(n > T::zero()) {
            return Err(QuantumError::ZeroNorm);
        }
        Ok(())
    }

    /// Normalize the internal amplitudes to unit length.
    pub fn normalized_internal(mut self) -> Self {
        let n: T = self
            .internal
            .iter()
            .fold(T::zero(), |acc, c| acc + c.norm_sqr())
            .sqrt();
        if n > T::zero() {
            for c in &mut self.internal {
                *c = *c / C::new(n, T::zero());
            }
        }
        self
    }

    fn internal_inner(&self, other: &Self) -> C<T> {
        let mut acc = czero();
        for (a, b) in self.internal.iter().zip(other.internal.iter()) {
            acc = acc + a.conj() * *b;
        }
        acc
    }

    fn spatial_overlap(&self, other: &Self, hbar: T) -> Result<C<T>, QuantumError> {
        match (&self.packet, &other.packet) {
            (PacketRepr::Gaussian(a), PacketRepr::Gaussian(b)) => {
                Ok(a.overlap_with_moments(b, hbar).0)
            }
            (PacketRepr::Grid(a), PacketRepr::Grid(b)) => a.overlap(b),
            _ => Err(QuantumError::GridMismatch),
        }
    }

    fn evolved(&self, mu: T, hbar: T, t: T, relativistic: bool) -> Result<Self, QuantumError> {
        let packet = match &self.packet {
            PacketRepr::Gaussian(g) => {
                if relativistic {
                    return Err(QuantumError::NeedsGrid);
                }
                PacketRepr::Gaussian(g.evolved(mu, hbar, t))
            }
            PacketRepr::Grid(g) => PacketRepr::Grid(g.evolved(mu, hbar, t, relativistic)?),
        };
        Ok(Self { packet, internal: self.internal })
    }
}

/// Weighted sum of product terms in the bi-qutrit Hilbert space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiQutritState<T> {
    pub terms: Vec<(C<T>, QutritFactorState<T>, QutritFactorState<T>)>,
}

impl<T: Real> BiQutritState<T> {
    pub fn product(f1: QutritFactorState<T>, f2: QutritFactorState<T>) -> Self {
        Self { terms: vec![(c64(1.0, 0.0), f1, f2)] }
    }

    /// `<Psi|Psi>` under the product inner product.
    pub fn norm_sqr(&self, hbar: T) -> Result<T, QuantumError> {
        let mut acc = czero::<T>();
        for (wk, k1, k2) in &self.terms {
            for (wl, l1, l2) in &self.terms {
                let s1 = k1.spatial_overlap(l1, hbar)?;
                let s2 = k2.spatial_overlap(l2, hbar)?;
                let i1 = k1.internal_inner(l1);
                let i2 = k2.internal_inner(l2);
                acc = acc + wk.conj() * *wl * s1 * s2 * i1 * i2;
            }
        }
        Ok(acc.re)
    }

    /// Rescale the weights so the total norm is one.
    pub fn normalized(mut self, hbar: T) -> Result<Self, QuantumError> {
        let n = self.norm_sqr(hbar)?;
        if !(n > T::zero()) {
            return Err(QuantumError::ZeroNorm);
        }
        let inv = C::new(n.sqrt().recip(), T::zero());
        for (w, _, _) in &mut self.terms {
            *w = *w * inv;
        }
        Ok(self)
    }
}

/// Unitary free evolution: phase multiplication per factor, identity on the
/// internal indices.
pub fn evolve<T: Real>(
    state: &BiQutritState<T>,
    spec: &EvolutionSpec<T>,
) -> Result<BiQutritState<T>, QuantumError> {
    spec.validate()?;
    let mut terms = Vec::with_capacity(state.terms.len());
    for (w, f1, f2) in &state.terms {
        terms.push((
            *w,
            f1.evolved(spec.mu1, spec.hbar, spec.t, spec.relativistic)?,
            f2.evolved(spec.mu2, spec.hbar, spec.t, spec.relativistic)?,
        ));
    }
    Ok(BiQutritState { terms })
}

/// Expectation values and reduced internal density matrices.
#[derive(Debug, Clone, Serialize)]
pub struct Observables<T> {
    pub norm: T,
    /// Per-factor `<p>` (weighted over terms).
    pub momentum: [[T; 3]; 2],
    /// Per-factor `<x>`.
    pub position: [[T; 3]; 2],
    /// Reduced 3x3 internal density matrix per factor (unit trace).
    pub internal_density: [[[C<T>; 3]; 3]; 2],
}

/// Compute norm, first moments and reduced internal density matrices.
pub fn observables<T: Real>(
    state: &BiQutritState<T>,
    hbar: T,
) -> Result<Observables<T>, QuantumError> {
    let norm_sqr = state.norm_sqr(hbar)?;
    if !(norm_sqr > T::zero()) {
        return Err(QuantumError::ZeroNorm);
    }

    let mut momentum = [[T::zero(); 3]; 2];
    let mut position = [[T::zero(); 3]; 2];
    let mut density = [[[czero::<T>(); 3]; 3]; 2];

    for factor in 0..2 {
        let mut p_acc = [czero::<T>(); 3];
        let mut x_acc = [czero::<T>(); 3];
        for tk in &state.terms {
            for tl in &state.terms {
                let (ak, ok) = if factor == 0 { (&tk.1, &tk.2) } else { (&tk.2, &tk.1) };
                let (al, ol) = if factor == 0 { (&tl.1, &tl.2) } else { (&tl.2, &tl.1) };
                let weight = tk.0.conj() * tl.0;
                let other_spatial = ok.spatial_overlap(ol, hbar)?;
                let other_internal = ok.internal_inner(ol);
                let this_internal = ak.internal_inner(al);
                let cross = weight * other_spatial * other_internal;

                // moments on the active factor
                match (&ak.packet, &al.packet) {
                    (PacketRepr::Gaussian(ga), PacketRepr::Gaussian(gl)) => {
                        let (ov, pmom) = ga.overlap_with_moments(gl, hbar);
                        for axis in 0..3 {
                            p_acc[axis] = p_acc[axis] + cross * this_internal * pmom[axis];
                            let xm = ga.position_moment(gl, hbar, axis);
                            x_acc[axis] = x_acc[axis] + cross * this_internal * xm;
                        }
                        // reduced internal density: spatial overlap times
                        // |internal_l><internal_k|
                        let dens_w = cross * ov;
                        for i in 0..3 {
                            for j in 0..3 {
                                density[factor][i][j] = density[factor][i][j]
                                    + dens_w * al.internal[i] * ak.internal[j].conj();
                            }
                        }
                    }
                    (PacketRepr::Grid(ga), PacketRepr::Grid(gl)) => {
                        let ov = ga.overlap(gl)?;
                        let pm = ga.momentum_cross(gl)?;
                        let xm = ga.position_cross(gl, hbar)?;
                        for axis in 0..3 {
                            p_acc[axis] = p_acc[axis] + cross * this_internal * pm[axis];
                            x_acc[axis] = x_acc[axis] + cross * this_internal * xm[axis];
                        }
                        let dens_w = cross * ov;
                        for i in 0..3 {
                            for j in 0..3 {
                                density[factor][i][j] = density[factor][i][j]
                                    + dens_w * al.internal[i] * ak.internal[j].conj();
                            }
                        }
                    }
                    _ => return Err(QuantumError::GridMismatch),
                }
            }
        }
        for axis in 0..3 {
            momentum[factor][axis] = p_acc[axis].re / norm_sqr;
            position[factor][axis] = x_acc[axis].re / norm_sqr;
        }
        let inv = C::new(norm_sqr.recip(), T::zero());
        for i in 0..3 {
            for j in 0..3 {
                density[factor][i][j] = density[factor][i][j] * inv;
            }
        }
    }

    Ok(Observables {
        norm: norm_sqr.sqrt(),
        momentum,
        position,
        internal_density: density,
    })
}

/// Extension point for media interactions: a Hermitian 3x3 matrix-valued
/// potential acting on the internal indices of one factor at position `x`.
/// No concrete implementation ships; free evolution ignores it.
pub trait InteractionPotential<T: Real> {
    fn matrix_at(&self, x: [T; 3]) -> [[C<T>; 3]; 3];
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(i: usize) -> [C<f64>; 3] {
        let mut v = [czero::<f64>(); 3];
        v[i] = c64(1.0, 0.0);
        v
    }

    fn simple_packet() -> GaussianPacket<f64> {
        GaussianPacket::new([0.3, -0.1, 0.8], [0.5, 0.7, 0.4]).unwrap()
    }

    #[test]
    fn dispersion_at_zero_momentum() {
        assert_eq!(dispersion([0.0; 3], 1.3, false), 0.0);
        assert_eq!(dispersion([0.0; 3], 1.3, true), 0.0);
    }

    #[test]
    fn nonrelativistic_unit_example() {
        assert!((dispersion([1.0, 0.0, 0.0], 1.0, false) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn relativistic_reduces_to_nonrelativistic() {
        let mu = 2.0f64;
        let p = 1e-3 * mu; // |p| = 1e-3 mu c
        let rel = dispersion([p, 0.0, 0.0], mu, true);
        let nr = dispersion([p, 0.0, 0.0], mu, false);
        assert!(((rel - nr) / nr).abs() < 1e-5, "rel {rel} nr {nr}");
    }

    #[test]
    fn gaussian_norm_is_one() {
        let g = simple_packet();
        let (ov, _) = g.overlap_with_moments(&g, 1.0);
        assert!((ov.re - 1.0).abs() < 1e-13);
        assert!(ov.im.abs() < 1e-13);
    }

    #[test]
    fn evolution_at_zero_time_is_identity() {
        let f1 = QutritFactorState::gaussian(simple_packet(), basis(0)).unwrap();
        let f2 = QutritFactorState::gaussian(simple_packet(), basis(1)).unwrap();
        let state = BiQutritState::product(f1, f2);
        let spec = EvolutionSpec::nonrelativistic(1.0, 2.0, 0.0);
        let evolved = evolve(&state, &spec).unwrap();
        assert_eq!(evolved, state);
    }

    #[test]
    fn norm_preserved_under_evolution() {
        let f1 = QutritFactorState::gaussian(simple_packet(), basis(0)).unwrap();
        let f2 = QutritFactorState::gaussian(
            GaussianPacket::new([-0.2, 0.0, 0.1], [0.3, 0.3, 0.9]).unwrap(),
            basis(2),
        )
        .unwrap();
        let state = BiQutritState::product(f1, f2);
        for t in [1.0, 10.0, 100.0] {
            let spec = EvolutionSpec::nonrelativistic(1.0, 0.7, t);
            let evolved = evolve(&state, &spec).unwrap();
            let n = evolved.norm_sqr(1.0).unwrap();
            assert!((n - 1.0).abs() < 1e-12, "norm^2 at t={t}: {n}");
        }
    }

    #[test]
    fn free_packet_drift_and_spreading() {
        let mu = 1.4f64;
        let hbar = 1.0f64;
        let g = GaussianPacket::new([0.6, 0.0, -0.2], [0.25, 0.4, 0.55])
            .unwrap()
            .with_position([1.0, -2.0, 0.0]);
        let t = 7.3;
        let evolved = g.evolved(mu, hbar, t);
        // <x>(t) = <x>(0) + <p> t / mu
        for j in 0..3 {
            let expect = g.center_x[j] + g.center_p[j] * t / mu;
            assert!((evolved.center_x[j] - expect).abs() < 1e-12);
        }
        // sigma_x(t)^2 = sigma0^2 + (hbar t / (2 mu sigma0))^2
        let s0 = g.position_sigma(hbar);
        let st = evolved.position_sigma(hbar);
        for j in 0..3 {
            let expect = (s0[j] * s0[j] + (hbar * t / (2.0 * mu * s0[j])).powi(2)).sqrt();
            assert!(
                ((st[j] - expect) / expect).abs() < 1e-12,
                "axis {j}: {} vs {expect}",
                st[j]
            );
        }
    }

    #[test]
    fn composition_of_evolutions() {
        let f1 = QutritFactorState::gaussian(simple_packet(), basis(0)).unwrap();
        let f2 = QutritFactorState::gaussian(simple_packet(), basis(1)).unwrap();
        let state = BiQutritState::product(f1, f2);
        let s1 = EvolutionSpec::nonrelativistic(1.1, 0.9, 3.0);
        let s2 = EvolutionSpec::nonrelativistic(1.1, 0.9, 4.5);
        let s12 = EvolutionSpec::nonrelativistic(1.1, 0.9, 7.5);
        let two_step = evolve(&evolve(&state, &s1).unwrap(), &s2).unwrap();
        let one_step = evolve(&state, &s12).unwrap();
        // compare packet parameters term by term
        for ((_, a1, a2), (_, b1, b2)) in two_step.terms.iter().zip(one_step.terms.iter()) {
            match (&a1.packet, &b1.packet, &a2.packet, &b2.packet) {
                (
                    PacketRepr::Gaussian(ga1),
                    PacketRepr::Gaussian(gb1),
                    PacketRepr::Gaussian(ga2),
                    PacketRepr::Gaussian(gb2),
                ) => {
                    for j in 0..3 {
                        assert!((ga1.chirp[j] - gb1.chirp[j]).abs() < 1e-12);
                        assert!((ga2.center_x[j] - gb2.center_x[j]).abs() < 1e-12);
                    }
                    assert!((ga1.phase - gb1.phase).abs() < 1e-12);
                    assert!((ga2.phase - gb2.phase).abs() < 1e-12);
                }
                _ => panic!("expected gaussian packets"),
            }
        }
    }

    #[test]
    fn internal_density_of_pure_basis_state() {
        let f1 = QutritFactorState::gaussian(simple_packet(), basis(0)).unwrap();
        let f2 = QutritFactorState::gaussian(simple_packet(), basis(1)).unwrap();
        let state = BiQutritState::product(f1, f2);
        let obs = observables(&state, 1.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == 0 && j == 0 { 1.0 } else { 0.0 };
                assert!((obs.internal_density[0][i][j].re - expect).abs() < 1e-12);
                assert!(obs.internal_density[0][i][j].im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn entangled_state_reduces_to_mixed_density() {
        // (|0>|1> + |1>|0>) / sqrt(2) with identical spatial packets
        let g = simple_packet();
        let t1 = (
            c64::<f64>(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            QutritFactorState::gaussian(g, basis(0)).unwrap(),
            QutritFactorState::gaussian(g, basis(1)).unwrap(),
        );
        let t2 = (
            c64::<f64>(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            QutritFactorState::gaussian(g, basis(1)).unwrap(),
            QutritFactorState::gaussian(g, basis(0)).unwrap(),
        );
        let state = BiQutritState { terms: vec![t1, t2] };
        let n = state.norm_sqr(1.0).unwrap();
        assert!((n - 1.0).abs() < 1e-12);
        let obs = observables(&state, 1.0).unwrap();
        for factor in 0..2 {
            let d = &obs.internal_density[factor];
            assert!((d[0][0].re - 0.5).abs() < 1e-12);
            assert!((d[1][1].re - 0.5).abs() < 1e-12);
            assert!(d[2][2].re.abs() < 1e-12);
            assert!(d[0][1].norm() < 1e-12);
        }
    }

    #[test]
    fn grid_aliasing_detected() {
        let packet = GaussianPacket::new([0.0; 3], [1.0, 1.0, 1.0]).unwrap();
        let axes = GridAxes {
            origin: [-4.0, -4.0, -4.0],
            step: [2.0, 2.0, 2.0],
            shape: [5, 5, 5],
        };
        let grid = MomentumGrid::from_packet(&packet, axes, 1.0);
        // coarse grid + long time -> phase between nodes exceeds pi
        let err = grid.evolved(1.0, 1.0, 10.0, false).unwrap_err();
        assert!(matches!(err, QuantumError::GridAliasing { .. }));
        // short time passes and preserves the norm
        let short = grid.evolved(1.0, 1.0, 0.05, false).unwrap();
        assert!((short.norm_sqr() - grid.norm_sqr()).abs() < 1e-14);
    }

    #[test]
    fn relativistic_gaussian_requires_grid() {
        let f1 = QutritFactorState::gaussian(simple_packet(), basis(0)).unwrap();
        let f2 = QutritFactorState::gaussian(simple_packet(), basis(1)).unwrap();
        let state = BiQutritState::product(f1, f2);
        let spec = EvolutionSpec { mu1: 1.0, mu2: 1.0, hbar: 1.0, relativistic: true, t: 1.0 };
        assert!(matches!(evolve(&state, &spec), Err(QuantumError::NeedsGrid)));
    }
}
