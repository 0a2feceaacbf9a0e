//! Closed-form localized scalar wave solution and its derivative jet.
//!
//! The pulse seed is the focus-wave-mode scalar
//!
//! ```text
//! alpha(T, R, Z) = 1 / ( R^2 + (Psi1 + i (Z - T)) (Psi2 - i (Z + T)) )
//! ```
//!
//! in dimensionless Cartesian coordinates (`R^2 = x^2 + y^2`, time measured
//! as `c t` in units of the length scale `ell0`). The square of the length
//! scale that would normally multiply the numerator is absorbed into the
//! nondimensionalization; MKS reconstruction happens in [`crate::diagnostics`].
//!
//! The denominator is a quadratic polynomial of the coordinates, so value,
//! gradient and Hessian have cheap closed forms:
//! `alpha = 1/D`, `d alpha = -dD / D^2`,
//! `dd alpha = (2 dD dD - D ddD) / D^3`,
//! and `alpha` satisfies the wave equation exactly because the Minkowski
//! square of `dD` equals `4 D` identically.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::float::{C, Real};
use crate::geometry::{CMat4, CVec4, SpacetimePoint, T_IDX, X_IDX, Y_IDX, Z_IDX};

/// Shape and strength parameters of a pulse.
///
/// `lambda` scales every field component linearly; `psi1`, `psi2` control the
/// axial profile, the propagation direction of the dominant maximum and its
/// persistence; `phi` and `xi` only relabel transverse/axial coordinates for
/// reporting and never enter the field equations (they are applied in the
/// MKS conversion layer); `ell0` is the length scale in metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseParams<T> {
    pub lambda: T,
    pub psi1: T,
    pub psi2: T,
    pub phi: T,
    pub xi: T,
    pub ell0: T,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamsError {
    #[error("pulse parameter `{name}` must be strictly positive and finite, got {value}")]
    NotPositive { name: &'static str, value: f64 },
}

impl<T: Real> PulseParams<T> {
    /// All parameters strictly positive; `phi = xi = 1` and `ell0 = 1` are the
    /// common defaults for dimensionless work.
    pub fn new(lambda: T, psi1: T, psi2: T) -> Result<Self, ParamsError> {
        Self::with_scales(lambda, psi1, psi2, T::one(), T::one(), T::one())
    }

    pub fn with_scales(
        lambda: T,
        psi1: T,
        psi2: T,
        phi: T,
        xi: T,
        ell0: T,
    ) -> Result<Self, ParamsError> {
        let fields = [
            ("lambda", lambda),
            ("psi1", psi1),
            ("psi2", psi2),
            ("phi", phi),
            ("xi", xi),
            ("ell0", ell0),
        ];
        for (name, value) in fields {
            if !(value > T::zero()) || !value.is_finite() {
                return Err(ParamsError::NotPositive {
                    name,
                    value: value.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(Self {
            lambda,
            psi1,
            psi2,
            phi,
            xi,
            ell0,
        })
    }

    /// Same pulse with a different field strength.
    pub fn with_lambda(mut self, lambda: T) -> Result<Self, ParamsError> {
        if !(lambda > T::zero()) || !lambda.is_finite() {
            return Err(ParamsError::NotPositive {
                name: "lambda",
                value: lambda.to_f64().unwrap_or(f64::NAN),
            });
        }
        self.lambda = lambda;
        Ok(self)
    }
}

/// Value, gradient and Hessian of the complex scalar at one event.
///
/// The Hessian is stored as a full symmetric 4x4 component array; symmetry is
/// exact by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexJet2<T> {
    pub value: C<T>,
    pub grad: CVec4<T>,
    pub hess: CMat4<T>,
}

/// Denominator `D` of the scalar solution at `p`.
///
/// Writing `a = Z - T`, `b = Z + T`:
/// `D = R^2 + Psi1 Psi2 + a b + i (a Psi2 - b Psi1)`.
/// If the imaginary part vanishes then `a` and `b` have equal sign, so
/// `a b >= 0` and `Re D >= Psi1 Psi2 > 0`: the denominator never vanishes and
/// in fact `|D| >= Psi1 Psi2`.
pub fn denominator<T: Real>(params: &PulseParams<T>, p: &SpacetimePoint<T>) -> C<T> {
    let re = p.x * p.x + p.y * p.y + p.z * p.z - p.t * p.t + params.psi1 * params.psi2;
    let im = (params.psi2 - params.psi1) * p.z - (params.psi1 + params.psi2) * p.t;
    C::new(re, im)
}

fn denominator_gradient<T: Real>(params: &PulseParams<T>, p: &SpacetimePoint<T>) -> CVec4<T> {
    let two = T::of(2.0);
    [
        C::new(-two * p.t, -(params.psi1 + params.psi2)),
        C::new(two * p.x, T::zero()),
        C::new(two * p.y, T::zero()),
        C::new(two * p.z, params.psi2 - params.psi1),
    ]
}

/// The dimensionless scalar `alpha` at `p`.
pub fn scalar_alpha<T: Real>(params: &PulseParams<T>, p: &SpacetimePoint<T>) -> C<T> {
    denominator(params, p).inv()
}

/// Value, gradient and Hessian of `alpha` at `p`, from the closed-form
/// rational-function derivatives of the quadratic denominator.
pub fn scalar_alpha_jet<T: Real>(params: &PulseParams<T>, p: &SpacetimePoint<T>) -> ComplexJet2<T> {
    let d = denominator(params, p);
    let dd = denominator_gradient(params, p);
    let inv = d.inv();
    let inv2 = inv * inv;
    let inv3 = inv2 * inv;

    let value = inv;
    let mut grad = [C::new(T::zero(), T::zero()); 4];
    for (g, ddk) in grad.iter_mut().zip(dd.iter()) {
        *g = -*ddk * inv2;
    }

    // dd D is diag(-2, 2, 2, 2); mixed second derivatives vanish
    let two = C::new(T::of(2.0), T::zero());
    let mut hess = [[C::new(T::zero(), T::zero()); 4]; 4];
    for mu in 0..4 {
        for nu in 0..4 {
            let mut num = two * dd[mu] * dd[nu];
            if mu == nu {
                let ddd = if mu == T_IDX { -two } else { two };
                num = num - d * ddd;
            }
            hess[mu][nu] = num * inv3;
        }
    }

    ComplexJet2 { value, grad, hess }
}

/// d'Alembertian residual `(-dtt + dxx + dyy + dzz) alpha` of a jet.
///
/// Exactly zero for jets produced by [`scalar_alpha_jet`] up to roundoff; the
/// contract is `|residual| <= 1e-9 *` [`hessian_scale`].
pub fn wave_residual<T: Real>(jet: &ComplexJet2<T>) -> C<T> {
    -jet.hess[T_IDX][T_IDX] + jet.hess[X_IDX][X_IDX] + jet.hess[Y_IDX][Y_IDX] + jet.hess[Z_IDX][Z_IDX]
}

/// Local magnitude scale of the second derivatives, used to normalize the
/// wave-equation residual.
pub fn hessian_scale<T: Real>(jet: &ComplexJet2<T>) -> T {
    let mut s = T::zero();
    for row in &jet.hess {
        for v in row {
            s = s.max(v.norm());
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::float::c64;

    fn params(psi1: f64, psi2: f64) -> PulseParams<f64> {
        PulseParams::new(1.0, psi1, psi2).unwrap()
    }

    #[test]
    fn rejects_nonpositive_parameters() {
        assert!(PulseParams::new(1.0, 0.0, 1.0).is_err());
        assert!(PulseParams::new(-1.0, 1.0, 1.0).is_err());
        assert!(PulseParams::new(1.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn unit_parameters_at_origin() {
        let p = SpacetimePoint::new(0.0, 0.0, 0.0, 0.0);
        let a = scalar_alpha(&params(1.0, 1.0), &p);
        assert_eq!(a, c64(1.0, 0.0));
    }

    #[test]
    fn origin_value_is_inverse_psi_product() {
        let p = SpacetimePoint::new(0.0, 0.0, 0.0, 0.0);
        let a = scalar_alpha(&params(100.0, 1.0), &p);
        assert!((a - c64::<f64>(0.01, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn frozen_off_origin_value() {
        // independent route: build the denominator from the light-cone factors
        let (psi1, psi2) = (4.0, 0.5);
        let (t, r, z) = (0.7, 1.3, -0.4);
        let f1 = C::new(psi1, z - t);
        let f2 = C::new(psi2, -(z + t));
        let oracle = (C::new(r * r, 0.0) + f1 * f2).inv();

        let p = SpacetimePoint::new(t, r, 0.0, z);
        let a = scalar_alpha(&params(psi1, psi2), &p);
        assert!((a - oracle).norm() < 1e-15);
        // frozen digits: 1 / (3.36 - 1.75 i)
        assert!((a.re - 0.23411).abs() < 5e-6);
        assert!((a.im - 0.12194).abs() < 5e-6);
    }

    #[test]
    fn jet_value_matches_alpha_and_axial_gradient_vanishes() {
        let pr = params(1.0, 1.0);
        let p = SpacetimePoint::new(0.3, 0.0, 0.0, -1.2);
        let jet = scalar_alpha_jet(&pr, &p);
        assert_eq!(jet.value, scalar_alpha(&pr, &p));
        // on-axis transverse gradient must vanish by axial symmetry
        assert_eq!(jet.grad[X_IDX], c64(0.0, 0.0));
        assert_eq!(jet.grad[Y_IDX], c64(0.0, 0.0));
    }

    #[test]
    fn jet_matches_finite_differences() {
        let pr = params(4.0, 0.5);
        let p = SpacetimePoint::new(0.7, 1.3, 0.0, -0.4);
        let jet = scalar_alpha_jet(&pr, &p);
        let h = 1e-5;

        for mu in 0..4 {
            let fp = scalar_alpha(&pr, &p.shifted(mu, h));
            let fm = scalar_alpha(&pr, &p.shifted(mu, -h));
            let fd = (fp - fm) / C::new(2.0 * h, 0.0);
            let rel = (jet.grad[mu] - fd).norm() / jet.grad[mu].norm().max(1e-30);
            assert!(rel < 1e-6, "grad[{mu}] rel err {rel}");
        }
        for mu in 0..4 {
            for nu in 0..4 {
                let fpp = scalar_alpha(&pr, &p.shifted(mu, h).shifted(nu, h));
                let fpm = scalar_alpha(&pr, &p.shifted(mu, h).shifted(nu, -h));
                let fmp = scalar_alpha(&pr, &p.shifted(mu, -h).shifted(nu, h));
                let fmm = scalar_alpha(&pr, &p.shifted(mu, -h).shifted(nu, -h));
                let fd = (fpp - fpm - fmp + fmm) / C::new(4.0 * h * h, 0.0);
                let denom = jet.hess[mu][nu].norm().max(hessian_scale(&jet) * 1e-3);
                let rel = (jet.hess[mu][nu] - fd).norm() / denom;
                assert!(rel < 1e-6, "hess[{mu}][{nu}] rel err {rel}");
            }
        }
    }

    #[test]
    fn wave_residual_vanishes_at_origin() {
        let jet = scalar_alpha_jet(&params(1.0, 1.0), &SpacetimePoint::new(0.0, 0.0, 0.0, 0.0));
        assert!(wave_residual(&jet).norm() <= 1e-9 * hessian_scale(&jet));
    }

    #[test]
    fn corrupted_hessian_is_detected() {
        let mut jet = scalar_alpha_jet(&params(2.0, 0.7), &SpacetimePoint::new(0.4, 0.2, -0.6, 1.0));
        jet.hess[X_IDX][X_IDX] = jet.hess[X_IDX][X_IDX] * C::new(1.01, 0.0);
        assert!(wave_residual(&jet).norm() > 1e-4 * hessian_scale(&jet));
    }
}
