//! Minkowski geometry primitives shared by the field and dynamics modules.
//!
//! Conventions (fixed once, used everywhere):
//! * coordinates ordered `(t, x, y, z)`, all dimensionless (lengths in units
//!   of the pulse scale, time as `c t` in the same units);
//! * metric `diag(-1, 1, 1, 1)`;
//! * orientation `eps_{txyz} = +1` for the Levi-Civita symbol.

use serde::{Deserialize, Serialize};

use crate::float::{czero, C, Real};

/// Index order used for all rank-4 component arrays.
pub const T_IDX: usize = 0;
pub const X_IDX: usize = 1;
pub const Y_IDX: usize = 2;
pub const Z_IDX: usize = 3;

/// Signs of the metric diagonal, `diag(-1, 1, 1, 1)`.
pub fn metric_sign<T: Real>(idx: usize) -> T {
    if idx == T_IDX {
        -T::one()
    } else {
        T::one()
    }
}

/// An event in dimensionless Cartesian Minkowski coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpacetimePoint<T> {
    pub t: T,
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> SpacetimePoint<T> {
    pub fn new(t: T, x: T, y: T, z: T) -> Self {
        Self { t, x, y, z }
    }

    /// Build from cylindrical coordinates `(t, r, theta, z)`.
    pub fn from_cylindrical(t: T, r: T, theta: T, z: T) -> Self {
        Self {
            t,
            x: r * theta.cos(),
            y: r * theta.sin(),
            z,
        }
    }

    pub fn radius(&self) -> T {
        (self.x * self.x + self.y * self.y).sqrt()
    }

    pub fn azimuth(&self) -> T {
        self.y.atan2(self.x)
    }

    pub fn coords(&self) -> [T; 4] {
        [self.t, self.x, self.y, self.z]
    }

    pub fn from_coords(c: [T; 4]) -> Self {
        Self::new(c[0], c[1], c[2], c[3])
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Shift one coordinate by `h` (finite-difference stencils).
    pub fn shifted(&self, idx: usize, h: T) -> Self {
        let mut c = self.coords();
        c[idx] = c[idx] + h;
        Self::from_coords(c)
    }
}

/// Minkowski inner product `a^mu b^nu g_{mu nu}` of contravariant components.
pub fn minkowski_dot<T: Real>(a: &[T; 4], b: &[T; 4]) -> T {
    -a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

/// Totally antisymmetric symbol, `levi_civita([0,1,2,3]) = +1`.
pub fn levi_civita(indices: [usize; 4]) -> i32 {
    let mut seen = [false; 4];
    for &i in &indices {
        if i >= 4 || seen[i] {
            return 0;
        }
        seen[i] = true;
    }
    let mut sign = 1;
    for i in 0..4 {
        for j in (i + 1)..4 {
            if indices[i] > indices[j] {
                sign = -sign;
            }
        }
    }
    sign
}

/// Complex 4-covector components.
pub type CVec4<T> = [C<T>; 4];
/// Complex rank-2 component array in the Cartesian basis.
pub type CMat4<T> = [[C<T>; 4]; 4];

pub fn cvec4_zero<T: Real>() -> CVec4<T> {
    [czero(); 4]
}

pub fn cmat4_zero<T: Real>() -> CMat4<T> {
    [[czero(); 4]; 4]
}

/// `A B` for complex 4x4 component arrays.
pub fn cmat4_mul<T: Real>(a: &CMat4<T>, b: &CMat4<T>) -> CMat4<T> {
    let mut out = cmat4_zero();
    for i in 0..4 {
        for k in 0..4 {
            let aik = a[i][k];
            if aik == czero() {
                continue;
            }
            for j in 0..4 {
                out[i][j] = out[i][j] + aik * b[k][j];
            }
        }
    }
    out
}

/// Largest absolute value among all components.
pub fn cmat4_max_norm<T: Real>(m: &CMat4<T>) -> T {
    let mut best = T::zero();
    for row in m {
        for v in row {
            best = best.max(v.norm());
        }
    }
    best
}

/// Pullback of a rank-2 covariant tensor under an active rotation by `angle`
/// about the z-axis: `out_{mu nu} = in_{a b} J^a_mu J^b_nu` with `J` the
/// rotation Jacobian.
pub fn rotate_two_form<T: Real>(form: &CMat4<T>, angle: T) -> CMat4<T> {
    let (s, c) = angle.sin_cos();
    // J[a][mu] = d phi^a / d x^mu, identity outside the (x, y) block
    let mut jac = [[T::zero(); 4]; 4];
    jac[T_IDX][T_IDX] = T::one();
    jac[Z_IDX][Z_IDX] = T::one();
    jac[X_IDX][X_IDX] = c;
    jac[X_IDX][Y_IDX] = -s;
    jac[Y_IDX][X_IDX] = s;
    jac[Y_IDX][Y_IDX] = c;
    let mut out = cmat4_zero();
    for mu in 0..4 {
        for nu in 0..4 {
            let mut acc = czero();
            for a in 0..4 {
                if jac[a][mu] == T::zero() {
                    continue;
                }
                for b in 0..4 {
                    if jac[b][nu] == T::zero() {
                        continue;
                    }
                    acc = acc + form[a][b] * C::new(jac[a][mu] * jac[b][nu], T::zero());
                }
            }
            out[mu][nu] = acc;
        }
    }
    out
}

/// Orthonormal co-rotating cylindrical frame `(e_t, e_r, e_theta, e_z)` at
/// azimuth `theta`, as contravariant Cartesian components.
pub fn cylindrical_frame<T: Real>(theta: T) -> [[T; 4]; 4] {
    let (s, c) = theta.sin_cos();
    [
        [T::one(), T::zero(), T::zero(), T::zero()],
        [T::zero(), c, s, T::zero()],
        [T::zero(), -s, c, T::zero()],
        [T::zero(), T::zero(), T::zero(), T::one()],
    ]
}

/// The six independent components of a two-form projected on a frame,
/// ordered `[(0,1), (0,2), (0,3), (1,2), (1,3), (2,3)]` in frame indices.
pub fn frame_components<T: Real>(form: &CMat4<T>, frame: &[[T; 4]; 4]) -> [C<T>; 6] {
    let mut out = [czero(); 6];
    let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    for (slot, &(a, b)) in pairs.iter().enumerate() {
        let mut acc = czero();
        for mu in 0..4 {
            if frame[a][mu] == T::zero() {
                continue;
            }
            for nu in 0..4 {
                if frame[b][nu] == T::zero() {
                    continue;
                }
                acc = acc + form[mu][nu] * C::new(frame[a][mu] * frame[b][nu], T::zero());
            }
        }
        out[slot] = acc;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levi_civita_basics() {
        assert_eq!(levi_civita([0, 1, 2, 3]), 1);
        assert_eq!(levi_civita([1, 0, 2, 3]), -1);
        assert_eq!(levi_civita([1, 2, 3, 0]), -1);
        assert_eq!(levi_civita([0, 0, 2, 3]), 0);
    }

    #[test]
    fn minkowski_signature() {
        let tvec = [1.0, 0.0, 0.0, 0.0];
        let xvec = [0.0, 1.0, 0.0, 0.0];
        assert_eq!(minkowski_dot(&tvec, &tvec), -1.0);
        assert_eq!(minkowski_dot(&xvec, &xvec), 1.0);
        assert_eq!(minkowski_dot(&tvec, &xvec), 0.0);
    }

    #[test]
    fn cylindrical_point_roundtrip() {
        let p = SpacetimePoint::from_cylindrical(0.5, 2.0, 1.1, -0.3);
        assert!((p.radius() - 2.0).abs() < 1e-14);
        assert!((p.azimuth() - 1.1).abs() < 1e-14);
    }

    #[test]
    fn rotation_pullback_on_basis_two_form() {
        // phi rotates points by +pi/2, so phi^*(dx) = -dy and
        // phi^*(dx ^ dt) = -dy ^ dt
        let mut form = cmat4_zero::<f64>();
        form[X_IDX][T_IDX] = C::new(1.0, 0.0);
        form[T_IDX][X_IDX] = C::new(-1.0, 0.0);
        let rot = rotate_two_form(&form, std::f64::consts::FRAC_PI_2);
        assert!((rot[Y_IDX][T_IDX].re + 1.0).abs() < 1e-15);
        assert!(rot[X_IDX][T_IDX].re.abs() < 1e-15);
    }
}
