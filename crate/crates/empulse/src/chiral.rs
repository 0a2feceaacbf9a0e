//! Chiral tensor basis, vector potential and Maxwell field synthesis.
//!
//! Six constant antisymmetric two-forms generate the pulse family. In the
//! Cartesian basis with `eps_{txyz} = +1` and metric `diag(-1,1,1,1)`:
//!
//! * `CE, +1` : `d(x + i y) ^ dt`
//! * `CE,  0` : `dz ^ dt`
//! * `CE, -1` : `d(x - i y) ^ dt`
//! * `CM, k`  : Hodge dual of `CE, k` (so `CM,0 = dx ^ dy`,
//!   `CM,+1 = dy ^ dz + i dz ^ dx`, `CM,-1 = dy ^ dz - i dz ^ dx`)
//!
//! Each is an eigentensor of the azimuthal rotation generator with eigenvalue
//! `kappa`. The vector potential of a superposition `Pi = sum C^{s,k} Pi^{s,k}`
//! is the index contraction
//!
//! ```text
//! A_d = Lambda * d_g(alpha Pi_{mb}) eps^{g m b}_d
//! ```
//!
//! (alternating symbol with the three upper indices raised by the metric), and
//! the complex Maxwell tensor is `F_{bd} = d_b A_d - d_d A_b`, evaluated from
//! the closed-form scalar Hessian rather than by numerical differentiation.
//! The real fields are `e_i = Re F_{i t}` and
//! `(b_x, b_y, b_z) = Re (F_{yz}, F_{zx}, F_{xy})`; with these conventions the
//! `CE` (`CM`) family has `e` (`b`) orthogonal to the z-axis when `kappa = 0`.
//!
//! The dimensional prefactor `m0 c^2 ell0^3 / q` of the potential is carried
//! symbolically: every quantity here is dimensionless and `Lambda` is the only
//! strength knob, which is exactly what the reduced particle dynamics needs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::float::{c64, czero, C, Real};
use crate::geometry::{
    cmat4_zero, cylindrical_frame, frame_components, levi_civita, metric_sign,
    rotate_two_form, CMat4, CVec4, SpacetimePoint, T_IDX, X_IDX, Y_IDX, Z_IDX,
};
use crate::scalar::{scalar_alpha_jet, PulseParams};

/// The two chiral families: `CE` has transverse electric field at `kappa = 0`,
/// `CM` transverse magnetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModeFamily {
    CE,
    CM,
}

/// One of the six chiral modes `(family, kappa)`, `kappa` in `{-1, 0, +1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChiralMode {
    pub family: ModeFamily,
    pub kappa: i8,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("chirality index must be -1, 0 or +1, got {0}")]
    BadKappa(i8),
    #[error("superposition has no nonzero coefficient; field evaluation would be identically zero")]
    EmptySuperposition,
    #[error(transparent)]
    Params(#[from] crate::scalar::ParamsError),
}

impl ChiralMode {
    pub fn new(family: ModeFamily, kappa: i8) -> Result<Self, FieldError> {
        if !(-1..=1).contains(&kappa) {
            return Err(FieldError::BadKappa(kappa));
        }
        Ok(Self { family, kappa })
    }

    /// All six modes in a fixed deterministic order.
    pub const ALL: [ChiralMode; 6] = [
        ChiralMode { family: ModeFamily::CE, kappa: -1 },
        ChiralMode { family: ModeFamily::CE, kappa: 0 },
        ChiralMode { family: ModeFamily::CE, kappa: 1 },
        ChiralMode { family: ModeFamily::CM, kappa: -1 },
        ChiralMode { family: ModeFamily::CM, kappa: 0 },
        ChiralMode { family: ModeFamily::CM, kappa: 1 },
    ];
}

impl std::fmt::Display for ChiralMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let fam = match self.family {
            ModeFamily::CE => "CE",
            ModeFamily::CM => "CM",
        };
        write!(f, "{fam},{:+}", self.kappa)
    }
}

/// Constant antisymmetric two-form, Cartesian Minkowski components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantTwoForm<T> {
    pub comp: CMat4<T>,
}

impl<T: Real> ConstantTwoForm<T> {
    fn from_components(entries: &[(usize, usize, C<T>)]) -> Self {
        let mut comp = cmat4_zero();
        for &(mu, nu, v) in entries {
            comp[mu][nu] = v;
            comp[nu][mu] = -v;
        }
        Self { comp }
    }

    /// Hodge dual with `eps_{txyz} = +1`:
    /// `(*w)_{mn} = 1/2 eps_{mnab} w^{ab}`.
    pub fn hodge_dual(&self) -> Self {
        let mut out = cmat4_zero();
        for mu in 0..4 {
            for nu in 0..4 {
                let mut acc = czero();
                for a in 0..4 {
                    for b in 0..4 {
                        let sign = levi_civita([mu, nu, a, b]);
                        if sign == 0 {
                            continue;
                        }
                        let raise = metric_sign::<T>(a) * metric_sign::<T>(b);
                        let coeff = T::of(0.5 * sign as f64) * raise;
                        acc = acc + self.comp[a][b] * C::new(coeff, T::zero());
                    }
                }
                out[mu][nu] = acc;
            }
        }
        Self { comp: out }
    }
}

/// The basis Hertz two-form of one chiral mode.
pub fn hertz_tensor<T: Real>(mode: ChiralMode) -> ConstantTwoForm<T> {
    let one = c64(1.0, 0.0);
    let ce = match mode.kappa {
        0 => ConstantTwoForm::from_components(&[(Z_IDX, T_IDX, one)]),
        k => ConstantTwoForm::from_components(&[
            (X_IDX, T_IDX, one),
            (Y_IDX, T_IDX, c64(0.0, k as f64)),
        ]),
    };
    match mode.family {
        ModeFamily::CE => ce,
        ModeFamily::CM => ce.hodge_dual(),
    }
}

/// Maximum deviation of `-i * (azimuthal Lie derivative of form)` from
/// `kappa * form`, with the Lie derivative computed by central finite
/// rotation differencing. Basis tensors satisfy this to well below `1e-9`.
pub fn eigenphase_check<T: Real>(mode: ChiralMode, form: &ConstantTwoForm<T>) -> T {
    let h = T::of(1e-5);
    let plus = rotate_two_form(&form.comp, h);
    let minus = rotate_two_form(&form.comp, -h);
    let kappa = C::new(T::of(mode.kappa as f64), T::zero());
    let half_inv = (T::of(2.0) * h).recip();
    let mut worst = T::zero();
    for mu in 0..4 {
        for nu in 0..4 {
            let lie = (plus[mu][nu] - minus[mu][nu]) * C::new(half_inv, T::zero());
            let op = lie * C::new(T::zero(), -T::one());
            worst = worst.max((op - kappa * form.comp[mu][nu]).norm());
        }
    }
    worst
}

/// Complex coefficients of a chiral superposition. Modes not present count
/// as zero. The map is ordered, so iteration (and everything derived from it)
/// is deterministic. Serialized as a list of `(mode, coefficient)` entries
/// because JSON requires string map keys.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Serialize + Clone",
    deserialize = "T: Deserialize<'de>"
))]
pub struct SuperpositionSpec<T> {
    #[serde(with = "coeff_entries")]
    pub coeffs: BTreeMap<ChiralMode, C<T>>,
}

mod coeff_entries {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<T, S>(map: &BTreeMap<ChiralMode, C<T>>, ser: S) -> Result<S::Ok, S::Error>
    where
        T: Serialize + Clone,
        S: Serializer,
    {
        let entries: Vec<(ChiralMode, C<T>)> =
            map.iter().map(|(m, c)| (*m, c.clone())).collect();
        entries.serialize(ser)
    }

    pub fn deserialize<'de, T, D>(de: D) -> Result<BTreeMap<ChiralMode, C<T>>, D::Error>
    where
        T: Deserialize<'de>,
        D: Deserializer<'de>,
    {
        let entries: Vec<(ChiralMode, C<T>)> = Vec::deserialize(de)?;
        Ok(entries.into_iter().collect())
    }
}

impl<T: Real> SuperpositionSpec<T> {
    pub fn empty() -> Self {
        Self { coeffs: BTreeMap::new() }
    }

    /// A single mode with unit coefficient.
    pub fn single(mode: ChiralMode) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(mode, c64(1.0, 0.0));
        Self { coeffs }
    }

    pub fn with(mut self, mode: ChiralMode, coeff: C<T>) -> Self {
        self.coeffs.insert(mode, coeff);
        self
    }

    pub fn scaled(&self, factor: C<T>) -> Self {
        Self {
            coeffs: self
                .coeffs
                .iter()
                .map(|(m, c)| (*m, *c * factor))
                .collect(),
        }
    }

    pub fn has_nonzero_coefficient(&self) -> bool {
        self.coeffs.values().any(|c| c.norm_sqr() > T::zero())
    }

    /// The superposed constant two-form `sum_k C_k Pi_k`.
    pub fn two_form(&self) -> ConstantTwoForm<T> {
        let mut comp = cmat4_zero();
        for (mode, coeff) in &self.coeffs {
            let basis = hertz_tensor::<T>(*mode);
            for mu in 0..4 {
                for nu in 0..4 {
                    comp[mu][nu] = comp[mu][nu] + *coeff * basis.comp[mu][nu];
                }
            }
        }
        ConstantTwoForm { comp }
    }
}

/// Real electric/magnetic 3-vectors together with the complex Maxwell tensor
/// they were extracted from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EMFieldSample<T> {
    /// Complex antisymmetric field tensor components `F_{mu nu}`.
    pub f: CMat4<T>,
    /// `e_i = Re F_{i t}`.
    pub e: [T; 3],
    /// `b = Re (F_{yz}, F_{zx}, F_{xy})`.
    pub b: [T; 3],
}

impl<T: Real> EMFieldSample<T> {
    /// Extract `e` and `b` from a complex tensor by the crate conventions.
    pub fn from_tensor(f: CMat4<T>) -> Self {
        let e = [f[X_IDX][T_IDX].re, f[Y_IDX][T_IDX].re, f[Z_IDX][T_IDX].re];
        let b = [f[Y_IDX][Z_IDX].re, f[Z_IDX][X_IDX].re, f[X_IDX][Y_IDX].re];
        Self { f, e, b }
    }

    /// Build a purely real synthetic sample from given `e`, `b` vectors.
    pub fn from_real_vectors(e: [T; 3], b: [T; 3]) -> Self {
        let mut f = cmat4_zero();
        let real = |v: T| C::new(v, T::zero());
        f[X_IDX][T_IDX] = real(e[0]);
        f[T_IDX][X_IDX] = real(-e[0]);
        f[Y_IDX][T_IDX] = real(e[1]);
        f[T_IDX][Y_IDX] = real(-e[1]);
        f[Z_IDX][T_IDX] = real(e[2]);
        f[T_IDX][Z_IDX] = real(-e[2]);
        f[Y_IDX][Z_IDX] = real(b[0]);
        f[Z_IDX][Y_IDX] = real(-b[0]);
        f[Z_IDX][X_IDX] = real(b[1]);
        f[X_IDX][Z_IDX] = real(-b[1]);
        f[X_IDX][Y_IDX] = real(b[2]);
        f[Y_IDX][X_IDX] = real(-b[2]);
        Self { f, e, b }
    }

    /// Real part of the tensor as a plain matrix (what the Lorentz force sees).
    pub fn real_tensor(&self) -> [[T; 4]; 4] {
        let mut out = [[T::zero(); 4]; 4];
        for mu in 0..4 {
            for nu in 0..4 {
                out[mu][nu] = self.f[mu][nu].re;
            }
        }
        out
    }
}

/// A pulse configuration ready for evaluation: parameters plus superposition,
/// with the constant contraction matrix precomputed.
///
/// `W_{g d} = sum_{m b} Pi_{m b} eps^{g m b}_d` turns the scalar jet into the
/// potential and field by plain 4x4 products:
/// `A_d = Lambda (grad alpha)_g W_{g d}` and
/// `F = Lambda (H W - (H W)^T)` with `H` the scalar Hessian.
#[derive(Debug, Clone)]
pub struct PulseField<T> {
    params: PulseParams<T>,
    spec: SuperpositionSpec<T>,
    contraction: CMat4<T>,
}

impl<T: Real> PulseField<T> {
    pub fn new(params: PulseParams<T>, spec: SuperpositionSpec<T>) -> Result<Self, FieldError> {
        if !spec.has_nonzero_coefficient() {
            return Err(FieldError::EmptySuperposition);
        }
        let contraction = contraction_matrix(&spec.two_form());
        Ok(Self { params, spec, contraction })
    }

    pub fn params(&self) -> &PulseParams<T> {
        &self.params
    }

    pub fn spec(&self) -> &SuperpositionSpec<T> {
        &self.spec
    }

    /// Same superposition, different strength.
    pub fn with_lambda(&self, lambda: T) -> Result<Self, FieldError> {
        let params = self.params.with_lambda(lambda)?;
        Self::new(params, self.spec.clone())
    }

    /// Complex 4-covector potential `A_d` at `p`.
    pub fn potential(&self, p: &SpacetimePoint<T>) -> CVec4<T> {
        let jet = scalar_alpha_jet(&self.params, p);
        let lam = C::new(self.params.lambda, T::zero());
        let mut a = [czero::<T>(); 4];
        for d in 0..4 {
            let mut acc = czero::<T>();
            for g in 0..4 {
                acc = acc + jet.grad[g] * self.contraction[g][d];
            }
            a[d] = acc * lam;
        }
        a
    }

    /// Complex Maxwell tensor and real `(e, b)` at `p`.
    pub fn sample(&self, p: &SpacetimePoint<T>) -> EMFieldSample<T> {
        let jet = scalar_alpha_jet(&self.params, p);
        let lam = C::new(self.params.lambda, T::zero());
        let mut m = cmat4_zero::<T>();
        for b in 0..4 {
            for d in 0..4 {
                let mut acc = czero::<T>();
                for g in 0..4 {
                    acc = acc + jet.hess[b][g] * self.contraction[g][d];
                }
                m[b][d] = acc;
            }
        }
        let mut f = cmat4_zero::<T>();
        for b in 0..4 {
            for d in 0..4 {
                f[b][d] = (m[b][d] - m[d][b]) * lam;
            }
        }
        EMFieldSample::from_tensor(f)
    }

    /// The six frame components of the complex tensor in the co-rotating
    /// cylindrical frame at azimuth `theta`, evaluated at cylindrical
    /// coordinates `(t, r, theta, z)`. For a pure mode of chirality `kappa`
    /// these satisfy `components(theta) = e^{i kappa theta} components(0)`.
    pub fn cylindrical_components(&self, t: T, r: T, theta: T, z: T) -> [C<T>; 6] {
        let p = SpacetimePoint::from_cylindrical(t, r, theta, z);
        let sample = self.sample(&p);
        frame_components(&sample.f, &cylindrical_frame(theta))
    }
}

/// `W_{g d}` for a given superposed two-form (see [`PulseField`] docs).
pub fn contraction_matrix<T: Real>(pi: &ConstantTwoForm<T>) -> CMat4<T> {
    let mut w = cmat4_zero();
    for g in 0..4 {
        for d in 0..4 {
            let mut acc = czero();
            for m in 0..4 {
                for b in 0..4 {
                    let sign = levi_civita([g, m, b, d]);
                    if sign == 0 {
                        continue;
                    }
                    let raise = metric_sign::<T>(g) * metric_sign::<T>(m) * metric_sign::<T>(b);
                    acc = acc + pi.comp[m][b] * C::new(T::of(sign as f64) * raise, T::zero());
                }
            }
            w[g][d] = acc;
        }
    }
    w
}

/// Vacuum Maxwell residual magnitudes of an arbitrary `(e, b)` field map,
/// estimated by central finite differences with step `h`:
/// `(|div e|, |div b|, |curl e + dt b|, |curl b - dt e|)` together with the
/// largest first-derivative magnitude encountered (the normalization scale).
pub fn maxwell_residuals_of<T: Real, F>(field: F, p: &SpacetimePoint<T>, h: T) -> ([T; 4], T)
where
    F: Fn(&SpacetimePoint<T>) -> ([T; 3], [T; 3]),
{
    let mut de = [[T::zero(); 3]; 4];
    let mut db = [[T::zero(); 3]; 4];
    let half_inv = (T::of(2.0) * h).recip();
    for mu in 0..4 {
        let (ep, bp) = field(&p.shifted(mu, h));
        let (em, bm) = field(&p.shifted(mu, -h));
        for i in 0..3 {
            de[mu][i] = (ep[i] - em[i]) * half_inv;
            db[mu][i] = (bp[i] - bm[i]) * half_inv;
        }
    }
    let div_e = de[X_IDX][0] + de[Y_IDX][1] + de[Z_IDX][2];
    let div_b = db[X_IDX][0] + db[Y_IDX][1] + db[Z_IDX][2];
    let curl = |d: &[[T; 3]; 4]| {
        [
            d[Y_IDX][2] - d[Z_IDX][1],
            d[Z_IDX][0] - d[X_IDX][2],
            d[X_IDX][1] - d[Y_IDX][0],
        ]
    };
    let ce = curl(&de);
    let cb = curl(&db);
    let mut faraday = T::zero();
    let mut ampere = T::zero();
    for i in 0..3 {
        faraday = faraday.max((ce[i] + db[T_IDX][i]).abs());
        ampere = ampere.max((cb[i] - de[T_IDX][i]).abs());
    }
    let mut scale = T::zero();
    for mu in 0..4 {
        for i in 0..3 {
            scale = scale.max(de[mu][i].abs()).max(db[mu][i].abs());
        }
    }
    ([div_e.abs(), div_b.abs(), faraday, ampere], scale)
}

/// Result of a Maxwell residual probe at one point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MaxwellResiduals<T> {
    /// `|div e|, |div b|, |curl e + dt b|, |curl b - dt e|`.
    pub residuals: [T; 4],
    /// Largest first-derivative magnitude, for relative comparison.
    pub derivative_scale: T,
}

impl<T: Real> MaxwellResiduals<T> {
    pub fn worst_relative(&self) -> T {
        let floor = T::of(1e-300);
        let s = self.derivative_scale.max(floor);
        self.residuals.iter().fold(T::zero(), |acc, r| acc.max(*r / s))
    }
}

/// Finite-difference vacuum residuals of a pulse field at `p`.
///
/// The default step is `1e-5` scaled by the smaller axial width parameter so
/// the stencil stays inside the feature it probes.
pub fn maxwell_residuals<T: Real>(
    field: &PulseField<T>,
    p: &SpacetimePoint<T>,
) -> MaxwellResiduals<T> {
    let params = field.params();
    let h = T::of(1e-5) * T::one().min(params.psi1.min(params.psi2));
    let (residuals, derivative_scale) = maxwell_residuals_of(
        |q| {
            let s = field.sample(q);
            (s.e, s.b)
        },
        p,
        h,
    );
    MaxwellResiduals { residuals, derivative_scale }
}

/// One grid sample row for CSV export.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FieldRow<T> {
    pub t: T,
    pub x: T,
    pub y: T,
    pub z: T,
    pub e: [T; 3],
    pub b: [T; 3],
}

/// Uniform sampling grid specification (inclusive endpoints).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSpec<T> {
    pub t_values: Vec<T>,
    pub x: AxisSpec<T>,
    pub y: AxisSpec<T>,
    pub z: AxisSpec<T>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AxisSpec<T> {
    pub min: T,
    pub max: T,
    pub count: usize,
}

impl<T: Real> AxisSpec<T> {
    pub fn values(&self) -> Vec<T> {
        if self.count <= 1 {
            return vec![self.min];
        }
        let step = (self.max - self.min) / T::of_usize(self.count - 1);
        (0..self.count).map(|i| self.min + step * T::of_usize(i)).collect()
    }
}

/// Sample `e`, `b` on a Cartesian grid; rows ordered `(t, z, y, x)` fastest
/// last, deterministic.
pub fn sample_grid<T: Real>(field: &PulseField<T>, grid: &GridSpec<T>) -> Vec<FieldRow<T>> {
    use rayon::prelude::*;
    let xs = grid.x.values();
    let ys = grid.y.values();
    let zs = grid.z.values();
    let mut points = Vec::new();
    for &t in &grid.t_values {
        for &z in &zs {
            for &y in &ys {
                for &x in &xs {
                    points.push(SpacetimePoint::new(t, x, y, z));
                }
            }
        }
    }
    points
        .par_iter()
        .map(|p| {
            let s = field.sample(p);
            FieldRow { t: p.t, x: p.x, y: p.y, z: p.z, e: s.e, b: s.b }
        })
        .collect()
}

/// CSV serialization of grid samples: header plus one row per sample.
pub fn field_rows_to_csv<T: Real>(rows: &[FieldRow<T>]) -> String {
    let mut out = String::from("t,x,y,z,e_x,e_y,e_z,b_x,b_y,b_z\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.t, r.x, r.y, r.z, r.e[0], r.e[1], r.e[2], r.b[0], r.b[1], r.b[2]
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    type C64 = C<f64>;

    fn mode(family: ModeFamily, kappa: i8) -> ChiralMode {
        ChiralMode::new(family, kappa).unwrap()
    }

    #[test]
    fn ce_zero_is_dz_wedge_dt() {
        let form = hertz_tensor::<f64>(mode(ModeFamily::CE, 0));
        assert_eq!(form.comp[Z_IDX][T_IDX], C64::new(1.0, 0.0));
        assert_eq!(form.comp[T_IDX][Z_IDX], C64::new(-1.0, 0.0));
        let mut nonzero = 0;
        for row in &form.comp {
            for v in row {
                if v.norm() > 0.0 {
                    nonzero += 1;
                }
            }
        }
        assert_eq!(nonzero, 2);
    }

    #[test]
    fn ce_plus_components() {
        let form = hertz_tensor::<f64>(mode(ModeFamily::CE, 1));
        assert_eq!(form.comp[X_IDX][T_IDX], C64::new(1.0, 0.0));
        assert_eq!(form.comp[Y_IDX][T_IDX], C64::new(0.0, 1.0));
    }

    #[test]
    fn cm_zero_is_dx_wedge_dy() {
        // derived by the Hodge map with eps_{txyz} = +1, metric diag(-1,1,1,1)
        let form = hertz_tensor::<f64>(mode(ModeFamily::CM, 0));
        assert_eq!(form.comp[X_IDX][Y_IDX], C64::new(1.0, 0.0));
        assert_eq!(form.comp[Y_IDX][X_IDX], C64::new(-1.0, 0.0));
    }

    #[test]
    fn hodge_squares_to_minus_one_on_two_forms() {
        for m in ChiralMode::ALL {
            let form = hertz_tensor::<f64>(m);
            let twice = form.hodge_dual().hodge_dual();
            for mu in 0..4 {
                for nu in 0..4 {
                    assert!((twice.comp[mu][nu] + form.comp[mu][nu]).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn eigenphase_all_modes() {
        for m in ChiralMode::ALL {
            let dev = eigenphase_check(m, &hertz_tensor::<f64>(m));
            assert!(dev <= 1e-9, "{m}: eigenphase deviation {dev}");
        }
    }

    #[test]
    fn empty_superposition_rejected() {
        let params = PulseParams::new(1.0, 1.0, 1.0).unwrap();
        let err = PulseField::new(params, SuperpositionSpec::<f64>::empty()).unwrap_err();
        assert_eq!(err, FieldError::EmptySuperposition);
    }

    #[test]
    fn potential_is_linear_in_coefficients() {
        let params = PulseParams::new(1.0, 4.0, 0.5).unwrap();
        let spec = SuperpositionSpec::single(mode(ModeFamily::CE, 0))
            .with(mode(ModeFamily::CM, 1), C64::new(0.3, -0.7));
        let field = PulseField::new(params, spec.clone()).unwrap();
        let doubled = PulseField::new(params, spec.scaled(C64::new(2.0, 0.0))).unwrap();
        let p = SpacetimePoint::new(0.7, 1.3, -0.2, -0.4);
        let a1 = field.potential(&p);
        let a2 = doubled.potential(&p);
        for d in 0..4 {
            assert!((a2[d] - a1[d] * C64::new(2.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn field_scales_linearly_in_lambda() {
        let params = PulseParams::new(1.5, 4.0, 0.5).unwrap();
        let field = PulseField::new(params, SuperpositionSpec::single(mode(ModeFamily::CM, -1)))
            .unwrap();
        let twice = field.with_lambda(3.0).unwrap();
        let p = SpacetimePoint::new(0.2, 0.9, 0.4, -1.1);
        let s1 = field.sample(&p);
        let s2 = twice.sample(&p);
        for i in 0..3 {
            assert!((s2.e[i] - 2.0 * s1.e[i]).abs() < 1e-15 * s1.e[i].abs().max(1.0));
            assert!((s2.b[i] - 2.0 * s1.b[i]).abs() < 1e-15 * s1.b[i].abs().max(1.0));
        }
    }

    #[test]
    fn ce_zero_electric_field_is_transverse() {
        let params = PulseParams::new(1.0, 4.0, 0.5).unwrap();
        let field = PulseField::new(params, SuperpositionSpec::single(mode(ModeFamily::CE, 0)))
            .unwrap();
        let s = field.sample(&SpacetimePoint::new(0.7, 1.3, 0.6, -0.4));
        assert_eq!(s.e[2], 0.0);
        let cm = PulseField::new(params, SuperpositionSpec::single(mode(ModeFamily::CM, 0)))
            .unwrap();
        let s = cm.sample(&SpacetimePoint::new(0.7, 1.3, 0.6, -0.4));
        assert_eq!(s.b[2], 0.0);
    }

    #[test]
    fn kappa_zero_field_is_axisymmetric() {
        let params = PulseParams::new(1.0, 4.0, 0.5).unwrap();
        let field = PulseField::new(params, SuperpositionSpec::single(mode(ModeFamily::CE, 0)))
            .unwrap();
        let c0 = field.cylindrical_components(0.7, 1.3, 0.0, -0.4);
        for theta in [0.9, 2.4, 5.5] {
            let cth = field.cylindrical_components(0.7, 1.3, theta, -0.4);
            for k in 0..6 {
                assert!((cth[k] - c0[k]).norm() < 1e-12 * c0[k].norm().max(1e-6));
            }
        }
    }

    #[test]
    fn perturbed_field_fails_divergence_check() {
        let params = PulseParams::new(1.0, 4.0, 0.5).unwrap();
        let field = PulseField::new(params, SuperpositionSpec::single(mode(ModeFamily::CM, 1)))
            .unwrap();
        let p = SpacetimePoint::new(0.3, 0.8, -0.5, 0.2);
        let h = 1e-5;
        // corrupt e_x by a positionally varying 1% factor so div e picks it up
        let (res, scale) = maxwell_residuals_of(
            |q| {
                let s = field.sample(q);
                ([s.e[0] * (1.0 + 0.01 * q.x), s.e[1], s.e[2]], s.b)
            },
            &p,
            h,
        );
        assert!(res[0] > 1e-5 * scale, "div e residual {} scale {}", res[0], scale);
        // and the clean field passes
        let clean = maxwell_residuals(&field, &p);
        assert!(clean.worst_relative() < 1e-5);
    }

    #[test]
    fn csv_header_and_row_count() {
        let params = PulseParams::new(1.0, 2.0, 1.0).unwrap();
        let field = PulseField::new(params, SuperpositionSpec::single(mode(ModeFamily::CE, 1)))
            .unwrap();
        let grid = GridSpec {
            t_values: vec![0.0],
            x: AxisSpec { min: -1.0, max: 1.0, count: 3 },
            y: AxisSpec { min: 0.0, max: 0.0, count: 1 },
            z: AxisSpec { min: -2.0, max: 2.0, count: 5 },
        };
        let rows = sample_grid(&field, &grid);
        assert_eq!(rows.len(), 15);
        let csv = field_rows_to_csv(&rows);
        assert!(csv.starts_with("t,x,y,z,e_x,e_y,e_z,b_x,b_y,b_z\n"));
        assert_eq!(csv.lines().count(), 16);
    }
}
