//! Catalog of embedded matrix manifolds and their differential-geometric
//! primitives.
//!
//! Every manifold is stored as a real matrix in its ambient Euclidean space
//! and carries the metric induced by the Frobenius inner product of that
//! space. Tangent vectors are ambient matrices of the same shape, and the
//! Riemannian norm of a tangent vector is its Frobenius norm.
//!
//! | kind               | value shape | geodesic distance                        | injectivity radius |
//! |--------------------|-------------|------------------------------------------|--------------------|
//! | `circle`           | 2×1         | `atan2(‖y - ⟨x,y⟩x‖, ⟨x,y⟩)` = arc angle  | π                  |
//! | `sphere:n`         | (n+1)×1     | same as circle                           | π                  |
//! | `stiefel:1:n`      | n×1         | same as circle                           | π                  |
//! | `stiefel:p:n`, p>1 | n×p         | not available                            | not available      |
//! | `so:n`, `o:n`      | n×n         | `‖log(XᵀY)‖_F = sqrt(Σ_k θ_k²)`          | π·√2               |
//! | `torus:k`          | 2k×1        | Euclidean norm of wrapped angle gaps     | π                  |
//!
//! For the rotation groups `θ_k` runs over the arguments of all eigenvalues
//! of `XᵀY`, so a planar rotation by angle θ has distance √2·θ. This is the
//! length of the curve `X exp(tΩ)` measured in the Frobenius norm, i.e. the
//! metric induced by the embedding. Points of `o:n` in different connected
//! components are at infinite distance.
//!
//! Logarithms are refused (with [`Error::Injectivity`]) exactly when the
//! target lies on the cut locus of the base: the antipode on spheres, an
//! opposite angle on some circle factor of the torus, or a relative
//! rotation with an eigen-angle equal to π on the rotation groups.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg;

/// Largest admissible constraint residual for a [`ManifoldPoint`].
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Largest admissible `‖Π(v) - v‖` for a [`TangentVector`], relative to `max(1, ‖v‖)`.
pub const TANGENCY_TOL: f64 = 1e-10;

/// Angular margin below π at which logarithms are refused.
const CUT_LOCUS_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ManifoldKind {
    Circle,
    /// The unit sphere Sⁿ ⊂ Rⁿ⁺¹.
    Sphere(usize),
    /// Orthonormal n×p frames.
    Stiefel { p: usize, n: usize },
    SpecialOrthogonal(usize),
    Orthogonal(usize),
    /// Product of k unit circles, stacked into a 2k×1 column.
    FlatTorus(usize),
}

impl ManifoldKind {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        match *self {
            ManifoldKind::Circle => Ok(()),
            ManifoldKind::Sphere(n) if n < 1 => bad(format!("sphere:{n} needs n >= 1")),
            ManifoldKind::Stiefel { p, n } if p < 1 || p > n => bad(format!("stiefel:{p}:{n} needs 1 <= p <= n")),
            ManifoldKind::SpecialOrthogonal(n) if n < 2 => bad(format!("so:{n} needs n >= 2")),
            ManifoldKind::Orthogonal(n) if n < 2 => bad(format!("o:{n} needs n >= 2")),
            ManifoldKind::FlatTorus(k) if k < 1 => bad(format!("torus:{k} needs k >= 1")),
            _ => Ok(()),
        }
    }

    /// `(rows, cols)` of the ambient matrix.
    pub fn shape(&self) -> (usize, usize) {
        match *self {
            ManifoldKind::Circle => (2, 1),
            ManifoldKind::Sphere(n) => (n + 1, 1),
            ManifoldKind::Stiefel { p, n } => (n, p),
            ManifoldKind::SpecialOrthogonal(n) | ManifoldKind::Orthogonal(n) => (n, n),
            ManifoldKind::FlatTorus(k) => (2 * k, 1),
        }
    }

    /// Dimension of the manifold itself.
    pub fn dimension(&self) -> usize {
        match *self {
            ManifoldKind::Circle => 1,
            ManifoldKind::Sphere(n) => n,
            ManifoldKind::Stiefel { p, n } => n * p - p * (p + 1) / 2,
            ManifoldKind::SpecialOrthogonal(n) | ManifoldKind::Orthogonal(n) => n * (n - 1) / 2,
            ManifoldKind::FlatTorus(k) => k,
        }
    }

    /// Circle, spheres, Stiefel manifolds and the orthogonal groups.
    pub fn is_stiefel_family(&self) -> bool {
        !matches!(self, ManifoldKind::FlatTorus(_))
    }

    /// True when points are square orthogonal matrices.
    pub fn is_square_orthogonal(&self) -> bool {
        match *self {
            ManifoldKind::SpecialOrthogonal(_) | ManifoldKind::Orthogonal(_) => true,
            ManifoldKind::Stiefel { p, n } => p == n,
            _ => false,
        }
    }

    /// Column vectors of unit norm share one code path.
    fn is_unit_vector(&self) -> bool {
        match *self {
            ManifoldKind::Circle | ManifoldKind::Sphere(_) => true,
            ManifoldKind::Stiefel { p, .. } => p == 1,
            _ => false,
        }
    }

    fn is_rotation_group(&self) -> bool {
        matches!(self, ManifoldKind::SpecialOrthogonal(_) | ManifoldKind::Orthogonal(_))
    }

    /// Whether exp/log (and hence the intrinsic flow) are implemented.
    pub fn supports_log(&self) -> bool {
        self.is_unit_vector() || self.is_rotation_group() || matches!(self, ManifoldKind::FlatTorus(_))
    }

    /// Whether the manifold contains a non-contractible loop.
    pub fn is_multiply_connected(&self) -> bool {
        match *self {
            ManifoldKind::Circle | ManifoldKind::FlatTorus(_) => true,
            ManifoldKind::Sphere(n) => n == 1,
            ManifoldKind::Stiefel { p, n } => p + 1 == n || p == n,
            ManifoldKind::SpecialOrthogonal(_) | ManifoldKind::Orthogonal(_) => true,
        }
    }

    /// Every catalog manifold sits on a sphere of the ambient space.
    pub fn constant_norm(&self) -> Option<f64> {
        match *self {
            ManifoldKind::Circle | ManifoldKind::Sphere(_) => Some(1.0),
            ManifoldKind::Stiefel { p, .. } => Some((p as f64).sqrt()),
            ManifoldKind::SpecialOrthogonal(n) | ManifoldKind::Orthogonal(n) => Some((n as f64).sqrt()),
            ManifoldKind::FlatTorus(k) => Some((k as f64).sqrt()),
        }
    }

    fn check_shape(&self, m: &DMatrix<f64>) -> Result<()> {
        let (r, c) = self.shape();
        if m.nrows() != r || m.ncols() != c {
            return Err(Error::Dimension {
                expected: format!("{r}x{c} for {self}"),
                got: format!("{}x{}", m.nrows(), m.ncols()),
            });
        }
        Ok(())
    }

    /// Constraint residual of an ambient matrix.
    pub fn residual(&self, x: &DMatrix<f64>) -> f64 {
        match *self {
            ManifoldKind::FlatTorus(k) => {
                let mut s = 0.0;
                for f in 0..k {
                    let r = x[2 * f] * x[2 * f] + x[2 * f + 1] * x[2 * f + 1] - 1.0;
                    s += r * r;
                }
                s.sqrt()
            }
            ManifoldKind::SpecialOrthogonal(_) => {
                let base = linalg::orthonormality_residual(x);
                if x.determinant() < 0.0 {
                    base + 2.0
                } else {
                    base
                }
            }
            _ => linalg::orthonormality_residual(x),
        }
    }

    /// Orthogonal projection of `a` onto the tangent space at `x`.
    ///
    /// Stiefel family: `Π_X(A) = X skew(XᵀA) + (I - XXᵀ)A`, evaluated as
    /// `A - X sym(XᵀA)`. The torus projects each circle factor separately.
    pub fn project_raw(&self, x: &DMatrix<f64>, a: &DMatrix<f64>) -> DMatrix<f64> {
        match *self {
            ManifoldKind::FlatTorus(k) => {
                let mut out = a.clone();
                for f in 0..k {
                    let (i, j) = (2 * f, 2 * f + 1);
                    let c = x[i] * a[i] + x[j] * a[j];
                    out[i] -= c * x[i];
                    out[j] -= c * x[j];
                }
                out
            }
            _ => {
                let b = x.tr_mul(a);
                a - x * linalg::sym(&b)
            }
        }
    }

    /// Map an ambient matrix near the manifold back onto it.
    ///
    /// Polar factor for the Stiefel family, per-factor normalization on the
    /// torus.
    pub fn retract_raw(&self, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match *self {
            ManifoldKind::FlatTorus(k) => {
                let mut out = a.clone();
                for f in 0..k {
                    let (i, j) = (2 * f, 2 * f + 1);
                    let r = (a[i] * a[i] + a[j] * a[j]).sqrt();
                    if !(r > 0.0) || !r.is_finite() {
                        return Err(Error::InvalidArgument("torus retraction of a zero or non-finite factor".into()));
                    }
                    out[i] /= r;
                    out[j] /= r;
                }
                Ok(out)
            }
            _ => linalg::polar_factor_near(a),
        }
    }

    pub fn exp_raw(&self, x: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match *self {
            _ if self.is_unit_vector() => Ok(sphere_exp(x.as_slice(), v.as_slice(), x.nrows())),
            ManifoldKind::FlatTorus(k) => {
                let mut out = x.clone();
                for f in 0..k {
                    let r = 2 * f..2 * f + 2;
                    let y = sphere_exp(&x.as_slice()[r.clone()], &v.as_slice()[r.clone()], 2);
                    out[2 * f] = y[0];
                    out[2 * f + 1] = y[1];
                }
                Ok(out)
            }
            ManifoldKind::SpecialOrthogonal(_) | ManifoldKind::Orthogonal(_) => {
                let omega = linalg::skew(&x.tr_mul(v));
                Ok(x * linalg::expm(&omega))
            }
            _ => Err(self.no_log("exponential map")),
        }
    }

    pub fn log_raw(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match *self {
            _ if self.is_unit_vector() => sphere_log(x.as_slice(), y.as_slice(), x.nrows()),
            ManifoldKind::FlatTorus(k) => {
                let mut out = DMatrix::zeros(2 * k, 1);
                for f in 0..k {
                    let delta = circle_angle(x[2 * f], x[2 * f + 1], y[2 * f], y[2 * f + 1]);
                    if delta.abs() > std::f64::consts::PI - CUT_LOCUS_MARGIN {
                        return Err(Error::Injectivity(format!("circle factor {f} is at the opposite point")));
                    }
                    // Tangent direction J x = (-x1, x0).
                    out[2 * f] = -delta * x[2 * f + 1];
                    out[2 * f + 1] = delta * x[2 * f];
                }
                Ok(out)
            }
            ManifoldKind::SpecialOrthogonal(_) | ManifoldKind::Orthogonal(_) => {
                if x.determinant().signum() != y.determinant().signum() {
                    return Err(Error::Injectivity("points lie in different connected components".into()));
                }
                let m = x.tr_mul(y);
                let theta = linalg::max_rotation_angle(&m);
                if theta > std::f64::consts::PI - CUT_LOCUS_MARGIN {
                    return Err(Error::Injectivity(format!(
                        "relative rotation angle {theta} reaches π; logarithm not unique"
                    )));
                }
                let omega = linalg::skew(&linalg::logm(&m)?);
                Ok(x * omega)
            }
            _ => Err(self.no_log("logarithm map")),
        }
    }

    pub fn geodesic_distance_raw(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<f64> {
        match *self {
            _ if self.is_unit_vector() => Ok(sphere_angle(x.as_slice(), y.as_slice())),
            ManifoldKind::FlatTorus(k) => {
                let mut s = 0.0;
                for f in 0..k {
                    let d = circle_angle(x[2 * f], x[2 * f + 1], y[2 * f], y[2 * f + 1]);
                    s += d * d;
                }
                Ok(s.sqrt())
            }
            ManifoldKind::SpecialOrthogonal(_) | ManifoldKind::Orthogonal(_) => {
                if x.determinant().signum() != y.determinant().signum() {
                    return Ok(f64::INFINITY);
                }
                let m = x.tr_mul(y);
                Ok(linalg::rotation_angles(&m).iter().map(|t| t * t).sum::<f64>().sqrt())
            }
            _ => Err(self.no_log("geodesic distance")),
        }
    }

    pub fn injectivity_radius(&self) -> Result<f64> {
        use std::f64::consts::{PI, SQRT_2};
        match *self {
            _ if self.is_unit_vector() => Ok(PI),
            ManifoldKind::FlatTorus(_) => Ok(PI),
            ManifoldKind::SpecialOrthogonal(_) | ManifoldKind::Orthogonal(_) => Ok(PI * SQRT_2),
            _ => Err(self.no_log("injectivity radius")),
        }
    }

    /// Draw a point from the uniform (Haar) distribution.
    ///
    /// Stiefel family: `X (XᵀX)^{-1/2}` with `X` standard Gaussian. On SO(n)
    /// the first column is negated when the determinant is negative; this
    /// fixed reflection maps the Haar measure of one component of O(n) onto
    /// the other, so the result is Haar on SO(n).
    pub fn sample_raw<R: Rng + ?Sized>(&self, rng: &mut R) -> DMatrix<f64> {
        let (r, c) = self.shape();
        match *self {
            ManifoldKind::FlatTorus(k) => {
                let mut out = DMatrix::zeros(2 * k, 1);
                for f in 0..k {
                    let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                    out[2 * f] = a.cos();
                    out[2 * f + 1] = a.sin();
                }
                out
            }
            _ => loop {
                let g = DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal));
                if let Ok(mut q) = linalg::polar_factor(&g) {
                    if matches!(self, ManifoldKind::SpecialOrthogonal(_)) && q.determinant() < 0.0 {
                        q.column_mut(0).neg_mut();
                    }
                    break q;
                }
            },
        }
    }

    /// Orthonormal basis of the tangent space at `x`, as ambient matrices.
    pub fn tangent_frame(&self, x: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        let (r, c) = self.shape();
        let d = r * c;
        let mut proj = DMatrix::zeros(d, d);
        for k in 0..d {
            let mut e = DMatrix::zeros(r, c);
            e[k] = 1.0;
            let pe = self.project_raw(x, &e);
            proj.column_mut(k).copy_from_slice(pe.as_slice());
        }
        let proj = linalg::sym(&proj);
        let eig = SymmetricEigen::new(proj);
        let mut frame = Vec::with_capacity(self.dimension());
        for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda > 0.5 {
                let col = eig.eigenvectors.column(k);
                frame.push(DMatrix::from_column_slice(r, c, col.as_slice()));
            }
        }
        frame
    }

    fn no_log(&self, what: &str) -> Error {
        Error::Capability(format!("{what} unsupported on {self}"))
    }
}

impl fmt::Display for ManifoldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ManifoldKind::Circle => write!(f, "circle"),
            ManifoldKind::Sphere(n) => write!(f, "sphere:{n}"),
            ManifoldKind::Stiefel { p, n } => write!(f, "stiefel:{p}:{n}"),
            ManifoldKind::SpecialOrthogonal(n) => write!(f, "so:{n}"),
            ManifoldKind::Orthogonal(n) => write!(f, "o:{n}"),
            ManifoldKind::FlatTorus(k) => write!(f, "torus:{k}"),
        }
    }
}

impl FromStr for ManifoldKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |t: &str| -> Result<usize> {
            t.parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad integer {t:?} in manifold {s:?}")))
        };
        let kind = match parts.as_slice() {
            ["circle"] => ManifoldKind::Circle,
            ["sphere", n] => ManifoldKind::Sphere(num(n)?),
            ["stiefel", p, n] => ManifoldKind::Stiefel { p: num(p)?, n: num(n)? },
            ["so", n] => ManifoldKind::SpecialOrthogonal(num(n)?),
            ["o", n] => ManifoldKind::Orthogonal(num(n)?),
            ["torus", k] => ManifoldKind::FlatTorus(num(k)?),
            _ => return Err(Error::Parse(format!("unknown manifold {s:?}"))),
        };
        kind.validate()?;
        Ok(kind)
    }
}

fn sphere_angle(x: &[f64], y: &[f64]) -> f64 {
    let c: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let s: f64 = x.iter().zip(y).map(|(a, b)| (b - c * a).powi(2)).sum::<f64>().sqrt();
    s.atan2(c)
}

fn sphere_exp(x: &[f64], v: &[f64], rows: usize) -> DMatrix<f64> {
    let t = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if t == 0.0 {
        return DMatrix::from_column_slice(rows, 1, x);
    }
    let (s, c) = t.sin_cos();
    DMatrix::from_iterator(rows, 1, x.iter().zip(v).map(|(a, b)| c * a + s * b / t))
}

fn sphere_log(x: &[f64], y: &[f64], rows: usize) -> Result<DMatrix<f64>> {
    let c: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let w: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - c * a).collect();
    let s = w.iter().map(|a| a * a).sum::<f64>().sqrt();
    let theta = s.atan2(c);
    if theta > std::f64::consts::PI - CUT_LOCUS_MARGIN {
        return Err(Error::Injectivity("target is the antipode of the base".into()));
    }
    if s == 0.0 {
        return Ok(DMatrix::zeros(rows, 1));
    }
    Ok(DMatrix::from_iterator(rows, 1, w.into_iter().map(|a| theta * a / s)))
}

/// Signed angle from `(x0, x1)` to `(y0, y1)` in `(-π, π]`.
fn circle_angle(x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let dot = x0 * y0 + x1 * y1;
    let cross = x0 * y1 - x1 * y0;
    let a = cross.atan2(dot);
    if a == -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        a
    }
}

/// An element of a catalog manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldPoint {
    kind: ManifoldKind,
    value: DMatrix<f64>,
}

impl ManifoldPoint {
    /// Checks shape and feasibility (residual ≤ [`FEASIBILITY_TOL`]).
    pub fn new(kind: ManifoldKind, value: DMatrix<f64>) -> Result<Self> {
        kind.validate()?;
        kind.check_shape(&value)?;
        let res = kind.residual(&value);
        if !(res <= FEASIBILITY_TOL) {
            return Err(Error::Infeasible(res));
        }
        Ok(Self { kind, value })
    }

    /// Project an arbitrary full-rank ambient matrix onto the manifold.
    pub fn from_ambient(kind: ManifoldKind, value: &DMatrix<f64>) -> Result<Self> {
        kind.validate()?;
        kind.check_shape(value)?;
        let mut q = kind.retract_raw(value)?;
        if matches!(kind, ManifoldKind::SpecialOrthogonal(_)) && q.determinant() < 0.0 {
            return Err(Error::InvalidArgument("ambient matrix retracts to determinant -1".into()));
        }
        if kind.residual(&q) > FEASIBILITY_TOL {
            q = linalg::polar_factor(&q)?;
        }
        Self::new(kind, q)
    }

    /// Point on the circle at the given angle.
    pub fn circle(angle: f64) -> Self {
        Self {
            kind: ManifoldKind::Circle,
            value: DMatrix::from_column_slice(2, 1, &[angle.cos(), angle.sin()]),
        }
    }

    /// Point on the flat torus with the given per-factor angles.
    pub fn torus(angles: &[f64]) -> Self {
        let k = angles.len();
        let mut v = DMatrix::zeros(2 * k, 1);
        for (f, a) in angles.iter().enumerate() {
            v[2 * f] = a.cos();
            v[2 * f + 1] = a.sin();
        }
        Self { kind: ManifoldKind::FlatTorus(k), value: v }
    }

    pub(crate) fn from_parts_unchecked(kind: ManifoldKind, value: DMatrix<f64>) -> Self {
        Self { kind, value }
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn value(&self) -> &DMatrix<f64> {
        &self.value
    }

    pub fn into_value(self) -> DMatrix<f64> {
        self.value
    }

    pub fn residual(&self) -> f64 {
        self.kind.residual(&self.value)
    }

    /// Per-factor angles; only meaningful on the circle and the torus.
    pub fn angles(&self) -> Vec<f64> {
        self.value
            .as_slice()
            .chunks(2)
            .map(|c| c[1].atan2(c[0]))
            .collect()
    }
}

/// A tangent vector together with its base point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    base: ManifoldPoint,
    value: DMatrix<f64>,
}

impl TangentVector {
    /// Checks shape and tangency.
    pub fn new(base: ManifoldPoint, value: DMatrix<f64>) -> Result<Self> {
        base.kind.check_shape(&value)?;
        let off = (base.kind.project_raw(&base.value, &value) - &value).norm();
        let scale = value.norm().max(1.0);
        if off > TANGENCY_TOL * scale {
            return Err(Error::InvalidArgument(format!("vector is not tangent: ‖Π(v) - v‖ = {off:e}")));
        }
        Ok(Self { base, value })
    }

    pub fn zero(base: &ManifoldPoint) -> Self {
        let (r, c) = base.kind.shape();
        Self { base: base.clone(), value: DMatrix::zeros(r, c) }
    }

    pub fn base(&self) -> &ManifoldPoint {
        &self.base
    }

    pub fn value(&self) -> &DMatrix<f64> {
        &self.value
    }

    /// Riemannian norm, i.e. the Frobenius norm of the ambient value.
    pub fn norm(&self) -> f64 {
        self.value.norm()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { base: self.base.clone(), value: &self.value * s }
    }
}

pub fn project(base: &ManifoldPoint, ambient: &DMatrix<f64>) -> Result<TangentVector> {
    base.kind.check_shape(ambient)?;
    Ok(TangentVector {
        base: base.clone(),
        value: base.kind.project_raw(&base.value, ambient),
    })
}

pub fn exp_map(base: &ManifoldPoint, v: &TangentVector) -> Result<ManifoldPoint> {
    if v.base.kind != base.kind {
        return Err(Error::KindMismatch(base.kind.to_string(), v.base.kind.to_string()));
    }
    let y = base.kind.exp_raw(&base.value, &v.value)?;
    Ok(ManifoldPoint { kind: base.kind, value: y })
}

pub fn log_map(base: &ManifoldPoint, target: &ManifoldPoint) -> Result<TangentVector> {
    same_kind(base, target)?;
    let v = base.kind.log_raw(&base.value, &target.value)?;
    Ok(TangentVector { base: base.clone(), value: v })
}

pub fn geodesic_distance(x: &ManifoldPoint, y: &ManifoldPoint) -> Result<f64> {
    same_kind(x, y)?;
    x.kind.geodesic_distance_raw(&x.value, &y.value)
}

pub fn chordal_distance(x: &ManifoldPoint, y: &ManifoldPoint) -> Result<f64> {
    same_kind(x, y)?;
    Ok((&x.value - &y.value).norm())
}

pub fn injectivity_radius(x: &ManifoldPoint) -> Result<f64> {
    x.kind.injectivity_radius()
}

pub fn sample_uniform<R: Rng + ?Sized>(kind: ManifoldKind, rng: &mut R) -> ManifoldPoint {
    ManifoldPoint { kind, value: kind.sample_raw(rng) }
}

/// A Gaussian ambient matrix projected to the tangent space at `base`.
pub fn random_tangent<R: Rng + ?Sized>(base: &ManifoldPoint, rng: &mut R) -> TangentVector {
    let (r, c) = base.kind.shape();
    let g = DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal));
    TangentVector { base: base.clone(), value: base.kind.project_raw(&base.value, &g) }
}

fn same_kind(x: &ManifoldPoint, y: &ManifoldPoint) -> Result<()> {
    if x.kind != y.kind {
        return Err(Error::KindMismatch(x.kind.to_string(), y.kind.to_string()));
    }
    Ok(())
}
