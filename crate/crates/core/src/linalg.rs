//! Dense matrix helpers shared by the manifold catalog: symmetric and
//! skew parts, polar factors, and the matrix exponential and logarithm.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// `(A - Aᵀ) / 2`
pub fn skew(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a - a.transpose()) * 0.5
}

/// `(A + Aᵀ) / 2`
pub fn sym(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Frobenius inner product `tr(AᵀB)`.
pub fn frob_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}

/// Polar factor `X (XᵀX)^{-1/2}` of a full-column-rank matrix.
///
/// This is the closest matrix with orthonormal columns in Frobenius norm.
pub fn polar_factor(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = x.ncols();
    if p == 1 {
        let nrm = x.norm_squared().sqrt();
        if !(nrm > 0.0) || !nrm.is_finite() {
            return Err(Error::InvalidArgument("polar factor of a zero or non-finite vector".into()));
        }
        return Ok(x / nrm);
    }
    let svd = x.clone().svd(true, true);
    let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(smin > 1e-150) || !smin.is_finite() {
        return Err(Error::InvalidArgument("polar factor of a rank-deficient or non-finite matrix".into()));
    }
    match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => Ok(u * v_t),
        _ => Err(Error::InvalidArgument("singular value decomposition failed".into())),
    }
}

/// Polar factor for a matrix already close to having orthonormal columns.
///
/// Uses the binomial series `(I + E)^{-1/2} ≈ I - E/2 + 3E²/8 - 5E³/16`
/// when `‖E‖_F = ‖XᵀX - I‖_F` is small and falls back to the exact
/// eigendecomposition otherwise. Truncation error is `O(‖E‖⁴)`.
pub fn polar_factor_near(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = x.ncols();
    if p == 1 {
        return polar_factor(x);
    }
    let mut e = x.tr_mul(x);
    for k in 0..p {
        e[(k, k)] -= 1.0;
    }
    let en = e.norm();
    if !en.is_finite() {
        return Err(Error::InvalidArgument("polar factor of a non-finite matrix".into()));
    }
    if en > 1e-4 {
        return polar_factor(x);
    }
    let e2 = &e * &e;
    let e3 = &e2 * &e;
    let mut corr = e * -0.5 + e2 * 0.375 - e3 * 0.3125;
    for k in 0..p {
        corr[(k, k)] += 1.0;
    }
    Ok(x * corr)
}

/// `‖XᵀX - I‖_F`
pub fn orthonormality_residual(x: &DMatrix<f64>) -> f64 {
    let mut g = x.tr_mul(x);
    for k in 0..g.nrows() {
        g[(k, k)] -= 1.0;
    }
    g.norm()
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Matrix exponential by scaling and squaring with the degree-13 Padé
/// approximant.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    let theta13 = 5.371920351148152;
    let norm = one_norm(a);
    let s = if norm > theta13 {
        (norm / theta13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = a * 2f64.powi(-s);
    let id = DMatrix::<f64>::identity(n, n);
    let b = &PADE13;
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    let num = &v + &u;
    let den = &v - &u;
    let mut r = den.lu().solve(&num).expect("Padé denominator is nonsingular for scaled input");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Principal square root by the Denman–Beavers iteration.
fn sqrtm_db(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = DMatrix::<f64>::identity(n, n);
    for _ in 0..100 {
        let yi = y
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidArgument("square root iteration hit a singular matrix".into()))?;
        let zi = z
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidArgument("square root iteration hit a singular matrix".into()))?;
        let y_next = (&y + zi) * 0.5;
        let z_next = (&z + yi) * 0.5;
        let delta = (&y_next - &y).norm();
        y = y_next;
        z = z_next;
        if delta <= 1e-15 * y.norm().max(1.0) {
            return Ok(y);
        }
    }
    Err(Error::InvalidArgument("square root iteration did not converge".into()))
}

/// Principal matrix logarithm by inverse scaling and squaring.
///
/// Square roots are taken until `‖A - I‖₁ ≤ 0.25`; the remaining factor is
/// handled by the series `log A = 2 atanh(Z)`, `Z = (A - I)(A + I)⁻¹`.
/// Requires that no eigenvalue lies on the closed negative real axis.
pub fn logm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "logm needs a square matrix");
    let id = DMatrix::<f64>::identity(n, n);
    let mut m = a.clone();
    let mut k = 0;
    while one_norm(&(&m - &id)) > 0.25 {
        if k > 60 {
            return Err(Error::InvalidArgument("matrix logarithm: too many square roots".into()));
        }
        m = sqrtm_db(&m)?;
        k += 1;
    }
    let den = (&m + &id)
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("matrix logarithm: singular A + I".into()))?;
    let z = (&m - &id) * den;
    let z2 = &z * &z;
    let mut term = z.clone();
    let mut sum = z.clone();
    for j in 1..40 {
        term = &term * &z2;
        let contrib = &term / (2 * j + 1) as f64;
        let cn = contrib.norm();
        sum += contrib;
        if cn < 1e-18 * sum.norm().max(1e-300) {
            break;
        }
    }
    Ok(sum * (2.0 * 2f64.powi(k)))
}

/// Largest rotation angle in `[0, π]` of a (near-)orthogonal matrix.
///
/// For orthogonal `M` with eigenvalues `e^{±iθ_k}` the smallest singular
/// value of `M + I` is `2 cos(θ_max / 2)`.
pub fn max_rotation_angle(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let shifted = m + DMatrix::<f64>::identity(n, n);
    let sv = shifted.singular_values();
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    2.0 * (smin / 2.0).clamp(0.0, 1.0).acos()
}

/// Rotation angles `θ_k ∈ [0, π]`, one per eigenvalue, of an orthogonal matrix.
///
/// The symmetric part of `M` has eigenvalues `cos θ_k`; on each of its
/// eigenvectors the skew part has norm `sin θ_k`.
pub fn rotation_angles(m: &DMatrix<f64>) -> Vec<f64> {
    let eig = SymmetricEigen::new(sym(m));
    let k = skew(m);
    eig.eigenvalues
        .iter()
        .zip(eig.eigenvectors.column_iter())
        .map(|(c, v)| (&k * v).norm().atan2(*c))
        .collect()
}
