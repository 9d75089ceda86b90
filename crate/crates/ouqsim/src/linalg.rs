//! Dense complex linear algebra on small matrices.
//!
//! Thin safe wrappers around the LAPACK routines the crate needs (zheev,
//! zgeev, zgesv) plus a Padé scaling-and-squaring matrix exponential. All
//! matrices here are a few dozen rows at most, so everything copies into
//! column-major scratch buffers and back.

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use thiserror::Error;

pub type CMat = Array2<Complex64>;
pub type CVec = Array1<Complex64>;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("LAPACK {routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },
}

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Conjugate transpose.
pub fn dagger(m: &CMat) -> CMat {
    m.t().mapv(|z| z.conj())
}

/// Hermitian part (m + m†)/2.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + &dagger(m)).mapv(|z| z * 0.5)
}

pub fn to_complex(m: &Array2<f64>) -> CMat {
    m.mapv(c)
}

pub fn real_part(m: &CMat) -> Array2<f64> {
    m.mapv(|z| z.re)
}

pub fn identity(n: usize) -> CMat {
    CMat::eye(n)
}

/// Largest entry magnitude.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_real(m: &Array2<f64>) -> f64 {
    m.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Deviation from Hermiticity, max |m - m†|.
pub fn hermiticity_deviation(m: &CMat) -> f64 {
    max_abs(&(m - &dagger(m)))
}

pub fn trace(m: &CMat) -> Complex64 {
    m.diag().sum()
}

fn square_dim(m: &CMat) -> Result<usize, LinalgError> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(LinalgError::NotSquare(n, m.ncols()));
    }
    Ok(n)
}

/// Row-major `Array2` -> column-major scratch buffer.
fn to_col_major(m: &CMat) -> Vec<Complex64> {
    let n = m.nrows();
    let p = m.ncols();
    let mut buf = Vec::with_capacity(n * p);
    for j in 0..p {
        for i in 0..n {
            buf.push(m[[i, j]]);
        }
    }
    buf
}

fn from_col_major(buf: &[Complex64], n: usize, p: usize) -> CMat {
    CMat::from_shape_fn((n, p), |(i, j)| buf[j * n + i])
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Returns eigenvalues in ascending order and the unitary matrix with the
/// eigenvectors as columns. Each column's phase is fixed so that its largest
/// entry is real and positive, which keeps downstream output deterministic.
pub fn eigh(m: &CMat) -> Result<(Array1<f64>, CMat), LinalgError> {
    let n = square_dim(m)?;
    let mut a = to_col_major(m);
    let mut w = vec![0.0f64; n];
    let mut rwork = vec![0.0f64; (3 * n).max(1)];
    let mut info = 0;
    // workspace query
    let mut work = vec![Complex64::default(); 1];
    unsafe {
        lapack::zheev(
            b'V', b'L', n as i32, &mut a, n as i32, &mut w, &mut work, -1, &mut rwork, &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::Lapack { routine: "zheev", info });
    }
    let lwork = work[0].re as usize;
    let mut work = vec![Complex64::default(); lwork.max(1)];
    unsafe {
        lapack::zheev(
            b'V',
            b'L',
            n as i32,
            &mut a,
            n as i32,
            &mut w,
            &mut work,
            lwork as i32,
            &mut rwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::Lapack { routine: "zheev", info });
    }
    let mut vecs = from_col_major(&a, n, n);
    fix_column_phases(&mut vecs);
    Ok((Array1::from(w), vecs))
}

/// Rotate each column so its largest-magnitude entry is real positive.
fn fix_column_phases(vecs: &mut CMat) {
    let n = vecs.nrows();
    for j in 0..vecs.ncols() {
        let mut best = 0usize;
        let mut best_mag = 0.0f64;
        for i in 0..n {
            let mag = vecs[[i, j]].norm();
            if mag > best_mag + 1e-12 {
                best_mag = mag;
                best = i;
            }
        }
        if best_mag > 0.0 {
            let phase = vecs[[best, j]] / c(best_mag);
            let rot = phase.conj();
            for i in 0..n {
                vecs[[i, j]] *= rot;
            }
        }
    }
}

/// Eigendecomposition of a general complex matrix (right eigenvectors).
pub fn eig(m: &CMat) -> Result<(CVec, CMat), LinalgError> {
    let n = square_dim(m)?;
    let mut a = to_col_major(m);
    let mut w = vec![Complex64::default(); n];
    let mut vl = vec![Complex64::default(); 1];
    let mut vr = vec![Complex64::default(); n * n];
    let mut rwork = vec![0.0f64; (2 * n).max(1)];
    let mut info = 0;
    let mut work = vec![Complex64::default(); 1];
    unsafe {
        lapack::zgeev(
            b'N', b'V', n as i32, &mut a, n as i32, &mut w, &mut vl, 1, &mut vr, n as i32,
            &mut work, -1, &mut rwork, &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::Lapack { routine: "zgeev", info });
    }
    let lwork = work[0].re as usize;
    let mut work = vec![Complex64::default(); lwork.max(1)];
    unsafe {
        lapack::zgeev(
            b'N',
            b'V',
            n as i32,
            &mut a,
            n as i32,
            &mut w,
            &mut vl,
            1,
            &mut vr,
            n as i32,
            &mut work,
            lwork as i32,
            &mut rwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::Lapack { routine: "zgeev", info });
    }
    Ok((CVec::from(w), from_col_major(&vr, n, n)))
}

/// Eigenvalues of a real matrix (via the complex solver).
pub fn eigvals_real(m: &Array2<f64>) -> Result<CVec, LinalgError> {
    let (w, _) = eig(&to_complex(m))?;
    Ok(w)
}

/// Solve A X = B for dense complex A (multiple right-hand sides).
pub fn solve(a: &CMat, b: &CMat) -> Result<CMat, LinalgError> {
    let n = square_dim(a)?;
    if b.nrows() != n {
        return Err(LinalgError::DimensionMismatch(n, b.nrows()));
    }
    let nrhs = b.ncols();
    let mut af = to_col_major(a);
    let mut bf = to_col_major(b);
    let mut ipiv = vec![0i32; n];
    let mut info = 0;
    unsafe {
        lapack::zgesv(
            n as i32,
            nrhs as i32,
            &mut af,
            n as i32,
            &mut ipiv,
            &mut bf,
            n as i32,
            &mut info,
        );
    }
    if info != 0 {
        return Err(LinalgError::Lapack { routine: "zgesv", info });
    }
    Ok(from_col_major(&bf, n, nrhs))
}

pub fn solve_vec(a: &CMat, b: &CVec) -> Result<CVec, LinalgError> {
    let n = b.len();
    let bm = b.clone().into_shape_with_order((n, 1)).expect("vector reshape");
    let x = solve(a, &bm)?;
    Ok(x.column(0).to_owned())
}

pub fn inverse(a: &CMat) -> Result<CMat, LinalgError> {
    let n = square_dim(a)?;
    solve(a, &identity(n))
}

fn one_norm(m: &CMat) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        let s: f64 = m.column(j).iter().map(|z| z.norm()).sum();
        best = best.max(s);
    }
    best
}

/// Matrix exponential by Padé-13 scaling and squaring.
pub fn expm(m: &CMat) -> Result<CMat, LinalgError> {
    const THETA_13: f64 = 5.371920351148152;
    const B: [f64; 14] = [
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
    let n = square_dim(m)?;
    let norm = one_norm(m);
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let a = m.mapv(|z| z / c(2f64.powi(s)));
    let id = identity(n);
    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);
    let u_inner = a6.mapv(|z| z * c(B[13]))
        + a4.mapv(|z| z * c(B[11]))
        + a2.mapv(|z| z * c(B[9]));
    let u = a.dot(
        &(a6.dot(&u_inner)
            + a6.mapv(|z| z * c(B[7]))
            + a4.mapv(|z| z * c(B[5]))
            + a2.mapv(|z| z * c(B[3]))
            + id.mapv(|z| z * c(B[1]))),
    );
    let v_inner = a6.mapv(|z| z * c(B[12]))
        + a4.mapv(|z| z * c(B[10]))
        + a2.mapv(|z| z * c(B[8]));
    let v = a6.dot(&v_inner)
        + a6.mapv(|z| z * c(B[6]))
        + a4.mapv(|z| z * c(B[4]))
        + a2.mapv(|z| z * c(B[2]))
        + id.mapv(|z| z * c(B[0]));
    let mut r = solve(&(&v - &u), &(&v + &u))?;
    for _ in 0..s {
        r = r.dot(&r);
    }
    Ok(r)
}

/// Real matrix exponential.
pub fn expm_real(m: &Array2<f64>) -> Result<Array2<f64>, LinalgError> {
    Ok(real_part(&expm(&to_complex(m))?))
}

/// phi1(z, t) = (exp(z t) - 1)/z, the first phi-function of exponential
/// integrators; continuous at z = 0 where it equals t.
pub fn phi1(z: Complex64, t: f64) -> Complex64 {
    let zt = z * c(t);
    if zt.norm() < 1e-3 {
        // Taylor: t (1 + zt/2 + zt^2/6 + zt^3/24 + zt^4/120)
        let mut acc = c(1.0);
        let mut term = c(1.0);
        for k in 2..=6 {
            term = term * zt / c(k as f64);
            acc += term;
        }
        c(t) * acc
    } else {
        (zt.exp() - c(1.0)) / z
    }
}

/// Lower Cholesky factor of a symmetric positive semidefinite real matrix.
///
/// Pivots that fall below `-tol` fail; pivots in `[-tol, 0]` are treated as
/// zero (rank-deficient but valid PSD input).
pub fn cholesky_psd(a: &Array2<f64>, tol: f64) -> Option<Array2<f64>> {
    let n = a.nrows();
    if a.ncols() != n {
        return None;
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if d < -tol {
            return None;
        }
        let d = d.max(0.0);
        let lj = d.sqrt();
        l[[j, j]] = lj;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = if lj > 0.0 { s / lj } else { 0.0 };
        }
    }
    Some(l)
}

/// Symmetric square root of a PSD real matrix via eigendecomposition.
/// Eigenvalues in `[-clip, 0)` are clipped to zero.
pub fn sqrtm_psd(a: &Array2<f64>, clip: f64) -> Result<Array2<f64>, LinalgError> {
    let (w, u) = eigh(&to_complex(a))?;
    let n = a.nrows();
    let mut root = CMat::zeros((n, n));
    for k in 0..n {
        let lam = if w[k] < 0.0 {
            if w[k] < -clip {
                0.0 // clipped; caller validates PSD-ness separately
            } else {
                0.0
            }
        } else {
            w[k]
        };
        let s = c(lam.sqrt());
        for i in 0..n {
            for j in 0..n {
                root[[i, j]] += u[[i, k]] * s * u[[j, k]].conj();
            }
        }
    }
    Ok(real_part(&root))
}
