//! Dense linear-algebra helpers shared by the real (ACS) and complex
//! (time-only) pipelines. Everything here is generic over nalgebra's
//! `ComplexField` with `f64` as the real field.

use nalgebra::{ComplexField, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::Complex64;

/// Relative singular-value threshold used for every rank decision.
pub const RANK_TOL: f64 = 1e-8;

/// Scalars the pipeline can run on: `f64` for ACS, `Complex64` for the
/// complex baseline.
pub trait Scalar: ComplexField<RealField = f64> + Copy + Send + Sync {
    /// Standard Gaussian sample (unit variance per scalar).
    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Scalar for f64 {
    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }
}

impl Scalar for Complex64 {
    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }
}

/// Numerical rank and relative conditioning of a matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankReport {
    pub rank: usize,
    /// `σ_min / σ_max` over the `min(rows, cols)` singular values (0 for a
    /// zero or empty matrix).
    pub sigma_min_rel: f64,
}

pub fn singular_values<S: Scalar>(m: &DMatrix<S>) -> DVector<f64> {
    if m.is_empty() {
        return DVector::zeros(0);
    }
    m.clone().svd(false, false).singular_values
}

/// Rank as the count of singular values above `tol · σ_max`.
pub fn rank_with_tol<S: Scalar>(m: &DMatrix<S>, tol: f64) -> RankReport {
    let sv = singular_values(m);
    rank_from_singular_values(sv.as_slice(), tol)
}

pub fn rank_from_singular_values(sv: &[f64], tol: f64) -> RankReport {
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    if sv.is_empty() || max == 0.0 {
        return RankReport {
            rank: 0,
            sigma_min_rel: 0.0,
        };
    }
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    RankReport {
        rank: sv.iter().filter(|&&s| s > tol * max).count(),
        sigma_min_rel: min / max,
    }
}

pub fn rank<S: Scalar>(m: &DMatrix<S>) -> usize {
    rank_with_tol(m, RANK_TOL).rank
}

/// Complete unitary basis `Q` of `S^rows` from a column-pivoted Householder QR
/// of `m` (zero-padded to at least square), together with the numerical rank
/// of `m` from its singular values. The first `rank` columns of `Q` span the
/// column space of `m`; the rest are orthogonal to it at working precision.
fn full_left_basis<S: Scalar>(m: &DMatrix<S>, tol: f64) -> (DMatrix<S>, usize) {
    let rows = m.nrows();
    let rank = rank_with_tol(m, tol).rank;
    let padded = if m.ncols() >= rows {
        m.clone()
    } else {
        let mut pad = DMatrix::zeros(rows, rows);
        pad.view_mut((0, 0), (rows, m.ncols())).copy_from(m);
        pad
    };
    let q = padded.col_piv_qr().q();
    (q.columns(0, rows).into_owned(), rank)
}

/// Orthonormal basis of the column space of `m` and of its orthogonal
/// complement, split at the relative threshold `tol`.
pub fn column_space_split<S: Scalar>(m: &DMatrix<S>, tol: f64) -> (DMatrix<S>, DMatrix<S>) {
    let rows = m.nrows();
    let (q, r) = full_left_basis(m, tol);
    (
        q.columns(0, r).into_owned(),
        q.columns(r, rows - r).into_owned(),
    )
}

pub fn orthonormal_basis<S: Scalar>(m: &DMatrix<S>, tol: f64) -> DMatrix<S> {
    column_space_split(m, tol).0
}

/// Orthonormal basis (as columns) of the right null space of `m`.
pub fn null_space<S: Scalar>(m: &DMatrix<S>, tol: f64) -> DMatrix<S> {
    column_space_split(&m.adjoint(), tol).1
}

/// Least-squares solution of `m x = b` for a tall `m` of full column rank,
/// via Householder QR.
pub fn least_squares<S: Scalar>(m: &DMatrix<S>, b: &DMatrix<S>) -> Option<DMatrix<S>> {
    assert!(m.nrows() >= m.ncols(), "least squares needs at least as many rows as columns");
    let qr = m.clone().qr();
    let rhs = qr.q().adjoint() * b;
    qr.r().solve_upper_triangular(&rhs)
}

/// Unit row vector `r` minimizing `‖r·m‖`, sign-fixed: for a `(n+1) × n`
/// matrix of full column rank this is its left null vector.
pub fn left_null_row<S: Scalar>(m: &DMatrix<S>) -> DVector<S> {
    let (q, _) = full_left_basis(m, RANK_TOL);
    let n = q.ncols();
    // Left null vectors of m: columns u of Q with uᴴ m = 0; the row is uᴴ.
    let row = q.column(n - 1).map(|x| x.conjugate());
    sign_fixed(row)
}

/// Scale a vector by a unit-modulus factor so that its first non-negligible
/// coordinate is real and positive.
pub fn sign_fixed<S: Scalar>(mut v: DVector<S>) -> DVector<S> {
    let scale = v.iter().map(|x| x.modulus()).fold(0.0, f64::max);
    if scale == 0.0 {
        return v;
    }
    if let Some(lead) = v.iter().find(|x| x.modulus() > 1e-12 * scale).copied() {
        let phase = lead.conjugate().unscale(lead.modulus());
        v.iter_mut().for_each(|x| *x *= phase);
    }
    v
}

pub fn normalized<S: Scalar>(v: DVector<S>) -> DVector<S> {
    let n = v.norm();
    if n == 0.0 {
        v
    } else {
        v.unscale(n)
    }
}

/// Copy of `m` with every non-zero column scaled to unit Euclidean norm.
pub fn normalize_columns<S: Scalar>(m: &DMatrix<S>) -> DMatrix<S> {
    let mut out = m.clone();
    for mut col in out.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col.unscale_mut(n);
        }
    }
    out
}

/// `‖Mᴴ M − I‖_max`, the deviation of the columns from orthonormality.
pub fn orthonormality_defect<S: Scalar>(m: &DMatrix<S>) -> f64 {
    let g = m.adjoint() * m;
    let mut worst = 0.0_f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { S::one() } else { S::zero() };
            worst = worst.max((g[(i, j)] - target).modulus());
        }
    }
    worst
}

/// Random `n × k` matrix with orthonormal columns: QR of a Gaussian draw with
/// the diagonal of `R` made real-positive (Haar distributed for `k = n`).
pub fn random_orthonormal<S: Scalar, R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> DMatrix<S> {
    assert!(k <= n, "cannot fit {k} orthonormal columns in dimension {n}");
    let g = DMatrix::<S>::from_fn(n, k, |_, _| S::gaussian(rng));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for (j, mut col) in q.column_iter_mut().enumerate() {
        let d = r[(j, j)];
        let m = d.modulus();
        if m > 0.0 {
            let phase = d.unscale(m);
            col.iter_mut().for_each(|x| *x *= phase);
        }
    }
    q
}

/// `‖a‖_F / ‖b‖_F`, or `‖a‖_F` itself when `b` vanishes.
pub fn relative_norm<S: Scalar>(a: &DMatrix<S>, b: &DMatrix<S>) -> f64 {
    let denom = b.norm();
    if denom == 0.0 {
        a.norm()
    } else {
        a.norm() / denom
    }
}
