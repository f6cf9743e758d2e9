//! Channel realizations and the lifts that turn complex channel coefficients
//! into structured extended-channel matrices.
//!
//! Two lifts are supported:
//!
//! * ACS (asymmetric complex signaling) over `T` symbol extensions maps a
//!   complex gain `h = |h|e^{jφ}` to the real `2T × 2T` matrix
//!   `|h| · (I_T ⊗ U(φ))`, with `U(φ)` the 2-D rotation by `φ`.
//! * Time-only extension maps `h` to the complex `T × T` matrix `h · I_T`.
//!
//! Both lifts are ring homomorphisms, applied entrywise to matrices.

use nalgebra::{DMatrix, Matrix2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{IaError, Result};
use crate::linalg::{self, Scalar};
use crate::seed;
use crate::Complex64;

/// Relative singular-value floor a channel matrix must clear to count as
/// full column rank.
pub const FULL_RANK_TOL: f64 = 1e-10;

const MAX_REDRAWS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Real-valued signaling on real and imaginary parts separately.
    Acs,
    /// Proper complex signaling with symbol extensions only.
    TimeOnly,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Acs => "acs",
            Scheme::TimeOnly => "time-only",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = IaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "acs" => Ok(Scheme::Acs),
            "time-only" | "time_only" | "timeonly" => Ok(Scheme::TimeOnly),
            other => Err(IaError::InvalidArgument(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Signaling scheme plus the number of symbol extensions `T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionMode {
    pub scheme: Scheme,
    pub extensions: usize,
}

impl ExtensionMode {
    pub fn new(scheme: Scheme, extensions: usize) -> Self {
        ExtensionMode { scheme, extensions }
    }

    /// The scheme's standard extension count for `p` transmit antennas,
    /// `T = 2p + 1`.
    pub fn for_antennas(scheme: Scheme, p: usize) -> Self {
        ExtensionMode::new(scheme, extensions_for(p))
    }

    /// Side of the square matrix one complex coefficient lifts to.
    pub fn block_size(&self) -> usize {
        match self.scheme {
            Scheme::Acs => 2 * self.extensions,
            Scheme::TimeOnly => self.extensions,
        }
    }
}

/// `T = 2p + 1`.
pub fn extensions_for(p: usize) -> usize {
    2 * p + 1
}

/// Scalar types the signaling pipeline runs on. `f64` realizes ACS,
/// `Complex64` the time-only baseline.
pub trait Signal: Scalar {
    const SCHEME: Scheme;
    /// Real dimensions per lifted coordinate of one complex channel use.
    const REAL_DIMS: usize;

    /// Lift of one complex coefficient over `t` extensions.
    fn lift_scalar(h: Complex64, t: usize) -> DMatrix<Self>;

    fn block_size(t: usize) -> usize {
        t * Self::REAL_DIMS
    }

    /// `lift(h) · x` without forming the lifted matrix.
    fn lifted_mul(h: Complex64, x: &DMatrix<Self>) -> DMatrix<Self>;
}

impl Signal for f64 {
    const SCHEME: Scheme = Scheme::Acs;
    const REAL_DIMS: usize = 2;

    fn lift_scalar(h: Complex64, t: usize) -> DMatrix<f64> {
        // |h|·U(arg h) = [[Re h, −Im h], [Im h, Re h]]
        let mut m = DMatrix::zeros(2 * t, 2 * t);
        for k in 0..t {
            let o = 2 * k;
            m[(o, o)] = h.re;
            m[(o, o + 1)] = -h.im;
            m[(o + 1, o)] = h.im;
            m[(o + 1, o + 1)] = h.re;
        }
        m
    }

    fn lifted_mul(h: Complex64, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(x.nrows(), x.ncols());
        for c in 0..x.ncols() {
            for k in (0..x.nrows()).step_by(2) {
                let (a, b) = (x[(k, c)], x[(k + 1, c)]);
                out[(k, c)] = h.re * a - h.im * b;
                out[(k + 1, c)] = h.im * a + h.re * b;
            }
        }
        out
    }
}

impl Signal for Complex64 {
    const SCHEME: Scheme = Scheme::TimeOnly;
    const REAL_DIMS: usize = 1;

    fn lift_scalar(h: Complex64, t: usize) -> DMatrix<Complex64> {
        DMatrix::from_diagonal_element(t, t, h)
    }

    fn lifted_mul(h: Complex64, x: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        x * h
    }
}

/// Lift every entry of a complex matrix, giving a block matrix whose
/// `(q, r)` block is `lift(m[q, r])`.
pub fn lift_matrix_as<S: Signal>(m: &DMatrix<Complex64>, t: usize) -> DMatrix<S> {
    let b = S::block_size(t);
    let mut out = DMatrix::zeros(m.nrows() * b, m.ncols() * b);
    for q in 0..m.nrows() {
        for r in 0..m.ncols() {
            let h = m[(q, r)];
            if h != Complex64::new(0.0, 0.0) {
                out.view_mut((q * b, r * b), (b, b))
                    .copy_from(&S::lift_scalar(h, t));
            }
        }
    }
    out
}

/// `lift(m) · x` for a complex matrix `m`, block by block without forming the
/// lift.
pub fn lifted_apply<S: Signal>(m: &DMatrix<Complex64>, x: &DMatrix<S>) -> DMatrix<S> {
    assert_eq!(x.nrows() % m.ncols().max(1), 0, "operand rows must be a multiple of the lifted columns");
    let b = x.nrows() / m.ncols().max(1);
    let mut out = DMatrix::zeros(m.nrows() * b, x.ncols());
    for r in 0..m.ncols() {
        let xr = x.rows(r * b, b).into_owned();
        for q in 0..m.nrows() {
            let h = m[(q, r)];
            if h != Complex64::new(0.0, 0.0) {
                let mut dst = out.rows_mut(q * b, b);
                dst += S::lifted_mul(h, &xr);
            }
        }
    }
    out
}

/// A lifted matrix, real for ACS and complex for the time-only baseline.
#[derive(Debug, Clone, PartialEq)]
pub enum Lifted {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

impl Lifted {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Lifted::Real(m) => m.shape(),
            Lifted::Complex(m) => m.shape(),
        }
    }

    pub fn as_real(&self) -> Option<&DMatrix<f64>> {
        match self {
            Lifted::Real(m) => Some(m),
            Lifted::Complex(_) => None,
        }
    }

    pub fn as_complex(&self) -> Option<&DMatrix<Complex64>> {
        match self {
            Lifted::Complex(m) => Some(m),
            Lifted::Real(_) => None,
        }
    }
}

pub fn lift_scalar(h: Complex64, mode: ExtensionMode) -> Lifted {
    match mode.scheme {
        Scheme::Acs => Lifted::Real(f64::lift_scalar(h, mode.extensions)),
        Scheme::TimeOnly => Lifted::Complex(Complex64::lift_scalar(h, mode.extensions)),
    }
}

pub fn lift_matrix(m: &DMatrix<Complex64>, mode: ExtensionMode) -> Lifted {
    match mode.scheme {
        Scheme::Acs => Lifted::Real(lift_matrix_as::<f64>(m, mode.extensions)),
        Scheme::TimeOnly => Lifted::Complex(lift_matrix_as::<Complex64>(m, mode.extensions)),
    }
}

/// The 2×2 rotation `[[cos φ, −sin φ], [sin φ, cos φ]]`.
pub fn rotation(phi: f64) -> Matrix2<f64> {
    let (s, c) = phi.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// One network realization: the nine `(p+1) × p` complex matrices `H[j][i]`
/// from transmitter `i` to receiver `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraw {
    pub p: usize,
    pub seed: u64,
    h: [[DMatrix<Complex64>; 3]; 3],
}

impl ChannelDraw {
    /// Channel from transmitter `i` to receiver `j` (both 1-based).
    pub fn h(&self, j: usize, i: usize) -> &DMatrix<Complex64> {
        &self.h[j - 1][i - 1]
    }

    /// Build a draw from explicit matrices, indexed `[receiver][transmitter]`
    /// from 0.
    pub fn from_matrices(p: usize, seed: u64, h: [[DMatrix<Complex64>; 3]; 3]) -> Result<Self> {
        if p < 2 {
            return Err(IaError::InvalidArgument(format!("p must be at least 2, got {p}")));
        }
        for row in &h {
            for m in row {
                if m.shape() != (p + 1, p) {
                    return Err(IaError::InvalidArgument(format!(
                        "channel matrix has shape {:?}, expected {:?}",
                        m.shape(),
                        (p + 1, p)
                    )));
                }
            }
        }
        Ok(ChannelDraw { p, seed, h })
    }

    pub fn extensions(&self) -> usize {
        extensions_for(self.p)
    }
}

fn full_column_rank(m: &DMatrix<Complex64>) -> bool {
    linalg::rank_with_tol(m, FULL_RANK_TOL).sigma_min_rel >= FULL_RANK_TOL
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<Complex64> {
    DMatrix::from_fn(rows, cols, |_, _| Complex64::gaussian(rng))
}

/// Draw nine i.i.d. circularly-symmetric unit-variance complex Gaussian
/// channel matrices, each redrawn until it has full column rank.
pub fn draw_channels(p: usize, seed: u64) -> Result<ChannelDraw> {
    if p < 2 {
        return Err(IaError::InvalidArgument(format!("p must be at least 2, got {p}")));
    }
    let mut rng = seed::stream(seed, seed::CHANNEL_STREAM);
    let mut next = || -> Result<DMatrix<Complex64>> {
        for _ in 0..MAX_REDRAWS {
            let m = gaussian_matrix(p + 1, p, &mut rng);
            if full_column_rank(&m) {
                return Ok(m);
            }
        }
        Err(IaError::DegenerateRng {
            p,
            seed,
            attempts: MAX_REDRAWS,
        })
    };
    let mut row = || -> Result<[DMatrix<Complex64>; 3]> { Ok([next()?, next()?, next()?]) };
    let h = [row()?, row()?, row()?];
    Ok(ChannelDraw { p, seed, h })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn draws_have_expected_shapes_and_rank() {
        for p in [2, 3] {
            let d = draw_channels(p, 42).unwrap();
            for j in 1..=3 {
                for i in 1..=3 {
                    assert_eq!(d.h(j, i).shape(), (p + 1, p));
                    assert_eq!(linalg::rank(d.h(j, i)), p);
                }
            }
        }
    }

    #[test]
    fn draws_are_deterministic() {
        assert_eq!(draw_channels(3, 99).unwrap(), draw_channels(3, 99).unwrap());
        assert_ne!(draw_channels(3, 99).unwrap(), draw_channels(3, 100).unwrap());
    }

    #[test]
    fn p_below_two_is_rejected() {
        assert!(matches!(draw_channels(1, 0), Err(IaError::InvalidArgument(_))));
    }

    #[test]
    fn rotation_special_angles() {
        assert_eq!(rotation(0.0), Matrix2::identity());
        let q = rotation(FRAC_PI_2);
        let want = Matrix2::new(0.0, -1.0, 1.0, 0.0);
        assert!((q - want).norm() < 1e-15);
        assert!((rotation(PI) + Matrix2::identity()).norm() < 1e-15);
    }

    #[test]
    fn acs_lift_matches_magnitude_times_rotation() {
        let h = c(0.3, -1.7);
        let lifted = f64::lift_scalar(h, 1);
        let want = rotation(h.arg()) * h.norm();
        for r in 0..2 {
            for k in 0..2 {
                assert!((lifted[(r, k)] - want[(r, k)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn unit_lifts_to_identity() {
        assert_eq!(f64::lift_scalar(c(1.0, 0.0), 1), DMatrix::identity(2, 2));
        assert_eq!(
            lift_matrix(&DMatrix::identity(3, 3), ExtensionMode::new(Scheme::Acs, 5)),
            Lifted::Real(DMatrix::identity(30, 30))
        );
    }

    #[test]
    fn imaginary_unit_squares_to_minus_identity() {
        let i = f64::lift_scalar(c(0.0, 1.0), 1);
        let minus_one = f64::lift_scalar(c(0.0, 1.0) * c(0.0, 1.0), 1);
        assert!((&i * &i - minus_one).norm() < 1e-15);
        assert!((&i * &i + DMatrix::<f64>::identity(2, 2)).norm() < 1e-15);
    }

    #[test]
    fn time_only_lift_is_scaled_identity() {
        let h = c(0.5, 2.0);
        let Lifted::Complex(m) = lift_scalar(h, ExtensionMode::new(Scheme::TimeOnly, 5)) else {
            panic!("expected complex lift");
        };
        assert_eq!(m.shape(), (5, 5));
        for r in 0..5 {
            for k in 0..5 {
                assert_eq!(m[(r, k)], if r == k { h } else { c(0.0, 0.0) });
            }
        }
    }

    #[test]
    fn channel_lift_dimensions() {
        let d = draw_channels(2, 1).unwrap();
        let mode = ExtensionMode::for_antennas(Scheme::Acs, 2);
        assert_eq!(lift_matrix(d.h(1, 2), mode).shape(), (30, 20));
        let mode = ExtensionMode::for_antennas(Scheme::TimeOnly, 2);
        assert_eq!(lift_matrix(d.h(1, 2), mode).shape(), (15, 10));
    }

    #[test]
    fn lifted_mul_matches_dense_lift() {
        let mut rng = seed::stream(4, 0);
        let x = DMatrix::<f64>::from_fn(10, 3, |_, _| f64::gaussian(&mut rng));
        let h = c(-0.4, 0.9);
        let dense = f64::lift_scalar(h, 5) * &x;
        assert!((f64::lifted_mul(h, &x) - dense).norm() < 1e-14);
        let xc = DMatrix::<Complex64>::from_fn(5, 3, |_, _| Complex64::gaussian(&mut rng));
        let dense = Complex64::lift_scalar(h, 5) * &xc;
        assert!((Complex64::lifted_mul(h, &xc) - dense).norm() < 1e-14);
    }

    #[test]
    fn scheme_parses() {
        assert_eq!("acs".parse::<Scheme>().unwrap(), Scheme::Acs);
        assert_eq!("time-only".parse::<Scheme>().unwrap(), Scheme::TimeOnly);
        assert!("mimo".parse::<Scheme>().is_err());
    }
}
