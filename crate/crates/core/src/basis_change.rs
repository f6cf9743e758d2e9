//! Change of basis (CB) at transmitters and receivers.
//!
//! After the CB, receiver `j` sees the cross channels `G[j][j-1]` and
//! `G[j][j+1]` with a banded zero pattern: row 1 only carries column 1 of
//! `G[j][j-1]`, row `p+1` only column `p` of `G[j][j+1]`, and a middle row `q`
//! carries columns `q..=p` of `G[j][j-1]` and `1..q` of `G[j][j+1]`.
//!
//! The construction is sequential and deterministic:
//!
//! 1. Row 1 of `R[j]` is the left null vector of `H[j][j+1]`, row `p+1` that
//!    of `H[j][j-1]`.
//! 2. Transmitter `i` sees two linear functionals through those rows, `a_i`
//!    from receiver `i+1` and `b_i` from receiver `i-1`. Columns `2..p` of
//!    `T[i]` are orthogonal to `a_i`, columns `1..p-1` to `b_i`.
//! 3. Each middle row `q` of `R[j]` is the left null vector of the `p` cross
//!    columns that must vanish in that row.

use nalgebra::{DMatrix, DVector};

use crate::channel::{lift_matrix_as, lifted_apply, ChannelDraw, Signal};
use crate::error::{IaError, Result};
use crate::linalg::{self, RANK_TOL};
use crate::Complex64;

/// Relative magnitude below which a forbidden entry counts as zero.
pub const CLAMP_TOL: f64 = 1e-10;

/// Relative smallest singular value an `R[j]` or `T[i]` must keep.
pub const INVERTIBLE_TOL: f64 = 1e-8;

/// Which cross channel of receiver `j` an entry belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CrossSide {
    /// `G[j][j-1]`
    Previous,
    /// `G[j][j+1]`
    Next,
}

/// Receiver/transmitter index `j + offset` wrapped into `1..=3`.
pub fn wrap(j: usize, offset: isize) -> usize {
    ((j as isize - 1 + offset).rem_euclid(3) + 1) as usize
}

/// Banded zero layout of the cross channels, the same at every receiver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZeroPattern {
    pub p: usize,
    /// `(p+1) × 2p` mask over `[G[j][j-1] | G[j][j+1]]`.
    pub allowed: Vec<Vec<bool>>,
}

impl ZeroPattern {
    /// Whether entry `(q, r)` (0-based) of the given cross channel may be
    /// non-zero.
    pub fn allows(&self, side: CrossSide, q: usize, r: usize) -> bool {
        let col = match side {
            CrossSide::Previous => r,
            CrossSide::Next => self.p + r,
        };
        self.allowed[q][col]
    }

    /// Allowed positions of one cross channel as 1-based `(row, col)` pairs,
    /// row-major.
    pub fn nonzeros(&self, side: CrossSide) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for q in 0..=self.p {
            for r in 0..self.p {
                if self.allows(side, q, r) {
                    out.push((q + 1, r + 1));
                }
            }
        }
        out
    }
}

fn rule(p: usize, side: CrossSide, q: usize, r: usize) -> bool {
    match (side, q) {
        (CrossSide::Previous, 0) => r == 0,
        (CrossSide::Next, 0) => false,
        (CrossSide::Previous, q) if q == p => false,
        (CrossSide::Next, q) if q == p => r == p - 1,
        (CrossSide::Previous, q) => r >= q,
        (CrossSide::Next, q) => r < q,
    }
}

pub fn target_pattern(p: usize) -> ZeroPattern {
    let allowed = (0..=p)
        .map(|q| {
            (0..2 * p)
                .map(|c| {
                    if c < p {
                        rule(p, CrossSide::Previous, q, c)
                    } else {
                        rule(p, CrossSide::Next, q, c - p)
                    }
                })
                .collect()
        })
        .collect();
    ZeroPattern { p, allowed }
}

/// Side of receiver `j`'s cross channel from transmitter `i`, or `None` for
/// the direct channel.
pub fn cross_side(j: usize, i: usize) -> Option<CrossSide> {
    if i == wrap(j, -1) {
        Some(CrossSide::Previous)
    } else if i == wrap(j, 1) {
        Some(CrossSide::Next)
    } else {
        None
    }
}

/// Per-receiver `R[j]` and per-transmitter `T[i]` change-of-basis matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisChange {
    pub p: usize,
    /// `R[j]`, `(p+1) × (p+1)`, indexed from 0.
    pub receive: [DMatrix<Complex64>; 3],
    /// `T[i]`, `p × p`, indexed from 0.
    pub transmit: [DMatrix<Complex64>; 3],
    /// Worst relative magnitude found at a forbidden position.
    pub pattern_residual: f64,
}

impl BasisChange {
    pub fn r(&self, j: usize) -> &DMatrix<Complex64> {
        &self.receive[j - 1]
    }

    pub fn t(&self, i: usize) -> &DMatrix<Complex64> {
        &self.transmit[i - 1]
    }

    /// Unclamped `R[j] · H[j][i] · T[i]`.
    pub fn equivalent(&self, draw: &ChannelDraw, j: usize, i: usize) -> DMatrix<Complex64> {
        self.r(j) * draw.h(j, i) * self.t(i)
    }
}

/// Worst `|G[q, r]| / ‖G‖_F` over forbidden positions of a cross channel,
/// with the 0-based position where it occurs.
pub fn forbidden_residual(g: &DMatrix<Complex64>, side: CrossSide) -> (f64, (usize, usize)) {
    let p = g.ncols();
    let pattern = target_pattern(p);
    let scale = g.norm();
    let mut worst = (0.0, (0, 0));
    for q in 0..=p {
        for r in 0..p {
            if !pattern.allows(side, q, r) {
                let rel = if scale > 0.0 { g[(q, r)].norm() / scale } else { 0.0 };
                if rel > worst.0 {
                    worst = (rel, (q, r));
                }
            }
        }
    }
    worst
}

/// Project `v` onto the orthogonal complement of `w`.
fn reject(v: &DVector<Complex64>, w: &DVector<Complex64>) -> DVector<Complex64> {
    let ww = w.dotc(w);
    if ww.norm() == 0.0 {
        return v.clone();
    }
    v - w * (w.dotc(v) / ww)
}

fn check_invertible(m: &DMatrix<Complex64>, receiver: usize, what: &str) -> Result<()> {
    let report = linalg::rank_with_tol(m, RANK_TOL);
    if report.sigma_min_rel < INVERTIBLE_TOL {
        return Err(IaError::DegenerateBasisChange {
            receiver,
            reason: format!(
                "{what} has relative smallest singular value {:e}",
                report.sigma_min_rel
            ),
        });
    }
    Ok(())
}

/// Build `R[j]`, `T[i]` forcing [`target_pattern`] on all six cross channels.
pub fn build_cb(draw: &ChannelDraw) -> Result<BasisChange> {
    let p = draw.p;

    let first_rows: Vec<DVector<Complex64>> = (1..=3)
        .map(|j| linalg::left_null_row(draw.h(j, wrap(j, 1))))
        .collect();
    let last_rows: Vec<DVector<Complex64>> = (1..=3)
        .map(|j| linalg::left_null_row(draw.h(j, wrap(j, -1))))
        .collect();

    let mut transmit: Vec<DMatrix<Complex64>> = Vec::with_capacity(3);
    for i in 1..=3 {
        let next = wrap(i, 1);
        let prev = wrap(i, -1);
        // r·H·t = aᴴ t with a = Hᴴ conj(r)
        let a = draw.h(next, i).adjoint() * first_rows[next - 1].conjugate();
        let b = draw.h(prev, i).adjoint() * last_rows[prev - 1].conjugate();
        let mut t = DMatrix::zeros(p, p);
        t.set_column(0, &linalg::sign_fixed(linalg::normalized(reject(&a, &b))));
        t.set_column(p - 1, &linalg::sign_fixed(linalg::normalized(reject(&b, &a))));
        if p > 2 {
            let mut constraints = DMatrix::zeros(2, p);
            constraints.set_row(0, &a.adjoint());
            constraints.set_row(1, &b.adjoint());
            let both = linalg::null_space(&constraints, RANK_TOL);
            if both.ncols() != p - 2 {
                return Err(IaError::DegenerateBasisChange {
                    receiver: i,
                    reason: format!(
                        "transmit constraints leave {} free directions, expected {}",
                        both.ncols(),
                        p - 2
                    ),
                });
            }
            for c in 0..p - 2 {
                t.set_column(1 + c, &linalg::sign_fixed(both.column(c).into_owned()));
            }
        }
        transmit.push(t);
    }

    let mut receive: Vec<DMatrix<Complex64>> = Vec::with_capacity(3);
    for j in 1..=3 {
        let prev = wrap(j, -1);
        let next = wrap(j, 1);
        let lhs = draw.h(j, prev) * &transmit[prev - 1];
        let rhs = draw.h(j, next) * &transmit[next - 1];
        let mut r = DMatrix::zeros(p + 1, p + 1);
        r.set_row(0, &first_rows[j - 1].transpose());
        r.set_row(p, &last_rows[j - 1].transpose());
        for q in 1..p {
            // zero columns 0..q of the previous channel and q..p of the next
            let mut cols = DMatrix::zeros(p + 1, p);
            cols.view_mut((0, 0), (p + 1, q)).copy_from(&lhs.columns(0, q));
            cols.view_mut((0, q), (p + 1, p - q))
                .copy_from(&rhs.columns(q, p - q));
            r.set_row(q, &linalg::left_null_row(&cols).transpose());
        }
        receive.push(r);
    }

    for (idx, r) in receive.iter().enumerate() {
        check_invertible(r, idx + 1, "R")?;
    }
    for (idx, t) in transmit.iter().enumerate() {
        check_invertible(t, idx + 1, "T")?;
    }

    let receive: [DMatrix<Complex64>; 3] = receive.try_into().expect("three receivers");
    let transmit: [DMatrix<Complex64>; 3] = transmit.try_into().expect("three transmitters");
    let mut cb = BasisChange {
        p,
        receive,
        transmit,
        pattern_residual: 0.0,
    };

    let mut worst = 0.0_f64;
    for j in 1..=3 {
        for i in [wrap(j, -1), wrap(j, 1)] {
            let side = cross_side(j, i).expect("cross channel");
            let (res, (q, r)) = forbidden_residual(&cb.equivalent(draw, j, i), side);
            if res > CLAMP_TOL {
                return Err(IaError::PatternViolation {
                    receiver: j,
                    transmitter: i,
                    row: q + 1,
                    col: r + 1,
                    magnitude: res,
                });
            }
            worst = worst.max(res);
        }
    }
    cb.pattern_residual = worst;
    Ok(cb)
}

/// Equivalent channels after the change of basis, with forbidden entries
/// clamped to exact zero, plus their lifts.
#[derive(Debug, Clone)]
pub struct StructuredChannels<S: Signal> {
    pub p: usize,
    pub extensions: usize,
    equivalent: [[DMatrix<Complex64>; 3]; 3],
    lifted: [[DMatrix<S>; 3]; 3],
}

impl<S: Signal> StructuredChannels<S> {
    /// Complex equivalent channel `G[j][i]` (1-based indices).
    pub fn g(&self, j: usize, i: usize) -> &DMatrix<Complex64> {
        &self.equivalent[j - 1][i - 1]
    }

    pub fn lifted(&self, j: usize, i: usize) -> &DMatrix<S> {
        &self.lifted[j - 1][i - 1]
    }

    /// Lifted block size `2T` (ACS) or `T` (time-only).
    pub fn block(&self) -> usize {
        S::block_size(self.extensions)
    }

    /// `lift(G[j][i]) · x`, exploiting the block structure of the lift.
    pub fn apply(&self, j: usize, i: usize, x: &DMatrix<S>) -> DMatrix<S> {
        let g = self.g(j, i);
        assert_eq!(x.nrows(), g.ncols() * self.block(), "operand rows must match lifted columns");
        lifted_apply(g, x)
    }
}

/// Apply the change of basis to a draw and lift the result.
pub fn apply_cb<S: Signal>(draw: &ChannelDraw, cb: &BasisChange) -> Result<StructuredChannels<S>> {
    let p = draw.p;
    let t = draw.extensions();
    let mut equivalent: Vec<[DMatrix<Complex64>; 3]> = Vec::with_capacity(3);
    for j in 1..=3 {
        let mut row: Vec<DMatrix<Complex64>> = Vec::with_capacity(3);
        for i in 1..=3 {
            let mut g = cb.equivalent(draw, j, i);
            if let Some(side) = cross_side(j, i) {
                let (res, (q, r)) = forbidden_residual(&g, side);
                if res > CLAMP_TOL {
                    return Err(IaError::PatternViolation {
                        receiver: j,
                        transmitter: i,
                        row: q + 1,
                        col: r + 1,
                        magnitude: res,
                    });
                }
                let pattern = target_pattern(p);
                for q in 0..=p {
                    for r in 0..p {
                        if !pattern.allows(side, q, r) {
                            g[(q, r)] = Complex64::new(0.0, 0.0);
                        }
                    }
                }
            }
            row.push(g);
        }
        equivalent.push(row.try_into().expect("three transmitters"));
    }
    let equivalent: [[DMatrix<Complex64>; 3]; 3] =
        equivalent.try_into().expect("three receivers");
    let lifted = std::array::from_fn(|j| {
        std::array::from_fn(|i| lift_matrix_as::<S>(&equivalent[j][i], t))
    });
    Ok(StructuredChannels {
        p,
        extensions: t,
        equivalent,
        lifted,
    })
}

/// Mask of entries of `[G[j][j-1] | G[j][j+1]]` whose relative magnitude
/// exceeds `tol`.
pub fn achieved_mask(cb: &BasisChange, draw: &ChannelDraw, j: usize, tol: f64) -> Vec<Vec<bool>> {
    let p = draw.p;
    let prev = cb.equivalent(draw, j, wrap(j, -1));
    let next = cb.equivalent(draw, j, wrap(j, 1));
    let (sp, sn) = (prev.norm(), next.norm());
    (0..=p)
        .map(|q| {
            (0..2 * p)
                .map(|c| {
                    if c < p {
                        prev[(q, c)].norm() > tol * sp
                    } else {
                        next[(q, c - p)].norm() > tol * sn
                    }
                })
                .collect()
        })
        .collect()
}
