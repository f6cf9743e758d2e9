//! Alignment chains, zero propagation, support precoding blocks (SPBs) and
//! precoder assembly.
//!
//! Chain `k` links `p` sub-blocks of the users `k, k-1, k-2, …` (cyclically).
//! Condition `t` aligns sub-blocks `t` and `t+1` at receiver `k+2-t`:
//!
//! ```text
//! G[r][u_t] · F_t − G[r][u_{t+1}] · F_{t+1} = 0
//! ```
//!
//! Splitting every sub-block into its `p` transmit-antenna rows turns each
//! chain into a block system `E · F = 0` whose blocks are lifts of single
//! complex coefficients. Zero propagation finds blocks of `F` that must
//! vanish; the rest follow from a one-dimensional complex null space, so
//! every non-zero block is `lift(θ) · A` for one SPB `A`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::basis_change::{target_pattern, wrap, CrossSide, StructuredChannels};
use crate::channel::{extensions_for, Scheme, Signal};
use crate::error::{IaError, Result};
use crate::linalg::{self, RANK_TOL};
use crate::seed;
use crate::Complex64;

/// Relative residual a chain solve or alignment condition must meet.
pub const SOLVE_TOL: f64 = 1e-8;

/// Index sequences of one alignment chain. Users and receivers are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainSpec {
    pub p: usize,
    pub k: usize,
    /// Transmitter of sub-block `t`, `t = 1..=p`.
    pub users: Vec<usize>,
    /// Receiver of condition `t`, `t = 1..p`.
    pub receivers: Vec<usize>,
    /// How many times `users[t]` has appeared in this chain up to `t`.
    pub occurrence: Vec<usize>,
}

impl ChainSpec {
    pub fn conditions(&self) -> usize {
        self.receivers.len()
    }

    pub fn count_for(&self, user: usize) -> usize {
        self.users.iter().filter(|&&u| u == user).count()
    }
}

pub fn chain_spec(p: usize, k: usize) -> ChainSpec {
    assert!(p >= 2, "p must be at least 2");
    assert!((1..=3).contains(&k), "chain index must be 1, 2 or 3");
    let users: Vec<usize> = (1..=p).map(|t| wrap(k, 1 - t as isize)).collect();
    let receivers = (1..p).map(|t| wrap(k, 2 - t as isize)).collect();
    let occurrence = users
        .iter()
        .enumerate()
        .map(|(t, u)| users[..=t].iter().filter(|&x| x == u).count())
        .collect();
    ChainSpec {
        p,
        k,
        users,
        receivers,
        occurrence,
    }
}

/// Closed-form number of sub-blocks of user `i` in chain `k`:
/// `ceil((p − ((k − i) mod 3)) / 3)`, with the residue taken in `{0, 1, 2}`.
pub fn subblock_count(p: usize, k: usize, i: usize) -> usize {
    let offset = (k as isize - i as isize).rem_euclid(3) as usize;
    (p - offset.min(p)).div_ceil(3)
}

/// Identity of one block column of a chain system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlockLabel {
    pub user: usize,
    /// Position `t` of the sub-block in the chain (1-based).
    pub subblock: usize,
    pub occurrence: usize,
    /// Transmit antenna row (1-based).
    pub antenna_row: usize,
}

/// One step of zero propagation: the singleton block row and the block
/// column it forces to zero (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ZpStep {
    pub row: usize,
    pub col: usize,
}

/// Block form `E · F = 0` of one chain.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub chain: ChainSpec,
    /// Current block support, `(p−1)(p+1) × p²`.
    pub support: Vec<Vec<bool>>,
    /// Complex coefficient of every block of `E`; block `(r, c)` of the
    /// numeric system is `lift(coefficients[(r, c)])`.
    pub coefficients: DMatrix<Complex64>,
    pub labels: Vec<BlockLabel>,
    pub zeroed: Vec<bool>,
    pub trace: Vec<ZpStep>,
}

impl BlockSystem {
    pub fn block_rows(&self) -> usize {
        self.support.len()
    }

    pub fn block_cols(&self) -> usize {
        self.labels.len()
    }

    pub fn col_index(&self, subblock: usize, antenna_row: usize) -> usize {
        (subblock - 1) * self.chain.p + (antenna_row - 1)
    }

    /// `(condition t, receiver, receive antenna row q)` of block row `r`.
    pub fn row_label(&self, r: usize) -> (usize, usize, usize) {
        let p = self.chain.p;
        let t = r / (p + 1) + 1;
        (t, self.chain.receivers[t - 1], r % (p + 1) + 1)
    }

    /// Zeroed block columns, 1-based.
    pub fn zeroed_blocks(&self) -> Vec<usize> {
        (0..self.block_cols())
            .filter(|&c| self.zeroed[c])
            .map(|c| c + 1)
            .collect()
    }

    pub fn live_blocks(&self) -> Vec<usize> {
        (0..self.block_cols()).filter(|&c| !self.zeroed[c]).collect()
    }

    /// Lifted numeric matrix of the system, `(rows·b) × (cols·b)` with
    /// `b` the lift block size.
    pub fn scalar_matrix<S: Signal>(&self) -> DMatrix<S> {
        crate::channel::lift_matrix_as::<S>(&self.coefficients, extensions_for(self.chain.p))
    }

    /// Text grid of the current support (`#` non-zero, `.` zero), with the
    /// zeroed columns marked underneath.
    pub fn render_support(&self) -> String {
        let mut out = String::new();
        for (r, row) in self.support.iter().enumerate() {
            let (t, rx, q) = self.row_label(r);
            let cells: String = row
                .iter()
                .map(|&b| if b { " #" } else { " ." })
                .collect();
            let _ = writeln!(out, "c{t} rx{rx} q{q} |{cells}");
        }
        let marks: String = self
            .zeroed
            .iter()
            .map(|&z| if z { " 0" } else { "  " })
            .collect();
        let _ = writeln!(out, "zeroed      |{marks}");
        out
    }
}

pub fn build_block_system<S: Signal>(chain: &ChainSpec, sc: &StructuredChannels<S>) -> BlockSystem {
    let p = chain.p;
    let pattern = target_pattern(p);
    let rows = (p - 1) * (p + 1);
    let cols = p * p;
    let mut support = vec![vec![false; cols]; rows];
    let mut coefficients = DMatrix::zeros(rows, cols);
    for t in 1..p {
        let rx = chain.receivers[t - 1];
        let (left, right) = (chain.users[t - 1], chain.users[t]);
        debug_assert_eq!(left, wrap(rx, -1));
        debug_assert_eq!(right, wrap(rx, 1));
        for q in 0..=p {
            let row = (t - 1) * (p + 1) + q;
            for r in 0..p {
                if pattern.allows(CrossSide::Previous, q, r) {
                    let c = (t - 1) * p + r;
                    support[row][c] = true;
                    coefficients[(row, c)] = sc.g(rx, left)[(q, r)];
                }
                if pattern.allows(CrossSide::Next, q, r) {
                    let c = t * p + r;
                    support[row][c] = true;
                    coefficients[(row, c)] = -sc.g(rx, right)[(q, r)];
                }
            }
        }
    }
    let labels = (0..cols)
        .map(|c| {
            let t = c / p;
            BlockLabel {
                user: chain.users[t],
                subblock: t + 1,
                occurrence: chain.occurrence[t],
                antenna_row: c % p + 1,
            }
        })
        .collect();
    BlockSystem {
        chain: chain.clone(),
        support,
        coefficients,
        labels,
        zeroed: vec![false; cols],
        trace: Vec::new(),
    }
}

/// Zero propagation, always resolving the first singleton row found.
pub fn zero_propagation(sys: &BlockSystem) -> BlockSystem {
    zero_propagation_by(sys, |_| 0)
}

/// Zero propagation with a caller-chosen resolution order: `choose` receives
/// the current singleton rows as `(row, col)` and returns which one to
/// process.
pub fn zero_propagation_by(
    sys: &BlockSystem,
    mut choose: impl FnMut(&[(usize, usize)]) -> usize,
) -> BlockSystem {
    let mut out = sys.clone();
    loop {
        let singletons: Vec<(usize, usize)> = out
            .support
            .iter()
            .enumerate()
            .filter_map(|(r, row)| {
                let mut nz = row.iter().enumerate().filter(|(_, &b)| b);
                match (nz.next(), nz.next()) {
                    (Some((c, _)), None) => Some((r, c)),
                    _ => None,
                }
            })
            .collect();
        if singletons.is_empty() {
            return out;
        }
        let (r, c) = singletons[choose(&singletons).min(singletons.len() - 1)];
        out.support[r].iter_mut().for_each(|b| *b = false);
        out.support.iter_mut().for_each(|row| row[c] = false);
        out.zeroed[c] = true;
        out.trace.push(ZpStep { row: r, col: c });
    }
}

/// Column index sets of the SPB design (1-based columns of `B`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpbSets {
    pub z: Vec<usize>,
    pub x1: Vec<usize>,
    pub x2: Vec<usize>,
    pub y1: Vec<usize>,
    pub y2: Vec<usize>,
}

pub fn spb_sets(p: usize) -> SpbSets {
    SpbSets {
        z: vec![1, 2],
        x1: (3..=p + 3).collect(),
        x2: (p + 4..=2 * p + 2).collect(),
        y1: (2 * p + 3..=3 * p + 3).collect(),
        y2: (3 * p + 4..=4 * p + 2).collect(),
    }
}

/// The three support precoding blocks.
#[derive(Debug, Clone)]
pub struct SupportBlocks<S: Signal> {
    pub p: usize,
    /// Orthonormal basis the blocks were cut from (ACS design only).
    pub basis: Option<DMatrix<S>>,
    pub sets: Option<SpbSets>,
    /// `A_1, A_2, A_3`.
    pub a: [DMatrix<S>; 3],
}

impl<S: Signal> SupportBlocks<S> {
    pub fn block(&self, index: usize) -> &DMatrix<S> {
        &self.a[index - 1]
    }
}

fn pick_columns<S: Signal>(b: &DMatrix<S>, sets: &[&[usize]]) -> DMatrix<S> {
    let cols: Vec<usize> = sets.iter().flat_map(|s| s.iter().map(|&c| c - 1)).collect();
    b.select_columns(cols.iter())
}

/// `A1 = [B_Z B_X1 B_X2]`, `A2 = [B_Z B_Y1 B_Y2]`, `A3 = [B_X1 B_Y1]` from an
/// orthonormal `2T × 2T` basis.
pub fn spb_design<S: Signal>(p: usize, basis: DMatrix<S>) -> Result<SupportBlocks<S>> {
    let n = 2 * extensions_for(p);
    if basis.shape() != (n, n) {
        return Err(IaError::InvalidArgument(format!(
            "support basis must be {n}×{n}, got {:?}",
            basis.shape()
        )));
    }
    let deviation = linalg::orthonormality_defect(&basis);
    if deviation > 1e-12 {
        return Err(IaError::NotOrthonormal { deviation });
    }
    let s = spb_sets(p);
    let a = [
        pick_columns(&basis, &[&s.z, &s.x1, &s.x2]),
        pick_columns(&basis, &[&s.z, &s.y1, &s.y2]),
        pick_columns(&basis, &[&s.x1, &s.y1]),
    ];
    Ok(SupportBlocks {
        p,
        basis: Some(basis),
        sets: Some(s),
        a,
    })
}

/// Source of the orthonormal basis the SPBs are built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BasisChoice {
    /// Haar-random orthogonal basis from the draw's support stream.
    #[default]
    Random,
    /// `B = I`, for debugging.
    Identity,
}

/// Default SPBs for a draw. ACS uses the set-based design on a basis of
/// `R^{2T}`; the complex baseline has no real/imaginary split to exploit and
/// uses three independent random orthonormal `T × (p+1)` blocks.
pub fn support_blocks<S: Signal>(p: usize, draw_seed: u64, choice: BasisChoice) -> SupportBlocks<S> {
    let t = extensions_for(p);
    let mut rng = seed::stream(draw_seed, seed::SUPPORT_STREAM);
    match S::SCHEME {
        Scheme::Acs => {
            let basis = match choice {
                BasisChoice::Random => linalg::random_orthonormal::<S, _>(2 * t, 2 * t, &mut rng),
                BasisChoice::Identity => DMatrix::identity(2 * t, 2 * t),
            };
            spb_design(p, basis).expect("generated basis is orthonormal")
        }
        Scheme::TimeOnly => {
            let a = match choice {
                BasisChoice::Random => std::array::from_fn(|_| {
                    linalg::random_orthonormal::<S, _>(t, p + 1, &mut rng)
                }),
                BasisChoice::Identity => std::array::from_fn(|k| {
                    let offset = k * p / 2;
                    DMatrix::from_fn(t, p + 1, |r, c| {
                        if r == (c + offset) % t { S::one() } else { S::zero() }
                    })
                }),
            };
            SupportBlocks {
                p,
                basis: None,
                sets: None,
                a,
            }
        }
    }
}

/// Solution of one chain: a complex coefficient per block column and the
/// resulting numeric blocks `lift(θ_c) · A`.
#[derive(Debug, Clone)]
pub struct ChainSolution<S: Signal> {
    pub chain: ChainSpec,
    /// Pinned block column (0-based); its coefficient is exactly 1.
    pub pin: usize,
    pub theta: Vec<Complex64>,
    pub blocks: Vec<DMatrix<S>>,
    pub residual: f64,
}

impl<S: Signal> ChainSolution<S> {
    /// Sub-block `t` (1-based) as the vertical stack of its antenna rows.
    pub fn subblock(&self, t: usize) -> DMatrix<S> {
        let p = self.chain.p;
        let b = self.blocks[0].nrows();
        let w = self.blocks[0].ncols();
        let mut out = DMatrix::zeros(p * b, w);
        for r in 0..p {
            out.rows_mut(r * b, b)
                .copy_from(&self.blocks[(t - 1) * p + r]);
        }
        out
    }
}

/// Complex coefficient vector `θ` of a reduced chain system with
/// `θ[pin] = 1`, zero on zeroed blocks, and its relative residual
/// `‖E θ‖ / (‖E‖ ‖θ‖)`.
pub fn chain_coefficients(sys: &BlockSystem, pin: usize) -> Result<(Vec<Complex64>, f64)> {
    if sys.zeroed[pin] {
        return Err(IaError::InvalidArgument(format!(
            "pin block {} is zeroed",
            pin + 1
        )));
    }
    let free: Vec<usize> = sys.live_blocks().into_iter().filter(|&c| c != pin).collect();
    let e = &sys.coefficients;
    let mut theta = vec![Complex64::new(0.0, 0.0); sys.block_cols()];
    theta[pin] = Complex64::new(1.0, 0.0);
    if !free.is_empty() {
        let m = e.select_columns(free.iter());
        let rhs: DMatrix<Complex64> = -e.columns(pin, 1);
        let x = linalg::least_squares(&m, &rhs).ok_or(IaError::PinInfeasible {
            chain: sys.chain.k,
            pin: pin + 1,
            residual: f64::INFINITY,
        })?;
        for (slot, &c) in free.iter().enumerate() {
            theta[c] = x[(slot, 0)];
        }
    }
    let th = DVector::from_vec(theta.clone());
    let scale = e.norm() * th.norm();
    let residual = if scale > 0.0 { (e * &th).norm() / scale } else { 0.0 };
    Ok((theta, residual))
}

/// Solve a (zero-propagated) chain with block `pin` set to the SPB `a`.
pub fn solve_chain<S: Signal>(sys: &BlockSystem, pin: usize, a: &DMatrix<S>) -> Result<ChainSolution<S>> {
    let (theta, residual) = chain_coefficients(sys, pin)?;
    if residual > SOLVE_TOL || !residual.is_finite() {
        return Err(IaError::PinInfeasible {
            chain: sys.chain.k,
            pin: pin + 1,
            residual,
        });
    }
    let blocks = theta
        .iter()
        .zip(&sys.zeroed)
        .map(|(&th, &z)| {
            if z {
                DMatrix::zeros(a.nrows(), a.ncols())
            } else {
                S::lifted_mul(th, a)
            }
        })
        .collect();
    Ok(ChainSolution {
        chain: sys.chain.clone(),
        pin,
        theta,
        blocks,
        residual,
    })
}

/// Default pin of a chain: the last live antenna row of the first sub-block.
pub fn default_pin(sys: &BlockSystem) -> Option<usize> {
    pin_candidates(sys).into_iter().next()
}

/// Live blocks ordered by pin preference: first sub-block from the last
/// antenna row down, then all other live blocks in order.
pub fn pin_candidates(sys: &BlockSystem) -> Vec<usize> {
    let p = sys.chain.p;
    let mut out: Vec<usize> = (0..p).rev().filter(|&c| !sys.zeroed[c]).collect();
    out.extend((p..sys.block_cols()).filter(|&c| !sys.zeroed[c]));
    out
}

/// Provenance of one `2(p+1)`-column group of a precoder.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnGroup {
    pub user: usize,
    pub chain: usize,
    pub subblock: usize,
    pub occurrence: usize,
    /// SPB index (1-based) the chain was generated from.
    pub spb: usize,
    /// Pinned block column of the chain (1-based).
    pub pin: usize,
    pub solve_residual: f64,
    pub first_column: usize,
}

/// The three precoders `V[i]`.
#[derive(Debug, Clone)]
pub struct PrecoderSet<S: Signal> {
    pub p: usize,
    v: [DMatrix<S>; 3],
    pub groups: Vec<ColumnGroup>,
    pub chains: Vec<ChainSolution<S>>,
    /// SPB index (1-based) used by chain `k` at position `k-1`.
    pub assignment: [usize; 3],
    pub max_align_residual: f64,
    /// Index of the accepted assignment/pin attempt; 0 is the default.
    pub attempt: usize,
}

impl<S: Signal> PrecoderSet<S> {
    pub fn v(&self, i: usize) -> &DMatrix<S> {
        &self.v[i - 1]
    }
}

/// Relative residual of every alignment condition, chain by chain.
pub fn alignment_residuals<S: Signal>(chains: &[ChainSolution<S>], sc: &StructuredChannels<S>) -> Vec<f64> {
    let mut out = Vec::new();
    for sol in chains {
        let c = &sol.chain;
        for t in 1..c.p {
            let rx = c.receivers[t - 1];
            let lhs = sc.apply(rx, c.users[t - 1], &sol.subblock(t));
            let rhs = sc.apply(rx, c.users[t], &sol.subblock(t + 1));
            let scale = lhs.norm() + rhs.norm();
            let diff = (lhs - rhs).norm();
            out.push(if scale > 0.0 { diff / scale } else { diff });
        }
    }
    out
}

fn stack_precoders<S: Signal>(chains: &[ChainSolution<S>], assignment: [usize; 3]) -> ([DMatrix<S>; 3], Vec<ColumnGroup>) {
    let p = chains[0].chain.p;
    let mut groups = Vec::new();
    let v = std::array::from_fn(|idx| {
        let user = idx + 1;
        let mut parts: Vec<DMatrix<S>> = Vec::new();
        let mut first_column = 0;
        for sol in chains {
            let c = &sol.chain;
            for t in 1..=p {
                if c.users[t - 1] != user {
                    continue;
                }
                let sub = sol.subblock(t);
                groups.push(ColumnGroup {
                    user,
                    chain: c.k,
                    subblock: t,
                    occurrence: c.occurrence[t - 1],
                    spb: assignment[c.k - 1],
                    pin: sol.pin + 1,
                    solve_residual: sol.residual,
                    first_column,
                });
                first_column += sub.ncols();
                parts.push(sub);
            }
        }
        let rows = parts[0].nrows();
        let cols: usize = parts.iter().map(|m| m.ncols()).sum();
        let mut out = DMatrix::zeros(rows, cols);
        let mut at = 0;
        for m in parts {
            out.columns_mut(at, m.ncols()).copy_from(&m);
            at += m.ncols();
        }
        out
    });
    (v, groups)
}

const ASSIGNMENTS: [[usize; 3]; 6] = [
    [1, 2, 3],
    [1, 3, 2],
    [2, 1, 3],
    [2, 3, 1],
    [3, 1, 2],
    [3, 2, 1],
];

/// Zero-propagated block systems of the three chains.
pub fn reduced_systems<S: Signal>(sc: &StructuredChannels<S>) -> Vec<BlockSystem> {
    (1..=3)
        .map(|k| zero_propagation(&build_block_system(&chain_spec(sc.p, k), sc)))
        .collect()
}

pub fn assemble_precoders<S: Signal>(sc: &StructuredChannels<S>, spb: &SupportBlocks<S>) -> Result<PrecoderSet<S>> {
    assemble_precoders_with(sc, spb, |_| Ok(())).map(|(set, ())| set)
}

/// Assemble precoders, trying chain→SPB assignments and pins in a fixed order
/// until the alignment, column-rank and caller `accept` checks all pass. The
/// value produced by `accept` for the winning attempt is returned alongside.
pub fn assemble_precoders_with<S: Signal, T>(
    sc: &StructuredChannels<S>,
    spb: &SupportBlocks<S>,
    mut accept: impl FnMut(&PrecoderSet<S>) -> std::result::Result<T, String>,
) -> Result<(PrecoderSet<S>, T)> {
    let p = sc.p;
    let systems = reduced_systems(sc);
    let candidates: Vec<Vec<usize>> = systems.iter().map(pin_candidates).collect();
    let depth = candidates.iter().map(Vec::len).max().unwrap_or(0);
    let mut attempts = Vec::new();

    for assignment in ASSIGNMENTS {
        for level in 0..depth {
            let pins: Vec<usize> = candidates
                .iter()
                .map(|c| c[level.min(c.len() - 1)])
                .collect();
            let tag = format!(
                "spb {:?} pins {:?}",
                assignment,
                pins.iter().map(|x| x + 1).collect::<Vec<_>>()
            );
            let solved: Result<Vec<ChainSolution<S>>> = systems
                .iter()
                .zip(&pins)
                .zip(assignment)
                .map(|((sys, &pin), a)| solve_chain(sys, pin, spb.block(a)))
                .collect();
            let chains = match solved {
                Ok(c) => c,
                Err(e) => {
                    attempts.push(format!("{tag}: {e}"));
                    continue;
                }
            };
            let align = alignment_residuals(&chains, sc)
                .into_iter()
                .fold(0.0, f64::max);
            if align > SOLVE_TOL {
                attempts.push(format!("{tag}: alignment residual {align:e}"));
                continue;
            }
            let (v, groups) = stack_precoders(&chains, assignment);
            let want = p * (p + 1) * S::REAL_DIMS;
            if let Some((i, m)) = v.iter().enumerate().find(|(_, m)| {
                m.ncols() != want
                    || linalg::rank_with_tol(&linalg::normalize_columns(m), RANK_TOL).sigma_min_rel
                        < RANK_TOL
            }) {
                attempts.push(format!(
                    "{tag}: V[{}] lacks full column rank ({} columns)",
                    i + 1,
                    m.ncols()
                ));
                continue;
            }
            let set = PrecoderSet {
                p,
                v,
                groups,
                chains,
                assignment,
                max_align_residual: align,
                attempt: attempts.len(),
            };
            match accept(&set) {
                Ok(extra) => return Ok((set, extra)),
                Err(msg) => attempts.push(format!("{tag}: {msg}")),
            }
        }
    }
    Err(IaError::AssemblyExhausted { attempts })
}

/// Least-squares complex `θ` with `block ≈ lift(θ) · a`, and the relative
/// fit residual.
pub fn fit_lifted_scale<S: Signal>(block: &DMatrix<S>, a: &DMatrix<S>) -> (Complex64, f64) {
    // lift(θ)·a = Re θ · a + Im θ · (lift(i)·a); two real unknowns.
    let basis_re = a.clone();
    let basis_im = S::lifted_mul(Complex64::new(0.0, 1.0), a);
    let dot = |x: &DMatrix<S>, y: &DMatrix<S>| -> f64 { x.dotc(y).real() };
    let g = nalgebra::Matrix2::new(
        dot(&basis_re, &basis_re),
        dot(&basis_re, &basis_im),
        dot(&basis_im, &basis_re),
        dot(&basis_im, &basis_im),
    );
    let rhs = nalgebra::Vector2::new(dot(&basis_re, block), dot(&basis_im, block));
    let sol = g.lu().solve(&rhs).unwrap_or_else(nalgebra::Vector2::zeros);
    let theta = Complex64::new(sol[0], sol[1]);
    let fitted = S::lifted_mul(theta, a);
    let denom = block.norm().max(f64::MIN_POSITIVE);
    (theta, (block - fitted).norm() / denom)
}
