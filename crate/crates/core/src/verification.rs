//! Signal space matrices, achieved DoF, the p = 2 elimination matrices, and
//! multi-draw claim verification.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::alignment::PrecoderSet;
use crate::basis_change::{build_cb, StructuredChannels};
use crate::channel::{ChannelDraw, Scheme, Signal};
use crate::detection::{filtered_channel, EffectiveFilters};
use crate::error::{IaError, Result};
use crate::exec::Execution;
use crate::linalg::{self, RankReport, RANK_TOL};
use crate::pipeline::Link;
use crate::{claim_status, optimal_dof, seed, Complex64, Dof};

/// `G_j = [H[j][j] V[j] | interference basis]`, desired columns scaled to
/// unit norm.
pub fn build_ssm<S: Signal>(
    j: usize,
    prec: &PrecoderSet<S>,
    sc: &StructuredChannels<S>,
    interference_basis: &DMatrix<S>,
) -> DMatrix<S> {
    let desired = linalg::normalize_columns(&sc.apply(j, j, prec.v(j)));
    let mut g = DMatrix::zeros(desired.nrows(), desired.ncols() + interference_basis.ncols());
    g.columns_mut(0, desired.ncols()).copy_from(&desired);
    g.columns_mut(desired.ncols(), interference_basis.ncols())
        .copy_from(interference_basis);
    g
}

pub fn rank_report<S: Signal>(g: &DMatrix<S>) -> RankReport {
    linalg::rank_with_tol(g, RANK_TOL)
}

/// Full rank: rank equals the column count and `σ_min/σ_max > 1e-8`.
pub fn is_full_rank(report: &RankReport, cols: usize) -> bool {
    report.rank == cols && report.sigma_min_rel > RANK_TOL
}

/// `rank(W_eff[j] lift(H[j][j]) V_eff[j]) / (T·d)` with `d` the real
/// dimensions per coordinate, so ACS and the complex baseline both report
/// DoF per complex channel use.
pub fn achieved_dof<S: Signal>(j: usize, eff: &EffectiveFilters<S>, draw: &ChannelDraw) -> Dof {
    let m = filtered_channel(eff, draw, j, j);
    Dof::new(linalg::rank(&m), S::block_size(draw.extensions()))
}

/// Per-receiver outcome of the SSM and DoF checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReceiverReport {
    pub receiver: usize,
    pub ssm_dims: (usize, usize),
    pub rank: usize,
    pub sigma_min_rel: f64,
    pub full_rank: bool,
    pub interference_rank: usize,
    #[serde(serialize_with = "serialize_ratio")]
    pub achieved_dof: Dof,
    pub leakage: f64,
}

/// SSM report of one draw.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SsmReport {
    pub p: usize,
    pub scheme: Scheme,
    pub seed: u64,
    pub receivers: Vec<ReceiverReport>,
    pub max_leakage: f64,
    pub max_align_residual: f64,
    pub cb_residual: f64,
    /// Precoder assembly attempt that was accepted (0 = default pins and
    /// SPB assignment).
    pub assembly_attempt: usize,
}

impl SsmReport {
    pub fn all_full_rank(&self) -> bool {
        self.receivers.iter().all(|r| r.full_rank)
    }

    pub fn min_dof(&self) -> Dof {
        self.receivers
            .iter()
            .map(|r| r.achieved_dof)
            .min()
            .unwrap_or_else(|| Dof::new(0, 1))
    }
}

fn serialize_ratio<S: serde::Serializer>(r: &Dof, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_dof(*r))
}

/// `a/b` form, also for integers (`2/1`).
pub fn format_dof(r: Dof) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Elimination matrix of the p = 2 argument, real (ACS) or complex (no ACS).
#[derive(Debug, Clone, PartialEq)]
pub enum EliminationMatrix {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EliminationCheck {
    pub matrix: EliminationMatrix,
    pub null_dim: usize,
    /// `‖M x‖` for a unit null vector `x` (when `null_dim > 0`).
    pub null_residual: Option<f64>,
}

fn null_check<S: Signal>(m: &DMatrix<S>) -> (usize, Option<f64>) {
    let null_dim = m.ncols() - linalg::rank(m);
    let residual = (null_dim > 0).then(|| {
        let x: DVector<S> = linalg::null_space(m, RANK_TOL).column(0).into_owned();
        (m * x).norm()
    });
    (null_dim, residual)
}

/// Real 3×2 elimination matrix from the direct channel `G[1][1]` after the
/// change of basis: entries `|g| sin(arg g)` of `g_11, g_21, g_22, g_32`.
pub fn elimination_p2_acs_from_direct(g: &DMatrix<Complex64>) -> EliminationCheck {
    assert_eq!(g.shape(), (3, 2), "p = 2 direct channel is 3×2");
    let s = |q: usize, r: usize| g[(q, r)].norm() * g[(q, r)].arg().sin();
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(3, 2, &[
        s(0, 0), 0.0,
        s(1, 0), s(1, 1),
        0.0,     s(2, 1),
    ]);
    let (null_dim, null_residual) = null_check(&m);
    EliminationCheck {
        matrix: EliminationMatrix::Real(m),
        null_dim,
        null_residual,
    }
}

/// Complex 3×4 elimination matrix of the baseline without ACS.
pub fn elimination_p2_noacs_from_direct(g: &DMatrix<Complex64>) -> EliminationCheck {
    assert_eq!(g.shape(), (3, 2), "p = 2 direct channel is 3×2");
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(3, 4, &[
        g[(0, 0)], z,         o, z,
        g[(1, 0)], g[(1, 1)], z, z,
        z,         g[(2, 1)], z, o,
    ]);
    let (null_dim, null_residual) = null_check(&m);
    EliminationCheck {
        matrix: EliminationMatrix::Complex(m),
        null_dim,
        null_residual,
    }
}

fn direct_after_cb(draw: &ChannelDraw) -> Result<DMatrix<Complex64>> {
    if draw.p != 2 {
        return Err(IaError::InvalidArgument(format!(
            "elimination matrices are defined for p = 2, got p = {}",
            draw.p
        )));
    }
    let cb = build_cb(draw)?;
    Ok(cb.equivalent(draw, 1, 1))
}

pub fn elimination_p2_acs(draw: &ChannelDraw) -> Result<EliminationCheck> {
    Ok(elimination_p2_acs_from_direct(&direct_after_cb(draw)?))
}

pub fn elimination_p2_noacs(draw: &ChannelDraw) -> Result<EliminationCheck> {
    Ok(elimination_p2_noacs_from_direct(&direct_after_cb(draw)?))
}

/// Aggregate of a multi-draw verification run; this is the JSON report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationSummary {
    pub p: usize,
    pub mode: Scheme,
    pub trials: usize,
    pub seed: u64,
    /// Fraction of trials whose three SSMs are all full rank.
    pub full_rank_fraction: f64,
    /// Smallest per-user DoF over all trials and users, as `a/b`.
    pub achieved_dof: String,
    pub optimal_dof: String,
    /// Trials in which every user reached the optimal DoF.
    pub optimal_dof_trials: usize,
    pub max_leakage: f64,
    pub max_align_residual: f64,
    pub max_cb_residual: f64,
    /// Trials whose precoders needed a non-default pin or SPB assignment.
    pub fallback_trials: usize,
    /// Seeds of trials that failed outright or fell short of full rank or
    /// optimal DoF.
    pub failures: Vec<u64>,
    pub status: &'static str,
}

/// Seed of trial `index` under a base seed.
pub fn trial_seed(base: u64, index: usize) -> u64 {
    seed::drop_seed(base, index as u64, 0)
}

/// Run the full pipeline for one draw and report on it.
pub fn verify_draw<S: Signal>(p: usize, draw_seed: u64) -> Result<SsmReport> {
    Link::<S>::establish(p, draw_seed)
        .map(|link| link.report())
        .map_err(|e| IaError::Draw {
            seed: draw_seed,
            source: Box::new(e),
        })
}

/// Per-trial outcomes in trial order.
pub fn verify_claims<S: Signal>(p: usize, trials: usize, base_seed: u64, exec: Execution) -> Vec<Result<SsmReport>> {
    exec.map(trials, |i| verify_draw::<S>(p, trial_seed(base_seed, i)))
}

pub fn summarize(p: usize, mode: Scheme, base_seed: u64, outcomes: &[Result<SsmReport>]) -> VerificationSummary {
    let optimal = optimal_dof(p);
    let mut full = 0;
    let mut optimal_trials = 0;
    let mut min_dof: Option<Dof> = None;
    let mut failures = Vec::new();
    let mut fallback = 0;
    let (mut leak, mut align, mut cb) = (0.0_f64, 0.0_f64, 0.0_f64);
    for (i, outcome) in outcomes.iter().enumerate() {
        match outcome {
            Ok(r) => {
                let dof = r.min_dof();
                min_dof = Some(min_dof.map_or(dof, |d| d.min(dof)));
                leak = leak.max(r.max_leakage);
                align = align.max(r.max_align_residual);
                cb = cb.max(r.cb_residual);
                fallback += (r.assembly_attempt > 0) as usize;
                let all_full = r.all_full_rank();
                full += all_full as usize;
                optimal_trials += (dof == optimal) as usize;
                if !all_full || dof != optimal {
                    failures.push(r.seed);
                }
            }
            Err(e) => {
                failures.push(e.seed().unwrap_or_else(|| trial_seed(base_seed, i)));
                min_dof = Some(Dof::new(0, 1));
            }
        }
    }
    let trials = outcomes.len();
    VerificationSummary {
        p,
        mode,
        trials,
        seed: base_seed,
        full_rank_fraction: if trials == 0 { 0.0 } else { full as f64 / trials as f64 },
        achieved_dof: format_dof(min_dof.unwrap_or_else(|| Dof::new(0, 1))),
        optimal_dof: format_dof(optimal),
        optimal_dof_trials: optimal_trials,
        max_leakage: leak,
        max_align_residual: align,
        max_cb_residual: cb,
        fallback_trials: fallback,
        failures,
        status: claim_status(p),
    }
}

/// [`verify_claims`] followed by [`summarize`], dispatching on the scheme.
pub fn run_verification(p: usize, mode: Scheme, trials: usize, base_seed: u64, exec: Execution) -> Result<VerificationSummary> {
    if p < 2 {
        return Err(IaError::InvalidArgument(format!("p must be at least 2, got {p}")));
    }
    if trials == 0 {
        return Err(IaError::InvalidArgument("trials must be at least 1".into()));
    }
    let outcomes = match mode {
        Scheme::Acs => verify_claims::<f64>(p, trials, base_seed, exec),
        Scheme::TimeOnly => verify_claims::<Complex64>(p, trials, base_seed, exec),
    };
    Ok(summarize(p, mode, base_seed, &outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_dof_keeps_denominator() {
        assert_eq!(format_dof(Dof::new(12, 10)), "6/5");
        assert_eq!(format_dof(Dof::new(4, 2)), "2/1");
    }

    #[test]
    fn zero_phases_kill_acs_elimination_rank() {
        let g = DMatrix::from_row_slice(3, 2, &[
            Complex64::new(1.5, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.3, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.7, 0.0),
        ]);
        let c = elimination_p2_acs_from_direct(&g);
        assert_eq!(c.null_dim, 2);
    }

    #[test]
    fn noacs_elimination_always_has_null_vector() {
        let g = DMatrix::from_fn(3, 2, |q, r| Complex64::new(1.0 + q as f64, r as f64 - 0.5));
        let c = elimination_p2_noacs_from_direct(&g);
        assert!(c.null_dim >= 1);
        assert!(c.null_residual.unwrap() < 1e-12);
    }

    #[test]
    fn summary_of_empty_run() {
        let s = summarize(2, Scheme::Acs, 1, &[]);
        assert_eq!(s.full_rank_fraction, 0.0);
        assert_eq!(s.status, "proven");
        assert_eq!(s.optimal_dof, "6/5");
    }
}
