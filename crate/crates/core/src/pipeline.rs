//! End-to-end link establishment for one channel draw: channels, change of
//! basis, SPBs, precoders, zero-forcing filters and the SSM checks.

use nalgebra::DMatrix;

use crate::alignment::{assemble_precoders_with, support_blocks, BasisChoice, PrecoderSet, SupportBlocks};
use crate::basis_change::{apply_cb, build_cb, BasisChange, StructuredChannels};
use crate::channel::{draw_channels, ChannelDraw, Scheme, Signal};
use crate::detection::{effective_filters, user_gains, zf_filter_with_basis, EffectiveFilters, UserGains, ZfFilter};
use crate::error::Result;
use crate::linalg::RankReport;
use crate::verification::{achieved_dof, build_ssm, is_full_rank, rank_report, ReceiverReport, SsmReport};
use crate::Dof;

/// SSM outcome at one receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsmCheck {
    pub dims: (usize, usize),
    pub report: RankReport,
    pub full_rank: bool,
}

/// Everything built for one draw.
#[derive(Debug, Clone)]
pub struct Link<S: Signal> {
    pub p: usize,
    pub seed: u64,
    pub draw: ChannelDraw,
    pub cb: BasisChange,
    pub channels: StructuredChannels<S>,
    pub spb: SupportBlocks<S>,
    pub precoders: PrecoderSet<S>,
    pub filters: [ZfFilter<S>; 3],
    pub ssm: [SsmCheck; 3],
    pub effective: EffectiveFilters<S>,
}

fn receiver_checks<S: Signal>(
    prec: &PrecoderSet<S>,
    sc: &StructuredChannels<S>,
) -> std::result::Result<([ZfFilter<S>; 3], [SsmCheck; 3]), String> {
    let mut filters = Vec::with_capacity(3);
    let mut checks = Vec::with_capacity(3);
    for j in 1..=3 {
        let (filter, basis) = zf_filter_with_basis(j, prec, sc).map_err(|e| e.to_string())?;
        let g: DMatrix<S> = build_ssm(j, prec, sc, &basis);
        let report = rank_report(&g);
        let full_rank = is_full_rank(&report, g.ncols());
        if S::SCHEME == Scheme::Acs && !full_rank {
            return Err(format!(
                "SSM of receiver {j} is rank deficient (rank {} of {}, σ_min/σ_max {:e})",
                report.rank,
                g.ncols(),
                report.sigma_min_rel
            ));
        }
        filters.push(filter);
        checks.push(SsmCheck {
            dims: g.shape(),
            report,
            full_rank,
        });
    }
    let filters = filters.try_into().map_err(|_| "three receivers".to_string())?;
    let checks = checks.try_into().map_err(|_| "three receivers".to_string())?;
    Ok((filters, checks))
}

impl<S: Signal> Link<S> {
    /// Draw channels from `seed` and build the whole scheme.
    pub fn establish(p: usize, seed: u64) -> Result<Self> {
        Self::from_draw(draw_channels(p, seed)?, BasisChoice::Random)
    }

    pub fn from_draw(draw: ChannelDraw, choice: BasisChoice) -> Result<Self> {
        let p = draw.p;
        let cb = build_cb(&draw)?;
        let channels = apply_cb::<S>(&draw, &cb)?;
        let spb = support_blocks::<S>(p, draw.seed, choice);
        // In ACS mode an attempt is only accepted when every SSM is full rank;
        // the baseline keeps its first aligned attempt.
        let (precoders, (filters, ssm)) =
            assemble_precoders_with(&channels, &spb, |prec| receiver_checks(prec, &channels))?;
        let effective = effective_filters(&precoders, &filters, &cb);
        Ok(Link {
            p,
            seed: draw.seed,
            draw,
            cb,
            channels,
            spb,
            precoders,
            filters,
            ssm,
            effective,
        })
    }

    /// Achieved DoF of user `j` (1-based).
    pub fn achieved_dof(&self, j: usize) -> Dof {
        achieved_dof(j, &self.effective, &self.draw)
    }

    /// Whitened stream gains of the three users; rates at any SNR follow.
    pub fn gains(&self) -> Result<[UserGains; 3]> {
        Ok([
            user_gains(1, &self.effective, &self.draw)?,
            user_gains(2, &self.effective, &self.draw)?,
            user_gains(3, &self.effective, &self.draw)?,
        ])
    }

    pub fn report(&self) -> SsmReport {
        let receivers: Vec<ReceiverReport> = (1..=3)
            .map(|j| {
                let c = &self.ssm[j - 1];
                let f = &self.filters[j - 1];
                ReceiverReport {
                    receiver: j,
                    ssm_dims: c.dims,
                    rank: c.report.rank,
                    sigma_min_rel: c.report.sigma_min_rel,
                    full_rank: c.full_rank,
                    interference_rank: f.interference_rank,
                    achieved_dof: self.achieved_dof(j),
                    leakage: f.leakage,
                }
            })
            .collect();
        SsmReport {
            p: self.p,
            scheme: S::SCHEME,
            seed: self.seed,
            max_leakage: receivers.iter().map(|r| r.leakage).fold(0.0, f64::max),
            receivers,
            max_align_residual: self.precoders.max_align_residual,
            cb_residual: self.cb.pattern_residual,
            assembly_attempt: self.precoders.attempt,
        }
    }
}
