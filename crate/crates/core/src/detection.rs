//! Zero-forcing receivers, effective filters in the original channel domain,
//! and per-user rates.
//!
//! SNR convention: `ρ = 10^(snr_db/10)` is the transmit power per stream
//! (per real stream for ACS) over unit-variance noise per receive dimension.
//! Rates are log-det mutual informations of the filtered Gaussian model,
//! reported in bits per complex channel use.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::alignment::PrecoderSet;
use crate::basis_change::{wrap, BasisChange, StructuredChannels};
use crate::channel::{lift_matrix_as, lifted_apply, ChannelDraw, Signal};
use crate::error::{IaError, Result};
use crate::linalg::{self, RANK_TOL};

/// Zero-forcing filter of one receiver.
#[derive(Debug, Clone)]
pub struct ZfFilter<S: Signal> {
    pub receiver: usize,
    /// Rows orthonormal, spanning the complement of the interference.
    pub w: DMatrix<S>,
    pub interference_rank: usize,
    /// `max_i≠j ‖W H[j][i] V[i]‖ / ‖H[j][i] V[i]‖`.
    pub leakage: f64,
}

/// `[H[j][j-1] V[j-1], H[j][j+1] V[j+1]]` in the structured domain.
pub fn interference_matrix<S: Signal>(j: usize, prec: &PrecoderSet<S>, sc: &StructuredChannels<S>) -> DMatrix<S> {
    let a = sc.apply(j, wrap(j, -1), prec.v(wrap(j, -1)));
    let b = sc.apply(j, wrap(j, 1), prec.v(wrap(j, 1)));
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(&a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(&b);
    out
}

/// Orthonormal basis of the interference subspace at receiver `j`.
pub fn interference_basis<S: Signal>(j: usize, prec: &PrecoderSet<S>, sc: &StructuredChannels<S>) -> DMatrix<S> {
    linalg::orthonormal_basis(&interference_matrix(j, prec, sc), RANK_TOL)
}

/// Streams each user sends: `2p(p+1)` real (ACS) or `p(p+1)` complex.
pub fn streams_per_user<S: Signal>(p: usize) -> usize {
    p * (p + 1) * S::REAL_DIMS
}

/// Zero-forcing filter and interference basis of receiver `j`.
pub fn zf_filter_with_basis<S: Signal>(
    j: usize,
    prec: &PrecoderSet<S>,
    sc: &StructuredChannels<S>,
) -> Result<(ZfFilter<S>, DMatrix<S>)> {
    let (basis, complement) = linalg::column_space_split(&interference_matrix(j, prec, sc), RANK_TOL);
    // The time-only baseline is allowed to lose dimensions here; that loss is
    // what its rate and SSM checks measure.
    let required = streams_per_user::<S>(sc.p);
    if S::SCHEME == crate::channel::Scheme::Acs && complement.ncols() < required {
        return Err(IaError::FilterDimension {
            receiver: j,
            available: complement.ncols(),
            required,
        });
    }
    let w = complement.adjoint();
    let leakage = [wrap(j, -1), wrap(j, 1)]
        .into_iter()
        .map(|i| {
            let hv = sc.apply(j, i, prec.v(i));
            linalg::relative_norm(&(&w * &hv), &hv)
        })
        .fold(0.0, f64::max);
    let filter = ZfFilter {
        receiver: j,
        w,
        interference_rank: basis.ncols(),
        leakage,
    };
    Ok((filter, basis))
}

pub fn zf_filter<S: Signal>(j: usize, prec: &PrecoderSet<S>, sc: &StructuredChannels<S>) -> Result<ZfFilter<S>> {
    zf_filter_with_basis(j, prec, sc).map(|(f, _)| f)
}

/// Precoders and receive filters acting on the original channels.
#[derive(Debug, Clone)]
pub struct EffectiveFilters<S: Signal> {
    /// `lift(T[i]) V[i]` with unit-norm columns.
    pub v: [DMatrix<S>; 3],
    /// `W[j] lift(R[j])`.
    pub w: [DMatrix<S>; 3],
}

pub fn effective_filters<S: Signal>(
    prec: &PrecoderSet<S>,
    filters: &[ZfFilter<S>; 3],
    cb: &BasisChange,
) -> EffectiveFilters<S> {
    let t = crate::channel::extensions_for(prec.p);
    EffectiveFilters {
        v: std::array::from_fn(|i| linalg::normalize_columns(&lifted_apply(cb.t(i + 1), prec.v(i + 1)))),
        w: std::array::from_fn(|j| &filters[j].w * lift_matrix_as::<S>(cb.r(j + 1), t)),
    }
}

/// `W_eff[j] lift(H[j][i]) V_eff[i]` over the original channel.
pub fn filtered_channel<S: Signal>(eff: &EffectiveFilters<S>, draw: &ChannelDraw, j: usize, i: usize) -> DMatrix<S> {
    &eff.w[j - 1] * lifted_apply(draw.h(j, i), &eff.v[i - 1])
}

/// Whitened stream gains of one user: the squared singular values of
/// `L⁻¹ M` where `M` is the filtered direct channel and `L Lᴴ` the filtered
/// noise covariance. The rate at power `ρ` is `Σ log2(1 + ρ g) / (T·d)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserGains {
    pub gains: Vec<f64>,
    /// `T` times the real dimensions per coordinate (`2T` ACS, `T` complex).
    pub normalizer: usize,
}

impl UserGains {
    pub fn rate(&self, snr_db: f64) -> f64 {
        let rho = 10f64.powf(snr_db / 10.0);
        self.gains.iter().map(|g| (1.0 + rho * g).log2()).sum::<f64>() / self.normalizer as f64
    }
}

pub fn user_gains<S: Signal>(j: usize, eff: &EffectiveFilters<S>, draw: &ChannelDraw) -> Result<UserGains> {
    let m = filtered_channel(eff, draw, j, j);
    let w = &eff.w[j - 1];
    let q = w * w.adjoint();
    let chol = q.cholesky().ok_or(IaError::SingularNoise { receiver: j })?;
    let n = chol
        .l()
        .solve_lower_triangular(&m)
        .ok_or(IaError::SingularNoise { receiver: j })?;
    let gains = linalg::singular_values(&n).iter().map(|s| s * s).collect();
    Ok(UserGains {
        gains,
        normalizer: S::block_size(draw.extensions()),
    })
}

pub fn user_rate<S: Signal>(j: usize, eff: &EffectiveFilters<S>, draw: &ChannelDraw, snr_db: f64) -> Result<f64> {
    Ok(user_gains(j, eff, draw)?.rate(snr_db))
}

/// Rates of the three users at one SNR.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatePoint {
    pub snr_db: f64,
    pub rate: [f64; 3],
    pub sum_rate: f64,
}

impl RatePoint {
    pub fn from_gains(gains: &[UserGains; 3], snr_db: f64) -> Self {
        let rate = std::array::from_fn(|j| gains[j].rate(snr_db));
        RatePoint {
            snr_db,
            rate,
            sum_rate: rate.iter().sum(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_vanishes_at_low_snr() {
        let g = UserGains {
            gains: vec![1.0, 2.0],
            normalizer: 10,
        };
        assert!(g.rate(-300.0) < 1e-20);
        assert!(g.rate(10.0) > g.rate(5.0));
    }

    #[test]
    fn rate_slope_counts_streams() {
        let g = UserGains {
            gains: vec![0.3; 12],
            normalizer: 10,
        };
        // 20 dB is a factor 100 in ρ
        let slope = (g.rate(100.0) - g.rate(80.0)) / 100f64.log2();
        assert!((slope - 1.2).abs() < 1e-6, "{slope}");
    }

    #[test]
    fn rate_point_sums_users() {
        let g = UserGains {
            gains: vec![1.0],
            normalizer: 1,
        };
        let pt = RatePoint::from_gains(&[g.clone(), g.clone(), g], 0.0);
        assert!((pt.sum_rate - 3.0).abs() < 1e-12);
    }
}
