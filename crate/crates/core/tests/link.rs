use ia_dof::basis_change::{achieved_mask, build_cb, target_pattern, CrossSide};
use ia_dof::channel::{draw_channels, extensions_for, lifted_apply};
use ia_dof::detection::{filtered_channel, interference_basis, user_rate};
use ia_dof::linalg::{self, orthonormality_defect};
use ia_dof::pipeline::Link;
use ia_dof::verification::{
    elimination_p2_acs, elimination_p2_noacs, run_verification, verify_claims, EliminationMatrix,
};
use ia_dof::{optimal_dof, Complex64, Dof, Execution, Scheme};

#[test]
fn cb_reaches_target_pattern() {
    for p in 2..=6 {
        for seed in 0..5 {
            let draw = draw_channels(p, seed).unwrap();
            let cb = build_cb(&draw).unwrap();
            assert!(cb.pattern_residual <= 1e-10, "p={p} seed={seed}: {:e}", cb.pattern_residual);
            let pattern = target_pattern(p);
            for j in 1..=3 {
                assert_eq!(linalg::rank(cb.r(j)), p + 1);
                assert_eq!(linalg::rank(cb.t(j)), p);
                let mask = achieved_mask(&cb, &draw, j, 1e-10);
                for (q, row) in mask.iter().enumerate() {
                    for (c, &nz) in row.iter().enumerate() {
                        let allowed = if c < p {
                            pattern.allows(CrossSide::Previous, q, c)
                        } else {
                            pattern.allows(CrossSide::Next, q, c - p)
                        };
                        assert_eq!(nz, allowed, "p={p} seed={seed} j={j} ({q},{c})");
                    }
                }
            }
        }
    }
}

#[test]
fn interference_ranks_and_filter_shapes() {
    // (p, interference rank, W rows, receive dimension)
    for (p, int_rank, w_rows, rx) in [(2, 18, 12, 30), (3, 32, 24, 56)] {
        for seed in 0..5 {
            let link = Link::<f64>::establish(p, seed).unwrap();
            for j in 1..=3 {
                let basis = interference_basis(j, &link.precoders, &link.channels);
                assert_eq!(basis.ncols(), int_rank);
                let f = &link.filters[j - 1];
                assert_eq!(f.w.shape(), (w_rows, rx));
                assert_eq!(f.interference_rank, 2 * (p + 1) * (p + 1));
                assert!(orthonormality_defect(&f.w.transpose()) < 1e-12);
                assert!(f.leakage <= 1e-8);
            }
        }
    }
}

#[test]
fn effective_filters_work_on_original_channels() {
    for p in [2, 3, 4] {
        let link = Link::<f64>::establish(p, 40 + p as u64).unwrap();
        let eff = &link.effective;
        for v in &eff.v {
            for col in v.column_iter() {
                assert!((col.norm() - 1.0).abs() <= 1e-12);
            }
        }
        for j in 1..=3 {
            for i in 1..=3 {
                let m = filtered_channel(eff, &link.draw, j, i);
                if i == j {
                    assert_eq!(linalg::rank(&m), 2 * p * (p + 1));
                } else {
                    let hv = lifted_apply(link.draw.h(j, i), &eff.v[i - 1]);
                    let scale = eff.w[j - 1].norm() * hv.norm();
                    assert!(m.norm() <= 1e-8 * scale, "leak {:e}", m.norm() / scale);
                }
            }
            assert_eq!(link.achieved_dof(j), optimal_dof(p));
        }
    }
}

#[test]
fn rates_grow_with_snr_and_reach_the_dof_slope() {
    for p in [2, 3] {
        let link = Link::<f64>::establish(p, 3).unwrap();
        let target = optimal_dof(p);
        let target = *target.numer() as f64 / *target.denom() as f64;
        for j in 1..=3 {
            let low = user_rate(j, &link.effective, &link.draw, -200.0).unwrap();
            assert!(low < 1e-12);
            let mut last = 0.0;
            for db in (0..=100).step_by(10) {
                let r = user_rate(j, &link.effective, &link.draw, db as f64).unwrap();
                assert!(r >= last);
                last = r;
            }
            let hi = user_rate(j, &link.effective, &link.draw, 100.0).unwrap();
            let lo = user_rate(j, &link.effective, &link.draw, 80.0).unwrap();
            let slope = (hi - lo) / 100f64.log2();
            assert!((slope - target).abs() <= 0.03 * target, "p={p} user {j}: {slope}");
        }
    }
}

#[test]
fn time_only_p2_loses_a_dimension() {
    for seed in 0..10 {
        let link = Link::<Complex64>::establish(2, seed).unwrap();
        let report = link.report();
        for r in &report.receivers {
            assert_eq!(r.ssm_dims, (15, 15));
            assert!(r.rank < 15);
            assert!(!r.full_rank);
            assert!(r.achieved_dof < optimal_dof(2));
            assert!(r.leakage <= 1e-8);
        }
    }
}

#[test]
fn ssm_is_square_and_full_rank_with_acs() {
    for (p, side) in [(2, 30), (3, 56)] {
        let report = Link::<f64>::establish(p, 8).unwrap().report();
        for r in &report.receivers {
            assert_eq!(r.ssm_dims, (side, side));
            assert_eq!(r.rank, side);
            assert!(r.full_rank);
        }
    }
}

#[test]
fn elimination_matrices_p2() {
    for seed in 0..20 {
        let draw = draw_channels(2, seed).unwrap();
        let acs = elimination_p2_acs(&draw).unwrap();
        assert_eq!(acs.null_dim, 0);
        let EliminationMatrix::Real(m) = &acs.matrix else { panic!("ACS matrix is real") };
        assert_eq!(m.shape(), (3, 2));
        assert_eq!((m[(0, 1)], m[(2, 0)]), (0.0, 0.0));

        let noacs = elimination_p2_noacs(&draw).unwrap();
        assert!(noacs.null_dim >= 1);
        assert!(noacs.null_residual.unwrap() <= 1e-12);
    }
    assert!(elimination_p2_acs(&draw_channels(3, 0).unwrap()).is_err());
}

#[test]
fn verification_report_p2() {
    let s = run_verification(2, Scheme::Acs, 6, 17, Execution::Parallel).unwrap();
    assert_eq!(s.full_rank_fraction, 1.0);
    assert_eq!(s.achieved_dof, "6/5");
    assert!(s.failures.is_empty());
    assert_eq!(s.status, "proven");
    let json = serde_json::to_value(&s).unwrap();
    for key in ["p", "mode", "trials", "seed", "full_rank_fraction", "achieved_dof", "max_leakage", "max_align_residual", "failures"] {
        assert!(json.get(key).is_some(), "{key}");
    }
    assert_eq!(json["mode"], "acs");

    let t = run_verification(2, Scheme::TimeOnly, 4, 17, Execution::Sequential).unwrap();
    assert_eq!(t.full_rank_fraction, 0.0);
    assert_eq!(t.failures.len(), 4);
    assert!(run_verification(1, Scheme::Acs, 1, 0, Execution::Sequential).is_err());
}

#[test]
fn verification_is_identical_in_both_execution_modes() {
    let a = verify_claims::<f64>(3, 4, 99, Execution::Sequential);
    let b = verify_claims::<f64>(3, 4, 99, Execution::Parallel);
    let a: Vec<_> = a.into_iter().map(Result::unwrap).collect();
    let b: Vec<_> = b.into_iter().map(Result::unwrap).collect();
    assert_eq!(a, b);
    assert!(a.iter().all(|r| r.min_dof() == Dof::new(12, 7)));
}

#[test]
fn extension_count() {
    assert_eq!(extensions_for(2), 5);
    assert_eq!(extensions_for(9), 19);
}
