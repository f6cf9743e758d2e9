use ia_dof::alignment::{
    alignment_residuals, assemble_precoders, build_block_system, chain_spec, default_pin, fit_lifted_scale,
    solve_chain, support_blocks, zero_propagation, zero_propagation_by, BasisChoice,
};
use ia_dof::basis_change::{apply_cb, build_cb, StructuredChannels};
use ia_dof::channel::{draw_channels, extensions_for, Signal};
use ia_dof::Complex64;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn structured<S: Signal>(p: usize, seed: u64) -> StructuredChannels<S> {
    let draw = draw_channels(p, seed).unwrap();
    let cb = build_cb(&draw).unwrap();
    apply_cb(&draw, &cb).unwrap()
}

/// Independent route: stack the lifted real system `E F = 0`, fix the pinned
/// block to `A` and solve for all other live blocks by least squares.
fn stacked_real_solution(p: usize, seed: u64, k: usize) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
    let sc = structured::<f64>(p, seed);
    let spb = support_blocks::<f64>(p, seed, BasisChoice::Random);
    let sys = zero_propagation(&build_block_system(&chain_spec(p, k), &sc));
    let pin = default_pin(&sys).unwrap();
    let a = spb.block(1);
    let e = sys.scalar_matrix::<f64>();
    let b = 2 * extensions_for(p);
    let free: Vec<usize> = sys.live_blocks().into_iter().filter(|&c| c != pin).collect();
    let free_cols: Vec<usize> = free.iter().flat_map(|&c| c * b..(c + 1) * b).collect();
    let m = e.select_columns(free_cols.iter());
    let rhs = -(e.columns(pin * b, b) * a);
    let x = ia_dof::linalg::least_squares(&m, &rhs).unwrap();
    let mut oracle = vec![DMatrix::zeros(b, a.ncols()); sys.block_cols()];
    oracle[pin] = a.clone();
    for (slot, &c) in free.iter().enumerate() {
        oracle[c] = x.rows(slot * b, b).into_owned();
    }
    let sol = solve_chain(&sys, pin, a).unwrap();
    (oracle, sol.blocks)
}

#[test]
fn complex_route_matches_stacked_real_solve() {
    for p in [2, 3] {
        for seed in 0..4 {
            for k in 1..=3 {
                let (oracle, blocks) = stacked_real_solution(p, seed, k);
                let scale = oracle.iter().map(|m| m.norm()).fold(0.0, f64::max);
                for (c, (o, s)) in oracle.iter().zip(&blocks).enumerate() {
                    let diff = (o - s).norm();
                    assert!(diff <= 1e-9 * scale, "p={p} seed={seed} chain={k} block={} diff {diff:e}", c + 1);
                }
            }
        }
    }
}

#[test]
fn every_live_block_is_a_lifted_multiple_of_its_spb() {
    let p = 4;
    let sc = structured::<f64>(p, 9);
    let spb = support_blocks::<f64>(p, 9, BasisChoice::Random);
    let set = assemble_precoders(&sc, &spb).unwrap();
    for sol in &set.chains {
        let a = spb.block(set.assignment[sol.chain.k - 1]);
        for block in &sol.blocks {
            if block.norm() == 0.0 {
                continue;
            }
            let (_, residual) = fit_lifted_scale(block, a);
            assert!(residual < 1e-12, "{residual:e}");
        }
    }
}

#[test]
fn alignment_conditions_hold_for_both_schemes() {
    for p in [2, 3, 5] {
        let sc = structured::<f64>(p, 21);
        let set = assemble_precoders(&sc, &support_blocks::<f64>(p, 21, BasisChoice::Random)).unwrap();
        assert_eq!(alignment_residuals(&set.chains, &sc).len(), 3 * (p - 1));
        assert!(set.max_align_residual < 1e-10);

        let scc = structured::<Complex64>(p, 21);
        let setc = assemble_precoders(&scc, &support_blocks::<Complex64>(p, 21, BasisChoice::Random)).unwrap();
        assert!(setc.max_align_residual < 1e-10);
        assert_eq!(setc.v(1).shape(), (extensions_for(p) * p, p * (p + 1)));
    }
}

#[test]
fn precoder_shapes_and_provenance() {
    let p = 5;
    let sc = structured::<f64>(p, 2);
    let set = assemble_precoders(&sc, &support_blocks::<f64>(p, 2, BasisChoice::Random)).unwrap();
    let t = extensions_for(p);
    for i in 1..=3 {
        assert_eq!(set.v(i).shape(), (2 * t * p, 2 * p * (p + 1)));
        let groups: Vec<_> = set.groups.iter().filter(|g| g.user == i).collect();
        assert_eq!(groups.len(), p);
        for (n, g) in groups.iter().enumerate() {
            assert_eq!(g.first_column, n * 2 * (p + 1));
        }
    }
}

#[test]
fn identity_basis_option_also_aligns() {
    let sc = structured::<f64>(3, 5);
    let spb = support_blocks::<f64>(3, 5, BasisChoice::Identity);
    let set = assemble_precoders(&sc, &spb).unwrap();
    assert!(set.max_align_residual < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn zero_propagation_ignores_resolution_order(
        p in 2usize..=6,
        k in 1usize..=3,
        seed in 0u64..1000,
        picks in proptest::collection::vec(any::<usize>(), 64),
    ) {
        let sc = structured::<f64>(p, seed);
        let sys = build_block_system(&chain_spec(p, k), &sc);
        let first = zero_propagation(&sys);
        let mut it = picks.into_iter().cycle();
        let shuffled = zero_propagation_by(&sys, |cands| it.next().unwrap() % cands.len());
        prop_assert_eq!(first.zeroed_blocks(), shuffled.zeroed_blocks());
        prop_assert_eq!(first.trace.len(), shuffled.trace.len());
    }
}

#[test]
fn zeroed_blocks_do_not_depend_on_the_draw() {
    for p in 2..=6 {
        for k in 1..=3 {
            let a = zero_propagation(&build_block_system(&chain_spec(p, k), &structured::<f64>(p, 1)));
            let b = zero_propagation(&build_block_system(&chain_spec(p, k), &structured::<f64>(p, 77)));
            assert_eq!(a.zeroed_blocks(), b.zeroed_blocks());
            // p−1 conditions each zero the two boundary rows.
            assert_eq!(a.zeroed_blocks().len(), 2 * (p - 1));
        }
    }
}
