use gpw_bench::cases::{airy, builtin_cases};
use gpw_core::gpw::{build_basis, KappaPolicy};
use gpw_core::interp::{
    assemble_gpw_matrix, basis_transition_matrix, taylor_match, MatchOptions, MatrixKind, TaylorMatrix,
};
use gpw_core::taylor2d::triangular_len;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn exact_solutions_lie_in_the_range() {
    let case = airy();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..10 {
        let center = case.random_center(&mut rng);
        let basis = build_basis(&case.operator(center, 2).unwrap(), 7, 2, KappaPolicy::default()).unwrap();
        let m = assemble_gpw_matrix(&basis, 3).unwrap();
        let f = case.exact_solution_taylor(center, 3).unwrap();
        let r = taylor_match(&m, &f, MatchOptions::default()).unwrap();
        assert!(r.relative_residual < 1e-9, "{center:?}: {:e}", r.relative_residual);
    }
}

/// Rows of order `K` of `M_n − M^Tr_n` are combinations of the rows of
/// `M^Tr_n` of order below `K`.
#[test]
fn gpw_rows_differ_from_leading_terms_by_lower_rows() {
    for (k, case) in builtin_cases().iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + k as u64);
        for n in 2..=4 {
            let q = n - 1;
            let p = 2 * n + 1;
            for _ in 0..3 {
                let center = case.random_center(&mut rng);
                let basis = build_basis(&case.operator(center, q).unwrap(), p, q, KappaPolicy::default()).unwrap();
                let m = assemble_gpw_matrix(&basis, n).unwrap();
                let tr = basis_transition_matrix(&basis, n);
                let diff = &m.entries - &tr.entries;
                for order in 1..=n {
                    let lower = triangular_len(order - 1);
                    // unknowns: weights on the lower rows; equations: one per column
                    let system = TaylorMatrix {
                        n,
                        kind: MatrixKind::Transition,
                        entries: tr.entries.rows(0, lower).transpose(),
                    };
                    for r in lower..triangular_len(order) {
                        let target: Vec<_> = diff.row(r).iter().copied().collect();
                        let scale = m.entries.row(r).norm().max(1.0);
                        let fit = taylor_match(&system, &target, MatchOptions::default()).unwrap();
                        assert!(
                            fit.residual < 1e-9 * scale,
                            "{} n={n} row {r}: {:e}",
                            case.name,
                            fit.residual / scale
                        );
                    }
                }
            }
        }
    }
}
