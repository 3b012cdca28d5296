//! Taylor-coefficient matrices of bases, rank studies and Taylor matching.
//!
//! Row `(k1, k2)` of every matrix sits at `(k1+k2)(k1+k2+1)/2 + k2` (zero
//! based) and holds scaled coefficients `D^(k1,k2)`, the same convention as
//! the right-hand side `F` built from an exact solution.

use std::f64::consts::TAU;

use log::debug;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::gpw::GpwBasis;
use crate::taylor2d::{factorial, indices_up_to, triangular_len, MultiIndex};
use crate::Point;

/// Default relative threshold on singular values.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum MatrixKind {
    Gpw,
    Reference,
    Classical(Complex64),
    Transition,
}

#[derive(Clone, Debug)]
pub struct TaylorMatrix {
    pub n: usize,
    pub kind: MatrixKind,
    pub entries: DMatrix<Complex64>,
}

impl TaylorMatrix {
    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn entry(&self, row: MultiIndex, col: usize) -> Complex64 {
        self.entries[(row.flat(), col)]
    }
}

/// `M_n`: column `l` holds the scaled Taylor coefficients of `exp(P_l)`.
pub fn assemble_gpw_matrix(basis: &GpwBasis, n: usize) -> Result<TaylorMatrix> {
    let mut entries = DMatrix::from_element(triangular_len(n), basis.len(), Complex64::new(0.0, 0.0));
    for (l, g) in basis.functions.iter().enumerate() {
        if g.q() + 1 < n {
            debug!("GPW of order q = {} is matched at order n = {n} > q + 1", g.q());
        }
        // P is a polynomial, so padding it with zeros is exact
        let e = g.phase().with_order(n).exp_any(n)?;
        for (r, v) in e.coeffs().iter().enumerate() {
            entries[(r, l)] = *v;
        }
    }
    Ok(TaylorMatrix {
        n,
        kind: MatrixKind::Gpw,
        entries,
    })
}

fn check_angles(angles: &[f64]) -> Result<()> {
    for (i, a) in angles.iter().enumerate() {
        for b in &angles[..i] {
            let d = (a - b).rem_euclid(TAU);
            if d.min(TAU - d) < 1e-12 {
                return Err(Error::DuplicateAngles);
            }
        }
    }
    Ok(())
}

fn monomial_matrix(n: usize, pairs: &[(Complex64, Complex64)], kind: MatrixKind) -> TaylorMatrix {
    let mut entries = DMatrix::from_element(triangular_len(n), pairs.len(), Complex64::new(0.0, 0.0));
    for idx in indices_up_to(n) {
        let denom = factorial(idx.i) * factorial(idx.j);
        for (l, (a, b)) in pairs.iter().enumerate() {
            entries[(idx.flat(), l)] = a.powu(idx.i as u32) * b.powu(idx.j as u32) / denom;
        }
    }
    TaylorMatrix { n, kind, entries }
}

/// `M^R_n`: entries `cos^k1 θ_l sin^k2 θ_l / (k1! k2!)`.
pub fn reference_matrix(angles: &[f64], n: usize) -> Result<TaylorMatrix> {
    check_angles(angles)?;
    let pairs: Vec<_> = angles
        .iter()
        .map(|t| (t.cos().into(), t.sin().into()))
        .collect();
    Ok(monomial_matrix(n, &pairs, MatrixKind::Reference))
}

/// `M^C_n`: the Taylor matrix of the plane waves `exp(iκ(cos θ_l, sin θ_l)·(X, Y))`.
pub fn classical_matrix(angles: &[f64], n: usize, kappa: Complex64) -> Result<TaylorMatrix> {
    check_angles(angles)?;
    let ik = Complex64::i() * kappa;
    let pairs: Vec<_> = angles
        .iter()
        .map(|t| (ik * t.cos(), ik * t.sin()))
        .collect();
    Ok(monomial_matrix(n, &pairs, MatrixKind::Classical(kappa)))
}

/// `M^Tr_n`: entries `λ_{1,0}^k1 λ_{0,1}^k2 / (k1! k2!)`.
pub fn transition_matrix(pairs: &[(Complex64, Complex64)], n: usize) -> TaylorMatrix {
    monomial_matrix(n, pairs, MatrixKind::Transition)
}

/// The transition matrix of a basis, from its first-order coefficients.
pub fn basis_transition_matrix(basis: &GpwBasis, n: usize) -> TaylorMatrix {
    let pairs: Vec<_> = basis.functions.iter().map(|g| g.first_order()).collect();
    transition_matrix(&pairs, n)
}

/// Number of singular values above `tol` times the largest one.
pub fn numeric_rank(mat: &TaylorMatrix, tol: f64) -> usize {
    let sv = mat.entries.clone().singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > tol * max).count()
}

/// Which Taylor coefficients the matching system imposes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MatchRows {
    /// Every row `k1 + k2 ≤ n`, solved in the least-squares sense.
    #[default]
    All,
    /// Only rows with `k1 < m`. For an operator of order `m` with
    /// `α_{m,0} ≠ 0` these coefficients of a solution are free and the
    /// equation determines the others, so for `m = 2` and `p = 2n + 1` the
    /// system is square. When every column already solves the truncated
    /// equation this selects the same solution as [`MatchRows::All`]; when
    /// not, it still reproduces the free data exactly.
    Leading(usize),
}

impl MatchRows {
    fn keeps(&self, idx: MultiIndex) -> bool {
        match *self {
            MatchRows::All => true,
            MatchRows::Leading(m) => idx.i < m,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchOptions {
    /// Singular values below `rcond` times the largest are dropped.
    pub rcond: f64,
    /// Equilibrate rows before solving.
    pub row_scaling: bool,
    pub rows: MatchRows,
}

impl Default for MatchOptions {
    fn default() -> Self {
        Self {
            rcond: RANK_TOL,
            row_scaling: false,
            rows: MatchRows::All,
        }
    }
}

#[derive(Clone, Debug)]
pub struct MatchResult {
    pub x: DVector<Complex64>,
    /// `‖M X − F‖₂` over all rows, whichever rows were imposed.
    pub residual: f64,
    /// `‖M X − F‖₂ / ‖F‖₂` (or the plain residual when `F = 0`).
    pub relative_residual: f64,
}

/// Minimum-norm least-squares solution of `M X = F` by truncated SVD.
pub fn taylor_match(mat: &TaylorMatrix, f: &[Complex64], opts: MatchOptions) -> Result<MatchResult> {
    if f.len() != mat.rows() {
        return Err(Error::DimensionMismatch {
            expected: mat.rows(),
            found: f.len(),
        });
    }
    let rhs = DVector::from_column_slice(f);
    let kept: Vec<usize> = (0..mat.rows())
        .filter(|&r| opts.rows.keeps(MultiIndex::from_flat(r)))
        .collect();
    let mut a = mat.entries.select_rows(&kept);
    let mut b = rhs.select_rows(&kept);
    if opts.row_scaling {
        for r in 0..a.nrows() {
            let norm = a.row(r).norm();
            if norm > 0.0 {
                a.row_mut(r).unscale_mut(norm);
                b[r] /= norm;
            }
        }
    }
    let svd = a.svd(true, true);
    let max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let x = if max == 0.0 {
        DVector::zeros(mat.cols())
    } else {
        svd.solve(&b, opts.rcond * max)
            .map_err(|e| Error::Parse(e.to_string()))?
    };
    let residual = (&mat.entries * &x - &rhs).norm();
    let fnorm = rhs.norm();
    Ok(MatchResult {
        relative_residual: if fnorm > 0.0 { residual / fnorm } else { residual },
        residual,
        x,
    })
}

/// `u_a(x, y) = Σ_l X_l exp(P_l(x, y))`.
pub fn evaluate_combination(basis: &GpwBasis, x: &DVector<Complex64>, point: Point) -> Complex64 {
    basis
        .functions
        .iter()
        .zip(x.iter())
        .filter(|(_, c)| c.norm() != 0.0)
        .map(|(g, c)| c * g.evaluate(point))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpw::{basis_angles, build_basis, KappaPolicy};
    use crate::operator::{OperatorSpec, PdeOperator};
    use crate::TaylorSeries2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn helmholtz_basis(kappa: f64, p: usize, q: usize) -> GpwBasis {
        let op = PdeOperator::constant(
            2,
            (0.2, 0.1),
            q,
            &[((2, 0), c(-1.0)), ((0, 2), c(-1.0)), ((0, 0), c(-kappa * kappa))],
        )
        .unwrap();
        build_basis(&op, p, q, KappaPolicy::default()).unwrap()
    }

    fn variable_basis(center: Point, p: usize, q: usize) -> GpwBasis {
        let op = OperatorSpec::parse(
            2,
            &[((2, 0), "-1"), ((0, 2), "-1 - 0.1*y^2"), ((1, 0), "x"), ((0, 0), "2*(x + y)")],
        )
        .unwrap()
        .at(center, q)
        .unwrap();
        build_basis(&op, p, q, KappaPolicy::default()).unwrap()
    }

    #[test]
    fn gpw_matrix_low_rows() {
        let basis = variable_basis((0.3, 0.4), 5, 2);
        let m = assemble_gpw_matrix(&basis, 3).unwrap();
        assert_eq!((m.rows(), m.cols()), (10, 5));
        for (l, g) in basis.functions.iter().enumerate() {
            assert_eq!(m.entry(MultiIndex::new(0, 0), l), c(1.0));
            let (a, b) = g.first_order();
            assert_eq!(m.entry(MultiIndex::new(1, 0), l), a);
            assert_eq!(m.entry(MultiIndex::new(0, 1), l), b);
        }
        let m1 = assemble_gpw_matrix(&basis, 1).unwrap();
        let tr = basis_transition_matrix(&basis, 1);
        assert_eq!(m1.entries, tr.entries);
    }

    #[test]
    fn reference_matrix_small_case() {
        let m = reference_matrix(&[0.0, PI / 2.0, PI], 1).unwrap();
        let expected = [[1.0, 1.0, 1.0], [1.0, 0.0, -1.0], [0.0, 1.0, 0.0]];
        for (r, row) in expected.iter().enumerate() {
            for (col, v) in row.iter().enumerate() {
                assert!((m.entries[(r, col)] - c(*v)).norm() < 1e-15);
            }
        }
        assert_eq!(numeric_rank(&m, RANK_TOL), 3);
        assert!(matches!(reference_matrix(&[0.3, 0.3 + TAU], 1), Err(Error::DuplicateAngles)));
    }

    #[test]
    fn classical_is_block_scaled_reference() {
        let angles = basis_angles(7);
        let kappa = Complex64::new(1.5, 0.2);
        let r = reference_matrix(&angles, 4).unwrap();
        let cl = classical_matrix(&angles, 4, kappa).unwrap();
        let ik = Complex64::i() * kappa;
        for idx in indices_up_to(4) {
            let s = ik.powu(idx.length() as u32);
            for l in 0..7 {
                let want = r.entry(idx, l) * s;
                assert!((cl.entry(idx, l) - want).norm() <= 1e-14 * want.norm().max(1.0));
            }
        }
    }

    #[test]
    fn rank_is_capped_at_2n_plus_1() {
        for n in 1..=4 {
            for p in [2 * n - 1, 2 * n, 2 * n + 1, 2 * n + 2, 2 * n + 3] {
                let r = numeric_rank(&reference_matrix(&basis_angles(p), n).unwrap(), RANK_TOL);
                assert_eq!(r, p.min(2 * n + 1), "n={n} p={p}");
            }
        }
        let id = TaylorMatrix {
            n: 1,
            kind: MatrixKind::Reference,
            entries: DMatrix::identity(3, 3),
        };
        assert_eq!(numeric_rank(&id, RANK_TOL), 3);
    }

    #[test]
    fn helmholtz_transition_equals_classical() {
        let kappa = 2.0;
        let basis = helmholtz_basis(kappa, 5, 3);
        let tr = basis_transition_matrix(&basis, 3);
        let cl = classical_matrix(&basis.angles, 3, c(kappa)).unwrap();
        assert!((tr.entries - cl.entries).norm() < 1e-13);
    }

    #[test]
    fn matching_a_column() {
        let basis = variable_basis((0.1, -0.2), 7, 2);
        let m = assemble_gpw_matrix(&basis, 3).unwrap();
        let f: Vec<_> = m.entries.column(0).iter().copied().collect();
        let r = taylor_match(&m, &f, MatchOptions::default()).unwrap();
        assert!(r.relative_residual < 1e-10);
        assert!(taylor_match(&m, &f[..3], MatchOptions::default()).is_err());
        let scaled = taylor_match(&m, &f, MatchOptions { row_scaling: true, ..Default::default() }).unwrap();
        assert!(scaled.relative_residual < 1e-10);
    }

    #[test]
    fn leading_rows_agree_with_full_system_when_consistent() {
        let basis = variable_basis((0.1, -0.2), 7, 2);
        let m = assemble_gpw_matrix(&basis, 3).unwrap();
        let x0 = DVector::from_fn(7, |k, _| Complex64::new(1.0 / (k + 1) as f64, 0.3 * k as f64));
        let f: Vec<_> = (&m.entries * &x0).iter().copied().collect();
        let lead = MatchOptions {
            rows: MatchRows::Leading(2),
            ..Default::default()
        };
        let a = taylor_match(&m, &f, MatchOptions::default()).unwrap();
        let b = taylor_match(&m, &f, lead).unwrap();
        assert!(b.relative_residual < 1e-10);
        assert!((&a.x - &x0).norm() < 1e-8 * x0.norm());
        assert!((&b.x - &x0).norm() < 1e-8 * x0.norm());
    }

    #[test]
    fn leading_rows_are_matched_exactly_when_inconsistent() {
        // q = 1 columns do not solve the equation through order 3
        let basis = variable_basis((0.1, -0.2), 7, 1);
        let m = assemble_gpw_matrix(&basis, 3).unwrap();
        let f: Vec<_> = (0..m.rows()).map(|r| Complex64::new(1.0, r as f64)).collect();
        let lead = MatchOptions {
            rows: MatchRows::Leading(2),
            ..Default::default()
        };
        let r = taylor_match(&m, &f, lead).unwrap();
        let fit = &m.entries * &r.x;
        for row in 0..m.rows() {
            if MultiIndex::from_flat(row).i < 2 {
                assert!((fit[row] - f[row]).norm() < 1e-9 * f[row].norm(), "row {row}");
            }
        }
        assert!(r.relative_residual > 1e-6);
    }

    #[test]
    fn helmholtz_plane_wave_is_reproduced() {
        let kappa = 1.5;
        let basis = helmholtz_basis(kappa, 7, 2);
        let theta = basis.angles[0];
        let center = basis.center().unwrap();
        let d = (Complex64::i() * kappa * theta.cos(), Complex64::i() * kappa * theta.sin());
        let f = TaylorSeries2::from_fn(center, 3, |idx| {
            d.0.powu(idx.i as u32) * d.1.powu(idx.j as u32) / (factorial(idx.i) * factorial(idx.j))
        });
        let f = f.coeffs();
        let m = assemble_gpw_matrix(&basis, 3).unwrap();
        let r = taylor_match(&m, f, MatchOptions::default()).unwrap();
        assert!(r.residual < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let pt = (center.0 + rng.gen_range(-0.5..0.5), center.1 + rng.gen_range(-0.5..0.5));
            let exact = (d.0 * (pt.0 - center.0) + d.1 * (pt.1 - center.1)).exp();
            let got = evaluate_combination(&basis, &r.x, pt);
            assert!((got - exact).norm() < 1e-12 * exact.norm());
        }
    }

    #[test]
    fn combination_basics() {
        let basis = variable_basis((0.0, 0.5), 3, 2);
        let center = basis.center().unwrap();
        let zero = DVector::zeros(3);
        assert_eq!(evaluate_combination(&basis, &zero, (0.3, 0.3)), c(0.0));
        let mut e1 = DVector::zeros(3);
        e1[0] = c(1.0);
        assert!((evaluate_combination(&basis, &e1, center) - c(1.0)).norm() < 1e-15);
    }
}
