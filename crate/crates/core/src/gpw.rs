//! Construction of GPW phase polynomials.
//!
//! The unknowns `λ_{i,j}` with `i ≥ M` are solved level by level: level `L`
//! holds the `λ` of length `M + L`, and setting the residual coefficients
//! `(I, L − I)`, `I = 0..=L`, to zero gives a lower triangular system in
//! them. Every `λ_{i,j}` with `i < M` is a free value fixed up front by the
//! normalisation; by default all of them are zero except `(λ_{1,0}, λ_{0,1})`,
//! which mimic the linear phase of a plane wave.

use std::f64::consts::{FRAC_PI_6, TAU};
use std::fmt::Write as _;

use nalgebra::{DMatrix, Matrix2, Vector2};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::operator::{check_hypotheses, residual_series, PdeOperator, SymbolFactorization};
use crate::taylor2d::{falling, indices_up_to, triangular_len, MultiIndex, TaylorSeries2};
use crate::Point;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Below this magnitude `α_{0,0}(x0, y0)` is treated as zero by the
/// default κ policy.
pub const KAPPA_FALLBACK_TOL: f64 = 1e-10;

/// The phase polynomial `P` of a GPW `exp(P)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GpwPolynomial {
    m: usize,
    q: usize,
    phase: TaylorSeries2,
}

impl GpwPolynomial {
    pub fn center(&self) -> Point {
        self.phase.center()
    }

    /// Order `M` of the operator the GPW was built for.
    pub fn operator_order(&self) -> usize {
        self.m
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// `dP = M + q − 1`.
    pub fn degree(&self) -> usize {
        self.m + self.q - 1
    }

    pub fn lambda(&self, i: usize, j: usize) -> Complex64 {
        self.phase.coeff(i, j)
    }

    pub fn first_order(&self) -> (Complex64, Complex64) {
        (self.lambda(1, 0), self.lambda(0, 1))
    }

    /// `P` as a series whose order is its degree.
    pub fn phase(&self) -> &TaylorSeries2 {
        &self.phase
    }

    /// `exp(P(x, y))`.
    pub fn evaluate(&self, point: Point) -> Complex64 {
        self.phase.evaluate(point).exp()
    }

    /// Text form: `center x0 y0`, `order M`, `q q`, then one
    /// `i j re im` line per coefficient in increasing index order.
    pub fn to_text(&self) -> String {
        let (x0, y0) = self.center();
        let mut s = format!("center {x0} {y0}\norder {}\nq {}\n", self.m, self.q);
        for idx in indices_up_to(self.phase.order()) {
            let v = self.phase.coeff(idx.i, idx.j);
            let _ = writeln!(s, "{} {} {} {}", idx.i, idx.j, v.re, v.im);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Parse(msg.to_string());
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let mut header = |key: &str| -> Result<Vec<String>> {
            let line = lines.next().ok_or_else(|| bad("truncated header"))?;
            let mut it = line.split_whitespace();
            if it.next() != Some(key) {
                return Err(Error::Parse(format!("expected {key:?} line")));
            }
            Ok(it.map(String::from).collect())
        };
        let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number {s:?}")));
        let int = |s: &str| s.parse::<usize>().map_err(|_| Error::Parse(format!("bad integer {s:?}")));
        let c = header("center")?;
        if c.len() != 2 {
            return Err(bad("center needs two values"));
        }
        let center = (num(&c[0])?, num(&c[1])?);
        let m = int(header("order")?.first().ok_or_else(|| bad("missing order"))?)?;
        let q = int(header("q")?.first().ok_or_else(|| bad("missing q"))?)?;
        if m < 2 || q == 0 {
            return Err(bad("order must be at least 2 and q at least 1"));
        }
        let mut phase = TaylorSeries2::zeros(center, m + q - 1);
        let mut seen = 0;
        for line in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(Error::Parse(format!("bad coefficient line {line:?}")));
            }
            let (i, j) = (int(f[0])?, int(f[1])?);
            if i + j > phase.order() {
                return Err(Error::Parse(format!("index ({i},{j}) beyond degree")));
            }
            phase.set(i, j, Complex64::new(num(f[2])?, num(f[3])?));
            seen += 1;
        }
        if seen != triangular_len(phase.order()) {
            return Err(Error::DimensionMismatch {
                expected: triangular_len(phase.order()),
                found: seen,
            });
        }
        Ok(Self { m, q, phase })
    }
}

/// Free values of one construction.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GpwNormalization {
    pub theta: f64,
    pub kappa: Complex64,
    /// Explicit `(λ_{1,0}, λ_{0,1})`; bypasses the symbol factorisation.
    pub first_order: Option<(Complex64, Complex64)>,
    /// Further free values `λ_{i,j}` (`i < M`) overriding the zero default.
    pub fixed_values: Vec<(MultiIndex, Complex64)>,
}

impl GpwNormalization {
    pub fn new(theta: f64, kappa: Complex64) -> Self {
        Self {
            theta,
            kappa,
            ..Self::default()
        }
    }

    pub fn with_first_order(l10: Complex64, l01: Complex64) -> Self {
        Self {
            first_order: Some((l10, l01)),
            ..Self::default()
        }
    }
}

/// `(λ_{1,0}, λ_{0,1}) = iκ A⁻¹ D^{−1/2} (cos θ, sin θ)`, principal roots.
pub fn first_order_lambda(
    f: &SymbolFactorization,
    kappa: Complex64,
    theta: f64,
) -> Result<(Complex64, Complex64)> {
    if !f.valid {
        return Err(Error::SymbolNotFactorable);
    }
    if kappa == ZERO {
        return Err(Error::ZeroKappa);
    }
    let a_inv: Matrix2<Complex64> = f.a.try_inverse().ok_or(Error::SymbolNotFactorable)?;
    let scaled = Vector2::new(
        Complex64::from(theta.cos()) / f.d[0].sqrt(),
        Complex64::from(theta.sin()) / f.d[1].sqrt(),
    );
    let v = a_inv * scaled * (Complex64::i() * kappa);
    Ok((v[0], v[1]))
}

/// A phase polynomial under construction, tracking which `λ` are set.
#[derive(Clone, Debug)]
pub struct PartialPhase {
    q: usize,
    series: TaylorSeries2,
    known: Vec<bool>,
}

impl PartialPhase {
    pub fn new(center: Point, m: usize, q: usize) -> Self {
        let order = m + q - 1;
        Self {
            q,
            series: TaylorSeries2::zeros(center, order),
            known: vec![false; triangular_len(order)],
        }
    }

    pub fn set(&mut self, idx: MultiIndex, v: Complex64) {
        self.series.set(idx.i, idx.j, v);
        self.known[idx.flat()] = true;
    }

    pub fn is_set(&self, idx: MultiIndex) -> bool {
        self.known.get(idx.flat()).copied().unwrap_or(false)
    }

    pub fn series(&self) -> &TaylorSeries2 {
        &self.series
    }
}

/// `Π_k^{I,L} = (k+I)! (M−k+L−I)! / (I! (L−I)!)`.
pub fn pi_weight(m: usize, k: usize, i: usize, l: usize) -> f64 {
    falling(k + i, k) * falling(m - k + l - i, m - k)
}

/// The lower triangular matrix `T^L` of level `L`, of size `M + L + 1`.
///
/// Column `c` stands for `λ_{c, M+L−c}`. The first `M` rows pin the free
/// values; row `M + I` holds `Π_k^{I,L} α_{k,M−k}(x0, y0)` in column `I + k`.
pub fn level_matrix(op: &PdeOperator, level: usize) -> DMatrix<Complex64> {
    let m = op.order();
    let size = m + level + 1;
    let symbol = op.principal_symbol();
    let mut t = DMatrix::from_element(size, size, ZERO);
    for r in 0..m {
        t[(r, r)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..=level {
        for (k, a) in symbol.iter().enumerate() {
            t[(m + i, i + k)] = *a * pi_weight(m, k, i, level);
        }
    }
    t
}

/// `det T^L = Π_{I=0}^{L} (I+M)!/I! · α_{M,0}^{L+1}`.
pub fn level_determinant(m: usize, level: usize, alpha_m0: Complex64) -> Complex64 {
    let product: f64 = (0..=level).map(|i| falling(i + m, m)).product();
    alpha_m0.powu(level as u32 + 1) * product
}

/// Right-hand side `N_{I,L−I}`, `I = 0..=L`, of the level-`L` rows.
///
/// With every unknown of level `L` taken as zero, the residual coefficient
/// `(I, L − I)` is what the already known `λ` contribute; `N_I` is its
/// negative with the known level-`L` columns of `T^L` added back.
pub fn level_rhs(op: &PdeOperator, partial: &PartialPhase, level: usize) -> Result<Vec<Complex64>> {
    let m = op.order();
    if level >= partial.q {
        return Err(Error::LevelOutOfRange {
            level,
            q: partial.q,
        });
    }
    let top = m + level;
    if let Some(idx) = indices_up_to(top).find(|idx| (idx.length() < top || idx.i < m) && !partial.is_set(*idx)) {
        return Err(Error::LowerLevelUnset(idx));
    }
    let mut z = partial.series.truncate(top)?;
    for i in m..=top {
        z.set(i, top - i, ZERO);
    }
    let r = residual_series(op, &z, level)?;
    let t = level_matrix(op, level);
    Ok((0..=level)
        .map(|i| {
            let known: Complex64 = (i..m).map(|c| t[(m + i, c)] * z.coeff(c, top - c)).sum();
            known - r.coeff(i, level - i)
        })
        .collect())
}

/// Sizes of the construction: unknowns in `P`, equations, and free values.
pub fn counts(m: usize, q: usize) -> (usize, usize, usize) {
    ((m + q) * (m + q + 1) / 2, q * (q + 1) / 2, m * (m + 1) / 2 + q * m)
}

/// Builds a GPW of order `q` by forward substitution.
pub fn construct_gpw(op: &PdeOperator, q: usize, norm: &GpwNormalization) -> Result<GpwPolynomial> {
    let first = match norm.first_order {
        Some(pair) => pair,
        None => {
            let f = check_hypotheses(op).hyp2.ok_or(Error::SymbolNotFactorable)?;
            first_order_lambda(&f, norm.kappa, norm.theta)?
        }
    };
    construct_with(op, q, first, &norm.fixed_values)
}

fn construct_with(
    op: &PdeOperator,
    q: usize,
    (l10, l01): (Complex64, Complex64),
    fixed: &[(MultiIndex, Complex64)],
) -> Result<GpwPolynomial> {
    if q == 0 {
        return Err(Error::ZeroQ);
    }
    let m = op.order();
    if op.series_order() + 1 < q {
        return Err(Error::InsufficientOrder {
            required: q - 1,
            available: op.series_order(),
        });
    }
    if !check_hypotheses(op).hyp1 {
        return Err(Error::LeadingCoefficientVanishes(op.alpha_at_center(m, 0)));
    }
    let degree = m + q - 1;
    let mut partial = PartialPhase::new(op.center(), m, q);
    let mut n_fixed = 0;
    for idx in indices_up_to(degree).filter(|idx| idx.i < m) {
        partial.set(idx, ZERO);
        n_fixed += 1;
    }
    partial.set(MultiIndex::new(1, 0), l10);
    partial.set(MultiIndex::new(0, 1), l01);
    for &(idx, v) in fixed {
        if idx.i >= m || idx.length() > degree {
            return Err(Error::NotFree(idx));
        }
        partial.set(idx, v);
    }

    let mut n_solved = 0;
    for level in 0..q {
        let top = m + level;
        let rhs = level_rhs(op, &partial, level)?;
        let t = level_matrix(op, level);
        let mut col: Vec<Complex64> = (0..=top).map(|c| partial.series.coeff(c, top - c)).collect();
        for (i, n) in rhs.iter().enumerate() {
            let row = m + i;
            let known: Complex64 = (i..row).map(|c| t[(row, c)] * col[c]).sum();
            col[row] = (n - known) / t[(row, row)];
            partial.set(MultiIndex::new(row, level - i), col[row]);
            n_solved += 1;
        }
    }
    let (n_dof, n_eqn, n_free) = counts(m, q);
    debug_assert_eq!(n_solved, n_eqn);
    debug_assert_eq!(n_fixed, n_free);
    debug_assert_eq!(n_solved + n_fixed, n_dof);
    debug_assert!(partial.known.iter().all(|k| *k));

    Ok(GpwPolynomial {
        m,
        q,
        phase: partial.series,
    })
}

/// How κ is chosen for a basis.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum KappaPolicy {
    /// `κ = √α_{0,0}(x0, y0)` (principal root), or 1 when that vanishes.
    ///
    /// With `Γ` read off the coefficients (so `Γ = −Id` for `−Δ`), this makes
    /// the constant-coefficient Helmholtz GPWs exact plane waves.
    #[default]
    SqrtAlpha00,
    Fixed(Complex64),
}

impl KappaPolicy {
    pub fn kappa(&self, op: &PdeOperator) -> Complex64 {
        match *self {
            KappaPolicy::SqrtAlpha00 => {
                let a00 = op.alpha_at_center(0, 0);
                if a00.norm() < KAPPA_FALLBACK_TOL {
                    Complex64::new(1.0, 0.0)
                } else {
                    a00.sqrt()
                }
            }
            KappaPolicy::Fixed(k) => k,
        }
    }
}

/// `θ_l = π/6 + 2(l−1)π/p` reduced to `[0, 2π)`, `l = 1..=p`.
pub fn basis_angles(p: usize) -> Vec<f64> {
    (0..p)
        .map(|l| (FRAC_PI_6 + TAU * l as f64 / p as f64).rem_euclid(TAU))
        .collect()
}

/// `p` GPWs sharing a centre.
#[derive(Clone, Debug)]
pub struct GpwBasis {
    pub functions: Vec<GpwPolynomial>,
    /// Empty when the basis was built from explicit first-order pairs.
    pub angles: Vec<f64>,
    pub kappa: Option<Complex64>,
    pub factorization: Option<SymbolFactorization>,
}

impl GpwBasis {
    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn center(&self) -> Option<Point> {
        self.functions.first().map(GpwPolynomial::center)
    }
}

/// Builds `p` normalised GPWs at the angles of [`basis_angles`].
pub fn build_basis(op: &PdeOperator, p: usize, q: usize, policy: KappaPolicy) -> Result<GpwBasis> {
    if p == 0 {
        return Err(Error::EmptyBasis);
    }
    let report = check_hypotheses(op);
    if !report.hyp1 {
        return Err(Error::LeadingCoefficientVanishes(op.alpha_at_center(op.order(), 0)));
    }
    let f = report.hyp2.ok_or(Error::SymbolNotFactorable)?;
    let kappa = policy.kappa(op);
    let angles = basis_angles(p);
    let functions = angles
        .par_iter()
        .map(|&theta| construct_with(op, q, first_order_lambda(&f, kappa, theta)?, &[]))
        .collect::<Result<Vec<_>>>()?;
    Ok(GpwBasis {
        functions,
        angles,
        kappa: Some(kappa),
        factorization: Some(f),
    })
}

/// Builds one GPW per explicit `(λ_{1,0}, λ_{0,1})` pair; only `α_{M,0} ≠ 0`
/// is required, so this also covers operators of changing type.
pub fn build_basis_from_pairs(
    op: &PdeOperator,
    q: usize,
    pairs: &[(Complex64, Complex64)],
) -> Result<GpwBasis> {
    if pairs.is_empty() {
        return Err(Error::EmptyBasis);
    }
    let functions = pairs
        .par_iter()
        .map(|&pair| construct_with(op, q, pair, &[]))
        .collect::<Result<Vec<_>>>()?;
    Ok(GpwBasis {
        functions,
        angles: Vec::new(),
        kappa: None,
        factorization: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::OperatorSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn rc(rng: &mut ChaCha8Rng) -> Complex64 {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    }

    fn helmholtz(center: Point, kappa: f64) -> PdeOperator {
        PdeOperator::constant(
            2,
            center,
            6,
            &[((2, 0), c(-1.0)), ((0, 2), c(-1.0)), ((0, 0), c(-kappa * kappa))],
        )
        .unwrap()
    }

    /// 𝔏 = −∂x² + γ11 ∂x∂y + γ02 ∂y² + γ10 ∂x + γ01 ∂y + γ00 with smooth γ.
    fn variable_second_order(center: Point, order: usize) -> PdeOperator {
        OperatorSpec::parse(
            2,
            &[
                ((2, 0), "-1"),
                ((1, 1), "0.3*sin(x + 2*y)"),
                ((0, 2), "-1 - 0.2*x^2"),
                ((1, 0), "cos(y)"),
                ((0, 1), "x*y"),
                ((0, 0), "1 + x - y^2"),
            ],
        )
        .unwrap()
        .at(center, order)
        .unwrap()
    }

    fn max_residual(op: &PdeOperator, g: &GpwPolynomial) -> f64 {
        let p = g.phase().with_order(g.degree().max(g.q() - 1 + op.order()));
        residual_series(op, &p, g.q() - 1).unwrap().max_abs()
    }

    #[test]
    fn level_matrix_helmholtz_level0() {
        let t = level_matrix(&helmholtz((0.0, 0.0), 1.0), 0);
        assert_eq!(t.nrows(), 3);
        assert_eq!(t[(0, 0)], c(1.0));
        assert_eq!(t[(1, 1)], c(1.0));
        let row: Vec<_> = (0..3).map(|j| t[(2, j)]).collect();
        assert_eq!(row, vec![c(-2.0), c(0.0), c(-2.0)]);
        assert_eq!(t.determinant(), c(-2.0));
        assert_eq!(level_determinant(2, 0, c(-1.0)), c(-2.0));
    }

    #[test]
    fn level_matrix_is_lower_triangular_with_known_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for m in 2..=4 {
            let entries: Vec<_> = (0..=m).map(|k| ((k, m - k), rc(&mut rng))).collect();
            let op = PdeOperator::constant(m, (0.0, 0.0), 1, &entries).unwrap();
            for level in 0..=4 {
                let t = level_matrix(&op, level);
                for r in 0..t.nrows() {
                    for col in r + 1..t.ncols() {
                        assert_eq!(t[(r, col)], ZERO);
                    }
                }
                let diag: Complex64 = (0..t.nrows()).map(|r| t[(r, r)]).product();
                let formula = level_determinant(m, level, op.alpha_at_center(m, 0));
                assert!((diag - formula).norm() <= 1e-12 * formula.norm());
            }
        }
    }

    #[test]
    fn level_rhs_second_order_display() {
        let op = variable_second_order((0.3, 0.6), 3);
        let (l10, l01) = (Complex64::new(0.2, 0.9), Complex64::new(-0.5, 0.4));
        let mut partial = PartialPhase::new(op.center(), 2, 3);
        for idx in indices_up_to(4).filter(|i| i.i < 2) {
            partial.set(idx, ZERO);
        }
        partial.set(MultiIndex::new(1, 0), l10);
        partial.set(MultiIndex::new(0, 1), l01);
        let a = |k, l| op.alpha_at_center(k, l);
        let expected = -a(0, 1) * l01 - a(1, 0) * l10
            - (-l10 * l10 + a(1, 1) * l10 * l01 + a(0, 2) * l01 * l01)
            - a(0, 0);
        let n = level_rhs(&op, &partial, 0).unwrap();
        assert!((n[0] - expected).norm() < 1e-14);

        // untouched zeros above the current level do not matter
        let mut probe = partial.clone();
        probe.set(MultiIndex::new(0, 4), c(3.0));
        probe.set(MultiIndex::new(1, 3), c(-1.0));
        assert_eq!(level_rhs(&op, &probe, 0).unwrap(), n);

        // the next level needs the current one
        assert!(matches!(level_rhs(&op, &partial, 1), Err(Error::LowerLevelUnset(_))));
        assert!(matches!(level_rhs(&op, &partial, 3), Err(Error::LevelOutOfRange { .. })));
    }

    #[test]
    fn level_rhs_vanishes_for_plane_waves() {
        let kappa = 1.3;
        let op = helmholtz((0.0, 0.0), kappa);
        let theta = 0.4f64;
        let mut partial = PartialPhase::new(op.center(), 2, 1);
        for idx in indices_up_to(2).filter(|i| i.i < 2) {
            partial.set(idx, ZERO);
        }
        partial.set(MultiIndex::new(1, 0), Complex64::i() * kappa * theta.cos());
        partial.set(MultiIndex::new(0, 1), Complex64::i() * kappa * theta.sin());
        assert!(level_rhs(&op, &partial, 0).unwrap()[0].norm() < 1e-15);
    }

    #[test]
    fn helmholtz_reduces_to_plane_waves() {
        for kappa in [1.0, 2.5] {
            let op = helmholtz((0.1, -0.3), kappa);
            let basis = build_basis(&op, 8, 5, KappaPolicy::default()).unwrap();
            for (g, theta) in basis.functions.iter().zip(&basis.angles) {
                for idx in indices_up_to(g.degree()).filter(|i| i.length() >= 2) {
                    assert!(g.lambda(idx.i, idx.j).norm() < 1e-14, "{idx}");
                }
                // e^{iκ(cos θ, sin θ)·(x, y)}
                let (l10, l01) = g.first_order();
                assert!((l10 - Complex64::i() * kappa * theta.cos()).norm() < 1e-14);
                assert!((l01 - Complex64::i() * kappa * theta.sin()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn second_order_level0_formula() {
        // −Δ + 2(x+y) at level 0: −2λ20 − λ10² − λ01² + 2(x0+y0) = 0
        let center = (0.3, -0.8);
        let op = OperatorSpec::parse(2, &[((2, 0), "-1"), ((0, 2), "-1"), ((0, 0), "2*(x+y)")])
            .unwrap()
            .at(center, 2)
            .unwrap();
        let norm = GpwNormalization::new(0.7, c(1.4));
        let g = construct_gpw(&op, 2, &norm).unwrap();
        let (l10, l01) = g.first_order();
        let expected = (center.0 + center.1) - 0.5 * (l10 * l10 + l01 * l01);
        assert!((g.lambda(2, 0) - expected).norm() < 1e-14);
        assert!(max_residual(&op, &g) < 1e-13);
    }

    #[test]
    fn residual_vanishes_for_variable_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for q in 1..=6 {
            let center = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let op = variable_second_order(center, q);
            let theta = rng.gen_range(0.0..TAU);
            let g = construct_gpw(&op, q, &GpwNormalization::new(theta, c(1.1))).unwrap();
            assert_eq!(g.degree(), q + 1);
            assert!(max_residual(&op, &g) < 1e-11, "q={q}");
        }
    }

    #[test]
    fn residual_vanishes_with_random_free_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let op = variable_second_order((0.2, 0.5), 4);
        let fixed: Vec<_> = indices_up_to(5)
            .filter(|i| i.i < 2 && i.length() >= 2)
            .map(|i| (i, rc(&mut rng)))
            .collect();
        let norm = GpwNormalization {
            fixed_values: fixed.clone(),
            ..GpwNormalization::new(1.0, c(0.8))
        };
        let g = construct_gpw(&op, 4, &norm).unwrap();
        for (idx, v) in &fixed {
            assert_eq!(g.lambda(idx.i, idx.j), *v);
        }
        let scale = g.phase().max_abs().max(1.0);
        assert!(max_residual(&op, &g) < 1e-11 * scale.powi(2));

        let bad = GpwNormalization {
            fixed_values: vec![(MultiIndex::new(2, 0), c(1.0))],
            ..GpwNormalization::new(1.0, c(0.8))
        };
        assert!(matches!(construct_gpw(&op, 4, &bad), Err(Error::NotFree(_))));
    }

    #[test]
    fn third_and_fourth_order_operators() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for m in [3, 4] {
            let center = (0.1, 0.2);
            let entries: Vec<_> = indices_up_to(m)
                .map(|idx| {
                    let s = TaylorSeries2::from_fn(center, 4, |_| rc(&mut rng));
                    ((idx.i, idx.j), s)
                })
                .collect();
            let op = PdeOperator::new(m, center, 4, entries).unwrap();
            let norm = GpwNormalization::with_first_order(rc(&mut rng), rc(&mut rng));
            let g = construct_gpw(&op, 5, &norm).unwrap();
            assert_eq!(g.degree(), m + 4);
            let scale = g.phase().max_abs().max(1.0);
            assert!(max_residual(&op, &g) < 1e-11 * scale.powi(m as i32), "M={m}");
        }
    }

    #[test]
    fn type_changing_operator_with_explicit_first_order() {
        // ∂x² + x³ ∂y² at the origin: the symbol degenerates but α20 = 1
        let op = OperatorSpec::parse(2, &[((2, 0), "1"), ((0, 2), "x^3")])
            .unwrap()
            .at((0.0, 0.0), 2)
            .unwrap();
        assert!(construct_gpw(&op, 3, &GpwNormalization::new(0.0, c(1.0))).is_err());
        let g = construct_gpw(&op, 3, &GpwNormalization::with_first_order(c(1.0), c(1.0))).unwrap();
        assert!(max_residual(&op, &g) < 1e-13);
        let basis = build_basis_from_pairs(&op, 3, &[(c(1.0), c(1.0)), (c(0.0), c(2.0))]).unwrap();
        assert_eq!(basis.len(), 2);
        assert!(basis.angles.is_empty());
    }

    #[test]
    fn construction_errors() {
        let op = PdeOperator::constant(2, (0.0, 0.0), 3, &[((0, 2), c(1.0))]).unwrap();
        let norm = GpwNormalization::with_first_order(c(1.0), c(0.0));
        assert!(matches!(
            construct_gpw(&op, 2, &norm),
            Err(Error::LeadingCoefficientVanishes(_))
        ));
        let op = helmholtz((0.0, 0.0), 1.0);
        assert!(matches!(
            construct_gpw(&op, 2, &GpwNormalization::new(0.0, c(0.0))),
            Err(Error::ZeroKappa)
        ));
        assert!(matches!(construct_gpw(&op, 0, &norm), Err(Error::ZeroQ)));
        assert!(matches!(construct_gpw(&op, 9, &norm), Err(Error::InsufficientOrder { .. })));
        assert!(matches!(build_basis(&op, 0, 2, KappaPolicy::default()), Err(Error::EmptyBasis)));
    }

    #[test]
    fn normalization_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let center = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let op = variable_second_order(center, 2);
            let basis = build_basis(&op, 5, 2, KappaPolicy::default()).unwrap();
            let [g1, g2, g3] = op.gamma().unwrap();
            let kappa = basis.kappa.unwrap();
            for g in &basis.functions {
                let (a, b) = g.first_order();
                let form = g1 * a * a + g2 * a * b + g3 * b * b;
                assert!((form + kappa * kappa).norm() <= 1e-12 * kappa.norm_sqr().max(1.0));
            }
        }
    }

    #[test]
    fn kappa_policy_fallback() {
        let op = PdeOperator::constant(2, (0.0, 0.0), 1, &[((2, 0), c(-1.0)), ((0, 2), c(-1.0))]).unwrap();
        assert_eq!(KappaPolicy::default().kappa(&op), c(1.0));
        assert_eq!(KappaPolicy::Fixed(c(3.0)).kappa(&op), c(3.0));
        let op = helmholtz((0.0, 0.0), 2.0);
        assert_eq!(KappaPolicy::default().kappa(&op), Complex64::new(0.0, 2.0));
    }

    #[test]
    fn angles() {
        use std::f64::consts::PI;
        let a = basis_angles(3);
        let expected = [PI / 6.0, PI / 6.0 + 2.0 * PI / 3.0, PI / 6.0 + 4.0 * PI / 3.0];
        for (x, y) in a.iter().zip(expected) {
            assert!((x - y).abs() < 1e-15);
        }
        for p in 1..12 {
            let a = basis_angles(p);
            assert!(a.iter().all(|t| (0.0..TAU).contains(t)));
            for i in 0..p {
                for j in 0..i {
                    assert!((a[i] - a[j]).abs() > 1e-9);
                }
            }
        }
    }

    #[test]
    fn counting_identities() {
        for m in 2..=5 {
            for q in 1..=6 {
                let (dof, eqn, free) = counts(m, q);
                assert_eq!(dof, triangular_len(m + q - 1));
                assert_eq!(eqn + free, dof);
                let free_direct = indices_up_to(m + q - 1).filter(|i| i.i < m).count();
                assert_eq!(free, free_direct);
            }
        }
    }

    #[test]
    fn text_roundtrip() {
        let op = variable_second_order((0.25, -0.5), 3);
        let g = construct_gpw(&op, 3, &GpwNormalization::new(0.3, c(1.0))).unwrap();
        let text = g.to_text();
        assert!(text.starts_with("center 0.25 -0.5\norder 2\nq 3\n0 0 0 0\n0 1 "));
        assert_eq!(GpwPolynomial::from_text(&text).unwrap(), g);
        assert!(GpwPolynomial::from_text("center 0 0\norder 2\nq 1\n0 0 0 0\n").is_err());
        assert!(GpwPolynomial::from_text("order 2\n").is_err());
    }
}
