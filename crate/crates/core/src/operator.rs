//! Linear operators `L = Σ_{k+l≤M} α_{k,l}(x,y) ∂x^k ∂y^l` and the phase
//! operator `L^A P = L e^P / e^P − α_{0,0}`.
//!
//! `L^A` is applied through the ratio series `E_{k,l} = ∂x^k ∂y^l e^P / e^P`,
//! which satisfy `E_{0,0} = 1` and `E_{k+1,l} = ∂x E_{k,l} + (∂x P) E_{k,l}`
//! (and the same in `y`). Computing `E_{k,l}` to order `Q + M − (k + l)` is
//! enough to get `L^A P` to order `Q`.

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::taylor2d::{indices_up_to, triangular_len, MultiIndex, TaylorSeries2};
use crate::Point;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative threshold for declaring `α_{M,0}(x0, y0) ≠ 0`.
pub const HYP1_TOL: f64 = 1e-10;
/// Relative threshold for zero pivots when factoring a quadratic symbol.
const SYMBOL_TOL: f64 = 1e-13;

/// An operator of order `M` with coefficients expanded about one centre.
#[derive(Clone, Debug)]
pub struct PdeOperator {
    m: usize,
    center: Point,
    series_order: usize,
    coeffs: Vec<TaylorSeries2>,
    asserted_symbol: Option<[Complex64; 3]>,
}

impl PdeOperator {
    /// Builds an operator from `((k, l), α_{k,l})` pairs; missing
    /// coefficients are zero. All series are truncated to the smallest
    /// order supplied (or `series_order` if that is smaller).
    pub fn new(
        m: usize,
        center: Point,
        series_order: usize,
        entries: impl IntoIterator<Item = ((usize, usize), TaylorSeries2)>,
    ) -> Result<Self> {
        if m < 2 {
            return Err(Error::OperatorOrder(m));
        }
        let mut slots: Vec<Option<TaylorSeries2>> = vec![None; triangular_len(m)];
        let mut order = series_order;
        for ((k, l), s) in entries {
            if k + l > m {
                return Err(Error::CoefficientIndex { k, l, order: m });
            }
            if s.center() != center {
                return Err(Error::CenterMismatch(center, s.center()));
            }
            order = order.min(s.order());
            slots[MultiIndex::new(k, l).flat()] = Some(s);
        }
        let coeffs = slots
            .into_iter()
            .map(|s| match s {
                Some(s) => s.truncate(order),
                None => Ok(TaylorSeries2::zeros(center, order)),
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            m,
            center,
            series_order: order,
            coeffs,
            asserted_symbol: None,
        })
    }

    /// An operator with constant coefficients.
    pub fn constant(
        m: usize,
        center: Point,
        series_order: usize,
        entries: &[((usize, usize), Complex64)],
    ) -> Result<Self> {
        Self::new(
            m,
            center,
            series_order,
            entries
                .iter()
                .map(|&(kl, v)| (kl, TaylorSeries2::constant(center, series_order, v))),
        )
    }

    /// Declares the principal symbol to be `(γ1 X² + γ2 XY + γ3 Y²)^{M/2}`.
    ///
    /// Needed for even `M > 2`, where the quadratic form is not recovered
    /// from the coefficients. The assertion is checked by
    /// [`check_hypotheses`].
    pub fn with_asserted_symbol(mut self, gamma: [Complex64; 3]) -> Self {
        self.asserted_symbol = Some(gamma);
        self
    }

    pub fn order(&self) -> usize {
        self.m
    }

    pub fn center(&self) -> Point {
        self.center
    }

    /// Truncation order of the coefficient series.
    pub fn series_order(&self) -> usize {
        self.series_order
    }

    pub fn alpha(&self, k: usize, l: usize) -> &TaylorSeries2 {
        &self.coeffs[MultiIndex::new(k, l).flat()]
    }

    pub fn alpha_at_center(&self, k: usize, l: usize) -> Complex64 {
        self.alpha(k, l).coeff(0, 0)
    }

    /// `A_k = α_{k,M−k}(x0, y0)` for `k = 0..=M`.
    pub fn principal_symbol(&self) -> Vec<Complex64> {
        (0..=self.m)
            .map(|k| self.alpha_at_center(k, self.m - k))
            .collect()
    }

    /// Coefficients `(γ1, γ2, γ3)` of the quadratic form behind the symbol.
    pub fn gamma(&self) -> Option<[Complex64; 3]> {
        if self.m == 2 {
            Some([
                self.alpha_at_center(2, 0),
                self.alpha_at_center(1, 1),
                self.alpha_at_center(0, 2),
            ])
        } else {
            self.asserted_symbol
        }
    }

    fn max_center_magnitude(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|s| s.coeff(0, 0).norm())
            .fold(0.0, f64::max)
    }
}

/// Operator coefficients given as expressions, expandable at any centre.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSpec {
    pub m: usize,
    pub coeffs: Vec<((usize, usize), Expr)>,
}

impl OperatorSpec {
    pub fn new(m: usize, coeffs: Vec<((usize, usize), Expr)>) -> Result<Self> {
        if m < 2 {
            return Err(Error::OperatorOrder(m));
        }
        if let Some(&((k, l), _)) = coeffs.iter().find(|((k, l), _)| k + l > m) {
            return Err(Error::CoefficientIndex { k, l, order: m });
        }
        Ok(Self { m, coeffs })
    }

    /// Parses `((k, l), source)` pairs.
    pub fn parse(m: usize, coeffs: &[((usize, usize), &str)]) -> Result<Self> {
        let parsed = coeffs
            .iter()
            .map(|&(kl, src)| Ok((kl, Expr::parse(src)?)))
            .collect::<Result<_>>()?;
        Self::new(m, parsed)
    }

    pub fn expr(&self, k: usize, l: usize) -> Option<&Expr> {
        self.coeffs
            .iter()
            .find(|(kl, _)| *kl == (k, l))
            .map(|(_, e)| e)
    }

    /// Expands every coefficient about `center` to `series_order`.
    pub fn at(&self, center: Point, series_order: usize) -> Result<PdeOperator> {
        let entries = self
            .coeffs
            .iter()
            .map(|(kl, e)| Ok((*kl, e.taylor(center, series_order)?)))
            .collect::<Result<Vec<_>>>()?;
        PdeOperator::new(self.m, center, series_order, entries)
    }
}

/// `Γ = Aᵀ D A` with `D = diag(μ1, μ2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolFactorization {
    pub gamma: Matrix2<Complex64>,
    pub a: Matrix2<Complex64>,
    pub d: [Complex64; 2],
    pub valid: bool,
}

impl SymbolFactorization {
    pub fn reconstruct(&self) -> Matrix2<Complex64> {
        self.a.transpose() * Matrix2::from_diagonal(&self.d.into()) * self.a
    }
}

/// The symmetric matrix of `γ1 X² + γ2 XY + γ3 Y²`.
pub fn gamma_matrix([g1, g2, g3]: [Complex64; 3]) -> Matrix2<Complex64> {
    Matrix2::new(g1, g2 / 2.0, g2 / 2.0, g3)
}

/// Factors `γ1 X² + γ2 XY + γ3 Y²` as `Aᵀ D A` by completing the square.
///
/// Branches are tried in a fixed order: pivot on `γ1`, else on `γ3`, else
/// substitute `X = U + V`, `Y = U − V` (which turns a pure `XY` form into a
/// difference of squares) and pivot again.
pub fn factor_principal_symbol(gamma: [Complex64; 3]) -> SymbolFactorization {
    let g = gamma_matrix(gamma);
    let scale = gamma.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tiny = |z: Complex64| z.norm() <= SYMBOL_TOL * scale;
    let (a, d) = if scale == 0.0 {
        (Matrix2::identity(), [ZERO, ZERO])
    } else if let Some(f) = complete_square(gamma, &tiny) {
        f
    } else {
        let s = Matrix2::new(ONE, ONE, ONE, -ONE);
        let rotated = s.transpose() * g * s;
        let rotated = [rotated[(0, 0)], rotated[(0, 1)] * 2.0, rotated[(1, 1)]];
        match complete_square(rotated, &tiny) {
            Some((a1, d)) => {
                let s_inv = Matrix2::new(ONE, ONE, ONE, -ONE) * Complex64::new(0.5, 0.0);
                (a1 * s_inv, d)
            }
            None => (Matrix2::identity(), [ZERO, ZERO]),
        }
    };
    let valid = scale > 0.0 && !tiny(d[0]) && !tiny(d[1]);
    SymbolFactorization {
        gamma: g,
        a,
        d,
        valid,
    }
}

fn complete_square(
    [g1, g2, g3]: [Complex64; 3],
    tiny: &impl Fn(Complex64) -> bool,
) -> Option<(Matrix2<Complex64>, [Complex64; 2])> {
    if !tiny(g1) {
        let a = Matrix2::new(ONE, g2 / (2.0 * g1), ZERO, ONE);
        Some((a, [g1, g3 - g2 * g2 / (4.0 * g1)]))
    } else if !tiny(g3) {
        let a = Matrix2::new(ONE, ZERO, g2 / (2.0 * g3), ONE);
        Some((a, [g1 - g2 * g2 / (4.0 * g3), g3]))
    } else {
        None
    }
}

#[derive(Clone, Debug)]
pub struct HypothesisReport {
    pub hyp1: bool,
    pub hyp2: Option<SymbolFactorization>,
}

pub fn check_hypotheses(op: &PdeOperator) -> HypothesisReport {
    let lead = op.alpha_at_center(op.m, 0).norm();
    let hyp1 = lead > 0.0 && lead > HYP1_TOL * op.max_center_magnitude();
    let hyp2 = if op.m.is_multiple_of(2) {
        op.gamma()
            .filter(|g| op.m == 2 || symbol_is_power(op, *g))
            .map(factor_principal_symbol)
            .filter(|f| f.valid)
    } else {
        None
    };
    HypothesisReport { hyp1, hyp2 }
}

/// Whether `Σ A_k X^k Y^{M−k}` equals `(γ1 X² + γ2 XY + γ3 Y²)^{M/2}`.
fn symbol_is_power(op: &PdeOperator, gamma: [Complex64; 3]) -> bool {
    // coefficients indexed by the power of X
    let quad = [gamma[2], gamma[1], gamma[0]];
    let mut poly = vec![ONE];
    for _ in 0..op.m / 2 {
        let mut next = vec![ZERO; poly.len() + 2];
        for (i, a) in poly.iter().enumerate() {
            for (j, b) in quad.iter().enumerate() {
                next[i + j] += a * b;
            }
        }
        poly = next;
    }
    let symbol = op.principal_symbol();
    let scale = symbol.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    poly.iter()
        .zip(&symbol)
        .all(|(a, b)| (a - b).norm() <= 1e-10 * scale)
}

fn check_inputs(op: &PdeOperator, p: &TaylorSeries2, q: usize) -> Result<()> {
    if p.center() != op.center {
        return Err(Error::CenterMismatch(op.center, p.center()));
    }
    if p.order() < q + op.m {
        return Err(Error::InsufficientOrder {
            required: q + op.m,
            available: p.order(),
        });
    }
    if op.series_order < q {
        return Err(Error::InsufficientOrder {
            required: q,
            available: op.series_order,
        });
    }
    Ok(())
}

/// The ratio series `E_{k,l} = ∂x^k ∂y^l e^P / e^P` for `k + l ≤ M`,
/// indexed by the flat position of `(k, l)`.
pub fn ratio_series(p: &TaylorSeries2, m: usize, q: usize) -> Result<Vec<TaylorSeries2>> {
    let top = q + m;
    let p = p.truncate(top)?;
    let px = p.partial(MultiIndex::new(1, 0))?;
    let py = p.partial(MultiIndex::new(0, 1))?;
    let mut e = vec![TaylorSeries2::zeros(p.center(), 0); triangular_len(m)];
    e[0] = TaylorSeries2::constant(p.center(), top, ONE);
    // increasing index order visits (k-1, l) or (k, l-1) before (k, l)
    for idx in indices_up_to(m).skip(1) {
        let ord = top - idx.length();
        let (prev, d, dp) = if idx.i > 0 {
            (MultiIndex::new(idx.i - 1, idx.j), MultiIndex::new(1, 0), &px)
        } else {
            (MultiIndex::new(0, idx.j - 1), MultiIndex::new(0, 1), &py)
        };
        let prev = &e[prev.flat()];
        let next = prev
            .partial(d)?
            .try_add(&dp.truncate(ord)?.mul(&prev.truncate(ord)?, ord)?)?;
        e[idx.flat()] = next;
    }
    Ok(e)
}

/// `L^A P = Σ_{1≤k+l≤M} α_{k,l} E_{k,l}`, truncated at `q`.
pub fn apply_phase_operator(op: &PdeOperator, p: &TaylorSeries2, q: usize) -> Result<TaylorSeries2> {
    check_inputs(op, p, q)?;
    let e = ratio_series(p, op.m, q)?;
    let mut out = TaylorSeries2::zeros(op.center, q);
    for idx in indices_up_to(op.m).skip(1) {
        let term = op
            .alpha(idx.i, idx.j)
            .truncate(q)?
            .mul(&e[idx.flat()].truncate(q)?, q)?;
        out.add_assign_truncated(&term)?;
    }
    Ok(out)
}

/// The linear part `L^L P = Σ_{1≤k+l≤M} α_{k,l} ∂x^k ∂y^l P`, truncated at `q`.
pub fn apply_linear_part(op: &PdeOperator, p: &TaylorSeries2, q: usize) -> Result<TaylorSeries2> {
    check_inputs(op, p, q)?;
    let mut out = TaylorSeries2::zeros(op.center, q);
    for idx in indices_up_to(op.m).skip(1) {
        let d = p.partial(idx)?.truncate(q)?;
        out.add_assign_truncated(&op.alpha(idx.i, idx.j).truncate(q)?.mul(&d, q)?)?;
    }
    Ok(out)
}

/// `L^A P + α_{0,0}`, i.e. `L e^P / e^P`, truncated at `q`.
pub fn residual_series(op: &PdeOperator, p: &TaylorSeries2, q: usize) -> Result<TaylorSeries2> {
    apply_phase_operator(op, p, q)?.try_add(&op.alpha(0, 0).truncate(q)?)
}
