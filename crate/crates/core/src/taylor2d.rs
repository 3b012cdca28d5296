//! Truncated bivariate Taylor series about a fixed centre.
//!
//! Coefficients are stored in the *scaled* convention: the entry for the
//! multi-index `(i, j)` is `D^(i,j) f(x0, y0) = ∂x^i ∂y^j f(x0, y0) / (i! j!)`,
//! i.e. the coefficient of `X^i Y^j` with `X = x - x0`, `Y = y - y0`.
//! Storage is a flat triangular array, entry `(i, j)` living at
//! `(i + j)(i + j + 1)/2 + j`.
//!
//! Truncated products and derivatives only ever touch coefficients whose
//! length does not exceed the requested truncation order, so the
//! `(I, J)` coefficient of a product depends only on input coefficients of
//! length at most `I + J`.

use std::cmp::Ordering;
use std::f64::consts::FRAC_PI_2;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::Point;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A pair `(i, j)` of derivative orders in `x` and `y`.
///
/// The ordering is the total order used by the bivariate chain rule:
/// shorter indices come first, and among indices of equal length the one
/// with the smaller `x` order comes first, so `(0,1) < (1,0) < (0,2)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    pub i: usize,
    pub j: usize,
}

impl MultiIndex {
    pub const ZERO: MultiIndex = MultiIndex { i: 0, j: 0 };

    pub const fn new(i: usize, j: usize) -> Self {
        Self { i, j }
    }

    /// Total order `i + j`.
    pub const fn length(self) -> usize {
        self.i + self.j
    }

    /// Position in triangular storage.
    pub const fn flat(self) -> usize {
        let n = self.i + self.j;
        n * (n + 1) / 2 + self.j
    }

    pub fn from_flat(k: usize) -> Self {
        // largest n with n(n+1)/2 <= k
        let mut n = ((((8 * k + 1) as f64).sqrt() - 1.0) / 2.0) as usize;
        while n * (n + 1) / 2 > k {
            n -= 1;
        }
        while (n + 1) * (n + 2) / 2 <= k {
            n += 1;
        }
        let j = k - n * (n + 1) / 2;
        Self { i: n - j, j }
    }

    /// `self <= other` componentwise.
    pub fn fits_in(self, other: MultiIndex) -> bool {
        self.i <= other.i && self.j <= other.j
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.length()
            .cmp(&other.length())
            .then(self.i.cmp(&other.i))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.i, self.j)
    }
}

impl From<(usize, usize)> for MultiIndex {
    fn from((i, j): (usize, usize)) -> Self {
        Self { i, j }
    }
}

/// Compares two multi-indices under the chain-rule order.
pub fn mi_compare(a: MultiIndex, b: MultiIndex) -> Ordering {
    a.cmp(&b)
}

/// Number of coefficients of a series truncated at `order`.
pub const fn triangular_len(order: usize) -> usize {
    (order + 1) * (order + 2) / 2
}

/// All multi-indices of length at most `order`, in increasing order.
///
/// Note this differs from storage order within a length: `(0,1)` precedes
/// `(1,0)` here but is stored after it.
pub fn indices_up_to(order: usize) -> impl Iterator<Item = MultiIndex> {
    (0..=order).flat_map(|n| (0..=n).map(move |i| MultiIndex::new(i, n - i)))
}

/// An affine function `a x + b y + c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Affine {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Affine {
    pub const X: Affine = Affine { a: 1.0, b: 0.0, c: 0.0 };
    pub const Y: Affine = Affine { a: 0.0, b: 1.0, c: 0.0 };

    pub fn eval(&self, (x, y): Point) -> f64 {
        self.a * x + self.b * y + self.c
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Closed-form functions with exact Taylor expansions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Elementary {
    Constant(Complex64),
    CoordinateX,
    CoordinateY,
    Affine(Affine),
    SinOf(Affine),
    CosOf(Affine),
    PowerOfCoordinate { axis: Axis, exponent: u32 },
}

/// Truncated bivariate Taylor series with complex scaled coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct TaylorSeries2 {
    center: Point,
    order: usize,
    coeffs: Vec<Complex64>,
}

impl TaylorSeries2 {
    pub fn zeros(center: Point, order: usize) -> Self {
        Self {
            center,
            order,
            coeffs: vec![ZERO; triangular_len(order)],
        }
    }

    pub fn constant(center: Point, order: usize, value: Complex64) -> Self {
        let mut s = Self::zeros(center, order);
        s.coeffs[0] = value;
        s
    }

    pub fn from_fn(center: Point, order: usize, mut f: impl FnMut(MultiIndex) -> Complex64) -> Self {
        let coeffs = (0..triangular_len(order))
            .map(|k| f(MultiIndex::from_flat(k)))
            .collect();
        Self {
            center,
            order,
            coeffs,
        }
    }

    /// Builds a series from coefficients given in storage order.
    pub fn from_coeffs(center: Point, order: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != triangular_len(order) {
            return Err(Error::DimensionMismatch {
                expected: triangular_len(order),
                found: coeffs.len(),
            });
        }
        Ok(Self {
            center,
            order,
            coeffs,
        })
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Coefficients in storage order.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Scaled coefficient `(i, j)`. Panics if `i + j` exceeds the order.
    pub fn coeff(&self, i: usize, j: usize) -> Complex64 {
        assert!(
            i + j <= self.order,
            "coefficient ({i},{j}) beyond order {}",
            self.order
        );
        self.coeffs[MultiIndex::new(i, j).flat()]
    }

    pub fn get(&self, idx: MultiIndex) -> Option<Complex64> {
        (idx.length() <= self.order).then(|| self.coeffs[idx.flat()])
    }

    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        assert!(
            i + j <= self.order,
            "coefficient ({i},{j}) beyond order {}",
            self.order
        );
        self.coeffs[MultiIndex::new(i, j).flat()] = value;
    }

    /// Iterates `(index, coefficient)` pairs in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (MultiIndex, Complex64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| (MultiIndex::from_flat(k), *c))
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Drops every coefficient of length above `order`.
    pub fn truncate(&self, order: usize) -> Result<Self> {
        self.require_order(order)?;
        Ok(Self {
            center: self.center,
            order,
            coeffs: self.coeffs[..triangular_len(order)].to_vec(),
        })
    }

    /// Truncates or pads with zeros. Padding is exact only for polynomials.
    pub fn with_order(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(triangular_len(order), ZERO);
        Self {
            center: self.center,
            order,
            coeffs,
        }
    }

    fn require_order(&self, required: usize) -> Result<()> {
        if required > self.order {
            Err(Error::InsufficientOrder {
                required,
                available: self.order,
            })
        } else {
            Ok(())
        }
    }

    fn require_center(&self, other: &Self) -> Result<()> {
        if self.center != other.center {
            Err(Error::CenterMismatch(self.center, other.center))
        } else {
            Ok(())
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.require_center(other)?;
        let order = self.order.min(other.order);
        let n = triangular_len(order);
        let coeffs = self.coeffs[..n]
            .iter()
            .zip(&other.coeffs[..n])
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            center: self.center,
            order,
            coeffs,
        })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.try_add(&other.scaled(-ONE))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            center: self.center,
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// Adds `other` into `self` in place, over the common order.
    pub fn add_assign_truncated(&mut self, other: &Self) -> Result<()> {
        self.require_center(other)?;
        let n = triangular_len(self.order.min(other.order));
        for (a, b) in self.coeffs[..n].iter_mut().zip(&other.coeffs[..n]) {
            *a += b;
        }
        Ok(())
    }

    /// Product truncated at `order`.
    pub fn mul(&self, other: &Self, order: usize) -> Result<Self> {
        self.require_center(other)?;
        self.require_order(order)?;
        other.require_order(order)?;
        let mut out = Self::zeros(self.center, order);
        for n in 0..=order {
            for i in 0..=n {
                let j = n - i;
                let mut acc = ZERO;
                for ti in 0..=i {
                    for tj in 0..=j {
                        acc += self.coeffs[MultiIndex::new(i - ti, j - tj).flat()]
                            * other.coeffs[MultiIndex::new(ti, tj).flat()];
                    }
                }
                out.coeffs[MultiIndex::new(i, j).flat()] = acc;
            }
        }
        Ok(out)
    }

    /// Applies the scaled derivative `D^(d) = ∂x^di ∂y^dj / (di! dj!)`.
    ///
    /// The result has order `order - |d|` and coefficient
    /// `C(i+di, di) C(j+dj, dj) a_(i+di, j+dj)`.
    pub fn derive(&self, d: MultiIndex) -> Result<Self> {
        self.shifted(d, |i, j| binomial(i + d.i, d.i) * binomial(j + d.j, d.j))
    }

    /// Applies the plain partial derivative `∂x^di ∂y^dj`.
    pub fn partial(&self, d: MultiIndex) -> Result<Self> {
        self.shifted(d, |i, j| falling(i + d.i, d.i) * falling(j + d.j, d.j))
    }

    fn shifted(&self, d: MultiIndex, weight: impl Fn(usize, usize) -> f64) -> Result<Self> {
        self.require_order(d.length())?;
        let order = self.order - d.length();
        let mut out = Self::zeros(self.center, order);
        for idx in indices_up_to(order) {
            let src = MultiIndex::new(idx.i + d.i, idx.j + d.j);
            out.coeffs[idx.flat()] = self.coeffs[src.flat()] * weight(idx.i, idx.j);
        }
        Ok(out)
    }

    /// `exp(self)` truncated at `order`, for a series with zero constant term.
    ///
    /// Uses `X ∂x e^a = (X ∂x a) e^a` (and the `Y` analogue on the `i = 0`
    /// column), which gives each coefficient from coefficients of strictly
    /// smaller length.
    pub fn exp(&self, order: usize) -> Result<Self> {
        self.require_order(order)?;
        let a00 = self.coeffs[0];
        if a00 != ZERO {
            return Err(Error::NonzeroConstant(a00));
        }
        let a = |i: usize, j: usize| self.coeffs[MultiIndex::new(i, j).flat()];
        let mut f = Self::zeros(self.center, order);
        f.coeffs[0] = ONE;
        for n in 1..=order {
            for i in 0..=n {
                let j = n - i;
                let value = if i > 0 {
                    let mut acc = ZERO;
                    for k in 1..=i {
                        for l in 0..=j {
                            acc += a(k, l) * f.coeff(i - k, j - l) * k as f64;
                        }
                    }
                    acc / i as f64
                } else {
                    let mut acc = ZERO;
                    for l in 1..=j {
                        acc += a(0, l) * f.coeff(0, j - l) * l as f64;
                    }
                    acc / j as f64
                };
                f.coeffs[MultiIndex::new(i, j).flat()] = value;
            }
        }
        Ok(f)
    }

    /// `exp(self)` for an arbitrary constant term.
    pub fn exp_any(&self, order: usize) -> Result<Self> {
        let mut shifted = self.truncate(order)?;
        let c0 = shifted.coeffs[0];
        shifted.coeffs[0] = ZERO;
        Ok(shifted.exp(order)?.scaled(c0.exp()))
    }

    /// Evaluates the truncated polynomial at `(x, y)` by nested Horner.
    pub fn evaluate(&self, (x, y): Point) -> Complex64 {
        let dx = x - self.center.0;
        let dy = y - self.center.1;
        let mut outer = ZERO;
        for i in (0..=self.order).rev() {
            let mut inner = ZERO;
            for j in (0..=self.order - i).rev() {
                inner = inner * dy + self.coeff(i, j);
            }
            outer = outer * dx + inner;
        }
        outer
    }

    /// Exact truncated expansion of a closed-form function about `center`.
    pub fn elementary(kind: Elementary, center: Point, order: usize) -> Self {
        match kind {
            Elementary::Constant(c) => Self::constant(center, order, c),
            Elementary::CoordinateX => Self::elementary(Elementary::Affine(Affine::X), center, order),
            Elementary::CoordinateY => Self::elementary(Elementary::Affine(Affine::Y), center, order),
            Elementary::Affine(f) => {
                let mut s = Self::constant(center, order, f.eval(center).into());
                if order >= 1 {
                    s.set(1, 0, f.a.into());
                    s.set(0, 1, f.b.into());
                }
                s
            }
            Elementary::SinOf(f) => trig_of(f, center, order, 0.0),
            Elementary::CosOf(f) => trig_of(f, center, order, FRAC_PI_2),
            Elementary::PowerOfCoordinate { axis, exponent } => {
                let base = match axis {
                    Axis::X => center.0,
                    Axis::Y => center.1,
                };
                let e = exponent as usize;
                let mut s = Self::zeros(center, order);
                for k in 0..=e.min(order) {
                    let c = binomial(e, k) * base.powi((e - k) as i32);
                    match axis {
                        Axis::X => s.set(k, 0, c.into()),
                        Axis::Y => s.set(0, k, c.into()),
                    }
                }
                s
            }
        }
    }
}

/// `sin(f + phase)` for affine `f`: the `(i, j)` scaled coefficient is
/// `a^i b^j sin(f(c) + phase + (i+j)π/2) / (i! j!)`.
fn trig_of(f: Affine, center: Point, order: usize, phase: f64) -> TaylorSeries2 {
    let arg = f.eval(center) + phase;
    let (s, c) = arg.sin_cos();
    // sin(arg + nπ/2) cycles through s, c, -s, -c
    let cycle = [s, c, -s, -c];
    TaylorSeries2::from_fn(center, order, |idx| {
        let v = f.a.powi(idx.i as i32) * f.b.powi(idx.j as i32) * cycle[idx.length() % 4]
            / (factorial(idx.i) * factorial(idx.j));
        v.into()
    })
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `n! / (n-k)!`
pub fn falling(n: usize, k: usize) -> f64 {
    (n - k + 1..=n).map(|m| m as f64).product()
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for m in 0..k {
        acc = acc * (n - m) as f64 / (m + 1) as f64;
    }
    acc.round()
}
