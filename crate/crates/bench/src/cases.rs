//! The reference operators, their exact solutions and domains.

use gpw_core::interp::{MatchOptions, MatchRows};
use gpw_core::operator::{OperatorSpec, PdeOperator};
use gpw_core::taylor2d::{indices_up_to, MultiIndex};
use gpw_core::{Complex64, Point, TaylorSeries2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{BenchError, Result};
use crate::special::{airy_ai, airy_taylor, bessel_j, bessel_taylor, horner, sine_taylor};

/// Degree of the 1D expansions used to evaluate Airy and Bessel solutions
/// near a centre; enough for disks of radius 1.
const LOCAL_DEGREE: usize = 80;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Domain {
    pub fn diameter(&self) -> f64 {
        (self.x.1 - self.x.0).hypot(self.y.1 - self.y.0)
    }

    pub fn contains(&self, (x, y): Point) -> bool {
        x > self.x.0 && x < self.x.1 && y > self.y.0 && y < self.y.1
    }

    pub fn midpoint(&self) -> Point {
        ((self.x.0 + self.x.1) / 2.0, (self.y.0 + self.y.1) / 2.0)
    }
}

/// Closed-form solutions of the reference cases.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Solution {
    /// `Ai(x + y)`.
    AiryDiagonal,
    /// `J_1(x) cos y`.
    BesselCos,
    /// `J_0(x) J_1(y)`.
    BesselBessel,
    /// `cos x sin y`.
    CosSin,
}

#[derive(Clone, Debug)]
pub struct TestCase {
    pub name: String,
    pub spec: OperatorSpec,
    pub domain: Domain,
    pub solution: Option<Solution>,
    /// Whether the validator is expected to reject this case.
    pub expected_invalid: bool,
}

fn case(name: &str, coeffs: &[((usize, usize), &str)], domain: Domain, solution: Solution) -> TestCase {
    TestCase {
        name: name.to_string(),
        spec: OperatorSpec::parse(2, coeffs).expect("built-in coefficients parse"),
        domain,
        solution: Some(solution),
        expected_invalid: false,
    }
}

/// `−Δ + 2(x+y)` with `u = Ai(x+y)` on `(−2,2)²`.
pub fn airy() -> TestCase {
    case(
        "Ad",
        &[((2, 0), "-1"), ((0, 2), "-1"), ((0, 0), "2*(x + y)")],
        Domain { x: (-2.0, 2.0), y: (-2.0, 2.0) },
        Solution::AiryDiagonal,
    )
}

/// `∇·(x²∇) + (−x, cos y)·∇ + (2x² + sin y − 1)` with `u = J_1(x) cos y`.
///
/// The zeroth-order coefficient is `−(ν² − 2x² − sin y)` with `ν = 1`; the
/// opposite sign does not annihilate `u` (see [`bessel_cos_printed`]).
pub fn bessel_cos() -> TestCase {
    case(
        "Jc",
        &[
            ((2, 0), "x^2"),
            ((0, 2), "x^2"),
            ((1, 0), "x"),
            ((0, 1), "cos(y)"),
            ((0, 0), "-(1 - 2*x^2 - sin(y))"),
        ],
        Domain { x: (1.0, 4.0), y: (0.0, std::f64::consts::TAU) },
        Solution::BesselCos,
    )
}

/// The Bessel–cosine operator with zeroth-order term `+(ν² − 2x² − sin y)`,
/// which leaves the residual `2 (1 − 2x² − sin y) J_1(x) cos y`.
pub fn bessel_cos_printed() -> TestCase {
    let mut c = case(
        "Jc-printed",
        &[
            ((2, 0), "x^2"),
            ((0, 2), "x^2"),
            ((1, 0), "x"),
            ((0, 1), "cos(y)"),
            ((0, 0), "1 - 2*x^2 - sin(y)"),
        ],
        Domain { x: (1.0, 4.0), y: (0.0, std::f64::consts::TAU) },
        Solution::BesselCos,
    );
    c.expected_invalid = true;
    c
}

/// `∇·(diag(x², y²)∇) − (x, y)·∇ + (x² + y² − 1)` with `u = J_0(x) J_1(y)`.
pub fn bessel_bessel() -> TestCase {
    case(
        "JJ",
        &[
            ((2, 0), "x^2"),
            ((0, 2), "y^2"),
            ((1, 0), "x"),
            ((0, 1), "y"),
            ((0, 0), "x^2 + y^2 - 1"),
        ],
        Domain { x: (1.0, 3.0), y: (1.0, 3.0) },
        Solution::BesselBessel,
    )
}

/// `∂x² + 0.2 cos x sin y ∂x∂y − 2∂y² + (0.2 sin x cos y − 1)` with
/// `u = cos x sin y` on `(−1,1)²`.
pub fn cos_sin() -> TestCase {
    case(
        "cs",
        &[
            ((2, 0), "1"),
            ((1, 1), "0.2*cos(x)*sin(y)"),
            ((0, 2), "-2"),
            ((0, 0), "0.2*sin(x)*cos(y) - 1"),
        ],
        Domain { x: (-1.0, 1.0), y: (-1.0, 1.0) },
        Solution::CosSin,
    )
}

/// The four shipped cases.
pub fn builtin_cases() -> Vec<TestCase> {
    vec![airy(), bessel_cos(), bessel_bessel(), cos_sin()]
}

pub fn case_by_name(name: &str) -> Result<TestCase> {
    match name {
        "Ad" => Ok(airy()),
        "Jc" => Ok(bessel_cos()),
        "Jc-printed" => Ok(bessel_cos_printed()),
        "JJ" => Ok(bessel_bessel()),
        "cs" => Ok(cos_sin()),
        other => Err(BenchError::UnknownCase(other.to_string())),
    }
}

/// The exact solution near one centre: its Taylor data and a local
/// evaluator built from the same seeds.
#[derive(Clone, Debug)]
pub struct LocalSolution {
    pub center: Point,
    kind: Solution,
    /// 1D expansions in `X` and `Y` (or in `X + Y` for the Airy case).
    sx: Vec<f64>,
    sy: Vec<f64>,
}

impl LocalSolution {
    pub fn new(kind: Solution, (x0, y0): Point, degree: usize) -> Result<Self> {
        let need_positive = |v: f64, what: &str| {
            if v > 0.0 {
                Ok(())
            } else {
                Err(BenchError::Domain(format!("Bessel expansion needs {what} > 0, got {v}")))
            }
        };
        let (sx, sy) = match kind {
            Solution::AiryDiagonal => (airy_taylor(x0 + y0, degree), Vec::new()),
            Solution::BesselCos => {
                need_positive(x0, "x")?;
                (bessel_taylor(1, x0, degree), sine_taylor(y0, std::f64::consts::FRAC_PI_2, degree))
            }
            Solution::BesselBessel => {
                need_positive(x0, "x")?;
                need_positive(y0, "y")?;
                (bessel_taylor(0, x0, degree), bessel_taylor(1, y0, degree))
            }
            Solution::CosSin => (
                sine_taylor(x0, std::f64::consts::FRAC_PI_2, degree),
                sine_taylor(y0, 0.0, degree),
            ),
        };
        Ok(Self {
            center: (x0, y0),
            kind,
            sx,
            sy,
        })
    }

    /// Scaled coefficient `D^(k1,k2) u(x0, y0)`.
    pub fn coeff(&self, idx: MultiIndex) -> f64 {
        match self.kind {
            Solution::AiryDiagonal => {
                let k = idx.length();
                self.sx[k] * gpw_core::taylor2d::binomial(k, idx.i)
            }
            _ => self.sx[idx.i] * self.sy[idx.j],
        }
    }

    /// Taylor series of `u` through order `n` (at most the construction degree).
    pub fn taylor(&self, n: usize) -> TaylorSeries2 {
        TaylorSeries2::from_fn(self.center, n, |idx| self.coeff(idx).into())
    }

    pub fn eval(&self, (x, y): Point) -> f64 {
        let (dx, dy) = (x - self.center.0, y - self.center.1);
        match self.kind {
            Solution::AiryDiagonal => horner(&self.sx, dx + dy),
            Solution::BesselCos => horner(&self.sx, dx) * y.cos(),
            Solution::BesselBessel => horner(&self.sx, dx) * horner(&self.sy, dy),
            Solution::CosSin => x.cos() * y.sin(),
        }
    }
}

impl Solution {
    /// Direct evaluation from the global series.
    pub fn value(&self, (x, y): Point) -> f64 {
        match self {
            Solution::AiryDiagonal => airy_ai(x + y).0,
            Solution::BesselCos => bessel_j(1, x) * y.cos(),
            Solution::BesselBessel => bessel_j(0, x) * bessel_j(1, y),
            Solution::CosSin => x.cos() * y.sin(),
        }
    }
}

impl TestCase {
    pub fn operator(&self, center: Point, series_order: usize) -> Result<PdeOperator> {
        Ok(self.spec.at(center, series_order)?)
    }

    fn require_solution(&self) -> Result<Solution> {
        self.solution.ok_or_else(|| BenchError::NoSolution(self.name.clone()))
    }

    pub fn local_solution(&self, center: Point) -> Result<LocalSolution> {
        LocalSolution::new(self.require_solution()?, center, LOCAL_DEGREE)
    }

    /// Scaled Taylor coefficients `F` of the exact solution through order
    /// `n`, in storage order.
    pub fn exact_solution_taylor(&self, center: Point, n: usize) -> Result<Vec<Complex64>> {
        Ok(LocalSolution::new(self.require_solution()?, center, n.max(1))?
            .taylor(n)
            .coeffs()
            .to_vec())
    }

    /// A uniformly random centre at distance at least `0.05·diam` from the
    /// boundary.
    pub fn random_center(&self, rng: &mut ChaCha8Rng) -> Point {
        let m = 0.05 * self.domain.diameter();
        let (x, y) = (self.domain.x, self.domain.y);
        (rng.gen_range(x.0 + m..x.1 - m), rng.gen_range(y.0 + m..y.1 - m))
    }
}

/// `L u` through order `order` at `center`, from the Taylor data of `u`.
pub fn manufactured_residual(case: &TestCase, center: Point, order: usize) -> Result<TaylorSeries2> {
    let op = case.operator(center, order)?;
    let m = op.order();
    let u = case.local_solution(center)?.taylor(order + m);
    let mut out = TaylorSeries2::zeros(center, order);
    for idx in indices_up_to(m) {
        let d = u.partial(idx)?.truncate(order)?;
        out.add_assign_truncated(&op.alpha(idx.i, idx.j).mul(&d, order)?)?;
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub case: String,
    pub trials: usize,
    pub max_residual: f64,
    pub passed: bool,
    pub expected_invalid: bool,
}

impl ValidationReport {
    /// Whether the outcome is the one expected for this case.
    pub fn as_expected(&self) -> bool {
        self.passed != self.expected_invalid
    }
}

pub const VALIDATION_TOL: f64 = 1e-9;

/// Checks `L u = 0` through order 2 at `trials` random centres.
pub fn validate_case(case: &TestCase, trials: usize, seed: u64) -> Result<ValidationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_residual: f64 = 0.0;
    for _ in 0..trials {
        let center = case.random_center(&mut rng);
        let r = manufactured_residual(case, center, 2)?;
        max_residual = max_residual.max(r.max_abs());
    }
    Ok(ValidationReport {
        case: case.name.clone(),
        trials,
        max_residual,
        passed: max_residual < VALIDATION_TOL,
        expected_invalid: case.expected_invalid,
    })
}

/// Matching options for the convergence harness: impose the Taylor
/// coefficients that determine a solution of an order-`m` equation.
pub fn match_options(m: usize) -> MatchOptions {
    MatchOptions {
        rows: MatchRows::Leading(m),
        ..MatchOptions::default()
    }
}
