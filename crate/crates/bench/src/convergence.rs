//! Random-centre convergence studies.

use gpw_core::gpw::{build_basis, KappaPolicy};
use gpw_core::interp::{assemble_gpw_matrix, evaluate_combination, taylor_match};
use gpw_core::{Error as CoreError, Point};
use log::{debug, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cases::{match_options, TestCase};
use crate::error::{BenchError, Result};
use crate::order::{estimate_order, OrderEstimate};

/// Draws allowed per centre before giving up on hypothesis failures.
const MAX_DRAWS: usize = 1000;
const SAMPLE_RADII: usize = 8;
const SAMPLE_ANGLES: usize = 32;

/// `count` logarithmically spaced values from `hmax` down to `hmin`.
pub fn h_grid(hmax: f64, hmin: f64, count: usize) -> Result<Vec<f64>> {
    if !(hmin > 0.0 && hmax > hmin) || count < 2 {
        return Err(BenchError::Domain(format!(
            "bad h grid: hmax = {hmax}, hmin = {hmin}, count = {count}"
        )));
    }
    let (a, b) = (hmax.ln(), hmin.ln());
    Ok((0..count)
        .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
        .collect())
}

/// The default grid: 12 values from 1 to 1e-6.
pub fn default_h_grid() -> Vec<f64> {
    h_grid(1.0, 1e-6, 12).expect("valid default grid")
}

/// The fixed polar sampling of the disk of radius `h`: the centre plus
/// 8 radii × 32 angles.
pub fn disk_samples((x0, y0): Point, h: f64) -> impl Iterator<Item = Point> {
    std::iter::once((x0, y0)).chain((1..=SAMPLE_RADII).flat_map(move |r| {
        let rad = h * r as f64 / SAMPLE_RADII as f64;
        (0..SAMPLE_ANGLES).map(move |a| {
            let t = std::f64::consts::TAU * a as f64 / SAMPLE_ANGLES as f64;
            (x0 + rad * t.cos(), y0 + rad * t.sin())
        })
    }))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StudyConfig {
    pub n: usize,
    pub q: usize,
    pub p: usize,
    pub centers: usize,
    pub seed: u64,
}

impl StudyConfig {
    /// `p = 2n + 1`, 50 centres.
    pub fn new(n: usize, q: usize, seed: u64) -> Self {
        Self {
            n,
            q,
            p: 2 * n + 1,
            centers: 50,
            seed,
        }
    }
}

/// Errors at one centre, one per `h`.
#[derive(Clone, Debug)]
pub struct CenterErrors {
    pub center: Point,
    /// Draws rejected before this centre was accepted.
    pub rejected: usize,
    pub relative_residual: f64,
    /// Maximum of `|u − u_a|` over the samples of every disk up to radius `h`.
    pub errors: Vec<f64>,
}

/// Draws the `index`-th centre and evaluates the approximation error there.
///
/// Each centre has its own random stream, so results do not depend on the
/// order in which centres are processed.
pub fn center_errors(case: &TestCase, cfg: &StudyConfig, index: u64, hs: &[f64]) -> Result<CenterErrors> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index);
    for rejected in 0..MAX_DRAWS {
        let center = case.random_center(&mut rng);
        let op = case.operator(center, cfg.q)?;
        let basis = match build_basis(&op, cfg.p, cfg.q, KappaPolicy::default()) {
            Ok(b) => b,
            Err(e @ (CoreError::LeadingCoefficientVanishes(_) | CoreError::SymbolNotFactorable)) => {
                warn!("{}: redrawing centre {center:?}: {e}", case.name);
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let mat = assemble_gpw_matrix(&basis, cfg.n)?;
        let f = case.exact_solution_taylor(center, cfg.n)?;
        let sol = taylor_match(&mat, &f, match_options(op.order()))?;
        let exact = case.local_solution(center)?;

        let mut errors = Vec::with_capacity(hs.len());
        let mut running: f64 = 0.0;
        // smallest disk first so that the maximum accumulates over nested disks
        for &h in hs.iter().rev() {
            for pt in disk_samples(center, h) {
                let e = (evaluate_combination(&basis, &sol.x, pt) - exact.eval(pt)).norm();
                running = running.max(e);
            }
            errors.push(running);
        }
        errors.reverse();
        debug!("{} centre {index} at {center:?}: residual {:.2e}", case.name, sol.relative_residual);
        return Ok(CenterErrors {
            center,
            rejected,
            relative_residual: sol.relative_residual,
            errors,
        });
    }
    Err(BenchError::NoAdmissibleCenter(MAX_DRAWS))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub case: String,
    pub n: usize,
    pub q: usize,
    pub p: usize,
    pub seed: u64,
    /// Strictly decreasing.
    pub hs: Vec<f64>,
    /// Maximum error over all centres, per `h`.
    pub max_err: Vec<f64>,
    /// `None` when the errors did not allow a fit.
    pub order: Option<OrderEstimate>,
}

impl ConvergenceReport {
    pub fn slope(&self) -> Option<f64> {
        self.order.map(|o| o.slope)
    }

    pub fn floor(&self) -> Option<f64> {
        self.order.and_then(|o| o.floor)
    }
}

pub fn run_convergence(case: &TestCase, cfg: &StudyConfig, hs: &[f64]) -> Result<ConvergenceReport> {
    if cfg.q == 0 || cfg.p == 0 || cfg.centers == 0 {
        return Err(BenchError::Domain("q, p and the number of centres must be positive".into()));
    }
    if hs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(BenchError::Domain("h values must be strictly decreasing".into()));
    }
    let per_center = (0..cfg.centers as u64)
        .into_par_iter()
        .map(|i| center_errors(case, cfg, i, hs))
        .collect::<Result<Vec<_>>>()?;
    let max_err = (0..hs.len())
        .map(|k| per_center.iter().map(|c| c.errors[k]).fold(0.0, f64::max))
        .collect::<Vec<_>>();
    let order = match estimate_order(hs, &max_err) {
        Ok(o) => Some(o),
        Err(BenchError::TooFewPoints { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(ConvergenceReport {
        case: case.name.clone(),
        n: cfg.n,
        q: cfg.q,
        p: cfg.p,
        seed: cfg.seed,
        hs: hs.to_vec(),
        max_err,
        order,
    })
}
