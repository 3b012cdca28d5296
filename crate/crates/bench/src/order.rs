//! Log–log slope fitting with detection of the small-`h` error floor.

use crate::error::{BenchError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderEstimate {
    pub slope: f64,
    /// Level at which the error stops decreasing, if a plateau was seen.
    pub floor: Option<f64>,
    /// Number of points used by the fit.
    pub fitted: usize,
}

/// Local slopes below this count as stagnation.
const PLATEAU_SLOPE: f64 = 1.0;

/// Estimates the convergence order from errors at decreasing `h`.
///
/// Walking in from the smallest `h`, consecutive points whose local slope
/// stays below 1 form the plateau; with at least two such points its largest
/// error is the floor. The slope is then a least-squares fit of
/// `log err` against `log h` over the points whose error exceeds ten times
/// the floor.
pub fn estimate_order(hs: &[f64], errs: &[f64]) -> Result<OrderEstimate> {
    if hs.len() != errs.len() {
        return Err(BenchError::Domain(format!(
            "{} step sizes but {} errors",
            hs.len(),
            errs.len()
        )));
    }
    if hs.len() < 4 {
        return Err(BenchError::TooFewPoints {
            needed: 4,
            found: hs.len(),
        });
    }
    if hs.windows(2).any(|w| w[1] >= w[0]) || hs.iter().any(|h| *h <= 0.0) {
        return Err(BenchError::Domain("step sizes must be positive and strictly decreasing".into()));
    }
    // errors of exactly zero sit on any floor
    let tiny = f64::MIN_POSITIVE;
    let logs: Vec<(f64, f64)> = hs.iter().zip(errs).map(|(h, e)| (h.ln(), e.max(tiny).ln())).collect();

    let last = logs.len() - 1;
    let mut start = last;
    while start > 0 {
        let (a, b) = (logs[start - 1], logs[start]);
        if (a.1 - b.1) / (a.0 - b.0) >= PLATEAU_SLOPE {
            break;
        }
        start -= 1;
    }
    let floor = (last - start >= 1).then(|| errs[start..].iter().copied().fold(0.0, f64::max));

    let pts: Vec<(f64, f64)> = logs
        .iter()
        .zip(errs)
        .filter(|(_, e)| floor.map_or(**e > 0.0, |f| **e > 10.0 * f))
        .map(|(p, _)| *p)
        .collect();
    if pts.len() < 2 {
        return Err(BenchError::TooFewPoints {
            needed: 2,
            found: pts.len(),
        });
    }
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let (sxy, sxx) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + (x - mx) * (y - my), b + (x - mx) * (x - mx)));
    Ok(OrderEstimate {
        slope: sxy / sxx,
        floor,
        fitted: pts.len(),
    })
}
