//! Bivariate Faa di Bruno partitions.
//!
//! A partition of a target `(i, j)` with multiplicity `mu` is a strictly
//! increasing (under the chain-rule order) sequence of nonzero indices
//! `(i_m, j_m)` with positive multiplicities `k_m` such that
//! `Σ k_m (i_m, j_m) = (i, j)` and `Σ k_m = mu`.
//!
//! This is slow and combinatorial on purpose: it is an independent check of
//! the recurrences used in [`crate::operator`].

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::PdeOperator;
use crate::taylor2d::{factorial, indices_up_to, MultiIndex, TaylorSeries2};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    /// `(k_m, (i_m, j_m))`, strictly increasing in the index.
    pub parts: Vec<(usize, MultiIndex)>,
}

impl Partition {
    /// Number of distinct parts `s`.
    pub fn distinct(&self) -> usize {
        self.parts.len()
    }

    /// Total multiplicity `Σ k_m`.
    pub fn mu(&self) -> usize {
        self.parts.iter().map(|(k, _)| k).sum()
    }

    pub fn total(&self) -> MultiIndex {
        self.parts.iter().fold(MultiIndex::ZERO, |acc, (k, idx)| {
            MultiIndex::new(acc.i + k * idx.i, acc.j + k * idx.j)
        })
    }
}

/// All partitions of `target` with total multiplicity `mu`.
pub fn enumerate_partitions(target: MultiIndex, mu: usize) -> Result<Vec<Partition>> {
    if mu == 0 || mu > target.length() {
        return Err(Error::MultiplicityOutOfRange {
            target,
            mu,
            max: target.length(),
        });
    }
    // candidate parts, already in increasing order
    let candidates: Vec<MultiIndex> = indices_up_to(target.length())
        .skip(1)
        .filter(|idx| idx.fits_in(target))
        .collect();
    let mut out = Vec::new();
    let mut stack = Vec::new();
    extend(&candidates, 0, target, mu, &mut stack, &mut out);
    Ok(out)
}

fn extend(
    candidates: &[MultiIndex],
    start: usize,
    remaining: MultiIndex,
    mu_left: usize,
    stack: &mut Vec<(usize, MultiIndex)>,
    out: &mut Vec<Partition>,
) {
    if remaining == MultiIndex::ZERO {
        if mu_left == 0 {
            out.push(Partition {
                parts: stack.clone(),
            });
        }
        return;
    }
    if mu_left == 0 {
        return;
    }
    for (pos, &idx) in candidates.iter().enumerate().skip(start) {
        let mut k = 1;
        while k <= mu_left && MultiIndex::new(k * idx.i, k * idx.j).fits_in(remaining) {
            stack.push((k, idx));
            let rest = MultiIndex::new(remaining.i - k * idx.i, remaining.j - k * idx.j);
            extend(candidates, pos + 1, rest, mu_left - k, stack, out);
            stack.pop();
            k += 1;
        }
    }
}

/// `∂x^i ∂y^j e^P / e^P` at the centre, by the bivariate Faa di Bruno formula.
///
/// The result is an ordinary (unscaled) derivative; the series `P` holds
/// scaled coefficients.
pub fn faa_di_bruno_exp_derivative(p: &TaylorSeries2, target: MultiIndex) -> Result<Complex64> {
    if target.length() > p.order() {
        return Err(Error::InsufficientOrder {
            required: target.length(),
            available: p.order(),
        });
    }
    if target == MultiIndex::ZERO {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for mu in 1..=target.length() {
        for part in enumerate_partitions(target, mu)? {
            let mut term = Complex64::new(1.0, 0.0);
            for &(k, idx) in &part.parts {
                term *= p.coeff(idx.i, idx.j).powu(k as u32) / factorial(k);
            }
            acc += term;
        }
    }
    Ok(acc * factorial(target.i) * factorial(target.j))
}

/// Taylor series of `e^{P − P(x0, y0)}` with every coefficient from
/// [`faa_di_bruno_exp_derivative`].
pub fn exp_series(p: &TaylorSeries2, order: usize) -> Result<TaylorSeries2> {
    let mut out = TaylorSeries2::zeros(p.center(), order);
    for idx in indices_up_to(order) {
        let d = faa_di_bruno_exp_derivative(p, idx)?;
        out.set(idx.i, idx.j, d / (factorial(idx.i) * factorial(idx.j)));
    }
    Ok(out)
}

/// `L^A P` to order `q`, assembled as `e^{−P} Σ α_{k,l} ∂x^k ∂y^l e^P` with
/// both exponentials expanded by partition enumeration.
pub fn apply_phase_operator_oracle(
    op: &PdeOperator,
    p: &TaylorSeries2,
    q: usize,
) -> Result<TaylorSeries2> {
    let top = q + op.order();
    let g = exp_series(p, top)?;
    let h = exp_series(&p.truncate(q)?.scaled((-1.0).into()), q)?;
    let mut sum = TaylorSeries2::zeros(p.center(), q);
    for idx in indices_up_to(op.order()).skip(1) {
        let d = g.partial(idx)?.truncate(q)?;
        sum.add_assign_truncated(&op.alpha(idx.i, idx.j).truncate(q)?.mul(&d, q)?)?;
    }
    sum.mul(&h, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mi(i: usize, j: usize) -> MultiIndex {
        MultiIndex::new(i, j)
    }

    /// Exhaustive search over multiplicity vectors indexed by candidate
    /// part, pruned only when a running sum overshoots the target.
    fn brute_force(target: MultiIndex, mu: usize) -> Vec<Vec<(usize, MultiIndex)>> {
        fn walk(
            cands: &[MultiIndex],
            mult: &mut Vec<usize>,
            target: MultiIndex,
            mu: usize,
            out: &mut Vec<Vec<(usize, MultiIndex)>>,
        ) {
            let (mut si, mut sj, mut sk) = (0, 0, 0);
            for (k, c) in mult.iter().zip(cands) {
                si += k * c.i;
                sj += k * c.j;
                sk += k;
            }
            if si > target.i || sj > target.j || sk > mu {
                return;
            }
            if mult.len() == cands.len() {
                if (si, sj, sk) == (target.i, target.j, mu) {
                    out.push(
                        mult.iter()
                            .zip(cands)
                            .filter(|(k, _)| **k > 0)
                            .map(|(k, c)| (*k, *c))
                            .collect(),
                    );
                }
                return;
            }
            for k in 0..=mu {
                mult.push(k);
                walk(cands, mult, target, mu, out);
                mult.pop();
            }
        }
        let cands: Vec<_> = indices_up_to(target.length())
            .skip(1)
            .filter(|c| c.fits_in(target))
            .collect();
        let mut out = Vec::new();
        walk(&cands, &mut Vec::new(), target, mu, &mut out);
        out.sort();
        out
    }

    #[test]
    fn small_examples() {
        assert_eq!(
            enumerate_partitions(mi(1, 0), 1).unwrap(),
            vec![Partition { parts: vec![(1, mi(1, 0))] }]
        );
        assert_eq!(
            enumerate_partitions(mi(1, 1), 2).unwrap(),
            vec![Partition { parts: vec![(1, mi(0, 1)), (1, mi(1, 0))] }]
        );
        assert_eq!(
            enumerate_partitions(mi(2, 0), 2).unwrap(),
            vec![Partition { parts: vec![(2, mi(1, 0))] }]
        );
        assert_eq!(
            enumerate_partitions(mi(2, 0), 1).unwrap(),
            vec![Partition { parts: vec![(1, mi(2, 0))] }]
        );
        assert!(enumerate_partitions(mi(1, 1), 3).is_err());
        assert!(enumerate_partitions(mi(1, 1), 0).is_err());
    }

    #[test]
    fn matches_exhaustive_search() {
        for target in indices_up_to(5).skip(1) {
            for mu in 1..=target.length() {
                let mut got: Vec<_> = enumerate_partitions(target, mu)
                    .unwrap()
                    .into_iter()
                    .map(|p| {
                        assert!(p.parts.windows(2).all(|w| w[0].1 < w[1].1));
                        assert_eq!(p.total(), target);
                        assert_eq!(p.mu(), mu);
                        p.parts
                    })
                    .collect();
                got.sort();
                assert_eq!(got, brute_force(target, mu), "{target} mu={mu}");
            }
        }
        let mut got: Vec<_> = enumerate_partitions(mi(3, 3), 3)
            .unwrap()
            .into_iter()
            .map(|p| p.parts)
            .collect();
        got.sort();
        assert_eq!(got, brute_force(mi(3, 3), 3));
    }

    #[test]
    fn only_first_derivatives_reach_full_multiplicity() {
        // a length-M target split into M factors must use only (1,0) and (0,1)
        for m in 2..=4 {
            for k in 0..=m {
                let parts = enumerate_partitions(mi(k, m - k), m).unwrap();
                assert_eq!(parts.len(), 1);
                let expected: Vec<_> = [(m - k, mi(0, 1)), (k, mi(1, 0))]
                    .into_iter()
                    .filter(|(mult, _)| *mult > 0)
                    .collect();
                assert_eq!(parts[0].parts, expected);
            }
        }
    }

    #[test]
    fn exp_derivative_matches_recurrence() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let p = TaylorSeries2::from_fn((0.1, 0.2), 3, |idx| {
            if idx == MultiIndex::ZERO {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            }
        });
        let e = p.exp(3).unwrap();
        assert_eq!(faa_di_bruno_exp_derivative(&p, MultiIndex::ZERO).unwrap(), 1.0.into());
        assert_eq!(faa_di_bruno_exp_derivative(&p, mi(1, 0)).unwrap(), p.coeff(1, 0));
        for idx in indices_up_to(3) {
            let oracle = e.coeff(idx.i, idx.j) * factorial(idx.i) * factorial(idx.j);
            let got = faa_di_bruno_exp_derivative(&p, idx).unwrap();
            assert!((got - oracle).norm() <= 1e-12 * oracle.norm().max(1.0), "{idx}");
        }
        assert!(faa_di_bruno_exp_derivative(&p, mi(2, 2)).is_err());
    }
}
