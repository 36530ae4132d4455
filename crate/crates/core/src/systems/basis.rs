use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIMENSION: usize = 8;
pub const MAX_DEGREE: u32 = 6;

/// Monomials in `dimension` variables up to total degree `max_degree`.
///
/// Terms are graded: all monomials of total degree g come before those of
/// degree g + 1. Within a degree they are ordered by exponent vector,
/// largest first, so for (x, y) the order is `1, x, y, x², xy, y²`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonomialBasis {
    dimension: usize,
    max_degree: u32,
    terms: Vec<Vec<u32>>,
}

impl MonomialBasis {
    pub fn new(dimension: usize, max_degree: u32) -> Result<Self> {
        if !(1..=MAX_DIMENSION).contains(&dimension) {
            return Err(Error::argument(format!(
                "dimension must be in 1..={MAX_DIMENSION}, got {dimension}"
            )));
        }
        if !(1..=MAX_DEGREE).contains(&max_degree) {
            return Err(Error::argument(format!(
                "max_degree must be in 1..={MAX_DEGREE}, got {max_degree}"
            )));
        }
        let mut terms = Vec::new();
        let mut buf = vec![0u32; dimension];
        for degree in 0..=max_degree {
            push_degree(&mut terms, &mut buf, 0, degree);
        }
        Ok(MonomialBasis {
            dimension,
            max_degree,
            terms,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[Vec<u32>] {
        &self.terms
    }

    pub fn term(&self, index: usize) -> &[u32] {
        &self.terms[index]
    }

    pub fn degree_of(&self, index: usize) -> u32 {
        self.terms[index].iter().sum()
    }

    pub fn index_of(&self, exponents: &[u32]) -> Option<usize> {
        self.terms.iter().position(|t| t == exponents)
    }

    /// Human-readable name of a term, e.g. `x1 x3^2`; the constant is `1`.
    pub fn term_name(&self, index: usize) -> String {
        let parts: Vec<String> = self.terms[index]
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, &e)| {
                if e == 1 {
                    format!("x{}", i + 1)
                } else {
                    format!("x{}^{}", i + 1, e)
                }
            })
            .collect();
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join(" ")
        }
    }

    /// Evaluates every monomial at `state` into `out` (length `len()`).
    ///
    /// `powers` is scratch space of length `dimension * (max_degree + 1)`.
    pub(crate) fn eval_into(&self, state: &[f64], powers: &mut [f64], out: &mut [f64]) {
        let stride = self.max_degree as usize + 1;
        fill_powers(state, stride, powers);
        for (slot, term) in out.iter_mut().zip(&self.terms) {
            *slot = monomial(term, powers, stride);
        }
    }
}

fn push_degree(terms: &mut Vec<Vec<u32>>, buf: &mut [u32], pos: usize, remaining: u32) {
    if pos == buf.len() - 1 {
        buf[pos] = remaining;
        terms.push(buf.to_vec());
        return;
    }
    for e in (0..=remaining).rev() {
        buf[pos] = e;
        push_degree(terms, buf, pos + 1, remaining - e);
    }
    buf[pos] = 0;
}

pub(crate) fn fill_powers(state: &[f64], stride: usize, powers: &mut [f64]) {
    for (i, &x) in state.iter().enumerate() {
        let row = &mut powers[i * stride..(i + 1) * stride];
        row[0] = 1.0;
        for e in 1..stride {
            row[e] = row[e - 1] * x;
        }
    }
}

#[inline]
pub(crate) fn monomial(term: &[u32], powers: &[f64], stride: usize) -> f64 {
    term.iter()
        .enumerate()
        .fold(1.0, |acc, (i, &e)| acc * powers[i * stride + e as usize])
}

/// Builds the monomial basis for `dimension` variables up to `max_degree`.
pub fn monomial_basis(dimension: usize, max_degree: u32) -> Result<MonomialBasis> {
    MonomialBasis::new(dimension, max_degree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn binomial(n: u64, k: u64) -> u64 {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    /// Every exponent vector in the box [0, g]^d with sum <= g, by brute force.
    fn enumerate(d: usize, g: u32) -> BTreeSet<Vec<u32>> {
        let mut out = BTreeSet::new();
        let total = (g as usize + 1).pow(d as u32);
        for code in 0..total {
            let mut c = code;
            let mut v = vec![0u32; d];
            for slot in v.iter_mut() {
                *slot = (c % (g as usize + 1)) as u32;
                c /= g as usize + 1;
            }
            if v.iter().sum::<u32>() <= g {
                out.insert(v);
            }
        }
        out
    }

    #[test]
    fn smallest_basis() {
        let b = monomial_basis(1, 1).unwrap();
        assert_eq!(b.terms(), &[vec![0], vec![1]]);
    }

    #[test]
    fn counts_match_enumeration() {
        assert_eq!(monomial_basis(3, 4).unwrap().len(), 35);
        assert_eq!(monomial_basis(4, 4).unwrap().len(), 70);
        for d in 1..=6 {
            for g in 1..=4 {
                let b = monomial_basis(d, g).unwrap();
                let brute = enumerate(d, g);
                assert_eq!(b.len(), brute.len(), "d={d} g={g}");
                assert_eq!(b.len() as u64, binomial((d as u32 + g) as u64, g as u64));
                let ours: BTreeSet<Vec<u32>> = b.terms().iter().cloned().collect();
                assert_eq!(ours, brute);
            }
        }
    }

    #[test]
    fn graded_order_and_constant_first() {
        let b = monomial_basis(3, 4).unwrap();
        assert!(b.term(0).iter().all(|&e| e == 0));
        for w in b.terms().windows(2) {
            let (da, db): (u32, u32) = (w[0].iter().sum(), w[1].iter().sum());
            assert!(da < db || (da == db && w[0] > w[1]), "{:?} {:?}", w[0], w[1]);
        }
        let two = monomial_basis(2, 2).unwrap();
        let names: Vec<String> = (0..two.len()).map(|i| two.term_name(i)).collect();
        assert_eq!(names, ["1", "x1", "x2", "x1^2", "x1 x2", "x2^2"]);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(monomial_basis(0, 2).is_err());
        assert!(monomial_basis(9, 2).is_err());
        assert!(monomial_basis(3, 0).is_err());
        assert!(monomial_basis(3, 7).is_err());
    }
}
