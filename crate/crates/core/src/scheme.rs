//! Coupling schemes: spaces, paths, multiplicities and design-space dimensions.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::cg::{triangle, Weight};
use crate::error::{Error, Result};
use crate::group::{Group, Parity};

/// A weight with its inversion parity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Irrep {
    pub l: Weight,
    pub p: Parity,
}

impl fmt::Display for Irrep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.l, self.p)
    }
}

/// One tensor-product summand. Parity is declared for the term as a whole.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Term {
    pub factors: Vec<Weight>,
    pub parity: Parity,
}

impl Term {
    pub fn new(factors: Vec<Weight>, parity: Parity) -> Self {
        Term { factors, parity }
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(|w| w.dim()).product()
    }

    pub fn rank(&self) -> usize {
        self.factors.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpaceSpec {
    group: Group,
    terms: Vec<Term>,
}

impl SpaceSpec {
    /// Validates the terms. Parities are forced to `+` outside O(3).
    pub fn new(group: Group, mut terms: Vec<Term>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::arg("a space needs at least one term"));
        }
        for (i, t) in terms.iter_mut().enumerate() {
            if t.factors.is_empty() {
                return Err(Error::arg(format!("term {i} has no factors")));
            }
            if !group.allows_half_integer() {
                if let Some(w) = t.factors.iter().find(|w| !w.is_integer()) {
                    return Err(Error::Domain(format!(
                        "half-integer weight {w} in term {i} is not a {group} representation"
                    )));
                }
            }
            if !group.has_parity() {
                t.parity = Parity::Even;
            }
        }
        Ok(SpaceSpec { group, terms })
    }

    /// `(V)^{⊗n}` for the natural representation `V`: Cartesian rank-`n` tensors
    /// for the rotation groups, `n` spinors for SU(2).
    pub fn natural_power(group: Group, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("rank must be at least 1"));
        }
        let factors = vec![group.natural_weight(); n];
        SpaceSpec::new(group, vec![Term::new(factors, Parity::of_rank(n))])
    }

    pub fn irrep(group: Group, l: Weight, p: Parity) -> Result<Self> {
        SpaceSpec::new(group, vec![Term::new(vec![l], p)])
    }

    pub fn group(&self) -> Group {
        self.group
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn dim(&self) -> usize {
        self.terms.iter().map(Term::dim).sum()
    }

    /// Row offset of each term inside the direct sum.
    pub fn offsets(&self) -> Vec<usize> {
        self.terms
            .iter()
            .scan(0, |acc, t| {
                let at = *acc;
                *acc += t.dim();
                Some(at)
            })
            .collect()
    }

    /// Every path of every term, term by term.
    pub fn paths(&self) -> Vec<Path> {
        self.terms
            .iter()
            .enumerate()
            .flat_map(|(i, t)| enumerate_term_paths(t, i))
            .collect()
    }

    /// `Some(n)` when the space is exactly `(natural)^{⊗n}`.
    pub fn natural_rank(&self) -> Option<usize> {
        let nat = self.group.natural_weight();
        match self.terms.as_slice() {
            [t] if t.factors.iter().all(|&w| w == nat)
                && (!self.group.has_parity() || t.parity == Parity::of_rank(t.rank())) =>
            {
                Some(t.rank())
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Step {
    pub bridge: Weight,
    pub result: Weight,
}

/// A walk through the coupling scheme of one term.
///
/// The general form starts at the first factor's weight and takes one step
/// per remaining factor. The classic form starts at 0 and takes one step per
/// factor. Both describe the same path matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Path {
    pub term_index: usize,
    pub start: Weight,
    pub steps: Vec<Step>,
    pub parity: Parity,
}

impl Path {
    pub fn terminal(&self) -> Weight {
        self.steps.last().map_or(self.start, |s| s.result)
    }

    pub fn terminal_irrep(&self) -> Irrep {
        Irrep {
            l: self.terminal(),
            p: self.parity,
        }
    }

    /// Start followed by every intermediate result.
    pub fn results(&self) -> Vec<Weight> {
        std::iter::once(self.start)
            .chain(self.steps.iter().map(|s| s.result))
            .collect()
    }

    pub fn bridges(&self) -> Vec<Weight> {
        self.steps.iter().map(|s| s.bridge).collect()
    }

    /// Checks that the bridges are the factors of `term` and every step obeys
    /// the triangle rule.
    pub(crate) fn check_against(&self, term: &Term) -> Result<()> {
        let bridges = self.bridges();
        let ok = if self.steps.len() == term.rank() {
            self.start == Weight::ZERO && bridges == term.factors
        } else if self.steps.len() + 1 == term.rank() {
            self.start == term.factors[0] && bridges[..] == term.factors[1..]
        } else {
            false
        };
        if !ok {
            return Err(Error::arg(format!("path {self} does not walk the factors of its term")));
        }
        let mut prev = self.start;
        for s in &self.steps {
            if !triangle(prev, s.bridge, s.result) {
                return Err(Error::arg(format!(
                    "step {prev} x {} -> {} violates the triangle rule",
                    s.bridge, s.result
                )));
            }
            prev = s.result;
        }
        Ok(())
    }

    /// The same path written from a zero start.
    pub fn to_classic(&self) -> Path {
        if self.start == Weight::ZERO && !self.steps.is_empty() {
            return self.clone();
        }
        let mut steps = vec![Step {
            bridge: self.start,
            result: self.start,
        }];
        steps.extend_from_slice(&self.steps);
        Path {
            start: Weight::ZERO,
            steps,
            ..self.clone()
        }
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.start)?;
        for s in &self.steps {
            write!(f, "->{}", s.result)?;
        }
        Ok(())
    }
}

/// All paths of `term` in the general scheme, ordered lexicographically by results.
pub fn enumerate_paths(term: &Term) -> Vec<Path> {
    enumerate_term_paths(term, 0)
}

pub(crate) fn enumerate_term_paths(term: &Term, term_index: usize) -> Vec<Path> {
    fn walk(bridges: &[Weight], prev: Weight, steps: &mut Vec<Step>, out: &mut Vec<Vec<Step>>) {
        let Some((&bridge, rest)) = bridges.split_first() else {
            out.push(steps.clone());
            return;
        };
        for result in Weight::coupled(prev, bridge) {
            steps.push(Step { bridge, result });
            walk(rest, result, steps, out);
            steps.pop();
        }
    }
    let mut all = Vec::new();
    walk(&term.factors[1..], term.factors[0], &mut Vec::new(), &mut all);
    all.into_iter()
        .map(|steps| Path {
            term_index,
            start: term.factors[0],
            steps,
            parity: term.parity,
        })
        .collect()
}

/// Classic-scheme paths of `(natural)^{⊗n}`: start 0, one step per factor.
pub fn classic_paths(n: usize, group: Group) -> Vec<Path> {
    let w = group.natural_weight();
    let term = Term::new(
        vec![Weight::ZERO; 1].into_iter().chain(vec![w; n]).collect(),
        Parity::of_rank(n),
    );
    let parity = if group.has_parity() {
        Parity::of_rank(n)
    } else {
        Parity::Even
    };
    enumerate_paths(&term)
        .into_iter()
        .map(|p| Path { parity, ..p })
        .collect()
}

/// Number of weight-`l` components of a rank-`n` Cartesian tensor, by the
/// alternating factorial sum. Zero for `l > n` or half-integer `l`.
pub fn multiplicity(n: usize, l: Weight) -> u64 {
    let Some(l) = l.as_integer() else { return 0 };
    let l = l as i64;
    let n = n as i64;
    if n < 1 || l > n {
        return 0;
    }
    if n == 1 {
        return u64::from(l == 1);
    }
    let fact = |k: i64| -> BigInt {
        let mut acc = BigInt::one();
        for i in 2..=k {
            acc *= i;
        }
        acc
    };
    let mut sum = BigInt::zero();
    for i in 0..=(n - l) / 3 {
        let num = fact(n) * fact(2 * n - 3 * i - l - 2);
        let den = fact(i) * fact(n - i) * fact(n - 2) * fact(n - 3 * i - l);
        let term = num / den;
        if i % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    sum.to_u64().expect("multiplicity fits in u64")
}

/// Dimension of the commutant of `(R^3)^{⊗n}`: the sum of squared multiplicities.
pub fn end_dimension(n: usize) -> u64 {
    (0..=n as u32).map(|l| multiplicity(n, Weight::integer(l)).pow(2)).sum()
}

pub fn group_paths_by_terminal(paths: &[Path]) -> BTreeMap<Irrep, Vec<Path>> {
    let mut map: BTreeMap<Irrep, Vec<Path>> = BTreeMap::new();
    for p in paths {
        map.entry(p.terminal_irrep()).or_default().push(p.clone());
    }
    map
}

fn terminal_counts(spec: &SpaceSpec) -> BTreeMap<Irrep, u64> {
    let mut map = BTreeMap::new();
    for p in spec.paths() {
        *map.entry(p.terminal_irrep()).or_insert(0) += 1;
    }
    map
}

/// Dimension of the space of equivariant maps `vin -> vout`.
pub fn hom_dimension(vin: &SpaceSpec, vout: &SpaceSpec) -> Result<u64> {
    same_group(vin, vout)?;
    let a = terminal_counts(vin);
    let b = terminal_counts(vout);
    Ok(a.iter().filter_map(|(k, n)| b.get(k).map(|m| n * m)).sum())
}

pub(crate) fn same_group(vin: &SpaceSpec, vout: &SpaceSpec) -> Result<()> {
    if vin.group() != vout.group() {
        return Err(Error::arg(format!(
            "input space is over {} but output space is over {}",
            vin.group(),
            vout.group()
        )));
    }
    Ok(())
}
