//! Single-objective NM-landscapes over spin vectors in `{-1, +1}^N`.
//!
//! A landscape is the sum of `coefficient * prod(s_i for i in indices)` over
//! every non-empty variable subset of size at most `max_order`. Coefficients
//! are drawn as `exp(-|g|)` with `g ~ Normal(0, sigma)`, one per subset, in
//! canonical subset order from a single [`SeededStream`].

use std::path::Path;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::ExactSum;
use crate::format::Sig17;
use crate::rng::SeededStream;

/// Upper bound on the number of interaction terms a landscape may hold.
pub const MAX_TERMS: usize = 1 << 24;

/// Largest supported number of variables; terms are stored as `u64` masks.
pub const MAX_VARS: usize = 63;

/// One monomial of the interaction model.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionTerm {
    indices: Vec<usize>,
    coefficient: f64,
    mask: u64,
}

impl InteractionTerm {
    /// `indices` are 1-based variable indices; they must be strictly
    /// increasing and lie in `1..=n_vars`.
    pub fn new(indices: Vec<usize>, coefficient: f64, n_vars: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::param("interaction term needs at least one index"));
        }
        if !(coefficient >= 0.0 && coefficient.is_finite()) {
            return Err(Error::param(format!(
                "coefficient must be finite and non-negative, got {coefficient}"
            )));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::param(format!(
                "term indices must be strictly increasing: {indices:?}"
            )));
        }
        if indices[0] < 1 || indices[indices.len() - 1] > n_vars {
            return Err(Error::param(format!(
                "term indices {indices:?} out of range 1..={n_vars}"
            )));
        }
        let mask = indices.iter().fold(0u64, |m, &i| m | (1u64 << (i - 1)));
        Ok(Self {
            indices,
            coefficient,
            mask,
        })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    /// Interaction order `|U_k|`.
    pub fn order(&self) -> usize {
        self.indices.len()
    }

    /// Bit `i - 1` is set for every index `i` of the term.
    pub fn mask(&self) -> u64 {
        self.mask
    }
}

/// A vector over `{-1, +1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinVector(Vec<i8>);

impl SpinVector {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if let Some(v) = values.iter().find(|&&v| v != 1 && v != -1) {
            return Err(Error::param(format!("spin values must be -1 or +1, got {v}")));
        }
        Ok(Self(values))
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1; n])
    }

    /// Spin `i` (0-based) is `+1` when bit `i` of `bits` is set.
    pub fn from_bits(bits: u64, n: usize) -> Self {
        Self((0..n).map(|i| if bits >> i & 1 == 1 { 1 } else { -1 }).collect())
    }

    pub fn values(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Draws one coefficient `exp(-|g|)`, `g ~ Normal(0, sigma)`.
pub fn sample_coefficient(sigma: f64, rng: &mut SeededStream) -> Result<f64> {
    check_sigma(sigma)?;
    let g = sigma * rng.standard_normal();
    Ok((-g.abs()).exp())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("sigma must be positive and finite, got {sigma}")))
    }
}

fn check_orders(n_vars: usize, max_order: usize) -> Result<()> {
    if n_vars == 0 || n_vars > MAX_VARS {
        return Err(Error::param(format!(
            "number of variables must be in 1..={MAX_VARS}, got {n_vars}"
        )));
    }
    if max_order < 1 || max_order > n_vars {
        return Err(Error::param(format!(
            "maximum order must be in 1..={n_vars}, got {max_order}"
        )));
    }
    Ok(())
}

/// Number of non-empty subsets of `{1..n_vars}` with at most `max_order`
/// elements, saturating at `usize::MAX`.
pub fn term_count(n_vars: usize, max_order: usize) -> usize {
    let mut total: usize = 0;
    let mut binom: u128 = 1;
    for k in 1..=max_order.min(n_vars) {
        binom = binom * (n_vars - k + 1) as u128 / k as u128;
        total = total.saturating_add(usize::try_from(binom).unwrap_or(usize::MAX));
    }
    total
}

/// All non-empty subsets of `{1..n_vars}` of size at most `max_order`,
/// ascending by size and lexicographic within a size.
pub fn enumerate_term_sets(n_vars: usize, max_order: usize) -> Result<Vec<Vec<usize>>> {
    check_orders(n_vars, max_order)?;
    let count = term_count(n_vars, max_order);
    if count > MAX_TERMS {
        return Err(Error::Resource(format!(
            "{count} interaction terms exceed the limit of {MAX_TERMS}"
        )));
    }
    let mut sets = Vec::with_capacity(count);
    for size in 1..=max_order {
        sets.extend((1..=n_vars).combinations(size));
    }
    Ok(sets)
}

/// A single-objective NM-landscape. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct NmLandscape {
    n_vars: usize,
    max_order: usize,
    sigma: f64,
    seed: u64,
    terms: Vec<InteractionTerm>,
}

impl NmLandscape {
    /// Samples a landscape. The result is a pure function of the arguments.
    pub fn generate(n_vars: usize, max_order: usize, sigma: f64, seed: u64) -> Result<Self> {
        check_sigma(sigma)?;
        let sets = enumerate_term_sets(n_vars, max_order)?;
        let mut rng = SeededStream::new(seed);
        let terms = sets
            .into_iter()
            .map(|indices| {
                let coefficient = sample_coefficient(sigma, &mut rng)?;
                InteractionTerm::new(indices, coefficient, n_vars)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_vars,
            max_order,
            sigma,
            seed,
            terms,
        })
    }

    /// Builds a landscape from explicit terms, checking that they are
    /// exactly the canonical term sets for `(n_vars, max_order)`.
    pub fn from_terms(
        n_vars: usize,
        max_order: usize,
        sigma: f64,
        seed: u64,
        terms: Vec<InteractionTerm>,
    ) -> Result<Self> {
        check_sigma(sigma)?;
        let expected = enumerate_term_sets(n_vars, max_order)?;
        if expected.len() != terms.len() {
            return Err(Error::param(format!(
                "expected {} terms for n_vars={n_vars}, max_order={max_order}, got {}",
                expected.len(),
                terms.len()
            )));
        }
        for (want, term) in expected.iter().zip(&terms) {
            if want.as_slice() != term.indices() {
                return Err(Error::param(format!(
                    "term {:?} out of canonical order, expected {want:?}",
                    term.indices()
                )));
            }
        }
        Ok(Self {
            n_vars,
            max_order,
            sigma,
            seed,
            terms,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn terms(&self) -> &[InteractionTerm] {
        &self.terms
    }

    /// Number of terms `l`.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Keeps the terms of order `<= new_max_order`, coefficients untouched.
    pub fn truncate(&self, new_max_order: usize) -> Result<Self> {
        if new_max_order < 1 || new_max_order > self.max_order {
            return Err(Error::param(format!(
                "truncation order must be in 1..={}, got {new_max_order}",
                self.max_order
            )));
        }
        // Canonical order is ascending by size, so the kept terms form a prefix.
        let keep = self.terms.partition_point(|t| t.order() <= new_max_order);
        Ok(Self {
            n_vars: self.n_vars,
            max_order: new_max_order,
            sigma: self.sigma,
            seed: self.seed,
            terms: self.terms[..keep].to_vec(),
        })
    }

    /// `F(s) = sum_k beta_k prod_{i in U_k} s_i`, correctly rounded: the sum
    /// is formed exactly and rounded once, so the result does not depend on
    /// term order.
    pub fn evaluate(&self, s: &SpinVector) -> Result<f64> {
        if s.len() != self.n_vars {
            return Err(Error::param(format!(
                "spin vector has length {}, landscape has {} variables",
                s.len(),
                self.n_vars
            )));
        }
        let negative_mask = s
            .values()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v < 0)
            .fold(0u64, |m, (i, _)| m | 1 << i);
        Ok(self.evaluate_sign_mask(negative_mask))
    }

    /// Evaluates the spin vector whose `i`-th spin is `-1` exactly when bit
    /// `i` of `negative_mask` is set.
    pub fn evaluate_sign_mask(&self, negative_mask: u64) -> f64 {
        let sum = self.exact_sum();
        let mut acc = Vec::new();
        self.accumulate(&sum, negative_mask, &mut acc);
        sum.to_dd(&acc).hi()
    }

    pub(crate) fn exact_sum(&self) -> ExactSum {
        let coefficients: Vec<f64> = self.terms.iter().map(|t| t.coefficient).collect();
        ExactSum::new(&coefficients)
    }

    /// Exact value at `negative_mask` into `acc`, for a sum built by
    /// [`Self::exact_sum`].
    pub(crate) fn accumulate(&self, sum: &ExactSum, negative_mask: u64, acc: &mut Vec<i64>) {
        sum.accumulate(
            |k| (self.terms[k].mask & negative_mask).count_ones() % 2 == 1,
            acc,
        );
    }

    pub fn to_json(&self) -> String {
        let doc = LandscapeDocOut {
            n_vars: self.n_vars,
            max_order: self.max_order,
            sigma: Sig17(self.sigma),
            seed: self.seed,
            terms: self
                .terms
                .iter()
                .map(|t| TermDocOut {
                    indices: &t.indices,
                    coefficient: Sig17(t.coefficient),
                })
                .collect(),
        };
        let mut out = serde_json::to_string_pretty(&doc).expect("landscape serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: LandscapeDocIn = serde_json::from_str(text).map_err(|e| Error::Format {
            path: "<landscape json>".into(),
            message: e.to_string(),
        })?;
        let terms = doc
            .terms
            .into_iter()
            .map(|t| InteractionTerm::new(t.indices, t.coefficient, doc.n_vars))
            .collect::<Result<Vec<_>>>()?;
        Self::from_terms(doc.n_vars, doc.max_order, doc.sigma, doc.seed, terms)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Format { message, .. } => Error::Format {
                path: path.display().to_string(),
                message,
            },
            other => other,
        })
    }
}

#[derive(Serialize)]
struct TermDocOut<'a> {
    indices: &'a [usize],
    coefficient: Sig17,
}

#[derive(Serialize)]
struct LandscapeDocOut<'a> {
    n_vars: usize,
    max_order: usize,
    sigma: Sig17,
    seed: u64,
    terms: Vec<TermDocOut<'a>>,
}

#[derive(Deserialize)]
struct TermDocIn {
    indices: Vec<usize>,
    coefficient: f64,
}

#[derive(Deserialize)]
struct LandscapeDocIn {
    n_vars: usize,
    max_order: usize,
    sigma: f64,
    seed: u64,
    terms: Vec<TermDocIn>,
}
