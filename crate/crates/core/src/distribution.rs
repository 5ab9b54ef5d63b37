//! Boltzmann distributions over an enumerated search space, their marginals,
//! and univariate product approximations.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::mop::ObjectiveTable;
use crate::order::enforce_strict_order_by;

/// Tolerance for the unit-sum invariant of every distribution table.
pub const SUM_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Boltzmann,
    UnivariateProduct,
    /// Supplied from outside the library, e.g. read from a file.
    External,
}

/// Probability of each of the `2^N` solutions, indexed LSB-first.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionTable {
    probs: Vec<f64>,
    n_vars: usize,
    temperature: f64,
    source: Source,
    /// Double-double probabilities behind `probs`, when computed here.
    precise: Option<Vec<Dd>>,
}

fn vars_for_len(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::param(format!(
            "distribution length must be 2^N with N >= 1, got {len}"
        )));
    }
    Ok(len.trailing_zeros() as usize)
}

impl DistributionTable {
    /// Wraps externally supplied probabilities after validating them.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let n_vars = vars_for_len(probs.len())?;
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::param(format!("probabilities must be finite and >= 0, got {p}")));
        }
        let total = pairwise_sum(&probs);
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(Error::param(format!("probabilities sum to {total}, not 1")));
        }
        Ok(Self {
            probs,
            n_vars,
            temperature: 1.0,
            source: Source::External,
            precise: None,
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    fn precise_prob(&self, s: usize) -> Dd {
        match &self.precise {
            Some(p) => p[s],
            None => Dd::from(self.probs[s]),
        }
    }
}

/// Sum with a fixed binary reduction tree, so the result does not depend
/// on how the work is scheduled.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 16;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let (left, right) = values.split_at(values.len() / 2);
    pairwise_sum(left) + pairwise_sum(right)
}

fn check_temperature(temperature: f64) -> Result<()> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::param(format!(
            "temperature must be positive and finite, got {temperature}"
        )));
    }
    Ok(())
}

/// `p(s) = exp(values[s] / T) / Z`, evaluated as a max-shifted softmax.
///
/// The result is strictly increasing in `values` even after rounding:
/// outputs that would collide for distinct inputs are separated by single
/// ulps, well inside the unit-sum tolerance.
pub fn boltzmann(values: &[f64], temperature: f64) -> Result<DistributionTable> {
    vars_for_len(values.len())?;
    check_temperature(temperature)?;
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::param(format!("objective values must be finite, got {v}")));
    }
    let precise: Vec<Dd> = values.iter().map(|&v| Dd::from(v)).collect();
    Ok(boltzmann_precise(&precise, temperature, |a, b| {
        values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal)
    }))
}

/// Boltzmann distribution of column `objective` (0-based) of `table`.
///
/// Uses the table's extended-precision values, so the probabilities are
/// ordered exactly like the exact objective values, including where the
/// published `f64` column needed ulp separation.
pub fn boltzmann_objective(
    table: &ObjectiveTable,
    objective: usize,
    temperature: f64,
) -> Result<DistributionTable> {
    if objective >= table.values().cols() {
        return Err(Error::param(format!(
            "objective {} out of range 1..={}",
            objective + 1,
            table.values().cols()
        )));
    }
    vars_for_len(table.values().rows())?;
    check_temperature(temperature)?;
    let ranks = table.ranks(objective);
    Ok(boltzmann_precise(
        table.precise_column(objective),
        temperature,
        |a, b| ranks[a].cmp(&ranks[b]),
    ))
}

fn boltzmann_precise<F>(values: &[Dd], temperature: f64, order: F) -> DistributionTable
where
    F: Fn(usize, usize) -> Ordering,
{
    let n_vars = values.len().trailing_zeros() as usize;
    let max = values
        .iter()
        .copied()
        .max_by(|a, b| a.cmp_value(b))
        .unwrap_or_default();
    let t = Dd::from(temperature);
    let weights: Vec<Dd> = values.par_iter().map(|&v| ((v - max) / t).exp()).collect();
    let z: Dd = weights.iter().copied().sum();
    let precise: Vec<Dd> = weights.into_par_iter().map(|w| w / z).collect();
    let mut probs: Vec<f64> = precise.iter().map(|p| p.hi()).collect();
    enforce_strict_order_by(&mut probs, order);
    DistributionTable {
        probs,
        n_vars,
        temperature,
        source: Source::Boltzmann,
        precise: Some(precise),
    }
}

/// `p_one[i]` is the probability that variable `i` (0-based) equals 1.
#[derive(Clone, Debug, PartialEq)]
pub struct UnivariateMarginals {
    p_one: Vec<f64>,
    precise: Vec<Dd>,
}

impl UnivariateMarginals {
    pub fn new(p_one: Vec<f64>) -> Result<Self> {
        if let Some(p) = p_one.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::param(format!("marginal {p} outside [0, 1]")));
        }
        if p_one.is_empty() {
            return Err(Error::param("marginals need at least one variable"));
        }
        let precise = p_one.iter().map(|&p| Dd::from(p)).collect();
        Ok(Self { p_one, precise })
    }

    pub fn p_one(&self) -> &[f64] {
        &self.p_one
    }

    pub fn n_vars(&self) -> usize {
        self.p_one.len()
    }
}

/// `p_one[i] = S1 / (S0 + S1)` where `S1` and `S0` sum the probabilities of
/// the solutions with bit `i` set and clear. Sums and the ratio are carried
/// in double-double precision so a difference of a single ulp between
/// paired entries still moves the marginal off 0.5; the product table is
/// built from those extended values.
pub fn univariate_marginals(dist: &DistributionTable) -> UnivariateMarginals {
    let n = dist.n_vars();
    let precise: Vec<Dd> = (0..n)
        .map(|i| {
            let mut s0 = Dd::default();
            let mut s1 = Dd::default();
            for s in 0..dist.len() {
                let p = dist.precise_prob(s);
                if s >> i & 1 == 1 {
                    s1 = s1 + p;
                } else {
                    s0 = s0 + p;
                }
            }
            s1 / (s0 + s1)
        })
        .collect();
    let p_one = precise.iter().map(|p| p.hi().clamp(0.0, 1.0)).collect();
    UnivariateMarginals { p_one, precise }
}

/// Joint distribution of two variables; `table[a][b] = p(x_i = a, x_j = b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BivariateMarginal {
    pub pair: (usize, usize),
    pub table: [[f64; 2]; 2],
}

impl BivariateMarginal {
    /// `(p(x_i = 0), p(x_i = 1))`.
    pub fn first(&self) -> [f64; 2] {
        [self.table[0][0] + self.table[0][1], self.table[1][0] + self.table[1][1]]
    }

    /// `(p(x_j = 0), p(x_j = 1))`.
    pub fn second(&self) -> [f64; 2] {
        [self.table[0][0] + self.table[1][0], self.table[0][1] + self.table[1][1]]
    }
}

/// Pairwise marginal of variables `i < j` (0-based).
pub fn bivariate_marginal(dist: &DistributionTable, i: usize, j: usize) -> Result<BivariateMarginal> {
    let n = dist.n_vars();
    if i >= j || j >= n {
        return Err(Error::param(format!(
            "bivariate marginal needs 0 <= i < j < {n}, got i={i}, j={j}"
        )));
    }
    let mut cells: [Vec<f64>; 4] = Default::default();
    for (s, &p) in dist.probs().iter().enumerate() {
        let a = s >> i & 1;
        let b = s >> j & 1;
        cells[2 * a + b].push(p);
    }
    let sum = |k: usize| pairwise_sum(&cells[k]);
    Ok(BivariateMarginal {
        pair: (i, j),
        table: [[sum(0), sum(1)], [sum(2), sum(3)]],
    })
}

/// `q(s) = prod_i (p_one[i] if bit i of s is set else 1 - p_one[i])`, rounded
/// so that the table keeps the strict order of the extended-precision products.
pub fn product_distribution(marg: &UnivariateMarginals) -> DistributionTable {
    let n = marg.n_vars();
    let p = &marg.precise;
    let precise: Vec<Dd> = (0..1usize << n)
        .into_par_iter()
        .map(|s| {
            (0..n)
                .map(|i| if s >> i & 1 == 1 { p[i] } else { Dd::ONE - p[i] })
                .product()
        })
        .collect();
    let mut probs: Vec<f64> = precise.iter().map(|q| q.hi().max(0.0)).collect();
    enforce_strict_order_by(&mut probs, |a, b| precise[a].cmp_value(&precise[b]));
    DistributionTable {
        probs,
        n_vars: n,
        temperature: 1.0,
        source: Source::UnivariateProduct,
        precise: Some(precise),
    }
}

/// Largest absolute difference between two tables over the same space.
pub fn linf_distance(a: &DistributionTable, b: &DistributionTable) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::param(format!(
            "distributions have different sizes: {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.probs()
        .iter()
        .zip(b.probs())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}
