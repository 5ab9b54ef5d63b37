//! Multi-objective mNM problems over bit vectors in `{0,1}^N`.
//!
//! Solution indices are LSB-first: variable `x_i` (1-based) is bit `i - 1`
//! of the index. Every table in the crate uses this order.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::exact;
use crate::landscape::{NmLandscape, SpinVector};
use crate::order::enforce_strict_order_by;
use crate::table::Matrix;

/// Largest `N` for which the full `2^N` search space may be enumerated.
pub const MAX_ENUMERATED_VARS: usize = 26;

/// A vector over `{0, 1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitVector(Vec<u8>);

impl BitVector {
    pub fn new(values: Vec<u8>) -> Result<Self> {
        if let Some(v) = values.iter().find(|&&v| v > 1) {
            return Err(Error::param(format!("bit values must be 0 or 1, got {v}")));
        }
        Ok(Self(values))
    }

    pub fn from_index(index: u64, n: usize) -> Self {
        Self((0..n).map(|i| (index >> i & 1) as u8).collect())
    }

    pub fn index(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | (u64::from(b) << i))
    }

    pub fn values(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Map from `{0,1}` to `{-1,+1}` applied before evaluating a landscape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Transform {
    /// `y_i = -2 x_i + 1`; the all-zeros bit vector maps to all-ones spins.
    Negate,
    /// `z_i = 2 x_i - 1`; the all-ones bit vector maps to all-ones spins.
    IdentitySign,
}

impl Transform {
    pub fn apply(self, bit: u8) -> i8 {
        match self {
            Transform::Negate => 1 - 2 * bit as i8,
            Transform::IdentitySign => 2 * bit as i8 - 1,
        }
    }

    /// Mask of the variables whose spin is `-1` for solution `index`.
    fn negative_mask(self, index: u64, n: usize) -> u64 {
        let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        match self {
            Transform::Negate => index & all,
            Transform::IdentitySign => !index & all,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Transform::Negate => "negate",
            Transform::IdentitySign => "identity_sign",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveSpec {
    pub landscape: NmLandscape,
    pub transform: Transform,
}

impl ObjectiveSpec {
    pub fn new(landscape: NmLandscape, transform: Transform) -> Self {
        Self {
            landscape,
            transform,
        }
    }
}

/// Applies the objective's transform and evaluates its landscape.
pub fn evaluate_objective(spec: &ObjectiveSpec, x: &BitVector) -> Result<f64> {
    if x.len() != spec.landscape.n_vars() {
        return Err(Error::param(format!(
            "bit vector has length {}, objective has {} variables",
            x.len(),
            spec.landscape.n_vars()
        )));
    }
    let spins = SpinVector::new(x.values().iter().map(|&b| spec.transform.apply(b)).collect())?;
    spec.landscape.evaluate(&spins)
}

/// An m-objective mNM problem.
#[derive(Clone, Debug, PartialEq)]
pub struct MnmProblem {
    n_vars: usize,
    objectives: Vec<ObjectiveSpec>,
}

impl MnmProblem {
    pub fn new(objectives: Vec<ObjectiveSpec>) -> Result<Self> {
        if objectives.len() < 2 {
            return Err(Error::param(format!(
                "a multi-objective problem needs at least 2 objectives, got {}",
                objectives.len()
            )));
        }
        let n_vars = objectives[0].landscape.n_vars();
        if objectives.iter().any(|o| o.landscape.n_vars() != n_vars) {
            return Err(Error::param("all objectives must share the number of variables"));
        }
        Ok(Self { n_vars, objectives })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn objectives(&self) -> &[ObjectiveSpec] {
        &self.objectives
    }

    pub fn n_objectives(&self) -> usize {
        self.objectives.len()
    }
}

/// Nested bi-objective problem from one parent landscape: objective 1 is the
/// order-`m1` truncation under [`Transform::Negate`], objective 2 the
/// order-`m2` truncation under [`Transform::IdentitySign`]. Shared-order
/// coefficients are therefore identical in both objectives.
pub fn make_bi_objective(parent: &NmLandscape, m1: usize, m2: usize) -> Result<MnmProblem> {
    if !(1 <= m1 && m1 <= m2 && m2 <= parent.max_order()) {
        return Err(Error::param(format!(
            "objective orders must satisfy 1 <= m1 <= m2 <= {}, got m1={m1}, m2={m2}",
            parent.max_order()
        )));
    }
    MnmProblem::new(vec![
        ObjectiveSpec::new(parent.truncate(m1)?, Transform::Negate),
        ObjectiveSpec::new(parent.truncate(m2)?, Transform::IdentitySign),
    ])
}

/// Processing stage of an [`ObjectiveTable`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableStage {
    Raw,
    /// Each column divided by its objective's term count.
    TermScaled,
    /// Term-scaled, then min-max rescaled to `[0, 1]`.
    Normalized,
}

/// Objective values of every solution, shape `(2^N, m)`.
///
/// Alongside the published `f64` values the table keeps each column in
/// double-double precision and the exact rank of every raw value. Each
/// stage rounds to `f64` and then separates values that are distinct in
/// exact arithmetic but collided in rounding, by single ulps, so ties and
/// strict orderings in the table are exactly those of the exact objective.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveTable {
    values: Matrix,
    term_counts: Vec<usize>,
    stage: TableStage,
    precise: Vec<Vec<Dd>>,
    ranks: Vec<Vec<u32>>,
}

impl ObjectiveTable {
    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn stage(&self) -> TableStage {
        self.stage
    }

    pub fn is_normalized(&self) -> bool {
        self.stage == TableStage::Normalized
    }

    pub fn term_counts(&self) -> &[usize] {
        &self.term_counts
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.values.column(c)
    }

    /// Rank of each solution's exact raw value in column `c`; equal values
    /// share a rank and the smallest value has rank 0.
    pub fn ranks(&self, c: usize) -> &[u32] {
        &self.ranks[c]
    }

    pub(crate) fn precise_column(&self, c: usize) -> &[Dd] {
        &self.precise[c]
    }

    /// First normalization step: divide column `i` by `l_i`.
    pub fn divide_by_term_counts(mut self) -> Result<Self> {
        if self.stage != TableStage::Raw {
            return Err(Error::param("term scaling applies to raw tables only"));
        }
        let counts: Vec<Dd> = self.term_counts.iter().map(|&l| Dd::from(l as f64)).collect();
        self.map_columns(|c, v| v / counts[c]);
        self.stage = TableStage::TermScaled;
        Ok(self)
    }

    /// Second normalization step: `(v - min) / (max - min)` per column.
    pub fn min_max_rescale(mut self) -> Result<Self> {
        if self.stage != TableStage::TermScaled {
            return Err(Error::param("min-max rescaling applies to term-scaled tables only"));
        }
        let cols = self.values.cols();
        let mut bounds = Vec::with_capacity(cols);
        for c in 0..cols {
            let col = &self.precise[c];
            let ranks = &self.ranks[c];
            let lo = (0..col.len()).min_by_key(|&s| ranks[s]).unwrap_or(0);
            let hi = (0..col.len()).max_by_key(|&s| ranks[s]).unwrap_or(0);
            if ranks[lo] == ranks[hi] {
                return Err(Error::ConstantColumn {
                    column: c + 1,
                    rows: col.len(),
                    value: col[lo].hi(),
                });
            }
            let range = col[hi] - col[lo];
            if range.hi() <= 0.0 {
                return Err(Error::Numerical(format!(
                    "objective {} spans a range below working precision",
                    c + 1
                )));
            }
            bounds.push((col[lo], range));
        }
        self.map_columns(|c, v| {
            let (lo, range) = bounds[c];
            (v - lo) / range
        });
        self.stage = TableStage::Normalized;
        Ok(self)
    }

    /// Applies an increasing map to the precise columns and republishes the
    /// rounded, order-repaired values.
    fn map_columns(&mut self, f: impl Fn(usize, Dd) -> Dd + Sync) {
        for c in 0..self.values.cols() {
            let mapped: Vec<Dd> = self.precise[c].par_iter().map(|&v| f(c, v)).collect();
            self.precise[c] = mapped;
            self.publish(c);
        }
    }

    fn publish(&mut self, c: usize) {
        let cols = self.values.cols();
        let ranks = &self.ranks[c];
        let mut col: Vec<f64> = self.precise[c].iter().map(|v| v.hi()).collect();
        enforce_strict_order_by(&mut col, |a, b| ranks[a].cmp(&ranks[b]));
        let data = self.values.data_mut();
        for (r, v) in col.into_iter().enumerate() {
            data[r * cols + c] = v;
        }
    }
}

fn check_enumerable(n_vars: usize) -> Result<()> {
    if n_vars > MAX_ENUMERATED_VARS {
        return Err(Error::Resource(format!(
            "enumerating 2^{n_vars} solutions exceeds the limit of 2^{MAX_ENUMERATED_VARS}"
        )));
    }
    Ok(())
}

/// Exact value of every solution of one objective, as double-doubles and
/// ranks.
fn evaluate_column(obj: &ObjectiveSpec, n: usize) -> (Vec<Dd>, Vec<u32>) {
    let landscape = &obj.landscape;
    let sum = landscape.exact_sum();
    let exact_at = |s: usize, acc: &mut Vec<i64>| {
        landscape.accumulate(&sum, obj.transform.negative_mask(s as u64, n), acc);
    };
    let precise: Vec<Dd> = (0..1usize << n)
        .into_par_iter()
        .map_init(Vec::new, |acc, s| {
            exact_at(s, acc);
            sum.to_dd(acc)
        })
        .collect();
    let mut order: Vec<usize> = (0..precise.len()).collect();
    order.par_sort_by(|&a, &b| precise[a].cmp_value(&precise[b]).then(a.cmp(&b)));
    // The double-double key never inverts the exact order but may merge
    // values closer than its precision; such runs are split exactly.
    let mut ranks = vec![0u32; precise.len()];
    let mut rank = 0u32;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len()
            && precise[order[start]].cmp_value(&precise[order[end]]) == Ordering::Equal
        {
            end += 1;
        }
        if end - start == 1 {
            ranks[order[start]] = rank;
        } else {
            let mut run: Vec<(usize, Vec<i64>)> = order[start..end]
                .iter()
                .map(|&s| {
                    let mut acc = Vec::new();
                    exact_at(s, &mut acc);
                    (s, acc)
                })
                .collect();
            run.sort_by(|a, b| exact::cmp(&a.1, &b.1).then(a.0.cmp(&b.0)));
            for k in 0..run.len() {
                if k > 0 && exact::cmp(&run[k - 1].1, &run[k].1) == Ordering::Less {
                    rank += 1;
                }
                ranks[run[k].0] = rank;
            }
        }
        rank += 1;
        start = end;
    }
    (precise, ranks)
}

/// Raw objective values of all `2^N` solutions, each the correctly rounded
/// exact sum (moved by an ulp where needed to stay distinct).
pub fn evaluate_all(problem: &MnmProblem) -> Result<ObjectiveTable> {
    let n = problem.n_vars();
    check_enumerable(n)?;
    let m = problem.n_objectives();
    let size = 1usize << n;
    let (precise, ranks): (Vec<_>, Vec<_>) = problem
        .objectives()
        .iter()
        .map(|obj| evaluate_column(obj, n))
        .unzip();
    let mut table = ObjectiveTable {
        values: Matrix::from_vec(size, m, vec![0.0; size * m])?,
        term_counts: problem.objectives().iter().map(|o| o.landscape.len()).collect(),
        stage: TableStage::Raw,
        precise,
        ranks,
    };
    for c in 0..m {
        table.publish(c);
    }
    Ok(table)
}

/// Evaluates every solution; with `normalize`, applies term scaling and
/// then min-max rescaling to each column.
pub fn full_table(problem: &MnmProblem, normalize: bool) -> Result<ObjectiveTable> {
    let raw = evaluate_all(problem)?;
    if normalize {
        raw.divide_by_term_counts()?.min_max_rescale()
    } else {
        Ok(raw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::InteractionTerm;

    fn one_var(beta: f64) -> NmLandscape {
        let t = InteractionTerm::new(vec![1], beta, 1).unwrap();
        NmLandscape::from_terms(1, 1, 1.0, 0, vec![t]).unwrap()
    }

    #[test]
    fn bit_vector_index_bijection() {
        for idx in 0..64u64 {
            let b = BitVector::from_index(idx, 6);
            assert_eq!(b.index(), idx);
        }
        let b = BitVector::new(vec![1, 0, 0]).unwrap();
        assert_eq!(b.index(), 1);
        assert!(BitVector::new(vec![2]).is_err());
    }

    #[test]
    fn transforms_match_definitions() {
        assert_eq!(Transform::Negate.apply(0), 1);
        assert_eq!(Transform::Negate.apply(1), -1);
        assert_eq!(Transform::IdentitySign.apply(0), -1);
        assert_eq!(Transform::IdentitySign.apply(1), 1);
    }

    #[test]
    fn single_variable_negate() {
        let spec = ObjectiveSpec::new(one_var(1.0), Transform::Negate);
        let zero = BitVector::new(vec![0]).unwrap();
        let one = BitVector::new(vec![1]).unwrap();
        assert_eq!(evaluate_objective(&spec, &zero).unwrap(), 1.0);
        assert_eq!(evaluate_objective(&spec, &one).unwrap(), -1.0);
    }

    #[test]
    fn evaluate_objective_length_mismatch() {
        let spec = ObjectiveSpec::new(one_var(1.0), Transform::Negate);
        assert!(evaluate_objective(&spec, &BitVector::from_index(0, 2)).is_err());
    }

    #[test]
    fn bi_objective_shares_coefficients() {
        let parent = NmLandscape::generate(10, 2, 1.0, 4).unwrap();
        let p = make_bi_objective(&parent, 1, 2).unwrap();
        let (f1, f2) = (&p.objectives()[0], &p.objectives()[1]);
        assert_eq!(f1.landscape.len(), 10);
        assert_eq!(f2.landscape.len(), 55);
        assert_eq!(f1.transform, Transform::Negate);
        assert_eq!(f2.transform, Transform::IdentitySign);
        for (a, b) in f1.landscape.terms().iter().zip(f2.landscape.terms()) {
            assert_eq!(a, b);
        }
        let full = make_bi_objective(&parent, 2, 2).unwrap();
        assert_eq!(full.objectives()[0].landscape, parent);
        assert_eq!(full.objectives()[1].landscape, parent);
    }

    #[test]
    fn bi_objective_order_errors() {
        let parent = NmLandscape::generate(6, 2, 1.0, 4).unwrap();
        assert!(make_bi_objective(&parent, 2, 1).is_err());
        assert!(make_bi_objective(&parent, 0, 1).is_err());
        assert!(make_bi_objective(&parent, 1, 3).is_err());
    }

    #[test]
    fn normalized_columns_span_unit_interval() {
        let parent = NmLandscape::generate(8, 3, 1.0, 2).unwrap();
        let p = make_bi_objective(&parent, 2, 3).unwrap();
        let t = full_table(&p, true).unwrap();
        assert!(t.is_normalized());
        for c in 0..2 {
            let col = t.column(c);
            assert_eq!(col.iter().cloned().fold(f64::INFINITY, f64::min), 0.0);
            assert_eq!(col.iter().cloned().fold(f64::NEG_INFINITY, f64::max), 1.0);
        }
    }

    #[test]
    fn normalization_preserves_ranking() {
        let parent = NmLandscape::generate(8, 2, 3.0, 21).unwrap();
        let p = make_bi_objective(&parent, 1, 2).unwrap();
        let raw = full_table(&p, false).unwrap();
        let norm = full_table(&p, true).unwrap();
        for c in 0..2 {
            let (r, n) = (raw.column(c), norm.column(c));
            for a in 0..r.len() {
                for b in (a + 1)..r.len() {
                    if r[a] < r[b] {
                        assert!(n[a] <= n[b]);
                    } else if r[a] > r[b] {
                        assert!(n[a] >= n[b]);
                    } else {
                        assert_eq!(n[a], n[b]);
                    }
                }
            }
        }
    }

    #[test]
    fn constant_column_is_reported() {
        // With n_vars=1 and a zero coefficient, the objective is identically 0.
        let t = InteractionTerm::new(vec![1], 0.0, 1).unwrap();
        let flat = NmLandscape::from_terms(1, 1, 1.0, 0, vec![t]).unwrap();
        let p = MnmProblem::new(vec![
            ObjectiveSpec::new(one_var(1.0), Transform::Negate),
            ObjectiveSpec::new(flat, Transform::IdentitySign),
        ])
        .unwrap();
        match full_table(&p, true) {
            Err(Error::ConstantColumn { column, .. }) => assert_eq!(column, 2),
            other => panic!("expected constant column error, got {other:?}"),
        }
        assert!(full_table(&p, false).is_ok());
    }

    #[test]
    fn stages_must_run_in_order() {
        let parent = NmLandscape::generate(4, 1, 1.0, 0).unwrap();
        let p = make_bi_objective(&parent, 1, 1).unwrap();
        let raw = evaluate_all(&p).unwrap();
        assert!(raw.clone().min_max_rescale().is_err());
        let scaled = raw.divide_by_term_counts().unwrap();
        assert_eq!(scaled.stage(), TableStage::TermScaled);
        assert!(scaled.clone().divide_by_term_counts().is_err());
    }

    #[test]
    fn rows_match_direct_evaluation() {
        let parent = NmLandscape::generate(9, 3, 2.0, 8).unwrap();
        let p = make_bi_objective(&parent, 2, 3).unwrap();
        let t = full_table(&p, false).unwrap();
        for s in (0..512u64).step_by(7) {
            let x = BitVector::from_index(s, 9);
            for (c, obj) in p.objectives().iter().enumerate() {
                let direct = evaluate_objective(obj, &x).unwrap();
                assert_eq!(direct.to_bits(), t.values().get(s as usize, c).to_bits());
            }
        }
    }

    #[test]
    fn size_guard() {
        let parent = NmLandscape::generate(27, 1, 1.0, 0).unwrap();
        let p = make_bi_objective(&parent, 1, 1).unwrap();
        assert!(matches!(full_table(&p, true), Err(Error::Resource(_))));
    }

    fn two_scale_problem() -> MnmProblem {
        let terms = vec![
            InteractionTerm::new(vec![1], 1.0, 2).unwrap(),
            InteractionTerm::new(vec![2], 1e-20, 2).unwrap(),
        ];
        let l = NmLandscape::from_terms(2, 1, 1.0, 0, terms).unwrap();
        make_bi_objective(&l, 1, 1).unwrap()
    }

    #[test]
    fn coefficients_below_double_precision_stay_distinct() {
        let p = two_scale_problem();
        for normalize in [false, true] {
            let t = full_table(&p, normalize).unwrap();
            let f1 = t.column(0);
            // Flipping variable 2 changes f1 by 2e-20 only.
            assert!(f1[0] > f1[2] && f1[1] > f1[3], "{f1:?}");
            assert_eq!(t.ranks(0), &[3, 1, 2, 0]);
            let f2 = t.column(1);
            assert!(f2[2] > f2[0] && f2[3] > f2[1], "{f2:?}");
        }
        let norm = full_table(&p, true).unwrap();
        assert_eq!(norm.column(0)[0], 1.0);
        assert_eq!(norm.column(0)[3], 0.0);
        assert_eq!(norm.column(0)[2], 1.0f64.next_down());
    }

    #[test]
    fn equal_exact_values_stay_tied() {
        let terms = vec![
            InteractionTerm::new(vec![1], 0.5, 2).unwrap(),
            InteractionTerm::new(vec![2], 0.5, 2).unwrap(),
        ];
        let l = NmLandscape::from_terms(2, 1, 1.0, 0, terms).unwrap();
        let t = full_table(&make_bi_objective(&l, 1, 1).unwrap(), true).unwrap();
        assert_eq!(t.column(0)[1], t.column(0)[2]);
        assert_eq!(t.ranks(0)[1], t.ranks(0)[2]);
    }
}
