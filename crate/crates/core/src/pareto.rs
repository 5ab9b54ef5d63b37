//! Pareto dominance (maximization) and exact front extraction.

use std::collections::BTreeSet;

use crate::distribution::DistributionTable;
use crate::error::{Error, Result};
use crate::format;
use crate::table::Matrix;

/// `a` dominates `b` when it is no worse in every objective and strictly
/// better in at least one. All objectives are maximized.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool> {
    if a.len() != b.len() {
        return Err(Error::param(format!(
            "objective vectors have different lengths: {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(dominates_unchecked(a, b))
}

#[inline]
fn dominates_unchecked(a: &[f64], b: &[f64]) -> bool {
    let mut strictly = false;
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return false;
        }
        if x > y {
            strictly = true;
        }
    }
    strictly
}

/// Non-dominated solutions of a table.
///
/// Solutions sharing an identical non-dominated objective vector are all
/// members, so `member_indices` is the Pareto set and `front_points` may
/// repeat a point.
#[derive(Clone, Debug, PartialEq)]
pub struct FrontResult {
    pub member_indices: Vec<usize>,
    pub front_points: Vec<Vec<f64>>,
}

impl FrontResult {
    fn from_members(table: &Matrix, member_indices: Vec<usize>) -> Self {
        let front_points = member_indices.iter().map(|&s| table.row(s).to_vec()).collect();
        Self {
            member_indices,
            front_points,
        }
    }

    pub fn len(&self) -> usize {
        self.member_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_indices.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.member_indices.binary_search(&index).is_ok()
    }

    /// Number of distinct objective vectors on the front.
    pub fn distinct_points(&self) -> usize {
        let mut pts: Vec<Vec<u64>> = self
            .front_points
            .iter()
            .map(|p| p.iter().map(|v| v.to_bits()).collect())
            .collect();
        pts.sort_unstable();
        pts.dedup();
        pts.len()
    }

    /// CSV `solution_index,f1,...,fm`, rows sorted by `f1` descending with
    /// ties kept in ascending solution index.
    pub fn to_csv(&self) -> String {
        let m = self.front_points.first().map_or(0, Vec::len);
        let mut out = String::from("solution_index");
        for k in 1..=m {
            out.push_str(&format!(",f{k}"));
        }
        out.push('\n');
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.front_points[b][0].total_cmp(&self.front_points[a][0]));
        for k in order {
            out.push_str(&self.member_indices[k].to_string());
            for v in &self.front_points[k] {
                out.push(',');
                out.push_str(&format::csv(*v));
            }
            out.push('\n');
        }
        out
    }
}

fn check_table(table: &Matrix) -> Result<()> {
    if table.rows() == 0 || table.cols() == 0 {
        return Err(Error::param("cannot extract a front from an empty table"));
    }
    if let Some(v) = table.data().iter().find(|v| !v.is_finite()) {
        return Err(Error::param(format!("table entries must be finite, got {v}")));
    }
    Ok(())
}

/// Exact Pareto set by pairwise dominance filtering, `O(S^2 m)`.
pub fn pareto_front_pairwise(table: &Matrix) -> Result<FrontResult> {
    check_table(table)?;
    let mut members: Vec<usize> = Vec::new();
    // Non-dominated rows seen so far; a row dominated by anything is
    // dominated by some non-dominated row, so comparing against the running
    // archive plus a final pass is exact.
    let mut archive: Vec<usize> = Vec::new();
    for s in 0..table.rows() {
        let row = table.row(s);
        if archive.iter().any(|&a| dominates_unchecked(table.row(a), row)) {
            continue;
        }
        archive.retain(|&a| !dominates_unchecked(row, table.row(a)));
        archive.push(s);
    }
    members.extend(archive);
    members.sort_unstable();
    Ok(FrontResult::from_members(table, members))
}

/// Exact Pareto set for two objectives by sorting, `O(S log S)`.
pub fn pareto_front_sorted(table: &Matrix) -> Result<FrontResult> {
    check_table(table)?;
    if table.cols() != 2 {
        return Err(Error::param(format!(
            "sort-based front needs exactly 2 objectives, got {}",
            table.cols()
        )));
    }
    let mut order: Vec<usize> = (0..table.rows()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (table.row(a), table.row(b));
        rb[0].total_cmp(&ra[0]).then(rb[1].total_cmp(&ra[1]))
    });
    let mut members = Vec::new();
    // Best f2 among rows with strictly greater f1.
    let mut best_above = f64::NEG_INFINITY;
    let mut start = 0;
    while start < order.len() {
        let f1 = table.get(order[start], 0);
        let mut end = start;
        while end < order.len() && table.get(order[end], 0) == f1 {
            end += 1;
        }
        let group_best = table.get(order[start], 1);
        if group_best > best_above {
            members.extend(
                order[start..end]
                    .iter()
                    .copied()
                    .filter(|&s| table.get(s, 1) == group_best),
            );
            best_above = group_best;
        }
        start = end;
    }
    members.sort_unstable();
    Ok(FrontResult::from_members(table, members))
}

/// Exact Pareto set; uses the sort-based path for two objectives.
pub fn pareto_front(table: &Matrix) -> Result<FrontResult> {
    if table.cols() == 2 {
        pareto_front_sorted(table)
    } else {
        pareto_front_pairwise(table)
    }
}

/// Front of the table whose column `k` is the probability vector of `dists[k]`.
pub fn front_from_distributions(dists: &[DistributionTable]) -> Result<FrontResult> {
    let first = dists
        .first()
        .ok_or_else(|| Error::param("need at least one distribution"))?;
    if dists.iter().any(|d| d.n_vars() != first.n_vars()) {
        return Err(Error::param("distributions are over different numbers of variables"));
    }
    let cols: Vec<&[f64]> = dists.iter().map(|d| d.probs()).collect();
    pareto_front(&Matrix::from_columns(&cols)?)
}

/// Set comparison between two Pareto sets over the same solution space.
#[derive(Clone, Debug, PartialEq)]
pub struct FrontComparison {
    pub set_equal: bool,
    pub only_in_a: Vec<usize>,
    pub only_in_b: Vec<usize>,
    /// `|A ∩ B| / |A ∪ B|`; defined as 1 when both sets are empty.
    pub jaccard: f64,
}

pub fn compare_fronts(a: &FrontResult, b: &FrontResult) -> FrontComparison {
    let sa: BTreeSet<usize> = a.member_indices.iter().copied().collect();
    let sb: BTreeSet<usize> = b.member_indices.iter().copied().collect();
    let only_in_a: Vec<usize> = sa.difference(&sb).copied().collect();
    let only_in_b: Vec<usize> = sb.difference(&sa).copied().collect();
    let inter = sa.intersection(&sb).count();
    let union = sa.union(&sb).count();
    let jaccard = if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    };
    FrontComparison {
        set_equal: only_in_a.is_empty() && only_in_b.is_empty(),
        only_in_a,
        only_in_b,
        jaccard,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn front(idx: &[usize]) -> FrontResult {
        FrontResult {
            member_indices: idx.to_vec(),
            front_points: idx.iter().map(|_| vec![0.0, 0.0]).collect(),
        }
    }

    #[test]
    fn dominance_examples() {
        assert!(dominates(&[1.0, 1.0], &[0.0, 0.0]).unwrap());
        assert!(!dominates(&[1.0, 0.0], &[0.0, 1.0]).unwrap());
        assert!(!dominates(&[0.0, 1.0], &[1.0, 0.0]).unwrap());
        assert!(!dominates(&[1.0, 1.0], &[1.0, 1.0]).unwrap());
        assert!(dominates(&[1.0, 1.0], &[1.0, 0.5]).unwrap());
        assert!(dominates(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn small_tables() {
        for f in [pareto_front_pairwise, pareto_front_sorted, pareto_front] {
            assert_eq!(f(&m(&[&[1.0, 0.0], &[0.0, 1.0]])).unwrap().member_indices, vec![0, 1]);
            assert_eq!(f(&m(&[&[1.0, 1.0], &[0.0, 0.0]])).unwrap().member_indices, vec![0]);
        }
    }

    #[test]
    fn duplicates_all_join_the_set() {
        let t = m(&[&[1.0, 0.0], &[0.5, 0.5], &[0.5, 0.5], &[0.4, 0.4], &[0.0, 1.0], &[0.5, 0.2]]);
        for f in [pareto_front_pairwise, pareto_front_sorted] {
            let r = f(&t).unwrap();
            assert_eq!(r.member_indices, vec![0, 1, 2, 4]);
            assert_eq!(r.distinct_points(), 3);
        }
    }

    #[test]
    fn tied_first_objective() {
        let t = m(&[&[1.0, 0.2], &[1.0, 0.7], &[0.5, 0.7], &[0.2, 0.9]]);
        for f in [pareto_front_pairwise, pareto_front_sorted] {
            assert_eq!(f(&t).unwrap().member_indices, vec![1, 3]);
        }
    }

    #[test]
    fn empty_and_non_finite_tables_rejected() {
        let empty = Matrix::from_vec(0, 2, vec![]).unwrap();
        assert!(pareto_front(&empty).is_err());
        assert!(pareto_front(&m(&[&[f64::NAN, 0.0]])).is_err());
        assert!(pareto_front_sorted(&m(&[&[1.0, 0.0, 0.0]])).is_err());
    }

    #[test]
    fn three_objectives() {
        let t = m(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 0.0, 0.5]]);
        assert_eq!(pareto_front(&t).unwrap().member_indices, vec![0, 1, 2]);
    }

    #[test]
    fn comparison_examples() {
        let same = compare_fronts(&front(&[1, 2]), &front(&[1, 2]));
        assert!(same.set_equal);
        assert_eq!(same.jaccard, 1.0);
        let disjoint = compare_fronts(&front(&[1, 2]), &front(&[3]));
        assert_eq!(disjoint.jaccard, 0.0);
        assert!(!disjoint.set_equal);
        let c = compare_fronts(&front(&[0, 1, 3]), &front(&[0, 3, 5]));
        assert_eq!(c.jaccard, 0.5);
        assert_eq!(c.only_in_a, vec![1]);
        assert_eq!(c.only_in_b, vec![5]);
    }

    #[test]
    fn csv_sorted_by_first_objective() {
        let t = m(&[&[0.2, 0.9], &[1.0, 0.0], &[0.5, 0.5], &[0.5, 0.5]]);
        let csv = pareto_front(&t).unwrap().to_csv();
        assert_eq!(csv, "solution_index,f1,f2\n1,1,0\n2,0.5,0.5\n3,0.5,0.5\n0,0.2,0.9\n");
    }

    #[test]
    fn distributions_must_match() {
        let a = DistributionTable::from_probs(vec![0.25; 4]).unwrap();
        let b = DistributionTable::from_probs(vec![0.125; 8]).unwrap();
        assert!(front_from_distributions(&[a.clone(), b]).is_err());
        assert!(front_from_distributions(&[]).is_err());
        let r = front_from_distributions(&[a.clone(), a]).unwrap();
        assert_eq!(r.member_indices, vec![0, 1, 2, 3]);
    }
}
