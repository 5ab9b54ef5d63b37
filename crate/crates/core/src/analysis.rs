//! Mutual information between variable pairs, the per-problem simulation
//! pipeline, and parameter sweeps over `(M, sigma)` grids.
//!
//! Mutual information is reported in nats.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::{
    bivariate_marginal, boltzmann_objective, linf_distance, product_distribution, univariate_marginals,
    DistributionTable, UnivariateMarginals,
};
use crate::error::{Error, Result};
use crate::landscape::NmLandscape;
use crate::mop::{full_table, make_bi_objective, MnmProblem, ObjectiveTable};
use crate::pareto::{compare_fronts, front_from_distributions, pareto_front, FrontComparison, FrontResult};
use crate::rng::derive_model_seed;

/// Values down to `-MI_TOLERANCE` are treated as rounding noise and clamped to 0.
pub const MI_TOLERANCE: f64 = 1e-12;

/// `MI(X_i; X_j)` in nats for 0-based variables `i != j`.
pub fn mutual_information(dist: &DistributionTable, i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Err(Error::param(format!("mutual information needs distinct variables, got {i} twice")));
    }
    let (lo, hi) = (i.min(j), i.max(j));
    let biv = bivariate_marginal(dist, lo, hi)?;
    let (pa, pb) = (biv.first(), biv.second());
    let mut mi = 0.0;
    for (row, &qa) in biv.table.iter().zip(pa.iter()) {
        for (&p, &qb) in row.iter().zip(pb.iter()) {
            if p > 0.0 {
                mi += p * (p / (qa * qb)).ln();
            }
        }
    }
    if mi < -MI_TOLERANCE {
        return Err(Error::Numerical(format!(
            "mutual information of variables ({i}, {j}) evaluated to {mi}"
        )));
    }
    Ok(mi.max(0.0))
}

/// Symmetric matrix of pairwise mutual information with a zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct MutualInfoMatrix {
    n_vars: usize,
    values: Vec<f64>,
}

impl MutualInfoMatrix {
    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_vars + j]
    }

    fn off_diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.n_vars;
        (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| self.get(i, j)))
    }

    /// Largest off-diagonal entry (0 for a single variable).
    pub fn max(&self) -> f64 {
        self.off_diagonal().fold(0.0, f64::max)
    }

    /// Mean of the `C(N, 2)` off-diagonal entries (0 for a single variable).
    pub fn mean(&self) -> f64 {
        let n = self.n_vars;
        let pairs = n * n.saturating_sub(1) / 2;
        if pairs == 0 {
            0.0
        } else {
            self.off_diagonal().sum::<f64>() / pairs as f64
        }
    }

    /// CSV `variable_i,variable_j,mi_nats` over pairs `i < j`, 1-based.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("variable_i,variable_j,mi_nats\n");
        for i in 0..self.n_vars {
            for j in (i + 1)..self.n_vars {
                out.push_str(&format!("{},{},{}\n", i + 1, j + 1, crate::format::csv(self.get(i, j))));
            }
        }
        out
    }
}

pub fn mi_matrix(dist: &DistributionTable) -> Result<MutualInfoMatrix> {
    let n = dist.n_vars();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let mi = mutual_information(dist, i, j)?;
            values[i * n + j] = mi;
            values[j * n + i] = mi;
        }
    }
    Ok(MutualInfoMatrix { n_vars: n, values })
}

/// Per-objective outputs of the simulation pipeline.
#[derive(Clone, Debug)]
pub struct ObjectiveRecord {
    pub values: Vec<f64>,
    pub boltzmann: DistributionTable,
    pub marginals: UnivariateMarginals,
    pub product: DistributionTable,
    /// L-infinity distance between `boltzmann` and `product`.
    pub factorization_gap: f64,
}

#[derive(Clone, Debug)]
pub struct SimulationRecord {
    pub table: ObjectiveTable,
    pub objectives: Vec<ObjectiveRecord>,
    /// Front of the objective values.
    pub true_front: FrontResult,
    /// Front of the Boltzmann probabilities.
    pub boltzmann_front: FrontResult,
    /// Front of the univariate product probabilities.
    pub factorized_front: FrontResult,
    /// `true_front` against `factorized_front`.
    pub comparison: FrontComparison,
    /// `true_front` against `boltzmann_front`.
    pub boltzmann_comparison: FrontComparison,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimulationOptions {
    pub temperature: f64,
    /// Build the distributions from normalized objective values.
    pub normalize: bool,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            temperature: 1.0,
            normalize: true,
        }
    }
}

/// Runs the full pipeline on normalized objective values.
pub fn run_simulation(problem: &MnmProblem, temperature: f64) -> Result<SimulationRecord> {
    run_simulation_with(
        problem,
        SimulationOptions {
            temperature,
            normalize: true,
        },
    )
}

/// Evaluates the search space, builds per-objective Boltzmann tables, their
/// univariate marginals and product approximations, and extracts the true,
/// Boltzmann and factorized fronts.
pub fn run_simulation_with(problem: &MnmProblem, options: SimulationOptions) -> Result<SimulationRecord> {
    let table = full_table(problem, options.normalize)?;
    let objectives = (0..problem.n_objectives())
        .map(|c| {
            let values = table.column(c);
            let boltzmann = boltzmann_objective(&table, c, options.temperature)?;
            let marginals = univariate_marginals(&boltzmann);
            let product = product_distribution(&marginals);
            let factorization_gap = linf_distance(&boltzmann, &product)?;
            Ok(ObjectiveRecord {
                values,
                boltzmann,
                marginals,
                product,
                factorization_gap,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let true_front = pareto_front(table.values())?;
    let bz: Vec<DistributionTable> = objectives.iter().map(|o| o.boltzmann.clone()).collect();
    let boltzmann_front = front_from_distributions(&bz)?;
    let prod: Vec<DistributionTable> = objectives.iter().map(|o| o.product.clone()).collect();
    let factorized_front = front_from_distributions(&prod)?;
    let comparison = compare_fronts(&true_front, &factorized_front);
    let boltzmann_comparison = compare_fronts(&true_front, &boltzmann_front);
    Ok(SimulationRecord {
        table,
        objectives,
        true_front,
        boltzmann_front,
        factorized_front,
        comparison,
        boltzmann_comparison,
    })
}

/// Number of distinct objective vectors after snapping every value to a
/// grid of cell width `resolution`. A resolution of 0 counts exact values.
pub fn distinct_value_count(table: &ObjectiveTable, resolution: f64) -> usize {
    let mut keys: Vec<Vec<i64>> = table
        .values()
        .iter_rows()
        .map(|row| {
            row.iter()
                .map(|&v| {
                    if resolution > 0.0 {
                        (v / resolution).floor() as i64
                    } else {
                        v.to_bits() as i64
                    }
                })
                .collect()
        })
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

/// Parameters of an `(M, sigma)` sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n_vars: usize,
    pub m_grid: Vec<usize>,
    pub sigma_grid: Vec<f64>,
    pub models_per_cell: usize,
    pub base_seed: u64,
    pub temperature: f64,
    /// 1-based objective whose Boltzmann distribution is analyzed.
    pub objective: usize,
    /// Grid width used by the distinct-value count.
    pub distinct_resolution: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_vars: 10,
            m_grid: (1..=9).collect(),
            sigma_grid: (0..10).map(|i| f64::from(2 * i + 1)).collect(),
            models_per_cell: 10,
            base_seed: 1,
            temperature: 1.0,
            objective: 2,
            distinct_resolution: 1e-3,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_vars == 0 || self.n_vars > crate::mop::MAX_ENUMERATED_VARS {
            return Err(Error::param(format!(
                "n_vars must be in 1..={}, got {}",
                crate::mop::MAX_ENUMERATED_VARS,
                self.n_vars
            )));
        }
        if self.m_grid.is_empty() || self.sigma_grid.is_empty() {
            return Err(Error::param("sweep grids must be non-empty"));
        }
        if let Some(m) = self.m_grid.iter().find(|&&m| m < 1 || m > self.n_vars) {
            return Err(Error::param(format!("order {m} outside 1..={}", self.n_vars)));
        }
        if let Some(s) = self.sigma_grid.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::param(format!("sigma {s} must be positive and finite")));
        }
        if self.models_per_cell == 0 {
            return Err(Error::param("models per cell must be at least 1"));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::param(format!("temperature {} must be positive", self.temperature)));
        }
        if self.objective != 1 && self.objective != 2 {
            return Err(Error::param(format!("objective must be 1 or 2, got {}", self.objective)));
        }
        if !(self.distinct_resolution >= 0.0 && self.distinct_resolution.is_finite()) {
            return Err(Error::param("distinct resolution must be finite and >= 0"));
        }
        if self.sigma_grid.len() > u32::MAX as usize || self.models_per_cell > u32::MAX as usize {
            return Err(Error::param("sweep grid too large"));
        }
        Ok(())
    }

    fn max_order(&self) -> usize {
        self.m_grid.iter().copied().max().unwrap_or(1)
    }
}

/// One model of one sweep cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelRecord {
    pub m: usize,
    pub sigma: f64,
    pub sigma_index: usize,
    pub model_index: usize,
    /// Seed of the reference landscape this model truncates.
    pub seed: u64,
    pub mi_max: f64,
    pub mi_mean: f64,
    pub front_size: usize,
    pub front_jaccard: f64,
    pub distinct_value_count: usize,
}

/// Mean and sample standard deviation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, std: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellSummary {
    pub m: usize,
    pub sigma: f64,
    pub mi_max: Summary,
    pub mi_mean: Summary,
    pub front_size: Summary,
    pub front_jaccard: Summary,
    pub distinct_value_count: Summary,
    /// Per-model `mi_max` values in model order.
    pub mi_max_values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub config: SweepConfig,
    /// Ordered by `M`, then `sigma`, then model index.
    pub records: Vec<ModelRecord>,
    /// Ordered by `M`, then `sigma`; `|m_grid| * |sigma_grid|` entries.
    pub cells: Vec<CellSummary>,
}

impl SweepResult {
    pub fn cell(&self, m: usize, sigma: f64) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.m == m && c.sigma == sigma)
    }
}

/// Evaluates one model of the sweep: the order-`m` truncation of the
/// reference landscape for `(sigma_index, model_index)`.
pub fn run_sweep_model(
    config: &SweepConfig,
    m: usize,
    sigma_index: usize,
    model_index: usize,
) -> Result<ModelRecord> {
    let sigma = config.sigma_grid[sigma_index];
    let seed = derive_model_seed(config.base_seed, sigma_index as u32, model_index as u32);
    let reference = NmLandscape::generate(config.n_vars, config.max_order(), sigma, seed)?;
    let parent = reference.truncate(m)?;
    let problem = make_bi_objective(&parent, m, m)?;
    let sim = run_simulation(&problem, config.temperature)?;
    let mi = mi_matrix(&sim.objectives[config.objective - 1].boltzmann)?;
    Ok(ModelRecord {
        m,
        sigma,
        sigma_index,
        model_index,
        seed,
        mi_max: mi.max(),
        mi_mean: mi.mean(),
        front_size: sim.true_front.len(),
        front_jaccard: sim.comparison.jaccard,
        distinct_value_count: distinct_value_count(&sim.table, config.distinct_resolution),
    })
}

/// Runs every `(M, sigma, model)` combination.
///
/// The reference landscape of model `k` at `sigma_grid[i]` has order
/// `max(m_grid)` and seed `derive_model_seed(base_seed, i, k)`; each cell
/// of the `M` axis truncates it. Cells run in parallel on the current rayon
/// pool, and the output is identical for any number of workers.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    config.validate()?;
    let jobs: Vec<(usize, usize, usize)> = config
        .m_grid
        .iter()
        .flat_map(|&m| {
            (0..config.sigma_grid.len())
                .flat_map(move |si| (0..config.models_per_cell).map(move |k| (m, si, k)))
        })
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(m, si, k)| run_sweep_model(config, m, si, k))
        .collect::<Result<Vec<_>>>()?;
    let cells = records
        .chunks(config.models_per_cell)
        .map(|chunk| {
            let pick = |f: fn(&ModelRecord) -> f64| chunk.iter().map(f).collect::<Vec<f64>>();
            let mi_max_values = pick(|r| r.mi_max);
            CellSummary {
                m: chunk[0].m,
                sigma: chunk[0].sigma,
                mi_max: Summary::of(&mi_max_values),
                mi_mean: Summary::of(&pick(|r| r.mi_mean)),
                front_size: Summary::of(&pick(|r| r.front_size as f64)),
                front_jaccard: Summary::of(&pick(|r| r.front_jaccard)),
                distinct_value_count: Summary::of(&pick(|r| r.distinct_value_count as f64)),
                mi_max_values,
            }
        })
        .collect();
    Ok(SweepResult {
        config: config.clone(),
        records,
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn perfectly_correlated_bits() {
        let d = DistributionTable::from_probs(vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert_close(mutual_information(&d, 0, 1).unwrap(), 2f64.ln(), 1e-15);
        assert_close(mutual_information(&d, 1, 0).unwrap(), 2f64.ln(), 1e-15);
    }

    #[test]
    fn same_variable_is_an_error() {
        let d = DistributionTable::from_probs(vec![0.25; 4]).unwrap();
        assert!(matches!(mutual_information(&d, 1, 1), Err(Error::Parameter(_))));
    }

    #[test]
    fn product_distribution_has_zero_mi() {
        let q = product_distribution(&UnivariateMarginals::new(vec![0.1, 0.7, 0.45, 0.99]).unwrap());
        let mi = mi_matrix(&q).unwrap();
        assert!(mi.max() <= 1e-12);
    }

    #[test]
    fn uniform_matrix_is_zero_and_symmetric() {
        let d = DistributionTable::from_probs(vec![1.0 / 16.0; 16]).unwrap();
        let mi = mi_matrix(&d).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(mi.get(i, j), 0.0);
                assert_eq!(mi.get(i, j), mi.get(j, i));
            }
        }
    }

    #[test]
    fn order_one_landscape_has_no_dependencies() {
        let l = NmLandscape::generate(10, 1, 7.0, 3).unwrap();
        let p = make_bi_objective(&l, 1, 1).unwrap();
        let sim = run_simulation(&p, 1.0).unwrap();
        for o in &sim.objectives {
            assert!(mi_matrix(&o.boltzmann).unwrap().max() <= 1e-10);
        }
        assert!(sim.comparison.set_equal);
    }

    #[test]
    fn order_two_landscape_has_dependencies() {
        let l = NmLandscape::generate(10, 2, 19.0, 3).unwrap();
        let p = make_bi_objective(&l, 2, 2).unwrap();
        let sim = run_simulation(&p, 1.0).unwrap();
        let mi = mi_matrix(&sim.objectives[1].boltzmann).unwrap();
        assert!(mi.max() > 0.0);
        assert!(sim.objectives[1].factorization_gap > 0.0);
        for i in 0..10 {
            for j in 0..10 {
                assert_eq!(mi.get(i, j).to_bits(), mi.get(j, i).to_bits());
            }
        }
    }

    #[test]
    fn summary_statistics() {
        let s = Summary::of(&[1.0, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.std, 1.0);
        assert_eq!(Summary::of(&[4.0]).std, 0.0);
    }

    #[test]
    fn distinct_count_resolution() {
        let l = NmLandscape::generate(6, 1, 1.0, 0).unwrap();
        let p = make_bi_objective(&l, 1, 1).unwrap();
        let t = full_table(&p, true).unwrap();
        assert!(distinct_value_count(&t, 0.0) <= 64);
        assert!(distinct_value_count(&t, 0.5) <= 9);
        assert!(distinct_value_count(&t, 0.5) >= 2);
    }

    #[test]
    fn sweep_shape_and_order() {
        let config = SweepConfig {
            n_vars: 5,
            m_grid: vec![1, 2, 3],
            sigma_grid: vec![1.0, 5.0],
            models_per_cell: 3,
            ..SweepConfig::default()
        };
        let r = run_sweep(&config).unwrap();
        assert_eq!(r.records.len(), 18);
        assert_eq!(r.cells.len(), 6);
        assert_eq!((r.cells[1].m, r.cells[1].sigma), (1, 5.0));
        assert_eq!((r.cells[2].m, r.cells[2].sigma), (2, 1.0));
        // The same reference landscape is truncated along the M axis.
        assert_eq!(r.records[0].seed, r.records[6].seed);
        assert_ne!(r.records[0].seed, r.records[1].seed);
        assert_ne!(r.records[0].seed, r.records[3].seed);
    }

    #[test]
    fn sweep_rejects_bad_config() {
        let c = SweepConfig { m_grid: vec![11], ..SweepConfig::default() };
        assert!(run_sweep(&c).is_err());
        let c = SweepConfig { sigma_grid: vec![0.0], ..SweepConfig::default() };
        assert!(c.validate().is_err());
        let c = SweepConfig { objective: 3, ..SweepConfig::default() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn single_model_is_reproducible_in_isolation() {
        let config = SweepConfig {
            n_vars: 6,
            m_grid: vec![1, 2],
            sigma_grid: vec![3.0, 9.0],
            models_per_cell: 2,
            ..SweepConfig::default()
        };
        let r = run_sweep(&config).unwrap();
        let again = run_sweep_model(&config, 2, 1, 1).unwrap();
        assert_eq!(r.records.last().unwrap(), &again);
    }
}
