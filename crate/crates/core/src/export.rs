//! File exporters. CSV numbers carry 12 significant digits and JSON numbers
//! 17 (see [`crate::format`]). Every file is written to a temporary sibling
//! and renamed into place, so readers never observe a partial file.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::value::RawValue;

use crate::analysis::{SimulationRecord, SweepResult};
use crate::distribution::{DistributionTable, UnivariateMarginals};
use crate::error::{Error, Result};
use crate::format::{self, sig17_vec, Sig17};
use crate::mop::{MnmProblem, ObjectiveTable, TableStage};
use crate::pareto::{FrontComparison, FrontResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let display = path.display().to_string();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    }
    let mut tmp_name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    tmp_name.push(".partial");
    let tmp = path.with_file_name(tmp_name);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(display, e));
    }
    Ok(())
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes to JSON");
    s.push('\n');
    s
}

/// Pre-rendered JSON fragment, e.g. problem metadata.
pub type JsonFragment = Box<RawValue>;

fn fragment<T: Serialize>(value: &T) -> JsonFragment {
    RawValue::from_string(serde_json::to_string(value).expect("value serializes to JSON"))
        .expect("serde_json emits valid JSON")
}

#[derive(Serialize)]
#[serde(untagged)]
enum Cell {
    Key(u64),
    Num(Sig17),
}

/// Columns-and-rows JSON document used for every tabular export.
#[derive(Serialize)]
struct JsonTable<'a> {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    metadata: Option<&'a RawValue>,
}

fn render(
    fmt: OutputFormat,
    columns: &[String],
    rows: impl Iterator<Item = (u64, Vec<f64>)>,
    metadata: Option<&RawValue>,
) -> String {
    match fmt {
        OutputFormat::Csv => {
            let mut out = columns.join(",");
            out.push('\n');
            for (key, vals) in rows {
                out.push_str(&key.to_string());
                for v in vals {
                    out.push(',');
                    out.push_str(&format::csv(v));
                }
                out.push('\n');
            }
            out
        }
        OutputFormat::Json => {
            let rows = rows
                .map(|(key, vals)| {
                    std::iter::once(Cell::Key(key))
                        .chain(vals.into_iter().map(|v| Cell::Num(Sig17(v))))
                        .collect()
                })
                .collect();
            to_json_string(&JsonTable {
                columns: columns.to_vec(),
                rows,
                metadata,
            })
        }
    }
}

#[derive(Serialize)]
struct ObjectiveMeta {
    max_order: usize,
    terms: usize,
    sigma: Sig17,
    seed: u64,
    transform: &'static str,
}

#[derive(Serialize)]
struct ProblemMeta {
    n_vars: usize,
    solution_index_bit_order: &'static str,
    stage: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    temperature: Option<Sig17>,
    objectives: Vec<ObjectiveMeta>,
}

/// Metadata describing the problem behind an objective table.
pub fn problem_metadata(problem: &MnmProblem, table: &ObjectiveTable, temperature: Option<f64>) -> JsonFragment {
    let stage = match table.stage() {
        TableStage::Raw => "raw",
        TableStage::TermScaled => "term_scaled",
        TableStage::Normalized => "normalized",
    };
    fragment(&ProblemMeta {
        n_vars: problem.n_vars(),
        solution_index_bit_order: "lsb_first",
        stage,
        temperature: temperature.map(Sig17),
        objectives: problem
            .objectives()
            .iter()
            .map(|o| ObjectiveMeta {
                max_order: o.landscape.max_order(),
                terms: o.landscape.len(),
                sigma: Sig17(o.landscape.sigma()),
                seed: o.landscape.seed(),
                transform: o.transform.name(),
            })
            .collect(),
    })
}

pub fn objective_table(table: &ObjectiveTable, fmt: OutputFormat, metadata: Option<&RawValue>) -> String {
    let m = table.values().cols();
    let columns: Vec<String> = std::iter::once("solution_index".to_string())
        .chain((1..=m).map(|k| format!("f{k}")))
        .collect();
    let rows = table
        .values()
        .iter_rows()
        .enumerate()
        .map(|(s, r)| (s as u64, r.to_vec()));
    render(fmt, &columns, rows, metadata)
}

pub fn distribution(dist: &DistributionTable, fmt: OutputFormat) -> String {
    let columns = ["solution_index".to_string(), "p".to_string()];
    let rows = dist.probs().iter().enumerate().map(|(s, &p)| (s as u64, vec![p]));
    render(fmt, &columns, rows, None)
}

/// Variables are numbered from 1.
pub fn marginals(marg: &UnivariateMarginals, fmt: OutputFormat) -> String {
    let columns = ["variable".to_string(), "p_one".to_string()];
    let rows = marg.p_one().iter().enumerate().map(|(i, &p)| (i as u64 + 1, vec![p]));
    render(fmt, &columns, rows, None)
}

/// Front members sorted by `f1` descending, ties in ascending index order.
pub fn front(front: &FrontResult, fmt: OutputFormat) -> String {
    if fmt == OutputFormat::Csv {
        return front.to_csv();
    }
    let m = front.front_points.first().map_or(0, Vec::len);
    let columns: Vec<String> = std::iter::once("solution_index".to_string())
        .chain((1..=m).map(|k| format!("f{k}")))
        .collect();
    let mut order: Vec<usize> = (0..front.len()).collect();
    order.sort_by(|&a, &b| front.front_points[b][0].total_cmp(&front.front_points[a][0]));
    let rows = order
        .into_iter()
        .map(|k| (front.member_indices[k] as u64, front.front_points[k].clone()));
    render(fmt, &columns, rows, None)
}

/// Headline numbers of one simulation run.
pub fn simulation_summary(sim: &SimulationRecord, metadata: &RawValue) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        problem: &'a RawValue,
        factorization_gap_linf: Vec<Sig17>,
        true_front_size: usize,
        true_front_distinct_points: usize,
        boltzmann_front_equal: bool,
        factorized_front_size: usize,
        factorized_front_equal: bool,
        factorized_front_jaccard: Sig17,
    }
    to_json_string(&Doc {
        problem: metadata,
        factorization_gap_linf: sim.objectives.iter().map(|o| Sig17(o.factorization_gap)).collect(),
        true_front_size: sim.true_front.len(),
        true_front_distinct_points: sim.true_front.distinct_points(),
        boltzmann_front_equal: sim.boltzmann_comparison.set_equal,
        factorized_front_size: sim.factorized_front.len(),
        factorized_front_equal: sim.comparison.set_equal,
        factorized_front_jaccard: Sig17(sim.comparison.jaccard),
    })
}

pub fn comparison_json(cmp: &FrontComparison) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        set_equal: bool,
        jaccard: Sig17,
        only_in_a: &'a [usize],
        only_in_b: &'a [usize],
    }
    to_json_string(&Doc {
        set_equal: cmp.set_equal,
        jaccard: Sig17(cmp.jaccard),
        only_in_a: &cmp.only_in_a,
        only_in_b: &cmp.only_in_b,
    })
}

/// Per-model sweep records, one row per `(M, sigma, model)`.
pub fn sweep_models_csv(result: &SweepResult) -> String {
    let mut out = String::from(
        "M,sigma,model_index,seed,mi_max,mi_mean,front_size,front_jaccard,distinct_value_count\n",
    );
    for r in &result.records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.m,
            format::csv(r.sigma),
            r.model_index,
            r.seed,
            format::csv(r.mi_max),
            format::csv(r.mi_mean),
            r.front_size,
            format::csv(r.front_jaccard),
            r.distinct_value_count
        ));
    }
    out
}

/// Per-cell aggregates (mean and sample standard deviation over models).
pub fn sweep_cells_csv(result: &SweepResult) -> String {
    let mut out = String::from(
        "M,sigma,models,mi_max_mean,mi_max_std,mi_mean_mean,mi_mean_std,front_size_mean,front_size_std,front_jaccard_mean,front_jaccard_std,distinct_value_count_mean,distinct_value_count_std\n",
    );
    for c in &result.cells {
        let stats = [
            c.mi_max,
            c.mi_mean,
            c.front_size,
            c.front_jaccard,
            c.distinct_value_count,
        ];
        out.push_str(&format!("{},{},{}", c.m, format::csv(c.sigma), c.mi_max_values.len()));
        for s in stats {
            out.push_str(&format!(",{},{}", format::csv(s.mean), format::csv(s.std)));
        }
        out.push('\n');
    }
    out
}

/// Grid axes and matrices of cell means (rows follow `m_axis`, columns
/// follow `sigma_axis`).
pub fn sweep_plot_json(result: &SweepResult) -> String {
    let cfg = &result.config;
    let grid = |f: &dyn Fn(&crate::analysis::CellSummary) -> f64| -> Vec<Vec<Sig17>> {
        cfg.m_grid
            .iter()
            .map(|&m| {
                cfg.sigma_grid
                    .iter()
                    .map(|&s| Sig17(result.cell(m, s).map_or(f64::NAN, f)))
                    .collect()
            })
            .collect()
    };
    #[derive(Serialize)]
    struct PlotDoc<'a> {
        mi_units: &'static str,
        objective: usize,
        n_vars: usize,
        models_per_cell: usize,
        base_seed: u64,
        temperature: Sig17,
        m_axis: &'a [usize],
        sigma_axis: Vec<Sig17>,
        mi_max_mean: Vec<Vec<Sig17>>,
        mi_max_std: Vec<Vec<Sig17>>,
        mi_mean_mean: Vec<Vec<Sig17>>,
        mi_mean_std: Vec<Vec<Sig17>>,
        front_jaccard_mean: Vec<Vec<Sig17>>,
        distinct_value_count_mean: Vec<Vec<Sig17>>,
    }
    to_json_string(&PlotDoc {
        mi_units: "nats",
        objective: cfg.objective,
        n_vars: cfg.n_vars,
        models_per_cell: cfg.models_per_cell,
        base_seed: cfg.base_seed,
        temperature: Sig17(cfg.temperature),
        m_axis: &cfg.m_grid,
        sigma_axis: sig17_vec(&cfg.sigma_grid),
        mi_max_mean: grid(&|c| c.mi_max.mean),
        mi_max_std: grid(&|c| c.mi_max.std),
        mi_mean_mean: grid(&|c| c.mi_mean.mean),
        mi_mean_std: grid(&|c| c.mi_mean.std),
        front_jaccard_mean: grid(&|c| c.front_jaccard.mean),
        distinct_value_count_mean: grid(&|c| c.distinct_value_count.mean),
    })
}

/// Reads a CSV whose first column is a solution index and whose remaining
/// columns are numbers. Rows must cover indices `0..rows` in order.
pub fn read_indexed_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let display = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| Error::io(display.clone(), e))?;
    let bad = |message: String| Error::Format {
        path: display.clone(),
        message,
    };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| bad("empty file".into()))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    if header.len() < 2 {
        return Err(bad("need an index column and at least one value column".into()));
    }
    let mut rows = Vec::new();
    for (line_no, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != header.len() {
            return Err(bad(format!("row {} has {} fields, expected {}", line_no + 2, fields.len(), header.len())));
        }
        let index: usize = fields[0]
            .parse()
            .map_err(|_| bad(format!("row {}: bad index {:?}", line_no + 2, fields[0])))?;
        if index != rows.len() {
            return Err(bad(format!("row {}: expected index {}, got {index}", line_no + 2, rows.len())));
        }
        let vals = fields[1..]
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| bad(format!("row {}: bad number {f:?}", line_no + 2))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(vals);
    }
    Ok((header, rows))
}
