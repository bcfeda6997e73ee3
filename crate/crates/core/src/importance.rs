//! Importance of taxa and taxon pairs aggregated over repeated searches.

use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::evaluation::MethodSpec;
use crate::ga::{run_ga_with_model, FitnessEvaluation, FitnessModel, GenerationStats, GroupChromosome, PenaltyMode};
use crate::graphml::{AttrValue, Graph};
use crate::ingest::{AbundanceMatrix, FunctionalVariable};
use crate::model_select::tune_mu;
use crate::network::{CoOccurrenceNetwork, ConvolutionOperator};
use crate::table::{fmt_num, read_table, TableWriter};
use crate::{par, seed, stats};

#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceResult {
    /// Mean of `r * x` over runs.
    pub taxon_importance: Vec<f64>,
    /// Mean of `r * x x'` over runs.
    pub pair_importance: Array2<f64>,
    pub per_run: Vec<(GroupChromosome, f64)>,
}

impl ImportanceResult {
    pub fn runs(&self) -> usize {
        self.per_run.len()
    }

    /// Taxa sorted by decreasing importance, ties by index.
    pub fn ranking(&self) -> Vec<usize> {
        ranking(&self.taxon_importance)
    }

    pub fn top(&self, k: usize) -> Vec<usize> {
        top_taxa(&self.taxon_importance, k)
    }

    pub fn write_nodes(&self, path: &Path, labels: &[String], mean_abundance: &[f64]) -> Result<()> {
        let mut w = TableWriter::new(&["taxon", "importance", "mean_relative_abundance"]);
        for ((label, i), a) in labels.iter().zip(&self.taxon_importance).zip(mean_abundance) {
            w.labeled_row(label, [*i, *a]);
        }
        w.write(path)
    }

    /// Upper-triangle pairs with nonzero importance.
    pub fn write_edges(&self, path: &Path, labels: &[String]) -> Result<()> {
        let mut w = TableWriter::new(&["taxon_a", "taxon_b", "weight"]);
        let p = labels.len();
        for i in 0..p {
            for j in i + 1..p {
                let v = self.pair_importance[[i, j]];
                if v != 0.0 {
                    w.row(&[labels[i].clone(), labels[j].clone(), fmt_num(v)]);
                }
            }
        }
        w.write(path)
    }

    /// Group network as GraphML; pairs with `|L| < min_abs_weight` are left out.
    pub fn write_graphml(
        &self,
        path: &Path,
        labels: &[String],
        mean_abundance: &[f64],
        min_abs_weight: f64,
    ) -> Result<()> {
        let mut g = Graph::new(["importance", "mean_relative_abundance"]);
        for ((label, i), a) in labels.iter().zip(&self.taxon_importance).zip(mean_abundance) {
            g.add_node(label.clone(), vec![AttrValue::Double(*i), AttrValue::Double(*a)]);
        }
        let p = labels.len();
        for i in 0..p {
            for j in i + 1..p {
                let v = self.pair_importance[[i, j]];
                if v != 0.0 && v.abs() >= min_abs_weight {
                    g.add_edge(i, j, v);
                }
            }
        }
        g.write(path)
    }
}

/// Node table written by [`ImportanceResult::write_nodes`].
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceTable {
    pub taxon_labels: Vec<String>,
    pub importance: Vec<f64>,
    pub mean_abundance: Vec<f64>,
}

pub fn load_importance_nodes(path: &Path) -> Result<ImportanceTable> {
    let t = read_table(path)?;
    let col = |name: &str| {
        t.column(name)
            .ok_or_else(|| t.parse_err(1, format!("missing column {name}")))
    };
    let (ct, ci, ca) = (col("taxon")?, col("importance")?, col("mean_relative_abundance")?);
    let mut out = ImportanceTable {
        taxon_labels: Vec::with_capacity(t.rows.len()),
        importance: Vec::with_capacity(t.rows.len()),
        mean_abundance: Vec::with_capacity(t.rows.len()),
    };
    for (line, cells) in &t.rows {
        out.taxon_labels.push(cells[ct].clone());
        out.importance.push(t.number(*line, ci, &cells[ci])?);
        out.mean_abundance.push(t.number(*line, ca, &cells[ca])?);
    }
    if out.taxon_labels.is_empty() {
        return Err(t.parse_err(1, "no taxa listed"));
    }
    Ok(out)
}

/// Indices sorted by decreasing importance, ties by index.
pub fn ranking(importance: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..importance.len()).collect();
    idx.sort_by(|&a, &b| importance[b].total_cmp(&importance[a]).then(a.cmp(&b)));
    idx
}

pub fn top_taxa(importance: &[f64], k: usize) -> Vec<usize> {
    let mut t = ranking(importance);
    t.truncate(k);
    t
}

/// Average `r x` and `r x x'` over runs.
pub fn aggregate_importance(runs: &[(GroupChromosome, f64)]) -> Result<ImportanceResult> {
    let Some((first, _)) = runs.first() else {
        return Err(Error::validation("cannot aggregate importance over zero runs"));
    };
    let p = first.len();
    if runs.iter().any(|(x, _)| x.len() != p) {
        return Err(Error::validation("chromosomes differ in length"));
    }
    let mut sum_i = vec![0.0; p];
    let mut sum_l = Array2::<f64>::zeros((p, p));
    for (x, r) in runs {
        let idx = x.indices();
        for &i in &idx {
            sum_i[i] += r;
            for &j in &idx {
                sum_l[[i, j]] += r;
            }
        }
    }
    let t = runs.len() as f64;
    Ok(ImportanceResult {
        taxon_importance: sum_i.into_iter().map(|v| v / t).collect(),
        pair_importance: sum_l.mapv(|v| v / t),
        per_run: runs.to_vec(),
    })
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub group: GroupChromosome,
    pub eval: FitnessEvaluation,
    pub history: Vec<GenerationStats>,
}

#[derive(Debug, Clone)]
pub struct Discovery {
    pub importance: ImportanceResult,
    pub runs: Vec<RunRecord>,
    /// Index into `runs` of the highest-fitness group (ties: smaller bit vector).
    pub best_run: usize,
    pub mu: Option<f64>,
    pub top_taxa: Vec<usize>,
    /// Correlation of the summed top taxa with the response, and its p-value.
    pub top_r: f64,
    pub top_p: f64,
}

impl Discovery {
    pub fn best(&self) -> &RunRecord {
        &self.runs[self.best_run]
    }

    pub fn write_history(&self, path: &Path) -> Result<()> {
        let mut w = TableWriter::new(&[
            "run",
            "generation",
            "max_fitness",
            "mean_fitness",
            "max_r",
            "mean_r",
            "mean_size",
        ]);
        for (run, rec) in self.runs.iter().enumerate() {
            for g in &rec.history {
                w.row(&[
                    run.to_string(),
                    g.generation.to_string(),
                    fmt_num(g.max_fitness),
                    fmt_num(g.mean_fitness),
                    fmt_num(g.max_r),
                    fmt_num(g.mean_r),
                    fmt_num(g.mean_size),
                ]);
            }
        }
        w.write(path)
    }

    pub fn write_runs(&self, path: &Path) -> Result<()> {
        let mut w = TableWriter::new(&["run", "fitness", "r", "size", "group_bits", "best"]);
        for (i, rec) in self.runs.iter().enumerate() {
            w.row(&[
                i.to_string(),
                fmt_num(rec.eval.penalized_fitness),
                fmt_num(rec.eval.pearson_r),
                rec.group.size().to_string(),
                rec.group.to_string(),
                (i == self.best_run).to_string(),
            ]);
        }
        w.write(path)
    }

    pub fn write_group(&self, path: &Path, labels: &[String]) -> Result<()> {
        let mut w = TableWriter::new(&["taxon", "index"]);
        for i in self.best().group.indices() {
            w.row(&[labels[i].clone(), i.to_string()]);
        }
        w.write(path)
    }
}

/// Run the search `runs` times on the full data and aggregate importances.
///
/// In l1 mode with a multi-value grid, mu is tuned once on the full data first.
/// `top_k` defaults to `k_opt` in size-cap mode and to the best group's size
/// in l1 mode.
pub fn discover_importance(
    h: &AbundanceMatrix,
    net: Option<&CoOccurrenceNetwork>,
    y: &FunctionalVariable,
    method: &MethodSpec,
    runs: usize,
    top_k: Option<usize>,
    master_seed: u64,
) -> Result<Discovery> {
    if runs == 0 {
        return Err(Error::validation("runs must be positive"));
    }
    let op = match (method.use_graph, net) {
        (true, Some(net)) => ConvolutionOperator::from_network(net),
        (true, None) => return Err(Error::validation("graph method without a network")),
        (false, _) => ConvolutionOperator::identity(h.n_taxa()),
    };
    let m = op.apply(h.values())?;
    let model = FitnessModel::from_uncentered(&m, y.values())?;

    let mut cfg = method.optimizer.clone();
    let mut mu = None;
    if cfg.mode == PenaltyMode::L1 {
        let chosen = match method.mu_grid.len() {
            0 => cfg.mu,
            1 => method.mu_grid[0],
            _ => {
                let tune_cfg = cfg.with_seed(seed::derive(master_seed, &[seed::STREAM_IMPORTANCE, u64::MAX]));
                tune_mu(&m, y.values(), &method.mu_grid, &tune_cfg, &method.tune)?.chosen_mu
            }
        };
        cfg.mu = chosen;
        mu = Some(chosen);
    }

    let records = par::map_range(runs, |i| -> Result<RunRecord> {
        let run_cfg = cfg.with_seed(seed::derive(master_seed, &[seed::STREAM_IMPORTANCE, i as u64]));
        let res = run_ga_with_model(&model, &run_cfg)?;
        Ok(RunRecord {
            group: res.best,
            eval: res.best_eval,
            history: res.history,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let best_run = (0..records.len())
        .reduce(|b, i| {
            let (fb, fi) = (records[b].eval.penalized_fitness, records[i].eval.penalized_fitness);
            if fi > fb || (fi == fb && records[i].group < records[b].group) {
                i
            } else {
                b
            }
        })
        .expect("at least one run");

    let pairs: Vec<(GroupChromosome, f64)> = records
        .iter()
        .map(|r| (r.group.clone(), r.eval.pearson_r))
        .collect();
    let importance = aggregate_importance(&pairs)?;

    let k = top_k
        .unwrap_or(match cfg.mode {
            PenaltyMode::SizeCap => cfg.k_opt,
            PenaltyMode::L1 => records[best_run].group.size(),
        })
        .clamp(1, h.n_taxa());
    let top_taxa = importance.top(k);
    let top_group = GroupChromosome::from_indices(h.n_taxa(), &top_taxa);
    let top_r = stats::pearson(&top_group.effect(&m), y.values()).unwrap_or(0.0);
    let top_p = stats::pearson_p(top_r, y.len());

    Ok(Discovery {
        importance,
        runs: records,
        best_run,
        mu,
        top_taxa,
        top_r,
        top_p,
    })
}
