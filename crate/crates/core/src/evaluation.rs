//! Repeated stratified train/test evaluation and paired comparison of methods.

use std::path::Path;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ga::{run_ga_with_model, FitnessModel, GroupChromosome, OptimizerConfig, PenaltyMode};
use crate::ingest::{AbundanceMatrix, FunctionalVariable};
use crate::model_select::{tune_mu, TuneConfig};
use crate::network::{CoOccurrenceNetwork, ConvolutionOperator};
use crate::table::{fmt_num, TableWriter};
use crate::{par, seed, stats};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Stratum id of every sample.
    pub strata: Vec<usize>,
}

impl SplitPlan {
    /// (train, test) counts per stratum.
    pub fn stratum_counts(&self, n_strata: usize) -> Vec<(usize, usize)> {
        let mut counts = vec![(0, 0); n_strata];
        for &i in &self.train {
            counts[self.strata[i]].0 += 1;
        }
        for &i in &self.test {
            counts[self.strata[i]].1 += 1;
        }
        counts
    }
}

/// Split samples into train and test, stratified on equal-frequency bins of `y`.
///
/// Samples are ranked by `y` (ties by index) and cut into `n_strata` bins.
/// Each bin is shuffled and contributes its share of training samples; the
/// share is rounded on the running total so that per-bin counts differ from
/// `fraction * size` by at most one and the overall train size tracks
/// `fraction * n`.
pub fn stratified_split(y: &[f64], fraction: f64, n_strata: usize, seed: u64) -> Result<SplitPlan> {
    let n = y.len();
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::validation(format!(
            "train fraction must lie strictly between 0 and 1, got {fraction}"
        )));
    }
    if n_strata == 0 {
        return Err(Error::validation("n_strata must be positive"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[a].total_cmp(&y[b]).then(a.cmp(&b)));

    let mut rng = seed::rng(seed);
    let mut strata = vec![0; n];
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut seen = 0usize;
    let mut taken = 0usize;
    for b in 0..n_strata {
        let lo = b * n / n_strata;
        let hi = (b + 1) * n / n_strata;
        let mut members: Vec<usize> = order[lo..hi].to_vec();
        if members.len() < 2 {
            log::warn!(
                "stratum {b} has {} sample(s); assigned by running rounding",
                members.len()
            );
        }
        members.shuffle(&mut rng);
        seen += members.len();
        let target = (fraction * seen as f64).round() as usize;
        let k = target.saturating_sub(taken).min(members.len());
        taken += k;
        for (pos, &i) in members.iter().enumerate() {
            strata[i] = b;
            if pos < k {
                train.push(i);
            } else {
                test.push(i);
            }
        }
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::validation(format!(
            "split of {n} samples at fraction {fraction} leaves an empty train or test set"
        )));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitPlan { train, test, strata })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub fraction: f64,
    pub n_strata: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            fraction: 0.5,
            n_strata: 10,
        }
    }
}

/// One method under evaluation: whether it convolves over the network, and how
/// it searches.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSpec {
    pub tag: String,
    pub use_graph: bool,
    pub optimizer: OptimizerConfig,
    /// In l1 mode, the mu values tuned on each training set. A single value is
    /// used as is; an empty grid falls back to `optimizer.mu`.
    pub mu_grid: Vec<f64>,
    pub tune: TuneConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepeatOutcome {
    pub test_r: f64,
    pub group: GroupChromosome,
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub method_tag: String,
    pub per_repeat_test_r: Vec<f64>,
    pub mean_r: f64,
    pub std_r: f64,
    pub outcomes: Vec<RepeatOutcome>,
}

/// Pearson r of `M x` against `y`, 0 when either side is constant.
pub fn group_r(m: &Array2<f64>, y: &[f64], x: &GroupChromosome) -> f64 {
    stats::pearson(&x.effect(m), y).unwrap_or(0.0)
}

/// Fit one method on a training set and return its group and the mu used.
pub(crate) fn fit_method(
    m_train: &Array2<f64>,
    y_train: &[f64],
    method: &MethodSpec,
    seed: u64,
) -> Result<(GroupChromosome, Option<f64>)> {
    let mut cfg = method.optimizer.with_seed(seed);
    let mut mu = None;
    if cfg.mode == PenaltyMode::L1 {
        let chosen = match method.mu_grid.len() {
            0 => cfg.mu,
            1 => method.mu_grid[0],
            _ => tune_mu(m_train, y_train, &method.mu_grid, &cfg, &method.tune)?.chosen_mu,
        };
        cfg.mu = chosen;
        mu = Some(chosen);
    }
    let model = FitnessModel::from_uncentered(m_train, y_train)?;
    let res = run_ga_with_model(&model, &cfg)?;
    Ok((res.best, mu))
}

/// Repeated split / fit / test-score protocol.
///
/// The convolution operator is built once from the full network and applied to
/// all rows; since it acts on each sample independently this is the same as
/// convolving the train and test blocks separately. Split and search seeds
/// depend only on `seed` and the repeat index, so different methods are scored
/// on identical splits.
pub fn evaluate_method(
    h: &AbundanceMatrix,
    net: Option<&CoOccurrenceNetwork>,
    y: &FunctionalVariable,
    method: &MethodSpec,
    repeats: usize,
    split: &SplitConfig,
    seed: u64,
) -> Result<EvaluationReport> {
    if repeats == 0 {
        return Err(Error::validation("repeats must be positive"));
    }
    if y.len() != h.n_samples() {
        return Err(Error::validation("functional variable length differs from sample count"));
    }
    let op = match (method.use_graph, net) {
        (true, Some(net)) => ConvolutionOperator::from_network(net),
        (true, None) => {
            return Err(Error::validation(format!(
                "method {} needs a network",
                method.tag
            )))
        }
        (false, _) => ConvolutionOperator::identity(h.n_taxa()),
    };
    let m = op.apply(h.values())?;

    let outcomes = par::map_range(repeats, |i| -> Result<RepeatOutcome> {
        let plan = stratified_split(
            y.values(),
            split.fraction,
            split.n_strata,
            seed::derive(seed, &[seed::STREAM_EVAL_SPLIT, i as u64]),
        )?;
        let m_train = m.select(Axis(0), &plan.train);
        let m_test = m.select(Axis(0), &plan.test);
        let (group, mu) = fit_method(
            &m_train,
            &y.select(&plan.train),
            method,
            seed::derive(seed, &[seed::STREAM_EVAL_GA, i as u64]),
        )?;
        let test_r = group_r(&m_test, &y.select(&plan.test), &group);
        Ok(RepeatOutcome { test_r, group, mu })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let per_repeat_test_r: Vec<f64> = outcomes.iter().map(|o| o.test_r).collect();
    Ok(EvaluationReport {
        method_tag: method.tag.clone(),
        mean_r: stats::mean(&per_repeat_test_r),
        std_r: stats::sample_std(&per_repeat_test_r),
        per_repeat_test_r,
        outcomes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    pub p: f64,
    pub significant: bool,
}

pub const SIGNIFICANCE: f64 = 0.05;

/// Two-sided paired t-test on `a - b`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::validation(format!(
            "paired t-test needs equal lengths of at least 2, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let sd = stats::sample_std(&d);
    if !(sd > 0.0) {
        return Err(Error::numeric(
            "paired differences have zero variance; t statistic undefined",
        ));
    }
    let n = d.len() as f64;
    let t = stats::mean(&d) / (sd / n.sqrt());
    let df = n - 1.0;
    let p = stats::t_two_sided_p(t, df);
    Ok(TTest {
        t,
        df,
        p,
        significant: p < SIGNIFICANCE,
    })
}

pub fn write_per_repeat(path: &Path, reports: &[EvaluationReport]) -> Result<()> {
    let mut w = TableWriter::new(&["repeat", "method", "test_r", "group_size", "mu"]);
    for rep in reports {
        for (i, o) in rep.outcomes.iter().enumerate() {
            w.row(&[
                i.to_string(),
                rep.method_tag.clone(),
                fmt_num(o.test_r),
                o.group.size().to_string(),
                o.mu.map(fmt_num).unwrap_or_else(|| "NA".into()),
            ]);
        }
    }
    w.write(path)
}

pub fn write_summary(path: &Path, reports: &[EvaluationReport]) -> Result<()> {
    let mut w = TableWriter::new(&["method", "mean", "std", "n"]);
    for rep in reports {
        w.row(&[
            rep.method_tag.clone(),
            fmt_num(rep.mean_r),
            fmt_num(rep.std_r),
            rep.per_repeat_test_r.len().to_string(),
        ]);
    }
    w.write(path)
}

/// Paired t-tests for every pair of methods, in report order.
pub fn write_t_tests(path: &Path, reports: &[EvaluationReport]) -> Result<()> {
    let mut w = TableWriter::new(&["method_a", "method_b", "t", "df", "p", "significant"]);
    for (i, a) in reports.iter().enumerate() {
        for b in &reports[i + 1..] {
            let row = match paired_t_test(&a.per_repeat_test_r, &b.per_repeat_test_r) {
                Ok(t) => vec![
                    fmt_num(t.t),
                    fmt_num(t.df),
                    fmt_num(t.p),
                    t.significant.to_string(),
                ],
                Err(_) => vec!["NA".into(), "NA".into(), "NA".into(), "false".into()],
            };
            let mut cells = vec![a.method_tag.clone(), b.method_tag.clone()];
            cells.extend(row);
            w.row(&cells);
        }
    }
    w.write(path)
}
