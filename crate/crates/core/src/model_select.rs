//! Group-size selection by AIC and l1-penalty tuning on an inner split.

use std::path::Path;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{group_r, stratified_split};
use crate::ga::{run_ga_with_model, FitnessModel, GroupChromosome, OptimizerConfig, PenaltyMode};
use crate::table::{fmt_num, TableWriter};
use crate::{par, seed, stats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AicFormula {
    /// `2k - 2 ln L`.
    #[default]
    Standard,
    /// `-2k - ln L`, kept for comparison with published sweeps.
    Literal,
}

/// RSS is floored at this multiple of `n * var(y)`.
pub const RSS_FLOOR: f64 = 1e-12;

/// Gaussian log-likelihood of the least-squares fit `y ~ b0 + b1 s`.
pub fn regression_log_likelihood(s: &[f64], y: &[f64]) -> Result<f64> {
    let n = s.len() as f64;
    let ms = stats::mean(s);
    let my = stats::mean(y);
    let sxx: f64 = s.iter().map(|v| (v - ms) * (v - ms)).sum();
    if !(sxx > 0.0) {
        return Err(Error::numeric("group effect has zero variance; regression undefined"));
    }
    let sxy: f64 = s.iter().zip(y).map(|(a, b)| (a - ms) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * ms;
    let rss: f64 = s
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let e = b - intercept - slope * a;
            e * e
        })
        .sum();
    let rss = rss.max(RSS_FLOOR * n * stats::variance(y));
    Ok(-0.5 * n * ((2.0 * std::f64::consts::PI * rss / n).ln() + 1.0))
}

pub fn aic_from_likelihood(k: usize, log_likelihood: f64, formula: AicFormula) -> f64 {
    let k = k as f64;
    match formula {
        AicFormula::Standard => 2.0 * k - 2.0 * log_likelihood,
        AicFormula::Literal => -2.0 * k - log_likelihood,
    }
}

/// AIC of the group's regression, with `k` the group size.
pub fn aic_for_group(x: &GroupChromosome, m: &Array2<f64>, y: &[f64], formula: AicFormula) -> Result<f64> {
    if x.size() == 0 {
        return Err(Error::validation("AIC of an empty group"));
    }
    let ll = regression_log_likelihood(&x.effect(m), y)?;
    Ok(aic_from_likelihood(x.size(), ll, formula))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRun {
    pub k: usize,
    pub repeat: usize,
    pub aic: f64,
    pub r: f64,
    pub group: GroupChromosome,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeSummary {
    pub k: usize,
    pub aics: Vec<f64>,
    pub mean_aic: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeSweep {
    pub runs: Vec<SweepRun>,
    pub per_k: Vec<SizeSummary>,
    pub chosen_k: usize,
}

impl SizeSweep {
    /// One row per run: (k, repeat, aic, r, group_bits).
    pub fn write_runs(&self, path: &Path) -> Result<()> {
        let mut w = TableWriter::new(&["k", "repeat", "aic", "r", "group_bits"]);
        for run in &self.runs {
            w.row(&[
                run.k.to_string(),
                run.repeat.to_string(),
                fmt_num(run.aic),
                fmt_num(run.r),
                run.group.to_string(),
            ]);
        }
        w.write(path)
    }

    pub fn write_summary(&self, path: &Path) -> Result<()> {
        let mut w = TableWriter::new(&["k", "mean_aic", "chosen"]);
        for s in &self.per_k {
            w.row(&[
                s.k.to_string(),
                fmt_num(s.mean_aic),
                (s.k == self.chosen_k).to_string(),
            ]);
        }
        w.write(path)
    }
}

/// Run the size-capped search `repeats` times per `k` and pick the `k` with
/// the lowest mean AIC (ties go to the smaller `k`).
///
/// `m` holds uncentered topological abundances. The AIC's complexity term uses
/// the cap `k`. Run seeds derive from `cfg.seed`, `k` and the repeat index.
pub fn sweep_k(
    m: &Array2<f64>,
    y: &[f64],
    k_min: usize,
    k_max: usize,
    repeats: usize,
    cfg: &OptimizerConfig,
    formula: AicFormula,
) -> Result<SizeSweep> {
    if k_min == 0 || k_min > k_max || k_max > m.ncols() {
        return Err(Error::validation(format!(
            "group size range {k_min}..={k_max} must lie within 1..={}",
            m.ncols()
        )));
    }
    if repeats == 0 {
        return Err(Error::validation("repeats must be positive"));
    }
    let model = FitnessModel::from_uncentered(m, y)?;
    let ks: Vec<usize> = (k_min..=k_max).collect();
    let jobs = ks.len() * repeats;
    let runs = par::map_range(jobs, |job| -> Result<SweepRun> {
        let k = ks[job / repeats];
        let repeat = job % repeats;
        let run_cfg = OptimizerConfig {
            mode: PenaltyMode::SizeCap,
            k_opt: k,
            seed: seed::derive(cfg.seed, &[seed::STREAM_SWEEP, k as u64, repeat as u64]),
            ..cfg.clone()
        };
        let res = run_ga_with_model(&model, &run_cfg)?;
        let ll = regression_log_likelihood(&res.best.effect(m), y)?;
        Ok(SweepRun {
            k,
            repeat,
            aic: aic_from_likelihood(k, ll, formula),
            r: res.best_eval.pearson_r,
            group: res.best,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let per_k: Vec<SizeSummary> = ks
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let aics: Vec<f64> = runs[i * repeats..(i + 1) * repeats].iter().map(|r| r.aic).collect();
            SizeSummary {
                k,
                mean_aic: stats::mean(&aics),
                aics,
            }
        })
        .collect();
    let chosen_k = per_k
        .iter()
        .fold(None::<&SizeSummary>, |best, s| match best {
            Some(b) if b.mean_aic <= s.mean_aic => Some(b),
            _ => Some(s),
        })
        .map(|s| s.k)
        .expect("non-empty range");
    Ok(SizeSweep {
        runs,
        per_k,
        chosen_k,
    })
}

/// Inner validation design for mu tuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuneConfig {
    pub fraction: f64,
    pub n_strata: usize,
    pub repeats: usize,
}

impl Default for TuneConfig {
    fn default() -> Self {
        TuneConfig {
            fraction: 0.5,
            n_strata: 10,
            repeats: 1,
        }
    }
}

pub fn default_mu_grid() -> Vec<f64> {
    (3..=10).map(|d| 1.0 / (10.0 * d as f64)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MuTuning {
    /// (mu, mean validation r) in grid order.
    pub per_mu: Vec<(f64, f64)>,
    pub chosen_mu: f64,
}

/// Choose the l1 penalty by validation correlation on stratified inner splits
/// of the training data. Ties go to the larger mu. Every grid value in a
/// repeat shares the split and the search seed.
pub fn tune_mu(
    m_train: &Array2<f64>,
    y_train: &[f64],
    grid: &[f64],
    cfg: &OptimizerConfig,
    tune: &TuneConfig,
) -> Result<MuTuning> {
    if grid.is_empty() {
        return Err(Error::validation("mu grid is empty"));
    }
    if let Some(bad) = grid.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
        return Err(Error::validation(format!("invalid mu {bad} in grid")));
    }
    if tune.repeats == 0 {
        return Err(Error::validation("tuning repeats must be positive"));
    }
    let jobs = tune.repeats * grid.len();
    let scores = par::map_range(jobs, |job| -> Result<f64> {
        let repeat = job / grid.len();
        let mu = grid[job % grid.len()];
        let split_seed = seed::derive(cfg.seed, &[seed::STREAM_TUNE, repeat as u64, 0]);
        let plan = stratified_split(y_train, tune.fraction, tune.n_strata, split_seed)?;
        let inner_m = m_train.select(Axis(0), &plan.train);
        let inner_y: Vec<f64> = plan.train.iter().map(|&i| y_train[i]).collect();
        let run_cfg = OptimizerConfig {
            mode: PenaltyMode::L1,
            mu,
            seed: seed::derive(cfg.seed, &[seed::STREAM_TUNE, repeat as u64, 1]),
            ..cfg.clone()
        };
        let res = run_ga_with_model(&FitnessModel::from_uncentered(&inner_m, &inner_y)?, &run_cfg)?;
        let val_m = m_train.select(Axis(0), &plan.test);
        let val_y: Vec<f64> = plan.test.iter().map(|&i| y_train[i]).collect();
        Ok(group_r(&val_m, &val_y, &res.best))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let per_mu: Vec<(f64, f64)> = grid
        .iter()
        .enumerate()
        .map(|(g, &mu)| {
            let rs: Vec<f64> = (0..tune.repeats).map(|rep| scores[rep * grid.len() + g]).collect();
            (mu, stats::mean(&rs))
        })
        .collect();
    let chosen_mu = per_mu
        .iter()
        .copied()
        .reduce(|best, cand| {
            if cand.1 > best.1 || (cand.1 == best.1 && cand.0 > best.0) {
                cand
            } else {
                best
            }
        })
        .map(|(mu, _)| mu)
        .expect("non-empty grid");
    Ok(MuTuning { per_mu, chosen_mu })
}
