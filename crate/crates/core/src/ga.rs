//! Genetic search over binary taxon-membership vectors.
//!
//! The fitness of a group `x` is the centered correlation surrogate
//! `x'M0'y0 / sqrt(x'M0'M0x)` minus either a size-cap penalty
//! `alpha * max(|x| - k_opt, 0)` or an l1 penalty `mu * |x|`. Dividing the
//! surrogate by `|y0|` gives the Pearson correlation of `Mx` with `y`.

use std::fmt;

use ndarray::{Array1, Array2};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;
use crate::seed;
use crate::table::bits_string;

/// Group variance at or below this is treated as degenerate.
pub const DEGENERATE_VARIANCE: f64 = 1e-15;

/// Binary membership vector over taxa. Orders lexicographically with `0 < 1`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupChromosome {
    bits: Vec<bool>,
}

impl GroupChromosome {
    pub fn new(bits: Vec<bool>) -> Self {
        GroupChromosome { bits }
    }

    pub fn from_indices(p: usize, idx: &[usize]) -> Self {
        let mut bits = vec![false; p];
        for &i in idx {
            bits[i] = true;
        }
        GroupChromosome { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Number of selected taxa (the l1 norm).
    pub fn size(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
            .collect()
    }

    /// `M x`: the per-sample sum of the selected columns.
    pub fn effect(&self, m: &Array2<f64>) -> Vec<f64> {
        let idx = self.indices();
        m.rows()
            .into_iter()
            .map(|row| idx.iter().map(|&j| row[j]).sum())
            .collect()
    }

    pub fn flip(&mut self, i: usize) {
        self.bits[i] = !self.bits[i];
    }
}

impl fmt::Display for GroupChromosome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&bits_string(&self.bits))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyMode {
    /// Hard cap on group size enforced by a huge linear penalty.
    #[default]
    SizeCap,
    /// Soft l1 penalty on group size.
    L1,
}

impl fmt::Display for PenaltyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PenaltyMode::SizeCap => "size-cap",
            PenaltyMode::L1 => "l1",
        })
    }
}

/// Penalty and genetic-algorithm settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub mode: PenaltyMode,
    pub k_opt: usize,
    pub alpha: f64,
    pub mu: f64,
    pub population_size: usize,
    pub crossover_prob: f64,
    pub mutation_prob: f64,
    pub max_generations: usize,
    pub stagnation_limit: usize,
    pub elite_fraction: f64,
    /// Stop as soon as the best fitness reaches this value.
    pub target_fitness: Option<f64>,
    pub seed: u64,
}

/// `sqrt(f64::MAX)`: large enough to dominate any correlation, small enough
/// that a few multiples of it stay finite.
pub fn default_alpha() -> f64 {
    f64::MAX.sqrt()
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            mode: PenaltyMode::SizeCap,
            k_opt: 10,
            alpha: default_alpha(),
            mu: 1.0 / 30.0,
            population_size: 200,
            crossover_prob: 0.8,
            mutation_prob: 0.1,
            max_generations: 500,
            stagnation_limit: 50,
            elite_fraction: 0.05,
            target_fitness: None,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn size_cap(k_opt: usize) -> Self {
        OptimizerConfig {
            mode: PenaltyMode::SizeCap,
            k_opt,
            ..Default::default()
        }
    }

    pub fn l1(mu: f64) -> Self {
        OptimizerConfig {
            mode: PenaltyMode::L1,
            mu,
            ..Default::default()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        OptimizerConfig {
            seed,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |v: f64| (0.0..=1.0).contains(&v);
        let problem = if self.population_size < 2 {
            Some("population_size must be at least 2")
        } else if !prob(self.crossover_prob) || !prob(self.mutation_prob) {
            Some("crossover and mutation probabilities must lie in [0, 1]")
        } else if !(0.0..1.0).contains(&self.elite_fraction) {
            Some("elite_fraction must lie in [0, 1)")
        } else if self.max_generations == 0 || self.stagnation_limit == 0 {
            Some("max_generations and stagnation_limit must be positive")
        } else if !(self.alpha.is_finite() && self.alpha > 0.0) {
            Some("alpha must be positive and finite")
        } else if self.mode == PenaltyMode::SizeCap && self.k_opt == 0 {
            Some("k_opt must be positive in size-cap mode")
        } else if self.mode == PenaltyMode::L1 && !(self.mu.is_finite() && self.mu >= 0.0) {
            Some("mu must be finite and non-negative")
        } else {
            None
        };
        match problem {
            Some(msg) => Err(Error::validation(msg)),
            None => Ok(()),
        }
    }

    fn penalty(&self, size: usize) -> f64 {
        match self.mode {
            PenaltyMode::SizeCap => self.alpha * size.saturating_sub(self.k_opt) as f64,
            PenaltyMode::L1 => self.mu * size as f64,
        }
    }

    pub fn is_feasible(&self, x: &GroupChromosome) -> bool {
        self.mode != PenaltyMode::SizeCap || x.size() <= self.k_opt
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitnessEvaluation {
    /// Correlation surrogate, not divided by `|y0|`. Zero for degenerate groups.
    pub raw_objective: f64,
    pub pearson_r: f64,
    pub penalized_fitness: f64,
    pub group_size: usize,
    pub degenerate: bool,
}

fn finish(raw: Option<f64>, y0_norm: f64, size: usize, cfg: &OptimizerConfig) -> FitnessEvaluation {
    let penalty = cfg.penalty(size);
    match raw {
        Some(raw) => FitnessEvaluation {
            raw_objective: raw,
            pearson_r: raw / y0_norm,
            penalized_fitness: raw - penalty,
            group_size: size,
            degenerate: false,
        },
        None => FitnessEvaluation {
            raw_objective: 0.0,
            pearson_r: 0.0,
            penalized_fitness: -cfg.alpha - penalty,
            group_size: size,
            degenerate: true,
        },
    }
}

/// Direct evaluation from the centered matrix and response.
pub fn evaluate_fitness(
    x: &GroupChromosome,
    m0: &Array2<f64>,
    y0: &[f64],
    cfg: &OptimizerConfig,
) -> FitnessEvaluation {
    let s0 = x.effect(m0);
    let ss: f64 = s0.iter().map(|v| v * v).sum();
    let y0_norm = y0.iter().map(|v| v * v).sum::<f64>().sqrt();
    let raw = (x.size() > 0 && ss > DEGENERATE_VARIANCE).then(|| {
        let num: f64 = s0.iter().zip(y0).map(|(a, b)| a * b).sum();
        num / ss.sqrt()
    });
    finish(raw, y0_norm, x.size(), cfg)
}

/// Precomputed `M0'y0` and `M0'M0`, so a group evaluates in O(|x|^2).
#[derive(Debug, Clone)]
pub struct FitnessModel {
    projection: Array1<f64>,
    gram: Array2<f64>,
    y0_norm: f64,
}

impl FitnessModel {
    /// `m0` and `y0` must already be mean-centered.
    pub fn new(m0: &Array2<f64>, y0: &[f64]) -> Result<Self> {
        if m0.nrows() != y0.len() {
            return Err(Error::validation(format!(
                "matrix has {} samples, response has {}",
                m0.nrows(),
                y0.len()
            )));
        }
        let y0 = Array1::from(y0.to_vec());
        let y0_norm = y0.dot(&y0).sqrt();
        if !(y0_norm > 0.0) {
            return Err(Error::validation("response has zero variance"));
        }
        Ok(FitnessModel {
            projection: m0.t().dot(&y0),
            gram: m0.t().dot(m0),
            y0_norm,
        })
    }

    /// Centers `m` by column and `y` by its mean before building the model.
    pub fn from_uncentered(m: &Array2<f64>, y: &[f64]) -> Result<Self> {
        Self::new(&crate::network::center_columns(m), &crate::stats::centered(y))
    }

    pub fn n_taxa(&self) -> usize {
        self.projection.len()
    }

    pub fn y0_norm(&self) -> f64 {
        self.y0_norm
    }

    pub fn evaluate(&self, x: &GroupChromosome, cfg: &OptimizerConfig) -> FitnessEvaluation {
        let idx = x.indices();
        let mut num = 0.0;
        let mut ss = 0.0;
        for &i in &idx {
            num += self.projection[i];
            let row = self.gram.row(i);
            for &j in &idx {
                ss += row[j];
            }
        }
        let raw = (!idx.is_empty() && ss > DEGENERATE_VARIANCE).then(|| num / ss.sqrt());
        finish(raw, self.y0_norm, idx.len(), cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationStats {
    pub generation: usize,
    pub max_fitness: f64,
    pub mean_fitness: f64,
    pub max_r: f64,
    pub mean_r: f64,
    pub mean_size: f64,
    /// Top-ranked individual of this generation.
    pub leader: GroupChromosome,
}

#[derive(Debug, Clone)]
pub struct GaResult {
    pub best: GroupChromosome,
    pub best_eval: FitnessEvaluation,
    pub history: Vec<GenerationStats>,
}

fn initial_population(p: usize, cfg: &OptimizerConfig) -> Vec<GroupChromosome> {
    let mut rng = seed::rng(seed::derive(cfg.seed, &[seed::STREAM_GA_INIT]));
    (0..cfg.population_size)
        .map(|_| match cfg.mode {
            PenaltyMode::SizeCap => {
                let idx = index::sample(&mut rng, p, cfg.k_opt.min(p)).into_vec();
                GroupChromosome::from_indices(p, &idx)
            }
            PenaltyMode::L1 => {
                let density = (25.0 / p as f64).min(0.5);
                GroupChromosome::new((0..p).map(|_| rng.random_bool(density)).collect())
            }
        })
        .collect()
}

/// Indices sorted best first; equal fitness keeps population order.
fn ranking(evals: &[FitnessEvaluation]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..evals.len()).collect();
    order.sort_by(|&a, &b| {
        evals[b]
            .penalized_fitness
            .total_cmp(&evals[a].penalized_fitness)
    });
    order
}

fn next_generation(
    pop: &[GroupChromosome],
    order: &[usize],
    cfg: &OptimizerConfig,
    rng: &mut impl Rng,
) -> Vec<GroupChromosome> {
    let n = pop.len();
    let p = pop[0].len();
    let n_elite = ((cfg.elite_fraction * n as f64).ceil() as usize).min(n);
    let mut next: Vec<GroupChromosome> = order[..n_elite].iter().map(|&i| pop[i].clone()).collect();

    // Linear ranking: weight n-1 for the best down to 0 for the worst.
    let weights: Vec<usize> = (0..n).map(|r| n - 1 - r).collect();
    let picker = WeightedIndex::new(&weights).expect("population of at least two");
    while next.len() < n {
        let mut a = pop[order[picker.sample(rng)]].clone();
        let mut b = pop[order[picker.sample(rng)]].clone();
        if rng.random_bool(cfg.crossover_prob) {
            let cut = rng.random_range(1..p);
            for i in cut..p {
                std::mem::swap(&mut a.bits[i], &mut b.bits[i]);
            }
        }
        for child in [a, b] {
            if next.len() == n {
                break;
            }
            let mut child = child;
            if rng.random_bool(cfg.mutation_prob) {
                child.flip(rng.random_range(0..p));
            }
            next.push(child);
        }
    }
    next
}

/// Whether `(fa, a)` beats `(fb, b)`: higher fitness, then the smaller bit vector.
fn beats(fa: f64, a: &GroupChromosome, fb: f64, b: &GroupChromosome) -> bool {
    fa > fb || (fa == fb && a < b)
}

pub fn run_ga(m0: &Array2<f64>, y0: &[f64], cfg: &OptimizerConfig) -> Result<GaResult> {
    run_ga_with_model(&FitnessModel::new(m0, y0)?, cfg)
}

/// Run the genetic algorithm. Deterministic for a given seed regardless of
/// thread count: only fitness evaluation is parallel, and the evolutionary
/// step consumes results in index order.
pub fn run_ga_with_model(model: &FitnessModel, cfg: &OptimizerConfig) -> Result<GaResult> {
    cfg.validate()?;
    let p = model.n_taxa();
    if p < 2 {
        return Err(Error::validation(format!(
            "at least two taxa are needed for the search, got {p}"
        )));
    }

    let mut pop = initial_population(p, cfg);
    let mut history = Vec::new();
    let mut archive: Option<(GroupChromosome, FitnessEvaluation)> = None;
    let mut stale = 0usize;

    for generation in 0..cfg.max_generations {
        let evals = par::map_slice(&pop, |x| model.evaluate(x, cfg));
        let order = ranking(&evals);

        let count = evals.len() as f64;
        history.push(GenerationStats {
            generation,
            max_fitness: evals[order[0]].penalized_fitness,
            mean_fitness: evals.iter().map(|e| e.penalized_fitness).sum::<f64>() / count,
            max_r: evals.iter().map(|e| e.pearson_r).fold(f64::NEG_INFINITY, f64::max),
            mean_r: evals.iter().map(|e| e.pearson_r).sum::<f64>() / count,
            mean_size: evals.iter().map(|e| e.group_size as f64).sum::<f64>() / count,
            leader: pop[order[0]].clone(),
        });

        let previous = archive.as_ref().map(|(_, e)| e.penalized_fitness);
        for (x, e) in pop.iter().zip(&evals) {
            if !cfg.is_feasible(x) {
                continue;
            }
            let better = match &archive {
                None => true,
                Some((bx, be)) => beats(e.penalized_fitness, x, be.penalized_fitness, bx),
            };
            if better {
                archive = Some((x.clone(), *e));
            }
        }
        let current = archive.as_ref().map(|(_, e)| e.penalized_fitness);
        match (previous, current) {
            (Some(a), Some(b)) if b <= a => stale += 1,
            _ => stale = 0,
        }

        let reached = matches!((cfg.target_fitness, current), (Some(t), Some(c)) if c >= t);
        if reached || stale >= cfg.stagnation_limit || generation + 1 == cfg.max_generations {
            break;
        }
        let mut rng = seed::rng(seed::derive(
            cfg.seed,
            &[seed::STREAM_GA_GENERATION, generation as u64],
        ));
        pop = next_generation(&pop, &order, cfg, &mut rng);
    }

    let (best, best_eval) = archive.ok_or_else(|| {
        Error::numeric("no feasible group was produced by the search")
    })?;
    Ok(GaResult {
        best,
        best_eval,
        history,
    })
}
