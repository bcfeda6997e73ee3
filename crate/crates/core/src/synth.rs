//! Synthetic communities with a block-structured co-occurrence network and a
//! planted functional group.
//!
//! Random streams: ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded through
//! [`crate::seed::derive`]; log-normal abundances and Gaussian noise come from
//! `rand_distr`.

use std::path::Path;

use ndarray::Array2;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{css_normalize, AbundanceMatrix, FunctionalVariable};
use crate::network::{convolve, CoOccurrenceNetwork};
use crate::seed;
use crate::stats;
use crate::table::{fmt_num, TableWriter};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub n_samples: usize,
    pub n_taxa: usize,
    pub n_blocks: usize,
    pub intra_block_weight: f64,
    pub inter_block_weight: f64,
    pub planted_group: Vec<usize>,
    /// Noise standard deviation as a fraction of the signal's standard deviation.
    pub noise_sigma: f64,
    /// Standard deviation of log-abundance.
    pub log_sd: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_samples: 100,
            n_taxa: 60,
            n_blocks: 4,
            intra_block_weight: 0.1,
            inter_block_weight: 0.0,
            planted_group: vec![2, 9, 17, 31, 44, 52],
            noise_sigma: 0.05,
            log_sd: 1.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    /// Block index of each taxon; blocks are contiguous and as equal as possible.
    pub fn block_of(&self, taxon: usize) -> usize {
        taxon * self.n_blocks / self.n_taxa
    }

    /// Correlation of the planted group with a response carrying noise at
    /// `noise_sigma` times the signal spread: `1 / sqrt(1 + sigma^2)`.
    pub fn expected_r(&self) -> f64 {
        1.0 / (1.0 + self.noise_sigma * self.noise_sigma).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let problem = if self.n_samples < 3 || self.n_taxa < 2 {
            Some("need at least 3 samples and 2 taxa".to_string())
        } else if self.n_blocks == 0 || self.n_blocks > self.n_taxa {
            Some(format!("n_blocks must lie in 1..={}", self.n_taxa))
        } else if !(self.inter_block_weight >= 0.0 && self.intra_block_weight >= self.inter_block_weight)
        {
            Some("block weights must satisfy intra >= inter >= 0".to_string())
        } else if self.planted_group.is_empty() {
            Some("planted group is empty".to_string())
        } else if let Some(i) = self.planted_group.iter().find(|&&i| i >= self.n_taxa) {
            Some(format!("planted taxon index {i} out of range"))
        } else if !(self.noise_sigma >= 0.0 && self.log_sd > 0.0) {
            Some("noise_sigma must be >= 0 and log_sd > 0".to_string())
        } else {
            None
        };
        match problem {
            Some(msg) => Err(Error::validation(msg)),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthBundle {
    pub abundance: AbundanceMatrix,
    pub network: CoOccurrenceNetwork,
    pub function: FunctionalVariable,
    pub ground_truth: Vec<usize>,
    pub expected_r: f64,
}

pub fn generate(spec: &SynthSpec) -> Result<SynthBundle> {
    spec.validate()?;
    let (n, p) = (spec.n_samples, spec.n_taxa);
    let taxa: Vec<String> = (0..p).map(|j| format!("taxon_{:03}", j + 1)).collect();
    let samples: Vec<String> = (0..n).map(|i| format!("sample_{:03}", i + 1)).collect();

    let adjacency = Array2::from_shape_fn((p, p), |(i, j)| {
        if i == j {
            0.0
        } else if spec.block_of(i) == spec.block_of(j) {
            spec.intra_block_weight
        } else {
            spec.inter_block_weight
        }
    });
    let network = CoOccurrenceNetwork::new(adjacency, taxa.clone())?;

    let mut rng = seed::rng(seed::derive(spec.seed, &[seed::STREAM_SYNTH_ABUNDANCE]));
    let lognormal = LogNormal::new(0.0, spec.log_sd).map_err(|e| Error::validation(e.to_string()))?;
    let raw = Array2::from_shape_fn((n, p), |_| lognormal.sample(&mut rng));
    let abundance = css_normalize(&AbundanceMatrix::new(raw, samples, taxa)?, 0.5)?;

    let mut ground_truth = spec.planted_group.clone();
    ground_truth.sort_unstable();
    ground_truth.dedup();
    let topo = convolve(&abundance, &network)?;
    let signal: Vec<f64> = topo
        .values
        .rows()
        .into_iter()
        .map(|row| ground_truth.iter().map(|&j| row[j]).sum())
        .collect();
    let sd = stats::variance(&signal).sqrt() * spec.noise_sigma;
    let mut noise_rng = seed::rng(seed::derive(spec.seed, &[seed::STREAM_SYNTH_NOISE]));
    let values = if sd > 0.0 {
        let normal = Normal::new(0.0, sd).map_err(|e| Error::numeric(e.to_string()))?;
        signal.iter().map(|s| s + normal.sample(&mut noise_rng)).collect()
    } else {
        signal
    };
    let function = FunctionalVariable::new(values, "function")?;
    Ok(SynthBundle {
        abundance,
        network,
        function,
        ground_truth,
        expected_r: spec.expected_r(),
    })
}

impl SynthBundle {
    /// Write `abundance.tsv`, `function.tsv`, `adjacency.tsv` and `ground_truth.tsv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        self.abundance.write(&dir.join(crate::dataset::ABUNDANCE_FILE))?;
        self.function
            .write(&dir.join(crate::dataset::FUNCTION_FILE), self.abundance.sample_ids())?;
        self.network.write(&dir.join("adjacency.tsv"))?;
        let mut w = TableWriter::new(&["taxon", "index", "expected_r"]);
        for &j in &self.ground_truth {
            w.row(&[
                self.abundance.taxon_labels()[j].clone(),
                j.to_string(),
                fmt_num(self.expected_r),
            ]);
        }
        w.write(&dir.join("ground_truth.tsv"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ga::{FitnessModel, GroupChromosome, OptimizerConfig};

    fn planted_r(b: &SynthBundle) -> f64 {
        let topo = convolve(&b.abundance, &b.network).unwrap();
        let model = FitnessModel::from_uncentered(&topo.values, b.function.values()).unwrap();
        let x = GroupChromosome::from_indices(b.abundance.n_taxa(), &b.ground_truth);
        model.evaluate(&x, &OptimizerConfig::default()).pearson_r
    }

    #[test]
    fn noiseless_group_is_perfect() {
        let spec = SynthSpec {
            noise_sigma: 0.0,
            ..Default::default()
        };
        let b = generate(&spec).unwrap();
        assert!((planted_r(&b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_group_matches_analytic_r() {
        let spec = SynthSpec::default();
        for s in 0..5 {
            let b = generate(&SynthSpec { seed: s, ..spec.clone() }).unwrap();
            let r = planted_r(&b);
            assert!(r >= 0.99, "seed {s}: r = {r}");
            assert!((r - spec.expected_r()).abs() < 0.005, "seed {s}: r = {r}");
        }
    }

    #[test]
    fn zero_inter_weight_gives_block_diagonal() {
        let b = generate(&SynthSpec::default()).unwrap();
        let spec = SynthSpec::default();
        for ((i, j), &w) in b.network.adjacency().indexed_iter() {
            if spec.block_of(i) != spec.block_of(j) {
                assert_eq!(w, 0.0);
            } else if i != j {
                assert_eq!(w, spec.intra_block_weight);
            }
        }
    }

    #[test]
    fn deterministic_and_validated() {
        let spec = SynthSpec::default();
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.abundance, b.abundance);
        assert_eq!(a.function, b.function);
        let empty = SynthSpec {
            planted_group: vec![],
            ..Default::default()
        };
        assert!(matches!(generate(&empty), Err(Error::Validation(_))));
    }
}
