//! A dataset bundle: a directory holding the abundance table and the
//! functional variable in the layout written by `ingest` and `synth`.

use std::path::Path;

use crate::error::Result;
use crate::ingest::{load_abundance, load_functional, AbundanceMatrix, FunctionalVariable, Orientation};

pub const ABUNDANCE_FILE: &str = "abundance.tsv";
pub const FUNCTION_FILE: &str = "function.tsv";

#[derive(Debug, Clone)]
pub struct Dataset {
    pub abundance: AbundanceMatrix,
    pub function: FunctionalVariable,
}

impl Dataset {
    pub fn load(dir: &Path) -> Result<Self> {
        let abundance = load_abundance(&dir.join(ABUNDANCE_FILE), Orientation::SamplesAsRows)?;
        let function = load_functional(&dir.join(FUNCTION_FILE), abundance.sample_ids())?;
        Ok(Dataset { abundance, function })
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        self.abundance.write(&dir.join(ABUNDANCE_FILE))?;
        self.function
            .write(&dir.join(FUNCTION_FILE), self.abundance.sample_ids())
    }
}
