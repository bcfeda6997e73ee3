//! Abundance tables and the functional variable: loading, validation, sparsity
//! filtering and cumulative-sum scaling.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{self, TableWriter};

/// Layout of an abundance file on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    #[default]
    SamplesAsRows,
    TaxaAsRows,
}

/// Samples x taxa table of non-negative abundances.
#[derive(Debug, Clone, PartialEq)]
pub struct AbundanceMatrix {
    values: Array2<f64>,
    sample_ids: Vec<String>,
    taxon_labels: Vec<String>,
}

fn check_unique(labels: &[String], what: &str) -> Result<()> {
    let mut seen = HashSet::new();
    let dups: Vec<&str> = labels
        .iter()
        .filter(|l| !seen.insert(l.as_str()))
        .map(String::as_str)
        .collect();
    if dups.is_empty() {
        Ok(())
    } else {
        Err(Error::validation(format!(
            "duplicate {what}: {}",
            dups.join(", ")
        )))
    }
}

impl AbundanceMatrix {
    pub fn new(
        values: Array2<f64>,
        sample_ids: Vec<String>,
        taxon_labels: Vec<String>,
    ) -> Result<Self> {
        let (n, p) = values.dim();
        if sample_ids.len() != n || taxon_labels.len() != p {
            return Err(Error::validation(format!(
                "label counts ({} samples, {} taxa) do not match a {n}x{p} matrix",
                sample_ids.len(),
                taxon_labels.len()
            )));
        }
        check_unique(&sample_ids, "sample ids")?;
        check_unique(&taxon_labels, "taxon labels")?;
        if let Some(((i, j), v)) = values
            .indexed_iter()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::validation(format!(
                "abundance at sample {} taxon {} is {v}; entries must be finite and non-negative",
                sample_ids[i], taxon_labels[j]
            )));
        }
        Ok(AbundanceMatrix {
            values,
            sample_ids,
            taxon_labels,
        })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn taxon_labels(&self) -> &[String] {
        &self.taxon_labels
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_taxa(&self) -> usize {
        self.values.ncols()
    }

    /// Mean of each taxon column after scaling every sample to relative abundance.
    pub fn mean_relative_abundance(&self) -> Vec<f64> {
        let n = self.n_samples() as f64;
        let mut out = vec![0.0; self.n_taxa()];
        for row in self.values.rows() {
            let total: f64 = row.sum();
            if total > 0.0 {
                for (o, v) in out.iter_mut().zip(row) {
                    *o += v / total / n;
                }
            }
        }
        out
    }

    /// Rows restricted to the given sample indices, in that order.
    pub fn select_samples(&self, idx: &[usize]) -> AbundanceMatrix {
        AbundanceMatrix {
            values: self.values.select(Axis(0), idx),
            sample_ids: idx.iter().map(|&i| self.sample_ids[i].clone()).collect(),
            taxon_labels: self.taxon_labels.clone(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut header = vec!["sample_id".to_string()];
        header.extend(self.taxon_labels.iter().cloned());
        let mut w = TableWriter::new(&header);
        for (id, row) in self.sample_ids.iter().zip(self.values.rows()) {
            w.labeled_row(id, row.iter().copied());
        }
        w.write(path)
    }
}

/// Load a labeled abundance table. The result is always samples x taxa.
pub fn load_abundance(path: &Path, orientation: Orientation) -> Result<AbundanceMatrix> {
    let raw = table::read_table(path)?;
    if raw.header.len() < 2 {
        return Err(raw.parse_err(1, "header needs a label column and at least one data column"));
    }
    let col_labels: Vec<String> = raw.header[1..].to_vec();
    let mut row_labels = Vec::with_capacity(raw.rows.len());
    let mut data = Vec::with_capacity(raw.rows.len() * col_labels.len());
    for (line, cells) in &raw.rows {
        row_labels.push(cells[0].clone());
        for (j, cell) in cells.iter().enumerate().skip(1) {
            data.push(raw.number(*line, j, cell)?);
        }
    }
    if row_labels.is_empty() {
        return Err(raw.parse_err(1, "table has no data rows"));
    }
    let grid = Array2::from_shape_vec((row_labels.len(), col_labels.len()), data)
        .expect("row lengths checked by parser");
    match orientation {
        Orientation::SamplesAsRows => AbundanceMatrix::new(grid, row_labels, col_labels),
        Orientation::TaxaAsRows => {
            AbundanceMatrix::new(grid.reversed_axes().as_standard_layout().to_owned(), col_labels, row_labels)
        }
    }
}

/// Drop every taxon whose fraction of zero entries is strictly above `max_zero_fraction`.
pub fn filter_sparse_taxa(m: &AbundanceMatrix, max_zero_fraction: f64) -> Result<AbundanceMatrix> {
    if !(0.0..=1.0).contains(&max_zero_fraction) {
        return Err(Error::validation(format!(
            "max_zero_fraction must lie in [0, 1], got {max_zero_fraction}"
        )));
    }
    let n = m.n_samples() as f64;
    let keep: Vec<usize> = m
        .values
        .columns()
        .into_iter()
        .enumerate()
        .filter(|(_, col)| {
            let zeros = col.iter().filter(|v| **v == 0.0).count() as f64;
            zeros / n <= max_zero_fraction
        })
        .map(|(j, _)| j)
        .collect();
    if keep.is_empty() {
        return Err(Error::validation("no taxa remain after sparsity filtering"));
    }
    Ok(AbundanceMatrix {
        values: m.values.select(Axis(1), &keep),
        sample_ids: m.sample_ids.clone(),
        taxon_labels: keep.iter().map(|&j| m.taxon_labels[j].clone()).collect(),
    })
}

/// Linear-interpolation quantile of sorted data (the usual "type 7" rule).
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub const CSS_SCALE: f64 = 1000.0;

/// Cumulative-sum scaling with a fixed per-sample quantile.
///
/// For each sample, `q` is the `quantile` of its nonzero values and the
/// sample is divided by the sum of its values at or below `q`, then
/// multiplied by `scale`.
pub fn css_normalize_with_scale(
    m: &AbundanceMatrix,
    quantile: f64,
    scale: f64,
) -> Result<AbundanceMatrix> {
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(Error::validation(format!(
            "CSS quantile must lie in (0, 1), got {quantile}"
        )));
    }
    let mut values = m.values.clone();
    for (i, mut row) in values.rows_mut().into_iter().enumerate() {
        let mut nz: Vec<f64> = row.iter().copied().filter(|v| *v > 0.0).collect();
        if nz.is_empty() {
            return Err(Error::numeric(format!(
                "sample {} has no nonzero abundance; CSS scale factor is zero",
                m.sample_ids[i]
            )));
        }
        nz.sort_by(f64::total_cmp);
        let q = quantile_sorted(&nz, quantile);
        let s: f64 = nz.iter().filter(|v| **v <= q).sum();
        if s <= 0.0 {
            return Err(Error::numeric(format!(
                "sample {} has CSS scale factor 0",
                m.sample_ids[i]
            )));
        }
        row.mapv_inplace(|v| v / s * scale);
    }
    Ok(AbundanceMatrix {
        values,
        sample_ids: m.sample_ids.clone(),
        taxon_labels: m.taxon_labels.clone(),
    })
}

pub fn css_normalize(m: &AbundanceMatrix, quantile: f64) -> Result<AbundanceMatrix> {
    css_normalize_with_scale(m, quantile, CSS_SCALE)
}

/// Per-sample measurement of the soil function being explained.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalVariable {
    values: Vec<f64>,
    name: String,
}

impl FunctionalVariable {
    pub fn new(values: Vec<f64>, name: impl Into<String>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("functional variable has non-finite values"));
        }
        if values.len() < 2 || crate::stats::variance(&values) <= 0.0 {
            return Err(Error::validation(
                "functional variable needs at least two samples and nonzero variance",
            ));
        }
        Ok(FunctionalVariable {
            values,
            name: name.into(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn select(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().map(|&i| self.values[i]).collect()
    }

    pub fn write(&self, path: &Path, sample_ids: &[String]) -> Result<()> {
        let mut w = TableWriter::new(&["sample_id", self.name.as_str()]);
        for (id, v) in sample_ids.iter().zip(&self.values) {
            w.labeled_row(id, [*v]);
        }
        w.write(path)
    }
}

/// Load a two-column (sample_id, value) table and align it to `sample_ids`.
pub fn load_functional(path: &Path, sample_ids: &[String]) -> Result<FunctionalVariable> {
    let raw = table::read_table(path)?;
    if raw.header.len() != 2 {
        return Err(raw.parse_err(
            1,
            format!("expected 2 columns (sample_id, value), found {}", raw.header.len()),
        ));
    }
    let name = raw.header[1].clone();
    let mut by_id: HashMap<String, f64> = HashMap::new();
    for (line, cells) in &raw.rows {
        let v = raw.number(*line, 1, &cells[1])?;
        if by_id.insert(cells[0].clone(), v).is_some() {
            return Err(Error::validation(format!(
                "duplicate sample id {} in functional table",
                cells[0]
            )));
        }
    }
    let known: HashSet<&str> = sample_ids.iter().map(String::as_str).collect();
    let mut unmatched: Vec<&str> = sample_ids
        .iter()
        .filter(|id| !by_id.contains_key(id.as_str()))
        .map(String::as_str)
        .collect();
    let mut extra: Vec<&str> = by_id
        .keys()
        .filter(|id| !known.contains(id.as_str()))
        .map(String::as_str)
        .collect();
    extra.sort_unstable();
    unmatched.extend(extra);
    if !unmatched.is_empty() {
        return Err(Error::validation(format!(
            "sample ids not present in both tables: {}",
            unmatched.join(", ")
        )));
    }
    let values = sample_ids.iter().map(|id| by_id[id]).collect();
    FunctionalVariable::new(values, name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;
    use std::fs;

    fn labels(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix}{i}")).collect()
    }

    fn matrix(values: Array2<f64>) -> AbundanceMatrix {
        let (n, p) = values.dim();
        AbundanceMatrix::new(values, labels("s", n), labels("t", p)).unwrap()
    }

    #[test]
    fn loads_three_by_two() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        fs::write(&path, "sample,ta,tb\ns1,1,0\ns2,2,5\ns3,0,3\n").unwrap();
        let m = load_abundance(&path, Orientation::SamplesAsRows).unwrap();
        assert_eq!(m.values(), &array![[1.0, 0.0], [2.0, 5.0], [0.0, 3.0]]);
        assert_eq!(m.taxon_labels(), &["ta", "tb"]);
        assert_eq!(m.sample_ids(), &["s1", "s2", "s3"]);

        let tpath = dir.path().join("t.tsv");
        fs::write(&tpath, "taxon\ts1\ts2\ts3\nta\t1\t2\t0\ntb\t0\t5\t3\n").unwrap();
        let t = load_abundance(&tpath, Orientation::TaxaAsRows).unwrap();
        assert_eq!(t, m);
    }

    #[test]
    fn load_errors_are_categorized() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        fs::write(&path, "sample,ta,tb\ns1,1,x\n").unwrap();
        let err = load_abundance(&path, Orientation::SamplesAsRows).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(err.to_string().contains("column 3"));

        fs::write(&path, "sample,ta,tb\ns1,1,\n").unwrap();
        assert!(matches!(
            load_abundance(&path, Orientation::SamplesAsRows),
            Err(Error::Parse { .. })
        ));

        fs::write(&path, "sample,ta,ta\ns1,1,2\n").unwrap();
        assert!(matches!(
            load_abundance(&path, Orientation::SamplesAsRows),
            Err(Error::Validation(_))
        ));

        fs::write(&path, "sample,ta,tb\ns1,1,-2\n").unwrap();
        assert!(matches!(
            load_abundance(&path, Orientation::SamplesAsRows),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn sparse_filter_boundary_is_strict() {
        let mut v = Array2::<f64>::ones((100, 2));
        for i in 0..81 {
            v[[i, 0]] = 0.0;
        }
        for i in 0..80 {
            v[[i, 1]] = 0.0;
        }
        let f = filter_sparse_taxa(&matrix(v), 0.8).unwrap();
        assert_eq!(f.taxon_labels(), &["t1"]);
    }

    #[test]
    fn sparse_filter_drops_all_zero_column() {
        // Zero counts per column by hand: 0, 3, 10, 8, 2 -> only column 2 exceeds 8 of 10.
        let mut v = Array2::<f64>::from_elem((10, 5), 2.0);
        for (col, zeros) in [(1, 3), (2, 10), (3, 8), (4, 2)] {
            for i in 0..zeros {
                v[[i, col]] = 0.0;
            }
        }
        let f = filter_sparse_taxa(&matrix(v), 0.8).unwrap();
        assert_eq!(f.values().dim(), (10, 4));
        assert_eq!(f.taxon_labels(), &["t0", "t1", "t3", "t4"]);
    }

    #[test]
    fn sparse_filter_rejects_total_loss() {
        let v = Array2::<f64>::zeros((4, 3));
        let err = filter_sparse_taxa(&matrix(v), 0.8).unwrap_err();
        assert!(err.to_string().contains("no taxa remain"));
    }

    #[test]
    fn css_hand_example() {
        let m = matrix(array![[1.0, 1.0, 1.0, 1.0], [3.0, 3.0, 3.0, 3.0]]);
        let c = css_normalize(&m, 0.5).unwrap();
        for v in c.values() {
            assert_eq!(*v, 250.0);
        }
    }

    #[test]
    fn css_quantile_uses_nonzero_values() {
        // nonzero {1,2,3,10}: median 2.5, values <= 2.5 sum to 3
        let m = matrix(array![[0.0, 1.0, 2.0, 3.0, 10.0]]);
        let c = css_normalize(&m, 0.5).unwrap();
        let expect = [0.0, 1.0, 2.0, 3.0, 10.0].map(|v| v / 3.0 * 1000.0);
        for (a, b) in c.values().iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn css_zero_row_names_sample() {
        let m = matrix(array![[1.0, 2.0], [0.0, 0.0]]);
        let err = css_normalize(&m, 0.5).unwrap_err();
        assert!(err.to_string().contains("s1"), "{err}");
    }

    #[test]
    fn functional_join_reorders_and_reports_unmatched() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("y.csv");
        fs::write(&path, "sample,PMN\nb,2\na,1\nc,5\n").unwrap();
        let ids: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
        let y = load_functional(&path, &ids).unwrap();
        assert_eq!(y.values(), &[1.0, 2.0, 5.0]);
        assert_eq!(y.name(), "PMN");

        let ids: Vec<String> = ["a", "b", "d"].map(String::from).to_vec();
        let err = load_functional(&path, &ids).unwrap_err().to_string();
        assert!(err.contains('d') && err.contains('c'), "{err}");
    }

    #[test]
    fn functional_requires_variance() {
        assert!(FunctionalVariable::new(vec![1.0, 1.0, 1.0], "y").is_err());
    }

    fn small_matrix() -> impl Strategy<Value = Array2<f64>> {
        (1usize..8, 1usize..6).prop_flat_map(|(n, p)| {
            proptest::collection::vec(prop_oneof![Just(0.0), 0.0f64..100.0], n * p)
                .prop_map(move |v| Array2::from_shape_vec((n, p), v).unwrap())
        })
    }

    proptest! {
        #[test]
        fn sparse_filter_is_idempotent(v in small_matrix(), thr in 0.0f64..1.0) {
            let m = matrix(v);
            if let Ok(once) = filter_sparse_taxa(&m, thr) {
                let twice = filter_sparse_taxa(&once, thr).unwrap();
                prop_assert_eq!(once, twice);
            }
        }

        #[test]
        fn css_is_row_scale_invariant(
            row in proptest::collection::vec(0.1f64..50.0, 2..10),
            c in 0.01f64..100.0,
            q in 0.05f64..0.95,
        ) {
            let p = row.len();
            let a = matrix(Array2::from_shape_vec((1, p), row.clone()).unwrap());
            let b = matrix(Array2::from_shape_vec((1, p), row.iter().map(|v| v * c).collect()).unwrap());
            let na = css_normalize(&a, q).unwrap();
            let nb = css_normalize(&b, q).unwrap();
            for (x, y) in na.values().iter().zip(nb.values()) {
                prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
            }
        }

        #[test]
        fn write_then_load_is_bit_exact(
            cells in proptest::collection::vec(0u64..10_000_000, 6),
            scale in 0i32..6,
        ) {
            let vals: Vec<f64> = cells.iter().map(|c| format!("{c}e-{scale}").parse().unwrap()).collect();
            let m = matrix(Array2::from_shape_vec((3, 2), vals).unwrap());
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("m.tsv");
            m.write(&path).unwrap();
            let back = load_abundance(&path, Orientation::SamplesAsRows).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
