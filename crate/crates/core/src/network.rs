//! Co-occurrence networks and the normalized graph convolution.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::AbundanceMatrix;
use crate::par;
use crate::table::{self, TableWriter};

const SYMMETRY_TOL: f64 = 1e-12;

/// Undirected weighted network over taxa. Symmetric, non-negative, no self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct CoOccurrenceNetwork {
    adjacency: Array2<f64>,
    taxon_labels: Vec<String>,
}

impl CoOccurrenceNetwork {
    pub fn new(adjacency: Array2<f64>, taxon_labels: Vec<String>) -> Result<Self> {
        let (r, c) = adjacency.dim();
        if r != c || r != taxon_labels.len() {
            return Err(Error::validation(format!(
                "adjacency is {r}x{c} but {} taxon labels were given",
                taxon_labels.len()
            )));
        }
        for ((i, j), &w) in adjacency.indexed_iter() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::validation(format!(
                    "edge weight {w} between {} and {} must be finite and non-negative",
                    taxon_labels[i], taxon_labels[j]
                )));
            }
            if i == j && w != 0.0 {
                return Err(Error::validation(format!(
                    "self-loop on {} (weight {w})",
                    taxon_labels[i]
                )));
            }
            if j > i && (w - adjacency[[j, i]]).abs() > SYMMETRY_TOL {
                return Err(Error::validation(format!(
                    "adjacency is not symmetric at ({}, {})",
                    taxon_labels[i], taxon_labels[j]
                )));
            }
        }
        Ok(CoOccurrenceNetwork {
            adjacency,
            taxon_labels,
        })
    }

    /// Network without edges. Convolution over it is the identity.
    pub fn empty(taxon_labels: Vec<String>) -> Self {
        let p = taxon_labels.len();
        CoOccurrenceNetwork {
            adjacency: Array2::zeros((p, p)),
            taxon_labels,
        }
    }

    pub fn adjacency(&self) -> &Array2<f64> {
        &self.adjacency
    }

    pub fn taxon_labels(&self) -> &[String] {
        &self.taxon_labels
    }

    pub fn n_nodes(&self) -> usize {
        self.taxon_labels.len()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adjacency[[i, j]]
    }

    /// Write as a labeled square matrix.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut header = vec!["taxon".to_string()];
        header.extend(self.taxon_labels.iter().cloned());
        let mut w = TableWriter::new(&header);
        for (label, row) in self.taxon_labels.iter().zip(self.adjacency.rows()) {
            w.labeled_row(label, row.iter().copied());
        }
        w.write(path)
    }

    /// Write the upper triangle as a (source, target, weight) edge list, keeping
    /// only weights strictly above `min_weight`.
    pub fn write_edge_list(&self, path: &Path, min_weight: f64) -> Result<()> {
        let mut w = TableWriter::new(&["source", "target", "weight"]);
        let p = self.n_nodes();
        for i in 0..p {
            for j in i + 1..p {
                let v = self.adjacency[[i, j]];
                if v > min_weight {
                    w.row(&[
                        self.taxon_labels[i].clone(),
                        self.taxon_labels[j].clone(),
                        table::fmt_num(v),
                    ]);
                }
            }
        }
        w.write(path)
    }
}

/// A network read from disk plus any repairs that were applied to it.
#[derive(Debug, Clone)]
pub struct LoadedNetwork {
    pub network: CoOccurrenceNetwork,
    pub warnings: Vec<String>,
}

fn label_mismatch(file_only: Vec<&str>, missing: Vec<&str>) -> Error {
    let mut parts = Vec::new();
    if !file_only.is_empty() {
        parts.push(format!("in file but not in dataset: {}", file_only.join(", ")));
    }
    if !missing.is_empty() {
        parts.push(format!("in dataset but not in file: {}", missing.join(", ")));
    }
    Error::validation(format!("adjacency labels mismatch; {}", parts.join("; ")))
}

/// Load an adjacency matrix or a (source, target, weight) edge list and align it
/// to `labels`. Asymmetric matrices are averaged with their transpose and
/// diagonals are zeroed; both repairs are reported as warnings.
pub fn load_adjacency(path: &Path, labels: &[String]) -> Result<LoadedNetwork> {
    let raw = table::read_table(path)?;
    let index: HashMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let p = labels.len();
    let mut a = Array2::<f64>::zeros((p, p));
    let mut warnings = Vec::new();

    let is_edge_list = raw.header.len() == 3
        && raw.column("source") == Some(0)
        && raw.column("target") == Some(1)
        && raw.column("weight") == Some(2);

    if is_edge_list {
        let mut unknown: Vec<&str> = Vec::new();
        let mut seen: HashMap<(usize, usize), f64> = HashMap::new();
        for (line, cells) in &raw.rows {
            let w = raw.number(*line, 2, &cells[2])?;
            if w < 0.0 {
                return Err(Error::validation(format!(
                    "negative weight {w} on line {line} of {}",
                    path.display()
                )));
            }
            let (Some(&i), Some(&j)) = (index.get(cells[0].as_str()), index.get(cells[1].as_str()))
            else {
                for c in &cells[..2] {
                    if !index.contains_key(c.as_str()) && !unknown.contains(&c.as_str()) {
                        unknown.push(c.as_str());
                    }
                }
                continue;
            };
            if i == j {
                warnings.push(format!("self-loop on {} ignored", labels[i]));
                continue;
            }
            if seen.insert((i, j), w).is_some() {
                return Err(raw.parse_err(
                    *line,
                    format!("duplicate edge {} -> {}", cells[0], cells[1]),
                ));
            }
        }
        if !unknown.is_empty() {
            return Err(label_mismatch(unknown, Vec::new()));
        }
        let mut asym = false;
        for (&(i, j), &w) in &seen {
            let v = match seen.get(&(j, i)) {
                Some(&back) => {
                    asym |= back != w;
                    (w + back) / 2.0
                }
                None => w,
            };
            a[[i, j]] = v;
            a[[j, i]] = v;
        }
        if asym {
            warnings.push("edge list lists both directions with different weights; averaged".into());
        }
    } else {
        let col_labels = &raw.header[1..];
        let row_labels: Vec<&str> = raw.rows.iter().map(|(_, c)| c[0].as_str()).collect();
        if col_labels.len() != row_labels.len()
            || col_labels.iter().map(String::as_str).collect::<HashSet<_>>()
                != row_labels.iter().copied().collect::<HashSet<_>>()
        {
            return Err(raw.parse_err(1, "adjacency matrix must be square with identical row and column labels"));
        }
        let file_only: Vec<&str> = row_labels
            .iter()
            .copied()
            .filter(|l| !index.contains_key(l))
            .collect();
        let in_file: HashSet<&str> = row_labels.iter().copied().collect();
        let missing: Vec<&str> = labels
            .iter()
            .map(String::as_str)
            .filter(|l| !in_file.contains(l))
            .collect();
        if !file_only.is_empty() || !missing.is_empty() {
            return Err(label_mismatch(file_only, missing));
        }
        let col_pos: Vec<usize> = col_labels.iter().map(|l| index[l.as_str()]).collect();
        for (line, cells) in &raw.rows {
            let i = index[cells[0].as_str()];
            for (k, cell) in cells.iter().enumerate().skip(1) {
                let w = raw.number(*line, k, cell)?;
                if w < 0.0 {
                    return Err(Error::validation(format!(
                        "negative weight {w} at ({}, {})",
                        cells[0],
                        col_labels[k - 1]
                    )));
                }
                a[[i, col_pos[k - 1]]] = w;
            }
        }
        if a.diag().iter().any(|&d| d != 0.0) {
            warnings.push("diagonal entries set to zero (self-loops removed)".into());
            a.diag_mut().fill(0.0);
        }
        if (0..p).any(|i| (0..i).any(|j| a[[i, j]] != a[[j, i]])) {
            warnings.push("asymmetric adjacency symmetrized as (A + A^T) / 2".into());
            a = (&a + &a.t()) / 2.0;
        }
    }
    for w in &warnings {
        log::warn!("{}: {w}", path.display());
    }
    Ok(LoadedNetwork {
        network: CoOccurrenceNetwork::new(a, labels.to_vec())?,
        warnings,
    })
}

/// Penalties and stopping rule for the elastic-net network inference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkInferenceConfig {
    /// l1 penalty.
    pub mu1: f64,
    /// Squared-norm (ridge) penalty.
    pub mu2: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for NetworkInferenceConfig {
    fn default() -> Self {
        NetworkInferenceConfig {
            mu1: 0.1,
            mu2: 0.01,
            max_iterations: 1000,
            tolerance: 1e-6,
        }
    }
}

/// Column-standardized copy of `h` (zero mean, unit population variance).
/// Constant columns become all-zero. Returns the matrix and a mask of usable columns.
fn standardize(h: &Array2<f64>) -> (Array2<f64>, Vec<bool>) {
    let n = h.nrows() as f64;
    let mut x = h.clone();
    let mut usable = Vec::with_capacity(h.ncols());
    for mut col in x.columns_mut() {
        let m = col.sum() / n;
        col.mapv_inplace(|v| v - m);
        let sd = (col.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
        if sd > 0.0 {
            col.mapv_inplace(|v| v / sd);
            usable.push(true);
        } else {
            col.fill(0.0);
            usable.push(false);
        }
    }
    (x, usable)
}

/// Non-negative elastic-net coordinate descent of `target` on all other usable
/// columns, driven by the Gram matrix `g = X^T X / n`. Minimizes
/// `1/(2n) |y - X b|^2 + mu1 |b|_1 + mu2/2 |b|^2` subject to `b >= 0`.
/// Returns the coefficients and the last sweep's largest update.
fn nonneg_elastic_net(
    g: &Array2<f64>,
    usable: &[bool],
    target: usize,
    cfg: &NetworkInferenceConfig,
) -> (Array1<f64>, f64, bool) {
    let p = g.nrows();
    let mut beta = Array1::<f64>::zeros(p);
    if !usable[target] {
        return (beta, 0.0, true);
    }
    // grad[k] = G[k, target] - sum_l G[k, l] beta[l]
    let mut corr = g.column(target).to_owned();
    let mut last_change = 0.0;
    for _ in 0..cfg.max_iterations {
        let mut max_change: f64 = 0.0;
        for k in 0..p {
            if k == target || !usable[k] {
                continue;
            }
            let old = beta[k];
            let rho = corr[k] + g[[k, k]] * old;
            let new = ((rho - cfg.mu1).max(0.0)) / (g[[k, k]] + cfg.mu2);
            let delta = new - old;
            if delta != 0.0 {
                beta[k] = new;
                corr.scaled_add(-delta, &g.column(k));
                max_change = max_change.max(delta.abs());
            }
        }
        last_change = max_change;
        if max_change < cfg.tolerance {
            return (beta, max_change, true);
        }
    }
    (beta, last_change, false)
}

/// Infer a co-occurrence network by regressing each taxon on all others.
pub fn infer_network(m: &AbundanceMatrix, cfg: &NetworkInferenceConfig) -> Result<CoOccurrenceNetwork> {
    let p = m.n_taxa();
    if p < 2 {
        return Err(Error::validation("network inference needs at least two taxa"));
    }
    if cfg.mu1 < 0.0 || cfg.mu2 < 0.0 || cfg.tolerance <= 0.0 || cfg.max_iterations == 0 {
        return Err(Error::validation(format!("invalid inference config {cfg:?}")));
    }
    let n = m.n_samples() as f64;
    let (x, usable) = standardize(m.values());
    let g = x.t().dot(&x) / n;
    let fits = par::map_range(p, |j| nonneg_elastic_net(&g, &usable, j, cfg));

    if let Some((j, (_, change, _))) = fits
        .iter()
        .enumerate()
        .filter(|(_, f)| !f.2)
        .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
    {
        return Err(Error::numeric(format!(
            "network inference did not converge in {} iterations; worst column {} last changed by {change:e}",
            cfg.max_iterations,
            m.taxon_labels()[j]
        )));
    }

    let mut b = Array2::<f64>::zeros((p, p));
    for (j, (beta, _, _)) in fits.into_iter().enumerate() {
        b.row_mut(j).assign(&beta);
    }
    b.diag_mut().fill(0.0);
    let a = (&b + &b.t()) / 2.0;
    CoOccurrenceNetwork::new(a, m.taxon_labels().to_vec())
}

/// The fixed propagation matrix `D^-1/2 (A + I) D^-1/2`, with `D` the weighted
/// degree of `A + I`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionOperator {
    matrix: Array2<f64>,
}

impl ConvolutionOperator {
    pub fn from_network(net: &CoOccurrenceNetwork) -> Self {
        let p = net.n_nodes();
        let mut a_tilde = net.adjacency().clone();
        for i in 0..p {
            a_tilde[[i, i]] += 1.0;
        }
        let inv_sqrt_deg: Vec<f64> = a_tilde
            .sum_axis(Axis(1))
            .iter()
            .map(|d| 1.0 / d.sqrt())
            .collect();
        let matrix = Array2::from_shape_fn((p, p), |(i, j)| {
            inv_sqrt_deg[i] * a_tilde[[i, j]] * inv_sqrt_deg[j]
        });
        ConvolutionOperator { matrix }
    }

    /// Operator of the empty network. Built through the same arithmetic as
    /// [`ConvolutionOperator::from_network`], so it is exactly the identity.
    pub fn identity(p: usize) -> Self {
        Self::from_network(&CoOccurrenceNetwork::empty(vec![String::new(); p]))
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `H * op`. Rows are independent, so applying to a row block equals taking
    /// the same rows of the full product.
    pub fn apply(&self, h: &Array2<f64>) -> Result<Array2<f64>> {
        if h.ncols() != self.dim() {
            return Err(Error::validation(format!(
                "abundance has {} taxa but the network has {} nodes",
                h.ncols(),
                self.dim()
            )));
        }
        Ok(h.dot(&self.matrix))
    }
}

/// Convolved abundances and their column-centered form.
#[derive(Debug, Clone, PartialEq)]
pub struct TopologicalAbundance {
    pub values: Array2<f64>,
    pub centered: Array2<f64>,
}

impl TopologicalAbundance {
    pub fn from_values(values: Array2<f64>) -> Self {
        let centered = center_columns(&values);
        TopologicalAbundance { values, centered }
    }

    pub fn select_samples(&self, idx: &[usize]) -> TopologicalAbundance {
        TopologicalAbundance::from_values(self.values.select(Axis(0), idx))
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_taxa(&self) -> usize {
        self.values.ncols()
    }
}

pub fn center_columns(values: &Array2<f64>) -> Array2<f64> {
    let n = values.nrows() as f64;
    let mut c = values.clone();
    for mut col in c.columns_mut() {
        let m = col.sum() / n;
        col.mapv_inplace(|v| v - m);
    }
    c
}

/// Graph convolution of the abundance matrix over the network.
pub fn convolve(m: &AbundanceMatrix, net: &CoOccurrenceNetwork) -> Result<TopologicalAbundance> {
    if net.n_nodes() != m.n_taxa() {
        return Err(Error::validation(format!(
            "abundance has {} taxa but the network has {} nodes",
            m.n_taxa(),
            net.n_nodes()
        )));
    }
    if net.taxon_labels() != m.taxon_labels() {
        return Err(Error::validation(
            "network taxon labels differ from the abundance matrix (order matters)",
        ));
    }
    let op = ConvolutionOperator::from_network(net);
    Ok(TopologicalAbundance::from_values(op.apply(m.values())?))
}
