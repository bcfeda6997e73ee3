//! Clustering and centrality of the co-occurrence network, and where the
//! important taxa sit within it.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};
use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::graphml::{AttrValue, Graph};
use crate::importance::top_taxa;
use crate::network::CoOccurrenceNetwork;
use crate::table::{fmt_num, TableWriter};
use crate::{par, seed};

pub const DEFAULT_LOUVAIN_SEEDS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub assignment: Vec<usize>,
    pub modularity_q: f64,
    pub n_clusters: usize,
}

impl ClusterResult {
    pub fn write(&self, path: &Path, labels: &[String]) -> Result<()> {
        let mut w = TableWriter::new(&["taxon", "cluster"]);
        for (l, c) in labels.iter().zip(&self.assignment) {
            w.row(&[l.clone(), c.to_string()]);
        }
        w.write(path)
    }
}

/// Weighted modularity of a partition.
pub fn modularity(adj: &Array2<f64>, assignment: &[usize], resolution: f64) -> f64 {
    let p = adj.nrows();
    let k: Vec<f64> = adj.rows().into_iter().map(|r| r.sum()).collect();
    let two_m: f64 = k.iter().sum();
    if two_m == 0.0 {
        return 0.0;
    }
    let n_c = assignment.iter().copied().max().map_or(0, |m| m + 1);
    let mut inner = vec![0.0; n_c];
    let mut tot = vec![0.0; n_c];
    for i in 0..p {
        tot[assignment[i]] += k[i];
        for j in 0..p {
            if assignment[i] == assignment[j] {
                inner[assignment[i]] += adj[[i, j]];
            }
        }
    }
    inner
        .iter()
        .zip(&tot)
        .map(|(a, t)| a / two_m - resolution * (t / two_m).powi(2))
        .sum()
}

/// Weighted graph used across aggregation levels. `self_loop[i]` holds the
/// internal weight of a merged node counted in both directions.
struct Level {
    neighbors: Vec<Vec<(usize, f64)>>,
    self_loop: Vec<f64>,
    degree: Vec<f64>,
}

impl Level {
    fn from_adjacency(adj: &Array2<f64>) -> Self {
        let p = adj.nrows();
        let neighbors: Vec<Vec<(usize, f64)>> = (0..p)
            .map(|i| {
                (0..p)
                    .filter(|&j| j != i && adj[[i, j]] > 0.0)
                    .map(|j| (j, adj[[i, j]]))
                    .collect()
            })
            .collect();
        let self_loop: Vec<f64> = (0..p).map(|i| adj[[i, i]]).collect();
        let degree = neighbors
            .iter()
            .zip(&self_loop)
            .map(|(n, s)| s + n.iter().map(|(_, w)| w).sum::<f64>())
            .collect();
        Level { neighbors, self_loop, degree }
    }

    fn len(&self) -> usize {
        self.degree.len()
    }

    /// One round of local moves. Returns the community of each node,
    /// relabelled contiguously by first appearance, and whether anything moved.
    fn local_moves(&self, two_m: f64, resolution: f64, rng: &mut impl rand::Rng) -> (Vec<usize>, bool) {
        let n = self.len();
        let mut comm: Vec<usize> = (0..n).collect();
        let mut tot = self.degree.clone();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut link = vec![0.0; n];
        let mut seen = vec![false; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut moved_any = false;
        loop {
            let mut moved = false;
            for &i in &order {
                let ci = comm[i];
                let ki = self.degree[i];
                tot[ci] -= ki;
                touched.clear();
                touched.push(ci);
                seen[ci] = true;
                for &(j, w) in &self.neighbors[i] {
                    let cj = comm[j];
                    if !seen[cj] {
                        seen[cj] = true;
                        touched.push(cj);
                    }
                    link[cj] += w;
                }
                let gain = |c: usize, link: &[f64]| link[c] - resolution * tot[c] * ki / two_m;
                let mut best = ci;
                let mut best_gain = gain(ci, &link);
                for &c in &touched {
                    let g = gain(c, &link);
                    if g > best_gain + 1e-12 {
                        best = c;
                        best_gain = g;
                    }
                }
                for &c in &touched {
                    link[c] = 0.0;
                    seen[c] = false;
                }
                tot[best] += ki;
                if best != ci {
                    comm[i] = best;
                    moved = true;
                    moved_any = true;
                }
            }
            if !moved {
                break;
            }
        }
        (relabel(&comm), moved_any)
    }

    fn aggregate(&self, comm: &[usize]) -> Level {
        let n_c = comm.iter().copied().max().map_or(0, |m| m + 1);
        let mut w = vec![std::collections::BTreeMap::<usize, f64>::new(); n_c];
        let mut self_loop = vec![0.0; n_c];
        let mut degree = vec![0.0; n_c];
        for i in 0..self.len() {
            let ci = comm[i];
            self_loop[ci] += self.self_loop[i];
            degree[ci] += self.degree[i];
            for &(j, wt) in &self.neighbors[i] {
                let cj = comm[j];
                if ci == cj {
                    self_loop[ci] += wt;
                } else {
                    *w[ci].entry(cj).or_insert(0.0) += wt;
                }
            }
        }
        Level {
            neighbors: w.into_iter().map(|m| m.into_iter().collect()).collect(),
            self_loop,
            degree,
        }
    }
}

fn relabel(comm: &[usize]) -> Vec<usize> {
    let mut map = vec![usize::MAX; comm.len()];
    let mut next = 0;
    comm.iter()
        .map(|&c| {
            if map[c] == usize::MAX {
                map[c] = next;
                next += 1;
            }
            map[c]
        })
        .collect()
}

fn check_graph(net: &CoOccurrenceNetwork) -> Result<()> {
    if net.n_nodes() == 0 || net.adjacency().sum() <= 0.0 {
        return Err(Error::validation("network has no edges to cluster"));
    }
    Ok(())
}

/// Louvain community detection with node order shuffled by `seed`.
pub fn louvain(net: &CoOccurrenceNetwork, resolution: f64, seed: u64) -> Result<ClusterResult> {
    check_graph(net)?;
    let adj = net.adjacency();
    let mut level = Level::from_adjacency(adj);
    let two_m: f64 = level.degree.iter().sum();
    let mut rng = seed::rng(seed);
    let mut assignment: Vec<usize> = (0..net.n_nodes()).collect();
    loop {
        let (comm, moved) = level.local_moves(two_m, resolution, &mut rng);
        if !moved {
            break;
        }
        for a in assignment.iter_mut() {
            *a = comm[*a];
        }
        level = level.aggregate(&comm);
    }
    let assignment = relabel(&assignment);
    let n_clusters = assignment.iter().copied().max().map_or(0, |m| m + 1);
    Ok(ClusterResult {
        modularity_q: modularity(adj, &assignment, resolution),
        assignment,
        n_clusters,
    })
}

/// Louvain over `n_seeds` derived seeds; the highest Q wins, ties to the
/// lowest seed index.
pub fn louvain_best(
    net: &CoOccurrenceNetwork,
    resolution: f64,
    n_seeds: usize,
    master_seed: u64,
) -> Result<ClusterResult> {
    check_graph(net)?;
    let results = par::map_range(n_seeds.max(1), |i| {
        louvain(net, resolution, seed::derive(master_seed, &[seed::STREAM_LOUVAIN, i as u64]))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(results
        .into_iter()
        .reduce(|best, r| if r.modularity_q > best.modularity_q { r } else { best })
        .expect("at least one seed"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralityReport {
    pub degree: Vec<f64>,
    pub closeness: Vec<f64>,
}

impl CentralityReport {
    pub fn degree_rank(&self) -> Vec<usize> {
        rank_desc(&self.degree)
    }

    pub fn closeness_rank(&self) -> Vec<usize> {
        rank_desc(&self.closeness)
    }

    pub fn write(&self, path: &Path, labels: &[String]) -> Result<()> {
        let (dr, cr) = (self.degree_rank(), self.closeness_rank());
        let mut w = TableWriter::new(&["taxon", "degree", "closeness", "degree_rank", "closeness_rank"]);
        for i in 0..labels.len() {
            w.row(&[
                labels[i].clone(),
                fmt_num(self.degree[i]),
                fmt_num(self.closeness[i]),
                dr[i].to_string(),
                cr[i].to_string(),
            ]);
        }
        w.write(path)
    }
}

/// 1-based rank by decreasing value, ties by index.
fn rank_desc(v: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    let mut rank = vec![0; v.len()];
    for (r, i) in idx.into_iter().enumerate() {
        rank[i] = r + 1;
    }
    rank
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// Shortest-path distances from `src` with edge length `1 / weight`.
pub fn shortest_paths(adj: &Array2<f64>, src: usize) -> Vec<f64> {
    let p = adj.nrows();
    let mut dist = vec![f64::INFINITY; p];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(Entry(0.0, src));
    while let Some(Entry(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for v in 0..p {
            let w = adj[[u, v]];
            if v != u && w > 0.0 {
                let nd = d + 1.0 / w;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Entry(nd, v));
                }
            }
        }
    }
    dist
}

/// Weighted degree and harmonic closeness of every node.
pub fn centralities(net: &CoOccurrenceNetwork) -> CentralityReport {
    let adj = net.adjacency();
    let p = net.n_nodes();
    let degree = adj.rows().into_iter().map(|r| r.sum()).collect();
    let closeness = par::map_range(p, |i| {
        if p < 2 {
            return 0.0;
        }
        let d = shortest_paths(adj, i);
        let s: f64 = (0..p)
            .filter(|&j| j != i && d[j].is_finite())
            .map(|j| 1.0 / d[j])
            .sum();
        s / (p - 1) as f64
    });
    CentralityReport { degree, closeness }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocationReport {
    pub top_taxa: Vec<usize>,
    pub clusters_spanned: usize,
    pub n_clusters: usize,
    /// Top taxa with at least one edge to another top taxon.
    pub connected_to_top: usize,
    /// Nodes outside the top set adjacent to two or more top taxa.
    pub common_neighbors: usize,
    pub degree_rank: Vec<usize>,
    pub closeness_rank: Vec<usize>,
}

impl LocationReport {
    pub fn write(&self, path: &Path, labels: &[String], clusters: &ClusterResult) -> Result<()> {
        let mut w = TableWriter::new(&["taxon", "cluster", "degree_rank", "closeness_rank"]);
        for (k, &i) in self.top_taxa.iter().enumerate() {
            w.row(&[
                labels[i].clone(),
                clusters.assignment[i].to_string(),
                self.degree_rank[k].to_string(),
                self.closeness_rank[k].to_string(),
            ]);
        }
        w.write(path)
    }

    pub fn write_summary(&self, path: &Path, modularity_q: f64) -> Result<()> {
        let mut w = TableWriter::new(&["metric", "value"]);
        w.row(&["top_k".to_string(), self.top_taxa.len().to_string()]);
        w.row(&["clusters_spanned".to_string(), self.clusters_spanned.to_string()]);
        w.row(&["n_clusters".to_string(), self.n_clusters.to_string()]);
        w.row(&["modularity_q".to_string(), fmt_num(modularity_q)]);
        w.row(&["connected_to_top".to_string(), self.connected_to_top.to_string()]);
        w.row(&["common_neighbors".to_string(), self.common_neighbors.to_string()]);
        w.write(path)
    }
}

/// Where the `top_k` most important taxa sit in the network. Edges count when
/// their weight exceeds `edge_threshold`. `top_k` is clamped to the node count.
pub fn locate_group(
    net: &CoOccurrenceNetwork,
    clusters: &ClusterResult,
    centrality: &CentralityReport,
    importance: &[f64],
    top_k: usize,
    edge_threshold: f64,
) -> LocationReport {
    let p = net.n_nodes();
    let top = top_taxa(importance, top_k.min(p));
    let is_top: Vec<bool> = (0..p).map(|i| top.contains(&i)).collect();
    let adj = net.adjacency();
    let linked = |i: usize, j: usize| i != j && adj[[i, j]] > edge_threshold;

    let clusters_spanned = top
        .iter()
        .map(|&i| clusters.assignment[i])
        .collect::<BTreeSet<_>>()
        .len();
    let connected_to_top = top
        .iter()
        .filter(|&&i| top.iter().any(|&j| linked(i, j)))
        .count();
    let common_neighbors = (0..p)
        .filter(|&v| !is_top[v] && top.iter().filter(|&&t| linked(v, t)).count() >= 2)
        .count();
    let (dr, cr) = (centrality.degree_rank(), centrality.closeness_rank());
    LocationReport {
        degree_rank: top.iter().map(|&i| dr[i]).collect(),
        closeness_rank: top.iter().map(|&i| cr[i]).collect(),
        top_taxa: top,
        clusters_spanned,
        n_clusters: clusters.n_clusters,
        connected_to_top,
        common_neighbors,
    }
}

/// Network annotated with clusters, centralities and importance. Edges at or
/// below `display_threshold` are dropped.
pub fn write_annotated_graphml(
    path: &Path,
    net: &CoOccurrenceNetwork,
    clusters: &ClusterResult,
    centrality: &CentralityReport,
    importance: &[f64],
    mean_abundance: &[f64],
    display_threshold: f64,
) -> Result<()> {
    let mut g = Graph::new([
        "cluster",
        "degree",
        "closeness",
        "importance",
        "mean_relative_abundance",
    ]);
    for (i, label) in net.taxon_labels().iter().enumerate() {
        g.add_node(
            label.clone(),
            vec![
                AttrValue::Int(clusters.assignment[i] as i64),
                AttrValue::Double(centrality.degree[i]),
                AttrValue::Double(centrality.closeness[i]),
                AttrValue::Double(importance[i]),
                AttrValue::Double(mean_abundance[i]),
            ],
        );
    }
    let p = net.n_nodes();
    for i in 0..p {
        for j in i + 1..p {
            let w = net.weight(i, j);
            if w > display_threshold {
                g.add_edge(i, j, w);
            }
        }
    }
    g.write(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ga::GroupChromosome;
    use crate::importance::aggregate_importance;
    use proptest::prelude::*;
    use rand::Rng;

    fn labels(p: usize) -> Vec<String> {
        (0..p).map(|i| format!("n{i}")).collect()
    }

    fn graph(p: usize, edges: &[(usize, usize, f64)]) -> CoOccurrenceNetwork {
        let mut a = Array2::zeros((p, p));
        for &(i, j, w) in edges {
            a[[i, j]] = w;
            a[[j, i]] = w;
        }
        CoOccurrenceNetwork::new(a, labels(p)).unwrap()
    }

    fn two_triangles() -> CoOccurrenceNetwork {
        graph(
            6,
            &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0)],
        )
    }

    fn random_graph(p: usize, density: f64, s: u64) -> CoOccurrenceNetwork {
        let mut rng = seed::rng(s);
        let mut e = Vec::new();
        for i in 0..p {
            for j in i + 1..p {
                if rng.random::<f64>() < density {
                    e.push((i, j, rng.random_range(0.01..1.0)));
                }
            }
        }
        graph(p, &e)
    }

    #[test]
    fn two_triangles_split_in_two() {
        let net = two_triangles();
        for s in 0..10 {
            let c = louvain(&net, 1.0, s).unwrap();
            assert_eq!(c.n_clusters, 2);
            assert!((c.modularity_q - 0.5).abs() < 1e-12);
            assert_eq!(c.assignment[0], c.assignment[2]);
            assert_ne!(c.assignment[0], c.assignment[3]);
        }
    }

    #[test]
    fn hand_modularity() {
        // Two triangles as one cluster: 12/12 - 1 = 0. As two: 2 * (6/12 - 1/4) = 0.5.
        let net = two_triangles();
        assert!((modularity(net.adjacency(), &[0; 6], 1.0)).abs() < 1e-15);
        assert!((modularity(net.adjacency(), &[0, 0, 0, 1, 1, 1], 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn complete_graph_is_one_cluster() {
        let mut e = Vec::new();
        for i in 0..6 {
            for j in i + 1..6 {
                e.push((i, j, 1.0));
            }
        }
        let c = louvain_best(&graph(6, &e), 1.0, 10, 0).unwrap();
        assert_eq!(c.n_clusters, 1);
        assert!(c.modularity_q.abs() < 1e-12);
    }

    #[test]
    fn empty_graph_is_rejected() {
        assert!(louvain(&graph(3, &[]), 1.0, 0).is_err());
        assert!(louvain_best(&graph(0, &[]), 1.0, 10, 0).is_err());
    }

    #[test]
    fn louvain_is_deterministic_and_consistent() {
        for s in 0..20 {
            let net = random_graph(25, 0.2, s);
            if net.adjacency().sum() == 0.0 {
                continue;
            }
            let a = louvain_best(&net, 1.0, 10, s).unwrap();
            let b = louvain_best(&net, 1.0, 10, s).unwrap();
            assert_eq!(a, b);
            let q = modularity(net.adjacency(), &a.assignment, 1.0);
            assert!((q - a.modularity_q).abs() < 1e-10);
            assert!((-0.5..=1.0).contains(&a.modularity_q));
            let ids: BTreeSet<usize> = a.assignment.iter().copied().collect();
            assert_eq!(ids, (0..a.n_clusters).collect());
        }
    }

    #[test]
    fn planted_blocks_are_recovered() {
        let mut e = Vec::new();
        for b in 0..3 {
            for i in 0..5 {
                for j in i + 1..5 {
                    e.push((b * 5 + i, b * 5 + j, 1.0));
                }
            }
        }
        e.push((4, 5, 0.1));
        e.push((9, 10, 0.1));
        let c = louvain_best(&graph(15, &e), 1.0, 10, 3).unwrap();
        assert_eq!(c.n_clusters, 3);
        for i in 0..15 {
            assert_eq!(c.assignment[i], c.assignment[(i / 5) * 5]);
        }
    }

    #[test]
    fn star_center() {
        let p = 6;
        let e: Vec<_> = (1..p).map(|j| (0, j, 1.0)).collect();
        let c = centralities(&graph(p, &e));
        assert_eq!(c.degree[0], (p - 1) as f64);
        assert!((c.closeness[0] - 1.0).abs() < 1e-12);
        // Leaves: one hop to the center, two to the other four leaves.
        let leaf = (1.0 + 4.0 * 0.5) / 5.0;
        assert!((c.closeness[1] - leaf).abs() < 1e-12);
    }

    #[test]
    fn path_and_isolated_node() {
        let c = centralities(&graph(3, &[(0, 1, 1.0), (1, 2, 1.0)]));
        assert!((c.closeness[1] - 1.0).abs() < 1e-12);
        assert!((c.closeness[0] - 0.75).abs() < 1e-12);
        assert!((c.closeness[2] - 0.75).abs() < 1e-12);

        let c = centralities(&graph(4, &[(0, 1, 1.0), (1, 2, 1.0)]));
        assert_eq!(c.degree[3], 0.0);
        assert_eq!(c.closeness[3], 0.0);
    }

    #[test]
    fn weights_shorten_paths() {
        // a-b with weight 2 gives length 0.5.
        let d = shortest_paths(graph(3, &[(0, 1, 2.0), (1, 2, 0.5)]).adjacency(), 0);
        assert_eq!(d, vec![0.0, 0.5, 2.5]);
    }

    #[test]
    fn isolated_node_leaves_others_unchanged() {
        let net = random_graph(8, 0.4, 5);
        let mut a = Array2::zeros((9, 9));
        a.slice_mut(ndarray::s![..8, ..8]).assign(net.adjacency());
        let bigger = CoOccurrenceNetwork::new(a, labels(9)).unwrap();
        let (c0, c1) = (centralities(&net), centralities(&bigger));
        for i in 0..8 {
            assert_eq!(c0.degree[i], c1.degree[i]);
            // Same sum of reciprocal distances, different normalizer.
            assert!((c0.closeness[i] * 7.0 - c1.closeness[i] * 8.0).abs() < 1e-12);
        }
    }

    fn floyd_warshall(adj: &Array2<f64>) -> Array2<f64> {
        let p = adj.nrows();
        let mut d = Array2::from_elem((p, p), f64::INFINITY);
        for i in 0..p {
            d[[i, i]] = 0.0;
            for j in 0..p {
                if i != j && adj[[i, j]] > 0.0 {
                    d[[i, j]] = 1.0 / adj[[i, j]];
                }
            }
        }
        for k in 0..p {
            for i in 0..p {
                for j in 0..p {
                    if d[[i, k]] + d[[k, j]] < d[[i, j]] {
                        d[[i, j]] = d[[i, k]] + d[[k, j]];
                    }
                }
            }
        }
        d
    }

    proptest! {
        #[test]
        fn dijkstra_matches_brute_force(p in 2usize..10, density in 0.1f64..0.9, s in 0u64..1000) {
            let net = random_graph(p, density, s);
            let fw = floyd_warshall(net.adjacency());
            let all: Vec<Vec<f64>> = (0..p).map(|i| shortest_paths(net.adjacency(), i)).collect();
            for i in 0..p {
                for j in 0..p {
                    let (a, b) = (all[i][j], fw[[i, j]]);
                    prop_assert!(a == b || (a - b).abs() < 1e-9);
                    for k in 0..p {
                        prop_assert!(all[i][j] <= all[i][k] + all[k][j] + 1e-9);
                    }
                }
            }
        }
    }

    fn importance_for(p: usize, top: &[usize]) -> Vec<f64> {
        aggregate_importance(&[(GroupChromosome::from_indices(p, top), 0.9)])
            .unwrap()
            .taxon_importance
    }

    #[test]
    fn locate_in_two_blocks() {
        let mut e = Vec::new();
        for b in 0..2 {
            for i in 0..5 {
                for j in i + 1..5 {
                    e.push((b * 5 + i, b * 5 + j, 0.5));
                }
            }
        }
        let net = graph(10, &e);
        let clusters = louvain_best(&net, 1.0, 10, 0).unwrap();
        let cent = centralities(&net);
        let imp = importance_for(10, &[1, 2, 7]);
        let rep = locate_group(&net, &clusters, &cent, &imp, 3, 0.0);
        assert_eq!(rep.top_taxa, vec![1, 2, 7]);
        assert_eq!(rep.clusters_spanned, 2);
        assert_eq!(rep.n_clusters, 2);
        // 1-2 linked; 7 has no top neighbour in its block.
        assert_eq!(rep.connected_to_top, 2);
        // Nodes 0, 3, 4 touch both 1 and 2.
        assert_eq!(rep.common_neighbors, 3);

        let all = locate_group(&net, &clusters, &cent, &imp, 10, 0.0);
        assert_eq!(all.clusters_spanned, clusters.n_clusters);
        assert_eq!(all.common_neighbors, 0);
    }

    #[test]
    fn threshold_drops_weak_edges() {
        let net = graph(4, &[(0, 1, 0.04), (1, 2, 0.5), (2, 3, 0.5)]);
        let clusters = louvain(&net, 1.0, 0).unwrap();
        let cent = centralities(&net);
        let imp = importance_for(4, &[0, 1]);
        assert_eq!(locate_group(&net, &clusters, &cent, &imp, 2, 0.0).connected_to_top, 2);
        assert_eq!(locate_group(&net, &clusters, &cent, &imp, 2, 0.05).connected_to_top, 0);
    }

    #[test]
    fn ranks_are_descending_with_index_ties() {
        assert_eq!(rank_desc(&[1.0, 3.0, 3.0, 0.0]), vec![3, 1, 2, 4]);
    }
}
