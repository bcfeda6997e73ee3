//! Subcommand implementations.

use std::path::{Path, PathBuf};

use cogroup::analytics::{centralities, locate_group, louvain_best, write_annotated_graphml};
use cogroup::dataset::{Dataset, ABUNDANCE_FILE, FUNCTION_FILE};
use cogroup::evaluation::{evaluate_method, write_per_repeat, write_summary, write_t_tests, MethodSpec};
use cogroup::ga::PenaltyMode;
use cogroup::importance::{discover_importance, load_importance_nodes};
use cogroup::ingest::{css_normalize_with_scale, filter_sparse_taxa, load_abundance, load_functional};
use cogroup::model_select::sweep_k;
use cogroup::network::{infer_network, load_adjacency, ConvolutionOperator, CoOccurrenceNetwork};
use cogroup::synth::generate;
use cogroup::table::{fmt_num, TableWriter};
use log::{info, warn};

use crate::config::RunConfig;
use crate::{
    AnalyzeArgs, Cli, Command, DiscoverArgs, EvaluateArgs, GaArgs, GraphArgs, InferNetArgs, IngestArgs,
    SelectKArgs, SynthArgs,
};

pub const ADJACENCY_FILE: &str = "adjacency.tsv";

use crate::CliError;

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.optimizer.seed = cfg.seed;
    cfg.synth.seed = cfg.seed;
    match &cli.command {
        Command::Ingest(a) => ingest(cfg, a),
        Command::InferNet(a) => infer_net(cfg, a),
        Command::SelectK(a) => select_k(cfg, a),
        Command::Discover(a) => discover(cfg, a),
        Command::Evaluate(a) => evaluate(cfg, a),
        Command::Analyze(a) => analyze(cfg, a),
        Command::Synth(a) => synth(cfg, a),
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn require_file(path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("input file {} not found", path.display())))
    }
}

fn load_dataset(dir: &Path) -> Result<Dataset, CliError> {
    require_file(&dir.join(ABUNDANCE_FILE))?;
    require_file(&dir.join(FUNCTION_FILE))?;
    Ok(Dataset::load(dir)?)
}

fn load_network(path: &Path, labels: &[String]) -> Result<CoOccurrenceNetwork, CliError> {
    require_file(path)?;
    let loaded = load_adjacency(path, labels)?;
    for w in &loaded.warnings {
        warn!("{}: {w}", path.display());
    }
    Ok(loaded.network)
}

fn graph_network(g: &GraphArgs, labels: &[String]) -> Result<Option<CoOccurrenceNetwork>, CliError> {
    match (&g.adjacency, g.no_graph) {
        (Some(p), false) => Ok(Some(load_network(p, labels)?)),
        (None, true) => Ok(None),
        _ => Err(CliError::Usage("give either --adjacency or --no-graph".into())),
    }
}

fn apply_ga(cfg: &mut RunConfig, ga: &GaArgs) {
    let o = &mut cfg.optimizer;
    set(&mut o.population_size, ga.population);
    set(&mut o.max_generations, ga.generations);
    set(&mut o.stagnation_limit, ga.stagnation);
    set(&mut o.crossover_prob, ga.crossover);
    set(&mut o.mutation_prob, ga.mutation);
    set(&mut o.elite_fraction, ga.elite_fraction);
}

fn key_values(path: &Path, rows: &[(&str, String)]) -> Result<(), CliError> {
    let mut w = TableWriter::new(&["metric", "value"]);
    for (k, v) in rows {
        w.row(&[k.to_string(), v.clone()]);
    }
    Ok(w.write(path)?)
}

fn ingest(mut cfg: RunConfig, a: &IngestArgs) -> Result<(), CliError> {
    let s = &mut cfg.ingest;
    set(&mut s.orientation, a.orientation.map(Into::into));
    set(&mut s.max_zero_fraction, a.max_zero_fraction);
    set(&mut s.css_quantile, a.css_quantile);
    require_file(&a.abundance)?;
    require_file(&a.function)?;
    let raw = load_abundance(&a.abundance, s.orientation)?;
    let function = load_functional(&a.function, raw.sample_ids())?;
    let filtered = filter_sparse_taxa(&raw, s.max_zero_fraction)?;
    info!(
        "kept {} of {} taxa after the sparsity filter",
        filtered.n_taxa(),
        raw.n_taxa()
    );
    let abundance = css_normalize_with_scale(&filtered, s.css_quantile, s.css_scale)?;
    cfg.write_snapshot(&a.out)?;
    Dataset { abundance, function }.write(&a.out)?;
    Ok(())
}

fn infer_net(mut cfg: RunConfig, a: &InferNetArgs) -> Result<(), CliError> {
    let n = &mut cfg.network;
    set(&mut n.mu1, a.mu1);
    set(&mut n.mu2, a.mu2);
    set(&mut n.max_iterations, a.max_iterations);
    set(&mut n.tolerance, a.tolerance);
    let ds = load_dataset(&a.dataset)?;
    let net = infer_network(&ds.abundance, &cfg.network)?;
    cfg.write_snapshot(&a.out)?;
    net.write(&a.out.join(ADJACENCY_FILE))?;
    net.write_edge_list(&a.out.join("edges.tsv"), 0.0)?;
    Ok(())
}

fn select_k(mut cfg: RunConfig, a: &SelectKArgs) -> Result<(), CliError> {
    apply_ga(&mut cfg, &a.ga);
    let s = &mut cfg.search;
    set(&mut s.k_min, a.k_min);
    set(&mut s.k_max, a.k_max);
    set(&mut s.sweep_repeats, a.repeats);
    set(&mut s.aic_formula, a.aic_formula.map(Into::into));
    let ds = load_dataset(&a.dataset)?;
    let net = graph_network(&a.graph, ds.abundance.taxon_labels())?;
    let p = ds.abundance.n_taxa();
    if cfg.search.k_max > p {
        warn!("k_max {} exceeds the {p} taxa; capping", cfg.search.k_max);
        cfg.search.k_max = p;
    }
    let op = match &net {
        Some(net) => ConvolutionOperator::from_network(net),
        None => ConvolutionOperator::identity(p),
    };
    let m = op.apply(ds.abundance.values())?;
    let sweep = sweep_k(
        &m,
        ds.function.values(),
        cfg.search.k_min,
        cfg.search.k_max,
        cfg.search.sweep_repeats,
        &cfg.optimizer,
        cfg.search.aic_formula,
    )?;
    cfg.write_snapshot(&a.out)?;
    sweep.write_runs(&a.out.join("sweep_runs.tsv"))?;
    sweep.write_summary(&a.out.join("sweep_summary.tsv"))?;
    key_values(&a.out.join("chosen_k.tsv"), &[("chosen_k", sweep.chosen_k.to_string())])?;
    println!("chosen_k\t{}", sweep.chosen_k);
    Ok(())
}

fn method_from_tag(cfg: &RunConfig, tag: &str) -> Result<MethodSpec, CliError> {
    let (use_graph, mode) = match tag {
        "graph" => (true, PenaltyMode::SizeCap),
        "graph-l1" => (true, PenaltyMode::L1),
        "baseline" => (false, PenaltyMode::SizeCap),
        "baseline-l1" => (false, PenaltyMode::L1),
        other => {
            return Err(CliError::Usage(format!(
                "unknown method {other:?}; expected graph, graph-l1, baseline or baseline-l1"
            )))
        }
    };
    let mut optimizer = cfg.optimizer.clone();
    optimizer.mode = mode;
    Ok(MethodSpec {
        tag: tag.to_string(),
        use_graph,
        optimizer,
        mu_grid: cfg.search.mu_grid.clone(),
        tune: cfg.tune,
    })
}

fn discover(mut cfg: RunConfig, a: &DiscoverArgs) -> Result<(), CliError> {
    apply_ga(&mut cfg, &a.ga);
    set(&mut cfg.optimizer.mode, a.mode.map(Into::into));
    set(&mut cfg.optimizer.k_opt, a.k);
    set(&mut cfg.search.mu_grid, a.mu_grid.clone());
    set(&mut cfg.search.runs, a.runs);
    if a.top_k.is_some() {
        cfg.search.top_k = a.top_k;
    }
    let ds = load_dataset(&a.dataset)?;
    let net = graph_network(&a.graph, ds.abundance.taxon_labels())?;
    let tag = match (net.is_some(), cfg.optimizer.mode) {
        (true, PenaltyMode::SizeCap) => "graph",
        (true, PenaltyMode::L1) => "graph-l1",
        (false, PenaltyMode::SizeCap) => "baseline",
        (false, PenaltyMode::L1) => "baseline-l1",
    };
    let method = method_from_tag(&cfg, tag)?;
    let d = discover_importance(
        &ds.abundance,
        net.as_ref(),
        &ds.function,
        &method,
        cfg.search.runs,
        cfg.search.top_k,
        cfg.seed,
    )?;
    let labels = ds.abundance.taxon_labels();
    let mean_abundance = ds.abundance.mean_relative_abundance();
    let out = &a.out;
    cfg.write_snapshot(out)?;
    d.write_group(&out.join("group.tsv"), labels)?;
    d.write_runs(&out.join("runs.tsv"))?;
    d.write_history(&out.join("history.tsv"))?;
    d.importance.write_nodes(&out.join("importance_nodes.tsv"), labels, &mean_abundance)?;
    d.importance.write_edges(&out.join("importance_edges.tsv"), labels)?;
    d.importance.write_graphml(
        &out.join("importance.graphml"),
        labels,
        &mean_abundance,
        cfg.analytics.display_threshold,
    )?;
    let mut top = TableWriter::new(&["rank", "taxon", "importance"]);
    for (r, &i) in d.top_taxa.iter().enumerate() {
        top.row(&[
            (r + 1).to_string(),
            labels[i].clone(),
            fmt_num(d.importance.taxon_importance[i]),
        ]);
    }
    top.write(&out.join("top_taxa.tsv"))?;
    let best = d.best();
    key_values(
        &out.join("summary.tsv"),
        &[
            ("best_run", d.best_run.to_string()),
            ("best_fitness", fmt_num(best.eval.penalized_fitness)),
            ("best_r", fmt_num(best.eval.pearson_r)),
            ("best_size", best.group.size().to_string()),
            ("mu", d.mu.map(fmt_num).unwrap_or_else(|| "NA".into())),
            ("top_k", d.top_taxa.len().to_string()),
            ("top_r", fmt_num(d.top_r)),
            ("top_p", fmt_num(d.top_p)),
        ],
    )?;
    Ok(())
}

fn evaluate(mut cfg: RunConfig, a: &EvaluateArgs) -> Result<(), CliError> {
    apply_ga(&mut cfg, &a.ga);
    set(&mut cfg.evaluation.methods, a.methods.clone());
    set(&mut cfg.evaluation.repeats, a.repeats);
    set(&mut cfg.optimizer.k_opt, a.k);
    set(&mut cfg.search.mu_grid, a.mu_grid.clone());
    set(&mut cfg.evaluation.split.fraction, a.split_fraction);
    set(&mut cfg.evaluation.split.n_strata, a.strata);
    if cfg.evaluation.methods.is_empty() {
        return Err(CliError::Usage("no methods to evaluate".into()));
    }
    let methods = cfg
        .evaluation
        .methods
        .iter()
        .map(|t| method_from_tag(&cfg, t))
        .collect::<Result<Vec<_>, _>>()?;
    let ds = load_dataset(&a.dataset)?;
    let net = match &a.adjacency {
        Some(p) => Some(load_network(p, ds.abundance.taxon_labels())?),
        None if methods.iter().any(|m| m.use_graph) => {
            return Err(CliError::Usage("graph methods need --adjacency".into()))
        }
        None => None,
    };
    let reports = methods
        .iter()
        .map(|m| {
            info!("evaluating {}", m.tag);
            evaluate_method(
                &ds.abundance,
                net.as_ref(),
                &ds.function,
                m,
                cfg.evaluation.repeats,
                &cfg.evaluation.split,
                cfg.seed,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    cfg.write_snapshot(&a.out)?;
    write_per_repeat(&a.out.join("per_repeat.tsv"), &reports)?;
    write_summary(&a.out.join("summary.tsv"), &reports)?;
    write_t_tests(&a.out.join("t_tests.tsv"), &reports)?;
    Ok(())
}

fn analyze(mut cfg: RunConfig, a: &AnalyzeArgs) -> Result<(), CliError> {
    let s = &mut cfg.analytics;
    set(&mut s.resolution, a.resolution);
    set(&mut s.louvain_seeds, a.louvain_seeds);
    set(&mut s.edge_threshold, a.edge_threshold);
    set(&mut s.display_threshold, a.display_threshold);
    if a.top_k.is_some() {
        cfg.search.top_k = a.top_k;
    }
    require_file(&a.importance)?;
    let imp = load_importance_nodes(&a.importance)?;
    let net = load_network(&a.adjacency, &imp.taxon_labels)?;
    let top_k = cfg.search.top_k.unwrap_or(cfg.optimizer.k_opt);
    if top_k > net.n_nodes() {
        return Err(CliError::Usage(format!(
            "top-k {top_k} exceeds the {} taxa",
            net.n_nodes()
        )));
    }
    let s = &cfg.analytics;
    let clusters = louvain_best(&net, s.resolution, s.louvain_seeds, cfg.seed)?;
    let cent = centralities(&net);
    let report = locate_group(&net, &clusters, &cent, &imp.importance, top_k, s.edge_threshold);
    let out: PathBuf = a.out.clone();
    let labels = net.taxon_labels();
    cfg.write_snapshot(&out)?;
    clusters.write(&out.join("clusters.tsv"), labels)?;
    cent.write(&out.join("centrality.tsv"), labels)?;
    report.write(&out.join("location.tsv"), labels, &clusters)?;
    report.write_summary(&out.join("location_summary.tsv"), clusters.modularity_q)?;
    write_annotated_graphml(
        &out.join("network.graphml"),
        &net,
        &clusters,
        &cent,
        &imp.importance,
        &imp.mean_abundance,
        cfg.analytics.display_threshold,
    )?;
    Ok(())
}

fn synth(mut cfg: RunConfig, a: &SynthArgs) -> Result<(), CliError> {
    let s = &mut cfg.synth;
    set(&mut s.n_samples, a.n_samples);
    set(&mut s.n_taxa, a.n_taxa);
    set(&mut s.n_blocks, a.blocks);
    set(&mut s.intra_block_weight, a.intra);
    set(&mut s.inter_block_weight, a.inter);
    set(&mut s.planted_group, a.planted.clone());
    set(&mut s.noise_sigma, a.noise);
    set(&mut s.log_sd, a.log_sd);
    let bundle = generate(&cfg.synth)?;
    cfg.write_snapshot(&a.out)?;
    bundle.write(&a.out)?;
    Ok(())
}
