//! `nirm` — train a node-influence ranking model on exhaustively-labeled
//! tiny synthetic networks and dismantle arbitrary edge-list graphs with it,
//! alongside classical centrality baselines.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use nirm_core::dismantle::{dismantle, DismantleTrace, Method, MethodContext, Strategy};
use nirm_core::generate::{dataset_spec, generate, GenModel};
use nirm_core::graph::NodeMask;
use nirm_core::io;
use nirm_core::model::{count_parameters, nirm_rank, ModelConfig, ModelParameters};
use nirm_core::oracle::{label_sample_with_mode, LabelMode, OracleConfig, OracleError};
use nirm_core::train::{train, TrainConfig};
use nirm_core::{parallel, Graph};

#[derive(Parser)]
#[command(
    name = "nirm",
    about = "Node-influence ranking and network dismantling toolkit",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate and exhaustively label tiny synthetic training networks.
    GenData(GenDataArgs),
    /// Train the ranking model on a labeled dataset directory.
    Train(TrainArgs),
    /// Score and rank every node of a graph with a trained model.
    Rank(RankArgs),
    /// Dismantle one graph with one method and strategy.
    Dismantle(DismantleArgs),
    /// Compare methods and strategies across a directory of graphs.
    Eval(EvalArgs),
}

#[derive(Args)]
struct GenDataArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Number of labeled networks to produce.
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 20)]
    min_n: usize,
    #[arg(long, default_value_t = 30)]
    max_n: usize,
    /// Dismantling threshold used during labeling.
    #[arg(long, default_value_t = 0.2)]
    theta_train: f64,
    /// Skip samples whose minimum attack set exceeds this size.
    #[arg(long, default_value_t = 10)]
    max_tas: usize,
    /// Labeling mode: regress propagated scores or their normalized ranks.
    #[arg(long, default_value = "score")]
    label_mode: LabelMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset directory produced by gen-data.
    #[arg(long)]
    data: PathBuf,
    /// Where to write the best checkpoint (JSON).
    #[arg(long)]
    out: PathBuf,
    /// History CSV path; defaults to the checkpoint path with a .csv suffix.
    #[arg(long)]
    history: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 1e-4)]
    l2: f64,
    #[arg(long, default_value_t = 0.4)]
    decay: f64,
    #[arg(long, default_value_t = 6)]
    batch_size: usize,
    #[arg(long, default_value_t = 8)]
    patience: usize,
    /// Epochs without validation improvement before one learning-rate decay.
    #[arg(long, default_value_t = 4)]
    plateau: usize,
    #[arg(long, default_value_t = 0.05)]
    val_frac: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    graph: PathBuf,
    /// Output CSV (`node_id,score,rank`).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DismantleArgs {
    #[arg(long)]
    graph: PathBuf,
    /// One of: nirm, nirm-is, nirm-ls, nirm-gs, dc, ci, bc, cc, hc, pc, ec, corehd.
    #[arg(long)]
    method: String,
    #[arg(long, default_value = "one-pass")]
    strategy: String,
    #[arg(long, default_value_t = 0.01)]
    theta: f64,
    /// Output trace JSON.
    #[arg(long)]
    out: PathBuf,
    /// Trained model checkpoint (required for the nirm* methods).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Collective-influence ball radius.
    #[arg(long, default_value_t = 2)]
    ci_radius: usize,
}

#[derive(Args)]
struct EvalArgs {
    /// Directory of *.edges graphs.
    #[arg(long)]
    graphs: PathBuf,
    /// Comma-separated method list.
    #[arg(long)]
    methods: String,
    /// Comma-separated strategy list.
    #[arg(long, default_value = "one-pass,adaptive")]
    strategies: String,
    #[arg(long, default_value_t = 0.01)]
    theta: f64,
    /// Output comparison CSV.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    ci_radius: usize,
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::GenData(args) => cmd_gen_data(args),
        Command::Train(args) => cmd_train(args),
        Command::Rank(args) => cmd_rank(args),
        Command::Dismantle(args) => cmd_dismantle(args),
        Command::Eval(args) => cmd_eval(args),
    };
    if let Err(err) = outcome {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

#[derive(Serialize)]
struct GenRunConfig {
    count: usize,
    min_n: usize,
    max_n: usize,
    theta_train: f64,
    max_tas: usize,
    label_mode: LabelMode,
    seed: u64,
}

fn cmd_gen_data(args: GenDataArgs) -> Result<()> {
    if args.count == 0 {
        bail!("--count must be positive");
    }
    if args.min_n == 0 || args.min_n > args.max_n {
        bail!("invalid size range [{}, {}]", args.min_n, args.max_n);
    }
    if !(args.theta_train > 0.0 && args.theta_train <= 1.0) {
        bail!("--theta-train {} outside (0, 1]", args.theta_train);
    }
    fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create {}", args.out.display()))?;

    let oracle_cfg = OracleConfig::new(args.theta_train).with_max_tas_size(args.max_tas);
    let size_range = (args.min_n, args.max_n);

    let mut kept: Vec<ManifestRow> = Vec::with_capacity(args.count);
    let mut skipped = 0usize;
    let mut next_index = 0usize;
    const CHUNK: usize = 64;
    while kept.len() < args.count {
        let indices: Vec<usize> = (next_index..next_index + CHUNK).collect();
        next_index += CHUNK;
        let batch = parallel::map_slice(&indices, |&i| -> Result<_> {
            let spec = dataset_spec(i, size_range, args.seed);
            let graph = generate(&spec).with_context(|| format!("sample {i}"))?;
            match label_sample_with_mode(&graph, &oracle_cfg, args.label_mode) {
                Ok(sample) => Ok(Some((spec, sample))),
                Err(OracleError::BudgetExceeded { max, n }) => {
                    eprintln!(
                        "skipping sample {i} ({spec}): no attack set of size <= {max} on {n} nodes"
                    );
                    Ok(None)
                }
            }
        });
        for item in batch {
            match item? {
                Some((spec, sample)) if kept.len() < args.count => {
                    let stem = io::dataset_file_stem(kept.len());
                    io::write_dataset_entry(&args.out, &stem, &sample)?;
                    kept.push(ManifestRow {
                        entry: io::ManifestEntry {
                            file_stem: stem,
                            spec,
                            k_star: sample.k_star().unwrap_or(0),
                            optimal_set_count: sample.optimal_sets.len(),
                        },
                        entropy: label_entropy(&sample.labels),
                    });
                }
                Some(_) => {}
                None => skipped += 1,
            }
        }
    }

    let entries: Vec<io::ManifestEntry> = kept.iter().map(|r| r.entry.clone()).collect();
    io::write_manifest(&args.out, &entries)?;
    let run_config = GenRunConfig {
        count: args.count,
        min_n: args.min_n,
        max_n: args.max_n,
        theta_train: args.theta_train,
        max_tas: args.max_tas,
        label_mode: args.label_mode,
        seed: args.seed,
    };
    io::write_atomic(
        &args.out.join("gen_config.json"),
        serde_json::to_string_pretty(&run_config)?.as_bytes(),
    )?;

    let mut per_model = [0usize; 4];
    for row in &kept {
        let slot = GenModel::ALL
            .iter()
            .position(|m| *m == row.entry.spec.model)
            .expect("known model");
        per_model[slot] += 1;
    }
    let mean_k_star =
        kept.iter().map(|r| r.entry.k_star as f64).sum::<f64>() / kept.len() as f64;
    let mean_entropy = kept.iter().map(|r| r.entropy).sum::<f64>() / kept.len() as f64;
    println!(
        "wrote {} samples to {} (skipped {skipped} over budget)",
        kept.len(),
        args.out.display()
    );
    for (model, count) in GenModel::ALL.iter().zip(per_model) {
        println!("  {model}: {count}");
    }
    println!("  mean k*: {mean_k_star:.3}");
    println!("  mean label entropy: {mean_entropy:.3} nats");
    Ok(())
}

struct ManifestRow {
    entry: io::ManifestEntry,
    entropy: f64,
}

/// Shannon entropy (nats) of the label vector normalized to a distribution.
fn label_entropy(labels: &[f64]) -> f64 {
    let total: f64 = labels.iter().filter(|&&c| c > 0.0).sum();
    if total <= 0.0 {
        return 0.0;
    }
    labels
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.ln()
        })
        .sum()
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let dataset = io::load_dataset(&args.data)?;
    let train_cfg = TrainConfig {
        learning_rate: args.lr,
        l2_penalty: args.l2,
        lr_decay: args.decay,
        batch_size: args.batch_size,
        max_epochs: args.epochs,
        patience: args.patience,
        plateau_window: args.plateau,
        validation_fraction: args.val_frac,
        seed: args.seed,
    };
    let model_cfg = ModelConfig::default();
    let params_info = count_parameters(&model_cfg);

    println!("training on {} samples from {}", dataset.len(), args.data.display());
    println!(
        "  model: {} layers, heads {:?}, dims {:?}, {} parameters",
        model_cfg.layers(),
        model_cfg.heads,
        model_cfg.layer_dims,
        params_info.total
    );
    println!(
        "  optimizer: lr {} | l2 {} | decay {} | batch {} | epochs {} | patience {} | plateau {} | val {} | seed {}",
        train_cfg.learning_rate,
        train_cfg.l2_penalty,
        train_cfg.lr_decay,
        train_cfg.batch_size,
        train_cfg.max_epochs,
        train_cfg.patience,
        train_cfg.plateau_window,
        train_cfg.validation_fraction,
        train_cfg.seed
    );

    let outcome = train(&dataset, &model_cfg, &train_cfg)?;
    io::write_atomic(&args.out, outcome.params.to_json().as_bytes())?;
    let history_path = args
        .history
        .unwrap_or_else(|| history_path_for(&args.out));
    io::write_history(&history_path, &outcome.history)?;
    println!(
        "done after {} epochs: val loss {} -> best {}",
        outcome.history.len(),
        outcome.initial_val_loss,
        outcome.best_val_loss
    );
    println!("checkpoint: {}", args.out.display());
    println!("history: {}", history_path.display());
    Ok(())
}

fn history_path_for(model_path: &Path) -> PathBuf {
    let mut name = model_path
        .file_stem()
        .map(|s| s.to_os_string())
        .unwrap_or_else(|| "history".into());
    name.push(".history.csv");
    model_path.with_file_name(name)
}

fn load_model(path: &Path) -> Result<ModelParameters> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read model {}", path.display()))?;
    ModelParameters::from_json(&text)
        .with_context(|| format!("cannot parse model {}", path.display()))
}

fn cmd_rank(args: RankArgs) -> Result<()> {
    let params = load_model(&args.model)?;
    let loaded = io::read_edge_list(&args.graph)?;
    let n = loaded.graph.node_count();
    let mask = NodeMask::all_alive(n);
    let scores = nirm_rank(&loaded.graph, &mask, &params);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut rank = vec![0usize; n];
    for (pos, &node) in order.iter().enumerate() {
        rank[node] = pos + 1;
    }

    let mut csv = String::from("node_id,score,rank\n");
    for i in 0..n {
        csv.push_str(&format!("{},{},{}\n", loaded.node_labels[i], scores[i], rank[i]));
    }
    io::write_atomic(&args.out, csv.as_bytes())?;
    println!("ranked {n} nodes -> {}", args.out.display());
    Ok(())
}

/// Serialized dismantling run: original node labels in the removal order.
#[derive(Serialize)]
struct TraceFile<'a> {
    graph: String,
    method: &'a str,
    strategy: &'a str,
    theta: f64,
    n: usize,
    removal_order: Vec<&'a str>,
    ngcc: &'a [f64],
    rho: f64,
    area: f64,
}

fn trace_json(
    graph_name: &str,
    method: Method,
    strategy: Strategy,
    theta: f64,
    node_labels: &[String],
    trace: &DismantleTrace,
) -> Result<String> {
    let method = method.to_string();
    let strategy = strategy.to_string();
    let file = TraceFile {
        graph: graph_name.to_string(),
        method: &method,
        strategy: &strategy,
        theta,
        n: trace.n,
        removal_order: trace
            .removal_order
            .iter()
            .map(|&v| node_labels[v].as_str())
            .collect(),
        ngcc: &trace.ngcc,
        rho: trace.rho,
        area: trace.area,
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

fn cmd_dismantle(args: DismantleArgs) -> Result<()> {
    let method: Method = args.method.parse()?;
    let strategy: Strategy = args.strategy.parse().map_err(anyhow::Error::msg)?;
    let model = args.model.as_deref().map(load_model).transpose()?;
    let loaded = io::read_edge_list(&args.graph)?;
    let ctx = MethodContext {
        model: model.as_ref(),
        ci_radius: Some(args.ci_radius),
    };
    let trace = dismantle(&loaded.graph, method, strategy, args.theta, &ctx)?;
    let json = trace_json(
        &args.graph.display().to_string(),
        method,
        strategy,
        args.theta,
        &loaded.node_labels,
        &trace,
    )?;
    io::write_atomic(&args.out, json.as_bytes())?;
    println!(
        "{} {} on {}: removed {} of {} (rho {:.4}{}), curve area {:.2}",
        method,
        strategy,
        args.graph.display(),
        trace.removal_order.len(),
        trace.n,
        trace.rho,
        format_args!(" = {:.2}%", trace.rho * 100.0),
        trace.area
    );
    println!("trace: {}", args.out.display());
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let methods: Vec<Method> = args
        .methods
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<Method>().map_err(anyhow::Error::from))
        .collect::<Result<_>>()?;
    let strategies: Vec<Strategy> = args
        .strategies
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<Strategy>().map_err(anyhow::Error::msg))
        .collect::<Result<_>>()?;
    if methods.is_empty() || strategies.is_empty() {
        bail!("need at least one method and one strategy");
    }
    let model = args.model.as_deref().map(load_model).transpose()?;
    if model.is_none() {
        if let Some(m) = methods.iter().find(|m| m.needs_model()) {
            bail!("method '{m}' requires --model");
        }
    }

    let mut graph_paths: Vec<PathBuf> = fs::read_dir(&args.graphs)
        .with_context(|| format!("cannot read {}", args.graphs.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "edges"))
        .collect();
    graph_paths.sort();
    if graph_paths.is_empty() {
        bail!("no *.edges files in {}", args.graphs.display());
    }

    let graphs: Vec<(String, Graph)> = graph_paths
        .iter()
        .map(|p| -> Result<_> {
            let loaded = io::read_edge_list(p)?;
            let name = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string());
            Ok((name, loaded.graph))
        })
        .collect::<Result<_>>()?;

    struct Row {
        graph: String,
        method: Method,
        strategy: Strategy,
        n: usize,
        removed: usize,
        rho: f64,
        area: f64,
    }

    let mut jobs = Vec::new();
    for (name, graph) in &graphs {
        for &method in &methods {
            for &strategy in &strategies {
                if method == Method::Corehd && strategy == Strategy::OnePass {
                    eprintln!("skipping corehd x one-pass on {name}: corehd is adaptive-only");
                    continue;
                }
                jobs.push((name, graph, method, strategy));
            }
        }
    }
    let ctx = MethodContext {
        model: model.as_ref(),
        ci_radius: Some(args.ci_radius),
    };
    let rows: Vec<Row> = parallel::map_slice(&jobs, |&(name, graph, method, strategy)| {
        let trace = dismantle(graph, method, strategy, args.theta, &ctx)
            .expect("combination validated above");
        Row {
            graph: name.clone(),
            method,
            strategy,
            n: trace.n,
            removed: trace.removal_order.len(),
            rho: trace.rho,
            area: trace.area,
        }
    });

    let mut csv = String::from("graph,method,strategy,n,removed,rho,area\n");
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.graph, row.method, row.strategy, row.n, row.removed, row.rho, row.area
        ));
    }
    for &method in &methods {
        for &strategy in &strategies {
            let group: Vec<&Row> = rows
                .iter()
                .filter(|r| r.method == method && r.strategy == strategy)
                .collect();
            if group.is_empty() {
                continue;
            }
            let mean_rho = group.iter().map(|r| r.rho).sum::<f64>() / group.len() as f64;
            let mean_area = group.iter().map(|r| r.area).sum::<f64>() / group.len() as f64;
            csv.push_str(&format!(
                "AVERAGE,{method},{strategy},,,{mean_rho},{mean_area}\n"
            ));
            println!(
                "{method} {strategy}: mean rho {:.4} ({:.2}%), mean area {:.2} over {} graphs",
                mean_rho,
                mean_rho * 100.0,
                mean_area,
                group.len()
            );
        }
    }
    io::write_atomic(&args.out, csv.as_bytes())?;
    println!("comparison table: {}", args.out.display());
    Ok(())
}
