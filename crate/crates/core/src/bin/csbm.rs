use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::Value;

use csbm_core::experiments::{
    compute_init, generate_dataset, preset, run_algorithm, run_experiment, summarize, AlgorithmSpec, Dataset,
    ExperimentConfig, GeneratorSpec, InitSpec, Method,
};
use csbm_core::io;
use csbm_core::metrics::{misclustering_rate, nmi};
use csbm_core::{Error, LabeledPartition, SparseSymmetric};

#[derive(Parser)]
#[command(name = "csbm", version, about = "Iterative-refinement clustering for networks with node covariates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a graph, its labels and (if any) covariates.
    Generate {
        #[arg(long, value_enum)]
        model: Model,
        /// JSON file with the model parameters.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_prefix: PathBuf,
    },
    /// Cluster a graph and/or covariates and write the labels.
    Cluster {
        #[arg(long, value_enum)]
        algo: Algo,
        #[arg(long)]
        graph: Option<PathBuf>,
        #[arg(long)]
        covariates: Option<PathBuf>,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        sigma: Option<f64>,
        /// Re-estimate σ from the current partition at every iteration.
        #[arg(long)]
        estimate_sigma: bool,
        /// em-emb, a-sc, l-sc, signed-sc, random or file:<path>.
        #[arg(long)]
        init: Option<String>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare predicted labels with the truth.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "nmi,error_rate")]
        metrics: Vec<Metric>,
    },
    /// Run a Monte Carlo batch from a preset or a JSON config.
    Experiment {
        #[arg(long, conflicts_with = "config", required_unless_present = "config")]
        preset: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Multiplies the number of nodes.
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write wall_time_ms = 0 so that reruns are byte-identical.
        #[arg(long)]
        no_timing: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Sbm,
    Cssbm,
    Csbm,
    Signed,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algo {
    IrLs,
    SirLs,
    IrLss,
    IrSsbm,
    IrMap,
    EmEmb,
    ASc,
    LSc,
    KSc,
    Kmeans,
}

impl Algo {
    fn method(self) -> Method {
        match self {
            Algo::IrLs => Method::IrLs,
            Algo::SirLs => Method::SIrLs,
            Algo::IrLss => Method::IrLss,
            Algo::IrSsbm => Method::IrSsbm,
            Algo::IrMap => Method::IrMap,
            Algo::EmEmb => Method::EmEmb,
            Algo::ASc => Method::ASc,
            Algo::LSc => Method::LSc,
            Algo::KSc => Method::KSc,
            Algo::Kmeans => Method::Kmeans,
        }
    }

    fn needs_graph(self) -> bool {
        !matches!(self, Algo::KSc | Algo::Kmeans)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Nmi,
    #[value(name = "error_rate")]
    ErrorRate,
}

enum Failure {
    Usage(String),
    Input(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e)
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate { model, config, seed, out_prefix } => generate(model, &config, seed, &out_prefix),
        Command::Cluster { algo, graph, covariates, k, sigma, estimate_sigma, init, iters, seed, out } => cluster(
            algo,
            graph.as_deref(),
            covariates.as_deref(),
            k,
            sigma,
            estimate_sigma,
            init.as_deref(),
            iters,
            seed,
            &out,
        ),
        Command::Evaluate { pred, truth, metrics } => evaluate(&pred, &truth, &metrics),
        Command::Experiment { preset, config, scale, reps, seed, no_timing, out } => {
            experiment(preset.as_deref(), config.as_deref(), scale, reps, seed, no_timing, &out)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn generate(model: Model, config: &Path, seed: u64, prefix: &Path) -> Result<(), Failure> {
    let mut doc: Value = io::read_config(config)?;
    let tag = match model {
        Model::Sbm => "sbm",
        Model::Cssbm => "cssbm",
        Model::Csbm => "csbm",
        Model::Signed => "signed",
    };
    let obj = doc
        .as_object_mut()
        .ok_or_else(|| Error::Config(format!("{}: expected a JSON object", config.display())))?;
    match obj.get("model") {
        Some(Value::String(m)) if m != tag => {
            return Err(usage(format!("config describes model `{m}` but --model is `{tag}`")))
        }
        _ => {
            obj.insert("model".into(), Value::from(tag));
        }
    }
    let spec: GeneratorSpec =
        serde_json::from_value(doc).map_err(|e| Error::Config(format!("{}: {e}", config.display())))?;
    let data = generate_dataset(&spec, seed)?;
    io::write_edge_list(&with_suffix(prefix, ".edges.tsv"), &data.graph)?;
    if let Some(z) = &data.truth {
        io::write_labels(&with_suffix(prefix, ".labels.txt"), z.labels())?;
    }
    if let Some(x) = &data.covariates {
        io::write_covariates(&with_suffix(prefix, ".covariates.csv"), x)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cluster(
    algo: Algo,
    graph: Option<&Path>,
    covariates: Option<&Path>,
    k: usize,
    sigma: Option<f64>,
    estimate_sigma: bool,
    init: Option<&str>,
    iters: Option<usize>,
    seed: u64,
    out: &Path,
) -> Result<(), Failure> {
    let method = algo.method();
    if algo.needs_graph() && graph.is_none() {
        return Err(usage("this algorithm needs --graph"));
    }
    if !algo.needs_graph() && covariates.is_none() {
        return Err(usage("this algorithm needs --covariates"));
    }
    if k == 0 {
        return Err(usage("--k must be at least 1"));
    }
    let x = covariates.map(io::read_covariates).transpose()?;
    let a = match graph {
        Some(g) => io::read_edge_list(g)?,
        None => SparseSymmetric::from_triplets(x.as_ref().map_or(0, |x| x.rows()), vec![])?,
    };
    if let Some(x) = &x {
        if x.rows() != a.n() {
            return Err(Error::Dimension(format!("{} covariate rows for a graph on {} nodes", x.rows(), a.n())).into());
        }
    }
    if k > a.n() {
        return Err(usage(format!("--k = {k} exceeds the number of nodes {}", a.n())));
    }
    let refines = method.refinement().is_some();
    if refines && method != Method::IrSsbm && x.is_some() && sigma.is_none() && !estimate_sigma {
        return Err(usage("covariates given: pass --sigma or --estimate-sigma"));
    }
    if let Some(s) = sigma {
        if !(s > 0.0) {
            return Err(usage("--sigma must be positive"));
        }
    }
    let data = Dataset { graph: a, covariates: x, truth: None, k, sigma };
    let mut spec = AlgorithmSpec::new(&format!("{method:?}"), method);
    spec.iters = iters;
    spec.estimate_sigma = estimate_sigma;

    let z0 = if refines {
        let init = init.unwrap_or(if method == Method::IrSsbm { "signed-sc" } else { "em-emb" });
        Some(initial_partition(init, &data, seed)?)
    } else {
        if init.is_some() {
            return Err(usage("--init only applies to refinement algorithms"));
        }
        None
    };
    let (labels, converged, used) = match run_algorithm(&spec, &data, z0.as_ref(), seed) {
        Ok(o) => (o.partition.into_labels(), o.converged, o.iters),
        Err(e) => match z0 {
            Some(z) => {
                eprintln!("warning: {e}; writing the initial partition");
                (z.into_labels(), false, 0)
            }
            None => return Err(e.into()),
        },
    };
    io::write_labels(out, &labels)?;
    eprintln!("iterations={used} converged={converged}");
    Ok(())
}

fn initial_partition(init: &str, data: &Dataset, seed: u64) -> Result<LabeledPartition, Failure> {
    let spec = match init {
        "em-emb" => InitSpec::EmEmb,
        "a-sc" => InitSpec::ASc,
        "l-sc" => InitSpec::LSc,
        "signed-sc" => InitSpec::SignedSc,
        "random" => InitSpec::Random,
        other => {
            let path = other
                .strip_prefix("file:")
                .ok_or_else(|| usage(format!("unknown --init `{other}`")))?;
            let labels = io::read_labels(Path::new(path))?;
            if labels.len() != data.graph.n() {
                return Err(Error::Dimension(format!("{} initial labels for {} nodes", labels.len(), data.graph.n())).into());
            }
            let z = LabeledPartition::new(labels, data.k)?;
            if let Some(e) = z.first_empty() {
                return Err(Error::EmptyCluster(e).into());
            }
            return Ok(z);
        }
    };
    Ok(compute_init(&spec, data, seed)?)
}

fn evaluate(pred: &Path, truth: &Path, metrics: &[Metric]) -> Result<(), Failure> {
    let p = io::read_labels(pred)?;
    let t = io::read_labels(truth)?;
    if p.len() != t.len() {
        return Err(Error::Dimension(format!("{} predicted labels but {} true labels", p.len(), t.len())).into());
    }
    let values: Vec<String> = metrics
        .iter()
        .map(|m| match m {
            Metric::Nmi => nmi(&p, &t),
            Metric::ErrorRate => misclustering_rate(&p, &t),
        })
        .map(|v| v.map(|v| format!("{v:?}")))
        .collect::<Result<_, _>>()?;
    println!("{}", values.join(","));
    Ok(())
}

fn summary_path(out: &Path) -> PathBuf {
    let s = out.to_string_lossy();
    let stem = s.strip_suffix(".csv").unwrap_or(&s);
    PathBuf::from(format!("{stem}.summary.csv"))
}

#[allow(clippy::too_many_arguments)]
fn experiment(
    name: Option<&str>,
    config: Option<&Path>,
    scale: Option<f64>,
    reps: Option<usize>,
    seed: Option<u64>,
    no_timing: bool,
    out: &Path,
) -> Result<(), Failure> {
    let mut cfg: ExperimentConfig = match (name, config) {
        (Some(name), None) => preset(name).map_err(|e| usage(e.to_string()))?,
        (None, Some(path)) => io::read_config(path)?,
        _ => return Err(usage("give exactly one of --preset and --config")),
    };
    if let Some(s) = scale {
        cfg.scale_n(s).map_err(|e| usage(e.to_string()))?;
    }
    if let Some(r) = reps {
        if r == 0 {
            return Err(usage("--reps must be at least 1"));
        }
        cfg.repetitions = r;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if no_timing {
        cfg.record_timing = false;
    }
    if cfg.heavy && scale.is_none() {
        eprintln!("note: `{}` is a full-scale run; --scale shrinks it", cfg.name);
    }
    let records = run_experiment(&cfg)?;
    io::write_results(out, &records)?;
    let summary = summarize(&records);
    io::write_summary(&summary_path(out), &summary)?;
    let failed = records.iter().filter(|r| !r.converged).count();
    eprintln!("{} records, {} without a fixed point or failed", records.len(), failed);
    Ok(())
}
