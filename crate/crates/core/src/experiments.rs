//! Deterministic Monte Carlo harness and the named presets.

use web_time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::init::{
    default_orl_grid, em_emb, gaussian_kernel, median_bandwidth, orl_sc, signed_spectral_init, spectral_cluster,
    EmEmbOptions, SpectralMode,
};
use crate::linalg::random::derive_seed;
use crate::linalg::{kmeans, rng_from_seed, DenseMatrix, KmeansOptions};
use crate::metrics::evaluate;
use crate::models::{
    generate_covariates, generate_partition, generate_sbm, generate_signed_sbm, Connectivity, CovariateSpec,
    Membership, SignedSbmSpec,
};
use crate::partition::LabeledPartition;
use crate::refine::{default_iterations, ir_cluster, Refinement, RefineOptions, Variant};
use crate::SymmetricGraph;

const TAG_DATA: u64 = 0xd47a;
const TAG_INIT: u64 = 0x1417;
const TAG_ALGO: u64 = 0xa160;

/// Data-generating model. Field names double as sweep parameter names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Sbm {
        n: usize,
        k: usize,
        pi: Vec<Vec<f64>>,
        #[serde(default)]
        membership: Membership,
        #[serde(default)]
        self_loops: bool,
    },
    /// Contextual SBM with a general connectivity matrix.
    Csbm {
        n: usize,
        k: usize,
        pi: Vec<Vec<f64>>,
        #[serde(default)]
        membership: Membership,
        centers: Vec<Vec<f64>>,
        sigma: f64,
    },
    /// Contextual SBM with `p` within and `q` across communities.
    Cssbm {
        n: usize,
        k: usize,
        p: f64,
        q: f64,
        #[serde(default)]
        membership: Membership,
        centers: Vec<Vec<f64>>,
        sigma: f64,
    },
    Signed {
        n: usize,
        k: usize,
        p: f64,
        eta: f64,
        #[serde(default)]
        membership: Membership,
    },
    /// Balanced CSSBM whose SNR equals `ratio · log n`, split evenly between
    /// the graph and the covariates (`q' = p'/4`, σ = 1).
    SnrCssbm { n: usize, k: usize, ratio: f64 },
    /// Two communities, `p = 4c log n / n`, `q = c log n / n`, 1-D centers 1
    /// and 2 with `σ² = 1 / (2c log n)`.
    RandomInitSnr { n: usize, c: f64 },
}

impl GeneratorSpec {
    pub fn n(&self) -> usize {
        match self {
            GeneratorSpec::Sbm { n, .. }
            | GeneratorSpec::Csbm { n, .. }
            | GeneratorSpec::Cssbm { n, .. }
            | GeneratorSpec::Signed { n, .. }
            | GeneratorSpec::SnrCssbm { n, .. }
            | GeneratorSpec::RandomInitSnr { n, .. } => *n,
        }
    }

    fn n_mut(&mut self) -> &mut usize {
        match self {
            GeneratorSpec::Sbm { n, .. }
            | GeneratorSpec::Csbm { n, .. }
            | GeneratorSpec::Cssbm { n, .. }
            | GeneratorSpec::Signed { n, .. }
            | GeneratorSpec::SnrCssbm { n, .. }
            | GeneratorSpec::RandomInitSnr { n, .. } => n,
        }
    }

    pub fn k(&self) -> usize {
        match self {
            GeneratorSpec::Sbm { k, .. }
            | GeneratorSpec::Csbm { k, .. }
            | GeneratorSpec::Cssbm { k, .. }
            | GeneratorSpec::Signed { k, .. }
            | GeneratorSpec::SnrCssbm { k, .. } => *k,
            GeneratorSpec::RandomInitSnr { .. } => 2,
        }
    }

    /// Connectivity and covariate model in explicit form, for generators that have one.
    pub fn explicit(&self) -> Result<Option<(Connectivity, Option<CovariateSpec>, Membership)>> {
        let lognn = |n: usize| (n as f64).ln() / n as f64;
        Ok(Some(match self {
            GeneratorSpec::Sbm { pi, membership, .. } => (Connectivity::new(pi)?, None, membership.clone()),
            GeneratorSpec::Csbm { pi, membership, centers, sigma, .. } => (
                Connectivity::new(pi)?,
                Some(CovariateSpec { centers: centers.clone(), sigma: *sigma }),
                membership.clone(),
            ),
            GeneratorSpec::Cssbm { k, p, q, membership, centers, sigma, .. } => (
                Connectivity::symmetric(*k, *p, *q)?,
                Some(CovariateSpec { centers: centers.clone(), sigma: *sigma }),
                membership.clone(),
            ),
            GeneratorSpec::Signed { .. } => return Ok(None),
            GeneratorSpec::SnrCssbm { n, k, ratio } => {
                if *k < 2 || !(*ratio > 0.0) {
                    return Err(Error::param("snr_cssbm needs K >= 2 and ratio > 0"));
                }
                let p_prime = 2.0 * *k as f64 * ratio;
                let p = p_prime * lognn(*n);
                let q = p / 4.0;
                let gap = (4.0 * ratio * (*n as f64).ln()).sqrt();
                let centers = (0..*k)
                    .map(|a| (0..*k).map(|b| if a == b { gap / 2f64.sqrt() } else { 0.0 }).collect())
                    .collect();
                (
                    Connectivity::symmetric(*k, p, q)?,
                    Some(CovariateSpec { centers, sigma: 1.0 }),
                    Membership::Balanced,
                )
            }
            GeneratorSpec::RandomInitSnr { n, c } => {
                if !(*c > 0.0) {
                    return Err(Error::param("random_init_snr needs c > 0"));
                }
                let q = c * lognn(*n);
                let sigma = (1.0 / (2.0 * c * (*n as f64).ln())).sqrt();
                (
                    Connectivity::symmetric(2, 4.0 * q, q)?,
                    Some(CovariateSpec { centers: vec![vec![1.0], vec![2.0]], sigma }),
                    Membership::Multinomial { weights: vec![0.5, 0.5] },
                )
            }
        }))
    }
}

/// One generated instance shared by every algorithm of a cell.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: SymmetricGraph,
    pub covariates: Option<DenseMatrix>,
    pub truth: Option<LabeledPartition>,
    pub k: usize,
    /// Covariate noise scale, when known.
    pub sigma: Option<f64>,
}

pub fn generate_dataset(spec: &GeneratorSpec, seed: u64) -> Result<Dataset> {
    let mut rng = rng_from_seed(seed);
    let k = spec.k();
    if let GeneratorSpec::Signed { n, k, p, eta, membership } = spec {
        let s = SignedSbmSpec { n: *n, k: *k, p: *p, eta: *eta, membership: membership.clone() };
        let (graph, z) = generate_signed_sbm(&s, &mut rng)?;
        return Ok(Dataset { graph, covariates: None, truth: Some(z), k: *k, sigma: None });
    }
    let (pi, cov, membership) = spec.explicit()?.expect("explicit form exists for block models");
    if pi.k() != k {
        return Err(Error::dim(format!("Pi is {0}x{0} but K = {k}", pi.k())));
    }
    let self_loops = matches!(spec, GeneratorSpec::Sbm { self_loops: true, .. });
    let z = generate_partition(spec.n(), k, &membership, &mut rng)?;
    let graph = generate_sbm(&z, &pi, self_loops, &mut rng)?;
    let (covariates, sigma) = match cov {
        Some(c) => (Some(generate_covariates(&z, &c, &mut rng)?), Some(c.sigma)),
        None => (None, None),
    };
    Ok(Dataset { graph, covariates, truth: Some(z), k, sigma })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    IrLs,
    #[serde(rename = "sir-ls")]
    SIrLs,
    IrLss,
    IrSsbm,
    IrMap,
    EmEmb,
    ASc,
    LSc,
    KSc,
    OrlSc,
    SignedSc,
    Kmeans,
}

impl Method {
    pub fn refinement(self) -> Option<Refinement> {
        Some(match self {
            Method::IrLs => Refinement::LeastSquares(Variant::IrLs),
            Method::SIrLs => Refinement::LeastSquares(Variant::SIrLs),
            Method::IrLss => Refinement::LeastSquares(Variant::IrLss),
            Method::IrSsbm => Refinement::Signed,
            Method::IrMap => Refinement::Map,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitSpec {
    EmEmb,
    ASc,
    LSc,
    SignedSc,
    Random,
    Truth,
    /// The truth with `fraction · n` nodes moved to a different community.
    CorruptedTruth { fraction: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    /// Label written to the `algo` column.
    pub name: String,
    pub method: Method,
    /// Initial partition for refinement methods; defaults to EM-Emb.
    #[serde(default)]
    pub init: Option<InitSpec>,
    /// Refinement rounds; defaults to `⌈3 log₂ n⌉`.
    #[serde(default)]
    pub iters: Option<usize>,
    /// Overrides the generator's σ.
    #[serde(default)]
    pub sigma: Option<f64>,
    #[serde(default)]
    pub estimate_sigma: bool,
}

impl AlgorithmSpec {
    pub fn new(name: &str, method: Method) -> Self {
        Self { name: name.into(), method, init: None, iters: None, sigma: None, estimate_sigma: false }
    }

    pub fn with_init(mut self, init: InitSpec) -> Self {
        self.init = Some(init);
        self
    }

    pub fn with_iters(mut self, iters: usize) -> Self {
        self.iters = Some(iters);
        self
    }

    fn init_spec(&self) -> Option<InitSpec> {
        self.method.refinement().map(|_| self.init.clone().unwrap_or(InitSpec::EmEmb))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    /// A field of the generator, e.g. `eta` or `n`.
    pub param: String,
    pub values: Vec<Value>,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub generator: GeneratorSpec,
    pub algorithms: Vec<AlgorithmSpec>,
    pub repetitions: usize,
    pub seed: u64,
    /// Axes are combined as a cartesian product, first axis outermost.
    #[serde(default)]
    pub sweep: Vec<SweepAxis>,
    #[serde(default)]
    pub output: Option<String>,
    /// When false every `wall_time_ms` is written as 0 so that reruns are byte-identical.
    #[serde(default = "default_true")]
    pub record_timing: bool,
    /// Full-scale runs that take well beyond a few minutes.
    #[serde(default)]
    pub heavy: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be >= 1".into()));
        }
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithms listed".into()));
        }
        for axis in &self.sweep {
            if axis.values.is_empty() {
                return Err(Error::Config(format!("sweep axis `{}` has no values", axis.param)));
            }
        }
        for cell in self.cells()? {
            cell.generator.explicit()?;
        }
        Ok(())
    }

    /// Multiplies `n` of the generator and of any `n` sweep axis.
    pub fn scale_n(&mut self, scale: f64) -> Result<()> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Config("scale must be positive".into()));
        }
        let k = self.generator.k();
        let scaled = |n: usize| ((n as f64 * scale).round() as usize).max(2 * k);
        let n = self.generator.n_mut();
        *n = scaled(*n);
        for axis in self.sweep.iter_mut().filter(|a| a.param == "n") {
            for v in axis.values.iter_mut() {
                let n = v.as_u64().ok_or_else(|| Error::Config("sweep values for `n` must be integers".into()))?;
                *v = Value::from(scaled(n as usize));
            }
        }
        Ok(())
    }

    pub fn sweep_param(&self) -> String {
        self.sweep.iter().map(|a| a.param.as_str()).collect::<Vec<_>>().join("|")
    }

    /// The generator of every sweep cell, in output order.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let mut cells = vec![Cell { value: String::new(), generator: self.generator.clone() }];
        for axis in &self.sweep {
            let mut next = Vec::with_capacity(cells.len() * axis.values.len());
            for cell in &cells {
                for v in &axis.values {
                    let generator = override_field(&cell.generator, &axis.param, v)?;
                    let value = if cell.value.is_empty() {
                        v.to_string()
                    } else {
                        format!("{}|{}", cell.value, v)
                    };
                    next.push(Cell { value, generator });
                }
            }
            cells = next;
        }
        Ok(cells)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub value: String,
    pub generator: GeneratorSpec,
}

fn override_field(spec: &GeneratorSpec, field: &str, value: &Value) -> Result<GeneratorSpec> {
    let mut json = serde_json::to_value(spec).map_err(|e| Error::Config(e.to_string()))?;
    let obj = json.as_object_mut().expect("generator serializes to an object");
    if field == "model" || !obj.contains_key(field) {
        return Err(Error::Config(format!("generator has no sweepable field `{field}`")));
    }
    obj.insert(field.to_string(), value.clone());
    serde_json::from_value(json).map_err(|e| Error::Config(format!("sweep value {value} for `{field}`: {e}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub sweep_param: String,
    pub sweep_value: String,
    pub run: usize,
    pub algo: String,
    pub seed: u64,
    pub nmi: f64,
    pub error_rate: f64,
    pub iters: usize,
    pub converged: bool,
    pub wall_time_ms: f64,
}

pub fn compute_init(init: &InitSpec, data: &Dataset, seed: u64) -> Result<LabeledPartition> {
    let (a, k) = (&data.graph, data.k);
    match init {
        InitSpec::EmEmb => em_emb(a, data.covariates.as_ref(), k, &EmEmbOptions { seed, ..Default::default() }),
        InitSpec::ASc => spectral_cluster(a, k, SpectralMode::Adjacency, seed),
        InitSpec::LSc => spectral_cluster(a, k, SpectralMode::SymLaplacian, seed),
        InitSpec::SignedSc => signed_spectral_init(a, k, seed),
        InitSpec::Random => random_partition(a.n(), k, seed),
        InitSpec::Truth => data.truth.clone().ok_or_else(|| Error::param("truth init needs ground truth")),
        InitSpec::CorruptedTruth { fraction } => {
            let truth = data.truth.as_ref().ok_or_else(|| Error::param("corrupted-truth init needs ground truth"))?;
            corrupt(truth, *fraction, seed)
        }
    }
}

/// i.i.d. uniform labels, redrawn until no community is empty.
pub fn random_partition(n: usize, k: usize, seed: u64) -> Result<LabeledPartition> {
    let mut rng = rng_from_seed(seed);
    for _ in 0..100 {
        let z = generate_partition(n, k, &Membership::Uniform, &mut rng)?;
        if z.first_empty().is_none() {
            return Ok(z);
        }
    }
    Err(Error::Degenerate(format!("could not draw a random partition of {n} nodes with {k} non-empty clusters")))
}

/// Moves `round(fraction · n)` distinct nodes to a uniformly chosen other community.
pub fn corrupt(truth: &LabeledPartition, fraction: f64, seed: u64) -> Result<LabeledPartition> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::param("corruption fraction must lie in [0, 1]"));
    }
    let (n, k) = (truth.n(), truth.k());
    if k < 2 {
        return Ok(truth.clone());
    }
    let mut rng = rng_from_seed(seed);
    let m = (fraction * n as f64).round() as usize;
    let mut labels = truth.labels().to_vec();
    for i in rand::seq::index::sample(&mut rng, n, m) {
        labels[i] = (labels[i] + 1 + rng.random_range(0..k - 1)) % k;
    }
    LabeledPartition::new(labels, k)
}

#[derive(Debug, Clone)]
pub struct AlgorithmOutcome {
    pub partition: LabeledPartition,
    pub iters: usize,
    /// Refinement reached a fixed point; always true for one-shot methods.
    pub converged: bool,
}

fn need_covariates(data: &Dataset, what: &str) -> Result<DenseMatrix> {
    data.covariates
        .clone()
        .filter(|x| x.cols() > 0)
        .ok_or_else(|| Error::param(format!("{what} requires covariates")))
}

/// Runs one algorithm. Refinement methods need `init`.
pub fn run_algorithm(
    spec: &AlgorithmSpec,
    data: &Dataset,
    init: Option<&LabeledPartition>,
    seed: u64,
) -> Result<AlgorithmOutcome> {
    let (a, k) = (&data.graph, data.k);
    if let Some(method) = spec.method.refinement() {
        let z0 = init.ok_or_else(|| Error::param(format!("{} needs an initial partition", spec.name)))?;
        let x = data.covariates.as_ref().filter(|x| x.cols() > 0);
        let sigma = match (x, spec.sigma.or(data.sigma), spec.estimate_sigma) {
            (Some(_), None, false) => {
                return Err(Error::param("covariates present: give sigma or enable sigma estimation"))
            }
            (_, s, _) => s.unwrap_or(1.0),
        };
        let opts = RefineOptions { estimate_sigma: spec.estimate_sigma, ..Default::default() };
        let iters = spec.iters.unwrap_or_else(|| default_iterations(a.n()));
        let (partition, trace) = ir_cluster(a, x, k, sigma, z0, iters, method, &opts)?;
        return Ok(AlgorithmOutcome { partition, iters: trace.iterations, converged: trace.converged });
    }
    let partition = match spec.method {
        Method::EmEmb => compute_init(&InitSpec::EmEmb, data, seed)?,
        Method::ASc => compute_init(&InitSpec::ASc, data, seed)?,
        Method::LSc => compute_init(&InitSpec::LSc, data, seed)?,
        Method::SignedSc => compute_init(&InitSpec::SignedSc, data, seed)?,
        Method::KSc => {
            let x = need_covariates(data, "k-sc")?;
            let kmat = gaussian_kernel(&x, median_bandwidth(&x))?;
            spectral_cluster(&kmat, k, SpectralMode::SymLaplacian, seed)?
        }
        Method::OrlSc => {
            let x = need_covariates(data, "orl-sc")?;
            let truth = data.truth.as_ref().ok_or_else(|| Error::param("orl-sc needs ground truth"))?;
            let kmat = gaussian_kernel(&x, median_bandwidth(&x))?;
            let grid = default_orl_grid(a, &kmat);
            orl_sc(a, &kmat, k, truth, &grid, seed)?.0
        }
        Method::Kmeans => {
            let x = need_covariates(data, "kmeans")?;
            kmeans(&x, k, &KmeansOptions { seed, ..Default::default() })?.partition
        }
        _ => unreachable!("refinement methods handled above"),
    };
    Ok(AlgorithmOutcome { partition, iters: 0, converged: true })
}

fn cell_records(config: &ExperimentConfig, sweep_idx: usize, cell: &Cell, rep: usize) -> Result<Vec<RunRecord>> {
    let seed = derive_seed(config.seed, &[sweep_idx as u64, rep as u64, TAG_DATA]);
    let init_seed = derive_seed(config.seed, &[sweep_idx as u64, rep as u64, TAG_INIT]);
    let algo_seed = derive_seed(config.seed, &[sweep_idx as u64, rep as u64, TAG_ALGO]);
    let data = generate_dataset(&cell.generator, seed)?;
    let truth = data.truth.clone().expect("generated data carries the truth");
    let fallback = LabeledPartition::new_unchecked(vec![0; truth.n()], data.k);

    let mut inits: Vec<(InitSpec, Option<LabeledPartition>)> = Vec::new();
    for spec in &config.algorithms {
        if let Some(init) = spec.init_spec() {
            if !inits.iter().any(|(i, _)| *i == init) {
                let z = compute_init(&init, &data, init_seed).ok();
                inits.push((init, z));
            }
        }
    }

    let sweep_param = config.sweep_param();
    let mut out = Vec::with_capacity(config.algorithms.len());
    for spec in &config.algorithms {
        let init = spec
            .init_spec()
            .and_then(|i| inits.iter().find(|(j, _)| *j == i).and_then(|(_, z)| z.clone()));
        let start = Instant::now();
        let result = match (spec.init_spec(), &init) {
            (Some(_), None) => Err(Error::Degenerate("initialisation failed".into())),
            _ => run_algorithm(spec, &data, init.as_ref(), algo_seed),
        };
        let elapsed = start.elapsed().as_secs_f64() * 1e3;
        let (partition, iters, converged) = match result {
            Ok(o) => (o.partition, o.iters, o.converged),
            Err(_) => (init.unwrap_or_else(|| fallback.clone()), 0, false),
        };
        let (nmi, error_rate) = evaluate(&partition, &truth)?;
        out.push(RunRecord {
            sweep_param: sweep_param.clone(),
            sweep_value: cell.value.clone(),
            run: rep,
            algo: spec.name.clone(),
            seed,
            nmi,
            error_rate,
            iters,
            converged,
            wall_time_ms: if config.record_timing { elapsed } else { 0.0 },
        });
    }
    Ok(out)
}

/// Runs every (sweep cell × repetition) in parallel; all algorithms of a cell
/// see the same generated data. Records come back ordered by (cell, run, algorithm).
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let cells = config.cells()?;
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..config.repetitions).map(move |r| (c, r)))
        .collect();
    let results: Vec<Result<Vec<RunRecord>>> = jobs
        .par_iter()
        .map(|&(c, r)| cell_records(config, c, &cells[c], r))
        .collect();
    let mut out = Vec::with_capacity(jobs.len() * config.algorithms.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub sweep_param: String,
    pub sweep_value: String,
    pub algo: String,
    pub count: usize,
    pub nmi_mean: f64,
    pub nmi_sd: f64,
    pub nmi_min: f64,
    pub nmi_max: f64,
    pub error_rate_mean: f64,
    pub error_rate_sd: f64,
    pub error_rate_min: f64,
    pub error_rate_max: f64,
    pub exact_recovery: f64,
    pub wall_time_ms_mean: f64,
}

fn moments(v: &[f64]) -> (f64, f64, f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 {
        (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (mean, sd, min, max)
}

/// One row per (sweep value, algorithm), in order of first appearance.
pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut groups: Vec<((&str, &str, &str), Vec<&RunRecord>)> = Vec::new();
    for r in records {
        let key = (r.sweep_param.as_str(), r.sweep_value.as_str(), r.algo.as_str());
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, g)) => g.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    groups
        .into_iter()
        .map(|((param, value, algo), g)| {
            let nmi: Vec<f64> = g.iter().map(|r| r.nmi).collect();
            let err: Vec<f64> = g.iter().map(|r| r.error_rate).collect();
            let (nmi_mean, nmi_sd, nmi_min, nmi_max) = moments(&nmi);
            let (error_rate_mean, error_rate_sd, error_rate_min, error_rate_max) = moments(&err);
            let count = g.len();
            SummaryRow {
                sweep_param: param.into(),
                sweep_value: value.into(),
                algo: algo.into(),
                count,
                nmi_mean,
                nmi_sd,
                nmi_min,
                nmi_max,
                error_rate_mean,
                error_rate_sd,
                error_rate_min,
                error_rate_max,
                exact_recovery: err.iter().filter(|&&e| e == 0.0).count() as f64 / count as f64,
                wall_time_ms_mean: g.iter().map(|r| r.wall_time_ms).sum::<f64>() / count as f64,
            }
        })
        .collect()
}

pub const PRESETS: &[&str] = &[
    "fig1_csbm",
    "fig3_signed",
    "fig3_signed_ci",
    "signed_p003",
    "heterophilic",
    "rank_deficient",
    "random_init_snr",
    "threshold_phase",
];

fn scaled(m: [[f64; 3]; 3], s: f64) -> Vec<Vec<f64>> {
    m.iter().map(|r| r.iter().map(|x| s * x).collect()).collect()
}

fn fig1_generator(pi: Vec<Vec<f64>>) -> GeneratorSpec {
    GeneratorSpec::Csbm {
        n: 1000,
        k: 3,
        pi,
        membership: Membership::Multinomial { weights: vec![1.0 / 3.0; 3] },
        centers: vec![vec![0.0, 0.0, 1.0], vec![-1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        sigma: 0.2f64.sqrt(),
    }
}

fn covariate_lineup() -> Vec<AlgorithmSpec> {
    vec![
        AlgorithmSpec::new("IR-LS", Method::IrLs).with_init(InitSpec::EmEmb),
        AlgorithmSpec::new("sIR-LS", Method::SIrLs).with_init(InitSpec::EmEmb),
        AlgorithmSpec::new("IR-MAP", Method::IrMap).with_init(InitSpec::EmEmb),
        AlgorithmSpec::new("EM-Emb", Method::EmEmb),
        AlgorithmSpec::new("ORL-SC", Method::OrlSc),
        AlgorithmSpec::new("L-SC", Method::LSc),
        AlgorithmSpec::new("K-SC", Method::KSc),
    ]
}

fn signed(name: &str, n: usize, k: usize, p: f64, reps: usize, heavy: bool) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        generator: GeneratorSpec::Signed { n, k, p, eta: 0.05, membership: Membership::Uniform },
        algorithms: vec![
            AlgorithmSpec::new("Signed-SC", Method::SignedSc),
            AlgorithmSpec::new("IR-SSBM", Method::IrSsbm).with_init(InitSpec::SignedSc).with_iters(20),
        ],
        repetitions: reps,
        seed: 0,
        sweep: vec![SweepAxis {
            param: "eta".into(),
            values: (1..=9).map(|i| Value::from(i as f64 * 5.0 / 100.0)).collect(),
        }],
        output: None,
        record_timing: true,
        heavy,
    }
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let base = |name: &str, generator, algorithms, repetitions| ExperimentConfig {
        name: name.into(),
        generator,
        algorithms,
        repetitions,
        seed: 0,
        sweep: vec![],
        output: None,
        record_timing: true,
        heavy: false,
    };
    Ok(match name {
        "fig1_csbm" => base(
            name,
            fig1_generator(scaled([[1.6, 1.2, 0.05], [1.2, 1.6, 0.05], [0.05, 0.05, 1.2]], 0.02)),
            covariate_lineup(),
            40,
        ),
        "rank_deficient" => base(
            name,
            fig1_generator(scaled([[1.5, 1.5, 0.05], [1.5, 1.5, 0.05], [0.05, 0.05, 1.5]], 0.02)),
            covariate_lineup(),
            40,
        ),
        "fig3_signed" => signed(name, 10_000, 20, 0.01, 20, true),
        "fig3_signed_ci" => signed(name, 2000, 5, 0.04, 10, false),
        "signed_p003" => signed(name, 10_000, 20, 0.03, 20, true),
        "heterophilic" => base(
            name,
            GeneratorSpec::Sbm {
                n: 1000,
                k: 3,
                pi: scaled([[0.2, 0.05, 0.1], [0.05, 0.15, 0.05], [0.1, 0.05, 0.03]], 1.0),
                membership: Membership::Uniform,
                self_loops: false,
            },
            vec![
                AlgorithmSpec::new("A-SC", Method::ASc),
                AlgorithmSpec::new("IR-LS", Method::IrLs).with_init(InitSpec::ASc),
                AlgorithmSpec::new("IR-MAP", Method::IrMap).with_init(InitSpec::ASc),
                AlgorithmSpec::new("IR-MAP(1)", Method::IrMap).with_init(InitSpec::ASc).with_iters(1),
            ],
            40,
        ),
        "random_init_snr" => ExperimentConfig {
            sweep: vec![SweepAxis {
                param: "c".into(),
                values: [0.25, 0.375, 0.5, 0.625, 0.75, 1.0].into_iter().map(Value::from).collect(),
            }],
            ..base(
                name,
                GeneratorSpec::RandomInitSnr { n: 1000, c: 0.5 },
                vec![
                    AlgorithmSpec::new("IR-LS", Method::IrLs).with_init(InitSpec::Random),
                    AlgorithmSpec::new("IR-LSS", Method::IrLss).with_init(InitSpec::Random),
                ],
                20,
            )
        },
        "threshold_phase" => ExperimentConfig {
            sweep: vec![
                SweepAxis { param: "n".into(), values: vec![Value::from(500), Value::from(1000)] },
                SweepAxis {
                    param: "ratio".into(),
                    values: [0.5, 0.75, 1.0, 1.25, 1.5, 2.0].into_iter().map(Value::from).collect(),
                },
            ],
            ..base(
                name,
                GeneratorSpec::SnrCssbm { n: 1000, k: 2, ratio: 1.0 },
                vec![AlgorithmSpec::new("IR-LSS", Method::IrLss).with_init(InitSpec::EmEmb)],
                20,
            )
        },
        _ => {
            return Err(Error::Config(format!(
                "unknown preset `{name}`; available: {}",
                PRESETS.join(", ")
            )))
        }
    })
}
