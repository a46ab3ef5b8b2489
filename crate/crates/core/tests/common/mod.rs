#![allow(dead_code)]

use std::path::Path;
use std::process::Command;

use csbm_core::linalg::{eigs_topk_abs, rng_from_seed, EigenOptions};
use csbm_core::metrics::{hamming, hungarian, loss_l, misclustering_rate, separation_profile};
use csbm_core::models::{expected_matrix, Connectivity};
use csbm_core::refine::{
    estimate_params, ir_cluster, ir_map_step, ir_ssbm_step, refine_step, sigma_spec, Refinement, RefineOptions,
    Variant,
};
use csbm_core::{DenseMatrix, Error, LabeledPartition, SparseSymmetric};
use nalgebra::DMatrix;
use rand::Rng;

pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

pub fn brute_force_min(cost: &[Vec<f64>]) -> f64 {
    permutations(cost.len())
        .iter()
        .map(|p| p.iter().enumerate().map(|(r, &c)| cost[r][c]).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Random integer cost matrices (K ≤ 5, many ties) and random label pairs
/// (K = 5, n = 40); returns the number of disagreements with brute force.
pub fn hungarian_failures(trials: usize, seed: u64) -> usize {
    let mut rng = rng_from_seed(seed);
    let mut failures = 0;
    for t in 0..trials {
        let k = 1 + (t % 5);
        let cost: Vec<Vec<f64>> =
            (0..k).map(|_| (0..k).map(|_| rng.random_range(0..10) as f64).collect()).collect();
        let got = hungarian(&cost).expect("square cost matrix");
        let realised: f64 = got.perm.iter().enumerate().map(|(r, &c)| cost[r][c]).sum();
        if got.total != brute_force_min(&cost) || realised != got.total {
            failures += 1;
        }

        let z: Vec<usize> = (0..40).map(|_| rng.random_range(0..5)).collect();
        let zh: Vec<usize> = (0..40).map(|_| rng.random_range(0..5)).collect();
        let best = permutations(5)
            .iter()
            .map(|p| z.iter().zip(&zh).filter(|(a, b)| p[**b] != **a).count())
            .min()
            .expect("120 permutations");
        let r = misclustering_rate(&zh, &z).expect("equal lengths");
        if (r - best as f64 / 40.0).abs() > 1e-12 {
            failures += 1;
        }
    }
    failures
}

/// Dense top-K eigenpairs against nalgebra's symmetric decomposition.
pub fn eigen_failures(trials: usize, seed: u64) -> usize {
    let mut rng = rng_from_seed(seed);
    let mut failures = 0;
    for _ in 0..trials {
        let n = rng.random_range(1..=50);
        let k = rng.random_range(1..=n.min(6));
        let mut dense = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                if rng.random_bool(0.6) {
                    let v: f64 = rng.random_range(-1.0..1.0);
                    dense[i * n + j] = v;
                    dense[j * n + i] = v;
                }
            }
        }
        let a = SparseSymmetric::from_dense(n, &dense).expect("symmetric");
        let ours = match eigs_topk_abs(&a, k, &EigenOptions::default()) {
            Ok(e) => e,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        let m = DMatrix::from_row_slice(n, n, &dense);
        let eig = m.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&x, &y| eig.eigenvalues[y].abs().total_cmp(&eig.eigenvalues[x].abs()));
        let mut ok = true;
        for (c, &idx) in order.iter().take(k).enumerate() {
            let lam = eig.eigenvalues[idx];
            if (ours.values[c] - lam).abs() > 1e-6 {
                ok = false;
                break;
            }
            let v = eig.eigenvectors.column(idx);
            let u = &ours.vectors[c];
            let dot: f64 = (0..n).map(|i| u[i] * v[i]).sum();
            let s = dot.signum();
            if (0..n).any(|i| (u[i] - s * v[i]).abs() > 1e-6) {
                ok = false;
                break;
            }
        }
        if !ok {
            failures += 1;
        }
    }
    failures
}

fn clamp(p: f64, eps: f64) -> f64 {
    p.clamp(eps, 1.0 - eps)
}

/// Criterion table `crit[i][k]` of the least-squares refinement built from
/// explicit W, WᵀAW and WᵀX products; `None` when IR-LSS sees no assortativity.
pub fn brute_force_criterion(
    a: &[Vec<f64>],
    x: Option<&[Vec<f64>]>,
    z: &[usize],
    k: usize,
    variant: Variant,
    sigma: f64,
    eps: f64,
) -> Option<Vec<Vec<f64>>> {
    let n = z.len();
    let sizes: Vec<f64> = (0..k).map(|c| z.iter().filter(|&&l| l == c).count() as f64).collect();
    let w: Vec<Vec<f64>> =
        (0..n).map(|i| (0..k).map(|c| if z[i] == c { 1.0 / sizes[c] } else { 0.0 }).collect()).collect();
    let aw: Vec<Vec<f64>> =
        (0..n).map(|i| (0..k).map(|c| (0..n).map(|j| a[i][j] * w[j][c]).sum()).collect()).collect();
    let pi: Vec<Vec<f64>> = (0..k)
        .map(|r| (0..k).map(|c| (0..n).map(|i| w[i][r] * aw[i][c]).sum()).collect())
        .collect();
    let mu: Option<Vec<Vec<f64>>> = x.map(|x| {
        let d = x[0].len();
        (0..k).map(|c| (0..d).map(|f| (0..n).map(|i| w[i][c] * x[i][f]).sum()).collect()).collect()
    });
    let weight: Vec<Vec<f64>> = match variant {
        Variant::IrLs => (0..k).map(|r| (0..k).map(|c| sizes[c] / clamp(pi[r][c], eps)).collect()).collect(),
        Variant::SIrLs => {
            let min_n = sizes.iter().copied().fold(f64::INFINITY, f64::min);
            let max_pi = pi.iter().flatten().map(|&p| clamp(p, eps)).fold(0.0, f64::max);
            vec![vec![min_n / max_pi; k]; k]
        }
        Variant::IrLss => {
            let p = clamp((0..k).map(|r| pi[r][r]).sum::<f64>() / k as f64, eps);
            let off: f64 = (0..k).flat_map(|r| (0..k).map(move |c| (r, c))).filter(|(r, c)| r != c).map(|(r, c)| pi[r][c]).sum();
            let q = clamp(off / (k * k - k) as f64, eps);
            if p <= q {
                return None;
            }
            let lam = n as f64 / (k as f64 * (p - q)) * ((p * (1.0 - q)) / (q * (1.0 - p))).ln();
            vec![vec![lam; k]; k]
        }
    };
    Some(
        (0..n)
            .map(|i| {
                (0..k)
                    .map(|c| {
                        let graph: f64 = (0..k).map(|l| (aw[i][l] - pi[c][l]).powi(2) * weight[c][l]).sum();
                        let cov = match (&mu, x) {
                            (Some(mu), Some(x)) => {
                                x[i].iter().zip(&mu[c]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (sigma * sigma)
                            }
                            _ => 0.0,
                        };
                        graph + cov
                    })
                    .collect()
            })
            .collect(),
    )
}

/// Accepts `label` when it attains the minimum of `costs` up to rounding, and
/// demands equality when the minimum is isolated.
pub fn consistent_with_argmin(costs: &[f64], label: usize) -> bool {
    let m = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * (1.0 + m.abs());
    let near: Vec<usize> = (0..costs.len()).filter(|&c| costs[c] <= m + tol).collect();
    near.contains(&label)
}

pub struct RandomInstance {
    pub a: SparseSymmetric,
    pub dense: Vec<Vec<f64>>,
    pub x: Option<DenseMatrix>,
    pub x_rows: Option<Vec<Vec<f64>>>,
    pub z: LabeledPartition,
}

/// A small random graph with a partition that has no empty cluster.
pub fn random_instance(rng: &mut impl Rng, n_max: usize, with_x: bool) -> RandomInstance {
    let n = rng.random_range(3..=n_max);
    let k = rng.random_range(2..=3.min(n));
    let mut labels: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        labels.swap(i, j);
    }
    let mut dense = vec![vec![0.0; n]; n];
    let mut t = Vec::new();
    let density: f64 = rng.random_range(0.2..0.9);
    for i in 0..n {
        for j in i..n {
            if (i != j || rng.random_bool(0.2)) && rng.random_bool(density) {
                dense[i][j] = 1.0;
                dense[j][i] = 1.0;
                t.push((i, j, 1.0));
            }
        }
    }
    let (x, x_rows) = if with_x {
        let d = rng.random_range(1..=2);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        (Some(DenseMatrix::from_rows(&rows).expect("rectangular")), Some(rows))
    } else {
        (None, None)
    };
    RandomInstance {
        a: SparseSymmetric::from_triplets(n, t).expect("valid triplets"),
        dense,
        x,
        x_rows,
        z: LabeledPartition::new(labels, k).expect("labels < k"),
    }
}

/// refine_step against the brute-force criterion on random instances with n ≤ 8.
pub fn refine_failures(trials: usize, seed: u64) -> usize {
    let mut rng = rng_from_seed(seed);
    let mut failures = 0;
    let variants = [Variant::IrLs, Variant::SIrLs, Variant::IrLss];
    for t in 0..trials {
        let inst = random_instance(&mut rng, 8, t % 2 == 0);
        let variant = variants[t % 3];
        let sigma: f64 = rng.random_range(0.3..2.0);
        let eps = 1.0 / (inst.z.n() as f64).powi(2);
        let oracle = brute_force_criterion(
            &inst.dense,
            inst.x_rows.as_deref(),
            inst.z.labels(),
            inst.z.k(),
            variant,
            sigma,
            eps,
        );
        let params = estimate_params(&inst.a, inst.x.as_ref(), &inst.z).expect("no empty cluster");
        let spec = sigma_spec(variant, &params, eps);
        let ok = match (oracle, spec) {
            (None, Err(Error::NonAssortative { .. })) => true,
            (Some(crit), Ok(spec)) => {
                let out = refine_step(&inst.a, inst.x.as_ref(), &params, &spec, sigma, &inst.z).expect("valid step");
                out.labels().iter().enumerate().all(|(i, &l)| consistent_with_argmin(&crit[i], l))
            }
            _ => false,
        };
        if !ok {
            failures += 1;
        }
    }
    failures
}

/// `h(z, z') ≤ l(z, z') / Δ²_min` on random partitions and separation profiles.
pub fn lemma_failures(trials: usize, seed: u64) -> usize {
    let mut rng = rng_from_seed(seed);
    let mut failures = 0;
    let mut done = 0;
    while done < trials {
        let k = rng.random_range(2..=5);
        let n = rng.random_range(1..=30);
        let mu: Vec<Vec<f64>> = (0..k).map(|_| (0..2).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
        let mut pi = vec![vec![0.0; k]; k];
        for a in 0..k {
            for b in a..k {
                let v = rng.random_range(0.0..1.0);
                pi[a][b] = v;
                pi[b][a] = v;
            }
        }
        let lambda = rng.random_range(0.0..5.0);
        let profile = separation_profile(&mu, &pi, lambda).expect("valid profile");
        if !(profile.delta_min > 0.0) {
            continue;
        }
        let z: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let z2: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let h = hamming(&z, &z2).expect("equal lengths") as f64;
        let l = loss_l(&z, &z2, &profile).expect("labels in range");
        if h > l / profile.delta_min * (1.0 + 1e-12) + 1e-12 {
            failures += 1;
        }
        done += 1;
    }
    failures
}

/// Noiseless data `A = Z Π Zᵀ`, `X_i = μ_{z_i}` for a three-community model.
pub fn noiseless_instance() -> (SparseSymmetric, DenseMatrix, LabeledPartition) {
    let labels: Vec<usize> = (0..36).map(|i| [0, 1, 2, 0, 0, 1][i % 6]).collect();
    let z = LabeledPartition::new(labels, 3).expect("labels < 3");
    let pi = Connectivity::new(&[vec![0.6, 0.1, 0.2], vec![0.1, 0.5, 0.05], vec![0.2, 0.05, 0.4]]).expect("valid");
    let a = expected_matrix(&z, &pi).expect("expected matrix");
    let centers = [[0.0, 1.0], [2.0, -1.0], [1.0, 1.5]];
    let x = DenseMatrix::from_rows(&z.labels().iter().map(|&l| centers[l].to_vec()).collect::<Vec<_>>())
        .expect("rectangular");
    (a, x, z)
}

/// Every refinement rule maps the true partition of noiseless data to itself;
/// returns the names of the rules that do not.
pub fn fixed_point_failures() -> Vec<String> {
    let (a, x, z) = noiseless_instance();
    let eps = 1.0 / (z.n() as f64).powi(2);
    let mut failed = Vec::new();
    for with_x in [true, false] {
        let xo = with_x.then_some(&x);
        let params = estimate_params(&a, xo, &z).expect("no empty cluster");
        for variant in [Variant::IrLs, Variant::SIrLs, Variant::IrLss] {
            let spec = sigma_spec(variant, &params, eps).expect("assortative");
            let step = refine_step(&a, xo, &params, &spec, 0.5, &z).expect("valid step");
            let (looped, trace) =
                ir_cluster(&a, xo, 3, 0.5, &z, 10, Refinement::LeastSquares(variant), &RefineOptions::default())
                    .expect("valid run");
            if step != z || looped != z || !trace.converged || trace.iterations != 1 {
                failed.push(format!("{variant:?} (covariates: {with_x})"));
            }
        }
        let map = ir_map_step(&a, xo, &params, 0.5, &z, eps).expect("valid step");
        let (looped, trace) =
            ir_cluster(&a, xo, 3, 0.5, &z, 10, Refinement::Map, &RefineOptions::default()).expect("valid run");
        if map != z || looped != z || !trace.converged {
            failed.push(format!("IR-MAP (covariates: {with_x})"));
        }
    }
    // signed: +1 within, -1 across communities, no flips
    let n = z.n();
    let mut t = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            t.push((i, j, if z.label(i) == z.label(j) { 1.0 } else { -1.0 }));
        }
    }
    let signed = SparseSymmetric::from_triplets(n, t).expect("valid triplets");
    let step = ir_ssbm_step(&signed, &z).expect("valid step");
    let (looped, trace) =
        ir_cluster(&signed, None, 3, 1.0, &z, 10, Refinement::Signed, &RefineOptions::default()).expect("valid run");
    if step != z || looped != z || !trace.converged {
        failed.push("IR-SSBM".into());
    }
    failed
}

pub fn run_cli(bin: &str, args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(bin).args(args).current_dir(dir).output().expect("spawn csbm")
}

/// Files in `dir`, sorted, with their bytes.
pub fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .expect("readable dir")
        .map(|e| {
            let e = e.expect("dir entry");
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).expect("readable file"))
        })
        .collect();
    files.sort();
    files
}

pub const FIG1_CONFIG: &str = r#"{
  "n": 300, "k": 3,
  "pi": [[0.032, 0.024, 0.001], [0.024, 0.032, 0.001], [0.001, 0.001, 0.024]],
  "membership": {"mode": "multinomial", "weights": [0.3333333333333333, 0.3333333333333333, 0.3333333333333334]},
  "centers": [[0, 0, 1], [-1, 1, 0], [0, 0, 1]],
  "sigma": 0.4472135954999579
}"#;

pub const SBM_CONFIG: &str = r#"{"n": 120, "k": 2, "pi": [[0.3, 0.05], [0.05, 0.3]]}"#;
pub const CSSBM_CONFIG: &str =
    r#"{"n": 120, "k": 2, "p": 0.3, "q": 0.05, "centers": [[0.0], [2.0]], "sigma": 1.0, "membership": {"mode": "balanced"}}"#;
pub const SIGNED_CONFIG: &str = r#"{"n": 120, "k": 2, "p": 0.3, "eta": 0.1}"#;
pub const TINY_EXPERIMENT: &str = r#"{
  "name": "tiny",
  "generator": {"model": "cssbm", "n": 80, "k": 2, "p": 0.3, "q": 0.05, "centers": [[0.0], [2.0]], "sigma": 1.0},
  "algorithms": [
    {"name": "IR-LS", "method": "ir-ls", "init": "em-emb"},
    {"name": "IR-LSS", "method": "ir-lss", "init": {"corrupted-truth": {"fraction": 0.1}}},
    {"name": "kmeans", "method": "kmeans"}
  ],
  "repetitions": 2,
  "seed": 11,
  "sweep": [{"param": "q", "values": [0.05, 0.1]}]
}"#;

/// Runs each CLI command twice in fresh directories with the same seed and
/// returns the commands whose outputs (files, stdout, exit code) differ.
pub fn cli_determinism_failures(bin: &str) -> Vec<String> {
    let setup = |dir: &Path| {
        for (name, text) in [
            ("fig1.json", FIG1_CONFIG),
            ("sbm.json", SBM_CONFIG),
            ("cssbm.json", CSSBM_CONFIG),
            ("signed.json", SIGNED_CONFIG),
            ("tiny.json", TINY_EXPERIMENT),
        ] {
            std::fs::write(dir.join(name), text).expect("writable temp dir");
        }
    };
    let mut commands: Vec<Vec<String>> = Vec::new();
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    for (model, cfg) in [("csbm", "fig1.json"), ("sbm", "sbm.json"), ("cssbm", "cssbm.json"), ("signed", "signed.json")] {
        commands.push(s(&["generate", "--model", model, "--config", cfg, "--seed", "5", "--out-prefix", model]));
    }
    let graph_cov = ["--graph", "csbm.edges.tsv", "--covariates", "csbm.covariates.csv", "--k", "3", "--seed", "9"];
    for algo in ["ir-ls", "sir-ls", "ir-lss", "ir-map"] {
        for init in ["em-emb", "a-sc", "l-sc", "random"] {
            let mut c = s(&["cluster", "--algo", algo, "--init", init, "--sigma", "0.4472135954999579"]);
            c.extend(s(&graph_cov));
            c.extend(s(&["--out", &format!("{algo}-{init}.txt")]));
            commands.push(c);
        }
    }
    let mut c = s(&["cluster", "--algo", "ir-ls", "--estimate-sigma", "--init", "file:csbm.labels.txt"]);
    c.extend(s(&graph_cov));
    c.extend(s(&["--out", "file-init.txt"]));
    commands.push(c);
    for algo in ["em-emb", "a-sc", "l-sc", "k-sc"] {
        let mut c = s(&["cluster", "--algo", algo]);
        c.extend(s(&graph_cov));
        c.extend(s(&["--out", &format!("{algo}.txt")]));
        commands.push(c);
    }
    commands.push(s(&["cluster", "--algo", "kmeans", "--covariates", "csbm.covariates.csv", "--k", "3", "--seed", "9", "--out", "kmeans.txt"]));
    commands.push(s(&["cluster", "--algo", "ir-ssbm", "--graph", "signed.edges.tsv", "--k", "2", "--seed", "9", "--out", "ssbm.txt"]));
    commands.push(s(&["evaluate", "--pred", "ir-ls-em-emb.txt", "--truth", "csbm.labels.txt"]));
    commands.push(s(&["experiment", "--config", "tiny.json", "--seed", "3", "--no-timing", "--out", "tiny.csv"]));
    commands.push(s(&["experiment", "--preset", "fig1_csbm", "--scale", "0.1", "--reps", "2", "--seed", "3", "--no-timing", "--out", "fig1.csv"]));

    let runs: Vec<Vec<(i32, Vec<u8>, Vec<(String, Vec<u8>)>)>> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().expect("temp dir");
            setup(dir.path());
            commands
                .iter()
                .map(|c| {
                    let args: Vec<&str> = c.iter().map(String::as_str).collect();
                    let out = run_cli(bin, &args, dir.path());
                    (out.status.code().unwrap_or(-1), out.stdout, snapshot(dir.path()))
                })
                .collect()
        })
        .collect();
    commands
        .iter()
        .enumerate()
        .filter(|(i, _)| runs[0][*i] != runs[1][*i] || runs[0][*i].0 != 0)
        .map(|(_, c)| c.join(" "))
        .collect()
}
