//! Browser bindings. Each entry point takes plain numbers and returns a JSON
//! document for the page to render.

use csbm_core::experiments::{
    compute_init, generate_dataset, run_algorithm, AlgorithmSpec, Dataset, GeneratorSpec, InitSpec, Method,
};
use csbm_core::linalg::derive_seed;
use csbm_core::metrics::evaluate;
use csbm_core::models::Membership;
use csbm_core::refine::{default_iterations, ir_cluster, RefineOptions, Refinement, Variant};
use csbm_core::{Error, Result};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn finish(result: Result<Value>) -> std::result::Result<String, JsValue> {
    result.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e.to_string()))
}

fn scores(data: &Dataset, z: &csbm_core::LabeledPartition) -> Result<Value> {
    let truth = data.truth.as_ref().ok_or_else(|| Error::InvalidParameter("no ground truth".into()))?;
    let (nmi, err) = evaluate(z, truth)?;
    Ok(json!({ "nmi": nmi, "error_rate": err }))
}

/// CSSBM with `p = a log n / n`, `q = b log n / n` and centers `gap · e_k`.
pub fn csbm_instance(n: usize, k: usize, a: f64, b: f64, gap: f64) -> GeneratorSpec {
    let scale = (n as f64).ln() / n as f64;
    let centers = (0..k).map(|c| (0..k).map(|j| if j == c { gap } else { 0.0 }).collect()).collect();
    GeneratorSpec::Cssbm {
        n,
        k,
        p: (a * scale).min(1.0),
        q: (b * scale).min(1.0),
        membership: Membership::Balanced,
        centers,
        sigma: 1.0,
    }
}

/// EM-Emb followed by IR-LS, with the per-iteration error against the truth.
pub fn cluster_csbm_json(n: usize, k: usize, a: f64, b: f64, gap: f64, seed: u64) -> Result<Value> {
    let data = generate_dataset(&csbm_instance(n, k, a, b, gap), derive_seed(seed, &[0]))?;
    let z0 = compute_init(&InitSpec::EmEmb, &data, derive_seed(seed, &[1]))?;
    let opts = RefineOptions { truth: data.truth.clone(), ..Default::default() };
    let (z, trace) = ir_cluster(
        &data.graph,
        data.covariates.as_ref(),
        k,
        data.sigma.unwrap_or(1.0),
        &z0,
        default_iterations(n),
        Refinement::LeastSquares(Variant::IrLs),
        &opts,
    )?;
    let steps: Vec<Value> = trace
        .records
        .iter()
        .map(|r| json!({ "iteration": r.iteration, "changed": r.changed, "error_rate": r.truth_error_rate }))
        .collect();
    Ok(json!({
        "n": n,
        "k": k,
        "edges": data.graph.triplets().len(),
        "em_emb": scores(&data, &z0)?,
        "ir_ls": scores(&data, &z)?,
        "converged": trace.converged,
        "trace": steps,
    }))
}

/// Signed SC against IR-SSBM across flip probabilities `0, 0.05, …, 0.45`.
pub fn signed_sweep_json(n: usize, k: usize, p: f64, seed: u64) -> Result<Value> {
    let sc = AlgorithmSpec::new("signed-sc", Method::SignedSc);
    let ir = AlgorithmSpec::new("ir-ssbm", Method::IrSsbm);
    let mut rows = Vec::new();
    for step in 0..10u64 {
        let eta = step as f64 * 5.0 / 100.0;
        let spec = GeneratorSpec::Signed { n, k, p, eta, membership: Membership::Balanced };
        let data = generate_dataset(&spec, derive_seed(seed, &[step, 0]))?;
        let init = run_algorithm(&sc, &data, None, derive_seed(seed, &[step, 1]))?;
        let refined = run_algorithm(&ir, &data, Some(&init.partition), derive_seed(seed, &[step, 2]))?;
        rows.push(json!({
            "eta": eta,
            "signed_sc": scores(&data, &init.partition)?["nmi"],
            "ir_ssbm": scores(&data, &refined.partition)?["nmi"],
        }));
    }
    Ok(json!({ "n": n, "k": k, "p": p, "rows": rows }))
}

/// Fraction of `reps` draws at SNR `ratio · log n` that IR-LS recovers exactly.
pub fn threshold_cell_json(n: usize, k: usize, ratio: f64, reps: usize, seed: u64) -> Result<Value> {
    let spec = GeneratorSpec::SnrCssbm { n, k, ratio };
    let alg = AlgorithmSpec::new("ir-ls", Method::IrLs);
    let mut exact = 0usize;
    let mut errors = Vec::with_capacity(reps);
    for rep in 0..reps as u64 {
        let data = generate_dataset(&spec, derive_seed(seed, &[rep, 0]))?;
        let z0 = compute_init(&InitSpec::EmEmb, &data, derive_seed(seed, &[rep, 1]))?;
        let out = run_algorithm(&alg, &data, Some(&z0), derive_seed(seed, &[rep, 2]))?;
        let err = scores(&data, &out.partition)?["error_rate"].as_f64().unwrap_or(1.0);
        if err == 0.0 {
            exact += 1;
        }
        errors.push(err);
    }
    Ok(json!({
        "n": n,
        "k": k,
        "ratio": ratio,
        "reps": reps,
        "exact": exact,
        "frequency": if reps == 0 { 0.0 } else { exact as f64 / reps as f64 },
        "error_rates": errors,
    }))
}

#[wasm_bindgen]
pub fn cluster_csbm(n: usize, k: usize, a: f64, b: f64, gap: f64, seed: u32) -> std::result::Result<String, JsValue> {
    finish(cluster_csbm_json(n, k, a, b, gap, seed.into()))
}

#[wasm_bindgen]
pub fn signed_sweep(n: usize, k: usize, p: f64, seed: u32) -> std::result::Result<String, JsValue> {
    finish(signed_sweep_json(n, k, p, seed.into()))
}

#[wasm_bindgen]
pub fn threshold_cell(n: usize, k: usize, ratio: f64, reps: usize, seed: u32) -> std::result::Result<String, JsValue> {
    finish(threshold_cell_json(n, k, ratio, reps, seed.into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csbm_refinement_reports_trace() {
        let v = cluster_csbm_json(300, 2, 6.0, 1.0, 2.0, 4).unwrap();
        let trace = v["trace"].as_array().unwrap();
        assert!(!trace.is_empty());
        assert_eq!(trace[0]["iteration"], 0);
        let ir = v["ir_ls"]["nmi"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&ir));
        assert!(ir >= 0.5, "{v}");
    }

    #[test]
    fn signed_sweep_has_ten_rows() {
        let v = signed_sweep_json(200, 2, 0.2, 1).unwrap();
        let rows = v["rows"].as_array().unwrap();
        assert_eq!(rows.len(), 10);
        assert!(rows[0]["ir_ssbm"].as_f64().unwrap() > 0.9);
        assert_eq!(rows[9]["eta"], 0.45);
    }

    #[test]
    fn threshold_cell_counts_exact_recoveries() {
        let v = threshold_cell_json(200, 2, 3.0, 3, 7).unwrap();
        let freq = v["frequency"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&freq));
        assert_eq!(v["error_rates"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn invalid_input_is_an_error() {
        assert!(cluster_csbm_json(10, 0, 1.0, 1.0, 1.0, 0).is_err());
        assert!(threshold_cell_json(100, 1, 1.0, 1, 0).is_err());
    }

    #[test]
    fn outputs_are_deterministic() {
        assert_eq!(cluster_csbm_json(150, 3, 8.0, 1.0, 2.0, 9).unwrap(), cluster_csbm_json(150, 3, 8.0, 1.0, 2.0, 9).unwrap());
    }
}
