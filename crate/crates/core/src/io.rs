//! File formats: TSV edge lists, covariate CSV, label files, results CSV and
//! JSON configs. All writers go through a temp file and a rename.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;

use crate::error::{Error, Result};
use crate::experiments::{RunRecord, SummaryRow};
use crate::linalg::{DenseMatrix, SparseSymmetric};

fn format_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Format { path: path.display().to_string(), line, message: message.into() }
}

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| Error::param(format!("not a file path: {}", path.display())))?;
    let mut tmp = PathBuf::from(dir);
    tmp.push(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

/// Reals with 17 significant digits.
pub fn format_real(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { format!("{v}") };
    }
    let sci = format!("{v:e}");
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    let decimals = (16 - exp).max(0) as usize;
    format!("{v:.decimals$}")
}

pub fn edge_list_to_string(a: &SparseSymmetric) -> String {
    let mut s = format!("# n={}\n", a.n());
    for &(i, j, w) in a.triplets() {
        s.push_str(&format!("{i}\t{j}\t{w}\n"));
    }
    s
}

pub fn parse_edge_list(text: &str, path: &Path) -> Result<SparseSymmetric> {
    let mut n: Option<usize> = None;
    let mut triplets = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix("n=") {
                if n.is_some() {
                    return Err(format_err(path, lineno, "repeated `# n=` header"));
                }
                n = Some(v.trim().parse().map_err(|_| format_err(path, lineno, format!("bad node count `{v}`")))?);
            }
            continue;
        }
        let n = n.ok_or_else(|| format_err(path, lineno, "edge before the `# n=<count>` header"))?;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(format_err(path, lineno, format!("expected `i<TAB>j<TAB>w`, found {} fields", fields.len())));
        }
        let idx = |s: &str| -> Result<usize> {
            s.trim().parse().map_err(|_| format_err(path, lineno, format!("bad node index `{s}`")))
        };
        let (i, j) = (idx(fields[0])?, idx(fields[1])?);
        let w: f64 = fields[2]
            .trim()
            .parse()
            .ok()
            .filter(|w: &f64| w.is_finite())
            .ok_or_else(|| format_err(path, lineno, format!("bad weight `{}`", fields[2])))?;
        if i > j {
            return Err(format_err(path, lineno, format!("edge ({i}, {j}) must have i <= j")));
        }
        if j >= n {
            return Err(format_err(path, lineno, format!("node {j} out of range for n = {n}")));
        }
        triplets.push((lineno, i, j, w));
    }
    let n = n.ok_or_else(|| format_err(path, 1, "missing `# n=<count>` header"))?;
    triplets.sort_by_key(|t| (t.1, t.2));
    for pair in triplets.windows(2) {
        if (pair[0].1, pair[0].2) == (pair[1].1, pair[1].2) {
            let line = pair[0].0.max(pair[1].0);
            return Err(format_err(path, line, format!("duplicate edge ({}, {})", pair[1].1, pair[1].2)));
        }
    }
    SparseSymmetric::from_triplets(n, triplets.into_iter().map(|(_, i, j, w)| (i, j, w)).collect())
}

pub fn read_edge_list(path: &Path) -> Result<SparseSymmetric> {
    parse_edge_list(&fs::read_to_string(path)?, path)
}

pub fn write_edge_list(path: &Path, a: &SparseSymmetric) -> Result<()> {
    write_atomic(path, edge_list_to_string(a).as_bytes())
}

pub fn covariates_to_string(x: &DenseMatrix) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = (1..=x.cols()).map(|c| format!("x{c}")).collect();
    w.write_record(&header).map_err(csv_io)?;
    for row in x.row_iter() {
        w.write_record(row.iter().map(|v| format!("{v:?}"))).map_err(csv_io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

pub fn parse_covariates(text: &str, path: &Path) -> Result<DenseMatrix> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| format_err(path, 1, e.to_string()))?.clone();
    for (c, h) in header.iter().enumerate() {
        if h != format!("x{}", c + 1) {
            return Err(format_err(path, 1, format!("header column {} is `{h}`, expected `x{}`", c + 1, c + 1)));
        }
    }
    let d = header.len();
    let mut data = Vec::new();
    let mut rows = 0;
    for (idx, rec) in r.records().enumerate() {
        let lineno = idx + 2;
        let rec = rec.map_err(|e| format_err(path, lineno, e.to_string()))?;
        if rec.len() != d {
            return Err(format_err(path, lineno, format!("{} fields, expected {d}", rec.len())));
        }
        for f in rec.iter() {
            let v: f64 = f
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| format_err(path, lineno, format!("bad value `{f}`")))?;
            data.push(v);
        }
        rows += 1;
    }
    DenseMatrix::new(rows, d, data)
}

pub fn read_covariates(path: &Path) -> Result<DenseMatrix> {
    parse_covariates(&fs::read_to_string(path)?, path)
}

pub fn write_covariates(path: &Path, x: &DenseMatrix) -> Result<()> {
    write_atomic(path, covariates_to_string(x)?.as_bytes())
}

pub fn labels_to_string(labels: &[usize]) -> String {
    labels.iter().map(|l| format!("{l}\n")).collect()
}

pub fn parse_labels(text: &str, path: &Path) -> Result<Vec<usize>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse().map_err(|_| format_err(path, i + 1, format!("bad label `{}`", l.trim())))
        })
        .collect()
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    parse_labels(&fs::read_to_string(path)?, path)
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    write_atomic(path, labels_to_string(labels).as_bytes())
}

pub const RESULTS_HEADER: [&str; 10] = [
    "sweep_param",
    "sweep_value",
    "run",
    "algo",
    "seed",
    "nmi",
    "error_rate",
    "iters",
    "converged",
    "wall_time_ms",
];

pub fn results_to_string(records: &[RunRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RESULTS_HEADER).map_err(csv_io)?;
    for r in records {
        w.write_record([
            r.sweep_param.clone(),
            r.sweep_value.clone(),
            r.run.to_string(),
            r.algo.clone(),
            r.seed.to_string(),
            format_real(r.nmi),
            format_real(r.error_rate),
            r.iters.to_string(),
            r.converged.to_string(),
            format_real(r.wall_time_ms),
        ])
        .map_err(csv_io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn parse_results(text: &str, path: &Path) -> Result<Vec<RunRecord>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| format_err(path, 1, e.to_string()))?;
    if header.iter().ne(RESULTS_HEADER) {
        return Err(format_err(path, 1, format!("expected header `{}`", RESULTS_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for (idx, rec) in r.records().enumerate() {
        let lineno = idx + 2;
        let rec = rec.map_err(|e| format_err(path, lineno, e.to_string()))?;
        if rec.len() != RESULTS_HEADER.len() {
            return Err(format_err(path, lineno, "wrong number of fields"));
        }
        fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, path: &Path, line: usize) -> Result<T> {
            rec[i]
                .parse()
                .map_err(|_| format_err(path, line, format!("bad {} `{}`", RESULTS_HEADER[i], &rec[i])))
        }
        out.push(RunRecord {
            sweep_param: rec[0].to_string(),
            sweep_value: rec[1].to_string(),
            run: field(&rec, 2, path, lineno)?,
            algo: rec[3].to_string(),
            seed: field(&rec, 4, path, lineno)?,
            nmi: field(&rec, 5, path, lineno)?,
            error_rate: field(&rec, 6, path, lineno)?,
            iters: field(&rec, 7, path, lineno)?,
            converged: field(&rec, 8, path, lineno)?,
            wall_time_ms: field(&rec, 9, path, lineno)?,
        });
    }
    Ok(out)
}

pub fn read_results(path: &Path) -> Result<Vec<RunRecord>> {
    parse_results(&fs::read_to_string(path)?, path)
}

pub fn write_results(path: &Path, records: &[RunRecord]) -> Result<()> {
    write_atomic(path, results_to_string(records)?.as_bytes())
}

pub const SUMMARY_HEADER: [&str; 14] = [
    "sweep_param",
    "sweep_value",
    "algo",
    "count",
    "nmi_mean",
    "nmi_sd",
    "nmi_min",
    "nmi_max",
    "error_rate_mean",
    "error_rate_sd",
    "error_rate_min",
    "error_rate_max",
    "exact_recovery",
    "wall_time_ms_mean",
];

pub fn summary_to_string(rows: &[SummaryRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_HEADER).map_err(csv_io)?;
    for s in rows {
        let mut rec = vec![s.sweep_param.clone(), s.sweep_value.clone(), s.algo.clone(), s.count.to_string()];
        rec.extend(
            [
                s.nmi_mean,
                s.nmi_sd,
                s.nmi_min,
                s.nmi_max,
                s.error_rate_mean,
                s.error_rate_sd,
                s.error_rate_min,
                s.error_rate_max,
                s.exact_recovery,
                s.wall_time_ms_mean,
            ]
            .map(format_real),
        );
        w.write_record(rec).map_err(csv_io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    write_atomic(path, summary_to_string(rows)?.as_bytes())
}

/// Parses a JSON document, reporting the line of the first problem.
pub fn parse_config<T: DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    serde_json::from_str(text).map_err(|e| format_err(path, e.line(), e.to_string()))
}

pub fn read_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    parse_config(&fs::read_to_string(path)?, path)
}
