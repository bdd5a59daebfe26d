//! Sweep execution. Runs are independent and may execute in parallel; rows
//! are always emitted in spec order (size, then config, then seed).

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::path::Path;
use std::time::Instant;

use mplab_core::dense::{lu_emulated, norm_inf, DenseError, DenseMatrix};
use mplab_core::eig::{jacobi_eig, pair_residuals, refine_syev_with, OmegaNorm};
use mplab_core::qilu::{normalized_backward_error, qilu_factor, QiluError};
use mplab_core::refine::{
    backward_error, forward_error, gmres_ir_solve, ir_solve, lsq_backward_error, lsq_gmres_ir, Inner, IrConfig,
    IrReport, RefineError, Scaling,
};
use mplab_core::sparse::{
    block_jacobi_build_with, compress_clustered_with, footprint_bits, pcg, spmv, spmv_clustered, CsrMatrix,
    SparseError,
};
use mplab_core::{Format, Rng};
use rayon::prelude::*;
use thiserror::Error;

use crate::gen::{generate, MatrixGenerator};
use crate::mm::{load_matrix_market, MmError};
use crate::spec::{ExperimentSpec, Kind, MatrixSource};
use crate::Matrix;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{0}")]
    Spec(String),
    #[error(transparent)]
    Matrix(#[from] MmError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    /// Fill the `wall_time_s` column. Off by default so that output is
    /// byte-for-byte reproducible.
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    NotConverged,
    Diverged,
    Overflowed,
    Singular,
    Failed,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::NotConverged => "not_converged",
            Status::Diverged => "diverged",
            Status::Overflowed => "overflowed",
            Status::Singular => "singular",
            Status::Failed => "failed",
        }
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub kind: Kind,
    pub matrix: String,
    pub n: usize,
    pub seed: u64,
    pub fact: Format,
    pub work: Format,
    pub resid: Format,
    /// `key=value` pairs of the config, `;`-separated.
    pub params: String,
    pub status: Status,
    pub iterations: Option<usize>,
    pub backward_error: Option<f64>,
    pub forward_error: Option<f64>,
    /// Kind-specific reference value: binary32 LU error for `qilu`,
    /// initial residual for `eig`, binary32-storage error for
    /// `spmv-compress`, binary64-storage iterations for `block-jacobi`.
    pub baseline: Option<f64>,
    /// Further `key=value` details, `;`-separated.
    pub extra: String,
    pub wall_time_s: Option<f64>,
}

pub const CSV_HEADER: &str = "kind,matrix,n,seed,fact,work,resid,params,status,iterations,backward_error,forward_error,baseline,extra,wall_time_s";

fn num(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Row {
    pub fn to_csv(&self) -> String {
        [
            self.kind.name().to_string(),
            csv_field(&self.matrix),
            self.n.to_string(),
            self.seed.to_string(),
            self.fact.to_string(),
            self.work.to_string(),
            self.resid.to_string(),
            csv_field(&self.params),
            self.status.name().to_string(),
            self.iterations.map(|i| i.to_string()).unwrap_or_default(),
            num(self.backward_error),
            num(self.forward_error),
            num(self.baseline),
            csv_field(&self.extra),
            self.wall_time_s.map(|t| format!("{t:.6}")).unwrap_or_default(),
        ]
        .join(",")
    }
}

pub fn write_csv(rows: &[Row], mut w: impl Write) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.to_csv())?;
    }
    Ok(())
}

/// Statistics of one (n, config) group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub n: usize,
    pub params: String,
    pub runs: usize,
    pub ok: usize,
    /// Geometric mean and 15%/85% percentiles of the positive finite
    /// backward errors of the group.
    pub geo_mean: Option<f64>,
    pub p15: Option<f64>,
    pub p85: Option<f64>,
    pub baseline_geo_mean: Option<f64>,
    pub mean_iterations: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub kind: Kind,
    pub groups: Vec<GroupSummary>,
    pub total: usize,
    pub failed: usize,
}

impl Summary {
    pub fn all_failed(&self) -> bool {
        self.total > 0 && self.failed == self.total
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}: {} runs, {} not ok", self.kind, self.total, self.failed)?;
        writeln!(f, "{:>6}  {:<24} {:>7} {:>11} {:>11} {:>11} {:>11} {:>7}", "n", "params", "ok", "geomean", "p15", "p85", "baseline", "iters")?;
        let o = |v: Option<f64>| v.map(|x| format!("{x:.3e}")).unwrap_or_else(|| "-".into());
        for g in &self.groups {
            writeln!(
                f,
                "{:>6}  {:<24} {:>3}/{:<3} {:>11} {:>11} {:>11} {:>11} {:>7}",
                g.n,
                g.params,
                g.ok,
                g.runs,
                o(g.geo_mean),
                o(g.p15),
                o(g.p85),
                o(g.baseline_geo_mean),
                g.mean_iterations.map(|x| format!("{x:.1}")).unwrap_or_else(|| "-".into()),
            )?;
        }
        Ok(())
    }
}

pub fn geometric_mean(values: &[f64]) -> Option<f64> {
    let logs: Vec<f64> = values.iter().filter(|v| v.is_finite() && **v > 0.0).map(|v| v.ln()).collect();
    (!logs.is_empty()).then(|| (logs.iter().sum::<f64>() / logs.len() as f64).exp())
}

/// Nearest-rank percentile, `p` in (0, 1].
pub fn percentile(values: &[f64], p: f64) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let rank = ((p * v.len() as f64).ceil() as usize).clamp(1, v.len());
    Some(v[rank - 1])
}

pub fn summarize(kind: Kind, rows: &[Row]) -> Summary {
    let mut groups: Vec<GroupSummary> = Vec::new();
    let mut index: BTreeMap<(usize, String), usize> = BTreeMap::new();
    let mut members: Vec<Vec<&Row>> = Vec::new();
    for r in rows {
        let key = (r.n, r.params.clone());
        let slot = *index.entry(key).or_insert_with(|| {
            members.push(Vec::new());
            members.len() - 1
        });
        members[slot].push(r);
    }
    for m in &members {
        let berr: Vec<f64> = m.iter().filter_map(|r| r.backward_error).filter(|v| *v > 0.0).collect();
        let base: Vec<f64> = m.iter().filter_map(|r| r.baseline).collect();
        let its: Vec<f64> = m.iter().filter_map(|r| r.iterations.map(|i| i as f64)).collect();
        groups.push(GroupSummary {
            n: m[0].n,
            params: m[0].params.clone(),
            runs: m.len(),
            ok: m.iter().filter(|r| r.status == Status::Ok).count(),
            geo_mean: geometric_mean(&berr),
            p15: percentile(&berr, 0.15),
            p85: percentile(&berr, 0.85),
            baseline_geo_mean: geometric_mean(&base),
            mean_iterations: (!its.is_empty()).then(|| its.iter().sum::<f64>() / its.len() as f64),
        });
    }
    Summary {
        kind,
        total: rows.len(),
        failed: rows.iter().filter(|r| r.status != Status::Ok).count(),
        groups,
    }
}

struct Job<'a> {
    size: Option<usize>,
    config: BTreeMap<String, String>,
    seed: u64,
    file: Option<&'a Matrix>,
}

/// Execute every run of `spec` and return the rows in spec order.
pub fn run_rows(spec: &ExperimentSpec, opts: RunOptions) -> Result<Vec<Row>, ExperimentError> {
    let loaded = match &spec.source {
        MatrixSource::File(p) => Some(load_matrix_market(p)?),
        MatrixSource::Generator { .. } => None,
    };
    let sizes: Vec<Option<usize>> = match &spec.source {
        MatrixSource::Generator { sizes, .. } => sizes.iter().map(|&n| Some(n)).collect(),
        MatrixSource::File(_) => vec![None],
    };
    let configs = spec.configs();
    let mut jobs = Vec::new();
    for &size in &sizes {
        for config in &configs {
            for &seed in &spec.seeds {
                jobs.push(Job {
                    size,
                    config: config.clone(),
                    seed,
                    file: loaded.as_ref(),
                });
            }
        }
    }
    let run = || jobs.par_iter().map(|j| run_job(spec, j, opts.timing)).collect::<Vec<_>>();
    let rows = match opts.jobs {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| ExperimentError::Spec(e.to_string()))?
            .install(run),
        None => run(),
    };
    Ok(rows)
}

/// Run the sweep, write the CSV to `out` and return the summary.
pub fn run_experiment(spec: &ExperimentSpec, out: &Path, opts: RunOptions) -> Result<Summary, ExperimentError> {
    let rows = run_rows(spec, opts)?;
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf)?;
    std::fs::write(out, buf)?;
    Ok(summarize(spec.kind, &rows))
}

/// Parsed value of a config parameter, or its default.
fn param<T: std::str::FromStr>(c: &BTreeMap<String, String>, key: &str, default: T) -> Result<T, String> {
    match c.get(key) {
        Some(v) => v.parse().map_err(|_| format!("invalid value `{v}` for `{key}`")),
        None => Ok(default),
    }
}

struct Outcome {
    status: Status,
    n: usize,
    iterations: Option<usize>,
    backward_error: Option<f64>,
    forward_error: Option<f64>,
    baseline: Option<f64>,
    extra: Vec<(String, String)>,
}

impl Outcome {
    fn new(status: Status, n: usize) -> Outcome {
        Outcome {
            status,
            n,
            iterations: None,
            backward_error: None,
            forward_error: None,
            baseline: None,
            extra: Vec::new(),
        }
    }

    fn failed(n: usize, msg: impl fmt::Display) -> Outcome {
        let mut o = Outcome::new(Status::Failed, n);
        o.note("error", msg.to_string().replace([',', ';', '='], " "));
        o
    }

    fn note(&mut self, k: &str, v: impl fmt::Display) {
        self.extra.push((k.to_string(), v.to_string()));
    }
}

fn run_job(spec: &ExperimentSpec, job: &Job, timing: bool) -> Row {
    let start = Instant::now();
    let mut rng = Rng::new(job.seed);
    let matrix = match (job.file, &spec.source) {
        (Some(m), _) => Ok(m.clone()),
        (None, MatrixSource::Generator { gen, .. }) => {
            let g = MatrixGenerator {
                n: job.size.expect("generator jobs carry a size"),
                ..gen.clone()
            };
            Ok(generate(&g, &mut rng))
        }
        (None, MatrixSource::File(_)) => Err("matrix file was not loaded".to_string()),
    };
    let outcome = match matrix {
        Ok(m) => {
            let n = m.shape().1;
            match execute(spec, &job.config, &m, &mut rng) {
                Ok(o) => o,
                Err(msg) => Outcome::failed(n, msg),
            }
        }
        Err(msg) => Outcome::failed(job.size.unwrap_or(0), msg),
    };
    Row {
        kind: spec.kind,
        matrix: spec.source.describe(),
        n: outcome.n,
        seed: job.seed,
        fact: spec.precisions.fact,
        work: spec.precisions.work,
        resid: spec.precisions.resid,
        params: job.config.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";"),
        status: outcome.status,
        iterations: outcome.iterations,
        backward_error: outcome.backward_error,
        forward_error: outcome.forward_error,
        baseline: outcome.baseline,
        extra: outcome.extra.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";"),
        wall_time_s: timing.then(|| start.elapsed().as_secs_f64()),
    }
}

fn execute(spec: &ExperimentSpec, c: &BTreeMap<String, String>, m: &Matrix, rng: &mut Rng) -> Result<Outcome, String> {
    match spec.kind {
        Kind::Ir | Kind::GmresIr => run_ir(spec, c, &m.to_dense(), rng),
        Kind::Lsq => run_lsq(spec, c, &m.to_dense(), rng),
        Kind::Qilu => run_qilu(c, &m.to_dense(), rng),
        Kind::Eig => run_eig(spec, c, &m.to_dense()),
        Kind::SpmvCompress => run_spmv(c, &m.to_csr(), rng),
        Kind::BlockJacobi => run_block_jacobi(c, &m.to_csr(), rng),
    }
}

fn ir_config(spec: &ExperimentSpec, c: &BTreeMap<String, String>) -> Result<IrConfig, String> {
    let p = spec.precisions;
    let mut cfg = IrConfig::new(p.fact, p.work, p.resid);
    if let Some(t) = c.get("tol") {
        cfg = cfg.with_tol(t.parse().map_err(|_| format!("invalid tol `{t}`"))?);
    }
    let max_iters = param(c, "max_iters", cfg.max_iters)?;
    cfg = cfg.with_max_iters(max_iters);
    cfg.theta = param(c, "theta", cfg.theta)?;
    cfg.scaling = match c.get("scaling").map(String::as_str) {
        None | Some("auto") => Scaling::Auto,
        Some("always") => Scaling::Always,
        Some("never") => Scaling::Never,
        Some(other) => return Err(format!("invalid scaling `{other}`")),
    };
    if spec.kind == Kind::GmresIr || spec.kind == Kind::Lsq {
        let opt = |k: &str| -> Result<Option<f64>, String> { c.get(k).map(|v| v.parse().map_err(|_| format!("invalid {k} `{v}`"))).transpose() };
        let opt_n = |k: &str| -> Result<Option<usize>, String> { c.get(k).map(|v| v.parse().map_err(|_| format!("invalid {k} `{v}`"))).transpose() };
        cfg = cfg.with_inner(Inner::Gmres {
            inner_tol: opt("inner_tol")?,
            inner_maxit: opt_n("inner_maxit")?,
            restart: opt_n("restart")?,
        });
    }
    Ok(cfg)
}

fn from_report(o: &mut Outcome, rep: &IrReport) {
    o.iterations = Some(rep.iterations);
    o.backward_error = Some(rep.final_backward_error());
    if !rep.inner_iterations.is_empty() {
        o.note("inner", rep.inner_iterations.iter().sum::<usize>());
    }
    if let Some(t) = rep.theta {
        o.note("theta", t);
    }
    if let Some(c) = rep.shift_c {
        o.note("shift_c", c);
    }
}

fn refine_failure(n: usize, e: RefineError) -> Outcome {
    match e {
        RefineError::Diverged(rep) => {
            let mut o = Outcome::new(Status::Diverged, n);
            from_report(&mut o, &rep);
            o
        }
        RefineError::Factorization(DenseError::OverflowInFactor { .. }) => Outcome::new(Status::Overflowed, n),
        RefineError::Factorization(DenseError::ExactZeroPivot { .. }) | RefineError::RankDeficient => {
            Outcome::new(Status::Singular, n)
        }
        other => Outcome::failed(n, other),
    }
}

fn run_ir(spec: &ExperimentSpec, c: &BTreeMap<String, String>, a: &DenseMatrix, rng: &mut Rng) -> Result<Outcome, String> {
    let n = a.cols();
    let x_true: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let b = a.matvec(&x_true);
    let cfg = ir_config(spec, c)?;
    let result = if spec.kind == Kind::Ir {
        ir_solve(a, &b, &cfg.with_inner(Inner::None))
    } else {
        gmres_ir_solve(a, &b, &cfg)
    };
    Ok(match result {
        Ok((x, rep)) => {
            let mut o = Outcome::new(if rep.converged { Status::Ok } else { Status::NotConverged }, n);
            from_report(&mut o, &rep);
            o.forward_error = Some(forward_error(&x, &x_true));
            o
        }
        Err(e) => refine_failure(n, e),
    })
}

fn run_lsq(spec: &ExperimentSpec, c: &BTreeMap<String, String>, a: &DenseMatrix, rng: &mut Rng) -> Result<Outcome, String> {
    let n = a.cols();
    let x_true: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let b = a.matvec(&x_true);
    let cfg = ir_config(spec, c)?;
    let theta = cfg.theta;
    let c0 = param(c, "c0", 1u64)?;
    Ok(match lsq_gmres_ir(a, &b, &cfg, theta, c0) {
        Ok((x, rep)) => {
            let mut o = Outcome::new(if rep.converged { Status::Ok } else { Status::NotConverged }, n);
            from_report(&mut o, &rep);
            o.backward_error = Some(lsq_backward_error(a, &x, &b));
            o.forward_error = Some(forward_error(&x, &x_true));
            o
        }
        Err(e) => refine_failure(n, e),
    })
}

fn run_qilu(c: &BTreeMap<String, String>, a: &DenseMatrix, rng: &mut Rng) -> Result<Outcome, String> {
    let n = a.cols();
    let r: u32 = param(c, "r", 10)?;
    let base_fmt: Format = param(c, "baseline", Format::FP32)?;
    let x_true: Vec<f64> = (0..n).map(|_| rng.uniform_open(-1.0, 1.0)).collect();
    let b = a.matvec(&x_true);

    let baseline = lu_emulated(a, base_fmt)
        .and_then(|lu| lu.solve(&b, base_fmt))
        .ok()
        .map(|x| normalized_backward_error(a, &x, &b));
    let mut o = match qilu_factor(a, r) {
        Ok(f) => {
            let x = f.solve(&b).map_err(|e| e.to_string())?;
            let mut o = Outcome::new(Status::Ok, n);
            o.backward_error = Some(normalized_backward_error(a, &x, &b));
            o.forward_error = Some(forward_error(&x, &x_true));
            o
        }
        Err(QiluError::Overflowed { column }) => {
            let mut o = Outcome::new(Status::Overflowed, n);
            o.note("column", column);
            o
        }
        Err(QiluError::ZeroPivot { column }) => {
            let mut o = Outcome::new(Status::Singular, n);
            o.note("column", column);
            o
        }
        Err(e) => Outcome::failed(n, e),
    };
    o.baseline = baseline;
    Ok(o)
}

fn run_eig(spec: &ExperimentSpec, c: &BTreeMap<String, String>, a: &DenseMatrix) -> Result<Outcome, String> {
    let n = a.cols();
    let a = a.symmetrized();
    let fmt = spec.precisions.fact;
    let jtol = param(c, "jacobi_tol", 10.0 * fmt.unit_roundoff())?;
    let max_iters = param(c, "max_iters", 4usize)?;
    let target = param(c, "target", 1e-13)?;
    let omega = match c.get("omega").map(String::as_str) {
        None | Some("frobenius") => OmegaNorm::Frobenius,
        Some("spectral") => OmegaNorm::Spectral,
        Some(other) => return Err(format!("invalid omega norm `{other}`")),
    };
    let mut pairs = match jacobi_eig(&a, fmt, jtol) {
        Ok(p) => p,
        Err(e) => return Ok(Outcome::failed(n, e)),
    };
    let worst = |r: &[f64]| r.iter().copied().fold(0.0, f64::max);
    let initial = worst(&pair_residuals(&a, &pairs));
    let mut history = vec![initial];
    let mut o = Outcome::new(Status::NotConverged, n);
    o.baseline = Some(initial);
    let mut steps = 0;
    while steps < max_iters && *history.last().expect("non-empty") > target {
        let (next, step) = refine_syev_with(&a, &pairs, omega).map_err(|e| e.to_string())?;
        steps += 1;
        history.push(worst(&step.residuals));
        pairs = next;
    }
    let last = *history.last().expect("non-empty");
    if last <= target {
        o.status = Status::Ok;
    }
    o.iterations = Some(steps);
    o.backward_error = Some(last);
    o.note("history", history.iter().map(|h| format!("{h:.3e}")).collect::<Vec<_>>().join("|"));
    Ok(o)
}

fn rel_inf(y: &[f64], y_ref: &[f64]) -> f64 {
    let d: Vec<f64> = y.iter().zip(y_ref).map(|(p, q)| p - q).collect();
    let den = norm_inf(y_ref);
    if den == 0.0 {
        norm_inf(&d)
    } else {
        norm_inf(&d) / den
    }
}

fn run_spmv(c: &BTreeMap<String, String>, a: &CsrMatrix, rng: &mut Rng) -> Result<Outcome, String> {
    let n = a.n_cols();
    let k: usize = param(c, "k", 256)?;
    let tau: f64 = param(c, "tau", 0.0)?;
    let forced = match c.get("residual").map(String::as_str) {
        None | Some("auto") => None,
        Some(f) => Some(f.parse::<Format>().map_err(|e| e.to_string())?),
    };
    let base_fmt: Format = param(c, "baseline", Format::FP32)?;
    let x: Vec<f64> = (0..n).map(|_| rng.uniform_open(-1.0, 1.0)).collect();
    let y_ref = spmv(a, &x, Format::FP64).map_err(|e| e.to_string())?;

    let mut krng = Rng::with_stream(rng.seed(), 1);
    let cm = match compress_clustered_with(a, k, tau, &mut krng, forced) {
        Ok(m) => m,
        Err(e) => return Ok(Outcome::failed(n, e)),
    };
    let y = spmv_clustered(&cm, &x).map_err(|e| e.to_string())?;

    let ar = mplab_core::Arith::new(base_fmt);
    let a_base = a.with_values(ar.round_slice(a.values())).map_err(|e| e.to_string())?;
    let y_base = spmv(&a_base, &x, Format::FP64).map_err(|e| e.to_string())?;

    let recon = cm.reconstructed_values();
    let max_value_err = a
        .values()
        .iter()
        .zip(&recon)
        .map(|(v, r)| if *v == 0.0 { (v - r).abs() } else { ((v - r) / v).abs() })
        .fold(0.0, f64::max);
    let (bits, _) = footprint_bits(&cm);
    let mut o = Outcome::new(Status::Ok, n);
    o.forward_error = Some(rel_inf(&y, &y_ref));
    o.baseline = Some(rel_inf(&y_base, &y_ref));
    o.note("bits_per_value", format!("{bits:.4}"));
    o.note("max_value_rel_err", format!("{max_value_err:e}"));
    o.note("nnz", a.nnz());
    o.note("clusters", cm.centers.len());
    Ok(o)
}

fn run_block_jacobi(c: &BTreeMap<String, String>, a: &CsrMatrix, rng: &mut Rng) -> Result<Outcome, String> {
    let n = a.n_cols();
    let block_size: usize = param(c, "block_size", 8)?;
    let digit_tau: f64 = param(c, "digit_tau", mplab_core::sparse::DEFAULT_DIGIT_TAU)?;
    let tol: f64 = param(c, "tol", 1e-10)?;
    let maxit: usize = param(c, "maxit", 10 * n)?;
    let x_true: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
    let b = a.matvec(&x_true);

    let adaptive = match block_jacobi_build_with(a, block_size, digit_tau, None) {
        Ok(p) => p,
        Err(e) => return Ok(Outcome::failed(n, e)),
    };
    let reference = block_jacobi_build_with(a, block_size, digit_tau, Some(Format::FP64)).map_err(|e| e.to_string())?;
    let base_its = match pcg(a, &b, Some(&reference), tol, maxit) {
        Ok(out) => Some(out.iterations as f64),
        Err(_) => None,
    };
    let h = adaptive.format_histogram();
    let mut o = match pcg(a, &b, Some(&adaptive), tol, maxit) {
        Ok(out) => {
            let mut o = Outcome::new(Status::Ok, n);
            o.iterations = Some(out.iterations);
            o.backward_error = Some(backward_error(a, &out.x, &b));
            o.forward_error = Some(forward_error(&out.x, &x_true));
            o
        }
        Err(SparseError::NotConverged { iterations, partial }) => {
            let mut o = Outcome::new(Status::NotConverged, n);
            o.iterations = Some(iterations);
            o.backward_error = Some(backward_error(a, &partial.x, &b));
            o
        }
        Err(SparseError::IndefiniteDetected { iteration }) => {
            let mut o = Outcome::new(Status::Failed, n);
            o.note("indefinite_at", iteration);
            o
        }
        Err(e) => Outcome::failed(n, e),
    };
    o.baseline = base_its;
    o.note("fp16_blocks", h[0]);
    o.note("fp32_blocks", h[1]);
    o.note("fp64_blocks", h[2]);
    o.note("singular_blocks", adaptive.singular.iter().filter(|s| **s).count());
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::parse_spec;

    #[test]
    fn percentiles_nearest_rank() {
        let v: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(percentile(&v, 0.15), Some(3.0));
        assert_eq!(percentile(&v, 0.85), Some(17.0));
        assert_eq!(percentile(&[], 0.5), None);
        assert!((geometric_mean(&[1e-8, 1e-6]).unwrap() - 1e-7).abs() < 1e-20);
    }

    #[test]
    fn qilu_sweep_rows_in_order() {
        let spec = parse_spec(
            "[experiment]\nkind = qilu\nseeds = 0..3\n[matrix]\nfamily = uniform\nn = 8, 12\n[params]\nr = 6, 10\n",
        )
        .unwrap();
        let rows = run_rows(&spec, RunOptions::default()).unwrap();
        assert_eq!(rows.len(), 12);
        let keys: Vec<(usize, String, u64)> = rows.iter().map(|r| (r.n, r.params.clone(), r.seed)).collect();
        assert_eq!(keys[0], (8, "r=6".into(), 0));
        assert_eq!(keys[3], (8, "r=10".into(), 0));
        assert_eq!(keys[11], (12, "r=10".into(), 2));
        assert!(rows.iter().all(|r| r.status == Status::Ok && r.baseline.is_some()));
        let s = summarize(spec.kind, &rows);
        assert_eq!(s.groups.len(), 4);
        assert_eq!(s.failed, 0);
    }

    #[test]
    fn csv_is_deterministic() {
        let spec = parse_spec(
            "[experiment]\nkind = ir\nseeds = 0..4\n[matrix]\nfamily = randsvd\nn = 12\nkappa = 1e2\n[precisions]\nfact = fp16\n",
        )
        .unwrap();
        let csv = |jobs| {
            let mut buf = Vec::new();
            write_csv(&run_rows(&spec, RunOptions { jobs: Some(jobs), timing: false }).unwrap(), &mut buf).unwrap();
            buf
        };
        assert_eq!(csv(1), csv(3));
    }
}
