//! Estimators of the cdf F(t) and pdf f(t) of φ(w, z) over a t-grid:
//! Monte Carlo and randomly shifted lattice rules, each with or without
//! preintegration in w₀, plus convergence sweeps and consistency checks.
//!
//! Expensive work (one PDE solve per sample) runs in parallel; the per-sample
//! results are collected in index order and summed serially, so estimates do
//! not depend on the number of threads.

mod ks;

pub use ks::{ks_test, model_cdf_at, KsResult, KS_COEFFICIENT_5PC};

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::parametric::ParametricModel;
use crate::qmc::{cbc_construct, to_gaussian, LatticeRule};
use crate::rng::{SeedSplitter, Stream};
use crate::special::{normal_cdf, normal_pdf};
use crate::weights::WeightScheme;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Monte Carlo on the indicator (cdf only).
    Mc,
    /// Monte Carlo on the preintegrated integrands.
    McPreint,
    /// Lattice rule in 2s+1 dimensions on the indicator (cdf only).
    Qmc,
    /// Lattice rule in 2s dimensions on the preintegrated integrands.
    QmcPreint,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Mc, Method::McPreint, Method::Qmc, Method::QmcPreint];

    pub fn preintegrated(self) -> bool {
        matches!(self, Method::McPreint | Method::QmcPreint)
    }

    pub fn is_qmc(self) -> bool {
        matches!(self, Method::Qmc | Method::QmcPreint)
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Mc => "mc",
            Method::McPreint => "mc-preint",
            Method::Qmc => "qmc",
            Method::QmcPreint => "qmc-preint",
        }
    }

    /// Number of standard-normal inputs per sample for a model with s terms.
    pub fn dims(self, s: usize) -> usize {
        if self.preintegrated() {
            2 * s
        } else {
            2 * s + 1
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::Parse(format!(
                    "unknown method {s:?} (expected mc, mc-preint, qmc or qmc-preint)"
                ))
            })
    }
}

/// Mean and standard error over R independent replicates (shifts or batches):
/// the error is the unbiased sample standard deviation divided by √R.
pub fn mean_and_rmse(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

/// Per-replicate and aggregated estimates on a t-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityEstimate {
    pub method: Method,
    /// Points per shift (QMC) or samples per batch, rounded down (MC).
    pub n: usize,
    pub seed: u64,
    /// Hash of the run configuration, 0 when not set.
    pub config_hash: u64,
    pub t_grid: Vec<f64>,
    /// `cdf_reps[r][k]` = estimate of F(t_k) from replicate r.
    pub cdf_reps: Vec<Vec<f64>>,
    /// Same for f; `None` for the indicator methods.
    pub pdf_reps: Option<Vec<Vec<f64>>>,
    pub cdf_mean: Vec<f64>,
    pub cdf_rmse: Vec<f64>,
    pub pdf_mean: Option<Vec<f64>>,
    pub pdf_rmse: Option<Vec<f64>>,
}

fn aggregate(reps: &[Vec<f64>], len: usize) -> (Vec<f64>, Vec<f64>) {
    (0..len)
        .map(|k| mean_and_rmse(&reps.iter().map(|r| r[k]).collect::<Vec<_>>()))
        .unzip()
}

impl DensityEstimate {
    fn from_reps(
        method: Method,
        n: usize,
        seed: u64,
        t_grid: Vec<f64>,
        cdf_reps: Vec<Vec<f64>>,
        pdf_reps: Option<Vec<Vec<f64>>>,
    ) -> Self {
        let len = t_grid.len();
        let (cdf_mean, cdf_rmse) = aggregate(&cdf_reps, len);
        let (pdf_mean, pdf_rmse) = match &pdf_reps {
            Some(p) => {
                let (m, r) = aggregate(p, len);
                (Some(m), Some(r))
            }
            None => (None, None),
        };
        Self {
            method,
            n,
            seed,
            config_hash: 0,
            t_grid,
            cdf_reps,
            pdf_reps,
            cdf_mean,
            cdf_rmse,
            pdf_mean,
            pdf_rmse,
        }
    }

    pub fn num_replicates(&self) -> usize {
        self.cdf_reps.len()
    }

    /// Total number of PDE solves behind the estimate.
    pub fn cost(&self) -> usize {
        self.n * self.num_replicates()
    }

    /// Index of `t` on the grid (exact match).
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.t_grid.iter().position(|&v| v == t)
    }

    /// CSV with columns t, F_mean, F_rmse, f_mean, f_rmse; the pdf columns
    /// are `nan` for indicator methods. `header` lines are written first,
    /// each prefixed with "# ".
    pub fn write_csv(&self, out: &mut impl Write, header: &[String]) -> std::io::Result<()> {
        for line in header {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "t,F_mean,F_rmse,f_mean,f_rmse")?;
        for k in 0..self.t_grid.len() {
            let (fm, fr) = match (&self.pdf_mean, &self.pdf_rmse) {
                (Some(m), Some(r)) => (m[k], r[k]),
                _ => (f64::NAN, f64::NAN),
            };
            writeln!(
                out,
                "{},{:e},{:e},{:e},{:e}",
                self.t_grid[k], self.cdf_mean[k], self.cdf_rmse[k], fm, fr
            )?;
        }
        Ok(())
    }
}

/// `n` points of a uniform grid on [t0, t1].
pub fn uniform_grid(t0: f64, t1: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 || !(t1 > t0) {
        return Err(Error::InvalidParameter(format!(
            "t-grid needs at least 2 points and t0 < t1, got {n} points on [{t0}, {t1}]"
        )));
    }
    Ok((0..n)
        .map(|k| t0 + (t1 - t0) * k as f64 / (n - 1) as f64)
        .collect())
}

/// Inserts `t` into a sorted grid if it is not already present.
pub fn grid_with(mut grid: Vec<f64>, t: f64) -> Vec<f64> {
    if !grid.contains(&t) {
        let pos = grid.partition_point(|&v| v < t);
        grid.insert(pos, t);
    }
    grid
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::InvalidParameter("empty t-grid".into()));
    }
    if t_grid.windows(2).any(|p| !(p[1] > p[0])) || t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidParameter(
            "t-grid must be finite and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Per-sample reduced data: (offset, φ₀) for preintegrated methods, the
/// value φ(w, z) for indicator methods (second entry unused).
type Reduced = (f64, f64);

fn reduce_sample(
    model: &ParametricModel,
    y: &[f64],
    preint: bool,
    ws: &mut crate::parametric::Workspace,
) -> Result<Reduced> {
    let s = model.s();
    if preint {
        let (w, z) = y.split_at(s);
        let q = model.qoi_components_with(z, ws)?;
        Ok((crate::preintegration::offset(w, &q), q.phi[0]))
    } else {
        let (w, z) = y.split_at(s + 1);
        let q = model.qoi_components_with(z, ws)?;
        Ok((q.value(w), 0.0))
    }
}

/// Replicate averages of g_cdf/g_pdf (or the indicator) over reduced samples.
fn replicate_average(
    t_grid: &[f64],
    samples: &[Reduced],
    preint: bool,
) -> (Vec<f64>, Option<Vec<f64>>) {
    let mut cdf = vec![0.0; t_grid.len()];
    let inv_n = 1.0 / samples.len() as f64;
    if preint {
        let mut pdf = vec![0.0; t_grid.len()];
        for &(base, phi0) in samples {
            let inv = 1.0 / phi0;
            for ((t, c), d) in t_grid.iter().zip(cdf.iter_mut()).zip(pdf.iter_mut()) {
                let x = (t - base) * inv;
                *c += normal_cdf(x);
                *d += normal_pdf(x) * inv;
            }
        }
        cdf.iter_mut()
            .chain(pdf.iter_mut())
            .for_each(|v| *v *= inv_n);
        (cdf, Some(pdf))
    } else {
        for &(value, _) in samples {
            for (t, c) in t_grid.iter().zip(cdf.iter_mut()) {
                if value <= *t {
                    *c += 1.0;
                }
            }
        }
        cdf.iter_mut().for_each(|v| *v *= inv_n);
        (cdf, None)
    }
}

fn lattice_estimate(
    model: &ParametricModel,
    rule: &LatticeRule,
    t_grid: &[f64],
    method: Method,
) -> Result<DensityEstimate> {
    check_grid(t_grid)?;
    let preint = method.preintegrated();
    let dims = method.dims(model.s());
    if rule.dims() != dims {
        return Err(Error::LengthMismatch {
            what: "lattice rule dimensions",
            expected: dims,
            got: rule.dims(),
        });
    }
    if rule.num_shifts() == 0 {
        return Err(Error::InvalidParameter("lattice rule has no shifts".into()));
    }
    let n = rule.n();
    let total = n * rule.num_shifts();
    let reduced: Vec<Reduced> = (0..total)
        .into_par_iter()
        .map_init(
            || (model.workspace(), vec![0.0; dims], vec![0.0; dims]),
            |(ws, u, y), k| {
                rule.point_into(k % n, k / n, u);
                to_gaussian(u, y);
                reduce_sample(model, y, preint, ws)
            },
        )
        .collect::<Result<_>>()?;
    let mut cdf_reps = Vec::with_capacity(rule.num_shifts());
    let mut pdf_reps = Vec::with_capacity(rule.num_shifts());
    for chunk in reduced.chunks(n) {
        let (c, p) = replicate_average(t_grid, chunk, preint);
        cdf_reps.push(c);
        if let Some(p) = p {
            pdf_reps.push(p);
        }
    }
    let pdf_reps = preint.then_some(pdf_reps);
    Ok(DensityEstimate::from_reps(
        method,
        n,
        rule.seed(),
        t_grid.to_vec(),
        cdf_reps,
        pdf_reps,
    ))
}

/// Lattice rule in 2s dimensions applied to Φ(ξ) and ρ(ξ)/φ₀; coordinates
/// are (w₁..w_s, z₁..z_s).
pub fn estimate_qmc_preint(
    model: &ParametricModel,
    rule: &LatticeRule,
    t_grid: &[f64],
) -> Result<DensityEstimate> {
    lattice_estimate(model, rule, t_grid, Method::QmcPreint)
}

/// Lattice rule in 2s+1 dimensions applied to the indicator; coordinates
/// are (w₀..w_s, z₁..z_s).
pub fn estimate_qmc(
    model: &ParametricModel,
    rule: &LatticeRule,
    t_grid: &[f64],
) -> Result<DensityEstimate> {
    lattice_estimate(model, rule, t_grid, Method::Qmc)
}

/// Standard-normal inputs for MC batch `batch`, drawn serially from the
/// Monte Carlo stream so that each batch is reproducible on its own.
fn mc_inputs(seed: u64, batch: usize, per_batch: usize, dims: usize) -> Vec<f64> {
    let mut rng = SeedSplitter::new(seed).rng(Stream::MonteCarlo, batch as u64);
    (0..per_batch * dims)
        .map(|_| rng.sample(StandardNormal))
        .collect()
}

/// Monte Carlo with `samples` i.i.d. draws split into `batches` batches
/// whose sizes differ by at most one; the estimate is the mean of the batch
/// means and the RMSE their standard error.
pub fn estimate_mc(
    model: &ParametricModel,
    samples: usize,
    batches: usize,
    t_grid: &[f64],
    preintegrate: bool,
    seed: u64,
) -> Result<DensityEstimate> {
    check_grid(t_grid)?;
    if samples < 2 || batches < 1 || batches > samples {
        return Err(Error::InvalidParameter(format!(
            "Monte Carlo needs M >= 2 samples and 1 <= batches <= M, got M = {samples}, {batches} batches"
        )));
    }
    let method = if preintegrate {
        Method::McPreint
    } else {
        Method::Mc
    };
    let dims = method.dims(model.s());
    let mut cdf_reps = Vec::with_capacity(batches);
    let mut pdf_reps = Vec::with_capacity(batches);
    for b in 0..batches {
        let size = samples / batches + usize::from(b < samples % batches);
        let inputs = mc_inputs(seed, b, size, dims);
        let reduced: Vec<Reduced> = (0..size)
            .into_par_iter()
            .map_init(
                || model.workspace(),
                |ws, i| reduce_sample(model, &inputs[i * dims..(i + 1) * dims], preintegrate, ws),
            )
            .collect::<Result<_>>()?;
        let (c, p) = replicate_average(t_grid, &reduced, preintegrate);
        cdf_reps.push(c);
        if let Some(p) = p {
            pdf_reps.push(p);
        }
    }
    let pdf_reps = preintegrate.then_some(pdf_reps);
    Ok(DensityEstimate::from_reps(
        method,
        samples / batches,
        seed,
        t_grid.to_vec(),
        cdf_reps,
        pdf_reps,
    ))
}

/// The pdf of the raw indicator would require evaluating a Dirac delta.
pub fn require_pdf(method: Method) -> Result<()> {
    if method.preintegrated() {
        Ok(())
    } else {
        Err(Error::PdfWithoutPreintegration)
    }
}

/// `count` fresh samples of φ(w, z) with w ∈ ℝ^{s+1}, z ∈ ℝ^s i.i.d.
/// standard normal, from the validation stream of `seed`.
pub fn sample_qoi(
    model: &ParametricModel,
    count: usize,
    seed: u64,
    repetition: u64,
) -> Result<Vec<f64>> {
    let dims = 2 * model.s() + 1;
    let mut rng = SeedSplitter::new(seed).rng(Stream::Validation, repetition);
    let inputs: Vec<f64> = (0..count * dims)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    inputs
        .par_chunks(dims)
        .map_init(
            || model.workspace(),
            |ws, y| reduce_sample(model, y, false, ws).map(|r| r.0),
        )
        .collect()
}

/// Randomly shifted lattice-rule average of an arbitrary integrand over
/// ℝ^dims (inputs mapped by Φ⁻¹): returns (mean over shifts, RMSE).
pub fn lattice_integrate(rule: &LatticeRule, f: impl Fn(&[f64]) -> f64 + Sync) -> (f64, f64) {
    let n = rule.n();
    let dims = rule.dims();
    let per_shift: Vec<f64> = (0..rule.num_shifts())
        .map(|sh| {
            let vals: Vec<f64> = (0..n)
                .into_par_iter()
                .map_init(
                    || (vec![0.0; dims], vec![0.0; dims]),
                    |(u, y), i| {
                        rule.point_into(i, sh, u);
                        to_gaussian(u, y);
                        f(y)
                    },
                )
                .collect();
            vals.iter().sum::<f64>() / n as f64
        })
        .collect();
    mean_and_rmse(&per_shift)
}

/// Monte Carlo analogue of [`lattice_integrate`] with `batches` batches.
pub fn mc_integrate(
    dims: usize,
    samples: usize,
    batches: usize,
    seed: u64,
    f: impl Fn(&[f64]) -> f64 + Sync,
) -> (f64, f64) {
    let per_batch = samples / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| {
            let inputs = mc_inputs(seed, b, per_batch, dims);
            let vals: Vec<f64> = (0..per_batch)
                .into_par_iter()
                .map(|i| f(&inputs[i * dims..(i + 1) * dims]))
                .collect();
            vals.iter().sum::<f64>() / per_batch as f64
        })
        .collect();
    mean_and_rmse(&means)
}

/// Least-squares slope of ln y against ln x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0 && b.is_finite())
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub method: Method,
    pub rmse_cdf: f64,
    /// NaN for indicator methods.
    pub rmse_pdf: f64,
}

/// RMSE at a reference t for each (N, method), sorted by method then N.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub t_ref: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    pub fn methods(&self) -> Vec<Method> {
        let mut out: Vec<Method> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.method) {
                out.push(r.method);
            }
        }
        out
    }

    /// Fitted (cdf, pdf) log-log slopes of RMSE against N for one method.
    pub fn slopes(&self, method: Method) -> (f64, f64) {
        let rows: Vec<&ConvergenceRow> = self.rows.iter().filter(|r| r.method == method).collect();
        let n: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
        let c: Vec<f64> = rows.iter().map(|r| r.rmse_cdf).collect();
        let p: Vec<f64> = rows.iter().map(|r| r.rmse_pdf).collect();
        (loglog_slope(&n, &c), loglog_slope(&n, &p))
    }

    /// CSV with columns N, method, rmse_cdf, rmse_pdf and one footer line
    /// per method: "# slope <method> cdf <value> pdf <value>".
    pub fn write_csv(&self, out: &mut impl Write, header: &[String]) -> std::io::Result<()> {
        for line in header {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "N,method,rmse_cdf,rmse_pdf")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{:e},{:e}",
                r.n, r.method, r.rmse_cdf, r.rmse_pdf
            )?;
        }
        for m in self.methods() {
            let (c, p) = self.slopes(m);
            writeln!(out, "# slope {m} cdf {c:.4} pdf {p:.4}")?;
        }
        Ok(())
    }
}

/// Settings of a convergence sweep.
#[derive(Debug, Clone)]
pub struct SweepSettings {
    pub n_list: Vec<usize>,
    pub methods: Vec<Method>,
    /// Random shifts per lattice rule; also the MC batch count.
    pub shifts: usize,
    pub seed: u64,
    pub t_grid: Vec<f64>,
    pub t_ref: f64,
    /// POD weights over (w₁..w_s, z₁..z_s) for the preintegrated rule.
    pub weights_preint: WeightScheme,
    /// POD weights over (w₀..w_s, z₁..z_s) for the plain lattice rule.
    pub weights_plain: WeightScheme,
}

/// Result of a sweep: the table plus every underlying estimate (on the
/// t-grid with `t_ref` inserted).
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub table: ConvergenceTable,
    pub estimates: Vec<DensityEstimate>,
}

/// One estimate for `method` at N points per shift (MC: N·shifts samples in
/// `shifts` batches, i.e. the same number of PDE solves).
pub fn run_method(
    model: &ParametricModel,
    method: Method,
    n: usize,
    settings: &SweepSettings,
    t_grid: &[f64],
) -> Result<DensityEstimate> {
    match method {
        Method::Mc | Method::McPreint => estimate_mc(
            model,
            n * settings.shifts,
            settings.shifts,
            t_grid,
            method.preintegrated(),
            settings.seed,
        ),
        Method::Qmc | Method::QmcPreint => {
            let weights = if method.preintegrated() {
                &settings.weights_preint
            } else {
                &settings.weights_plain
            };
            let rule = if weights.dims() == 0 {
                LatticeRule::new(n, vec![], settings.shifts, settings.seed)?
            } else {
                let cbc = cbc_construct(n, weights)?;
                LatticeRule::new(n, cbc.z_gen, settings.shifts, settings.seed)?
            };
            lattice_estimate(model, &rule, t_grid, method)
        }
    }
}

pub fn convergence_sweep(model: &ParametricModel, settings: &SweepSettings) -> Result<SweepResult> {
    if settings.n_list.is_empty() || settings.methods.is_empty() {
        return Err(Error::InvalidParameter(
            "convergence sweep needs at least one N and one method".into(),
        ));
    }
    let mut n_list = settings.n_list.clone();
    n_list.sort_unstable();
    let grid = grid_with(settings.t_grid.clone(), settings.t_ref);
    let k_ref = grid
        .iter()
        .position(|&t| t == settings.t_ref)
        .expect("t_ref was inserted");
    let mut rows = Vec::new();
    let mut estimates = Vec::new();
    for &method in &settings.methods {
        for &n in &n_list {
            let est = run_method(model, method, n, settings, &grid)?;
            let rmse_pdf = est.pdf_rmse.as_ref().map_or(f64::NAN, |r| r[k_ref]);
            log::info!(
                "{method} N={n}: rmse_cdf={:.3e} rmse_pdf={rmse_pdf:.3e}",
                est.cdf_rmse[k_ref]
            );
            rows.push(ConvergenceRow {
                n,
                method,
                rmse_cdf: est.cdf_rmse[k_ref],
                rmse_pdf,
            });
            estimates.push(est);
        }
    }
    Ok(SweepResult {
        table: ConvergenceTable {
            t_ref: settings.t_ref,
            rows,
        },
        estimates,
    })
}

/// Outcome of a cdf/pdf consistency check: `lhs` must not exceed `tol`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyCheck {
    pub lhs: f64,
    pub tol: f64,
}

impl ConsistencyCheck {
    pub fn passed(&self) -> bool {
        self.lhs <= self.tol
    }
}

/// Second derivative of the mean pdf estimate at interior grid points
/// (three-point formula on a possibly non-uniform grid), zero at the ends.
fn pdf_second_derivative(t: &[f64], f: &[f64]) -> Vec<f64> {
    let n = t.len();
    let mut out = vec![0.0; n];
    for k in 1..n.saturating_sub(1) {
        let (h0, h1) = (t[k] - t[k - 1], t[k + 1] - t[k]);
        out[k] = 2.0 * (f[k + 1] * h0 - f[k] * (h0 + h1) + f[k - 1] * h1) / (h0 * h1 * (h0 + h1));
    }
    if n >= 3 {
        out[0] = out[1];
        out[n - 1] = out[n - 2];
    }
    out
}

fn trapezoid(t: &[f64], f: &[f64]) -> f64 {
    t.windows(2)
        .zip(f.windows(2))
        .map(|(tt, ff)| 0.5 * (tt[1] - tt[0]) * (ff[0] + ff[1]))
        .sum()
}

/// Trapezoid integral of f̂ over the whole grid against F̂(t₁) − F̂(t₀):
/// tolerance 2·(RMSE of the per-replicate difference + RMSE of F̂(t₀) +
/// RMSE of F̂(t₁) + Σ h_k³/12·|f''|).
pub fn trapezoid_consistency(est: &DensityEstimate) -> Result<ConsistencyCheck> {
    let pdf_reps = est
        .pdf_reps
        .as_ref()
        .ok_or(Error::PdfWithoutPreintegration)?;
    let pdf = est
        .pdf_mean
        .as_ref()
        .expect("pdf mean exists with replicates");
    let t = &est.t_grid;
    let last = t.len() - 1;
    let diffs: Vec<f64> = est
        .cdf_reps
        .iter()
        .zip(pdf_reps)
        .map(|(c, p)| trapezoid(t, p) - (c[last] - c[0]))
        .collect();
    let (mean_diff, rmse_diff) = mean_and_rmse(&diffs);
    let fpp = pdf_second_derivative(t, pdf);
    let grid_bound: f64 = (0..last)
        .map(|k| {
            let h = t[k + 1] - t[k];
            h * h * h / 12.0 * fpp[k].abs().max(fpp[k + 1].abs())
        })
        .sum();
    let noise = rmse_diff.max(0.0) + est.cdf_rmse[0] + est.cdf_rmse[last];
    Ok(ConsistencyCheck {
        lhs: mean_diff.abs(),
        tol: 2.0 * (noise + grid_bound),
    })
}

/// Central differences of F̂ against f̂ at interior grid points; reports the
/// worst ratio |FD − f̂| / tol_k as `lhs` against `tol` = 1, where tol_k is
/// 2·(RMSE of the per-replicate difference + truncation bound h²/6·|f''|).
pub fn fd_consistency(est: &DensityEstimate) -> Result<ConsistencyCheck> {
    let pdf_reps = est
        .pdf_reps
        .as_ref()
        .ok_or(Error::PdfWithoutPreintegration)?;
    let pdf = est
        .pdf_mean
        .as_ref()
        .expect("pdf mean exists with replicates");
    let t = &est.t_grid;
    let fpp = pdf_second_derivative(t, pdf);
    let mut worst = 0.0f64;
    for k in 1..t.len().saturating_sub(1) {
        let (h0, h1) = (t[k] - t[k - 1], t[k + 1] - t[k]);
        let fd = |c: &[f64]| (c[k + 1] - c[k - 1]) / (h0 + h1);
        let diffs: Vec<f64> = est
            .cdf_reps
            .iter()
            .zip(pdf_reps)
            .map(|(c, p)| fd(c) - p[k])
            .collect();
        let (mean_diff, rmse_diff) = mean_and_rmse(&diffs);
        let h = h0.max(h1);
        let trunc = h * h / 6.0 * fpp[k].abs() + (h1 - h0).abs() / 2.0 * fpp[k].abs();
        let tol = 2.0 * (rmse_diff.max(0.0) + trunc) + 1e-12;
        worst = worst.max(mean_diff.abs() / tol);
    }
    Ok(ConsistencyCheck {
        lhs: worst,
        tol: 1.0,
    })
}
