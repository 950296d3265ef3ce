use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use preqmc::estimators::{
    convergence_sweep, estimate_qmc, estimate_qmc_preint, ks_test, run_method, sample_qoi,
    uniform_grid, DensityEstimate, Method, SweepSettings,
};
use preqmc::fem::{Mesh, SolverOptions};
use preqmc::fields::FieldExpansion;
use preqmc::parametric::ParametricModel;
use preqmc::qmc::{cbc_construct, read_generating_vector, write_generating_vector, LatticeRule};
use preqmc::weights::{
    ln_b_constant, ln_gamma_order, varrho, ProblemConstants, WeightKind, WeightScheme,
};

use crate::config::{CbcTarget, Family, RunConfig, WeightSchemeKind};
use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

pub struct Context {
    pub config: RunConfig,
    pub out_dir: PathBuf,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn create(&self, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        Ok((path, BufWriter::new(file)))
    }
}

fn finish(path: &Path, mut out: BufWriter<File>, res: std::io::Result<()>) -> Result<()> {
    res.and_then(|_| out.flush())
        .map_err(|e| CliError::io(path, e))
}

pub fn build_model(cfg: &RunConfig) -> Result<ParametricModel> {
    let mesh = Mesh::uniform(cfg.dim, cfg.mesh_m)?;
    let fe = match cfg.family {
        Family::PaperSine => FieldExpansion::paper_family(cfg.dim, cfg.s, cfg.alpha, cfg.theta)?,
        Family::Tabulated => {
            let path = cfg.field_file.as_deref().expect("validated");
            let fe = FieldExpansion::read_tabulated_csv(Path::new(path), mesh.clone())?;
            if fe.s() != cfg.s {
                return Err(CliError::Config(format!(
                    "field_file {path} has s = {} expansion terms but the config says s = {}",
                    fe.s(),
                    cfg.s
                )));
            }
            fe
        }
    };
    let solver = SolverOptions {
        kind: cfg.solver,
        tol: cfg.solver_tol,
        max_iter: cfg.solver_maxit,
    };
    Ok(ParametricModel::new(
        Arc::new(fe),
        mesh,
        &cfg.qoi_point,
        solver,
    )?)
}

fn problem_constants(cfg: &RunConfig, model: &ParametricModel) -> ProblemConstants {
    ProblemConstants {
        norms: model.fields().norms().clone(),
        u0_w1inf: model.u0_w1inf(),
        phi0_at_zero: model.phi0_at_zero(),
        g_norm: model.g_norm(),
        t_abs_max: cfg.t0.abs().max(cfg.t1.abs()),
    }
}

/// POD weights for the preintegrated rule, or with w₀ for the plain rule.
fn weights(cfg: &RunConfig, model: &ParametricModel, include_w0: bool) -> Result<WeightScheme> {
    let spec = cfg.weight_spec();
    Ok(match cfg.weight_scheme {
        WeightSchemeKind::Practical => {
            WeightScheme::practical(model.fields().norms(), &spec, cfg.eps, include_w0)?
        }
        WeightSchemeKind::Theoretical => {
            WeightScheme::theoretical(&problem_constants(cfg, model), &spec, cfg.eps, include_w0)?
        }
    })
}

fn generating_vector(n: usize, w: &WeightScheme) -> Result<(Vec<u64>, f64)> {
    if w.dims() == 0 {
        return Ok((vec![], f64::NEG_INFINITY));
    }
    let r = cbc_construct(n, w)?;
    let last = *r.ln_error_sq.last().expect("at least one dimension");
    Ok((r.z_gen, last))
}

pub fn cbc(ctx: &Context) -> Result<()> {
    let cfg = &ctx.config;
    let model = build_model(cfg)?;
    let include_w0 = cfg.cbc_target == CbcTarget::Plain;
    let w = weights(cfg, &model, include_w0)?;
    let (z, ln_e2) = generating_vector(cfg.n, &w)?;
    let (path, mut out) = ctx.create(&cfg.vector_file)?;
    let res = write_generating_vector(&mut out, cfg.n, &z);
    finish(&path, out, res)?;
    println!(
        "cbc: N={} dims={} worst-case error {:.4e} -> {}",
        cfg.n,
        z.len(),
        (0.5 * ln_e2).exp(),
        path.display()
    );
    Ok(())
}

fn settings(cfg: &RunConfig, model: &ParametricModel) -> Result<SweepSettings> {
    Ok(SweepSettings {
        n_list: cfg.n_list.clone(),
        methods: cfg.methods.clone(),
        shifts: cfg.shifts,
        seed: cfg.seed,
        t_grid: uniform_grid(cfg.t0, cfg.t1, cfg.t_points)?,
        t_ref: cfg.t_ref,
        weights_preint: weights(cfg, model, false)?,
        weights_plain: weights(cfg, model, true)?,
    })
}

/// A rule from `vector_in` when its dimension fits `method`.
fn rule_from_file(
    cfg: &RunConfig,
    model: &ParametricModel,
    method: Method,
) -> Result<Option<LatticeRule>> {
    let Some(file) = &cfg.vector_in else {
        return Ok(None);
    };
    if !method.is_qmc() {
        return Ok(None);
    }
    let path = Path::new(file);
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    let (n, z) = read_generating_vector(BufReader::new(f))?;
    if z.len() != method.dims(model.s()) {
        return Ok(None);
    }
    Ok(Some(LatticeRule::new(n, z, cfg.shifts, cfg.seed)?))
}

fn write_estimate(ctx: &Context, est: &DensityEstimate, name: &str) -> Result<PathBuf> {
    let (path, mut out) = ctx.create(name)?;
    let res = est.write_csv(&mut out, &ctx.config.header());
    finish(&path, out, res)?;
    Ok(path)
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

pub fn estimate(ctx: &Context) -> Result<()> {
    let cfg = &ctx.config;
    let model = build_model(cfg)?;
    let settings = settings(cfg, &model)?;
    for &method in &cfg.methods {
        let mut est = match rule_from_file(cfg, &model, method)? {
            Some(rule) if method.preintegrated() => {
                estimate_qmc_preint(&model, &rule, &settings.t_grid)?
            }
            Some(rule) => estimate_qmc(&model, &rule, &settings.t_grid)?,
            None => run_method(&model, method, cfg.n, &settings, &settings.t_grid)?,
        };
        est.config_hash = cfg.hash();
        let path = write_estimate(
            ctx,
            &est,
            &format!("{}_{}.csv", cfg.estimate_prefix, method),
        )?;
        let pdf = est.pdf_rmse.as_deref().map_or(f64::NAN, max_of);
        println!(
            "{method}: N={} replicates={} max rmse F {:.3e} f {:.3e} -> {}",
            est.n,
            est.num_replicates(),
            max_of(&est.cdf_rmse),
            pdf,
            path.display()
        );
    }
    Ok(())
}

pub fn convergence(ctx: &Context) -> Result<()> {
    let cfg = &ctx.config;
    let model = build_model(cfg)?;
    let result = convergence_sweep(&model, &settings(cfg, &model)?)?;
    let (path, mut out) = ctx.create(&cfg.convergence_file)?;
    let res = result.table.write_csv(&mut out, &cfg.header());
    finish(&path, out, res)?;
    for m in result.table.methods() {
        let (c, p) = result.table.slopes(m);
        println!("{m}: slope cdf {c:.3} pdf {p:.3} at t = {}", cfg.t_ref);
    }
    println!("table -> {}", path.display());
    Ok(())
}

/// KS tests of fresh samples of φ against the preintegrated lattice
/// estimate of F on the configured grid.
pub fn kstest(ctx: &Context) -> Result<()> {
    let cfg = &ctx.config;
    let model = build_model(cfg)?;
    let settings = settings(cfg, &model)?;
    let est = match rule_from_file(cfg, &model, Method::QmcPreint)? {
        Some(rule) => estimate_qmc_preint(&model, &rule, &settings.t_grid)?,
        None => run_method(
            &model,
            Method::QmcPreint,
            cfg.n,
            &settings,
            &settings.t_grid,
        )?,
    };
    let (kpath, mut kout) = ctx.create(&cfg.kstest_file)?;
    let (spath, mut sout) = ctx.create(&cfg.samples_file)?;
    let mut rows = Vec::with_capacity(cfg.ks_repetitions);
    let mut samples_text = String::new();
    for rep in 0..cfg.ks_repetitions {
        let samples = sample_qoi(&model, cfg.ks_samples, cfg.seed, rep as u64)?;
        rows.push(ks_test(&est.t_grid, &est.cdf_mean, &samples)?);
        for x in &samples {
            samples_text.push_str(&format!("{rep},{x:e}\n"));
        }
    }
    let header = cfg.header();
    let res = (|| {
        for l in &header {
            writeln!(kout, "# {l}")?;
        }
        writeln!(kout, "repetition,n,D,threshold,reject")?;
        for (rep, r) in rows.iter().enumerate() {
            writeln!(
                kout,
                "{rep},{},{:e},{:e},{}",
                r.n, r.d, r.threshold, r.reject
            )?;
        }
        Ok(())
    })();
    finish(&kpath, kout, res)?;
    let res = (|| {
        for l in &header {
            writeln!(sout, "# {l}")?;
        }
        writeln!(sout, "repetition,phi")?;
        sout.write_all(samples_text.as_bytes())
    })();
    finish(&spath, sout, res)?;
    let rejected = rows.iter().filter(|r| r.reject).count();
    let max_d = rows.iter().map(|r| r.d).fold(0.0, f64::max);
    println!(
        "kstest: {} of {} repetitions accepted at 5% (max D {:.4} vs {:.4}) -> {}",
        rows.len() - rejected,
        rows.len(),
        max_d,
        rows[0].threshold,
        kpath.display()
    );
    Ok(())
}

pub fn constants(ctx: &Context) -> Result<()> {
    let cfg = &ctx.config;
    let model = build_model(cfg)?;
    let spec = cfg.weight_spec();
    let pc = problem_constants(cfg, &model);
    let s = model.s();
    println!("varrho(eps={}) = {:.10e}", cfg.eps, varrho(&spec, cfg.eps)?);
    println!(
        "phi0(0) = {:.10e}  |u0|_W1inf = {:.10e}  |G| = {:.10e}",
        pc.phi0_at_zero, pc.u0_w1inf, pc.g_norm
    );
    if spec.kind == WeightKind::Gaussian {
        println!("m  ln Gamma_m  Gamma_m");
        for m in 0..=4 {
            let l = ln_gamma_order(m, &pc, &spec);
            println!("{m}  {l:.10e}  {:.10e}", l.exp());
        }
    } else {
        println!("Gamma_m is defined for the gaussian weight function only");
    }
    println!("eta  ln B_1,eta  B_1,eta");
    let mut eta = vec![0usize; 2 * s];
    let show = |label: String, eta: &[usize]| -> Result<()> {
        let l = ln_b_constant(1, eta, &pc, &spec)?;
        println!("{label}  {l:.10e}  {:.10e}", l.exp());
        Ok(())
    };
    show("0".into(), &eta)?;
    for k in 0..2 * s {
        eta[k] = 1;
        let label = if k < s {
            format!("w{}", k + 1)
        } else {
            format!("z{}", k - s + 1)
        };
        show(label, &eta)?;
        eta[k] = 0;
    }
    Ok(())
}
