//! Run configuration: a flat `key = value` text file with `#` comments.
//!
//! | key | default | meaning |
//! |-----|---------|---------|
//! | dim | 2 | spatial dimension (1 or 2) |
//! | s | 8 | number of expansion terms |
//! | alpha | 1 | coefficient amplitude |
//! | theta | 2 | decay exponent |
//! | mesh_m | 5 | mesh width h = 2^-mesh_m |
//! | family | paper-sine | paper-sine or tabulated |
//! | field_file | (empty) | CSV of nodal values, required when family = tabulated |
//! | qoi | point | functional; only point evaluation is available |
//! | qoi_point | 0.5 (d=1), 1/√2,1/√2 (d=2) | point of evaluation |
//! | solver | auto | auto, banded, cg (incomplete-factorization preconditioner) or cg-jacobi |
//! | solver_tol, solver_maxit | 1e-10, 10000 | CG stopping rule |
//! | weight_kind | gaussian | gaussian or exponential |
//! | mu | 0.05 | weight-function parameter |
//! | eps | 0.1 | lattice-rule rate parameter |
//! | weight_scheme | practical | practical or theoretical |
//! | N | 503 | points per shift for cbc, estimate and kstest |
//! | N_list | 251,503,1009,2003,4001 | ladder for convergence |
//! | shifts | 16 | random shifts (and MC batches) |
//! | seed | 2024 | run seed |
//! | t0, t1, t_points | -0.2, 0.3, 61 | t-grid |
//! | t_ref | -0.02 | reference t for convergence tables |
//! | methods | qmc-preint,mc-preint,qmc,mc | estimators to run |
//! | cbc_target | preint | vector for the preint (2s) or plain (2s+1) rule |
//! | vector_in | (empty) | generating vector file to use instead of CBC |
//! | ks_samples, ks_repetitions | 1000, 20 | KS test sizes |
//! | vector_file, estimate_prefix, convergence_file, kstest_file, samples_file | see defaults | output names inside the output directory |

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use preqmc::estimators::Method;
use preqmc::fem::SolverKind;
use preqmc::weights::{WeightFunctionSpec, WeightKind};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightSchemeKind {
    Practical,
    Theoretical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    PaperSine,
    Tabulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbcTarget {
    Preint,
    Plain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dim: usize,
    pub s: usize,
    pub alpha: f64,
    pub theta: f64,
    pub mesh_m: u32,
    pub family: Family,
    pub field_file: Option<String>,
    pub qoi_point: Vec<f64>,
    pub solver: SolverKind,
    pub solver_tol: f64,
    pub solver_maxit: usize,
    pub weight_kind: WeightKind,
    pub mu: f64,
    pub eps: f64,
    pub weight_scheme: WeightSchemeKind,
    pub n: usize,
    pub n_list: Vec<usize>,
    pub shifts: usize,
    pub seed: u64,
    pub t0: f64,
    pub t1: f64,
    pub t_points: usize,
    pub t_ref: f64,
    pub methods: Vec<Method>,
    pub cbc_target: CbcTarget,
    pub vector_in: Option<String>,
    pub ks_samples: usize,
    pub ks_repetitions: usize,
    pub vector_file: String,
    pub estimate_prefix: String,
    pub convergence_file: String,
    pub kstest_file: String,
    pub samples_file: String,
}

const KEYS: [&str; 34] = [
    "dim",
    "s",
    "alpha",
    "theta",
    "mesh_m",
    "family",
    "field_file",
    "qoi",
    "qoi_point",
    "solver",
    "solver_tol",
    "solver_maxit",
    "weight_kind",
    "mu",
    "eps",
    "weight_scheme",
    "N",
    "N_list",
    "shifts",
    "seed",
    "t0",
    "t1",
    "t_points",
    "t_ref",
    "methods",
    "cbc_target",
    "vector_in",
    "ks_samples",
    "ks_repetitions",
    "vector_file",
    "estimate_prefix",
    "convergence_file",
    "kstest_file",
    "samples_file",
];

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    v.parse::<T>()
        .map_err(|e| invalid(format!("{key}: cannot parse {v:?}: {e}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, CliError>
where
    T::Err: fmt::Display,
{
    v.split(',').map(|p| parse_num(key, p.trim())).collect()
}

fn opt_string(v: &str) -> Option<String> {
    (!v.is_empty()).then(|| v.to_string())
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            s: 8,
            alpha: 1.0,
            theta: 2.0,
            mesh_m: 5,
            family: Family::PaperSine,
            field_file: None,
            qoi_point: vec![0.5f64.sqrt(); 2],
            solver: SolverKind::Auto,
            solver_tol: 1e-10,
            solver_maxit: 10_000,
            weight_kind: WeightKind::Gaussian,
            mu: 0.05,
            eps: 0.1,
            weight_scheme: WeightSchemeKind::Practical,
            n: 503,
            n_list: vec![251, 503, 1009, 2003, 4001],
            shifts: 16,
            seed: 2024,
            t0: -0.2,
            t1: 0.3,
            t_points: 61,
            t_ref: -0.02,
            methods: vec![Method::QmcPreint, Method::McPreint, Method::Qmc, Method::Mc],
            cbc_target: CbcTarget::Preint,
            vector_in: None,
            ks_samples: 1000,
            ks_repetitions: 20,
            vector_file: "generating_vector.txt".into(),
            estimate_prefix: "estimate".into(),
            convergence_file: "convergence.csv".into(),
            kstest_file: "kstest.csv".into(),
            samples_file: "samples.csv".into(),
        }
    }
}

impl RunConfig {
    /// Parses `key = value` lines; unknown and repeated keys are errors.
    /// Overrides (`key=value`) are applied afterwards, then the result is
    /// validated.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut entries: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                invalid(format!(
                    "line {}: expected `key = value`, got {raw:?}",
                    lineno + 1
                ))
            })?;
            let k = k.trim().to_string();
            if entries.insert(k.clone(), v.trim().to_string()).is_some() {
                return Err(invalid(format!("line {}: key {k} given twice", lineno + 1)));
            }
        }
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| invalid(format!("override {o:?} is not of the form key=value")))?;
            entries.insert(k.trim().to_string(), v.trim().to_string());
        }
        let mut cfg = Self::default();
        let explicit_point = entries.contains_key("qoi_point");
        for (k, v) in &entries {
            cfg.set(k, v)?;
        }
        if !explicit_point {
            cfg.qoi_point = if cfg.dim == 1 {
                vec![0.5]
            } else {
                vec![0.5f64.sqrt(); 2]
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Recovers the configuration echoed into the `#` header of an output
    /// CSV (the lines before the column header).
    pub fn from_echo(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let body: Vec<&str> = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .map(|l| l.trim_start_matches('#').trim())
            .filter(|l| !l.starts_with("config_hash"))
            .collect();
        if body.is_empty() {
            return Err(invalid("no echoed configuration found"));
        }
        Self::parse(&body.join("\n"), overrides)
    }

    pub fn from_file(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, overrides)
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), CliError> {
        match key {
            "dim" => self.dim = parse_num(key, v)?,
            "s" => self.s = parse_num(key, v)?,
            "alpha" => self.alpha = parse_num(key, v)?,
            "theta" => self.theta = parse_num(key, v)?,
            "mesh_m" => self.mesh_m = parse_num(key, v)?,
            "family" => {
                self.family = match v {
                    "paper-sine" => Family::PaperSine,
                    "tabulated" => Family::Tabulated,
                    _ => {
                        return Err(invalid(format!(
                            "family must be paper-sine or tabulated, got {v:?}"
                        )))
                    }
                }
            }
            "field_file" => self.field_file = opt_string(v),
            "qoi" => {
                if v != "point" {
                    return Err(invalid(format!("qoi must be point, got {v:?}")));
                }
            }
            "qoi_point" => self.qoi_point = parse_list(key, v)?,
            "solver_tol" => self.solver_tol = parse_num(key, v)?,
            "solver_maxit" => self.solver_maxit = parse_num(key, v)?,
            "solver" => {
                self.solver = match v {
                    "auto" => SolverKind::Auto,
                    "banded" => SolverKind::Banded,
                    "cg" => SolverKind::Cg,
                    "cg-jacobi" => SolverKind::CgJacobi,
                    _ => {
                        return Err(invalid(format!(
                            "solver must be auto, banded, cg or cg-jacobi, got {v:?}"
                        )))
                    }
                }
            }
            "weight_kind" => {
                self.weight_kind = match v {
                    "gaussian" => WeightKind::Gaussian,
                    "exponential" => WeightKind::Exponential,
                    _ => {
                        return Err(invalid(format!(
                            "weight_kind must be gaussian or exponential, got {v:?}"
                        )))
                    }
                }
            }
            "mu" => self.mu = parse_num(key, v)?,
            "eps" => self.eps = parse_num(key, v)?,
            "weight_scheme" => {
                self.weight_scheme = match v {
                    "practical" => WeightSchemeKind::Practical,
                    "theoretical" => WeightSchemeKind::Theoretical,
                    _ => {
                        return Err(invalid(format!(
                            "weight_scheme must be practical or theoretical, got {v:?}"
                        )))
                    }
                }
            }
            "N" => self.n = parse_num(key, v)?,
            "N_list" => self.n_list = parse_list(key, v)?,
            "shifts" => self.shifts = parse_num(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "t0" => self.t0 = parse_num(key, v)?,
            "t1" => self.t1 = parse_num(key, v)?,
            "t_points" => self.t_points = parse_num(key, v)?,
            "t_ref" => self.t_ref = parse_num(key, v)?,
            "methods" => {
                self.methods = v
                    .split(',')
                    .map(|m| {
                        m.trim()
                            .parse::<Method>()
                            .map_err(|e| invalid(format!("methods: {e}")))
                    })
                    .collect::<Result<_, _>>()?
            }
            "cbc_target" => {
                self.cbc_target = match v {
                    "preint" => CbcTarget::Preint,
                    "plain" => CbcTarget::Plain,
                    _ => {
                        return Err(invalid(format!(
                            "cbc_target must be preint or plain, got {v:?}"
                        )))
                    }
                }
            }
            "vector_in" => self.vector_in = opt_string(v),
            "ks_samples" => self.ks_samples = parse_num(key, v)?,
            "ks_repetitions" => self.ks_repetitions = parse_num(key, v)?,
            "vector_file" => self.vector_file = v.to_string(),
            "estimate_prefix" => self.estimate_prefix = v.to_string(),
            "convergence_file" => self.convergence_file = v.to_string(),
            "kstest_file" => self.kstest_file = v.to_string(),
            "samples_file" => self.samples_file = v.to_string(),
            _ => {
                return Err(invalid(format!(
                    "unknown key {key:?} (known keys: {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.dim == 1 || self.dim == 2) {
            return Err(invalid(format!("dim must be 1 or 2, got {}", self.dim)));
        }
        if self.qoi_point.len() != self.dim {
            return Err(invalid(format!("qoi_point needs {} coordinates", self.dim)));
        }
        if self.family == Family::Tabulated && self.field_file.is_none() {
            return Err(invalid("family = tabulated needs field_file"));
        }
        if !(self.solver_tol > 0.0) || self.solver_maxit == 0 {
            return Err(invalid("solver_tol and solver_maxit must be positive"));
        }
        if self.mesh_m < 1 || self.mesh_m > 12 {
            return Err(invalid(format!(
                "mesh_m must lie in 1..=12, got {}",
                self.mesh_m
            )));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite() && self.theta.is_finite()) {
            return Err(invalid("alpha must be nonnegative and theta finite"));
        }
        match self.weight_kind {
            WeightKind::Gaussian => {
                if !(self.mu > 0.0 && self.mu < 0.5) {
                    return Err(invalid(format!(
                        "weight_kind = gaussian requires 0 < mu < 1/2, got mu = {}",
                        self.mu
                    )));
                }
                if !(self.eps > self.mu && self.eps <= 0.5) {
                    return Err(invalid(format!(
                        "weight_kind = gaussian requires mu < eps <= 1/2, got eps = {} with mu = {}",
                        self.eps, self.mu
                    )));
                }
            }
            WeightKind::Exponential => {
                if !(self.mu > 0.0 && self.mu.is_finite()) {
                    return Err(invalid(format!(
                        "weight_kind = exponential requires mu > 0, got {}",
                        self.mu
                    )));
                }
                if !(self.eps > 0.0 && self.eps <= 0.5) {
                    return Err(invalid(format!(
                        "eps must lie in (0, 1/2], got {}",
                        self.eps
                    )));
                }
            }
        }
        if self.n < 2 || self.n_list.iter().any(|&n| n < 2) || self.n_list.is_empty() {
            return Err(invalid("N and every N_list entry must be at least 2"));
        }
        if self.shifts < 2 {
            return Err(invalid(format!(
                "shifts must be at least 2 to estimate an RMSE, got {}",
                self.shifts
            )));
        }
        if !(self.t0 < self.t1) || self.t_points < 2 {
            return Err(invalid("the t-grid needs t0 < t1 and t_points >= 2"));
        }
        if self.methods.is_empty() {
            return Err(invalid("methods must name at least one estimator"));
        }
        if self.ks_samples < 1 || self.ks_repetitions < 1 {
            return Err(invalid("ks_samples and ks_repetitions must be positive"));
        }
        Ok(())
    }

    pub fn weight_spec(&self) -> WeightFunctionSpec {
        WeightFunctionSpec {
            kind: self.weight_kind,
            mu: self.mu,
        }
    }

    /// Canonical `key = value` lines of the full configuration; parsing them
    /// back yields an equal configuration.
    pub fn echo(&self) -> Vec<String> {
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let ns = |v: &[usize]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let opt = |v: &Option<String>| v.clone().unwrap_or_default();
        let solver = match self.solver {
            SolverKind::Auto => "auto",
            SolverKind::Banded => "banded",
            SolverKind::Cg => "cg",
            SolverKind::CgJacobi => "cg-jacobi",
        };
        let kind = match self.weight_kind {
            WeightKind::Gaussian => "gaussian",
            WeightKind::Exponential => "exponential",
        };
        let scheme = match self.weight_scheme {
            WeightSchemeKind::Practical => "practical",
            WeightSchemeKind::Theoretical => "theoretical",
        };
        let family = match self.family {
            Family::PaperSine => "paper-sine",
            Family::Tabulated => "tabulated",
        };
        let target = match self.cbc_target {
            CbcTarget::Preint => "preint",
            CbcTarget::Plain => "plain",
        };
        let methods = self
            .methods
            .iter()
            .map(|m| m.name())
            .collect::<Vec<_>>()
            .join(",");
        let pairs: [(&str, String); 34] = [
            ("dim", self.dim.to_string()),
            ("s", self.s.to_string()),
            ("alpha", self.alpha.to_string()),
            ("theta", self.theta.to_string()),
            ("mesh_m", self.mesh_m.to_string()),
            ("family", family.into()),
            ("field_file", opt(&self.field_file)),
            ("qoi", "point".into()),
            ("qoi_point", list(&self.qoi_point)),
            ("solver", solver.into()),
            ("solver_tol", self.solver_tol.to_string()),
            ("solver_maxit", self.solver_maxit.to_string()),
            ("weight_kind", kind.into()),
            ("mu", self.mu.to_string()),
            ("eps", self.eps.to_string()),
            ("weight_scheme", scheme.into()),
            ("N", self.n.to_string()),
            ("N_list", ns(&self.n_list)),
            ("shifts", self.shifts.to_string()),
            ("seed", self.seed.to_string()),
            ("t0", self.t0.to_string()),
            ("t1", self.t1.to_string()),
            ("t_points", self.t_points.to_string()),
            ("t_ref", self.t_ref.to_string()),
            ("methods", methods),
            ("cbc_target", target.into()),
            ("vector_in", opt(&self.vector_in)),
            ("ks_samples", self.ks_samples.to_string()),
            ("ks_repetitions", self.ks_repetitions.to_string()),
            ("vector_file", self.vector_file.clone()),
            ("estimate_prefix", self.estimate_prefix.clone()),
            ("convergence_file", self.convergence_file.clone()),
            ("kstest_file", self.kstest_file.clone()),
            ("samples_file", self.samples_file.clone()),
        ];
        pairs.iter().map(|(k, v)| format!("{k} = {v}")).collect()
    }

    /// Echo plus the hash line, as written into output headers.
    pub fn header(&self) -> Vec<String> {
        let mut h = self.echo();
        h.push(format!("config_hash = {:016x}", self.hash()));
        h
    }

    /// 64-bit FNV-1a hash of the echoed configuration.
    pub fn hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for line in self.echo() {
            for b in line.bytes().chain(std::iter::once(b'\n')) {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}
