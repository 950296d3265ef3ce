//! Acceptance suite: one PASS/FAIL line per criterion; exits nonzero if any
//! criterion fails.

mod common;

use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;

use preqmc::estimators::{
    convergence_sweep, estimate_qmc_preint, fd_consistency, ks_test, sample_qoi,
    trapezoid_consistency, uniform_grid, Method, SweepSettings,
};
use preqmc::oracle::{
    exhaustive_lattice_search, fd_derivative, integrate_real_line, TensorQuadrature, FD_STEP,
};
use preqmc::parametric::derivative_bound;
use preqmc::qmc::{cbc_construct, phi_tot, LatticeRule};
use preqmc::rng::{SeedSplitter, Stream};
use preqmc::special::{normal_cdf, normal_pdf, riemann_zeta};
use preqmc::weights::{i_psi, i_rho, WeightFunctionSpec, WeightScheme};

const SEED: u64 = 2024;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn desk_sweep(model: &preqmc::parametric::ParametricModel) -> preqmc::estimators::SweepResult {
    let settings = SweepSettings {
        n_list: vec![251, 503, 1009, 2003, 4001],
        methods: vec![Method::QmcPreint, Method::McPreint, Method::Qmc],
        shifts: 8,
        seed: SEED,
        t_grid: uniform_grid(-0.2, 0.3, 61).unwrap(),
        t_ref: -0.02,
        weights_preint: common::weights(model, false),
        weights_plain: common::weights(model, true),
    };
    convergence_sweep(model, &settings).unwrap()
}

fn convergence_rates(sweep: &preqmc::estimators::SweepResult) -> Outcome {
    let t = &sweep.table;
    let (qp_c, qp_p) = t.slopes(Method::QmcPreint);
    let (mp_c, mp_p) = t.slopes(Method::McPreint);
    let (q_c, _) = t.slopes(Method::Qmc);
    let in_mc = |v: f64| (-0.65..=-0.35).contains(&v);
    let pass = qp_c <= -0.85
        && qp_p <= -0.85
        && in_mc(mp_c)
        && in_mc(mp_p)
        && (-0.75..=-0.35).contains(&q_c);
    outcome(
        pass,
        format!(
            "qmc-preint cdf {qp_c:.3} pdf {qp_p:.3} (<= -0.85); mc-preint cdf {mp_c:.3} pdf {mp_p:.3} \
             (in [-0.65,-0.35]); qmc cdf {q_c:.3} (in [-0.75,-0.35])"
        ),
    )
}

fn oracle_equivalence() -> Outcome {
    let model = common::model(1, 1, 1.0, 2.0, 8);
    let ts = [-0.05, 0.0, 0.1];
    let cbc = cbc_construct(4001, &common::weights(&model, false)).unwrap();
    let rule = LatticeRule::new(4001, cbc.z_gen, 16, SEED).unwrap();
    let est = estimate_qmc_preint(&model, &rule, &ts).unwrap();
    let pdf = est.pdf_mean.as_ref().unwrap();

    let gh = TensorQuadrature::new(1, 64).unwrap();
    let comps: Vec<_> = gh
        .rule
        .nodes
        .iter()
        .map(|&z| model.qoi_components(&[z]).unwrap())
        .collect();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for (k, &t) in ts.iter().enumerate() {
        let (mut f_gh, mut p_gh) = (0.0, 0.0);
        for (q, wz) in comps.iter().zip(&gh.rule.weights) {
            for (&w1, ww) in gh.rule.nodes.iter().zip(&gh.rule.weights) {
                let xi = (t - q.phibar - w1 * q.phi[1]) / q.phi[0];
                f_gh += wz * ww * normal_cdf(xi);
                p_gh += wz * ww * normal_pdf(xi) / q.phi[0];
            }
        }
        let (ef, ep) = ((est.cdf_mean[k] - f_gh).abs(), (pdf[k] - p_gh).abs());
        worst = worst.max(ef).max(ep);
        parts.push(format!("t={t}: |dF|={ef:.1e} |df|={ep:.1e}"));
    }
    outcome(worst <= 1e-4, format!("{} (tol 1e-4)", parts.join(", ")))
}

fn trivial_family() -> Outcome {
    let model = common::model(1, 0, 1.0, 2.0, 6);
    let ts = uniform_grid(-0.3, 0.5, 17).unwrap();
    let mut worst: f64 = 0.0;
    for n in [2usize, 7, 64, 503] {
        let rule = LatticeRule::new(n, vec![], 4, SEED).unwrap();
        let est = estimate_qmc_preint(&model, &rule, &ts).unwrap();
        for (c, p) in est.cdf_reps.iter().zip(est.pdf_reps.as_ref().unwrap()) {
            for (k, &t) in ts.iter().enumerate() {
                let x = 8.0 * t - 1.0;
                worst = worst
                    .max((c[k] - normal_cdf(x)).abs())
                    .max((p[k] - 8.0 * normal_pdf(x)).abs());
            }
        }
    }
    outcome(
        worst <= 1e-10,
        format!("max deviation {worst:.2e} over N in {{2,7,64,503}}, 4 shifts (tol 1e-10)"),
    )
}

fn monotonicity() -> Outcome {
    let model = common::desk_model();
    let phi0_zero = model.phi0_at_zero();
    let mut rng = SeedSplitter::new(SEED).rng(Stream::Auxiliary, 1);
    let mut min_phi0 = f64::INFINITY;
    let mut min_margin = f64::INFINITY;
    let mut ok = true;
    for _ in 0..1000 {
        let z: Vec<f64> = (0..8).map(|_| rng.sample(StandardNormal)).collect();
        match model.qoi_components(&z) {
            Ok(q) => {
                let lower = phi0_zero / model.k0_bound(&z);
                min_phi0 = min_phi0.min(q.phi[0]);
                min_margin = min_margin.min(q.phi[0] / lower);
                ok &= q.phi[0] > 0.0 && q.phi[0] >= lower;
            }
            Err(_) => ok = false,
        }
    }
    outcome(
        ok,
        format!(
            "1000 draws: min phi_0 = {min_phi0:.3e}, min phi_0/(phi_0(0)/K_0) = {min_margin:.3}"
        ),
    )
}

fn derivative_bounds() -> Outcome {
    let s = 4;
    let model = common::model(2, s, 1.0, 2.0, 4);
    let g_norm = model.g_norm();
    let mut rng = SeedSplitter::new(SEED).rng(Stream::Auxiliary, 2);
    let mut worst_ratio: f64 = 0.0;
    let mut worst_second: f64 = 0.0;
    for _ in 0..100 {
        let y: Vec<f64> = (0..2 * s + 1).map(|_| rng.sample(StandardNormal)).collect();
        let (w, z) = y.split_at(s + 1);
        let f = |x: &[f64]| model.phi(&x[..s + 1], &x[s + 1..]).unwrap();
        for k in 0..2 * s + 1 {
            let mut dir = vec![0.0; 2 * s + 1];
            dir[k] = 1.0;
            let d = fd_derivative(f, &y, &dir, 1, FD_STEP).unwrap();
            let (mut nu_w, mut nu_z) = (vec![0; s + 1], vec![0; s]);
            if k <= s {
                nu_w[k] = 1;
                // φ is affine in w, so any step is exact up to rounding;
                // 1e-3 keeps the ε|φ|/h² cancellation noise well below 1e-8.
                let d2 = fd_derivative(f, &y, &dir, 2, 1e-3).unwrap();
                worst_second = worst_second.max(d2.abs());
            } else {
                nu_z[k - s - 1] = 1;
            }
            let bound = derivative_bound(model.fields(), &nu_w, &nu_z, w, z).unwrap() * g_norm;
            worst_ratio = worst_ratio.max(d.abs() / bound);
        }
    }
    outcome(
        worst_ratio <= 1.0 && worst_second <= 1e-8,
        format!("max |FD|/bound = {worst_ratio:.3e} (<= 1); max |second w-difference| = {worst_second:.1e} (<= 1e-8)"),
    )
}

fn consistency(sweep: &preqmc::estimators::SweepResult) -> Outcome {
    let mut ok = true;
    let mut worst_trap: f64 = 0.0;
    let mut worst_fd: f64 = 0.0;
    let mut runs = 0;
    for est in sweep.estimates.iter().filter(|e| e.pdf_reps.is_some()) {
        let tr = trapezoid_consistency(est).unwrap();
        let fd = fd_consistency(est).unwrap();
        ok &= tr.passed() && fd.passed();
        worst_trap = worst_trap.max(tr.lhs / tr.tol);
        worst_fd = worst_fd.max(fd.lhs / fd.tol);
        runs += 1;
    }
    outcome(
        ok && runs > 0,
        format!("{runs} preintegrated runs: worst trapezoid ratio {worst_trap:.3}, worst FD ratio {worst_fd:.3} (<= 1)"),
    )
}

fn constants() -> Outcome {
    let mut worst_rel: f64 = 0.0;
    for theta in [0.0, 0.1, 0.5, 1.0, 2.0] {
        let quad = integrate_real_line(|y| (2.0 * theta * y.abs()).exp() * normal_pdf(y), 1e-13);
        worst_rel = worst_rel.max((i_rho(theta) - quad).abs() / quad);
        for mu in [0.05, 0.25, 0.45] {
            let spec = WeightFunctionSpec::gaussian(mu).unwrap();
            let quad = integrate_real_line(|y| (2.0 * theta * y.abs() - mu * y * y).exp(), 1e-12);
            worst_rel = worst_rel.max((i_psi(&spec, theta).unwrap() - quad).abs() / quad);
        }
        for mu in [theta + 0.5, theta + 3.0] {
            let spec = WeightFunctionSpec::exponential(mu).unwrap();
            let quad = integrate_real_line(|y| (2.0 * (theta - mu) * y.abs()).exp(), 1e-12);
            worst_rel = worst_rel.max((i_psi(&spec, theta).unwrap() - quad).abs() / quad);
        }
    }
    // ζ(1.5): direct partial sum plus the Euler–Maclaurin tail of the remainder
    let n = 100_000usize;
    let x = 1.5f64;
    let tail = (n as f64).powf(1.0 - x) / (x - 1.0) - 0.5 * (n as f64).powf(-x)
        + x / 12.0 * (n as f64).powf(-x - 1.0);
    let zeta_series: f64 = (1..=n).rev().map(|k| (k as f64).powf(-x)).sum::<f64>() + tail;
    let zeta_err = (riemann_zeta(1.5) - zeta_series).abs();

    let w = WeightScheme::product(&[1.0, 1.0]).unwrap();
    let cbc = cbc_construct(5, &w).unwrap();
    let (_, best) = exhaustive_lattice_search(5, &w);
    let got = cbc.ln_error_sq.last().unwrap().exp();
    let cbc_ok = (got - best).abs() <= 1e-14;

    let tot = phi_tot(503);
    outcome(
        worst_rel <= 1e-8 && zeta_err <= 1e-8 && cbc_ok && tot == 502,
        format!(
            "I_psi/I_rho max rel err {worst_rel:.1e}; |zeta(1.5) err| {zeta_err:.1e}; \
             CBC(5,2) e^2 {got:.6e} vs exhaustive {best:.6e}; phi_tot(503) = {tot}"
        ),
    )
}

fn ks_validation(model: &preqmc::parametric::ParametricModel) -> Outcome {
    let grid = uniform_grid(-0.3, 0.4, 701).unwrap();
    let cbc = cbc_construct(503, &common::weights(model, false)).unwrap();
    let rule = LatticeRule::new(503, cbc.z_gen, 8, SEED).unwrap();
    let est = estimate_qmc_preint(model, &rule, &grid).unwrap();
    let mut accepted = 0;
    let mut ds = Vec::new();
    for rep in 0..20 {
        let samples = sample_qoi(model, 1000, SEED, rep).unwrap();
        let r = ks_test(&grid, &est.cdf_mean, &samples).unwrap();
        if !r.reject {
            accepted += 1;
        }
        ds.push(r.d);
    }
    let max_d = ds.iter().copied().fold(0.0, f64::max);
    outcome(
        accepted >= 18,
        format!(
            "fail to reject in {accepted}/20 (>= 18); max D = {max_d:.4}, threshold {:.4}",
            1.358 / 1000f64.sqrt()
        ),
    )
}

fn main() {
    let start = Instant::now();
    let desk = common::desk_model();
    let sweep = desk_sweep(&desk);
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("convergence-rate", Box::new(|| convergence_rates(&sweep))),
        ("oracle-equivalence", Box::new(oracle_equivalence)),
        ("exact-trivial-family", Box::new(trivial_family)),
        ("monotonicity", Box::new(monotonicity)),
        ("derivative-bounds", Box::new(derivative_bounds)),
        ("cdf-pdf-consistency", Box::new(|| consistency(&sweep))),
        ("constants", Box::new(constants)),
        ("ks-validation", Box::new(|| ks_validation(&desk))),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let t = Instant::now();
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "[{}] {name}: {} ({:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of 8 criteria passed in {:.0}s",
        8 - failed,
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
