//! Weight functions ψ, the lattice-rule error constant ϱ(ε), the integrand
//! norm constants B_{q,η} and Γ_m, and the POD weights used to construct
//! lattice rules.
//!
//! Multi-indices η over the preintegrated variables are ordered
//! (w₁, …, w_s, z₁, …, z_s). Everything that can overflow is evaluated in
//! log space.

use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};
use crate::fields::Norms;
use crate::special::{ln_factorial, normal_cdf, riemann_zeta};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    /// ψ(y) = exp(−μ y²), μ ∈ (0, 1/2)
    Gaussian,
    /// ψ(y) = exp(−2μ|y|), μ > 0
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightFunctionSpec {
    pub kind: WeightKind,
    pub mu: f64,
}

impl WeightFunctionSpec {
    pub fn new(kind: WeightKind, mu: f64) -> Result<Self> {
        let ok = match kind {
            WeightKind::Gaussian => mu > 0.0 && mu < 0.5,
            WeightKind::Exponential => mu > 0.0 && mu.is_finite(),
        };
        if !ok {
            return Err(Error::InvalidParameter(match kind {
                WeightKind::Gaussian => {
                    format!("gaussian weight function needs 0 < mu < 1/2, got mu = {mu}")
                }
                WeightKind::Exponential => {
                    format!("exponential weight function needs mu > 0, got mu = {mu}")
                }
            }));
        }
        Ok(Self { kind, mu })
    }

    pub fn gaussian(mu: f64) -> Result<Self> {
        Self::new(WeightKind::Gaussian, mu)
    }

    pub fn exponential(mu: f64) -> Result<Self> {
        Self::new(WeightKind::Exponential, mu)
    }

    /// ψ(y)
    pub fn psi(&self, y: f64) -> f64 {
        match self.kind {
            WeightKind::Gaussian => (-self.mu * y * y).exp(),
            WeightKind::Exponential => (-2.0 * self.mu * y.abs()).exp(),
        }
    }
}

/// ln I_ρ(Θ) with I_ρ(Θ) = ∫ e^{2Θ|y|} ρ(y) dy = 2 e^{2Θ²} Φ(2Θ).
pub fn ln_i_rho(theta: f64) -> f64 {
    LN_2 + 2.0 * theta * theta + normal_cdf(2.0 * theta).ln()
}

pub fn i_rho(theta: f64) -> f64 {
    ln_i_rho(theta).exp()
}

/// ln I_ψ(Θ) with I_ψ(Θ) = ∫ e^{2Θ|y|} ψ(y) dy.
pub fn ln_i_psi(spec: &WeightFunctionSpec, theta: f64) -> Result<f64> {
    let mu = spec.mu;
    match spec.kind {
        WeightKind::Gaussian => Ok(LN_2
            + 0.5 * (PI / mu).ln()
            + theta * theta / mu
            + normal_cdf((2.0 / mu).sqrt() * theta).ln()),
        WeightKind::Exponential if mu > theta => Ok(-(mu - theta).ln()),
        WeightKind::Exponential => Err(Error::WeightFunctionTooWeak { mu, theta }),
    }
}

pub fn i_psi(spec: &WeightFunctionSpec, theta: f64) -> Result<f64> {
    Ok(ln_i_psi(spec, theta)?.exp())
}

/// The constant ϱ(ε) of the randomly shifted lattice rule error bound.
pub fn varrho(spec: &WeightFunctionSpec, eps: f64) -> Result<f64> {
    let mu = spec.mu;
    let lambda = 1.0 / (2.0 * (1.0 - eps));
    match spec.kind {
        WeightKind::Gaussian => {
            if !(eps > mu && eps <= 0.5) {
                return Err(Error::InvalidParameter(format!(
                    "gaussian weight function needs mu < eps <= 1/2, got mu = {mu}, eps = {eps}"
                )));
            }
            let c2 = (2.0 * PI).sqrt() / (PI.powf(2.0 - 2.0 * mu) * (1.0 - mu) * mu);
            Ok(2.0 * c2.powf(lambda) * riemann_zeta((1.0 - mu) / (1.0 - eps)))
        }
        WeightKind::Exponential => {
            if !(eps > 0.0 && eps <= 0.5) {
                return Err(Error::InvalidParameter(format!(
                    "eps must lie in (0, 1/2], got {eps}"
                )));
            }
            let c2 = 4.0 * (2.0 * PI).sqrt() * (2.0 * mu * mu / eps).exp()
                / (PI.powf(2.0 - eps) * (2.0 - eps) * eps);
            Ok(2.0 * c2.powf(lambda) * riemann_zeta((1.0 - eps / 2.0) / (1.0 - eps)))
        }
    }
}

/// Exponent 2(1−ε)/(3−2ε) of the optimal weights.
pub fn weight_exponent(eps: f64) -> f64 {
    2.0 * (1.0 - eps) / (3.0 - 2.0 * eps)
}

/// Problem-dependent inputs of B_{q,η} and Γ_m.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConstants {
    pub norms: Norms,
    /// ‖u₀(·,0)‖_{W^{1,∞}}
    pub u0_w1inf: f64,
    /// φ₀(0)
    pub phi0_at_zero: f64,
    /// ‖G‖_{V*} (or its discrete surrogate)
    pub g_norm: f64,
    /// max(|t₀|, |t₁|)
    pub t_abs_max: f64,
}

impl ProblemConstants {
    pub fn s(&self) -> usize {
        self.norms.b.len()
    }

    /// ln of (ℓ₀_inf + ‖u₀(·,0)‖)/(φ₀(0) ℓ₀_inf).
    fn ln_ratio(&self) -> f64 {
        let l = self.norms.ell0_inf;
        ((l + self.u0_w1inf) / (self.phi0_at_zero * l)).ln()
    }

    /// ln of c₀‖G‖(max|t| + 2‖G‖(c̄ + c₀ + 1)).
    fn ln_source_factor(&self) -> f64 {
        let n = &self.norms;
        let c0 = n.c[0];
        (c0 * self.g_norm * (self.t_abs_max + 2.0 * self.g_norm * (n.c_bar + c0 + 1.0))).ln()
    }

    /// Norm attached to coordinate k of the (w₁..w_s, z₁..z_s) ordering:
    /// c_{k+1} for w-coordinates, b_{k−s+1} for z-coordinates.
    fn coordinate_norm(&self, k: usize) -> f64 {
        let s = self.s();
        if k < s {
            self.norms.c[k + 1]
        } else {
            self.norms.b[k - s]
        }
    }
}

fn check_eta(eta: &[usize], s: usize) -> Result<()> {
    if eta.len() != 2 * s {
        return Err(Error::LengthMismatch {
            what: "multi-index eta",
            expected: 2 * s,
            got: eta.len(),
        });
    }
    Ok(())
}

/// ln I(Θ) where I is I_ψ if the coordinate is active and I_ρ otherwise.
fn ln_i(spec: &WeightFunctionSpec, active: bool, theta: f64) -> Result<f64> {
    if active {
        ln_i_psi(spec, theta)
    } else {
        Ok(ln_i_rho(theta))
    }
}

/// ln A_{q,η}.
pub fn ln_a_constant(
    q: usize,
    eta: &[usize],
    pc: &ProblemConstants,
    spec: &WeightFunctionSpec,
) -> Result<f64> {
    let s = pc.s();
    check_eta(eta, s)?;
    let m: usize = eta.iter().sum();
    let (mf, qf) = (m as f64, q as f64);
    let mut ln_a =
        -(2.0 * PI).ln() + (4.0 * mf + 2.0 * qf) * pc.ln_ratio() + 2.0 * mf * pc.ln_source_factor();
    let theta_c = 2.0 * mf + qf - 1.0;
    for i in 0..s {
        ln_a += ln_i(spec, eta[i] != 0, theta_c * pc.norms.c[i + 1])?;
    }
    let theta_b = 2.0 * (6.0 * mf + 4.0 * qf - 3.0);
    for j in 0..s {
        ln_a += ln_i(spec, eta[s + j] != 0, theta_b * pc.norms.b_hat[j])?;
    }
    Ok(ln_a)
}

/// ln B_{q,η} = ln[A_{q,η} (|η|+q−1)! (|η|!)² (ln 2)^{−2|η|} Π b_j^{2η_{s+j}} Π c_i^{2η_i}].
pub fn ln_b_constant(
    q: usize,
    eta: &[usize],
    pc: &ProblemConstants,
    spec: &WeightFunctionSpec,
) -> Result<f64> {
    let s = pc.s();
    check_eta(eta, s)?;
    let m: usize = eta.iter().sum();
    if m + q == 0 {
        return Err(Error::InvalidParameter(
            "B_{q,eta} needs |eta| + q >= 1".into(),
        ));
    }
    let mut ln_b =
        ln_a_constant(q, eta, pc, spec)? + ln_factorial(m + q - 1) + 2.0 * ln_factorial(m)
            - 2.0 * m as f64 * LN_2.ln();
    for (k, &e) in eta.iter().enumerate() {
        if e != 0 {
            ln_b += 2.0 * e as f64 * pc.coordinate_norm(k).ln();
        }
    }
    Ok(ln_b)
}

pub fn b_constant(
    q: usize,
    eta: &[usize],
    pc: &ProblemConstants,
    spec: &WeightFunctionSpec,
) -> Result<f64> {
    Ok(ln_b_constant(q, eta, pc, spec)?.exp())
}

/// ln Γ_m, the order-dependent factor of the optimal weights (Gaussian ψ).
pub fn ln_gamma_order(m: usize, pc: &ProblemConstants, spec: &WeightFunctionSpec) -> f64 {
    let s = pc.s();
    let mu = spec.mu;
    let mf = m as f64;
    let sum_c2: f64 = pc.norms.c[1..].iter().map(|c| c * c).sum();
    let sum_bh2: f64 = pc.norms.b_hat.iter().map(|b| b * b).sum();
    (s as f64 - 1.0) * LN_2 - PI.ln()
        + mf * (9.0 * PI.sqrt() / (LN_2 * LN_2 * mu.sqrt())).ln()
        + (4.0 * mf + 2.0) * pc.ln_ratio().max(0.0)
        + 2.0 * mf * pc.ln_source_factor()
        + 5.0 * ln_factorial(m)
        + 4.0 * mf * mf / mu * sum_c2
        + (12.0 * mf + 2.0).powi(2) / mu * sum_bh2
}

/// POD weights γ_η = Γ_|η| Π_{j∈η} γ_j, stored as logarithms. γ_∅ = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightScheme {
    ln_gamma: Vec<f64>,
    ln_order: Vec<f64>,
}

impl WeightScheme {
    /// `ln_order[m]` for m = 0..=dims (entry 0 is unused).
    pub fn new(ln_gamma: Vec<f64>, ln_order: Vec<f64>) -> Result<Self> {
        if ln_order.len() != ln_gamma.len() + 1 {
            return Err(Error::LengthMismatch {
                what: "order weights",
                expected: ln_gamma.len() + 1,
                got: ln_order.len(),
            });
        }
        if ln_gamma
            .iter()
            .chain(&ln_order[1..])
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidParameter(
                "weights must be positive and finite".into(),
            ));
        }
        Ok(Self { ln_gamma, ln_order })
    }

    /// Product weights Γ_m = 1.
    pub fn product(gamma: &[f64]) -> Result<Self> {
        Self::new(
            gamma.iter().map(|g| g.ln()).collect(),
            vec![0.0; gamma.len() + 1],
        )
    }

    /// γ_j = (norm_j²/ϱ(ε))^κ with κ = 2(1−ε)/(3−2ε) and Γ_m = (m!)⁵.
    ///
    /// Coordinates are ordered (w₁..w_s, z₁..z_s) with norms c_i and b_j;
    /// with `include_w0` a leading w₀ coordinate with norm c₀ is added (used
    /// when w₀ is not preintegrated).
    pub fn practical(
        norms: &Norms,
        spec: &WeightFunctionSpec,
        eps: f64,
        include_w0: bool,
    ) -> Result<Self> {
        let ln_gamma = practical_ln_gamma(norms, spec, eps, include_w0)?;
        let ln_order = (0..=ln_gamma.len())
            .map(|m| 5.0 * ln_factorial(m))
            .collect();
        Self::new(ln_gamma, ln_order)
    }

    /// The optimal POD weights: same γ_j as [`Self::practical`] but with
    /// order factors Γ_m^κ from the norm constants.
    pub fn theoretical(
        pc: &ProblemConstants,
        spec: &WeightFunctionSpec,
        eps: f64,
        include_w0: bool,
    ) -> Result<Self> {
        let ln_gamma = practical_ln_gamma(&pc.norms, spec, eps, include_w0)?;
        let kappa = weight_exponent(eps);
        let ln_order = (0..=ln_gamma.len())
            .map(|m| kappa * ln_gamma_order(m, pc, spec))
            .collect();
        Self::new(ln_gamma, ln_order)
    }

    pub fn dims(&self) -> usize {
        self.ln_gamma.len()
    }

    pub fn ln_gamma(&self) -> &[f64] {
        &self.ln_gamma
    }

    pub fn ln_order(&self) -> &[f64] {
        &self.ln_order
    }

    /// ln γ_u for a set of coordinates u (empty set → 0).
    pub fn ln_weight(&self, support: &[usize]) -> f64 {
        if support.is_empty() {
            return 0.0;
        }
        self.ln_order[support.len()] + support.iter().map(|&j| self.ln_gamma[j]).sum::<f64>()
    }

    pub fn weight(&self, support: &[usize]) -> f64 {
        self.ln_weight(support).exp()
    }

    /// Same weights with coordinates reordered: new coordinate k is old `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            ln_gamma: perm.iter().map(|&k| self.ln_gamma[k]).collect(),
            ln_order: self.ln_order.clone(),
        }
    }
}

fn practical_ln_gamma(
    norms: &Norms,
    spec: &WeightFunctionSpec,
    eps: f64,
    include_w0: bool,
) -> Result<Vec<f64>> {
    let kappa = weight_exponent(eps);
    let ln_rho = varrho(spec, eps)?.ln();
    let s = norms.b.len();
    let first = if include_w0 { 0 } else { 1 };
    Ok(norms.c[first..=s]
        .iter()
        .chain(&norms.b)
        .map(|v| kappa * (2.0 * v.ln() - ln_rho))
        .collect())
}

/// Support of a multi-index.
fn support(eta: &[usize]) -> Vec<usize> {
    eta.iter()
        .enumerate()
        .filter(|(_, &e)| e != 0)
        .map(|(k, _)| k)
        .collect()
}

/// γ*_η = [Γ_|η| ϱ(ε)^{−|η|} Π b_j^{2η_{s+j}} Π c_i^{2η_i}]^κ, γ*_0 = 1.
/// Overflows to ∞ for all but the smallest problems; see [`ln_gamma_star`].
pub fn gamma_star(
    eta: &[usize],
    eps: f64,
    spec: &WeightFunctionSpec,
    pc: &ProblemConstants,
) -> Result<f64> {
    Ok(ln_gamma_star(eta, eps, spec, pc)?.exp())
}

pub fn ln_gamma_star(
    eta: &[usize],
    eps: f64,
    spec: &WeightFunctionSpec,
    pc: &ProblemConstants,
) -> Result<f64> {
    check_eta(eta, pc.s())?;
    let m: usize = eta.iter().sum();
    if m == 0 {
        return Ok(0.0);
    }
    let ln_rho = varrho(spec, eps)?.ln();
    let mut inner = ln_gamma_order(m, pc, spec) - m as f64 * ln_rho;
    for (k, &e) in eta.iter().enumerate() {
        inner += 2.0 * e as f64 * pc.coordinate_norm(k).ln();
    }
    Ok(weight_exponent(eps) * inner)
}

/// γ_η = (|η|!)⁵ Π_{j∈supp η} γ_j with the practical γ_j.
pub fn gamma_practical(
    eta: &[usize],
    eps: f64,
    spec: &WeightFunctionSpec,
    norms: &Norms,
) -> Result<f64> {
    check_eta(eta, norms.b.len())?;
    let scheme = WeightScheme::practical(norms, spec, eps, false)?;
    Ok(scheme.weight(&support(eta)))
}

/// Which preintegrated integrand a norm bound refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrand {
    Cdf,
    Pdf,
}

/// ln Λ_η for η ≤ 1:
/// cdf: 1 at η = 0, (3^{|η|−1}(|η|−1)!)² B_{0,η} otherwise;
/// pdf: (3^{|η|}|η|!)² B_{1,η}.
pub fn ln_lambda(
    kind: Integrand,
    eta: &[usize],
    pc: &ProblemConstants,
    spec: &WeightFunctionSpec,
) -> Result<f64> {
    let m: usize = eta.iter().sum();
    let ln3 = 3f64.ln();
    match kind {
        Integrand::Cdf if m == 0 => Ok(0.0),
        Integrand::Cdf => {
            Ok(2.0 * ((m as f64 - 1.0) * ln3 + ln_factorial(m - 1))
                + ln_b_constant(0, eta, pc, spec)?)
        }
        Integrand::Pdf => {
            Ok(2.0 * (m as f64 * ln3 + ln_factorial(m)) + ln_b_constant(1, eta, pc, spec)?)
        }
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// ln e_m(x) for m = 0..=n given ln x_k; the recursion
/// e_m ← e_m + x_k e_{m−1} is carried out entirely in log space because the
/// x_k can span thousands of orders of magnitude.
fn ln_elementary_symmetric(ln_x: &[f64]) -> Vec<f64> {
    let n = ln_x.len();
    let mut e = vec![f64::NEG_INFINITY; n + 1];
    e[0] = 0.0;
    for (k, &lx) in ln_x.iter().enumerate() {
        for m in (1..=k + 1).rev() {
            e[m] = log_add_exp(e[m], lx + e[m - 1]);
        }
    }
    e
}

/// ln Σ_{η≤1} Λ_η/γ_η, the squared norm bound of the preintegrated
/// integrand for the given POD weights over the 2s preintegrated
/// coordinates. For each order m the sum over |η| = m factorizes into an
/// elementary symmetric polynomial of per-coordinate ratios.
pub fn ln_norm_bound_sq(
    kind: Integrand,
    pc: &ProblemConstants,
    spec: &WeightFunctionSpec,
    scheme: &WeightScheme,
) -> Result<f64> {
    let s = pc.s();
    let dims = 2 * s;
    if scheme.dims() != dims {
        return Err(Error::LengthMismatch {
            what: "weight scheme dimensions",
            expected: dims,
            got: scheme.dims(),
        });
    }
    let q = match kind {
        Integrand::Cdf => 0usize,
        Integrand::Pdf => 1usize,
    };
    let ln3 = 3f64.ln();
    let mut total = f64::NEG_INFINITY;
    for m in 0..=dims {
        if m == 0 && kind == Integrand::Cdf {
            total = log_add_exp(total, 0.0);
            continue;
        }
        let (mf, qf) = (m as f64, q as f64);
        let theta = |k: usize| {
            if k < s {
                (2.0 * mf + qf - 1.0) * pc.norms.c[k + 1]
            } else {
                2.0 * (6.0 * mf + 4.0 * qf - 3.0) * pc.norms.b_hat[k - s]
            }
        };
        let mut ln_inactive_all = 0.0;
        let mut ln_ratio = Vec::with_capacity(dims);
        for k in 0..dims {
            let ly = ln_i_rho(theta(k));
            ln_inactive_all += ly;
            if m > 0 {
                let lx = ln_i_psi(spec, theta(k))?;
                ln_ratio.push(lx - ly + 2.0 * pc.coordinate_norm(k).ln() - scheme.ln_gamma()[k]);
            }
        }
        let ln_em = if m == 0 {
            0.0
        } else {
            ln_elementary_symmetric(&ln_ratio)[m]
        };
        let ln_prefactor = match kind {
            Integrand::Cdf => 2.0 * ((mf - 1.0) * ln3 + ln_factorial(m - 1)),
            Integrand::Pdf => 2.0 * (mf * ln3 + ln_factorial(m)),
        };
        let ln_common = -(2.0 * PI).ln()
            + (4.0 * mf + 2.0 * qf) * pc.ln_ratio()
            + 2.0 * mf * pc.ln_source_factor()
            + ln_factorial(m + q - 1)
            + 2.0 * ln_factorial(m)
            - 2.0 * mf * LN_2.ln();
        let ln_order = if m == 0 { 0.0 } else { scheme.ln_order()[m] };
        total = log_add_exp(
            total,
            ln_prefactor + ln_common + ln_inactive_all + ln_em - ln_order,
        );
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::FieldExpansion;

    fn constants(s: usize) -> ProblemConstants {
        let fe = FieldExpansion::paper_family(2, s, 1.0, 2.0).unwrap();
        ProblemConstants {
            norms: fe.norms().clone(),
            u0_w1inf: 0.3,
            phi0_at_zero: 0.07,
            g_norm: 0.5,
            t_abs_max: 0.3,
        }
    }

    #[test]
    fn spec_validation() {
        assert!(WeightFunctionSpec::gaussian(0.6).is_err());
        assert!(WeightFunctionSpec::gaussian(0.0).is_err());
        assert!(WeightFunctionSpec::exponential(3.0).is_ok());
    }

    #[test]
    fn closed_form_special_values() {
        assert!((i_rho(0.0) - 1.0).abs() < 1e-15);
        let e = WeightFunctionSpec::exponential(1.0).unwrap();
        assert!((i_psi(&e, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            i_psi(&e, 1.0),
            Err(Error::WeightFunctionTooWeak { .. })
        ));
        let g = WeightFunctionSpec::gaussian(0.25).unwrap();
        assert!((i_psi(&g, 0.0).unwrap() - 2.0 * PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn varrho_reference_settings() {
        let g = WeightFunctionSpec::gaussian(0.05).unwrap();
        let r = varrho(&g, 0.1).unwrap();
        // independent evaluation with a brute-force zeta
        let x = (1.0 - 0.05) / (1.0 - 0.1);
        let n = 2_000_000usize;
        let zeta: f64 = (1..=n).rev().map(|k| (k as f64).powf(-x)).sum::<f64>()
            + (n as f64).powf(1.0 - x) / (x - 1.0)
            - 0.5 * (n as f64).powf(-x);
        let c2 = (2.0 * PI).sqrt() / (PI.powf(1.9) * 0.95 * 0.05);
        let oracle = 2.0 * c2.powf(1.0 / 1.8) * zeta;
        assert!((r - oracle).abs() / oracle < 1e-8, "{r} vs {oracle}");
        assert!(r > 10.0 && r < 1e3);
        for k in 1..=9 {
            let eps = 0.05 + 0.05 * k as f64;
            let v = varrho(&g, eps.min(0.5)).unwrap();
            assert!(v.is_finite() && v > 0.0);
        }
        assert!(varrho(&g, 0.05).is_err());
        let e = WeightFunctionSpec::exponential(0.5).unwrap();
        assert!(varrho(&e, 0.2).unwrap() > 0.0);
    }

    #[test]
    fn b_constant_zero_eta_reduces() {
        let pc = constants(2);
        let g = WeightFunctionSpec::gaussian(0.05).unwrap();
        let b = b_constant(1, &[0; 4], &pc, &g).unwrap();
        let ratio = (pc.norms.ell0_inf + pc.u0_w1inf) / (pc.phi0_at_zero * pc.norms.ell0_inf);
        let mut oracle = ratio.powi(2) / (2.0 * PI);
        for j in 0..2 {
            oracle *= i_rho(2.0 * pc.norms.b_hat[j]);
        }
        assert!((b - oracle).abs() / oracle < 1e-12);
        assert!(b_constant(0, &[0; 4], &pc, &g).is_err());
    }

    #[test]
    fn b_constant_matches_term_by_term() {
        let pc = constants(2);
        let g = WeightFunctionSpec::gaussian(0.05).unwrap();
        let eta = [1, 0, 0, 0];
        let b = b_constant(1, &eta, &pc, &g).unwrap();
        let n = &pc.norms;
        let ratio = (n.ell0_inf + pc.u0_w1inf) / (pc.phi0_at_zero * n.ell0_inf);
        let src = n.c[0] * pc.g_norm * (pc.t_abs_max + 2.0 * pc.g_norm * (n.c_bar + n.c[0] + 1.0));
        let ipsi = |t: f64| {
            2.0 * (PI / 0.05).sqrt() * (t * t / 0.05).exp() * normal_cdf((2.0f64 / 0.05).sqrt() * t)
        };
        let irho = |t: f64| 2.0 * (2.0 * t * t).exp() * normal_cdf(2.0 * t);
        let a = ratio.powi(6) * src.powi(2) / (2.0 * PI)
            * ipsi(2.0 * n.c[1])
            * irho(2.0 * n.c[2])
            * irho(2.0 * 7.0 * n.b_hat[0])
            * irho(2.0 * 7.0 * n.b_hat[1]);
        let oracle = a * 1.0 * 1.0 / LN_2.powi(2) * n.c[1].powi(2);
        assert!((b - oracle).abs() / oracle < 1e-10, "{b} vs {oracle}");
        assert!(b.is_finite() && b > 0.0);
    }

    #[test]
    fn gamma_order_zero_by_hand() {
        let pc = constants(2);
        let g = WeightFunctionSpec::gaussian(0.05).unwrap();
        let ratio = (pc.norms.ell0_inf + pc.u0_w1inf) / (pc.phi0_at_zero * pc.norms.ell0_inf);
        let sb: f64 = pc.norms.b_hat.iter().map(|b| b * b).sum();
        let oracle = 2.0 / PI * ratio.max(1.0).powi(2) * (4.0 / 0.05 * sb).exp();
        let v = ln_gamma_order(0, &pc, &g).exp();
        assert!((v - oracle).abs() / oracle < 1e-12);
    }

    #[test]
    fn empty_set_weights_are_one() {
        let pc = constants(2);
        let g = WeightFunctionSpec::gaussian(0.05).unwrap();
        assert_eq!(gamma_star(&[0; 4], 0.1, &g, &pc).unwrap(), 1.0);
        assert_eq!(gamma_practical(&[0; 4], 0.1, &g, &pc.norms).unwrap(), 1.0);
    }

    #[test]
    fn practical_single_coordinate() {
        let pc = constants(3);
        let g = WeightFunctionSpec::gaussian(0.05).unwrap();
        let r = varrho(&g, 0.1).unwrap();
        let kappa = 1.8 / 2.8;
        for j in 0..3 {
            let mut eta = [0; 6];
            eta[j] = 1;
            let v = gamma_practical(&eta, 0.1, &g, &pc.norms).unwrap();
            let oracle = (pc.norms.c[j + 1].powi(2) / r).powf(kappa);
            assert!((v - oracle).abs() / oracle < 1e-12);
            let mut eta = [0; 6];
            eta[3 + j] = 1;
            let v = gamma_practical(&eta, 0.1, &g, &pc.norms).unwrap();
            let oracle = (pc.norms.b[j].powi(2) / r).powf(kappa);
            assert!((v - oracle).abs() / oracle < 1e-12);
        }
    }

    #[test]
    fn pod_rule_matches_direct_evaluation() {
        let pc = constants(2);
        let g = WeightFunctionSpec::gaussian(0.05).unwrap();
        let scheme = WeightScheme::theoretical(&pc, &g, 0.1, false).unwrap();
        for mask in 1u32..16 {
            let eta: Vec<usize> = (0..4).map(|k| ((mask >> k) & 1) as usize).collect();
            let direct = ln_gamma_star(&eta, 0.1, &g, &pc).unwrap();
            let pod = scheme.ln_weight(&support(&eta));
            assert!(pod.is_finite());
            assert!((pod - direct).abs() < 1e-12 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn norm_bound_matches_subset_enumeration() {
        for s in 1..=5 {
            let pc = constants(s);
            let g = WeightFunctionSpec::gaussian(0.05).unwrap();
            let scheme = WeightScheme::practical(&pc.norms, &g, 0.1, false).unwrap();
            for kind in [Integrand::Cdf, Integrand::Pdf] {
                let fast = ln_norm_bound_sq(kind, &pc, &g, &scheme).unwrap();
                let mut brute = f64::NEG_INFINITY;
                for mask in 0u32..(1 << (2 * s)) {
                    let eta: Vec<usize> = (0..2 * s).map(|k| ((mask >> k) & 1) as usize).collect();
                    let term =
                        ln_lambda(kind, &eta, &pc, &g).unwrap() - scheme.ln_weight(&support(&eta));
                    brute = log_add_exp(brute, term);
                }
                assert!(
                    (fast - brute).abs() < 1e-9 * brute.abs().max(1.0),
                    "s={s} {kind:?}: {fast} vs {brute}"
                );
                assert!(fast.is_finite());
            }
        }
    }

    #[test]
    fn elementary_symmetric_small_case() {
        let x: [f64; 3] = [2.0, 3.0, 5.0];
        let e = ln_elementary_symmetric(&x.map(f64::ln));
        let expect = [1.0, 10.0, 31.0, 30.0];
        for m in 0..4 {
            assert!((e[m].exp() - expect[m]).abs() < 1e-12);
        }
    }
}
