//! Preintegration in w₀. Because φ is affine in w₀ with slope φ₀(z) > 0,
//! the indicator 1{φ(w₀, y) ≤ t} integrates against the standard normal
//! density in closed form: the cdf integrand becomes Φ(ξ) and the pdf
//! integrand ρ(ξ)/φ₀, with ξ(t, y) = (t − φ̄(z) − Σ_{i≥1} w_i φ_i(z))/φ₀(z).

use crate::error::{Error, Result};
use crate::parametric::QoiComponents;
use crate::special::{normal_cdf, normal_pdf};

/// A point y = (w₁, …, w_s, z₁, …, z_s) together with the QoI components at z.
#[derive(Debug, Clone, PartialEq)]
pub struct PreintPoint {
    /// w₁..w_s (w₀ has been integrated out).
    pub w: Vec<f64>,
    pub qoi: QoiComponents,
}

impl PreintPoint {
    pub fn new(w: Vec<f64>, qoi: QoiComponents) -> Result<Self> {
        if w.len() + 1 != qoi.phi.len() {
            return Err(Error::LengthMismatch {
                what: "w (without w0)",
                expected: qoi.phi.len() - 1,
                got: w.len(),
            });
        }
        if !(qoi.phi[0] > 0.0) {
            return Err(Error::MonotonicityViolated {
                phi0: qoi.phi[0],
                z: qoi.z.clone(),
            });
        }
        Ok(Self { w, qoi })
    }

    /// φ̄(z) + Σ_{i≥1} w_i φ_i(z), i.e. φ at w₀ = 0.
    pub fn offset(&self) -> f64 {
        offset(&self.w, &self.qoi)
    }

    pub fn phi0(&self) -> f64 {
        self.qoi.phi[0]
    }
}

/// φ̄(z) + Σ_{i≥1} w_i φ_i(z).
#[inline]
pub fn offset(w: &[f64], qoi: &QoiComponents) -> f64 {
    qoi.phibar + w.iter().zip(&qoi.phi[1..]).map(|(a, b)| a * b).sum::<f64>()
}

pub fn xi(t: f64, p: &PreintPoint) -> f64 {
    (t - p.offset()) / p.phi0()
}

/// Φ(ξ(t, y)).
pub fn g_cdf(t: f64, p: &PreintPoint) -> f64 {
    normal_cdf(xi(t, p))
}

/// ρ(ξ(t, y))/φ₀(z).
pub fn g_pdf(t: f64, p: &PreintPoint) -> f64 {
    normal_pdf(xi(t, p)) / p.phi0()
}

/// Adds g_cdf and g_pdf at every t to the accumulators; the offset is
/// computed once per point.
#[inline]
pub fn accumulate_grid(
    ts: &[f64],
    w: &[f64],
    qoi: &QoiComponents,
    cdf: &mut [f64],
    pdf: &mut [f64],
) {
    let base = offset(w, qoi);
    let phi0 = qoi.phi[0];
    let inv = 1.0 / phi0;
    for ((t, c), d) in ts.iter().zip(cdf.iter_mut()).zip(pdf.iter_mut()) {
        let x = (t - base) * inv;
        *c += normal_cdf(x);
        *d += normal_pdf(x) * inv;
    }
}

/// Adds the raw indicator 1{φ(w₀, y) ≤ t} at every t; `w_full` includes w₀.
#[inline]
pub fn accumulate_indicator(ts: &[f64], w_full: &[f64], qoi: &QoiComponents, cdf: &mut [f64]) {
    let value = qoi.value(w_full);
    for (t, c) in ts.iter().zip(cdf.iter_mut()) {
        if value <= *t {
            *c += 1.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trivial() -> PreintPoint {
        let q = QoiComponents {
            z: vec![],
            phibar: 0.125,
            phi: vec![0.125],
            a_min_lb: 1.0,
            a_max_ub: 1.0,
        };
        PreintPoint::new(vec![], q).unwrap()
    }

    fn generic() -> PreintPoint {
        let q = QoiComponents {
            z: vec![0.3, -0.2],
            phibar: 0.04,
            phi: vec![0.03, -0.004, 0.002],
            a_min_lb: 1.0,
            a_max_ub: 1.0,
        };
        PreintPoint::new(vec![0.7, -1.3], q).unwrap()
    }

    #[test]
    fn trivial_family_xi() {
        let p = trivial();
        for t in [-0.3, 0.0, 0.125, 0.4] {
            assert!((xi(t, &p) - (8.0 * t - 1.0)).abs() < 1e-14);
        }
        assert!((g_cdf(0.0, &p) - 0.158_655_253_931_457_05).abs() < 1e-15);
        assert!((g_pdf(0.125, &p) - 8.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-14);
        assert!((g_pdf(0.125 + 0.03, &p) - g_pdf(0.125 - 0.03, &p)).abs() < 1e-15);
        assert!((g_cdf(50.0, &p) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn xi_solves_the_defining_equation() {
        let p = generic();
        for t in [-0.1, 0.0, 0.05, 0.2] {
            let x = xi(t, &p);
            let mut w = vec![x];
            w.extend_from_slice(&p.w);
            assert!((p.qoi.value(&w) - t).abs() < 1e-12);
        }
        let d = xi(0.2, &p) - xi(-0.1, &p);
        assert!((d - 0.3 / p.phi0()).abs() < 1e-12);
    }

    #[test]
    fn pdf_is_t_derivative_of_cdf() {
        let p = generic();
        let h = 1e-5;
        for t in [-0.05, 0.0, 0.04, 0.1] {
            let fd = (g_cdf(t + h, &p) - g_cdf(t - h, &p)) / (2.0 * h);
            assert!((fd - g_pdf(t, &p)).abs() < 1e-6);
        }
    }

    #[test]
    fn grid_matches_pointwise() {
        let p = generic();
        let ts = [-0.1, 0.0, 0.1];
        let mut c = [0.0; 3];
        let mut d = [0.0; 3];
        accumulate_grid(&ts, &p.w, &p.qoi, &mut c, &mut d);
        for k in 0..3 {
            assert!((c[k] - g_cdf(ts[k], &p)).abs() < 1e-15);
            assert!((d[k] - g_pdf(ts[k], &p)).abs() < 1e-13);
        }
    }

    #[test]
    fn nonpositive_phi0_rejected() {
        let mut q = generic().qoi;
        q.phi[0] = 0.0;
        assert!(PreintPoint::new(vec![0.0, 0.0], q).is_err());
    }
}
