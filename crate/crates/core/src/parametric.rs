//! The quantity of interest as a function of the random parameters:
//! φ(w, z) = φ̄(z) + Σ_{i=0}^{s} w_i φ_i(z) with φ̄ = G(ū(·,z)) and
//! φ_i = G(u_i(·,z)), plus the a-priori bounds built on the expansion norms.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{
    self, CsrMatrix, Discretization, Factorization, Mesh, PointFunctional, SolverOptions,
};
use crate::fields::FieldExpansion;
use crate::special::factorial;

/// φ̄(z), φ₀(z), …, φ_s(z) at one z.
#[derive(Debug, Clone, PartialEq)]
pub struct QoiComponents {
    pub z: Vec<f64>,
    pub phibar: f64,
    /// φ₀(z), …, φ_s(z)
    pub phi: Vec<f64>,
    /// exp(−Σ b_j|z_j|)
    pub a_min_lb: f64,
    /// exp(Σ b_j|z_j|)
    pub a_max_ub: f64,
}

impl QoiComponents {
    /// φ(w, z) for w = (w₀, …, w_s).
    pub fn value(&self, w: &[f64]) -> f64 {
        self.phibar + w.iter().zip(&self.phi).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// exp(Σ b_j|z_j|)
pub fn a_max_bound(fe: &FieldExpansion, z: &[f64]) -> f64 {
    fe.norms()
        .b
        .iter()
        .zip(z)
        .map(|(b, zj)| b * zj.abs())
        .sum::<f64>()
        .exp()
}

/// exp(−Σ b_j|z_j|)
pub fn a_min_bound(fe: &FieldExpansion, z: &[f64]) -> f64 {
    1.0 / a_max_bound(fe, z)
}

/// K₀(z) = a_max(z) (1 + ‖u₀(·,0)‖_{W^{1,∞}}/ℓ₀_inf · Σ_j |z_j| b̂_j).
pub fn k0_bound(fe: &FieldExpansion, u0_w1inf: f64, z: &[f64]) -> f64 {
    let n = fe.norms();
    let sum: f64 = n.b_hat.iter().zip(z).map(|(b, zj)| b * zj.abs()).sum();
    a_max_bound(fe, z) * (1.0 + u0_w1inf / n.ell0_inf * sum)
}

/// Upper bound on ‖∂^ν u(·, w, z)‖_V for ν = (ν_w, ν_z):
/// |ν_z|!/(ln 2)^{|ν_z|} Π b_j^{ν_{z,j}} · S / a_min(z), where
/// S = c̄ + Σ_i c_i|w_i| for ν_w = 0, S = c_k for ν_w = e_k, and the bound
/// is 0 when |ν_w| ≥ 2 (the solution is affine in w).
pub fn derivative_bound(
    fe: &FieldExpansion,
    nu_w: &[usize],
    nu_z: &[usize],
    w: &[f64],
    z: &[f64],
) -> Result<f64> {
    let s = fe.s();
    for (what, len, expected) in [
        ("nu_w", nu_w.len(), s + 1),
        ("nu_z", nu_z.len(), s),
        ("w", w.len(), s + 1),
        ("z", z.len(), s),
    ] {
        if len != expected {
            return Err(Error::LengthMismatch {
                what,
                expected,
                got: len,
            });
        }
    }
    let n = fe.norms();
    let order_w: usize = nu_w.iter().sum();
    let source = match order_w {
        0 => n.c_bar + n.c.iter().zip(w).map(|(c, wi)| c * wi.abs()).sum::<f64>(),
        1 => {
            n.c[nu_w
                .iter()
                .position(|&v| v == 1)
                .expect("one entry equals 1")]
        }
        _ => return Ok(0.0),
    };
    let order_z: usize = nu_z.iter().sum();
    let prod: f64 =
        n.b.iter()
            .zip(nu_z)
            .map(|(b, &k)| b.powi(k as i32))
            .product();
    Ok(
        factorial(order_z) / std::f64::consts::LN_2.powi(order_z as i32) * prod * source
            / a_min_bound(fe, z),
    )
}

/// Reusable per-worker buffers for [`ParametricModel::qoi_components_with`].
#[derive(Debug, Clone)]
pub struct Workspace {
    matrix: CsrMatrix,
}

/// Discretized problem with a point-evaluation functional.
///
/// φ̄ and φ_i are computed with one adjoint solve A(z)v = g, where g is the
/// DOF representation of G: φ_i = b_iᵀv for every load vector b_i. This is
/// algebraically identical to applying G to the s+2 forward solutions.
#[derive(Debug, Clone)]
pub struct ParametricModel {
    fe: Arc<FieldExpansion>,
    disc: Discretization,
    functional: PointFunctional,
    g: Vec<f64>,
    solver: SolverOptions,
    phi0_at_zero: f64,
    u0_w1inf: f64,
    g_norm: f64,
}

impl ParametricModel {
    pub fn new(
        fe: Arc<FieldExpansion>,
        mesh: Mesh,
        x_star: &[f64],
        solver: SolverOptions,
    ) -> Result<Self> {
        let functional = fem::point_functional(&mesh, x_star)?;
        let g = functional.dof_vector(&mesh);
        let disc = Discretization::new(mesh, &fe)?;
        let zero = vec![0.0; fe.s()];
        let sys = disc.assemble(&zero)?;
        let fact = Factorization::new(&sys.matrix, &solver)?;
        let u0 = disc.mesh().expand_dofs(&fact.solve(&disc.loads()[1])?);
        let phi0_at_zero = functional.apply(&u0);
        let mesh = disc.mesh();
        let max_val = u0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let max_grad = (0..mesh.num_elements()).fold(0.0f64, |m, e| {
            let gr = mesh.element_gradient(&u0, e);
            m.max(gr[0].hypot(gr[1]))
        });
        let v = fact.solve(&g)?;
        let g_norm = g
            .iter()
            .zip(&v)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            .max(0.0)
            .sqrt();
        Ok(Self {
            fe,
            disc,
            functional,
            g,
            solver,
            phi0_at_zero,
            u0_w1inf: max_val.max(max_grad),
            g_norm,
        })
    }

    pub fn fields(&self) -> &FieldExpansion {
        &self.fe
    }

    pub fn mesh(&self) -> &Mesh {
        self.disc.mesh()
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    pub fn functional(&self) -> &PointFunctional {
        &self.functional
    }

    pub fn s(&self) -> usize {
        self.fe.s()
    }

    /// φ₀(0) = G(u₀(·,0)).
    pub fn phi0_at_zero(&self) -> f64 {
        self.phi0_at_zero
    }

    /// max(max nodal |u₀(·,0)|, max element |∇u₀(·,0)|).
    pub fn u0_w1inf(&self) -> f64 {
        self.u0_w1inf
    }

    /// √(gᵀA(0)⁻¹g): the discrete dual norm of G on this mesh, a finite
    /// stand-in for ‖G‖_{V*} (point evaluation is unbounded on H¹ in 2D).
    pub fn g_norm(&self) -> f64 {
        self.g_norm
    }

    pub fn workspace(&self) -> Workspace {
        Workspace {
            matrix: self.disc.empty_matrix(),
        }
    }

    pub fn qoi_components(&self, z: &[f64]) -> Result<QoiComponents> {
        self.qoi_components_with(z, &mut self.workspace())
    }

    /// One assembly and one adjoint solve; fails with
    /// [`Error::MonotonicityViolated`] when φ₀(z) ≤ 0.
    pub fn qoi_components_with(&self, z: &[f64], ws: &mut Workspace) -> Result<QoiComponents> {
        self.disc.assemble_into(z, &mut ws.matrix)?;
        let v = Factorization::new(&ws.matrix, &self.solver)?.solve(&self.g)?;
        let dot = |b: &Vec<f64>| b.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>();
        let loads = self.disc.loads();
        self.finish(z, dot(&loads[0]), loads[1..].iter().map(dot).collect())
    }

    /// Reference path: s+2 forward solves sharing one factorization, then G
    /// applied to each nodal solution.
    pub fn qoi_components_direct(&self, z: &[f64]) -> Result<QoiComponents> {
        let sys = self.disc.assemble(z)?;
        let sols = fem::solve_many(self.disc.mesh(), &sys, &self.solver)?;
        let vals: Vec<f64> = sols.iter().map(|u| self.functional.apply(u)).collect();
        self.finish(z, vals[0], vals[1..].to_vec())
    }

    fn finish(&self, z: &[f64], phibar: f64, phi: Vec<f64>) -> Result<QoiComponents> {
        if !(phi[0] > 0.0) {
            return Err(Error::MonotonicityViolated {
                phi0: phi[0],
                z: z.to_vec(),
            });
        }
        let a_max_ub = a_max_bound(&self.fe, z);
        Ok(QoiComponents {
            z: z.to_vec(),
            phibar,
            phi,
            a_min_lb: 1.0 / a_max_ub,
            a_max_ub,
        })
    }

    /// φ(w, z) from a single solve with the assembled full source
    /// ℓ̄ + Σ w_i ℓ_i (independent of the component decomposition).
    pub fn phi(&self, w: &[f64], z: &[f64]) -> Result<f64> {
        if w.len() != self.s() + 1 {
            return Err(Error::LengthMismatch {
                what: "w",
                expected: self.s() + 1,
                got: w.len(),
            });
        }
        let sys = self.disc.assemble(z)?;
        let mut rhs = sys.loads[0].clone();
        for (wi, b) in w.iter().zip(&sys.loads[1..]) {
            for (r, bi) in rhs.iter_mut().zip(b) {
                *r += wi * bi;
            }
        }
        let u = Factorization::new(&sys.matrix, &self.solver)?.solve(&rhs)?;
        Ok(self.functional.apply(&self.disc.mesh().expand_dofs(&u)))
    }

    pub fn k0_bound(&self, z: &[f64]) -> f64 {
        k0_bound(&self.fe, self.u0_w1inf, z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(dim: usize, s: usize, level: u32) -> ParametricModel {
        let fe = Arc::new(FieldExpansion::paper_family(dim, s, 1.0, 2.0).unwrap());
        let x = if dim == 1 {
            vec![0.5]
        } else {
            vec![0.5f64.sqrt(); 2]
        };
        ParametricModel::new(
            fe,
            Mesh::uniform(dim, level).unwrap(),
            &x,
            SolverOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn trivial_family_values() {
        let m = model(1, 0, 4);
        let q = m.qoi_components(&[]).unwrap();
        assert!((q.phibar - 0.125).abs() < 1e-14);
        assert!((q.phi[0] - 0.125).abs() < 1e-14);
        assert!((m.phi0_at_zero() - 0.125).abs() < 1e-14);
    }

    #[test]
    fn adjoint_matches_forward_solves() {
        let m = model(2, 4, 4);
        let z = [0.8, -1.2, 0.3, 2.1];
        let a = m.qoi_components(&z).unwrap();
        let b = m.qoi_components_direct(&z).unwrap();
        assert!((a.phibar - b.phibar).abs() < 1e-10);
        for (x, y) in a.phi.iter().zip(&b.phi) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn superposition_in_w() {
        let m = model(2, 3, 4);
        let z = [0.5, -0.4, 1.0];
        let w = [0.3, -1.2, 0.7, 2.0];
        let q = m.qoi_components(&z).unwrap();
        assert!((q.value(&w) - m.phi(&w, &z).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn k0_examples() {
        let m = model(2, 3, 3);
        assert_eq!(m.k0_bound(&[0.0; 3]), 1.0);
        let z = [0.4, -1.3, 2.2];
        let neg: Vec<f64> = z.iter().map(|v| -v).collect();
        assert_eq!(m.k0_bound(&z), m.k0_bound(&neg));
    }

    #[test]
    fn derivative_bound_cases() {
        let fe = FieldExpansion::paper_family(2, 2, 1.0, 2.0).unwrap();
        let w = [0.0; 3];
        let z = [0.0; 2];
        let b = derivative_bound(&fe, &[0, 0, 0], &[0, 0], &w, &z).unwrap();
        assert!((b - fe.norms().c_bar).abs() < 1e-15);
        assert_eq!(
            derivative_bound(&fe, &[1, 1, 0], &[0, 0], &w, &z).unwrap(),
            0.0
        );
        assert_eq!(
            derivative_bound(&fe, &[2, 0, 0], &[1, 0], &w, &z).unwrap(),
            0.0
        );
        let b = derivative_bound(&fe, &[0, 1, 0], &[2, 0], &w, &z).unwrap();
        let expect =
            2.0 / std::f64::consts::LN_2.powi(2) * fe.norms().b[0].powi(2) * fe.norms().c[1];
        assert!((b - expect).abs() < 1e-15 * expect);
        assert!(derivative_bound(&fe, &[0, 0], &[0, 0], &w, &z).is_err());
    }

    #[test]
    fn monotonicity_violation_is_reported() {
        let m = model(1, 0, 3);
        let err = m.finish(&[], 1.0, vec![-0.1]).unwrap_err();
        assert!(matches!(err, Error::MonotonicityViolated { .. }));
    }
}
