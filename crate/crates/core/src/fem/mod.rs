//! Piecewise-linear finite elements on the unit interval and unit square
//! with homogeneous Dirichlet data, one-point (centroid) quadrature for both
//! the coefficient and the source.

mod mesh;
mod sparse;

use std::sync::Arc;

pub use mesh::Mesh;
pub use sparse::{
    BandedCholesky, CsrMatrix, Factorization, Preconditioner, SolverKind, SolverOptions,
};

use crate::error::{Error, Result};
use crate::fields::FieldExpansion;

const NO_ENTRY: usize = usize::MAX;

/// Everything about the discrete problem that does not depend on z:
/// the sparsity pattern, the unit-coefficient element matrices with their
/// scatter positions, the coefficient basis at element centroids and the
/// load vectors for ℓ̄, ℓ₀, …, ℓ_s.
#[derive(Debug, Clone)]
pub struct Discretization {
    mesh: Mesh,
    s: usize,
    pattern: CsrMatrix,
    /// Per element, `k*k` local entries of ∫ ∇φ_a·∇φ_b.
    unit_stiffness: Vec<f64>,
    /// Per element, `k*k` positions in the CSR value array (or NO_ENTRY).
    scatter: Vec<usize>,
    /// a_j at the centroid of element e, stored at `e * s + (j − 1)`.
    a_centroid: Vec<f64>,
    loads: Arc<Vec<Vec<f64>>>,
}

/// Stiffness matrix A(z) on the interior DOFs plus the shared load vectors
/// (ℓ̄ first, then ℓ₀..ℓ_s).
#[derive(Debug, Clone)]
pub struct FemSystem {
    pub matrix: CsrMatrix,
    pub loads: Arc<Vec<Vec<f64>>>,
}

impl Discretization {
    pub fn new(mesh: Mesh, fe: &FieldExpansion) -> Result<Self> {
        if mesh.dim() != fe.dim() {
            return Err(Error::InvalidParameter(format!(
                "mesh dimension {} differs from field dimension {}",
                mesh.dim(),
                fe.dim()
            )));
        }
        let s = fe.s();
        let k = mesh.nodes_per_element();
        let ne = mesh.num_elements();
        let nd = mesh.num_dofs();

        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); nd];
        for e in 0..ne {
            for &p in mesh.element(e) {
                let Some(i) = mesh.dof_of_node(p) else {
                    continue;
                };
                for &q in mesh.element(e) {
                    if let Some(j) = mesh.dof_of_node(q) {
                        rows[i].push(j);
                    }
                }
            }
        }
        let pattern = CsrMatrix::with_pattern(rows);

        let mut unit_stiffness = Vec::with_capacity(ne * k * k);
        let mut scatter = Vec::with_capacity(ne * k * k);
        let mut a_centroid = Vec::with_capacity(ne * s);
        let mut loads = vec![vec![0.0; nd]; s + 2];
        for e in 0..ne {
            let area = mesh.measure(e);
            let grads = mesh.hat_gradients(e);
            let nodes = mesh.element(e);
            for a in 0..k {
                for b in 0..k {
                    unit_stiffness
                        .push(area * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]));
                    let pos = match (mesh.dof_of_node(nodes[a]), mesh.dof_of_node(nodes[b])) {
                        (Some(i), Some(j)) => pattern
                            .index_of(i, j)
                            .expect("pattern covers element couplings"),
                        _ => NO_ENTRY,
                    };
                    scatter.push(pos);
                }
            }
            let c = mesh.centroid(e);
            let x = &c[..mesh.dim()];
            for j in 1..=s {
                a_centroid.push(fe.a_basis(j, x));
            }
            let share = area / k as f64;
            let values: Vec<f64> = std::iter::once(fe.lbar(x))
                .chain((0..=s).map(|i| fe.ell(i, x)))
                .collect();
            for &p in nodes {
                if let Some(i) = mesh.dof_of_node(p) {
                    for (load, v) in loads.iter_mut().zip(&values) {
                        load[i] += share * v;
                    }
                }
            }
        }
        Ok(Self {
            mesh,
            s,
            pattern,
            unit_stiffness,
            scatter,
            a_centroid,
            loads: Arc::new(loads),
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// Load vectors (ℓ̄, ℓ₀, …, ℓ_s) on the interior DOFs.
    pub fn loads(&self) -> &[Vec<f64>] {
        &self.loads
    }

    /// An all-zero matrix with the stiffness sparsity pattern.
    pub fn empty_matrix(&self) -> CsrMatrix {
        self.pattern.clone()
    }

    /// Writes A(z) into `matrix`, which must come from [`Self::empty_matrix`].
    pub fn assemble_into(&self, z: &[f64], matrix: &mut CsrMatrix) -> Result<()> {
        if z.len() != self.s {
            return Err(Error::LengthMismatch {
                what: "z",
                expected: self.s,
                got: z.len(),
            });
        }
        let k2 = self.mesh.nodes_per_element().pow(2);
        let values = matrix.values_mut();
        values.fill(0.0);
        let s = self.s;
        for e in 0..self.mesh.num_elements() {
            let basis = &self.a_centroid[e * s..(e + 1) * s];
            let exponent: f64 = basis.iter().zip(z).map(|(a, zj)| a * zj).sum();
            let coef = exponent.exp();
            if !(coef.is_finite() && coef > 0.0) {
                return Err(Error::NonFiniteCoefficient { element: e });
            }
            let local = &self.unit_stiffness[e * k2..(e + 1) * k2];
            let pos = &self.scatter[e * k2..(e + 1) * k2];
            for (&p, &v) in pos.iter().zip(local) {
                if p != NO_ENTRY {
                    values[p] += coef * v;
                }
            }
        }
        Ok(())
    }

    pub fn assemble(&self, z: &[f64]) -> Result<FemSystem> {
        let mut matrix = self.empty_matrix();
        self.assemble_into(z, &mut matrix)?;
        Ok(FemSystem {
            matrix,
            loads: Arc::clone(&self.loads),
        })
    }
}

/// Builds the discretization and assembles A(z) in one go.
pub fn assemble(mesh: &Mesh, fe: &FieldExpansion, z: &[f64]) -> Result<FemSystem> {
    Discretization::new(mesh.clone(), fe)?.assemble(z)
}

/// Solves A x = b for every load vector with one factorization; returns
/// DOF vectors in the order (ū, u₀, …, u_s).
pub fn solve_many_dofs(sys: &FemSystem, opts: &SolverOptions) -> Result<Vec<Vec<f64>>> {
    let fact = Factorization::new(&sys.matrix, opts)?;
    sys.loads.iter().map(|b| fact.solve(b)).collect()
}

/// Like [`solve_many_dofs`] but returns full nodal vectors with zero
/// boundary values.
pub fn solve_many(mesh: &Mesh, sys: &FemSystem, opts: &SolverOptions) -> Result<Vec<Vec<f64>>> {
    Ok(solve_many_dofs(sys, opts)?
        .iter()
        .map(|x| mesh.expand_dofs(x))
        .collect())
}

/// Linear functional G(u_h) = Σ weight · u_h(node).
#[derive(Debug, Clone, PartialEq)]
pub struct PointFunctional {
    pub entries: Vec<(usize, f64)>,
}

impl PointFunctional {
    pub fn apply(&self, nodal: &[f64]) -> f64 {
        self.entries.iter().map(|&(n, w)| w * nodal[n]).sum()
    }

    /// Representation on the interior DOFs (boundary weights drop out since
    /// u_h vanishes there).
    pub fn dof_vector(&self, mesh: &Mesh) -> Vec<f64> {
        let mut g = vec![0.0; mesh.num_dofs()];
        for &(n, w) in &self.entries {
            if let Some(i) = mesh.dof_of_node(n) {
                g[i] += w;
            }
        }
        g
    }
}

/// Interpolation weights of point evaluation at `x_star`; zero weights are
/// dropped, so a node gets a single weight 1.
pub fn point_functional(mesh: &Mesh, x_star: &[f64]) -> Result<PointFunctional> {
    if x_star.len() != mesh.dim() {
        return Err(Error::LengthMismatch {
            what: "evaluation point",
            expected: mesh.dim(),
            got: x_star.len(),
        });
    }
    let (e, bary) = mesh.locate(x_star)?;
    let entries = mesh
        .element(e)
        .iter()
        .zip(bary)
        .filter(|(_, w)| *w != 0.0)
        .map(|(&n, w)| (n, w))
        .collect();
    Ok(PointFunctional { entries })
}

/// The unit-coefficient stiffness matrix on `mesh`.
pub fn poisson_matrix(mesh: &Mesh) -> Result<CsrMatrix> {
    let fe = FieldExpansion::paper_family(mesh.dim(), 0, 1.0, 1.0)?;
    Ok(assemble(mesh, &fe, &[])?.matrix)
}

/// Load vector of `f` on the interior DOFs with centroid quadrature.
pub fn load_vector(mesh: &Mesh, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let k = mesh.nodes_per_element();
    let mut b = vec![0.0; mesh.num_dofs()];
    for e in 0..mesh.num_elements() {
        let c = mesh.centroid(e);
        let v = f(&c[..mesh.dim()]) * mesh.measure(e) / k as f64;
        for &p in mesh.element(e) {
            if let Some(i) = mesh.dof_of_node(p) {
                b[i] += v;
            }
        }
    }
    b
}

/// Discrete dual norm √(bᵀA⁻¹b) for an arbitrary DOF vector b with the
/// Poisson matrix A; equals ‖∇v_h‖_{L²} where v_h solves the discrete problem.
pub fn discrete_dual_norm(mesh: &Mesh, b: &[f64]) -> Result<f64> {
    let a = poisson_matrix(mesh)?;
    let fact = Factorization::new(&a, &SolverOptions::default())?;
    let v = fact.solve(b)?;
    Ok(b.iter()
        .zip(&v)
        .map(|(x, y)| x * y)
        .sum::<f64>()
        .max(0.0)
        .sqrt())
}

/// ‖f‖_{V*} approximated by solving −Δv = f on `mesh`.
pub fn poisson_dual_norm(mesh: &Mesh, f: impl Fn(&[f64]) -> f64) -> Result<f64> {
    discrete_dual_norm(mesh, &load_vector(mesh, f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn unit(dim: usize) -> FieldExpansion {
        FieldExpansion::paper_family(dim, 0, 1.0, 2.0).unwrap()
    }

    #[test]
    fn one_dimensional_stencil() {
        let mesh = Mesh::uniform(1, 2).unwrap();
        let a = assemble(&mesh, &unit(1), &[]).unwrap().matrix;
        assert_eq!(a.dim(), 3);
        for i in 0..3 {
            assert!((a.get(i, i) - 8.0).abs() < 1e-12);
            if i + 1 < 3 {
                assert!((a.get(i, i + 1) + 4.0).abs() < 1e-12);
            }
        }
        assert_eq!(a.get(0, 2), 0.0);
        assert_eq!(a.asymmetry(), 0.0);
    }

    #[test]
    fn two_dimensional_single_node() {
        let mesh = Mesh::uniform(2, 1).unwrap();
        let a = assemble(&mesh, &unit(2), &[]).unwrap().matrix;
        assert_eq!(a.dim(), 1);
        assert!((a.get(0, 0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn five_point_stencil_interior() {
        let mesh = Mesh::uniform(2, 3).unwrap();
        let a = poisson_matrix(&mesh).unwrap();
        // interior dof away from the boundary: row has 4, four −1 neighbours, and
        // zero diagonal couplings
        let n = 7;
        let i = 3 * n + 3;
        assert!((a.get(i, i) - 4.0).abs() < 1e-12);
        for j in [i - 1, i + 1, i - n, i + n] {
            assert!((a.get(i, j) + 1.0).abs() < 1e-12);
        }
        assert!(a.get(i, i + n + 1).abs() < 1e-12);
    }

    #[test]
    fn stiffness_is_spd_for_random_z() {
        let fe = FieldExpansion::paper_family(2, 4, 1.0, 2.0).unwrap();
        let mesh = Mesh::uniform(2, 3).unwrap();
        let disc = Discretization::new(mesh, &fe).unwrap();
        let sys = disc.assemble(&[1.3, -0.7, 2.0, 0.1]).unwrap();
        assert!(sys.matrix.asymmetry() < 1e-14);
        let n = sys.matrix.dim();
        let mut state = 12345u64;
        for _ in 0..10 {
            let x: Vec<f64> = (0..n)
                .map(|_| {
                    state = state
                        .wrapping_mul(6364136223846793005)
                        .wrapping_add(1442695040888963407);
                    (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
                })
                .collect();
            let mut ax = vec![0.0; n];
            sys.matrix.matvec(&x, &mut ax);
            assert!(x.iter().zip(&ax).map(|(p, q)| p * q).sum::<f64>() > 0.0);
        }
    }

    #[test]
    fn overflowing_coefficient_is_reported() {
        let fe = FieldExpansion::paper_family(1, 1, 1.0, 2.0).unwrap();
        let mesh = Mesh::uniform(1, 3).unwrap();
        let disc = Discretization::new(mesh, &fe).unwrap();
        assert!(matches!(
            disc.assemble(&[1e5]),
            Err(Error::NonFiniteCoefficient { .. })
        ));
    }

    #[test]
    fn nodal_exactness_in_one_dimension() {
        let mesh = Mesh::uniform(1, 4).unwrap();
        let sys = assemble(&mesh, &unit(1), &[]).unwrap();
        for opts in [
            SolverOptions::default(),
            SolverOptions {
                kind: SolverKind::Cg,
                ..Default::default()
            },
        ] {
            let sols = solve_many(&mesh, &sys, &opts).unwrap();
            for (p, u) in mesh.nodes().iter().zip(&sols[1]) {
                let exact = p[0] * (1.0 - p[0]) / 2.0;
                assert!((u - exact).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn manufactured_solution_converges_quadratically() {
        let mut errors = Vec::new();
        for level in 3..=6 {
            let mesh = Mesh::uniform(2, level).unwrap();
            let a = poisson_matrix(&mesh).unwrap();
            let b = load_vector(&mesh, |x| {
                2.0 * PI * PI * (PI * x[0]).sin() * (PI * x[1]).sin()
            });
            let u = Factorization::new(&a, &SolverOptions::default())
                .unwrap()
                .solve(&b)
                .unwrap();
            let nodal = mesh.expand_dofs(&u);
            // L² error with a 3-point edge-midpoint rule per triangle
            let mut err2 = 0.0;
            for e in 0..mesh.num_elements() {
                let nodes = mesh.element(e);
                for (p, q) in [(0, 1), (1, 2), (2, 0)] {
                    let (xp, xq) = (mesh.node(nodes[p]), mesh.node(nodes[q]));
                    let mid = [(xp[0] + xq[0]) / 2.0, (xp[1] + xq[1]) / 2.0];
                    let uh = (nodal[nodes[p]] + nodal[nodes[q]]) / 2.0;
                    let ex = (PI * mid[0]).sin() * (PI * mid[1]).sin();
                    err2 += mesh.measure(e) / 3.0 * (uh - ex).powi(2);
                }
            }
            errors.push(err2.sqrt());
        }
        for w in errors.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!(rate > 1.8, "rate {rate} from {errors:?}");
        }
    }

    #[test]
    fn linearity_of_solutions() {
        let fe = FieldExpansion::paper_family(2, 2, 1.0, 2.0).unwrap();
        let mesh = Mesh::uniform(2, 3).unwrap();
        let sys = assemble(&mesh, &fe, &[0.4, -1.1]).unwrap();
        let sols = solve_many_dofs(&sys, &SolverOptions::default()).unwrap();
        let rhs: Vec<f64> = sys.loads[0]
            .iter()
            .zip(&sys.loads[1])
            .map(|(a, b)| a + b)
            .collect();
        let direct = Factorization::new(&sys.matrix, &SolverOptions::default())
            .unwrap()
            .solve(&rhs)
            .unwrap();
        for i in 0..direct.len() {
            assert!((direct[i] - sols[0][i] - sols[1][i]).abs() < 1e-12);
        }
    }

    #[test]
    fn all_solvers_agree_in_two_dimensions() {
        let fe = FieldExpansion::paper_family(2, 4, 1.0, 2.0).unwrap();
        let mesh = Mesh::uniform(2, 5).unwrap();
        let sys = assemble(&mesh, &fe, &[1.3, -2.0, 0.7, 2.5]).unwrap();
        let solve = |kind| {
            let opts = SolverOptions {
                kind,
                tol: 1e-13,
                ..Default::default()
            };
            Factorization::new(&sys.matrix, &opts)
                .unwrap()
                .solve(&sys.loads[1])
                .unwrap()
        };
        let direct = solve(SolverKind::Banded);
        let scale = direct.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for kind in [SolverKind::Cg, SolverKind::CgJacobi] {
            let x = solve(kind);
            for (u, v) in direct.iter().zip(&x) {
                assert!((u - v).abs() < 1e-10 * scale, "{kind:?}");
            }
        }
    }

    #[test]
    fn residual_and_galerkin_orthogonality() {
        let fe = FieldExpansion::paper_family(2, 3, 1.0, 2.0).unwrap();
        let mesh = Mesh::uniform(2, 4).unwrap();
        let sys = assemble(&mesh, &fe, &[0.9, -0.3, 1.4]).unwrap();
        let opts = SolverOptions {
            kind: SolverKind::Cg,
            ..Default::default()
        };
        let sols = solve_many_dofs(&sys, &opts).unwrap();
        let n = sys.matrix.dim();
        for (x, b) in sols.iter().zip(sys.loads.iter()) {
            let mut ax = vec![0.0; n];
            sys.matrix.matvec(x, &mut ax);
            let r: Vec<f64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
            let rn = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(rn <= 1e-10 * bn * 1.0001);
            for t in 0..20 {
                let v: Vec<f64> = (0..n).map(|i| ((i * 7 + t * 13) as f64).sin()).collect();
                let weak: f64 = v.iter().zip(&r).map(|(p, q)| p * q).sum();
                assert!(weak.abs() < 1e-8);
            }
        }
    }

    #[test]
    fn point_functional_examples() {
        let mesh = Mesh::uniform(2, 2).unwrap();
        let node = point_functional(&mesh, &[0.25, 0.5]).unwrap();
        assert_eq!(node.entries.len(), 1);
        assert_eq!(node.entries[0].1, 1.0);
        let (x0, y0) = (0.25, 0.5);
        let h = 0.25;
        let centroid = [x0 + 2.0 * h / 3.0, y0 + h / 3.0];
        let pf = point_functional(&mesh, &centroid).unwrap();
        assert_eq!(pf.entries.len(), 3);
        for &(_, w) in &pf.entries {
            assert!((w - 1.0 / 3.0).abs() < 1e-12);
        }
        let mesh1 = Mesh::uniform(1, 3).unwrap();
        let mid = point_functional(&mesh1, &[0.5]).unwrap();
        assert_eq!(mid.entries, vec![(4, 1.0)]);
        let p = point_functional(&mesh, &[0.5f64.sqrt(), 0.5f64.sqrt()]).unwrap();
        assert!((p.entries.iter().map(|e| e.1).sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(point_functional(&mesh, &[1.5, 0.5]).is_err());
    }

    #[test]
    fn discrete_maximum_principle_proxy() {
        let fe = FieldExpansion::paper_family(2, 4, 1.0, 2.0).unwrap();
        let mesh = Mesh::uniform(2, 3).unwrap();
        let disc = Discretization::new(mesh, &fe).unwrap();
        for k in 0..100 {
            let z: Vec<f64> = (0..4)
                .map(|j| 2.5 * ((k * 4 + j) as f64 * 1.7).sin())
                .collect();
            let sys = disc.assemble(&z).unwrap();
            let u0 = &solve_many_dofs(&sys, &SolverOptions::default()).unwrap()[1];
            assert!(u0.iter().all(|&v| v > 0.0));
        }
    }
}
