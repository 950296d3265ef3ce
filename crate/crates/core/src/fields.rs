//! Deterministic expansion data for the random source
//! ℓ(x, w) = ℓ̄(x) + Σ_{i=0}^{s} w_i ℓ_i(x) and the lognormal coefficient
//! a(x, z) = exp(Σ_{j=1}^{s} z_j a_j(x)), together with the norms the
//! error constants are built from.

use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fem::{self, Mesh};

/// Norms of the expansion functions.
#[derive(Debug, Clone, PartialEq)]
pub struct Norms {
    /// b_j = ‖a_j‖_{L∞}, j = 1..s (stored at index j−1).
    pub b: Vec<f64>,
    /// b̂_j = ‖a_j‖_{W^{1,∞}} = max(‖a_j‖_∞, ‖∇a_j‖_∞), j = 1..s.
    pub b_hat: Vec<f64>,
    /// c_i = ‖ℓ_i‖_{V*}, i = 0..s.
    pub c: Vec<f64>,
    /// c̄ = ‖ℓ̄‖_{V*}.
    pub c_bar: f64,
    /// inf_D ℓ₀.
    pub ell0_inf: f64,
}

/// Source term selector for [`FieldExpansion::dual_norm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Mean,
    Index(usize),
}

#[derive(Debug, Clone)]
enum Family {
    /// ℓ̄ ≡ ℓ₀ ≡ 1 and sine modes decaying like 1/(1+(iπ)^θ).
    PaperSine,
    /// Nodal values of every basis function on a mesh.
    Tabulated(Box<Tabulated>),
}

#[derive(Debug, Clone)]
struct Tabulated {
    mesh: Mesh,
    lbar: Vec<f64>,
    ell: Vec<Vec<f64>>,
    a: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct FieldExpansion {
    dim: usize,
    s: usize,
    /// Coefficient scale; 1 for tabulated families.
    alpha: f64,
    /// Decay exponent; 0 for tabulated families.
    theta: f64,
    family: Family,
    norms: Norms,
}

fn sine_decay(i: usize, theta: f64) -> f64 {
    1.0 / (1.0 + (i as f64 * PI).powf(theta))
}

/// ‖1‖²_{V*} on the unit square from the sine expansion of the constant,
/// summed over one index in closed form:
/// (64/π⁶) Σ_{m odd} m⁻⁴ (π²/8 − π/(4m) · tanh(πm/2)).
fn unit_square_dual_norm_sq_of_one() -> f64 {
    let mut sum = 0.0;
    for m in (1..4001).step_by(2).rev() {
        let m = m as f64;
        sum += (PI * PI / 8.0 - PI / (4.0 * m) * (0.5 * PI * m).tanh()) / m.powi(4);
    }
    64.0 / PI.powi(6) * sum
}

impl FieldExpansion {
    /// The sine family: ℓ̄ ≡ ℓ₀ ≡ 1 and, for d = 2,
    /// ℓ_i = sin(iπx₁) sin((i+1)πx₂)/(1+(iπ)^θ), a_j = α sin(jπx₁) sin((j+1)πx₂)/(1+(jπ)^θ);
    /// for d = 1 the factors become sin(iπx).
    pub fn paper_family(dim: usize, s: usize, alpha: f64, theta: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alpha = {alpha} must be positive"
            )));
        }
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "theta = {theta} must be positive"
            )));
        }
        let b: Vec<f64> = (1..=s).map(|j| alpha * sine_decay(j, theta)).collect();
        let b_hat: Vec<f64> = (1..=s)
            .map(|j| {
                let top = if dim == 2 { j + 1 } else { j } as f64;
                alpha * sine_decay(j, theta) * (top * PI).max(1.0)
            })
            .collect();
        let one = match dim {
            1 => (1.0f64 / 12.0).sqrt(),
            _ => unit_square_dual_norm_sq_of_one().sqrt(),
        };
        let mut c = vec![one];
        for i in 1..=s {
            let ii = i as f64;
            let (l2, lambda) = match dim {
                1 => (0.5f64.sqrt(), (ii * PI).powi(2)),
                _ => (0.5, PI * PI * (ii * ii + (ii + 1.0) * (ii + 1.0))),
            };
            c.push(sine_decay(i, theta) * l2 / lambda.sqrt());
        }
        Ok(Self {
            dim,
            s,
            alpha,
            theta,
            family: Family::PaperSine,
            norms: Norms {
                b,
                b_hat,
                c,
                c_bar: one,
                ell0_inf: 1.0,
            },
        })
    }

    /// A family given by nodal values on `mesh`: `lbar`, `ell[0..=s]` and
    /// `a[0..s]` (the latter holding a₁..a_s). Norms are computed numerically.
    pub fn tabulated(
        mesh: Mesh,
        lbar: Vec<f64>,
        ell: Vec<Vec<f64>>,
        a: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let nn = mesh.num_nodes();
        if ell.is_empty() {
            return Err(Error::InvalidParameter(
                "tabulated family needs at least ell0".into(),
            ));
        }
        let s = ell.len() - 1;
        if a.len() != s {
            return Err(Error::LengthMismatch {
                what: "coefficient basis functions",
                expected: s,
                got: a.len(),
            });
        }
        for v in std::iter::once(&lbar).chain(&ell).chain(&a) {
            if v.len() != nn {
                return Err(Error::LengthMismatch {
                    what: "nodal values",
                    expected: nn,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Parse(
                    "non-finite nodal value in tabulated family".into(),
                ));
            }
        }
        let ell0_inf = ell[0].iter().copied().fold(f64::INFINITY, f64::min);
        if !(ell0_inf > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ell0 must be strictly positive on the domain (min nodal value {ell0_inf})"
            )));
        }
        let b: Vec<f64> = a
            .iter()
            .map(|v| v.iter().fold(0.0f64, |m, x| m.max(x.abs())))
            .collect();
        let b_hat: Vec<f64> = a
            .iter()
            .zip(&b)
            .map(|(v, &bj)| {
                (0..mesh.num_elements()).fold(bj, |m, e| {
                    let g = mesh.element_gradient(v, e);
                    m.max(g[0].hypot(g[1]))
                })
            })
            .collect();
        let dual = |nodal: &Vec<f64>| {
            fem::poisson_dual_norm(&mesh, |x| mesh.interpolate(nodal, x).unwrap_or(0.0))
        };
        let c_bar = dual(&lbar)?;
        let c = ell.iter().map(dual).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dim: mesh.dim(),
            s,
            alpha: 1.0,
            theta: 0.0,
            norms: Norms {
                b,
                b_hat,
                c,
                c_bar,
                ell0_inf,
            },
            family: Family::Tabulated(Box::new(Tabulated { mesh, lbar, ell, a })),
        })
    }

    /// Reads a tabulated family from CSV: a header naming the columns
    /// `lbar, ell0..ell<s>, a1..a<s>` (any order) and one row per mesh node
    /// in the mesh's natural node order.
    pub fn read_tabulated_csv(path: &Path, mesh: Mesh) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("{}: empty file", path.display())))?
            .split(',')
            .map(|h| h.trim().to_string())
            .collect();
        let mut columns = vec![Vec::new(); header.len()];
        for (row, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != header.len() {
                return Err(Error::Parse(format!(
                    "{}: row {} has {} fields, header has {}",
                    path.display(),
                    row + 2,
                    fields.len(),
                    header.len()
                )));
            }
            for (col, f) in columns.iter_mut().zip(fields) {
                col.push(
                    f.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?,
                );
            }
        }
        let mut take = |name: &str| -> Result<Vec<f64>> {
            let k = header.iter().position(|h| h == name).ok_or_else(|| {
                Error::Parse(format!("{}: missing column {name}", path.display()))
            })?;
            Ok(std::mem::take(&mut columns[k]))
        };
        let s = header
            .iter()
            .filter(|h| h.starts_with("ell"))
            .count()
            .saturating_sub(1);
        let lbar = take("lbar")?;
        let ell = (0..=s)
            .map(|i| take(&format!("ell{i}")))
            .collect::<Result<Vec<_>>>()?;
        let a = (1..=s)
            .map(|j| take(&format!("a{j}")))
            .collect::<Result<Vec<_>>>()?;
        if header.len() != 2 * s + 2 {
            return Err(Error::Parse(format!(
                "{}: unexpected columns in header {:?}",
                path.display(),
                header
            )));
        }
        Self::tabulated(mesh, lbar, ell, a)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn norms(&self) -> &Norms {
        &self.norms
    }

    /// Number of random parameters, 2s + 1.
    pub fn num_parameters(&self) -> usize {
        2 * self.s + 1
    }

    fn sine_mode(&self, i: usize, x: &[f64]) -> f64 {
        let ii = i as f64;
        match self.dim {
            1 => (ii * PI * x[0]).sin(),
            _ => (ii * PI * x[0]).sin() * ((ii + 1.0) * PI * x[1]).sin(),
        }
    }

    /// ℓ̄(x)
    pub fn lbar(&self, x: &[f64]) -> f64 {
        match &self.family {
            Family::PaperSine => 1.0,
            Family::Tabulated(t) => t.mesh.interpolate(&t.lbar, x).unwrap_or(0.0),
        }
    }

    /// ℓ_i(x), i = 0..=s.
    pub fn ell(&self, i: usize, x: &[f64]) -> f64 {
        match &self.family {
            Family::PaperSine if i == 0 => 1.0,
            Family::PaperSine => sine_decay(i, self.theta) * self.sine_mode(i, x),
            Family::Tabulated(t) => t.mesh.interpolate(&t.ell[i], x).unwrap_or(0.0),
        }
    }

    /// a_j(x), j = 1..=s.
    pub fn a_basis(&self, j: usize, x: &[f64]) -> f64 {
        match &self.family {
            Family::PaperSine => self.alpha * sine_decay(j, self.theta) * self.sine_mode(j, x),
            Family::Tabulated(t) => t.mesh.interpolate(&t.a[j - 1], x).unwrap_or(0.0),
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::LengthMismatch {
                what: "spatial point",
                expected: self.dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::OutsideDomain(x.to_vec()));
        }
        Ok(())
    }

    /// ℓ̄(x) + Σᵢ wᵢ ℓᵢ(x) with w = (w₀, …, w_s).
    pub fn evaluate_source(&self, x: &[f64], w: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        if w.len() != self.s + 1 {
            return Err(Error::LengthMismatch {
                what: "w",
                expected: self.s + 1,
                got: w.len(),
            });
        }
        Ok(self.lbar(x)
            + w.iter()
                .enumerate()
                .map(|(i, wi)| wi * self.ell(i, x))
                .sum::<f64>())
    }

    /// exp(Σⱼ zⱼ aⱼ(x)) with z = (z₁, …, z_s).
    pub fn evaluate_coefficient(&self, x: &[f64], z: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        if z.len() != self.s {
            return Err(Error::LengthMismatch {
                what: "z",
                expected: self.s,
                got: z.len(),
            });
        }
        Ok(z.iter()
            .enumerate()
            .map(|(j, zj)| zj * self.a_basis(j + 1, x))
            .sum::<f64>()
            .exp())
    }

    /// ‖ℓ‖_{V*} for ℓ̄ or ℓ_i.
    pub fn dual_norm(&self, which: Source) -> Result<f64> {
        match which {
            Source::Mean => Ok(self.norms.c_bar),
            Source::Index(i) if i <= self.s => Ok(self.norms.c[i]),
            Source::Index(i) => Err(Error::IndexOutOfRange {
                what: "source basis",
                index: i,
                len: self.s + 1,
            }),
        }
    }

    /// ‖ℓ‖_{V*} computed by solving −Δv = ℓ on `mesh` and returning ‖∇v_h‖_{L²}.
    pub fn numerical_dual_norm(&self, which: Source, mesh: &Mesh) -> Result<f64> {
        match which {
            Source::Mean => fem::poisson_dual_norm(mesh, |x| self.lbar(x)),
            Source::Index(i) if i <= self.s => fem::poisson_dual_norm(mesh, |x| self.ell(i, x)),
            Source::Index(i) => Err(Error::IndexOutOfRange {
                what: "source basis",
                index: i,
                len: self.s + 1,
            }),
        }
    }
}
