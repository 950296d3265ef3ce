//! Symmetric sparse storage and the two linear solvers used for the
//! stiffness systems: a banded Cholesky factorization (cheap for 1D and
//! coarse 2D meshes) and preconditioned conjugate gradients.

use crate::error::{Error, Result};

/// Compressed sparse row matrix; rows sorted by column.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds the sparsity pattern from per-row column sets; values are zero.
    pub fn with_pattern(rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut cols in rows {
            cols.sort_unstable();
            cols.dedup();
            col_idx.extend(cols);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        Self {
            n,
            row_ptr,
            col_idx,
            values: vec![0.0; nnz],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Position of entry (i, j) in the value array.
    pub fn index_of(&self, i: usize, j: usize) -> Option<usize> {
        let cols = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        cols.binary_search(&j).ok().map(|k| self.row_ptr[i] + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.index_of(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    /// max |A_ij − A_ji|
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Largest |i − j| over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|i| {
                self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
                    .iter()
                    .map(move |&j| i.abs_diff(j))
            })
            .max()
            .unwrap_or(0)
    }
}

/// Which linear solver to use for the stiffness systems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolverKind {
    /// Banded Cholesky when the bandwidth is at most 64, CG otherwise.
    Auto,
    Banded,
    /// CG preconditioned by a modified incomplete factorization.
    Cg,
    /// CG with the diagonal preconditioner.
    CgJacobi,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub kind: SolverKind,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            kind: SolverKind::Auto,
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

const AUTO_BANDED_LIMIT: usize = 64;

/// Relaxation of the dropped-fill compensation in [`Preconditioner::Milu`];
/// 1 is the fully modified factorization.
const MILU_RELAXATION: f64 = 0.99;

/// CG preconditioners.
#[derive(Debug, Clone)]
pub enum Preconditioner {
    Jacobi(Vec<f64>),
    /// Zero-fill incomplete LU factors in the pattern of A, with dropped fill
    /// moved to the diagonal: `values` holds L (unit lower, strictly below the
    /// diagonal) and U (upper, including it).
    Milu {
        values: Vec<f64>,
        diag_pos: Vec<usize>,
    },
}

impl Preconditioner {
    pub fn jacobi(a: &CsrMatrix) -> Result<Self> {
        a.diagonal()
            .into_iter()
            .map(|d| {
                if d > 0.0 {
                    Ok(1.0 / d)
                } else {
                    Err(Error::SolverBreakdown(format!(
                        "non-positive diagonal entry {d}"
                    )))
                }
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::Jacobi)
    }

    pub fn milu(a: &CsrMatrix) -> Result<Self> {
        let n = a.n;
        let (rp, ci) = (&a.row_ptr, &a.col_idx);
        let diag_pos = (0..n)
            .map(|i| {
                a.index_of(i, i).ok_or_else(|| {
                    Error::SolverBreakdown(format!("missing diagonal entry in row {i}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut lu = a.values.clone();
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            for p in rp[i]..rp[i + 1] {
                pos[ci[p]] = p;
            }
            let di = diag_pos[i];
            for p in rp[i]..di {
                let k = ci[p];
                lu[p] /= lu[diag_pos[k]];
                let lik = lu[p];
                for q in diag_pos[k] + 1..rp[k + 1] {
                    let v = lik * lu[q];
                    match pos[ci[q]] {
                        usize::MAX => lu[di] -= MILU_RELAXATION * v,
                        pp => lu[pp] -= v,
                    }
                }
            }
            if !(lu[di] > 0.0) || !lu[di].is_finite() {
                return Err(Error::SolverBreakdown(format!(
                    "incomplete factorization pivot {:e} in row {i}",
                    lu[di]
                )));
            }
            for p in rp[i]..rp[i + 1] {
                pos[ci[p]] = usize::MAX;
            }
        }
        Ok(Self::Milu {
            values: lu,
            diag_pos,
        })
    }

    /// out = M⁻¹ r.
    fn apply(&self, a: &CsrMatrix, r: &[f64], out: &mut [f64]) {
        match self {
            Self::Jacobi(inv) => {
                for ((o, ri), d) in out.iter_mut().zip(r).zip(inv) {
                    *o = ri * d;
                }
            }
            Self::Milu { values, diag_pos } => {
                let (rp, ci) = (&a.row_ptr, &a.col_idx);
                for i in 0..a.n {
                    let mut acc = r[i];
                    for p in rp[i]..diag_pos[i] {
                        acc -= values[p] * out[ci[p]];
                    }
                    out[i] = acc;
                }
                for i in (0..a.n).rev() {
                    let mut acc = out[i];
                    for p in diag_pos[i] + 1..rp[i + 1] {
                        acc -= values[p] * out[ci[p]];
                    }
                    out[i] = acc / values[diag_pos[i]];
                }
            }
        }
    }
}

/// A factorized (or preconditioned) system that can be applied to many
/// right-hand sides.
pub enum Factorization<'a> {
    Banded(BandedCholesky),
    Cg {
        matrix: &'a CsrMatrix,
        precond: Preconditioner,
        tol: f64,
        max_iter: usize,
    },
}

impl<'a> Factorization<'a> {
    pub fn new(matrix: &'a CsrMatrix, opts: &SolverOptions) -> Result<Self> {
        let precond = match opts.kind {
            SolverKind::Banded => None,
            SolverKind::Auto if matrix.bandwidth() <= AUTO_BANDED_LIMIT => None,
            SolverKind::Auto | SolverKind::Cg => Some(Preconditioner::milu(matrix)?),
            SolverKind::CgJacobi => Some(Preconditioner::jacobi(matrix)?),
        };
        Ok(match precond {
            None => Self::Banded(BandedCholesky::factor(matrix)?),
            Some(precond) => Self::Cg {
                matrix,
                precond,
                tol: opts.tol,
                max_iter: opts.max_iter,
            },
        })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Banded(chol) => Ok(chol.solve(rhs)),
            Self::Cg {
                matrix,
                precond,
                tol,
                max_iter,
            } => conjugate_gradient(matrix, precond, rhs, *tol, *max_iter),
        }
    }
}

/// Lower-triangular band factor L with A = L Lᵀ.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    p: usize,
    /// Row i holds L[i][i-p..=i] at offsets 0..=p.
    band: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(matrix: &CsrMatrix) -> Result<Self> {
        let n = matrix.dim();
        let p = matrix.bandwidth();
        let w = p + 1;
        let mut band = vec![0.0; n * w];
        for i in 0..n {
            for (j, v) in matrix.row(i) {
                if j <= i {
                    band[i * w + (j + p - i)] = v;
                }
            }
        }
        for i in 0..n {
            let lo = i.saturating_sub(p);
            for j in lo..=i {
                let kmin = lo.max(j.saturating_sub(p));
                let mut sum = band[i * w + (j + p - i)];
                for k in kmin..j {
                    sum -= band[i * w + (k + p - i)] * band[j * w + (k + p - j)];
                }
                if i == j {
                    if sum <= 0.0 || !sum.is_finite() {
                        return Err(Error::SolverBreakdown(format!(
                            "matrix not positive definite at pivot {i} ({sum:e})"
                        )));
                    }
                    band[i * w + p] = sum.sqrt();
                } else {
                    band[i * w + (j + p - i)] = sum / band[j * w + p];
                }
            }
        }
        Ok(Self { n, p, band })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, p, w) = (self.n, self.p, self.p + 1);
        let mut y = rhs.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(p);
            let mut sum = y[i];
            for k in lo..i {
                sum -= self.band[i * w + (k + p - i)] * y[k];
            }
            y[i] = sum / self.band[i * w + p];
        }
        for i in (0..n).rev() {
            let hi = (i + p).min(n - 1);
            let mut sum = y[i];
            for k in i + 1..=hi {
                sum -= self.band[k * w + (i + p - k)] * y[k];
            }
            y[i] = sum / self.band[i * w + p];
        }
        y
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned CG; stops at ‖r‖ ≤ tol·‖b‖.
pub fn conjugate_gradient(
    a: &CsrMatrix,
    precond: &Preconditioner,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut zvec = vec![0.0; n];
    precond.apply(a, &r, &mut zvec);
    let mut p = zvec.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &zvec);
    for _ in 0..max_iter {
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::SolverBreakdown(format!(
                "CG curvature p'Ap = {pap:e} (matrix not SPD)"
            )));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if dot(&r, &r).sqrt() <= tol * b_norm {
            return Ok(x);
        }
        precond.apply(a, &r, &mut zvec);
        let rz_new = dot(&r, &zvec);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = zvec[i] + beta * p[i];
        }
    }
    Err(Error::SolverBreakdown(format!(
        "CG did not reach relative residual {tol:e} in {max_iter} iterations"
    )))
}
