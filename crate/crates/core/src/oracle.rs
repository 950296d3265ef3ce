//! Brute-force reference computations for tests: tensor Gauss–Hermite
//! quadrature, adaptive quadrature on intervals and on ℝ, exhaustive lattice
//! searches and central finite differences.

use crate::error::{Error, Result};
use crate::qmc::{gcd, omega};
use crate::weights::WeightScheme;

pub const MAX_GH_DIMS: usize = 4;
pub const MAX_GH_NODES: usize = 64;

/// Eigenvalues and first eigenvector components of a symmetric tridiagonal
/// matrix (implicit QL with Wilkinson shifts). `e[i]` couples i and i+1.
fn tridiagonal_eigen(mut d: Vec<f64>, sub: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = d.len();
    let mut e = sub.to_vec();
    e.resize(n, 0.0);
    let mut z = vec![0.0; n];
    z[0] = 1.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::SolverBreakdown(
                    "tridiagonal QL did not converge".into(),
                ));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok((d, z))
}

/// n-point Gauss–Hermite rule for the standard normal density (weights sum
/// to 1), from the Jacobi matrix of the probabilists' Hermite polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_GH_NODES {
            return Err(Error::InvalidParameter(format!(
                "Gauss-Hermite needs 1 <= n <= {MAX_GH_NODES}, got {n}"
            )));
        }
        let sub: Vec<f64> = (1..n).map(|k| (k as f64).sqrt()).collect();
        let (x, z) = tridiagonal_eigen(vec![0.0; n], &sub)?;
        let mut pairs: Vec<(f64, f64)> = x.into_iter().zip(z.iter().map(|v| v * v)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        // symmetrize exactly
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            let j = n - 1 - i;
            nodes[i] = 0.5 * (pairs[i].0 - pairs[j].0);
            weights[i] = 0.5 * (pairs[i].1 + pairs[j].1);
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(*x))
            .sum()
    }
}

/// Tensor product of identical Gauss–Hermite rules in up to four dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorQuadrature {
    pub rule: GaussHermite,
    pub dims: usize,
}

impl TensorQuadrature {
    pub fn new(dims: usize, n: usize) -> Result<Self> {
        if dims > MAX_GH_DIMS {
            return Err(Error::InvalidParameter(format!(
                "tensor Gauss-Hermite supports at most {MAX_GH_DIMS} dimensions, got {dims}"
            )));
        }
        Ok(Self {
            rule: GaussHermite::new(n)?,
            dims,
        })
    }

    pub fn num_points(&self) -> usize {
        self.rule.len().pow(self.dims as u32)
    }

    /// Node and weight of the tensor point with linear index `idx`.
    pub fn point(&self, mut idx: usize, out: &mut [f64]) -> f64 {
        let n = self.rule.len();
        let mut w = 1.0;
        for o in out.iter_mut().take(self.dims) {
            let k = idx % n;
            idx /= n;
            *o = self.rule.nodes[k];
            w *= self.rule.weights[k];
        }
        w
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        let mut y = vec![0.0; self.dims];
        (0..self.num_points())
            .map(|i| {
                let w = self.point(i, &mut y);
                w * f(&y)
            })
            .sum()
    }
}

/// ∫ f(y) Π ρ(y_j) dy over ℝ^k with n nodes per dimension.
pub fn gh_integrate(f: impl Fn(&[f64]) -> f64, k: usize, n: usize) -> Result<f64> {
    Ok(TensorQuadrature::new(k, n)?.integrate(f))
}

/// Adaptive (double-exponential) quadrature on a finite interval.
pub fn integrate_interval(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    quadrature::integrate(f, a, b, tol).integral
}

/// ∫_ℝ f to relative accuracy about `rel_tol`, summing unit segments
/// outward from 0 in both directions until three consecutive segments
/// contribute less than `rel_tol`·10⁻³ of the running total (at most 10⁴
/// segments per side). Suited to integrands with Gaussian-like tails.
pub fn integrate_real_line(f: impl Fn(f64) -> f64, rel_tol: f64) -> f64 {
    let side = |sign: f64| {
        let mut total = 0.0f64;
        let mut quiet = 0;
        for k in 0..10_000 {
            let a = k as f64;
            let target = (rel_tol * 1e-3 * total.abs()).max(1e-300);
            let piece = quadrature::integrate(|y| f(sign * y), a, a + 1.0, target).integral;
            total += piece;
            if piece.abs() <= rel_tol * 1e-3 * total.abs() {
                quiet += 1;
                if quiet == 3 {
                    break;
                }
            } else {
                quiet = 0;
            }
        }
        total
    };
    side(1.0) + side(-1.0)
}

/// e²(z) by explicit summation over all nonempty coordinate subsets.
pub fn brute_worst_case_error_sq(n: usize, z: &[u64], weights: &WeightScheme) -> f64 {
    let d = z.len();
    assert!(d <= 20, "subset enumeration is limited to 20 dimensions");
    let mut total = 0.0;
    for mask in 1u32..(1 << d) {
        let u: Vec<usize> = (0..d).filter(|&j| (mask >> j) & 1 == 1).collect();
        let s: f64 = (0..n as u64)
            .map(|k| {
                u.iter()
                    .map(|&j| omega(((k * z[j]) % n as u64) as f64 / n as f64))
                    .product::<f64>()
            })
            .sum();
        total += weights.weight(&u) * s / n as f64;
    }
    total
}

/// Minimum of e² over every generating vector with components in 1..N
/// coprime to N; returns (minimizer found first in lexicographic order, e²).
pub fn exhaustive_lattice_search(n: usize, weights: &WeightScheme) -> (Vec<u64>, f64) {
    let d = weights.dims();
    let units: Vec<u64> = (1..n as u64).filter(|&z| gcd(z, n as u64) == 1).collect();
    assert!(
        (units.len() as f64).powi(d as i32) <= 1e7,
        "exhaustive search space too large"
    );
    let mut idx = vec![0usize; d];
    let mut best = (vec![], f64::INFINITY);
    loop {
        let z: Vec<u64> = idx.iter().map(|&i| units[i]).collect();
        let e = brute_worst_case_error_sq(n, &z, weights);
        if e < best.1 {
            best = (z, e);
        }
        let mut k = 0;
        loop {
            if k == d {
                return best;
            }
            idx[k] += 1;
            if idx[k] < units.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Default finite-difference step.
pub const FD_STEP: f64 = 1e-4;

/// Central difference of order 1 or 2 of f at `point` along `direction`.
pub fn fd_derivative(
    f: impl Fn(&[f64]) -> f64,
    point: &[f64],
    direction: &[f64],
    order: usize,
    h: f64,
) -> Result<f64> {
    if point.len() != direction.len() {
        return Err(Error::LengthMismatch {
            what: "direction",
            expected: point.len(),
            got: direction.len(),
        });
    }
    let at = |t: f64| {
        let x: Vec<f64> = point
            .iter()
            .zip(direction)
            .map(|(p, d)| p + t * d)
            .collect();
        f(&x)
    };
    match order {
        1 => Ok((at(h) - at(-h)) / (2.0 * h)),
        2 => Ok((at(h) - 2.0 * at(0.0) + at(-h)) / (h * h)),
        _ => Err(Error::InvalidParameter(format!(
            "finite differences of order {order} are not supported"
        ))),
    }
}
