//! Component-by-component construction of rank-1 lattice generating vectors
//! under POD weights.
//!
//! Criterion: the shift-averaged squared worst-case error
//! e²(z) = Σ_{∅≠u} γ_u (1/N) Σ_k Π_{j∈u} ω({k z_j/N}), ω(x) = x² − x + 1/6.
//! For POD weights it is evaluated with the order recursion
//! p_{d,ℓ}(k) = p_{d−1,ℓ}(k) + γ_d ω(k z_d/N) p_{d−1,ℓ−1}(k).
//! Each order ℓ is stored with its own logarithmic scale factor so that huge
//! order weights such as (ℓ!)⁵ and tiny product weights never overflow.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{gcd, is_prime, primitive_root};
use crate::error::{Error, Result};
use crate::weights::WeightScheme;

/// ω(x) = B₂(x) = x² − x + 1/6.
#[inline]
pub fn omega(x: f64) -> f64 {
    x * x - x + 1.0 / 6.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbcMethod {
    /// FFT-based search when N is prime, naive otherwise.
    Auto,
    Fast,
    Naive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CbcResult {
    pub n: usize,
    /// Generating vector in the caller's coordinate order.
    pub z_gen: Vec<u64>,
    /// Coordinates in the order they were constructed.
    pub order: Vec<usize>,
    /// ln e² after each construction step.
    pub ln_error_sq: Vec<f64>,
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

/// Scaled order polynomials p_ℓ(k) = exp(scale[ℓ]) · val[ℓ][k].
struct PodState {
    n: usize,
    val: Vec<Vec<f64>>,
    scale: Vec<f64>,
}

impl PodState {
    fn new(n: usize) -> Self {
        Self {
            n,
            val: vec![vec![1.0; n]],
            scale: vec![0.0],
        }
    }

    /// q(k) = Σ_{ℓ≥1} Γ_ℓ p_{ℓ−1}(k), returned as (ln factor, scaled values).
    fn q(&self, ln_order: &[f64]) -> (f64, Vec<f64>) {
        let top = self.val.len();
        let ln_coef: Vec<f64> = (0..top).map(|l| ln_order[l + 1] + self.scale[l]).collect();
        let m = ln_coef.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut q = vec![0.0; self.n];
        for (l, lc) in ln_coef.iter().enumerate() {
            let f = (lc - m).exp();
            if f == 0.0 {
                continue;
            }
            for (qk, pk) in q.iter_mut().zip(&self.val[l]) {
                *qk += f * pk;
            }
        }
        (m, q)
    }

    /// Appends one coordinate with weight exp(ln_gamma) and kernel values ω_k.
    fn update(&mut self, ln_gamma: f64, omega_vals: &[f64]) {
        let top = self.val.len();
        self.val.push(vec![0.0; self.n]);
        self.scale.push(f64::NEG_INFINITY);
        for l in (1..=top).rev() {
            let (lower, upper) = self.val.split_at_mut(l);
            let prev = &lower[l - 1];
            let cur = &mut upper[0];
            let a = self.scale[l];
            let b = ln_gamma + self.scale[l - 1];
            let new_scale = a.max(b);
            let fa = if a == f64::NEG_INFINITY {
                0.0
            } else {
                (a - new_scale).exp()
            };
            let fb = (b - new_scale).exp();
            let mut peak = 0.0f64;
            for k in 0..self.n {
                let v = fa * cur[k] + fb * omega_vals[k] * prev[k];
                cur[k] = v;
                peak = peak.max(v.abs());
            }
            if peak > 0.0 {
                for v in cur.iter_mut() {
                    *v /= peak;
                }
                self.scale[l] = new_scale + peak.ln();
            } else {
                self.scale[l] = f64::NEG_INFINITY;
            }
        }
    }
}

fn omega_table(n: usize, z: u64) -> Vec<f64> {
    let nn = n as u64;
    (0..n as u64)
        .map(|k| omega(((k * (z % nn)) % nn) as f64 / n as f64))
        .collect()
}

fn criterion(n: usize, z: u64, q: &[f64]) -> f64 {
    let nn = n as u64;
    q.iter()
        .enumerate()
        .map(|(k, qk)| omega(((k as u64 * z) % nn) as f64 / n as f64) * qk)
        .sum()
}

/// Candidates whose criteria agree to rounding are ties (e.g. z and z⁻¹ in
/// two dimensions); ties go to the smaller z so that the FFT and direct
/// searches pick the same vector.
fn better(best: (u64, f64), cand: (u64, f64)) -> (u64, f64) {
    let tol = 1e-10 * best.1.abs().max(cand.1.abs());
    if cand.1 < best.1 - tol || (cand.1 <= best.1 + tol && cand.0 < best.0) {
        cand
    } else {
        best
    }
}

/// Precomputed circulant data for the FFT search over z = g^a, prime N.
struct FastSearch {
    n: usize,
    gpow: Vec<u64>,
    c_hat: Vec<Complex<f64>>,
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    ifft: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl FastSearch {
    fn new(n: usize) -> Self {
        let m = n - 1;
        let g = primitive_root(n as u64);
        let mut gpow = Vec::with_capacity(m);
        let mut x = 1u64;
        for _ in 0..m {
            gpow.push(x);
            x = x * g % n as u64;
        }
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m);
        let ifft = planner.plan_fft_inverse(m);
        let mut c_hat: Vec<Complex<f64>> = gpow
            .iter()
            .map(|&p| Complex::new(omega(p as f64 / n as f64), 0.0))
            .collect();
        fft.process(&mut c_hat);
        Self {
            n,
            gpow,
            c_hat,
            fft,
            ifft,
        }
    }

    /// T(g^a) − ω(0) q(0) for every a.
    fn sweep(&self, q: &[f64]) -> Vec<f64> {
        let m = self.n - 1;
        // x(b) = q(g^{−b}); g^{−b} = g^{(m−b) mod m}
        let mut x: Vec<Complex<f64>> = (0..m)
            .map(|b| Complex::new(q[self.gpow[(m - b) % m] as usize], 0.0))
            .collect();
        self.fft.process(&mut x);
        for (xv, cv) in x.iter_mut().zip(&self.c_hat) {
            *xv *= cv;
        }
        self.ifft.process(&mut x);
        x.iter().map(|v| v.re / m as f64).collect()
    }
}

/// CBC construction for the weight scheme's dimension count.
pub fn cbc_construct(n: usize, weights: &WeightScheme) -> Result<CbcResult> {
    cbc_construct_with(n, weights, CbcMethod::Auto)
}

pub fn cbc_construct_with(
    n: usize,
    weights: &WeightScheme,
    method: CbcMethod,
) -> Result<CbcResult> {
    let dims = weights.dims();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "CBC needs N >= 2, got {n}"
        )));
    }
    if dims < 1 {
        return Err(Error::InvalidParameter(
            "CBC needs at least one dimension".into(),
        ));
    }
    let prime = is_prime(n as u64);
    let fast = match method {
        CbcMethod::Auto => prime && n > 3,
        CbcMethod::Fast if !prime => {
            return Err(Error::InvalidParameter(format!(
                "fast CBC needs prime N, got {n}"
            )));
        }
        CbcMethod::Fast => true,
        CbcMethod::Naive => false,
    };
    // Construct in decreasing γ_j, ties in the original order.
    let mut order: Vec<usize> = (0..dims).collect();
    order.sort_by(|&a, &b| weights.ln_gamma()[b].total_cmp(&weights.ln_gamma()[a]));
    let search = fast.then(|| FastSearch::new(n));
    let candidates: Vec<u64> = (1..=(n as u64) / 2)
        .filter(|&z| gcd(z, n as u64) == 1)
        .collect();

    let mut state = PodState::new(n);
    let mut z_sorted = Vec::with_capacity(dims);
    let mut ln_err = f64::NEG_INFINITY;
    let mut history = Vec::with_capacity(dims);
    for (step, &coord) in order.iter().enumerate() {
        let (ln_m, q) = state.q(weights.ln_order());
        let (z, t) = if step == 0 {
            (1u64, criterion(n, 1, &q))
        } else if let Some(fs) = &search {
            let base = omega(0.0) * q[0];
            let sweep = fs.sweep(&q);
            let mut best = (u64::MAX, f64::INFINITY);
            for (a, v) in sweep.iter().enumerate() {
                let z = fs.gpow[a];
                if z > (n as u64) / 2 {
                    continue;
                }
                best = better(best, (z, base + v));
            }
            best
        } else {
            let mut best = (u64::MAX, f64::INFINITY);
            for &z in &candidates {
                best = better(best, (z, criterion(n, z, &q)));
            }
            best
        };
        let ln_gamma = weights.ln_gamma()[coord];
        if t > 0.0 {
            ln_err = log_add_exp(ln_err, ln_gamma + ln_m + (t / n as f64).ln());
        }
        history.push(ln_err);
        state.update(ln_gamma, &omega_table(n, z));
        z_sorted.push(z);
    }
    let mut z_gen = vec![0u64; dims];
    for (&coord, &z) in order.iter().zip(&z_sorted) {
        z_gen[coord] = z;
    }
    Ok(CbcResult {
        n,
        z_gen,
        order,
        ln_error_sq: history,
    })
}

/// ln e²(z) for a given generating vector (coordinates as in `weights`).
pub fn ln_worst_case_error_sq(n: usize, z_gen: &[u64], weights: &WeightScheme) -> Result<f64> {
    if z_gen.len() != weights.dims() {
        return Err(Error::LengthMismatch {
            what: "generating vector",
            expected: weights.dims(),
            got: z_gen.len(),
        });
    }
    let mut state = PodState::new(n);
    for (j, &z) in z_gen.iter().enumerate() {
        state.update(weights.ln_gamma()[j], &omega_table(n, z));
    }
    let mut total = f64::NEG_INFINITY;
    for l in 1..state.val.len() {
        let s: f64 = state.val[l].iter().sum::<f64>() / n as f64;
        if s > 0.0 {
            total = log_add_exp(total, weights.ln_order()[l] + state.scale[l] + s.ln());
        }
    }
    Ok(total)
}
