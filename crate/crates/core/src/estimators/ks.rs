//! One-sample Kolmogorov–Smirnov test against a cdf tabulated on a t-grid.

use crate::error::{Error, Result};

/// Asymptotic 5% critical value coefficient: reject when D > 1.358/√n.
pub const KS_COEFFICIENT_5PC: f64 = 1.358;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub d: f64,
    pub n: usize,
    pub threshold: f64,
    pub reject: bool,
}

/// Piecewise-linear interpolation of the tabulated cdf, constant beyond the
/// grid ends and clamped to [0, 1]. `cdf` must already be monotone.
pub fn model_cdf_at(t_grid: &[f64], cdf: &[f64], x: f64) -> f64 {
    let last = t_grid.len() - 1;
    let v = if x <= t_grid[0] {
        cdf[0]
    } else if x >= t_grid[last] {
        cdf[last]
    } else {
        let k = t_grid.partition_point(|&t| t <= x) - 1;
        let lam = (x - t_grid[k]) / (t_grid[k + 1] - t_grid[k]);
        cdf[k] + lam * (cdf[k + 1] - cdf[k])
    };
    v.clamp(0.0, 1.0)
}

/// D = sup_x |F_n(x) − F(x)| for the empirical cdf F_n of `samples` and the
/// interpolated model cdf. Noise in the tabulated values is removed first by
/// clamping to [0, 1] and taking running maxima.
pub fn ks_test(t_grid: &[f64], cdf: &[f64], samples: &[f64]) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if t_grid.is_empty() || t_grid.len() != cdf.len() {
        return Err(Error::LengthMismatch {
            what: "model cdf",
            expected: t_grid.len(),
            got: cdf.len(),
        });
    }
    if samples.len() < 30 {
        log::warn!(
            "KS test with only {} samples; the asymptotic threshold is unreliable below 30",
            samples.len()
        );
    }
    let mut model = Vec::with_capacity(cdf.len());
    let mut running = 0.0f64;
    for &c in cdf {
        running = running.max(c.clamp(0.0, 1.0));
        model.push(running);
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = model_cdf_at(t_grid, &model, x);
        d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    });
    let threshold = KS_COEFFICIENT_5PC / n.sqrt();
    Ok(KsResult {
        d,
        n: xs.len(),
        threshold,
        reject: d > threshold,
    })
}
