use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{SeedSplitter, Stream};
use crate::special::normal_quantile_clamped;

/// Rank-1 lattice rule with random shifts: points {n z/N + Δ_k}.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeRule {
    n: usize,
    z_gen: Vec<u64>,
    shifts: Vec<Vec<f64>>,
    seed: u64,
}

impl LatticeRule {
    /// Draws `num_shifts` uniform shifts from the shift stream of `seed`.
    pub fn new(n: usize, z_gen: Vec<u64>, num_shifts: usize, seed: u64) -> Result<Self> {
        let dims = z_gen.len();
        let splitter = SeedSplitter::new(seed);
        let shifts = (0..num_shifts)
            .map(|k| {
                let mut rng = splitter.rng(Stream::Shift, k as u64);
                (0..dims).map(|_| rng.gen::<f64>()).collect()
            })
            .collect();
        Self::with_shifts(n, z_gen, shifts, seed)
    }

    pub fn with_shifts(
        n: usize,
        z_gen: Vec<u64>,
        shifts: Vec<Vec<f64>>,
        seed: u64,
    ) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidParameter("lattice rule needs N >= 1".into()));
        }
        for &z in &z_gen {
            if n > 1 && super::gcd(z % n as u64, n as u64) != 1 {
                return Err(Error::InvalidParameter(format!(
                    "generating vector component {z} is not coprime to N = {n}"
                )));
            }
        }
        for sh in &shifts {
            if sh.len() != z_gen.len() {
                return Err(Error::LengthMismatch {
                    what: "shift",
                    expected: z_gen.len(),
                    got: sh.len(),
                });
            }
            if sh.iter().any(|v| !(0.0..1.0).contains(v)) {
                return Err(Error::InvalidParameter(
                    "shift components must lie in [0, 1)".into(),
                ));
            }
        }
        Ok(Self {
            n,
            z_gen,
            shifts,
            seed,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dims(&self) -> usize {
        self.z_gen.len()
    }

    pub fn z_gen(&self) -> &[u64] {
        &self.z_gen
    }

    pub fn shifts(&self) -> &[Vec<f64>] {
        &self.shifts
    }

    pub fn num_shifts(&self) -> usize {
        self.shifts.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Writes point `index` of shift `shift` into `out`.
    pub fn point_into(&self, index: usize, shift: usize, out: &mut [f64]) {
        let n = self.n as u64;
        let inv = 1.0 / self.n as f64;
        for ((o, &z), d) in out.iter_mut().zip(&self.z_gen).zip(&self.shifts[shift]) {
            let k = ((index as u64 % n) * (z % n)) % n;
            let mut v = k as f64 * inv + d;
            if v >= 1.0 {
                v -= 1.0;
            }
            *o = v;
        }
    }

    /// Unshifted point {n z/N}.
    pub fn base_point_into(&self, index: usize, out: &mut [f64]) {
        let n = self.n as u64;
        for (o, &z) in out.iter_mut().zip(&self.z_gen) {
            *o = (((index as u64 % n) * (z % n)) % n) as f64 / self.n as f64;
        }
    }
}

/// All N points of one shift.
pub fn lattice_points(rule: &LatticeRule, shift: usize) -> Result<Vec<Vec<f64>>> {
    if shift >= rule.num_shifts() {
        return Err(Error::IndexOutOfRange {
            what: "shift",
            index: shift,
            len: rule.num_shifts(),
        });
    }
    Ok((0..rule.n())
        .map(|i| {
            let mut p = vec![0.0; rule.dims()];
            rule.point_into(i, shift, &mut p);
            p
        })
        .collect())
}

/// Componentwise Φ⁻¹, clamped at ±8.5.
pub fn to_gaussian(u: &[f64], out: &mut [f64]) {
    for (o, &v) in out.iter_mut().zip(u) {
        *o = normal_quantile_clamped(v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::normal_cdf;

    #[test]
    fn point_formula() {
        let rule = LatticeRule::with_shifts(5, vec![1, 3], vec![vec![0.0, 0.0]], 0).unwrap();
        let pts = lattice_points(&rule, 0).unwrap();
        assert_eq!(pts[2], vec![0.4, 0.2]);
        assert_eq!(pts[0], vec![0.0, 0.0]);
        assert!(lattice_points(&rule, 1).is_err());
    }

    #[test]
    fn shift_and_unshift() {
        let rule = LatticeRule::new(101, vec![1, 27, 44], 3, 9).unwrap();
        for sh in 0..3 {
            let delta = &rule.shifts()[sh];
            for i in 0..101 {
                let mut p = [0.0; 3];
                let mut base = [0.0; 3];
                rule.point_into(i, sh, &mut p);
                rule.base_point_into(i, &mut base);
                for k in 0..3 {
                    assert!((0.0..1.0).contains(&p[k]));
                    let back = (p[k] - delta[k]).rem_euclid(1.0);
                    let diff = (back - base[k]).abs();
                    assert!(diff < 1e-12 || (1.0 - diff) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn shifts_are_deterministic() {
        let a = LatticeRule::new(11, vec![1, 5], 4, 7).unwrap();
        let b = LatticeRule::new(11, vec![1, 5], 4, 7).unwrap();
        let c = LatticeRule::new(11, vec![1, 5], 4, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.shifts(), c.shifts());
    }

    #[test]
    fn non_coprime_component_rejected() {
        assert!(LatticeRule::new(8, vec![1, 4], 1, 0).is_err());
    }

    #[test]
    fn gaussian_map() {
        let mut out = [0.0; 3];
        to_gaussian(&[0.5, 0.975, 0.0], &mut out);
        assert_eq!(out[0], 0.0);
        assert!((out[1] - 1.959_963_984_540_054).abs() < 1e-12);
        assert_eq!(out[2], -8.5);
    }

    #[test]
    fn quantile_round_trip_sweep() {
        let n = 1_000_000;
        let mut worst = 0.0f64;
        for k in 0..n {
            let u = (k as f64 + 0.5) / n as f64;
            worst = worst.max((normal_cdf(normal_quantile_clamped(u)) - u).abs());
        }
        assert!(worst < 1e-10, "{worst}");
    }
}
