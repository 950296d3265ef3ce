//! Randomly shifted rank-1 lattice rules and their CBC construction.

mod cbc;
mod lattice;

pub use cbc::{
    cbc_construct, cbc_construct_with, ln_worst_case_error_sq, omega, CbcMethod, CbcResult,
};
pub use lattice::{lattice_points, to_gaussian, LatticeRule};

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Distinct prime factors by trial division.
pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n % p == 0 {
            out.push(p);
            while n % p == 0 {
                n /= p;
            }
        }
        p += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && prime_factors(n) == [n]
}

/// Euler's totient φ(N).
pub fn phi_tot(n: u64) -> u64 {
    prime_factors(n).iter().fold(n, |acc, p| acc / p * (p - 1))
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    r
}

/// Smallest generator of the multiplicative group mod a prime p.
pub fn primitive_root(p: u64) -> u64 {
    if p == 2 {
        return 1;
    }
    let factors = prime_factors(p - 1);
    (2..p)
        .find(|&g| factors.iter().all(|&f| pow_mod(g, (p - 1) / f, p) != 1))
        .expect("a prime modulus has a primitive root")
}

/// Writes N on the first line, then one component per line.
pub fn write_generating_vector(
    out: &mut impl Write,
    n: usize,
    z_gen: &[u64],
) -> std::io::Result<()> {
    writeln!(out, "{n}")?;
    for z in z_gen {
        writeln!(out, "{z}")?;
    }
    Ok(())
}

pub fn read_generating_vector(input: impl BufRead) -> Result<(usize, Vec<u64>)> {
    let mut values = Vec::new();
    for line in input.lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        values.push(
            t.parse::<u64>()
                .map_err(|e| Error::Parse(format!("generating vector entry {t:?}: {e}")))?,
        );
    }
    let (&n, z) = values
        .split_first()
        .ok_or_else(|| Error::Parse("empty generating vector file".into()))?;
    Ok((n as usize, z.to_vec()))
}
