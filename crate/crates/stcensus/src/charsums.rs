//! Exact-as-possible character-sum oracle: the Dirichlet character group
//! mod p, normalized Jacobi sums, and Greene's ₃F₂ evaluation.
//!
//! This is the slow O(p²) route. The production K3 path goes through the
//! `curves` module in O(p); everything here exists to cross-validate it at
//! small primes.
//!
//! Convention: χ(0) = 0 for every character, including the trivial one. The
//! integrality invariant on p²·₃F₂ and the Clausen cross-check guard this
//! choice; with the other trivial-character convention both fail at the
//! first prime.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::arith::{is_prime, mod_pow};
use crate::error::{Error, Result};

/// The full character group mod p, realized through a primitive root and its
/// discrete-log table. Character j maps g^k to e^{2πi·jk/(p−1)}.
pub struct CharGroup {
    pub p: u64,
    pub g: u64,
    /// dlog[t] = k with g^k ≡ t (mod p), for 1 <= t < p. dlog[0] is unused.
    pub dlog: Vec<u32>,
    /// roots[k] = e^{2πi k/(p−1)}
    roots: Vec<Complex64>,
    /// Cached binom(φχ_j, χ_j)³ for the ₃F₂ sum.
    f2_cubes: OnceLock<Vec<Complex64>>,
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut q = 2;
    while q * q <= n {
        if n % q == 0 {
            out.push(q);
            while n % q == 0 {
                n /= q;
            }
        }
        q += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Builds the character group for an odd prime 3 <= p <= 5000.
pub fn char_group(p: u64) -> Result<CharGroup> {
    if !(3..=5000).contains(&p) || !is_prime(p) {
        return Err(Error::arg(format!("char_group needs an odd prime in [3, 5000], got {p}")));
    }
    let factors = prime_factors(p - 1);
    let g = (2..p)
        .find(|&g| factors.iter().all(|&q| mod_pow(g, (p - 1) / q, p) != 1))
        .expect("every prime has a primitive root");
    let mut dlog = vec![0u32; p as usize];
    let mut t = 1u64;
    for k in 0..p - 1 {
        dlog[t as usize] = k as u32;
        t = t * g % p;
    }
    let n = (p - 1) as usize;
    let roots = (0..n)
        .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64))
        .collect();
    Ok(CharGroup { p, g, dlog, roots, f2_cubes: OnceLock::new() })
}

impl CharGroup {
    pub fn order(&self) -> u64 {
        self.p - 1
    }

    /// Index of the quadratic character φ_p.
    pub fn quadratic_index(&self) -> u64 {
        (self.p - 1) / 2
    }

    /// χ_j(t), with χ(0) = 0 for all j.
    pub fn chi(&self, j: u64, t: u64) -> Complex64 {
        let t = t % self.p;
        if t == 0 {
            return Complex64::new(0.0, 0.0);
        }
        let n = self.order();
        let k = (j % n) * self.dlog[t as usize] as u64 % n;
        self.roots[k as usize]
    }
}

/// Normalized Jacobi sum binom(χ_j, χ_{j'}) = χ_{j'}(−1)/p · Σ_x χ_j(x)·conj(χ_{j'})(1−x).
pub fn normalized_jacobi(group: &CharGroup, j: u64, jp: u64) -> Result<Complex64> {
    let n = group.order();
    if j >= n || jp >= n {
        return Err(Error::arg(format!("character index out of range for p = {}", group.p)));
    }
    let p = group.p;
    let mut sum = Complex64::new(0.0, 0.0);
    // x = 0 and x = 1 contribute zero under the χ(0) = 0 convention
    for x in 2..p {
        sum += group.chi(j, x) * group.chi(jp, p + 1 - x).conj();
    }
    let front = group.chi(jp, p - 1) / p as f64;
    Ok(front * sum)
}

fn f2_cubes(group: &CharGroup) -> &Vec<Complex64> {
    group.f2_cubes.get_or_init(|| {
        let n = group.order();
        let phi = group.quadratic_index();
        (0..n)
            .map(|j| {
                let b = normalized_jacobi(group, (phi + j) % n, j).expect("indices in range");
                b * b * b
            })
            .collect()
    })
}

/// Greene's ₃F₂(λ, p) = p/(p−1) Σ_χ binom(φχ, χ)³ χ(λ).
///
/// The sum is real (terms pair by conjugation); an imaginary part above
/// 10⁻⁶ is an internal consistency error, as is p²·₃F₂ drifting more than
/// 10⁻³ from the nearest integer.
pub fn gauss_3f2(group: &CharGroup, lambda: u64) -> Result<f64> {
    if lambda % group.p == 0 {
        return Err(Error::arg("gauss_3f2 at lambda ≡ 0 mod p"));
    }
    let cubes = f2_cubes(group);
    let n = group.order();
    let mut sum = Complex64::new(0.0, 0.0);
    for (j, cube) in cubes.iter().enumerate() {
        sum += cube * group.chi(j as u64, lambda);
    }
    let value = sum * group.p as f64 / n as f64;
    if value.im.abs() > 1e-6 {
        return Err(Error::numeric(format!(
            "gauss_3f2 imaginary part {} at p = {}, lambda = {lambda}",
            value.im, group.p
        )));
    }
    let scaled = value.re * (group.p as f64) * (group.p as f64);
    if (scaled - scaled.round()).abs() > 1e-3 {
        return Err(Error::numeric(format!(
            "p^2 * 3F2 = {scaled} not near an integer at p = {}, lambda = {lambda}",
            group.p
        )));
    }
    Ok(value.re)
}
