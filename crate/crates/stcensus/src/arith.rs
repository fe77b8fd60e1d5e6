//! Prime generation, modular arithmetic, quadratic residues, and exact
//! rational bookkeeping shared by every other module.
//!
//! Everything here is pure and immutable after construction, so sweeps may
//! call into this module from any number of worker threads.

use crate::error::{Error, Result};

/// A reduced rational with a 64-bit numerator and positive 64-bit denominator.
///
/// Overflow during normalization or arithmetic is a hard error, never a
/// silent wraparound. Houses the K3 parameter λ and curve coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rational {
    num: i64,
    den: i64,
}

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::arg("rational with zero denominator"));
        }
        let (mut num, mut den) = (num as i128, den as i128);
        if den < 0 {
            num = -num;
            den = -den;
        }
        let g = gcd_u64(num.unsigned_abs() as u64, den as u64).max(1) as i128;
        num /= g;
        den /= g;
        let num = i64::try_from(num).map_err(|_| Error::Overflow("rational numerator".into()))?;
        let den = i64::try_from(den).map_err(|_| Error::Overflow("rational denominator".into()))?;
        Ok(Rational { num, den })
    }

    pub fn integer(n: i64) -> Self {
        Rational { num: n, den: 1 }
    }

    pub fn num(&self) -> i64 {
        self.num
    }

    pub fn den(&self) -> i64 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn checked_add(&self, other: &Rational) -> Result<Rational> {
        let num = (self.num as i128) * (other.den as i128) + (other.num as i128) * (self.den as i128);
        let den = (self.den as i128) * (other.den as i128);
        rational_from_i128(num, den)
    }

    pub fn checked_mul(&self, other: &Rational) -> Result<Rational> {
        let num = (self.num as i128) * (other.num as i128);
        let den = (self.den as i128) * (other.den as i128);
        rational_from_i128(num, den)
    }

    pub fn neg(&self) -> Rational {
        Rational { num: -self.num, den: self.den }
    }

    pub fn recip(&self) -> Result<Rational> {
        if self.num == 0 {
            return Err(Error::arg("reciprocal of zero"));
        }
        Rational::new(self.den * self.num.signum(), self.num.abs())
    }

    /// λ + 1 without leaving exact arithmetic.
    pub fn plus_one(&self) -> Result<Rational> {
        self.checked_add(&Rational::integer(1))
    }

    /// The residue num·den⁻¹ mod p, or `None` when p divides the denominator.
    pub fn reduce_mod(&self, p: u64) -> Option<u64> {
        if self.den as u64 % p == 0 {
            return None;
        }
        let den_inv = mod_pow(self.den as u64 % p, p - 2, p);
        let num = self.num.rem_euclid(p as i64) as u64;
        Some(mul_mod(num, den_inv, p))
    }
}

fn rational_from_i128(num: i128, mut den: i128) -> Result<Rational> {
    if den == 0 {
        return Err(Error::arg("rational with zero denominator"));
    }
    let mut num = num;
    if den < 0 {
        num = -num;
        den = -den;
    }
    let g = {
        let (mut a, mut b) = (num.unsigned_abs(), den.unsigned_abs());
        while b != 0 {
            let t = a % b;
            a = b;
            b = t;
        }
        a.max(1) as i128
    };
    num /= g;
    den /= g;
    let num = i64::try_from(num).map_err(|_| Error::Overflow("rational numerator".into()))?;
    let den = i64::try_from(den).map_err(|_| Error::Overflow("rational denominator".into()))?;
    Ok(Rational { num, den })
}

impl std::str::FromStr for Rational {
    type Err = Error;

    /// Parses `"n"` or `"n/d"`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.split_once('/') {
            Some((n, d)) => {
                let num: i64 = n.trim().parse().map_err(|_| Error::arg(format!("bad numerator {n:?}")))?;
                let den: i64 = d.trim().parse().map_err(|_| Error::arg(format!("bad denominator {d:?}")))?;
                Rational::new(num, den)
            }
            None => {
                let num: i64 = s.parse().map_err(|_| Error::arg(format!("bad rational {s:?}")))?;
                Ok(Rational::integer(num))
            }
        }
    }
}

impl std::fmt::Display for Rational {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// All primes up to a fixed limit, strictly increasing.
#[derive(Debug, Clone)]
pub struct PrimeTable {
    pub limit: u64,
    pub primes: Vec<u64>,
}

impl PrimeTable {
    pub fn count(&self) -> usize {
        self.primes.len()
    }
}

const SEGMENT: u64 = 1 << 20;

/// Segmented sieve of Eratosthenes. `2 <= limit <= 2^40`.
pub fn sieve_primes(limit: u64) -> Result<PrimeTable> {
    if !(2..=1 << 40).contains(&limit) {
        return Err(Error::arg(format!("sieve limit {limit} out of [2, 2^40]")));
    }
    let root = (limit as f64).sqrt() as u64 + 1;
    // plain sieve up to sqrt(limit)
    let mut small = vec![true; (root + 1) as usize];
    small[0] = false;
    if root >= 1 {
        small[1] = false;
    }
    let mut base = Vec::new();
    for n in 2..=root {
        if small[n as usize] {
            base.push(n);
            let mut m = n * n;
            while m <= root {
                small[m as usize] = false;
                m += n;
            }
        }
    }
    let mut primes = Vec::new();
    let mut lo = 2u64;
    let mut seg = vec![true; SEGMENT as usize];
    while lo <= limit {
        let hi = (lo + SEGMENT - 1).min(limit);
        let len = (hi - lo + 1) as usize;
        seg[..len].fill(true);
        for &q in &base {
            if q * q > hi {
                break;
            }
            let mut m = (lo.div_ceil(q) * q).max(q * q);
            while m <= hi {
                seg[(m - lo) as usize] = false;
                m += q;
            }
        }
        for i in 0..len {
            if seg[i] {
                let n = lo + i as u64;
                if n >= 2 && (n <= root || n > root) {
                    // base primes <= root are re-detected here; avoid dupes
                    if n > root || small[n as usize] {
                        primes.push(n);
                    }
                }
            }
        }
        lo = hi + 1;
    }
    Ok(PrimeTable { limit, primes })
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn mod_pow(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin for u64.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let d = (n - 1) >> (n - 1).trailing_zeros();
    let s = (n - 1).trailing_zeros();
    'witness: for &a in &[2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = mod_pow(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// The quadratic character φ_p(a) by Euler's criterion: 0 iff p | a, 1 iff a
/// is a nonzero square mod p, −1 otherwise.
pub fn legendre(a: i64, p: u64) -> Result<i32> {
    if p < 3 || p % 2 == 0 || !is_prime(p) {
        return Err(Error::arg(format!("legendre modulus {p} is not an odd prime")));
    }
    let r = a.rem_euclid(p as i64) as u64;
    if r == 0 {
        return Ok(0);
    }
    let e = mod_pow(r, (p - 1) / 2, p);
    Ok(if e == 1 { 1 } else { -1 })
}

/// Character-value table for φ_p: `chi(t)` in {−1, 0, 1} for 0 <= t < p.
///
/// Built once per prime and then indexed inside the O(p) trace sweeps, where
/// per-element Euler's criterion would dominate the runtime.
#[derive(Debug, Clone)]
pub struct QrTable {
    pub p: u64,
    chi: Vec<i8>,
}

impl QrTable {
    #[inline]
    pub fn chi(&self, t: u64) -> i8 {
        self.chi[t as usize]
    }
}

pub fn qr_table(p: u64) -> Result<QrTable> {
    if p < 3 || p % 2 == 0 || p > 1 << 31 || !is_prime(p) {
        return Err(Error::arg(format!("qr_table modulus {p} is not an odd prime <= 2^31")));
    }
    let mut chi = vec![-1i8; p as usize];
    chi[0] = 0;
    for x in 1..=(p - 1) / 2 {
        chi[mul_mod(x, x, p) as usize] = 1;
    }
    Ok(QrTable { p, chi })
}

/// The unique squarefree d >= 1 with |n| = d·m², by trial division.
pub fn squarefree_part(n: i64) -> Result<u64> {
    if n == 0 {
        return Err(Error::arg("squarefree_part of zero"));
    }
    let mut m = n.unsigned_abs();
    let mut d = 1u64;
    let mut q = 2u64;
    while q * q <= m {
        if m % q == 0 {
            let mut e = 0u32;
            while m % q == 0 {
                m /= q;
                e += 1;
            }
            if e % 2 == 1 {
                d *= q;
            }
        }
        q += if q == 2 { 1 } else { 2 };
    }
    // leftover m is prime (or 1)
    Ok(d * m)
}

/// Lowest-terms decomposition of λ + 1 together with the squarefree invariant
/// that drives the K3 case split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LambdaSplit {
    /// Numerator of λ + 1 in lowest terms.
    pub lambda1: i64,
    /// Positive denominator of λ + 1 in lowest terms.
    pub lambda2: i64,
    /// Squarefree part of |λ₁λ₂|.
    pub q_lambda: u64,
    /// True iff λ + 1 is the square of a rational, i.e. λ₁ > 0 and q_λ = 1.
    pub is_square: bool,
}

pub fn lambda_split(lambda: &Rational) -> Result<LambdaSplit> {
    if lambda.is_zero() || *lambda == Rational::integer(-1) {
        return Err(Error::arg(format!("lambda {lambda} must avoid {{0, -1}}")));
    }
    let lp1 = lambda.plus_one()?;
    let (lambda1, lambda2) = (lp1.num(), lp1.den());
    let q_lambda = squarefree_part(
        lambda1
            .checked_mul(lambda2)
            .ok_or_else(|| Error::Overflow("lambda1*lambda2".into()))?,
    )?;
    Ok(LambdaSplit {
        lambda1,
        lambda2,
        q_lambda,
        is_square: lambda1 > 0 && q_lambda == 1,
    })
}

/// The nine class-number-one fundamental discriminants: the only CM fields
/// that occur for elliptic curves over the rationals.
pub const CM_DISCRIMINANTS: [i64; 9] = [-3, -4, -7, -8, -11, -19, -43, -67, -163];

/// Jacobi symbol (a/m) for odd positive m.
fn jacobi(mut a: i64, mut m: u64) -> i32 {
    debug_assert!(m % 2 == 1);
    a = a.rem_euclid(m as i64);
    let mut a = a as u64;
    let mut sign = 1i32;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if m % 8 == 3 || m % 8 == 5 {
                sign = -sign;
            }
        }
        std::mem::swap(&mut a, &mut m);
        if a % 4 == 3 && m % 4 == 3 {
            sign = -sign;
        }
        a %= m;
    }
    if m == 1 {
        sign
    } else {
        0
    }
}

/// Kronecker character χ_K(n) for the nine CM fundamental discriminants.
pub fn kronecker(d: i64, n: u64) -> Result<i32> {
    if !CM_DISCRIMINANTS.contains(&d) {
        return Err(Error::arg(format!("discriminant {d} is not one of the nine CM discriminants")));
    }
    if n == 0 {
        return Err(Error::arg("kronecker at n = 0"));
    }
    let mut n = n;
    let mut sign = 1i32;
    // factor of 2
    while n % 2 == 0 {
        if d % 2 == 0 {
            return Ok(0);
        }
        sign *= match d.rem_euclid(8) {
            1 | 7 => 1,
            _ => -1,
        };
        n /= 2;
    }
    Ok(sign * jacobi(d, n))
}

/// Euler's totient by trial division.
pub fn euler_phi(mut n: u64) -> u64 {
    let mut phi = 1u64;
    let mut q = 2u64;
    while q * q <= n {
        if n % q == 0 {
            let mut pe = 1u64;
            n /= q;
            while n % q == 0 {
                pe *= q;
                n /= q;
            }
            phi *= pe * (q - 1);
        }
        q += if q == 2 { 1 } else { 2 };
    }
    if n > 1 {
        phi *= n - 1;
    }
    phi
}
