//! Normalized Frobenius traces of the K3 surfaces X_λ and of double quadric
//! surfaces attached to a pair of elliptic curves.
//!
//! The production K3 path derives the surface trace from a single O(p)
//! elliptic-curve sweep; the O(p²) finite-field-hypergeometric route in
//! `charsums` exists only as an independent oracle for small primes.

use crate::arith::{lambda_split, legendre, Rational};
use crate::charsums::{char_group, gauss_3f2};
use crate::curves::TraceRecord;
use crate::error::{Error, Result};

/// True when p must be excluded from the X_λ census: p | numerator or
/// denominator of λ or of λ + 1 (finitely many primes).
pub fn k3_excluded_prime(lambda: &Rational, p: u64) -> Result<bool> {
    let split = lambda_split(lambda)?;
    let divides = |n: i64| n.unsigned_abs() % p == 0;
    Ok(divides(lambda.num())
        || divides(lambda.den())
        || divides(split.lambda1)
        || divides(split.lambda2))
}

/// Normalized K3 trace φ_p(λ+1)·((a_p/√p)² − 1) ∈ [−3, 3], from the trace
/// record of the associated elliptic curve at p. Returns None when the
/// prime must be skipped (bad reduction or p dividing the λ data).
pub fn k3_trace(lambda: &Rational, rec: &TraceRecord) -> Result<Option<f64>> {
    let split = lambda_split(lambda)?;
    let p = rec.p;
    if !rec.good || p < 5 || k3_excluded_prime(lambda, p)? {
        return Ok(None);
    }
    let a_p = rec.a_p.expect("good record carries a trace") as f64;
    let phi = legendre(
        split
            .lambda1
            .checked_mul(split.lambda2)
            .ok_or_else(|| Error::Overflow("lambda1*lambda2".into()))?,
        p,
    )? as f64;
    let normalized = a_p / (p as f64).sqrt();
    let value = phi * (normalized * normalized - 1.0);
    debug_assert!(value.abs() <= 3.0 + 1e-9, "K3 trace {value} out of range at p = {p}");
    Ok(Some(value))
}

/// Independent route: p·₃F₂(−λ, p) by full character sums. O(p²); use only
/// for verification at small primes.
pub fn k3_trace_oracle(lambda: &Rational, p: u64) -> Result<f64> {
    if !(5..=2000).contains(&p) {
        return Err(Error::arg(format!("oracle restricted to 5 <= p <= 2000, got {p}")));
    }
    if k3_excluded_prime(lambda, p)? {
        return Err(Error::arg(format!("p = {p} divides the lambda data")));
    }
    let arg = lambda
        .neg()
        .reduce_mod(p)
        .ok_or_else(|| Error::arg(format!("lambda not reducible mod {p}")))?;
    let group = char_group(p)?;
    Ok(p as f64 * gauss_3f2(&group, arg)?)
}

/// Normalized double quadric trace (a_p/√p)·(a′_p/√p) ∈ [−4, 4]. Records
/// must come from the same prime; None when either curve has bad reduction.
pub fn double_quadric_trace(rec_e: &TraceRecord, rec_ep: &TraceRecord) -> Result<Option<f64>> {
    if rec_e.p != rec_ep.p {
        return Err(Error::arg(format!(
            "double quadric records at mismatched primes {} and {}",
            rec_e.p, rec_ep.p
        )));
    }
    if !rec_e.good || !rec_ep.good {
        return Ok(None);
    }
    let sp = (rec_e.p as f64).sqrt();
    let a = rec_e.a_p.expect("good record") as f64 / sp;
    let b = rec_ep.a_p.expect("good record") as f64 / sp;
    let value = a * b;
    debug_assert!(value.abs() <= 4.0 + 1e-9);
    Ok(Some(value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{kronecker, sieve_primes};
    use crate::curves::{census_clausen_curve, frobenius_trace, short_curve};

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(n, d).unwrap()
    }

    fn oracle_lambdas() -> Vec<Rational> {
        vec![rat(2, 1), rat(3, 1), rat(1, 1), rat(-4, 1), rat(8, 1)]
    }

    #[test]
    fn dual_route_agreement_to_199() {
        let primes = sieve_primes(199).unwrap().primes;
        for lambda in oracle_lambdas() {
            let curve = census_clausen_curve(&lambda).unwrap();
            for &p in primes.iter().filter(|&&p| p >= 5) {
                if k3_excluded_prime(&lambda, p).unwrap() || !curve.is_good(p) {
                    continue;
                }
                let rec = frobenius_trace(&curve, p).unwrap();
                let fast = k3_trace(&lambda, &rec).unwrap().expect("good prime");
                let slow = k3_trace_oracle(&lambda, p).unwrap();
                assert!(
                    (fast - slow).abs() < 1e-6 * p as f64,
                    "lambda = {lambda}, p = {p}: {fast} vs {slow}"
                );
            }
        }
    }

    #[test]
    fn integer_shadow_identity() {
        // p²·₃F₂(−λ, p) is the integer φ_p(λ+1)(a_p² − p)
        let primes = sieve_primes(199).unwrap().primes;
        for lambda in oracle_lambdas() {
            let split = lambda_split(&lambda).unwrap();
            let curve = census_clausen_curve(&lambda).unwrap();
            for &p in primes.iter().filter(|&&p| p >= 5) {
                if k3_excluded_prime(&lambda, p).unwrap() || !curve.is_good(p) {
                    continue;
                }
                let rec = frobenius_trace(&curve, p).unwrap();
                let a_p = rec.a_p.unwrap();
                let phi = legendre(split.lambda1 * split.lambda2, p).unwrap() as i64;
                let want = phi * (a_p * a_p - p as i64);
                let scaled = k3_trace_oracle(&lambda, p).unwrap() * p as f64;
                assert!(
                    (scaled - want as f64).abs() < 1e-3,
                    "lambda = {lambda}, p = {p}: {scaled} vs {want}"
                );
            }
        }
    }

    #[test]
    fn cm_atoms_hit_exactly() {
        // lambda = −4: D_K = −3; every inert prime gives surface trace +1
        let lambda = rat(-4, 1);
        let curve = census_clausen_curve(&lambda).unwrap();
        let primes = sieve_primes(10_000).unwrap().primes;
        let mut inert = 0u32;
        for &p in primes.iter().filter(|&&p| p >= 5) {
            if !curve.is_good(p) || k3_excluded_prime(&lambda, p).unwrap() {
                continue;
            }
            if kronecker(-3, p).unwrap() == -1 {
                let rec = frobenius_trace(&curve, p).unwrap();
                assert_eq!(rec.a_p, Some(0), "inert p = {p} should be supersingular");
                assert_eq!(k3_trace(&lambda, &rec).unwrap(), Some(1.0));
                inert += 1;
            }
        }
        assert!(inert > 500);

        // lambda = 8: λ+1 = 9 is square, D_K = −4; inert primes give −1
        let lambda = rat(8, 1);
        let curve = census_clausen_curve(&lambda).unwrap();
        for &p in primes.iter().filter(|&&p| p >= 5 && p % 4 == 3).take(200) {
            if !curve.is_good(p) || k3_excluded_prime(&lambda, p).unwrap() {
                continue;
            }
            let rec = frobenius_trace(&curve, p).unwrap();
            assert_eq!(rec.a_p, Some(0));
            assert_eq!(k3_trace(&lambda, &rec).unwrap(), Some(-1.0));
        }
    }

    #[test]
    fn k3_trace_range() {
        let lambda = rat(2, 1);
        let curve = census_clausen_curve(&lambda).unwrap();
        for &p in sieve_primes(2000).unwrap().primes.iter().filter(|&&p| p >= 5) {
            if !curve.is_good(p) {
                continue;
            }
            let rec = frobenius_trace(&curve, p).unwrap();
            if let Some(t) = k3_trace(&lambda, &rec).unwrap() {
                assert!((-3.0..=3.0).contains(&t), "p = {p}: {t}");
            }
        }
    }

    #[test]
    fn skip_signals() {
        let lambda = rat(1, 8);
        // lambda data: 1/8, lambda+1 = 9/8 → skip p = 2, 3
        assert!(k3_excluded_prime(&lambda, 3).unwrap());
        assert!(k3_excluded_prime(&lambda, 2).unwrap());
        assert!(!k3_excluded_prime(&lambda, 5).unwrap());
        let bad = TraceRecord { p: 7, good: false, a_p: None, theta: None };
        assert_eq!(k3_trace(&lambda, &bad).unwrap(), None);
    }

    /// Brute-force point count for y² = x³ + ax + b over F_p.
    fn brute_trace(a: i64, b: i64, p: u64) -> i64 {
        let pm = p as i64;
        let mut count = 1i64; // point at infinity
        for x in 0..pm {
            let rhs = ((x * x % pm * x + a * x + b) % pm + pm) % pm;
            for y in 0..pm {
                if (y * y - rhs) % pm == 0 {
                    count += 1;
                }
            }
        }
        pm + 1 - count
    }

    #[test]
    fn double_quadric_fixture_pair() {
        let e = short_curve(rat(7, 1), rat(13, 1)).unwrap();
        let ep = short_curve(rat(7, 1), rat(17, 1)).unwrap();
        let p = 11;
        let re = frobenius_trace(&e, p).unwrap();
        let rep = frobenius_trace(&ep, p).unwrap();
        let got = double_quadric_trace(&re, &rep).unwrap().unwrap();
        let want = (brute_trace(7, 13, p) * brute_trace(7, 17, p)) as f64 / p as f64;
        assert!((got - want).abs() < 1e-12);
        assert!(got.abs() <= 4.0);

        // zero factor
        let zero = TraceRecord { p, good: true, a_p: Some(0), theta: Some(std::f64::consts::FRAC_PI_2) };
        assert_eq!(double_quadric_trace(&re, &zero).unwrap(), Some(0.0));

        // mismatched primes rejected
        let r13 = frobenius_trace(&ep, 13).unwrap();
        assert!(double_quadric_trace(&re, &r13).is_err());

        // bad reduction propagates as a skip
        let bad = TraceRecord { p, good: false, a_p: None, theta: None };
        assert_eq!(double_quadric_trace(&re, &bad).unwrap(), None);
    }
}
