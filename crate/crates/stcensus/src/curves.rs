//! Elliptic curves over ℚ: reductions mod p, O(p) Frobenius-trace sweeps,
//! the Clausen family, CM metadata, and the binary trace cache.
//!
//! Bad primes are approximated by the support of a possibly non-minimal
//! discriminant rather than the exact conductor. Over-excluding finitely
//! many primes perturbs censuses by O(1) counts, and the conductor only
//! enters error envelopes, which carry a free constant anyway.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::arith::{
    is_prime, kronecker, qr_table, sieve_primes, Rational, CM_DISCRIMINANTS,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CurveForm {
    /// y² = x³ + Ax + B
    Short { a: Rational, b: Rational },
    /// Clausen curve y² = (x − 1)(x² + λ)
    Clausen { lambda: Rational },
}

#[derive(Debug, Clone)]
pub struct WeierstrassCurve {
    pub form: CurveForm,
    /// Primes dividing numerator or denominator of the (model) discriminant,
    /// always including 2.
    pub disc_support: BTreeSet<u64>,
    pub j_inv: Rational,
}

/// One prime's worth of data for one curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub p: u64,
    pub good: bool,
    pub a_p: Option<i64>,
    /// Frobenius angle arccos(a_p / 2√p), present iff good.
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CMData {
    pub has_cm: bool,
    /// Fundamental discriminant of the CM field.
    pub d_k: Option<i64>,
    /// Period of φ_p(λ + 1), for Clausen table entries.
    pub period: Option<u64>,
}

fn factor_support(mut n: u128) -> Result<BTreeSet<u64>> {
    let mut out = BTreeSet::new();
    let mut q: u128 = 2;
    while q * q <= n && q <= 1 << 31 {
        if n % q == 0 {
            out.insert(q as u64);
            while n % q == 0 {
                n /= q;
            }
        }
        q += 1;
    }
    if n > 1 {
        let n = u64::try_from(n).map_err(|_| Error::Overflow("discriminant prime factor beyond u64".into()))?;
        out.insert(n);
    }
    Ok(out)
}

/// Support of num·den of a rational given as an i128 pair.
fn rational_support(num: i128, den: i128) -> Result<BTreeSet<u64>> {
    let mut s = factor_support(num.unsigned_abs())?;
    s.extend(factor_support(den.unsigned_abs())?);
    Ok(s)
}

fn j_from_short(a: &Rational, b: &Rational) -> Result<(Rational, i128, i128)> {
    // work in i128 over the common denominator to dodge i64 overflow in cubes
    let an = a.num() as i128;
    let ad = a.den() as i128;
    let bn = b.num() as i128;
    let bd = b.den() as i128;
    // 4A^3 + 27B^2 over denominator ad^3*bd^2
    let num_4a3 = 4 * an * an * an * bd * bd;
    let num_27b2 = 27 * bn * bn * ad * ad * ad;
    let disc_num = num_4a3 + num_27b2;
    let disc_den = ad * ad * ad * bd * bd;
    if disc_num == 0 {
        return Err(Error::arg("singular curve: 4A^3 + 27B^2 = 0"));
    }
    // j = 1728 * 4A^3 / (4A^3 + 27B^2): both numerators share the same
    // denominator ad^3*bd^2, which cancels in the ratio
    let mut jn = 1728 * num_4a3;
    let mut jd = disc_num;
    if jd < 0 {
        jn = -jn;
        jd = -jd;
    }
    let g = {
        let (mut x, mut y) = (jn.unsigned_abs(), jd.unsigned_abs());
        while y != 0 {
            let t = x % y;
            x = y;
            y = t;
        }
        x.max(1) as i128
    };
    let jn64 = i64::try_from(jn / g).map_err(|_| Error::Overflow("j-invariant numerator".into()))?;
    let jd64 = i64::try_from(jd / g).map_err(|_| Error::Overflow("j-invariant denominator".into()))?;
    let j = Rational::new(jn64, jd64)?;
    Ok((j, disc_num, disc_den))
}

/// Builds y² = x³ + Ax + B; errors if singular.
pub fn short_curve(a: Rational, b: Rational) -> Result<WeierstrassCurve> {
    let (j, disc_num, disc_den) = j_from_short(&a, &b)?;
    let mut support = rational_support(disc_num, disc_den)?;
    support.extend(rational_support(a.den() as i128, b.den() as i128)?);
    support.insert(2);
    Ok(WeierstrassCurve { form: CurveForm::Short { a, b }, disc_support: support, j_inv: j })
}

/// Clausen curve E_λ^Cl: y² = (x − 1)(x² + λ). Singular exactly at λ ∈ {0, −1}.
pub fn clausen_curve(lambda: Rational) -> Result<WeierstrassCurve> {
    if lambda.is_zero() || lambda == Rational::integer(-1) {
        return Err(Error::arg(format!("Clausen curve is singular at lambda = {lambda}")));
    }
    // model discriminant −64·λ·(λ+1)²
    let ln = lambda.num() as i128;
    let ld = lambda.den() as i128;
    let lp1n = ln + ld;
    let disc_num = -64 * ln * lp1n * lp1n;
    let disc_den = ld * ld * ld;
    let mut support = rational_support(disc_num, disc_den)?;
    support.insert(2);
    let (a, b) = clausen_short_coeffs(&lambda)?;
    let (j, _, _) = j_from_short(&a, &b)?;
    Ok(WeierstrassCurve { form: CurveForm::Clausen { lambda }, disc_support: support, j_inv: j })
}

/// Short-form coefficients of the Clausen curve after eliminating the
/// quadratic term: A = λ − 1/3, B = −2/27 − 2λ/3.
fn clausen_short_coeffs(lambda: &Rational) -> Result<(Rational, Rational)> {
    let a = lambda.checked_add(&Rational::new(-1, 3)?)?;
    let b = Rational::new(-2, 27)?
        .checked_add(&lambda.checked_mul(&Rational::new(-2, 3)?)?)?;
    Ok((a, b))
}

impl WeierstrassCurve {
    pub fn is_good(&self, p: u64) -> bool {
        p != 2 && !self.disc_support.contains(&p)
    }

    /// Cubic f with y² = f(x) over 𝔽_p, as coefficients of x³+c2·x²+c1·x+c0.
    /// `None` when the reduction is undefined.
    fn reduced_cubic(&self, p: u64) -> Option<[u64; 3]> {
        match &self.form {
            CurveForm::Short { a, b } => {
                let a = a.reduce_mod(p)?;
                let b = b.reduce_mod(p)?;
                Some([b, a, 0])
            }
            CurveForm::Clausen { lambda } => {
                // (x−1)(x²+λ) = x³ − x² + λx − λ
                let l = lambda.reduce_mod(p)?;
                Some([(p - l) % p, l, p - 1])
            }
        }
    }

    /// Canonical serialization used for the cache fingerprint.
    pub fn canonical_descriptor(&self) -> String {
        match &self.form {
            CurveForm::Short { a, b } => format!("short:{a},{b}"),
            CurveForm::Clausen { lambda } => format!("clausen:{lambda}"),
        }
    }

    pub fn fingerprint(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.canonical_descriptor().as_bytes());
        h.finalize().into()
    }

    /// Product of the bad primes, used in place of the conductor inside
    /// error envelopes. Reports flag this as a surrogate.
    pub fn conductor_surrogate(&self) -> f64 {
        self.disc_support.iter().map(|&p| p as f64).product()
    }
}

pub fn j_invariant(curve: &WeierstrassCurve) -> Rational {
    curve.j_inv
}

/// Frobenius trace a_p = p + 1 − #E(𝔽_p) at an odd prime, via the quadratic
/// character sum a_p = −Σ_x φ_p(f(x)).
pub fn frobenius_trace(curve: &WeierstrassCurve, p: u64) -> Result<TraceRecord> {
    if !is_prime(p) {
        return Err(Error::arg(format!("{p} is not prime")));
    }
    if !curve.is_good(p) {
        return Ok(TraceRecord { p, good: false, a_p: None, theta: None });
    }
    let table = qr_table(p)?;
    Ok(trace_with_table(curve, p, &table))
}

fn trace_with_table(curve: &WeierstrassCurve, p: u64, table: &crate::arith::QrTable) -> TraceRecord {
    let [c0, c1, c2] = curve.reduced_cubic(p).expect("good prime has defined reduction");
    let mut sum: i64 = 0;
    for x in 0..p {
        // f(x) = ((x + c2)·x + c1)·x + c0 mod p
        let mut v = (x + c2) % p;
        v = (v as u128 * x as u128 % p as u128) as u64;
        v = (v + c1) % p;
        v = (v as u128 * x as u128 % p as u128) as u64;
        v = (v + c0) % p;
        sum += table.chi(v) as i64;
    }
    let a_p = -sum;
    let bound = 2.0 * (p as f64).sqrt();
    assert!(
        (a_p.unsigned_abs() as f64) <= bound,
        "Hasse bound violated: |a_p| = {} > 2*sqrt({p})",
        a_p.abs()
    );
    let theta = (a_p as f64 / bound).clamp(-1.0, 1.0).acos();
    TraceRecord { p, good: true, a_p: Some(a_p), theta: Some(theta) }
}

/// Trace records for every prime p <= x, in ascending order. Sharded across
/// worker threads; the output is independent of the worker count because
/// every record depends only on (curve, p).
pub fn trace_sweep(curve: &WeierstrassCurve, x: u64) -> Result<Vec<TraceRecord>> {
    if x > 1 << 31 {
        return Err(Error::arg(format!("sweep bound {x} above 2^31")));
    }
    let primes = sieve_primes(x.max(2))?.primes;
    let records: Vec<TraceRecord> = primes
        .par_iter()
        .map(|&p| {
            if p == 2 || !curve.is_good(p) {
                TraceRecord { p, good: false, a_p: None, theta: None }
            } else {
                let table = qr_table(p).expect("odd prime");
                trace_with_table(curve, p, &table)
            }
        })
        .collect();
    Ok(records)
}

/// CM data for the Clausen curve E^Cl_{−λ/(λ+1)} attached to the K3 surface
/// X_λ: the seven table entries (λ, T, D_K), everything else non-CM.
pub fn clausen_cm_data(lambda: &Rational) -> Result<CMData> {
    if lambda.is_zero() || *lambda == Rational::integer(-1) {
        return Err(Error::arg("lambda must avoid {0, -1}"));
    }
    let table: [(Rational, u64, i64); 7] = [
        (Rational::integer(8), 1, -4),
        (Rational::new(1, 8).unwrap(), 8, -4),
        (Rational::integer(1), 8, -8),
        (Rational::integer(-4), 6, -3),
        (Rational::new(-1, 4).unwrap(), 12, -3),
        (Rational::integer(-64), 14, -7),
        (Rational::new(-1, 64).unwrap(), 28, -7),
    ];
    for (l, t, d) in table {
        if *lambda == l {
            return Ok(CMData { has_cm: true, d_k: Some(d), period: Some(t) });
        }
    }
    Ok(CMData { has_cm: false, d_k: None, period: None })
}

/// Heuristic CM screen: a discriminant D passes when a_p = 0 at every good
/// inert prime (χ_D(p) = −1) up to pmax and the overall zero fraction sits
/// in [0.4, 0.6]. Exactly one passing D means CM. This is a probabilistic
/// classification, not a proof.
pub fn cm_detect(curve: &WeierstrassCurve, pmax: u64) -> Result<CMData> {
    if pmax < 1000 {
        return Err(Error::arg("cm_detect needs pmax >= 10^3"));
    }
    let records = trace_sweep(curve, pmax)?;
    let good: Vec<&TraceRecord> = records.iter().filter(|r| r.good).collect();
    if good.is_empty() {
        return Ok(CMData { has_cm: false, d_k: None, period: None });
    }
    let zero_fraction = good.iter().filter(|r| r.a_p == Some(0)).count() as f64 / good.len() as f64;
    let mut passing = Vec::new();
    for &d in &CM_DISCRIMINANTS {
        let ok = good.iter().all(|r| kronecker(d, r.p).unwrap_or(0) != -1 || r.a_p == Some(0));
        if ok {
            passing.push(d);
        }
    }
    if passing.len() == 1 && (0.4..=0.6).contains(&zero_fraction) {
        Ok(CMData { has_cm: true, d_k: Some(passing[0]), period: None })
    } else {
        Ok(CMData { has_cm: false, d_k: None, period: None })
    }
}

// ---------------------------------------------------------------------------
// Trace cache: binary, little-endian.
// Header: magic "STC1", 32-byte sha256 curve fingerprint, X as u64.
// Body:   repeated (p: u64, a_p: i64, good: u8).
// ---------------------------------------------------------------------------

pub const CACHE_MAGIC: &[u8; 4] = b"STC1";

pub fn encode_cache(curve: &WeierstrassCurve, x: u64, records: &[TraceRecord]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + 32 + 8 + records.len() * 17);
    out.extend_from_slice(CACHE_MAGIC);
    out.extend_from_slice(&curve.fingerprint());
    out.extend_from_slice(&x.to_le_bytes());
    for r in records {
        out.extend_from_slice(&r.p.to_le_bytes());
        out.extend_from_slice(&r.a_p.unwrap_or(0).to_le_bytes());
        out.push(r.good as u8);
    }
    out
}

/// Decoded cache header and body; fingerprint checked by the caller.
pub struct CacheContents {
    pub fingerprint: [u8; 32],
    pub x: u64,
    pub records: Vec<TraceRecord>,
}

/// Decodes cache bytes. Rejects bad magic, truncated headers, torn records,
/// out-of-order primes, and Hasse-violating traces.
pub fn decode_cache(bytes: &[u8]) -> Result<CacheContents> {
    if bytes.len() < 44 {
        return Err(Error::Cache("truncated header".into()));
    }
    if &bytes[..4] != CACHE_MAGIC {
        return Err(Error::Cache("bad magic".into()));
    }
    let mut fingerprint = [0u8; 32];
    fingerprint.copy_from_slice(&bytes[4..36]);
    let x = u64::from_le_bytes(bytes[36..44].try_into().unwrap());
    let body = &bytes[44..];
    if body.len() % 17 != 0 {
        return Err(Error::Cache("torn record".into()));
    }
    let mut records = Vec::with_capacity(body.len() / 17);
    let mut last_p = 0u64;
    for chunk in body.chunks_exact(17) {
        let p = u64::from_le_bytes(chunk[..8].try_into().unwrap());
        let a_p = i64::from_le_bytes(chunk[8..16].try_into().unwrap());
        let good = match chunk[16] {
            0 => false,
            1 => true,
            _ => return Err(Error::Cache("bad good flag".into())),
        };
        if p <= last_p || p > x {
            return Err(Error::Cache(format!("prime {p} out of order or beyond X = {x}")));
        }
        last_p = p;
        if good {
            let bound = 2.0 * (p as f64).sqrt();
            if a_p.unsigned_abs() as f64 > bound {
                return Err(Error::Cache(format!("Hasse violation at p = {p}")));
            }
            let theta = (a_p as f64 / bound).clamp(-1.0, 1.0).acos();
            records.push(TraceRecord { p, good, a_p: Some(a_p), theta: Some(theta) });
        } else {
            records.push(TraceRecord { p, good, a_p: None, theta: None });
        }
    }
    Ok(CacheContents { fingerprint, x, records })
}

pub fn write_cache(path: &Path, curve: &WeierstrassCurve, x: u64, records: &[TraceRecord]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode_cache(curve, x, records))?;
    Ok(())
}

pub fn read_cache(path: &Path, curve: &WeierstrassCurve) -> Result<CacheContents> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let contents = decode_cache(&bytes)?;
    if contents.fingerprint != curve.fingerprint() {
        return Err(Error::Cache("fingerprint mismatch: cache belongs to another curve".into()));
    }
    Ok(contents)
}

/// The Clausen curve whose trace statistics drive the X_λ census:
/// E^Cl_{−λ/(λ+1)}.
pub fn census_clausen_curve(lambda: &Rational) -> Result<WeierstrassCurve> {
    let lp1 = lambda.plus_one()?;
    if lp1.is_zero() || lambda.is_zero() {
        return Err(Error::arg("lambda must avoid {0, -1}"));
    }
    let mu = lambda.neg().checked_mul(&lp1.recip()?)?;
    clausen_curve(mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> Rational {
        Rational::new(n, d).unwrap()
    }

    /// Independent oracle: count points on y² = f(x) by full enumeration of
    /// (x, y) pairs plus the point at infinity.
    fn brute_force_trace(curve: &WeierstrassCurve, p: u64) -> i64 {
        let [c0, c1, c2] = curve.reduced_cubic(p).unwrap();
        let mut count: u64 = 1; // infinity
        for x in 0..p {
            let fx = (((x + c2) % p * x % p + c1) % p * x % p + c0) % p;
            for y in 0..p {
                if y * y % p == fx {
                    count += 1;
                }
            }
        }
        p as i64 + 1 - count as i64
    }

    #[test]
    fn clausen_singular_rejected() {
        assert!(clausen_curve(Rational::integer(0)).is_err());
        assert!(clausen_curve(Rational::integer(-1)).is_err());
    }

    #[test]
    fn clausen_disc_support() {
        // disc = −64·2·9 for λ = 2
        let c = clausen_curve(Rational::integer(2)).unwrap();
        assert!(c.disc_support.contains(&2));
        assert!(c.disc_support.contains(&3));
    }

    #[test]
    fn trace_matches_brute_force() {
        let fixtures = vec![
            short_curve(rat(1, 1), rat(1, 1)).unwrap(),
            short_curve(rat(7, 1), rat(13, 1)).unwrap(),
            short_curve(rat(-11, 1), rat(-14, 1)).unwrap(),
            clausen_curve(rat(2, 1)).unwrap(),
            clausen_curve(rat(-1, 2)).unwrap(),
        ];
        for curve in &fixtures {
            for p in sieve_primes(199).unwrap().primes {
                if !curve.is_good(p) {
                    continue;
                }
                let rec = frobenius_trace(curve, p).unwrap();
                assert_eq!(rec.a_p.unwrap(), brute_force_trace(curve, p), "{} at p = {p}", curve.canonical_descriptor());
            }
        }
    }

    #[test]
    fn trace_example_p5() {
        let c = short_curve(rat(1, 1), rat(1, 1)).unwrap();
        let rec = frobenius_trace(&c, 5).unwrap();
        // -sum of legendre(x^3+x+1, 5)
        let mut s = 0i64;
        for x in 0..5i64 {
            s += crate::arith::legendre(x * x * x + x + 1, 5).unwrap() as i64;
        }
        assert_eq!(rec.a_p.unwrap(), -s);
    }

    #[test]
    fn j_invariant_cases() {
        let c = short_curve(rat(0, 1), rat(1, 1)).unwrap();
        assert_eq!(j_invariant(&c), Rational::integer(0));
        let c = short_curve(rat(1, 1), rat(0, 1)).unwrap();
        assert_eq!(j_invariant(&c), Rational::integer(1728));
        // quadratic twists share j: (A, B) vs (A d^2, B d^3)
        let c1 = short_curve(rat(7, 1), rat(13, 1)).unwrap();
        let c2 = short_curve(rat(7 * 9, 1), rat(13 * 27, 1)).unwrap();
        assert_eq!(j_invariant(&c1), j_invariant(&c2));
    }

    #[test]
    fn census_curve_j_invariants_confirm_cm_table() {
        // E^Cl_{−λ/(λ+1)} for the CM table entries lands on CM j-invariants
        let j1 = j_invariant(&census_clausen_curve(&rat(1, 1)).unwrap());
        assert_eq!(j1, Rational::integer(8000)); // D_K = −8
        let j8 = j_invariant(&census_clausen_curve(&rat(8, 1)).unwrap());
        assert_eq!(j8, Rational::integer(287_496)); // D_K = −4
        let jm4 = j_invariant(&census_clausen_curve(&rat(-4, 1)).unwrap());
        assert_eq!(jm4, Rational::integer(54_000)); // D_K = −3
    }

    #[test]
    fn cm_table_lookup() {
        let d = clausen_cm_data(&rat(1, 1)).unwrap();
        assert_eq!((d.period, d.d_k), (Some(8), Some(-8)));
        let d = clausen_cm_data(&rat(-64, 1)).unwrap();
        assert_eq!((d.period, d.d_k), (Some(14), Some(-7)));
        let d = clausen_cm_data(&rat(2, 1)).unwrap();
        assert!(!d.has_cm);
    }

    #[test]
    fn cm_splitting_law_lambda_1() {
        // a_p = 0 iff kronecker(−8, p) = −1 on the census curve for λ = 1
        let curve = census_clausen_curve(&rat(1, 1)).unwrap();
        for rec in trace_sweep(&curve, 10_000).unwrap() {
            if !rec.good {
                continue;
            }
            let inert = kronecker(-8, rec.p).unwrap() == -1;
            assert_eq!(rec.a_p == Some(0), inert, "p = {}", rec.p);
        }
    }

    #[test]
    fn cm_detect_fixtures() {
        let cm = cm_detect(&census_clausen_curve(&rat(1, 1)).unwrap(), 10_000).unwrap();
        assert_eq!(cm.d_k, Some(-8));
        let non_cm = cm_detect(&short_curve(rat(7, 1), rat(13, 1)).unwrap(), 10_000).unwrap();
        assert!(!non_cm.has_cm);
        let cm2 = cm_detect(&short_curve(rat(-120, 1), rat(506, 1)).unwrap(), 10_000).unwrap();
        assert!(cm2.has_cm);
    }

    #[test]
    fn zero_fraction_scales() {
        let cm = census_clausen_curve(&rat(1, 1)).unwrap();
        let recs = trace_sweep(&cm, 100_000).unwrap();
        let good: Vec<_> = recs.iter().filter(|r| r.good).collect();
        let f = good.iter().filter(|r| r.a_p == Some(0)).count() as f64 / good.len() as f64;
        assert!((f - 0.5).abs() < 0.02, "CM zero fraction {f}");
        let ncm = clausen_curve(rat(-2, 3)).unwrap();
        let recs = trace_sweep(&ncm, 100_000).unwrap();
        let good: Vec<_> = recs.iter().filter(|r| r.good).collect();
        let f = good.iter().filter(|r| r.a_p == Some(0)).count() as f64 / good.len() as f64;
        assert!(f < 0.1, "non-CM zero fraction {f}");
    }

    #[test]
    fn sweep_accounting() {
        let c = clausen_curve(rat(2, 1)).unwrap();
        let recs = trace_sweep(&c, 10_000).unwrap();
        let total = sieve_primes(10_000).unwrap().count();
        assert_eq!(recs.len(), total);
        let bad = recs.iter().filter(|r| !r.good).count();
        let good = recs.iter().filter(|r| r.good).count();
        assert_eq!(bad + good, total);
        for r in recs.iter().filter(|r| r.good) {
            let a = r.a_p.unwrap();
            assert!((a.unsigned_abs() as f64) <= 2.0 * (r.p as f64).sqrt());
        }
    }

    #[test]
    fn cache_roundtrip() {
        let c = clausen_curve(rat(2, 1)).unwrap();
        let recs = trace_sweep(&c, 500).unwrap();
        let bytes = encode_cache(&c, 500, &recs);
        let back = decode_cache(&bytes).unwrap();
        assert_eq!(back.x, 500);
        assert_eq!(back.records, recs);
        assert_eq!(back.fingerprint, c.fingerprint());
    }

    #[test]
    fn cache_rejects_garbage() {
        assert!(decode_cache(b"").is_err());
        assert!(decode_cache(&[0u8; 44]).is_err());
        let c = clausen_curve(rat(2, 1)).unwrap();
        let mut bytes = encode_cache(&c, 500, &trace_sweep(&c, 500).unwrap());
        bytes.truncate(bytes.len() - 1);
        assert!(decode_cache(&bytes).is_err());
    }
}
