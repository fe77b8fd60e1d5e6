//! Chebyshev polynomials of the second kind and Beurling–Selberg
//! majorant/minorant trigonometric polynomials (1D and 2D).
//!
//! The Selberg construction works on ℝ/2πℤ: the interval [α, β] ⊆ [0, π] is
//! symmetrized to [α, β] ∪ [−β, −α], each piece is sandwiched with Vaaler's
//! degree-M one-sided approximations to the sawtooth, and the even sum is
//! re-expanded in the cos(mθ) basis by an exact discrete cosine transform.
//! The construction is validated by dense-grid sandwich checks and
//! coefficient-decay assertions, not assumed.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::measures::Interval;

/// U_m(cos θ) = sin((m+1)θ)/sin θ by the stable three-term recurrence,
/// including the limit values m+1 at θ = 0 and (−1)^m (m+1) at θ = π.
pub fn chebyshev_u(m: u32, theta: f64) -> f64 {
    let x = theta.cos();
    let mut prev = 1.0; // U_0
    if m == 0 {
        return prev;
    }
    let mut cur = 2.0 * x; // U_1
    for _ in 1..m {
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// θ ↦ Σ_{k=0}^{M} c_k cos(kθ).
#[derive(Debug, Clone)]
pub struct CosinePolynomial {
    pub degree: usize,
    pub coeffs: Vec<f64>,
}

impl CosinePolynomial {
    pub fn eval(&self, theta: f64) -> f64 {
        // cos(kθ) by recurrence
        let c1 = theta.cos();
        let mut ckm1 = 1.0;
        let mut ck = c1;
        let mut acc = self.coeffs[0];
        for &c in &self.coeffs[1..] {
            acc += c * ck;
            let next = 2.0 * c1 * ck - ckm1;
            ckm1 = ck;
            ck = next;
        }
        acc
    }
}

/// (θ, θ′) ↦ Σ c_{m,m′} cos(mθ)cos(m′θ′); coeffs is an (M+1)×(M+1) grid.
#[derive(Debug, Clone)]
pub struct CosinePolynomial2D {
    pub degree: usize,
    pub coeffs: Vec<Vec<f64>>,
}

impl CosinePolynomial2D {
    pub fn eval(&self, theta: f64, theta_p: f64) -> f64 {
        let n = self.degree + 1;
        let cos_row = |t: f64| {
            let mut v = Vec::with_capacity(n);
            let c1 = t.cos();
            let mut a = 1.0;
            let mut b = c1;
            for k in 0..n {
                v.push(if k == 0 { 1.0 } else { b });
                if k >= 1 {
                    let next = 2.0 * c1 * b - a;
                    a = b;
                    b = next;
                }
            }
            v
        };
        let ct = cos_row(theta);
        let cu = cos_row(theta_p);
        let mut acc = 0.0;
        for (m, row) in self.coeffs.iter().enumerate() {
            for (mp, &c) in row.iter().enumerate() {
                acc += c * ct[m] * cu[mp];
            }
        }
        acc
    }
}

/// Vaaler's Fourier multiplier Ĵ(t) = πt(1−t)cot(πt) + t on (0, 1).
fn vaaler_jhat(t: f64) -> f64 {
    PI * t * (1.0 - t) * (1.0 / (PI * t).tan()) + t
}

/// One-sided sawtooth approximations on ℝ/ℤ: ψ±(x) = V_N(x) ± K_N(x)/(2N+2)
/// with V_N the Vaaler polynomial and K_N the Fejér kernel, satisfying
/// ψ⁻ ≤ {x} − 1/2 ≤ ψ⁺ pointwise.
struct Sawtooth {
    n: usize,
    /// sine coefficients of V_N: V_N(x) = Σ a_k sin(2πkx), 1 ≤ k ≤ N
    sine: Vec<f64>,
}

impl Sawtooth {
    fn new(n: usize) -> Sawtooth {
        let sine = (1..=n)
            .map(|k| -vaaler_jhat(k as f64 / (n as f64 + 1.0)) / (PI * k as f64))
            .collect();
        Sawtooth { n, sine }
    }

    fn fejer(&self, x: f64) -> f64 {
        let np1 = self.n as f64 + 1.0;
        let s = (PI * x).sin();
        if s.abs() < 1e-12 {
            return np1;
        }
        let num = (PI * np1 * x).sin();
        num * num / (np1 * s * s)
    }

    fn psi(&self, x: f64, major: bool) -> f64 {
        let mut v = 0.0;
        for (k, &a) in self.sine.iter().enumerate() {
            v += a * (2.0 * PI * (k + 1) as f64 * x).sin();
        }
        let k = self.fejer(x) / (2.0 * self.n as f64 + 2.0);
        if major {
            v + k
        } else {
            v - k
        }
    }
}

/// Even majorant/minorant of 1_{[α,β]}(θ) + 1_{[−β,−α]}(θ) on ℝ/2πℤ,
/// evaluated at x = θ/(2π).
fn symmetrized_sandwich(saw: &Sawtooth, a: f64, b: f64, x: f64, major: bool) -> f64 {
    // majorant of [a,b]: (b−a) + ψ⁺(x−b) − ψ⁻(x−a); minorant swaps sides
    let piece = |lo: f64, hi: f64| {
        (hi - lo) + saw.psi(x - hi, major) - saw.psi(x - lo, !major)
    };
    piece(a, b) + piece(-b, -a)
}

fn check_angle_interval(i: &Interval) -> Result<()> {
    if i.lo < -1e-12 || i.hi > PI + 1e-12 {
        return Err(Error::arg(format!(
            "selberg interval [{}, {}] not inside [0, pi]",
            i.lo, i.hi
        )));
    }
    Ok(())
}

/// Degree-M cosine polynomial F± with F⁻ ≤ 1_I ≤ F⁺ on all of [0, π],
/// mean defect |c_0 − |I|/π| = O(1/M), and |c_m| = O(1/m).
pub fn selberg_polynomial(i: &Interval, m: usize, major: bool) -> Result<CosinePolynomial> {
    check_angle_interval(i)?;
    if m < 1 {
        return Err(Error::arg("selberg degree must be at least 1"));
    }
    let a = i.lo / (2.0 * PI);
    let b = i.hi / (2.0 * PI);
    let saw = Sawtooth::new(m);
    // F is an even trig polynomial of degree M on R/Z; a DFT on L >= 2M+1
    // equispaced points recovers the cosine coefficients exactly.
    let l = 4 * (m + 1);
    let samples: Vec<f64> = (0..l)
        .map(|k| symmetrized_sandwich(&saw, a, b, k as f64 / l as f64, major))
        .collect();
    let mut coeffs = Vec::with_capacity(m + 1);
    for j in 0..=m {
        let mut acc = 0.0;
        for (k, &s) in samples.iter().enumerate() {
            acc += s * (2.0 * PI * j as f64 * k as f64 / l as f64).cos();
        }
        let scale = if j == 0 { 1.0 } else { 2.0 } / l as f64;
        coeffs.push(acc * scale);
    }
    Ok(CosinePolynomial { degree: m, coeffs })
}

/// 2D sandwich polynomials: majorant F⁺ ⊗ F⁺ (valid because the 1D majorant
/// is nonnegative), minorant F⁻⊗F⁺ + F⁺⊗F⁻ − F⁺⊗F⁺.
pub fn selberg_polynomial_2d(
    i: &Interval,
    ip: &Interval,
    m: usize,
    major: bool,
) -> Result<CosinePolynomial2D> {
    let fp = selberg_polynomial(i, m, true)?;
    let fpp = selberg_polynomial(ip, m, true)?;
    let n = m + 1;
    let mut coeffs = vec![vec![0.0; n]; n];
    if major {
        for j in 0..n {
            for k in 0..n {
                coeffs[j][k] = fp.coeffs[j] * fpp.coeffs[k];
            }
        }
    } else {
        let fm = selberg_polynomial(i, m, false)?;
        let fmp = selberg_polynomial(ip, m, false)?;
        for j in 0..n {
            for k in 0..n {
                coeffs[j][k] = fm.coeffs[j] * fpp.coeffs[k] + fp.coeffs[j] * fmp.coeffs[k]
                    - fp.coeffs[j] * fpp.coeffs[k];
            }
        }
    }
    Ok(CosinePolynomial2D { degree: m, coeffs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::quad::integrate;

    #[test]
    fn chebyshev_base_cases() {
        for theta in [0.1f64, 1.0, 2.0, 3.0] {
            assert_eq!(chebyshev_u(0, theta), 1.0);
            assert!((chebyshev_u(1, theta) - 2.0 * theta.cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn chebyshev_matches_sine_ratio() {
        for m in [2u32, 3, 7, 20, 101] {
            for theta in [0.3f64, 1.1, 2.7] {
                let want = ((m as f64 + 1.0) * theta).sin() / theta.sin();
                assert!((chebyshev_u(m, theta) - want).abs() < 1e-8, "m={m}, theta={theta}");
            }
        }
    }

    #[test]
    fn chebyshev_endpoint_limits() {
        for m in [0u32, 1, 2, 5, 10, 1000] {
            assert!((chebyshev_u(m, 0.0) - (m as f64 + 1.0)).abs() < 1e-6);
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            assert!((chebyshev_u(m, PI) - sign * (m as f64 + 1.0)).abs() < 1e-6);
        }
    }

    #[test]
    fn chebyshev_orthonormal_u3() {
        let v = integrate(
            &|t: f64| 2.0 / PI * chebyshev_u(3, t) * chebyshev_u(3, t) * t.sin().powi(2),
            0.0,
            PI,
            1e-12,
        )
        .unwrap();
        assert!((v - 1.0).abs() < 1e-9);
    }

    fn indicator(i: &Interval, t: f64) -> f64 {
        if i.contains(t) {
            1.0
        } else {
            0.0
        }
    }

    #[test]
    fn sandwich_1d_dense_grid() {
        let i = Interval::new(0.7, 2.1).unwrap();
        for m in [10usize, 20, 50] {
            let plus = selberg_polynomial(&i, m, true).unwrap();
            let minus = selberg_polynomial(&i, m, false).unwrap();
            for k in 0..=4000 {
                let t = PI * k as f64 / 4000.0;
                let ind = indicator(&i, t);
                assert!(plus.eval(t) - ind >= -1e-12, "majorant fails at {t}, M={m}");
                assert!(ind - minus.eval(t) >= -1e-12, "minorant fails at {t}, M={m}");
                assert!(plus.eval(t) >= -1e-12, "majorant negative at {t}");
            }
        }
    }

    #[test]
    fn sandwich_endpoint_intervals() {
        // intervals touching 0 or pi fold onto themselves under symmetrization
        for (lo, hi) in [(0.0, 1.0), (2.0, PI), (0.0, PI)] {
            let i = Interval::new(lo, hi).unwrap();
            let plus = selberg_polynomial(&i, 15, true).unwrap();
            let minus = selberg_polynomial(&i, 15, false).unwrap();
            for k in 0..=2000 {
                let t = PI * k as f64 / 2000.0;
                let ind = indicator(&i, t);
                assert!(plus.eval(t) - ind >= -1e-12, "[{lo},{hi}] majorant at {t}");
                assert!(ind - minus.eval(t) >= -1e-12, "[{lo},{hi}] minorant at {t}");
            }
        }
        let full = selberg_polynomial(&Interval::new(0.0, PI).unwrap(), 10, true).unwrap();
        assert!(full.coeffs[0] >= 1.0);
    }

    #[test]
    fn coefficient_decay() {
        let i = Interval::new(0.7, 2.1).unwrap();
        let mean = i.length() / PI;
        for m in [10usize, 50] {
            for major in [true, false] {
                let f = selberg_polynomial(&i, m, major).unwrap();
                assert!((f.coeffs[0] - mean).abs() <= 4.0 / m as f64, "c0 defect, M={m}");
                for k in 1..=m {
                    assert!(f.coeffs[k].abs() <= 4.0 / k as f64, "c_{k}, M={m}");
                }
            }
            let c0p = selberg_polynomial(&i, m, true).unwrap().coeffs[0];
            let c0m = selberg_polynomial(&i, m, false).unwrap().coeffs[0];
            assert!(c0p >= mean && mean >= c0m);
            assert!(c0p - c0m <= 8.0 / m as f64);
        }
    }

    #[test]
    fn sandwich_2d_grid() {
        let i = Interval::new(0.5, 1.5).unwrap();
        let ip = Interval::new(2.0, 3.0).unwrap();
        let m = 20;
        let plus = selberg_polynomial_2d(&i, &ip, m, true).unwrap();
        let minus = selberg_polynomial_2d(&i, &ip, m, false).unwrap();
        let n = 120;
        for j in 0..=n {
            let t = PI * j as f64 / n as f64;
            for k in 0..=n {
                let u = PI * k as f64 / n as f64;
                let ind = indicator(&i, t) * indicator(&ip, u);
                assert!(plus.eval(t, u) - ind >= -1e-12, "2D majorant at ({t}, {u})");
                assert!(ind - minus.eval(t, u) >= -1e-12, "2D minorant at ({t}, {u})");
            }
        }
        for mm in 1..=m {
            for mp in 1..=m {
                let bound = 16.0 / (mm as f64 * mp as f64);
                assert!(plus.coeffs[mm][mp].abs() <= bound);
                assert!(minus.coeffs[mm][mp].abs() <= bound);
            }
        }
    }

    #[test]
    fn degenerate_interval_sandwich() {
        let i = Interval::new(1.3, 1.3).unwrap();
        let plus = selberg_polynomial(&i, 12, true).unwrap();
        let minus = selberg_polynomial(&i, 12, false).unwrap();
        for k in 0..=1000 {
            let t = PI * k as f64 / 1000.0;
            assert!(plus.eval(t) >= -1e-12);
            assert!(minus.eval(t) <= indicator(&i, t) + 1e-12);
        }
    }
}
