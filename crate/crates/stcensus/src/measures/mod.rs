//! Exact limiting laws: continuous densities, atoms, CDFs, and interval
//! measures for every case of the classification.
//!
//! The raw "Batman" display function integrates to 4π over [−3, 3]; the law
//! stores the density normalized by 1/(4π) so that every law has total mass
//! one (reports carry the note "density normalized by 1/(4π)"). Atoms are
//! held as exact rationals, never as quadrature output. Densities return an
//! +∞ sentinel exactly at singular abscissae so CDF and plotting code must
//! branch explicitly.

pub mod quad;

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::Serialize;

use crate::arith::{euler_phi, kronecker};
use crate::error::{Error, Result};
use quad::integrate_sqrt_endpoints;

/// Closed interval, either on the angle axis [0, π] or the trace axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::arg(format!("interval [{lo}, {hi}] has lo > hi")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lo <= t && t <= self.hi
    }

    fn check_angle(&self) -> Result<()> {
        if self.lo < -1e-12 || self.hi > PI + 1e-12 {
            return Err(Error::arg(format!("interval [{}, {}] not inside [0, pi]", self.lo, self.hi)));
        }
        Ok(())
    }
}

/// Tags for the limiting measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum LawKind {
    /// Sato–Tate angle law (2/π)sin²θ on [0, π].
    SemicircleST,
    /// CM angle law: uniform 1/(2π) plus an atom of mass 1/2 at π/2.
    CMAngle,
    /// Generic K3 law B(t)/(4π) on [−3, 3].
    Batman,
    /// (1/2π)√((3−t)/(1+t)) on [−1, 3].
    SqrtK3,
    /// B₁ plus atoms of mass 1/4 at ±1.
    FlyingBatman,
    /// 1/(2π√(3+2t−t²)) on [−1, 3] plus an atom of mass 1/2 at +1.
    ArcK3Plus,
    /// Same density with the atom at −1.
    ArcK3Minus,
    /// Product of two semicircle traces, on [−4, 4].
    C1,
    /// C₂ plus an atom of mass 1/2 at 0.
    C2Atom,
    /// C₃ plus an atom of mass 3/4 at 0.
    C3Atom,
    /// 2·C₃ plus an atom of mass 1/2 at 0.
    C3TwinAtom,
}

impl LawKind {
    pub const ALL: [LawKind; 11] = [
        LawKind::SemicircleST,
        LawKind::CMAngle,
        LawKind::Batman,
        LawKind::SqrtK3,
        LawKind::FlyingBatman,
        LawKind::ArcK3Plus,
        LawKind::ArcK3Minus,
        LawKind::C1,
        LawKind::C2Atom,
        LawKind::C3Atom,
        LawKind::C3TwinAtom,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            LawKind::SemicircleST => "semicircle-st",
            LawKind::CMAngle => "cm-angle",
            LawKind::Batman => "batman",
            LawKind::SqrtK3 => "sqrt-k3",
            LawKind::FlyingBatman => "flying-batman",
            LawKind::ArcK3Plus => "arc-k3-plus",
            LawKind::ArcK3Minus => "arc-k3-minus",
            LawKind::C1 => "c1",
            LawKind::C2Atom => "c2-atom",
            LawKind::C3Atom => "c3-atom",
            LawKind::C3TwinAtom => "c3-twin-atom",
        }
    }

    pub fn from_name(s: &str) -> Result<LawKind> {
        LawKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::arg(format!("unknown law {s:?}")))
    }
}

/// A point mass, held as an exact rational.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub location: f64,
    pub mass_num: u64,
    pub mass_den: u64,
}

impl Atom {
    fn new(location: f64, mass_num: u64, mass_den: u64) -> Self {
        Atom { location, mass_num, mass_den }
    }

    pub fn mass(&self) -> f64 {
        self.mass_num as f64 / self.mass_den as f64
    }
}

/// The raw Batman display function B(x) on [−3, 3] (mass 4π, NOT a density).
pub fn batman_display(x: f64) -> f64 {
    let r = x.abs();
    if r > 3.0 {
        return 0.0;
    }
    if r < 1.0 {
        let d1 = 3.0 - 2.0 * x - x * x;
        let d2 = 3.0 + 2.0 * x - x * x;
        (3.0 + x) / d1.sqrt() + (3.0 - x) / d2.sqrt()
    } else if r == 1.0 {
        f64::INFINITY
    } else {
        let d = 3.0 + 2.0 * r - r * r;
        if d <= 0.0 {
            0.0
        } else {
            (3.0 - r) / d.sqrt()
        }
    }
}

fn flying_batman_density(x: f64) -> f64 {
    let r = x.abs();
    if r > 3.0 {
        return 0.0;
    }
    if r == 1.0 || r == 3.0 {
        return f64::INFINITY;
    }
    let four_pi = 4.0 * PI;
    if r < 1.0 {
        1.0 / (four_pi * (3.0 - 2.0 * x - x * x).sqrt()) + 1.0 / (four_pi * (3.0 + 2.0 * x - x * x).sqrt())
    } else {
        1.0 / (four_pi * (3.0 + 2.0 * r - r * r).sqrt())
    }
}

fn sqrt_k3_density(t: f64) -> f64 {
    if !( -1.0..=3.0).contains(&t) {
        return 0.0;
    }
    if t == -1.0 {
        return f64::INFINITY;
    }
    ((3.0 - t) / (1.0 + t)).sqrt() / (2.0 * PI)
}

fn arc_k3_density(t: f64) -> f64 {
    if !(-1.0..=3.0).contains(&t) {
        return 0.0;
    }
    if t == -1.0 || t == 3.0 {
        return f64::INFINITY;
    }
    1.0 / (2.0 * PI * ((3.0 - t) * (1.0 + t)).sqrt())
}

/// C_k kernel for the double quadric laws: integrals over u ∈ [|t|/2, 2] of
/// (1/u) times products/quotients of √(1−(u/2)²) and √(1−(|t|/2u)²).
///
/// Computed in log-space (v = ln u, so the 1/u du measure becomes dv),
/// which absorbs the logarithmic blow-up as t → 0 into the interval length
/// and leaves sqrt-type endpoints that the endpoint substitution removes.
/// Absolute error at most 10⁻⁹ per evaluation; even in t; +∞ exactly at
/// t = 0, where all three kernels diverge.
pub fn c_kernel(k: u8, t: f64) -> Result<f64> {
    if !(1..=3).contains(&k) {
        return Err(Error::arg(format!("c_kernel index {k} not in 1..=3")));
    }
    let r = t.abs();
    if r >= 4.0 {
        return Ok(0.0);
    }
    if r == 0.0 {
        return Ok(f64::INFINITY);
    }
    // offset w = ln u − ln(r/2) runs over [0, L]; integrating in w keeps the
    // distances to both endpoints exact, so the expm1 difference factors
    // below stay positive arbitrarily close to the boundary (r → 0 and
    // r → 4 both collapse differences past machine precision otherwise)
    let l = (4.0 / r).ln();
    let tol = 1e-10;
    // u = (r/2)e^w;  1 − (u/2)² = (2−u)(2+u)/4 with 2−u = −2·expm1(w−L);
    // 1 − (r/2u)² = (2u−r)(2u+r)/(2u)² with 2u−r = r·expm1(w)
    let parts = move |w: f64| {
        let u = (r / 2.0) * w.exp();
        let a1 = ((-2.0 * f64::exp_m1(w - l)) * (2.0 + u) / 4.0).max(0.0);
        let a2 = ((r * f64::exp_m1(w)) * (2.0 * u + r) / (4.0 * u * u)).max(0.0);
        (a1, a2)
    };
    let value = match k {
        1 => {
            let f = move |w: f64| {
                let (a1, a2) = parts(w);
                (a1 * a2).sqrt()
            };
            (2.0 / (PI * PI)) * integrate_sqrt_endpoints(&f, 0.0, l, true, true, tol)?
        }
        2 => {
            let f = move |w: f64| {
                let (a1, a2) = parts(w);
                (a1 / a2).sqrt()
            };
            (1.0 / (2.0 * PI * PI)) * integrate_sqrt_endpoints(&f, 0.0, l, true, true, tol)?
        }
        _ => {
            let f = move |w: f64| {
                let (a1, a2) = parts(w);
                1.0 / (a1 * a2).sqrt()
            };
            (1.0 / (8.0 * PI * PI)) * integrate_sqrt_endpoints(&f, 0.0, l, true, true, tol)?
        }
    };
    Ok(value)
}

struct Segment {
    lo: f64,
    hi: f64,
    sing_lo: bool,
    sing_hi: bool,
    /// (t, continuous cdf at t) checkpoints, ascending, first at lo.
    checkpoints: Vec<(f64, f64)>,
}

struct CdfTable {
    segments: Vec<Segment>,
    continuous_total: f64,
}

/// A limiting measure: continuous density on a support interval plus a
/// finite list of atoms. Immutable; concurrent evaluation is safe.
pub struct Law {
    pub kind: LawKind,
    pub support: Interval,
    pub atoms: Vec<Atom>,
    cdf_table: OnceLock<CdfTable>,
}

impl Law {
    pub fn new(kind: LawKind) -> Law {
        let (support, atoms) = match kind {
            LawKind::SemicircleST => (Interval { lo: 0.0, hi: PI }, vec![]),
            LawKind::CMAngle => (Interval { lo: 0.0, hi: PI }, vec![Atom::new(PI / 2.0, 1, 2)]),
            LawKind::Batman => (Interval { lo: -3.0, hi: 3.0 }, vec![]),
            LawKind::SqrtK3 => (Interval { lo: -1.0, hi: 3.0 }, vec![]),
            LawKind::FlyingBatman => (
                Interval { lo: -3.0, hi: 3.0 },
                vec![Atom::new(-1.0, 1, 4), Atom::new(1.0, 1, 4)],
            ),
            LawKind::ArcK3Plus => (Interval { lo: -1.0, hi: 3.0 }, vec![Atom::new(1.0, 1, 2)]),
            LawKind::ArcK3Minus => (Interval { lo: -1.0, hi: 3.0 }, vec![Atom::new(-1.0, 1, 2)]),
            LawKind::C1 => (Interval { lo: -4.0, hi: 4.0 }, vec![]),
            LawKind::C2Atom => (Interval { lo: -4.0, hi: 4.0 }, vec![Atom::new(0.0, 1, 2)]),
            LawKind::C3Atom => (Interval { lo: -4.0, hi: 4.0 }, vec![Atom::new(0.0, 3, 4)]),
            LawKind::C3TwinAtom => (Interval { lo: -4.0, hi: 4.0 }, vec![Atom::new(0.0, 1, 2)]),
        };
        Law { kind, support, atoms, cdf_table: OnceLock::new() }
    }

    /// Continuous-part density; +∞ exactly at singular abscissae, 0 off
    /// support. Atoms are reported separately.
    pub fn density(&self, t: f64) -> f64 {
        if !self.support.contains(t) {
            return 0.0;
        }
        match self.kind {
            LawKind::SemicircleST => 2.0 / PI * t.sin().powi(2),
            LawKind::CMAngle => 1.0 / (2.0 * PI),
            LawKind::Batman => {
                let b = batman_display(t);
                if b.is_infinite() {
                    b
                } else {
                    b / (4.0 * PI)
                }
            }
            LawKind::SqrtK3 => sqrt_k3_density(t),
            LawKind::FlyingBatman => flying_batman_density(t),
            LawKind::ArcK3Plus | LawKind::ArcK3Minus => arc_k3_density(t),
            LawKind::C1 => c_kernel(1, t).unwrap_or(f64::NAN),
            LawKind::C2Atom => c_kernel(2, t).unwrap_or(f64::NAN),
            LawKind::C3Atom => c_kernel(3, t).unwrap_or(f64::NAN),
            LawKind::C3TwinAtom => c_kernel(3, t).map(|v| 2.0 * v).unwrap_or(f64::NAN),
        }
    }

    /// Abscissae where the density is not finite (interior or endpoint).
    pub fn singular_points(&self) -> Vec<f64> {
        match self.kind {
            LawKind::SemicircleST | LawKind::CMAngle => vec![],
            LawKind::Batman => vec![-1.0, 1.0],
            LawKind::SqrtK3 => vec![-1.0],
            LawKind::FlyingBatman => vec![-3.0, -1.0, 1.0, 3.0],
            LawKind::ArcK3Plus | LawKind::ArcK3Minus => vec![-1.0, 3.0],
            LawKind::C1 | LawKind::C2Atom | LawKind::C3Atom | LawKind::C3TwinAtom => vec![0.0],
        }
    }

    fn table(&self) -> Result<&CdfTable> {
        if let Some(t) = self.cdf_table.get() {
            return Ok(t);
        }
        let built = self.build_table()?;
        let _ = self.cdf_table.set(built);
        Ok(self.cdf_table.get().expect("just set"))
    }

    fn build_table(&self) -> Result<CdfTable> {
        let mut bounds = vec![self.support.lo, self.support.hi];
        for s in self.singular_points() {
            if s > self.support.lo && s < self.support.hi {
                bounds.push(s);
            }
        }
        bounds.sort_by(|a, b| a.partial_cmp(b).unwrap());
        bounds.dedup();
        let mut segments = Vec::new();
        let mut cum = 0.0;
        let span = self.support.length();
        for w in bounds.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            // substitute at every segment boundary: harmless where the
            // density is smooth, necessary at singular or sqrt-type
            // endpoints (e.g. the Batman display at ±3)
            let (sing_lo, sing_hi) = (true, true);
            let n = ((hi - lo) / span * 512.0).ceil().max(8.0) as usize;
            let mut checkpoints = Vec::with_capacity(n + 1);
            checkpoints.push((lo, cum));
            for i in 0..n {
                let a = lo + (hi - lo) * i as f64 / n as f64;
                let b = if i + 1 == n { hi } else { lo + (hi - lo) * (i + 1) as f64 / n as f64 };
                let piece = integrate_sqrt_endpoints(
                    &|t| self.density(t),
                    a,
                    b,
                    sing_lo && i == 0,
                    sing_hi && i + 1 == n,
                    1e-11,
                )?;
                cum += piece;
                checkpoints.push((b, cum));
            }
            segments.push(Segment { lo, hi, sing_lo, sing_hi, checkpoints });
        }
        Ok(CdfTable { segments, continuous_total: cum })
    }

    /// Continuous-part CDF (atoms excluded).
    pub fn continuous_cdf(&self, t: f64) -> Result<f64> {
        if t <= self.support.lo {
            return Ok(0.0);
        }
        let table = self.table()?;
        if t >= self.support.hi {
            return Ok(table.continuous_total);
        }
        let seg = table
            .segments
            .iter()
            .find(|s| t <= s.hi)
            .expect("t inside support");
        let idx = seg.checkpoints.partition_point(|&(x, _)| x <= t) - 1;
        let (anchor, base) = seg.checkpoints[idx];
        if anchor == t {
            return Ok(base);
        }
        let sing_lo = seg.sing_lo && anchor == seg.lo;
        let sing_hi = seg.sing_hi && t >= seg.hi;
        let local = integrate_sqrt_endpoints(&|x| self.density(x), anchor, t, sing_lo, sing_hi, 1e-11)?;
        Ok(base + local)
    }

    /// Total mass of the continuous part (by quadrature).
    pub fn continuous_mass(&self) -> Result<f64> {
        Ok(self.table()?.continuous_total)
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass()).sum()
    }

    pub fn total_mass(&self) -> Result<f64> {
        Ok(self.continuous_mass()? + self.atom_mass())
    }

    /// CDF including atom jumps: P[X <= t].
    pub fn cdf(&self, t: f64) -> Result<f64> {
        let atoms: f64 = self.atoms.iter().filter(|a| a.location <= t).map(|a| a.mass()).sum();
        Ok(self.continuous_cdf(t)? + atoms)
    }

    /// Left limit of the CDF: P[X < t].
    pub fn cdf_left(&self, t: f64) -> Result<f64> {
        let atoms: f64 = self.atoms.iter().filter(|a| a.location < t).map(|a| a.mass()).sum();
        Ok(self.continuous_cdf(t)? + atoms)
    }
}

/// Sato–Tate measure of I ⊆ [0, π], by the closed form
/// (|I| − (sin 2β − sin 2α)/2)/π.
pub fn mu_st(i: &Interval) -> Result<f64> {
    i.check_angle()?;
    Ok((i.length() - ((2.0 * i.hi).sin() - (2.0 * i.lo).sin()) / 2.0) / PI)
}

/// CM measure: |I|/(2π) plus 1/2 when π/2 ∈ I.
pub fn mu_cm(i: &Interval) -> Result<f64> {
    i.check_angle()?;
    let atom = if i.contains(PI / 2.0) { 0.5 } else { 0.0 };
    Ok(i.length() / (2.0 * PI) + atom)
}

/// Case tags for the joint angle-census main terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JointCase {
    /// Both curves non-CM.
    BothNonCm,
    /// First CM, second non-CM.
    CmNonCm,
    /// Both CM with coprime field discriminants.
    BothCmCoprime,
    /// Both CM with non-coprime field discriminants.
    BothCmShared,
}

/// Main-term coefficient of π(x) for the joint census π_{E,E',I,I'}.
pub fn joint_main_term(case: JointCase, i: &Interval, ip: &Interval) -> Result<f64> {
    i.check_angle()?;
    ip.check_angle()?;
    Ok(match case {
        JointCase::BothNonCm => mu_st(i)? * mu_st(ip)?,
        JointCase::CmNonCm => mu_cm(i)? * mu_st(ip)?,
        JointCase::BothCmCoprime => mu_cm(i)? * mu_cm(ip)?,
        JointCase::BothCmShared => {
            let half_ind = if i.contains(PI / 2.0) && ip.contains(PI / 2.0) { 1.0 } else { 0.0 };
            0.5 * (i.length() * ip.length() / (PI * PI) + half_ind)
        }
    })
}

/// Main-term coefficient of π(x) for the census in the progression
/// p ≡ a mod q. Non-CM: μ_ST(I)/φ(q). CM: the μ_CM term plus the
/// χ_K(a)·δ(K, q) correction, with δ(K, q) = 1 iff D_K | q.
pub fn ap_main_term(cm: bool, i: &Interval, q: u64, a: u64, d_k: Option<i64>) -> Result<f64> {
    i.check_angle()?;
    if q == 0 || num_gcd(a, q) != 1 {
        return Err(Error::arg(format!("residue {a} not coprime to modulus {q}")));
    }
    let phi = euler_phi(q) as f64;
    if !cm {
        return Ok(mu_st(i)? / phi);
    }
    let d = d_k.ok_or_else(|| Error::arg("CM main term needs a discriminant"))?;
    let delta = if q % d.unsigned_abs() == 0 { 1.0 } else { 0.0 };
    let chi = kronecker(d, a)? as f64;
    let half_ind = if i.contains(PI / 2.0) { 1.0 } else { 0.0 };
    Ok((mu_cm(i)? + chi * delta * (i.length() / PI - half_ind) / 2.0) / phi)
}

fn num_gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}
