//! The third-order operator `y‴ + (py)′ + py′ + qy = ζy` of the good
//! Boussinesq equation: monodromy, multipliers, ramifications, the
//! three-point problem, and the reduction to a Hill equation with an
//! energy-dependent potential.
//!
//! Solutions grow like `e^{w|x|}` with `w = ζ^{1/3}`, so every quantity
//! that is fed to a root finder is rescaled by a nonvanishing power of
//! `e^{w}` first. Scalings never move zeros.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fundsol::IntegratorConfig;
use crate::ode::dopri5;
use crate::potentials::{FourierProfile, PotentialSpec, Tabulated};
use crate::rootfind::{
    isolate_zeros, refine_newton, scan_samples, CountOptions, LocatedZero, Rect, Sampling, ScanOptions,
};

type C = Complex64;
type Mat3 = [[C; 3]; 3];

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// Largest `|Re ζ^{1/3}|` accepted: `e^{2w}` (the size of `M(2, ζ)`) stays
/// below `1e250`.
pub const MAX_GROWTH: f64 = 287.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThirdOrderCoeffs {
    #[serde(default)]
    pub p: FourierProfile<f64>,
    #[serde(default)]
    pub q: FourierProfile<f64>,
}

impl ThirdOrderCoeffs {
    pub fn zero() -> Self {
        ThirdOrderCoeffs {
            p: FourierProfile::constant(0.0),
            q: FourierProfile::constant(0.0),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: ThirdOrderCoeffs = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.p.validate("p")?;
        self.q.validate("q")
    }

    pub fn p0(&self) -> f64 {
        self.p.a0
    }

    pub fn q0(&self) -> f64 {
        self.q.a0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoussinesqConfig {
    pub integ: IntegratorConfig<f64>,
    /// Real scans sample uniformly in `ζ^{1/3}`; zeros are `2π/√3` apart
    /// in that variable.
    pub scan: ScanOptions,
    /// Relative step of the central ζ-differences used for derivatives.
    pub diff_step: f64,
    pub count: CountOptions,
    /// Smallest `(|κ₃| − |κ₂|)/|κ₃|` at which `ψ₃` is trusted.
    pub dominance: f64,
    /// Chebyshev nodes of the reduced potential table.
    pub table_nodes: usize,
}

impl Default for BoussinesqConfig {
    fn default() -> Self {
        BoussinesqConfig {
            integ: IntegratorConfig::default(),
            scan: ScanOptions {
                sampling: Sampling::CubeRoot(2.0 * PI / 3f64.sqrt() / 16.0),
                ..ScanOptions::default()
            },
            diff_step: 1e-5,
            count: CountOptions::default(),
            dominance: 1e-4,
            table_nodes: 64,
        }
    }
}

/// `M(x, ζ) = (y_j^{(k−1)}(x, ζ))`, row `j` the solution with
/// `y_j^{(k−1)}(0) = δ_jk`, at `x = 1, 2` and at `x = −1, −2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monodromy3 {
    pub zeta: C,
    pub m1: Mat3,
    pub m2: Mat3,
    /// `M(−1) = M(1)⁻¹`.
    pub m_minus1: Mat3,
    pub m_minus2: Mat3,
}

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[ZERO; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

fn det3(m: &Mat3) -> C {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn trace(m: &Mat3) -> C {
    m[0][0] + m[1][1] + m[2][2]
}

fn mat_norm(m: &Mat3) -> f64 {
    m.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max)
}

/// `ζ^{1/3}` used for rescaling: the real cube root on the real axis, the
/// principal branch elsewhere.
pub fn growth_root(zeta: C) -> C {
    if zeta.im == 0.0 {
        C::new(zeta.re.cbrt(), 0.0)
    } else {
        zeta.powf(1.0 / 3.0)
    }
}

fn check_growth(zeta: C) -> Result<()> {
    if !(zeta.re.is_finite() && zeta.im.is_finite()) {
        return Err(Error::domain(zeta.re, zeta.im, "zeta must be finite"));
    }
    if growth_root(zeta).re.abs() > MAX_GROWTH || zeta.norm().cbrt() > MAX_GROWTH {
        return Err(Error::domain(zeta.re, zeta.im, "solutions would overflow double precision"));
    }
    Ok(())
}

fn rhs<'a>(coeffs: &'a ThirdOrderCoeffs, zeta: C, sign: f64) -> impl FnMut(f64, &[C], &mut [C]) -> Result<()> + 'a {
    move |t, y, dy| {
        let x = sign * t;
        let p = coeffs.p.eval(x);
        let dp = coeffs.p.deriv(x);
        let q = coeffs.q.eval(x);
        for j in 0..y.len() / 3 {
            let (y0, y1, y2) = (y[3 * j], y[3 * j + 1], y[3 * j + 2]);
            dy[3 * j] = y1 * sign;
            dy[3 * j + 1] = y2 * sign;
            dy[3 * j + 2] = (zeta * y0 - (dp + q) * y0 - 2.0 * p * y1) * sign;
        }
        Ok(())
    }
}

fn unpack(y: &[C]) -> Mat3 {
    let mut m = [[ZERO; 3]; 3];
    for j in 0..3 {
        for k in 0..3 {
            m[j][k] = y[3 * j + k];
        }
    }
    m
}

/// Integrates the companion system forward to `x = 1, 2` and backward to
/// `x = −1, −2`.
pub fn integrate_third_order(coeffs: &ThirdOrderCoeffs, zeta: C, cfg: &IntegratorConfig<f64>) -> Result<Monodromy3> {
    check_growth(zeta)?;
    let mut init = vec![ZERO; 9];
    for j in 0..3 {
        init[3 * j + j] = ONE;
    }
    let run = |sign: f64| dopri5(rhs(coeffs, zeta, sign), 0.0, &init, &[1.0, 2.0], cfg.tolerances());
    let (fwd, bwd) = rayon::join(|| run(1.0), || run(-1.0));
    let (fwd, bwd) = (fwd?, bwd?);
    Ok(Monodromy3 {
        zeta,
        m1: unpack(&fwd[0]),
        m2: unpack(&fwd[1]),
        m_minus1: unpack(&bwd[0]),
        m_minus2: unpack(&bwd[1]),
    })
}

impl Monodromy3 {
    /// `|det M(1) − 1|` relative to the product of the row norms, the
    /// size of the terms that cancel in the determinant.
    pub fn det_defect(&self) -> f64 {
        let rows: f64 = self
            .m1
            .iter()
            .map(|r| r.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
            .product();
        (det3(&self.m1) - ONE).norm() / rows.max(1.0)
    }

    /// `‖M(2) − M(1)²‖ / ‖M(1)‖²`.
    pub fn periodicity_defect(&self) -> f64 {
        let sq = mat_mul(&self.m1, &self.m1);
        let mut d = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                d = d.max((sq[i][j] - self.m2[i][j]).norm());
            }
        }
        d / mat_norm(&self.m1).powi(2).max(1.0)
    }

    /// `‖M(1)M(−1) − I‖` relative to the sizes of the factors.
    pub fn inverse_defect(&self) -> f64 {
        let p = mat_mul(&self.m1, &self.m_minus1);
        let mut d = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { ONE } else { ZERO };
                d = d.max((p[i][j] - want).norm());
            }
        }
        d / (mat_norm(&self.m1) * mat_norm(&self.m_minus1)).max(1.0)
    }

    /// `A = tr M(1)`.
    pub fn a(&self) -> C {
        trace(&self.m1)
    }

    /// `B = tr adj M(1) = tr M(1)⁻¹`, taken from the backward solution so
    /// that it keeps its accuracy when `A` is dominated by `κ₃`.
    pub fn b(&self) -> C {
        trace(&self.m_minus1)
    }

    /// `(A² − tr M(1)²)/2`, the same `B` from forward data only; it loses
    /// all accuracy once `e^{2w}ε` exceeds `e^{w/2}`.
    pub fn b_forward(&self) -> C {
        let a = self.a();
        (a * a - trace(&mat_mul(&self.m1, &self.m1))) / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierSet {
    /// Sorted by modulus, `|κ₁| ≤ |κ₂| ≤ |κ₃|`.
    pub kappa: [C; 3],
    pub a: C,
    pub b: C,
}

fn cubic(t: C, a: C, b: C) -> (C, C) {
    (((t - a) * t + b) * t - ONE, (3.0 * t - 2.0 * a) * t + b)
}

/// Roots of `t³ − At² + Bt − 1`. Weierstrass iteration for all three,
/// then, when one root dominates, the two small ones are recomputed from
/// `t² − st + 1/κ₃` with `s = (B − 1/κ₃)/κ₃`, which avoids the
/// cancellation in `A − κ₃`.
pub fn cubic_roots(a: C, b: C) -> [C; 3] {
    let scale = 1.0 + a.norm().max(b.norm().sqrt());
    let seed = C::new(0.4, 0.9);
    let mut r = [seed * scale, seed * seed * scale, seed * seed * seed * scale];
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for i in 0..3 {
            let (f, _) = cubic(r[i], a, b);
            let mut den = ONE;
            for j in 0..3 {
                if j != i {
                    den *= r[i] - r[j];
                }
            }
            if den.norm() == 0.0 {
                den = C::new(1e-300, 0.0);
            }
            let step = f / den;
            r[i] -= step;
            moved = moved.max(step.norm() / r[i].norm().max(1e-300));
        }
        if moved < 1e-15 {
            break;
        }
    }
    for t in r.iter_mut() {
        for _ in 0..3 {
            let (f, df) = cubic(*t, a, b);
            if df.norm() == 0.0 {
                break;
            }
            *t -= f / df;
        }
    }
    r.sort_by(|p, q| p.norm().total_cmp(&q.norm()));
    if r[2].norm() > 4.0 * r[1].norm() {
        let k3 = r[2];
        let p = ONE / k3;
        let s = (b - p) / k3;
        let sq = (s * s - 4.0 * p).sqrt();
        let big = if (s + sq).norm() >= (s - sq).norm() { (s + sq) / 2.0 } else { (s - sq) / 2.0 };
        if big.norm() > 0.0 {
            r[0] = p / big;
            r[1] = big;
            r.sort_by(|p, q| p.norm().total_cmp(&q.norm()));
        }
    }
    r
}

pub fn multipliers(m: &Monodromy3) -> MultiplierSet {
    let (a, b) = (m.a(), m.b());
    MultiplierSet {
        kappa: cubic_roots(a, b),
        a,
        b,
    }
}

impl MultiplierSet {
    pub fn product_defect(&self) -> f64 {
        (self.kappa[0] * self.kappa[1] * self.kappa[2] - ONE).norm()
    }
}

/// `(κ₁ − κ₂)²(κ₁ − κ₃)²(κ₂ − κ₃)²` from the symmetric functions:
/// `A²B² − 4B³ − 4A³ + 18AB − 27`.
pub fn cubic_discriminant(ms: &MultiplierSet) -> C {
    let (a, b) = (ms.a, ms.b);
    a * a * b * b - 4.0 * b * b * b - 4.0 * a * a * a + 18.0 * a * b - 27.0
}

/// `e^{−3w}` times the discriminant, `w` from [`growth_root`], assembled
/// from `Ae^{−w}` and `Be^{−w/2}` so that nothing overflows.
pub fn scaled_discriminant(m: &Monodromy3) -> C {
    let w = growth_root(m.zeta);
    let w = if m.zeta.im == 0.0 { C::new(w.re.abs(), 0.0) } else { w };
    let e = (-w).exp();
    let e_half = (-0.5 * w).exp();
    let at = m.a() * e;
    let bt = m.b() * e_half;
    let e15 = e * e_half;
    at * at * bt * bt - 4.0 * bt * bt * bt * e15 - 4.0 * at * at * at + 18.0 * at * bt * e15 - 27.0 * e15 * e15
}

/// `y₂(1)y₃(2) − y₃(1)y₂(2)`, the three-point determinant as it reads
/// from forward data. Its two terms are `e^{3w}` in size while their
/// difference is `e^{3w/2}`, so it is only usable for small `|ζ|`.
pub fn three_point_det_forward(m: &Monodromy3) -> C {
    m.m1[1][0] * m.m2[2][0] - m.m1[2][0] * m.m2[1][0]
}

/// `e^{−3w/2}(y₂(−1)y₃(−2) − y₃(−1)y₂(−2))`. The solution space is
/// invariant under the shift `x → x + 1`, so `y(0) = y(1) = y(2) = 0` has
/// a solution exactly when `y(0) = y(−1) = y(−2) = 0` has one. Backward,
/// the two growing solutions dominate and the difference keeps its
/// accuracy.
pub fn three_point_det(m: &Monodromy3) -> C {
    let w = growth_root(m.zeta);
    let w = if m.zeta.im == 0.0 { C::new(w.re.abs(), 0.0) } else { w };
    let d = m.m_minus1[1][0] * m.m_minus2[2][0] - m.m_minus1[2][0] * m.m_minus2[1][0];
    d * (-1.5 * w).exp()
}

/// Window edges `α_n^± = (π(2n ± 1)/√3)³`.
pub fn window(n: i64) -> (f64, f64) {
    let s = 3f64.sqrt();
    ((PI * (2 * n - 1) as f64 / s).powi(3), (PI * (2 * n + 1) as f64 / s).powi(3))
}

/// `(2πn/√3)³`, the unperturbed ramifications and three-point eigenvalues.
pub fn unperturbed(n: i64) -> f64 {
    (2.0 * PI * n as f64 / 3f64.sqrt()).powi(3)
}

/// The window `n` with `α_n^- < ζ < α_n^+`.
pub fn window_index(zeta: f64) -> i64 {
    let w = zeta.cbrt();
    ((3f64.sqrt() * w / PI + 1.0) / 2.0).floor() as i64
}

/// `f̃_n = (2/√3)∫₀¹ f(x) cos(2πnx + π/6) dx`, which for
/// `f = Σ aₘ cos 2πmx + bₘ sin 2πmx` is `aₙ/2 − bₙ/(2√3)`.
pub fn tilde(f: &FourierProfile<f64>, n: usize) -> f64 {
    let a = f.cos.get(n.wrapping_sub(1)).copied().filter(|_| n >= 1).unwrap_or(0.0);
    let b = f.sin.get(n.wrapping_sub(1)).copied().filter(|_| n >= 1).unwrap_or(0.0);
    a / 2.0 - b / (2.0 * 3f64.sqrt())
}

/// `(2πn/√3)³ − (4πn/√3)p₀ + (2πn/√3)p̃ₙ + q₀ − q̃ₙ`.
pub fn zeta_asymptotic(coeffs: &ThirdOrderCoeffs, n: usize) -> f64 {
    let s = 2.0 * PI * n as f64 / 3f64.sqrt();
    s.powi(3) - 2.0 * s * coeffs.p0() + s * tilde(&coeffs.p, n) + coeffs.q0() - tilde(&coeffs.q, n)
}

/// `(2πn/√3)³ − 4πnp₀/√3`.
pub fn ram_asymptotic(coeffs: &ThirdOrderCoeffs, n: usize) -> f64 {
    let s = 2.0 * PI * n as f64 / 3f64.sqrt();
    s.powi(3) - 2.0 * s * coeffs.p0()
}

fn diff_step(zeta: C, cfg: &BoussinesqConfig) -> f64 {
    cfg.diff_step * (1.0 + zeta.norm())
}

/// A scalar function of ζ with its derivative by central differences.
fn with_derivative<F>(f: F, zeta: C, cfg: &BoussinesqConfig) -> Result<(C, C)>
where
    F: Fn(C) -> Result<C> + Sync,
{
    let h = diff_step(zeta, cfg);
    let (v, (vp, vm)) = rayon::join(|| f(zeta), || rayon::join(|| f(zeta + h), || f(zeta - h)));
    Ok((v?, (vp? - vm?) / (2.0 * h)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThirdOrderProblem {
    Ramification,
    ThreePoint,
}

impl ThirdOrderProblem {
    fn value(self, coeffs: &ThirdOrderCoeffs, zeta: C, cfg: &BoussinesqConfig) -> Result<C> {
        let m = integrate_third_order(coeffs, zeta, &cfg.integ)?;
        Ok(match self {
            ThirdOrderProblem::Ramification => scaled_discriminant(&m),
            ThirdOrderProblem::ThreePoint => three_point_det(&m),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            ThirdOrderProblem::Ramification => "ramification",
            ThirdOrderProblem::ThreePoint => "three_point",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThirdOrderZero {
    pub zeta: C,
    pub multiplicity: u32,
    pub problem: ThirdOrderProblem,
    /// Window `n` of `(α_n^-, α_n^+)`, for real zeros.
    pub window: Option<i64>,
    pub residual: f64,
}

fn real_zeros(
    coeffs: &ThirdOrderCoeffs,
    problem: ThirdOrderProblem,
    a: f64,
    b: f64,
    cfg: &BoussinesqConfig,
) -> Result<Vec<ThirdOrderZero>> {
    if !(b > a) {
        return Err(Error::InvalidArgument("interval must have b > a".into()));
    }
    let g = |x: f64| -> Result<(f64, f64)> {
        let (v, dv) = with_derivative(|z| problem.value(coeffs, z, cfg), C::new(x, 0.0), cfg)?;
        Ok((v.re, dv.re))
    };
    let xs = cfg.scan.sampling.grid(a, b);
    let vals: Result<Vec<(f64, f64)>> = xs.par_iter().map(|&x| g(x)).collect();
    let zeros = scan_samples(&g, &xs, &vals?, &cfg.scan)?;
    Ok(zeros
        .into_iter()
        .filter(|z| z.lam.re > a && z.lam.re < b)
        .map(|z| ThirdOrderZero {
            zeta: z.lam,
            multiplicity: z.multiplicity,
            problem,
            window: (z.lam.re > 0.0).then(|| window_index(z.lam.re)),
            residual: z.residual,
        })
        .collect())
}

fn rect_zeros(
    coeffs: &ThirdOrderCoeffs,
    problem: ThirdOrderProblem,
    rect: &Rect,
    target_radius: f64,
    cfg: &BoussinesqConfig,
) -> Result<Vec<ThirdOrderZero>> {
    let f = |z: C| with_derivative(|z| problem.value(coeffs, z, cfg), z, cfg);
    let boxes = isolate_zeros(&f, rect, target_radius, &cfg.count)?;
    let found: Result<Vec<LocatedZero>> = boxes
        .par_iter()
        .map(|(r, m)| refine_newton(&f, r.center, *m as u32))
        .collect();
    Ok(found?
        .into_iter()
        .map(|z| ThirdOrderZero {
            zeta: z.lam,
            multiplicity: z.multiplicity,
            problem,
            window: (z.lam.re > 0.0 && z.lam.im.abs() < 1e-7 * (1.0 + z.lam.re)).then(|| window_index(z.lam.re)),
            residual: z.residual,
        })
        .collect())
}

/// Real ramifications in `(a, b)`, as zeros of the rescaled discriminant.
pub fn ramifications(coeffs: &ThirdOrderCoeffs, a: f64, b: f64, cfg: &BoussinesqConfig) -> Result<Vec<ThirdOrderZero>> {
    real_zeros(coeffs, ThirdOrderProblem::Ramification, a, b, cfg)
}

/// All ramifications in a rectangle, by the argument principle.
pub fn ramifications_in_rect(
    coeffs: &ThirdOrderCoeffs,
    rect: &Rect,
    target_radius: f64,
    cfg: &BoussinesqConfig,
) -> Result<Vec<ThirdOrderZero>> {
    rect_zeros(coeffs, ThirdOrderProblem::Ramification, rect, target_radius, cfg)
}

/// Real eigenvalues of `y(0) = y(1) = y(2) = 0` in `(a, b)`.
pub fn three_point_eigenvalues(coeffs: &ThirdOrderCoeffs, a: f64, b: f64, cfg: &BoussinesqConfig) -> Result<Vec<ThirdOrderZero>> {
    real_zeros(coeffs, ThirdOrderProblem::ThreePoint, a, b, cfg)
}

pub fn three_point_in_rect(
    coeffs: &ThirdOrderCoeffs,
    rect: &Rect,
    target_radius: f64,
    cfg: &BoussinesqConfig,
) -> Result<Vec<ThirdOrderZero>> {
    rect_zeros(coeffs, ThirdOrderProblem::ThreePoint, rect, target_radius, cfg)
}

/// `ψ₃, ψ₃′, ψ₃″` on a mesh, with `ψ₃(0) = 1`, `ψ₃(x + 1) = κ₃ψ₃(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Psi3 {
    pub zeta: C,
    pub kappa3: C,
    pub x: Vec<f64>,
    pub psi: Vec<C>,
    pub dpsi: Vec<C>,
    pub ddpsi: Vec<C>,
}

fn cross(u: [C; 3], v: [C; 3]) -> [C; 3] {
    [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ]
}

/// Initial data `(1, ψ₃′(0), ψ₃″(0))` of the dominant Floquet solution.
fn psi3_data(m: &Monodromy3, cfg: &BoussinesqConfig) -> Result<(C, [C; 3])> {
    let ms = multipliers(m);
    let [_, k2, k3] = ms.kappa;
    let gap = (k3.norm() - k2.norm()) / k3.norm();
    if !(gap >= cfg.dominance) {
        return Err(Error::NearRamification { gap });
    }
    // data at 1 is Mᵀ·data at 0; the eigenvector is orthogonal to the rows
    // of (Mᵀ − κ₃)
    let rows: Vec<[C; 3]> = (0..3)
        .map(|i| {
            let mut r = [m.m1[0][i], m.m1[1][i], m.m1[2][i]];
            r[i] -= k3;
            r
        })
        .collect();
    let cands = [cross(rows[0], rows[1]), cross(rows[0], rows[2]), cross(rows[1], rows[2])];
    let best = cands
        .iter()
        .max_by(|u, v| {
            let nu: f64 = u.iter().map(|c| c.norm_sqr()).sum();
            let nv: f64 = v.iter().map(|c| c.norm_sqr()).sum();
            nu.total_cmp(&nv)
        })
        .copied()
        .unwrap_or([ZERO; 3]);
    let size: f64 = best.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if !(best[0].norm() > 1e-12 * size) {
        return Err(Error::SpectralPoint(format!("psi_3 has a pole at zeta = {}", m.zeta)));
    }
    Ok((k3, [ONE, best[1] / best[0], best[2] / best[0]]))
}

pub fn floquet_psi3(coeffs: &ThirdOrderCoeffs, zeta: C, mesh: &[f64], cfg: &BoussinesqConfig) -> Result<Psi3> {
    if mesh.iter().any(|x| !(0.0..=1.0).contains(x)) || mesh.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("psi_3 mesh must be ascending within [0, 1]".into()));
    }
    let m = integrate_third_order(coeffs, zeta, &cfg.integ)?;
    let (kappa3, data) = psi3_data(&m, cfg)?;
    let split = mesh.iter().take_while(|&&x| x <= 0.0).count();
    let mut rows = vec![data.to_vec(); split];
    if split < mesh.len() {
        rows.extend(dopri5(rhs(coeffs, zeta, 1.0), 0.0, &data, &mesh[split..], cfg.integ.tolerances())?);
    }
    Ok(Psi3 {
        zeta,
        kappa3,
        x: mesh.to_vec(),
        psi: rows.iter().map(|r| r[0]).collect(),
        dpsi: rows.iter().map(|r| r[1]).collect(),
        ddpsi: rows.iter().map(|r| r[2]).collect(),
    })
}

/// `λ = (3/4)ζ^{2/3}`.
pub fn lambda_of(zeta: C) -> C {
    0.75 * growth_root(zeta).powi(2)
}

/// `V = 𝒱 + λ` on the Chebyshev nodes, with
/// `𝒱 = −2p − (3/4)(2ψ₃″/ψ₃ − (ψ₃′/ψ₃)²)`.
fn reduced_samples(coeffs: &ThirdOrderCoeffs, zeta: C, nodes: &[f64], cfg: &BoussinesqConfig) -> Result<Vec<C>> {
    let psi = floquet_psi3(coeffs, zeta, nodes, cfg)?;
    let lam = lambda_of(zeta);
    psi.x
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            if psi.psi[i].norm() == 0.0 {
                return Err(Error::SpectralPoint(format!("psi_3 vanishes at x = {x}")));
            }
            let l = psi.dpsi[i] / psi.psi[i];
            let r = psi.ddpsi[i] / psi.psi[i];
            Ok(-2.0 * coeffs.p.eval(x) - 0.75 * (2.0 * r - l * l) + lam)
        })
        .collect()
}

/// The Hill potential `V(x, λ)` of the reduced equation near
/// `λ₀ = (3/4)ζ^{2/3}`, tabulated with its λ-derivative. The derivative is
/// a central difference in ζ, the one place the pipeline differentiates
/// numerically.
pub fn reduce_to_hill(coeffs: &ThirdOrderCoeffs, zeta: C, cfg: &BoussinesqConfig) -> Result<(PotentialSpec<f64>, C)> {
    let nodes = Tabulated::<f64>::chebyshev_nodes(cfg.table_nodes.max(2));
    let h = 1e-3 * zeta.norm().max(1.0);
    let real = zeta.im == 0.0;
    let zp = zeta + h;
    let zm = zeta - h;
    let (v, (vp, vm)) = rayon::join(
        || reduced_samples(coeffs, zeta, &nodes, cfg),
        || {
            rayon::join(
                || reduced_samples(coeffs, zp, &nodes, cfg),
                || reduced_samples(coeffs, zm, &nodes, cfg),
            )
        },
    );
    let (v, vp, vm) = (v?, vp?, vm?);
    let dl = lambda_of(zp) - lambda_of(zm);
    let lam0 = lambda_of(zeta);
    let strip = |c: C| if real { C::new(c.re, 0.0) } else { c };
    let dv: Vec<C> = vp.iter().zip(&vm).map(|(a, b)| strip((a - b) / dl)).collect();
    let v: Vec<C> = v.into_iter().map(strip).collect();
    let tab = Tabulated::new(strip(lam0), nodes, v, dv)?;
    Ok((PotentialSpec::Tabulated(tab), lam0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> BoussinesqConfig {
        BoussinesqConfig::default()
    }

    fn small() -> ThirdOrderCoeffs {
        ThirdOrderCoeffs {
            p: FourierProfile::cosine(1, 0.1),
            q: FourierProfile::sine(1, 0.05),
        }
    }

    #[test]
    fn free_monodromy_at_zero() {
        let m = integrate_third_order(&ThirdOrderCoeffs::zero(), ZERO, &cfg().integ).unwrap();
        // rows: 1, x, x²/2 and their derivatives at x = 1
        let want = [[1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.5, 1.0, 1.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((m.m1[i][j] - want[i][j]).norm() < 1e-12, "{:?}", m.m1);
            }
        }
    }

    #[test]
    fn free_multipliers() {
        for zeta in [C::new(30.0, 0.0), C::new(-5.0, 12.0), C::new(800.0, 0.0)] {
            let m = integrate_third_order(&ThirdOrderCoeffs::zero(), zeta, &cfg().integ).unwrap();
            let ms = multipliers(&m);
            let w = zeta.powf(1.0 / 3.0);
            let mut want: Vec<C> = (0..3).map(|j| (w * C::from_polar(1.0, 2.0 * PI * j as f64 / 3.0)).exp()).collect();
            want.sort_by(|p, q| p.norm().total_cmp(&q.norm()));
            for k in &ms.kappa {
                let d = want.iter().map(|w| (w - k).norm() / w.norm()).fold(f64::INFINITY, f64::min);
                assert!(d < 1e-8, "{zeta}: {:?} vs {want:?}", ms.kappa);
            }
            assert!(ms.product_defect() < 1e-9);
            assert!(m.det_defect() < 1e-9);
            assert!(m.periodicity_defect() < 1e-8);
        }
    }

    #[test]
    fn discriminant_of_triple_root() {
        let ms = MultiplierSet {
            kappa: [ONE; 3],
            a: C::new(3.0, 0.0),
            b: C::new(3.0, 0.0),
        };
        assert_eq!(cubic_discriminant(&ms), ZERO);
    }

    #[test]
    fn scaled_discriminant_matches_direct() {
        let m = integrate_third_order(&small(), C::new(20.0, 3.0), &cfg().integ).unwrap();
        let ms = multipliers(&m);
        let [k1, k2, k3] = ms.kappa;
        let direct = ((k1 - k2) * (k1 - k3) * (k2 - k3)).powi(2);
        let w = C::new(20.0, 3.0).powf(1.0 / 3.0);
        let scaled = scaled_discriminant(&m) * (3.0 * w).exp();
        assert!((direct - scaled).norm() < 1e-8 * direct.norm());
        assert!((cubic_discriminant(&ms) - direct).norm() < 1e-8 * direct.norm());
    }

    #[test]
    fn backward_b_agrees_for_small_zeta() {
        let m = integrate_third_order(&small(), C::new(7.0, -2.0), &cfg().integ).unwrap();
        assert!((m.b() - m.b_forward()).norm() < 1e-9 * m.b().norm().max(1.0));
        assert!(m.inverse_defect() < 1e-9);
    }

    #[test]
    fn three_point_forms_share_zeros() {
        let z0 = unperturbed(1);
        let at = |x: f64| integrate_third_order(&ThirdOrderCoeffs::zero(), C::new(x, 0.0), &cfg().integ).unwrap();
        let (lo, hi) = (at(z0 - 0.5), at(z0 + 0.5));
        assert!(three_point_det(&lo).re * three_point_det(&hi).re < 0.0);
        assert!(three_point_det_forward(&lo).re * three_point_det_forward(&hi).re < 0.0);
    }

    #[test]
    fn free_ramifications_and_three_point() {
        let (lo, hi) = window(1);
        assert!((lo - 5.967_4).abs() < 1e-3 && (hi - 161.12).abs() < 1e-2);
        let r = ramifications(&ThirdOrderCoeffs::zero(), lo, hi, &cfg()).unwrap();
        assert_eq!(r.len(), 1, "{r:?}");
        assert_eq!(r[0].multiplicity, 2);
        assert!((r[0].zeta.re - unperturbed(1)).abs() < 1e-7 * unperturbed(1));
        let t = three_point_eigenvalues(&ThirdOrderCoeffs::zero(), lo, hi, &cfg()).unwrap();
        assert_eq!(t.len(), 1, "{t:?}");
        assert!((t[0].zeta.re - 47.737_285_834).abs() < 1e-7);
    }

    #[test]
    fn perturbed_window_structure() {
        let c = ThirdOrderCoeffs {
            p: FourierProfile::cosine(1, 0.1),
            q: FourierProfile::constant(0.0),
        };
        let (lo, hi) = window(1);
        let r = ramifications(&c, lo, hi, &cfg()).unwrap();
        let total: u32 = r.iter().map(|z| z.multiplicity).sum();
        assert_eq!(total, 2, "{r:?}");
        let t = three_point_eigenvalues(&c, lo, hi, &cfg()).unwrap();
        assert_eq!(t.len(), 1);
        let (rm, rp) = (r[0].zeta.re, r[r.len() - 1].zeta.re);
        assert!(t[0].zeta.re >= rm - 1e-6 && t[0].zeta.re <= rp + 1e-6);
    }

    #[test]
    fn asymptotic_formulas() {
        let z = ThirdOrderCoeffs::zero();
        assert!((zeta_asymptotic(&z, 2) - 381.898_286_676).abs() < 1e-8);
        assert!((tilde(&FourierProfile::cosine(1, 1.0), 1) - 0.5).abs() < 1e-15);
        let c = ThirdOrderCoeffs {
            p: FourierProfile::constant(0.1),
            q: FourierProfile::constant(0.0),
        };
        assert!((zeta_asymptotic(&c, 1) - (47.737_285_834 - 0.725_519_8)).abs() < 1e-6);
        assert!((ram_asymptotic(&c, 3) - (1288.906_717_53 - 2.176_559_4)).abs() < 1e-6);
    }

    #[test]
    fn free_psi3_and_reduction() {
        let zeta = C::new(200.0, 0.0);
        let mesh: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let psi = floquet_psi3(&ThirdOrderCoeffs::zero(), zeta, &mesh, &cfg()).unwrap();
        let w = 200f64.cbrt();
        for (x, p) in mesh.iter().zip(&psi.psi) {
            assert!((p - (w * x).exp()).norm() < 1e-8 * (w * x).exp());
        }
        assert!((psi.psi[10] - psi.kappa3).norm() < 1e-8 * psi.kappa3.norm());
        let (spec, lam) = reduce_to_hill(&ThirdOrderCoeffs::zero(), zeta, &cfg()).unwrap();
        assert!((lam.re - 0.75 * w * w).abs() < 1e-12);
        for x in [0.0, 0.37, 0.9] {
            assert!(spec.eval_v(x, lam).unwrap().norm() < 1e-8);
        }
    }

    #[test]
    fn refuses_near_ramification() {
        let r = floquet_psi3(&ThirdOrderCoeffs::zero(), C::new(0.0, 0.0), &[0.0, 1.0], &cfg());
        assert!(matches!(r, Err(Error::NearRamification { .. })));
    }
}
