//! Green kernels of the quasi-periodic and Dirichlet problems at a regular
//! point, and a residual check of `(H − λ)Rf = f`.
//!
//! Both kernels are written as
//!
//! ```text
//! R(x, s) = [s < x] (ϑ(x)φ(s) − φ(x)ϑ(s)) + c₁(s)ϑ(x) + c₂(s)φ(x)
//! ```
//!
//! where `cⱼ(s)` are combinations of `ϑ(s), φ(s)` fixed by the boundary
//! conditions. The quasi-periodic denominator is `2e^{ik}(cos k − Δ)`, so
//! the kernel stays regular where `φ(1, λ) = 0`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fundsol::{integrate_fundamental, integrate_on_mesh, IntegratorConfig, ZNorm};
use crate::potentials::PotentialSpec;
use crate::quadrature::gauss_legendre;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Boundary {
    Quasi { k: f64 },
    Dirichlet,
}

/// A Green kernel with `ϑ, φ` and their derivatives cached on the uniform
/// mesh `xᵢ = i/n`.
#[derive(Debug, Clone)]
pub struct GreenKernel {
    pub boundary: Boundary,
    pub lam: Complex64,
    /// `m_±` of the Floquet-type solutions `ϑ + m_±φ`, when `φ(1, λ) ≠ 0`.
    pub m_pm: Option<(Complex64, Complex64)>,
    /// `φ(1, λ) / (2(cos k − Δ))` for the quasi-periodic kernel.
    pub prefactor: Option<Complex64>,
    /// `cⱼ(s) = coef[j][0] ϑ(s) + coef[j][1] φ(s)`.
    coef: [[Complex64; 2]; 2],
    spec: PotentialSpec<f64>,
    cfg: IntegratorConfig<f64>,
    mesh: Vec<f64>,
    /// `[ϑ, ϑ′, φ, φ′]` at each mesh point.
    sol: Vec<[Complex64; 4]>,
}

fn uniform_mesh(n: usize) -> Vec<f64> {
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

fn solutions(spec: &PotentialSpec<f64>, lam: Complex64, mesh: &[f64], cfg: &IntegratorConfig<f64>) -> Result<Vec<[Complex64; 4]>> {
    integrate_on_mesh(spec, lam, mesh, cfg)
}

/// Green kernel of `−y″ + V(x, λ)y − λy = f` with `y(1) = e^{ik}y(0)`,
/// `y′(1) = e^{ik}y′(0)`.
pub fn green_quasi(
    spec: &PotentialSpec<f64>,
    k: f64,
    lam: Complex64,
    mesh: usize,
    cfg: &IntegratorConfig<f64>,
) -> Result<GreenKernel> {
    if mesh < 4 {
        return Err(Error::InvalidArgument("kernel mesh needs at least 4 intervals".into()));
    }
    let fd = integrate_fundamental(spec, lam, 1.0, cfg)?;
    let delta = fd.delta();
    let gap = Complex64::new(k.cos(), 0.0) - delta;
    if gap.norm() <= 1e-10 * delta.norm().max(1.0) {
        return Err(Error::SpectralPoint(format!(
            "lambda = {lam} (Delta = cos k for k = {k})"
        )));
    }
    let tau = Complex64::from_polar(1.0, k);
    let d = 2.0 * tau * gap;
    let (t1, dt1, p1, dp1) = (fd.theta1, fd.dtheta1, fd.phi1, fd.dphi1);
    // u_p(1) = ∫ g₁ f and u_p′(1) = ∫ g₂ f with gⱼ(s) = aⱼϑ(s) + bⱼφ(s)
    let g1 = [-p1, t1];
    let g2 = [-dp1, dt1];
    let coef = [
        [
            (-(dp1 - tau) * g1[0] + p1 * g2[0]) / d,
            (-(dp1 - tau) * g1[1] + p1 * g2[1]) / d,
        ],
        [
            (dt1 * g1[0] - (t1 - tau) * g2[0]) / d,
            (dt1 * g1[1] - (t1 - tau) * g2[1]) / d,
        ],
    ];
    let z1 = ZNorm::new(lam).z1;
    let m_pm = (p1.norm() * z1 > 1e-12).then(|| {
        let mid = (dp1 - t1) / 2.0;
        let i_sin = Complex64::new(0.0, k.sin());
        ((mid + i_sin) / p1, (mid - i_sin) / p1)
    });
    let grid = uniform_mesh(mesh);
    let sol = solutions(spec, lam, &grid, cfg)?;
    Ok(GreenKernel {
        boundary: Boundary::Quasi { k },
        lam,
        m_pm,
        prefactor: Some(p1 / (2.0 * gap)),
        coef,
        spec: spec.clone(),
        cfg: *cfg,
        mesh: grid,
        sol,
    })
}

/// Green kernel of `−y″ + V(x, λ)y − λy = f` with `y(0) = y(1) = 0`,
/// i.e. `−φ(min(x, s)) χ(max(x, s)) / φ(1, λ)` with
/// `χ = ϑ(1)φ − φ(1)ϑ`.
pub fn green_dirichlet(
    spec: &PotentialSpec<f64>,
    lam: Complex64,
    mesh: usize,
    cfg: &IntegratorConfig<f64>,
) -> Result<GreenKernel> {
    if mesh < 4 {
        return Err(Error::InvalidArgument("kernel mesh needs at least 4 intervals".into()));
    }
    let fd = integrate_fundamental(spec, lam, 1.0, cfg)?;
    let z1 = ZNorm::new(lam).z1;
    if fd.phi1.norm() * z1 <= 1e-10 * fd.delta().norm().max(1.0) {
        return Err(Error::SpectralPoint(format!("lambda = {lam} (phi(1) = 0)")));
    }
    let coef = [
        [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)],
        [Complex64::new(1.0, 0.0), -fd.theta1 / fd.phi1],
    ];
    let grid = uniform_mesh(mesh);
    let sol = solutions(spec, lam, &grid, cfg)?;
    Ok(GreenKernel {
        boundary: Boundary::Dirichlet,
        lam,
        m_pm: None,
        prefactor: None,
        coef,
        spec: spec.clone(),
        cfg: *cfg,
        mesh: grid,
        sol,
    })
}

impl GreenKernel {
    pub fn mesh(&self) -> &[f64] {
        &self.mesh
    }

    fn from_values(&self, x: &[Complex64; 4], s: &[Complex64; 4], below: bool) -> Complex64 {
        let (tx, px) = (x[0], x[2]);
        let (ts, ps) = (s[0], s[2]);
        let c1 = self.coef[0][0] * ts + self.coef[0][1] * ps;
        let c2 = self.coef[1][0] * ts + self.coef[1][1] * ps;
        let jump = if below { tx * ps - px * ts } else { Complex64::new(0.0, 0.0) };
        jump + c1 * tx + c2 * px
    }

    /// `R(x, s)` at arbitrary points of `[0, 1]²`.
    pub fn eval(&self, x: f64, s: f64) -> Result<Complex64> {
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&s) {
            return Err(Error::InvalidArgument("kernel arguments must lie in [0, 1]".into()));
        }
        let (lo, hi) = if x <= s { (x, s) } else { (s, x) };
        let vals = solutions(&self.spec, self.lam, &[lo, hi], &self.cfg)?;
        let (vx, vs) = if x <= s { (vals[0], vals[1]) } else { (vals[1], vals[0]) };
        Ok(self.from_values(&vx, &vs, s < x))
    }

    /// `R(xᵢ, xⱼ)` on the cached mesh.
    pub fn at_mesh(&self, i: usize, j: usize) -> Complex64 {
        self.from_values(&self.sol[i], &self.sol[j], j < i)
    }

    /// `max |R|` over a subgrid of about `n × n` mesh points.
    pub fn sup_norm(&self, n: usize) -> f64 {
        let stride = (self.mesh.len() / n.max(1)).max(1);
        let idx: Vec<usize> = (0..self.mesh.len()).step_by(stride).collect();
        idx.par_iter()
            .map(|&i| idx.iter().map(|&j| self.at_mesh(i, j).norm()).fold(0.0, f64::max))
            .reduce(|| 0.0, f64::max)
    }

    /// `u = Rf` and `u′` on the mesh, with `Gauss–Legendre(order)` on every
    /// mesh interval.
    pub fn apply<F>(&self, f: F, order: usize) -> Result<(Vec<Complex64>, Vec<Complex64>)>
    where
        F: Fn(f64) -> Complex64,
    {
        if order == 0 {
            return Err(Error::InvalidArgument("quadrature order must be positive".into()));
        }
        let (t, w) = gauss_legendre::<f64>(order);
        let n = self.mesh.len() - 1;
        let h = 1.0 / n as f64;
        let nodes: Vec<f64> = (0..n)
            .flat_map(|i| {
                let mid = (i as f64 + 0.5) * h;
                t.iter().map(move |t| mid + 0.5 * h * t)
            })
            .collect();
        let vals = solutions(&self.spec, self.lam, &nodes, &self.cfg)?;
        let zero = Complex64::new(0.0, 0.0);
        // running ∫₀^{xᵢ} φf and ∫₀^{xᵢ} ϑf, and the totals for c₁, c₂
        let mut a = vec![zero; n + 1];
        let mut b = vec![zero; n + 1];
        let (mut ct, mut cp) = (zero, zero);
        for i in 0..n {
            let (mut sa, mut sb) = (zero, zero);
            for q in 0..order {
                let s = nodes[i * order + q];
                let fv = f(s) * (0.5 * h * w[q]);
                let v = vals[i * order + q];
                sa += v[2] * fv;
                sb += v[0] * fv;
            }
            a[i + 1] = a[i] + sa;
            b[i + 1] = b[i] + sb;
            ct += sb;
            cp += sa;
        }
        let c1 = self.coef[0][0] * ct + self.coef[0][1] * cp;
        let c2 = self.coef[1][0] * ct + self.coef[1][1] * cp;
        let u = (0..=n)
            .map(|i| {
                let s = self.sol[i];
                s[0] * a[i] - s[2] * b[i] + c1 * s[0] + c2 * s[2]
            })
            .collect();
        let du = (0..=n)
            .map(|i| {
                let s = self.sol[i];
                s[1] * a[i] - s[3] * b[i] + c1 * s[1] + c2 * s[3]
            })
            .collect();
        Ok((u, du))
    }
}

/// `max |−u″ + (V − λ)u − f|` over the interior mesh, with `u = Rf` and
/// `u″` from 5-point differences, together with the boundary-condition
/// residuals.
pub fn resolvent_residual<F>(kernel: &GreenKernel, f: F, quad_order: usize) -> Result<f64>
where
    F: Fn(f64) -> Complex64,
{
    let (u, du) = kernel.apply(&f, quad_order)?;
    let n = u.len() - 1;
    let h = 1.0 / n as f64;
    let at = kernel.spec.at(kernel.lam)?;
    let interior = (2..n - 1)
        .map(|i| {
            let d2 = (-u[i - 2] + 16.0 * u[i - 1] - 30.0 * u[i] + 16.0 * u[i + 1] - u[i + 2]) / (12.0 * h * h);
            let x = kernel.mesh[i];
            (-d2 + (at.v(x) - kernel.lam) * u[i] - f(x)).norm()
        })
        .fold(0.0, f64::max);
    let boundary = match kernel.boundary {
        Boundary::Dirichlet => u[0].norm().max(u[n].norm()),
        Boundary::Quasi { k } => {
            let tau = Complex64::from_polar(1.0, k);
            (u[n] - tau * u[0]).norm().max((du[n] - tau * du[0]).norm())
        }
    };
    Ok(interior.max(boundary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cfg() -> IntegratorConfig<f64> {
        IntegratorConfig::default()
    }

    #[test]
    fn free_dirichlet_sine() {
        let ker = green_dirichlet(&PotentialSpec::Zero, Complex64::new(-1.0, 0.0), 400, &cfg()).unwrap();
        let (u, _) = ker.apply(|x| Complex64::new((PI * x).sin(), 0.0), 16).unwrap();
        for (x, u) in ker.mesh().iter().zip(&u) {
            let want = (PI * x).sin() / (PI * PI + 1.0);
            assert!((u - want).norm() < 1e-12);
        }
        let r = resolvent_residual(&ker, |x| Complex64::new((PI * x).sin(), 0.0), 16).unwrap();
        assert!(r < 1e-6, "{r}");
    }

    #[test]
    fn free_dirichlet_closed_form() {
        // −u″ + u = f: G(x, s) = sinh(min) sinh(1 − max) / sinh 1
        let ker = green_dirichlet(&PotentialSpec::Zero, Complex64::new(-1.0, 0.0), 20, &cfg()).unwrap();
        for (x, s) in [(0.2, 0.7), (0.9, 0.1), (0.5, 0.5)] {
            let (lo, hi): (f64, f64) = if x < s { (x, s) } else { (s, x) };
            let want = lo.sinh() * (1.0 - hi).sinh() / 1f64.sinh();
            assert!((ker.eval(x, s).unwrap() - want).norm() < 1e-10);
            assert!((ker.eval(x, s).unwrap() - ker.eval(s, x).unwrap()).norm() < 1e-12);
        }
        assert_eq!(ker.eval(0.0, 0.3).unwrap().norm(), 0.0);
        assert!(ker.eval(1.0, 0.3).unwrap().norm() < 1e-14);
    }

    #[test]
    fn free_quasi_constant_forcing() {
        // −u″ − u = 1 with u(1) = i u(0): the constant −1 only fits when
        // e^{ik} = 1, so compare with the shooting solution instead
        let k = PI / 2.0;
        let ker = green_quasi(&PotentialSpec::Zero, k, Complex64::new(1.0, 0.0), 400, &cfg()).unwrap();
        let r = resolvent_residual(&ker, |_| Complex64::new(1.0, 0.0), 16).unwrap();
        assert!(r < 1e-6, "{r}");
        // particular −1 plus A cos x + B sin x
        let tau = Complex64::new(0.0, 1.0);
        let (c, s) = (1f64.cos(), 1f64.sin());
        // (A c + B s − 1) = τ(A − 1), (−A s + B c) = τ B
        let m = [[c - tau, Complex64::new(s, 0.0)], [Complex64::new(-s, 0.0), c - tau]];
        let rhs = [1.0 - tau, Complex64::new(0.0, 0.0)];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let aa = (rhs[0] * m[1][1] - m[0][1] * rhs[1]) / det;
        let bb = (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det;
        let (u, _) = ker.apply(|_| Complex64::new(1.0, 0.0), 16).unwrap();
        for (x, u) in ker.mesh().iter().zip(&u) {
            let want = aa * x.cos() + bb * x.sin() - 1.0;
            assert!((u - want).norm() < 1e-10);
        }
    }

    #[test]
    fn refuses_spectral_points() {
        let z = PotentialSpec::Zero;
        assert!(matches!(
            green_quasi(&z, PI / 2.0, Complex64::new(PI * PI / 4.0, 0.0), 8, &cfg()),
            Err(Error::SpectralPoint(_))
        ));
        assert!(matches!(
            green_dirichlet(&z, Complex64::new(PI * PI, 0.0), 8, &cfg()),
            Err(Error::SpectralPoint(_))
        ));
    }

    #[test]
    fn regular_where_phi_vanishes() {
        // φ(1) = 0 at λ = π², while Δ = −1 ≠ cos k for k = π/2
        let ker = green_quasi(&PotentialSpec::Zero, PI / 2.0, Complex64::new(PI * PI, 0.0), 200, &cfg()).unwrap();
        assert!(ker.m_pm.is_none());
        let r = resolvent_residual(&ker, |x| Complex64::new(x * x, 0.0), 16).unwrap();
        assert!(r < 1e-6, "{r}");
    }

    #[test]
    fn conjugate_k_swaps_m() {
        let lam = Complex64::new(3.0, 0.5);
        let a = green_quasi(&PotentialSpec::Zero, 1.0, lam, 8, &cfg()).unwrap();
        let b = green_quasi(&PotentialSpec::Zero, 2.0 * PI - 1.0, lam, 8, &cfg()).unwrap();
        let (ap, am) = a.m_pm.unwrap();
        let (bp, bm) = b.m_pm.unwrap();
        assert!((ap - bm).norm() < 1e-12 && (am - bp).norm() < 1e-12);
    }

    #[test]
    fn pole_growth_tracks_delta() {
        let spec = PotentialSpec::LambdaIndependent(crate::potentials::FourierProfile::cosine(1, 2.0));
        let k = PI / 3.0;
        // simple quasi-periodic eigenvalue near (π/3)² located by bisection on Δ − cos k
        let delta = |l: f64| {
            integrate_fundamental(&spec, Complex64::new(l, 0.0), 1.0, &cfg()).unwrap().delta().re - k.cos()
        };
        let (mut lo, mut hi) = (0.0, 4.0);
        assert!(delta(lo) * delta(hi) < 0.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if delta(lo) * delta(mid) <= 0.0 { hi = mid } else { lo = mid }
        }
        let star = 0.5 * (lo + hi);
        let ratios: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|t| {
                let lam = Complex64::new(star, *t);
                let ker = green_quasi(&spec, k, lam, 64, &cfg()).unwrap();
                let d = integrate_fundamental(&spec, lam, 1.0, &cfg()).unwrap().delta();
                ker.sup_norm(33) * (d - k.cos()).norm()
            })
            .collect();
        let (mn, mx) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(*r), b.max(*r)));
        assert!(mx / mn < 2.0, "{ratios:?}");
    }
}
