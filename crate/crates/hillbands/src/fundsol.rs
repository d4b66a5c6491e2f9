//! Fundamental solutions `ϑ, φ` of `−y″ + V(x, λ)y = λy` with
//! `ϑ(0) = φ′(0) = 1`, `ϑ′(0) = φ(0) = 0`: adaptive integration with
//! λ-derivatives, and the Picard series with its a-priori bound.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::ode::{dopri5, Tolerances};
use crate::potentials::{PotentialAt, PotentialSpec};
use crate::quadrature::PanelRule;
use crate::scalar::{lit, re, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_steps: usize,
    pub quadrature_order: usize,
}

impl<T: Real> Default for IntegratorConfig<T> {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: lit(1e-10),
            abs_tol: lit(1e-12),
            max_steps: 200_000,
            quadrature_order: 64,
        }
    }
}

impl<T: Real> IntegratorConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > T::zero() && self.abs_tol > T::zero()) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if self.max_steps < 1000 {
            return Err(Error::InvalidArgument("max_steps must be at least 1000".into()));
        }
        if self.quadrature_order < 2 {
            return Err(Error::InvalidArgument("quadrature_order must be at least 2".into()));
        }
        Ok(())
    }

    /// Local tolerances handed to the step controller: a tenth of the
    /// configured ones, so the accumulated error over `[0, 1]` stays within
    /// them.
    pub(crate) fn tolerances(&self) -> Tolerances<T> {
        Tolerances {
            rel: self.rel_tol / lit(10.0),
            abs: self.abs_tol / lit(10.0),
            max_steps: self.max_steps,
        }
    }
}

/// `z = √λ` (principal branch) and `|z|₁ = max(1, |z|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZNorm<T> {
    pub z: Complex<T>,
    pub z1: T,
}

impl<T: Real> ZNorm<T> {
    pub fn new(lam: Complex<T>) -> Self {
        let z = lam.sqrt();
        ZNorm {
            z,
            z1: z.norm().max(T::one()),
        }
    }
}

/// `(cos zx, sin zx / z)` as entire functions of λ.
pub fn free_pair<T: Real>(lam: Complex<T>, x: T) -> (Complex<T>, Complex<T>) {
    let w = lam * (x * x);
    if w.norm() <= lit(0.5) {
        // even power series in z x; 24 terms is far past convergence here
        let mut c = re(T::one());
        let mut s = re(T::one());
        let mut tc = re(T::one());
        let mut ts = re(T::one());
        for n in 1..24 {
            let nf: T = lit(n as f64);
            tc = -tc * w / ((nf + nf - T::one()) * (nf + nf));
            ts = -ts * w / ((nf + nf) * (nf + nf + T::one()));
            c = c + tc;
            s = s + ts;
        }
        (c, s * x)
    } else {
        let z = lam.sqrt();
        ((z * x).cos(), (z * x).sin() / z)
    }
}

/// Values at `x_end` of `ϑ, ϑ′, φ, φ′`, optionally their λ-derivatives in
/// the same order, and (Picard path only) the a-priori error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalData<T> {
    pub lam: Complex<T>,
    pub theta1: Complex<T>,
    pub dtheta1: Complex<T>,
    pub phi1: Complex<T>,
    pub dphi1: Complex<T>,
    pub lam_derivs: Option<[Complex<T>; 4]>,
    pub err_bound: Option<T>,
    pub x_end: T,
}

impl<T: Real> FundamentalData<T> {
    /// `|ϑφ′ − ϑ′φ − 1|`.
    pub fn wronskian_defect(&self) -> T {
        (self.theta1 * self.dphi1 - self.dtheta1 * self.phi1 - T::one()).norm()
    }

    /// `Δ = (ϑ + φ′)/2`.
    pub fn delta(&self) -> Complex<T> {
        (self.theta1 + self.dphi1) / lit::<T>(2.0)
    }

    pub fn ddelta(&self) -> Option<Complex<T>> {
        self.lam_derivs.map(|d| (d[0] + d[3]) / lit::<T>(2.0))
    }
}

fn state_rhs<'a, T: Real>(
    at: &'a PotentialAt<'a, T>,
    with_derivs: bool,
) -> impl FnMut(T, &[Complex<T>], &mut [Complex<T>]) -> Result<()> + 'a {
    let lam = at.lambda();
    move |x, y, dy| {
        let (v, dv) = at.eval(x);
        let m = v - lam;
        dy[0] = y[1];
        dy[1] = m * y[0];
        dy[2] = y[3];
        dy[3] = m * y[2];
        if with_derivs {
            let f = dv - T::one();
            dy[4] = y[5];
            dy[5] = m * y[4] + f * y[0];
            dy[6] = y[7];
            dy[7] = m * y[6] + f * y[2];
        }
        Ok(())
    }
}

fn initial_state<T: Real>(with_derivs: bool) -> Vec<Complex<T>> {
    let z = re(T::zero());
    let o = re(T::one());
    let mut y = vec![o, z, z, o];
    if with_derivs {
        y.extend([z; 4]);
    }
    y
}

/// Integrates `(ϑ, ϑ′, φ, φ′)` jointly with their λ-derivatives to `x_end`.
pub fn integrate_fundamental<T: Real>(
    spec: &PotentialSpec<T>,
    lam: Complex<T>,
    x_end: T,
    cfg: &IntegratorConfig<T>,
) -> Result<FundamentalData<T>> {
    if !(x_end > T::zero()) {
        return Err(Error::InvalidArgument("x_end must be positive".into()));
    }
    let at = spec.at(lam)?;
    let ys = dopri5(
        state_rhs(&at, true),
        T::zero(),
        &initial_state(true),
        &[x_end],
        cfg.tolerances(),
    )?;
    let y = &ys[0];
    Ok(FundamentalData {
        lam,
        theta1: y[0],
        dtheta1: y[1],
        phi1: y[2],
        dphi1: y[3],
        lam_derivs: Some([y[4], y[5], y[6], y[7]]),
        err_bound: None,
        x_end,
    })
}

/// `[ϑ, ϑ′, φ, φ′]` at each point of the ascending `mesh` (points `≤ 0` get
/// the initial data).
pub fn integrate_on_mesh<T: Real>(
    spec: &PotentialSpec<T>,
    lam: Complex<T>,
    mesh: &[T],
    cfg: &IntegratorConfig<T>,
) -> Result<Vec<[Complex<T>; 4]>> {
    let at = spec.at(lam)?;
    let split = mesh.iter().take_while(|&&x| x <= T::zero()).count();
    let init = initial_state::<T>(false);
    let mut out: Vec<[Complex<T>; 4]> = vec![[init[0], init[1], init[2], init[3]]; split];
    if split < mesh.len() {
        let ys = dopri5(
            state_rhs(&at, false),
            T::zero(),
            &init,
            &mesh[split..],
            cfg.tolerances(),
        )?;
        out.extend(ys.into_iter().map(|y| [y[0], y[1], y[2], y[3]]));
    }
    Ok(out)
}

/// `e_j(λ) = (‖V‖/|z|₁)^j · e^{|Im z| + ‖V‖/|z|₁}`.
pub fn error_envelope<T: Real>(spec: &PotentialSpec<T>, lam: Complex<T>, j: u32) -> Result<T> {
    let norm = spec.norm(lam)?;
    Ok(envelope_from_norm(norm, lam, j))
}

pub(crate) fn envelope_from_norm<T: Real>(norm: T, lam: Complex<T>, j: u32) -> T {
    let zn = ZNorm::new(lam);
    let r = norm / zn.z1;
    let growth = (zn.z.im.abs() + r).exp();
    if j == 0 {
        growth
    } else {
        r.powi(j as i32) * growth
    }
}

/// Picard panel count on `[0, 1]`: eight per oscillation period `2π/|z|`,
/// never fewer than eight.
fn picard_panels<T: Real>(z: Complex<T>) -> usize {
    let per_unit = (z.norm() * lit(8.0) / (T::PI() + T::PI())).ceil();
    per_unit.to_usize().unwrap_or(8).max(8)
}

/// Partial sums `Σ_{n≤N} ϑₙ, φₙ` at `x = 1` and their derivatives. The
/// error bound is the common right-hand side `e` of the componentwise
/// estimate: `|Δϑ| ≤ e`, `|Δφ| ≤ e/|z|₁`, `|Δφ′| ≤ e`, `|Δϑ′| ≤ e·|z|₁`.
pub fn picard_fundamental<T: Real>(
    spec: &PotentialSpec<T>,
    lam: Complex<T>,
    n_terms: usize,
    cfg: &IntegratorConfig<T>,
) -> Result<FundamentalData<T>> {
    let zn = ZNorm::new(lam);
    let (c1, s1) = free_pair(lam, T::one());
    let [t, dt, p, dp] = picard_corrections(spec, lam, n_terms)?;
    let norm = spec.norm_with(lam, cfg.quadrature_order)?;
    let e = (norm / zn.z1).powi(n_terms as i32 + 1) * (zn.z.im.abs() + norm / zn.z1).exp();
    Ok(FundamentalData {
        lam,
        theta1: c1 + t,
        dtheta1: -lam * s1 + dt,
        phi1: s1 + p,
        dphi1: c1 + dp,
        lam_derivs: None,
        err_bound: Some(e),
        x_end: T::one(),
    })
}

/// Terms `1..=N` of the Picard series at `x = 1`, without the free
/// solutions, as `[ϑ, ϑ′, φ, φ′]`. Each keeps its accuracy relative to its
/// own size, which the full sums lose where `cos z` or `sin z` is small.
pub fn picard_corrections<T: Real>(spec: &PotentialSpec<T>, lam: Complex<T>, n_terms: usize) -> Result<[Complex<T>; 4]> {
    let at = spec.at(lam)?;
    let zn = ZNorm::new(lam);
    let rule = PanelRule::new(T::zero(), T::one(), picard_panels(zn.z), 16);
    let xs = rule.nodes();
    let pairs: Vec<(Complex<T>, Complex<T>)> = xs.iter().map(|&x| free_pair(lam, x)).collect();
    let vs: Vec<Complex<T>> = xs.iter().map(|&x| at.v(x)).collect();
    let (c1, s1) = free_pair(lam, T::one());
    let (dc1, ds1) = (-lam * s1, c1);

    let zero = re(T::zero());
    // [value at 1, derivative at 1] accumulated over n
    let mut sums = [[zero, zero], [zero, zero]];
    for (slot, start) in [(0usize, 0usize), (1, 1)] {
        let mut prev: Vec<Complex<T>> = pairs.iter().map(|p| if start == 0 { p.0 } else { p.1 }).collect();
        for _ in 0..n_terms {
            let fa: Vec<Complex<T>> = (0..xs.len()).map(|i| pairs[i].0 * vs[i] * prev[i]).collect();
            let fb: Vec<Complex<T>> = (0..xs.len()).map(|i| pairs[i].1 * vs[i] * prev[i]).collect();
            let ca = rule.cumulative_at_nodes(&fa);
            let cb = rule.cumulative_at_nodes(&fb);
            let a1 = rule.integrate(&fa);
            let b1 = rule.integrate(&fb);
            // φ₀(x−s) = φ₀(x)ϑ₀(s) − ϑ₀(x)φ₀(s)
            sums[slot][0] = sums[slot][0] + s1 * a1 - c1 * b1;
            sums[slot][1] = sums[slot][1] + ds1 * a1 - dc1 * b1;
            prev = (0..xs.len())
                .map(|i| pairs[i].1 * ca[i] - pairs[i].0 * cb[i])
                .collect();
        }
    }
    Ok([sums[0][0], sums[0][1], sums[1][0], sums[1][1]])
}

/// Smallest `N ≤ 12` whose a-priori bound is below `1e-8` (or 12).
pub fn default_picard_order<T: Real>(spec: &PotentialSpec<T>, lam: Complex<T>) -> Result<usize> {
    let norm = spec.norm(lam)?;
    let zn = ZNorm::new(lam);
    let r = norm / zn.z1;
    let g = (zn.z.im.abs() + r).exp();
    Ok((0..=12usize)
        .find(|&n| r.powi(n as i32 + 1) * g < lit(1e-8))
        .unwrap_or(12))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::FourierProfile;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn free_solutions_at_pi_squared() {
        let cfg = IntegratorConfig::default();
        let fd = integrate_fundamental(&PotentialSpec::Zero, c(PI * PI, 0.0), 1.0, &cfg).unwrap();
        assert!((fd.theta1 - c(-1.0, 0.0)).norm() < 1e-9);
        assert!(fd.phi1.norm() < 1e-9);
        assert!((fd.dphi1 - c(-1.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn free_solutions_at_zero_energy() {
        let cfg = IntegratorConfig::default();
        let fd = integrate_fundamental(&PotentialSpec::Zero, c(0.0, 0.0), 1.0, &cfg).unwrap();
        for (got, want) in [(fd.theta1, 1.0), (fd.phi1, 1.0), (fd.dtheta1, 0.0), (fd.dphi1, 1.0)] {
            assert!((got - c(want, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn constant_potential_cancels_energy() {
        let cfg = IntegratorConfig::default();
        let fd = integrate_fundamental(&PotentialSpec::Constant(2.0), c(2.0, 0.0), 1.0, &cfg).unwrap();
        assert!((fd.theta1 - c(1.0, 0.0)).norm() < 1e-12);
        assert!((fd.phi1 - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn free_pair_series_matches_closed_form() {
        for lam in [c(0.3, 0.1), c(-0.49, 0.0), c(0.0, 0.4)] {
            let (cs, ss) = free_pair(lam, 1.0);
            let z = lam.sqrt();
            assert!((cs - z.cos()).norm() < 1e-15);
            assert!((ss - z.sin() / z).norm() < 1e-15);
        }
    }

    #[test]
    fn picard_zeroth_term_is_free_pair() {
        let spec = PotentialSpec::LambdaIndependent(FourierProfile::cosine(1, 2.0));
        let lam = c(30.0, 2.0);
        let fd = picard_fundamental(&spec, lam, 0, &IntegratorConfig::default()).unwrap();
        let (c1, s1) = free_pair(lam, 1.0);
        assert_eq!(fd.theta1, c1);
        assert_eq!(fd.phi1, s1);
        let zn = ZNorm::new(lam);
        let norm = spec.norm(lam).unwrap();
        let e = norm * (zn.z.im.abs() + norm / zn.z1).exp() / zn.z1;
        assert!((fd.err_bound.unwrap() - e).abs() < 1e-12 * e);
    }

    #[test]
    fn envelope_examples() {
        let z: PotentialSpec<f64> = PotentialSpec::Zero;
        assert_eq!(error_envelope(&z, c(5.0, 3.0), 1).unwrap(), 0.0);
        let lam = c(5.0, 3.0);
        assert!((error_envelope(&z, lam, 0).unwrap() - lam.sqrt().im.exp()).abs() < 1e-15);
        let one = PotentialSpec::Constant(1.0);
        let e1 = error_envelope(&one, c(4.0 * PI * PI, 0.0), 1).unwrap();
        assert!((e1 - (1.0 / (2.0 * PI)).exp() / (2.0 * PI)).abs() < 1e-12);
        assert!((e1 - 0.18662).abs() < 1e-5);
        let e1 = error_envelope(&one, c(0.25, 0.0), 1).unwrap();
        assert!((e1 - 1f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn wronskian_defect_is_linear_in_perturbation() {
        let fd = FundamentalData {
            lam: c(0.0, 0.0),
            theta1: c(1.0, 0.0),
            dtheta1: c(0.3, 0.0),
            phi1: c(0.0, 0.0),
            dphi1: c(1.0 + 1e-6, 0.0),
            lam_derivs: None,
            err_bound: None,
            x_end: 1.0,
        };
        assert!((fd.wronskian_defect() - 1e-6).abs() < 1e-15);
    }

    #[test]
    fn runs_in_single_precision() {
        let spec: PotentialSpec<f32> = PotentialSpec::LambdaIndependent(FourierProfile::cosine(1, 0.5));
        let cfg = IntegratorConfig {
            rel_tol: 1e-5f32,
            abs_tol: 1e-6,
            max_steps: 10_000,
            quadrature_order: 16,
        };
        let fd = integrate_fundamental(&spec, Complex::new(20.0f32, 0.0), 1.0, &cfg).unwrap();
        assert!(fd.wronskian_defect() < 1e-3);
    }
}
