//! The Lyapunov function `Δ(λ) = (ϑ(1,λ) + φ′(1,λ))/2`, its first two
//! high-energy corrections and the envelope estimates around them.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::fundsol::{envelope_from_norm, free_pair, integrate_fundamental, FundamentalData, IntegratorConfig, ZNorm};
use crate::potentials::PotentialSpec;
use crate::quadrature::PanelRule;
use crate::scalar::{lit, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscriminantSample<T> {
    pub lam: Complex<T>,
    pub delta: Complex<T>,
    pub ddelta: Complex<T>,
    pub theta1: Complex<T>,
    pub dtheta1: Complex<T>,
    pub phi1: Complex<T>,
    pub dphi1: Complex<T>,
}

impl<T: Real> DiscriminantSample<T> {
    pub fn from_fundamental(fd: &FundamentalData<T>) -> Self {
        DiscriminantSample {
            lam: fd.lam,
            delta: fd.delta(),
            ddelta: fd.ddelta().unwrap_or_else(|| Complex::new(T::nan(), T::nan())),
            theta1: fd.theta1,
            dtheta1: fd.dtheta1,
            phi1: fd.phi1,
            dphi1: fd.dphi1,
        }
    }

    /// `|Δ² − 1 − ((ϑ − φ′)/2)² − ϑ′φ|`.
    pub fn identity_residual(&self) -> T {
        let h = (self.theta1 - self.dphi1) / lit::<T>(2.0);
        (self.delta * self.delta - T::one() - h * h - self.dtheta1 * self.phi1).norm()
    }
}

pub fn discriminant<T: Real>(
    spec: &PotentialSpec<T>,
    lam: Complex<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<DiscriminantSample<T>> {
    let fd = integrate_fundamental(spec, lam, T::one(), cfg)?;
    Ok(DiscriminantSample::from_fundamental(&fd))
}

/// `Δ₁(λ) = (sin z / 2z)·V̂₀(λ)`.
pub fn delta1<T: Real>(spec: &PotentialSpec<T>, lam: Complex<T>) -> Result<Complex<T>> {
    let (_, s) = free_pair(lam, T::one());
    Ok(s * spec.mean(lam)? / lit::<T>(2.0))
}

/// `Δ₂(λ) = (1/4z²)[cos z (I_c − V̂₀²/2) + sin z · I_s]` with
/// `I_c, I_s = ∫₀¹ ds ∫₀ˢ {cos, sin} 2z(s − t) V(s)V(t) dt`.
///
/// The triangle integrals are reduced to single cumulative integrals with
/// the addition formulas for `cos 2z(s − t)` and `sin 2z(s − t)`.
pub fn delta2<T: Real>(
    spec: &PotentialSpec<T>,
    lam: Complex<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<Complex<T>> {
    if lam.norm() < lit(1e-8) {
        return Err(Error::InvalidArgument(
            "second correction is evaluated away from lambda = 0".into(),
        ));
    }
    let at = spec.at(lam)?;
    let zn = ZNorm::new(lam);
    let z = zn.z;
    let per_unit = (z.norm() * lit(16.0) / (T::PI() + T::PI())).ceil();
    let panels = per_unit.to_usize().unwrap_or(8).max(8);
    let order = cfg.quadrature_order.clamp(8, 24);
    let rule = PanelRule::new(T::zero(), T::one(), panels, order);
    let xs = rule.nodes();
    let two_z = z + z;
    let vs: Vec<Complex<T>> = xs.iter().map(|&x| at.v(x)).collect();
    let cs: Vec<Complex<T>> = xs.iter().map(|&x| (two_z * x).cos()).collect();
    let ss: Vec<Complex<T>> = xs.iter().map(|&x| (two_z * x).sin()).collect();
    let fc: Vec<Complex<T>> = (0..xs.len()).map(|i| cs[i] * vs[i]).collect();
    let fs: Vec<Complex<T>> = (0..xs.len()).map(|i| ss[i] * vs[i]).collect();
    let cum_c = rule.cumulative_at_nodes(&fc);
    let cum_s = rule.cumulative_at_nodes(&fs);
    let gc: Vec<Complex<T>> = (0..xs.len())
        .map(|i| vs[i] * (cs[i] * cum_c[i] + ss[i] * cum_s[i]))
        .collect();
    let gs: Vec<Complex<T>> = (0..xs.len())
        .map(|i| vs[i] * (ss[i] * cum_c[i] - cs[i] * cum_s[i]))
        .collect();
    let i_c = rule.integrate(&gc);
    let i_s = rule.integrate(&gs);
    let mean = spec.mean(lam)?;
    let bracket = z.cos() * (i_c - mean * mean / lit::<T>(2.0)) + z.sin() * i_s;
    Ok(bracket / (lam * lit::<T>(4.0)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeCheck<T> {
    pub residual: T,
    pub bound: T,
    /// Accuracy of the integrated `Δ` itself, added to `bound` for `ok`.
    pub noise: T,
    pub ok: bool,
}

/// Compares `Δ − cos z [− Δ₁ [− Δ₂]]` against `e_order(λ)`.
pub fn envelope_check<T: Real>(
    spec: &PotentialSpec<T>,
    lam: Complex<T>,
    order: u32,
    cfg: &IntegratorConfig<T>,
) -> Result<EnvelopeCheck<T>> {
    if !(1..=3).contains(&order) {
        return Err(Error::InvalidArgument("envelope order must be 1, 2 or 3".into()));
    }
    let sample = discriminant(spec, lam, cfg)?;
    let (c, _) = free_pair(lam, T::one());
    let mut r = sample.delta - c;
    if order > 1 {
        r = r - delta1(spec, lam)?;
    }
    if order > 2 {
        r = r - delta2(spec, lam, cfg)?;
    }
    let norm = spec.norm_with(lam, cfg.quadrature_order)?;
    let bound = envelope_from_norm(norm, lam, order);
    let noise = cfg.rel_tol * lit(10.0) * sample.delta.norm().max(T::one());
    let residual = r.norm();
    Ok(EnvelopeCheck {
        residual,
        bound,
        noise,
        ok: residual <= bound + noise,
    })
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
    fn free_discriminant() {
        let cfg = IntegratorConfig::default();
        let s = discriminant(&PotentialSpec::Zero, c(PI * PI / 4.0, 0.0), &cfg).unwrap();
        assert!(s.delta.norm() < 1e-10);
        let s = discriminant(&PotentialSpec::Constant(1.0), c(1.0 + PI * PI, 0.0), &cfg).unwrap();
        assert!((s.delta + 1.0).norm() < 1e-10);
    }

    #[test]
    fn ddelta_matches_central_difference() {
        let cfg = IntegratorConfig::default();
        let spec = PotentialSpec::RationalDecay {
            q: FourierProfile::cosine(1, 0.5),
            shift: 1.0,
        };
        let lam = c(23.0, 0.7);
        let h = 1e-4;
        let d = |l| discriminant(&spec, l, &cfg).unwrap().delta;
        let fd = (d(lam + h) - d(lam - h)) / (2.0 * h);
        let s = discriminant(&spec, lam, &cfg).unwrap();
        assert!((fd - s.ddelta).norm() < 1e-6 * s.ddelta.norm().max(1.0));
    }

    #[test]
    fn first_correction_examples() {
        let k = PotentialSpec::Constant(1.0);
        assert!(delta1(&k, c(PI * PI, 0.0)).unwrap().norm() < 1e-15);
        assert!((delta1(&k, c(PI * PI / 4.0, 0.0)).unwrap() - c(1.0 / PI, 0.0)).norm() < 1e-15);
        let m = PotentialSpec::LambdaIndependent(FourierProfile::cosine(1, 2.0));
        assert_eq!(delta1(&m, c(17.0, 0.0)).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn second_correction_of_constant_potential() {
        // cos √(λ−c) = cos z + c sin z/(2z) − c² cos z/(8z²) + c² sin z/(8z³) + …
        let cfg = IntegratorConfig::default();
        let cc = 0.7;
        for lam in [c(40.0, 0.0), c(150.0, 3.0)] {
            let z = lam.sqrt();
            let expect = -z.cos() * cc * cc / (8.0 * lam) + z.sin() * cc * cc / (8.0 * lam * z);
            let got = delta2(&PotentialSpec::Constant(cc), lam, &cfg).unwrap();
            assert!((got - expect).norm() < 1e-12, "{got} vs {expect}");
        }
        assert_eq!(delta2(&PotentialSpec::Zero, c(9.0, 0.0), &cfg).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn envelope_of_zero_potential_is_exact() {
        let cfg = IntegratorConfig::default();
        for order in 1..=3 {
            let e = envelope_check(&PotentialSpec::Zero, c(77.0, 1.0), order, &cfg).unwrap();
            assert!(e.ok && e.bound == 0.0 && e.residual < 1e-9);
        }
    }
}
