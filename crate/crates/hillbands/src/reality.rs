//! Certificates that spectra are real: the `η`-function, the sup-functional
//! `ξ(Ω) = sup |Im V|`, the derivative condition `sup |∂Q/∂ν| < 1`, and the
//! strip, half-strip and half-plane thresholds built on them.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::{DomainSpec, PotentialSpec};

/// `2 − √3`, the constant of the half-plane theorem.
pub const TWO_MINUS_SQRT3: f64 = 0.267_949_192_431_122_7;

/// `η(x, λ) = Im V(x, λ) − Im λ`.
pub fn eta(spec: &PotentialSpec<f64>, x: f64, lam: Complex64) -> Result<f64> {
    Ok(spec.eval_v(x, lam)?.im - lam.im)
}

/// Grid resolution for the sampled part of the sups.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    pub x_points: usize,
    pub lam_points: usize,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions {
            x_points: 64,
            lam_points: 32,
        }
    }
}

/// Bounded window `[a, b] × [−h, h]` used for grid sampling of `region`.
fn sample_window(region: &DomainSpec) -> Result<(f64, f64, f64)> {
    Ok(match *region {
        DomainSpec::Rect { a, b, r } => (a, b, r),
        DomainSpec::HalfStrip { a, r } => (a, a + 16.0 * r.max(1.0), r),
        DomainSpec::HalfPlane { a } => (a, a + 16.0, 16.0),
        DomainSpec::Sector { .. } => {
            return Err(Error::UnsupportedRegion("sector regions carry no sup bound".into()))
        }
    })
}

/// Max of `f(x, λ)` over an `x`-grid times a λ-grid on the window, refined
/// once by doubling; the larger of the two passes is returned.
fn grid_sup<F>(f: F, window: (f64, f64, f64), opts: &GridOptions) -> Result<f64>
where
    F: Fn(f64, Complex64) -> Result<f64> + Sync,
{
    let pass = |nx: usize, nl: usize| -> Result<f64> {
        let (a, b, h) = window;
        let cells: Vec<(usize, usize)> = (0..=nl).flat_map(|i| (0..=nl).map(move |j| (i, j))).collect();
        let vals: Result<Vec<f64>> = cells
            .par_iter()
            .map(|&(i, j)| {
                let lam = Complex64::new(
                    a + (b - a) * i as f64 / nl as f64,
                    -h + 2.0 * h * j as f64 / nl as f64,
                );
                let mut m: f64 = 0.0;
                for k in 0..=nx {
                    m = m.max(f(k as f64 / nx as f64, lam)?);
                }
                Ok(m)
            })
            .collect();
        Ok(vals?.into_iter().fold(0.0, f64::max))
    };
    let coarse = pass(opts.x_points, opts.lam_points)?;
    let fine = pass(2 * opts.x_points, 2 * opts.lam_points)?;
    Ok(coarse.max(fine))
}

/// Closed-form upper bound of `sup |Im V|` over `region`, when the family
/// has one.
fn xi_tail(spec: &PotentialSpec<f64>, region: &DomainSpec) -> Result<Option<f64>> {
    let unsupported = |why: &str| Err(Error::UnsupportedRegion(why.into()));
    let a = region.left();
    let h = region.half_height();
    Ok(match spec {
        PotentialSpec::Zero | PotentialSpec::Constant(_) | PotentialSpec::LambdaIndependent(_) => Some(0.0),
        PotentialSpec::Exp(terms) => {
            if !a.is_finite() {
                return unsupported("exponential family is unbounded without a left edge");
            }
            // |Q| ≤ Σ ‖qₙ‖ e^{−κₙμ} |sin κₙν|
            Some(
                terms
                    .iter()
                    .map(|t| t.q.sup_bound() * (-t.kappa * a).exp() * (t.kappa * h).min(1.0))
                    .sum(),
            )
        }
        PotentialSpec::Cos(terms) => {
            if !h.is_finite() {
                return unsupported("cosine family is unbounded off a horizontal strip");
            }
            Some(terms.iter().map(|t| t.q.sup_bound() * (t.kappa * h).sinh()).sum())
        }
        PotentialSpec::RationalDecay { q, shift } => {
            let dist = a + shift;
            if !(dist > 0.0) {
                return unsupported("region reaches the pole of the rational family");
            }
            Some(q.sup_bound() / dist)
        }
        PotentialSpec::Tabulated(_) => None,
    })
}

/// `ξ(Ω) = sup_{[0,1]×Ω} |Im V|` as an upper bound: the larger of a grid sup
/// and the family's closed-form bound. Regions without a closed-form bound
/// must be bounded rectangles.
pub fn xi_functional(spec: &PotentialSpec<f64>, region: &DomainSpec, opts: &GridOptions) -> Result<f64> {
    region.validate()?;
    let tail = xi_tail(spec, region)?;
    if tail == Some(0.0) {
        return Ok(0.0);
    }
    if tail.is_none() && !matches!(region, DomainSpec::Rect { .. }) {
        return Err(Error::UnsupportedRegion(
            "tabulated potentials only admit bounded rectangles".into(),
        ));
    }
    let sampled = grid_sup(|x, lam| Ok(spec.eval_v(x, lam)?.im.abs()), sample_window(region)?, opts)?;
    Ok(tail.map_or(sampled, |t| t.max(sampled)))
}

/// `sup |∂Q/∂ν| = sup |Re ∂V/∂λ|` over `[0,1] × (a, b)` on the real axis
/// (`b` may be infinite).
pub fn dq_dnu_sup(spec: &PotentialSpec<f64>, a: f64, b: f64, opts: &GridOptions) -> Result<f64> {
    if !(b > a) {
        return Err(Error::InvalidArgument("interval must have b > a".into()));
    }
    let tail = match spec {
        PotentialSpec::Zero | PotentialSpec::Constant(_) | PotentialSpec::LambdaIndependent(_) => {
            return Ok(0.0)
        }
        PotentialSpec::Exp(terms) => Some(
            terms
                .iter()
                .map(|t| t.kappa * t.q.sup_bound() * (-t.kappa * a).exp())
                .sum::<f64>(),
        ),
        PotentialSpec::Cos(terms) => Some(terms.iter().map(|t| t.kappa * t.q.sup_bound()).sum()),
        PotentialSpec::RationalDecay { q, shift } => {
            if !(a + shift > 0.0) {
                return Err(Error::UnsupportedRegion(
                    "interval reaches the pole of the rational family".into(),
                ));
            }
            Some(q.sup_bound() / (a + shift).powi(2))
        }
        PotentialSpec::Tabulated(_) => None,
    };
    if tail.is_none() && !b.is_finite() {
        return Err(Error::UnsupportedRegion(
            "tabulated potentials need a bounded interval".into(),
        ));
    }
    let hi = if b.is_finite() { b } else { a + 16.0 };
    // a degenerate window: the λ-grid runs along the real axis only
    let sampled = grid_sup(
        |x, lam| Ok(spec.eval_dv(x, Complex64::new(lam.re, 0.0))?.re.abs()),
        (a, hi, 0.0),
        opts,
    )?;
    Ok(tail.map_or(sampled, |t| t.max(sampled)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    DerivativeStrip,
    HalfPlane,
    Rect,
    HalfStrip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealityCertificate {
    pub kind: CertificateKind,
    /// Region in which all eigenvalues are certified real.
    pub region: DomainSpec,
    pub xi: f64,
    pub derivative_sup: f64,
    /// `a + ρ` for the half-plane and half-strip kinds, the `ξ` budget for
    /// the rectangle kind, `1` for the derivative kind.
    pub threshold: f64,
    pub certified: bool,
    pub margin: f64,
    /// False when a non-default constant replaces `2 − √3`.
    pub proven: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Derivative condition on `(a, b)`: `sup |∂Q/∂ν| < 1` gives real spectra in
/// a thin strip around the interval. The strip's height is not constructive;
/// the certificate records a zero-height strip region.
pub fn certify_derivative(spec: &PotentialSpec<f64>, a: f64, b: f64, opts: &GridOptions) -> Result<RealityCertificate> {
    let sup = dq_dnu_sup(spec, a, b, opts)?;
    let in_domain = spec.check_domain(Complex64::new(a.max(-1e300), 0.0)).is_ok()
        || matches!(spec, PotentialSpec::RationalDecay { shift, .. } if a >= -shift);
    let certified = sup < 1.0 && in_domain;
    let region = if b.is_finite() {
        DomainSpec::Rect { a, b, r: f64::MIN_POSITIVE }
    } else {
        DomainSpec::HalfStrip { a, r: f64::MIN_POSITIVE }
    };
    Ok(RealityCertificate {
        kind: CertificateKind::DerivativeStrip,
        region,
        xi: f64::NAN,
        derivative_sup: sup,
        threshold: 1.0,
        certified,
        margin: 1.0 - sup,
        proven: true,
        reason: (!in_domain).then(|| "interval leaves the analyticity domain".into()),
    })
}

/// Distance from the line `Re λ = a` to the edge of the family's domain
/// (infinite for entire families).
fn domain_clearance(spec: &PotentialSpec<f64>, a: f64) -> f64 {
    match spec {
        PotentialSpec::RationalDecay { shift, .. } => a + shift,
        _ => f64::INFINITY,
    }
}

/// Half-plane threshold: with `ρ = ξ(Π_a)/c` (`c = 2 − √3` by default), all
/// eigenvalues with `Re λ > a + ρ` are real provided the strip
/// `(a, ∞) × (−ρ, ρ)` lies in the domain.
pub fn certify_halfplane(spec: &PotentialSpec<f64>, a: f64, constant: f64, opts: &GridOptions) -> Result<RealityCertificate> {
    if !(constant > 0.0 && constant < 0.5) {
        return Err(Error::InvalidArgument("half-plane constant must lie in (0, 1/2)".into()));
    }
    let clearance = domain_clearance(spec, a);
    if !(clearance > 0.0) {
        return Ok(RealityCertificate {
            kind: CertificateKind::HalfPlane,
            region: DomainSpec::HalfPlane { a },
            xi: f64::NAN,
            derivative_sup: f64::NAN,
            threshold: f64::NAN,
            certified: false,
            margin: clearance,
            proven: constant <= TWO_MINUS_SQRT3,
            reason: Some("half-plane leaves the analyticity domain".into()),
        });
    }
    let xi = xi_functional(spec, &DomainSpec::HalfPlane { a }, opts)?;
    let rho = xi / constant;
    // off the axis the Poisson bound gives sup |∂Q/∂ν| ≤ 2ξ/ρ = 2c
    let margin = (1.0 - 2.0 * constant).min(clearance);
    Ok(RealityCertificate {
        kind: CertificateKind::HalfPlane,
        region: DomainSpec::HalfPlane { a: a + rho },
        xi,
        derivative_sup: 2.0 * constant,
        threshold: a + rho,
        certified: xi.is_finite(),
        margin,
        proven: constant <= TWO_MINUS_SQRT3,
        reason: None,
    })
}

/// Half-strip version for families bounded only on horizontal strips:
/// `ρ = ξ(Π_a(ν₀))/c`, certified when `ρ ≤ ν₀`.
pub fn certify_halfstrip(spec: &PotentialSpec<f64>, a: f64, nu0: f64, constant: f64, opts: &GridOptions) -> Result<RealityCertificate> {
    if !(nu0 > 0.0) {
        return Err(Error::InvalidArgument("strip half-height must be positive".into()));
    }
    if !(constant > 0.0 && constant < 0.5) {
        return Err(Error::InvalidArgument("half-plane constant must lie in (0, 1/2)".into()));
    }
    let clearance = domain_clearance(spec, a);
    let xi = if clearance > 0.0 {
        xi_functional(spec, &DomainSpec::HalfStrip { a, r: nu0 }, opts)?
    } else {
        f64::INFINITY
    };
    let rho = xi / constant;
    let certified = rho <= nu0 && clearance > 0.0;
    Ok(RealityCertificate {
        kind: CertificateKind::HalfStrip,
        region: DomainSpec::HalfStrip { a: a + rho, r: nu0 },
        xi,
        derivative_sup: 2.0 * constant,
        threshold: a + rho,
        certified,
        margin: (nu0 - rho).min(clearance),
        proven: constant <= TWO_MINUS_SQRT3,
        reason: (!certified).then(|| "strip (a, inf) x (-rho, rho) exceeds the half-strip".into()),
    })
}

/// Rectangle certificate: `ξ(Π_{a,b}(r)) ≤ r(1−φ)²/2` makes the spectra in
/// `Π_{a+r, b−r}(φr)` real. `b = ∞` gives the half-strip variant.
pub fn certify_strip(spec: &PotentialSpec<f64>, a: f64, b: f64, r: f64, phi: f64, opts: &GridOptions) -> Result<RealityCertificate> {
    if !(r > 0.0 && phi > 0.0 && phi < 1.0) {
        return Err(Error::InvalidArgument("need r > 0 and phi in (0, 1)".into()));
    }
    if !(b > a + 2.0 * r) {
        return Err(Error::InvalidArgument("need b > a + 2r".into()));
    }
    let clearance = domain_clearance(spec, a);
    let budget = r * (1.0 - phi).powi(2) / 2.0;
    let (kind, region, certified_region) = if b.is_finite() {
        (
            CertificateKind::Rect,
            DomainSpec::Rect { a, b, r },
            DomainSpec::Rect { a: a + r, b: b - r, r: phi * r },
        )
    } else {
        (
            CertificateKind::HalfStrip,
            DomainSpec::HalfStrip { a, r },
            DomainSpec::HalfStrip { a: a + r, r: phi * r },
        )
    };
    if !(clearance > 0.0) {
        return Err(Error::InvalidArgument(
            "rectangle leaves the analyticity domain".into(),
        ));
    }
    let xi = xi_functional(spec, &region, opts)?;
    Ok(RealityCertificate {
        kind,
        region: certified_region,
        xi,
        derivative_sup: poisson_derivative_bound(xi, r, phi * r)?,
        threshold: budget,
        certified: xi <= budget,
        margin: budget - xi,
        proven: true,
        reason: None,
    })
}

/// Poisson-kernel bound `2r·f_max/(r − |ν|)²` on `|∂f/∂ν|` at height `ν`
/// for `f` harmonic on a disc of radius `r`.
pub fn poisson_derivative_bound(f_max: f64, r: f64, nu: f64) -> Result<f64> {
    if !(nu.abs() < r) {
        return Err(Error::InvalidArgument("need |nu| < r".into()));
    }
    Ok(2.0 * r * f_max / (r - nu.abs()).powi(2))
}

/// A rectangle certificate covering the real window `(a, b)` with height
/// `φr`, shrinking `r` when the domain edge is close.
pub fn certify_window(spec: &PotentialSpec<f64>, a: f64, b: f64, opts: &GridOptions) -> Result<RealityCertificate> {
    let mut r: f64 = 1.0;
    let clearance = domain_clearance(spec, a);
    if clearance.is_finite() {
        r = r.min(clearance / 2.0);
    }
    if !(r > 0.0) {
        return Err(Error::UnsupportedRegion("window reaches the domain edge".into()));
    }
    certify_strip(spec, a - r, b + r, r, TWO_MINUS_SQRT3, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{ExpTerm, FourierProfile};

    fn exp_family(kappa: f64, amp: f64) -> PotentialSpec<f64> {
        PotentialSpec::Exp(vec![ExpTerm { kappa, q: FourierProfile::cosine(1, amp) }])
    }

    #[test]
    fn eta_examples() {
        let e = PotentialSpec::Exp(vec![ExpTerm { kappa: 1.0, q: FourierProfile::constant(1.0) }]);
        let v = eta(&e, 0.3, Complex64::new(0.0, 1.0)).unwrap();
        assert!((v + 1f64.sin() + 1.0).abs() < 1e-15);
        assert_eq!(eta(&PotentialSpec::Constant(2.0), 0.1, Complex64::new(1.0, 2.0)).unwrap(), -2.0);
        assert_eq!(eta(&e, 0.7, Complex64::new(3.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn xi_examples() {
        let g = GridOptions::default();
        assert_eq!(xi_functional(&PotentialSpec::Zero, &DomainSpec::HalfPlane { a: 0.0 }, &g).unwrap(), 0.0);
        let xi = xi_functional(&exp_family(1.0, 0.1), &DomainSpec::HalfPlane { a: 0.0 }, &g).unwrap();
        assert!((xi - 0.1).abs() < 1e-15);
        let c = PotentialSpec::Cos(vec![ExpTerm { kappa: 1.0, q: FourierProfile::cosine(1, 0.1) }]);
        let xi = xi_functional(&c, &DomainSpec::HalfStrip { a: 0.0, r: 1.0 }, &g).unwrap();
        assert!((xi - 0.1 * 1f64.sinh()).abs() < 1e-12);
        assert!(xi_functional(&c, &DomainSpec::HalfPlane { a: 0.0 }, &g).is_err());
    }

    #[test]
    fn derivative_sup_examples() {
        let g = GridOptions::default();
        let s = dq_dnu_sup(&exp_family(2.0, 0.3), 0.0, f64::INFINITY, &g).unwrap();
        assert!(s <= 0.6 + 1e-15);
        assert_eq!(dq_dnu_sup(&PotentialSpec::Constant(4.0), 0.0, 1.0, &g).unwrap(), 0.0);
    }

    #[test]
    fn halfplane_thresholds() {
        let g = GridOptions::default();
        let c = certify_halfplane(&exp_family(1.0, 0.1), 0.0, TWO_MINUS_SQRT3, &g).unwrap();
        assert!(c.certified);
        assert!((c.threshold - 0.373_205).abs() < 1e-6);
        let cf = PotentialSpec::Cos(vec![ExpTerm { kappa: 1.0, q: FourierProfile::cosine(1, 0.1) }]);
        let c = certify_halfstrip(&cf, 0.0, 1.0, TWO_MINUS_SQRT3, &g).unwrap();
        assert!(c.certified);
        assert!((c.threshold - 0.1 * 1f64.sinh() * (2.0 + 3f64.sqrt())).abs() < 1e-12);
        assert!((c.threshold - 0.4386).abs() < 1e-4);
        let z = certify_halfplane(&PotentialSpec::Zero, 3.0, TWO_MINUS_SQRT3, &g).unwrap();
        assert_eq!(z.threshold, 3.0);
    }

    #[test]
    fn strip_budget_and_poisson() {
        let phi = TWO_MINUS_SQRT3;
        assert!(((1.0 - phi).powi(2) - 2.0 * phi).abs() < 1e-15);
        let g = GridOptions::default();
        let c = certify_strip(&exp_family(1.0, 0.05), 0.0, 10.0, 1.0, 0.5, &g).unwrap();
        assert!(c.certified && c.xi <= 0.05 + 1e-15);
        assert!(certify_strip(&PotentialSpec::Zero, 0.0, 1.0, 1.0, 0.5, &g).is_err());
        let r = 2.0;
        let b = poisson_derivative_bound(r * (1.0 - phi).powi(2) / 2.0, r, phi * r).unwrap();
        assert!((b - 1.0).abs() < 1e-14);
        assert_eq!(poisson_derivative_bound(0.0, 1.0, 0.5).unwrap(), 0.0);
        assert!(poisson_derivative_bound(1.0, 1.0, 1.0).is_err());
    }
}
