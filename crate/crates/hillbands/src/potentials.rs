//! Energy-dependent periodic potentials `V(x, λ)` and their λ-derivatives.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_legendre, PanelRule};
use crate::scalar::{lit, re, Real};

/// `q(x) = a0 + Σ aₘ cos 2πmx + Σ bₘ sin 2πmx`, `m ≥ 1`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(
    deny_unknown_fields,
    bound(deserialize = "T: Deserialize<'de> + Default")
)]
pub struct FourierProfile<T> {
    #[serde(default)]
    pub a0: T,
    #[serde(default)]
    pub cos: Vec<T>,
    #[serde(default)]
    pub sin: Vec<T>,
}

impl<T: Real> FourierProfile<T> {
    pub fn constant(a0: T) -> Self {
        FourierProfile {
            a0,
            cos: Vec::new(),
            sin: Vec::new(),
        }
    }

    /// `amplitude · cos 2πmx`.
    pub fn cosine(m: usize, amplitude: T) -> Self {
        assert!(m >= 1);
        let mut cos = vec![T::zero(); m];
        cos[m - 1] = amplitude;
        FourierProfile {
            a0: T::zero(),
            cos,
            sin: Vec::new(),
        }
    }

    /// `amplitude · sin 2πmx`.
    pub fn sine(m: usize, amplitude: T) -> Self {
        assert!(m >= 1);
        let mut sin = vec![T::zero(); m];
        sin[m - 1] = amplitude;
        FourierProfile {
            a0: T::zero(),
            cos: Vec::new(),
            sin,
        }
    }

    pub fn eval(&self, x: T) -> T {
        let x = x - x.floor();
        let two_pi = T::PI() + T::PI();
        let mut s = self.a0;
        for (m, a) in self.cos.iter().enumerate() {
            s = s + *a * (two_pi * lit(m as f64 + 1.0) * x).cos();
        }
        for (m, b) in self.sin.iter().enumerate() {
            s = s + *b * (two_pi * lit(m as f64 + 1.0) * x).sin();
        }
        s
    }

    pub fn deriv(&self, x: T) -> T {
        let x = x - x.floor();
        let two_pi = T::PI() + T::PI();
        let mut s = T::zero();
        for (m, a) in self.cos.iter().enumerate() {
            let w = two_pi * lit(m as f64 + 1.0);
            s = s - *a * w * (w * x).sin();
        }
        for (m, b) in self.sin.iter().enumerate() {
            let w = two_pi * lit(m as f64 + 1.0);
            s = s + *b * w * (w * x).cos();
        }
        s
    }

    /// `|a0| + Σ|aₘ| + Σ|bₘ|`, an upper bound for `sup |q|`.
    pub fn sup_bound(&self) -> T {
        self.cos
            .iter()
            .chain(&self.sin)
            .fold(self.a0.abs(), |s, c| s + c.abs())
    }

    pub fn is_zero(&self) -> bool {
        self.a0 == T::zero()
            && self.cos.iter().all(|c| *c == T::zero())
            && self.sin.iter().all(|c| *c == T::zero())
    }

    pub(crate) fn validate(&self, what: &str) -> Result<()> {
        let finite = self.a0.is_finite() && self.cos.iter().chain(&self.sin).all(|c| c.is_finite());
        if finite {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("{what}: non-finite Fourier coefficient")))
        }
    }
}

/// One term `q(x)·g(κλ)` of an exponential or cosine family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    deny_unknown_fields,
    bound(deserialize = "T: Deserialize<'de> + Default")
)]
pub struct ExpTerm<T> {
    pub kappa: T,
    pub q: FourierProfile<T>,
}

/// Samples of a potential on Chebyshev nodes of `[0, 1]`, linear in λ around
/// `lam0`: `V(x, λ) ≈ v(x) + (λ − lam0)·dv(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tabulated<T> {
    pub lam0: Complex<T>,
    pub nodes: Vec<T>,
    pub v: Vec<Complex<T>>,
    pub dv: Vec<Complex<T>>,
}

impl<T: Real> Tabulated<T> {
    /// `n` Chebyshev extreme points mapped to `[0, 1]`, ascending.
    pub fn chebyshev_nodes(n: usize) -> Vec<T> {
        assert!(n >= 2);
        (0..n)
            .map(|j| {
                let t = (T::PI() * lit(j as f64) / lit((n - 1) as f64)).cos();
                (T::one() - t) / lit(2.0)
            })
            .collect()
    }

    pub fn new(lam0: Complex<T>, nodes: Vec<T>, v: Vec<Complex<T>>, dv: Vec<Complex<T>>) -> Result<Self> {
        if nodes.len() < 2 || v.len() != nodes.len() || dv.len() != nodes.len() {
            return Err(Error::InvalidArgument(
                "tabulated potential needs matching node and sample lists of length >= 2".into(),
            ));
        }
        Ok(Tabulated { lam0, nodes, v, dv })
    }

    fn interp(&self, samples: &[Complex<T>], x: T) -> Complex<T> {
        let n = self.nodes.len();
        let mut num = Complex::new(T::zero(), T::zero());
        let mut den = T::zero();
        for j in 0..n {
            let d = x - self.nodes[j];
            if d == T::zero() {
                return samples[j];
            }
            let mut w: T = if j % 2 == 0 { T::one() } else { -T::one() };
            if j == 0 || j == n - 1 {
                w = w / lit(2.0);
            }
            let c = w / d;
            num = num + samples[j] * c;
            den = den + c;
        }
        num / den
    }
}

/// A family `V(x, λ)`, 1-periodic in `x` and analytic in λ.
#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec<T> {
    Zero,
    Constant(T),
    LambdaIndependent(FourierProfile<T>),
    /// `Σ qₙ(x) e^{−κₙλ}`.
    Exp(Vec<ExpTerm<T>>),
    /// `Σ qₙ(x) cos κₙλ`.
    Cos(Vec<ExpTerm<T>>),
    /// `q(x) / (shift + λ)`, analytic for `Re λ > −shift`.
    RationalDecay { q: FourierProfile<T>, shift: T },
    Tabulated(Tabulated<T>),
}

/// λ-dependent factors of a family, evaluated once per λ.
#[derive(Debug, Clone)]
pub struct PotentialAt<'a, T> {
    spec: &'a PotentialSpec<T>,
    lam: Complex<T>,
    // (g, g') per term
    factors: Vec<(Complex<T>, Complex<T>)>,
}

impl<'a, T: Real> PotentialAt<'a, T> {
    pub fn lambda(&self) -> Complex<T> {
        self.lam
    }

    /// `(V(x, λ), ∂V/∂λ(x, λ))`.
    pub fn eval(&self, x: T) -> (Complex<T>, Complex<T>) {
        let zero = Complex::new(T::zero(), T::zero());
        match self.spec {
            PotentialSpec::Zero => (zero, zero),
            PotentialSpec::Constant(c) => (re(*c), zero),
            PotentialSpec::LambdaIndependent(q) => (re(q.eval(x)), zero),
            PotentialSpec::Exp(terms) | PotentialSpec::Cos(terms) => {
                let mut v = zero;
                let mut dv = zero;
                for (t, (g, dg)) in terms.iter().zip(&self.factors) {
                    let qx = t.q.eval(x);
                    v = v + *g * qx;
                    dv = dv + *dg * qx;
                }
                (v, dv)
            }
            PotentialSpec::RationalDecay { q, .. } => {
                let (g, dg) = self.factors[0];
                let qx = q.eval(x);
                (g * qx, dg * qx)
            }
            PotentialSpec::Tabulated(tab) => {
                let x = x - x.floor();
                let dv = tab.interp(&tab.dv, x);
                (tab.interp(&tab.v, x) + dv * (self.lam - tab.lam0), dv)
            }
        }
    }

    pub fn v(&self, x: T) -> Complex<T> {
        self.eval(x).0
    }
}

impl<T: Real> PotentialSpec<T> {
    /// Checks the family invariants: finite data, `0 < κ₁ < … < κ_N`.
    pub fn validate(&self) -> Result<()> {
        match self {
            PotentialSpec::Zero => Ok(()),
            PotentialSpec::Constant(c) if c.is_finite() => Ok(()),
            PotentialSpec::Constant(_) => Err(Error::InvalidArgument("non-finite constant".into())),
            PotentialSpec::LambdaIndependent(q) => q.validate("q"),
            PotentialSpec::Exp(terms) | PotentialSpec::Cos(terms) => {
                if terms.is_empty() {
                    return Err(Error::InvalidArgument("family needs at least one term".into()));
                }
                let mut prev = T::zero();
                for (n, t) in terms.iter().enumerate() {
                    if !(t.kappa.is_finite() && t.kappa > prev) {
                        return Err(Error::InvalidArgument(format!(
                            "kappa must be positive and strictly increasing (term {})",
                            n + 1
                        )));
                    }
                    prev = t.kappa;
                    t.q.validate("q")?;
                }
                Ok(())
            }
            PotentialSpec::RationalDecay { q, shift } => {
                if !shift.is_finite() {
                    return Err(Error::InvalidArgument("non-finite shift".into()));
                }
                q.validate("q")
            }
            PotentialSpec::Tabulated(tab) => {
                let ok = tab.nodes.len() >= 2
                    && tab.v.len() == tab.nodes.len()
                    && tab.dv.len() == tab.nodes.len();
                if ok {
                    Ok(())
                } else {
                    Err(Error::InvalidArgument("malformed tabulated potential".into()))
                }
            }
        }
    }

    /// True when `V(x, conj λ) = conj V(x, λ)`. A table qualifies when its
    /// samples and expansion point are real.
    pub fn is_real_analytic(&self) -> bool {
        match self {
            PotentialSpec::Tabulated(t) => {
                t.lam0.im == T::zero() && t.v.iter().chain(&t.dv).all(|c| c.im == T::zero())
            }
            _ => true,
        }
    }

    pub fn is_lambda_independent(&self) -> bool {
        matches!(
            self,
            PotentialSpec::Zero | PotentialSpec::Constant(_) | PotentialSpec::LambdaIndependent(_)
        )
    }

    pub fn check_domain(&self, lam: Complex<T>) -> Result<()> {
        let finite = lam.re.is_finite() && lam.im.is_finite();
        let bad = |reason: &str| {
            Err(Error::domain(
                lam.re.to_f64().unwrap_or(f64::NAN),
                lam.im.to_f64().unwrap_or(f64::NAN),
                reason,
            ))
        };
        if !finite {
            return bad("non-finite spectral parameter");
        }
        if let PotentialSpec::RationalDecay { shift, .. } = self {
            if lam.re + *shift <= T::zero() {
                return bad("rational family requires Re lambda > -shift");
            }
        }
        Ok(())
    }

    /// Precomputes the λ-dependent factors.
    pub fn at(&self, lam: Complex<T>) -> Result<PotentialAt<'_, T>> {
        self.check_domain(lam)?;
        let factors = match self {
            PotentialSpec::Exp(terms) => terms
                .iter()
                .map(|t| {
                    let g = (-lam * t.kappa).exp();
                    (g, -g * t.kappa)
                })
                .collect(),
            PotentialSpec::Cos(terms) => terms
                .iter()
                .map(|t| {
                    let w = lam * t.kappa;
                    (w.cos(), -w.sin() * t.kappa)
                })
                .collect(),
            PotentialSpec::RationalDecay { shift, .. } => {
                let g = (lam + *shift).inv();
                vec![(g, -g * g)]
            }
            _ => Vec::new(),
        };
        Ok(PotentialAt {
            spec: self,
            lam,
            factors,
        })
    }

    pub fn eval_v(&self, x: T, lam: Complex<T>) -> Result<Complex<T>> {
        Ok(self.at(lam)?.eval(x).0)
    }

    pub fn eval_dv(&self, x: T, lam: Complex<T>) -> Result<Complex<T>> {
        Ok(self.at(lam)?.eval(x).1)
    }

    /// `∫₀¹ |V(x, λ)| dx` with four Gauss–Legendre panels of `order` points.
    pub fn norm_with(&self, lam: Complex<T>, order: usize) -> Result<T> {
        let at = self.at(lam)?;
        match self {
            PotentialSpec::Zero => return Ok(T::zero()),
            PotentialSpec::Constant(c) => return Ok(c.abs()),
            _ => {}
        }
        let rule = PanelRule::new(T::zero(), T::one(), 4, order);
        let vals: Vec<Complex<T>> = rule.nodes().iter().map(|&x| re(at.v(x).norm())).collect();
        Ok(rule.integrate(&vals).re)
    }

    /// `‖V(·, λ)‖ = ∫₀¹ |V| dx` at the default order 64.
    pub fn norm(&self, lam: Complex<T>) -> Result<T> {
        self.norm_with(lam, 64)
    }

    /// `V̂₀(λ) = ∫₀¹ V(s, λ) ds`, closed form for the Fourier families.
    pub fn mean(&self, lam: Complex<T>) -> Result<Complex<T>> {
        let at = self.at(lam)?;
        let zero = Complex::new(T::zero(), T::zero());
        Ok(match self {
            PotentialSpec::Zero => zero,
            PotentialSpec::Constant(c) => re(*c),
            PotentialSpec::LambdaIndependent(q) => re(q.a0),
            PotentialSpec::Exp(terms) | PotentialSpec::Cos(terms) => terms
                .iter()
                .zip(&at.factors)
                .fold(zero, |s, (t, (g, _))| s + *g * t.q.a0),
            PotentialSpec::RationalDecay { q, .. } => at.factors[0].0 * q.a0,
            PotentialSpec::Tabulated(_) => {
                let (x, w) = gauss_legendre::<T>(64);
                x.iter().zip(&w).fold(zero, |s, (x, w)| {
                    s + at.v((*x + T::one()) / lit(2.0)) * (*w / lit(2.0))
                })
            }
        })
    }
}

/// Regions of the λ-plane used by the certificates and searches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    /// `Re λ > a`.
    HalfPlane { a: f64 },
    /// `Re λ > a`, `|Im λ| < r`.
    HalfStrip { a: f64, r: f64 },
    /// `a < Re λ < b`, `|Im λ| < r`.
    Rect { a: f64, b: f64, r: f64 },
    /// `|λ| > radius`, `|arg λ| < angle`.
    Sector { radius: f64, angle: f64 },
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DomainSpec::HalfPlane { a } => a.is_finite(),
            DomainSpec::HalfStrip { a, r } => a.is_finite() && r > 0.0 && r.is_finite(),
            DomainSpec::Rect { a, b, r } => a < b && b.is_finite() && a.is_finite() && r > 0.0 && r.is_finite(),
            DomainSpec::Sector { radius, angle } => {
                radius >= 0.0 && angle > 0.0 && angle <= std::f64::consts::PI
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("malformed region {self:?}")))
        }
    }

    pub fn contains(&self, lam: Complex<f64>) -> bool {
        match *self {
            DomainSpec::HalfPlane { a } => lam.re > a,
            DomainSpec::HalfStrip { a, r } => lam.re > a && lam.im.abs() < r,
            DomainSpec::Rect { a, b, r } => lam.re > a && lam.re < b && lam.im.abs() < r,
            DomainSpec::Sector { radius, angle } => lam.norm() > radius && lam.arg().abs() < angle,
        }
    }

    /// Left edge `Re λ` of the region.
    pub fn left(&self) -> f64 {
        match *self {
            DomainSpec::HalfPlane { a } | DomainSpec::HalfStrip { a, .. } | DomainSpec::Rect { a, .. } => a,
            DomainSpec::Sector { radius, angle } => {
                if angle > std::f64::consts::FRAC_PI_2 {
                    f64::NEG_INFINITY
                } else {
                    radius * angle.cos()
                }
            }
        }
    }

    pub fn half_height(&self) -> f64 {
        match *self {
            DomainSpec::HalfPlane { .. } | DomainSpec::Sector { .. } => f64::INFINITY,
            DomainSpec::HalfStrip { r, .. } | DomainSpec::Rect { r, .. } => r,
        }
    }
}

/// JSON form of a potential family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<FourierProfile<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<Vec<ExpTerm<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Tabulated<f64>>,
}

impl TryFrom<&PotentialConfig> for PotentialSpec<f64> {
    type Error = Error;

    fn try_from(cfg: &PotentialConfig) -> Result<Self> {
        fn need<T: Clone>(v: &Option<T>, field: &str, family: &str) -> Result<T> {
            v.clone()
                .ok_or_else(|| Error::Config(format!("family \"{family}\" requires field \"{field}\"")))
        }
        let fam = cfg.family.as_str();
        let allowed: &[&str] = match fam {
            "zero" => &[],
            "constant" => &["c"],
            "lambda_independent" => &["q"],
            "exp" | "cos" => &["terms"],
            "rational_decay" => &["q", "shift"],
            "tabulated" => &["table"],
            other => return Err(Error::Config(format!("unknown family \"{other}\""))),
        };
        let present = [
            ("c", cfg.c.is_some()),
            ("q", cfg.q.is_some()),
            ("terms", cfg.terms.is_some()),
            ("shift", cfg.shift.is_some()),
            ("table", cfg.table.is_some()),
        ];
        for (name, set) in present {
            if set && !allowed.contains(&name) {
                return Err(Error::Config(format!("field \"{name}\" is not used by family \"{fam}\"")));
            }
        }
        let spec = match fam {
            "zero" => PotentialSpec::Zero,
            "constant" => PotentialSpec::Constant(need(&cfg.c, "c", fam)?),
            "lambda_independent" => PotentialSpec::LambdaIndependent(need(&cfg.q, "q", fam)?),
            "exp" => PotentialSpec::Exp(need(&cfg.terms, "terms", fam)?),
            "cos" => PotentialSpec::Cos(need(&cfg.terms, "terms", fam)?),
            "rational_decay" => PotentialSpec::RationalDecay {
                q: need(&cfg.q, "q", fam)?,
                shift: need(&cfg.shift, "shift", fam)?,
            },
            _ => PotentialSpec::Tabulated(need(&cfg.table, "table", fam)?),
        };
        spec.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(spec)
    }
}

impl From<&PotentialSpec<f64>> for PotentialConfig {
    fn from(spec: &PotentialSpec<f64>) -> Self {
        let mut cfg = PotentialConfig {
            family: String::new(),
            c: None,
            q: None,
            terms: None,
            shift: None,
            table: None,
        };
        cfg.family = match spec {
            PotentialSpec::Zero => "zero",
            PotentialSpec::Constant(c) => {
                cfg.c = Some(*c);
                "constant"
            }
            PotentialSpec::LambdaIndependent(q) => {
                cfg.q = Some(q.clone());
                "lambda_independent"
            }
            PotentialSpec::Exp(t) => {
                cfg.terms = Some(t.clone());
                "exp"
            }
            PotentialSpec::Cos(t) => {
                cfg.terms = Some(t.clone());
                "cos"
            }
            PotentialSpec::RationalDecay { q, shift } => {
                cfg.q = Some(q.clone());
                cfg.shift = Some(*shift);
                "rational_decay"
            }
            PotentialSpec::Tabulated(t) => {
                cfg.table = Some(t.clone());
                "tabulated"
            }
        }
        .to_string();
        cfg
    }
}

impl PotentialSpec<f64> {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: PotentialConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        PotentialSpec::try_from(&cfg)
    }

    pub fn to_config(&self) -> PotentialConfig {
        PotentialConfig::from(self)
    }

}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn trivial_evaluations() {
        let z: PotentialSpec<f64> = PotentialSpec::Zero;
        assert_eq!(z.eval_v(0.4, c(3.0, 1.0)).unwrap(), c(0.0, 0.0));
        let k = PotentialSpec::Constant(1.0);
        assert_eq!(k.eval_v(0.3, c(5.0, 2.0)).unwrap(), c(1.0, 0.0));
        let e = PotentialSpec::Exp(vec![ExpTerm {
            kappa: 1.0,
            q: FourierProfile::cosine(1, 1.0),
        }]);
        assert!((e.eval_v(0.0, c(0.0, PI)).unwrap() - c(-1.0, 0.0)).norm() < 1e-15);
        let r = PotentialSpec::RationalDecay {
            q: FourierProfile::constant(2.0),
            shift: 1.0,
        };
        assert!((r.eval_dv(0.7, c(0.0, 0.0)).unwrap() - c(-2.0, 0.0)).norm() < 1e-15);
        assert!(matches!(r.eval_v(0.1, c(-1.5, 0.0)), Err(Error::Domain { .. })));
    }

    #[test]
    fn exp_derivative_is_termwise() {
        let q = FourierProfile::cosine(1, 0.3);
        let e = PotentialSpec::Exp(vec![ExpTerm { kappa: 2.0, q: q.clone() }]);
        let lam = c(0.4, -0.7);
        let expect = -(-lam * 2.0).exp() * 2.0 * q.eval(0.2);
        assert!((e.eval_dv(0.2, lam).unwrap() - expect).norm() < 1e-15);
    }

    #[test]
    fn norms_and_means() {
        let z: PotentialSpec<f64> = PotentialSpec::Zero;
        assert_eq!(z.norm(c(1.0, 0.0)).unwrap(), 0.0);
        assert_eq!(PotentialSpec::Constant(-3.0).norm(c(2.0, 1.0)).unwrap(), 3.0);
        let m = PotentialSpec::LambdaIndependent(FourierProfile::cosine(1, 1.0));
        assert!((m.norm(c(7.0, 0.0)).unwrap() - 2.0 / PI).abs() < 1e-6);
        let shifted = PotentialSpec::LambdaIndependent(FourierProfile {
            a0: 5.0,
            cos: vec![1.0],
            sin: vec![],
        });
        assert_eq!(shifted.mean(c(3.0, 0.0)).unwrap(), c(5.0, 0.0));
        let e = PotentialSpec::Exp(vec![ExpTerm {
            kappa: 2.0,
            q: FourierProfile::constant(1.0),
        }]);
        assert!((e.mean(c(1.0, 0.0)).unwrap() - c((-2.0f64).exp(), 0.0)).norm() < 1e-16);
    }

    #[test]
    fn real_lambda_gives_exactly_real_values() {
        let e = PotentialSpec::Cos(vec![
            ExpTerm { kappa: 0.5, q: FourierProfile::cosine(1, 0.2) },
            ExpTerm { kappa: 1.5, q: FourierProfile::sine(2, 0.1) },
        ]);
        for i in 0..20 {
            let v = e.eval_v(i as f64 / 20.0, c(3.7 * i as f64, 0.0)).unwrap();
            assert_eq!(v.im, 0.0);
        }
    }

    #[test]
    fn periodic_in_x() {
        let q = FourierProfile { a0: 0.1, cos: vec![0.3, -0.2], sin: vec![0.05] };
        for i in 0..10 {
            let x = i as f64 * 0.0917;
            assert!((q.eval(x) - q.eval(x + 1.0)).abs() < 1e-15);
        }
        assert!((q.sup_bound() - 0.65).abs() < 1e-15);
    }

    #[test]
    fn tabulated_interpolates_smooth_data() {
        let nodes = Tabulated::<f64>::chebyshev_nodes(32);
        let f = |x: f64| c((2.0 * PI * x).cos(), 0.5 * (2.0 * PI * x).sin());
        let v: Vec<_> = nodes.iter().map(|&x| f(x)).collect();
        let dv = vec![c(0.0, 0.0); nodes.len()];
        let t = PotentialSpec::Tabulated(Tabulated::new(c(1.0, 0.0), nodes, v, dv).unwrap());
        for i in 0..17 {
            let x = i as f64 / 17.0;
            assert!((t.eval_v(x, c(1.0, 0.0)).unwrap() - f(x)).norm() < 1e-12);
        }
    }

    #[test]
    fn kappa_ordering_enforced() {
        let bad = PotentialSpec::Exp(vec![
            ExpTerm { kappa: 2.0, q: FourierProfile::constant(1.0) },
            ExpTerm { kappa: 1.0, q: FourierProfile::constant(1.0) },
        ]);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn json_config_round_trip_and_rejection() {
        let text = r#"{"family": "exp", "terms": [{"kappa": 1.0, "q": {"cos": [0.1]}}]}"#;
        let spec = PotentialSpec::from_json(text).unwrap();
        let back = serde_json::to_string(&spec.to_config()).unwrap();
        assert_eq!(PotentialSpec::from_json(&back).unwrap(), spec);
        assert!(PotentialSpec::from_json(r#"{"family": "exp", "terms": [], "bogus": 1}"#).is_err());
        assert!(PotentialSpec::from_json(r#"{"family": "constant", "c": 1, "shift": 2}"#).is_err());
        assert!(PotentialSpec::from_json(r#"{"family": "cos", "terms": [{"kappa": 1, "q": {"a1": 2}}]}"#).is_err());
    }
}
