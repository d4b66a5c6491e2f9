//! Zeros of analytic functions: argument-principle counting on rectangles,
//! quadtree isolation, multiplicity-aware Newton, and a real-line scan that
//! also catches tangential (double) zeros.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::adaptive_gk15;

/// An analytic function together with its derivative.
pub trait Analytic: Sync {
    fn eval(&self, lam: Complex64) -> Result<(Complex64, Complex64)>;
}

impl<F> Analytic for F
where
    F: Fn(Complex64) -> Result<(Complex64, Complex64)> + Sync,
{
    fn eval(&self, lam: Complex64) -> Result<(Complex64, Complex64)> {
        self(lam)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub center: Complex64,
    pub half_width: f64,
    pub half_height: f64,
}

impl Rect {
    pub fn new(center: Complex64, half_width: f64, half_height: f64) -> Self {
        Rect {
            center,
            half_width,
            half_height,
        }
    }

    pub fn from_corners(lo: Complex64, hi: Complex64) -> Self {
        Rect {
            center: (lo + hi) / 2.0,
            half_width: (hi.re - lo.re).abs() / 2.0,
            half_height: (hi.im - lo.im).abs() / 2.0,
        }
    }

    pub fn lo(&self) -> Complex64 {
        self.center - Complex64::new(self.half_width, self.half_height)
    }

    pub fn hi(&self) -> Complex64 {
        self.center + Complex64::new(self.half_width, self.half_height)
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.half_width.hypot(self.half_height)
    }

    pub fn contains(&self, lam: Complex64) -> bool {
        (lam.re - self.center.re).abs() <= self.half_width
            && (lam.im - self.center.im).abs() <= self.half_height
    }

    /// Containment in the 10%-dilated rectangle.
    pub fn dilated_contains(&self, lam: Complex64) -> bool {
        self.dilated(1.1).contains(lam)
    }

    fn dilated(&self, factor: f64) -> Rect {
        Rect::new(self.center, self.half_width * factor, self.half_height * factor)
    }

    /// Corners counter-clockwise from the lower left.
    fn corners(&self) -> [Complex64; 4] {
        let (lo, hi) = (self.lo(), self.hi());
        [
            lo,
            Complex64::new(hi.re, lo.im),
            hi,
            Complex64::new(lo.re, hi.im),
        ]
    }

    /// Four children meeting at the point a fraction `fx`, `fy` across.
    fn split(&self, fx: f64, fy: f64) -> [Rect; 4] {
        let (lo, hi) = (self.lo(), self.hi());
        let m = Complex64::new(lo.re + fx * (hi.re - lo.re), lo.im + fy * (hi.im - lo.im));
        [
            Rect::from_corners(lo, m),
            Rect::from_corners(Complex64::new(m.re, lo.im), Complex64::new(hi.re, m.im)),
            Rect::from_corners(m, hi),
            Rect::from_corners(Complex64::new(lo.re, m.im), Complex64::new(m.re, hi.im)),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocatedZero {
    pub lam: Complex64,
    pub multiplicity: u32,
    /// `|F(λ)|`.
    pub residual: f64,
    pub newton_converged: bool,
    /// Multiplicity above two: not expected for second-order problems.
    pub suspicious: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountOptions {
    /// Boundary samples per edge used to screen for zeros on the contour.
    pub screen_samples: usize,
    /// `min |F| < screen_ratio · max |F|` on the screen counts as a hit.
    pub screen_ratio: f64,
    pub max_dilations: usize,
    pub quad_tol: f64,
    pub max_depth: usize,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions {
            screen_samples: 48,
            screen_ratio: 1e-8,
            max_dilations: 5,
            quad_tol: 2e-3,
            max_depth: 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroCount {
    pub count: i64,
    /// Contour actually used, possibly dilated.
    pub rect: Rect,
    pub winding: f64,
}

fn screen_boundary<F: Analytic + ?Sized>(f: &F, rect: &Rect, opts: &CountOptions) -> Result<bool> {
    let c = rect.corners();
    let n = opts.screen_samples.max(4);
    let pts: Vec<Complex64> = (0..4)
        .flat_map(|e| {
            let (a, b) = (c[e], c[(e + 1) % 4]);
            (0..n).map(move |j| a + (b - a) * ((j as f64 + 0.5) / n as f64))
        })
        .chain(c)
        .collect();
    let vals: Result<Vec<f64>> = pts.par_iter().map(|&p| f.eval(p).map(|v| v.0.norm())).collect();
    let vals = vals?;
    let max = vals.iter().cloned().fold(0.0, f64::max);
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(min > opts.screen_ratio * max && min > 0.0)
}

fn winding<F: Analytic + ?Sized>(f: &F, rect: &Rect, opts: &CountOptions) -> Result<f64> {
    let c = rect.corners();
    let edges: Result<Vec<Complex64>> = (0..4)
        .into_par_iter()
        .map(|e| {
            let (a, b) = (c[e], c[(e + 1) % 4]);
            let d = b - a;
            let pieces = ((d.norm() / rect.diameter()) * 8.0).ceil() as usize;
            adaptive_gk15(
                |t| {
                    let (v, dv) = f.eval(a + d * t)?;
                    Ok(dv / v * d)
                },
                0.0,
                1.0,
                pieces.max(2),
                opts.quad_tol,
                opts.max_depth,
            )
        })
        .collect();
    let total: Complex64 = edges?.into_iter().sum();
    Ok((total / Complex64::new(0.0, 2.0 * PI)).re)
}

fn count_once<F: Analytic + ?Sized>(f: &F, rect: &Rect, opts: &CountOptions) -> Result<Option<ZeroCount>> {
    if !screen_boundary(f, rect, opts)? {
        return Ok(None);
    }
    let w = winding(f, rect, opts)?;
    let count = w.round();
    if (w - count).abs() >= 0.25 {
        return Err(Error::Precision { value: w });
    }
    Ok(Some(ZeroCount {
        count: count as i64,
        rect: *rect,
        winding: w,
    }))
}

/// Number of zeros inside `rect` (with multiplicity) by the argument
/// principle, dilating the contour by 1% when a zero seems to sit on it.
pub fn count_zeros<F: Analytic + ?Sized>(f: &F, rect: &Rect, opts: &CountOptions) -> Result<ZeroCount> {
    let mut r = *rect;
    for _ in 0..=opts.max_dilations {
        if let Some(c) = count_once(f, &r, opts)? {
            return Ok(c);
        }
        r = r.dilated(1.01);
    }
    Err(Error::BoundaryZero {
        retries: opts.max_dilations,
    })
}

// split points tried in turn when a child contour passes too close to a zero
const SPLITS: [(f64, f64); 6] = [
    (0.4817, 0.4631),
    (0.5379, 0.5213),
    (0.4423, 0.5507),
    (0.5711, 0.4319),
    (0.3967, 0.3853),
    (0.6123, 0.6271),
];

/// Quadtree subdivision of `rect` down to pieces of diameter at most
/// `target_radius`, each with its zero count; counts always sum to the
/// parent count.
pub fn isolate_zeros<F: Analytic + ?Sized>(
    f: &F,
    rect: &Rect,
    target_radius: f64,
    opts: &CountOptions,
) -> Result<Vec<(Rect, i64)>> {
    let root = count_zeros(f, rect, opts)?;
    isolate_from(f, root.rect, root.count, target_radius, opts, 0)
}

fn isolate_from<F: Analytic + ?Sized>(
    f: &F,
    rect: Rect,
    count: i64,
    target_radius: f64,
    opts: &CountOptions,
    depth: usize,
) -> Result<Vec<(Rect, i64)>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    if rect.diameter() <= target_radius {
        return Ok(vec![(rect, count)]);
    }
    if depth >= 40 {
        return Err(Error::Depth(40));
    }
    let mut children = None;
    for &(fx, fy) in &SPLITS {
        let kids = rect.split(fx, fy);
        let counts: Result<Vec<Option<ZeroCount>>> =
            kids.par_iter().map(|k| count_once(f, k, opts)).collect();
        let counts = counts?;
        if counts.iter().all(Option::is_some) {
            children = Some(counts.into_iter().flatten().collect::<Vec<_>>());
            break;
        }
    }
    let children = children.ok_or(Error::BoundaryZero {
        retries: SPLITS.len(),
    })?;
    let total: i64 = children.iter().map(|c| c.count).sum();
    if total != count {
        return Err(Error::CountMismatch {
            parent: count,
            children: total,
        });
    }
    let nested: Result<Vec<Vec<(Rect, i64)>>> = children
        .par_iter()
        .map(|c| isolate_from(f, c.rect, c.count, target_radius, opts, depth + 1))
        .collect();
    Ok(nested?.into_iter().flatten().collect())
}

/// Newton refinement from `seed`. Simple zeros use the plain step; clusters
/// of multiplicity `m > 1` use `m·F/F′` and are then polished as a zero of
/// `F′` (whose `m − 1`-fold zero is the cluster's centre for `m = 2`).
pub fn refine_newton<F: Analytic + ?Sized>(f: &F, seed: Complex64, multiplicity: u32) -> Result<LocatedZero> {
    let m = multiplicity.max(1);
    let mut lam = seed;
    let mut converged = false;
    for _ in 0..60 {
        let (v, dv) = f.eval(lam)?;
        if v == Complex64::new(0.0, 0.0) {
            converged = true;
            break;
        }
        if dv.norm() == 0.0 || !dv.is_finite() {
            break;
        }
        let step = v / dv * m as f64;
        lam -= step;
        if step.norm() < 1e-12 * (1.0 + lam.norm()) {
            converged = true;
            break;
        }
    }
    if m == 2 {
        let (p, ok) = polish_on_derivative(f, lam)?;
        if ok {
            lam = p;
            converged = true;
        }
    }
    if !lam.is_finite() {
        lam = seed;
        converged = false;
    }
    let (v, _) = f.eval(lam)?;
    Ok(LocatedZero {
        lam,
        multiplicity: m,
        residual: v.norm(),
        newton_converged: converged,
        suspicious: m > 2,
    })
}

fn polish_on_derivative<F: Analytic + ?Sized>(f: &F, start: Complex64) -> Result<(Complex64, bool)> {
    let mut lam = start;
    for _ in 0..30 {
        let h = 1e-5 * (1.0 + lam.norm());
        let (_, d0) = f.eval(lam)?;
        let (_, dp) = f.eval(lam + h)?;
        let (_, dm) = f.eval(lam - h)?;
        let d2 = (dp - dm) / (2.0 * h);
        if d2.norm() == 0.0 {
            return Ok((lam, false));
        }
        let step = d0 / d2;
        if step.norm() > 1e-2 * (1.0 + start.norm()) {
            return Ok((start, false));
        }
        lam -= step;
        if step.norm() < 1e-13 * (1.0 + lam.norm()) {
            return Ok((lam, true));
        }
    }
    Ok((lam, false))
}

/// Sample spacing for [`real_scan`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    Uniform(f64),
    /// Spacing `h` in `√λ`: `Δλ ≈ 2·max(√|λ|, 1)·h`.
    SqrtLambda(f64),
    /// Spacing `h` in `λ^{1/3}`: `Δλ ≈ 3·max(|λ|^{2/3}, 1)·h`.
    CubeRoot(f64),
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling::SqrtLambda(PI / 8.0)
    }
}

impl Sampling {
    pub fn grid(&self, a: f64, b: f64) -> Vec<f64> {
        let mut xs = vec![a];
        let mut x = a;
        while x < b {
            let dx = match *self {
                Sampling::Uniform(h) => h,
                Sampling::SqrtLambda(h) => 2.0 * x.abs().sqrt().max(1.0) * h,
                Sampling::CubeRoot(h) => 3.0 * x.abs().powf(2.0 / 3.0).max(1.0) * h,
            };
            x = (x + dx).min(b);
            xs.push(x);
        }
        xs
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    pub sampling: Sampling,
    /// `|F|` at a critical point below this is a double zero.
    pub tangency: f64,
    /// A critical value of opposite sign to both neighbours and larger
    /// than this is a pair of simple zeros rather than a tangency.
    pub crossing_floor: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions {
            sampling: Sampling::default(),
            tangency: 1e-10,
            crossing_floor: 1e-11,
        }
    }
}

pub(crate) fn brent<G>(g: G, a: f64, b: f64, fa: f64, fb: f64) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
{
    brent_with(g, a, b, fa, fb, 1e-15)
}

/// Brent's method stopping at `2ε|b| + abs_tol`.
pub(crate) fn brent_with<G>(g: G, mut a: f64, mut b: f64, mut fa: f64, mut fb: f64, abs_tol: f64) -> Result<f64>
where
    G: Fn(f64) -> Result<f64>,
{
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + abs_tol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * m * s, 1.0 - s)
            } else {
                let q = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0)),
                    (q - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol * m.signum() };
        fb = g(b)?;
    }
    Ok(b)
}

/// Real zeros of a real-valued `F` on `[a, b]`: sign changes bracket simple
/// zeros, sign changes of `F′` locate extrema, and an extremum with
/// `|F| < tangency` is a double zero.
pub fn real_scan<G>(g: &G, a: f64, b: f64, opts: &ScanOptions) -> Result<Vec<LocatedZero>>
where
    G: Fn(f64) -> Result<(f64, f64)> + Sync,
{
    if !(b > a) {
        return Err(Error::InvalidArgument("scan interval must have b > a".into()));
    }
    let xs = opts.sampling.grid(a, b);
    let vals: Result<Vec<(f64, f64)>> = xs.par_iter().map(|&x| g(x)).collect();
    scan_samples(g, &xs, &vals?, opts)
}

/// [`real_scan`] on samples `(F, F′)` already taken at the ascending `xs`;
/// `g` is only called to refine.
pub fn scan_samples<G>(g: &G, xs: &[f64], vals: &[(f64, f64)], opts: &ScanOptions) -> Result<Vec<LocatedZero>>
where
    G: Fn(f64) -> Result<(f64, f64)> + Sync,
{
    if xs.len() != vals.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument("scan needs at least two matching samples".into()));
    }
    let per_interval: Result<Vec<Vec<LocatedZero>>> = (0..xs.len() - 1)
        .into_par_iter()
        .map(|i| scan_interval(g, xs[i], xs[i + 1], vals[i], vals[i + 1], i == 0, opts))
        .collect();
    let mut out: Vec<LocatedZero> = per_interval?.into_iter().flatten().collect();
    out.sort_by(|p, q| p.lam.re.total_cmp(&q.lam.re));
    Ok(out)
}

fn scan_interval<G>(
    g: &G,
    x0: f64,
    x1: f64,
    v0: (f64, f64),
    v1: (f64, f64),
    first: bool,
    opts: &ScanOptions,
) -> Result<Vec<LocatedZero>>
where
    G: Fn(f64) -> Result<(f64, f64)> + Sync,
{
    let located = |x: f64, f: f64, m: u32| LocatedZero {
        lam: Complex64::new(x, 0.0),
        multiplicity: m,
        residual: f.abs(),
        newton_converged: true,
        suspicious: false,
    };
    let mut out = Vec::new();
    if first && v0.0 == 0.0 {
        out.push(located(x0, 0.0, 1));
    }
    // breakpoints: endpoints plus the critical point when F′ changes sign
    let mut pts = vec![(x0, v0.0)];
    if v0.1 * v1.1 < 0.0 {
        let xc = brent(|x| g(x).map(|v| v.1), x0, x1, v0.1, v1.1)?;
        let fc = g(xc)?.0;
        // a dip through zero that clears the noise floor is two simple zeros
        let crosses = fc * v0.0 < 0.0 && fc * v1.0 < 0.0 && fc.abs() > opts.crossing_floor;
        if fc.abs() < opts.tangency && !crosses {
            out.push(located(xc, fc, 2));
            pts.push((xc, 0.0));
        } else {
            pts.push((xc, fc));
        }
    }
    pts.push((x1, v1.0));
    for w in pts.windows(2) {
        let ((p, fp), (q, fq)) = (w[0], w[1]);
        if fp * fq < 0.0 {
            let x = brent(|x| g(x).map(|v| v.0), p, q, fp, fq)?;
            let fx = g(x)?.0;
            out.push(located(x, fx, 1));
        }
    }
    if v1.0 == 0.0 && !pts[..pts.len() - 1].iter().any(|&(x, f)| f == 0.0 && x == x1) {
        out.push(located(x1, 0.0, 1));
    }
    Ok(out)
}
