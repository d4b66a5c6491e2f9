//! The five spectral problems as zero sets of characteristic functions,
//! band assembly, band functions `λₙ(k)`, and interlacing reports.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fundsol::{integrate_fundamental, picard_corrections, FundamentalData, IntegratorConfig};
use crate::potentials::{DomainSpec, PotentialSpec};
use crate::reality::{certify_window, xi_functional, GridOptions, RealityCertificate};
use std::collections::BTreeMap;
use crate::rootfind::{brent, brent_with, count_zeros, isolate_zeros, refine_newton, scan_samples, CountOptions, LocatedZero, Rect, ScanOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Problem {
    /// `y(1) = e^{ik} y(0)`, `y′(1) = e^{ik} y′(0)`.
    Quasi { k: f64 },
    Periodic,
    Antiperiodic,
    Dirichlet,
    Neumann,
    /// `y(0) = y′(1) = 0`.
    MixedDn,
    /// `y′(0) = y(1) = 0`.
    MixedNd,
}

impl Problem {
    /// `(F, ∂F/∂λ)` of the characteristic function from fundamental data
    /// carrying λ-derivatives.
    pub fn characteristic(&self, fd: &FundamentalData<f64>) -> (Complex64, Complex64) {
        let d = fd.lam_derivs.expect("characteristic functions need lambda derivatives");
        let delta = fd.delta();
        let ddelta = (d[0] + d[3]) / 2.0;
        // Near ±1, Δ ∓ 1 = (Δ² − 1)/(Δ ± 1) with Δ² − 1 = ((ϑ − φ′)/2)² + ϑ′φ.
        // The right side is built from factors that are small together
        // at a narrow gap, so it keeps its relative accuracy where the
        // direct difference cancels.
        let disc = ((fd.theta1 - fd.dphi1) / 2.0).powi(2) + fd.dtheta1 * fd.phi1;
        match self.normalized() {
            Problem::Quasi { k } => (delta - k.cos(), ddelta),
            Problem::Periodic if (delta - 1.0).norm() < 0.5 => (disc / (delta + 1.0), ddelta),
            Problem::Periodic => (delta - 1.0, ddelta),
            Problem::Antiperiodic if (delta + 1.0).norm() < 0.5 => (disc / (delta - 1.0), ddelta),
            Problem::Antiperiodic => (delta + 1.0, ddelta),
            Problem::Dirichlet => (fd.phi1, d[2]),
            Problem::Neumann => (fd.dtheta1, d[1]),
            Problem::MixedDn => (fd.dphi1, d[3]),
            Problem::MixedNd => (fd.theta1, d[0]),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Problem::Quasi { .. } => "quasi",
            Problem::Periodic => "periodic",
            Problem::Antiperiodic => "antiperiodic",
            Problem::Dirichlet => "dirichlet",
            Problem::Neumann => "neumann",
            Problem::MixedDn => "mixed_dn",
            Problem::MixedNd => "mixed_nd",
        }
    }

    /// Periodic and antiperiodic are the quasi-periodic problem at `k = 0, π`.
    pub fn normalized(self) -> Problem {
        match self {
            Problem::Quasi { k } => {
                let k = k.rem_euclid(2.0 * PI);
                if k == 0.0 {
                    Problem::Periodic
                } else if k == PI {
                    Problem::Antiperiodic
                } else {
                    Problem::Quasi { k }
                }
            }
            p => p,
        }
    }

    /// The conventional label for a real eigenvalue: the `n` of the window it
    /// sits in, or `None` when the window's parity does not match.
    /// Window index of a real eigenvalue. `shift` is the mean of the
    /// potential, so that low eigenvalues of a shifted potential land in
    /// the window they tend to.
    pub fn label(&self, lam: f64, shift: f64) -> Option<i64> {
        let w = (lam - shift).max(0.0).sqrt() / PI;
        match self.normalized() {
            Problem::Periodic => Some(2 * (w / 2.0).round() as i64),
            Problem::Antiperiodic => Some(2 * ((w - 1.0) / 2.0).round() as i64 + 1),
            Problem::Dirichlet => Some((w.round() as i64).max(1)),
            Problem::Neumann => Some(w.round() as i64),
            Problem::MixedDn | Problem::MixedNd => Some((w + 0.5).round() as i64),
            Problem::Quasi { .. } => Some(w.floor() as i64 + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub lam: Complex64,
    pub multiplicity: u32,
    pub problem: Problem,
    pub index: Option<i64>,
    pub real: bool,
    pub residual: f64,
}

/// When to search off the real axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplexSearch {
    Off,
    /// Only where the window is not certified real; height
    /// `max(1, 2ξ)`.
    Auto,
    /// Always, in `|Im λ| ≤ h`.
    Always(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumConfig {
    pub integ: IntegratorConfig<f64>,
    pub scan: ScanOptions,
    pub count: CountOptions,
    pub complex: ComplexSearch,
    pub grid: GridOptions,
    pub target_radius: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            integ: IntegratorConfig::default(),
            // the periodic characteristic keeps relative accuracy near
            // its double zeros, so shallow dips are trusted far below
            // the tangency threshold
            scan: ScanOptions {
                crossing_floor: 1e-20,
                ..ScanOptions::default()
            },
            count: CountOptions::default(),
            complex: ComplexSearch::Auto,
            grid: GridOptions::default(),
            target_radius: 0.05,
        }
    }
}

fn fundamental(spec: &PotentialSpec<f64>, lam: Complex64, cfg: &SpectrumConfig) -> Result<FundamentalData<f64>> {
    integrate_fundamental(spec, lam, 1.0, &cfg.integ)
}

fn sort_eigs(eigs: &mut [Eigenvalue]) {
    eigs.sort_by(|p, q| p.lam.re.total_cmp(&q.lam.re).then(p.lam.im.total_cmp(&q.lam.im)));
}

/// Real zeros of every problem in `problems` on `(a, b)`, sharing one
/// sampling pass of the fundamental solutions.
pub fn real_spectra(
    spec: &PotentialSpec<f64>,
    problems: &[Problem],
    a: f64,
    b: f64,
    cfg: &SpectrumConfig,
) -> Result<Vec<Vec<Eigenvalue>>> {
    if !(b > a) {
        return Err(Error::InvalidArgument("region must have b > a".into()));
    }
    if !spec.is_real_analytic() {
        return Err(Error::InvalidArgument(
            "real scans need a potential that is real on the real axis".into(),
        ));
    }
    let xs = cfg.scan.sampling.grid(a, b);
    let data: Result<Vec<FundamentalData<f64>>> = xs
        .par_iter()
        .map(|&x| fundamental(spec, Complex64::new(x, 0.0), cfg))
        .collect();
    let data = data?;
    problems
        .iter()
        .map(|problem| {
            let g = |x: f64| {
                let fd = fundamental(spec, Complex64::new(x, 0.0), cfg)?;
                let (f, df) = problem.characteristic(&fd);
                Ok((f.re, df.re))
            };
            let vals: Vec<(f64, f64)> = data
                .iter()
                .map(|fd| {
                    let (f, df) = problem.characteristic(fd);
                    (f.re, df.re)
                })
                .collect();
            let mut zeros = scan_samples(&g, &xs, &vals, &cfg.scan)?;
            polish_ill_conditioned(spec, *problem, &mut zeros, cfg)?;
            Ok(zeros
                .into_iter()
                .filter(|z| z.lam.re > a && z.lam.re < b)
                .map(|z| Eigenvalue {
                    lam: z.lam,
                    multiplicity: z.multiplicity,
                    problem: problem.normalized(),
                    index: problem.label(z.lam.re, mean_shift(spec, z.lam.re)),
                    real: true,
                    residual: z.residual,
                })
                .collect())
        })
        .collect()
}

/// Simple zeros where `F′` is small (edges of narrow gaps) move by
/// `noise / |F′|` under integration error. Those are re-bracketed and
/// re-solved with a much tighter integrator.
fn polish_ill_conditioned(
    spec: &PotentialSpec<f64>,
    problem: Problem,
    zeros: &mut [LocatedZero],
    cfg: &SpectrumConfig,
) -> Result<()> {
    let tight = SpectrumConfig {
        integ: IntegratorConfig {
            rel_tol: 1e-13,
            abs_tol: 1e-15,
            max_steps: cfg.integ.max_steps.max(1_000_000),
            ..cfg.integ
        },
        ..*cfg
    };
    let noise = 10.0 * cfg.integ.rel_tol;
    let locs: Vec<f64> = zeros.iter().map(|z| z.lam.re).collect();
    let updates: Result<Vec<Option<(f64, f64)>>> = zeros
        .par_iter()
        .enumerate()
        .map(|(i, z)| {
            if z.multiplicity != 1 {
                return Ok(None);
            }
            let lam = z.lam.re;
            let (_, df) = problem.characteristic(&fundamental(spec, Complex64::new(lam, 0.0), cfg)?);
            let shift = noise / df.re.abs().max(f64::MIN_POSITIVE);
            if shift < 1e-9 * (1.0 + lam.abs()) {
                return Ok(None);
            }
            let gap = [i.checked_sub(1).map(|j| lam - locs[j]), locs.get(i + 1).map(|x| x - lam)]
                .into_iter()
                .flatten()
                .fold(f64::INFINITY, f64::min);
            let reach = (0.45 * gap).min(100.0 * shift).max(1e-14 * (1.0 + lam.abs()));
            let g = |x: f64| -> Result<f64> {
                Ok(problem.characteristic(&fundamental(spec, Complex64::new(x, 0.0), &tight)?).0.re)
            };
            let mut delta = (0.25 * shift).min(reach);
            loop {
                let (lo, hi) = (lam - delta, lam + delta);
                let (flo, fhi) = (g(lo)?, g(hi)?);
                if flo * fhi <= 0.0 {
                    let x = brent(g, lo, hi, flo, fhi)?;
                    return Ok(Some((x, g(x)?.abs())));
                }
                if delta >= reach {
                    return Ok(None);
                }
                delta = (2.0 * delta).min(reach);
            }
        })
        .collect();
    for (z, u) in zeros.iter_mut().zip(updates?) {
        if let Some((x, res)) = u {
            z.lam = Complex64::new(x, 0.0);
            z.residual = res;
        }
    }
    Ok(())
}

/// Counts zeros of `problem` in `[a, b] × [−h, h]`; vertical edges are
/// nudged (never dilated) off zeros so the real window stays `(a', b')`.
fn count_window(
    spec: &PotentialSpec<f64>,
    problem: Problem,
    a: f64,
    b: f64,
    h: f64,
    cfg: &SpectrumConfig,
) -> Result<(f64, f64, i64)> {
    let f = |lam: Complex64| Ok(problem.characteristic(&fundamental(spec, lam, cfg)?));
    let strict = CountOptions {
        max_dilations: 0,
        ..cfg.count
    };
    let width = b - a;
    for j in 0..6 {
        let nudge = 1e-3 * width * j as f64;
        let (lo, hi) = (a + nudge * 0.37, b - nudge);
        let rect = Rect::from_corners(Complex64::new(lo, -h), Complex64::new(hi, h));
        match count_zeros(&f, &rect, &strict) {
            Ok(c) => return Ok((lo, hi, c.count)),
            Err(Error::BoundaryZero { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::BoundaryZero { retries: 6 })
}

/// Non-real zeros of `problem` in `[a, b] × [−h, h]`, given the real ones:
/// the total count is compared with the real count and, on a surplus, the
/// rectangle is subdivided and every cluster refined. Clusters that land on
/// a known real zero are dropped.
pub fn complex_zeros(
    spec: &PotentialSpec<f64>,
    problem: Problem,
    a: f64,
    b: f64,
    h: f64,
    real: &[Eigenvalue],
    cfg: &SpectrumConfig,
) -> Result<Vec<Eigenvalue>> {
    let (lo, hi, total) = count_window(spec, problem, a, b, h, cfg)?;
    let real_count: i64 = real
        .iter()
        .filter(|e| e.lam.re > lo && e.lam.re < hi)
        .map(|e| e.multiplicity as i64)
        .sum();
    if total == real_count {
        return Ok(Vec::new());
    }
    let f = |lam: Complex64| Ok(problem.characteristic(&fundamental(spec, lam, cfg)?));
    let rect = Rect::from_corners(Complex64::new(lo, -h), Complex64::new(hi, h));
    let leaves = isolate_zeros(&f, &rect, cfg.target_radius, &cfg.count)?;
    let refined: Result<Vec<LocatedZero>> = leaves
        .par_iter()
        .map(|(r, m)| {
            let z = refine_newton(&f, r.center, *m as u32)?;
            // a diverged Newton run keeps the cluster centre
            Ok(if r.dilated_contains(z.lam) { z } else { LocatedZero { lam: r.center, newton_converged: false, ..z } })
        })
        .collect();
    let mut budget: Vec<(Complex64, u32)> = real.iter().map(|e| (e.lam, e.multiplicity)).collect();
    let mut out = Vec::new();
    for z in refined? {
        let tol = 1e-6 * (1.0 + z.lam.norm());
        let mut m = z.multiplicity;
        for slot in budget.iter_mut() {
            if (slot.0 - z.lam).norm() < tol.max(cfg.target_radius) && slot.1 > 0 {
                let take = slot.1.min(m);
                slot.1 -= take;
                m -= take;
            }
        }
        if m > 0 {
            out.push(Eigenvalue {
                lam: z.lam,
                multiplicity: m,
                problem: problem.normalized(),
                index: None,
                real: z.lam.im.abs() <= 1e-12 * (1.0 + z.lam.norm()),
                residual: z.residual,
            });
        }
    }
    Ok(out)
}

/// Height of the complex search box for `(a, b)`.
fn search_height(spec: &PotentialSpec<f64>, a: f64, b: f64, cfg: &SpectrumConfig) -> Result<Option<f64>> {
    match cfg.complex {
        ComplexSearch::Off => Ok(None),
        ComplexSearch::Always(h) => Ok(Some(h)),
        ComplexSearch::Auto => {
            let certified = certify_window(spec, a, b, &cfg.grid).map(|c| c.certified).unwrap_or(false);
            if certified {
                return Ok(None);
            }
            let xi = xi_functional(spec, &DomainSpec::Rect { a, b, r: 1.0 }, &cfg.grid).unwrap_or(0.0);
            Ok(Some((2.0 * xi).max(1.0)))
        }
    }
}

/// Eigenvalues of each problem in the window `(a, b)`, real ones by
/// scanning and, per [`ComplexSearch`], non-real ones by the argument
/// principle.
pub fn spectra(
    spec: &PotentialSpec<f64>,
    problems: &[Problem],
    a: f64,
    b: f64,
    cfg: &SpectrumConfig,
) -> Result<Vec<Vec<Eigenvalue>>> {
    let annotate = |e: Error| e.context(format!("window ({a}, {b})"));
    let mut out = if spec.is_real_analytic() {
        real_spectra(spec, problems, a, b, cfg).map_err(annotate)?
    } else {
        vec![Vec::new(); problems.len()]
    };
    let height = if spec.is_real_analytic() {
        search_height(spec, a, b, cfg).map_err(annotate)?
    } else {
        match cfg.complex {
            ComplexSearch::Always(h) => Some(h),
            _ => Some(1.0),
        }
    };
    if let Some(h) = height {
        for (problem, eigs) in problems.iter().zip(out.iter_mut()) {
            let extra = complex_zeros(spec, *problem, a, b, h, eigs, cfg).map_err(annotate)?;
            eigs.extend(extra);
        }
    }
    for eigs in out.iter_mut() {
        sort_eigs(eigs);
    }
    Ok(out)
}

pub fn spectrum(spec: &PotentialSpec<f64>, problem: Problem, a: f64, b: f64, cfg: &SpectrumConfig) -> Result<Vec<Eigenvalue>> {
    Ok(spectra(spec, &[problem], a, b, cfg)?.pop().unwrap_or_default())
}

pub fn quasi_spectrum(spec: &PotentialSpec<f64>, k: f64, a: f64, b: f64, cfg: &SpectrumConfig) -> Result<Vec<Eigenvalue>> {
    if !(0.0..2.0 * PI).contains(&k) {
        return Err(Error::InvalidArgument("quasimomentum must lie in [0, 2 pi)".into()));
    }
    spectrum(spec, Problem::Quasi { k }, a, b, cfg)
}

pub fn dirichlet_spectrum(spec: &PotentialSpec<f64>, a: f64, b: f64, cfg: &SpectrumConfig) -> Result<Vec<Eigenvalue>> {
    spectrum(spec, Problem::Dirichlet, a, b, cfg)
}

pub fn neumann_spectrum(spec: &PotentialSpec<f64>, a: f64, b: f64, cfg: &SpectrumConfig) -> Result<Vec<Eigenvalue>> {
    spectrum(spec, Problem::Neumann, a, b, cfg)
}

/// `(y(0) = y′(1) = 0, y′(0) = y(1) = 0)` spectra.
pub fn mixed_spectra(spec: &PotentialSpec<f64>, a: f64, b: f64, cfg: &SpectrumConfig) -> Result<(Vec<Eigenvalue>, Vec<Eigenvalue>)> {
    let mut v = spectra(spec, &[Problem::MixedDn, Problem::MixedNd], a, b, cfg)?;
    let nd = v.pop().unwrap_or_default();
    let dn = v.pop().unwrap_or_default();
    Ok((dn, nd))
}

/// Zeros of `Δ² − 1`, each attributed to the periodic (`Δ = 1`) or
/// antiperiodic (`Δ = −1`) problem, merged in ascending order.
pub fn two_periodic_spectrum(spec: &PotentialSpec<f64>, a: f64, b: f64, cfg: &SpectrumConfig) -> Result<Vec<Eigenvalue>> {
    let mut all: Vec<Eigenvalue> = spectra(spec, &[Problem::Periodic, Problem::Antiperiodic], a, b, cfg)?
        .into_iter()
        .flatten()
        .collect();
    sort_eigs(&mut all);
    Ok(all)
}

fn mean_shift(spec: &PotentialSpec<f64>, lam: f64) -> f64 {
    spec.mean(Complex64::new(lam, 0.0)).map(|m| m.re).unwrap_or(0.0)
}

/// `[λ_{n−1}^+, λ_n^-]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub n: i64,
    pub lo: f64,
    pub hi: f64,
}

/// `(λ_n^-, λ_n^+)`; closed when `lo == hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub n: i64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandStructure {
    pub bands: Vec<Band>,
    pub gaps: Vec<Gap>,
    pub start_index: i64,
    pub domain: DomainSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandAssembly {
    pub certificate: Option<RealityCertificate>,
    pub structure: Option<BandStructure>,
    /// The 2-periodic eigenvalues the structure was built from, or the raw
    /// zeros when assembly was refused.
    pub eigenvalues: Vec<Eigenvalue>,
    pub warning: Option<String>,
}

/// Band edges `λ_n^∓` keyed by `n`, from labelled 2-periodic eigenvalues.
#[derive(Debug, Clone, Default)]
pub struct EdgeTable {
    pub minus: BTreeMap<i64, f64>,
    pub plus: BTreeMap<i64, f64>,
}

fn window_inside(n: i64, a: f64, b: f64) -> bool {
    let lo = (PI * (n - 1).max(0) as f64).powi(2);
    let hi = (PI * (n + 1) as f64).powi(2);
    (n == 0 || lo > a) && hi < b
}

/// Groups labelled 2-periodic eigenvalues by window. Windows cut by the
/// region edge may be incomplete and are skipped; an interior window
/// without exactly two edges (one for `n = 0`) is a structure error.
pub fn edge_table(eigs: &[Eigenvalue], a: f64, b: f64) -> Result<EdgeTable> {
    let mut groups: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for e in eigs {
        let n = e.index.ok_or_else(|| {
            Error::Structure(format!("eigenvalue {} has no window label", e.lam))
        })?;
        if !e.real {
            return Err(Error::Structure(format!("eigenvalue {} is not real", e.lam)));
        }
        let g = groups.entry(n).or_default();
        for _ in 0..e.multiplicity {
            g.push(e.lam.re);
        }
    }
    let mut table = EdgeTable::default();
    for (n, mut vals) in groups {
        vals.sort_by(f64::total_cmp);
        let expected = if n == 0 { 1 } else { 2 };
        if vals.len() != expected {
            if window_inside(n, a, b) {
                return Err(Error::Structure(format!(
                    "window n = {n} holds {} band edges, expected {expected}",
                    vals.len()
                )));
            }
            continue;
        }
        if n == 0 {
            table.plus.insert(0, vals[0]);
        } else {
            table.minus.insert(n, vals[0]);
            table.plus.insert(n, vals[1]);
        }
    }
    Ok(table)
}

/// `(Δ, Δ² − 1)`, the second in the cancellation-free form.
fn delta_disc_at(spec: &PotentialSpec<f64>, lam: f64, cfg: &SpectrumConfig) -> Result<(f64, f64)> {
    let fd = fundamental(spec, Complex64::new(lam, 0.0), cfg)?;
    let disc = ((fd.theta1 - fd.dphi1) / 2.0).powi(2) + fd.dtheta1 * fd.phi1;
    Ok((fd.delta().re, disc.re))
}

/// Bands and gaps from an edge table, checked for the ordering
/// `λ_{n−1}^+ < λ_n^- ≤ λ_n^+` and for the sign of `Δ` inside: `|Δ| < 1`
/// on bands, `(−1)ⁿΔ > 1` on open gaps.
pub fn structure_from_edges(
    spec: &PotentialSpec<f64>,
    table: &EdgeTable,
    domain: DomainSpec,
    cfg: &SpectrumConfig,
) -> Result<BandStructure> {
    let mut bands = Vec::new();
    let mut gaps = Vec::new();
    for (&n, &minus) in &table.minus {
        let plus = table.plus[&n];
        if let Some(&prev) = table.plus.get(&(n - 1)) {
            if !(prev < minus) {
                return Err(Error::Structure(format!(
                    "lambda_{}^+ = {prev} is not below lambda_{n}^- = {minus}",
                    n - 1
                )));
            }
            bands.push(Band { n, lo: prev, hi: minus });
        }
        if !(minus <= plus) {
            return Err(Error::Structure(format!("lambda_{n}^- > lambda_{n}^+")));
        }
        gaps.push(Gap { n, lo: minus, hi: plus });
    }
    let start_index = bands.first().map(|b| b.n).ok_or_else(|| {
        Error::Structure("no complete band in the window".into())
    })?;
    gaps.retain(|g| g.n >= start_index);
    let band_checks: Vec<(f64, i64, bool)> = bands
        .iter()
        .flat_map(|b| (1..=5).map(move |j| (b.lo + (b.hi - b.lo) * j as f64 / 6.0, b.n, true)))
        .chain(gaps.iter().filter(|g| g.hi - g.lo > 1e-8 * (1.0 + g.hi.abs())).flat_map(|g| {
            (1..=3).map(move |j| (g.lo + (g.hi - g.lo) * j as f64 / 4.0, g.n, false))
        }))
        .collect();
    let bad: Result<Vec<Option<String>>> = band_checks
        .par_iter()
        .map(|&(lam, n, in_band)| {
            let (d, disc) = delta_disc_at(spec, lam, cfg)?;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let ok = if in_band { disc < 0.0 } else { disc > 0.0 && sign * d > 0.0 };
            Ok((!ok).then(|| {
                format!(
                    "Delta = {d} at lambda = {lam} inside {} n = {n}",
                    if in_band { "band" } else { "gap" }
                )
            }))
        })
        .collect();
    if let Some(msg) = bad?.into_iter().flatten().next() {
        return Err(Error::Structure(msg));
    }
    Ok(BandStructure {
        bands,
        gaps,
        start_index,
        domain,
    })
}

/// Bands on the real window `(a, b)`. Refused (raw zeros returned with a
/// warning) when the window does not carry a reality certificate.
pub fn assemble_bands(spec: &PotentialSpec<f64>, a: f64, b: f64, cfg: &SpectrumConfig) -> Result<BandAssembly> {
    let cert = certify_window(spec, a, b, &cfg.grid);
    let certified = cert.as_ref().map(|c| c.certified).unwrap_or(false);
    if !certified {
        let raw = two_periodic_spectrum(spec, a, b, cfg)?;
        let why = match &cert {
            Ok(_) => "window is not certified real".to_string(),
            Err(e) => format!("no reality certificate: {e}"),
        };
        return Ok(BandAssembly {
            certificate: cert.ok(),
            structure: None,
            eigenvalues: raw,
            warning: Some(format!("bands refused, raw zeros reported: {why}")),
        });
    }
    let real_cfg = SpectrumConfig {
        complex: ComplexSearch::Off,
        ..*cfg
    };
    let eigs = two_periodic_spectrum(spec, a, b, &real_cfg)?;
    let table = edge_table(&eigs, a, b)?;
    let structure = structure_from_edges(spec, &table, DomainSpec::Rect { a, b, r: f64::MIN_POSITIVE }, cfg)?;
    Ok(BandAssembly {
        certificate: cert.ok(),
        structure: Some(structure),
        eigenvalues: eigs,
        warning: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandTrack {
    pub band: i64,
    /// `λ_band(k)` per grid point; `None` where it leaves the window.
    pub values: Vec<Option<f64>>,
    /// `+1` for bands expected increasing in `k` (odd), `−1` otherwise.
    pub expected_direction: i32,
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandTable {
    pub k: Vec<f64>,
    pub tracks: Vec<BandTrack>,
    /// `(k, band)` where nearest-match tracking was ambiguous.
    pub crossings: Vec<(f64, i64)>,
}

impl BandTable {
    /// `(k, band, λ)` rows, sorted by band then `k`.
    pub fn rows(&self) -> Vec<(f64, i64, f64)> {
        self.tracks
            .iter()
            .flat_map(|t| {
                self.k
                    .iter()
                    .zip(&t.values)
                    .filter_map(move |(k, v)| v.map(|v| (*k, t.band, v)))
            })
            .collect()
    }
}

/// `λₙ(k)` on a grid of `k ∈ [0, π]`, tracked across the grid by nearest
/// match from the grid point closest to `π/2`.
pub fn band_functions(
    spec: &PotentialSpec<f64>,
    k_grid: &[f64],
    a: f64,
    b: f64,
    cfg: &SpectrumConfig,
) -> Result<BandTable> {
    if k_grid.is_empty() || k_grid.iter().any(|k| !(0.0..=PI).contains(k)) {
        return Err(Error::InvalidArgument("k grid must be non-empty and within [0, pi]".into()));
    }
    let mut ks = k_grid.to_vec();
    ks.sort_by(f64::total_cmp);
    ks.dedup();
    let problems: Vec<Problem> = ks.iter().map(|&k| Problem::Quasi { k }.normalized()).collect();
    let per_k = spectra(spec, &problems, a, b, cfg)?;
    let columns: Vec<Vec<f64>> = per_k
        .iter()
        .map(|eigs| {
            let mut col: Vec<f64> = eigs
                .iter()
                .filter(|e| e.real)
                .flat_map(|e| std::iter::repeat(e.lam.re).take(e.multiplicity as usize))
                .collect();
            col.sort_by(f64::total_cmp);
            col
        })
        .collect();
    let pivot = (0..ks.len())
        .min_by(|&i, &j| (ks[i] - PI / 2.0).abs().total_cmp(&(ks[j] - PI / 2.0).abs()))
        .unwrap_or(0);
    let floor_band = |lam: f64| {
        let w = (lam - mean_shift(spec, lam)).max(0.0).sqrt() / PI;
        w.floor() as i64 + 1
    };
    let mut tracks: BTreeMap<i64, Vec<Option<f64>>> = BTreeMap::new();
    let mut crossings = Vec::new();
    if let Some(&first) = columns[pivot].first() {
        let base = floor_band(first);
        for (j, &v) in columns[pivot].iter().enumerate() {
            let mut vals = vec![None; ks.len()];
            vals[pivot] = Some(v);
            tracks.insert(base + j as i64, vals);
        }
    }
    let order: Vec<(usize, usize)> = (pivot + 1..ks.len())
        .map(|c| (c - 1, c))
        .chain((0..pivot).rev().map(|c| (c + 1, c)))
        .collect();
    for (prev, cur) in order {
        let cands = &columns[cur];
        let mut claimed = vec![false; cands.len()];
        let bands: Vec<i64> = tracks.keys().cloned().collect();
        for band in bands {
            let Some(v) = tracks[&band][prev] else { continue };
            let mut best: Option<(usize, f64)> = None;
            let mut second = f64::INFINITY;
            for (i, &c) in cands.iter().enumerate() {
                if claimed[i] {
                    continue;
                }
                let d = (c - v).abs();
                match best {
                    Some((_, bd)) if d >= bd => second = second.min(d),
                    _ => {
                        if let Some((_, bd)) = best {
                            second = second.min(bd);
                        }
                        best = Some((i, d));
                    }
                }
            }
            if let Some((i, d)) = best {
                let tol = 1e-9 * (1.0 + v.abs());
                if (second - d).abs() < tol && second.is_finite() {
                    let other = cands
                        .iter()
                        .enumerate()
                        .find(|(j, c)| *j != i && !claimed[*j] && ((*c - v).abs() - second).abs() < tol);
                    if other.map_or(false, |(_, c)| (c - cands[i]).abs() > tol) {
                        crossings.push((ks[cur], band));
                    }
                }
                claimed[i] = true;
                tracks.get_mut(&band).expect("track exists")[cur] = Some(cands[i]);
            }
        }
        for (i, &c) in cands.iter().enumerate() {
            if !claimed[i] {
                let band = floor_band(c);
                let entry = tracks.entry(band).or_insert_with(|| vec![None; ks.len()]);
                if entry[cur].is_some() {
                    crossings.push((ks[cur], band));
                } else {
                    entry[cur] = Some(c);
                }
            }
        }
    }
    let tracks = tracks
        .into_iter()
        .map(|(band, values)| {
            let dir = if band % 2 == 1 { 1 } else { -1 };
            let pts: Vec<f64> = values.iter().flatten().cloned().collect();
            let monotone = pts.windows(2).all(|w| {
                let tol = 1e-9 * (1.0 + w[0].abs());
                dir as f64 * (w[1] - w[0]) > -tol
            });
            BandTrack {
                band,
                values,
                expected_direction: dir,
                monotone,
            }
        })
        .collect();
    Ok(BandTable {
        k: ks,
        tracks,
        crossings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowCount {
    pub problem: Problem,
    pub n: i64,
    pub lo: f64,
    pub hi: f64,
    pub count: u32,
    pub expected: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inclusion {
    pub problem: Problem,
    pub n: i64,
    pub lam: f64,
    pub lo: f64,
    pub hi: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterlacingReport {
    pub windows: Vec<WindowCount>,
    pub inclusions: Vec<Inclusion>,
    /// `min Δ(γ)²` over the Dirichlet eigenvalues.
    pub min_delta_sq_dirichlet: f64,
    pub delta_sq_ok: bool,
    /// Smallest `n` from which ten consecutive windows (or all remaining
    /// ones) have the expected counts.
    pub empirical_n: Option<i64>,
    pub tolerance: f64,
    pub violations: Vec<String>,
    pub edges: Vec<(i64, Option<f64>, Option<f64>)>,
    pub dirichlet: Vec<Eigenvalue>,
    pub neumann: Vec<Eigenvalue>,
}

/// Counting windows, the inclusions `γₙ, νₙ ∈ [λₙ^-, λₙ^+]`, the mixed
/// eigenvalues in `[λ_{n−1}^+, λₙ^-]`, and `Δ² ≥ 1` at Dirichlet
/// eigenvalues, on the real window `(a, b)`.
pub fn interlacing_report(spec: &PotentialSpec<f64>, a: f64, b: f64, cfg: &SpectrumConfig) -> Result<InterlacingReport> {
    let tolerance = 1e-6;
    let problems = [
        Problem::Periodic,
        Problem::Antiperiodic,
        Problem::Dirichlet,
        Problem::Neumann,
        Problem::MixedDn,
        Problem::MixedNd,
    ];
    let all = spectra(spec, &problems, a, b, cfg)?;
    let mut violations = Vec::new();
    let mut windows = Vec::new();
    let count_in = |eigs: &[Eigenvalue], lo: f64, hi: f64| -> u32 {
        eigs.iter()
            .filter(|e| e.lam.re > lo && e.lam.re < hi)
            .map(|e| e.multiplicity)
            .sum()
    };
    let n_max = (b.sqrt() / PI).ceil() as i64 + 1;
    for n in 0..=n_max {
        // 2-periodic window of λₙ^±: periodic for even n, antiperiodic for odd
        let lo = (PI * (n - 1) as f64).powi(2);
        let hi = (PI * (n + 1) as f64).powi(2);
        if n >= 1 && lo > a && hi < b {
            let (problem, eigs) = if n % 2 == 0 { (Problem::Periodic, &all[0]) } else { (Problem::Antiperiodic, &all[1]) };
            windows.push(WindowCount { problem, n, lo, hi, count: count_in(eigs, lo, hi), expected: 2 });
        }
        let lo = (PI * (n as f64 - 0.5)).powi(2);
        let hi = (PI * (n as f64 + 0.5)).powi(2);
        if n >= 1 && lo > a && hi < b {
            for (problem, eigs) in [(Problem::Dirichlet, &all[2]), (Problem::Neumann, &all[3])] {
                windows.push(WindowCount { problem, n, lo, hi, count: count_in(eigs, lo, hi), expected: 1 });
            }
        }
    }
    for w in &windows {
        if w.count != w.expected {
            violations.push(format!(
                "{} window n = {} ({:.6}, {:.6}) holds {} eigenvalues, expected {}",
                w.problem.name(),
                w.n,
                w.lo,
                w.hi,
                w.count,
                w.expected
            ));
        }
    }
    let mut two_periodic: Vec<Eigenvalue> = all[0].iter().chain(&all[1]).cloned().collect();
    sort_eigs(&mut two_periodic);
    let table = match edge_table(&two_periodic, a, b) {
        Ok(t) => t,
        Err(e) => {
            violations.push(e.to_string());
            EdgeTable::default()
        }
    };
    let mut inclusions = Vec::new();
    for (problem, eigs) in [(Problem::Dirichlet, &all[2]), (Problem::Neumann, &all[3])] {
        for e in eigs.iter().filter(|e| e.real) {
            let Some(n) = e.index else { continue };
            if let (Some(&lo), Some(&hi)) = (table.minus.get(&n), table.plus.get(&n)) {
                let ok = e.lam.re >= lo - tolerance && e.lam.re <= hi + tolerance;
                inclusions.push(Inclusion { problem, n, lam: e.lam.re, lo, hi, ok });
            }
        }
    }
    for (problem, eigs) in [(Problem::MixedDn, &all[4]), (Problem::MixedNd, &all[5])] {
        for e in eigs.iter().filter(|e| e.real) {
            let Some(n) = e.index else { continue };
            if let (Some(&lo), Some(&hi)) = (table.plus.get(&(n - 1)), table.minus.get(&n)) {
                let ok = e.lam.re >= lo - tolerance && e.lam.re <= hi + tolerance;
                inclusions.push(Inclusion { problem, n, lam: e.lam.re, lo, hi, ok });
            }
        }
    }
    for inc in inclusions.iter().filter(|i| !i.ok) {
        violations.push(format!(
            "{} eigenvalue n = {} at {} outside [{}, {}]",
            inc.problem.name(),
            inc.n,
            inc.lam,
            inc.lo,
            inc.hi
        ));
    }
    let deltas: Result<Vec<f64>> = all[2]
        .par_iter()
        .filter(|e| e.real)
        .map(|e| delta_disc_at(spec, e.lam.re, cfg).map(|(_, disc)| 1.0 + disc))
        .collect();
    let min_delta_sq_dirichlet = deltas?.into_iter().fold(f64::INFINITY, f64::min);
    let delta_sq_ok = min_delta_sq_dirichlet >= 1.0 - 1e-9;
    if !delta_sq_ok {
        violations.push(format!("Delta^2 = {min_delta_sq_dirichlet} at a Dirichlet eigenvalue"));
    }
    let mut by_n: BTreeMap<i64, bool> = BTreeMap::new();
    for w in &windows {
        *by_n.entry(w.n).or_insert(true) &= w.count == w.expected;
    }
    let ns: Vec<(i64, bool)> = by_n.into_iter().collect();
    let empirical_n = (0..ns.len())
        .find(|&i| ns[i..].iter().take(10).all(|(_, ok)| *ok))
        .map(|i| ns[i].0);
    let keys: std::collections::BTreeSet<i64> = table.minus.keys().chain(table.plus.keys()).cloned().collect();
    let edges = keys
        .into_iter()
        .map(|n| (n, table.minus.get(&n).cloned(), table.plus.get(&n).cloned()))
        .collect();
    let mut all = all;
    let neumann = std::mem::take(&mut all[3]);
    let dirichlet = std::mem::take(&mut all[2]);
    Ok(InterlacingReport {
        windows,
        inclusions,
        min_delta_sq_dirichlet,
        delta_sq_ok,
        empirical_n,
        tolerance,
        violations,
        edges,
        dirichlet,
        neumann,
    })
}

/// Offsets from `(πn)²` of the eigenvalues near it: the 2-periodic pair
/// `λₙ^±`, the Dirichlet `μₙ` and the Neumann `νₙ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeOffsets {
    pub n: u32,
    pub minus: f64,
    pub plus: f64,
    pub dirichlet: f64,
    pub neumann: f64,
}

/// [`EdgeOffsets`] resolved far below the spacing of doubles near `(πn)²`,
/// which is what the eigenvalues themselves are limited to.
///
/// With `λ = (πn)² + δ` and `z = πn + ε`, the free parts `cos z = ±cos ε`,
/// `sin z = ±sin ε` are exact in ε and the Picard corrections are accurate
/// relative to their own size, so `φ(1)`, `ϑ′(1)` and `(ϑ − φ′)/2` keep
/// relative accuracy as they vanish. `μₙ`, `νₙ` are simple zeros of the
/// first two; the 2-periodic pair solves `((ϑ − φ′)/2)² + ϑ′φ = 0`, started
/// from the local model `(δ − μ)(δ − ν) = 4z²((ϑ − φ′)/2)²`. Needs a
/// fast Picard series, `‖V‖ ≤ πn/2`.
pub fn edge_offsets(spec: &PotentialSpec<f64>, n: u32) -> Result<EdgeOffsets> {
    if n == 0 {
        return Err(Error::InvalidArgument("edge offsets need n >= 1".into()));
    }
    let z0 = PI * n as f64;
    let centre = Complex64::new(z0 * z0, 0.0);
    let r = spec.norm(centre)? / z0;
    if !(r <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "Picard series too slow at n = {n}: |V|/|z| = {r:.3}"
        )));
    }
    let order = (1..=30).find(|&k| r.powi(k as i32 + 1) * r.exp() < 1e-20).unwrap_or(30);
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    // (h, ϑ′, φ) at (πn)² + δ
    let parts = |delta: f64| -> Result<(f64, f64, f64)> {
        let z = (z0 * z0 + delta).sqrt();
        let eps = delta / (z0 + z);
        let sin_z = sign * eps.sin();
        let zf = z0 + eps;
        let [t, dt, p, dp] = picard_corrections(spec, Complex64::new(z0 * z0 + delta, 0.0), order)?;
        Ok(((t.re - dp.re) / 2.0, -zf * sin_z + dt.re, sin_z / zf + p.re))
    };
    let sup = (0..64)
        .map(|i| spec.eval_v(i as f64 / 64.0, centre).map(|v| v.norm()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let simple_zero = |pick: fn((f64, f64, f64)) -> f64| -> Result<f64> {
        let g = |d: f64| parts(d).map(pick);
        let mut half = 4.0 * sup + 1e-12;
        for _ in 0..30 {
            let (ga, gb) = (g(-half)?, g(half)?);
            if ga * gb < 0.0 {
                return brent_with(g, -half, half, ga, gb, 1e-300);
            }
            half *= 4.0;
        }
        Err(Error::Structure(format!("no sign change around (pi n)^2, n = {n}")))
    };
    let mu = simple_zero(|p| p.2)?;
    let nu = simple_zero(|p| p.1)?;
    let mid = (mu + nu) / 2.0;
    let g = |d: f64| parts(d).map(|(h, dt, p)| h * h + dt * p);
    let h = parts(mid)?.0;
    let width = (((mu - nu) / 2.0).powi(2) + 4.0 * z0 * z0 * h * h).sqrt();
    let gm = g(mid)?;
    if width == 0.0 || gm <= 0.0 {
        return Ok(EdgeOffsets { n, minus: mid, plus: mid, dirichlet: mu, neumann: nu });
    }
    let edge = |dir: f64| -> Result<f64> {
        let mut reach = 1.5 * width;
        for _ in 0..30 {
            let far = mid + dir * reach;
            let gf = g(far)?;
            if gf < 0.0 {
                return brent_with(g, mid, far, gm, gf, 1e-300);
            }
            reach *= 2.0;
        }
        Err(Error::Structure(format!("gap edge of n = {n} not bracketed")))
    };
    Ok(EdgeOffsets {
        n,
        minus: edge(-1.0)?,
        plus: edge(1.0)?,
        dirichlet: mu,
        neumann: nu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SpectrumConfig {
        SpectrumConfig::default()
    }

    #[test]
    fn free_quasi_spectrum() {
        let e = quasi_spectrum(&PotentialSpec::Zero, PI / 2.0, 0.0, 50.0, &cfg()).unwrap();
        let got: Vec<f64> = e.iter().map(|e| e.lam.re).collect();
        let want = [(PI / 2.0).powi(2), (1.5 * PI).powi(2)];
        assert_eq!(got.len(), 2, "{got:?}");
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-9 * w);
        }
    }

    #[test]
    fn free_two_periodic_multiplicities() {
        let e = two_periodic_spectrum(&PotentialSpec::Zero, 1.0, 100.0, &cfg()).unwrap();
        assert_eq!(e.len(), 3);
        for (j, e) in e.iter().enumerate() {
            let n = j as f64 + 1.0;
            assert_eq!(e.multiplicity, 2);
            assert!((e.lam.re - (PI * n).powi(2)).abs() < 1e-9 * (PI * n).powi(2));
            let want = if j % 2 == 0 { Problem::Antiperiodic } else { Problem::Periodic };
            assert_eq!(e.problem, want);
        }
    }

    #[test]
    fn free_mixed_spectrum() {
        let (dn, nd) = mixed_spectra(&PotentialSpec::Zero, 0.5, 30.0, &cfg()).unwrap();
        for list in [dn, nd] {
            let got: Vec<f64> = list.iter().map(|e| e.lam.re).collect();
            assert_eq!(got.len(), 2);
            assert!((got[0] - 2.467_401_100_272_339_6).abs() < 1e-9);
            assert!((got[1] - 22.206_609_902_451_056).abs() < 1e-8);
        }
    }

    #[test]
    fn constant_potential_shifts_bands() {
        let asm = assemble_bands(&PotentialSpec::Constant(3.0), -1.0, 100.0, &cfg()).unwrap();
        let s = asm.structure.unwrap();
        assert_eq!(s.start_index, 1);
        assert!((s.bands[0].lo - 3.0).abs() < 1e-9);
        assert!((s.bands[0].hi - 3.0 - PI * PI).abs() < 1e-8);
        assert!(s.gaps.iter().all(|g| (g.hi - g.lo).abs() < 1e-6));
    }

    #[test]
    fn free_band_functions() {
        let ks = [0.3, 1.0, PI / 2.0, 2.5];
        let t = band_functions(&PotentialSpec::Zero, &ks, 0.01, 60.0, &cfg()).unwrap();
        let b1 = t.tracks.iter().find(|t| t.band == 1).unwrap();
        let b2 = t.tracks.iter().find(|t| t.band == 2).unwrap();
        for (i, k) in t.k.iter().enumerate() {
            assert!((b1.values[i].unwrap() - k * k).abs() < 1e-9);
            assert!((b2.values[i].unwrap() - (2.0 * PI - k).powi(2)).abs() < 1e-8);
        }
        assert!(t.tracks.iter().all(|t| t.monotone));
        assert!(t.crossings.is_empty());
    }

    #[test]
    fn mathieu_interlacing() {
        let spec = PotentialSpec::LambdaIndependent(crate::potentials::FourierProfile::cosine(1, 10.0));
        let rep = interlacing_report(&spec, 0.5, 400.0, &cfg()).unwrap();
        assert!(rep.violations.is_empty(), "{:?}", rep.violations);
        assert!(rep.inclusions.len() >= 8);
        assert!(rep.delta_sq_ok);
        let asm = assemble_bands(&spec, 0.5, 400.0, &cfg()).unwrap();
        let s = asm.structure.expect("real potential gives bands");
        assert!(s.gaps.iter().all(|g| g.hi >= g.lo));
    }
}
