//! The acceptance suite: twelve numbered checks combining closed-form cases
//! with inclusion and trend properties. Each check reports pass/fail with a
//! one-line detail; errors inside a check count as failures.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::boussinesq::{
    integrate_third_order, multipliers, ram_asymptotic, ramifications, reduce_to_hill, three_point_eigenvalues,
    unperturbed, window, zeta_asymptotic, BoussinesqConfig, ThirdOrderCoeffs, ThirdOrderZero,
};
use crate::fixtures::{self, Fixture};
use crate::fundsol::{integrate_fundamental, picard_fundamental, IntegratorConfig, ZNorm};
use crate::lyapunov::{discriminant, envelope_check};
use crate::potentials::{DomainSpec, PotentialSpec};
use crate::reality::{certify_halfplane, xi_functional, GridOptions, TWO_MINUS_SQRT3};
use crate::resolvent::{green_dirichlet, green_quasi, resolvent_residual};
use crate::spectra::{
    edge_offsets, interlacing_report, real_spectra, spectra, ComplexSearch, Eigenvalue, InterlacingReport, Problem, SpectrumConfig,
};
use crate::Result;

pub const CRITERIA: [u32; 12] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12];

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl std::fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {:>2} {}: {} ({:.1} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail,
            self.seconds
        )
    }
}

pub fn title(id: u32) -> &'static str {
    match id {
        1 => "free spectra",
        2 => "Wronskian conservation",
        3 => "Picard bounds",
        4 => "discriminant envelopes",
        5 => "product identity",
        6 => "counting and interlacing",
        7 => "edge asymptotics",
        8 => "reality certificates",
        9 => "resolvent residuals",
        10 => "free third-order problem",
        11 => "perturbed third-order problem",
        12 => "reduction cross-check",
        _ => "unknown",
    }
}

type Outcome = Result<(bool, String)>;

/// State shared between checks: criteria 6 and 7 read one interlacing run,
/// 11 and 12 one Boussinesq scan.
#[derive(Default)]
pub struct Suite {
    interlacing: Option<InterlacingReport>,
    third_order: Option<Vec<(i64, Vec<ThirdOrderZero>, Vec<ThirdOrderZero>)>>,
    started: Option<Instant>,
}

impl Suite {
    pub fn new() -> Self {
        Suite::default()
    }

    pub fn run(&mut self, id: u32) -> CriterionResult {
        let t = Instant::now();
        self.started.get_or_insert(t);
        let outcome = match id {
            1 => free_spectra(),
            2 => wronskian(),
            3 => picard(),
            4 => envelopes(),
            5 => identity(),
            6 => self.counting(),
            7 => self.edge_asymptotics(),
            8 => reality(),
            9 => resolvents(),
            10 => free_third_order(),
            11 => self.perturbed_third_order(),
            12 => self.reduction(),
            _ => Ok((false, format!("no criterion {id}"))),
        };
        let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        CriterionResult {
            id,
            title: title(id),
            passed,
            detail,
            seconds: t.elapsed().as_secs_f64(),
        }
    }

    fn interlacing(&mut self) -> Result<&InterlacingReport> {
        if self.interlacing.is_none() {
            let f = fixtures::rational();
            let b = (31.0 * PI).powi(2);
            self.interlacing = Some(interlacing_report(&f.spec, 5.0, b, &SpectrumConfig::default())?);
        }
        Ok(self.interlacing.as_ref().unwrap())
    }

    fn counting(&mut self) -> Outcome {
        let r = self.interlacing()?;
        let windows = r.windows.iter().filter(|w| w.count == w.expected).count();
        let inclusions = r.inclusions.iter().filter(|i| i.ok).count();
        let mut detail = format!(
            "{windows}/{} windows, {inclusions}/{} inclusions, min Delta^2 at Dirichlet {:.12}",
            r.windows.len(),
            r.inclusions.len(),
            r.min_delta_sq_dirichlet
        );
        if let Some(v) = r.violations.first() {
            detail.push_str(&format!("; {} violations, first: {v}", r.violations.len()));
        }
        Ok((r.violations.is_empty() && !r.windows.is_empty(), detail))
    }

    fn edge_asymptotics(&mut self) -> Outcome {
        let spec = fixtures::rational().spec;
        let means: Vec<f64> = (10..=30)
            .map(|n| spec.mean(C::new((PI * n as f64).powi(2), 0.0)).map(|m| m.norm()))
            .collect::<Result<_>>()?;
        let mean_ok = means.windows(2).all(|w| w[1] <= w[0] + 1e-15) && means[means.len() - 1] < 1e-3;
        // Offsets near 1e-13 sit below the spacing of doubles at (πn)² ~ 1e4,
        // so the trend is read from the split-form offsets; the eigenvalues
        // of the interlacing run must agree with them to their own accuracy.
        let r = self.interlacing()?;
        let mut dev = Vec::new();
        let mut worst_agreement: f64 = 0.0;
        for n in 10..=30 {
            let Some(&(_, Some(lo), Some(hi))) = r.edges.iter().find(|e| e.0 == n) else {
                return Ok((false, format!("edges of n = {n} missing")));
            };
            let c = (PI * n as f64).powi(2);
            let off = edge_offsets(&spec, n as u32)?;
            let agree = ((lo - c - off.minus).abs()).max((hi - c - off.plus).abs()) / c;
            worst_agreement = worst_agreement.max(agree);
            dev.push(off.minus.abs().max(off.plus.abs()));
        }
        let (slope, _) = log_log_fit(10, &dev);
        let last = dev[dev.len() - 1];
        let ups = dev.windows(2).filter(|w| w[1] >= w[0]).count();
        let ok = mean_ok && slope < 0.0 && ups == 0 && last < 0.05 && worst_agreement < 1e-12;
        Ok((
            ok,
            format!(
                "max |mean V| {:.2e}; |lambda - (pi n)^2| {:.3e} at n = 10, {last:.3e} at n = 30, log-log slope {slope:.2}, {ups} non-decreasing steps; scanned edges agree to {worst_agreement:.1e} relative",
                means.iter().cloned().fold(0.0, f64::max),
                dev[0]
            ),
        ))
    }

    fn third_order(&mut self) -> Result<&[(i64, Vec<ThirdOrderZero>, Vec<ThirdOrderZero>)]> {
        if self.third_order.is_none() {
            let c = fixtures::boussinesq_pq();
            let cfg = BoussinesqConfig::default();
            let mut rows = Vec::new();
            for n in 2..=8 {
                let (lo, hi) = window(n);
                rows.push((n, ramifications(&c, lo, hi, &cfg)?, three_point_eigenvalues(&c, lo, hi, &cfg)?));
            }
            self.third_order = Some(rows);
        }
        Ok(self.third_order.as_deref().unwrap())
    }

    fn perturbed_third_order(&mut self) -> Outcome {
        let c = fixtures::boussinesq_pq();
        let rows = self.third_order()?;
        let mut problems = Vec::new();
        let mut zeta_res = Vec::new();
        let mut ram_res = Vec::new();
        for (n, rams, tps) in rows {
            let m: u32 = rams.iter().map(|z| z.multiplicity).sum();
            if m != 2 || tps.len() != 1 || tps[0].multiplicity != 1 {
                problems.push(format!("window {n}: {m} ramifications, {} three-point", tps.len()));
                continue;
            }
            let lo = rams.first().unwrap().zeta.re;
            let hi = rams.last().unwrap().zeta.re;
            let z = tps[0].zeta.re;
            if !(z >= lo - 1e-6 && z <= hi + 1e-6) {
                problems.push(format!("window {n}: {z} outside [{lo}, {hi}]"));
            }
            if *n >= 4 {
                zeta_res.push((z - zeta_asymptotic(&c, *n as usize)).abs());
                let ra = ram_asymptotic(&c, *n as usize);
                let r = rams.iter().map(|r| (r.zeta.re - ra).abs()).fold(0.0, f64::max);
                ram_res.push(r / *n as f64);
            }
        }
        let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
        if zeta_res.len() == 5 && !decreasing(&zeta_res) {
            problems.push(format!("|zeta - asymptotic| not decreasing: {zeta_res:?}"));
        }
        if ram_res.len() == 5 && !decreasing(&ram_res) {
            problems.push(format!("ramification residual / n not decreasing: {ram_res:?}"));
        }
        let detail = if problems.is_empty() {
            format!(
                "windows 2..8 resolved; |zeta - asymptotic| {:.2e} -> {:.2e}, ramification residual/n {:.2e} -> {:.2e}",
                zeta_res[0], zeta_res[4], ram_res[0], ram_res[4]
            )
        } else {
            problems.join("; ")
        };
        Ok((problems.is_empty(), detail))
    }

    fn reduction(&mut self) -> Outcome {
        let c = fixtures::boussinesq_pq();
        let cfg = BoussinesqConfig::default();
        let scfg = SpectrumConfig {
            complex: ComplexSearch::Off,
            ..SpectrumConfig::default()
        };
        let rows: Vec<(i64, f64, f64)> = self
            .third_order()?
            .iter()
            .filter(|(n, rams, tps)| *n >= 3 && !rams.is_empty() && !tps.is_empty())
            .map(|(n, rams, tps)| (*n, rams[0].zeta.re, tps[0].zeta.re))
            .collect();
        if rows.len() != 6 {
            return Ok((false, format!("only {} of the windows 3..8 were resolved", rows.len())));
        }
        let nearest = |zeta: f64, problems: &[Problem]| -> Result<f64> {
            let (spec, lam0) = reduce_to_hill(&c, C::new(zeta, 0.0), &cfg)?;
            let l0 = lam0.re;
            let eigs = real_spectra(&spec, problems, l0 - 5.0, l0 + 5.0, &scfg)?;
            Ok(eigs
                .iter()
                .flatten()
                .map(|e| (e.lam.re - l0).abs())
                .fold(f64::INFINITY, f64::min))
        };
        let mut worst_ram: f64 = 0.0;
        let mut worst_tp: f64 = 0.0;
        for &(_, r, z) in &rows {
            worst_ram = worst_ram.max(nearest(r, &[Problem::Periodic, Problem::Antiperiodic])?);
            worst_tp = worst_tp.max(nearest(z, &[Problem::Dirichlet])?);
        }
        let total = self.started.map_or(0.0, |t| t.elapsed().as_secs_f64());
        let ok = worst_ram <= 1e-6 && worst_tp <= 1e-6 && total < 300.0;
        Ok((
            ok,
            format!("max lambda mismatch: 2-periodic {worst_ram:.2e}, Dirichlet {worst_tp:.2e}; suite time {total:.0} s"),
        ))
    }
}

/// Runs `ids` in order.
pub fn run(ids: &[u32]) -> Vec<CriterionResult> {
    let mut suite = Suite::new();
    ids.iter().map(|&id| suite.run(id)).collect()
}

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x5eed_1234)
}

/// Left edge of the window in which each fixture is sampled: the
/// exponential family grows like `e^{−λ}` to the left, and the rational one
/// has a pole at `−1`.
fn sample_floor(f: &Fixture) -> f64 {
    match f.spec {
        PotentialSpec::Exp(_) => 0.0,
        PotentialSpec::RationalDecay { shift, .. } => 0.5 - shift,
        _ => -20.0,
    }
}

fn random_lambda(rng: &mut ChaCha8Rng, f: &Fixture) -> C {
    let a = sample_floor(f);
    C::new(rng.gen_range(a..400.0), rng.gen_range(-1.0..1.0))
}

fn log_log_fit(n0: i64, ys: &[f64]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = ys
        .iter()
        .enumerate()
        .map(|(i, y)| (((n0 + i as i64) as f64).ln(), y.max(1e-300).ln()))
        .collect();
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let (mx, my) = (sx / m, sy / m);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn free_spectra() -> Outcome {
    let t = Instant::now();
    let problems = [Problem::Periodic, Problem::Antiperiodic, Problem::Dirichlet, Problem::Neumann];
    let eigs = spectra(&PotentialSpec::Zero, &problems, -0.5, 1000.0, &SpectrumConfig::default())?;
    let mut problems_found = Vec::new();
    for (problem, got) in problems.iter().zip(&eigs) {
        let expected: Vec<(f64, u32)> = (0..=10i64)
            .filter(|&n| match problem {
                Problem::Periodic => n % 2 == 0,
                Problem::Antiperiodic => n % 2 == 1,
                Problem::Dirichlet => n >= 1,
                _ => true,
            })
            .map(|n| {
                let m = match problem {
                    Problem::Periodic | Problem::Antiperiodic if n > 0 => 2,
                    _ => 1,
                };
                ((PI * n as f64).powi(2), m)
            })
            .collect();
        let matches = got.len() == expected.len()
            && got.iter().zip(&expected).all(|(e, &(v, m))| {
                e.multiplicity == m && e.lam.im == 0.0 && (e.lam.re - v).abs() <= 1e-9 * v.max(1.0)
            });
        if !matches {
            let got: Vec<(f64, u32)> = got.iter().map(|e| (e.lam.re, e.multiplicity)).collect();
            problems_found.push(format!("{}: got {got:?}", problem.name()));
        }
    }
    let secs = t.elapsed().as_secs_f64();
    if secs >= 10.0 {
        problems_found.push(format!("took {secs:.1} s"));
    }
    let total: usize = eigs.iter().map(Vec::len).sum();
    Ok(if problems_found.is_empty() {
        (true, format!("{total} eigenvalues equal (pi n)^2 with the expected multiplicities"))
    } else {
        (false, problems_found.join("; "))
    })
}

fn wronskian() -> Outcome {
    let cfg = IntegratorConfig {
        rel_tol: 1e-10,
        ..IntegratorConfig::default()
    };
    let all = fixtures::all();
    let mut rng = rng();
    let mut worst: (f64, String) = (0.0, String::new());
    for _ in 0..100 {
        let f = &all[rng.gen_range(0..all.len())];
        let lam = random_lambda(&mut rng, f);
        let d = integrate_fundamental(&f.spec, lam, 1.0, &cfg)?.wronskian_defect();
        if d > worst.0 {
            worst = (d, format!("{} at {lam}", f.name));
        }
    }
    Ok((worst.0 <= 1e-9, format!("max defect {:.2e} ({})", worst.0, worst.1)))
}

fn picard() -> Outcome {
    let reference = IntegratorConfig {
        rel_tol: 1e-13,
        abs_tol: 1e-15,
        ..IntegratorConfig::default()
    };
    let cfg = IntegratorConfig::default();
    let all = fixtures::all();
    let mut rng = rng();
    let mut draws = 0;
    let mut worst_ratio: f64 = 0.0;
    let mut failures = Vec::new();
    while draws < 50 {
        let f = &all[rng.gen_range(0..all.len())];
        let lam = random_lambda(&mut rng, f);
        let zn = ZNorm::new(lam);
        if f.spec.norm(lam)? / zn.z1 > 1.0 {
            continue;
        }
        draws += 1;
        let rk = integrate_fundamental(&f.spec, lam, 1.0, &reference)?;
        for order in 0..=3 {
            let p = picard_fundamental(&f.spec, lam, order, &cfg)?;
            let e = p.err_bound.unwrap_or(f64::NAN);
            let pairs = [
                ((p.theta1 - rk.theta1).norm(), e),
                ((p.phi1 - rk.phi1).norm(), e / zn.z1),
                ((p.dtheta1 - rk.dtheta1).norm(), e * zn.z1),
                ((p.dphi1 - rk.dphi1).norm(), e),
            ];
            for (diff, bound) in pairs {
                worst_ratio = worst_ratio.max(diff / (bound + 1e-9));
                if !(diff <= bound + 1e-9) {
                    failures.push(format!("{} at {lam}, N = {order}: {diff:.2e} > {bound:.2e}", f.name));
                }
            }
        }
    }
    Ok(match failures.first() {
        None => (true, format!("50 draws x 4 orders within bounds, worst usage {worst_ratio:.2}")),
        Some(first) => (false, format!("{} violations, first: {first}", failures.len())),
    })
}

fn envelopes() -> Outcome {
    let cfg = IntegratorConfig::default();
    let mut checked = 0;
    let mut failures = Vec::new();
    for f in [fixtures::constant(), fixtures::mathieu(), fixtures::exp01(), fixtures::rational()] {
        for i in 0..40 {
            let lam = C::new(10f64.powf(1.0 + 3.0 * i as f64 / 39.0), 0.0);
            for order in 1..=3 {
                let c = envelope_check(&f.spec, lam, order, &cfg)?;
                checked += 1;
                if !c.ok {
                    failures.push(format!(
                        "{} order {order} at {}: {:.2e} > {:.2e}",
                        f.name, lam.re, c.residual, c.bound
                    ));
                }
            }
        }
    }
    Ok(match failures.first() {
        None => (true, format!("{checked} checks within the envelopes")),
        Some(first) => (false, format!("{} of {checked} failed, first: {first}", failures.len())),
    })
}

/// Dirichlet eigenvalues of every fixture up to 400.
fn fixture_dirichlet(f: &Fixture) -> Result<Vec<Eigenvalue>> {
    let cfg = SpectrumConfig::default();
    Ok(spectra(&f.spec, &[Problem::Dirichlet], sample_floor(f), 400.0, &cfg)?.remove(0))
}

fn identity() -> Outcome {
    let cfg = IntegratorConfig::default();
    let mut rng = rng();
    let mut worst: f64 = 0.0;
    let mut min_sq = f64::INFINITY;
    let mut count = 0;
    for f in fixtures::all() {
        for _ in 0..200 {
            let lam = random_lambda(&mut rng, &f);
            worst = worst.max(discriminant(&f.spec, lam, &cfg)?.identity_residual());
        }
        for e in fixture_dirichlet(&f)? {
            let d = discriminant(&f.spec, e.lam, &cfg)?.delta;
            min_sq = min_sq.min((d * d).re);
            count += 1;
        }
    }
    Ok((
        worst <= 1e-9 && min_sq >= 1.0 - 1e-9,
        format!("max residual {worst:.2e}; min Delta^2 = {min_sq:.12} over {count} Dirichlet eigenvalues"),
    ))
}

fn reality() -> Outcome {
    let grid = GridOptions::default();
    let exp = fixtures::exp01();
    let cert = certify_halfplane(&exp.spec, 0.0, TWO_MINUS_SQRT3, &grid)?;
    let mu1 = cert.threshold;
    let mut problems = Vec::new();
    if !cert.certified || (mu1 - 0.37321).abs() > 5e-6 {
        problems.push(format!("half-plane threshold {mu1}, certified {}", cert.certified));
    }
    let five = [
        Problem::Quasi { k: 1.0 },
        Problem::Periodic,
        Problem::Antiperiodic,
        Problem::Dirichlet,
        Problem::Neumann,
        Problem::MixedDn,
        Problem::MixedNd,
    ];
    let boxed = SpectrumConfig {
        complex: ComplexSearch::Always(1.0),
        ..SpectrumConfig::default()
    };
    let found: Vec<Eigenvalue> = spectra(&exp.spec, &five, mu1, 200.0, &boxed)?.into_iter().flatten().collect();
    let max_im = found.iter().map(|e| e.lam.im.abs()).fold(0.0, f64::max);
    if max_im > 1e-8 {
        problems.push(format!("|Im lambda| up to {max_im:.2e} above mu1"));
    }

    // |Im λ₀| ≤ sup |Im V(·, λ₀)|, with the sup taken over a small box
    let mut located = found.len();
    let mut worst_excess = f64::NEG_INFINITY;
    for f in fixtures::all() {
        let eigs: Vec<Eigenvalue> = spectra(&f.spec, &five, sample_floor(&f), 150.0, &SpectrumConfig::default())?
            .into_iter()
            .flatten()
            .collect();
        located += eigs.len();
        for e in eigs.iter().chain(if f.name == "exp01" { found.iter() } else { [].iter() }) {
            let eps = 1e-6;
            let region = DomainSpec::Rect {
                a: e.lam.re - eps,
                b: e.lam.re + eps,
                r: e.lam.im.abs() + eps,
            };
            let xi = xi_functional(&f.spec, &region, &grid)?;
            worst_excess = worst_excess.max(e.lam.im.abs() - xi);
            if e.lam.im.abs() > xi + 1e-8 {
                problems.push(format!("{} eigenvalue {} has |Im| above xi = {xi:.3e}", f.name, e.lam));
            }
        }
    }
    Ok(if problems.is_empty() {
        (
            true,
            format!(
                "mu1 = {mu1:.5}; {} eigenvalues above it, max |Im| {max_im:.1e}; {located} located eigenvalues obey |Im| <= xi",
                found.len()
            ),
        )
    } else {
        (false, problems.join("; "))
    })
}

fn resolvents() -> Outcome {
    let cfg = IntegratorConfig::default();
    let mut worst: (f64, String) = (0.0, String::new());
    let forcing = |x: f64| C::new((2.0 * PI * x).cos() + x, 0.5 * x * x);
    let mut count = 0;
    for f in fixtures::all() {
        for j in 0..10 {
            let lam = C::new(0.3 + 6.1 * j as f64, 0.5);
            for kernel in [green_quasi(&f.spec, 1.0, lam, 400, &cfg)?, green_dirichlet(&f.spec, lam, 400, &cfg)?] {
                let r = resolvent_residual(&kernel, forcing, 16)?;
                count += 1;
                if r > worst.0 {
                    worst = (r, format!("{} {:?} at {lam}", f.name, kernel.boundary));
                }
            }
        }
    }
    Ok((worst.0 <= 1e-5, format!("{count} kernels, max residual {:.2e} ({})", worst.0, worst.1)))
}

fn free_third_order() -> Outcome {
    let c = ThirdOrderCoeffs::zero();
    let cfg = BoussinesqConfig::default();
    let (lo, _) = window(1);
    let (_, hi) = window(8);
    let rams = ramifications(&c, lo, hi, &cfg)?;
    let tps = three_point_eigenvalues(&c, lo, hi, &cfg)?;
    let mut problems = Vec::new();
    for (what, zeros) in [("ramification", &rams), ("three-point", &tps)] {
        let vals: Vec<f64> = zeros.iter().map(|z| z.zeta.re).collect();
        if vals.len() != 8 {
            problems.push(format!("{} {what} values: {vals:?}", vals.len()));
            continue;
        }
        for (n, v) in (1..=8).zip(&vals) {
            let want = unperturbed(n);
            if (v - want).abs() > 1e-7 * want {
                problems.push(format!("{what} n = {n}: {v} vs {want}"));
            }
        }
    }
    let mut worst_product: f64 = 0.0;
    for i in 0..60 {
        let r = 0.5 + (hi - 0.5) * i as f64 / 59.0;
        for zeta in [C::new(r, 0.0), C::new(r, 0.1 * r), C::new(-r, 0.05 * r)] {
            let m = integrate_third_order(&c, zeta, &cfg.integ)?;
            worst_product = worst_product.max(multipliers(&m).product_defect());
        }
    }
    if worst_product > 1e-9 {
        problems.push(format!("multiplier product deviates by {worst_product:.2e}"));
    }
    Ok(if problems.is_empty() {
        (
            true,
            format!(
                "n = 1..8 match (2 pi n/sqrt 3)^3 (n = 1: {:.6}); max |k1 k2 k3 - 1| {worst_product:.1e}",
                tps[0].zeta.re
            ),
        )
    } else {
        (false, problems.join("; "))
    })
}
