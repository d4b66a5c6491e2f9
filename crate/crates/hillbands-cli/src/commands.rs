use std::cell::Cell;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context as _, Result};
use clap::{Args, Subcommand, ValueEnum};
use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde_json::{json, Value};

use hillbands::boussinesq::{
    ram_asymptotic, ramifications, reduce_to_hill, three_point_eigenvalues, window, zeta_asymptotic,
    BoussinesqConfig, ThirdOrderCoeffs, ThirdOrderZero,
};
use hillbands::fundsol::IntegratorConfig;
use hillbands::lyapunov::discriminant as delta_at;
use hillbands::potentials::{PotentialConfig, PotentialSpec};
use hillbands::reality::{
    certify_derivative, certify_halfplane, certify_halfstrip, certify_window, GridOptions, TWO_MINUS_SQRT3,
};
use hillbands::resolvent::{green_dirichlet, green_quasi, resolvent_residual};
use hillbands::spectra::{assemble_bands, band_functions, spectra, ComplexSearch, Eigenvalue, Problem, SpectrumConfig};
use hillbands::verify;

use crate::output::{num, Report};
use crate::{Cli, PotentialArg};

/// Raised after the report is written, when the run completed but some
/// check it performed did not pass.
#[derive(Debug)]
pub struct NumericalFailure(pub String);

impl std::fmt::Display for NumericalFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for NumericalFailure {}

pub struct Context {
    pub integ: IntegratorConfig<f64>,
    pub failure: Cell<Option<NumericalFailure>>,
}

impl Context {
    pub fn new(cli: &Cli) -> Result<Self> {
        let integ = IntegratorConfig {
            rel_tol: cli.rel_tol,
            abs_tol: cli.abs_tol,
            ..IntegratorConfig::default()
        };
        integ.validate()?;
        Ok(Context {
            integ,
            failure: Cell::new(None),
        })
    }

    fn spectrum_config(&self, complex: ComplexSearch) -> SpectrumConfig {
        SpectrumConfig {
            integ: self.integ,
            complex,
            ..SpectrumConfig::default()
        }
    }
}

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{} is not valid JSON", path.display()))
}

/// Accepts a bare potential config or any document this tool emitted,
/// which carries the config under `"potential"`.
fn load_potential(arg: &PotentialArg) -> Result<(PotentialSpec<f64>, PotentialConfig)> {
    let mut doc = read_json(&arg.potential)?;
    if let Some(inner) = doc.get_mut("potential") {
        doc = inner.take();
    }
    let cfg: PotentialConfig =
        serde_json::from_value(doc).with_context(|| format!("{}: bad potential config", arg.potential.display()))?;
    let spec = PotentialSpec::try_from(&cfg).with_context(|| arg.potential.display().to_string())?;
    Ok((spec, cfg))
}

fn load_coeffs(path: &Path) -> Result<ThirdOrderCoeffs> {
    let mut doc = read_json(path)?;
    if let Some(inner) = doc.get_mut("coeffs") {
        doc = inner.take();
    }
    let c = ThirdOrderCoeffs::from_json(&doc.to_string()).with_context(|| path.display().to_string())?;
    Ok(c)
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or("expected a:b")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    Ok((a, b))
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = parse_pair(s)?;
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(format!("need finite a < b, got {a}:{b}"));
    }
    Ok((a, b))
}

fn parse_complex_search(s: &str) -> Result<ComplexSearch, String> {
    match s {
        "off" => Ok(ComplexSearch::Off),
        "auto" => Ok(ComplexSearch::Auto),
        h => match h.parse::<f64>() {
            Ok(h) if h > 0.0 => Ok(ComplexSearch::Always(h)),
            _ => Err("expected off, auto or a positive height".into()),
        },
    }
}

fn parse_complex(s: &str) -> Result<C, String> {
    let (re, im) = s.split_once(',').unwrap_or((s, "0"));
    let re: f64 = re.trim().parse().map_err(|e| format!("{re:?}: {e}"))?;
    let im: f64 = im.trim().parse().map_err(|e| format!("{im:?}: {e}"))?;
    Ok(C::new(re, im))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProblemArg {
    Quasi,
    Periodic,
    Antiperiodic,
    Dirichlet,
    Neumann,
    MixedDn,
    MixedNd,
}

impl ProblemArg {
    fn problems(self, ks: &[f64]) -> Result<Vec<Problem>> {
        Ok(match self {
            ProblemArg::Quasi => {
                ensure!(!ks.is_empty(), "--problem quasi needs at least one --k");
                ks.iter().map(|&k| Problem::Quasi { k }).collect()
            }
            ProblemArg::Periodic => vec![Problem::Periodic],
            ProblemArg::Antiperiodic => vec![Problem::Antiperiodic],
            ProblemArg::Dirichlet => vec![Problem::Dirichlet],
            ProblemArg::Neumann => vec![Problem::Neumann],
            ProblemArg::MixedDn => vec![Problem::MixedDn],
            ProblemArg::MixedNd => vec![Problem::MixedNd],
        })
    }
}

fn sorted(mut eigs: Vec<Eigenvalue>) -> Vec<Eigenvalue> {
    eigs.sort_by(|p, q| p.lam.re.total_cmp(&q.lam.re).then(p.lam.im.total_cmp(&q.lam.im)));
    eigs
}

fn eig_record(e: &Eigenvalue) -> Value {
    let k = match e.problem {
        Problem::Quasi { k } => Some(k),
        _ => None,
    };
    json!({
        "problem": e.problem.name(),
        "k": k,
        "re": e.lam.re,
        "im": e.lam.im,
        "multiplicity": e.multiplicity,
        "index": e.index,
        "residual": e.residual,
    })
}

const EIG_HEADER: [&str; 7] = ["problem", "k", "re", "im", "multiplicity", "index", "residual"];

fn eig_row(e: &Eigenvalue) -> Vec<String> {
    let k = match e.problem {
        Problem::Quasi { k } => num(k),
        _ => String::new(),
    };
    vec![
        e.problem.name().to_string(),
        k,
        num(e.lam.re),
        num(e.lam.im),
        e.multiplicity.to_string(),
        e.index.map(|i| i.to_string()).unwrap_or_default(),
        num(e.residual),
    ]
}

fn eig_table(report: &mut Report, eigs: &[Eigenvalue]) -> Result<()> {
    report.field("eigenvalues", eigs.iter().map(eig_record).collect::<Vec<_>>())?;
    report.table(EIG_HEADER.to_vec(), eigs.iter().map(eig_row).collect());
    Ok(())
}

#[derive(Args, Debug)]
pub struct EigsArgs {
    #[command(flatten)]
    potential: PotentialArg,
    #[arg(long, value_enum)]
    problem: ProblemArg,
    /// Quasi-momenta for `--problem quasi`, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    k: Vec<f64>,
    /// Real window `a:b`.
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    region: (f64, f64),
    /// Off-axis search: `off`, `auto`, or a half-height.
    #[arg(long, value_parser = parse_complex_search, default_value = "auto")]
    complex: ComplexSearch,
}

pub fn eigs(ctx: &Context, args: &EigsArgs) -> Result<Report> {
    let (spec, cfg) = load_potential(&args.potential)?;
    let problems = args.problem.problems(&args.k)?;
    let (a, b) = args.region;
    let found = spectra(&spec, &problems, a, b, &ctx.spectrum_config(args.complex))?;
    let eigs = sorted(found.into_iter().flatten().collect());
    let mut report = Report::new("eigs");
    report
        .field("potential", &cfg)?
        .field("region", [a, b])?
        .field("complex", args.complex)?;
    eig_table(&mut report, &eigs)?;
    Ok(report)
}

#[derive(Args, Debug)]
pub struct BandsArgs {
    #[command(flatten)]
    potential: PotentialArg,
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    region: (f64, f64),
    /// Points of the uniform k grid on [0, π].
    #[arg(long, default_value_t = 33)]
    k_points: usize,
}

pub fn bands(ctx: &Context, args: &BandsArgs) -> Result<Report> {
    ensure!(args.k_points >= 2, "--k-points must be at least 2");
    let (spec, cfg) = load_potential(&args.potential)?;
    let (a, b) = args.region;
    let scfg = ctx.spectrum_config(ComplexSearch::Auto);
    let assembly = assemble_bands(&spec, a, b, &scfg)?;
    let mut report = Report::new("bands");
    report
        .field("potential", &cfg)?
        .field("region", [a, b])?
        .field("certificate", &assembly.certificate)?
        .field("warning", &assembly.warning)?;
    match &assembly.structure {
        Some(structure) => {
            let grid: Vec<f64> = (0..args.k_points).map(|i| PI * i as f64 / (args.k_points - 1) as f64).collect();
            let table = band_functions(&spec, &grid, a, b, &scfg)?;
            let rows = table
                .rows()
                .into_iter()
                .map(|(k, n, lam)| vec![num(k), n.to_string(), num(lam)])
                .collect();
            report
                .field("bands", &structure.bands)?
                .field("gaps", &structure.gaps)?
                .field("band_functions", &table)?
                .field("eigenvalues", assembly.eigenvalues.iter().map(eig_record).collect::<Vec<_>>())?;
            report.table(vec!["k", "band_index", "lambda"], rows);
        }
        None => {
            if let Some(w) = &assembly.warning {
                eprintln!("warning: {w}");
            }
            eig_table(&mut report, &sorted(assembly.eigenvalues.clone()))?;
        }
    }
    Ok(report)
}

#[derive(Args, Debug)]
pub struct DiscriminantArgs {
    #[command(flatten)]
    potential: PotentialArg,
    /// Range of Re λ, `a:b`.
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    region: (f64, f64),
    #[arg(long, default_value_t = 401)]
    points: usize,
    /// Fixed Im λ of the sampled line.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    im: f64,
}

pub fn discriminant(ctx: &Context, args: &DiscriminantArgs) -> Result<Report> {
    ensure!(args.points >= 2, "--points must be at least 2");
    let (spec, cfg) = load_potential(&args.potential)?;
    let (a, b) = args.region;
    let lams: Vec<C> = (0..args.points)
        .map(|i| C::new(a + (b - a) * i as f64 / (args.points - 1) as f64, args.im))
        .collect();
    let integ = ctx.integ;
    let samples = lams
        .par_iter()
        .map(|&lam| delta_at(&spec, lam, &integ))
        .collect::<hillbands::Result<Vec<_>>>()?;
    let rows: Vec<Vec<String>> = samples
        .iter()
        .map(|s| {
            vec![
                num(s.lam.re),
                num(s.lam.im),
                num(s.delta.re),
                num(s.delta.im),
                num(s.identity_residual()),
            ]
        })
        .collect();
    let records: Vec<Value> = samples
        .iter()
        .map(|s| {
            json!({
                "re": s.lam.re, "im": s.lam.im,
                "delta_re": s.delta.re, "delta_im": s.delta.im,
                "identity_residual": s.identity_residual(),
            })
        })
        .collect();
    let mut report = Report::new("discriminant");
    report.field("potential", &cfg)?.field("samples", records)?;
    report.table(vec!["re", "im", "delta_re", "delta_im", "identity_residual"], rows);
    Ok(report)
}

#[derive(Args, Debug)]
#[group(id = "region", required = true, multiple = false, args = ["halfplane", "halfstrip", "window", "derivative"])]
pub struct CertifyArgs {
    #[command(flatten)]
    potential: PotentialArg,
    /// Half-plane `Re λ > a`.
    #[arg(long, allow_negative_numbers = true)]
    halfplane: Option<f64>,
    /// Half-strip `Re λ > a`, `|Im λ| < ν₀`, given as `a:ν₀`.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    halfstrip: Option<(f64, f64)>,
    /// Rectangle around the real window `a:b`.
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    window: Option<(f64, f64)>,
    /// Derivative condition on the real window `a:b`.
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    derivative: Option<(f64, f64)>,
    /// Constant of the half-plane and half-strip bounds; values above
    /// 2 − √3 give unproven certificates.
    #[arg(long, default_value_t = TWO_MINUS_SQRT3)]
    constant: f64,
    #[arg(long, default_value_t = 64)]
    x_points: usize,
    #[arg(long, default_value_t = 32)]
    lam_points: usize,
}

pub fn certify(_ctx: &Context, args: &CertifyArgs) -> Result<Report> {
    let (spec, cfg) = load_potential(&args.potential)?;
    let opts = GridOptions {
        x_points: args.x_points,
        lam_points: args.lam_points,
    };
    let cert = if let Some(a) = args.halfplane {
        certify_halfplane(&spec, a, args.constant, &opts)?
    } else if let Some((a, nu0)) = args.halfstrip {
        certify_halfstrip(&spec, a, nu0, args.constant, &opts)?
    } else if let Some((a, b)) = args.window {
        certify_window(&spec, a, b, &opts)?
    } else if let Some((a, b)) = args.derivative {
        certify_derivative(&spec, a, b, &opts)?
    } else {
        bail!("one of --halfplane, --halfstrip, --window, --derivative is required");
    };
    let mut report = Report::new("certify");
    report.field("potential", &cfg)?.field("certificate", &cert)?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundaryArg {
    Quasi,
    Dirichlet,
}

#[derive(Args, Debug)]
pub struct ResolventArgs {
    #[command(flatten)]
    potential: PotentialArg,
    /// `re,im`.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    lambda: C,
    #[arg(long, value_enum, default_value = "quasi")]
    boundary: BoundaryArg,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    k: f64,
    /// Intervals of the kernel mesh.
    #[arg(long, default_value_t = 400)]
    mesh: usize,
    /// Gauss–Legendre order per mesh interval.
    #[arg(long, default_value_t = 16)]
    quad: usize,
}

/// The forcing the residual is measured on: smooth, non-periodic and
/// complex, so neither boundary condition is satisfied by accident.
fn forcing(x: f64) -> C {
    C::new((2.0 * PI * x).cos() + x, 0.5 * x * x)
}

pub fn resolvent_check(ctx: &Context, args: &ResolventArgs) -> Result<Report> {
    let (spec, cfg) = load_potential(&args.potential)?;
    let kernel = match args.boundary {
        BoundaryArg::Quasi => green_quasi(&spec, args.k, args.lambda, args.mesh, &ctx.integ)?,
        BoundaryArg::Dirichlet => green_dirichlet(&spec, args.lambda, args.mesh, &ctx.integ)?,
    };
    let residual = resolvent_residual(&kernel, forcing, args.quad)?;
    let mut report = Report::new("resolvent-check");
    report
        .field("potential", &cfg)?
        .field("lambda", [args.lambda.re, args.lambda.im])?
        .field("boundary", kernel.boundary)?
        .field("forcing", "cos(2 pi x) + x + 0.5 i x^2")?
        .field("mesh", args.mesh)?
        .field("residual", residual)?
        .field("kernel_sup", kernel.sup_norm(64))?;
    report.table(
        vec!["boundary", "re", "im", "residual"],
        vec![vec![
            format!("{:?}", args.boundary).to_lowercase(),
            num(args.lambda.re),
            num(args.lambda.im),
            num(residual),
        ]],
    );
    Ok(report)
}

#[derive(Args, Debug)]
pub struct WindowArgs {
    /// `{"p": …, "q": …}` Fourier coefficients.
    #[arg(long)]
    coeffs: std::path::PathBuf,
    #[arg(long, default_value_t = 1)]
    n_min: i64,
    #[arg(long)]
    n_max: i64,
}

#[derive(Subcommand, Debug)]
pub enum BoussinesqCommand {
    /// Real ramification points, window by window.
    Ramifications(WindowArgs),
    /// Eigenvalues of y(0) = y(1) = y(2) = 0, window by window.
    Threepoint(WindowArgs),
    /// The Hill potential of the reduced equation at a real ζ.
    Reduce {
        #[arg(long)]
        coeffs: std::path::PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        zeta: f64,
    },
}

pub fn boussinesq(ctx: &Context, cmd: &BoussinesqCommand) -> Result<Report> {
    let cfg = BoussinesqConfig {
        integ: ctx.integ,
        ..BoussinesqConfig::default()
    };
    let (args, ramification) = match cmd {
        BoussinesqCommand::Ramifications(a) => (a, true),
        BoussinesqCommand::Threepoint(a) => (a, false),
        BoussinesqCommand::Reduce { coeffs, zeta } => {
            let c = load_coeffs(coeffs)?;
            let (spec, lam0) = reduce_to_hill(&c, C::new(*zeta, 0.0), &cfg)?;
            let mut report = Report::new("boussinesq-reduce");
            report
                .field("coeffs", &c)?
                .field("zeta", zeta)?
                .field("lambda0", lam0.re)?
                .field("potential", spec.to_config())?;
            return Ok(report);
        }
    };
    ensure!(args.n_min >= 1 && args.n_max >= args.n_min, "need 1 <= --n-min <= --n-max");
    let c = load_coeffs(&args.coeffs)?;
    let windows: Vec<i64> = (args.n_min..=args.n_max).collect();
    let found = windows
        .iter()
        .map(|&n| {
            let (lo, hi) = window(n);
            let zeros = if ramification {
                ramifications(&c, lo, hi, &cfg)?
            } else {
                three_point_eigenvalues(&c, lo, hi, &cfg)?
            };
            Ok((n, zeros))
        })
        .collect::<hillbands::Result<Vec<(i64, Vec<ThirdOrderZero>)>>>()?;
    let asymptotic = |n: i64| {
        if ramification {
            ram_asymptotic(&c, n as usize)
        } else {
            zeta_asymptotic(&c, n as usize)
        }
    };
    let mut records = Vec::new();
    let mut rows = Vec::new();
    for (n, zeros) in &found {
        for z in zeros {
            records.push(json!({
                "problem": z.problem.name(),
                "window": n,
                "re": z.zeta.re,
                "im": z.zeta.im,
                "multiplicity": z.multiplicity,
                "residual": z.residual,
                "asymptotic": asymptotic(*n),
            }));
            rows.push(vec![
                z.problem.name().to_string(),
                n.to_string(),
                num(z.zeta.re),
                num(z.zeta.im),
                z.multiplicity.to_string(),
                num(z.residual),
                num(asymptotic(*n)),
            ]);
        }
    }
    let mut report = Report::new(if ramification { "boussinesq-ramifications" } else { "boussinesq-threepoint" });
    report.field("coeffs", &c)?.field("zeros", records)?;
    report.table(
        vec!["problem", "window", "re", "im", "multiplicity", "residual", "asymptotic"],
        rows,
    );
    Ok(report)
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Criteria to run, comma separated; all by default.
    #[arg(long, value_delimiter = ',')]
    only: Vec<u32>,
}

pub fn verify(ctx: &Context, args: &VerifyArgs) -> Result<Report> {
    let ids: Vec<u32> = if args.only.is_empty() { verify::CRITERIA.to_vec() } else { args.only.clone() };
    for id in &ids {
        ensure!(verify::CRITERIA.contains(id), "no criterion {id}");
    }
    let results = verify::run(&ids);
    for r in &results {
        eprintln!("{r}");
    }
    let failed: Vec<String> = results.iter().filter(|r| !r.passed).map(|r| r.id.to_string()).collect();
    if !failed.is_empty() {
        ctx.failure.set(Some(NumericalFailure(format!("criteria failed: {}", failed.join(", ")))));
    }
    let rows = results
        .iter()
        .map(|r| {
            vec![
                r.id.to_string(),
                if r.passed { "pass" } else { "fail" }.to_string(),
                format!("{:.3}", r.seconds),
                format!("\"{}\"", r.detail.replace('"', "'")),
            ]
        })
        .collect();
    let mut report = Report::new("verify");
    report.field("results", &results)?;
    report.table(vec!["id", "status", "seconds", "detail"], rows);
    Ok(report)
}
