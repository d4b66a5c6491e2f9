//! Cross-checks against methods that share no code with the library:
//! piecewise-constant transfer matrices, fixed-step shooting, finite
//! differences, and the Fourier Hill-matrix table shipped in `fixtures/`.

use std::f64::consts::PI;

use hillbands::fixtures;
use hillbands::fundsol::{integrate_fundamental, IntegratorConfig};
use hillbands::potentials::{FourierProfile, PotentialSpec};
use hillbands::spectra::{
    assemble_bands, dirichlet_spectrum, edge_offsets, two_periodic_spectrum, SpectrumConfig,
};
use num_complex::Complex64 as C;

/// Monodromy of `−y″ + V y = λy` with `V` frozen at cell midpoints; each
/// cell contributes the exact transfer matrix of a constant potential.
fn transfer_delta(v: impl Fn(f64) -> f64, lam: f64, cells: usize) -> f64 {
    let h = 1.0 / cells as f64;
    let mut m = [[1.0, 0.0], [0.0, 1.0]];
    for i in 0..cells {
        let k2 = lam - v((i as f64 + 0.5) * h);
        let (c, s, ds) = if k2 > 0.0 {
            let k = k2.sqrt();
            ((k * h).cos(), (k * h).sin() / k, -k * (k * h).sin())
        } else if k2 < 0.0 {
            let k = (-k2).sqrt();
            ((k * h).cosh(), (k * h).sinh() / k, k * (k * h).sinh())
        } else {
            (1.0, h, 0.0)
        };
        let t = [[c, s], [ds, c]];
        m = [
            [t[0][0] * m[0][0] + t[0][1] * m[1][0], t[0][0] * m[0][1] + t[0][1] * m[1][1]],
            [t[1][0] * m[0][0] + t[1][1] * m[1][0], t[1][0] * m[0][1] + t[1][1] * m[1][1]],
        ];
    }
    (m[0][0] + m[1][1]) / 2.0
}

#[test]
fn discriminant_matches_transfer_matrices() {
    let cfg = IntegratorConfig::default();
    let q = FourierProfile {
        a0: 0.3,
        cos: vec![2.0, 0.0, -0.7],
        sin: vec![0.0, 1.1],
    };
    let spec = PotentialSpec::LambdaIndependent(q.clone());
    for lam in [-3.0, 0.5, 7.0, 40.0, 151.0] {
        let fd = integrate_fundamental(&spec, C::new(lam, 0.0), 1.0, &cfg).unwrap();
        // midpoint freezing is second order; Richardson removes the h² term
        let coarse = transfer_delta(|x| q.eval(x), lam, 2000);
        let fine = transfer_delta(|x| q.eval(x), lam, 4000);
        let extrapolated = (4.0 * fine - coarse) / 3.0;
        let scale = fd.delta().re.abs().max(1.0);
        assert!(
            (fd.delta().re - extrapolated).abs() < 1e-8 * scale,
            "lambda = {lam}: {} vs {extrapolated}",
            fd.delta().re
        );
    }
}

/// `φ(1, λ)` by classical RK4 with a fixed step, for a λ-dependent family.
fn shoot_phi(spec: &PotentialSpec<f64>, lam: f64, steps: usize) -> f64 {
    let h = 1.0 / steps as f64;
    let v = |x: f64| spec.eval_v(x, C::new(lam, 0.0)).unwrap().re;
    let f = |x: f64, y: [f64; 2]| [y[1], (v(x) - lam) * y[0]];
    let mut y = [0.0, 1.0];
    for i in 0..steps {
        let x = i as f64 * h;
        let k1 = f(x, y);
        let k2 = f(x + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
        let k3 = f(x + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
        let k4 = f(x + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
        y[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
    }
    y[0]
}

#[test]
fn dirichlet_matches_shooting() {
    for f in [fixtures::rational(), fixtures::exp01(), fixtures::cos01()] {
        let eigs = dirichlet_spectrum(&f.spec, 0.5, 450.0, &SpectrumConfig::default()).unwrap();
        assert_eq!(eigs.len(), 6, "{}", f.name);
        for e in &eigs {
            let g = |lam: f64| shoot_phi(&f.spec, lam, 4000);
            let (mut a, mut b) = (e.lam.re - 0.5, e.lam.re + 0.5);
            let ga = g(a);
            assert!(ga * g(b) < 0.0, "{}: no sign change around {}", f.name, e.lam.re);
            for _ in 0..60 {
                let m = (a + b) / 2.0;
                if g(m) * ga > 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            assert!((e.lam.re - a).abs() < 1e-8 * e.lam.re, "{}: {} vs shooting {a}", f.name, e.lam.re);
        }
    }
}

/// Eigenvalues below `x` of a symmetric tridiagonal matrix (Sturm count).
fn count_below(diag: &[f64], off: f64, x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for (i, &a) in diag.iter().enumerate() {
        d = a - x - if i == 0 { 0.0 } else { off * off / d };
        if d == 0.0 {
            d = 1e-300;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn fd_dirichlet(v: impl Fn(f64) -> f64, intervals: usize, k: usize) -> f64 {
    let h = 1.0 / intervals as f64;
    let diag: Vec<f64> = (1..intervals).map(|i| 2.0 / (h * h) + v(i as f64 * h)).collect();
    let off = -1.0 / (h * h);
    let (mut a, mut b) = (-1e3, 1e4);
    for _ in 0..200 {
        let m = (a + b) / 2.0;
        if count_below(&diag, off, m) > k {
            b = m;
        } else {
            a = m;
        }
    }
    (a + b) / 2.0
}

#[test]
fn dirichlet_matches_finite_differences() {
    let f = fixtures::mathieu();
    let v = |x: f64| f.spec.eval_v(x, C::new(0.0, 0.0)).unwrap().re;
    let eigs = dirichlet_spectrum(&f.spec, -20.0, 300.0, &SpectrumConfig::default()).unwrap();
    assert_eq!(eigs.len(), 5);
    for (k, e) in eigs.iter().enumerate() {
        // three-level Richardson on the O(h²) + O(h⁴) error
        let a = fd_dirichlet(v, 400, k);
        let b = fd_dirichlet(v, 800, k);
        let c = fd_dirichlet(v, 1600, k);
        let r1 = (4.0 * b - a) / 3.0;
        let r2 = (4.0 * c - b) / 3.0;
        let r = (16.0 * r2 - r1) / 15.0;
        assert!((e.lam.re - r).abs() < 1e-6 * e.lam.re.abs().max(1.0), "k = {k}: {} vs {r}", e.lam.re);
    }
}

#[test]
fn mathieu_gaps_match_hill_matrix() {
    let table = fixtures::mathieu_gaps().unwrap();
    let f = fixtures::mathieu();
    assert_eq!(hillbands::potentials::PotentialSpec::try_from(&table.potential).unwrap(), f.spec);

    let cfg = SpectrumConfig::default();
    let b = (PI * 12.5).powi(2);
    let eigs = two_periodic_spectrum(&f.spec, -5.0, b, &cfg).unwrap();
    assert!((eigs[0].lam.re - table.ground).abs() < 1e-9);
    let assembly = assemble_bands(&f.spec, -5.0, b, &cfg).unwrap();
    let structure = assembly.structure.expect("lambda-independent potentials are certified");
    for row in &table.gaps {
        let gap = structure.gaps.iter().find(|g| g.n == row.n).expect("every gap is listed");
        let tol = 1e-12 * row.hi.abs().max(1.0) + 1e-9;
        assert!((gap.lo - row.lo).abs() < tol && (gap.hi - row.hi).abs() < tol, "n = {}: {gap:?} vs {row:?}", row.n);
        assert!(((gap.hi - gap.lo) - row.width).abs() < 2.0 * tol);
    }
}

#[test]
fn split_offsets_match_hill_matrix() {
    let table = fixtures::mathieu_gaps().unwrap();
    let f = fixtures::mathieu();
    for row in table.gaps.iter().filter(|r| r.n >= 5) {
        let e = edge_offsets(&f.spec, row.n as u32).unwrap();
        let c = (PI * row.n as f64).powi(2);
        // eigvalsh error scales with the largest diagonal entry, (160π)²
        let tol = 5e-10;
        assert!((e.minus - (row.lo - c)).abs() < tol, "n = {}: {} vs {}", row.n, e.minus, row.lo - c);
        assert!((e.plus - (row.hi - c)).abs() < tol, "n = {}", row.n);
        assert!(e.minus <= e.dirichlet.min(e.neumann) && e.dirichlet.max(e.neumann) <= e.plus);
    }
}
