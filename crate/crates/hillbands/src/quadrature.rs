//! Gauss–Legendre rules, composite panels with cumulative integration, and an
//! adaptive Gauss–Kronrod integrator for contour integrals.

use num_complex::{Complex, Complex64};

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// `P_0(t), …, P_n(t)` by the three-term recurrence.
pub fn legendre_all<T: Real>(n: usize, t: T) -> Vec<T> {
    let mut p = Vec::with_capacity(n + 1);
    p.push(T::one());
    if n >= 1 {
        p.push(t);
    }
    for k in 1..n {
        let kf: T = lit(k as f64);
        let next = ((kf + kf + T::one()) * t * p[k] - kf * p[k - 1]) / (kf + T::one());
        p.push(next);
    }
    p
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// nodes ascending.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1, "Gauss–Legendre order must be positive");
    let nf: T = lit(n as f64);
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let half = (n + 1) / 2;
    for i in 0..half {
        let mut t: T = (T::PI() * (lit::<T>(i as f64) + lit(0.75)) / (nf + lit(0.5))).cos();
        for _ in 0..100 {
            let p = legendre_all(n, t);
            let pn = p[n];
            let pn1 = p[n - 1];
            let dp = nf * (t * pn - pn1) / (t * t - T::one());
            let dt = pn / dp;
            t = t - dt;
            if dt.abs() <= T::epsilon() * lit(4.0) {
                break;
            }
        }
        let p = legendre_all(n, t);
        let dp = nf * (t * p[n] - p[n - 1]) / (t * t - T::one());
        let w = lit::<T>(2.0) / ((T::one() - t * t) * dp * dp);
        nodes[n - 1 - i] = t;
        nodes[i] = -t;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = T::zero();
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre rule over equal panels of `[a, b]` that can also
/// integrate cumulatively: `∫_a^x f` at every node or at arbitrary `x`.
#[derive(Debug, Clone)]
pub struct PanelRule<T> {
    a: T,
    panel_width: T,
    panels: usize,
    ref_nodes: Vec<T>,
    ref_weights: Vec<T>,
    /// `cum[i][j]`: weight of node `j` in `∫_{-1}^{t_i}` on the reference panel.
    cum: Vec<Vec<T>>,
}

impl<T: Real> PanelRule<T> {
    pub fn new(a: T, b: T, panels: usize, order: usize) -> Self {
        assert!(panels >= 1 && order >= 1 && b > a);
        let (ref_nodes, ref_weights) = gauss_legendre::<T>(order);
        let leg: Vec<Vec<T>> = ref_nodes.iter().map(|&t| legendre_all(order, t)).collect();
        let cum = ref_nodes
            .iter()
            .map(|&ti| {
                let q = legendre_integrals(order, ti);
                (0..order)
                    .map(|j| {
                        let mut s = T::zero();
                        for k in 0..order {
                            s = s + (lit::<T>(k as f64) + lit(0.5)) * leg[j][k] * q[k];
                        }
                        ref_weights[j] * s
                    })
                    .collect()
            })
            .collect();
        PanelRule {
            a,
            panel_width: (b - a) / lit(panels as f64),
            panels,
            ref_nodes,
            ref_weights,
            cum,
        }
    }

    pub fn order(&self) -> usize {
        self.ref_nodes.len()
    }

    pub fn len(&self) -> usize {
        self.panels * self.order()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All physical nodes, ascending.
    pub fn nodes(&self) -> Vec<T> {
        let h = self.panel_width / lit(2.0);
        (0..self.panels)
            .flat_map(|p| {
                let mid = self.a + self.panel_width * (lit::<T>(p as f64) + lit(0.5));
                self.ref_nodes.iter().map(move |&t| mid + h * t)
            })
            .collect()
    }

    /// Physical weights aligned with [`nodes`](Self::nodes).
    pub fn weights(&self) -> Vec<T> {
        let h = self.panel_width / lit(2.0);
        (0..self.panels)
            .flat_map(|_| self.ref_weights.iter().map(move |&w| w * h))
            .collect()
    }

    pub fn integrate(&self, values: &[Complex<T>]) -> Complex<T> {
        assert_eq!(values.len(), self.len());
        let h = self.panel_width / lit(2.0);
        let m = self.order();
        let mut total = Complex::new(T::zero(), T::zero());
        for (i, v) in values.iter().enumerate() {
            total = total + *v * (self.ref_weights[i % m] * h);
        }
        total
    }

    /// `∫_a^{x_i} f` at every node `x_i`.
    pub fn cumulative_at_nodes(&self, values: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(values.len(), self.len());
        let h = self.panel_width / lit(2.0);
        let m = self.order();
        let zero = Complex::new(T::zero(), T::zero());
        let mut out = Vec::with_capacity(values.len());
        let mut base = zero;
        for p in 0..self.panels {
            let chunk = &values[p * m..(p + 1) * m];
            for row in &self.cum {
                let mut s = zero;
                for (w, v) in row.iter().zip(chunk) {
                    s = s + *v * *w;
                }
                out.push(base + s * h);
            }
            let mut full = zero;
            for (w, v) in self.ref_weights.iter().zip(chunk) {
                full = full + *v * *w;
            }
            base = base + full * h;
        }
        out
    }

    /// `∫_a^x f` for `x` in the rule's interval, using the panel's Legendre
    /// interpolant.
    pub fn cumulative_at(&self, values: &[Complex<T>], x: T) -> Complex<T> {
        assert_eq!(values.len(), self.len());
        let m = self.order();
        let h = self.panel_width / lit(2.0);
        let zero = Complex::new(T::zero(), T::zero());
        let rel = ((x - self.a) / self.panel_width).max(T::zero());
        let p = rel.floor().to_usize().unwrap_or(0).min(self.panels - 1);
        let mut base = zero;
        for q in 0..p {
            for (w, v) in self.ref_weights.iter().zip(&values[q * m..(q + 1) * m]) {
                base = base + *v * (*w * h);
            }
        }
        let mid = self.a + self.panel_width * (lit::<T>(p as f64) + lit(0.5));
        let t = ((x - mid) / h).max(-T::one()).min(T::one());
        let qk = legendre_integrals(m, t);
        let chunk = &values[p * m..(p + 1) * m];
        let mut s = zero;
        for (j, v) in chunk.iter().enumerate() {
            let leg = legendre_all(m, self.ref_nodes[j]);
            let mut c = T::zero();
            for k in 0..m {
                c = c + (lit::<T>(k as f64) + lit(0.5)) * leg[k] * qk[k];
            }
            s = s + *v * (self.ref_weights[j] * c);
        }
        base + s * h
    }
}

/// `∫_{-1}^t P_k` for `k = 0..n-1`.
fn legendre_integrals<T: Real>(n: usize, t: T) -> Vec<T> {
    let p = legendre_all(n + 1, t);
    (0..n)
        .map(|k| {
            if k == 0 {
                t + T::one()
            } else {
                (p[k + 1] - p[k - 1]) / lit(2.0 * k as f64 + 1.0)
            }
        })
        .collect()
}

const GK_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const GK_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One Kronrod-15 / Gauss-7 panel: returns (K15 estimate, |K15 − G7|).
pub fn gk15<F>(f: &mut F, a: f64, b: f64) -> Result<(Complex64, f64)>
where
    F: FnMut(f64) -> Result<Complex64>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut k = fc * GK_WK[7];
    let mut g = fc * GK_WG[3];
    for i in 0..7 {
        let f1 = f(c - h * GK_X[i])?;
        let f2 = f(c + h * GK_X[i])?;
        k += (f1 + f2) * GK_WK[i];
        if i % 2 == 1 {
            g += (f1 + f2) * GK_WG[i / 2];
        }
    }
    Ok((k * h, ((k - g) * h).norm()))
}

/// Adaptive Gauss–Kronrod integration of a complex integrand along `[a, b]`,
/// starting from `initial` equal pieces and bisecting wherever the local
/// error estimate exceeds its share of `abs_tol`.
pub fn adaptive_gk15<F>(
    mut f: F,
    a: f64,
    b: f64,
    initial: usize,
    abs_tol: f64,
    max_depth: usize,
) -> Result<Complex64>
where
    F: FnMut(f64) -> Result<Complex64>,
{
    let n = initial.max(1);
    let width = (b - a) / n as f64;
    let mut total = Complex64::new(0.0, 0.0);
    let mut stack: Vec<(f64, f64, usize)> = (0..n)
        .rev()
        .map(|i| (a + width * i as f64, a + width * (i + 1) as f64, 0))
        .collect();
    let span = (b - a).abs();
    while let Some((lo, hi, depth)) = stack.pop() {
        let (val, err) = gk15(&mut f, lo, hi)?;
        let share = abs_tol * ((hi - lo).abs() / span).max(1e-3);
        if err <= share || depth >= max_depth {
            if err > share && depth >= max_depth {
                return Err(Error::Depth(max_depth));
            }
            total += val;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre::<f64>(8);
        // degree 15 is the exactness limit for 8 nodes
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn gauss_legendre_f32() {
        let (_, w) = gauss_legendre::<f32>(16);
        let s: f32 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-5);
    }

    #[test]
    fn cumulative_matches_antiderivative() {
        let rule = PanelRule::<f64>::new(0.0, 1.0, 4, 12);
        let vals: Vec<Complex64> = rule
            .nodes()
            .iter()
            .map(|&x| Complex64::new((3.0 * x).cos(), x * x))
            .collect();
        let cum = rule.cumulative_at_nodes(&vals);
        for (x, c) in rule.nodes().iter().zip(&cum) {
            let exact = Complex64::new((3.0 * x).sin() / 3.0, x.powi(3) / 3.0);
            assert!((c - exact).norm() < 1e-13, "{x}");
        }
        for &x in &[0.0f64, 0.1, 0.37, 0.5, 0.99, 1.0] {
            let exact = Complex64::new((3.0 * x).sin() / 3.0, x.powi(3) / 3.0);
            assert!((rule.cumulative_at(&vals, x) - exact).norm() < 1e-13, "{x}");
        }
        let total = rule.integrate(&vals);
        assert!((total - Complex64::new(3f64.sin() / 3.0, 1.0 / 3.0)).norm() < 1e-14);
    }

    #[test]
    fn adaptive_gk_handles_near_pole() {
        // ∫_{-1}^{1} 1/(x - i·1e-3) dx = 2i·atan(1000)
        let eps = 1e-3;
        let v = adaptive_gk15(
            |x| Ok(Complex64::new(1.0, 0.0) / Complex64::new(x, -eps)),
            -1.0,
            1.0,
            2,
            1e-10,
            40,
        )
        .unwrap();
        let exact = Complex64::new(0.0, 2.0 * (1.0 / eps).atan());
        assert!((v - exact).norm() < 1e-8, "{v}");
    }
}
