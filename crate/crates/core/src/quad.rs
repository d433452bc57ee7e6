//! Quadrature building blocks: Gauss-Legendre rules, adaptive Gauss-Kronrod
//! integration, piecewise Legendre interpolants and Filon-type oscillatory
//! integration against `exp(-i lambda t)`.

use std::collections::BinaryHeap;
use std::cmp::Ordering;
use std::ops::{Add, AddAssign, Mul, Sub};

use num_complex::Complex64;

use crate::error::{DecayError, Result};

/// Values that adaptive quadrature can accumulate.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + AddAssign + Default
{
    fn magnitude(&self) -> f64;
    fn finite(&self) -> bool;
}

impl Scalar for f64 {
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn finite(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for Complex64 {
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn finite(&self) -> bool {
        self.is_finite()
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        // Tricomi initial guess, refined by Newton on P_n
        let theta = std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5);
        let mut x = (1.0 - (nf - 1.0) / (8.0 * nf * nf * nf)) * theta.cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d.is_finite() { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Legendre polynomials P_0..P_{n-1} at x.
fn legendre_values(n: usize, x: f64, out: &mut [f64]) {
    if n == 0 {
        return;
    }
    out[0] = 1.0;
    if n > 1 {
        out[1] = x;
    }
    for k in 2..n {
        let kf = k as f64;
        out[k] = ((2.0 * kf - 1.0) * x * out[k - 1] - (kf - 1.0) * out[k - 2]) / kf;
    }
}

// Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

fn gk15<T: Scalar, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> (T, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        let s = f1 + f2;
        kronrod += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    let k = kronrod * half;
    let g = gauss * half;
    (k, (k - g).magnitude())
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral<T> {
    pub value: T,
    pub abs_err: f64,
    pub converged: bool,
}

/// Controls for adaptive Gauss-Kronrod integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_segments: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-12,
            max_segments: 4000,
        }
    }
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    err: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Adaptive Gauss-Kronrod integration over `[a, b]` split at `breaks`.
///
/// Segments are bisected in order of decreasing error estimate; the result
/// is deterministic for a given integrand.
pub fn integrate<T: Scalar, F: Fn(f64) -> T>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    opts: QuadOptions,
) -> Result<Integral<T>> {
    if a > b {
        let r = integrate(f, b, a, breaks, opts)?;
        return Ok(Integral { value: r.value * -1.0, ..r });
    }
    let mut points: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    points.push(a);
    points.push(b);
    points.sort_by(|x, y| x.total_cmp(y));
    points.dedup();

    let mut heap = BinaryHeap::new();
    let mut total = T::default();
    let mut total_err = 0.0;
    for w in points.windows(2) {
        let (v, e) = gk15(&f, w[0], w[1]);
        if !v.finite() {
            return Err(DecayError::NonFinite(format!(
                "integrand on [{}, {}]",
                w[0], w[1]
            )));
        }
        total += v;
        total_err += e;
        heap.push(Segment { a: w[0], b: w[1], value: v, err: e });
    }

    let mut converged = false;
    while heap.len() < opts.max_segments {
        if total_err <= opts.abs_tol.max(opts.rel_tol * total.magnitude()) {
            converged = true;
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid == worst.a || mid == worst.b {
            // cannot subdivide further
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        if !(v1.finite() && v2.finite()) {
            return Err(DecayError::NonFinite(format!(
                "integrand on [{}, {}]",
                worst.a, worst.b
            )));
        }
        total = total - worst.value + v1 + v2;
        total_err += e1 + e2 - worst.err;
        heap.push(Segment { a: worst.a, b: mid, value: v1, err: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, err: e2 });
    }
    if !converged && total_err <= opts.abs_tol.max(opts.rel_tol * total.magnitude()) {
        converged = true;
    }
    // re-sum to avoid drift from incremental updates
    let value = heap.iter().fold(T::default(), |acc, s| acc + s.value);
    let abs_err = heap.iter().map(|s| s.err).sum();
    Ok(Integral { value, abs_err, converged })
}

/// Integral over `[a, inf)` through the map `x = a + (1 - u) / u`.
pub fn integrate_to_infinity<T: Scalar, F: Fn(f64) -> T>(
    f: F,
    a: f64,
    opts: QuadOptions,
) -> Result<Integral<T>> {
    let g = |u: f64| {
        if u <= 0.0 {
            return T::default();
        }
        let x = a + (1.0 - u) / u;
        f(x) * (1.0 / (u * u))
    };
    integrate(g, 0.0, 1.0, &[0.5, 0.1, 0.01], opts)
}

/// Integral over `(-inf, b]`.
pub fn integrate_from_neg_infinity<T: Scalar, F: Fn(f64) -> T>(
    f: F,
    b: f64,
    opts: QuadOptions,
) -> Result<Integral<T>> {
    integrate_to_infinity(|x| f(-x), -b, opts)
}

/// Polynomial interpolant on one panel in the Legendre basis.
#[derive(Debug, Clone, PartialEq)]
pub struct LegendrePanel {
    pub a: f64,
    pub b: f64,
    pub coeffs: Vec<f64>,
}

impl LegendrePanel {
    pub fn center(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.b - self.a)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let u = (x - self.center()) / self.half_width();
        // Clenshaw recurrence for the Legendre series
        let n = self.coeffs.len();
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for k in (0..n).rev() {
            let kf = k as f64;
            let alpha = (2.0 * kf + 1.0) / (kf + 1.0) * u;
            let beta = -(kf + 1.0) / (kf + 2.0);
            let b0 = self.coeffs[k] + alpha * b1 + beta * b2;
            b2 = b1;
            b1 = b0;
        }
        b1
    }

    pub fn integral(&self) -> f64 {
        self.coeffs[0] * (self.b - self.a)
    }

    /// Magnitude of the trailing coefficients, a proxy for interpolation error.
    pub fn tail(&self) -> f64 {
        let n = self.coeffs.len();
        self.coeffs[n.saturating_sub(3)..].iter().map(|c| c.abs()).sum()
    }

    /// `∫_a^b p(x) exp(-i x t) dx` computed exactly for the interpolant.
    pub fn fourier(&self, t: f64, bessel: &mut Vec<f64>) -> Complex64 {
        let h = self.half_width();
        let c = self.center();
        let theta = h * t;
        spherical_bessel_sequence(theta.abs(), self.coeffs.len(), bessel);
        // ∫_{-1}^{1} P_k(u) e^{-i theta u} du = 2 (-i)^k j_k(theta)
        let mut acc = Complex64::new(0.0, 0.0);
        let phases = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, 1.0),
        ];
        let sign = if theta < 0.0 { -1.0 } else { 1.0 };
        for (k, &ak) in self.coeffs.iter().enumerate() {
            let jk = if k % 2 == 1 { sign * bessel[k] } else { bessel[k] };
            acc += phases[k % 4] * (2.0 * ak * jk);
        }
        acc * h * Complex64::from_polar(1.0, -c * t)
    }
}

/// Fixed-order sampler that turns function values into Legendre panels.
#[derive(Debug, Clone)]
pub struct LegendreSampler {
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    basis: Vec<Vec<f64>>,
}

impl LegendreSampler {
    pub fn new(order: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        let mut basis = vec![vec![0.0; order]; order];
        for (j, &x) in nodes.iter().enumerate() {
            let mut vals = vec![0.0; order];
            legendre_values(order, x, &mut vals);
            for k in 0..order {
                basis[k][j] = vals[k];
            }
        }
        Self { order, nodes, weights, basis }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Sample points mapped to [a, b].
    pub fn points(&self, a: f64, b: f64) -> impl Iterator<Item = f64> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes.iter().map(move |&x| c + h * x)
    }

    pub fn panel<F: Fn(f64) -> f64>(&self, f: &F, a: f64, b: f64) -> LegendrePanel {
        let values: Vec<f64> = self.points(a, b).map(f).collect();
        self.panel_from_values(&values, a, b)
    }

    pub fn panel_from_values(&self, values: &[f64], a: f64, b: f64) -> LegendrePanel {
        let coeffs = (0..self.order)
            .map(|k| {
                let s: f64 = (0..self.order)
                    .map(|j| self.weights[j] * self.basis[k][j] * values[j])
                    .sum();
                s * (2.0 * k as f64 + 1.0) / 2.0
            })
            .collect();
        LegendrePanel { a, b, coeffs }
    }
}

/// Piecewise Legendre interpolant over consecutive panels.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLegendre {
    pub panels: Vec<LegendrePanel>,
}

impl PiecewiseLegendre {
    /// Adaptive construction: each panel between consecutive `breaks` is
    /// bisected until its trailing Legendre coefficients fall below
    /// `abs_tol + rel_tol * scale`.
    pub fn build<F: Fn(f64) -> f64>(
        f: F,
        breaks: &[f64],
        sampler: &LegendreSampler,
        abs_tol: f64,
        rel_tol: f64,
        max_panels: usize,
    ) -> Result<Self> {
        let mut pending: Vec<LegendrePanel> = breaks
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| sampler.panel(&f, w[0], w[1]))
            .collect();
        pending.reverse();
        let mut done = Vec::new();
        while let Some(panel) = pending.pop() {
            if panel.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(DecayError::NonFinite(format!(
                    "interpolated function on [{}, {}]",
                    panel.a, panel.b
                )));
            }
            let scale = panel.coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max);
            let width = panel.b - panel.a;
            let accurate = panel.tail() * width <= abs_tol * width.max(1e-300).min(1.0)
                || panel.tail() <= rel_tol * scale
                || width <= 1e-13 * (panel.a.abs() + panel.b.abs()).max(1e-300);
            if accurate {
                done.push(panel);
                if done.len() + pending.len() > max_panels {
                    return Err(DecayError::Quadrature(format!(
                        "panel budget {max_panels} exhausted"
                    )));
                }
                continue;
            }
            if done.len() + pending.len() + 2 > max_panels {
                return Err(DecayError::Quadrature(format!(
                    "panel budget {max_panels} exhausted near [{}, {}]",
                    panel.a, panel.b
                )));
            }
            let mid = 0.5 * (panel.a + panel.b);
            pending.push(sampler.panel(&f, mid, panel.b));
            pending.push(sampler.panel(&f, panel.a, mid));
        }
        Ok(Self { panels: done })
    }

    pub fn lo(&self) -> f64 {
        self.panels.first().map(|p| p.a).unwrap_or(0.0)
    }

    pub fn hi(&self) -> f64 {
        self.panels.last().map(|p| p.b).unwrap_or(0.0)
    }

    /// Interpolated value; zero outside the covered range.
    pub fn eval(&self, x: f64) -> f64 {
        if x < self.lo() || x > self.hi() {
            return 0.0;
        }
        let idx = self.panels.partition_point(|p| p.b < x);
        self.panels[idx.min(self.panels.len() - 1)].eval(x)
    }

    pub fn integral(&self) -> f64 {
        self.panels.iter().map(|p| p.integral()).sum()
    }

    /// `∫ p(x) exp(-i x t) dx` over the covered range.
    pub fn fourier(&self, t: f64) -> Complex64 {
        let mut scratch = Vec::new();
        self.panels.iter().map(|p| p.fourier(t, &mut scratch)).sum()
    }
}

/// Spherical Bessel functions j_0..j_{n-1} at x >= 0.
pub fn spherical_bessel_sequence(x: f64, n: usize, out: &mut Vec<f64>) {
    out.clear();
    out.resize(n, 0.0);
    if n == 0 {
        return;
    }
    if x < 1.0 {
        // power series: j_k(x) = x^k / (2k+1)!! * sum_m (-x^2/2)^m / (m! (2k+3)(2k+5)...(2k+2m+1))
        let x2 = x * x;
        let mut lead = 1.0;
        for k in 0..n {
            if k > 0 {
                lead *= x / (2 * k + 1) as f64;
            }
            if lead == 0.0 {
                break;
            }
            let mut term = 1.0;
            let mut sum = 1.0;
            for m in 1..40 {
                term *= -0.5 * x2 / (m as f64 * (2 * k + 2 * m + 1) as f64);
                sum += term;
                if term.abs() < 1e-17 * sum.abs() {
                    break;
                }
            }
            out[k] = lead * sum;
        }
        return;
    }
    let j0 = x.sin() / x;
    let j1 = x.sin() / (x * x) - x.cos() / x;
    if (n as f64) <= x {
        // forward recurrence is stable for k <= x
        out[0] = j0;
        if n > 1 {
            out[1] = j1;
        }
        for k in 2..n {
            out[k] = (2 * k - 1) as f64 / x * out[k - 1] - out[k - 2];
        }
        return;
    }
    // Miller backward recurrence, normalised against j0 or j1
    let start = n + 20 + x as usize;
    let mut next = 0.0;
    let mut cur = 1e-300;
    let mut tmp = vec![0.0; start + 1];
    tmp[start] = cur;
    for k in (1..=start).rev() {
        let prev = (2 * k + 1) as f64 / x * cur - next;
        next = cur;
        cur = prev;
        tmp[k - 1] = cur;
        if cur.abs() > 1e250 {
            for v in tmp[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
            next *= 1e-250;
            cur *= 1e-250;
        }
    }
    let scale = if j0.abs() >= j1.abs() { j0 / tmp[0] } else { j1 / tmp[1] };
    for k in 0..n {
        out[k] = tmp[k] * scale;
    }
}
