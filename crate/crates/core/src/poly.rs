//! Real polynomials, their complex roots and partial-fraction expansions of
//! proper rational functions.

use num_complex::Complex64;

/// Polynomial with real coefficients in ascending power order.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: &[f64]) -> Self {
        let mut coeffs = coeffs.to_vec();
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().unwrap()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_c(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() == 1 {
            return Poly::new(&[0.0]);
        }
        let d: Vec<f64> = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| k as f64 * c)
            .collect();
        Poly::new(&d)
    }

    /// All complex roots, repeated according to multiplicity.
    pub fn roots(&self) -> Vec<Complex64> {
        let c: Vec<Complex64> = self.coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        complex_poly_roots(&c)
    }
}

/// Horner evaluation of p and p' for complex ascending coefficients.
fn eval_with_derivative(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Roots of a complex polynomial by Aberth-Ehrlich simultaneous iteration,
/// followed by a few Newton polishing steps per root.
pub fn complex_poly_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut coeffs = coeffs.to_vec();
    while coeffs.len() > 1 && coeffs.last().map(|c| c.norm() == 0.0).unwrap_or(false) {
        coeffs.pop();
    }
    let n = coeffs.len().saturating_sub(1);
    if n == 0 {
        return Vec::new();
    }
    let lead = coeffs[n];
    let monic: Vec<Complex64> = coeffs.iter().map(|&c| c / lead).collect();
    if n == 1 {
        return vec![-monic[0]];
    }

    // Cauchy bound for the initial circle.
    let radius = 1.0 + monic[..n].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64 + 0.4;
            Complex64::from_polar(0.5 * radius, angle)
        })
        .collect();

    for _ in 0..500 {
        let mut max_step: f64 = 0.0;
        for i in 0..n {
            let (p, dp) = eval_with_derivative(&monic, z[i]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let sum: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let d = z[i] - z[j];
                    if d.norm() == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        1.0 / d
                    }
                })
                .sum();
            let step = ratio / (1.0 - ratio * sum);
            if step.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
            }
        }
        if max_step < 1e-15 {
            break;
        }
    }
    for root in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = eval_with_derivative(&monic, *root);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            if !step.is_finite() || step.norm() > 1e-6 * (1.0 + root.norm()) {
                break;
            }
            *root -= step;
        }
    }
    z
}

/// A distinct root with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub value: Complex64,
    pub multiplicity: usize,
}

/// Group numerically coincident roots. Repeated roots split into a small
/// cluster of radius ~ eps^(1/m); the cluster mean recovers the root.
pub fn cluster_roots(roots: &[Complex64], radius: f64) -> Vec<Root> {
    let mut remaining: Vec<Complex64> = roots.to_vec();
    let mut out = Vec::new();
    while let Some(seed) = remaining.pop() {
        let scale = 1.0 + seed.norm();
        let (members, rest): (Vec<_>, Vec<_>) = remaining
            .into_iter()
            .partition(|r| (r - seed).norm() <= radius * scale);
        remaining = rest;
        let multiplicity = members.len() + 1;
        let value = (members.iter().sum::<Complex64>() + seed) / multiplicity as f64;
        out.push(Root { value, multiplicity });
    }
    out.sort_by(|a, b| {
        a.value
            .im
            .partial_cmp(&b.value.im)
            .unwrap()
            .then(a.value.re.partial_cmp(&b.value.re).unwrap())
    });
    out
}

/// Newton on the (m-1)-th derivative, where a root of multiplicity m is simple.
pub fn polish_multiple_root(poly: &Poly, start: Complex64, multiplicity: usize) -> Complex64 {
    let mut target = poly.clone();
    for _ in 1..multiplicity {
        target = target.derivative();
    }
    let slope = target.derivative();
    let mut z = start;
    for _ in 0..8 {
        let d = slope.eval_c(z);
        if d.norm() == 0.0 {
            break;
        }
        let step = target.eval_c(z) / d;
        if !step.is_finite() || step.norm() > 1e-3 * (1.0 + z.norm()) {
            break;
        }
        z -= step;
        if step.norm() <= 1e-16 * (1.0 + z.norm()) {
            break;
        }
    }
    z
}

/// Truncated power series helpers (ascending coefficients).
fn series_mul(a: &[Complex64], b: &[Complex64], order: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); order];
    for (i, &ai) in a.iter().enumerate().take(order) {
        for (j, &bj) in b.iter().enumerate().take(order - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

fn series_div(a: &[Complex64], b: &[Complex64], order: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); order];
    for k in 0..order {
        let mut acc = a.get(k).copied().unwrap_or_default();
        for j in 1..=k {
            acc -= b.get(j).copied().unwrap_or_default() * out[k - j];
        }
        out[k] = acc / b[0];
    }
    out
}

/// Taylor coefficients of a real polynomial around `center`.
fn taylor_shift(poly: &Poly, center: Complex64) -> Vec<Complex64> {
    let mut work: Vec<Complex64> = poly.coeffs().iter().map(|&c| Complex64::new(c, 0.0)).collect();
    let n = work.len();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        // synthetic division by (x - center); the remainder is the next coefficient
        let mut acc = Complex64::new(0.0, 0.0);
        let mut q = vec![Complex64::new(0.0, 0.0); work.len().saturating_sub(1)];
        for k in (0..work.len()).rev() {
            acc = acc * center + work[k];
            if k > 0 {
                q[k - 1] = acc;
            }
        }
        out.push(acc);
        work = if q.is_empty() { vec![Complex64::new(0.0, 0.0)] } else { q };
    }
    out
}

/// One pole of a proper rational function with its principal-part
/// coefficients: `coeffs[j - 1]` multiplies `1 / (z - pole)^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleTerm {
    pub pole: Complex64,
    pub coeffs: Vec<Complex64>,
}

impl PoleTerm {
    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// Principal part evaluated at z.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let d = z - self.pole;
        let inv = 1.0 / d;
        let mut pow = inv;
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in &self.coeffs {
            acc += c * pow;
            pow *= inv;
        }
        acc
    }

    /// k-th derivative of the principal part at z.
    pub fn eval_derivative(&self, z: Complex64, k: usize) -> Complex64 {
        let d = z - self.pole;
        let mut acc = Complex64::new(0.0, 0.0);
        for (idx, &c) in self.coeffs.iter().enumerate() {
            let j = idx + 1;
            // d^k/dz^k (z-p)^-j = (-1)^k (j)(j+1)...(j+k-1) (z-p)^-(j+k)
            let mut factor = 1.0;
            for m in 0..k {
                factor *= (j + m) as f64;
            }
            if k % 2 == 1 {
                factor = -factor;
            }
            acc += c * factor / d.powi((j + k) as i32);
        }
        acc
    }
}

/// Partial-fraction expansion of `num / den` with `deg num < deg den`.
pub fn partial_fractions(num: &Poly, den: &Poly, cluster_radius: f64) -> Vec<PoleTerm> {
    let mut roots = cluster_roots(&den.roots(), cluster_radius);
    for root in roots.iter_mut() {
        root.value = polish_multiple_root(den, root.value, root.multiplicity);
    }
    let lead = den.leading();
    roots
        .iter()
        .map(|root| {
            let m = root.multiplicity;
            let p = root.value;
            let n_series = taylor_shift(num, p);
            // lead * prod_{q != p} (p - q + delta)^{m_q}
            let mut d_series = vec![Complex64::new(lead, 0.0)];
            for other in roots.iter().filter(|r| r.value != p) {
                let factor = [p - other.value, Complex64::new(1.0, 0.0)];
                for _ in 0..other.multiplicity {
                    d_series = series_mul(&d_series, &factor, m.max(1));
                }
            }
            d_series.resize(m, Complex64::new(0.0, 0.0));
            let h = series_div(&n_series, &d_series, m);
            // c_{p,j} = h_{m-j}
            let coeffs = (1..=m).map(|j| h[m - j]).collect();
            PoleTerm { pole: p, coeffs }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn quadratic_roots() {
        let p = Poly::new(&[1.0, 0.0, 1.0]);
        let mut r = p.roots();
        r.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!((r[0] - c(0.0, -1.0)).norm() < 1e-14);
        assert!((r[1] - c(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn double_roots_cluster() {
        // (1+x^2)^2
        let p = Poly::new(&[1.0, 0.0, 2.0, 0.0, 1.0]);
        let roots = cluster_roots(&p.roots(), 1e-5);
        assert_eq!(roots.len(), 2);
        for r in &roots {
            assert_eq!(r.multiplicity, 2);
            assert!((r.value.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn taylor_shift_matches_derivatives() {
        let p = Poly::new(&[1.0, -2.0, 3.0, 0.5]);
        let center = c(0.3, -0.7);
        let t = taylor_shift(&p, center);
        assert!((t[0] - p.eval_c(center)).norm() < 1e-14);
        assert!((t[1] - p.derivative().eval_c(center)).norm() < 1e-14);
        assert!((t[2] - p.derivative().derivative().eval_c(center) / 2.0).norm() < 1e-14);
        assert!((t[3] - c(0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn partial_fractions_reconstruct() {
        // 0.4 x / (1+x^2)^2 and 1/((x^2+1)(x^2+4))
        let cases = [
            (Poly::new(&[0.0, 0.4]), Poly::new(&[1.0, 0.0, 2.0, 0.0, 1.0])),
            (Poly::new(&[1.0]), Poly::new(&[4.0, 0.0, 5.0, 0.0, 1.0])),
            (Poly::new(&[0.1]), Poly::new(&[1.0, 0.0, 1.0])),
        ];
        for (num, den) in cases {
            let terms = partial_fractions(&num, &den, 1e-5);
            for z in [c(0.7, 0.2), c(-2.0, 1.5), c(3.0, -0.4)] {
                let direct = num.eval_c(z) / den.eval_c(z);
                let pf: Complex64 = terms.iter().map(|t| t.eval(z)).sum();
                assert!((direct - pf).norm() < 1e-12, "{direct} vs {pf}");
            }
        }
    }

    #[test]
    fn lorentzian_principal_part() {
        let terms = partial_fractions(&Poly::new(&[0.1]), &Poly::new(&[1.0, 0.0, 1.0]), 1e-5);
        let lower = terms.iter().find(|t| t.pole.im < 0.0).unwrap();
        // 0.1 / ((z-i)(z+i)) has residue 0.1/(-2i) at -i
        assert!((lower.coeffs[0] - c(0.0, 0.05)).norm() < 1e-14);
    }

    #[test]
    fn principal_part_derivative() {
        let t = PoleTerm {
            pole: c(0.0, -1.0),
            coeffs: vec![c(0.2, 0.1), c(-0.3, 0.4)],
        };
        let z = c(0.5, 0.3);
        let h = 1e-5;
        let fd = (t.eval(z + h) - t.eval(z - h)) / (2.0 * h);
        assert!((fd - t.eval_derivative(z, 1)).norm() < 1e-8);
    }
}
