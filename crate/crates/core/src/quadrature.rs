//! Fixed quadrature rules.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard.entry(n).or_insert_with(|| Arc::new(legendre_rule(n))).clone()
}

fn legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm1) / (z * z - 1.0);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// `∫_a^b f(x) dx` along the straight segment, composite Gauss–Legendre with
/// `panels` panels of `n` nodes.
pub fn segment<F: FnMut(Complex64) -> Complex64>(
    a: Complex64,
    b: Complex64,
    n: usize,
    panels: usize,
    mut f: F,
) -> Complex64 {
    let rule = gauss_legendre(n);
    let (xs, ws) = (&rule.0, &rule.1);
    let mut acc = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let lo = a + (b - a) * (p as f64 / panels as f64);
        let hi = a + (b - a) * ((p + 1) as f64 / panels as f64);
        let mid = (lo + hi) * 0.5;
        let half = (hi - lo) * 0.5;
        for (x, w) in xs.iter().zip(ws) {
            acc += f(mid + half * *x) * *w * half;
        }
    }
    acc
}

/// Adaptive Gauss–Legendre for a vector-valued integrand on the segment
/// `[a, b]`, refining until halving changes the result by less than `tol`
/// or by less than the rounding level of `∫|f|` on the panel.
pub fn adaptive_segment<F: FnMut(Complex64) -> Vec<Complex64>>(
    a: Complex64,
    b: Complex64,
    tol: f64,
    mut f: F,
) -> Vec<Complex64> {
    let whole = gl_vec(a, b, &mut f).0;
    refine(a, b, whole, tol, 0, &mut f)
}

/// Panel integral and `∫|f|` over the panel.
fn gl_vec<F: FnMut(Complex64) -> Vec<Complex64>>(a: Complex64, b: Complex64, f: &mut F) -> (Vec<Complex64>, f64) {
    let rule = gauss_legendre(16);
    let mid = (a + b) * 0.5;
    let half = (b - a) * 0.5;
    let mut acc: Vec<Complex64> = Vec::new();
    let mut mass = 0.0;
    for (x, w) in rule.0.iter().zip(&rule.1) {
        let v = f(mid + half * *x);
        if acc.is_empty() {
            acc = vec![Complex64::new(0.0, 0.0); v.len()];
        }
        for (s, vi) in acc.iter_mut().zip(v) {
            mass += vi.norm() * w * half.norm();
            *s += vi * *w * half;
        }
    }
    (acc, mass)
}

fn refine<F: FnMut(Complex64) -> Vec<Complex64>>(
    a: Complex64,
    b: Complex64,
    whole: Vec<Complex64>,
    tol: f64,
    depth: usize,
    f: &mut F,
) -> Vec<Complex64> {
    let m = (a + b) * 0.5;
    let (left, ml) = gl_vec(a, m, f);
    let (right, mr) = gl_vec(m, b, f);
    let split: Vec<Complex64> = left.iter().zip(&right).map(|(l, r)| l + r).collect();
    let err = split
        .iter()
        .zip(&whole)
        .map(|(s, w)| (s - w).norm())
        .fold(0.0, f64::max);
    let floor = 64.0 * f64::EPSILON * (ml + mr);
    if err <= tol.max(floor) || depth >= 40 {
        return split;
    }
    let l = refine(a, m, left, tol * 0.5, depth + 1, f);
    let r = refine(m, b, right, tol * 0.5, depth + 1, f);
    l.iter().zip(&r).map(|(x, y)| x + y).collect()
}

/// Chebyshev nodes `θ_j = (j + ½)π/N` for integrals of the form
/// `∫_0^π g(θ) dθ ≈ (π/N) Σ g(θ_j)`.
pub fn chebyshev_angles(n: usize) -> Vec<f64> {
    (0..n).map(|j| (j as f64 + 0.5) * PI / n as f64).collect()
}

/// Periodic trapezoid rule for `∮ f(z) dz` on the circle `|z − c| = r`.
pub fn circle<F: FnMut(Complex64) -> Complex64>(c: Complex64, r: f64, n: usize, mut f: F) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let e = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64);
        acc += f(c + e * r) * e * Complex64::new(0.0, r);
    }
    acc * (2.0 * PI / n as f64)
}

/// Laurent coefficients `c_k`, `k ∈ [kmin, kmax]`, of `f` around `c` from `n`
/// equispaced samples on `|z − c| = r` (least squares in the orthogonal
/// Fourier basis).
pub fn laurent_fit<F: FnMut(Complex64) -> Complex64>(
    c: Complex64,
    r: f64,
    n: usize,
    kmin: i32,
    kmax: i32,
    mut f: F,
) -> Vec<Complex64> {
    let samples: Vec<(Complex64, Complex64)> = (0..n)
        .map(|j| {
            let e = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64);
            (e, f(c + e * r))
        })
        .collect();
    (kmin..=kmax)
        .map(|k| {
            let s: Complex64 = samples.iter().map(|(e, v)| v * e.powi(-k)).sum();
            s / (n as f64 * r.powi(k))
        })
        .collect()
}
