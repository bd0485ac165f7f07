//! Explicit genus-1 correlation forms, invariant checks and the pole-order
//! scan of `z ↦ T_z f`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::rational::distinct_permutations;
use super::{apply_tz, CorrelationForm};
use crate::error::{KzbError, Result};
use crate::jets::{factorial, Jet};
use crate::kernels::Kernels;
use crate::quadrature::laurent_fit;
use crate::series::{Algebra, HSeries};
use crate::theta::jacobi_theta1_compose;
use crate::{CurveModel, Point};

const FIT_RADIUS: f64 = 1e-2;
const FIT_POINTS: usize = 64;
const MAX_CONDITION: f64 = 1e8;
const SEED: u64 = 0x5EED;
/// λ-jet order used when checking invariants, enough for forms built with
/// up to two λ-derivatives.
const CHECK_ORDER: usize = 2;

fn elliptic_tau(model: &CurveModel) -> Result<Complex64> {
    if model.genus() != 1 {
        return Err(KzbError::Invalid("explicit forms need an elliptic curve".into()));
    }
    Ok(model.period_matrix()?.entry(0, 0))
}

fn proto(lam: &[Jet]) -> Result<&Jet> {
    lam.first()
        .ok_or_else(|| KzbError::Invalid("expected one twist jet".into()))
}

/// `s^{(j)}(x)`, `j < len`, for `s(x) = θ₁(x + λ/πi)/θ₁(x)`,
/// which is twisted by `e^{−2λ}` around `B` and has a simple pole at `P_0`.
fn section_derivatives(tau: Complex64, lam: &Jet, x: Complex64, len: usize) -> Result<Vec<Jet>> {
    let zero = lam.constant_like(Complex64::new(0.0, 0.0));
    let one = lam.constant_like(Complex64::new(1.0, 0.0));
    let shift = lam.scale(Complex64::new(0.0, -1.0 / PI)).add_const(x);
    let series = |head: Jet| {
        let mut v = vec![zero.clone(); len.max(1)];
        v[0] = head;
        if len > 1 {
            v[1] = one.clone();
        }
        HSeries::new(v)
    };
    let num = jacobi_theta1_compose(&series(shift), tau)?;
    let den = jacobi_theta1_compose(&series(lam.constant_like(x)), tau)?;
    let q = num.times(&den.recip()?);
    Ok((0..len)
        .map(|j| q.coeff(j).scale(Complex64::new(factorial(j), 0.0)))
        .collect())
}

/// Multisets of size `n` drawn from `0..p`, sorted.
fn multisets(p: usize, n: usize) -> Vec<Vec<u32>> {
    fn rec(start: u32, p: u32, left: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for j in start..p {
            cur.push(j);
            rec(j, p, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, p as u32, n, &mut Vec::new(), &mut out);
    out
}

fn symmetric_product(model: CurveModel, tau: Complex64, p: usize, idx: Vec<u32>) -> CorrelationForm {
    let n = idx.len();
    let perms = distinct_permutations(idx);
    CorrelationForm::new(n, Complex64::new(-2.0, 0.0), p, move |lam, zs| {
        let lam0 = proto(lam)?;
        if zs.is_empty() {
            return Ok(lam0.constant_like(Complex64::new(1.0, 0.0)));
        }
        let derivs = zs
            .iter()
            .map(|z| section_derivatives(tau, lam0, model.abel(z)?[0], p))
            .collect::<Result<Vec<_>>>()?;
        let mut out = lam0.constant_like(Complex64::new(0.0, 0.0));
        for perm in &perms {
            let mut term = lam0.constant_like(Complex64::new(1.0, 0.0));
            for (d, &j) in derivs.iter().zip(perm) {
                term = &term * &d[j as usize];
            }
            out = &out + &term;
        }
        Ok(out)
    })
}

/// Random point of the fundamental parallelogram, away from its edges.
pub(crate) fn random_elliptic_point(rng: &mut ChaCha8Rng, tau: Complex64) -> Point {
    let u: f64 = rng.gen_range(0.1..0.9);
    let v: f64 = rng.gen_range(0.1..0.9);
    Point::new(tau * v + u)
}

/// Basis of `S^n H⁰(X, Ω_X L_{−2λ}(pP_0))` on an elliptic curve: symmetrized
/// products of `s, s', …, s^{(p−1)}` with `s(z) = θ₁(z + λ/πi)/θ₁(z)`.
/// Linear independence is checked by sampling at `lam0`.
pub fn basis_sections(model: &CurveModel, lam0: &[Complex64], p: usize, n: usize) -> Result<Vec<CorrelationForm>> {
    let tau = elliptic_tau(model)?;
    if p == 0 {
        return Err(KzbError::Invalid("pole bound must be at least 1".into()));
    }
    let forms: Vec<CorrelationForm> = multisets(p, n)
        .into_iter()
        .map(|idx| symmetric_product(model.clone(), tau, p, idx))
        .collect();
    if n == 0 {
        return Ok(forms);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let rows = 2 * forms.len() + 4;
    let mut m = DMatrix::<Complex64>::zeros(rows, forms.len());
    for r in 0..rows {
        let zs: Vec<Point> = (0..n).map(|_| random_elliptic_point(&mut rng, tau)).collect();
        for (j, f) in forms.iter().enumerate() {
            m[(r, j)] = f.eval_at(lam0, 0, &zs)?.value();
        }
    }
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if !(min > 0.0 && max / min < MAX_CONDITION) {
        return Err(KzbError::DegenerateBasis);
    }
    Ok(forms)
}

/// `f_λ(z_1…z_n) = Θ^{[l]}_{2k}(λ − (2πi/k)Σ z_i)` on an elliptic curve, where
/// `Θ^{[l]}_{2k}(x) = Σ_m exp(πiτ(2km² + (2l − k)m) + (l + 2km)x)` spans the
/// order-`2k` theta functions as `l` runs over `0..2k`.
pub fn make_theta_test_form(model: &CurveModel, k: u32, n: usize, l: u32) -> Result<CorrelationForm> {
    let tau = elliptic_tau(model)?;
    if k == 0 || l >= 2 * k {
        return Err(KzbError::Invalid("need k >= 1 and 0 <= l < 2k".into()));
    }
    let model = model.clone();
    let kf = k as f64;
    let lf = l as f64;
    let ipi = Complex64::new(0.0, PI);
    Ok(CorrelationForm::new(n, Complex64::new(kf, 0.0), 0, move |lam, zs| {
        let lam0 = proto(lam)?;
        let mut zsum = Complex64::new(0.0, 0.0);
        for z in zs {
            zsum += model.abel(z)?[0];
        }
        let x = lam0.add_const(-2.0 * ipi * zsum / kf);
        let mut out = lam0.constant_like(Complex64::new(0.0, 0.0));
        for m in -40i32..=40 {
            let mf = m as f64;
            let slope = lf + 2.0 * kf * mf;
            let phase = ipi * tau * (2.0 * kf * mf * mf + (2.0 * lf - kf) * mf);
            let head = phase + x.value() * slope;
            if head.re < -700.0 {
                continue;
            }
            out = &out + &x.scale(Complex64::new(slope, 0.0)).add_const(phase).exp();
        }
        Ok(out)
    }))
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / (1e-300 + a.norm().max(b.norm()))
}

/// Relative change of `f` under swapping arguments `i` and `j`.
pub fn form_symmetry_error(f: &CorrelationForm, lam0: &[Complex64], zs: &[Point], i: usize, j: usize) -> Result<f64> {
    let a = f.eval_at(lam0, CHECK_ORDER, zs)?.value();
    let mut swapped = zs.to_vec();
    swapped.swap(i, j);
    let b = f.eval_at(lam0, CHECK_ORDER, &swapped)?.value();
    Ok(rel(a, b))
}

/// Relative deviation of `f(…γ_{B_a}z_slot…)` from `e^{−2λ_a} f(…)`.
pub fn form_monodromy_error(
    f: &CorrelationForm,
    lam0: &[Complex64],
    zs: &[Point],
    slot: usize,
    a: usize,
) -> Result<f64> {
    let g = lam0.len();
    let base = f.eval_at(lam0, CHECK_ORDER, zs)?.value();
    let mut moved = zs.to_vec();
    moved[slot] = moved[slot].around_b(a, g);
    let shifted = f.eval_at(lam0, CHECK_ORDER, &moved)?.value();
    Ok(rel(shifted, base * (-2.0 * lam0[a]).exp()))
}

/// Largest Laurent term `|c_j| r^j` with `j < lowest`, relative to the largest
/// term overall, for a fit on the circle of radius `r = 10⁻²` around `center`.
fn excess<F: FnMut(Complex64) -> Result<Complex64>>(
    center: Complex64,
    kmin: i32,
    lowest: i32,
    mut f: F,
) -> Result<f64> {
    let mut err = None;
    let coeffs = laurent_fit(center, FIT_RADIUS, FIT_POINTS, kmin, 3, |t| match f(t) {
        Ok(v) => v,
        Err(e) => {
            err.get_or_insert(e);
            Complex64::new(f64::NAN, 0.0)
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let sizes: Vec<(i32, f64)> = coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let j = kmin + i as i32;
            (j, c.norm() * FIT_RADIUS.powi(j))
        })
        .collect();
    let top = sizes.iter().map(|s| s.1).fold(0.0, f64::max);
    if !top.is_finite() {
        return Err(KzbError::FitIllConditioned);
    }
    let bad = sizes.iter().filter(|s| s.0 < lowest).map(|s| s.1).fold(0.0, f64::max);
    Ok(if top == 0.0 { 0.0 } else { bad / top })
}

/// Relative size of the Laurent terms below order `−pole_bound` of `f` in
/// argument `slot` around `P_0`.
pub fn form_pole_excess(f: &CorrelationForm, lam0: &[Complex64], zs: &[Point], slot: usize) -> Result<f64> {
    let p = f.pole_bound as i32;
    let mut moved = zs.to_vec();
    excess(Complex64::new(0.0, 0.0), -(p + 2), -p, |t| {
        moved[slot] = Point::new(t);
        Ok(f.eval_at(lam0, CHECK_ORDER, &moved)?.value())
    })
}

/// Laurent scan of `z ↦ (T_z f)(z_1…z_n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PoleReport {
    /// Relative size of terms below order `−p` around `P_0`.
    pub at_base: f64,
    /// Relative size of the polar part around each `z_α`.
    pub at_points: Vec<f64>,
}

impl PoleReport {
    pub fn max(&self) -> f64 {
        self.at_points.iter().copied().fold(self.at_base, f64::max)
    }
}

/// Fit `z ↦ (T_z f)(z_1…z_n)` on small circles around `P_0` and each `z_α`.
pub fn pole_order_check(
    kern: &Kernels,
    k: Complex64,
    f: &CorrelationForm,
    lam0: &[Complex64],
    zs: &[Point],
) -> Result<PoleReport> {
    let lam = Jet::variables(lam0, 2);
    let p = f.pole_bound as i32;
    let mut tz = |t: Complex64| Ok(apply_tz(kern, k, f, &lam, &Point::new(t), zs)?.value());
    let at_base = excess(Complex64::new(0.0, 0.0), -(p + 2), -p, &mut tz)?;
    let at_points = zs
        .iter()
        .map(|za| excess(za.t, -(p + 2), 0, &mut tz))
        .collect::<Result<Vec<_>>>()?;
    Ok(PoleReport { at_base, at_points })
}
