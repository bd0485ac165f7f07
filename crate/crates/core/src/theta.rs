//! Riemann theta functions with characteristics.
//!
//! `Θ[a,b](z|τ) = Σ_{n∈ℤ^g} exp(πi (n+a)ᵀτ(n+a) + 2πi (n+a)ᵀ(z+b))`.
//!
//! Evaluation first moves `z` into the fundamental cell along `τℤ^g`, sums the
//! lattice terms inside an ellipsoid sized by a Gaussian tail bound, and then
//! restores the quasi-periodicity factor. Derivatives are taken termwise.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{KzbError, Result};
use crate::jets::{self, Jet};
use crate::series::{compose_table, Algebra};

const I: Complex64 = Complex64::new(0.0, 1.0);
const PI: f64 = std::f64::consts::PI;

/// Relative tail target for every theta evaluation.
pub const THETA_TOL: f64 = 1e-12;
/// Largest admissible ellipsoid radius.
pub const RADIUS_CAP: f64 = 40.0;

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodMatrix {
    tau: DMatrix<Complex64>,
}

impl PeriodMatrix {
    pub fn new(tau: DMatrix<Complex64>) -> Result<Self> {
        let g = tau.nrows();
        if g == 0 || tau.ncols() != g {
            return Err(KzbError::InvalidPeriodMatrix);
        }
        let asym = (&tau - tau.transpose()).iter().map(|x| x.norm()).fold(0.0, f64::max);
        if asym >= 1e-10 {
            return Err(KzbError::InvalidPeriodMatrix);
        }
        let sym = (&tau + tau.transpose()).map(|x| x * 0.5);
        let im = sym.map(|x| x.im);
        if im.clone().cholesky().is_none() {
            return Err(KzbError::InvalidPeriodMatrix);
        }
        Ok(PeriodMatrix { tau: sym })
    }

    pub fn genus1(tau: Complex64) -> Result<Self> {
        Self::new(DMatrix::from_element(1, 1, tau))
    }

    pub fn g(&self) -> usize {
        self.tau.nrows()
    }

    pub fn tau(&self) -> &DMatrix<Complex64> {
        &self.tau
    }

    pub fn entry(&self, a: usize, b: usize) -> Complex64 {
        self.tau[(a, b)]
    }

    fn im(&self) -> DMatrix<f64> {
        self.tau.map(|x| x.im)
    }

    /// `τ·m` for an integer vector `m`.
    pub fn apply(&self, m: &[f64]) -> Vec<Complex64> {
        let v = DVector::from_iterator(m.len(), m.iter().map(|&x| Complex64::new(x, 0.0)));
        (&self.tau * v).iter().copied().collect()
    }
}

/// Half-integer characteristic `[a, b]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Characteristic {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl Characteristic {
    pub fn zero(g: usize) -> Self {
        Characteristic {
            a: vec![0.0; g],
            b: vec![0.0; g],
        }
    }

    /// Genus-1 odd characteristic `[½, ½]`.
    pub fn odd1() -> Self {
        Characteristic {
            a: vec![0.5],
            b: vec![0.5],
        }
    }

    /// Parity `(−1)^{4 a·b}`; `true` for odd.
    pub fn is_odd(&self) -> bool {
        let s: f64 = self.a.iter().zip(&self.b).map(|(x, y)| 4.0 * x * y).sum();
        (s.round() as i64).rem_euclid(2) == 1
    }
}

/// Lattice points `n` with `π (n+a+c)ᵀ Y (n+a+c) ≤ R²`.
fn ellipsoid_points(y: &DMatrix<f64>, a: &[f64], center: &[f64], r: f64) -> Vec<Vec<f64>> {
    let g = y.nrows();
    let l = (y * PI).cholesky().expect("Im τ positive definite").l();
    let u = l.transpose();
    let mut out = Vec::new();
    let mut x = vec![0.0; g];
    enumerate(&u, a, center, r * r, g, &mut x, &mut out);
    out
}

fn enumerate(
    u: &DMatrix<f64>,
    a: &[f64],
    c: &[f64],
    budget: f64,
    level: usize,
    x: &mut Vec<f64>,
    out: &mut Vec<Vec<f64>>,
) {
    if level == 0 {
        out.push(x.clone());
        return;
    }
    let i = level - 1;
    let g = x.len();
    let mut s = 0.0;
    for j in (i + 1)..g {
        s += u[(i, j)] * (x[j] + c[j]);
    }
    // term_i = u_ii (x_i + c_i) + s, x_i = n_i + a_i
    let uii = u[(i, i)];
    let mid = -(s / uii) - c[i];
    let half = budget.max(0.0).sqrt() / uii;
    let lo = (mid - half - a[i]).ceil() as i64;
    let hi = (mid + half - a[i]).floor() as i64;
    for n in lo..=hi {
        let xi = n as f64 + a[i];
        let t = uii * (xi + c[i]) + s;
        let rem = budget - t * t;
        if rem < 0.0 {
            continue;
        }
        x[i] = xi;
        enumerate(u, a, c, rem, level - 1, x, out);
    }
    x[i] = 0.0;
}

/// Smallest radius whose tail bound, including the polynomial factor of
/// `order` derivatives, falls below `tol`.
fn truncation_radius(y: &DMatrix<f64>, order: usize, opts: &ThetaOptions) -> Result<f64> {
    let g = y.nrows() as i32;
    let lmin = y.clone().symmetric_eigenvalues().min();
    let rho = (PI * lmin).sqrt();
    let bound = |r: f64| -> f64 {
        (0..200)
            .map(|k| {
                let r0 = r + k as f64;
                let r1 = r0 + 1.0;
                let count = (2.0 * r1 / rho + 1.0).powi(g);
                let vmax = r1 / rho + 1.0;
                count * (2.0 * PI * vmax).powi(order as i32) * (-r0 * r0).exp()
            })
            .sum()
    };
    let mut r = 2.0;
    while bound(r) >= opts.tol {
        r += 0.25;
        if r > opts.radius_cap {
            return Err(KzbError::TruncationFailure { radius: r });
        }
    }
    Ok(r)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaOptions {
    pub tol: f64,
    pub radius_cap: f64,
}

impl Default for ThetaOptions {
    fn default() -> Self {
        ThetaOptions {
            tol: THETA_TOL,
            radius_cap: RADIUS_CAP,
        }
    }
}

/// Normalized Taylor table `∂^αΘ[a,b](z0)/α!` for `|α| ≤ order`, returned as a
/// jet in the `g` coordinates of `z`, based at `z0`.
pub fn theta_table(z0: &[Complex64], tau: &PeriodMatrix, ch: &Characteristic, order: usize) -> Result<Jet> {
    theta_table_with(z0, tau, ch, order, &ThetaOptions::default())
}

pub fn theta_table_with(
    z0: &[Complex64],
    tau: &PeriodMatrix,
    ch: &Characteristic,
    order: usize,
    opts: &ThetaOptions,
) -> Result<Jet> {
    let g = tau.g();
    assert_eq!(z0.len(), g, "argument dimension must equal the genus");
    let y = tau.im();
    let yinv = y.clone().try_inverse().ok_or(KzbError::InvalidPeriodMatrix)?;
    let im = DVector::from_iterator(g, z0.iter().map(|z| z.im));
    let m: Vec<f64> = (&yinv * im).iter().map(|v| v.round()).collect();
    let tm = tau.apply(&m);
    let zr: Vec<Complex64> = z0.iter().zip(&tm).map(|(z, t)| z - t).collect();

    let table = reduced_table(&zr, tau, ch, order, opts)?;
    // Re-express in terms of δ = z − z0 (the table is translation invariant).
    let table = Jet::from_coeffs(z0, order, table.coeffs().to_vec());
    if m.iter().all(|&k| k == 0.0) {
        return Ok(table);
    }
    // Θ(z) = exp(πi mᵀτm − 2πi mᵀ(z + b)) · Θ(z − τm)
    let mtm: Complex64 = m.iter().zip(&tm).map(|(a, b)| b * *a).sum();
    let mut phase = Jet::constant(z0, order, PI * I * mtm);
    for (k, mk) in m.iter().enumerate() {
        let zk = Jet::variable(z0, order, k).add_const(Complex64::new(ch.b[k], 0.0));
        phase = &phase - &zk.scale(2.0 * PI * I * *mk);
    }
    Ok(&phase.exp() * &table)
}

fn reduced_table(
    z: &[Complex64],
    tau: &PeriodMatrix,
    ch: &Characteristic,
    order: usize,
    opts: &ThetaOptions,
) -> Result<Jet> {
    let g = tau.g();
    let y = tau.im();
    let yinv = y.clone().try_inverse().ok_or(KzbError::InvalidPeriodMatrix)?;
    let im = DVector::from_iterator(g, z.iter().map(|z| z.im));
    let c: Vec<f64> = (&yinv * im).iter().copied().collect();
    let r = truncation_radius(&y, order, opts)?;
    let pts = ellipsoid_points(&y, &ch.a, &c, r);
    let lay = jets::multi_indices(g, order);
    let mut acc = vec![Complex64::new(0.0, 0.0); lay.len()];
    let inv_fact: Vec<f64> = (0..=order).map(|k| 1.0 / jets::factorial(k)).collect();
    for v in &pts {
        let mut expo = Complex64::new(0.0, 0.0);
        for i in 0..g {
            let mut tv = Complex64::new(0.0, 0.0);
            for j in 0..g {
                tv += tau.entry(i, j) * v[j];
            }
            expo += PI * I * v[i] * tv + 2.0 * PI * I * v[i] * (z[i] + ch.b[i]);
        }
        let term = expo.exp();
        let f: Vec<Complex64> = v.iter().map(|&x| 2.0 * PI * I * x).collect();
        for (slot, alpha) in acc.iter_mut().zip(&lay) {
            let mut t = term;
            for (k, &ak) in alpha.iter().enumerate() {
                if ak > 0 {
                    t *= f[k].powu(ak as u32) * inv_fact[ak as usize];
                }
            }
            *slot += t;
        }
    }
    Ok(Jet::from_coeffs(z, order, acc))
}

/// `Θ[a,b](z|τ)`.
pub fn theta(z: &[Complex64], tau: &PeriodMatrix, ch: &Characteristic) -> Result<Complex64> {
    Ok(theta_table(z, tau, ch, 0)?.value())
}

/// Partial derivative `∂^α Θ[a,b](z)`.
pub fn theta_partial(z: &[Complex64], tau: &PeriodMatrix, ch: &Characteristic, alpha: &[u8]) -> Result<Complex64> {
    let ord: usize = alpha.iter().map(|&k| k as usize).sum();
    Ok(theta_table(z, tau, ch, ord)?.partial(alpha))
}

/// Θ composed with an argument living in any jet-like ring (λ-jets, series in
/// a local coordinate, ...).
pub fn theta_compose<A: Algebra>(args: &[A], tau: &PeriodMatrix, ch: &Characteristic) -> Result<A> {
    let z0: Vec<Complex64> = args.iter().map(|a| a.scalar_part()).collect();
    let order = args.iter().map(|a| a.nilpotency()).max().unwrap_or(0);
    let table = theta_table(&z0, tau, ch, order)?;
    Ok(compose_table(&table, args))
}

/// Jet of Θ along jet-valued arguments (`order ≤ 6` by contract of callers).
pub fn theta_jet(args: &[Jet], tau: &PeriodMatrix, ch: &Characteristic) -> Result<Jet> {
    theta_compose(args, tau, ch)
}

/// Θ together with its gradient, both composed along `args`.
pub fn theta_with_gradient<A: Algebra>(args: &[A], tau: &PeriodMatrix, ch: &Characteristic) -> Result<(A, Vec<A>)> {
    let z0: Vec<Complex64> = args.iter().map(|a| a.scalar_part()).collect();
    let order = args.iter().map(|a| a.nilpotency()).max().unwrap_or(0) + 1;
    let table = theta_table(&z0, tau, ch, order)?;
    let value = compose_table(&table.truncate(order - 1), args);
    let grad = (0..tau.g())
        .map(|k| Ok(compose_table(&table.derivative(k, 1)?, args)))
        .collect::<Result<Vec<_>>>()?;
    Ok((value, grad))
}

/// Θ, gradient and Hessian composed along `args`.
#[allow(clippy::type_complexity)]
pub fn theta_with_hessian<A: Algebra>(
    args: &[A],
    tau: &PeriodMatrix,
    ch: &Characteristic,
) -> Result<(A, Vec<A>, Vec<Vec<A>>)> {
    let z0: Vec<Complex64> = args.iter().map(|a| a.scalar_part()).collect();
    let order = args.iter().map(|a| a.nilpotency()).max().unwrap_or(0) + 2;
    let table = theta_table(&z0, tau, ch, order)?;
    let value = compose_table(&table.truncate(order - 2), args);
    let g = tau.g();
    let mut grad = Vec::with_capacity(g);
    let mut hess = Vec::with_capacity(g);
    for a in 0..g {
        let da = table.derivative(a, 1)?;
        grad.push(compose_table(&da.truncate(order - 2), args));
        let row = (0..g)
            .map(|b| Ok(compose_table(&da.derivative(b, 1)?, args)))
            .collect::<Result<Vec<_>>>()?;
        hess.push(row);
    }
    Ok((value, grad, hess))
}

/// Jacobi `θ₁(z|τ) = −Θ[½,½](z|τ)` together with its first `order`
/// z-derivatives, as a one-variable jet at `z`.
pub fn jacobi_theta1_table(z: Complex64, tau: Complex64, order: usize) -> Result<Jet> {
    let pm = PeriodMatrix::genus1(tau)?;
    Ok(theta_table(&[z], &pm, &Characteristic::odd1(), order)?.scale(Complex64::new(-1.0, 0.0)))
}

/// Jacobi `θ₁(z|τ)`.
pub fn jacobi_theta1(z: Complex64, tau: Complex64) -> Result<Complex64> {
    Ok(jacobi_theta1_table(z, tau, 0)?.value())
}

/// `θ₁` composed along a jet-valued argument.
pub fn jacobi_theta1_compose<A: Algebra>(arg: &A, tau: Complex64) -> Result<A> {
    let pm = PeriodMatrix::genus1(tau)?;
    Ok(theta_compose(std::slice::from_ref(arg), &pm, &Characteristic::odd1())?.scaled(Complex64::new(-1.0, 0.0)))
}
