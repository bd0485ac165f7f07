//! The operators `T_z` on twisted correlation forms, their `n = 0` and
//! rational specializations, the first-order operators `f̃[ρ]`, test forms and
//! the marked-point variation formulas.

mod basis;
mod kzb;
mod rational;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{KzbError, Result};
use crate::jets::Jet;
use crate::kernels::Kernels;
use crate::Point;

pub use basis::{
    basis_sections, form_monodromy_error, form_pole_excess, form_symmetry_error, make_theta_test_form,
    pole_order_check, PoleReport,
};
pub use kzb::{kzb_coordinate_variation, kzb_point_variation, residue_at, KzbConfig};
pub use rational::{apply_tz_rational, monomial_symmetric, rational_commutator, RationalField};

/// Default λ-jet order for commutator evaluation.
pub const COMMUTATOR_ORDER: usize = 4;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Evaluator `(λ, z_1…z_n) ↦ f_λ(z_1…z_n)`, coefficient of `dz_1⋯dz_n`.
pub type FormFn = dyn Fn(&[Jet], &[Point]) -> Result<Jet> + Send + Sync;

/// Symmetric `n`-point form, twisted by `e^{−2λ_a}` around `B_a` in each
/// argument, with a pole of order at most `pole_bound` at `P_0`.
#[derive(Clone)]
pub struct CorrelationForm {
    pub n: usize,
    pub level: Complex64,
    pub pole_bound: usize,
    eval: Arc<FormFn>,
}

impl fmt::Debug for CorrelationForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CorrelationForm")
            .field("n", &self.n)
            .field("level", &self.level)
            .field("pole_bound", &self.pole_bound)
            .finish_non_exhaustive()
    }
}

impl CorrelationForm {
    pub fn new<F>(n: usize, level: Complex64, pole_bound: usize, eval: F) -> Self
    where
        F: Fn(&[Jet], &[Point]) -> Result<Jet> + Send + Sync + 'static,
    {
        CorrelationForm {
            n,
            level,
            pole_bound,
            eval: Arc::new(eval),
        }
    }

    pub fn eval(&self, lam: &[Jet], zs: &[Point]) -> Result<Jet> {
        if zs.len() != self.n {
            return Err(KzbError::Invalid(format!(
                "form takes {} points, got {}",
                self.n,
                zs.len()
            )));
        }
        (self.eval)(lam, zs)
    }

    /// Evaluate with λ-jets of the given order at `lam0`.
    pub fn eval_at(&self, lam0: &[Complex64], order: usize, zs: &[Point]) -> Result<Jet> {
        self.eval(&Jet::variables(lam0, order), zs)
    }
}

fn same_point(a: &Point, b: &Point) -> bool {
    a.t == b.t
}

fn check_distinct(z: &Point, zs: &[Point]) -> Result<()> {
    for (i, a) in zs.iter().enumerate() {
        if same_point(a, z) || zs[i + 1..].iter().any(|b| same_point(a, b)) {
            return Err(KzbError::CoincidentPoints);
        }
    }
    Ok(())
}

fn jet_order(lam: &[Jet]) -> usize {
    lam.iter().map(Jet::order).min().unwrap_or(usize::MAX)
}

pub(crate) fn twice(lam: &[Jet]) -> Vec<Jet> {
    lam.iter().map(|l| l.scale(c(2.0))).collect()
}

/// `Σ_a dir_a ∂_{λ_a} f`; zero when there are no λ variables.
pub(crate) fn along(f: &Jet, dir: &[Complex64]) -> Result<Jet> {
    if dir.is_empty() {
        return Ok(Jet::zero(f.base(), f.order()));
    }
    Ok(f.directional(dir)?)
}

/// `(T_z f_λ)(z_1…z_n)`, coefficient of `(dz)²`.
///
/// `lam` are λ-jets of order ≥ 2 (genus ≥ 1); the result has order two less.
pub fn apply_tz(
    kern: &Kernels,
    k: Complex64,
    f: &CorrelationForm,
    lam: &[Jet],
    z: &Point,
    zs: &[Point],
) -> Result<Jet> {
    let g = kern.genus();
    if lam.len() != g {
        return Err(KzbError::Invalid(format!("expected {g} twist jets, got {}", lam.len())));
    }
    if g > 0 && jet_order(lam) < 2 {
        return Err(KzbError::InsufficientJetOrder {
            needed: 2,
            got: jet_order(lam),
        });
    }
    check_distinct(z, zs)?;
    let model = kern.model();
    let mu = twice(lam);
    let f0 = f.eval(lam, zs)?;
    let om = model.holomorphic_differentials(z)?;

    let mut s = c(0.0);
    for za in zs {
        s += kern.green(z, za)?;
    }
    // ½(∂ + 2S)² f with ∂ = Σ ω_a(z)∂_{λ_a}
    let mut out = f0.scale(2.0 * s * s);
    if g > 0 {
        let d1 = f0.directional(&om)?;
        let d2 = d1.directional(&om)?;
        out = &(&out + &d2.scale(c(0.5))) + &d1.scale(2.0 * s);
        for a in 0..g {
            let dw = kern.connection_d_omega_jet(&mu, a, z)?;
            out = &out + &(&dw * &f0.derivative(a, 1)?);
        }
    }
    // 2 Σ_α D^{(2λ)} G(·, z_α) = 2 Σ_α (∂_z G − 2 g_{2λ} G)
    if !zs.is_empty() {
        let g2 = kern.g_twisted_jet(&mu, z)?;
        let mut dsum = Jet::zero(g2.base(), g2.order());
        for za in zs {
            let gz = kern.green(z, za)?;
            dsum = &dsum + &g2.scale(c(-2.0) * gz).add_const(kern.green_dz(z, za)?);
        }
        out = &out + &(&dsum * &f0).scale(c(2.0));
    }
    out = &out + &(&kern.omega_quadratic_jet(&mu, z)? * &f0).scale(k);

    for (alpha, za) in zs.iter().enumerate() {
        let mut moved = zs.to_vec();
        moved[alpha] = z.clone();
        let fa = f.eval(lam, &moved)?;
        let oa = model.holomorphic_differentials(za)?;
        let mut pair = c(0.0);
        for (beta, zb) in zs.iter().enumerate() {
            if beta != alpha {
                pair += kern.green(za, zb)?;
            }
        }
        let inner = &along(&fa, &oa)? + &fa.scale(2.0 * pair);
        let gt = kern.green_twisted_jet(&mu, z, za)?;
        let dgt = kern.green_twisted_dw_jet(&mu, z, za)?;
        let back = kern.green(za, z)?;
        let coeff = &gt.scale(-4.0 * back) + &dgt.scale(2.0 * k);
        out = &out + &(&(&gt * &inner).scale(c(-2.0)) + &(&coeff * &fa));
    }
    Ok(out)
}

/// `T_w f` as a correlation form, for composing operators.
pub fn tz_form(kern: &Kernels, k: Complex64, f: &CorrelationForm, w: &Point) -> CorrelationForm {
    let kern = kern.clone();
    let inner = f.clone();
    let w = w.clone();
    CorrelationForm::new(f.n, k, f.pole_bound, move |lam, zs| {
        apply_tz(&kern, k, &inner, lam, &w, zs)
    })
}

/// The `n = 0` operator on a function of λ given as a jet at `λ_0`:
/// `½(Σ_a ω_a(z)∂_a)² f + Σ_a D^{(2λ)}ω_a(z) ∂_a f + k ω_{2λ}(z) f`.
pub fn apply_tz_n0(kern: &Kernels, k: Complex64, f: &Jet, z: &Point) -> Result<Jet> {
    let g = kern.genus();
    if f.nvars() != g {
        return Err(KzbError::Invalid(format!("expected a jet in {g} variables")));
    }
    if g > 0 && f.order() < 2 {
        return Err(KzbError::InsufficientJetOrder {
            needed: 2,
            got: f.order(),
        });
    }
    let lam = Jet::variables(f.base(), f.order());
    let mu = twice(&lam);
    let mut out = (&kern.omega_quadratic_jet(&mu, z)? * f).scale(k);
    if g > 0 {
        let om = kern.model().holomorphic_differentials(z)?;
        out = &out + &f.directional(&om)?.directional(&om)?.scale(c(0.5));
        for a in 0..g {
            let dw = kern.connection_d_omega_jet(&mu, a, z)?;
            out = &out + &(&dw * &f.derivative(a, 1)?);
        }
    }
    Ok(out)
}

/// `|T_z T_w f − T_w T_z f| / (|T_z T_w f| + |T_w T_z f| + 1)` at `λ_0`,
/// with λ-jets of order [`COMMUTATOR_ORDER`].
pub fn commutator_norm(
    kern: &Kernels,
    k: Complex64,
    f: &CorrelationForm,
    lam0: &[Complex64],
    z: &Point,
    w: &Point,
    zs: &[Point],
) -> Result<f64> {
    let lam = Jet::variables(lam0, COMMUTATOR_ORDER);
    let a = apply_tz(kern, k, &tz_form(kern, k, f, w), &lam, z, zs)?.value();
    let b = apply_tz(kern, k, &tz_form(kern, k, f, z), &lam, w, zs)?.value();
    Ok((a - b).norm() / (a.norm() + b.norm() + 1.0))
}

/// `(f̃[ρ]f)(z_1…z_{n+1}) = Σ_i [−ρ(z_i)(Σ_a ω_a(z_i)∂_{λ_a} + 2Σ_{j≠i}G(z_i,z_j))
/// + k dρ(z_i)] f(z_1…ẑ_i…z_{n+1})`.
///
/// `rho(λ, z)` returns `(ρ(z), dρ/dz)`; it must be twisted by `e^{−2λ_a}`
/// around `B_a`, like the arguments of `f`, which is checked at `lam0`.
pub fn apply_ftilde<R>(
    kern: &Kernels,
    k: Complex64,
    rho: R,
    f: &CorrelationForm,
    lam0: &[Complex64],
) -> Result<CorrelationForm>
where
    R: Fn(&[Jet], &Point) -> Result<(Jet, Jet)> + Send + Sync + 'static,
{
    let g = kern.genus();
    let probe = [Complex64::new(0.31, 0.17), Complex64::new(-0.23, 0.41)];
    let lam = Jet::variables(lam0, 0);
    for t in probe {
        let p = Point::new(t);
        let base = rho(&lam, &p)?.0.value();
        for a in 0..g {
            let moved = rho(&lam, &p.around_b(a, g))?.0.value();
            let want = base * (-2.0 * lam0[a]).exp();
            if (moved - want).norm() > 1e-7 * (1.0 + want.norm()) {
                return Err(KzbError::MonodromyMismatch);
            }
        }
    }
    let kern = kern.clone();
    let inner = f.clone();
    Ok(CorrelationForm::new(f.n + 1, k, f.pole_bound + 1, move |lam, zs| {
        let model = kern.model();
        let mut out: Option<Jet> = None;
        for (i, zi) in zs.iter().enumerate() {
            let rest: Vec<Point> = zs
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, p)| p.clone())
                .collect();
            let fi = inner.eval(lam, &rest)?;
            let (r, dr) = rho(lam, zi)?;
            let mut pair = c(0.0);
            for zj in &rest {
                pair += kern.green(zi, zj)?;
            }
            let oi = model.holomorphic_differentials(zi)?;
            let first = &along(&fi, &oi)? + &fi.scale(2.0 * pair);
            let term = &(&dr * &fi).scale(k) - &(&r * &first);
            out = Some(match out {
                None => term,
                Some(acc) => &acc + &term,
            });
        }
        out.ok_or_else(|| KzbError::Invalid("empty configuration".into()))
    }))
}
