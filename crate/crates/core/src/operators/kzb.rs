//! Right-hand sides of the KZB connection along marked-point motions.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{along, twice, CorrelationForm};
use crate::error::{KzbError, Result};
use crate::jets::Jet;
use crate::kernels::{Kernels, Moving};
use crate::Point;

const RES_RADIUS: f64 = 1e-2;
const RES_POINTS: usize = 64;

/// Marked points `P_i` with weights `Λ_i` at level `k`.
#[derive(Clone, Debug)]
pub struct KzbConfig {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub k: Complex64,
}

impl KzbConfig {
    pub fn new(points: Vec<Point>, weights: Vec<f64>, k: Complex64) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(KzbError::Invalid("one weight per marked point".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(KzbError::Invalid("weights must be nonnegative".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if p.t == Complex64::new(0.0, 0.0) {
                return Err(KzbError::Invalid("marked point coincides with the base point".into()));
            }
            if points[i + 1..].iter().any(|q| q.t == p.t) {
                return Err(KzbError::CoincidentPoints);
            }
        }
        Ok(KzbConfig { points, weights, k })
    }
}

/// `res_{z=P} f(…z…)` with `z` in `slot`, by the trapezoid rule on a circle of
/// radius `10⁻²`. Fails if the pole at `P` is not simple.
pub fn residue_at(f: &CorrelationForm, lam: &[Jet], zs: &[Point], slot: usize, p: &Point) -> Result<Jet> {
    let mut moved = zs.to_vec();
    let mut res: Option<Jet> = None;
    let mut second = Complex64::new(0.0, 0.0);
    let mut peak: f64 = 0.0;
    for j in 0..RES_POINTS {
        let h = Complex64::from_polar(RES_RADIUS, 2.0 * PI * j as f64 / RES_POINTS as f64);
        moved[slot] = p.offset(h);
        let v = f.eval(lam, &moved)?;
        peak = peak.max(v.value().norm());
        second += v.value() * h * h;
        let term = v.scale(h / RES_POINTS as f64);
        res = Some(match res {
            None => term,
            Some(acc) => &acc + &term,
        });
    }
    let res = res.expect("nonempty circle");
    let second = second / RES_POINTS as f64;
    let scale = res.value().norm() + peak * RES_RADIUS;
    if !scale.is_finite() || second.norm() > 1e-6 * scale {
        return Err(KzbError::ResidueFitFailure);
    }
    Ok(res)
}

/// The bracket `K_i f` with `2(k+2)∇_{∂/∂P_i} f = 2(k+2)∂f/∂P_i − K_i f`:
///
/// `[−Λ_iΣ_a ω_a(P_i)∂_a + Λ_i(Σ_{j≠i}Λ_jG(P_i,P_j) − 2Σ_αG(P_i,z_α)) + Λ_i²φ(P_i)
/// + 2Λ_i g_{2λ}(P_i)] f − Σ_α [−2G_{2λ}(P_i,z_α)(Σ_a ω_a(z_α)∂_a + 2Σ_{β≠α}G(z_α,z_β))
/// − 4G_{2λ}(P_i,z_α)G(z_α,P_i) + 2k d_{z_α}G_{2λ}(z_α,P_i)] res_{z=P_i} f(…z…)`,
/// with `z` in slot `α` of the residue.
pub fn kzb_point_variation(
    kern: &Kernels,
    cfg: &KzbConfig,
    f: &CorrelationForm,
    lam: &[Jet],
    zs: &[Point],
    i: usize,
) -> Result<Jet> {
    let pi = cfg
        .points
        .get(i)
        .ok_or_else(|| KzbError::Invalid(format!("no marked point {i}")))?;
    let li = cfg.weights[i];
    let model = kern.model();
    let mu = twice(lam);
    let f0 = f.eval(lam, zs)?;

    let mut scalar = li * li * kern.phi(pi)?;
    for (j, (pj, lj)) in cfg.points.iter().zip(&cfg.weights).enumerate() {
        if j != i {
            scalar += li * lj * kern.green(pi, pj)?;
        }
    }
    for za in zs {
        scalar -= 2.0 * li * kern.green(pi, za)?;
    }
    let gl = kern.g_twisted_jet(&mu, pi)?;
    let coeff = gl.scale(Complex64::new(2.0 * li, 0.0)).add_const(scalar);
    let op = model.holomorphic_differentials(pi)?;
    let mut out = &(&coeff * &f0) - &along(&f0, &op)?.scale(Complex64::new(li, 0.0));

    for (alpha, za) in zs.iter().enumerate() {
        let res = residue_at(f, lam, zs, alpha, pi)?;
        let oa = model.holomorphic_differentials(za)?;
        let mut pair = Complex64::new(0.0, 0.0);
        for (beta, zb) in zs.iter().enumerate() {
            if beta != alpha {
                pair += kern.green(za, zb)?;
            }
        }
        let gt = kern.green_twisted_jet(&mu, pi, za)?;
        let dgt = kern.green_twisted_series(&mu, za, pi, Moving::First, 2)?.coeff(1);
        let back = kern.green(za, pi)?;
        let inner = &along(&res, &oa)? + &res.scale(2.0 * pair);
        let mult = &gt.scale(-4.0 * back) + &dgt.scale(2.0 * cfg.k);
        let block = &(&gt * &inner).scale(Complex64::new(-2.0, 0.0)) + &(&mult * &res);
        out = &out - &block;
    }
    Ok(out)
}

/// `½Λ_i(Λ_i + 2)`, the scalar in the coordinate-variation direction at `P_i`.
pub fn kzb_coordinate_variation(cfg: &KzbConfig, i: usize) -> f64 {
    let l = cfg.weights[i];
    0.5 * l * (l + 2.0)
}
