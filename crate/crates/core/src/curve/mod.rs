//! Curve models: rational, elliptic `ℂ/(ℤ+τℤ)`, and hyperelliptic.
//!
//! Every model of genus ≥ 1 has a fixed chart coordinate `t` with `P_0` at
//! `t = 0`. Kernel values are coefficients of `dt`. Internally the Abel map and
//! the differentials use classical units, `∮_{A_a} ω^c_b = δ_{ab}`; the
//! differentials exposed by [`CurveModel::holomorphic_differentials`] are
//! `ω_a = 2πi ω^c_a`.

mod elliptic;
mod hyperelliptic;

pub use elliptic::EllipticCurve;
pub use hyperelliptic::HyperellipticCurve;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{KzbError, Result};
use crate::theta::{self, Characteristic, PeriodMatrix};

pub(crate) const TWO_PI_I: Complex64 = Complex64::new(0.0, 2.0 * std::f64::consts::PI);

/// A point of the universal cover, given by its chart coordinate and the
/// lattice translation `m + τn` accumulated by its lift.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub t: Complex64,
    pub shift_a: Vec<i32>,
    pub shift_b: Vec<i32>,
}

impl Point {
    pub fn new(t: Complex64) -> Self {
        Point {
            t,
            shift_a: Vec::new(),
            shift_b: Vec::new(),
        }
    }

    /// The same point transported once around `A_a`.
    pub fn around_a(&self, a: usize, g: usize) -> Self {
        let mut p = self.padded(g);
        p.shift_a[a] += 1;
        p
    }

    /// The same point transported once around `B_a`.
    pub fn around_b(&self, a: usize, g: usize) -> Self {
        let mut p = self.padded(g);
        p.shift_b[a] += 1;
        p
    }

    /// Chart coordinate moved by `h`, keeping the lift.
    pub fn offset(&self, h: Complex64) -> Self {
        Point {
            t: self.t + h,
            shift_a: self.shift_a.clone(),
            shift_b: self.shift_b.clone(),
        }
    }

    fn padded(&self, g: usize) -> Self {
        let mut p = self.clone();
        p.shift_a.resize(g, 0);
        p.shift_b.resize(g, 0);
        p
    }

    pub(crate) fn lattice(&self, tau: &PeriodMatrix) -> Vec<Complex64> {
        let g = tau.g();
        let p = self.padded(g);
        let nb: Vec<f64> = p.shift_b.iter().map(|&k| k as f64).collect();
        let tn = tau.apply(&nb);
        (0..g).map(|a| tn[a] + p.shift_a[a] as f64).collect()
    }
}

/// User-facing point representation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CurvePoint {
    /// `None` is the point at infinity.
    Rational(Option<Complex64>),
    /// Stored reduced into the fundamental parallelogram.
    Elliptic(Complex64),
    Hyperelliptic {
        x: Complex64,
        sheet: i8,
    },
}

/// Curve specification as read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum CurveSpec {
    Rational,
    Elliptic { tau: [f64; 2] },
    Hyperelliptic { branch_points: Vec<[f64; 2]> },
}

impl CurveSpec {
    pub fn build(&self) -> Result<CurveModel> {
        match self {
            CurveSpec::Rational => Ok(CurveModel::Rational),
            CurveSpec::Elliptic { tau } => Ok(CurveModel::Elliptic(EllipticCurve::new(Complex64::new(
                tau[0], tau[1],
            ))?)),
            CurveSpec::Hyperelliptic { branch_points } => {
                let pts = branch_points
                    .iter()
                    .map(|p| Complex64::new(p[0], p[1]))
                    .collect::<Vec<_>>();
                Ok(CurveModel::Hyperelliptic(Box::new(HyperellipticCurve::new(&pts)?)))
            }
        }
    }
}

#[derive(Clone, Debug)]
pub enum CurveModel {
    Rational,
    Elliptic(EllipticCurve),
    Hyperelliptic(Box<HyperellipticCurve>),
}

impl CurveModel {
    pub fn elliptic(tau: Complex64) -> Result<Self> {
        Ok(CurveModel::Elliptic(EllipticCurve::new(tau)?))
    }

    pub fn hyperelliptic(branch_points: &[Complex64]) -> Result<Self> {
        Ok(CurveModel::Hyperelliptic(Box::new(HyperellipticCurve::new(
            branch_points,
        )?)))
    }

    pub fn genus(&self) -> usize {
        match self {
            CurveModel::Rational => 0,
            CurveModel::Elliptic(_) => 1,
            CurveModel::Hyperelliptic(h) => h.genus(),
        }
    }

    fn need_positive_genus(&self) -> Result<()> {
        if self.genus() == 0 {
            return Err(KzbError::Invalid("operation needs genus >= 1".into()));
        }
        Ok(())
    }

    pub fn period_matrix(&self) -> Result<&PeriodMatrix> {
        match self {
            CurveModel::Rational => Err(KzbError::Invalid("rational curve has no periods".into())),
            CurveModel::Elliptic(e) => Ok(e.period_matrix()),
            CurveModel::Hyperelliptic(h) => Ok(h.period_matrix()),
        }
    }

    /// Radius of a disk around `P_0` on which the chart coordinate is
    /// analytic and injective (∞ at genus 0).
    pub fn chart_radius(&self) -> f64 {
        match self {
            CurveModel::Rational => f64::INFINITY,
            CurveModel::Elliptic(e) => e.chart_radius() * 0.5,
            CurveModel::Hyperelliptic(h) => h.chart_radius(),
        }
    }

    /// Vector of Riemann constants `Δ` (with `A(P_0) = 0`).
    pub fn riemann_constants(&self) -> Result<Vec<Complex64>> {
        match self {
            CurveModel::Rational => Err(KzbError::Invalid("rational curve has no Jacobian".into())),
            CurveModel::Elliptic(e) => Ok(vec![e.delta()]),
            CurveModel::Hyperelliptic(h) => Ok(h.delta().to_vec()),
        }
    }

    /// Lift a user-facing point to the chart.
    pub fn lift(&self, p: &CurvePoint) -> Result<Point> {
        match (self, p) {
            (CurveModel::Rational, CurvePoint::Rational(Some(z))) => Ok(Point::new(*z)),
            (CurveModel::Elliptic(_), CurvePoint::Elliptic(z)) => Ok(Point::new(*z)),
            (CurveModel::Hyperelliptic(h), CurvePoint::Hyperelliptic { x, sheet }) => h.chart_of(*x, *sheet),
            _ => Err(KzbError::Invalid("point does not belong to this curve model".into())),
        }
    }

    /// Classical Abel map `A(p) = ∫_{P_0}^p ω^c`, including the lift's lattice shift.
    pub fn abel(&self, p: &Point) -> Result<Vec<Complex64>> {
        self.need_positive_genus()?;
        let tau = self.period_matrix()?;
        let base = match self {
            CurveModel::Elliptic(_) => vec![p.t],
            CurveModel::Hyperelliptic(h) => h.abel_chart(p.t)?,
            CurveModel::Rational => unreachable!(),
        };
        Ok(base.iter().zip(p.lattice(tau)).map(|(a, l)| a + l).collect())
    }

    /// Classical differentials `ω^c_a` as coefficients of `dt`.
    pub fn omega_classical(&self, p: &Point) -> Result<Vec<Complex64>> {
        self.need_positive_genus()?;
        match self {
            CurveModel::Elliptic(_) => Ok(vec![Complex64::new(1.0, 0.0)]),
            CurveModel::Hyperelliptic(h) => h.omega_chart(p.t),
            CurveModel::Rational => unreachable!(),
        }
    }

    /// Taylor coefficients in `h` of `ω^c_a(t + h)`, `len` terms per differential.
    pub fn omega_classical_series(&self, p: &Point, len: usize) -> Result<Vec<Vec<Complex64>>> {
        self.need_positive_genus()?;
        match self {
            CurveModel::Elliptic(_) => {
                let mut s = vec![Complex64::new(0.0, 0.0); len];
                s[0] = Complex64::new(1.0, 0.0);
                Ok(vec![s])
            }
            CurveModel::Hyperelliptic(h) => h.omega_chart_series(p.t, len),
            CurveModel::Rational => unreachable!(),
        }
    }

    /// Normalized holomorphic differentials `ω_a = 2πi ω^c_a`, so that
    /// `(1/2πi)∮_{A_a} ω_b = δ_{ab}`. Empty at genus 0.
    pub fn holomorphic_differentials(&self, p: &Point) -> Result<Vec<Complex64>> {
        if self.genus() == 0 {
            return Ok(Vec::new());
        }
        Ok(self.omega_classical(p)?.into_iter().map(|w| w * TWO_PI_I).collect())
    }

    /// `ζ_a(p) = ∫_{P_0}^p ω_a`.
    pub fn zeta_primitive(&self, p: &Point, a: usize) -> Result<Complex64> {
        Ok(self.abel(p)?[a] * TWO_PI_I)
    }

    /// `r_a(p) = −(1/2πi) ∂_a ln Θ(−A(p) − Δ)`: A-periodic, and decreasing by
    /// `δ_{ab}` around `B_b`.
    pub fn r_a(&self, p: &Point, a: usize) -> Result<Complex64> {
        let tau = self.period_matrix()?;
        let delta = self.riemann_constants()?;
        let arg: Vec<Complex64> = self.abel(p)?.iter().zip(&delta).map(|(x, d)| -x - d).collect();
        let table = theta::theta_table(&arg, tau, &Characteristic::zero(tau.g()), 1)?;
        let th = table.value();
        if th.norm() < 1e-14 {
            return Err(KzbError::Singular);
        }
        let mut alpha = vec![0u8; tau.g()];
        alpha[a] = 1;
        Ok(-table.partial(&alpha) / th / TWO_PI_I)
    }
}
