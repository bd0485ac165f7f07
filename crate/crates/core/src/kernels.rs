//! Two-point kernels `G`, `G_λ`, `G_λ^Q`, `ω̃` and the local quantities read
//! off their diagonal expansions: `φ`, `g_λ`, the connection `D^{(λ)}`, the
//! quadratic differential `ω_λ`, the coefficients `a_ij(λ)` and the period
//! variation.
//!
//! Twists `λ` are in multiplicative units: a `λ`-twisted form picks up
//! `e^{λ_a}` around `B_a`. Values are coefficients of `dt` (or `dt dt'`, `dt²`)
//! in the chart coordinate of the model. Twist-dependent kernels are also
//! available on `λ`-jets, for differentiation in the twist.
//!
//! Diagonal limits are taken on truncated Laurent series in the distance `h`
//! between the two arguments, never by colliding points numerically.

use std::sync::Arc;

use num_complex::Complex64;

use crate::curve::{CurveModel, Point, TWO_PI_I};
use crate::error::{KzbError, Result};
use crate::jets::Jet;
use crate::series::{Algebra, HSeries, Laurent};
use crate::theta::{self, Characteristic, PeriodMatrix};

/// Relative threshold on `|Θ(e − λ/2πi)|` below which a twist is rejected.
pub const GENERIC_TOL: f64 = 1e-10;
const POLE_TOL: f64 = 1e-13;
/// Extra series terms carried to absorb the order lost in divisions.
const GUARD: usize = 2;

/// Twist vector `λ = (λ_a)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwistVector {
    pub lambda: Vec<Complex64>,
}

impl TwistVector {
    pub fn new(lambda: Vec<Complex64>) -> Self {
        TwistVector { lambda }
    }

    pub fn doubled(&self) -> Self {
        TwistVector::new(self.lambda.iter().map(|l| l * 2.0).collect())
    }
}

/// Formal sum of chart points with integer multiplicities.
#[derive(Clone, Debug, PartialEq)]
pub struct Divisor {
    pub points: Vec<(Point, i32)>,
}

impl Divisor {
    pub fn new(points: Vec<(Point, i32)>) -> Self {
        Divisor { points }
    }

    pub fn degree(&self) -> i32 {
        self.points.iter().map(|(_, n)| n).sum()
    }

    pub fn is_effective(&self) -> bool {
        self.points.iter().all(|(_, n)| *n >= 0)
    }
}

/// Which argument of a two-point kernel is expanded as `t + h`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Moving {
    First,
    Second,
}

#[derive(Clone, Debug)]
struct ThetaData {
    tau: PeriodMatrix,
    ch: Characteristic,
    p0: Point,
    /// `(g−1)A(P_0) − Δ`.
    e: Vec<Complex64>,
    /// `gA(P_0) − Δ`.
    f: Vec<Complex64>,
    /// `∂_aΘ(e)`.
    grad_e: Vec<Complex64>,
    scale: f64,
    /// `Θ(f − A(z))` vanishes identically in `z` (`P_0` a Weierstrass point of
    /// a curve of genus ≥ 2); the normalizing term is then its limit along
    /// `ω^c(P_0)`.
    degenerate: bool,
    omega_p0: Vec<Complex64>,
}

/// Abel map and classical differentials at a point, as series in `h`.
struct Local {
    abel: Vec<HSeries>,
    omega: Vec<HSeries>,
    t: Complex64,
    at_base: bool,
}

/// Kernel evaluator bound to a curve model and a base point `P_0`.
#[derive(Clone, Debug)]
pub struct Kernels {
    model: Arc<CurveModel>,
    data: Option<Arc<ThetaData>>,
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn scalar_proto() -> Jet {
    Jet::constant(&[], 0, c(0.0))
}

fn twist_jets(lam: &[Complex64]) -> Vec<Jet> {
    Jet::variables(lam, 0)
}

fn laurent_const(x: &Jet, len: usize) -> Laurent {
    Laurent::new(0, HSeries::constant(x.clone(), len))
}

fn truncate(l: Laurent, terms: usize) -> Laurent {
    let n = terms.min(l.series.len());
    Laurent::new(l.val, l.series.truncate(n))
}

impl Kernels {
    /// Kernels with `P_0` at the chart origin.
    pub fn new(model: &CurveModel) -> Result<Self> {
        Self::with_base_point(model, &Point::new(c(0.0)))
    }

    /// Kernels normalized at an arbitrary base point `P_0` (genus ≥ 1).
    pub fn with_base_point(model: &CurveModel, p0: &Point) -> Result<Self> {
        let shared = Arc::new(model.clone());
        if model.genus() == 0 {
            return Ok(Kernels {
                model: shared,
                data: None,
            });
        }
        let tau = model.period_matrix()?.clone();
        let g = tau.g();
        let ch = Characteristic::zero(g);
        let delta = model.riemann_constants()?;
        let a0 = model.abel(p0)?;
        let e: Vec<Complex64> = (0..g).map(|a| a0[a] * (g as f64 - 1.0) - delta[a]).collect();
        let f: Vec<Complex64> = (0..g).map(|a| a0[a] * g as f64 - delta[a]).collect();
        let table = theta::theta_table(&e, &tau, &ch, 1)?;
        let grad_e = (0..g)
            .map(|a| {
                let mut alpha = vec![0u8; g];
                alpha[a] = 1;
                table.partial(&alpha)
            })
            .collect();
        let scale = theta::theta(&vec![c(0.0); g], &tau, &ch)?.norm();
        let degenerate = match model {
            CurveModel::Hyperelliptic(h) if g >= 2 => {
                let mut vanish = true;
                for t in h.sample_points(3) {
                    let az = model.abel(&Point::new(t))?;
                    let y: Vec<Complex64> = (0..g).map(|a| f[a] - az[a]).collect();
                    vanish &= theta::theta(&y, &tau, &ch)?.norm() < 1e-9 * scale;
                }
                vanish
            }
            _ => false,
        };
        let omega_p0 = model.omega_classical(p0)?;
        Ok(Kernels {
            model: shared,
            data: Some(Arc::new(ThetaData {
                tau,
                ch,
                p0: p0.clone(),
                e,
                f,
                grad_e,
                scale,
                degenerate,
                omega_p0,
            })),
        })
    }

    pub fn model(&self) -> &CurveModel {
        &self.model
    }

    pub fn genus(&self) -> usize {
        self.model.genus()
    }

    fn local(&self, d: &ThetaData, p: &Point, proto: &Jet, len: usize, moving: bool) -> Result<Local> {
        let a0 = self.model.abel(p)?;
        let (abel, omega) = if moving {
            let om = self.model.omega_classical_series(p, len)?;
            let omega: Vec<HSeries> = om.iter().map(|s| HSeries::from_scalars(proto, s)).collect();
            let abel = omega
                .iter()
                .zip(&a0)
                .map(|(w, a)| w.integral().truncate(len).plus_scalar(*a))
                .collect();
            (abel, omega)
        } else {
            let om = self.model.omega_classical(p)?;
            let k = |x: &Complex64| HSeries::constant(proto.constant_like(*x), len);
            (a0.iter().map(k).collect(), om.iter().map(k).collect())
        };
        Ok(Local {
            abel,
            omega,
            t: p.t,
            at_base: p.t == d.p0.t,
        })
    }

    fn locals(
        &self,
        d: &ThetaData,
        z: &Point,
        w: &Point,
        proto: &Jet,
        len: usize,
        moving: Option<Moving>,
    ) -> Result<(Local, Local)> {
        Ok((
            self.local(d, z, proto, len, moving == Some(Moving::First))?,
            self.local(d, w, proto, len, moving == Some(Moving::Second))?,
        ))
    }

    fn data(&self) -> Result<&ThetaData> {
        self.data
            .as_deref()
            .ok_or_else(|| KzbError::Invalid("operation needs genus >= 1".into()))
    }

    /// `Θ` series as a Laurent series, dividing out the known simple zero.
    fn vanishing(&self, d: &ThetaData, s: HSeries, zero: bool) -> Result<Laurent> {
        if zero {
            return Ok(Laurent::new(1, s.shift_down(1)));
        }
        if s.scalar_part().norm() <= POLE_TOL * d.scale {
            return Err(KzbError::PoleAtArgument);
        }
        Ok(Laurent::new(0, s))
    }

    fn theta_h(&self, d: &ThetaData, args: &[HSeries]) -> Result<HSeries> {
        theta::theta_compose(args, &d.tau, &d.ch)
    }

    /// `Θ(e − μ/2πi)` after the genericity gate.
    fn twist_denominator(&self, d: &ThetaData, e: &[Complex64], mu: &[Jet]) -> Result<Jet> {
        let g = d.tau.g();
        if mu.len() != g {
            return Err(KzbError::Invalid(format!("twist must have {g} entries")));
        }
        let args: Vec<Jet> = (0..g).map(|a| mu[a].scale(-1.0 / TWO_PI_I).add_const(e[a])).collect();
        let den = theta::theta_jet(&args, &d.tau, &d.ch)?;
        if den.value().norm() <= GENERIC_TOL * d.scale {
            return Err(KzbError::NonGenericTwist);
        }
        Ok(den)
    }

    fn twisted_core(
        &self,
        d: &ThetaData,
        e: &[Complex64],
        grad_e: &[Complex64],
        mu: &[Jet],
        z: &Local,
        w: &Local,
    ) -> Result<Laurent> {
        let g = d.tau.g();
        let len = z.abel[0].len();
        let cden = self.twist_denominator(d, e, mu)?;
        let x: Vec<HSeries> = (0..g).map(|a| z.abel[a].minus(&w.abel[a]).plus_scalar(e[a])).collect();
        let xmu: Vec<HSeries> = (0..g)
            .map(|a| x[a].minus(&HSeries::constant(mu[a].scale(1.0 / TWO_PI_I), len)))
            .collect();
        let num = self.theta_h(d, &xmu)?;
        let den = self.vanishing(d, self.theta_h(d, &x)?, z.t == w.t)?;
        let mut wz = z.omega[0].scaled(grad_e[0]);
        for a in 1..g {
            wz = wz.plus(&z.omega[a].scaled(grad_e[a]));
        }
        Laurent::new(0, num.times(&wz)).div(&den.mul(&laurent_const(&cden, len)))
    }

    /// `d_z ln Θ(f − A(z))`, or `d_z ln ∂_{ω^c(P_0)}Θ(f − A(z))` when the former
    /// vanishes identically.
    fn base_term(&self, d: &ThetaData, z: &Local) -> Result<Laurent> {
        let g = d.tau.g();
        let y: Vec<HSeries> = (0..g).map(|a| z.abel[a].scaled(c(-1.0)).plus_scalar(d.f[a])).collect();
        let (t, gr, hs) = theta::theta_with_hessian(&y, &d.tau, &d.ch)?;
        let (value, grad) = if d.degenerate {
            let dir = |row: &[HSeries]| {
                let mut acc = row[0].scaled(d.omega_p0[0]);
                for b in 1..g {
                    acc = acc.plus(&row[b].scaled(d.omega_p0[b]));
                }
                acc
            };
            let q = dir(&gr);
            let dq: Vec<HSeries> = hs.iter().map(|row| dir(row)).collect();
            (q, dq)
        } else {
            (t, gr)
        };
        let den = self.vanishing(d, value, z.at_base)?;
        let mut acc: Option<Laurent> = None;
        for a in 0..g {
            let term = Laurent::new(0, grad[a].times(&z.omega[a])).div(&den)?;
            acc = Some(match acc {
                None => term,
                Some(s) => s.add(&term),
            });
        }
        Ok(acc.expect("genus >= 1").scale(c(-1.0)))
    }

    fn green_core(&self, d: &ThetaData, z: &Local, w: &Local) -> Result<Laurent> {
        let g = d.tau.g();
        if d.degenerate && w.at_base && w.abel[0].len() == 1 {
            // G(z, P_0) is the limit defining the normalizing term.
            let zero = z.abel[0].coeff(0).constant_like(c(0.0));
            return Ok(laurent_const(&zero, 1));
        }
        let x: Vec<HSeries> = (0..g)
            .map(|a| w.abel[a].minus(&z.abel[a]).plus_scalar(d.e[a]))
            .collect();
        let (tx, gx) = theta::theta_with_gradient(&x, &d.tau, &d.ch)?;
        let lx = self.vanishing(d, tx, z.t == w.t)?;
        let mut acc = self.base_term(d, z)?.scale(c(-1.0));
        for a in 0..g {
            let term = Laurent::new(0, gx[a].times(&z.omega[a])).div(&lx)?;
            acc = acc.sub(&term);
        }
        Ok(acc)
    }

    fn omega_tilde_core(&self, d: &ThetaData, z: &Local, w: &Local) -> Result<Laurent> {
        let g = d.tau.g();
        let x: Vec<HSeries> = (0..g)
            .map(|a| w.abel[a].minus(&z.abel[a]).plus_scalar(d.e[a]))
            .collect();
        let (t, gr, hs) = theta::theta_with_hessian(&x, &d.tau, &d.ch)?;
        let lt = self.vanishing(d, t, z.t == w.t)?;
        let lt2 = lt.mul(&lt);
        let mut acc: Option<Laurent> = None;
        for a in 0..g {
            for b in 0..g {
                let second = Laurent::new(0, hs[a][b].clone()).div(&lt)?;
                let first = Laurent::new(0, gr[a].times(&gr[b])).div(&lt2)?;
                let term = first.sub(&second).mul(&Laurent::new(0, z.omega[a].times(&w.omega[b])));
                acc = Some(match acc {
                    None => term,
                    Some(s) => s.add(&term),
                });
            }
        }
        Ok(acc.expect("genus >= 1"))
    }

    // ---- series in h -------------------------------------------------------

    /// `G(z, w)` with one argument expanded, `terms` Laurent coefficients.
    pub fn green_series(&self, z: &Point, w: &Point, moving: Moving, terms: usize) -> Result<Laurent> {
        let proto = scalar_proto();
        let Some(d) = &self.data else {
            return Ok(rational_pole(&proto, z, w, moving, 1, terms));
        };
        let (lz, lw) = self.locals(d, z, w, &proto, terms + GUARD, Some(moving))?;
        Ok(truncate(self.green_core(d, &lz, &lw)?, terms))
    }

    /// `G_μ(z, w)` on a `λ`-jet twist with one argument expanded.
    pub fn green_twisted_series(
        &self,
        mu: &[Jet],
        z: &Point,
        w: &Point,
        moving: Moving,
        terms: usize,
    ) -> Result<Laurent> {
        let proto = proto_of(mu);
        let Some(d) = &self.data else {
            return Ok(rational_pole(&proto, z, w, moving, 1, terms));
        };
        let (lz, lw) = self.locals(d, z, w, &proto, terms + GUARD, Some(moving))?;
        Ok(truncate(self.twisted_core(d, &d.e, &d.grad_e, mu, &lz, &lw)?, terms))
    }

    /// `ω̃(z, w)` with one argument expanded.
    pub fn omega_tilde_series(&self, z: &Point, w: &Point, moving: Moving, terms: usize) -> Result<Laurent> {
        let proto = scalar_proto();
        let Some(d) = &self.data else {
            return Ok(rational_pole(&proto, z, w, moving, 2, terms));
        };
        let (lz, lw) = self.locals(d, z, w, &proto, terms + GUARD + 1, Some(moving))?;
        Ok(truncate(self.omega_tilde_core(d, &lz, &lw)?, terms))
    }

    // ---- point values ------------------------------------------------------

    /// `G(z, w)`, coefficient of `dz`.
    pub fn green(&self, z: &Point, w: &Point) -> Result<Complex64> {
        let Some(d) = &self.data else {
            return rational_value(z, w, 1);
        };
        let proto = scalar_proto();
        let (lz, lw) = self.locals(d, z, w, &proto, 1, None)?;
        if z.t == w.t {
            return Err(KzbError::PoleAtArgument);
        }
        Ok(self.green_core(d, &lz, &lw)?.coeff(0).value())
    }

    /// `∂_z G(z, w)`.
    pub fn green_dz(&self, z: &Point, w: &Point) -> Result<Complex64> {
        if z.t == w.t {
            return Err(KzbError::PoleAtArgument);
        }
        Ok(self.green_series(z, w, Moving::First, 2)?.coeff(1).value())
    }

    /// `G_μ(z, w)` for a numeric twist.
    pub fn green_twisted(&self, mu: &[Complex64], z: &Point, w: &Point) -> Result<Complex64> {
        Ok(self.green_twisted_jet(&twist_jets(mu), z, w)?.value())
    }

    /// `G_μ(z, w)` as a jet in the twist.
    pub fn green_twisted_jet(&self, mu: &[Jet], z: &Point, w: &Point) -> Result<Jet> {
        let proto = proto_of(mu);
        let Some(d) = &self.data else {
            return Ok(proto.constant_like(rational_value(z, w, 1)?));
        };
        if z.t == w.t {
            return Err(KzbError::PoleAtArgument);
        }
        let (lz, lw) = self.locals(d, z, w, &proto, 1, None)?;
        Ok(self.twisted_core(d, &d.e, &d.grad_e, mu, &lz, &lw)?.coeff(0))
    }

    /// `∂_w G_μ(z, w)` as a jet in the twist.
    pub fn green_twisted_dw_jet(&self, mu: &[Jet], z: &Point, w: &Point) -> Result<Jet> {
        if z.t == w.t {
            return Err(KzbError::PoleAtArgument);
        }
        Ok(self.green_twisted_series(mu, z, w, Moving::Second, 2)?.coeff(1))
    }

    /// `G_μ^Q(z, w)` for an effective divisor `Q` of degree `g − 1`.
    pub fn green_twisted_q(&self, mu: &[Complex64], q: &Divisor, z: &Point, w: &Point) -> Result<Complex64> {
        let d = self.data()?;
        let g = d.tau.g();
        if q.degree() != g as i32 - 1 || !q.is_effective() {
            return Err(KzbError::BadDivisorDegree { expected: g - 1 });
        }
        if z.t == w.t {
            return Err(KzbError::PoleAtArgument);
        }
        let delta = self.model.riemann_constants()?;
        let mut e: Vec<Complex64> = delta.iter().map(|x| -x).collect();
        for (p, n) in &q.points {
            for (ea, aa) in e.iter_mut().zip(self.model.abel(p)?) {
                *ea += aa * *n as f64;
            }
        }
        let table = theta::theta_table(&e, &d.tau, &d.ch, 1)?;
        let grad: Vec<Complex64> = (0..g)
            .map(|a| {
                let mut alpha = vec![0u8; g];
                alpha[a] = 1;
                table.partial(&alpha)
            })
            .collect();
        let jets = twist_jets(mu);
        let proto = proto_of(&jets);
        let (lz, lw) = self.locals(d, z, w, &proto, 1, None)?;
        Ok(self.twisted_core(d, &e, &grad, &jets, &lz, &lw)?.coeff(0).value())
    }

    /// `ω̃(z, w)`, coefficient of `dz dw`.
    pub fn omega_tilde(&self, z: &Point, w: &Point) -> Result<Complex64> {
        let Some(d) = &self.data else {
            return rational_value(z, w, 2);
        };
        if z.t == w.t {
            return Err(KzbError::PoleAtArgument);
        }
        let proto = scalar_proto();
        let (lz, lw) = self.locals(d, z, w, &proto, 1, None)?;
        Ok(self.omega_tilde_core(d, &lz, &lw)?.coeff(0).value())
    }

    /// Whether `μ` passes the genericity gate.
    pub fn is_generic(&self, mu: &[Complex64]) -> Result<bool> {
        let Some(d) = &self.data else {
            return Ok(true);
        };
        match self.twist_denominator(d, &d.e, &twist_jets(mu)) {
            Ok(_) => Ok(true),
            Err(KzbError::NonGenericTwist) => Ok(false),
            Err(e) => Err(e),
        }
    }

    // ---- diagonal quantities -----------------------------------------------

    /// `φ(z)`: `G(z, w) = 1/(z − w) + φ(z) + O(z − w)`.
    pub fn phi(&self, z: &Point) -> Result<Complex64> {
        if self.data.is_none() {
            return Ok(c(0.0));
        }
        Ok(self.green_series(z, z, Moving::Second, 2)?.coeff(0).value())
    }

    /// `g_μ(z)`: `G_μ(z, w) = 1/(z − w) + g_μ(z) + O(z − w)`.
    pub fn g_twisted(&self, mu: &[Complex64], z: &Point) -> Result<Complex64> {
        Ok(self.g_twisted_jet(&twist_jets(mu), z)?.value())
    }

    pub fn g_twisted_jet(&self, mu: &[Jet], z: &Point) -> Result<Jet> {
        Ok(self.green_twisted_series(mu, z, z, Moving::Second, 2)?.coeff(0))
    }

    /// Closed form
    /// `g_μ = φ + Σ_a ω^c_a(z) ∂_a ln Θ(e − μ/2πi) + d_z ln Θ(f − A(z))`.
    pub fn g_twisted_closed(&self, mu: &[Complex64], z: &Point) -> Result<Complex64> {
        let Some(d) = &self.data else {
            return Ok(c(0.0));
        };
        let g = d.tau.g();
        let jets = twist_jets(mu);
        self.twist_denominator(d, &d.e, &jets)?;
        let twisted: Vec<Complex64> = (0..g).map(|a| d.e[a] - mu[a] / TWO_PI_I).collect();
        let dl = log_gradient(d, &twisted)?;
        let om = self.model.omega_classical(z)?;
        let proto = scalar_proto();
        let base = self
            .base_term(d, &self.local(d, z, &proto, 1, false)?)?
            .coeff(0)
            .value();
        let corr: Complex64 = (0..g).map(|a| om[a] * dl[a]).sum::<Complex64>() + base;
        Ok(self.phi(z)? + corr)
    }

    /// `(φ(z), g_μ(z))`.
    pub fn phi_and_glambda(&self, mu: &[Complex64], z: &Point) -> Result<(Complex64, Complex64)> {
        Ok((self.phi(z)?, self.g_twisted(mu, z)?))
    }

    /// `D^{(μ)}_z ω = −lim_{z'→z}(ω(z')G_μ(z, z') + ω(z)G_μ(z', z))` for a
    /// differential given by its Taylor coefficients at `z`.
    pub fn connection_d(&self, mu: &[Complex64], omega: &[Complex64], z: &Point) -> Result<Complex64> {
        Ok(self.connection_d_jet(&twist_jets(mu), omega, z)?.value())
    }

    pub fn connection_d_jet(&self, mu: &[Jet], omega: &[Complex64], z: &Point) -> Result<Jet> {
        let proto = proto_of(mu);
        let terms = 3;
        let mut taylor = omega.to_vec();
        taylor.resize(terms, c(0.0));
        let om = Laurent::new(0, HSeries::from_scalars(&proto, &taylor));
        let second = self.green_twisted_series(mu, z, z, Moving::Second, terms)?;
        let first = self.green_twisted_series(mu, z, z, Moving::First, terms)?;
        let total = om
            .mul(&second)
            .add(&first.mul(&laurent_const(&proto.constant_like(taylor[0]), terms)));
        Ok(-&total.coeff(0))
    }

    /// `D^{(μ)}_z ω_a` for the normalized holomorphic differential `ω_a`.
    pub fn connection_d_omega_jet(&self, mu: &[Jet], a: usize, z: &Point) -> Result<Jet> {
        let om = self.model.omega_classical_series(z, 3)?;
        let taylor: Vec<Complex64> = om[a].iter().map(|x| x * TWO_PI_I).collect();
        self.connection_d_jet(mu, &taylor, z)
    }

    /// `ω' − 2g_μ ω`, the same connection through its Leibniz form.
    pub fn connection_d_closed(&self, mu: &[Complex64], omega: &[Complex64], z: &Point) -> Result<Complex64> {
        let w0 = omega.first().copied().unwrap_or(c(0.0));
        let w1 = omega.get(1).copied().unwrap_or(c(0.0));
        Ok(w1 - 2.0 * self.g_twisted(mu, z)? * w0)
    }

    /// `ω_μ(z) = lim (d_{z'}G_μ(z,z') + d_zG_μ(z',z) − 2ω̃(z,z'))`, coefficient
    /// of `dz²`.
    pub fn omega_quadratic(&self, mu: &[Complex64], z: &Point) -> Result<Complex64> {
        Ok(self.omega_quadratic_jet(&twist_jets(mu), z)?.value())
    }

    pub fn omega_quadratic_jet(&self, mu: &[Jet], z: &Point) -> Result<Jet> {
        let proto = proto_of(mu);
        if self.data.is_none() {
            return Ok(proto.constant_like(c(0.0)));
        }
        // With G_μ(z, z+h) = −1/h + g_μ − c_μ h + … and ω̃(z, z+h) = 1/h² + r + …,
        // the limit equals −2c_μ − 2r.
        let gs = self.green_twisted_series(mu, z, z, Moving::Second, 3)?;
        let ws = self.omega_tilde_series(z, z, Moving::Second, 3)?;
        let r = proto.constant_like(ws.coeff(0).value());
        Ok((&gs.coeff(1) - &r).scale(c(2.0)))
    }

    /// Taylor coefficients `a_ij(λ)`, `i ≤ imax`, `j ≤ jmax`, of
    /// `G_{2λ}(z,w) z^{1−g} w^{g−1} − 1/(z − w)` at `z = w = P_0`, from a
    /// two-torus Fourier fit.
    pub fn a_coeffs(&self, lam: &[Complex64], imax: usize, jmax: usize) -> Result<Vec<Vec<Complex64>>> {
        let d = self.data()?;
        let n = 32usize;
        if imax >= n / 2 || jmax >= n / 2 {
            return Err(KzbError::FitIllConditioned);
        }
        let mu: Vec<Complex64> = lam.iter().map(|l| l * 2.0).collect();
        let jets = twist_jets(&mu);
        let proto = proto_of(&jets);
        let radius = self.model.chart_radius().min(1.0);
        let (r1, r2) = (0.5 * radius, 0.3 * radius);
        let g = d.tau.g() as i32;
        let zs: Vec<Complex64> = (0..n)
            .map(|j| Complex64::from_polar(r1, 2.0 * std::f64::consts::PI * j as f64 / n as f64))
            .collect();
        let ws: Vec<Complex64> = (0..n)
            .map(|k| Complex64::from_polar(r2, 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / n as f64))
            .collect();
        let lz = zs
            .iter()
            .map(|&t| self.local(d, &Point::new(t), &proto, 1, false))
            .collect::<Result<Vec<_>>>()?;
        let lw = ws
            .iter()
            .map(|&t| self.local(d, &Point::new(t), &proto, 1, false))
            .collect::<Result<Vec<_>>>()?;
        let mut samples = vec![vec![c(0.0); n]; n];
        for (j, (z, a)) in zs.iter().zip(&lz).enumerate() {
            for (k, (w, b)) in ws.iter().zip(&lw).enumerate() {
                let gv = self.twisted_core(d, &d.e, &d.grad_e, &jets, a, b)?.coeff(0).value();
                samples[j][k] = gv * z.powi(1 - g) * w.powi(g - 1) - 1.0 / (z - w);
            }
        }
        let mut out = vec![vec![c(0.0); jmax + 1]; imax + 1];
        for (i, row) in out.iter_mut().enumerate() {
            for (jj, slot) in row.iter_mut().enumerate() {
                let mut acc = c(0.0);
                for (j, z) in zs.iter().enumerate() {
                    for (k, w) in ws.iter().enumerate() {
                        acc += samples[j][k] * z.powi(-(i as i32)) * w.powi(-(jj as i32));
                    }
                }
                *slot = acc / (n * n) as f64;
            }
        }
        Ok(out)
    }

    /// `δτ_ab = res_{P_0}(ω_a ω_b ξ)` for `ξ = Σ ξ_k z^k ∂_z`, given as
    /// `(k, ξ_k)` pairs.
    pub fn period_variation(&self, xi: &[(i32, Complex64)]) -> Result<Vec<Vec<Complex64>>> {
        let g = self.genus();
        if g == 0 {
            return Ok(Vec::new());
        }
        let need = xi.iter().map(|(k, _)| (-k).max(0) as usize).max().unwrap_or(0);
        let len = need.max(1);
        let om = self.model.omega_classical_series(&self.data()?.p0, len)?;
        let mut out = vec![vec![c(0.0); g]; g];
        for a in 0..g {
            for b in 0..g {
                let mut acc = c(0.0);
                for &(k, x) in xi {
                    // coefficient of z^{−1−k} in ω_a ω_b
                    let m = -1 - k;
                    if m < 0 {
                        continue;
                    }
                    let m = m as usize;
                    let prod: Complex64 = (0..=m).map(|i| om[a][i] * om[b][m - i]).sum();
                    acc += x * prod * TWO_PI_I * TWO_PI_I;
                }
                out[a][b] = acc;
            }
        }
        Ok(out)
    }
}

fn proto_of(mu: &[Jet]) -> Jet {
    match mu.first() {
        Some(j) => j.constant_like(c(0.0)),
        None => scalar_proto(),
    }
}

fn log_gradient(d: &ThetaData, x: &[Complex64]) -> Result<Vec<Complex64>> {
    let g = d.tau.g();
    let table = theta::theta_table(x, &d.tau, &d.ch, 1)?;
    let v = table.value();
    if v.norm() <= POLE_TOL * d.scale {
        return Err(KzbError::PoleAtArgument);
    }
    Ok((0..g)
        .map(|a| {
            let mut alpha = vec![0u8; g];
            alpha[a] = 1;
            table.partial(&alpha) / v
        })
        .collect())
}

/// `(z − w)^{−p}` on the rational curve.
fn rational_value(z: &Point, w: &Point, p: i32) -> Result<Complex64> {
    if z.t == w.t {
        return Err(KzbError::PoleAtArgument);
    }
    Ok((z.t - w.t).powi(-p))
}

/// Series of `(z − w)^{−p}` with one argument moved by `h`.
fn rational_pole(proto: &Jet, z: &Point, w: &Point, moving: Moving, p: i32, terms: usize) -> Laurent {
    let sign = if moving == Moving::First { 1.0 } else { -1.0 };
    if z.t == w.t {
        // (±h)^{−p}
        let lead = proto.constant_like(c(sign).powi(-p));
        return Laurent::new(-p, HSeries::constant(lead, terms));
    }
    // (u + s h)^{−p} = Σ_k binom(−p, k) u^{−p−k} (s h)^k
    let u = z.t - w.t;
    let mut coeffs = Vec::with_capacity(terms);
    let mut binom = 1.0;
    for k in 0..terms {
        coeffs.push(proto.constant_like(u.powi(-p - k as i32) * binom * sign.powi(k as i32)));
        binom *= (-p - k as i32) as f64 / (k as f64 + 1.0);
    }
    Laurent::new(0, HSeries::new(coeffs))
}
