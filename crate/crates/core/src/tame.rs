//! Tame symbols of meromorphic functions on the rational curve (exact) and on
//! elliptic curves (numeric, via `θ₁` quotients), winding numbers along the
//! A-cycle and the twisted function spaces `C_λ`.
//!
//! Local coordinates: `z − x` at finite points, `w = 1/z` at `∞` on the
//! rational curve. On an elliptic curve every support point is lifted to the
//! fundamental parallelogram `{u + vτ : u, v ∈ [0, 1)}` and the A-cycle is the
//! segment `[0, 1]`.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curve::CurveModel;
use crate::error::{KzbError, Result};
use crate::operators::RationalField;
use crate::quadrature::adaptive_segment;
use crate::theta::jacobi_theta1_table;

const I: Complex64 = Complex64::new(0.0, 1.0);
/// Lattice-coordinate tolerance for identifying two points of `ℂ/Λ`.
const SAME_POINT: f64 = 1e-9;
/// Minimal lattice-coordinate distance of a support point from the A-cycle.
const CYCLE_CLEARANCE: f64 = 1e-6;
const WINDING_DEFECT: f64 = 1e-6;
const MONODROMY_TOL: f64 = 1e-8;
const SHIFT_ATTEMPTS: usize = 20;

/// `c Π (z − a)^m` on the rational curve; `∞` carries `−Σm`.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalFunction<T> {
    scalar: T,
    factors: Vec<(T, i64)>,
}

impl<T: RationalField> RationalFunction<T> {
    /// Repeated points are merged and zero multiplicities dropped.
    pub fn new(scalar: T, factors: Vec<(T, i64)>) -> Result<Self> {
        if scalar.is_zero() {
            return Err(KzbError::ZeroFunction);
        }
        let mut merged: Vec<(T, i64)> = Vec::new();
        for (a, m) in factors {
            match merged.iter_mut().find(|(b, _)| *b == a) {
                Some(slot) => slot.1 += m,
                None => merged.push((a, m)),
            }
        }
        merged.retain(|(_, m)| *m != 0);
        Ok(RationalFunction {
            scalar,
            factors: merged,
        })
    }

    pub fn constant(scalar: T) -> Result<Self> {
        Self::new(scalar, Vec::new())
    }

    /// The coordinate function `z`.
    pub fn coordinate() -> Self {
        RationalFunction {
            scalar: T::one(),
            factors: vec![(T::zero(), 1)],
        }
    }

    pub fn scalar(&self) -> &T {
        &self.scalar
    }

    pub fn factors(&self) -> &[(T, i64)] {
        &self.factors
    }

    pub fn eval(&self, z: &T) -> Result<T> {
        let mut out = self.scalar.clone();
        for (a, m) in &self.factors {
            let d = z.clone() - a.clone();
            if d.is_zero() && *m < 0 {
                return Err(KzbError::PoleAtArgument);
            }
            out = out * powi(d, *m);
        }
        Ok(out)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        Self::new(self.scalar.clone() * other.scalar.clone(), factors).expect("product of nonzero scalars")
    }

    pub fn recip(&self) -> Self {
        RationalFunction {
            scalar: T::one() / self.scalar.clone(),
            factors: self.factors.iter().map(|(a, m)| (a.clone(), -m)).collect(),
        }
    }

    /// Order at `∞`.
    pub fn order_at_infinity(&self) -> i64 {
        -self.factors.iter().map(|(_, m)| m).sum::<i64>()
    }

    fn order_at(&self, x: &Support<T>) -> i64 {
        match x {
            Support::Infinity => self.order_at_infinity(),
            Support::Finite(x) => self.factors.iter().find(|(a, _)| a == x).map_or(0, |(_, m)| *m),
        }
    }

    /// `f'(x)` in `f = z_x^{v_x(f)}(f'(x) + O(z_x))`.
    fn leading(&self, x: &Support<T>) -> T {
        match x {
            Support::Infinity => self.scalar.clone(),
            Support::Finite(x) => {
                let mut out = self.scalar.clone();
                for (a, m) in &self.factors {
                    if a != x {
                        out = out * powi(x.clone() - a.clone(), *m);
                    }
                }
                out
            }
        }
    }

    fn support(&self) -> Vec<Support<T>> {
        let mut out: Vec<Support<T>> = self.factors.iter().map(|(a, _)| Support::Finite(a.clone())).collect();
        if self.order_at_infinity() != 0 {
            out.push(Support::Infinity);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Support<T> {
    Finite(T),
    Infinity,
}

fn powi<T: RationalField>(x: T, e: i64) -> T {
    let mut out = T::one();
    for _ in 0..e.unsigned_abs() {
        out = out * x.clone();
    }
    if e < 0 {
        T::one() / out
    } else {
        out
    }
}

/// `(−1)^{Σ v_x(f)v_x(g)} Π_x g'(x)^{v_x(f)} f'(x)^{−v_x(g)}` over the union of
/// the supports.
pub fn rational_tame_symbol<T: RationalField>(f: &RationalFunction<T>, g: &RationalFunction<T>) -> T {
    let mut points = f.support();
    for x in g.support() {
        if !points.contains(&x) {
            points.push(x);
        }
    }
    let mut sign = 0i64;
    let mut out = T::one();
    for x in &points {
        let (vf, vg) = (f.order_at(x), g.order_at(x));
        sign += vf * vg;
        out = out * powi(g.leading(x), vf) * powi(f.leading(x), -vg);
    }
    if sign.rem_euclid(2) == 1 {
        T::zero() - out
    } else {
        out
    }
}

/// `exp(αz + β) Π θ₁(z − c_j)^{m_j}` on `ℂ/(ℤ + τℤ)`, with `Σ m_j = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaQuotient {
    tau: Complex64,
    factors: Vec<(Complex64, i64)>,
    alpha: Complex64,
    beta: Complex64,
}

impl ThetaQuotient {
    pub fn new(tau: Complex64, factors: Vec<(Complex64, i64)>, alpha: Complex64, beta: Complex64) -> Result<Self> {
        if !(tau.im > 0.0) {
            return Err(KzbError::InvalidPeriodMatrix);
        }
        if factors.iter().map(|(_, m)| m).sum::<i64>() != 0 {
            return Err(KzbError::Invalid("theta quotient must have degree zero".into()));
        }
        let factors = factors.into_iter().filter(|(_, m)| *m != 0).collect();
        Ok(ThetaQuotient {
            tau,
            factors,
            alpha,
            beta,
        })
    }

    /// An elliptic function with zeros `zeros` and poles `poles`; requires
    /// equal counts and `Σ zeros − Σ poles ∈ ℤ + τℤ`.
    pub fn elliptic(tau: Complex64, zeros: &[Complex64], poles: &[Complex64]) -> Result<Self> {
        if zeros.len() != poles.len() {
            return Err(KzbError::Invalid("divisor must have degree zero".into()));
        }
        let s: Complex64 = zeros.iter().sum::<Complex64>() - poles.iter().sum::<Complex64>();
        let q = (s.im / tau.im).round();
        let p = (s - tau * q).re.round();
        if (s - tau * q - p).norm() > SAME_POINT {
            return Err(KzbError::Invalid("divisor is not principal".into()));
        }
        let mut factors: Vec<(Complex64, i64)> = zeros.iter().map(|c| (*c, 1)).collect();
        factors.extend(poles.iter().map(|c| (*c, -1)));
        // e^{−2πiqz} cancels the B-monodromy e^{2πiqτ} left by p + qτ.
        Self::new(tau, factors, -2.0 * PI * I * q, Complex64::new(0.0, 0.0))
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    pub fn factors(&self) -> &[(Complex64, i64)] {
        &self.factors
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let mut out = (self.alpha * z + self.beta).exp();
        for (c, m) in &self.factors {
            out *= jacobi_theta1_table(z - c, self.tau, 0)?.value().powi(*m as i32);
        }
        Ok(out)
    }

    /// `f'/f`.
    pub fn log_derivative(&self, z: Complex64) -> Result<Complex64> {
        let mut out = self.alpha;
        for (c, m) in &self.factors {
            let t = jacobi_theta1_table(z - c, self.tau, 1)?;
            out += t.partial(&[1]) / t.value() * *m as f64;
        }
        Ok(out)
    }

    /// `(f(z+1)/f(z), f(z+τ)/f(z))`.
    pub fn monodromy(&self) -> (Complex64, Complex64) {
        let a = self.alpha.exp();
        let shift: Complex64 = self.factors.iter().map(|(c, m)| c * *m as f64).sum();
        let b = (self.alpha * self.tau + 2.0 * PI * I * shift).exp();
        (a, b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.tau != other.tau {
            return Err(KzbError::Invalid("functions live on different curves".into()));
        }
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        Self::new(self.tau, factors, self.alpha + other.alpha, self.beta + other.beta)
    }

    pub fn recip(&self) -> Self {
        ThetaQuotient {
            tau: self.tau,
            factors: self.factors.iter().map(|(c, m)| (*c, -m)).collect(),
            alpha: -self.alpha,
            beta: -self.beta,
        }
    }

    /// Lattice coordinates `(u, v)` with `z = u + vτ`.
    fn lattice_coords(&self, z: Complex64) -> (f64, f64) {
        let v = z.im / self.tau.im;
        ((z - self.tau * v).re, v)
    }

    /// Lift into the fundamental parallelogram.
    fn reduce(&self, z: Complex64) -> Complex64 {
        let (u, v) = self.lattice_coords(z);
        z - u.floor() - self.tau * v.floor()
    }

    /// Lattice vector `z − w` if `z ≡ w`.
    fn lattice_offset(&self, z: Complex64, w: Complex64) -> Option<Complex64> {
        let (u, v) = self.lattice_coords(z - w);
        let (p, q) = (u.round(), v.round());
        ((u - p).abs() < SAME_POINT && (v - q).abs() < SAME_POINT).then(|| p + self.tau * q)
    }

    /// Distinct support points, lifted, with orders.
    fn divisor(&self) -> Vec<(Complex64, i64)> {
        let mut out: Vec<(Complex64, i64)> = Vec::new();
        for (c, m) in &self.factors {
            let x = self.reduce(*c);
            match out.iter_mut().find(|(y, _)| self.lattice_offset(x, *y).is_some()) {
                Some(slot) => slot.1 += m,
                None => out.push((x, *m)),
            }
        }
        out.retain(|(_, m)| *m != 0);
        out
    }

    fn order_at(&self, x: Complex64) -> i64 {
        self.factors
            .iter()
            .filter(|(c, _)| self.lattice_offset(x, *c).is_some())
            .map(|(_, m)| m)
            .sum()
    }

    /// Leading coefficient at the lift `x`, in the coordinate `z − x`.
    fn leading(&self, x: Complex64) -> Result<Complex64> {
        let mut out = (self.alpha * x + self.beta).exp();
        for (c, m) in &self.factors {
            let t = match self.lattice_offset(x, *c) {
                Some(d) => jacobi_theta1_table(d, self.tau, 1)?.partial(&[1]),
                None => jacobi_theta1_table(x - c, self.tau, 0)?.value(),
            };
            out *= t.powi(*m as i32);
        }
        if !out.is_finite() || out.norm() < f64::MIN_POSITIVE {
            return Err(KzbError::CoincidentSupportWithoutLeadingCoefficient);
        }
        Ok(out)
    }
}

/// Elliptic counterpart of [`rational_tame_symbol`], on lifted support points.
pub fn elliptic_tame_symbol(f: &ThetaQuotient, g: &ThetaQuotient) -> Result<Complex64> {
    if (f.tau - g.tau).norm() > 0.0 {
        return Err(KzbError::Invalid("functions live on different curves".into()));
    }
    let mut points: Vec<Complex64> = f.divisor().into_iter().map(|(x, _)| x).collect();
    for (x, _) in g.divisor() {
        if !points.iter().any(|y| f.lattice_offset(x, *y).is_some()) {
            points.push(x);
        }
    }
    let mut sign = 0i64;
    let mut out = Complex64::new(1.0, 0.0);
    for x in points {
        let (vf, vg) = (f.order_at(x), g.order_at(x));
        sign += vf * vg;
        if vf != 0 {
            out *= g.leading(x)?.powi(vf as i32);
        }
        if vg != 0 {
            out *= f.leading(x)?.powi(-vg as i32);
        }
    }
    Ok(if sign.rem_euclid(2) == 1 { -out } else { out })
}

/// A meromorphic function in exact rational or elliptic numeric form.
#[derive(Clone, Debug, PartialEq)]
pub enum MeromorphicFunction {
    Rational(RationalFunction<BigRational>),
    Elliptic(ThetaQuotient),
}

/// Value of a tame symbol.
#[derive(Clone, Debug, PartialEq)]
pub enum SymbolValue {
    Exact(BigRational),
    Numeric(Complex64),
}

impl SymbolValue {
    pub fn to_complex(&self) -> Complex64 {
        match self {
            SymbolValue::Exact(q) => {
                use num_traits::ToPrimitive;
                Complex64::new(q.to_f64().unwrap_or(f64::NAN), 0.0)
            }
            SymbolValue::Numeric(z) => *z,
        }
    }
}

pub fn tame_symbol(f: &MeromorphicFunction, g: &MeromorphicFunction) -> Result<SymbolValue> {
    match (f, g) {
        (MeromorphicFunction::Rational(f), MeromorphicFunction::Rational(g)) => {
            Ok(SymbolValue::Exact(rational_tame_symbol(f, g)))
        }
        (MeromorphicFunction::Elliptic(f), MeromorphicFunction::Elliptic(g)) => {
            Ok(SymbolValue::Numeric(elliptic_tame_symbol(f, g)?))
        }
        _ => Err(KzbError::Invalid("functions live on different curves".into())),
    }
}

/// `n_a(f) = (1/2πi)∫_{A_a} df/f`, rounded.
pub fn winding(f: &MeromorphicFunction, a: usize) -> Result<i64> {
    let MeromorphicFunction::Elliptic(q) = f else {
        return Err(KzbError::Invalid("the rational curve has no cycles".into()));
    };
    if a != 0 {
        return Err(KzbError::Invalid(format!("no cycle A_{a} at genus 1")));
    }
    let raw = winding_raw(q)?;
    let n = raw.re.round();
    if (raw - n).norm() >= WINDING_DEFECT {
        return Err(KzbError::NonIntegerWinding { raw: raw.re });
    }
    Ok(n as i64)
}

/// Unrounded winding number along `[0, 1]`.
pub fn winding_raw(f: &ThetaQuotient) -> Result<Complex64> {
    for (c, _) in &f.factors {
        let (_, v) = f.lattice_coords(*c);
        if (v - v.round()).abs() < CYCLE_CLEARANCE {
            return Err(KzbError::SupportOnCycle);
        }
    }
    let mut err = None;
    let int = adaptive_segment(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), 1e-12, |z| {
        match f.log_derivative(z) {
            Ok(v) => vec![v],
            Err(e) => {
                err.get_or_insert(e);
                vec![Complex64::new(0.0, 0.0)]
            }
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(int[0] / (2.0 * PI * I))
}

fn elliptic_tau(model: &CurveModel) -> Result<Complex64> {
    match model {
        CurveModel::Elliptic(e) => Ok(e.tau()),
        _ => Err(KzbError::Invalid(
            "twisted function spaces are implemented at genus 1".into(),
        )),
    }
}

/// `Θ(z + a + λ/2πi)/Θ(z + a)`, an element of `C_λ`: periodic along A and
/// multiplied by `e^{−λ}` along B.
pub fn c_lambda_element(model: &CurveModel, lam: &[Complex64], a: &[Complex64]) -> Result<MeromorphicFunction> {
    let tau = elliptic_tau(model)?;
    if lam.len() != 1 || a.len() != 1 {
        return Err(KzbError::Invalid("twist and offset must have one entry".into()));
    }
    let shift = lam[0] / (2.0 * PI * I);
    let delta = (1.0 + tau) * 0.5;
    // Θ(x) = −e^{−πiτ/4 − πi(x − Δ + ½)} θ₁(x − Δ).
    let q = ThetaQuotient::new(
        tau,
        vec![(delta - a[0] - shift, 1), (delta - a[0], -1)],
        Complex64::new(0.0, 0.0),
        -PI * I * shift,
    )?;
    for (c, _) in &q.factors {
        let (_, v) = q.lattice_coords(*c);
        if (v - v.round()).abs() < CYCLE_CLEARANCE {
            return Err(KzbError::NoAdmissibleShift);
        }
    }
    check_monodromy(&q, lam[0])?;
    Ok(MeromorphicFunction::Elliptic(q))
}

fn check_monodromy(q: &ThetaQuotient, lam: Complex64) -> Result<()> {
    let probe = Complex64::new(0.3141, 0.2718) * q.tau.norm();
    let v = q.eval(probe)?;
    let along_a = q.eval(probe + 1.0)? / v;
    let along_b = q.eval(probe + q.tau)? / v;
    let target = (-lam).exp();
    if (along_a - 1.0).norm() > MONODROMY_TOL || (along_b - target).norm() > MONODROMY_TOL * target.norm() {
        return Err(KzbError::MonodromyMismatch);
    }
    Ok(())
}

/// [`c_lambda_element`] with a random offset, retried until the support avoids
/// the A-cycle and the points in `avoid`.
pub fn random_c_lambda_element(
    model: &CurveModel,
    lam: &[Complex64],
    avoid: &[Complex64],
    rng: &mut impl Rng,
) -> Result<MeromorphicFunction> {
    let tau = elliptic_tau(model)?;
    for _ in 0..SHIFT_ATTEMPTS {
        let a = Complex64::new(rng.gen_range(0.0..1.0), 0.0) + tau * rng.gen_range(0.0..1.0);
        let f = match c_lambda_element(model, lam, &[a]) {
            Ok(f) => f,
            Err(KzbError::NoAdmissibleShift) => continue,
            Err(e) => return Err(e),
        };
        let MeromorphicFunction::Elliptic(q) = &f else {
            unreachable!()
        };
        let clear = q.divisor().iter().all(|(x, _)| {
            avoid.iter().all(|y| {
                let (u, v) = q.lattice_coords(x - y);
                (u - u.round()).abs() > 1e-3 || (v - v.round()).abs() > 1e-3
            })
        });
        if clear {
            return Ok(f);
        }
    }
    Err(KzbError::NoAdmissibleShift)
}

/// Errors of the twisted symbol identities for one `f` and twist.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwistedReport {
    pub winding: Vec<i64>,
    /// `|σ(f, f_λ) − e^{Σn_a(f)λ_a}| / |e^{Σn_a(f)λ_a}|`.
    pub twisted_error: f64,
    /// Same for `σ(f_λ, f_λ') = e^{Σ n_a(f_λ)λ'_a − n_a(f_λ')λ_a}`.
    pub pair_error: f64,
}

/// Checks `σ(f, f_λ) = e^{Σn_a(f)λ_a}` for random `f_λ ∈ C_λ` and the pairing
/// of `f_λ` with a second element of `C_{λ'}`, `λ' = iλ/2 + ¼`.
pub fn twisted_symbol_check(
    model: &CurveModel,
    f: &MeromorphicFunction,
    lam: &[Complex64],
    seed: u64,
) -> Result<TwistedReport> {
    let MeromorphicFunction::Elliptic(fq) = f else {
        return Err(KzbError::Invalid("twisted identities need genus 1".into()));
    };
    let (ma, mb) = fq.monodromy();
    if (ma - 1.0).norm() > MONODROMY_TOL || (mb - 1.0).norm() > MONODROMY_TOL {
        return Err(KzbError::Invalid("f is not single-valued".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let support: Vec<Complex64> = fq.divisor().into_iter().map(|(x, _)| x).collect();
    let fl = random_c_lambda_element(model, lam, &support, &mut rng)?;
    let n = winding(f, 0)?;
    let expected = (lam[0] * n as f64).exp();
    let got = tame_symbol(f, &fl)?.to_complex();
    let twisted_error = (got - expected).norm() / expected.norm();

    let lam2 = [I * lam[0] * 0.5 + 0.25];
    let MeromorphicFunction::Elliptic(flq) = &fl else {
        unreachable!()
    };
    let mut avoid = support;
    avoid.extend(flq.divisor().into_iter().map(|(x, _)| x));
    let fl2 = random_c_lambda_element(model, &lam2, &avoid, &mut rng)?;
    let (n1, n2) = (winding(&fl, 0)?, winding(&fl2, 0)?);
    let expected = (lam2[0] * n1 as f64 - lam[0] * n2 as f64).exp();
    let got = tame_symbol(&fl, &fl2)?.to_complex();
    let pair_error = (got - expected).norm() / expected.norm();
    Ok(TwistedReport {
        winding: vec![n],
        twisted_error,
        pair_error,
    })
}

/// Random `c Π (z − a)^m` with up to `points` integer support points in
/// `[−range, range]` and multiplicities in `{±1, ±2}`.
pub fn random_rational_function(rng: &mut impl Rng, points: usize, range: i64) -> RationalFunction<BigRational> {
    let scalar = loop {
        let c: i64 = rng.gen_range(-5..=5);
        if c != 0 {
            break c;
        }
    };
    let count = rng.gen_range(1..=points.max(1));
    let factors = (0..count)
        .map(|_| {
            let a = BigRational::from_integer(rng.gen_range(-range..=range).into());
            let m = [-2i64, -1, 1, 2][rng.gen_range(0..4)];
            (a, m)
        })
        .collect();
    RationalFunction::new(BigRational::from_integer(scalar.into()), factors).expect("nonzero scalar")
}

/// Random pair with disjoint supports, `∞` included.
pub fn random_disjoint_pair(
    rng: &mut impl Rng,
    points: usize,
    range: i64,
) -> (RationalFunction<BigRational>, RationalFunction<BigRational>) {
    loop {
        let f = random_rational_function(rng, points, range);
        let g = random_rational_function(rng, points, range);
        let shared = f.factors.iter().any(|(a, _)| g.factors.iter().any(|(b, _)| a == b));
        if !shared && (f.order_at_infinity() == 0 || g.order_at_infinity() == 0) {
            return (f, g);
        }
    }
}

/// Random elliptic function with `degree` zeros and poles, every support point
/// at lattice distance `≥ 0.05` from the A-cycle and `≥ 10⁻³` from the others.
pub fn random_elliptic_function(tau: Complex64, degree: usize, rng: &mut impl Rng) -> Result<ThetaQuotient> {
    if degree == 0 {
        return ThetaQuotient::new(tau, Vec::new(), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    }
    let draw =
        |rng: &mut dyn rand::RngCore| Complex64::new(rng.gen_range(0.0..1.0), 0.0) + tau * rng.gen_range(0.05..0.95);
    loop {
        let zeros: Vec<Complex64> = (0..degree).map(|_| draw(rng)).collect();
        let mut poles: Vec<Complex64> = (0..degree - 1).map(|_| draw(rng)).collect();
        let last = zeros.iter().sum::<Complex64>() - poles.iter().sum::<Complex64>();
        poles.push(last);
        let f = ThetaQuotient::elliptic(tau, &zeros, &poles)?;
        let div: Vec<Complex64> = zeros.iter().chain(&poles).map(|c| f.reduce(*c)).collect();
        let off_cycle = div.iter().all(|x| {
            let (_, v) = f.lattice_coords(*x);
            (0.05..0.95).contains(&v)
        });
        let separated = div.iter().enumerate().all(|(i, x)| {
            div[i + 1..].iter().all(|y| {
                let (u, v) = f.lattice_coords(x - y);
                (u - u.round()).abs() > 1e-3 || (v - v.round()).abs() > 1e-3
            })
        });
        if off_cycle && separated {
            return Ok(f);
        }
    }
}
