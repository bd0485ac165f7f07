//! Truncated multivariate Taylor expansions ("jets").
//!
//! A [`Jet`] of order `N` in `n` variables stores the Taylor coefficients
//! `c_α` of every monomial `δ^α` with `|α| ≤ N`, where `δ = x − base`.
//! Coefficients are kept in graded order (all degree-0 terms, then degree 1,
//! ...) so that truncating to a lower order is a prefix slice.
//!
//! Jets are plain values: every operation returns a new jet. Binary
//! operations on jets of different orders truncate to the smaller order.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    #[error("jets expanded at different base points")]
    MixedBasePoint,
    #[error("division by a jet with vanishing constant term")]
    DivisionByZeroConstantTerm,
    #[error("cannot differentiate {times} times a jet of order {order}")]
    OrderExhausted { order: usize, times: usize },
    #[error("variable index {index} out of range for a jet in {nvars} variables")]
    BadVariable { index: usize, nvars: usize },
}

/// Multi-index bookkeeping shared by every jet with the same shape.
#[derive(Debug)]
pub(crate) struct Layout {
    nvars: usize,
    order: usize,
    indices: Vec<Vec<u8>>,
    pos: HashMap<Vec<u8>, usize>,
    /// `(i, j, k)` with `indices[i] + indices[j] = indices[k]`.
    products: Vec<(u32, u32, u32)>,
}

impl Layout {
    fn build(nvars: usize, order: usize) -> Self {
        let mut indices = Vec::new();
        for deg in 0..=order {
            let mut cur = vec![0u8; nvars];
            push_degree(&mut indices, &mut cur, 0, deg);
        }
        let pos: HashMap<_, _> = indices.iter().enumerate().map(|(i, a)| (a.clone(), i)).collect();
        let mut products = Vec::new();
        for (i, a) in indices.iter().enumerate() {
            for (j, b) in indices.iter().enumerate() {
                let deg: usize = a.iter().chain(b.iter()).map(|&v| v as usize).sum();
                if deg > order {
                    continue;
                }
                let s: Vec<u8> = a.iter().zip(b).map(|(x, y)| x + y).collect();
                products.push((i as u32, j as u32, pos[&s] as u32));
            }
        }
        Layout {
            nvars,
            order,
            indices,
            pos,
            products,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.indices.len()
    }
}

fn push_degree(out: &mut Vec<Vec<u8>>, cur: &mut Vec<u8>, var: usize, remaining: usize) {
    if cur.is_empty() {
        if remaining == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if var == cur.len() - 1 {
        cur[var] = remaining as u8;
        out.push(cur.clone());
        cur[var] = 0;
        return;
    }
    for k in (0..=remaining).rev() {
        cur[var] = k as u8;
        push_degree(out, cur, var + 1, remaining - k);
    }
    cur[var] = 0;
}

pub(crate) fn layout(nvars: usize, order: usize) -> Arc<Layout> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Layout>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("jet layout cache poisoned");
    guard
        .entry((nvars, order))
        .or_insert_with(|| Arc::new(Layout::build(nvars, order)))
        .clone()
}

/// Enumerate all multi-indices in `nvars` variables of total degree `≤ order`,
/// in the graded order used for jet storage.
pub fn multi_indices(nvars: usize, order: usize) -> Vec<Vec<u8>> {
    layout(nvars, order).indices.clone()
}

#[derive(Clone)]
pub struct Jet {
    layout: Arc<Layout>,
    base: Vec<Complex64>,
    coeffs: Vec<Complex64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("order", &self.order())
            .field("base", &self.base)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base && self.order() == other.order() && self.coeffs == other.coeffs
    }
}

impl Jet {
    pub fn constant(base: &[Complex64], order: usize, value: Complex64) -> Self {
        let layout = layout(base.len(), order);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); layout.len()];
        coeffs[0] = value;
        Jet {
            layout,
            base: base.to_vec(),
            coeffs,
        }
    }

    pub fn zero(base: &[Complex64], order: usize) -> Self {
        Self::constant(base, order, Complex64::new(0.0, 0.0))
    }

    /// The coordinate function `x_var`, i.e. `base[var] + δ_var`.
    pub fn variable(base: &[Complex64], order: usize, var: usize) -> Self {
        assert!(var < base.len(), "variable index out of range");
        let mut j = Self::constant(base, order, base[var]);
        if order >= 1 {
            let mut idx = vec![0u8; base.len()];
            idx[var] = 1;
            let p = j.layout.pos[&idx];
            j.coeffs[p] = Complex64::new(1.0, 0.0);
        }
        j
    }

    /// All coordinate functions at once.
    pub fn variables(base: &[Complex64], order: usize) -> Vec<Self> {
        (0..base.len()).map(|v| Self::variable(base, order, v)).collect()
    }

    pub fn from_coeffs(base: &[Complex64], order: usize, coeffs: Vec<Complex64>) -> Self {
        let layout = layout(base.len(), order);
        assert_eq!(coeffs.len(), layout.len(), "coefficient table has wrong size");
        Jet {
            layout,
            base: base.to_vec(),
            coeffs,
        }
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn nvars(&self) -> usize {
        self.layout.nvars
    }

    pub fn base(&self) -> &[Complex64] {
        &self.base
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn value(&self) -> Complex64 {
        self.coeffs[0]
    }

    pub fn indices(&self) -> &[Vec<u8>] {
        &self.layout.indices
    }

    /// Taylor coefficient of `δ^α`; zero when `|α|` exceeds the order.
    pub fn coeff(&self, alpha: &[u8]) -> Complex64 {
        self.layout.pos.get(alpha).map(|&p| self.coeffs[p]).unwrap_or_default()
    }

    /// Partial derivative `∂^α` at the base point (`α! · c_α`).
    pub fn partial(&self, alpha: &[u8]) -> Complex64 {
        let fact: f64 = alpha.iter().map(|&a| factorial(a as usize)).product();
        self.coeff(alpha) * fact
    }

    pub fn same_base(&self, other: &Jet) -> bool {
        self.base == other.base
    }

    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order() {
            return self.clone();
        }
        let layout = layout(self.nvars(), order);
        let coeffs = self.coeffs[..layout.len()].to_vec();
        Jet {
            layout,
            base: self.base.clone(),
            coeffs,
        }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `max |c_α(self) − c_α(other)|` over the common order.
    pub fn max_diff(&self, other: &Jet) -> f64 {
        let n = self.coeffs.len().min(other.coeffs.len());
        (0..n)
            .map(|i| (self.coeffs[i] - other.coeffs[i]).norm())
            .fold(0.0, f64::max)
    }

    pub fn scale(&self, c: Complex64) -> Jet {
        Jet {
            layout: self.layout.clone(),
            base: self.base.clone(),
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    pub fn add_const(&self, c: Complex64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    fn aligned(&self, other: &Jet) -> Result<(Jet, Jet), JetError> {
        if !self.same_base(other) {
            return Err(JetError::MixedBasePoint);
        }
        let n = self.order().min(other.order());
        Ok((self.truncate(n), other.truncate(n)))
    }

    pub fn try_add(&self, other: &Jet) -> Result<Jet, JetError> {
        let (mut a, b) = self.aligned(other)?;
        for (x, y) in a.coeffs.iter_mut().zip(&b.coeffs) {
            *x += y;
        }
        Ok(a)
    }

    pub fn try_sub(&self, other: &Jet) -> Result<Jet, JetError> {
        self.try_add(&-other)
    }

    pub fn try_mul(&self, other: &Jet) -> Result<Jet, JetError> {
        let (a, b) = self.aligned(other)?;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); a.coeffs.len()];
        for &(i, j, k) in &a.layout.products {
            coeffs[k as usize] += a.coeffs[i as usize] * b.coeffs[j as usize];
        }
        Ok(Jet {
            layout: a.layout,
            base: a.base,
            coeffs,
        })
    }

    pub fn try_div(&self, other: &Jet) -> Result<Jet, JetError> {
        let inv = other.recip()?;
        self.try_mul(&inv)
    }

    /// Nilpotent part: the jet minus its constant term.
    fn nilpotent(&self) -> Jet {
        let mut d = self.clone();
        d.coeffs[0] = Complex64::new(0.0, 0.0);
        d
    }

    /// `Σ_k taylor[k] · δ^k` where `δ` is the nilpotent part of `self`.
    /// `taylor[k]` are the normalized coefficients `f^(k)(x0)/k!` of a scalar
    /// function expanded at the constant term `x0`.
    pub fn compose_scalar(&self, taylor: &[Complex64]) -> Jet {
        let delta = self.nilpotent();
        let mut out = Jet::constant(&self.base, self.order(), taylor[0]);
        let mut power = Jet::constant(&self.base, self.order(), Complex64::new(1.0, 0.0));
        for t in taylor.iter().take(self.order() + 1).skip(1) {
            power = &power * &delta;
            out += &power.scale(*t);
        }
        out
    }

    pub fn exp(&self) -> Jet {
        let x0 = self.value();
        let e = x0.exp();
        let taylor: Vec<_> = (0..=self.order()).map(|k| e / factorial(k)).collect();
        self.compose_scalar(&taylor)
    }

    pub fn ln(&self) -> Result<Jet, JetError> {
        let x0 = self.value();
        if x0.norm() == 0.0 {
            return Err(JetError::DivisionByZeroConstantTerm);
        }
        let mut taylor = vec![x0.ln()];
        for k in 1..=self.order() {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            taylor.push(sign / (k as f64 * x0.powu(k as u32)));
        }
        Ok(self.compose_scalar(&taylor))
    }

    pub fn recip(&self) -> Result<Jet, JetError> {
        let x0 = self.value();
        if x0.norm() == 0.0 {
            return Err(JetError::DivisionByZeroConstantTerm);
        }
        let inv = 1.0 / x0;
        let mut taylor = Vec::with_capacity(self.order() + 1);
        let mut t = inv;
        for _ in 0..=self.order() {
            taylor.push(t);
            t *= -inv;
        }
        Ok(self.compose_scalar(&taylor))
    }

    /// `self^p` on the branch selected by `root0` (a value of `x0^p`).
    pub fn powf_branch(&self, p: f64, root0: Complex64) -> Result<Jet, JetError> {
        let x0 = self.value();
        if x0.norm() == 0.0 {
            return Err(JetError::DivisionByZeroConstantTerm);
        }
        let mut taylor = vec![root0];
        let mut binom = 1.0;
        for k in 1..=self.order() {
            binom *= (p - (k - 1) as f64) / k as f64;
            taylor.push(root0 * binom / x0.powu(k as u32));
        }
        Ok(self.compose_scalar(&taylor))
    }

    pub fn sqrt_branch(&self, root0: Complex64) -> Result<Jet, JetError> {
        self.powf_branch(0.5, root0)
    }

    pub fn powi(&self, n: i32) -> Result<Jet, JetError> {
        if n >= 0 {
            let mut out = Jet::constant(&self.base, self.order(), Complex64::new(1.0, 0.0));
            for _ in 0..n {
                out = &out * self;
            }
            Ok(out)
        } else {
            self.recip()?.powi(-n)
        }
    }

    /// Formal partial derivative in variable `var`, applied `times` times.
    /// The order drops by `times`.
    pub fn derivative(&self, var: usize, times: usize) -> Result<Jet, JetError> {
        if var >= self.nvars() {
            return Err(JetError::BadVariable {
                index: var,
                nvars: self.nvars(),
            });
        }
        if times > self.order() {
            return Err(JetError::OrderExhausted {
                order: self.order(),
                times,
            });
        }
        let mut cur = self.clone();
        for _ in 0..times {
            let target = layout(cur.nvars(), cur.order() - 1);
            let coeffs = target
                .indices
                .iter()
                .map(|beta| {
                    let mut up = beta.clone();
                    up[var] += 1;
                    cur.coeff(&up) * (beta[var] as f64 + 1.0)
                })
                .collect();
            cur = Jet {
                layout: target,
                base: cur.base.clone(),
                coeffs,
            };
        }
        Ok(cur)
    }

    /// Directional derivative `Σ_a dir[a] ∂_a`; order drops by one.
    pub fn directional(&self, dir: &[Complex64]) -> Result<Jet, JetError> {
        let mut out: Option<Jet> = None;
        for (a, &d) in dir.iter().enumerate() {
            let term = self.derivative(a, 1)?.scale(d);
            out = Some(match out {
                None => term,
                Some(acc) => &acc + &term,
            });
        }
        out.ok_or(JetError::OrderExhausted {
            order: self.order(),
            times: 1,
        })
    }

    /// Evaluate the truncated polynomial at `base + offset`.
    pub fn eval_offset(&self, offset: &[Complex64]) -> Complex64 {
        self.layout
            .indices
            .iter()
            .zip(&self.coeffs)
            .map(|(alpha, c)| {
                alpha
                    .iter()
                    .zip(offset)
                    .fold(*c, |acc, (&k, &h)| acc * h.powu(k as u32))
            })
            .sum()
    }
}

pub(crate) fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Checked binary/unary arithmetic entry point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JetOp {
    Add,
    Mul,
    Div,
    Exp,
    Log,
}

/// Apply `op` to `x` (and `y` for binary ops). Unary ops ignore `y`.
pub fn jet_arith(x: &Jet, y: &Jet, op: JetOp) -> Result<Jet, JetError> {
    match op {
        JetOp::Add => x.try_add(y),
        JetOp::Mul => x.try_mul(y),
        JetOp::Div => x.try_div(y),
        JetOp::Exp => Ok(x.exp()),
        JetOp::Log => x.ln(),
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.try_add(rhs).expect("jet addition")
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.try_sub(rhs).expect("jet subtraction")
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.try_mul(rhs).expect("jet multiplication")
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        *self = &*self + rhs;
    }
}

macro_rules! owned_binop {
    ($tr:ident, $m:ident) => {
        impl $tr for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, rhs: &Jet) -> Jet {
                (&self).$m(rhs)
            }
        }
    };
}
owned_binop!(Add, add);
owned_binop!(Sub, sub);
owned_binop!(Mul, mul);

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn layout_counts() {
        assert_eq!(layout(2, 4).len(), 15);
        assert_eq!(layout(1, 4).len(), 5);
        assert_eq!(layout(3, 2).len(), 10);
        assert_eq!(layout(0, 3).len(), 1);
    }

    #[test]
    fn constants_multiply() {
        let base = [c(0.3)];
        let a = Jet::constant(&base, 4, c(2.0));
        let b = Jet::constant(&base, 4, c(3.0));
        let p = &a * &b;
        assert_eq!(p.value(), c(6.0));
        assert!(p.coeffs()[1..].iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn square_of_seed() {
        let base = [c(0.0)];
        let x = Jet::variable(&base, 2, 0);
        let sq = &x * &x;
        assert_eq!(sq.coeff(&[2]), c(1.0));
        assert_eq!(sq.coeff(&[1]), c(0.0));
        assert_eq!(sq.coeff(&[0]), c(0.0));
    }

    #[test]
    fn exp_log_round_trip() {
        let base = [c(0.0)];
        let lam = Jet::variable(&base, 4, 0);
        let x = lam.scale(c(0.5)).add_const(c(1.0));
        let back = x.ln().unwrap().exp();
        assert!(back.max_diff(&x) < 1e-13);
    }

    #[test]
    fn derivative_examples() {
        let base = [c(0.0)];
        let lam = Jet::variable(&base, 4, 0);
        let sq = &lam * &lam;
        let d = sq.derivative(0, 1).unwrap();
        assert!((d.coeff(&[1]) - c(2.0)).norm() < 1e-15);
        assert!(d.value().norm() < 1e-15);

        let k = Jet::constant(&base, 4, c(7.0));
        assert!(k.derivative(0, 1).unwrap().max_abs_coeff() == 0.0);

        let e = lam.exp().derivative(0, 4).unwrap();
        assert_eq!(e.order(), 0);
        assert!((e.value() - c(1.0)).norm() < 1e-13);
    }

    #[test]
    fn exhausted_order_is_an_error() {
        let base = [c(0.0)];
        let lam = Jet::variable(&base, 2, 0);
        assert_eq!(
            lam.derivative(0, 3),
            Err(JetError::OrderExhausted { order: 2, times: 3 })
        );
    }

    #[test]
    fn mixed_base_rejected() {
        let a = Jet::variable(&[c(0.0)], 2, 0);
        let b = Jet::variable(&[c(1.0)], 2, 0);
        assert_eq!(jet_arith(&a, &b, JetOp::Mul), Err(JetError::MixedBasePoint));
    }

    #[test]
    fn division_by_nilpotent_rejected() {
        let a = Jet::variable(&[c(0.0)], 2, 0);
        let one = Jet::constant(&[c(0.0)], 2, c(1.0));
        assert_eq!(
            jet_arith(&one, &a, JetOp::Div),
            Err(JetError::DivisionByZeroConstantTerm)
        );
        assert_eq!(jet_arith(&a, &a, JetOp::Log), Err(JetError::DivisionByZeroConstantTerm));
    }

    #[test]
    fn mixed_orders_truncate() {
        let base = [c(0.0)];
        let a = Jet::variable(&base, 4, 0);
        let b = Jet::variable(&base, 2, 0);
        assert_eq!((&a * &b).order(), 2);
    }

    #[test]
    fn sqrt_branch_squares_back() {
        let base = [c(0.1), c(-0.2)];
        let v = Jet::variables(&base, 4);
        let x = (&v[0] * &v[1]).add_const(Complex64::new(1.5, 0.5));
        let r0 = x.value().sqrt();
        let s = x.sqrt_branch(-r0).unwrap();
        assert!((&s * &s).max_diff(&x) < 1e-13);
    }

    #[test]
    fn eval_offset_matches_polynomial() {
        let base = [c(0.4), c(-0.1)];
        let v = Jet::variables(&base, 4);
        let p = &(&v[0] * &v[0]) * &v[1];
        let h = [c(0.01), c(0.02)];
        let direct = (base[0] + h[0]).powu(2) * (base[1] + h[1]);
        assert!((p.eval_offset(&h) - direct).norm() < 1e-15);
    }
}
