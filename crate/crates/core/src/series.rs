//! Power and Laurent series in one local variable `h` whose coefficients are
//! λ-jets, plus the small ring interface shared by jets and series.

use num_complex::Complex64;

use crate::jets::Jet;

/// Commutative ring with a distinguished scalar part and a nilpotent remainder.
///
/// Theta functions are composed into any such ring through their Taylor
/// tables (see [`compose_table`]).
pub trait Algebra: Clone {
    fn constant_like(&self, c: Complex64) -> Self;
    fn scalar_part(&self) -> Complex64;
    /// Any product of more than this many nilpotent elements vanishes.
    fn nilpotency(&self) -> usize;
    fn plus(&self, other: &Self) -> Self;
    fn times(&self, other: &Self) -> Self;
    fn scaled(&self, c: Complex64) -> Self;

    fn minus(&self, other: &Self) -> Self {
        self.plus(&other.scaled(Complex64::new(-1.0, 0.0)))
    }
    fn plus_scalar(&self, c: Complex64) -> Self {
        self.plus(&self.constant_like(c))
    }
}

impl Algebra for Jet {
    fn constant_like(&self, c: Complex64) -> Self {
        Jet::constant(self.base(), self.order(), c)
    }
    fn scalar_part(&self) -> Complex64 {
        self.value()
    }
    fn nilpotency(&self) -> usize {
        self.order()
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn times(&self, other: &Self) -> Self {
        self * other
    }
    fn scaled(&self, c: Complex64) -> Self {
        self.scale(c)
    }
}

/// Evaluate `Σ_α table_α · (x − x0)^α` where `table` holds normalized Taylor
/// coefficients at `x0 = scalar parts of args`.
pub fn compose_table<A: Algebra>(table: &Jet, args: &[A]) -> A {
    assert_eq!(table.nvars(), args.len(), "table arity mismatch");
    let proto = &args[0];
    let deltas: Vec<A> = args.iter().map(|a| a.plus_scalar(-a.scalar_part())).collect();
    let nil = args.iter().map(|a| a.nilpotency()).max().unwrap_or(0);
    let order = table.order().min(nil);
    let one = proto.constant_like(Complex64::new(1.0, 0.0));
    let powers: Vec<Vec<A>> = deltas
        .iter()
        .map(|d| {
            let mut p = vec![one.clone()];
            for k in 1..=order {
                let next = p[k - 1].times(d);
                p.push(next);
            }
            p
        })
        .collect();
    let mut out = proto.constant_like(Complex64::new(0.0, 0.0));
    for (alpha, c) in table.indices().iter().zip(table.coeffs()) {
        let deg: usize = alpha.iter().map(|&k| k as usize).sum();
        if deg > order || c.norm() == 0.0 {
            continue;
        }
        let mut term: Option<A> = None;
        for (var, &k) in alpha.iter().enumerate() {
            if k == 0 {
                continue;
            }
            let f = &powers[var][k as usize];
            term = Some(match term {
                None => f.clone(),
                Some(t) => t.times(f),
            });
        }
        let term = match term {
            None => one.scaled(*c),
            Some(t) => t.scaled(*c),
        };
        out = out.plus(&term);
    }
    out
}

/// Truncated power series `Σ_{k<len} c_k h^k` with jet coefficients.
#[derive(Clone, Debug)]
pub struct HSeries {
    coeffs: Vec<Jet>,
}

impl HSeries {
    pub fn new(coeffs: Vec<Jet>) -> Self {
        assert!(!coeffs.is_empty(), "empty series");
        HSeries { coeffs }
    }

    /// Series with scalar (λ-constant) coefficients in the shape of `proto`.
    pub fn from_scalars(proto: &Jet, values: &[Complex64]) -> Self {
        HSeries::new(values.iter().map(|&v| proto.constant_like(v)).collect())
    }

    pub fn constant(c: Jet, len: usize) -> Self {
        let zero = c.constant_like(Complex64::new(0.0, 0.0));
        let mut coeffs = vec![zero; len];
        coeffs[0] = c;
        HSeries { coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, k: usize) -> &Jet {
        &self.coeffs[k]
    }

    pub fn coeffs(&self) -> &[Jet] {
        &self.coeffs
    }

    pub fn truncate(&self, len: usize) -> Self {
        HSeries::new(self.coeffs[..len.min(self.len())].to_vec())
    }

    /// `d/dh`.
    pub fn derivative(&self) -> Self {
        if self.len() == 1 {
            return HSeries::new(vec![self.coeffs[0].constant_like(Complex64::new(0.0, 0.0))]);
        }
        HSeries::new(
            (1..self.len())
                .map(|k| self.coeffs[k].scale(Complex64::new(k as f64, 0.0)))
                .collect(),
        )
    }

    /// `∫_0^h`, gaining one term.
    pub fn integral(&self) -> Self {
        let mut coeffs = vec![self.coeffs[0].constant_like(Complex64::new(0.0, 0.0))];
        for (k, c) in self.coeffs.iter().enumerate() {
            coeffs.push(c.scale(Complex64::new(1.0 / (k as f64 + 1.0), 0.0)));
        }
        HSeries::new(coeffs)
    }

    pub fn recip(&self) -> crate::Result<Self> {
        let b0 = self.coeffs[0].recip()?;
        let mut out: Vec<Jet> = vec![b0.clone()];
        for k in 1..self.len() {
            let mut acc = self.coeffs[k].constant_like(Complex64::new(0.0, 0.0));
            for j in 1..=k {
                acc = &acc + &(&self.coeffs[j] * &out[k - j]);
            }
            out.push(-&(&b0 * &acc));
        }
        Ok(HSeries::new(out))
    }

    /// Drop `k` leading coefficients that are known to vanish, i.e. divide by `h^k`.
    pub fn shift_down(&self, k: usize) -> Self {
        HSeries::new(self.coeffs[k..].to_vec())
    }

    /// Evaluate at a scalar `h`.
    pub fn eval(&self, h: Complex64) -> Jet {
        let mut acc = self.coeffs[self.len() - 1].clone();
        for c in self.coeffs.iter().rev().skip(1) {
            acc = &acc.scale(h) + c;
        }
        acc
    }
}

impl Algebra for HSeries {
    fn constant_like(&self, c: Complex64) -> Self {
        HSeries::constant(self.coeffs[0].constant_like(c), self.len())
    }
    fn scalar_part(&self) -> Complex64 {
        self.coeffs[0].value()
    }
    fn nilpotency(&self) -> usize {
        self.coeffs[0].order() + self.len() - 1
    }
    fn plus(&self, other: &Self) -> Self {
        let n = self.len().min(other.len());
        HSeries::new((0..n).map(|k| &self.coeffs[k] + &other.coeffs[k]).collect())
    }
    fn times(&self, other: &Self) -> Self {
        let n = self.len().min(other.len());
        HSeries::new(
            (0..n)
                .map(|k| {
                    let mut acc = &self.coeffs[0] * &other.coeffs[k];
                    for j in 1..=k {
                        acc = &acc + &(&self.coeffs[j] * &other.coeffs[k - j]);
                    }
                    acc
                })
                .collect(),
        )
    }
    fn scaled(&self, c: Complex64) -> Self {
        HSeries::new(self.coeffs.iter().map(|x| x.scale(c)).collect())
    }
}

/// `h^val · series`.
#[derive(Clone, Debug)]
pub struct Laurent {
    pub val: i32,
    pub series: HSeries,
}

impl Laurent {
    pub fn new(val: i32, series: HSeries) -> Self {
        Laurent { val, series }
    }

    /// Highest power of `h` whose coefficient is known.
    pub fn top(&self) -> i32 {
        self.val + self.series.len() as i32 - 1
    }

    /// Coefficient of `h^k`.
    pub fn coeff(&self, k: i32) -> Jet {
        assert!(k <= self.top(), "coefficient h^{k} beyond truncation");
        if k < self.val {
            return self.series.coeff(0).constant_like(Complex64::new(0.0, 0.0));
        }
        self.series.coeff((k - self.val) as usize).clone()
    }

    pub fn mul(&self, other: &Laurent) -> Laurent {
        Laurent::new(self.val + other.val, self.series.times(&other.series))
    }

    pub fn scale(&self, c: Complex64) -> Laurent {
        Laurent::new(self.val, self.series.scaled(c))
    }

    pub fn recip(&self) -> crate::Result<Laurent> {
        Ok(Laurent::new(-self.val, self.series.recip()?))
    }

    pub fn div(&self, other: &Laurent) -> crate::Result<Laurent> {
        Ok(self.mul(&other.recip()?))
    }

    pub fn add(&self, other: &Laurent) -> Laurent {
        let val = self.val.min(other.val);
        let top = self.top().min(other.top());
        let coeffs = (val..=top).map(|k| &self.coeff(k) + &other.coeff(k)).collect();
        Laurent::new(val, HSeries::new(coeffs))
    }

    pub fn sub(&self, other: &Laurent) -> Laurent {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// `d/dh`.
    pub fn derivative(&self) -> Laurent {
        let coeffs = (0..self.series.len())
            .map(|i| {
                let k = self.val + i as i32;
                self.series.coeff(i).scale(Complex64::new(k as f64, 0.0))
            })
            .collect();
        Laurent::new(self.val - 1, HSeries::new(coeffs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn scalar_series(v: &[f64]) -> HSeries {
        let proto = Jet::constant(&[], 0, c(0.0));
        HSeries::from_scalars(&proto, &v.iter().map(|&x| c(x)).collect::<Vec<_>>())
    }

    #[test]
    fn geometric_reciprocal() {
        let s = scalar_series(&[1.0, -1.0, 0.0, 0.0, 0.0]);
        let r = s.recip().unwrap();
        for k in 0..5 {
            assert!((r.coeff(k).value() - c(1.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn laurent_pole_times_zero() {
        let pole = Laurent::new(-1, scalar_series(&[1.0, 2.0, 3.0]));
        let zero = Laurent::new(1, scalar_series(&[2.0, 0.0, 0.0]));
        let p = pole.mul(&zero);
        assert_eq!(p.val, 0);
        assert!((p.coeff(0).value() - c(2.0)).norm() < 1e-15);
        assert!((p.coeff(1).value() - c(4.0)).norm() < 1e-15);
    }

    #[test]
    fn laurent_add_aligns() {
        let a = Laurent::new(-2, scalar_series(&[1.0, 0.0, 5.0, 1.0]));
        let b = Laurent::new(0, scalar_series(&[1.0, 1.0]));
        let s = a.add(&b);
        assert_eq!(s.val, -2);
        assert_eq!(s.top(), 1);
        assert!((s.coeff(0).value() - c(6.0)).norm() < 1e-15);
        assert!((s.coeff(1).value() - c(2.0)).norm() < 1e-15);
    }

    #[test]
    fn exp_table_composes_into_series() {
        // exp(h) through its Taylor table at 0.
        let proto = Jet::constant(&[], 0, c(0.0));
        let h = HSeries::from_scalars(&proto, &[c(0.0), c(1.0), c(0.0), c(0.0), c(0.0)]);
        let table = Jet::variable(&[c(0.0)], 4, 0).exp();
        let e = compose_table(&table, &[h]);
        for k in 0..5 {
            let want = 1.0 / crate::jets::factorial(k);
            assert!((e.coeff(k).value() - c(want)).norm() < 1e-15);
        }
    }

    #[test]
    fn compose_matches_direct_jet_exp() {
        let base = [Complex64::new(0.2, 0.1)];
        let x = Jet::variable(&base, 4, 0);
        let arg = (&x * &x).add_const(c(0.3));
        let table = Jet::variable(&[arg.value()], 4, 0).exp();
        let via_table = compose_table(&table, &[arg.clone()]);
        assert!(via_table.max_diff(&arg.exp()) < 1e-14);
    }
}
