//! The operator family on the rational curve, over any field (exact
//! rationals or complex floats).

use std::ops::{Add, Div, Mul, Sub};

use num_traits::{One, Zero};

use crate::error::{KzbError, Result};

/// Field arithmetic needed by the rational operators.
pub trait RationalField:
    Clone + PartialEq + Zero + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Div<Output = Self>
{
}

impl<T> RationalField for T where
    T: Clone + PartialEq + Zero + One + Add<Output = T> + Sub<Output = T> + Mul<Output = T> + Div<Output = T>
{
}

/// `(T(z)f)(z_1…z_n) = Σ_i (Σ_{j≠i} 1/(z_j − z_i)) (f(z_1…z…z_n) − f(z_1…z_n))/(z − z_i)`
/// with `z` in slot `i`.
pub fn apply_tz_rational<T, F>(f: F, z: &T, zs: &[T]) -> Result<T>
where
    T: RationalField,
    F: Fn(&[T]) -> Result<T>,
{
    for (i, a) in zs.iter().enumerate() {
        if a == z || zs[i + 1..].contains(a) {
            return Err(KzbError::CoincidentPoints);
        }
    }
    let base = f(zs)?;
    let mut out = T::zero();
    for (i, zi) in zs.iter().enumerate() {
        let mut weight = T::zero();
        for (j, zj) in zs.iter().enumerate() {
            if j != i {
                weight = weight + T::one() / (zj.clone() - zi.clone());
            }
        }
        if weight.is_zero() {
            continue;
        }
        let mut moved = zs.to_vec();
        moved[i] = z.clone();
        let diff = f(&moved)? - base.clone();
        out = out + weight * diff / (z.clone() - zi.clone());
    }
    Ok(out)
}

/// `[T(z), T(w)] f` at `(z_1…z_n)`.
pub fn rational_commutator<T, F>(f: &F, z: &T, w: &T, zs: &[T]) -> Result<T>
where
    T: RationalField,
    F: Fn(&[T]) -> Result<T>,
{
    let zw = apply_tz_rational(|pts: &[T]| apply_tz_rational(f, w, pts), z, zs)?;
    let wz = apply_tz_rational(|pts: &[T]| apply_tz_rational(f, z, pts), w, zs)?;
    Ok(zw - wz)
}

/// Monomial symmetric function `m_κ(z_1…z_n) = Σ z^{σ(κ)}` over the distinct
/// rearrangements of the exponent vector `κ` padded with zeros to length `n`.
pub fn monomial_symmetric<T: RationalField>(kappa: &[u32], n: usize) -> impl Fn(&[T]) -> Result<T> + Clone {
    let mut exps = kappa.to_vec();
    exps.resize(n.max(kappa.len()), 0);
    exps.sort_unstable();
    let perms = distinct_permutations(exps);
    move |zs: &[T]| {
        if zs.len() != n {
            return Err(KzbError::Invalid(format!("expected {n} points")));
        }
        let mut out = T::zero();
        for p in &perms {
            let mut term = T::one();
            for (x, &e) in zs.iter().zip(p) {
                for _ in 0..e {
                    term = term * x.clone();
                }
            }
            out = out + term;
        }
        Ok(out)
    }
}

/// Distinct permutations of a sorted vector, in lexicographic order.
pub(crate) fn distinct_permutations(mut v: Vec<u32>) -> Vec<Vec<u32>> {
    let mut out = vec![v.clone()];
    loop {
        let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
            return out;
        };
        let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).expect("pivot exists");
        v.swap(i - 1, j);
        v[i..].reverse();
        out.push(v.clone());
    }
}
