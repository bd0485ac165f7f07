//! `y² = Π (x − e_i)` with `2g+1` or `2g+2` finite branch points.
//!
//! Branch points are sorted by `(Re, Im)`; `P_0 = e_1`. The global chart is
//! `x = e_1 + t²`, `y = t·h(t)` with
//! `h(t) = h(0) Π_{i≥2} √(1 − t²/(e_i − e_1))` (principal roots), which is the
//! continuation of `h` along the ray from `0`. It is single-valued on the
//! `t`-plane cut along the rays beyond the roots `±√(e_i − e_1)`.
//!
//! Homology basis: `A_a` encircles `[e_{2a−1}, e_{2a}]`, `B_a` runs from cut
//! `a` to cut `g+1`. Straight paths that meet another branch point pass it on
//! the left.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{KzbError, Result};
use crate::jets::Jet;
use crate::quadrature;
use crate::theta::{self, Characteristic, PeriodMatrix};

const CHEBYSHEV_NODES: usize = 256;
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Debug)]
pub struct HyperellipticCurve {
    branch: Vec<Complex64>,
    g: usize,
    /// `e_i − e_1` for `i ≥ 2`.
    offsets: Vec<Complex64>,
    h0: Complex64,
    /// `ω^c_a = Σ_j c[(a, j)] x^j dx/y`.
    c: DMatrix<Complex64>,
    a_periods: DMatrix<Complex64>,
    b_periods: DMatrix<Complex64>,
    asymmetry: f64,
    period: PeriodMatrix,
    delta: Vec<Complex64>,
}

impl HyperellipticCurve {
    pub fn new(branch_points: &[Complex64]) -> Result<Self> {
        let n = branch_points.len();
        if n < 3 {
            return Err(KzbError::BadBranchPoints);
        }
        let g = (n - 1) / 2;
        let mut branch = branch_points.to_vec();
        branch.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        let scale = branch.iter().map(|e| e.norm()).fold(1.0, f64::max);
        for i in 0..n {
            for j in (i + 1)..n {
                if (branch[i] - branch[j]).norm() < 1e-12 * scale {
                    return Err(KzbError::BadBranchPoints);
                }
            }
        }
        let e1 = branch[0];
        let offsets: Vec<Complex64> = branch[1..].iter().map(|e| e - e1).collect();
        let h0 = offsets.iter().map(|d| -d).product::<Complex64>().sqrt();

        let mut pa = DMatrix::zeros(g, g);
        let mut pb = DMatrix::zeros(g, g);
        for a in 0..g {
            let ra = cycle_integrals(&branch, 2 * a, 2 * a + 1, g);
            let rb = cycle_integrals(&branch, 2 * a + 1, 2 * g, g);
            for j in 0..g {
                pa[(a, j)] = ra[j];
                pb[(a, j)] = rb[j];
            }
        }
        let (c, tau, asym, pa, pb) = choose_orientation(&pa, &pb, g)?;

        let mut curve = HyperellipticCurve {
            branch,
            g,
            offsets,
            h0,
            c,
            a_periods: pa,
            b_periods: pb,
            asymmetry: asym,
            period: PeriodMatrix::new(tau)?,
            delta: vec![Complex64::new(0.0, 0.0); g],
        };
        curve.delta = curve.find_riemann_constants()?;
        Ok(curve)
    }

    pub fn genus(&self) -> usize {
        self.g
    }

    pub fn branch_points(&self) -> &[Complex64] {
        &self.branch
    }

    pub fn period_matrix(&self) -> &PeriodMatrix {
        &self.period
    }

    pub fn delta(&self) -> &[Complex64] {
        &self.delta
    }

    /// Relative asymmetry `‖τ − τᵀ‖/‖τ‖` of the computed period matrix before
    /// symmetrization.
    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }

    /// Coefficients `c_{aj}` with `ω^c_a = Σ_j c_{aj} x^j dx/y`.
    pub fn normalization(&self) -> &DMatrix<Complex64> {
        &self.c
    }

    /// `∮_{A_a} x^j dx/y` for the chosen orientation.
    pub fn a_periods(&self) -> &DMatrix<Complex64> {
        &self.a_periods
    }

    pub fn b_periods(&self) -> &DMatrix<Complex64> {
        &self.b_periods
    }

    /// `y` at chart coordinate `t`.
    pub fn y_chart(&self, t: Complex64) -> Result<Complex64> {
        Ok(t * self.h(t)?)
    }

    /// Radius of the largest disk around `t = 0` free of branch points.
    pub fn chart_radius(&self) -> f64 {
        self.offsets
            .iter()
            .map(|d| d.sqrt().norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn x_chart(&self, t: Complex64) -> Complex64 {
        self.branch[0] + t * t
    }

    fn on_cut(&self, t: Complex64) -> bool {
        self.offsets.iter().any(|d| {
            let w = t * t / d;
            w.re >= 1.0 - 1e-9 && w.im.abs() <= 1e-9 * w.norm().max(1.0)
        })
    }

    fn ray_blocked(&self, t: Complex64) -> bool {
        self.offsets.iter().any(|d| {
            let r = d.sqrt();
            [r, -r].iter().any(|&rho| {
                let s = ((rho * t.conj()).re / t.norm_sqr()).clamp(0.0, 1.0);
                (t * s - rho).norm() < 1e-8 * rho.norm()
            })
        })
    }

    fn h(&self, t: Complex64) -> Result<Complex64> {
        if self.on_cut(t) {
            return Err(KzbError::PathThroughBranchPoint);
        }
        Ok(self.h0
            * self
                .offsets
                .iter()
                .map(|d| (1.0 - t * t / d).sqrt())
                .product::<Complex64>())
    }

    pub(crate) fn chart_of(&self, x: Complex64, sheet: i8) -> Result<super::Point> {
        let t = (x - self.branch[0]).sqrt() * f64::from(sheet.signum());
        if self.on_cut(t) {
            return Err(KzbError::PathThroughBranchPoint);
        }
        Ok(super::Point::new(t))
    }

    pub(crate) fn omega_chart(&self, t: Complex64) -> Result<Vec<Complex64>> {
        let h = self.h(t)?;
        let x = self.x_chart(t);
        Ok((0..self.g)
            .map(|a| {
                (0..self.g)
                    .map(|j| self.c[(a, j)] * 2.0 * x.powu(j as u32))
                    .sum::<Complex64>()
                    / h
            })
            .collect())
    }

    pub(crate) fn omega_chart_series(&self, t0: Complex64, len: usize) -> Result<Vec<Vec<Complex64>>> {
        if self.on_cut(t0) {
            return Err(KzbError::PathThroughBranchPoint);
        }
        let order = len.saturating_sub(1);
        let t = Jet::variable(&[t0], order, 0);
        let x = (&t * &t).add_const(self.branch[0]);
        let mut h = Jet::constant(&[t0], order, self.h0);
        for d in &self.offsets {
            let f = (&t * &t).scale(-1.0 / d).add_const(Complex64::new(1.0, 0.0));
            let root = f.value().sqrt();
            h = &h * &f.sqrt_branch(root)?;
        }
        let hinv = h.recip()?;
        let mut out = Vec::with_capacity(self.g);
        for a in 0..self.g {
            let mut acc = Jet::zero(&[t0], order);
            let mut xp = Jet::constant(&[t0], order, Complex64::new(2.0, 0.0));
            for j in 0..self.g {
                acc = &acc + &xp.scale(self.c[(a, j)]);
                xp = &xp * &x;
            }
            let w = &acc * &hinv;
            out.push((0..len).map(|k| w.coeff(&[k as u8])).collect());
        }
        Ok(out)
    }

    /// `∫_0^t ω^c` along the ray in the chart.
    pub(crate) fn abel_chart(&self, t: Complex64) -> Result<Vec<Complex64>> {
        if t.norm() == 0.0 {
            return Ok(vec![Complex64::new(0.0, 0.0); self.g]);
        }
        if self.ray_blocked(t) || self.on_cut(t) {
            return Err(KzbError::PathThroughBranchPoint);
        }
        let mut err = None;
        let v = quadrature::adaptive_segment(Complex64::new(0.0, 0.0), t, 1e-14, |s| match self.omega_chart(s) {
            Ok(w) => w,
            Err(e) => {
                err = Some(e);
                vec![Complex64::new(0.0, 0.0); self.g]
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }

    /// Sample chart points away from the cut rays, used for self-checks.
    pub fn sample_points(&self, count: usize) -> Vec<Complex64> {
        let rmin = self.chart_radius();
        (0..count)
            .map(|k| {
                let phase = 0.7 + 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                let radius = rmin * (0.35 + 0.4 * ((k * 7) % 5) as f64 / 5.0);
                Complex64::from_polar(radius, phase)
            })
            .filter(|&t| !self.on_cut(t) && !self.ray_blocked(t))
            .collect()
    }

    /// Search the half-periods for the shift making `Θ(A(Q) − Δ)` vanish on
    /// sample points `Q` (degree `g−1` divisors at genus 2).
    fn find_riemann_constants(&self) -> Result<Vec<Complex64>> {
        let g = self.g;
        let ch = Characteristic::zero(g);
        let samples: Vec<Vec<Complex64>> = if g == 1 {
            vec![vec![Complex64::new(0.0, 0.0)]]
        } else {
            self.sample_points(6)
                .iter()
                .map(|&t| self.abel_chart(t))
                .collect::<Result<_>>()?
        };
        let mut best: Option<(f64, Vec<Complex64>)> = None;
        for mask in 0..(1usize << (2 * g)) {
            let alpha: Vec<f64> = (0..g).map(|k| ((mask >> k) & 1) as f64).collect();
            let beta: Vec<f64> = (0..g).map(|k| ((mask >> (g + k)) & 1) as f64).collect();
            let tb = self.period.apply(&beta);
            let delta: Vec<Complex64> = (0..g).map(|k| (tb[k] + alpha[k]) * 0.5).collect();
            let mut worst: f64 = 0.0;
            for q in &samples {
                let arg: Vec<Complex64> = q.iter().zip(&delta).map(|(x, d)| x - d).collect();
                worst = worst.max(theta::theta(&arg, &self.period, &ch)?.norm());
            }
            if best.as_ref().is_none_or(|(w, _)| worst < *w) {
                best = Some((worst, delta));
            }
        }
        let (worst, delta) = best.expect("at least one half-period");
        if worst > 1e-8 {
            return Err(KzbError::Invalid(format!(
                "no half-period annihilates theta on the curve (residual {worst:.2e})"
            )));
        }
        Ok(delta)
    }
}

/// `2 ∫ x^j dx / y` along the polyline from branch point `from` to `to`,
/// `j = 0..g`, with `y` continued along the path.
fn cycle_integrals(branch: &[Complex64], from: usize, to: usize, g: usize) -> Vec<Complex64> {
    let start = branch[from];
    let end = branch[to];
    let dir = end - start;
    let mut stops: Vec<(f64, usize)> = branch
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != from && k != to)
        .filter_map(|(k, e)| {
            let s = (e - start) / dir;
            (s.re > 0.0 && s.re < 1.0 && (s.im * dir.norm()).abs() < 1e-9 * dir.norm()).then_some((s.re, k))
        })
        .collect();
    stops.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut verts = vec![from];
    verts.extend(stops.iter().map(|&(_, k)| k));
    verts.push(to);

    let angles = quadrature::chebyshev_angles(CHEBYSHEV_NODES);
    let mut total = vec![Complex64::new(0.0, 0.0); g];
    let mut kappa_prev: Option<(Complex64, Complex64)> = None;
    for w in verts.windows(2) {
        let (ip, iq) = (w[0], w[1]);
        let (p, q) = (branch[ip], branch[iq]);
        let m = (p + q) * 0.5;
        let r = (q - p) * 0.5;
        let rest = |x: Complex64| -> Complex64 {
            branch
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != ip && k != iq)
                .map(|(_, e)| x - e)
                .product()
        };
        let mut prev = rest(p).sqrt();
        let q_start = prev;
        let mut sums = vec![Complex64::new(0.0, 0.0); g];
        for &th in &angles {
            let x = m - r * th.cos();
            let mut s = rest(x).sqrt();
            if (s - prev).norm() > (s + prev).norm() {
                s = -s;
            }
            prev = s;
            let mut xp = Complex64::new(1.0, 0.0);
            for sj in sums.iter_mut() {
                *sj += xp / s;
                xp *= x;
            }
        }
        let mut q_end = rest(q).sqrt();
        if (q_end - prev).norm() > (q_end + prev).norm() {
            q_end = -q_end;
        }
        let sigma = match kappa_prev {
            None => Complex64::new(1.0, 0.0),
            Some((kappa_end, r_prev)) => {
                // Pass the vertex on the left: arg(x − v) turns clockwise from
                // the arrival direction to the departure direction.
                let d_in = -r_prev / r_prev.norm();
                let d_out = r / r.norm();
                let sweep = -((d_in.arg() - d_out.arg()).rem_euclid(2.0 * std::f64::consts::PI));
                let kappa = kappa_end * Complex64::from_polar(1.0, sweep / 2.0) * (r.norm() / r_prev.norm()).sqrt();
                let s = kappa / (I * r * q_start * std::f64::consts::SQRT_2);
                Complex64::new(s.re.signum(), 0.0)
            }
        };
        kappa_prev = Some((sigma * I * r * q_end * std::f64::consts::SQRT_2, r));
        let factor = std::f64::consts::PI / CHEBYSHEV_NODES as f64 / (sigma * I);
        for (t, s) in total.iter_mut().zip(&sums) {
            *t += s * factor;
        }
    }
    total.iter().map(|v| v * 2.0).collect()
}

#[allow(clippy::type_complexity)]
fn choose_orientation(
    pa: &DMatrix<Complex64>,
    pb: &DMatrix<Complex64>,
    g: usize,
) -> Result<(
    DMatrix<Complex64>,
    DMatrix<Complex64>,
    f64,
    DMatrix<Complex64>,
    DMatrix<Complex64>,
)> {
    for mask in 0..(1usize << (2 * g)) {
        let mut a = pa.clone();
        let mut b = pb.clone();
        for k in 0..g {
            if (mask >> k) & 1 == 1 {
                a.row_mut(k).neg_mut();
            }
            if (mask >> (g + k)) & 1 == 1 {
                b.row_mut(k).neg_mut();
            }
        }
        let Some(c) = a.transpose().try_inverse() else {
            continue;
        };
        let tau = &c * b.transpose();
        let scale = tau.iter().map(|x| x.norm()).fold(0.0, f64::max);
        // A path passing over another cut picks up whole A-periods; an
        // integral antisymmetric part is removed by B_b → B_b + Σ_c N_bc A_c.
        let m = &tau - tau.transpose();
        let asym = m.iter().map(|x| (x - x.re.round()).norm()).fold(0.0, f64::max) / scale;
        if asym >= 1e-6 {
            continue;
        }
        let mut fixed = tau.clone();
        for i in 0..g {
            for j in 0..i {
                let n = m[(j, i)].re.round();
                fixed[(i, j)] += n;
                for k in 0..g {
                    let shift = a[(i, k)] * n;
                    b[(j, k)] += shift;
                }
            }
        }
        let sym = (&fixed + fixed.transpose()).map(|x| x * 0.5);
        if sym.map(|x| x.im).cholesky().is_some() {
            return Ok((c, sym, asym, a, b));
        }
    }
    Err(KzbError::InvalidPeriodMatrix)
}
