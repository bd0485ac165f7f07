use std::f64::consts::PI;

use kzb_core::theta::{jacobi_theta1, theta, theta_table};
use kzb_core::{Characteristic, Complex64, CurveModel, Jet, PeriodMatrix, Point};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn quintic() -> CurveModel {
    let pts: Vec<_> = (0..5).map(|k| c(k as f64, 0.0)).collect();
    CurveModel::hyperelliptic(&pts).unwrap()
}

/// Chart points of the quintic, off the points used to fix `Δ`.
fn quintic_points(m: &CurveModel, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let CurveModel::Hyperelliptic(h) = m else {
        unreachable!()
    };
    h.sample_points(24)
        .into_iter()
        .map(|t| t * Complex64::from_polar(1.0, rng.gen_range(-0.05..0.05)))
        .collect()
}

/// Fourth-order central difference.
fn d1<F: Fn(f64) -> Complex64>(f: F, h: f64) -> Complex64 {
    (8.0 * (f(h) - f(-h)) - (f(2.0 * h) - f(-2.0 * h))) / (12.0 * h)
}

// ---- theta ----------------------------------------------------------------

#[test]
fn theta_satisfies_heat_equation() {
    // ∂_τ Θ = (1/4πi) ∂_z² Θ at genus 1
    for (z, tau) in [(c(0.21, -0.13), c(0.0, 1.0)), (c(-0.4, 0.3), c(0.3, 1.2))] {
        let ch = Characteristic::zero(1);
        let at = |dt: f64| theta(&[z], &PeriodMatrix::genus1(tau + dt).unwrap(), &ch).unwrap();
        let dtau = d1(at, 1e-3);
        let dzz = theta_table(&[z], &PeriodMatrix::genus1(tau).unwrap(), &ch, 2)
            .unwrap()
            .partial(&[2]);
        let want = dzz / c(0.0, 4.0 * PI);
        assert!((dtau - want).norm() < 1e-8 * want.norm(), "{dtau} vs {want}");
    }
}

#[test]
fn jacobi_theta1_matches_sine_series() {
    let tau = c(0.3, 1.2);
    let q = (c(0.0, PI) * tau).exp();
    for z in [c(0.17, 0.05), c(-0.6, 0.4), c(1.3, -0.2)] {
        let series: Complex64 = (0..30)
            .map(|n| {
                let e = (n as f64 + 0.5).powi(2);
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                2.0 * sign * q.powf(e) * ((2 * n + 1) as f64 * PI * z).sin()
            })
            .sum();
        let got = jacobi_theta1(z, tau).unwrap();
        assert!(
            (got - series).norm() < 1e-13 * series.norm().max(1.0),
            "{got} vs {series}"
        );
    }
}

#[test]
fn genus_two_heat_equation_off_diagonal() {
    // ∂_{τ_12} Θ = (1/2πi) ∂_1∂_2 Θ
    let m = quintic();
    let tau = m.period_matrix().unwrap().tau().clone();
    let ch = Characteristic::zero(2);
    let z = [c(0.11, -0.07), c(-0.2, 0.15)];
    let at = |dt: f64| {
        let mut t = tau.clone();
        t[(0, 1)] += dt;
        t[(1, 0)] += dt;
        theta(&z, &PeriodMatrix::new(t).unwrap(), &ch).unwrap()
    };
    let dtau = d1(at, 1e-3);
    let mixed = theta_table(&z, m.period_matrix().unwrap(), &ch, 2)
        .unwrap()
        .partial(&[1, 1]);
    let want = mixed / c(0.0, 2.0 * PI);
    assert!((dtau - want).norm() < 1e-7 * want.norm(), "{dtau} vs {want}");
}

// ---- curves ---------------------------------------------------------------

#[test]
fn elliptic_abel_map_steps_by_periods() {
    let m = CurveModel::elliptic(c(0.3, 1.2)).unwrap();
    let p = Point::new(c(0.2, 0.3));
    let a0 = m.abel(&p).unwrap()[0];
    assert!((m.abel(&p.around_a(0, 1)).unwrap()[0] - a0 - 1.0).norm() < 1e-15);
    assert!((m.abel(&p.around_b(0, 1)).unwrap()[0] - a0 - c(0.3, 1.2)).norm() < 1e-15);
}

#[test]
fn abel_map_differentiates_to_differentials() {
    let m = quintic();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for t in quintic_points(&m, &mut rng).into_iter().take(8) {
        let om = m.omega_classical(&Point::new(t)).unwrap();
        for a in 0..2 {
            let d = d1(|h| m.abel(&Point::new(t + h)).unwrap()[a], 1e-3);
            assert!(
                (d - om[a]).norm() < 1e-8 * om[a].norm().max(1.0),
                "{a}: {d} vs {}",
                om[a]
            );
        }
    }
}

#[test]
fn theta_vanishes_on_shifted_abel_image() {
    // Θ(A(Q) − Δ) = 0 for every point Q at genus 2
    let m = quintic();
    let tau = m.period_matrix().unwrap();
    let delta = m.riemann_constants().unwrap();
    let ch = Characteristic::zero(2);
    let scale = theta(&[c(0.0, 0.0); 2], tau, &ch).unwrap().norm();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for t in quintic_points(&m, &mut rng) {
        let a = m.abel(&Point::new(t)).unwrap();
        let arg: Vec<Complex64> = a.iter().zip(&delta).map(|(x, d)| x - d).collect();
        let v = theta(&arg, tau, &ch).unwrap().norm() / scale;
        assert!(v < 1e-8, "{t}: {v}");
    }
}

#[test]
fn quintic_period_matrix_is_riemann() {
    let m = quintic();
    let CurveModel::Hyperelliptic(h) = &m else {
        unreachable!()
    };
    assert!(h.asymmetry() < 1e-6, "{}", h.asymmetry());
    let im = m.period_matrix().unwrap().tau().map(|x| x.im);
    assert!(im.symmetric_eigenvalues().min() > 0.0);
}

// ---- jets -----------------------------------------------------------------

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn jet_derivatives_follow_leibniz(
        xr in -1.0f64..1.0, xi in -1.0f64..1.0, ar in -1.5f64..1.5, ai in -1.5f64..1.5,
    ) {
        // f = e^{ax}/(x + 3): f^{(k)} = Σ_j C(k,j) a^{k−j} e^{ax} (−1)^j j!/(x + 3)^{j+1}
        let (x0, a) = (c(xr, xi), c(ar, ai));
        let order = 5;
        let x = &Jet::variables(&[x0], order)[0];
        let f = &x.scale(a).exp() * &x.add_const(c(3.0, 0.0)).recip().unwrap();
        for k in 0..=order {
            let want: Complex64 = (0..=k)
                .map(|j| {
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    binom(k, j) * a.powu((k - j) as u32) * (a * x0).exp() * sign * factorial(j)
                        / (x0 + 3.0).powu(j as u32 + 1)
                })
                .sum();
            let got = f.partial(&[k as u8]);
            prop_assert!((got - want).norm() < 1e-10 * want.norm().max(1.0), "k={}: {} vs {}", k, got, want);
        }
    }

    #[test]
    fn jet_mixed_partial(xr in -1.0f64..1.0, yr in -1.0f64..1.0, yi in -0.5f64..0.5) {
        // ∂_x∂_y (xy e^{xy}) = e^{xy}(1 + 3xy + x²y²)
        let (x0, y0) = (c(xr, 0.0), c(yr, yi));
        let v = Jet::variables(&[x0, y0], 2);
        let xy = &v[0] * &v[1];
        let f = &xy * &xy.exp();
        let p = x0 * y0;
        let want = p.exp() * (1.0 + 3.0 * p + p * p);
        prop_assert!((f.partial(&[1, 1]) - want).norm() < 1e-12 * want.norm().max(1.0));
    }

    #[test]
    fn theta_quasi_periodic_genus_one(
        zr in -0.5f64..0.5, zi in -0.5f64..0.5, m in -3i32..=3, n in -3i32..=3,
    ) {
        let tau = c(0.3, 1.2);
        let pm = PeriodMatrix::genus1(tau).unwrap();
        let ch = Characteristic::zero(1);
        let z = c(zr, zi);
        let (mf, nf) = (m as f64, n as f64);
        let lhs = theta(&[z + mf + tau * nf], &pm, &ch).unwrap();
        let factor = (c(0.0, -PI) * nf * nf * tau - c(0.0, 2.0 * PI) * nf * z).exp();
        let rhs = factor * theta(&[z], &pm, &ch).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-10 * rhs.norm());
    }
}
