//! Named verification suites and their JSON reports.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use anyhow::Context;
use clap::ValueEnum;
use kzb_core::operators::{
    apply_tz_rational, basis_sections, commutator_norm, kzb_coordinate_variation, kzb_point_variation,
    monomial_symmetric, pole_order_check, rational_commutator,
};
use kzb_core::tame::{
    random_disjoint_pair, random_elliptic_function, random_rational_function, rational_tame_symbol, tame_symbol,
    twisted_symbol_check, MeromorphicFunction,
};
use kzb_core::theta::theta;
use kzb_core::{
    Characteristic, Complex64, CorrelationForm, CurveModel, CurveSpec, Jet, Kernels, KzbConfig, Moving, PeriodMatrix,
    Point,
};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DEFAULT_SEED: u64 = 0x5EED;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Theta,
    Curve,
    Kernels,
    Operators,
    Kzb,
    Tame,
    All,
}

impl Suite {
    fn members(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![
                Suite::Theta,
                Suite::Curve,
                Suite::Kernels,
                Suite::Operators,
                Suite::Kzb,
                Suite::Tame,
            ],
            s => vec![s],
        }
    }
}

/// Everything that determines a report, apart from wall time.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteSpec {
    pub suite: Suite,
    pub curve: CurveSpec,
    pub k: f64,
    pub seed: u64,
    /// Per-check tolerance overrides, keyed by check name.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

impl SuiteSpec {
    pub fn new(suite: Suite, curve: CurveSpec) -> Self {
        SuiteSpec {
            suite,
            curve,
            k: -2.0,
            seed: DEFAULT_SEED,
            tolerances: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// The identity being checked.
    pub anchor: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub suite: Suite,
    pub curve: CurveSpec,
    pub seed: String,
    pub checks: Vec<Check>,
    pub wall_time: f64,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

type Probe = Box<dyn Fn(&mut ChaCha8Rng) -> kzb_core::Result<f64> + Send + Sync>;

struct Job {
    name: String,
    anchor: &'static str,
    tolerance: f64,
    probe: Probe,
}

fn job<F>(name: impl Into<String>, anchor: &'static str, tolerance: f64, probe: F) -> Job
where
    F: Fn(&mut ChaCha8Rng) -> kzb_core::Result<f64> + Send + Sync + 'static,
{
    Job {
        name: name.into(),
        anchor,
        tolerance,
        probe: Box::new(probe),
    }
}

/// Worker pool size from `KZB_THREADS`, if set.
pub fn thread_count() -> Option<usize> {
    std::env::var("KZB_THREADS").ok()?.parse().ok().filter(|&n| n > 0)
}

/// FNV-1a, so that every check draws from its own stream.
fn name_hash(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x100_0000_01b3)
    })
}

pub fn run_suite(spec: &SuiteSpec) -> anyhow::Result<Report> {
    let start = Instant::now();
    let model = Arc::new(
        spec.curve
            .build()
            .context("curve spec does not describe a valid curve")?,
    );
    let kern = Kernels::new(&model)?;
    let ctx = Ctx {
        model,
        kern,
        k: Complex64::new(spec.k, 0.0),
    };
    let mut jobs = Vec::new();
    for s in spec.suite.members() {
        jobs.extend(match s {
            Suite::Theta => theta_jobs(&ctx),
            Suite::Curve => curve_jobs(&ctx),
            Suite::Kernels => kernel_jobs(&ctx),
            Suite::Operators => operator_jobs(&ctx),
            Suite::Kzb => kzb_jobs(&ctx),
            Suite::Tame => tame_jobs(&ctx),
            Suite::All => unreachable!(),
        });
    }
    let seed = spec.seed;
    let run = || -> Vec<Check> {
        jobs.par_iter()
            .map(|j| {
                let tolerance = spec.tolerances.get(&j.name).copied().unwrap_or(j.tolerance);
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ name_hash(&j.name));
                let (max_error, error) = match (j.probe)(&mut rng) {
                    Ok(e) => (e, None),
                    Err(e) => (f64::NAN, Some(e.to_string())),
                };
                Check {
                    name: j.name.clone(),
                    anchor: j.anchor.to_string(),
                    max_error,
                    tolerance,
                    pass: max_error <= tolerance,
                    error,
                }
            })
            .collect()
    };
    let mut checks = match thread_count() {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(run),
        None => run(),
    };
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(Report {
        suite: spec.suite,
        curve: spec.curve.clone(),
        seed: format!("{seed:#x}"),
        checks,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

struct Ctx {
    model: Arc<CurveModel>,
    kern: Kernels,
    k: Complex64,
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

/// A random point of the chart, away from the base point and from cuts.
pub fn sample_point(model: &CurveModel, rng: &mut impl Rng) -> Point {
    match model {
        CurveModel::Rational => Point::new(Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))),
        CurveModel::Elliptic(e) => Point::new(e.tau() * rng.gen_range(0.15..0.85) + rng.gen_range(0.15..0.85)),
        CurveModel::Hyperelliptic(h) => {
            let pts = h.sample_points(24);
            let t = pts[rng.gen_range(0..pts.len())];
            Point::new(t * Complex64::from_polar(1.0, rng.gen_range(-0.05..0.05)))
        }
    }
}

fn distinct_points(model: &CurveModel, rng: &mut impl Rng, count: usize) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::new();
    while out.len() < count {
        let p = sample_point(model, rng);
        if out.iter().all(|q| (q.t - p.t).norm() > 0.05) {
            out.push(p);
        }
    }
    out
}

fn theta_jobs(ctx: &Ctx) -> Vec<Job> {
    let tau = match ctx.model.period_matrix() {
        Ok(t) => t.clone(),
        Err(_) => PeriodMatrix::genus1(Complex64::new(0.0, 1.0)).expect("τ = i is valid"),
    };
    let g = tau.g();
    let tol = if g == 1 { 1e-10 } else { 1e-8 };
    let t1 = tau.clone();
    let quasi = job(
        "theta.quasi_periodicity",
        "Θ(z + m + τn) = e^{−πi nτn − 2πi n·z} Θ(z)",
        tol,
        move |rng| {
            let ch = Characteristic::zero(g);
            let mut worst: f64 = 0.0;
            for _ in 0..50 {
                let z: Vec<Complex64> = (0..g)
                    .map(|_| Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)))
                    .collect();
                let m: Vec<f64> = (0..g).map(|_| rng.gen_range(-2..=2) as f64).collect();
                let n: Vec<f64> = (0..g).map(|_| rng.gen_range(-2..=2) as f64).collect();
                let tn = t1.apply(&n);
                let shifted: Vec<Complex64> = (0..g).map(|a| z[a] + m[a] + tn[a]).collect();
                let ntn: Complex64 = (0..g).map(|a| tn[a] * n[a]).sum();
                let nz: Complex64 = (0..g).map(|a| z[a] * n[a]).sum();
                let factor = (Complex64::new(0.0, -PI) * ntn - Complex64::new(0.0, 2.0 * PI) * nz).exp();
                let lhs = theta(&shifted, &t1, &ch)?;
                let rhs = factor * theta(&z, &t1, &ch)?;
                worst = worst.max((lhs - rhs).norm() / rhs.norm());
            }
            Ok(worst)
        },
    );
    let parity = job("theta.even_parity", "Θ(−z) = Θ(z)", tol, move |rng| {
        let ch = Characteristic::zero(g);
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let z: Vec<Complex64> = (0..g)
                .map(|_| Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)))
                .collect();
            let minus: Vec<Complex64> = z.iter().map(|x| -x).collect();
            let a = theta(&z, &tau, &ch)?;
            worst = worst.max((theta(&minus, &tau, &ch)? - a).norm() / a.norm());
        }
        Ok(worst)
    });
    vec![quasi, parity]
}

fn curve_jobs(ctx: &Ctx) -> Vec<Job> {
    if ctx.model.genus() == 0 {
        return Vec::new();
    }
    let m1 = ctx.model.clone();
    let symmetry = job(
        "curve.period_matrix_symmetry",
        "‖τ − τᵀ‖/‖τ‖ before symmetrization",
        1e-6,
        move |_| {
            // the stored τ is symmetrized; report the computed asymmetry
            Ok(match &*m1 {
                CurveModel::Hyperelliptic(h) => h.asymmetry(),
                _ => 0.0,
            })
        },
    );
    let m2 = ctx.model.clone();
    let vanishing = job(
        "curve.riemann_vanishing",
        "Θ(A(Q) − Δ) = 0 for deg Q = g − 1",
        1e-8,
        move |rng| {
            let tau = m2.period_matrix()?;
            let g = tau.g();
            let delta = m2.riemann_constants()?;
            let ch = Characteristic::zero(g);
            let scale = theta(&vec![c(0.0); g], tau, &ch)?.norm();
            let mut worst: f64 = 0.0;
            for _ in 0..if g == 1 { 1 } else { 8 } {
                let q = if g == 1 {
                    vec![c(0.0)]
                } else {
                    m2.abel(&sample_point(&m2, rng))?
                };
                let arg: Vec<Complex64> = q.iter().zip(&delta).map(|(x, d)| x - d).collect();
                worst = worst.max(theta(&arg, tau, &ch)?.norm() / scale);
            }
            Ok(worst)
        },
    );
    vec![symmetry, vanishing]
}

fn kernel_jobs(ctx: &Ctx) -> Vec<Job> {
    let g = ctx.model.genus();
    let (m, k) = (ctx.model.clone(), ctx.kern.clone());
    if g == 0 {
        return vec![job(
            "kernels.rational_omega_tilde",
            "ω̃(z, w) = dz dw/(z − w)²",
            1e-14,
            move |rng| {
                let mut worst: f64 = 0.0;
                for _ in 0..20 {
                    let p = distinct_points(&m, rng, 2);
                    let d = p[0].t - p[1].t;
                    worst = worst.max(rel(k.omega_tilde(&p[0], &p[1])?, 1.0 / (d * d)));
                }
                Ok(worst)
            },
        )];
    }
    let mut out = Vec::new();
    let (m1, k1) = (m.clone(), k.clone());
    out.push(job(
        "kernels.omega_tilde_symmetry",
        "ω̃(z, w) = ω̃(w, z)",
        if g == 1 { 1e-9 } else { 1e-5 },
        move |rng| {
            let mut worst: f64 = 0.0;
            for _ in 0..6 {
                let p = distinct_points(&m1, rng, 2);
                let a = k1.omega_tilde(&p[0], &p[1])?;
                worst = worst.max(rel(k1.omega_tilde(&p[1], &p[0])?, a));
            }
            Ok(worst)
        },
    ));
    let (m2, k2) = (m.clone(), k.clone());
    out.push(job("kernels.green_base_point", "G(z, P_0) = 0", 1e-9, move |rng| {
        let base = Point::new(c(0.0));
        let mut worst: f64 = 0.0;
        for _ in 0..6 {
            worst = worst.max(k2.green(&sample_point(&m2, rng), &base)?.norm());
        }
        Ok(worst)
    }));
    let (m3, k3) = (m.clone(), k.clone());
    out.push(job(
        "kernels.green_b_monodromy",
        "G(z, γ_{B_a}w) − G(z, w) = ω_a(z)",
        if g == 1 { 1e-9 } else { 1e-8 },
        move |rng| {
            let mut worst: f64 = 0.0;
            for _ in 0..4 {
                let p = distinct_points(&m3, rng, 2);
                let om = m3.holomorphic_differentials(&p[0])?;
                for (a, oa) in om.iter().enumerate() {
                    let step = k3.green(&p[0], &p[1].around_b(a, g))? - k3.green(&p[0], &p[1])?;
                    worst = worst.max(rel(step, *oa));
                }
            }
            Ok(worst)
        },
    ));
    let (m4, k4) = (m.clone(), k.clone());
    out.push(job(
        "kernels.green_residue",
        "res_{z=w} G(z, w) = 1",
        1e-8,
        move |rng| {
            let mut worst: f64 = 0.0;
            for _ in 0..3 {
                let w = sample_point(&m4, rng);
                let s = k4.green_series(&w, &w, Moving::First, 2)?;
                worst = worst.max((s.coeff(-1).value() - 1.0).norm());
            }
            Ok(worst)
        },
    ));
    let (m5, k5) = (m, k);
    out.push(job(
        "kernels.twisted_b_monodromy",
        "G_λ(γ_{B_a}z, w) = e^{λ_a} G_λ(z, w)",
        1e-8,
        move |rng| {
            let mut worst: f64 = 0.0;
            for _ in 0..3 {
                let mu: Vec<Complex64> = (0..g)
                    .map(|_| Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)))
                    .collect();
                let p = distinct_points(&m5, rng, 2);
                let base = k5.green_twisted(&mu, &p[0], &p[1])?;
                for (a, ma) in mu.iter().enumerate() {
                    let ratio = k5.green_twisted(&mu, &p[0].around_b(a, g), &p[1])? / base;
                    worst = worst.max(rel(ratio, ma.exp()));
                }
            }
            Ok(worst)
        },
    ));
    out
}

fn operator_jobs(ctx: &Ctx) -> Vec<Job> {
    match ctx.model.genus() {
        0 => vec![job(
            "operators.rational_commutator",
            "[T(z), T(w)] = 0 on the rational curve",
            0.0,
            |rng| {
                let mut failures = 0usize;
                for kappa in [&[1u32][..], &[2], &[1, 1], &[2, 1], &[3, 1, 1]] {
                    for n in kappa.len().max(2)..=3 {
                        let f = monomial_symmetric::<BigRational>(kappa, n);
                        let pts: Vec<BigRational> = distinct_rationals(rng, n + 2);
                        let r = rational_commutator(&f, &pts[n], &pts[n + 1], &pts[..n])?;
                        failures += usize::from(!r.is_zero());
                        // T(z) itself is well defined and finite.
                        apply_tz_rational(&f, &pts[n], &pts[..n])?;
                    }
                }
                Ok(failures as f64)
            },
        )],
        1 => {
            let mut out = Vec::new();
            let tau = match &*ctx.model {
                CurveModel::Elliptic(e) => e.tau(),
                _ => unreachable!(),
            };
            for n in 0..=1usize {
                for p in 1..=2usize {
                    let (m, kern, k) = (ctx.model.clone(), ctx.kern.clone(), ctx.k);
                    out.push(job(
                        format!("operators.commutator.n{n}.p{p}"),
                        "[T(z), T(w)] = 0 at k = −2",
                        1e-7,
                        move |rng| {
                            let lam0 = [Complex64::new(rng.gen_range(0.1..0.4), rng.gen_range(0.1..0.4))];
                            let forms = basis_sections(&m, &lam0, p, n)?;
                            let pts = distinct_points(&m, rng, n + 2);
                            let mut worst: f64 = 0.0;
                            for f in &forms {
                                let r = commutator_norm(&kern, k, f, &lam0, &pts[n], &pts[n + 1], &pts[..n])?;
                                worst = worst.max(r);
                            }
                            Ok(worst)
                        },
                    ));
                }
            }
            let (m, kern, k) = (ctx.model.clone(), ctx.kern.clone(), ctx.k);
            out.push(job(
                "operators.pole_order.n1.p2",
                "T_z f has poles of order ≤ p at P_0",
                1e-6,
                move |rng| {
                    let lam0 = [Complex64::new(0.31, 0.22)];
                    let zs = vec![Point::new(tau * rng.gen_range(0.3..0.6) + rng.gen_range(0.3..0.6))];
                    let mut worst: f64 = 0.0;
                    for f in basis_sections(&m, &lam0, 2, 1)? {
                        worst = worst.max(pole_order_check(&kern, k, &f, &lam0, &zs)?.max());
                    }
                    Ok(worst)
                },
            ));
            out
        }
        g => {
            let (m, kern, k) = (ctx.model.clone(), ctx.kern.clone(), ctx.k);
            vec![job(
                "operators.commutator.n0",
                "[T(z), T(w)] = 0 at k = −2",
                1e-6,
                move |rng| {
                    let lam0: Vec<Complex64> = (0..g)
                        .map(|_| Complex64::new(rng.gen_range(0.05..0.2), rng.gen_range(0.05..0.2)))
                        .collect();
                    let coef: Vec<Complex64> = (0..g).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), 0.3)).collect();
                    let f = CorrelationForm::new(0, k, 0, move |lam, _| {
                        let mut s = lam[0].scale(coef[0]);
                        for (l, cf) in lam.iter().zip(&coef).skip(1) {
                            s = &s + &l.scale(*cf);
                        }
                        Ok(s.exp())
                    });
                    let pts = distinct_points(&m, rng, 2);
                    commutator_norm(&kern, k, &f, &lam0, &pts[0], &pts[1], &[])
                },
            )]
        }
    }
}

fn distinct_rationals(rng: &mut impl Rng, count: usize) -> Vec<BigRational> {
    let mut out: Vec<BigRational> = Vec::new();
    while out.len() < count {
        let q = BigRational::new(rng.gen_range(-20i64..=20).into(), rng.gen_range(1i64..=7).into());
        if !out.contains(&q) {
            out.push(q);
        }
    }
    out
}

fn kzb_jobs(ctx: &Ctx) -> Vec<Job> {
    let mut out = vec![job("kzb.coordinate_variation", "½Λ(Λ + 2)", 0.0, |rng| {
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let l = f64::from(rng.gen_range(0u32..=8)) * 0.5;
            let cfg = KzbConfig::new(vec![Point::new(c(0.5))], vec![l], c(-2.0))?;
            worst = worst.max((kzb_coordinate_variation(&cfg, 0) - (l * l + 2.0 * l) / 2.0).abs());
        }
        Ok(worst)
    })];
    let g = ctx.model.genus();
    if g == 0 {
        return out;
    }
    let (m, kern, k) = (ctx.model.clone(), ctx.kern.clone(), ctx.k);
    out.push(job(
        "kzb.no_insertions",
        "K_i f = [−Λ_i Σω_a(P_i)∂_a + Λ_i²φ(P_i) + 2Λ_i g_{2λ}(P_i)] f",
        1e-8,
        move |rng| {
            let lam0: Vec<Complex64> = (0..g)
                .map(|_| Complex64::new(rng.gen_range(0.05..0.2), rng.gen_range(0.05..0.2)))
                .collect();
            let lam = Jet::variables(&lam0, 2);
            let f = CorrelationForm::new(0, k, 0, |lam, _| {
                let mut s = lam[0].scale(c(0.5));
                for l in &lam[1..] {
                    s = &s + &l.scale(c(-0.25));
                }
                Ok(s.exp())
            });
            let p1 = sample_point(&m, rng);
            let weight = rng.gen_range(0.5..2.0);
            let cfg = KzbConfig::new(vec![p1.clone()], vec![weight], k)?;
            let got = kzb_point_variation(&kern, &cfg, &f, &lam, &[], 0)?.value();
            let f0 = f.eval(&lam, &[])?;
            let om = m.holomorphic_differentials(&p1)?;
            let mu: Vec<Complex64> = lam0.iter().map(|l| l * 2.0).collect();
            let mut want = (weight * weight * kern.phi(&p1)? + 2.0 * weight * kern.g_twisted(&mu, &p1)?) * f0.value();
            for (a, oa) in om.iter().enumerate() {
                let mut alpha = vec![0u8; g];
                alpha[a] = 1;
                want -= weight * oa * f0.partial(&alpha);
            }
            Ok(rel(got, want))
        },
    ));
    out
}

fn tame_jobs(ctx: &Ctx) -> Vec<Job> {
    let mut out = vec![
        job("tame.weil_rational", "σ(f, g) = 1 on the rational curve", 0.0, |rng| {
            let mut failures = 0usize;
            for _ in 0..50 {
                let (f, g) = random_disjoint_pair(rng, 4, 9);
                failures += usize::from(!rational_tame_symbol(&f, &g).is_one());
            }
            Ok(failures as f64)
        }),
        job("tame.bimultiplicativity", "σ(fg, h) = σ(f, h)σ(g, h)", 0.0, |rng| {
            let mut failures = 0usize;
            for _ in 0..50 {
                let (f, h) = random_disjoint_pair(rng, 3, 9);
                let g = random_rational_function(rng, 3, 9);
                let gh = rational_tame_symbol(&g, &h);
                let whole = rational_tame_symbol(&f.mul(&g), &h);
                failures += usize::from(whole != rational_tame_symbol(&f, &h) * gh);
            }
            Ok(failures as f64)
        }),
        job("tame.antisymmetry", "σ(f, g)σ(g, f) = 1", 0.0, |rng| {
            let mut failures = 0usize;
            for _ in 0..50 {
                let (f, g) = random_disjoint_pair(rng, 4, 9);
                let prod = rational_tame_symbol(&f, &g) * rational_tame_symbol(&g, &f);
                failures += usize::from(!prod.is_one());
            }
            Ok(failures as f64)
        }),
    ];
    let CurveModel::Elliptic(e) = &*ctx.model else {
        return out;
    };
    let tau = e.tau();
    out.push(job(
        "tame.weil_elliptic",
        "σ(f, g) = 1 for elliptic f, g",
        1e-8,
        move |rng| {
            let mut worst: f64 = 0.0;
            for _ in 0..10 {
                let f = MeromorphicFunction::Elliptic(random_elliptic_function(tau, 2, rng)?);
                let g = MeromorphicFunction::Elliptic(random_elliptic_function(tau, 2, rng)?);
                worst = worst.max((tame_symbol(&f, &g)?.to_complex() - 1.0).norm());
            }
            Ok(worst)
        },
    ));
    let m = ctx.model.clone();
    out.push(job(
        "tame.twisted_identity",
        "σ(f, f_λ) = e^{Σ n_a(f)λ_a}",
        1e-7,
        move |rng| {
            let mut worst: f64 = 0.0;
            for _ in 0..10 {
                let f = MeromorphicFunction::Elliptic(random_elliptic_function(tau, 2, rng)?);
                let lam = Complex64::new(rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8));
                let r = twisted_symbol_check(&m, &f, &[lam], rng.gen())?;
                worst = worst.max(r.twisted_error).max(r.pair_error);
            }
            Ok(worst)
        },
    ));
    out
}
