//! Kernel values on a rectangular grid of `z`, with `w` fixed.

use std::fmt::Write as _;
use std::str::FromStr;

use anyhow::{bail, Context};
use clap::ValueEnum;
use kzb_core::{Complex64, CurveModel, Kernels, Point};
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kernel {
    /// `ω̃(z, w)`
    OmegaTilde,
    /// `G(z, w)`
    Green,
    /// `G_λ(z, w)`
    GreenTwisted,
}

/// `nx × ny` cell centers of the window `[re0, re1] × [im0, im1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub re: (f64, f64),
    pub im: (f64, f64),
}

impl Grid {
    pub fn new(size: &str, window: &str) -> anyhow::Result<Self> {
        let n: Vec<usize> = parse_list(size).context("grid must be nx,ny")?;
        let w: Vec<f64> = parse_list(window).context("window must be re0,re1,im0,im1")?;
        if n.len() != 2 || n.contains(&0) {
            bail!("grid must be two positive counts nx,ny");
        }
        if w.len() != 4 || !(w[0] < w[1] && w[2] < w[3]) {
            bail!("window must be re0,re1,im0,im1 with re0 < re1 and im0 < im1");
        }
        Ok(Grid {
            nx: n[0],
            ny: n[1],
            re: (w[0], w[1]),
            im: (w[2], w[3]),
        })
    }

    fn step(&self) -> (f64, f64) {
        (
            (self.re.1 - self.re.0) / self.nx as f64,
            (self.im.1 - self.im.0) / self.ny as f64,
        )
    }

    /// Row-major in the imaginary direction: all `re` for the first `im`, …
    pub fn points(&self) -> Vec<Complex64> {
        let (dx, dy) = self.step();
        (0..self.ny)
            .flat_map(|j| {
                (0..self.nx)
                    .map(move |i| Complex64::new(self.re.0 + (i as f64 + 0.5) * dx, self.im.0 + (j as f64 + 0.5) * dy))
            })
            .collect()
    }
}

pub fn parse_list<T: FromStr>(s: &str) -> anyhow::Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    s.split(',').map(|x| Ok(x.trim().parse::<T>()?)).collect()
}

pub fn parse_complex(s: &str) -> anyhow::Result<Complex64> {
    let v: Vec<f64> = parse_list(s).context("complex number must be re,im")?;
    match v[..] {
        [re, im] => Ok(Complex64::new(re, im)),
        [re] => Ok(Complex64::new(re, 0.0)),
        _ => bail!("complex number must be re,im"),
    }
}

/// Kernel values, `None` where the cell is masked.
pub struct GridValues {
    pub grid: Grid,
    pub w: Complex64,
    pub z: Vec<Complex64>,
    pub values: Vec<Option<Complex64>>,
}

/// Poles of the selected kernel in `z`, including lattice translates.
fn poles(model: &CurveModel, kernel: Kernel, w: Complex64) -> Vec<Complex64> {
    let mut base = vec![w];
    if kernel == Kernel::Green {
        base.push(Complex64::new(0.0, 0.0));
    }
    match model {
        CurveModel::Elliptic(e) => {
            let tau = e.tau();
            let mut out = Vec::new();
            for p in &base {
                for m in -3..=3 {
                    for n in -3..=3 {
                        out.push(p + m as f64 + tau * n as f64);
                    }
                }
            }
            out
        }
        _ => base,
    }
}

pub fn evaluate(
    model: &CurveModel,
    kernel: Kernel,
    grid: Grid,
    w: Complex64,
    lambda: &[Complex64],
) -> anyhow::Result<GridValues> {
    let kern = Kernels::new(model)?;
    if kernel == Kernel::GreenTwisted && lambda.len() != model.genus() {
        bail!(
            "the twisted kernel needs one twist per cycle ({} given, genus {})",
            lambda.len(),
            model.genus()
        );
    }
    let (dx, dy) = grid.step();
    let mask = 0.5 * dx.hypot(dy);
    let poles = poles(model, kernel, w);
    let z = grid.points();
    let wp = Point::new(w);
    let values = z
        .par_iter()
        .map(|&zi| {
            if poles.iter().any(|p| (zi - p).norm() < mask) {
                return None;
            }
            let zp = Point::new(zi);
            let v = match kernel {
                Kernel::OmegaTilde => kern.omega_tilde(&zp, &wp),
                Kernel::Green => kern.green(&zp, &wp),
                Kernel::GreenTwisted => kern.green_twisted(lambda, &zp, &wp),
            };
            v.ok().filter(|v| v.is_finite())
        })
        .collect();
    Ok(GridValues { grid, w, z, values })
}

impl GridValues {
    /// Header and one row per cell: `re z, im z, re w, im w, re value, im value`.
    pub fn csv(&self) -> String {
        let mut out = String::from("re_z,im_z,re_w,im_w,re_value,im_value\n");
        for (z, v) in self.z.iter().zip(&self.values) {
            let (vr, vi) = match v {
                Some(v) => (v.re.to_string(), v.im.to_string()),
                None => ("nan".to_string(), "nan".to_string()),
            };
            writeln!(out, "{},{},{},{},{vr},{vi}", z.re, z.im, self.w.re, self.w.im).expect("string write");
        }
        out
    }

    /// Heatmap of `log|value|`, masked cells white.
    pub fn svg(&self) -> String {
        const CELL: usize = 8;
        let logs: Vec<Option<f64>> = self
            .values
            .iter()
            .map(|v| v.map(|v| v.norm().max(1e-300).log10()))
            .collect();
        let (lo, hi) = logs
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        let span = if hi > lo { hi - lo } else { 1.0 };
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut out = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\">\n",
            nx * CELL,
            ny * CELL
        );
        for (idx, l) in logs.iter().enumerate() {
            let (i, j) = (idx % nx, idx / nx);
            // imaginary axis points up
            let y = (ny - 1 - j) * CELL;
            let fill = match l {
                Some(x) => ramp((x - lo) / span),
                None => "#ffffff".to_string(),
            };
            writeln!(
                out,
                "<rect x=\"{}\" y=\"{y}\" width=\"{CELL}\" height=\"{CELL}\" fill=\"{fill}\"/>",
                i * CELL
            )
            .expect("string write");
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Dark blue to yellow.
fn ramp(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        lerp(30.0, 250.0),
        lerp(20.0, 220.0),
        lerp(110.0, 40.0)
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parses_and_counts_cells() {
        let g = Grid::new("4,3", "0,1,-1,1").unwrap();
        assert_eq!(g.points().len(), 12);
        assert!(Grid::new("4", "0,1,0,1").is_err());
        assert!(Grid::new("4,4", "1,0,0,1").is_err());
    }

    #[test]
    fn ramp_endpoints() {
        assert_eq!(ramp(0.0), "#1e146e");
        assert_eq!(ramp(1.0), "#fadc28");
    }
}
