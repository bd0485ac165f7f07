use num_complex::Complex64;

use crate::error::{KzbError, Result};
use crate::theta::PeriodMatrix;

/// `ℂ/(ℤ+τℤ)` with chart coordinate `z`, `P_0 = 0`, `ω^c = dz`.
#[derive(Clone, Debug)]
pub struct EllipticCurve {
    tau: Complex64,
    period: PeriodMatrix,
}

impl EllipticCurve {
    pub fn new(tau: Complex64) -> Result<Self> {
        if !(tau.im > 0.0) {
            return Err(KzbError::InvalidPeriodMatrix);
        }
        Ok(EllipticCurve {
            tau,
            period: PeriodMatrix::genus1(tau)?,
        })
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    pub fn period_matrix(&self) -> &PeriodMatrix {
        &self.period
    }

    /// `Δ = (1+τ)/2`, the zero of `Θ`.
    pub fn delta(&self) -> Complex64 {
        (1.0 + self.tau) * 0.5
    }

    /// Length of the shortest nonzero lattice vector.
    pub fn chart_radius(&self) -> f64 {
        let mut best = f64::INFINITY;
        for n in -3i32..=3 {
            for m in -3i32..=3 {
                if (m, n) != (0, 0) {
                    best = best.min((self.tau * n as f64 + m as f64).norm());
                }
            }
        }
        best
    }

    /// Representative of `z` with lattice coordinates in `[0, 1)`.
    pub fn reduce(&self, z: Complex64) -> Complex64 {
        let n = (z.im / self.tau.im).floor();
        let w = z - self.tau * n;
        let m = w.re.floor();
        w - m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_lands_in_cell() {
        let e = EllipticCurve::new(Complex64::new(0.3, 1.2)).unwrap();
        let z = Complex64::new(-3.7, 5.1);
        let r = e.reduce(z);
        let b = r.im / e.tau().im;
        let a = r.re - b * e.tau().re;
        assert!((0.0..1.0).contains(&a) && (0.0..1.0).contains(&b));
        let d = (z - r) - e.tau() * ((z - r).im / e.tau().im).round();
        assert!((d.re - d.re.round()).abs() < 1e-12 && d.im.abs() < 1e-12);
    }

    #[test]
    fn lower_half_plane_rejected() {
        assert!(EllipticCurve::new(Complex64::new(0.0, -1.0)).is_err());
    }
}
