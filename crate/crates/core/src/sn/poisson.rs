//! Isolated-boundary Poisson solves, ∇²φ = 4πG ρ with φ → −GM/r.
//!
//! Cartesian grids use a zero-padded (2n)³ convolution with the sampled
//! Green's function 1/|r|; the coincident cell uses the cell average of 1/r.
//! Radial grids solve (rφ)'' = 4πG rρ with a sine series plus the exterior
//! boundary value φ(r_max) = −GM/r_max.

use num_complex::Complex64;

use super::spectral::{Dst1, Fft3};
use super::Grid;
use crate::error::{Error, Result};

/// ∫ 1/|r| over the unit cube centered on the origin, 3 ln(2+√3) − π/2.
pub const CELL_AVERAGED_INVERSE_DISTANCE: f64 = 2.380_077_363_979_553;

enum Kind {
    Radial { dst: Dst1, n: usize, r_max: f64 },
    Cartesian { n: usize, h: f64, fft: Fft3, kernel_hat: Vec<Complex64> },
}

/// Poisson solver with the transform plans and kernel spectrum cached for one grid.
pub struct PoissonSolver {
    kind: Kind,
}

impl PoissonSolver {
    pub fn new(grid: &Grid) -> Self {
        let kind = match *grid {
            Grid::Radial { n, r_max } => Kind::Radial { dst: Dst1::new(n), n, r_max },
            Grid::Cartesian { n, extent } => {
                let m = 2 * n;
                let fft = Fft3::new(m);
                let wrap = |i: usize| if i <= n { i as f64 } else { i as f64 - m as f64 };
                let mut kernel = Vec::with_capacity(m * m * m);
                for i in 0..m {
                    for j in 0..m {
                        for k in 0..m {
                            let d = (wrap(i).powi(2) + wrap(j).powi(2) + wrap(k).powi(2)).sqrt();
                            let v = if d == 0.0 { CELL_AVERAGED_INVERSE_DISTANCE } else { 1.0 / d };
                            kernel.push(Complex64::new(v, 0.0));
                        }
                    }
                }
                fft.process(&mut kernel, false);
                Kind::Cartesian { n, h: extent / n as f64, fft, kernel_hat: kernel }
            }
        };
        PoissonSolver { kind }
    }

    /// Gravitational potential per unit mass of the mass density `density`.
    pub fn solve(&self, density: &[f64], g: f64) -> Result<Vec<f64>> {
        if let Some(bad) = density.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::invalid(format!("density must be finite and >= 0, found {bad}")));
        }
        match &self.kind {
            Kind::Radial { dst, n, r_max } => {
                if density.len() != n - 1 {
                    return Err(Error::invalid("density length does not match the grid"));
                }
                Ok(radial(dst, *n, *r_max, density, g))
            }
            Kind::Cartesian { n, h, fft, kernel_hat } => {
                if density.len() != n * n * n {
                    return Err(Error::invalid("density length does not match the grid"));
                }
                Ok(cartesian(*n, *h, fft, kernel_hat, density, g))
            }
        }
    }
}

fn radial(dst: &Dst1, n: usize, r_max: f64, density: &[f64], g: f64) -> Vec<f64> {
    let h = r_max / n as f64;
    let pi = std::f64::consts::PI;
    let r = |j: usize| (j + 1) as f64 * h;
    let mass: f64 = density.iter().enumerate().map(|(j, d)| 4.0 * pi * r(j) * r(j) * d * h).sum();
    let mut s: Vec<Complex64> = density
        .iter()
        .enumerate()
        .map(|(j, d)| Complex64::new(4.0 * pi * g * r(j) * d, 0.0))
        .collect();
    dst.transform(&mut s);
    for (k, v) in s.iter_mut().enumerate() {
        let kk = pi * (k + 1) as f64 / r_max;
        *v *= -2.0 / (n as f64 * kk * kk);
    }
    dst.transform(&mut s);
    s.iter()
        .enumerate()
        .map(|(j, w)| (w.re - g * mass * r(j) / r_max) / r(j))
        .collect()
}

fn cartesian(n: usize, h: f64, fft: &Fft3, kernel_hat: &[Complex64], density: &[f64], g: f64) -> Vec<f64> {
    let m = 2 * n;
    let mut buf = vec![Complex64::new(0.0, 0.0); m * m * m];
    for i in 0..n {
        for j in 0..n {
            let src = (i * n + j) * n;
            let dst = (i * m + j) * m;
            for k in 0..n {
                buf[dst + k] = Complex64::new(density[src + k], 0.0);
            }
        }
    }
    fft.process(&mut buf, false);
    for (b, k) in buf.iter_mut().zip(kernel_hat) {
        *b *= k;
    }
    fft.process(&mut buf, true);
    // Σ_j ρ_j h³ · 1/(h |i−j|), plus the 1/(m³) of the unnormalized inverse.
    let scale = -g * h * h / (m * m * m) as f64;
    let mut phi = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            let src = (i * m + j) * m;
            let dst = (i * n + j) * n;
            for k in 0..n {
                phi[dst + k] = buf[src + k].re * scale;
            }
        }
    }
    phi
}

/// One-shot solve; see [`PoissonSolver`] to reuse plans across calls.
pub fn solve_poisson(density: &[f64], grid: &Grid, g: f64) -> Result<Vec<f64>> {
    PoissonSolver::new(grid).solve(density, g)
}
