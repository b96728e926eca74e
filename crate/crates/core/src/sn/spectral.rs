//! FFT-backed transforms on the two grid families.
//!
//! The radial grid stores ψ(r_j) at r_j = j·h, j = 1..n−1. Writing u = rψ,
//! the Laplacian becomes u''/r and u vanishes at both ends, so a type-I sine
//! transform (one complex FFT of length 2n) diagonalizes it.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::Grid;

pub(crate) struct Dst1 {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl Dst1 {
    pub fn new(n: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(2 * n);
        Dst1 { n, fft }
    }

    /// X_k = Σ_{j=1}^{n−1} x_j sin(π j k / n), k = 1..n−1, in place.
    /// Applying it twice returns (n/2)·x.
    pub fn transform(&self, x: &mut [Complex64]) {
        let n = self.n;
        debug_assert_eq!(x.len(), n - 1);
        let mut buf = vec![Complex64::new(0.0, 0.0); 2 * n];
        for (j, v) in x.iter().enumerate() {
            buf[j + 1] = *v;
            buf[2 * n - j - 1] = -*v;
        }
        self.fft.process(&mut buf);
        let half_i = Complex64::new(0.0, 0.5);
        for (k, v) in x.iter_mut().enumerate() {
            *v = buf[k + 1] * half_i;
        }
    }
}

/// In-place 3-D FFT on an m³ array stored with the last index fastest.
pub(crate) struct Fft3 {
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft3 {
    pub fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft3 { m, forward: planner.plan_fft_forward(m), inverse: planner.plan_fft_inverse(m) }
    }

    /// Unnormalized transform; the inverse carries no 1/m³ factor.
    pub fn process(&self, data: &mut Vec<Complex64>, inverse: bool) {
        let m = self.m;
        let fft = if inverse { &self.inverse } else { &self.forward };
        let mut rotated = vec![Complex64::new(0.0, 0.0); data.len()];
        // FFT along the fastest axis, then rotate (i, j, k) -> (j, k, i);
        // three passes visit every axis and restore the layout.
        for _ in 0..3 {
            fft.process(data);
            for i in 0..m {
                for j in 0..m {
                    let src = (i * m + j) * m;
                    for k in 0..m {
                        rotated[(j * m + k) * m + i] = data[src + k];
                    }
                }
            }
            std::mem::swap(data, &mut rotated);
        }
    }
}

enum Kind {
    Radial { dst: Dst1, r: Vec<f64>, k2: Vec<f64> },
    Cartesian { fft: Fft3, k2: Vec<f64> },
}

/// Applies functions of the Laplacian eigenvalue k² on a grid.
pub(crate) struct Spectral {
    kind: Kind,
}

impl Spectral {
    pub fn new(grid: &Grid) -> Self {
        let kind = match *grid {
            Grid::Radial { n, r_max } => {
                let h = r_max / n as f64;
                let r = (1..n).map(|j| j as f64 * h).collect();
                let k2 = (1..n).map(|k| (std::f64::consts::PI * k as f64 / r_max).powi(2)).collect();
                Kind::Radial { dst: Dst1::new(n), r, k2 }
            }
            Grid::Cartesian { n, extent } => {
                let dk = 2.0 * std::f64::consts::PI / extent;
                let freq: Vec<f64> = (0..n)
                    .map(|i| if i < n / 2 { i as f64 } else { i as f64 - n as f64 } * dk)
                    .collect();
                let mut k2 = Vec::with_capacity(n * n * n);
                for a in &freq {
                    for b in &freq {
                        for c in &freq {
                            k2.push(a * a + b * b + c * c);
                        }
                    }
                }
                Kind::Cartesian { fft: Fft3::new(n), k2 }
            }
        };
        Spectral { kind }
    }

    /// ψ ← f(−∇²) ψ.
    pub fn apply(&self, psi: &mut Vec<Complex64>, f: impl Fn(f64) -> Complex64) {
        match &self.kind {
            Kind::Radial { dst, r, k2 } => {
                for (v, r) in psi.iter_mut().zip(r) {
                    *v *= r;
                }
                dst.transform(psi);
                let scale = 2.0 / (r.len() + 1) as f64;
                for (v, k2) in psi.iter_mut().zip(k2) {
                    *v *= f(*k2) * scale;
                }
                dst.transform(psi);
                for (v, r) in psi.iter_mut().zip(r) {
                    *v /= r;
                }
            }
            Kind::Cartesian { fft, k2 } => {
                fft.process(psi, false);
                let scale = 1.0 / psi.len() as f64;
                for (v, k2) in psi.iter_mut().zip(k2) {
                    *v *= f(*k2) * scale;
                }
                fft.process(psi, true);
            }
        }
    }

    pub fn apply_real(&self, psi: &mut Vec<Complex64>, f: impl Fn(f64) -> f64) {
        self.apply(psi, |k2| Complex64::new(f(k2), 0.0));
    }
}
