//! The dimensionless surface-layer integral
//!
//! I = ∫₀¹dx ∫₀¹dy ∫₀¹dx′ ∫₀¹dy′ [ 1/ρ − 1/√(ρ²+1) ],  ρ² = (x−x′)² + (y−y′)²,
//!
//! evaluated either in its original four-dimensional form or after the change
//! to sum and difference variables, where it becomes
//!
//! I = 4 ∫₀¹dηx ∫₀¹dηy (1−ηx)(1−ηy) [ 1/√(ηx²+ηy²) − 1/√(ηx²+ηy²+1) ].
//!
//! Both are 2π/3.

use crate::error::Result;
use crate::quadrature::{cubature, gauss_legendre, gauss_legendre_2d, Estimate};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegralMethod {
    /// Four-dimensional form, nested: adaptive outer cubature, singular inner
    /// integral split at the singular point.
    Quadruple,
    /// Reduced two-dimensional form.
    Double,
}

/// Integrand of the reduced form without the (1−ηx)(1−ηy) weight.
pub fn reduced_kernel(eta_x: f64, eta_y: f64) -> f64 {
    let r2 = eta_x * eta_x + eta_y * eta_y;
    1.0 / r2.sqrt() - 1.0 / (r2 + 1.0).sqrt()
}

pub fn integral_i(method: IntegralMethod) -> Result<Estimate> {
    match method {
        IntegralMethod::Double => double_form(),
        IntegralMethod::Quadruple => quadruple_form(),
    }
}

fn double_form() -> Result<Estimate> {
    // The integrand is symmetric under ηx ↔ ηy, so integrate the triangle
    // ηy ≤ ηx twice. There ηy = ηx·t turns the 1/ρ corner singularity into a
    // smooth factor: ηx · kernel(ηx, ηx t) = 1/√(1+t²) − ηx/√(ηx²(1+t²)+1).
    let f = |p: &[f64]| {
        let (x, t) = (p[0], p[1]);
        let s = 1.0 + t * t;
        let k = 1.0 / s.sqrt() - x / (x * x * s + 1.0).sqrt();
        (1.0 - x) * (1.0 - x * t) * k
    };
    let est = cubature(f, &[0.0, 0.0], &[1.0, 1.0], 1e-13, 0.0, 2_000_000)?;
    Ok(Estimate {
        value: 8.0 * est.value,
        error: 8.0 * est.error,
        evaluations: est.evaluations,
    })
}

/// ∫₀ᴬ du ∫₀ᴮ dv k(u, v) for a kernel with a 1/ρ singularity at the origin.
fn corner_rectangle(rule: &(Vec<f64>, Vec<f64>), a: f64, b: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        return 0.0;
    }
    let (short, long) = if a <= b { (a, b) } else { (b, a) };
    // Square [0,short]²: two triangles, each mapped with v = u·s (Duffy).
    // u·k(u, u s) = 1/√(1+s²) − u/√(u²(1+s²)+1) is smooth.
    let tri = gauss_legendre_2d(rule, (0.0, short), (0.0, 1.0), |u, s| {
        let q = 1.0 + s * s;
        1.0 / q.sqrt() - u / (u * u * q + 1.0).sqrt()
    });
    let mut total = 2.0 * tri;
    // Remaining strip [0,short]×[short,long], graded geometrically away from
    // the singular corner. k is symmetric so the orientation does not matter.
    let mut lo = short;
    while lo < long {
        let hi = (2.0 * lo).min(long);
        total += gauss_legendre_2d(rule, (0.0, short), (lo, hi), reduced_kernel);
        lo = hi;
    }
    total
}

fn quadruple_form() -> Result<Estimate> {
    let rule = gauss_legendre(16);
    // Inner integral over (x′, y′) for fixed (x, y): split the unit square
    // into the four rectangles that meet at the singular point.
    let inner = |p: &[f64]| {
        let (x, y) = (p[0], p[1]);
        corner_rectangle(&rule, 1.0 - x, 1.0 - y)
            + corner_rectangle(&rule, x, 1.0 - y)
            + corner_rectangle(&rule, 1.0 - x, y)
            + corner_rectangle(&rule, x, y)
    };
    cubature(inner, &[0.0, 0.0], &[1.0, 1.0], 1e-8, 0.0, 400_000)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn kernel_at_unit_corner() {
        assert_relative_eq!(reduced_kernel(1.0, 1.0), 0.5f64.sqrt() - (1.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(reduced_kernel(1.0, 1.0), 0.12976, epsilon = 1e-5);
    }

    #[test]
    fn double_form_is_two_pi_over_three() {
        let est = integral_i(IntegralMethod::Double).unwrap();
        assert!((est.value - 2.0 * PI / 3.0).abs() < 1e-6, "{est:?}");
    }

    #[test]
    fn corner_rectangle_singular_part() {
        // ∫∫ 1/ρ over [0,a]×[0,b] = a asinh(b/a) + b asinh(a/b); the smooth
        // part is checked against a brute-force tensor rule.
        let rule = gauss_legendre(16);
        let fine = gauss_legendre(64);
        for (a, b) in [(1.0f64, 1.0f64), (0.3, 0.9), (1e-4, 0.7), (0.8, 1e-6)] {
            let exact_sing: f64 = a * (b / a).asinh() + b * (a / b).asinh();
            let smooth = gauss_legendre_2d(&fine, (0.0, a), (0.0, b), |u, v| 1.0 / (u * u + v * v + 1.0).sqrt());
            let got = corner_rectangle(&rule, a, b);
            assert_relative_eq!(got, exact_sing - smooth, max_relative = 1e-12);
        }
    }
}
