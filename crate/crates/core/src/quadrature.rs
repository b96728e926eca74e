//! Gauss–Legendre rules and a globally adaptive cubature for hyper-rectangles.
//!
//! The cubature is the degree-7/degree-5 embedded rule pair of Genz and Malik
//! with bisection along the axis of largest fourth difference, the same scheme
//! used by `hcubature`. It needs `dim >= 2`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for j in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Fixed tensor-product Gauss–Legendre rule on `[a0,b0]×[a1,b1]`.
pub fn gauss_legendre_2d<F: FnMut(f64, f64) -> f64>(
    rule: &(Vec<f64>, Vec<f64>),
    (a0, b0): (f64, f64),
    (a1, b1): (f64, f64),
    mut f: F,
) -> f64 {
    let (x, w) = rule;
    let (h0, c0) = (0.5 * (b0 - a0), 0.5 * (b0 + a0));
    let (h1, c1) = (0.5 * (b1 - a1), 0.5 * (b1 + a1));
    let mut sum = 0.0;
    for (xi, wi) in x.iter().zip(w) {
        let u = c0 + h0 * xi;
        let mut inner = 0.0;
        for (xj, wj) in x.iter().zip(w) {
            inner += wj * f(u, c1 + h1 * xj);
        }
        sum += wi * inner;
    }
    sum * h0 * h1
}

struct Region {
    center: Vec<f64>,
    half: Vec<f64>,
    value: f64,
    error: f64,
    split_axis: usize,
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Region {}
impl PartialOrd for Region {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Region {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

struct GenzMalik {
    dim: usize,
    l2: f64,
    l4: f64,
    l5: f64,
    w: [f64; 5],
    we: [f64; 4],
}

impl GenzMalik {
    fn new(dim: usize) -> Self {
        let n = dim as f64;
        GenzMalik {
            dim,
            l2: (9.0f64 / 70.0).sqrt(),
            l4: (9.0f64 / 10.0).sqrt(),
            l5: (9.0f64 / 19.0).sqrt(),
            w: [
                (12824.0 - 9120.0 * n + 400.0 * n * n) / 19683.0,
                980.0 / 6561.0,
                (1820.0 - 400.0 * n) / 19683.0,
                200.0 / 19683.0,
                6859.0 / 19683.0 / 2f64.powi(dim as i32),
            ],
            we: [
                (729.0 - 950.0 * n + 50.0 * n * n) / 729.0,
                245.0 / 486.0,
                (265.0 - 100.0 * n) / 1458.0,
                25.0 / 729.0,
            ],
        }
    }

    fn points(&self) -> usize {
        let d = self.dim;
        1 + 4 * d + 2 * d * (d - 1) + (1usize << d)
    }

    fn apply<F: FnMut(&[f64]) -> f64>(&self, f: &mut F, center: Vec<f64>, half: Vec<f64>) -> Region {
        let d = self.dim;
        let mut p = center.clone();
        let f0 = f(&p);
        let mut sum2 = 0.0;
        let mut sum3 = 0.0;
        let mut diff = vec![0.0; d];
        let ratio = (self.l2 * self.l2) / (self.l4 * self.l4);
        for i in 0..d {
            p[i] = center[i] - self.l2 * half[i];
            let a = f(&p);
            p[i] = center[i] + self.l2 * half[i];
            let b = f(&p);
            p[i] = center[i] - self.l4 * half[i];
            let c = f(&p);
            p[i] = center[i] + self.l4 * half[i];
            let e = f(&p);
            p[i] = center[i];
            sum2 += a + b;
            sum3 += c + e;
            diff[i] = (a + b - 2.0 * f0 - ratio * (c + e - 2.0 * f0)).abs();
        }
        let mut sum4 = 0.0;
        for i in 0..d {
            for j in (i + 1)..d {
                for (si, sj) in [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)] {
                    p[i] = center[i] + si * self.l4 * half[i];
                    p[j] = center[j] + sj * self.l4 * half[j];
                    sum4 += f(&p);
                }
                p[i] = center[i];
                p[j] = center[j];
            }
        }
        let mut sum5 = 0.0;
        for mask in 0..(1usize << d) {
            for i in 0..d {
                let s = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
                p[i] = center[i] + s * self.l5 * half[i];
            }
            sum5 += f(&p);
        }
        let vol: f64 = half.iter().map(|h| 2.0 * h).product();
        let r7 = vol * (self.w[0] * f0 + self.w[1] * sum2 + self.w[2] * sum3 + self.w[3] * sum4 + self.w[4] * sum5);
        let r5 = vol * (self.we[0] * f0 + self.we[1] * sum2 + self.we[2] * sum3 + self.we[3] * sum4);
        let mut split_axis = 0;
        for i in 1..d {
            // ties go to the widest side
            if diff[i] > diff[split_axis] * (1.0 + 1e-10)
                || ((diff[i] - diff[split_axis]).abs() <= 1e-10 * diff[split_axis].abs() && half[i] > half[split_axis])
            {
                split_axis = i;
            }
        }
        Region {
            center,
            half,
            value: r7,
            error: (r7 - r5).abs(),
            split_axis,
        }
    }
}

/// Globally adaptive cubature of `f` over the box `[lo, hi]`.
///
/// Stops once the summed error estimate is below `max(abs_tol, rel_tol·|I|)`;
/// exceeding `max_evals` returns [`Error::NonConvergence`] with the best
/// estimate so far.
pub fn cubature<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    lo: &[f64],
    hi: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_evals: usize,
) -> Result<Estimate> {
    let dim = lo.len();
    if dim < 2 || hi.len() != dim {
        return Err(Error::invalid("cubature needs matching bounds of dimension >= 2"));
    }
    let rule = GenzMalik::new(dim);
    let center: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let half: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (b - a)).collect();
    let first = rule.apply(&mut f, center, half);
    let mut evals = rule.points();
    let mut value = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    loop {
        if error <= abs_tol.max(rel_tol * value.abs()) {
            // re-sum to shed accumulated rounding in the running totals
            let value: f64 = heap.iter().map(|r| r.value).sum();
            let error: f64 = heap.iter().map(|r| r.error).sum();
            return Ok(Estimate { value, error, evaluations: evals });
        }
        if evals + 2 * rule.points() > max_evals {
            return Err(Error::NonConvergence {
                what: "adaptive cubature".into(),
                estimate: value,
                error_bound: error,
            });
        }
        let worst = heap.pop().expect("heap holds at least one region");
        let ax = worst.split_axis;
        let mut half = worst.half.clone();
        half[ax] *= 0.5;
        let mut c1 = worst.center.clone();
        c1[ax] -= half[ax];
        let mut c2 = worst.center;
        c2[ax] += half[ax];
        let r1 = rule.apply(&mut f, c1, half.clone());
        let r2 = rule.apply(&mut f, c2, half);
        evals += 2 * rule.points();
        value += r1.value + r2.value - worst.value;
        error += r1.error + r2.error - worst.error;
        heap.push(r1);
        heap.push(r2);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let (x, w) = gauss_legendre(7);
        let s: f64 = w.iter().sum();
        assert_relative_eq!(s, 2.0, epsilon = 1e-14);
        // degree 12 monomial
        let m: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert_relative_eq!(m, 2.0 / 13.0, epsilon = 1e-14);
    }

    #[test]
    fn cubature_on_smooth_function() {
        let est = cubature(|p| (p[0] + 2.0 * p[1]).exp(), &[0.0, 0.0], &[1.0, 1.0], 0.0, 1e-12, 1_000_000).unwrap();
        let exact = (1f64.exp() - 1.0) * (2f64.exp() - 1.0) / 2.0;
        assert_relative_eq!(est.value, exact, max_relative = 1e-11);
    }

    #[test]
    fn cubature_with_corner_singularity() {
        // ∫∫_[0,1]² 1/ρ = 2 asinh(1)
        let est = cubature(|p| 1.0 / (p[0] * p[0] + p[1] * p[1]).sqrt(), &[0.0, 0.0], &[1.0, 1.0], 1e-7, 0.0, 5_000_000)
            .unwrap();
        assert_relative_eq!(est.value, 2.0 * 1f64.asinh(), epsilon = 1e-6);
    }

    #[test]
    fn four_dimensional_polynomial() {
        let est = cubature(|p| p.iter().map(|x| x * x).sum(), &[0.0; 4], &[1.0; 4], 0.0, 1e-12, 100_000).unwrap();
        assert_relative_eq!(est.value, 4.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn budget_exhaustion_reports_estimate() {
        let err = cubature(|p| 1.0 / (p[0] * p[0] + p[1] * p[1]).sqrt(), &[0.0, 0.0], &[1.0, 1.0], 1e-14, 0.0, 2_000)
            .unwrap_err();
        match err {
            Error::NonConvergence { estimate, error_bound, .. } => {
                assert!((estimate - 2.0 * 1f64.asinh()).abs() < 0.1);
                assert!(error_bound > 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
