use std::f64::consts::PI;
use std::time::Instant;

use gravdec::dp::{self, Convention, FullMethod, IntegralMethod};
use gravdec::mass::{build_displaced_cube, Axis, MassDistribution, SuperposedPair};
use gravdec::PhysicalConstants;

/// Uniform-sphere Coulomb integral ∬ρρ′/|r−r′| by radial shells:
/// each shell dm at radius r sees the potential of the mass inside it (M(r)/r)
/// counted twice (pairs in both orders).
fn sphere_self_integral_radial(mass: f64, radius: f64, n: usize) -> f64 {
    let rho = mass / (4.0 / 3.0 * PI * radius.powi(3));
    let h = radius / n as f64;
    let mut total = 0.0;
    // Simpson's rule on r ↦ 2 · M(r)/r · 4πr²ρ
    for i in 0..=n {
        let r = i as f64 * h;
        let inner = rho * 4.0 / 3.0 * PI * r.powi(3);
        let f = if r == 0.0 { 0.0 } else { 2.0 * inner / r * 4.0 * PI * r * r * rho };
        let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        total += w * f;
    }
    total * h / 3.0
}

#[test]
fn radial_oracle_reproduces_closed_form() {
    // (6/5) m²/R, i.e. twice the textbook self-energy (3/5) G m²/R
    let v = sphere_self_integral_radial(1.0, 1.0, 2000);
    assert!((v - 1.2).abs() < 1e-10, "{v}");
}

#[test]
fn separated_spheres_against_shell_oracle() {
    let pc = PhysicalConstants::dimensionless();
    let r = 1.0;
    let m = 1.0;
    let rho = m / (4.0 / 3.0 * PI);
    let dist = 8.0;
    let a = MassDistribution::sphere(r, rho, [0.0; 3]).unwrap();
    let pair = SuperposedPair::new(a.clone(), a.translated([dist, 0.0, 0.0])).unwrap();
    let expected = 2.0 * sphere_self_integral_radial(m, r, 2000) - 2.0 * m * m / dist;
    let got = dp::delta_full(&pair, FullMethod::Voxel { cells_per_side: 24 }, &pc, Convention::Penrose).unwrap();
    let rel = (got.delta - expected).abs() / expected;
    assert!(rel < 0.02, "voxel {} vs shells {expected} (rel {rel})", got.delta);
    let mc = dp::delta_full(&pair, FullMethod::Mc { samples: 400_000, seed: 5 }, &pc, Convention::Penrose).unwrap();
    assert!((mc.delta - expected).abs() < 4.0 * mc.stderr, "mc {} ± {} vs {expected}", mc.delta, mc.stderr);
}

#[test]
fn quadruple_form() {
    let t = Instant::now();
    let est = dp::integral_i(IntegralMethod::Quadruple).unwrap();
    eprintln!("quadruple I = {:.10} ± {:.1e} ({} outer evals, {:?})", est.value, est.error, est.evaluations, t.elapsed());
    assert!((est.value - 2.0 * PI / 3.0).abs() < 1e-3);
}

#[test]
fn voxel_sum_converges_toward_expansion() {
    let pc = PhysicalConstants::default();
    let s: f64 = 1e-5;
    let rho = 5e-12 / s.powi(3);
    let d = 1e-2 * s;
    let pair = build_displaced_cube(s, rho, d, Axis::Z).unwrap();
    let q = dp::delta_cube_quadratic(s, rho, d, &pc, Convention::Penrose).unwrap().delta;
    let voxel = |n| dp::delta_full(&pair, FullMethod::Voxel { cells_per_side: n }, &pc, Convention::Penrose).unwrap().delta;
    let (v16, v32, v64) = (voxel(16), voxel(32), voxel(64));
    assert!((v64 / q - 1.0).abs() < 0.02, "{}", v64 / q);
    // first-order approach from below
    assert!(v16 < v32 && v32 < v64 && v64 < q);
    let ratio = (q - v32) / (q - v64);
    assert!((1.6..2.4).contains(&ratio), "{ratio}");
}

#[test]
fn mc_is_seed_deterministic_and_unbiased_on_separated_cubes() {
    let pc = PhysicalConstants::default();
    let s: f64 = 1e-5;
    let rho = 5e-12 / s.powi(3);
    let pair = build_displaced_cube(s, rho, 0.3 * s, Axis::X).unwrap();
    let run = |seed| dp::delta_full(&pair, FullMethod::Mc { samples: 200_000, seed }, &pc, Convention::Penrose).unwrap();
    let (a, b) = (run(11), run(11));
    assert_eq!(a.delta, b.delta);
    assert_eq!(a.stderr, b.stderr);
    let v = dp::delta_full(&pair, FullMethod::Voxel { cells_per_side: 40 }, &pc, Convention::Penrose).unwrap();
    // the voxel sum at this resolution is within ~1% of the continuum value
    assert!((a.delta - v.delta).abs() < 3.0 * a.stderr + 0.01 * v.delta, "{} {} {}", a.delta, a.stderr, v.delta);
}
