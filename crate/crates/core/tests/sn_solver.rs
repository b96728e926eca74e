use gravdec::mass::MassDistribution;
use gravdec::sn::{
    effective_potential, energy, evolve_split_step, gauge_rephase, ground_state, gravitational_potential,
    radial_shooting, residual_norm, solve_poisson, Grid, GroundStateMethod, GroundStateOptions, SNParams,
    SplitStepper, WaveField,
};
use gravdec::PhysicalConstants;
use num_complex::Complex64;

fn dimensionless_g(g: f64) -> SNParams {
    let mut c = PhysicalConstants::dimensionless();
    c.g = g;
    SNParams::single(1.0, c).unwrap()
}

fn cartesian_index(n: usize, i: usize, j: usize, k: usize) -> usize {
    (i * n + j) * n + k
}

#[test]
fn point_mass_far_field() {
    let n = 32;
    let grid = Grid::cartesian(n, 32.0).unwrap();
    let mut d = vec![0.0; grid.len()];
    let c = n / 2;
    d[cartesian_index(n, c, c, c)] = 1.0; // unit mass in a unit cell
    let phi = solve_poisson(&d, &grid, 1.0).unwrap();
    for (i, j, k) in [(c + 10, c, c), (c, c - 10, c), (c + 6, c + 8, c)] {
        let v = phi[cartesian_index(n, i, j, k)];
        assert!((v / -0.1 - 1.0).abs() < 0.01, "{v}");
    }
}

#[test]
fn uniform_sphere_center_potential() {
    let n = 64;
    let extent = 2.0;
    let grid = Grid::cartesian(n, extent).unwrap();
    let h = grid.spacing();
    let radius = 0.6;
    let sphere = MassDistribution::sphere(radius, 1.0, [0.0; 3]).unwrap();
    // Sample points are cell centers; the lattice starts half a cell below the first one.
    let lo = -(n as f64 / 2.0) * h - h / 2.0;
    let vox = sphere.voxelize_on([lo; 3], h, [n; 3]).unwrap();
    let phi = solve_poisson(&vox.densities, &grid, 1.0).unwrap();
    let mass = 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3);

    // Radial quadrature oracle: φ(0) = −4πG ∫₀^R ρ r dr (composite Simpson).
    let m = 1000;
    let dr = radius / m as f64;
    let simpson: f64 = (0..=m)
        .map(|i| {
            let w = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            w * i as f64 * dr
        })
        .sum::<f64>()
        * dr
        / 3.0;
    let oracle = -4.0 * std::f64::consts::PI * simpson;
    assert!((oracle / (-1.5 * mass / radius) - 1.0).abs() < 1e-12);

    let center = phi[cartesian_index(n, n / 2, n / 2, n / 2)];
    assert!((center / oracle - 1.0).abs() < 0.02, "{center} vs {oracle}");
}

#[test]
fn poisson_is_linear() {
    let grid = Grid::cartesian(16, 8.0).unwrap();
    let a: Vec<f64> = (0..grid.len()).map(|i| ((i * 7919) % 13) as f64).collect();
    let b: Vec<f64> = (0..grid.len()).map(|i| ((i * 104729) % 7) as f64 * 0.5).collect();
    let sum: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
    let pa = solve_poisson(&a, &grid, 1.0).unwrap();
    let pb = solve_poisson(&b, &grid, 1.0).unwrap();
    let ps = solve_poisson(&sum, &grid, 1.0).unwrap();
    let scale = ps.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for i in 0..ps.len() {
        assert!((ps[i] - pa[i] - pb[i]).abs() < 1e-12 * scale);
    }
}

#[test]
fn hartree_has_no_single_branch_potential() {
    let grid = Grid::radial(128, 20.0).unwrap();
    let f = WaveField::gaussian(grid, 1.0).unwrap();
    let hartree = SNParams::branches(vec![1.0], PhysicalConstants::dimensionless(), false).unwrap();
    let v = effective_potential(std::slice::from_ref(&f), &hartree, 0).unwrap();
    assert!(v.iter().all(|x| *x == 0.0));
    let sn = SNParams::dimensionless();
    let v = effective_potential(std::slice::from_ref(&f), &sn, 0).unwrap();
    assert!(v[0] < 0.0 && v.iter().all(|x| *x < 0.0));
    assert!(effective_potential(&[f], &sn, 1).is_err());
}

#[test]
fn self_term_equals_direct_convolution() {
    let n = 8;
    let grid = Grid::cartesian(n, 8.0).unwrap();
    let h = grid.spacing();
    let a = WaveField::gaussian(grid, 0.9).unwrap();
    let mut b = WaveField::from_fn(grid, |p| {
        let r2 = (p[0] - 1.0).powi(2) + p[1] * p[1] + (p[2] + 0.5).powi(2);
        Complex64::new((-r2 / 3.0).exp(), 0.2 * p[0])
    })
    .unwrap();
    b.normalize().unwrap();
    let masses = vec![1.3, 0.7];
    let fields = [a.clone(), b];
    let on = SNParams::branches(masses.clone(), PhysicalConstants::dimensionless(), true).unwrap();
    let off = SNParams::branches(masses.clone(), PhysicalConstants::dimensionless(), false).unwrap();
    let v_on = effective_potential(&fields, &on, 0).unwrap();
    let v_off = effective_potential(&fields, &off, 0).unwrap();

    // Direct O(n⁶) sum with the tabulated kernel: 1/(h|i−j|), coincident cell 2.3800773640/h.
    let pts = grid.points();
    let rho: Vec<f64> = a.density().iter().map(|d| masses[0] * d).collect();
    let scale = v_on.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (i, p) in pts.iter().enumerate() {
        let mut s = 0.0;
        for (q, r) in pts.iter().zip(&rho) {
            let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
            let k = if d == 0.0 { gravdec::sn::CELL_AVERAGED_INVERSE_DISTANCE / h } else { 1.0 / d };
            s += r * h * h * h * k;
        }
        let direct = -masses[0] * s;
        assert!((v_on[i] - v_off[i] - direct).abs() < 1e-12 * scale, "cell {i}: {:e}", (v_on[i] - v_off[i] - direct) / scale);
    }
}

#[test]
fn evolution_is_translation_covariant() {
    let grid = Grid::cartesian(32, 24.0).unwrap();
    let f = WaveField::gaussian(grid, 1.0).unwrap();
    let p = SNParams::dimensionless();
    let shift = [3, -2, 1];
    let a = evolve_split_step(&f, &p, 0.05, 20).unwrap().shifted(shift).unwrap();
    let b = evolve_split_step(&f.shifted(shift).unwrap(), &p, 0.05, 20).unwrap();
    let peak = a.values.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    // Compare away from the periodic boundary, where wrapped tails differ.
    let interior = 12.0 - 4.0 * grid.spacing();
    let diff = grid
        .points()
        .iter()
        .zip(a.values.iter().zip(&b.values))
        .filter(|(p, _)| p.iter().all(|x| x.abs() <= interior))
        .fold(0.0f64, |m, (_, (x, y))| m.max((x - y).norm()));
    assert!(diff < 1e-8 * peak, "{diff}");
}

#[test]
fn free_gaussian_spreads_by_closed_form() {
    let grid = Grid::radial(256, 40.0).unwrap();
    let sigma = 1.5;
    let f = WaveField::gaussian(grid, sigma).unwrap();
    let out = evolve_split_step(&f, &dimensionless_g(0.0), 0.02, 500).unwrap();
    let t = out.t;
    let expected = sigma * (1.0 + (t / (2.0 * sigma * sigma)).powi(2)).sqrt();
    assert!((out.width() / expected - 1.0).abs() < 0.005, "{} vs {expected}", out.width());
}

fn width_gap(n: usize, dt: f64) -> (f64, f64) {
    let grid = Grid::radial(n, 40.0).unwrap();
    let f = WaveField::gaussian(grid, 2.0).unwrap();
    let steps = (10.0 / dt).round() as usize;
    let bound = evolve_split_step(&f, &dimensionless_g(1.0), dt, steps).unwrap().width();
    let free = evolve_split_step(&f, &dimensionless_g(0.0), dt, steps).unwrap().width();
    (bound, free)
}

#[test]
fn self_gravity_inhibits_spreading() {
    let (bound, free) = width_gap(256, 0.05);
    let (bound_fine, free_fine) = width_gap(512, 0.025);
    let gap = free - bound;
    let discretization = (bound - bound_fine).abs().max((free - free_fine).abs());
    assert!(gap > 0.0, "bound {bound} free {free}");
    assert!(gap > 10.0 * discretization, "gap {gap} vs {discretization}");
}

fn max_energy_drift(dt: f64, steps: usize) -> f64 {
    let grid = Grid::radial(256, 40.0).unwrap();
    let mut fields = vec![WaveField::gaussian(grid, 1.5).unwrap()];
    let p = dimensionless_g(1.0);
    let mut st = SplitStepper::new(&fields, &p, dt).unwrap();
    let e0 = st.energy(&fields).total;
    let mut worst = 0.0f64;
    for _ in 0..steps {
        st.step(&mut fields).unwrap();
        worst = worst.max((st.energy(&fields).total - e0).abs());
    }
    worst
}

#[test]
fn energy_drift_is_second_order() {
    let coarse = max_energy_drift(0.04, 1000);
    let fine = max_energy_drift(0.02, 2000);
    let ratio = coarse / fine;
    assert!((ratio / 4.0 - 1.0).abs() < 0.2, "drifts {coarse:e} {fine:e} ratio {ratio}");
}

#[test]
fn ground_state_methods_agree() {
    let p = SNParams::dimensionless();
    let opts = GroundStateOptions::default();
    let it = ground_state(&p, GroundStateMethod::ImaginaryTime, &opts).unwrap();
    let sh = ground_state(&p, GroundStateMethod::RadialShooting, &opts).unwrap();
    assert!((it.energy / sh.energy - 1.0).abs() < 1e-4, "{} vs {}", it.energy, sh.energy);
    assert!(it.profile.distance(&sh.profile).unwrap() < 1e-3);
    assert!((it.energy + 0.1628).abs() < 1e-3);
    // virial: functional = E₀/3
    assert!((it.functional / it.energy - 1.0 / 3.0).abs() < 1e-6);
}

#[test]
fn ground_state_structure_and_tail() {
    let p = SNParams::dimensionless();
    let gs = ground_state(&p, GroundStateMethod::ImaginaryTime, &GroundStateOptions::default()).unwrap();
    let vals = &gs.profile.values;
    let sign = vals[0].re.signum();
    let peak = vals[0].norm();
    for w in vals.windows(2) {
        assert!(w[0].re * sign > 0.0 && w[0].im.abs() < 1e-12 * peak);
        if w[1].norm() > 1e-10 * peak {
            assert!(w[1].norm() < w[0].norm());
        }
    }
    let phi = gravitational_potential(std::slice::from_ref(&gs.profile), &p).unwrap();
    let r = gs.profile.grid.radii();
    let k = r.len() * 9 / 10;
    assert!((phi[k] * r[k] + 1.0).abs() < 0.01, "{}", phi[k] * r[k]);
}

#[test]
fn ground_state_energy_scales_as_mass_to_the_fifth() {
    let grid = Grid::radial(1024, 30.0).unwrap();
    let opts = GroundStateOptions { grid: Some(grid), ..Default::default() };
    let lambda = 1.5;
    let e1 = ground_state(&SNParams::dimensionless(), GroundStateMethod::ImaginaryTime, &opts).unwrap().energy;
    let heavy = SNParams::single(lambda, PhysicalConstants::dimensionless()).unwrap();
    let e2 = ground_state(&heavy, GroundStateMethod::ImaginaryTime, &opts).unwrap().energy;
    assert!((e2 / e1 / lambda.powi(5) - 1.0).abs() < 1e-3, "{}", e2 / e1);
}

#[test]
fn physical_units_follow_natural_scaling() {
    let sol = radial_shooting(20.0).unwrap();
    let m = 1e-25;
    let p = SNParams::single(m, PhysicalConstants::default()).unwrap();
    let gs = ground_state(&p, GroundStateMethod::RadialShooting, &GroundStateOptions::default()).unwrap();
    let c = PhysicalConstants::default();
    let expected = sol.energy * c.g * c.g * m.powi(5) / (c.hbar * c.hbar);
    assert!((gs.energy / expected - 1.0).abs() < 1e-12);
    assert!((gs.profile.norm_sqr() - 1.0).abs() < 1e-12);
}

#[test]
fn rephased_stationary_branches_solve_the_branch_equation() {
    // Two equal branches, self term kept: the symmetric stationary state.
    let p = SNParams::branches(vec![1.0, 1.0], PhysicalConstants::dimensionless(), true).unwrap();
    let opts = GroundStateOptions { grid: Some(Grid::radial(512, 12.0).unwrap()), ..Default::default() };
    let gs = ground_state(&p, GroundStateMethod::ImaginaryTime, &opts).unwrap();
    let mu = gs.energy;
    let cs = [0.3, -0.3];
    let (t0, dt) = (1.0, 1e-4);
    let at_time = |t: f64| -> Vec<WaveField> {
        cs.iter()
            .map(|c| {
                let ph = Complex64::from_polar(1.0, (c - mu) * t);
                WaveField { t, values: gs.profile.values.iter().map(|v| v * ph).collect(), ..gs.profile.clone() }
            })
            .collect()
    };
    let (before, at, after) = (at_time(t0 - dt), at_time(t0), at_time(t0 + dt));
    for s in 0..2 {
        // Before rephasing F/ψ_s = c_s, so ‖F‖ = |c_s|.
        let raw = residual_norm(&before, &at, &after, &p, s).unwrap();
        assert!((raw - 0.3).abs() < 1e-6, "{raw}");
    }
    let rb = gauge_rephase(&before, &cs, 1.0).unwrap();
    let ra = gauge_rephase(&at, &cs, 1.0).unwrap();
    let rf = gauge_rephase(&after, &cs, 1.0).unwrap();
    for s in 0..2 {
        let res = residual_norm(&rb, &ra, &rf, &p, s).unwrap();
        assert!(res < 1e-8, "branch {s}: {res:e}");
    }
    for i in 0..at[0].values.len() {
        let before = at[0].values[i] * at[1].values[i];
        let after = ra[0].values[i] * ra[1].values[i];
        assert!((before - after).norm() <= 1e-14 * before.norm() + 1e-300);
    }
    let e = energy(&ra, &p).unwrap();
    assert!(e.total < 0.0);
}
