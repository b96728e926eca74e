//! End-to-end acceptance checks, shared by the `acceptance` test target and
//! the `selftest` command. Each check returns a pass/fail outcome with the
//! measured numbers; nothing here panics on a failed check.

use std::f64::consts::PI;
use std::fmt;
use std::time::{Duration, Instant};

use num_complex::Complex64;

use crate::com::{run_decoupling, InterferenceScenario, PairPotential};
use crate::decoherence::{ensemble_offdiagonal, fit_decay_rate, sample_ensemble, NoiseSpec};
use crate::dp::{self, integral_i, CubeSetup, Convention, FullMethod, IntegralMethod};
use crate::error::Result;
use crate::mass::build_displaced_cube;
use crate::sn::{
    effective_potential, evolve_split_step, ground_state, solve_poisson, Grid, GroundStateMethod, GroundStateOptions,
    SNParams, SplitStepper, WaveField,
};
use crate::units::PhysicalConstants;

pub const INTEGRAL_DOUBLE_TOL: f64 = 1e-6;
pub const INTEGRAL_QUADRUPLE_TOL: f64 = 1e-3;
pub const INTEGRAL_TIME_LIMIT: Duration = Duration::from_secs(60);
pub const MIRROR_TAU: f64 = 1.5e9;
pub const MIRROR_DELTA_HBAR_C_PER_CM: f64 = 2.2e-20;
pub const MIRROR_REL_TOL: f64 = 0.03;
pub const FORM_CONSISTENCY_TOL: f64 = 1e-12;
pub const VOXEL_CELLS: usize = 64;
pub const VOXEL_VS_QUADRATIC_TOL: f64 = 0.02;
pub const EXPONENT_TOL: f64 = 0.05;
pub const MC_SAMPLES: usize = 1_000_000;
pub const MC_SEED: u64 = 2006;
/// Voxel reference for the Monte Carlo comparison; at 64 cells the
/// discretization bias alone is several Monte Carlo standard errors.
pub const MC_REFERENCE_CELLS: usize = 128;
pub const MC_SIGMAS: f64 = 3.0;
pub const TRAJECTORIES: usize = 10_000;
pub const RATE_TOL: f64 = 0.05;
pub const POPULATION_TOL: f64 = 1e-12;
pub const GROUND_ENERGY_TOL: f64 = 1e-4;
pub const MASS_SCALING_TOL: f64 = 1e-3;
pub const NORM_STEP_TOL: f64 = 1e-10;
pub const DRIFT_RATIO: f64 = 4.0;
pub const DRIFT_RATIO_TOL: f64 = 0.2;
pub const SPREADING_TOL: f64 = 0.005;
pub const ROUND_OFF: f64 = 1e-12;
pub const COM_L1_TOL: f64 = 1e-6;
pub const VISIBILITY_TOL: f64 = 1e-4;
pub const RELATIVE_POWER: f64 = 1e-2;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {} [{}] {}: {} ({:.1} s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

type Check = fn() -> Result<(bool, String)>;

pub const CRITERIA: [(u8, &str, Check); 9] = [
    (1, "dimensionless integral I", integral),
    (2, "mirror headline numbers", mirror),
    (3, "expansion vs full integration", expansion_vs_full),
    (4, "Monte Carlo vs voxel", mc_vs_voxel),
    (5, "stochastic vs master equation", stochastic_vs_master),
    (6, "SN ground state", sn_ground_state),
    (7, "SN evolution", sn_evolution),
    (8, "Hartree vs SN self term", hartree_contrast),
    (9, "center-of-mass decoupling", com_decoupling),
];

pub fn run(id: u8) -> Option<Outcome> {
    let (id, title, check) = CRITERIA.iter().find(|c| c.0 == id)?;
    let start = Instant::now();
    let (passed, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
    Some(Outcome { id: *id, title, passed, detail, elapsed: start.elapsed() })
}

pub fn run_all() -> Vec<Outcome> {
    CRITERIA.iter().filter_map(|c| run(c.0)).collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn integral() -> Result<(bool, String)> {
    let exact = 2.0 * PI / 3.0;
    let t = Instant::now();
    let double = integral_i(IntegralMethod::Double)?.value;
    let t_double = t.elapsed();
    let t = Instant::now();
    let quad = integral_i(IntegralMethod::Quadruple)?.value;
    let t_quad = t.elapsed();
    let ok = (double - exact).abs() < INTEGRAL_DOUBLE_TOL
        && (quad - exact).abs() < INTEGRAL_QUADRUPLE_TOL
        && t_double < INTEGRAL_TIME_LIMIT
        && t_quad < INTEGRAL_TIME_LIMIT;
    Ok((
        ok,
        format!(
            "double {double:.10} (err {:.1e}, {:.2} s), quadruple {quad:.10} (err {:.1e}, {:.2} s)",
            (double - exact).abs(),
            t_double.as_secs_f64(),
            (quad - exact).abs(),
            t_quad.as_secs_f64()
        ),
    ))
}

fn mirror() -> Result<(bool, String)> {
    let pc = PhysicalConstants::default();
    let r = CubeSetup::mirror().quadratic(&pc, Convention::Penrose)?;
    let consistency = (r.tau_d * r.delta / pc.hbar - 1.0)
        .abs()
        .max((r.delta_hbar_c_per_cm * pc.hbar_c_per_cm() / r.delta - 1.0).abs());
    let ok = rel(r.tau_d, MIRROR_TAU) < MIRROR_REL_TOL
        && rel(r.delta_hbar_c_per_cm, MIRROR_DELTA_HBAR_C_PER_CM) < MIRROR_REL_TOL
        && consistency < FORM_CONSISTENCY_TOL;
    Ok((
        ok,
        format!(
            "tau_d {:.4e} s, Delta {:.4e} hbar c/cm ({:.4e} J), form consistency {consistency:.1e}",
            r.tau_d, r.delta_hbar_c_per_cm, r.delta
        ),
    ))
}

fn expansion_vs_full() -> Result<(bool, String)> {
    let pc = PhysicalConstants::default();
    let base = CubeSetup::mirror();
    let rho = base.density();
    let s = base.side;
    let voxel = |ratio: f64| -> Result<f64> {
        let pair = build_displaced_cube(s, rho, ratio * s, base.axis)?;
        Ok(dp::delta_full(&pair, FullMethod::Voxel { cells_per_side: VOXEL_CELLS }, &pc, Convention::Penrose)?.delta)
    };
    let q = dp::delta_cube_quadratic(s, rho, 1e-2 * s, &pc, Convention::Penrose)?.delta;
    let v = voxel(1e-2)?;
    let ratios: Vec<f64> = (0..5).map(|i| 10f64.powf(-3.0 + i as f64 / 4.0)).collect();
    let mut pts = Vec::new();
    for r in &ratios {
        pts.push((r.ln(), voxel(*r)?.ln()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let ok = rel(v, q) < VOXEL_VS_QUADRATIC_TOL && (slope - 2.0).abs() < EXPONENT_TOL;
    Ok((ok, format!("voxel/quadratic at d/S=1e-2: {:.5}, fitted exponent {slope:.4}", v / q)))
}

fn mc_vs_voxel() -> Result<(bool, String)> {
    let pc = PhysicalConstants::default();
    let pair = CubeSetup::mirror().pair()?;
    let mc = dp::delta_full(&pair, FullMethod::Mc { samples: MC_SAMPLES, seed: MC_SEED }, &pc, Convention::Penrose)?;
    let vx = dp::delta_full(&pair, FullMethod::Voxel { cells_per_side: MC_REFERENCE_CELLS }, &pc, Convention::Penrose)?;
    let z = (mc.delta - vx.delta).abs() / mc.stderr;
    Ok((
        z < MC_SIGMAS,
        format!(
            "mc {:.5e} +- {:.2e} J, voxel(n={MC_REFERENCE_CELLS}) {:.5e} J, |diff| = {z:.2} stderr",
            mc.delta, mc.stderr, vx.delta
        ),
    ))
}

fn stochastic_vs_master() -> Result<(bool, String)> {
    let tau = 1.0;
    let spec = NoiseSpec { tau_d: tau, dt: tau / 100.0, seed: 7 };
    let a = Complex64::new(0.5f64.sqrt(), 0.0);
    let psi0 = [a, a];
    let ens = sample_ensemble(&spec, psi0, tau, TRAJECTORIES)?;
    let worst_population = ens
        .iter()
        .flat_map(|tr| tr.states.iter())
        .map(|s| (s[0].norm_sqr() - psi0[0].norm_sqr()).abs().max((s[1].norm_sqr() - psi0[1].norm_sqr()).abs()))
        .fold(0.0f64, f64::max);
    let rate = fit_decay_rate(&ensemble_offdiagonal(&ens)?)?;
    let ok = rel(rate, 1.0 / tau) < RATE_TOL && worst_population < POPULATION_TOL;
    Ok((
        ok,
        format!("fitted rate {rate:.4} vs 1/tau_d = {:.4}, max population change {worst_population:.1e}", 1.0 / tau),
    ))
}

fn sn_ground_state() -> Result<(bool, String)> {
    let opts = GroundStateOptions::default();
    let p = SNParams::dimensionless();
    let it = ground_state(&p, GroundStateMethod::ImaginaryTime, &opts)?;
    let sh = ground_state(&p, GroundStateMethod::RadialShooting, &opts)?;
    let lambda = 1.5;
    let fixed = GroundStateOptions { grid: Some(it.profile.grid), ..opts };
    let heavy = ground_state(&SNParams::single(lambda, PhysicalConstants::dimensionless())?, GroundStateMethod::ImaginaryTime, &fixed)?;
    let scaling = heavy.energy / it.energy / lambda.powi(5);
    let agree = rel(it.energy, sh.energy);
    let ok = agree < GROUND_ENERGY_TOL && (scaling - 1.0).abs() < MASS_SCALING_TOL;
    Ok((
        ok,
        format!(
            "E0 imaginary-time {:.8}, shooting {:.8} (rel {agree:.1e}), E(1.5m)/(1.5^5 E(m)) = {scaling:.6}",
            it.energy, sh.energy
        ),
    ))
}

fn sn_evolution() -> Result<(bool, String)> {
    let grid = Grid::radial(256, 40.0)?;
    let params = SNParams::dimensionless();
    let run = |dt: f64, steps: usize| -> Result<(f64, f64)> {
        let mut fields = vec![WaveField::gaussian(grid, 1.5)?];
        let mut st = SplitStepper::new(&fields, &params, dt)?;
        let e0 = st.energy(&fields).total;
        let (mut drift, mut norm_step) = (0.0f64, 0.0f64);
        for _ in 0..steps {
            let n0 = fields[0].norm_sqr();
            st.step(&mut fields)?;
            norm_step = norm_step.max((fields[0].norm_sqr() - n0).abs());
            drift = drift.max((st.energy(&fields).total - e0).abs());
        }
        Ok((drift, norm_step))
    };
    let (coarse, n1) = run(0.04, 1000)?;
    let (fine, n2) = run(0.02, 2000)?;
    let ratio = coarse / fine;
    let mut free = PhysicalConstants::dimensionless();
    free.g = 0.0;
    let sigma = 1.5;
    let out = evolve_split_step(&WaveField::gaussian(grid, sigma)?, &SNParams::single(1.0, free)?, 0.02, 500)?;
    let law = sigma * (1.0 + (out.t / (2.0 * sigma * sigma)).powi(2)).sqrt();
    let width_err = rel(out.width(), law);
    let norm_step = n1.max(n2);
    let ok = norm_step < NORM_STEP_TOL && (ratio / DRIFT_RATIO - 1.0).abs() < DRIFT_RATIO_TOL && width_err < SPREADING_TOL;
    Ok((
        ok,
        format!(
            "max norm change per step {norm_step:.1e}, energy drift {coarse:.3e} -> {fine:.3e} (ratio {ratio:.3}), free width error {width_err:.1e}"
        ),
    ))
}

fn hartree_contrast() -> Result<(bool, String)> {
    let dimless = PhysicalConstants::dimensionless();
    let grid = Grid::cartesian(16, 12.0)?;
    let a = WaveField::gaussian(grid, 1.0)?;
    let mut b = WaveField::from_fn(grid, |p| {
        let r2 = (p[0] - 1.5).powi(2) + (p[1] + 0.5).powi(2) + p[2] * p[2];
        Complex64::new((-r2 / 4.0).exp(), 0.3 * p[1])
    })?;
    b.normalize()?;

    let single = effective_potential(std::slice::from_ref(&a), &SNParams::branches(vec![1.0], dimless, false)?, 0)?;
    let single_zero = single.iter().all(|v| *v == 0.0);

    let masses = vec![1.0, 2.0];
    let fields = [a, b];
    let mut worst = 0.0f64;
    for s in 0..2 {
        let on = effective_potential(&fields, &SNParams::branches(masses.clone(), dimless, true)?, s)?;
        let off = effective_potential(&fields, &SNParams::branches(masses.clone(), dimless, false)?, s)?;
        let ms = masses[s];
        let own: Vec<f64> = fields[s].density().iter().map(|d| ms * d).collect();
        let self_pot: Vec<f64> = solve_poisson(&own, &grid, dimless.g)?.iter().map(|p| ms * p).collect();
        let scale = on.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..on.len() {
            worst = worst.max((on[i] - off[i] - self_pot[i]).abs() / scale);
        }
    }
    Ok((
        single_zero && worst < ROUND_OFF,
        format!("N=1 Hartree potential identically zero: {single_zero}; max |toggle difference - self potential| / |V| = {worst:.1e}"),
    ))
}

fn com_decoupling() -> Result<(bool, String)> {
    let sc = InterferenceScenario::default();
    let h = sc.spacing();
    let mut ok = true;
    let mut parts = Vec::new();
    for cells in [4.0, 8.0] {
        let r = run_decoupling(&sc, PairPotential::Relative { g: 1.0, eps: cells * h }, 0.005, 40)?;
        let dv = (r.visibility_free - r.visibility_interacting).abs();
        ok &= r.max_com_l1() < COM_L1_TOL && dv < VISIBILITY_TOL && r.relative_l1_final > RELATIVE_POWER;
        parts.push(format!(
            "eps={cells} cells: CoM L1 {:.1e} over {} outputs, visibility {:.5}/{:.5}, relative L1 {:.3}",
            r.max_com_l1(),
            r.times.len(),
            r.visibility_free,
            r.visibility_interacting,
            r.relative_l1_final
        ));
    }
    Ok((ok, parts.join("; ")))
}
