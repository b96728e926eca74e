use num_complex::Complex64;
use serde_json::{json, Value};

use gravdec::acceptance;
use gravdec::com::{run_decoupling, InterferenceScenario, PairPotential};
use gravdec::decoherence::{
    ensemble_offdiagonal, evolve_master, fit_decay_rate, sample_ensemble, NoiseSpec, TwoBranchState,
};
use gravdec::dp::{delta_full, delta_surface_expansion, Convention, CubeSetup, DeltaResult, FullMethod};
use gravdec::mass::Axis;
use gravdec::sn::{
    gravitational_potential, ground_state, natural_units, Grid, GroundStateMethod, GroundStateOptions, SNParams,
    SplitStepper, WaveField,
};
use gravdec::PhysicalConstants;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{num, Csv, OutputDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    DpRate,
    Decohere,
    SnGroundState,
    SnEvolve,
    ComTest,
    Selftest,
}

type Defaults = Vec<(String, String)>;

fn kv(pairs: &[(&str, &str)]) -> Defaults {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

fn constants_defaults(pc: PhysicalConstants) -> Defaults {
    vec![
        ("constants.g".into(), format!("{:e}", pc.g)),
        ("constants.hbar".into(), format!("{:e}", pc.hbar)),
        ("constants.c".into(), format!("{:e}", pc.c)),
    ]
}

fn sn_defaults() -> Defaults {
    let mut d = constants_defaults(PhysicalConstants::dimensionless());
    d.extend(kv(&[
        ("sn.mass", "1"),
        ("sn.branches", "1"),
        ("sn.include_self", "true"),
        ("sn.grid.kind", "radial"),
        ("sn.grid.n", "auto"),
        ("sn.grid.size", "auto"),
    ]));
    d
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::DpRate => "dp-rate",
            Command::Decohere => "decohere",
            Command::SnGroundState => "sn ground-state",
            Command::SnEvolve => "sn evolve",
            Command::ComTest => "com-test",
            Command::Selftest => "selftest",
        }
    }

    /// Every key the command accepts, with its default.
    pub fn defaults(self) -> Defaults {
        let mut d = kv(&[("command", self.name()), ("output_dir", "gravdec-out")]);
        d.extend(match self {
            Command::DpRate => {
                let mut v = constants_defaults(PhysicalConstants::default());
                v.extend(kv(&[("dp.preset", "none"), ("dp.method", "quadratic"), ("dp.cells", "64")]));
                v.extend(kv(&[("dp.samples", "1000000"), ("dp.seed", "2006"), ("dp.convention", "penrose")]));
                v.extend(kv(&[("dp.sweep", ""), ("dp.export_voxels", "false")]));
                v.extend(mirror_geometry());
                v
            }
            Command::Decohere => kv(&[
                ("decohere.tau_d", "1 s"),
                ("decohere.dt", "0.01 s"),
                ("decohere.t_final", "1 s"),
                ("decohere.trajectories", "10000"),
                ("decohere.seed", "2006"),
                ("decohere.population0", "0.5"),
            ]),
            Command::SnGroundState => {
                let mut v = sn_defaults();
                v.extend(kv(&[
                    ("sn.ground.method", "imaginary-time"),
                    ("sn.ground.dtau", "auto"),
                    ("sn.ground.energy_tol", "1e-8"),
                    ("sn.ground.residual_tol", "1e-10"),
                    ("sn.ground.max_iter", "200000"),
                    ("sn.ground.shooting_r_max", "20"),
                ]));
                v
            }
            Command::SnEvolve => {
                let mut v = sn_defaults();
                v.extend(kv(&[
                    ("sn.evolve.initial", "gaussian"),
                    ("sn.evolve.sigma", "1"),
                    ("sn.evolve.dt", "0.01"),
                    ("sn.evolve.steps", "1000"),
                    ("sn.evolve.output_every", "10"),
                ]));
                v
            }
            Command::ComTest => {
                let sc = InterferenceScenario::default();
                let mut v = vec![
                    ("com.n".to_string(), sc.n.to_string()),
                    ("com.extent".to_string(), sc.extent.to_string()),
                    ("com.mass1".to_string(), sc.masses.0.to_string()),
                    ("com.mass2".to_string(), sc.masses.1.to_string()),
                    ("com.separation".to_string(), sc.separation.to_string()),
                    ("com.k0".to_string(), sc.k0.to_string()),
                    ("com.sigma_com".to_string(), sc.sigma_com.to_string()),
                    ("com.sigma_rel".to_string(), sc.sigma_rel.to_string()),
                    ("com.eps_cells".to_string(), gravdec::com::DEFAULT_SOFTENING_CELLS.to_string()),
                ];
                v.extend(kv(&[
                    ("com.g", "1"),
                    ("com.potential", "relative"),
                    ("com.dt", "0.005"),
                    ("com.output_every", "40"),
                ]));
                v
            }
            Command::Selftest => kv(&[("selftest.criteria", "all")]),
        });
        d
    }

    pub fn preset_key(self) -> Option<&'static str> {
        (self == Command::DpRate).then_some("dp.preset")
    }

    pub fn preset(self, name: &str) -> Result<Defaults, CliError> {
        match (self, name) {
            (Command::DpRate, "none") => Ok(vec![]),
            (Command::DpRate, "mirror") => Ok(mirror_geometry()),
            _ => Err(CliError::Invalid(format!("unknown preset {name:?} for {}", self.name()))),
        }
    }

    pub fn run(self, cfg: &RunConfig, out: &mut OutputDir) -> Result<Value, CliError> {
        match self {
            Command::DpRate => dp_rate(cfg, out),
            Command::Decohere => decohere(cfg, out),
            Command::SnGroundState => sn_ground_state(cfg, out),
            Command::SnEvolve => sn_evolve(cfg, out),
            Command::ComTest => com_test(cfg, out),
            Command::Selftest => selftest(cfg, out),
        }
    }
}

/// The mirror experiment: a 10⁻³ cm cube of 5×10⁻¹² kg displaced by 10⁻¹¹ cm.
fn mirror_geometry() -> Defaults {
    kv(&[("dp.side", "1e-3 cm"), ("dp.mass", "5e-12 kg"), ("dp.d", "1e-11 cm"), ("dp.axis", "z")])
}

fn constants(cfg: &RunConfig) -> Result<PhysicalConstants, CliError> {
    Ok(PhysicalConstants::new(cfg.si("constants.g")?, cfg.si("constants.hbar")?, cfg.si("constants.c")?)?)
}

/// Unvalidated here: the Schrödinger–Newton parameters accept G = 0 for free runs.
fn sn_constants(cfg: &RunConfig) -> Result<PhysicalConstants, CliError> {
    Ok(PhysicalConstants { g: cfg.si("constants.g")?, hbar: cfg.si("constants.hbar")?, c: cfg.si("constants.c")? })
}

fn positive_count(cfg: &RunConfig, key: &str) -> Result<usize, CliError> {
    let n: usize = cfg.parse(key)?;
    if n == 0 {
        return Err(CliError::Invalid(format!("{key} must be >= 1")));
    }
    Ok(n)
}

fn dp_rate(cfg: &RunConfig, out: &mut OutputDir) -> Result<Value, CliError> {
    let pc = constants(cfg)?;
    let convention: Convention = cfg.parse("dp.convention")?;
    let axis: Axis = cfg.parse("dp.axis")?;
    let method = cfg.get("dp.method");
    let setup = CubeSetup { side: cfg.si("dp.side")?, mass: cfg.si("dp.mass")?, d: cfg.si("dp.d")?, axis };
    let compute = |d: f64| -> Result<DeltaResult, CliError> {
        let s = CubeSetup { d, ..setup };
        Ok(match method {
            "quadratic" => s.quadratic(&pc, convention)?,
            "surface" => delta_surface_expansion(&s.pair()?, &pc, convention)?,
            "voxel" => {
                let cells = positive_count(cfg, "dp.cells")?;
                delta_full(&s.pair()?, FullMethod::Voxel { cells_per_side: cells }, &pc, convention)?
            }
            "mc" => {
                let fm = FullMethod::Mc { samples: cfg.parse("dp.samples")?, seed: cfg.parse("dp.seed")? };
                delta_full(&s.pair()?, fm, &pc, convention)?
            }
            other => {
                return Err(CliError::Invalid(format!(
                    "dp.method = {other:?}: expected quadratic, surface, voxel or mc"
                )))
            }
        })
    };

    let result = compute(setup.d)?;
    let sweep: Vec<f64> = cfg
        .get("dp.sweep")
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| gravdec::units::parse_si(s).map_err(|e| CliError::Invalid(format!("dp.sweep entry {s:?}: {e}"))))
        .collect::<Result<_, _>>()?;
    let mut csv = Csv::new(&["d", "delta", "delta_hbar_c_per_cm", "tau_d", "stderr"]);
    let mut push = |d: f64, r: &DeltaResult| csv.row(&[d, r.delta, r.delta_hbar_c_per_cm, r.tau_d, r.stderr]);
    if sweep.is_empty() {
        push(setup.d, &result);
    } else {
        for d in &sweep {
            push(*d, &compute(*d)?);
        }
    }
    out.write_csv("delta.csv", &csv)?;

    if cfg.flag("dp.export_voxels")? {
        let cells = positive_count(cfg, "dp.cells")?;
        let (ga, gb, origin) = setup.pair()?.common_lattice(cells)?;
        for (name, g) in [("a", &ga), ("b", &gb)] {
            out.write_bytes(&format!("voxels_{name}.txt"), |w| g.write_header(&origin, w))?;
            out.write_bytes(&format!("voxels_{name}.bin"), |w| g.write_data(w))?;
        }
    }

    say!(
        "Delta = {} J ({} hbar c/cm), tau_d = {} s [{method}]",
        num(result.delta),
        num(result.delta_hbar_c_per_cm),
        num(result.tau_d)
    );
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    Ok(json!({
        "geometry": {
            "side": setup.side,
            "mass": setup.mass,
            "d": setup.d,
            "axis": axis,
            "density": setup.density(),
        },
        "result": result,
        "sweep_points": sweep.len(),
    }))
}

fn decohere(cfg: &RunConfig, out: &mut OutputDir) -> Result<Value, CliError> {
    let tau_d = cfg.si("decohere.tau_d")?;
    let t_final = cfg.si("decohere.t_final")?;
    let count = positive_count(cfg, "decohere.trajectories")?;
    let spec = NoiseSpec { tau_d, dt: cfg.si("decohere.dt")?, seed: cfg.parse("decohere.seed")? };
    let p0: f64 = cfg.parse("decohere.population0")?;
    if !(p0 > 0.0 && p0 < 1.0) {
        return Err(CliError::Invalid(format!("decohere.population0 must lie in (0, 1), got {p0}")));
    }
    let psi0 = [Complex64::new(p0.sqrt(), 0.0), Complex64::new((1.0 - p0).sqrt(), 0.0)];

    let ensemble = sample_ensemble(&spec, psi0, t_final, count)?;
    let series = ensemble_offdiagonal(&ensemble)?;
    let population_drift = ensemble
        .iter()
        .flat_map(|tr| tr.states.iter())
        .map(|s| (s[0].norm_sqr() - p0).abs().max((s[1].norm_sqr() - (1.0 - p0)).abs()))
        .fold(0.0f64, f64::max);
    drop(ensemble);

    let start = TwoBranchState::pure(psi0, 0.0)?;
    let mut csv = Csv::new(&["t", "re_mean", "im_mean", "stderr", "master"]);
    for ((t, m), se) in series.times.iter().zip(&series.mean).zip(&series.stderr) {
        let master = evolve_master(&start, tau_d, *t)?.coherence();
        csv.row(&[*t, m.re, m.im, *se, master.re]);
    }
    out.write_csv("coherence.csv", &csv)?;

    let rate = fit_decay_rate(&series)?;
    say!("fitted decay rate {} 1/s vs 1/tau_d = {} 1/s", num(rate), num(1.0 / tau_d));
    Ok(json!({
        "tau_d": tau_d,
        "dt": spec.dt,
        "t_final": t_final,
        "trajectories": count,
        "seed": spec.seed,
        "fitted_rate": rate,
        "expected_rate": 1.0 / tau_d,
        "relative_rate_error": (rate * tau_d - 1.0).abs(),
        "max_population_change": population_drift,
        "time_points": csv.len(),
    }))
}

struct SnSetup {
    params: SNParams,
    grid: Grid,
}

/// `natural` supplies the auto grid size when the coupling is nonzero;
/// `fallback` is used for free runs.
fn sn_setup(cfg: &RunConfig, natural: f64, fallback: f64) -> Result<SnSetup, CliError> {
    let pc = sn_constants(cfg)?;
    let mass = cfg.si("sn.mass")?;
    let branches = positive_count(cfg, "sn.branches")?;
    let params = SNParams::branches(vec![mass; branches], pc, cfg.flag("sn.include_self")?)?;
    let kind = cfg.get("sn.grid.kind");
    let n: usize = match (cfg.get("sn.grid.n"), kind) {
        ("auto", "radial") => 1024,
        ("auto", _) => 64,
        _ => cfg.parse("sn.grid.n")?,
    };
    let size = match cfg.optional_si("sn.grid.size")? {
        Some(s) => s,
        None => match natural_units(&params) {
            Ok(u) => (natural * u.length).max(fallback),
            Err(_) if fallback > 0.0 => fallback,
            Err(e) => return Err(e.into()),
        },
    };
    let grid = match kind {
        "radial" => Grid::radial(n, size)?,
        "cartesian" => Grid::cartesian(n, size)?,
        other => return Err(CliError::Invalid(format!("sn.grid.kind = {other:?}: expected radial or cartesian"))),
    };
    Ok(SnSetup { params, grid })
}

/// Density and potential along the radius, or along the x axis through the
/// grid center for Cartesian grids.
fn profile_csv(field: &WaveField, phi: &[f64]) -> Csv {
    let mut csv = Csv::new(&["r", "density", "phi"]);
    let density = field.density();
    let points = field.grid.points();
    match field.grid {
        Grid::Radial { .. } => {
            for ((p, rho), v) in points.iter().zip(&density).zip(phi) {
                csv.row(&[p[0], *rho, *v]);
            }
        }
        Grid::Cartesian { n, .. } => {
            for i in 0..n {
                let idx = (i * n + n / 2) * n + n / 2;
                csv.row(&[points[idx][0], density[idx], phi[idx]]);
            }
        }
    }
    csv
}

fn ground_options(cfg: &RunConfig, grid: Grid) -> Result<GroundStateOptions, CliError> {
    Ok(GroundStateOptions {
        grid: Some(grid),
        dtau: cfg.optional_si("sn.ground.dtau")?,
        energy_tol: cfg.parse("sn.ground.energy_tol")?,
        residual_tol: cfg.parse("sn.ground.residual_tol")?,
        max_iter: cfg.parse("sn.ground.max_iter")?,
        shooting_r_max: cfg.parse("sn.ground.shooting_r_max")?,
    })
}

fn sn_ground_state(cfg: &RunConfig, out: &mut OutputDir) -> Result<Value, CliError> {
    let SnSetup { params, grid } = sn_setup(cfg, 30.0, 0.0)?;
    let method: GroundStateMethod = cfg.parse("sn.ground.method")?;
    let opts = ground_options(cfg, grid)?;
    let gs = ground_state(&params, method, &opts)?;
    let fields = vec![gs.profile.clone(); params.masses.len()];
    let phi = gravitational_potential(&fields, &params)?;
    out.write_csv("profile.csv", &profile_csv(&gs.profile, &phi))?;
    say!("E0 = {} (functional {}), {} iterations", num(gs.energy), num(gs.functional), gs.iterations);
    Ok(json!({
        "method": gs.method,
        "energy": gs.energy,
        "functional": gs.functional,
        "energy_natural": gs.energy / gs.units.energy,
        "iterations": gs.iterations,
        "residual": gs.residual,
        "width": gs.profile.width(),
        "natural_units": gs.units,
        "grid": grid,
        "params": params,
    }))
}

fn sn_evolve(cfg: &RunConfig, out: &mut OutputDir) -> Result<Value, CliError> {
    let sigma = cfg.si("sn.evolve.sigma")?;
    let SnSetup { params, grid } = sn_setup(cfg, 30.0, 24.0 * sigma.abs())?;
    let dt = cfg.si("sn.evolve.dt")?;
    let steps: usize = cfg.parse("sn.evolve.steps")?;
    let every = positive_count(cfg, "sn.evolve.output_every")?;
    let initial = match cfg.get("sn.evolve.initial") {
        "gaussian" => WaveField::gaussian(grid, sigma)?,
        "ground" => {
            let opts = GroundStateOptions { grid: Some(grid), ..GroundStateOptions::default() };
            ground_state(&params, GroundStateMethod::ImaginaryTime, &opts)?.profile
        }
        other => {
            return Err(CliError::Invalid(format!("sn.evolve.initial = {other:?}: expected gaussian or ground")))
        }
    };
    let mut fields = vec![initial; params.masses.len()];
    let mut stepper = SplitStepper::new(&fields, &params, dt)?;

    let total_norm = |f: &[WaveField]| f.iter().map(WaveField::norm_sqr).sum::<f64>() / f.len() as f64;
    let mut csv = Csv::new(&["t", "norm", "energy", "width"]);
    let e0 = stepper.energy(&fields).total;
    let w0 = fields[0].width();
    csv.row(&[0.0, total_norm(&fields), e0, w0]);
    let mut max_norm_step = 0.0f64;
    let mut max_energy_drift = 0.0f64;
    for s in 1..=steps {
        let before = total_norm(&fields);
        stepper.step(&mut fields)?;
        let norm = total_norm(&fields);
        max_norm_step = max_norm_step.max((norm - before).abs());
        if s % every == 0 || s == steps {
            let e = stepper.energy(&fields).total;
            max_energy_drift = max_energy_drift.max((e - e0).abs());
            csv.row(&[fields[0].t, norm, e, fields[0].width()]);
        }
    }
    out.write_csv("timeseries.csv", &csv)?;
    let phi = gravitational_potential(&fields, &params)?;
    out.write_csv("profile.csv", &profile_csv(&fields[0], &phi))?;
    let w1 = fields[0].width();
    say!("t = {}: width {} -> {}, max energy drift {}", num(fields[0].t), num(w0), num(w1), num(max_energy_drift));
    Ok(json!({
        "steps": steps,
        "dt": dt,
        "t_final": fields[0].t,
        "initial_energy": e0,
        "max_energy_drift": max_energy_drift,
        "max_norm_change_per_step": max_norm_step,
        "initial_width": w0,
        "final_width": w1,
        "grid": grid,
        "params": params,
    }))
}

fn com_test(cfg: &RunConfig, out: &mut OutputDir) -> Result<Value, CliError> {
    let sc = InterferenceScenario {
        n: cfg.parse("com.n")?,
        extent: cfg.parse("com.extent")?,
        masses: (cfg.parse("com.mass1")?, cfg.parse("com.mass2")?),
        separation: cfg.parse("com.separation")?,
        k0: cfg.parse("com.k0")?,
        sigma_com: cfg.parse("com.sigma_com")?,
        sigma_rel: cfg.parse("com.sigma_rel")?,
    };
    if sc.n == 0 || !(sc.k0 > 0.0 && sc.extent > 0.0) {
        return Err(CliError::Invalid("com.n, com.extent and com.k0 must be > 0".into()));
    }
    let g: f64 = cfg.parse("com.g")?;
    let eps = cfg.parse::<f64>("com.eps_cells")? * sc.spacing();
    let potential = match cfg.get("com.potential") {
        "relative" => PairPotential::Relative { g, eps },
        "external" => PairPotential::External { g, eps },
        other => return Err(CliError::Invalid(format!("com.potential = {other:?}: expected relative or external"))),
    };
    let report = run_decoupling(&sc, potential, cfg.parse("com.dt")?, positive_count(cfg, "com.output_every")?)?;

    let mut csv = Csv::new(&["t", "R", "density"]);
    for (t, m) in report.times.iter().zip(&report.com_marginals) {
        for (r, rho) in m.coordinates().iter().zip(&m.density) {
            csv.row(&[*t, *r, *rho]);
        }
    }
    out.write_csv("com_marginals.csv", &csv)?;

    let dv = (report.visibility_free - report.visibility_interacting).abs();
    let decoupled = report.max_com_l1() < acceptance::COM_L1_TOL && dv < acceptance::VISIBILITY_TOL;
    say!(
        "max CoM L1 {} over {} outputs, visibility {} vs {}: {}",
        num(report.max_com_l1()),
        report.times.len(),
        num(report.visibility_free),
        num(report.visibility_interacting),
        if decoupled { "decoupled" } else { "not decoupled" }
    );
    Ok(json!({
        "potential": potential,
        "max_com_l1": report.max_com_l1(),
        "max_oracle_l1": report.max_oracle_l1(),
        "visibility_difference": dv,
        "decoupled": decoupled,
        "report": report,
    }))
}

fn selftest(cfg: &RunConfig, out: &mut OutputDir) -> Result<Value, CliError> {
    let ids: Vec<u8> = match cfg.get("selftest.criteria") {
        "all" => acceptance::CRITERIA.iter().map(|c| c.0).collect(),
        list => list
            .split(',')
            .map(|s| s.trim().parse::<u8>().map_err(|e| CliError::Invalid(format!("selftest.criteria: {e}"))))
            .collect::<Result<_, _>>()?,
    };
    let mut records = Vec::new();
    let mut failed = Vec::new();
    for id in ids {
        let o = acceptance::run(id).ok_or_else(|| CliError::Invalid(format!("no acceptance criterion {id}")))?;
        say!("{o}");
        if !o.passed {
            failed.push(id);
        }
        records.push(json!({
            "id": o.id,
            "title": o.title,
            "passed": o.passed,
            "detail": o.detail,
            "seconds": o.elapsed.as_secs_f64(),
        }));
    }
    let summary = json!({ "passed": failed.is_empty(), "criteria": records });
    if failed.is_empty() {
        Ok(summary)
    } else {
        out.write_json("summary.json", &summary)?;
        Err(CliError::SelftestFailed(format!("criteria {failed:?} failed")))
    }
}
