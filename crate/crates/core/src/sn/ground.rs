//! Stationary states ψ(x, t) = exp(−iEt/ħ) u(x).
//!
//! Ground states are computed for the symmetric branch problem: every branch
//! carries the same mass m and the same profile u, so branch s feels
//! κ·m·φ[m|u|²] with κ = N (self term kept) or N − 1 (Hartree). The single
//! particle equation is N = 1 with the self term. κ enters only through the
//! effective coupling κG, so E scales as (κG)² m⁵ / ħ².

use num_complex::Complex64;
use serde::Serialize;

use super::{Grid, Operators, SNParams, WaveField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundStateMethod {
    ImaginaryTime,
    RadialShooting,
}

impl std::str::FromStr for GroundStateMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().replace('-', "_").as_str() {
            "imaginary_time" => Ok(GroundStateMethod::ImaginaryTime),
            "radial_shooting" => Ok(GroundStateMethod::RadialShooting),
            other => Err(Error::invalid(format!("unknown ground-state method {other:?}"))),
        }
    }
}

/// Scales of the problem with coupling κG: length ħ²/(κG m³), energy
/// (κG)² m⁵/ħ², time ħ/energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NaturalUnits {
    pub coupling: f64,
    pub length: f64,
    pub energy: f64,
    pub time: f64,
}

pub fn natural_units(params: &SNParams) -> Result<NaturalUnits> {
    params.validate()?;
    let m = params.m;
    if params.masses.iter().any(|mu| (mu - m).abs() > 1e-12 * m) {
        return Err(Error::invalid("ground states need all branch masses equal to m"));
    }
    let n = params.masses.len() as f64;
    let coupling = if params.include_self { n } else { n - 1.0 };
    let g = coupling * params.constants.g;
    if !(g > 0.0) {
        return Err(Error::invalid("no gravitational coupling: the ground state does not exist"));
    }
    let hbar = params.constants.hbar;
    let length = hbar * hbar / (g * m.powi(3));
    let energy = g * g * m.powi(5) / (hbar * hbar);
    Ok(NaturalUnits { coupling, length, energy, time: hbar / energy })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroundStateOptions {
    /// Defaults to a radial grid, n = 1024, r_max = 30 natural lengths.
    pub grid: Option<Grid>,
    /// Imaginary-time step; defaults to one natural time unit.
    pub dtau: Option<f64>,
    /// Stop once the eigenvalue changes by less than this per step (natural units) ...
    pub energy_tol: f64,
    /// ... and ‖Hu − E u‖ is below this (natural units).
    pub residual_tol: f64,
    pub max_iter: usize,
    /// Outer radius of the shooting integration, natural lengths.
    pub shooting_r_max: f64,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        GroundStateOptions {
            grid: None,
            dtau: None,
            energy_tol: 1e-8,
            residual_tol: 1e-10,
            max_iter: 200_000,
            shooting_r_max: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    pub method: GroundStateMethod,
    /// Eigenvalue E₀ of the stationary equation.
    pub energy: f64,
    /// Energy functional ⟨T⟩ + ½⟨V⟩ of the returned profile.
    pub functional: f64,
    pub profile: WaveField,
    pub iterations: usize,
    /// ‖Hu − E₀u‖ on the grid.
    pub residual: f64,
    pub units: NaturalUnits,
}

pub fn ground_state(params: &SNParams, method: GroundStateMethod, opts: &GroundStateOptions) -> Result<GroundState> {
    let units = natural_units(params)?;
    let grid = match opts.grid {
        Some(g) => {
            g.validate()?;
            g
        }
        None => Grid::radial(1024, 30.0 * units.length)?,
    };
    match method {
        GroundStateMethod::ImaginaryTime => imaginary_time(params, &grid, &units, opts),
        GroundStateMethod::RadialShooting => {
            let sol = radial_shooting(opts.shooting_r_max)?;
            let scale = units.length.powf(-1.5);
            let values = grid
                .radii()
                .iter()
                .map(|r| Complex64::new(sol.profile(r / units.length) * scale, 0.0))
                .collect();
            let mut profile = WaveField::new(grid, values, 0.0)?;
            profile.normalize()?;
            let ops = Operators::new(&grid);
            let (_, functional, residual) = rayleigh(&ops, &profile, params, units.coupling);
            Ok(GroundState {
                method,
                energy: sol.energy * units.energy,
                functional,
                profile,
                iterations: sol.bisections,
                residual,
                units,
            })
        }
    }
}

/// Returns (V, Hψ) for the symmetric branch problem.
fn hamiltonian(ops: &Operators, psi: &WaveField, params: &SNParams, coupling: f64) -> (Vec<f64>, Vec<Complex64>) {
    let m = params.m;
    let d: Vec<f64> = psi.values.iter().map(|v| m * v.norm_sqr()).collect();
    // Densities are non-negative by construction, so the solve cannot fail.
    let phi = ops.poisson.solve(&d, params.constants.g).expect("valid density");
    let v: Vec<f64> = phi.iter().map(|p| coupling * m * p).collect();
    let mut h = ops.kinetic(&psi.values, m, params.constants.hbar);
    for ((h, psi), v) in h.iter_mut().zip(&psi.values).zip(&v) {
        *h += psi * v;
    }
    (v, h)
}

/// (Rayleigh quotient, energy functional, ‖Hψ − μψ‖) for normalized ψ.
fn rayleigh(ops: &Operators, psi: &WaveField, params: &SNParams, coupling: f64) -> (f64, f64, f64) {
    let (v, h) = hamiltonian(ops, psi, params, coupling);
    let w = ops.grid.weights();
    let mut mu = 0.0;
    let mut pot = 0.0;
    for i in 0..w.len() {
        mu += w[i] * (psi.values[i].conj() * h[i]).re;
        pot += w[i] * v[i] * psi.values[i].norm_sqr();
    }
    let res: f64 = (0..w.len()).map(|i| w[i] * (h[i] - psi.values[i] * mu).norm_sqr()).sum::<f64>().sqrt();
    // ⟨T⟩ + ½⟨V⟩ = μ − ½⟨V⟩
    (mu, mu - 0.5 * pot, res)
}

/// Imaginary-time relaxation with the kinetic term implicit:
/// ψ ← normalize[(1 + dτ T/ħ)⁻¹ (ψ − dτ (V − μ) ψ / ħ)], μ the Rayleigh
/// quotient. Stationary points are exactly the discrete eigenstates.
fn imaginary_time(params: &SNParams, grid: &Grid, units: &NaturalUnits, opts: &GroundStateOptions) -> Result<GroundState> {
    let dtau = opts.dtau.unwrap_or(units.time);
    if !(dtau > 0.0 && dtau.is_finite()) {
        return Err(Error::invalid(format!("dtau must be finite and > 0, got {dtau}")));
    }
    let ops = Operators::new(grid);
    let hbar = params.constants.hbar;
    let m = params.m;
    let mut psi = WaveField::gaussian(*grid, 2.0 * units.length)?;
    let mut prev = f64::NAN;
    let mut last = (f64::NAN, f64::NAN, f64::INFINITY);
    for it in 1..=opts.max_iter {
        let (v, h) = hamiltonian(&ops, &psi, params, units.coupling);
        let w = grid.weights();
        let mu: f64 = (0..w.len()).map(|i| w[i] * (psi.values[i].conj() * h[i]).re).sum();
        let res: f64 = (0..w.len()).map(|i| w[i] * (h[i] - psi.values[i] * mu).norm_sqr()).sum::<f64>().sqrt();
        let pot: f64 = (0..w.len()).map(|i| w[i] * v[i] * psi.values[i].norm_sqr()).sum();
        last = (mu, mu - 0.5 * pot, res);
        if (mu - prev).abs() < opts.energy_tol * units.energy && res < opts.residual_tol * units.energy {
            return Ok(GroundState {
                method: GroundStateMethod::ImaginaryTime,
                energy: mu,
                functional: last.1,
                profile: psi,
                iterations: it,
                residual: res,
                units: *units,
            });
        }
        prev = mu;
        for (p, v) in psi.values.iter_mut().zip(&v) {
            *p *= 1.0 - dtau * (v - mu) / hbar;
        }
        let c = dtau * hbar / (2.0 * m);
        ops.spectral.apply_real(&mut psi.values, |k2| 1.0 / (1.0 + c * k2));
        psi.normalize()?;
    }
    Err(Error::NonConvergence {
        what: "imaginary-time ground state".into(),
        estimate: last.0,
        error_bound: last.2,
    })
}

/// Radial shooting solution in natural units (ħ = m = κG = 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ShootingSolution {
    /// Eigenvalue of the normalized state.
    pub energy: f64,
    /// Central value V(0) − E of the unnormalized solution with ψ(0) = 1.
    pub w0: f64,
    /// ∫|ψ|² of the unnormalized solution.
    pub norm: f64,
    /// Matching radius of the unnormalized solution.
    pub match_radius: f64,
    pub bisections: usize,
    step: f64,
    psi: Vec<f64>,
    dpsi: Vec<f64>,
    kappa: f64,
    tail_power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    /// ψ crossed zero: the trial V(0) − E is too deep.
    Crossed,
    /// ψ turned upward: too shallow.
    TurnedUp,
}

const SHOOT_STEP: f64 = 5e-4;
const SHOOT_LIMIT: f64 = 60.0;

fn deriv(r: f64, y: [f64; 4]) -> [f64; 4] {
    let [p, dp, w, dw] = y;
    let four_pi = 4.0 * std::f64::consts::PI;
    [dp, 2.0 * w * p - 2.0 * dp / r, dw, four_pi * p * p - 2.0 * dw / r]
}

fn rk4(r: f64, y: [f64; 4], h: f64) -> [f64; 4] {
    let add = |a: [f64; 4], b: [f64; 4], s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2], a[3] + s * b[3]];
    let k1 = deriv(r, y);
    let k2 = deriv(r + h / 2.0, add(y, k1, h / 2.0));
    let k3 = deriv(r + h / 2.0, add(y, k2, h / 2.0));
    let k4 = deriv(r + h, add(y, k3, h));
    let mut out = y;
    for i in 0..4 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Integrates ψ'' = 2Wψ − 2ψ'/r, W'' = 4πψ² − 2W'/r (W = V − E, ψ(0) = 1)
/// from the series start at r = h. Returns the outcome and, when asked, the
/// states at r_k = k·h.
fn shoot(w0: f64, keep: bool) -> (Shot, Vec<[f64; 4]>) {
    let h = SHOOT_STEP;
    let four_pi = 4.0 * std::f64::consts::PI;
    let mut y = [1.0 + w0 * h * h / 3.0, 2.0 * w0 * h / 3.0, w0 + four_pi * h * h / 6.0, four_pi * h / 3.0];
    let mut path = Vec::new();
    if keep {
        path.push([1.0, 0.0, w0, 0.0]);
        path.push(y);
    }
    let steps = (SHOOT_LIMIT / h) as usize;
    for k in 1..steps {
        y = rk4(k as f64 * h, y, h);
        if keep {
            path.push(y);
        }
        if y[0] < 0.0 {
            return (Shot::Crossed, path);
        }
        if y[1] > 0.0 {
            return (Shot::TurnedUp, path);
        }
    }
    (Shot::Crossed, path)
}

/// Bisects V(0) − E for the nodeless decaying solution, matches an
/// exponential tail ψ ∝ r^{N/κ − 1} e^{−κr} at the matching radius and
/// rescales ψ(r) → λ²ψ(λr), λ = 1/N, to unit norm.
///
/// `r_max` bounds the matching radius in normalized natural lengths.
pub fn radial_shooting(r_max: f64) -> Result<ShootingSolution> {
    if !(r_max > 0.0) {
        return Err(Error::invalid("shooting r_max must be > 0"));
    }
    let (mut lo, mut hi) = (-10.0f64, 10.0f64);
    if shoot(lo, false).0 != Shot::Crossed || shoot(hi, false).0 != Shot::TurnedUp {
        return Err(Error::NonConvergence { what: "shooting bracket".into(), estimate: f64::NAN, error_bound: f64::INFINITY });
    }
    let mut bisections = 0;
    while bisections < 200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match shoot(mid, false).0 {
            Shot::Crossed => lo = mid,
            Shot::TurnedUp => hi = mid,
        }
        bisections += 1;
    }
    if hi - lo > 1e-10 {
        return Err(Error::NonConvergence { what: "shooting bisection".into(), estimate: lo, error_bound: hi - lo });
    }
    let (_, path) = shoot(lo, true);
    let h = SHOOT_STEP;
    let r = |k: usize| k as f64 * h;
    let four_pi = 4.0 * std::f64::consts::PI;

    // Trustworthy region: until ψ has fallen to 1e-6 of its central value.
    let k_thr = path
        .iter()
        .position(|y| y[0] < 1e-6)
        .ok_or_else(|| Error::NonConvergence { what: "shooting decay".into(), estimate: lo, error_bound: hi - lo })?;
    let cumulative_norm = |k_end: usize| -> f64 {
        // trapezoid on a fine uniform grid; the integrand vanishes at r = 0
        (1..=k_end)
            .map(|k| {
                let a = four_pi * (path[k - 1][0] * r(k - 1)).powi(2);
                let b = four_pi * (path[k][0] * r(k)).powi(2);
                0.5 * (a + b) * h
            })
            .sum()
    };
    let n_thr = cumulative_norm(k_thr);
    let k_match = k_thr.min((r_max / n_thr / h) as usize).max(2);
    let rm = r(k_match);
    let enclosed = cumulative_norm(k_match);
    let ym = path[k_match];
    // Outside the cloud V = −N/r, so E = −W(rm) − N/rm.
    let e_un = -ym[2] - enclosed / rm;
    if !(e_un < 0.0) {
        return Err(Error::NonConvergence { what: "shooting energy".into(), estimate: e_un, error_bound: f64::INFINITY });
    }
    let kappa = (-2.0 * e_un).sqrt();
    let tail_power = enclosed / kappa - 1.0;
    // ∫_rm^∞ 4π r² ψ² with the asymptotic tail, by Gauss–Laguerre-free
    // direct summation on a generous range.
    let tail_norm: f64 = {
        let mut s = 0.0;
        let dr = h;
        let mut x = rm;
        loop {
            let psi = ym[0] * (x / rm).powf(tail_power) * (-kappa * (x - rm)).exp();
            let term = four_pi * x * x * psi * psi * dr;
            s += term;
            x += dr;
            if psi < 1e-12 * ym[0] || x > rm + 200.0 {
                break;
            }
        }
        s
    };
    let norm = enclosed + tail_norm;
    let psi = path[..=k_match].iter().map(|y| y[0]).collect();
    let dpsi = path[..=k_match].iter().map(|y| y[1]).collect();
    Ok(ShootingSolution {
        energy: e_un / (norm * norm),
        w0: lo,
        norm,
        match_radius: rm,
        bisections,
        step: h,
        psi,
        dpsi,
        kappa,
        tail_power,
    })
}

impl ShootingSolution {
    fn unnormalized(&self, r: f64) -> f64 {
        let rm = self.match_radius;
        if r >= rm {
            let pm = *self.psi.last().unwrap();
            return pm * (r / rm).powf(self.tail_power) * (-self.kappa * (r - rm)).exp();
        }
        // cubic Hermite between stored points
        let h = self.step;
        let k = ((r / h) as usize).min(self.psi.len() - 2);
        let t = (r - k as f64 * h) / h;
        let (p0, p1) = (self.psi[k], self.psi[k + 1]);
        let (d0, d1) = (self.dpsi[k] * h, self.dpsi[k + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * p0 + (t3 - 2.0 * t2 + t) * d0 + (-2.0 * t3 + 3.0 * t2) * p1 + (t3 - t2) * d1
    }

    /// Normalized ground-state profile at radius `x` (natural units).
    pub fn profile(&self, x: f64) -> f64 {
        let n = self.norm;
        self.unnormalized(x / n) / (n * n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::PhysicalConstants;

    #[test]
    fn method_names() {
        assert_eq!("imaginary-time".parse::<GroundStateMethod>().unwrap(), GroundStateMethod::ImaginaryTime);
        assert_eq!("radial_shooting".parse::<GroundStateMethod>().unwrap(), GroundStateMethod::RadialShooting);
        assert!("newton".parse::<GroundStateMethod>().is_err());
    }

    #[test]
    fn no_coupling_no_ground_state() {
        let mut c = PhysicalConstants::dimensionless();
        c.g = 0.0;
        let p = SNParams::single(1.0, c).unwrap();
        assert!(ground_state(&p, GroundStateMethod::ImaginaryTime, &GroundStateOptions::default()).is_err());
        let h = SNParams::branches(vec![1.0], PhysicalConstants::dimensionless(), false).unwrap();
        assert!(natural_units(&h).is_err());
    }

    #[test]
    fn shooting_matches_reference_eigenvalue() {
        let s = radial_shooting(20.0).unwrap();
        // independent adaptive-ODE shooting: −0.1627692
        assert!((s.energy + 0.162_769_2).abs() < 2e-6, "{}", s.energy);
        assert!((s.w0 + 2.302_538).abs() < 1e-5, "{}", s.w0);
    }

    #[test]
    fn budget_exhaustion_reports_estimate() {
        let opts = GroundStateOptions { max_iter: 3, ..Default::default() };
        match ground_state(&SNParams::dimensionless(), GroundStateMethod::ImaginaryTime, &opts) {
            Err(Error::NonConvergence { estimate, .. }) => assert!(estimate.is_finite()),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
