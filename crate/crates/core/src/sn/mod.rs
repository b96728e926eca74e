//! Schrödinger–Newton solver.
//!
//! A single particle feels V = m φ[m|ψ|²] with φ the Newtonian potential of
//! its own probability cloud. With N branches (independent-particle fields)
//! branch s feels V_s = m_s Σ_u φ[m_u |ψ_u|²]; the u = s term is the
//! self-interaction, switched by [`SNParams::include_self`]. Without it the
//! equations are the ordinary Hartree equations.
//!
//! Fields live on a radial grid (spherically symmetric states) or on a
//! periodic 3-D Cartesian grid; Poisson solves are isolated in both cases.

mod evolve;
mod ground;
mod poisson;
mod spectral;

use num_complex::Complex64;
use serde::Serialize;

pub use evolve::{evolve_branches, evolve_split_step, SplitStepper};
pub use ground::{
    ground_state, natural_units, radial_shooting, GroundState, GroundStateMethod, GroundStateOptions, NaturalUnits,
    ShootingSolution,
};
pub use poisson::{solve_poisson, PoissonSolver, CELL_AVERAGED_INVERSE_DISTANCE};

use crate::error::{Error, Result};
use crate::units::PhysicalConstants;
use spectral::Spectral;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Grid {
    /// Points r_j = j·r_max/n for j = 1..n−1; ψ vanishes at r_max.
    Radial { n: usize, r_max: f64 },
    /// Periodic n³ grid over a cube of side `extent` centered on the origin,
    /// x_i = (i − n/2)·h.
    Cartesian { n: usize, extent: f64 },
}

impl Grid {
    pub fn radial(n: usize, r_max: f64) -> Result<Self> {
        let g = Grid::Radial { n, r_max };
        g.validate()?;
        Ok(g)
    }

    pub fn cartesian(n: usize, extent: f64) -> Result<Self> {
        let g = Grid::Cartesian { n, extent };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let (n, len) = match *self {
            Grid::Radial { n, r_max } => (n, r_max),
            Grid::Cartesian { n, extent } => (n, extent),
        };
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::invalid(format!("grid size must be a power of two >= 4, got {n}")));
        }
        if !(len > 0.0 && len.is_finite()) {
            return Err(Error::invalid(format!("grid length must be finite and > 0, got {len}")));
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        match *self {
            Grid::Radial { n, .. } | Grid::Cartesian { n, .. } => n,
        }
    }

    pub fn spacing(&self) -> f64 {
        match *self {
            Grid::Radial { n, r_max } => r_max / n as f64,
            Grid::Cartesian { n, extent } => extent / n as f64,
        }
    }

    pub fn len(&self) -> usize {
        match *self {
            Grid::Radial { n, .. } => n - 1,
            Grid::Cartesian { n, .. } => n * n * n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sample positions; radial points are reported as (r, 0, 0).
    pub fn points(&self) -> Vec<[f64; 3]> {
        let h = self.spacing();
        match *self {
            Grid::Radial { n, .. } => (1..n).map(|j| [j as f64 * h, 0.0, 0.0]).collect(),
            Grid::Cartesian { n, .. } => {
                let x = |i: usize| (i as f64 - (n / 2) as f64) * h;
                let mut out = Vec::with_capacity(n * n * n);
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            out.push([x(i), x(j), x(k)]);
                        }
                    }
                }
                out
            }
        }
    }

    pub fn radii(&self) -> Vec<f64> {
        self.points().iter().map(|p| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()).collect()
    }

    /// Quadrature weights: 4πr²h (radial) or h³ (Cartesian).
    pub fn weights(&self) -> Vec<f64> {
        let h = self.spacing();
        match *self {
            Grid::Radial { n, .. } => (1..n)
                .map(|j| 4.0 * std::f64::consts::PI * (j as f64 * h).powi(2) * h)
                .collect(),
            Grid::Cartesian { n, .. } => vec![h * h * h; n * n * n],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
    pub t: f64,
}

impl WaveField {
    pub fn new(grid: Grid, values: Vec<Complex64>, t: f64) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::invalid(format!("expected {} values, got {}", grid.len(), values.len())));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::invalid("wave field contains non-finite values"));
        }
        Ok(WaveField { grid, values, t })
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 3]) -> Complex64) -> Result<Self> {
        let values = grid.points().into_iter().map(f).collect();
        Self::new(grid, values, 0.0)
    }

    /// Normalized Gaussian centered on the origin whose density has variance
    /// σ² along each axis.
    pub fn gaussian(grid: Grid, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::invalid("sigma must be > 0"));
        }
        let mut f = Self::from_fn(grid, |p| {
            let r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
            Complex64::new((-r2 / (4.0 * sigma * sigma)).exp(), 0.0)
        })?;
        f.normalize()?;
        Ok(f)
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.grid.weights().iter().zip(&self.values).map(|(w, v)| w * v.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm_sqr();
        if !(n > 0.0) {
            return Err(Error::invalid("cannot normalize a zero field"));
        }
        let s = 1.0 / n.sqrt();
        self.values.iter_mut().for_each(|v| *v *= s);
        Ok(())
    }

    /// ∫ ψ₁* ψ₂ d³x.
    pub fn inner(&self, other: &WaveField) -> Complex64 {
        self.grid
            .weights()
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(w, (a, b))| a.conj() * b * *w)
            .sum()
    }

    /// L² distance ‖ψ₁ − ψ₂‖.
    pub fn distance(&self, other: &WaveField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::invalid("fields are on different grids"));
        }
        Ok(self
            .grid
            .weights()
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(w, (a, b))| w * (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    /// Root-mean-square spread along one axis, √(⟨|x − ⟨x⟩|²⟩/3).
    pub fn width(&self) -> f64 {
        let w = self.grid.weights();
        let pts = self.grid.points();
        let norm: f64 = w.iter().zip(&self.values).map(|(w, v)| w * v.norm_sqr()).sum();
        match self.grid {
            Grid::Radial { .. } => {
                let r2: f64 = w.iter().zip(&pts).zip(&self.values).map(|((w, p), v)| w * p[0] * p[0] * v.norm_sqr()).sum();
                (r2 / norm / 3.0).sqrt()
            }
            Grid::Cartesian { .. } => {
                let mut mean = [0.0; 3];
                let mut sq = 0.0;
                for ((w, p), v) in w.iter().zip(&pts).zip(&self.values) {
                    let d = w * v.norm_sqr();
                    for a in 0..3 {
                        mean[a] += d * p[a];
                        sq += d * p[a] * p[a];
                    }
                }
                let m2: f64 = mean.iter().map(|m| (m / norm).powi(2)).sum();
                ((sq / norm - m2) / 3.0).sqrt()
            }
        }
    }

    /// Cyclic shift by whole cells (Cartesian grids only).
    pub fn shifted(&self, cells: [i64; 3]) -> Result<WaveField> {
        let Grid::Cartesian { n, .. } = self.grid else {
            return Err(Error::invalid("shifts are defined on Cartesian grids only"));
        };
        let wrap = |i: usize, s: i64| (i as i64 + s).rem_euclid(n as i64) as usize;
        let mut values = vec![Complex64::new(0.0, 0.0); self.values.len()];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let dst = (wrap(i, cells[0]) * n + wrap(j, cells[1])) * n + wrap(k, cells[2]);
                    values[dst] = self.values[(i * n + j) * n + k];
                }
            }
        }
        Ok(WaveField { grid: self.grid, values, t: self.t })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SNParams {
    /// Particle mass for single-particle runs.
    pub m: f64,
    pub constants: PhysicalConstants,
    /// Keep the u = s term in the branch potentials.
    pub include_self: bool,
    /// Branch masses for N-branch runs; `[m]` for a single particle.
    pub masses: Vec<f64>,
}

impl SNParams {
    /// The single-particle Schrödinger–Newton equation.
    pub fn single(m: f64, constants: PhysicalConstants) -> Result<Self> {
        let p = SNParams { m, constants, include_self: true, masses: vec![m] };
        p.validate()?;
        Ok(p)
    }

    /// ħ = m = G = 1.
    pub fn dimensionless() -> Self {
        SNParams { m: 1.0, constants: PhysicalConstants::dimensionless(), include_self: true, masses: vec![1.0] }
    }

    pub fn branches(masses: Vec<f64>, constants: PhysicalConstants, include_self: bool) -> Result<Self> {
        let m = masses.first().copied().unwrap_or(0.0);
        let p = SNParams { m, constants, include_self, masses };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(Error::invalid(format!("mass must be finite and > 0, got {}", self.m)));
        }
        if self.masses.is_empty() {
            return Err(Error::invalid("at least one branch mass is required"));
        }
        if let Some(bad) = self.masses.iter().find(|m| !(**m > 0.0 && m.is_finite())) {
            return Err(Error::invalid(format!("branch masses must be finite and > 0, got {bad}")));
        }
        // G = 0 is allowed here: free evolution is a useful reference.
        let pc = &self.constants;
        if !([pc.hbar, pc.g, pc.c].iter().all(|v| v.is_finite()) && pc.hbar > 0.0 && pc.g >= 0.0 && pc.c > 0.0) {
            return Err(Error::invalid("constants must be finite with hbar, c > 0 and G >= 0"));
        }
        Ok(())
    }
}

/// Evaluates branch potentials and Hamiltonians on one grid, caching plans.
pub(crate) struct Operators {
    pub grid: Grid,
    pub spectral: Spectral,
    pub poisson: PoissonSolver,
}

impl Operators {
    pub fn new(grid: &Grid) -> Self {
        Operators { grid: *grid, spectral: Spectral::new(grid), poisson: PoissonSolver::new(grid) }
    }

    /// φ_u = potential per unit mass of m_u|ψ_u|², for every branch.
    fn branch_potentials(&self, fields: &[WaveField], params: &SNParams) -> Result<Vec<Vec<f64>>> {
        fields
            .iter()
            .zip(&params.masses)
            .map(|(f, m)| {
                let d: Vec<f64> = f.values.iter().map(|v| m * v.norm_sqr()).collect();
                self.poisson.solve(&d, params.constants.g)
            })
            .collect()
    }

    /// V_s for every branch s.
    pub fn potentials(&self, fields: &[WaveField], params: &SNParams) -> Result<Vec<Vec<f64>>> {
        check_fields(fields, params)?;
        let len = self.grid.len();
        let n = fields.len();
        if n == 1 && !params.include_self {
            return Ok(vec![vec![0.0; len]]);
        }
        let phi = self.branch_potentials(fields, params)?;
        let mut total = vec![0.0; len];
        for p in &phi {
            total.iter_mut().zip(p).for_each(|(t, v)| *t += v);
        }
        Ok((0..n)
            .map(|s| {
                let ms = params.masses[s];
                if params.include_self {
                    total.iter().map(|t| ms * t).collect()
                } else {
                    // Summing u ≠ s directly keeps N = 2 free of cancellation.
                    (0..len)
                        .map(|i| ms * (0..n).filter(|u| *u != s).map(|u| phi[u][i]).sum::<f64>())
                        .collect()
                }
            })
            .collect())
    }

    /// (ħ²/2m) (−∇²) ψ.
    pub fn kinetic(&self, psi: &[Complex64], m: f64, hbar: f64) -> Vec<Complex64> {
        let mut out = psi.to_vec();
        let c = hbar * hbar / (2.0 * m);
        self.spectral.apply_real(&mut out, |k2| c * k2);
        out
    }
}

fn check_fields(fields: &[WaveField], params: &SNParams) -> Result<()> {
    params.validate()?;
    if fields.is_empty() {
        return Err(Error::invalid("no fields given"));
    }
    if fields.len() != params.masses.len() {
        return Err(Error::invalid(format!(
            "{} fields but {} branch masses",
            fields.len(),
            params.masses.len()
        )));
    }
    if fields.iter().any(|f| f.grid != fields[0].grid) {
        return Err(Error::invalid("fields are on different grids"));
    }
    Ok(())
}

/// V_s(x) = −G m_s Σ_u m_u ∫ |ψ_u(x′)|² / |x − x′| d³x′, the u = s term kept
/// only when `params.include_self` is set.
pub fn effective_potential(fields: &[WaveField], params: &SNParams, s: usize) -> Result<Vec<f64>> {
    if s >= fields.len() {
        return Err(Error::invalid(format!("branch index {s} out of range for {} fields", fields.len())));
    }
    check_fields(fields, params)?;
    for f in fields {
        if (f.norm_sqr() - 1.0).abs() > 1e-8 {
            return Err(Error::invalid("fields must be normalized"));
        }
    }
    let ops = Operators::new(&fields[0].grid);
    Ok(ops.potentials(fields, params)?.swap_remove(s))
}

/// Newtonian potential per unit mass sourced by the branch clouds, φ = Σ_u φ[m_u|ψ_u|²].
pub fn gravitational_potential(fields: &[WaveField], params: &SNParams) -> Result<Vec<f64>> {
    check_fields(fields, params)?;
    let mut d = vec![0.0; fields[0].grid.len()];
    for (f, m) in fields.iter().zip(&params.masses) {
        d.iter_mut().zip(&f.values).for_each(|(d, v)| *d += m * v.norm_sqr());
    }
    solve_poisson(&d, &fields[0].grid, params.constants.g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Energy {
    pub kinetic: f64,
    /// ½ Σ_s ⟨V_s⟩, each pair counted once.
    pub potential: f64,
    pub total: f64,
}

/// Conserved energy functional Σ_s ⟨T_s⟩ + ½ Σ_s ⟨V_s⟩.
pub fn energy(fields: &[WaveField], params: &SNParams) -> Result<Energy> {
    check_fields(fields, params)?;
    let ops = Operators::new(&fields[0].grid);
    let v = ops.potentials(fields, params)?;
    Ok(energy_with(&ops, fields, params, &v))
}

pub(crate) fn energy_with(ops: &Operators, fields: &[WaveField], params: &SNParams, v: &[Vec<f64>]) -> Energy {
    let w = ops.grid.weights();
    let mut kinetic = 0.0;
    let mut potential = 0.0;
    for (s, f) in fields.iter().enumerate() {
        let t = ops.kinetic(&f.values, params.masses[s], params.constants.hbar);
        kinetic += w.iter().zip(f.values.iter().zip(&t)).map(|(w, (a, b))| w * (a.conj() * b).re).sum::<f64>();
        potential += 0.5 * w.iter().zip(&f.values).zip(&v[s]).map(|((w, a), v)| w * v * a.norm_sqr()).sum::<f64>();
    }
    Energy { kinetic, potential, total: kinetic + potential }
}

/// ψ̂_s = exp(−i c_s t/ħ) ψ_s, the rephasing that removes separation
/// constants summing to zero.
pub fn gauge_rephase(fields: &[WaveField], cs: &[f64], hbar: f64) -> Result<Vec<WaveField>> {
    if cs.len() != fields.len() {
        return Err(Error::invalid(format!("{} constants for {} fields", cs.len(), fields.len())));
    }
    if cs.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid("separation constants must be finite"));
    }
    let sum: f64 = cs.iter().sum();
    let scale: f64 = cs.iter().map(|c| c.abs()).sum();
    if sum.abs() > 1e-12 * scale {
        return Err(Error::invalid(format!("separation constants must sum to zero, sum = {sum:e}")));
    }
    Ok(fields
        .iter()
        .zip(cs)
        .map(|(f, c)| {
            let ph = Complex64::from_polar(1.0, -c * f.t / hbar);
            WaveField { grid: f.grid, values: f.values.iter().map(|v| v * ph).collect(), t: f.t }
        })
        .collect())
}

/// ‖F(x_s, t)‖ with F = −iħ ∂ψ_s/∂t + (T_s + V_s) ψ_s, the time derivative
/// taken as a central difference between `before` and `after`.
pub fn residual_norm(
    before: &[WaveField],
    at: &[WaveField],
    after: &[WaveField],
    params: &SNParams,
    s: usize,
) -> Result<f64> {
    if s >= at.len() || before.len() != at.len() || after.len() != at.len() {
        return Err(Error::invalid("branch index or field counts inconsistent"));
    }
    let dt = after[s].t - before[s].t;
    if !(dt > 0.0) || ((at[s].t - before[s].t) - (after[s].t - at[s].t)).abs() > 1e-9 * dt {
        return Err(Error::invalid("times must be equally spaced and increasing"));
    }
    check_fields(at, params)?;
    let ops = Operators::new(&at[0].grid);
    let v = ops.potentials(at, params)?.swap_remove(s);
    let hbar = params.constants.hbar;
    let t = ops.kinetic(&at[s].values, params.masses[s], hbar);
    let w = ops.grid.weights();
    let mut sq = 0.0;
    for i in 0..w.len() {
        let dpsi = (after[s].values[i] - before[s].values[i]) / dt;
        let f = Complex64::new(0.0, -hbar) * dpsi + t[i] + at[s].values[i] * v[i];
        sq += w[i] * f.norm_sqr();
    }
    Ok(sq.sqrt())
}
