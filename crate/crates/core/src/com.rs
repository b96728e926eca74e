//! Two particles on a line with a pair potential that depends only on
//! x₁ − x₂. The Hamiltonian separates into a free center-of-mass part and a
//! relative part, so the distribution of R = (m₁x₁ + m₂x₂)/(m₁ + m₂) evolves
//! freely whatever the strength of the pair potential.
//!
//! The wavefunction lives on a periodic n×n grid over (x₁, x₂), row index x₁.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TwoParticleField {
    pub n: usize,
    /// Side of the periodic box for each coordinate, centered on the origin.
    pub extent: f64,
    pub masses: (f64, f64),
    /// ψ(x₁ᵢ, x₂ⱼ) at index i·n + j.
    pub values: Vec<Complex64>,
    pub t: f64,
}

impl TwoParticleField {
    pub fn from_fn(n: usize, extent: f64, masses: (f64, f64), f: impl Fn(f64, f64) -> Complex64) -> Result<Self> {
        check_grid(n, extent)?;
        if !(masses.0 > 0.0 && masses.1 > 0.0 && masses.0.is_finite() && masses.1.is_finite()) {
            return Err(Error::invalid("masses must be finite and > 0"));
        }
        let h = extent / n as f64;
        let x = |i: usize| (i as f64 - (n / 2) as f64) * h;
        let mut values = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                values.push(f(x(i), x(j)));
            }
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::invalid("field contains non-finite values"));
        }
        Ok(TwoParticleField { n, extent, masses, values, t: 0.0 })
    }

    pub fn spacing(&self) -> f64 {
        self.extent / self.n as f64
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        (i as f64 - (self.n / 2) as f64) * self.spacing()
    }

    pub fn norm_sqr(&self) -> f64 {
        let h = self.spacing();
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * h * h
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

    /// Single-particle density of particle 1 (`which = 0`) or 2.
    pub fn particle_marginal(&self, which: usize) -> Marginal {
        let n = self.n;
        let h = self.spacing();
        let mut density = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                let k = if which == 0 { i } else { j };
                density[k] += self.values[i * n + j].norm_sqr() * h;
            }
        }
        Marginal { origin: self.coordinate(0), spacing: h, density }
    }

    /// ⟨p₁ + p₂⟩.
    pub fn total_momentum(&self, hbar: f64) -> f64 {
        let n = self.n;
        let mut buf = self.values.clone();
        let fft = Fft2::new(n);
        fft.process(&mut buf, false);
        let dk = 2.0 * std::f64::consts::PI / self.extent;
        let k = |i: usize| if i < n / 2 { i as f64 } else { i as f64 - n as f64 } * dk;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            for j in 0..n {
                let w = buf[i * n + j].norm_sqr();
                num += w * (k(i) + k(j));
                den += w;
            }
        }
        hbar * num / den
    }
}

fn check_grid(n: usize, extent: f64) -> Result<()> {
    if n < 4 || !n.is_power_of_two() {
        return Err(Error::invalid(format!("grid size must be a power of two >= 4, got {n}")));
    }
    if !(extent > 0.0 && extent.is_finite()) {
        return Err(Error::invalid(format!("extent must be finite and > 0, got {extent}")));
    }
    Ok(())
}

struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(n: usize) -> Self {
        let mut p = FftPlanner::new();
        Fft2 { n, forward: p.plan_fft_forward(n), inverse: p.plan_fft_inverse(n) }
    }

    fn process(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        let fft = if inverse { &self.inverse } else { &self.forward };
        fft.process(data);
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = data[i * n + j];
            }
            fft.process(&mut col);
            for i in 0..n {
                data[i * n + j] = col[i];
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PairPotential {
    /// −G m₁ m₂ / √((x₁ − x₂)² + ε²), x₁ − x₂ taken as the minimum image.
    Relative { g: f64, eps: f64 },
    /// −G m₁ m₂ / √(x₁² + ε²): particle 1 bound to a fixed point. Not a
    /// function of x₁ − x₂, so the center of mass is not free.
    External { g: f64, eps: f64 },
}

impl PairPotential {
    fn validate(&self) -> Result<()> {
        let (PairPotential::Relative { g, eps } | PairPotential::External { g, eps }) = *self;
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::invalid(format!("eps must be finite and > 0, got {eps}")));
        }
        if !(g >= 0.0 && g.is_finite()) {
            return Err(Error::invalid(format!("G must be finite and >= 0, got {g}")));
        }
        Ok(())
    }

    fn sample(&self, field: &TwoParticleField) -> Vec<f64> {
        let n = field.n;
        let (m1, m2) = field.masses;
        let l = field.extent;
        let mut v = Vec::with_capacity(n * n);
        for i in 0..n {
            let x1 = field.coordinate(i);
            for j in 0..n {
                let x2 = field.coordinate(j);
                v.push(match *self {
                    PairPotential::Relative { g, eps } => {
                        let r = x1 - x2;
                        let r = r - l * (r / l).round();
                        -g * m1 * m2 / (r * r + eps * eps).sqrt()
                    }
                    PairPotential::External { g, eps } => -g * m1 * m2 / (x1 * x1 + eps * eps).sqrt(),
                });
            }
        }
        v
    }
}

/// Strang split-step propagator for the linear two-body equation.
pub struct TwoParticleStepper {
    fft: Fft2,
    half_phase: Vec<Complex64>,
    kinetic_phase: Vec<Complex64>,
    dt: f64,
}

impl TwoParticleStepper {
    pub fn new(field: &TwoParticleField, potential: PairPotential, hbar: f64, dt: f64) -> Result<Self> {
        potential.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("dt must be finite and > 0, got {dt}")));
        }
        if !(hbar > 0.0) {
            return Err(Error::invalid("hbar must be > 0"));
        }
        if (field.norm_sqr() - 1.0).abs() > 1e-8 {
            return Err(Error::invalid("field must be normalized"));
        }
        let v = potential.sample(field);
        let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if vmax * dt / hbar > std::f64::consts::FRAC_PI_4 {
            return Err(Error::invalid(format!(
                "dt = {dt:e} too large: |V|max dt / hbar = {:.3} exceeds pi/4",
                vmax * dt / hbar
            )));
        }
        let n = field.n;
        let half_phase = v.iter().map(|v| Complex64::from_polar(1.0, -0.5 * v * dt / hbar)).collect();
        let dk = 2.0 * std::f64::consts::PI / field.extent;
        let k = |i: usize| if i < n / 2 { i as f64 } else { i as f64 - n as f64 } * dk;
        let (m1, m2) = field.masses;
        let norm = 1.0 / (n * n) as f64;
        let mut kinetic_phase = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let e = hbar * hbar * (k(i).powi(2) / (2.0 * m1) + k(j).powi(2) / (2.0 * m2));
                kinetic_phase.push(Complex64::from_polar(norm, -e * dt / hbar));
            }
        }
        Ok(TwoParticleStepper { fft: Fft2::new(n), half_phase, kinetic_phase, dt })
    }

    pub fn step(&self, field: &mut TwoParticleField) {
        for (v, p) in field.values.iter_mut().zip(&self.half_phase) {
            *v *= p;
        }
        self.fft.process(&mut field.values, false);
        for (v, p) in field.values.iter_mut().zip(&self.kinetic_phase) {
            *v *= p;
        }
        self.fft.process(&mut field.values, true);
        for (v, p) in field.values.iter_mut().zip(&self.half_phase) {
            *v *= p;
        }
        field.t += self.dt;
    }
}

pub fn evolve_two_particle(
    field: &TwoParticleField,
    potential: PairPotential,
    hbar: f64,
    dt: f64,
    n_steps: usize,
) -> Result<TwoParticleField> {
    let stepper = TwoParticleStepper::new(field, potential, hbar, dt)?;
    let mut f = field.clone();
    for _ in 0..n_steps {
        stepper.step(&mut f);
    }
    Ok(f)
}

/// Probability density sampled on a uniform 1-D grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Marginal {
    pub origin: f64,
    pub spacing: f64,
    pub density: Vec<f64>,
}

impl Marginal {
    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.density.len()).map(|i| self.origin + i as f64 * self.spacing).collect()
    }

    pub fn integral(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.spacing
    }

    pub fn l1_distance(&self, other: &Marginal) -> Result<f64> {
        if self.density.len() != other.density.len() || self.origin != other.origin || self.spacing != other.spacing {
            return Err(Error::invalid("marginals are on different grids"));
        }
        Ok(self.density.iter().zip(&other.density).map(|(a, b)| (a - b).abs()).sum::<f64>() * self.spacing)
    }

    pub fn mean_and_variance(&self) -> (f64, f64) {
        let x = self.coordinates();
        let w = self.integral();
        let mean = x.iter().zip(&self.density).map(|(x, d)| x * d).sum::<f64>() * self.spacing / w;
        let var = x.iter().zip(&self.density).map(|(x, d)| (x - mean).powi(2) * d).sum::<f64>() * self.spacing / w;
        (mean, var)
    }
}

/// Density of R = (m₁x₁ + m₂x₂)/M, deposited by cloud-in-cell onto a grid of
/// spacing h/2. For equal masses every sample lands exactly on a node.
pub fn com_marginal(field: &TwoParticleField) -> Marginal {
    let n = field.n;
    let h = field.spacing();
    let (m1, m2) = field.masses;
    let (mu1, mu2) = (m1 / (m1 + m2), m2 / (m1 + m2));
    let spacing = h / 2.0;
    let origin = field.coordinate(0);
    let bins = 2 * n;
    let mut density = vec![0.0; bins];
    for i in 0..n {
        let x1 = field.coordinate(i);
        for j in 0..n {
            let r = mu1 * x1 + mu2 * field.coordinate(j);
            let p = field.values[i * n + j].norm_sqr() * h * h / spacing;
            let u = (r - origin) / spacing;
            let b = u.floor();
            let f = u - b;
            let b = b as usize;
            if f < 1e-9 {
                density[b] += p;
            } else {
                density[b] += (1.0 - f) * p;
                density[(b + 1).min(bins - 1)] += f * p;
            }
        }
    }
    Marginal { origin, spacing, density }
}

/// Density of the minimum-image separation x₁ − x₂.
pub fn relative_marginal(field: &TwoParticleField) -> Marginal {
    let n = field.n;
    let h = field.spacing();
    let mut density = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            // index offset (i − j) wrapped into [−n/2, n/2)
            let d = (i as i64 - j as i64 + (n / 2) as i64).rem_euclid(n as i64) as usize;
            density[d] += field.values[i * n + j].norm_sqr() * h;
        }
    }
    Marginal { origin: -((n / 2) as f64) * h, spacing: h, density }
}

/// Fringe visibility (max − min)/(max + min) of the local maximum nearest
/// `center` within ±`window`, `min` the mean of the adjacent local minima.
/// A peak without a minimum on both sides has no fringe and scores 0.
pub fn visibility(marginal: &Marginal, center: f64, window: f64) -> Result<f64> {
    let d = &marginal.density;
    let (gmin, gmax) = d.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    if !(gmax > 0.0) || (gmax - gmin) <= 1e-12 * gmax {
        return Err(Error::invalid("marginal is flat: no fringes to analyze"));
    }
    let x = marginal.coordinates();
    let inside = |i: usize| (x[i] - center).abs() <= window;
    let peak = (1..d.len() - 1)
        .filter(|&i| inside(i) && d[i] >= d[i - 1] && d[i] > d[i + 1] && d[i] > 1e-6 * gmax)
        .min_by(|&a, &b| (x[a] - center).abs().total_cmp(&(x[b] - center).abs()));
    let Some(p) = peak else {
        return Ok(0.0);
    };
    let descend = |step: i64| -> Option<f64> {
        let mut i = p as i64;
        loop {
            let next = i + step;
            if next < 0 || next >= d.len() as i64 || !inside(next as usize) {
                return None;
            }
            if d[next as usize] > d[i as usize] {
                return Some(d[i as usize]);
            }
            i = next;
        }
    };
    match (descend(-1), descend(1)) {
        (Some(l), Some(r)) => {
            let min = 0.5 * (l + r);
            Ok((d[p] - min) / (d[p] + min))
        }
        _ => Ok(0.0),
    }
}

/// Two counter-propagating center-of-mass packets times a Gaussian relative
/// state, in units with ħ = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterferenceScenario {
    pub n: usize,
    pub extent: f64,
    pub masses: (f64, f64),
    /// Packets start at R = ±separation/2.
    pub separation: f64,
    /// Wavenumber of each packet along R, pointing inward.
    pub k0: f64,
    pub sigma_com: f64,
    pub sigma_rel: f64,
}

/// Default softening length in grid cells. Below about four cells the
/// sampled kernel carries enough weight at the grid's Nyquist wavenumber to
/// couple the center of mass through lattice aliasing.
pub const DEFAULT_SOFTENING_CELLS: f64 = 4.0;

impl Default for InterferenceScenario {
    fn default() -> Self {
        InterferenceScenario {
            n: 256,
            extent: 40.0,
            masses: (1.0, 1.0),
            separation: 6.0,
            k0: 3.0,
            sigma_com: 1.0,
            sigma_rel: 1.0,
        }
    }
}

/// Free Gaussian packet of mass `m` (ħ = 1) with density variance σ², started at
/// `x0` with wavenumber `k`.
fn free_packet(x: f64, t: f64, m: f64, sigma: f64, x0: f64, k: f64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    let s = Complex64::new(1.0, t / (2.0 * m * sigma * sigma));
    let v = k / m;
    let d = x - x0 - v * t;
    let pre = (2.0 * std::f64::consts::PI * sigma * sigma).powf(-0.25) / s.sqrt();
    pre * (-(d * d) / (4.0 * sigma * sigma * s) + i * (k * x - k * k * t / (2.0 * m))).exp()
}

impl InterferenceScenario {
    pub fn spacing(&self) -> f64 {
        self.extent / self.n as f64
    }

    pub fn default_eps(&self) -> f64 {
        DEFAULT_SOFTENING_CELLS * self.spacing()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.0 + self.masses.1
    }

    /// Center-of-mass amplitude a·(packet from −s/2) + b·(packet from +s/2), unnormalized.
    pub fn com_amplitude(&self, r: f64, t: f64, amplitudes: (f64, f64)) -> Complex64 {
        let m = self.total_mass();
        let x0 = self.separation / 2.0;
        free_packet(r, t, m, self.sigma_com, -x0, self.k0) * amplitudes.0
            + free_packet(r, t, m, self.sigma_com, x0, -self.k0) * amplitudes.1
    }

    /// Time at which the packet centers coincide.
    pub fn meeting_time(&self) -> f64 {
        0.5 * self.separation * self.total_mass() / self.k0
    }

    pub fn initial_field(&self, amplitudes: (f64, f64)) -> Result<TwoParticleField> {
        let (m1, m2) = self.masses;
        let m = m1 + m2;
        let mut f = TwoParticleField::from_fn(self.n, self.extent, self.masses, |x1, x2| {
            let r = (m1 * x1 + m2 * x2) / m;
            let rel = x1 - x2;
            self.com_amplitude(r, 0.0, amplitudes) * (-(rel * rel) / (4.0 * self.sigma_rel * self.sigma_rel)).exp()
        })?;
        f.normalize()?;
        Ok(f)
    }

    /// Exact free center-of-mass density on the grid of [`com_marginal`],
    /// normalized on that grid.
    pub fn analytic_com_marginal(&self, t: f64, amplitudes: (f64, f64)) -> Marginal {
        let h = self.extent / self.n as f64;
        let spacing = h / 2.0;
        let origin = -((self.n / 2) as f64) * h;
        let mut density: Vec<f64> = (0..2 * self.n)
            .map(|i| self.com_amplitude(origin + i as f64 * spacing, t, amplitudes).norm_sqr())
            .collect();
        let total: f64 = density.iter().sum::<f64>() * spacing;
        density.iter_mut().for_each(|d| *d /= total);
        Marginal { origin, spacing, density }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecouplingReport {
    pub times: Vec<f64>,
    /// L¹ distance between the interacting and free center-of-mass marginals at each output.
    pub com_l1: Vec<f64>,
    /// L¹ distance between the free run's marginal and the analytic free evolution.
    pub oracle_l1: Vec<f64>,
    /// L¹ distance between the two runs' relative-coordinate marginals at the end.
    pub relative_l1_final: f64,
    pub visibility_free: f64,
    pub visibility_interacting: f64,
    /// Largest change of the interacting run's norm over one step.
    pub max_norm_drift: f64,
    /// Center-of-mass marginals of the interacting run, one per output time.
    #[serde(skip)]
    pub com_marginals: Vec<Marginal>,
}

impl DecouplingReport {
    pub fn max_com_l1(&self) -> f64 {
        self.com_l1.iter().fold(0.0, |m, v| m.max(*v))
    }

    pub fn max_oracle_l1(&self) -> f64 {
        self.oracle_l1.iter().fold(0.0, |m, v| m.max(*v))
    }
}

/// Evolves the scenario with no interaction and with `potential` side by
/// side until the meeting time, comparing marginals every `output_every` steps.
pub fn run_decoupling(
    scenario: &InterferenceScenario,
    potential: PairPotential,
    dt: f64,
    output_every: usize,
) -> Result<DecouplingReport> {
    if output_every == 0 {
        return Err(Error::invalid("output_every must be >= 1"));
    }
    let eps = match potential {
        PairPotential::Relative { eps, .. } | PairPotential::External { eps, .. } => eps,
    };
    let mut free = scenario.initial_field((1.0, 1.0))?;
    let mut inter = free.clone();
    let free_step = TwoParticleStepper::new(&free, PairPotential::Relative { g: 0.0, eps }, 1.0, dt)?;
    let inter_step = TwoParticleStepper::new(&inter, potential, 1.0, dt)?;
    let steps = (scenario.meeting_time() / dt).round() as usize;
    let mut report = DecouplingReport {
        times: vec![],
        com_l1: vec![],
        oracle_l1: vec![],
        relative_l1_final: 0.0,
        visibility_free: 0.0,
        visibility_interacting: 0.0,
        max_norm_drift: 0.0,
        com_marginals: vec![],
    };
    let mut record = |free: &TwoParticleField, inter: &TwoParticleField| -> Result<()> {
        let a = com_marginal(free);
        let b = com_marginal(inter);
        report.times.push(inter.t);
        report.com_l1.push(a.l1_distance(&b)?);
        report.oracle_l1.push(a.l1_distance(&scenario.analytic_com_marginal(free.t, (1.0, 1.0)))?);
        report.com_marginals.push(b);
        Ok(())
    };
    record(&free, &inter)?;
    for s in 1..=steps {
        let before = inter.norm_sqr();
        free_step.step(&mut free);
        inter_step.step(&mut inter);
        report_drift(&mut report.max_norm_drift, before, inter.norm_sqr());
        if s % output_every == 0 || s == steps {
            record(&free, &inter)?;
        }
    }
    let window = scenario.separation / 2.0;
    report.visibility_free = visibility(&com_marginal(&free), 0.0, window)?;
    report.visibility_interacting = visibility(&com_marginal(&inter), 0.0, window)?;
    report.relative_l1_final = relative_marginal(&inter).l1_distance(&relative_marginal(&free))?;
    Ok(report)
}

fn report_drift(worst: &mut f64, before: f64, after: f64) {
    *worst = worst.max((after - before).abs());
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_pair(n: usize, extent: f64, sigma: f64) -> TwoParticleField {
        let mut f = TwoParticleField::from_fn(n, extent, (1.0, 1.0), |x1, x2| {
            Complex64::new((-(x1 * x1 + x2 * x2) / (4.0 * sigma * sigma)).exp(), 0.0)
        })
        .unwrap();
        f.normalize().unwrap();
        f
    }

    #[test]
    fn com_of_identical_gaussians_has_half_variance() {
        let f = gaussian_pair(128, 20.0, 1.2);
        let m = com_marginal(&f);
        assert!((m.integral() - 1.0).abs() < 1e-12);
        let (mean, var) = m.mean_and_variance();
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.2f64.powi(2) / 2.0).abs() < 1e-9, "{var}");
    }

    #[test]
    fn marginals_integrate_to_one_for_unequal_masses() {
        let mut f = TwoParticleField::from_fn(64, 16.0, (1.0, 3.0), |x1, x2| {
            Complex64::new((-(x1 - 1.0).powi(2) / 2.0 - (x2 + 0.5).powi(2)).exp(), x1 * 0.1)
        })
        .unwrap();
        f.normalize().unwrap();
        assert!((com_marginal(&f).integral() - 1.0).abs() < 1e-12);
        assert!((relative_marginal(&f).integral() - 1.0).abs() < 1e-12);
        assert!((f.particle_marginal(1).integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_packet_marginal_is_bimodal_with_packet_separation() {
        let sc = InterferenceScenario::default();
        let f = sc.initial_field((1.0, 1.0)).unwrap();
        let m = com_marginal(&f);
        let x = m.coordinates();
        let peak = |range: std::ops::Range<f64>| {
            x.iter()
                .zip(&m.density)
                .filter(|(x, _)| range.contains(x))
                .max_by(|a, b| a.1.total_cmp(b.1))
                .map(|(x, _)| *x)
                .unwrap()
        };
        let sep = peak(0.0..10.0) - peak(-10.0..0.0);
        assert!((sep - sc.separation).abs() <= m.spacing, "{sep}");
    }

    #[test]
    fn ideal_overlap_is_fully_visible() {
        let sc = InterferenceScenario::default();
        let m = sc.analytic_com_marginal(sc.meeting_time(), (1.0, 1.0));
        let v = visibility(&m, 0.0, 3.0).unwrap();
        assert!((v - 1.0).abs() < 0.02, "{v}");
        let single = sc.analytic_com_marginal(sc.meeting_time(), (1.0, 0.0));
        assert_eq!(visibility(&single, 0.0, 3.0).unwrap(), 0.0);
        let flat = Marginal { origin: 0.0, spacing: 1.0, density: vec![0.1; 10] };
        assert!(visibility(&flat, 5.0, 3.0).is_err());
    }

    #[test]
    fn free_marginals_spread_by_closed_form() {
        let sigma = 1.0;
        let f = gaussian_pair(128, 30.0, sigma);
        let out = evolve_two_particle(&f, PairPotential::Relative { g: 0.0, eps: 0.5 }, 1.0, 0.01, 300).unwrap();
        let expected = sigma * sigma * (1.0 + (out.t / (2.0 * sigma * sigma)).powi(2));
        for which in 0..2 {
            let (_, var) = out.particle_marginal(which).mean_and_variance();
            assert!((var / expected - 1.0).abs() < 0.005, "{var} vs {expected}");
        }
    }

    #[test]
    fn guards() {
        let f = gaussian_pair(32, 10.0, 1.0);
        assert!(evolve_two_particle(&f, PairPotential::Relative { g: 1.0, eps: 0.0 }, 1.0, 0.01, 1).is_err());
        assert!(evolve_two_particle(&f, PairPotential::Relative { g: 1.0, eps: 0.1 }, 1.0, 1.0, 1).is_err());
        assert!(TwoParticleField::from_fn(30, 10.0, (1.0, 1.0), |_, _| Complex64::new(1.0, 0.0)).is_err());
    }
}
