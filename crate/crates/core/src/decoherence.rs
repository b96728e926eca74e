//! Two-branch dephasing: the master equation restricted to two mass
//! configurations {X, X′}, and its stochastic unravelling.
//!
//! With the Hamiltonian set to zero on the two-branch subspace, the master
//! equation damps the off-diagonal element as exp(−t/τ_d) and leaves the
//! populations alone. The unravelling reduces the gravitational noise field to
//! a single scalar process: the relative phase θ between the branches receives
//! independent Gaussian increments of variance 2·dt/τ_d, so that
//! E[exp(iθ(t))] = exp(−t/τ_d).

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// 2×2 density matrix over {X, X′} at time `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBranchState {
    pub rho: [[Complex64; 2]; 2],
    pub t: f64,
}

impl TwoBranchState {
    pub fn new(rho: [[Complex64; 2]; 2], t: f64) -> Result<Self> {
        let s = TwoBranchState { rho, t };
        s.validate()?;
        Ok(s)
    }

    /// |ψ⟩⟨ψ| for a normalized two-component amplitude.
    pub fn pure(psi: [Complex64; 2], t: f64) -> Result<Self> {
        check_normalized(&psi)?;
        let rho = [
            [psi[0] * psi[0].conj(), psi[0] * psi[1].conj()],
            [psi[1] * psi[0].conj(), psi[1] * psi[1].conj()],
        ];
        Self::new(rho, t)
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.rho;
        let tr = r[0][0] + r[1][1];
        if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
            return Err(Error::invalid(format!("trace must be 1, got {tr}")));
        }
        if r[0][0].im.abs() > 1e-12 || r[1][1].im.abs() > 1e-12 || (r[0][1] - r[1][0].conj()).norm() > 1e-12 {
            return Err(Error::invalid("density matrix must be Hermitian"));
        }
        for p in [r[0][0].re, r[1][1].re] {
            if !(-1e-12..=1.0 + 1e-12).contains(&p) {
                return Err(Error::invalid(format!("population {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn coherence(&self) -> Complex64 {
        self.rho[0][1]
    }
}

/// Closed-form solution of the two-branch master equation from `state.t` to `t_final`.
pub fn evolve_master(state: &TwoBranchState, tau_d: f64, t_final: f64) -> Result<TwoBranchState> {
    if !(tau_d > 0.0) {
        return Err(Error::invalid(format!("tau_d must be > 0, got {tau_d}")));
    }
    if !(t_final >= state.t) {
        return Err(Error::invalid("t_final must not precede the state time"));
    }
    let damp = (-(t_final - state.t) / tau_d).exp();
    let mut rho = state.rho;
    rho[0][1] *= damp;
    rho[1][0] *= damp;
    Ok(TwoBranchState { rho, t: t_final })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub tau_d: f64,
    pub dt: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_d > 0.0 && self.tau_d.is_finite()) {
            return Err(Error::invalid(format!("tau_d must be finite and > 0, got {}", self.tau_d)));
        }
        if !(self.dt > 0.0) {
            return Err(Error::invalid(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.dt > self.tau_d / 100.0 * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "dt = {} too large: must be <= tau_d/100 = {}",
                self.dt,
                self.tau_d / 100.0
            )));
        }
        Ok(())
    }
}

fn check_normalized(psi: &[Complex64; 2]) -> Result<()> {
    let n = psi[0].norm_sqr() + psi[1].norm_sqr();
    if (n - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!("state must be normalized, |psi|^2 = {n}")));
    }
    Ok(())
}

/// One stochastic trajectory on the grid `t_k = k·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// Accumulated relative phase θ(t_k).
    pub phase: Vec<f64>,
    pub states: Vec<[Complex64; 2]>,
}

impl Trajectory {
    pub fn coherence(&self, k: usize) -> Complex64 {
        let s = &self.states[k];
        s[0] * s[1].conj()
    }
}

/// Integrates the scalar-noise unravelling with trajectory stream `index`
/// of `spec.seed`.
///
/// The second branch picks up exp(iθ); applying the phase as a unit-modulus
/// factor keeps each amplitude's modulus exactly constant.
pub fn sample_trajectory_indexed(
    spec: &NoiseSpec,
    psi0: [Complex64; 2],
    t_final: f64,
    index: u64,
) -> Result<Trajectory> {
    spec.validate()?;
    check_normalized(&psi0)?;
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::invalid("t_final must be finite and >= 0"));
    }
    let steps = (t_final / spec.dt).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index);
    let sd = (2.0 * spec.dt / spec.tau_d).sqrt();
    let mut times = Vec::with_capacity(steps + 1);
    let mut phase = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut theta = 0.0;
    for k in 0..=steps {
        if k > 0 {
            let xi: f64 = StandardNormal.sample(&mut rng);
            theta += sd * xi;
        }
        times.push(k as f64 * spec.dt);
        phase.push(theta);
        states.push([psi0[0], psi0[1] * Complex64::from_polar(1.0, theta)]);
    }
    Ok(Trajectory { times, phase, states })
}

pub fn sample_trajectory(spec: &NoiseSpec, psi0: [Complex64; 2], t_final: f64) -> Result<Trajectory> {
    sample_trajectory_indexed(spec, psi0, t_final, 0)
}

/// `count` trajectories; trajectory `i` uses stream `i`, so the ensemble does
/// not depend on scheduling.
pub fn sample_ensemble(spec: &NoiseSpec, psi0: [Complex64; 2], t_final: f64, count: usize) -> Result<Vec<Trajectory>> {
    spec.validate()?;
    (0..count as u64)
        .into_par_iter()
        .map(|i| sample_trajectory_indexed(spec, psi0, t_final, i))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceSeries {
    pub times: Vec<f64>,
    pub mean: Vec<Complex64>,
    /// Standard error of the complex mean, sqrt(E|c − mean|² / N).
    pub stderr: Vec<f64>,
}

/// Mean of ψ₀ψ₁* over trajectories at each time, with its standard error.
pub fn ensemble_offdiagonal(trajectories: &[Trajectory]) -> Result<CoherenceSeries> {
    if trajectories.len() < 2 {
        return Err(Error::invalid("need at least two trajectories"));
    }
    let times = trajectories[0].times.clone();
    if trajectories.iter().any(|t| t.times != times) {
        return Err(Error::invalid("trajectories are on different time grids"));
    }
    let n = trajectories.len() as f64;
    let mut mean = Vec::with_capacity(times.len());
    let mut stderr = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        let m = trajectories.iter().map(|t| t.coherence(k)).sum::<Complex64>() / n;
        let var = trajectories.iter().map(|t| (t.coherence(k) - m).norm_sqr()).sum::<f64>() / (n - 1.0);
        mean.push(m);
        stderr.push((var / n).sqrt());
    }
    Ok(CoherenceSeries { times, mean, stderr })
}

/// Least-squares slope of −log|mean| against t over points whose magnitude
/// exceeds five standard errors.
pub fn fit_decay_rate(series: &CoherenceSeries) -> Result<f64> {
    let pts: Vec<(f64, f64)> = series
        .times
        .iter()
        .zip(&series.mean)
        .zip(&series.stderr)
        .filter(|((_, m), se)| m.norm() > 5.0 * **se && m.norm() > 0.0)
        .map(|((t, m), _)| (*t, m.norm().ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::invalid("not enough resolved points to fit a decay rate"));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("degenerate time grid"));
    }
    Ok(-sxy / sxx)
}
