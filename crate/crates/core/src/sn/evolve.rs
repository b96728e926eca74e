use num_complex::Complex64;
use rayon::prelude::*;

use super::{check_fields, energy_with, Energy, Operators, SNParams, WaveField};
use crate::error::{Error, Result};

/// Strang split-step integrator for the coupled branch equations.
///
/// A step is: half potential phase, full kinetic step in spectral space,
/// rebuild the potentials from the new densities, half potential phase.
/// The phase steps do not change |ψ|², so the potentials built at the end
/// of one step serve the first half of the next and each step costs one
/// rebuild.
pub struct SplitStepper {
    ops: Operators,
    params: SNParams,
    dt: f64,
    potentials: Vec<Vec<f64>>,
}

impl SplitStepper {
    pub fn new(fields: &[WaveField], params: &SNParams, dt: f64) -> Result<Self> {
        check_fields(fields, params)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("dt must be finite and > 0, got {dt}")));
        }
        for f in fields {
            if (f.norm_sqr() - 1.0).abs() > 1e-8 {
                return Err(Error::invalid("fields must be normalized"));
            }
        }
        let ops = Operators::new(&fields[0].grid);
        let potentials = ops.potentials(fields, params)?;
        let s = SplitStepper { ops, params: params.clone(), dt, potentials };
        s.check_cfl()?;
        Ok(s)
    }

    fn check_cfl(&self) -> Result<()> {
        let vmax = self.potentials.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        let phase = vmax * self.dt / self.params.constants.hbar;
        if phase > std::f64::consts::FRAC_PI_4 {
            return Err(Error::invalid(format!(
                "dt = {:e} too large: |V|max dt / hbar = {phase:.3} exceeds pi/4",
                self.dt
            )));
        }
        Ok(())
    }

    fn potential_half_step(&self, fields: &mut [WaveField]) {
        let c = -0.5 * self.dt / self.params.constants.hbar;
        fields.par_iter_mut().zip(&self.potentials).for_each(|(f, v)| {
            for (psi, v) in f.values.iter_mut().zip(v) {
                *psi *= Complex64::from_polar(1.0, c * v);
            }
        });
    }

    pub fn step(&mut self, fields: &mut [WaveField]) -> Result<()> {
        if fields.len() != self.potentials.len() || fields.iter().any(|f| f.grid != self.ops.grid) {
            return Err(Error::invalid("fields do not match the stepper"));
        }
        self.potential_half_step(fields);
        let hbar = self.params.constants.hbar;
        let dt = self.dt;
        let ops = &self.ops;
        fields.par_iter_mut().zip(&self.params.masses).for_each(|(f, m)| {
            let c = hbar * dt / (2.0 * m);
            ops.spectral.apply(&mut f.values, |k2| Complex64::from_polar(1.0, -c * k2));
        });
        self.potentials = self.ops.potentials(fields, &self.params)?;
        self.check_cfl()?;
        self.potential_half_step(fields);
        for f in fields.iter_mut() {
            f.t += dt;
        }
        Ok(())
    }

    /// Energy functional of `fields`, reusing the cached potentials when they
    /// belong to the current densities.
    pub fn energy(&self, fields: &[WaveField]) -> Energy {
        energy_with(&self.ops, fields, &self.params, &self.potentials)
    }

    pub fn potentials(&self) -> &[Vec<f64>] {
        &self.potentials
    }
}

/// Evolves N coupled branches for `n_steps` steps of size `dt`.
pub fn evolve_branches(fields: &[WaveField], params: &SNParams, dt: f64, n_steps: usize) -> Result<Vec<WaveField>> {
    let mut out = fields.to_vec();
    let mut stepper = SplitStepper::new(&out, params, dt)?;
    for _ in 0..n_steps {
        stepper.step(&mut out)?;
    }
    Ok(out)
}

/// Single-particle evolution under `params` (one branch mass).
pub fn evolve_split_step(field: &WaveField, params: &SNParams, dt: f64, n_steps: usize) -> Result<WaveField> {
    Ok(evolve_branches(std::slice::from_ref(field), params, dt, n_steps)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sn::Grid;
    use crate::units::PhysicalConstants;

    #[test]
    fn rejects_bad_dt() {
        let f = WaveField::gaussian(Grid::radial(128, 20.0).unwrap(), 1.0).unwrap();
        let p = SNParams::dimensionless();
        assert!(evolve_split_step(&f, &p, 0.0, 1).is_err());
        assert!(evolve_split_step(&f, &p, 50.0, 1).is_err());
        assert!(evolve_split_step(&f, &p, 0.05, 2).is_ok());
    }

    #[test]
    fn norm_conserved_each_step() {
        let f = WaveField::gaussian(Grid::radial(256, 30.0).unwrap(), 1.5).unwrap();
        let p = SNParams::dimensionless();
        let mut fields = vec![f];
        let mut st = SplitStepper::new(&fields, &p, 0.05).unwrap();
        for _ in 0..200 {
            let before = fields[0].norm_sqr();
            st.step(&mut fields).unwrap();
            assert!((fields[0].norm_sqr() - before).abs() < 1e-12);
        }
    }

    #[test]
    fn free_gaussian_matches_spreading_law() {
        let grid = Grid::radial(256, 24.0).unwrap();
        let f = WaveField::gaussian(grid, 1.0).unwrap();
        let mut c = PhysicalConstants::dimensionless();
        c.g = 0.0;
        let p = SNParams::single(1.0, c).unwrap();
        let out = evolve_split_step(&f, &p, 0.01, 300).unwrap();
        let t = out.t;
        let expected = (1.0 + (t / 2.0f64).powi(2)).sqrt();
        assert!((out.width() / expected - 1.0).abs() < 1e-6, "{} vs {expected}", out.width());
    }
}
