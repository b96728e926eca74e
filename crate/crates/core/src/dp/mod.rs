//! Reduction energy Δ = G ∬ [ρ−ρ′](r) [ρ−ρ′](r′) / |r−r′| and reduction time τ_d.
//!
//! Three routes to Δ:
//! * [`delta_full`] integrates the difference density directly, by a voxel
//!   double sum or by Monte Carlo;
//! * [`delta_cube_quadratic`] is the closed-form leading order in the
//!   displacement for a uniform cube, Δ = (4π/3) G d² S³ ρ₀²;
//! * [`delta_surface_expansion`] evaluates the same leading order through the
//!   surface-layer integral I₁ = 2 S³ I, with I computed numerically.

mod integral;
mod mc;
mod voxel;

use serde::{Serialize, Serializer};

pub use integral::{integral_i, reduced_kernel, IntegralMethod};
pub use voxel::{SELF_CELL_KERNEL, delta_voxel};
pub use mc::{delta_mc, support_regions, SupportRegion};

use crate::error::{Error, Result};
use crate::mass::{build_displaced_cube, Axis, Shape, SuperposedPair};
use crate::units::{to_si, PhysicalConstants, Quantity, Unit};

/// Relative displacement above which the leading-order expansion is flagged.
pub const EXPANSION_VALIDITY: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    /// τ_d = ħ/Δ.
    #[default]
    Penrose,
    /// τ_d = 2ħ/Δ.
    Diosi,
}

impl std::str::FromStr for Convention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "penrose" => Ok(Convention::Penrose),
            "diosi" => Ok(Convention::Diosi),
            other => Err(Error::invalid(format!("unknown convention {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMethod {
    Mc,
    Voxel,
    Quadratic,
    SurfaceExpansion,
}

/// How [`delta_full`] integrates the difference density.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FullMethod {
    Mc { samples: usize, seed: u64 },
    Voxel { cells_per_side: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaResult {
    /// Δ in joules.
    pub delta: f64,
    /// Δ in units of ħc cm⁻¹.
    pub delta_hbar_c_per_cm: f64,
    #[serde(serialize_with = "finite_or_inf")]
    pub tau_d: f64,
    pub convention: Convention,
    pub method: DeltaMethod,
    /// Monte Carlo standard error of Δ in joules; zero for deterministic methods.
    pub stderr: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// JSON has no infinity; write it as the string `"+inf"`.
pub fn finite_or_inf<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if *v > 0.0 {
        s.serialize_str("+inf")
    } else if *v < 0.0 {
        s.serialize_str("-inf")
    } else {
        s.serialize_str("nan")
    }
}

impl DeltaResult {
    fn new(delta: f64, stderr: f64, method: DeltaMethod, convention: Convention, pc: &PhysicalConstants) -> Result<Self> {
        // Monte Carlo may dip below zero within its error bar
        let tau_d = tau_from_delta(delta.max(0.0), pc.hbar, convention)?;
        Ok(DeltaResult {
            delta,
            delta_hbar_c_per_cm: delta / pc.hbar_c_per_cm(),
            tau_d,
            convention,
            method,
            stderr,
            warnings: Vec::new(),
        })
    }
}

/// A uniform cube of side `side` and mass `mass`, superposed with itself
/// displaced by `d` along `axis`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CubeSetup {
    pub side: f64,
    pub mass: f64,
    pub d: f64,
    pub axis: Axis,
}

impl CubeSetup {
    /// Mirror experiment: S = 10⁻³ cm, d = 10⁻¹¹ cm, 5×10⁻¹² kg.
    pub fn mirror() -> Self {
        CubeSetup {
            side: to_si(Quantity::new(1e-3, Unit::Centimeter)).value,
            mass: 5e-12,
            d: to_si(Quantity::new(1e-11, Unit::Centimeter)).value,
            axis: Axis::Z,
        }
    }

    pub fn density(&self) -> f64 {
        self.mass / self.side.powi(3)
    }

    pub fn pair(&self) -> Result<SuperposedPair> {
        build_displaced_cube(self.side, self.density(), self.d, self.axis)
    }

    pub fn quadratic(&self, pc: &PhysicalConstants, convention: Convention) -> Result<DeltaResult> {
        delta_cube_quadratic(self.side, self.density(), self.d, pc, convention)
    }
}

/// τ_d = ħ/Δ (Penrose) or 2ħ/Δ (Diósi); Δ = 0 gives +∞.
pub fn tau_from_delta(delta: f64, hbar: f64, convention: Convention) -> Result<f64> {
    if delta.is_nan() || delta < 0.0 {
        return Err(Error::invalid(format!("reduction energy must be >= 0, got {delta}")));
    }
    if delta == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(match convention {
        Convention::Penrose => hbar / delta,
        Convention::Diosi => 2.0 * hbar / delta,
    })
}

fn check_cube_params(side: f64, rho0: f64, d: f64) -> Result<()> {
    if !(side.is_finite() && side > 0.0) {
        return Err(Error::invalid(format!("cube side must be > 0, got {side}")));
    }
    if !(rho0.is_finite() && rho0 > 0.0) {
        return Err(Error::invalid(format!("density must be > 0, got {rho0}")));
    }
    if !d.is_finite() {
        return Err(Error::invalid("displacement must be finite"));
    }
    Ok(())
}

fn expansion_warning(side: f64, d: f64) -> Option<String> {
    let ratio = d.abs() / side;
    (ratio > EXPANSION_VALIDITY).then(|| {
        format!("|d|/S = {ratio:.3} exceeds {EXPANSION_VALIDITY}; the quadratic expansion is outside its validity range")
    })
}

/// Leading order in `d` for a uniform cube: Δ = (4π/3) G d² S³ ρ₀².
pub fn delta_cube_quadratic(
    side: f64,
    rho0: f64,
    d: f64,
    pc: &PhysicalConstants,
    convention: Convention,
) -> Result<DeltaResult> {
    check_cube_params(side, rho0, d)?;
    let delta = 4.0 * std::f64::consts::PI / 3.0 * pc.g * d * d * side.powi(3) * rho0 * rho0;
    let mut r = DeltaResult::new(delta, 0.0, DeltaMethod::Quadratic, convention, pc)?;
    r.warnings.extend(expansion_warning(side, d));
    Ok(r)
}

/// Recognizes a pair of equal uniform cubes offset along a single axis and
/// returns `(side, rho0, |d|)`.
pub fn displaced_cube_parameters(pair: &SuperposedPair) -> Result<(f64, f64, f64)> {
    let not_cube = || Error::invalid("pair is not two equal uniform cubes displaced along one axis");
    let (Shape::Box { sides: sa }, Shape::Box { sides: sb }) = (&pair.a.shape, &pair.b.shape) else {
        return Err(not_cube());
    };
    let side = sa[0];
    let same = |x: f64, y: f64| (x - y).abs() <= 1e-12 * side;
    if !(sa.iter().chain(sb.iter()).all(|&s| same(s, side))) || pair.a.density0 != pair.b.density0 {
        return Err(not_cube());
    }
    let offset: Vec<f64> = (0..3).map(|i| pair.b.origin[i] - pair.a.origin[i]).collect();
    let moved: Vec<usize> = (0..3).filter(|&i| !same(offset[i], 0.0)).collect();
    let d = match moved.as_slice() {
        [] => 0.0,
        [i] => offset[*i].abs(),
        _ => return Err(not_cube()),
    };
    Ok((side, pair.a.density0, d))
}

/// Δ = G d² ρ₀² I₁ with I₁ = 2 S³ I, I from the reduced double integral.
pub fn delta_surface_expansion(
    pair: &SuperposedPair,
    pc: &PhysicalConstants,
    convention: Convention,
) -> Result<DeltaResult> {
    let (side, rho0, d) = displaced_cube_parameters(pair)?;
    let i = integral_i(IntegralMethod::Double)?.value;
    let i1 = 2.0 * side.powi(3) * i;
    let delta = pc.g * d * d * rho0 * rho0 * i1;
    let mut r = DeltaResult::new(delta, 0.0, DeltaMethod::SurfaceExpansion, convention, pc)?;
    r.warnings.extend(expansion_warning(side, d));
    Ok(r)
}

/// Δ by direct integration of the difference density.
pub fn delta_full(
    pair: &SuperposedPair,
    method: FullMethod,
    pc: &PhysicalConstants,
    convention: Convention,
) -> Result<DeltaResult> {
    match method {
        FullMethod::Voxel { cells_per_side } => {
            let delta = delta_voxel(pair, cells_per_side, pc.g)?;
            DeltaResult::new(delta, 0.0, DeltaMethod::Voxel, convention, pc)
        }
        FullMethod::Mc { samples, seed } => {
            if samples < 1000 {
                return Err(Error::invalid(format!("Monte Carlo needs >= 1000 samples, got {samples}")));
            }
            let (delta, stderr) = delta_mc(pair, samples, seed, pc.g)?;
            DeltaResult::new(delta, stderr, DeltaMethod::Mc, convention, pc)
        }
    }
}
