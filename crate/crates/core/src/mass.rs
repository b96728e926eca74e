//! Rigid mass distributions and superposed pairs of placements.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn unit(self) -> Point {
        let mut e = [0.0; 3];
        e[self.index()] = 1.0;
        e
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            other => Err(Error::invalid(format!("unknown axis {other:?}"))),
        }
    }
}

/// Axis-aligned box `[min, max)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub fn volume(&self) -> f64 {
        (0..3).map(|i| (self.max[i] - self.min[i]).max(0.0)).product()
    }

    pub fn intersection(&self, other: &Aabb) -> Aabb {
        let mut out = *self;
        for i in 0..3 {
            out.min[i] = self.min[i].max(other.min[i]);
            out.max[i] = self.max[i].min(other.max[i]);
        }
        out
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        let mut out = *self;
        for i in 0..3 {
            out.min[i] = self.min[i].min(other.min[i]);
            out.max[i] = self.max[i].max(other.max[i]);
        }
        out
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] < self.max[i])
    }

    pub fn extent(&self) -> Point {
        [
            self.max[0] - self.min[0],
            self.max[1] - self.min[1],
            self.max[2] - self.min[2],
        ]
    }
}

/// Cell densities on a uniform cubic lattice; index `(i * ny + j) * nz + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    pub cell: f64,
    pub dims: [usize; 3],
    pub densities: Vec<f64>,
}

impl VoxelGrid {
    pub fn new(cell: f64, dims: [usize; 3], densities: Vec<f64>) -> Result<Self> {
        if !(cell.is_finite() && cell > 0.0) {
            return Err(Error::invalid(format!("voxel cell size must be > 0, got {cell}")));
        }
        if dims.contains(&0) {
            return Err(Error::invalid("voxel grid dimensions must be >= 1"));
        }
        if densities.len() != dims[0] * dims[1] * dims[2] {
            return Err(Error::invalid(format!(
                "voxel grid has {} values for dims {:?}",
                densities.len(),
                dims
            )));
        }
        if densities.iter().any(|&r| !(r.is_finite() && r >= 0.0)) {
            return Err(Error::invalid("voxel densities must be finite and >= 0"));
        }
        Ok(VoxelGrid { cell, dims, densities })
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell.powi(3)
    }

    pub fn total_mass(&self) -> f64 {
        self.densities.iter().sum::<f64>() * self.cell_volume()
    }

    /// Writes the plain-text header that accompanies [`VoxelGrid::write_data`].
    pub fn write_header<W: Write>(&self, origin: &Point, mut w: W) -> io::Result<()> {
        writeln!(w, "dims {} {} {}", self.dims[0], self.dims[1], self.dims[2])?;
        writeln!(w, "cell_size {:e}", self.cell)?;
        writeln!(w, "origin {:e} {:e} {:e}", origin[0], origin[1], origin[2])?;
        writeln!(w, "order ijk_k_fastest")?;
        writeln!(w, "format f64_le")?;
        writeln!(w, "units kg_m-3")
    }

    /// Flat little-endian f64 densities in index order.
    pub fn write_data<W: Write>(&self, mut w: W) -> io::Result<()> {
        for r in &self.densities {
            w.write_all(&r.to_le_bytes())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Box with the given side lengths; the distribution origin is its minimum corner.
    Box { sides: Point },
    /// Ball; the distribution origin is its center.
    Sphere { radius: f64 },
    /// Voxel densities; the distribution origin is the grid's minimum corner.
    Voxels(VoxelGrid),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassDistribution {
    pub shape: Shape,
    pub origin: Point,
    /// Uniform density of analytic shapes, kg m⁻³. Unused for voxel grids.
    pub density0: f64,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite and > 0, got {v}")))
    }
}

impl MassDistribution {
    pub fn cuboid(sides: Point, density0: f64, origin: Point) -> Result<Self> {
        for s in sides {
            check_positive("box side", s)?;
        }
        check_positive("density", density0)?;
        Ok(MassDistribution {
            shape: Shape::Box { sides },
            origin,
            density0,
        })
    }

    pub fn cube(side: f64, density0: f64, origin: Point) -> Result<Self> {
        Self::cuboid([side; 3], density0, origin)
    }

    pub fn sphere(radius: f64, density0: f64, center: Point) -> Result<Self> {
        check_positive("sphere radius", radius)?;
        check_positive("density", density0)?;
        Ok(MassDistribution {
            shape: Shape::Sphere { radius },
            origin: center,
            density0,
        })
    }

    pub fn voxels(grid: VoxelGrid, origin: Point) -> Result<Self> {
        if grid.total_mass() <= 0.0 {
            return Err(Error::invalid("voxel grid carries no mass"));
        }
        Ok(MassDistribution {
            shape: Shape::Voxels(grid),
            origin,
            density0: 0.0,
        })
    }

    pub fn total_mass(&self) -> f64 {
        match &self.shape {
            Shape::Box { sides } => self.density0 * sides[0] * sides[1] * sides[2],
            Shape::Sphere { radius } => {
                self.density0 * 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3)
            }
            Shape::Voxels(g) => g.total_mass(),
        }
    }

    pub fn bounding_box(&self) -> Aabb {
        let o = self.origin;
        match &self.shape {
            Shape::Box { sides } => Aabb {
                min: o,
                max: [o[0] + sides[0], o[1] + sides[1], o[2] + sides[2]],
            },
            Shape::Sphere { radius } => Aabb {
                min: [o[0] - radius, o[1] - radius, o[2] - radius],
                max: [o[0] + radius, o[1] + radius, o[2] + radius],
            },
            Shape::Voxels(g) => Aabb {
                min: o,
                max: [
                    o[0] + g.cell * g.dims[0] as f64,
                    o[1] + g.cell * g.dims[1] as f64,
                    o[2] + g.cell * g.dims[2] as f64,
                ],
            },
        }
    }

    pub fn density_at(&self, p: &Point) -> f64 {
        let o = self.origin;
        match &self.shape {
            Shape::Box { .. } => {
                if self.bounding_box().contains(p) {
                    self.density0
                } else {
                    0.0
                }
            }
            Shape::Sphere { radius } => {
                let r2: f64 = (0..3).map(|i| (p[i] - o[i]).powi(2)).sum();
                if r2 < radius * radius {
                    self.density0
                } else {
                    0.0
                }
            }
            Shape::Voxels(g) => {
                let mut idx = [0usize; 3];
                for ax in 0..3 {
                    let f = ((p[ax] - o[ax]) / g.cell).floor();
                    if f < 0.0 || f >= g.dims[ax] as f64 {
                        return 0.0;
                    }
                    idx[ax] = f as usize;
                }
                g.densities[g.index(idx[0], idx[1], idx[2])]
            }
        }
    }

    /// Rigid translation: only the origin moves.
    pub fn translated(&self, offset: Point) -> Self {
        let mut out = self.clone();
        for (o, d) in out.origin.iter_mut().zip(offset) {
            *o += d;
        }
        out
    }

    pub fn is_analytic(&self) -> bool {
        !matches!(self.shape, Shape::Voxels(_))
    }

    /// Fraction of the cell `[lo, lo + cell)³` covered by an analytic shape.
    fn coverage(&self, lo: &Point, cell: f64) -> f64 {
        match &self.shape {
            Shape::Box { .. } => {
                let bb = self.bounding_box();
                (0..3)
                    .map(|i| {
                        let a = lo[i].max(bb.min[i]);
                        let b = (lo[i] + cell).min(bb.max[i]);
                        ((b - a) / cell).max(0.0)
                    })
                    .product()
            }
            Shape::Sphere { radius } => {
                let c = self.origin;
                let mut near = 0.0;
                let mut far = 0.0;
                for i in 0..3 {
                    let a = lo[i] - c[i];
                    let b = a + cell;
                    let n = if a > 0.0 {
                        a
                    } else if b < 0.0 {
                        -b
                    } else {
                        0.0
                    };
                    let f = a.abs().max(b.abs());
                    near += n * n;
                    far += f * f;
                }
                let r2 = radius * radius;
                if far <= r2 {
                    1.0
                } else if near >= r2 {
                    0.0
                } else {
                    const SUB: usize = 4;
                    let step = cell / SUB as f64;
                    let mut inside = 0usize;
                    for a in 0..SUB {
                        for b in 0..SUB {
                            for k in 0..SUB {
                                let p = [
                                    lo[0] + (a as f64 + 0.5) * step - c[0],
                                    lo[1] + (b as f64 + 0.5) * step - c[1],
                                    lo[2] + (k as f64 + 0.5) * step - c[2],
                                ];
                                if p[0] * p[0] + p[1] * p[1] + p[2] * p[2] < r2 {
                                    inside += 1;
                                }
                            }
                        }
                    }
                    inside as f64 / (SUB * SUB * SUB) as f64
                }
            }
            Shape::Voxels(_) => unreachable!("coverage is only defined for analytic shapes"),
        }
    }

    /// Samples this (analytic) distribution onto the lattice with minimum
    /// corner `grid_origin`.
    pub fn voxelize_on(&self, grid_origin: Point, cell: f64, dims: [usize; 3]) -> Result<VoxelGrid> {
        if !self.is_analytic() {
            return Err(Error::invalid("only analytic shapes can be voxelized"));
        }
        check_positive("cell size", cell)?;
        let mut densities = vec![0.0; dims[0] * dims[1] * dims[2]];
        let bb = self.bounding_box();
        // restrict the scan to cells touching the bounding box
        let range = |ax: usize| {
            let lo = ((bb.min[ax] - grid_origin[ax]) / cell).floor().max(0.0) as usize;
            let hi = (((bb.max[ax] - grid_origin[ax]) / cell).ceil().max(0.0) as usize).min(dims[ax]);
            lo.min(dims[ax])..hi
        };
        let (ri, rj, rk) = (range(0), range(1), range(2));
        for i in ri {
            for j in rj.clone() {
                for k in rk.clone() {
                    let lo = [
                        grid_origin[0] + i as f64 * cell,
                        grid_origin[1] + j as f64 * cell,
                        grid_origin[2] + k as f64 * cell,
                    ];
                    let f = self.coverage(&lo, cell);
                    if f > 0.0 {
                        densities[(i * dims[1] + j) * dims[2] + k] = self.density0 * f;
                    }
                }
            }
        }
        VoxelGrid::new(cell, dims, densities)
    }
}

/// Voxelizes an analytic distribution on its own bounding box, with
/// `n_cells_per_side` cells along its longest extent.
pub fn voxelize(dist: &MassDistribution, n_cells_per_side: usize) -> Result<MassDistribution> {
    if n_cells_per_side == 0 {
        return Err(Error::invalid("n_cells_per_side must be >= 1"));
    }
    let bb = dist.bounding_box();
    let ext = bb.extent();
    let cell = ext.iter().cloned().fold(0.0, f64::max) / n_cells_per_side as f64;
    let dims = ext.map(|e| cells_to_cover(e / cell));
    let grid = dist.voxelize_on(bb.min, cell, dims)?;
    MassDistribution::voxels(grid, bb.min)
}

fn cells_to_cover(x: f64) -> usize {
    ((x - 1e-12 * x.abs().max(1.0)).ceil().max(1.0)) as usize
}

/// Two placements of one body.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperposedPair {
    pub a: MassDistribution,
    pub b: MassDistribution,
}

impl SuperposedPair {
    pub fn new(a: MassDistribution, b: MassDistribution) -> Result<Self> {
        let (ma, mb) = (a.total_mass(), b.total_mass());
        if !(ma.is_finite() && mb.is_finite() && ma > 0.0 && mb > 0.0) {
            return Err(Error::invalid("pair members must carry finite positive mass"));
        }
        if (ma - mb).abs() > 1e-12 * ma.max(mb) {
            return Err(Error::invalid(format!(
                "pair members must have equal mass, got {ma:e} and {mb:e}"
            )));
        }
        Ok(SuperposedPair { a, b })
    }

    pub fn swapped(&self) -> Self {
        SuperposedPair {
            a: self.b.clone(),
            b: self.a.clone(),
        }
    }

    pub fn translated(&self, offset: Point) -> Self {
        SuperposedPair {
            a: self.a.translated(offset),
            b: self.b.translated(offset),
        }
    }

    /// Both members on one common lattice. The lattice starts at the minimum
    /// corner of the union of both bounding boxes and its cell is the longest
    /// member extent over `n`, so swapping `a` and `b` gives the same lattice.
    ///
    /// Voxel members must already share the cell size and be aligned with
    /// each other to a whole number of cells.
    pub fn common_lattice(&self, n: usize) -> Result<(VoxelGrid, VoxelGrid, Point)> {
        if n == 0 {
            return Err(Error::invalid("n_cells_per_side must be >= 1"));
        }
        match (&self.a.shape, &self.b.shape) {
            (Shape::Voxels(ga), Shape::Voxels(gb)) => align_voxel_pair(ga, &self.a.origin, gb, &self.b.origin),
            (Shape::Voxels(_), _) | (_, Shape::Voxels(_)) => Err(Error::invalid(
                "cannot mix a voxel grid with an analytic shape in one pair",
            )),
            _ => {
                let ba = self.a.bounding_box();
                let bb = self.b.bounding_box();
                let longest = |b: &Aabb| b.extent().iter().cloned().fold(0.0, f64::max);
                let cell = longest(&ba).max(longest(&bb)) / n as f64;
                let u = ba.union(&bb);
                let ext = u.extent();
                let dims = [0, 1, 2].map(|ax| cells_to_cover(ext[ax] / cell));
                let va = self.a.voxelize_on(u.min, cell, dims)?;
                let vb = self.b.voxelize_on(u.min, cell, dims)?;
                Ok((va, vb, u.min))
            }
        }
    }
}

fn align_voxel_pair(ga: &VoxelGrid, oa: &Point, gb: &VoxelGrid, ob: &Point) -> Result<(VoxelGrid, VoxelGrid, Point)> {
    let cell = ga.cell;
    if (gb.cell - cell).abs() > 1e-12 * cell {
        return Err(Error::invalid("voxel pair members must share the cell size"));
    }
    let mut shift = [0i64; 3];
    for ax in 0..3 {
        let s = (ob[ax] - oa[ax]) / cell;
        if (s - s.round()).abs() > 1e-6 {
            return Err(Error::invalid("voxel pair members must be aligned to whole cells"));
        }
        shift[ax] = s.round() as i64;
    }
    let lo: [i64; 3] = std::array::from_fn(|ax| shift[ax].min(0));
    let hi: [i64; 3] = std::array::from_fn(|ax| (ga.dims[ax] as i64).max(shift[ax] + gb.dims[ax] as i64));
    let dims: [usize; 3] = std::array::from_fn(|ax| (hi[ax] - lo[ax]) as usize);
    let embed = |g: &VoxelGrid, off: [i64; 3]| {
        let mut out = vec![0.0; dims[0] * dims[1] * dims[2]];
        for i in 0..g.dims[0] {
            for j in 0..g.dims[1] {
                for k in 0..g.dims[2] {
                    let ii = (i as i64 + off[0] - lo[0]) as usize;
                    let jj = (j as i64 + off[1] - lo[1]) as usize;
                    let kk = (k as i64 + off[2] - lo[2]) as usize;
                    out[(ii * dims[1] + jj) * dims[2] + kk] = g.densities[g.index(i, j, k)];
                }
            }
        }
        VoxelGrid { cell, dims, densities: out }
    };
    let origin = [
        oa[0] + lo[0] as f64 * cell,
        oa[1] + lo[1] as f64 * cell,
        oa[2] + lo[2] as f64 * cell,
    ];
    Ok((embed(ga, [0; 3]), embed(gb, shift), origin))
}

/// Identical cubes of side `side`; the second is displaced by `-d` along
/// `axis`, i.e. ρ′(r) = ρ(r + d ê).
pub fn build_displaced_cube(side: f64, rho0: f64, d: f64, axis: Axis) -> Result<SuperposedPair> {
    if !d.is_finite() {
        return Err(Error::invalid("displacement must be finite"));
    }
    let a = MassDistribution::cube(side, rho0, [0.0; 3])?;
    let e = axis.unit();
    let b = a.translated([-d * e[0], -d * e[1], -d * e[2]]);
    SuperposedPair::new(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn mirror_cube_masses() {
        let p = build_displaced_cube(1e-5, 5e3, 1e-13, Axis::Z).unwrap();
        assert_relative_eq!(p.a.total_mass(), 5e-12, max_relative = 1e-12);
        assert_relative_eq!(p.b.total_mass(), 5e-12, max_relative = 1e-12);
    }

    #[test]
    fn zero_displacement_gives_identical_members() {
        let p = build_displaced_cube(1.0, 1.0, 0.0, Axis::Z).unwrap();
        assert_eq!(p.a, p.b);
    }

    #[test]
    fn half_shifted_unit_cubes_overlap_by_half() {
        let p = build_displaced_cube(1.0, 1.0, 0.5, Axis::X).unwrap();
        let v = p.a.bounding_box().intersection(&p.b.bounding_box()).volume();
        assert_relative_eq!(v, 0.5, max_relative = 1e-15);
    }

    #[test]
    fn bad_cube_parameters_are_rejected() {
        assert!(build_displaced_cube(0.0, 1.0, 0.1, Axis::Z).is_err());
        assert!(build_displaced_cube(1.0, -1.0, 0.1, Axis::Z).is_err());
    }

    #[test]
    fn unit_cube_tiles_exactly() {
        let cube = MassDistribution::cube(1.0, 1.0, [0.0; 3]).unwrap();
        let v = voxelize(&cube, 4).unwrap();
        let Shape::Voxels(g) = &v.shape else { panic!() };
        assert_eq!(g.dims, [4, 4, 4]);
        assert!(g.densities.iter().all(|&r| (r - 1.0).abs() < 1e-15));
        assert_relative_eq!(v.total_mass(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn unit_sphere_volume() {
        let ball = MassDistribution::sphere(1.0, 1.0, [0.0; 3]).unwrap();
        let v = voxelize(&ball, 32).unwrap();
        assert_relative_eq!(v.total_mass(), 4.0 * PI / 3.0, max_relative = 1e-3);
    }

    #[test]
    fn displaced_cube_boundary_fractions() {
        // cube displaced by a quarter cell relative to the lattice
        let n = 8;
        let cell = 1.0 / n as f64;
        let d = 0.25 * cell;
        let cube = MassDistribution::cube(1.0, 1.0, [0.0, 0.0, d]).unwrap();
        let dims = [n, n, n + 1];
        let g = cube.voxelize_on([0.0; 3], cell, dims).unwrap();
        assert_relative_eq!(g.total_mass(), 1.0, max_relative = 1e-12);
        // closed-form interval intersection along z for each layer
        for k in 0..=n {
            let lo = k as f64 * cell;
            let hi = lo + cell;
            let overlap = (hi.min(1.0 + d) - lo.max(d)).max(0.0) / cell;
            for i in 0..n {
                for j in 0..n {
                    assert_relative_eq!(g.densities[g.index(i, j, k)], overlap, epsilon = 1e-14);
                }
            }
        }
        assert_relative_eq!(g.densities[g.index(0, 0, 0)], 0.75, epsilon = 1e-14);
        assert_relative_eq!(g.densities[g.index(0, 0, n)], 0.25, epsilon = 1e-14);
    }

    #[test]
    fn translation_moves_origin_only() {
        let ball = MassDistribution::sphere(2.0, 3.0, [1.0, 2.0, 3.0]).unwrap();
        let t = ball.translated([0.5, -1.0, 2.0]);
        assert_eq!(t.shape, ball.shape);
        assert_eq!(t.density0, ball.density0);
        assert_eq!(t.origin, [1.5, 1.0, 5.0]);
    }

    #[test]
    fn unequal_masses_are_rejected() {
        let a = MassDistribution::cube(1.0, 1.0, [0.0; 3]).unwrap();
        let b = MassDistribution::cube(1.0, 2.0, [0.0; 3]).unwrap();
        assert!(SuperposedPair::new(a, b).is_err());
    }

    #[test]
    fn voxel_validation() {
        assert!(VoxelGrid::new(0.0, [1, 1, 1], vec![1.0]).is_err());
        assert!(VoxelGrid::new(1.0, [0, 1, 1], vec![]).is_err());
        assert!(VoxelGrid::new(1.0, [1, 1, 1], vec![-1.0]).is_err());
        assert!(VoxelGrid::new(1.0, [2, 1, 1], vec![1.0]).is_err());
    }

    #[test]
    fn common_lattice_for_mirror_like_pair() {
        let p = build_displaced_cube(1.0, 1.0, 0.01, Axis::Z).unwrap();
        let (ga, gb, origin) = p.common_lattice(64).unwrap();
        assert_eq!(ga.dims, [64, 64, 65]);
        assert_relative_eq!(origin[2], -0.01, max_relative = 1e-12);
        assert_relative_eq!(ga.total_mass(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(gb.total_mass(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn voxel_pairs_are_aligned() {
        let g = VoxelGrid::new(0.5, [2, 1, 1], vec![1.0, 2.0]).unwrap();
        let a = MassDistribution::voxels(g.clone(), [0.0; 3]).unwrap();
        let b = MassDistribution::voxels(g, [0.5, 0.0, 0.0]).unwrap();
        let (ga, gb, _) = SuperposedPair::new(a, b).unwrap().common_lattice(1).unwrap();
        assert_eq!(ga.dims, [3, 1, 1]);
        assert_eq!(ga.densities, vec![1.0, 2.0, 0.0]);
        assert_eq!(gb.densities, vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn export_header_and_data() {
        let g = VoxelGrid::new(0.5, [1, 1, 2], vec![1.0, 2.0]).unwrap();
        let mut head = Vec::new();
        g.write_header(&[0.0, 0.0, 0.0], &mut head).unwrap();
        let head = String::from_utf8(head).unwrap();
        assert!(head.starts_with("dims 1 1 2\ncell_size 5e-1\n"));
        let mut data = Vec::new();
        g.write_data(&mut data).unwrap();
        assert_eq!(data.len(), 16);
        assert_eq!(f64::from_le_bytes(data[8..16].try_into().unwrap()), 2.0);
    }
}
