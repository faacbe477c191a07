use crate::jet::{Axis, Diffeo, Grid, Sampler};
use crate::wiggle::ShearDiffeo;

/// Samples of a tube around a sheared cube: H(u, w) for u on a lattice over
/// I^k and w on a lattice of normal offsets.
pub struct TubeSampler {
    pub cube: Grid,
    pub normals: Grid,
    pub shear: ShearDiffeo,
}

impl TubeSampler {
    /// Normal offsets {−τ, 0, τ} on each of the n − k normal coordinates
    /// (only 0 when τ is zero).
    pub fn new(cube: Grid, n: usize, tau: f64, shear: ShearDiffeo) -> Self {
        let k = cube.dim();
        let normals = Grid::over_cube(0, n - k, tau, 3);
        TubeSampler { cube, normals, shear }
    }

    /// Cube coordinates and straight-frame point of sample `i`.
    pub fn straight(&self, i: usize) -> Vec<f64> {
        let m = self.normals.len();
        let mut u = self.cube.point(i / m);
        u.extend(self.normals.point(i % m));
        u
    }

    /// Half-step lattice restricted to `cells` coarse cells on either side
    /// of the cube node of sample `i`.
    pub fn refined_window(&self, i: usize, cells: usize) -> TubeSampler {
        let u = self.cube.point(i / self.normals.len());
        let axes = self
            .cube
            .axes
            .iter()
            .zip(u)
            .map(|(a, c)| {
                if a.count <= 1 {
                    return *a;
                }
                let h = a.step();
                let lo = (c - cells as f64 * h).max(a.lo);
                let hi = (c + cells as f64 * h).min(a.hi);
                Axis::new(lo, hi, ((hi - lo) / (h / 2.0)).round() as usize + 1)
            })
            .collect();
        TubeSampler {
            cube: Grid::new(axes),
            normals: self.normals.refined(),
            shear: self.shear.clone(),
        }
    }

    pub fn refined(&self) -> TubeSampler {
        TubeSampler {
            cube: self.cube.refined(),
            normals: self.normals.clone(),
            shear: self.shear.clone(),
        }
    }
}

impl Sampler for TubeSampler {
    fn len(&self) -> usize {
        self.cube.len() * self.normals.len()
    }

    fn point(&self, i: usize) -> Vec<f64> {
        self.shear.apply(&self.straight(i))
    }
}
