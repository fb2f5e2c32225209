use std::f64::consts::PI;

use num_complex::Complex64;

use super::surface::Letter;
use super::FuchsianError;
use crate::hypgeom::hyperboloid::{clip_halfspace, dot, from_disk, Vec3};
use crate::hypgeom::{Isometry, PhasePoint, RENORMALIZE_EVERY};

/// Maximum number of generator moves in one reduction.
pub const REDUCE_BUDGET: usize = 10_000;

const WALL_TOL: f64 = 1e-12;

/// Dirichlet polygon of the origin cut out by the generator bisectors.
///
/// Each wall is `{x : <x, n_l> = 0}` where `n_l` is the unit spacelike
/// normal of the bisector of `o` and `g_l·o`; the domain is `<x, n_l> ≤ 0`
/// for all letters. When the polygon is compact with area `4π(g−1)` the
/// generators are its side pairings and its translates tile the disk.
#[derive(Debug, Clone)]
pub struct DirichletDomain {
    generators: Vec<Isometry>,
    normals: Vec<Vec3<f64>>,
    sides: Vec<Letter>,
    vertices: Vec<Vec3<f64>>,
    inradius: f64,
    circumradius: f64,
    area: f64,
    tiling: bool,
    test_set: Vec<Isometry>,
    neighbors: Vec<(Isometry, Vec3<f64>)>,
}

fn cross(a: &Vec3<f64>, b: &Vec3<f64>) -> Vec3<f64> {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

impl DirichletDomain {
    pub(crate) fn new(generators: &[Isometry]) -> Result<Self, FuchsianError> {
        let o: Vec3<f64> = [1.0, 0.0, 0.0];
        let mut normals = Vec::with_capacity(generators.len());
        let mut inradius = f64::INFINITY;
        for g in generators {
            let s = from_disk(g.map_z(Complex64::new(0.0, 0.0)));
            let n = [s[0] - o[0], s[1] - o[1], s[2] - o[2]];
            let len = dot(&n, &n).sqrt();
            if !(len > 0.0) {
                return Err(FuchsianError::BadSurface("generator fixes the origin".into()));
            }
            normals.push([n[0] / len, n[1] / len, n[2] / len]);
            inradius = inradius.min(0.5 * g.displacement());
        }
        let mut sides: Vec<Letter> = (0..generators.len() as u8).collect();
        let angle = |l: Letter| {
            let z = generators[l as usize].map_z(Complex64::new(0.0, 0.0));
            crate::scalar::wrap_angle(z.arg())
        };
        sides.sort_by(|&x, &y| angle(x).total_cmp(&angle(y)));

        let mut vertices = Vec::with_capacity(sides.len());
        let mut angle_sum = 0.0;
        let mut compact = true;
        for k in 0..sides.len() {
            let n1 = &normals[sides[k] as usize];
            let n2 = &normals[sides[(k + 1) % sides.len()] as usize];
            let c = cross(n1, n2);
            let mut v = [-c[0], c[1], c[2]];
            let q = -dot(&v, &v);
            if !(q > 0.0) {
                compact = false;
                break;
            }
            let s = q.sqrt() * v[0].signum();
            v = [v[0] / s, v[1] / s, v[2] / s];
            angle_sum += (-dot(n1, n2)).clamp(-1.0, 1.0).acos();
            vertices.push(v);
        }
        let mut circumradius = inradius;
        let mut area = f64::INFINITY;
        if compact {
            for v in &vertices {
                if normals.iter().any(|n| dot(v, n) > 1e-9 * v[0]) {
                    compact = false;
                }
                circumradius = circumradius.max(v[0].acosh());
            }
            area = (sides.len() as f64 - 2.0) * PI - angle_sum;
        }
        let genus = generators.len() as f64 / 4.0;
        let tiling = compact && (area - 4.0 * PI * (genus - 1.0)).abs() < 1e-6;
        Ok(Self {
            generators: generators.to_vec(),
            normals,
            sides,
            vertices,
            inradius,
            circumradius,
            area,
            tiling,
            test_set: Vec::new(),
            neighbors: Vec::new(),
        })
    }

    pub(crate) fn set_fallback(&mut self, elements: Vec<Isometry>, radius: f64) {
        self.test_set = elements;
        self.circumradius = self.circumradius.max(radius);
    }

    pub(crate) fn set_neighbors(&mut self, elements: Vec<Isometry>) {
        self.neighbors =
            elements.into_iter().map(|g| (g, from_disk(g.inverse().map_z(Complex64::new(0.0, 0.0))))).collect();
    }

    /// Elements `σ ≠ id` whose tile `σF` touches the closed polygon, with the
    /// hyperboloid point of `σ⁻¹·o`.
    pub fn neighbors(&self) -> &[(Isometry, Vec3<f64>)] {
        &self.neighbors
    }

    /// True when the generator bisectors bound a fundamental polygon.
    pub fn is_tiling(&self) -> bool {
        self.tiling
    }

    pub fn inradius(&self) -> f64 {
        self.inradius
    }

    /// Largest distance from the origin to a point of the polygon.
    pub fn circumradius(&self) -> f64 {
        self.circumradius
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn normal(&self, l: Letter) -> &Vec3<f64> {
        &self.normals[l as usize]
    }

    pub fn sides(&self) -> &[Letter] {
        &self.sides
    }

    pub fn vertices(&self) -> &[Vec3<f64>] {
        &self.vertices
    }

    /// Largest wall violation `max_l <x, n_l>` and its letter.
    fn worst_wall(&self, x: &Vec3<f64>) -> (f64, Letter) {
        let mut best = (f64::NEG_INFINITY, 0);
        for (l, n) in self.normals.iter().enumerate() {
            let v = dot(x, n);
            if v > best.0 {
                best = (v, l as Letter);
            }
        }
        best
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let x = from_disk(z);
        self.worst_wall(&x).0 <= 1e-9 * x[0]
    }

    /// Hyperbolic distance from a hyperboloid point to the polygon.
    pub fn distance_to(&self, y: &Vec3<f64>) -> f64 {
        let mut best = f64::INFINITY;
        let mut outside = false;
        for k in 0..self.sides.len() {
            let n = &self.normals[self.sides[k] as usize];
            let s = dot(y, n);
            if s <= 0.0 {
                continue;
            }
            outside = true;
            let ch = (1.0 + s * s).sqrt();
            let foot = [(y[0] - s * n[0]) / ch, (y[1] - s * n[1]) / ch, (y[2] - s * n[2]) / ch];
            let on_side = self
                .normals
                .iter()
                .enumerate()
                .all(|(l, m)| l == self.sides[k] as usize || dot(&foot, m) <= 1e-12 * foot[0]);
            let d = if on_side {
                s.asinh()
            } else {
                let v1 = &self.vertices[(k + self.sides.len() - 1) % self.sides.len()];
                let v2 = &self.vertices[k];
                (-dot(y, v1)).max(1.0).acosh().min((-dot(y, v2)).max(1.0).acosh())
            };
            best = best.min(d);
        }
        if outside {
            best
        } else {
            0.0
        }
    }

    /// Moves `z` into the polygon; returns `(δ, δ·z)`.
    pub fn reduce_point(&self, z: Complex64) -> Result<(Isometry, Complex64), FuchsianError> {
        let mut z = z;
        let mut delta = Isometry::identity();
        for step in 0..REDUCE_BUDGET {
            let x = from_disk(z);
            let (v, l) = self.worst_wall(&x);
            let g = if v > WALL_TOL * x[0] {
                self.generators[(l ^ 1) as usize]
            } else if let Some(t) = self.test_set.iter().find(|t| t.map_z(z).norm() < z.norm() - WALL_TOL) {
                *t
            } else {
                return Ok((delta, z));
            };
            z = g.map_z(z);
            delta = g * delta;
            if (step + 1) % RENORMALIZE_EVERY == 0 {
                delta = delta.renormalized();
            }
        }
        Err(FuchsianError::Walk(format!("reduction exceeded {REDUCE_BUDGET} steps")))
    }

    pub fn reduce_phase(&self, v: &PhasePoint) -> Result<(Isometry, PhasePoint), FuchsianError> {
        let (delta, _) = self.reduce_point(v.base.z())?;
        Ok((delta, delta.apply_phase(v)?))
    }

    /// Time of first exit through a wall along `cosh t·p + sinh t·w`.
    pub fn exit(&self, p: &Vec3<f64>, w: &Vec3<f64>) -> Option<(f64, Letter)> {
        let mut best: Option<(f64, Letter)> = None;
        for (l, n) in self.normals.iter().enumerate() {
            let a = dot(p, n);
            let b = dot(w, n);
            if b <= 0.0 || -a >= b {
                continue;
            }
            let t = (-a / b).atanh().max(0.0);
            if best.map_or(true, |(bt, _)| t < bt) {
                best = Some((t, l as Letter));
            }
        }
        best
    }

    /// Times at which `cosh t·p + sinh t·w` lies in the polygon.
    pub fn interval(&self, p: &Vec3<f64>, w: &Vec3<f64>) -> Option<(f64, f64)> {
        let mut range = (-f64::MAX, f64::MAX);
        for n in &self.normals {
            range = clip_halfspace(dot(p, n), dot(w, n), range.0, range.1)?;
        }
        Some(range)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuchsian::SurfaceModel;
    use crate::hypgeom::{dist_z, hyperboloid, DiskPoint};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bolza_octagon_geometry() {
        let s = SurfaceModel::bolza();
        let d = &s.domain;
        assert!(d.is_tiling());
        assert_eq!(d.vertices().len(), 8);
        assert_abs_diff_eq!(d.area(), 4.0 * PI, epsilon = 1e-9);
        assert_abs_diff_eq!(d.inradius().cosh(), 1.0 / (PI / 8.0).tan(), epsilon = 1e-9);
        let c = 1.0 + 2f64.sqrt();
        assert_abs_diff_eq!(d.circumradius().cosh(), c * c, epsilon = 1e-9);
    }

    #[test]
    fn reduction_lands_in_domain_and_distance_vanishes_inside() {
        let s = SurfaceModel::bolza();
        let d = &s.domain;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let p = DiskPoint::polar(rng.gen_range(0.0..0.9999f64), rng.gen_range(0.0..6.3)).unwrap();
            let (delta, z) = d.reduce_point(p.z()).unwrap();
            assert!(d.contains(z));
            assert!((delta.map_z(p.z()) - z).norm() < 1e-9);
            assert!(z.norm() <= (d.circumradius() / 2.0).tanh() + 1e-9);
            assert_eq!(d.distance_to(&hyperboloid::from_disk(z)), 0.0);
        }
    }

    #[test]
    fn distance_to_polygon_matches_sampled_boundary() {
        let s = SurfaceModel::bolza();
        let d = &s.domain;
        // dense boundary sample of the octagon
        let mut boundary = Vec::new();
        let n = d.vertices().len();
        for k in 0..n {
            let a = hyperboloid::to_disk(&d.vertices()[k]);
            let b = hyperboloid::to_disk(&d.vertices()[(k + 1) % n]);
            let g = Isometry::translation_to(DiskPoint::new(a).unwrap());
            let bb = g.inverse().map_z(b);
            let len = dist_z(a, b);
            for i in 0..=2000 {
                let r = (0.5 * len * i as f64 / 2000.0).tanh();
                boundary.push(g.map_z(bb / bb.norm() * r));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let z = DiskPoint::polar(rng.gen_range(0.0..0.995f64), rng.gen_range(0.0..6.3)).unwrap().z();
            let exact = d.distance_to(&hyperboloid::from_disk(z));
            if d.contains(z) {
                assert_eq!(exact, 0.0);
                continue;
            }
            let sampled = boundary.iter().map(|&b| dist_z(z, b)).fold(f64::INFINITY, f64::min);
            assert!(exact <= sampled + 1e-9);
            assert!(sampled - exact < 2e-3, "{exact} {sampled}");
        }
    }
}
