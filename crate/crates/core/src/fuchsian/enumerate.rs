use hashbrown::HashTable;

use super::surface::{Letter, SurfaceModel};
use super::FuchsianError;
use crate::hypgeom::hyperboloid::from_disk;
use crate::hypgeom::{Isometry, RENORMALIZE_EVERY};
use crate::quant::{cell_key, hash_key, probe_keys, Key};

/// Dedup grid for matrix entries.
const MATRIX_GRID: f64 = 1e-6;
/// Below this `|Re a|` the sign normalization falls back to later entries.
const SIGN_EPS: f64 = 1e-9;

/// Rule deciding which Cayley-graph nodes are expanded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PruneRule {
    /// Expand `γ` iff the tile `γF` meets the ball. Exact for tiling domains.
    Tile,
    /// Expand `γ` iff its displacement is at most `R + c`.
    Displacement(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerateOptions {
    pub prune: PruneRule,
    pub node_budget: usize,
}

impl EnumerateOptions {
    pub fn for_surface(s: &SurfaceModel) -> Self {
        let prune =
            if s.domain.is_tiling() { PruneRule::Tile } else { PruneRule::Displacement(2.0 * s.domain_diameter) };
        Self { prune, node_budget: s.node_budget }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    pub matrix: Isometry,
    pub word: Vec<Letter>,
    pub displacement: f64,
}

#[derive(Debug, Clone, Copy)]
struct Node {
    m: Isometry,
    parent: u32,
    letter: Letter,
    depth: u8,
}

/// Elements of the deck group with displacement at most `radius`, in
/// breadth-first (shortlex) order of their words.
#[derive(Debug, Clone)]
pub struct BallEnumeration {
    radius: f64,
    nodes: Vec<Node>,
    members: Vec<u32>,
    visited: usize,
}

impl BallEnumeration {
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Number of Cayley-graph nodes stored during the search.
    pub fn visited(&self) -> usize {
        self.visited
    }

    pub fn matrix(&self, i: usize) -> Isometry {
        self.nodes[self.members[i] as usize].m
    }

    pub fn displacement(&self, i: usize) -> f64 {
        self.matrix(i).displacement()
    }

    pub fn word(&self, i: usize) -> Vec<Letter> {
        let mut w = Vec::new();
        let mut k = self.members[i] as usize;
        while k != 0 {
            let n = &self.nodes[k];
            w.push(n.letter);
            k = n.parent as usize;
        }
        w.reverse();
        w
    }

    pub fn element(&self, i: usize) -> GroupElement {
        let matrix = self.matrix(i);
        GroupElement { matrix, word: self.word(i), displacement: matrix.displacement() }
    }

    pub fn matrices(&self) -> impl ExactSizeIterator<Item = Isometry> + '_ {
        self.members.iter().map(|&k| self.nodes[k as usize].m)
    }

    /// Number of elements with displacement at most `r`.
    pub fn count_within(&self, r: f64) -> usize {
        self.matrices().filter(|m| m.displacement() <= r).count()
    }
}

fn signed_coords(m: &Isometry, flip: bool) -> [f64; 4] {
    let (a, b) = (m.a(), m.b());
    let s = if flip { -1.0 } else { 1.0 };
    [s * a.re, s * a.im, s * b.re, s * b.im]
}

fn canonical_sign(m: &Isometry) -> bool {
    let c = signed_coords(m, false);
    for x in c {
        if x.abs() > SIGN_EPS {
            return x < 0.0;
        }
    }
    false
}

/// Dedup key: entries on a 1e-6 grid after making the first entry positive.
pub(crate) fn matrix_key(m: &Isometry) -> Key<4> {
    cell_key(&signed_coords(m, canonical_sign(m)), MATRIX_GRID)
}

/// All keys a matrix equal to `m` within tolerance could have been stored under.
pub(crate) fn matrix_probes(m: &Isometry) -> Vec<Key<4>> {
    let flip = canonical_sign(m);
    let mut keys = probe_keys(&signed_coords(m, flip), MATRIX_GRID);
    if m.a().re.abs() <= SIGN_EPS {
        keys.extend(probe_keys(&signed_coords(m, !flip), MATRIX_GRID));
    }
    keys
}

/// Set of isometries up to sign, tolerant to rounding.
pub(crate) struct MatrixSet {
    table: HashTable<u32>,
}

impl MatrixSet {
    pub(crate) fn with_capacity(n: usize) -> Self {
        Self { table: HashTable::with_capacity(n) }
    }

    pub(crate) fn find(&self, m: &Isometry, get: impl Fn(u32) -> Isometry) -> Option<u32> {
        for k in matrix_probes(m) {
            if let Some(&i) = self.table.find(hash_key(&k), |&i| matrix_key(&get(i)) == k) {
                return Some(i);
            }
        }
        None
    }

    pub(crate) fn insert(&mut self, idx: u32, m: &Isometry, get: impl Fn(u32) -> Isometry) {
        let k = matrix_key(m);
        self.table.insert_unique(hash_key(&k), idx, |&i| hash_key(&matrix_key(&get(i))));
    }
}

pub fn enumerate_ball(s: &SurfaceModel, radius: f64) -> Result<BallEnumeration, FuchsianError> {
    enumerate_ball_with(s, radius, &EnumerateOptions::for_surface(s))
}

pub fn enumerate_ball_with(
    s: &SurfaceModel,
    radius: f64,
    opts: &EnumerateOptions,
) -> Result<BallEnumeration, FuchsianError> {
    if radius > s.hard_cap {
        return Err(FuchsianError::RadiusTooLarge { radius, cap: s.hard_cap });
    }
    if !(radius >= 0.0) {
        return Err(FuchsianError::BadSurface(format!("radius must be nonnegative, got {radius}")));
    }
    let dom = &s.domain;
    let (r_in, r_out) = (dom.inradius(), dom.circumradius());
    // Distance from the origin to the tile γF, or the pruning score for the
    // displacement rule; nodes with score ≤ radius are expanded.
    let score = |m: &Isometry, d: f64| -> f64 {
        match opts.prune {
            PruneRule::Displacement(c) => d - c,
            PruneRule::Tile => {
                if d - r_in <= radius {
                    (d - r_out).max(0.0).min(radius)
                } else if d - r_out > radius {
                    d - r_out
                } else {
                    dom.distance_to(&from_disk(m.inverse().map_z(num_complex::Complex64::new(0.0, 0.0))))
                }
            }
        }
    };

    let mut nodes: Vec<Node> = vec![Node { m: Isometry::identity(), parent: 0, letter: 0, depth: 0 }];
    let mut set = MatrixSet::with_capacity(1024);
    set.insert(0, &nodes[0].m, |i| nodes[i as usize].m);
    let mut members = vec![0u32];
    let mut head = 0usize;
    let nl = s.generators.len() as u8;

    while head < nodes.len() {
        let node = nodes[head];
        for l in 0..nl {
            if head != 0 && l == node.letter ^ 1 {
                continue;
            }
            let mut m = node.m * s.generators[l as usize];
            let depth = node.depth.saturating_add(1);
            if depth as usize % RENORMALIZE_EVERY == 0 {
                m = m.renormalized();
            }
            let d = m.displacement();
            if score(&m, d) > radius {
                continue;
            }
            if set.find(&m, |i| nodes[i as usize].m).is_some() {
                continue;
            }
            if nodes.len() >= opts.node_budget {
                let completed = nodes[head..]
                    .iter()
                    .map(|n| score(&n.m, n.m.displacement()))
                    .fold(f64::INFINITY, f64::min)
                    .min(radius);
                return Err(FuchsianError::MemoryBudget { budget: opts.node_budget, completed_radius: completed });
            }
            let idx = nodes.len() as u32;
            nodes.push(Node { m, parent: head as u32, letter: l, depth });
            set.insert(idx, &m, |i| nodes[i as usize].m);
            if d <= radius {
                members.push(idx);
            }
        }
        head += 1;
    }
    let visited = nodes.len();
    Ok(BallEnumeration { radius, nodes, members, visited })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuchsian::eval_word;

    #[test]
    fn radius_zero_is_identity_only() {
        let s = SurfaceModel::bolza();
        let b = enumerate_ball(&s, 0.0).unwrap();
        assert_eq!(b.len(), 1);
        assert!(b.word(0).is_empty());
    }

    #[test]
    fn systole_ball_holds_the_generators() {
        let s = SurfaceModel::bolza();
        let b = enumerate_ball(&s, 3.1).unwrap();
        assert_eq!(b.len(), 9);
        for i in 1..9 {
            assert_eq!(b.word(i).len(), 1);
            assert!((b.displacement(i) - 3.057142).abs() < 1e-6);
        }
    }

    #[test]
    fn words_evaluate_to_matrices_and_sets_are_nested() {
        let s = SurfaceModel::bolza();
        let small = enumerate_ball(&s, 5.0).unwrap();
        let big = enumerate_ball(&s, 7.0).unwrap();
        let mut set = MatrixSet::with_capacity(big.len());
        for i in 0..big.len() {
            let e = big.element(i);
            let w = eval_word(&s.generators, &e.word);
            let diff = (w.a() - e.matrix.a()).norm() + (w.b() - e.matrix.b()).norm();
            let diff_neg = (w.a() + e.matrix.a()).norm() + (w.b() + e.matrix.b()).norm();
            assert!(diff.min(diff_neg) < 1e-7);
            assert!(set.find(&e.matrix, |k| big.matrix(k as usize)).is_none(), "duplicate element");
            set.insert(i as u32, &e.matrix, |k| big.matrix(k as usize));
        }
        for m in small.matrices() {
            assert!(set.find(&m, |k| big.matrix(k as usize)).is_some());
        }
        assert_eq!(big.count_within(5.0), small.len());
    }

    #[test]
    fn hard_cap_and_budget_errors() {
        let s = SurfaceModel::bolza();
        assert!(matches!(enumerate_ball(&s, 30.0), Err(FuchsianError::RadiusTooLarge { .. })));
        let opts = EnumerateOptions { prune: PruneRule::Tile, node_budget: 500 };
        match enumerate_ball_with(&s, 9.0, &opts) {
            Err(FuchsianError::MemoryBudget { completed_radius, .. }) => {
                assert!(completed_radius < 9.0);
                let full = enumerate_ball(&s, 9.0).unwrap();
                let part = enumerate_ball(&s, completed_radius).unwrap();
                assert_eq!(part.len(), full.count_within(completed_radius));
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }
}
