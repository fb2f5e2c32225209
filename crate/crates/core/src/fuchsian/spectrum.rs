use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::enumerate::{enumerate_ball_with, EnumerateOptions, PruneRule};
use super::surface::{format_word, Letter, SurfaceModel};
use super::words::{cyclic_reduce, least_rotation, Canonicalizer};
use super::FuchsianError;
use crate::hypgeom::hyperboloid::{dot, frame, phase_at};
use crate::hypgeom::{BoundaryPoint, GeomError, Isometry, PhasePoint, TraceClass, PARABOLIC_WINDOW};
use crate::quant::{cell_key, probe_keys, Key};

/// Grid for class keys (length and axis endpoints).
const CLASS_GRID: f64 = 1e-6;
/// Lengths closer than this share a multiplicity bucket.
const MERGE_TOL: f64 = 1e-6;
/// Lifts whose distances to the origin differ by less than this are tied.
const TIE_TOL: f64 = 1e-9;
/// Slack for the walk-based screen, far above its accumulated rounding.
const SCREEN_TOL: f64 = 1e-6;
const WALK_BUDGET: usize = 100_000;

/// Lift of a closed geodesic chosen canonically: the one nearest the origin,
/// ties broken by the lexicographically smallest endpoint coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisLift {
    pub rho: f64,
    pub forward: BoundaryPoint,
    pub backward: BoundaryPoint,
}

impl AxisLift {
    fn coords(&self) -> [f64; 4] {
        let (f, b) = (self.forward.u(), self.backward.u());
        [f.re, f.im, b.re, b.im]
    }

    fn precedes(&self, other: &Self) -> bool {
        if self.rho < other.rho - TIE_TOL {
            return true;
        }
        if self.rho > other.rho + TIE_TOL {
            return false;
        }
        for (x, y) in self.coords().iter().zip(other.coords()) {
            if (x - y).abs() > TIE_TOL {
                return *x < y;
            }
        }
        false
    }
}

/// Distance from the origin to the axis of a hyperbolic `h`:
/// `sinh ρ = |Im a| / sinh(ℓ/2)`.
fn axis_distance(h: &Isometry) -> f64 {
    let re = h.a().re;
    (h.a().im.abs() / (re * re - 1.0).sqrt()).asinh()
}

/// Walls crossed by the closed geodesic of `g` over one period, starting
/// from the point of its axis at time `offset` past the foot nearest `o`,
/// with the unit normal of the lift's plane at each visit.
fn cutting_sequence(
    s: &SurfaceModel,
    len: f64,
    back: BoundaryPoint,
    fwd: BoundaryPoint,
    offset: f64,
) -> Result<Walk, FuchsianError> {
    let dom = &s.domain;
    let start = crate::hypgeom::flow(&PhasePoint::on_geodesic(back, fwd), offset);
    let (_, mut v) = dom.reduce_phase(&start)?;
    let mut walk = Walk { start: v, letters: Vec::new(), normals: Vec::new() };
    let mut remaining = len;
    for _ in 0..WALK_BUDGET {
        let (p, w) = frame(&v);
        walk.normals.push([-(p[1] * w[2] - p[2] * w[1]), p[2] * w[0] - p[0] * w[2], p[0] * w[1] - p[1] * w[0]]);
        let Some((t, l)) = dom.exit(&p, &w) else {
            return Err(FuchsianError::Walk("geodesic does not leave the domain".into()));
        };
        if t >= remaining {
            return Ok(walk);
        }
        remaining -= t;
        walk.letters.push(l);
        v = s.generators[(l ^ 1) as usize].apply_phase(&phase_at(&p, &w, t))?;
    }
    Err(FuchsianError::Walk("axis walk exceeded its step budget".into()))
}

struct Walk {
    start: PhasePoint,
    letters: Vec<Letter>,
    normals: Vec<[f64; 3]>,
}

fn phase_close(a: &PhasePoint, b: &PhasePoint) -> bool {
    (a.base.z() - b.base.z()).norm() < 1e-7 && crate::scalar::angle_distance(a.dir(), b.dir()) < 1e-6
}

/// Translation length of `g` and the canonical lift of its closed geodesic.
///
/// The axis is followed through the fundamental polygon for one period. With
/// `P` the product of the crossed generators and `τ` the tile around the start
/// that the walk closes up in, the lift seen at the k-th visit is the axis of
/// `letters[k..]·τ·letters[..k]`; conjugating by the tiles touching the closed
/// polygon yields every conjugate whose axis is nearest the origin.
pub fn nearest_lift(s: &SurfaceModel, g: &Isometry) -> Result<(f64, AxisLift), FuchsianError> {
    let (len, attracting, repelling) = match g.trace_class()? {
        TraceClass::Hyperbolic { translation_length, attracting, repelling } => {
            (translation_length, attracting, repelling)
        }
        _ => return Err(FuchsianError::Walk("element is not hyperbolic".into())),
    };
    let dom = &s.domain;
    let mut closed = None;
    for offset in [0.0, 0.173 * len, 0.419 * len] {
        let walk = cutting_sequence(s, len, repelling, attracting, offset)?;
        let p = s.eval(&walk.letters);
        let target = crate::hypgeom::flow(&walk.start, len);
        let tau = std::iter::once(Isometry::identity())
            .chain(dom.neighbors().iter().map(|(t, _)| *t))
            .find(|t| (p * *t).apply_phase(&walk.start).is_ok_and(|v| phase_close(&v, &target)));
        if let Some(tau) = tau {
            closed = Some((walk, tau));
            break;
        }
    }
    let Some((walk, tau)) = closed else {
        return Err(FuchsianError::Walk("cutting sequence does not close up".into()));
    };
    let (letters, normals) = (&walk.letters, &walk.normals);
    // Screen with the walk's normals, then settle on exact conjugates.
    let rho_at = |n: &[f64; 3], y: &[f64; 3]| dot(n, y).abs().asinh();
    let origin = [1.0, 0.0, 0.0];
    let m = letters.len();
    let mut screen = f64::INFINITY;
    for n in normals.iter().take(m.max(1)) {
        screen = screen.min(rho_at(n, &origin));
        for (_, y) in dom.neighbors() {
            screen = screen.min(rho_at(n, y));
        }
    }
    let mut conjugates: Vec<Isometry> = Vec::new();
    for (k, n) in normals.iter().enumerate().take(m.max(1)) {
        let near_o = rho_at(n, &origin) <= screen + SCREEN_TOL;
        let near: Vec<&Isometry> =
            dom.neighbors().iter().filter(|(_, y)| rho_at(n, y) <= screen + SCREEN_TOL).map(|(g, _)| g).collect();
        if !near_o && near.is_empty() {
            continue;
        }
        let h = s.eval(&letters[k..]) * tau * s.eval(&letters[..k]);
        if near_o {
            conjugates.push(h);
        }
        for sigma in near {
            conjugates.push(*sigma * h * sigma.inverse());
        }
    }
    let rho_min = conjugates.iter().map(axis_distance).fold(f64::INFINITY, f64::min);
    let mut best: Option<AxisLift> = None;
    for h in &conjugates {
        let rho = axis_distance(h);
        if rho > rho_min + TIE_TOL {
            continue;
        }
        let TraceClass::Hyperbolic { attracting, repelling, .. } = h.trace_class()? else {
            return Err(FuchsianError::Walk("conjugate is not hyperbolic".into()));
        };
        let lift = AxisLift { rho, forward: attracting, backward: repelling };
        if best.map_or(true, |b| lift.precedes(&b)) {
            best = Some(lift);
        }
    }
    best.map(|b| (len, b)).ok_or_else(|| FuchsianError::Walk("no lift near the origin".into()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicClass {
    pub canonical_word: Vec<Letter>,
    pub trace_abs: f64,
    pub length: f64,
    pub primitive: bool,
    pub axis: (BoundaryPoint, BoundaryPoint),
    pub group_id: usize,
}

impl GeodesicClass {
    /// Builds the class record of a canonical word; the axis is the
    /// canonical lift (forward endpoint first).
    pub fn from_word(
        s: &SurfaceModel,
        word: Vec<Letter>,
        primitive: bool,
        group_id: usize,
    ) -> Result<Self, FuchsianError> {
        let m = s.eval(&word);
        let trace_abs = m.trace().abs();
        let length = 2.0 * (0.5 * trace_abs).acosh();
        let (_, lift) = nearest_lift(s, &m)?;
        Ok(Self { canonical_word: word, trace_abs, length, primitive, axis: (lift.forward, lift.backward), group_id })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumGroup {
    pub length: f64,
    pub multiplicity: usize,
    pub representative: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMeta {
    pub surface: String,
    pub cutoff: f64,
    pub ball_radius: f64,
    pub prune_rule: String,
    pub prune_constant: f64,
    pub dedup_grid: f64,
    pub merge_tolerance: f64,
    pub parabolic_window: f64,
    pub seed: u64,
    pub ball_elements: usize,
    pub visited_nodes: usize,
    pub candidates: usize,
    pub cross_validated_up_to: f64,
    pub canonical_fallbacks: usize,
    pub tool_version: String,
    pub built_at_unix: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumOptions {
    /// Ball radius is `R + margin` when set; otherwise the exact bound
    /// `2·asinh(cosh(r_F)·sinh(R/2))` for the polygon circumradius `r_F`.
    pub margin: Option<f64>,
    /// Classes up to this length are checked word-by-word against the axis keys.
    pub cross_validate_up_to: f64,
    pub enumerate: Option<EnumerateOptions>,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self { margin: None, cross_validate_up_to: 10.0, enumerate: None }
    }
}

/// Oriented closed geodesics with length up to the cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTable {
    pub meta: SpectrumMeta,
    /// Sorted by `(length, canonical_word)`.
    pub classes: Vec<GeodesicClass>,
    pub groups: Vec<SpectrumGroup>,
}

struct KeyMap<const N: usize> {
    map: HashMap<Key<N>, usize>,
}

impl<const N: usize> KeyMap<N> {
    fn new() -> Self {
        Self { map: HashMap::new() }
    }

    fn get(&self, x: &[f64; N]) -> Option<usize> {
        probe_keys(x, CLASS_GRID).iter().find_map(|k| self.map.get(k).copied())
    }

    fn get_or_insert(&mut self, x: &[f64; N], next: usize) -> (usize, bool) {
        if let Some(i) = self.get(x) {
            return (i, false);
        }
        self.map.insert(cell_key(x, CLASS_GRID), next);
        (next, true)
    }
}

fn class_coords(len: f64, lift: &AxisLift) -> [f64; 5] {
    let c = lift.coords();
    [len, c[0], c[1], c[2], c[3]]
}

pub fn build_spectrum(s: &SurfaceModel, cutoff: f64) -> Result<SpectrumTable, FuchsianError> {
    build_spectrum_with(s, cutoff, &SpectrumOptions::default())
}

pub fn build_spectrum_with(
    s: &SurfaceModel,
    cutoff: f64,
    opts: &SpectrumOptions,
) -> Result<SpectrumTable, FuchsianError> {
    let r_f = s.domain.circumradius();
    let margin = opts.margin.or((!s.domain.is_tiling()).then_some(2.0 * s.domain_diameter));
    let ball_radius = match margin {
        Some(c) => cutoff + c,
        None => 2.0 * (r_f.cosh() * (0.5 * cutoff).sinh()).asinh() + 1e-7,
    };
    let eopts = opts.enumerate.unwrap_or_else(|| EnumerateOptions::for_surface(s));
    let ball = enumerate_ball_with(s, ball_radius, &eopts)?;
    let canon = Canonicalizer::new(&s.relator);
    let axis_bound = r_f.cosh() * (1.0 + 1e-9);

    struct Raw {
        length: f64,
        lift: AxisLift,
        rep: usize,
        word: Option<Vec<Letter>>,
    }
    let mut raws: Vec<Raw> = Vec::new();
    let mut keys: KeyMap<5> = KeyMap::new();
    let mut word_class: HashMap<Vec<Letter>, usize> = HashMap::new();
    let mut mismatches: Vec<String> = Vec::new();
    let mut candidates = 0usize;
    let mut fallbacks = 0usize;

    for i in 1..ball.len() {
        let m = ball.matrix(i);
        let half_tr = m.a().re.abs();
        if (half_tr - 1.0).abs() <= 0.5 * PARABOLIC_WINDOW {
            return Err(GeomError::AmbiguousTrace(format!("|tr| = {}", 2.0 * half_tr)).into());
        }
        if half_tr < 1.0 {
            continue;
        }
        let len = 2.0 * half_tr.acosh();
        if len > cutoff {
            continue;
        }
        // the axis passes within r_F of the origin
        if m.b().norm() > axis_bound * (half_tr * half_tr - 1.0).sqrt() {
            continue;
        }
        candidates += 1;
        let (len, lift) = nearest_lift(s, &m)?;
        let (id, fresh) = keys.get_or_insert(&class_coords(len, &lift), raws.len());
        if fresh {
            raws.push(Raw { length: len, lift, rep: i, word: None });
        }
        if len <= opts.cross_validate_up_to {
            match canon.canonical(&ball.word(i)) {
                Ok(w) => {
                    match &raws[id].word {
                        None => raws[id].word = Some(w.clone()),
                        Some(prev) if *prev != w => mismatches.push(format!(
                            "axis class of length {len} has words {} and {}",
                            format_word(prev),
                            format_word(&w)
                        )),
                        _ => {}
                    }
                    let other = *word_class.entry(w.clone()).or_insert(id);
                    if other != id {
                        mismatches.push(format!(
                            "word {} spans axis classes of lengths {} and {}",
                            format_word(&w),
                            raws[other].length,
                            raws[id].length
                        ));
                    }
                }
                Err(_) => fallbacks += 1,
            }
        }
    }
    if !mismatches.is_empty() {
        mismatches.truncate(10);
        return Err(FuchsianError::SpectrumInconsistency(mismatches.join("; ")));
    }

    // primitive roots share the canonical lift's endpoints
    let mut roots: KeyMap<4> = KeyMap::new();
    let mut root_len: Vec<f64> = Vec::new();
    let mut root_of = Vec::with_capacity(raws.len());
    for r in &raws {
        let (id, fresh) = roots.get_or_insert(&r.lift.coords(), root_len.len());
        if fresh {
            root_len.push(r.length);
        } else {
            root_len[id] = root_len[id].min(r.length);
        }
        root_of.push(id);
    }

    let mut classes = Vec::with_capacity(raws.len());
    for (k, r) in raws.into_iter().enumerate() {
        let base = root_len[root_of[k]];
        let mult = (r.length / base).round();
        if (r.length - mult * base).abs() > 1e-6 {
            return Err(FuchsianError::SpectrumInconsistency(format!(
                "class of length {} shares an axis with length {base} but is not an iterate",
                r.length
            )));
        }
        let word = match r.word {
            Some(w) => w,
            None => match canon.canonical(&ball.word(r.rep)) {
                Ok(w) => w,
                Err(_) => {
                    fallbacks += 1;
                    least_rotation(&cyclic_reduce(&ball.word(r.rep)))
                }
            },
        };
        classes.push(GeodesicClass::from_word(s, word, mult == 1.0, 0)?);
    }
    classes.sort_by(|a, b| a.length.total_cmp(&b.length).then_with(|| a.canonical_word.cmp(&b.canonical_word)));
    let groups = assign_groups(&mut classes);

    let (prune_rule, prune_constant) = match eopts.prune {
        PruneRule::Tile => ("tile".to_string(), r_f),
        PruneRule::Displacement(c) => ("displacement".to_string(), c),
    };
    let meta = SpectrumMeta {
        surface: s.name.clone(),
        cutoff,
        ball_radius,
        prune_rule,
        prune_constant,
        dedup_grid: 1e-6,
        merge_tolerance: MERGE_TOL,
        parabolic_window: PARABOLIC_WINDOW,
        seed: 0,
        ball_elements: ball.len(),
        visited_nodes: ball.visited(),
        candidates,
        cross_validated_up_to: opts.cross_validate_up_to.min(cutoff),
        canonical_fallbacks: fallbacks,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        built_at_unix: std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    };
    Ok(SpectrumTable { meta, classes, groups })
}

/// Merges lengths within the tolerance into buckets, sets `group_id` and
/// orders each bucket by word. Expects classes sorted by bucket.
pub(crate) fn assign_groups(classes: &mut [GeodesicClass]) -> Vec<SpectrumGroup> {
    let mut groups: Vec<SpectrumGroup> = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    for c in classes.iter_mut() {
        if groups.is_empty() || (c.length - prev).abs() > MERGE_TOL {
            groups.push(SpectrumGroup { length: c.length, multiplicity: 0, representative: String::new() });
        }
        prev = c.length;
        let g = groups.len() - 1;
        groups[g].multiplicity += 1;
        groups[g].length = groups[g].length.min(c.length);
        c.group_id = g;
    }
    classes.sort_by(|a, b| a.group_id.cmp(&b.group_id).then_with(|| a.canonical_word.cmp(&b.canonical_word)));
    let mut start = 0;
    for g in groups.iter_mut() {
        g.representative = format_word(&classes[start].canonical_word);
        start += g.multiplicity;
    }
    groups
}

impl SpectrumTable {
    pub fn cutoff(&self) -> f64 {
        self.meta.cutoff
    }

    fn check(&self, t: f64) -> Result<(), FuchsianError> {
        if t > self.meta.cutoff + 1e-12 {
            return Err(FuchsianError::OutOfRange { t, cutoff: self.meta.cutoff });
        }
        Ok(())
    }

    fn count_le(&self, t: f64) -> usize {
        self.classes.partition_point(|c| self.groups[c.group_id].length <= t)
    }

    /// Number of oriented classes with length ≤ t, iterates included.
    #[allow(non_snake_case)]
    pub fn count_P(&self, t: f64) -> Result<usize, FuchsianError> {
        self.check(t)?;
        Ok(self.count_le(t))
    }

    /// Number of oriented primitive classes with length ≤ t.
    pub fn count_primitive(&self, t: f64) -> Result<usize, FuchsianError> {
        self.check(t)?;
        Ok(self.classes[..self.count_le(t)].iter().filter(|c| c.primitive).count())
    }

    /// Number of classes with length in (t−ε, t+ε].
    pub fn count_window(&self, t: f64, eps: f64) -> Result<usize, FuchsianError> {
        self.check(t + eps)?;
        Ok(self.count_le(t + eps) - self.count_le(t - eps))
    }

    pub fn systole(&self) -> Option<f64> {
        self.groups.first().map(|g| g.length)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuchsian::surface::{inverse_word, parse_word};

    #[test]
    fn systole_bucket_has_24_classes() {
        let s = SurfaceModel::bolza();
        let t = build_spectrum(&s, 3.1).unwrap();
        assert_eq!(t.classes.len(), 24);
        assert_eq!(t.groups.len(), 1);
        assert_eq!(t.groups[0].multiplicity, 24);
        assert!((t.systole().unwrap() - 3.057142).abs() < 1e-5);
        assert!(t.classes.iter().all(|c| c.primitive && c.canonical_word.len() <= 3));
        assert!(matches!(t.count_P(3.2), Err(FuchsianError::OutOfRange { .. })));
    }

    #[test]
    fn iterates_and_orientation() {
        let s = SurfaceModel::bolza();
        let t = build_spectrum(&s, 6.2).unwrap();
        let sys = t.systole().unwrap();
        let squares: Vec<_> = t.classes.iter().filter(|c| !c.primitive).collect();
        assert_eq!(squares.len(), 24);
        assert!(squares.iter().all(|c| (c.length - 2.0 * sys).abs() < 1e-9));
        let words: std::collections::HashSet<_> = t.classes.iter().map(|c| c.canonical_word.clone()).collect();
        let canon = Canonicalizer::new(&s.relator);
        for c in &t.classes {
            let inv = canon.canonical(&inverse_word(&c.canonical_word)).unwrap();
            assert!(words.contains(&inv));
        }
        for c in t.classes.windows(2) {
            assert!(c[0].length <= c[1].length + MERGE_TOL);
        }
        let total: usize = t.groups.iter().map(|g| g.multiplicity).sum();
        assert_eq!(total, t.classes.len());
        assert_eq!(t.count_P(6.2).unwrap(), t.count_P(4.0).unwrap() + t.count_window(5.1, 1.1).unwrap());
    }

    #[test]
    fn lift_axis_meets_domain() {
        let s = SurfaceModel::bolza();
        for w in ["a", "aB", "abAB", "aBcd"] {
            let g = s.eval(&parse_word(w).unwrap());
            let (len, lift) = nearest_lift(&s, &g).unwrap();
            let ell = 2.0 * (g.trace().abs() / 2.0).acosh();
            assert!((len - ell).abs() < 1e-9, "{w}: {len} {ell}");
            assert!(g.displacement() >= ell - 1e-9);
            assert!(lift.rho <= s.domain.circumradius() + 1e-9, "{w}: {}", lift.rho);
        }
    }
}
