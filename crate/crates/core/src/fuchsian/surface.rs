use num_complex::Complex64;

use super::domain::DirichletDomain;
use super::enumerate::{enumerate_ball_with, EnumerateOptions, PruneRule};
use super::FuchsianError;
use crate::hypgeom::hyperboloid::to_disk;
use crate::hypgeom::{Isometry, TraceClass, RENORMALIZE_EVERY};
use crate::kv::KvMap;

/// Generator index. Letter `2k` is the k-th generator, `2k + 1` its inverse.
pub type Letter = u8;

const RELATOR_TOL: f64 = 1e-8;
const DEFAULT_HARD_CAP: f64 = 16.5;
const DEFAULT_NODE_BUDGET: usize = 40_000_000;

#[inline]
pub fn inverse_letter(l: Letter) -> Letter {
    l ^ 1
}

pub fn inverse_word(w: &[Letter]) -> Vec<Letter> {
    w.iter().rev().map(|&l| inverse_letter(l)).collect()
}

/// `a A b B ...`: lowercase for generators, uppercase for inverses.
pub fn format_word(w: &[Letter]) -> String {
    w.iter()
        .map(|&l| {
            let c = (b'a' + l / 2) as char;
            if l % 2 == 0 {
                c
            } else {
                c.to_ascii_uppercase()
            }
        })
        .collect()
}

pub fn parse_word(s: &str) -> Result<Vec<Letter>, FuchsianError> {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            'a'..='z' => Ok((c as u8 - b'a') * 2),
            'A'..='Z' => Ok((c as u8 - b'A') * 2 + 1),
            _ => Err(FuchsianError::BadSurface(format!("invalid letter {c:?} in word {s:?}"))),
        })
        .collect()
}

pub fn eval_word(generators: &[Isometry], w: &[Letter]) -> Isometry {
    let mut m = Isometry::identity();
    for (i, &l) in w.iter().enumerate() {
        m = m * generators[l as usize];
        if (i + 1) % RENORMALIZE_EVERY == 0 {
            m = m.renormalized();
        }
    }
    m
}

/// Raw surface description before validation.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceConfig {
    pub name: String,
    /// The 2g generators as `(a, b)`; inverses are derived.
    pub generators: Vec<(Complex64, Complex64)>,
    pub relator: Vec<Letter>,
    pub entropy_h: f64,
    pub domain_diameter: f64,
    pub hard_cap: f64,
    pub node_budget: usize,
}

impl SurfaceConfig {
    /// Genus-two Bolza surface: rotations by kπ/4 of the translation with
    /// diagonal 1+√2 and off-diagonal √(2+2√2).
    pub fn bolza() -> Self {
        let a = 1.0 + 2f64.sqrt();
        let b = (2.0 + 2.0 * 2f64.sqrt()).sqrt();
        let generators = (0..4)
            .map(|k| (Complex64::new(a, 0.0), Complex64::from_polar(b, k as f64 * std::f64::consts::FRAC_PI_4)))
            .collect();
        // cosh of the circumradius is (1+√2)²; the diameter is twice that radius.
        let r = (a * a).acosh();
        Self {
            name: "bolza".into(),
            generators,
            relator: vec![0, 3, 4, 7, 1, 2, 5, 6],
            entropy_h: 1.0,
            domain_diameter: 2.0 * r,
            hard_cap: DEFAULT_HARD_CAP,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "bolza" => Some(Self::bolza()),
            _ => None,
        }
    }

    /// Keys: `name`, `generators` (count), `gen.K = a_re a_im b_re b_im`,
    /// `relator` (letters), `entropy_h`, `domain_diameter`, optional
    /// `hard_cap` and `node_budget`.
    pub fn from_kv(map: &KvMap) -> Result<Self, FuchsianError> {
        let bad = |m: String| FuchsianError::BadSurface(m);
        let kv = |e: crate::kv::KvError| FuchsianError::BadSurface(e.message);
        let name = map.get("name").ok_or_else(|| bad("missing `name`".into()))?.to_string();
        let count = map.get_u64("generators").map_err(kv)?.ok_or_else(|| bad("missing `generators`".into()))? as usize;
        let mut generators = Vec::with_capacity(count);
        for k in 0..count {
            let key = format!("gen.{k}");
            let v = map.get_f64_list(&key).map_err(kv)?.ok_or_else(|| bad(format!("missing `{key}`")))?;
            if v.len() != 4 {
                return Err(bad(format!("`{key}` needs four numbers")));
            }
            generators.push((Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3])));
        }
        let relator = parse_word(map.get("relator").ok_or_else(|| bad("missing `relator`".into()))?)?;
        let entropy_h = map.get_f64("entropy_h").map_err(kv)?.ok_or_else(|| bad("missing `entropy_h`".into()))?;
        let domain_diameter =
            map.get_f64("domain_diameter").map_err(kv)?.ok_or_else(|| bad("missing `domain_diameter`".into()))?;
        let hard_cap = map.get_f64("hard_cap").map_err(kv)?.unwrap_or(DEFAULT_HARD_CAP);
        let node_budget = map.get_u64("node_budget").map_err(kv)?.map_or(DEFAULT_NODE_BUDGET, |v| v as usize);
        Ok(Self { name, generators, relator, entropy_h, domain_diameter, hard_cap, node_budget })
    }

    pub fn to_kv(&self) -> KvMap {
        let mut m = KvMap::default();
        m.insert("name", self.name.clone());
        m.insert("generators", self.generators.len().to_string());
        for (k, (a, b)) in self.generators.iter().enumerate() {
            m.insert(format!("gen.{k}"), format!("{} {} {} {}", a.re, a.im, b.re, b.im));
        }
        m.insert("relator", format_word(&self.relator));
        m.insert("entropy_h", self.entropy_h.to_string());
        m.insert("domain_diameter", self.domain_diameter.to_string());
        m.insert("hard_cap", self.hard_cap.to_string());
        m.insert("node_budget", self.node_budget.to_string());
        m
    }
}

/// Validated surface group.
#[derive(Debug, Clone)]
pub struct SurfaceModel {
    pub name: String,
    /// Letters `0..4g`; the inverse of letter `i` is letter `i ^ 1`.
    pub generators: Vec<Isometry>,
    pub relator: Vec<Letter>,
    pub entropy_h: f64,
    pub domain_diameter: f64,
    pub hard_cap: f64,
    pub node_budget: usize,
    pub domain: DirichletDomain,
}

pub fn load_surface(cfg: &SurfaceConfig) -> Result<SurfaceModel, FuchsianError> {
    let bad = |m: String| FuchsianError::BadSurface(m);
    if cfg.generators.is_empty() || cfg.generators.len() % 2 != 0 {
        return Err(bad(format!("need an even positive number of generators, got {}", cfg.generators.len())));
    }
    if !(cfg.entropy_h > 0.0) {
        return Err(bad(format!("entropy_h must be positive, got {}", cfg.entropy_h)));
    }
    if !(cfg.domain_diameter > 0.0) {
        return Err(bad(format!("domain_diameter must be positive, got {}", cfg.domain_diameter)));
    }
    if !(cfg.hard_cap > 0.0) {
        return Err(bad("hard_cap must be positive".into()));
    }
    let mut generators = Vec::with_capacity(2 * cfg.generators.len());
    for (k, &(a, b)) in cfg.generators.iter().enumerate() {
        let g = Isometry::new(a, b).map_err(|e| bad(format!("generator {k}: {e}")))?;
        match g.trace_class() {
            Ok(TraceClass::Hyperbolic { .. }) => {}
            Ok(_) => return Err(bad(format!("generator {k} is not hyperbolic"))),
            Err(e) => return Err(bad(format!("generator {k}: {e}"))),
        }
        generators.push(g);
        generators.push(g.inverse());
    }
    let n = generators.len() as u8;
    if let Some(&l) = cfg.relator.iter().find(|&&l| l >= n) {
        return Err(bad(format!("relator letter {l} out of range")));
    }
    if cfg.relator.is_empty() {
        return Err(bad("empty relator".into()));
    }
    let r = eval_word(&generators, &cfg.relator);
    let off = (r.a().re.abs() - 1.0).abs() + r.a().im.abs() + r.b().norm();
    if off > RELATOR_TOL {
        return Err(bad(format!("relator does not close: distance {off:e} from ±identity")));
    }
    let domain = DirichletDomain::new(&generators)?;
    let mut model = SurfaceModel {
        name: cfg.name.clone(),
        generators,
        relator: cfg.relator.clone(),
        entropy_h: cfg.entropy_h,
        domain_diameter: cfg.domain_diameter,
        hard_cap: cfg.hard_cap,
        node_budget: cfg.node_budget,
        domain,
    };
    if model.domain.is_tiling() {
        let r = 2.0 * model.domain.circumradius() + 1e-6;
        let opts = EnumerateOptions { prune: PruneRule::Tile, node_budget: cfg.node_budget };
        let ball = enumerate_ball_with(&model, r.min(cfg.hard_cap), &opts)?;
        let touching = ball
            .matrices()
            .skip(1)
            .filter(|g| {
                // σF touches F exactly when they share a vertex
                let corners: Vec<Complex64> = model.domain.vertices().iter().map(to_disk).collect();
                corners.iter().any(|&v| {
                    let w = g.map_z(v);
                    corners.iter().any(|&u| (w - u).norm() < 1e-9)
                })
            })
            .collect();
        model.domain.set_neighbors(touching);
    } else {
        // generic surfaces: reduce with a Dirichlet test set instead of walls alone
        let r = (2.0 * cfg.domain_diameter).min(cfg.hard_cap);
        let opts = EnumerateOptions { prune: PruneRule::Displacement(r), node_budget: cfg.node_budget };
        let ball = enumerate_ball_with(&model, r, &opts)?;
        let test_set = ball.matrices().skip(1).collect();
        model.domain.set_fallback(test_set, cfg.domain_diameter);
        let near = ball.matrices().skip(1).collect();
        model.domain.set_neighbors(near);
    }
    Ok(model)
}

impl SurfaceModel {
    pub fn bolza() -> Self {
        load_surface(&SurfaceConfig::bolza()).expect("built-in preset is valid")
    }

    pub fn genus(&self) -> usize {
        self.generators.len() / 4
    }

    pub fn letter_count(&self) -> usize {
        self.generators.len()
    }

    pub fn area(&self) -> f64 {
        4.0 * std::f64::consts::PI * (self.genus() as f64 - 1.0)
    }

    pub fn eval(&self, w: &[Letter]) -> Isometry {
        eval_word(&self.generators, w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bolza_relator_and_generators() {
        let s = SurfaceModel::bolza();
        assert_eq!(s.generators.len(), 8);
        assert_eq!(s.genus(), 2);
        let r = s.eval(&s.relator);
        assert!((r.a().re.abs() - 1.0).abs() + r.a().im.abs() + r.b().norm() < 1e-8);
        for g in &s.generators {
            assert_abs_diff_eq!(g.trace().abs(), 2.0 * (1.0 + 2f64.sqrt()), epsilon = 1e-12);
            let l = g.trace_class().unwrap().translation_length().unwrap();
            assert_abs_diff_eq!(l, 3.057142, epsilon = 1e-6);
            assert_abs_diff_eq!(l, 2.0 * (1.0 + 2f64.sqrt()).acosh(), epsilon = 1e-9);
        }
        for l in 0..8u8 {
            let p = s.generators[l as usize] * s.generators[inverse_letter(l) as usize];
            assert!((p.a() - 1.0).norm() + p.b().norm() < 1e-12);
        }
    }

    #[test]
    fn perturbed_surface_is_rejected() {
        let mut cfg = SurfaceConfig::bolza();
        let (a, b) = cfg.generators[1];
        let b2 = b * 1.001;
        let a2 = Complex64::new((1.0 + b2.norm_sqr()).sqrt(), 0.0);
        assert!(a.re > 0.0);
        cfg.generators[1] = (a2, b2);
        assert!(matches!(load_surface(&cfg), Err(FuchsianError::BadSurface(_))));

        let mut elliptic = SurfaceConfig::bolza();
        elliptic.generators[0] = (Complex64::new(0.0, 1.0), Complex64::new(0.0, 0.0));
        assert!(matches!(load_surface(&elliptic), Err(FuchsianError::BadSurface(_))));

        let mut neg = SurfaceConfig::bolza();
        neg.entropy_h = 0.0;
        assert!(load_surface(&neg).is_err());
    }

    #[test]
    fn words_round_trip_and_kv_config() {
        let w = parse_word("aBcDAbCd").unwrap();
        assert_eq!(w, vec![0, 3, 4, 7, 1, 2, 5, 6]);
        assert_eq!(format_word(&w), "aBcDAbCd");
        assert_eq!(inverse_word(&[0, 3]), vec![2, 1]);
        assert!(parse_word("a1").is_err());
        let cfg = SurfaceConfig::bolza();
        let back = SurfaceConfig::from_kv(&KvMap::parse(&cfg.to_kv().to_string()).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}
