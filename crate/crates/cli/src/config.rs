//! Run configuration: defaults, then the profile, then the config file, then
//! the cache environment variable, then command-line flags.

use std::path::{Path, PathBuf};

use geocount::fuchsian::{load_surface, SurfaceConfig, SurfaceModel};
use geocount::hypgeom::{DiskPoint, PhasePoint};
use geocount::kv::{parse_f64_list, KvMap};
use geocount::mme::PhaseBox;
use serde::Serialize;

use crate::error::CliError;

pub const CACHE_ENV: &str = "GEOCOUNT_CACHE_DIR";
pub const DEFAULT_CACHE_DIR: &str = ".geocount-cache";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileName {
    Full,
    Quick,
}

impl ProfileName {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "full" => Ok(Self::Full),
            "quick" => Ok(Self::Quick),
            _ => Err(CliError::Config(format!("unknown tolerance profile {s:?} (expected full or quick)"))),
        }
    }
}

/// Problem sizes of the experiments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Profile {
    pub name: ProfileName,
    pub radius: f64,
    pub t_grid: Vec<f64>,
    pub samples: u64,
    pub ball_radius: f64,
    pub shell_inner: f64,
    pub equivariance_radius: f64,
    pub brute_force_radius: f64,
    pub brute_force_words: usize,
    pub cross_validate: f64,
    pub knieper_boxes: usize,
    pub busemann_triples: usize,
    pub holonomy_configs: usize,
    pub equidistribution_boxes: usize,
    pub jacobi_cases: usize,
}

impl Profile {
    pub fn of(name: ProfileName) -> Self {
        match name {
            ProfileName::Full => Self {
                name,
                radius: 12.5,
                t_grid: vec![8.0, 10.0, 12.0],
                samples: 1_000_000,
                ball_radius: 13.0,
                shell_inner: 6.5,
                equivariance_radius: 12.0,
                brute_force_radius: 6.0,
                brute_force_words: 8,
                cross_validate: 8.0,
                knieper_boxes: 10,
                busemann_triples: 10_000,
                holonomy_configs: 10,
                equidistribution_boxes: 5,
                jacobi_cases: 100,
            },
            ProfileName::Quick => Self {
                name,
                radius: 10.5,
                t_grid: vec![6.0, 8.0, 10.0],
                samples: 50_000,
                ball_radius: 11.0,
                shell_inner: 5.5,
                equivariance_radius: 10.0,
                brute_force_radius: 4.5,
                brute_force_words: 6,
                cross_validate: 6.0,
                knieper_boxes: 3,
                busemann_triples: 1_000,
                holonomy_configs: 3,
                equidistribution_boxes: 3,
                jacobi_cases: 20,
            },
        }
    }
}

/// Pass/fail thresholds; each can be overridden by a `tol.<name>` config key.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    pub relator_closure: f64,
    pub systole: f64,
    pub growth_lo: f64,
    pub growth_hi: f64,
    pub busemann: f64,
    pub transformation: f64,
    pub knieper: f64,
    pub area: f64,
    pub expansion: f64,
    pub holonomy: f64,
    pub mixing_sigmas: f64,
    pub equidistribution: f64,
    pub window_lo: f64,
    pub window_hi: f64,
    pub cumulative_lo: f64,
    pub cumulative_hi: f64,
    pub crossings: f64,
    pub riccati: f64,
    pub rank: f64,
    pub gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            relator_closure: 1e-8,
            systole: 1e-9,
            growth_lo: 0.9,
            growth_hi: 1.1,
            busemann: 1e-6,
            transformation: 0.05,
            knieper: 0.05,
            area: 0.005,
            expansion: 1e-9,
            holonomy: 0.05,
            mixing_sigmas: 3.0,
            equidistribution: 0.2,
            window_lo: 0.8,
            window_hi: 1.3,
            cumulative_lo: 0.85,
            cumulative_hi: 1.25,
            crossings: 0.25,
            riccati: 1e-6,
            rank: geocount::jacobi::DEFAULT_RANK_TOL,
            gap: geocount::jacobi::DEFAULT_GAP_TOL,
        }
    }
}

impl Tolerances {
    fn slot(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "relator_closure" => &mut self.relator_closure,
            "systole" => &mut self.systole,
            "growth_lo" => &mut self.growth_lo,
            "growth_hi" => &mut self.growth_hi,
            "busemann" => &mut self.busemann,
            "transformation" => &mut self.transformation,
            "knieper" => &mut self.knieper,
            "area" => &mut self.area,
            "expansion" => &mut self.expansion,
            "holonomy" => &mut self.holonomy,
            "mixing_sigmas" => &mut self.mixing_sigmas,
            "equidistribution" => &mut self.equidistribution,
            "window_lo" => &mut self.window_lo,
            "window_hi" => &mut self.window_hi,
            "cumulative_lo" => &mut self.cumulative_lo,
            "cumulative_hi" => &mut self.cumulative_hi,
            "crossings" => &mut self.crossings,
            "riccati" => &mut self.riccati,
            "rank" => &mut self.rank,
            "gap" => &mut self.gap,
            _ => return None,
        })
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<(), CliError> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(CliError::Config(format!("tolerance {name} must be positive, got {value}")));
        }
        *self.slot(name).ok_or_else(|| CliError::Config(format!("unknown tolerance {name:?}")))? = value;
        Ok(())
    }
}

/// Values supplied on the command line; `None` leaves the lower layers in place.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub surface: Option<String>,
    pub radius: Option<f64>,
    pub t_grid: Option<Vec<f64>>,
    pub epsilon: Option<f64>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub phase_box: Option<String>,
    pub out: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub profile: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub surface: String,
    pub radius: f64,
    pub t_grid: Vec<f64>,
    pub epsilon: f64,
    pub samples: u64,
    pub seed: u64,
    #[serde(rename = "box")]
    pub phase_box: Option<PhaseBox>,
    pub tolerances: Tolerances,
    pub profile: Profile,
    pub out: PathBuf,
    pub cache_dir: PathBuf,
}

fn cfg_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

/// `cx,cy,dir,radius,halfwidth` in disk coordinates.
pub fn parse_box(s: &str) -> Result<PhaseBox, CliError> {
    let v = parse_f64_list(s).map_err(cfg_err)?;
    if v.len() != 5 {
        return Err(CliError::Config(format!("--box needs cx,cy,dir,radius,halfwidth; got {} numbers", v.len())));
    }
    let c = DiskPoint::from_re_im(v[0], v[1]).map_err(cfg_err)?;
    Ok(PhaseBox::new(PhasePoint::new(c, v[2]), v[3], v[4])?)
}

const FILE_KEYS: [&str; 10] =
    ["surface", "radius", "t", "epsilon", "samples", "seed", "box", "out", "cache_dir", "tolerance_profile"];

impl RunConfig {
    pub fn resolve(o: &Overrides, env_cache: Option<String>) -> Result<Self, CliError> {
        let file = match &o.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                KvMap::parse(&text).map_err(cfg_err)?
            }
            None => KvMap::default(),
        };
        for k in file.keys() {
            if !FILE_KEYS.contains(&k) && !k.starts_with("tol.") {
                return Err(CliError::Config(format!("unknown config key {k:?}")));
            }
        }
        let profile_name = match o.profile.as_deref().or(file.get("tolerance_profile")) {
            Some(p) => ProfileName::parse(p)?,
            None => ProfileName::Full,
        };
        let profile = Profile::of(profile_name);
        let mut tolerances = Tolerances::default();
        for k in file.keys().filter(|k| k.starts_with("tol.")) {
            let v = file.get_f64(k).map_err(cfg_err)?.unwrap_or_default();
            tolerances.set(&k[4..], v)?;
        }
        let phase_box = match o.phase_box.as_deref().or(file.get("box")) {
            Some(b) => Some(parse_box(b)?),
            None => None,
        };
        let cache_dir = o
            .cache_dir
            .clone()
            .or(env_cache.filter(|s| !s.is_empty()).map(PathBuf::from))
            .or(file.get("cache_dir").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR));
        let cfg = Self {
            surface: o.surface.clone().or(file.get("surface").map(String::from)).unwrap_or_else(|| "bolza".into()),
            radius: o.radius.or(file.get_f64("radius").map_err(cfg_err)?).unwrap_or(profile.radius),
            t_grid: o
                .t_grid
                .clone()
                .or(file.get_f64_list("t").map_err(cfg_err)?)
                .unwrap_or_else(|| profile.t_grid.clone()),
            epsilon: o
                .epsilon
                .or(file.get_f64("epsilon").map_err(cfg_err)?)
                .unwrap_or(geocount::dynlab::DEFAULT_EPSILON),
            samples: o.samples.or(file.get_u64("samples").map_err(cfg_err)?).unwrap_or(profile.samples),
            seed: o.seed.or(file.get_u64("seed").map_err(cfg_err)?).unwrap_or(7),
            phase_box,
            tolerances,
            profile,
            out: o.out.clone().or(file.get("out").map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out")),
            cache_dir,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CliError::Config(format!("{name} must be positive, got {v}")))
            }
        };
        pos("radius", self.radius)?;
        pos("epsilon", self.epsilon)?;
        pos("samples", self.samples as f64)?;
        if self.t_grid.is_empty() {
            return Err(CliError::Config("t grid is empty".into()));
        }
        for &t in &self.t_grid {
            pos("t", t)?;
        }
        let t_max = self.t_grid.iter().copied().fold(0.0, f64::max);
        if t_max + self.epsilon > self.radius + 1e-12 {
            return Err(CliError::Config(format!(
                "max t {t_max} + epsilon {} exceeds the radius {}",
                self.epsilon, self.radius
            )));
        }
        Ok(())
    }

    pub fn t_max(&self) -> f64 {
        self.t_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn t_min(&self) -> f64 {
        self.t_grid.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Preset name or path to a `key = value` surface file.
    pub fn load_surface(&self) -> Result<SurfaceModel, CliError> {
        let sc = match SurfaceConfig::preset(&self.surface) {
            Some(c) => c,
            None => {
                let p = Path::new(&self.surface);
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::Config(format!("surface {:?} is neither a preset nor a file: {e}", self.surface))
                })?;
                SurfaceConfig::from_kv(&KvMap::parse(&text).map_err(cfg_err)?)?
            }
        };
        Ok(load_surface(&sc)?)
    }
}
