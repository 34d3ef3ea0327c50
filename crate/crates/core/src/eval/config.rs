//! INI-style run configuration and scenario files.
//!
//! Every section and key is optional; unknown sections or keys are errors so
//! typos do not silently fall back to defaults.

use std::path::Path;

use ini::{Ini, Properties};

use crate::competency::CompetencyConfig;
use crate::control::LqrWeights;
use crate::dynamics::{ControlInput, DynamicsParams, InputBounds, VehicleState};
use crate::error::{config, Result};
use crate::planner::{GoalSpec, PlannerConfig, PlannerVariant};
use crate::segmentation::FhParams;
use crate::world::{CameraModel, ConvexPolygon, Extent, Obstacle, TerrainClass, TerrainLayout, TerrainPalette, TextureKind, World};

use super::corpus::CorpusConfig;

/// Classifier and autoencoder fitting options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub rank: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            epochs: 5000,
            learning_rate: 8.0,
            rank: 32,
        }
    }
}

/// Everything a command needs besides file paths.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub camera: CameraModel,
    pub dynamics: DynamicsParams,
    pub planner: PlannerConfig,
    /// Control steps between replanning.
    pub replan_every: usize,
    pub lqr: LqrWeights,
    pub competency: CompetencyConfig,
    pub segmentation: FhParams,
    pub training: TrainingConfig,
    pub corpus: CorpusConfig,
    pub trials_per_cell: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            camera: CameraModel::default(),
            dynamics: DynamicsParams::default(),
            planner: PlannerConfig::default(),
            replan_every: 10,
            lqr: LqrWeights::default(),
            competency: CompetencyConfig::default(),
            segmentation: FhParams::default(),
            training: TrainingConfig::default(),
            corpus: CorpusConfig::default(),
            trials_per_cell: 10,
        }
    }
}

/// Typed accessors over one INI section.
struct Section<'a> {
    name: &'a str,
    props: &'a Properties,
}

impl<'a> Section<'a> {
    fn new(name: &'a str, props: &'a Properties, allowed: &[&str]) -> Result<Self> {
        for (k, _) in props.iter() {
            if !allowed.contains(&k) {
                return Err(config(format!("unknown key '{k}' in [{name}]")));
            }
        }
        Ok(Self { name, props })
    }

    fn raw(&self, key: &str) -> Option<&'a str> {
        self.props.get(key).map(str::trim)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| config(format!("[{}] {key} = '{v}' is not a valid value", self.name))),
        }
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64> {
        let v: f64 = self.parse(key, default)?;
        if !v.is_finite() {
            return Err(config(format!("[{}] {key} must be finite", self.name)));
        }
        Ok(v)
    }

    fn degrees(&self, key: &str, default_rad: f64) -> Result<f64> {
        Ok(self.f64(key, default_rad.to_degrees())?.to_radians())
    }

    fn list<const N: usize>(&self, key: &str, default: [f64; N]) -> Result<[f64; N]> {
        let Some(v) = self.raw(key) else { return Ok(default) };
        let parts: Vec<f64> = v
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| config(format!("[{}] {key} must be a comma-separated list of numbers", self.name)))?;
        parts
            .try_into()
            .map_err(|_| config(format!("[{}] {key} needs exactly {N} values", self.name)))
    }
}

fn load_ini(text: &str, origin: &str) -> Result<Ini> {
    Ini::load_from_str(text).map_err(|e| config(format!("{origin}: {e}")))
}

fn section<'a>(ini: &'a Ini, name: &'a str, allowed: &[&str]) -> Result<Option<Section<'a>>> {
    ini.section(Some(name)).map(|p| Section::new(name, p, allowed)).transpose()
}

fn check_sections(ini: &Ini, allowed: &[&str], prefixes: &[&str]) -> Result<()> {
    for (name, props) in ini.iter() {
        match name {
            None if props.is_empty() => {}
            None => return Err(config("keys outside any section")),
            Some(n) if allowed.contains(&n) || prefixes.iter().any(|p| n.starts_with(p)) => {}
            Some(n) => return Err(config(format!("unknown section [{n}]"))),
        }
    }
    Ok(())
}

fn parse_camera(ini: &Ini, base: &CameraModel) -> Result<CameraModel> {
    let keys = [
        "height_above_ground",
        "pitch_deg",
        "horizontal_fov_deg",
        "vertical_fov_deg",
        "image_width",
        "image_height",
        "max_view_distance",
        "mount_offset",
    ];
    let Some(s) = section(ini, "camera", &keys)? else { return Ok(*base) };
    let cam = CameraModel {
        height_above_ground: s.f64("height_above_ground", base.height_above_ground)?,
        pitch: s.degrees("pitch_deg", base.pitch)?,
        horizontal_fov: s.degrees("horizontal_fov_deg", base.horizontal_fov)?,
        vertical_fov: s.degrees("vertical_fov_deg", base.vertical_fov)?,
        image_width: s.parse("image_width", base.image_width)?,
        image_height: s.parse("image_height", base.image_height)?,
        max_view_distance: s.f64("max_view_distance", base.max_view_distance)?,
        mount_offset: s.f64("mount_offset", base.mount_offset)?,
    };
    cam.validate().map_err(|e| config(e.to_string()))?;
    Ok(cam)
}

impl RunConfig {
    pub fn from_ini_str(text: &str) -> Result<Self> {
        let ini = load_ini(text, "config")?;
        check_sections(
            &ini,
            &["run", "camera", "dynamics", "vehicle", "planner", "lqr", "competency", "segmentation", "training", "corpus", "benchmark"],
            &[],
        )?;
        let mut cfg = RunConfig::default();
        if let Some(s) = section(&ini, "run", &["seed"])? {
            cfg.seed = s.parse("seed", cfg.seed)?;
        }
        cfg.camera = parse_camera(&ini, &cfg.camera)?;
        if let Some(s) = section(&ini, "dynamics", &["dt", "alpha", "beta", "t_min", "t_max", "s_min", "s_max"])? {
            let d = &mut cfg.dynamics;
            d.dt = s.f64("dt", d.dt)?;
            d.alpha = s.f64("alpha", d.alpha)?;
            d.beta = s.f64("beta", d.beta)?;
            d.limits = InputBounds::new(
                ControlInput::new(s.f64("t_min", d.limits.min.t)?, s.f64("s_min", d.limits.min.s)?),
                ControlInput::new(s.f64("t_max", d.limits.max.t)?, s.f64("s_max", d.limits.max.s)?),
            );
            if !(d.dt > 0.0) || !d.limits.is_valid() {
                return Err(config("[dynamics] needs dt > 0 and min <= max limits"));
            }
        }
        if let Some(s) = section(&ini, "vehicle", &["length", "width"])? {
            let f = &mut cfg.planner.footprint;
            f.length = s.f64("length", f.length)?;
            f.width = s.f64("width", f.width)?;
            if !(f.length > 0.0 && f.width > 0.0) {
                return Err(config("[vehicle] dimensions must be positive"));
            }
        }
        let planner_keys = [
            "variant",
            "n_samples",
            "horizon",
            "t_min",
            "t_max",
            "s_min",
            "s_max",
            "w_orientation",
            "w_goal_x",
            "w_goal_y",
            "backup_time",
            "turn_time",
            "backup_speed",
            "turn_rate",
            "near_field_range",
            "near_field_half_width",
            "replan_every",
        ];
        if let Some(s) = section(&ini, "planner", &planner_keys)? {
            let p = &mut cfg.planner;
            if let Some(v) = s.raw("variant") {
                p.variant = PlannerVariant::parse(v)?;
            }
            p.n_samples = s.parse("n_samples", p.n_samples)?;
            p.horizon = s.parse("horizon", p.horizon)?;
            p.bounds = InputBounds::new(
                ControlInput::new(s.f64("t_min", p.bounds.min.t)?, s.f64("s_min", p.bounds.min.s)?),
                ControlInput::new(s.f64("t_max", p.bounds.max.t)?, s.f64("s_max", p.bounds.max.s)?),
            );
            p.weights.orientation = s.f64("w_orientation", p.weights.orientation)?;
            p.weights.goal_x = s.f64("w_goal_x", p.weights.goal_x)?;
            p.weights.goal_y = s.f64("w_goal_y", p.weights.goal_y)?;
            p.backup_time = s.f64("backup_time", p.backup_time)?;
            p.turn_time = s.f64("turn_time", p.turn_time)?;
            p.backup_speed = s.f64("backup_speed", p.backup_speed)?;
            p.turn_rate = s.f64("turn_rate", p.turn_rate)?;
            p.near_field_range = s.f64("near_field_range", p.near_field_range)?;
            p.near_field_half_width = s.f64("near_field_half_width", p.near_field_half_width)?;
            cfg.replan_every = s.parse("replan_every", cfg.replan_every)?;
            if cfg.replan_every == 0 {
                return Err(config("[planner] replan_every must be >= 1"));
            }
        }
        if let Some(s) = section(&ini, "lqr", &["q", "r"])? {
            let q = s.list("q", [1.0, 1.0, 2.0, 0.5, 0.0])?;
            let r = s.list("r", [0.1, 0.1])?;
            cfg.lqr = LqrWeights::from_diagonals(q, r)?;
        }
        let comp_keys = ["confidence_overall", "confidence_regional", "threshold_overall", "threshold_regional"];
        if let Some(s) = section(&ini, "competency", &comp_keys)? {
            let c = &mut cfg.competency;
            c.confidence_overall = s.f64("confidence_overall", c.confidence_overall)?;
            c.confidence_regional = s.f64("confidence_regional", c.confidence_regional)?;
            c.threshold_overall = s.f64("threshold_overall", c.threshold_overall)?;
            c.threshold_regional = s.f64("threshold_regional", c.threshold_regional)?;
            c.validate().map_err(|e| config(e.to_string()))?;
        }
        cfg.planner.overall_threshold = cfg.competency.threshold_overall;
        cfg.planner.regional_threshold = cfg.competency.threshold_regional;
        cfg.planner.validate()?;
        if let Some(s) = section(&ini, "segmentation", &["k", "min_size", "sigma"])? {
            let f = &mut cfg.segmentation;
            f.k = s.f64("k", f.k)?;
            f.min_size = s.parse("min_size", f.min_size)?;
            f.smoothing_sigma = s.f64("sigma", f.smoothing_sigma)?;
            f.validate().map_err(|e| config(e.to_string()))?;
        }
        if let Some(s) = section(&ini, "training", &["epochs", "learning_rate", "rank"])? {
            let t = &mut cfg.training;
            t.epochs = s.parse("epochs", t.epochs)?;
            t.learning_rate = s.f64("learning_rate", t.learning_rate)?;
            t.rank = s.parse("rank", t.rank)?;
        }
        let corpus_keys = ["tiles_per_class", "n_train", "n_holdout", "n_test", "n_ood_composites", "n_ood_scenes"];
        if let Some(s) = section(&ini, "corpus", &corpus_keys)? {
            let c = &mut cfg.corpus;
            c.tiles_per_class = s.parse("tiles_per_class", c.tiles_per_class)?;
            c.n_train = s.parse("n_train", c.n_train)?;
            c.n_holdout = s.parse("n_holdout", c.n_holdout)?;
            c.n_test = s.parse("n_test", c.n_test)?;
            c.n_ood_composites = s.parse("n_ood_composites", c.n_ood_composites)?;
            c.n_ood_scenes = s.parse("n_ood_scenes", c.n_ood_scenes)?;
            c.validate()?;
        }
        if let Some(s) = section(&ini, "benchmark", &["trials_per_cell"])? {
            cfg.trials_per_cell = s.parse("trials_per_cell", cfg.trials_per_cell)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_ini_str(&std::fs::read_to_string(path)?)
    }
}

/// One navigation task: world, start pose and goal.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: usize,
    pub name: String,
    pub description: String,
    pub world: World,
    pub start: VehicleState,
    pub goal: GoalSpec,
    /// Camera override; the run configuration's camera otherwise.
    pub camera: Option<CameraModel>,
}

impl Scenario {
    pub fn from_ini_str(text: &str, palette: &TerrainPalette) -> Result<Self> {
        let ini = load_ini(text, "scenario")?;
        check_sections(&ini, &["scenario", "world", "camera", "start", "goal"], &["obstacle."])?;
        let meta = section(&ini, "scenario", &["id", "name", "description"])?
            .ok_or_else(|| config("scenario file needs a [scenario] section"))?;
        let id: usize = meta.parse("id", 0)?;
        let name = meta.raw("name").unwrap_or("unnamed").to_string();
        let description = meta.raw("description").unwrap_or("").to_string();

        let world_keys = ["layout", "class", "cell_size", "seed", "x_min", "x_max", "y_min", "y_max"];
        let w = section(&ini, "world", &world_keys)?.ok_or_else(|| config("scenario file needs a [world] section"))?;
        let extent = Extent {
            x_min: w.f64("x_min", -20.0)?,
            x_max: w.f64("x_max", 40.0)?,
            y_min: w.f64("y_min", -20.0)?,
            y_max: w.f64("y_max", 20.0)?,
        };
        let class = match w.raw("class") {
            None => TerrainClass(0),
            Some(v) => match v.parse::<usize>() {
                Ok(i) => TerrainClass(i),
                Err(_) => palette.class_by_name(v).ok_or_else(|| config(format!("unknown terrain class '{v}'")))?,
            },
        };
        let layout = match w.raw("layout").unwrap_or("uniform") {
            "uniform" => TerrainLayout::Uniform(class),
            "patches" => TerrainLayout::Patches {
                cell_size: w.f64("cell_size", 4.0)?,
            },
            other => return Err(config(format!("unknown layout '{other}'"))),
        };
        let mut world = World::new(extent, layout, w.parse("seed", 0u64)?, palette.clone()).map_err(|e| config(e.to_string()))?;

        let mut obstacle_names: Vec<(usize, &str)> = ini
            .sections()
            .flatten()
            .filter_map(|n| n.strip_prefix("obstacle.").map(|i| (i, n)))
            .map(|(i, n)| {
                i.parse::<usize>()
                    .map(|i| (i, n))
                    .map_err(|_| config(format!("obstacle section [{n}] needs an integer index")))
            })
            .collect::<Result<_>>()?;
        obstacle_names.sort();
        let obstacle_keys = ["center_x", "center_y", "length", "width", "heading_deg", "texture", "texture_seed"];
        for (i, name) in obstacle_names {
            let s = section(&ini, name, &obstacle_keys)?.expect("listed section exists");
            let length = s.f64("length", 1.0)?;
            let width = s.f64("width", 1.0)?;
            if !(length > 0.0 && width > 0.0) {
                return Err(config(format!("[{name}] dimensions must be positive")));
            }
            let center = [s.f64("center_x", 0.0)?, s.f64("center_y", 0.0)?];
            let texture_kind = match s.raw("texture").unwrap_or("unfamiliar") {
                "unfamiliar" => TextureKind::Unfamiliar,
                "familiar" => TextureKind::Familiar,
                other => return Err(config(format!("[{name}] unknown texture '{other}'"))),
            };
            world = world.with_obstacle(Obstacle {
                footprint: ConvexPolygon::rectangle(center, s.degrees("heading_deg", 0.0)?, length, width),
                texture_kind,
                texture_seed: s.parse("texture_seed", i as u64)?,
            });
        }

        let st = section(&ini, "start", &["x", "y", "theta_deg"])?.ok_or_else(|| config("scenario file needs a [start] section"))?;
        let start = VehicleState::at_rest(st.f64("x", 0.0)?, st.f64("y", 0.0)?, st.degrees("theta_deg", 0.0)?);
        if !extent.contains(start.x, start.y) {
            return Err(config("start pose lies outside the world extent"));
        }
        let g = section(&ini, "goal", &["x", "y", "tolerance", "timeout"])?.ok_or_else(|| config("scenario file needs a [goal] section"))?;
        let goal = GoalSpec {
            position: [g.f64("x", 0.0)?, g.f64("y", 0.0)?],
            tolerance: g.f64("tolerance", 0.5)?,
            timeout: g.f64("timeout", 90.0)?,
        };
        if !(goal.tolerance > 0.0 && goal.timeout > 0.0) {
            return Err(config("[goal] tolerance and timeout must be positive"));
        }
        let camera = if ini.section(Some("camera")).is_some() {
            Some(parse_camera(&ini, &CameraModel::default())?)
        } else {
            None
        };
        Ok(Self {
            id,
            name,
            description,
            world,
            start,
            goal,
            camera,
        })
    }

    pub fn from_file(path: impl AsRef<Path>, palette: &TerrainPalette) -> Result<Self> {
        Self::from_ini_str(&std::fs::read_to_string(path)?, palette)
    }
}
