use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::agent::{AgentConfig, AgentMode, DensityKind, EpsilonSchedule};
use crate::envs::{
    make_fig1_gridworld, Cell, GridWorld, GridWorldSpec, KeyDoor, KeyDoorSpec, PixelRenderSpec,
};
use crate::error::{Error, Result};
use crate::sampling::{DissimilarConfig, DistanceMetric};
use crate::shaping::ShapingConfig;
use crate::types::Environment;

#[derive(Clone, Debug, PartialEq)]
pub enum EnvSpec {
    /// The 3x3 world; accepts only `slip_prob` and `max_steps` overrides.
    Fig1(GridWorldSpec),
    GridWorld(GridWorldSpec),
    KeyDoor(KeyDoorSpec),
}

impl EnvSpec {
    pub fn name(&self) -> &'static str {
        match self {
            EnvSpec::Fig1(_) => "fig1",
            EnvSpec::GridWorld(_) => "gridworld",
            EnvSpec::KeyDoor(_) => "keydoor",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ObservationKind {
    Discrete,
    Pixels(PixelRenderSpec),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    pub observation: ObservationKind,
    pub agent: AgentConfig,
    pub shaping: ShapingConfig,
    pub sampling: DissimilarConfig,
    pub seeds: Vec<u64>,
    pub max_frames: u64,
    /// Checkpoint interval in frames.
    pub eval_every: u64,
    pub out: Option<PathBuf>,
    /// When false the `wall_ms` column is written as 0 so reruns are byte-identical.
    pub record_wall_clock: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            env: EnvSpec::KeyDoor(KeyDoorSpec::default()),
            observation: ObservationKind::Discrete,
            agent: AgentConfig::default(),
            shaping: ShapingConfig::default(),
            sampling: DissimilarConfig::default(),
            seeds: vec![0],
            max_frames: 50_000,
            eval_every: 1_000,
            out: None,
            record_wall_clock: false,
        }
    }
}

const GRID_KEYS: &[&str] = &[
    "width",
    "height",
    "walls",
    "start",
    "step_reward",
    "slip_prob",
    "max_steps",
];
const GRIDWORLD_KEYS: &[&str] = &["goal", "goal_reward"];
const KEYDOOR_KEYS: &[&str] = &[
    "hazards",
    "key",
    "door",
    "key_reward",
    "door_reward",
    "door_ends_episode",
];
const FIG1_KEYS: &[&str] = &["slip_prob", "max_steps"];
const GENERAL_KEYS: &[&str] = &[
    "env",
    "observation",
    "cell_size",
    "smoothing",
    "mode",
    "eta",
    "epsilon_start",
    "epsilon_end",
    "epsilon_decay",
    "learning_rate",
    "gamma",
    "replay_capacity",
    "batch_size",
    "updates_per_step",
    "alpha",
    "r_max",
    "beta",
    "epsilon_cmax",
    "history",
    "min_diff",
    "metric",
    "seeds",
    "max_frames",
    "eval_every",
    "out",
    "record_wall_clock",
];

fn parse_value<T: FromStr>(field: &str, raw: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    raw.parse::<T>()
        .map_err(|e| Error::config(field, format!("cannot parse `{raw}`: {e}")))
}

fn parse_bool(field: &str, raw: &str) -> Result<bool> {
    match raw {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::config(
            field,
            format!("expected true or false, got `{raw}`"),
        )),
    }
}

fn parse_cells(field: &str, raw: &str) -> Result<BTreeSet<Cell>> {
    raw.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value::<Cell>(field, s))
        .collect()
}

fn parse_seeds(raw: &str) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for part in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((lo, hi)) = part.split_once("..") {
            let lo: u64 = parse_value("seeds", lo)?;
            let hi: u64 = parse_value("seeds", hi)?;
            if hi < lo {
                return Err(Error::config("seeds", format!("empty range `{part}`")));
            }
            seeds.extend(lo..=hi);
        } else {
            seeds.push(parse_value("seeds", part)?);
        }
    }
    Ok(seeds)
}

fn format_cells(cells: &BTreeSet<Cell>) -> String {
    cells
        .iter()
        .map(Cell::to_string)
        .collect::<Vec<_>>()
        .join(";")
}

/// Key/value pairs in file order with duplicate detection.
fn read_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut pairs = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::config(
                format!("line {}", lineno + 1),
                format!("expected `key = value`, got `{line}`"),
            ));
        };
        let key = key.trim().to_string();
        if pairs
            .insert(key.clone(), value.trim().to_string())
            .is_some()
        {
            return Err(Error::config(key, "given more than once"));
        }
    }
    Ok(pairs)
}

impl ExperimentConfig {
    /// Parses the flat `key = value` format. `#` starts a comment; unknown
    /// and repeated keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = read_pairs(text)?;
        let env_name = pairs.remove("env").unwrap_or_else(|| "keydoor".into());
        let env_keys: Vec<&str> = match env_name.as_str() {
            "fig1" => FIG1_KEYS.to_vec(),
            "gridworld" => [GRID_KEYS, GRIDWORLD_KEYS].concat(),
            "keydoor" => [GRID_KEYS, KEYDOOR_KEYS].concat(),
            other => {
                return Err(Error::config(
                    "env",
                    format!("unknown env `{other}` (expected fig1, gridworld or keydoor)"),
                ))
            }
        };
        for key in pairs.keys() {
            if !GENERAL_KEYS.contains(&key.as_str()) && !env_keys.contains(&key.as_str()) {
                let known = GRID_KEYS
                    .iter()
                    .chain(GRIDWORLD_KEYS)
                    .chain(KEYDOOR_KEYS)
                    .any(|k| k == key);
                let message = if known {
                    format!("not a parameter of env `{env_name}`")
                } else {
                    "unknown key".to_string()
                };
                return Err(Error::config(key.clone(), message));
            }
        }
        let get = |key: &str| pairs.get(key).map(String::as_str);

        let env = match env_name.as_str() {
            "fig1" => {
                let mut spec = make_fig1_gridworld().spec().clone();
                if let Some(v) = get("slip_prob") {
                    spec.slip_prob = parse_value("slip_prob", v)?;
                }
                if let Some(v) = get("max_steps") {
                    spec.max_steps = parse_value("max_steps", v)?;
                }
                EnvSpec::Fig1(spec)
            }
            "gridworld" => {
                let width = get("width")
                    .map(|v| parse_value("width", v))
                    .transpose()?
                    .unwrap_or(5);
                let height = get("height")
                    .map(|v| parse_value("height", v))
                    .transpose()?
                    .unwrap_or(5);
                let mut spec = GridWorldSpec::open(width, height);
                if let Some(v) = get("walls") {
                    spec.walls = parse_cells("walls", v)?;
                }
                if let Some(v) = get("start") {
                    spec.start = parse_value("start", v)?;
                }
                if let Some(v) = get("goal") {
                    spec.goal = parse_value("goal", v)?;
                }
                if let Some(v) = get("step_reward") {
                    spec.step_reward = parse_value("step_reward", v)?;
                }
                if let Some(v) = get("goal_reward") {
                    spec.goal_reward = parse_value("goal_reward", v)?;
                }
                if let Some(v) = get("slip_prob") {
                    spec.slip_prob = parse_value("slip_prob", v)?;
                }
                if let Some(v) = get("max_steps") {
                    spec.max_steps = parse_value("max_steps", v)?;
                }
                EnvSpec::GridWorld(spec)
            }
            _ => {
                let mut spec = KeyDoorSpec::default();
                if let Some(v) = get("width") {
                    spec.width = parse_value("width", v)?;
                }
                if let Some(v) = get("height") {
                    spec.height = parse_value("height", v)?;
                }
                if let Some(v) = get("walls") {
                    spec.walls = parse_cells("walls", v)?;
                }
                if let Some(v) = get("hazards") {
                    spec.hazards = parse_cells("hazards", v)?;
                }
                if let Some(v) = get("start") {
                    spec.start = parse_value("start", v)?;
                }
                if let Some(v) = get("key") {
                    spec.key = parse_value("key", v)?;
                }
                if let Some(v) = get("door") {
                    spec.door = parse_value("door", v)?;
                }
                if let Some(v) = get("step_reward") {
                    spec.step_reward = parse_value("step_reward", v)?;
                }
                if let Some(v) = get("key_reward") {
                    spec.key_reward = parse_value("key_reward", v)?;
                }
                if let Some(v) = get("door_reward") {
                    spec.door_reward = parse_value("door_reward", v)?;
                }
                if let Some(v) = get("door_ends_episode") {
                    spec.door_ends_episode = parse_bool("door_ends_episode", v)?;
                }
                if let Some(v) = get("slip_prob") {
                    spec.slip_prob = parse_value("slip_prob", v)?;
                }
                if let Some(v) = get("max_steps") {
                    spec.max_steps = parse_value("max_steps", v)?;
                }
                EnvSpec::KeyDoor(spec)
            }
        };

        let mut cfg = ExperimentConfig {
            env,
            ..Default::default()
        };

        let smoothing = get("smoothing")
            .map(|v| parse_value::<f64>("smoothing", v))
            .transpose()?;
        match get("observation").unwrap_or("discrete") {
            "discrete" => {
                if get("cell_size").is_some() {
                    return Err(Error::config(
                        "cell_size",
                        "only valid with observation = pixels",
                    ));
                }
                if smoothing.is_some() {
                    return Err(Error::config(
                        "smoothing",
                        "only valid with observation = pixels",
                    ));
                }
            }
            "pixels" => {
                let cell_size = get("cell_size")
                    .map(|v| parse_value("cell_size", v))
                    .transpose()?
                    .unwrap_or(4);
                if cell_size == 0 {
                    return Err(Error::config("cell_size", "must be positive"));
                }
                cfg.observation =
                    ObservationKind::Pixels(PixelRenderSpec::with_cell_size(cell_size));
                cfg.agent.density = DensityKind::FactoredPixels {
                    smoothing: smoothing.unwrap_or(0.1),
                };
            }
            other => {
                return Err(Error::config(
                    "observation",
                    format!("unknown observation `{other}` (expected discrete or pixels)"),
                ))
            }
        }

        let a = &mut cfg.agent;
        if let Some(v) = get("mode") {
            a.mode = v.parse::<AgentMode>()?;
        }
        if let Some(v) = get("eta") {
            a.eta = parse_value("eta", v)?;
        }
        if let Some(v) = get("epsilon_start") {
            a.epsilon.start = parse_value("epsilon_start", v)?;
        }
        if let Some(v) = get("epsilon_end") {
            a.epsilon.end = parse_value("epsilon_end", v)?;
        }
        if let Some(v) = get("epsilon_decay") {
            a.epsilon.decay_steps = parse_value("epsilon_decay", v)?;
        }
        if let Some(v) = get("learning_rate") {
            a.learning_rate = parse_value("learning_rate", v)?;
        }
        if let Some(v) = get("gamma") {
            a.gamma = parse_value("gamma", v)?;
        }
        if let Some(v) = get("replay_capacity") {
            a.replay_capacity = parse_value("replay_capacity", v)?;
        }
        if let Some(v) = get("batch_size") {
            a.batch_size = parse_value("batch_size", v)?;
        }
        if let Some(v) = get("updates_per_step") {
            a.updates_per_step = parse_value("updates_per_step", v)?;
        }

        let s = &mut cfg.shaping;
        if let Some(v) = get("alpha") {
            s.alpha = parse_value("alpha", v)?;
        }
        if let Some(v) = get("r_max") {
            s.r_max = parse_value("r_max", v)?;
        }
        if let Some(v) = get("beta") {
            s.beta = parse_value("beta", v)?;
        }
        if let Some(v) = get("epsilon_cmax") {
            s.epsilon_cmax = parse_value("epsilon_cmax", v)?;
        }

        let d = &mut cfg.sampling;
        if let Some(v) = get("history") {
            d.history = parse_value("history", v)?;
        }
        if let ObservationKind::Pixels(r) = &cfg.observation {
            d.min_diff = r.agent_cell_contrast();
        }
        if let Some(v) = get("min_diff") {
            d.min_diff = parse_value("min_diff", v)?;
        }
        if let Some(v) = get("metric") {
            d.metric = v.parse::<DistanceMetric>()?;
        }

        if let Some(v) = get("seeds") {
            cfg.seeds = parse_seeds(v)?;
        }
        if let Some(v) = get("max_frames") {
            cfg.max_frames = parse_value("max_frames", v)?;
        }
        if let Some(v) = get("eval_every") {
            cfg.eval_every = parse_value("eval_every", v)?;
        }
        if let Some(v) = get("out") {
            cfg.out = Some(PathBuf::from(v));
        }
        if let Some(v) = get("record_wall_clock") {
            cfg.record_wall_clock = parse_bool("record_wall_clock", v)?;
        }

        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "must list at least one seed"));
        }
        let mut seen = BTreeSet::new();
        for s in &self.seeds {
            if !seen.insert(s) {
                return Err(Error::config("seeds", format!("seed {s} listed twice")));
            }
        }
        if self.eval_every == 0 {
            return Err(Error::config("eval_every", "must be positive"));
        }
        if self.max_frames < self.eval_every {
            return Err(Error::config("max_frames", "must be at least eval_every"));
        }
        self.agent.validate()?;
        self.shaping.validate()?;
        self.sampling.validate()?;
        match &self.env {
            EnvSpec::Fig1(s) | EnvSpec::GridWorld(s) => s.validate(),
            EnvSpec::KeyDoor(s) => s.validate(),
        }
        .map_err(|e| Error::config("env", e.to_string()))?;
        if let ObservationKind::Pixels(r) = &self.observation {
            r.validate()
                .map_err(|e| Error::config("cell_size", e.to_string()))?;
        }
        Ok(())
    }

    /// Fresh environment instance.
    pub fn make_env(&self) -> Result<Box<dyn Environment + Send>> {
        let pixels = match &self.observation {
            ObservationKind::Discrete => None,
            ObservationKind::Pixels(r) => Some(r.clone()),
        };
        Ok(match &self.env {
            EnvSpec::Fig1(s) | EnvSpec::GridWorld(s) => {
                let env = GridWorld::new(s.clone())?;
                match pixels {
                    Some(r) => Box::new(env.with_pixels(r)?),
                    None => Box::new(env),
                }
            }
            EnvSpec::KeyDoor(s) => {
                let env = KeyDoor::new(s.clone())?;
                match pixels {
                    Some(r) => Box::new(env.with_pixels(r)?),
                    None => Box::new(env),
                }
            }
        })
    }

    /// Canonical text form; parsing it yields an equal config.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("env", self.env.name().into());
        match &self.env {
            EnvSpec::Fig1(s) => {
                put("slip_prob", s.slip_prob.to_string());
                put("max_steps", s.max_steps.to_string());
            }
            EnvSpec::GridWorld(s) => {
                put("width", s.width.to_string());
                put("height", s.height.to_string());
                put("walls", format_cells(&s.walls));
                put("start", s.start.to_string());
                put("goal", s.goal.to_string());
                put("step_reward", s.step_reward.to_string());
                put("goal_reward", s.goal_reward.to_string());
                put("slip_prob", s.slip_prob.to_string());
                put("max_steps", s.max_steps.to_string());
            }
            EnvSpec::KeyDoor(s) => {
                put("width", s.width.to_string());
                put("height", s.height.to_string());
                put("walls", format_cells(&s.walls));
                put("hazards", format_cells(&s.hazards));
                put("start", s.start.to_string());
                put("key", s.key.to_string());
                put("door", s.door.to_string());
                put("step_reward", s.step_reward.to_string());
                put("key_reward", s.key_reward.to_string());
                put("door_reward", s.door_reward.to_string());
                put("door_ends_episode", s.door_ends_episode.to_string());
                put("slip_prob", s.slip_prob.to_string());
                put("max_steps", s.max_steps.to_string());
            }
        }
        match &self.observation {
            ObservationKind::Discrete => put("observation", "discrete".into()),
            ObservationKind::Pixels(r) => {
                put("observation", "pixels".into());
                put("cell_size", r.cell_size.to_string());
                if let DensityKind::FactoredPixels { smoothing } = self.agent.density {
                    put("smoothing", smoothing.to_string());
                }
            }
        }
        let a = &self.agent;
        let EpsilonSchedule {
            start,
            end,
            decay_steps,
        } = a.epsilon;
        put("mode", a.mode.to_string());
        put("eta", a.eta.to_string());
        put("epsilon_start", start.to_string());
        put("epsilon_end", end.to_string());
        put("epsilon_decay", decay_steps.to_string());
        put("learning_rate", a.learning_rate.to_string());
        put("gamma", a.gamma.to_string());
        put("replay_capacity", a.replay_capacity.to_string());
        put("batch_size", a.batch_size.to_string());
        put("updates_per_step", a.updates_per_step.to_string());
        put("alpha", self.shaping.alpha.to_string());
        put("r_max", self.shaping.r_max.to_string());
        put("beta", self.shaping.beta.to_string());
        put("epsilon_cmax", self.shaping.epsilon_cmax.to_string());
        put("history", self.sampling.history.to_string());
        put("min_diff", self.sampling.min_diff.to_string());
        put("metric", self.sampling.metric.to_string());
        put(
            "seeds",
            self.seeds
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
        put("max_frames", self.max_frames.to_string());
        put("eval_every", self.eval_every.to_string());
        if let Some(out) = &self.out {
            put("out", out.display().to_string());
        }
        put("record_wall_clock", self.record_wall_clock.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let cfg = ExperimentConfig::parse(
            "# key-door run\nenv = keydoor\nslip_prob = 0.1\nmode = mol\nseeds = 1,2,5..7\nmax_frames = 1000\neval_every = 100\n",
        )
        .unwrap();
        assert_eq!(cfg.seeds, vec![1, 2, 5, 6, 7]);
        assert_eq!(cfg.agent.mode, AgentMode::Mol);
        let EnvSpec::KeyDoor(spec) = &cfg.env else {
            panic!()
        };
        assert_eq!(spec.slip_prob, 0.1);
        assert_eq!(spec.walls, KeyDoorSpec::default().walls);
    }

    #[test]
    fn round_trip() {
        for text in [
            "env = fig1\nseeds = 3\n",
            "env = gridworld\nwidth = 4\nheight = 3\nwalls = 1,1;2,1\ngoal = 3,2\n",
            "env = keydoor\nobservation = pixels\ncell_size = 2\nmode = psc+mol\nout = /tmp/x\n",
        ] {
            let cfg = ExperimentConfig::parse(text).unwrap();
            let again = ExperimentConfig::parse(&cfg.to_config_string()).unwrap();
            assert_eq!(cfg, again);
        }
    }

    fn field_of(text: &str) -> String {
        match ExperimentConfig::parse(text).unwrap_err() {
            Error::Config { field, .. } => field,
            other => panic!("expected config error, got {other}"),
        }
    }

    #[test]
    fn errors_name_the_field() {
        assert_eq!(field_of("seeds =\n"), "seeds");
        assert_eq!(field_of("colour = red\n"), "colour");
        assert_eq!(field_of("env = fig1\nkey = 1,1\n"), "key");
        assert_eq!(field_of("eta = 2\n"), "eta");
        assert_eq!(field_of("gamma = abc\n"), "gamma");
        assert_eq!(
            field_of("max_frames = 10\neval_every = 100\n"),
            "max_frames"
        );
        assert_eq!(field_of("mode = dqn\n"), "mode");
        assert_eq!(field_of("eta = 0.1\neta = 0.2\n"), "eta");
        assert_eq!(field_of("just words\n"), "line 1");
        assert_eq!(field_of("env = keydoor\nkey = 5,0\n"), "env");
    }
}
