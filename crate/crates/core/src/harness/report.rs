use std::collections::{hash_map::DefaultHasher, BTreeSet};
use std::fmt::{self, Write as _};
use std::hash::{Hash, Hasher};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{EnvSpec, ExperimentConfig};
use super::run::artifact_dir;
use crate::agent::{epsilon_greedy, DoubleQ};
use crate::error::{Error, Result};
use crate::sampling::dissimilar_sample;
use crate::shaping::{r_exp, r_obj, CMaxTracker};
use crate::types::{split_successful, Environment, Observation, SuccessfulTrajectory, Trajectory};

/// Greedy rollouts attempted while looking for a successful episode.
pub const REPORT_ROLLOUTS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Band {
    Top,
    Medium,
    Small,
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Band::Top => "top",
            Band::Medium => "medium",
            Band::Small => "small",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub state: Observation,
    /// Human-readable state: grid cell (and key flag) or a frame hash.
    pub label: String,
    /// Successful segment in which the state was first sampled.
    pub segment: usize,
    pub pseudo_count: f64,
    pub r_obj: f64,
    pub band: Band,
}

#[derive(Clone, Debug)]
pub struct ImportanceReport {
    pub seed: u64,
    pub thresholds: (f64, f64),
    /// Sorted by `r_obj`, highest first.
    pub rows: Vec<ReportRow>,
}

impl ImportanceReport {
    pub fn band(&self, band: Band) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(move |r| r.band == band)
    }

    /// Ranked table with at most `top_k` rows per band.
    pub fn to_text(&self, top_k: usize) -> String {
        let (lo, hi) = self.thresholds;
        let mut s = String::new();
        let _ = writeln!(s, "seed {}: {} sampled states", self.seed, self.rows.len());
        for (band, rule) in [
            (Band::Top, format!("R_obj >= {hi}")),
            (Band::Medium, format!("{lo} <= R_obj < {hi}")),
            (Band::Small, format!("R_obj < {lo}")),
        ] {
            let rows: Vec<_> = self.band(band).collect();
            let _ = writeln!(s, "\n[{band}] {rule}: {} states", rows.len());
            let _ = writeln!(s, "rank\tstate\tsegment\tpseudo_count\tr_obj");
            for (i, r) in rows.iter().take(top_k).enumerate() {
                let _ = writeln!(
                    s,
                    "{}\t{}\t{}\t{:.3}\t{:.4}",
                    i + 1,
                    r.label,
                    r.segment,
                    r.pseudo_count,
                    r.r_obj
                );
            }
        }
        s
    }
}

fn state_label(cfg: &ExperimentConfig, obs: &Observation) -> String {
    match obs {
        Observation::Discrete(id) => match &cfg.env {
            EnvSpec::KeyDoor(spec) => {
                let area = spec.width * spec.height;
                let cell = id % area;
                let key = match id / area {
                    0 => "",
                    1 => "+key",
                    _ => "+open",
                };
                format!("({},{}){key}", cell % spec.width, cell / spec.width)
            }
            EnvSpec::Fig1(spec) | EnvSpec::GridWorld(spec) => {
                format!("({},{})", id % spec.width, id / spec.width)
            }
        },
        Observation::Pixels(grid) => {
            let mut h = DefaultHasher::new();
            grid.values().hash(&mut h);
            format!("frame:{:016x}", h.finish())
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn load_q(path: &Path, q: &mut crate::agent::QTable) -> Result<()> {
    for (i, line) in read(path)?.lines().enumerate() {
        let bad = || Error::Runtime(format!("{}:{} is malformed", path.display(), i + 1));
        let (obs, vals) = line.split_once('\t').ok_or_else(bad)?;
        let obs: Observation = obs.parse().map_err(|_| bad())?;
        for (a, v) in vals.split(',').enumerate() {
            q.set(&obs, a, v.parse().map_err(|_| bad())?);
        }
    }
    Ok(())
}

/// Plays one episode; returns its successful segments and whether the
/// environment reported the task complete.
fn rollout(
    env: &mut dyn Environment,
    q: &DoubleQ,
    epsilon: f64,
    rng: &mut ChaCha8Rng,
    env_seed: u64,
) -> Result<(Vec<SuccessfulTrajectory>, bool)> {
    let mut obs = env.reset(env_seed);
    let mut transitions = Vec::new();
    loop {
        let t = env.step(epsilon_greedy(q, &obs, epsilon, rng))?;
        obs = t.next_state.clone();
        let done = t.terminal;
        transitions.push(t);
        if done {
            break;
        }
    }
    Ok((
        split_successful(&Trajectory::new(transitions)?),
        env.task_complete(),
    ))
}

/// Ranks the sampled states of one successful episode of the trained policy
/// by their micro-objective reward.
///
/// Loads the first seed of the run in `run_dir`, rebuilds its importance
/// model, and plays the learned policy at the final exploration rate until
/// an episode completes the task, falling back to the first episode with any
/// successful trajectory. Each segment is dissimilar-
/// sampled; rows get `R_obj` under the persisted running maximum and fall in
/// the top band at or above `thresholds.1`, medium at or above
/// `thresholds.0`, small below.
pub fn report_importance(run_dir: &Path, thresholds: (f64, f64)) -> Result<ImportanceReport> {
    let (lo, hi) = thresholds;
    if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo < hi) {
        return Err(Error::config(
            "thresholds",
            format!("need 0 <= low < high, got {lo},{hi}"),
        ));
    }
    let cfg = ExperimentConfig::load(&run_dir.join("config.txt"))?;
    if !cfg.agent.mode.uses_mol() {
        return Err(Error::Runtime(format!(
            "run in {} used mode `{}`, which keeps no importance counts",
            run_dir.display(),
            cfg.agent.mode
        )));
    }
    let seed = cfg.seeds[0];
    let dir = artifact_dir(run_dir, seed);

    let mut env = cfg.make_env()?;
    let mut q = DoubleQ::new(env.action_count(), cfg.agent.learning_rate, cfg.agent.gamma);
    load_q(&dir.join("q_a.txt"), &mut q.a)?;
    load_q(&dir.join("q_b.txt"), &mut q.b)?;

    let mut model = cfg.agent.density.build();
    for (i, line) in read(&dir.join("importance.txt"))?.lines().enumerate() {
        let obs: Observation = line
            .parse()
            .map_err(|_| Error::Runtime(format!("importance.txt:{} is malformed", i + 1)))?;
        model.update(&obs);
    }
    let tracker_text = read(&dir.join("tracker.txt"))?;
    let tracker = CMaxTracker::at(
        tracker_text
            .trim()
            .parse()
            .map_err(|_| Error::Runtime("tracker.txt is malformed".into()))?,
    );

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut successes = Vec::new();
    for episode in 0..REPORT_ROLLOUTS {
        let (found, complete) = rollout(
            env.as_mut(),
            &q,
            cfg.agent.epsilon.end,
            &mut rng,
            episode as u64,
        )?;
        if successes.is_empty() || complete {
            successes = found;
        }
        if complete {
            break;
        }
    }
    if successes.is_empty() {
        return Err(Error::Runtime(format!(
            "no successful trajectory in {REPORT_ROLLOUTS} rollouts of the trained policy for seed {seed}; \
             train longer or check that the run ever reached a goal"
        )));
    }

    let mut seen = BTreeSet::new();
    let mut rows = Vec::new();
    for (segment, traj) in successes.iter().enumerate() {
        for state in dissimilar_sample(&traj.states(), &cfg.sampling)? {
            if !seen.insert(state.clone()) {
                continue;
            }
            let n = model.pseudo_count(&state);
            let reward = r_obj(r_exp(n), &mut tracker.clone(), &cfg.shaping);
            let band = if reward >= hi {
                Band::Top
            } else if reward >= lo {
                Band::Medium
            } else {
                Band::Small
            };
            rows.push(ReportRow {
                label: state_label(&cfg, &state),
                state,
                segment,
                pseudo_count: n,
                r_obj: reward,
                band,
            });
        }
    }
    rows.sort_by(|a, b| {
        b.r_obj
            .total_cmp(&a.r_obj)
            .then(b.pseudo_count.total_cmp(&a.pseudo_count))
    });
    Ok(ImportanceReport {
        seed,
        thresholds,
        rows,
    })
}
