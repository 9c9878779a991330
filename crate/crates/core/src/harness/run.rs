use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use crate::agent::{Agent, QTable};
use crate::error::{Error, Result};

/// Consecutive goal-reaching episodes that count as sustained success.
pub const SUSTAINED_EPISODES: usize = 5;

pub const EPISODE_CSV_HEADER: &str = "seed,episode,frames,score,shaped_return,epsilon,wall_ms";
pub const SUMMARY_CSV_HEADER: &str = "checkpoint,frames,mean,stdev,moving_avg_10";

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRecord {
    pub seed: u64,
    pub episode: u64,
    /// Cumulative frames at the end of the episode.
    pub frames: u64,
    pub score: f64,
    pub shaped_return: f64,
    pub epsilon: f64,
    pub wall_ms: u64,
    pub goal_reached: bool,
}

#[derive(Clone, Debug)]
pub struct SeedRun {
    pub seed: u64,
    pub records: Vec<EpisodeRecord>,
    /// Per-checkpoint mean score of the episodes that ended in the interval.
    pub checkpoints: Vec<f64>,
}

impl SeedRun {
    pub fn frames_to_sustained_success(&self) -> Option<u64> {
        frames_to_sustained_success(&self.records, SUSTAINED_EPISODES)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub checkpoint: usize,
    pub frames: u64,
    pub mean: f64,
    pub stdev: f64,
    pub moving_avg_10: f64,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub dir: Option<PathBuf>,
    pub runs: Vec<SeedRun>,
    pub summary: Vec<SummaryRow>,
}

/// Frames elapsed when the first run of `k` consecutive goal-reaching
/// episodes completes.
pub fn frames_to_sustained_success(records: &[EpisodeRecord], k: usize) -> Option<u64> {
    let mut streak = 0;
    for r in records {
        if r.goal_reached {
            streak += 1;
            if streak >= k {
                return Some(r.frames);
            }
        } else {
            streak = 0;
        }
    }
    None
}

/// Mean score of the episodes ending in each `eval_every` interval. An
/// interval without a finished episode repeats the previous value.
pub fn checkpoint_scores(records: &[EpisodeRecord], eval_every: u64, max_frames: u64) -> Vec<f64> {
    let n = (max_frames / eval_every) as usize;
    let mut out = Vec::with_capacity(n);
    let mut last = 0.0;
    let mut i = 0;
    for c in 1..=n as u64 {
        let hi = c * eval_every;
        let (mut sum, mut count) = (0.0, 0usize);
        while i < records.len() && records[i].frames <= hi {
            sum += records[i].score;
            count += 1;
            i += 1;
        }
        if count > 0 {
            last = sum / count as f64;
        }
        out.push(last);
    }
    out
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation; 0 for fewer than two values.
pub fn stdev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn summarize(runs: &[SeedRun], eval_every: u64) -> Vec<SummaryRow> {
    let n = runs.iter().map(|r| r.checkpoints.len()).min().unwrap_or(0);
    let mut rows: Vec<SummaryRow> = Vec::with_capacity(n);
    for c in 0..n {
        let vals: Vec<f64> = runs.iter().map(|r| r.checkpoints[c]).collect();
        let m = mean(&vals);
        let window: Vec<f64> = rows
            .iter()
            .skip(rows.len().saturating_sub(9))
            .map(|r| r.mean)
            .chain(std::iter::once(m))
            .collect();
        rows.push(SummaryRow {
            checkpoint: c + 1,
            frames: (c as u64 + 1) * eval_every,
            mean: m,
            stdev: stdev(&vals),
            moving_avg_10: mean(&window),
        });
    }
    rows
}

/// Trains one seed to `max_frames` and returns the records with the agent.
pub fn train_seed(cfg: &ExperimentConfig, seed: u64) -> Result<(SeedRun, Agent)> {
    let mut env = cfg.make_env()?;
    let mut agent = Agent::new(
        cfg.agent.clone(),
        cfg.shaping,
        cfg.sampling,
        env.action_count(),
        seed,
    )?;
    let mut env_seeds = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_e1f0_u64.rotate_left(32));
    let started = Instant::now();
    let mut records = Vec::new();
    let mut episode = 0;
    while agent.frames() < cfg.max_frames {
        let out = agent.run_episode(env.as_mut(), env_seeds.gen())?;
        let wall_ms = if cfg.record_wall_clock {
            started.elapsed().as_millis() as u64
        } else {
            0
        };
        records.push(EpisodeRecord {
            seed,
            episode,
            frames: out.frames,
            score: out.score,
            shaped_return: out.shaped_return,
            epsilon: out.epsilon,
            wall_ms,
            goal_reached: out.goal_reached,
        });
        episode += 1;
    }
    let checkpoints = checkpoint_scores(&records, cfg.eval_every, cfg.max_frames);
    Ok((
        SeedRun {
            seed,
            records,
            checkpoints,
        },
        agent,
    ))
}

pub fn episodes_csv(records: &[EpisodeRecord]) -> String {
    let mut s = String::from(EPISODE_CSV_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.seed, r.episode, r.frames, r.score, r.shaped_return, r.epsilon, r.wall_ms
        );
    }
    s
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from(SUMMARY_CSV_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.checkpoint, r.frames, r.mean, r.stdev, r.moving_avg_10
        );
    }
    s
}

fn q_table_text(q: &QTable) -> String {
    let sorted: BTreeMap<_, _> = q.iter().collect();
    let mut s = String::new();
    for (obs, row) in sorted {
        let vals: Vec<String> = row.iter().map(f64::to_string).collect();
        let _ = writeln!(s, "{obs}\t{}", vals.join(","));
    }
    s
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub(crate) fn artifact_dir(run_dir: &Path, seed: u64) -> PathBuf {
    run_dir.join("artifacts").join(format!("seed_{seed}"))
}

fn persist_agent(dir: &Path, agent: &Agent) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(&dir.join("q_a.txt"), &q_table_text(&agent.q().a))?;
    write(&dir.join("q_b.txt"), &q_table_text(&agent.q().b))?;
    let mut log = String::new();
    for obs in agent.importance_log() {
        let _ = writeln!(log, "{obs}");
    }
    write(&dir.join("importance.txt"), &log)?;
    write(
        &dir.join("tracker.txt"),
        &format!("{}\n", agent.tracker().current_max()),
    )
}

fn prepare_out_dir(dir: &Path) -> Result<()> {
    if dir.exists() {
        let nonempty = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .next()
            .is_some();
        if nonempty {
            return Err(Error::config(
                "out",
                format!(
                    "{} already exists and is not empty; a fresh directory is required",
                    dir.display()
                ),
            ));
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Runs every seed on a pool of `jobs` threads.
///
/// With an output directory set, writes `seed_<n>.csv` per seed,
/// `summary.csv`, the canonical `config.txt`, and per-seed agent state under
/// `artifacts/` for later reports.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize) -> Result<ExperimentResult> {
    cfg.validate()?;
    if let Some(dir) = &cfg.out {
        prepare_out_dir(dir)?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Runtime(format!("cannot start worker pool: {e}")))?;
    let trained: Vec<(SeedRun, Agent)> = pool.install(|| {
        cfg.seeds
            .par_iter()
            .map(|&seed| train_seed(cfg, seed))
            .collect::<Result<Vec<_>>>()
    })?;
    let summary = summarize(
        &trained.iter().map(|(r, _)| r.clone()).collect::<Vec<_>>(),
        cfg.eval_every,
    );
    if let Some(dir) = &cfg.out {
        write(&dir.join("config.txt"), &cfg.to_config_string())?;
        for (run, agent) in &trained {
            write(
                &dir.join(format!("seed_{}.csv", run.seed)),
                &episodes_csv(&run.records),
            )?;
            persist_agent(&artifact_dir(dir, run.seed), agent)?;
        }
        write(&dir.join("summary.csv"), &summary_csv(&summary))?;
    }
    Ok(ExperimentResult {
        dir: cfg.out.clone(),
        runs: trained.into_iter().map(|(r, _)| r).collect(),
        summary,
    })
}
