//! Fixtures shared by the micro-objective benchmarks.

use mol_core::envs::{KeyDoor, KeyDoorSpec};
use mol_core::{Environment, Observation, SuccessfulTrajectory, Trajectory, Transition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random discrete stream over `alphabet` symbols.
pub fn discrete_stream(len: usize, alphabet: u32, seed: u64) -> Vec<Observation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| Observation::Discrete(rng.gen_range(0..alphabet)))
        .collect()
}

/// Random-walk successful trajectory on a line of `n` states with
/// backtracking, ending at state `n - 1`.
pub fn looped_trajectory(n: u32, seed: u64) -> SuccessfulTrajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = 0u32;
    let mut ts = Vec::new();
    while s + 1 < n {
        let next = if s > 0 && rng.gen_bool(0.4) {
            s - 1
        } else {
            s + 1
        };
        let done = next + 1 == n;
        ts.push(Transition::new(
            Observation::Discrete(s),
            0,
            Observation::Discrete(next),
            if done { 1.0 } else { 0.0 },
            done,
        ));
        s = next;
    }
    SuccessfulTrajectory::new(Trajectory::new(ts).expect("non-empty")).expect("ends in reward")
}

/// Frames of a random key-door episode rendered as pixels.
pub fn keydoor_frames(steps: usize, seed: u64) -> Vec<Observation> {
    let mut env = KeyDoor::new(KeyDoorSpec::default())
        .and_then(|e| e.with_pixels(Default::default()))
        .expect("default key-door is valid");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frames = vec![env.reset(seed)];
    while frames.len() < steps {
        let t = env
            .step(rng.gen_range(0..env.action_count()))
            .expect("valid action");
        frames.push(t.next_state.clone());
        if t.terminal {
            frames.push(env.reset(rng.gen()));
        }
    }
    frames.truncate(steps);
    frames
}
