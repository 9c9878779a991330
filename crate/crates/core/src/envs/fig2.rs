use crate::types::Mdp;

/// Directed edges of the nine-state branching MDP.
pub const FIG2_EDGES: [(usize, usize); 10] = [
    (0, 1),
    (1, 2),
    (1, 3),
    (1, 4),
    (2, 5),
    (3, 5),
    (4, 6),
    (5, 7),
    (6, 7),
    (7, 8),
];

pub const FIG2_GOAL: usize = 8;

const STATES: usize = 9;
const ACTIONS: usize = 3;

/// Nine-state MDP over [`FIG2_EDGES`] with deterministic actions.
///
/// Action `k` follows the `k`-th outgoing edge of the current state in
/// ascending target order; when the state has fewer than `k + 1` edges the
/// action leaves the state unchanged, like bumping a wall. Entering `s_8`
/// pays 1 and `s_8` is absorbing.
pub fn make_fig2_mdp() -> Mdp {
    let mut transition = vec![0.0; STATES * ACTIONS * STATES];
    let mut reward = vec![0.0; STATES * ACTIONS * STATES];
    for s in 0..STATES {
        let mut succ: Vec<usize> = FIG2_EDGES
            .iter()
            .filter(|(from, _)| *from == s)
            .map(|(_, to)| *to)
            .collect();
        succ.sort_unstable();
        for a in 0..ACTIONS {
            let next = succ.get(a).copied().unwrap_or(s);
            transition[(s * ACTIONS + a) * STATES + next] = 1.0;
            if next == FIG2_GOAL && s != FIG2_GOAL {
                reward[(s * ACTIONS + a) * STATES + next] = 1.0;
            }
        }
    }
    let mut initial = vec![0.0; STATES];
    initial[0] = 1.0;
    Mdp::new(STATES, ACTIONS, transition, reward, initial, 0.99).expect("fixed MDP is valid")
}
