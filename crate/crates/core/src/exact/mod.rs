//! Exact solvers for small instances: explicit game trees, best responses,
//! chance-sampled CFR and exploitability.

mod br;
mod cfr;
mod implicit;
mod tree;

pub use br::{exact_best_response, exploitability, profile_value, BehavioralStrategy, BestResponse};
pub use cfr::{regret_matching, run_cfr, write_strategy_csv, write_trace_csv, CfrResult, TracePoint};
pub use implicit::{
    exact_policy_value, mixture_best_response, policy_best_response, InfoSetAction, PolicyBestResponse,
};
pub use tree::{
    attacker_action_at, attacker_actions, build_game_tree, count_game_tree, estimated_bytes, info_token, GameTree,
    InfoSet, NodeKind, TreeBudget, TreeBuilder, TreeStats,
};
