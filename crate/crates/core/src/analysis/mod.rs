//! Plateaus, invariant checkers and sequence metrics.

pub mod checkers;
pub mod downhill;
pub mod oracle;
pub mod plateau;

pub use checkers::{
    growth_lower_bound, parse_checker_list, ActivationPaths, ArrivalsLevelOne, Capacity, CheckerKind,
    Conservation, ExitForwards, ForwardLose, InvariantI, LevelMonotone, MaxLoad, MaxLoadGrowth,
};
pub use downhill::{downhill_metrics, DownhillCheck, DownhillMetrics, DownhillSequenceLog};
pub use plateau::{exit_landing, find_plateaus, k_load, pre_image, total_two_load, Plateau};
