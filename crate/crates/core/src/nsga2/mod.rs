//! NSGA-II over fusion chromosomes.

mod engine;
mod front;
mod hypervolume;
mod operators;
mod sorting;

pub use engine::{
    evolve, evolve_observed, evolve_with_workers, seed_population, survivor_selection, tournament_select,
    Individual, RunConfig, RunReport, DEFAULT_REFERENCE_EER,
};
pub use front::{super_pareto, FrontMember, ParetoFront};
pub use hypervolume::{hypervolume_2d, hypervolume_normalized, ReferencePoint};
pub use operators::{bitflip_mutation, polynomial_mutation, uniform_crossover};
pub use sorting::{crowding_distance, fast_nondominated_sort};
