//! Metrics, corpus generation, configuration, closed-loop episodes and the
//! scenario benchmark.

pub mod benchmark;
pub mod bundle;
pub mod config;
pub mod corpus;
pub mod episode;
pub mod metrics;

pub use benchmark::{builtin_scenarios, run_benchmark, BenchmarkTable, CellStats};
pub use config::{RunConfig, Scenario, TrainingConfig};
pub use corpus::{generate_corpus, Corpus, CorpusConfig, OodScene};
pub use episode::{run_episode, EpisodeResult, Outcome};
pub use metrics::{auroc, fpr_at_tpr, ks_distance};
