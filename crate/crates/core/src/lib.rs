//! Simulation of search-history reconstruction through a personalized
//! suggestion service, and of session hijacking with captured cookies.
//!
//! The pieces:
//!
//! * [`history`]: per-user search histories with click bookkeeping.
//! * [`oracle`]: the suggestion service the attacker talks to.
//! * [`planner`]: prefix statistics and seed selection from a reference corpus.
//! * [`attack`]: the reconstruction loop and recall scoring.
//! * [`cookies`]: cookie matching, trace ingestion and the hijack audit.
//! * [`eval`]: datasets, the brute-force reference and batch evaluation.
//!
//! ```
//! use historiographer::attack::{reconstruct, AttackConfig};
//! use historiographer::history::SearchHistory;
//! use historiographer::oracle::{GenericCorpus, OracleConfig, SuggestionService};
//! use historiographer::planner::{PlanConfig, PrefixPlan};
//!
//! let mut history = SearchHistory::new("alice");
//! history.insert_search("pets 2010", 1_262_304_000, Some("http://pets.example.com/")).unwrap();
//! history.insert_search("pets 10", 1_262_304_100, None).unwrap();
//!
//! let plan = PrefixPlan::build(&["pets", "people", "apple"], PlanConfig::default()).unwrap();
//! let corpus = GenericCorpus::empty();
//! let config = OracleConfig::default();
//! let oracle = SuggestionService::new(&history, &corpus, &config);
//!
//! let result = reconstruct(&oracle, &plan, &AttackConfig::default()).unwrap();
//! assert!(result.recovered.contains("pets 2010"));
//! assert!(!result.recovered.contains("pets 10"));
//! ```

pub mod attack;
pub mod cookies;
pub mod corpus;
pub mod eval;
pub mod history;
pub mod oracle;
pub mod planner;
pub mod text;

pub use attack::{reconstruct, score, AttackConfig, AttackError, RecallReport, ReconstructionResult};
pub use history::{HistoryEntry, HistoryError, SearchHistory};
pub use oracle::{suggest, GenericCorpus, OracleConfig, OracleError, SuggestionOracle, SuggestionResponse, SuggestionService};
pub use planner::{PlanConfig, PlanError, PrefixPlan, PrefixStats};
pub use text::{normalize, Alphabet};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/planning.md")]
    mod planning {}
    #[doc = include_str!("../../../book/src/reconstruction.md")]
    mod reconstruction {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cookies.md")]
    mod cookies {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
