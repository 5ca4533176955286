//! Searches generator seeds for a 12-user synthetic dataset whose default
//! attack lands at a target operating point, then writes it as JSON lines.
//!
//! cargo run --release -p historiographer --example calibrate_fixture -- \
//!     [--out PATH] [--entries MIN..MAX] [--clicked F] [--words N] [--zipf S] [--nav F] [--seeds N]

use std::fs::File;
use std::io::BufWriter;

use historiographer::attack::AttackConfig;
use historiographer::corpus::{english_plan, english_words};
use historiographer::eval::{gen_synthetic, run_batch, BatchSetup, SyntheticConfig};
use historiographer::history::write_jsonl;
use historiographer::oracle::{GenericCorpus, OracleConfig};
use historiographer::planner::PlanConfig;
use historiographer::SearchHistory;

const TARGET_RECALL: f64 = 0.65;
const RECALL_TOLERANCE: f64 = 0.003;
const MAX_MEAN_REQUESTS: f64 = 676.0;

fn arg<T: std::str::FromStr>(args: &[String], flag: &str) -> Option<T> {
    args.iter().position(|a| a == flag).and_then(|i| args.get(i + 1)).and_then(|v| v.parse().ok())
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let out: Option<String> = arg(&args, "--out");
    let (entries_min, entries_max) = arg::<String>(&args, "--entries")
        .and_then(|r| r.split_once("..").map(|(a, b)| (a.parse().unwrap(), b.parse().unwrap())))
        .unwrap_or((200, 1500));
    let base = SyntheticConfig {
        users: 12,
        entries_min,
        entries_max,
        clicked_fraction: arg(&args, "--clicked").unwrap_or(0.5),
        max_words: arg(&args, "--words").unwrap_or(3),
        zipf_exponent: arg(&args, "--zipf").unwrap_or(1.0),
        navigational_fraction: arg(&args, "--nav").unwrap_or(0.0),
        ..SyntheticConfig::default()
    };
    let tries: u64 = arg(&args, "--seeds").unwrap_or(200);

    let words = english_words();
    let plan = english_plan(PlanConfig::default()).expect("plan");
    let attack = AttackConfig::default();
    let oracle = OracleConfig::default();
    let corpus = GenericCorpus::empty();
    let setup = BatchSetup { plan: &plan, attack: &attack, oracle: &oracle, corpus: &corpus };

    for seed in 1..=tries {
        let config = SyntheticConfig { seed, ..base.clone() };
        let histories: Vec<SearchHistory> = gen_synthetic(&config, &words).expect("generate").into_values().collect();
        let report = run_batch(&histories, setup, 8).expect("batch");
        println!("seed {seed}: mean recall {:.4}, mean requests {:.1}", report.mean_recall, report.mean_requests);
        if (report.mean_recall - TARGET_RECALL).abs() <= RECALL_TOLERANCE && report.mean_requests < MAX_MEAN_REQUESTS {
            if let Some(path) = out {
                let file = BufWriter::new(File::create(&path).expect("create output"));
                write_jsonl(file, &histories).expect("write fixture");
                println!("wrote {path} with {config:?}");
            }
            return;
        }
    }
    eprintln!("no seed reached the target");
    std::process::exit(1);
}
