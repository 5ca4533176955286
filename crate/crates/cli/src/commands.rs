use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use historiographer::attack::{reconstruct, score, write_recall_csv, AttackConfig, Discipline};
use historiographer::cookies::{audit_trace, count_users, google_catalog, load_catalog, load_trace, write_exposure_csv};
use historiographer::corpus::{english_words, load_word_list};
use historiographer::eval::{
    budget_curve, gen_synthetic, ingest_query_log, run_batch, BatchSetup, EvalError, SyntheticConfig, CURVE_BUDGETS,
};
use historiographer::history::{read_jsonl, write_jsonl, SearchHistory};
use historiographer::oracle::{GenericCorpus, OracleConfig, SuggestionService};
use historiographer::planner::{PlanConfig, PrefixPlan, Selection};
use historiographer::text::Alphabet;
use serde_json::json;

use crate::manifest::{sibling, write_file, RunManifest};
use crate::{
    AuditArgs, CliError, Command, DatasetFormat, DisciplineArg, EvalArgs, GenArgs, PlanArgs, ReconstructArgs, SelectionArg,
};

pub fn run(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Plan(args) => plan(command, args),
        Command::Reconstruct(args) => reconstruct_one(command, args),
        Command::Eval(args) => eval(command, args),
        Command::Audit(args) => audit(command, args),
        Command::Gen(args) => gen(command, args),
        Command::Rerun(args) => {
            let manifest = RunManifest::read(&args.manifest)?;
            if let Command::Rerun(_) = manifest.command {
                return Err(CliError::Input(format!("{} records a rerun, not a run", args.manifest.display())));
            }
            run(&manifest.command)
        }
    }
}

fn input_err(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn unreadable(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("cannot read {}: {e}", path.display()))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| unreadable(path, e))
}

fn read_histories(path: &Path) -> Result<Vec<SearchHistory>, CliError> {
    read_jsonl(open(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn read_plan(path: &Path) -> Result<PrefixPlan, CliError> {
    serde_json::from_reader(open(path)?).map_err(|e| CliError::Input(format!("{} is not a plan: {e}", path.display())))
}

fn csv_text(write: impl FnOnce(&mut Vec<u8>) -> Result<(), csv::Error>) -> Result<String, CliError> {
    let mut buf = Vec::new();
    write(&mut buf).map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

fn to_json(value: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(value).expect("output serializes") + "\n"
}

fn plan(command: &Command, args: &PlanArgs) -> Result<(), CliError> {
    let alphabet: Alphabet = args.alphabet.parse().map_err(input_err)?;
    let corpus: Vec<String> = match &args.corpus {
        Some(path) => load_word_list(path, &alphabet).map_err(|e| unreadable(path, e))?,
        None => english_words().into_iter().map(str::to_string).collect(),
    };
    let config = PlanConfig {
        alphabet,
        seed_length: args.length,
        max_stats_length: args.max_stats_length.max(args.length),
        mass_fraction: args.mass,
        selection: match args.selection {
            SelectionArg::Mass => Selection::Mass,
            SelectionArg::Rank => Selection::Rank,
        },
        filter_extensions: true,
    };
    let plan = PrefixPlan::build(&corpus, config.clone()).map_err(input_err)?;

    let stats_path = sibling(&args.output, ".stats.csv");
    let seeds_path = sibling(&args.output, ".seeds.txt");
    let stats = plan.stats(config.seed_length).expect("seed-length statistics");
    write_file(&args.output, &to_json(&plan))?;
    let mut stats_csv = Vec::new();
    stats.write_csv(&mut stats_csv).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_file(&stats_path, &String::from_utf8(stats_csv).expect("csv output is UTF-8"))?;
    let mut seeds = plan.seeds().join("\n");
    seeds.push('\n');
    write_file(&seeds_path, &seeds)?;

    let resolved = json!({ "plan": config, "corpus_items": corpus.len(), "seeds": plan.seeds().len() });
    let inputs = args.corpus.iter().cloned().collect();
    RunManifest::new(command, resolved, inputs, None).write(&args.output, vec![args.output.clone(), stats_path, seeds_path])
}

fn attack_config(budget: Option<u64>, max_depth: Option<usize>, threshold: usize, discipline: DisciplineArg) -> AttackConfig {
    AttackConfig {
        budget,
        max_depth,
        descent_threshold: threshold,
        discipline: match discipline {
            DisciplineArg::Priority => Discipline::Priority,
            DisciplineArg::LevelOrder => Discipline::LevelOrder,
        },
    }
}

fn reconstruct_one(command: &Command, args: &ReconstructArgs) -> Result<(), CliError> {
    let histories = read_histories(&args.history)?;
    let history = match &args.user {
        Some(user) => histories
            .iter()
            .find(|h| h.user_id() == user)
            .ok_or_else(|| CliError::Input(format!("no history for user {user:?} in {}", args.history.display())))?,
        None if histories.len() == 1 => &histories[0],
        None => {
            return Err(CliError::Input(format!(
                "{} holds {} histories; pick one with --user",
                args.history.display(),
                histories.len()
            )))
        }
    };
    let plan = read_plan(&args.plan)?;
    let oracle_config = OracleConfig::default();
    let corpus = match &args.generic {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| unreadable(path, e))?;
            GenericCorpus::from_ranked(text.lines(), &oracle_config.alphabet)
        }
        None => GenericCorpus::empty(),
    };
    let attack = attack_config(args.budget, args.max_depth, args.descent_threshold, args.discipline);

    let oracle = SuggestionService::new(history, &corpus, &oracle_config);
    let result = reconstruct(&oracle, &plan, &attack).map_err(|e| CliError::Runtime(e.to_string()))?;
    let report = score(&result, history);

    let csv_path = sibling(&args.output, ".csv");
    write_file(&args.output, &(result.to_json_pretty() + "\n"))?;
    write_file(&csv_path, &csv_text(|buf| write_recall_csv(buf, [&report]))?)?;

    let resolved = json!({ "attack": attack, "oracle": oracle_config, "user_id": history.user_id() });
    let mut inputs = vec![args.history.clone(), args.plan.clone()];
    inputs.extend(args.generic.iter().cloned());
    RunManifest::new(command, resolved, inputs, None).write(&args.output, vec![args.output.clone(), csv_path])
}

fn load_dataset(args: &EvalArgs) -> Result<(Vec<SearchHistory>, serde_json::Value), CliError> {
    let format = match args.format {
        DatasetFormat::Auto => match args.dataset.extension().and_then(|e| e.to_str()) {
            Some("jsonl") => DatasetFormat::Jsonl,
            Some("json") => DatasetFormat::Synthetic,
            _ => DatasetFormat::Aol,
        },
        other => other,
    };
    match format {
        DatasetFormat::Jsonl => Ok((read_histories(&args.dataset)?, json!({ "format": "jsonl" }))),
        DatasetFormat::Aol => {
            let ingest = ingest_query_log(&args.dataset).map_err(input_err)?;
            let info = json!({ "format": "aol", "rows": ingest.rows, "skipped": ingest.skipped });
            Ok((ingest.histories.into_values().collect(), info))
        }
        DatasetFormat::Synthetic => {
            let mut config: SyntheticConfig = serde_json::from_reader(open(&args.dataset)?)
                .map_err(|e| CliError::Input(format!("{} is not a generator configuration: {e}", args.dataset.display())))?;
            if let Some(seed) = args.seed {
                config.seed = seed;
            }
            let histories = gen_synthetic(&config, &english_words()).map_err(input_err)?;
            Ok((histories.into_values().collect(), json!({ "format": "synthetic", "generator": config })))
        }
        DatasetFormat::Auto => unreachable!("resolved above"),
    }
}

fn eval(command: &Command, args: &EvalArgs) -> Result<(), CliError> {
    if args.workers == 0 {
        return Err(CliError::Input("--workers must be at least 1".into()));
    }
    let (histories, dataset_info) = load_dataset(args)?;
    let plan = read_plan(&args.plan)?;
    let attack = attack_config(args.budget, args.max_depth, 3, DisciplineArg::Priority);
    let oracle = OracleConfig::default();
    let corpus = GenericCorpus::empty();
    let setup = BatchSetup { plan: &plan, attack: &attack, oracle: &oracle, corpus: &corpus };

    let report = run_batch(&histories, setup, args.workers).map_err(|e| match e {
        EvalError::NoHistories => CliError::Input(format!("{} holds no histories", args.dataset.display())),
        other => CliError::Runtime(other.to_string()),
    })?;
    for failure in &report.failures {
        eprintln!("user {}: {}", failure.user_id, failure.error);
    }

    let csv_path = sibling(&args.output, ".csv");
    let mut outputs = vec![args.output.clone(), csv_path.clone()];
    write_file(&args.output, &(report.to_json_pretty() + "\n"))?;
    write_file(&csv_path, &csv_text(|buf| write_recall_csv(buf, &report.per_user))?)?;
    if args.curve {
        let points = budget_curve(&histories, setup, &CURVE_BUDGETS, args.workers).map_err(|e| CliError::Runtime(e.to_string()))?;
        let curve_path = sibling(&args.output, ".curve.csv");
        let text = csv_text(|buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["budget", "mean_recall", "mean_requests"])?;
            for p in &points {
                w.write_record([p.budget.to_string(), format!("{:.4}", p.mean_recall), format!("{:.1}", p.mean_requests)])?;
            }
            w.flush()?;
            Ok(())
        })?;
        write_file(&curve_path, &text)?;
        outputs.push(curve_path);
    }

    let resolved = json!({ "attack": attack, "oracle": oracle, "workers": args.workers, "dataset": dataset_info });
    let inputs = vec![args.dataset.clone(), args.plan.clone()];
    RunManifest::new(command, resolved, inputs, args.seed).write(&args.output, outputs)
}

fn audit(command: &Command, args: &AuditArgs) -> Result<(), CliError> {
    let trace = load_trace(open(&args.trace)?).map_err(|e| CliError::Input(format!("{}: {e}", args.trace.display())))?;
    let catalog = match &args.catalog {
        Some(path) => load_catalog(open(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?,
        None => google_catalog(),
    };
    let counts = count_users(&trace);
    let report = audit_trace(&trace, &catalog, args.enforce_ip_binding, args.replay_ip.as_deref());

    let accounts_path = sibling(&args.output, ".accounts.json");
    write_file(&args.output, &csv_text(|buf| write_exposure_csv(buf, &report))?)?;
    write_file(&accounts_path, &to_json(&json!({ "user_counts": counts, "accounts": report.accounts })))?;

    let resolved = json!({
        "enforce_ip_binding": args.enforce_ip_binding,
        "replay_ip": args.replay_ip,
        "catalog": catalog,
        "records": trace.len(),
    });
    let mut inputs = vec![args.trace.clone()];
    inputs.extend(args.catalog.iter().cloned());
    RunManifest::new(command, resolved, inputs, None).write(&args.output, vec![args.output.clone(), accounts_path])
}

fn parse_entries(spec: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Input(format!("--entries expects N or MIN..MAX, got {spec:?}"));
    match spec.split_once("..") {
        Some((lo, hi)) => Ok((lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?)),
        None => {
            let n = spec.trim().parse().map_err(|_| bad())?;
            Ok((n, n))
        }
    }
}

fn gen(command: &Command, args: &GenArgs) -> Result<(), CliError> {
    let (entries_min, entries_max) = parse_entries(&args.entries)?;
    let config = SyntheticConfig {
        users: args.users,
        entries_min,
        entries_max,
        clicked_fraction: args.clicked_fraction,
        max_words: args.max_words,
        zipf_exponent: args.zipf_exponent,
        navigational_fraction: args.navigational_fraction,
        seed: args.seed,
        ..SyntheticConfig::default()
    };
    let vocabulary: Vec<String> = match &args.vocabulary {
        Some(path) => load_word_list(path, &Alphabet::default()).map_err(|e| unreadable(path, e))?,
        None => english_words().into_iter().map(str::to_string).collect(),
    };
    let histories = gen_synthetic(&config, &vocabulary).map_err(input_err)?;
    let mut buf = Vec::new();
    write_jsonl(&mut buf, histories.values()).map_err(|e| CliError::Runtime(e.to_string()))?;
    write_file(&args.output, &String::from_utf8(buf).expect("JSON is UTF-8"))?;

    let inputs: Vec<PathBuf> = args.vocabulary.iter().cloned().collect();
    RunManifest::new(command, json!({ "generator": config }), inputs, Some(args.seed))
        .write(&args.output, vec![args.output.clone()])
}
