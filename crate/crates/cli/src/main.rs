use std::collections::BTreeSet;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lanet_core::corpus::{load_corpus, load_ground_truth, LemmaLexicon, LocationId, RelationSnapshot};
use lanet_core::eval;
use lanet_core::extract::ActivityName;
use lanet_core::merge::SenseIndex;
use lanet_core::network::{af_ilf, parse_records, to_graphml, to_records, to_si_csv, SimilarityMatrix};
use lanet_core::pipeline::build_lanet;
use lanet_core::query::{self, ConceptFilter, RankBy, Table};
use lanet_core::{Graph, Error as CoreError};
use log::{info, warn};
use serde::Serialize;

mod manifest;

use manifest::BuildManifest;

const EXIT_ERROR: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_EMPTY: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "lanet", version, about = "Build and query location activity networks from annotated reviews")]
struct Cli {
    /// error, warn, info, debug or trace
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,
    /// Accepted for reproducible scripts; every stage is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the full pipeline and write the graph.
    Build(BuildArgs),
    /// Answer a query against a built graph.
    Query(QueryArgs),
    /// Convert a graph to another format.
    Export(ExportArgs),
    /// Run an evaluation experiment and write its CSV.
    Eval(EvalArgs),
    /// Print node and link counts.
    Stats {
        #[arg(long)]
        graph: PathBuf,
    },
}

#[derive(Args, Debug)]
struct BuildArgs {
    /// TOML manifest; explicit flags override its entries.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    snapshot: Option<PathBuf>,
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    skip_filter: bool,
    #[arg(long)]
    skip_merge: bool,
    #[arg(long, value_enum)]
    extractor: Option<ExtractorArg>,
    /// Where to write the merge audit log.
    #[arg(long)]
    merge_log: Option<PathBuf>,
    /// Where to write the build report (stderr otherwise).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ExtractorArg {
    Dependency,
    Baseline,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum Format {
    #[default]
    Text,
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct QueryArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    #[command(subcommand)]
    kind: QueryKind,
}

#[derive(Subcommand, Debug)]
enum QueryKind {
    /// Top activities of a location.
    Activities {
        #[arg(long = "loc")]
        location: String,
        #[arg(long, default_value_t = 10)]
        k: usize,
        /// Keep only the top-m concepts by generalized score.
        #[arg(long, conflicts_with = "specialized")]
        generalized: Option<usize>,
        /// Keep only the top-m concepts by specialized score.
        #[arg(long)]
        specialized: Option<usize>,
    },
    /// Top locations for an activity.
    Locations {
        #[arg(long)]
        activity: String,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, value_enum, default_value_t = RankArg::Af)]
        rank_by: RankArg,
    },
    /// Similar locations and their common activities.
    Alternates {
        #[arg(long = "loc")]
        location: String,
        #[arg(long, default_value_t = 10)]
        k: usize,
    },
    /// Boundary of uniqueness of activities at a location.
    Unique {
        #[arg(long = "loc")]
        location: String,
        #[arg(long, required = true)]
        activity: Vec<String>,
    },
    /// Top activities of every location near a point.
    Broadcast {
        #[arg(long, allow_hyphen_values = true)]
        lat: f64,
        #[arg(long, allow_hyphen_values = true)]
        lon: f64,
        /// Meters.
        #[arg(long)]
        radius: f64,
        #[arg(long, default_value_t = 5)]
        k: usize,
    },
    /// Candidate location where the activity is most frequent.
    Recommend {
        #[arg(long)]
        activity: String,
        /// Comma-separated location ids; all locations when omitted.
        #[arg(long, value_delimiter = ',')]
        candidates: Vec<String>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RankArg {
    Af,
    Api,
}

#[derive(Args, Debug)]
struct ExportArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(value_enum)]
    format: ExportFormat,
    /// Output file (stdout otherwise).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ExportFormat {
    Graphml,
    Records,
    SiCsv,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(subcommand)]
    experiment: Experiment,
}

#[derive(Subcommand, Debug)]
enum Experiment {
    /// Share of extracted activities present in the ground truth.
    Accuracy {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Redundant activities before and after merging.
    Redundancy {
        /// Graph built without merging.
        #[arg(long)]
        before: PathBuf,
        /// Graph built with merging.
        #[arg(long)]
        after: PathBuf,
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Baseline rank of each top-k activity.
    Rankshift {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long, default_value_t = 20)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Location recommendations of one system against another.
    Winloss {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        against: PathBuf,
        /// One activity per line; every single-verb activity of both graphs
        /// when omitted.
        #[arg(long)]
        activities: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Successful run, possibly with nothing to show.
enum Done {
    Result,
    Empty,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = cli.log_level.parse::<log::LevelFilter>().unwrap_or_else(|_| {
        eprintln!("unknown log level `{}`, using warn", cli.log_level);
        log::LevelFilter::Warn
    });
    env_logger::Builder::new().filter_level(level).target(env_logger::Target::Stderr).init();
    if let Some(seed) = cli.seed {
        info!("seed {seed} accepted; the pipeline has no randomness");
    }
    match run(cli.command) {
        Ok(Done::Result) => ExitCode::SUCCESS,
        Ok(Done::Empty) => {
            eprintln!("no result");
            ExitCode::from(EXIT_EMPTY)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = e.downcast_ref::<CoreError>().is_some_and(|c| matches!(c, CoreError::InvalidArgument(_)));
            ExitCode::from(if usage { EXIT_USAGE } else { EXIT_ERROR })
        }
    }
}

fn run(command: Command) -> Result<Done> {
    match command {
        Command::Build(args) => cmd_build(args),
        Command::Query(args) => cmd_query(args),
        Command::Export(args) => cmd_export(args),
        Command::Eval(args) => cmd_eval(args.experiment),
        Command::Stats { graph } => {
            let g = load_graph(&graph)?;
            println!("{}", g.stats());
            for l in g.locations() {
                println!(
                    "{}\t{}\t{} reviews\t{} activities\t{} similar",
                    l.location_id,
                    l.name,
                    l.review_count,
                    g.links_at(&l.location_id).count(),
                    g.neighbors(&l.location_id).count()
                );
            }
            Ok(Done::Result)
        }
    }
}

fn load_graph(path: &Path) -> Result<Graph> {
    let text = fs::read_to_string(path).with_context(|| format!("reading graph {}", path.display()))?;
    Ok(parse_records(&text, &path.display().to_string())?)
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            fs::write(p, text).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_build(args: BuildArgs) -> Result<Done> {
    let mut m = match &args.manifest {
        Some(p) => BuildManifest::load(p)?,
        None => BuildManifest::default(),
    };
    let missing = |what: &str| anyhow::anyhow!(CoreError::InvalidArgument(format!("--{what} is required without a manifest entry")));
    if let Some(p) = args.corpus {
        m.corpus = p;
    }
    if let Some(p) = args.snapshot {
        m.snapshot = p;
    }
    if let Some(p) = args.lexicon {
        m.lexicon = p;
    }
    if let Some(p) = args.out {
        m.output = p;
    }
    m.skip_filter |= args.skip_filter;
    m.skip_merge |= args.skip_merge;
    if let Some(e) = args.extractor {
        m.extractor = Some(match e {
            ExtractorArg::Dependency => "dependency".into(),
            ExtractorArg::Baseline => "baseline".into(),
        });
    }
    for (what, p) in [("corpus", &m.corpus), ("snapshot", &m.snapshot), ("lexicon", &m.lexicon), ("out", &m.output)] {
        if p.as_os_str().is_empty() {
            return Err(missing(what));
        }
    }
    if let Some(level) = &m.log_level {
        if let Ok(l) = level.parse() {
            log::set_max_level(l);
        }
    }
    m.check_inputs()?;
    let options = m.options()?;

    let started = Instant::now();
    let corpus = load_corpus(&m.corpus)?;
    let snapshot = RelationSnapshot::load(&m.snapshot)?;
    let lexicon = LemmaLexicon::load(&m.lexicon)?;
    info!("loaded {} locations, {} relation triples", corpus.len(), snapshot.len());
    let built = build_lanet::<f64>(&corpus, &snapshot, &lexicon, options)?;

    write_output(Some(&m.output), &to_records(&built.graph))?;
    if let Some(p) = &args.merge_log {
        write_output(Some(p), &built.merge_log())?;
    }
    let mut report = built.report.render();
    report.push_str(&format!("total: {:.3} ms\n", started.elapsed().as_secs_f64() * 1e3));
    match &args.report {
        Some(p) => write_output(Some(p), &report)?,
        None => eprint!("{report}"),
    }
    Ok(Done::Result)
}

fn emit<T: Serialize>(format: Format, table: Table, items: impl IntoIterator<Item = T>) -> Result<Done> {
    let empty = table.rows.is_empty();
    let text = match format {
        Format::Text => table.to_text(),
        Format::Csv => table.to_csv(),
        Format::Json => {
            let mut s = String::new();
            for item in items {
                s.push_str(&serde_json::to_string(&item)?);
                s.push('\n');
            }
            s
        }
    };
    write_output(None, &text)?;
    Ok(if empty { Done::Empty } else { Done::Result })
}

fn cmd_query(args: QueryArgs) -> Result<Done> {
    let g = load_graph(&args.graph)?;
    let format = args.format;
    match args.kind {
        QueryKind::Activities { location, k, generalized, specialized } => {
            if generalized == Some(0) || specialized == Some(0) {
                return Err(CoreError::InvalidArgument("concept count must be at least 1".into()).into());
            }
            let filter = match (generalized, specialized) {
                (Some(m), _) => ConceptFilter::Generalized(m),
                (_, Some(m)) => ConceptFilter::Specialized(m),
                _ => ConceptFilter::None,
            };
            let list = query::top_k_activities(&g, &LocationId::new(location), k, filter)?;
            emit(format, query::activities_table(&list), list.entries)
        }
        QueryKind::Locations { activity, k, rank_by } => {
            let rank = match rank_by {
                RankArg::Af => RankBy::Frequency,
                RankArg::Api => RankBy::Popularity,
            };
            let list = query::top_k_locations(&g, &activity, k, rank)?;
            emit(format, query::locations_table(&list), list.entries)
        }
        QueryKind::Alternates { location, k } => {
            let list = query::alternate_locations(&g, &LocationId::new(location), k)?;
            emit(format, query::alternates_table(&list), list.entries)
        }
        QueryKind::Unique { location, activity } => {
            let id = LocationId::new(location);
            let reports = activity
                .iter()
                .map(|a| query::uniqueness_report(&g, &id, a))
                .collect::<lanet_core::Result<Vec<_>>>()?;
            emit(format, query::uniqueness_table(&reports), reports)
        }
        QueryKind::Broadcast { lat, lon, radius, k } => {
            let digest = query::broadcast_digest(&g, (lat, lon), radius, k)?;
            let empty = digest.entries.is_empty();
            match format {
                Format::Json => write_output(None, &digest.to_records())?,
                Format::Csv => write_output(None, &query::digest_table(&digest).to_csv())?,
                Format::Text => write_output(None, &query::digest_table(&digest).to_text())?,
            }
            Ok(if empty { Done::Empty } else { Done::Result })
        }
        QueryKind::Recommend { activity, candidates } => {
            let candidates: Vec<LocationId> = if candidates.is_empty() {
                g.locations().iter().map(|l| l.location_id.clone()).collect()
            } else {
                candidates.into_iter().map(LocationId::new).collect()
            };
            let mut t = Table::new(&["activity", "location_id", "name", "af"]);
            let pick = query::recommend_location(&g, &activity, &candidates);
            if let Some((id, af)) = &pick {
                let name = g.location(id).map(|n| n.name.clone()).unwrap_or_default();
                t.push(vec![activity.clone(), id.to_string(), name, af.to_string()]);
            }
            #[derive(Serialize)]
            struct Pick<'a> {
                activity: &'a str,
                location: &'a LocationId,
                frequency: usize,
            }
            let items: Vec<Pick> = pick.iter().map(|(l, f)| Pick { activity: &activity, location: l, frequency: *f }).collect();
            emit(format, t, items)
        }
    }
}

fn cmd_export(args: ExportArgs) -> Result<Done> {
    let g = load_graph(&args.graph)?;
    let text = match args.format {
        ExportFormat::Graphml => to_graphml(&g),
        ExportFormat::Records => to_records(&g),
        ExportFormat::SiCsv => {
            let alm = g.alm()?;
            to_si_csv(&SimilarityMatrix::compute(alm.location_ids(), &af_ilf::<f64>(&alm)))
        }
    };
    write_output(args.out.as_deref(), &text)?;
    Ok(Done::Result)
}

fn single_verb_activities(graphs: &[&Graph]) -> Vec<String> {
    let mut out = BTreeSet::new();
    for g in graphs {
        for a in g.activities() {
            if let Some(n) = ActivityName::parse(&a.name) {
                out.extend(n.members().map(|m| m.to_string()));
            }
        }
    }
    out.into_iter().collect()
}

fn cmd_eval(experiment: Experiment) -> Result<Done> {
    match experiment {
        Experiment::Accuracy { graph, gt, lexicon, out } => {
            let g = load_graph(&graph)?;
            let lex = LemmaLexicon::load(&lexicon)?;
            let ids: BTreeSet<LocationId> = g.locations().iter().map(|l| l.location_id.clone()).collect();
            let truth = load_ground_truth(&gt, &lex, &ids)?;
            let rows = eval::accuracy_by_location(&g, &truth);
            for r in rows.iter().filter(|r| r.accuracy.is_none()) {
                warn!("location {} has no activities; accuracy undefined", r.location);
            }
            write_output(out.as_deref(), &eval::accuracy_csv(&rows))?;
            Ok(if rows.iter().all(|r| r.accuracy.is_none()) { Done::Empty } else { Done::Result })
        }
        Experiment::Redundancy { before, after, snapshot, out } => {
            let (b, a) = (load_graph(&before)?, load_graph(&after)?);
            let senses = SenseIndex::from_snapshot(&RelationSnapshot::load(&snapshot)?);
            let rows = eval::redundancy_by_location(&b, &a, &senses);
            write_output(out.as_deref(), &eval::redundancy_csv(&rows))?;
            Ok(Done::Result)
        }
        Experiment::Rankshift { graph, baseline, k, out } => {
            let (g, base) = (load_graph(&graph)?, load_graph(&baseline)?);
            let mut shifts = std::collections::BTreeMap::new();
            for l in g.locations() {
                let subject: Vec<String> = query::top_k_activities(&g, &l.location_id, k, ConceptFilter::None)?
                    .entries
                    .into_iter()
                    .map(|e| e.item.activity)
                    .collect();
                let reference: Vec<String> = match base.location(&l.location_id) {
                    Some(_) => query::top_k_activities(&base, &l.location_id, usize::MAX, ConceptFilter::None)?
                        .entries
                        .into_iter()
                        .map(|e| e.item.activity)
                        .collect(),
                    None => Vec::new(),
                };
                shifts.insert(l.location_id.clone(), eval::rank_shift(&subject, &reference));
            }
            write_output(out.as_deref(), &eval::rankshift_csv(k, &shifts))?;
            Ok(Done::Result)
        }
        Experiment::Winloss { graph, against, activities, out } => {
            let (a, b) = (load_graph(&graph)?, load_graph(&against)?);
            let queries: Vec<String> = match activities {
                Some(p) => fs::read_to_string(&p)
                    .with_context(|| format!("reading {}", p.display()))?
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty() && !l.starts_with('#'))
                    .map(String::from)
                    .collect(),
                None => single_verb_activities(&[&a, &b]),
            };
            let mut candidates: BTreeSet<LocationId> = a.locations().iter().map(|l| l.location_id.clone()).collect();
            candidates.extend(b.locations().iter().map(|l| l.location_id.clone()));
            let candidates: Vec<LocationId> = candidates.into_iter().collect();
            let tally = eval::win_loss(&queries, &candidates, &a, &b);
            eprintln!("{tally}");
            write_output(out.as_deref(), &eval::winloss_csv(&tally))?;
            Ok(if tally.total() == 0 { Done::Empty } else { Done::Result })
        }
    }
}
