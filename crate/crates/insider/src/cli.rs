//! The `insider` command line.
//!
//! Exit codes: 0 for success (and for a clean check), 1 when `check`
//! reports findings or `sync --fail-on-change` planned work, 2 for usage,
//! IO and validation errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use insider_core::analysis::{flatten, minimal_cut_sets, top_event_probability};
use insider_core::binding::{bind, check_consistency};
use insider_core::safety::SafetyAnalysisModel;
use insider_core::sync::{apply_changeset, plan_sync};
use insider_core::system::SystemModel;
use insider_core::QualifiedName;

use crate::format;
use crate::repo::DirRepository;
use crate::report::{self, AnalysisReport};
use crate::s2am;

#[derive(Parser)]
#[command(
    name = "insider",
    version,
    about = "Bind system models to component fault trees: check, synchronize, analyze"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that the safety model covers the system model
    Check(CheckArgs),
    /// Update the safety model after system model changes
    Sync(SyncArgs),
    /// Print the traceability table of a bound model pair
    Trace(TraceArgs),
    /// Flatten failure logic into a fault tree and analyze it
    Analyze(AnalyzeArgs),
    /// Store and fetch reusable safety components
    Repo(RepoArgs),
    /// Write a reference file linking a model pair
    Link(LinkArgs),
}

#[derive(Args)]
struct PairArgs {
    /// System model file
    #[arg(long, value_name = "FILE", conflicts_with = "project", required_unless_present = "project")]
    sm: Option<PathBuf>,
    /// Safety model file
    #[arg(long, value_name = "FILE", conflicts_with = "project", requires = "sm")]
    sam: Option<PathBuf>,
    /// Reference file naming both models
    #[arg(long, value_name = "FILE")]
    project: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Report format
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct SyncArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Print the plan without applying it
    #[arg(long)]
    dry_run: bool,
    /// Rename hints file carried over from the system model editor
    #[arg(long, value_name = "FILE")]
    renames: Option<PathBuf>,
    /// Component repository to seed newly created components from
    #[arg(long, value_name = "DIR", env = "INSIDER_REPO")]
    repo: Option<PathBuf>,
    /// Write the updated safety model here instead of in place
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Exit with status 1 when the plan is not empty
    #[arg(long)]
    fail_on_change: bool,
    /// Report format
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Report format
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Top event: an out failure port, as component.port
    #[arg(long, value_name = "NAME")]
    top: String,
    /// Compute minimal cut sets
    #[arg(long)]
    mcs: bool,
    /// Leaf probability file (JSON map from qualified leaf to number);
    /// event probabilities from the safety model are used as defaults
    #[arg(long, value_name = "FILE")]
    prob: Option<PathBuf>,
    /// Report format
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct RepoArgs {
    #[command(subcommand)]
    action: RepoAction,
}

#[derive(Subcommand)]
enum RepoAction {
    /// Store one component of a safety model under a key
    Store {
        /// Repository directory
        #[arg(long, value_name = "DIR", env = "INSIDER_REPO")]
        repo: PathBuf,
        /// Safety model file holding the component
        #[arg(long, value_name = "FILE")]
        sam: PathBuf,
        /// Name of the component to store
        #[arg(long, value_name = "NAME")]
        component: String,
        /// Repository key (defaults to the component name)
        #[arg(long, value_name = "KEY")]
        key: Option<String>,
    },
    /// Print a stored component
    Fetch {
        /// Repository directory
        #[arg(long, value_name = "DIR", env = "INSIDER_REPO")]
        repo: PathBuf,
        /// Repository key
        #[arg(long, value_name = "KEY")]
        key: String,
        /// Write to this file instead of standard output
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct LinkArgs {
    /// System model file
    #[arg(long, value_name = "FILE")]
    sm: PathBuf,
    /// Safety model file
    #[arg(long, value_name = "FILE")]
    sam: PathBuf,
    /// Reference file to write
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

type CliError = Box<dyn std::error::Error>;

struct Loaded {
    sm: SystemModel,
    sam: SafetyAnalysisModel,
    sam_path: PathBuf,
}

impl PairArgs {
    fn load(&self) -> Result<Loaded, CliError> {
        if let Some(project) = &self.project {
            let project = s2am::load_project(project)?;
            for w in &project.warnings {
                eprintln!("warning: {w}");
            }
            return Ok(Loaded {
                sm: project.sm,
                sam: project.sam,
                sam_path: project.sam_path,
            });
        }
        let sm_path = self.sm.as_ref().expect("clap enforces --sm");
        let sam_path = self.sam.as_ref().ok_or("--sam is required with --sm")?;
        Ok(Loaded {
            sm: format::load_system_model(sm_path)?,
            sam: format::load_safety_model(sam_path)?,
            sam_path: sam_path.clone(),
        })
    }
}

/// Parses and runs `argv`, returning the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Check(args) => check(args),
        Command::Sync(args) => sync(args),
        Command::Trace(args) => trace(args),
        Command::Analyze(args) => analyze(args),
        Command::Repo(args) => repo(args),
        Command::Link(args) => link(args),
    }
}

fn check(args: CheckArgs) -> Result<i32, CliError> {
    let loaded = args.pair.load()?;
    let binding = bind(&loaded.sm, &loaded.sam);
    let findings = check_consistency(&loaded.sm, &loaded.sam, &binding);
    match args.format {
        Format::Text => print!("{}", report::findings_text(&findings)),
        Format::Json => print!("{}", format::findings_to_string(&findings)),
    }
    Ok(if findings.is_empty() { 0 } else { 1 })
}

fn sync(args: SyncArgs) -> Result<i32, CliError> {
    let loaded = args.pair.load()?;
    let hints = match &args.renames {
        Some(path) => Some(format::load_rename_hints(path)?),
        None => None,
    };
    let repo = match &args.repo {
        Some(dir) => Some(DirRepository::open(dir).load()?),
        None => None,
    };
    let binding = bind(&loaded.sm, &loaded.sam);
    let plan = plan_sync(
        &loaded.sm,
        &loaded.sam,
        &binding,
        hints.as_ref(),
        repo.as_ref(),
    )?;

    if args.dry_run {
        match args.format {
            Format::Text => print!("{}", report::change_set_text(&plan)),
            Format::Json => print!("{}", format::change_set_to_string(&plan)),
        }
    } else {
        let updated = apply_changeset(&loaded.sam, &plan)?;
        let target = args.out.as_ref().unwrap_or(&loaded.sam_path);
        format::save_safety_model(&updated, target)?;
        match args.format {
            Format::Text => {
                print!("{}", report::change_set_text(&plan));
                println!("wrote {}", target.display());
            }
            Format::Json => print!("{}", format::change_set_to_string(&plan)),
        }
    }
    Ok(if args.fail_on_change && !plan.is_empty() {
        1
    } else {
        0
    })
}

fn trace(args: TraceArgs) -> Result<i32, CliError> {
    let loaded = args.pair.load()?;
    let binding = bind(&loaded.sm, &loaded.sam);
    match args.format {
        Format::Text => print!(
            "{}",
            report::trace_table_text(&loaded.sm, &loaded.sam, &binding)
        ),
        Format::Json => print!(
            "{}",
            report::trace_table_json(&loaded.sm, &loaded.sam, &binding)
        ),
    }
    Ok(0)
}

fn analyze(args: AnalyzeArgs) -> Result<i32, CliError> {
    let loaded = args.pair.load()?;
    let top = QualifiedName::parse(&args.top)
        .map_err(|_| format!("--top {:?} is not a component.port name", args.top))?;
    let tree = flatten(&loaded.sam, &top)?;
    let cut_sets = if args.mcs {
        Some(minimal_cut_sets(&tree)?)
    } else {
        None
    };
    let probability = match &args.prob {
        Some(path) => {
            let mut probs: BTreeMap<QualifiedName, f64> = BTreeMap::new();
            for c in loaded.sam.components() {
                for e in &c.events {
                    if let Some(p) = e.probability {
                        probs.insert(QualifiedName::new(&c.name, &e.name)?, p);
                    }
                }
            }
            probs.extend(format::load_probabilities(path)?);
            Some(top_event_probability(&tree, &probs)?)
        }
        None => None,
    };
    let report = AnalysisReport {
        tree,
        cut_sets,
        probability,
    };
    match args.format {
        Format::Text => print!("{}", report::analysis_text(&report)),
        Format::Json => print!("{}", report::analysis_json(&report)),
    }
    Ok(0)
}

fn repo(args: RepoArgs) -> Result<i32, CliError> {
    match args.action {
        RepoAction::Store {
            repo,
            sam,
            component,
            key,
        } => {
            let model = format::load_safety_model(&sam)?;
            let Some(found) = model.component(&component) else {
                return Err(format!(
                    "{}: no component named {component:?}",
                    sam.display()
                )
                .into());
            };
            let key = key.unwrap_or_else(|| component.clone());
            DirRepository::open(&repo).store(&key, found)?;
            println!("stored {component} under {key:?} in {}", repo.display());
            Ok(0)
        }
        RepoAction::Fetch { repo, key, out } => {
            let component = DirRepository::open(&repo).fetch(&key)?;
            let text = format::component_to_string(&component);
            match out {
                Some(path) => {
                    std::fs::write(&path, text).map_err(|e| {
                        format!("{}: {e}", path.display())
                    })?;
                    println!("wrote {}", path.display());
                }
                None => print!("{text}"),
            }
            Ok(0)
        }
    }
}

fn link(args: LinkArgs) -> Result<i32, CliError> {
    s2am::write_reference(&args.sm, &args.sam, &args.out)?;
    println!("wrote {}", args.out.display());
    Ok(0)
}
