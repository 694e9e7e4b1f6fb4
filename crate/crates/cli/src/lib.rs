//! `faqbot` command implementations.
//!
//! [`run`] takes its streams as arguments so commands can be driven from
//! tests without spawning a process.

use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use faqbot_core::artifact::ModelArtifact;
use faqbot_core::classifiers::ClassifierKind;
use faqbot_core::dialogue::{Bot, ConversationContext, DialogueConfig};
use faqbot_core::evaluation::{activation_sweep, compare_classifiers, ExperimentConfig};
use faqbot_core::features::BowMode;
use faqbot_core::intents::{load_catalog, save_catalog, IntentCatalog};
use faqbot_core::synth::{synthetic_catalog, SynthConfig};
use faqbot_core::text::PreprocessConfig;
use faqbot_core::training::{train_artifact, TrainOptions};
use faqbot_service::ServiceConfig;
use serde::Deserialize;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    /// Bad input files: catalog, rules, artifact, configuration.
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<faqbot_core::Error> for CliError {
    fn from(e: faqbot_core::Error) -> Self {
        use faqbot_core::Error as E;
        match e {
            E::Classifier(_) | E::Eval(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<faqbot_service::ServiceError> for CliError {
    fn from(e: faqbot_service::ServiceError) -> Self {
        use faqbot_service::ServiceError as E;
        match e {
            E::Config(_) | E::Startup(_) | E::Snapshot(_) => CliError::Data(e.to_string()),
            E::Io(_) => CliError::Runtime(e.to_string()),
        }
    }
}

fn io_err(what: &str, path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("cannot {what} {}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "faqbot", version, about = "Amharic FAQ chatbot")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a classifier on a catalog and write a model artifact.
    Train(TrainArgs),
    /// Compare classifiers or sweep DNN activations on a held-out split.
    Eval(EvalArgs),
    /// Chat with a trained model over standard input.
    Chat(ChatArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Show every preprocessing stage for a text.
    Preprocess(PreprocessArgs),
    /// Generate a synthetic catalog for scale experiments.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Intent catalog JSON; the bundled sample catalog when omitted.
    #[arg(long)]
    pub catalog: Option<PathBuf>,
    /// Directory holding folding.tsv, stopwords.txt and stemmer.txt.
    #[arg(long)]
    pub rules_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Mnb,
    Svm,
    Dnn,
}

impl From<KindArg> for ClassifierKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Mnb => ClassifierKind::Mnb,
            KindArg::Svm => ClassifierKind::Svm,
            KindArg::Dnn => ClassifierKind::Dnn,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "dnn")]
    pub classifier: KindArg,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// TOML file with training hyperparameters.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override the configured number of DNN epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Feature values: binary presence or counts.
    #[arg(long)]
    pub bow_mode: Option<BowMode>,
    #[arg(long, default_value = "model.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("experiment").required(true).args(["compare", "sweep"])))]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// One row per classifier: DNN, SVM, MNB.
    #[arg(long)]
    pub compare: bool,
    /// One DNN row per hidden activation.
    #[arg(long)]
    pub sweep: bool,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// TOML file with training hyperparameters and test_fraction.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override the configured number of DNN epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Report JSON path.
    #[arg(long, default_value = "report.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ChatArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "model.json")]
    pub artifact: PathBuf,
    /// TOML file with dialogue settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Conversation user id; replies match the service for the same id.
    #[arg(long, default_value = "local")]
    pub user: String,
    /// Print intent, confidence and context after each reply.
    #[arg(long)]
    pub debug: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Service TOML file.
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Text to process; standard input when omitted.
    pub text: Option<String>,
    /// Directory holding folding.tsv, stopwords.txt and stemmer.txt.
    #[arg(long)]
    pub rules_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 60)]
    pub tags: usize,
    #[arg(long, default_value_t = 850)]
    pub patterns: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value = "synthetic_intents.json")]
    pub out: PathBuf,
}

/// Training file layout: [`TrainOptions`] plus the evaluation split.
#[derive(Debug, Default, Deserialize)]
struct TrainFile {
    #[serde(flatten)]
    options: TrainOptions,
    test_fraction: Option<f64>,
}

fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&src)
        .map_err(|e| CliError::Data(format!("invalid config {}: {e}", path.display())))
}

fn load_rules(dir: Option<&Path>) -> Result<PreprocessConfig, CliError> {
    match dir {
        Some(d) => PreprocessConfig::from_dir(d).map_err(|e| CliError::Data(e.to_string())),
        None => Ok(PreprocessConfig::default_rules()),
    }
}

fn load_inputs(data: &DataArgs) -> Result<(IntentCatalog, PreprocessConfig), CliError> {
    let rules = load_rules(data.rules_dir.as_deref())?;
    let catalog = match &data.catalog {
        Some(p) => load_catalog(p).map_err(|e| CliError::Data(e.to_string()))?,
        None => IntentCatalog::sample(),
    };
    Ok((catalog, rules))
}

fn train_file(config: Option<&Path>, epochs: Option<usize>) -> Result<TrainFile, CliError> {
    let mut file: TrainFile = match config {
        Some(p) => read_toml(p)?,
        None => TrainFile::default(),
    };
    if let Some(e) = epochs {
        file.options.dnn.epochs = e;
    }
    Ok(file)
}

fn w(out: &mut dyn Write, line: std::fmt::Arguments) -> Result<(), CliError> {
    out.write_fmt(line)
        .and_then(|_| out.write_all(b"\n"))
        .map_err(|e| CliError::Runtime(format!("cannot write output: {e}")))
}

pub fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (catalog, rules) = load_inputs(&args.data)?;
    let mut file = train_file(args.config.as_deref(), args.epochs)?;
    if let Some(mode) = args.bow_mode {
        file.options.bow_mode = mode;
    }
    let options = file.options.with_seed(args.seed);
    let kind = ClassifierKind::from(args.classifier);
    let mut write_err = None;
    let (artifact, _) = train_artifact(&catalog, &rules, kind, &options, |report| {
        if write_err.is_none() {
            write_err = w(out, format_args!("{report}")).err();
        }
    })?;
    if let Some(e) = write_err {
        return Err(e);
    }
    artifact
        .save(&args.out)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    w(
        out,
        format_args!(
            "saved {kind} model to {} ({} features, {} classes, seed {})",
            args.out.display(),
            artifact.vocabulary.len(),
            artifact.labels.len(),
            args.seed
        ),
    )
}

pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (catalog, rules) = load_inputs(&args.data)?;
    let file = train_file(args.config.as_deref(), args.epochs)?;
    let mut config = ExperimentConfig {
        preprocess: rules,
        options: file.options,
        ..ExperimentConfig::default()
    };
    if let Some(f) = file.test_fraction {
        config.test_fraction = f;
    }
    let report = if args.compare {
        compare_classifiers(&catalog, &config, args.seed)?
    } else {
        activation_sweep(&catalog, &config, args.seed)?
    };
    std::fs::write(&args.out, report.to_json())
        .map_err(|e| io_err("write report", &args.out, e))?;
    out.write_all(report.table().as_bytes())
        .map_err(|e| CliError::Runtime(format!("cannot write output: {e}")))?;
    w(
        out,
        format_args!(
            "train {} / test {} examples, seed {}, report {}",
            report.train_size,
            report.test_size,
            report.seed,
            args.out.display()
        ),
    )
}

pub fn load_bot(
    data: &DataArgs,
    artifact: &Path,
    dialogue: DialogueConfig,
) -> Result<Bot, CliError> {
    let (catalog, rules) = load_inputs(data)?;
    let artifact =
        ModelArtifact::load(artifact, &rules).map_err(|e| CliError::Data(e.to_string()))?;
    Bot::new(artifact, catalog, rules, dialogue).map_err(|e| CliError::Data(e.to_string()))
}

pub fn cmd_chat(
    args: &ChatArgs,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let mut dialogue: DialogueConfig = match &args.config {
        Some(p) => read_toml(p)?,
        None => DialogueConfig::default(),
    };
    dialogue.seed = args.seed;
    let bot = load_bot(&args.data, &args.artifact, dialogue)?;
    let mut ctx = ConversationContext::new(args.user.clone());
    let mut line = String::new();
    loop {
        line.clear();
        let n = input
            .read_line(&mut line)
            .map_err(|e| CliError::Runtime(format!("cannot read input: {e}")))?;
        if n == 0 {
            return Ok(());
        }
        let text = line.trim_end_matches(['\n', '\r']);
        let (reply, next) = bot.respond(&ctx, text);
        ctx = next;
        w(out, format_args!("{}", reply.text))?;
        if args.debug {
            w(
                out,
                format_args!(
                    "  [intent={} confidence={:.4} context={} fallback={}]",
                    reply.intent_tag.as_deref().unwrap_or("-"),
                    reply.confidence,
                    reply.context_after.as_deref().unwrap_or("-"),
                    reply.fallback
                ),
            )?;
        }
    }
}

pub fn cmd_serve(args: &ServeArgs) -> Result<(), CliError> {
    let config = ServiceConfig::load(&args.config)?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Runtime(e.to_string()))?;
    runtime.block_on(faqbot_service::serve(config))?;
    Ok(())
}

pub fn cmd_preprocess(
    args: &PreprocessArgs,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let rules = load_rules(args.rules_dir.as_deref())?;
    let text = match &args.text {
        Some(t) => t.clone(),
        None => {
            let mut s = String::new();
            input
                .read_to_string(&mut s)
                .map_err(|e| CliError::Runtime(format!("cannot read input: {e}")))?;
            s
        }
    };
    w(out, format_args!("{}", rules.stages(&text)))
}

pub fn cmd_synth(args: &SynthArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if args.tags == 0 || args.patterns < args.tags {
        return Err(CliError::Usage(
            "need --tags >= 1 and --patterns >= --tags".into(),
        ));
    }
    let catalog = synthetic_catalog(&SynthConfig {
        tags: args.tags,
        patterns: args.patterns,
        seed: args.seed,
        ..SynthConfig::default()
    });
    save_catalog(&catalog, &args.out).map_err(|e| CliError::Runtime(e.to_string()))?;
    w(
        out,
        format_args!(
            "wrote {} tags / {} patterns to {}",
            args.tags,
            args.patterns,
            args.out.display()
        ),
    )
}

pub fn execute(cli: &Cli, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Train(a) => cmd_train(a, out),
        Command::Eval(a) => cmd_eval(a, out),
        Command::Chat(a) => cmd_chat(a, input, out),
        Command::Serve(a) => cmd_serve(a),
        Command::Preprocess(a) => cmd_preprocess(a, input, out),
        Command::Synth(a) => cmd_synth(a, out),
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code. Diagnostics go to `err`.
pub fn run<I, T>(args: I, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli, input, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
