use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use cslid_core::decode::DecodeStrategy;
use cslid_core::langcodes::{parse_aliases, parse_tag_list};
use cslid_core::metrics::{cs_subset, evaluate, prediction_histogram, EvalInstance, EvalOptions, FprAveraging};
use cslid_core::model::{train, TrainConfig};
use cslid_core::tag::{LabelSet, LanguageTag};
use cslid_core::trigram::DEFAULT_PROFILE_SIZE;
use cslid_core::{datasets, Example, LabelUniverse, LossMode};
use thiserror::Error;

use crate::modelfile::{load_model, save_model, write_vocabulary};
use crate::predict::{Classifier, FilterQuery, Predictor};
use crate::profiles::{read_profiles, train_profiles, write_profiles};
use crate::readers::{format_labeled, DatasetConfig, DatasetReader, ReadStats};
use crate::report::{append_tables, render_with_cs, table_rows};

#[derive(Debug, Parser)]
#[command(
    name = "cslid",
    version,
    about = "Sentence-level multi-label language identification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a linear model from labeled lines.
    Train(TrainArgs),
    /// Build trigram profiles from labeled lines.
    ProfileTrain(ProfileTrainArgs),
    /// Label each input line.
    Predict(PredictArgs),
    /// Score predictions against a gold dataset.
    Eval(EvalArgs),
    /// Convert a dataset to labeled lines.
    Prep(PrepArgs),
    /// Corpus statistics and prediction histograms.
    Stats(StatsArgs),
    /// Keep the input lines whose prediction matches a query.
    Filter(FilterArgs),
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    /// Input file, `-` for standard input.
    #[arg(long, short, default_value = "-")]
    pub input: PathBuf,
    /// Dataset config (TOML); labeled lines when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Count and skip malformed records instead of failing.
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Debug, Args)]
pub struct UniverseArgs {
    /// Label universe, one tag per line (default: FLORES-200*).
    #[arg(long)]
    pub universe: Option<PathBuf>,
    /// Alias table, `raw<TAB>target` per line (default: shipped table).
    #[arg(long)]
    pub aliases: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LossArg {
    Softmax,
    Sigmoid,
}

impl From<LossArg> for LossMode {
    fn from(l: LossArg) -> Self {
        match l {
            LossArg::Softmax => LossMode::SoftmaxCe,
            LossArg::Sigmoid => LossMode::SigmoidBce,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    /// Model file to write.
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "softmax")]
    pub loss: LossArg,
    #[arg(long, default_value_t = 256)]
    pub dim: usize,
    #[arg(long, default_value_t = 2)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.5)]
    pub lr: f64,
    /// Keep words seen more than this many times.
    #[arg(long, default_value_t = 1000)]
    pub min_count: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the vocabulary as TSV.
    #[arg(long)]
    pub vocab_tsv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProfileTrainArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[arg(long, short)]
    pub output: PathBuf,
    /// Trigrams kept per language.
    #[arg(long, default_value_t = DEFAULT_PROFILE_SIZE)]
    pub size: usize,
}

#[derive(Debug, Args)]
pub struct ClassifierArgs {
    /// Linear model file.
    #[arg(long, conflicts_with = "profiles")]
    pub model: Option<PathBuf>,
    /// Trigram profile file.
    #[arg(long)]
    pub profiles: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_PROFILE_SIZE)]
    pub profile_size: usize,
    /// top1, fixed:<k>, dynamic[:<m>] or closest[:<c>]; defaults to top1 for
    /// softmax models, dynamic:2 for sigmoid models and closest:0.99 for
    /// profiles.
    #[arg(long)]
    pub decode: Option<DecodeStrategy>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub classifier: ClassifierArgs,
    #[arg(long, short, default_value = "-")]
    pub input: PathBuf,
    #[arg(long, short, default_value = "-")]
    pub output: PathBuf,
    /// Normalize predicted tags into this universe, dropping the rest.
    #[arg(long)]
    pub universe: Option<PathBuf>,
    #[arg(long, requires = "universe")]
    pub aliases: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AveragingArg {
    Universe,
    Observed,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Gold dataset.
    #[arg(long)]
    pub gold: PathBuf,
    /// Dataset config for the gold file; labeled lines when absent.
    #[arg(long)]
    pub gold_config: Option<PathBuf>,
    #[arg(long)]
    pub lenient: bool,
    /// Precomputed predictions, one `labels[<TAB>scores]` line per gold
    /// example.
    #[arg(long, conflicts_with_all = ["model", "profiles"])]
    pub predictions: Option<PathBuf>,
    #[command(flatten)]
    pub classifier: ClassifierArgs,
    #[command(flatten)]
    pub universe: UniverseArgs,
    #[arg(long, value_enum, default_value = "universe")]
    pub fpr_averaging: AveragingArg,
    /// Append table rows under this directory.
    #[arg(long)]
    pub tables: Option<PathBuf>,
    #[arg(long, default_value = "dataset")]
    pub dataset_name: String,
    #[arg(long, default_value = "model")]
    pub model_name: String,
    #[arg(long, short, default_value = "-")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct PrepArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[command(flatten)]
    pub universe: UniverseArgs,
    #[arg(long, short, default_value = "-")]
    pub output: PathBuf,
    /// Write only the text of each example.
    #[arg(long)]
    pub text_only: bool,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    /// Resolve gold and predicted tags through this universe instead of taking them as is.
    #[arg(long)]
    pub universe: Option<PathBuf>,
    /// Predictions to summarize as a histogram of predicted sets.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub top: usize,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[command(flatten)]
    pub classifier: ClassifierArgs,
    /// cs, pair:<a>,<b> or lang:<tag>.
    #[arg(long)]
    pub query: FilterQuery,
    #[arg(long, short, default_value = "-")]
    pub input: PathBuf,
    #[arg(long, short, default_value = "-")]
    pub output: PathBuf,
    #[arg(long)]
    pub universe: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("gold has {gold} examples but predictions have {pred} lines")]
    LengthMismatch { gold: usize, pred: usize },
}

fn open_input(path: &Path) -> Result<Box<dyn BufRead>> {
    if path.as_os_str() == "-" {
        Ok(Box::new(BufReader::new(io::stdin())))
    } else {
        let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        Ok(Box::new(BufReader::with_capacity(1 << 16, f)))
    }
}

fn open_output(path: &Path) -> Result<Box<dyn Write>> {
    if path.as_os_str() == "-" {
        Ok(Box::new(BufWriter::with_capacity(1 << 16, io::stdout())))
    } else {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        Ok(Box::new(BufWriter::with_capacity(1 << 16, f)))
    }
}

pub fn load_universe(tags: Option<&Path>, aliases: Option<&Path>) -> Result<LabelUniverse> {
    let read = |p: &Path| std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()));
    let tags = match tags {
        Some(p) => parse_tag_list(&read(p)?).with_context(|| format!("in {}", p.display()))?,
        None => LabelUniverse::flores200_star().tags().to_vec(),
    };
    let universe = match aliases {
        Some(p) => {
            let aliases = parse_aliases(&read(p)?).with_context(|| format!("in {}", p.display()))?;
            LabelUniverse::new(tags, aliases)?
        }
        None => LabelUniverse::with_default_aliases(tags)?,
    };
    Ok(universe)
}

fn optional_universe(tags: Option<&Path>) -> Result<Option<LabelUniverse>> {
    tags.map(|p| load_universe(Some(p), None)).transpose()
}

fn dataset_config(path: Option<&Path>) -> Result<DatasetConfig> {
    Ok(match path {
        Some(p) => DatasetConfig::load(p)?,
        None => DatasetConfig::labeled_lines(),
    })
}

fn report_read_stats(command: &str, stats: &ReadStats) {
    eprintln!(
        "{command}: {} examples, {} discarded, {} malformed",
        stats.examples, stats.discarded, stats.malformed
    );
    for (raw, n) in &stats.unmappable {
        eprintln!("warning: unmappable tag {raw:?} ({n} occurrences)");
    }
}

fn read_examples(
    command: &str,
    input: &Path,
    config: DatasetConfig,
    universe: Option<LabelUniverse>,
    lenient: bool,
) -> Result<Vec<Example>> {
    let mut reader = DatasetReader::new(open_input(input)?, config, universe, !lenient)?;
    let mut examples = Vec::new();
    for ex in reader.by_ref() {
        examples.push(ex.with_context(|| format!("reading {}", input.display()))?);
    }
    report_read_stats(command, reader.stats());
    Ok(examples)
}

fn load_classifier(args: &ClassifierArgs) -> Result<Classifier> {
    match (&args.model, &args.profiles) {
        (Some(m), None) => Ok(Classifier::Linear(load_model(m)?)),
        (None, Some(p)) => {
            let set =
                read_profiles(open_input(p)?, args.profile_size).with_context(|| format!("in {}", p.display()))?;
            Ok(Classifier::Trigram(set))
        }
        _ => bail!("give exactly one of --model and --profiles"),
    }
}

fn predictor(args: &ClassifierArgs, universe: Option<LabelUniverse>) -> Result<Predictor> {
    let classifier = load_classifier(args)?;
    let decode = args.decode.unwrap_or_else(|| classifier.default_decode());
    Ok(Predictor::new(classifier, decode, universe))
}

/// Reads a line as UTF-8, replacing invalid sequences; `None` at EOF.
fn read_line_lossy(input: &mut dyn BufRead, buf: &mut Vec<u8>) -> io::Result<Option<String>> {
    buf.clear();
    if input.read_until(b'\n', buf)? == 0 {
        return Ok(None);
    }
    if buf.last() == Some(&b'\n') {
        buf.pop();
        if buf.last() == Some(&b'\r') {
            buf.pop();
        }
    }
    Ok(Some(String::from_utf8_lossy(buf).into_owned()))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::ProfileTrain(a) => cmd_profile_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Prep(a) => cmd_prep(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Filter(a) => cmd_filter(a),
    }
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let config = dataset_config(a.data.config.as_deref())?;
    let examples = read_examples("train", &a.data.input, config, None, a.data.lenient)?;
    let cfg = TrainConfig {
        dim: a.dim,
        epochs: a.epochs,
        lr0: a.lr,
        min_word_count: a.min_count,
        seed: a.seed,
    };
    let (model, report) = train(&examples, &cfg, a.loss.into())?;
    save_model(&model, &a.output).with_context(|| format!("writing {}", a.output.display()))?;
    if let Some(p) = &a.vocab_tsv {
        let mut out = open_output(p)?;
        write_vocabulary(model.vocab(), &mut out)?;
        out.flush()?;
    }
    eprintln!(
        "train: {} words, {} n-grams, {} labels, {} steps, {} examples without features, final loss {:.6}",
        model.vocab().num_words(),
        model.vocab().num_ngrams(),
        model.labels().len(),
        report.steps,
        report.skipped_empty,
        report.final_loss()
    );
    Ok(())
}

fn cmd_profile_train(a: ProfileTrainArgs) -> Result<()> {
    let config = dataset_config(a.data.config.as_deref())?;
    let examples = read_examples("profile-train", &a.data.input, config, None, a.data.lenient)?;
    let (set, stats) = train_profiles(&examples, a.size)?;
    let mut out = open_output(&a.output)?;
    write_profiles(&set, &mut out)?;
    out.flush()?;
    eprintln!(
        "profile-train: {} profiles from {} examples, {} multi-label examples skipped",
        set.profiles().len(),
        stats.used,
        stats.skipped_multi
    );
    for tag in &stats.no_script {
        eprintln!("warning: no majority script for {tag}; no profile written");
    }
    Ok(())
}

fn cmd_predict(a: PredictArgs) -> Result<()> {
    let universe = match &a.universe {
        Some(u) => Some(load_universe(Some(u), a.aliases.as_deref())?),
        None => None,
    };
    let predictor = predictor(&a.classifier, universe)?;
    let mut input = open_input(&a.input)?;
    let mut out = open_output(&a.output)?;
    let start = Instant::now();
    let mut n = 0u64;
    let mut buf = Vec::new();
    while let Some(line) = read_line_lossy(&mut *input, &mut buf)? {
        writeln!(out, "{}", predictor.predict(&line).to_tsv())?;
        n += 1;
    }
    out.flush()?;
    let secs = start.elapsed().as_secs_f64();
    eprintln!(
        "predict: {n} lines in {secs:.3}s ({:.0} lines/s)",
        n as f64 / secs.max(1e-9)
    );
    Ok(())
}

/// Parses the label field of a prediction line into universe tags.
/// The label field of a prediction line. Without a universe, any valid tag
/// is kept as is.
fn parse_prediction(line: &str, universe: Option<&LabelUniverse>) -> LabelSet {
    let field = line.split('\t').next().unwrap_or("");
    field
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .filter_map(|raw| match universe {
            Some(u) => u.normalize(raw),
            None => LanguageTag::new(raw.trim()).ok(),
        })
        .collect()
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let universe = load_universe(a.universe.universe.as_deref(), a.universe.aliases.as_deref())?;
    let config = dataset_config(a.gold_config.as_deref())?;
    let gold = read_examples("eval", &a.gold, config, Some(universe.clone()), a.lenient)?;
    let preds: Vec<LabelSet> = match &a.predictions {
        Some(p) => {
            let mut input = open_input(p)?;
            let mut buf = Vec::new();
            let mut preds = Vec::new();
            while let Some(line) = read_line_lossy(&mut *input, &mut buf)? {
                preds.push(parse_prediction(&line, Some(&universe)));
            }
            preds
        }
        None => {
            let predictor = predictor(&a.classifier, Some(universe.clone()))?;
            gold.iter().map(|ex| predictor.predict(ex.text()).label_set()).collect()
        }
    };
    if preds.len() != gold.len() {
        return Err(CliError::LengthMismatch {
            gold: gold.len(),
            pred: preds.len(),
        }
        .into());
    }
    let instances: Vec<EvalInstance> = gold
        .into_iter()
        .zip(preds)
        .map(|(ex, pred)| EvalInstance::new(ex.into_parts().1, pred))
        .collect();
    let options = EvalOptions {
        fpr_averaging: match a.fpr_averaging {
            AveragingArg::Universe => FprAveraging::Universe,
            AveragingArg::Observed => FprAveraging::Observed,
        },
    };
    let all = evaluate(&instances, &universe, options)?;
    let cs_instances = cs_subset(&instances);
    let cs = if cs_instances.is_empty() {
        None
    } else {
        Some(evaluate(&cs_instances, &universe, options)?)
    };
    let mut out = open_output(&a.output)?;
    out.write_all(render_with_cs(&all, cs.as_ref()).as_bytes())?;
    out.flush()?;
    if let Some(dir) = &a.tables {
        let rows = table_rows(&a.dataset_name, &a.model_name, &all, cs.as_ref(), &instances);
        append_tables(dir, &rows).with_context(|| format!("writing tables under {}", dir.display()))?;
    }
    Ok(())
}

fn cmd_prep(a: PrepArgs) -> Result<()> {
    let universe = load_universe(a.universe.universe.as_deref(), a.universe.aliases.as_deref())?;
    let config = dataset_config(a.data.config.as_deref())?;
    let mut reader = DatasetReader::new(open_input(&a.data.input)?, config, Some(universe), !a.data.lenient)?;
    let mut out = open_output(&a.output)?;
    for ex in reader.by_ref() {
        let ex = ex.with_context(|| format!("reading {}", a.data.input.display()))?;
        if a.text_only {
            writeln!(out, "{}", ex.text().replace(['\n', '\r'], " "))?;
        } else {
            writeln!(out, "{}", format_labeled(&ex))?;
        }
    }
    out.flush()?;
    report_read_stats("prep", reader.stats());
    Ok(())
}

fn cmd_stats(a: StatsArgs) -> Result<()> {
    let config = dataset_config(a.data.config.as_deref())?;
    let universe = optional_universe(a.universe.as_deref())?;
    let examples = read_examples("stats", &a.data.input, config, universe.clone(), a.data.lenient)?;
    let mut out = io::stdout().lock();
    let cs = examples.iter().filter(|e| e.is_code_switched()).count();
    writeln!(out, "examples\t{}", examples.len())?;
    writeln!(out, "cs_examples\t{cs}")?;
    writeln!(out, "cs_proportion\t{:.3}", datasets::cs_proportion(&examples))?;
    let mut counts: std::collections::BTreeMap<&LanguageTag, usize> = Default::default();
    for ex in &examples {
        for t in ex.gold() {
            *counts.entry(t).or_default() += 1;
        }
    }
    for (tag, n) in counts {
        writeln!(out, "gold.{tag}\t{n}")?;
    }
    if let Some(p) = &a.predictions {
        let mut input = open_input(p)?;
        let mut buf = Vec::new();
        let mut instances = Vec::new();
        while let Some(line) = read_line_lossy(&mut *input, &mut buf)? {
            instances.push(EvalInstance::new(
                LabelSet::new(),
                parse_prediction(&line, universe.as_ref()),
            ));
        }
        for (rank, (set, n)) in prediction_histogram(&instances, a.top).into_iter().enumerate() {
            let label = if set.is_empty() {
                "None".to_string()
            } else {
                set.to_string()
            };
            writeln!(out, "top.{}\t{label}\t{n}", rank + 1)?;
        }
    }
    Ok(())
}

fn cmd_filter(a: FilterArgs) -> Result<()> {
    let universe = optional_universe(a.universe.as_deref())?;
    let classifier = load_classifier(&a.classifier)?;
    let known: Vec<&str> = match (&universe, &classifier) {
        (Some(u), _) => u.tags().iter().map(LanguageTag::as_str).collect(),
        (None, Classifier::Linear(m)) => m.labels().iter().map(LanguageTag::as_str).collect(),
        (None, Classifier::Trigram(p)) => p.profiles().iter().map(|p| p.language().as_str()).collect(),
    };
    for tag in a.query.tags() {
        if !known.contains(&tag.as_str()) {
            bail!("query tag {tag} is not a label the classifier can emit");
        }
    }
    let decode = a.classifier.decode.unwrap_or_else(|| classifier.default_decode());
    let predictor = Predictor::new(classifier, decode, universe);
    let mut input = open_input(&a.input)?;
    let mut out = open_output(&a.output)?;
    let (mut read, mut kept) = (0u64, 0u64);
    let mut buf = Vec::new();
    while let Some(line) = read_line_lossy(&mut *input, &mut buf)? {
        read += 1;
        let pred = predictor.predict(&line);
        if a.query.matches(&pred.label_set()) {
            kept += 1;
            let labels: Vec<&str> = pred.labels.iter().map(|t| t.as_str()).collect();
            writeln!(out, "{}\t{line}", labels.join(","))?;
        }
    }
    out.flush()?;
    eprintln!("filter: kept {kept} of {read} lines");
    Ok(())
}
