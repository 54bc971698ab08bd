// Negated comparisons below also reject NaN arguments.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use lexdiv::corpus_file::{self, CorpusHeader, CorpusOrigin};
use lexdiv::corpusstats::{
    frequency_table, growth_curve_at, hapax_count, log_checkpoints, ttr, FrequencyTable, GrowthCurve,
};
use lexdiv::estimators::{
    nsb_entropy, partial_entropy_curve, plugin_entropy, r_h_empirical, r_h_theoretical, Estimator,
};
use lexdiv::lawfit::{fit_heaps, fit_ttr_powerlaw, fit_zipf, ttr_series, LawReport, ZipfFit, ZipfFitConfig};
use lexdiv::relfit::{collapse_h_max_with, fit_relation, write_collapse_tsv, RelationKind};
use lexdiv::sampler::{
    sample_series, select_fit_range, FitRange, NsbSupport, SamplePlan, SampleSeries, SIGMA_H_HI, SIGMA_H_LO,
};
use lexdiv::synth::{gen_corpus, true_entropy, GeneratorSpec, RankLaw};
use lexdiv::textprep::{
    collect_inputs, tokenize_files, CasingMode, Encoder, TokenizedCorpus, TokenizerOptions, VocabCounter,
};

use output::{emit, emit_json, open, write_atomic};

/// Lexical diversity of large corpora, from raw text to fitted entropy laws.
#[derive(Parser, Serialize)]
#[command(name = "lexdiv", version)]
struct Cli {
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true, env = "LEXDIV_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
enum Command {
    /// Tokenize a text file or directory into corpus files.
    Tokenize(TokenizeArgs),
    /// Size and diversity summary of one corpus.
    Stats(StatsArgs),
    /// Two-regime Zipf fit on the rank-frequency table.
    Zipf(ZipfArgs),
    /// Heaps and TTR power-law fits on the vocabulary growth curve.
    Heaps(HeapsArgs),
    /// Fragment sampling series over a grid of lengths.
    Sample(SampleArgs),
    /// Fit H(L) to a sampling series.
    #[command(name = "fit-hl")]
    FitHl(FitArgs),
    /// Fit H(TTR) to a sampling series.
    #[command(name = "fit-httr")]
    FitHttr(FitArgs),
    /// Cumulative entropy contribution of ranks 1..r.
    #[command(name = "partial-entropy")]
    PartialEntropy(PartialArgs),
    /// Entropy share of ranks beyond the Zipf breakpoint, measured and modelled.
    Rh(RhArgs),
    /// Deviation from the entropy at the largest length, against TTR.
    Collapse(CollapseArgs),
    /// Generate a synthetic corpus from a Zipf law.
    Synth(SynthArgs),
}

#[derive(Copy, Clone, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Casing {
    UnicodeSimple,
    TurkishAware,
}

#[derive(Args, Serialize)]
struct TokenizerArgs {
    #[arg(long, value_enum, default_value = "unicode-simple")]
    casing: Casing,
    /// Keep decimal digits inside tokens.
    #[arg(long)]
    keep_numbers: bool,
    /// Remove combining accents.
    #[arg(long)]
    strip_accents: bool,
}

impl TokenizerArgs {
    fn options(&self) -> TokenizerOptions {
        TokenizerOptions {
            casing_mode: match self.casing {
                Casing::UnicodeSimple => CasingMode::UnicodeSimple,
                Casing::TurkishAware => CasingMode::TurkishAware,
            },
            strip_numbers: !self.keep_numbers,
            preserve_accents: !self.strip_accents,
        }
    }
}

#[derive(Args, Serialize)]
struct TokenizeArgs {
    /// Text file, or directory read recursively in path order.
    #[arg(long)]
    input: PathBuf,
    /// Output prefix; writes <prefix>.ids and <prefix>.vocab.tsv.
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    tokenizer: TokenizerArgs,
}

#[derive(Args, Serialize)]
#[group(required = true, multiple = false, id = "source")]
struct Source {
    /// Corpus prefix written by `tokenize` or `synth`.
    #[arg(long, group = "source")]
    corpus: Option<PathBuf>,
    /// Raw text file or directory, tokenized on the fly.
    #[arg(long, group = "source")]
    text: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct StatsArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    tokenizer: TokenizerArgs,
    /// Also report the NSB entropy with support equal to the vocabulary.
    #[arg(long)]
    nsb: bool,
    /// JSON report path; stdout if omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct ZipfArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u64).range(1..))]
    grid_points: u64,
    #[arg(long, default_value_t = 100.0)]
    grid_lo: f64,
    #[arg(long, default_value_t = 0.1)]
    grid_hi_fraction: f64,
    /// Average log-frequency in this many log-rank bins per decade.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    log_bins: Option<u64>,
    /// JSON report path; stdout if omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Rank-frequency table as TSV.
    #[arg(long)]
    table_tsv: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct HeapsArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Growth-curve checkpoints per decade of L.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    per_decade: u64,
    /// Smallest L used in the fits.
    #[arg(long, default_value_t = 100)]
    fit_from: u64,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Growth curve as TSV.
    #[arg(long)]
    curve_tsv: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct SampleArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 2_500_000, value_parser = clap::value_parser!(u64).range(1..))]
    step: u64,
    #[arg(long, default_value_t = 25, value_parser = clap::value_parser!(u64).range(1..))]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2_500_000, value_parser = clap::value_parser!(u64).range(1..))]
    l_min: u64,
    /// Largest fragment length; the corpus length if omitted.
    #[arg(long)]
    l_max: Option<u64>,
    /// Also compute NSB entropy per fragment.
    #[arg(long)]
    nsb: bool,
    /// NSB support size: `observed` (fragment types), `corpus` (all corpus
    /// types) or a fixed number.
    #[arg(long, default_value = "observed", value_parser = parse_nsb_support)]
    nsb_support: NsbSupport,
    /// Series TSV path; stdout if omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Per-replicate TSV.
    #[arg(long)]
    replicates_tsv: Option<PathBuf>,
}

fn parse_nsb_support(s: &str) -> std::result::Result<NsbSupport, String> {
    match s {
        "observed" => Ok(NsbSupport::Observed),
        "corpus" => Ok(NsbSupport::Corpus),
        n => n
            .parse::<u64>()
            .map(NsbSupport::Fixed)
            .map_err(|_| format!("expected observed, corpus or a type count, got {n:?}")),
    }
}

#[derive(Copy, Clone, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum EstimatorArg {
    Plugin,
    Nsb,
}

impl From<EstimatorArg> for Estimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Plugin => Estimator::Plugin,
            EstimatorArg::Nsb => Estimator::Nsb,
        }
    }
}

#[derive(Args, Serialize)]
struct FitArgs {
    /// Series TSV written by `sample`.
    #[arg(long)]
    series: PathBuf,
    /// Heaps exponent.
    #[arg(long, conflicts_with = "heaps_report", required_unless_present = "heaps_report")]
    beta: Option<f64>,
    /// Take beta from a report written by `heaps`.
    #[arg(long)]
    heaps_report: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "plugin")]
    estimator: EstimatorArg,
    /// Lower σ_H bound of the automatic fit range.
    #[arg(long, default_value_t = SIGMA_H_LO)]
    sigma_lo: f64,
    #[arg(long, default_value_t = SIGMA_H_HI)]
    sigma_hi: f64,
    /// Explicit fit range; overrides the σ_H band.
    #[arg(long, requires = "l_high")]
    l_low: Option<u64>,
    #[arg(long, requires = "l_low")]
    l_high: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct PartialArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct RhArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Report from `zipf`; the fit is recomputed if omitted.
    #[arg(long)]
    zipf_report: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct CollapseArgs {
    #[arg(long)]
    series: PathBuf,
    #[arg(long, value_enum, default_value = "plugin")]
    estimator: EstimatorArg,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Copy, Clone, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum LawKind {
    Zipf,
    #[value(name = "piecewise-zipf", alias = "piecewise_zipf")]
    PiecewiseZipf,
}

#[derive(Args, Serialize)]
struct SynthArgs {
    #[arg(long, value_enum)]
    kind: LawKind,
    /// Support size V.
    #[arg(long = "v", value_parser = clap::value_parser!(u64).range(1..))]
    vocab: u64,
    /// Tokens L.
    #[arg(long = "l", value_parser = clap::value_parser!(u64).range(1..))]
    tokens: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exponent for `zipf`.
    #[arg(long = "a", required_if_eq("kind", "zipf"))]
    a: Option<f64>,
    #[arg(long, required_if_eq("kind", "piecewise-zipf"))]
    a1: Option<f64>,
    #[arg(long, required_if_eq("kind", "piecewise-zipf"))]
    a2: Option<f64>,
    #[arg(long, required_if_eq("kind", "piecewise-zipf"))]
    r_c: Option<u64>,
    /// Output prefix; writes <prefix>.ids and <prefix>.vocab.tsv.
    #[arg(long)]
    output: PathBuf,
    /// Ground-truth JSON (generator and exact entropy).
    #[arg(long)]
    report: Option<PathBuf>,
}

impl SynthArgs {
    fn spec(&self) -> Result<GeneratorSpec> {
        let law = match self.kind {
            LawKind::Zipf => RankLaw::Zipf {
                a: self.a.context("--a is required")?,
            },
            LawKind::PiecewiseZipf => RankLaw::PiecewiseZipf {
                a1: self.a1.context("--a1 is required")?,
                a2: self.a2.context("--a2 is required")?,
                r_c: self.r_c.context("--r-c is required")?,
            },
        };
        let spec = GeneratorSpec {
            law,
            vocab: self.vocab,
            tokens: self.tokens,
            seed: self.seed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn load_corpus(prefix: &Path) -> Result<TokenizedCorpus> {
    let (corpus, _) =
        corpus_file::read_corpus(prefix).with_context(|| format!("cannot load corpus {}", prefix.display()))?;
    if corpus.is_empty() {
        bail!(lexdiv::Error::EmptyInput("corpus has no tokens"));
    }
    Ok(corpus)
}

fn save_corpus(prefix: &Path, corpus: &TokenizedCorpus, header: &CorpusHeader) -> Result<()> {
    let (ids, vocab) = corpus_file::corpus_paths(prefix);
    write_atomic(&ids, |w| corpus_file::write_ids(w, corpus, header))?;
    write_atomic(&vocab, |w| corpus_file::write_vocab_tsv(w, corpus.vocab()))
}

fn tokenize(args: &TokenizeArgs) -> Result<()> {
    let files = collect_inputs(&args.input)?;
    let opts = args.tokenizer.options();
    let mut enc = Encoder::new();
    let mut failure = None;
    tokenize_files(&files, &opts, |t| {
        if failure.is_none() {
            if let Err(e) = enc.push(t) {
                failure = Some(e);
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    let corpus = enc.finish();
    let origin = CorpusOrigin::Text {
        tokenizer: opts,
        inputs: files.iter().map(|p| p.display().to_string()).collect(),
    };
    save_corpus(&args.output, &corpus, &CorpusHeader::new(origin, &corpus))
}

#[derive(Serialize)]
struct StatsReport {
    tokens: u64,
    types: u64,
    ttr: f64,
    hapax: u64,
    hapax_share: f64,
    entropy_plugin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    entropy_nsb: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    entropy_nsb_std: Option<f64>,
}

fn stats(args: &StatsArgs) -> Result<()> {
    let counts: Vec<u64> = match (&args.source.corpus, &args.source.text) {
        (Some(prefix), _) => load_corpus(prefix)?.counts(),
        (None, Some(text)) => {
            let files = collect_inputs(text)?;
            let mut counter = VocabCounter::new();
            let mut failure = None;
            tokenize_files(&files, &args.tokenizer.options(), |t| {
                if failure.is_none() {
                    if let Err(e) = counter.push(t) {
                        failure = Some(e);
                    }
                }
            })?;
            if let Some(e) = failure {
                return Err(e.into());
            }
            counter.finish().entries.into_iter().map(|e| e.count).collect()
        }
        (None, None) => bail!("one of --corpus or --text is required"),
    };
    let table = FrequencyTable::from_counts(&counts)?;
    let (l, v) = (table.total_tokens(), table.len() as u64);
    let hapax = hapax_count(&table);
    let nsb = if args.nsb { Some(nsb_entropy(&counts, v)?) } else { None };
    let report = StatsReport {
        tokens: l,
        types: v,
        ttr: ttr(v, l)?,
        hapax,
        hapax_share: hapax as f64 / v as f64,
        entropy_plugin: plugin_entropy(&counts)?.value,
        entropy_nsb: nsb.map(|e| e.value),
        entropy_nsb_std: nsb.and_then(|e| e.posterior_std),
    };
    emit_json(args.output.as_deref(), &report)
}

fn zipf(args: &ZipfArgs) -> Result<()> {
    if !(args.grid_lo >= 1.0) || !(args.grid_hi_fraction > 0.0 && args.grid_hi_fraction <= 1.0) {
        bail!(lexdiv::Error::Domain(
            "need --grid-lo >= 1 and --grid-hi-fraction in (0, 1]".into()
        ));
    }
    let corpus = load_corpus(&args.corpus)?;
    let table = frequency_table(&corpus)?;
    let config = ZipfFitConfig {
        grid_points: args.grid_points as usize,
        grid_lo: args.grid_lo,
        grid_hi_fraction: args.grid_hi_fraction,
        log_bins_per_decade: args.log_bins.map(|b| b as usize),
        ..Default::default()
    };
    let fit = fit_zipf(&table, &config)?;
    if let Some(path) = &args.table_tsv {
        write_atomic(path, |w| table.write_tsv(w))?;
    }
    emit_json(
        args.output.as_deref(),
        &LawReport {
            zipf: Some(fit),
            ..Default::default()
        },
    )
}

fn heaps(args: &HeapsArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    let checkpoints = log_checkpoints(corpus.total_tokens(), args.per_decade as usize);
    let curve = growth_curve_at(&corpus, &checkpoints)?;
    let fit_curve = GrowthCurve {
        points: curve
            .points
            .iter()
            .copied()
            .filter(|&(l, _)| l >= args.fit_from)
            .collect(),
    };
    let heaps = fit_heaps(&fit_curve)?;
    let ttr_fit = fit_ttr_powerlaw(&ttr_series(&fit_curve))?;
    if !heaps.sublinear {
        eprintln!("warning: Heaps exponent {} lies outside (0, 1)", heaps.beta);
    }
    if let Some(path) = &args.curve_tsv {
        write_atomic(path, |w| curve.write_tsv(w))?;
    }
    emit_json(
        args.output.as_deref(),
        &LawReport {
            zipf: None,
            heaps: Some(heaps),
            ttr: Some(ttr_fit),
        },
    )
}

fn sample(args: &SampleArgs) -> Result<()> {
    let plan = SamplePlan {
        step: args.step,
        replicates: args.reps as usize,
        seed: args.seed,
        l_min: args.l_min,
        l_max: args.l_max,
        nsb_support: args.nsb_support,
    };
    if args.l_max.is_some_and(|m| m < args.l_min) {
        bail!(lexdiv::Error::Domain("--l-max must be >= --l-min".into()));
    }
    let corpus = load_corpus(&args.corpus)?;
    let mut estimators = vec![Estimator::Plugin];
    if args.nsb {
        estimators.push(Estimator::Nsb);
    }
    let series = sample_series(&corpus, &plan, &estimators)?;
    if let Some(path) = &args.replicates_tsv {
        write_atomic(path, |w| series.write_replicates_tsv(w))?;
    }
    emit(args.output.as_deref(), |w| series.write_tsv(w))
}

fn read_series(path: &Path) -> Result<SampleSeries> {
    SampleSeries::read_tsv(open(path)?).with_context(|| format!("cannot read series {}", path.display()))
}

fn fit(args: &FitArgs, kind: RelationKind) -> Result<()> {
    if !(args.sigma_lo < args.sigma_hi) {
        bail!(lexdiv::Error::Domain("need --sigma-lo < --sigma-hi".into()));
    }
    let beta = match (args.beta, &args.heaps_report) {
        (Some(b), _) => b,
        (None, Some(path)) => {
            let report: LawReport =
                serde_json::from_reader(open(path)?).with_context(|| format!("cannot parse {}", path.display()))?;
            report
                .heaps
                .map(|h| h.beta)
                .with_context(|| format!("{} has no Heaps fit", path.display()))?
        }
        (None, None) => bail!("one of --beta or --heaps-report is required"),
    };
    if !(beta > 0.0 && beta < 1.0) {
        bail!(lexdiv::Error::Domain(format!("beta = {beta} outside (0, 1)")));
    }
    let series = read_series(&args.series)?;
    let range = match (args.l_low, args.l_high) {
        (Some(l_low), Some(l_high)) => FitRange {
            l_low,
            l_high,
            fallback: false,
        },
        _ => select_fit_range(&series, args.sigma_lo, args.sigma_hi)?,
    };
    if range.fallback {
        eprintln!(
            "warning: no length has σ_H in ({}, {}); fitting the central half [{}, {}]",
            args.sigma_lo, args.sigma_hi, range.l_low, range.l_high
        );
    }
    let report = fit_relation(&series, kind, beta, range, args.estimator.into())?;
    emit_json(args.output.as_deref(), &report)
}

fn partial_entropy(args: &PartialArgs) -> Result<()> {
    let table = frequency_table(&load_corpus(&args.corpus)?)?;
    let curve = partial_entropy_curve(&table);
    emit(args.output.as_deref(), |w| {
        writeln!(w, "rank\tH_partial")?;
        for (r, h) in &curve {
            writeln!(w, "{r}\t{h}")?;
        }
        Ok(())
    })
}

#[derive(Serialize)]
struct RhReport {
    a1: f64,
    a2: f64,
    r_c: u64,
    vocab: u64,
    tokens: u64,
    r_h_empirical: f64,
    r_h_theoretical: f64,
    single_regime: bool,
}

fn rh(args: &RhArgs) -> Result<()> {
    let table = frequency_table(&load_corpus(&args.corpus)?)?;
    let fit: ZipfFit = match &args.zipf_report {
        Some(path) => {
            let report: LawReport =
                serde_json::from_reader(open(path)?).with_context(|| format!("cannot parse {}", path.display()))?;
            report
                .zipf
                .with_context(|| format!("{} has no Zipf fit", path.display()))?
        }
        None => fit_zipf(&table, &ZipfFitConfig::default())?,
    };
    let (v, l) = (table.len() as u64, table.total_tokens());
    let report = RhReport {
        a1: fit.a1,
        a2: fit.a2,
        r_c: fit.r_c,
        vocab: v,
        tokens: l,
        r_h_empirical: r_h_empirical(&table, fit.r_c)?,
        r_h_theoretical: r_h_theoretical(fit.a1, fit.a2, fit.r_c.min(v), v, l)?,
        single_regime: fit.single_regime,
    };
    emit_json(args.output.as_deref(), &report)
}

fn collapse(args: &CollapseArgs) -> Result<()> {
    let series = read_series(&args.series)?;
    if series.points.is_empty() {
        bail!(lexdiv::Error::EmptyInput("series has no rows"));
    }
    let points = collapse_h_max_with(&series, args.estimator.into())?;
    emit(args.output.as_deref(), |w| write_collapse_tsv(&points, w))
}

#[derive(Serialize)]
struct SynthReport {
    generator: GeneratorSpec,
    true_entropy: f64,
    observed_types: u64,
}

fn synth(args: &SynthArgs) -> Result<()> {
    let spec = args.spec()?;
    let corpus = gen_corpus(&spec)?;
    let header = CorpusHeader::new(CorpusOrigin::Synthetic { generator: spec }, &corpus);
    save_corpus(&args.output, &corpus, &header)?;
    if let Some(path) = &args.report {
        let report = SynthReport {
            generator: spec,
            true_entropy: true_entropy(&spec)?,
            observed_types: corpus.vocab_size() as u64,
        };
        output::write_atomic(path, |w| {
            serde_json::to_writer_pretty(&mut *w, &report)?;
            writeln!(w)?;
            Ok(())
        })?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!(lexdiv::Error::Domain("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    match &cli.command {
        Command::Tokenize(a) => tokenize(a),
        Command::Stats(a) => stats(a),
        Command::Zipf(a) => zipf(a),
        Command::Heaps(a) => heaps(a),
        Command::Sample(a) => sample(a),
        Command::FitHl(a) => fit(a, RelationKind::HOfL),
        Command::FitHttr(a) => fit(a, RelationKind::HOfTtr),
        Command::PartialEntropy(a) => partial_entropy(a),
        Command::Rh(a) => rh(a),
        Command::Collapse(a) => collapse(a),
        Command::Synth(a) => synth(a),
    }
}

fn error_kind(err: &anyhow::Error) -> &'static str {
    if let Some(e) = err.downcast_ref::<lexdiv::Error>() {
        return e.kind();
    }
    if err.downcast_ref::<std::io::Error>().is_some() {
        return "io";
    }
    if err.downcast_ref::<serde_json::Error>().is_some() {
        return "json";
    }
    "usage"
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = serde_json::json!({ "config": &cli, "version": env!("CARGO_PKG_VERSION") });
    eprintln!("{config}");
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let report = serde_json::json!({
                "error": error_kind(&err),
                "message": format!("{err:#}"),
            });
            eprintln!("{report}");
            ExitCode::FAILURE
        }
    }
}
