// SPDX-License-Identifier: MIT OR Apache-2.0

//! Command-line entry point.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
//! Every non-dry run writes a manifest (`run_manifest.json`) in its output
//! directory listing the resolved config, input hashes, and emitted files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::algebra::{compose, Binning, CoefficientSet};
use crate::bench::{self, BenchGenConfig, HashEmbedder};
use crate::bfi::{self, BfiConfig, EvalAssets};
use crate::config::{BackendKind, RunConfig, RunManifest};
use crate::error::{Error, Result};
use crate::extraction::{self, TraitArtifacts};
use crate::flow::{self, HistoryWindow, PredictorSource};
use crate::gateway::toy::{ToyCausalLm, ToyConfig};
use crate::gateway::ModelGateway;
use crate::judge::JudgeClient;
use crate::ocean::TraitPole;
use crate::report;
use crate::store::{self, Normalization, PersonaVector, VectorFile, VectorLabel};

#[derive(Parser)]
#[command(name = "persona", version, about = "Persona-vector steering toolkit")]
struct Cli {
    /// TOML config file overlaying the defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root random seed (overrides config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Log judge request/response bodies (redacted).
    #[arg(long, global = true)]
    debug_judge: bool,
    /// Validate and print the plan without external calls.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate artifacts, collect activations, and extract persona vectors.
    Extract(ExtractArgs),
    /// Judge trait expression per candidate layer at a fixed coefficient.
    SweepLayers(SweepLayersArgs),
    /// Judge trait expression across steering coefficients.
    SweepCoeff(SweepCoeffArgs),
    /// Cosine-similarity heatmap over a complete library.
    Ortho(OrthoArgs),
    /// Compose a steering vector from per-dimension coefficients.
    Compose(ComposeArgs),
    /// Inspect stored vectors.
    Vectors(VectorsArgs),
    /// Behavioral questionnaire harnesses.
    Bfi(BfiArgs),
    /// Causal-independence and cross-dimensional probes.
    Probe(ProbeArgs),
    /// Predict-then-steer session runner.
    Flow(FlowArgs),
    /// Benchmark generation, execution, and reporting.
    Bench(BenchArgs),
    /// Extraction-prompt vs scenario similarity check.
    Leakage(LeakageArgs),
}

#[derive(Args)]
struct ExtractArgs {
    /// Trait pole slug, or `all` for the full ten-pole library.
    #[arg(long = "trait")]
    trait_id: String,
    /// Capture layers, comma separated (defaults to the config grid).
    #[arg(long, value_delimiter = ',')]
    layers: Option<Vec<usize>>,
    /// Layer whose vectors form the primary library.
    #[arg(long, default_value_t = 20)]
    steer_layer: usize,
}

#[derive(Args)]
struct SweepLayersArgs {
    #[arg(long = "trait")]
    trait_id: String,
    /// Root holding `layer_<l>/` library directories (extract output).
    #[arg(long)]
    vectors_root: PathBuf,
    /// Artifacts JSON for the trait.
    #[arg(long)]
    artifacts: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    coefficient: f64,
}

#[derive(Args)]
struct SweepCoeffArgs {
    #[arg(long = "trait")]
    trait_id: String,
    #[arg(long)]
    library: PathBuf,
    #[arg(long)]
    artifacts: PathBuf,
    /// Steering coefficients (defaults to the config grid).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    alphas: Option<Vec<f64>>,
}

#[derive(Args)]
struct OrthoArgs {
    #[arg(long)]
    library: PathBuf,
}

#[derive(Args)]
struct ComposeArgs {
    /// Assignments like "E=1.0,A=-0.5".
    #[arg(long, allow_hyphen_values = true)]
    coeffs: String,
    #[arg(long)]
    library: PathBuf,
    #[arg(long)]
    tau: Option<f64>,
    /// unit | raw
    #[arg(long)]
    norm: Option<String>,
    /// continuous | bins9 | bins5 | ternary
    #[arg(long)]
    binning: Option<String>,
    /// Output .pvec path.
    #[arg(long)]
    out_file: PathBuf,
}

#[derive(Args)]
struct VectorsArgs {
    #[command(subcommand)]
    action: VectorsAction,
}

#[derive(Subcommand)]
enum VectorsAction {
    /// List a library directory's manifest entries.
    Ls {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Show one .pvec file's header and norm.
    Inspect {
        #[arg(long)]
        file: PathBuf,
    },
}

#[derive(Args)]
struct BfiArgs {
    #[command(subcommand)]
    action: BfiAction,
}

#[derive(Subcommand)]
enum BfiAction {
    /// Coefficient-vs-dimension-score linearity for one trait vector.
    Linearity {
        #[arg(long)]
        library: PathBuf,
        #[arg(long = "trait")]
        trait_id: String,
        /// Scenario items JSON (pre-transformed).
        #[arg(long)]
        scenarios: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        alphas: Option<Vec<f64>>,
    },
    /// Recipe-driven vector-arithmetic validation.
    Arithmetic {
        #[arg(long)]
        library: PathBuf,
        #[arg(long)]
        recipes: PathBuf,
        #[arg(long)]
        scenarios: PathBuf,
    },
    /// Transform questionnaire items into scenarios via the generator.
    Transform {
        /// Items JSON: [{id, pole, text}].
        #[arg(long)]
        items: PathBuf,
    },
}

#[derive(Args)]
struct ProbeArgs {
    #[command(subcommand)]
    action: ProbeAction,
}

#[derive(Subcommand)]
enum ProbeAction {
    /// Fixed-vs-swept multi-trait intervention grid.
    Grid {
        /// Library directories, one per layer.
        #[arg(long, value_delimiter = ',')]
        libraries: Vec<PathBuf>,
        /// e.g. "outgoing=1.0"
        #[arg(long)]
        fixed: String,
        /// e.g. "compassionate=-1,0,1,2"
        #[arg(long)]
        swept: String,
        /// Directory of per-trait artifacts JSON files.
        #[arg(long)]
        artifacts_dir: PathBuf,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
    },
    /// Primary/secondary cross-dimensional sweep plus composition check.
    Cross {
        #[arg(long)]
        library: PathBuf,
        #[arg(long)]
        primary: String,
        #[arg(long)]
        secondary: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        alphas: Option<Vec<f64>>,
        #[arg(long)]
        artifacts_dir: PathBuf,
    },
}

#[derive(Args)]
struct FlowArgs {
    #[command(subcommand)]
    action: FlowAction,
}

#[derive(Subcommand)]
enum FlowAction {
    /// Run predict-then-steer over benchmark sessions.
    Run {
        /// Session source: a bench directory (with index.json) or a JSON
        /// array of session records.
        #[arg(long)]
        sessions: PathBuf,
        #[arg(long)]
        library: PathBuf,
        #[arg(long)]
        tau: Option<f64>,
        /// current_only | last3 | last5 | all
        #[arg(long)]
        window: Option<String>,
        #[arg(long)]
        binning: Option<String>,
    },
}

#[derive(Args)]
struct BenchArgs {
    #[command(subcommand)]
    action: BenchAction,
}

#[derive(Subcommand)]
enum BenchAction {
    /// Generate personas, arcs, scenarios, and styles.
    Gen {
        #[arg(long)]
        personas: Option<usize>,
        #[arg(long)]
        turns: Option<usize>,
    },
    /// Run the steered-vs-vanilla protocol and judge pairwise.
    Run {
        #[arg(long)]
        sessions: PathBuf,
        #[arg(long)]
        library: PathBuf,
    },
    /// Re-render reports from a saved benchmark report JSON.
    Report {
        #[arg(long)]
        report: PathBuf,
    },
}

#[derive(Args)]
struct LeakageArgs {
    /// Extraction prompts: artifacts JSON or a JSON array of strings.
    #[arg(long)]
    prompts: PathBuf,
    /// Scenarios: bench directory or a JSON array of strings.
    #[arg(long)]
    scenarios: PathBuf,
}

/// Parse argv and run; returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own help/version output.
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
        }
    };

    let mut config = match cli.config.as_deref().map(RunConfig::from_file) {
        None => RunConfig::defaults(),
        Some(Ok(c)) => c,
        Some(Err(e)) => {
            eprintln!("config error: {e}");
            return 2;
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.paths.out_dir = out.clone();
    }
    if let Err(e) = config.validate() {
        eprintln!("config error: {e}");
        return 2;
    }

    let argv_strings: Vec<String> = argv
        .iter()
        .map(|s| s.to_string_lossy().into_owned())
        .collect();
    let ctx = CommandContext {
        config,
        argv: argv_strings,
        debug_judge: cli.debug_judge,
        dry_run: cli.dry_run,
    };
    match run_command(&cli.command, &ctx) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

struct CommandContext {
    config: RunConfig,
    argv: Vec<String>,
    #[cfg_attr(not(feature = "http"), allow(dead_code))]
    debug_judge: bool,
    dry_run: bool,
}

impl CommandContext {
    fn out_dir(&self) -> &Path {
        &self.config.paths.out_dir
    }

    fn gateway(&self) -> Result<Box<dyn ModelGateway>> {
        match self.config.model.backend {
            BackendKind::Local => Ok(Box::new(ToyCausalLm::new(ToyConfig {
                hidden_dim: self.config.model.hidden_dim,
                num_layers: self.config.model.num_layers,
                vocab_size: self.config.model.vocab_size,
                param_seed: self.config.model.param_seed,
                ..ToyConfig::default()
            }))),
            BackendKind::Remote => self.remote_gateway(),
        }
    }

    #[cfg(feature = "http")]
    fn remote_gateway(&self) -> Result<Box<dyn ModelGateway>> {
        let m = &self.config.model;
        Ok(Box::new(crate::gateway::remote::RemoteGateway::from_env(
            crate::gateway::remote::RemoteConfig {
                base_url: m.base_url.clone(),
                model_id: m.model_id.clone(),
                hidden_dim: m.hidden_dim,
                num_layers: m.num_layers,
                tokenizer_id: m.model_id.clone(),
            },
        )?))
    }

    #[cfg(not(feature = "http"))]
    fn remote_gateway(&self) -> Result<Box<dyn ModelGateway>> {
        Err(Error::CapabilityUnsupported(
            "remote backend (built without the `http` feature)".into(),
        ))
    }

    #[cfg(feature = "http")]
    fn judge(&self) -> Result<JudgeClient> {
        JudgeClient::from_env(self.config.judge_config(None), self.debug_judge)
    }

    #[cfg(not(feature = "http"))]
    fn judge(&self) -> Result<JudgeClient> {
        Err(Error::CapabilityUnsupported(
            "judge client (built without the `http` feature)".into(),
        ))
    }

    fn manifest(&self, command: &str) -> RunManifest {
        RunManifest::begin(command, &self.argv, &self.config)
    }

    fn plan(&self, command: &str, steps: &[String]) {
        println!("dry run: {command}");
        println!("resolved config:");
        match toml::to_string_pretty(&self.config) {
            Ok(text) => {
                for line in text.lines() {
                    println!("  {line}");
                }
            }
            Err(_) => println!("  (unprintable)"),
        }
        println!("plan:");
        for step in steps {
            println!("  - {step}");
        }
    }
}

fn parse_pole(text: &str) -> Result<TraitPole> {
    text.parse()
}

fn parse_binning(text: &str) -> Result<Binning> {
    match text.to_ascii_lowercase().as_str() {
        "continuous" => Ok(Binning::Continuous),
        "bins9" => Ok(Binning::Bins9),
        "bins5" => Ok(Binning::Bins5),
        "ternary" => Ok(Binning::Ternary),
        other => Err(Error::Config(format!("unknown binning `{other}`"))),
    }
}

fn parse_norm(text: &str) -> Result<Normalization> {
    match text.to_ascii_lowercase().as_str() {
        "unit" => Ok(Normalization::Unit),
        "raw" => Ok(Normalization::Raw),
        other => Err(Error::Config(format!("unknown normalization `{other}`"))),
    }
}

fn parse_window(text: &str) -> Result<HistoryWindow> {
    match text.to_ascii_lowercase().replace('-', "_").as_str() {
        "current" | "current_only" => Ok(HistoryWindow::CurrentOnly),
        "last3" => Ok(HistoryWindow::Last3),
        "last5" => Ok(HistoryWindow::Last5),
        "all" => Ok(HistoryWindow::All),
        other => Err(Error::Config(format!("unknown history window `{other}`"))),
    }
}

/// "pole=v1,v2,..." used by the probe commands.
fn parse_pole_alphas(text: &str) -> Result<(TraitPole, Vec<f64>)> {
    let (pole, values) = text
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("expected `<pole>=<values>`, got `{text}`")))?;
    let pole = parse_pole(pole.trim())?;
    let values = values
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad value `{v}`")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if values.is_empty() {
        return Err(Error::Config("no values given".into()));
    }
    Ok((pole, values))
}

fn load_artifacts(path: &Path) -> Result<TraitArtifacts> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let artifacts: TraitArtifacts = serde_json::from_slice(&bytes)?;
    artifacts.validate()?;
    Ok(artifacts)
}

fn load_assets_for(pole: TraitPole, artifacts_dir: &Path) -> Result<EvalAssets> {
    let path = artifacts_dir.join(format!("{}.json", pole.slug()));
    Ok(EvalAssets::from_artifacts(&load_artifacts(&path)?))
}

fn load_scenarios(path: &Path) -> Result<Vec<bfi::ScenarioItem>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(serde_json::from_slice(&bytes)?)
}

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
    }
    std::fs::write(path, serde_json::to_string_pretty(value)?)
        .map_err(|e| Error::io(path.display().to_string(), e))
}

fn run_command(command: &Command, ctx: &CommandContext) -> Result<()> {
    match command {
        Command::Extract(args) => cmd_extract(args, ctx),
        Command::SweepLayers(args) => cmd_sweep_layers(args, ctx),
        Command::SweepCoeff(args) => cmd_sweep_coeff(args, ctx),
        Command::Ortho(args) => cmd_ortho(args, ctx),
        Command::Compose(args) => cmd_compose(args, ctx),
        Command::Vectors(args) => cmd_vectors(args, ctx),
        Command::Bfi(args) => cmd_bfi(args, ctx),
        Command::Probe(args) => cmd_probe(args, ctx),
        Command::Flow(args) => cmd_flow(args, ctx),
        Command::Bench(args) => cmd_bench(args, ctx),
        Command::Leakage(args) => cmd_leakage(args, ctx),
    }
}

fn resolve_traits(text: &str) -> Result<Vec<TraitPole>> {
    if text.eq_ignore_ascii_case("all") {
        Ok(TraitPole::ALL.to_vec())
    } else {
        Ok(vec![parse_pole(text)?])
    }
}

fn cmd_extract(args: &ExtractArgs, ctx: &CommandContext) -> Result<()> {
    let traits = resolve_traits(&args.trait_id)?;
    let layers = args
        .layers
        .clone()
        .unwrap_or_else(|| ctx.config.extraction.layers.clone());
    if ctx.dry_run {
        ctx.plan(
            "extract",
            &[
                format!("generate artifacts for {} trait(s)", traits.len()),
                format!("collect contrastive activations at layers {layers:?}"),
                format!("compute vectors; library layer {}", args.steer_layer),
                format!("write artifacts + per-layer libraries under {}", ctx.out_dir().display()),
            ],
        );
        return Ok(());
    }
    let mut manifest = ctx.manifest("extract");
    let mut gateway = ctx.gateway()?;
    let generator = ctx.judge()?;
    let extraction_config = ctx.config.extraction_config();
    let descriptor = gateway.describe()?;
    let mut per_layer: BTreeMap<usize, Vec<PersonaVector>> = BTreeMap::new();
    for pole in &traits {
        let artifacts = extraction::generate_trait_artifacts(
            &generator,
            *pole,
            pole.description(),
            &extraction_config,
        )?;
        let artifacts_path = ctx.out_dir().join(format!("artifacts/{}.json", pole.slug()));
        write_json(&artifacts, &artifacts_path)?;
        manifest.record_output(&artifacts_path);
        let batch = extraction::collect_contrastive_activations(
            &mut gateway,
            &artifacts,
            &layers,
            &extraction_config,
        )?;
        for &layer in &layers {
            let vector =
                extraction::compute_persona_vector(&batch, layer, extraction_config.mean_mode)?;
            per_layer.entry(layer).or_default().push(vector);
        }
        println!("extracted `{}` at {} layer(s)", pole.slug(), layers.len());
    }
    for (layer, vectors) in per_layer {
        let mut library = store::VectorLibrary::new(descriptor.model_id.clone(), layer);
        for vector in vectors {
            library.insert(vector)?;
        }
        let dir = ctx.out_dir().join(format!("vectors/layer_{layer}"));
        let manifest_path = store::save_library(&library, &dir)?;
        manifest.record_output(&manifest_path);
        if layer == args.steer_layer {
            println!("library at steering layer {} -> {}", layer, dir.display());
        }
    }
    let path = manifest.finish(ctx.out_dir())?;
    println!("manifest: {}", path.display());
    Ok(())
}

fn cmd_sweep_layers(args: &SweepLayersArgs, ctx: &CommandContext) -> Result<()> {
    let pole = parse_pole(&args.trait_id)?;
    if ctx.dry_run {
        ctx.plan(
            "sweep-layers",
            &[format!(
                "steer `{}` validation questions per layer under {}",
                pole.slug(),
                args.vectors_root.display()
            )],
        );
        return Ok(());
    }
    let mut manifest = ctx.manifest("sweep-layers");
    manifest.record_input(&args.artifacts)?;
    let artifacts = load_artifacts(&args.artifacts)?;
    let mut vectors = BTreeMap::new();
    for entry in std::fs::read_dir(&args.vectors_root)
        .map_err(|e| Error::io(args.vectors_root.display().to_string(), e))?
    {
        let entry = entry.map_err(|e| Error::io(args.vectors_root.display().to_string(), e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(layer) = name.strip_prefix("layer_").and_then(|l| l.parse::<usize>().ok()) {
            let library = store::load_library(&entry.path())?;
            if let Some(v) = library.get(pole) {
                vectors.insert(layer, v.clone());
            }
        }
    }
    let mut gateway = ctx.gateway()?;
    let judge = ctx.judge()?;
    let sweep = extraction::sweep_layers(
        &mut gateway,
        &judge,
        &vectors,
        &artifacts,
        args.coefficient,
        &ctx.config.extraction_config(),
    )?;
    let rendered = report::render_sweep(&sweep, ctx.out_dir(), &format!("sweep_layers_{}", pole.slug()))?;
    manifest.record_output(&rendered.csv);
    manifest.record_output(&rendered.image);
    let path = manifest.finish(ctx.out_dir())?;
    println!("sweep written: {} ({} points)", rendered.csv.display(), sweep.points.len());
    println!("manifest: {}", path.display());
    Ok(())
}

fn cmd_sweep_coeff(args: &SweepCoeffArgs, ctx: &CommandContext) -> Result<()> {
    let pole = parse_pole(&args.trait_id)?;
    let alphas = args
        .alphas
        .clone()
        .unwrap_or_else(|| ctx.config.extraction.alphas.clone());
    if ctx.dry_run {
        ctx.plan(
            "sweep-coeff",
            &[format!("steer `{}` at alphas {alphas:?}", pole.slug())],
        );
        return Ok(());
    }
    let mut manifest = ctx.manifest("sweep-coeff");
    manifest.record_input(&args.artifacts)?;
    let artifacts = load_artifacts(&args.artifacts)?;
    let library = store::load_library(&args.library)?;
    let vector = library.require(pole)?;
    let mut gateway = ctx.gateway()?;
    store::check_compatibility(&library, &gateway.describe()?)
        .map_err(|m| store::compatibility_error(&m))?;
    let judge = ctx.judge()?;
    let sweep = extraction::sweep_coefficients(
        &mut gateway,
        &judge,
        vector,
        &artifacts,
        &alphas,
        &ctx.config.extraction_config(),
    )?;
    let rendered =
        report::render_sweep(&sweep, ctx.out_dir(), &format!("sweep_coeff_{}", pole.slug()))?;
    manifest.record_output(&rendered.csv);
    manifest.record_output(&rendered.image);
    let path = manifest.finish(ctx.out_dir())?;
    println!("sweep written: {}", rendered.csv.display());
    println!("manifest: {}", path.display());
    Ok(())
}

fn cmd_ortho(args: &OrthoArgs, ctx: &CommandContext) -> Result<()> {
    if ctx.dry_run {
        ctx.plan(
            "ortho",
            &[format!("cosine heatmap for {}", args.library.display())],
        );
        return Ok(());
    }
    let mut manifest = ctx.manifest("ortho");
    manifest.record_input(&args.library.join(store::MANIFEST_FILE))?;
    let library = store::load_library(&args.library)?;
    let matrix = extraction::cosine_matrix(&library)?;
    let rendered = report::render_cosine(&matrix, ctx.out_dir(), "cosine")?;
    manifest.record_output(&rendered.csv);
    manifest.record_output(&rendered.image);
    let path = manifest.finish(ctx.out_dir())?;
    println!("heatmap: {}", rendered.image.display());
    println!("csv: {}", rendered.csv.display());
    println!("manifest: {}", path.display());
    Ok(())
}

fn cmd_compose(args: &ComposeArgs, ctx: &CommandContext) -> Result<()> {
    let coeffs = CoefficientSet::parse_assignments(&args.coeffs)?;
    let mut compose_config = ctx.config.compose;
    if let Some(tau) = args.tau {
        compose_config.tau = tau;
    }
    if let Some(norm) = &args.norm {
        compose_config.normalization = parse_norm(norm)?;
    }
    if let Some(binning) = &args.binning {
        compose_config.binning = parse_binning(binning)?;
    }
    compose_config.validate().map_err(|e| Error::Config(e.to_string()))?;
    if ctx.dry_run {
        ctx.plan(
            "compose",
            &[format!("compose {coeffs} -> {}", args.out_file.display())],
        );
        return Ok(());
    }
    let mut manifest = ctx.manifest("compose");
    let library = store::load_library(&args.library)?;
    let composite = compose(coeffs, &library, &compose_config)?;
    store::save_vector_file(
        &args.out_file,
        &VectorFile {
            label: VectorLabel::Composite,
            layer: composite.layer,
            model_id: library.model_id.clone(),
            normalization: Normalization::Raw,
            values: composite.vector.clone(),
        },
    )?;
    manifest.record_output(&args.out_file);
    let path = manifest.finish(ctx.out_dir())?;
    println!("composite: {}", args.out_file.display());
    for (pole, weight) in &composite.contributions {
        println!("  {:+.3} * {}", weight, pole.slug());
    }
    println!("manifest: {}", path.display());
    Ok(())
}

fn cmd_vectors(args: &VectorsArgs, ctx: &CommandContext) -> Result<()> {
    match &args.action {
        VectorsAction::Ls { dir } => {
            if ctx.dry_run {
                ctx.plan("vectors ls", &[format!("list {}", dir.display())]);
                return Ok(());
            }
            for (trait_id, file, sha) in store::list_library(dir)? {
                println!("{trait_id:<16} {file:<24} {}", &sha[..12]);
            }
            Ok(())
        }
        VectorsAction::Inspect { file } => {
            if ctx.dry_run {
                ctx.plan("vectors inspect", &[format!("inspect {}", file.display())]);
                return Ok(());
            }
            let vf = store::load_vector_file(file)?;
            let norm = vf
                .values
                .iter()
                .map(|&v| f64::from(v) * f64::from(v))
                .sum::<f64>()
                .sqrt();
            println!("trait: {}", vf.label.as_str());
            println!("layer: {}", vf.layer);
            println!("dim: {}", vf.values.len());
            println!("model: {}", vf.model_id);
            println!("normalization: {}", vf.normalization.as_str());
            println!("l2 norm: {norm:.6}");
            Ok(())
        }
    }
}

fn bfi_config(ctx: &CommandContext) -> BfiConfig {
    BfiConfig {
        base_seed: ctx.config.seed,
        ..BfiConfig::default()
    }
}

fn cmd_bfi(args: &BfiArgs, ctx: &CommandContext) -> Result<()> {
    match &args.action {
        BfiAction::Transform { items } => {
            if ctx.dry_run {
                ctx.plan("bfi transform", &[format!("transform items from {}", items.display())]);
                return Ok(());
            }
            let mut manifest = ctx.manifest("bfi-transform");
            manifest.record_input(items)?;
            let bytes = std::fs::read(items).map_err(|e| Error::io(items.display().to_string(), e))?;
            let items: Vec<bfi::BfiItem> = serde_json::from_slice(&bytes)?;
            let generator = ctx.judge()?;
            let scenarios = bfi::transform_items(&generator, &items, &bfi_config(ctx))?;
            let out = ctx.out_dir().join("scenarios.json");
            write_json(&scenarios, &out)?;
            manifest.record_output(&out);
            let path = manifest.finish(ctx.out_dir())?;
            println!("{} scenarios -> {}", scenarios.len(), out.display());
            println!("manifest: {}", path.display());
            Ok(())
        }
        BfiAction::Linearity {
            library,
            trait_id,
            scenarios,
            alphas,
        } => {
            let pole = parse_pole(trait_id)?;
            let alphas = alphas
                .clone()
                .unwrap_or_else(|| vec![-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0]);
            if ctx.dry_run {
                ctx.plan(
                    "bfi linearity",
                    &[format!("administer `{}` at alphas {alphas:?}", pole.slug())],
                );
                return Ok(());
            }
            let mut manifest = ctx.manifest("bfi-linearity");
            manifest.record_input(scenarios)?;
            let scenario_items = load_scenarios(scenarios)?;
            let library = store::load_library(library)?;
            let vector = library.require(pole)?.clone();
            let mut gateway = ctx.gateway()?;
            let judge = ctx.judge()?;
            let config = bfi_config(ctx);
            let mut points = Vec::new();
            for &alpha in &alphas {
                let composite = crate::algebra::CompositeVector {
                    vector: crate::algebra::scale(&vector.vector, alpha),
                    contributions: vec![(pole, alpha)],
                    layer: library.layer,
                };
                let outcome =
                    bfi::administer(&mut gateway, &judge, &scenario_items, Some(&composite), &config)?;
                let scores = bfi::dimension_scores(&outcome.records)?;
                if let Some(score) = scores.get(pole.dimension()) {
                    points.push((alpha, score));
                }
            }
            let fit = bfi::fit_linear(&points)?;
            let mut fits = BTreeMap::new();
            fits.insert(
                format!("{}/{}", pole.slug(), pole.dimension().code()),
                fit.clone(),
            );
            let rendered = report::render_linearity(&fits, ctx.out_dir(), "linearity")?
                .expect("one fit present");
            manifest.record_output(&rendered.csv);
            manifest.record_output(&rendered.image);
            let path = manifest.finish(ctx.out_dir())?;
            println!(
                "slope {:.4}, r^2 {:.4} over {} points",
                fit.slope,
                fit.r_squared,
                fit.points.len()
            );
            println!("manifest: {}", path.display());
            Ok(())
        }
        BfiAction::Arithmetic {
            library,
            recipes,
            scenarios,
        } => {
            if ctx.dry_run {
                ctx.plan(
                    "bfi arithmetic",
                    &[format!("validate recipes from {}", recipes.display())],
                );
                return Ok(());
            }
            let mut manifest = ctx.manifest("bfi-arithmetic");
            manifest.record_input(recipes)?;
            manifest.record_input(scenarios)?;
            let recipe_list = bfi::load_recipes(recipes)?;
            let scenario_items = load_scenarios(scenarios)?;
            let library = store::load_library(library)?;
            let mut gateway = ctx.gateway()?;
            let judge = ctx.judge()?;
            let arithmetic = bfi::arithmetic_validation(
                &mut gateway,
                &judge,
                &library,
                &recipe_list,
                &scenario_items,
                &bfi_config(ctx),
            )?;
            match report::render_arithmetic(&arithmetic, ctx.out_dir(), "arithmetic")? {
                Some(rendered) => {
                    manifest.record_output(&rendered.csv);
                    manifest.record_output(&rendered.image);
                    println!("report: {}", rendered.csv.display());
                }
                None => println!("nothing to render: recipes carried no expectations"),
            }
            let report_json = ctx.out_dir().join("arithmetic.json");
            write_json(&arithmetic, &report_json)?;
            manifest.record_output(&report_json);
            let path = manifest.finish(ctx.out_dir())?;
            println!("manifest: {}", path.display());
            Ok(())
        }
    }
}

fn cmd_probe(args: &ProbeArgs, ctx: &CommandContext) -> Result<()> {
    match &args.action {
        ProbeAction::Grid {
            libraries,
            fixed,
            swept,
            artifacts_dir,
            repeats,
        } => {
            let (fixed_pole, fixed_values) = parse_pole_alphas(fixed)?;
            let fixed_alpha = *fixed_values.first().unwrap();
            let (swept_pole, swept_alphas) = parse_pole_alphas(swept)?;
            if ctx.dry_run {
                ctx.plan(
                    "probe grid",
                    &[format!(
                        "fixed {}={fixed_alpha}, swept {}={swept_alphas:?} over {} libraries",
                        fixed_pole.slug(),
                        swept_pole.slug(),
                        libraries.len()
                    )],
                );
                return Ok(());
            }
            let mut manifest = ctx.manifest("probe-grid");
            let libs = libraries
                .iter()
                .map(|dir| store::load_library(dir))
                .collect::<Result<Vec<_>>>()?;
            let fixed_assets = load_assets_for(fixed_pole, artifacts_dir)?;
            let swept_assets = load_assets_for(swept_pole, artifacts_dir)?;
            let mut gateway = ctx.gateway()?;
            let judge = ctx.judge()?;
            let config = BfiConfig {
                repeats: *repeats,
                ..bfi_config(ctx)
            };
            let grid = bfi::causal_independence_grid(
                &mut gateway,
                &judge,
                &libs,
                (fixed_pole, fixed_alpha),
                (swept_pole, &swept_alphas),
                &fixed_assets,
                &swept_assets,
                &config,
            )?;
            let csv = report::write_grid_csv(&grid, ctx.out_dir(), "grid")?;
            manifest.record_output(&csv);
            let path = manifest.finish(ctx.out_dir())?;
            println!("grid: {} ({} rows)", csv.display(), grid.rows.len());
            println!("manifest: {}", path.display());
            Ok(())
        }
        ProbeAction::Cross {
            library,
            primary,
            secondary,
            alphas,
            artifacts_dir,
        } => {
            let primary = parse_pole(primary)?;
            let secondary = parse_pole(secondary)?;
            let alphas = alphas.clone().unwrap_or_else(|| vec![-1.0, 0.0, 1.0, 2.0]);
            if ctx.dry_run {
                ctx.plan(
                    "probe cross",
                    &[format!(
                        "sweep {} while watching {}",
                        primary.slug(),
                        secondary.slug()
                    )],
                );
                return Ok(());
            }
            let mut manifest = ctx.manifest("probe-cross");
            let library = store::load_library(library)?;
            let primary_assets = load_assets_for(primary, artifacts_dir)?;
            let secondary_assets = load_assets_for(secondary, artifacts_dir)?;
            let mut gateway = ctx.gateway()?;
            let judge = ctx.judge()?;
            let probe = bfi::cross_dimension_probe(
                &mut gateway,
                &judge,
                &library,
                primary,
                secondary,
                &alphas,
                &primary_assets,
                &secondary_assets,
                &bfi_config(ctx),
            )?;
            let csv = report::write_cross_csv(&probe, ctx.out_dir(), "cross")?;
            manifest.record_output(&csv);
            let path = manifest.finish(ctx.out_dir())?;
            println!(
                "composition expected {:.3} vs observed {:.3} ({})",
                probe.composition.combined_expected,
                probe.composition.combined_observed,
                if probe.composition.met { "met" } else { "unmet" }
            );
            println!("csv: {}", csv.display());
            println!("manifest: {}", path.display());
            Ok(())
        }
    }
}

fn load_sessions_arg(path: &Path) -> Result<Vec<bench::SessionRecord>> {
    if path.is_dir() {
        let (_, sessions) = bench::load_sessions(path)?;
        Ok(sessions)
    } else {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let sessions: Vec<bench::SessionRecord> = serde_json::from_slice(&bytes)?;
        for session in &sessions {
            session.validate()?;
        }
        Ok(sessions)
    }
}

fn cmd_flow(args: &FlowArgs, ctx: &CommandContext) -> Result<()> {
    let FlowAction::Run {
        sessions,
        library,
        tau,
        window,
        binning,
    } = &args.action;
    let mut flow_config = ctx.config.flow_config();
    if let Some(tau) = tau {
        flow_config.compose.tau = *tau;
    }
    if let Some(window) = window {
        flow_config.history_window = parse_window(window)?;
    }
    if let Some(binning) = binning {
        flow_config.compose.binning = parse_binning(binning)?;
    }
    flow_config.compose.validate()?;
    if ctx.dry_run {
        ctx.plan(
            "flow run",
            &[format!(
                "run predict-then-steer over sessions from {}",
                sessions.display()
            )],
        );
        return Ok(());
    }
    let mut manifest = ctx.manifest("flow-run");
    let session_records = load_sessions_arg(sessions)?;
    let library = store::load_library(library)?;
    let mut gateway = ctx.gateway()?;
    store::check_compatibility(&library, &gateway.describe()?)
        .map_err(|m| store::compatibility_error(&m))?;

    #[derive(serde::Serialize)]
    struct Transcript<'a> {
        persona: &'a str,
        role: &'a str,
        turns: Vec<flow::FlowTurnResult>,
    }
    let mut transcripts = Vec::new();
    for session in &session_records {
        let results = flow::run_session(
            &mut gateway,
            &PredictorSource::SelfModel,
            &library,
            &flow_config,
            session,
        )?;
        transcripts.push(Transcript {
            persona: &session.persona.name,
            role: &session.persona.role,
            turns: results,
        });
    }
    let out = ctx.out_dir().join("transcripts.json");
    write_json(&transcripts, &out)?;
    manifest.record_output(&out);
    let path = manifest.finish(ctx.out_dir())?;
    println!(
        "{} sessions -> {}",
        transcripts.len(),
        out.display()
    );
    println!("manifest: {}", path.display());
    Ok(())
}

fn cmd_bench(args: &BenchArgs, ctx: &CommandContext) -> Result<()> {
    match &args.action {
        BenchAction::Gen { personas, turns } => {
            let n = personas.unwrap_or(ctx.config.bench.personas);
            let turns = turns.unwrap_or(ctx.config.bench.turns);
            if ctx.dry_run {
                ctx.plan(
                    "bench gen",
                    &[format!("generate {n} personas x {turns} turns")],
                );
                return Ok(());
            }
            let mut manifest = ctx.manifest("bench-gen");
            let generator = ctx.judge()?;
            let gen_config = BenchGenConfig {
                retries: ctx.config.bench.retries,
                ..BenchGenConfig::default()
            };
            let personas = bench::gen_personas(&generator, n, &[], &gen_config)?;
            let mut sessions = Vec::with_capacity(personas.len());
            for persona in &personas {
                sessions.push(bench::gen_session(&generator, persona, turns, &gen_config)?);
            }
            let dir = ctx.out_dir().join("bench");
            let index = bench::save_sessions(
                &sessions,
                &ctx.config.judge.model,
                ctx.config.seed,
                &dir,
            )?;
            manifest.record_output(&index);
            let path = manifest.finish(ctx.out_dir())?;
            println!("{} sessions -> {}", sessions.len(), dir.display());
            println!("manifest: {}", path.display());
            Ok(())
        }
        BenchAction::Run { sessions, library } => {
            if ctx.dry_run {
                ctx.plan(
                    "bench run",
                    &[format!("run benchmark sessions from {}", sessions.display())],
                );
                return Ok(());
            }
            let mut manifest = ctx.manifest("bench-run");
            let session_records = load_sessions_arg(sessions)?;
            let library = store::load_library(library)?;
            let mut gateway = ctx.gateway()?;
            store::check_compatibility(&library, &gateway.describe()?)
                .map_err(|m| store::compatibility_error(&m))?;
            let judge = ctx.judge()?;
            let report_data = bench::run_benchmark(
                &mut gateway,
                &PredictorSource::SelfModel,
                &library,
                &ctx.config.flow_config(),
                &session_records,
                &judge,
            )?;
            let json = ctx.out_dir().join("benchmark_report.json");
            write_json(&report_data, &json)?;
            manifest.record_output(&json);
            let rendered = report::render_win_rates(&report_data.rates, ctx.out_dir(), "win_rates")?;
            manifest.record_output(&rendered.csv);
            manifest.record_output(&rendered.image);
            let timing = report::write_timing_csv(&report_data, ctx.out_dir(), "timing")?;
            manifest.record_output(&timing);
            let path = manifest.finish(ctx.out_dir())?;
            for criterion in crate::judge::Criterion::ALL {
                let m = report_data.rates.get(criterion);
                match m.rate {
                    Some(rate) => println!("{:<8} {:.1}%", criterion.short_name(), rate * 100.0),
                    None => println!("{:<8} (no judged comparisons)", criterion.short_name()),
                }
            }
            println!("manifest: {}", path.display());
            Ok(())
        }
        BenchAction::Report { report: report_path } => {
            if ctx.dry_run {
                ctx.plan(
                    "bench report",
                    &[format!("render reports from {}", report_path.display())],
                );
                return Ok(());
            }
            let mut manifest = ctx.manifest("bench-report");
            manifest.record_input(report_path)?;
            let bytes = std::fs::read(report_path)
                .map_err(|e| Error::io(report_path.display().to_string(), e))?;
            let report_data: bench::BenchmarkReport = serde_json::from_slice(&bytes)?;
            let rendered = report::render_win_rates(&report_data.rates, ctx.out_dir(), "win_rates")?;
            manifest.record_output(&rendered.csv);
            manifest.record_output(&rendered.image);
            let timing = report::write_timing_csv(&report_data, ctx.out_dir(), "timing")?;
            manifest.record_output(&timing);
            let path = manifest.finish(ctx.out_dir())?;
            println!("reports under {}", ctx.out_dir().display());
            println!("manifest: {}", path.display());
            Ok(())
        }
    }
}

fn load_text_list(path: &Path) -> Result<Vec<String>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    if let Ok(strings) = serde_json::from_slice::<Vec<String>>(&bytes) {
        return Ok(strings);
    }
    if let Ok(artifacts) = serde_json::from_slice::<TraitArtifacts>(&bytes) {
        return Ok(artifacts.questions);
    }
    Err(Error::Serde(format!(
        "{}: expected a JSON string array or an artifacts file",
        path.display()
    )))
}

fn cmd_leakage(args: &LeakageArgs, ctx: &CommandContext) -> Result<()> {
    if ctx.dry_run {
        ctx.plan(
            "leakage",
            &[format!(
                "compare {} against {}",
                args.prompts.display(),
                args.scenarios.display()
            )],
        );
        return Ok(());
    }
    let mut manifest = ctx.manifest("leakage");
    let prompts = load_text_list(&args.prompts)?;
    let scenarios = if args.scenarios.is_dir() {
        let (_, sessions) = bench::load_sessions(&args.scenarios)?;
        sessions
            .iter()
            .flat_map(|s| s.turns.iter().map(|t| t.model_input.clone()))
            .collect()
    } else {
        load_text_list(&args.scenarios)?
    };
    let embedder = HashEmbedder::default();
    let report_data = bench::leakage_check(&prompts, &scenarios, &embedder)?;
    let out = ctx.out_dir().join("leakage.json");
    write_json(&report_data, &out)?;
    manifest.record_output(&out);
    let path = manifest.finish(ctx.out_dir())?;
    println!(
        "{} pairs: mean {:.4}, max {:.4} ({})",
        report_data.n_pairs,
        report_data.mean_similarity,
        report_data.max_similarity,
        report_data.embedder_id
    );
    println!("manifest: {}", path.display());
    Ok(())
}
