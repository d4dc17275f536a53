//! `pathalign` command-line entry point.

mod manifest;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pathalign::distributional::{build_word_scores, count_contexts, DistributionalMeasure, WindowSpec};
use pathalign::evaluation::{
    cross_validate, default_c_grid, kfold_split, learning_curve, paired_ttest, parameter_sweep, stratified_kfold_split,
    write_report, FoldPlan, Metrics,
};
use pathalign::kernels::{
    compute_gram, cross_kernel, min_eigenvalue, normalize_gram, GapWeightedKernel, LaKernel, PathKernel,
    ShortestPathKernel, SubsequenceParams,
};
use pathalign::sequence::parse_instances;
use pathalign::substitution::random_matrix;
use pathalign::svm::{export_precomputed, train, ClassWeighting, DecisionFunction, TrainConfig};
use pathalign::taxonomy::{taxonomy_word_scores, Taxonomy, TaxonomyMeasure};
use pathalign::{Dataset, Gram, Label, Params, Subst};

use crate::manifest::Manifest;

#[derive(Parser)]
#[command(name = "pathalign", version, about = "Alignment kernels over dependency paths")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a substitution matrix over the words of an instance file.
    BuildSubst(BuildSubstArgs),
    /// Compute a Gram matrix over an instance file.
    Gram(GramArgs),
    /// k-fold cross-validation on a Gram matrix.
    Cv(CvArgs),
    /// Cross-validate the LA kernel over a grid of beta and gap costs.
    Sweep(SweepArgs),
    /// Learning curve on a fixed test set.
    Curve(CurveArgs),
    /// Train an SVM on a Gram matrix.
    Train(TrainArgs),
    /// Classify new instances with a trained model.
    Predict(PredictArgs),
    /// Export a Gram matrix for external SVM tools.
    Export(ExportArgs),
    /// Report the smallest eigenvalue of a Gram matrix.
    PsdCheck(PsdArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Source {
    Distributional,
    Taxonomy,
    Random,
}

#[derive(Args)]
struct BuildSubstArgs {
    #[arg(long, value_enum)]
    source: Source,
    /// Instance file whose words make up the vocabulary.
    #[arg(long)]
    instances: PathBuf,
    /// dice | cosine | l2 (distributional); wup | lch | res | jcn | lin (taxonomy).
    #[arg(long)]
    measure: Option<String>,
    /// Plain-text corpus, one sentence per line.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Context window radius in tokens.
    #[arg(long, default_value_t = 2)]
    window: usize,
    /// Taxonomy file: `concept <TAB> parent|- <TAB> count`.
    #[arg(long)]
    taxonomy: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KernelKind {
    La,
    ShortestPath,
    GapWeighted,
}

impl KernelKind {
    fn name(self) -> &'static str {
        match self {
            KernelKind::La => "la",
            KernelKind::ShortestPath => "shortest-path",
            KernelKind::GapWeighted => "gap-weighted",
        }
    }
}

#[derive(Args)]
struct KernelArgs {
    #[arg(long, value_enum, default_value = "la")]
    kernel: KernelKind,
    /// Substitution matrix (required for `la`).
    #[arg(long)]
    subst: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 1.2)]
    gap_open: f64,
    #[arg(long, default_value_t = 0.2)]
    gap_extend: f64,
    /// Subsequence length for `gap-weighted`.
    #[arg(long, default_value_t = 4)]
    length: usize,
    /// Gap decay for `gap-weighted`.
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    /// Cosine-normalize the kernel.
    #[arg(long)]
    normalize: bool,
}

#[derive(Args)]
struct GramArgs {
    #[arg(long)]
    instances: PathBuf,
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Weighting {
    None,
    /// C_i = C / P(class of i).
    Inverse,
}

impl From<Weighting> for ClassWeighting {
    fn from(w: Weighting) -> Self {
        match w {
            Weighting::None => ClassWeighting::None,
            Weighting::Inverse => ClassWeighting::InverseClassProbability,
        }
    }
}

#[derive(Args)]
struct SvmArgs {
    /// Comma-separated C values (default 2^-6, 2^-4, ..., 2^12).
    #[arg(long)]
    c_grid: Option<String>,
    #[arg(long, value_enum, default_value = "none")]
    weighting: Weighting,
    /// KKT tolerance of the solver.
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
}

#[derive(Args)]
struct FoldArgs {
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Keep class proportions equal across folds.
    #[arg(long)]
    stratified: bool,
}

#[derive(Args)]
struct CvArgs {
    #[arg(long)]
    gram: PathBuf,
    /// Instance file supplying the labels.
    #[arg(long)]
    instances: PathBuf,
    /// Second Gram over the same instances; per-fold F-scores are compared
    /// with a paired t-test.
    #[arg(long)]
    baseline_gram: Option<PathBuf>,
    #[command(flatten)]
    folds: FoldArgs,
    #[command(flatten)]
    svm: SvmArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    instances: PathBuf,
    #[arg(long)]
    subst: PathBuf,
    /// Comma-separated beta values.
    #[arg(long, default_value = "1")]
    beta: String,
    /// Comma-separated `open/extend` pairs.
    #[arg(long, default_value = "1.2/0.2")]
    gaps: String,
    #[command(flatten)]
    folds: FoldArgs,
    #[command(flatten)]
    svm: SvmArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[command(flatten)]
    kernel: KernelArgs,
    /// Comma-separated ascending training sizes.
    #[arg(long)]
    sizes: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    svm: SvmArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    gram: PathBuf,
    #[arg(long)]
    instances: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, value_enum, default_value = "none")]
    weighting: Weighting,
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// The training instances the model was fitted on.
    #[arg(long)]
    train: PathBuf,
    /// Instances to classify.
    #[arg(long)]
    instances: PathBuf,
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportFormat {
    Precomputed,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    gram: PathBuf,
    #[arg(long)]
    instances: PathBuf,
    #[arg(long, value_enum, default_value = "precomputed")]
    format: ExportFormat,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PsdArgs {
    #[arg(long)]
    gram: PathBuf,
    /// Largest matrix handed to the dense eigensolver.
    #[arg(long, default_value_t = pathalign::kernels::DEFAULT_EIGEN_BOUND)]
    max_size: usize,
    #[arg(long)]
    out: PathBuf,
}

fn warn(msg: impl std::fmt::Display) {
    eprintln!("warning: {msg}");
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| anyhow!("invalid {what} {s:?}")))
        .collect()
}

fn parse_gaps(text: &str) -> Result<Vec<(f64, f64)>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let (o, e) = s
                .split_once('/')
                .ok_or_else(|| anyhow!("gap pair {s:?} must look like open/extend"))?;
            Ok((o.parse()?, e.parse()?))
        })
        .collect::<Result<_>>()
        .context("parsing --gaps")
}

fn load_dataset(m: &mut Manifest, path: &Path) -> Result<Dataset> {
    let bytes = m.read_input(path)?;
    parse_instances(&bytes[..]).with_context(|| format!("parsing instances {}", path.display()))
}

fn load_gram(m: &mut Manifest, path: &Path) -> Result<Gram> {
    let bytes = m.read_input(path)?;
    Gram::load(&bytes[..]).with_context(|| format!("parsing Gram matrix {}", path.display()))
}

fn load_subst(m: &mut Manifest, path: &Path) -> Result<Subst> {
    let bytes = m.read_input(path)?;
    Subst::load(&bytes[..]).with_context(|| format!("parsing substitution matrix {}", path.display()))
}

/// Labels in Gram order, looked up by instance id.
fn labels_for(g: &Gram, ds: &Dataset) -> Result<Vec<Label>> {
    if g.len() != ds.len() {
        bail!("Gram has {} instances but the instance file has {}", g.len(), ds.len());
    }
    let by_id: HashMap<&str, Label> = ds.iter().map(|i| (i.id.as_str(), i.label)).collect();
    g.ids()
        .iter()
        .map(|id| {
            by_id
                .get(id.as_str())
                .copied()
                .ok_or_else(|| anyhow!("instance {id} missing from instance file"))
        })
        .collect()
}

fn svm_config(m: &mut Manifest, args: &SvmArgs) -> Result<(Vec<f64>, TrainConfig<f64>)> {
    let grid = match &args.c_grid {
        Some(text) => parse_list(text, "C value")?,
        None => default_c_grid(),
    };
    m.param("c_grid", &grid);
    m.param("tolerance", args.tolerance);
    let weighting = ClassWeighting::from(args.weighting);
    m.param("class_weighting", format!("{weighting:?}"));
    let cfg = TrainConfig {
        class_weighting: weighting,
        tolerance: args.tolerance,
        ..TrainConfig::default()
    };
    Ok((grid, cfg))
}

fn fold_plan(m: &mut Manifest, args: &FoldArgs, labels: &[Label]) -> Result<FoldPlan> {
    m.seed = Some(args.seed);
    m.param("folds", args.folds);
    m.param("stratified", args.stratified);
    let plan = if args.stratified {
        stratified_kfold_split(labels, args.folds, args.seed)?
    } else {
        kfold_split(labels.len(), args.folds, args.seed)?
    };
    let text: String = plan.assignment.iter().map(|f| format!("{f}\n")).collect();
    m.note("fold_plan_sha256", manifest::sha256_hex(text.as_bytes()));
    Ok(plan)
}

fn align_params(k: &KernelArgs) -> Result<Params> {
    let p = Params::new(k.beta, k.gap_open, k.gap_extend)?;
    for w in p.warnings() {
        warn(w);
    }
    Ok(p)
}

fn record_kernel(m: &mut Manifest, k: &KernelArgs) {
    m.param("kernel", k.kernel.name());
    m.param("normalize", k.normalize);
    match k.kernel {
        KernelKind::La => {
            m.param("beta", k.beta);
            m.param("gap_open", k.gap_open);
            m.param("gap_extend", k.gap_extend);
        }
        KernelKind::GapWeighted => {
            m.param("length", k.length);
            m.param("lambda", k.lambda);
        }
        KernelKind::ShortestPath => {}
    }
}

/// Runs `f` with the kernel selected by `k`.
fn with_kernel<T>(m: &mut Manifest, k: &KernelArgs, f: impl KernelUser<T>) -> Result<T> {
    record_kernel(m, k);
    match k.kernel {
        KernelKind::La => {
            let path = k
                .subst
                .as_ref()
                .ok_or_else(|| anyhow!("--subst is required for --kernel la"))?;
            let subst = load_subst(m, path)?;
            let kernel = LaKernel {
                subst: &subst,
                params: align_params(k)?,
            };
            f.run(&kernel)
        }
        KernelKind::ShortestPath => f.run(&ShortestPathKernel),
        KernelKind::GapWeighted => {
            let kernel = GapWeightedKernel {
                params: SubsequenceParams::new(k.length, k.lambda)?,
            };
            f.run(&kernel)
        }
    }
}

trait KernelUser<T> {
    fn run<K: PathKernel<f64>>(self, kernel: &K) -> Result<T>;
}

struct GramOf<'a>(&'a Dataset);

impl KernelUser<Gram> for GramOf<'_> {
    fn run<K: PathKernel<f64>>(self, kernel: &K) -> Result<Gram> {
        Ok(compute_gram(self.0, kernel))
    }
}

fn report(m: Manifest, out: &Path, rows: &[(String, Metrics)]) -> Result<()> {
    let mut m = m;
    let mut buf = Vec::new();
    write_report(rows, &mut buf)?;
    m.write_output(out, &buf)?;
    let manifest = m.finish(out)?;
    println!("report: {}", out.display());
    println!("manifest: {}", manifest.display());
    Ok(())
}

fn build_subst(args: BuildSubstArgs) -> Result<()> {
    let mut m = Manifest::new("build-subst");
    let ds = load_dataset(&mut m, &args.instances)?;
    let vocab: Vec<String> = ds.word_vocabulary().iter().map(|t| t.key()).collect();
    let table = match args.source {
        Source::Distributional => {
            m.param("source", "distributional");
            let measure: DistributionalMeasure = args
                .measure
                .as_deref()
                .ok_or_else(|| anyhow!("--measure is required (dice, cosine or l2)"))?
                .parse()?;
            let corpus_path = args
                .corpus
                .as_ref()
                .ok_or_else(|| anyhow!("--corpus is required for --source distributional"))?;
            let corpus = m.read_input_string(corpus_path)?;
            m.param("measure", measure.to_string());
            m.param("window", args.window);
            let targets: BTreeSet<String> = vocab
                .iter()
                .map(|k| k.split('%').next().unwrap_or(k).to_string())
                .collect();
            let counts = count_contexts(&corpus, &targets, WindowSpec::new(args.window)?);
            let unseen = targets.iter().filter(|w| !counts.contains(w)).count();
            if unseen > 0 {
                warn(format!(
                    "{unseen} of {} words do not occur in the corpus; they match only themselves",
                    targets.len()
                ));
            }
            m.note("out_of_vocabulary_words", unseen);
            build_word_scores(&counts, &vocab, measure)
        }
        Source::Taxonomy => {
            m.param("source", "taxonomy");
            let measure: TaxonomyMeasure = args
                .measure
                .as_deref()
                .ok_or_else(|| anyhow!("--measure is required (wup, lch, res, jcn or lin)"))?
                .parse()?;
            let tpath = args
                .taxonomy
                .as_ref()
                .ok_or_else(|| anyhow!("--taxonomy is required for --source taxonomy"))?;
            let bytes = m.read_input(tpath)?;
            let t = Taxonomy::load(&bytes[..]).with_context(|| format!("parsing taxonomy {}", tpath.display()))?;
            m.param("measure", measure.to_string());
            let annotated: Vec<(String, String)> = ds
                .word_vocabulary()
                .iter()
                .filter_map(|tok| tok.concept().map(|c| (tok.key(), c.to_string())))
                .collect();
            if annotated.is_empty() {
                warn("no taxonomy-annotated words; the matrix scores exact matches only");
            }
            taxonomy_word_scores(&t, &annotated, measure)?
        }
        Source::Random => {
            m.param("source", "random");
            m.seed = Some(args.seed);
            random_matrix::<f64>(&vocab, args.seed).word_scores().clone()
        }
    };
    let subst = Subst::build(table)?;
    let mut buf = Vec::new();
    subst.save(&mut buf)?;
    m.write_output(&args.out, &buf)?;
    m.note("stored_pairs", subst.word_scores().len());
    let manifest = m.finish(&args.out)?;
    println!("matrix: {}", args.out.display());
    println!("manifest: {}", manifest.display());
    Ok(())
}

fn gram(args: GramArgs) -> Result<()> {
    let mut m = Manifest::new("gram");
    let ds = load_dataset(&mut m, &args.instances)?;
    let mut g = with_kernel(&mut m, &args.kernel, GramOf(&ds))?;
    if args.kernel.normalize {
        g = normalize_gram(&g)?;
    }
    let mut buf = Vec::new();
    g.save(&mut buf)?;
    m.write_output(&args.out, &buf)?;
    let manifest = m.finish(&args.out)?;
    println!("gram: {}", args.out.display());
    println!("manifest: {}", manifest.display());
    Ok(())
}

fn warn_folds(result: &pathalign::evaluation::CvResult<f64>, context: &str) {
    for f in &result.folds {
        if f.c.is_none() {
            warn(format!(
                "{context}fold {}: training portion has one class; used a constant classifier",
                f.fold + 1
            ));
        }
        if !f.converged {
            warn(format!(
                "{context}fold {}: solver stopped at its iteration bound",
                f.fold + 1
            ));
        }
    }
}

fn cv(args: CvArgs) -> Result<()> {
    let mut m = Manifest::new("cv");
    let g = load_gram(&mut m, &args.gram)?;
    let ds = load_dataset(&mut m, &args.instances)?;
    let labels = labels_for(&g, &ds)?;
    let plan = fold_plan(&mut m, &args.folds, &labels)?;
    let (grid, cfg) = svm_config(&mut m, &args.svm)?;
    let result = cross_validate(&g, &labels, &plan, &grid, &cfg)?;
    warn_folds(&result, "");
    let mut rows: Vec<(String, Metrics)> = result
        .folds
        .iter()
        .map(|f| (format!("fold{}", f.fold + 1), f.metrics))
        .collect();
    rows.push(("aggregate".into(), result.aggregate));
    m.note("selected_c", result.folds.iter().map(|f| f.c).collect::<Vec<_>>());
    if let Some(path) = &args.baseline_gram {
        let b = load_gram(&mut m, path)?;
        if b.ids() != g.ids() {
            bail!("baseline Gram {} lists different instances", path.display());
        }
        let base = cross_validate(&b, &labels, &plan, &grid, &cfg)?;
        warn_folds(&base, "baseline ");
        let t = paired_ttest(&result.fold_f_scores(), &base.fold_f_scores())?;
        rows.push(("baseline_aggregate".into(), base.aggregate));
        m.note(
            "paired_ttest",
            serde_json::json!({
                "compared": "per-fold F-scores",
                "t": if t.t.is_finite() { serde_json::json!(t.t) } else { serde_json::json!(t.t.to_string()) },
                "p": t.p,
                "df": t.df,
                "significant_at_0.05": t.significant,
            }),
        );
        println!(
            "paired t-test on per-fold F: t={} p={} significant={}",
            t.t, t.p, t.significant
        );
    }
    report(m, &args.out, &rows)
}

fn sweep(args: SweepArgs) -> Result<()> {
    let mut m = Manifest::new("sweep");
    let ds = load_dataset(&mut m, &args.instances)?;
    let subst = load_subst(&mut m, &args.subst)?;
    let betas: Vec<f64> = parse_list(&args.beta, "beta")?;
    let gaps = parse_gaps(&args.gaps)?;
    m.param("beta_grid", &betas);
    m.param(
        "gap_grid",
        gaps.iter().map(|(o, e)| format!("{o}/{e}")).collect::<Vec<_>>(),
    );
    let plan = fold_plan(&mut m, &args.folds, &ds.labels())?;
    let (grid, cfg) = svm_config(&mut m, &args.svm)?;
    let cells = parameter_sweep(&ds, &subst, &betas, &gaps, &plan, &grid, &cfg)?;
    for c in &cells {
        for w in c.params.warnings() {
            warn(format!("{}: {w}", c.name()));
        }
        warn_folds(&c.result, &format!("{}: ", c.name()));
    }
    let rows: Vec<(String, Metrics)> = cells.iter().map(|c| (c.name(), c.result.aggregate)).collect();
    report(m, &args.out, &rows)
}

struct CurveRun<'a> {
    train: &'a Dataset,
    test: &'a Dataset,
    normalize: bool,
    sizes: &'a [usize],
    seed: u64,
    grid: &'a [f64],
    cfg: &'a TrainConfig<f64>,
}

impl KernelUser<Vec<pathalign::evaluation::CurvePoint<f64>>> for CurveRun<'_> {
    fn run<K: PathKernel<f64>>(self, kernel: &K) -> Result<Vec<pathalign::evaluation::CurvePoint<f64>>> {
        Ok(learning_curve(
            self.train,
            self.test,
            kernel,
            self.normalize,
            self.sizes,
            self.seed,
            self.grid,
            self.cfg,
        )?)
    }
}

fn curve(args: CurveArgs) -> Result<()> {
    let mut m = Manifest::new("curve");
    let train_ds = load_dataset(&mut m, &args.train)?;
    let test_ds = load_dataset(&mut m, &args.test)?;
    let sizes: Vec<usize> = parse_list(&args.sizes, "size")?;
    m.param("sizes", &sizes);
    m.seed = Some(args.seed);
    let (grid, cfg) = svm_config(&mut m, &args.svm)?;
    let run = CurveRun {
        train: &train_ds,
        test: &test_ds,
        normalize: args.kernel.normalize,
        sizes: &sizes,
        seed: args.seed,
        grid: &grid,
        cfg: &cfg,
    };
    let points = with_kernel(&mut m, &args.kernel, run)?;
    for p in &points {
        if p.metrics.tp + p.metrics.fp == 0 {
            warn(format!("size {}: no test instance classified positive", p.size));
        }
    }
    m.note("selected_c", points.iter().map(|p| p.c).collect::<Vec<_>>());
    let rows: Vec<(String, Metrics)> = points.iter().map(|p| (format!("size={}", p.size), p.metrics)).collect();
    report(m, &args.out, &rows)
}

fn train_cmd(args: TrainArgs) -> Result<()> {
    let mut m = Manifest::new("train");
    let g = load_gram(&mut m, &args.gram)?;
    let ds = load_dataset(&mut m, &args.instances)?;
    let labels = labels_for(&g, &ds)?;
    let cfg = TrainConfig {
        c: args.c,
        class_weighting: args.weighting.into(),
        tolerance: args.tolerance,
        max_iterations: None,
    };
    m.param("c", args.c);
    m.param("class_weighting", format!("{:?}", cfg.class_weighting));
    m.param("tolerance", args.tolerance);
    let model = train(&g, &labels, &cfg)?;
    if !model.converged {
        warn(format!(
            "solver stopped after {} iterations; KKT residual {}",
            model.iterations, model.kkt_residual
        ));
    }
    m.note("iterations", model.iterations);
    m.note("converged", model.converged);
    m.note("support_vectors", model.support_ids().len());
    let meta = BTreeMap::from([
        ("normalized".to_string(), g.is_normalized().to_string()),
        (
            "gram_sha256".to_string(),
            m.inputs[&args.gram.display().to_string()]
                .as_str()
                .unwrap_or_default()
                .to_string(),
        ),
        ("c".to_string(), args.c.to_string()),
    ]);
    let mut buf = Vec::new();
    model.decision_function().save(&mut buf, &meta)?;
    m.write_output(&args.out, &buf)?;
    let manifest = m.finish(&args.out)?;
    println!("model: {}", args.out.display());
    println!("manifest: {}", manifest.display());
    Ok(())
}

struct PredictRun<'a> {
    train: &'a Dataset,
    new: &'a Dataset,
    normalize: bool,
}

impl KernelUser<Vec<Vec<f64>>> for PredictRun<'_> {
    fn run<K: PathKernel<f64>>(self, kernel: &K) -> Result<Vec<Vec<f64>>> {
        let cross = cross_kernel(self.train, self.new, kernel);
        if self.normalize {
            Ok(cross.normalized(&self.new.ids(), &self.train.ids())?)
        } else {
            Ok(cross.rows)
        }
    }
}

fn predict(args: PredictArgs) -> Result<()> {
    let mut m = Manifest::new("predict");
    let bytes = m.read_input(&args.model)?;
    let (model, meta) =
        DecisionFunction::<f64>::load(&bytes[..]).with_context(|| format!("parsing model {}", args.model.display()))?;
    if let Some(flag) = meta.get("normalized") {
        if (flag == "true") != args.kernel.normalize {
            bail!("model was trained on a Gram with normalized={flag}; pass the same --normalize setting");
        }
    }
    let train_ds = load_dataset(&mut m, &args.train)?;
    let new = load_dataset(&mut m, &args.instances)?;
    let position: HashMap<&str, usize> = train_ds.iter().enumerate().map(|(i, x)| (x.id.as_str(), i)).collect();
    let order: Vec<usize> = model
        .ids
        .iter()
        .map(|id| {
            position
                .get(id.as_str())
                .copied()
                .ok_or_else(|| anyhow!("training instance {id} missing from --train"))
        })
        .collect::<Result<_>>()?;
    let train_ds = train_ds.subset(&order);
    let run = PredictRun {
        train: &train_ds,
        new: &new,
        normalize: args.kernel.normalize,
    };
    let rows = with_kernel(&mut m, &args.kernel, run)?;
    let mut out = String::from("id\tlabel\tdecision\n");
    for (inst, row) in new.iter().zip(&rows) {
        let (label, d) = model.predict(row)?;
        let tag = if label == Label::Positive { "+1" } else { "-1" };
        out.push_str(&format!("{}\t{tag}\t{}\n", inst.id, pathalign::format::fmt_real(d)));
    }
    m.write_output(&args.out, out.as_bytes())?;
    let manifest = m.finish(&args.out)?;
    println!("predictions: {}", args.out.display());
    println!("manifest: {}", manifest.display());
    Ok(())
}

fn export(args: ExportArgs) -> Result<()> {
    let mut m = Manifest::new("export");
    let g = load_gram(&mut m, &args.gram)?;
    let ds = load_dataset(&mut m, &args.instances)?;
    let labels = labels_for(&g, &ds)?;
    let ExportFormat::Precomputed = args.format;
    m.param("format", "precomputed");
    let mut buf = Vec::new();
    export_precomputed(&g, &labels, &mut buf)?;
    m.write_output(&args.out, &buf)?;
    let manifest = m.finish(&args.out)?;
    println!("report: {}", args.out.display());
    println!("manifest: {}", manifest.display());
    Ok(())
}

fn psd_check(args: PsdArgs) -> Result<()> {
    let mut m = Manifest::new("psd-check");
    let g = load_gram(&mut m, &args.gram)?;
    m.param("max_size", args.max_size);
    let min = min_eigenvalue(&g, args.max_size)?;
    if min < 0.0 {
        warn(format!(
            "Gram matrix is not positive semi-definite (smallest eigenvalue {min})"
        ));
    }
    println!("min_eigenvalue\t{min}");
    let text = format!(
        "statistic\tvalue\nmin_eigenvalue\t{}\n",
        pathalign::format::fmt_real(min)
    );
    m.write_output(&args.out, text.as_bytes())?;
    let manifest = m.finish(&args.out)?;
    println!("report: {}", args.out.display());
    println!("manifest: {}", manifest.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match cli.command {
        Command::BuildSubst(a) => build_subst(a),
        Command::Gram(a) => gram(a),
        Command::Cv(a) => cv(a),
        Command::Sweep(a) => sweep(a),
        Command::Curve(a) => curve(a),
        Command::Train(a) => train_cmd(a),
        Command::Predict(a) => predict(a),
        Command::Export(a) => export(a),
        Command::PsdCheck(a) => psd_check(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
