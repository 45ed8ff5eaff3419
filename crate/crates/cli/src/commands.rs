use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use aas_core::artifact::{read_artifact, write_artifact, write_atomic};
use aas_core::augment::{export_soft_targets, load_vocabulary, write_soft_targets, WeightMode};
use aas_core::builder::{build_metadata, build_vocabulary, CandidateSources};
use aas_core::conceptnet::{ConceptNetClient, ConceptNetConfig};
use aas_core::dataset::{load_gqa, load_vqa_v2, write_gqa, Dataset};
use aas_core::entailment::{
    HttpBackend, LexicalBackend, PremiseCorpus, RecordingBackend, ScoringBackend, TableBackend,
    DEFAULT_MAX_PREMISES,
};
use aas_core::http::UreqTransport;
use aas_core::metrics::{
    evaluate, evaluate_at_k, iou_agreement, k_sweep, load_human_annotations, load_predictions,
    sweep_csv,
};
use aas_core::vectors::load_vectors;
use aas_core::wordnet::load_wordnet;
use aas_core::{Label, Source};
use serde::Serialize;
use serde_json::json;
use tracing::info;

use crate::config::{BackendKind, BuildSettings, FileConfig};
use crate::error::{CliError, CliResult};
use crate::manifest::{digest_path, sibling, ManifestBuilder};
use crate::{
    AugmentArgs, BuildArgs, Cli, Command, EvalArgs, IngestArgs, InputFormat, IouArgs, KsweepArgs,
    Mode, PremisesArgs,
};

const HTTP_TIMEOUT: Duration = Duration::from_secs(60);

pub fn run(cli: Cli) -> CliResult<()> {
    let file = cli
        .config
        .as_deref()
        .map(FileConfig::load)
        .transpose()?
        .unwrap_or_default();
    match cli.command {
        Command::Ingest(args) => ingest(args),
        Command::Build(args) => build(*args, &file),
        Command::Eval(args) => eval(args),
        Command::Ksweep(args) => ksweep(args),
        Command::Iou(args) => iou(args),
        Command::Augment(args) => augment(args),
        Command::Premises(args) => premises(args),
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut body = serde_json::to_string_pretty(value).expect("report serialization");
    body.push('\n');
    Ok(write_atomic(path, body.as_bytes())?)
}

fn ingest(args: IngestArgs) -> CliResult<()> {
    let mut manifest =
        ManifestBuilder::new("ingest", json!({ "format": format!("{:?}", args.format) }));
    let dataset = match args.format {
        InputFormat::Gqa => load_gqa(&args.dataset)?,
        InputFormat::VqaV2 => load_vqa_v2(&args.dataset, args.questions.as_deref())?,
    };
    manifest.input(&args.dataset)?;
    if let Some(q) = &args.questions {
        manifest.input(q)?;
    }
    write_gqa(&dataset, &args.out)?;
    manifest.output(&args.out);
    manifest.finish(&args.out)?;
    println!(
        "{} questions, {} unique answers",
        dataset.len(),
        dataset.labels().len()
    );
    Ok(())
}

/// The union artifact `aas.jsonl` gets per-source siblings `aas.wordnet.jsonl`.
pub fn per_source_path(out: &Path, source: Source) -> PathBuf {
    let stem = out.file_stem().unwrap_or_default().to_string_lossy();
    let name = match out.extension() {
        Some(ext) => format!("{stem}.{}.{}", source.tag(), ext.to_string_lossy()),
        None => format!("{stem}.{}", source.tag()),
    };
    out.with_file_name(name)
}

fn provenance(path: &Path) -> CliResult<String> {
    let name = path.file_name().unwrap_or_default().to_string_lossy();
    Ok(format!("{name} sha256:{}", digest_path(path)?))
}

fn require<'a>(path: &'a Option<PathBuf>, source: Source, flag: &str) -> CliResult<&'a PathBuf> {
    path.as_ref()
        .ok_or_else(|| CliError::usage(format!("source {source} is enabled but {flag} is not set")))
}

fn load_sources(s: &BuildSettings, manifest: &mut ManifestBuilder) -> CliResult<CandidateSources> {
    let mut sources = CandidateSources::default();
    let loading = |source: Source| {
        move |e: aas_core::Error| CliError::from(e).context(format!("loading source {source}"))
    };
    if s.sources.contains(&Source::WordNet) {
        let dir = require(&s.wordnet, Source::WordNet, "--wordnet")?;
        sources.wordnet = Some(load_wordnet(dir).map_err(loading(Source::WordNet))?);
        manifest.input(dir)?;
    }
    for (source, path, flag) in [
        (Source::BertVec, &s.bert_vectors, "--bert-vectors"),
        (
            Source::CounterfitVec,
            &s.counterfit_vectors,
            "--counterfit-vectors",
        ),
    ] {
        if !s.sources.contains(&source) {
            continue;
        }
        let path = require(path, source, flag)?;
        let table = load_vectors(path, source).map_err(loading(source))?;
        sources.vector_provenance.insert(source, provenance(path)?);
        manifest.input(path)?;
        match source {
            Source::BertVec => sources.bert = Some(table),
            _ => sources.counterfit = Some(table),
        }
    }
    if s.sources.contains(&Source::ConceptNet) {
        let mut config = ConceptNetConfig::new(&s.cache_dir);
        config.offline = s.offline;
        config.requests_per_minute = s.requests_per_minute;
        config.request_budget = s.conceptnet_budget;
        if let Some(url) = &s.conceptnet_url {
            config.base_url = url.clone();
        }
        sources.conceptnet = Some(ConceptNetClient::new(
            config,
            Arc::new(UreqTransport::new(HTTP_TIMEOUT)),
        ));
    }
    Ok(sources)
}

fn make_backend(
    s: &BuildSettings,
    manifest: &mut ManifestBuilder,
) -> CliResult<Arc<dyn ScoringBackend>> {
    Ok(match s.backend {
        BackendKind::Lexical => Arc::new(LexicalBackend),
        BackendKind::Table => {
            let path = s
                .score_table
                .as_ref()
                .ok_or_else(|| CliError::usage("the table backend needs --score-table"))?;
            manifest.input(path)?;
            Arc::new(TableBackend::load(path)?)
        }
        BackendKind::Http => {
            let url = s.backend_url.as_ref().ok_or_else(|| {
                CliError::usage(format!(
                    "the http backend needs --backend-url or {}",
                    crate::config::BACKEND_URL_ENV
                ))
            })?;
            let backend = HttpBackend::new(url.clone(), Arc::new(UreqTransport::new(HTTP_TIMEOUT)));
            let health = backend.health()?;
            info!(model = %health.model, "entailment service is up");
            Arc::new(backend)
        }
    })
}

fn build(args: BuildArgs, file: &FileConfig) -> CliResult<()> {
    let settings = BuildSettings::resolve(&args.settings, file)?;
    let dataset_path = args
        .dataset
        .clone()
        .or_else(|| file.dataset.clone())
        .ok_or_else(|| CliError::usage("build needs --dataset"))?;
    let mut manifest = ManifestBuilder::new("build", &settings);
    let dataset = load_gqa(&dataset_path)?;
    manifest.input(&dataset_path)?;
    let sources = load_sources(&settings, &mut manifest)?;
    let backend = make_backend(&settings, &mut manifest)?;
    let recorder = args
        .record_table
        .as_ref()
        .map(|_| RecordingBackend::new(backend.clone()));
    let scorer: &dyn ScoringBackend = match &recorder {
        Some(r) => r,
        None => &*backend,
    };

    let config = settings.build_config();
    let labels = dataset.labels();
    let corpus = PremiseCorpus::from_dataset(&dataset);
    info!(
        labels = labels.len(),
        jobs = config.jobs,
        "building answer sets"
    );
    let checkpoint = sibling(&args.out, "checkpoint");
    let built = build_vocabulary(
        &labels,
        &sources,
        &corpus,
        scorer,
        &config,
        Some(&checkpoint),
    )?;

    let corpus_name = dataset_path
        .file_name()
        .unwrap_or_default()
        .to_string_lossy()
        .to_string();
    let mut write = |path: &Path, restrict: Option<Source>| -> CliResult<()> {
        let sets = built.answer_sets(restrict, config.k, config.threshold)?;
        let metadata = build_metadata(&config, &sources, scorer, &corpus_name, restrict);
        write_artifact(path, &metadata, &sets)?;
        manifest.output(path);
        Ok(())
    };
    write(&args.out, None)?;
    for &source in &config.sources {
        write(&per_source_path(&args.out, source), Some(source))?;
    }
    if let (Some(path), Some(recorder)) = (&args.record_table, &recorder) {
        recorder.write_table(path)?;
        manifest.output(path);
    }
    manifest.finish(&args.out)?;
    println!(
        "built {} answer sets into {}",
        labels.len(),
        args.out.display()
    );
    Ok(())
}

fn read_sets(
    path: &Path,
    manifest: &mut ManifestBuilder,
) -> CliResult<aas_core::artifact::Artifact> {
    let artifact = read_artifact(path)?;
    manifest.input(path)?;
    Ok(artifact)
}

fn load_eval_inputs(
    dataset: &Path,
    predictions: &Path,
    manifest: &mut ManifestBuilder,
) -> CliResult<(Dataset, Vec<aas_core::metrics::Prediction>)> {
    let ds = load_gqa(dataset)?;
    manifest.input(dataset)?;
    let preds = load_predictions(predictions)?;
    manifest.input(predictions)?;
    Ok((ds, preds))
}

fn eval(args: EvalArgs) -> CliResult<()> {
    let mut manifest = ManifestBuilder::new("eval", json!({ "k": args.k }));
    let artifact = read_sets(&args.aas, &mut manifest)?;
    let (dataset, predictions) = load_eval_inputs(&args.dataset, &args.predictions, &mut manifest)?;
    let report = match args.k {
        Some(k) => evaluate_at_k(&artifact.sets, &dataset, &predictions, k)?,
        None => evaluate(&artifact.sets, &dataset, &predictions)?,
    };
    write_json(&args.out, &report)?;
    manifest.output(&args.out);
    manifest.finish(&args.out)?;
    print!("{}", report.summary());
    Ok(())
}

fn ksweep(args: KsweepArgs) -> CliResult<()> {
    if args.k_min == 0 || args.k_min > args.k_max {
        return Err(CliError::usage("--k-min must be between 1 and --k-max"));
    }
    let mut manifest = ManifestBuilder::new(
        "ksweep",
        json!({ "k_min": args.k_min, "k_max": args.k_max }),
    );
    let artifact = read_sets(&args.aas, &mut manifest)?;
    let (dataset, predictions) = load_eval_inputs(&args.dataset, &args.predictions, &mut manifest)?;
    let curve = k_sweep(
        &artifact.sets,
        artifact.metadata.as_ref(),
        &dataset,
        &predictions,
        args.k_min..=args.k_max,
    )?;
    let csv = sweep_csv(&curve);
    write_atomic(&args.out, csv.as_bytes())?;
    manifest.output(&args.out);
    manifest.finish(&args.out)?;
    print!("{csv}");
    Ok(())
}

#[derive(Serialize)]
struct IouMethod {
    aas: String,
    restricted_to: Option<Source>,
    #[serde(flatten)]
    report: aas_core::metrics::IouReport,
}

fn iou(args: IouArgs) -> CliResult<()> {
    let mut manifest = ManifestBuilder::new("iou", json!({}));
    let annotations = load_human_annotations(&args.human)?;
    manifest.input(&args.human)?;
    let mut methods = Vec::new();
    for path in &args.aas {
        let artifact = read_sets(path, &mut manifest)?;
        let report = iou_agreement(&artifact.sets, &annotations)
            .map_err(|e| CliError::from(e).context(path.display()))?;
        println!("{:>8.2}  {}", report.iou_pct, path.display());
        methods.push(IouMethod {
            aas: path.display().to_string(),
            restricted_to: artifact.metadata.and_then(|m| m.restricted_to),
            report,
        });
    }
    write_json(
        &args.out,
        &json!({ "label_excluded": true, "methods": methods }),
    )?;
    manifest.output(&args.out);
    manifest.finish(&args.out)?;
    Ok(())
}

fn augment(args: AugmentArgs) -> CliResult<()> {
    let mode = match args.mode {
        Mode::Uniform => WeightMode::Uniform,
        Mode::Score => WeightMode::Score,
    };
    let mut manifest = ManifestBuilder::new(
        "augment",
        json!({ "mode": format!("{mode:?}").to_lowercase() }),
    );
    let artifact = read_sets(&args.aas, &mut manifest)?;
    let dataset = load_gqa(&args.dataset)?;
    manifest.input(&args.dataset)?;
    let vocab = load_vocabulary(&args.vocab)?;
    manifest.input(&args.vocab)?;
    let export = export_soft_targets(&dataset, &artifact.sets, &vocab, mode)?;
    write_soft_targets(&export.targets, &args.out)?;
    manifest.output(&args.out);
    manifest.finish(&args.out)?;
    println!(
        "{} questions exported, {} skipped (ground truth not in vocabulary)",
        export.targets.len(),
        export.skipped
    );
    Ok(())
}

fn premises(args: PremisesArgs) -> CliResult<()> {
    let dataset = load_gqa(&args.dataset)?;
    let label = Label::new(&args.label)?;
    let max = args.max_premises.unwrap_or(DEFAULT_MAX_PREMISES);
    let set = PremiseCorpus::from_dataset(&dataset).harvest(&label, max);
    let body = json!({
        "label": set.label.normalized(),
        "fallback": set.fallback,
        "premises": set.premises,
    });
    match &args.out {
        Some(out) => {
            let mut manifest = ManifestBuilder::new(
                "premises",
                json!({ "label": args.label, "max_premises": max }),
            );
            manifest.input(&args.dataset)?;
            write_json(out, &body)?;
            manifest.output(out);
            manifest.finish(out)?;
        }
        None => println!("{}", serde_json::to_string_pretty(&body).expect("json")),
    }
    Ok(())
}
