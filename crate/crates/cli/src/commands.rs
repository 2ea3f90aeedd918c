use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use limitlens_core::analytics::{
    self, bootstrap_ci, build_did_panel, daily_series, did_estimate, rolling_mean, spearman,
    spearman_exact_p, BootstrapCi, CurveBuilder, DailyParams, DailySeries, Lexicon, LimitSchedule,
    Quantity, ThreadCounter,
};
use limitlens_core::histstore::DEFAULT_MAX_LEN;
use limitlens_core::ingest::{self, reader, Classifier, IngestSummary};
use limitlens_core::lengthmodel::{self, ModelOptions};
use limitlens_core::report::{self, ChartLine, Provenance};
use limitlens_core::{
    CountingSchedule, DeviceClass, FilterConfig, FitResult, HistStore, LengthHistogram, SimConfig,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;
use crate::output::{self, emit, json_document, sidecar, write_file};
use crate::{CliError, CliResult, Status};

pub fn dispatch(cli: &Cli) -> CliResult<Status> {
    let seed = cli.seed;
    match &cli.command {
        Command::Ingest(a) => ingest_cmd(a, seed),
        Command::Hist(HistCommand::Query(a)) => hist_query(a, seed),
        Command::Fit(a) => fit_cmd(a, seed),
        Command::SolveLimit(a) => solve_limit_cmd(a, seed),
        Command::Simulate(a) => simulate_cmd(a, seed),
        Command::Daily(a) => daily_cmd(a, seed),
        Command::Did(a) => did_cmd(a, seed),
        Command::Threads(a) => threads_cmd(a, seed),
        Command::Curves(a) => curves_cmd(a, seed),
        Command::Correlate(a) => correlate_cmd(a, seed),
        Command::Report(a) => report_cmd(a, seed),
    }
}

struct Corpus {
    classifier: Classifier,
    shards: Vec<PathBuf>,
    /// Hashable description of the counting and filter rules.
    config: Value,
}

/// Loads configs and discovers shards before any data is read.
fn load_corpus(args: &CorpusArgs) -> CliResult<Corpus> {
    let schedule = CountingSchedule::load(&args.counting)?;
    let filter = match &args.filter {
        Some(path) => FilterConfig::load(path)?,
        None => FilterConfig::default(),
    };
    if args.max_len == 0 {
        return Err(CliError::Usage("--max-len must be positive".into()));
    }
    let config = json!({
        "counting": schedule.describe(),
        "filter": filter.to_toml(),
        "max_len": args.max_len,
    });
    let shards = reader::discover_shards(&args.inputs)?;
    eprintln!("{} shard(s) found", shards.len());
    Ok(Corpus {
        classifier: Classifier::new(filter, schedule, args.max_len),
        shards,
        config,
    })
}

fn load_filter(path: Option<&Path>) -> CliResult<FilterConfig> {
    Ok(match path {
        Some(path) => FilterConfig::load(path)?,
        None => FilterConfig::default(),
    })
}

fn load_store(path: &Path) -> CliResult<HistStore> {
    Ok(HistStore::read_csv(path, DEFAULT_MAX_LEN)?)
}

fn lang_filter(langs: &[String]) -> Option<BTreeSet<String>> {
    (!langs.is_empty()).then(|| langs.iter().cloned().collect())
}

fn selection_json(s: &Selection) -> Value {
    json!({
        "langs": s.langs,
        "devices": s.devices.iter().map(|d| d.as_str()).collect::<Vec<_>>(),
    })
}

fn report_tally(summary: &IngestSummary) {
    let t = &summary.tally;
    eprintln!("records read: {}", t.records_in);
    eprintln!("kept: {}", t.kept);
    for (device, n) in &t.kept_by_device {
        eprintln!("  {device}: {n}");
    }
    for (reason, n) in &t.drops {
        eprintln!("dropped ({}): {n}", reason.as_str());
    }
    if t.anomalies > 0 {
        eprintln!("anomalous lengths (kept): {}", t.anomalies);
    }
    for shard in summary.failed_shards() {
        eprintln!(
            "failed shard: {} ({})",
            shard.path,
            shard.error.as_deref().unwrap_or("unknown error")
        );
    }
}

fn shard_problems(summary: &IngestSummary) -> Vec<String> {
    summary
        .failed_shards()
        .map(|s| format!("shard {} failed: {}", s.path, s.error.as_deref().unwrap_or("")))
        .collect()
}

fn write_store_with_summary(
    store: &HistStore,
    summary: &IngestSummary,
    path: &Path,
    provenance: &Provenance,
) -> CliResult<()> {
    output::ensure_parent(path)?;
    store.write_csv(path, &provenance.lines())?;
    write_file(&sidecar(path, ".summary.json"), &json_document(provenance, summary)?)
}

fn ingest_cmd(args: &IngestArgs, seed: u64) -> CliResult<Status> {
    let corpus = load_corpus(&args.corpus)?;
    output::ensure_parent(&args.out)?;
    let provenance = output::provenance(seed, &json!({"command": "ingest", "corpus": corpus.config}));
    let result = ingest::ingest(&corpus.shards, &corpus.classifier);
    report_tally(&result.summary);
    write_store_with_summary(&result.store, &result.summary, &args.out, &provenance)?;
    Ok(Status::from_problems(shard_problems(&result.summary)))
}

fn hist_query(args: &HistQueryArgs, seed: u64) -> CliResult<Status> {
    let store = load_store(&args.store)?;
    let langs = lang_filter(&args.selection.langs);
    let span = match (args.from, args.to) {
        (None, None) => None,
        (from, to) => Some((
            from.unwrap_or(NaiveDate::MIN),
            to.unwrap_or(NaiveDate::MAX),
        )),
    };
    let h = store.query(span, langs.as_ref(), Some(&args.selection.devices));
    let provenance = output::provenance(
        seed,
        &json!({
            "command": "hist query",
            "selection": selection_json(&args.selection),
            "from": args.from,
            "to": args.to,
        }),
    );
    let text = match args.format {
        HistFormat::Json => json_document(&provenance, &h)?,
        HistFormat::Csv => histogram_csv(&h, &provenance),
    };
    emit(None, &text)?;
    Ok(Status::Ok)
}

fn histogram_csv(h: &LengthHistogram, provenance: &Provenance) -> String {
    let mut out = String::new();
    for line in provenance.lines() {
        let _ = writeln!(out, "# {line}");
    }
    out.push_str("length,count\n");
    for (i, count) in h.counts().iter().enumerate() {
        let _ = writeln!(out, "{},{}", i + 1, count);
    }
    out
}

#[derive(Serialize)]
struct FitOutput {
    day: NaiveDate,
    tweets: u64,
    limit: usize,
    fit: FitResult,
    cramming: f64,
    runover_at_limit: f64,
    fraction_exceeding_limit: f64,
}

fn fit_day(args: &DayFitArgs) -> CliResult<FitOutput> {
    let store = load_store(&args.store)?;
    let langs = lang_filter(&args.selection.langs);
    let h = store.query_day(args.day, langs.as_ref(), Some(&args.selection.devices));
    if h.is_empty() {
        return Err(CliError::Usage(format!("no tweets on {} for this selection", args.day)));
    }
    let limit = args
        .limit
        .unwrap_or_else(|| LimitSchedule::default().for_day(args.day));
    let estimate = lengthmodel::estimate(&h, limit, &ModelOptions::default())?;
    Ok(FitOutput {
        day: args.day,
        tweets: h.total(),
        limit,
        fit: estimate.fit,
        cramming: estimate.cramming,
        runover_at_limit: estimate.runover_at(limit as f64),
        fraction_exceeding_limit: h.fraction_exceeding(limit)?,
    })
}

fn day_fit_json(args: &DayFitArgs) -> Value {
    json!({
        "day": args.day,
        "selection": selection_json(&args.selection),
        "limit": args.limit,
        "model": ModelOptions::default(),
    })
}

fn fit_cmd(args: &FitArgs, seed: u64) -> CliResult<Status> {
    let fit = fit_day(&args.day)?;
    let provenance = output::provenance(seed, &json!({"command": "fit", "fit": day_fit_json(&args.day)}));
    emit(args.out.as_deref(), &json_document(&provenance, &fit)?)?;
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct SolvedLimit {
    target: f64,
    mu: f64,
    sigma: f64,
    /// The exact solution `exp(mu + sigma·z)`.
    solution: f64,
    /// Smallest integer limit at or above the solution.
    limit: u64,
}

fn solve_limit_cmd(args: &SolveLimitArgs, seed: u64) -> CliResult<Status> {
    let (mu, sigma, config) = match (args.mu, args.sigma, &args.store, args.day) {
        (Some(mu), Some(sigma), _, _) => (mu, sigma, json!({"mu": mu, "sigma": sigma})),
        (_, _, Some(store), Some(day)) => {
            let day_args = DayFitArgs {
                store: store.clone(),
                day,
                selection: args.selection.clone(),
                limit: args.limit,
            };
            let fit = fit_day(&day_args)?.fit;
            (fit.mu, fit.sigma, day_fit_json(&day_args))
        }
        _ => {
            return Err(CliError::Usage(
                "give either --mu and --sigma or --store and --day".into(),
            ))
        }
    };
    let solution = lengthmodel::solve_limit_params(mu, sigma, args.target)?;
    let solved = SolvedLimit {
        target: args.target,
        mu,
        sigma,
        solution,
        limit: solution.ceil() as u64,
    };
    println!("{}", solved.limit);
    if let Some(out) = &args.out {
        let provenance = output::provenance(
            seed,
            &json!({"command": "solve-limit", "target": args.target, "source": config}),
        );
        write_file(out, &json_document(&provenance, &solved)?)?;
    }
    Ok(Status::Ok)
}

#[derive(Serialize)]
struct SimSummary {
    config: SimConfig,
    n_drawn: u64,
    n_emitted: u64,
    n_abandoned: u64,
    n_edited_emitted: u64,
    edited_fraction: f64,
    true_runover: f64,
}

fn simulate_cmd(args: &SimulateArgs, seed: u64) -> CliResult<Status> {
    let config = SimConfig {
        mu: args.mu,
        sigma: args.sigma,
        limit: args.limit,
        p: args.p,
        q: args.q,
        alpha: args.alpha,
        max_rounds: args.max_rounds,
        seed,
        jitter: args.jitter,
    };
    config.validate()?;
    output::ensure_parent(&args.out)?;
    let result = limitlens_core::cramsim::simulate(&config, args.n)?;
    let provenance = output::provenance(seed, &json!({"command": "simulate", "config": config, "n": args.n}));
    let summary = SimSummary {
        config,
        n_drawn: result.n_drawn,
        n_emitted: result.n_emitted,
        n_abandoned: result.n_abandoned,
        n_edited_emitted: result.n_edited_emitted,
        edited_fraction: result.edited_fraction(),
        true_runover: result.true_runover,
    };
    eprintln!(
        "emitted {} of {} drafts; {} edited to fit",
        result.n_emitted, result.n_drawn, result.n_edited_emitted
    );
    write_file(&args.out, &histogram_csv(&result.histogram, &provenance))?;
    write_file(&sidecar(&args.out, ".summary.json"), &json_document(&provenance, &summary)?)?;
    Ok(Status::Ok)
}

fn fit_failures(series: &DailySeries) -> Vec<String> {
    series
        .gaps
        .iter()
        .filter(|g| g.reason == "fit_error")
        .map(|g| {
            format!(
                "{} on {} failed: {}",
                series.quantity,
                g.day,
                g.detail.as_deref().unwrap_or("")
            )
        })
        .collect()
}

fn daily_cmd(args: &DailyArgs, seed: u64) -> CliResult<Status> {
    let store = load_store(&args.store)?;
    let langs = lang_filter(&args.selection.langs);
    let present = store.days();
    let days = match (args.from, args.to, present.first(), present.last()) {
        (None, None, _, _) => None,
        (Some(from), Some(to), _, _) => Some((from, to)),
        (Some(from), None, _, Some(&last)) => Some((from, last)),
        (None, Some(to), Some(&first), _) => Some((first, to)),
        _ => None,
    };
    let params = DailyParams {
        limits: args.limit.map(LimitSchedule::fixed).unwrap_or_default(),
        model: ModelOptions::default(),
        days,
    };
    let provenance = output::provenance(
        seed,
        &json!({
            "command": "daily",
            "quantity": args.quantity,
            "selection": selection_json(&args.selection),
            "params": params,
            "rolling": args.rolling,
            "resamples": args.resamples,
        }),
    );
    let series = daily_series(&store, args.quantity, &args.selection.devices, langs.as_ref(), &params);
    let rolling = rolling_mean(&series, args.rolling);
    write_file(&args.out, &report::series_csv(&series, &rolling, &provenance))?;
    write_file(&sidecar(&args.out, ".gaps.csv"), &report::gaps_csv(&series, &provenance))?;
    if let Some(svg) = &args.svg {
        let label = args.quantity.to_string();
        let chart = report::series_svg(
            &label,
            &[ChartLine { label: &label, series: &series, rolling: &rolling, color: "steelblue" }],
            Some(limitlens_core::switch_day()),
            &provenance,
        );
        write_file(svg, &chart)?;
    }
    if let Some(ci_path) = &args.ci {
        let ci = bootstrap_ci(&series.values(), args.resamples, 0.95, output::derive_seed(seed, "daily"))?;
        write_file(ci_path, &json_document(&provenance, &ci)?)?;
    }
    eprintln!("{} day(s) with values, {} gap(s)", series.points.len(), series.gaps.len());
    Ok(Status::from_problems(fit_failures(&series)))
}

struct DidSetup {
    treated: BTreeSet<String>,
    control: BTreeSet<String>,
}

fn did_groups(filter: &FilterConfig, treated: &[String], control: &[String]) -> DidSetup {
    let pick = |given: &[String], default: &BTreeSet<String>| {
        if given.is_empty() {
            default.clone()
        } else {
            given.iter().cloned().collect()
        }
    };
    DidSetup {
        treated: pick(treated, &filter.treated),
        control: pick(control, &filter.control),
    }
}

#[derive(Serialize)]
struct DidOutput {
    treated: BTreeSet<String>,
    control: BTreeSet<String>,
    pre: (NaiveDate, NaiveDate),
    post: (NaiveDate, NaiveDate),
    rows: usize,
    estimate: analytics::DiDResult,
}

fn run_did(
    store: &HistStore,
    setup: &DidSetup,
    pre: (NaiveDate, NaiveDate),
    post: (NaiveDate, NaiveDate),
    devices: &[DeviceClass],
) -> CliResult<DidOutput> {
    let panel = build_did_panel(store, &setup.treated, &setup.control, pre, post, devices);
    let estimate = did_estimate(&panel)?;
    Ok(DidOutput {
        treated: setup.treated.clone(),
        control: setup.control.clone(),
        pre,
        post,
        rows: panel.len(),
        estimate,
    })
}

fn did_cmd(args: &DidArgs, seed: u64) -> CliResult<Status> {
    let store = load_store(&args.store)?;
    let filter = load_filter(args.filter.as_deref())?;
    let setup = did_groups(&filter, &args.treated, &args.control);
    let result = run_did(&store, &setup, args.pre, args.post, &args.devices)?;
    let provenance = output::provenance(
        seed,
        &json!({
            "command": "did",
            "treated": setup.treated,
            "control": setup.control,
            "pre": args.pre,
            "post": args.post,
            "devices": args.devices.iter().map(|d| d.as_str()).collect::<Vec<_>>(),
        }),
    );
    emit(args.out.as_deref(), &json_document(&provenance, &result)?)?;
    Ok(Status::Ok)
}

fn threads_cmd(args: &ThreadsArgs, seed: u64) -> CliResult<Status> {
    let corpus = load_corpus(&args.corpus)?;
    let (counter, summary) = ingest::fold_kept(
        &corpus.shards,
        &corpus.classifier,
        || ThreadCounter::new(args.max_k),
        |c, kept| c.observe(&kept.display_text),
        |a, b| a.merge_from(&b),
    );
    report_tally(&summary);
    let estimate = counter.estimate(args.epsilon)?;
    let provenance = output::provenance(
        seed,
        &json!({"command": "threads", "corpus": corpus.config, "epsilon": args.epsilon, "max_k": args.max_k}),
    );
    emit(args.out.as_deref(), &json_document(&provenance, &estimate)?)?;
    Ok(Status::from_problems(shard_problems(&summary)))
}

fn curves_csv(curves: &analytics::CategoryCurves, provenance: &Provenance) -> String {
    let mut out = String::new();
    for line in provenance.lines() {
        let _ = writeln!(out, "# {line}");
    }
    out.push_str("category,length,tweets,freq,enrichment\n");
    for cat in &curves.categories {
        for (length, (&n, (freq, enrichment))) in curves
            .tweets
            .iter()
            .zip(cat.freq.iter().zip(&cat.enrichment))
            .enumerate()
        {
            let (Some(freq), true) = (freq, n > 0) else { continue };
            let enrichment = enrichment.map(|e| format!("{e:?}")).unwrap_or_default();
            let _ = writeln!(out, "{},{length},{n},{freq:?},{enrichment}", cat.name);
        }
    }
    out
}

fn load_lexicon(path: &Path) -> CliResult<(Lexicon, String)> {
    let text = reader::read_to_string(path)?;
    Ok((Lexicon::parse(&text)?, text))
}

fn curves_cmd(args: &CurvesArgs, seed: u64) -> CliResult<Status> {
    let (lexicon, lexicon_text) = load_lexicon(&args.lexicon)?;
    let corpus = load_corpus(&args.corpus)?;
    let (builder, summary) = ingest::fold_kept(
        &corpus.shards,
        &corpus.classifier,
        || CurveBuilder::new(&lexicon),
        |b, kept| b.observe(kept.length.0, &kept.display_text),
        |a, b| a.merge_from(&b),
    );
    report_tally(&summary);
    let provenance = output::provenance(
        seed,
        &json!({"command": "curves", "corpus": corpus.config, "lexicon": lexicon_text}),
    );
    write_file(&args.out, &curves_csv(&builder.finish(), &provenance))?;
    Ok(Status::from_problems(shard_problems(&summary)))
}

fn read_columns(path: &Path, x: &str, y: &str) -> CliResult<(Vec<f64>, Vec<f64>)> {
    let text = reader::read_to_string(path)?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let bad = |msg: String| CliError::Usage(format!("{}: {msg}", path.display()));
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("no column {name:?}")))
    };
    let (ix, iy) = (column(x)?, column(y)?);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let (a, b) = (record.get(ix).unwrap_or(""), record.get(iy).unwrap_or(""));
        if a.is_empty() || b.is_empty() {
            continue;
        }
        let parse = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| bad(format!("row {}: {v:?} is not a number", row + 1)))
        };
        xs.push(parse(a)?);
        ys.push(parse(b)?);
    }
    Ok((xs, ys))
}

#[derive(Serialize)]
struct CorrelateOutput {
    x: String,
    y: String,
    #[serde(flatten)]
    result: analytics::SpearmanResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact_p_value: Option<f64>,
}

fn correlate_cmd(args: &CorrelateArgs, seed: u64) -> CliResult<Status> {
    let (xs, ys) = read_columns(&args.input, &args.x, &args.y)?;
    let result = spearman(&xs, &ys)?;
    let exact_p_value = if args.exact {
        Some(spearman_exact_p(&xs, &ys)?)
    } else {
        None
    };
    let provenance = output::provenance(
        seed,
        &json!({"command": "correlate", "x": args.x, "y": args.y, "exact": args.exact}),
    );
    let out = CorrelateOutput {
        x: args.x.clone(),
        y: args.y.clone(),
        result,
        exact_p_value,
    };
    emit(args.out.as_deref(), &json_document(&provenance, &out)?)?;
    Ok(Status::Ok)
}

struct Accumulated<'a> {
    store: HistStore,
    /// Unweighted code-point lengths, a unit that does not change at the switch.
    codepoints: HistStore,
    threads: ThreadCounter,
    curves: Option<CurveBuilder<'a>>,
}

#[derive(Serialize)]
struct SeriesSummary {
    name: String,
    quantity: Quantity,
    device: DeviceClass,
    days_with_values: usize,
    gaps: Vec<analytics::Gap>,
    /// Bootstrap CIs of the daily mean before and after the switch.
    ci_before_switch: Option<BootstrapCi>,
    ci_after_switch: Option<BootstrapCi>,
}

#[derive(Serialize)]
struct ReportSummary {
    ingest: IngestSummary,
    series: Vec<SeriesSummary>,
    did: Result<DidOutput, String>,
    threads: Result<analytics::ThreadEstimate, String>,
}

const REPORT_DEVICES: [(DeviceClass, &str); 2] =
    [(DeviceClass::Web, "steelblue"), (DeviceClass::Mobile, "darkorange")];

fn report_cmd(args: &ReportArgs, seed: u64) -> CliResult<Status> {
    let lexicon = args.lexicon.as_deref().map(load_lexicon).transpose()?;
    let corpus = load_corpus(&args.corpus)?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| CliError::io(&args.out_dir, e))?;
    let provenance = output::provenance(
        seed,
        &json!({
            "command": "report",
            "corpus": corpus.config,
            "lexicon": lexicon.as_ref().map(|(_, text)| text),
            "rolling": args.rolling,
            "epsilon": args.epsilon,
            "resamples": args.resamples,
            "pre": args.pre,
            "post": args.post,
            "model": ModelOptions::default(),
        }),
    );

    let lexicon_ref = lexicon.as_ref().map(|(lex, _)| lex);
    let max_len = corpus.classifier.max_len;
    let (acc, summary) = ingest::fold_kept(
        &corpus.shards,
        &corpus.classifier,
        || Accumulated {
            store: HistStore::new(max_len),
            codepoints: HistStore::new(max_len),
            threads: ThreadCounter::new(analytics::DEFAULT_MAX_THREAD),
            curves: lexicon_ref.map(CurveBuilder::new),
        },
        |acc, kept| {
            let key = limitlens_core::CohortKey::new(kept.record.day(), kept.record.lang.clone(), kept.device);
            let chars = kept.display_text.chars().count();
            acc.store.add(key.clone(), kept.length.0, 1);
            if chars <= max_len {
                acc.codepoints.add(key, chars, 1);
            }
            acc.threads.observe(&kept.display_text);
            if let Some(curves) = &mut acc.curves {
                curves.observe(kept.length.0, &kept.display_text);
            }
        },
        |acc, other| {
            acc.store.merge_from(&other.store).expect("stores share max_len");
            acc.codepoints.merge_from(&other.codepoints).expect("stores share max_len");
            acc.threads.merge_from(&other.threads);
            if let (Some(a), Some(b)) = (&mut acc.curves, &other.curves) {
                a.merge_from(b);
            }
        },
    );
    report_tally(&summary);
    let mut problems = shard_problems(&summary);
    let out = &args.out_dir;
    write_store_with_summary(&acc.store, &summary, &out.join("store.csv"), &provenance)?;
    acc.codepoints.write_csv(&out.join("store_codepoints.csv"), &provenance.lines())?;

    let params = DailyParams::default();
    let switch = limitlens_core::switch_day();
    let mut series_summaries = Vec::new();
    for (name, quantity) in [
        ("cramming", Quantity::Cramming(None)),
        ("fraction_over_140", Quantity::FractionExceeding(140)),
    ] {
        let mut lines = Vec::new();
        for (device, color) in REPORT_DEVICES {
            let series = daily_series(&acc.store, quantity, &[device], None, &params);
            let rolling = rolling_mean(&series, args.rolling);
            let file = format!("{name}_{device}.csv");
            write_file(&out.join(&file), &report::series_csv(&series, &rolling, &provenance))?;
            problems.extend(fit_failures(&series));
            let ci = |before: bool| {
                let values: Vec<f64> = series
                    .points
                    .iter()
                    .filter(|p| (p.day < switch) == before)
                    .map(|p| p.value)
                    .collect();
                let label = format!("{name}/{device}/{}", if before { "before" } else { "after" });
                bootstrap_ci(&values, args.resamples, 0.95, output::derive_seed(seed, &label)).ok()
            };
            series_summaries.push(SeriesSummary {
                name: file,
                quantity,
                device,
                days_with_values: series.points.len(),
                gaps: series.gaps.clone(),
                ci_before_switch: ci(true),
                ci_after_switch: ci(false),
            });
            lines.push((device, color, series, rolling));
        }
        if !args.no_svg {
            let labels: Vec<String> = lines.iter().map(|(d, ..)| d.to_string()).collect();
            let chart_lines: Vec<ChartLine<'_>> = lines
                .iter()
                .zip(&labels)
                .map(|((_, color, series, rolling), label)| ChartLine {
                    label,
                    series,
                    rolling,
                    color,
                })
                .collect();
            let svg = report::series_svg(name, &chart_lines, Some(switch), &provenance);
            write_file(&out.join(format!("{name}.svg")), &svg)?;
        }
    }

    let filter = &corpus.classifier.filter;
    let setup = did_groups(filter, &[], &[]);
    let did = run_did(
        &acc.codepoints,
        &setup,
        args.pre,
        args.post,
        &[DeviceClass::Web, DeviceClass::Mobile],
    )
    .map_err(|e| e.to_string());
    if let Ok(did) = &did {
        write_file(&out.join("did.json"), &json_document(&provenance, did)?)?;
    }
    let threads = acc.threads.estimate(args.epsilon).map_err(|e| e.to_string());
    if let Ok(threads) = &threads {
        write_file(&out.join("threads.json"), &json_document(&provenance, threads)?)?;
    }
    if let Some(curves) = &acc.curves {
        write_file(&out.join("curves.csv"), &curves_csv(&curves.finish(), &provenance))?;
    }
    let summary = ReportSummary {
        ingest: summary,
        series: series_summaries,
        did,
        threads,
    };
    write_file(&out.join("report.json"), &json_document(&provenance, &summary)?)?;
    Ok(Status::from_problems(problems))
}
