use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use mtmeval::ingest::wmt::convert_wmt;
use mtmeval::stats::{calibrate_tie_eps, random_sysname_means, RNG_ALGORITHM};
use mtmeval::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Config;
use crate::output::{fixed2, pct, print_table, write_outputs, Report, Table};
use crate::{
    BaselineArgs, ClassArgs, ClassifyArgs, CliError, Command, CommonArgs, ConvertArgs,
    CorrelateArgs, FpArgs, HumanArgs, MbrArgs, OptimizeArgs, RerankArgs,
};

const DEFAULT_OUT: &str = "mtmeval-out";

type CliResult<T> = std::result::Result<T, CliError>;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

/// State of one invocation: resolved config, consumed inputs, and the
/// outputs to write once the pipeline has finished.
struct Run {
    config: Config,
    out: PathBuf,
    report: Report,
    tables: Vec<Table>,
    extra: Vec<(PathBuf, Vec<u8>)>,
}

impl Run {
    fn start(command: &str, common: &CommonArgs, inputs: &[&Path]) -> CliResult<Self> {
        if let Some(missing) = inputs.iter().find(|p| !p.is_file()) {
            return Err(CliError::Io(format!("{}: no such file", missing.display())));
        }
        let config = Config::load(common.config.as_deref())?;
        let out = config
            .resolve(common.out.clone(), "out")?
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        let mut report = Report::new(command);
        if let Some(c) = &common.config {
            report.echo("config_file", c.display().to_string());
        }
        Ok(Run {
            config,
            out,
            report,
            tables: Vec::new(),
            extra: Vec::new(),
        })
    }

    fn read(&mut self, path: &Path) -> CliResult<Vec<u8>> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.report
            .inputs
            .push(InputDigest::of(path.display().to_string(), &bytes));
        Ok(bytes)
    }

    fn f64_opt(&self, flag: Option<f64>, key: &str) -> CliResult<Option<f64>> {
        self.config.resolve(flag, key)
    }

    fn human(&mut self, args: &HumanArgs) -> CliResult<HumanInput> {
        self.human_from(args.mqm.as_deref(), args.human.as_deref(), args)
    }

    fn human_from(&mut self, mqm: Option<&Path>, human: Option<&Path>, args: &HumanArgs) -> CliResult<HumanInput> {
        match (mqm, human) {
            (Some(path), None) => {
                let weights = match self.config.resolve(args.weights.clone(), "weights")? {
                    None => MqmWeights::default(),
                    Some(w) => parse_weights(&w)?,
                };
                self.report.echo("mqm_weights_tenths", weights);
                let bytes = self.read(path)?;
                Ok(HumanInput::Annotations(parse_mqm_annotations(bytes.as_slice())?, weights))
            }
            (None, Some(path)) => {
                let bytes = self.read(path)?;
                Ok(HumanInput::Scores(parse_human_scores(bytes.as_slice())?))
            }
            _ => Err(invalid("exactly one of --mqm or --human is required")),
        }
    }

    fn join_mode(&mut self, args: &HumanArgs) -> CliResult<JoinMode> {
        let mode = match self.config.resolve(args.join.clone(), "join")?.as_deref() {
            None | Some("strict") => JoinMode::Strict,
            Some("intersect") => JoinMode::Intersect,
            Some(other) => return Err(invalid(format!("unknown join mode {other:?}"))),
        };
        self.report.echo("join", mode);
        Ok(mode)
    }

    fn score_tables(&mut self, paths: &[PathBuf]) -> CliResult<Vec<ScoreTable>> {
        paths
            .iter()
            .map(|p| {
                let bytes = self.read(p)?;
                parse_segment_scores(bytes.as_slice())
                    .map_err(|e| CliError::from(e).context(p))
            })
            .collect()
    }

    fn finish_dataset(&mut self, ds: Dataset, args: &HumanArgs) -> CliResult<Dataset> {
        let ds = match self.config.resolve(args.lp.clone(), "lp")? {
            Some(lp) => ds.with_lang_pair(lp),
            None => ds,
        };
        self.report.echo("lang_pair", &ds.lang_pair);
        self.report.coverage = ds.coverage.clone();
        Ok(ds.with_provenance(self.report.inputs.clone()))
    }

    fn dataset(&mut self, args: &HumanArgs, scores: &[PathBuf]) -> CliResult<Dataset> {
        let human = self.human(args)?;
        let tables = self.score_tables(scores)?;
        let mode = self.join_mode(args)?;
        let ds = assemble_dataset(human, tables, mode)?;
        self.finish_dataset(ds, args)
    }

    fn class_settings(&mut self, args: &ClassArgs) -> CliResult<Vec<ClassifySettings>> {
        let beta = self.f64_opt(args.beta, "beta")?.unwrap_or(DEFAULT_BETA);
        let mut names = self.config.resolve_list(args.spec.clone(), "spec");
        if names.is_empty() {
            names = vec!["good".into(), "perfect".into()];
        }
        let settings = names
            .iter()
            .map(|n| Ok(ClassifySettings::new(beta, n.parse::<ClassSpec>()?)?))
            .collect::<CliResult<Vec<_>>>()?;
        self.report.echo("beta", beta);
        self.report.echo("spec", settings.iter().map(|s| s.spec).collect::<Vec<_>>());
        Ok(settings)
    }

    fn finish(self) -> CliResult<()> {
        for t in &self.tables {
            print_table(t);
        }
        write_outputs(&self.out, &self.report, &self.tables, &self.extra)?;
        println!("report written to {}", self.out.join("report.json").display());
        Ok(())
    }
}

impl CliError {
    fn context(self, path: &Path) -> Self {
        match self {
            CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
            CliError::Io(m) => CliError::Io(format!("{}: {m}", path.display())),
        }
    }
}

fn parse_weights(raw: &str) -> CliResult<MqmWeights> {
    let parts: Vec<f64> = raw
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| invalid(format!("bad weight {p:?}"))))
        .collect::<CliResult<_>>()?;
    match parts.as_slice() {
        &[nt, major, punct, minor] => Ok(MqmWeights::from_points(nt, major, punct, minor)?),
        _ => Err(invalid("--weights needs four comma-separated values")),
    }
}

pub fn execute(command: Command) -> CliResult<()> {
    match command {
        Command::ConvertWmt(a) => convert(a),
        Command::Classify(a) => classify(a),
        Command::Optimize(a) => optimize(a),
        Command::Rerank(a) => rerank(a),
        Command::Mbr(a) => mbr(a),
        Command::Correlate(a) => correlate(a),
        Command::FpAnalysis(a) => fp_analysis(a),
        Command::RandomBaseline(a) => random_baseline(a),
    }
}

fn human_paths(h: &HumanArgs) -> Vec<&Path> {
    h.mqm.iter().chain(h.human.iter()).map(PathBuf::as_path).collect()
}

fn convert(a: ConvertArgs) -> CliResult<()> {
    let mut run = Run::start("convert-wmt", &a.common, &[&a.input])?;
    let bytes = run.read(&a.input)?;
    let lp = run.config.resolve(a.lp.clone(), "lp")?;
    let mut canonical = Vec::new();
    let summary = convert_wmt(bytes.as_slice(), &mut canonical, lp.as_deref())?;
    crate::output::write_file(&a.output, &canonical)?;
    run.report.echo("output", a.output.display().to_string());
    run.report.rows.push(json!({ "operation": "convert_wmt", "summary": summary }));
    let mut t = Table::new("convert", &["rows", "systems", "segments", "no_error_rows", "dropped_columns"]);
    t.rows.push(vec![
        summary.rows.to_string(),
        summary.systems.to_string(),
        summary.segments.to_string(),
        summary.no_error_rows.to_string(),
        summary.dropped_columns.join(" "),
    ]);
    run.tables.push(t);
    run.finish()
}

#[derive(Serialize)]
struct ClassRow<'a> {
    metric: &'a str,
    class: String,
    human_threshold: f64,
    scenario: &'a str,
    operation: &'a str,
    beta: f64,
    #[serde(flatten)]
    result: &'a ThresholdResult,
}

const CLASS_HEADER: &[&str] = &["metric", "class", "scenario", "tau", "P", "R", "F"];

fn push_class_row(
    run: &mut Run,
    table: &mut Table,
    metric: &str,
    settings: &ClassifySettings,
    scenario: &str,
    operation: &str,
    result: &ThresholdResult,
) {
    let row = ClassRow {
        metric,
        class: settings.spec.label(),
        human_threshold: settings.spec.human_threshold,
        scenario,
        operation,
        beta: settings.beta,
        result,
    };
    run.report.rows.push(serde_json::to_value(&row).unwrap_or(Value::Null));
    table.rows.push(vec![
        metric.to_string(),
        settings.spec.label(),
        scenario.to_string(),
        fixed2(Some(result.tau)),
        pct(result.precision),
        pct(result.recall),
        pct(result.f),
    ]);
}

/// `(metric, class label) → τ` from an earlier report.json.
fn thresholds_from_report(bytes: &[u8]) -> CliResult<BTreeMap<(String, String), f64>> {
    let v: Value = serde_json::from_slice(bytes).map_err(|e| invalid(format!("thresholds report: {e}")))?;
    let rows = v["rows"].as_array().ok_or_else(|| invalid("thresholds report has no rows"))?;
    let mut out = BTreeMap::new();
    for r in rows {
        if let (Some(m), Some(c), Some(t)) = (r["metric"].as_str(), r["class"].as_str(), r["tau"].as_f64()) {
            out.insert((m.to_string(), c.to_string()), t);
        }
    }
    Ok(out)
}

fn classify(a: ClassifyArgs) -> CliResult<()> {
    let mut inputs = human_paths(&a.human);
    inputs.extend(a.scores.iter().map(PathBuf::as_path));
    inputs.extend(a.thresholds.iter().map(PathBuf::as_path));
    let mut run = Run::start("classify", &a.common, &inputs)?;
    let ds = run.dataset(&a.human, &a.scores)?;
    let settings = run.class_settings(&a.class)?;
    let thresholds = match &a.thresholds {
        Some(p) => {
            let bytes = run.read(p)?;
            Some(thresholds_from_report(&bytes)?)
        }
        None => None,
    };
    if a.tau.is_none() && thresholds.is_none() {
        return Err(invalid("classify needs --tau or --thresholds"));
    }
    run.report.echo("tau", a.tau);

    let mut table = Table::new("classify", CLASS_HEADER);
    for metric in ds.metric_names() {
        for s in &settings {
            let tau = match (&thresholds, a.tau) {
                (Some(map), _) => *map.get(&(metric.to_string(), s.spec.label())).ok_or_else(|| {
                    invalid(format!("no threshold for {metric} / {} in report", s.spec.label()))
                })?,
                (None, Some(t)) => t,
                (None, None) => unreachable!(),
            };
            let result = evaluate_with_threshold(&ds, metric, tau, s)?;
            push_class_row(&mut run, &mut table, metric, s, "fixed", "evaluate_with_threshold", &result);
        }
    }
    run.tables.push(table);
    run.finish()
}

fn optimize(a: OptimizeArgs) -> CliResult<()> {
    let mut inputs = human_paths(&a.human);
    inputs.extend(a.scores.iter().map(PathBuf::as_path));
    inputs.extend(a.dev_mqm.iter().chain(a.dev_human.iter()).chain(a.dev_scores.iter()).map(PathBuf::as_path));
    let mut run = Run::start("optimize", &a.common, &inputs)?;
    let ds = run.dataset(&a.human, &a.scores)?;
    let settings = run.class_settings(&a.class)?;

    let dev_given = a.dev_mqm.is_some() || a.dev_human.is_some() || !a.dev_scores.is_empty();
    let dev = if dev_given {
        if a.dev_scores.is_empty() {
            return Err(invalid("--dev-scores is required with a development set"));
        }
        let human = run.human_from(a.dev_mqm.as_deref(), a.dev_human.as_deref(), &a.human)?;
        let tables = run.score_tables(&a.dev_scores)?;
        let mode = run.join_mode(&a.human)?;
        Some(assemble_dataset(human, tables, mode)?)
    } else {
        None
    };

    let mut table = Table::new("optimize", CLASS_HEADER);
    for metric in ds.metric_names() {
        for s in &settings {
            match &dev {
                None => {
                    let r = optimize_threshold(&ds, metric, s)?;
                    push_class_row(&mut run, &mut table, metric, s, "test", "optimize_threshold", &r);
                }
                Some(dev) => {
                    if dev.metric(metric).is_err() {
                        return Err(invalid(format!("metric {metric} missing from the development set")));
                    }
                    let tuned = optimize_threshold(dev, metric, s)?;
                    let r = evaluate_with_threshold(&ds, metric, tuned.tau, s)?;
                    push_class_row(
                        &mut run,
                        &mut table,
                        metric,
                        s,
                        "dev",
                        "optimize_threshold(dev) + evaluate_with_threshold(test)",
                        &r,
                    );
                }
            }
        }
    }
    run.tables.push(table);
    run.finish()
}

fn rerank_row(run: &mut Run, table: &mut Table, metric: &str, scenario: &str, op: &str, r: &RerankReport) {
    run.report.rows.push(json!({
        "metric": metric,
        "scenario": scenario,
        "operation": op,
        "rrp": r.rrp,
        "avg_selected_mqm": r.avg_selected_mqm,
        "segments": r.per_seg.len(),
        "per_seg": r.per_seg,
    }));
    table.rows.push(vec![
        metric.to_string(),
        pct(Some(r.rrp)),
        fixed2(Some(r.avg_selected_mqm)),
    ]);
}

fn rerank(a: RerankArgs) -> CliResult<()> {
    let mut inputs = human_paths(&a.human);
    inputs.extend(a.scores.iter().map(PathBuf::as_path));
    let mut run = Run::start("rerank", &a.common, &inputs)?;
    let ds = run.dataset(&a.human, &a.scores)?;
    let tie_tol = run.f64_opt(a.tie_tol, "tie-tol")?.unwrap_or(0.0);
    run.report.echo("tie_tol", tie_tol);
    let mut table = Table::new("rerank", &["metric", "RRP", "Avg"]);
    for metric in ds.metric_names() {
        let r = rerank_report(&ds, metric, tie_tol)?;
        rerank_row(&mut run, &mut table, metric, "qe", "rerank_report", &r);
    }
    run.tables.push(table);
    run.finish()
}

fn mbr(a: MbrArgs) -> CliResult<()> {
    let mut inputs = human_paths(&a.human);
    inputs.extend(a.pairwise.iter().map(PathBuf::as_path));
    let mut run = Run::start("mbr", &a.common, &inputs)?;
    let human = run.human(&a.human)?;
    let ds = Dataset::human_only(human)?;
    let ds = run.finish_dataset(ds, &a.human)?;
    let tie_tol = run.f64_opt(a.tie_tol, "tie-tol")?.unwrap_or(0.0);
    run.report.echo("tie_tol", tie_tol);
    let mut table = Table::new("mbr", &["metric", "RRP", "Avg"]);
    for path in &a.pairwise {
        let bytes = run.read(path)?;
        let pairwise = parse_pairwise_scores(bytes.as_slice()).map_err(|e| CliError::from(e).context(path))?;
        if !pairwise.self_pairs.is_empty() {
            run.report.echo(
                &format!("self_pairs_ignored.{}", pairwise.metric),
                pairwise.self_pairs.len(),
            );
        }
        let r = mbr_rerank_report(&ds, &pairwise, tie_tol)?;
        rerank_row(&mut run, &mut table, &pairwise.metric, "mbr", "mbr_rerank_report", &r);
    }
    run.tables.push(table);
    run.finish()
}

fn correlate(a: CorrelateArgs) -> CliResult<()> {
    let mut inputs = human_paths(&a.human);
    inputs.extend(a.scores.iter().map(PathBuf::as_path));
    let mut run = Run::start("correlate", &a.common, &inputs)?;
    let ds = run.dataset(&a.human, &a.scores)?;
    let tie_eps = run.f64_opt(a.tie_eps, "tie-eps")?.unwrap_or(0.0);
    let coefficients: Vec<Coefficient> = if a.coefficient.is_empty() {
        Coefficient::ALL.to_vec()
    } else {
        a.coefficient.iter().map(|c| c.parse()).collect::<mtmeval::Result<_>>()?
    };
    run.report.echo("tie_eps", tie_eps);
    run.report.echo("coefficients", &coefficients);
    let mut table = Table::new(
        "correlate",
        &["metric", "coefficient", "value", "groups_used", "groups_skipped", "tie_eps"],
    );
    for metric in ds.metric_names() {
        let mut results = Vec::new();
        for &c in &coefficients {
            results.push((c.to_string(), segment_grouped_correlation(&ds, metric, c, tie_eps)?));
        }
        if a.calibrate_eps {
            results.push(("acc_eq_calibrated".to_string(), calibrate_tie_eps(&ds, metric)?));
        }
        for (name, r) in results {
            run.report.rows.push(json!({
                "metric": metric,
                "coefficient": name,
                "operation": "segment_grouped_correlation",
                "value": r.value,
                "groups_used": r.groups_used,
                "groups_skipped": r.groups_skipped,
                "tie_eps": r.tie_eps,
            }));
            table.rows.push(vec![
                metric.to_string(),
                name,
                format!("{:.4}", r.value),
                r.groups_used.to_string(),
                r.groups_skipped.to_string(),
                r.tie_eps.to_string(),
            ]);
        }
    }
    run.tables.push(table);
    run.finish()
}

fn fp_analysis(a: FpArgs) -> CliResult<()> {
    let mut inputs = human_paths(&a.human);
    inputs.push(&a.scores);
    let mut run = Run::start("fp-analysis", &a.common, &inputs)?;
    let ds = run.dataset(&a.human, std::slice::from_ref(&a.scores))?;
    let settings = run.class_settings(&a.class)?;
    let [s] = settings.as_slice() else {
        return Err(invalid("fp-analysis takes exactly one --spec"));
    };
    let bin_width = run.f64_opt(a.bin_width, "bin-width")?.unwrap_or(1.0);
    run.report.echo("bin_width", bin_width);
    let metric = ds.metric_names().next().expect("one table").to_string();
    let (tau, source) = match a.tau {
        Some(t) => (t, "given"),
        None => (optimize_threshold(&ds, &metric, s)?.tau, "optimize_threshold"),
    };
    let stats = fp_delta_distribution(&ds, &metric, tau, &s.spec, bin_width)?;
    run.report.rows.push(json!({
        "metric": metric,
        "class": s.spec.label(),
        "human_threshold": s.spec.human_threshold,
        "operation": "fp_delta_distribution",
        "tau": tau,
        "tau_source": source,
        "false_positives": stats.deltas.len(),
        "mean": stats.mean,
        "stddev": stats.stddev,
        "histogram": stats.histogram,
        "deltas": stats.deltas,
    }));
    let mut table = Table::new("fp_analysis", &["metric", "class", "tau", "false_positives", "mean", "stddev"]);
    table.rows.push(vec![
        metric.clone(),
        s.spec.label(),
        fixed2(Some(tau)),
        stats.deltas.len().to_string(),
        fixed2(stats.mean),
        fixed2(stats.stddev),
    ]);
    run.tables.push(table);
    run.extra.push((PathBuf::from("histogram.csv"), stats.histogram_csv().into_bytes()));
    run.finish()
}

fn random_baseline(a: BaselineArgs) -> CliResult<()> {
    let inputs = human_paths(&a.human);
    let mut run = Run::start("random-baseline", &a.common, &inputs)?;
    let defaults = RandomBaselineParams::default();
    let params = RandomBaselineParams {
        mean_low: run.f64_opt(a.mean_low, "mean-low")?.unwrap_or(defaults.mean_low),
        mean_high: run.f64_opt(a.mean_high, "mean-high")?.unwrap_or(defaults.mean_high),
        stddev: run.f64_opt(a.stddev, "stddev")?.unwrap_or(defaults.stddev),
        seed: run.config.resolve(a.seed, "seed")?.unwrap_or(defaults.seed),
    };
    run.report.echo("params", params);
    run.report.echo("rng", RNG_ALGORITHM);

    let human_given = a.human.mqm.is_some() || a.human.human.is_some();
    let dataset = if human_given {
        let human = run.human(&a.human)?;
        let ds = Dataset::human_only(human)?;
        Some(run.finish_dataset(ds, &a.human)?)
    } else {
        None
    };
    let (systems, segs): (Vec<String>, Vec<u64>) = match &dataset {
        Some(ds) => (ds.systems.clone(), ds.segs.clone()),
        None => ((0..a.systems).map(|i| format!("sys{i:02}")).collect(), (0..a.segs).collect()),
    };
    run.report.echo("systems", &systems);
    run.report.echo("segments", segs.len());

    let mut table = random_sysname(&systems, &segs, &params)?;
    let means = random_sysname_means(&systems, &params)?;
    run.report.rows.push(json!({
        "operation": "random_sysname",
        "metric": table.metric,
        "system_means": systems.iter().zip(&means).map(|(s, m)| (s.clone(), *m)).collect::<BTreeMap<_, _>>(),
    }));

    if let Some(ds) = dataset {
        let keys: BTreeSet<&SegKey> = ds.human.keys().collect();
        table.scores.retain(|k, _| keys.contains(k));
        let ds = ds.with_metric(table.clone())?;
        let settings = run.class_settings(&a.class)?;
        let min = table.scores.values().copied().fold(f64::INFINITY, f64::min);
        let mut out = Table::new("random_baseline", CLASS_HEADER);
        for s in &settings {
            let best = optimize_threshold(&ds, &table.metric, s)?;
            push_class_row(&mut run, &mut out, &table.metric, s, "test", "optimize_threshold", &best);
            let floor = evaluate_with_threshold(&ds, &table.metric, min, s)?;
            push_class_row(&mut run, &mut out, &table.metric, s, "tau=min", "evaluate_with_threshold", &floor);
        }
        run.tables.push(out);
    }

    let mut tsv = Vec::new();
    table.write_tsv(&mut tsv)?;
    run.extra.push((PathBuf::from("scores.tsv"), tsv));
    run.finish()
}
