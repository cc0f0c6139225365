//! `mediatrix`: exact truth, identification, simulation and estimation for
//! discrete mediation models.
//!
//! Exit codes: 0 ok, 1 I/O or internal, 2 model/usage/syntax/data errors,
//! 3 positivity violation, 4 enumeration size cap, 5 estimation failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use mediatrix::data::{sample_dataset, BoundDataset, SamplerConfig};
use mediatrix::effects::{self, Decomposition, EffectReport, EffectsError, Identified};
use mediatrix::engine::{Condition, EngineError, Limits};
use mediatrix::estimation::{self, EstimationError, EstimatorResult, Source, BOOTSTRAP_RESAMPLES};
use mediatrix::identification::{classify, DagView, Family, LadderReport};
use mediatrix::io::{self, IoError};
use mediatrix::report::{ladder_entries, ComparisonEntry, EffectEntry, EstimateEntry, Report, UnitEntry, Z_FLAG};
use mediatrix::syntax::{self, SyntaxError};
use mediatrix::{Engine, Scm, Value, WorldSpec};

#[derive(Parser)]
#[command(name = "mediatrix", version, about = "Causal mediation effects for discrete structural causal models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact effects by enumerating every unit of the model.
    Truth(TruthArgs),
    /// Graphical identification ladder for each effect family.
    Identify(IdentifyArgs),
    /// Draw an observational dataset (CSV) from the model.
    Simulate(SimulateArgs),
    /// Estimate effects from a dataset.
    Estimate(EstimateArgs),
    /// Truth versus estimates on a simulated dataset.
    Compare(CompareArgs),
}

#[derive(Args)]
#[group(id = "model_source", required = true, multiple = false)]
struct ModelArg {
    /// Model file (JSON).
    #[arg(value_name = "MODEL", group = "model_source")]
    path: Option<PathBuf>,
    /// Model file (JSON), as a flag.
    #[arg(short = 'm', long = "model", value_name = "MODEL", group = "model_source")]
    flag: Option<PathBuf>,
}

impl ModelArg {
    fn path(&self) -> &Path {
        self.path.as_deref().or(self.flag.as_deref()).expect("clap enforces a model")
    }
}

#[derive(Args)]
struct TruthArgs {
    #[command(flatten)]
    model: ModelArg,
    /// Natural effects (both decompositions).
    #[arg(long)]
    natural: bool,
    /// Interventional effects.
    #[arg(long)]
    interventional: bool,
    /// Controlled direct effect at mediator value M.
    #[arg(long, value_name = "M")]
    cde: Vec<String>,
    /// Generalized interventional direct effect, e.g. `obs(0|C)`.
    #[arg(long, value_name = "SPEC")]
    gide: Vec<String>,
    /// Custom contrast `left || right [| condition]`.
    #[arg(long, value_name = "EXPR")]
    contrast: Vec<String>,
    /// Per-unit potential outcomes.
    #[arg(long)]
    units: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct IdentifyArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArg,
    /// Number of rows (at least 1).
    #[arg(short = 'n', value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(short = 'o', long = "out")]
    out: Option<PathBuf>,
    /// Also write latent columns.
    #[arg(long)]
    include_latents: bool,
}

#[derive(Args)]
#[group(id = "data_source", required = true, multiple = false)]
struct DataArg {
    /// Dataset file (CSV).
    #[arg(value_name = "DATA", group = "data_source")]
    path: Option<PathBuf>,
    #[arg(short = 'd', long = "data", value_name = "DATA", group = "data_source")]
    flag: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    data: DataArg,
    /// Model file; defaults to the `# model:` provenance line of the dataset.
    #[arg(short = 'm', long = "model")]
    model: Option<PathBuf>,
    #[arg(long)]
    natural: bool,
    #[arg(long)]
    interventional: bool,
    #[arg(long, value_name = "M")]
    cde: Vec<String>,
    #[arg(long, value_name = "SPEC")]
    gide: Vec<String>,
    /// Linear-model product of coefficients, checked against the model's NIE(1.).
    #[arg(long)]
    traditional: bool,
    /// Estimate natural effects even when they are not identified.
    #[arg(long)]
    force: bool,
    /// Bootstrap seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = BOOTSTRAP_RESAMPLES)]
    bootstrap: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(short = 'n', default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = BOOTSTRAP_RESAMPLES)]
    bootstrap: usize,
    #[arg(long)]
    traditional: bool,
    #[arg(long)]
    force: bool,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct Usage(String);

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Truth(a) => truth(a),
        Command::Identify(a) => identify(a),
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::Compare(a) => compare(a),
    };
    match result {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn engine_code(e: &EngineError) -> u8 {
    match e {
        EngineError::SupportTooLarge { .. } => 4,
        EngineError::PositivityViolation(_) => 3,
        _ => 2,
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<EngineError>() {
            return engine_code(e);
        }
        if let Some(e) = cause.downcast_ref::<EffectsError>() {
            return match e {
                EffectsError::Engine(e) => engine_code(e),
                EffectsError::IdentityViolated(_) => 1,
            };
        }
        if let Some(e) = cause.downcast_ref::<EstimationError>() {
            return match e {
                EstimationError::Engine(e) => engine_code(e),
                EstimationError::InvalidInput(_) => 2,
                _ => 5,
            };
        }
        if let Some(e) = cause.downcast_ref::<IoError>() {
            return if matches!(e, IoError::Io { .. }) { 1 } else { 2 };
        }
        if cause.is::<SyntaxError>() || cause.is::<Usage>() || cause.is::<mediatrix::data::DataError>() {
            return 2;
        }
    }
    1
}

// ---------------------------------------------------------------------------
// Formatting
// ---------------------------------------------------------------------------

/// Fixed ten decimals with trailing zeros trimmed.
fn num(x: f64) -> String {
    let s = format!("{x:.10}");
    let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.') } else { &s };
    if s == "-0" { "0".into() } else { s.to_string() }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_else(|| "-".into())
}

fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        let mut s = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ");
        s.truncate(s.trim_end().len());
        s.push('\n');
        s
    };
    let mut out = line(header.to_vec());
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    out
}

fn ladder_lines(ladder: &LadderReport) -> String {
    let mut out = String::new();
    for r in &ladder.rungs {
        out.push_str(&format!("{r}\n"));
    }
    for w in &ladder.warnings {
        out.push_str(&format!("warning: {w}\n"));
    }
    out
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn load_model(path: &Path) -> Result<Scm> {
    io::read_scm(path).with_context(|| format!("model {}", path.display()))
}

fn ladder_of(scm: &Scm) -> LadderReport {
    classify(&DagView::of(scm))
}

fn status(ladder: &LadderReport, family: Family) -> Identified {
    if ladder.identified(family) {
        Identified::Yes
    } else {
        Identified::No
    }
}

/// Family whose rung governs an effect label; `None` for custom contrasts.
fn family_of(label: &str) -> Option<Family> {
    let head = label.split('(').next().unwrap_or(label);
    match head {
        "TE" => Some(Family::Te),
        "CDE" | "GIDE" => Some(Family::CdeGide),
        "IDE" | "IIE" | "OE" => Some(Family::IdeIie),
        "NDE" | "NIE" => Some(Family::NdeNie),
        _ => None,
    }
}

fn annotate(ladder: &LadderReport, label: &str) -> String {
    match family_of(label) {
        Some(f) => status(ladder, f).to_string(),
        None => Identified::Unchecked.to_string(),
    }
}

fn parse_value(text: &str) -> Value {
    Value::parse_token(text.trim())
}

// ---------------------------------------------------------------------------
// truth
// ---------------------------------------------------------------------------

fn truth(args: TruthArgs) -> Result<String> {
    let path = args.model.path();
    let scm = load_model(path)?;
    let specs = args
        .gide
        .iter()
        .map(|s| syntax::parse_spec::<f64>(s))
        .collect::<Result<Vec<_>, _>>()?;
    let contrasts = args
        .contrast
        .iter()
        .map(|s| syntax::parse_contrast::<f64>(s))
        .collect::<Result<Vec<_>, _>>()?;
    let ladder = ladder_of(&scm);
    let engine = Engine::new(&scm, Limits::from_env())?;

    let everything = !(args.natural || args.interventional) && args.cde.is_empty() && specs.is_empty() && contrasts.is_empty();
    let mut reports: Vec<EffectReport<f64>> = Vec::new();
    reports.push(effects::total_effect(&engine)?.with_identified(status(&ladder, Family::Te)));
    if everything || args.natural {
        let nat = status(&ladder, Family::NdeNie);
        for d in [Decomposition::DirectIndirect, Decomposition::IndirectDirect] {
            let e = effects::natural_effects(&engine, d)?;
            let (first, second) = match d {
                Decomposition::DirectIndirect => (e.direct, e.indirect),
                Decomposition::IndirectDirect => (e.indirect, e.direct),
            };
            reports.push(first.with_identified(nat));
            reports.push(second.with_identified(nat));
        }
    }
    if everything || args.interventional {
        let int = status(&ladder, Family::IdeIie);
        let e = effects::interventional_effects(&engine)?;
        reports.extend(e.reports().into_iter().map(|r| r.clone().with_identified(int)));
    }
    let cde = status(&ladder, Family::CdeGide);
    for m in &args.cde {
        reports.push(effects::controlled_direct_effect(&engine, &parse_value(m))?.with_identified(cde));
    }
    for spec in &specs {
        reports.push(effects::generalized_ide(&engine, spec)?.with_identified(cde));
    }
    for q in &contrasts {
        reports.push(effects::general_contrast(&engine, q)?);
    }

    // The observational contrast, to set against TE.
    let a_name = scm.variable(scm.exposure()).name.clone();
    let natural = WorldSpec::natural();
    let exposed = Condition::new().and(a_name.clone(), Value::Int(1));
    let unexposed = Condition::new().and(a_name.clone(), Value::Int(0));
    let y1 = engine.expected_outcome(&natural, Some(&exposed))?;
    let y0 = engine.expected_outcome(&natural, Some(&unexposed))?;
    let naive = EffectEntry {
        label: "naive".into(),
        value: y1 - y0,
        left_mean: y1,
        right_mean: y0,
        condition: format!("{a_name}=1 vs {a_name}=0"),
        identification: "observational".into(),
    };

    let mut report = Report::new("truth");
    report.model = Some(scm.name.clone());
    report.effects = reports.iter().map(EffectEntry::from).collect();
    report.effects.push(naive.clone());
    if args.units {
        report.units = effects::individual_natural_effects(&engine)?.iter().map(UnitEntry::from).collect();
    }
    report.ladder = ladder_entries(&ladder);
    report.warnings = ladder.warnings.clone();
    if args.json {
        return Ok(report.to_json());
    }

    let te = reports[0].value;
    let mut out = format!("model: {}\nunits: {}\n\n", scm.name, engine.units().len());
    let rows: Vec<Vec<String>> = report
        .effects
        .iter()
        .map(|e| {
            vec![
                e.label.clone(),
                num(e.value),
                num(e.left_mean),
                num(e.right_mean),
                e.condition.clone(),
                e.identification.clone(),
            ]
        })
        .collect();
    out.push_str(&table(&["effect", "value", "E[left]", "E[right]", "condition", "identification"], &rows));
    if (naive.value - te).abs() > 1e-12 {
        out.push_str(&format!(
            "\nnaive difference E[Y|{a_name}=1] - E[Y|{a_name}=0] = {} differs from TE = {} (confounding)\n",
            num(naive.value),
            num(te)
        ));
    }
    if args.units {
        out.push('\n');
        let rows: Vec<Vec<String>> = report
            .units
            .iter()
            .map(|u| {
                vec![
                    u.unit.clone(),
                    num(u.probability),
                    u.m0.clone(),
                    u.m1.clone(),
                    num(u.y0),
                    num(u.y1_m0),
                    num(u.y1),
                    num(u.nde),
                    num(u.nie),
                ]
            })
            .collect();
        out.push_str(&table(
            &["unit", "P", "M(0)", "M(1)", "Y(0,M(0))", "Y(1,M(0))", "Y(1,M(1))", "NDE", "NIE"],
            &rows,
        ));
    }
    out.push('\n');
    out.push_str(&ladder_lines(&ladder));
    Ok(out)
}

// ---------------------------------------------------------------------------
// identify
// ---------------------------------------------------------------------------

fn identify(args: IdentifyArgs) -> Result<String> {
    let scm = load_model(args.model.path())?;
    let ladder = ladder_of(&scm);
    if args.json {
        let mut report = Report::new("identify");
        report.model = Some(scm.name.clone());
        report.ladder = ladder_entries(&ladder);
        report.warnings = ladder.warnings.clone();
        return Ok(report.to_json());
    }
    Ok(ladder_lines(&ladder))
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn simulate(args: SimulateArgs) -> Result<String> {
    let path = args.model.path();
    let scm = load_model(path)?;
    let n = usize::try_from(args.n).map_err(|_| Usage(format!("n = {} is too large", args.n)))?;
    let mut config = SamplerConfig::new(n, args.seed);
    config.include_latents = args.include_latents;
    let mut dataset = sample_dataset(&scm, &scm.name, config);
    dataset.provenance.model = Some(path.display().to_string());
    match &args.out {
        Some(out) => {
            io::write_dataset(&dataset, out)?;
            eprintln!("wrote {n} rows to {}", out.display());
            Ok(String::new())
        }
        None => Ok(io::dataset_to_string(&dataset)),
    }
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

/// The dataset's recorded model path, as given or relative to the dataset.
fn provenance_model(data_path: &Path, recorded: &str) -> PathBuf {
    let direct = PathBuf::from(recorded);
    if direct.exists() {
        return direct;
    }
    match data_path.parent() {
        Some(dir) if dir.join(recorded).exists() => dir.join(recorded),
        _ => direct,
    }
}

struct Selection<'a> {
    natural: bool,
    interventional: bool,
    cde: &'a [String],
    gide: &'a [String],
    force: bool,
}

fn run_estimators(data: &BoundDataset, seed: u64, resamples: usize, sel: &Selection<'_>) -> Result<Vec<EstimatorResult<f64>>> {
    let specs = sel
        .gide
        .iter()
        .map(|s| syntax::parse_spec::<f64>(s))
        .collect::<Result<Vec<_>, _>>()?;
    let source = || Source::Data { data, seed, resamples };
    let mut out = vec![estimation::plug_in_te(source())?, estimation::naive_difference(source())?];
    if sel.natural {
        out.extend(estimation::mediation_formula_natural(source(), sel.force)?);
    }
    if sel.interventional {
        out.extend(estimation::mediation_formula_interventional(source())?);
    }
    for m in sel.cde {
        out.push(estimation::cde_estimator(source(), &parse_value(m))?);
    }
    for spec in &specs {
        out.push(estimation::gide_estimator(source(), spec)?);
    }
    Ok(out)
}

fn estimate_rows(results: &[EstimateEntry], ladder: &LadderReport) -> String {
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            let ident = if r.label == "naive" {
                "observational".to_string()
            } else if r.label.starts_with("indirect") {
                "linear model".to_string()
            } else {
                annotate(ladder, &r.label)
            };
            vec![
                r.label.clone(),
                num(r.estimate),
                opt(r.standard_error),
                r.n.map(|n| n.to_string()).unwrap_or_else(|| "-".into()),
                // The bootstrap details are in the header.
                r.method.split(" (bootstrap").next().unwrap_or(&r.method).to_string(),
                ident,
            ]
        })
        .collect();
    table(&["estimate", "value", "se", "n", "method", "identification"], &rows)
}

fn warnings_block(warnings: &[String]) -> String {
    warnings.iter().map(|w| format!("warning: {w}\n")).collect()
}

fn push_unique(into: &mut Vec<String>, items: impl IntoIterator<Item = String>) {
    for w in items {
        if !into.contains(&w) {
            into.push(w);
        }
    }
}

/// Runs the product-of-coefficients method and compares it with the exact
/// NIE(1.) when the model can be enumerated.
fn traditional_block(scm: &Scm, data: &BoundDataset, report: &mut Report) -> Result<String> {
    let t = estimation::traditional_product_of_coefficients::<f64>(data)?;
    let mut out = String::from("\nlinear models (C entered linearly)\n");
    let coef = |name: &str, c: &estimation::Coefficient<f64>| vec![name.to_string(), num(c.estimate), num(c.standard_error)];
    out.push_str(&table(
        &["coefficient", "value", "se"],
        &[
            coef("a: A in M ~ A + C", &t.a_coef),
            coef("b: M in Y ~ A + M + C", &t.b_coef),
            coef("c': A in Y ~ A + M + C", &t.c_prime),
            coef("total: A in Y ~ A + C", &t.total),
        ],
    ));
    report.estimates.push(EstimateEntry::from(&t.product));
    report.estimates.push(EstimateEntry::from(&t.difference_method));
    push_unique(&mut report.warnings, t.warnings.iter().cloned());
    match Engine::new(scm, Limits::from_env()).and_then(|engine| {
        let nat = effects::natural_effects(&engine, Decomposition::DirectIndirect).map_err(|e| match e {
            EffectsError::Engine(e) => e,
            other => EngineError::InvalidWorld(other.to_string()),
        })?;
        Ok(nat.indirect.value)
    }) {
        Ok(truth) => {
            let cmp = ComparisonEntry::new("indirect (a*b) vs NIE(1.)", truth, t.product.estimate, t.product.standard_error);
            out.push_str(&format!(
                "indirect (a*b) = {} (se {}), exact NIE(1.) = {}, z = {}\n",
                num(t.product.estimate),
                opt(t.product.standard_error),
                num(truth),
                opt(cmp.z)
            ));
            if cmp.flagged {
                out.push_str(&format!(
                    "BIAS: the product of coefficients deviates from NIE(1.) by more than {Z_FLAG} standard errors\n"
                ));
            }
            report.comparisons.push(cmp);
        }
        Err(e) => report.warnings.push(format!("no exact NIE(1.) to check the linear estimate against: {e}")),
    }
    Ok(out)
}

fn estimate(args: EstimateArgs) -> Result<String> {
    let data_path = args.data.path.as_deref().or(args.data.flag.as_deref()).expect("clap enforces data");
    let dataset = io::read_dataset(data_path).with_context(|| format!("dataset {}", data_path.display()))?;
    let model_path = match (&args.model, &dataset.provenance.model) {
        (Some(p), _) => p.clone(),
        (None, Some(recorded)) => provenance_model(data_path, recorded),
        (None, None) => {
            return Err(Usage("the dataset records no model; pass one with -m/--model".into()).into());
        }
    };
    let scm = load_model(&model_path)?;
    let data = dataset.bind(&scm).with_context(|| format!("dataset {}", data_path.display()))?;
    let ladder = ladder_of(&scm);
    let sel = Selection {
        natural: args.natural,
        interventional: args.interventional,
        cde: &args.cde,
        gide: &args.gide,
        force: args.force,
    };
    let results = run_estimators(&data, args.seed, args.bootstrap, &sel)?;

    let mut report = Report::new("estimate");
    report.model = Some(scm.name.clone());
    report.seed = Some(args.seed);
    report.n = Some(data.len());
    report.estimates = results.iter().map(EstimateEntry::from).collect();
    for r in &results {
        push_unique(&mut report.warnings, r.warnings.iter().cloned());
    }
    let traditional = if args.traditional { traditional_block(&scm, &data, &mut report)? } else { String::new() };
    report.ladder = ladder_entries(&ladder);
    if args.json {
        return Ok(report.to_json());
    }
    let mut out = format!("model: {}\nrows: {}\nbootstrap: {} resamples, seed {}\n\n", scm.name, data.len(), args.bootstrap, args.seed);
    let (main, linear): (Vec<_>, Vec<_>) = report.estimates.iter().cloned().partition(|e| !e.label.starts_with("indirect"));
    out.push_str(&estimate_rows(&main, &ladder));
    out.push_str(&traditional);
    if !linear.is_empty() {
        out.push_str(&estimate_rows(&linear, &ladder));
    }
    out.push('\n');
    out.push_str(&warnings_block(&report.warnings));
    out.push_str(&ladder_lines(&ladder));
    Ok(out)
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

fn compare(args: CompareArgs) -> Result<String> {
    let path = args.model.path();
    let scm = load_model(path)?;
    let ladder = ladder_of(&scm);
    let engine = Engine::new(&scm, Limits::from_env())?;

    let mut truths: Vec<EffectReport<f64>> = vec![effects::total_effect(&engine)?];
    let d = effects::natural_effects(&engine, Decomposition::DirectIndirect)?;
    let i = effects::natural_effects(&engine, Decomposition::IndirectDirect)?;
    truths.extend([d.direct, d.indirect, i.direct, i.indirect]);
    truths.extend(effects::interventional_effects(&engine)?.reports().into_iter().cloned());

    let n = usize::try_from(args.n).map_err(|_| Usage(format!("n = {} is too large", args.n)))?;
    let dataset = sample_dataset(&scm, &scm.name, SamplerConfig::new(n, args.seed));
    let data = dataset.bind(&scm)?;
    let source = || Source::Data {
        data: &data,
        seed: args.seed,
        resamples: args.bootstrap,
    };

    let mut report = Report::new("compare");
    report.model = Some(scm.name.clone());
    report.seed = Some(args.seed);
    report.n = Some(n);

    // A failing estimator group (refusal, empty cell) leaves its rows
    // without an estimate instead of aborting the comparison.
    let mut estimates = Vec::new();
    let mut failures: Vec<(Vec<&str>, String)> = Vec::new();
    let mut gather = |labels: Vec<&'static str>, r: Result<Vec<EstimatorResult<f64>>, EstimationError>| match r {
        Ok(r) => estimates.extend(r),
        Err(EstimationError::RefusedNotIdentified(why)) => failures.push((labels, format!("refused: {why} (use --force)"))),
        Err(e) => failures.push((labels, e.to_string())),
    };
    gather(vec!["TE"], estimation::plug_in_te(source()).map(|r| vec![r]));
    gather(
        vec!["NDE(.0)", "NIE(1.)", "NDE(.1)", "NIE(0.)"],
        estimation::mediation_formula_natural(source(), args.force),
    );
    gather(
        vec!["IDE(.0)", "IDE(.1)", "IIE(0.)", "IIE(1.)", "OE"],
        estimation::mediation_formula_interventional(source()),
    );
    for e in &estimates {
        push_unique(&mut report.warnings, e.warnings.iter().cloned());
    }

    for t in &truths {
        let entry = match estimates.iter().find(|e| e.label == t.label) {
            Some(e) => {
                let mut c = ComparisonEntry::new(t.label.clone(), t.value, e.estimate, e.standard_error);
                if family_of(&t.label).is_some_and(|f| !ladder.identified(f)) {
                    c.note = Some("NOT IDENTIFIED".into());
                }
                c
            }
            None => {
                let why = failures
                    .iter()
                    .find(|(labels, _)| labels.contains(&t.label.as_str()))
                    .map(|(_, why)| why.clone())
                    .unwrap_or_else(|| "not estimated".into());
                ComparisonEntry::missing(t.label.clone(), t.value, why)
            }
        };
        report.comparisons.push(entry);
    }
    report.estimates = estimates.iter().map(EstimateEntry::from).collect();
    let traditional = if args.traditional { traditional_block(&scm, &data, &mut report)? } else { String::new() };
    report.ladder = ladder_entries(&ladder);
    if args.json {
        return Ok(report.to_json());
    }

    let mut out = format!(
        "model: {}\nrows: {n} (seed {})\nbootstrap: {} resamples\n\n",
        scm.name, args.seed, args.bootstrap
    );
    let rows: Vec<Vec<String>> = report
        .comparisons
        .iter()
        .map(|c| {
            vec![
                c.label.clone(),
                num(c.truth),
                opt(c.estimate),
                opt(c.standard_error),
                opt(c.z),
                if c.flagged { "FLAG".into() } else { String::new() },
                c.note.clone().unwrap_or_default(),
            ]
        })
        .collect();
    out.push_str(&table(&["effect", "truth", "estimate", "se", "z", "|z|>4", "note"], &rows));
    let flagged = report.comparisons.iter().filter(|c| c.flagged).count();
    out.push_str(&format!("\nflagged: {flagged} of {}\n", report.comparisons.len()));
    out.push_str(&traditional);
    out.push('\n');
    out.push_str(&warnings_block(&report.warnings));
    out.push_str(&ladder_lines(&ladder));
    Ok(out)
}
