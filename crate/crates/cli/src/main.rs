use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use storeboard_core::analytics::{
    build_findings_report_with, calibrate_fee_table, calibrate_loyalty, AnalyticsConfig, Expectations, FeeTargets,
};
use storeboard_core::dashboard::{self, bundled_spec, DashboardSpec, BUNDLED_IDS};
use storeboard_core::ingest::{self, FeeTable};
use storeboard_core::measure::MeasureCatalog;
use storeboard_core::model::{ColumnPredicate, ColumnRef, FilterContext, PaymentSource, Predicate, Range, StarSchema};
use storeboard_core::query::{self, GroupQuery, QueryResult};
use storeboard_core::synth::{self, SynthConfig};
use storeboard_core::{snapshot, Value};
use storeboard_server::{AppState, Cors, ServerOptions};

/// Global Superstore profitability analytics.
#[derive(Parser)]
#[command(name = "storeboard", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a Superstore CSV and write a binary snapshot.
    Ingest(IngestArgs),
    /// Run one grouped measure query against a snapshot.
    Query(QueryArgs),
    /// Print the findings report.
    Report(ReportArgs),
    /// Score a dashboard spec against the six narrative elements.
    Lint(LintArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
    /// Fit the shipping fee table and the Super Loyal threshold to a snapshot.
    Calibrate(CalibrateArgs),
    /// Write a synthetic Superstore-shaped CSV.
    Synth(SynthArgs),
}

#[derive(Args)]
struct IngestArgs {
    csv: PathBuf,
    /// Output snapshot path.
    #[arg(short, long)]
    out: PathBuf,
    /// Shipping fee table (TOML), used when the CSV has no payment column.
    #[arg(long)]
    fees: Option<PathBuf>,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(short, long)]
    snapshot: PathBuf,
    /// Group-by column, bare (`Category`) or qualified (`Product[Category]`).
    #[arg(short, long = "group-by")]
    group_by: Vec<String>,
    /// Catalog measure name, or an inline expression such as `SUM(Quantity)`.
    #[arg(short, long = "measure", required = true)]
    measures: Vec<String>,
    /// `Column=a,b`, `Column>=x`, `Column<x` and so on.
    #[arg(short, long = "filter")]
    filters: Vec<String>,
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(short, long)]
    snapshot: PathBuf,
    /// Exit 1 if any finding mismatches its expected value.
    #[arg(long)]
    check: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Expected values (JSON) replacing the published figures.
    #[arg(long)]
    expectations: Option<PathBuf>,
    /// Analytics settings (TOML); defaults to the committed config.
    #[arg(long = "analytics-config")]
    analytics_config: Option<PathBuf>,
}

#[derive(Args)]
struct LintArgs {
    /// Spec file to score.
    #[arg(required_unless_present = "bundled", conflicts_with = "bundled")]
    spec: Option<PathBuf>,
    /// Score a bundled spec (v1 to v4) instead of a file.
    #[arg(long)]
    bundled: Option<String>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(short, long)]
    snapshot: PathBuf,
    /// Directory of dashboard specs; defaults to the bundled v1 to v4.
    #[arg(long)]
    specs: Option<PathBuf>,
    #[arg(long, default_value_t = 8475)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    bind: IpAddr,
    /// Static UI bundle to serve from `/`.
    #[arg(long)]
    ui: Option<PathBuf>,
    /// Allowed CORS origin; repeatable. Defaults to localhost origins.
    #[arg(long = "cors-origin")]
    cors_origins: Vec<String>,
    #[arg(long = "analytics-config")]
    analytics_config: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(short, long)]
    snapshot: PathBuf,
    /// Where to write the fitted fee table.
    #[arg(long = "fees-out")]
    fees_out: Option<PathBuf>,
    /// Where to write the fitted analytics config.
    #[arg(long = "analytics-out")]
    analytics_out: Option<PathBuf>,
    #[arg(long = "total-subsidy", default_value_t = 1.35e6)]
    total_subsidy: f64,
    #[arg(long = "worst-mode", default_value = "First Class")]
    worst_mode: String,
    #[arg(long = "worst-mode-subsidy", default_value_t = 0.47e6)]
    worst_mode_subsidy: f64,
    #[arg(long = "customer-share", default_value_t = 0.55)]
    customer_share: f64,
    #[arg(long = "profit-share", default_value_t = 0.92)]
    profit_share: f64,
    #[arg(long, default_value_t = 0.05)]
    tolerance: f64,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(short, long)]
    out: PathBuf,
    /// Order lines; the default matches the official file's cardinalities.
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Include a `Shipping Payment` column.
    #[arg(long)]
    with_payment: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    /// JSON.
    #[value(alias = "json")]
    Machine,
}

/// A failure with an exit code other than the generic input error.
#[derive(Debug)]
struct Failed;

impl std::fmt::Display for Failed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("check failed")
    }
}

impl std::error::Error for Failed {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Query(a) => cmd_query(a),
        Command::Report(a) => cmd_report(a),
        Command::Lint(a) => cmd_lint(a),
        Command::Serve(a) => cmd_serve(a),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Failed>() => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_snapshot(path: &Path) -> Result<StarSchema> {
    snapshot::load(path).with_context(|| format!("loading snapshot {}", path.display()))
}

fn load_analytics_config(path: Option<&Path>) -> Result<AnalyticsConfig> {
    match path {
        Some(p) => AnalyticsConfig::load(p).map_err(|e| anyhow!("analytics config: {e}")),
        None => Ok(AnalyticsConfig::repo_default()),
    }
}

fn cmd_ingest(a: IngestArgs) -> Result<()> {
    let fees = match &a.fees {
        Some(p) => FeeTable::load(p)?,
        None => FeeTable::repo_default(),
    };
    let raw = ingest::load_csv(&a.csv, &ingest::default_columns())?;
    for r in &raw.rejected {
        eprintln!("rejected line {}: {}", r.line, r.reason);
    }
    let schema = ingest::build_star_schema(&raw, &fees)?;
    snapshot::save(&schema, &a.out).with_context(|| format!("writing {}", a.out.display()))?;

    let mut c = MeasureCatalog::builtin();
    for (name, src) in [
        ("Customers", "DISTINCTCOUNT(Customer[CustomerID])"),
        ("SKUs", "DISTINCTCOUNT(Product[ProductID])"),
    ] {
        c.register(name, src)?;
    }
    let r = query::run(&schema, &c, &GroupQuery::new(&["Total Orders", "Customers", "SKUs"]))?;
    let count = |i: usize| r.total[i].unwrap_or(0.0) as u64;
    println!("snapshot  {}", a.out.display());
    println!("rows      {}", schema.row_count());
    println!("orders    {}", count(0));
    println!("customers {}", count(1));
    println!("skus      {}", count(2));
    println!("rejected  {}", schema.meta().rejected_rows);
    println!("payments  {}", match schema.meta().payment_source {
        PaymentSource::Column => "column",
        PaymentSource::FeeTable { calibrated: true } => "fee table (calibrated)",
        PaymentSource::FeeTable { calibrated: false } => "fee table (uncalibrated)",
    });
    Ok(())
}

/// `Table[Column]` or a bare column name resolved against the schema.
fn resolve_column(schema: &StarSchema, text: &str) -> Result<(String, String, bool)> {
    let r = match text.trim().split_once('[') {
        Some((t, rest)) if rest.ends_with(']') => ColumnRef::qualified(t.trim(), rest[..rest.len() - 1].trim()),
        _ => ColumnRef::bare(text.trim()),
    };
    let h = schema.resolve(&r)?;
    Ok((h.table.to_string(), h.column.name.clone(), h.kind().is_numeric()))
}

fn parse_filter(schema: &StarSchema, text: &str) -> Result<ColumnPredicate> {
    let ops = [">=", "<=", "=", ">", "<"];
    let (pos, op) = ops
        .iter()
        .filter_map(|op| text.find(op).map(|p| (p, *op)))
        .min_by_key(|(p, op)| (*p, std::cmp::Reverse(op.len())))
        .ok_or_else(|| anyhow!("filter {text:?} needs one of = >= <= > <"))?;
    let (table, column, numeric) = resolve_column(schema, &text[..pos])?;
    let value = |s: &str| -> Result<Value> {
        let s = s.trim();
        if numeric {
            s.parse::<f64>().map(Value::Number).map_err(|_| anyhow!("{column} is numeric; cannot filter on {s:?}"))
        } else {
            Ok(Value::text(s))
        }
    };
    let rhs = &text[pos + op.len()..];
    let predicate = match op {
        "=" => Predicate::In(rhs.split(',').map(value).collect::<Result<_>>()?),
        ">=" => Predicate::Range(Range::at_least(value(rhs)?)),
        ">" => Predicate::Range(Range::greater_than(value(rhs)?)),
        "<=" => Predicate::Range(Range::at_most(value(rhs)?)),
        _ => Predicate::Range(Range::less_than(value(rhs)?)),
    };
    Ok(ColumnPredicate { table, column, predicate })
}

fn cmd_query(a: QueryArgs) -> Result<()> {
    let schema = load_snapshot(&a.snapshot)?;
    let mut catalog = MeasureCatalog::builtin();
    for m in &a.measures {
        if !catalog.contains(m) && m.contains('(') {
            catalog.register(m, m).with_context(|| format!("measure {m:?}"))?;
        }
    }
    let mut q = GroupQuery { measures: a.measures.clone(), limit: a.limit, ..Default::default() };
    for g in &a.group_by {
        let (t, c, _) = resolve_column(&schema, g)?;
        q = q.group_by(&t, &c);
    }
    let mut filters = FilterContext::new();
    for f in &a.filters {
        filters.add(parse_filter(&schema, f)?);
    }
    q.filters = filters;
    let r = query::run(&schema, &catalog, &q)?;
    match a.format {
        Format::Machine => println!("{}", serde_json::to_string_pretty(&r)?),
        Format::Text => print!("{}", render_table(&r)),
    }
    Ok(())
}

fn format_number(v: Option<f64>) -> String {
    match v {
        None => "-".into(),
        Some(x) if x.fract() == 0.0 && x.abs() < 1e15 => format!("{x:.0}"),
        Some(x) if x.abs() >= 1.0 => format!("{x:.2}"),
        Some(x) => format!("{x:.4}"),
    }
}

/// Keys left-aligned, numbers right-aligned, a rule and a totals row.
fn render_table(r: &QueryResult) -> String {
    let mut header: Vec<String> = r.columns.clone();
    header.extend(r.measures.iter().cloned());
    let keys = r.columns.len();
    let mut rows: Vec<Vec<String>> = r
        .rows
        .iter()
        .map(|row| {
            row.keys.iter().map(|k| k.to_string()).chain(row.values.iter().map(|v| format_number(*v))).collect()
        })
        .collect();
    if keys > 0 {
        let mut total: Vec<String> = vec![String::new(); keys];
        total[0] = "Total".into();
        total.extend(r.total.iter().map(|v| format_number(*v)));
        rows.push(total);
    }
    let mut width: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in &rows {
        for (w, c) in width.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| {
        let parts: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| if i < keys { format!("{c:<w$}", w = width[i]) } else { format!("{c:>w$}", w = width[i]) })
            .collect();
        parts.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(&header);
    let body = rows.len() - usize::from(keys > 0);
    for row in &rows[..body] {
        out.push_str(&line(row));
    }
    if keys > 0 {
        out.push_str(&(width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  ") + "\n"));
        out.push_str(&line(&rows[body]));
    }
    out
}

fn cmd_report(a: ReportArgs) -> Result<()> {
    let schema = load_snapshot(&a.snapshot)?;
    let config = load_analytics_config(a.analytics_config.as_deref())?;
    let expectations = match &a.expectations {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<Expectations>(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => Expectations::published(),
    };
    let report = build_findings_report_with(&schema, &MeasureCatalog::builtin(), &config, &expectations);
    match a.format {
        Format::Machine => println!("{}", report.to_json()),
        Format::Text => print!("{}", report.to_text()),
    }
    if a.check {
        let bad = report.mismatches();
        if !bad.is_empty() {
            eprintln!("{} finding(s) mismatched:", bad.len());
            for f in bad {
                eprintln!("  {}", f.id);
            }
            return Err(Failed.into());
        }
    }
    Ok(())
}

fn cmd_lint(a: LintArgs) -> Result<()> {
    let spec = match (&a.spec, &a.bundled) {
        (_, Some(id)) => bundled_spec(id)
            .ok_or_else(|| anyhow!("no bundled spec {id:?}; expected one of {}", BUNDLED_IDS.join(", ")))?,
        (Some(p), None) => DashboardSpec::load(p)?,
        (None, None) => bail!("a spec path or --bundled is required"),
    };
    let violations = dashboard::validate_structure(&spec);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(|v| format!("  {v}")).collect();
        bail!("spec has {} violation(s):\n{}", violations.len(), list.join("\n"));
    }
    let score = dashboard::lint(&spec);
    match a.format {
        Format::Machine => println!("{}", serde_json::to_string_pretty(&score)?),
        Format::Text => print!("{}", score.to_text()),
    }
    if score.passes() {
        Ok(())
    } else {
        Err(Failed.into())
    }
}

fn cmd_serve(a: ServeArgs) -> Result<()> {
    let filter = tracing_subscriber::EnvFilter::try_from_env("STOREBOARD_LOG")
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info"));
    tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).init();

    let schema = load_snapshot(&a.snapshot)?;
    let specs = match &a.specs {
        Some(dir) => dashboard::load_dir(dir)?,
        None => dashboard::bundled(),
    };
    let config = load_analytics_config(a.analytics_config.as_deref())?;
    let state = Arc::new(AppState::new(schema, specs, &config)?);
    let options = ServerOptions {
        cors: if a.cors_origins.is_empty() { Cors::LocalDev } else { Cors::Origins(a.cors_origins) },
        ui_dir: a.ui,
    };
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((a.bind, a.port))
            .await
            .with_context(|| format!("binding {}:{}", a.bind, a.port))?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        storeboard_server::serve(listener, state, &options).await?;
        Ok(())
    })
}

fn cmd_calibrate(a: CalibrateArgs) -> Result<()> {
    let schema = load_snapshot(&a.snapshot)?;
    let catalog = MeasureCatalog::builtin();
    let mut ok = true;

    let targets = FeeTargets {
        total: a.total_subsidy,
        worst_mode: a.worst_mode.clone(),
        worst_mode_subsidy: a.worst_mode_subsidy,
    };
    match calibrate_fee_table(&schema, &catalog, &targets) {
        Ok(table) => {
            println!("fee table: fitted to a total subsidy of {:.2}", targets.total);
            write_or_print(a.fees_out.as_deref(), &table.to_toml())?;
        }
        Err(e) => {
            eprintln!("fee table: {e}");
            ok = false;
        }
    }

    let fit = calibrate_loyalty(&schema, &catalog, a.customer_share, a.profit_share, a.tolerance)?;
    println!(
        "loyalty: threshold {} orders gives customer share {:.4}, profit share {:.4} ({})",
        fit.config.super_loyal_min_orders,
        fit.customer_share,
        fit.profit_share,
        if fit.within_tolerance { "within tolerance" } else { "outside tolerance" }
    );
    let config = AnalyticsConfig { loyalty: fit.config };
    write_or_print(a.analytics_out.as_deref(), &config.to_toml())?;
    ok &= fit.within_tolerance;

    if ok {
        Ok(())
    } else {
        Err(Failed.into())
    }
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let mut cfg = match a.rows {
        Some(0) => bail!("--rows must be positive"),
        Some(n) => SynthConfig::small(n, a.seed),
        None => SynthConfig::full_scale(a.seed),
    };
    cfg.with_payment = a.with_payment;
    std::fs::write(&a.out, synth::csv(&cfg)).with_context(|| format!("writing {}", a.out.display()))?;
    println!("wrote {} lines to {}", cfg.rows, a.out.display());
    Ok(())
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
            println!("wrote {}", p.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}
