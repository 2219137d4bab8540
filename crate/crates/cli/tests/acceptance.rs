//! End-to-end acceptance run. Prints one line per criterion and exits
//! nonzero if any criterion fails.
//!
//! Criteria stated against the official Global Superstore file run when the
//! file is available (`STOREBOARD_OFFICIAL_CSV`, or `data/Global_Superstore2.csv`
//! at the workspace root). Without it they report NOT-COMPARABLE, which is
//! not a failure; the parts that can be checked on synthetic data of the same
//! shape still run.

#[path = "../../core/tests/common/oracle.rs"]
mod oracle;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use storeboard_core::analytics::{
    build_findings_report, calibrate_fee_table, calibrate_loyalty, shipping_subsidy, AnalyticsConfig,
    FeeTargets, FindingStatus, FindingsReport,
};
use storeboard_core::dashboard::{bundled_spec, lint};
use storeboard_core::ingest::{self, FeeTable};
use storeboard_core::measure::{
    evaluate, parse, print, AggFunc, BinOp, CompareOp, Condition, MeasureCatalog, MeasureExpr,
};
use storeboard_core::model::{ColumnRef, FilterContext, PaymentSource, Predicate, Range, StarSchema};
use storeboard_core::query::{self, GroupQuery};
use storeboard_core::synth::{self, SynthConfig};
use storeboard_core::{snapshot, Value};
use storeboard_server::{AppState, ServerOptions};

enum Outcome {
    Pass(String),
    Fail(String),
    NotComparable(String),
}

use Outcome::*;

struct Official {
    schema: StarSchema,
    report: FindingsReport,
    elapsed: Duration,
}

struct Ctx {
    official: Option<Result<Official, String>>,
    synth_csv: String,
    synth: StarSchema,
}

fn official_path() -> Option<PathBuf> {
    if let Ok(p) = std::env::var("STOREBOARD_OFFICIAL_CSV") {
        return Some(PathBuf::from(p));
    }
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/Global_Superstore2.csv");
    p.exists().then_some(p)
}

fn ingest_and_report(bytes: &[u8], source: &str, fees: &FeeTable) -> Result<(StarSchema, FindingsReport), String> {
    let raw = ingest::load_csv_bytes(bytes, source, &ingest::default_columns()).map_err(|e| e.to_string())?;
    let schema = ingest::build_star_schema(&raw, fees).map_err(|e| e.to_string())?;
    let report = build_findings_report(&schema, &MeasureCatalog::builtin(), &AnalyticsConfig::repo_default());
    Ok((schema, report))
}

fn load_official() -> Option<Result<Official, String>> {
    let path = official_path()?;
    Some((|| {
        let start = Instant::now();
        let bytes = std::fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        let (schema, report) = ingest_and_report(&bytes, &path.display().to_string(), &FeeTable::repo_default())?;
        Ok(Official { schema, report, elapsed: start.elapsed() })
    })())
}

fn opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |v| v.to_string())
}

const NO_OFFICIAL: &str = "official dataset not provided (set STOREBOARD_OFFICIAL_CSV)";

/// Checks a set of findings against the published figures on official data.
fn findings_outcome(ctx: &Ctx, ids: &[&str]) -> Outcome {
    let official = match &ctx.official {
        None => return NotComparable(NO_OFFICIAL.into()),
        Some(Err(e)) => return Fail(format!("official dataset failed to load: {e}")),
        Some(Ok(o)) => o,
    };
    let mut parts = Vec::new();
    let mut failed = false;
    let mut comparable = true;
    for id in ids {
        let f = official.report.get(id).unwrap_or_else(|| panic!("no finding {id}"));
        let shown = f.value.map_or("-".into(), |v| format!("{v:.6}"));
        match f.status {
            FindingStatus::Match => parts.push(format!("{id}={shown} ok")),
            FindingStatus::Mismatch => {
                failed = true;
                parts.push(format!("{id}={shown} expected {}±{}", opt(f.expected), opt(f.tolerance)));
            }
            FindingStatus::NotComparable => {
                comparable = false;
                parts.push(format!("{id} not comparable ({})", f.note.as_deref().unwrap_or("")));
            }
        }
    }
    let detail = parts.join("; ");
    if failed {
        Fail(detail)
    } else if !comparable {
        NotComparable(detail)
    } else {
        Pass(detail)
    }
}

fn c1_dataset_fidelity(ctx: &Ctx) -> Outcome {
    // Same-shape synthetic run: the pipeline must land the configured
    // cardinalities exactly and finish inside the budget.
    let start = Instant::now();
    let (schema, report) =
        ingest_and_report(ctx.synth_csv.as_bytes(), "synthetic", &FeeTable::repo_default()).expect("synthetic ingests");
    let elapsed = start.elapsed();
    let fp = &report.fingerprint;
    let cfg = SynthConfig::full_scale(1);
    let counts_ok = schema.row_count() == cfg.rows
        && fp.orders == cfg.orders as f64
        && fp.customers == cfg.customers as f64
        && fp.skus == cfg.products as f64;
    let synth_note = format!(
        "synthetic 51,290-line file: {} orders, {} customers, {} SKUs, ingest+report {:.2}s",
        fp.orders,
        fp.customers,
        fp.skus,
        elapsed.as_secs_f64()
    );
    if !counts_ok || elapsed >= Duration::from_secs(10) {
        return Fail(synth_note);
    }
    match findings_outcome(ctx, &["kpi.orders", "kpi.customers", "kpi.skus", "kpi.total_sales"]) {
        Pass(d) => {
            let o = ctx.official.as_ref().unwrap().as_ref().unwrap();
            if o.elapsed < Duration::from_secs(10) {
                Pass(format!("{d}; official ingest+report {:.2}s", o.elapsed.as_secs_f64()))
            } else {
                Fail(format!("{d}; official ingest+report took {:.2}s", o.elapsed.as_secs_f64()))
            }
        }
        NotComparable(d) => NotComparable(format!("{d}; {synth_note}")),
        fail => fail,
    }
}

fn c2_margins(ctx: &Ctx) -> Outcome {
    findings_outcome(ctx, &["margin.overall", "margin.furniture", "margin.technology", "margin.office_supplies"])
}

fn c3_markets(ctx: &Ctx) -> Outcome {
    findings_outcome(ctx, &["market.apac.sales", "market.apac.margin", "market.emea.sales", "market.emea.margin"])
}

fn c4_discount(ctx: &Ctx) -> Outcome {
    findings_outcome(ctx, &["discount.threshold", "discount.levels_above_20pct_not_negative"])
}

fn c5_subcategory(ctx: &Ctx) -> Outcome {
    findings_outcome(ctx, &["subcategory.tables.loss_share", "subcategory.tables.sku_share"])
}

/// Per-mode `SUM(cost - payment)` computed straight from the CSV records.
fn brute_force_subsidy(csv_text: &str) -> BTreeMap<String, f64> {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let headers = r.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (mode, cost, pay) = (col("Ship Mode"), col("Shipping Cost"), col("Shipping Payment"));
    let mut out = BTreeMap::new();
    for rec in r.records() {
        let rec = rec.unwrap();
        let c: f64 = rec[cost].parse().unwrap();
        let p: f64 = rec[pay].parse().unwrap();
        *out.entry(rec[mode].to_string()).or_insert(0.0) += c - p;
    }
    out
}

fn c6_shipping(ctx: &Ctx) -> Outcome {
    let catalog = MeasureCatalog::builtin();
    // Explicit payments versus the brute-force oracle.
    let mut worst_rel = 0.0f64;
    for seed in 0..40u64 {
        let cfg = SynthConfig { with_payment: true, ..SynthConfig::small(50 + (seed as usize * 37) % 151, seed) };
        let text = synth::csv(&cfg);
        let raw = ingest::load_csv_bytes(text.as_bytes(), "fixture", &ingest::default_columns()).unwrap();
        let schema = ingest::build_star_schema(&raw, &FeeTable::repo_default()).unwrap();
        assert_eq!(schema.meta().payment_source, PaymentSource::Column);
        let want = brute_force_subsidy(&text);
        let got = shipping_subsidy(&schema, &catalog).unwrap();
        let got: BTreeMap<String, f64> = got.modes.iter().map(|m| (m.mode.clone(), m.subsidy)).collect();
        if got.keys().ne(want.keys()) {
            return Fail(format!("seed {seed}: modes {:?} vs {:?}", got.keys(), want.keys()));
        }
        for (m, w) in &want {
            let rel = (got[m] - w).abs() / w.abs().max(1.0);
            worst_rel = worst_rel.max(rel);
            if rel > 1e-9 {
                return Fail(format!("seed {seed} {m}: {} vs oracle {w}", got[m]));
            }
        }
    }

    // Fitting the fee table on same-shape data and re-ingesting reproduces
    // the targets and makes the shipping findings comparable.
    let targets = FeeTargets::default();
    let fitted = match calibrate_fee_table(&ctx.synth, &catalog, &targets) {
        Ok(t) => t,
        Err(e) => return Fail(format!("fee calibration on synthetic data: {e}")),
    };
    let (schema, report) = ingest_and_report(ctx.synth_csv.as_bytes(), "synthetic", &fitted).unwrap();
    let s = shipping_subsidy(&schema, &catalog).unwrap();
    let first = s.modes.iter().find(|m| m.mode == "First Class").map_or(f64::NAN, |m| m.subsidy);
    let total_ok = (s.total - 1.35e6).abs() <= 0.01 * 1.35e6;
    let first_ok = (first - 0.47e6).abs() <= 0.01 * 0.47e6;
    let status = |id: &str| report.get(id).unwrap().status;
    let comparable = status("shipping.total_subsidy") == FindingStatus::Match
        && status("shipping.first_class_subsidy") == FindingStatus::Match;
    let synth_detail = format!(
        "explicit-payment oracle: 40 fixtures, worst relative error {worst_rel:.1e}; \
         fitted fee table on synthetic data: total {:.0}, First Class {:.0}, findings {}",
        s.total,
        first,
        if comparable { "calibrated-comparable" } else { "not comparable" }
    );
    if !(total_ok && first_ok && comparable) {
        return Fail(synth_detail);
    }
    let committed = FeeTable::repo_default();
    let official_note = match (&ctx.official, committed.calibrated) {
        (None, _) => NO_OFFICIAL.to_string(),
        (Some(_), false) => "official figures not comparable: committed fee table is uncalibrated".to_string(),
        (Some(Err(e)), true) => return Fail(format!("official dataset failed to load: {e}")),
        (Some(Ok(o)), true) => {
            let ids = ["shipping.total_subsidy", "shipping.first_class_subsidy"];
            if ids.iter().any(|id| o.report.get(id).unwrap().status == FindingStatus::Mismatch) {
                return Fail(format!("{synth_detail}; official shipping findings mismatch"));
            }
            "official shipping findings within tolerance".to_string()
        }
    };
    Pass(format!("{synth_detail}; {official_note}"))
}

fn c7_loyalty(ctx: &Ctx) -> Outcome {
    let config = AnalyticsConfig::repo_default();
    let t = config.loyalty.super_loyal_min_orders;
    match &ctx.official {
        None => NotComparable(format!("{NO_OFFICIAL}; committed threshold T={t} (calibrated: {})", config.loyalty.calibrated)),
        Some(Err(e)) => Fail(format!("official dataset failed to load: {e}")),
        Some(Ok(o)) if !config.loyalty.calibrated => {
            let fit = calibrate_loyalty(&o.schema, &MeasureCatalog::builtin(), 0.55, 0.92, 0.05).unwrap();
            NotComparable(format!(
                "committed threshold T={t} is uncalibrated; best fit T={} gives customer share {:.3}, profit share {:.3}",
                fit.config.super_loyal_min_orders, fit.customer_share, fit.profit_share
            ))
        }
        Some(Ok(_)) => findings_outcome(
            ctx,
            &["loyalty.super_loyal.customer_share", "loyalty.super_loyal.profit_share"],
        ),
    }
}

fn random_ident(rng: &mut impl Rng) -> String {
    let n = rng.gen_range(0..7);
    let tail: String = (0..n).map(|_| *b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_".choose(rng).unwrap() as char).collect();
    format!("c{tail}")
}

fn random_column(rng: &mut impl Rng) -> ColumnRef {
    if rng.gen_bool(0.5) {
        ColumnRef::bare(random_ident(rng))
    } else {
        ColumnRef::qualified(random_ident(rng), random_ident(rng))
    }
}

fn random_literal(rng: &mut impl Rng) -> Value {
    if rng.gen_bool(0.5) {
        Value::Number(rng.gen_range(-1e6..1e6))
    } else {
        let n = rng.gen_range(0..7);
        Value::Text((0..n).map(|_| rng.gen_range(b' '..=b'~') as char).collect())
    }
}

fn random_expr(rng: &mut impl Rng, depth: u32) -> MeasureExpr {
    let leaf = depth == 0 || rng.gen_bool(0.3);
    if leaf {
        return match rng.gen_range(0..3) {
            0 if rng.gen_bool(0.5) => MeasureExpr::Number(rng.gen_range(0.0..1e9)),
            0 => MeasureExpr::Number(rng.gen_range(0..1000) as f64),
            1 => MeasureExpr::Agg { func: *AggFunc::ALL.choose(rng).unwrap(), column: random_column(rng) },
            _ => MeasureExpr::MeasureRef(format!("{} %{}", random_ident(rng), rng.gen_range(0..100))),
        };
    }
    match rng.gen_range(0..4) {
        0 => {
            let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][rng.gen_range(0..4)];
            let (l, r) = (random_expr(rng, depth - 1), random_expr(rng, depth - 1));
            MeasureExpr::binary(op, l, r)
        }
        1 => MeasureExpr::Neg(Box::new(random_expr(rng, depth - 1))),
        2 => {
            let (n, d) = (random_expr(rng, depth - 1), random_expr(rng, depth - 1));
            MeasureExpr::divide(n, d, random_expr(rng, depth - 1))
        }
        _ => {
            let inner = random_expr(rng, depth - 1);
            let conditions = (0..rng.gen_range(0..3))
                .map(|_| {
                    if rng.gen_bool(0.3) {
                        let values = (0..rng.gen_range(1..4)).map(|_| random_literal(rng)).collect();
                        Condition { column: random_column(rng), op: CompareOp::In, values }
                    } else {
                        let op = [CompareOp::Eq, CompareOp::Lt, CompareOp::Le, CompareOp::Gt, CompareOp::Ge][rng.gen_range(0..5)];
                        Condition { column: random_column(rng), op, values: vec![random_literal(rng)] }
                    }
                })
                .collect();
            MeasureExpr::Calculate { inner: Box::new(inner), conditions }
        }
    }
}

fn c8_engine(_: &Ctx) -> Outcome {
    let fixtures: Vec<StarSchema> =
        [(20, 1), (60, 2), (120, 3), (200, 4), (200, 5)].iter().map(|&(n, s)| synth::schema(&SynthConfig::small(n, s))).collect();
    let catalog = oracle::test_catalog();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut binned, mut topn) = (0, 0);
    for case in 0..1000 {
        let schema = &fixtures[case % fixtures.len()];
        let q = oracle::random_query(&mut rng, &catalog);
        let got = if q.bin.is_some() {
            binned += 1;
            query::run_binned(schema, &catalog, &q)
        } else if q.order_by.is_some() && q.limit.is_some() {
            topn += 1;
            query::top_n(schema, &catalog, &q)
        } else {
            query::run(schema, &catalog, &q)
        };
        let got = match got {
            Ok(r) => r,
            Err(e) => return Fail(format!("case {case}: {e}")),
        };
        if let Err(e) = oracle::same_result(&got, &oracle::query(schema, &catalog, &q)) {
            return Fail(format!("case {case}: {e}; query {}", serde_json::to_string(&q).unwrap()));
        }
    }

    for case in 0..1000 {
        let e = random_expr(&mut rng, 5);
        let text = print(&e);
        match parse(&text) {
            Ok(back) if back == e => {}
            Ok(back) => return Fail(format!("round trip {case}: {text} reparsed as {}", print(&back))),
            Err(err) => return Fail(format!("round trip {case}: {text} does not parse: {err}")),
        }
    }

    let schema = &fixtures[3];
    for case in 0..200 {
        let ctx = oracle::random_filters(&mut rng);
        let eval = |src: &str, ctx: &FilterContext| evaluate(&parse(src).unwrap(), schema, ctx, &catalog).unwrap();

        let den = eval("SUM(Discount)", &ctx);
        let d = eval("DIVIDE(SUM(Sales), SUM(Discount), -7)", &ctx);
        let want = if den == 0.0 { -7.0 } else { eval("SUM(Sales)", &ctx) / den };
        if d.to_bits() != want.to_bits() {
            return Fail(format!("invariant {case}: DIVIDE gave {d} for denominator {den}, expected {want}"));
        }

        let cond = FilterContext::new()
            .with("Orders", "Discount", Predicate::Range(Range::at_least(0.2)))
            .with("Geography", "Market", Predicate::In(vec![Value::text("APAC"), Value::text("EU")]));
        let a = eval(r#"CALCULATE([Profit Margin %] + SUM(Quantity), Discount >= 0.2, Market IN {"APAC", "EU"})"#, &ctx);
        let b = eval("[Profit Margin %] + SUM(Quantity)", &ctx.intersect(&cond));
        if a.to_bits() != b.to_bits() {
            return Fail(format!("invariant {case}: CALCULATE {a} vs intersected context {b}"));
        }

        let whole = eval("SUM(Sales)", &ctx);
        let parts: f64 = ["Furniture", "Office Supplies", "Technology"]
            .iter()
            .map(|c| eval("SUM(Sales)", &ctx.clone().with("Product", "Category", Predicate::eq(*c))))
            .sum();
        if (whole - parts).abs() > 1e-9 * whole.abs().max(1.0) {
            return Fail(format!("invariant {case}: SUM over categories {parts} vs whole {whole}"));
        }
    }
    Pass(format!(
        "1000 query cases ({binned} binned, {topn} top-N) match the oracle; 1000 AST round trips; 200 contexts x 3 invariants"
    ))
}

fn median(mut xs: Vec<Duration>) -> Duration {
    xs.sort();
    xs[xs.len() / 2]
}

fn c9_performance(ctx: &Ctx) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("full.sbrd");
    snapshot::save(&ctx.synth, &path).unwrap();
    let start = Instant::now();
    let schema = snapshot::load(&path).unwrap();
    let load = start.elapsed();

    let catalog = MeasureCatalog::builtin();
    let groups = [
        ("Product", "Category"),
        ("Product", "SubCategory"),
        ("Product", "ProductID"),
        ("Geography", "Market"),
        ("Geography", "Country"),
        ("Customer", "Segment"),
        ("Customer", "CustomerID"),
        ("ShipMode", "ShipMode"),
        ("Date", "Year"),
        ("Orders", "Discount"),
    ];
    let measure_sets: [&[&str]; 3] = [
        &["Total Sales", "Total Profit", "Profit Margin %"],
        &["Total Orders", "Avg Profit per Order", "Shipping Subsidy"],
        &["Total Loss"],
    ];
    let mut slowest = (Duration::ZERO, String::new());
    for (t, c) in groups {
        for ms in measure_sets {
            let q = GroupQuery::new(ms).group_by(t, c);
            query::run(&schema, &catalog, &q).unwrap();
            let times: Vec<Duration> = (0..5)
                .map(|_| {
                    let s = Instant::now();
                    query::run(&schema, &catalog, &q).unwrap();
                    s.elapsed()
                })
                .collect();
            let m = median(times);
            if m > slowest.0 {
                slowest = (m, format!("{t}[{c}] x {ms:?}"));
            }
        }
    }

    let state = Arc::new(AppState::new(schema, vec![], &AnalyticsConfig::repo_default()).unwrap());
    let rt = tokio::runtime::Runtime::new().unwrap();
    let listener = rt.block_on(tokio::net::TcpListener::bind("127.0.0.1:0")).unwrap();
    let addr = listener.local_addr().unwrap();
    rt.spawn(async move { storeboard_server::serve(listener, state, &ServerOptions::default()).await });
    let url = format!("http://{addr}/api/query");
    let agent = ureq::Agent::new_with_defaults();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut latencies = Vec::new();
    for i in 0..220 {
        let (t, c) = *groups.choose(&mut rng).unwrap();
        let ms = *measure_sets.choose(&mut rng).unwrap();
        let mut q = GroupQuery::new(ms).group_by(t, c);
        if rng.gen_bool(0.5) {
            q.filters = oracle::random_filters(&mut rng);
        }
        let body = serde_json::to_string(&q).unwrap();
        let s = Instant::now();
        let mut resp = agent.post(&url).header("content-type", "application/json").send(body).unwrap();
        let text = resp.body_mut().read_to_string().unwrap();
        let elapsed = s.elapsed();
        assert!(text.starts_with('{'));
        if i >= 20 {
            latencies.push(elapsed);
        }
    }
    latencies.sort();
    let p95 = latencies[latencies.len() * 95 / 100];
    drop(rt);

    let detail = format!(
        "snapshot load {:.0} ms; slowest warm query {:.1} ms ({}); server p95 {:.1} ms over {} requests",
        load.as_secs_f64() * 1e3,
        slowest.0.as_secs_f64() * 1e3,
        slowest.1,
        p95.as_secs_f64() * 1e3,
        latencies.len()
    );
    if load < Duration::from_secs(3) && slowest.0 < Duration::from_millis(100) && p95 < Duration::from_millis(250) {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn c10_lint_goldens(_: &Ctx) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (id, measures, min_ann, max_ann) in [("v1", 2, 0, 0), ("v2", 5, 4, 4), ("v3", 5, 12, 12), ("v4", 7, 18, usize::MAX)] {
        let spec = bundled_spec(id).unwrap();
        let s = lint(&spec);
        let n = s.structural.annotation_count;
        ok &= s.structural.measure_count == measures && (min_ann..=max_ann).contains(&n);
        parts.push(format!("{id}: {} measures, {n} annotations", s.structural.measure_count));
    }
    let v4 = lint(&bundled_spec("v4").unwrap());
    let v1 = lint(&bundled_spec("v1").unwrap());
    ok &= v4.structural.whitespace_ratio >= 0.35 && v4.scores.all_full() && v1.scores.hook == 0.0;
    parts.push(format!(
        "v4 whitespace {:.3}, all six scores 1: {}; v1 hook {}",
        v4.structural.whitespace_ratio,
        v4.scores.all_full(),
        v1.scores.hook
    ));
    let detail = parts.join("; ");
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

type Check = fn(&Ctx) -> Outcome;

fn main() {
    // libtest flags such as --nocapture or a name filter are accepted and ignored.
    let criteria: [(u8, &str, Check); 10] = [
        (1, "dataset fidelity", c1_dataset_fidelity),
        (2, "category margins", c2_margins),
        (3, "market comparison", c3_markets),
        (4, "discount threshold", c4_discount),
        (5, "sub-category losses", c5_subcategory),
        (6, "shipping subsidy", c6_shipping),
        (7, "loyalty concentration", c7_loyalty),
        (8, "engine correctness", c8_engine),
        (9, "performance", c9_performance),
        (10, "narrative lint goldens", c10_lint_goldens),
    ];
    let full = SynthConfig::full_scale(1);
    let synth_csv = synth::csv(&full);
    let raw = ingest::load_csv_bytes(synth_csv.as_bytes(), "synthetic", &ingest::default_columns()).unwrap();
    let ctx = Ctx {
        official: load_official(),
        synth: ingest::build_star_schema(&raw, &FeeTable::repo_default()).unwrap(),
        synth_csv,
    };

    println!("acceptance criteria");
    let mut failures = 0;
    for (n, name, run) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(|| run(&ctx)))
            .unwrap_or_else(|p| Fail(format!("panicked: {}", panic_text(&*p))));
        let (tag, detail) = match outcome {
            Pass(d) => ("PASS", d),
            NotComparable(d) => ("NOT-COMPARABLE", d),
            Fail(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("{tag:<14} {n:>2}. {name}: {detail}");
    }
    if failures > 0 {
        println!("{failures} criterion(s) failed");
        std::process::exit(1);
    }
}

fn panic_text(p: &(dyn std::any::Any + Send)) -> String {
    p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()
}
