mod common;

use common::oracle;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use storeboard_core::measure::{evaluate, parse, Evaluator, MeasureCatalog, MeasureError, MeasureExpr};
use storeboard_core::model::{FilterContext, ModelError, Predicate, StarSchema};
use storeboard_core::synth::{self, SynthConfig};
use storeboard_core::Value;

fn schema(rows: usize, seed: u64) -> StarSchema {
    synth::schema(&SynthConfig::small(rows, seed))
}

fn eval(s: &StarSchema, src: &str, ctx: &FilterContext) -> Result<f64, MeasureError> {
    evaluate(&parse(src).unwrap(), s, ctx, &oracle::test_catalog())
}

#[test]
fn avg_profit_per_order_matches_hand_scan() {
    let s = schema(12, 4);
    let profit = s.column("Orders", "Profit").unwrap();
    let order = s.column("Orders", "OrderID").unwrap();
    let mut total = 0.0;
    let mut orders = Vec::new();
    for r in 0..s.row_count() {
        total += profit.number(r).unwrap();
        let id = order.value(r).to_string();
        if !orders.contains(&id) {
            orders.push(id);
        }
    }
    let got = eval(&s, "[Avg Profit per Order]", &FilterContext::new()).unwrap();
    assert_eq!(got, total / orders.len() as f64);
}

#[test]
fn empty_selection_contract() {
    let s = schema(40, 1);
    let none = FilterContext::new().with("Geography", "Market", Predicate::In(vec![]));
    assert_eq!(eval(&s, "SUM(Sales)", &none).unwrap(), 0.0);
    assert_eq!(eval(&s, "COUNT(Sales)", &none).unwrap(), 0.0);
    assert_eq!(eval(&s, "DISTINCTCOUNT(OrderID)", &none).unwrap(), 0.0);
    for f in ["MIN", "MAX", "AVERAGE"] {
        assert!(matches!(eval(&s, &format!("{f}(Sales)"), &none), Err(MeasureError::EmptyAggregation { .. })));
    }
    assert_eq!(eval(&s, "[Profit Margin %]", &none).unwrap(), 0.0);
    assert_eq!(eval(&s, "DIVIDE(1, SUM(Sales), 42)", &none).unwrap(), 42.0);
}

#[test]
fn margin_is_ratio_of_sums_not_mean_of_ratios() {
    let s = schema(200, 3);
    let c = MeasureCatalog::builtin();
    let furniture = FilterContext::new().with("Product", "Category", Predicate::eq("Furniture"));
    let tech = FilterContext::new().with("Product", "Category", Predicate::eq("Technology"));
    let both = FilterContext::new()
        .with("Product", "Category", Predicate::In(vec![Value::text("Furniture"), Value::text("Technology")]));
    let m = |ctx: &FilterContext| evaluate(&MeasureExpr::measure("Profit Margin %"), &s, ctx, &c).unwrap();
    let sum = |col: &str, ctx: &FilterContext| evaluate(&parse(&format!("SUM({col})")).unwrap(), &s, ctx, &c).unwrap();
    let (mf, mt, mb) = (m(&furniture), m(&tech), m(&both));
    assert!((mf - mt).abs() > 1e-3, "fixture needs distinct group margins");
    let expected = (sum("Profit", &furniture) + sum("Profit", &tech)) / (sum("Sales", &furniture) + sum("Sales", &tech));
    assert!((mb - expected).abs() < 1e-12);
    assert!((mb - (mf + mt) / 2.0).abs() > 1e-6);
}

#[test]
fn errors_name_the_culprit() {
    let s = schema(20, 2);
    let ctx = FilterContext::new();
    assert_eq!(eval(&s, "[Nope]", &ctx), Err(MeasureError::UnknownMeasure("Nope".into())));
    assert!(matches!(
        eval(&s, "SUM(Colour)", &ctx),
        Err(MeasureError::Model(ModelError::UnknownColumn { column, .. })) if column == "Colour"
    ));
    assert!(matches!(eval(&s, "SUM(Category)", &ctx), Err(MeasureError::TypeMismatch { func: "SUM", .. })));
    assert!(matches!(
        eval(&s, "CALCULATE(1, Nowhere[Market] = 1)", &ctx),
        Err(MeasureError::Model(ModelError::UnknownColumn { .. }))
    ));
}

#[test]
fn builtin_measures_match_oracle_on_fixtures() {
    let c = MeasureCatalog::builtin();
    for seed in 0..5 {
        let s = schema(150, seed);
        let rows: Vec<usize> = (0..s.row_count()).collect();
        for name in c.names() {
            let expr = MeasureExpr::measure(name);
            let got = evaluate(&expr, &s, &FilterContext::new(), &c).ok();
            assert_eq!(got, oracle::measure(&s, &c, &expr, &rows), "{name}");
        }
    }
}

fn ctx_from_seed(seed: u64) -> FilterContext {
    oracle::random_filters(&mut ChaCha8Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn divide_returns_alternate_exactly_when_denominator_is_zero(seed in 0u64..10_000) {
        let s = schema(80, seed % 7);
        let c = oracle::test_catalog();
        let ctx = ctx_from_seed(seed);
        let den = eval(&s, "SUM(Discount)", &ctx).unwrap();
        let got = evaluate(&parse("DIVIDE(SUM(Sales), SUM(Discount), -7)").unwrap(), &s, &ctx, &c).unwrap();
        prop_assert_eq!(got == -7.0, den == 0.0);
    }

    #[test]
    fn calculate_equals_evaluation_under_intersection(seed in 0u64..10_000) {
        let s = schema(120, seed % 5);
        let c = oracle::test_catalog();
        let ctx = ctx_from_seed(seed);
        let inner = "[Profit Margin %] + SUM(Quantity)";
        let calc = format!(r#"CALCULATE({inner}, Discount >= 0.2, Market IN {{"APAC", "EU", "US"}})"#);
        let p = FilterContext::new()
            .with("Orders", "Discount", Predicate::Range(storeboard_core::model::Range::at_least(0.2)))
            .with("Geography", "Market", Predicate::In(vec![Value::text("APAC"), Value::text("EU"), Value::text("US")]));
        let a = evaluate(&parse(&calc).unwrap(), &s, &ctx, &c).unwrap();
        let b = evaluate(&parse(inner).unwrap(), &s, &ctx.intersect(&p), &c).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn sum_is_additive_over_a_partition(seed in 0u64..10_000, col in 0usize..4) {
        let s = schema(150, seed % 5);
        let c = MeasureCatalog::builtin();
        let ctx = ctx_from_seed(seed);
        let (t, column) = [("Product", "Category"), ("Geography", "Market"), ("ShipMode", "ShipMode"), ("Customer", "Segment")][col];
        let handle = s.column(t, column).unwrap();
        let mut values: Vec<Value> = (0..s.row_count()).map(|r| handle.value(r)).collect();
        values.sort_by(|a, b| a.total_cmp(b));
        values.dedup();
        let expr = parse("SUM(Sales)").unwrap();
        let whole = evaluate(&expr, &s, &ctx, &c).unwrap();
        let parts: f64 = values
            .into_iter()
            .map(|v| evaluate(&expr, &s, &ctx.clone().with(t, column, Predicate::In(vec![v])), &c).unwrap())
            .sum();
        prop_assert!((whole - parts).abs() <= 1e-9 * whole.abs().max(1.0));
    }

    #[test]
    fn distinct_count_never_exceeds_count(seed in 0u64..10_000, col in 0usize..6) {
        let s = schema(100, seed % 5);
        let ctx = ctx_from_seed(seed);
        let column = ["OrderID", "Sales", "Discount", "Category", "Market", "CustomerName"][col];
        let d = eval(&s, &format!("DISTINCTCOUNT({column})"), &ctx).unwrap();
        let n = eval(&s, &format!("COUNT({column})"), &ctx).unwrap();
        prop_assert!(d <= n);
    }

    #[test]
    fn catalog_measures_match_oracle_under_random_contexts(seed in 0u64..10_000) {
        let s = schema(100, seed % 4);
        let c = oracle::test_catalog();
        let ctx = ctx_from_seed(seed);
        let rows = oracle::rows(&s, &ctx);
        let sel = s.resolve_rows(&ctx).unwrap();
        let ev = Evaluator::new(&s, &c);
        for name in c.names() {
            let expr = MeasureExpr::measure(name);
            let got = ev.scalar(&expr, &sel).unwrap().map(f64::to_bits);
            let want = oracle::measure(&s, &c, &expr, &rows).map(f64::to_bits);
            prop_assert_eq!(got, want, "{}", name);
        }
    }
}
