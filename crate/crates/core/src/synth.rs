//! Seeded generator for synthetic order-line files in the Global Superstore
//! column layout.
//!
//! The generated data has the right shape (markets, categories, discrete
//! discount levels, multi-line orders) but its values are random; it is for
//! exercising the pipeline and measuring performance, not for reproducing
//! any published figure.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::{build_star_schema, default_columns, load_csv_bytes, FeeTable};
use crate::model::StarSchema;

pub const MARKETS: [(&str, &str, &[(&str, &str)]); 7] = [
    ("APAC", "Oceania", &[("Sydney", "Australia"), ("Jakarta", "Indonesia"), ("Manila", "Philippines")]),
    ("EU", "Central", &[("Paris", "France"), ("Berlin", "Germany"), ("Rome", "Italy")]),
    ("US", "West", &[("Seattle", "United States"), ("Los Angeles", "United States")]),
    ("LATAM", "South", &[("Lima", "Peru"), ("Santiago", "Chile")]),
    ("EMEA", "EMEA", &[("Cairo", "Egypt"), ("Istanbul", "Turkey")]),
    ("Africa", "Africa", &[("Lagos", "Nigeria"), ("Nairobi", "Kenya")]),
    ("Canada", "Canada", &[("Toronto", "Canada")]),
];

pub const SHIP_MODES: [&str; 4] = ["Standard Class", "Second Class", "First Class", "Same Day"];

pub const CATEGORIES: [(&str, &str, &[&str]); 3] = [
    ("Furniture", "FUR", &["Bookcases", "Chairs", "Furnishings", "Tables"]),
    ("Office Supplies", "OFF", &["Binders", "Paper", "Storage", "Supplies"]),
    ("Technology", "TEC", &["Accessories", "Copiers", "Machines", "Phones"]),
];

const DISCOUNTS: [f64; 8] = [0.0, 0.0, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5];
const SEGMENTS: [&str; 3] = ["Consumer", "Corporate", "Home Office"];
const PRIORITIES: [&str; 4] = ["Low", "Medium", "High", "Critical"];

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub rows: usize,
    pub orders: usize,
    pub customers: usize,
    pub products: usize,
    pub seed: u64,
    /// Emit a `Shipping Payment` column.
    pub with_payment: bool,
}

impl SynthConfig {
    pub fn small(rows: usize, seed: u64) -> Self {
        SynthConfig {
            rows,
            orders: (rows * 2 / 3).max(1),
            customers: (rows / 6).max(1),
            products: (rows / 2).max(1),
            seed,
            with_payment: false,
        }
    }

    /// Same cardinalities as the official file: 51,290 lines, 25,035
    /// orders, 1,590 customers, 10,292 products.
    pub fn full_scale(seed: u64) -> Self {
        SynthConfig {
            rows: 51_290,
            orders: 25_035,
            customers: 1_590,
            products: 10_292,
            seed,
            with_payment: false,
        }
    }
}

pub const HEADER: &str = "Row ID,Order ID,Order Date,Ship Date,Ship Mode,Customer ID,Customer Name,Segment,City,State,Country,Postal Code,Market,Region,Product ID,Category,Sub-Category,Product Name,Sales,Quantity,Discount,Profit,Shipping Cost,Order Priority";

/// Renders the synthetic file as CSV text (dates as `DD-MM-YYYY`).
pub fn csv(cfg: &SynthConfig) -> String {
    assert!(cfg.rows >= cfg.orders && cfg.orders >= 1, "need at least one line per order");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let customers = cfg.customers.clamp(1, cfg.orders);
    let products = cfg.products.clamp(1, cfg.rows);

    // Every order gets one line, the remainder are spread at random.
    let mut order_of_line: Vec<usize> = (0..cfg.orders).collect();
    order_of_line.extend((cfg.orders..cfg.rows).map(|_| rng.gen_range(0..cfg.orders)));
    order_of_line.sort_unstable();

    let mut product_of_line: Vec<usize> = (0..products).collect();
    product_of_line.extend((products..cfg.rows).map(|_| rng.gen_range(0..products)));
    product_of_line.shuffle(&mut rng);

    struct Order {
        customer: usize,
        market: usize,
        city: usize,
        mode: usize,
        day: u32,
        month: u32,
        year: i32,
        priority: usize,
    }
    let orders: Vec<Order> = (0..cfg.orders)
        .map(|o| {
            let market = rng.gen_range(0..MARKETS.len());
            Order {
                customer: if o < customers { o } else { rng.gen_range(0..customers) },
                market,
                city: rng.gen_range(0..MARKETS[market].2.len()),
                mode: rng.gen_range(0..SHIP_MODES.len()),
                day: rng.gen_range(1..=28),
                month: rng.gen_range(1..=12),
                year: rng.gen_range(2011..=2014),
                priority: rng.gen_range(0..PRIORITIES.len()),
            }
        })
        .collect();

    let mut header = String::from(HEADER);
    if cfg.with_payment {
        header.push_str(",Shipping Payment");
    }
    let mut out = String::with_capacity(cfg.rows * 220);
    out.push_str(&header);
    for line in 0..cfg.rows {
        let o = &orders[order_of_line[line]];
        let p = product_of_line[line];
        let (category, prefix, subs) = CATEGORIES[p % 3];
        let sub = subs[(p / 3) % subs.len()];
        let (market, region, cities) = MARKETS[o.market];
        let (city, country) = cities[o.city];
        let qty: u32 = rng.gen_range(1..=14);
        let sales = (rng.gen_range(5.0..400.0f64) * qty as f64 * 100.0).round() / 100.0;
        let discount = DISCOUNTS[rng.gen_range(0..DISCOUNTS.len())];
        let base = [0.08, 0.16, 0.18][p % 3];
        let margin = base - discount * 0.9 + rng.gen_range(-0.05..0.05);
        let profit = (sales * margin * 100.0).round() / 100.0;
        let ship_rate = [0.06, 0.09, 0.12, 0.15][o.mode];
        let ship_cost = (sales * ship_rate * rng.gen_range(0.5..1.5) * 100.0).round() / 100.0;
        let ship_day = (o.day + 1 + o.mode as u32).min(28);
        write!(
            out,
            "\n{},{}-{}-{},{:02}-{:02}-{},{:02}-{:02}-{},{},{}-{},\"Customer {}\",{},{},{},{},,{},{},{}-{}-{:05},{},{},\"{} item {}\",{},{},{},{},{},{}",
            line + 1,
            market[..2.min(market.len())].to_uppercase(),
            o.year,
            order_of_line[line],
            o.day,
            o.month,
            o.year,
            ship_day,
            o.month,
            o.year,
            SHIP_MODES[o.mode],
            "CU",
            o.customer,
            o.customer,
            SEGMENTS[o.customer % 3],
            city,
            city,
            country,
            market,
            region,
            prefix,
            sub[..2].to_uppercase(),
            p,
            category,
            sub,
            sub,
            p,
            sales,
            qty,
            discount,
            profit,
            ship_cost,
            PRIORITIES[o.priority],
        )
        .unwrap();
        if cfg.with_payment {
            let paid = (ship_cost * rng.gen_range(0.3..1.0) * 100.0).round() / 100.0;
            write!(out, ",{paid}").unwrap();
        }
    }
    out
}

/// Generates, ingests and builds a star schema in one step.
pub fn schema(cfg: &SynthConfig) -> StarSchema {
    let text = csv(cfg);
    let raw = load_csv_bytes(text.as_bytes(), "synthetic", &default_columns()).expect("synthetic csv ingests");
    build_star_schema(&raw, &FeeTable::default()).expect("synthetic schema builds")
}
