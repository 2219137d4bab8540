use std::collections::HashMap;

use chrono::Datelike;

use super::{FeeTable, IngestError, RawDataset, RawValue};
use crate::model::{
    date_to_days, Column, ColumnData, ColumnKind, ColumnTable, DictionaryBuilder, PaymentSource,
    Relationship, SchemaMeta, StarSchema, MISSING_DATE,
};

pub const FACT_TABLE: &str = "Orders";

/// Dimension table names.
pub mod tables {
    pub const PRODUCT: &str = "Product";
    pub const CUSTOMER: &str = "Customer";
    pub const GEOGRAPHY: &str = "Geography";
    pub const DATE: &str = "Date";
    pub const SHIP_MODE: &str = "ShipMode";
}

/// Deduplicates attribute tuples into a dimension with a dense surrogate key.
struct DimensionBuilder {
    name: &'static str,
    key: String,
    attrs: Vec<(&'static str, ColumnKind)>,
    index: HashMap<Vec<String>, i64>,
    tuples: Vec<Vec<RawValue>>,
}

impl DimensionBuilder {
    fn new(name: &'static str, attrs: Vec<(&'static str, ColumnKind)>) -> Self {
        DimensionBuilder {
            name,
            key: format!("{name}Key"),
            attrs,
            index: HashMap::new(),
            tuples: Vec::new(),
        }
    }

    fn key_of(&mut self, raw: &RawDataset, row: usize) -> i64 {
        let tuple: Vec<RawValue> = self
            .attrs
            .iter()
            .map(|(c, _)| raw.get(row, c).cloned().unwrap_or(RawValue::Missing))
            .collect();
        let fingerprint: Vec<String> = tuple.iter().map(|v| format!("{v:?}")).collect();
        if let Some(&k) = self.index.get(&fingerprint) {
            return k;
        }
        let k = self.tuples.len() as i64;
        self.index.insert(fingerprint, k);
        self.tuples.push(tuple);
        k
    }

    fn finish(self) -> Result<ColumnTable, IngestError> {
        let n = self.tuples.len();
        let mut columns = vec![Column::new(
            self.key.clone(),
            ColumnKind::Integer,
            ColumnData::Int((0..n as i64).collect()),
        )];
        for (i, (name, kind)) in self.attrs.iter().enumerate() {
            columns.push(Column::new(*name, *kind, column_data(*kind, self.tuples.iter().map(|t| &t[i]))));
        }
        Ok(ColumnTable::new(self.name, columns, Some(self.key))?)
    }
}

fn column_data<'a>(kind: ColumnKind, values: impl ExactSizeIterator<Item = &'a RawValue>) -> ColumnData {
    match kind {
        ColumnKind::Text | ColumnKind::Categorical => {
            let mut b = DictionaryBuilder::with_capacity(values.len());
            for v in values {
                b.push(v.as_str());
            }
            b.finish()
        }
        ColumnKind::Money | ColumnKind::Fraction => {
            ColumnData::Float(values.map(|v| v.as_f64().unwrap_or(f64::NAN)).collect())
        }
        ColumnKind::Integer => ColumnData::Int(
            values
                .map(|v| match v {
                    RawValue::Integer(i) => *i,
                    _ => crate::model::MISSING_INT,
                })
                .collect(),
        ),
        ColumnKind::Date => {
            ColumnData::Date(values.map(|v| v.as_date().map_or(MISSING_DATE, date_to_days)).collect())
        }
    }
}

fn relationship(fact_column: &str, dimension: &str) -> Relationship {
    Relationship {
        fact_column: fact_column.into(),
        dimension: dimension.into(),
        key_column: fact_column.into(),
    }
}

/// Splits the flat order-line rows into an `Orders` fact table and the
/// Product, Customer, Geography, Date and ShipMode dimensions.
///
/// When the source has no `ShippingPayment` column it is synthesized from
/// `fees`, and the schema records which path was taken.
pub fn build_star_schema(raw: &RawDataset, fees: &FeeTable) -> Result<StarSchema, IngestError> {
    use ColumnKind::*;
    for c in super::default_columns().iter().filter(|c| c.required) {
        if !raw.has_column(&c.canonical_name) {
            return Err(IngestError::MissingColumn(c.canonical_name.clone()));
        }
    }
    let n = raw.row_count;

    let mut product = DimensionBuilder::new(
        tables::PRODUCT,
        vec![("ProductID", Text), ("ProductName", Text), ("Category", Categorical), ("SubCategory", Categorical)],
    );
    let mut customer =
        DimensionBuilder::new(tables::CUSTOMER, vec![("CustomerID", Text), ("CustomerName", Text), ("Segment", Categorical)]);
    let mut geo_attrs = vec![("City", Text), ("Country", Categorical), ("Region", Categorical), ("Market", Categorical)];
    if raw.has_column("PostalCode") {
        geo_attrs.push(("PostalCode", Text));
    }
    let mut geography = DimensionBuilder::new(tables::GEOGRAPHY, geo_attrs);
    let mut ship_mode = DimensionBuilder::new(tables::SHIP_MODE, vec![("ShipMode", Categorical)]);

    // The date dimension carries derived calendar attributes, so it is built by hand.
    let mut date_index: HashMap<i32, i64> = HashMap::new();
    let mut date_days: Vec<i32> = Vec::new();

    let fk = |b: &mut DimensionBuilder| -> Vec<i64> { (0..n).map(|r| b.key_of(raw, r)).collect() };
    let product_keys = fk(&mut product);
    let customer_keys = fk(&mut customer);
    let geography_keys = fk(&mut geography);
    let ship_mode_keys = fk(&mut ship_mode);
    let date_keys: Vec<i64> = (0..n)
        .map(|r| {
            let d = raw.get(r, "OrderDate").and_then(RawValue::as_date).map_or(MISSING_DATE, date_to_days);
            *date_index.entry(d).or_insert_with(|| {
                date_days.push(d);
                date_days.len() as i64 - 1
            })
        })
        .collect();

    let values = |name: &str| -> Vec<&RawValue> {
        let i = raw.column_index(name).expect("mandatory column checked above");
        raw.rows.iter().map(|row| &row[i]).collect()
    };

    let payment_source;
    let payment: Vec<f64> = if raw.has_column("ShippingPayment") {
        payment_source = PaymentSource::Column;
        values("ShippingPayment").iter().map(|v| v.as_f64().unwrap_or(f64::NAN)).collect()
    } else {
        payment_source = PaymentSource::FeeTable { calibrated: fees.calibrated };
        let modes = values("ShipMode");
        let qty = values("Quantity");
        (0..n)
            .map(|r| fees.payment(modes[r].as_str().unwrap_or(""), qty[r].as_f64().unwrap_or(0.0)))
            .collect()
    };

    let mut fact_columns = vec![
        Column::new("OrderID", Text, column_data(Text, values("OrderID").into_iter())),
        Column::new("DateKey", Integer, ColumnData::Int(date_keys)),
        Column::new("ShipDate", Date, column_data(Date, values("ShipDate").into_iter())),
        Column::new("ShipModeKey", Integer, ColumnData::Int(ship_mode_keys)),
        Column::new("CustomerKey", Integer, ColumnData::Int(customer_keys)),
        Column::new("GeographyKey", Integer, ColumnData::Int(geography_keys)),
        Column::new("ProductKey", Integer, ColumnData::Int(product_keys)),
        Column::new("Sales", Money, column_data(Money, values("Sales").into_iter())),
        Column::new("Quantity", Integer, column_data(Integer, values("Quantity").into_iter())),
        Column::new("Discount", Fraction, column_data(Fraction, values("Discount").into_iter())),
        Column::new("Profit", Money, column_data(Money, values("Profit").into_iter())),
        Column::new("ShippingCost", Money, column_data(Money, values("ShippingCost").into_iter())),
        Column::new("ShippingPayment", Money, ColumnData::Float(payment)),
    ];
    if raw.has_column("OrderPriority") {
        fact_columns.push(Column::new(
            "OrderPriority",
            Categorical,
            column_data(Categorical, values("OrderPriority").into_iter()),
        ));
    }
    let fact = ColumnTable::new(FACT_TABLE, fact_columns, None)?;

    let date_dim = {
        let dates: Vec<Option<chrono::NaiveDate>> =
            date_days.iter().map(|&d| crate::model::days_to_date(d).filter(|_| d != MISSING_DATE)).collect();
        let part = |f: fn(&chrono::NaiveDate) -> i64| -> ColumnData {
            ColumnData::Int(dates.iter().map(|d| d.as_ref().map_or(crate::model::MISSING_INT, f)).collect())
        };
        ColumnTable::new(
            tables::DATE,
            vec![
                Column::new("DateKey", Integer, ColumnData::Int((0..date_days.len() as i64).collect())),
                Column::new("Date", Date, ColumnData::Date(date_days.clone())),
                Column::new("Year", Integer, part(|d| d.year() as i64)),
                Column::new("Quarter", Integer, part(|d| d.month0() as i64 / 3 + 1)),
                Column::new("Month", Integer, part(|d| d.month() as i64)),
            ],
            Some("DateKey".into()),
        )?
    };

    let dimensions = vec![product.finish()?, customer.finish()?, geography.finish()?, date_dim, ship_mode.finish()?];
    let relationships = vec![
        relationship("ProductKey", tables::PRODUCT),
        relationship("CustomerKey", tables::CUSTOMER),
        relationship("GeographyKey", tables::GEOGRAPHY),
        relationship("DateKey", tables::DATE),
        relationship("ShipModeKey", tables::SHIP_MODE),
    ];
    let meta = SchemaMeta {
        source: raw.source_path.clone(),
        rejected_rows: raw.rejected.len(),
        encoding_fallbacks: raw.encoding_fallbacks,
        payment_source,
    };
    Ok(StarSchema::new(fact, dimensions, relationships, meta)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{default_columns, load_csv_bytes};
    use crate::model::{FilterContext, Predicate};

    const HEADER: &str = "Order ID,Order Date,Ship Date,Ship Mode,Customer ID,Customer Name,Segment,City,Country,Market,Region,Product ID,Category,Sub-Category,Product Name,Sales,Quantity,Discount,Profit,Shipping Cost";

    fn csv(rows: &[(&str, &str, &str, &str)]) -> RawDataset {
        // (order, customer, product, market)
        let mut text = String::from(HEADER);
        for (o, c, p, m) in rows {
            text.push_str(&format!(
                "\n{o},01-02-2013,03-02-2013,Second Class,{c},Name {c},Consumer,Lyon,France,{m},Central,{p},Technology,Phones,Phone {p},10,1,0,2,1"
            ));
        }
        load_csv_bytes(text.as_bytes(), "mem", &default_columns()).unwrap()
    }

    #[test]
    fn singleton_input() {
        let s = build_star_schema(&csv(&[("O1", "C1", "P1", "EU")]), &FeeTable::default()).unwrap();
        assert_eq!(s.row_count(), 1);
        for d in s.dimensions() {
            assert_eq!(d.row_count(), 1, "{}", d.name());
        }
    }

    #[test]
    fn twenty_rows_three_customers() {
        let rows: Vec<(String, String, String, String)> = (0..20)
            .map(|i| (format!("O{}", i / 2), format!("C{}", i % 3), format!("P{i}"), "EU".to_string()))
            .collect();
        let refs: Vec<(&str, &str, &str, &str)> =
            rows.iter().map(|(a, b, c, d)| (a.as_str(), b.as_str(), c.as_str(), d.as_str())).collect();
        let s = build_star_schema(&csv(&refs), &FeeTable::default()).unwrap();
        assert_eq!(s.dimension(tables::CUSTOMER).unwrap().row_count(), 3);
        assert_eq!(s.dimension(tables::PRODUCT).unwrap().row_count(), 20);
        assert_eq!(s.row_count(), 20);
    }

    #[test]
    fn fees_synthesize_payment_when_column_absent() {
        let fees = FeeTable::from_toml("calibrated = true\n[modes.\"Second Class\"]\nflat_fee = 0.25\nper_unit_fee = 0.5\n").unwrap();
        let s = build_star_schema(&csv(&[("O1", "C1", "P1", "EU")]), &fees).unwrap();
        assert_eq!(s.meta().payment_source, PaymentSource::FeeTable { calibrated: true });
        let pay = s.column(FACT_TABLE, "ShippingPayment").unwrap();
        assert_eq!(pay.number(0), Some(0.75));
    }

    #[test]
    fn dimension_filters_reach_facts() {
        let s = build_star_schema(
            &csv(&[("O1", "C1", "P1", "EU"), ("O2", "C1", "P2", "APAC"), ("O3", "C2", "P1", "APAC")]),
            &FeeTable::default(),
        )
        .unwrap();
        let ctx = FilterContext::new().with(tables::GEOGRAPHY, "Market", Predicate::eq("APAC"));
        assert_eq!(s.resolve_rows(&ctx).unwrap().to_vec(), vec![1, 2]);
        let date = s.column(tables::DATE, "Year").unwrap();
        assert_eq!(date.number(0), Some(2013.0));
    }
}
