use chrono::NaiveDate;

/// Accepted date layouts, in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DateFormat {
    DayMonthYear,
    MonthDayYear,
    Iso,
}

impl DateFormat {
    pub const ALL: [DateFormat; 3] = [DateFormat::DayMonthYear, DateFormat::MonthDayYear, DateFormat::Iso];

    fn pattern(self) -> &'static str {
        match self {
            DateFormat::DayMonthYear => "%d-%m-%Y",
            DateFormat::MonthDayYear => "%m/%d/%Y",
            DateFormat::Iso => "%Y-%m-%d",
        }
    }

    pub fn parse(self, s: &str) -> Option<NaiveDate> {
        NaiveDate::parse_from_str(s.trim(), self.pattern()).ok()
    }
}

/// Number of leading non-empty values that vote on a column's format.
pub const VOTE_WINDOW: usize = 100;

/// Picks the format that parses the most of `samples`; ties go to the
/// earlier format in [`DateFormat::ALL`]. Returns `None` when nothing parses.
pub fn vote<'a>(samples: impl IntoIterator<Item = &'a str>) -> Option<DateFormat> {
    let mut counts = [0usize; 3];
    for s in samples.into_iter().filter(|s| !s.trim().is_empty()).take(VOTE_WINDOW) {
        for (i, f) in DateFormat::ALL.iter().enumerate() {
            if f.parse(s).is_some() {
                counts[i] += 1;
            }
        }
    }
    let (best, &n) = counts.iter().enumerate().rev().max_by_key(|(_, &n)| n)?;
    (n > 0).then(|| DateFormat::ALL[best])
}
