//! Reader for the semicolon-delimited UCI household power-consumption text format.

use std::fmt;
use std::io::BufRead;

use crate::error::{Error, Result};

pub const HEADER: &str = "Date;Time;Global_active_power;Global_reactive_power;Voltage;Global_intensity;Sub_metering_1;Sub_metering_2;Sub_metering_3";

const FIELD_COUNT: usize = 9;

/// Number of measurement variables carried by each record.
pub const VARIABLE_COUNT: usize = 7;

/// The seven measurement variables, in file column order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Feature {
    GlobalActivePower,
    GlobalReactivePower,
    Voltage,
    GlobalIntensity,
    SubMetering1,
    SubMetering2,
    SubMetering3,
}

impl Feature {
    pub const ALL: [Feature; VARIABLE_COUNT] = [
        Feature::GlobalActivePower,
        Feature::GlobalReactivePower,
        Feature::Voltage,
        Feature::GlobalIntensity,
        Feature::SubMetering1,
        Feature::SubMetering2,
        Feature::SubMetering3,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Column name as it appears in the file header.
    pub fn column_name(self) -> &'static str {
        match self {
            Feature::GlobalActivePower => "Global_active_power",
            Feature::GlobalReactivePower => "Global_reactive_power",
            Feature::Voltage => "Voltage",
            Feature::GlobalIntensity => "Global_intensity",
            Feature::SubMetering1 => "Sub_metering_1",
            Feature::SubMetering2 => "Sub_metering_2",
            Feature::SubMetering3 => "Sub_metering_3",
        }
    }

    pub fn from_name(name: &str) -> Option<Feature> {
        Feature::ALL.into_iter().find(|f| f.column_name().eq_ignore_ascii_case(name))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Date {
    pub year: u16,
    pub month: u8,
    pub day: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TimeOfDay {
    pub hour: u8,
    pub minute: u8,
    pub second: u8,
}

impl fmt::Display for Date {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}", self.day, self.month, self.year)
    }
}

impl fmt::Display for TimeOfDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}:{:02}:{:02}", self.hour, self.minute, self.second)
    }
}

/// One per-minute observation.
#[derive(Clone, Debug, PartialEq)]
pub struct RawRecord {
    pub date: Date,
    pub time: TimeOfDay,
    /// Measurement values in [`Feature::ALL`] order. Meaningless where `missing` is set.
    pub values: [f64; VARIABLE_COUNT],
    pub missing: [bool; VARIABLE_COUNT],
}

impl RawRecord {
    pub fn get(&self, feature: Feature) -> Option<f64> {
        let i = feature.index();
        (!self.missing[i]).then_some(self.values[i])
    }

    pub fn global_active_power(&self) -> Option<f64> {
        self.get(Feature::GlobalActivePower)
    }

    pub fn has_missing(&self) -> bool {
        self.missing.iter().any(|&m| m)
    }

    /// Serializes the record back into a data line (no trailing newline).
    pub fn to_line(&self) -> String {
        let mut line = format!("{};{}", self.date, self.time);
        for i in 0..VARIABLE_COUNT {
            line.push(';');
            if self.missing[i] {
                line.push('?');
            } else {
                line.push_str(&self.values[i].to_string());
            }
        }
        line
    }
}

fn parse_u<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Parse { line, message: format!("invalid {what} component `{s}`") })
}

fn parse_date(s: &str, line: usize) -> Result<Date> {
    let parts: Vec<&str> = s.split('/').collect();
    if parts.len() != 3 {
        return Err(Error::Parse { line, message: format!("invalid date `{s}`") });
    }
    let date = Date {
        day: parse_u(parts[0], line, "day")?,
        month: parse_u(parts[1], line, "month")?,
        year: parse_u(parts[2], line, "year")?,
    };
    if !(1..=31).contains(&date.day) || !(1..=12).contains(&date.month) {
        return Err(Error::Parse { line, message: format!("date out of range `{s}`") });
    }
    Ok(date)
}

fn parse_time(s: &str, line: usize) -> Result<TimeOfDay> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Parse { line, message: format!("invalid time `{s}`") });
    }
    let t = TimeOfDay {
        hour: parse_u(parts[0], line, "hour")?,
        minute: parse_u(parts[1], line, "minute")?,
        second: parse_u(parts[2], line, "second")?,
    };
    if t.hour > 23 || t.minute > 59 || t.second > 59 {
        return Err(Error::Parse { line, message: format!("time out of range `{s}`") });
    }
    Ok(t)
}

fn parse_line(text: &str, line: usize) -> Result<RawRecord> {
    let fields: Vec<&str> = text.split(';').collect();
    if fields.len() != FIELD_COUNT {
        return Err(Error::Parse { line, message: format!("expected {FIELD_COUNT} fields, found {}", fields.len()) });
    }
    let mut values = [0.0; VARIABLE_COUNT];
    let mut missing = [false; VARIABLE_COUNT];
    for (i, raw) in fields[2..].iter().enumerate() {
        let raw = raw.trim();
        if raw == "?" || raw.is_empty() {
            missing[i] = true;
            continue;
        }
        let v: f64 = raw.parse().map_err(|_| Error::Parse {
            line,
            message: format!("invalid number `{raw}` in column {}", Feature::ALL[i].column_name()),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse { line, message: format!("non-finite value `{raw}`") });
        }
        values[i] = v;
    }
    Ok(RawRecord { date: parse_date(fields[0], line)?, time: parse_time(fields[1], line)?, values, missing })
}

/// Parses a UCI household file. Line numbers in errors are 1-based and count the header.
pub fn parse_uci_household<R: BufRead>(reader: R) -> Result<Vec<RawRecord>> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => return Err(Error::Format("empty input, header line missing".into())),
    };
    let header = header.trim_start_matches('\u{feff}').trim_end();
    if header != HEADER {
        return Err(Error::Format(format!("unexpected header `{header}`")));
    }
    let mut records = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        let text = line.trim_end();
        if text.is_empty() {
            continue;
        }
        records.push(parse_line(text, idx + 2)?);
    }
    Ok(records)
}

/// Forward-fills one series. Leading gaps take the first observed value.
/// Returns `None` when nothing is observed.
pub fn forward_fill(series: &[Option<f64>]) -> Option<Vec<f64>> {
    let first = series.iter().find_map(|v| *v)?;
    let mut last = first;
    Some(
        series
            .iter()
            .map(|v| {
                if let Some(x) = v {
                    last = *x;
                }
                last
            })
            .collect(),
    )
}

/// Replaces every missing measurement by forward fill, per feature.
pub fn impute_missing(mut records: Vec<RawRecord>) -> Result<Vec<RawRecord>> {
    if records.is_empty() {
        return Ok(records);
    }
    for feature in Feature::ALL {
        let column: Vec<Option<f64>> = records.iter().map(|r| r.get(feature)).collect();
        let filled = forward_fill(&column).ok_or(Error::UnusableFeature(feature.column_name()))?;
        let i = feature.index();
        for (rec, v) in records.iter_mut().zip(filled) {
            rec.values[i] = v;
            rec.missing[i] = false;
        }
    }
    Ok(records)
}

/// Hourly means of one feature, grouping consecutive records sharing a date and hour.
/// Missing values are skipped; an hour with no observations is dropped.
pub fn hourly_means(records: &[RawRecord], feature: Feature) -> Vec<f64> {
    let mut out = Vec::new();
    let mut key = None;
    let (mut sum, mut count) = (0.0, 0usize);
    for rec in records {
        let k = (rec.date, rec.time.hour);
        if key != Some(k) {
            if count > 0 {
                out.push(sum / count as f64);
            }
            key = Some(k);
            sum = 0.0;
            count = 0;
        }
        if let Some(v) = rec.get(feature) {
            sum += v;
            count += 1;
        }
    }
    if count > 0 {
        out.push(sum / count as f64);
    }
    out
}
