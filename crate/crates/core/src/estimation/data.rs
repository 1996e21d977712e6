//! Cohort death counts and accident-rate tables read from CSV.

use crate::error::{Error, Result};
use crate::model::Intensity;
use serde::{Deserialize, Serialize};
use std::io::Read;
use std::path::Path;

/// Deaths of one closed cohort followed from `age_x`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohortData {
    pub age_x: u32,
    /// Initial exposure `E_x`.
    pub exposure: u64,
    /// `deaths[t]` died between ages `x + t` and `x + t + 1`.
    pub deaths: Vec<u64>,
}

impl CohortData {
    pub fn new(age_x: u32, exposure: u64, deaths: Vec<u64>) -> Result<Self> {
        let data = CohortData {
            age_x,
            exposure,
            deaths,
        };
        data.validate()?;
        Ok(data)
    }

    pub fn validate(&self) -> Result<()> {
        if self.exposure == 0 {
            return Err(Error::param("exposure", "must be positive"));
        }
        if self.deaths.is_empty() {
            return Err(Error::param("deaths", "need at least one age"));
        }
        let total = self.total_deaths();
        if total > self.exposure {
            return Err(Error::param(
                "deaths",
                format!("total deaths {total} exceed exposure {}", self.exposure),
            ));
        }
        Ok(())
    }

    pub fn total_deaths(&self) -> u64 {
        self.deaths.iter().sum()
    }

    /// Lives still present after the last observed age.
    pub fn survivors(&self) -> u64 {
        self.exposure - self.total_deaths()
    }

    /// Last observed duration `T_max`.
    pub fn t_max(&self) -> usize {
        self.deaths.len() - 1
    }
}

/// One closed age band `[age_lo, age_hi]` with its annual accident rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccidentBand {
    pub age_lo: u32,
    pub age_hi: u32,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccidentRateTable {
    pub rows: Vec<AccidentBand>,
}

impl AccidentRateTable {
    pub fn new(rows: Vec<AccidentBand>) -> Result<Self> {
        let table = AccidentRateTable { rows };
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(Error::param("accident table", "needs at least one band"));
        }
        for (i, r) in self.rows.iter().enumerate() {
            if r.age_hi < r.age_lo {
                return Err(Error::param("accident table", format!("band {i} has age_hi < age_lo")));
            }
            if !(r.rate.is_finite() && r.rate >= 0.0) {
                return Err(Error::param("accident table", format!("band {i} has rate {}", r.rate)));
            }
            if i > 0 && r.age_lo < self.rows[i - 1].age_hi {
                return Err(Error::param(
                    "accident table",
                    format!("band {i} overlaps or precedes band {}", i - 1),
                ));
            }
        }
        Ok(())
    }

    /// Rate of the first band with `age_lo ≤ age ≤ age_hi`.
    pub fn rate_at(&self, age: u32) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.age_lo <= age && age <= r.age_hi)
            .map(|r| r.rate)
    }
}

/// Jump intensity for a cohort starting at `age_x` and followed for `years`
/// years: the band rate of each integer age, constant within the year.
pub fn calibrate_jump_intensity(table: &AccidentRateTable, age_x: u32, years: usize) -> Result<Intensity> {
    table.validate()?;
    let rates = (0..years.max(1))
        .map(|i| {
            let age = age_x + i as u32;
            table.rate_at(age).ok_or_else(|| {
                Error::param("accident table", format!("no band covers age {age}"))
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    if rates.iter().all(|r| *r == rates[0]) {
        return Ok(Intensity::ConstantIntensity { rate: rates[0] });
    }
    Ok(Intensity::PiecewiseIntensity { rates })
}

fn read_text(path: &Path) -> Result<String> {
    let mut s = String::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_string(&mut s))
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(s)
}

fn data_error(line: u64, message: impl Into<String>) -> Error {
    Error::Data {
        line,
        message: message.into(),
    }
}

fn check_header(reader: &mut csv::Reader<&[u8]>, expected: &[&str]) -> Result<()> {
    let header = reader.headers().map_err(|e| data_error(1, e.to_string()))?;
    let line = header.position().map_or(1, |p| p.line());
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != expected {
        return Err(data_error(
            line,
            format!("header must be `{}`, found `{}`", expected.join(","), got.join(",")),
        ));
    }
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    let line = rec.position().map_or(0, |p| p.line());
    let raw = rec.get(i).ok_or_else(|| data_error(line, format!("missing `{name}`")))?;
    raw.trim()
        .parse()
        .map_err(|_| data_error(line, format!("cannot parse `{name}` from `{raw}`")))
}

/// Parses the `# exposure=<n> start_age=<n>` metadata line.
fn cohort_metadata(text: &str) -> Result<(u64, u32)> {
    for (idx, line) in text.lines().enumerate() {
        let Some(rest) = line.trim_start().strip_prefix('#') else {
            continue;
        };
        let mut exposure = None;
        let mut start_age = None;
        for part in rest.split_whitespace() {
            let lineno = idx as u64 + 1;
            match part.split_once('=') {
                Some(("exposure", v)) => {
                    exposure = Some(v.parse().map_err(|_| data_error(lineno, format!("bad exposure `{v}`")))?)
                }
                Some(("start_age", v)) => {
                    start_age = Some(v.parse().map_err(|_| data_error(lineno, format!("bad start_age `{v}`")))?)
                }
                _ => {}
            }
        }
        if let (Some(e), Some(a)) = (exposure, start_age) {
            return Ok((e, a));
        }
    }
    Err(data_error(0, "missing metadata line `# exposure=<integer> start_age=<integer>`"))
}

/// Parses cohort CSV text (`age,deaths` with a metadata comment line).
pub fn parse_cohort_csv(text: &str) -> Result<CohortData> {
    let (exposure, start_age) = cohort_metadata(text)?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    check_header(&mut reader, &["age", "deaths"])?;
    let mut deaths = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| data_error(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let age: u32 = field(&rec, 0, "age")?;
        let d: u64 = field(&rec, 1, "deaths")?;
        let want = start_age + deaths.len() as u32;
        if age != want {
            return Err(data_error(line, format!("ages must be contiguous from {start_age}: expected {want}, found {age}")));
        }
        deaths.push(d);
    }
    CohortData::new(start_age, exposure, deaths)
}

pub fn load_cohort_csv(path: impl AsRef<Path>) -> Result<CohortData> {
    parse_cohort_csv(&read_text(path.as_ref())?)
}

/// Parses accident-rate CSV text (`age_lo,age_hi,rate`).
pub fn parse_accident_csv(text: &str) -> Result<AccidentRateTable> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    check_header(&mut reader, &["age_lo", "age_hi", "rate"])?;
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| data_error(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        rows.push(AccidentBand {
            age_lo: field(&rec, 0, "age_lo")?,
            age_hi: field(&rec, 1, "age_hi")?,
            rate: field(&rec, 2, "rate")?,
        });
    }
    AccidentRateTable::new(rows)
}

pub fn load_accident_csv(path: impl AsRef<Path>) -> Result<AccidentRateTable> {
    parse_accident_csv(&read_text(path.as_ref())?)
}

/// Renders cohort data in the format read by [`parse_cohort_csv`].
pub fn cohort_to_csv(data: &CohortData) -> String {
    let mut out = format!("# exposure={} start_age={}\nage,deaths\n", data.exposure, data.age_x);
    for (i, d) in data.deaths.iter().enumerate() {
        out.push_str(&format!("{},{}\n", data.age_x + i as u32, d));
    }
    out
}
