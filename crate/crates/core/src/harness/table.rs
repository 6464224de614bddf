//! Flat result tables and their CSV / JSON encodings.

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Result};

pub const SCHEMA_VERSION: &str = "unimodal-bandit/results/v1";

pub const CSV_HEADER: [&str; 7] = ["env", "policy", "T", "replicate", "metric", "value", "stderr"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Replicate {
    Index(u64),
    /// Mean over replicates, or a per-configuration constant such as a bound.
    Agg,
}

impl fmt::Display for Replicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Replicate::Index(i) => write!(f, "{i}"),
            Replicate::Agg => f.write_str("agg"),
        }
    }
}

impl FromStr for Replicate {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "agg" {
            return Ok(Replicate::Agg);
        }
        s.parse().map(Replicate::Index).map_err(|_| invalid(format!("bad replicate field {s:?}")))
    }
}

impl Serialize for Replicate {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Replicate {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub env: String,
    pub policy: String,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub replicate: Replicate,
    pub metric: String,
    pub value: f64,
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub schema: String,
    pub rows: Vec<Row>,
}

impl Default for ResultTable {
    fn default() -> Self {
        Self { schema: SCHEMA_VERSION.to_string(), rows: Vec::new() }
    }
}

/// Mean and standard error (`sample std / sqrt(n)`, absent for `n < 2`),
/// summed in slice order.
pub fn mean_stderr(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, Some((var / n).sqrt()))
}

impl ResultTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// One row per replicate plus their aggregate.
    pub fn push_replicates(&mut self, env: &str, policy: &str, horizon: u64, metric: &str, values: &[f64]) {
        for (i, &value) in values.iter().enumerate() {
            self.rows.push(Row {
                env: env.to_string(),
                policy: policy.to_string(),
                horizon,
                replicate: Replicate::Index(i as u64),
                metric: metric.to_string(),
                value,
                stderr: None,
            });
        }
        if values.is_empty() {
            return;
        }
        let (mean, stderr) = mean_stderr(values);
        self.rows.push(Row {
            env: env.to_string(),
            policy: policy.to_string(),
            horizon,
            replicate: Replicate::Agg,
            metric: metric.to_string(),
            value: mean,
            stderr,
        });
    }

    pub fn push_constant(&mut self, env: &str, policy: &str, horizon: u64, metric: &str, value: f64) {
        self.rows.push(Row {
            env: env.to_string(),
            policy: policy.to_string(),
            horizon,
            replicate: Replicate::Agg,
            metric: metric.to_string(),
            value,
            stderr: None,
        });
    }

    /// The aggregate row for `(env, policy, T, metric)`.
    pub fn agg(&self, env: &str, policy: &str, horizon: u64, metric: &str) -> Option<&Row> {
        self.rows.iter().find(|r| {
            r.replicate == Replicate::Agg && r.env == env && r.policy == policy && r.horizon == horizon && r.metric == metric
        })
    }

    pub fn replicate_values(&self, env: &str, policy: &str, horizon: u64, metric: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| {
                matches!(r.replicate, Replicate::Index(_))
                    && r.env == env
                    && r.policy == policy
                    && r.horizon == horizon
                    && r.metric == metric
            })
            .map(|r| r.value)
            .collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(CSV_HEADER)?;
        for r in &self.rows {
            let stderr = r.stderr.map(format_g12).unwrap_or_default();
            out.write_record([
                r.env.as_str(),
                r.policy.as_str(),
                &r.horizon.to_string(),
                &r.replicate.to_string(),
                r.metric.as_str(),
                &format_g12(r.value),
                &stderr,
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn emit_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(File::create(path)?)
    }

    /// Rows plus the resolved configuration that produced them.
    pub fn emit_json<C: Serialize>(&self, config: &C, path: &Path) -> Result<()> {
        let doc = serde_json::json!({
            "schema": self.schema,
            "config": config,
            "rows": self.rows,
        });
        let mut file = File::create(path)?;
        serde_json::to_writer_pretty(&mut file, &doc)?;
        file.write_all(b"\n")?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Vec<Row>> {
        let mut input = csv::Reader::from_reader(reader);
        let header: Vec<String> = input.headers()?.iter().map(str::to_string).collect();
        if header != CSV_HEADER {
            return Err(invalid(format!("unexpected CSV header {header:?}")));
        }
        let mut rows = Vec::new();
        for record in input.records() {
            let record = record?;
            let field = |i: usize| record.get(i).unwrap_or("");
            let number = |i: usize| -> Result<f64> {
                field(i).parse().map_err(|_| invalid(format!("bad number {:?}", field(i))))
            };
            rows.push(Row {
                env: field(0).to_string(),
                policy: field(1).to_string(),
                horizon: field(2).parse().map_err(|_| invalid(format!("bad horizon {:?}", field(2))))?,
                replicate: field(3).parse()?,
                metric: field(4).to_string(),
                value: number(5)?,
                stderr: if field(6).is_empty() { None } else { Some(number(6)?) },
            });
        }
        Ok(rows)
    }

    pub fn read_csv_file(path: &Path) -> Result<Vec<Row>> {
        Self::read_csv(File::open(path)?)
    }
}

/// `printf("%.12g")`.
pub fn format_g12(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= DIGITS {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
