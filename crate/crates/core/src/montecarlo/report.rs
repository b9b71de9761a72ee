//! Per-trial rows, declared checks, and their CSV/text persistence.
//!
//! A report is written as three files named after the experiment and the
//! master seed:
//!
//! * `<id>_seed<seed>.csv`: `group,trial,<columns...>`, one row per trial
//!   (or per batch of trials for high-volume probability estimates);
//! * `<id>_seed<seed>_checks.csv`: `check,value,relation,threshold,passed`;
//! * `<id>_seed<seed>_summary.txt`: human-readable block, the only file
//!   that carries a timestamp.
//!
//! Both CSV bodies are byte-identical across runs with the same inputs.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{Error, Result};
use crate::fmt_f64;

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub group: String,
    pub trial: u64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    AtMost,
    AtLeast,
}

impl Relation {
    pub fn holds(self, value: f64, threshold: f64) -> bool {
        match self {
            Relation::AtMost => value <= threshold,
            Relation::AtLeast => value >= threshold,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
        })
    }
}

impl std::str::FromStr for Relation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "<=" => Ok(Relation::AtMost),
            ">=" => Ok(Relation::AtLeast),
            other => Err(Error::Contract(format!("unknown relation `{other}`"))),
        }
    }
}

/// A declared tolerance and whether the measured value meets it.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, relation: Relation, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            relation,
            threshold,
            passed: relation.holds(value, threshold),
        }
    }

    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Relation::AtMost, threshold)
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Relation::AtLeast, threshold)
    }
}

/// Mean and standard error (`sample stdev / √count`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub count: usize,
    pub mean: f64,
    pub stderr: f64,
}

impl Aggregate {
    /// Accumulates in slice order.
    pub fn of(values: &[f64]) -> Self {
        let count = values.len();
        if count == 0 {
            return Aggregate {
                count,
                mean: f64::NAN,
                stderr: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let stderr = if count > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
            (var / count as f64).sqrt()
        } else {
            0.0
        };
        Aggregate { count, mean, stderr }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub experiment: String,
    pub master_seed: u64,
    pub columns: Vec<String>,
    pub rows: Vec<TrialRow>,
    pub checks: Vec<Check>,
    /// Free-form lines for the summary block.
    pub notes: Vec<String>,
}

impl TrialReport {
    pub fn new(experiment: impl Into<String>, master_seed: u64, columns: &[&str]) -> Self {
        TrialReport {
            experiment: experiment.into(),
            master_seed,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            checks: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn push_row(&mut self, group: impl Into<String>, trial: u64, values: Vec<f64>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push(TrialRow {
            group: group.into(),
            trial,
            values,
        });
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Values of one column for one group, in row order.
    pub fn column(&self, group: &str, name: &str) -> Vec<f64> {
        let Some(k) = self.column_index(name) else {
            return Vec::new();
        };
        self.rows
            .iter()
            .filter(|r| r.group == group)
            .map(|r| r.values[k])
            .collect()
    }

    pub fn aggregate(&self, group: &str, name: &str) -> Aggregate {
        Aggregate::of(&self.column(group, name))
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn file_stem(&self) -> String {
        format!("{}_seed{}", self.experiment, self.master_seed)
    }

    pub fn write_rows_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "group,trial,{}", self.columns.join(","))?;
        for r in &self.rows {
            let vals: Vec<String> = r.values.iter().map(|v| fmt_f64(*v)).collect();
            writeln!(out, "{},{},{}", r.group, r.trial, vals.join(","))?;
        }
        Ok(())
    }

    pub fn write_checks_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "check,value,relation,threshold,passed")?;
        for c in &self.checks {
            writeln!(
                out,
                "{},{},{},{},{}",
                c.name,
                fmt_f64(c.value),
                c.relation,
                fmt_f64(c.threshold),
                c.passed
            )?;
        }
        Ok(())
    }

    pub fn write_summary<W: Write>(&self, mut out: W) -> Result<()> {
        let stamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        writeln!(out, "experiment: {}", self.experiment)?;
        writeln!(out, "master seed: {}", self.master_seed)?;
        writeln!(out, "generated (unix seconds): {stamp}")?;
        writeln!(out, "rows: {}", self.rows.len())?;
        for note in &self.notes {
            writeln!(out, "note: {note}")?;
        }
        for c in &self.checks {
            writeln!(
                out,
                "[{}] {}: {} {} {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                fmt_f64(c.value),
                c.relation,
                fmt_f64(c.threshold)
            )?;
        }
        writeln!(out, "overall: {}", if self.all_passed() { "PASS" } else { "FAIL" })?;
        Ok(())
    }

    /// Writes the three report files into `dir`; returns their paths.
    pub fn persist(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let stem = self.file_stem();
        let rows = dir.join(format!("{stem}.csv"));
        let checks = dir.join(format!("{stem}_checks.csv"));
        let summary = dir.join(format!("{stem}_summary.txt"));
        self.write_rows_csv(std::io::BufWriter::new(std::fs::File::create(&rows)?))?;
        self.write_checks_csv(std::fs::File::create(&checks)?)?;
        self.write_summary(std::fs::File::create(&summary)?)?;
        Ok(vec![rows, checks, summary])
    }
}

/// Parses a rows file written by [`TrialReport::write_rows_csv`].
pub fn read_rows_csv(path: &Path) -> Result<(Vec<String>, Vec<TrialRow>)> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::Contract(format!("{} is empty", path.display())))?;
    let columns: Vec<String> = header.split(',').skip(2).map(String::from).collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let bad = |what: &str| Error::Contract(format!("{}:{}: {what}", path.display(), i + 2));
        let mut fields = line.split(',');
        let group = fields.next().ok_or_else(|| bad("missing group"))?.to_string();
        let trial = fields
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad("bad trial index"))?;
        let values = fields
            .map(|v| v.parse::<f64>().map_err(|_| bad("bad value")))
            .collect::<Result<Vec<_>>>()?;
        rows.push(TrialRow { group, trial, values });
    }
    Ok((columns, rows))
}

/// Re-derives pass/fail from a checks file; true iff every check holds.
pub fn recheck_checks_csv(path: &Path) -> Result<bool> {
    let text = std::fs::read_to_string(path)?;
    let mut ok = true;
    for (i, line) in text.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.rsplitn(5, ',').collect();
        if f.len() != 5 {
            return Err(Error::Contract(format!("{}:{}: malformed check row", path.display(), i + 1)));
        }
        // rsplitn yields fields from the right: passed, threshold, relation, value, name.
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| Error::Contract(format!("{}:{}: bad number `{s}`", path.display(), i + 1)))
        };
        let threshold = parse(f[1])?;
        let relation: Relation = f[2].parse()?;
        let value = parse(f[3])?;
        ok &= relation.holds(value, threshold);
    }
    Ok(ok)
}
