//! Helpers for the acceptance gate: outcome bookkeeping and thin wrappers
//! around the `zids` command line.
//!
//! Real-data criteria read the KDD99 files named by `ZIDS_KDD99_FULL` (the
//! complete 4,898,431-record file) and `ZIDS_KDD99_10PCT` (the 494,021-record
//! subset). Either may be gzip-compressed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;

pub const FULL_ENV: &str = "ZIDS_KDD99_FULL";
pub const TEN_PERCENT_ENV: &str = "ZIDS_KDD99_10PCT";
/// Keeps artifacts in this directory instead of a temporary one.
pub const OUT_ENV: &str = "ZIDS_ACCEPTANCE_OUT";

#[derive(Debug, Clone)]
pub struct Outcome {
    pub id: u32,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Default)]
pub struct Gate {
    pub outcomes: Vec<Outcome>,
}

impl Gate {
    pub fn record(&mut self, id: u32, title: &'static str, result: Result<String, String>) {
        let (pass, detail) = match result {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        let o = Outcome { id, title, pass, detail };
        println!("{}", o.line());
        self.outcomes.push(o);
    }

    pub fn passed(&self) -> usize {
        self.outcomes.iter().filter(|o| o.pass).count()
    }

    pub fn all_passed(&self) -> bool {
        self.passed() == self.outcomes.len()
    }
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} [{}] {}: {}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.title,
            self.detail
        )
    }
}

pub fn dataset(var: &str) -> Option<PathBuf> {
    std::env::var_os(var).map(PathBuf::from).filter(|p| p.exists())
}

/// Runs `zids` in-process; `Err` carries the command and exit status.
pub fn zids(args: &[&str]) -> Result<(), String> {
    eprintln!("$ zids {}", args.join(" "));
    match ids_cli::run(std::iter::once("zids").chain(args.iter().copied())) {
        0 => Ok(()),
        code => Err(format!("`zids {}` exited with {code}", args.join(" "))),
    }
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("UTF-8 path")
}

pub fn read_json(path: &Path) -> Result<Value, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

/// `category -> count` from a `counts.csv`.
pub fn read_counts(path: &Path) -> Result<BTreeMap<String, u64>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    text.lines()
        .skip(1)
        .map(|l| {
            let (k, v) = l.split_once(',').ok_or_else(|| format!("bad counts row {l:?}"))?;
            Ok((k.to_string(), v.parse().map_err(|e| format!("{l:?}: {e}"))?))
        })
        .collect()
}

/// Scores pulled from a `report.json`.
#[derive(Debug, Clone)]
pub struct Scores {
    pub accuracy: f64,
    pub macro_recall: f64,
    /// `(class, recall, support)` in report order.
    pub classes: Vec<(String, f64, u64)>,
}

impl Scores {
    pub fn load(report_json: &Path) -> Result<Self, String> {
        let v = read_json(report_json)?;
        let num = |v: &Value| v.as_f64().ok_or_else(|| format!("{}: missing number", report_json.display()));
        let classes = v["classes"]
            .as_array()
            .ok_or("report without classes")?
            .iter()
            .map(|c| {
                Ok((
                    c["class"].as_str().unwrap_or_default().to_string(),
                    num(&c["recall"])?,
                    c["support"].as_u64().unwrap_or(0),
                ))
            })
            .collect::<Result<_, String>>()?;
        Ok(Self {
            accuracy: num(&v["accuracy"])?,
            macro_recall: num(&v["macro_avg"]["recall"])?,
            classes,
        })
    }

    pub fn recall(&self, class: &str) -> Option<f64> {
        self.classes.iter().find(|c| c.0 == class).map(|c| c.1)
    }
}

/// Ranked feature names per class from a `top5.csv`.
pub fn read_rankings(path: &Path) -> Result<BTreeMap<String, Vec<String>>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut out: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 3 {
            return Err(format!("bad ranking row {line:?}"));
        }
        out.entry(cols[0].to_string()).or_default().push(cols[2].trim_matches('"').to_string());
    }
    Ok(out)
}
