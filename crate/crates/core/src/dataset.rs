//! KDD99 connection records: wire format, feature schema and the four-way
//! label taxonomy.
//!
//! A KDD99 line carries 41 comma-separated feature values followed by the
//! attack label, usually terminated by a dot (`...,normal.`). Three features
//! (`protocol_type`, `service`, `flag`) are categorical strings; the other 38
//! are non-negative counts, rates or durations.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, BufReader, Read};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of feature columns in a KDD99 record.
pub const NUM_FEATURES: usize = 41;

/// Fields per line: the 41 features plus the label.
pub const FIELDS_PER_LINE: usize = NUM_FEATURES + 1;

/// Zero-based positions of the categorical features.
pub const CATEGORICAL_POSITIONS: [usize; 3] = [1, 2, 3];

/// Column names of the KDD99 feature set, in file order.
pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "duration",
    "protocol_type",
    "service",
    "flag",
    "src_bytes",
    "dst_bytes",
    "land",
    "wrong_fragment",
    "urgent",
    "hot",
    "num_failed_logins",
    "logged_in",
    "num_compromised",
    "root_shell",
    "su_attempted",
    "num_root",
    "num_file_creations",
    "num_shells",
    "num_access_files",
    "num_outbound_cmds",
    "is_host_login",
    "is_guest_login",
    "count",
    "srv_count",
    "serror_rate",
    "srv_serror_rate",
    "rerror_rate",
    "srv_rerror_rate",
    "same_srv_rate",
    "diff_srv_rate",
    "srv_diff_host_rate",
    "dst_host_count",
    "dst_host_srv_count",
    "dst_host_same_srv_rate",
    "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate",
    "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate",
    "dst_host_srv_serror_rate",
    "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate",
];

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line_no}: expected {FIELDS_PER_LINE} fields, found {field_count}")]
    MalformedLine { line_no: usize, field_count: usize },
    #[error("line {line_no}: column {column} ({}) is not a finite non-negative number: {value:?}", FEATURE_NAMES[*column])]
    TypeError {
        line_no: usize,
        column: usize,
        value: String,
    },
    #[error("line {line_no}: empty label")]
    EmptyLabel { line_no: usize },
    #[error("no records")]
    EmptyInput,
    #[error("label {label:?} is not in the taxonomy")]
    UnknownLabel { label: String },
    #[error("invalid taxonomy: {0}")]
    InvalidTaxonomy(String),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
}

pub type Result<T> = std::result::Result<T, DatasetError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Continuous,
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub name: String,
    pub kind: FeatureKind,
}

/// Ordered feature descriptors plus the observed vocabulary of every
/// categorical feature.
///
/// `vocabularies[i]` belongs to the i-th categorical feature in schema order
/// and is kept sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub features: Vec<FeatureDescriptor>,
    pub vocabularies: Vec<Vec<String>>,
}

/// The 41 KDD99 descriptors with their kinds.
pub fn kdd99_features() -> Vec<FeatureDescriptor> {
    FEATURE_NAMES
        .iter()
        .enumerate()
        .map(|(i, name)| FeatureDescriptor {
            name: (*name).to_string(),
            kind: if CATEGORICAL_POSITIONS.contains(&i) {
                FeatureKind::Categorical
            } else {
                FeatureKind::Continuous
            },
        })
        .collect()
}

impl FeatureSchema {
    pub fn continuous_positions(&self) -> Vec<usize> {
        self.positions(FeatureKind::Continuous)
    }

    pub fn categorical_positions(&self) -> Vec<usize> {
        self.positions(FeatureKind::Categorical)
    }

    fn positions(&self, kind: FeatureKind) -> Vec<usize> {
        self.features
            .iter()
            .enumerate()
            .filter(|(_, f)| f.kind == kind)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn vocabulary(&self, feature: &str) -> Option<&[String]> {
        let slot = self
            .categorical_positions()
            .iter()
            .position(|&p| self.features[p].name == feature)?;
        self.vocabularies.get(slot).map(Vec::as_slice)
    }

    /// Width of the encoded matrix: one column per continuous feature plus
    /// one per vocabulary entry.
    pub fn encoded_width(&self) -> usize {
        self.continuous_positions().len() + self.vocabularies.iter().map(Vec::len).sum::<usize>()
    }

    /// Column names of the encoded matrix: continuous features in schema
    /// order, then `feature=value` for each one-hot column.
    pub fn encoded_feature_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .continuous_positions()
            .into_iter()
            .map(|p| self.features[p].name.clone())
            .collect();
        for (slot, p) in self.categorical_positions().into_iter().enumerate() {
            for value in &self.vocabularies[slot] {
                names.push(format!("{}={}", self.features[p].name, value));
            }
        }
        names
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.len() != NUM_FEATURES {
            return Err(DatasetError::InvalidSchema(format!(
                "expected {NUM_FEATURES} features, found {}",
                self.features.len()
            )));
        }
        if self.categorical_positions() != CATEGORICAL_POSITIONS {
            return Err(DatasetError::InvalidSchema(
                "categorical features must be at positions 1, 2, 3".into(),
            ));
        }
        if self.vocabularies.len() != CATEGORICAL_POSITIONS.len() {
            return Err(DatasetError::InvalidSchema(
                "one vocabulary per categorical feature".into(),
            ));
        }
        for vocab in &self.vocabularies {
            if vocab.windows(2).any(|w| w[0] >= w[1]) {
                return Err(DatasetError::InvalidSchema(
                    "vocabularies must be sorted and deduplicated".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Accumulates categorical vocabularies from a stream of records.
#[derive(Debug, Default)]
pub struct SchemaBuilder {
    seen: [BTreeSet<String>; 3],
    records: usize,
}

impl SchemaBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, record: &RawRecord) {
        for (slot, &p) in CATEGORICAL_POSITIONS.iter().enumerate() {
            if !self.seen[slot].contains(&record.values[p]) {
                self.seen[slot].insert(record.values[p].clone());
            }
        }
        self.records += 1;
    }

    pub fn finish(self) -> Result<FeatureSchema> {
        if self.records == 0 {
            return Err(DatasetError::EmptyInput);
        }
        Ok(FeatureSchema {
            features: kdd99_features(),
            vocabularies: self
                .seen
                .into_iter()
                .map(|set| set.into_iter().collect())
                .collect(),
        })
    }
}

pub fn build_schema<'a, I>(records: I) -> Result<FeatureSchema>
where
    I: IntoIterator<Item = &'a RawRecord>,
{
    let mut builder = SchemaBuilder::new();
    for r in records {
        builder.observe(r);
    }
    builder.finish()
}

/// One KDD99 connection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    /// The 41 feature values as they appear in the file.
    pub values: Vec<String>,
    /// Lowercase attack name without the trailing dot.
    pub label: String,
}

impl RawRecord {
    /// Numeric value of a continuous column. Parsing was checked on read.
    pub fn numeric(&self, position: usize) -> f64 {
        self.values[position].parse().unwrap_or(0.0)
    }

    /// Serializes the record in KDD99 format, dot-terminated, without a newline.
    pub fn to_kdd_line(&self) -> String {
        let mut line = self.values.join(",");
        line.push(',');
        line.push_str(&self.label);
        line.push('.');
        line
    }
}

/// Lowercases and strips one trailing dot.
pub fn normalize_label(raw: &str) -> String {
    let trimmed = raw.trim();
    trimmed
        .strip_suffix('.')
        .unwrap_or(trimmed)
        .trim()
        .to_ascii_lowercase()
}

fn parse_line(line: &str, line_no: usize) -> Result<RawRecord> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != FIELDS_PER_LINE {
        return Err(DatasetError::MalformedLine {
            line_no,
            field_count: fields.len(),
        });
    }
    let mut values = Vec::with_capacity(NUM_FEATURES);
    for (column, field) in fields[..NUM_FEATURES].iter().enumerate() {
        let field = field.trim();
        if !CATEGORICAL_POSITIONS.contains(&column) {
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() && v >= 0.0 => {}
                _ => {
                    return Err(DatasetError::TypeError {
                        line_no,
                        column,
                        value: field.to_string(),
                    })
                }
            }
        }
        values.push(field.to_string());
    }
    let label = normalize_label(fields[NUM_FEATURES]);
    if label.is_empty() {
        return Err(DatasetError::EmptyLabel { line_no });
    }
    Ok(RawRecord { values, label })
}

/// Streaming reader: yields one record per non-empty line, holding only the
/// current line in memory.
pub struct KddReader<R> {
    inner: R,
    buf: String,
    line_no: usize,
}

impl<R: BufRead> KddReader<R> {
    pub fn new(inner: R) -> Self {
        Self {
            inner,
            buf: String::new(),
            line_no: 0,
        }
    }
}

impl<R: Read> KddReader<BufReader<R>> {
    pub fn from_reader(inner: R) -> Self {
        Self::new(BufReader::with_capacity(1 << 16, inner))
    }
}

impl<R: BufRead> Iterator for KddReader<R> {
    type Item = Result<RawRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.inner.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {
                    self.line_no += 1;
                    let line = self.buf.trim_end_matches(['\n', '\r']);
                    if line.trim().is_empty() {
                        continue;
                    }
                    return Some(parse_line(line, self.line_no));
                }
                Err(e) => return Some(Err(e.into())),
            }
        }
    }
}

/// Parses a whole KDD99 stream into memory.
pub fn parse_kdd<R: Read>(stream: R) -> Result<Vec<RawRecord>> {
    KddReader::from_reader(stream).collect()
}

/// The four coarse categories, in class-index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Normal,
    DoS,
    Probe,
    UnauthorizedAccess,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Normal,
        Category::DoS,
        Category::Probe,
        Category::UnauthorizedAccess,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Normal => "Normal",
            Category::DoS => "DoS",
            Category::Probe => "Probe",
            Category::UnauthorizedAccess => "UnauthorizedAccess",
        }
    }

    pub fn names() -> Vec<String> {
        Self::ALL.iter().map(|c| c.name().to_string()).collect()
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self> {
        Category::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| DatasetError::UnknownLabel {
                label: s.to_string(),
            })
    }
}

const DOS_LABELS: &[&str] = &[
    "back",
    "land",
    "neptune",
    "pod",
    "smurf",
    "teardrop",
    "apache2",
    "udpstorm",
    "processtable",
    "worm",
];

const PROBE_LABELS: &[&str] = &["satan", "ipsweep", "nmap", "portsweep", "mscan", "saint"];

const UNAUTHORIZED_LABELS: &[&str] = &[
    "guess_passwd",
    "ftp_write",
    "imap",
    "phf",
    "multihop",
    "warezmaster",
    "warezclient",
    "spy",
    "xlock",
    "xsnoop",
    "snmpguess",
    "snmpgetattack",
    "httptunnel",
    "sendmail",
    "named",
    "mailbomb",
    "buffer_overflow",
    "loadmodule",
    "rootkit",
    "perl",
    "sqlattack",
    "xterm",
    "ps",
];

/// Fine attack label to coarse category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelTaxonomy {
    mapping: BTreeMap<String, Category>,
}

impl LabelTaxonomy {
    /// Builds a taxonomy from explicit pairs. Labels are normalized; `normal`
    /// must map to Normal and be the only label that does.
    pub fn new<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Category)>,
        S: AsRef<str>,
    {
        let mut mapping = BTreeMap::new();
        for (label, cat) in pairs {
            let label = normalize_label(label.as_ref());
            if let Some(prev) = mapping.insert(label.clone(), cat) {
                if prev != cat {
                    return Err(DatasetError::InvalidTaxonomy(format!(
                        "{label:?} mapped to both {prev} and {cat}"
                    )));
                }
            }
        }
        if mapping.get("normal") != Some(&Category::Normal) {
            return Err(DatasetError::InvalidTaxonomy(
                "\"normal\" must map to Normal".into(),
            ));
        }
        if let Some((label, _)) = mapping
            .iter()
            .find(|(l, c)| **c == Category::Normal && l.as_str() != "normal")
        {
            return Err(DatasetError::InvalidTaxonomy(format!(
                "only \"normal\" may map to Normal, found {label:?}"
            )));
        }
        Ok(Self { mapping })
    }

    pub fn category(&self, label: &str) -> Option<Category> {
        match self.mapping.get(label) {
            Some(c) => Some(*c),
            None => self.mapping.get(&normalize_label(label)).copied(),
        }
    }

    pub fn try_category(&self, label: &str) -> Result<Category> {
        self.category(label).ok_or_else(|| DatasetError::UnknownLabel {
            label: label.to_string(),
        })
    }

    pub fn labels(&self) -> impl Iterator<Item = (&str, Category)> {
        self.mapping.iter().map(|(l, c)| (l.as_str(), *c))
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }
}

/// The grouping that reproduces the published category totals: flooding
/// attacks under DoS, scans under Probe, R2L and U2R under unauthorized access.
pub fn default_taxonomy() -> LabelTaxonomy {
    let pairs = std::iter::once(("normal", Category::Normal))
        .chain(DOS_LABELS.iter().map(|l| (*l, Category::DoS)))
        .chain(PROBE_LABELS.iter().map(|l| (*l, Category::Probe)))
        .chain(
            UNAUTHORIZED_LABELS
                .iter()
                .map(|l| (*l, Category::UnauthorizedAccess)),
        );
    LabelTaxonomy::new(pairs).expect("built-in taxonomy is valid")
}

impl Default for LabelTaxonomy {
    fn default() -> Self {
        default_taxonomy()
    }
}

/// Record count per coarse category, indexed by `Category::index`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub counts: [u64; 4],
}

impl CategoryCounts {
    pub fn add(&mut self, label: &str, taxonomy: &LabelTaxonomy) -> Result<Category> {
        let cat = taxonomy.try_category(label)?;
        self.counts[cat.index()] += 1;
        Ok(cat)
    }

    pub fn get(&self, cat: Category) -> u64 {
        self.counts[cat.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Two-column CSV `category,count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("category,count\n");
        for cat in Category::ALL {
            out.push_str(&format!("{},{}\n", cat.name(), self.get(cat)));
        }
        out
    }
}

pub fn coarse_counts<'a, I>(records: I, taxonomy: &LabelTaxonomy) -> Result<CategoryCounts>
where
    I: IntoIterator<Item = &'a RawRecord>,
{
    let mut counts = CategoryCounts::default();
    for r in records {
        counts.add(&r.label, taxonomy)?;
    }
    Ok(counts)
}
