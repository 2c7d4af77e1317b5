//! Dense encoding of KDD99 records, stratified splitting, class weights and
//! the `ZIDS` binary container.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Category, DatasetError, FeatureSchema, LabelTaxonomy, RawRecord};

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("value {value:?} of feature {feature} is not in the schema vocabulary")]
    UnknownCategory { feature: String, value: String },
    #[error("label {label:?} is not in the label space")]
    UnknownLabel { label: String },
    #[error("class {class} has no samples")]
    DegenerateClass { class: usize },
    #[error("class {class} does not occur in the labels")]
    MissingClass { class: usize },
    #[error("requested {requested} rows from a dataset of {available}")]
    OutOfRange { requested: usize, available: usize },
    #[error("fraction {0} must lie strictly between 0 and 1")]
    InvalidFraction(f64),
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a ZIDS container")]
    BadMagic,
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt container: {0}")]
    Corrupt(String),
}

pub type Result<T> = std::result::Result<T, PreprocessError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    /// One class per attack name.
    Fine,
    /// The four categories of the label taxonomy.
    Coarse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRange {
    pub min: f64,
    pub max: f64,
}

impl ScalingRange {
    pub fn apply(&self, v: f64) -> f64 {
        if self.max > self.min {
            (v - self.min) / (self.max - self.min)
        } else {
            0.0
        }
    }
}

/// Min-max ranges of the continuous features, in schema order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Scaling {
    pub ranges: Vec<ScalingRange>,
}

/// Streaming min-max fit over continuous features.
#[derive(Debug, Clone)]
pub struct ScalingFitter {
    positions: Vec<usize>,
    ranges: Vec<ScalingRange>,
    seen: usize,
}

impl ScalingFitter {
    pub fn new(schema: &FeatureSchema) -> Self {
        let positions = schema.continuous_positions();
        let ranges = vec![
            ScalingRange {
                min: f64::INFINITY,
                max: f64::NEG_INFINITY,
            };
            positions.len()
        ];
        Self {
            positions,
            ranges,
            seen: 0,
        }
    }

    pub fn observe(&mut self, record: &RawRecord) {
        for (r, &p) in self.ranges.iter_mut().zip(&self.positions) {
            let v = record.numeric(p);
            r.min = r.min.min(v);
            r.max = r.max.max(v);
        }
        self.seen += 1;
    }

    pub fn finish(self) -> Result<Scaling> {
        if self.seen == 0 {
            return Err(DatasetError::EmptyInput.into());
        }
        Ok(Scaling {
            ranges: self.ranges,
        })
    }
}

impl Scaling {
    pub fn fit<'a, I>(records: I, schema: &FeatureSchema) -> Result<Self>
    where
        I: IntoIterator<Item = &'a RawRecord>,
    {
        let mut fitter = ScalingFitter::new(schema);
        for r in records {
            fitter.observe(r);
        }
        fitter.finish()
    }
}

/// The set of classes a record label is mapped into.
#[derive(Debug, Clone)]
pub enum LabelSpace {
    /// Sorted fine label names.
    Fine(Vec<String>),
    Coarse(LabelTaxonomy),
}

impl LabelSpace {
    /// Fine label space over the distinct labels of `records`.
    pub fn fine_from<'a, I>(records: I) -> Self
    where
        I: IntoIterator<Item = &'a RawRecord>,
    {
        let set: std::collections::BTreeSet<&str> =
            records.into_iter().map(|r| r.label.as_str()).collect();
        LabelSpace::Fine(set.into_iter().map(str::to_string).collect())
    }

    pub fn class_names(&self) -> Vec<String> {
        match self {
            LabelSpace::Fine(names) => names.clone(),
            LabelSpace::Coarse(_) => Category::names(),
        }
    }

    pub fn index(&self, label: &str) -> Result<u16> {
        let unknown = || PreprocessError::UnknownLabel {
            label: label.to_string(),
        };
        match self {
            LabelSpace::Fine(names) => names
                .binary_search_by(|n| n.as_str().cmp(label))
                .map(|i| i as u16)
                .map_err(|_| unknown()),
            LabelSpace::Coarse(t) => t.category(label).map(|c| c.index() as u16).ok_or_else(unknown),
        }
    }
}

/// Encodes single records into rows of the dense matrix.
///
/// Column layout: continuous features (scaled) in schema order, then one
/// one-hot block per categorical feature in vocabulary order.
#[derive(Debug, Clone)]
pub struct Encoder {
    schema: FeatureSchema,
    continuous: Vec<usize>,
    categorical: Vec<usize>,
    block_offsets: Vec<usize>,
    labels: LabelSpace,
    scaling: Scaling,
}

impl Encoder {
    pub fn new(schema: &FeatureSchema, labels: LabelSpace, scaling: Scaling) -> Result<Self> {
        schema.validate()?;
        let continuous = schema.continuous_positions();
        if scaling.ranges.len() != continuous.len() {
            return Err(PreprocessError::Corrupt(format!(
                "scaling has {} ranges for {} continuous features",
                scaling.ranges.len(),
                continuous.len()
            )));
        }
        let mut block_offsets = Vec::with_capacity(schema.vocabularies.len());
        let mut offset = continuous.len();
        for v in &schema.vocabularies {
            block_offsets.push(offset);
            offset += v.len();
        }
        Ok(Self {
            categorical: schema.categorical_positions(),
            schema: schema.clone(),
            continuous,
            block_offsets,
            labels,
            scaling,
        })
    }

    pub fn width(&self) -> usize {
        self.schema.encoded_width()
    }

    pub fn class_names(&self) -> Vec<String> {
        self.labels.class_names()
    }

    pub fn scaling(&self) -> &Scaling {
        &self.scaling
    }

    /// Writes the encoded features of `record` into `row` and returns its
    /// class index.
    pub fn encode_into(&self, record: &RawRecord, row: &mut [f32]) -> Result<u16> {
        debug_assert_eq!(row.len(), self.width());
        let label = self.labels.index(&record.label)?;
        row.fill(0.0);
        for (col, (&p, range)) in self.continuous.iter().zip(&self.scaling.ranges).enumerate() {
            row[col] = range.apply(record.numeric(p)) as f32;
        }
        for (slot, &p) in self.categorical.iter().enumerate() {
            let value = &record.values[p];
            let pos = self.schema.vocabularies[slot]
                .binary_search(value)
                .map_err(|_| PreprocessError::UnknownCategory {
                    feature: self.schema.features[p].name.clone(),
                    value: value.clone(),
                })?;
            row[self.block_offsets[slot] + pos] = 1.0;
        }
        Ok(label)
    }
}

/// Dense model input with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDataset {
    pub x: Array2<f32>,
    pub y: Vec<u16>,
    pub class_names: Vec<String>,
    pub scaling: Scaling,
}

impl EncodedDataset {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn width(&self) -> usize {
        self.x.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for &c in &self.y {
            counts[c as usize] += 1;
        }
        counts
    }

    /// Rows at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            x: self.x.select(Axis(0), indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            class_names: self.class_names.clone(),
            scaling: self.scaling.clone(),
        }
    }

    /// Maps fine labels onto the four taxonomy categories.
    pub fn coarse_labels(&self, taxonomy: &LabelTaxonomy) -> Result<Vec<u16>> {
        let lookup = self
            .class_names
            .iter()
            .map(|n| {
                taxonomy
                    .category(n)
                    .map(|c| c.index() as u16)
                    .ok_or_else(|| PreprocessError::UnknownLabel { label: n.clone() })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.y.iter().map(|&c| lookup[c as usize]).collect())
    }

    /// Relabels a fine-grained dataset with coarse categories.
    pub fn into_coarse(self, taxonomy: &LabelTaxonomy) -> Result<Self> {
        let y = self.coarse_labels(taxonomy)?;
        Ok(Self {
            x: self.x,
            y,
            class_names: Category::names(),
            scaling: self.scaling,
        })
    }
}

/// Encodes `records`. Without `scaling`, min-max ranges are fitted on the
/// records themselves. Fine class names are the sorted distinct labels.
pub fn encode(
    records: &[RawRecord],
    schema: &FeatureSchema,
    taxonomy: &LabelTaxonomy,
    granularity: Granularity,
    scaling: Option<&Scaling>,
) -> Result<EncodedDataset> {
    let scaling = match scaling {
        Some(s) => s.clone(),
        None => Scaling::fit(records, schema)?,
    };
    let labels = match granularity {
        Granularity::Fine => LabelSpace::fine_from(records),
        Granularity::Coarse => LabelSpace::Coarse(taxonomy.clone()),
    };
    let encoder = Encoder::new(schema, labels, scaling)?;
    let mut x = Array2::<f32>::zeros((records.len(), encoder.width()));
    let mut y = Vec::with_capacity(records.len());
    for (r, mut row) in records.iter().zip(x.rows_mut()) {
        let slice = row.as_slice_mut().expect("standard layout");
        y.push(encoder.encode_into(r, slice)?);
    }
    Ok(EncodedDataset {
        x,
        y,
        class_names: encoder.class_names(),
        scaling: encoder.scaling.clone(),
    })
}

/// Per-class test allocation for a stratified split.
///
/// The test set holds `ceil(N * test_fraction)` rows. Each class first gets
/// `floor(n_c * test_fraction)`; the remaining rows go one each to the
/// classes with the largest fractional remainders (lower index wins ties).
/// Singleton classes stay in train, and every class keeps at least one
/// training row.
pub fn allocate_test_counts(class_counts: &[usize], test_fraction: f64) -> Result<Vec<usize>> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(PreprocessError::InvalidFraction(test_fraction));
    }
    let total: usize = class_counts.iter().sum();
    let target = ((total as f64 * test_fraction).ceil() as usize).min(total);
    let mut alloc: Vec<usize> = class_counts
        .iter()
        .map(|&n| (n as f64 * test_fraction).floor() as usize)
        .collect();
    let assigned: usize = alloc.iter().sum();
    let mut extras = target.saturating_sub(assigned);
    let mut candidates: Vec<(usize, f64)> = class_counts
        .iter()
        .enumerate()
        .filter(|&(c, &n)| n >= 2 && alloc[c] + 1 < n)
        .map(|(c, &n)| (c, n as f64 * test_fraction - alloc[c] as f64))
        .filter(|&(_, rem)| rem > 0.0)
        .collect();
    candidates.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for (c, _) in candidates {
        if extras == 0 {
            break;
        }
        alloc[c] += 1;
        extras -= 1;
    }
    Ok(alloc)
}

/// Row indices of a stratified partition, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified partition of row indices by label.
pub fn stratified_partition(
    labels: &[u16],
    num_classes: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<Partition> {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (i, &c) in labels.iter().enumerate() {
        let c = c as usize;
        if c >= num_classes {
            return Err(PreprocessError::LabelOutOfRange {
                label: c,
                classes: num_classes,
            });
        }
        by_class[c].push(i);
    }
    if let Some(class) = by_class.iter().position(Vec::is_empty) {
        return Err(PreprocessError::DegenerateClass { class });
    }
    let counts: Vec<usize> = by_class.iter().map(Vec::len).collect();
    let alloc = allocate_test_counts(&counts, test_fraction)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::with_capacity(labels.len());
    let mut test = Vec::with_capacity(alloc.iter().sum());
    for (mut rows, n_test) in by_class.into_iter().zip(alloc) {
        rows.shuffle(&mut rng);
        test.extend_from_slice(&rows[..n_test]);
        train.extend_from_slice(&rows[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Partition { train, test })
}

pub fn stratified_split(
    ds: &EncodedDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(EncodedDataset, EncodedDataset)> {
    let p = stratified_partition(&ds.y, ds.num_classes(), test_fraction, seed)?;
    Ok((ds.select(&p.train), ds.select(&p.test)))
}

/// Per-class loss weights with mean 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights(pub Vec<f64>);

impl ClassWeights {
    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0; k])
    }

    pub fn get(&self, class: usize) -> f64 {
        self.0[class]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Balanced inverse-frequency weights `N / (K * n_c)`, rescaled to mean 1.
pub fn class_weights(y: &[u16], k: usize) -> Result<ClassWeights> {
    let mut counts = vec![0usize; k];
    for &c in y {
        let c = c as usize;
        if c >= k {
            return Err(PreprocessError::LabelOutOfRange {
                label: c,
                classes: k,
            });
        }
        counts[c] += 1;
    }
    if let Some(class) = counts.iter().position(|&n| n == 0) {
        return Err(PreprocessError::MissingClass { class });
    }
    let n = y.len() as f64;
    let raw: Vec<f64> = counts.iter().map(|&c| n / (k as f64 * c as f64)).collect();
    let mean = raw.iter().sum::<f64>() / k as f64;
    Ok(ClassWeights(raw.into_iter().map(|w| w / mean).collect()))
}

/// `n` distinct row indices drawn uniformly without replacement.
pub fn sample_indices(len: usize, n: usize, seed: u64) -> Result<Vec<usize>> {
    if n == 0 || n > len {
        return Err(PreprocessError::OutOfRange {
            requested: n,
            available: len,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(rand::seq::index::sample(&mut rng, len, n).into_vec())
}

pub fn sample_rows(ds: &EncodedDataset, n: usize, seed: u64) -> Result<EncodedDataset> {
    let idx = sample_indices(ds.len(), n, seed)?;
    Ok(ds.select(&idx))
}

pub const CONTAINER_MAGIC: [u8; 4] = *b"ZIDS";
pub const CONTAINER_VERSION: u32 = 1;

// Layout (little-endian):
//   magic "ZIDS" | version u32 | N u64 | d u32 | K u32
//   K x (len u32, UTF-8 bytes)            class names
//   S u32, S x (min f64, max f64)          scaling table
//   N*d f32, row-major                      features
//   N u16                                   labels
pub fn write_container<W: Write>(ds: &EncodedDataset, w: W) -> Result<()> {
    let mut cw = ContainerWriter::new(w, ds.len(), ds.width(), &ds.class_names, &ds.scaling)?;
    for (row, &label) in ds.x.rows().into_iter().zip(&ds.y) {
        cw.push(row.as_slice().expect("standard layout"), label)?;
    }
    cw.finish()?;
    Ok(())
}

/// Row-at-a-time container writer for datasets too large to hold in memory.
/// Only the labels are buffered until [`ContainerWriter::finish`].
pub struct ContainerWriter<W: Write> {
    w: W,
    expected: usize,
    width: usize,
    classes: usize,
    labels: Vec<u16>,
}

impl<W: Write> ContainerWriter<W> {
    pub fn new(
        mut w: W,
        rows: usize,
        width: usize,
        class_names: &[String],
        scaling: &Scaling,
    ) -> Result<Self> {
        w.write_all(&CONTAINER_MAGIC)?;
        w.write_all(&CONTAINER_VERSION.to_le_bytes())?;
        w.write_all(&(rows as u64).to_le_bytes())?;
        w.write_all(&(width as u32).to_le_bytes())?;
        w.write_all(&(class_names.len() as u32).to_le_bytes())?;
        for name in class_names {
            w.write_all(&(name.len() as u32).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
        }
        w.write_all(&(scaling.ranges.len() as u32).to_le_bytes())?;
        for r in &scaling.ranges {
            w.write_all(&r.min.to_le_bytes())?;
            w.write_all(&r.max.to_le_bytes())?;
        }
        Ok(Self {
            w,
            expected: rows,
            width,
            classes: class_names.len(),
            labels: Vec::with_capacity(rows),
        })
    }

    pub fn push(&mut self, row: &[f32], label: u16) -> Result<()> {
        if row.len() != self.width {
            return Err(PreprocessError::Corrupt(format!(
                "row of width {} in a container of width {}",
                row.len(),
                self.width
            )));
        }
        if label as usize >= self.classes {
            return Err(PreprocessError::LabelOutOfRange {
                label: label as usize,
                classes: self.classes,
            });
        }
        if self.labels.len() == self.expected {
            return Err(PreprocessError::Corrupt(format!(
                "more than the declared {} rows",
                self.expected
            )));
        }
        for v in row {
            self.w.write_all(&v.to_le_bytes())?;
        }
        self.labels.push(label);
        Ok(())
    }

    /// Writes the label block and flushes. Fails unless exactly the declared
    /// number of rows was pushed.
    pub fn finish(mut self) -> Result<W> {
        if self.labels.len() != self.expected {
            return Err(PreprocessError::Corrupt(format!(
                "{} rows written, {} declared",
                self.labels.len(),
                self.expected
            )));
        }
        for &c in &self.labels {
            self.w.write_all(&c.to_le_bytes())?;
        }
        self.w.flush()?;
        Ok(self.w)
    }
}

fn read_array<const N: usize, R: Read>(r: &mut R, what: &str) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => PreprocessError::Corrupt(format!("truncated {what}")),
        _ => e.into(),
    })?;
    Ok(buf)
}

pub fn read_container<R: Read>(mut r: R) -> Result<EncodedDataset> {
    if read_array::<4, _>(&mut r, "magic")? != CONTAINER_MAGIC {
        return Err(PreprocessError::BadMagic);
    }
    let version = u32::from_le_bytes(read_array(&mut r, "header")?);
    if version != CONTAINER_VERSION {
        return Err(PreprocessError::UnsupportedVersion(version));
    }
    let n = u64::from_le_bytes(read_array(&mut r, "header")?) as usize;
    let d = u32::from_le_bytes(read_array(&mut r, "header")?) as usize;
    let k = u32::from_le_bytes(read_array(&mut r, "header")?) as usize;
    let mut class_names = Vec::with_capacity(k);
    for _ in 0..k {
        let len = u32::from_le_bytes(read_array(&mut r, "class name")?) as usize;
        let mut bytes = vec![0u8; len];
        r.read_exact(&mut bytes)
            .map_err(|_| PreprocessError::Corrupt("truncated class name".into()))?;
        class_names.push(
            String::from_utf8(bytes)
                .map_err(|_| PreprocessError::Corrupt("class name is not UTF-8".into()))?,
        );
    }
    let s = u32::from_le_bytes(read_array(&mut r, "scaling")?) as usize;
    let mut ranges = Vec::with_capacity(s);
    for _ in 0..s {
        let min = f64::from_le_bytes(read_array(&mut r, "scaling")?);
        let max = f64::from_le_bytes(read_array(&mut r, "scaling")?);
        ranges.push(ScalingRange { min, max });
    }
    let mut raw = vec![0u8; n * d * 4];
    r.read_exact(&mut raw)
        .map_err(|_| PreprocessError::Corrupt("truncated feature matrix".into()))?;
    let data: Vec<f32> = raw
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    drop(raw);
    let x = Array2::from_shape_vec((n, d), data)
        .map_err(|e| PreprocessError::Corrupt(e.to_string()))?;
    let mut raw = vec![0u8; n * 2];
    r.read_exact(&mut raw)
        .map_err(|_| PreprocessError::Corrupt("truncated labels".into()))?;
    let y: Vec<u16> = raw
        .chunks_exact(2)
        .map(|b| u16::from_le_bytes([b[0], b[1]]))
        .collect();
    if let Some(&bad) = y.iter().find(|&&c| c as usize >= k) {
        return Err(PreprocessError::LabelOutOfRange {
            label: bad as usize,
            classes: k,
        });
    }
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(PreprocessError::Corrupt("trailing bytes".into()));
    }
    Ok(EncodedDataset {
        x,
        y,
        class_names,
        scaling: Scaling { ranges },
    })
}

pub fn save_container(ds: &EncodedDataset, path: &Path) -> Result<()> {
    write_container(ds, BufWriter::new(File::create(path)?))
}

pub fn load_container(path: &Path) -> Result<EncodedDataset> {
    read_container(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{build_schema, default_taxonomy, parse_kdd};
    use ndarray::array;

    const LINES: &str = "\
0,tcp,http,SF,215,45076,0,0,0,0,0,1,0,0,0,0,0,0,0,0,0,0,1,1,0.00,0.00,0.00,0.00,1.00,0.00,0.00,0,0,0.00,0.00,0.00,0.00,0.00,0.00,0.00,0.00,normal.
0,icmp,ecr_i,SF,1032,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,511,511,0.00,0.00,0.00,0.00,1.00,0.00,0.00,255,255,1.00,0.00,1.00,0.00,0.00,0.00,0.00,0.00,smurf.
0,tcp,private,S0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,123,6,1.00,1.00,0.00,0.00,0.05,0.07,0.00,255,26,0.10,0.05,0.00,0.00,1.00,1.00,0.00,0.00,neptune.
2,tcp,ftp_data,SF,334,0,0,0,0,0,0,1,0,0,0,0,0,0,0,0,0,0,2,2,0.00,0.00,0.00,0.00,1.00,0.00,0.00,2,20,1.00,0.00,1.00,0.20,0.00,0.00,0.00,0.00,warezclient.
0,udp,private,SF,105,146,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,1,1,0.00,0.00,0.00,0.00,1.00,0.00,0.00,255,254,1.00,0.01,0.00,0.00,0.00,0.00,0.00,0.00,satan.
";

    fn records() -> Vec<RawRecord> {
        parse_kdd(LINES.as_bytes()).unwrap()
    }

    #[test]
    fn encoded_width_and_onehot_blocks() {
        let recs = records();
        let schema = build_schema(&recs).unwrap();
        let ds = encode(&recs, &schema, &default_taxonomy(), Granularity::Coarse, None).unwrap();
        // protocol {icmp,tcp,udp}, service {ecr_i,ftp_data,http,private}, flag {S0,SF}
        assert_eq!(ds.width(), 38 + 3 + 4 + 2);
        assert_eq!(ds.class_names, ["Normal", "DoS", "Probe", "UnauthorizedAccess"]);
        assert_eq!(ds.y, [0, 1, 1, 3, 2]);
        for row in ds.x.rows() {
            assert_eq!(row.slice(ndarray::s![38..41]).sum(), 1.0);
            assert_eq!(row.slice(ndarray::s![41..45]).sum(), 1.0);
            assert_eq!(row.slice(ndarray::s![45..47]).sum(), 1.0);
            assert!(row.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
        // first row: tcp, http, SF
        assert_eq!(ds.x[[0, 39]], 1.0);
        assert_eq!(ds.x[[0, 43]], 1.0);
        assert_eq!(ds.x[[0, 46]], 1.0);
    }

    #[test]
    fn constant_feature_scales_to_zero() {
        let recs = records();
        let schema = build_schema(&recs).unwrap();
        let ds = encode(&recs, &schema, &default_taxonomy(), Granularity::Coarse, None).unwrap();
        // land (position 6 -> continuous column 4) is 0 everywhere
        assert!(ds.x.column(4).iter().all(|&v| v == 0.0));
        assert_eq!(ds.scaling.ranges[4], ScalingRange { min: 0.0, max: 0.0 });
    }

    #[test]
    fn supplied_scaling_is_applied_unchanged() {
        let recs = records();
        let schema = build_schema(&recs).unwrap();
        let fitted = Scaling::fit(&recs[..2], &schema).unwrap();
        let ds = encode(&recs, &schema, &default_taxonomy(), Granularity::Fine, Some(&fitted)).unwrap();
        assert_eq!(ds.scaling, fitted);
        // src_bytes fitted on {215, 1032}; 105 falls below range.
        let v = ds.x[[4, 1]] as f64;
        assert!((v - (105.0 - 215.0) / (1032.0 - 215.0)).abs() < 1e-6);
        assert!(v < 0.0);
    }

    #[test]
    fn fine_granularity_uses_sorted_labels() {
        let recs = records();
        let schema = build_schema(&recs).unwrap();
        let ds = encode(&recs, &schema, &default_taxonomy(), Granularity::Fine, None).unwrap();
        assert_eq!(ds.class_names, ["neptune", "normal", "satan", "smurf", "warezclient"]);
        assert_eq!(ds.y, [1, 3, 0, 4, 2]);
        let coarse = ds.coarse_labels(&default_taxonomy()).unwrap();
        assert_eq!(coarse, [0, 1, 1, 3, 2]);
    }

    #[test]
    fn unknown_category_and_label() {
        let recs = records();
        let schema = build_schema(&recs[..1]).unwrap();
        let err = encode(&recs, &schema, &default_taxonomy(), Granularity::Coarse, None).unwrap_err();
        assert!(matches!(err, PreprocessError::UnknownCategory { ref feature, .. } if feature == "protocol_type"));

        let mut bad = records();
        bad[0].label = "zeroday".into();
        let schema = build_schema(&bad).unwrap();
        let err = encode(&bad, &schema, &default_taxonomy(), Granularity::Coarse, None).unwrap_err();
        assert!(matches!(err, PreprocessError::UnknownLabel { .. }));
    }

    #[test]
    fn allocation_examples() {
        assert_eq!(allocate_test_counts(&[2], 0.33).unwrap(), [1]);
        assert_eq!(allocate_test_counts(&[1], 0.33).unwrap(), [0]);
        // 100 * 0.33 is exactly 33: no remainder left to round up.
        assert_eq!(allocate_test_counts(&[1, 100], 0.33).unwrap(), [0, 33]);
        assert_eq!(allocate_test_counts(&[2, 100], 0.33).unwrap(), [1, 33]);
        assert_eq!(allocate_test_counts(&[100], 0.33).unwrap(), [33]);
        assert!(allocate_test_counts(&[5], 0.0).is_err());
        assert!(allocate_test_counts(&[5], 1.0).is_err());
    }

    #[test]
    fn allocation_ties_go_to_lower_index() {
        // 3 * 0.5 = 1.5 each; target ceil(3.0) = 3; one extra unit.
        assert_eq!(allocate_test_counts(&[3, 3], 0.5).unwrap(), [2, 1]);
    }

    fn toy(n_per_class: &[usize]) -> EncodedDataset {
        let n: usize = n_per_class.iter().sum();
        let mut y = Vec::new();
        for (c, &k) in n_per_class.iter().enumerate() {
            y.extend(std::iter::repeat_n(c as u16, k));
        }
        EncodedDataset {
            x: Array2::from_shape_fn((n, 2), |(i, j)| (i * 2 + j) as f32),
            y,
            class_names: (0..n_per_class.len()).map(|c| c.to_string()).collect(),
            scaling: Scaling::default(),
        }
    }

    #[test]
    fn split_is_deterministic_partition() {
        let ds = toy(&[50, 20, 2, 1]);
        let (a, b) = stratified_split(&ds, 0.33, 7).unwrap();
        let (a2, b2) = stratified_split(&ds, 0.33, 7).unwrap();
        assert_eq!(a, a2);
        assert_eq!(b, b2);
        assert_eq!(a.len() + b.len(), ds.len());
        assert_eq!(b.class_counts(), [17, 7, 1, 0]);
        let (_, b3) = stratified_split(&ds, 0.33, 8).unwrap();
        assert_ne!(b.x, b3.x);
    }

    #[test]
    fn split_rejects_empty_class() {
        let mut ds = toy(&[3, 3]);
        ds.class_names.push("ghost".into());
        assert!(matches!(
            stratified_split(&ds, 0.33, 0),
            Err(PreprocessError::DegenerateClass { class: 2 })
        ));
    }

    #[test]
    fn weights_examples() {
        assert_eq!(class_weights(&[0, 1, 2, 0, 1, 2], 3).unwrap().0, [1.0, 1.0, 1.0]);
        let mut y = vec![0u16; 90];
        y.extend([1u16; 10]);
        let w = class_weights(&y, 2).unwrap();
        // independent: raw = 100/(2*90), 100/(2*10); mean-normalized
        let raw = [100.0 / 180.0, 5.0];
        let mean = (raw[0] + raw[1]) / 2.0;
        assert!((w.0[0] - raw[0] / mean).abs() < 1e-12);
        assert!((w.0[0] - 0.2).abs() < 1e-12 && (w.0[1] - 1.8).abs() < 1e-12);
        assert!(matches!(
            class_weights(&[0, 0], 2),
            Err(PreprocessError::MissingClass { class: 1 })
        ));
    }

    #[test]
    fn sample_rows_contract() {
        let ds = toy(&[10]);
        let all = sample_rows(&ds, 10, 3).unwrap();
        let mut firsts: Vec<f32> = all.x.column(0).to_vec();
        firsts.sort_by(f32::total_cmp);
        assert_eq!(firsts, ds.x.column(0).to_vec());
        assert_eq!(sample_rows(&ds, 4, 9).unwrap(), sample_rows(&ds, 4, 9).unwrap());
        assert!(matches!(sample_rows(&ds, 11, 0), Err(PreprocessError::OutOfRange { .. })));
        assert!(sample_rows(&ds, 0, 0).is_err());
    }

    #[test]
    fn container_layout_is_little_endian() {
        let ds = EncodedDataset {
            x: array![[1.0f32, 0.5]],
            y: vec![1],
            class_names: vec!["a".into(), "bc".into()],
            scaling: Scaling {
                ranges: vec![ScalingRange { min: 0.0, max: 2.0 }],
            },
        };
        let mut buf = Vec::new();
        write_container(&ds, &mut buf).unwrap();
        let expected: Vec<u8> = [
            &b"ZIDS"[..],
            &[1, 0, 0, 0],
            &[1, 0, 0, 0, 0, 0, 0, 0],
            &[2, 0, 0, 0],
            &[2, 0, 0, 0],
            &[1, 0, 0, 0, b'a'],
            &[2, 0, 0, 0, b'b', b'c'],
            &[1, 0, 0, 0],
            &[0, 0, 0, 0, 0, 0, 0, 0],
            &[0, 0, 0, 0, 0, 0, 0, 0x40],
            &[0, 0, 0x80, 0x3f],
            &[0, 0, 0, 0x3f],
            &[1, 0],
        ]
        .concat();
        assert_eq!(buf, expected);
        assert_eq!(read_container(&buf[..]).unwrap(), ds);
    }

    #[test]
    fn container_errors() {
        let ds = toy(&[3, 2]);
        let mut buf = Vec::new();
        write_container(&ds, &mut buf).unwrap();
        assert!(matches!(
            read_container(&buf[..buf.len() - 1]),
            Err(PreprocessError::Corrupt(_))
        ));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_container(&bad[..]), Err(PreprocessError::BadMagic)));
        let mut bad = buf.clone();
        bad[4] = 9;
        assert!(matches!(
            read_container(&bad[..]),
            Err(PreprocessError::UnsupportedVersion(9))
        ));
        let mut bad = buf.clone();
        bad.push(0);
        assert!(read_container(&bad[..]).is_err());
    }

    #[test]
    fn streaming_writer_checks_row_count() {
        let names = vec!["a".to_string()];
        let scaling = Scaling::default();
        let mut w = ContainerWriter::new(Vec::new(), 2, 1, &names, &scaling).unwrap();
        w.push(&[0.5], 0).unwrap();
        assert!(w.push(&[0.5, 0.1], 0).is_err());
        assert!(w.push(&[0.5], 1).is_err());
        assert!(matches!(w.finish(), Err(PreprocessError::Corrupt(_))));
        let mut w = ContainerWriter::new(Vec::new(), 1, 1, &names, &scaling).unwrap();
        w.push(&[0.25], 0).unwrap();
        assert!(w.push(&[0.25], 0).is_err());
        let bytes = w.finish().unwrap();
        assert_eq!(read_container(&bytes[..]).unwrap().x[[0, 0]], 0.25);
    }
}
