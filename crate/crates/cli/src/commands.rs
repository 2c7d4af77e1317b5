use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use ids_core::dataset::{default_taxonomy, CategoryCounts, KddReader, RawRecord, SchemaBuilder};
use ids_core::metrics::{self, render_report, ReportFormat, ZeroDivision};
use ids_core::mlp::{self, MlpModel};
use ids_core::preprocess::{
    class_weights, load_container, sample_indices, stratified_partition, ContainerWriter,
    EncodedDataset, Encoder, Granularity, LabelSpace, ScalingFitter,
};
use ids_core::shap::{self, Background};
use log::{info, warn};
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, DEFAULT_SEED};
use crate::error::{CliError, Result};
use crate::run::{write_file, DirLock, RunManifest};

/// Tolerance on `|sum(phi) + base - f(x)|` before an explanation is rejected.
pub const EFFICIENCY_TOLERANCE: f64 = 1e-6;

fn open_records(path: &Path) -> Result<KddReader<Box<dyn BufRead>>> {
    let file = File::open(path).map_err(CliError::io(path))?;
    let inner: Box<dyn BufRead> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(BufReader::with_capacity(1 << 16, MultiGzDecoder::new(file)))
    } else {
        Box::new(BufReader::with_capacity(1 << 16, file))
    };
    Ok(KddReader::new(inner))
}

/// Streams every record of `path` into `f`; fails if the count drifts
/// from `expected` (the file changed between passes).
fn each_record(
    path: &Path,
    expected: Option<usize>,
    mut f: impl FnMut(usize, RawRecord) -> Result<()>,
) -> Result<usize> {
    let mut n = 0;
    for rec in open_records(path)? {
        f(n, rec?)?;
        n += 1;
    }
    if let Some(e) = expected.filter(|&e| e != n) {
        return Err(CliError::Data(format!(
            "{} changed while reading: {n} records, previously {e}",
            path.display()
        )));
    }
    Ok(n)
}

pub fn prepare(data: &Path, out: &Path, cfg: &ExperimentConfig) -> Result<()> {
    let _lock = DirLock::acquire(out)?;
    let mut manifest = RunManifest::start("prepare", cfg);
    let split_seed = manifest.seed("split", cfg.split_seed.unwrap_or(DEFAULT_SEED));
    let taxonomy = default_taxonomy();

    // pass 1: vocabularies, label counts, per-row label
    let mut schema = SchemaBuilder::new();
    let mut counts = CategoryCounts::default();
    let mut interned: HashMap<String, u16> = HashMap::new();
    let mut first_seen: Vec<String> = Vec::new();
    let mut raw_labels: Vec<u16> = Vec::new();
    let rows = each_record(data, None, |_, rec| {
        schema.observe(&rec);
        counts.add(&rec.label, &taxonomy)?;
        let id = *interned.entry(rec.label.clone()).or_insert_with(|| {
            first_seen.push(rec.label.clone());
            (first_seen.len() - 1) as u16
        });
        raw_labels.push(id);
        Ok(())
    })?;
    let schema = schema.finish()?;
    info!("read {rows} records, {} distinct labels", first_seen.len());

    let mut fine_names = first_seen.clone();
    fine_names.sort();
    let remap: Vec<u16> = first_seen
        .iter()
        .map(|l| fine_names.binary_search(l).expect("interned label") as u16)
        .collect();
    let labels: Vec<u16> = raw_labels.iter().map(|&l| remap[l as usize]).collect();
    drop(raw_labels);
    let part = stratified_partition(&labels, fine_names.len(), cfg.test_fraction, split_seed)?;
    let mut in_test = vec![false; rows];
    for &i in &part.test {
        in_test[i] = true;
    }
    info!("split: {} train / {} test rows", part.train.len(), part.test.len());

    // pass 2: min-max ranges from training rows only
    let mut fitter = ScalingFitter::new(&schema);
    each_record(data, Some(rows), |i, rec| {
        if !in_test[i] {
            fitter.observe(&rec);
        }
        Ok(())
    })?;
    let scaling = fitter.finish()?;

    // pass 3: encode into the two containers
    let encoder = Encoder::new(&schema, LabelSpace::Fine(fine_names.clone()), scaling.clone())?;
    let width = encoder.width();
    let open = |name: &str, n: usize| -> Result<ContainerWriter<BufWriter<File>>> {
        let path = out.join(name);
        let file = File::create(&path).map_err(CliError::io(&path))?;
        Ok(ContainerWriter::new(BufWriter::new(file), n, width, &fine_names, &scaling)?)
    };
    let mut train_w = open("train.zids", part.train.len())?;
    let mut test_w = open("test.zids", part.test.len())?;
    let mut row = vec![0f32; width];
    each_record(data, Some(rows), |i, rec| {
        let label = encoder.encode_into(&rec, &mut row)?;
        if in_test[i] {
            test_w.push(&row, label)?;
        } else {
            train_w.push(&row, label)?;
        }
        Ok(())
    })?;
    train_w.finish()?;
    test_w.finish()?;

    let mut label_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for &l in &labels {
        *label_counts.entry(fine_names[l as usize].as_str()).or_default() += 1;
    }
    let vocab_sizes: BTreeMap<&str, usize> = schema
        .categorical_positions()
        .into_iter()
        .zip(&schema.vocabularies)
        .map(|(p, v)| (schema.features[p].name.as_str(), v.len()))
        .collect();
    let summary = json!({
        "rows": rows,
        "train_rows": part.train.len(),
        "test_rows": part.test.len(),
        "test_fraction": cfg.test_fraction,
        "split_seed": split_seed,
        "encoded_width": width,
        "vocab_sizes": vocab_sizes,
        "fine_classes": fine_names,
        "coarse_classes": ids_core::dataset::Category::names(),
        "label_counts": label_counts,
        "encoded_feature_names": schema.encoded_feature_names(),
        "schema": schema,
    });
    let mut text = serde_json::to_string_pretty(&summary).expect("serializable schema");
    text.push('\n');
    write_file(&out.join("schema.json"), text.as_bytes())?;
    write_file(&out.join("counts.csv"), counts.to_csv().as_bytes())?;

    manifest.set("data_path", data);
    manifest.set("rows", rows);
    manifest.set("encoded_width", width);
    manifest.set("vocab_sizes", &summary["vocab_sizes"]);
    manifest.set("num_fine_classes", fine_names.len());
    manifest.write(out)
}

/// Loads a container, relabelled onto the model's class list if needed.
fn load_for(path: &Path, class_names: &[String]) -> Result<EncodedDataset> {
    let ds = load_container(path)?;
    if ds.class_names == class_names {
        return Ok(ds);
    }
    let coarse = ds.into_coarse(&default_taxonomy())?;
    if coarse.class_names != class_names {
        return Err(CliError::Data(format!(
            "{} labels {:?} do not match model classes {:?}",
            path.display(),
            coarse.class_names,
            class_names
        )));
    }
    Ok(coarse)
}

fn for_granularity(ds: EncodedDataset, g: Granularity) -> Result<EncodedDataset> {
    Ok(match g {
        Granularity::Fine => ds,
        Granularity::Coarse => ds.into_coarse(&default_taxonomy())?,
    })
}

pub fn train(data_dir: &Path, out: &Path, cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate()?;
    let _lock = DirLock::acquire(out)?;
    let mut manifest = RunManifest::start("train", cfg);
    let seed = manifest.seed("train", cfg.train_seed.unwrap_or(DEFAULT_SEED));
    let g = cfg.variant.granularity();
    let train_ds = for_granularity(load_container(&data_dir.join("train.zids"))?, g)?;
    let val_ds = for_granularity(load_container(&data_dir.join("test.zids"))?, g)?;

    let mut dims = vec![train_ds.width()];
    dims.extend(cfg.hidden_widths());
    dims.push(train_ds.num_classes());
    let weights = if cfg.variant.weighted() {
        Some(class_weights(&train_ds.y, train_ds.num_classes())?)
    } else {
        None
    };
    let model = mlp::init(&dims, seed)?.with_class_names(train_ds.class_names.clone())?;
    info!(
        "variant {}: dims {dims:?}, {} parameters, {} train rows",
        cfg.variant.name(),
        model.parameter_count(),
        train_ds.len()
    );
    if let Some(w) = &weights {
        for (name, v) in train_ds.class_names.iter().zip(w.as_slice()) {
            info!("class weight {name}: {v:.6}");
        }
    }
    let (model, history) = mlp::train(model, &train_ds, &val_ds, &cfg.train_config(weights.clone()))?;
    mlp::save(&model, &out.join("model.zmlp"))?;
    write_file(&out.join("history.csv"), history.to_csv().as_bytes())?;

    manifest.set("variant", cfg.variant.name());
    manifest.set("dims", &dims);
    manifest.set("parameter_count", model.parameter_count());
    manifest.set("class_names", &model.class_names);
    manifest.set(
        "class_weights",
        weights.map(|w| {
            train_ds
                .class_names
                .iter()
                .cloned()
                .zip(w.0)
                .collect::<BTreeMap<String, f64>>()
        }),
    );
    manifest.set("train_rows", train_ds.len());
    manifest.set("validation_rows", val_ds.len());
    manifest.set("final_epoch", history.last());
    manifest.write(out)
}

pub fn evaluate(model_path: &Path, data: &Path, out: &Path, cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate()?;
    let _lock = DirLock::acquire(out)?;
    let mut manifest = RunManifest::start("evaluate", cfg);
    let model = mlp::load(model_path)?;
    let ds = load_for(data, &model.class_names)?;
    if ds.width() != model.input_width() {
        return Err(CliError::Data(format!(
            "model expects {} input columns, {} has {}",
            model.input_width(),
            data.display(),
            ds.width()
        )));
    }
    let pred = mlp::predict_dataset(&model, &ds)?;
    let truth: Vec<usize> = ds.y.iter().map(|&c| c as usize).collect();
    let cm = metrics::confusion(&truth, &pred, &model.class_names)?;
    let zero = ZeroDivision {
        precision: cfg.zero_division,
        recall: cfg.zero_division,
    };
    let report = metrics::report_with(&cm, zero)?;
    for (name, fmt) in [
        ("report.txt", ReportFormat::Text),
        ("report.csv", ReportFormat::Csv),
        ("report.json", ReportFormat::Json),
    ] {
        write_file(&out.join(name), render_report(&report, fmt)?.as_bytes())?;
    }
    write_file(&out.join("confusion.csv"), cm.to_csv().as_bytes())?;
    info!("accuracy {:.4} over {} rows", report.accuracy, ds.len());

    manifest.set("model", model_path);
    manifest.set("data", data);
    manifest.set("rows", ds.len());
    manifest.set("accuracy", report.accuracy);
    manifest.write(out)
}

/// Encoded column names from the `schema.json` written by `prepare`.
fn feature_names(schema: Option<&Path>, width: usize) -> Result<Vec<String>> {
    let generic = || (0..width).map(|j| format!("x{j}")).collect();
    let Some(path) = schema else {
        return Ok(generic());
    };
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    let v: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let names: Vec<String> = v["encoded_feature_names"]
        .as_array()
        .map(|a| a.iter().filter_map(|s| s.as_str().map(str::to_string)).collect())
        .unwrap_or_default();
    if names.len() != width {
        warn!(
            "{} lists {} feature names for a model of width {width}; using generic names",
            path.display(),
            names.len()
        );
        return Ok(generic());
    }
    Ok(names)
}

fn file_stem(class: &str) -> String {
    class
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub fn explain(
    model_path: &Path,
    data: &Path,
    schema: Option<&Path>,
    out: &Path,
    cfg: &ExperimentConfig,
) -> Result<()> {
    cfg.validate()?;
    let _lock = DirLock::acquire(out)?;
    let mut manifest = RunManifest::start("explain", cfg);
    let seed = cfg.shap_seed.unwrap_or(DEFAULT_SEED);
    let bg_seed = manifest.seed("shap_background", seed);
    let ex_seed = manifest.seed("shap_explain", seed);
    let coalition_seed = manifest.seed("shap_coalitions", seed);
    let model: MlpModel = mlp::load(model_path)?;
    let ds = load_for(data, &model.class_names)?;
    let d = model.input_width();
    if ds.width() != d {
        return Err(CliError::Data(format!(
            "model expects {d} input columns, {} has {}",
            data.display(),
            ds.width()
        )));
    }
    let default_schema = data.with_file_name("schema.json");
    let schema = schema.map(Path::to_path_buf).or_else(|| default_schema.exists().then_some(default_schema));
    let names = feature_names(schema.as_deref(), d)?;

    let bg_idx = sample_indices(ds.len(), cfg.background_n, bg_seed)?;
    let ex_idx = sample_indices(ds.len(), cfg.explain_n, ex_seed)?;
    info!("background rows {bg_idx:?}");
    info!("explained rows {ex_idx:?}");
    let (bg, _) = mlp::gather_rows(&ds, &bg_idx);
    let (x, _) = mlp::gather_rows(&ds, &ex_idx);
    let budget = cfg.shap_budget.unwrap_or_else(|| shap::default_budget(d));
    let expl = shap::kernel_shap(&model, x.view(), &Background::new(bg)?, budget, coalition_seed)?
        .with_names(names, model.class_names.clone())?;

    let residuals = expl.efficiency_residuals();
    for (class, r) in model.class_names.iter().zip(&residuals) {
        info!("efficiency residual {class}: {r:.3e}");
    }
    let mut files = Vec::new();
    for (k, class) in model.class_names.iter().enumerate() {
        let name = format!("shap_{}.csv", file_stem(class));
        write_file(&out.join(&name), expl.class_csv(k).as_bytes())?;
        files.push(name);
    }
    let ranking = shap::top_features(&expl, cfg.top_k);
    let top_name = format!("top{}.csv", cfg.top_k);
    write_file(
        &out.join(&top_name),
        shap::top_features_csv(&ranking, &model.class_names).as_bytes(),
    )?;

    manifest.set("model", model_path);
    manifest.set("data", data);
    manifest.set("budget", budget);
    manifest.set("background_rows", &bg_idx);
    manifest.set("explained_rows", &ex_idx);
    manifest.set(
        "efficiency_residuals",
        model
            .class_names
            .iter()
            .cloned()
            .zip(residuals.iter().copied())
            .collect::<BTreeMap<String, f64>>(),
    );
    manifest.set("outputs", files);
    manifest.write(out)?;

    let worst = residuals.iter().copied().fold(0.0, f64::max);
    if !(worst <= EFFICIENCY_TOLERANCE) {
        return Err(CliError::Numeric(format!(
            "efficiency residual {worst:e} exceeds {EFFICIENCY_TOLERANCE:e}"
        )));
    }
    Ok(())
}

pub fn report(path: &Path, format: ReportFormat) -> Result<String> {
    let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
    Ok(render_report(&metrics::parse_json_report(&text)?, format)?)
}
