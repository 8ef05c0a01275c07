//! File formats: datasets, model checkpoints, results CSV, run configs,
//! and the Cora citation-network loader.
//!
//! All formats are versioned and round-trip exactly. Floats are written
//! with Rust's shortest round-trip representation, so a save/load cycle is
//! the identity on every `f64`. No format reads environment variables;
//! behavior is a pure function of file contents.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write as IoWrite};
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;

use crate::gnn::{Activation, GnnConfig, GnnModel, LossKind, PlantedTarget};
use crate::graph_ops::DiffusionOperator;
use crate::planted::{Dataset, Labels, LatentLabels};
use crate::rng::{stream, stream_rng};
use crate::{Error, Result};

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::io(path.display().to_string(), source)
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

// ---------------------------------------------------------------------------
// Dataset text format
// ---------------------------------------------------------------------------

const DATASET_MAGIC: &str = "gnnlab dataset v1";

/// Write a dataset as versioned text: header (n, d, m, classes), edge list
/// with i < j, comma-separated feature rows, label lines, train indices.
pub fn save_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let n = dataset.n();
    let mut res = (|| -> std::io::Result<()> {
        writeln!(w, "{DATASET_MAGIC}")?;
        writeln!(w, "n {n}")?;
        writeln!(w, "d {}", dataset.d())?;
        writeln!(w, "m {}", dataset.train_idx.len())?;
        writeln!(w, "classes {}", dataset.num_classes)?;
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if dataset.adjacency[[i, j]] != 0.0 {
                    edges.push((i, j));
                }
            }
        }
        writeln!(w, "edges {}", edges.len())?;
        for (i, j) in edges {
            writeln!(w, "{i} {j}")?;
        }
        writeln!(w, "features")?;
        for row in dataset.features.rows() {
            let mut line = String::new();
            for (idx, v) in row.iter().enumerate() {
                if idx > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{v}"));
            }
            writeln!(w, "{line}")?;
        }
        match &dataset.labels {
            Labels::Planted(lab) => {
                writeln!(w, "labels planted gamma {}", lab.gamma_actual)?;
                let ints = |v: &[i8]| {
                    v.iter()
                        .map(|x| x.to_string())
                        .collect::<Vec<_>>()
                        .join(" ")
                };
                writeln!(w, "z {}", ints(&lab.z))?;
                writeln!(w, "y {}", ints(&lab.y))?;
            }
            Labels::Classes(c) => {
                writeln!(w, "labels classes")?;
                let line = c
                    .iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(" ");
                writeln!(w, "c {line}")?;
            }
        }
        let train = dataset
            .train_idx
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        writeln!(w, "train {train}")?;
        writeln!(w, "end")?;
        Ok(())
    })();
    if res.is_ok() {
        res = w.flush();
    }
    res.map_err(|e| io_err(path, e))
}

/// Line-oriented reader that tracks the current line number for errors.
struct Lines<'a> {
    path: &'a Path,
    lines: std::str::Lines<'a>,
    current: usize,
}

impl<'a> Lines<'a> {
    fn new(path: &'a Path, text: &'a str) -> Self {
        Lines {
            path,
            lines: text.lines(),
            current: 0,
        }
    }

    fn next(&mut self, what: &str) -> Result<&'a str> {
        self.current += 1;
        self.lines
            .next()
            .ok_or_else(|| parse_err(self.path, self.current, format!("file ends before {what}")))
    }

    fn err(&self, message: impl Into<String>) -> Error {
        parse_err(self.path, self.current, message)
    }

    /// Line of the form "<key> <value>"; returns the value part.
    fn keyed(&mut self, key: &str) -> Result<&'a str> {
        let line = self.next(key)?;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| self.err(format!("expected \"{key} <value>\", got \"{line}\"")))
    }
}

fn parse_num<T: std::str::FromStr>(lines: &Lines, token: &str, what: &str) -> Result<T> {
    token
        .parse::<T>()
        .map_err(|_| lines.err(format!("cannot parse {what} from \"{token}\"")))
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = Lines::new(path, &text);
    let header = lines.next("header")?;
    if header != DATASET_MAGIC {
        return Err(Error::VersionMismatch {
            path: path.display().to_string(),
            found: header.to_string(),
        });
    }
    let mut keyed_num = |key: &str, what: &str| -> Result<usize> {
        let tok = lines.keyed(key)?;
        parse_num(&lines, tok, what)
    };
    let n = keyed_num("n", "node count")?;
    let d = keyed_num("d", "feature dim")?;
    let m = keyed_num("m", "labeled count")?;
    let num_classes = keyed_num("classes", "class count")?;
    let num_edges = keyed_num("edges", "edge count")?;

    let mut adjacency = Array2::zeros((n, n));
    for _ in 0..num_edges {
        let line = lines.next("edge line")?;
        let mut it = line.split_whitespace();
        let i: usize = parse_num(&lines, it.next().unwrap_or(""), "edge endpoint")?;
        let j: usize = parse_num(&lines, it.next().unwrap_or(""), "edge endpoint")?;
        if it.next().is_some() {
            return Err(lines.err("edge line has extra fields"));
        }
        if i >= j || j >= n {
            return Err(lines.err(format!("edge ({i}, {j}) violates i < j < n")));
        }
        adjacency[[i, j]] = 1.0;
        adjacency[[j, i]] = 1.0;
    }

    let marker = lines.next("features marker")?;
    if marker != "features" {
        return Err(lines.err(format!("expected \"features\", got \"{marker}\"")));
    }
    let mut features = Array2::zeros((n, d));
    for i in 0..n {
        let line = lines.next("feature row")?;
        let mut count = 0;
        for (j, tok) in line.split(',').enumerate() {
            if j >= d {
                return Err(lines.err(format!("feature row has more than {d} entries")));
            }
            features[[i, j]] = parse_num(&lines, tok, "feature value")?;
            count += 1;
        }
        if count != d {
            return Err(lines.err(format!("feature row has {count} entries, expected {d}")));
        }
    }

    let label_line = lines.next("label header")?;
    let labels = if let Some(rest) = label_line.strip_prefix("labels planted gamma ") {
        let gamma_actual: f64 = parse_num(&lines, rest, "gamma")?;
        let sign_vec = |lines: &mut Lines, key: &str| -> Result<Vec<i8>> {
            let v: Vec<i8> = lines
                .keyed(key)?
                .split_whitespace()
                .map(|t| parse_num::<i8>(lines, t, "sign label"))
                .collect::<Result<_>>()?;
            if v.len() != n || v.iter().any(|&s| s != 1 && s != -1) {
                return Err(lines.err(format!("{key} needs {n} entries of +/-1")));
            }
            Ok(v)
        };
        let z = sign_vec(&mut lines, "z")?;
        let y = sign_vec(&mut lines, "y")?;
        Labels::Planted(LatentLabels { z, y, gamma_actual })
    } else if label_line == "labels classes" {
        let c: Vec<usize> = lines
            .keyed("c")?
            .split_whitespace()
            .map(|t| parse_num::<usize>(&lines, t, "class label"))
            .collect::<Result<_>>()?;
        if c.len() != n || c.iter().any(|&cls| cls >= num_classes) {
            return Err(lines.err(format!(
                "class labels need {n} entries below {num_classes}"
            )));
        }
        Labels::Classes(c)
    } else {
        return Err(lines.err(format!("unrecognized label header \"{label_line}\"")));
    };

    let train_idx: Vec<usize> = lines
        .keyed("train")?
        .split_whitespace()
        .map(|t| parse_num::<usize>(&lines, t, "train index"))
        .collect::<Result<_>>()?;
    if train_idx.len() != m || train_idx.iter().any(|&i| i >= n) {
        return Err(lines.err(format!("train needs {m} in-range indices")));
    }
    let fin = lines.next("end marker")?;
    if fin != "end" {
        return Err(lines.err(format!("expected \"end\", got \"{fin}\"")));
    }
    Ok(Dataset {
        adjacency,
        features,
        labels,
        train_idx,
        num_classes,
    })
}

// ---------------------------------------------------------------------------
// Model checkpoint (binary)
// ---------------------------------------------------------------------------

const MODEL_MAGIC: &[u8; 8] = b"GNNLABM1";

/// Binary checkpoint: magic, layer dims, config tags, then row-major
/// little-endian f64 weight/bias blocks per layer.
pub fn save_model(model: &GnnModel, path: &Path) -> Result<()> {
    let cfg = &model.config;
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MODEL_MAGIC);
    buf.extend_from_slice(&(cfg.layer_dims.len() as u32).to_le_bytes());
    for &dim in &cfg.layer_dims {
        buf.extend_from_slice(&(dim as u64).to_le_bytes());
    }
    buf.push(match cfg.activation {
        Activation::Identity => 0,
        Activation::Relu => 1,
    });
    buf.push(match cfg.loss {
        LossKind::SquaredBinary => 0,
        LossKind::MulticlassNll => 1,
    });
    buf.push(match cfg.linear_last_layer {
        None => 0,
        Some(false) => 1,
        Some(true) => 2,
    });
    match cfg.residual_alpha {
        None => buf.push(0),
        Some(alpha) => {
            buf.push(1);
            buf.extend_from_slice(&alpha.to_le_bytes());
        }
    }
    buf.extend_from_slice(&cfg.init_scale.to_le_bytes());
    buf.extend_from_slice(&cfg.seed.to_le_bytes());
    for (w, b) in model.weights.iter().zip(&model.biases) {
        for v in w.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for v in b.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, buf).map_err(|e| io_err(path, e))
}

/// Byte cursor with truncation-aware reads.
struct Cursor<'a> {
    path: &'a Path,
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + len > self.data.len() {
            return Err(parse_err(
                self.path,
                0,
                format!("checkpoint truncated while reading {what}"),
            ));
        }
        let s = &self.data[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn load_model(path: &Path) -> Result<GnnModel> {
    let data = fs::read(path).map_err(|e| io_err(path, e))?;
    let mut c = Cursor {
        path,
        data: &data,
        pos: 0,
    };
    let magic = c.take(8, "magic")?;
    if magic != MODEL_MAGIC {
        return Err(Error::VersionMismatch {
            path: path.display().to_string(),
            found: String::from_utf8_lossy(magic).into_owned(),
        });
    }
    let dims_len = c.u32("dim count")? as usize;
    if !(2..=64).contains(&dims_len) {
        return Err(parse_err(path, 0, format!("implausible dim count {dims_len}")));
    }
    let mut layer_dims = Vec::with_capacity(dims_len);
    for _ in 0..dims_len {
        layer_dims.push(c.u64("layer dim")? as usize);
    }
    let activation = match c.u8("activation tag")? {
        0 => Activation::Identity,
        1 => Activation::Relu,
        t => return Err(parse_err(path, 0, format!("unknown activation tag {t}"))),
    };
    let loss = match c.u8("loss tag")? {
        0 => LossKind::SquaredBinary,
        1 => LossKind::MulticlassNll,
        t => return Err(parse_err(path, 0, format!("unknown loss tag {t}"))),
    };
    let linear_last_layer = match c.u8("readout tag")? {
        0 => None,
        1 => Some(false),
        2 => Some(true),
        t => return Err(parse_err(path, 0, format!("unknown readout tag {t}"))),
    };
    let residual_alpha = match c.u8("residual tag")? {
        0 => None,
        1 => Some(c.f64("alpha")?),
        t => return Err(parse_err(path, 0, format!("unknown residual tag {t}"))),
    };
    let init_scale = c.f64("init scale")?;
    let seed = c.u64("seed")?;
    let config = GnnConfig {
        layer_dims: layer_dims.clone(),
        activation,
        residual_alpha,
        loss,
        init_scale,
        seed,
        linear_last_layer,
    };
    config.validate()?;
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for k in 1..layer_dims.len() {
        let (din, dout) = (layer_dims[k - 1], layer_dims[k]);
        let mut w = Array2::zeros((din, dout));
        for v in w.iter_mut() {
            *v = c.f64("weight")?;
        }
        let mut b = Array1::zeros(dout);
        for v in b.iter_mut() {
            *v = c.f64("bias")?;
        }
        weights.push(w);
        biases.push(b);
    }
    if c.pos != data.len() {
        return Err(parse_err(
            path,
            0,
            format!("{} trailing bytes after checkpoint", data.len() - c.pos),
        ));
    }
    Ok(GnnModel {
        config,
        weights,
        biases,
    })
}

// ---------------------------------------------------------------------------
// Results CSV
// ---------------------------------------------------------------------------

/// One (experiment, grid point, seed, epoch) observation plus the bound
/// columns evaluated for that cell. Optional bounds serialize as empty
/// fields.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultsRow {
    pub experiment: String,
    pub param_name: String,
    pub param_value: f64,
    pub seed: u64,
    pub epoch: usize,
    pub train_loss: f64,
    pub unlabeled_loss: f64,
    pub gap_loss: f64,
    pub train_err01: f64,
    pub unlabeled_err01: f64,
    pub gap_err01: f64,
    pub bound_trc: Option<f64>,
    pub bound_vc: Option<f64>,
    pub bound_expected_sbm: Option<f64>,
    pub omega_used: f64,
    pub beta_used: f64,
    pub scale_factor: f64,
}

pub const RESULTS_HEADER: &str = "experiment,param_name,param_value,seed,epoch,train_loss,unlabeled_loss,gap_loss,train_err01,unlabeled_err01,gap_err01,bound_trc,bound_vc,bound_expected_sbm,omega_used,beta_used,scale_factor";

fn check_csv_text(field: &str, what: &str) -> Result<()> {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        return Err(Error::InvalidInput(format!(
            "{what} \"{field}\" may not contain commas, quotes, or newlines"
        )));
    }
    Ok(())
}

fn check_finite(v: f64, what: &str) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::InvalidInput(format!("{what} is not finite ({v})")));
    }
    Ok(v)
}

fn fmt_opt(v: Option<f64>, what: &str) -> Result<String> {
    match v {
        None => Ok(String::new()),
        Some(x) => Ok(format!("{}", check_finite(x, what)?)),
    }
}

impl ResultsRow {
    fn to_csv(&self) -> Result<String> {
        check_csv_text(&self.experiment, "experiment name")?;
        check_csv_text(&self.param_name, "parameter name")?;
        Ok(format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.experiment,
            self.param_name,
            check_finite(self.param_value, "param_value")?,
            self.seed,
            self.epoch,
            check_finite(self.train_loss, "train_loss")?,
            check_finite(self.unlabeled_loss, "unlabeled_loss")?,
            check_finite(self.gap_loss, "gap_loss")?,
            check_finite(self.train_err01, "train_err01")?,
            check_finite(self.unlabeled_err01, "unlabeled_err01")?,
            check_finite(self.gap_err01, "gap_err01")?,
            fmt_opt(self.bound_trc, "bound_trc")?,
            fmt_opt(self.bound_vc, "bound_vc")?,
            fmt_opt(self.bound_expected_sbm, "bound_expected_sbm")?,
            check_finite(self.omega_used, "omega_used")?,
            check_finite(self.beta_used, "beta_used")?,
            check_finite(self.scale_factor, "scale_factor")?,
        ))
    }
}

/// Write rows with `# `-prefixed provenance comments (effective config)
/// above the fixed header.
pub fn write_results_commented(
    rows: &[ResultsRow],
    comments: &[String],
    path: &Path,
) -> Result<()> {
    let mut out = String::new();
    for c in comments {
        for line in c.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
    }
    out.push_str(RESULTS_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv()?);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn write_results(rows: &[ResultsRow], path: &Path) -> Result<()> {
    write_results_commented(rows, &[], path)
}

/// Read rows back; `#` comment lines are skipped, the header is checked.
pub fn read_results(path: &Path) -> Result<Vec<ResultsRow>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        if !saw_header {
            if line != RESULTS_HEADER {
                return Err(parse_err(path, lineno, "unrecognized results header"));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let expected = RESULTS_HEADER.split(',').count();
        if fields.len() != expected {
            return Err(parse_err(
                path,
                lineno,
                format!("expected {expected} fields, got {}", fields.len()),
            ));
        }
        let num = |i: usize, what: &str| -> Result<f64> {
            fields[i]
                .parse::<f64>()
                .map_err(|_| parse_err(path, lineno, format!("bad {what} \"{}\"", fields[i])))
        };
        let opt = |i: usize, what: &str| -> Result<Option<f64>> {
            if fields[i].is_empty() {
                Ok(None)
            } else {
                num(i, what).map(Some)
            }
        };
        rows.push(ResultsRow {
            experiment: fields[0].to_string(),
            param_name: fields[1].to_string(),
            param_value: num(2, "param_value")?,
            seed: fields[3]
                .parse::<u64>()
                .map_err(|_| parse_err(path, lineno, "bad seed"))?,
            epoch: fields[4]
                .parse::<usize>()
                .map_err(|_| parse_err(path, lineno, "bad epoch"))?,
            train_loss: num(5, "train_loss")?,
            unlabeled_loss: num(6, "unlabeled_loss")?,
            gap_loss: num(7, "gap_loss")?,
            train_err01: num(8, "train_err01")?,
            unlabeled_err01: num(9, "unlabeled_err01")?,
            gap_err01: num(10, "gap_err01")?,
            bound_trc: opt(11, "bound_trc")?,
            bound_vc: opt(12, "bound_vc")?,
            bound_expected_sbm: opt(13, "bound_expected_sbm")?,
            omega_used: num(14, "omega_used")?,
            beta_used: num(15, "beta_used")?,
            scale_factor: num(16, "scale_factor")?,
        });
    }
    if !saw_header {
        return Err(parse_err(path, 1, "missing results header"));
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

/// How the planted mean vector is produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuSpec {
    /// Entries i.i.d. uniform on [0, 1], seeded.
    Uniform,
    /// All entries equal to the given value.
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSection {
    pub n: usize,
    pub d: usize,
    pub p: f64,
    pub q: f64,
    /// None means gamma = n (features and graph fully aligned).
    pub gamma: Option<f64>,
    pub sigma: f64,
    pub seed: u64,
    pub mu: MuSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnSection {
    /// Hidden widths d_1..d_{K-1}; the output width comes from the loss.
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub loss: LossKind,
    pub residual_alpha: Option<f64>,
    pub init_scale: f64,
    pub linear_last_layer: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSection {
    pub m: usize,
    pub epochs: usize,
    pub eval_every: usize,
    pub lr: f64,
    pub optimizer: OptimizerKind,
    pub target: PlantedTarget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsSection {
    pub omega: f64,
    pub beta: f64,
    pub delta: f64,
    pub lipschitz: f64,
    pub c6: f64,
    pub c7: f64,
    pub c8: f64,
    pub diffusion: DiffusionOperator,
    /// true: measure omega/beta from the trained model instead of the
    /// fixed budgets above.
    pub measure_norms: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSection {
    /// Sweep kind by name; None means single-point runs only.
    pub kind: Option<String>,
    pub seeds: usize,
    /// None picks the per-kind default (30 for labeled-count, 25 else).
    pub scale_factor: Option<f64>,
}

/// A full run configuration: the five sections with their defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub planted: PlantedSection,
    pub gnn: GnnSection,
    pub train: TrainSection,
    pub bounds: BoundsSection,
    pub sweep: SweepSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            planted: PlantedSection {
                n: 500,
                d: 100,
                p: 0.2,
                q: 0.01,
                gamma: None,
                sigma: 1.0,
                seed: 0,
                mu: MuSpec::Uniform,
            },
            gnn: GnnSection {
                hidden: vec![16],
                activation: Activation::Relu,
                loss: LossKind::SquaredBinary,
                residual_alpha: None,
                init_scale: 1.0,
                linear_last_layer: None,
            },
            train: TrainSection {
                m: 100,
                epochs: 1000,
                eval_every: 50,
                lr: 0.001,
                optimizer: OptimizerKind::Sgd,
                target: PlantedTarget::FeatureClasses,
            },
            bounds: BoundsSection {
                omega: 0.1,
                beta: 0.1,
                delta: 0.05,
                lipschitz: 1.0,
                c6: 1.0,
                c7: 1.0,
                c8: 1.0,
                diffusion: DiffusionOperator::DegreeNormalized,
                measure_norms: false,
            },
            sweep: SweepSection {
                kind: None,
                seeds: 5,
                scale_factor: None,
            },
        }
    }
}

const SECTION_NAMES: [&str; 5] = ["planted", "gnn", "train", "bounds", "sweep"];

fn known_keys(section: &str) -> &'static [&'static str] {
    match section {
        "planted" => &["n", "d", "p", "q", "gamma", "sigma", "seed", "mu"],
        "gnn" => &[
            "hidden",
            "activation",
            "loss",
            "alpha",
            "init_scale",
            "linear_last",
        ],
        "train" => &["m", "epochs", "eval_every", "lr", "optimizer", "target"],
        "bounds" => &[
            "omega",
            "beta",
            "delta",
            "lipschitz",
            "c6",
            "c7",
            "c8",
            "diffusion",
            "norm_source",
        ],
        "sweep" => &["kind", "seeds", "scale_factor"],
        _ => &[],
    }
}

/// Edit distance for "did you mean" suggestions.
fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut row = vec![i + 1];
        for (j, &cb) in b.iter().enumerate() {
            let cost = if ca == cb { 0 } else { 1 };
            row.push((prev[j] + cost).min(prev[j + 1] + 1).min(row[j] + 1));
        }
        prev = row;
    }
    prev[b.len()]
}

fn suggest<'a>(word: &str, candidates: impl Iterator<Item = &'a str>) -> Option<&'a str> {
    candidates
        .map(|c| (levenshtein(word, c), c))
        .filter(|&(dist, _)| dist <= 3)
        .min_by_key(|&(dist, _)| dist)
        .map(|(_, c)| c)
}

fn key_err(path: &Path, line: usize, section: &str, key: &str) -> Error {
    let mut msg = format!("unknown key \"{key}\" in section [{section}]");
    if let Some(s) = suggest(key, known_keys(section).iter().copied()) {
        msg.push_str(&format!("; did you mean \"{s}\"?"));
    }
    parse_err(path, line, msg)
}

/// Parse a config file: `[section]` headers with `key = value` lines, or
/// dotted `section.key = value` anywhere. `#` starts a comment line.
/// Unknown keys are rejected with a suggestion; duplicate keys are errors.
/// Every key is optional; absences keep the defaults.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_config_str(&text, path)
}

pub fn parse_config_str(text: &str, path: &Path) -> Result<RunConfig> {
    let mut config = RunConfig::default();
    let mut seen: HashMap<(String, String), usize> = HashMap::new();
    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim();
            if !SECTION_NAMES.contains(&name) {
                let mut msg = format!("unknown section [{name}]");
                if let Some(s) = suggest(name, SECTION_NAMES.iter().copied()) {
                    msg.push_str(&format!("; did you mean [{s}]?"));
                }
                return Err(parse_err(path, lineno, msg));
            }
            section = name.to_string();
            continue;
        }
        let Some((key_part, value)) = line.split_once('=') else {
            return Err(parse_err(
                path,
                lineno,
                format!("expected \"key = value\", got \"{line}\""),
            ));
        };
        let key_part = key_part.trim();
        let value = value.trim();
        let (sec, key) = match key_part.split_once('.') {
            Some((s, k)) => (s.trim().to_string(), k.trim().to_string()),
            None => {
                if section.is_empty() {
                    return Err(parse_err(
                        path,
                        lineno,
                        format!("key \"{key_part}\" appears before any [section]"),
                    ));
                }
                (section.clone(), key_part.to_string())
            }
        };
        if !SECTION_NAMES.contains(&sec.as_str()) {
            let mut msg = format!("unknown section \"{sec}\"");
            if let Some(s) = suggest(&sec, SECTION_NAMES.iter().copied()) {
                msg.push_str(&format!("; did you mean \"{s}\"?"));
            }
            return Err(parse_err(path, lineno, msg));
        }
        if let Some(first) = seen.insert((sec.clone(), key.clone()), lineno) {
            return Err(parse_err(
                path,
                lineno,
                format!("duplicate key {sec}.{key} (first set on line {first})"),
            ));
        }
        apply_key(&mut config, &sec, &key, value, path, lineno)?;
    }
    Ok(config)
}

/// Apply one `section.key=value` assignment, the command-line mirror of a
/// config-file line. `index` is the 1-based position of the assignment in
/// the override list (reported as the "line" in errors).
pub fn apply_override(config: &mut RunConfig, assignment: &str, index: usize) -> Result<()> {
    let path = Path::new("<command line>");
    let Some((key_part, value)) = assignment.split_once('=') else {
        return Err(parse_err(
            path,
            index,
            format!("expected section.key=value, got \"{assignment}\""),
        ));
    };
    let key_part = key_part.trim();
    let value = value.trim();
    let Some((sec, key)) = key_part.split_once('.') else {
        return Err(parse_err(
            path,
            index,
            format!("override key \"{key_part}\" needs a section prefix (e.g. planted.n)"),
        ));
    };
    let (sec, key) = (sec.trim(), key.trim());
    if !SECTION_NAMES.contains(&sec) {
        let mut msg = format!("unknown section \"{sec}\"");
        if let Some(s) = suggest(sec, SECTION_NAMES.iter().copied()) {
            msg.push_str(&format!("; did you mean \"{s}\"?"));
        }
        return Err(parse_err(path, index, msg));
    }
    apply_key(config, sec, key, value, path, index)
}

impl RunConfig {
    /// Render the effective configuration as config-file lines (the same
    /// format [`parse_config_str`] accepts); used as the provenance echo in
    /// CSV headers. Keys whose value is "unset, use the default resolution"
    /// (gamma, alpha, linear_last, sweep.kind, sweep.scale_factor) are
    /// omitted, so `parse(echo(c)) == c`.
    pub fn echo_lines(&self) -> Vec<String> {
        let mut lines = Vec::new();
        let p = &self.planted;
        lines.push("[planted]".to_string());
        lines.push(format!("n = {}", p.n));
        lines.push(format!("d = {}", p.d));
        lines.push(format!("p = {}", p.p));
        lines.push(format!("q = {}", p.q));
        if let Some(g) = p.gamma {
            lines.push(format!("gamma = {g}"));
        }
        lines.push(format!("sigma = {}", p.sigma));
        lines.push(format!("seed = {}", p.seed));
        lines.push(format!(
            "mu = {}",
            match p.mu {
                MuSpec::Uniform => "uniform".to_string(),
                MuSpec::Constant(c) => format!("constant:{c}"),
            }
        ));
        let g = &self.gnn;
        lines.push("[gnn]".to_string());
        lines.push(format!(
            "hidden = {}",
            g.hidden
                .iter()
                .map(|h| h.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ));
        lines.push(format!("activation = {}", match g.activation {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }));
        lines.push(format!("loss = {}", match g.loss {
            LossKind::SquaredBinary => "squared",
            LossKind::MulticlassNll => "nll",
        }));
        if let Some(a) = g.residual_alpha {
            lines.push(format!("alpha = {a}"));
        }
        lines.push(format!("init_scale = {}", g.init_scale));
        if let Some(l) = g.linear_last_layer {
            lines.push(format!("linear_last = {l}"));
        }
        let t = &self.train;
        lines.push("[train]".to_string());
        lines.push(format!("m = {}", t.m));
        lines.push(format!("epochs = {}", t.epochs));
        lines.push(format!("eval_every = {}", t.eval_every));
        lines.push(format!("lr = {}", t.lr));
        lines.push(format!("optimizer = {}", match t.optimizer {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        }));
        lines.push(format!("target = {}", match t.target {
            PlantedTarget::FeatureClasses => "z",
            PlantedTarget::GraphCommunities => "y",
        }));
        let b = &self.bounds;
        lines.push("[bounds]".to_string());
        lines.push(format!("omega = {}", b.omega));
        lines.push(format!("beta = {}", b.beta));
        lines.push(format!("delta = {}", b.delta));
        lines.push(format!("lipschitz = {}", b.lipschitz));
        lines.push(format!("c6 = {}", b.c6));
        lines.push(format!("c7 = {}", b.c7));
        lines.push(format!("c8 = {}", b.c8));
        lines.push(format!("diffusion = {}", match b.diffusion {
            DiffusionOperator::DegreeNormalized => "normalized",
            DiffusionOperator::SelfLoop => "selfloop",
            DiffusionOperator::Identity => "identity",
        }));
        lines.push(format!(
            "norm_source = {}",
            if b.measure_norms { "measured" } else { "fixed" }
        ));
        let s = &self.sweep;
        lines.push("[sweep]".to_string());
        if let Some(k) = &s.kind {
            lines.push(format!("kind = {k}"));
        }
        lines.push(format!("seeds = {}", s.seeds));
        if let Some(f) = s.scale_factor {
            lines.push(format!("scale_factor = {f}"));
        }
        lines
    }
}

fn apply_key(
    config: &mut RunConfig,
    section: &str,
    key: &str,
    value: &str,
    path: &Path,
    line: usize,
) -> Result<()> {
    let bad = |what: &str| parse_err(path, line, format!("cannot parse {what} from \"{value}\""));
    macro_rules! num {
        ($t:ty, $what:expr) => {
            value.parse::<$t>().map_err(|_| bad($what))
        };
    }
    match (section, key) {
        ("planted", "n") => config.planted.n = num!(usize, "node count")?,
        ("planted", "d") => config.planted.d = num!(usize, "feature dim")?,
        ("planted", "p") => config.planted.p = num!(f64, "edge probability")?,
        ("planted", "q") => config.planted.q = num!(f64, "edge probability")?,
        ("planted", "gamma") => config.planted.gamma = Some(num!(f64, "alignment")?),
        ("planted", "sigma") => config.planted.sigma = num!(f64, "noise level")?,
        ("planted", "seed") => config.planted.seed = num!(u64, "seed")?,
        ("planted", "mu") => {
            config.planted.mu = if value == "uniform" {
                MuSpec::Uniform
            } else if let Some(rest) = value.strip_prefix("constant:") {
                MuSpec::Constant(rest.trim().parse::<f64>().map_err(|_| bad("mu constant"))?)
            } else {
                return Err(parse_err(
                    path,
                    line,
                    format!("mu must be \"uniform\" or \"constant:<value>\", got \"{value}\""),
                ));
            }
        }
        ("gnn", "hidden") => {
            let dims: Vec<usize> = value
                .split(',')
                .map(|t| t.trim().parse::<usize>().map_err(|_| bad("hidden widths")))
                .collect::<Result<_>>()?;
            if dims.is_empty() || dims.contains(&0) {
                return Err(parse_err(path, line, "hidden widths must be positive"));
            }
            config.gnn.hidden = dims;
        }
        ("gnn", "activation") => {
            config.gnn.activation = match value {
                "relu" => Activation::Relu,
                "identity" => Activation::Identity,
                _ => {
                    return Err(parse_err(
                        path,
                        line,
                        format!("activation must be relu or identity, got \"{value}\""),
                    ))
                }
            }
        }
        ("gnn", "loss") => {
            config.gnn.loss = match value {
                "squared" => LossKind::SquaredBinary,
                "nll" => LossKind::MulticlassNll,
                _ => {
                    return Err(parse_err(
                        path,
                        line,
                        format!("loss must be squared or nll, got \"{value}\""),
                    ))
                }
            }
        }
        ("gnn", "alpha") => {
            config.gnn.residual_alpha = if value == "none" {
                None
            } else {
                Some(num!(f64, "residual alpha")?)
            }
        }
        ("gnn", "init_scale") => config.gnn.init_scale = num!(f64, "init scale")?,
        ("gnn", "linear_last") => {
            config.gnn.linear_last_layer = match value {
                "true" => Some(true),
                "false" => Some(false),
                "default" => None,
                _ => {
                    return Err(parse_err(
                        path,
                        line,
                        format!("linear_last must be true, false, or default, got \"{value}\""),
                    ))
                }
            }
        }
        ("train", "m") => config.train.m = num!(usize, "labeled count")?,
        ("train", "epochs") => config.train.epochs = num!(usize, "epochs")?,
        ("train", "eval_every") => config.train.eval_every = num!(usize, "eval interval")?,
        ("train", "lr") => config.train.lr = num!(f64, "learning rate")?,
        ("train", "optimizer") => {
            config.train.optimizer = match value {
                "sgd" => OptimizerKind::Sgd,
                "adam" => OptimizerKind::Adam,
                _ => {
                    return Err(parse_err(
                        path,
                        line,
                        format!("optimizer must be sgd or adam, got \"{value}\""),
                    ))
                }
            }
        }
        ("train", "target") => {
            config.train.target = match value {
                "z" => PlantedTarget::FeatureClasses,
                "y" => PlantedTarget::GraphCommunities,
                _ => {
                    return Err(parse_err(
                        path,
                        line,
                        format!("target must be z or y, got \"{value}\""),
                    ))
                }
            }
        }
        ("bounds", "omega") => config.bounds.omega = num!(f64, "omega")?,
        ("bounds", "beta") => config.bounds.beta = num!(f64, "beta")?,
        ("bounds", "delta") => config.bounds.delta = num!(f64, "delta")?,
        ("bounds", "lipschitz") => config.bounds.lipschitz = num!(f64, "lipschitz constant")?,
        ("bounds", "c6") => config.bounds.c6 = num!(f64, "c6")?,
        ("bounds", "c7") => config.bounds.c7 = num!(f64, "c7")?,
        ("bounds", "c8") => config.bounds.c8 = num!(f64, "c8")?,
        ("bounds", "diffusion") => {
            config.bounds.diffusion = match value {
                "normalized" => DiffusionOperator::DegreeNormalized,
                "selfloop" => DiffusionOperator::SelfLoop,
                "identity" => DiffusionOperator::Identity,
                _ => {
                    return Err(parse_err(
                        path,
                        line,
                        format!(
                            "diffusion must be normalized, selfloop, or identity, got \"{value}\""
                        ),
                    ))
                }
            }
        }
        ("bounds", "norm_source") => {
            config.bounds.measure_norms = match value {
                "fixed" => false,
                "measured" => true,
                _ => {
                    return Err(parse_err(
                        path,
                        line,
                        format!("norm_source must be fixed or measured, got \"{value}\""),
                    ))
                }
            }
        }
        ("sweep", "kind") => config.sweep.kind = Some(value.to_string()),
        ("sweep", "seeds") => {
            config.sweep.seeds = num!(usize, "seed count")?;
            if config.sweep.seeds == 0 {
                return Err(parse_err(path, line, "seeds must be positive"));
            }
        }
        ("sweep", "scale_factor") => config.sweep.scale_factor = Some(num!(f64, "scale factor")?),
        (s, k) => return Err(key_err(path, line, s, k)),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Cora loader
// ---------------------------------------------------------------------------

/// A loaded citation dataset plus ingestion diagnostics.
#[derive(Debug)]
pub struct CoraLoad {
    pub dataset: Dataset,
    /// Citation lines referencing an id absent from the content file.
    pub dropped_unknown: usize,
    /// Citation lines with both endpoints equal (would put a 1 on the
    /// adjacency diagonal).
    pub dropped_self_loops: usize,
}

/// Load a citation network in the two-file text layout: `content` rows of
/// "id feature... label" and `cites` rows of "cited citing", whitespace
/// separated. Node order follows the content file; ids are opaque strings;
/// edges are undirected; features are row-normalized by their entry sum
/// (zero rows stay zero); labels map to class indices by first appearance;
/// train_idx is the first ceil(0.1 n) of a seeded shuffle, sorted.
pub fn load_cora(content_path: &Path, cites_path: &Path, seed: u64) -> Result<CoraLoad> {
    let content = fs::read_to_string(content_path).map_err(|e| io_err(content_path, e))?;
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut class_of: Vec<usize> = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, line) in content.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 3 {
            return Err(parse_err(
                content_path,
                lineno,
                "content row needs id, at least one feature, and a label",
            ));
        }
        let w = fields.len() - 2;
        match width {
            None => width = Some(w),
            Some(expect) if expect != w => {
                return Err(parse_err(
                    content_path,
                    lineno,
                    format!("row has {w} features, expected {expect}"),
                ));
            }
            _ => {}
        }
        let id = fields[0].to_string();
        let node = rows.len();
        if ids.insert(id.clone(), node).is_some() {
            return Err(parse_err(
                content_path,
                lineno,
                format!("duplicate paper id \"{id}\""),
            ));
        }
        let mut feat = Vec::with_capacity(w);
        for tok in &fields[1..=w] {
            feat.push(tok.parse::<f64>().map_err(|_| {
                parse_err(content_path, lineno, format!("bad feature value \"{tok}\""))
            })?);
        }
        rows.push(feat);
        let label = fields[w + 1];
        let class = match class_names.iter().position(|c| c == label) {
            Some(c) => c,
            None => {
                class_names.push(label.to_string());
                class_names.len() - 1
            }
        };
        class_of.push(class);
    }
    let n = rows.len();
    if n == 0 {
        return Err(parse_err(content_path, 1, "content file has no rows"));
    }
    let d = width.unwrap();

    // Row normalization by entry sum; zero rows stay zero.
    let mut features = Array2::zeros((n, d));
    for (i, feat) in rows.iter().enumerate() {
        let sum: f64 = feat.iter().sum();
        for (j, &v) in feat.iter().enumerate() {
            features[[i, j]] = if sum != 0.0 { v / sum } else { v };
        }
    }

    let cites = fs::read_to_string(cites_path).map_err(|e| io_err(cites_path, e))?;
    let mut adjacency = Array2::zeros((n, n));
    let mut dropped_unknown = 0usize;
    let mut dropped_self_loops = 0usize;
    for (idx, line) in cites.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(parse_err(
                cites_path,
                lineno,
                format!("citation row needs two ids, got {}", fields.len()),
            ));
        }
        match (ids.get(fields[0]), ids.get(fields[1])) {
            (Some(&a), Some(&b)) => {
                if a == b {
                    dropped_self_loops += 1;
                } else {
                    adjacency[[a, b]] = 1.0;
                    adjacency[[b, a]] = 1.0;
                }
            }
            _ => dropped_unknown += 1,
        }
    }

    let m = n.div_ceil(10); // ceil(0.1 n)
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = stream_rng(seed, stream::TRAIN_SPLIT);
    order.shuffle(&mut rng);
    let mut train_idx: Vec<usize> = order.into_iter().take(m).collect();
    train_idx.sort_unstable();

    Ok(CoraLoad {
        dataset: Dataset {
            adjacency,
            features,
            labels: Labels::Classes(class_of),
            train_idx,
            num_classes: class_names.len(),
        },
        dropped_unknown,
        dropped_self_loops,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planted::{generate_dataset, PlantedConfig};

    fn tmpdir() -> tempfile::TempDir {
        tempfile::tempdir().expect("create temp dir")
    }

    fn small_dataset() -> Dataset {
        let config = PlantedConfig {
            n: 12,
            d: 3,
            p: 0.6,
            q: 0.2,
            gamma_target: 8.0,
            mu: Array1::from_vec(vec![0.5, -1.5, 2.0]),
            sigma: 0.7,
            seed: 21,
        };
        generate_dataset(&config, 4).unwrap()
    }

    #[test]
    fn dataset_round_trip_is_identity() {
        let dir = tmpdir();
        let path = dir.path().join("data.txt");
        let ds = small_dataset();
        save_dataset(&ds, &path).unwrap();
        let back = load_dataset(&path).unwrap();
        assert_eq!(ds.adjacency, back.adjacency);
        assert_eq!(ds.features, back.features);
        assert_eq!(ds.train_idx, back.train_idx);
        assert_eq!(ds.num_classes, back.num_classes);
        match (&ds.labels, &back.labels) {
            (Labels::Planted(a), Labels::Planted(b)) => {
                assert_eq!(a.z, b.z);
                assert_eq!(a.y, b.y);
                assert_eq!(a.gamma_actual, b.gamma_actual);
            }
            _ => panic!("label kind changed in round trip"),
        }
    }

    #[test]
    fn empty_graph_dataset_round_trips() {
        let dir = tmpdir();
        let path = dir.path().join("empty.txt");
        let mut ds = small_dataset();
        ds.adjacency.fill(0.0);
        save_dataset(&ds, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("\nedges 0\n"));
        let back = load_dataset(&path).unwrap();
        assert_eq!(back.adjacency.sum(), 0.0);
    }

    #[test]
    fn dataset_version_mismatch_reported() {
        let dir = tmpdir();
        let path = dir.path().join("bad.txt");
        fs::write(&path, "gnnlab dataset v9\nn 4\n").unwrap();
        match load_dataset(&path) {
            Err(Error::VersionMismatch { found, .. }) => {
                assert_eq!(found, "gnnlab dataset v9");
            }
            other => panic!("expected version mismatch, got {other:?}"),
        }
    }

    #[test]
    fn dataset_truncation_reported_with_line() {
        let dir = tmpdir();
        let path = dir.path().join("trunc.txt");
        let ds = small_dataset();
        save_dataset(&ds, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let cut: String = text.lines().take(8).collect::<Vec<_>>().join("\n");
        fs::write(&path, cut).unwrap();
        match load_dataset(&path) {
            Err(Error::Parse { line, .. }) => assert!(line > 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn model_round_trip_is_identity() {
        let dir = tmpdir();
        let path = dir.path().join("model.bin");
        let cfg = GnnConfig {
            layer_dims: vec![5, 4, 4, 1],
            activation: Activation::Relu,
            residual_alpha: Some(0.3),
            loss: LossKind::SquaredBinary,
            init_scale: 0.9,
            seed: 77,
            linear_last_layer: Some(true),
        };
        let model = crate::gnn::init_params(&cfg).unwrap();
        save_model(&model, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(model, back);
    }

    #[test]
    fn model_bad_magic_and_truncation() {
        let dir = tmpdir();
        let path = dir.path().join("model.bin");
        fs::write(&path, b"NOTMAGIC????").unwrap();
        assert!(matches!(
            load_model(&path),
            Err(Error::VersionMismatch { .. })
        ));
        let cfg = GnnConfig {
            layer_dims: vec![3, 1],
            activation: Activation::Identity,
            residual_alpha: None,
            loss: LossKind::SquaredBinary,
            init_scale: 1.0,
            seed: 0,
            linear_last_layer: None,
        };
        let model = crate::gnn::init_params(&cfg).unwrap();
        save_model(&model, &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(load_model(&path), Err(Error::Parse { .. })));
    }

    fn sample_row(seed: u64) -> ResultsRow {
        ResultsRow {
            experiment: "alignment".into(),
            param_name: "gamma_over_n".into(),
            param_value: 0.7,
            seed,
            epoch: 150,
            train_loss: 0.25,
            unlabeled_loss: 0.4,
            gap_loss: 0.15000000000000002,
            train_err01: 0.1,
            unlabeled_err01: 0.22,
            gap_err01: 0.12,
            bound_trc: Some(38.193068371867634),
            bound_vc: None,
            bound_expected_sbm: Some(1.5e-7),
            omega_used: 0.1,
            beta_used: 0.1,
            scale_factor: 25.0,
        }
    }

    #[test]
    fn results_round_trip_and_comments() {
        let dir = tmpdir();
        let path = dir.path().join("rows.csv");
        let rows = vec![sample_row(1), sample_row(2)];
        write_results_commented(&rows, &["planted.n = 500".into()], &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# planted.n = 500\n"));
        let back = read_results(&path).unwrap();
        assert_eq!(rows, back);
    }

    #[test]
    fn results_reject_nonfinite_and_commas() {
        let dir = tmpdir();
        let path = dir.path().join("rows.csv");
        let mut row = sample_row(1);
        row.train_loss = f64::NAN;
        assert!(write_results(&[row], &path).is_err());
        let mut row = sample_row(1);
        row.experiment = "a,b".into();
        assert!(write_results(&[row], &path).is_err());
    }

    #[test]
    fn config_defaults_and_sections() {
        let text = "\
# default-equivalent file
[planted]
n = 500
d = 100
p = 0.2
q = 0.01

[train]
m = 100
lr = 0.001
";
        let parsed = parse_config_str(text, Path::new("test.cfg")).unwrap();
        assert_eq!(parsed, RunConfig::default());
        let empty = parse_config_str("", Path::new("test.cfg")).unwrap();
        assert_eq!(empty, RunConfig::default());
    }

    #[test]
    fn config_dotted_keys_and_overrides() {
        let text = "\
planted.n = 64
planted.gamma = 32
gnn.hidden = 8,8
gnn.alpha = 0.5
train.optimizer = adam
bounds.norm_source = measured
sweep.kind = depth
";
        let parsed = parse_config_str(text, Path::new("test.cfg")).unwrap();
        assert_eq!(parsed.planted.n, 64);
        assert_eq!(parsed.planted.gamma, Some(32.0));
        assert_eq!(parsed.gnn.hidden, vec![8, 8]);
        assert_eq!(parsed.gnn.residual_alpha, Some(0.5));
        assert_eq!(parsed.train.optimizer, OptimizerKind::Adam);
        assert!(parsed.bounds.measure_norms);
        assert_eq!(parsed.sweep.kind.as_deref(), Some("depth"));
    }

    #[test]
    fn config_unknown_key_suggests() {
        let err = parse_config_str("[planted]\nsigm = 0.5\n", Path::new("t.cfg")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("unknown key"), "{msg}");
        assert!(msg.contains("sigma"), "{msg}");
        let err = parse_config_str("[plnted]\nn = 4\n", Path::new("t.cfg")).unwrap_err();
        assert!(err.to_string().contains("planted"), "{err}");
    }

    #[test]
    fn config_duplicate_key_rejected() {
        let err =
            parse_config_str("[planted]\nn = 4\nn = 8\n", Path::new("t.cfg")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("duplicate"), "{msg}");
        // The same key through dotted form is also a duplicate.
        let err = parse_config_str("[planted]\nn = 4\nplanted.n = 8\n", Path::new("t.cfg"))
            .unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn config_type_mismatch_has_line() {
        match parse_config_str("[planted]\nn = abc\n", Path::new("t.cfg")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn cora_loader_tiny_synthetic() {
        let dir = tmpdir();
        let content = dir.path().join("x.content");
        let cites = dir.path().join("x.cites");
        fs::write(
            &content,
            "p1\t1\t0\t1\tgenetic\np2\t0\t0\t0\ttheory\np3\t2\t2\t0\tgenetic\n",
        )
        .unwrap();
        fs::write(&cites, "p1\tp3\np1\tmissing\np2\tp2\n").unwrap();
        let load = load_cora(&content, &cites, 5).unwrap();
        let ds = &load.dataset;
        assert_eq!(ds.n(), 3);
        assert_eq!(ds.d(), 3);
        assert_eq!(ds.num_classes, 2);
        // Exactly one symmetric pair of ones.
        assert_eq!(ds.adjacency.sum(), 2.0);
        assert_eq!(ds.adjacency[[0, 2]], 1.0);
        assert_eq!(ds.adjacency[[2, 0]], 1.0);
        assert_eq!(load.dropped_unknown, 1);
        assert_eq!(load.dropped_self_loops, 1);
        // Labels by first appearance: genetic = 0, theory = 1.
        assert_eq!(ds.labels, Labels::Classes(vec![0, 1, 0]));
        // Row sums 1 or 0 after normalization.
        for row in ds.features.rows() {
            let s: f64 = row.iter().sum();
            assert!(s == 0.0 || (s - 1.0).abs() < 1e-12);
        }
        // ceil(0.1 * 3) = 1 train node.
        assert_eq!(ds.train_idx.len(), 1);
    }

    #[test]
    fn cora_loader_rejects_ragged_rows() {
        let dir = tmpdir();
        let content = dir.path().join("x.content");
        let cites = dir.path().join("x.cites");
        fs::write(&content, "p1 1 0 lab\np2 1 lab\n").unwrap();
        fs::write(&cites, "").unwrap();
        match load_cora(&content, &cites, 0) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn cora_split_depends_on_seed() {
        let dir = tmpdir();
        let content = dir.path().join("x.content");
        let cites = dir.path().join("x.cites");
        let mut text = String::new();
        for i in 0..40 {
            text.push_str(&format!("p{i} 1 0 c{}\n", i % 3));
        }
        fs::write(&content, text).unwrap();
        fs::write(&cites, "p0\tp1\n").unwrap();
        let a = load_cora(&content, &cites, 1).unwrap().dataset.train_idx;
        let b = load_cora(&content, &cites, 1).unwrap().dataset.train_idx;
        let c = load_cora(&content, &cites, 2).unwrap().dataset.train_idx;
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 4);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn echo_round_trips_through_parser() {
        let mut config = RunConfig::default();
        config.planted.gamma = Some(250.0);
        config.planted.mu = MuSpec::Constant(0.75);
        config.gnn.hidden = vec![16, 16];
        config.gnn.residual_alpha = Some(0.2);
        config.gnn.linear_last_layer = Some(false);
        config.train.optimizer = OptimizerKind::Adam;
        config.bounds.measure_norms = true;
        config.sweep.kind = Some("alignment".into());
        config.sweep.scale_factor = Some(12.5);
        let text = config.echo_lines().join("\n");
        let back = parse_config_str(&text, Path::new("echo.cfg")).unwrap();
        assert_eq!(config, back);
        // Defaults round-trip too (optional keys omitted).
        let dflt = RunConfig::default();
        let text = dflt.echo_lines().join("\n");
        assert_eq!(parse_config_str(&text, Path::new("echo.cfg")).unwrap(), dflt);
    }

    #[test]
    fn overrides_apply_and_report_errors() {
        let mut config = RunConfig::default();
        apply_override(&mut config, "planted.n = 64", 1).unwrap();
        apply_override(&mut config, "gnn.hidden=8,4", 2).unwrap();
        assert_eq!(config.planted.n, 64);
        assert_eq!(config.gnn.hidden, vec![8, 4]);
        let err = apply_override(&mut config, "planted.n", 3).unwrap_err();
        assert!(err.to_string().contains("section.key=value"), "{err}");
        let err = apply_override(&mut config, "n=64", 4).unwrap_err();
        assert!(err.to_string().contains("section prefix"), "{err}");
        let err = apply_override(&mut config, "planted.sigm=1", 5).unwrap_err();
        assert!(err.to_string().contains("sigma"), "{err}");
    }

    #[test]
    fn levenshtein_basics() {
        assert_eq!(levenshtein("omega", "omega"), 0);
        assert_eq!(levenshtein("omeg", "omega"), 1);
        assert_eq!(levenshtein("kitten", "sitting"), 3);
    }
}
