//! Versioned plain-text model files.
//!
//! ```text
//! faceshape-model 1
//! kind svm-rbf
//! svm_c 1.0000000000000000e-2
//! ...
//! norm_mean <19 values>
//! norm_std <19 values>
//! <kind-specific payload>
//! end
//! ```
//!
//! Reals are written with 17 significant digits so a load reproduces every
//! parameter bit for bit. A file without the closing `end` line is rejected.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::knn::KnnParams;
use super::lda::LdaParams;
use super::mlp::{parameter_count, MlpParams};
use super::svm::{BinaryMachine, Kernel, SvmParams};
use super::{ClassifierConfig, ClassifierKind, ModelParams, TrainedModel, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::features::{NormalizationStats, NUM_FEATURES};
use crate::landmarks::FaceShape;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "faceshape-model";

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn push_line(out: &mut String, key: &str, values: impl IntoIterator<Item = String>) {
    out.push_str(key);
    for v in values {
        out.push(' ');
        out.push_str(&v);
    }
    out.push('\n');
}

pub fn model_to_string(model: &TrainedModel) -> String {
    let cfg = &model.config;
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {FORMAT_VERSION}");
    let _ = writeln!(out, "kind {}", cfg.kind.tag());
    let _ = writeln!(out, "svm_c {}", real(cfg.svm_c));
    let _ = writeln!(out, "rbf_gamma {}", real(cfg.rbf_gamma));
    let _ = writeln!(out, "knn_k {}", cfg.knn_k);
    let _ = writeln!(out, "lda_components {}", cfg.lda_components);
    push_line(
        &mut out,
        "mlp_hidden",
        cfg.mlp_hidden.iter().map(|h| h.to_string()),
    );
    let _ = writeln!(out, "mlp_l2 {}", real(cfg.mlp_l2));
    let _ = writeln!(out, "seed {}", cfg.seed);
    let _ = writeln!(out, "converged {}", model.converged);
    push_line(
        &mut out,
        "norm_mean",
        model.norm.mean.iter().map(|v| real(*v)),
    );
    push_line(
        &mut out,
        "norm_std",
        model.norm.std.iter().map(|v| real(*v)),
    );

    match &model.params {
        ModelParams::Lda(p) => {
            let _ = writeln!(out, "lda_projection {} {}", NUM_FEATURES, p.components);
            push_line(&mut out, "values", p.projection.iter().map(|v| real(*v)));
            let present: Vec<usize> = (0..NUM_CLASSES)
                .filter(|&c| p.centroids[c].is_some())
                .collect();
            let _ = writeln!(out, "lda_centroids {}", present.len());
            for c in present {
                let m = p.centroids[c].as_ref().expect("present");
                push_line(
                    &mut out,
                    "centroid",
                    std::iter::once(FaceShape::ALL[c].name().to_string())
                        .chain(m.iter().map(|v| real(*v))),
                );
            }
        }
        ModelParams::Svm(p) => {
            let _ = writeln!(out, "svm_machines {}", p.machines.len());
            for m in &p.machines {
                let _ = writeln!(
                    out,
                    "machine {} {} {} {}",
                    m.pos.name(),
                    m.neg.name(),
                    real(m.bias),
                    m.coef.len()
                );
                push_line(&mut out, "coef", m.coef.iter().map(|v| real(*v)));
                for s in &m.support {
                    push_line(&mut out, "sv", s.iter().map(|v| real(*v)));
                }
            }
        }
        ModelParams::Mlp(p) => {
            push_line(&mut out, "mlp_sizes", p.sizes.iter().map(|s| s.to_string()));
            push_line(&mut out, "params", p.flat.iter().map(|v| real(*v)));
        }
        ModelParams::Knn(p) => {
            let _ = writeln!(out, "knn_points {}", p.points.len());
            for (pt, label) in p.points.iter().zip(&p.labels) {
                push_line(
                    &mut out,
                    "point",
                    std::iter::once(label.name().to_string()).chain(pt.iter().map(|v| real(*v))),
                );
            }
        }
    }
    out.push_str("end\n");
    out
}

pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model_to_string(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_str(&text)
}

struct Cursor<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

fn bad(detail: impl Into<String>) -> Error {
    Error::ModelFormat(detail.into())
}

impl<'a> Cursor<'a> {
    /// Next line, which must start with `key`; returns the remaining tokens.
    fn expect(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let (i, line) = self
            .lines
            .next()
            .ok_or_else(|| bad(format!("unexpected end of file, expected {key:?}")))?;
        let mut toks = line.split_ascii_whitespace();
        match toks.next() {
            Some(k) if k == key => Ok(toks.collect()),
            other => Err(bad(format!(
                "line {}: expected {key:?}, found {:?}",
                i + 1,
                other.unwrap_or("")
            ))),
        }
    }

    fn one(&mut self, key: &str) -> Result<&'a str> {
        let toks = self.expect(key)?;
        match toks.as_slice() {
            [v] => Ok(v),
            _ => Err(bad(format!(
                "{key}: expected one value, found {}",
                toks.len()
            ))),
        }
    }

    fn reals(&mut self, key: &str, n: usize) -> Result<Vec<f64>> {
        parse_reals(key, &self.expect(key)?, n)
    }
}

fn parse_reals(key: &str, toks: &[&str], n: usize) -> Result<Vec<f64>> {
    if toks.len() != n {
        return Err(bad(format!(
            "{key}: expected {n} values, found {}",
            toks.len()
        )));
    }
    toks.iter().map(|t| parse_real(key, t)).collect()
}

fn parse_real(key: &str, tok: &str) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| bad(format!("{key}: malformed number {tok:?}")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad(format!("{key}: non-finite number {tok:?}")))
    }
}

fn parse_count(key: &str, tok: &str) -> Result<usize> {
    tok.parse()
        .map_err(|_| bad(format!("{key}: malformed count {tok:?}")))
}

fn parse_class(tok: &str) -> Result<FaceShape> {
    tok.parse::<FaceShape>().map_err(bad)
}

fn features_array(v: Vec<f64>) -> [f64; NUM_FEATURES] {
    v.try_into().expect("length checked by parse_reals")
}

pub fn model_from_str(text: &str) -> Result<TrainedModel> {
    let mut cur = Cursor {
        lines: text.lines().enumerate().peekable(),
    };
    let header = cur
        .expect(MAGIC)
        .map_err(|_| bad("not a faceshape model file"))?;
    match header.as_slice() {
        [v] if *v == FORMAT_VERSION.to_string() => {}
        _ => {
            return Err(bad(format!(
                "unsupported model version {:?}",
                header.join(" ")
            )))
        }
    }
    let kind: ClassifierKind = cur.one("kind")?.parse().map_err(bad)?;
    let svm_c = parse_real("svm_c", cur.one("svm_c")?)?;
    let rbf_gamma = parse_real("rbf_gamma", cur.one("rbf_gamma")?)?;
    let knn_k = parse_count("knn_k", cur.one("knn_k")?)?;
    let lda_components = parse_count("lda_components", cur.one("lda_components")?)?;
    let mlp_hidden = cur
        .expect("mlp_hidden")?
        .iter()
        .map(|t| parse_count("mlp_hidden", t))
        .collect::<Result<Vec<_>>>()?;
    let mlp_l2 = parse_real("mlp_l2", cur.one("mlp_l2")?)?;
    let seed: u64 = cur
        .one("seed")?
        .parse()
        .map_err(|_| bad("seed: malformed integer"))?;
    let converged = match cur.one("converged")? {
        "true" => true,
        "false" => false,
        other => {
            return Err(bad(format!(
                "converged: expected true/false, found {other:?}"
            )))
        }
    };
    let config = ClassifierConfig {
        kind,
        svm_c,
        rbf_gamma,
        knn_k,
        lda_components,
        mlp_hidden,
        mlp_l2,
        seed,
    };
    config.check().map_err(|e| bad(e.to_string()))?;
    let mean = features_array(cur.reals("norm_mean", NUM_FEATURES)?);
    let std = features_array(cur.reals("norm_std", NUM_FEATURES)?);
    let norm = NormalizationStats::from_parts(mean, std).map_err(|e| bad(e.to_string()))?;

    let params = match kind {
        ClassifierKind::Lda => {
            let dims = cur.expect("lda_projection")?;
            let (rows, cols) = match dims.as_slice() {
                [r, c] => (
                    parse_count("lda_projection", r)?,
                    parse_count("lda_projection", c)?,
                ),
                _ => return Err(bad("lda_projection: expected rows and cols")),
            };
            if rows != NUM_FEATURES || cols != lda_components {
                return Err(bad("lda_projection: shape does not match config"));
            }
            let projection = cur.reals("values", rows * cols)?;
            let count = parse_count("lda_centroids", cur.one("lda_centroids")?)?;
            if count > NUM_CLASSES {
                return Err(bad("lda_centroids: too many classes"));
            }
            let mut centroids: [Option<Vec<f64>>; NUM_CLASSES] = Default::default();
            for _ in 0..count {
                let toks = cur.expect("centroid")?;
                let (class, vals) = toks
                    .split_first()
                    .ok_or_else(|| bad("centroid: empty line"))?;
                let class = parse_class(class)?;
                if centroids[class.index()].is_some() {
                    return Err(bad("centroid: duplicate class"));
                }
                centroids[class.index()] = Some(parse_reals("centroid", vals, cols)?);
            }
            ModelParams::Lda(LdaParams {
                projection,
                components: cols,
                centroids,
            })
        }
        ClassifierKind::SvmLinear | ClassifierKind::SvmRbf => {
            let count = parse_count("svm_machines", cur.one("svm_machines")?)?;
            let mut machines = Vec::with_capacity(count.min(16));
            for _ in 0..count {
                let toks = cur.expect("machine")?;
                let [pos, neg, bias, n_sv] = toks.as_slice() else {
                    return Err(bad("machine: expected pos, neg, bias, count"));
                };
                let (pos, neg) = (parse_class(pos)?, parse_class(neg)?);
                let bias = parse_real("machine", bias)?;
                let n_sv = parse_count("machine", n_sv)?;
                let coef = cur.reals("coef", n_sv)?;
                let support = (0..n_sv)
                    .map(|_| cur.reals("sv", NUM_FEATURES).map(features_array))
                    .collect::<Result<Vec<_>>>()?;
                machines.push(BinaryMachine {
                    pos,
                    neg,
                    coef,
                    support,
                    bias,
                });
            }
            ModelParams::Svm(SvmParams {
                kernel: Kernel::for_config(&config),
                machines,
            })
        }
        ClassifierKind::Mlp => {
            let sizes = cur
                .expect("mlp_sizes")?
                .iter()
                .map(|t| parse_count("mlp_sizes", t))
                .collect::<Result<Vec<_>>>()?;
            if sizes != super::mlp::architecture(&config.mlp_hidden) {
                return Err(bad("mlp_sizes: does not match mlp_hidden"));
            }
            let flat = cur.reals("params", parameter_count(&sizes))?;
            ModelParams::Mlp(MlpParams { sizes, flat })
        }
        ClassifierKind::Knn => {
            let count = parse_count("knn_points", cur.one("knn_points")?)?;
            let mut points = Vec::with_capacity(count.min(1 << 16));
            let mut labels = Vec::with_capacity(count.min(1 << 16));
            for _ in 0..count {
                let toks = cur.expect("point")?;
                let (label, vals) = toks.split_first().ok_or_else(|| bad("point: empty line"))?;
                labels.push(parse_class(label)?);
                points.push(features_array(parse_reals("point", vals, NUM_FEATURES)?));
            }
            if points.len() < knn_k {
                return Err(bad("knn_points: fewer points than knn_k"));
            }
            ModelParams::Knn(KnnParams { points, labels })
        }
    };
    cur.expect("end")?;
    if let Some((i, line)) = cur.lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(bad(format!("line {}: trailing content {line:?}", i + 1)));
    }
    Ok(TrainedModel {
        config,
        norm,
        params,
        converged,
    })
}
