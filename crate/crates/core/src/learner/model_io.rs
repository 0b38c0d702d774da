//! Versioned text serialization for trained models.
//!
//! Every file starts with `beamscope-model v1` and a `kind` line; numeric
//! blocks are written in decimal with 17 significant digits, so reloading a
//! model reproduces its predictions bit-exactly. The MLP kind carries its
//! feature/target scaler; tree kinds store their node lists; the boosted
//! ensemble stores base, shrinkage and stage trees (its training-MSE trace
//! is a fit artifact and is not persisted).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::linreg::LinearModel;
use super::mlp::{Activation, DenseLayer, Mlp, INPUT_DIM};
use super::tree::{Forest, Gbrt, RegressionTree, TreeNode};
use super::{LearnerError, Scaler};

pub const MODEL_FORMAT_VERSION: &str = "beamscope-model v1";

/// A fitted predictor of any supported kind, ready for prediction on raw
/// `[alpha_deg, beta_deg, distance_ft]` inputs.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Mlp { mlp: Mlp, scaler: Scaler },
    Linreg(LinearModel),
    Tree(RegressionTree),
    Forest(Forest),
    Gbrt(Gbrt),
}

impl TrainedModel {
    pub fn predict(&self, x: &[f64; INPUT_DIM]) -> f64 {
        match self {
            TrainedModel::Mlp { mlp, scaler } => {
                scaler.unscale_target(mlp.forward(&scaler.scale_features(x)))
            }
            TrainedModel::Linreg(m) => m.predict(x),
            TrainedModel::Tree(t) => t.predict(x),
            TrainedModel::Forest(f) => f.predict(x),
            TrainedModel::Gbrt(g) => g.predict(x),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            TrainedModel::Mlp { .. } => "mlp",
            TrainedModel::Linreg(_) => "linreg",
            TrainedModel::Tree(_) => "tree",
            TrainedModel::Forest(_) => "forest",
            TrainedModel::Gbrt(_) => "gbrt",
        }
    }
}

fn fm(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_nums(out: &mut String, label: &str, values: &[f64]) {
    out.push_str(label);
    for v in values {
        let _ = write!(out, " {}", fm(*v));
    }
    out.push('\n');
}

fn write_tree(out: &mut String, tree: &RegressionTree) {
    let _ = writeln!(out, "nodes {}", tree.nodes.len());
    for node in &tree.nodes {
        match node {
            TreeNode::Leaf { value } => {
                let _ = writeln!(out, "leaf {}", fm(*value));
            }
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                let _ = writeln!(out, "split {feature} {} {left} {right}", fm(*threshold));
            }
        }
    }
}

pub fn model_to_string(model: &TrainedModel) -> String {
    let mut out = format!("{MODEL_FORMAT_VERSION}\nkind {}\n", model.kind());
    match model {
        TrainedModel::Mlp { mlp, scaler } => {
            write_nums(&mut out, "feature_mean", &scaler.feature_mean);
            write_nums(&mut out, "feature_std", &scaler.feature_std);
            write_nums(&mut out, "target", &[scaler.target_mean, scaler.target_std]);
            let _ = writeln!(out, "layers {}", mlp.layers.len());
            for layer in &mlp.layers {
                let _ = writeln!(
                    out,
                    "layer {} {} {}",
                    layer.in_dim,
                    layer.out_dim,
                    layer.activation.as_str()
                );
                for row in 0..layer.out_dim {
                    write_nums(
                        &mut out,
                        "w",
                        &layer.weights[row * layer.in_dim..(row + 1) * layer.in_dim],
                    );
                }
                write_nums(&mut out, "b", &layer.biases);
            }
        }
        TrainedModel::Linreg(m) => {
            write_nums(&mut out, "weights", &m.weights);
            write_nums(&mut out, "intercept", &[m.intercept]);
        }
        TrainedModel::Tree(t) => write_tree(&mut out, t),
        TrainedModel::Forest(f) => {
            let _ = writeln!(out, "trees {}", f.trees.len());
            for t in &f.trees {
                write_tree(&mut out, t);
            }
        }
        TrainedModel::Gbrt(g) => {
            let _ = writeln!(out, "base {}", fm(g.base));
            let _ = writeln!(out, "learning_rate {}", fm(g.learning_rate));
            let _ = writeln!(out, "trees {}", g.trees.len());
            for t in &g.trees {
                write_tree(&mut out, t);
            }
        }
    }
    out
}

// ── parsing ─────────────────────────────────────────────────────────────────

struct Cursor<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        Cursor {
            lines: text.lines().enumerate(),
            line: 0,
        }
    }

    fn err(&self, msg: impl Into<String>) -> LearnerError {
        LearnerError::ModelFormat {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn next_line(&mut self) -> Result<&'a str, LearnerError> {
        for (idx, raw) in self.lines.by_ref() {
            self.line = idx + 1;
            let text = raw.trim();
            if !text.is_empty() {
                return Ok(text);
            }
        }
        self.line += 1;
        Err(self.err("unexpected end of file"))
    }

    /// Expect `label v0 v1 …` with exactly `count` numeric fields.
    fn nums(&mut self, label: &str, count: usize) -> Result<Vec<f64>, LearnerError> {
        let line = self.next_line()?;
        let mut parts = line.split_whitespace();
        let got = parts.next().unwrap_or("");
        if got != label {
            return Err(self.err(format!("expected {label:?}, found {got:?}")));
        }
        let values: Result<Vec<f64>, _> = parts.map(str::parse::<f64>).collect();
        let values = values.map_err(|e| self.err(format!("bad number: {e}")))?;
        if values.len() != count {
            return Err(self.err(format!(
                "{label}: expected {count} values, found {}",
                values.len()
            )));
        }
        Ok(values)
    }

    fn counted(&mut self, label: &str) -> Result<usize, LearnerError> {
        let line = self.next_line()?;
        match line.split_whitespace().collect::<Vec<_>>()[..] {
            [l, n] if l == label => n.parse().map_err(|_| self.err(format!("bad {label} count"))),
            _ => Err(self.err(format!("expected \"{label} <count>\", found {line:?}"))),
        }
    }
}

fn parse_tree(cursor: &mut Cursor) -> Result<RegressionTree, LearnerError> {
    let n = cursor.counted("nodes")?;
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        let line = cursor.next_line()?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts[..] {
            ["leaf", v] => nodes.push(TreeNode::Leaf {
                value: v.parse().map_err(|_| cursor.err("bad leaf value"))?,
            }),
            ["split", f, t, l, r] => nodes.push(TreeNode::Split {
                feature: f.parse().map_err(|_| cursor.err("bad split feature"))?,
                threshold: t.parse().map_err(|_| cursor.err("bad split threshold"))?,
                left: l.parse().map_err(|_| cursor.err("bad split child"))?,
                right: r.parse().map_err(|_| cursor.err("bad split child"))?,
            }),
            _ => return Err(cursor.err(format!("bad tree node {line:?}"))),
        }
    }
    let tree = RegressionTree { nodes };
    // child indices must stay inside the node list
    for node in &tree.nodes {
        if let TreeNode::Split { left, right, feature, .. } = node {
            if *left >= tree.nodes.len() || *right >= tree.nodes.len() || *feature >= INPUT_DIM {
                return Err(cursor.err("tree node references out of range"));
            }
        }
    }
    if tree.nodes.is_empty() {
        return Err(cursor.err("tree has no nodes"));
    }
    Ok(tree)
}

pub fn model_from_str(text: &str) -> Result<TrainedModel, LearnerError> {
    let mut cursor = Cursor::new(text);
    let version = cursor.next_line()?;
    if version != MODEL_FORMAT_VERSION {
        return Err(LearnerError::VersionMismatch(version.to_string()));
    }
    let kind_line = cursor.next_line()?;
    let kind = match kind_line.split_whitespace().collect::<Vec<_>>()[..] {
        ["kind", k] => k,
        _ => return Err(cursor.err(format!("expected \"kind <name>\", found {kind_line:?}"))),
    };
    match kind {
        "mlp" => {
            let fmean = cursor.nums("feature_mean", INPUT_DIM)?;
            let fstd = cursor.nums("feature_std", INPUT_DIM)?;
            let target = cursor.nums("target", 2)?;
            let scaler = Scaler {
                feature_mean: [fmean[0], fmean[1], fmean[2]],
                feature_std: [fstd[0], fstd[1], fstd[2]],
                target_mean: target[0],
                target_std: target[1],
            };
            let n_layers = cursor.counted("layers")?;
            let mut layers = Vec::with_capacity(n_layers);
            let mut expected_in = INPUT_DIM;
            for _ in 0..n_layers {
                let header = cursor.next_line()?;
                let (in_dim, out_dim, activation) =
                    match header.split_whitespace().collect::<Vec<_>>()[..] {
                        ["layer", i, o, a] => {
                            let in_dim: usize =
                                i.parse().map_err(|_| cursor.err("bad layer in_dim"))?;
                            let out_dim: usize =
                                o.parse().map_err(|_| cursor.err("bad layer out_dim"))?;
                            let act = Activation::parse(a)
                                .ok_or_else(|| cursor.err(format!("unknown activation {a:?}")))?;
                            (in_dim, out_dim, act)
                        }
                        _ => return Err(cursor.err(format!("bad layer header {header:?}"))),
                    };
                if in_dim != expected_in || out_dim == 0 {
                    return Err(cursor.err(format!(
                        "layer dimensions do not chain: expected in {expected_in}, got {in_dim}"
                    )));
                }
                let mut weights = Vec::with_capacity(in_dim * out_dim);
                for _ in 0..out_dim {
                    weights.extend(cursor.nums("w", in_dim)?);
                }
                let biases = cursor.nums("b", out_dim)?;
                layers.push(DenseLayer {
                    in_dim,
                    out_dim,
                    weights,
                    biases,
                    activation,
                });
                expected_in = out_dim;
            }
            if expected_in != 1 {
                return Err(cursor.err("network must end in a width-1 layer"));
            }
            Ok(TrainedModel::Mlp {
                mlp: Mlp { layers },
                scaler,
            })
        }
        "linreg" => {
            let w = cursor.nums("weights", INPUT_DIM)?;
            let intercept = cursor.nums("intercept", 1)?[0];
            Ok(TrainedModel::Linreg(LinearModel {
                weights: [w[0], w[1], w[2]],
                intercept,
            }))
        }
        "tree" => Ok(TrainedModel::Tree(parse_tree(&mut cursor)?)),
        "forest" => {
            let n = cursor.counted("trees")?;
            let mut trees = Vec::with_capacity(n);
            for _ in 0..n {
                trees.push(parse_tree(&mut cursor)?);
            }
            if trees.is_empty() {
                return Err(cursor.err("forest has no trees"));
            }
            Ok(TrainedModel::Forest(Forest { trees }))
        }
        "gbrt" => {
            let base = cursor.nums("base", 1)?[0];
            let learning_rate = cursor.nums("learning_rate", 1)?[0];
            let n = cursor.counted("trees")?;
            let mut trees = Vec::with_capacity(n);
            for _ in 0..n {
                trees.push(parse_tree(&mut cursor)?);
            }
            Ok(TrainedModel::Gbrt(Gbrt {
                base,
                learning_rate,
                trees,
                train_mse_per_stage: Vec::new(),
            }))
        }
        other => Err(cursor.err(format!("unknown model kind {other:?}"))),
    }
}

pub fn write_model(model: &TrainedModel, path: &Path) -> Result<(), LearnerError> {
    Ok(fs::write(path, model_to_string(model))?)
}

pub fn read_model(path: &Path) -> Result<TrainedModel, LearnerError> {
    model_from_str(&fs::read_to_string(path)?)
}

// ── tests ───────────────────────────────────────────────────────────────────
