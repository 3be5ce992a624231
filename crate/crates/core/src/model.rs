//! Small differentiable classifiers with hand-written backprop.
//!
//! `logreg` is a single affine map; `mlp` is affine → tanh → affine. Weight
//! matrices are stored `[fan_in, fan_out]` so that `logits = x·W + b` for a
//! row-major batch `x` of shape `[batch, input_dim]`. The loss is softmax
//! cross-entropy averaged over the batch.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Rng, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Logreg,
    Mlp,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Logreg => "logreg",
            ModelKind::Mlp => "mlp",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub input_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden_dim: Option<usize>,
    pub num_classes: usize,
    pub init_seed: u64,
    pub init_scale: f64,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::config("input_dim must be >= 1"));
        }
        if self.num_classes < 2 {
            return Err(Error::config("num_classes must be >= 2"));
        }
        if self.kind == ModelKind::Mlp && self.hidden_dim.unwrap_or(0) == 0 {
            return Err(Error::config("mlp needs hidden_dim >= 1"));
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return Err(Error::config("init_scale must be >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamBlock {
    pub name: String,
    pub value: Tensor,
}

/// Ordered, uniquely named parameter blocks. Gradients use the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    kind: ModelKind,
    blocks: Vec<ParamBlock>,
}

/// Mean mini-batch gradients, block-for-block aligned with [`ModelParams`].
pub type BatchGrads = ModelParams;

impl ModelParams {
    pub fn new(kind: ModelKind, blocks: Vec<ParamBlock>) -> Result<Self> {
        for (i, b) in blocks.iter().enumerate() {
            if blocks[..i].iter().any(|o| o.name == b.name) {
                return Err(Error::invalid(format!("duplicate block name `{}`", b.name)));
            }
        }
        Ok(Self { kind, blocks })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn blocks(&self) -> &[ParamBlock] {
        &self.blocks
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.blocks.iter().find(|b| b.name == name).map(|b| &b.value)
    }

    pub fn num_params(&self) -> usize {
        self.blocks.iter().map(|b| b.value.len()).sum()
    }

    /// Same names and kind, new values.
    pub fn with_values(&self, values: Vec<Tensor>) -> Result<Self> {
        if values.len() != self.blocks.len() {
            return Err(Error::invalid("block count mismatch"));
        }
        let blocks = self
            .blocks
            .iter()
            .zip(values)
            .map(|(b, value)| {
                b.value.same_shape(&value)?;
                Ok(ParamBlock {
                    name: b.name.clone(),
                    value,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            kind: self.kind,
            blocks,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.blocks.iter().all(|b| b.value.is_finite())
    }

    fn block(&self, name: &str) -> Result<&Tensor> {
        self.get(name)
            .ok_or_else(|| Error::invalid(format!("{} model is missing block `{name}`", self.kind)))
    }

    fn input_dim(&self) -> Result<usize> {
        let w = match self.kind {
            ModelKind::Logreg => self.block("W")?,
            ModelKind::Mlp => self.block("W1")?,
        };
        Ok(w.shape()[0])
    }
}

pub fn init_params(spec: &ModelSpec) -> Result<ModelParams> {
    spec.validate()?;
    let mut rng = Rng::new(spec.init_seed);
    let (d, k, s) = (spec.input_dim, spec.num_classes, spec.init_scale);
    let block = |name: &str, value: Tensor| ParamBlock {
        name: name.to_owned(),
        value,
    };
    let blocks = match spec.kind {
        ModelKind::Logreg => vec![
            block("W", rng.normal(&[d, k], 0.0, s)?),
            block("b", Tensor::zeros(&[k])?),
        ],
        ModelKind::Mlp => {
            let h = spec.hidden_dim.unwrap_or(0);
            let w1 = rng.normal(&[d, h], 0.0, s)?;
            let w2 = rng.normal(&[h, k], 0.0, s)?;
            vec![
                block("W1", w1),
                block("b1", Tensor::zeros(&[h])?),
                block("W2", w2),
                block("b2", Tensor::zeros(&[k])?),
            ]
        }
    };
    ModelParams::new(spec.kind, blocks)
}

/// `x·W + b` for row-major `x` `[n, fan_in]` and `W` `[fan_in, fan_out]`.
fn affine(x: &[f64], n: usize, w: &Tensor, b: &Tensor) -> Vec<f64> {
    let (fan_in, fan_out) = (w.shape()[0], w.shape()[1]);
    let (w, b) = (w.data(), b.data());
    let mut out = vec![0.0; n * fan_out];
    for r in 0..n {
        let row = &mut out[r * fan_out..(r + 1) * fan_out];
        row.copy_from_slice(b);
        for (i, &xi) in x[r * fan_in..(r + 1) * fan_in].iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, &wij) in row.iter_mut().zip(&w[i * fan_out..(i + 1) * fan_out]) {
                *o += xi * wij;
            }
        }
    }
    out
}

/// `aᵀ·d` for `a` `[n, p]`, `d` `[n, q]` → `[p, q]`.
fn at_d(a: &[f64], d: &[f64], n: usize, p: usize, q: usize) -> Vec<f64> {
    let mut out = vec![0.0; p * q];
    for r in 0..n {
        let dr = &d[r * q..(r + 1) * q];
        for (i, &ai) in a[r * p..(r + 1) * p].iter().enumerate() {
            for (o, &dj) in out[i * q..(i + 1) * q].iter_mut().zip(dr) {
                *o += ai * dj;
            }
        }
    }
    out
}

fn column_sums(d: &[f64], n: usize, q: usize) -> Vec<f64> {
    let mut out = vec![0.0; q];
    for r in 0..n {
        for (o, &v) in out.iter_mut().zip(&d[r * q..(r + 1) * q]) {
            *o += v;
        }
    }
    out
}

struct Activations {
    batch: usize,
    hidden: Option<Vec<f64>>,
    logits: Vec<f64>,
    num_classes: usize,
}

fn check_input(params: &ModelParams, x: &Tensor) -> Result<usize> {
    let d = params.input_dim()?;
    if x.shape().len() != 2 || x.shape()[1] != d {
        return Err(Error::ShapeMismatch {
            left: x.shape().to_vec(),
            right: vec![x.shape()[0], d],
        });
    }
    Ok(x.shape()[0])
}

fn run_forward(params: &ModelParams, x: &Tensor) -> Result<Activations> {
    let n = check_input(params, x)?;
    Ok(match params.kind {
        ModelKind::Logreg => {
            let (w, b) = (params.block("W")?, params.block("b")?);
            Activations {
                batch: n,
                hidden: None,
                logits: affine(x.data(), n, w, b),
                num_classes: w.shape()[1],
            }
        }
        ModelKind::Mlp => {
            let (w1, b1) = (params.block("W1")?, params.block("b1")?);
            let (w2, b2) = (params.block("W2")?, params.block("b2")?);
            let mut h = affine(x.data(), n, w1, b1);
            h.iter_mut().for_each(|v| *v = v.tanh());
            let logits = affine(&h, n, w2, b2);
            Activations {
                batch: n,
                hidden: Some(h),
                logits,
                num_classes: w2.shape()[1],
            }
        }
    })
}

pub fn forward(params: &ModelParams, x: &Tensor) -> Result<Tensor> {
    let a = run_forward(params, x)?;
    Tensor::from_vec(&[a.batch, a.num_classes], a.logits)
}

/// Row-wise softmax with the row max subtracted first.
pub fn softmax_rows(logits: &[f64], num_classes: usize) -> Vec<f64> {
    let mut out = logits.to_vec();
    for row in out.chunks_mut(num_classes) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v /= sum);
    }
    out
}

/// Mean of `logsumexp(row) − row[label]`.
fn cross_entropy(logits: &[f64], labels: &[usize], num_classes: usize) -> f64 {
    let total: f64 = logits
        .chunks(num_classes)
        .zip(labels)
        .map(|(row, &y)| {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            lse - row[y]
        })
        .sum();
    total / labels.len() as f64
}

fn check_labels(labels: &[usize], batch: usize, num_classes: usize) -> Result<()> {
    if labels.len() != batch {
        return Err(Error::invalid(format!(
            "{} labels for a batch of {batch}",
            labels.len()
        )));
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= num_classes) {
        return Err(Error::InvalidLabel { label, num_classes });
    }
    Ok(())
}

pub fn loss(params: &ModelParams, x: &Tensor, labels: &[usize]) -> Result<f64> {
    let a = run_forward(params, x)?;
    check_labels(labels, a.batch, a.num_classes)?;
    Ok(cross_entropy(&a.logits, labels, a.num_classes))
}

pub fn loss_and_grads(
    params: &ModelParams,
    x: &Tensor,
    labels: &[usize],
) -> Result<(f64, BatchGrads)> {
    let a = run_forward(params, x)?;
    let (n, k) = (a.batch, a.num_classes);
    check_labels(labels, n, k)?;
    let loss = cross_entropy(&a.logits, labels, k);

    // dL/dlogits = (softmax − onehot) / n
    let mut dlogits = softmax_rows(&a.logits, k);
    for (r, &y) in labels.iter().enumerate() {
        dlogits[r * k + y] -= 1.0;
    }
    let inv_n = 1.0 / n as f64;
    dlogits.iter_mut().for_each(|v| *v *= inv_n);

    let values = match params.kind {
        ModelKind::Logreg => {
            let d = x.shape()[1];
            vec![
                Tensor::from_vec(&[d, k], at_d(x.data(), &dlogits, n, d, k))?,
                Tensor::from_vec(&[k], column_sums(&dlogits, n, k))?,
            ]
        }
        ModelKind::Mlp => {
            let d = x.shape()[1];
            let h = a.hidden.expect("mlp forward keeps hidden activations");
            let w2 = params.block("W2")?;
            let hd = w2.shape()[0];
            let dw2 = at_d(&h, &dlogits, n, hd, k);
            let db2 = column_sums(&dlogits, n, k);
            // dpre = (dlogits · W2ᵀ) ⊙ (1 − h²)
            let mut dpre = vec![0.0; n * hd];
            for r in 0..n {
                let dl = &dlogits[r * k..(r + 1) * k];
                for j in 0..hd {
                    let wrow = &w2.data()[j * k..(j + 1) * k];
                    let dh: f64 = wrow.iter().zip(dl).map(|(w, g)| w * g).sum();
                    let hv = h[r * hd + j];
                    dpre[r * hd + j] = dh * (1.0 - hv * hv);
                }
            }
            vec![
                Tensor::from_vec(&[d, hd], at_d(x.data(), &dpre, n, d, hd))?,
                Tensor::from_vec(&[hd], column_sums(&dpre, n, hd))?,
                Tensor::from_vec(&[hd, k], dw2)?,
                Tensor::from_vec(&[k], db2)?,
            ]
        }
    };
    Ok((loss, params.with_values(values)?))
}

/// Largest per-coordinate relative gap between the analytic gradient and a
/// central difference with step `h`: `|a − c| / max(1e-12, |a| + |c|)`.
pub fn grad_check(params: &ModelParams, x: &Tensor, labels: &[usize], h: f64) -> Result<f64> {
    if h.is_nan() || h <= 0.0 {
        return Err(Error::invalid(format!("finite-difference step must be > 0, got {h}")));
    }
    if params.num_params() == 0 {
        return Ok(0.0);
    }
    let (_, grads) = loss_and_grads(params, x, labels)?;
    let mut worst = 0.0f64;
    let mut values: Vec<Tensor> = params.blocks.iter().map(|b| b.value.clone()).collect();
    for (bi, gblock) in grads.blocks.iter().enumerate() {
        for i in 0..gblock.value.len() {
            let orig = values[bi].data()[i];
            let mut eval_at = |theta: f64| -> Result<f64> {
                let mut data = values[bi].data().to_vec();
                data[i] = theta;
                values[bi] = Tensor::from_vec(values[bi].shape(), data)?;
                loss(&params.with_values(values.clone())?, x, labels)
            };
            let plus = eval_at(orig + h)?;
            let minus = eval_at(orig - h)?;
            eval_at(orig)?;
            let numeric = (plus - minus) / (2.0 * h);
            let analytic = gblock.value.data()[i];
            let rel = (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-12);
            worst = worst.max(rel);
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    /// `(k, error@k)` in the order the ks were requested.
    pub errors: Vec<(usize, f64)>,
}

impl Evaluation {
    pub fn error_at(&self, k: usize) -> Option<f64> {
        self.errors.iter().find(|(kk, _)| *kk == k).map(|(_, e)| *e)
    }
}

/// Rank of the true class among the logits, counting ties with a lower class
/// index as ahead of it. The label is in the top-k iff `rank < k`.
fn label_rank(row: &[f64], y: usize) -> usize {
    let target = row[y];
    row.iter()
        .enumerate()
        .filter(|&(j, &v)| v > target || (v == target && j < y))
        .count()
}

pub fn top_k_errors(logits: &[f64], labels: &[usize], num_classes: usize, ks: &[usize]) -> Result<Vec<(usize, f64)>> {
    if let Some(&k) = ks.iter().find(|&&k| k == 0 || k > num_classes) {
        return Err(Error::invalid(format!(
            "top-k needs k in [1, {num_classes}], got {k}"
        )));
    }
    let ranks: Vec<usize> = logits
        .chunks(num_classes)
        .zip(labels)
        .map(|(row, &y)| label_rank(row, y))
        .collect();
    let n = labels.len() as f64;
    Ok(ks
        .iter()
        .map(|&k| (k, ranks.iter().filter(|&&r| r >= k).count() as f64 / n))
        .collect())
}

pub fn evaluate(params: &ModelParams, x: &Tensor, labels: &[usize], ks: &[usize]) -> Result<Evaluation> {
    let a = run_forward(params, x)?;
    check_labels(labels, a.batch, a.num_classes)?;
    let errors = top_k_errors(&a.logits, labels, a.num_classes, ks)?;
    Ok(Evaluation {
        loss: cross_entropy(&a.logits, labels, a.num_classes),
        errors,
    })
}
