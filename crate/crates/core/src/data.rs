//! Synthetic classification sets, splitting, mini-batching and delimited-text
//! loading.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Rng, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Tensor,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub name: String,
}

impl Dataset {
    pub fn new(name: impl Into<String>, x: Tensor, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if x.shape().len() != 2 || x.shape()[0] != labels.len() {
            return Err(Error::invalid(format!(
                "features {:?} do not match {} labels",
                x.shape(),
                labels.len()
            )));
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::InvalidLabel { label, num_classes });
        }
        Ok(Self {
            x,
            labels,
            num_classes,
            name: name.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.shape()[1]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.x.data()[i * d..(i + 1) * d]
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let d = self.dim();
        let mut data = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Dataset::new(
            self.name.clone(),
            Tensor::from_vec(&[indices.len(), d], data)?,
            labels,
            self.num_classes,
        )
    }

    /// Per-column mean and standard deviation (population). Zero deviations
    /// are reported as 1 so standardizing never divides by zero.
    pub fn feature_stats(&self) -> (Vec<f64>, Vec<f64>) {
        let (n, d) = (self.len() as f64, self.dim());
        let mut mean = vec![0.0; d];
        for i in 0..self.len() {
            for (m, v) in mean.iter_mut().zip(self.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for i in 0..self.len() {
            for ((s, v), m) in var.iter_mut().zip(self.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        (mean, std)
    }

    pub fn standardized(&self, mean: &[f64], std: &[f64]) -> Result<Self> {
        let d = self.dim();
        if mean.len() != d || std.len() != d {
            return Err(Error::invalid("standardization stats do not match feature count"));
        }
        let data = self
            .x
            .data()
            .iter()
            .enumerate()
            .map(|(i, v)| (v - mean[i % d]) / std[i % d])
            .collect();
        Dataset::new(
            self.name.clone(),
            Tensor::from_vec(self.x.shape(), data)?,
            self.labels.clone(),
            self.num_classes,
        )
    }
}

/// Isotropic unit-variance Gaussian clusters. Class `c` is centred at
/// `separation · (c / d + 1)` along axis `c mod d`, which keeps every pair of
/// centres distinct for any `d ≥ 1` once `separation > 0`. Samples come out
/// grouped by class.
pub fn make_blobs(num_classes: usize, per_class: usize, d: usize, separation: f64, seed: u64) -> Result<Dataset> {
    if num_classes < 1 || per_class < 1 || d < 1 {
        return Err(Error::invalid("blobs need num_classes, per_class and d >= 1"));
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(Error::invalid(format!("separation must be >= 0, got {separation}")));
    }
    let mut rng = Rng::new(seed);
    let n = num_classes * per_class;
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for c in 0..num_classes {
        let mut centre = vec![0.0; d];
        centre[c % d] = separation * ((c / d) as f64 + 1.0);
        for _ in 0..per_class {
            data.extend(centre.iter().map(|&mu| mu + rng.standard_normal()));
            labels.push(c);
        }
    }
    Dataset::new("blobs", Tensor::from_vec(&[n, d], data)?, labels, num_classes.max(2))
}

fn linspace_pi(count: usize) -> impl Iterator<Item = f64> {
    (0..count).map(move |i| {
        if count == 1 {
            0.0
        } else {
            PI * i as f64 / (count - 1) as f64
        }
    })
}

/// Two interleaved half-circles of radius 1: class 0 on the upper arc centred
/// at (0, 0), class 1 on the lower arc centred at (1, 0.5). Gaussian noise of
/// std `noise` is added to both coordinates.
pub fn make_two_moons(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::invalid("two moons needs n >= 2"));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::invalid(format!("noise must be >= 0, got {noise}")));
    }
    let outer = n / 2;
    let inner = n - outer;
    let mut rng = Rng::new(seed);
    let mut data = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for t in linspace_pi(outer) {
        data.push(t.cos());
        data.push(t.sin());
        labels.push(0);
    }
    for t in linspace_pi(inner) {
        data.push(1.0 - t.cos());
        data.push(0.5 - t.sin());
        labels.push(1);
    }
    if noise > 0.0 {
        data.iter_mut().for_each(|v| *v += noise * rng.standard_normal());
    }
    Dataset::new("two_moons", Tensor::from_vec(&[n, 2], data)?, labels, 2)
}

/// Index partition for [`split`]: `(train, test)`, each sorted ascending.
pub fn split_indices(n: usize, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "test fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let n_test = (n as f64 * test_fraction).round() as usize;
    if n_test == 0 || n_test >= n {
        return Err(Error::invalid(format!(
            "test fraction {test_fraction} of {n} samples leaves an empty split"
        )));
    }
    let perm = Rng::new(seed).permutation(n);
    let mut test = perm[..n_test].to_vec();
    let mut train = perm[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

pub fn split(dataset: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(dataset.len(), test_fraction, seed)?;
    Ok((dataset.subset(&train)?, dataset.subset(&test)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchPlan {
    pub batch_size: usize,
    pub shuffle_seed: u64,
    #[serde(default)]
    pub drop_last: bool,
}

impl BatchPlan {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("batch_size must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub indices: Vec<usize>,
    pub x: Tensor,
    pub labels: Vec<usize>,
}

/// Permutation of `0..n` for `epoch`; a pure function of `(shuffle_seed, epoch)`.
pub fn epoch_order(n: usize, shuffle_seed: u64, epoch: usize) -> Vec<usize> {
    Rng::derived(shuffle_seed, epoch as u64).permutation(n)
}

pub fn batches(dataset: &Dataset, plan: &BatchPlan, epoch: usize) -> Result<Vec<Batch>> {
    plan.validate()?;
    let order = epoch_order(dataset.len(), plan.shuffle_seed, epoch);
    order
        .chunks(plan.batch_size)
        .filter(|c| !plan.drop_last || c.len() == plan.batch_size)
        .map(|chunk| {
            let sub = dataset.subset(chunk)?;
            Ok(Batch {
                indices: chunk.to_vec(),
                x: sub.x,
                labels: sub.labels,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelimitedOptions {
    pub delimiter: u8,
    /// Column holding the integer label; `None` means the last column.
    pub label_column: Option<usize>,
    pub skip_header: bool,
}

impl Default for DelimitedOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            label_column: None,
            skip_header: false,
        }
    }
}

pub fn load_delimited(path: &Path, opts: &DelimitedOptions) -> Result<Dataset> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_owned(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(opts.skip_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => parse_err(0, format!("{other:?}")),
        })?;

    let mut width = None;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let cols = record.len();
        match width {
            None => {
                if cols < 2 {
                    return Err(parse_err(line, "need at least one feature and a label column".into()));
                }
                width = Some(cols);
            }
            Some(w) if w != cols => {
                return Err(parse_err(line, format!("expected {w} columns, found {cols}")));
            }
            _ => {}
        }
        let label_col = opts.label_column.unwrap_or(cols - 1);
        if label_col >= cols {
            return Err(parse_err(line, format!("label column {label_col} out of range")));
        }
        for (j, field) in record.iter().enumerate() {
            if j == label_col {
                let label: usize = field
                    .parse()
                    .map_err(|_| parse_err(line, format!("label `{field}` is not a nonnegative integer")))?;
                labels.push(label);
            } else {
                let v: f64 = field
                    .parse()
                    .map_err(|_| parse_err(line, format!("feature `{field}` is not a number")))?;
                if !v.is_finite() {
                    return Err(parse_err(line, format!("feature `{field}` is not finite")));
                }
                features.push(v);
            }
        }
    }
    let Some(width) = width else {
        return Err(parse_err(1, "no data rows".into()));
    };
    let n = labels.len();
    let num_classes = labels.iter().max().map_or(0, |m| m + 1).max(2);
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "file".into());
    Dataset::new(name, Tensor::from_vec(&[n, width - 1], features)?, labels, num_classes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn blobs_are_deterministic_and_cover_every_class() {
        let a = make_blobs(3, 20, 2, 5.0, 11).unwrap();
        assert_eq!(a, make_blobs(3, 20, 2, 5.0, 11).unwrap());
        assert_ne!(a, make_blobs(3, 20, 2, 5.0, 12).unwrap());
        assert_eq!(a.len(), 60);
        assert!((0..3).all(|c| a.labels.contains(&c)));
    }

    #[test]
    fn blob_centres_are_distinct() {
        // means of each class should sit near distinct centres
        let ds = make_blobs(4, 400, 2, 10.0, 3).unwrap();
        let mut centres = Vec::new();
        for c in 0..4 {
            let rows: Vec<&[f64]> = (0..ds.len()).filter(|&i| ds.labels[i] == c).map(|i| ds.row(i)).collect();
            let mean: Vec<f64> = (0..2)
                .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / rows.len() as f64)
                .collect();
            centres.push(mean);
        }
        for i in 0..4 {
            for j in 0..i {
                let dist = ((centres[i][0] - centres[j][0]).powi(2) + (centres[i][1] - centres[j][1]).powi(2)).sqrt();
                assert!(dist > 5.0, "classes {i} and {j} too close: {dist}");
            }
        }
    }

    #[test]
    fn noiseless_moons_lie_on_unit_arcs() {
        let ds = make_two_moons(101, 0.0, 1).unwrap();
        for i in 0..ds.len() {
            let r = ds.row(i);
            let (cx, cy) = if ds.labels[i] == 0 { (0.0, 0.0) } else { (1.0, 0.5) };
            let radius = ((r[0] - cx).powi(2) + (r[1] - cy).powi(2)).sqrt();
            assert!((radius - 1.0).abs() <= 1e-12);
        }
        let two = make_two_moons(2, 0.3, 1).unwrap();
        assert_eq!(two.labels, vec![0, 1]);
        assert_eq!(make_two_moons(50, 0.1, 4).unwrap(), make_two_moons(50, 0.1, 4).unwrap());
    }

    #[test]
    fn split_examples() {
        let ds = make_blobs(2, 5, 1, 1.0, 0).unwrap();
        let (train, test) = split(&ds, 0.2, 7).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));

        let (tr, te) = split_indices(10, 0.2, 7).unwrap();
        let mut all: Vec<usize> = tr.iter().chain(&te).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert!(tr.iter().all(|i| !te.contains(i)));
        assert_eq!((tr.clone(), te.clone()), split_indices(10, 0.2, 7).unwrap());

        assert!(split(&ds, 0.01, 1).is_err());
        assert!(split(&ds, 0.99, 1).is_err());
        assert!(split(&ds, 1.0, 1).is_err());
    }

    #[test]
    fn batch_examples() {
        let ds = make_blobs(2, 5, 1, 1.0, 0).unwrap();
        let plan = BatchPlan {
            batch_size: 3,
            shuffle_seed: 42,
            drop_last: false,
        };
        let b0 = batches(&ds, &plan, 0).unwrap();
        assert_eq!(b0.iter().map(|b| b.labels.len()).collect::<Vec<_>>(), vec![3, 3, 3, 1]);
        assert_eq!(b0, batches(&ds, &plan, 0).unwrap());
        let b1 = batches(&ds, &plan, 1).unwrap();
        assert_ne!(
            b0.iter().flat_map(|b| b.indices.clone()).collect::<Vec<_>>(),
            b1.iter().flat_map(|b| b.indices.clone()).collect::<Vec<_>>()
        );
        let mut seen: Vec<usize> = b1.iter().flat_map(|b| b.indices.clone()).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());

        let dropped = batches(&ds, &BatchPlan { drop_last: true, ..plan }, 0).unwrap();
        assert_eq!(dropped.len(), 3);
        // batch rows line up with the source rows
        for b in &b0 {
            for (r, &i) in b.indices.iter().enumerate() {
                assert_eq!(&b.x.data()[r..r + 1], ds.row(i));
                assert_eq!(b.labels[r], ds.labels[i]);
            }
        }
    }

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_delimited_examples() {
        let f = write_tmp("1.0,2.0,0\n3.0,4.0,1\n5.0,6.0,1\n");
        let ds = load_delimited(f.path(), &DelimitedOptions::default()).unwrap();
        assert_eq!((ds.len(), ds.dim(), ds.num_classes), (3, 2, 2));
        assert_eq!(ds.row(2), &[5.0, 6.0]);

        let f = write_tmp("");
        assert!(matches!(
            load_delimited(f.path(), &DelimitedOptions::default()),
            Err(Error::Parse { .. })
        ));

        let f = write_tmp("1.0,2.0,0\n3.0,4.0,2.5\n");
        match load_delimited(f.path(), &DelimitedOptions::default()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }

        let f = write_tmp("1.0,2.0,0\n3.0,1\n");
        match load_delimited(f.path(), &DelimitedOptions::default()) {
            Err(e @ Error::Parse { line: 2, .. }) => assert!(e.to_string().contains("line 2")),
            other => panic!("expected ragged-row error, got {other:?}"),
        }

        assert!(matches!(
            load_delimited(Path::new("/definitely/not/here.csv"), &DelimitedOptions::default()),
            Err(Error::Io(_))
        ));
    }

    #[test]
    fn load_delimited_options() {
        let f = write_tmp("label;a;b\n2;0.5;1.5\n0;1;2\n");
        let opts = DelimitedOptions {
            delimiter: b';',
            label_column: Some(0),
            skip_header: true,
        };
        let ds = load_delimited(f.path(), &opts).unwrap();
        assert_eq!(ds.labels, vec![2, 0]);
        assert_eq!(ds.num_classes, 3);
        assert_eq!(ds.row(0), &[0.5, 1.5]);
    }

    #[test]
    fn standardization_uses_given_stats() {
        let ds = make_blobs(2, 50, 3, 4.0, 1).unwrap();
        let (mean, std) = ds.feature_stats();
        let z = ds.standardized(&mean, &std).unwrap();
        let (m2, s2) = z.feature_stats();
        assert!(m2.iter().all(|m| m.abs() < 1e-12));
        assert!(s2.iter().all(|s| (s - 1.0).abs() < 1e-12));
    }
}
