//! Dataset representation and ingestion.
//!
//! Two on-disk formats are understood:
//!
//! ```text
//! # multilabel-svm: <label[,label...]> <idx>:<val> ...
//! 1,2 1:0.6 2:0.8
//! 2 1:1.0
//!  1:0.3 3:0.1        <- leading space: empty label set
//! ```
//!
//! and a dense CSV whose header names the label columns `label_1..label_K`
//! (0/1 indicators) followed by the feature columns `f_1..f_m`.
//!
//! Every feature vector is scaled to unit L2 norm on the way in. Instance ids
//! are 0-based positions in the file; label ids are 1-based.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SmlError};

/// A feature vector with unit L2 norm.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for FeatureVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Scales `raw` to unit L2 norm.
pub fn normalize(raw: &[f64]) -> Result<FeatureVector> {
    let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(SmlError::ZeroNorm { instance: 0 });
    }
    Ok(FeatureVector(raw.iter().map(|v| v / norm).collect()))
}

/// A set of 1-based label ids, kept sorted and deduplicated.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct LabelSet(Vec<u32>);

impl LabelSet {
    pub fn new<I: IntoIterator<Item = u32>>(labels: I) -> Self {
        let mut v: Vec<u32> = labels.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        LabelSet(v)
    }

    pub fn empty() -> Self {
        LabelSet(Vec::new())
    }

    pub fn contains(&self, label: u32) -> bool {
        self.0.binary_search(&label).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// Labels of `1..=num_labels` not in this set.
    pub fn complement(&self, num_labels: usize) -> LabelSet {
        LabelSet((1..=num_labels as u32).filter(|&k| !self.contains(k)).collect())
    }

    pub fn max_label(&self) -> Option<u32> {
        self.0.last().copied()
    }
}

impl FromIterator<u32> for LabelSet {
    fn from_iter<I: IntoIterator<Item = u32>>(iter: I) -> Self {
        LabelSet::new(iter)
    }
}

impl std::fmt::Display for LabelSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{k}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub features: FeatureVector,
    pub labels: LabelSet,
}

/// An immutable multi-label dataset with its per-label index.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    instances: Vec<Instance>,
    dim: usize,
    num_labels: usize,
    label_index: Vec<Vec<usize>>,
    avg_cardinality: f64,
}

impl TrainingSet {
    /// Builds a dataset over already-normalized instances.
    ///
    /// Fails if any vector's length differs from `dim` or any label falls
    /// outside `1..=num_labels`.
    pub fn new(dim: usize, num_labels: usize, instances: Vec<Instance>) -> Result<Self> {
        for inst in &instances {
            if inst.features.dim() != dim {
                return Err(SmlError::DimensionMismatch {
                    expected: dim,
                    actual: inst.features.dim(),
                });
            }
            if let Some(max) = inst.labels.max_label() {
                if max as usize > num_labels {
                    return Err(SmlError::LabelOutOfRange {
                        label: max as usize,
                        num_labels,
                    });
                }
            }
            if inst.labels.as_slice().first() == Some(&0) {
                return Err(SmlError::LabelOutOfRange {
                    label: 0,
                    num_labels,
                });
            }
        }
        let label_index = build_label_index(&instances, num_labels);
        let avg_cardinality = if instances.is_empty() {
            0.0
        } else {
            instances.iter().map(|i| i.labels.len()).sum::<usize>() as f64 / instances.len() as f64
        };
        Ok(TrainingSet {
            instances,
            dim,
            num_labels,
            label_index,
            avg_cardinality,
        })
    }

    /// Normalizes raw rows and builds the dataset. `num_labels` defaults to
    /// the largest label id present.
    pub fn from_raw(rows: Vec<(Vec<f64>, LabelSet)>, num_labels: Option<usize>) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.0.len());
        let num_labels = num_labels.unwrap_or_else(|| {
            rows.iter()
                .filter_map(|r| r.1.max_label())
                .max()
                .unwrap_or(0) as usize
        });
        let instances = rows
            .into_iter()
            .enumerate()
            .map(|(i, (raw, labels))| {
                if raw.len() != dim {
                    return Err(SmlError::DimensionMismatch {
                        expected: dim,
                        actual: raw.len(),
                    });
                }
                let features = normalize(&raw).map_err(|_| SmlError::ZeroNorm { instance: i })?;
                Ok(Instance { features, labels })
            })
            .collect::<Result<Vec<_>>>()?;
        TrainingSet::new(dim, num_labels, instances)
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn avg_cardinality(&self) -> f64 {
        self.avg_cardinality
    }

    pub fn features(&self, id: usize) -> &FeatureVector {
        &self.instances[id].features
    }

    pub fn labels(&self, id: usize) -> &LabelSet {
        &self.instances[id].labels
    }

    /// Ids of the instances carrying label `k`, ascending.
    pub fn label_subset(&self, k: usize) -> Result<&[usize]> {
        if k == 0 || k > self.num_labels {
            return Err(SmlError::LabelOutOfRange {
                label: k,
                num_labels: self.num_labels,
            });
        }
        Ok(&self.label_index[k - 1])
    }

    /// The whole per-label index; entry `k - 1` holds the ids for label `k`.
    pub fn label_index(&self) -> &[Vec<usize>] {
        &self.label_index
    }

    /// A new dataset made of the given instances, in the given order. The
    /// label space is kept.
    pub fn subset(&self, ids: &[usize]) -> TrainingSet {
        let instances: Vec<Instance> = ids.iter().map(|&i| self.instances[i].clone()).collect();
        TrainingSet::new(self.dim, self.num_labels, instances)
            .expect("subset of a valid training set is valid")
    }

    /// Appends zero features up to `dim`. Sparse files leave trailing zero
    /// features implicit, so a file can parse narrower than its siblings.
    pub fn pad_to_dim(&self, dim: usize) -> Result<TrainingSet> {
        if dim < self.dim {
            return Err(SmlError::DimensionMismatch {
                expected: dim,
                actual: self.dim,
            });
        }
        let instances = self
            .instances
            .iter()
            .map(|inst| {
                let mut values = inst.features.as_slice().to_vec();
                values.resize(dim, 0.0);
                Instance {
                    features: FeatureVector(values),
                    labels: inst.labels.clone(),
                }
            })
            .collect();
        TrainingSet::new(dim, self.num_labels, instances)
    }
}

fn build_label_index(instances: &[Instance], num_labels: usize) -> Vec<Vec<usize>> {
    let mut index = vec![Vec::new(); num_labels];
    for (id, inst) in instances.iter().enumerate() {
        for k in inst.labels.iter() {
            index[k as usize - 1].push(id);
        }
    }
    index
}

/// Supported dataset file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataFormat {
    MultilabelSvm,
    Csv,
}

impl FromStr for DataFormat {
    type Err = SmlError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multilabel-svm" | "svm" => Ok(DataFormat::MultilabelSvm),
            "csv" => Ok(DataFormat::Csv),
            other => Err(SmlError::InvalidConfig(format!("unknown data format '{other}'"))),
        }
    }
}

impl std::fmt::Display for DataFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DataFormat::MultilabelSvm => "multilabel-svm",
            DataFormat::Csv => "csv",
        })
    }
}

pub fn load_dataset(path: impl AsRef<Path>, format: DataFormat) -> Result<TrainingSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| SmlError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset(&text, format)
}

pub fn parse_dataset(text: &str, format: DataFormat) -> Result<TrainingSet> {
    match format {
        DataFormat::MultilabelSvm => parse_multilabel_svm(text),
        DataFormat::Csv => parse_csv(text),
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> SmlError {
    SmlError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_multilabel_svm(text: &str) -> Result<TrainingSet> {
    let mut sparse_rows: Vec<(Vec<(usize, f64)>, LabelSet)> = Vec::new();
    let mut dim = 0usize;

    for (lineno, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l)) {
        let line = line.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let instance = sparse_rows.len();
        let mut tokens = line.split_whitespace();
        let labels = if line.starts_with(char::is_whitespace) {
            LabelSet::empty()
        } else {
            let field = tokens.next().unwrap_or("");
            parse_label_field(field, lineno, instance)?
        };

        let mut features = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("expected <idx>:<val>, found '{tok}'")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad feature index '{idx}'")))?;
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad feature value '{val}'")))?;
            if idx == 0 {
                return Err(parse_err(lineno, "feature indices start at 1"));
            }
            if idx <= last {
                return Err(parse_err(lineno, "feature indices must be strictly ascending"));
            }
            if !val.is_finite() {
                return Err(parse_err(lineno, format!("non-finite feature value '{val}'")));
            }
            last = idx;
            features.push((idx, val));
        }
        dim = dim.max(last);
        sparse_rows.push((features, labels));
    }

    if sparse_rows.is_empty() {
        return Err(parse_err(0, "no instances"));
    }

    let rows = sparse_rows
        .into_iter()
        .map(|(sparse, labels)| {
            let mut dense = vec![0.0; dim];
            for (idx, val) in sparse {
                dense[idx - 1] = val;
            }
            (dense, labels)
        })
        .collect();
    TrainingSet::from_raw(rows, None)
}

fn parse_label_field(field: &str, lineno: usize, instance: usize) -> Result<LabelSet> {
    let mut labels = Vec::new();
    for tok in field.split(',').filter(|t| !t.is_empty()) {
        let label: i64 = tok
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad label '{tok}'")))?;
        if label < 1 {
            return Err(SmlError::InvalidLabel { instance, label });
        }
        labels.push(u32::try_from(label).map_err(|_| SmlError::InvalidLabel { instance, label })?);
    }
    Ok(LabelSet::new(labels))
}

fn parse_csv(text: &str) -> Result<TrainingSet> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| parse_err(0, "no instances"))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let num_labels = columns.iter().take_while(|c| c.starts_with("label_")).count();
    let dim = columns.len() - num_labels;
    if columns[num_labels..].iter().any(|c| !c.starts_with("f_")) {
        return Err(parse_err(1, "header must be label_1..label_K followed by f_1..f_m"));
    }
    if dim == 0 {
        return Err(parse_err(1, "header declares no feature columns"));
    }

    let mut rows = Vec::new();
    for (lineno, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != columns.len() {
            return Err(parse_err(
                lineno,
                format!("expected {} fields, found {}", columns.len(), fields.len()),
            ));
        }
        let mut labels = Vec::new();
        for (k, f) in fields[..num_labels].iter().enumerate() {
            match *f {
                "0" => {}
                "1" => labels.push(k as u32 + 1),
                other => return Err(parse_err(lineno, format!("label column must be 0 or 1, found '{other}'"))),
            }
        }
        let features = fields[num_labels..]
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(lineno, format!("bad feature value '{f}'")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push((features, LabelSet::new(labels)));
    }
    if rows.is_empty() {
        return Err(parse_err(0, "no instances"));
    }
    TrainingSet::from_raw(rows, Some(num_labels))
}

/// Assignment of instance ids to cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    fold_count: usize,
    assignment: Vec<usize>,
    seed: u64,
}

impl FoldPlan {
    /// Shuffles `0..n` with the seeded generator and deals the ids round-robin.
    pub fn new(n: usize, fold_count: usize, seed: u64) -> Result<Self> {
        if fold_count < 2 || fold_count > n {
            return Err(SmlError::FoldCount {
                folds: fold_count,
                instances: n,
            });
        }
        let mut ids: Vec<usize> = (0..n).collect();
        ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut assignment = vec![0; n];
        for (pos, id) in ids.into_iter().enumerate() {
            assignment[id] = pos % fold_count;
        }
        Ok(FoldPlan {
            fold_count,
            assignment,
            seed,
        })
    }

    pub fn fold_count(&self) -> usize {
        self.fold_count
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn fold_of(&self, id: usize) -> usize {
        self.assignment[id]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Held-out ids of `fold`, ascending.
    pub fn test_ids(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == fold)
            .collect()
    }

    /// Ids outside `fold`, ascending.
    pub fn train_ids(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.fold_count];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

pub fn split_folds(data: &TrainingSet, fold_count: usize, seed: u64) -> Result<FoldPlan> {
    FoldPlan::new(data.len(), fold_count, seed)
}

/// Uniform sample without replacement of `count` ids from `0..n`, returned
/// ascending.
pub fn sample_ids(n: usize, count: usize, seed: u64) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    ids.truncate(count.min(n));
    ids.sort_unstable();
    ids
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn normalize_examples() {
        assert!(close(&normalize(&[3.0, 4.0]).unwrap(), &[0.6, 0.8], 1e-15));
        assert_eq!(normalize(&[1.0, 0.0, 0.0]).unwrap().as_slice(), &[1.0, 0.0, 0.0]);
        assert!(matches!(normalize(&[0.0, 0.0]), Err(SmlError::ZeroNorm { .. })));
    }

    #[test]
    fn loads_small_svm_file() {
        let d = parse_dataset("1,2 1:0.6 2:0.8\n2 1:1.0\n", DataFormat::MultilabelSvm).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.num_labels(), 2);
        assert_eq!(d.dim(), 2);
        assert_eq!(d.label_subset(1).unwrap(), &[0]);
        assert_eq!(d.label_subset(2).unwrap(), &[0, 1]);
        assert!(close(d.features(0), &[0.6, 0.8], 1e-15));
        assert!(close(d.features(1), &[1.0, 0.0], 1e-15));
        assert!((d.avg_cardinality() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn empty_file_is_an_error() {
        match parse_dataset("", DataFormat::MultilabelSvm) {
            Err(SmlError::Parse { message, .. }) => assert_eq!(message, "no instances"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_dataset("\n\n", DataFormat::MultilabelSvm).is_err());
    }

    #[test]
    fn zero_norm_line_is_rejected() {
        let err = parse_dataset("2 1:1\n1 1:0 2:0\n", DataFormat::MultilabelSvm).unwrap_err();
        assert!(matches!(err, SmlError::ZeroNorm { instance: 1 }));
    }

    #[test]
    fn label_below_one_is_rejected() {
        let err = parse_dataset("0,2 1:1\n", DataFormat::MultilabelSvm).unwrap_err();
        assert!(matches!(err, SmlError::InvalidLabel { label: 0, .. }));
        assert!(parse_dataset("-3 1:1\n", DataFormat::MultilabelSvm).is_err());
    }

    #[test]
    fn malformed_lines_report_line_number() {
        let err = parse_dataset("1 1:1\n2 1:1 2\n", DataFormat::MultilabelSvm).unwrap_err();
        assert!(matches!(err, SmlError::Parse { line: 2, .. }));
        let err = parse_dataset("1 2:1 1:1\n", DataFormat::MultilabelSvm).unwrap_err();
        assert!(matches!(err, SmlError::Parse { line: 1, .. }));
        let err = parse_dataset("x 1:1\n", DataFormat::MultilabelSvm).unwrap_err();
        assert!(matches!(err, SmlError::Parse { line: 1, .. }));
    }

    #[test]
    fn leading_space_means_empty_label_set() {
        let d = parse_dataset(" 1:1 2:1\n3 2:1\n", DataFormat::MultilabelSvm).unwrap();
        assert!(d.labels(0).is_empty());
        assert_eq!(d.num_labels(), 3);
        assert_eq!(d.label_subset(3).unwrap(), &[1]);
        assert!(d.label_subset(1).unwrap().is_empty());
    }

    #[test]
    fn sparse_features_are_densified() {
        let d = parse_dataset("1 3:2\n1 1:1\n", DataFormat::MultilabelSvm).unwrap();
        assert_eq!(d.dim(), 3);
        assert_eq!(d.features(0).as_slice(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn padding_appends_zero_features() {
        let d = parse_dataset("1 1:3 2:4\n", DataFormat::MultilabelSvm).unwrap();
        let p = d.pad_to_dim(4).unwrap();
        assert_eq!(p.dim(), 4);
        assert_eq!(p.features(0).as_slice(), &[0.6, 0.8, 0.0, 0.0]);
        assert_eq!(p.label_subset(1).unwrap(), &[0]);
        assert!(d.pad_to_dim(1).is_err());
    }

    #[test]
    fn csv_format() {
        let text = "label_1,label_2,label_3,f_1,f_2\n1,0,1,3,4\n0,0,0,1,0\n";
        let d = parse_dataset(text, DataFormat::Csv).unwrap();
        assert_eq!(d.num_labels(), 3);
        assert_eq!(d.dim(), 2);
        assert_eq!(d.labels(0).as_slice(), &[1, 3]);
        assert!(d.labels(1).is_empty());
        assert!(close(d.features(0), &[0.6, 0.8], 1e-15));
        assert!(parse_dataset("label_1,f_1\n2,1\n", DataFormat::Csv).is_err());
        assert!(parse_dataset("label_1,f_1\n", DataFormat::Csv).is_err());
    }

    #[test]
    fn label_subset_examples() {
        let rows = vec![
            (vec![1.0, 0.0], LabelSet::new([1, 2])),
            (vec![0.0, 1.0], LabelSet::new([2])),
        ];
        let d = TrainingSet::from_raw(rows, Some(3)).unwrap();
        assert_eq!(d.label_subset(2).unwrap(), &[0, 1]);
        assert!(d.label_subset(3).unwrap().is_empty());
        assert!(matches!(d.label_subset(0), Err(SmlError::LabelOutOfRange { .. })));
        assert!(d.label_subset(4).is_err());
    }

    #[test]
    fn fold_sizes_are_balanced() {
        let plan = FoldPlan::new(10, 10, 7).unwrap();
        assert!(plan.fold_sizes().iter().all(|&s| s == 1));
        let mut sizes = FoldPlan::new(7, 3, 7).unwrap().fold_sizes();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        assert_eq!(sizes, vec![3, 2, 2]);
    }

    #[test]
    fn fold_plan_is_deterministic() {
        assert_eq!(FoldPlan::new(50, 5, 3).unwrap(), FoldPlan::new(50, 5, 3).unwrap());
        assert_ne!(
            FoldPlan::new(50, 5, 3).unwrap().assignment(),
            FoldPlan::new(50, 5, 4).unwrap().assignment()
        );
    }

    #[test]
    fn fold_count_out_of_range() {
        assert!(matches!(FoldPlan::new(5, 1, 0), Err(SmlError::FoldCount { .. })));
        assert!(matches!(FoldPlan::new(5, 6, 0), Err(SmlError::FoldCount { .. })));
    }

    #[test]
    fn sample_ids_ascending_and_sized() {
        let ids = sample_ids(20, 7, 1);
        assert_eq!(ids.len(), 7);
        assert!(ids.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(sample_ids(5, 5, 9), vec![0, 1, 2, 3, 4]);
    }
}
