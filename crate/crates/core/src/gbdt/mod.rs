//! Gradient boosting over regression trees with squared-error loss.
//!
//! The model is `f(x) = f0 + sum_k step_length * tree_k(x)`, where `f0` is
//! the training-target mean and each tree is fit to the negative gradient of
//! `0.5 (y - f)^2`, i.e. the current residuals. Two base-learner families
//! are available:
//!
//! * [`LearnerMode::SingleTree`]: one depth-limited CART tree per round.
//! * [`LearnerMode::ComponentwiseStumps`]: one stump per feature is fit each
//!   round and only the stump with the lowest residual squared error is kept.
//!
//! Training first sorts the rows into a canonical order, so the fitted
//! model does not depend on the order rows were supplied in.

mod forest;
mod tree;

use std::path::Path;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::rng::{seeded, stream};
use crate::{Error, Result};

pub use tree::{RegressionTree, SortedColumns};
use forest::Forest;
use tree::{grow, GrowParams};

pub const MODEL_FORMAT: &str = "cran-gbdt";
pub const MODEL_VERSION: u32 = 1;

/// Dense row-major feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl FeatureMatrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::Dimension(format!(
                    "row {i} has {} features, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::from_flat(data, rows.len(), cols)
    }

    pub fn from_flat(data: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "feature ({}, {})",
                i / cols.max(1),
                i % cols.max(1)
            )));
        }
        Ok(Self { data, rows, cols })
    }

    pub fn num_rows(&self) -> usize {
        self.rows
    }

    pub fn num_cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Self {
            data,
            rows: idx.len(),
            cols: self.cols,
        }
    }
}

/// Feature rows paired with regression targets.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionDataset {
    pub features: FeatureMatrix,
    pub targets: Vec<f64>,
}

impl RegressionDataset {
    pub fn new(features: FeatureMatrix, targets: Vec<f64>) -> Result<Self> {
        if features.num_rows() != targets.len() {
            return Err(Error::Dimension(format!(
                "{} feature rows vs {} targets",
                features.num_rows(),
                targets.len()
            )));
        }
        if targets.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("regression target".into()));
        }
        Ok(Self { features, targets })
    }

    pub fn from_rows(rows: &[Vec<f64>], targets: Vec<f64>) -> Result<Self> {
        Self::new(FeatureMatrix::from_rows(rows)?, targets)
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.features.num_cols()
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(idx),
            targets: idx.iter().map(|&i| self.targets[i]).collect(),
        }
    }

    /// Rows sorted lexicographically by features, then target.
    pub fn canonical(&self) -> Self {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| {
            let (ra, rb) = (self.features.row(a), self.features.row(b));
            ra.iter()
                .zip(rb)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(self.targets[a].total_cmp(&self.targets[b]))
        });
        self.select(&idx)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnerMode {
    SingleTree,
    ComponentwiseStumps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbdtParams {
    pub num_rounds: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub step_length: f64,
    pub lambda_leaf: f64,
    pub learner_mode: LearnerMode,
    /// Fraction of rows drawn (without replacement) for each round.
    pub subsample: f64,
    /// Stop once the validation MSE has not improved for this many rounds.
    pub early_stopping_rounds: Option<usize>,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for GbdtParams {
    fn default() -> Self {
        Self {
            num_rounds: 200,
            max_depth: 6,
            min_samples_leaf: 5,
            step_length: 0.1,
            lambda_leaf: 0.0,
            learner_mode: LearnerMode::SingleTree,
            subsample: 1.0,
            early_stopping_rounds: None,
            validation_fraction: 0.1,
            seed: 0,
        }
    }
}

impl GbdtParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_rounds < 1 {
            return Err(Error::config("num_rounds", "must be >= 1"));
        }
        if !(self.step_length > 0.0 && self.step_length <= 1.0) {
            return Err(Error::config("step_length", "must lie in (0, 1]"));
        }
        if !(self.lambda_leaf >= 0.0 && self.lambda_leaf.is_finite()) {
            return Err(Error::config("lambda_leaf", "must be finite and >= 0"));
        }
        if self.min_samples_leaf < 1 {
            return Err(Error::config("min_samples_leaf", "must be >= 1"));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(Error::config("subsample", "must lie in (0, 1]"));
        }
        if self.early_stopping_rounds.is_some()
            && !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0)
        {
            return Err(Error::config("validation_fraction", "must lie in (0, 1)"));
        }
        Ok(())
    }

    fn grow_params(&self) -> GrowParams {
        let max_depth = match self.learner_mode {
            LearnerMode::SingleTree => self.max_depth,
            LearnerMode::ComponentwiseStumps => 1,
        };
        GrowParams {
            max_depth,
            min_samples_leaf: self.min_samples_leaf,
            lambda_leaf: self.lambda_leaf,
        }
    }
}

/// L2 negative gradient, `y - f`.
pub fn negative_gradient(targets: &[f64], predictions: &[f64]) -> Result<Vec<f64>> {
    if targets.len() != predictions.len() {
        return Err(Error::Dimension(format!(
            "{} targets vs {} predictions",
            targets.len(),
            predictions.len()
        )));
    }
    Ok(targets.iter().zip(predictions).map(|(y, f)| y - f).collect())
}

/// Fits one regression tree to `residuals` using every feature.
pub fn fit_tree(
    features: &FeatureMatrix,
    residuals: &[f64],
    params: &GbdtParams,
) -> Result<RegressionTree> {
    if features.num_rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    if residuals.len() != features.num_rows() {
        return Err(Error::Dimension(format!(
            "{} residuals for {} rows",
            residuals.len(),
            features.num_rows()
        )));
    }
    params.validate()?;
    let sorted = SortedColumns::new(features);
    let all: Vec<usize> = (0..features.num_cols()).collect();
    Ok(grow(features, residuals, None, &sorted, &all, params.grow_params()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtModel {
    pub initial_prediction: f64,
    trees: Vec<RegressionTree>,
    pub step_length: f64,
    pub lambda_leaf: f64,
    pub num_features: usize,
    pub params: GbdtParams,
    /// Training MSE after `f0` and after every kept round.
    pub train_mse: Vec<f64>,
    /// Feature picked in each round (componentwise mode only).
    pub selected_features: Vec<usize>,
    #[serde(skip)]
    forest: Forest,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    model: GbdtModel,
}

impl GbdtModel {
    pub fn new(
        initial_prediction: f64,
        trees: Vec<RegressionTree>,
        step_length: f64,
        num_features: usize,
        params: GbdtParams,
    ) -> Self {
        let forest = Forest::compile(&trees);
        Self {
            initial_prediction,
            trees,
            step_length,
            lambda_leaf: params.lambda_leaf,
            num_features,
            params,
            train_mse: Vec::new(),
            selected_features: Vec::new(),
            forest,
        }
    }

    /// Trees in fit order.
    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.num_features {
            return Err(Error::Dimension(format!(
                "expected {} features, got {}",
                self.num_features,
                x.len()
            )));
        }
        Ok(self.predict_unchecked(x))
    }

    #[inline]
    pub fn predict_unchecked(&self, x: &[f64]) -> f64 {
        self.forest
            .predict(x, self.initial_prediction, self.step_length)
    }

    /// Reference evaluation walking each tree in turn. Agrees bit-for-bit
    /// with [`GbdtModel::predict`].
    pub fn predict_reference(&self, x: &[f64]) -> f64 {
        let mut f = self.initial_prediction;
        for t in &self.trees {
            f += self.step_length * t.predict(x);
        }
        f
    }

    pub fn predict_all(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        (0..x.num_rows()).map(|i| self.predict(x.row(i))).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            model: self.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let header: serde_json::Value = serde_json::from_str(s)?;
        if header.get("format").and_then(|f| f.as_str()) != Some(MODEL_FORMAT) {
            return Err(Error::Parse("not a boosted-tree model file".into()));
        }
        let version = header.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if version != MODEL_VERSION {
            return Err(Error::Version {
                kind: "model",
                found: version,
                expected: MODEL_VERSION,
            });
        }
        let file: ModelFile = serde_json::from_str(s)?;
        let mut model = file.model;
        if model.trees.iter().any(|t| !t.is_well_formed()) {
            return Err(Error::Parse("malformed tree in model file".into()));
        }
        model.forest = Forest::compile(&model.trees);
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

fn mse(targets: &[f64], preds: &[f64], mask: Option<&[bool]>) -> f64 {
    let mut sum = 0.0;
    let mut n = 0usize;
    for i in 0..targets.len() {
        if mask.is_none_or(|m| m[i]) {
            let e = targets[i] - preds[i];
            sum += e * e;
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

pub fn train(dataset: &RegressionDataset, params: &GbdtParams) -> Result<GbdtModel> {
    params.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let data = dataset.canonical();
    let n = data.len();
    let x = &data.features;
    let y = &data.targets;

    // Optional validation split for early stopping, drawn on the canonical order.
    let mut train_mask = vec![true; n];
    if params.early_stopping_rounds.is_some() {
        let n_val = ((n as f64) * params.validation_fraction).round() as usize;
        if n_val == 0 || n_val >= n {
            return Err(Error::config(
                "validation_fraction",
                format!("leaves no rows on one side of the split ({n} rows)"),
            ));
        }
        let mut rng = seeded(params.seed, stream::SPLIT);
        for i in index::sample(&mut rng, n, n_val) {
            train_mask[i] = false;
        }
    }
    let val_mask: Vec<bool> = train_mask.iter().map(|t| !t).collect();
    let n_train = train_mask.iter().filter(|&&t| t).count();

    let initial_prediction = {
        let mut s = 0.0;
        for i in 0..n {
            if train_mask[i] {
                s += y[i];
            }
        }
        s / n_train as f64
    };
    let mut preds = vec![initial_prediction; n];
    let sorted = SortedColumns::new(x);
    let grow_params = params.grow_params();
    let all_features: Vec<usize> = (0..x.num_cols()).collect();
    let mut sub_rng = seeded(params.seed, stream::SUBSAMPLE);

    let mut trees = Vec::with_capacity(params.num_rounds);
    let mut selected = Vec::new();
    let mut train_mse = vec![mse(y, &preds, Some(&train_mask))];
    let mut best_val = f64::INFINITY;
    let mut best_rounds = 0usize;
    let mut since_best = 0usize;

    for _round in 0..params.num_rounds {
        let residuals = negative_gradient(y, &preds)?;
        let round_mask: Vec<bool> = if params.subsample < 1.0 {
            let train_idx: Vec<usize> = (0..n).filter(|&i| train_mask[i]).collect();
            let k = ((train_idx.len() as f64) * params.subsample).ceil() as usize;
            let mut m = vec![false; n];
            for j in index::sample(&mut sub_rng, train_idx.len(), k.max(1)) {
                m[train_idx[j]] = true;
            }
            m
        } else {
            train_mask.clone()
        };

        let tree = match params.learner_mode {
            LearnerMode::SingleTree => grow(
                x,
                &residuals,
                Some(&round_mask),
                &sorted,
                &all_features,
                grow_params,
            ),
            LearnerMode::ComponentwiseStumps => {
                let mut best: Option<(f64, usize, RegressionTree)> = None;
                for f in 0..x.num_cols() {
                    let stump = grow(x, &residuals, Some(&round_mask), &sorted, &[f], grow_params);
                    let mut sse = 0.0;
                    for i in 0..n {
                        if round_mask[i] {
                            let e = residuals[i] - stump.predict(x.row(i));
                            sse += e * e;
                        }
                    }
                    if best.as_ref().is_none_or(|(b, _, _)| sse < *b) {
                        best = Some((sse, f, stump));
                    }
                }
                let (_, f, stump) = best.expect("at least one feature");
                selected.push(f);
                stump
            }
        };

        for (i, p) in preds.iter_mut().enumerate() {
            *p += params.step_length * tree.predict(x.row(i));
        }
        trees.push(tree);
        train_mse.push(mse(y, &preds, Some(&train_mask)));

        if let Some(patience) = params.early_stopping_rounds {
            let v = mse(y, &preds, Some(&val_mask));
            if v < best_val {
                best_val = v;
                best_rounds = trees.len();
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= patience {
                    trees.truncate(best_rounds);
                    train_mse.truncate(best_rounds + 1);
                    selected.truncate(best_rounds.min(selected.len()));
                    break;
                }
            }
        }
    }

    let mut model = GbdtModel::new(
        initial_prediction,
        trees,
        params.step_length,
        x.num_cols(),
        params.clone(),
    );
    model.train_mse = train_mse;
    model.selected_features = selected;
    Ok(model)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: f64,
    pub r2: f64,
}

pub fn evaluate(model: &GbdtModel, dataset: &RegressionDataset) -> Result<Metrics> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let preds = model.predict_all(&dataset.features)?;
    Ok(regression_metrics(&dataset.targets, &preds))
}

/// MSE and coefficient of determination. A constant target gives `r2 = 1`
/// for an exact fit and 0 otherwise.
pub fn regression_metrics(targets: &[f64], preds: &[f64]) -> Metrics {
    let n = targets.len() as f64;
    let mean = targets.iter().sum::<f64>() / n;
    let sse: f64 = targets.iter().zip(preds).map(|(y, p)| (y - p) * (y - p)).sum();
    let sst: f64 = targets.iter().map(|y| (y - mean) * (y - mean)).sum();
    let r2 = if sst > 0.0 {
        1.0 - sse / sst
    } else if sse == 0.0 {
        1.0
    } else {
        0.0
    };
    Metrics { mse: sse / n, r2 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn one_d(xs: &[f64]) -> FeatureMatrix {
        FeatureMatrix::from_flat(xs.to_vec(), xs.len(), 1).unwrap()
    }

    #[test]
    fn gradient_cases() {
        assert_eq!(negative_gradient(&[5.0], &[3.0]).unwrap(), vec![2.0]);
        assert_eq!(negative_gradient(&[1.5, 2.0], &[1.5, 2.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(negative_gradient(&[1.0, 4.0], &[0.0, 6.0]).unwrap(), vec![1.0, -2.0]);
        assert!(negative_gradient(&[1.0], &[]).is_err());
    }

    #[test]
    fn constant_residuals_give_single_leaf() {
        let x = one_d(&[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0]);
        let t = fit_tree(&x, &[2.5; 12], &GbdtParams::default()).unwrap();
        assert_eq!(t.num_nodes(), 1);
        assert_eq!(t.value[0], 2.5);
    }

    #[test]
    fn step_function_split() {
        let xs: Vec<f64> = (-10..10).map(|i| i as f64 + 0.5).collect();
        let r: Vec<f64> = xs.iter().map(|&v| if v > 0.0 { 3.0 } else { -1.0 }).collect();
        let params = GbdtParams {
            max_depth: 1,
            min_samples_leaf: 1,
            ..GbdtParams::default()
        };
        let t = fit_tree(&one_d(&xs), &r, &params).unwrap();
        assert_eq!(t.num_nodes(), 3);
        assert_eq!(t.split_feature[0], 0);
        assert_eq!(t.threshold[0], 0.0);
        assert_eq!(t.value[t.left[0] as usize], -1.0);
        assert_eq!(t.value[t.right[0] as usize], 3.0);
    }

    #[test]
    fn regularised_leaf_value() {
        let x = one_d(&[1.0; 5]);
        let params = GbdtParams {
            lambda_leaf: 5.0,
            ..GbdtParams::default()
        };
        let t = fit_tree(&x, &[2.0; 5], &params).unwrap();
        assert_eq!(t.value[0], 1.0);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        let x = FeatureMatrix::from_flat(vec![], 0, 3).unwrap();
        assert!(matches!(
            fit_tree(&x, &[], &GbdtParams::default()),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn constant_targets() {
        let ds = RegressionDataset::new(one_d(&[1.0, 2.0, 3.0, 4.0]), vec![7.0; 4]).unwrap();
        let m = train(&ds, &GbdtParams { num_rounds: 5, ..GbdtParams::default() }).unwrap();
        assert_eq!(m.initial_prediction, 7.0);
        for t in m.trees() {
            assert!(t.value.iter().all(|&v| v == 0.0));
        }
        assert_eq!(m.predict(&[100.0]).unwrap(), 7.0);
    }

    #[test]
    fn indicator_target_is_learned() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rows: Vec<Vec<f64>> = (0..400).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
        let y: Vec<f64> = rows.iter().map(|r| if r[0] > 0.5 { 1.0 } else { 0.0 }).collect();
        let ds = RegressionDataset::from_rows(&rows, y).unwrap();
        let params = GbdtParams {
            num_rounds: 200,
            max_depth: 1,
            step_length: 0.1,
            ..GbdtParams::default()
        };
        let m = train(&ds, &params).unwrap();
        let metrics = evaluate(&m, &ds).unwrap();
        // residual shrinks by (1 - 0.1) per round: 0.25 * 0.9^400 is far below 1e-4
        assert!(metrics.mse < 1e-4, "{metrics:?}");
    }

    #[test]
    fn componentwise_picks_informative_feature() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rows: Vec<Vec<f64>> = (0..300)
            .map(|_| (0..4).map(|_| rng.random::<f64>()).collect())
            .collect();
        let y: Vec<f64> = rows.iter().map(|r| (6.0 * r[2]).sin() + 2.0 * r[2]).collect();
        let ds = RegressionDataset::from_rows(&rows, y).unwrap();
        let params = GbdtParams {
            num_rounds: 100,
            learner_mode: LearnerMode::ComponentwiseStumps,
            ..GbdtParams::default()
        };
        let m = train(&ds, &params).unwrap();
        let hits = m.selected_features.iter().filter(|&&f| f == 2).count();
        assert!(hits >= 90, "feature 2 chosen {hits}/100");
    }

    #[test]
    fn prediction_arithmetic() {
        let tree = RegressionTree {
            split_feature: vec![0, -1, -1],
            threshold: vec![0.0, 0.0, 0.0],
            left: vec![1, 0, 0],
            right: vec![2, 0, 0],
            value: vec![0.0, 0.0, 2.0],
            max_depth: 1,
        };
        assert!(tree.is_well_formed());
        let m = GbdtModel::new(10.0, vec![tree], 0.1, 1, GbdtParams::default());
        assert!((m.predict(&[1.0]).unwrap() - 10.2).abs() < 1e-12);
        assert_eq!(m.predict(&[-1.0]).unwrap(), 10.0);
        assert!(matches!(m.predict(&[1.0, 2.0]), Err(Error::Dimension(_))));
        let empty = GbdtModel::new(10.0, vec![], 0.1, 1, GbdtParams::default());
        assert_eq!(empty.predict(&[1.0]).unwrap(), 10.0);
    }

    #[test]
    fn metrics_cases() {
        let m = regression_metrics(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]);
        assert_eq!((m.mse, m.r2), (0.0, 1.0));
        let m = regression_metrics(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]);
        assert_eq!(m.r2, 0.0);
        let m = regression_metrics(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]);
        assert!((m.mse - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn version_mismatch_is_rejected() {
        let ds = RegressionDataset::new(one_d(&[1.0, 2.0, 3.0]), vec![1.0, 2.0, 3.0]).unwrap();
        let m = train(&ds, &GbdtParams { num_rounds: 2, ..GbdtParams::default() }).unwrap();
        let json = m.to_json().unwrap().replace("\"version\": 1", "\"version\": 2");
        assert!(matches!(GbdtModel::from_json(&json), Err(Error::Version { found: 2, .. })));
    }

    #[test]
    fn early_stopping_truncates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..200).map(|_| vec![rng.random::<f64>()]).collect();
        let y: Vec<f64> = rows.iter().map(|_| rng.random::<f64>()).collect();
        let ds = RegressionDataset::from_rows(&rows, y).unwrap();
        let params = GbdtParams {
            num_rounds: 300,
            early_stopping_rounds: Some(10),
            validation_fraction: 0.3,
            ..GbdtParams::default()
        };
        let m = train(&ds, &params).unwrap();
        assert!(m.trees().len() < 300);
        assert_eq!(m.train_mse.len(), m.trees().len() + 1);
    }
}
