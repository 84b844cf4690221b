//! Binary phase classification harness: LDA, kNN, and AdaBoost over
//! decision stumps plus the other two learners, with a repeated,
//! subject-grouped, stratified k-fold cross-validation loop, the usual
//! confusion-matrix metrics, and ROC/AUC.
//!
//! Scores are oriented so that positive means the positive class
//! (pre-ictal); a score of exactly zero classifies as the negative class.
//! Training and prediction are deterministic given the data and seed, and
//! cross-validation repeats are independent, so the whole harness is
//! bit-reproducible for any worker count.

use crate::linalg::{cholesky, solve_lower, solve_lower_transpose, Mat};
use crate::rng::{derive_seed_indexed, seeded_rng};
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ClassifyError {
    #[error("training data contains a single class")]
    SingleClass,
    #[error("too few examples: need {needed}, got {got}")]
    TooFewExamples { needed: usize, got: usize },
    #[error("feature dimension mismatch: model expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("prediction and label lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("inputs must be non-empty")]
    Empty,
}

/// Migraine phase label; `PreIctal` is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    InterIctal,
    PreIctal,
}

impl Phase {
    pub fn name(&self) -> &'static str {
        match self {
            Phase::InterIctal => "interictal",
            Phase::PreIctal => "preictal",
        }
    }

    pub fn parse(s: &str) -> Option<Phase> {
        match s {
            "interictal" => Some(Phase::InterIctal),
            "preictal" => Some(Phase::PreIctal),
            _ => None,
        }
    }

    fn sign(&self) -> f64 {
        match self {
            Phase::InterIctal => -1.0,
            Phase::PreIctal => 1.0,
        }
    }

    fn from_score(score: f64) -> Phase {
        // exact zero goes to the negative class
        if score > 0.0 {
            Phase::PreIctal
        } else {
            Phase::InterIctal
        }
    }
}

/// One labelled example: a per-subject feature vector.
#[derive(Debug, Clone)]
pub struct SubjectFeatures {
    pub subject_id: String,
    pub label: Phase,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Lda,
    Knn,
    AdaBoost,
}

impl ModelKind {
    pub fn parse(s: &str) -> Option<ModelKind> {
        match s {
            "lda" => Some(ModelKind::Lda),
            "knn" => Some(ModelKind::Knn),
            "adaboost" => Some(ModelKind::AdaBoost),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Lda => "lda",
            ModelKind::Knn => "knn",
            ModelKind::AdaBoost => "adaboost",
        }
    }
}

/// Hyperparameters shared by the single-model trainers.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub knn_k: usize,
    pub boost_rounds: usize,
    /// Relative ridge added to the pooled LDA covariance (× trace/dim).
    pub lda_ridge: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            knn_k: 3,
            boost_rounds: 8,
            lda_ridge: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LdaModel {
    weights: Vec<f64>,
    bias: f64,
}

#[derive(Debug, Clone)]
pub struct KnnModel {
    k: usize,
    points: Vec<(Vec<f64>, Phase)>,
}

#[derive(Debug, Clone)]
struct Stump {
    feature: usize,
    threshold: f64,
    /// +1: predict positive above threshold; −1: positive below.
    polarity: f64,
}

#[derive(Debug, Clone)]
enum BaseLearner {
    Lda(LdaModel),
    Knn(KnnModel),
    Stump(Stump),
}

#[derive(Debug, Clone)]
pub struct AdaBoostModel {
    rounds: Vec<(f64, BaseLearner)>,
    dim: usize,
}

/// A trained classifier with a real-valued score function (higher means
/// more pre-ictal-like).
#[derive(Debug, Clone)]
pub enum TrainedModel {
    Lda(LdaModel),
    Knn(KnnModel),
    AdaBoost(AdaBoostModel),
}

impl TrainedModel {
    pub fn dim(&self) -> usize {
        match self {
            TrainedModel::Lda(m) => m.weights.len(),
            TrainedModel::Knn(m) => m.points[0].0.len(),
            TrainedModel::AdaBoost(m) => m.dim,
        }
    }

    pub fn score(&self, x: &[f64]) -> Result<f64, ClassifyError> {
        if x.len() != self.dim() {
            return Err(ClassifyError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(match self {
            TrainedModel::Lda(m) => m.score(x),
            TrainedModel::Knn(m) => m.score(x),
            TrainedModel::AdaBoost(m) => m.score(x),
        })
    }
}

/// Label and score for one query.
pub fn predict(model: &TrainedModel, x: &[f64]) -> Result<(Phase, f64), ClassifyError> {
    let s = model.score(x)?;
    Ok((Phase::from_score(s), s))
}

impl LdaModel {
    fn score(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }
}

impl KnnModel {
    fn score(&self, x: &[f64]) -> f64 {
        let mut dists: Vec<(f64, usize)> = self
            .points
            .iter()
            .enumerate()
            .map(|(i, (p, _))| {
                let d2: f64 = p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2, i)
            })
            .collect();
        dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut vote = 0.0;
        for (_, idx) in dists.iter().take(self.k) {
            vote += self.points[*idx].1.sign();
        }
        vote / self.k as f64
    }
}

impl Stump {
    fn score(&self, x: &[f64]) -> f64 {
        if self.polarity * (x[self.feature] - self.threshold) > 0.0 {
            1.0
        } else {
            -1.0
        }
    }
}

impl BaseLearner {
    fn score(&self, x: &[f64]) -> f64 {
        match self {
            BaseLearner::Lda(m) => m.score(x),
            BaseLearner::Knn(m) => m.score(x),
            BaseLearner::Stump(s) => s.score(x),
        }
    }

    fn sign(&self, x: &[f64]) -> f64 {
        if self.score(x) > 0.0 {
            1.0
        } else {
            -1.0
        }
    }
}

impl AdaBoostModel {
    fn score(&self, x: &[f64]) -> f64 {
        self.rounds
            .iter()
            .map(|(alpha, learner)| alpha * learner.sign(x))
            .sum()
    }
}

fn check_training_set(
    data: &[SubjectFeatures],
    kind: ModelKind,
    cfg: &TrainConfig,
) -> Result<usize, ClassifyError> {
    if data.is_empty() {
        return Err(ClassifyError::Empty);
    }
    let dim = data[0].features.len();
    for ex in data {
        if ex.features.len() != dim {
            return Err(ClassifyError::DimensionMismatch {
                expected: dim,
                got: ex.features.len(),
            });
        }
    }
    let pos = data.iter().filter(|d| d.label == Phase::PreIctal).count();
    if pos == 0 || pos == data.len() {
        return Err(ClassifyError::SingleClass);
    }
    if kind == ModelKind::Knn && data.len() < cfg.knn_k + 1 {
        return Err(ClassifyError::TooFewExamples {
            needed: cfg.knn_k + 1,
            got: data.len(),
        });
    }
    Ok(dim)
}

/// Train a classifier. The seed drives AdaBoost's weighted resampling;
/// LDA and kNN are seed-independent.
pub fn train(
    kind: ModelKind,
    data: &[SubjectFeatures],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainedModel, ClassifyError> {
    let dim = check_training_set(data, kind, cfg)?;
    let weights = vec![1.0 / data.len() as f64; data.len()];
    match kind {
        ModelKind::Lda => Ok(TrainedModel::Lda(train_lda(data, &weights, cfg.lda_ridge, dim)?)),
        ModelKind::Knn => Ok(TrainedModel::Knn(train_knn(data, cfg.knn_k))),
        ModelKind::AdaBoost => Ok(TrainedModel::AdaBoost(train_adaboost(
            data, cfg, dim, seed,
        )?)),
    }
}

fn train_knn(data: &[SubjectFeatures], k: usize) -> KnnModel {
    KnnModel {
        k,
        points: data
            .iter()
            .map(|d| (d.features.clone(), d.label))
            .collect(),
    }
}

fn train_lda(
    data: &[SubjectFeatures],
    weights: &[f64],
    ridge: f64,
    dim: usize,
) -> Result<LdaModel, ClassifyError> {
    let mut w_pos = 0.0;
    let mut w_neg = 0.0;
    let mut mu_pos = vec![0.0; dim];
    let mut mu_neg = vec![0.0; dim];
    for (ex, &w) in data.iter().zip(weights) {
        let (mu, tot) = if ex.label == Phase::PreIctal {
            (&mut mu_pos, &mut w_pos)
        } else {
            (&mut mu_neg, &mut w_neg)
        };
        *tot += w;
        for (m, v) in mu.iter_mut().zip(&ex.features) {
            *m += w * v;
        }
    }
    if w_pos == 0.0 || w_neg == 0.0 {
        return Err(ClassifyError::SingleClass);
    }
    for m in &mut mu_pos {
        *m /= w_pos;
    }
    for m in &mut mu_neg {
        *m /= w_neg;
    }
    // pooled within-class covariance, weight-normalized
    let mut cov = Mat::zeros(dim, dim);
    let w_total = w_pos + w_neg;
    for (ex, &w) in data.iter().zip(weights) {
        let mu = if ex.label == Phase::PreIctal {
            &mu_pos
        } else {
            &mu_neg
        };
        for i in 0..dim {
            let di = ex.features[i] - mu[i];
            for j in 0..=i {
                let dj = ex.features[j] - mu[j];
                cov[(i, j)] += w * di * dj;
            }
        }
    }
    for i in 0..dim {
        for j in 0..=i {
            cov[(i, j)] /= w_total;
            cov[(j, i)] = cov[(i, j)];
        }
    }
    let trace: f64 = (0..dim).map(|i| cov[(i, i)]).sum();
    // escalate the ridge until the factorization succeeds
    let mut lambda = ridge * trace / dim as f64;
    let delta: Vec<f64> = mu_pos.iter().zip(&mu_neg).map(|(p, q)| p - q).collect();
    for _attempt in 0..6 {
        let mut c = cov.clone();
        for i in 0..dim {
            c[(i, i)] += lambda;
        }
        if let Some(l) = cholesky(&c) {
            let w = solve_lower_transpose(&l, &solve_lower(&l, &delta));
            let mid: Vec<f64> = mu_pos
                .iter()
                .zip(&mu_neg)
                .map(|(p, q)| 0.5 * (p + q))
                .collect();
            let bias = (w_pos / w_neg).ln()
                - w.iter().zip(&mid).map(|(wi, mi)| wi * mi).sum::<f64>();
            return Ok(LdaModel { weights: w, bias });
        }
        lambda = if lambda == 0.0 {
            1e-12 * trace.max(1.0) / dim as f64
        } else {
            lambda * 1e3
        };
    }
    Err(ClassifyError::SingleClass)
}

fn train_stump(data: &[SubjectFeatures], weights: &[f64], dim: usize) -> Stump {
    let mut best = Stump {
        feature: 0,
        threshold: f64::NEG_INFINITY,
        polarity: 1.0,
    };
    let mut best_err = f64::INFINITY;
    let w_total: f64 = weights.iter().sum();
    let w_pos: f64 = data
        .iter()
        .zip(weights)
        .filter(|(d, _)| d.label == Phase::PreIctal)
        .map(|(_, w)| *w)
        .sum();
    for feature in 0..dim {
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.sort_by(|&a, &b| {
            data[a].features[feature]
                .partial_cmp(&data[b].features[feature])
                .unwrap()
                .then(a.cmp(&b))
        });
        // Threshold below everything: "positive above" errs on all
        // negatives; sweep upward moving examples below the cut.
        let mut err_above = w_total - w_pos; // polarity +1
        consider(&mut best, &mut best_err, feature, f64::NEG_INFINITY, err_above, w_total);
        let mut idx = 0;
        while idx < order.len() {
            let v = data[order[idx]].features[feature];
            // move the whole tie group below the threshold
            while idx < order.len() && data[order[idx]].features[feature] == v {
                let ex = order[idx];
                if data[ex].label == Phase::PreIctal {
                    err_above += weights[ex];
                } else {
                    err_above -= weights[ex];
                }
                idx += 1;
            }
            let threshold = if idx < order.len() {
                0.5 * (v + data[order[idx]].features[feature])
            } else {
                v + 1.0
            };
            consider(&mut best, &mut best_err, feature, threshold, err_above, w_total);
        }
    }
    best
}

fn consider(
    best: &mut Stump,
    best_err: &mut f64,
    feature: usize,
    threshold: f64,
    err_above: f64,
    w_total: f64,
) {
    // polarity +1 has error err_above; polarity −1 is its complement
    for (polarity, err) in [(1.0, err_above), (-1.0, w_total - err_above)] {
        if err < *best_err - 1e-15 {
            *best_err = err;
            *best = Stump {
                feature,
                threshold,
                polarity,
            };
        }
    }
}

fn weighted_error(learner: &BaseLearner, data: &[SubjectFeatures], weights: &[f64]) -> f64 {
    data.iter()
        .zip(weights)
        .filter(|(d, _)| learner.sign(&d.features) != d.label.sign())
        .map(|(_, w)| *w)
        .sum()
}

/// Weighted resample with replacement (for learners without native
/// example weighting).
fn resample<R: Rng>(
    data: &[SubjectFeatures],
    weights: &[f64],
    rng: &mut R,
) -> Vec<SubjectFeatures> {
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        cdf.push(acc);
    }
    (0..data.len())
        .map(|_| {
            let u: f64 = rng.random::<f64>() * acc;
            let idx = cdf.partition_point(|&c| c < u).min(data.len() - 1);
            data[idx].clone()
        })
        .collect()
}

fn train_adaboost(
    data: &[SubjectFeatures],
    cfg: &TrainConfig,
    dim: usize,
    seed: u64,
) -> Result<AdaBoostModel, ClassifyError> {
    let n = data.len();
    let mut weights = vec![1.0 / n as f64; n];
    let mut rounds: Vec<(f64, BaseLearner)> = Vec::new();
    for t in 0..cfg.boost_rounds {
        let mut candidates: Vec<BaseLearner> = Vec::with_capacity(3);
        if let Ok(lda) = train_lda(data, &weights, cfg.lda_ridge, dim) {
            candidates.push(BaseLearner::Lda(lda));
        }
        if n > cfg.knn_k {
            let mut rng = seeded_rng(derive_seed_indexed(seed, "boost-round", t as u64));
            let sample = resample(data, &weights, &mut rng);
            candidates.push(BaseLearner::Knn(train_knn(&sample, cfg.knn_k)));
        }
        candidates.push(BaseLearner::Stump(train_stump(data, &weights, dim)));

        let (err, learner) = candidates
            .into_iter()
            .map(|c| (weighted_error(&c, data, &weights), c))
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
            .expect("stump candidate always present");
        if err >= 0.5 {
            break;
        }
        let clamped = err.clamp(1e-10, 1.0 - 1e-10);
        let alpha = 0.5 * ((1.0 - clamped) / clamped).ln();
        for (w, d) in weights.iter_mut().zip(data) {
            *w *= (-alpha * d.label.sign() * learner.sign(&d.features)).exp();
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        rounds.push((alpha, learner));
        if err <= 1e-10 {
            break;
        }
    }
    if rounds.is_empty() {
        // no candidate beat chance; fall back to the best stump alone
        let stump = train_stump(data, &vec![1.0 / n as f64; n], dim);
        rounds.push((1.0, BaseLearner::Stump(stump)));
    }
    Ok(AdaBoostModel { rounds, dim })
}

// ── metrics ──────────────────────────────────────────────────────────────

/// Confusion-matrix metrics; a metric is `None` when its denominator is
/// zero. The positive class is `PreIctal`.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub accuracy: Option<f64>,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub f_measure: Option<f64>,
}

pub fn compute_metrics(predictions: &[Phase], labels: &[Phase]) -> Result<Metrics, ClassifyError> {
    if predictions.len() != labels.len() {
        return Err(ClassifyError::LengthMismatch(
            predictions.len(),
            labels.len(),
        ));
    }
    if predictions.is_empty() {
        return Err(ClassifyError::Empty);
    }
    let mut tp = 0.0;
    let mut tn = 0.0;
    let mut fp = 0.0;
    let mut fn_ = 0.0;
    for (p, l) in predictions.iter().zip(labels) {
        match (p, l) {
            (Phase::PreIctal, Phase::PreIctal) => tp += 1.0,
            (Phase::PreIctal, Phase::InterIctal) => fp += 1.0,
            (Phase::InterIctal, Phase::PreIctal) => fn_ += 1.0,
            (Phase::InterIctal, Phase::InterIctal) => tn += 1.0,
        }
    }
    let total = tp + tn + fp + fn_;
    let ratio = |num: f64, den: f64| if den > 0.0 { Some(num / den) } else { None };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f_measure = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    Ok(Metrics {
        accuracy: ratio(tp + tn, total),
        recall,
        precision,
        f_measure,
    })
}

/// ROC curve by threshold sweep over the unique scores (ties step
/// diagonally) and AUC by trapezoidal integration. Points are
/// (false-positive rate, true-positive rate) from (0,0) to (1,1).
pub fn roc_auc(scores: &[f64], labels: &[Phase]) -> Result<(Vec<(f64, f64)>, f64), ClassifyError> {
    if scores.len() != labels.len() {
        return Err(ClassifyError::LengthMismatch(scores.len(), labels.len()));
    }
    let n_pos = labels.iter().filter(|l| **l == Phase::PreIctal).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return Err(ClassifyError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    let mut points = vec![(0.0, 0.0)];
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut auc = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (mut d_tp, mut d_fp) = (0.0, 0.0);
        while i < order.len() && scores[order[i]] == s {
            match labels[order[i]] {
                Phase::PreIctal => d_tp += 1.0,
                Phase::InterIctal => d_fp += 1.0,
            }
            i += 1;
        }
        let prev = (fp / n_neg, tp / n_pos);
        tp += d_tp;
        fp += d_fp;
        let cur = (fp / n_neg, tp / n_pos);
        auc += (cur.0 - prev.0) * (cur.1 + prev.1) * 0.5;
        points.push(cur);
    }
    Ok((points, auc))
}

// ── cross-validation ─────────────────────────────────────────────────────

#[derive(Debug, Clone)]
pub struct CvConfig {
    pub folds: usize,
    pub repeats: usize,
    /// Inner-fold grid search over kNN k / boosting rounds.
    pub tune: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 3,
            repeats: 100,
            tune: true,
        }
    }
}

/// Mean and sample SD of a metric across repeats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

fn mean_sd(xs: &[f64]) -> MeanSd {
    MeanSd {
        mean: crate::math::mean(xs),
        sd: crate::math::sample_sd(xs),
    }
}

/// Cross-validation summary: per-metric mean (SD) across repeats, the AUC
/// summary, and a pooled ROC curve over all repeats' held-out scores.
#[derive(Debug, Clone)]
pub struct CvSummary {
    pub accuracy: MeanSd,
    pub recall: MeanSd,
    pub precision: MeanSd,
    pub f_measure: MeanSd,
    pub auc: MeanSd,
    pub roc_points: Vec<(f64, f64)>,
    /// Repeats whose recall/precision/F had a zero denominator.
    pub undefined_metric_repeats: usize,
}

/// Assign subject groups to `folds` folds, stratified so per-fold class
/// counts stay within one of perfect proportion. Examples from one subject
/// never span folds. Returns a fold index per example.
pub fn stratified_group_folds(
    data: &[SubjectFeatures],
    folds: usize,
    rng: &mut impl Rng,
) -> Vec<usize> {
    // group examples by subject, preserving first-seen order
    let mut group_ids: Vec<String> = Vec::new();
    let mut group_members: Vec<Vec<usize>> = Vec::new();
    for (i, ex) in data.iter().enumerate() {
        match group_ids.iter().position(|g| *g == ex.subject_id) {
            Some(g) => group_members[g].push(i),
            None => {
                group_ids.push(ex.subject_id.clone());
                group_members.push(vec![i]);
            }
        }
    }
    let mut order: Vec<usize> = (0..group_members.len()).collect();
    order.shuffle(rng);

    let class_counts = |members: &[usize]| -> (usize, usize) {
        let pos = members
            .iter()
            .filter(|&&i| data[i].label == Phase::PreIctal)
            .count();
        (pos, members.len() - pos)
    };
    // deal mixed groups first, then pure-positive, then pure-negative;
    // each category goes to the currently lightest folds
    let mut fold_pos = vec![0usize; folds];
    let mut fold_neg = vec![0usize; folds];
    let mut assignment = vec![0usize; data.len()];
    for category in 0..3 {
        let selected: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&g| {
                let (pos, neg) = class_counts(&group_members[g]);
                match category {
                    0 => pos > 0 && neg > 0,
                    1 => pos > 0 && neg == 0,
                    _ => pos == 0 && neg > 0,
                }
            })
            .collect();
        for g in selected {
            let (pos, neg) = class_counts(&group_members[g]);
            let load = |f: usize| -> (usize, usize) {
                let primary = if pos > 0 && neg > 0 {
                    fold_pos[f] + fold_neg[f]
                } else if pos > 0 {
                    fold_pos[f]
                } else {
                    fold_neg[f]
                };
                (primary, f)
            };
            let f = (0..folds).min_by_key(|&f| load(f)).unwrap();
            for &i in &group_members[g] {
                assignment[i] = f;
            }
            fold_pos[f] += pos;
            fold_neg[f] += neg;
        }
    }
    assignment
}

fn tuned_config(
    kind: ModelKind,
    train_set: &[SubjectFeatures],
    base: &TrainConfig,
    seed: u64,
) -> TrainConfig {
    let grid: Vec<TrainConfig> = match kind {
        ModelKind::Knn => [1usize, 3, 5]
            .iter()
            .map(|&k| TrainConfig {
                knn_k: k,
                ..base.clone()
            })
            .collect(),
        ModelKind::AdaBoost => [4usize, 8, 16]
            .iter()
            .map(|&r| TrainConfig {
                boost_rounds: r,
                ..base.clone()
            })
            .collect(),
        ModelKind::Lda => return base.clone(),
    };
    let mut rng = seeded_rng(derive_seed_indexed(seed, "tune-folds", 0));
    let inner_folds = 3.min(train_set.len());
    let assignment = stratified_group_folds(train_set, inner_folds, &mut rng);
    let mut best = base.clone();
    let mut best_acc = -1.0;
    for (gi, cfg) in grid.iter().enumerate() {
        let mut correct = 0usize;
        let mut total = 0usize;
        for f in 0..inner_folds {
            let train_part: Vec<SubjectFeatures> = train_set
                .iter()
                .zip(&assignment)
                .filter(|(_, &a)| a != f)
                .map(|(e, _)| e.clone())
                .collect();
            let test_part: Vec<&SubjectFeatures> = train_set
                .iter()
                .zip(&assignment)
                .filter(|(_, &a)| a == f)
                .map(|(e, _)| e)
                .collect();
            let model = match train(
                kind,
                &train_part,
                cfg,
                derive_seed_indexed(seed, "tune-train", (gi * inner_folds + f) as u64),
            ) {
                Ok(m) => m,
                Err(_) => continue,
            };
            for ex in test_part {
                if let Ok((label, _)) = predict(&model, &ex.features) {
                    total += 1;
                    if label == ex.label {
                        correct += 1;
                    }
                }
            }
        }
        let acc = if total > 0 {
            correct as f64 / total as f64
        } else {
            -1.0
        };
        if acc > best_acc {
            best_acc = acc;
            best = cfg.clone();
        }
    }
    best
}

/// Repeated stratified k-fold cross-validation. Each repeat partitions the
/// subjects afresh (seeded), trains on `folds − 1` folds, scores the
/// held-out fold, pools the fold predictions, and computes metrics; the
/// summary reports mean (SD) across repeats.
pub fn cross_validate(
    kind: ModelKind,
    data: &[SubjectFeatures],
    cv: &CvConfig,
    base_cfg: &TrainConfig,
    seed: u64,
) -> Result<CvSummary, ClassifyError> {
    if cv.folds < 2 {
        return Err(ClassifyError::TooFewExamples {
            needed: 2,
            got: cv.folds,
        });
    }
    let pos = data.iter().filter(|d| d.label == Phase::PreIctal).count();
    let neg = data.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(ClassifyError::SingleClass);
    }
    if pos < cv.folds || neg < cv.folds {
        return Err(ClassifyError::TooFewExamples {
            needed: cv.folds,
            got: pos.min(neg),
        });
    }

    struct RepeatOutcome {
        metrics: Metrics,
        auc: f64,
        scores: Vec<f64>,
        labels: Vec<Phase>,
    }

    let run_repeat = |rep: usize| -> Result<RepeatOutcome, ClassifyError> {
        let rep_seed = derive_seed_indexed(seed, "cv-repeat", rep as u64);
        let mut rng = seeded_rng(rep_seed);
        let assignment = stratified_group_folds(data, cv.folds, &mut rng);
        let mut scores = Vec::with_capacity(data.len());
        let mut labels = Vec::with_capacity(data.len());
        let mut predictions = Vec::with_capacity(data.len());
        for f in 0..cv.folds {
            let train_set: Vec<SubjectFeatures> = data
                .iter()
                .zip(&assignment)
                .filter(|(_, &a)| a != f)
                .map(|(e, _)| e.clone())
                .collect();
            let cfg = if cv.tune {
                tuned_config(
                    kind,
                    &train_set,
                    base_cfg,
                    derive_seed_indexed(rep_seed, "fold", f as u64),
                )
            } else {
                base_cfg.clone()
            };
            let model = train(
                kind,
                &train_set,
                &cfg,
                derive_seed_indexed(rep_seed, "fold-train", f as u64),
            )?;
            for (ex, &a) in data.iter().zip(&assignment) {
                if a == f {
                    let (label, score) = predict(&model, &ex.features)?;
                    scores.push(score);
                    labels.push(ex.label);
                    predictions.push(label);
                }
            }
        }
        let metrics = compute_metrics(&predictions, &labels)?;
        let (_, auc) = roc_auc(&scores, &labels)?;
        Ok(RepeatOutcome {
            metrics,
            auc,
            scores,
            labels,
        })
    };

    let outcomes: Vec<Result<RepeatOutcome, ClassifyError>> =
        (0..cv.repeats).into_par_iter().map(run_repeat).collect();

    let mut accuracy = Vec::new();
    let mut recall = Vec::new();
    let mut precision = Vec::new();
    let mut f_measure = Vec::new();
    let mut auc = Vec::new();
    let mut pooled_scores = Vec::new();
    let mut pooled_labels = Vec::new();
    let mut undefined = 0usize;
    for outcome in outcomes {
        let o = outcome?;
        accuracy.push(o.metrics.accuracy.expect("accuracy always defined"));
        match (o.metrics.recall, o.metrics.precision, o.metrics.f_measure) {
            (Some(r), Some(p), Some(f)) => {
                recall.push(r);
                precision.push(p);
                f_measure.push(f);
            }
            _ => undefined += 1,
        }
        auc.push(o.auc);
        pooled_scores.extend(o.scores);
        pooled_labels.extend(o.labels);
    }
    let (roc_points, _) = roc_auc(&pooled_scores, &pooled_labels)?;
    Ok(CvSummary {
        accuracy: mean_sd(&accuracy),
        recall: mean_sd(&recall),
        precision: mean_sd(&precision),
        f_measure: mean_sd(&f_measure),
        auc: mean_sd(&auc),
        roc_points,
        undefined_metric_repeats: undefined,
    })
}
