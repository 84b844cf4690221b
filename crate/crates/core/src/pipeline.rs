//! End-to-end orchestration: cohort directory → preprocessing → CCA
//! artifact removal → multi-scale entropy → relative profiles →
//! transitional variance → group statistics with FDR → classification.
//!
//! Layout: the data directory holds one subdirectory per recording session
//! (`rest_1..3.csv`, `ssvep_1..5.csv`) and a `labels.csv` manifest with
//! header `recording_id,subject_id,group,phase`. All intermediates are
//! persisted as CSVs that the standalone subcommands can re-read, and the
//! whole run is byte-reproducible for a given (config, data, seed).

use crate::cca::{cca_solve, denoise, make_template};
use crate::classify::{
    cross_validate, CvConfig, CvSummary, ModelKind, Phase, SubjectFeatures, TrainConfig,
};
use crate::emd::SiftConfig;
use crate::entropy::{
    aggregate_sessions, multiscale_profile_with, relative_profile, transitional_variance,
    EntropyParams, EntropyProfile, Method, Region, RelativeProfile,
};
use crate::io::{
    fmt_f64, read_signal_csv, read_table, write_profile_csv, write_table, CsvError,
};
use crate::signal::{
    decimate, fir_bandpass, reject_artifacts, ArtifactDecision, Condition, MultiChannelEpoch,
    TimeSeries,
};
use crate::stats::{fdr, FdrMethod, TTestKind, t_test};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const OCCIPITAL: [&str; 3] = ["O1", "Oz", "O2"];
pub const PREFRONTAL: &str = "Fpz";
pub const DEFAULT_FEATURE_SCALES: [usize; 10] = [1, 2, 11, 12, 13, 14, 17, 18, 19, 20];

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("layout: {0}")]
    Layout(String),
    #[error("{recording}: missing epoch file {epoch}")]
    MissingEpoch { recording: String, epoch: String },
    #[error("{recording}/{epoch}: {message}")]
    Stage {
        recording: String,
        epoch: String,
        message: String,
    },
    #[error("statistics: {0}")]
    Stats(String),
    #[error("classification: {0}")]
    Classify(String),
    #[error(transparent)]
    Csv(#[from] CsvError),
}

/// Where CCA denoising applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcaApply {
    Ssvep,
    All,
    None,
}

impl CcaApply {
    pub fn parse(s: &str) -> Option<CcaApply> {
        match s {
            "ssvep" => Some(CcaApply::Ssvep),
            "all" => Some(CcaApply::All),
            "none" => Some(CcaApply::None),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CcaApply::Ssvep => "ssvep",
            CcaApply::All => "all",
            CcaApply::None => "none",
        }
    }
}

/// Full pipeline configuration; defaults reproduce the recording protocol
/// (250 Hz, 1–30 Hz band, 20 scales, 15 Hz stimulus, 3 folds × 100
/// repeats, feature scales {1,2,11..14,17..20}).
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub seed: u64,
    pub workers: usize,
    // preprocessing
    pub band_low: f64,
    pub band_high: f64,
    pub fir_taps: usize,
    pub decimate: usize,
    pub artifact_limit: f64,
    // entropy
    pub method: Method,
    pub m: usize,
    pub n: f64,
    pub r: f64,
    pub scales: usize,
    pub detrend_cutoff: f64,
    pub sd_threshold: f64,
    pub max_imfs: usize,
    pub max_sift: usize,
    // CCA
    pub cca_f1: f64,
    pub cca_keep: usize,
    pub cca_apply: CcaApply,
    // stats
    pub alpha: f64,
    pub fdr: FdrMethod,
    // classification
    pub model: ModelKind,
    pub folds: usize,
    pub repeats: usize,
    pub knn_k: usize,
    pub boost_rounds: usize,
    pub tune: bool,
    pub feature_scales: Vec<usize>,
    // outputs
    pub keep_signals: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            workers: 0,
            band_low: 1.0,
            band_high: 30.0,
            fir_taps: crate::signal::DEFAULT_FIR_TAPS,
            decimate: 1,
            artifact_limit: crate::signal::DEFAULT_AMP_LIMIT_UV,
            method: Method::InherentFuzzEn,
            m: 2,
            n: 2.0,
            r: 0.2,
            scales: 20,
            detrend_cutoff: 1.0,
            sd_threshold: 0.2,
            max_imfs: 12,
            max_sift: 100,
            cca_f1: 15.0,
            cca_keep: 2,
            cca_apply: CcaApply::Ssvep,
            alpha: 0.05,
            fdr: FdrMethod::BenjaminiHochberg,
            model: ModelKind::AdaBoost,
            folds: 3,
            repeats: 100,
            knn_k: 3,
            boost_rounds: 8,
            tune: true,
            feature_scales: DEFAULT_FEATURE_SCALES.to_vec(),
            keep_signals: false,
        }
    }
}

impl PipelineConfig {
    /// Parse the flat `key = value` config format; unknown keys are errors.
    pub fn parse(text: &str) -> Result<PipelineConfig, PipelineError> {
        let mut cfg = PipelineConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                PipelineError::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| PipelineError::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Set a single key. Used by both the config parser and CLI overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
            value
                .parse()
                .map_err(|_| format!("bad value for {key}: {value:?}"))
        }
        match key {
            "seed" => self.seed = num(key, value)?,
            "workers" => self.workers = num(key, value)?,
            "band_low" => self.band_low = num(key, value)?,
            "band_high" => self.band_high = num(key, value)?,
            "fir_taps" => self.fir_taps = num(key, value)?,
            "decimate" => self.decimate = num(key, value)?,
            "artifact_limit" => self.artifact_limit = num(key, value)?,
            "method" => {
                self.method = Method::parse(value)
                    .ok_or_else(|| format!("unknown method {value:?}"))?
            }
            "m" => self.m = num(key, value)?,
            "n" => self.n = num(key, value)?,
            "r" => self.r = num(key, value)?,
            "scales" => self.scales = num(key, value)?,
            "detrend_cutoff" => self.detrend_cutoff = num(key, value)?,
            "sd_threshold" => self.sd_threshold = num(key, value)?,
            "max_imfs" => self.max_imfs = num(key, value)?,
            "max_sift" => self.max_sift = num(key, value)?,
            "cca_f1" => self.cca_f1 = num(key, value)?,
            "cca_keep" => self.cca_keep = num(key, value)?,
            "cca_apply" => {
                self.cca_apply = CcaApply::parse(value)
                    .ok_or_else(|| format!("unknown cca_apply {value:?}"))?
            }
            "alpha" => self.alpha = num(key, value)?,
            "fdr" => {
                self.fdr = match value {
                    "bh" => FdrMethod::BenjaminiHochberg,
                    "by" => FdrMethod::BenjaminiYekutieli,
                    _ => return Err(format!("unknown fdr {value:?} (expected bh or by)")),
                }
            }
            "model" => {
                self.model = ModelKind::parse(value)
                    .ok_or_else(|| format!("unknown model {value:?}"))?
            }
            "folds" => self.folds = num(key, value)?,
            "repeats" => self.repeats = num(key, value)?,
            "knn_k" => self.knn_k = num(key, value)?,
            "boost_rounds" => self.boost_rounds = num(key, value)?,
            "tune" => {
                self.tune = match value {
                    "true" => true,
                    "false" => false,
                    _ => return Err(format!("bad value for tune: {value:?}")),
                }
            }
            "feature_scales" => {
                let scales: Result<Vec<usize>, _> =
                    value.split(',').map(|s| s.trim().parse()).collect();
                self.feature_scales =
                    scales.map_err(|_| format!("bad feature_scales: {value:?}"))?;
            }
            "keep_signals" => {
                self.keep_signals = match value {
                    "true" => true,
                    "false" => false,
                    _ => return Err(format!("bad value for keep_signals: {value:?}")),
                }
            }
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let err = |m: String| Err(PipelineError::Config(m));
        if !(self.band_low > 0.0 && self.band_low < self.band_high) {
            return err(format!(
                "band must satisfy 0 < low < high, got {}..{}",
                self.band_low, self.band_high
            ));
        }
        if self.decimate == 0 {
            return err("decimate must be >= 1".into());
        }
        if self.scales == 0 {
            return err("scales must be >= 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return err(format!("alpha must be in (0, 1), got {}", self.alpha));
        }
        if self.feature_scales.is_empty() {
            return err("feature_scales must not be empty".into());
        }
        if let Some(&s) = self.feature_scales.iter().find(|&&s| s == 0 || s > self.scales) {
            return err(format!("feature scale {s} outside 1..{}", self.scales));
        }
        if self.folds < 2 {
            return err("folds must be >= 2".into());
        }
        if self.repeats == 0 {
            return err("repeats must be >= 1".into());
        }
        Ok(())
    }

    fn entropy_params(&self) -> EntropyParams {
        EntropyParams {
            m: self.m,
            n: self.n,
            r: self.r,
        }
    }

    fn sift_config(&self) -> SiftConfig {
        SiftConfig {
            sd_threshold: self.sd_threshold,
            max_sift_iterations: self.max_sift,
            max_imfs: self.max_imfs,
        }
    }
}

/// Manifest row.
#[derive(Debug, Clone)]
pub struct ManifestEntry {
    pub recording_id: String,
    pub subject_id: String,
    pub group: String,
    pub phase: Option<Phase>,
}

/// Read `labels.csv` from a cohort directory.
pub fn read_manifest(data_dir: &Path) -> Result<Vec<ManifestEntry>, PipelineError> {
    let path = data_dir.join("labels.csv");
    if !path.exists() {
        return Err(PipelineError::Layout(format!(
            "missing labels manifest {}",
            path.display()
        )));
    }
    let rows = read_table(&path, "recording_id,subject_id,group,phase")?;
    let mut entries = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        if row.len() != 4 {
            return Err(PipelineError::Layout(format!(
                "labels.csv row {}: expected 4 fields",
                i + 2
            )));
        }
        let phase = match row[3].as_str() {
            "none" => None,
            s => Some(Phase::parse(s).ok_or_else(|| {
                PipelineError::Layout(format!("labels.csv row {}: unknown phase {s:?}", i + 2))
            })?),
        };
        entries.push(ManifestEntry {
            recording_id: row[0].clone(),
            subject_id: row[1].clone(),
            group: row[2].clone(),
            phase,
        });
    }
    if entries.is_empty() {
        return Err(PipelineError::Layout("labels.csv lists no recordings".into()));
    }
    Ok(entries)
}

/// Per-recording pipeline products.
#[derive(Debug, Clone)]
pub struct RecordingResult {
    pub meta: ManifestEntry,
    pub baseline: BTreeMap<&'static str, EntropyProfile>,
    pub re_trials: BTreeMap<&'static str, Vec<RelativeProfile>>,
    pub tv: BTreeMap<&'static str, Vec<Option<f64>>>,
    pub cca_correlations: Vec<Vec<f64>>,
    pub notes: Vec<String>,
}

/// One scale's test row in a panel.
#[derive(Debug, Clone)]
pub struct ScaleTest {
    pub scale: usize,
    pub statistic: Option<f64>,
    pub df: Option<f64>,
    pub p: Option<f64>,
    pub adjusted_p: Option<f64>,
    pub rejected: bool,
}

/// A named family of per-scale tests, FDR-corrected together.
#[derive(Debug, Clone)]
pub struct Panel {
    pub name: String,
    pub region: &'static str,
    pub rows: Vec<ScaleTest>,
}

impl Panel {
    pub fn significant_scales(&self) -> Vec<usize> {
        self.rows
            .iter()
            .filter(|r| r.rejected)
            .map(|r| r.scale)
            .collect()
    }
}

/// Aggregated run products.
#[derive(Debug)]
pub struct RunReport {
    pub recordings: Vec<RecordingResult>,
    pub panels: Vec<Panel>,
    pub cv: Option<CvSummary>,
    /// Seed the classification stage ran with (derived from the run seed);
    /// feeding it to the standalone classify subcommand reproduces
    /// `cv_summary.csv` byte for byte.
    pub classify_seed: u64,
    pub notes: Vec<String>,
}

fn stage_err(recording: &str, epoch: &str, message: impl std::fmt::Display) -> PipelineError {
    PipelineError::Stage {
        recording: recording.to_string(),
        epoch: epoch.to_string(),
        message: message.to_string(),
    }
}

fn load_epoch(
    dir: &Path,
    recording: &str,
    file: &str,
    condition: Condition,
) -> Result<MultiChannelEpoch, PipelineError> {
    let path = dir.join(file);
    if !path.exists() {
        return Err(PipelineError::MissingEpoch {
            recording: recording.to_string(),
            epoch: file.to_string(),
        });
    }
    let channels = read_signal_csv(&path)?;
    for want in OCCIPITAL.iter().chain([&PREFRONTAL]) {
        if !channels.iter().any(|(n, _)| n == want) {
            return Err(stage_err(recording, file, format!("missing channel {want}")));
        }
    }
    MultiChannelEpoch::new(channels, condition).map_err(|e| stage_err(recording, file, e))
}

fn preprocess_epoch(
    cfg: &PipelineConfig,
    epoch: &MultiChannelEpoch,
    recording: &str,
    file: &str,
) -> Result<MultiChannelEpoch, PipelineError> {
    let decimated = epoch
        .map_channels(|_, ts| decimate(ts, cfg.decimate))
        .map_err(|e| stage_err(recording, file, e))?;
    decimated
        .map_channels(|_, ts| fir_bandpass(ts, cfg.band_low, cfg.band_high, cfg.fir_taps))
        .map_err(|e| stage_err(recording, file, e))
}

fn region_profile(
    cfg: &PipelineConfig,
    epoch: &MultiChannelEpoch,
    region: Region,
    recording: &str,
    file: &str,
) -> Result<EntropyProfile, PipelineError> {
    let names: Vec<&str> = match region {
        Region::Occipital => OCCIPITAL.to_vec(),
        Region::Prefrontal => vec![PREFRONTAL],
    };
    let profiles: Vec<EntropyProfile> = names
        .iter()
        .map(|name| {
            let ts = epoch.channel(name).expect("validated channel");
            multiscale_profile_with(
                ts,
                cfg.method,
                &cfg.entropy_params(),
                cfg.scales,
                &cfg.sift_config(),
                cfg.detrend_cutoff,
            )
            .map_err(|e| stage_err(recording, file, format!("{name}: {e}")))
        })
        .collect::<Result<_, _>>()?;
    aggregate_sessions(&profiles).map_err(|e| stage_err(recording, file, e))
}

const REGION_NAMES: [(&str, Region); 2] =
    [("occipital", Region::Occipital), ("prefrontal", Region::Prefrontal)];

/// Run the full pipeline for one recording session.
fn process_recording(
    cfg: &PipelineConfig,
    data_dir: &Path,
    out_dir: &Path,
    meta: &ManifestEntry,
) -> Result<RecordingResult, PipelineError> {
    let rec = &meta.recording_id;
    let dir = data_dir.join(rec);
    if !dir.is_dir() {
        return Err(PipelineError::Layout(format!(
            "recording directory {} not found",
            dir.display()
        )));
    }
    let mut notes = Vec::new();

    // load + preprocess
    let mut rest = Vec::new();
    for i in 1..=3 {
        let file = format!("rest_{i}.csv");
        let epoch = load_epoch(&dir, rec, &file, Condition::RestingEyesClosed)?;
        rest.push((file, epoch));
    }
    let mut ssvep = Vec::new();
    for k in 1..=5u8 {
        let file = format!("ssvep_{k}.csv");
        let epoch = load_epoch(&dir, rec, &file, Condition::SsvepTrial(k))?;
        ssvep.push((file, epoch));
    }

    let mut kept_rest = Vec::new();
    for (file, epoch) in &rest {
        let pre = preprocess_epoch(cfg, epoch, rec, file)?;
        match reject_artifacts(&pre, cfg.artifact_limit).map_err(|e| stage_err(rec, file, e))? {
            ArtifactDecision::Accepted => kept_rest.push((file.clone(), pre)),
            ArtifactDecision::Rejected { channel, index, .. } => {
                notes.push(format!("{rec}/{file}: rejected (|amp| > limit at {channel}[{index}])"));
            }
        }
    }
    if kept_rest.is_empty() {
        return Err(stage_err(rec, "rest_*", "all resting epochs rejected"));
    }

    let mut kept_ssvep = Vec::new();
    let mut cca_correlations = Vec::new();
    for (file, epoch) in &ssvep {
        let pre = preprocess_epoch(cfg, epoch, rec, file)?;
        match reject_artifacts(&pre, cfg.artifact_limit).map_err(|e| stage_err(rec, file, e))? {
            ArtifactDecision::Rejected { channel, index, .. } => {
                return Err(stage_err(
                    rec,
                    file,
                    format!("stimulus epoch rejected (|amp| > limit at {channel}[{index}])"),
                ));
            }
            ArtifactDecision::Accepted => {}
        }
        let denoise_this = matches!(cfg.cca_apply, CcaApply::Ssvep | CcaApply::All);
        let cleaned = if denoise_this {
            let tmpl = make_template(cfg.cca_f1, pre.len(), pre.sample_rate())
                .map_err(|e| stage_err(rec, file, e))?;
            let sol = cca_solve(&pre, &tmpl).map_err(|e| stage_err(rec, file, e))?;
            cca_correlations.push(sol.correlations.clone());
            denoise(&pre, &sol, cfg.cca_keep).map_err(|e| stage_err(rec, file, e))?
        } else {
            cca_correlations.push(Vec::new());
            pre
        };
        kept_ssvep.push((file.clone(), cleaned));
    }

    // also denoise resting epochs when requested
    if cfg.cca_apply == CcaApply::All {
        let mut denoised_rest = Vec::with_capacity(kept_rest.len());
        for (file, epoch) in kept_rest {
            let tmpl = make_template(cfg.cca_f1, epoch.len(), epoch.sample_rate())
                .map_err(|e| stage_err(rec, &file, e))?;
            let sol = cca_solve(&epoch, &tmpl).map_err(|e| stage_err(rec, &file, e))?;
            let cleaned =
                denoise(&epoch, &sol, cfg.cca_keep).map_err(|e| stage_err(rec, &file, e))?;
            denoised_rest.push((file, cleaned));
        }
        kept_rest = denoised_rest;
    }

    let rec_out = out_dir.join("recordings").join(rec);
    std::fs::create_dir_all(&rec_out).map_err(|e| PipelineError::Csv(CsvError::Io {
        path: rec_out.display().to_string(),
        source: e,
    }))?;

    if cfg.keep_signals {
        let sig_dir = rec_out.join("signals");
        std::fs::create_dir_all(&sig_dir).map_err(|e| PipelineError::Csv(CsvError::Io {
            path: sig_dir.display().to_string(),
            source: e,
        }))?;
        for (file, epoch) in kept_rest.iter().chain(&kept_ssvep) {
            let channels: Vec<(String, &TimeSeries)> = epoch
                .channels()
                .iter()
                .map(|(n, ts)| (n.clone(), ts))
                .collect();
            crate::io::write_signal_csv(&sig_dir.join(file), &channels)?;
        }
    }

    // entropy per region
    let mut baseline = BTreeMap::new();
    let mut re_trials: BTreeMap<&'static str, Vec<RelativeProfile>> = BTreeMap::new();
    let mut tv = BTreeMap::new();
    for (region_name, region) in REGION_NAMES {
        let rest_profiles: Vec<EntropyProfile> = kept_rest
            .iter()
            .map(|(file, epoch)| region_profile(cfg, epoch, region, rec, file))
            .collect::<Result<_, _>>()?;
        let base = aggregate_sessions(&rest_profiles)
            .map_err(|e| stage_err(rec, "rest_*", e))?;
        let mut trials = Vec::with_capacity(5);
        for (file, epoch) in &kept_ssvep {
            let prof = region_profile(cfg, epoch, region, rec, file)?;
            let re = relative_profile(&prof, &base)
                .map_err(|e| stage_err(rec, file, e))?
                .with_region(region);
            trials.push(re);
        }
        let variance = transitional_variance(&trials[0], &trials[4])
            .map_err(|e| stage_err(rec, "ssvep_*", e))?;

        write_profile_csv(&rec_out.join(format!("baseline_{region_name}.csv")), base.values())?;
        let re_rows: Vec<Vec<String>> = (0..cfg.scales)
            .map(|s| {
                let mut row = vec![(s + 1).to_string()];
                for trial in &trials {
                    row.push(match trial.values()[s] {
                        Some(v) => fmt_f64(v),
                        None => "NA".to_string(),
                    });
                }
                row
            })
            .collect();
        write_table(
            &rec_out.join(format!("re_{region_name}.csv")),
            "scale,re1,re2,re3,re4,re5",
            &re_rows,
        )?;
        write_profile_csv(&rec_out.join(format!("tv_{region_name}.csv")), &variance)?;

        baseline.insert(region_name, base);
        re_trials.insert(region_name, trials);
        tv.insert(region_name, variance);
    }

    // CCA sidecar
    let cca_rows: Vec<Vec<String>> = cca_correlations
        .iter()
        .enumerate()
        .map(|(k, rhos)| {
            let mut row = vec![(k + 1).to_string()];
            for i in 0..4 {
                row.push(rhos.get(i).map_or("NA".to_string(), |r| fmt_f64(*r)));
            }
            row
        })
        .collect();
    write_table(
        &rec_out.join("cca_correlations.csv"),
        "trial,rho1,rho2,rho3,rho4",
        &cca_rows,
    )?;

    Ok(RecordingResult {
        meta: meta.clone(),
        baseline,
        re_trials,
        tv,
        cca_correlations,
        notes,
    })
}

/// Per-(subject, cohort-arm) averaged values for group statistics.
struct SubjectArm {
    subject_id: String,
    tv: BTreeMap<&'static str, Vec<Option<f64>>>,
    re1: BTreeMap<&'static str, Vec<Option<f64>>>,
    re5: BTreeMap<&'static str, Vec<Option<f64>>>,
}

fn mean_defined(rows: &[Vec<Option<f64>>]) -> Vec<Option<f64>> {
    let scales = rows[0].len();
    (0..scales)
        .map(|s| {
            let mut acc = 0.0;
            for row in rows {
                acc += row[s]?;
            }
            Some(acc / rows.len() as f64)
        })
        .collect()
}

/// Average recording-level outputs per (subject, arm).
fn collect_arm(results: &[RecordingResult], group: &str, phase: Option<Phase>) -> Vec<SubjectArm> {
    let mut by_subject: BTreeMap<String, Vec<&RecordingResult>> = BTreeMap::new();
    for r in results {
        if r.meta.group == group && r.meta.phase == phase {
            by_subject
                .entry(r.meta.subject_id.clone())
                .or_default()
                .push(r);
        }
    }
    by_subject
        .into_iter()
        .map(|(subject_id, recs)| {
            let mut tv = BTreeMap::new();
            let mut re1 = BTreeMap::new();
            let mut re5 = BTreeMap::new();
            for (region_name, _) in REGION_NAMES {
                let tvs: Vec<Vec<Option<f64>>> =
                    recs.iter().map(|r| r.tv[region_name].clone()).collect();
                tv.insert(region_name, mean_defined(&tvs));
                let re1s: Vec<Vec<Option<f64>>> = recs
                    .iter()
                    .map(|r| r.re_trials[region_name][0].values().to_vec())
                    .collect();
                re1.insert(region_name, mean_defined(&re1s));
                let re5s: Vec<Vec<Option<f64>>> = recs
                    .iter()
                    .map(|r| r.re_trials[region_name][4].values().to_vec())
                    .collect();
                re5.insert(region_name, mean_defined(&re5s));
            }
            SubjectArm {
                subject_id,
                tv,
                re1,
                re5,
            }
        })
        .collect()
}

enum PanelKind<'a> {
    /// Within-subject comparison of two per-scale vectors.
    Paired(Vec<(&'a [Option<f64>], &'a [Option<f64>])>),
    /// Between-group comparison of one per-scale vector each.
    Independent(Vec<&'a [Option<f64>]>, Vec<&'a [Option<f64>]>),
}

fn build_panel(
    name: &str,
    region: &'static str,
    scales: usize,
    kind: PanelKind<'_>,
    alpha: f64,
    method: FdrMethod,
    notes: &mut Vec<String>,
) -> Panel {
    let mut rows: Vec<ScaleTest> = Vec::with_capacity(scales);
    let mut skipped = 0usize;
    for s in 0..scales {
        let result = match &kind {
            PanelKind::Paired(pairs) => {
                let mut a = Vec::new();
                let mut b = Vec::new();
                for (va, vb) in pairs {
                    if let (Some(x), Some(y)) = (va[s], vb[s]) {
                        a.push(x);
                        b.push(y);
                    }
                }
                if a.len() < 2 {
                    None
                } else {
                    t_test(&a, &b, TTestKind::Paired).ok()
                }
            }
            PanelKind::Independent(ga, gb) => {
                let a: Vec<f64> = ga.iter().filter_map(|v| v[s]).collect();
                let b: Vec<f64> = gb.iter().filter_map(|v| v[s]).collect();
                if a.len() < 2 || b.len() < 2 {
                    None
                } else {
                    t_test(&a, &b, TTestKind::Independent).ok()
                }
            }
        };
        match result {
            Some(t) => rows.push(ScaleTest {
                scale: s + 1,
                statistic: Some(t.statistic),
                df: Some(t.degrees_of_freedom),
                p: Some(t.p_value),
                adjusted_p: None,
                rejected: false,
            }),
            None => {
                skipped += 1;
                rows.push(ScaleTest {
                    scale: s + 1,
                    statistic: None,
                    df: None,
                    p: None,
                    adjusted_p: None,
                    rejected: false,
                });
            }
        }
    }
    if skipped > 0 {
        notes.push(format!(
            "panel {name} ({region}): {skipped} of {scales} scales skipped (undefined or degenerate)"
        ));
    }
    let defined: Vec<(usize, f64)> = rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.p.map(|p| (i, p)))
        .collect();
    if !defined.is_empty() {
        let ps: Vec<f64> = defined.iter().map(|(_, p)| *p).collect();
        if let Ok(outcome) = fdr(&ps, alpha, method) {
            for ((row_idx, _), (adj, rej)) in defined
                .iter()
                .zip(outcome.adjusted_p.iter().zip(&outcome.rejected))
            {
                rows[*row_idx].adjusted_p = Some(*adj);
                rows[*row_idx].rejected = *rej;
            }
        }
    }
    Panel {
        name: name.to_string(),
        region,
        rows,
    }
}

/// Write per-scale test rows as `scale,t,df,p,adjusted_p,rejected`.
pub fn write_scale_tests_csv(path: &Path, rows: &[ScaleTest]) -> Result<(), CsvError> {
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let opt = |v: Option<f64>| v.map_or("NA".to_string(), fmt_f64);
            vec![
                r.scale.to_string(),
                opt(r.statistic),
                opt(r.df),
                opt(r.p),
                opt(r.adjusted_p),
                r.rejected.to_string(),
            ]
        })
        .collect();
    write_table(path, "scale,t,df,p,adjusted_p,rejected", &table)
}

/// Write a cross-validation summary row.
pub fn write_cv_summary_csv(
    path: &Path,
    model: ModelKind,
    folds: usize,
    repeats: usize,
    summary: &CvSummary,
) -> Result<(), CsvError> {
    let mut row = vec![
        model.name().to_string(),
        folds.to_string(),
        repeats.to_string(),
    ];
    for ms in [
        summary.accuracy,
        summary.recall,
        summary.precision,
        summary.f_measure,
        summary.auc,
    ] {
        row.push(fmt_f64(ms.mean));
        row.push(fmt_f64(ms.sd));
    }
    write_table(
        path,
        "model,folds,repeats,accuracy_mean,accuracy_sd,recall_mean,recall_sd,precision_mean,precision_sd,f_measure_mean,f_measure_sd,auc_mean,auc_sd",
        &[row],
    )
}

/// Write pooled ROC points as `fpr,tpr`.
pub fn write_roc_csv(path: &Path, points: &[(f64, f64)]) -> Result<(), CsvError> {
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|(fpr, tpr)| vec![fmt_f64(*fpr), fmt_f64(*tpr)])
        .collect();
    write_table(path, "fpr,tpr", &rows)
}

fn write_panel(out_dir: &Path, panel: &Panel) -> Result<(), CsvError> {
    write_scale_tests_csv(
        &out_dir.join(format!("stats_{}_{}.csv", panel.region, panel.name)),
        &panel.rows,
    )
}

/// Run the whole pipeline over a cohort directory, writing all outputs
/// under `out_dir` and returning the in-memory report.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    data_dir: &Path,
    out_dir: &Path,
) -> Result<RunReport, PipelineError> {
    cfg.validate()?;
    if cfg.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| PipelineError::Config(format!("worker pool: {e}")))?;
        pool.install(|| run_pipeline_inner(cfg, data_dir, out_dir))
    } else {
        run_pipeline_inner(cfg, data_dir, out_dir)
    }
}

fn run_pipeline_inner(
    cfg: &PipelineConfig,
    data_dir: &Path,
    out_dir: &Path,
) -> Result<RunReport, PipelineError> {
    let mut manifest = read_manifest(data_dir)?;
    manifest.sort_by(|a, b| a.recording_id.cmp(&b.recording_id));
    std::fs::create_dir_all(out_dir).map_err(|e| PipelineError::Csv(CsvError::Io {
        path: out_dir.display().to_string(),
        source: e,
    }))?;

    let outcomes: Vec<Result<RecordingResult, PipelineError>> = manifest
        .par_iter()
        .map(|meta| process_recording(cfg, data_dir, out_dir, meta))
        .collect();
    let mut recordings = Vec::with_capacity(outcomes.len());
    let mut notes = Vec::new();
    for outcome in outcomes {
        let r = outcome?;
        notes.extend(r.notes.clone());
        recordings.push(r);
    }

    // group statistics
    let hc = collect_arm(&recordings, "hc", None);
    let inter = collect_arm(&recordings, "patient", Some(Phase::InterIctal));
    let pre = collect_arm(&recordings, "patient", Some(Phase::PreIctal));

    // per-arm matrices (subject × scale), consumable by the stats subcommand
    for (region_name, _) in REGION_NAMES {
        for (arm_name, arm) in [("hc", &hc), ("interictal", &inter), ("preictal", &pre)] {
            if arm.is_empty() {
                continue;
            }
            for (kind, pick) in [
                ("tv", 0usize),
                ("re1", 1),
                ("re5", 2),
            ] {
                let rows: Vec<Vec<String>> = arm
                    .iter()
                    .map(|s| {
                        let values = match pick {
                            0 => &s.tv[region_name],
                            1 => &s.re1[region_name],
                            _ => &s.re5[region_name],
                        };
                        let mut row = vec![s.subject_id.clone()];
                        row.extend(
                            values
                                .iter()
                                .map(|v| v.map_or("NA".to_string(), fmt_f64)),
                        );
                        row
                    })
                    .collect();
                let mut header = String::from("subject_id");
                for s in 1..=cfg.scales {
                    header.push_str(&format!(",s{s}"));
                }
                write_table(
                    &out_dir.join(format!("matrix_{region_name}_{arm_name}_{kind}.csv")),
                    &header,
                    &rows,
                )?;
            }
        }
    }

    let mut panels = Vec::new();
    for (region_name, _) in REGION_NAMES {
        for (panel_name, arm) in [
            ("hc_re5_vs_re1", &hc),
            ("inter_re5_vs_re1", &inter),
            ("pre_re5_vs_re1", &pre),
        ] {
            let pairs: Vec<(&[Option<f64>], &[Option<f64>])> = arm
                .iter()
                .map(|s| (&s.re5[region_name][..], &s.re1[region_name][..]))
                .collect();
            if pairs.len() >= 2 {
                panels.push(build_panel(
                    panel_name,
                    region_name,
                    cfg.scales,
                    PanelKind::Paired(pairs),
                    cfg.alpha,
                    cfg.fdr,
                    &mut notes,
                ));
            }
        }
        // paired pre vs inter transitional variance across patients
        let mut paired_tv: Vec<(&[Option<f64>], &[Option<f64>])> = Vec::new();
        for p_arm in &pre {
            if let Some(i_arm) = inter.iter().find(|a| a.subject_id == p_arm.subject_id) {
                paired_tv.push((&p_arm.tv[region_name][..], &i_arm.tv[region_name][..]));
            }
        }
        if paired_tv.len() >= 2 {
            panels.push(build_panel(
                "tv_pre_vs_inter",
                region_name,
                cfg.scales,
                PanelKind::Paired(paired_tv),
                cfg.alpha,
                cfg.fdr,
                &mut notes,
            ));
        }
        for (panel_name, ga, gb) in [
            ("tv_pre_vs_hc", &pre, &hc),
            ("tv_inter_vs_hc", &inter, &hc),
        ] {
            if ga.len() >= 2 && gb.len() >= 2 {
                let a: Vec<&[Option<f64>]> =
                    ga.iter().map(|s| &s.tv[region_name][..]).collect();
                let b: Vec<&[Option<f64>]> =
                    gb.iter().map(|s| &s.tv[region_name][..]).collect();
                panels.push(build_panel(
                    panel_name,
                    region_name,
                    cfg.scales,
                    PanelKind::Independent(a, b),
                    cfg.alpha,
                    cfg.fdr,
                    &mut notes,
                ));
            }
        }
        if pre.len() >= 2 && hc.len() >= 2 {
            let a: Vec<&[Option<f64>]> = pre.iter().map(|s| &s.re1[region_name][..]).collect();
            let b: Vec<&[Option<f64>]> = hc.iter().map(|s| &s.re1[region_name][..]).collect();
            panels.push(build_panel(
                "re1_pre_vs_hc",
                region_name,
                cfg.scales,
                PanelKind::Independent(a, b),
                cfg.alpha,
                cfg.fdr,
                &mut notes,
            ));
        }
    }
    for panel in &panels {
        write_panel(out_dir, panel)?;
    }

    // classification features: occipital transitional variance of patients
    let mut features = Vec::new();
    let mut feature_notes = 0usize;
    for (arm, label) in [(&inter, Phase::InterIctal), (&pre, Phase::PreIctal)] {
        for subject in arm.iter() {
            let tv = &subject.tv["occipital"];
            let vec: Option<Vec<f64>> = cfg
                .feature_scales
                .iter()
                .map(|&s| tv[s - 1])
                .collect();
            match vec {
                Some(f) => features.push(SubjectFeatures {
                    subject_id: subject.subject_id.clone(),
                    label,
                    features: f,
                }),
                None => feature_notes += 1,
            }
        }
    }
    if feature_notes > 0 {
        notes.push(format!(
            "{feature_notes} subject arms excluded from classification (undefined feature scales)"
        ));
    }
    crate::io::write_features_csv(&out_dir.join("features.csv"), &features)?;

    let n_pos = features.iter().filter(|f| f.label == Phase::PreIctal).count();
    let n_neg = features.len() - n_pos;
    let classify_seed = crate::rng::derive_seed(cfg.seed, "classify");
    let cv = if n_pos >= cfg.folds && n_neg >= cfg.folds {
        let cv_cfg = CvConfig {
            folds: cfg.folds,
            repeats: cfg.repeats,
            tune: cfg.tune,
        };
        let train_cfg = TrainConfig {
            knn_k: cfg.knn_k,
            boost_rounds: cfg.boost_rounds,
            ..TrainConfig::default()
        };
        let summary = cross_validate(cfg.model, &features, &cv_cfg, &train_cfg, classify_seed)
            .map_err(|e| PipelineError::Classify(e.to_string()))?;
        write_cv_summary_csv(
            &out_dir.join("cv_summary.csv"),
            cfg.model,
            cfg.folds,
            cfg.repeats,
            &summary,
        )?;
        write_roc_csv(&out_dir.join("roc_points.csv"), &summary.roc_points)?;
        Some(summary)
    } else {
        notes.push(format!(
            "classification skipped: {n_pos} pre-ictal / {n_neg} inter-ictal feature vectors for {} folds",
            cfg.folds
        ));
        None
    };

    let report = RunReport {
        recordings,
        panels,
        cv,
        classify_seed,
        notes,
    };
    std::fs::write(out_dir.join("report.txt"), report.render_text())
        .map_err(|e| PipelineError::Csv(CsvError::Io {
            path: out_dir.join("report.txt").display().to_string(),
            source: e,
        }))?;
    Ok(report)
}

impl RunReport {
    /// Deterministic human-readable summary.
    pub fn render_text(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let _ = writeln!(out, "recordings processed: {}", self.recordings.len());
        for panel in &self.panels {
            let sig = panel.significant_scales();
            let _ = writeln!(
                out,
                "panel {} [{}]: {} significant scale(s){}{}",
                panel.name,
                panel.region,
                sig.len(),
                if sig.is_empty() { "" } else { ": " },
                sig.iter()
                    .map(|s| s.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            );
        }
        match &self.cv {
            Some(cv) => {
                let _ = writeln!(
                    out,
                    "cross-validation: accuracy {:.3} ({:.3}), recall {:.3} ({:.3}), precision {:.3} ({:.3}), F {:.3} ({:.3}), AUC {:.3} ({:.3})",
                    cv.accuracy.mean,
                    cv.accuracy.sd,
                    cv.recall.mean,
                    cv.recall.sd,
                    cv.precision.mean,
                    cv.precision.sd,
                    cv.f_measure.mean,
                    cv.f_measure.sd,
                    cv.auc.mean,
                    cv.auc.sd
                );
                let _ = writeln!(out, "classification seed: {}", self.classify_seed);
            }
            None => {
                let _ = writeln!(out, "cross-validation: skipped");
            }
        }
        for note in &self.notes {
            let _ = writeln!(out, "note: {note}");
        }
        out
    }

    /// Panel lookup by name and region.
    pub fn panel(&self, region: &str, name: &str) -> Option<&Panel> {
        self.panels
            .iter()
            .find(|p| p.region == region && p.name == name)
    }
}

/// Recursively collect relative paths + content hashes, for
/// reproducibility checks.
pub fn tree_digest(dir: &Path) -> Result<Vec<(String, u64)>, std::io::Error> {
    fn walk(
        base: &Path,
        dir: &Path,
        acc: &mut Vec<(String, u64)>,
    ) -> Result<(), std::io::Error> {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)?
            .map(|e| e.map(|e| e.path()))
            .collect::<Result<_, _>>()?;
        entries.sort();
        for path in entries {
            if path.is_dir() {
                walk(base, &path, acc)?;
            } else {
                let body = std::fs::read(&path)?;
                // FNV-1a over the file body
                let mut h = 0xcbf2_9ce4_8422_2325u64;
                for b in body {
                    h ^= b as u64;
                    h = h.wrapping_mul(0x0000_0100_0000_01b3);
                }
                let rel = path
                    .strip_prefix(base)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                acc.push((rel, h));
            }
        }
        Ok(())
    }
    let mut acc = Vec::new();
    walk(dir, dir, &mut acc)?;
    Ok(acc)
}
