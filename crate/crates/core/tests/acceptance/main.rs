//! Acceptance suite: every release criterion runs here at its stated
//! tolerance, against independent oracles where one is defined, and prints
//! one pass line (visible with `--nocapture`).
//!
//! Heavy sections share a lock so wall-clock budgets are measured without
//! interference from concurrently running criteria.

mod oracles;

use fuzentra_core::cca::{cca_solve, denoise, make_template};
use fuzentra_core::classify::{
    cross_validate, roc_auc, CvConfig, ModelKind, Phase, TrainConfig,
};
use fuzentra_core::emd::{decompose, imf_criterion, SiftConfig};
use fuzentra_core::entropy::{
    approximate_entropy, coarse_grain, fuzzy_entropy, sample_entropy, EntropyParams,
};
use fuzentra_core::math::goertzel_power;
use fuzentra_core::pipeline::{run_pipeline, tree_digest, CcaApply, PipelineConfig};
use fuzentra_core::rng::{seeded_rng, standard_normal};
use fuzentra_core::signal::{Condition, MultiChannelEpoch, TimeSeries};
use fuzentra_core::stats::{fdr_bh, icc_oneway, t_test, TTestKind};
use fuzentra_core::synth::{gen_cohort, gen_feature_cohort, CohortSpec};
use rand::seq::SliceRandom;
use rand::Rng;
use std::sync::Mutex;
use std::time::Instant;

static HEAVY: Mutex<()> = Mutex::new(());

fn heavy_guard() -> std::sync::MutexGuard<'static, ()> {
    HEAVY.lock().unwrap_or_else(|e| e.into_inner())
}

/// 200 seeded test signals, N ≤ 128, mixing noise, tones, trends, and
/// autocorrelated series.
fn signal_suite() -> Vec<Vec<f64>> {
    let mut suite = Vec::with_capacity(200);
    for s in 0..200u64 {
        let mut rng = seeded_rng(0xACCE97 + s);
        let n = 24 + (rng.random::<u32>() % 105) as usize; // 24..=128
        let kind = s % 4;
        let mut x: Vec<f64> = Vec::with_capacity(n);
        let mut prev = 0.0;
        for i in 0..n {
            let g = standard_normal(&mut rng);
            let v = match kind {
                0 => g,
                1 => (i as f64 * 0.37).sin() * 1.5 + 0.4 * g,
                2 => {
                    prev = 0.8 * prev + g;
                    prev
                }
                _ => 0.03 * i as f64 + g,
            };
            x.push(v);
        }
        suite.push(x);
    }
    suite
}

#[test]
fn criterion_1_entropy_oracle_equivalence() {
    let _guard = heavy_guard();
    let start = Instant::now();
    let suite = signal_suite();
    let mut checked = 0usize;
    for x in &suite {
        let ts = TimeSeries::new(x.clone(), 250.0).unwrap();
        for m in [1usize, 2, 3] {
            for r in [0.1, 0.2, 0.3] {
                let params = EntropyParams { m, n: 2.0, r };
                let fz = fuzzy_entropy(&ts, &params).unwrap();
                let fz_o = oracles::naive_fuzzy_entropy(x, m, 2.0, r);
                assert!(
                    (fz - fz_o).abs() <= 1e-10,
                    "fuzzy m={m} r={r}: {fz} vs oracle {fz_o}"
                );
                let ap = approximate_entropy(&ts, m, r).unwrap();
                let ap_o = oracles::naive_approximate_entropy(x, m, r);
                assert!(
                    (ap - ap_o).abs() <= 1e-10,
                    "apen m={m} r={r}: {ap} vs oracle {ap_o}"
                );
                let sp = sample_entropy(&ts, m, r).unwrap();
                let sp_o = oracles::naive_sample_entropy(x, m, r);
                match (sp, sp_o) {
                    (Some(a), Some(b)) => assert!(
                        (a - b).abs() <= 1e-10,
                        "sampen m={m} r={r}: {a} vs oracle {b}"
                    ),
                    (None, None) => {}
                    other => panic!("sampen m={m} r={r}: definedness mismatch {other:?}"),
                }
                checked += 3;
            }
        }
    }
    // worked examples: alternating series and seeded uniform noise at the
    // default parameters, against the same oracles at a tighter tolerance
    let alternating: Vec<f64> = (0..64).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let mut rng = seeded_rng(0x0E1);
    let uniform: Vec<f64> = (0..100).map(|_| rng.random::<f64>()).collect();
    for x in [&alternating, &uniform] {
        let ts = TimeSeries::new(x.clone(), 250.0).unwrap();
        let params = EntropyParams {
            m: 2,
            n: 2.0,
            r: 0.2,
        };
        let fz = fuzzy_entropy(&ts, &params).unwrap();
        assert!((fz - oracles::naive_fuzzy_entropy(x, 2, 2.0, 0.2)).abs() <= 1e-12);
        let ap = approximate_entropy(&ts, 2, 0.2).unwrap();
        assert!((ap - oracles::naive_approximate_entropy(x, 2, 0.2)).abs() <= 1e-12);
    }
    // monotone ramp for approximate entropy
    let ramp: Vec<f64> = (0..50).map(|i| i as f64).collect();
    let ts = TimeSeries::new(ramp.clone(), 250.0).unwrap();
    let ap = approximate_entropy(&ts, 2, 0.2).unwrap();
    assert!((ap - oracles::naive_approximate_entropy(&ramp, 2, 0.2)).abs() <= 1e-12);
    // seeded uniform noise for sample entropy
    let ts = TimeSeries::new(uniform.clone(), 250.0).unwrap();
    let sp = sample_entropy(&ts, 2, 0.2).unwrap().unwrap();
    let sp_o = oracles::naive_sample_entropy(&uniform, 2, 0.2).unwrap();
    assert!((sp - sp_o).abs() <= 1e-12);

    // multi-scale composition: each per-scale value equals the oracle
    // applied to the independently z-scored, coarse-grained series
    let noise: Vec<f64> = {
        let mut rng = seeded_rng(0x0E2);
        (0..400).map(|_| standard_normal(&mut rng)).collect()
    };
    let ts = TimeSeries::new(noise.clone(), 250.0).unwrap();
    let profile = fuzentra_core::entropy::multiscale_profile(
        &ts,
        fuzentra_core::entropy::Method::FuzzEn,
        &EntropyParams::default(),
        5,
    )
    .unwrap();
    let mean = noise.iter().sum::<f64>() / noise.len() as f64;
    let z_sd = oracles::sd(&noise);
    let z: Vec<f64> = noise.iter().map(|v| (v - mean) / z_sd).collect();
    for tau in 1..=5usize {
        let cg: Vec<f64> = (0..z.len() / tau)
            .map(|j| z[j * tau..(j + 1) * tau].iter().sum::<f64>() / tau as f64)
            .collect();
        let want = oracles::naive_fuzzy_entropy(&cg, 2, 2.0, 0.2);
        let got = profile.values()[tau - 1].unwrap();
        assert!(
            (got - want).abs() <= 1e-12,
            "scale {tau}: {got} vs oracle {want}"
        );
    }

    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 30.0,
        "oracle suite took {elapsed:?} (budget 30 s)"
    );
    println!(
        "criterion 1 PASS: {checked} estimator evaluations match naive oracles within 1e-10, worked examples within 1e-12 ({elapsed:?})"
    );
}

#[test]
fn criterion_2_fuzzy_entropy_nonnegative() {
    let suite = signal_suite();
    let mut worst = f64::INFINITY;
    for x in &suite {
        let ts = TimeSeries::new(x.clone(), 250.0).unwrap();
        for m in [1usize, 2, 3] {
            for r in [0.1, 0.2, 0.3] {
                let v = fuzzy_entropy(&ts, &EntropyParams { m, n: 2.0, r }).unwrap();
                worst = worst.min(v);
                assert!(v >= -1e-12, "fuzzy entropy {v} below -1e-12 (m={m}, r={r})");
            }
        }
    }
    println!("criterion 2 PASS: raw fuzzy entropy >= -1e-12 on the whole suite (min {worst:.3e})");
}

#[test]
fn criterion_3_emd_reconstruction_and_separation() {
    let _guard = heavy_guard();
    let cfg = SiftConfig::default();
    for s in 0..100u64 {
        let mut rng = seeded_rng(0xE3D + s);
        let n = 256 + (rng.random::<u32>() % 513) as usize;
        let x: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();
        let (lo, hi) = x
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
        let ts = TimeSeries::new(x.clone(), 250.0).unwrap();
        let d = decompose(&ts, &cfg).unwrap();
        let rec = d.reconstruct();
        let err = x
            .iter()
            .zip(&rec)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        assert!(
            err <= 1e-8 * (hi - lo),
            "seed {s}: reconstruction error {err:e} vs p2p {}",
            hi - lo
        );
        for imf in &d.imfs {
            assert!(imf_criterion(imf.samples()), "seed {s}: stored IMF violates criterion");
        }
    }
    // two-tone separation at the stated thresholds
    let rate = 250.0;
    let n = 1000;
    let fast: Vec<f64> = (0..n)
        .map(|i| (std::f64::consts::TAU * 10.0 * i as f64 / rate).sin())
        .collect();
    let slow: Vec<f64> = (0..n)
        .map(|i| (std::f64::consts::TAU * 1.0 * i as f64 / rate).sin())
        .collect();
    let two_tone: Vec<f64> = fast.iter().zip(&slow).map(|(a, b)| a + b).collect();
    let d = decompose(&TimeSeries::new(two_tone, rate).unwrap(), &cfg).unwrap();
    let pearson = |a: &[f64], b: &[f64]| fuzentra_core::math::pearson(a, b);
    let c_fast = pearson(d.imfs[0].samples(), &fast);
    let c_slow = d
        .imfs
        .iter()
        .skip(1)
        .map(|imf| pearson(imf.samples(), &slow))
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(c_fast >= 0.95, "fast-tone correlation {c_fast}");
    assert!(c_slow >= 0.95, "slow-tone correlation {c_slow}");
    println!(
        "criterion 3 PASS: 100 reconstructions within 1e-8 x peak-to-peak; two-tone correlations {c_fast:.3}/{c_slow:.3}"
    );
}

#[test]
fn criterion_4_coarse_grain_lengths() {
    let mut rng = seeded_rng(0xC6);
    let base: Vec<f64> = (0..1000).map(|_| standard_normal(&mut rng)).collect();
    let mut cases = 0usize;
    for n in 1..=1000usize {
        let ts = TimeSeries::new(base[..n].to_vec(), 100.0).unwrap();
        for tau in 1..=20usize.min(n) {
            let cg = coarse_grain(&ts, tau).unwrap();
            assert_eq!(cg.len(), n / tau, "n={n} tau={tau}");
            if tau == 1 {
                assert_eq!(cg.samples(), ts.samples(), "tau=1 must be exact identity");
            }
            cases += 1;
        }
    }
    println!("criterion 4 PASS: floor(N/tau) output length over {cases} (N, tau) cases; tau=1 identity exact");
}

#[test]
fn criterion_5_cca_oracle_and_denoise_gain() {
    let _guard = heavy_guard();
    let rate = 250.0;
    // correlations vs the QR+SVD oracle
    let mut worst: f64 = 0.0;
    for s in 0..100u64 {
        let mut rng = seeded_rng(0xCCA + s);
        let channels = 2 + (s % 5) as usize; // 2..=6
        let n = 500 + (rng.random::<u32>() % 300) as usize;
        let tone_gain = if s % 2 == 0 { 0.5 } else { 0.0 };
        let rows: Vec<Vec<f64>> = (0..channels)
            .map(|c| {
                (0..n)
                    .map(|i| {
                        let t = i as f64 / rate;
                        tone_gain
                            * (c as f64 + 1.0)
                            * (std::f64::consts::TAU * 15.0 * t).sin()
                            + standard_normal(&mut rng)
                    })
                    .collect()
            })
            .collect();
        let epoch = MultiChannelEpoch::new(
            rows.iter()
                .enumerate()
                .map(|(c, r)| {
                    (
                        format!("ch{c}"),
                        TimeSeries::new(r.clone(), rate).unwrap(),
                    )
                })
                .collect(),
            Condition::SsvepTrial(1),
        )
        .unwrap();
        let tmpl = make_template(15.0, n, rate).unwrap();
        let sol = cca_solve(&epoch, &tmpl).unwrap();
        // template rows rebuilt independently for the oracle
        let tmpl_rows: Vec<Vec<f64>> = [(15.0, false), (15.0, true), (30.0, false), (30.0, true)]
            .iter()
            .map(|&(f, cosine)| {
                (0..n)
                    .map(|k| {
                        let phase = std::f64::consts::TAU * f * k as f64 / rate;
                        if cosine {
                            phase.cos()
                        } else {
                            phase.sin()
                        }
                    })
                    .collect()
            })
            .collect();
        let reference = oracles::qr_svd_canonical_correlations(&rows, &tmpl_rows);
        assert_eq!(sol.correlations.len(), reference.len());
        for (got, want) in sol.correlations.iter().zip(&reference) {
            worst = worst.max((got - want).abs());
            assert!(
                (got - want).abs() <= 1e-8,
                "seed {s}: correlation {got} vs oracle {want}"
            );
        }
    }

    // planted 15 Hz: denoising must strictly raise the stimulus ratio
    let mut improved = 0usize;
    for s in 0..100u64 {
        let mut rng = seeded_rng(0xDE401 + s);
        let n = 2500;
        let gains = [1.0, 0.8, 0.9, 0.1];
        let epoch = MultiChannelEpoch::new(
            ["O1", "Oz", "O2", "Fpz"]
                .iter()
                .enumerate()
                .map(|(c, name)| {
                    let samples: Vec<f64> = (0..n)
                        .map(|i| {
                            let t = i as f64 / rate;
                            gains[c] * (std::f64::consts::TAU * 15.0 * t).sin()
                                + 1.5 * standard_normal(&mut rng)
                        })
                        .collect();
                    (name.to_string(), TimeSeries::new(samples, rate).unwrap())
                })
                .collect(),
            Condition::SsvepTrial(1),
        )
        .unwrap();
        let tmpl = make_template(15.0, n, rate).unwrap();
        let sol = cca_solve(&epoch, &tmpl).unwrap();
        let cleaned = denoise(&epoch, &sol, 2).unwrap();
        let ratio = |e: &MultiChannelEpoch| -> f64 {
            let mut p15 = 0.0;
            let mut total = 0.0;
            for (_, ts) in e.channels() {
                p15 += goertzel_power(ts.samples(), 15.0, rate);
                total += ts.samples().iter().map(|v| v * v).sum::<f64>()
                    / (n as f64 * n as f64);
            }
            p15 / total
        };
        if ratio(&cleaned) > ratio(&epoch) {
            improved += 1;
        }
    }
    assert!(
        improved >= 95,
        "denoising improved the stimulus ratio in only {improved}/100 epochs"
    );
    println!(
        "criterion 5 PASS: correlations within 1e-8 of the QR+SVD oracle (worst {worst:.2e}); stimulus ratio improved in {improved}/100 epochs"
    );
}

#[test]
fn criterion_6_stats_oracles() {
    // t-test p-values vs quadrature over a 50-case grid
    let mut worst_p: f64 = 0.0;
    for &df in &[1.0, 2.0, 4.0, 7.37, 23.0] {
        for &t in &[0.05, 0.3, 0.8, 1.5, 2.1, 2.9, 3.7, 4.4, 5.2, 6.8] {
            let p = fuzentra_core::stats::two_tailed_p(t, df);
            let p_o = oracles::quadrature_t_p_two_tailed(t, df);
            worst_p = worst_p.max((p - p_o).abs());
            assert!(
                (p - p_o).abs() <= 1e-6,
                "t={t} df={df}: p {p} vs quadrature {p_o}"
            );
        }
    }
    // frozen Welch example: t = -3.674, df = 4, p ~ 0.0213
    let welch = t_test(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], TTestKind::Independent).unwrap();
    assert!((welch.statistic + 3.674).abs() < 1e-3);
    assert!((welch.degrees_of_freedom - 4.0).abs() < 1e-12);
    assert!((welch.p_value - 0.0213).abs() < 5e-4);

    // FDR vs step-up enumeration on 1000 random vectors
    let mut rng = seeded_rng(0xFDB);
    for case in 0..1000 {
        let m = 1 + (rng.random::<u32>() % 50) as usize;
        let mut p: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
        if case % 3 == 0 {
            // induce ties
            for v in &mut p {
                *v = (*v * 20.0).round() / 20.0;
            }
        }
        let got = fdr_bh(&p, 0.05).unwrap();
        let (want_rej, want_adj) = oracles::enumerate_bh(&p, 0.05);
        assert_eq!(got.rejected, want_rej, "case {case}: rejection sets differ");
        for (a, b) in got.adjusted_p.iter().zip(&want_adj) {
            assert!((a - b).abs() <= 1e-12, "case {case}: adjusted {a} vs {b}");
        }
    }

    // ICC vs the sums-of-squares oracle
    let mut worst_icc: f64 = 0.0;
    for s in 0..50u64 {
        let mut rng = seeded_rng(0x1CC + s);
        let n = 3 + (rng.random::<u32>() % 8) as usize;
        let k = 2 + (rng.random::<u32>() % 3) as usize;
        let ratings: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let level = 3.0 * standard_normal(&mut rng);
                (0..k).map(|_| level + standard_normal(&mut rng)).collect()
            })
            .collect();
        let got = icc_oneway(&ratings).unwrap();
        let want = oracles::ss_decomposition_icc(&ratings);
        worst_icc = worst_icc.max((got - want).abs());
        assert!((got - want).abs() <= 1e-10, "seed {s}: {got} vs {want}");
    }
    println!(
        "criterion 6 PASS: t p-values within 1e-6 of quadrature (worst {worst_p:.2e}); BH matches enumeration on 1000 vectors; ICC within 1e-10 (worst {worst_icc:.2e})"
    );
}

#[test]
fn criterion_7_classification_harness() {
    let _guard = heavy_guard();
    // AUC equals the pair statistic within 1e-12
    let mut rng = seeded_rng(0xA0C);
    for case in 0..200 {
        let n = 4 + (rng.random::<u32>() % 47) as usize;
        let mut scores: Vec<f64> = (0..n).map(|_| standard_normal(&mut rng)).collect();
        if case % 2 == 0 {
            for s in &mut scores {
                *s = (*s * 4.0).round() / 4.0; // ties
            }
        }
        let mut labels: Vec<Phase> = (0..n)
            .map(|i| {
                if i % 2 == 0 {
                    Phase::PreIctal
                } else {
                    Phase::InterIctal
                }
            })
            .collect();
        labels.shuffle(&mut rng);
        let (_, auc) = roc_auc(&scores, &labels).unwrap();
        let positive: Vec<bool> = labels.iter().map(|l| *l == Phase::PreIctal).collect();
        let want = oracles::pair_statistic_auc(&scores, &positive);
        assert!(
            (auc - want).abs() <= 1e-12,
            "case {case}: AUC {auc} vs pair statistic {want}"
        );
    }

    // separable synthetic cohort: AdaBoost 3-fold x 100 repeats
    let start = Instant::now();
    let cohort = gen_feature_cohort(40, 10, 2.0, 0.5, 0xC0407);
    let cv = CvConfig {
        folds: 3,
        repeats: 100,
        tune: true,
    };
    let summary = cross_validate(
        ModelKind::AdaBoost,
        &cohort,
        &cv,
        &TrainConfig::default(),
        0x5EED,
    )
    .unwrap();
    assert!(
        summary.accuracy.mean >= 0.90,
        "separable cohort accuracy {:.3}",
        summary.accuracy.mean
    );

    // label-shuffled cohort sits at chance level
    let mut shuffled = cohort.clone();
    let mut labels: Vec<Phase> = shuffled.iter().map(|e| e.label).collect();
    let mut shuffle_rng = seeded_rng(0x5AFF1E);
    labels.shuffle(&mut shuffle_rng);
    for (example, label) in shuffled.iter_mut().zip(labels) {
        example.label = label;
    }
    let chance = cross_validate(
        ModelKind::AdaBoost,
        &shuffled,
        &cv,
        &TrainConfig::default(),
        0x5EED,
    )
    .unwrap();
    assert!(
        (0.40..=0.60).contains(&chance.accuracy.mean),
        "shuffled-label accuracy {:.3} outside [0.40, 0.60]",
        chance.accuracy.mean
    );
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 60.0,
        "CV runs took {elapsed:?} (budget 60 s)"
    );
    println!(
        "criterion 7 PASS: AUC = pair statistic within 1e-12; separable accuracy {:.3}, shuffled {:.3} ({elapsed:?})",
        summary.accuracy.mean, chance.accuracy.mean
    );
}

#[test]
fn criterion_8_end_to_end_qualitative_reproduction() {
    let _guard = heavy_guard();
    let tmp = tempfile::tempdir().unwrap();

    // trending cohort: the full 80-subject protocol at default settings
    let spec = CohortSpec {
        seed: 1,
        ..CohortSpec::default()
    };
    let data = tmp.path().join("trending");
    gen_cohort(&spec, &data).unwrap();
    let cfg = PipelineConfig {
        seed: 1,
        ..PipelineConfig::default()
    };
    let out = tmp.path().join("trending-out");
    let start = Instant::now();
    let report = run_pipeline(&cfg, &data, &out).unwrap();
    let elapsed = start.elapsed();
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get()) as f64;
    let budget = 600.0 * (8.0 / cores).max(1.0);
    assert!(
        elapsed.as_secs_f64() < budget,
        "pipeline took {elapsed:?} (budget {budget:.0} s for {cores} cores, 600 s at 8)"
    );
    assert_eq!(report.recordings.len(), 120);

    // group means of occipital transitional variance, per arm
    let arm_tvs = |group: &str, phase: Option<Phase>| -> Vec<&Vec<Option<f64>>> {
        report
            .recordings
            .iter()
            .filter(|r| r.meta.group == group && r.meta.phase == phase)
            .map(|r| &r.tv["occipital"])
            .collect()
    };
    let mean_at = |tvs: &[&Vec<Option<f64>>], s: usize| -> f64 {
        tvs.iter().map(|tv| tv[s].unwrap()).sum::<f64>() / tvs.len() as f64
    };
    let hc = arm_tvs("hc", None);
    let inter = arm_tvs("patient", Some(Phase::InterIctal));
    let pre = arm_tvs("patient", Some(Phase::PreIctal));
    for s in 10..20 {
        assert!(
            mean_at(&hc, s) > 0.0,
            "HC mean TV at tau={} is {:.4}, expected positive",
            s + 1,
            mean_at(&hc, s)
        );
        assert!(
            mean_at(&inter, s) > 0.0,
            "inter-ictal mean TV at tau={} is {:.4}, expected positive",
            s + 1,
            mean_at(&inter, s)
        );
        assert!(
            mean_at(&pre, s) < 0.0,
            "pre-ictal mean TV at tau={} is {:.4}, expected negative",
            s + 1,
            mean_at(&pre, s)
        );
    }
    let sig = report
        .panel("occipital", "tv_pre_vs_inter")
        .expect("primary panel present")
        .significant_scales();
    assert!(!sig.is_empty(), "no FDR-significant scale in the primary panel");
    let neg20 = pre.iter().filter(|tv| tv[19].unwrap() < 0.0).count();
    assert!(
        neg20 * 10 >= pre.len() * 9,
        "only {neg20}/{} pre-ictal sessions negative at tau=20",
        pre.len()
    );
    let cv = report.cv.as_ref().expect("classification ran");
    assert!(
        cv.accuracy.mean >= 0.90,
        "trending-cohort CV accuracy {:.3}",
        cv.accuracy.mean
    );

    // null cohorts: Benjamini-Hochberg false-positive control on the
    // primary panel over 20 seeded runs (reduced cohorts, see config)
    let null_cfg_text = "decimate = 5\nband_high = 20\nfir_taps = 201\ncca_apply = none\n\
repeats = 5\ntune = false\n";
    let mut clean_runs = 0usize;
    let mut pooled_tv20: Vec<f64> = Vec::new();
    for i in 0..20u64 {
        let spec = CohortSpec {
            n_hc: 2,
            n_patients: 4,
            trend_hc: 0.0,
            trend_inter: 0.0,
            trend_pre: 0.0,
            seed: 100 + i,
            ..CohortSpec::default()
        };
        let data = tmp.path().join(format!("null-{i}"));
        gen_cohort(&spec, &data).unwrap();
        let mut cfg = PipelineConfig::parse(null_cfg_text).unwrap();
        cfg.seed = 1000 + i;
        let out = tmp.path().join(format!("null-out-{i}"));
        let report = run_pipeline(&cfg, &data, &out).unwrap();
        let rejections = report
            .panel("occipital", "tv_pre_vs_inter")
            .expect("primary panel present")
            .significant_scales()
            .len();
        if rejections == 0 {
            clean_runs += 1;
        }
        for rec in &report.recordings {
            if rec.meta.group == "patient" {
                pooled_tv20.push(rec.tv["occipital"][19].unwrap());
            }
        }
    }
    assert!(
        clean_runs >= 19,
        "null cohorts produced rejections in {} of 20 runs",
        20 - clean_runs
    );
    // zero trends center transitional variance on zero
    let n = pooled_tv20.len() as f64;
    let mean = pooled_tv20.iter().sum::<f64>() / n;
    let sd = (pooled_tv20.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(
        mean.abs() < 2.0 * sd / n.sqrt(),
        "null transitional variance mean {mean:.4} vs 2 SE {:.4}",
        2.0 * sd / n.sqrt()
    );
    println!(
        "criterion 8 PASS: sign pattern holds at tau >= 11, {} significant scales in the primary panel, {neg20}/{} pre-ictal sessions negative at tau=20, CV accuracy {:.3}, {clean_runs}/20 null runs clean, pipeline {elapsed:?} (budget {budget:.0} s)",
        sig.len(),
        pre.len(),
        cv.accuracy.mean
    );
}

#[test]
fn criterion_9_determinism() {
    let _guard = heavy_guard();
    let tmp = tempfile::tempdir().unwrap();
    let spec = CohortSpec {
        n_hc: 2,
        n_patients: 2,
        seed: 5,
        ..CohortSpec::default()
    };
    let data1 = tmp.path().join("d1");
    let data2 = tmp.path().join("d2");
    gen_cohort(&spec, &data1).unwrap();
    gen_cohort(&spec, &data2).unwrap();
    assert_eq!(
        tree_digest(&data1).unwrap(),
        tree_digest(&data2).unwrap(),
        "cohort generation differs between identical runs"
    );

    let cfg = PipelineConfig {
        decimate: 5,
        band_high: 20.0,
        fir_taps: 201,
        cca_apply: CcaApply::None,
        repeats: 5,
        tune: false,
        seed: 7,
        ..PipelineConfig::default()
    };
    let out1 = tmp.path().join("o1");
    let out2 = tmp.path().join("o2");
    run_pipeline(&cfg, &data1, &out1).unwrap();
    run_pipeline(&cfg, &data1, &out2).unwrap();
    let d1 = tree_digest(&out1).unwrap();
    assert_eq!(d1, tree_digest(&out2).unwrap(), "pipeline outputs differ");
    assert!(!d1.is_empty());
    println!(
        "criterion 9 PASS: byte-identical outputs over repeated runs ({} files compared; binary-level reruns covered by the CLI suite)",
        d1.len()
    );
}
