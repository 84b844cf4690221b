//! Hypothesis tests and corrections: paired and Welch independent t-tests
//! (two-tailed p-values via the regularized incomplete beta function),
//! Benjamini–Hochberg / Benjamini–Yekutieli FDR control, and the one-way
//! intra-class correlation coefficient ICC(1,1).

use crate::math::{mean, sample_sd};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("degenerate variance: {0}")]
    DegenerateVariance(&'static str),
    #[error("paired samples have different lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("p-values must lie in [0, 1]")]
    InvalidPValue,
    #[error("alpha must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
}

/// Two-tailed test outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub degrees_of_freedom: f64,
    pub p_value: f64,
    pub two_tailed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TTestKind {
    Paired,
    /// Welch's unequal-variance variant.
    Independent,
}

/// Two-tailed t-test. Paired compares elementwise differences against
/// zero; Independent uses the Welch statistic and Welch–Satterthwaite
/// degrees of freedom.
pub fn t_test(a: &[f64], b: &[f64], kind: TTestKind) -> Result<TestResult, StatsError> {
    match kind {
        TTestKind::Paired => {
            if a.len() != b.len() {
                return Err(StatsError::LengthMismatch(a.len(), b.len()));
            }
            if a.len() < 2 {
                return Err(StatsError::TooFew {
                    needed: 2,
                    got: a.len(),
                });
            }
            let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
            let md = mean(&d);
            let sd = sample_sd(&d);
            let n = d.len() as f64;
            if sd == 0.0 {
                if md == 0.0 {
                    // identical samples: no evidence of any difference
                    return Ok(TestResult {
                        statistic: 0.0,
                        degrees_of_freedom: n - 1.0,
                        p_value: 1.0,
                        two_tailed: true,
                    });
                }
                return Err(StatsError::DegenerateVariance(
                    "zero variance of paired differences",
                ));
            }
            let t = md / (sd / n.sqrt());
            let df = n - 1.0;
            Ok(TestResult {
                statistic: t,
                degrees_of_freedom: df,
                p_value: two_tailed_p(t, df),
                two_tailed: true,
            })
        }
        TTestKind::Independent => {
            if a.len() < 2 || b.len() < 2 {
                return Err(StatsError::TooFew {
                    needed: 2,
                    got: a.len().min(b.len()),
                });
            }
            let (na, nb) = (a.len() as f64, b.len() as f64);
            let (va, vb) = (sample_sd(a).powi(2), sample_sd(b).powi(2));
            if va + vb == 0.0 {
                return Err(StatsError::DegenerateVariance("both groups constant"));
            }
            let se2 = va / na + vb / nb;
            let t = (mean(a) - mean(b)) / se2.sqrt();
            let df = se2 * se2
                / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
            Ok(TestResult {
                statistic: t,
                degrees_of_freedom: df,
                p_value: two_tailed_p(t, df),
                two_tailed: true,
            })
        }
    }
}

/// Two-tailed p for a t statistic: I_{ν/(ν+t²)}(ν/2, 1/2).
pub fn two_tailed_p(t: f64, df: f64) -> f64 {
    if t == 0.0 {
        return 1.0;
    }
    let x = df / (df + t * t);
    reg_incomplete_beta(0.5 * df, 0.5, x).clamp(0.0, 1.0)
}

/// ln Γ via the Lanczos approximation (g = 7, 9 coefficients).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // reflection
        return std::f64::consts::PI.ln()
            - (std::f64::consts::PI * x).sin().ln()
            - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = 0.99999999999980993;
    for (i, c) in COEF.iter().enumerate() {
        a += c / (x + i as f64 + 1.0);
    }
    let t = x + 7.5;
    0.5 * (std::f64::consts::TAU).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
pub fn reg_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)
        + a * x.ln()
        + b * (1.0 - x).ln();
    // symmetry switch for faster convergence; <= so the swapped call
    // always lands in the direct branch
    if x <= (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cf(a, b, x) / a
    } else {
        1.0 - reg_incomplete_beta(b, a, 1.0 - x)
    }
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// FDR correction variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdrMethod {
    /// Benjamini–Hochberg (independence / PRDS).
    BenjaminiHochberg,
    /// Benjamini–Yekutieli (arbitrary dependence): thresholds divided by
    /// the harmonic number H(m).
    BenjaminiYekutieli,
}

/// Per-hypothesis outcome of an FDR pass.
#[derive(Debug, Clone, PartialEq)]
pub struct FdrOutcome {
    pub adjusted_p: Vec<f64>,
    pub rejected: Vec<bool>,
}

/// Benjamini–Hochberg step-up at level `alpha`.
pub fn fdr_bh(p_values: &[f64], alpha: f64) -> Result<FdrOutcome, StatsError> {
    fdr(p_values, alpha, FdrMethod::BenjaminiHochberg)
}

/// FDR step-up with a selectable variant.
pub fn fdr(p_values: &[f64], alpha: f64, method: FdrMethod) -> Result<FdrOutcome, StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::InvalidAlpha(alpha));
    }
    if p_values.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(StatsError::InvalidPValue);
    }
    let m = p_values.len();
    if m == 0 {
        return Ok(FdrOutcome {
            adjusted_p: vec![],
            rejected: vec![],
        });
    }
    let c_m = match method {
        FdrMethod::BenjaminiHochberg => 1.0,
        FdrMethod::BenjaminiYekutieli => (1..=m).map(|i| 1.0 / i as f64).sum(),
    };
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| p_values[i].partial_cmp(&p_values[j]).unwrap());

    // adjusted p: running minimum of (m·c_m/rank)·p from the largest rank down
    let mut adjusted_sorted = vec![0.0; m];
    let mut running = 1.0f64;
    for rank in (1..=m).rev() {
        let raw = p_values[order[rank - 1]];
        running = running.min(raw * c_m * m as f64 / rank as f64);
        adjusted_sorted[rank - 1] = running;
    }
    // step-up rejection: largest rank k with p(k) <= k·alpha/(m·c_m)
    let mut k_star = 0;
    for rank in (1..=m).rev() {
        if p_values[order[rank - 1]] <= rank as f64 * alpha / (m as f64 * c_m) {
            k_star = rank;
            break;
        }
    }
    let mut adjusted_p = vec![0.0; m];
    let mut rejected = vec![false; m];
    for (rank0, &idx) in order.iter().enumerate() {
        adjusted_p[idx] = adjusted_sorted[rank0];
        rejected[idx] = rank0 < k_star;
    }
    Ok(FdrOutcome {
        adjusted_p,
        rejected,
    })
}

/// One-way intra-class correlation ICC(1,1) from a subjects × sessions
/// matrix: (MSB − MSW) / (MSB + (k−1)·MSW).
pub fn icc_oneway(ratings: &[Vec<f64>]) -> Result<f64, StatsError> {
    let n = ratings.len();
    if n < 2 {
        return Err(StatsError::TooFew { needed: 2, got: n });
    }
    let k = ratings[0].len();
    if k < 2 {
        return Err(StatsError::TooFew { needed: 2, got: k });
    }
    for row in ratings {
        if row.len() != k {
            return Err(StatsError::LengthMismatch(k, row.len()));
        }
    }
    let grand = ratings.iter().flatten().sum::<f64>() / (n * k) as f64;
    let mut ssb = 0.0;
    let mut ssw = 0.0;
    for row in ratings {
        let rm = mean(row);
        ssb += k as f64 * (rm - grand) * (rm - grand);
        for v in row {
            ssw += (v - rm) * (v - rm);
        }
    }
    let msb = ssb / (n - 1) as f64;
    let msw = ssw / (n * (k - 1)) as f64;
    let denom = msb + (k - 1) as f64 * msw;
    if denom == 0.0 {
        return Err(StatsError::DegenerateVariance("all ratings identical"));
    }
    Ok((msb - msw) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paired_identical_samples() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let r = t_test(&a, &a, TTestKind::Paired).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn paired_constant_nonzero_differences() {
        let a = [1.0, 2.0, 3.0];
        let b = [2.0, 3.0, 4.0];
        assert_eq!(
            t_test(&a, &b, TTestKind::Paired),
            Err(StatsError::DegenerateVariance(
                "zero variance of paired differences"
            ))
        );
    }

    #[test]
    fn welch_example() {
        let r = t_test(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], TTestKind::Independent).unwrap();
        assert!((r.statistic + 3.674).abs() < 1e-3, "t = {}", r.statistic);
        assert!((r.degrees_of_freedom - 4.0).abs() < 1e-12);
        assert!((r.p_value - 0.0213).abs() < 5e-4, "p = {}", r.p_value);
    }

    #[test]
    fn t_test_antisymmetry() {
        let a = [0.3, -1.2, 2.0, 0.8, -0.5];
        let b = [1.1, 0.4, -0.9, 1.7, 0.0];
        for kind in [TTestKind::Paired, TTestKind::Independent] {
            let ab = t_test(&a, &b, kind).unwrap();
            let ba = t_test(&b, &a, kind).unwrap();
            assert!((ab.statistic + ba.statistic).abs() < 1e-12);
            assert!((ab.p_value - ba.p_value).abs() < 1e-12);
        }
    }

    #[test]
    fn incomplete_beta_sanity() {
        // I_x(1,1) = x
        for x in [0.1, 0.5, 0.9] {
            assert!((reg_incomplete_beta(1.0, 1.0, x) - x).abs() < 1e-12);
        }
        // symmetry: I_x(a,b) = 1 − I_{1−x}(b,a)
        let v = reg_incomplete_beta(2.5, 0.5, 0.3);
        let w = 1.0 - reg_incomplete_beta(0.5, 2.5, 0.7);
        assert!((v - w).abs() < 1e-12);
    }

    #[test]
    fn fdr_all_rejected() {
        let out = fdr_bh(&[0.01, 0.02, 0.03, 0.04], 0.05).unwrap();
        assert_eq!(out.rejected, vec![true; 4]);
    }

    #[test]
    fn fdr_single_hypothesis() {
        let out = fdr_bh(&[0.5], 0.05).unwrap();
        assert_eq!(out.rejected, vec![false]);
        assert_eq!(out.adjusted_p, vec![0.5]);
    }

    #[test]
    fn fdr_mixed() {
        let out = fdr_bh(&[0.001, 0.9], 0.05).unwrap();
        assert_eq!(out.rejected, vec![true, false]);
        assert!((out.adjusted_p[0] - 0.002).abs() < 1e-15);
        assert!((out.adjusted_p[1] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn fdr_adjusted_dominates_raw() {
        let p = [0.04, 0.001, 0.3, 0.7, 0.02];
        let out = fdr_bh(&p, 0.05).unwrap();
        for (raw, adj) in p.iter().zip(&out.adjusted_p) {
            assert!(adj >= raw);
            assert!(*adj <= 1.0);
        }
        for (i, rej) in out.rejected.iter().enumerate() {
            if *rej {
                assert!(out.adjusted_p[i] <= 0.05 + 1e-15);
            }
        }
    }

    #[test]
    fn fdr_by_is_more_conservative() {
        let p = [0.002, 0.01, 0.02, 0.04, 0.2];
        let bh = fdr(&p, 0.05, FdrMethod::BenjaminiHochberg).unwrap();
        let by = fdr(&p, 0.05, FdrMethod::BenjaminiYekutieli).unwrap();
        let bh_count = bh.rejected.iter().filter(|r| **r).count();
        let by_count = by.rejected.iter().filter(|r| **r).count();
        assert!(by_count <= bh_count);
    }

    #[test]
    fn icc_perfect_reliability() {
        let ratings = vec![
            vec![1.0, 1.0],
            vec![5.0, 5.0],
            vec![3.0, 3.0],
            vec![9.0, 9.0],
        ];
        assert!((icc_oneway(&ratings).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn icc_degenerate_when_all_equal() {
        let ratings = vec![vec![2.0, 2.0], vec![2.0, 2.0]];
        assert_eq!(
            icc_oneway(&ratings),
            Err(StatsError::DegenerateVariance("all ratings identical"))
        );
    }
}
