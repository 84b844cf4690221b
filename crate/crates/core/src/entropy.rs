//! Coarse-graining and the entropy estimator family: fuzzy entropy (with
//! template baseline removal and an exponential membership function),
//! approximate entropy, sample entropy, multi-scale profiles, relative
//! profiles against a resting baseline, and transitional variance.
//!
//! # Conventions
//!
//! * The template length is `m`; comparisons use the Chebyshev distance.
//! * The similarity width `r` is dimensionless: distances are expressed in
//!   units of the input's sample standard deviation before the membership
//!   function `exp(−(d/sd)^n / r)` is applied. On z-scored input (sd = 1)
//!   this coincides with an absolute width, and it makes every estimator
//!   invariant under positive rescaling of the signal.
//! * When composed with coarse-graining, the width therefore re-adapts to
//!   each scale's own standard deviation.
//! * Fuzzy entropy averages both φ^m and φ^{m+1} over the same `N − m`
//!   templates, which makes φ^m ≥ φ^{m+1} hold termwise (the raw value is
//!   never negative).

use crate::emd::{decompose, detrend_reconstruct, EmdError, SiftConfig};
use crate::math::{exp_nonpos, sample_sd};
use crate::signal::{zscore, SignalError, TimeSeries};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum EntropyError {
    #[error("series too short: {got} samples, need at least {needed}")]
    TooShort { got: usize, needed: usize },
    #[error("scale count {requested} infeasible for {len} samples; largest feasible is {max_feasible}")]
    TooManyScales {
        requested: usize,
        len: usize,
        max_feasible: usize,
    },
    #[error("profiles have different scale axes: {0} vs {1}")]
    ScaleMismatch(usize, usize),
    #[error("empty profile set")]
    EmptySet,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Emd(#[from] EmdError),
}

/// Estimator parameters: template length `m`, membership gradient `n`,
/// similarity width `r` (in units of the sample SD).
#[derive(Debug, Clone)]
pub struct EntropyParams {
    pub m: usize,
    pub n: f64,
    pub r: f64,
}

impl Default for EntropyParams {
    fn default() -> Self {
        Self {
            m: 2,
            n: 2.0,
            r: 0.2,
        }
    }
}

impl EntropyParams {
    fn validate(&self) -> Result<(), EntropyError> {
        if self.m < 1 {
            return Err(EntropyError::InvalidParameter("m must be >= 1"));
        }
        if !(self.n > 0.0) {
            return Err(EntropyError::InvalidParameter("n must be positive"));
        }
        if !(self.r > 0.0) {
            return Err(EntropyError::InvalidParameter("r must be positive"));
        }
        Ok(())
    }
}

/// Which estimator a multi-scale profile uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ApEn,
    SampEn,
    FuzzEn,
    /// Fuzzy entropy after EMD-based trend removal.
    InherentFuzzEn,
}

impl Method {
    pub fn parse(s: &str) -> Option<Method> {
        match s {
            "apen" => Some(Method::ApEn),
            "sampen" => Some(Method::SampEn),
            "fuzzen" => Some(Method::FuzzEn),
            "inherent" => Some(Method::InherentFuzzEn),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::ApEn => "apen",
            Method::SampEn => "sampen",
            Method::FuzzEn => "fuzzen",
            Method::InherentFuzzEn => "inherent",
        }
    }
}

/// Entropy value per time scale τ = 1..T. `None` marks the undefined
/// zero-match case of sample entropy.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyProfile {
    values: Vec<Option<f64>>,
}

impl EntropyProfile {
    pub fn new(values: Vec<Option<f64>>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn scales(&self) -> usize {
        self.values.len()
    }
}

/// Scalp region an aggregated profile belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Mean of O1, Oz, O2.
    Occipital,
    /// Fpz alone.
    Prefrontal,
}

impl Region {
    pub fn name(&self) -> &'static str {
        match self {
            Region::Occipital => "occipital",
            Region::Prefrontal => "prefrontal",
        }
    }
}

/// Per-scale stimulus-minus-baseline differences for one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct RelativeProfile {
    pub region: Option<Region>,
    values: Vec<Option<f64>>,
}

impl RelativeProfile {
    pub fn from_values(values: Vec<Option<f64>>) -> Self {
        Self {
            region: None,
            values,
        }
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn scales(&self) -> usize {
        self.values.len()
    }

    pub fn with_region(mut self, region: Region) -> Self {
        self.region = Some(region);
        self
    }
}

/// Average non-overlapping windows of length `tau`; the trailing partial
/// window is discarded, so the output has `floor(len/tau)` samples.
pub fn coarse_grain(x: &TimeSeries, tau: usize) -> Result<TimeSeries, EntropyError> {
    if tau == 0 {
        return Err(EntropyError::InvalidParameter("tau must be >= 1"));
    }
    if x.len() < tau {
        return Err(EntropyError::TooShort {
            got: x.len(),
            needed: tau,
        });
    }
    if tau == 1 {
        return Ok(x.clone());
    }
    let out_len = x.len() / tau;
    let inv = 1.0 / tau as f64;
    let samples = (0..out_len)
        .map(|j| x.samples()[j * tau..(j + 1) * tau].iter().sum::<f64>() * inv)
        .collect();
    Ok(TimeSeries::new(samples, x.sample_rate() / tau as f64)?)
}

// ── fuzzy entropy ────────────────────────────────────────────────────────

/// Fuzzy entropy: ln φ^m − ln φ^{m+1} with mean-centered templates and
/// exponential similarity. Always finite; zero for constant input.
pub fn fuzzy_entropy(x: &TimeSeries, p: &EntropyParams) -> Result<f64, EntropyError> {
    p.validate()?;
    fuzzy_entropy_slice(x.samples(), p)
}

pub(crate) fn fuzzy_entropy_slice(x: &[f64], p: &EntropyParams) -> Result<f64, EntropyError> {
    let n = x.len();
    if n < p.m + 2 {
        return Err(EntropyError::TooShort {
            got: n,
            needed: p.m + 2,
        });
    }
    let sd = sample_sd(x);
    if sd == 0.0 {
        // constant series: every distance is zero, φ^m = φ^{m+1} = 1
        return Ok(0.0);
    }
    let (sum_m, sum_m1) = fuzzy_pair_sums(x, p.m, p.n, p.r, sd);
    // φ normalizations over the shared template count cancel in the ratio;
    // clamp against total underflow on pathological inputs.
    let sum_m = sum_m.max(f64::MIN_POSITIVE);
    let sum_m1 = sum_m1.max(f64::MIN_POSITIVE);
    Ok(sum_m.ln() - sum_m1.ln())
}

/// Pair sums Σ_{i<j} D_ij for template lengths m and m+1 over the same
/// N−m templates. Distances are normalized by `sd` before the membership
/// function; rows are processed in fixed chunks and partial sums reduced in
/// order, so the result is identical for any worker count.
fn fuzzy_pair_sums(x: &[f64], m: usize, n_exp: f64, r: f64, sd: f64) -> (f64, f64) {
    fuzzy_pair_sums_impl(x, m, n_exp, r, sd, true)
}

fn fuzzy_pair_sums_impl(
    x: &[f64],
    m: usize,
    n_exp: f64,
    r: f64,
    sd: f64,
    allow_simd: bool,
) -> (f64, f64) {
    let p = x.len() - m;
    let inv_sd = 1.0 / sd;
    // Mean-centered templates, pre-scaled by 1/sd (the Chebyshev distance
    // is absolutely homogeneous, so this equals dividing distances by sd).
    // Stored one component per array so the pair loop streams unit-stride.
    let mut comp_m: Vec<Vec<f64>> = vec![vec![0.0; p]; m];
    let mut comp_m1: Vec<Vec<f64>> = vec![vec![0.0; p]; m + 1];
    for i in 0..p {
        let w = &x[i..i + m];
        let mu = w.iter().sum::<f64>() / m as f64;
        for (k, v) in w.iter().enumerate() {
            comp_m[k][i] = (v - mu) * inv_sd;
        }
        let w1 = &x[i..i + m + 1];
        let mu1 = w1.iter().sum::<f64>() / (m + 1) as f64;
        for (k, v) in w1.iter().enumerate() {
            comp_m1[k][i] = (v - mu1) * inv_sd;
        }
    }

    #[cfg(target_arch = "x86_64")]
    let use_avx = allow_simd
        && n_exp == 2.0
        && (1..=3).contains(&m)
        && is_x86_feature_detected!("avx2")
        && is_x86_feature_detected!("fma");
    #[cfg(not(target_arch = "x86_64"))]
    let use_avx = {
        let _ = allow_simd;
        false
    };

    const CHUNK: usize = 256;
    let n_chunks = p.div_ceil(CHUNK);
    let row_sums = |chunk_idx: usize| -> (f64, f64) {
        let lo = chunk_idx * CHUNK;
        let hi = (lo + CHUNK).min(p);
        let mut sm = 0.0;
        let mut sm1 = 0.0;
        let inv_r = 1.0 / r;
        for i in lo..hi {
            let js = i + 1;
            if js >= p {
                break;
            }
            #[cfg(target_arch = "x86_64")]
            let (a, b) = if use_avx {
                // safety: AVX2 + FMA presence checked above
                unsafe {
                    match m {
                        2 => simd::row_pair_sums_sq_avx::<2, 3>(&comp_m, &comp_m1, i, js, inv_r),
                        3 => simd::row_pair_sums_sq_avx::<3, 4>(&comp_m, &comp_m1, i, js, inv_r),
                        _ => simd::row_pair_sums_sq_avx::<1, 2>(&comp_m, &comp_m1, i, js, inv_r),
                    }
                }
            } else {
                row_sums_dispatch(&comp_m, &comp_m1, m, n_exp, i, js, inv_r)
            };
            #[cfg(not(target_arch = "x86_64"))]
            let (a, b) = {
                let _ = use_avx;
                row_sums_dispatch(&comp_m, &comp_m1, m, n_exp, i, js, inv_r)
            };
            sm += a;
            sm1 += b;
        }
        (sm, sm1)
    };

    let partials: Vec<(f64, f64)> = if p >= 2048 {
        (0..n_chunks).into_par_iter().map(row_sums).collect()
    } else {
        (0..n_chunks).map(row_sums).collect()
    };
    partials
        .into_iter()
        .fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d))
}

fn row_sums_dispatch(
    comp_m: &[Vec<f64>],
    comp_m1: &[Vec<f64>],
    m: usize,
    n_exp: f64,
    i: usize,
    js: usize,
    inv_r: f64,
) -> (f64, f64) {
    match (m, n_exp == 2.0) {
        (2, true) => row_pair_sums_sq::<2, 3>(comp_m, comp_m1, i, js, inv_r),
        (3, true) => row_pair_sums_sq::<3, 4>(comp_m, comp_m1, i, js, inv_r),
        (1, true) => row_pair_sums_sq::<1, 2>(comp_m, comp_m1, i, js, inv_r),
        _ => row_pair_sums_generic(comp_m, comp_m1, n_exp, i, js, inv_r),
    }
}

#[inline]
fn branchless_max(a: f64, b: f64) -> f64 {
    if a > b {
        a
    } else {
        b
    }
}

/// Membership sums of row `i` against rows `i+1..p` for the default n = 2
/// gradient. Component counts are const and the component arrays are
/// indexed unit-stride, so the whole body vectorizes.
#[inline]
fn row_pair_sums_sq<const M: usize, const M1: usize>(
    comp_m: &[Vec<f64>],
    comp_m1: &[Vec<f64>],
    i: usize,
    js: usize,
    inv_r: f64,
) -> (f64, f64) {
    let ci: [f64; M] = std::array::from_fn(|k| comp_m[k][i]);
    let ci1: [f64; M1] = std::array::from_fn(|k| comp_m1[k][i]);
    let cols: [&[f64]; M] = std::array::from_fn(|k| &comp_m[k][js..]);
    let cols1: [&[f64]; M1] = std::array::from_fn(|k| &comp_m1[k][js..]);
    let len = cols[0].len();
    let mut sm = 0.0;
    let mut sm1 = 0.0;
    for idx in 0..len {
        let mut d = 0.0f64;
        for k in 0..M {
            d = branchless_max(d, (ci[k] - cols[k][idx]).abs());
        }
        let mut d1 = 0.0f64;
        for k in 0..M1 {
            d1 = branchless_max(d1, (ci1[k] - cols1[k][idx]).abs());
        }
        sm += exp_nonpos(-(d * d) * inv_r);
        sm1 += exp_nonpos(-(d1 * d1) * inv_r);
    }
    (sm, sm1)
}

fn row_pair_sums_generic(
    comp_m: &[Vec<f64>],
    comp_m1: &[Vec<f64>],
    n_exp: f64,
    i: usize,
    js: usize,
    inv_r: f64,
) -> (f64, f64) {
    let len = comp_m[0].len() - js;
    let mut sm = 0.0;
    let mut sm1 = 0.0;
    for idx in 0..len {
        let mut d = 0.0f64;
        for col in comp_m {
            d = branchless_max(d, (col[i] - col[js + idx]).abs());
        }
        let mut d1 = 0.0f64;
        for col in comp_m1 {
            d1 = branchless_max(d1, (col[i] - col[js + idx]).abs());
        }
        sm += exp_nonpos(-d.powf(n_exp) * inv_r);
        sm1 += exp_nonpos(-d1.powf(n_exp) * inv_r);
    }
    (sm, sm1)
}

/// Four-wide AVX2/FMA kernel for the n = 2 membership, dispatched at
/// runtime. Same reduction structure as the scalar path (per-row sums,
/// lanes folded in fixed order), so results are reproducible on a given
/// machine.
#[cfg(target_arch = "x86_64")]
mod simd {
    use crate::math::exp_nonpos;
    use core::arch::x86_64::*;

    const MAGIC: f64 = 1.5 * (1u64 << 52) as f64;
    const LOG2_E: f64 = std::f64::consts::LOG2_E;
    const LN2_HI: f64 = 6.931_471_803_691_238_2e-1;
    const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
    const EXP_CUTOFF: f64 = -700.0;

    /// exp() of four non-positive finite lanes.
    ///
    /// # Safety
    /// Requires AVX2 and FMA.
    #[inline]
    #[target_feature(enable = "avx2,fma")]
    unsafe fn exp_nonpos_x4(x: __m256d) -> __m256d {
        let magic = _mm256_set1_pd(MAGIC);
        let t = _mm256_fmadd_pd(x, _mm256_set1_pd(LOG2_E), magic);
        let k_int = _mm256_sub_epi64(
            _mm256_and_si256(
                _mm256_castpd_si256(t),
                _mm256_set1_epi64x(0x000F_FFFF_FFFF_FFFF),
            ),
            _mm256_set1_epi64x(0x0008_0000_0000_0000),
        );
        let k = _mm256_sub_pd(t, magic);
        let r = _mm256_fnmadd_pd(
            k,
            _mm256_set1_pd(LN2_LO),
            _mm256_fnmadd_pd(k, _mm256_set1_pd(LN2_HI), x),
        );
        let r2 = _mm256_mul_pd(r, r);
        let r4 = _mm256_mul_pd(r2, r2);
        let c = |v: f64| _mm256_set1_pd(v);
        let e01 = _mm256_add_pd(c(1.0), r);
        let e23 = _mm256_fmadd_pd(r, c(1.0 / 6.0), c(0.5));
        let e45 = _mm256_fmadd_pd(r, c(1.0 / 120.0), c(1.0 / 24.0));
        let e67 = _mm256_fmadd_pd(r, c(1.0 / 5040.0), c(1.0 / 720.0));
        let e89 = _mm256_fmadd_pd(r, c(1.0 / 362880.0), c(1.0 / 40320.0));
        let e1011 = _mm256_fmadd_pd(r, c(1.0 / 39916800.0), c(1.0 / 3628800.0));
        let e1213 = _mm256_fmadd_pd(r, c(1.0 / 6227020800.0), c(1.0 / 479001600.0));
        let lo = _mm256_fmadd_pd(r2, e23, e01);
        let mid = _mm256_fmadd_pd(r2, e67, e45);
        let hi = _mm256_fmadd_pd(r2, e1011, e89);
        let p = _mm256_fmadd_pd(
            r4,
            _mm256_fmadd_pd(r4, _mm256_fmadd_pd(r4, e1213, hi), mid),
            lo,
        );
        let scale = _mm256_castsi256_pd(_mm256_slli_epi64(
            _mm256_add_epi64(k_int, _mm256_set1_epi64x(1023)),
            52,
        ));
        let val = _mm256_mul_pd(p, scale);
        // lanes below the cutoff flush to zero
        let keep = _mm256_cmp_pd(x, _mm256_set1_pd(EXP_CUTOFF), _CMP_GE_OQ);
        _mm256_and_pd(val, keep)
    }

    /// Membership sums of row `i` against rows `i+1..p` (n = 2), four
    /// pairs per iteration with a scalar tail.
    ///
    /// # Safety
    /// Requires AVX2 and FMA.
    #[target_feature(enable = "avx2,fma")]
    pub unsafe fn row_pair_sums_sq_avx<const M: usize, const M1: usize>(
        comp_m: &[Vec<f64>],
        comp_m1: &[Vec<f64>],
        i: usize,
        js: usize,
        inv_r: f64,
    ) -> (f64, f64) {
        let ci: [f64; M] = std::array::from_fn(|k| comp_m[k][i]);
        let ci1: [f64; M1] = std::array::from_fn(|k| comp_m1[k][i]);
        let cols: [&[f64]; M] = std::array::from_fn(|k| &comp_m[k][js..]);
        let cols1: [&[f64]; M1] = std::array::from_fn(|k| &comp_m1[k][js..]);
        let len = cols[0].len();
        let lanes = len / 4 * 4;

        let abs_mask = _mm256_set1_pd(f64::from_bits(0x7FFF_FFFF_FFFF_FFFF));
        let neg_inv_r = _mm256_set1_pd(-inv_r);
        let ci_v: [__m256d; M] = std::array::from_fn(|k| _mm256_set1_pd(ci[k]));
        let ci1_v: [__m256d; M1] = std::array::from_fn(|k| _mm256_set1_pd(ci1[k]));
        let mut acc = _mm256_setzero_pd();
        let mut acc1 = _mm256_setzero_pd();
        let mut idx = 0;
        while idx < lanes {
            let mut d = _mm256_setzero_pd();
            for k in 0..M {
                let v = _mm256_loadu_pd(cols[k].as_ptr().add(idx));
                let diff = _mm256_and_pd(_mm256_sub_pd(ci_v[k], v), abs_mask);
                d = _mm256_max_pd(d, diff);
            }
            let mut d1 = _mm256_setzero_pd();
            for k in 0..M1 {
                let v = _mm256_loadu_pd(cols1[k].as_ptr().add(idx));
                let diff = _mm256_and_pd(_mm256_sub_pd(ci1_v[k], v), abs_mask);
                d1 = _mm256_max_pd(d1, diff);
            }
            let arg = _mm256_mul_pd(_mm256_mul_pd(d, d), neg_inv_r);
            let arg1 = _mm256_mul_pd(_mm256_mul_pd(d1, d1), neg_inv_r);
            acc = _mm256_add_pd(acc, exp_nonpos_x4(arg));
            acc1 = _mm256_add_pd(acc1, exp_nonpos_x4(arg1));
            idx += 4;
        }
        let fold = |v: __m256d| -> f64 {
            let mut out = [0.0f64; 4];
            _mm256_storeu_pd(out.as_mut_ptr(), v);
            ((out[0] + out[1]) + out[2]) + out[3]
        };
        let mut sm = fold(acc);
        let mut sm1 = fold(acc1);
        for idx in lanes..len {
            let mut d = 0.0f64;
            for k in 0..M {
                d = super::branchless_max(d, (ci[k] - cols[k][idx]).abs());
            }
            let mut d1 = 0.0f64;
            for k in 0..M1 {
                d1 = super::branchless_max(d1, (ci1[k] - cols1[k][idx]).abs());
            }
            sm += exp_nonpos(-(d * d) * inv_r);
            sm1 += exp_nonpos(-(d1 * d1) * inv_r);
        }
        (sm, sm1)
    }
}

// ── approximate entropy ──────────────────────────────────────────────────

/// Approximate entropy Φ^m − Φ^{m+1} with self-matches included and a
/// Heaviside similarity at threshold `r × sample SD`.
pub fn approximate_entropy(x: &TimeSeries, m: usize, r: f64) -> Result<f64, EntropyError> {
    approximate_entropy_slice(x.samples(), m, r)
}

pub(crate) fn approximate_entropy_slice(
    x: &[f64],
    m: usize,
    r: f64,
) -> Result<f64, EntropyError> {
    if m < 1 || !(r > 0.0) {
        return Err(EntropyError::InvalidParameter("need m >= 1 and r > 0"));
    }
    let n = x.len();
    if n < m + 2 {
        return Err(EntropyError::TooShort {
            got: n,
            needed: m + 2,
        });
    }
    let threshold = r * sample_sd(x);
    Ok(apen_phi(x, m, threshold) - apen_phi(x, m + 1, threshold))
}

fn apen_phi(x: &[f64], len: usize, threshold: f64) -> f64 {
    let count = x.len() - len + 1;
    let mut matches = vec![1u32; count]; // self-match included
    for i in 0..count {
        for j in i + 1..count {
            if cheb_within(&x[i..i + len], &x[j..j + len], threshold) {
                matches[i] += 1;
                matches[j] += 1;
            }
        }
    }
    // exact divisions keep the all-match case at exactly ln(1) = 0
    matches
        .iter()
        .map(|&c| (c as f64 / count as f64).ln())
        .sum::<f64>()
        / count as f64
}

#[inline]
fn cheb_within(a: &[f64], b: &[f64], threshold: f64) -> bool {
    a.iter().zip(b).all(|(u, v)| (u - v).abs() <= threshold)
}

// ── sample entropy ───────────────────────────────────────────────────────

/// Sample entropy −ln(A/B) with self-matches excluded. Returns `None`
/// (undefined) when either match count is zero.
pub fn sample_entropy(x: &TimeSeries, m: usize, r: f64) -> Result<Option<f64>, EntropyError> {
    sample_entropy_slice(x.samples(), m, r)
}

pub(crate) fn sample_entropy_slice(
    x: &[f64],
    m: usize,
    r: f64,
) -> Result<Option<f64>, EntropyError> {
    if m < 1 || !(r > 0.0) {
        return Err(EntropyError::InvalidParameter("need m >= 1 and r > 0"));
    }
    let n = x.len();
    if n < m + 2 {
        return Err(EntropyError::TooShort {
            got: n,
            needed: m + 2,
        });
    }
    let threshold = r * sample_sd(x);
    let p = n - m;
    let mut b = 0u64;
    let mut a = 0u64;
    for i in 0..p {
        for j in i + 1..p {
            if cheb_within(&x[i..i + m], &x[j..j + m], threshold) {
                b += 1;
                // uncentered templates extend componentwise
                if (x[i + m] - x[j + m]).abs() <= threshold {
                    a += 1;
                }
            }
        }
    }
    if a == 0 || b == 0 {
        return Ok(None);
    }
    Ok(Some(-((a as f64 / b as f64).ln())))
}

// ── multi-scale profiles ─────────────────────────────────────────────────

/// Multi-scale profile over τ = 1..scales with default EMD settings for the
/// inherent variant (sift defaults, 1 Hz trend cutoff).
pub fn multiscale_profile(
    x: &TimeSeries,
    method: Method,
    p: &EntropyParams,
    scales: usize,
) -> Result<EntropyProfile, EntropyError> {
    multiscale_profile_with(x, method, p, scales, &SiftConfig::default(), 1.0)
}

/// Multi-scale profile with explicit de-trending controls.
///
/// The inherent variant de-trends once (EMD + cutoff reconstruction), then
/// z-scores and coarse-grains per scale; the plain variants skip the EMD
/// stage but keep z-scoring and coarse-graining. Scales are computed in
/// parallel; results do not depend on the execution order.
pub fn multiscale_profile_with(
    x: &TimeSeries,
    method: Method,
    p: &EntropyParams,
    scales: usize,
    sift: &SiftConfig,
    detrend_cutoff_hz: f64,
) -> Result<EntropyProfile, EntropyError> {
    p.validate()?;
    if scales == 0 {
        return Err(EntropyError::InvalidParameter("scales must be >= 1"));
    }
    let needed = p.m + 2;
    if x.len() / scales < needed {
        return Err(EntropyError::TooManyScales {
            requested: scales,
            len: x.len(),
            max_feasible: x.len() / needed,
        });
    }
    let base = match method {
        Method::InherentFuzzEn => {
            let d = decompose(x, sift)?;
            let detrended = detrend_reconstruct(&d, detrend_cutoff_hz)?;
            zscore(&detrended)?
        }
        _ => zscore(x)?,
    };
    let results: Vec<Result<Option<f64>, EntropyError>> = (1..=scales)
        .into_par_iter()
        .map(|tau| {
            let cg = coarse_grain(&base, tau)?;
            match method {
                Method::ApEn => approximate_entropy(&cg, p.m, p.r).map(Some),
                Method::SampEn => sample_entropy(&cg, p.m, p.r),
                Method::FuzzEn | Method::InherentFuzzEn => fuzzy_entropy(&cg, p).map(Some),
            }
        })
        .collect();
    let mut values = Vec::with_capacity(scales);
    for r in results {
        values.push(r?);
    }
    Ok(EntropyProfile::new(values))
}

// ── relative profiles and aggregation ────────────────────────────────────

fn sub_options(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x - y),
        _ => None,
    }
}

/// Per-scale stimulus-minus-baseline difference (RE).
pub fn relative_profile(
    stim: &EntropyProfile,
    baseline: &EntropyProfile,
) -> Result<RelativeProfile, EntropyError> {
    if stim.scales() != baseline.scales() {
        return Err(EntropyError::ScaleMismatch(
            stim.scales(),
            baseline.scales(),
        ));
    }
    let values = stim
        .values()
        .iter()
        .zip(baseline.values())
        .map(|(&s, &b)| sub_options(s, b))
        .collect();
    Ok(RelativeProfile {
        region: None,
        values,
    })
}

/// Per-scale change between the fifth and first stimulus responses
/// (RE₅ − RE₁). Undefined entries propagate.
pub fn transitional_variance(
    re_first: &RelativeProfile,
    re_fifth: &RelativeProfile,
) -> Result<Vec<Option<f64>>, EntropyError> {
    if re_first.scales() != re_fifth.scales() {
        return Err(EntropyError::ScaleMismatch(
            re_first.scales(),
            re_fifth.scales(),
        ));
    }
    Ok(re_fifth
        .values()
        .iter()
        .zip(re_first.values())
        .map(|(&f5, &f1)| sub_options(f5, f1))
        .collect())
}

fn mean_rows(rows: &[&[Option<f64>]]) -> Vec<Option<f64>> {
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

/// Uniform-weight per-scale mean of entropy profiles (session blocks,
/// occipital channels, per-subject phase averaging). A scale is undefined
/// in the result if it is undefined in any input.
pub fn aggregate_sessions(profiles: &[EntropyProfile]) -> Result<EntropyProfile, EntropyError> {
    if profiles.is_empty() {
        return Err(EntropyError::EmptySet);
    }
    let scales = profiles[0].scales();
    for p in profiles {
        if p.scales() != scales {
            return Err(EntropyError::ScaleMismatch(scales, p.scales()));
        }
    }
    let rows: Vec<&[Option<f64>]> = profiles.iter().map(|p| p.values()).collect();
    Ok(EntropyProfile::new(mean_rows(&rows)))
}

/// Uniform-weight per-scale mean of relative profiles; keeps the first
/// input's region tag.
pub fn aggregate_relative(
    profiles: &[RelativeProfile],
) -> Result<RelativeProfile, EntropyError> {
    if profiles.is_empty() {
        return Err(EntropyError::EmptySet);
    }
    let scales = profiles[0].scales();
    for p in profiles {
        if p.scales() != scales {
            return Err(EntropyError::ScaleMismatch(scales, p.scales()));
        }
    }
    let rows: Vec<&[Option<f64>]> = profiles.iter().map(|p| p.values()).collect();
    Ok(RelativeProfile {
        region: profiles[0].region,
        values: mean_rows(&rows),
    })
}
