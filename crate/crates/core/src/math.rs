//! Small numeric helpers shared across modules.

/// Arithmetic mean. Empty input yields NaN.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (N−1 denominator), the convention used
/// everywhere in this crate (z-scoring, entropy r scaling, summaries).
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Pearson correlation of two equal-length slices.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let ma = mean(a);
    let mb = mean(b);
    let mut num = 0.0;
    let mut da = 0.0;
    let mut db = 0.0;
    for (x, y) in a.iter().zip(b) {
        num += (x - ma) * (y - mb);
        da += (x - ma) * (x - ma);
        db += (y - mb) * (y - mb);
    }
    num / (da * db).sqrt()
}

/// Spectral power at one frequency via the Goertzel recurrence
/// (single-bin DFT, |X(k)|²/N²). The requested frequency is snapped to the
/// nearest DFT bin.
pub fn goertzel_power(x: &[f64], freq_hz: f64, rate_hz: f64) -> f64 {
    let n = x.len();
    if n == 0 {
        return 0.0;
    }
    let k = (freq_hz * n as f64 / rate_hz).round();
    let omega = std::f64::consts::TAU * k / n as f64;
    let coeff = 2.0 * omega.cos();
    let mut s_prev = 0.0;
    let mut s_prev2 = 0.0;
    for &sample in x {
        let s = sample + coeff * s_prev - s_prev2;
        s_prev2 = s_prev;
        s_prev = s;
    }
    let re = s_prev - s_prev2 * omega.cos();
    let im = s_prev2 * omega.sin();
    (re * re + im * im) / (n as f64 * n as f64)
}

// exp() below -EXP_CUTOFF is indistinguishable from zero for every sum this
// crate forms (terms < 1e-300 against totals of order 1e-3..1e8).
const EXP_CUTOFF: f64 = -700.0;
const LOG2_E: f64 = std::f64::consts::LOG2_E;
// ln(2) split for Cody–Waite argument reduction (fdlibm constants).
const LN2_HI: f64 = 6.931_471_803_691_238_2e-1;
const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;

/// exp(x) for non-positive finite x, accurate to a few ulp.
///
/// Branch-free (no libm calls; rounding via the 1.5·2^52 bias trick), so
/// LLVM vectorizes tight loops around it — the fuzzy-entropy pair loop
/// spends most of its time here. Callers must not pass positive or
/// non-finite values.
#[inline]
pub fn exp_nonpos(x: f64) -> f64 {
    debug_assert!(x <= 0.0 && x.is_finite());
    // round to nearest by biasing into the 2^52 mantissa window
    const MAGIC: f64 = 1.5 * (1u64 << 52) as f64;
    let t = x * LOG2_E + MAGIC;
    let k_int = (t.to_bits() as i64 & 0x000F_FFFF_FFFF_FFFF) - 0x0008_0000_0000_0000;
    let k = t - MAGIC;
    let r = (x - k * LN2_HI) - k * LN2_LO;
    // Taylor series to degree 13 in Estrin form (short dependency chains);
    // remainder is below one ulp on |r| <= ln2/2.
    let r2 = r * r;
    let r4 = r2 * r2;
    let e01 = 1.0 + r;
    let e23 = 0.5 + r * (1.0 / 6.0);
    let e45 = 1.0 / 24.0 + r * (1.0 / 120.0);
    let e67 = 1.0 / 720.0 + r * (1.0 / 5040.0);
    let e89 = 1.0 / 40320.0 + r * (1.0 / 362880.0);
    let e1011 = 1.0 / 3628800.0 + r * (1.0 / 39916800.0);
    let e1213 = 1.0 / 479001600.0 + r * (1.0 / 6227020800.0);
    let lo = e01 + r2 * e23;
    let mid = e45 + r2 * e67;
    let hi = e89 + r2 * e1011;
    let top = e1213;
    let p = lo + r4 * (mid + r4 * (hi + r4 * top));
    // 2^k assembled from bits; k in [-1010, 0] for x in [-700, 0].
    let scale = f64::from_bits(((k_int + 1023) as u64) << 52);
    if x < EXP_CUTOFF {
        0.0
    } else {
        p * scale
    }
}
