//! Independent reference implementations used only by the acceptance
//! suite. Each is a direct, unoptimized transcription of the definition it
//! checks — full double loops, std library exp/ln, no shared code with the
//! implementation paths under test.

/// Sample standard deviation (N−1), computed independently.
pub fn sd(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (ss / (n - 1.0)).sqrt()
}

fn chebyshev(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn centered(window: &[f64]) -> Vec<f64> {
    let mean = window.iter().sum::<f64>() / window.len() as f64;
    window.iter().map(|v| v - mean).collect()
}

/// Fuzzy entropy: ln φ^m − ln φ^{m+1}, both φ averaged over the same
/// N−m mean-centered templates, similarity exp(−(d/sd)^n / r).
pub fn naive_fuzzy_entropy(x: &[f64], m: usize, n_exp: f64, r: f64) -> f64 {
    let sdev = sd(x);
    if sdev == 0.0 {
        return 0.0;
    }
    let p = x.len() - m;
    let tm: Vec<Vec<f64>> = (0..p).map(|i| centered(&x[i..i + m])).collect();
    let tm1: Vec<Vec<f64>> = (0..p).map(|i| centered(&x[i..i + m + 1])).collect();
    let phi = |templates: &[Vec<f64>]| -> f64 {
        let mut outer = 0.0;
        for i in 0..p {
            let mut inner = 0.0;
            for j in 0..p {
                if j == i {
                    continue;
                }
                let d = chebyshev(&templates[i], &templates[j]) / sdev;
                inner += (-(d.powf(n_exp)) / r).exp();
            }
            outer += inner / (p - 1) as f64;
        }
        outer / p as f64
    };
    phi(&tm).ln() - phi(&tm1).ln()
}

/// Approximate entropy: Φ^m − Φ^{m+1} with self-matches, Heaviside
/// similarity at r × sd.
pub fn naive_approximate_entropy(x: &[f64], m: usize, r: f64) -> f64 {
    let threshold = r * sd(x);
    let phi = |len: usize| -> f64 {
        let count = x.len() - len + 1;
        let mut acc = 0.0;
        for i in 0..count {
            let mut matches = 0usize;
            for j in 0..count {
                if chebyshev(&x[i..i + len], &x[j..j + len]) <= threshold {
                    matches += 1;
                }
            }
            acc += (matches as f64 / count as f64).ln();
        }
        acc / count as f64
    };
    phi(m) - phi(m + 1)
}

/// Sample entropy: −ln(A/B) over the first N−m templates, self-matches
/// excluded; None when either count is zero.
pub fn naive_sample_entropy(x: &[f64], m: usize, r: f64) -> Option<f64> {
    let threshold = r * sd(x);
    let p = x.len() - m;
    let mut b = 0u64;
    let mut a = 0u64;
    for i in 0..p {
        for j in 0..p {
            if j == i {
                continue;
            }
            if chebyshev(&x[i..i + m], &x[j..j + m]) <= threshold {
                b += 1;
            }
            if chebyshev(&x[i..i + m + 1], &x[j..j + m + 1]) <= threshold {
                a += 1;
            }
        }
    }
    if a == 0 || b == 0 {
        None
    } else {
        Some(-((a as f64 / b as f64).ln()))
    }
}

/// Canonical correlations by the thin-QR route: modified Gram–Schmidt
/// orthonormalization of the centered data and template columns, then a
/// one-sided Jacobi SVD of Qxᵀ·Qy. `rows` are channel/template rows over
/// time.
pub fn qr_svd_canonical_correlations(x_rows: &[Vec<f64>], y_rows: &[Vec<f64>]) -> Vec<f64> {
    let qx = mgs_orthonormalize(x_rows);
    let qy = mgs_orthonormalize(y_rows);
    // C[i][j] = qx_i · qy_j
    let c: Vec<Vec<f64>> = qx
        .iter()
        .map(|qi| qy.iter().map(|qj| dot(qi, qj)).collect())
        .collect();
    let mut sv = one_sided_jacobi_singular_values(&c);
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv.truncate(x_rows.len().min(y_rows.len()));
    sv.iter().map(|v| v.clamp(0.0, 1.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Modified Gram–Schmidt with one re-orthogonalization pass.
fn mgs_orthonormalize(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for row in rows {
        let mean = row.iter().sum::<f64>() / row.len() as f64;
        let mut v: Vec<f64> = row.iter().map(|x| x - mean).collect();
        for _ in 0..2 {
            for q in &basis {
                let proj = dot(&v, q);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-12 {
            for vi in &mut v {
                *vi /= norm;
            }
            basis.push(v);
        }
    }
    basis
}

/// Singular values of a small dense matrix by one-sided Jacobi rotations
/// on the columns.
fn one_sided_jacobi_singular_values(m: &[Vec<f64>]) -> Vec<f64> {
    let rows = m.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = m[0].len();
    // column-major working copy; operate on the taller orientation
    let (r, c, col) = if rows >= cols {
        let col: Vec<Vec<f64>> = (0..cols).map(|j| (0..rows).map(|i| m[i][j]).collect()).collect();
        (rows, cols, col)
    } else {
        let col: Vec<Vec<f64>> = (0..rows).map(|i| m[i].clone()).collect();
        (cols, rows, col)
    };
    let _ = r;
    let mut a = col;
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..c {
            for q in p + 1..c {
                let app = dot(&a[p], &a[p]);
                let aqq = dot(&a[q], &a[q]);
                let apq = dot(&a[p], &a[q]);
                off = off.max(apq.abs() / (app * aqq).sqrt().max(1e-300));
                if apq.abs() <= 1e-15 * (app * aqq).sqrt() {
                    continue;
                }
                let theta = 0.5 * (2.0 * apq).atan2(app - aqq);
                let (s, co) = theta.sin_cos();
                for i in 0..a[p].len() {
                    let vp = a[p][i];
                    let vq = a[q][i];
                    a[p][i] = co * vp + s * vq;
                    a[q][i] = -s * vp + co * vq;
                }
            }
        }
        if off < 1e-14 {
            break;
        }
    }
    a.iter().map(|cvec| dot(cvec, cvec).sqrt()).collect()
}

/// Two-tailed Student-t p-value by quadrature: with u = √ν·tanθ the
/// density integral becomes ∫ cos^{ν−1}θ dθ, evaluated by composite
/// Simpson. No gamma function, no incomplete beta.
pub fn quadrature_t_p_two_tailed(t: f64, df: f64) -> f64 {
    let theta_t = (t.abs() / df.sqrt()).atan();
    let integrand = |theta: f64| theta.cos().powf(df - 1.0);
    let tail = simpson(&integrand, theta_t, std::f64::consts::FRAC_PI_2, 20_000);
    let whole = simpson(&integrand, 0.0, std::f64::consts::FRAC_PI_2, 20_000);
    (tail / whole).clamp(0.0, 1.0)
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n_even: usize) -> f64 {
    let n = n_even + n_even % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Benjamini–Hochberg step-up by direct enumeration: stable sort, scan
/// ranks from the top, adjusted values by full suffix minimum scans.
pub fn enumerate_bh(p_values: &[f64], alpha: f64) -> (Vec<bool>, Vec<f64>) {
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| p_values[i].partial_cmp(&p_values[j]).unwrap());
    let mut k_star = 0;
    for rank in (1..=m).rev() {
        if p_values[order[rank - 1]] <= rank as f64 * alpha / m as f64 {
            k_star = rank;
            break;
        }
    }
    let mut rejected = vec![false; m];
    let mut adjusted = vec![0.0; m];
    for (rank0, &idx) in order.iter().enumerate() {
        rejected[idx] = rank0 < k_star;
        let mut best = f64::INFINITY;
        for j in rank0..m {
            let candidate = p_values[order[j]] * m as f64 / (j + 1) as f64;
            if candidate < best {
                best = candidate;
            }
        }
        adjusted[idx] = best.min(1.0);
    }
    (rejected, adjusted)
}

/// ICC(1,1) by the total-sum-of-squares decomposition (SSB = SST − SSW),
/// a different arithmetic route than the implementation's direct SSB.
pub fn ss_decomposition_icc(ratings: &[Vec<f64>]) -> f64 {
    let n = ratings.len();
    let k = ratings[0].len();
    let grand = ratings.iter().flatten().sum::<f64>() / (n * k) as f64;
    let sst: f64 = ratings
        .iter()
        .flatten()
        .map(|v| (v - grand) * (v - grand))
        .sum();
    let ssw: f64 = ratings
        .iter()
        .map(|row| {
            let mean = row.iter().sum::<f64>() / k as f64;
            row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
        })
        .sum();
    let ssb = sst - ssw;
    let msb = ssb / (n - 1) as f64;
    let msw = ssw / (n * (k - 1)) as f64;
    (msb - msw) / (msb + (k - 1) as f64 * msw)
}

/// AUC as the Mann–Whitney pair statistic: (concordant + 0.5·tied) over
/// all positive-negative pairs.
pub fn pair_statistic_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let mut concordant = 0.0;
    let mut pairs = 0.0;
    for (i, &pi) in positive.iter().enumerate() {
        if !pi {
            continue;
        }
        for (j, &pj) in positive.iter().enumerate() {
            if pj {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                concordant += 1.0;
            } else if scores[i] == scores[j] {
                concordant += 0.5;
            }
        }
    }
    concordant / pairs
}
