//! Canonical-correlation artifact removal against sinusoidal stimulus
//! templates (fundamental plus second harmonic).
//!
//! `cca_solve` mean-centers both sides, forms covariance matrices with a
//! small ridge (ε·trace/dim, ε = 1e-8), whitens the data side through its
//! Cholesky factor, and solves the resulting symmetric eigenproblem — the
//! standard CCA generalized eigenproblem. `denoise` keeps the top-k
//! data-side weight vectors and maps the epoch through
//! `pinv(Aᵀ)·Aᵀ` (A is keep×channels, so the inverse is Moore–Penrose:
//! an orthogonal projection onto the span of the kept components).

use crate::linalg::{cholesky, jacobi_eigen_sym, solve_lower, solve_lower_transpose, Mat};
use crate::signal::{MultiChannelEpoch, TimeSeries};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CcaError {
    #[error("stimulus frequency must be positive, got {0} Hz")]
    InvalidFrequency(f64),
    #[error("second harmonic of {f1} Hz reaches {harmonic} Hz, at or above Nyquist ({nyquist} Hz)")]
    HarmonicAboveNyquist {
        f1: f64,
        harmonic: f64,
        nyquist: f64,
    },
    #[error("template needs at least 2 samples, got {0}")]
    TemplateTooShort(usize),
    #[error("need at least 2 channels, got {0}")]
    TooFewChannels(usize),
    #[error("epoch too short for CCA: {len} samples with {channels} channels")]
    EpochTooShort { len: usize, channels: usize },
    #[error("template length {tmpl} does not match epoch length {epoch}")]
    LengthMismatch { tmpl: usize, epoch: usize },
    #[error("covariance is singular even after ridge regularization")]
    SingularCovariance,
    #[error("requested {requested} components but only {available} are available")]
    InsufficientComponents { requested: usize, available: usize },
}

const RIDGE_EPS: f64 = 1e-8;

/// Sin/cos reference rows at the stimulus frequency f1 and its second
/// harmonic 2·f1, sampled at t = k/rate.
#[derive(Debug, Clone)]
pub struct TemplateBank {
    pub f1: f64,
    rows: [Vec<f64>; 4],
}

impl TemplateBank {
    pub fn rows(&self) -> &[Vec<f64>; 4] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Build the four-row template bank.
pub fn make_template(f1: f64, length: usize, rate: f64) -> Result<TemplateBank, CcaError> {
    if !(f1 > 0.0) {
        return Err(CcaError::InvalidFrequency(f1));
    }
    if 2.0 * f1 >= rate / 2.0 {
        return Err(CcaError::HarmonicAboveNyquist {
            f1,
            harmonic: 2.0 * f1,
            nyquist: rate / 2.0,
        });
    }
    if length < 2 {
        return Err(CcaError::TemplateTooShort(length));
    }
    let f2 = 2.0 * f1;
    let mut rows = [
        Vec::with_capacity(length),
        Vec::with_capacity(length),
        Vec::with_capacity(length),
        Vec::with_capacity(length),
    ];
    for k in 0..length {
        let t = k as f64 / rate;
        rows[0].push((std::f64::consts::TAU * f1 * t).sin());
        rows[1].push((std::f64::consts::TAU * f1 * t).cos());
        rows[2].push((std::f64::consts::TAU * f2 * t).sin());
        rows[3].push((std::f64::consts::TAU * f2 * t).cos());
    }
    Ok(TemplateBank { f1, rows })
}

/// Canonical correlations (descending, in [0, 1]) and the matching
/// data-side weight vectors, scaled to unit variance (wᵀ·Cxx·w = 1) with a
/// fixed sign convention.
#[derive(Debug, Clone)]
pub struct CcaSolution {
    pub correlations: Vec<f64>,
    pub weights: Vec<Vec<f64>>,
}

fn centered_rows(rows: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    rows.into_iter()
        .map(|mut r| {
            let m = r.iter().sum::<f64>() / r.len() as f64;
            for v in &mut r {
                *v -= m;
            }
            r
        })
        .collect()
}

fn covariance(a: &[Vec<f64>], b: &[Vec<f64>]) -> Mat {
    let n = a[0].len() as f64;
    let mut c = Mat::zeros(a.len(), b.len());
    for (i, ra) in a.iter().enumerate() {
        for (j, rb) in b.iter().enumerate() {
            c[(i, j)] = ra.iter().zip(rb).map(|(x, y)| x * y).sum::<f64>() / (n - 1.0);
        }
    }
    c
}

fn add_ridge(c: &mut Mat) {
    let dim = c.rows;
    let trace: f64 = (0..dim).map(|i| c[(i, i)]).sum();
    let ridge = RIDGE_EPS * trace / dim as f64;
    for i in 0..dim {
        c[(i, i)] += ridge;
    }
}

/// Solve the CCA eigenproblem between an epoch and a template bank.
pub fn cca_solve(
    data: &MultiChannelEpoch,
    tmpl: &TemplateBank,
) -> Result<CcaSolution, CcaError> {
    let dx = data.channels().len();
    if dx < 2 {
        return Err(CcaError::TooFewChannels(dx));
    }
    let n = data.len();
    if tmpl.len() != n {
        return Err(CcaError::LengthMismatch {
            tmpl: tmpl.len(),
            epoch: n,
        });
    }
    if n <= dx + 4 {
        return Err(CcaError::EpochTooShort {
            len: n,
            channels: dx,
        });
    }
    let x = centered_rows(
        data.channels()
            .iter()
            .map(|(_, ts)| ts.samples().to_vec())
            .collect(),
    );
    let y = centered_rows(tmpl.rows().to_vec());
    let dy = y.len();

    let mut cxx = covariance(&x, &x);
    let mut cyy = covariance(&y, &y);
    let cxy = covariance(&x, &y);
    add_ridge(&mut cxx);
    add_ridge(&mut cyy);

    let lx = cholesky(&cxx).ok_or(CcaError::SingularCovariance)?;
    let ly = cholesky(&cyy).ok_or(CcaError::SingularCovariance)?;

    // K = Lx⁻¹ · Cxy · Ly⁻ᵀ, column by column
    let mut k_half = Mat::zeros(dx, dy); // Lx⁻¹ Cxy
    for j in 0..dy {
        let col: Vec<f64> = (0..dx).map(|i| cxy[(i, j)]).collect();
        let solved = solve_lower(&lx, &col);
        for i in 0..dx {
            k_half[(i, j)] = solved[i];
        }
    }
    let mut k = Mat::zeros(dx, dy);
    for i in 0..dx {
        let row: Vec<f64> = (0..dy).map(|j| k_half[(i, j)]).collect();
        let solved = solve_lower(&ly, &row); // (Ly⁻¹ rowᵀ)ᵀ = row · Ly⁻ᵀ
        for j in 0..dy {
            k[(i, j)] = solved[j];
        }
    }

    // S = K·Kᵀ is symmetric with eigenvalues ρ²
    let s = k.matmul(&k.transpose());
    let (eigvals, eigvecs) = jacobi_eigen_sym(&s);
    let n_keep = dx.min(dy);
    let mut correlations = Vec::with_capacity(n_keep);
    let mut weights = Vec::with_capacity(n_keep);
    for c_idx in 0..n_keep {
        correlations.push(eigvals[c_idx].max(0.0).sqrt());
        let u: Vec<f64> = (0..dx).map(|r_idx| eigvecs[(r_idx, c_idx)]).collect();
        let mut w = solve_lower_transpose(&lx, &u);
        // sign convention: largest-magnitude entry positive
        let lead = w
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.abs().partial_cmp(&b.abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(0);
        if w[lead] < 0.0 {
            for v in &mut w {
                *v = -*v;
            }
        }
        weights.push(w);
    }
    Ok(CcaSolution {
        correlations,
        weights,
    })
}

/// Project an epoch onto the span of the top-`keep` data-side components:
/// Y' = Aᵀ·S(x), output = pinv(Aᵀ)·Y'. Shape, names, rate, and condition
/// are preserved.
pub fn denoise(
    data: &MultiChannelEpoch,
    sol: &CcaSolution,
    keep: usize,
) -> Result<MultiChannelEpoch, CcaError> {
    let available = sol.weights.len();
    if keep == 0 || keep > available {
        return Err(CcaError::InsufficientComponents {
            requested: keep,
            available,
        });
    }
    let ch = data.channels().len();
    // B = Aᵀ, keep×ch
    let b = Mat::from_rows(&sol.weights[..keep]);
    assert_eq!(b.cols, ch, "weight dimension mismatch");
    let bbt = b.matmul(&b.transpose());
    let l = cholesky(&bbt).ok_or(CcaError::SingularCovariance)?;
    // P = Bᵀ (B Bᵀ)⁻¹ B; apply per sample: x' = Bᵀ s where (BBᵀ) s = B x
    let x: Vec<&[f64]> = data.channels().iter().map(|(_, ts)| ts.samples()).collect();
    let n = data.len();
    let mut out = vec![vec![0.0f64; n]; ch];
    let mut bx = vec![0.0; keep];
    for t in 0..n {
        for (r, bxr) in bx.iter_mut().enumerate() {
            *bxr = (0..ch).map(|c| b[(r, c)] * x[c][t]).sum();
        }
        let s = solve_lower_transpose(&l, &solve_lower(&l, &bx));
        for (c, col) in out.iter_mut().enumerate() {
            col[t] = (0..keep).map(|r| b[(r, c)] * s[r]).sum();
        }
    }
    let rate = data.sample_rate();
    let channels = data
        .channels()
        .iter()
        .zip(out)
        .map(|((name, _), samples)| {
            (
                name.clone(),
                TimeSeries::new(samples, rate).expect("finite projection"),
            )
        })
        .collect();
    Ok(MultiChannelEpoch::new(channels, data.condition()).expect("same shape"))
}
