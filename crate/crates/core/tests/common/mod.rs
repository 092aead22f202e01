//! Shared dense oracles for integration tests.
//!
//! Everything here is built from defining formulas (literal DFT matrices, LU
//! solves, explicit selection matrices) so it shares no code path with the
//! FFT/lag-table/Cholesky machinery it cross-checks.
#![allow(dead_code)] // each test binary uses a different subset

use gmmce_core::channel_sim::PilotPattern;
use gmmce_core::gmm_em::GmmModel;
use gmmce_core::structured_cov::CovarianceModel;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

pub fn dft_matrix(n: usize) -> DMatrix<Complex64> {
    let s = 1.0 / (n as f64).sqrt();
    DMatrix::from_fn(n, n, |k, j| {
        let ph = -2.0 * std::f64::consts::PI * (k * j) as f64 / n as f64;
        Complex64::new(ph.cos(), ph.sin()) * s
    })
}

/// First `n` columns of the unitary `2n`-point DFT matrix.
pub fn q_matrix(n: usize) -> DMatrix<Complex64> {
    let full = dft_matrix(2 * n);
    full.columns(0, n).into_owned()
}

pub fn kron(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b)
}

fn diag_c(v: &[f64]) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(v.len(), v.len());
    for (i, &x) in v.iter().enumerate() {
        m[(i, i)] = Complex64::new(x, 0.0);
    }
    m
}

/// Dense expansion straight from the defining transforms.
pub fn dense_cov_oracle(cov: &CovarianceModel) -> DMatrix<Complex64> {
    match cov {
        CovarianceModel::Full(m) => m.clone(),
        CovarianceModel::BlockToeplitz { spectrum, n_c, n_t } => {
            let q = kron(&q_matrix(*n_t), &q_matrix(*n_c));
            q.adjoint() * diag_c(spectrum) * q
        }
        CovarianceModel::Toeplitz1D { spectrum, dim } => {
            let q = q_matrix(*dim);
            q.adjoint() * diag_c(spectrum) * q
        }
        CovarianceModel::BlockCirculant { spectrum, n_c, n_t } => {
            let f = kron(&dft_matrix(*n_t), &dft_matrix(*n_c));
            f.adjoint() * diag_c(spectrum) * f
        }
        CovarianceModel::Circulant1D { spectrum, dim } => {
            let f = dft_matrix(*dim);
            f.adjoint() * diag_c(spectrum) * f
        }
        CovarianceModel::Diagonal(d) => diag_c(d),
        CovarianceModel::Kronecker { time, freq } => {
            kron(&dense_cov_oracle(time), &dense_cov_oracle(freq))
        }
    }
}

pub fn selection_matrix(pattern: &PilotPattern) -> DMatrix<Complex64> {
    let a = pattern.dense_selection();
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| Complex64::new(a[(i, j)], 0.0))
}

/// Naive mixture conditional-mean estimate: explicit selection matrix, LU
/// inverses, direct determinant, inline softmax and truncation.
pub fn naive_gmm_estimate(
    model: &GmmModel,
    pattern: &PilotPattern,
    sigma2: f64,
    rho: f64,
    y: &DVector<Complex64>,
) -> DVector<Complex64> {
    let a = selection_matrix(pattern);
    let np = a.nrows();
    let k = model.n_components();
    let mut logj = Vec::with_capacity(k);
    let mut terms = Vec::with_capacity(k);
    for kk in 0..k {
        let c = dense_cov_oracle(&model.covariances[kk]);
        let mut cy = &a * &c * a.adjoint();
        for i in 0..np {
            cy[(i, i)] += Complex64::new(sigma2, 0.0);
        }
        let lu = cy.clone().lu();
        let det = lu.determinant();
        let amu = &a * &model.means[kk];
        let d = y - &amu;
        let sol = lu.solve(&d).expect("oracle LU solve");
        let quad = d.dotc(&sol).re;
        logj.push(model.weights[kk].ln() - np as f64 * std::f64::consts::PI.ln() - det.re.ln() - quad);
        terms.push(&model.means[kk] + &c * a.adjoint() * sol);
    }
    // softmax
    let m = logj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logj.iter().map(|&v| (v - m).exp()).collect();
    let tot: f64 = exps.iter().sum();
    let post: Vec<f64> = exps.iter().map(|&v| v / tot).collect();
    // sort descending, ties by index
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &z| post[z].partial_cmp(&post[x]).unwrap().then(x.cmp(&z)));
    let mut cum = 0.0;
    let mut retained = Vec::new();
    for idx in order {
        retained.push(idx);
        cum += post[idx];
        if cum >= rho {
            break;
        }
    }
    let denom: f64 = retained.iter().map(|&i| post[i]).sum();
    let mut h = DVector::<Complex64>::zeros(model.dim());
    for &idx in &retained {
        h += &terms[idx] * Complex64::new(post[idx] / denom, 0.0);
    }
    h
}

/// Random Hermitian positive-definite matrix.
pub fn random_hpd<R: Rng>(n: usize, rng: &mut R) -> DMatrix<Complex64> {
    let b = DMatrix::from_fn(n, n, |_, _| gmmce_core::rng::standard_complex(rng));
    let mut c = &b * b.adjoint();
    for i in 0..n {
        c[(i, i)] += Complex64::new(0.5 * n as f64, 0.0);
    }
    let h = (c.clone() + c.adjoint()) * Complex64::new(0.5, 0.0);
    h
}

/// A reference mixture with full covariances over `n` dimensions.
pub fn random_gmm<R: Rng>(n: usize, k: usize, rng: &mut R, dims: gmmce_core::structured_cov::ModelDims) -> GmmModel {
    let mut weights: Vec<f64> = (0..k).map(|_| rng.gen_range(0.2..1.0)).collect();
    let tot: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= tot);
    let means: Vec<DVector<Complex64>> = (0..k)
        .map(|_| DVector::from_fn(n, |_, _| gmmce_core::rng::standard_complex(rng) * 2.0))
        .collect();
    let covariances: Vec<CovarianceModel> = (0..k)
        .map(|_| CovarianceModel::Full(random_hpd(n, rng) * Complex64::new(1.0 / n as f64, 0.0)))
        .collect();
    GmmModel {
        weights,
        means,
        covariances,
        dims,
    }
}

/// Draw one sample from a full-covariance mixture.
pub fn sample_gmm<R: Rng>(model: &GmmModel, rng: &mut R) -> (usize, DVector<Complex64>) {
    let u: f64 = rng.gen_range(0.0..1.0);
    let mut cum = 0.0;
    let mut pick = model.n_components() - 1;
    for (i, &w) in model.weights.iter().enumerate() {
        cum += w;
        if u <= cum {
            pick = i;
            break;
        }
    }
    let c = dense_cov_oracle(&model.covariances[pick]);
    let l = c.cholesky().expect("sample cov PD").l();
    let g = DVector::from_fn(model.dim(), |_, _| gmmce_core::rng::standard_complex(rng));
    let x = &model.means[pick] + &l * g;
    (pick, x)
}
