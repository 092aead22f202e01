//! Cross-checks of every FFT/lag-table fast path against literal
//! dense-transform oracles at small dimensions.

mod common;

use common::{dense_cov_oracle, dft_matrix, kron, q_matrix, selection_matrix};
use gmmce_core::channel_sim::{dps_to_cov, pdp_to_cov, PilotPattern};
use gmmce_core::linalg::HermitianChol;
use gmmce_core::rng::{standard_complex, stream_rng};
use gmmce_core::structured_cov::{
    assemble_observation_cov, circulant_apply, cross_covariance, oversampled_dft_apply,
    toeplitz_m_step_update, CovarianceModel, ModelDims, DEFAULT_SPECTRAL_FLOOR,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

fn random_dims(rng: &mut impl Rng) -> ModelDims {
    if rng.gen_bool(0.5) {
        ModelDims::OneD(rng.gen_range(2..=6))
    } else {
        ModelDims::TwoD {
            n_c: rng.gen_range(2..=6),
            n_t: rng.gen_range(2..=5),
        }
    }
}

#[test]
fn oversampled_apply_matches_dense_q_form_50_instances() {
    let mut rng = stream_rng(101, 0);
    for trial in 0..50 {
        let dims = random_dims(&mut rng);
        let n = dims.total();
        let c: Vec<f64> = (0..dims.oversampled_len())
            .map(|_| rng.gen_range(0.0..2.0))
            .collect();
        let x: Vec<Complex64> = (0..n).map(|_| standard_complex(&mut rng)).collect();
        let got = oversampled_dft_apply(&c, &x, &dims).unwrap();

        let q = match dims {
            ModelDims::OneD(m) => q_matrix(m),
            ModelDims::TwoD { n_c, n_t } => kron(&q_matrix(n_t), &q_matrix(n_c)),
        };
        let xd = DVector::from_column_slice(&x);
        let mut scaled = &q * &xd;
        for (v, s) in scaled.iter_mut().zip(c.iter()) {
            *v *= *s;
        }
        let want = q.adjoint() * scaled;
        let err: f64 = got
            .iter()
            .zip(want.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-8 * want.norm().max(1.0), "trial {trial}: {err}");
    }
}

#[test]
fn circulant_apply_matches_dense_f_form_50_instances() {
    let mut rng = stream_rng(102, 0);
    for trial in 0..50 {
        let dims = random_dims(&mut rng);
        let n = dims.total();
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
        let x: Vec<Complex64> = (0..n).map(|_| standard_complex(&mut rng)).collect();
        let got = circulant_apply(&c, &x, &dims).unwrap();

        let f = match dims {
            ModelDims::OneD(m) => dft_matrix(m),
            ModelDims::TwoD { n_c, n_t } => kron(&dft_matrix(n_t), &dft_matrix(n_c)),
        };
        let xd = DVector::from_column_slice(&x);
        let mut scaled = &f * &xd;
        for (v, s) in scaled.iter_mut().zip(c.iter()) {
            *v *= *s;
        }
        let want = f.adjoint() * scaled;
        let err: f64 = got
            .iter()
            .zip(want.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-8 * want.norm().max(1.0), "trial {trial}: {err}");
    }
}

fn random_structured_cov(rng: &mut impl Rng, n_c: usize, n_t: usize) -> CovarianceModel {
    match rng.gen_range(0..4) {
        0 => CovarianceModel::BlockToeplitz {
            spectrum: (0..4 * n_c * n_t).map(|_| rng.gen_range(0.05..2.0)).collect(),
            n_c,
            n_t,
        },
        1 => CovarianceModel::BlockCirculant {
            spectrum: (0..n_c * n_t).map(|_| rng.gen_range(0.05..2.0)).collect(),
            n_c,
            n_t,
        },
        2 => {
            let b = DMatrix::from_fn(n_c * n_t, n_c * n_t, |_, _| standard_complex(rng));
            let mut c = &b * b.adjoint();
            for i in 0..n_c * n_t {
                c[(i, i)] += Complex64::new(1.0, 0.0);
            }
            let c = (c.clone() + c.adjoint()) * Complex64::new(0.5, 0.0);
            CovarianceModel::Full(c)
        }
        _ => CovarianceModel::Kronecker {
            time: Box::new(CovarianceModel::Circulant1D {
                spectrum: (0..n_t).map(|_| rng.gen_range(0.05..2.0)).collect(),
                dim: n_t,
            }),
            freq: Box::new(CovarianceModel::Toeplitz1D {
                spectrum: (0..2 * n_c).map(|_| rng.gen_range(0.05..2.0)).collect(),
                dim: n_c,
            }),
        },
    }
}

fn random_pattern(rng: &mut impl Rng, n_c: usize, n_t: usize) -> PilotPattern {
    let pick = |rng: &mut dyn rand::RngCore, n: usize| -> Vec<usize> {
        let count = (1..=n).collect::<Vec<_>>();
        let m = 1 + (rng.next_u32() as usize) % n;
        let _ = count;
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..m {
            let j = i + (rng.next_u32() as usize) % (n - i);
            idx.swap(i, j);
        }
        idx.truncate(m);
        idx.sort_unstable();
        idx
    };
    let carriers = pick(rng, n_c);
    let symbols = pick(rng, n_t);
    PilotPattern::new(n_c, n_t, carriers, symbols).unwrap()
}

#[test]
fn observation_cov_solve_and_logdet_match_dense_50_instances() {
    let mut rng = stream_rng(103, 0);
    for trial in 0..50 {
        let n_c = rng.gen_range(2..=6);
        let n_t = rng.gen_range(2..=5);
        let cov = random_structured_cov(&mut rng, n_c, n_t);
        let pattern = random_pattern(&mut rng, n_c, n_t);
        let sigma2 = rng.gen_range(0.01..2.0);

        let oc = assemble_observation_cov(&cov, &pattern, sigma2).unwrap();

        let a = selection_matrix(&pattern);
        let cd = dense_cov_oracle(&cov);
        let np = pattern.n_pilots();
        let mut cy = &a * &cd * a.adjoint();
        for i in 0..np {
            cy[(i, i)] += Complex64::new(sigma2, 0.0);
        }

        let y = DVector::from_fn(np, |_, _| standard_complex(&mut rng));
        let got = oc.solve(&y);
        let want = cy.clone().lu().solve(&y).unwrap();
        let rel = (&got - &want).norm() / want.norm().max(1e-12);
        assert!(rel < 1e-8, "trial {trial}: solve rel {rel}");

        let det = cy.clone().lu().determinant().re;
        assert!(
            (oc.log_det() - det.ln()).abs() < 1e-8 * det.ln().abs().max(1.0),
            "trial {trial}: logdet {} vs {}",
            oc.log_det(),
            det.ln()
        );

        // Woodbury correctness: solve composed with dense multiply is the
        // identity on random right-hand sides.
        let back = &cy * &got;
        let rel = (&back - &y).norm() / y.norm();
        assert!(rel < 1e-8, "trial {trial}: roundtrip rel {rel}");

        // Cross covariance gather matches dense C A^H.
        let cross = cross_covariance(&cov, &pattern).unwrap();
        let want_cross = &cd * a.adjoint();
        assert!((&cross - &want_cross).norm() < 1e-8 * want_cross.norm().max(1.0));
    }
}

#[test]
fn to_dense_matches_oracle_all_tags() {
    let mut rng = stream_rng(104, 0);
    for _ in 0..20 {
        let n_c = rng.gen_range(2..=5);
        let n_t = rng.gen_range(2..=4);
        let cov = random_structured_cov(&mut rng, n_c, n_t);
        let got = cov.to_dense().unwrap();
        let want = dense_cov_oracle(&cov);
        assert!(
            (&got - &want).norm() < 1e-10 * want.norm().max(1.0),
            "{}",
            cov.tag_name()
        );
    }
}

#[test]
fn toeplitz_m_step_matches_literal_update_when_unclamped() {
    // 1D, c = ones, sample covariance 2I: the literal additive update from
    // the defining equations, computed with dense matrices.
    let n = 3usize;
    let dims = ModelDims::OneD(n);
    let c = vec![1.0_f64; 2 * n];
    let mut chat = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        chat[(i, i)] = Complex64::new(2.0, 0.0);
    }

    let q = q_matrix(n);
    let cd = {
        let mut d = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
        for (i, &v) in c.iter().enumerate() {
            d[(i, i)] = Complex64::new(v, 0.0);
        }
        q.adjoint() * d * &q
    };
    let cinv = cd.clone().lu().try_inverse().unwrap();
    let m = &cinv * &chat * &cinv - &cinv;
    let theta = &q * m * q.adjoint();
    let want: Vec<f64> = (0..2 * n)
        .map(|i| c[i] + c[i] * c[i] * theta[(i, i)].re)
        .collect();

    let got = toeplitz_m_step_update(&c, &chat, &dims, DEFAULT_SPECTRAL_FLOOR).unwrap();
    for (a, b) in got.iter().zip(want.iter()) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
    // For this case the update is exactly c + 1/2 everywhere.
    for v in &got {
        assert!((v - 1.5).abs() < 1e-10);
    }
}

#[test]
fn toeplitz_spectrum_converges_on_true_toeplitz_covariance() {
    // Monte-Carlo oracle: from samples of a known Toeplitz-covariance
    // Gaussian, iterating the structured update drives the dense expansion
    // toward the sample covariance's Toeplitz truth.
    let n = 8usize;
    let dims = ModelDims::OneD(n);
    let mut rng = stream_rng(105, 0);
    let true_spec: Vec<f64> = (0..2 * n).map(|i| 0.3 + 0.2 * (i % 5) as f64).collect();
    let truth = CovarianceModel::Toeplitz1D {
        spectrum: true_spec.clone(),
        dim: n,
    };
    let cd = dense_cov_oracle(&truth);
    let l = cd.clone().cholesky().unwrap().l();

    let s = 10_000;
    let mut chat = DMatrix::<Complex64>::zeros(n, n);
    for _ in 0..s {
        let g = DVector::from_fn(n, |_, _| standard_complex(&mut rng));
        let x = &l * g;
        for j in 0..n {
            for i in 0..n {
                chat[(i, j)] += x[i] * x[j].conj();
            }
        }
    }
    chat /= Complex64::new(s as f64, 0.0);

    let mut spec = vec![cd.diagonal().map(|v| v.re).mean(); 2 * n];
    for _ in 0..300 {
        spec = toeplitz_m_step_update(&spec, &chat, &dims, DEFAULT_SPECTRAL_FLOOR).unwrap();
    }
    let fitted = CovarianceModel::Toeplitz1D { spectrum: spec, dim: n }
        .to_dense()
        .unwrap();
    let rel = (&fitted - &cd).norm() / cd.norm();
    // The sample covariance itself sits ~ sqrt(n^2/S) ~ 8% from the truth;
    // the structured fit must land within that noise band.
    assert!(rel < 0.1, "relative error {rel}");
}

#[test]
fn wiener_khinchin_covariances_match_definitions() {
    let mut rng = stream_rng(106, 0);
    let n = 7usize;
    let p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();

    // C_pdp = F diag(p) F^H
    let f = dft_matrix(n);
    let mut d = DMatrix::<Complex64>::zeros(n, n);
    for (i, &v) in p.iter().enumerate() {
        d[(i, i)] = Complex64::new(v, 0.0);
    }
    let want_pdp = &f * &d * f.adjoint();
    let got_pdp = pdp_to_cov(&p).unwrap().to_dense().unwrap();
    assert!((&got_pdp - &want_pdp).norm() < 1e-10 * want_pdp.norm().max(1.0));

    // C_dps = F^H diag(d) F
    let want_dps = f.adjoint() * &d * &f;
    let got_dps = dps_to_cov(&p).unwrap().to_dense().unwrap();
    assert!((&got_dps - &want_dps).norm() < 1e-10 * want_dps.norm().max(1.0));

    // eigen-spectrum of the PDP covariance is exactly p (as a multiset)
    let eig = got_pdp.symmetric_eigen();
    let mut got_eigs: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let mut want_eigs = p.clone();
    got_eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    want_eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (a, b) in got_eigs.iter().zip(want_eigs.iter()) {
        assert!((a - b).abs() < 1e-9);
    }

    // PSD with spectral floor at zero entries
    let impulse = {
        let mut v = vec![0.0; n];
        v[0] = 1.0;
        v
    };
    let c = pdp_to_cov(&impulse).unwrap().to_dense().unwrap();
    for v in c.iter() {
        assert!((v - Complex64::new(1.0 / n as f64, 0.0)).norm() < 1e-12);
    }

    // negative profile rejected
    assert!(pdp_to_cov(&[-0.1, 1.0]).is_err());
}

#[test]
fn hermitian_psd_invariant_dense_expansions() {
    let mut rng = stream_rng(107, 0);
    for _ in 0..20 {
        let n_c = rng.gen_range(2..=5);
        let n_t = rng.gen_range(2..=4);
        let cov = random_structured_cov(&mut rng, n_c, n_t);
        let d = cov.to_dense().unwrap();
        let h = (d.clone() - d.adjoint()).norm();
        assert!(h < 1e-10 * d.norm().max(1.0), "not Hermitian");
        let eig = d.symmetric_eigen();
        let max = eig.eigenvalues.iter().copied().fold(0.0_f64, f64::max);
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-9 * max, "min eig {min} vs max {max}");
    }
}

#[test]
fn observation_cov_rejects_bad_sigma() {
    let cov = CovarianceModel::Diagonal(vec![1.0; 4]);
    let pattern = PilotPattern::full(4, 1);
    assert!(assemble_observation_cov(&cov, &pattern, 0.0).is_err());
    assert!(assemble_observation_cov(&cov, &pattern, f64::NAN).is_err());
}

#[test]
fn full_covariance_solve_small_lattice() {
    // Lattice pattern over a 4x3 grid with a full covariance: solve and
    // log-det against the dense oracle.
    let mut rng = stream_rng(108, 0);
    let (n_c, n_t) = (4usize, 3usize);
    let n = n_c * n_t;
    let b = DMatrix::from_fn(n, n, |_, _| standard_complex(&mut rng));
    let mut cd = &b * b.adjoint();
    for i in 0..n {
        cd[(i, i)] += Complex64::new(0.5, 0.0);
    }
    let cd = (cd.clone() + cd.adjoint()) * Complex64::new(0.5, 0.0);
    let cov = CovarianceModel::Full(cd.clone());
    let pattern = PilotPattern::new(n_c, n_t, vec![0, 2], vec![0, 2]).unwrap();
    let sigma2 = 0.4;
    let oc = assemble_observation_cov(&cov, &pattern, sigma2).unwrap();

    let a = selection_matrix(&pattern);
    let mut cy = &a * &cd * a.adjoint();
    for i in 0..4 {
        cy[(i, i)] += Complex64::new(sigma2, 0.0);
    }
    let y = DVector::from_fn(4, |_, _| standard_complex(&mut rng));
    let want = cy.clone().lu().solve(&y).unwrap();
    let got = oc.solve(&y);
    assert!((got - &want).norm() < 1e-8 * want.norm());
    let det = cy.lu().determinant().re;
    assert!((oc.log_det() - det.ln()).abs() < 1e-8);
}

#[test]
fn kron_of_circulants_matches_chol_solve() {
    // Kronecker observation covariance assembly against dense LU.
    let mut rng = stream_rng(109, 0);
    let (n_c, n_t) = (4usize, 3usize);
    let cov = CovarianceModel::Kronecker {
        time: Box::new(CovarianceModel::Circulant1D {
            spectrum: (0..n_t).map(|_| rng.gen_range(0.2..1.5)).collect(),
            dim: n_t,
        }),
        freq: Box::new(CovarianceModel::Circulant1D {
            spectrum: (0..n_c).map(|_| rng.gen_range(0.2..1.5)).collect(),
            dim: n_c,
        }),
    };
    let pattern = PilotPattern::new(n_c, n_t, vec![1, 3], vec![0, 1]).unwrap();
    let oc = assemble_observation_cov(&cov, &pattern, 0.25).unwrap();
    let a = selection_matrix(&pattern);
    let cd = dense_cov_oracle(&cov);
    let mut cy = &a * &cd * a.adjoint();
    for i in 0..4 {
        cy[(i, i)] += Complex64::new(0.25, 0.0);
    }
    let y = DVector::from_fn(4, |_, _| standard_complex(&mut rng));
    let want = cy.lu().solve(&y).unwrap();
    let got = oc.solve(&y);
    assert!((got - &want).norm() < 1e-8 * want.norm());
}

#[test]
fn quad_form_is_consistent() {
    let mut rng = stream_rng(110, 0);
    let n = 5;
    let b = DMatrix::from_fn(n, n, |_, _| standard_complex(&mut rng));
    let mut c = &b * b.adjoint();
    for i in 0..n {
        c[(i, i)] += Complex64::new(1.0, 0.0);
    }
    let c = (c.clone() + c.adjoint()) * Complex64::new(0.5, 0.0);
    let chol = HermitianChol::new(c.clone()).unwrap();
    let y = DVector::from_fn(n, |_, _| standard_complex(&mut rng));
    let q = chol.quad_form(&y);
    let want = y.dotc(&c.lu().solve(&y).unwrap()).re;
    assert!((q - want).abs() < 1e-9 * want.abs().max(1.0));
}
