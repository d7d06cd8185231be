#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use singlerail::{DensityMatrix2, SingleRailQubit};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Random `(α, β, E)`; `min_beta` keeps the photon fraction away from zero.
pub fn qubit<R: Rng>(rng: &mut R, min_beta: f64) -> SingleRailQubit {
    loop {
        let (a, b) = (complex(rng), complex(rng));
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if norm < 1e-3 || b.norm() / norm < min_beta {
            continue;
        }
        // a quarter of the samples are pure
        let e = if rng.random_bool(0.25) {
            1.0
        } else {
            rng.random_range(0.02..1.0)
        };
        return SingleRailQubit::canonicalize(a, b, e).unwrap();
    }
}

pub fn mixed_qubit<R: Rng>(rng: &mut R, min_beta: f64) -> SingleRailQubit {
    loop {
        let q = qubit(rng, min_beta);
        if !q.is_pure() {
            return q;
        }
    }
}

/// Uniform-ish draw from the PSD trace-one cone.
pub fn density<R: Rng>(rng: &mut R) -> DensityMatrix2 {
    loop {
        let p1: f64 = rng.random_range(0.0..1.0);
        let c = complex(rng) * 0.5;
        if c.norm_sqr() <= p1 * (1.0 - p1) {
            return DensityMatrix2::new(
                Complex64::new(1.0 - p1, 0.0),
                c,
                c.conj(),
                Complex64::new(p1, 0.0),
            )
            .unwrap();
        }
    }
}

/// `U diag(λ) U†` with `λ ∈ [0, 1]` and `U` from a QR factorization.
pub fn psd_element<R: Rng>(rng: &mut R, dim: usize) -> DMatrix<Complex64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| complex(rng));
    let u = g.qr().q();
    let lambda = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            Complex64::new(rng.random_range(0.0..1.0), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let m = &u * lambda * u.adjoint();
    (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
}
