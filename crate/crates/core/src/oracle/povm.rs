//! Generalized conditional measurements on the reflected mode.
//!
//! A POVM element `M` is split by singular value decomposition into
//! `Σ pᵢ |σᵢ⟩⟨Qᵢ|` with orthogonal `|Qᵢ⟩`; the conditioned output is then the
//! `pᵢ`-weighted mixture of the projective outputs for each `⟨Qᵢ|`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::homodyne::{beam_splitter_state, normalize_block};
use crate::error::{Error, Result};
use crate::qubit::{DensityMatrix2, SingleRailQubit};

const ELEMENT_TOLERANCE: f64 = 1e-10;
/// Singular values below this are dropped from the decomposition.
const SINGULAR_VALUE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PovmElement {
    matrix: DMatrix<Complex64>,
    pub label: String,
}

impl PovmElement {
    /// Accepts a square operator on the `N + 1`-dimensional truncated mode if it
    /// is Hermitian with spectrum inside `[0, 1]`.
    pub fn new(matrix: DMatrix<Complex64>, label: impl Into<String>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() < 2 {
            return Err(Error::InvalidPovm(
                "element must be square with dimension at least 2".into(),
            ));
        }
        if matrix.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidPovm("non-finite entry".into()));
        }
        let hermitian_defect = (&matrix - matrix.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if hermitian_defect > ELEMENT_TOLERANCE {
            return Err(Error::InvalidPovm(format!(
                "not Hermitian (defect {hermitian_defect:.3e})"
            )));
        }
        let eigenvalues = matrix.clone().symmetric_eigenvalues();
        let (lo, hi) = eigenvalues
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| {
                (lo.min(e), hi.max(e))
            });
        if lo < -ELEMENT_TOLERANCE {
            return Err(Error::InvalidPovm(format!(
                "not positive semidefinite (eigenvalue {lo:.3e})"
            )));
        }
        if hi > 1.0 + ELEMENT_TOLERANCE {
            return Err(Error::InvalidPovm(format!(
                "not bounded by the identity (eigenvalue {hi:.6})"
            )));
        }
        Ok(PovmElement {
            matrix,
            label: label.into(),
        })
    }

    pub fn identity(dim: usize) -> Self {
        PovmElement {
            matrix: DMatrix::identity(dim, dim),
            label: "identity".into(),
        }
    }

    /// `|χ⟩⟨χ|` for a normalized `χ`.
    pub fn projector(ket: &[Complex64], label: impl Into<String>) -> Result<Self> {
        let v = nalgebra::DVector::from_column_slice(ket);
        let norm = v.norm();
        if norm == 0.0 {
            return Err(Error::InvalidPovm("zero vector".into()));
        }
        let v = v / Complex64::new(norm, 0.0);
        PovmElement::new(&v * v.adjoint(), label)
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn truncation(&self) -> usize {
        self.matrix.nrows() - 1
    }

    /// `(pᵢ, |Qᵢ⟩)` pairs: singular values and right singular vectors.
    pub fn decompose(&self) -> Vec<(f64, Vec<Complex64>)> {
        let svd = self.matrix.clone().svd(false, true);
        let v_t = svd.v_t.expect("right singular vectors were requested");
        svd.singular_values
            .iter()
            .enumerate()
            .filter(|(_, &p)| p >= SINGULAR_VALUE_FLOOR)
            .map(|(i, &p)| (p, v_t.row(i).iter().map(|z| z.conj()).collect()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PovmBranch {
    pub singular_value: f64,
    /// `pᵢ` times the success weight of the projection on `⟨Qᵢ|`.
    pub weight: f64,
    pub state: DensityMatrix2,
    pub generalized_efficiency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PovmOutcome {
    pub mixture: DensityMatrix2,
    pub weight: f64,
    pub branches: Vec<PovmBranch>,
}

impl PovmOutcome {
    pub fn component_efficiencies(&self) -> Vec<f64> {
        self.branches
            .iter()
            .map(|b| b.generalized_efficiency)
            .collect()
    }
}

/// Conditioned output for the element as a mixture of its projective branches.
pub fn povm_mixture_output(
    q: &SingleRailQubit,
    t: f64,
    element: &PovmElement,
) -> Result<PovmOutcome> {
    let state = beam_splitter_state(q, t, element.truncation())?;
    let mut unnormalized =
        DMatrix::<Complex64>::zeros(element.truncation() + 1, element.truncation() + 1);
    let mut branches = Vec::new();
    for (p, ket) in element.decompose() {
        // ⟨Qᵢ|n⟩ is the conjugate of the ket component
        let bra: Vec<Complex64> = ket.iter().map(|z| z.conj()).collect();
        let rho = state.project(0, &bra)?.reduced_density(0)? * Complex64::new(p, 0.0);
        unnormalized += &rho;
        match normalize_block(&rho) {
            Ok(branch) => branches.push(PovmBranch {
                singular_value: p,
                weight: branch.weight,
                generalized_efficiency: branch.state.generalized_efficiency(),
                state: branch.state,
            }),
            Err(Error::ZeroProbability(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let total = normalize_block(&unnormalized)?;
    Ok(PovmOutcome {
        mixture: total.state,
        weight: total.weight,
        branches,
    })
}

/// `Tr₁(M ρ_BS)` evaluated directly on the two-mode density matrix, without
/// decomposing the element.
pub fn partial_trace_output(
    q: &SingleRailQubit,
    t: f64,
    element: &PovmElement,
) -> Result<(DensityMatrix2, f64)> {
    let n = element.truncation() + 1;
    let state = beam_splitter_state(q, t, element.truncation())?;
    let m = element.matrix();
    let mut out = DMatrix::<Complex64>::zeros(n, n);
    // ρ_BS[(a,b),(c,d)] = Σ w ψ[a,b] ψ*[c,d];  out[b,d] = Σ_{a,c} M[c,a] ρ_BS[(a,b),(c,d)]
    for (w, psi) in state.branches() {
        for a in 0..n {
            for c in 0..n {
                let mca = m[(c, a)];
                if mca == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for b in 0..n {
                    let x = psi[a * n + b];
                    if x == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for d in 0..n {
                        out[(b, d)] += mca * x * psi[c * n + d].conj() * *w;
                    }
                }
            }
        }
    }
    let res = normalize_block(&out)?;
    Ok((res.state, res.weight))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::homodyne::{conditional_output, quadrature_bra};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rank_one_projector_reduces_to_projective_output() {
        let q = SingleRailQubit::real(0.6, 0.8, 0.85).unwrap();
        // ⟨Q_φ| restricted to N = 4, renormalized; compare against the
        // conditional output with the same (normalized) bra
        let bra = quadrature_bra(4, 0.4, 1.1);
        let ket: Vec<Complex64> = bra.iter().map(|z| z.conj()).collect();
        let element = PovmElement::projector(&ket, "quadrature").unwrap();
        let out = povm_mixture_output(&q, 0.6, &element).unwrap();
        let reference = conditional_output(&q, 0.6, 0.4, 1.1, 4).unwrap();
        assert_eq!(out.branches.len(), 1);
        assert!(out.mixture.distance(&reference.state) < 1e-12);
        let norm_sq: f64 = bra.iter().map(|z| z.norm_sqr()).sum();
        assert!((out.weight - reference.weight / norm_sq).abs() < 1e-12);
    }

    #[test]
    fn identity_element_traces_out() {
        let q = SingleRailQubit::real(0.6, 0.8, 0.85).unwrap();
        let out = povm_mixture_output(&q, 0.7, &PovmElement::identity(3)).unwrap();
        assert!((out.weight - 1.0).abs() < 1e-12);
        // unconditional loss with amplitude transmissivity 0.7
        let lossy = crate::conversion::apply_attenuation(&q, 0.7).unwrap();
        assert!(out.mixture.distance(&lossy.to_density_matrix()) < 1e-12);
    }

    #[test]
    fn rank_two_element_obeys_the_bound() {
        let q = SingleRailQubit::photon(0.9).unwrap();
        let a = [c(0.5, 0.0), c(0.3, 0.2), c(0.1, -0.4)];
        let b = [c(-0.2, 0.1), c(0.6, 0.0), c(0.3, 0.3)];
        let va = nalgebra::DVector::from_column_slice(&a);
        let vb = nalgebra::DVector::from_column_slice(&b);
        let m = &va * va.adjoint() + &vb * vb.adjoint();
        let element = PovmElement::new(m, "rank2").unwrap();
        assert_eq!(element.decompose().len(), 2);
        let out = povm_mixture_output(&q, 0.8, &element).unwrap();
        let e_mix = out.mixture.generalized_efficiency();
        assert!(e_mix <= 0.9 + 1e-10);
        let e_max = out.component_efficiencies().into_iter().fold(0.0, f64::max);
        assert!(e_mix <= e_max + 1e-10);
        assert!(e_max <= 0.9 + 1e-10);

        let (direct, weight) = partial_trace_output(&q, 0.8, &element).unwrap();
        assert!(direct.distance(&out.mixture) < 1e-12);
        assert!((weight - out.weight).abs() < 1e-12);
    }

    #[test]
    fn invalid_elements_are_rejected() {
        let mut m = DMatrix::<Complex64>::identity(3, 3);
        m[(0, 0)] = c(1.5, 0.0);
        assert!(PovmElement::new(m, "big").is_err());
        let mut m = DMatrix::<Complex64>::zeros(3, 3);
        m[(1, 1)] = c(-0.1, 0.0);
        assert!(PovmElement::new(m, "negative").is_err());
        let mut m = DMatrix::<Complex64>::zeros(3, 3);
        m[(0, 1)] = c(0.2, 0.0);
        assert!(PovmElement::new(m, "asymmetric").is_err());
        assert!(PovmElement::new(DMatrix::<Complex64>::zeros(2, 3), "rect").is_err());
    }
}
