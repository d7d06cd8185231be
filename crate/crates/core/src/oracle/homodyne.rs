use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::fock::FockState;
use crate::error::{Error, Result};
use crate::qubit::{DensityMatrix2, SingleRailQubit};

/// Weight beyond `|1⟩` in an oracle output that still counts as single-rail.
pub const MULTIPHOTON_TOLERANCE: f64 = 1e-12;

/// `⟨Q_φ|n⟩ = (2/π)^{1/4} (2ⁿ n!)^{−1/2} Hₙ(√2 Q) e^{−Q²} e^{inφ}`.
///
/// Evaluated with the normalized Hermite recurrence so large `n` does not overflow.
pub fn fock_wavefunction(n: usize, q: f64, phi: f64) -> Complex64 {
    Complex64::from_polar(hermite_function(n, q), n as f64 * phi)
}

fn hermite_function(n: usize, q: f64) -> f64 {
    let x = 2f64.sqrt() * q;
    let mut prev = 0.0;
    let mut cur = (2.0 / PI).powf(0.25) * (-q * q).exp();
    for k in 0..n {
        let next =
            x * (2.0 / (k as f64 + 1.0)).sqrt() * cur - (k as f64 / (k as f64 + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Bra components `⟨Q_φ|n⟩` for `n = 0..=truncation`.
pub fn quadrature_bra(truncation: usize, q: f64, phi: f64) -> Vec<Complex64> {
    (0..=truncation)
        .map(|n| fock_wavefunction(n, q, phi))
        .collect()
}

/// Probability density of outcome `Q` when homodyning `mode` at phase `φ`.
pub fn homodyne_density(state: &FockState, mode: usize, q: f64, phi: f64) -> Result<f64> {
    Ok(state
        .project(mode, &quadrature_bra(state.truncation(), q, phi))?
        .norm())
}

/// Normalized single-mode output with its success weight.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalOutcome {
    pub state: DensityMatrix2,
    /// Density (or probability) of the conditioning event.
    pub weight: f64,
    /// Normalized population above one photon; zero up to rounding for single-rail inputs.
    pub multiphoton_weight: f64,
}

impl ConditionalOutcome {
    pub fn qubit(&self) -> Result<SingleRailQubit> {
        SingleRailQubit::from_density_matrix(&self.state)
    }
}

/// Normalizes an unnormalized single-mode density block onto `span{|0⟩, |1⟩}`.
pub(crate) fn normalize_block(rho: &DMatrix<Complex64>) -> Result<ConditionalOutcome> {
    let weight: f64 = (0..rho.nrows()).map(|i| rho[(i, i)].re).sum();
    if !(weight > 0.0) {
        return Err(Error::ZeroProbability(
            "conditioning event has zero weight".into(),
        ));
    }
    let multiphoton: f64 = (2..rho.nrows()).map(|i| rho[(i, i)].re).sum::<f64>() / weight;
    let p0 = rho[(0, 0)].re / weight;
    let p1 = if rho.nrows() > 1 {
        rho[(1, 1)].re / weight
    } else {
        0.0
    };
    // library convention: rho01 = ⟨1|ρ|0⟩
    let coh = if rho.nrows() > 1 {
        rho[(1, 0)] / weight
    } else {
        Complex64::new(0.0, 0.0)
    };
    let block = p0 + p1;
    Ok(ConditionalOutcome {
        state: DensityMatrix2::from_parts(p0 / block, coh / block, p1 / block),
        weight,
        multiphoton_weight: multiphoton,
    })
}

/// Two-mode state after the input (mode 0) meets vacuum (mode 1) on the splitter.
pub fn beam_splitter_state(q: &SingleRailQubit, t: f64, truncation: usize) -> Result<FockState> {
    FockState::from_qubit(q, 2, truncation, 0)?.apply_beam_splitter(0, 1, t)
}

/// Brute-force version of the closed-form conversion: build `ρ ⊗ |0⟩⟨0|`,
/// apply the splitter, project the reflected mode on `⟨Q_φ|`, trace.
pub fn conditional_output(
    q: &SingleRailQubit,
    t: f64,
    q_outcome: f64,
    phi: f64,
    truncation: usize,
) -> Result<ConditionalOutcome> {
    if truncation < 1 {
        return Err(Error::TruncationOverflow {
            leaked: q.efficiency() * q.beta().norm_sqr(),
            truncation,
        });
    }
    let state = beam_splitter_state(q, t, truncation)?;
    let projected = state.project(0, &quadrature_bra(truncation, q_outcome, phi))?;
    normalize_block(&projected.reduced_density(0)?)
}

/// Composite Simpson rule on `[a, b]` with `intervals` (rounded up to even) pieces.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals.max(2) + intervals % 2;
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + h * k as f64);
    }
    sum * h / 3.0
}
