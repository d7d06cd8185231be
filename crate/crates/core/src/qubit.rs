//! Imperfect single-rail qubits.
//!
//! A single-rail qubit with vacuum admixture is the mixture
//! `ρ = E |ψ⟩⟨ψ| + (1 − E) |0⟩⟨0|`, `|ψ⟩ = α|0⟩ + β|1⟩`, stored either as the
//! parameter triple ([`SingleRailQubit`]) or as its 2×2 density matrix
//! ([`DensityMatrix2`]). The figure of merit that no linear-optical
//! conditional scheme can increase is the generalized efficiency
//! `ℰ(ρ) = ρ₁₁ / (1 − |ρ₀₁|²/ρ₁₁)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `|β|²E` below this collapses to the canonical vacuum.
pub const VACUUM_THRESHOLD: f64 = 1e-14;

/// Slack allowed on positivity, hermiticity and trace of ingested matrices.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Efficiency within this of 1 counts as a pure state.
pub const PURITY_TOLERANCE: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `(α, β, E)` parametrization in canonical form.
///
/// Canonical means normalized amplitudes, the first nonzero amplitude real
/// and nonnegative, and the vacuum stored exactly as `(1, 0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QubitRecord", into = "QubitRecord")]
pub struct SingleRailQubit {
    alpha: Complex64,
    beta: Complex64,
    efficiency: f64,
}

/// Wire form of [`SingleRailQubit`]: `{"alpha": [re, im], "beta": [re, im], "efficiency": e}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitRecord {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub efficiency: f64,
}

impl TryFrom<QubitRecord> for SingleRailQubit {
    type Error = Error;

    fn try_from(r: QubitRecord) -> Result<Self> {
        SingleRailQubit::canonicalize(r.alpha, r.beta, r.efficiency)
    }
}

impl From<SingleRailQubit> for QubitRecord {
    fn from(q: SingleRailQubit) -> Self {
        QubitRecord {
            alpha: q.alpha,
            beta: q.beta,
            efficiency: q.efficiency,
        }
    }
}

impl SingleRailQubit {
    pub const VACUUM: SingleRailQubit = SingleRailQubit {
        alpha: ONE,
        beta: ZERO,
        efficiency: 0.0,
    };

    /// Normalizes the amplitudes, fixes the global phase and collapses the
    /// vacuum to its canonical representative.
    pub fn canonicalize(
        alpha_raw: Complex64,
        beta_raw: Complex64,
        efficiency_raw: f64,
    ) -> Result<Self> {
        if !(alpha_raw.is_finite() && beta_raw.is_finite() && efficiency_raw.is_finite()) {
            return Err(Error::InvalidState("non-finite parameter".into()));
        }
        if !(-PURITY_TOLERANCE..=1.0 + PURITY_TOLERANCE).contains(&efficiency_raw) {
            return Err(Error::InvalidState(format!(
                "efficiency {efficiency_raw} outside [0, 1]"
            )));
        }
        let efficiency = efficiency_raw.clamp(0.0, 1.0);
        let norm = (alpha_raw.norm_sqr() + beta_raw.norm_sqr()).sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero amplitude vector".into()));
        }
        let (mut alpha, mut beta) = (alpha_raw / norm, beta_raw / norm);
        if beta.norm_sqr() * efficiency < VACUUM_THRESHOLD {
            return Ok(Self::VACUUM);
        }
        if alpha != ZERO {
            let phase = alpha.conj() / alpha.norm();
            alpha = Complex64::new(alpha.norm(), 0.0);
            beta *= phase;
        } else {
            beta = Complex64::new(beta.norm(), 0.0);
        }
        Ok(SingleRailQubit {
            alpha,
            beta,
            efficiency,
        })
    }

    /// Pure state `α|0⟩ + β|1⟩` (E = 1).
    pub fn pure(alpha: Complex64, beta: Complex64) -> Result<Self> {
        Self::canonicalize(alpha, beta, 1.0)
    }

    /// Imperfect single-photon source, `E|1⟩⟨1| + (1 − E)|0⟩⟨0|`.
    pub fn photon(efficiency: f64) -> Result<Self> {
        Self::canonicalize(ZERO, ONE, efficiency)
    }

    /// Real-amplitude shorthand, mostly for tests and examples.
    pub fn real(alpha: f64, beta: f64, efficiency: f64) -> Result<Self> {
        Self::canonicalize(
            Complex64::new(alpha, 0.0),
            Complex64::new(beta, 0.0),
            efficiency,
        )
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    pub fn is_vacuum(&self) -> bool {
        self.efficiency == 0.0
    }

    /// `E = 1` and not the vacuum, i.e. `ℰ = 1`.
    pub fn is_pure(&self) -> bool {
        !self.is_vacuum() && self.efficiency >= 1.0 - PURITY_TOLERANCE
    }

    pub fn to_density_matrix(&self) -> DensityMatrix2 {
        let e = self.efficiency;
        let p1 = e * self.beta.norm_sqr();
        let coh = self.alpha.conj() * self.beta * e;
        DensityMatrix2 {
            rho00: 1.0 - p1,
            rho01: coh,
            rho10: coh.conj(),
            rho11: p1,
        }
    }

    /// Inverse of [`to_density_matrix`](Self::to_density_matrix).
    ///
    /// Every valid `DensityMatrix2` has a decomposition: `E = ρ₁₁ + |ρ₀₁|²/ρ₁₁`
    /// is at most one exactly when `ρ₀₀ρ₁₁ ≥ |ρ₀₁|²`.
    pub fn from_density_matrix(d: &DensityMatrix2) -> Result<Self> {
        let p1 = d.rho11;
        if p1 < VACUUM_THRESHOLD {
            return Ok(Self::VACUUM);
        }
        let coh = d.rho01;
        let efficiency = p1 + coh.norm_sqr() / p1;
        if efficiency > 1.0 + PSD_TOLERANCE {
            return Err(Error::InvalidState(format!(
                "matrix is not positive semidefinite (implied efficiency {efficiency})"
            )));
        }
        let efficiency = efficiency.min(1.0);
        // |β| = √(ρ₁₁/E) and |α| = |ρ₀₁|/√(Eρ₁₁) avoid the cancellation in √(1 − |β|²)
        let beta_abs = (p1 / efficiency).sqrt();
        let alpha_abs = coh.norm() / (efficiency * p1).sqrt();
        let beta = if coh == ZERO {
            Complex64::new(beta_abs, 0.0)
        } else {
            Complex64::from_polar(beta_abs, coh.arg())
        };
        Self::canonicalize(Complex64::new(alpha_abs, 0.0), beta, efficiency)
    }

    pub fn generalized_efficiency(&self) -> f64 {
        self.to_density_matrix().generalized_efficiency()
    }

    /// Closed form `|β|²E / (1 − |α|²E)`, kept alongside the matrix form.
    pub fn generalized_efficiency_from_parameters(&self) -> f64 {
        if self.is_vacuum() {
            return 0.0;
        }
        let e = self.efficiency;
        self.beta.norm_sqr() * e / (1.0 - self.alpha.norm_sqr() * e)
    }

    /// Largest entrywise distance between the density matrices.
    pub fn distance(&self, other: &SingleRailQubit) -> f64 {
        self.to_density_matrix()
            .distance(&other.to_density_matrix())
    }
}

/// Hermitian, unit-trace, positive semidefinite operator on `span{|0⟩, |1⟩}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityRecord", into = "DensityRecord")]
pub struct DensityMatrix2 {
    rho00: f64,
    rho01: Complex64,
    rho10: Complex64,
    rho11: f64,
}

/// Wire form of [`DensityMatrix2`]: `{"rho": [[[re, im], [re, im]], [[re, im], [re, im]]]}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityRecord {
    pub rho: [[Complex64; 2]; 2],
}

impl TryFrom<DensityRecord> for DensityMatrix2 {
    type Error = Error;

    fn try_from(r: DensityRecord) -> Result<Self> {
        DensityMatrix2::new(r.rho[0][0], r.rho[0][1], r.rho[1][0], r.rho[1][1])
    }
}

impl From<DensityMatrix2> for DensityRecord {
    fn from(d: DensityMatrix2) -> Self {
        DensityRecord { rho: d.to_array() }
    }
}

impl DensityMatrix2 {
    pub const VACUUM: DensityMatrix2 = DensityMatrix2 {
        rho00: 1.0,
        rho01: ZERO,
        rho10: ZERO,
        rho11: 0.0,
    };

    /// Validates and symmetrizes an ingested matrix.
    ///
    /// Hermiticity, trace and positivity are checked to [`PSD_TOLERANCE`];
    /// the stored value is the Hermitian part, clipped onto the PSD cone.
    pub fn new(
        rho00: Complex64,
        rho01: Complex64,
        rho10: Complex64,
        rho11: Complex64,
    ) -> Result<Self> {
        let entries = [rho00, rho01, rho10, rho11];
        if entries.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidState("non-finite matrix entry".into()));
        }
        if rho00.im.abs() > PSD_TOLERANCE || rho11.im.abs() > PSD_TOLERANCE {
            return Err(Error::InvalidState("diagonal entries must be real".into()));
        }
        if (rho10 - rho01.conj()).norm() > PSD_TOLERANCE {
            return Err(Error::InvalidState("matrix is not Hermitian".into()));
        }
        let trace = rho00.re + rho11.re;
        if (trace - 1.0).abs() > PSD_TOLERANCE {
            return Err(Error::InvalidState(format!("trace {trace} is not 1")));
        }
        let coh = 0.5 * (rho01 + rho10.conj());
        let (p0, p1) = (rho00.re, rho11.re);
        if p0 < -PSD_TOLERANCE || p1 < -PSD_TOLERANCE || p0 * p1 - coh.norm_sqr() < -PSD_TOLERANCE {
            return Err(Error::InvalidState(
                "matrix is not positive semidefinite".into(),
            ));
        }
        let p1 = (p1 / trace).clamp(0.0, 1.0);
        let p0 = 1.0 - p1;
        let mut coh = coh / trace;
        let bound = (p0 * p1).sqrt();
        if coh.norm() > bound {
            coh = coh.unscale(coh.norm()).scale(bound);
        }
        Ok(DensityMatrix2 {
            rho00: p0,
            rho01: coh,
            rho10: coh.conj(),
            rho11: p1,
        })
    }

    /// Builds from a computed (already Hermitian, unit-trace) block without
    /// the ingestion tolerances; used by simulators.
    pub(crate) fn from_parts(rho00: f64, rho01: Complex64, rho11: f64) -> Self {
        DensityMatrix2 {
            rho00,
            rho01,
            rho10: rho01.conj(),
            rho11,
        }
    }

    pub fn rho00(&self) -> f64 {
        self.rho00
    }

    pub fn rho01(&self) -> Complex64 {
        self.rho01
    }

    pub fn rho10(&self) -> Complex64 {
        self.rho10
    }

    pub fn rho11(&self) -> f64 {
        self.rho11
    }

    pub fn to_array(&self) -> [[Complex64; 2]; 2] {
        [
            [Complex64::new(self.rho00, 0.0), self.rho01],
            [self.rho10, Complex64::new(self.rho11, 0.0)],
        ]
    }

    pub fn is_vacuum(&self) -> bool {
        self.rho11 < VACUUM_THRESHOLD
    }

    /// `ℰ(ρ) = ρ₁₁ / (1 − |ρ₀₁|²/ρ₁₁)`, zero for the vacuum.
    pub fn generalized_efficiency(&self) -> f64 {
        if self.is_vacuum() {
            return 0.0;
        }
        let p1 = self.rho11;
        (p1 * p1 / (p1 - self.rho01.norm_sqr())).clamp(0.0, 1.0)
    }

    /// Entrywise `p·d1 + (1 − p)·d2`.
    pub fn mix(d1: &DensityMatrix2, d2: &DensityMatrix2, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "mixing weight {p} outside [0, 1]"
            )));
        }
        let q = 1.0 - p;
        Ok(DensityMatrix2::from_parts(
            p * d1.rho00 + q * d2.rho00,
            d1.rho01 * p + d2.rho01 * q,
            p * d1.rho11 + q * d2.rho11,
        ))
    }

    pub fn distance(&self, other: &DensityMatrix2) -> f64 {
        let a = self.to_array();
        let b = other.to_array();
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((a[i][j] - b[i][j]).norm());
            }
        }
        worst
    }
}

impl From<SingleRailQubit> for DensityMatrix2 {
    fn from(q: SingleRailQubit) -> Self {
        q.to_density_matrix()
    }
}

/// Second derivative of `f(p) = ℰ(p·d1 + (1 − p)·d2)`.
///
/// With `ρ` the mixture and `Δ = d1 − d2`,
/// `f″ = 2ρ₁₁²|Δρ₁₀|²/D² + 2[Δρ₁₁|ρ₁₀|² − 2ρ₁₁ Re(ρ₀₁Δρ₁₀)]²/D³`, `D = ρ₁₁ − |ρ₁₀|²`.
/// Rejects a vacuum end point; mixtures with the vacuum are covered by the
/// direct bound `ℰ(p·d + (1 − p)·|0⟩⟨0|) ≤ p·ℰ(d)`.
pub fn efficiency_second_derivative(
    d1: &DensityMatrix2,
    d2: &DensityMatrix2,
    p: f64,
) -> Result<f64> {
    if d1.is_vacuum() || d2.is_vacuum() {
        return Err(Error::Domain(
            "second derivative needs two non-vacuum states".into(),
        ));
    }
    let rho = DensityMatrix2::mix(d1, d2, p)?;
    let d_rho11 = d1.rho11 - d2.rho11;
    let d_rho10 = d1.rho10 - d2.rho10;
    let p1 = rho.rho11;
    let coh_sq = rho.rho10.norm_sqr();
    let denom = p1 - coh_sq;
    let first = 2.0 * p1 * p1 * d_rho10.norm_sqr() / (denom * denom);
    let inner = d_rho11 * coh_sq - p1 * 2.0 * (rho.rho01 * d_rho10).re;
    let second = 2.0 * inner * inner / (denom * denom * denom);
    Ok(first + second)
}

/// Parsed-but-unvalidated state file: either schema is accepted wherever a
/// state is expected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateRecord {
    Qubit(QubitRecord),
    Density(DensityRecord),
}

impl StateRecord {
    pub fn to_density_matrix(&self) -> Result<DensityMatrix2> {
        match *self {
            StateRecord::Qubit(r) => Ok(SingleRailQubit::try_from(r)?.to_density_matrix()),
            StateRecord::Density(r) => DensityMatrix2::try_from(r),
        }
    }

    pub fn to_qubit(&self) -> Result<SingleRailQubit> {
        match *self {
            StateRecord::Qubit(r) => SingleRailQubit::try_from(r),
            StateRecord::Density(r) => {
                SingleRailQubit::from_density_matrix(&DensityMatrix2::try_from(r)?)
            }
        }
    }
}
