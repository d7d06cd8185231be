//! Beam splitter plus conditional homodyne conversion, in closed form.
//!
//! The input qubit meets vacuum on a beam splitter of amplitude
//! transmissivity `t`; the reflected mode is projected on `⟨Q|` and the
//! transmitted mode is kept. With `θⱼ = ⟨Q|j⟩` the unnormalized output is
//! `E·|v⟩⟨v| + (1 − E)|θ₀|²|0⟩⟨0|` where `|v⟩ = (αθ₀ + βrθ₁)|0⟩ + βtθ₀|1⟩`.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubit::SingleRailQubit;
use crate::solver;

/// Equality tolerance on ℰ when classifying a requested transformation.
pub const EFFICIENCY_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSplitter {
    t: f64,
    r: f64,
}

impl BeamSplitter {
    pub fn new(t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidArgument(format!(
                "transmissivity {t} outside [0, 1]"
            )));
        }
        Ok(BeamSplitter {
            t,
            r: (1.0 - t * t).max(0.0).sqrt(),
        })
    }

    pub fn balanced() -> Self {
        BeamSplitter {
            t: FRAC_1_SQRT_2,
            r: FRAC_1_SQRT_2,
        }
    }

    /// Amplitude transmissivity (the intensity transmissivity is `t²`).
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn r(&self) -> f64 {
        self.r
    }
}

/// Quadrature outcome `Q` (convention `[Q̂, P̂] = i/2`) at local-oscillator phase `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SettingRecord", into = "SettingRecord")]
pub struct HomodyneSetting {
    q: f64,
    phi: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SettingRecord {
    #[serde(rename = "Q")]
    q: f64,
    phi: f64,
}

impl TryFrom<SettingRecord> for HomodyneSetting {
    type Error = Error;

    fn try_from(r: SettingRecord) -> Result<Self> {
        if !(r.q.is_finite() && r.phi.is_finite()) {
            return Err(Error::InvalidArgument("non-finite homodyne setting".into()));
        }
        Ok(HomodyneSetting::new(r.q, r.phi))
    }
}

impl From<HomodyneSetting> for SettingRecord {
    fn from(s: HomodyneSetting) -> Self {
        SettingRecord { q: s.q, phi: s.phi }
    }
}

impl HomodyneSetting {
    pub fn new(q: f64, phi: f64) -> Self {
        let mut phi = phi.rem_euclid(TAU);
        if phi >= TAU {
            phi = 0.0;
        }
        HomodyneSetting { q, phi }
    }

    /// Setting realizing `θ₁/θ₀ = ratio`, with `Q ≥ 0`.
    pub fn from_ratio(ratio: Complex64) -> Self {
        if ratio.norm() == 0.0 {
            return HomodyneSetting::new(0.0, 0.0);
        }
        HomodyneSetting::new(ratio.norm() / 2.0, ratio.arg())
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// `(−Q, φ + π)` names the same projector; this picks `Q ≥ 0`.
    pub fn canonical(&self) -> Self {
        if self.q < 0.0 {
            HomodyneSetting::new(-self.q, self.phi + PI)
        } else {
            *self
        }
    }
}

/// Overlaps `θ₀ = ⟨Q|0⟩`, `θ₁ = ⟨Q|1⟩` of the measured projector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionCoefficients {
    pub theta0: Complex64,
    pub theta1: Complex64,
}

/// `θ₀ = (2/π)^{1/4} e^{−Q²}`, `θ₁ = 2Q e^{iφ} θ₀`.
pub fn homodyne_coefficients(setting: &HomodyneSetting) -> ProjectionCoefficients {
    let q = setting.q;
    let theta0 = (2.0 / PI).powf(0.25) * (-q * q).exp();
    ProjectionCoefficients {
        theta0: Complex64::new(theta0, 0.0),
        theta1: Complex64::from_polar(2.0 * q * theta0, setting.phi),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConversionOutcome {
    pub output: SingleRailQubit,
    /// Probability density of the homodyne outcome (probability for a discrete projector).
    pub success_weight: f64,
    pub unnormalized_trace: f64,
}

/// Output of one beam splitter plus projective measurement on the reflected mode.
pub fn project_output(
    q: &SingleRailQubit,
    bs: &BeamSplitter,
    coeffs: &ProjectionCoefficients,
) -> Result<ConversionOutcome> {
    let ProjectionCoefficients { theta0, theta1 } = *coeffs;
    if theta0.norm_sqr() + theta1.norm_sqr() == 0.0 {
        return Err(Error::ZeroProbability(
            "projection coefficients are both zero".into(),
        ));
    }
    let (alpha, beta, e) = (q.alpha(), q.beta(), q.efficiency());
    let zero_amp = alpha * theta0 + beta * theta1 * bs.r();
    let one_amp = beta * theta0 * bs.t();
    let coherent = zero_amp.norm_sqr() + one_amp.norm_sqr();
    let trace = e * coherent + (1.0 - e) * theta0.norm_sqr();
    if !(trace > 0.0) {
        return Err(Error::ZeroProbability(
            "projection has zero overlap with the beam-splitter output".into(),
        ));
    }
    let output = if coherent == 0.0 {
        SingleRailQubit::VACUUM
    } else {
        SingleRailQubit::canonicalize(zero_amp, one_amp, (e * coherent / trace).min(1.0))?
    };
    Ok(ConversionOutcome {
        output,
        success_weight: trace,
        unnormalized_trace: trace,
    })
}

/// `|β′(αθ₀ + βrθ₁) − α′βtθ₀|`; vanishes for every genuine outcome.
pub fn amplitude_relation_residual(
    q: &SingleRailQubit,
    q_out: &SingleRailQubit,
    bs: &BeamSplitter,
    coeffs: &ProjectionCoefficients,
) -> f64 {
    let lhs = q_out.beta() * (q.alpha() * coeffs.theta0 + q.beta() * bs.r() * coeffs.theta1);
    let rhs = q_out.alpha() * q.beta() * bs.t() * coeffs.theta0;
    (lhs - rhs).norm()
}

/// `|t|β|√(E(1−E′)) − |β′|√(E′(1−E))|`.
pub fn transfer_relation_residual(q: &SingleRailQubit, q_out: &SingleRailQubit, t: f64) -> f64 {
    let (e, e_out) = (q.efficiency(), q_out.efficiency());
    let lhs = t * q.beta().norm() * (e * (1.0 - e_out)).max(0.0).sqrt();
    let rhs = q_out.beta().norm() * (e_out * (1.0 - e)).max(0.0).sqrt();
    (lhs - rhs).abs()
}

/// `|θ₀|²(1 − E)/(1 − E′)`. Undefined for a pure output, where the trace has to
/// be computed directly.
pub fn success_density(
    q: &SingleRailQubit,
    q_out: &SingleRailQubit,
    theta0: Complex64,
) -> Result<f64> {
    let e_out = q_out.efficiency();
    if e_out >= 1.0 {
        return Err(Error::Domain(
            "pure output: success density follows from the full trace, not the (1-E)/(1-E') ratio"
                .into(),
        ));
    }
    Ok(theta0.norm_sqr() * (1.0 - q.efficiency()) / (1.0 - e_out))
}

/// Deterministic loss: beam splitter of amplitude transmissivity `tau` with
/// the reflected port traced out.
pub fn apply_attenuation(q: &SingleRailQubit, tau: f64) -> Result<SingleRailQubit> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "attenuation {tau} outside (0, 1]"
        )));
    }
    if tau == 1.0 {
        return Ok(*q);
    }
    let d = q.to_density_matrix();
    let p1 = tau * tau * d.rho11();
    let attenuated = crate::qubit::DensityMatrix2::from_parts(1.0 - p1, d.rho01() * tau, p1);
    SingleRailQubit::from_density_matrix(&attenuated)
}

/// Relative phase `|1⟩ → e^{iχ}|1⟩`.
pub fn apply_phase_shift(q: &SingleRailQubit, chi: f64) -> Result<SingleRailQubit> {
    SingleRailQubit::canonicalize(
        q.alpha(),
        q.beta() * Complex64::from_polar(1.0, chi),
        q.efficiency(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    FeasibleStrict,
    /// Between two pure states.
    FeasibleEqualPure,
    /// Same `E` and `|β|`: a phase shift, or vacuum to vacuum.
    FeasibleEqualPhase,
    /// Pure input, mixed target: attenuate, then convert.
    FeasibleViaAttenuation,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityVerdict {
    pub verdict: Verdict,
    pub reason: String,
    pub efficiency_in: f64,
    pub efficiency_out: f64,
}

impl FeasibilityVerdict {
    pub fn is_feasible(&self) -> bool {
        self.verdict != Verdict::Infeasible
    }
}

pub fn classify_feasibility(q: &SingleRailQubit, target: &SingleRailQubit) -> FeasibilityVerdict {
    let e_in = q.generalized_efficiency();
    let e_out = target.generalized_efficiency();
    let (verdict, reason) = if e_out > e_in + EFFICIENCY_EPSILON {
        (Verdict::Infeasible, "generalized efficiency would increase")
    } else if (e_out - e_in).abs() <= EFFICIENCY_EPSILON {
        let same_e = (q.efficiency() - target.efficiency()).abs() <= EFFICIENCY_EPSILON;
        let same_beta = (q.beta().norm() - target.beta().norm()).abs() <= EFFICIENCY_EPSILON;
        if same_e && same_beta {
            (
                Verdict::FeasibleEqualPhase,
                "equal efficiency and photon fraction: phase shift only",
            )
        } else if q.is_pure() && target.is_pure() {
            (Verdict::FeasibleEqualPure, "conversion between pure states")
        } else {
            (
                Verdict::Infeasible,
                "equal generalized efficiency outside the pure-state and phase-shift cases: success probability is zero",
            )
        }
    } else if target.is_vacuum() {
        (
            Verdict::FeasibleStrict,
            "vacuum target: discard the input with t = 0",
        )
    } else if q.is_pure() {
        (
            Verdict::FeasibleViaAttenuation,
            "pure input and mixed target: attenuate before the projective stage",
        )
    } else {
        (Verdict::FeasibleStrict, "generalized efficiency decreases")
    };
    FeasibilityVerdict {
        verdict,
        reason: reason.to_string(),
        efficiency_in: e_in,
        efficiency_out: e_out,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StageRecord", into = "StageRecord")]
pub enum Stage {
    /// Unconditional loss, amplitude transmissivity in `(0, 1]`.
    Attenuation {
        tau: f64,
    },
    /// Beam splitter with vacuum, homodyne on the reflected mode. With `t = 0`
    /// the output is vacuum whatever the outcome, so every outcome is accepted.
    Conditional {
        bs: BeamSplitter,
        setting: HomodyneSetting,
    },
    PhaseShift {
        chi: f64,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
enum StageRecord {
    Attenuation {
        attenuation: f64,
    },
    Conditional {
        beam_splitter_t: f64,
        homodyne: HomodyneSetting,
    },
    PhaseShift {
        phase_shift: f64,
    },
}

impl TryFrom<StageRecord> for Stage {
    type Error = Error;

    fn try_from(r: StageRecord) -> Result<Self> {
        match r {
            StageRecord::Attenuation { attenuation } => {
                if !(attenuation > 0.0 && attenuation <= 1.0) {
                    return Err(Error::InvalidArgument(format!(
                        "attenuation {attenuation} outside (0, 1]"
                    )));
                }
                Ok(Stage::Attenuation { tau: attenuation })
            }
            StageRecord::Conditional {
                beam_splitter_t,
                homodyne,
            } => Ok(Stage::Conditional {
                bs: BeamSplitter::new(beam_splitter_t)?,
                setting: homodyne,
            }),
            StageRecord::PhaseShift { phase_shift } => Ok(Stage::PhaseShift { chi: phase_shift }),
        }
    }
}

impl From<Stage> for StageRecord {
    fn from(s: Stage) -> Self {
        match s {
            Stage::Attenuation { tau } => StageRecord::Attenuation { attenuation: tau },
            Stage::Conditional { bs, setting } => StageRecord::Conditional {
                beam_splitter_t: bs.t(),
                homodyne: setting,
            },
            Stage::PhaseShift { chi } => StageRecord::PhaseShift { phase_shift: chi },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversionPlan {
    /// Source state; optional on the wire.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<SingleRailQubit>,
    pub stages: Vec<Stage>,
    pub predicted_output: SingleRailQubit,
    pub predicted_success_density: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanOptions {
    /// Where the attenuated ℰ lands between the target's ℰ (0) and 1 (1).
    pub attenuation_fraction: f64,
    /// Beam splitter used between pure states, where any `t` works.
    pub case1_t: f64,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            attenuation_fraction: 0.5,
            case1_t: FRAC_1_SQRT_2,
        }
    }
}

/// Homodyne conditioning with `e^{−Q²}` factored out of both coefficients, so
/// the output stays exact where `θ₀` underflows. Returns the output and the
/// natural log of the success density.
pub fn homodyne_output_ln(
    q: &SingleRailQubit,
    bs: &BeamSplitter,
    setting: &HomodyneSetting,
) -> Result<(SingleRailQubit, f64)> {
    let scale = (2.0 / PI).powf(0.25);
    let scaled = ProjectionCoefficients {
        theta0: Complex64::new(scale, 0.0),
        theta1: Complex64::from_polar(2.0 * setting.q() * scale, setting.phi()),
    };
    let outcome = project_output(q, bs, &scaled)?;
    Ok((
        outcome.output,
        outcome.success_weight.ln() - 2.0 * setting.q() * setting.q(),
    ))
}

/// Runs the stages analytically; returns the output and the product of the
/// stage success weights.
pub fn execute_plan(q: &SingleRailQubit, stages: &[Stage]) -> Result<(SingleRailQubit, f64)> {
    let (state, ln_weight) = execute_plan_ln(q, stages)?;
    Ok((state, ln_weight.exp()))
}

/// [`execute_plan`] with the weight as a logarithm; finite whenever the true
/// weight is positive, even below the smallest `f64`.
pub fn execute_plan_ln(q: &SingleRailQubit, stages: &[Stage]) -> Result<(SingleRailQubit, f64)> {
    let mut state = *q;
    let mut ln_weight = 0.0;
    for stage in stages {
        match *stage {
            Stage::Attenuation { tau } => state = apply_attenuation(&state, tau)?,
            Stage::PhaseShift { chi } => state = apply_phase_shift(&state, chi)?,
            Stage::Conditional { bs, .. } if bs.t() == 0.0 => state = SingleRailQubit::VACUUM,
            Stage::Conditional { bs, setting } => {
                let (out, ln_w) = homodyne_output_ln(&state, &bs, &setting)?;
                state = out;
                ln_weight += ln_w;
            }
        }
    }
    Ok((state, ln_weight))
}

pub fn synthesize_plan(q: &SingleRailQubit, target: &SingleRailQubit) -> Result<ConversionPlan> {
    synthesize_plan_with(q, target, &PlanOptions::default())
}

pub fn synthesize_plan_with(
    q: &SingleRailQubit,
    target: &SingleRailQubit,
    options: &PlanOptions,
) -> Result<ConversionPlan> {
    let verdict = classify_feasibility(q, target);
    let stages = match verdict.verdict {
        Verdict::Infeasible => return Err(Error::Infeasible(Box::new(verdict))),
        _ if target.is_vacuum() => vec![Stage::Conditional {
            bs: BeamSplitter::new(0.0)?,
            setting: HomodyneSetting::new(0.0, 0.0),
        }],
        Verdict::FeasibleEqualPhase if q.is_pure() && q.distance(target) > EFFICIENCY_EPSILON => {
            vec![conditional_stage(q, target, options.case1_t)?]
        }
        Verdict::FeasibleEqualPhase => {
            let chi = (target.beta() / q.beta()).arg();
            if chi.abs() <= EFFICIENCY_EPSILON {
                vec![Stage::Conditional {
                    bs: BeamSplitter::new(1.0)?,
                    setting: HomodyneSetting::new(0.0, 0.0),
                }]
            } else {
                vec![Stage::PhaseShift {
                    chi: chi.rem_euclid(TAU),
                }]
            }
        }
        Verdict::FeasibleEqualPure => vec![conditional_stage(q, target, options.case1_t)?],
        Verdict::FeasibleStrict => {
            let t = solver::solve_transmissivity_with(q, target, options.case1_t)?;
            vec![conditional_stage(q, target, t)?]
        }
        Verdict::FeasibleViaAttenuation => {
            let lambda = options.attenuation_fraction;
            if !(lambda > 0.0 && lambda < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "attenuation fraction {lambda} outside (0, 1)"
                )));
            }
            let e_mid = verdict.efficiency_out + lambda * (1.0 - verdict.efficiency_out);
            // attenuation scales ℰ by τ²
            let tau = (e_mid / verdict.efficiency_in).sqrt();
            let attenuated = apply_attenuation(q, tau)?;
            let t = solver::solve_transmissivity_with(&attenuated, target, options.case1_t)?;
            vec![
                Stage::Attenuation { tau },
                conditional_stage(&attenuated, target, t)?,
            ]
        }
    };
    let (predicted_output, predicted_success_density) = execute_plan(q, &stages)?;
    Ok(ConversionPlan {
        input: Some(*q),
        stages,
        predicted_output,
        predicted_success_density,
    })
}

fn conditional_stage(q: &SingleRailQubit, target: &SingleRailQubit, t: f64) -> Result<Stage> {
    Ok(Stage::Conditional {
        bs: BeamSplitter::new(t)?,
        setting: solver::solve_homodyne_setting(q, target, t)?,
    })
}
