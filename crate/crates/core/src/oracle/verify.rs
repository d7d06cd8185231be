//! Analytic-versus-oracle verification of a conversion plan.

use serde::{Deserialize, Serialize};

use super::fock::FockState;
use super::homodyne::{conditional_output, normalize_block};
use super::monte_carlo::{monte_carlo_conversion, MonteCarloConfig, MonteCarloReport};
use crate::conversion::{execute_plan, ConversionPlan, Stage};
use crate::error::Result;
use crate::qubit::{DensityMatrix2, SingleRailQubit};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub truncation: usize,
    /// Monte Carlo samples; zero skips the sampling section.
    pub samples: usize,
    pub window: f64,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            truncation: 4,
            samples: 200_000,
            window: 0.01,
            seed: 0,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub analytic: f64,
    pub oracle: f64,
    pub residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSection {
    pub stage: usize,
    pub report: MonteCarloReport,
    /// Acceptance-rate deviation in units of the binomial standard error.
    pub rate_sigmas: f64,
    pub rate_pass: bool,
    /// Largest entrywise distance of the conditioned mean from the analytic output.
    pub state_residual: f64,
    /// `δ² + 3σ`.
    pub state_tolerance: f64,
    pub state_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckRecord>,
    pub monte_carlo: Option<MonteCarloSection>,
    pub pass: bool,
}

fn state_check(
    name: String,
    analytic: &DensityMatrix2,
    oracle: &DensityMatrix2,
    tol: f64,
) -> CheckRecord {
    let residual = analytic.distance(oracle);
    CheckRecord {
        name,
        analytic: analytic.generalized_efficiency(),
        oracle: oracle.generalized_efficiency(),
        residual,
        pass: residual <= tol,
    }
}

fn scalar_check(name: &str, analytic: f64, oracle: f64, tol: f64) -> CheckRecord {
    let residual = (analytic - oracle).abs();
    CheckRecord {
        name: name.to_string(),
        analytic,
        oracle,
        residual,
        pass: residual <= tol,
    }
}

/// Runs one stage through the Fock-space simulation.
fn oracle_stage(
    state: &SingleRailQubit,
    stage: &Stage,
    truncation: usize,
) -> Result<(DensityMatrix2, f64)> {
    match *stage {
        Stage::Attenuation { tau } => {
            let bs =
                FockState::from_qubit(state, 2, truncation, 0)?.apply_beam_splitter(0, 1, tau)?;
            // mode 1 carries the transmitted amplitude
            let out = normalize_block(&bs.reduced_density(1)?)?;
            Ok((out.state, 1.0))
        }
        Stage::PhaseShift { chi } => {
            let shifted = FockState::from_qubit(state, 1, truncation, 0)?.apply_phase(0, chi)?;
            Ok((normalize_block(&shifted.reduced_density(0)?)?.state, 1.0))
        }
        Stage::Conditional { bs, .. } if bs.t() == 0.0 => {
            // output is vacuum for every outcome
            let out =
                FockState::from_qubit(state, 2, truncation, 0)?.apply_beam_splitter(0, 1, 0.0)?;
            Ok((normalize_block(&out.reduced_density(1)?)?.state, 1.0))
        }
        Stage::Conditional { bs, setting } => {
            let out = conditional_output(state, bs.t(), setting.q(), setting.phi(), truncation)?;
            Ok((out.state, out.weight))
        }
    }
}

pub fn verify_plan(
    input: &SingleRailQubit,
    plan: &ConversionPlan,
    options: &VerifyOptions,
) -> Result<VerificationReport> {
    let tol = options.tolerance;
    let mut checks = Vec::new();

    let (replayed, replay_weight) = execute_plan(input, &plan.stages)?;
    checks.push(state_check(
        "analytic_replay_output".into(),
        &plan.predicted_output.to_density_matrix(),
        &replayed.to_density_matrix(),
        tol,
    ));
    checks.push(scalar_check(
        "analytic_replay_success_density",
        plan.predicted_success_density,
        replay_weight,
        tol,
    ));

    let mut analytic_state = *input;
    let mut oracle_state = *input;
    let mut oracle_weight = 1.0;
    let mut last_conditional = None;
    for (i, stage) in plan.stages.iter().enumerate() {
        let (analytic_next, _) = execute_plan(&analytic_state, std::slice::from_ref(stage))?;
        let (rho, w) = oracle_stage(&oracle_state, stage, options.truncation)?;
        checks.push(state_check(
            format!("stage{i}_output"),
            &analytic_next.to_density_matrix(),
            &rho,
            tol,
        ));
        if matches!(stage, Stage::Conditional { bs, .. } if bs.t() > 0.0) {
            last_conditional = Some((i, analytic_state, analytic_next));
        }
        oracle_weight *= w;
        oracle_state = SingleRailQubit::from_density_matrix(&rho)?;
        analytic_state = analytic_next;
    }
    checks.push(state_check(
        "oracle_output".into(),
        &plan.predicted_output.to_density_matrix(),
        &oracle_state.to_density_matrix(),
        tol,
    ));
    checks.push(scalar_check(
        "oracle_success_density",
        plan.predicted_success_density,
        oracle_weight,
        tol,
    ));
    let gain = oracle_state.generalized_efficiency() - input.generalized_efficiency();
    checks.push(CheckRecord {
        name: "generalized_efficiency_not_increased".into(),
        analytic: input.generalized_efficiency(),
        oracle: oracle_state.generalized_efficiency(),
        residual: gain.max(0.0),
        pass: gain <= 1e-12,
    });

    let monte_carlo = match last_conditional {
        Some((stage, before, after)) if options.samples > 0 => {
            let Stage::Conditional { bs, setting } = plan.stages[stage] else {
                unreachable!("index recorded for a conditional stage")
            };
            let config = MonteCarloConfig {
                window: options.window,
                samples: options.samples,
                seed: options.seed,
                truncation: options.truncation,
                ..MonteCarloConfig::default()
            };
            let report =
                monte_carlo_conversion(&before, bs.t(), setting.q(), setting.phi(), &config)?;
            Some(monte_carlo_section(stage, report, &after, options.window))
        }
        _ => None,
    };

    let pass = checks.iter().all(|c| c.pass)
        && monte_carlo
            .as_ref()
            .is_none_or(|m| m.rate_pass && m.state_pass);
    Ok(VerificationReport {
        checks,
        monte_carlo,
        pass,
    })
}

/// Judges a sampling run: rate within 3σ of the quadrature, conditioned state
/// within `δ² + 3σ` of the analytic output at the window centre.
pub fn monte_carlo_section(
    stage: usize,
    report: MonteCarloReport,
    analytic: &SingleRailQubit,
    window: f64,
) -> MonteCarloSection {
    let sigma = report.expected_stderr.max(f64::MIN_POSITIVE);
    let rate_sigmas = (report.rate - report.expected_rate).abs() / sigma;
    let state_tolerance = window * window + 3.0 * report.conditioned_stderr;
    let state_residual = report
        .conditioned
        .map_or(f64::INFINITY, |c| c.distance(&analytic.to_density_matrix()));
    MonteCarloSection {
        stage,
        rate_pass: rate_sigmas <= 3.0,
        rate_sigmas,
        state_pass: state_residual <= state_tolerance,
        state_residual,
        state_tolerance,
        report,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conversion::{synthesize_plan, BeamSplitter};
    use std::f64::consts::FRAC_1_SQRT_2 as S;

    fn quick() -> VerifyOptions {
        VerifyOptions {
            samples: 50_000,
            window: 0.02,
            seed: 3,
            ..VerifyOptions::default()
        }
    }

    #[test]
    fn standard_plan_verifies() {
        let q = SingleRailQubit::photon(0.8).unwrap();
        let plan = synthesize_plan(&q, &SingleRailQubit::real(S, S, 0.85).unwrap()).unwrap();
        let report = verify_plan(&q, &plan, &quick()).unwrap();
        assert!(report.pass, "{report:#?}");
        assert!(report.monte_carlo.is_some());
    }

    #[test]
    fn attenuation_plan_verifies() {
        let q = SingleRailQubit::real(S, S, 1.0).unwrap();
        let plan = synthesize_plan(&q, &SingleRailQubit::photon(0.9).unwrap()).unwrap();
        let report = verify_plan(
            &q,
            &plan,
            &VerifyOptions {
                samples: 0,
                ..quick()
            },
        )
        .unwrap();
        assert!(report.pass, "{report:#?}");
        assert!(report.monte_carlo.is_none());
    }

    #[test]
    fn corrupted_plan_fails() {
        let q = SingleRailQubit::photon(0.8).unwrap();
        let mut plan = synthesize_plan(&q, &SingleRailQubit::real(S, S, 0.85).unwrap()).unwrap();
        if let Stage::Conditional { bs, .. } = &mut plan.stages[0] {
            *bs = BeamSplitter::new(bs.t() - 0.1).unwrap();
        }
        let report = verify_plan(
            &q,
            &plan,
            &VerifyOptions {
                samples: 0,
                ..quick()
            },
        )
        .unwrap();
        assert!(!report.pass);
    }

    #[test]
    fn vacuum_and_phase_plans_verify() {
        let q = SingleRailQubit::real(0.6, 0.8, 0.7).unwrap();
        let plan = synthesize_plan(&q, &SingleRailQubit::VACUUM).unwrap();
        let report = verify_plan(&q, &plan, &quick()).unwrap();
        assert!(report.pass, "{report:#?}");

        let target = SingleRailQubit::canonicalize(
            num_complex::Complex64::new(0.6, 0.0),
            num_complex::Complex64::from_polar(0.8, 1.2),
            0.7,
        )
        .unwrap();
        let plan = synthesize_plan(&q, &target).unwrap();
        let report = verify_plan(&q, &plan, &quick()).unwrap();
        assert!(report.pass, "{report:#?}");
    }
}
