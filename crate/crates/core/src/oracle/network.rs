use serde::{Deserialize, Serialize};

use super::fock::FockState;
use super::homodyne::{normalize_block, quadrature_bra, MULTIPHOTON_TOLERANCE};
use crate::conversion::{homodyne_coefficients, project_output, BeamSplitter, HomodyneSetting};
use crate::error::{Error, Result};
use crate::qubit::SingleRailQubit;
use crate::solver::{self, DEFAULT_CASE1_T};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSplitter {
    pub mode_a: usize,
    pub mode_b: usize,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasuredMode {
    pub mode: usize,
    pub q: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkCheck {
    /// Largest entrywise distance between the network output and its
    /// single-splitter equivalent.
    pub residual: f64,
    pub output: SingleRailQubit,
    pub weight: f64,
    pub equivalent_t: f64,
    pub equivalent_setting: HomodyneSetting,
    pub input_generalized_efficiency: f64,
    pub output_generalized_efficiency: f64,
}

/// Runs a beam-splitter line on the qubit (mode 0) and `modes − 1` vacuum
/// ancillae, homodynes every mode but one, and compares the kept mode with the
/// one-splitter scheme solved for the same output.
pub fn network_reduction_check(
    q: &SingleRailQubit,
    modes: usize,
    line: &[LineSplitter],
    measured: &[MeasuredMode],
    truncation: usize,
) -> Result<NetworkCheck> {
    if let Some(m) = line
        .iter()
        .flat_map(|s| [s.mode_a, s.mode_b])
        .chain(measured.iter().map(|m| m.mode))
        .find(|&m| m >= modes)
    {
        return Err(Error::InvalidArgument(format!(
            "mode {m} out of range for {modes} modes"
        )));
    }
    if modes == 0 || measured.len() + 1 != modes {
        return Err(Error::InvalidArgument(format!(
            "{modes} modes need {} measured modes, got {}",
            modes.saturating_sub(1),
            measured.len()
        )));
    }
    let mut order: Vec<MeasuredMode> = measured.to_vec();
    order.sort_by_key(|m| std::cmp::Reverse(m.mode));
    if order.windows(2).any(|w| w[0].mode == w[1].mode) {
        return Err(Error::InvalidArgument("a mode is measured twice".into()));
    }

    let mut state = FockState::from_qubit(q, modes, truncation, 0)?;
    for s in line {
        state = state.apply_beam_splitter(s.mode_a, s.mode_b, s.t)?;
    }
    // highest mode first so lower indices stay valid
    for m in &order {
        state = state.project(m.mode, &quadrature_bra(truncation, m.q, m.phi))?;
    }
    let block = normalize_block(&state.reduced_density(0)?)?;
    if block.multiphoton_weight > MULTIPHOTON_TOLERANCE {
        return Err(Error::Domain(format!(
            "network output has multiphoton weight {:.3e}",
            block.multiphoton_weight
        )));
    }
    let output = block.qubit()?;

    let (equivalent_t, equivalent_setting, equivalent) = if output.is_vacuum() {
        (0.0, HomodyneSetting::new(0.0, 0.0), SingleRailQubit::VACUUM)
    } else {
        let t = solver::solve_transmissivity_with(q, &output, DEFAULT_CASE1_T)?;
        let setting = solver::solve_homodyne_setting(q, &output, t)?;
        let eq = project_output(q, &BeamSplitter::new(t)?, &homodyne_coefficients(&setting))?;
        (t, setting, eq.output)
    };
    Ok(NetworkCheck {
        residual: output
            .distance(&equivalent)
            .max(block.state.distance(&equivalent.to_density_matrix())),
        output,
        weight: block.weight,
        equivalent_t,
        equivalent_setting,
        input_generalized_efficiency: q.generalized_efficiency(),
        output_generalized_efficiency: block.state.generalized_efficiency(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_splitter_line_is_its_own_equivalent() {
        let q = SingleRailQubit::real(0.6, 0.8, 0.85).unwrap();
        let check = network_reduction_check(
            &q,
            2,
            &[LineSplitter {
                mode_a: 0,
                mode_b: 1,
                t: 0.55,
            }],
            &[MeasuredMode {
                mode: 0,
                q: 0.3,
                phi: 0.9,
            }],
            4,
        )
        .unwrap();
        assert!(check.residual < 1e-12);
        assert!((check.equivalent_t - 0.55).abs() < 1e-9);
    }

    #[test]
    fn two_splitter_line_reduces() {
        let q = SingleRailQubit::real(0.5, 0.866_025_403_784_438_6, 0.7).unwrap();
        let check = network_reduction_check(
            &q,
            3,
            &[
                LineSplitter {
                    mode_a: 0,
                    mode_b: 1,
                    t: 0.8,
                },
                LineSplitter {
                    mode_a: 1,
                    mode_b: 2,
                    t: 0.6,
                },
            ],
            &[
                MeasuredMode {
                    mode: 0,
                    q: 0.2,
                    phi: 0.5,
                },
                MeasuredMode {
                    mode: 1,
                    q: -0.4,
                    phi: 2.0,
                },
            ],
            4,
        )
        .unwrap();
        assert!(check.residual < 1e-9, "residual {}", check.residual);
        assert!(check.output_generalized_efficiency <= check.input_generalized_efficiency + 1e-12);
    }

    #[test]
    fn untouched_mode_is_vacuum() {
        let q = SingleRailQubit::photon(0.6).unwrap();
        let check = network_reduction_check(
            &q,
            3,
            &[LineSplitter {
                mode_a: 0,
                mode_b: 1,
                t: 0.5,
            }],
            &[
                MeasuredMode {
                    mode: 0,
                    q: 0.1,
                    phi: 0.0,
                },
                MeasuredMode {
                    mode: 1,
                    q: 0.2,
                    phi: 0.0,
                },
            ],
            4,
        )
        .unwrap();
        assert!(check.output.is_vacuum());
        assert_eq!(check.residual, 0.0);
    }

    #[test]
    fn rejects_inconsistent_measurements() {
        let q = SingleRailQubit::photon(0.5).unwrap();
        let line = [LineSplitter {
            mode_a: 0,
            mode_b: 2,
            t: 0.5,
        }];
        assert!(network_reduction_check(
            &q,
            3,
            &line,
            &[MeasuredMode {
                mode: 0,
                q: 0.0,
                phi: 0.0
            }],
            3
        )
        .is_err());
        assert!(network_reduction_check(
            &q,
            2,
            &line,
            &[MeasuredMode {
                mode: 1,
                q: 0.0,
                phi: 0.0
            }],
            3
        )
        .is_err());
        let twice = [
            MeasuredMode {
                mode: 0,
                q: 0.0,
                phi: 0.0,
            },
            MeasuredMode {
                mode: 0,
                q: 0.1,
                phi: 0.0,
            },
        ];
        assert!(network_reduction_check(&q, 3, &line, &twice, 3).is_err());
    }
}
