//! Parameter solves, partial-target optimization and sweeps built on the
//! closed-form conversion.

use std::f64::consts::FRAC_1_SQRT_2;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conversion::{
    self, classify_feasibility, homodyne_coefficients, project_output, BeamSplitter,
    ConversionPlan, HomodyneSetting, PlanOptions, Verdict,
};
use crate::error::{Error, Result};
use crate::qubit::SingleRailQubit;

/// Beam splitter used between two pure states; any value in `(0, 1)` works there.
pub const DEFAULT_CASE1_T: f64 = FRAC_1_SQRT_2;

/// Points in the coarse scan that precedes golden-section refinement.
const PRESCAN_POINTS: usize = 64;
const GOLDEN_TOLERANCE: f64 = 1e-10;

pub fn solve_transmissivity(q: &SingleRailQubit, target: &SingleRailQubit) -> Result<f64> {
    solve_transmissivity_with(q, target, DEFAULT_CASE1_T)
}

/// Amplitude transmissivity from `tβ√(E(1−E′)) = β′√(E′(1−E))`.
pub fn solve_transmissivity_with(
    q: &SingleRailQubit,
    target: &SingleRailQubit,
    case1_t: f64,
) -> Result<f64> {
    if target.is_vacuum() {
        return Ok(0.0);
    }
    if q.is_pure() && target.is_pure() {
        return Ok(case1_t);
    }
    if q.is_vacuum() {
        return Err(Error::NoSolution(
            "vacuum input only reaches the vacuum".into(),
        ));
    }
    let (e, e_out) = (q.efficiency(), target.efficiency());
    if e >= 1.0 {
        return Err(Error::Domain(
            "pure input with a mixed target: attenuate first, the transfer relation has no solution".into(),
        ));
    }
    if e_out >= 1.0 {
        return Err(Error::NoSolution(
            "a mixed input cannot produce a pure output".into(),
        ));
    }
    let t =
        target.beta().norm() / q.beta().norm() * (e_out * (1.0 - e) / (e * (1.0 - e_out))).sqrt();
    if t > 1.0 + 1e-12 {
        return Err(Error::NoSolution(format!(
            "transfer relation needs t = {t} > 1: generalized efficiency would increase"
        )));
    }
    Ok(t.min(1.0))
}

/// `2Q e^{iφ} = (α′βt − αβ′) / (ββ′r)`, the setting that steers the pure part.
pub fn solve_homodyne_setting(
    q: &SingleRailQubit,
    target: &SingleRailQubit,
    t: f64,
) -> Result<HomodyneSetting> {
    let bs = BeamSplitter::new(t)?;
    let (alpha, beta) = (q.alpha(), q.beta());
    let (alpha_out, beta_out) = (target.alpha(), target.beta());
    if target.is_vacuum() {
        return if t == 0.0 {
            Ok(HomodyneSetting::new(0.0, 0.0))
        } else {
            Err(Error::NoSolution("vacuum target needs t = 0".into()))
        };
    }
    if q.is_vacuum() {
        return Err(Error::NoSolution(
            "vacuum input only reaches the vacuum".into(),
        ));
    }
    let numerator = alpha_out * beta * t - alpha * beta_out;
    if bs.r() < 1e-15 {
        return if numerator.norm() <= 1e-12 {
            Ok(HomodyneSetting::new(0.0, 0.0))
        } else {
            Err(Error::NoSolution(
                "r = 0 forces θ₀ = 0: the requested outcome has zero probability".into(),
            ))
        };
    }
    Ok(HomodyneSetting::from_ratio(
        numerator / (beta * beta_out * bs.r()),
    ))
}

/// Target with fixed pure part and free efficiency, tuned for the largest
/// predicted success density.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialTargetOptimum {
    pub efficiency: f64,
    pub success_density: f64,
    pub plan: ConversionPlan,
    /// Upper end of the feasible efficiency interval.
    pub efficiency_max: f64,
}

/// Largest `E′` with `ℰ(α′, β′, E′) ≤ ℰ(q)`.
pub fn max_output_efficiency(
    q: &SingleRailQubit,
    alpha_out: Complex64,
    beta_out: Complex64,
) -> Result<f64> {
    let norm = alpha_out.norm_sqr() + beta_out.norm_sqr();
    if norm == 0.0 {
        return Err(Error::InvalidState("zero amplitude vector".into()));
    }
    let (a2, b2) = (alpha_out.norm_sqr() / norm, beta_out.norm_sqr() / norm);
    let gen_eff = q.generalized_efficiency();
    if b2 == 0.0 || gen_eff == 0.0 {
        return Err(Error::NoSolution(
            "empty feasible efficiency interval".into(),
        ));
    }
    Ok((gen_eff / (b2 + a2 * gen_eff)).min(1.0))
}

pub fn optimize_over_output_efficiency(
    q: &SingleRailQubit,
    alpha_out: Complex64,
    beta_out: Complex64,
    options: &PlanOptions,
) -> Result<PartialTargetOptimum> {
    let e_max = max_output_efficiency(q, alpha_out, beta_out)?;
    let objective = |e: f64| -> f64 {
        SingleRailQubit::canonicalize(alpha_out, beta_out, e)
            .and_then(|target| conversion::synthesize_plan_with(q, &target, options))
            .map(|p| p.predicted_success_density)
            .unwrap_or(f64::NEG_INFINITY)
    };

    // open interval (0, e_max): at e_max the transformation is only possible between pure states
    let step = e_max / PRESCAN_POINTS as f64;
    let grid: Vec<f64> = (0..PRESCAN_POINTS)
        .map(|k| step * (k as f64 + 0.5))
        .collect();
    let values: Vec<f64> = grid.par_iter().map(|&e| objective(e)).collect();
    let (best, best_value) =
        values
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (k, v)| if v > acc.1 { (k, v) } else { acc },
            );
    if best_value == f64::NEG_INFINITY {
        return Err(Error::NoSolution(
            "no feasible efficiency in the scanned interval".into(),
        ));
    }
    let lo = if best == 0 {
        step * 1e-6
    } else {
        grid[best - 1]
    };
    let hi = if best + 1 == PRESCAN_POINTS {
        e_max * (1.0 - 1e-12)
    } else {
        grid[best + 1]
    };
    let (mut e_star, mut value) = golden_section_max(&objective, lo, hi, GOLDEN_TOLERANCE);
    if value < best_value {
        e_star = grid[best];
        value = best_value;
    }
    if q.is_pure() {
        let at_max = objective(e_max);
        if at_max > value {
            e_star = e_max;
            value = at_max;
        }
    }
    let target = SingleRailQubit::canonicalize(alpha_out, beta_out, e_star)?;
    let plan = conversion::synthesize_plan_with(q, &target, options)?;
    Ok(PartialTargetOptimum {
        efficiency: e_star,
        success_density: value,
        plan,
        efficiency_max: e_max,
    })
}

/// Golden-section search for a maximum of `f` on `[lo, hi]`.
pub fn golden_section_max<F: Fn(f64) -> f64>(
    f: &F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    /// Homodyne outcome at fixed `t`, `φ`.
    Q,
    /// Beam-splitter amplitude transmissivity at fixed `Q`, `φ`.
    T,
    /// Target efficiency for a fixed target pure part; each point is a synthesized plan.
    EPrime,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Q => "Q",
            SweepAxis::T => "t",
            SweepAxis::EPrime => "E'",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
    /// Fixed transmissivity for the `Q` axis.
    pub t: f64,
    /// Fixed outcome for the `t` axis.
    pub q: f64,
    pub phi: f64,
    /// Target pure part for the `E′` axis.
    pub target_pure: (Complex64, Complex64),
}

impl SweepSpec {
    pub fn new(axis: SweepAxis, min: f64, max: f64, steps: usize) -> Self {
        SweepSpec {
            axis,
            min,
            max,
            steps,
            t: FRAC_1_SQRT_2,
            q: 0.0,
            phi: 0.0,
            target_pure: (
                Complex64::new(FRAC_1_SQRT_2, 0.0),
                Complex64::new(FRAC_1_SQRT_2, 0.0),
            ),
        }
    }

    fn value_at(&self, k: usize) -> f64 {
        if self.steps == 1 {
            self.min
        } else {
            self.min + (self.max - self.min) * k as f64 / (self.steps - 1) as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub param: f64,
    pub output: SingleRailQubit,
    pub generalized_efficiency: f64,
    pub success_density: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
}

/// Evaluates the conversion along one axis. `E′` points that are infeasible
/// are left out of the table.
pub fn sweep(q: &SingleRailQubit, spec: &SweepSpec) -> Result<SweepResult> {
    if spec.steps == 0 {
        return Err(Error::InvalidArgument(
            "sweep needs at least one step".into(),
        ));
    }
    if !(spec.min.is_finite() && spec.max.is_finite()) {
        return Err(Error::InvalidArgument("sweep range must be finite".into()));
    }
    let evaluated: Vec<Result<Option<SweepPoint>>> = (0..spec.steps)
        .into_par_iter()
        .map(|k| evaluate_point(q, spec, spec.value_at(k)))
        .collect();
    let mut points = Vec::with_capacity(spec.steps);
    for p in evaluated {
        if let Some(p) = p? {
            points.push(p);
        }
    }
    Ok(SweepResult {
        axis: spec.axis,
        points,
    })
}

fn evaluate_point(q: &SingleRailQubit, spec: &SweepSpec, x: f64) -> Result<Option<SweepPoint>> {
    let (output, density) = match spec.axis {
        SweepAxis::Q => {
            let out = project_output(
                q,
                &BeamSplitter::new(spec.t)?,
                &homodyne_coefficients(&HomodyneSetting::new(x, spec.phi)),
            )?;
            (out.output, out.success_weight)
        }
        SweepAxis::T => {
            let out = project_output(
                q,
                &BeamSplitter::new(x)?,
                &homodyne_coefficients(&HomodyneSetting::new(spec.q, spec.phi)),
            )?;
            (out.output, out.success_weight)
        }
        SweepAxis::EPrime => {
            let (a, b) = spec.target_pure;
            let target = SingleRailQubit::canonicalize(a, b, x)?;
            if classify_feasibility(q, &target).verdict == Verdict::Infeasible {
                return Ok(None);
            }
            let plan = conversion::synthesize_plan(q, &target)?;
            (plan.predicted_output, plan.predicted_success_density)
        }
    };
    Ok(Some(SweepPoint {
        param: x,
        output,
        generalized_efficiency: output.generalized_efficiency(),
        success_density: density,
    }))
}

pub const SWEEP_CSV_HEADER: [&str; 8] = [
    "param",
    "alpha_re",
    "alpha_im",
    "beta_re",
    "beta_im",
    "E",
    "gen_eff",
    "success_density",
];

impl SweepResult {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(SWEEP_CSV_HEADER)?;
        for p in &self.points {
            let row = [
                p.param,
                p.output.alpha().re,
                p.output.alpha().im,
                p.output.beta().re,
                p.output.beta().im,
                p.output.efficiency(),
                p.generalized_efficiency,
                p.success_density,
            ];
            w.write_record(row.iter().map(|v| format_sig(*v)))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Twelve significant digits, shortest representation.
pub fn format_sig(v: f64) -> String {
    // + 0.0 turns -0.0 into 0.0
    let r = round_sig(v) + 0.0;
    if r == 0.0 || !r.is_finite() || (1e-4..1e15).contains(&r.abs()) {
        r.to_string()
    } else {
        format!("{r:e}")
    }
}

pub fn round_sig(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.11e}").parse().unwrap_or(v)
}
