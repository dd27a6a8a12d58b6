//! SLSQP driver and the two-phase material penalization.

use std::cell::RefCell;

use slsqp::{FailStatus, StopTols, SuccessStatus};

use super::{
    analyze, evaluate, exact_sensitivities, finite_difference_sensitivities, reference_scales, Evaluation,
    GradientMode, HistoryRecord, MaterialChoice, OptimizerSettings, Problem, RunResult, RunStatus,
};
use crate::design::DesignVector;
use crate::error::Result;
use crate::materials::InterpolationMode;

/// Objective and constraint values returned for designs the analysis
/// cannot handle; large enough that the line search backs away.
const FAILED_OBJECTIVE: f64 = 10.0;
const FAILED_CONSTRAINT: f64 = 10.0;

#[derive(Default)]
struct Cache {
    z: Vec<f64>,
    values: Option<(f64, Vec<f64>)>,
    gradients: Option<(Vec<f64>, Vec<Vec<f64>>)>,
}

struct Phase<'a> {
    problem: &'a Problem,
    settings: &'a OptimizerSettings,
    mode: InterpolationMode,
    active: Vec<usize>,
    scales: Vec<f64>,
    base: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    f_scale: f64,
    phase: usize,
    cache: RefCell<Cache>,
    history: RefCell<Vec<HistoryRecord>>,
    iteration_offset: usize,
    best: RefCell<Option<(f64, Vec<f64>)>>,
}

impl Phase<'_> {
    fn design(&self, z: &[f64]) -> DesignVector<f64> {
        let mut x = self.base.clone();
        for (j, &i) in self.active.iter().enumerate() {
            x[i] = (z[j] * self.scales[j]).clamp(self.lower[i], self.upper[i]);
        }
        DesignVector::from_slice(&x).expect("full-length vector")
    }

    fn fill(&self, z: &[f64], need_gradient: bool) {
        let mut c = self.cache.borrow_mut();
        if c.z.as_slice() != z {
            *c = Cache {
                z: z.to_vec(),
                ..Cache::default()
            };
        }
        let have = if need_gradient { c.gradients.is_some() } else { c.values.is_some() };
        if have {
            return;
        }
        let d = self.design(z);
        let lt = self.settings.lift_tolerance;
        if need_gradient {
            let sens = match self.settings.gradient {
                GradientMode::Exact => exact_sensitivities(self.problem, &d, self.mode, &self.active, lt),
                GradientMode::FiniteDifference => finite_difference_sensitivities(
                    self.problem,
                    &d,
                    self.mode,
                    &self.active,
                    lt,
                    self.settings.fd_step,
                ),
            };
            match sens {
                Ok(s) => {
                    let df = s
                        .d_objective
                        .iter()
                        .zip(&self.scales)
                        .map(|(g, sc)| g * sc / self.f_scale)
                        .collect();
                    let dg = s
                        .d_inequalities
                        .iter()
                        .map(|row| row.iter().zip(&self.scales).map(|(g, sc)| g * sc).collect())
                        .collect();
                    c.values = Some((s.objective / self.f_scale, s.inequalities));
                    c.gradients = Some((df, dg));
                }
                Err(e) => {
                    log::debug!("gradient evaluation failed: {e}");
                    let m = self.constraint_count();
                    c.values = Some((FAILED_OBJECTIVE, vec![FAILED_CONSTRAINT; m]));
                    c.gradients = Some((vec![0.0; z.len()], vec![vec![0.0; z.len()]; m]));
                }
            }
            let (f, g) = c.values.clone().expect("just filled");
            let viol = g.iter().copied().fold(0.0, f64::max);
            let mut h = self.history.borrow_mut();
            let iteration = self.iteration_offset + h.len() + 1;
            h.push(HistoryRecord {
                iteration,
                phase: self.phase,
                objective: f * self.f_scale,
                max_violation: viol,
                spar_density: d.spar_density,
                skin_density: d.skin_density,
            });
        } else {
            c.values = Some(match analyze::<f64>(self.problem, &d, self.mode) {
                Ok(a) => (a.objective / self.f_scale, a.constraints.inequalities(lt)),
                Err(e) => {
                    log::debug!("evaluation failed: {e}");
                    (FAILED_OBJECTIVE, vec![FAILED_CONSTRAINT; self.constraint_count()])
                }
            });
        }
        let (f, g) = c.values.as_ref().expect("filled");
        let viol = g.iter().copied().fold(0.0, f64::max);
        if viol <= self.settings.feasibility_tolerance {
            let mut best = self.best.borrow_mut();
            if best.as_ref().is_none_or(|(fb, _)| *f < *fb) {
                *best = Some((*f, z.to_vec()));
            }
        }
    }

    fn constraint_count(&self) -> usize {
        let n = self.problem.analysis.num_span_elements;
        2 * n + crate::geometry::CONTROL_POINTS + 3
    }

    fn objective(&self, z: &[f64], grad: Option<&mut [f64]>) -> f64 {
        self.fill(z, grad.is_some());
        let c = self.cache.borrow();
        if let Some(g) = grad {
            g.copy_from_slice(&c.gradients.as_ref().expect("filled").0);
        }
        c.values.as_ref().expect("filled").0
    }

    fn constraint(&self, i: usize, z: &[f64], grad: Option<&mut [f64]>) -> f64 {
        self.fill(z, grad.is_some());
        let c = self.cache.borrow();
        if let Some(g) = grad {
            g.copy_from_slice(&c.gradients.as_ref().expect("filled").1[i]);
        }
        c.values.as_ref().expect("filled").1[i]
    }
}

struct PhaseOutcome {
    design: DesignVector<f64>,
    converged: bool,
    iterations: usize,
}

fn run_phase(
    problem: &Problem,
    start: &DesignVector<f64>,
    mode: InterpolationMode,
    settings: &OptimizerSettings,
    phase: usize,
    history: &mut Vec<HistoryRecord>,
) -> Result<PhaseOutcome> {
    let f0 = analyze::<f64>(problem, start, mode)?.objective;
    let refs = reference_scales();
    let active = problem.active_variables();
    let lower = problem.bounds.lower.to_vec();
    let upper = problem.bounds.upper.to_vec();
    let scales: Vec<f64> = active.iter().map(|&i| refs[i]).collect();
    let base = start.to_vec();
    let z0: Vec<f64> = active.iter().zip(&scales).map(|(&i, s)| base[i] / s).collect();
    let bounds: Vec<(f64, f64)> = active
        .iter()
        .zip(&scales)
        .map(|(&i, s)| (lower[i] / s, upper[i] / s))
        .collect();
    let ph = Phase {
        problem,
        settings,
        mode,
        active,
        scales,
        base,
        lower,
        upper,
        f_scale: f0.abs().max(1e-12),
        phase,
        cache: RefCell::new(Cache::default()),
        history: RefCell::new(Vec::new()),
        iteration_offset: history.len(),
        best: RefCell::new(None),
    };
    let m = ph.constraint_count();
    let cons: Vec<_> = (0..m)
        .map(|i| {
            let ph = &ph;
            move |z: &[f64], g: Option<&mut [f64]>, _: &mut ()| ph.constraint(i, z, g)
        })
        .collect();
    let tols = StopTols {
        ftol_rel: settings.tol,
        ftol_abs: 0.0,
        xtol_rel: 0.0,
        xtol_abs: vec![0.0; z0.len()],
    };
    let outcome = slsqp::minimize(
        |z: &[f64], g: Option<&mut [f64]>, _: &mut ()| ph.objective(z, g),
        &z0,
        &bounds,
        &cons,
        (),
        settings.max_iter.saturating_mul(4),
        Some(tols),
    );
    let (z, converged) = match outcome {
        Ok((status, z, _)) => (
            z,
            matches!(
                status,
                SuccessStatus::Success | SuccessStatus::FtolReached | SuccessStatus::XtolReached
            ),
        ),
        Err((status, z, _)) => {
            log::debug!("SLSQP stopped: {status:?}");
            (z, matches!(status, FailStatus::RoundoffLimited))
        }
    };
    // Prefer the returned point when it is feasible, else the best feasible
    // point seen along the way.
    ph.fill(&z, false);
    let returned_ok = {
        let c = ph.cache.borrow();
        let (_, g) = c.values.as_ref().expect("filled");
        g.iter().all(|&v| v <= settings.feasibility_tolerance)
    };
    let z = match (returned_ok, ph.best.borrow().clone()) {
        (false, Some((_, zb))) => zb,
        _ => z,
    };
    let design = ph.design(&z);
    let iterations = ph.history.borrow().len();
    history.extend(ph.history.into_inner());
    Ok(PhaseOutcome {
        design,
        converged,
        iterations,
    })
}

fn failed(start: &DesignVector<f64>, problem: &Problem, history: Vec<HistoryRecord>, phases: Vec<usize>) -> RunResult {
    let mut history = history;
    if history.is_empty() {
        history.push(HistoryRecord {
            iteration: 1,
            phase: 1,
            objective: f64::NAN,
            max_violation: f64::NAN,
            spar_density: start.spar_density,
            skin_density: start.skin_density,
        });
    }
    RunResult {
        start: start.clone(),
        status: RunStatus::MdaFailed,
        objective_kind: problem.objective,
        evaluation: None,
        max_violation: f64::NAN,
        spar_material: None,
        skin_material: None,
        history,
        phase_iterations: phases,
    }
}

/// Two-phase optimization from `start`.
///
/// Phase 1 uses linear material interpolation, phase 2 restarts from its
/// optimum with the penalized interpolation. Densities are then snapped to
/// the nearest catalogue entry and, when snapping moved them, the remaining
/// variables are re-optimized with that material held fixed.
pub fn optimize(problem: &Problem, start: &DesignVector<f64>, settings: &OptimizerSettings) -> Result<RunResult> {
    settings.validate()?;
    let start = problem.prepare_start(start);
    let mut history = Vec::new();
    let mut phases = Vec::new();
    let penalized = InterpolationMode::Penalized { p: settings.penalty };
    let free = matches!(problem.material, MaterialChoice::Free);

    let mut schedule = Vec::new();
    if free && settings.two_phase {
        schedule.push(InterpolationMode::Linear);
    }
    schedule.push(penalized);

    let mut design = start.clone();
    let mut converged = false;
    for (k, mode) in schedule.into_iter().enumerate() {
        match run_phase(problem, &design, mode, settings, k + 1, &mut history) {
            Ok(out) => {
                design = out.design;
                converged = out.converged;
                phases.push(out.iterations);
            }
            Err(e) => {
                log::debug!("phase {} failed at its start: {e}", k + 1);
                return Ok(failed(&start, problem, history, phases));
            }
        }
    }

    if free {
        let (_, spar) = problem.catalogue.nearest(design.spar_density);
        let (_, skin) = problem.catalogue.nearest(design.skin_density);
        let snapped = (spar.density, skin.density);
        if (snapped.0 - design.spar_density).abs() > 0.0 || (snapped.1 - design.skin_density).abs() > 0.0 {
            design.spar_density = snapped.0;
            design.skin_density = snapped.1;
            let needs_polish = match evaluate(problem, &design, penalized) {
                Ok(e) => e.constraints.max_violation(settings.lift_tolerance) > settings.feasibility_tolerance,
                Err(_) => true,
            };
            if needs_polish {
                let frozen = Problem {
                    material: MaterialChoice::Frozen {
                        spar_density: snapped.0,
                        skin_density: snapped.1,
                    },
                    ..problem.clone()
                };
                let n = phases.len() + 1;
                if let Ok(out) = run_phase(&frozen, &design, penalized, settings, n, &mut history) {
                    design = out.design;
                    converged = out.converged;
                    phases.push(out.iterations);
                }
            }
        }
    }

    let eval: Evaluation = match evaluate(problem, &design, penalized) {
        Ok(e) => e,
        Err(e) => {
            log::debug!("final design failed to analyze: {e}");
            return Ok(failed(&start, problem, history, phases));
        }
    };
    let viol = eval.constraints.max_violation(settings.lift_tolerance);
    let status = if viol > settings.feasibility_tolerance {
        RunStatus::Infeasible
    } else if converged {
        RunStatus::Converged
    } else {
        RunStatus::MaxIter
    };
    if history.is_empty() {
        history.push(HistoryRecord {
            iteration: 1,
            phase: 1,
            objective: eval.objective,
            max_violation: viol,
            spar_density: design.spar_density,
            skin_density: design.skin_density,
        });
    }
    let name = |d: f64| {
        let (_, r) = problem.catalogue.nearest(d);
        ((r.density - d).abs() <= 1.0).then(|| r.name.clone())
    };
    Ok(RunResult {
        start,
        status,
        objective_kind: problem.objective,
        spar_material: name(design.spar_density),
        skin_material: name(design.skin_density),
        max_violation: viol,
        evaluation: Some(eval),
        history,
        phase_iterations: phases,
    })
}
