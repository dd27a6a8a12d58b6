//! Constrained sizing: problem definition, design evaluation with exact
//! gradients, the two-phase material-selecting SQP driver and multi-start
//! orchestration.

mod multistart;
mod sqp;
mod verify;

pub use multistart::{co2_ratio_sweep, multi_start, MultiStartOutcome, MultiStartPlan, StartRange, SweepPoint, SweepResult};
pub use sqp::optimize;
pub use verify::{verify_gradients, GradientCheck};

use serde::{Deserialize, Serialize};

use crate::design::{DesignBounds, DesignVector, NUM_VARIABLES};
use crate::eco::{co2_total, Co2Breakdown, EcoConfig};
use crate::energy::{run_mda, AnalysisConfig, MassBreakdown, MdaState};
use crate::error::{Error, Result};
use crate::geometry::{control_stations, BSplineMap};
use crate::materials::{InterpolationMode, MaterialCatalogue};
use crate::scalar::{Dual, Scalar};

/// Quantity being minimized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Total aircraft mass, kg.
    Mass,
    /// Lifecycle CO2 of structure, solar cells and batteries, kgCO2.
    #[default]
    Co2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    /// Forward-mode dual numbers through the whole analysis.
    #[default]
    Exact,
    /// Second-order finite differences, one-sided at the bounds.
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSettings {
    /// Convergence tolerance on the normalized objective.
    pub tol: f64,
    /// Iteration budget per phase.
    pub max_iter: usize,
    pub gradient: GradientMode,
    /// Relative step for finite-difference gradients.
    pub fd_step: f64,
    /// Half-width of the lift = weight band, relative to weight.
    pub lift_tolerance: f64,
    /// Largest inequality value still counted as satisfied.
    pub feasibility_tolerance: f64,
    /// Exponent of the second-phase penalized interpolation.
    pub penalty: f64,
    /// Run the linear-interpolation phase before the penalized one.
    pub two_phase: bool,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            tol: 1e-3,
            max_iter: 250,
            gradient: GradientMode::Exact,
            fd_step: 1e-6,
            lift_tolerance: 1e-3,
            feasibility_tolerance: 1e-3,
            penalty: 5.0,
            two_phase: true,
        }
    }
}

impl OptimizerSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.fd_step > 0.0 && self.lift_tolerance > 0.0 && self.feasibility_tolerance >= 0.0)
        {
            return Err(Error::InvalidInput("optimizer tolerances must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be at least 1".into()));
        }
        InterpolationMode::Penalized { p: self.penalty }.validate()
    }
}

/// Material handling of a problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MaterialChoice {
    /// Densities are design variables.
    #[default]
    Free,
    /// Densities held at the given catalogue values.
    Frozen { spar_density: f64, skin_density: f64 },
}

/// Everything that defines one optimization problem apart from the start.
#[derive(Debug, Clone)]
pub struct Problem {
    pub catalogue: MaterialCatalogue,
    pub analysis: AnalysisConfig,
    pub eco: EcoConfig,
    pub bounds: DesignBounds,
    pub objective: Objective,
    pub material: MaterialChoice,
}

/// Reference magnitudes used to scale the variables seen by the SQP.
pub fn reference_scales() -> [f64; NUM_VARIABLES] {
    let mut r = [1.0; NUM_VARIABLES];
    r[0] = 500.0;
    r[1] = 500.0;
    for k in 0..4 {
        r[2 + k] = 10.0;
        r[6 + k] = 1e-3;
        r[10 + k] = 1e-3;
        r[14 + k] = 0.1;
    }
    r[18] = 10.0;
    r
}

impl Problem {
    /// Validates the parts and narrows density bounds to the catalogue.
    pub fn new(
        catalogue: MaterialCatalogue,
        analysis: AnalysisConfig,
        eco: EcoConfig,
        mut bounds: DesignBounds,
        objective: Objective,
        material: MaterialChoice,
    ) -> Result<Self> {
        analysis.validate()?;
        eco.validate()?;
        bounds.validate()?;
        let (min, max) = catalogue.density_range();
        bounds.clamp_density(min, max);
        if bounds.lower.spar_density > bounds.upper.spar_density || bounds.lower.skin_density > bounds.upper.skin_density {
            return Err(Error::InvalidInput("density bounds do not overlap the catalogue".into()));
        }
        if let MaterialChoice::Frozen { spar_density, skin_density } = material {
            for d in [spar_density, skin_density] {
                if !(min..=max).contains(&d) {
                    return Err(Error::DensityOutOfRange { density: d, min, max });
                }
            }
        }
        Ok(Self {
            catalogue,
            analysis,
            eco,
            bounds,
            objective,
            material,
        })
    }

    /// Indices of the variables the optimizer moves.
    pub fn active_variables(&self) -> Vec<usize> {
        let skip = match self.material {
            MaterialChoice::Free => 0,
            MaterialChoice::Frozen { .. } => 2,
        };
        (skip..NUM_VARIABLES).collect()
    }

    /// Start design clipped into the bounds, with frozen densities applied.
    pub fn prepare_start(&self, start: &DesignVector<f64>) -> DesignVector<f64> {
        let mut d = self.bounds.clamp(start);
        if let MaterialChoice::Frozen { spar_density, skin_density } = self.material {
            d.spar_density = spar_density;
            d.skin_density = skin_density;
        }
        d
    }

    pub fn with_objective(&self, objective: Objective) -> Self {
        Self {
            objective,
            ..self.clone()
        }
    }
}

/// Constraint values, all normalized so that `≤ 0` is satisfied (except
/// `lift_weight`, which is an equality).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet<T> {
    /// Spar stress margin per element.
    pub failure: Vec<T>,
    /// Top-skin buckling interaction per element.
    pub buckling: Vec<T>,
    /// `2 t_skin / t_wing − 1` at the control stations.
    pub skin_thickness: Vec<T>,
    /// `P_needed / (A_PV · S_wing) − 1`.
    pub power: T,
    /// `(L − W) / W` at cruise.
    pub lift_weight: T,
}

impl<T: Scalar> ConstraintSet<T> {
    /// Every value as a `g ≤ 0` inequality; the equality becomes a band.
    pub fn inequalities(&self, lift_tolerance: f64) -> Vec<T> {
        let tol = T::lit(lift_tolerance);
        let mut v = Vec::with_capacity(self.failure.len() + self.buckling.len() + 7);
        v.extend_from_slice(&self.failure);
        v.extend_from_slice(&self.buckling);
        v.extend_from_slice(&self.skin_thickness);
        v.push(self.power);
        v.push(self.lift_weight - tol);
        v.push(-self.lift_weight - tol);
        v
    }

    pub fn max_violation(&self, lift_tolerance: f64) -> f64 {
        self.inequalities(lift_tolerance)
            .iter()
            .map(|g| g.value())
            .fold(0.0, f64::max)
    }

    pub fn to_f64(&self) -> ConstraintSet<f64> {
        let v = |x: &[T]| x.iter().map(|g| g.value()).collect();
        ConstraintSet {
            failure: v(&self.failure),
            buckling: v(&self.buckling),
            skin_thickness: v(&self.skin_thickness),
            power: self.power.value(),
            lift_weight: self.lift_weight.value(),
        }
    }
}

/// Objective, constraints and the underlying state of one design.
#[derive(Debug, Clone)]
pub struct Analysis<T> {
    pub objective: T,
    pub constraints: ConstraintSet<T>,
    pub co2: Co2Breakdown<T>,
    pub state: MdaState<T>,
}

/// Run the coupled analysis and assemble objective and constraints.
pub fn analyze<T: Scalar>(problem: &Problem, design: &DesignVector<T>, mode: InterpolationMode) -> Result<Analysis<T>> {
    let state = run_mda(design, &problem.catalogue, mode, &problem.analysis)?;
    let co2 = co2_total(&state, problem.analysis.energy.night_duration_h, &problem.eco);
    let objective = match problem.objective {
        Objective::Mass => state.mass.total,
        Objective::Co2 => co2.total,
    };

    let stations = BSplineMap::cubic(&control_stations());
    let t_skin = stations.evaluate(&design.t_skin_cp)?;
    let tc = stations.evaluate(&design.tc_cp)?;
    let skin_thickness = stations
        .stations()
        .iter()
        .zip(t_skin.iter().zip(&tc))
        .map(|(&u, (&t, &r))| {
            let chord = design.root_chord * (design.taper + (T::one() - design.taper) * T::lit(u));
            T::lit(2.0) * t / (r * chord) - T::one()
        })
        .collect();
    let energy = &problem.analysis.energy;
    let power = state.power.needed / (T::lit(energy.pv_power_density_w_m2) * state.wing.area) - T::one();
    let weight = state.mass.total * T::lit(crate::structures::GRAVITY);
    let constraints = ConstraintSet {
        failure: state.structure.failure.clone(),
        buckling: state.structure.buckling.clone(),
        skin_thickness,
        power,
        lift_weight: (state.cruise.lift - weight) / weight,
    };
    Ok(Analysis {
        objective,
        constraints,
        co2,
        state,
    })
}

/// Cruise performance summary of an analyzed design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Performance {
    pub cl: f64,
    pub cd: f64,
    pub cl32_cd: f64,
    pub lift_n: f64,
    pub weight_n: f64,
    pub wing_area_m2: f64,
    pub aspect_ratio: f64,
    pub pv_area_m2: f64,
    pub power_needed_w: f64,
    pub propulsive_power_w: f64,
    pub reynolds: f64,
    pub gust_load_factor: f64,
    pub tip_deflection_m: f64,
    pub mda_iterations: usize,
}

/// Plain-value evaluation of a design.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Evaluation {
    pub design: DesignVector<f64>,
    pub objective: f64,
    pub constraints: ConstraintSet<f64>,
    pub mass: MassBreakdown<f64>,
    pub co2: Co2Breakdown<f64>,
    pub performance: Performance,
}

impl Evaluation {
    fn from_analysis(design: &DesignVector<f64>, a: &Analysis<f64>) -> Self {
        let s = &a.state;
        Self {
            design: design.clone(),
            objective: a.objective,
            constraints: a.constraints.clone(),
            mass: s.mass,
            co2: a.co2,
            performance: Performance {
                cl: s.cruise.cl,
                cd: s.cruise.cd,
                cl32_cd: s.cruise.cl.powf(1.5) / s.cruise.cd,
                lift_n: s.cruise.lift,
                weight_n: s.mass.total * crate::structures::GRAVITY,
                wing_area_m2: s.wing.area,
                aspect_ratio: s.wing.aspect_ratio,
                pv_area_m2: s.pv_area,
                power_needed_w: s.power.needed,
                propulsive_power_w: s.power.propulsive,
                reynolds: s.cruise.reynolds,
                gust_load_factor: s.gust_load_factor,
                tip_deflection_m: s.structure.tip_deflection,
                mda_iterations: s.iterations,
            },
        }
    }
}

pub fn evaluate(problem: &Problem, design: &DesignVector<f64>, mode: InterpolationMode) -> Result<Evaluation> {
    let a = analyze(problem, design, mode)?;
    Ok(Evaluation::from_analysis(design, &a))
}

/// Objective and inequality values with their derivatives with respect to
/// the listed variables (physical units).
#[derive(Debug, Clone)]
pub struct Sensitivities {
    pub objective: f64,
    pub inequalities: Vec<f64>,
    pub d_objective: Vec<f64>,
    /// `d_inequalities[i][j]`: constraint `i`, variable `variables[j]`.
    pub d_inequalities: Vec<Vec<f64>>,
    pub variables: Vec<usize>,
}

fn seeded(x: &[f64], k: usize) -> DesignVector<Dual> {
    let v: Vec<Dual> = x
        .iter()
        .enumerate()
        .map(|(i, &xi)| if i == k { Dual::variable(xi) } else { Dual::constant(xi) })
        .collect();
    DesignVector::from_slice(&v).expect("full-length vector")
}

/// Exact derivatives, one dual-number analysis per variable.
pub fn exact_sensitivities(
    problem: &Problem,
    design: &DesignVector<f64>,
    mode: InterpolationMode,
    variables: &[usize],
    lift_tolerance: f64,
) -> Result<Sensitivities> {
    let x = design.to_vec();
    let base = analyze(problem, design, mode)?;
    let g0 = base.constraints.inequalities(lift_tolerance);
    let mut d_obj = Vec::with_capacity(variables.len());
    let mut d_g = vec![Vec::with_capacity(variables.len()); g0.len()];
    for &k in variables {
        let a = analyze(problem, &seeded(&x, k), mode)?;
        d_obj.push(a.objective.eps);
        for (row, g) in d_g.iter_mut().zip(a.constraints.inequalities(lift_tolerance)) {
            row.push(g.eps);
        }
    }
    Ok(Sensitivities {
        objective: base.objective,
        inequalities: g0,
        d_objective: d_obj,
        d_inequalities: d_g,
        variables: variables.to_vec(),
    })
}

/// Second-order differences with step `rel_step·max(|x|, scale)`. Central
/// in the interior; one-sided from inside when a step would leave the
/// bounds, since the analysis clamps some variables at their bounds.
pub fn finite_difference_sensitivities(
    problem: &Problem,
    design: &DesignVector<f64>,
    mode: InterpolationMode,
    variables: &[usize],
    lift_tolerance: f64,
    rel_step: f64,
) -> Result<Sensitivities> {
    let x = design.to_vec();
    let lower = problem.bounds.lower.to_vec();
    let upper = problem.bounds.upper.to_vec();
    let scales = reference_scales();
    let base = analyze(problem, design, mode)?;
    let f0 = base.objective;
    let g0 = base.constraints.inequalities(lift_tolerance);
    let mut d_obj = Vec::with_capacity(variables.len());
    let mut d_g = vec![Vec::with_capacity(variables.len()); g0.len()];
    let eval = |k: usize, offset: f64| -> Result<(f64, Vec<f64>)> {
        let mut v = x.clone();
        v[k] += offset;
        let d = DesignVector::from_slice(&v)?;
        let a = analyze(problem, &d, mode)?;
        Ok((a.objective, a.constraints.inequalities(lift_tolerance)))
    };
    for &k in variables {
        let h = rel_step * x[k].abs().max(scales[k]);
        let room_up = x[k] + h <= upper[k];
        let room_down = x[k] - h >= lower[k];
        // Coefficients on f(x + m·h) for m = -2..=2.
        let stencil: [(f64, f64); 3] = match (room_down, room_up) {
            (false, true) => [(0.0, -1.5), (1.0, 2.0), (2.0, -0.5)],
            (true, false) => [(0.0, 1.5), (-1.0, -2.0), (-2.0, 0.5)],
            _ => [(1.0, 0.5), (-1.0, -0.5), (0.0, 0.0)],
        };
        let mut df = 0.0;
        let mut dg = vec![0.0; g0.len()];
        for (m, c) in stencil {
            if c == 0.0 {
                continue;
            }
            let (f, g) = if m == 0.0 { (f0, g0.clone()) } else { eval(k, m * h)? };
            df += c * f;
            for (acc, gi) in dg.iter_mut().zip(g) {
                *acc += c * gi;
            }
        }
        d_obj.push(df / h);
        for (row, v) in d_g.iter_mut().zip(dg) {
            row.push(v / h);
        }
    }
    Ok(Sensitivities {
        objective: f0,
        inequalities: g0,
        d_objective: d_obj,
        d_inequalities: d_g,
        variables: variables.to_vec(),
    })
}

/// Termination state of one optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Converged,
    MaxIter,
    MdaFailed,
    Infeasible,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Converged => "converged",
            Self::MaxIter => "max_iter",
            Self::MdaFailed => "mda_failed",
            Self::Infeasible => "infeasible",
        }
    }
}

/// One optimizer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub iteration: usize,
    pub phase: usize,
    pub objective: f64,
    pub max_violation: f64,
    pub spar_density: f64,
    pub skin_density: f64,
}

/// Outcome of [`optimize`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    pub start: DesignVector<f64>,
    pub status: RunStatus,
    pub objective_kind: Objective,
    /// Final evaluation, absent only when the analysis failed everywhere.
    pub evaluation: Option<Evaluation>,
    pub max_violation: f64,
    pub spar_material: Option<String>,
    pub skin_material: Option<String>,
    pub history: Vec<HistoryRecord>,
    /// Iterations spent in each phase.
    pub phase_iterations: Vec<usize>,
}

impl RunResult {
    pub fn objective(&self) -> Option<f64> {
        self.evaluation.as_ref().map(|e| e.objective)
    }

    pub fn design(&self) -> Option<&DesignVector<f64>> {
        self.evaluation.as_ref().map(|e| &e.design)
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self.status, RunStatus::Converged | RunStatus::MaxIter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::DesignBounds;

    pub(crate) fn problem(objective: Objective, material: MaterialChoice) -> Problem {
        Problem::new(
            MaterialCatalogue::reference(),
            AnalysisConfig::reference(),
            EcoConfig::reference(),
            DesignBounds::default(),
            objective,
            material,
        )
        .unwrap()
    }

    #[test]
    fn density_bounds_follow_catalogue() {
        let p = problem(Objective::Co2, MaterialChoice::Free);
        assert_eq!(p.bounds.lower.spar_density, 504.5);
        assert_eq!(p.bounds.upper.skin_density, 7750.0);
        let start = p.prepare_start(&DesignVector::validation_case(500.0));
        assert_eq!(start.spar_density, 504.5);
    }

    #[test]
    fn constructed_skin_violation_is_reported() {
        let p = problem(Objective::Mass, MaterialChoice::Free);
        let mut d = DesignVector::validation_case(504.5);
        d.t_skin_cp = [0.1; 4];
        d.tc_cp = [0.4; 4];
        d.root_chord = 3.0;
        d.tc_cp[0] = 0.05;
        // Tip section walls overlap, which the analysis rejects outright;
        // the control-station constraint flags the same geometry.
        assert!(analyze::<f64>(&p, &d, InterpolationMode::Linear).is_err());
        d.t_skin_cp = [0.004, 0.002, 0.002, 0.002];
        d.tc_cp = [0.012, 0.2, 0.2, 0.2];
        d.taper = 0.3;
        d.root_chord = 1.4;
        let a = analyze::<f64>(&p, &d, InterpolationMode::Linear);
        if let Ok(a) = a {
            assert!(a.constraints.skin_thickness[0] > 0.0);
        }
    }

    fn assert_gradients_match(d: &DesignVector<f64>) {
        let p = problem(Objective::Co2, MaterialChoice::Free);
        let vars: Vec<usize> = (0..NUM_VARIABLES).collect();
        let mode = InterpolationMode::Penalized { p: 5.0 };
        let a = exact_sensitivities(&p, d, mode, &vars, 1e-3).unwrap();
        let f = finite_difference_sensitivities(&p, d, mode, &vars, 1e-3, 1e-6).unwrap();
        let scales = reference_scales();
        let rel = |x: &[f64], y: &[f64]| {
            let s: Vec<(f64, f64)> = x.iter().zip(y).zip(&vars).map(|((a, b), &k)| (a * scales[k], b * scales[k])).collect();
            let diff = s.iter().map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let norm = s.iter().map(|(_, b)| b.abs()).fold(0.0, f64::max);
            diff / norm.max(1e-12)
        };
        assert!(rel(&a.d_objective, &f.d_objective) < 1e-5);
        for (ga, gf) in a.d_inequalities.iter().zip(&f.d_inequalities) {
            assert!(rel(ga, gf) < 1e-4, "{ga:?}\n{gf:?}");
        }
    }

    #[test]
    fn exact_gradient_matches_differences() {
        let mut d = DesignVector::validation_case(530.0);
        d.skin_density = 1000.0;
        assert_gradients_match(&d);
    }

    #[test]
    fn gradient_with_motor_at_the_tip() {
        let mut d = DesignVector::validation_case(530.0);
        d.motor_location = 1.0;
        assert_gradients_match(&d);
    }
}
