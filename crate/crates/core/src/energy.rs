//! Power balance, mass build-up and the coupled multidisciplinary analysis.
//!
//! The aircraft flies level at cruise, so the propulsive power follows from
//! the weight and the cruise lift-to-drag ratio. Batteries carry the night,
//! solar cells are sized by the power they must deliver, and every mass term
//! scales with power, which scales with weight: the snowball loop is closed
//! by a relaxed Gauss–Seidel iteration that also feeds the structural twist
//! back into the aerodynamics.

use serde::{Deserialize, Serialize};

use crate::aero::{panel_loads, AeroConfig, AeroSolution, FlowConditions, VortexLattice};
use crate::design::DesignVector;
use crate::error::{Error, Result};
use crate::geometry::{build_wing, WingModel};
use crate::materials::{InterpolatedMaterial, InterpolationMode, MaterialCatalogue};
use crate::scalar::Scalar;
use crate::structures::{BeamModel, StructuralConfig, StructuralLayout, StructuralMasses, StructuralResult, GRAVITY};

fn default_pv_power() -> f64 {
    54.0
}
fn default_night() -> f64 {
    13.0
}
fn default_motors() -> usize {
    2
}
fn default_extra() -> f64 {
    0.10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyConfig {
    pub propulsive_efficiency: f64,
    pub payload_power_w: f64,
    #[serde(default = "default_pv_power")]
    pub pv_power_density_w_m2: f64,
    #[serde(default = "default_night")]
    pub night_duration_h: f64,
    pub battery_energy_density_kwh_kg: f64,
    pub propulsion_mass_kg_w: f64,
    #[serde(default = "default_motors")]
    pub motors: usize,
    pub pv_areal_density_kg_m2: f64,
    pub mppt_mass_kg_w: f64,
    pub fixed_mass_kg: f64,
    #[serde(default = "default_extra")]
    pub extra_mass_factor: f64,
}

impl EnergyConfig {
    /// Placeholder technology levels used by the shipped example
    /// configuration and the test suite.
    pub fn reference() -> Self {
        Self {
            propulsive_efficiency: 0.75,
            payload_power_w: 500.0,
            pv_power_density_w_m2: default_pv_power(),
            night_duration_h: default_night(),
            battery_energy_density_kwh_kg: 0.35,
            propulsion_mass_kg_w: 0.0128,
            motors: default_motors(),
            pv_areal_density_kg_m2: 0.6,
            mppt_mass_kg_w: 0.0004,
            fixed_mass_kg: 20.5,
            extra_mass_factor: default_extra(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("propulsive_efficiency", self.propulsive_efficiency),
            ("pv_power_density_w_m2", self.pv_power_density_w_m2),
            ("night_duration_h", self.night_duration_h),
            ("battery_energy_density_kwh_kg", self.battery_energy_density_kwh_kg),
            ("propulsion_mass_kg_w", self.propulsion_mass_kg_w),
            ("pv_areal_density_kg_m2", self.pv_areal_density_kg_m2),
            ("mppt_mass_kg_w", self.mppt_mass_kg_w),
            ("fixed_mass_kg", self.fixed_mass_kg),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        if self.propulsive_efficiency > 1.0 {
            return Err(Error::InvalidInput("propulsive_efficiency must lie in (0, 1]".into()));
        }
        if !(self.payload_power_w >= 0.0) {
            return Err(Error::InvalidInput("payload_power_w must be non-negative".into()));
        }
        if self.motors == 0 {
            return Err(Error::InvalidInput("need at least one motor".into()));
        }
        if !(0.0..=0.5).contains(&self.extra_mass_factor) {
            return Err(Error::InvalidInput("extra_mass_factor must lie in [0, 0.5]".into()));
        }
        Ok(())
    }
}

/// Propulsive power (`W·v·C_D/C_L`) and total electrical demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerBudget<T> {
    pub propulsive: T,
    pub needed: T,
}

pub fn power_needed<T: Scalar>(weight_n: T, speed: f64, cd: T, cl: T, cfg: &EnergyConfig) -> Result<PowerBudget<T>> {
    if !(cl.value() > 0.0) {
        return Err(Error::Analysis(format!(
            "cruise lift coefficient {} is not positive",
            cl.value()
        )));
    }
    let propulsive = weight_n * T::lit(speed) * cd / cl;
    Ok(PowerBudget {
        propulsive,
        needed: propulsive / T::lit(cfg.propulsive_efficiency) + T::lit(cfg.payload_power_w),
    })
}

/// Solar-cell area needed to deliver `p_needed`, m².
pub fn pv_surface_required<T: Scalar>(p_needed: T, pv_power_density_w_m2: f64) -> T {
    p_needed / T::lit(pv_power_density_w_m2)
}

/// Battery mass for the night, kg.
pub fn battery_mass<T: Scalar>(p_needed: T, cfg: &EnergyConfig) -> T {
    let wh = p_needed * T::lit(cfg.night_duration_h);
    wh / T::lit(1000.0 * cfg.battery_energy_density_kwh_kg)
}

/// Total propulsion mass and the mass of one motor, kg.
pub fn propulsion_mass<T: Scalar>(p_prop: T, cfg: &EnergyConfig) -> (T, T) {
    let total = p_prop * T::lit(cfg.propulsion_mass_kg_w);
    (total, total / T::lit(cfg.motors as f64))
}

pub fn mppt_mass<T: Scalar>(p_needed: T, cfg: &EnergyConfig) -> T {
    p_needed * T::lit(cfg.mppt_mass_kg_w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassBreakdown<T> {
    pub wing: T,
    pub batteries: T,
    pub solar_panels: T,
    pub propulsion: T,
    pub mppt: T,
    pub fixed: T,
    pub extra: T,
    pub total: T,
}

impl<T: Scalar> MassBreakdown<T> {
    pub fn subtotal(&self) -> T {
        self.wing + self.batteries + self.solar_panels + self.propulsion + self.mppt + self.fixed
    }

    pub fn to_f64(&self) -> MassBreakdown<f64> {
        MassBreakdown {
            wing: self.wing.value(),
            batteries: self.batteries.value(),
            solar_panels: self.solar_panels.value(),
            propulsion: self.propulsion.value(),
            mppt: self.mppt.value(),
            fixed: self.fixed.value(),
            extra: self.extra.value(),
            total: self.total.value(),
        }
    }
}

/// All masses implied by the wing mass and a power budget.
pub fn mass_buildup<T: Scalar>(wing_mass: T, power: &PowerBudget<T>, cfg: &EnergyConfig) -> Result<MassBreakdown<T>> {
    let area = pv_surface_required(power.needed, cfg.pv_power_density_w_m2);
    let mut m = MassBreakdown {
        wing: wing_mass,
        batteries: battery_mass(power.needed, cfg),
        solar_panels: area * T::lit(cfg.pv_areal_density_kg_m2),
        propulsion: propulsion_mass(power.propulsive, cfg).0,
        mppt: mppt_mass(power.needed, cfg),
        fixed: T::lit(cfg.fixed_mass_kg),
        extra: T::zero(),
        total: T::zero(),
    };
    let parts = [
        ("wing", m.wing),
        ("batteries", m.batteries),
        ("solar panels", m.solar_panels),
        ("propulsion", m.propulsion),
        ("mppt", m.mppt),
    ];
    for (name, v) in parts {
        if v.value() < 0.0 {
            return Err(Error::NegativeMass(name));
        }
    }
    let sub = m.subtotal();
    m.extra = sub * T::lit(cfg.extra_mass_factor);
    m.total = sub + m.extra;
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MdaSettings {
    /// Relative tolerance on total mass and absolute tolerance (rad) on the
    /// elastic twist.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Initial relaxation factor.
    pub relaxation: f64,
    /// Adapt the relaxation factor with Aitken's delta-squared rule.
    pub aitken: bool,
}

impl Default for MdaSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_iterations: 200,
            relaxation: 0.7,
            aitken: true,
        }
    }
}

impl MdaSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.relaxation > 0.0 && self.relaxation <= 1.0 && self.max_iterations > 0) {
            return Err(Error::InvalidInput(
                "MDA tolerance and iteration count must be positive, relaxation in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Relaxed fixed-point update for one block of coupling variables. The
/// relaxation factor is built from plain values so derivatives carried by
/// the scalar type follow the same iteration.
#[derive(Debug, Clone)]
struct Relaxer {
    omega: f64,
    aitken: bool,
    prev: Option<Vec<f64>>,
}

impl Relaxer {
    fn new(s: &MdaSettings) -> Self {
        Self {
            omega: s.relaxation,
            aitken: s.aitken,
            prev: None,
        }
    }

    fn step<T: Scalar>(&mut self, x: &mut [T], fx: &[T]) {
        let r: Vec<f64> = x.iter().zip(fx).map(|(a, b)| (*b - *a).value()).collect();
        if let (true, Some(prev)) = (self.aitken, &self.prev) {
            let (mut num, mut den) = (0.0, 0.0);
            for (rk, rp) in r.iter().zip(prev) {
                let d = rk - rp;
                num += rp * d;
                den += d * d;
            }
            if den > 0.0 {
                self.omega = (-self.omega * num / den).clamp(0.05, 50.0);
            }
        }
        let w = T::lit(self.omega);
        for (a, &b) in x.iter_mut().zip(fx) {
            *a += w * (b - *a);
        }
        self.prev = Some(r);
    }
}

/// Mass closure of the energy model alone at a fixed wing mass and cruise
/// polar point. Returns the converged breakdown, the power budget and the
/// number of updates taken.
pub fn energy_closure<T: Scalar>(
    wing_mass: T,
    cl: T,
    cd: T,
    speed: f64,
    cfg: &EnergyConfig,
    settings: &MdaSettings,
) -> Result<(MassBreakdown<T>, PowerBudget<T>, usize)> {
    cfg.validate()?;
    settings.validate()?;
    let mut relax = Relaxer::new(settings);
    let mut m = [(wing_mass + T::lit(cfg.fixed_mass_kg)) * T::lit(1.0 + cfg.extra_mass_factor)];
    let mut residuals = Vec::new();
    for it in 1..=settings.max_iterations {
        let power = power_needed(m[0] * T::lit(GRAVITY), speed, cd, cl, cfg)?;
        let b = mass_buildup(wing_mass, &power, cfg)?;
        let r = ((b.total - m[0]) / m[0]).value().abs();
        residuals.push(r);
        if !r.is_finite() {
            break;
        }
        if r < settings.tolerance {
            return Ok((b, power, it));
        }
        relax.step(&mut m, &[b.total]);
    }
    Err(Error::MdaDiverged {
        iterations: residuals.len(),
        last: residuals.last().copied().unwrap_or(f64::NAN),
        residuals,
    })
}

/// Every model setting the coupled analysis needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub flight: FlowConditions,
    /// Vertical speed of the shear gust wall, m/s.
    pub gust_speed: f64,
    #[serde(default)]
    pub aero: AeroConfig,
    #[serde(default)]
    pub structure: StructuralConfig,
    pub energy: EnergyConfig,
    #[serde(default)]
    pub mda: MdaSettings,
    #[serde(default = "default_elements")]
    pub num_span_elements: usize,
}

fn default_elements() -> usize {
    crate::geometry::DEFAULT_SPAN_ELEMENTS
}

impl AnalysisConfig {
    /// Stratospheric cruise at about 20 km with the reference technology
    /// levels.
    pub fn reference() -> Self {
        Self {
            flight: FlowConditions {
                speed: 27.0,
                air_density: 0.0889,
                viscosity: 1.42e-5,
            },
            gust_speed: 5.0,
            aero: AeroConfig::default(),
            structure: StructuralConfig::default(),
            energy: EnergyConfig::reference(),
            mda: MdaSettings::default(),
            num_span_elements: default_elements(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.flight.validate()?;
        self.aero.validate()?;
        self.structure.validate()?;
        self.energy.validate()?;
        self.mda.validate()?;
        if !(self.gust_speed >= 0.0) {
            return Err(Error::InvalidInput("gust_speed must be non-negative".into()));
        }
        if self.num_span_elements < 2 {
            return Err(Error::InvalidInput("need at least two span elements".into()));
        }
        Ok(())
    }

    /// Incidence increment of the gust design point, rad.
    pub fn gust_incidence(&self) -> f64 {
        (self.gust_speed / self.flight.speed).atan()
    }
}

/// Converged coupled state of one design.
#[derive(Debug, Clone)]
pub struct MdaState<T> {
    pub wing: WingModel<T>,
    pub skin_material: InterpolatedMaterial<T>,
    pub spar_material: InterpolatedMaterial<T>,
    pub mass: MassBreakdown<T>,
    pub structural_masses: StructuralMasses<T>,
    pub power: PowerBudget<T>,
    pub pv_area: T,
    pub cruise: AeroSolution<T>,
    pub gust: AeroSolution<T>,
    pub gust_load_factor: T,
    /// Structural response at the gust design point.
    pub structure: StructuralResult<T>,
    pub cruise_twist: Vec<T>,
    /// Weight used for the last power evaluation, N.
    pub weight: T,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

impl<T: Scalar> MdaState<T> {
    /// Relative change in total mass when the build-up is re-evaluated at the
    /// converged mass with the converged cruise polar point.
    pub fn reevaluation_residual(&self, cfg: &AnalysisConfig) -> Result<f64> {
        let w = self.mass.total * T::lit(GRAVITY);
        let p = power_needed(w, cfg.flight.speed, self.cruise.cd, self.cruise.cl, &cfg.energy)?;
        let b = mass_buildup(self.structural_masses.wing, &p, &cfg.energy)?;
        Ok(((b.total - self.mass.total) / self.mass.total).value().abs())
    }

    /// Cruise lift minus weight, N.
    pub fn lift_excess(&self) -> T {
        self.cruise.lift - self.mass.total * T::lit(GRAVITY)
    }
}

fn add_loads<T: Scalar>(a: &mut [[T; 6]], b: &[[T; 6]]) {
    for (x, y) in a.iter_mut().zip(b) {
        for k in 0..6 {
            x[k] += y[k];
        }
    }
}

/// Coupled aero-structure-energy analysis of one design.
pub fn run_mda<T: Scalar>(
    design: &DesignVector<T>,
    catalogue: &MaterialCatalogue,
    mode: InterpolationMode,
    cfg: &AnalysisConfig,
) -> Result<MdaState<T>> {
    cfg.validate()?;
    let wing = build_wing(&design.planform(cfg.num_span_elements))?;
    let skin = catalogue.material(mode, design.skin_density)?;
    let spar = catalogue.material(mode, design.spar_density)?;
    let layout = StructuralLayout {
        t_skin_cp: design.t_skin_cp.to_vec(),
        t_spar_cp: design.t_spar_cp.to_vec(),
        skin_material: skin,
        spar_material: spar,
    };
    let beam = BeamModel::new(&wing, &layout)?;
    let vlm = VortexLattice::new(&wing, &cfg.aero)?;
    let n_el = wing.num_elements();
    let n_nodes = n_el + 1;
    let energy = &cfg.energy;
    let g = T::lit(GRAVITY);
    let half = T::lit(0.5);

    let alpha0: Vec<T> = wing.twist_deg.iter().map(|t| t.to_radians()).collect();
    let gust_alpha = T::lit(cfg.gust_incidence());
    let areas = wing.element_area();
    let area_sum = areas.iter().fold(T::zero(), |a, &x| a + x);
    let motor_y = design.motor_location * wing.semi_span;
    let wing_mass = beam.masses().wing;

    let mut mass = [(wing_mass + T::lit(energy.fixed_mass_kg)) * T::lit(1.0 + energy.extra_mass_factor)];
    let mut twist_c = vec![T::zero(); n_el];
    let mut twist_g = vec![T::zero(); n_el];
    let mut relax_mass = Relaxer::new(&cfg.mda);
    let mut relax_c = Relaxer::new(&cfg.mda);
    let mut relax_g = Relaxer::new(&cfg.mda);
    let mut residuals = Vec::new();

    for it in 1..=cfg.mda.max_iterations {
        let alpha_c: Vec<T> = alpha0.iter().zip(&twist_c).map(|(&a, &t)| a + t).collect();
        let cruise = vlm.solve(&alpha_c, &cfg.flight, &cfg.aero)?;
        let weight = mass[0] * g;
        let power = power_needed(weight, cfg.flight.speed, cruise.cd, cruise.cl, energy)?;
        let budget = mass_buildup(wing_mass, &power, energy)?;

        let alpha_g: Vec<T> = alpha0
            .iter()
            .zip(&twist_g)
            .map(|(&a, &t)| a + t + gust_alpha)
            .collect();
        let gust = vlm.solve(&alpha_g, &cfg.flight, &cfg.aero)?;
        let n_gust = gust.lift / weight;

        let spread = (budget.batteries + budget.solar_panels) * half / area_sum;
        let distributed: Vec<T> = areas.iter().map(|&a| a * spread).collect();
        let motors = [(motor_y, budget.propulsion * half)];

        let mut loads_c = panel_loads(&cruise, T::one(), n_nodes)?;
        add_loads(&mut loads_c, &beam.inertial_loads(&motors, &distributed, T::one())?);
        let sc = beam.analyze(&loads_c, &cfg.structure)?;
        let mut loads_g = panel_loads(&gust, T::one(), n_nodes)?;
        add_loads(&mut loads_g, &beam.inertial_loads(&motors, &distributed, n_gust)?);
        let sg = beam.analyze(&loads_g, &cfg.structure)?;

        let mass_res = ((budget.total - mass[0]) / mass[0]).value().abs();
        let twist_res = sc
            .twist
            .iter()
            .zip(&twist_c)
            .chain(sg.twist.iter().zip(&twist_g))
            .map(|(a, b)| (*a - *b).value().abs())
            .fold(0.0, f64::max);
        let res = mass_res.max(twist_res);
        residuals.push(res);
        log::trace!("mda iteration {it}: mass {:.6} kg, residual {res:.3e}", mass[0].value());
        if !res.is_finite() {
            break;
        }
        if res < cfg.mda.tolerance {
            return Ok(MdaState {
                pv_area: pv_surface_required(power.needed, energy.pv_power_density_w_m2),
                wing,
                skin_material: skin,
                spar_material: spar,
                mass: budget,
                structural_masses: beam.masses(),
                power,
                cruise,
                gust,
                gust_load_factor: n_gust,
                structure: sg,
                cruise_twist: sc.twist,
                weight,
                residuals,
                iterations: it,
            });
        }
        relax_mass.step(&mut mass, &[budget.total]);
        relax_c.step(&mut twist_c, &sc.twist);
        relax_g.step(&mut twist_g, &sg.twist);
        if mass[0].value() <= 0.0 {
            break;
        }
    }
    Err(Error::MdaDiverged {
        iterations: residuals.len(),
        last: residuals.last().copied().unwrap_or(f64::NAN),
        residuals,
    })
}
