//! Run configuration: TOML with unit-suffixed keys, defaults filled at load.

use std::path::{Path, PathBuf};

use ecomdo_core::aero::{AeroConfig, FlowConditions};
use ecomdo_core::design::{DesignBounds, DesignVector};
use ecomdo_core::eco::EcoConfig;
use ecomdo_core::energy::{AnalysisConfig, EnergyConfig, MdaSettings};
use ecomdo_core::materials::MaterialCatalogue;
use ecomdo_core::optimizer::{MaterialChoice, MultiStartPlan, Objective, OptimizerSettings, Problem, StartRange};
use ecomdo_core::structures::StructuralConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.to_string(),
    }
}

/// Fully resolved configuration of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub objective: Objective,
    #[serde(default)]
    pub catalogue: CatalogueSection,
    pub flight: FlightSection,
    pub energy: EnergyConfig,
    pub eco: EcoConfig,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub bounds: BoundsSection,
    #[serde(default)]
    pub material: MaterialSection,
    #[serde(default)]
    pub optimizer: OptimizerSettings,
    #[serde(default)]
    pub start: StartSection,
    #[serde(default)]
    pub multistart: MultiStartSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub validation: ValidationSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogueSection {
    /// CSV file; the built-in seven-material catalogue when absent.
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlightSection {
    pub speed_m_s: f64,
    pub air_density_kg_m3: f64,
    #[serde(default = "default_viscosity")]
    pub viscosity_pa_s: f64,
    /// Vertical speed of the sizing shear gust.
    pub gust_speed_m_s: f64,
}

fn default_viscosity() -> f64 {
    1.42e-5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default)]
    pub aero: AeroConfig,
    #[serde(default)]
    pub structure: StructuralConfig,
    #[serde(default)]
    pub mda: MdaSettings,
    #[serde(default = "default_elements")]
    pub span_elements: usize,
}

fn default_elements() -> usize {
    ecomdo_core::geometry::DEFAULT_SPAN_ELEMENTS
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            aero: AeroConfig::default(),
            structure: StructuralConfig::default(),
            mda: MdaSettings::default(),
            span_elements: default_elements(),
        }
    }
}

/// `[lower, upper]` per design variable group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsSection {
    pub density_kg_m3: [f64; 2],
    pub twist_deg: [f64; 2],
    pub t_skin_m: [f64; 2],
    pub t_spar_m: [f64; 2],
    pub tc: [f64; 2],
    pub span_m: [f64; 2],
    pub root_chord_m: [f64; 2],
    pub taper: [f64; 2],
    pub motor_location: [f64; 2],
}

impl Default for BoundsSection {
    fn default() -> Self {
        let b = DesignBounds::default();
        let (l, u) = (&b.lower, &b.upper);
        Self {
            density_kg_m3: [l.spar_density, u.spar_density],
            twist_deg: [l.twist_cp[0], u.twist_cp[0]],
            t_skin_m: [l.t_skin_cp[0], u.t_skin_cp[0]],
            t_spar_m: [l.t_spar_cp[0], u.t_spar_cp[0]],
            tc: [l.tc_cp[0], u.tc_cp[0]],
            span_m: [l.span, u.span],
            root_chord_m: [l.root_chord, u.root_chord],
            taper: [l.taper, u.taper],
            motor_location: [l.motor_location, u.motor_location],
        }
    }
}

impl BoundsSection {
    pub fn to_bounds(&self) -> Result<DesignBounds, ConfigError> {
        let side = |k: usize| DesignVector {
            spar_density: self.density_kg_m3[k],
            skin_density: self.density_kg_m3[k],
            twist_cp: [self.twist_deg[k]; 4],
            t_skin_cp: [self.t_skin_m[k]; 4],
            t_spar_cp: [self.t_spar_m[k]; 4],
            tc_cp: [self.tc[k]; 4],
            span: self.span_m[k],
            root_chord: self.root_chord_m[k],
            taper: self.taper[k],
            motor_location: self.motor_location[k],
        };
        let b = DesignBounds {
            lower: side(0),
            upper: side(1),
        };
        b.validate().map_err(|e| invalid("bounds", e))?;
        Ok(b)
    }
}

/// Catalogue names for the spar and skin; both set freezes the material.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSection {
    pub spar: Option<String>,
    pub skin: Option<String>,
}

/// Start design of `optimize`; the first multi-start design when absent.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartSection {
    pub design: Option<DesignVector<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultiStartSection {
    /// `[spar, skin]`.
    pub density_kg_m3: StartRange,
    pub twist_deg: StartRange,
    pub t_skin_m: StartRange,
    pub t_spar_m: StartRange,
    pub tc: StartRange,
    pub span_m: StartRange,
    pub root_chord_m: StartRange,
    pub taper: StartRange,
    pub motor_location: StartRange,
    /// Run a seeded random subset of this many starts.
    pub sample: Option<usize>,
}

impl Default for MultiStartSection {
    fn default() -> Self {
        Self::from_plan(MultiStartPlan::default())
    }
}

impl MultiStartSection {
    fn from_plan(p: MultiStartPlan) -> Self {
        Self {
            density_kg_m3: p.density,
            twist_deg: p.twist,
            t_skin_m: p.t_skin,
            t_spar_m: p.t_spar,
            tc: p.tc,
            span_m: p.span,
            root_chord_m: p.root_chord,
            taper: p.taper,
            motor_location: p.motor_location,
            sample: None,
        }
    }

    pub fn plan(&self) -> MultiStartPlan {
        MultiStartPlan {
            density: self.density_kg_m3.clone(),
            twist: self.twist_deg.clone(),
            t_skin: self.t_skin_m.clone(),
            t_spar: self.t_spar_m.clone(),
            tc: self.tc.clone(),
            span: self.span_m.clone(),
            root_chord: self.root_chord_m.clone(),
            taper: self.taper.clone(),
            motor_location: self.motor_location.clone(),
        }
    }
}

/// CO2 of `high` is set to `ratio` times that of `low` at each ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub low: String,
    pub high: String,
    pub ratios: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            low: "Material 1".into(),
            high: "Material 3".into(),
            ratios: (0..=10).map(|k| 0.5 + 0.05 * k as f64).collect(),
        }
    }
}

/// Mass minimization with the material frozen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidationSection {
    pub material: String,
    /// Start design; the FBHALE benchmark optimum when absent.
    pub start: Option<DesignVector<f64>>,
}

impl Default for ValidationSection {
    fn default() -> Self {
        Self {
            material: "Material 1".into(),
            start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

impl RunConfig {
    /// Parse TOML text. Relative catalogue paths resolve against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let mut cfg: RunConfig = toml::from_str(text)?;
        if let Some(p) = &cfg.catalogue.path {
            if p.is_relative() {
                cfg.catalogue.path = Some(base.join(p));
            }
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes")
    }

    /// SHA-256 of the resolved configuration, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn check(&self) -> Result<(), ConfigError> {
        self.analysis_config().validate().map_err(|e| invalid("flight/energy/analysis", e))?;
        self.eco.validate().map_err(|e| invalid("eco", e))?;
        self.optimizer.validate().map_err(|e| invalid("optimizer", e))?;
        self.bounds.to_bounds()?;
        let cat = self.catalogue()?;
        self.material_choice(&cat)?;
        for name in [&self.sweep.low, &self.sweep.high, &self.validation.material] {
            if cat.get(name).is_none() {
                return Err(invalid("sweep/validation", format!("material '{name}' not in catalogue")));
            }
        }
        if self.sweep.ratios.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
            return Err(invalid("sweep.ratios", "ratios must lie in (0, 1]"));
        }
        self.multistart
            .plan()
            .enumerate()
            .map_err(|e| invalid("multistart", e))?;
        if self.multistart.sample == Some(0) {
            return Err(invalid("multistart.sample", "must be at least 1"));
        }
        Ok(())
    }

    pub fn catalogue(&self) -> Result<MaterialCatalogue, ConfigError> {
        match &self.catalogue.path {
            None => Ok(MaterialCatalogue::reference()),
            Some(p) => MaterialCatalogue::from_path(p).map_err(|e| invalid("catalogue.path", format!("{}: {e}", p.display()))),
        }
    }

    pub fn analysis_config(&self) -> AnalysisConfig {
        AnalysisConfig {
            flight: FlowConditions {
                speed: self.flight.speed_m_s,
                air_density: self.flight.air_density_kg_m3,
                viscosity: self.flight.viscosity_pa_s,
            },
            gust_speed: self.flight.gust_speed_m_s,
            aero: self.analysis.aero,
            structure: self.analysis.structure,
            energy: self.energy.clone(),
            mda: self.analysis.mda,
            num_span_elements: self.analysis.span_elements,
        }
    }

    pub fn material_choice(&self, cat: &MaterialCatalogue) -> Result<MaterialChoice, ConfigError> {
        let density = |name: &String| {
            cat.get(name)
                .map(|r| r.density)
                .ok_or_else(|| invalid("material", format!("'{name}' not in catalogue")))
        };
        match (&self.material.spar, &self.material.skin) {
            (None, None) => Ok(MaterialChoice::Free),
            (Some(a), Some(b)) => Ok(MaterialChoice::Frozen {
                spar_density: density(a)?,
                skin_density: density(b)?,
            }),
            _ => Err(invalid("material", "set both `spar` and `skin` or neither")),
        }
    }

    /// Problem with the given objective and material handling.
    pub fn problem(&self, objective: Objective, material: MaterialChoice) -> Result<Problem, ConfigError> {
        Problem::new(
            self.catalogue()?,
            self.analysis_config(),
            self.eco,
            self.bounds.to_bounds()?,
            objective,
            material,
        )
        .map_err(|e| invalid("problem", e))
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    RunConfig::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
}
