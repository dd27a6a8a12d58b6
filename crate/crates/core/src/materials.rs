//! Material catalogue and the continuous density-indexed material model.
//!
//! Materials are addressed through their density. Between two catalogue
//! entries every property is interpolated, either linearly or with a power
//! law that makes in-between ("fake") materials unattractive so a gradient
//! optimizer settles on a real entry.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default exponent of the penalized interpolation.
pub const DEFAULT_PENALTY_EXPONENT: f64 = 5.0;

/// One row of the material catalogue. SI units throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialRecord {
    pub name: String,
    /// kg/m³
    pub density: f64,
    /// kgCO2 per kg from primary production.
    pub co2_primary: f64,
    /// kgCO2 per kg from recycled supply.
    pub co2_recycled: f64,
    /// Recycled fraction of current supply, in [0, 1].
    pub recycled_fraction: f64,
    /// Pa
    pub youngs_modulus: f64,
    /// Pa
    pub shear_modulus: f64,
    /// Pa
    pub failure_strength: f64,
}

impl MaterialRecord {
    /// Record with no recycled supply, so `co2_per_kg` is `co2` itself.
    pub fn virgin(name: &str, density: f64, co2: f64, e: f64, g: f64, sigma_f: f64) -> Self {
        Self {
            name: name.to_string(),
            density,
            co2_primary: co2,
            co2_recycled: co2,
            recycled_fraction: 0.0,
            youngs_modulus: e,
            shear_modulus: g,
            failure_strength: sigma_f,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Error::InvalidMaterial {
            name: self.name.clone(),
            reason,
        };
        let positive = [
            ("density", self.density),
            ("youngs_modulus", self.youngs_modulus),
            ("shear_modulus", self.shear_modulus),
            ("failure_strength", self.failure_strength),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(bad(format!("{field} must be positive, got {v}")));
            }
        }
        for (field, v) in [("co2_primary", self.co2_primary), ("co2_recycled", self.co2_recycled)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(bad(format!("{field} must be non-negative, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.recycled_fraction) {
            return Err(bad(format!(
                "recycled_fraction must lie in [0, 1], got {}",
                self.recycled_fraction
            )));
        }
        let nu = self.youngs_modulus / (2.0 * self.shear_modulus) - 1.0;
        if !(0.0..=0.5).contains(&nu) {
            return Err(bad(format!("derived Poisson ratio {nu:.3} outside [0, 0.5]")));
        }
        Ok(())
    }

    /// Blended footprint of current supply, kgCO2/kg.
    pub fn co2_per_kg(&self) -> f64 {
        co2_per_kg(self)
    }

    pub fn property(&self, property: Property) -> f64 {
        match property {
            Property::YoungsModulus => self.youngs_modulus,
            Property::ShearModulus => self.shear_modulus,
            Property::FailureStrength => self.failure_strength,
            Property::Co2PerKg => self.co2_per_kg(),
        }
    }
}

/// `η_r·CO2_r + (1 − η_r)·CO2_p`.
pub fn co2_per_kg(rec: &MaterialRecord) -> f64 {
    rec.recycled_fraction * rec.co2_recycled + (1.0 - rec.recycled_fraction) * rec.co2_primary
}

/// Interpolated property selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    YoungsModulus,
    ShearModulus,
    FailureStrength,
    Co2PerKg,
}

impl Property {
    pub const ALL: [Property; 4] = [
        Property::YoungsModulus,
        Property::ShearModulus,
        Property::FailureStrength,
        Property::Co2PerKg,
    ];

    /// Stiffness and strength are better high, footprint is better low.
    pub fn natural_direction(self) -> Direction {
        match self {
            Property::Co2PerKg => Direction::LowerIsBetter,
            _ => Direction::HigherIsBetter,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HigherIsBetter,
    LowerIsBetter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum InterpolationMode {
    Linear,
    Penalized { p: f64 },
}

impl Default for InterpolationMode {
    fn default() -> Self {
        InterpolationMode::Penalized {
            p: DEFAULT_PENALTY_EXPONENT,
        }
    }
}

impl InterpolationMode {
    pub fn validate(&self) -> Result<()> {
        match *self {
            InterpolationMode::Penalized { p } if !(p >= 1.0 && p.is_finite()) => Err(
                Error::InvalidInput(format!("penalty exponent must be >= 1, got {p}")),
            ),
            _ => Ok(()),
        }
    }
}

/// Ordered set of real materials, strictly ascending in density.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialCatalogue {
    records: Vec<MaterialRecord>,
}

impl MaterialCatalogue {
    pub fn new(records: Vec<MaterialRecord>) -> Result<Self> {
        if records.len() < 2 {
            return Err(Error::InvalidCatalogue(format!(
                "need at least 2 materials, got {}",
                records.len()
            )));
        }
        for r in &records {
            r.validate()?;
        }
        for w in records.windows(2) {
            if !(w[1].density > w[0].density) {
                return Err(Error::InvalidCatalogue(format!(
                    "densities must be strictly increasing: '{}' ({}) then '{}' ({})",
                    w[0].name, w[0].density, w[1].name, w[1].density
                )));
            }
        }
        Ok(Self { records })
    }

    /// The seven materials of the reference study: three homogenized
    /// sandwich panels (CFRP skins on PS foam, balsa and cork cores), CFRP,
    /// GFRP, aluminium and steel.
    pub fn reference() -> Self {
        let gpa = 1e9;
        let mpa = 1e6;
        Self::new(vec![
            MaterialRecord::virgin("Material 1", 504.5, 44.9, 42.5 * gpa, 16.3 * gpa, 587.0 * mpa),
            MaterialRecord::virgin("Material 2", 529.0, 42.8, 42.5 * gpa, 16.3 * gpa, 237.0 * mpa),
            MaterialRecord::virgin("Material 3", 560.5, 40.3, 42.5 * gpa, 16.3 * gpa, 587.0 * mpa),
            MaterialRecord::virgin("CFRP", 1565.0, 48.1, 54.9 * gpa, 21.0 * gpa, 670.0 * mpa),
            MaterialRecord::virgin("GFRP", 1860.0, 6.18, 21.4 * gpa, 8.14 * gpa, 255.0 * mpa),
            MaterialRecord::virgin("Aluminum", 2800.0, 8.66, 72.5 * gpa, 27.0 * gpa, 445.0 * mpa),
            MaterialRecord::virgin("Steel", 7750.0, 3.28, 200.0 * gpa, 78.5 * gpa, 562.0 * mpa),
        ])
        .expect("reference catalogue is valid")
    }

    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let expected = [
            "name",
            "density",
            "co2_primary",
            "co2_recycled",
            "recycled_fraction",
            "youngs_modulus",
            "shear_modulus",
            "failure_strength",
        ];
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::InvalidCatalogue(format!(
                "header must be `{}`, got `{}`",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let records = rdr
            .deserialize::<MaterialRecord>()
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::new(records)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref()).map_err(|e| {
            Error::InvalidCatalogue(format!("cannot open {}: {e}", path.as_ref().display()))
        })?;
        Self::from_csv(file)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()
            .map_err(|e| Error::InvalidCatalogue(format!("write failed: {e}")))?;
        Ok(())
    }

    pub fn records(&self) -> &[MaterialRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&MaterialRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn density_range(&self) -> (f64, f64) {
        (self.records[0].density, self.records[self.records.len() - 1].density)
    }

    /// Index and record of the catalogue entry closest in density.
    pub fn nearest(&self, density: f64) -> (usize, &MaterialRecord) {
        let idx = self
            .records
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1.density - density)
                    .abs()
                    .total_cmp(&(b.1.density - density).abs())
            })
            .map(|(i, _)| i)
            .expect("catalogue is non-empty");
        (idx, &self.records[idx])
    }

    /// Bracket index `i` with `ρ_i ≤ ρ ≤ ρ_{i+1}`. A density sitting exactly
    /// on an inner catalogue entry resolves to the bracket on its right.
    fn bracket(&self, density: f64) -> Result<usize> {
        let (min, max) = self.density_range();
        if !(density >= min && density <= max) {
            return Err(Error::DensityOutOfRange { density, min, max });
        }
        let n = self.records.len();
        let i = self.records[1..n - 1]
            .iter()
            .take_while(|r| r.density <= density)
            .count();
        Ok(i)
    }

    /// Continuous material model evaluated at `density`.
    pub fn material<T: Scalar>(
        &self,
        mode: InterpolationMode,
        density: T,
    ) -> Result<InterpolatedMaterial<T>> {
        let at = |p: Property| interpolate(self, mode, density, p, p.natural_direction());
        Ok(InterpolatedMaterial {
            density,
            youngs_modulus: at(Property::YoungsModulus)?,
            shear_modulus: at(Property::ShearModulus)?,
            failure_strength: at(Property::FailureStrength)?,
            co2_per_kg: at(Property::Co2PerKg)?,
        })
    }
}

/// Material properties at a (possibly non-catalogue) density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterpolatedMaterial<T> {
    pub density: T,
    pub youngs_modulus: T,
    pub shear_modulus: T,
    pub failure_strength: T,
    pub co2_per_kg: T,
}

impl<T: Scalar> InterpolatedMaterial<T> {
    pub fn from_record(rec: &MaterialRecord) -> Self {
        Self {
            density: T::lit(rec.density),
            youngs_modulus: T::lit(rec.youngs_modulus),
            shear_modulus: T::lit(rec.shear_modulus),
            failure_strength: T::lit(rec.failure_strength),
            co2_per_kg: T::lit(rec.co2_per_kg()),
        }
    }

    /// `E/(2G) − 1`, clamped to [0, 0.5].
    pub fn poisson_ratio(&self) -> T {
        let nu = self.youngs_modulus / (T::lit(2.0) * self.shear_modulus) - T::one();
        nu.max(T::zero()).min(T::lit(0.5))
    }

    pub fn to_f64(&self) -> InterpolatedMaterial<f64> {
        InterpolatedMaterial {
            density: self.density.value(),
            youngs_modulus: self.youngs_modulus.value(),
            shear_modulus: self.shear_modulus.value(),
            failure_strength: self.failure_strength.value(),
            co2_per_kg: self.co2_per_kg.value(),
        }
    }
}

/// Whether the heavier end of a bracket carries the better property value.
/// Only those brackets are penalized; elsewhere the lighter material already
/// dominates and linear interpolation cannot create an attractive fake.
fn heavier_is_better(lo: f64, hi: f64, direction: Direction) -> bool {
    match direction {
        Direction::HigherIsBetter => hi > lo,
        Direction::LowerIsBetter => hi < lo,
    }
}

/// Property value at `density`.
///
/// Penalized brackets use `A·ρ^p + B` through the endpoints. The same power
/// law works for both directions: the normalized weight `s(ρ)` always lags
/// the linear one, so interior points stay close to the lighter endpoint's
/// value, which is the worse one in a penalized bracket (below linear when
/// higher is better, above linear when lower is better).
pub fn interpolate<T: Scalar>(
    cat: &MaterialCatalogue,
    mode: InterpolationMode,
    density: T,
    property: Property,
    direction: Direction,
) -> Result<T> {
    mode.validate()?;
    let i = cat.bracket(density.value())?;
    let (lo, hi) = (&cat.records[i], &cat.records[i + 1]);
    let (p_lo, p_hi) = (lo.property(property), hi.property(property));
    let s = bracket_weight(mode, lo.density, hi.density, density, p_lo, p_hi, direction);
    Ok(T::lit(p_lo) * (T::one() - s) + T::lit(p_hi) * s)
}

fn bracket_weight<T: Scalar>(
    mode: InterpolationMode,
    rho_lo: f64,
    rho_hi: f64,
    density: T,
    p_lo: f64,
    p_hi: f64,
    direction: Direction,
) -> T {
    match mode {
        InterpolationMode::Penalized { p } if heavier_is_better(p_lo, p_hi, direction) => {
            // (ρ^p − ρ_i^p)/(ρ_{i+1}^p − ρ_i^p), normalized by ρ_{i+1} to keep
            // the powers O(1).
            let r_lo = (rho_lo / rho_hi).powf(p);
            let r = (density / T::lit(rho_hi)).powf(T::lit(p));
            (r - T::lit(r_lo)) / T::lit(1.0 - r_lo)
        }
        _ => (density - T::lit(rho_lo)) / T::lit(rho_hi - rho_lo),
    }
}

/// Analytic `d(property)/dρ` of the interpolant.
///
/// At an inner catalogue density the right-hand bracket's derivative is
/// returned; at the heaviest entry the last bracket is the only one.
pub fn material_gradient(
    cat: &MaterialCatalogue,
    mode: InterpolationMode,
    density: f64,
    property: Property,
    direction: Direction,
) -> Result<f64> {
    mode.validate()?;
    let i = cat.bracket(density)?;
    let (lo, hi) = (&cat.records[i], &cat.records[i + 1]);
    let (p_lo, p_hi) = (lo.property(property), hi.property(property));
    Ok(match mode {
        InterpolationMode::Penalized { p } if heavier_is_better(p_lo, p_hi, direction) => {
            let a = (p_hi - p_lo) / (hi.density.powf(p) - lo.density.powf(p));
            a * p * density.powf(p - 1.0)
        }
        _ => (p_hi - p_lo) / (hi.density - lo.density),
    })
}

/// Eco-indices for CO2-minimal plates in compression (both to be maximized).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AshbyIndices {
    /// `E^{1/3}/ρ/CO2_mat`, buckling-limited design.
    pub buckling: f64,
    /// `σ_f/ρ/CO2_mat`, strength-limited design.
    pub strength: f64,
}

pub fn ashby_indices(rec: &MaterialRecord) -> AshbyIndices {
    let co2 = co2_per_kg(rec);
    AshbyIndices {
        buckling: rec.youngs_modulus.cbrt() / rec.density / co2,
        strength: rec.failure_strength / rec.density / co2,
    }
}
