//! The optimizer's design vector and its bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PlanformSpec, CONTROL_POINTS};
use crate::scalar::Scalar;

/// Number of scalar design variables.
pub const NUM_VARIABLES: usize = 22;

/// All sizing variables. Control points run tip first, root last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignVector<T> {
    /// Spar and skin material densities, kg/m³.
    pub spar_density: T,
    pub skin_density: T,
    /// deg
    pub twist_cp: [T; CONTROL_POINTS],
    /// m
    pub t_skin_cp: [T; CONTROL_POINTS],
    /// m
    pub t_spar_cp: [T; CONTROL_POINTS],
    pub tc_cp: [T; CONTROL_POINTS],
    /// m
    pub span: T,
    /// m
    pub root_chord: T,
    pub taper: T,
    /// Motor position over semi-span.
    pub motor_location: T,
}

/// Names of the flattened variables, in [`DesignVector::to_vec`] order.
pub fn variable_names() -> Vec<String> {
    let mut out = vec!["spar_density".to_string(), "skin_density".to_string()];
    for group in ["twist", "t_skin", "t_spar", "tc"] {
        for k in 0..CONTROL_POINTS {
            out.push(format!("{group}_{k}"));
        }
    }
    out.extend(["span", "root_chord", "taper", "motor_location"].map(String::from));
    out
}

impl<T: Scalar> DesignVector<T> {
    pub fn to_vec(&self) -> Vec<T> {
        let mut v = Vec::with_capacity(NUM_VARIABLES);
        v.push(self.spar_density);
        v.push(self.skin_density);
        v.extend_from_slice(&self.twist_cp);
        v.extend_from_slice(&self.t_skin_cp);
        v.extend_from_slice(&self.t_spar_cp);
        v.extend_from_slice(&self.tc_cp);
        v.extend([self.span, self.root_chord, self.taper, self.motor_location]);
        v
    }

    pub fn from_slice(x: &[T]) -> Result<Self> {
        if x.len() != NUM_VARIABLES {
            return Err(Error::InvalidInput(format!(
                "design vector needs {NUM_VARIABLES} values, got {}",
                x.len()
            )));
        }
        let cp = |o: usize| [x[o], x[o + 1], x[o + 2], x[o + 3]];
        Ok(Self {
            spar_density: x[0],
            skin_density: x[1],
            twist_cp: cp(2),
            t_skin_cp: cp(6),
            t_spar_cp: cp(10),
            tc_cp: cp(14),
            span: x[18],
            root_chord: x[19],
            taper: x[20],
            motor_location: x[21],
        })
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> DesignVector<U> {
        let v: Vec<U> = self.to_vec().into_iter().map(f).collect();
        DesignVector::from_slice(&v).expect("same length")
    }

    pub fn planform(&self, num_span_elements: usize) -> PlanformSpec<T> {
        PlanformSpec {
            span: self.span,
            root_chord: self.root_chord,
            taper_ratio: self.taper,
            twist_cp: self.twist_cp.to_vec(),
            tc_cp: self.tc_cp.to_vec(),
            num_span_elements,
        }
    }
}

impl DesignVector<f64> {
    /// Published optimum of the FBHALE mass-minimization benchmark.
    pub fn validation_case(material_density: f64) -> Self {
        Self {
            spar_density: material_density,
            skin_density: material_density,
            twist_cp: [6.0, 12.0, 14.0, 15.0],
            t_skin_cp: [0.0018, 0.0017, 0.0024, 0.0035],
            t_spar_cp: [0.0028, 0.0011, 0.0010, 0.0010],
            tc_cp: [0.10, 0.22, 0.23, 0.24],
            span: 53.5,
            root_chord: 1.4,
            taper: 0.3,
            motor_location: 0.33,
        }
    }
}

/// Box bounds on the design vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignBounds {
    pub lower: DesignVector<f64>,
    pub upper: DesignVector<f64>,
}

impl Default for DesignBounds {
    fn default() -> Self {
        let fill = |d: f64, tw: f64, t: f64, tc: f64, span: f64, chord: f64, taper: f64, motor: f64| {
            DesignVector {
                spar_density: d,
                skin_density: d,
                twist_cp: [tw; 4],
                t_skin_cp: [t; 4],
                t_spar_cp: [t; 4],
                tc_cp: [tc; 4],
                span,
                root_chord: chord,
                taper,
                motor_location: motor,
            }
        };
        Self {
            lower: fill(400.0, -15.0, 0.001, 0.01, 1.0, 1.4, 0.3, 0.0),
            upper: fill(8000.0, 15.0, 0.1, 0.4, 1000.0, 500.0, 0.99, 1.0),
        }
    }
}

/// Smallest admissible values the configuration may tighten bounds to.
pub const MIN_TAPER: f64 = 0.3;
pub const MIN_ROOT_CHORD: f64 = 1.4;
pub const TWIST_LIMIT: f64 = 15.0;

impl DesignBounds {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = (self.lower.to_vec(), self.upper.to_vec());
        let names = variable_names();
        for ((l, h), name) in lo.iter().zip(&hi).zip(&names) {
            if !(l.is_finite() && h.is_finite() && l <= h) {
                return Err(Error::InvalidInput(format!("bounds on {name}: lower {l} above upper {h}")));
            }
        }
        if self.lower.taper < MIN_TAPER {
            return Err(Error::InvalidInput(format!(
                "taper lower bound {} is below {MIN_TAPER}",
                self.lower.taper
            )));
        }
        if self.lower.root_chord < MIN_ROOT_CHORD {
            return Err(Error::InvalidInput(format!(
                "root chord lower bound {} is below {MIN_ROOT_CHORD} m",
                self.lower.root_chord
            )));
        }
        let tw = self.lower.twist_cp.iter().chain(&self.upper.twist_cp);
        if tw.into_iter().any(|t| t.abs() > TWIST_LIMIT) {
            return Err(Error::InvalidInput(format!("twist bounds exceed ±{TWIST_LIMIT} deg")));
        }
        if self.lower.t_skin_cp.iter().chain(&self.lower.t_spar_cp).any(|&t| t <= 0.0) {
            return Err(Error::InvalidInput("wall thickness bounds must be positive".into()));
        }
        if self.upper.taper > 1.0 || self.lower.span <= 0.0 {
            return Err(Error::InvalidInput("taper must stay within (0, 1] and span positive".into()));
        }
        Ok(())
    }

    /// Narrow both density bounds to the catalogue range.
    pub fn clamp_density(&mut self, min: f64, max: f64) {
        for (lo, hi) in [
            (&mut self.lower.spar_density, &mut self.upper.spar_density),
            (&mut self.lower.skin_density, &mut self.upper.skin_density),
        ] {
            *lo = lo.max(min);
            *hi = hi.min(max);
        }
    }

    pub fn contains(&self, d: &DesignVector<f64>) -> bool {
        let (lo, hi, x) = (self.lower.to_vec(), self.upper.to_vec(), d.to_vec());
        x.iter().zip(lo.iter().zip(&hi)).all(|(v, (l, h))| v >= l && v <= h)
    }

    pub fn clamp(&self, d: &DesignVector<f64>) -> DesignVector<f64> {
        let (lo, hi) = (self.lower.to_vec(), self.upper.to_vec());
        let x: Vec<f64> = d
            .to_vec()
            .iter()
            .zip(lo.iter().zip(&hi))
            .map(|(v, (l, h))| v.clamp(*l, *h))
            .collect();
        DesignVector::from_slice(&x).expect("same length")
    }
}
