//! Planform parameterization, the shared wing mesh, and wingbox sections.
//!
//! Spanwise design variables are B-spline control points along the
//! semi-span. Control point 0 sits at the tip and the last one at the root,
//! so a vector such as `[10, 15, 15, 15]` twist means washout toward the tip.
//! Mesh nodes and elements are indexed from the root (node 0 on the plane of
//! symmetry) outward.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const CONTROL_POINTS: usize = 4;
pub const DEFAULT_SPAN_ELEMENTS: usize = 7;

/// Fixed linear map from control points to values at a set of stations.
#[derive(Debug, Clone, PartialEq)]
pub struct BSplineMap {
    degree: usize,
    n_cp: usize,
    stations: Vec<f64>,
    /// Row-major `stations × n_cp`.
    basis: Vec<f64>,
}

impl BSplineMap {
    /// Clamped uniform B-spline of `degree` (capped at `n_cp − 1`) sampled at
    /// `stations`, each in [0, 1].
    pub fn new(n_cp: usize, degree: usize, stations: &[f64]) -> Result<Self> {
        if n_cp < 2 {
            return Err(Error::ControlPointCount { expected: 2, got: n_cp });
        }
        if stations.iter().any(|u| !(0.0..=1.0).contains(u)) {
            return Err(Error::InvalidInput("spline stations must lie in [0, 1]".into()));
        }
        let degree = degree.min(n_cp - 1).max(1);
        let knots = clamped_knots(n_cp, degree);
        let mut basis = Vec::with_capacity(stations.len() * n_cp);
        for &u in stations {
            basis.extend(basis_functions(&knots, n_cp, degree, u));
        }
        Ok(Self {
            degree,
            n_cp,
            stations: stations.to_vec(),
            basis,
        })
    }

    /// Cubic map (the default for four control points).
    pub fn cubic(stations: &[f64]) -> Self {
        Self::new(CONTROL_POINTS, 3, stations).expect("valid stations")
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn stations(&self) -> &[f64] {
        &self.stations
    }

    /// `∂value_i/∂cp_j`; the map is linear so this is the whole Jacobian.
    pub fn basis(&self, station: usize, cp: usize) -> f64 {
        self.basis[station * self.n_cp + cp]
    }

    pub fn evaluate<T: Scalar>(&self, cps: &[T]) -> Result<Vec<T>> {
        if cps.len() != self.n_cp {
            return Err(Error::ControlPointCount {
                expected: self.n_cp,
                got: cps.len(),
            });
        }
        Ok(self
            .basis
            .chunks(self.n_cp)
            .map(|row| {
                row.iter()
                    .zip(cps)
                    .fold(T::zero(), |acc, (&b, &c)| acc + T::lit(b) * c)
            })
            .collect())
    }
}

fn clamped_knots(n_cp: usize, degree: usize) -> Vec<f64> {
    let inner = n_cp - degree;
    let mut knots = vec![0.0; degree + 1];
    for k in 1..inner {
        knots.push(k as f64 / inner as f64);
    }
    knots.extend(std::iter::repeat_n(1.0, degree + 1));
    knots
}

/// Cox–de Boor recursion; the right end of the parameter range belongs to
/// the last span so `u = 1` reproduces the last control point.
fn basis_functions(knots: &[f64], n_cp: usize, degree: usize, u: f64) -> Vec<f64> {
    let m = knots.len() - 1;
    let mut n: Vec<f64> = (0..m)
        .map(|i| {
            let last_span = knots[i + 1] == 1.0 && knots[i] < 1.0;
            if (knots[i] <= u && u < knots[i + 1]) || (u == 1.0 && last_span) {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    for p in 1..=degree {
        for i in 0..(m - p) {
            let d1 = knots[i + p] - knots[i];
            let d2 = knots[i + p + 1] - knots[i + 1];
            let a = if d1 > 0.0 { (u - knots[i]) / d1 * n[i] } else { 0.0 };
            let b = if d2 > 0.0 { (knots[i + p + 1] - u) / d2 * n[i + 1] } else { 0.0 };
            n[i] = a + b;
        }
    }
    n.truncate(n_cp);
    n
}

/// Spanwise abscissa (0 at tip, 1 at root) of each element midpoint.
pub fn element_stations(num_elements: usize) -> Vec<f64> {
    (0..num_elements)
        .map(|e| 1.0 - (e as f64 + 0.5) / num_elements as f64)
        .collect()
}

/// Abscissae of the control points themselves, tip first.
pub fn control_stations() -> Vec<f64> {
    (0..CONTROL_POINTS)
        .map(|k| k as f64 / (CONTROL_POINTS - 1) as f64)
        .collect()
}

/// Planform-level design inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanformSpec<T> {
    /// Full tip-to-tip span, m.
    pub span: T,
    pub root_chord: T,
    pub taper_ratio: T,
    /// Twist control points (geometric twist plus incidence), deg.
    pub twist_cp: Vec<T>,
    /// Thickness-to-chord control points.
    pub tc_cp: Vec<T>,
    pub num_span_elements: usize,
}

impl<T: Scalar> PlanformSpec<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.to_string()));
        if !(self.span.value() > 0.0) {
            return bad("span must be positive");
        }
        if !(self.root_chord.value() > 0.0) {
            return bad("root chord must be positive");
        }
        let t = self.taper_ratio.value();
        if !(t > 0.0 && t <= 1.0) {
            return bad("taper ratio must lie in (0, 1]");
        }
        if self.twist_cp.iter().any(|v| !v.value().is_finite()) {
            return bad("twist control points must be finite");
        }
        if self.num_span_elements == 0 {
            return bad("need at least one span element");
        }
        for cps in [&self.twist_cp, &self.tc_cp] {
            if cps.len() != CONTROL_POINTS {
                return Err(Error::ControlPointCount {
                    expected: CONTROL_POINTS,
                    got: cps.len(),
                });
            }
        }
        Ok(())
    }
}

/// Semi-span mesh shared by the vortex lattice and the beam model.
#[derive(Debug, Clone)]
pub struct WingModel<T> {
    pub span: T,
    pub semi_span: T,
    pub root_chord: T,
    pub taper_ratio: T,
    /// Node spanwise coordinates, root (0) to tip.
    pub node_y: Vec<T>,
    pub node_chord: Vec<T>,
    /// Element spanwise width.
    pub element_width: T,
    pub element_y: Vec<T>,
    pub chord: Vec<T>,
    /// Local incidence (twist plus angle of attack), deg.
    pub twist_deg: Vec<T>,
    pub thickness_to_chord: Vec<T>,
    /// Distance between the spars (half the chord).
    pub box_width: Vec<T>,
    /// Outer wingbox height `t/c · chord`.
    pub wing_thickness: Vec<T>,
    /// Full-span planform area.
    pub area: T,
    pub aspect_ratio: T,
    pub element_basis: BSplineMap,
}

impl<T: Scalar> WingModel<T> {
    pub fn num_elements(&self) -> usize {
        self.chord.len()
    }

    /// Planform area of each semi-span element.
    pub fn element_area(&self) -> Vec<T> {
        self.chord.iter().map(|&c| c * self.element_width).collect()
    }
}

pub fn build_wing<T: Scalar>(spec: &PlanformSpec<T>) -> Result<WingModel<T>> {
    spec.validate()?;
    let n = spec.num_span_elements;
    let half = T::lit(0.5);
    let semi = spec.span * half;
    let dy = semi / T::lit(n as f64);
    let tip_chord = spec.root_chord * spec.taper_ratio;
    let node_y: Vec<T> = (0..=n).map(|j| dy * T::lit(j as f64)).collect();
    let node_chord: Vec<T> = node_y
        .iter()
        .map(|&y| spec.root_chord + (tip_chord - spec.root_chord) * (y / semi))
        .collect();
    let chord: Vec<T> = node_chord.windows(2).map(|w| (w[0] + w[1]) * half).collect();
    let element_y: Vec<T> = node_y.windows(2).map(|w| (w[0] + w[1]) * half).collect();

    let basis = BSplineMap::cubic(&element_stations(n));
    let twist_deg = basis.evaluate(&spec.twist_cp)?;
    let thickness_to_chord = basis.evaluate(&spec.tc_cp)?;
    let box_width = chord.iter().map(|&c| c * half).collect();
    let wing_thickness = chord
        .iter()
        .zip(&thickness_to_chord)
        .map(|(&c, &tc)| c * tc)
        .collect();
    let area = chord.iter().fold(T::zero(), |a, &c| a + c * dy) * T::lit(2.0);
    let aspect_ratio = spec.span * spec.span / area;
    Ok(WingModel {
        span: spec.span,
        semi_span: semi,
        root_chord: spec.root_chord,
        taper_ratio: spec.taper_ratio,
        node_y,
        node_chord,
        element_width: dy,
        element_y,
        chord,
        twist_deg,
        thickness_to_chord,
        box_width,
        wing_thickness,
        area,
        aspect_ratio,
        element_basis: basis,
    })
}

/// Thin-walled hollow-rectangle wingbox split into its skin and spar walls.
///
/// Axes: `flap` is bending under lift (about the chordwise axis), `chord` is
/// in-plane bending (about the vertical axis).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WingboxSection<T> {
    pub height: T,
    pub width: T,
    pub t_skin: T,
    pub t_spar: T,
    pub area_skin: T,
    pub area_spar: T,
    pub i_flap_skin: T,
    pub i_flap_spar: T,
    pub i_chord_skin: T,
    pub i_chord_spar: T,
    /// Area enclosed by the wall mid-lines.
    pub enclosed_area: T,
    /// Mid-line perimeter lengths: one skin (chordwise) and one spar (vertical).
    pub skin_midline: T,
    pub spar_midline: T,
}

impl<T: Scalar> WingboxSection<T> {
    pub fn area(&self) -> T {
        self.area_skin + self.area_spar
    }

    pub fn i_flap(&self) -> T {
        self.i_flap_skin + self.i_flap_spar
    }

    pub fn i_chord(&self) -> T {
        self.i_chord_skin + self.i_chord_spar
    }

    /// Bredt–Batho torsion constant for a single material.
    pub fn torsion_constant(&self) -> T {
        let two = T::lit(2.0);
        let contour = two * self.skin_midline / self.t_skin + two * self.spar_midline / self.t_spar;
        T::lit(4.0) * self.enclosed_area * self.enclosed_area / contour
    }

    /// Torsional stiffness with each wall in its own shear modulus.
    pub fn torsional_stiffness(&self, g_skin: T, g_spar: T) -> T {
        let two = T::lit(2.0);
        let contour = two * self.skin_midline / (g_skin * self.t_skin)
            + two * self.spar_midline / (g_spar * self.t_spar);
        T::lit(4.0) * self.enclosed_area * self.enclosed_area / contour
    }
}

/// Section of a wingbox `chord/2` wide and `t/c · chord` tall.
pub fn wingbox_section<T: Scalar>(chord: T, tc: T, t_skin: T, t_spar: T) -> Result<WingboxSection<T>> {
    let h = tc * chord;
    let b = chord * T::lit(0.5);
    box_section(b, h, t_skin, t_spar)
}

/// Hollow rectangle of outer width `b` and height `h`.
pub fn box_section<T: Scalar>(b: T, h: T, t_skin: T, t_spar: T) -> Result<WingboxSection<T>> {
    let two = T::lit(2.0);
    let twelve = T::lit(12.0);
    let skin_margin = (h - two * t_skin).value();
    if !(skin_margin > 0.0) {
        return Err(Error::SectionGeometry {
            constraint: "2 t_skin < t_wing",
            margin: skin_margin,
        });
    }
    let spar_margin = (b * T::lit(0.5) - t_spar).value();
    if !(spar_margin > 0.0) {
        return Err(Error::SectionGeometry {
            constraint: "t_spar < b/2",
            margin: spar_margin,
        });
    }
    if !(t_skin.value() > 0.0 && t_spar.value() > 0.0) {
        return Err(Error::InvalidInput("wall thicknesses must be positive".into()));
    }
    let h_in = h - two * t_skin;
    let b_in = b - two * t_spar;
    let cube = |x: T| x * x * x;
    Ok(WingboxSection {
        height: h,
        width: b,
        t_skin,
        t_spar,
        area_skin: two * b * t_skin,
        area_spar: two * t_spar * h_in,
        i_flap_skin: b * (cube(h) - cube(h_in)) / twelve,
        i_flap_spar: two * t_spar * cube(h_in) / twelve,
        i_chord_skin: two * t_skin * cube(b) / twelve,
        i_chord_spar: h_in * (cube(b) - cube(b_in)) / twelve,
        enclosed_area: (b - t_spar) * (h - t_skin),
        skin_midline: b - t_spar,
        spar_midline: h - t_skin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(span: f64, root: f64, taper: f64) -> PlanformSpec<f64> {
        PlanformSpec {
            span,
            root_chord: root,
            taper_ratio: taper,
            twist_cp: vec![0.0; 4],
            tc_cp: vec![0.12; 4],
            num_span_elements: 7,
        }
    }

    #[test]
    fn constant_reproduction() {
        let map = BSplineMap::cubic(&element_stations(7));
        let v = map.evaluate::<f64>(&[2.5; 4]).unwrap();
        assert!(v.iter().all(|x| (x - 2.5).abs() < 1e-14));
    }

    #[test]
    fn linear_basis_ramp() {
        let stations = [0.0, 0.1, 0.5, 0.9, 1.0];
        let map = BSplineMap::new(4, 1, &stations).unwrap();
        let v = map.evaluate::<f64>(&[0.0, 1.0, 2.0, 3.0]).unwrap();
        for (u, x) in stations.iter().zip(v) {
            assert!((x - 3.0 * u).abs() < 1e-14);
        }
    }

    #[test]
    fn endpoints_interpolate_end_control_points() {
        let map = BSplineMap::cubic(&[0.0, 1.0]);
        let v = map.evaluate::<f64>(&[1.0, 5.0, -3.0, 7.0]).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-14 && (v[1] - 7.0).abs() < 1e-14);
    }

    #[test]
    fn wrong_control_point_count() {
        let map = BSplineMap::cubic(&[0.5]);
        assert!(matches!(
            map.evaluate::<f64>(&[1.0, 2.0, 3.0]),
            Err(Error::ControlPointCount { expected: 4, got: 3 })
        ));
    }

    #[test]
    fn jacobian_is_basis_matrix() {
        let map = BSplineMap::cubic(&element_stations(7));
        let cps = [0.3, -1.0, 2.0, 0.7];
        let h = 1e-6;
        for j in 0..4 {
            let mut up = cps;
            up[j] += h;
            let mut dn = cps;
            dn[j] -= h;
            let (a, b) = (map.evaluate::<f64>(&up).unwrap(), map.evaluate::<f64>(&dn).unwrap());
            for i in 0..7 {
                let fd = (a[i] - b[i]) / (2.0 * h);
                assert!((fd - map.basis(i, j)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn rectangle_area_and_aspect_ratio() {
        let w = build_wing(&spec(10.0, 2.0, 1.0)).unwrap();
        assert!((w.area - 20.0).abs() < 1e-12);
        assert!((w.aspect_ratio - 5.0).abs() < 1e-12);
    }

    #[test]
    fn trapezoid_area() {
        let w = build_wing(&spec(12.0, 2.0, 0.5)).unwrap();
        assert!((w.area - 18.0).abs() < 1e-12);
        assert!((w.aspect_ratio - 144.0 / 18.0).abs() < 1e-12);
        assert!((w.node_chord[7] - 1.0).abs() < 1e-12);
        assert!((w.box_width[0] - w.chord[0] / 2.0).abs() < 1e-15);
    }

    #[test]
    fn validation_planform_aspect_ratio_is_high() {
        let w = build_wing(&spec(53.5, 1.4, 0.3)).unwrap();
        // Straight-tapered planform; the reported optimum quotes AR 57.
        assert!((w.aspect_ratio - 57.0).abs() / 57.0 < 0.05, "{}", w.aspect_ratio);
    }

    #[test]
    fn thin_square_box() {
        let (a, t) = (1.0f64, 1e-3);
        let s = box_section(a, a, t, t).unwrap();
        assert!((s.area() - 4.0 * a * t).abs() / (4.0 * a * t) < 2e-3);
        let thin = 2.0 / 3.0 * a * a * a * t;
        assert!((s.i_flap() - thin).abs() / thin < 4e-3);
        assert!((s.i_chord() - s.i_flap()).abs() < 1e-15);
        let exact_i = (a.powi(4) - (a - 2.0 * t).powi(4)) / 12.0;
        assert!((s.i_flap() - exact_i).abs() / exact_i < 1e-12);
        let j = (a - t).powi(3) * t;
        assert!((s.torsion_constant() - j).abs() / j < 1e-12);
    }

    #[test]
    fn doubling_walls_roughly_doubles_area() {
        let (b, h, t) = (0.5f64, 0.2, 1e-3);
        let a1 = box_section(b, h, t, t).unwrap().area();
        let a2 = box_section(b, h, 2.0 * t, 2.0 * t).unwrap().area();
        let exact = |t: f64| b * h - (b - 2.0 * t) * (h - 2.0 * t);
        assert!((a1 - exact(t)).abs() < 1e-15);
        assert!((a2 - exact(2.0 * t)).abs() < 1e-15);
        assert!((a2 / a1 - 2.0).abs() < 0.02);
    }

    #[test]
    fn skin_at_half_thickness_is_rejected() {
        let err = wingbox_section(1.0, 0.1, 0.05, 0.001).unwrap_err();
        assert!(matches!(err, Error::SectionGeometry { margin, .. } if margin <= 0.0));
    }

    #[test]
    fn chordwise_decomposition_matches_hollow_rectangle() {
        let (b, h, tk, ts) = (0.6f64, 0.15, 0.002, 0.003);
        let s = box_section(b, h, tk, ts).unwrap();
        let exact = (h * b.powi(3) - (h - 2.0 * tk) * (b - 2.0 * ts).powi(3)) / 12.0;
        assert!((s.i_chord() - exact).abs() / exact < 1e-12);
    }
}
