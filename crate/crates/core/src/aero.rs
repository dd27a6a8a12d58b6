//! Vortex-lattice aerodynamics on the planar wing mesh.
//!
//! Each panel carries a horseshoe vortex: a bound segment on the panel's
//! quarter-chord line and two trailing legs running to downstream infinity
//! along +x. Flow tangency is enforced at the three-quarter-chord control
//! points, forces come from Kutta–Joukowski on the bound segments, and a
//! flat-plate skin-friction estimate plus a constant profile-drag offset
//! complete the drag polar.
//!
//! Axes: x downstream, y spanwise to the right, z up. The quarter-chord line
//! is straight at `x = 0`; the wing is meshed tip to tip by mirroring the
//! semi-span elements.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::WingModel;
use crate::linalg::Lu;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConditions {
    /// True airspeed, m/s.
    pub speed: f64,
    /// kg/m³
    pub air_density: f64,
    /// Dynamic viscosity, Pa·s.
    pub viscosity: f64,
}

impl FlowConditions {
    pub fn validate(&self) -> Result<()> {
        if !(self.speed > 0.0 && self.air_density > 0.0 && self.viscosity > 0.0) {
            return Err(Error::InvalidInput(
                "speed, air density and viscosity must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn dynamic_pressure(&self) -> f64 {
        0.5 * self.air_density * self.speed * self.speed
    }

    pub fn reynolds(&self, length: f64) -> f64 {
        self.air_density * self.speed * length / self.viscosity
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AeroConfig {
    /// Chordwise panels per spanwise strip.
    pub chordwise_panels: usize,
    /// Constant profile-drag increment for the airfoil's drag bucket.
    pub profile_drag: f64,
    /// Form factor applied to the flat-plate skin friction.
    pub form_factor: f64,
    /// Wetted area per unit planform area.
    pub wetted_ratio: f64,
}

impl Default for AeroConfig {
    fn default() -> Self {
        Self {
            chordwise_panels: 1,
            profile_drag: 0.008,
            form_factor: 1.1,
            wetted_ratio: 2.0,
        }
    }
}

impl AeroConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chordwise_panels == 0 {
            return Err(Error::InvalidInput("need at least one chordwise panel".into()));
        }
        if !(self.profile_drag >= 0.0 && self.form_factor > 0.0 && self.wetted_ratio >= 0.0) {
            return Err(Error::InvalidInput("drag model coefficients out of range".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Vec3<T> {
    x: T,
    y: T,
    z: T,
}

impl<T: Scalar> Vec3<T> {
    fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
    fn scale(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
    fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }
    fn cross(self, o: Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }
    fn norm(self) -> T {
        self.dot(self).sqrt()
    }
}

/// Induced velocity of a straight filament `a → b` with unit circulation.
fn segment_velocity<T: Scalar>(p: Vec3<T>, a: Vec3<T>, b: Vec3<T>) -> Vec3<T> {
    let r0 = b.sub(a);
    let r1 = p.sub(a);
    let r2 = p.sub(b);
    let c = r1.cross(r2);
    let c2 = c.dot(c);
    // On (or numerically on) the filament line the kernel is singular; the
    // colinear bound segments of a straight lifting line induce nothing there.
    if c2.value() <= 1e-20 * r0.dot(r0).value().powi(2) {
        return Vec3::new(T::zero(), T::zero(), T::zero());
    }
    let k = r0.dot(r1.scale(r1.norm().recip()).sub(r2.scale(r2.norm().recip())));
    c.scale(k / (c2 * T::lit(4.0) * T::PI()))
}

/// Induced velocity of a semi-infinite filament from `q` to +x infinity.
fn trailing_velocity<T: Scalar>(p: Vec3<T>, q: Vec3<T>) -> Vec3<T> {
    let d = Vec3::new(T::one(), T::zero(), T::zero());
    let r = p.sub(q);
    let c = d.cross(r);
    let c2 = c.dot(c);
    if c2.value() <= 1e-24 {
        return Vec3::new(T::zero(), T::zero(), T::zero());
    }
    let k = T::one() + d.dot(r) / r.norm();
    c.scale(k / (c2 * T::lit(4.0) * T::PI()))
}

fn horseshoe<T: Scalar>(p: Vec3<T>, a: Vec3<T>, b: Vec3<T>, bound: bool) -> Vec3<T> {
    let legs = trailing_velocity(p, b).sub(trailing_velocity(p, a));
    if bound {
        legs.add(segment_velocity(p, a, b))
    } else {
        legs
    }
}

#[derive(Debug, Clone)]
struct Panel<T> {
    /// Bound vortex end points (a at smaller y).
    a: Vec3<T>,
    b: Vec3<T>,
    control: Vec3<T>,
    /// Semi-span element index this panel belongs to.
    element: usize,
    /// Panel sits on the right semi-span.
    right: bool,
}

/// Vortex lattice for one wing geometry, with the influence matrix factored
/// so several incidence distributions can be solved cheaply.
#[derive(Debug, Clone)]
pub struct VortexLattice<T> {
    panels: Vec<Panel<T>>,
    lu: Lu<T>,
    /// Velocity at each bound-segment midpoint per unit circulation of each
    /// horseshoe, excluding the panel's own bound segment. Row-major.
    bound_vy: Vec<T>,
    bound_vz: Vec<T>,
    num_elements: usize,
    reference_area: T,
    mean_chord: T,
    chord: Vec<T>,
    element_area: Vec<T>,
    elastic_axis_x: Vec<T>,
}

impl<T: Scalar> VortexLattice<T> {
    pub fn new(wing: &WingModel<T>, cfg: &AeroConfig) -> Result<Self> {
        cfg.validate()?;
        let n_el = wing.num_elements();
        if n_el == 0 {
            return Err(Error::InvalidInput("wing has no panels".into()));
        }
        let nc = cfg.chordwise_panels;
        let quarter = T::lit(0.25);
        let ncf = T::lit(nc as f64);
        let lead = |c: T| -(c * quarter);
        let mut panels = Vec::with_capacity(2 * n_el * nc);
        for right in [false, true] {
            let order: Vec<usize> = if right {
                (0..n_el).collect()
            } else {
                (0..n_el).rev().collect()
            };
            for e in order {
                let (y0, y1) = (wing.node_y[e], wing.node_y[e + 1]);
                let (c0, c1) = (wing.node_chord[e], wing.node_chord[e + 1]);
                let ym = wing.element_y[e];
                let cm = wing.chord[e];
                for k in 0..nc {
                    let kf = T::lit(k as f64);
                    let at = |c: T, frac: f64| lead(c) + (kf + T::lit(frac)) * c / ncf;
                    let (mut a, mut b) = (
                        Vec3::new(at(c0, 0.25), y0, T::zero()),
                        Vec3::new(at(c1, 0.25), y1, T::zero()),
                    );
                    let mut control = Vec3::new(at(cm, 0.75), ym, T::zero());
                    if !right {
                        // Mirror image: swap ends so the bound vortex keeps
                        // pointing toward +y.
                        let (ma, mb) = (b, a);
                        a = Vec3::new(ma.x, -ma.y, T::zero());
                        b = Vec3::new(mb.x, -mb.y, T::zero());
                        control.y = -control.y;
                    }
                    panels.push(Panel {
                        a,
                        b,
                        control,
                        element: e,
                        right,
                    });
                }
            }
        }
        let n = panels.len();
        let mut aic = vec![T::zero(); n * n];
        let mut bound_vy = vec![T::zero(); n * n];
        let mut bound_vz = vec![T::zero(); n * n];
        for (i, pi) in panels.iter().enumerate() {
            let mid = pi.a.add(pi.b).scale(T::lit(0.5));
            for (j, pj) in panels.iter().enumerate() {
                aic[i * n + j] = horseshoe(pi.control, pj.a, pj.b, true).z;
                let v = horseshoe(mid, pj.a, pj.b, i != j);
                bound_vy[i * n + j] = v.y;
                bound_vz[i * n + j] = v.z;
            }
        }
        let lu = Lu::factor(n, aic, "vortex-lattice influence")?;
        Ok(Self {
            panels,
            lu,
            bound_vy,
            bound_vz,
            num_elements: n_el,
            reference_area: wing.area,
            mean_chord: wing.area / wing.span,
            chord: wing.chord.clone(),
            element_area: wing.element_area(),
            elastic_axis_x: wing.chord.iter().map(|&c| c * quarter).collect(),
        })
    }

    pub fn num_panels(&self) -> usize {
        self.panels.len()
    }

    /// Solve for a symmetric incidence distribution `alpha_rad` (one value
    /// per semi-span element, radians).
    pub fn solve(&self, alpha_rad: &[T], flow: &FlowConditions, cfg: &AeroConfig) -> Result<AeroSolution<T>> {
        flow.validate()?;
        if alpha_rad.len() != self.num_elements {
            return Err(Error::MeshMismatch {
                expected: self.num_elements,
                got: alpha_rad.len(),
            });
        }
        let v = T::lit(flow.speed);
        let rho = T::lit(flow.air_density);
        let rhs: Vec<T> = self
            .panels
            .iter()
            .map(|p| -(v * alpha_rad[p.element].sin()))
            .collect();
        let gamma = self.lu.solve(&rhs);
        let n = self.panels.len();

        let mut fx = vec![T::zero(); n];
        let mut fz = vec![T::zero(); n];
        for (i, p) in self.panels.iter().enumerate() {
            let (mut vy, mut vz) = (T::zero(), T::zero());
            for j in 0..n {
                vy += self.bound_vy[i * n + j] * gamma[j];
                vz += self.bound_vz[i * n + j] * gamma[j];
            }
            let l = p.b.sub(p.a);
            // F = ρΓ (V∞ + v) × l with V∞ = (V, 0, 0) and l in the z = 0 plane.
            fx[i] = -(rho * gamma[i] * vz * l.y);
            fz[i] = rho * gamma[i] * (v * l.y - vy * l.x);
        }
        let lift = fz.iter().fold(T::zero(), |a, &f| a + f);
        let induced = fx.iter().fold(T::zero(), |a, &f| a + f);
        let q = T::lit(flow.dynamic_pressure());
        let s = self.reference_area;

        let mut element_lift = vec![T::zero(); self.num_elements];
        let mut element_drag = vec![T::zero(); self.num_elements];
        let mut element_torque = vec![T::zero(); self.num_elements];
        for (i, p) in self.panels.iter().enumerate() {
            if !p.right {
                continue;
            }
            let e = p.element;
            let x_force = (p.a.x + p.b.x) * T::lit(0.5);
            element_lift[e] += fz[i];
            element_drag[e] += fx[i];
            // Nose-up moment about the mid-chord elastic axis.
            element_torque[e] += (self.elastic_axis_x[e] - x_force) * fz[i];
        }

        let friction = self
            .chord
            .iter()
            .zip(&self.element_area)
            .fold(T::zero(), |acc, (&c, &a)| {
                let re = rho * v * c / T::lit(flow.viscosity);
                let cf = T::lit(0.074) / re.powf(T::lit(0.2));
                acc + cf * a
            })
            * T::lit(2.0 * cfg.form_factor * cfg.wetted_ratio)
            / s;
        let cl = lift / (q * s);
        let cdi = induced / (q * s);
        let cd0 = T::lit(cfg.profile_drag);
        let cd = cdi + friction + cd0;
        Ok(AeroSolution {
            gamma,
            panel_fx: fx,
            panel_fz: fz,
            element_lift,
            element_drag,
            element_torque,
            cl,
            cd,
            cdi,
            cdf: friction,
            cd0,
            lift,
            drag: cd * q * s,
            reynolds: flow.reynolds(self.mean_chord.value()),
        })
    }
}

/// Forces and coefficients of one vortex-lattice solve.
#[derive(Debug, Clone)]
pub struct AeroSolution<T> {
    /// Circulation per panel, left tip to right tip.
    pub gamma: Vec<T>,
    pub panel_fx: Vec<T>,
    pub panel_fz: Vec<T>,
    /// Right semi-span, per element: lift (N), induced drag (N), and pitching
    /// moment about the elastic axis (N·m, nose-up positive).
    pub element_lift: Vec<T>,
    pub element_drag: Vec<T>,
    pub element_torque: Vec<T>,
    pub cl: T,
    /// Total drag coefficient: induced + skin friction + profile offset.
    pub cd: T,
    pub cdi: T,
    pub cdf: T,
    pub cd0: T,
    /// Full-wing lift, N.
    pub lift: T,
    /// Full-wing drag, N.
    pub drag: T,
    /// Reynolds number on the mean geometric chord.
    pub reynolds: f64,
}

/// One-shot analysis at the wing's own twist distribution plus a uniform
/// `extra_incidence_rad`.
pub fn solve_vlm<T: Scalar>(
    wing: &WingModel<T>,
    flow: &FlowConditions,
    cfg: &AeroConfig,
    extra_incidence_rad: T,
) -> Result<AeroSolution<T>> {
    let lattice = VortexLattice::new(wing, cfg)?;
    let alpha: Vec<T> = wing
        .twist_deg
        .iter()
        .map(|&t| t.to_radians() + extra_incidence_rad)
        .collect();
    lattice.solve(&alpha, flow, cfg)
}

/// Six load components per beam node: forces (x, y, z) then moments about
/// (x, y, z).
pub type NodalLoads<T> = Vec<[T; 6]>;

/// Lump the right semi-span element forces onto the beam nodes, half to each
/// end node of the element, scaled by `load_factor`. A force acting at the
/// element midpoint keeps its resultant and its root moment exactly.
pub fn panel_loads<T: Scalar>(sol: &AeroSolution<T>, load_factor: T, num_nodes: usize) -> Result<NodalLoads<T>> {
    let n_el = sol.element_lift.len();
    if num_nodes != n_el + 1 {
        return Err(Error::MeshMismatch {
            expected: n_el + 1,
            got: num_nodes,
        });
    }
    let half = T::lit(0.5) * load_factor;
    let mut loads = vec![[T::zero(); 6]; num_nodes];
    for e in 0..n_el {
        for node in [e, e + 1] {
            loads[node][0] += sol.element_drag[e] * half;
            loads[node][2] += sol.element_lift[e] * half;
            loads[node][4] += sol.element_torque[e] * half;
        }
    }
    Ok(loads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_wing, PlanformSpec};

    fn flow() -> FlowConditions {
        FlowConditions {
            speed: 25.0,
            air_density: 0.0889,
            viscosity: 1.42e-5,
        }
    }

    fn rect(span: f64, chord: f64, twist: f64, n: usize) -> WingModel<f64> {
        build_wing(&PlanformSpec::<f64> {
            span,
            root_chord: chord,
            taper_ratio: 1.0,
            twist_cp: vec![twist; 4],
            tc_cp: vec![0.12; 4],
            num_span_elements: n,
        })
        .unwrap()
    }

    #[test]
    fn zero_incidence_gives_zero_lift() {
        let sol = solve_vlm(&rect(20.0, 1.0, 0.0, 7), &flow(), &AeroConfig::default(), 0.0).unwrap();
        assert_eq!(sol.cl, 0.0);
        assert_eq!(sol.cdi, 0.0);
        assert!(sol.gamma.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn lift_positive_with_downwash_drag() {
        let sol = solve_vlm(&rect(20.0, 1.0, 5.0, 7), &flow(), &AeroConfig::default(), 0.0).unwrap();
        assert!(sol.cl > 0.0);
        assert!(sol.cdi > 0.0);
        assert!(sol.cdf > 0.0);
        assert!((sol.cd - sol.cdi - sol.cdf - 0.008).abs() < 1e-15);
    }

    #[test]
    fn circulation_is_mirror_symmetric() {
        let w = build_wing(&PlanformSpec::<f64> {
            span: 30.0,
            root_chord: 1.5,
            taper_ratio: 0.4,
            twist_cp: vec![1.0, 4.0, 6.0, 8.0],
            tc_cp: vec![0.12; 4],
            num_span_elements: 7,
        })
        .unwrap();
        let sol = solve_vlm(&w, &flow(), &AeroConfig::default(), 0.0).unwrap();
        let n = sol.gamma.len();
        for i in 0..n / 2 {
            let (l, r) = (sol.gamma[n / 2 - 1 - i], sol.gamma[n / 2 + i]);
            assert!((l - r).abs() <= 1e-12 * r.abs(), "{l} vs {r}");
        }
    }

    #[test]
    fn doubling_speed_keeps_coefficients() {
        let w = rect(20.0, 1.0, 5.0, 7);
        let cfg = AeroConfig {
            profile_drag: 0.0,
            form_factor: 1.0,
            wetted_ratio: 0.0,
            ..AeroConfig::default()
        };
        let a = solve_vlm(&w, &flow(), &cfg, 0.0).unwrap();
        let fast = FlowConditions {
            speed: 50.0,
            ..flow()
        };
        let b = solve_vlm(&w, &fast, &cfg, 0.0).unwrap();
        assert!((a.cl - b.cl).abs() < 1e-12);
        assert!((b.lift / a.lift - 4.0).abs() < 1e-10);
    }

    #[test]
    fn load_transfer_conserves_force_and_root_moment() {
        let w = rect(20.0, 1.0, 5.0, 7);
        let sol = solve_vlm(&w, &flow(), &AeroConfig::default(), 0.0).unwrap();
        let loads = panel_loads(&sol, 1.0, 8).unwrap();
        let total: f64 = loads.iter().map(|l| l[2]).sum();
        let panels: f64 = sol.element_lift.iter().sum();
        assert!((total - panels).abs() < 1e-10 * panels);
        assert!((2.0 * panels - sol.lift).abs() < 1e-10 * sol.lift);
        let m_nodes: f64 = loads.iter().zip(&w.node_y).map(|(l, y)| l[2] * y).sum();
        let m_panels: f64 = sol.element_lift.iter().zip(&w.element_y).map(|(f, y)| f * y).sum();
        assert!((m_nodes - m_panels).abs() / m_panels < 5e-3);

        let zero = panel_loads(&sol, 0.0, 8).unwrap();
        assert!(zero.iter().flatten().all(|&v| v == 0.0));
        let double = panel_loads(&sol, 2.0, 8).unwrap();
        for (a, b) in loads.iter().zip(&double) {
            for k in 0..6 {
                assert_eq!(2.0 * a[k], b[k]);
            }
        }
        assert!(matches!(panel_loads(&sol, 1.0, 7), Err(Error::MeshMismatch { .. })));
    }

    #[test]
    fn refinement_changes_lift_little() {
        let make = |n| {
            build_wing(&PlanformSpec::<f64> {
                span: 53.5,
                root_chord: 1.4,
                taper_ratio: 0.3,
                twist_cp: vec![6.0, 12.0, 14.0, 15.0],
                tc_cp: vec![0.10, 0.22, 0.23, 0.24],
                num_span_elements: n,
            })
            .unwrap()
        };
        let cfg = AeroConfig::default();
        let coarse = solve_vlm(&make(7), &flow(), &cfg, 0.0).unwrap();
        let fine = solve_vlm(&make(28), &flow(), &cfg, 0.0).unwrap();
        assert!((coarse.cl - fine.cl).abs() / fine.cl < 0.03, "{} vs {}", coarse.cl, fine.cl);
    }
}
