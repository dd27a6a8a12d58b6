//! Wingbox beam finite elements and the structural constraints.
//!
//! The semi-span is a chain of 6-DOF space-beam elements along +y, clamped
//! at the root. Degrees of freedom per node are `[ux, uy, uz, rx, ry, rz]`;
//! `rx` is the flapwise slope, `ry` the (nose-up) twist, `rz` the in-plane
//! rotation. Element stresses are recovered at each element's inboard end,
//! where the bending moment in the element is largest.

use serde::{Deserialize, Serialize};

use crate::aero::NodalLoads;
use crate::error::{Error, Result};
use crate::geometry::{wingbox_section, WingModel, WingboxSection};
use crate::linalg::Lu;
use crate::materials::InterpolatedMaterial;
use crate::scalar::Scalar;

pub const GRAVITY: f64 = 9.80665;

const DOF: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StructuralConfig {
    pub safety_factor: f64,
    pub ks_rho: f64,
    /// Compression buckling coefficient.
    pub k_c: f64,
    /// Shear buckling coefficient is `k_s_base + k_s_aspect·(b/a)²`.
    pub k_s_base: f64,
    pub k_s_aspect: f64,
}

impl Default for StructuralConfig {
    fn default() -> Self {
        Self {
            safety_factor: 1.5,
            ks_rho: 50.0,
            k_c: 4.0,
            k_s_base: 5.34,
            k_s_aspect: 4.0,
        }
    }
}

impl StructuralConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.safety_factor > 0.0 && self.ks_rho > 0.0 && self.k_c > 0.0 && self.k_s_base > 0.0)
            || self.k_s_aspect < 0.0
        {
            return Err(Error::InvalidInput(
                "safety factor, KS parameter and buckling coefficients must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Wall thickness control points plus the material of each wall.
#[derive(Debug, Clone)]
pub struct StructuralLayout<T> {
    pub t_skin_cp: Vec<T>,
    pub t_spar_cp: Vec<T>,
    pub skin_material: InterpolatedMaterial<T>,
    pub spar_material: InterpolatedMaterial<T>,
}

/// Per-element buckling inputs for the top skin panel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BucklingParams<T> {
    pub k_c: T,
    pub k_s: T,
    /// Panel width (distance between the spars), m.
    pub width: T,
    /// Flexural stiffness `E t³ / 12(1 − ν²)`, N·m.
    pub flexural_stiffness: T,
}

impl<T: Scalar> BucklingParams<T> {
    pub fn new(cfg: &StructuralConfig, width: T, length: T, e: T, nu: T, t: T) -> Self {
        let ratio = width / length;
        Self {
            k_c: T::lit(cfg.k_c),
            k_s: T::lit(cfg.k_s_base) + T::lit(cfg.k_s_aspect) * ratio * ratio,
            width,
            flexural_stiffness: e * t * t * t / (T::lit(12.0) * (T::one() - nu * nu)),
        }
    }

    /// Critical compressive and shear stresses for a skin of thickness `t`.
    pub fn critical_stresses(&self, t: T) -> Result<(T, T)> {
        let base = T::PI() * T::PI() * self.flexural_stiffness / (self.width * self.width * t);
        let (sc, ss) = (self.k_c * base, self.k_s * base);
        if !(sc.value() > 0.0 && ss.value() > 0.0) {
            return Err(Error::Analysis("non-positive critical buckling stress".into()));
        }
        Ok((sc, ss))
    }
}

/// Parabolic interaction `R_s² + R_c − 1`; negative is stable.
pub fn buckling_interaction<T: Scalar>(r_c: T, r_s: T) -> T {
    r_s * r_s + r_c - T::one()
}

/// `σ_vm / (σ_f / SF) − 1`; negative is safe.
pub fn failure_margin<T: Scalar>(von_mises: T, failure_strength: T, safety_factor: f64) -> T {
    von_mises * T::lit(safety_factor) / failure_strength - T::one()
}

/// Kreisselmeier–Steinhauser smooth maximum.
pub fn ks_aggregate<T: Scalar>(g: &[T], rho: f64) -> T {
    assert!(!g.is_empty(), "KS aggregate of an empty set");
    let max = g.iter().copied().fold(g[0], |m, x| if x > m { x } else { m });
    let r = T::lit(rho);
    let sum = g.iter().fold(T::zero(), |acc, &x| acc + (r * (x - max)).exp());
    max + sum.ln() / r
}

/// Spar, skin and total structural mass of the full wing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructuralMasses<T> {
    pub spar: T,
    pub skin: T,
    pub wing: T,
}

/// Wall volumes times densities, both semi-spans. Walls follow the wingbox
/// split used by [`wingbox_section`]: two skins spanning the full box width,
/// two spars between them.
pub fn structural_masses<T: Scalar>(
    wing: &WingModel<T>,
    t_skin: &[T],
    t_spar: &[T],
    skin_density: T,
    spar_density: T,
) -> Result<StructuralMasses<T>> {
    let n = wing.num_elements();
    for got in [t_skin.len(), t_spar.len()] {
        if got != n {
            return Err(Error::MeshMismatch { expected: n, got });
        }
    }
    let two = T::lit(2.0);
    let (mut v_skin, mut v_spar) = (T::zero(), T::zero());
    for e in 0..n {
        let b = wing.box_width[e];
        let h = wing.wing_thickness[e];
        v_skin += two * b * t_skin[e];
        v_spar += two * t_spar[e] * (h - two * t_skin[e]);
    }
    let len = wing.element_width * two;
    let spar = v_spar * len * spar_density;
    let skin = v_skin * len * skin_density;
    Ok(StructuralMasses {
        spar,
        skin,
        wing: spar + skin,
    })
}

#[derive(Debug, Clone)]
struct ElementProps<T> {
    ea: T,
    ei_flap: T,
    ei_chord: T,
    gj: T,
    length: T,
}

impl<T: Scalar> ElementProps<T> {
    /// 12×12 element stiffness, row-major.
    fn stiffness(&self) -> [[T; 12]; 12] {
        let z = T::zero();
        let mut k = [[z; 12]; 12];
        let l = self.length;
        let (l2, l3) = (l * l, l * l * l);
        let axial = self.ea / l;
        let torsion = self.gj / l;
        for (a, b, s) in [(1, 1, 1.0), (1, 7, -1.0), (7, 1, -1.0), (7, 7, 1.0)] {
            k[a][b] += axial * T::lit(s);
        }
        for (a, b, s) in [(4, 4, 1.0), (4, 10, -1.0), (10, 4, -1.0), (10, 10, 1.0)] {
            k[a][b] += torsion * T::lit(s);
        }
        let beam = |ei: T| {
            let c = ei / l3;
            let twelve = T::lit(12.0) * c;
            let six = T::lit(6.0) * l * c;
            let four = T::lit(4.0) * l2 * c;
            let two = T::lit(2.0) * l2 * c;
            [
                [twelve, six, -twelve, six],
                [six, four, -six, two],
                [-twelve, -six, twelve, -six],
                [six, two, -six, four],
            ]
        };
        // Flapwise: (uz, rx) with rx = +dw/dy.
        let flap = beam(self.ei_flap);
        let idx = [2, 3, 8, 9];
        for i in 0..4 {
            for j in 0..4 {
                k[idx[i]][idx[j]] += flap[i][j];
            }
        }
        // In-plane: (ux, rz) with rz = −du/dy.
        let chord = beam(self.ei_chord);
        let idx = [0, 5, 6, 11];
        let sign = [1.0, -1.0, 1.0, -1.0];
        for i in 0..4 {
            for j in 0..4 {
                k[idx[i]][idx[j]] += chord[i][j] * T::lit(sign[i] * sign[j]);
            }
        }
        k
    }
}

/// Assembled and factored beam model for one wing and layout.
#[derive(Debug, Clone)]
pub struct BeamModel<T> {
    sections: Vec<WingboxSection<T>>,
    props: Vec<ElementProps<T>>,
    lu: Lu<T>,
    node_y: Vec<T>,
    t_skin: Vec<T>,
    t_spar: Vec<T>,
    skin: InterpolatedMaterial<T>,
    spar: InterpolatedMaterial<T>,
    masses: StructuralMasses<T>,
    /// Structural mass lumped to each node (semi-span).
    node_mass: Vec<T>,
}

impl<T: Scalar> BeamModel<T> {
    pub fn new(wing: &WingModel<T>, layout: &StructuralLayout<T>) -> Result<Self> {
        let n = wing.num_elements();
        let t_skin = wing.element_basis.evaluate(&layout.t_skin_cp)?;
        let t_spar = wing.element_basis.evaluate(&layout.t_spar_cp)?;
        let (sk, sp) = (&layout.skin_material, &layout.spar_material);
        let mut sections = Vec::with_capacity(n);
        let mut props = Vec::with_capacity(n);
        for e in 0..n {
            let s = wingbox_section(wing.chord[e], wing.thickness_to_chord[e], t_skin[e], t_spar[e])?;
            props.push(ElementProps {
                ea: sk.youngs_modulus * s.area_skin + sp.youngs_modulus * s.area_spar,
                ei_flap: sk.youngs_modulus * s.i_flap_skin + sp.youngs_modulus * s.i_flap_spar,
                ei_chord: sk.youngs_modulus * s.i_chord_skin + sp.youngs_modulus * s.i_chord_spar,
                gj: s.torsional_stiffness(sk.shear_modulus, sp.shear_modulus),
                length: wing.element_width,
            });
            sections.push(s);
        }

        let nd = DOF * n;
        let mut k = vec![T::zero(); nd * nd];
        for (e, p) in props.iter().enumerate() {
            let ke = p.stiffness();
            for a in 0..12 {
                // Global DOF minus the clamped root node.
                let Some(ga) = (DOF * e + a).checked_sub(DOF) else {
                    continue;
                };
                for b in 0..12 {
                    let Some(gb) = (DOF * e + b).checked_sub(DOF) else {
                        continue;
                    };
                    k[ga * nd + gb] += ke[a][b];
                }
            }
        }
        let lu = Lu::factor(nd, k, "beam stiffness")?;

        let masses = structural_masses(wing, &t_skin, &t_spar, sk.density, sp.density)?;
        let mut node_mass = vec![T::zero(); n + 1];
        let half = T::lit(0.5);
        for (e, s) in sections.iter().enumerate() {
            let m = (s.area_skin * sk.density + s.area_spar * sp.density) * wing.element_width;
            node_mass[e] += m * half;
            node_mass[e + 1] += m * half;
        }
        Ok(Self {
            sections,
            props,
            lu,
            node_y: wing.node_y.clone(),
            t_skin,
            t_spar,
            skin: *sk,
            spar: *sp,
            masses,
            node_mass,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.node_y.len()
    }

    pub fn masses(&self) -> StructuralMasses<T> {
        self.masses
    }

    pub fn sections(&self) -> &[WingboxSection<T>] {
        &self.sections
    }

    pub fn skin_thickness(&self) -> &[T] {
        &self.t_skin
    }

    pub fn spar_thickness(&self) -> &[T] {
        &self.t_spar
    }

    /// Flapwise bending stiffness per element, N·m².
    pub fn flap_stiffness(&self) -> Vec<T> {
        self.props.iter().map(|p| p.ei_flap).collect()
    }

    /// Gravity loads of the structure plus the given point and distributed
    /// masses under load factor `n` (downward for positive `n`).
    ///
    /// `point_masses` are `(y, kg)` on the semi-span, split linearly between
    /// the two nearest nodes; `element_masses` are per semi-span element and
    /// lumped half to each end node.
    pub fn inertial_loads(&self, point_masses: &[(T, T)], element_masses: &[T], n: T) -> Result<NodalLoads<T>> {
        let nn = self.num_nodes();
        if element_masses.len() != nn - 1 {
            return Err(Error::MeshMismatch {
                expected: nn - 1,
                got: element_masses.len(),
            });
        }
        let mut m = self.node_mass.clone();
        let half = T::lit(0.5);
        for (e, &me) in element_masses.iter().enumerate() {
            m[e] += me * half;
            m[e + 1] += me * half;
        }
        let dy = self.node_y[1] - self.node_y[0];
        let last = nn - 1;
        for &(y, mass) in point_masses {
            // Clamp only points truly off the mesh so a mass at the tip
            // keeps its derivative despite roundoff in `y / dy`.
            let s = y / dy;
            let tol = 1e-9 * last as f64;
            let s = if s.value() < -tol {
                T::zero()
            } else if s.value() > last as f64 + tol {
                T::lit(last as f64)
            } else {
                s
            };
            let j = (s.value().floor() as usize).min(last - 1);
            let w = s - T::lit(j as f64);
            m[j] += mass * (T::one() - w);
            m[j + 1] += mass * w;
        }
        let g = T::lit(GRAVITY) * n;
        Ok(m.into_iter()
            .map(|mi| {
                let mut l = [T::zero(); DOF];
                l[2] = -(mi * g);
                l
            })
            .collect())
    }

    /// Nodal displacements (root node included, always zero).
    pub fn displacements(&self, loads: &NodalLoads<T>) -> Result<Vec<[T; DOF]>> {
        let nn = self.num_nodes();
        if loads.len() != nn {
            return Err(Error::MeshMismatch {
                expected: nn,
                got: loads.len(),
            });
        }
        let rhs: Vec<T> = loads[1..].iter().flat_map(|l| l.iter().copied()).collect();
        let u = self.lu.solve(&rhs);
        let mut out = vec![[T::zero(); DOF]; nn];
        for (j, node) in out.iter_mut().enumerate().skip(1) {
            node.copy_from_slice(&u[DOF * (j - 1)..DOF * j]);
        }
        Ok(out)
    }

    /// Solve and recover stresses and constraint margins.
    pub fn analyze(&self, loads: &NodalLoads<T>, cfg: &StructuralConfig) -> Result<StructuralResult<T>> {
        let u = self.displacements(loads)?;
        let n = self.props.len();
        let two = T::lit(2.0);
        let half = T::lit(0.5);
        let nu_skin = self.skin.poisson_ratio();
        let mut out = StructuralResult {
            von_mises: Vec::with_capacity(n),
            skin_axial: Vec::with_capacity(n),
            skin_shear: Vec::with_capacity(n),
            spar_shear: Vec::with_capacity(n),
            failure: Vec::with_capacity(n),
            buckling: Vec::with_capacity(n),
            ks_failure: T::zero(),
            ks_buckling: T::zero(),
            masses: self.masses,
            tip_deflection: u[n][2],
            twist: Vec::with_capacity(n),
            displacements: u.clone(),
        };
        for e in 0..n {
            let p = &self.props[e];
            let s = &self.sections[e];
            let ke = p.stiffness();
            let mut ue = [T::zero(); 12];
            ue[..DOF].copy_from_slice(&u[e]);
            ue[DOF..].copy_from_slice(&u[e + 1]);
            // Forces the rest of the wing applies at the element's inboard end.
            let mut f = [T::zero(); DOF];
            for (a, fa) in f.iter_mut().enumerate() {
                for (b, &ub) in ue.iter().enumerate() {
                    *fa += ke[a][b] * ub;
                }
            }
            let shear_x = f[0];
            let shear_z = f[2];
            let m_flap = -f[3];
            let torque = f[4];
            let m_chord = f[5];

            let curv_flap = m_flap / p.ei_flap;
            let curv_chord = m_chord / p.ei_chord;
            let (h, b) = (s.height, s.width);
            let (tk, ts) = (s.t_skin, s.t_spar);
            let q = torque / (two * s.enclosed_area);

            let spar_sigma = self.spar.youngs_modulus
                * ((curv_flap * h * half).abs() + (curv_chord * b * half).abs());
            let spar_tau = shear_z.abs() / (two * ts * (h - two * tk)) + q.abs() / ts;
            let vm = (spar_sigma * spar_sigma + T::lit(3.0) * spar_tau * spar_tau).sqrt();

            // Upward bending puts the top skin in compression (positive here).
            let skin_axial = self.skin.youngs_modulus * curv_flap * h * half;
            let skin_tau = q.abs() / tk + shear_x.abs() / (two * tk * (b - two * ts));

            let buck = BucklingParams::new(cfg, b, p.length, self.skin.youngs_modulus, nu_skin, tk);
            let (sc, ss) = buck.critical_stresses(tk)?;
            out.von_mises.push(vm);
            out.skin_axial.push(skin_axial);
            out.skin_shear.push(skin_tau);
            out.spar_shear.push(spar_tau);
            out.failure
                .push(failure_margin(vm, self.spar.failure_strength, cfg.safety_factor));
            out.buckling.push(buckling_interaction(skin_axial / sc, skin_tau / ss));
            out.twist.push((u[e][4] + u[e + 1][4]) * half);
        }
        out.ks_failure = ks_aggregate(&out.failure, cfg.ks_rho);
        out.ks_buckling = ks_aggregate(&out.buckling, cfg.ks_rho);
        Ok(out)
    }
}

/// Displacements, stresses and constraint margins of one load case.
#[derive(Debug, Clone)]
pub struct StructuralResult<T> {
    /// Per node, root first.
    pub displacements: Vec<[T; DOF]>,
    /// Per element, at the inboard end. Pa.
    pub von_mises: Vec<T>,
    /// Top-skin axial stress, compression positive.
    pub skin_axial: Vec<T>,
    pub skin_shear: Vec<T>,
    pub spar_shear: Vec<T>,
    /// `σ_vm/(σ_f/SF) − 1` on the spars.
    pub failure: Vec<T>,
    /// `R_s² + R_c − 1` on the top skin.
    pub buckling: Vec<T>,
    pub ks_failure: T,
    pub ks_buckling: T,
    pub masses: StructuralMasses<T>,
    pub tip_deflection: T,
    /// Element elastic twist (mean of end-node rotations), rad, nose-up.
    pub twist: Vec<T>,
}

/// Build, load and solve in one call. `gravity_load_factor` scales the
/// inertial relief of the structure and the listed masses.
pub fn solve_fem<T: Scalar>(
    wing: &WingModel<T>,
    layout: &StructuralLayout<T>,
    nodal_loads: &NodalLoads<T>,
    point_masses: &[(T, T)],
    element_masses: &[T],
    gravity_load_factor: T,
    cfg: &StructuralConfig,
) -> Result<StructuralResult<T>> {
    cfg.validate()?;
    let model = BeamModel::new(wing, layout)?;
    let mut loads = model.inertial_loads(point_masses, element_masses, gravity_load_factor)?;
    if nodal_loads.len() != loads.len() {
        return Err(Error::MeshMismatch {
            expected: loads.len(),
            got: nodal_loads.len(),
        });
    }
    for (l, a) in loads.iter_mut().zip(nodal_loads) {
        for k in 0..DOF {
            l[k] += a[k];
        }
    }
    model.analyze(&loads, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_wing, PlanformSpec};
    use crate::materials::{InterpolationMode, MaterialCatalogue};

    fn uniform_wing(n: usize) -> WingModel<f64> {
        build_wing(&PlanformSpec::<f64> {
            span: 20.0,
            root_chord: 1.0,
            taper_ratio: 1.0,
            twist_cp: vec![0.0; 4],
            tc_cp: vec![0.12; 4],
            num_span_elements: n,
        })
        .unwrap()
    }

    fn layout(e_scale: f64) -> StructuralLayout<f64> {
        let cat = MaterialCatalogue::reference();
        let mut m = cat.material::<f64>(InterpolationMode::Linear, 2800.0).unwrap();
        m.youngs_modulus *= e_scale;
        m.shear_modulus *= e_scale;
        StructuralLayout {
            t_skin_cp: vec![0.002; 4],
            t_spar_cp: vec![0.002; 4],
            skin_material: m,
            spar_material: m,
        }
    }

    fn tip_load(nodes: usize, p: f64) -> NodalLoads<f64> {
        let mut l = vec![[0.0; 6]; nodes];
        l[nodes - 1][2] = p;
        l
    }

    #[test]
    fn cantilever_tip_deflection() {
        let wing = uniform_wing(7);
        let lay = layout(1.0);
        let model = BeamModel::new(&wing, &lay).unwrap();
        let u = model.displacements(&tip_load(8, 100.0)).unwrap();
        let ei = model.flap_stiffness()[0];
        let l: f64 = 10.0;
        let exact = 100.0 * l.powi(3) / (3.0 * ei);
        assert!((u[7][2] - exact).abs() / exact < 1e-10);
    }

    #[test]
    fn zero_load_zero_response() {
        let wing = uniform_wing(7);
        let model = BeamModel::new(&wing, &layout(1.0)).unwrap();
        let r = model.analyze(&vec![[0.0; 6]; 8], &StructuralConfig::default()).unwrap();
        assert!(r.displacements.iter().flatten().all(|&d| d == 0.0));
        assert!(r.von_mises.iter().all(|&s| s == 0.0));
        assert!(r.failure.iter().all(|&g| g == -1.0));
    }

    #[test]
    fn stiffer_material_halves_deflection_keeps_stress() {
        let wing = uniform_wing(7);
        let cfg = StructuralConfig::default();
        let a = BeamModel::new(&wing, &layout(1.0)).unwrap().analyze(&tip_load(8, 50.0), &cfg).unwrap();
        let b = BeamModel::new(&wing, &layout(2.0)).unwrap().analyze(&tip_load(8, 50.0), &cfg).unwrap();
        assert!((a.tip_deflection / b.tip_deflection - 2.0).abs() < 1e-10);
        for (x, y) in a.von_mises.iter().zip(&b.von_mises) {
            assert!((x - y).abs() < 1e-9 * x);
        }
    }

    #[test]
    fn root_moment_matches_statics() {
        let wing = uniform_wing(7);
        let lay = layout(1.0);
        let model = BeamModel::new(&wing, &lay).unwrap();
        let r = model.analyze(&tip_load(8, 100.0), &StructuralConfig::default()).unwrap();
        let s = &model.sections()[0];
        let ei = model.flap_stiffness()[0];
        let expect = lay.skin_material.youngs_modulus * 1000.0 / ei * s.height / 2.0;
        assert!((r.skin_axial[0] - expect).abs() / expect < 1e-9);
        assert!(r.skin_axial[0] > 0.0);
    }

    #[test]
    fn torque_twists_nose_up() {
        let wing = uniform_wing(7);
        let model = BeamModel::new(&wing, &layout(1.0)).unwrap();
        let mut l = vec![[0.0; 6]; 8];
        l[7][4] = 10.0;
        let u = model.displacements(&l).unwrap();
        assert!(u[7][4] > 0.0);
        let gj = {
            let m = &layout(1.0).skin_material;
            model.sections()[0].torsional_stiffness(m.shear_modulus, m.shear_modulus)
        };
        assert!((u[7][4] - 100.0 / gj).abs() / u[7][4] < 1e-10);
    }

    #[test]
    fn convergence_with_refinement_under_uniform_load() {
        let err = |n: usize| {
            let wing = uniform_wing(n);
            let model = BeamModel::new(&wing, &layout(1.0)).unwrap();
            let q = 20.0;
            let dy = 10.0 / n as f64;
            let mut l = vec![[0.0; 6]; n + 1];
            for e in 0..n {
                l[e][2] += q * dy / 2.0;
                l[e + 1][2] += q * dy / 2.0;
            }
            let u = model.displacements(&l).unwrap();
            let exact = q * 10f64.powi(4) / (8.0 * model.flap_stiffness()[0]);
            (u[n][2] - exact).abs() / exact
        };
        let (e7, e14, e28) = (err(7), err(14), err(28));
        assert!(e7 > e14 && e14 > e28, "{e7} {e14} {e28}");
    }

    #[test]
    fn ks_bounds() {
        assert_eq!(ks_aggregate(&[0.5], 50.0), 0.5);
        let two: f64 = ks_aggregate(&[0.3, 0.3], 50.0);
        assert!((two - (0.3 + 2f64.ln() / 50.0)).abs() < 1e-14);
        let k: f64 = ks_aggregate(&[0.1, 0.9], 50.0);
        // exp(-40) is below the resolution of 0.9, so the excess rounds away.
        assert!(k >= 0.9 && k <= 0.9 + 2f64.ln() / 50.0);
        let close: f64 = ks_aggregate(&[0.88, 0.9], 50.0);
        assert!(close > 0.9 && close <= 0.9 + 2f64.ln() / 50.0);
    }

    #[test]
    fn interaction_and_failure_margins() {
        assert_eq!(buckling_interaction(1.0, 0.0), 0.0);
        assert_eq!(buckling_interaction(0.5, 0.5), -0.25);
        assert_eq!(failure_margin(0.0, 600e6, 1.5), -1.0);
        assert!(failure_margin(400e6f64, 600e6, 1.5).abs() < 1e-15);
        assert!((failure_margin(300e6f64, 600e6, 1.5) + 0.25).abs() < 1e-15);
    }

    #[test]
    fn thinner_skin_is_less_stable() {
        let cfg = StructuralConfig::default();
        let p = |t: f64| BucklingParams::new(&cfg, 0.5, 1.0, 70e9, 0.3, t);
        let (sc1, ss1) = p(0.002).critical_stresses(0.002).unwrap();
        let (sc2, ss2) = p(0.001).critical_stresses(0.001).unwrap();
        let (sigma, tau) = (20e6, 5e6);
        let g1 = buckling_interaction(sigma / sc1, tau / ss1);
        let g2 = buckling_interaction(sigma / sc2, tau / ss2);
        assert!(g2 > g1);
        assert!((sc1 / sc2 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn masses_match_hand_volumes() {
        let wing = uniform_wing(7);
        let n = 7;
        let m = structural_masses(&wing, &vec![0.002; n], &vec![0.003; n], 1000.0, 2000.0).unwrap();
        // Box 0.5 wide, 0.12 tall, 20 m of span.
        let skin = 2.0 * 0.5 * 0.002 * 20.0 * 1000.0;
        let spar = 2.0 * 0.003 * (0.12 - 0.004) * 20.0 * 2000.0;
        assert!((m.skin - skin).abs() < 1e-9 && (m.spar - spar).abs() < 1e-9);
        let zero = structural_masses(&wing, &vec![0.0; n], &vec![0.0; n], 1000.0, 2000.0).unwrap();
        assert_eq!(zero.wing, 0.0);
        let dbl = structural_masses(&wing, &vec![0.002; n], &vec![0.003; n], 1000.0, 4000.0).unwrap();
        assert!((dbl.spar - 2.0 * m.spar).abs() < 1e-9 && dbl.skin == m.skin);
    }

    #[test]
    fn inertia_relief_reduces_root_stress() {
        let wing = uniform_wing(7);
        let lay = layout(1.0);
        let cfg = StructuralConfig::default();
        let lift = {
            let mut l = vec![[0.0; 6]; 8];
            for node in l.iter_mut().skip(1) {
                node[2] = 200.0;
            }
            l
        };
        let bare = solve_fem(&wing, &lay, &lift, &[], &[0.0; 7], 0.0, &cfg).unwrap();
        let relieved = solve_fem(&wing, &lay, &lift, &[(3.0, 20.0)], &[5.0; 7], 2.0, &cfg).unwrap();
        assert!(relieved.von_mises[0] < bare.von_mises[0]);
    }

    #[test]
    fn point_mass_split_conserves_weight() {
        let wing = uniform_wing(7);
        let model = BeamModel::new(&wing, &layout(1.0)).unwrap();
        let base = model.inertial_loads(&[], &[0.0; 7], 1.0).unwrap();
        let with = model.inertial_loads(&[(3.3, 12.0)], &[0.0; 7], 1.0).unwrap();
        let d: f64 = with.iter().zip(&base).map(|(a, b)| a[2] - b[2]).sum();
        assert!((d + 12.0 * GRAVITY).abs() < 1e-9);
        let moment: f64 = with
            .iter()
            .zip(&base)
            .zip(&wing.node_y)
            .map(|((a, b), y)| (a[2] - b[2]) * y)
            .sum();
        assert!((moment + 12.0 * GRAVITY * 3.3).abs() < 1e-9);
    }
}
