//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p ecomdo --test acceptance`. Exits non-zero when
//! any criterion fails.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use ecomdo::{load_config, run_command, Command, RunConfig, RunOptions};
use ecomdo_core::aero::{solve_vlm, AeroConfig, FlowConditions};
use ecomdo_core::design::DesignVector;
use ecomdo_core::energy::run_mda;
use ecomdo_core::geometry::{build_wing, PlanformSpec};
use ecomdo_core::materials::{interpolate, material_gradient, InterpolationMode, MaterialCatalogue, Property};
use ecomdo_core::optimizer::{
    co2_ratio_sweep, evaluate, multi_start, optimize, verify_gradients, MaterialChoice, MultiStartPlan, Objective,
    Problem, StartRange,
};
use ecomdo_core::scalar::Dual;
use ecomdo_core::structures::{ks_aggregate, BeamModel, StructuralLayout};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Buckling and strength indices as published, in catalogue order.
const PUBLISHED_INDICES: [(&str, f64, f64); 7] = [
    ("Material 1", 0.1539, 25885.0),
    ("Material 2", 0.1543, 10484.0),
    ("Material 3", 0.1544, 25959.0),
    ("CFRP", 0.05049, 8901.0),
    ("GFRP", 0.24153, 22184.0),
    ("Aluminum", 0.1720, 18331.0),
    ("Steel", 0.2302, 22119.0),
];

type Check = Result<String, String>;

fn config() -> RunConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/hale.toml");
    load_config(&path).expect("shipped configuration loads")
}

fn out_dir() -> PathBuf {
    std::env::temp_dir().join(format!("ecomdo-acceptance-{}", std::process::id()))
}

fn ensure(ok: bool, msg: String) -> Check {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_1() -> Check {
    let opts = RunOptions {
        out: Some(out_dir()),
        ..RunOptions::default()
    };
    let out = run_command(Command::Indices, &config(), &opts).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for (name, buckling, strength) in PUBLISHED_INDICES {
        let row = out
            .report
            .indices
            .iter()
            .find(|r| r.name == name)
            .ok_or(format!("{name} missing"))?;
        worst = worst
            .max((row.indices.buckling / buckling - 1.0).abs())
            .max((row.indices.strength / strength - 1.0).abs());
    }
    ensure(
        worst < 0.01 && out.exit_code == 0,
        format!("14 indices, worst relative error {:.3}%", worst * 100.0),
    )
}

fn criterion_2() -> Check {
    let cat = MaterialCatalogue::reference();
    let pen = InterpolationMode::Penalized { p: 5.0 };
    let recs = cat.records();
    for rec in recs {
        for prop in Property::ALL {
            for mode in [InterpolationMode::Linear, pen] {
                let v: f64 = interpolate(&cat, mode, rec.density, prop, prop.natural_direction()).map_err(|e| e.to_string())?;
                let want = rec.property(prop);
                if (v - want).abs() > 4.0 * f64::EPSILON * want.abs() {
                    return Err(format!("{} {prop:?} endpoint {v} vs {want}", rec.name));
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_grad: f64 = 0.0;
    for _ in 0..1000 {
        let i = rng.gen_range(0..recs.len() - 1);
        let s: f64 = rng.gen_range(0.01..0.99);
        let rho = recs[i].density + s * (recs[i + 1].density - recs[i].density);
        for prop in Property::ALL {
            let dir = prop.natural_direction();
            let lin: f64 = interpolate(&cat, InterpolationMode::Linear, rho, prop, dir).unwrap();
            let p: f64 = interpolate(&cat, pen, rho, prop, dir).unwrap();
            let slack = 1e-12 * lin.abs();
            let never_better = match prop {
                Property::Co2PerKg => p >= lin - slack,
                _ => p <= lin + slack,
            };
            if !never_better {
                return Err(format!("{prop:?} at {rho:.2}: penalized {p} beats linear {lin}"));
            }
            let h = 1e-6 * rho;
            let fd = (interpolate::<f64>(&cat, pen, rho + h, prop, dir).unwrap()
                - interpolate::<f64>(&cat, pen, rho - h, prop, dir).unwrap())
                / (2.0 * h);
            let g = material_gradient(&cat, pen, rho, prop, dir).unwrap();
            let dual = interpolate(&cat, pen, Dual::variable(rho), prop, dir).unwrap().eps;
            if recs[i].property(prop) == recs[i + 1].property(prop) {
                // Constant bracket: the differences are pure roundoff.
                if g != 0.0 || dual != 0.0 {
                    return Err(format!("{prop:?} at {rho:.2}: nonzero slope in a constant bracket"));
                }
                continue;
            }
            worst_grad = worst_grad.max((g - fd).abs() / fd.abs()).max((dual - fd).abs() / fd.abs());
        }
    }
    ensure(
        worst_grad < 1e-6,
        format!("endpoints exact, 1000 interior points ordered, worst gradient error {worst_grad:.1e}"),
    )
}

fn criterion_3() -> Check {
    let wing = build_wing(&PlanformSpec::<f64> {
        span: 20.0,
        root_chord: 1.0,
        taper_ratio: 1.0,
        twist_cp: vec![0.0; 4],
        tc_cp: vec![0.12; 4],
        num_span_elements: 7,
    })
    .map_err(|e| e.to_string())?;
    let cat = MaterialCatalogue::reference();
    let al = cat.material::<f64>(InterpolationMode::Linear, 2800.0).unwrap();
    let t = 0.002;
    let layout = StructuralLayout {
        t_skin_cp: vec![t; 4],
        t_spar_cp: vec![t; 4],
        skin_material: al,
        spar_material: al,
    };
    let model = BeamModel::new(&wing, &layout).map_err(|e| e.to_string())?;
    let p = 250.0;
    let mut loads = vec![[0.0; 6]; model.num_nodes()];
    loads[model.num_nodes() - 1][2] = p;
    let u = model.displacements(&loads).map_err(|e| e.to_string())?;
    // Hollow rectangle: outer 0.5 x 0.12 m, walls 2 mm.
    let (b, h) = (0.5, 0.12);
    let i = (b * h * h * h - (b - 2.0 * t) * (h - 2.0 * t).powi(3)) / 12.0;
    let exact = p * 10.0_f64.powi(3) / (3.0 * 72.5e9 * i);
    let tip = u[model.num_nodes() - 1][2];
    let beam_err = (tip - exact).abs() / exact;

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let rho = 50.0;
    for _ in 0..1000 {
        let n = rng.gen_range(1..40);
        let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..1.0)).collect();
        let max = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ks: f64 = ks_aggregate(&g, rho);
        let upper = max + (n as f64).ln() / rho;
        if !(ks >= max && ks <= upper + 1e-12) {
            return Err(format!("KS {ks} outside [{max}, {upper}] for n = {n}"));
        }
    }
    ensure(
        beam_err < 0.02,
        format!("tip deflection error {:.2e}, KS bounds hold on 1000 vectors", beam_err),
    )
}

/// Prandtl lifting line by Glauert's series, `n` stations across the span.
fn lifting_line(span: f64, chord: f64, alpha: f64, n: usize) -> (f64, f64) {
    let a0 = 2.0 * std::f64::consts::PI;
    let ar = span / chord;
    let theta: Vec<f64> = (1..=n).map(|j| j as f64 * std::f64::consts::PI / (n + 1) as f64).collect();
    let m = DMatrix::from_fn(n, n, |j, k| {
        let kk = (k + 1) as f64;
        (kk * theta[j]).sin() * (4.0 * span / (a0 * chord) + kk / theta[j].sin())
    });
    let rhs = DVector::from_element(n, alpha);
    let a = m.lu().solve(&rhs).expect("lifting-line system is regular");
    let cl = std::f64::consts::PI * ar * a[0];
    let cdi = std::f64::consts::PI * ar * (0..n).map(|k| (k + 1) as f64 * a[k] * a[k]).sum::<f64>();
    (cl, cdi)
}

fn criterion_4() -> Check {
    let flow = FlowConditions {
        speed: 27.0,
        air_density: 0.0889,
        viscosity: 1.42e-5,
    };
    let cfg = AeroConfig::default();
    let wing = |twist: f64, n: usize| {
        build_wing(&PlanformSpec::<f64> {
            span: 20.0,
            root_chord: 1.0,
            taper_ratio: 1.0,
            twist_cp: vec![twist; 4],
            tc_cp: vec![0.12; 4],
            num_span_elements: n,
        })
        .unwrap()
    };
    let zero = solve_vlm(&wing(0.0, 7), &flow, &cfg, 0.0).map_err(|e| e.to_string())?;
    if !(zero.cl == 0.0 && zero.cdi == 0.0 && zero.lift == 0.0 && zero.gamma.iter().all(|&g| g == 0.0)) {
        return Err(format!("zero incidence gives CL {} CDi {}", zero.cl, zero.cdi));
    }
    // The production mesh has 7 elements per semi-span; the oracle runs the
    // same solver at 28, the resolution of the grid-sanity check.
    let alpha_deg: f64 = 5.0;
    let (cl_ll, cdi_ll) = lifting_line(20.0, 1.0, alpha_deg.to_radians().sin(), 200);
    let ar = 20.0;
    let e_ll = cl_ll * cl_ll / (std::f64::consts::PI * ar * cdi_ll);
    let errors = |n: usize| -> Result<(f64, f64), String> {
        let vlm = solve_vlm(&wing(alpha_deg, n), &flow, &cfg, 0.0).map_err(|e| e.to_string())?;
        let cdi_oracle = vlm.cl * vlm.cl / (std::f64::consts::PI * ar * e_ll);
        Ok(((vlm.cl - cl_ll).abs() / cl_ll, (vlm.cdi - cdi_oracle).abs() / cdi_oracle))
    };
    let (cl7, cdi7) = errors(7)?;
    let (cl28, cdi28) = errors(28)?;
    ensure(
        cl28 < 0.05 && cdi28 < 0.10,
        format!(
            "zero lift exact; lifting-line CL {cl_ll:.4}, e {e_ll:.3}; 28 elements: CL {:.2}%, CDi {:.2}% (7 elements: {:.2}%, {:.2}%)",
            cl28 * 100.0,
            cdi28 * 100.0,
            cl7 * 100.0,
            cdi7 * 100.0
        ),
    )
}

fn criterion_5() -> Check {
    let cfg = config();
    let analysis = cfg.analysis_config();
    let cat = cfg.catalogue().map_err(|e| e.to_string())?;
    let design = DesignVector::validation_case(504.5);
    let state = run_mda(&design, &cat, InterpolationMode::Penalized { p: 5.0 }, &analysis).map_err(|e| e.to_string())?;
    let residual = state.reevaluation_residual(&analysis).map_err(|e| e.to_string())?;
    let fixed = analysis.energy.fixed_mass_kg;
    let ratio = state.mass.total / fixed;
    ensure(
        residual < 1e-6 && ratio > 10.0,
        format!(
            "residual {residual:.1e} after {} iterations, total {:.1} kg = {:.1} x fixed mass",
            state.iterations, state.mass.total, ratio
        ),
    )
}

/// Eight starts: the plan's two densities times its four spans.
fn reduced_plan() -> MultiStartPlan {
    let mut plan = MultiStartPlan::default();
    for r in [&mut plan.t_skin, &mut plan.t_spar, &mut plan.tc] {
        let mid = r.values().unwrap()[1].clone();
        *r = StartRange::single(mid);
    }
    plan
}

fn criterion_6() -> Check {
    let cfg = config();
    let frozen = MaterialChoice::Frozen {
        spar_density: 504.5,
        skin_density: 504.5,
    };
    let mass = cfg.problem(Objective::Mass, frozen).map_err(|e| e.to_string())?;
    let co2 = mass.with_objective(Objective::Co2);
    let mut plan = reduced_plan();
    plan.density = StartRange::single(vec![504.5, 504.5]);
    let starts = plan.enumerate().map_err(|e| e.to_string())?;
    let bm = multi_start(&mass, &starts, &cfg.optimizer, 0).map_err(|e| e.to_string())?;
    let bc = multi_start(&co2, &starts, &cfg.optimizer, 0).map_err(|e| e.to_string())?;
    let (xm, xc) = (bm.best_run().design().unwrap(), bc.best_run().design().unwrap());
    let mode = InterpolationMode::Penalized { p: cfg.optimizer.penalty };
    let m_at_m = bm.best_run().objective().unwrap();
    let c_at_c = bc.best_run().objective().unwrap();
    let m_at_c = evaluate(&mass, xc, mode).map_err(|e| e.to_string())?.objective;
    let c_at_m = evaluate(&co2, xm, mode).map_err(|e| e.to_string())?.objective;
    let dm = (m_at_c - m_at_m).abs() / m_at_m;
    let dc = (c_at_m - c_at_c).abs() / c_at_c;
    ensure(
        dm < 0.01 && dc < 0.01,
        format!(
            "mass {m_at_m:.2} vs {m_at_c:.2} kg ({:.3}%), CO2 {c_at_c:.1} vs {c_at_m:.1} kg ({:.3}%)",
            dm * 100.0,
            dc * 100.0
        ),
    )
}

fn criterion_7() -> Check {
    let cfg = config();
    let problem = cfg.problem(Objective::Co2, MaterialChoice::Free).map_err(|e| e.to_string())?;
    let starts = reduced_plan().enumerate().map_err(|e| e.to_string())?;
    let out = multi_start(&problem, &starts, &cfg.optimizer, 0).map_err(|e| e.to_string())?;
    let best = out.best_run();
    let d = best.design().unwrap();
    ensure(
        starts.len() == 8
            && best.spar_material.as_deref() == Some("Material 1")
            && best.skin_material.as_deref() == Some("Material 1")
            && (d.spar_density - 504.5).abs() <= 1.0
            && (d.skin_density - 504.5).abs() <= 1.0,
        format!(
            "{} starts, spar {:?} skin {:?}, {:.1} kgCO2",
            starts.len(),
            best.spar_material,
            best.skin_material,
            best.objective().unwrap()
        ),
    )
}

fn criterion_8() -> Check {
    let cfg = config();
    let problem = cfg.problem(Objective::Co2, MaterialChoice::Free).map_err(|e| e.to_string())?;
    let cat = &problem.catalogue;
    let mut plan = reduced_plan();
    plan.density = StartRange::single(vec![504.5, 504.5]);
    let starts = plan.enumerate().map_err(|e| e.to_string())?;
    let sweep = co2_ratio_sweep(
        &problem,
        cat.get("Material 1").unwrap(),
        cat.get("Material 3").unwrap(),
        &cfg.sweep.ratios,
        &starts,
        &cfg.optimizer,
        0,
    )
    .map_err(|e| e.to_string())?;
    let winner = |ratio: f64| {
        sweep
            .points
            .iter()
            .find(|p| (p.ratio - ratio).abs() < 1e-12)
            .and_then(|p| (p.spar_material == p.skin_material).then(|| p.spar_material.clone()).flatten())
    };
    let flip = sweep.flip_threshold();
    let table: Vec<String> = sweep
        .points
        .iter()
        .map(|p| {
            let tag = |m: &Option<String>| match m.as_deref() {
                Some("Material 1") => "1",
                Some("Material 3") => "3",
                _ => "?",
            };
            format!("{:.2}:{}{}", p.ratio, tag(&p.spar_material), tag(&p.skin_material))
        })
        .collect();
    ensure(
        winner(1.0).as_deref() == Some("Material 1")
            && winner(0.5).as_deref() == Some("Material 3")
            && flip.is_some_and(|f| (0.6..=0.9).contains(&f)),
        format!("flip at {flip:?} [{}]", table.join(" ")),
    )
}

fn criterion_9() -> Check {
    let opts = RunOptions {
        out: Some(out_dir()),
        ..RunOptions::default()
    };
    let out = run_command(Command::Validate, &config(), &opts).map_err(|e| e.to_string())?;
    let best = out.report.best.as_ref().ok_or("no optimum reported")?;
    let e = &best.evaluation;
    let (m, span, cl) = (e.mass.total, e.design.span, e.performance.cl);
    let shares = best.mass_shares.sum();
    ensure(
        out.exit_code == 0
            && (120.0..=500.0).contains(&m)
            && (30.0..=90.0).contains(&span)
            && (0.8..=1.6).contains(&cl)
            && (shares - 1.0).abs() < 1e-12
            && best.revalidation_error < 1e-9,
        format!(
            "{:?}, {m:.1} kg, span {span:.2} m, CL {cl:.3}, shares sum {shares:.15}, revalidation {:.1e}",
            best.status, best.revalidation_error
        ),
    )
}

fn criterion_10() -> Check {
    let cfg = config();
    let cat = cfg.catalogue().map_err(|e| e.to_string())?;
    let free = cfg.problem(Objective::Co2, MaterialChoice::Free).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let recs = cat.records();
    let mut worst: f64 = 0.0;
    let mut found = 0;
    let mut tried = 0;
    while found < 5 && tried < 40 {
        tried += 1;
        // Interior densities in one of the three lightest brackets, so the
        // density derivatives are two-sided.
        let i = rng.gen_range(0..3);
        let mut density = || recs[i].density + rng.gen_range(0.1..0.9) * (recs[i + 1].density - recs[i].density);
        let (spar_density, skin_density) = (density(), density());
        let mut start = DesignVector::validation_case(spar_density);
        start.skin_density = skin_density;
        start.span = rng.gen_range(40.0..70.0);
        start.motor_location = rng.gen_range(0.1..0.9);
        for t in start.twist_cp.iter_mut() {
            *t = rng.gen_range(5.0..15.0);
        }
        let frozen = Problem {
            material: MaterialChoice::Frozen {
                spar_density,
                skin_density,
            },
            ..free.clone()
        };
        let Ok(run) = optimize(&frozen, &start, &cfg.optimizer) else {
            continue;
        };
        if !run.is_feasible() {
            continue;
        }
        let design = run.design().unwrap();
        let mode = InterpolationMode::Penalized { p: cfg.optimizer.penalty };
        let check = verify_gradients(&free, design, mode, cfg.optimizer.lift_tolerance, 1e-6).map_err(|e| e.to_string())?;
        worst = worst.max(check.max_error);
        found += 1;
    }
    ensure(
        found == 5 && worst < 1e-4,
        format!("{found} feasible designs, 22 variables, worst relative error {worst:.1e}"),
    )
}

fn criterion_11() -> Check {
    let plan = MultiStartPlan::default();
    let starts = plan.enumerate().map_err(|e| e.to_string())?;
    let skins: Vec<[f64; 4]> = {
        let mut v: Vec<[f64; 4]> = starts.iter().map(|s| s.t_skin_cp).collect();
        v.sort_by(|a, b| a[0].total_cmp(&b[0]));
        v.dedup();
        v
    };
    let want = [
        [0.001, 0.002, 0.003, 0.004],
        [0.0015, 0.003, 0.0045, 0.006],
        [0.002, 0.004, 0.006, 0.008],
    ];
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-15);
    let skins_ok = skins.len() == 3 && skins.iter().zip(&want).all(|(a, b)| close(a, b));
    let first = &starts[0];
    let first_ok = first.spar_density == 500.0
        && first.twist_cp == [10.0, 15.0, 15.0, 15.0]
        && close(&first.t_spar_cp, &[0.001; 4])
        && close(&first.tc_cp, &[0.0375, 0.05, 0.05, 0.0625])
        && first.span == 25.0
        && first.root_chord == 1.5
        && first.taper == 0.3
        && first.motor_location == 0.3;
    let last = &starts[215];
    let last_ok = last.skin_density == 600.0 && close(&last.tc_cp, &[0.1275, 0.17, 0.17, 0.2125]) && last.span == 100.0;
    ensure(
        starts.len() == 216 && skins_ok && first_ok && last_ok,
        format!("{} starts, skin triples {:?}", starts.len(), skins),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Check, Duration); 11] = [
        ("Ashby indices", criterion_1, Duration::from_secs(1)),
        ("interpolation suite", criterion_2, Duration::from_secs(5)),
        ("structural oracles", criterion_3, Duration::from_secs(5)),
        ("aero oracles", criterion_4, Duration::from_secs(10)),
        ("MDA self-consistency", criterion_5, Duration::from_secs(30)),
        ("objective equivalence", criterion_6, Duration::from_secs(600)),
        ("material selection", criterion_7, Duration::from_secs(1800)),
        ("CO2-ratio flip", criterion_8, Duration::from_secs(3600)),
        ("validation-mode sanity", criterion_9, Duration::from_secs(1800)),
        ("gradient verification", criterion_10, Duration::from_secs(300)),
        ("multi-start plan", criterion_11, Duration::from_secs(1)),
    ];
    let mut failed = 0;
    for (k, (name, check, limit)) in criteria.into_iter().enumerate() {
        let t = Instant::now();
        let result = check();
        let elapsed = t.elapsed();
        let (ok, detail) = match result {
            Ok(d) => (elapsed < limit, d),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<24} {} ({:.2} s of {} s) {}",
            k + 1,
            name,
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            limit.as_secs(),
            detail
        );
    }
    let _ = std::fs::remove_dir_all(out_dir());
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
