//! Multi-start plans and the CO2-ratio sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{optimize, OptimizerSettings, Problem, RunResult};
use crate::design::DesignVector;
use crate::error::{Error, Result};
use crate::materials::{MaterialCatalogue, MaterialRecord};

/// `count` regularly spaced vectors from `low` to `high` (inclusive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartRange {
    pub low: Vec<f64>,
    #[serde(default)]
    pub high: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub count: usize,
}

fn one() -> usize {
    1
}

impl StartRange {
    pub fn single(v: Vec<f64>) -> Self {
        Self {
            low: v,
            high: None,
            count: 1,
        }
    }

    pub fn spaced(low: Vec<f64>, high: Vec<f64>, count: usize) -> Self {
        Self {
            low,
            high: Some(high),
            count,
        }
    }

    fn scaled(base: &[f64], lo: f64, hi: f64, count: usize) -> Self {
        Self::spaced(
            base.iter().map(|b| b * lo).collect(),
            base.iter().map(|b| b * hi).collect(),
            count,
        )
    }

    pub fn values(&self) -> Result<Vec<Vec<f64>>> {
        if self.count == 0 {
            return Err(Error::InvalidInput("start range needs at least one value".into()));
        }
        let Some(high) = &self.high else {
            if self.count != 1 {
                return Err(Error::InvalidInput("start range with several values needs `high`".into()));
            }
            return Ok(vec![self.low.clone()]);
        };
        if high.len() != self.low.len() {
            return Err(Error::InvalidInput("start range `low` and `high` differ in length".into()));
        }
        if self.count == 1 {
            return Ok(vec![self.low.clone()]);
        }
        let n = (self.count - 1) as f64;
        Ok((0..self.count)
            .map(|k| {
                let s = k as f64 / n;
                self.low.iter().zip(high).map(|(l, h)| l + (h - l) * s).collect()
            })
            .collect())
    }
}

/// Per-variable start lists, combined as a Cartesian product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiStartPlan {
    /// `[spar, skin]`, kg/m³.
    pub density: StartRange,
    pub twist: StartRange,
    pub t_skin: StartRange,
    pub t_spar: StartRange,
    pub tc: StartRange,
    pub span: StartRange,
    pub root_chord: StartRange,
    pub taper: StartRange,
    pub motor_location: StartRange,
}

impl Default for MultiStartPlan {
    fn default() -> Self {
        Self {
            density: StartRange::spaced(vec![500.0, 500.0], vec![600.0, 600.0], 2),
            twist: StartRange::single(vec![10.0, 15.0, 15.0, 15.0]),
            t_skin: StartRange::scaled(&[0.5, 1.0, 1.5, 2.0], 0.002, 0.004, 3),
            t_spar: StartRange::scaled(&[1.0; 4], 0.001, 0.003, 3),
            tc: StartRange::scaled(&[0.75, 1.0, 1.0, 1.25], 0.05, 0.17, 3),
            span: StartRange::spaced(vec![25.0], vec![100.0], 4),
            root_chord: StartRange::single(vec![1.5]),
            taper: StartRange::single(vec![0.3]),
            motor_location: StartRange::single(vec![0.3]),
        }
    }
}

impl MultiStartPlan {
    /// Plan with one start: the given design.
    pub fn single(d: &DesignVector<f64>) -> Self {
        Self {
            density: StartRange::single(vec![d.spar_density, d.skin_density]),
            twist: StartRange::single(d.twist_cp.to_vec()),
            t_skin: StartRange::single(d.t_skin_cp.to_vec()),
            t_spar: StartRange::single(d.t_spar_cp.to_vec()),
            tc: StartRange::single(d.tc_cp.to_vec()),
            span: StartRange::single(vec![d.span]),
            root_chord: StartRange::single(vec![d.root_chord]),
            taper: StartRange::single(vec![d.taper]),
            motor_location: StartRange::single(vec![d.motor_location]),
        }
    }

    /// Cartesian product in the order density, twist, skin, spar, t/c,
    /// span, root chord, taper, motor location (last varies fastest).
    pub fn enumerate(&self) -> Result<Vec<DesignVector<f64>>> {
        let lists = [
            (&self.density, 2, "density"),
            (&self.twist, 4, "twist"),
            (&self.t_skin, 4, "t_skin"),
            (&self.t_spar, 4, "t_spar"),
            (&self.tc, 4, "tc"),
            (&self.span, 1, "span"),
            (&self.root_chord, 1, "root_chord"),
            (&self.taper, 1, "taper"),
            (&self.motor_location, 1, "motor_location"),
        ];
        let mut values = Vec::with_capacity(lists.len());
        for (range, len, name) in lists {
            let v = range.values()?;
            if v.iter().any(|x| x.len() != len) {
                return Err(Error::InvalidInput(format!("start values for {name} need {len} entries")));
            }
            values.push(v);
        }
        let mut out: Vec<Vec<f64>> = vec![Vec::new()];
        for list in &values {
            out = out
                .iter()
                .flat_map(|prefix| {
                    list.iter().map(move |v| {
                        let mut p = prefix.clone();
                        p.extend_from_slice(v);
                        p
                    })
                })
                .collect();
        }
        out.iter().map(|x| DesignVector::from_slice(x)).collect()
    }

    pub fn num_starts(&self) -> Result<usize> {
        let counts = [
            &self.density,
            &self.twist,
            &self.t_skin,
            &self.t_spar,
            &self.tc,
            &self.span,
            &self.root_chord,
            &self.taper,
            &self.motor_location,
        ];
        Ok(counts.iter().map(|r| r.count).product())
    }
}

/// All runs of a multi-start plus the index of the best feasible one.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiStartOutcome {
    pub runs: Vec<RunResult>,
    pub best: usize,
    /// Best feasible objective after each run, in start order.
    pub best_so_far: Vec<Option<f64>>,
}

impl MultiStartOutcome {
    pub fn best_run(&self) -> &RunResult {
        &self.runs[self.best]
    }
}

/// Run [`optimize`] from every start on `jobs` worker threads (0 picks the
/// rayon default). Results keep start order regardless of scheduling.
pub fn multi_start(
    problem: &Problem,
    starts: &[DesignVector<f64>],
    settings: &OptimizerSettings,
    jobs: usize,
) -> Result<MultiStartOutcome> {
    if starts.is_empty() {
        return Err(Error::InvalidInput("multi-start plan is empty".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidInput(format!("worker pool: {e}")))?;
    let runs: Vec<RunResult> = pool.install(|| {
        starts
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                let r = optimize(problem, s, settings);
                if let Ok(r) = &r {
                    log::info!(
                        "start {}/{}: {:?}, objective {:?}",
                        i + 1,
                        starts.len(),
                        r.status,
                        r.objective()
                    );
                }
                r
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut best: Option<(usize, f64)> = None;
    let mut best_so_far = Vec::with_capacity(runs.len());
    for (i, r) in runs.iter().enumerate() {
        if let (true, Some(f)) = (r.is_feasible(), r.objective()) {
            if best.is_none_or(|(_, b)| f < b) {
                best = Some((i, f));
            }
        }
        best_so_far.push(best.map(|(_, f)| f));
    }
    match best {
        Some((i, _)) => Ok(MultiStartOutcome {
            runs,
            best: i,
            best_so_far,
        }),
        None => Err(Error::AllRunsFailed {
            statuses: runs.iter().map(|r| r.status.as_str().to_string()).collect(),
        }),
    }
}

/// Material selected at one CO2 ratio.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub ratio: f64,
    pub spar_material: Option<String>,
    pub skin_material: Option<String>,
    pub objective: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub low_material: String,
    pub high_material: String,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    /// Midpoint between the largest ratio at which the heavier material
    /// wins both walls and the next ratio sampled above it.
    pub fn flip_threshold(&self) -> Option<f64> {
        let mut pts: Vec<&SweepPoint> = self.points.iter().collect();
        pts.sort_by(|a, b| a.ratio.total_cmp(&b.ratio));
        let wins = |p: &SweepPoint| {
            p.spar_material.as_deref() == Some(&self.high_material)
                && p.skin_material.as_deref() == Some(&self.high_material)
        };
        let last = pts.iter().rposition(|p| wins(p))?;
        let above = pts.get(last + 1)?;
        Some(0.5 * (pts[last].ratio + above.ratio))
    }
}

/// For each ratio, rebuild a two-entry catalogue where `high`'s CO2 per
/// kilogram equals `ratio` times `low`'s, and optimize from both ends of the
/// density range over the given starts.
pub fn co2_ratio_sweep(
    problem: &Problem,
    low: &MaterialRecord,
    high: &MaterialRecord,
    ratios: &[f64],
    starts: &[DesignVector<f64>],
    settings: &OptimizerSettings,
    jobs: usize,
) -> Result<SweepResult> {
    if ratios.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
        return Err(Error::InvalidInput("CO2 ratios must lie in (0, 1]".into()));
    }
    let mut points = Vec::with_capacity(ratios.len());
    for &ratio in ratios {
        let mut scaled = high.clone();
        scaled.co2_primary = ratio * low.co2_per_kg();
        scaled.co2_recycled = scaled.co2_primary;
        let catalogue = MaterialCatalogue::new(vec![low.clone(), scaled])?;
        let mut p = problem.clone();
        p.catalogue = catalogue;
        p.bounds = problem.bounds.clone();
        p.bounds.lower.spar_density = low.density;
        p.bounds.lower.skin_density = low.density;
        p.bounds.upper.spar_density = high.density;
        p.bounds.upper.skin_density = high.density;
        let mut all = Vec::with_capacity(2 * starts.len());
        for s in starts {
            for d in [low.density, high.density] {
                let mut s = s.clone();
                s.spar_density = d;
                s.skin_density = d;
                all.push(s);
            }
        }
        let out = multi_start(&p, &all, settings, jobs)?;
        let best = out.best_run();
        log::info!(
            "ratio {ratio}: spar {:?}, skin {:?}",
            best.spar_material,
            best.skin_material
        );
        points.push(SweepPoint {
            ratio,
            spar_material: best.spar_material.clone(),
            skin_material: best.skin_material.clone(),
            objective: best.objective().unwrap_or(f64::NAN),
        });
    }
    Ok(SweepResult {
        low_material: low.name.clone(),
        high_material: high.name.clone(),
        points,
    })
}
