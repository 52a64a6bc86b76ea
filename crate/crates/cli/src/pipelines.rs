//! The five pipelines. Each fills a [`RunReport`] and writes its field artifacts.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use stablekernel::density::{invert_density, DensityField, FieldKind};
use stablekernel::drift::DriftSeriesState;
use stablekernel::grid::{Lattice, SpaceTimeGrid};
use stablekernel::model::ModelSpec;
use stablekernel::montecarlo::{density_agreement, estimate_exit_sweep, simulate_paths, LatticeLaw, SampleSet, SimConfig};
use stablekernel::parametrix::{build, PairSet, ParametrixConfig, ParametrixRun};
use stablekernel::report::{Artifact, ConvergenceRecord, RatioCell, RunReport, Slice, Status};
use stablekernel::verify::{
    density_reports, exit_report, model_reports, run_criteria, summarize, summarize_drift, verify_preset,
    CriterionOutcome, Resolution, Workbench,
};

use crate::config::RunConfig;
use crate::ConfigError;

/// Times at which slices are exported, snapped to the nearest stored node.
const SLICE_TIMES: [f64; 3] = [0.25, 0.5, 1.0];

pub struct Context<'a> {
    pub cfg: &'a RunConfig,
    pub spec: Option<ModelSpec>,
    pub label: String,
    pub out: &'a Path,
    pub report: RunReport,
}

impl Context<'_> {
    fn spec(&self) -> Result<&ModelSpec> {
        self.spec.as_ref().ok_or_else(|| ConfigError("this pipeline needs a model".into()).into())
    }

    fn artifact(&mut self, kind: &str, name: &str) -> PathBuf {
        self.report.artifacts.push(Artifact { kind: kind.into(), path: name.into() });
        self.out.join(name)
    }

    fn write_field(&mut self, field: &DensityField, stem: &str) -> Result<()> {
        let csv = self.artifact("field_csv", &format!("{stem}.csv"));
        field.write_csv(BufWriter::new(File::create(&csv).with_context(|| format!("creating {}", csv.display()))?))?;
        let bin = self.artifact("field_binary", &format!("{stem}.stkd"));
        field.write_binary(BufWriter::new(File::create(&bin).with_context(|| format!("creating {}", bin.display()))?))?;
        Ok(())
    }

    /// Audits the model; returns false (with the failing reports recorded) if it is rejected.
    fn admit_model(&mut self) -> Result<bool> {
        let reps = model_reports(self.spec()?)?;
        let ok = reps.iter().all(|r| r.status != Status::Fail);
        self.report.reports.extend(reps);
        Ok(ok)
    }
}

fn nearest(times: &[f64], t: f64) -> usize {
    (0..times.len()).min_by(|&a, &b| (times[a] - t).abs().total_cmp(&(times[b] - t).abs())).unwrap_or(0)
}

/// Slices along the first axis (through the origin in 2D) at the exported times.
fn field_slices(field: &DensityField, label: &str) -> Vec<Slice> {
    let lat = *field.lattice();
    let idx: Vec<usize> = (0..lat.len()).filter(|&i| lat.point(i)[1..].iter().all(|c| c.abs() < 1e-12)).collect();
    let times = &field.grid.time_nodes;
    let mut ks: Vec<usize> = SLICE_TIMES.iter().map(|&t| nearest(times, t)).collect();
    ks.dedup();
    ks.into_iter()
        .map(|k| Slice {
            label: label.into(),
            t: times[k],
            x: idx.iter().map(|&i| lat.point(i)[0]).collect(),
            values: idx.iter().map(|&i| field.values[k][i]).collect(),
        })
        .collect()
}

/// `value/[(t/|x−y|^{1+α}) ∧ t^{−1/α}]` on the near-diagonal pairs with `x` at the centre.
fn heatmap(run: &ParametrixRun, set: &PairSet, value: impl Fn(usize, usize, usize) -> f64, label: &str) -> Vec<RatioCell> {
    let a = run.spec.alpha;
    let i0 = run.lattice.n / 2;
    let mut out = Vec::new();
    for (pos, &node) in set.nodes.iter().enumerate() {
        let t = run.mesh.times[node];
        for (pi, &(i, k, v)) in set.pairs.iter().enumerate() {
            if i != i0 {
                continue;
            }
            let env = if v == 0.0 { t.powf(-1.0 / a) } else { (t / v.abs().powf(1.0 + a)).min(t.powf(-1.0 / a)) };
            out.push(RatioCell {
                label: label.into(),
                t,
                x: run.lattice.coord(i),
                y: run.lattice.coord(k),
                ratio: (value(pos, i, k) - set.images[pi][pos]) / env,
            });
        }
    }
    out
}

pub fn density(ctx: &mut Context) -> Result<()> {
    if !ctx.admit_model()? {
        return Ok(());
    }
    let spec = ctx.spec()?.clone();
    let g = &ctx.cfg.grid;
    let y = if g.base_point.is_empty() { vec![0.0; spec.dim] } else { g.base_point.clone() };
    let grid = SpaceTimeGrid::new(Lattice::new(spec.dim, g.n, g.extent)?, g.times.clone())?;
    let f = invert_density(&spec, &y, &grid)?;
    ctx.write_field(&f, "density")?;
    ctx.report.plots.slices = field_slices(&f, "f");
    let reps = density_reports(&spec, g.n, g.extent, &ctx.cfg.tolerances)?;
    ctx.report.reports.extend(reps);
    Ok(())
}

fn parametrix_run(ctx: &mut Context, cfg: &ParametrixConfig) -> Result<Option<ParametrixRun>> {
    if !ctx.admit_model()? {
        return Ok(None);
    }
    let run = build(ctx.spec()?, cfg)?;
    let s = summarize(&ctx.label, Resolution::Default, &run, None, &ctx.cfg.tolerances)?;
    ctx.report.reports.extend(s.reports());
    ctx.report.convergence.push(ConvergenceRecord::Parametrix { label: "F".into(), log: run.log.clone() });
    Ok(Some(run))
}

pub fn parametrix(ctx: &mut Context) -> Result<()> {
    let Some(run) = parametrix_run(ctx, &ctx.cfg.parametrix.clone())? else { return Ok(()) };
    let k = run.lattice.n / 2;
    let field = run.slice_field(FieldKind::P, k)?;
    ctx.write_field(&field, "p")?;
    ctx.report.plots.slices = field_slices(&field, "p");
    let set = PairSet::new(&run)?;
    let vals: Vec<_> = set.nodes.iter().map(|&n| run.p_pointwise(n)).collect();
    ctx.report.plots.ratio_heatmap = heatmap(&run, &set, |pos, i, k| vals[pos][[i, k]], "p");
    Ok(())
}

pub fn drift(ctx: &mut Context) -> Result<()> {
    let Some(run) = parametrix_run(ctx, &ctx.cfg.parametrix.clone())? else { return Ok(()) };
    let mut st = DriftSeriesState::new(&run, ctx.cfg.drift.clone())?;
    st.build()?;
    let set = PairSet::new(&run)?;
    let d = summarize_drift(&mut st, &set, &ctx.cfg.tolerances)?;
    ctx.report.reports.extend([d.duhamel, d.gamma, d.mass, d.two_sided, d.gradient]);
    ctx.report.convergence.push(ConvergenceRecord::Drift { label: "l".into(), log: d.gamma_log });
    let k = run.lattice.n / 2;
    let field = st.field(None, k)?;
    ctx.write_field(&field, "l")?;
    let mut slices = field_slices(&field, "l");
    slices.extend(field_slices(&run.slice_field(FieldKind::P, k)?, "p"));
    ctx.report.plots.slices = slices;
    let vals: Vec<_> = set.nodes.iter().map(|&n| st.l_pointwise(n)).collect();
    ctx.report.plots.ratio_heatmap = heatmap(&run, &set, |pos, i, k| vals[pos][[i, k]], "l");
    Ok(())
}

/// Empirical density of wrapped samples on the cells of `lat`.
fn histogram(samples: &SampleSet, lat: &Lattice, origin: f64) -> Vec<f64> {
    let h = lat.spacing();
    let lo = lat.coord(0) - 0.5 * h;
    let mut counts = vec![0.0; lat.n];
    for &y in &samples.terminal {
        let j = (((y - origin - lo).rem_euclid(lat.extent)) / h) as usize;
        counts[j.min(lat.n - 1)] += 1.0;
    }
    let scale = 1.0 / (samples.terminal.len() as f64 * h);
    counts.iter().map(|c| c * scale).collect()
}

pub fn mc(ctx: &mut Context) -> Result<()> {
    if !ctx.admit_model()? {
        return Ok(());
    }
    let spec = ctx.spec()?.clone();
    let m = ctx.cfg.mc.clone();
    let tol = ctx.cfg.tolerances.clone();
    let mut sim = SimConfig::new(spec.clone(), m.paths, ctx.cfg.seed);
    if let Some(eps) = m.epsilon_cut {
        sim = sim.with_epsilon(eps);
    }
    sim.small_jump_mode = m.small_jump_mode;
    let samples = simulate_paths(&sim, m.x0, m.horizon)?;
    if m.write_samples {
        let path = ctx.artifact("samples_csv", "samples.csv");
        samples.write_csv(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))?;
    }

    // reference law: the FFT density when the kernel is x-independent and drift-free,
    // otherwise the constructed kernel at T
    let (lat, density, origin, allowance, label) = if spec.kernel.is_x_independent() && !spec.has_drift() {
        let g = &ctx.cfg.grid;
        let lat = Lattice::new(1, g.n, g.extent)?;
        let f = invert_density(&spec, &[0.0], &SpaceTimeGrid::new(lat, vec![m.horizon])?)?;
        (lat, f.values[0].clone(), m.x0, tol.ks_allowance_levy, "fft")
    } else {
        let cfg = ParametrixConfig { horizon: m.horizon, ..ctx.cfg.parametrix.clone() };
        let run = build(&spec, &cfg)?;
        let lat = run.lattice;
        let i = (0..lat.n)
            .find(|&i| (lat.coord(i) - m.x0).abs() <= 1e-9 * lat.spacing())
            .ok_or_else(|| ConfigError(format!("mc.x0 = {} is not a point of the coarse lattice", m.x0)))?;
        let last = run.mesh.len() - 1;
        let row = if spec.has_drift() {
            let mut st = DriftSeriesState::new(&run, ctx.cfg.drift.clone())?;
            st.build()?;
            st.l_pointwise(last).row(i).to_vec()
        } else {
            run.p_pointwise(last).row(i).to_vec()
        };
        (lat, row, 0.0, tol.ks_allowance_drift, if spec.has_drift() { "l" } else { "p" })
    };
    let law = LatticeLaw::new(lat, &density, origin, m.x0, m.horizon)?;
    let rep = density_agreement(&samples, &law, allowance)?
        .note(format!("reference {label}; {} candidate jumps, {} accepted", samples.stats.candidates, samples.stats.accepted));
    ctx.report.reports.push(rep);
    let x: Vec<f64> = (0..lat.n).map(|k| origin + lat.coord(k)).collect();
    ctx.report.plots.slices = vec![
        Slice { label: label.into(), t: m.horizon, x: x.clone(), values: density },
        Slice { label: "mc_histogram".into(), t: m.horizon, x, values: histogram(&samples, &lat, origin) },
    ];

    if let Some(t) = m.exit_time {
        let s = t.powf(1.0 / spec.alpha);
        let radii: Vec<f64> = m.exit_radii.iter().map(|r| r * s).collect();
        let sweep = estimate_exit_sweep(&sim, m.x0, t, &radii)?;
        ctx.report.reports.push(exit_report(&sweep, tol.exit_spread));
    }
    Ok(())
}

/// With a preset: every check that applies to it. Without: the numbered criteria.
pub fn verify(ctx: &mut Context, criteria: &[usize]) -> Result<Vec<CriterionOutcome>> {
    let mut wb = Workbench::new(ctx.cfg.parametrix.clone(), ctx.cfg.tolerances.clone());
    wb.seed = ctx.cfg.seed;
    match ctx.cfg.model.preset.clone() {
        Some(name) => {
            if ctx.spec()?.has_drift() != stablekernel::model::named_preset(&name)?.has_drift() {
                return Err(ConfigError("verify checks shipped presets as shipped; drop model.drift".into()).into());
            }
            let reps = verify_preset(&mut wb, &name)?;
            ctx.report.reports.extend(reps);
            for s in wb.summaries() {
                ctx.report.convergence.push(ConvergenceRecord::Parametrix { label: "F".into(), log: s.log.clone() });
                if let Some(d) = &s.drift {
                    ctx.report.convergence.push(ConvergenceRecord::Drift { label: "l".into(), log: d.gamma_log.clone() });
                }
            }
            Ok(Vec::new())
        }
        None if ctx.spec.is_some() => {
            Err(ConfigError("verify runs on a shipped preset or, with no model, the full suite".into()).into())
        }
        None => {
            let numbers: Vec<usize> = if criteria.is_empty() { (1..=12).collect() } else { criteria.to_vec() };
            let outcomes = run_criteria(&mut wb, &numbers, |o| println!("{}", o.line()))?;
            ctx.report.criteria = outcomes.clone();
            Ok(outcomes)
        }
    }
}
