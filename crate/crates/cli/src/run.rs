//! Mode dispatch: builds models, runs the pipelines, assembles the document
//! and writes the outputs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nehari_core::certify::{check_hamiltonian_conditions, check_potential_conditions, ConditionReport};
use nehari_core::models::{builtin_hamiltonian, builtin_potential, fenchel_transform, unit_directions, FenchelPair};
use nehari_core::nehari::RecoveredOrbit;
use nehari_core::pipeline::{certify_direct_point, certify_dual_point, solve_direct, solve_dual};
use nehari_core::symfun::TrajectoryCoeffs;
use nehari_core::{make_space, Potential, SymmetryClass};

use crate::config::{load_config, ConfigError, Formulation, Mode, Overrides, RunConfig};
use crate::document::{
    CandidateRecord, FenchelRow, FenchelTable, ResultDocument, RunStatus, SweepEntry, SweepSummary, EXIT_USAGE,
};
use crate::emit::{orbit_svg, output_paths, sweep_svg, write_text, write_trajectory, TrajectoryTable};

/// Everything a run produces before it touches the disk.
#[derive(Debug, Clone)]
pub struct RunProducts {
    pub document: ResultDocument,
    pub trajectory: Option<TrajectoryTable>,
    pub plot: Option<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub document: Option<ResultDocument>,
    pub files: Vec<PathBuf>,
    /// Usage, config or I/O error that prevented a document.
    pub error: Option<String>,
    pub warnings: Vec<String>,
}

fn direct_table(x: &TrajectoryCoeffs<f64>) -> TrajectoryTable {
    let s = x.synthesize();
    TrajectoryTable { dim: s.dim, times: x.space().times().to_vec(), states: s.values, velocities: s.derivs }
}

fn dual_table(orbit: &RecoveredOrbit<f64>) -> TrajectoryTable {
    TrajectoryTable {
        dim: orbit.dim(),
        times: orbit.oscillation.space().times().to_vec(),
        states: orbit.states.clone(),
        velocities: orbit.velocities.clone(),
    }
}

fn potential(cfg: &RunConfig) -> Result<Potential, ConfigError> {
    builtin_potential(&cfg.model, cfg.dimension).map_err(|e| ConfigError(format!("model: {e}")))
}

fn conjugate(cfg: &RunConfig) -> Result<FenchelPair<f64>, ConfigError> {
    let h = builtin_hamiltonian(&cfg.model, cfg.dimension).map_err(|e| ConfigError(format!("model: {e}")))?;
    fenchel_transform(h).map_err(|e| ConfigError(format!("model: {e}")))
}

fn conditions_for(cfg: &RunConfig, formulation: Formulation) -> Result<ConditionReport, ConfigError> {
    Ok(match formulation {
        Formulation::Direct => check_potential_conditions(&potential(cfg)?, &cfg.conditions),
        Formulation::Dual => check_hamiltonian_conditions(&conjugate(cfg)?, &cfg.conditions),
    })
}

fn status_from(certified: bool, conditions: Option<&ConditionReport>) -> RunStatus {
    if conditions.is_some_and(|c| c.any_fail()) {
        RunStatus::ConditionFailure
    } else if certified {
        RunStatus::Certified
    } else {
        RunStatus::NotCertified
    }
}

/// Error path of the solve modes: the conditions are still audited so a
/// failing hypothesis is reported as such.
fn solver_failed(doc: &mut ResultDocument, cfg: &RunConfig, formulation: Formulation, e: String) -> Result<(), ConfigError> {
    doc.errors.push(e);
    if cfg.check_conditions {
        let report = conditions_for(cfg, formulation)?;
        let fail = report.any_fail();
        doc.conditions = Some(report);
        doc.set_status(if fail { RunStatus::ConditionFailure } else { RunStatus::SolverError });
    } else {
        doc.set_status(RunStatus::SolverError);
    }
    Ok(())
}

fn plot_orbit(t: &TrajectoryTable, label: &str) -> Option<String> {
    let n = t.dim;
    let col = |src: &[f64], d: usize| -> Vec<f64> { src.chunks(n).map(|r| r[d]).collect() };
    if n == 1 {
        orbit_svg(label, "x", "dx/dt", &col(&t.states, 0), &col(&t.velocities, 0))
    } else {
        orbit_svg(label, "x_1", "x_2", &col(&t.states, 0), &col(&t.states, 1))
    }
}

fn run_solve_direct(cfg: &RunConfig) -> Result<RunProducts, ConfigError> {
    let mut doc = ResultDocument::new(cfg);
    let v = potential(cfg)?;
    let period = cfg.period.expect("validated");
    let mut trajectory = None;
    match solve_direct(&v, period, cfg.symmetry_class, cfg.modes(), &cfg.pipeline_options()) {
        Ok(out) => {
            let table = direct_table(&out.candidate.point);
            doc.candidate = Some(CandidateRecord::new(Formulation::Direct, &out.candidate, table.amplitude(), None));
            doc.set_status(status_from(out.certificate.certified, out.certificate.conditions.as_ref()));
            doc.timings.stages = Some(out.timings);
            doc.certificate = Some(out.certificate);
            trajectory = Some(table);
        }
        Err(e) => solver_failed(&mut doc, cfg, Formulation::Direct, e.to_string())?,
    }
    let plot = trajectory.as_ref().and_then(|t| plot_orbit(t, &format!("orbit, T = {period}")));
    Ok(RunProducts { document: doc, trajectory, plot })
}

fn run_solve_dual(cfg: &RunConfig) -> Result<RunProducts, ConfigError> {
    let mut doc = ResultDocument::new(cfg);
    let pair = conjugate(cfg)?;
    let period = cfg.period.expect("validated");
    let mut trajectory = None;
    match solve_dual(&pair, period, cfg.modes(), &cfg.pipeline_options()) {
        Ok(out) => {
            let table = out.orbit.as_ref().map(dual_table);
            let amp = table.as_ref().map_or(f64::NAN, TrajectoryTable::amplitude);
            let offset = out.orbit.as_ref().map(|o| o.offset.clone());
            doc.candidate = Some(CandidateRecord::new(Formulation::Dual, &out.candidate, amp, offset));
            doc.set_status(status_from(out.certificate.certified, out.certificate.conditions.as_ref()));
            doc.timings.stages = Some(out.timings);
            doc.certificate = Some(out.certificate);
            trajectory = table;
        }
        Err(e) => solver_failed(&mut doc, cfg, Formulation::Dual, e.to_string())?,
    }
    let plot = trajectory.as_ref().and_then(|t| plot_orbit(t, &format!("orbit, T = {period}")));
    Ok(RunProducts { document: doc, trajectory, plot })
}

fn run_check_conditions(cfg: &RunConfig) -> Result<RunProducts, ConfigError> {
    let mut doc = ResultDocument::new(cfg);
    let report = conditions_for(cfg, cfg.formulation)?;
    doc.set_status(if report.any_fail() { RunStatus::ConditionFailure } else { RunStatus::Passed });
    doc.conditions = Some(report);
    Ok(RunProducts { document: doc, trajectory: None, plot: None })
}

/// Geometric radii from `lo` to `hi`.
fn radii(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

fn rel(err: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        err / scale
    } else {
        err
    }
}

fn run_fenchel(cfg: &RunConfig) -> Result<RunProducts, ConfigError> {
    let mut doc = ResultDocument::new(cfg);
    let pair = conjugate(cfg)?;
    let f = &cfg.fenchel;
    let dim = pair.dim();
    let rs = radii(f.min_radius, f.max_radius, f.points);
    let dirs = unit_directions::<f64>(dim, f.points, f.seed);
    let mut rows = Vec::with_capacity(f.points);
    let mut max_cf: Option<f64> = None;
    for (r, e) in rs.iter().zip(&dirs) {
        let y: Vec<f64> = e.iter().map(|v| r * v).collect();
        match pair.value(&y) {
            Ok(g) => {
                let exact = pair.closed_form().map(|c| c.value(&y));
                let err = exact.map(|c| rel((g - c).abs(), c.abs()));
                if let Some(e) = err {
                    max_cf = Some(max_cf.map_or(e, |m: f64| m.max(e)));
                }
                rows.push(FenchelRow { y, numeric: g, closed_form: exact, rel_error: err });
            }
            Err(e) => doc.errors.push(format!("conjugate at |y| = {r}: {e}")),
        }
    }
    // Young equality and inversion at gradient points y = H′(x).
    let h = pair.base();
    let xdirs = unit_directions::<f64>(dim, f.points, f.seed.wrapping_add(1));
    let (mut young, mut inversion) = (0.0f64, 0.0f64);
    for (r, e) in rs.iter().zip(&xdirs) {
        let x: Vec<f64> = e.iter().map(|v| r * v).collect();
        let y = h.gradient_vec(&x);
        match pair.value_and_gradient(&y) {
            Ok((g, gy)) => {
                let xy = dot(&x, &y);
                young = young.max(rel((g + h.value(&x) - xy).abs(), xy.abs()));
                let dx: f64 = gy.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                inversion = inversion.max(rel(dx, *r));
            }
            Err(e) => doc.errors.push(format!("conjugate at H′(x), |x| = {r}: {e}")),
        }
    }
    let passed =
        doc.errors.is_empty() && max_cf.is_none_or(|m| m < f.tol) && young < f.tol && inversion < f.tol;
    doc.fenchel = Some(FenchelTable {
        model: cfg.model.name.clone(),
        alpha: pair.alpha(),
        beta: pair.beta(),
        rows,
        max_closed_form_error: max_cf,
        max_young_error: young,
        max_inversion_error: inversion,
        tol: f.tol,
        passed,
    });
    doc.set_status(if passed { RunStatus::Passed } else { RunStatus::Failed });
    Ok(RunProducts { document: doc, trajectory: None, plot: None })
}

fn run_certify(cfg: &RunConfig) -> Result<RunProducts, ConfigError> {
    let mut doc = ResultDocument::new(cfg);
    let period = cfg.period.expect("validated");
    let coeffs = cfg.candidate.as_ref().expect("validated").coefficients.clone();
    let mut opts = cfg.pipeline_options();
    opts.check_truncation = false;
    let formulation = cfg.formulation;
    let class = match formulation {
        Formulation::Direct => cfg.symmetry_class,
        Formulation::Dual => SymmetryClass::FullMeanZero,
    };
    let space = make_space(period, cfg.dimension, class, cfg.modes()).map_err(|e| ConfigError(e.to_string()))?;
    let point = TrajectoryCoeffs::new(&space, coeffs).map_err(|e| ConfigError(format!("candidate: {e}")))?;
    let mut trajectory = None;
    let result = match formulation {
        Formulation::Direct => certify_direct_point(&potential(cfg)?, &point, &opts).map(|(cand, cert)| {
            let table = direct_table(&cand.point);
            (CandidateRecord::new(formulation, &cand, table.amplitude(), None), cert, Some(table))
        }),
        Formulation::Dual => certify_dual_point(&conjugate(cfg)?, &point, &opts).map(|(cand, cert, orbit)| {
            let table = orbit.as_ref().map(dual_table);
            let amp = table.as_ref().map_or(f64::NAN, TrajectoryTable::amplitude);
            (CandidateRecord::new(formulation, &cand, amp, orbit.map(|o| o.offset)), cert, table)
        }),
    };
    match result {
        Ok((record, cert, table)) => {
            doc.candidate = Some(record);
            doc.set_status(status_from(cert.certified, cert.conditions.as_ref()));
            doc.certificate = Some(cert);
            trajectory = table;
        }
        Err(e) => solver_failed(&mut doc, cfg, formulation, e.to_string())?,
    }
    let plot = trajectory.as_ref().and_then(|t| plot_orbit(t, &format!("injected orbit, T = {period}")));
    Ok(RunProducts { document: doc, trajectory, plot })
}

fn run_sweep(cfg: &RunConfig) -> Result<RunProducts, ConfigError> {
    let mut doc = ResultDocument::new(cfg);
    let periods = cfg.sweep.as_ref().expect("validated").periods.clone();
    let mut opts = cfg.pipeline_options();
    opts.check_conditions = false;
    let formulation = cfg.formulation;
    let (v, pair) = match formulation {
        Formulation::Direct => (Some(potential(cfg)?), None),
        Formulation::Dual => (None, Some(conjugate(cfg)?)),
    };
    let mut entries = Vec::with_capacity(periods.len());
    for &t in &periods {
        let res = match (&v, &pair) {
            (Some(v), _) => solve_direct(v, t, cfg.symmetry_class, cfg.modes(), &opts).map(|o| {
                let amp = direct_table(&o.candidate.point).amplitude();
                (o.candidate, o.certificate, o.timings, Some(amp))
            }),
            (_, Some(p)) => solve_dual(p, t, cfg.modes(), &opts).map(|o| {
                let amp = o.orbit.as_ref().map(|orb| dual_table(orb).amplitude());
                (o.candidate, o.certificate, o.timings, amp)
            }),
            _ => unreachable!("one model is built"),
        };
        entries.push(match res {
            Ok((cand, cert, timings, amplitude)) => {
                doc.timings.sweep.push(timings);
                SweepEntry {
                    period: t,
                    c_T: Some(cand.value),
                    amplitude,
                    newton_residual: Some(cand.residual),
                    ode_residual: Some(cert.ode_residual.relative),
                    certified: cert.certified,
                    failures: cert.failures,
                    error: None,
                }
            }
            Err(e) => {
                doc.timings.sweep.push(Default::default());
                SweepEntry {
                    period: t,
                    c_T: None,
                    amplitude: None,
                    newton_residual: None,
                    ode_residual: None,
                    certified: false,
                    failures: Vec::new(),
                    error: Some(e.to_string()),
                }
            }
        });
    }
    let ratios = entries.windows(2).map(|w| Some(w[1].c_T? / w[0].c_T?)).collect();
    let all_certified = entries.iter().all(|e| e.certified);
    let values: Vec<Option<f64>> = entries.iter().map(|e| e.c_T).collect();
    let conditions = if cfg.check_conditions { Some(conditions_for(cfg, formulation)?) } else { None };
    doc.set_status(status_from(all_certified, conditions.as_ref()));
    doc.conditions = conditions;
    doc.sweep = Some(SweepSummary { entries, ratios, all_certified });
    Ok(RunProducts { document: doc, trajectory: None, plot: sweep_svg(&periods, &values) })
}

/// Runs a validated configuration without touching the disk.
pub fn execute(cfg: &RunConfig) -> Result<RunProducts, ConfigError> {
    let start = Instant::now();
    let mut products = match cfg.mode {
        Mode::SolveDirect => run_solve_direct(cfg),
        Mode::SolveDual => run_solve_dual(cfg),
        Mode::CheckConditions => run_check_conditions(cfg),
        Mode::FenchelTable => run_fenchel(cfg),
        Mode::Certify => run_certify(cfg),
        Mode::Sweep => run_sweep(cfg),
    }?;
    products.document.timings.total = start.elapsed().as_secs_f64();
    Ok(products)
}

/// Writes the document, the trajectory and the plot. Only the plot may fail
/// softly; its failure is returned as a warning.
pub fn emit(products: &RunProducts, dir: &Path, stem: &str) -> anyhow::Result<(Vec<PathBuf>, Vec<String>)> {
    std::fs::create_dir_all(dir).map_err(|e| anyhow::anyhow!("cannot create {}: {e}", dir.display()))?;
    let (json, csv, svg) = output_paths(dir, stem);
    write_text(&json, &products.document.to_json())?;
    let mut files = vec![json];
    if let Some(t) = &products.trajectory {
        write_trajectory(&csv, t)?;
        files.push(csv);
    }
    let mut warnings = Vec::new();
    if let Some(p) = &products.plot {
        match write_text(&svg, p) {
            Ok(()) => files.push(svg),
            Err(e) => warnings.push(format!("plot skipped: {e:#}")),
        }
    }
    Ok((files, warnings))
}

/// Config loading, execution and output, mapped onto the exit-code
/// contract.
pub fn run(config: Option<&Path>, overrides: &Overrides) -> RunOutcome {
    let fail = |msg: String| RunOutcome { exit_code: EXIT_USAGE, document: None, files: Vec::new(), error: Some(msg), warnings: Vec::new() };
    let cfg = match load_config(config, overrides) {
        Ok(c) => c,
        Err(e) => return fail(format!("config: {e}")),
    };
    let products = match execute(&cfg) {
        Ok(p) => p,
        Err(e) => return fail(format!("config: {e}")),
    };
    match emit(&products, &cfg.output.dir, &cfg.output.stem) {
        Ok((files, warnings)) => RunOutcome {
            exit_code: products.document.exit_code,
            document: Some(products.document),
            files,
            error: None,
            warnings,
        },
        Err(e) => fail(format!("output: {e:#}")),
    }
}
