//! The result document written by every run.

use nehari_core::certify::{Certificate, ConditionReport};
use nehari_core::fiber::FiberProfile;
use nehari_core::nehari::{Candidate, SearchStatus};
use nehari_core::pipeline::Timings;
use nehari_core::SymmetryClass;
use serde::Serialize;

use crate::config::{Formulation, Mode, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Certified,
    NotCertified,
    ConditionFailure,
    SolverError,
    Passed,
    Failed,
}

/// Exit codes of the CLI.
pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_CERTIFIED: i32 = 2;
pub const EXIT_CONDITIONS: i32 = 3;

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Certified | RunStatus::Passed => EXIT_OK,
            RunStatus::NotCertified | RunStatus::SolverError | RunStatus::Failed => EXIT_NOT_CERTIFIED,
            RunStatus::ConditionFailure => EXIT_CONDITIONS,
        }
    }
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateRecord {
    pub formulation: Formulation,
    pub period: f64,
    pub dimension: usize,
    pub symmetry_class: SymmetryClass,
    pub num_modes: usize,
    /// Basis coefficients, mode-major (`coefficients[j * dimension + d]`).
    pub coefficients: Vec<f64>,
    /// The action at the candidate, the estimate of `c_T`.
    pub c_T: f64,
    pub inf_max: f64,
    /// `max_t |x(t)|` on the quadrature grid.
    pub amplitude: f64,
    /// Constant part of the recovered orbit (dual runs).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offset: Option<Vec<f64>>,
    pub profile: FiberProfile<f64>,
    pub search_status: SearchStatus,
    pub iterations: usize,
    pub restart: usize,
    pub restart_values: Vec<Option<f64>>,
    pub refined: bool,
    pub newton_residual: f64,
    pub newton_iterations: usize,
    pub diagnostic: Option<String>,
}

impl CandidateRecord {
    pub fn new(formulation: Formulation, cand: &Candidate<f64>, amplitude: f64, offset: Option<Vec<f64>>) -> Self {
        let sp = cand.point.space();
        CandidateRecord {
            formulation,
            period: sp.period(),
            dimension: sp.dim(),
            symmetry_class: sp.class(),
            num_modes: sp.num_modes(),
            coefficients: cand.point.data().to_vec(),
            c_T: cand.value,
            inf_max: cand.inf_max,
            amplitude,
            offset,
            profile: cand.profile,
            search_status: cand.status,
            iterations: cand.iterations,
            restart: cand.restart,
            restart_values: cand.restart_values.clone(),
            refined: cand.refined,
            newton_residual: cand.residual,
            newton_iterations: cand.newton_iterations,
            diagnostic: cand.diagnostic.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FenchelRow {
    pub y: Vec<f64>,
    pub numeric: f64,
    pub closed_form: Option<f64>,
    pub rel_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FenchelTable {
    pub model: String,
    pub alpha: f64,
    pub beta: f64,
    pub rows: Vec<FenchelRow>,
    /// Largest relative deviation from the closed form, if one exists.
    pub max_closed_form_error: Option<f64>,
    /// Largest `|G(H′(x)) + H(x) − x·H′(x)| / |x·H′(x)|` over the samples.
    pub max_young_error: f64,
    /// Largest `|G′(H′(x)) − x| / |x|`.
    pub max_inversion_error: f64,
    pub tol: f64,
    pub passed: bool,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepEntry {
    pub period: f64,
    pub c_T: Option<f64>,
    pub amplitude: Option<f64>,
    pub newton_residual: Option<f64>,
    pub ode_residual: Option<f64>,
    pub certified: bool,
    pub failures: Vec<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub entries: Vec<SweepEntry>,
    /// `c_{T_{i+1}} / c_{T_i}` for consecutive solved entries.
    pub ratios: Vec<Option<f64>>,
    pub all_certified: bool,
}

/// Wall-clock seconds; the only part of a document that varies between
/// identical runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DocTimings {
    pub total: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stages: Option<Timings>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<Timings>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultDocument {
    pub version: String,
    pub mode: Mode,
    pub seed: u64,
    pub status: RunStatus,
    pub exit_code: i32,
    pub errors: Vec<String>,
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidate: Option<CandidateRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conditions: Option<ConditionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fenchel: Option<FenchelTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSummary>,
    pub timings: DocTimings,
}

impl ResultDocument {
    pub fn new(config: &RunConfig) -> Self {
        ResultDocument {
            version: nehari_core::VERSION.to_string(),
            mode: config.mode,
            seed: config.solver.seed,
            status: RunStatus::Failed,
            exit_code: EXIT_NOT_CERTIFIED,
            errors: Vec::new(),
            config: config.clone(),
            candidate: None,
            certificate: None,
            conditions: None,
            fenchel: None,
            sweep: None,
            timings: DocTimings::default(),
        }
    }

    pub fn set_status(&mut self, status: RunStatus) {
        self.status = status;
        self.exit_code = status.exit_code();
    }

    /// Pretty JSON with shortest round-trip floats; non-finite values
    /// become `null`.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result document serializes");
        s.push('\n');
        s
    }
}
