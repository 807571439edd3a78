//! Request handling shared by the command line and batch drivers.

use std::path::PathBuf;

use serde::Serialize;

use crate::braid::{BraidWord, Sign};
use crate::catalog::{lookup, torus2};
use crate::error::{Error, Result};
use crate::fixed_points::{parse_key_values, solve, RestartStats, TwistedMap};
use crate::invariant::{
    casson_lin, epsilon_independence_check, markov_invariance_check, resolve_epsilon, EpsilonComparison,
    InvariantOptions, InvariantReport, MarkovComparison, MarkovMove, Provenance,
};
use crate::labels::{EpsilonVector, LabelSpec, Violation};
use crate::sun::MatrixJson;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BraidSource {
    Catalog(String),
    /// Text such as `"B3: 1 1 2 2"`.
    Inline(String),
}

impl BraidSource {
    pub fn resolve(&self) -> Result<BraidWord> {
        match self {
            BraidSource::Catalog(name) => Ok(lookup(name)?.braid),
            BraidSource::Inline(text) => text.parse(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Validate,
    Invariant,
    SolveOnly,
    MarkovCheck,
    EpsilonCheck,
    ConjectureScan { q_max: usize, n_max: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRequest {
    pub source: Option<BraidSource>,
    pub n: Option<u32>,
    pub labels: Option<Vec<u32>>,
    pub epsilon: Option<Vec<u32>>,
    /// `key = value` overrides, applied before `seed` and `restarts`.
    pub config: Vec<(String, String)>,
    pub seed: Option<u64>,
    pub restarts: Option<usize>,
    pub mode: Mode,
    pub out: Option<PathBuf>,
}

impl RunRequest {
    pub fn new(mode: Mode) -> Self {
        RunRequest {
            source: None,
            n: None,
            labels: None,
            epsilon: None,
            config: Vec::new(),
            seed: None,
            restarts: None,
            mode,
            out: None,
        }
    }

    /// Adds the `key = value` lines of a configuration file's text.
    pub fn with_config_text(mut self, text: &str) -> Result<Self> {
        self.config.extend(parse_key_values(text)?);
        Ok(self)
    }

    fn braid(&self) -> Result<BraidWord> {
        self.source.as_ref().ok_or_else(|| Error::Config("no braid given".into()))?.resolve()
    }

    fn spec(&self) -> Result<LabelSpec> {
        let n = self.n.ok_or_else(|| Error::Config("rank N not given".into()))?;
        let labels = self.labels.clone().ok_or_else(|| Error::Config("labels not given".into()))?;
        if n < 2 {
            return Err(Error::Config(format!("rank N must be at least 2, got {n}")));
        }
        Ok(LabelSpec::new(n, labels))
    }

    /// Solver and analysis options for a braid on `k` strands.
    pub fn options(&self, b: &BraidWord) -> Result<InvariantOptions> {
        let mut opts = InvariantOptions::for_braid(b);
        for (k, v) in &self.config {
            if opts.solver.set(k, v)? {
                continue;
            }
            let bad = || Error::Config(format!("bad value `{v}` for `{k}`"));
            match k.as_str() {
                "tol_kernel" => opts.tolerances.kernel = v.parse().map_err(|_| bad())?,
                "tol_unitary" => opts.tolerances.unitary = v.parse().map_err(|_| bad())?,
                "tol_class" => opts.tolerances.class = v.parse().map_err(|_| bad())?,
                "split_shortcut" => opts.split_shortcut = v.parse().map_err(|_| bad())?,
                _ => return Err(Error::Config(format!("unknown configuration key `{k}`"))),
            }
        }
        if let Some(s) = self.seed {
            opts.solver.seed = s;
        }
        if let Some(r) = self.restarts {
            opts.solver.restarts = r;
        }
        if let (Some(e), Some(n)) = (&self.epsilon, self.n) {
            opts.epsilon = Some(EpsilonVector::new(n, e.clone()));
        }
        opts.solver.validate()?;
        Ok(opts)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub braid: String,
    pub strands: usize,
    pub cycles: Vec<Vec<usize>>,
    pub components: usize,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<u32>>,
    pub violations: Vec<String>,
    pub valid: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolvedClass {
    pub matrices: Vec<MatrixJson>,
    pub residual: f64,
    pub fingerprint: Vec<f64>,
    pub hits: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionDump {
    pub braid: String,
    #[serde(rename = "N")]
    pub n: u32,
    pub labels: Vec<u32>,
    pub epsilon: Vec<u32>,
    pub classes: Vec<SolvedClass>,
    pub stats: RestartStats,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConjectureRow {
    pub q: usize,
    #[serde(rename = "N")]
    pub n: u32,
    pub labels: Vec<u32>,
    pub abs_h: Option<i64>,
    /// `q^{N-1}`.
    pub conjectured: i64,
    pub matches: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConjectureTable {
    /// Always true: these values are not acceptance targets.
    pub exploratory: bool,
    pub rows: Vec<ConjectureRow>,
}

/// What a request produced.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum RunOutput {
    Validation(ValidationReport),
    Invariant(InvariantReport),
    Solutions(SolutionDump),
    Markov(MarkovComparison),
    Epsilon(EpsilonComparison),
    Conjecture(ConjectureTable),
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub output: RunOutput,
    /// 0 on success, 2 when the invariant is undefined (or a check disagrees).
    pub exit_code: i32,
}

impl RunOutcome {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.output)?)
    }
}

/// Exit status for input errors.
pub const EXIT_INPUT: i32 = 1;
/// Exit status when `h` is undefined.
pub const EXIT_UNDEFINED: i32 = 2;

/// Executes a request and writes the JSON report to `req.out` if set.
pub fn run(req: &RunRequest) -> Result<RunOutcome> {
    let outcome = match req.mode {
        Mode::Validate => validate(req)?,
        Mode::Invariant => {
            let (b, spec) = (req.braid()?, req.spec()?);
            let report = casson_lin(&b, &spec, &req.options(&b)?)?;
            let exit_code = if report.h_defined { 0 } else { EXIT_UNDEFINED };
            RunOutcome { output: RunOutput::Invariant(report), exit_code }
        }
        Mode::SolveOnly => solve_only(req)?,
        Mode::MarkovCheck => {
            let (b, spec) = (req.braid()?, req.spec()?);
            let moves = [
                MarkovMove::Conjugate(1),
                MarkovMove::Conjugate(-1),
                MarkovMove::Stabilize(Sign::Positive),
                MarkovMove::Stabilize(Sign::Negative),
            ];
            let cmp = markov_invariance_check(&b, &spec, &moves, &req.options(&b)?)?;
            let exit_code = if cmp.all_agree { 0 } else { EXIT_UNDEFINED };
            RunOutcome { output: RunOutput::Markov(cmp), exit_code }
        }
        Mode::EpsilonCheck => {
            let (b, spec) = (req.braid()?, req.spec()?);
            let cmp = epsilon_independence_check(&b, &spec, &req.options(&b)?, 16)?;
            let exit_code = if cmp.all_agree { 0 } else { EXIT_UNDEFINED };
            RunOutcome { output: RunOutput::Epsilon(cmp), exit_code }
        }
        Mode::ConjectureScan { q_max, n_max } => {
            let table = conjecture_scan(q_max, n_max, req)?;
            RunOutcome { output: RunOutput::Conjecture(table), exit_code: 0 }
        }
    };
    if let Some(path) = &req.out {
        std::fs::write(path, outcome.to_json()? + "\n")?;
    }
    Ok(outcome)
}

fn validate(req: &RunRequest) -> Result<RunOutcome> {
    let b = req.braid()?;
    let cycles = b.cycles();
    let mut violations = Vec::new();
    if let (Some(n), Some(labels)) = (req.n, &req.labels) {
        let spec = LabelSpec::new(n, labels.clone());
        violations.extend(spec.violations().iter().map(Violation::to_string));
        if labels.len() != cycles.len() {
            violations.push(format!("{} labels for {} components", labels.len(), cycles.len()));
        }
        if n < 2 {
            violations.push("rank N must be at least 2".into());
        }
    }
    let valid = violations.is_empty();
    let report = ValidationReport {
        braid: b.to_string(),
        strands: b.strands(),
        cycles: cycles.cycles().to_vec(),
        components: cycles.len(),
        n: req.n,
        labels: req.labels.clone(),
        violations,
        valid,
    };
    Ok(RunOutcome { output: RunOutput::Validation(report), exit_code: if valid { 0 } else { EXIT_INPUT } })
}

fn solve_only(req: &RunRequest) -> Result<RunOutcome> {
    let (b, spec) = (req.braid()?, req.spec()?);
    spec.validate()?;
    if b.component_count() != spec.labels.len() {
        return Err(Error::ComponentMismatch { labels: spec.labels.len(), components: b.component_count() });
    }
    let opts = req.options(&b)?;
    let eps = resolve_epsilon(&b, &spec, opts.epsilon.as_ref())?;
    let sols = solve(&TwistedMap::new(&b, &eps)?, &opts.solver)?;
    let classes = sols
        .solutions
        .iter()
        .map(|s| SolvedClass {
            matrices: s.tuple.matrices().iter().map(MatrixJson::from).collect(),
            residual: s.residual,
            fingerprint: s.fingerprint.clone(),
            hits: s.hits,
        })
        .collect();
    let dump = SolutionDump {
        braid: b.to_string(),
        n: spec.n,
        labels: spec.labels.clone(),
        epsilon: eps.exponents().to_vec(),
        classes,
        stats: sols.stats,
        provenance: Provenance::new(&opts),
    };
    Ok(RunOutcome { output: RunOutput::Solutions(dump), exit_code: 0 })
}

/// Tabulates `|h_{N,(1,N-1)}(T(2,2q))|` against `q^{N-1}`.
pub fn conjecture_scan(q_max: usize, n_max: u32, req: &RunRequest) -> Result<ConjectureTable> {
    if q_max == 0 || q_max > 4 || !(2..=4).contains(&n_max) {
        return Err(Error::Config("conjecture scan bounds are q ≤ 4 and 2 ≤ N ≤ 4".into()));
    }
    let mut rows = Vec::new();
    for n in 2..=n_max {
        for q in 1..=q_max {
            let b = torus2(q);
            let spec = LabelSpec::new(n, vec![1, n - 1]);
            let mut sub = req.clone();
            sub.epsilon = None;
            let report = casson_lin(&b, &spec, &sub.options(&b)?)?;
            let conjectured = (q as i64).pow(n - 1);
            let abs_h = report.abs_h();
            rows.push(ConjectureRow { q, n, labels: spec.labels, abs_h, conjectured, matches: abs_h.map(|h| h == conjectured) });
        }
    }
    Ok(ConjectureTable { exploratory: true, rows })
}
