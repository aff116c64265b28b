//! Executes the checks of a scenario and assembles the report.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::criteria::{
    convex_center_check, counterexample_fat_preimage, counterexample_nonconstant_modulus, criterion_sweep,
    cross_validated_equation, open_set_criterion, refinement_convergence, s_epsilon_fraction, GapEntry, GapSequence,
};
use crate::disk::{
    automorphism_identity_check, certified_counterexample_bound, check_c_conditions, disk_counterexample_operator,
    disk_norm_lower_bound, ArcNeighborhood,
};
use crate::error::{LabError, Result};
use crate::operators::{rotation_max_norm, ConvexCombination};
use crate::space::{default_resolution, GridCircle};

use super::report::{CheckRecord, Report};
use super::schema::{CheckKind, CheckSpec, Scenario};

/// Which checks of a scenario a subcommand runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Selection {
    All,
    Sweeps,
    Counterexamples,
    Disk,
}

impl Selection {
    fn admits(self, kind: &CheckKind) -> bool {
        match self {
            Selection::All => true,
            Selection::Sweeps => kind.is_sweep(),
            Selection::Counterexamples => kind.is_counterexample(),
            Selection::Disk => kind.is_disk(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub command: String,
    pub selection: Selection,
    /// Replaces the scenario's size list.
    pub sizes: Option<Vec<usize>>,
    /// Worker threads; 1 runs the checks in order on the calling thread.
    pub threads: usize,
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { command: "verify".into(), selection: Selection::All, sizes: None, threads: 1, timing: false }
    }
}

struct Outcome {
    outcome: bool,
    results: Value,
    sequence: Option<GapSequence>,
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report values serialize")
}

fn finish(outcome: bool, results: Value) -> Result<Outcome> {
    Ok(Outcome { outcome, results, sequence: None })
}

fn converging(seq: &GapSequence, final_gap_below: f64) -> bool {
    let last = seq.entries.last().map(|e| e.gap).unwrap_or(f64::INFINITY);
    (seq.entries.len() < 2 || seq.strictly_decreasing()) && last < final_gap_below
}

fn execute(scenario: &Scenario, kind: &CheckKind, sizes: &[usize]) -> Result<Outcome> {
    let tol = scenario.tolerance;
    let grid = scenario.grid()?;
    let wc = scenario.weighted_composition();
    let op = scenario.operator_expr()?;
    match kind {
        CheckKind::Equation => {
            let cv = cross_validated_equation(&wc, &op, &grid, tol)?;
            finish(cv.equation.holds, to_value(&cv))
        }
        CheckKind::CriterionSweep => {
            let sweep = criterion_sweep(&wc, &op, &grid, tol)?;
            finish(sweep.holds, to_value(&sweep))
        }
        CheckKind::RotationMax { lambda_grid } => {
            let r = rotation_max_norm(&wc, &op, &grid, *lambda_grid, tol)?;
            finish((r.max - r.target).abs() <= 1e-12, to_value(&r))
        }
        CheckKind::CounterexampleModulus => {
            let cx = counterexample_nonconstant_modulus(&scenario.weight, &scenario.symbol, &grid, tol)?;
            finish(cx.result.certified_gap > tol, to_value(&cx))
        }
        CheckKind::CounterexamplePreimage { t, arc } => {
            let cx = counterexample_fat_preimage(&scenario.weight, &scenario.symbol, t, arc, &grid, tol)?;
            finish(cx.certified_gap > tol, to_value(&cx))
        }
        CheckKind::Convex { t, first, second, final_gap_below } => {
            let cc = ConvexCombination::new(*t, first.clone(), second.clone())?;
            let mut entries = Vec::with_capacity(sizes.len());
            let mut per_size = Vec::with_capacity(sizes.len());
            let mut deltas_nonpositive = true;
            for &n in sizes {
                let g = GridCircle::new(n)?;
                let r = convex_center_check(&cc, &op, &g, tol)?;
                deltas_nonpositive &= r.max_delta <= 0.0;
                per_size.push(json!({"n": n, "gap": r.gap, "max_delta": r.max_delta}));
                entries.push(GapEntry { n, gap: r.gap, lhs: r.lhs, rhs: r.rhs, resolution: default_resolution(&g), fat_preimage: None });
            }
            let seq = GapSequence { entries };
            let at_n = convex_center_check(&cc, &op, &grid, tol)?;
            let outcome = deltas_nonpositive && at_n.max_delta <= 0.0 && converging(&seq, *final_gap_below);
            Ok(Outcome {
                outcome,
                results: json!({"sizes": per_size, "at_n": at_n}),
                sequence: Some(seq),
            })
        }
        CheckKind::SEpsilon { epsilon, at_least } => {
            let fraction = s_epsilon_fraction(&wc, &op, *epsilon, &grid)?;
            finish(fraction >= *at_least, json!({"fraction": fraction}))
        }
        CheckKind::Refinement { final_gap_below } => {
            let seq = refinement_convergence(&wc, &op, sizes, tol)?;
            let outcome = converging(&seq, *final_gap_below);
            Ok(Outcome { outcome, results: to_value(&seq), sequence: Some(seq) })
        }
        CheckKind::OpenSet { arc } => {
            let value = open_set_criterion(&wc, &op, arc, &grid)?;
            finish(value >= -tol, json!({"sup_value": value}))
        }
        CheckKind::DiskConditions { samples } => {
            let disk = disk_section(scenario)?;
            let c = check_c_conditions(&disk.weight, &disk.symbol, *samples, tol)?;
            finish(c.c1 && c.c2 && c.c3, to_value(&c))
        }
        CheckKind::DiskLowerBound { ladder, at_least } => {
            let disk = disk_section(scenario)?;
            let t = disk_operator(scenario)?;
            let lb = disk_norm_lower_bound(&disk.weight, &disk.symbol, &t, ladder)?;
            finish(lb.bound >= *at_least, to_value(&lb))
        }
        CheckKind::DiskCertifiedBound { omega, epsilon, half_angle, samples } => {
            let disk = disk_section(scenario)?;
            let arc = ArcNeighborhood::new(*omega, *half_angle)?;
            let t = disk_counterexample_operator(&disk.weight, &disk.symbol, *omega)?;
            let cb = certified_counterexample_bound(&disk.weight, &disk.symbol, *omega, *epsilon, &arc, *samples)?;
            finish(cb.valid && cb.margin > 0.0, json!({"operator": t, "bound": cb}))
        }
        CheckKind::DiskAutomorphism { ladder, search_tolerance } => {
            let disk = disk_section(scenario)?;
            let t = disk_operator(scenario)?;
            let check = automorphism_identity_check(&disk.symbol, &t, ladder)?;
            finish(check.lower >= check.target - search_tolerance, to_value(&check))
        }
    }
}

fn disk_section(scenario: &Scenario) -> Result<&super::schema::DiskSpec> {
    scenario
        .disk
        .as_ref()
        .ok_or_else(|| LabError::Precondition("scenario has no disk section".into()))
}

fn disk_operator(scenario: &Scenario) -> Result<crate::disk::RankOneDiskOperator> {
    disk_section(scenario)?
        .operator
        .as_ref()
        .ok_or_else(|| LabError::Precondition("scenario has no disk operator".into()))?
        .build()
}

fn run_check(scenario: &Scenario, check: &CheckSpec, sizes: &[usize], timing: bool) -> CheckRecord {
    let name = check.kind.name();
    let expect = check.expect.unwrap_or(true);
    let mut inputs = json!({"check": check, "n": scenario.space.n, "tolerance": scenario.tolerance});
    if check.kind.is_sweep() {
        inputs["sizes"] = json!(sizes);
    }
    let start = Instant::now();
    let mut record = match execute(scenario, &check.kind, sizes) {
        Ok(o) => {
            let r = CheckRecord::finished(name, inputs, expect, o.outcome, o.results);
            match o.sequence {
                Some(seq) => r.with_sequence(seq),
                None => r,
            }
        }
        Err(e) => CheckRecord::failed(name, inputs, expect, &e),
    };
    if timing {
        record.runtime_seconds = Some(start.elapsed().as_secs_f64());
    }
    record
}

/// Runs the selected checks. Individual check errors are recorded in the
/// report; only an empty selection is an error.
pub fn run(scenario: &Scenario, opts: &RunOptions) -> Result<Report> {
    let mut checks: Vec<CheckSpec> =
        scenario.checks.iter().filter(|c| opts.selection.admits(&c.kind)).cloned().collect();
    if checks.is_empty() {
        if opts.selection == Selection::Sweeps {
            checks.push(CheckSpec {
                kind: CheckKind::Refinement { final_gap_below: super::schema::default_refinement_bound() },
                expect: None,
            });
        } else {
            return Err(LabError::Scenario {
                path: "checks".into(),
                reason: format!("no checks for the `{}` command", opts.command),
            });
        }
    }
    let sizes = opts.sizes.clone().unwrap_or_else(|| scenario.sizes());
    for &n in &sizes {
        GridCircle::new(n).map_err(|e| LabError::Scenario { path: "sizes".into(), reason: e.to_string() })?;
    }
    let records: Vec<CheckRecord> = if opts.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.threads)
            .build()
            .map_err(|e| LabError::InvalidInput(format!("cannot start {} threads: {e}", opts.threads)))?;
        pool.install(|| checks.par_iter().map(|c| run_check(scenario, c, &sizes, opts.timing)).collect())
    } else {
        checks.iter().map(|c| run_check(scenario, c, &sizes, opts.timing)).collect()
    };
    Ok(Report::new(&opts.command, scenario.seed, scenario.tolerance, Some(to_value(scenario)), records))
}
