//! One line per acceptance criterion; exits nonzero if any is red.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;

use daugavet_core::measures::{total_variation, AtomicMeasure};
use daugavet_core::operators::{measure_at, OperatorExpr, WeightedComposition};
use daugavet_core::scenario::random;
use daugavet_core::scenario::selftest::{
    convex_suite, counterexample_suite, disk_suite, criterion_equivalence, oracle_suite, refinement_suite, rotation_identity,
    REFINEMENT_SIZES,
};
use daugavet_core::scenario::selftest;
use daugavet_core::space::{GridCircle, Point};
use daugavet_core::Result;

const SEED: u64 = 0;

type Criterion = (&'static str, fn() -> Result<Line>);

struct Line {
    ok: bool,
    detail: String,
}

fn line(ok: bool, detail: impl Into<String>) -> Line {
    Line { ok, detail: detail.into() }
}

fn closed_form_gap(n: usize) -> f64 {
    (1.0 - (TAU / n as f64).cos()) / 2.0
}

/// Total variation from raw atoms, merging by grid index.
fn tv_by_index(atoms: &[(usize, Complex64)]) -> f64 {
    let mut merged: BTreeMap<usize, Complex64> = BTreeMap::new();
    for &(k, w) in atoms {
        *merged.entry(k).or_default() += w;
    }
    merged.values().map(|w| w.norm()).sum()
}

fn indexed_atoms(mu: &AtomicMeasure, grid: &GridCircle) -> Vec<(usize, Complex64)> {
    mu.atoms()
        .iter()
        .map(|a| (grid.index_of(&a.pos).expect("atoms lie on the grid"), Complex64::new(a.re, a.im)))
        .collect()
}

/// `‖u‖∞ + sup_s ‖μ_s‖` computed from the raw measure atoms.
fn triangle_target(wc: &WeightedComposition, op: &OperatorExpr, grid: &GridCircle) -> Result<f64> {
    let mut u_max = 0.0f64;
    let mut t_max = 0.0f64;
    for s in grid.points() {
        u_max = u_max.max(wc.weight.eval(&s)?.norm());
        t_max = t_max.max(tv_by_index(&indexed_atoms(&measure_at(op, &s)?, grid)));
    }
    Ok(u_max + t_max)
}

fn equivalence() -> Result<Line> {
    let start = Instant::now();
    let s = criterion_equivalence(SEED, 200, 64)?;
    let secs = start.elapsed().as_secs_f64();
    Ok(line(
        s.disagreements == 0 && secs < 10.0,
        format!("{} disagreements in {} instances ({} hold), {secs:.2}s", s.disagreements, s.instances, s.equation_holds),
    ))
}

fn rotation() -> Result<Line> {
    let s = rotation_identity(SEED, 100, 64, 4096)?;
    let grid = GridCircle::new(64)?;
    let mut rng = random::rng(SEED, 2);
    let mut oracle_error = 0.0f64;
    for _ in 0..100 {
        let inst = random::instance(&mut rng, 64);
        let r = daugavet_core::operators::rotation_max_norm(&inst.wc, &inst.op, &grid, 4096, 1e-9)?;
        oracle_error = oracle_error.max((r.max - triangle_target(&inst.wc, &inst.op, &grid)?).abs());
    }
    Ok(line(
        s.max_identity_error <= 1e-12 && oracle_error <= 1e-12 && s.max_search_excess <= 0.0,
        format!(
            "identity error {:.3e}, against raw-atom oracle {oracle_error:.3e}, search slack {:.3e}",
            s.max_identity_error, -s.max_search_excess
        ),
    ))
}

fn counterexamples() -> Result<Line> {
    let s = counterexample_suite(SEED, 100, 64)?;
    let near = |x: f64, y: f64| (x - y).abs() <= 1e-9;
    let ok = near(s.preimage.perturbed_norm, 1.5)
        && near(s.preimage.certified_gap, 0.5)
        && near(s.modulus.result.perturbed_norm, 1.5)
        && near(s.modulus.result.certified_gap, 0.5)
        && s.min_random_modulus_gap > 1e-6
        && s.min_random_preimage_gap > 1e-6;
    Ok(line(
        ok,
        format!(
            "preimage {:.12}/{:.12}, modulus {:.12}/{:.12}, random minima {:.3e}/{:.3e}",
            s.preimage.perturbed_norm,
            s.preimage.certified_gap,
            s.modulus.result.perturbed_norm,
            s.modulus.result.certified_gap,
            s.min_random_preimage_gap,
            s.min_random_modulus_gap
        ),
    ))
}

fn refinement() -> Result<Line> {
    let s = refinement_suite(&REFINEMENT_SIZES)?;
    let mut law_error = 0.0f64;
    for seq in [&s.doubling, &s.identity] {
        for e in &seq.entries {
            law_error = law_error.max((e.gap - closed_form_gap(e.n)).abs());
        }
    }
    let decreasing = s.doubling.gaps().windows(2).all(|w| w[1] < w[0]);
    let last = *s.doubling.gaps().last().expect("nonempty");
    let control_min = s.control.gaps().into_iter().fold(f64::INFINITY, f64::min);
    Ok(line(
        law_error <= 1e-12 && decreasing && last < 1e-5 && control_min >= 0.49,
        format!("law error {law_error:.3e}, gap(1024) {last:.3e}, decreasing {decreasing}, control min {control_min}"),
    ))
}

fn convex() -> Result<Line> {
    let s = convex_suite(&[0.0, 0.25, 0.5, 1.0], &REFINEMENT_SIZES, 64)?;
    let worst_gap = s.runs.iter().map(|r| *r.gaps.last().expect("nonempty")).fold(0.0, f64::max);
    let worst_delta = s.runs.iter().map(|r| r.max_delta).fold(f64::NEG_INFINITY, f64::max);
    Ok(line(
        worst_gap < 1e-4 && worst_delta <= 0.0 && !s.cosine_modulus_constant && s.cosine_counterexample_gap > 0.4,
        format!(
            "gap(1024) max {worst_gap:.3e}, max Δ {worst_delta:.3e}, cosine constant {}, cosine gap {:.6}",
            s.cosine_modulus_constant, s.cosine_counterexample_gap
        ),
    ))
}

fn oracle() -> Result<Line> {
    let s = oracle_suite(SEED, 500, 64, 8, 8)?;
    // Raw atoms, built here, against the library's merged measure.
    let mut rng = random::rng(SEED, 99);
    let mut raw_error = 0.0f64;
    for _ in 0..500 {
        let raw: Vec<(usize, Complex64)> = (0..rng.random_range(1..=8))
            .map(|_| (rng.random_range(0..64), random::complex_in_square(&mut rng, 2.0)))
            .collect();
        let mut mu = AtomicMeasure::zero();
        for &(k, w) in &raw {
            mu.add_atom(Point::grid(k as u64, 64), w);
        }
        raw_error = raw_error.max((total_variation(&mu) - tv_by_index(&raw)).abs());
    }
    Ok(line(
        s.max_oracle_error <= 1e-12 && s.max_decomposition_error <= 1e-12 && raw_error <= 1e-12,
        format!(
            "oracle {:.3e}, split {:.3e} over {} positions, raw atoms {raw_error:.3e}",
            s.max_oracle_error, s.max_decomposition_error, s.positions_checked
        ),
    ))
}

fn disk() -> Result<Line> {
    let s = disk_suite(SEED, 10_000)?;
    let c = &s.conditions;
    let a = (c[0].c1 && c[0].c2 && c[0].c3) && !c[1].c2 && !c[2].c1;
    let b = s.lower_bound.bound >= 1.99 && s.lower_bound.bound <= 2.0 + 1e-9;
    let cc = s.certified.valid && s.certified.margin >= 1e-3 && s.sampled_max <= s.certified.bound;
    let d = s.automorphism.lower >= 1.99;
    Ok(line(
        a && b && cc && d,
        format!(
            "(a) {a}, (b) bound {:.6}, (c) bound {:.6} margin {:.4e} sampled max {:.6}, (d) lower {:.6}",
            s.lower_bound.bound, s.certified.bound, s.certified.margin, s.sampled_max, s.automorphism.lower
        ),
    ))
}

fn determinism() -> Result<Line> {
    let start = Instant::now();
    let first = selftest(SEED, 1, false)?;
    let secs = start.elapsed().as_secs_f64();
    let second = selftest(SEED, 1, false)?;
    let same = first.to_json() == second.to_json();
    Ok(line(
        same && secs < 60.0 && first.all_passed(),
        format!("identical bytes {same}, all suites pass {}, {secs:.2}s single-threaded", first.all_passed()),
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("equation and epsilon-sweep verdicts agree", equivalence),
        ("rotation maximum identity", rotation),
        ("counterexample constructors", counterexamples),
        ("refinement law", refinement),
        ("convex combinations", convex),
        ("measure norm oracle", oracle),
        ("disk algebra", disk),
        ("selftest determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let l = check().unwrap_or_else(|e| line(false, format!("error: {e}")));
        failures += usize::from(!l.ok);
        println!("{} {}. {name}: {}", if l.ok { "PASS" } else { "FAIL" }, i + 1, l.detail);
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
