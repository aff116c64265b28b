//! The built-in invariant suite: seeded property runs over random
//! instances plus the canonical constructions.

use std::f64::consts::TAU;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::criteria::{
    convex_center_check, counterexample_fat_preimage, counterexample_nonconstant_modulus, criterion_sweep, equation_holds,
    refinement_convergence, Counterexample, GapSequence, ModulusCounterexample, DEFAULT_TOL,
};
use crate::disk::{
    automorphism_identity_check, certified_counterexample_bound, check_c_conditions, disk_counterexample_operator,
    disk_norm_lower_bound, ArcNeighborhood, AutomorphismCheck, BlaschkeProduct, CConditions, CertifiedBound,
    DiskFunction, LowerBound, RankOneDiskOperator, SearchLadder,
};
use crate::error::Result;
use crate::measures::{dirac, norm_oracle, point_mass, total_variation, tv_excluding};
use crate::operators::{
    rotation_max_norm, ConvexCombination, FiniteRankOperator, OperatorComponent, OperatorExpr, WeightedComposition,
};
use crate::space::{modulus_constancy, Arc, GridCircle, Point, ScalarField, SymbolMap};

use super::random;
use super::report::{CheckRecord, Report};

/// Grid sizes of the refinement and convex runs.
pub const REFINEMENT_SIZES: [usize; 8] = [8, 16, 32, 64, 128, 256, 512, 1024];

/// `Tf = −f(0)·(1 + cos 2πθ)/2`.
pub fn canonical_rank_one() -> OperatorExpr {
    OperatorExpr::zero().plus(
        Complex64::new(-1.0, 0.0),
        OperatorComponent::FiniteRank(FiniteRankOperator::rank_one(
            dirac(Point::grid(0, 1)),
            ScalarField::Cosine { offset: 0.5, amplitude: 0.5, freq: 1 },
        )),
    )
}

/// `1 − tent/2` around `1/4` with half-width `1/8`.
pub fn canonical_modulus_weight() -> ScalarField {
    ScalarField::TentDip { center: Point::grid(1, 4), half_width: 0.125, base: 1.0, depth: 0.5 }
}

/// `φ ≡ 1/4` on the arc of length `1/2` centred at `1/4`, identity elsewhere.
pub fn canonical_preimage() -> random::PreimageInstance {
    let t = Point::grid(1, 4);
    let arc = Arc { center: t, half_width: 0.25 };
    random::PreimageInstance {
        weight: ScalarField::one(),
        symbol: SymbolMap::constant_on_arc(arc, t, SymbolMap::Identity),
        t,
        arc,
    }
}

/// `f ↦ f(τ)·(1 + conj(ω)z)/2`-type operator `c·f(τ)·g`.
fn point_eval(tau: f64, scale: f64) -> RankOneDiskOperator {
    RankOneDiskOperator {
        tau: Complex64::new(tau, 0.0),
        output: DiskFunction::constant(Complex64::new(1.0, 0.0)),
        scale: Complex64::new(scale, 0.0),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceSummary {
    pub instances: usize,
    pub disagreements: usize,
    pub equation_holds: usize,
}

/// Equation verdict (direct norms) against the ε-sweep verdict on random
/// instances.
pub fn criterion_equivalence(seed: u64, instances: usize, n: usize) -> Result<EquivalenceSummary> {
    let grid = GridCircle::new(n)?;
    let mut rng = random::rng(seed, 1);
    let mut disagreements = 0;
    let mut holds = 0;
    for _ in 0..instances {
        let inst = random::instance(&mut rng, n);
        let eq = equation_holds(&inst.wc, &inst.op, &grid, DEFAULT_TOL)?;
        let sweep = criterion_sweep(&inst.wc, &inst.op, &grid, DEFAULT_TOL)?;
        disagreements += usize::from(eq.holds != sweep.holds);
        holds += usize::from(eq.holds);
    }
    Ok(EquivalenceSummary { instances, disagreements, equation_holds: holds })
}

#[derive(Clone, Debug, Serialize)]
pub struct RotationSummary {
    pub instances: usize,
    /// Largest `|closed form − (‖u‖∞ + ‖T‖)|`.
    pub max_identity_error: f64,
    /// Largest `|closed form − search| − allowed search error`.
    pub max_search_excess: f64,
}

pub fn rotation_identity(seed: u64, instances: usize, n: usize, lambda_grid: usize) -> Result<RotationSummary> {
    let grid = GridCircle::new(n)?;
    let mut rng = random::rng(seed, 2);
    let mut max_identity_error = 0.0f64;
    let mut max_search_excess = f64::NEG_INFINITY;
    for _ in 0..instances {
        let inst = random::instance(&mut rng, n);
        let r = rotation_max_norm(&inst.wc, &inst.op, &grid, lambda_grid, DEFAULT_TOL)?;
        max_identity_error = max_identity_error.max((r.max - r.target).abs());
        max_search_excess = max_search_excess.max((r.max - r.searched_max).abs() - r.search_tolerance);
    }
    Ok(RotationSummary { instances, max_identity_error, max_search_excess })
}

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleSummary {
    pub modulus: ModulusCounterexample,
    pub preimage: Counterexample,
    pub random_runs: usize,
    pub min_random_modulus_gap: f64,
    pub min_random_preimage_gap: f64,
}

pub fn counterexample_suite(seed: u64, runs: usize, n: usize) -> Result<CounterexampleSummary> {
    let grid = GridCircle::new(n)?;
    let modulus = counterexample_nonconstant_modulus(&canonical_modulus_weight(), &SymbolMap::Identity, &grid, DEFAULT_TOL)?;
    let c = canonical_preimage();
    let preimage = counterexample_fat_preimage(&c.weight, &c.symbol, &c.t, &c.arc, &grid, DEFAULT_TOL)?;
    let mut rng = random::rng(seed, 3);
    let mut min_random_modulus_gap = f64::INFINITY;
    let mut min_random_preimage_gap = f64::INFINITY;
    for _ in 0..runs {
        let u = random::nonconstant_weight(&mut rng, n);
        let phi = random::symbol(&mut rng, n);
        let cx = counterexample_nonconstant_modulus(&u, &phi, &grid, DEFAULT_TOL)?;
        min_random_modulus_gap = min_random_modulus_gap.min(cx.result.certified_gap);
        let p = random::preimage_instance(&mut rng, n);
        let cx = counterexample_fat_preimage(&p.weight, &p.symbol, &p.t, &p.arc, &grid, DEFAULT_TOL)?;
        min_random_preimage_gap = min_random_preimage_gap.min(cx.certified_gap);
    }
    Ok(CounterexampleSummary { modulus, preimage, random_runs: runs, min_random_modulus_gap, min_random_preimage_gap })
}

#[derive(Clone, Debug, Serialize)]
pub struct RefinementSummary {
    pub doubling: GapSequence,
    pub identity: GapSequence,
    /// Constant-on-arc symbol with its fat-preimage operator.
    pub control: GapSequence,
}

pub fn refinement_suite(sizes: &[usize]) -> Result<RefinementSummary> {
    let op = canonical_rank_one();
    let run = |phi: SymbolMap| refinement_convergence(&WeightedComposition::new(ScalarField::one(), phi), &op, sizes, DEFAULT_TOL);
    let c = canonical_preimage();
    let g = ScalarField::TentDip { center: c.arc.center, half_width: c.arc.half_width, base: -0.5, depth: 0.5 };
    let control_op = OperatorExpr::from(FiniteRankOperator::rank_one(dirac(c.t), g));
    Ok(RefinementSummary {
        doubling: run(SymbolMap::Doubling)?,
        identity: run(SymbolMap::Identity)?,
        control: refinement_convergence(&WeightedComposition::new(c.weight, c.symbol), &control_op, sizes, DEFAULT_TOL)?,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvexRun {
    pub t: f64,
    pub sizes: Vec<usize>,
    pub gaps: Vec<f64>,
    /// Largest pointwise defect over all sizes.
    pub max_delta: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvexSummary {
    pub runs: Vec<ConvexRun>,
    /// Whether `|cos 2πθ|` was found constant.
    pub cosine_modulus_constant: bool,
    pub cosine_counterexample_gap: f64,
}

/// `t·C_doubling + (1−t)·C_shift` against the canonical rank-one operator,
/// plus the cosine average of two characters.
pub fn convex_suite(ts: &[f64], sizes: &[usize], demo_n: usize) -> Result<ConvexSummary> {
    let op = canonical_rank_one();
    let mut runs = Vec::with_capacity(ts.len());
    for &t in ts {
        let cc = ConvexCombination::new(t, SymbolMap::Doubling, SymbolMap::Shift { steps: 1 })?;
        let mut gaps = Vec::with_capacity(sizes.len());
        let mut max_delta = f64::NEG_INFINITY;
        for &n in sizes {
            let r = convex_center_check(&cc, &op, &GridCircle::new(n)?, DEFAULT_TOL)?;
            gaps.push(r.gap);
            max_delta = max_delta.max(r.max_delta);
        }
        runs.push(ConvexRun { t, sizes: sizes.to_vec(), gaps, max_delta });
    }
    let grid = GridCircle::new(demo_n)?;
    let cosine = ScalarField::Cosine { offset: 0.0, amplitude: 1.0, freq: 1 };
    let cx = counterexample_nonconstant_modulus(&cosine, &SymbolMap::Identity, &grid, DEFAULT_TOL)?;
    Ok(ConvexSummary {
        runs,
        cosine_modulus_constant: modulus_constancy(&cosine, &grid, DEFAULT_TOL)?.constant,
        cosine_counterexample_gap: cx.result.certified_gap,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleSummary {
    pub measures: usize,
    pub max_oracle_error: f64,
    pub max_decomposition_error: f64,
    pub positions_checked: usize,
}

/// Oracle against total variation, and `‖μ‖ = |μ({t})| + |μ|(S∖{t})` at
/// every atom and at `probes` grid points carrying no atom.
pub fn oracle_suite(seed: u64, count: usize, n: usize, max_atoms: usize, probes: usize) -> Result<OracleSummary> {
    let grid = GridCircle::new(n)?;
    let mut rng = random::rng(seed, 4);
    let mut max_oracle_error = 0.0f64;
    let mut max_decomposition_error = 0.0f64;
    let mut positions_checked = 0;
    for _ in 0..count {
        let mu = random::measure(&mut rng, n, max_atoms);
        let tv = total_variation(&mu);
        max_oracle_error = max_oracle_error.max((norm_oracle(&mu, &grid)? - tv).abs());
        let mut positions: Vec<Point> = mu.atoms().iter().map(|a| a.pos).collect();
        let free: Vec<Point> = grid.points().filter(|p| !positions.iter().any(|q| q.same_position(p))).collect();
        for _ in 0..probes {
            positions.push(free[rng.random_range(0..free.len())]);
        }
        for t in &positions {
            let split = point_mass(&mu, t)?.norm() + tv_excluding(&mu, std::slice::from_ref(t));
            max_decomposition_error = max_decomposition_error.max((split - tv).abs());
            positions_checked += 1;
        }
    }
    Ok(OracleSummary { measures: count, max_oracle_error, max_decomposition_error, positions_checked })
}

#[derive(Clone, Debug, Serialize)]
pub struct DiskSummary {
    /// Blaschke symbol with `u ≡ 2`, `φ(z) = z/2`, and `u(z) = (1+z)/2`.
    pub conditions: Vec<CConditions>,
    pub lower_bound: LowerBound,
    pub certified: CertifiedBound,
    /// Largest of the random samples of `|u(z)f(φ(z)) − (Tf)(z)|`.
    pub sampled_max: f64,
    pub automorphism: AutomorphismCheck,
}

pub fn disk_suite(seed: u64, random_samples: usize) -> Result<DiskSummary> {
    let one = DiskFunction::constant(Complex64::new(1.0, 0.0));
    let two = DiskFunction::constant(Complex64::new(2.0, 0.0));
    let blaschke = DiskFunction::blaschke(vec![Complex64::new(0.5, 0.0)]);
    let half = DiskFunction::ScaledIdentity { c: Complex64::new(0.5, 0.0) };
    let affine = DiskFunction::Polynomial { coeffs: vec![Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0)] };
    let conditions = vec![
        check_c_conditions(&two, &blaschke, 4096, DEFAULT_TOL)?,
        check_c_conditions(&two, &half, 4096, DEFAULT_TOL)?,
        check_c_conditions(&affine, &blaschke, 4096, DEFAULT_TOL)?,
    ];

    let squaring = DiskFunction::Polynomial {
        coeffs: vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
    };
    let lower_bound = disk_norm_lower_bound(&one, &squaring, &point_eval(0.0, -1.0), &SearchLadder::with_radii(vec![0.999]))?;

    let omega = Complex64::new(1.0, 0.0);
    let arc = ArcNeighborhood::new(omega, 0.1)?;
    let certified = certified_counterexample_bound(&one, &half, omega, 0.05, &arc, 4096)?;
    let t = disk_counterexample_operator(&one, &half, omega)?;
    let mut rng = random::rng(seed, 5);
    let mut sampled_max = 0.0f64;
    for _ in 0..random_samples {
        let zeros: Vec<Complex64> = (0..rng.random_range(0..=3))
            .map(|_| Complex64::from_polar(rng.random_range(0.0..0.999), rng.random_range(0.0..TAU)))
            .collect();
        let f = BlaschkeProduct::new(random::unit_phasor(&mut rng), zeros)?;
        let z = Complex64::from_polar(1.0, rng.random_range(0.0..TAU));
        let value = (one.eval(z)? * f.eval(half.eval(z)?)? - t.scale * f.eval(t.tau)? * t.output.eval(z)?).norm();
        sampled_max = sampled_max.max(value);
    }

    let moebius = DiskFunction::blaschke(vec![Complex64::new(0.5, 0.0)]);
    let automorphism = automorphism_identity_check(&moebius, &point_eval(0.0, 1.0), &SearchLadder::default())?;
    Ok(DiskSummary { conditions, lower_bound, certified, sampled_max, automorphism })
}

fn record<T: Serialize>(name: &str, inputs: Value, result: Result<T>, outcome: impl FnOnce(&T) -> bool) -> CheckRecord {
    match result {
        Ok(summary) => {
            let ok = outcome(&summary);
            CheckRecord::finished(name, inputs, true, ok, serde_json::to_value(&summary).expect("summaries serialize"))
        }
        Err(e) => CheckRecord::failed(name, inputs, true, &e),
    }
}

fn law(n: usize) -> f64 {
    (1.0 - (TAU / n as f64).cos()) / 2.0
}

fn follows_law(seq: &GapSequence) -> bool {
    seq.entries.iter().all(|e| (e.gap - law(e.n)).abs() <= 1e-12)
        && seq.strictly_decreasing()
        && seq.entries.last().is_some_and(|e| e.gap < 1e-5)
}

type Suite = fn(u64) -> CheckRecord;

const SUITES: [Suite; 7] = [
    |seed| {
        record("criterion-equivalence", serde_json::json!({"instances": 200, "n": 64}), criterion_equivalence(seed, 200, 64), |s| {
            s.disagreements == 0
        })
    },
    |seed| {
        record(
            "rotation-identity",
            serde_json::json!({"instances": 100, "n": 64, "lambda_grid": 4096}),
            rotation_identity(seed, 100, 64, 4096),
            |s| s.max_identity_error <= 1e-12 && s.max_search_excess <= 0.0,
        )
    },
    |seed| {
        record("counterexamples", serde_json::json!({"runs": 100, "n": 64}), counterexample_suite(seed, 100, 64), |s| {
            (s.modulus.result.perturbed_norm - 1.5).abs() <= 1e-9
                && (s.modulus.result.certified_gap - 0.5).abs() <= 1e-9
                && (s.preimage.perturbed_norm - 1.5).abs() <= 1e-9
                && (s.preimage.certified_gap - 0.5).abs() <= 1e-9
                && s.min_random_modulus_gap > 1e-6
                && s.min_random_preimage_gap > 1e-6
        })
    },
    |_| {
        record("refinement-law", serde_json::json!({"sizes": REFINEMENT_SIZES}), refinement_suite(&REFINEMENT_SIZES), |s| {
            follows_law(&s.doubling) && follows_law(&s.identity) && s.control.entries.iter().all(|e| e.gap >= 0.49)
        })
    },
    |_| {
        let ts = [0.0, 0.25, 0.5, 1.0];
        record(
            "convex",
            serde_json::json!({"t": ts, "sizes": REFINEMENT_SIZES, "demo_n": 64}),
            convex_suite(&ts, &REFINEMENT_SIZES, 64),
            |s| {
                s.runs.iter().all(|r| r.gaps.last().is_some_and(|g| *g < 1e-4) && r.max_delta <= 0.0)
                    && !s.cosine_modulus_constant
                    && s.cosine_counterexample_gap > 0.4
            },
        )
    },
    |seed| {
        record(
            "measure-oracle",
            serde_json::json!({"measures": 500, "n": 64, "max_atoms": 8, "probes": 8}),
            oracle_suite(seed, 500, 64, 8, 8),
            |s| s.max_oracle_error <= 1e-12 && s.max_decomposition_error <= 1e-12,
        )
    },
    |seed| {
        record("disk", serde_json::json!({"random_samples": 10000}), disk_suite(seed, 10_000), |s| {
            let c = &s.conditions;
            (c[0].c1 && c[0].c2 && c[0].c3)
                && !c[1].c2
                && !c[2].c1
                && s.lower_bound.bound >= 1.99
                && s.certified.valid
                && s.certified.margin >= 1e-3
                && s.sampled_max <= s.certified.bound
                && s.automorphism.lower >= 1.99
        })
    },
];

/// Runs every suite. Reports are identical for identical seeds.
pub fn selftest(seed: u64, threads: usize, timing: bool) -> Result<Report> {
    let run = |suite: &Suite| {
        let start = Instant::now();
        let mut r = suite(seed);
        if timing {
            r.runtime_seconds = Some(start.elapsed().as_secs_f64());
        }
        r
    };
    let records: Vec<CheckRecord> = if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| crate::error::LabError::InvalidInput(format!("cannot start {threads} threads: {e}")))?;
        pool.install(|| SUITES.par_iter().map(run).collect())
    } else {
        SUITES.iter().map(run).collect()
    };
    Ok(Report::new("selftest", seed, DEFAULT_TOL, None, records))
}
