//! Criterion functionals, equation checks, counterexample constructors and
//! the grid-refinement harness for `‖uC_φ + T‖ = ‖u‖∞ + ‖T‖`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::measures::{dirac, point_mass};
use crate::operators::{
    convex_combo_perturbed_norm, measure_at, operator_norm, perturbation_profile, ConvexCombination,
    FiniteRankOperator, OperatorExpr, PerturbationProfile, WeightedComposition,
};
use crate::space::{
    circle_distance, default_resolution, first_fat_preimage, modulus_constancy, Arc, GridCircle, Point,
    ScalarField, SymbolMap,
};

/// Absolute tolerance for verdicts.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Gaps below `−GAP_FLOOR` mean the computed norm exceeded the triangle bound.
pub const GAP_FLOOR: f64 = 1e-9;

/// Number of dyadic steps below `‖T‖` in the ε sweep.
pub const SWEEP_DEPTH: i32 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriterionResult {
    pub epsilon: f64,
    pub active_set_size: usize,
    /// Supremum over the active set of the defect, never positive.
    pub sup_value: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionSweep {
    pub results: Vec<CriterionResult>,
    pub holds: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EquationCheck {
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub weight_norm: f64,
    pub operator_norm: f64,
}

fn check_gap(gap: f64, what: &str) -> Result<()> {
    if gap < -GAP_FLOOR {
        return Err(LabError::Invariant(format!("{what}: norm exceeds the triangle bound by {}", -gap)));
    }
    Ok(())
}

fn criterion_from_profile(profile: &PerturbationProfile, epsilon: f64, tol: f64) -> Result<CriterionResult> {
    if !(epsilon > 0.0) {
        return Err(LabError::InvalidInput(format!("ε must be positive, got {epsilon}")));
    }
    let threshold = profile.operator_norm - epsilon;
    let mut active_set_size = 0;
    let mut sup = f64::NEG_INFINITY;
    for p in profile.points.iter().filter(|p| p.total > threshold) {
        active_set_size += 1;
        sup = sup.max(p.defect(profile.weight_norm));
    }
    if active_set_size == 0 {
        return Err(LabError::Invariant(format!("empty active set at ε = {epsilon}")));
    }
    // |u + m| may exceed ‖u‖ + |m| by an ulp
    let sup_value = sup.min(0.0);
    Ok(CriterionResult { epsilon, active_set_size, sup_value, holds: sup_value >= -tol })
}

/// Supremum of `|u(s) + μ_s({φ(s)})| − (‖u‖∞ + |μ_s({φ(s)})|)` over the
/// points with `‖μ_s‖ > ‖T‖ − ε`.
pub fn criterion_sup(
    wc: &WeightedComposition,
    op: &OperatorExpr,
    epsilon: f64,
    grid: &GridCircle,
    tol: f64,
) -> Result<CriterionResult> {
    criterion_from_profile(&perturbation_profile(wc, op, grid)?, epsilon, tol)
}

/// `{‖T‖·2^{−k} : k = 0..20} ∪ {‖T‖ + 1}`, or `{1}` when `T = 0`.
pub fn sweep_epsilons(operator_norm: f64) -> Vec<f64> {
    if operator_norm == 0.0 {
        return vec![1.0];
    }
    let mut eps: Vec<f64> = (0..=SWEEP_DEPTH).map(|k| operator_norm * 2f64.powi(-k)).collect();
    eps.push(operator_norm + 1.0);
    eps
}

pub fn criterion_sweep(
    wc: &WeightedComposition,
    op: &OperatorExpr,
    grid: &GridCircle,
    tol: f64,
) -> Result<CriterionSweep> {
    sweep_from_profile(&perturbation_profile(wc, op, grid)?, tol)
}

fn sweep_from_profile(profile: &PerturbationProfile, tol: f64) -> Result<CriterionSweep> {
    let results = sweep_epsilons(profile.operator_norm)
        .into_iter()
        .map(|eps| criterion_from_profile(profile, eps, tol))
        .collect::<Result<Vec<_>>>()?;
    let holds = results.iter().all(|r| r.holds);
    Ok(CriterionSweep { results, holds })
}

/// The defect supremum restricted to the grid points of `arc`.
pub fn open_set_criterion(wc: &WeightedComposition, op: &OperatorExpr, arc: &Arc, grid: &GridCircle) -> Result<f64> {
    let profile = perturbation_profile(wc, op, grid)?;
    let sup = profile
        .points
        .iter()
        .filter(|p| arc.contains(&p.s))
        .map(|p| p.defect(profile.weight_norm))
        .fold(f64::NEG_INFINITY, f64::max);
    if sup == f64::NEG_INFINITY {
        return Err(LabError::Precondition(format!(
            "arc centered at {} contains no point of the {}-point grid",
            arc.center,
            grid.n()
        )));
    }
    Ok(sup.min(0.0))
}

fn equation_from_profile(profile: &PerturbationProfile, tol: f64) -> Result<EquationCheck> {
    let lhs = profile.perturbed_norm();
    let rhs = profile.weight_norm + profile.operator_norm;
    let gap = rhs - lhs;
    check_gap(gap, "equation")?;
    Ok(EquationCheck {
        holds: gap <= tol,
        lhs,
        rhs,
        gap,
        weight_norm: profile.weight_norm,
        operator_norm: profile.operator_norm,
    })
}

pub fn equation_holds(wc: &WeightedComposition, op: &OperatorExpr, grid: &GridCircle, tol: f64) -> Result<EquationCheck> {
    equation_from_profile(&perturbation_profile(wc, op, grid)?, tol)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrossValidated {
    pub equation: EquationCheck,
    pub sweep: CriterionSweep,
}

/// Direct norms and the ε sweep, computed independently from one profile;
/// disagreeing verdicts are an invariant violation.
pub fn cross_validated_equation(
    wc: &WeightedComposition,
    op: &OperatorExpr,
    grid: &GridCircle,
    tol: f64,
) -> Result<CrossValidated> {
    let profile = perturbation_profile(wc, op, grid)?;
    let equation = equation_from_profile(&profile, tol)?;
    let sweep = sweep_from_profile(&profile, tol)?;
    if equation.holds != sweep.holds {
        return Err(LabError::Invariant(format!(
            "equation verdict {} (gap {}) disagrees with criterion sweep verdict {}",
            equation.holds, equation.gap, sweep.holds
        )));
    }
    Ok(CrossValidated { equation, sweep })
}

/// Share of grid points with `|μ_s({φ(s)})| < ε`.
pub fn s_epsilon_fraction(wc: &WeightedComposition, op: &OperatorExpr, epsilon: f64, grid: &GridCircle) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(LabError::InvalidInput(format!("ε must be positive, got {epsilon}")));
    }
    let mut count = 0usize;
    for s in grid.points() {
        let mu = measure_at(op, &s)?;
        if point_mass(&mu, &wc.symbol.eval(&s)?)?.norm() < epsilon {
            count += 1;
        }
    }
    Ok(count as f64 / grid.n() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counterexample {
    pub operator: FiniteRankOperator,
    pub perturbed_norm: f64,
    pub weight_norm: f64,
    pub operator_norm: f64,
    /// `‖u‖∞ + ‖T‖ − ‖uC_φ + T‖`.
    pub certified_gap: f64,
}

fn certify(wc: &WeightedComposition, operator: FiniteRankOperator, grid: &GridCircle) -> Result<Counterexample> {
    let eq = equation_holds(wc, &operator.clone().into(), grid, 0.0)?;
    if !(eq.gap > 0.0) {
        return Err(LabError::Invariant(format!("constructed operator has gap {} instead of a positive one", eq.gap)));
    }
    Ok(Counterexample {
        operator,
        perturbed_norm: eq.lhs,
        weight_norm: eq.weight_norm,
        operator_norm: eq.operator_norm,
        certified_gap: eq.gap,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModulusCounterexample {
    /// Where `|u|` is smallest; also the evaluation point `τ`.
    pub s0: Point,
    pub spread: f64,
    pub tent_half_width: f64,
    #[serde(flatten)]
    pub result: Counterexample,
}

/// For `|u|` not constant: `Tf = f(s₀)·v` with a tent `v` peaking at
/// `s₀ = argmin |u|` and supported where `|u| < ‖u‖∞ − spread/2`.
pub fn counterexample_nonconstant_modulus(
    u: &ScalarField,
    phi: &SymbolMap,
    grid: &GridCircle,
    tol: f64,
) -> Result<ModulusCounterexample> {
    let modulus = modulus_constancy(u, grid, tol)?;
    if modulus.constant {
        return Err(LabError::Precondition(format!(
            "|u| is constant on the grid (spread {:.3e} ≤ {tol:.3e})",
            modulus.spread
        )));
    }
    let n = grid.n();
    let moduli: Vec<f64> = u.grid_values(grid)?.iter().map(|v| v.norm()).collect();
    let k0 = moduli
        .iter()
        .enumerate()
        .fold(0, |best, (k, &m)| if m < moduli[best] { k } else { best });
    let level = modulus.value - modulus.spread / 2.0;
    let run = |dir: isize| {
        (1..n)
            .take_while(|&j| moduli[(k0 as isize + dir * j as isize).rem_euclid(n as isize) as usize] < level)
            .count()
    };
    let r = run(1).min(run(-1));
    let tent_half_width = ((r as f64 / 2.0 + 1.0) / n as f64).min(0.5);
    let s0 = grid.point(k0);
    let operator = FiniteRankOperator::rank_one(dirac(s0), ScalarField::tent(s0, tent_half_width));
    let wc = WeightedComposition::new(u.clone(), phi.clone());
    Ok(ModulusCounterexample {
        s0,
        spread: modulus.spread,
        tent_half_width,
        result: certify(&wc, operator, grid)?,
    })
}

/// For `φ ≡ t` on the arc `U` and `|u|` constant: `Tf = f(t)·g·u` with
/// `g` running from `−1` at the center of `U` to `−1/2` on and beyond its
/// boundary.
pub fn counterexample_fat_preimage(
    u: &ScalarField,
    phi: &SymbolMap,
    t: &Point,
    arc: &Arc,
    grid: &GridCircle,
    tol: f64,
) -> Result<Counterexample> {
    arc.validate()?;
    let modulus = modulus_constancy(u, grid, tol)?;
    if !modulus.constant || modulus.value <= tol {
        return Err(LabError::Precondition(format!(
            "|u| must be a nonzero constant (max {}, spread {})",
            modulus.value, modulus.spread
        )));
    }
    let inside = arc.grid_indices(grid);
    if !inside.iter().any(|&k| circle_distance(&grid.point(k), &arc.center) < arc.half_width) {
        return Err(LabError::Precondition(format!(
            "arc centered at {} has no grid point in its interior",
            arc.center
        )));
    }
    for &k in &inside {
        let s = grid.point(k);
        let image = phi.eval(&s)?;
        if !image.same_position(t) {
            return Err(LabError::Precondition(format!("φ({s}) = {image} ≠ {t} inside the arc")));
        }
    }
    let g = ScalarField::TentDip { center: arc.center, half_width: arc.half_width, base: -0.5, depth: 0.5 };
    let operator = FiniteRankOperator::rank_one(dirac(*t), ScalarField::product(g, u.clone()));
    certify(&WeightedComposition::new(u.clone(), phi.clone()), operator, grid)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapEntry {
    pub n: usize,
    pub gap: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// Resolution used for the preimage diagnostic.
    pub resolution: f64,
    /// A target whose preimage is fat at that resolution, if any.
    pub fat_preimage: Option<Point>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct GapSequence {
    pub entries: Vec<GapEntry>,
}

impl GapSequence {
    pub fn gaps(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.gap).collect()
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.entries.windows(2).all(|w| w[1].gap < w[0].gap)
    }
}

fn fat_preimage_diagnostic(symbol: &SymbolMap, grid: &GridCircle) -> Result<(f64, Option<Point>)> {
    let delta = default_resolution(grid);
    match first_fat_preimage(symbol, delta, grid) {
        Ok(target) => Ok((delta, target)),
        Err(LabError::Precondition(_)) => Ok((delta, None)),
        Err(e) => Err(e),
    }
}

/// `gap(n) = ‖u‖∞ + ‖T‖ − ‖uC_φ + T‖` on each grid size, with `u`, `φ`, `T`
/// given in closed form. Requires `|u|` constant.
pub fn refinement_convergence(
    wc: &WeightedComposition,
    op: &OperatorExpr,
    sizes: &[usize],
    tol: f64,
) -> Result<GapSequence> {
    let mut entries = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let grid = GridCircle::new(n)?;
        let modulus = modulus_constancy(&wc.weight, &grid, tol)?;
        if !modulus.constant {
            return Err(LabError::Precondition(format!(
                "|u| is not constant at n = {n} (spread {:.3e})",
                modulus.spread
            )));
        }
        let eq = equation_holds(wc, op, &grid, tol)?;
        let (resolution, fat_preimage) = fat_preimage_diagnostic(&wc.symbol, &grid)?;
        entries.push(GapEntry { n, gap: eq.gap, lhs: eq.lhs, rhs: eq.rhs, resolution, fat_preimage });
    }
    Ok(GapSequence { entries })
}

/// Convex-combination analogue of [`refinement_convergence`]: `1 + ‖T‖ − ‖T_t + T‖`.
pub fn convex_refinement(cc: &ConvexCombination, op: &OperatorExpr, sizes: &[usize]) -> Result<GapSequence> {
    let mut entries = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let grid = GridCircle::new(n)?;
        let lhs = convex_combo_perturbed_norm(cc, op, &grid)?;
        let rhs = 1.0 + operator_norm(op, &grid)?;
        check_gap(rhs - lhs, "convex combination")?;
        entries.push(GapEntry { n, gap: rhs - lhs, lhs, rhs, resolution: default_resolution(&grid), fat_preimage: None });
    }
    Ok(GapSequence { entries })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaValue {
    pub s: Point,
    /// Whether `φ(s) ≠ ψ(s)`.
    pub split: bool,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvexReport {
    pub holds: bool,
    pub gap: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub max_delta: f64,
    pub deltas: Vec<DeltaValue>,
}

/// `1 + ‖T‖ − ‖tC_φ + (1−t)C_ψ + T‖`, with the pointwise defects
/// `|t + m_φ| + |1−t + m_ψ| − (1 + |m_φ| + |m_ψ|)` where `φ(s) ≠ ψ(s)` and
/// `|1 + m_φ| − (1 + |m_φ|)` where they agree.
pub fn convex_center_check(cc: &ConvexCombination, op: &OperatorExpr, grid: &GridCircle, tol: f64) -> Result<ConvexReport> {
    let lhs = convex_combo_perturbed_norm(cc, op, grid)?;
    let rhs = 1.0 + operator_norm(op, grid)?;
    let gap = rhs - lhs;
    check_gap(gap, "convex combination")?;
    let t = Complex64::new(cc.t, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let mut deltas = Vec::with_capacity(grid.n());
    for s in grid.points() {
        let mu = measure_at(op, &s)?;
        let a = cc.first.eval(&s)?;
        let b = cc.second.eval(&s)?;
        let ma = point_mass(&mu, &a)?;
        let (split, value) = if a.same_position(&b) {
            (false, (one + ma).norm() - (1.0 + ma.norm()))
        } else {
            let mb = point_mass(&mu, &b)?;
            (true, (t + ma).norm() + (one - t + mb).norm() - (1.0 + ma.norm() + mb.norm()))
        };
        deltas.push(DeltaValue { s, split, value });
    }
    let max_delta = deltas.iter().map(|d| d.value).fold(f64::NEG_INFINITY, f64::max);
    Ok(ConvexReport { holds: gap <= tol, gap, lhs, rhs, max_delta, deltas })
}
