//! Operators on `C(S)` stored through their measure families
//! `s ↦ μ_s = T*(δ_s)`. Every norm here is the exact supremum over the
//! grid of total variations, never a matrix approximation.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::measures::{dirac, point_mass, total_variation, tv_excluding, AtomicMeasure};
use crate::serde_util;
use crate::space::{modulus_constancy, GridCircle, Point, ScalarField, SymbolMap};

/// Default number of unimodular scalars in the rotation search.
pub const DEFAULT_LAMBDA_GRID: usize = 4096;

/// `uC_φ : f ↦ u·(f∘φ)`, represented by the family `u(s)·δ_{φ(s)}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightedComposition {
    pub weight: ScalarField,
    pub symbol: SymbolMap,
}

impl WeightedComposition {
    pub fn new(weight: ScalarField, symbol: SymbolMap) -> Self {
        Self { weight, symbol }
    }

    /// `‖uC_φ‖ = ‖u‖∞` on the grid.
    pub fn norm(&self, grid: &GridCircle) -> Result<f64> {
        self.weight.sup_modulus(grid)
    }

    pub fn measure_at(&self, s: &Point) -> Result<AtomicMeasure> {
        Ok(dirac(self.symbol.eval(s)?).scaled(self.weight.eval(s)?))
    }
}

/// `f ↦ ⟨f, functional⟩ · output`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankOneTerm {
    pub output: ScalarField,
    pub functional: AtomicMeasure,
}

/// `Tf = Σ_i μ_i(f)·g_i`; its family is `s ↦ Σ_i g_i(s)·μ_i`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FiniteRankOperator {
    pub terms: Vec<RankOneTerm>,
}

impl FiniteRankOperator {
    pub fn rank_one(functional: AtomicMeasure, output: ScalarField) -> Self {
        Self { terms: vec![RankOneTerm { output, functional }] }
    }

    pub fn measure_at(&self, s: &Point) -> Result<AtomicMeasure> {
        let mut out = AtomicMeasure::zero();
        for term in &self.terms {
            out.add_scaled(term.output.eval(s)?, &term.functional);
        }
        Ok(out)
    }
}

/// `T_t = t·C_φ + (1−t)·C_ψ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvexCombination {
    pub t: f64,
    pub first: SymbolMap,
    pub second: SymbolMap,
}

impl ConvexCombination {
    pub fn new(t: f64, first: SymbolMap, second: SymbolMap) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(LabError::InvalidInput(format!("convex weight t must lie in [0, 1], got {t}")));
        }
        Ok(Self { t, first, second })
    }

    pub fn measure_at(&self, s: &Point) -> Result<AtomicMeasure> {
        let mut out = AtomicMeasure::zero();
        out.add_atom(self.first.eval(s)?, Complex64::new(self.t, 0.0));
        out.add_atom(self.second.eval(s)?, Complex64::new(1.0 - self.t, 0.0));
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorComponent {
    Weighted(WeightedComposition),
    FiniteRank(FiniteRankOperator),
    Convex(ConvexCombination),
}

impl OperatorComponent {
    fn measure_at(&self, s: &Point) -> Result<AtomicMeasure> {
        match self {
            OperatorComponent::Weighted(w) => w.measure_at(s),
            OperatorComponent::FiniteRank(f) => f.measure_at(s),
            OperatorComponent::Convex(c) => c.measure_at(s),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScaledComponent {
    #[serde(with = "serde_util::complex")]
    pub coeff: Complex64,
    pub component: OperatorComponent,
}

/// A finite formal sum `Σ_k c_k·A_k`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct OperatorExpr {
    pub terms: Vec<ScaledComponent>,
}

impl OperatorExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn single(component: OperatorComponent) -> Self {
        Self::zero().plus(Complex64::new(1.0, 0.0), component)
    }

    pub fn plus(mut self, coeff: Complex64, component: OperatorComponent) -> Self {
        self.terms.push(ScaledComponent { coeff, component });
        self
    }

    pub fn scaled(&self, lambda: Complex64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| ScaledComponent { coeff: lambda * t.coeff, component: t.component.clone() })
                .collect(),
        }
    }
}

impl From<WeightedComposition> for OperatorExpr {
    fn from(w: WeightedComposition) -> Self {
        Self::single(OperatorComponent::Weighted(w))
    }
}

impl From<FiniteRankOperator> for OperatorExpr {
    fn from(f: FiniteRankOperator) -> Self {
        Self::single(OperatorComponent::FiniteRank(f))
    }
}

impl From<ConvexCombination> for OperatorExpr {
    fn from(c: ConvexCombination) -> Self {
        Self::single(OperatorComponent::Convex(c))
    }
}

/// `μ_s = T*(δ_s)`, distributed linearly over the terms of `T`.
pub fn measure_at(op: &OperatorExpr, s: &Point) -> Result<AtomicMeasure> {
    let mut out = AtomicMeasure::zero();
    for term in &op.terms {
        out.add_scaled(term.coeff, &term.component.measure_at(s)?);
    }
    Ok(out)
}

/// `‖T‖ = sup_s ‖μ_s‖` over the grid.
pub fn operator_norm(op: &OperatorExpr, grid: &GridCircle) -> Result<f64> {
    let mut best = 0.0f64;
    for s in grid.points() {
        best = best.max(total_variation(&measure_at(op, &s)?));
    }
    Ok(best)
}

/// Per-point data of `uC_φ + T` at one grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointProfile {
    pub s: Point,
    /// `u(s)`.
    pub weight: Complex64,
    /// `φ(s)`.
    pub image: Point,
    /// `‖μ_s‖`.
    pub total: f64,
    /// `μ_s({φ(s)})`.
    pub mass_at_image: Complex64,
    /// `|μ_s|(S ∖ {φ(s)})`.
    pub rest: f64,
}

impl PointProfile {
    /// `‖u(s)δ_{φ(s)} + μ_s‖ = |u(s) + μ_s({φ(s)})| + |μ_s|(S∖{φ(s)})`.
    pub fn perturbed(&self) -> f64 {
        (self.weight + self.mass_at_image).norm() + self.rest
    }

    /// `|u(s) + μ_s({φ(s)})| − (‖u‖∞ + |μ_s({φ(s)})|)`.
    pub fn defect(&self, weight_norm: f64) -> f64 {
        (self.weight + self.mass_at_image).norm() - (weight_norm + self.mass_at_image.norm())
    }
}

/// Everything needed to evaluate `‖uC_φ + T‖` and its criteria on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationProfile {
    pub weight_norm: f64,
    pub operator_norm: f64,
    pub points: Vec<PointProfile>,
}

impl PerturbationProfile {
    pub fn perturbed_norm(&self) -> f64 {
        self.points.iter().map(PointProfile::perturbed).fold(0.0, f64::max)
    }
}

pub fn perturbation_profile(
    wc: &WeightedComposition,
    op: &OperatorExpr,
    grid: &GridCircle,
) -> Result<PerturbationProfile> {
    let mut points = Vec::with_capacity(grid.n());
    let mut weight_norm = 0.0f64;
    let mut op_norm = 0.0f64;
    for s in grid.points() {
        let weight = wc.weight.eval(&s)?;
        let image = wc.symbol.eval(&s)?;
        let mu = measure_at(op, &s)?;
        let total = total_variation(&mu);
        weight_norm = weight_norm.max(weight.norm());
        op_norm = op_norm.max(total);
        points.push(PointProfile {
            s,
            weight,
            image,
            total,
            mass_at_image: point_mass(&mu, &image)?,
            rest: tv_excluding(&mu, &[image]),
        });
    }
    Ok(PerturbationProfile { weight_norm, operator_norm: op_norm, points })
}

/// `‖uC_φ + T‖ = sup_s (|u(s) + μ_s({φ(s)})| + |μ_s|(S∖{φ(s)}))`.
pub fn perturbed_norm(wc: &WeightedComposition, op: &OperatorExpr, grid: &GridCircle) -> Result<f64> {
    Ok(perturbation_profile(wc, op, grid)?.perturbed_norm())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RotationMax {
    /// `sup_s (|u(s)| + |μ_s({φ(s)})| + |μ_s|(S∖{φ(s)}))`.
    pub max: f64,
    /// `‖u‖∞ + ‖T‖`.
    pub target: f64,
    /// Best `‖uC_φ + λT‖` over the λ grid.
    pub searched_max: f64,
    #[serde(with = "serde_util::complex")]
    pub argmax_lambda: Complex64,
    pub argmax_index: usize,
    pub lambda_grid: usize,
    /// `(2π/λ_grid)·‖T‖ + 1e−9`.
    pub search_tolerance: f64,
}

/// `max_{λ∈𝕋} ‖uC_φ + λT‖`, both in closed form and by searching
/// `λ_grid` equispaced unimodular scalars. Requires `|u|` constant within
/// `tol`. With `λ_grid = 2` the search runs over `{+1, −1}`.
pub fn rotation_max_norm(
    wc: &WeightedComposition,
    op: &OperatorExpr,
    grid: &GridCircle,
    lambda_grid: usize,
    tol: f64,
) -> Result<RotationMax> {
    if lambda_grid == 0 {
        return Err(LabError::InvalidInput("λ grid must be positive".into()));
    }
    let modulus = modulus_constancy(&wc.weight, grid, tol)?;
    if !modulus.constant {
        return Err(LabError::Precondition(format!(
            "|u| is not constant (spread {:.3e} > {tol:.3e})",
            modulus.spread
        )));
    }
    let profile = perturbation_profile(wc, op, grid)?;
    let max = profile
        .points
        .iter()
        .map(|p| p.weight.norm() + p.mass_at_image.norm() + p.rest)
        .fold(0.0, f64::max);

    let mut searched_max = f64::NEG_INFINITY;
    let mut argmax_index = 0;
    for k in 0..lambda_grid {
        let lambda = Complex64::from_polar(1.0, TAU * k as f64 / lambda_grid as f64);
        let value = profile
            .points
            .iter()
            .map(|p| (p.weight + lambda * p.mass_at_image).norm() + p.rest)
            .fold(0.0, f64::max);
        if value > searched_max {
            searched_max = value;
            argmax_index = k;
        }
    }
    let search_tolerance = TAU / lambda_grid as f64 * profile.operator_norm + 1e-9;
    if (max - searched_max).abs() > search_tolerance {
        return Err(LabError::Invariant(format!(
            "rotation search {searched_max} disagrees with closed form {max} beyond {search_tolerance}"
        )));
    }
    Ok(RotationMax {
        max,
        target: profile.weight_norm + profile.operator_norm,
        searched_max,
        argmax_lambda: Complex64::from_polar(1.0, TAU * argmax_index as f64 / lambda_grid as f64),
        argmax_index,
        lambda_grid,
        search_tolerance,
    })
}

/// `‖t·C_φ + (1−t)·C_ψ + T‖ = sup_s ‖t·δ_{φ(s)} + (1−t)·δ_{ψ(s)} + μ_s‖`.
pub fn convex_combo_perturbed_norm(cc: &ConvexCombination, op: &OperatorExpr, grid: &GridCircle) -> Result<f64> {
    let mut best = 0.0f64;
    for s in grid.points() {
        let mut combined = cc.measure_at(&s)?;
        combined.add_scaled(Complex64::new(1.0, 0.0), &measure_at(op, &s)?);
        best = best.max(total_variation(&combined));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::linear_combine;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn grid(n: usize) -> GridCircle {
        GridCircle::new(n).unwrap()
    }

    fn raised_cosine() -> ScalarField {
        ScalarField::Cosine { offset: 0.5, amplitude: 0.5, freq: 1 }
    }

    /// `f ↦ coeff·f(t)·g`.
    fn point_eval(t: Point, g: ScalarField, coeff: Complex64) -> OperatorExpr {
        OperatorExpr::zero().plus(coeff, OperatorComponent::FiniteRank(FiniteRankOperator::rank_one(dirac(t), g)))
    }

    #[test]
    fn weighted_composition_family() {
        let wc = WeightedComposition::new(ScalarField::one(), SymbolMap::Doubling);
        let mu = measure_at(&wc.clone().into(), &Point::grid(1, 4)).unwrap();
        assert_eq!(mu, dirac(Point::grid(1, 2)));
    }

    #[test]
    fn rank_one_family_is_v_times_dirac() {
        let tau = Point::grid(3, 16);
        let v = ScalarField::tent(Point::grid(0, 1), 0.25);
        let op = point_eval(tau, v.clone(), c(1.0, 0.0));
        for s in grid(16).points() {
            let expected = dirac(tau).scaled(v.eval(&s).unwrap());
            assert_eq!(measure_at(&op, &s).unwrap(), expected);
        }
        assert_eq!(operator_norm(&op, &grid(16)).unwrap(), 1.0);
    }

    #[test]
    fn convex_family_merges_coinciding_images() {
        let cc = ConvexCombination::new(0.3, SymbolMap::Identity, SymbolMap::Identity).unwrap();
        let mu = cc.measure_at(&Point::grid(2, 8)).unwrap();
        assert_eq!(mu.atoms().len(), 1);
        assert!((mu.atoms()[0].weight() - c(1.0, 0.0)).norm() < 1e-15);
        assert!(ConvexCombination::new(1.5, SymbolMap::Identity, SymbolMap::Doubling).is_err());
    }

    #[test]
    fn operator_norm_examples() {
        let g = grid(32);
        assert_eq!(operator_norm(&OperatorExpr::zero(), &g).unwrap(), 0.0);
        // δ_t·g·u with |u| ≡ 2 and ‖g‖ = 1
        let u = ScalarField::UnimodularExp { amplitude: 2.0, freq: 3, phase: 0.1 };
        let gfield = ScalarField::TentDip { center: Point::grid(4, 32), half_width: 0.25, base: -0.5, depth: 0.5 };
        let op = point_eval(Point::grid(7, 32), ScalarField::product(gfield, u), c(1.0, 0.0));
        assert!((operator_norm(&op, &g).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn perturbed_norm_examples() {
        let g = grid(64);
        let u = ScalarField::UnimodularExp { amplitude: 1.5, freq: 2, phase: 0.0 };
        let wc = WeightedComposition::new(u, SymbolMap::Doubling);
        assert!((perturbed_norm(&wc, &OperatorExpr::zero(), &g).unwrap() - 1.5).abs() < 1e-15);
        let minus_self = OperatorExpr::from(wc.clone()).scaled(c(-1.0, 0.0));
        assert_eq!(perturbed_norm(&wc, &minus_self, &g).unwrap(), 0.0);

        let daug = WeightedComposition::new(ScalarField::one(), SymbolMap::Identity);
        let op = point_eval(Point::grid(0, 1), raised_cosine(), c(-1.0, 0.0));
        let expected = 2.0 - (1.0 - (TAU / 64.0).cos()) / 2.0;
        assert!((perturbed_norm(&daug, &op, &g).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn perturbed_split_matches_merged_total_variation() {
        let g = grid(24);
        let wc = WeightedComposition::new(
            ScalarField::UnimodularExp { amplitude: 1.0, freq: 1, phase: 0.3 },
            SymbolMap::Shift { steps: 5 },
        );
        let op = point_eval(Point::grid(6, 24), raised_cosine(), c(0.3, -0.8))
            .plus(c(1.0, 0.0), OperatorComponent::Weighted(WeightedComposition::new(ScalarField::one(), SymbolMap::Doubling)));
        let profile = perturbation_profile(&wc, &op, &g).unwrap();
        for p in &profile.points {
            let mu = measure_at(&op, &p.s).unwrap();
            let merged = linear_combine(&[p.weight, c(1.0, 0.0)], &[dirac(p.image), mu]).unwrap();
            assert!((total_variation(&merged) - p.perturbed()).abs() < 1e-13);
        }
    }

    #[test]
    fn rotation_examples() {
        let g = grid(32);
        let wc = WeightedComposition::new(ScalarField::one(), SymbolMap::Doubling);
        let op = point_eval(Point::grid(0, 1), ScalarField::one(), c(1.0, 0.0));
        let r = rotation_max_norm(&wc, &op, &g, DEFAULT_LAMBDA_GRID, 1e-9).unwrap();
        assert_eq!(r.max, 2.0);
        assert!((r.searched_max - 2.0).abs() < 1e-12);

        let r = rotation_max_norm(&wc, &OperatorExpr::zero(), &g, DEFAULT_LAMBDA_GRID, 1e-9).unwrap();
        assert_eq!(r.max, 1.0);
        assert_eq!(r.argmax_index, 0);
        assert_eq!(r.argmax_lambda, c(1.0, 0.0));

        let minus_self = OperatorExpr::from(wc.clone()).scaled(c(-1.0, 0.0));
        let r = rotation_max_norm(&wc, &minus_self, &g, DEFAULT_LAMBDA_GRID, 1e-9).unwrap();
        assert_eq!(r.max, 2.0);
        assert_eq!(r.argmax_index, DEFAULT_LAMBDA_GRID / 2);
        assert!((r.argmax_lambda - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn rotation_rejects_nonconstant_modulus() {
        let wc = WeightedComposition::new(raised_cosine(), SymbolMap::Identity);
        let err = rotation_max_norm(&wc, &OperatorExpr::zero(), &grid(16), 64, 1e-9);
        assert!(matches!(err, Err(LabError::Precondition(_))));
    }

    #[test]
    fn real_scalars_use_a_two_point_lambda_grid() {
        let g = grid(16);
        let wc = WeightedComposition::new(ScalarField::one(), SymbolMap::Identity);
        let op = point_eval(Point::grid(0, 1), ScalarField::one(), c(-0.5, 0.0));
        let r = rotation_max_norm(&wc, &op, &g, 2, 1e-9).unwrap();
        assert_eq!(r.searched_max, 1.5);
        assert_eq!(r.max, 1.5);
    }

    #[test]
    fn convex_examples() {
        let g = grid(64);
        let minus_eval = point_eval(Point::grid(0, 1), ScalarField::one(), c(-1.0, 0.0));
        let cc = ConvexCombination::new(1.0, SymbolMap::Doubling, SymbolMap::Shift { steps: 1 }).unwrap();
        let wc = WeightedComposition::new(ScalarField::one(), SymbolMap::Doubling);
        assert_eq!(
            convex_combo_perturbed_norm(&cc, &minus_eval, &g).unwrap(),
            perturbed_norm(&wc, &minus_eval, &g).unwrap()
        );
        let cc = ConvexCombination::new(0.25, SymbolMap::Doubling, SymbolMap::Shift { steps: 1 }).unwrap();
        assert_eq!(convex_combo_perturbed_norm(&cc, &OperatorExpr::zero(), &g).unwrap(), 1.0);
    }

    /// Golden value from an independent integer-index evaluation.
    #[test]
    fn convex_golden_value() {
        let n = 64usize;
        let t = 0.4;
        let mut oracle = 0.0f64;
        for k in 0..n {
            let mut atoms: Vec<(usize, f64)> = Vec::new();
            for (pos, w) in [((2 * k) % n, t), ((k + 1) % n, 1.0 - t), (0, -1.0)] {
                match atoms.iter_mut().find(|(p, _)| *p == pos) {
                    Some(entry) => entry.1 += w,
                    None => atoms.push((pos, w)),
                }
            }
            oracle = oracle.max(atoms.iter().map(|(_, w)| w.abs()).sum());
        }
        assert_eq!(oracle, 2.0);
        let cc = ConvexCombination::new(t, SymbolMap::Doubling, SymbolMap::Rotation { by: Point::grid(1, 64) }).unwrap();
        let op = point_eval(Point::grid(0, 1), ScalarField::one(), c(-1.0, 0.0));
        assert!((convex_combo_perturbed_norm(&cc, &op, &grid(n)).unwrap() - oracle).abs() < 1e-15);
    }

    fn arb_table(n: usize) -> impl Strategy<Value = ScalarField> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
            .prop_map(|v| ScalarField::Samples { values: v.into_iter().map(|(a, b)| c(a, b)).collect() })
    }

    fn arb_rank_one(n: usize) -> impl Strategy<Value = OperatorExpr> {
        (arb_table(n), prop::collection::vec((0..n as u64, -1.0f64..1.0, -1.0f64..1.0), 1..4)).prop_map(move |(g, atoms)| {
            let mut mu = AtomicMeasure::zero();
            for (k, re, im) in atoms {
                mu.add_atom(Point::grid(k, n as u64), c(re, im));
            }
            FiniteRankOperator::rank_one(mu, g).into()
        })
    }

    fn arb_symbol() -> impl Strategy<Value = SymbolMap> {
        prop_oneof![
            Just(SymbolMap::Identity),
            Just(SymbolMap::Doubling),
            (-3i64..4).prop_map(|steps| SymbolMap::Shift { steps }),
        ]
    }

    proptest! {
        #[test]
        fn triangle_bounds(u in arb_table(16), phi in arb_symbol(), op in arb_rank_one(16)) {
            let g = grid(16);
            let wc = WeightedComposition::new(u, phi);
            let lhs = perturbed_norm(&wc, &op, &g).unwrap();
            let un = wc.norm(&g).unwrap();
            let tn = operator_norm(&op, &g).unwrap();
            prop_assert!(lhs <= un + tn + 1e-12);
            prop_assert!(lhs >= (un - tn).abs() - 1e-12);
        }

        #[test]
        fn family_is_linear(a in arb_rank_one(16), b in arb_rank_one(16), k in 0u64..16, x in -2.0f64..2.0) {
            let alpha = c(x, 0.5);
            let beta = c(-1.0, x);
            let mut combo = a.scaled(alpha);
            combo.terms.extend(b.scaled(beta).terms);
            let s = Point::grid(k, 16);
            let expected = linear_combine(&[alpha, beta], &[measure_at(&a, &s).unwrap(), measure_at(&b, &s).unwrap()]).unwrap();
            let got = measure_at(&combo, &s).unwrap();
            prop_assert_eq!(got.atoms().len(), expected.atoms().len());
            for (x, y) in got.atoms().iter().zip(expected.atoms()) {
                prop_assert!(x.pos.same_position(&y.pos));
                prop_assert!((x.weight() - y.weight()).norm() <= 1e-12);
            }
        }

        #[test]
        fn lambda_lipschitz(u in arb_table(16), op in arb_rank_one(16), a in 0.0f64..TAU, b in 0.0f64..TAU) {
            let g = grid(16);
            let wc = WeightedComposition::new(u, SymbolMap::Doubling);
            let la = Complex64::from_polar(1.0, a);
            let lb = Complex64::from_polar(1.0, b);
            let na = perturbed_norm(&wc, &op.scaled(la), &g).unwrap();
            let nb = perturbed_norm(&wc, &op.scaled(lb), &g).unwrap();
            let tn = operator_norm(&op, &g).unwrap();
            prop_assert!((na - nb).abs() <= (la - lb).norm() * tn + 1e-12);
        }

        #[test]
        fn norm_equals_pointwise_oracle(op in arb_rank_one(16)) {
            let g = grid(16);
            let oracle = g.points()
                .map(|s| crate::measures::norm_oracle(&measure_at(&op, &s).unwrap(), &g).unwrap())
                .fold(0.0, f64::max);
            prop_assert!((operator_norm(&op, &g).unwrap() - oracle).abs() <= 1e-12);
        }
    }
}
