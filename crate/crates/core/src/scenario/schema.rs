//! Scenario documents: JSON, strict about unknown fields.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::disk::{ArcNeighborhood, DiskFunction, RankOneDiskOperator, SearchLadder, DEFAULT_SAMPLES};
use crate::error::{LabError, Result};
use crate::measures::AtomicMeasure;
use crate::operators::{
    ConvexCombination, FiniteRankOperator, OperatorComponent, OperatorExpr, WeightedComposition, DEFAULT_LAMBDA_GRID,
};
use crate::serde_util;
use crate::space::{Arc, GridCircle, Point, ScalarField, SymbolMap};

pub const SCHEMA_VERSION: &str = "1";

fn default_n() -> usize {
    64
}

fn default_tolerance() -> f64 {
    crate::criteria::DEFAULT_TOL
}

fn default_lambda_grid() -> usize {
    DEFAULT_LAMBDA_GRID
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

pub(crate) fn default_refinement_bound() -> f64 {
    1e-5
}

fn default_convex_bound() -> f64 {
    1e-4
}

fn default_search_tolerance() -> f64 {
    1e-2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    #[serde(default = "default_n")]
    pub n: usize,
    /// Grid sizes for refinement-type checks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
}

impl Default for SpaceSpec {
    fn default() -> Self {
        Self { n: default_n(), sizes: None }
    }
}

/// One term `coeff · A` of the perturbing operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TermSpec {
    Weighted {
        #[serde(with = "serde_util::complex", default = "serde_util::one")]
        coeff: Complex64,
        weight: ScalarField,
        #[serde(default)]
        symbol: SymbolMap,
    },
    /// `f ↦ ⟨f, functional⟩ · output`.
    RankOne {
        #[serde(with = "serde_util::complex", default = "serde_util::one")]
        coeff: Complex64,
        functional: AtomicMeasure,
        output: ScalarField,
    },
    Convex {
        #[serde(with = "serde_util::complex", default = "serde_util::one")]
        coeff: Complex64,
        t: f64,
        first: SymbolMap,
        second: SymbolMap,
    },
}

impl TermSpec {
    fn coeff(&self) -> Complex64 {
        match self {
            TermSpec::Weighted { coeff, .. } | TermSpec::RankOne { coeff, .. } | TermSpec::Convex { coeff, .. } => *coeff,
        }
    }

    fn component(&self) -> Result<OperatorComponent> {
        Ok(match self {
            TermSpec::Weighted { weight, symbol, .. } => {
                OperatorComponent::Weighted(WeightedComposition::new(weight.clone(), symbol.clone()))
            }
            TermSpec::RankOne { functional, output, .. } => {
                OperatorComponent::FiniteRank(FiniteRankOperator::rank_one(functional.clone(), output.clone()))
            }
            TermSpec::Convex { t, first, second, .. } => {
                OperatorComponent::Convex(ConvexCombination::new(*t, first.clone(), second.clone())?)
            }
        })
    }

    fn validate(&self) -> Result<()> {
        let c = self.coeff();
        if !(c.re.is_finite() && c.im.is_finite()) {
            return Err(LabError::InvalidInput(format!("coefficient {c} is not finite")));
        }
        match self {
            TermSpec::Weighted { weight, symbol, .. } => {
                weight.validate()?;
                symbol.validate()
            }
            TermSpec::RankOne { output, .. } => output.validate(),
            TermSpec::Convex { first, second, .. } => {
                first.validate()?;
                second.validate()?;
                self.component().map(|_| ())
            }
        }
    }
}

/// `Tf = c · f(τ) · g` on the disk algebra.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiskOperatorSpec {
    PointEval {
        #[serde(with = "serde_util::complex")]
        tau: Complex64,
        g: DiskFunction,
        #[serde(with = "serde_util::complex", default = "serde_util::one")]
        c: Complex64,
    },
}

impl DiskOperatorSpec {
    pub fn build(&self) -> Result<RankOneDiskOperator> {
        match self {
            DiskOperatorSpec::PointEval { tau, g, c } => RankOneDiskOperator::new(*tau, g.clone(), *c),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskSpec {
    pub weight: DiskFunction,
    pub symbol: DiskFunction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<DiskOperatorSpec>,
}

/// A named check and its parameters. `expect` is the outcome the check is
/// supposed to produce (default `true`); the verdict is `pass` when they
/// agree.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckSpec {
    #[serde(flatten)]
    pub kind: CheckKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expect: Option<bool>,
}

impl<'de> Deserialize<'de> for CheckSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let mut map = serde_json::Map::deserialize(d)?;
        let expect = match map.remove("expect") {
            None => None,
            Some(v) => Some(bool::deserialize(v).map_err(|e| D::Error::custom(format!("expect: {e}")))?),
        };
        let kind = serde_path_to_error::deserialize(serde_json::Value::Object(map)).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                D::Error::custom(inner)
            } else {
                D::Error::custom(format!("{path}: {inner}"))
            }
        })?;
        Ok(CheckSpec { kind, expect })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CheckKind {
    /// Direct norms against the ε sweep.
    Equation,
    CriterionSweep,
    RotationMax {
        #[serde(default = "default_lambda_grid")]
        lambda_grid: usize,
    },
    CounterexampleModulus,
    CounterexamplePreimage {
        t: Point,
        arc: Arc,
    },
    Convex {
        t: f64,
        first: SymbolMap,
        second: SymbolMap,
        /// Largest acceptable gap at the finest size of a sweep.
        #[serde(default = "default_convex_bound")]
        final_gap_below: f64,
    },
    SEpsilon {
        epsilon: f64,
        #[serde(default)]
        at_least: f64,
    },
    Refinement {
        #[serde(default = "default_refinement_bound")]
        final_gap_below: f64,
    },
    OpenSet {
        arc: Arc,
    },
    DiskConditions {
        #[serde(default = "default_samples")]
        samples: usize,
    },
    DiskLowerBound {
        #[serde(default)]
        ladder: SearchLadder,
        #[serde(default)]
        at_least: f64,
    },
    DiskCertifiedBound {
        #[serde(with = "serde_util::complex")]
        omega: Complex64,
        epsilon: f64,
        half_angle: f64,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    DiskAutomorphism {
        #[serde(default)]
        ladder: SearchLadder,
        #[serde(default = "default_search_tolerance")]
        search_tolerance: f64,
    },
}

impl CheckKind {
    pub fn name(&self) -> &'static str {
        match self {
            CheckKind::Equation => "equation",
            CheckKind::CriterionSweep => "criterion-sweep",
            CheckKind::RotationMax { .. } => "rotation-max",
            CheckKind::CounterexampleModulus => "counterexample-modulus",
            CheckKind::CounterexamplePreimage { .. } => "counterexample-preimage",
            CheckKind::Convex { .. } => "convex",
            CheckKind::SEpsilon { .. } => "s-epsilon",
            CheckKind::Refinement { .. } => "refinement",
            CheckKind::OpenSet { .. } => "open-set",
            CheckKind::DiskConditions { .. } => "disk-conditions",
            CheckKind::DiskLowerBound { .. } => "disk-lower-bound",
            CheckKind::DiskCertifiedBound { .. } => "disk-certified-bound",
            CheckKind::DiskAutomorphism { .. } => "disk-automorphism",
        }
    }

    pub fn is_disk(&self) -> bool {
        self.name().starts_with("disk-")
    }

    pub fn is_counterexample(&self) -> bool {
        self.name().starts_with("counterexample-")
    }

    pub fn is_sweep(&self) -> bool {
        matches!(self, CheckKind::Refinement { .. } | CheckKind::Convex { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub space: SpaceSpec,
    #[serde(default = "ScalarField::one")]
    pub weight: ScalarField,
    #[serde(default)]
    pub symbol: SymbolMap,
    #[serde(default)]
    pub operator: Vec<TermSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disk: Option<DiskSpec>,
    pub checks: Vec<CheckSpec>,
}

fn at(path: impl Into<String>, e: LabError) -> LabError {
    LabError::Scenario { path: path.into(), reason: e.to_string() }
}

fn reject(path: impl Into<String>, reason: impl Into<String>) -> LabError {
    LabError::Scenario { path: path.into(), reason: reason.into() }
}

impl Scenario {
    pub fn grid(&self) -> Result<GridCircle> {
        GridCircle::new(self.space.n)
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.space.sizes.clone().unwrap_or_else(|| vec![self.space.n])
    }

    pub fn weighted_composition(&self) -> WeightedComposition {
        WeightedComposition::new(self.weight.clone(), self.symbol.clone())
    }

    pub fn operator_expr(&self) -> Result<OperatorExpr> {
        let mut op = OperatorExpr::zero();
        for term in &self.operator {
            op = op.plus(term.coeff(), term.component()?);
        }
        Ok(op)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return Err(reject("tolerance", format!("must be a finite nonnegative number, got {}", self.tolerance)));
        }
        GridCircle::new(self.space.n).map_err(|e| at("space.n", e))?;
        if let Some(sizes) = &self.space.sizes {
            if sizes.is_empty() {
                return Err(reject("space.sizes", "size list is empty"));
            }
            for (i, &n) in sizes.iter().enumerate() {
                GridCircle::new(n).map_err(|e| at(format!("space.sizes[{i}]"), e))?;
            }
        }
        self.weight.validate().map_err(|e| at("weight", e))?;
        self.symbol.validate().map_err(|e| at("symbol", e))?;
        for (i, term) in self.operator.iter().enumerate() {
            term.validate().map_err(|e| at(format!("operator[{i}]"), e))?;
        }
        if let Some(disk) = &self.disk {
            disk.weight.validate().map_err(|e| at("disk.weight", e))?;
            disk.symbol.validate().map_err(|e| at("disk.symbol", e))?;
            if let Some(op) = &disk.operator {
                op.build().map_err(|e| at("disk.operator", e))?;
            }
        }
        if self.checks.is_empty() {
            return Err(reject("checks", "no checks requested"));
        }
        for (i, check) in self.checks.iter().enumerate() {
            self.validate_check(&check.kind).map_err(|e| match e {
                LabError::Scenario { path, reason } => reject(format!("checks[{i}].{path}"), reason),
                other => at(format!("checks[{i}]"), other),
            })?;
        }
        Ok(())
    }

    fn validate_check(&self, kind: &CheckKind) -> Result<()> {
        if kind.is_disk() && self.disk.is_none() {
            return Err(reject("name", format!("check `{}` needs a `disk` section", kind.name())));
        }
        let needs_disk_operator = matches!(kind, CheckKind::DiskLowerBound { .. } | CheckKind::DiskAutomorphism { .. });
        if needs_disk_operator && self.disk.as_ref().is_some_and(|d| d.operator.is_none()) {
            return Err(reject("name", format!("check `{}` needs `disk.operator`", kind.name())));
        }
        match kind {
            CheckKind::RotationMax { lambda_grid } if *lambda_grid == 0 => {
                Err(reject("lambda_grid", "must be positive"))
            }
            CheckKind::CounterexamplePreimage { arc, .. } | CheckKind::OpenSet { arc } => {
                arc.validate().map_err(|e| at("arc", e))
            }
            CheckKind::Convex { t, first, second, .. } => {
                if !(0.0..=1.0).contains(t) {
                    return Err(reject("t", format!("convex weight must lie in [0, 1], got {t}")));
                }
                first.validate().map_err(|e| at("first", e))?;
                second.validate().map_err(|e| at("second", e))
            }
            CheckKind::SEpsilon { epsilon, .. } if !(*epsilon > 0.0) => {
                Err(reject("epsilon", format!("must be positive, got {epsilon}")))
            }
            CheckKind::DiskConditions { samples } if *samples < 64 => {
                Err(reject("samples", format!("need at least 64 samples, got {samples}")))
            }
            CheckKind::DiskLowerBound { ladder, .. } | CheckKind::DiskAutomorphism { ladder, .. } => {
                ladder.validate().map_err(|e| at("ladder", e))
            }
            CheckKind::DiskCertifiedBound { omega, half_angle, samples, .. } => {
                ArcNeighborhood::new(*omega, *half_angle).map_err(|e| at("half_angle", e))?;
                if *samples < 2 {
                    return Err(reject("samples", "need at least 2 samples"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        LabError::Scenario { path, reason: e.into_inner().to_string() }
    })?;
    scenario.validate()?;
    Ok(scenario)
}
