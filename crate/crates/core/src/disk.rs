//! The disk algebra `A(𝔻)`: finite Blaschke products, sampled checks on the
//! boundary circle, witness-based lower bounds for `‖uC_φ + T‖`, and the
//! analytic upper bound for the point-evaluation perturbation built at a
//! boundary point where `|φ| < 1`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::serde_util;

/// Slack allowed on `|z| ≤ 1` and on unimodularity checks.
pub const UNIT_TOL: f64 = 1e-12;

/// Default boundary sample count.
pub const DEFAULT_SAMPLES: usize = 4096;

const POLE_GUARD: f64 = 1e-300;

/// `λ·Π_k (z − a_k)/(1 − conj(a_k)·z)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlaschkeProduct {
    #[serde(with = "serde_util::complex", default = "serde_util::one")]
    pub unimodular_constant: Complex64,
    #[serde(with = "serde_util::complex_vec", default)]
    pub zeros: Vec<Complex64>,
}

impl BlaschkeProduct {
    pub fn new(unimodular_constant: Complex64, zeros: Vec<Complex64>) -> Result<Self> {
        let b = Self { unimodular_constant, zeros };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if (self.unimodular_constant.norm() - 1.0).abs() > UNIT_TOL {
            return Err(LabError::InvalidInput(format!(
                "Blaschke constant {} is not unimodular",
                self.unimodular_constant
            )));
        }
        if let Some(a) = self.zeros.iter().find(|a| !(a.norm() < 1.0)) {
            return Err(LabError::InvalidInput(format!("Blaschke zero {a} is not inside the open disk")));
        }
        Ok(())
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        blaschke_eval(self, z)
    }
}

pub fn blaschke_eval(b: &BlaschkeProduct, z: Complex64) -> Result<Complex64> {
    check_closed_disk(z)?;
    let mut acc = b.unimodular_constant;
    for a in &b.zeros {
        let den = Complex64::new(1.0, 0.0) - a.conj() * z;
        if den.norm() < POLE_GUARD {
            return Err(LabError::InvalidInput(format!("z = {z} sits on the pole of the factor at {a}")));
        }
        acc *= (z - a) / den;
    }
    Ok(acc)
}

fn check_closed_disk(z: Complex64) -> Result<()> {
    if !(z.norm() <= 1.0 + UNIT_TOL) {
        return Err(LabError::InvalidInput(format!("{z} lies outside the closed unit disk")));
    }
    Ok(())
}

fn check_unimodular(name: &str, w: Complex64) -> Result<()> {
    if !((w.norm() - 1.0).abs() <= UNIT_TOL) {
        return Err(LabError::InvalidInput(format!("{name} = {w} is not on the unit circle")));
    }
    Ok(())
}

/// `e^{2πij/m}`, `j = 0..m`.
pub fn circle_samples(m: usize) -> Vec<Complex64> {
    (0..m).map(|j| Complex64::from_polar(1.0, TAU * j as f64 / m as f64)).collect()
}

/// An element of `A(𝔻)` in one of a few exactly evaluable forms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiskFunction {
    Constant {
        #[serde(with = "serde_util::complex")]
        value: Complex64,
    },
    Blaschke {
        #[serde(with = "serde_util::complex_vec", default)]
        zeros: Vec<Complex64>,
        #[serde(with = "serde_util::complex", default = "serde_util::one")]
        constant: Complex64,
    },
    /// `scale · B`.
    BlaschkeMultiple {
        #[serde(with = "serde_util::complex")]
        scale: Complex64,
        #[serde(with = "serde_util::complex_vec", default)]
        zeros: Vec<Complex64>,
        #[serde(with = "serde_util::complex", default = "serde_util::one")]
        constant: Complex64,
    },
    /// `c · z`.
    ScaledIdentity {
        #[serde(with = "serde_util::complex")]
        c: Complex64,
    },
    /// `Σ_k coeffs[k] · z^k`.
    Polynomial {
        #[serde(with = "serde_util::complex_vec")]
        coeffs: Vec<Complex64>,
    },
    /// `(1 + conj(ω)·z)/2`, peaking at `ω`.
    ArcPeak {
        #[serde(with = "serde_util::complex")]
        omega: Complex64,
    },
}

impl DiskFunction {
    pub fn constant(value: Complex64) -> Self {
        DiskFunction::Constant { value }
    }

    pub fn blaschke(zeros: Vec<Complex64>) -> Self {
        DiskFunction::Blaschke { zeros, constant: Complex64::new(1.0, 0.0) }
    }

    pub fn identity() -> Self {
        DiskFunction::ScaledIdentity { c: Complex64::new(1.0, 0.0) }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DiskFunction::Blaschke { zeros, constant } | DiskFunction::BlaschkeMultiple { zeros, constant, .. } => {
                BlaschkeProduct { unimodular_constant: *constant, zeros: zeros.clone() }.validate()
            }
            DiskFunction::Polynomial { coeffs } if coeffs.is_empty() => {
                Err(LabError::InvalidInput("polynomial needs at least one coefficient".into()))
            }
            DiskFunction::ArcPeak { omega } => check_unimodular("ω", *omega),
            _ => Ok(()),
        }
    }

    /// The underlying Blaschke product, for the inner forms.
    pub fn as_blaschke(&self) -> Option<BlaschkeProduct> {
        match self {
            DiskFunction::Blaschke { zeros, constant } => {
                Some(BlaschkeProduct { unimodular_constant: *constant, zeros: zeros.clone() })
            }
            DiskFunction::ScaledIdentity { c } if (c.norm() - 1.0).abs() <= UNIT_TOL => {
                Some(BlaschkeProduct { unimodular_constant: *c, zeros: vec![Complex64::new(0.0, 0.0)] })
            }
            _ => None,
        }
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        check_closed_disk(z)?;
        Ok(match self {
            DiskFunction::Constant { value } => *value,
            DiskFunction::Blaschke { zeros, constant } => {
                blaschke_eval(&BlaschkeProduct { unimodular_constant: *constant, zeros: zeros.clone() }, z)?
            }
            DiskFunction::BlaschkeMultiple { scale, zeros, constant } => {
                scale * blaschke_eval(&BlaschkeProduct { unimodular_constant: *constant, zeros: zeros.clone() }, z)?
            }
            DiskFunction::ScaledIdentity { c } => c * z,
            DiskFunction::Polynomial { coeffs } => {
                coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, a| acc * z + a)
            }
            DiskFunction::ArcPeak { omega } => (Complex64::new(1.0, 0.0) + omega.conj() * z) / 2.0,
        })
    }

    /// `‖f‖∞`: exact for the closed forms, a maximum over `m` boundary
    /// samples for polynomials.
    pub fn sup_norm(&self, m: usize) -> Result<f64> {
        Ok(match self {
            DiskFunction::Constant { value } => value.norm(),
            DiskFunction::Blaschke { .. } => 1.0,
            DiskFunction::BlaschkeMultiple { scale, .. } => scale.norm(),
            DiskFunction::ScaledIdentity { c } => c.norm(),
            DiskFunction::ArcPeak { .. } => 1.0,
            DiskFunction::Polynomial { .. } => sampled_sup(self, &circle_samples(m))?,
        })
    }
}

fn sampled_sup(f: &DiskFunction, samples: &[Complex64]) -> Result<f64> {
    let mut best = 0.0f64;
    for z in samples {
        best = best.max(f.eval(*z)?.norm());
    }
    Ok(best)
}

/// `Tf = c · f(τ) · g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankOneDiskOperator {
    #[serde(with = "serde_util::complex")]
    pub tau: Complex64,
    pub output: DiskFunction,
    #[serde(with = "serde_util::complex")]
    pub scale: Complex64,
}

impl RankOneDiskOperator {
    pub fn new(tau: Complex64, output: DiskFunction, scale: Complex64) -> Result<Self> {
        let op = Self { tau, output, scale };
        op.validate()?;
        Ok(op)
    }

    pub fn validate(&self) -> Result<()> {
        check_closed_disk(self.tau)?;
        self.output.validate()
    }

    /// `‖T‖ = |c|·‖g‖∞`.
    pub fn norm(&self, m: usize) -> Result<f64> {
        Ok(self.scale.norm() * self.output.sup_norm(m)?)
    }

    pub fn negated(&self) -> Self {
        Self { scale: -self.scale, ..self.clone() }
    }
}

/// `{e^{iθ}·ω : |θ| ≤ half_angle}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcNeighborhood {
    #[serde(with = "serde_util::complex")]
    pub omega: Complex64,
    pub half_angle: f64,
}

impl ArcNeighborhood {
    pub fn new(omega: Complex64, half_angle: f64) -> Result<Self> {
        let arc = Self { omega, half_angle };
        arc.validate()?;
        Ok(arc)
    }

    pub fn validate(&self) -> Result<()> {
        check_unimodular("ω", self.omega)?;
        if !(self.half_angle > 0.0 && self.half_angle < PI) {
            return Err(LabError::InvalidInput(format!(
                "arc half-angle must lie in (0, π), got {}",
                self.half_angle
            )));
        }
        Ok(())
    }

    /// `m ≥ 2` equispaced points of the closed arc, endpoints included.
    pub fn samples(&self, m: usize) -> Vec<Complex64> {
        let m = m.max(2);
        (0..m)
            .map(|j| {
                let theta = -self.half_angle + 2.0 * self.half_angle * j as f64 / (m - 1) as f64;
                self.omega * Complex64::from_polar(1.0, theta)
            })
            .collect()
    }

    /// `m ≥ 2` equispaced points of the closure of the complementary arc.
    pub fn complement_samples(&self, m: usize) -> Vec<Complex64> {
        let m = m.max(2);
        let span = TAU - 2.0 * self.half_angle;
        (0..m)
            .map(|j| {
                let theta = self.half_angle + span * j as f64 / (m - 1) as f64;
                self.omega * Complex64::from_polar(1.0, theta)
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConditionDetail {
    pub weight_modulus_min: f64,
    pub weight_modulus_max: f64,
    pub symbol_modulus_min: f64,
    pub symbol_modulus_max: f64,
    /// `max_j |φ(z_j) − φ(z_0)|`.
    pub symbol_variation: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CConditions {
    /// `|u|` is a nonzero constant on the circle.
    pub c1: bool,
    /// `|φ| = 1` on the circle.
    pub c2: bool,
    /// `φ` is not constant.
    pub c3: bool,
    pub detail: ConditionDetail,
}

/// Checks the three structural conditions on `m ≥ 64` boundary samples.
pub fn check_c_conditions(u: &DiskFunction, phi: &DiskFunction, m: usize, tol: f64) -> Result<CConditions> {
    if m < 64 {
        return Err(LabError::Precondition(format!("need at least 64 boundary samples, got {m}")));
    }
    u.validate()?;
    phi.validate()?;
    let samples = circle_samples(m);
    let u_mod = samples.iter().map(|z| u.eval(*z).map(|v| v.norm())).collect::<Result<Vec<_>>>()?;
    let phi_vals = samples.iter().map(|z| phi.eval(*z)).collect::<Result<Vec<_>>>()?;
    let phi_mod: Vec<f64> = phi_vals.iter().map(|v| v.norm()).collect();
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    let detail = ConditionDetail {
        weight_modulus_min: min(&u_mod),
        weight_modulus_max: max(&u_mod),
        symbol_modulus_min: min(&phi_mod),
        symbol_modulus_max: max(&phi_mod),
        symbol_variation: phi_vals.iter().map(|v| (v - phi_vals[0]).norm()).fold(0.0, f64::max),
    };
    Ok(CConditions {
        c1: detail.weight_modulus_max - detail.weight_modulus_min <= tol && detail.weight_modulus_min > tol,
        c2: (detail.symbol_modulus_min - 1.0).abs() <= tol && (detail.symbol_modulus_max - 1.0).abs() <= tol,
        c3: detail.symbol_variation > tol,
        detail,
    })
}

/// Parameters of the test-function search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchLadder {
    /// Zeros are drawn from `{0} ∪ {±a : a ∈ radii}`.
    pub radii: Vec<f64>,
    /// Maximal number of Blaschke factors.
    pub depth: usize,
    /// Monomials `z^k` for `k ≤ max_degree`.
    pub max_degree: u32,
    /// Boundary samples.
    pub samples: usize,
}

impl Default for SearchLadder {
    fn default() -> Self {
        Self { radii: vec![0.9, 0.99, 0.999], depth: 3, max_degree: 16, samples: DEFAULT_SAMPLES }
    }
}

impl SearchLadder {
    pub fn with_radii(radii: Vec<f64>) -> Self {
        Self { radii, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.radii.is_empty() && self.depth == 0 && self.max_degree == 0 {
            return Err(LabError::Precondition("search ladder is empty".into()));
        }
        if let Some(a) = self.radii.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
            return Err(LabError::InvalidInput(format!("ladder radius {a} is not in (0, 1)")));
        }
        if self.samples == 0 {
            return Err(LabError::InvalidInput("search needs at least one boundary sample".into()));
        }
        Ok(())
    }

    fn zero_choices(&self) -> Vec<f64> {
        let mut v = vec![0.0];
        for &a in &self.radii {
            v.push(a);
            v.push(-a);
        }
        v
    }

    /// All test functions in search order: Blaschke products by increasing
    /// depth (zeros as nondecreasing index sequences), then monomials.
    pub fn test_functions(&self) -> Vec<TestFunction> {
        let choices = self.zero_choices();
        let mut out = Vec::new();
        let mut current: Vec<usize> = Vec::new();
        fn extend(choices: &[f64], depth: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<TestFunction>) {
            if current.len() == depth {
                out.push(TestFunction::Blaschke { zeros: current.iter().map(|&i| choices[i]).collect() });
                return;
            }
            for i in start..choices.len() {
                current.push(i);
                extend(choices, depth, i, current, out);
                current.pop();
            }
        }
        for d in 0..=self.depth {
            extend(&choices, d, 0, &mut current, &mut out);
        }
        out.extend((0..=self.max_degree).map(|degree| TestFunction::Monomial { degree }));
        out
    }
}

/// A norm-one element of `A(𝔻)` used as a witness.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// `Π_j (z − a_j)/(1 − a_j·z)` with real `a_j`.
    Blaschke { zeros: Vec<f64> },
    Monomial { degree: u32 },
}

impl TestFunction {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            TestFunction::Blaschke { zeros } => zeros
                .iter()
                .fold(Complex64::new(1.0, 0.0), |acc, &a| acc * (z - a) / (1.0 - a * z)),
            TestFunction::Monomial { degree } => z.powu(*degree),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub test_function: TestFunction,
    #[serde(with = "serde_util::complex")]
    pub z: Complex64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerBound {
    pub bound: f64,
    pub witness: Witness,
    /// `‖u‖∞ + ‖T‖`, which the bound may never exceed.
    pub triangle_cap: f64,
}

/// `max_{f, z} |u(z)·f(φ(z)) + (Tf)(z)|` over the ladder's test functions
/// and boundary samples; a certified lower bound for `‖uC_φ + T‖`.
pub fn disk_norm_lower_bound(
    u: &DiskFunction,
    phi: &DiskFunction,
    op: &RankOneDiskOperator,
    ladder: &SearchLadder,
) -> Result<LowerBound> {
    ladder.validate()?;
    u.validate()?;
    phi.validate()?;
    op.validate()?;
    let samples = circle_samples(ladder.samples);
    let mut pre = Vec::with_capacity(samples.len());
    for &z in &samples {
        let w = phi.eval(z)?;
        check_closed_disk(w).map_err(|_| LabError::Precondition(format!("φ({z}) = {w} leaves the closed disk")))?;
        pre.push((z, u.eval(z)?, w, op.scale * op.output.eval(z)?));
    }
    let mut best: Option<Witness> = None;
    for f in ladder.test_functions() {
        let f_tau = f.eval(op.tau);
        for &(z, uz, w, cg) in &pre {
            let value = (uz * f.eval(w) + f_tau * cg).norm();
            if best.as_ref().is_none_or(|b| value > b.value) {
                best = Some(Witness { test_function: f.clone(), z, value });
            }
        }
    }
    let witness = best.expect("ladder has at least one test function");
    let triangle_cap = u.sup_norm(ladder.samples)? + op.norm(ladder.samples)?;
    if witness.value > triangle_cap + 1e-9 {
        return Err(LabError::Invariant(format!(
            "lower bound {} exceeds the triangle cap {triangle_cap}",
            witness.value
        )));
    }
    Ok(LowerBound { bound: witness.value, witness, triangle_cap })
}

/// `Tf = u(ω)·f(φ(ω))·(1 + conj(ω)z)/2` for a boundary point with `|φ(ω)| < 1`.
pub fn disk_counterexample_operator(u: &DiskFunction, phi: &DiskFunction, omega: Complex64) -> Result<RankOneDiskOperator> {
    check_unimodular("ω", omega)?;
    let tau = phi.eval(omega)?;
    if !(tau.norm() < 1.0) {
        return Err(LabError::Precondition(format!("|φ(ω)| = {} is not below 1", tau.norm())));
    }
    let scale = u.eval(omega)?;
    if scale.norm() == 0.0 {
        return Err(LabError::Precondition("u(ω) = 0".into()));
    }
    RankOneDiskOperator::new(tau, DiskFunction::ArcPeak { omega }, scale)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertifiedBound {
    pub bound: f64,
    pub valid: bool,
    /// `‖u‖∞ + |u(ω)| − bound`.
    pub margin: f64,
    /// `r = |φ(ω)|`.
    pub r: f64,
    /// `‖u‖∞·ε/(1 − (r+ε))² + ε + |u(ω)|/2`.
    pub on_arc: f64,
    /// `‖u‖∞ + |u(ω)|·δ`.
    pub off_arc: f64,
    /// `cos(θ_I/2)`.
    pub delta: f64,
    /// Largest `|g|` found on the sampled complement of the arc.
    pub delta_sampled: f64,
    /// `on_arc ≤ ‖u‖∞ + (5/6)|u(ω)|`.
    pub chain_within_majorant: bool,
    pub max_symbol_deviation: f64,
    pub max_peak_deviation: f64,
    pub max_weight_deviation: f64,
}

/// Upper bound for `‖uC_φ − T‖` with `T` from [`disk_counterexample_operator`].
/// `valid` records whether the arc conditions hold on the `m` arc samples.
pub fn certified_counterexample_bound(
    u: &DiskFunction,
    phi: &DiskFunction,
    omega: Complex64,
    epsilon: f64,
    arc: &ArcNeighborhood,
    m: usize,
) -> Result<CertifiedBound> {
    arc.validate()?;
    if (arc.omega - omega).norm() > UNIT_TOL {
        return Err(LabError::InvalidInput(format!("arc is centered at {} rather than ω = {omega}", arc.omega)));
    }
    let op = disk_counterexample_operator(u, phi, omega)?;
    let r = op.tau.norm();
    let u_omega = op.scale.norm();
    if !(epsilon > 0.0 && epsilon < (1.0 - r).min(u_omega / 3.0)) {
        return Err(LabError::Precondition(format!(
            "ε = {epsilon} must lie in (0, min(1 − r, |u(ω)|/3)) = (0, {})",
            (1.0 - r).min(u_omega / 3.0)
        )));
    }
    let mut max_symbol_deviation = 0.0f64;
    let mut max_peak_deviation = 0.0f64;
    let mut max_weight_deviation = 0.0f64;
    for z in arc.samples(m) {
        max_symbol_deviation = max_symbol_deviation.max((phi.eval(z)? - op.tau).norm());
        max_peak_deviation = max_peak_deviation.max((Complex64::new(1.0, 0.0) - op.output.eval(z)?).norm());
        max_weight_deviation = max_weight_deviation.max((u.eval(z)? - op.scale).norm());
    }
    let valid = max_symbol_deviation <= epsilon && max_peak_deviation < 0.5 && max_weight_deviation < epsilon;

    let u_norm = u.sup_norm(m)?;
    let on_arc = u_norm * epsilon / (1.0 - (r + epsilon)).powi(2) + epsilon + u_omega / 2.0;
    let delta = (arc.half_angle / 2.0).cos();
    let delta_sampled = sampled_sup(&op.output, &arc.complement_samples(m))?;
    let off_arc = u_norm + u_omega * delta;
    let bound = on_arc.max(off_arc);
    Ok(CertifiedBound {
        bound,
        valid,
        margin: u_norm + u_omega - bound,
        r,
        on_arc,
        off_arc,
        delta,
        delta_sampled,
        chain_within_majorant: on_arc <= u_norm + 5.0 / 6.0 * u_omega,
        max_symbol_deviation,
        max_peak_deviation,
        max_weight_deviation,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AutomorphismCheck {
    pub lower: f64,
    /// `1 + ‖T‖`.
    pub target: f64,
    pub witness: Witness,
}

/// Lower bound for `‖C_φ + T‖` against `1 + ‖T‖` when `φ` is a disk
/// automorphism `λ(z − a)/(1 − conj(a)z)`.
pub fn automorphism_identity_check(
    phi: &DiskFunction,
    op: &RankOneDiskOperator,
    ladder: &SearchLadder,
) -> Result<AutomorphismCheck> {
    match phi.as_blaschke() {
        Some(b) if b.zeros.len() == 1 => b.validate()?,
        _ => return Err(LabError::Precondition("φ is not a disk automorphism".into())),
    }
    let one = DiskFunction::constant(Complex64::new(1.0, 0.0));
    let lb = disk_norm_lower_bound(&one, phi, op, ladder)?;
    let target = 1.0 + op.norm(ladder.samples)?;
    if lb.bound > target + 1e-9 {
        return Err(LabError::Invariant(format!("lower bound {} exceeds 1 + ‖T‖ = {target}", lb.bound)));
    }
    Ok(AutomorphismCheck { lower: lb.bound, target, witness: lb.witness })
}
