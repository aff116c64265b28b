//! Finitely-atomic complex measures on the circle.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::space::{GridCircle, Point};
use crate::summation;

/// A single atom `weight · δ_pos`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub pos: Point,
    pub re: f64,
    pub im: f64,
}

impl Atom {
    pub fn new(pos: Point, weight: Complex64) -> Self {
        Self { pos, re: weight.re, im: weight.im }
    }

    pub fn weight(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// `Σ_i w_i δ_{x_i}` with pairwise distinct positions, sorted by position,
/// and no zero weights.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<Atom>", into = "Vec<Atom>")]
pub struct AtomicMeasure {
    atoms: Vec<Atom>,
}

impl From<Vec<Atom>> for AtomicMeasure {
    fn from(atoms: Vec<Atom>) -> Self {
        let mut m = AtomicMeasure::zero();
        for a in atoms {
            m.add_atom(a.pos, a.weight());
        }
        m
    }
}

impl From<AtomicMeasure> for Vec<Atom> {
    fn from(m: AtomicMeasure) -> Self {
        m.atoms
    }
}

impl AtomicMeasure {
    pub fn zero() -> Self {
        Self { atoms: Vec::new() }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Adds `weight · δ_pos`, merging with an existing atom at the same
    /// position and dropping the atom if the merged weight is exactly zero.
    pub fn add_atom(&mut self, pos: Point, weight: Complex64) {
        if weight == Complex64::new(0.0, 0.0) {
            return;
        }
        if let Some(i) = self.atoms.iter().position(|a| a.pos.same_position(&pos)) {
            let merged = self.atoms[i].weight() + weight;
            if merged == Complex64::new(0.0, 0.0) {
                self.atoms.remove(i);
            } else {
                let pos = self.atoms[i].pos;
                self.atoms[i] = Atom::new(pos, merged);
            }
            return;
        }
        let at = self.atoms.partition_point(|a| a.pos.cmp_position(&pos).is_lt());
        self.atoms.insert(at, Atom::new(pos, weight));
    }

    /// `coeff · other` added into `self`.
    pub fn add_scaled(&mut self, coeff: Complex64, other: &AtomicMeasure) {
        for a in &other.atoms {
            self.add_atom(a.pos, coeff * a.weight());
        }
    }

    pub fn scaled(&self, coeff: Complex64) -> AtomicMeasure {
        let mut out = AtomicMeasure::zero();
        out.add_scaled(coeff, self);
        out
    }

    /// `⟨f, μ⟩ = Σ_i w_i f(x_i)`.
    pub fn pair(&self, mut f: impl FnMut(&Point) -> Result<Complex64>) -> Result<Complex64> {
        let terms = self
            .atoms
            .iter()
            .map(|a| Ok(a.weight() * f(&a.pos)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(summation::sum_complex(terms))
    }
}

/// `δ_t`.
pub fn dirac(t: Point) -> AtomicMeasure {
    let mut m = AtomicMeasure::zero();
    m.add_atom(t, Complex64::new(1.0, 0.0));
    m
}

/// `Σ_k c_k μ_k` with atoms at coinciding positions merged.
pub fn linear_combine(coeffs: &[Complex64], measures: &[AtomicMeasure]) -> Result<AtomicMeasure> {
    if coeffs.len() != measures.len() {
        return Err(LabError::InvalidInput(format!(
            "{} coefficients for {} measures",
            coeffs.len(),
            measures.len()
        )));
    }
    let mut out = AtomicMeasure::zero();
    for (c, m) in coeffs.iter().zip(measures) {
        out.add_scaled(*c, m);
    }
    Ok(out)
}

/// `‖μ‖ = Σ_i |w_i|`, summed in ascending position order.
pub fn total_variation(mu: &AtomicMeasure) -> f64 {
    summation::sum(mu.atoms.iter().map(|a| a.weight().norm()))
}

/// `μ({t})`.
pub fn point_mass(mu: &AtomicMeasure, t: &Point) -> Result<Complex64> {
    let mut hits = mu.atoms.iter().filter(|a| a.pos.same_position(t));
    match (hits.next(), hits.next()) {
        (None, _) => Ok(Complex64::new(0.0, 0.0)),
        (Some(a), None) => Ok(a.weight()),
        (Some(a), Some(b)) => Err(LabError::MalformedMeasure(format!(
            "atoms at {} and {} both match position {t}",
            a.pos, b.pos
        ))),
    }
}

/// `|μ|(S ∖ pts)`.
pub fn tv_excluding(mu: &AtomicMeasure, pts: &[Point]) -> f64 {
    summation::sum(
        mu.atoms
            .iter()
            .filter(|a| !pts.iter().any(|p| a.pos.same_position(p)))
            .map(|a| a.weight().norm()),
    )
}

/// Dual-norm oracle: evaluates `|⟨f, μ⟩|` for the phase-aligned grid field
/// `f(x_i) = conj(w_i)/|w_i|` (zero elsewhere), which attains the supremum
/// over the unit ball of grid fields.
pub fn norm_oracle(mu: &AtomicMeasure, grid: &GridCircle) -> Result<f64> {
    let mut field = vec![Complex64::new(0.0, 0.0); grid.n()];
    for a in &mu.atoms {
        let k = grid.index_of(&a.pos).ok_or_else(|| LabError::OffGrid {
            point: a.pos.to_string(),
            n: grid.n(),
        })?;
        let w = a.weight();
        field[k] = w.conj() / w.norm();
    }
    let value = mu.pair(|p| Ok(field[grid.index_of(p).expect("checked above")]))?;
    Ok(value.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn measure(atoms: &[(u64, u64, Complex64)]) -> AtomicMeasure {
        let mut m = AtomicMeasure::zero();
        for &(k, n, w) in atoms {
            m.add_atom(Point::grid(k, n), w);
        }
        m
    }

    #[test]
    fn dirac_has_unit_mass() {
        let t = Point::grid(0, 1);
        let d = dirac(t);
        assert_eq!(d.atoms(), &[Atom::new(t, c(1.0, 0.0))]);
        assert_eq!(total_variation(&dirac(Point::grid(5, 7))), 1.0);
        let f = |p: &Point| Ok(c(p.coord() * 3.0, 1.0));
        assert_eq!(dirac(Point::grid(1, 4)).pair(f).unwrap(), c(0.75, 1.0));
    }

    #[test]
    fn merge_and_cancel() {
        let d0 = dirac(Point::grid(0, 2));
        let d_half = dirac(Point::grid(1, 2));
        let two = linear_combine(&[c(1.0, 0.0), c(1.0, 0.0)], &[d0.clone(), d0.clone()]).unwrap();
        assert_eq!(two.atoms(), &[Atom::new(Point::grid(0, 2), c(2.0, 0.0))]);
        let gone = linear_combine(&[c(1.0, 0.0), c(-1.0, 0.0)], &[d0.clone(), d0.clone()]).unwrap();
        assert!(gone.is_zero());
        let pair = linear_combine(&[c(1.0, 0.0), c(0.0, 1.0)], &[d0, d_half]).unwrap();
        assert_eq!(pair.atoms().len(), 2);
        assert_eq!(total_variation(&pair), 2.0);
        assert!(linear_combine(&[c(1.0, 0.0)], &[]).is_err());
    }

    #[test]
    fn merges_across_grid_representations() {
        let mut m = dirac(Point::grid(1, 2));
        m.add_atom(Point::grid(32, 64), c(1.0, 0.0));
        assert_eq!(m.atoms().len(), 1);
        assert_eq!(total_variation(&m), 2.0);
    }

    #[test]
    fn total_variation_examples() {
        assert_eq!(total_variation(&AtomicMeasure::zero()), 0.0);
        assert_eq!(total_variation(&measure(&[(0, 1, c(3.0, 4.0))])), 5.0);
        assert_eq!(total_variation(&measure(&[(0, 2, c(-1.0, 0.0)), (1, 2, c(1.0, 0.0))])), 2.0);
    }

    #[test]
    fn point_mass_examples() {
        let t = Point::grid(3, 8);
        assert_eq!(point_mass(&dirac(t), &t).unwrap(), c(1.0, 0.0));
        assert_eq!(point_mass(&dirac(t), &Point::grid(4, 8)).unwrap(), c(0.0, 0.0));
        let m = measure(&[(0, 2, c(-1.0, 0.0)), (1, 2, c(1.0, 0.0))]);
        assert_eq!(point_mass(&m, &Point::grid(1, 2)).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn point_mass_flags_ambiguous_continuous_atoms() {
        let mut m = AtomicMeasure::zero();
        m.add_atom(Point::Real(0.3), c(1.0, 0.0));
        m.add_atom(Point::Real(0.3 + 1.5e-9), c(1.0, 0.0));
        assert_eq!(m.atoms().len(), 2);
        let probe = Point::Real(0.3 + 0.75e-9);
        assert!(matches!(point_mass(&m, &probe), Err(LabError::MalformedMeasure(_))));
    }

    #[test]
    fn tv_excluding_examples() {
        let t = Point::grid(1, 3);
        assert_eq!(tv_excluding(&dirac(t), &[t]), 0.0);
        let m = measure(&[(0, 2, c(-1.0, 0.0)), (1, 2, c(1.0, 0.0))]);
        assert_eq!(tv_excluding(&m, &[Point::grid(0, 1)]), 1.0);
        assert_eq!(tv_excluding(&m, &[]), total_variation(&m));
    }

    #[test]
    fn oracle_examples() {
        let g = GridCircle::new(8).unwrap();
        assert_eq!(norm_oracle(&dirac(Point::grid(0, 1)), &g).unwrap(), 1.0);
        assert_eq!(norm_oracle(&AtomicMeasure::zero(), &g).unwrap(), 0.0);
        let m = measure(&[(0, 1, c(1.0, 0.0)), (1, 4, c(0.0, 1.0)), (1, 2, c(-2.0, 0.0))]);
        assert!((norm_oracle(&m, &g).unwrap() - 4.0).abs() < 1e-12);
        assert!(norm_oracle(&dirac(Point::grid(1, 16)), &g).is_err());
    }

    /// Random unit-modulus assignments never beat the phase-aligned value.
    #[test]
    fn oracle_dominates_random_phases() {
        use rand::{Rng, SeedableRng};
        let m = measure(&[(0, 1, c(1.0, 0.0)), (1, 4, c(0.0, 1.0)), (1, 2, c(-2.0, 0.0))]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10_000 {
            let phases: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
            let v: Complex64 = m
                .atoms()
                .iter()
                .zip(&phases)
                .map(|(a, &th)| a.weight() * Complex64::from_polar(1.0, th))
                .sum();
            assert!(v.norm() <= 4.0 + 1e-12);
        }
    }

    #[test]
    fn serde_round_trip_merges_input() {
        let json = r#"[{"pos":"0/4","re":1.0,"im":0.0},{"pos":"1/4","re":0.0,"im":-2.5},{"pos":"2/8","re":0.5,"im":0.0}]"#;
        let m: AtomicMeasure = serde_json::from_str(json).unwrap();
        assert_eq!(m.atoms().len(), 2);
        let back: AtomicMeasure = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    fn arb_measure() -> impl Strategy<Value = AtomicMeasure> {
        prop::collection::vec((0u64..32, -2.0f64..2.0, -2.0f64..2.0), 0..8).prop_map(|atoms| {
            let mut m = AtomicMeasure::zero();
            for (k, re, im) in atoms {
                m.add_atom(Point::grid(k, 32), c(re, im));
            }
            m
        })
    }

    proptest! {
        #[test]
        fn decomposition_identity(mu in arb_measure(), k in 0u64..32) {
            let t = Point::grid(k, 32);
            let split = point_mass(&mu, &t).unwrap().norm() + tv_excluding(&mu, &[t]);
            prop_assert!((total_variation(&mu) - split).abs() <= 1e-12);
        }

        #[test]
        fn triangle_inequality(mu in arb_measure(), nu in arb_measure(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let combo = linear_combine(&[c(a, 0.0), c(0.0, b)], &[mu.clone(), nu.clone()]).unwrap();
            let bound = a.abs() * total_variation(&mu) + b.abs() * total_variation(&nu);
            prop_assert!(total_variation(&combo) <= bound + 1e-12);
        }

        #[test]
        fn disjoint_supports_add(mu in arb_measure(), nu in arb_measure()) {
            let shift = Point::grid(1, 64);
            let mut shifted = AtomicMeasure::zero();
            for atom in nu.atoms() {
                shifted.add_atom(atom.pos.rotate(&shift), atom.weight());
            }
            let sum = linear_combine(&[c(1.0, 0.0), c(1.0, 0.0)], &[mu.clone(), shifted.clone()]).unwrap();
            prop_assert!((total_variation(&sum) - total_variation(&mu) - total_variation(&shifted)).abs() <= 1e-12);
        }

        #[test]
        fn point_mass_is_linear(mu in arb_measure(), nu in arb_measure(), k in 0u64..32, a in -2.0f64..2.0) {
            let t = Point::grid(k, 32);
            let alpha = c(a, 0.5);
            let beta = c(-0.25, a);
            let combo = linear_combine(&[alpha, beta], &[mu.clone(), nu.clone()]).unwrap();
            let expected = alpha * point_mass(&mu, &t).unwrap() + beta * point_mass(&nu, &t).unwrap();
            prop_assert!((point_mass(&combo, &t).unwrap() - expected).norm() <= 1e-12);
        }

        #[test]
        fn oracle_matches_total_variation(mu in arb_measure()) {
            let g = GridCircle::new(32).unwrap();
            prop_assert!((norm_oracle(&mu, &g).unwrap() - total_variation(&mu)).abs() <= 1e-12);
        }
    }
}
