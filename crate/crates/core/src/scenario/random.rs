//! Seeded random instances for property runs.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::measures::AtomicMeasure;
use crate::operators::{FiniteRankOperator, OperatorComponent, OperatorExpr, WeightedComposition};
use crate::space::{Arc, Point, ScalarField, SymbolMap};

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub fn complex_in_square(rng: &mut ChaCha8Rng, half_side: f64) -> Complex64 {
    Complex64::new(rng.random_range(-half_side..=half_side), rng.random_range(-half_side..=half_side))
}

pub fn unit_phasor(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::from_polar(1.0, rng.random_range(0.0..TAU))
}

fn grid_point(rng: &mut ChaCha8Rng, n: usize) -> Point {
    Point::grid(rng.random_range(0..n as u64), n as u64)
}

/// `|u| ≡ 1`: a character or a table of random phases.
pub fn unimodular_weight(rng: &mut ChaCha8Rng, n: usize) -> ScalarField {
    if rng.random_bool(0.5) {
        ScalarField::UnimodularExp { amplitude: 1.0, freq: rng.random_range(-3..=3), phase: rng.random_range(0.0..TAU) }
    } else {
        ScalarField::Samples { values: (0..n).map(|_| unit_phasor(rng)).collect() }
    }
}

/// A weight whose modulus is not constant on the `n`-point grid.
pub fn nonconstant_weight(rng: &mut ChaCha8Rng, n: usize) -> ScalarField {
    match rng.random_range(0..3) {
        0 => ScalarField::Samples {
            values: (0..n).map(|_| unit_phasor(rng) * rng.random_range(0.1..2.0)).collect(),
        },
        1 => ScalarField::product(
            ScalarField::TentDip {
                center: grid_point(rng, n),
                half_width: rng.random_range(2..=n / 2) as f64 / n as f64,
                base: 1.0,
                depth: rng.random_range(0.05..0.95),
            },
            ScalarField::UnimodularExp { amplitude: 1.0, freq: rng.random_range(-3..=3), phase: rng.random_range(0.0..TAU) },
        ),
        _ => ScalarField::Cosine {
            offset: rng.random_range(-1.0..1.0),
            amplitude: rng.random_range(0.1..1.0),
            freq: rng.random_range(1..=3),
        },
    }
}

/// Doubling, a grid rotation, or identity.
pub fn continuous_symbol(rng: &mut ChaCha8Rng, n: usize) -> SymbolMap {
    match rng.random_range(0..3) {
        0 => SymbolMap::Doubling,
        1 => SymbolMap::Rotation { by: grid_point(rng, n) },
        _ => SymbolMap::Identity,
    }
}

/// A symbol that is constant on a random arc of the grid.
pub fn patched_symbol(rng: &mut ChaCha8Rng, n: usize) -> SymbolMap {
    let arc = Arc { center: grid_point(rng, n), half_width: rng.random_range(1..=n / 8) as f64 / n as f64 };
    let outside = if rng.random_bool(0.5) { SymbolMap::Doubling } else { SymbolMap::Rotation { by: grid_point(rng, n) } };
    SymbolMap::constant_on_arc(arc, grid_point(rng, n), outside)
}

/// Doubling, rotation or patched.
pub fn symbol(rng: &mut ChaCha8Rng, n: usize) -> SymbolMap {
    match rng.random_range(0..3) {
        0 => SymbolMap::Doubling,
        1 => SymbolMap::Rotation { by: grid_point(rng, n) },
        _ => patched_symbol(rng, n),
    }
}

/// Up to `max_atoms` atoms on the `n`-point grid with weights in `[−2, 2]²`.
pub fn measure(rng: &mut ChaCha8Rng, n: usize, max_atoms: usize) -> AtomicMeasure {
    let mut m = AtomicMeasure::zero();
    for _ in 0..rng.random_range(1..=max_atoms) {
        m.add_atom(grid_point(rng, n), complex_in_square(rng, 2.0));
    }
    m
}

/// One to three rank-one terms with up to four atoms each. With some
/// probability an atom is planted on an image of `φ`, so that both verdicts
/// of the equation occur.
pub fn finite_rank(rng: &mut ChaCha8Rng, n: usize, phi: &SymbolMap) -> OperatorExpr {
    let mut op = OperatorExpr::zero();
    for term in 0..rng.random_range(1..=3) {
        let plant = term == 0 && rng.random_bool(0.5);
        let mut functional = AtomicMeasure::zero();
        for _ in 0..rng.random_range(1..=if plant { 3 } else { 4 }) {
            functional.add_atom(grid_point(rng, n), complex_in_square(rng, 1.0));
        }
        if plant {
            let s = grid_point(rng, n);
            let image = phi.eval(&s).expect("grid symbols evaluate on the grid");
            functional.add_atom(image, complex_in_square(rng, 1.0));
        }
        let output = ScalarField::Samples { values: (0..n).map(|_| complex_in_square(rng, 1.0)).collect() };
        op = op.plus(
            complex_in_square(rng, 1.0),
            OperatorComponent::FiniteRank(FiniteRankOperator::rank_one(functional, output)),
        );
    }
    op
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub wc: WeightedComposition,
    pub op: OperatorExpr,
}

/// Unimodular weight, doubling/rotation/patched symbol, finite-rank `T`.
pub fn instance(rng: &mut ChaCha8Rng, n: usize) -> Instance {
    let weight = unimodular_weight(rng, n);
    let phi = symbol(rng, n);
    let op = finite_rank(rng, n, &phi);
    Instance { wc: WeightedComposition::new(weight, phi), op }
}

#[derive(Clone, Debug)]
pub struct PreimageInstance {
    pub weight: ScalarField,
    pub symbol: SymbolMap,
    pub t: Point,
    pub arc: Arc,
}

/// `φ ≡ t` on an arc centred at a grid point, a continuous map elsewhere,
/// and `|u|` a random positive constant.
pub fn preimage_instance(rng: &mut ChaCha8Rng, n: usize) -> PreimageInstance {
    let arc = Arc { center: grid_point(rng, n), half_width: rng.random_range(2..=n / 4) as f64 / n as f64 };
    let t = grid_point(rng, n);
    let outside = continuous_symbol(rng, n);
    PreimageInstance {
        weight: ScalarField::UnimodularExp {
            amplitude: rng.random_range(0.5..2.0),
            freq: rng.random_range(-3..=3),
            phase: rng.random_range(0.0..TAU),
        },
        symbol: SymbolMap::constant_on_arc(arc, t, outside),
        t,
        arc,
    }
}
