//! The compact space: a circle parameterized by `[0, 1)`, sampled on a
//! uniform grid, together with continuous scalar fields and self-maps.
//!
//! Grid points are exact rationals `k/n`; continuous coordinates are plain
//! reals and match each other within [`POINT_MATCH_TOLERANCE`]. A finite
//! grid has isolated points, so "nowhere dense" is rendered at a chosen
//! resolution `δ` (see [`preimage_nowhere_dense_at_resolution`]).

use std::cmp::Ordering;
use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use num_integer::Integer;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{LabError, Result};
use crate::serde_util;

/// Two continuous coordinates closer than this (in circle distance) are the
/// same point.
pub const POINT_MATCH_TOLERANCE: f64 = 1e-9;

/// A point of the circle `[0, 1)`.
#[derive(Clone, Copy, Debug)]
pub enum Point {
    /// The exact rational `index / n`, with `index < n`.
    Grid { index: u64, n: u64 },
    /// A continuous coordinate in `[0, 1)`.
    Real(f64),
}

impl Point {
    pub fn grid(index: u64, n: u64) -> Self {
        assert!(n > 0, "grid denominator must be positive");
        Point::Grid { index: index % n, n }
    }

    /// Reduces `x` modulo 1. Non-finite inputs are rejected.
    pub fn real(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(LabError::InvalidInput(format!("non-finite coordinate {x}")));
        }
        let mut r = x.rem_euclid(1.0);
        // rem_euclid of a tiny negative number rounds up to exactly 1.0
        if r >= 1.0 {
            r = 0.0;
        }
        Ok(Point::Real(r))
    }

    pub fn coord(&self) -> f64 {
        match *self {
            Point::Grid { index, n } => index as f64 / n as f64,
            Point::Real(x) => x,
        }
    }

    pub fn is_grid(&self) -> bool {
        matches!(self, Point::Grid { .. })
    }

    /// Position equality: exact for two grid points, `η`-matching otherwise.
    pub fn same_position(&self, other: &Point) -> bool {
        match (*self, *other) {
            (Point::Grid { index: a, n: na }, Point::Grid { index: b, n: nb }) => {
                a as u128 * nb as u128 == b as u128 * na as u128
            }
            _ => circle_distance(self, other) <= POINT_MATCH_TOLERANCE,
        }
    }

    /// Rotation `self + by (mod 1)`; exact when both points are grid points.
    pub fn rotate(&self, by: &Point) -> Point {
        match (*self, *by) {
            (Point::Grid { index: a, n: na }, Point::Grid { index: b, n: nb }) => {
                let n = na.lcm(&nb);
                let idx = (a as u128 * (n / na) as u128 + b as u128 * (n / nb) as u128) % n as u128;
                Point::Grid { index: idx as u64, n }
            }
            _ => Point::real(self.coord() + by.coord()).expect("finite coordinates"),
        }
    }

    fn double(&self) -> Point {
        match *self {
            Point::Grid { index, n } => Point::Grid {
                index: ((2 * index as u128) % n as u128) as u64,
                n,
            },
            Point::Real(x) => Point::real(2.0 * x).expect("finite coordinate"),
        }
    }

    fn shift(&self, steps: i64) -> Result<Point> {
        match *self {
            Point::Grid { index, n } => {
                let idx = (index as i128 + steps as i128).rem_euclid(n as i128);
                Ok(Point::Grid { index: idx as u64, n })
            }
            Point::Real(_) => Err(LabError::MalformedSymbol(format!(
                "grid shift evaluated at off-grid point {self}"
            ))),
        }
    }

    /// Total order by coordinate, ties broken by the exact representation.
    pub fn cmp_position(&self, other: &Point) -> Ordering {
        match (*self, *other) {
            (Point::Grid { index: a, n: na }, Point::Grid { index: b, n: nb }) => {
                (a as u128 * nb as u128).cmp(&(b as u128 * na as u128))
            }
            _ => self.coord().total_cmp(&other.coord()),
        }
    }
}

impl PartialEq for Point {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Point::Grid { .. }, Point::Grid { .. }) => self.same_position(other),
            _ => self.coord() == other.coord(),
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Grid { index, n } => write!(f, "{index}/{n}"),
            Point::Real(x) => write!(f, "{x}"),
        }
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Point::Grid { .. } => s.serialize_str(&self.to_string()),
            Point::Real(x) => s.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Ratio(String),
            Real(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Real(x) => Point::real(x).map_err(serde::de::Error::custom),
            Raw::Ratio(s) => parse_ratio(&s).map_err(serde::de::Error::custom),
        }
    }
}

fn parse_ratio(s: &str) -> std::result::Result<Point, String> {
    let (num, den) = s
        .split_once('/')
        .ok_or_else(|| format!("expected a position of the form \"k/n\", got {s:?}"))?;
    let index: u64 = num.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
    let n: u64 = den.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
    if n == 0 {
        return Err(format!("zero denominator in {s:?}"));
    }
    if index >= n {
        return Err(format!("position {s:?} is outside [0, 1)"));
    }
    Ok(Point::Grid { index, n })
}

/// Circle distance `min(|a−b|, 1−|a−b|)`, computed exactly for grid points.
pub fn circle_distance(a: &Point, b: &Point) -> f64 {
    match (*a, *b) {
        (Point::Grid { index: ia, n: na }, Point::Grid { index: ib, n: nb }) => {
            let den = na as u128 * nb as u128;
            let x = ia as u128 * nb as u128;
            let y = ib as u128 * na as u128;
            let diff = (x + den - y) % den;
            let d = diff.min(den - diff);
            d as f64 / den as f64
        }
        _ => {
            let x = (a.coord() - b.coord()).abs();
            x.min(1.0 - x)
        }
    }
}

/// The grid `{k/n : k = 0..n}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GridCircle {
    n: usize,
}

impl GridCircle {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(LabError::InvalidInput(format!("grid needs at least 2 points, got {n}")));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn point(&self, k: usize) -> Point {
        Point::grid(k as u64, self.n as u64)
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.n).map(move |k| self.point(k))
    }

    /// Index of `p` on this grid, if `p` is exactly a grid point.
    pub fn index_of(&self, p: &Point) -> Option<usize> {
        match *p {
            Point::Grid { index, n } => {
                let scaled = index as u128 * self.n as u128;
                scaled.is_multiple_of(n as u128).then(|| (scaled / n as u128) as usize)
            }
            Point::Real(_) => None,
        }
    }
}

/// `make_circle_grid`: the uniform `n`-point grid.
pub fn make_circle_grid(n: usize) -> Result<GridCircle> {
    GridCircle::new(n)
}

/// A closed arc `{x : d(x, center) ≤ half_width}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arc {
    pub center: Point,
    pub half_width: f64,
}

impl Arc {
    pub fn new(center: Point, half_width: f64) -> Result<Self> {
        let arc = Self { center, half_width };
        arc.validate()?;
        Ok(arc)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0 && self.half_width <= 0.5) {
            return Err(LabError::InvalidInput(format!(
                "arc half-width must lie in (0, 1/2], got {}",
                self.half_width
            )));
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        2.0 * self.half_width
    }

    pub fn contains(&self, p: &Point) -> bool {
        circle_distance(p, &self.center) <= self.half_width
    }

    pub fn grid_indices(&self, grid: &GridCircle) -> Vec<usize> {
        (0..grid.n()).filter(|&k| self.contains(&grid.point(k))).collect()
    }
}

/// A continuous scalar field `u : S → ℂ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScalarField {
    Constant {
        #[serde(with = "serde_util::complex")]
        value: Complex64,
    },
    /// `amplitude · exp(i(2π·freq·θ + phase))`.
    UnimodularExp {
        #[serde(default = "unit")]
        amplitude: f64,
        freq: i64,
        #[serde(default)]
        phase: f64,
    },
    /// `offset + amplitude · cos(2π·freq·θ)`.
    Cosine {
        #[serde(default)]
        offset: f64,
        #[serde(default = "unit")]
        amplitude: f64,
        #[serde(default = "unit_freq")]
        freq: i64,
    },
    /// `base − depth · max(0, 1 − d(θ, center)/half_width)`.
    TentDip {
        center: Point,
        half_width: f64,
        #[serde(default)]
        base: f64,
        depth: f64,
    },
    /// Exact table: `values[k]` is the value at `k/len`.
    Samples {
        #[serde(with = "serde_util::complex_vec")]
        values: Vec<Complex64>,
    },
    Product { factors: Vec<ScalarField> },
}

fn unit() -> f64 {
    1.0
}

fn unit_freq() -> i64 {
    1
}

impl ScalarField {
    pub fn constant(value: Complex64) -> Self {
        ScalarField::Constant { value }
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    /// The tent `1 − d/half_width` clipped at 0, peaking at 1 on `center`.
    pub fn tent(center: Point, half_width: f64) -> Self {
        ScalarField::TentDip { center, half_width, base: 0.0, depth: -1.0 }
    }

    pub fn product(a: ScalarField, b: ScalarField) -> Self {
        ScalarField::Product { factors: vec![a, b] }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, x: f64| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(LabError::InvalidInput(format!("{name} must be finite, got {x}")))
            }
        };
        match self {
            ScalarField::Constant { value } => {
                finite("value.re", value.re)?;
                finite("value.im", value.im)
            }
            ScalarField::UnimodularExp { amplitude, phase, .. } => {
                finite("amplitude", *amplitude)?;
                finite("phase", *phase)
            }
            ScalarField::Cosine { offset, amplitude, .. } => {
                finite("offset", *offset)?;
                finite("amplitude", *amplitude)
            }
            ScalarField::TentDip { half_width, base, depth, .. } => {
                if !(*half_width > 0.0 && *half_width <= 0.5) {
                    return Err(LabError::InvalidInput(format!(
                        "tent half-width must lie in (0, 1/2], got {half_width}"
                    )));
                }
                finite("base", *base)?;
                finite("depth", *depth)
            }
            ScalarField::Samples { values } => {
                if values.is_empty() {
                    return Err(LabError::InvalidInput("samples table is empty".into()));
                }
                values.iter().try_for_each(|v| {
                    finite("sample.re", v.re)?;
                    finite("sample.im", v.im)
                })
            }
            ScalarField::Product { factors } => factors.iter().try_for_each(|f| f.validate()),
        }
    }

    pub fn eval(&self, p: &Point) -> Result<Complex64> {
        Ok(match self {
            ScalarField::Constant { value } => *value,
            ScalarField::UnimodularExp { amplitude, freq, phase } => {
                let angle = TAU * (*freq as f64) * p.coord() + phase;
                Complex64::from_polar(*amplitude, angle)
            }
            ScalarField::Cosine { offset, amplitude, freq } => {
                Complex64::new(offset + amplitude * (TAU * (*freq as f64) * p.coord()).cos(), 0.0)
            }
            ScalarField::TentDip { center, half_width, base, depth } => {
                let d = circle_distance(p, center);
                let tent = (1.0 - d / half_width).max(0.0);
                Complex64::new(base - depth * tent, 0.0)
            }
            ScalarField::Samples { values } => {
                let table = GridCircle { n: values.len() };
                let k = table.index_of(p).ok_or_else(|| LabError::OffGrid {
                    point: p.to_string(),
                    n: values.len(),
                })?;
                values[k]
            }
            ScalarField::Product { factors } => {
                let mut acc = Complex64::new(1.0, 0.0);
                for f in factors {
                    acc *= f.eval(p)?;
                }
                acc
            }
        })
    }

    /// Values at every grid point, in index order.
    pub fn grid_values(&self, grid: &GridCircle) -> Result<Vec<Complex64>> {
        grid.points().map(|p| self.eval(&p)).collect()
    }

    /// `max_s |u(s)|` over the grid.
    pub fn sup_modulus(&self, grid: &GridCircle) -> Result<f64> {
        Ok(self.grid_values(grid)?.iter().map(|v| v.norm()).fold(0.0, f64::max))
    }
}

/// A self-map `φ : S → S`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SymbolMap {
    #[default]
    Identity,
    /// `θ ↦ θ + by (mod 1)`.
    Rotation { by: Point },
    /// Shift by a whole number of steps of the evaluation point's own grid.
    Shift { steps: i64 },
    /// `θ ↦ 2θ (mod 1)`.
    Doubling,
    /// Constant `value` on the closed arc, `outside` elsewhere.
    ConstantOnArc {
        arc: Arc,
        value: Point,
        #[serde(default)]
        outside: Box<SymbolMap>,
    },
    /// Grid map: `k/len ↦ map[k]/len`.
    Table { map: Vec<usize> },
}

impl SymbolMap {
    pub fn constant_on_arc(arc: Arc, value: Point, outside: SymbolMap) -> Self {
        SymbolMap::ConstantOnArc { arc, value, outside: Box::new(outside) }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SymbolMap::ConstantOnArc { arc, outside, .. } => {
                arc.validate()?;
                outside.validate()
            }
            SymbolMap::Table { map } => {
                if map.len() < 2 {
                    return Err(LabError::InvalidInput("symbol table needs at least 2 entries".into()));
                }
                if let Some(bad) = map.iter().find(|&&k| k >= map.len()) {
                    return Err(LabError::InvalidInput(format!(
                        "symbol table entry {bad} is not an index of a {}-point grid",
                        map.len()
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, s: &Point) -> Result<Point> {
        let image = match self {
            SymbolMap::Identity => *s,
            SymbolMap::Rotation { by } => s.rotate(by),
            SymbolMap::Shift { steps } => s.shift(*steps)?,
            SymbolMap::Doubling => s.double(),
            SymbolMap::ConstantOnArc { arc, value, outside } => {
                if arc.contains(s) {
                    *value
                } else {
                    outside.eval(s)?
                }
            }
            SymbolMap::Table { map } => {
                let table = GridCircle { n: map.len() };
                let k = table.index_of(s).ok_or_else(|| LabError::OffGrid {
                    point: s.to_string(),
                    n: map.len(),
                })?;
                Point::grid(map[k] as u64, map.len() as u64)
            }
        };
        if let Point::Real(x) = image {
            if !(0.0..1.0).contains(&x) {
                return Err(LabError::MalformedSymbol(format!("image {x} of {s} lies outside [0, 1)")));
            }
        }
        Ok(image)
    }

    /// Images of every grid point, in index order.
    pub fn grid_images(&self, grid: &GridCircle) -> Result<Vec<Point>> {
        grid.points().map(|s| self.eval(&s)).collect()
    }
}

/// `eval_symbol`: `φ(s)`.
pub fn eval_symbol(symbol: &SymbolMap, s: &Point) -> Result<Point> {
    symbol.eval(s)
}

/// Default resolution `δ = 4/n`, capped at 1/2.
pub fn default_resolution(grid: &GridCircle) -> f64 {
    (4.0 / grid.n() as f64).min(0.5)
}

/// Grid rendition of "`φ⁻¹({t})` is nowhere dense": every closed arc of
/// length `δ` contains a grid point `s` with `φ(s) ≠ t`.
///
/// Consecutive grid points with `φ(s) = t` form runs; a run of length `L`
/// leaves an open gap of length `(L+1)/n` between its good neighbours, and a
/// closed arc of length `δ` fits inside that gap iff `δ < (L+1)/n`.
pub fn preimage_nowhere_dense_at_resolution(
    symbol: &SymbolMap,
    target: &Point,
    delta: f64,
    grid: &GridCircle,
) -> Result<bool> {
    let images = symbol.grid_images(grid)?;
    nowhere_dense_from_images(&images, target, delta, grid)
}

fn nowhere_dense_from_images(images: &[Point], target: &Point, delta: f64, grid: &GridCircle) -> Result<bool> {
    let n = grid.n();
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(LabError::Precondition(format!("resolution δ must lie in (0, 1/2], got {delta}")));
    }
    if delta * (n as f64) < 2.0 - 1e-9 {
        return Err(LabError::Precondition(format!(
            "grid of {n} points is too coarse for resolution δ = {delta}"
        )));
    }
    let bad: Vec<bool> = images.iter().map(|img| img.same_position(target)).collect();
    let Some(first_good) = bad.iter().position(|b| !b) else {
        return Ok(false);
    };
    let mut run = 0usize;
    let mut longest = 0usize;
    for step in 1..=n {
        if bad[(first_good + step) % n] {
            run += 1;
            longest = longest.max(run);
        } else {
            run = 0;
        }
    }
    Ok(longest == 0 || delta * n as f64 + 1e-9 >= (longest + 1) as f64)
}

/// Checks every target in the image of `φ` (other targets have empty
/// preimage). Returns the first target whose preimage is fat, if any.
pub fn first_fat_preimage(symbol: &SymbolMap, delta: f64, grid: &GridCircle) -> Result<Option<Point>> {
    let images = symbol.grid_images(grid)?;
    for target in distinct_points(images.clone()) {
        if !nowhere_dense_from_images(&images, &target, delta, grid)? {
            return Ok(Some(target));
        }
    }
    Ok(None)
}

fn distinct_points(mut points: Vec<Point>) -> Vec<Point> {
    points.sort_by(|a, b| a.cmp_position(b));
    let mut out: Vec<Point> = Vec::with_capacity(points.len());
    for p in points {
        if out.last().is_none_or(|last| !last.same_position(&p)) {
            out.push(p);
        }
    }
    out
}

/// Number of distinct values of `φ` over the grid points of `arc`.
pub fn image_count_on_arc(symbol: &SymbolMap, arc: &Arc, grid: &GridCircle) -> Result<usize> {
    let indices = arc.grid_indices(grid);
    if indices.is_empty() {
        return Err(LabError::Precondition(format!(
            "arc centered at {} contains no point of the {}-point grid",
            arc.center,
            grid.n()
        )));
    }
    let images = indices
        .into_iter()
        .map(|k| symbol.eval(&grid.point(k)))
        .collect::<Result<Vec<_>>>()?;
    Ok(distinct_points(images).len())
}

/// Continuity diagnostic: the largest circle distance between images of
/// neighbouring grid points.
pub fn max_jump(symbol: &SymbolMap, grid: &GridCircle) -> Result<f64> {
    let images = symbol.grid_images(grid)?;
    let n = images.len();
    Ok((0..n)
        .map(|k| circle_distance(&images[k], &images[(k + 1) % n]))
        .fold(0.0, f64::max))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModulusReport {
    pub constant: bool,
    /// `max_s |u(s)|`.
    pub value: f64,
    pub min: f64,
    /// `max − min`.
    pub spread: f64,
}

pub fn modulus_constancy(field: &ScalarField, grid: &GridCircle, tol: f64) -> Result<ModulusReport> {
    if !(tol >= 0.0) {
        return Err(LabError::InvalidInput(format!("tolerance must be nonnegative, got {tol}")));
    }
    let moduli: Vec<f64> = field.grid_values(grid)?.iter().map(|v| v.norm()).collect();
    let max = moduli.iter().copied().fold(0.0, f64::max);
    let min = moduli.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = max - min;
    Ok(ModulusReport { constant: spread <= tol, value: max, min, spread })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> GridCircle {
        GridCircle::new(n).unwrap()
    }

    #[test]
    fn smallest_grid_and_indexing() {
        assert!(GridCircle::new(1).is_err());
        let g = grid(2);
        let coords: Vec<f64> = g.points().map(|p| p.coord()).collect();
        assert_eq!(coords, vec![0.0, 0.5]);
        assert_eq!(grid(64).point(33).coord(), 33.0 / 64.0);
        assert_eq!(grid(64).point(33).to_string(), "33/64");
    }

    #[test]
    fn wraparound_distance() {
        let g = grid(8);
        assert_eq!(circle_distance(&g.point(0), &g.point(7)), 1.0 / 8.0);
        assert_eq!(circle_distance(&g.point(2), &g.point(6)), 0.5);
        assert_eq!(circle_distance(&g.point(3), &g.point(3)), 0.0);
    }

    #[test]
    fn distance_across_grids_is_exact() {
        let a = Point::grid(1, 3);
        let b = Point::grid(2, 6);
        assert!(a.same_position(&b));
        assert_eq!(circle_distance(&a, &b), 0.0);
    }

    #[test]
    fn symbol_examples() {
        let s = Point::grid(3, 8);
        assert_eq!(eval_symbol(&SymbolMap::Doubling, &s).unwrap(), Point::grid(3, 4));
        assert_eq!(eval_symbol(&SymbolMap::Identity, &s).unwrap(), s);
        let t0 = Point::grid(1, 4);
        let patch = SymbolMap::constant_on_arc(Arc::new(t0, 0.25).unwrap(), t0, SymbolMap::Identity);
        assert_eq!(patch.eval(&Point::grid(5, 16)).unwrap(), t0);
        assert_eq!(patch.eval(&Point::grid(15, 16)).unwrap(), Point::grid(15, 16));
    }

    #[test]
    fn shift_and_rotation_stay_on_grid() {
        let s = Point::grid(63, 64);
        assert_eq!(SymbolMap::Shift { steps: 1 }.eval(&s).unwrap(), Point::grid(0, 64));
        let r = SymbolMap::Rotation { by: Point::grid(1, 128) }.eval(&s).unwrap();
        assert_eq!(r, Point::grid(127, 128));
        assert!(SymbolMap::Shift { steps: 1 }.eval(&Point::Real(0.3)).is_err());
    }

    #[test]
    fn real_doubling_reduces_mod_one() {
        let p = SymbolMap::Doubling.eval(&Point::real(0.75).unwrap()).unwrap();
        assert!((p.coord() - 0.5).abs() < 1e-15);
        assert!(Point::real(f64::NAN).is_err());
        assert_eq!(Point::real(-1e-30).unwrap().coord(), 0.0);
    }

    #[test]
    fn table_symbol_is_exact() {
        let table = SymbolMap::Table { map: vec![1, 2, 3, 0] };
        table.validate().unwrap();
        assert_eq!(table.eval(&Point::grid(1, 2)).unwrap(), Point::grid(3, 4));
        assert!(table.eval(&Point::grid(1, 8)).is_err());
        assert!(SymbolMap::Table { map: vec![0, 4, 1, 2] }.validate().is_err());
    }

    #[test]
    fn nowhere_dense_examples() {
        let g16 = grid(16);
        let zero = Point::grid(0, 1);
        assert!(preimage_nowhere_dense_at_resolution(&SymbolMap::Doubling, &zero, 0.25, &g16).unwrap());

        let t0 = Point::grid(3, 16);
        let constant = SymbolMap::constant_on_arc(Arc::new(t0, 0.5).unwrap(), t0, SymbolMap::Identity);
        for delta in [0.125, 0.25, 0.5] {
            assert!(!preimage_nowhere_dense_at_resolution(&constant, &t0, delta, &g16).unwrap());
        }
        for k in 0..16 {
            let t = g16.point(k);
            assert!(preimage_nowhere_dense_at_resolution(&SymbolMap::Identity, &t, 0.25, &g16).unwrap());
        }
    }

    #[test]
    fn nowhere_dense_rejects_coarse_resolution() {
        let g = grid(8);
        let err = preimage_nowhere_dense_at_resolution(&SymbolMap::Identity, &g.point(0), 0.1, &g);
        assert!(matches!(err, Err(LabError::Precondition(_))));
        let err = preimage_nowhere_dense_at_resolution(&SymbolMap::Identity, &g.point(0), 0.75, &g);
        assert!(matches!(err, Err(LabError::Precondition(_))));
    }

    #[test]
    fn image_count_examples() {
        let g = grid(64);
        let quarter = Arc::new(g.point(10), 0.125).unwrap();
        let count = image_count_on_arc(&SymbolMap::Identity, &quarter, &g).unwrap();
        assert!(count == 16 || count == 17, "count = {count}");
        let constant = SymbolMap::constant_on_arc(Arc::new(g.point(0), 0.5).unwrap(), g.point(5), SymbolMap::Identity);
        assert_eq!(image_count_on_arc(&constant, &quarter, &g).unwrap(), 1);
        let first_sixteen = Arc::new(Point::Real(7.5 / 64.0), 7.5 / 64.0).unwrap();
        assert_eq!(first_sixteen.grid_indices(&g), (0..16).collect::<Vec<_>>());
        assert_eq!(image_count_on_arc(&SymbolMap::Doubling, &first_sixteen, &g).unwrap(), 16);
    }

    #[test]
    fn image_count_rejects_empty_arc() {
        let g = grid(8);
        let tiny = Arc::new(Point::Real(1.0 / 16.0), 0.01).unwrap();
        assert!(matches!(image_count_on_arc(&SymbolMap::Identity, &tiny, &g), Err(LabError::Precondition(_))));
    }

    #[test]
    fn modulus_examples() {
        let g = grid(64);
        let exp = ScalarField::UnimodularExp { amplitude: 1.0, freq: 1, phase: 0.0 };
        let r = modulus_constancy(&exp, &g, 1e-12).unwrap();
        assert!(r.constant);
        assert!((r.value - 1.0).abs() < 1e-15);

        let cos = ScalarField::Cosine { offset: 0.0, amplitude: 1.0, freq: 1 };
        assert!(!modulus_constancy(&cos, &g, 1e-9).unwrap().constant);

        let zero = ScalarField::constant(Complex64::new(0.0, 0.0));
        let r = modulus_constancy(&zero, &g, 0.0).unwrap();
        assert!(r.constant);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn max_jump_detects_patches() {
        let g = grid(32);
        assert!((max_jump(&SymbolMap::Identity, &g).unwrap() - 1.0 / 32.0).abs() < 1e-15);
        let patch = SymbolMap::constant_on_arc(Arc::new(g.point(8), 0.125).unwrap(), g.point(8), SymbolMap::Identity);
        assert!(max_jump(&patch, &g).unwrap() >= 0.125);
    }

    #[test]
    fn point_serde_forms() {
        let p: Point = serde_json::from_str("\"3/8\"").unwrap();
        assert_eq!(p, Point::grid(3, 8));
        assert_eq!(serde_json::to_string(&p).unwrap(), "\"3/8\"");
        let r: Point = serde_json::from_str("0.25").unwrap();
        assert_eq!(r.coord(), 0.25);
        assert!(serde_json::from_str::<Point>("\"9/8\"").is_err());
        assert!(serde_json::from_str::<Point>("\"1/0\"").is_err());
    }

    #[test]
    fn field_serde_rejects_unknown_fields() {
        let ok: ScalarField = serde_json::from_str(r#"{"kind":"cosine","offset":0.5,"amplitude":0.5}"#).unwrap();
        assert_eq!(ok, ScalarField::Cosine { offset: 0.5, amplitude: 0.5, freq: 1 });
        assert!(serde_json::from_str::<ScalarField>(r#"{"kind":"cosine","bogus":1}"#).is_err());
        assert!(serde_json::from_str::<ScalarField>(r#"{"kind":"nope"}"#).is_err());
    }
}
