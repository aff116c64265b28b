//! Serde adapters: complex numbers as `{re, im}` (a bare number is accepted
//! as a real value on input).

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize)]
struct Parts {
    re: f64,
    im: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ComplexInput {
    Real(f64),
    Parts(PartsInput),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PartsInput {
    re: f64,
    #[serde(default)]
    im: f64,
}

impl From<ComplexInput> for Complex64 {
    fn from(c: ComplexInput) -> Self {
        match c {
            ComplexInput::Real(re) => Complex64::new(re, 0.0),
            ComplexInput::Parts(p) => Complex64::new(p.re, p.im),
        }
    }
}

pub mod complex {
    use super::*;

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        Parts { re: z.re, im: z.im }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        ComplexInput::deserialize(d).map(Complex64::from)
    }
}

pub mod complex_vec {
    use super::*;

    pub fn serialize<S: Serializer>(zs: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        let parts: Vec<Parts> = zs.iter().map(|z| Parts { re: z.re, im: z.im }).collect();
        parts.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let raw = Vec::<ComplexInput>::deserialize(d)?;
        Ok(raw.into_iter().map(Complex64::from).collect())
    }
}

pub fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}
