//! Check reports: JSON with every real written to 17 significant digits,
//! plus CSV for gap sequences.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

use crate::criteria::GapSequence;
use crate::error::LabError;

use super::schema::SCHEMA_VERSION;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub verdict: Verdict,
    /// The check's own boolean result; absent when it errored.
    pub outcome: Option<bool>,
    pub expect: bool,
    pub inputs: Value,
    pub results: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_seconds: Option<f64>,
    #[serde(skip)]
    pub invariant_violation: bool,
    #[serde(skip)]
    pub sequence: Option<GapSequence>,
}

impl CheckRecord {
    pub fn finished(name: &str, inputs: Value, expect: bool, outcome: bool, results: Value) -> Self {
        Self {
            name: name.to_string(),
            verdict: if outcome == expect { Verdict::Pass } else { Verdict::Fail },
            outcome: Some(outcome),
            expect,
            inputs,
            results,
            error: None,
            runtime_seconds: None,
            invariant_violation: false,
            sequence: None,
        }
    }

    pub fn failed(name: &str, inputs: Value, expect: bool, error: &LabError) -> Self {
        Self {
            name: name.to_string(),
            verdict: Verdict::Error,
            outcome: None,
            expect,
            inputs,
            results: Value::Null,
            error: Some(error.to_string()),
            runtime_seconds: None,
            invariant_violation: error.is_invariant_violation(),
            sequence: None,
        }
    }

    pub fn with_sequence(mut self, sequence: GapSequence) -> Self {
        self.sequence = Some(sequence);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: String,
    pub command: String,
    pub seed: u64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Value>,
    pub checks: Vec<CheckRecord>,
}

impl Report {
    pub fn new(command: &str, seed: u64, tolerance: f64, scenario: Option<Value>, checks: Vec<CheckRecord>) -> Self {
        Self { schema_version: SCHEMA_VERSION.to_string(), command: command.to_string(), seed, tolerance, scenario, checks }
    }

    pub fn invariant_violated(&self) -> bool {
        self.checks.iter().any(|c| c.invariant_violation)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.verdict == Verdict::Pass)
    }

    pub fn to_json(&self) -> Vec<u8> {
        to_json_bytes(self)
    }

    /// One row per grid size of every check that produced a gap sequence.
    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["check", "n", "gap", "lhs", "rhs"]).expect("in-memory write");
        for check in &self.checks {
            let Some(seq) = &check.sequence else { continue };
            for e in &seq.entries {
                w.write_record([
                    check.name.clone(),
                    e.n.to_string(),
                    real(e.gap),
                    real(e.lhs),
                    real(e.rhs),
                ])
                .expect("in-memory write");
            }
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// A real with 17 significant digits.
pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pretty JSON whose floats carry 17 significant digits.
pub fn to_json_bytes<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Digits17::default());
    value.serialize(&mut ser).expect("reports serialize into memory");
    out.push(b'\n');
    out
}

#[derive(Default)]
struct Digits17 {
    pretty: PrettyFormatter<'static>,
}

impl Formatter for Digits17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object_value(w)
    }
}
