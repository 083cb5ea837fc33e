use serde_json::{json, Value};

use crate::numerics::{ExtReal, Scalar};

/// Where a check failed (or attained its worst discrepancy).
#[derive(Clone, Debug, PartialEq)]
pub enum Location<T> {
    /// A point of the unit cube.
    Unit(Vec<T>),
    /// A point of the extended real grid.
    Extended(Vec<ExtReal<T>>),
    /// An axis-aligned box `[lower, upper]`.
    Box { lower: Vec<T>, upper: Vec<T> },
    /// A cell of a mass array.
    Cell(Vec<usize>),
}

impl<T: Scalar> Location<T> {
    pub fn to_json(&self) -> Value {
        let vec = |v: &[T]| Value::Array(v.iter().map(Scalar::to_json).collect());
        match self {
            Location::Unit(p) => json!({ "unit": vec(p) }),
            Location::Extended(p) => {
                json!({ "x": Value::Array(p.iter().map(ExtReal::to_json).collect()) })
            }
            Location::Box { lower, upper } => json!({ "box": { "lower": vec(lower), "upper": vec(upper) } }),
            Location::Cell(c) => json!({ "cell": c }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Witness<T> {
    pub location: Location<T>,
    pub expected: T,
    pub actual: T,
    pub note: String,
}

/// Outcome of a verification sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct Report<T> {
    pub check: &'static str,
    pub pass: bool,
    /// Number of individual comparisons performed.
    pub checked: usize,
    pub max_discrepancy: T,
    /// First failing point, or the point of worst discrepancy when passing.
    pub witness: Option<Witness<T>>,
}

impl<T: Scalar> Report<T> {
    pub(crate) fn new(check: &'static str) -> Self {
        Self { check, pass: true, checked: 0, max_discrepancy: T::zero(), witness: None }
    }

    /// Records one comparison. `ok` decides pass/fail; `discrepancy` feeds the maximum.
    /// The first failure is kept as the witness.
    pub(crate) fn record(&mut self, ok: bool, discrepancy: T, witness: impl FnOnce() -> Witness<T>) {
        self.checked += 1;
        let worse = discrepancy > self.max_discrepancy;
        if worse {
            self.max_discrepancy = discrepancy;
        }
        if !ok && self.pass {
            self.pass = false;
            self.witness = Some(witness());
        } else if self.pass && worse {
            self.witness = Some(witness());
        }
    }

    pub fn to_json(&self) -> Value {
        let witness = self.witness.as_ref().map(|w| {
            json!({
                "location": w.location.to_json(),
                "expected": w.expected.to_json(),
                "actual": w.actual.to_json(),
                "note": w.note,
            })
        });
        json!({
            "check": self.check,
            "pass": self.pass,
            "checked": self.checked,
            "max_discrepancy": self.max_discrepancy.to_json(),
            "witness": witness,
        })
    }
}
