//! The potentials and coefficients shipped with the crate, used by the
//! verification suite and the CLI.

use serde::Deserialize;

use crate::boussinesq::ThirdOrderCoeffs;
use crate::potentials::PotentialSpec;
use crate::Result;

const ZERO: &str = include_str!("../fixtures/zero.json");
const CONSTANT: &str = include_str!("../fixtures/constant.json");
const MATHIEU: &str = include_str!("../fixtures/mathieu.json");
const EXP01: &str = include_str!("../fixtures/exp01.json");
const COS01: &str = include_str!("../fixtures/cos01.json");
const RATIONAL: &str = include_str!("../fixtures/rational.json");
const PQ: &str = include_str!("../fixtures/pq.json");
const MATHIEU_GAPS: &str = include_str!("../fixtures/mathieu_gaps.json");

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub spec: PotentialSpec<f64>,
}

fn load(name: &'static str, text: &str) -> Fixture {
    let spec = PotentialSpec::from_json(text).unwrap_or_else(|e| panic!("shipped fixture {name} is malformed: {e}"));
    Fixture { name, spec }
}

pub fn zero() -> Fixture {
    load("zero", ZERO)
}

/// `V = 2`.
pub fn constant() -> Fixture {
    load("constant", CONSTANT)
}

/// `V = 10 cos 2πx`.
pub fn mathieu() -> Fixture {
    load("mathieu", MATHIEU)
}

/// `V = 0.1 cos(2πx) e^{−λ}`.
pub fn exp01() -> Fixture {
    load("exp01", EXP01)
}

/// `V = 0.1 cos(2πx) cos λ`.
pub fn cos01() -> Fixture {
    load("cos01", COS01)
}

/// `V = 0.5 cos(2πx) / (1 + λ)`.
pub fn rational() -> Fixture {
    load("rational", RATIONAL)
}

/// Every shipped potential.
pub fn all() -> Vec<Fixture> {
    vec![zero(), constant(), mathieu(), exp01(), cos01(), rational()]
}

pub fn by_name(name: &str) -> Option<Fixture> {
    all().into_iter().find(|f| f.name == name)
}

/// `p = 0.1 cos 2πx`, `q = 0.05 sin 2πx`.
pub fn boussinesq_pq() -> ThirdOrderCoeffs {
    ThirdOrderCoeffs::from_json(PQ).expect("shipped coefficients are well formed")
}

#[derive(Debug, Clone, Deserialize)]
pub struct GapRow {
    pub n: i64,
    pub lo: f64,
    pub hi: f64,
    pub width: f64,
}

/// 2-periodic eigenvalues of the Mathieu fixture from the truncated Hill
/// matrix (`scripts/mathieu_oracle.py`).
#[derive(Debug, Clone, Deserialize)]
pub struct GapTable {
    pub potential: crate::potentials::PotentialConfig,
    pub ground: f64,
    pub gaps: Vec<GapRow>,
}

pub fn mathieu_gaps() -> Result<GapTable> {
    serde_json::from_str(MATHIEU_GAPS).map_err(|e| crate::Error::Config(e.to_string()))
}
