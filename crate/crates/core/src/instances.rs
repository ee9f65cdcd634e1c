//! Bundled fixture instances.

use crate::io::PrismatoidDocument;
use crate::model::Prismatoid;

pub const PC_JSON: &str = include_str!("../fixtures/pc.json");
pub const PCYC_JSON: &str = include_str!("../fixtures/pcyc.json");
pub const SQUARE_ANTIPRISMOID_JSON: &str = include_str!("../fixtures/square_antiprismoid.json");
pub const TALL_SQUARE_JSON: &str = include_str!("../fixtures/tall_square.json");

/// All bundled fixtures as `(name, json)`.
pub const ALL: [(&str, &str); 4] = [
    ("pc", PC_JSON),
    ("pcyc", PCYC_JSON),
    ("square_antiprismoid", SQUARE_ANTIPRISMOID_JSON),
    ("tall_square", TALL_SQUARE_JSON),
];

fn load(json: &str) -> Prismatoid {
    PrismatoidDocument::from_json(json)
        .and_then(|d| d.to_prismatoid(&Default::default()))
        .expect("bundled fixture is valid")
}

/// The quadrilateral-base counterexample.
pub fn pc() -> Prismatoid {
    load(PC_JSON)
}

/// The counterexample with a cyclic base.
pub fn pcyc() -> Prismatoid {
    load(PCYC_JSON)
}

pub fn square_antiprismoid() -> Prismatoid {
    load(SQUARE_ANTIPRISMOID_JSON)
}

pub fn tall_square() -> Prismatoid {
    load(TALL_SQUARE_JSON)
}

pub fn by_name(name: &str) -> Option<Prismatoid> {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, json)| load(json))
}
