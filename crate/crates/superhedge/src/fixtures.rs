//! The three reference models shipped with the crate.
//!
//! * `m1`: one binomial step, `S_1 ∈ {2, 1/2}` from `S_0 = 1`, no horizon,
//!   claim `(S_1 - 1)^+`.
//! * `m2`: the same step crossed with a horizon at `t = 1` or never, four
//!   equally likely outcomes, claim `(S_1 - 1)^+ 1{τ > 1}`.
//! * `m3`: two outcomes with `τ(a) = 1`, `τ(b) = 0` and
//!   `ΔS_1 = (-1/2, 1/2)`, where stopping creates an immediate profit.

use crate::error::Result;
use crate::model::Model;

pub const M1: &str = include_str!("../fixtures/m1.json");
pub const M2: &str = include_str!("../fixtures/m2.json");
pub const M3: &str = include_str!("../fixtures/m3.json");

/// Every fixture by name, in a fixed order.
pub const ALL: [(&str, &str); 3] = [("m1", M1), ("m2", M2), ("m3", M3)];

pub fn load(name: &str) -> Option<Result<Model>> {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, text)| Model::from_text(text))
}

pub fn m1() -> Model {
    Model::from_text(M1).expect("fixture m1 is valid")
}

pub fn m2() -> Model {
    Model::from_text(M2).expect("fixture m2 is valid")
}

pub fn m3() -> Model {
    Model::from_text(M3).expect("fixture m3 is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_canonical() {
        for (name, text) in ALL {
            assert_eq!(Model::from_text(text).unwrap().to_text(), text, "fixture {name}");
        }
    }
}
