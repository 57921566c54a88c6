//! The shared fixtures Z2, P2, X2, T2, W2 and named presets.

use crate::fingroupoid::{build_preset, Action, Group, MeasuredGroupoid, Preset, PresetError};
use thiserror::Error;

pub const NAMES: [&str; 5] = ["Z2", "P2", "X2", "T2", "W2"];

fn measured(name: &str, preset: Preset, c: Option<Vec<f64>>) -> MeasuredGroupoid {
    let g = build_preset(preset).expect("fixture preset");
    let c = c.unwrap_or_else(|| vec![1.0; g.n_objects()]);
    MeasuredGroupoid::new(name, g, c).expect("fixture is valid")
}

/// `ℤ/2` as a one-object groupoid, counting Haar.
pub fn z2() -> MeasuredGroupoid {
    measured("Z2", Preset::Group(Group::cyclic(2)), None)
}

/// Pair groupoid on `{1,2}`, counting Haar.
pub fn p2() -> MeasuredGroupoid {
    measured("P2", Preset::Pair(2), None)
}

/// Two units, counting Haar.
pub fn x2() -> MeasuredGroupoid {
    measured("X2", Preset::Space(2), None)
}

/// `ℤ/2 ⋉ {1,2}` with the swap action, counting Haar.
pub fn t2() -> MeasuredGroupoid {
    measured("T2", Preset::Transformation(Action::rotation(2)), None)
}

/// P2 with `c(1) = 1`, `c(2) = 4`.
pub fn w2() -> MeasuredGroupoid {
    measured("W2", Preset::Pair(2), Some(vec![1.0, 4.0]))
}

pub fn all() -> Vec<MeasuredGroupoid> {
    vec![z2(), p2(), x2(), t2(), w2()]
}

#[derive(Debug, Error, PartialEq)]
pub enum FixtureError {
    #[error("unknown fixture `{0}` (expected Z2, P2, X2, T2, W2, pair:N, group:N, space:N, trafo:N)")]
    Unknown(String),
    #[error("bad parameter in `{0}`")]
    Param(String),
    #[error(transparent)]
    Preset(#[from] PresetError),
}

/// Resolves `Z2`, `P2`, `X2`, `T2`, `W2` or `kind:N` for `kind` in
/// `pair`, `group` (cyclic), `space`, `trafo` (cyclic rotation).
pub fn load_fixture(name: &str) -> Result<MeasuredGroupoid, FixtureError> {
    match name {
        "Z2" => return Ok(z2()),
        "P2" => return Ok(p2()),
        "X2" => return Ok(x2()),
        "T2" => return Ok(t2()),
        "W2" => return Ok(w2()),
        _ => {}
    }
    let (kind, param) = name.split_once(':').ok_or_else(|| FixtureError::Unknown(name.to_string()))?;
    let n: usize = param.parse().ok().filter(|&n| (1..=64).contains(&n)).ok_or_else(|| FixtureError::Param(name.to_string()))?;
    let preset = match kind {
        "pair" => Preset::Pair(n),
        "group" => Preset::Group(Group::cyclic(n)),
        "space" => Preset::Space(n),
        "trafo" => Preset::Transformation(Action::rotation(n)),
        _ => return Err(FixtureError::Unknown(name.to_string())),
    };
    let g = build_preset(preset)?;
    Ok(MeasuredGroupoid::counting(name, g).expect("preset is valid"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_resolve() {
        for n in NAMES {
            assert_eq!(load_fixture(n).unwrap().name, n);
        }
        assert_eq!(load_fixture("W2").unwrap().haar.c, vec![1.0, 4.0]);
        assert_eq!(load_fixture("pair:3").unwrap().n_arrows(), 9);
        assert_eq!(load_fixture("trafo:3").unwrap().n_arrows(), 9);
        assert!(matches!(load_fixture("Q7"), Err(FixtureError::Unknown(_))));
        assert!(matches!(load_fixture("pair:x"), Err(FixtureError::Param(_))));
    }
}
