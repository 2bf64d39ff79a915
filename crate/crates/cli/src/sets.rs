//! Text syntax for lattice sets and points on the command line.

use std::path::Path;

use subwalk::capacity::PointSet;
use subwalk::massiveness::{LatticeSetSpec, SetKind, ThornProfile};
use subwalk::walk_kernel::LatticePoint;
use subwalk::{Error, Result};

pub const SET_SYNTAX: &str = "axis | hyperplane:I | ball:R | cylinder:L,BASE | cone:DELTA | \
thorn:linear:DELTA | thorn:power:GAMMA | thorn:linoverlog:BETA | point | file:PATH";

pub fn parse_point(text: &str) -> Result<Vec<i64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<i64>()
                .map_err(|_| Error::Parse(format!("bad coordinate {t:?} in {text:?}")))
        })
        .collect()
}

fn num<T: std::str::FromStr>(text: &str, what: &str) -> Result<T> {
    text.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad {what} {text:?}")))
}

pub fn parse_profile(kind: &str, value: &str) -> Result<ThornProfile> {
    let p = match kind {
        "linear" => ThornProfile::Linear(num(value, "slope")?),
        "power" => ThornProfile::Power(num(value, "exponent")?),
        "linoverlog" => ThornProfile::LinOverLog(num(value, "log exponent")?),
        "table" => ThornProfile::Table(
            value
                .split(',')
                .map(|v| num(v, "table value"))
                .collect::<Result<Vec<f64>>>()?,
        ),
        other => return Err(Error::Parse(format!("unknown thorn profile {other:?}"))),
    };
    p.validate()?;
    Ok(p)
}

pub fn parse_set(text: &str, d: usize) -> Result<LatticeSetSpec> {
    let (head, rest) = text.split_once(':').unwrap_or((text, ""));
    let kind = match head {
        "axis" => SetKind::Axis,
        "point" => SetKind::Explicit(PointSet::new(vec![LatticePoint::origin(d)])?),
        "hyperplane" => SetKind::Hyperplane(if rest.is_empty() { d - 1 } else { num(rest, "coordinate")? }),
        "ball" => SetKind::Ball(num(rest, "radius")?),
        "cylinder" => {
            let (l, b) = rest
                .split_once(',')
                .ok_or_else(|| Error::Parse("cylinder needs L,BASE".into()))?;
            SetKind::Cylinder {
                length: num(l, "length")?,
                base: num(b, "base")?,
            }
        }
        "cone" => SetKind::Cone(num(rest, "slope")?),
        "thorn" => {
            let (k, v) = rest
                .split_once(':')
                .ok_or_else(|| Error::Parse("thorn needs PROFILE:VALUE".into()))?;
            SetKind::Thorn(parse_profile(k, v)?)
        }
        "file" => {
            let set = PointSet::parse(&std::fs::read_to_string(Path::new(rest))?)?;
            SetKind::Explicit(set)
        }
        other => return Err(Error::Parse(format!("unknown set {other:?}; expected {SET_SYNTAX}"))),
    };
    LatticeSetSpec::new(d, kind)
}

/// Finite point set for capacity runs.
pub fn parse_finite_set(text: &str, d: usize) -> Result<PointSet> {
    let spec = parse_set(text, d)?;
    match spec.kind {
        SetKind::Explicit(s) => Ok(s),
        SetKind::Ball(r) => PointSet::ball(d, r),
        SetKind::Cylinder { length, base } => PointSet::cylinder(d, length, base),
        _ => Err(Error::Parse(format!("{text:?} is not a finite set"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sets() {
        assert_eq!(parse_point("-3, 0,2").unwrap(), vec![-3, 0, 2]);
        assert!(parse_point("1,x").is_err());
        assert_eq!(parse_set("hyperplane", 3).unwrap().kind, SetKind::Hyperplane(2));
        assert_eq!(
            parse_set("thorn:power:0.5", 3).unwrap().kind,
            SetKind::Thorn(ThornProfile::Power(0.5))
        );
        assert_eq!(parse_finite_set("ball:1", 3).unwrap().len(), 7);
        assert_eq!(parse_finite_set("cylinder:4,1", 3).unwrap().len(), 20);
        assert!(parse_finite_set("axis", 3).is_err());
        assert!(parse_set("thorn:power:1.5", 3).is_err());
    }
}
