//! Text forms of worlds, mediator distributions, conditions and contrasts.
//!
//! ```text
//! world     := "natural" | directive ("," directive)*
//! directive := NAME "=" value            set
//!            | NAME "=" NAME "(" a ")"   mediator at its potential under a, e.g. M=M(0)
//!            | NAME "~" spec             draw
//! spec      := pot(a[|C]) | obs(a[|C]) | point(v) | mix(w*spec + w*spec ...)
//! condition := "all" | NAME "=" value ("," NAME "=" value)*
//! contrast  := world "||" world ["|" condition]
//! ```

use thiserror::Error;

use crate::effects::EffectQuery;
use crate::engine::{Condition, Conditioning, Directive, MediatorDistributionSpec, WorldSpec};
use crate::model::Value;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error in `{input}`: {message}")]
pub struct SyntaxError {
    pub input: String,
    pub message: String,
}

fn err<T>(input: &str, message: impl Into<String>) -> Result<T, SyntaxError> {
    Err(SyntaxError {
        input: input.to_string(),
        message: message.into(),
    })
}

/// Splits on `sep` where parentheses are balanced.
fn split_top<'a>(s: &'a str, sep: &str) -> Result<Vec<&'a str>, SyntaxError> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' => depth += 1,
            b')' => {
                depth -= 1;
                if depth < 0 {
                    return err(s, "unbalanced `)`");
                }
            }
            _ if depth == 0 && s[i..].starts_with(sep) => {
                parts.push(&s[start..i]);
                i += sep.len();
                start = i;
                continue;
            }
            _ => {}
        }
        i += 1;
    }
    if depth != 0 {
        return err(s, "unbalanced `(`");
    }
    parts.push(&s[start..]);
    Ok(parts)
}

/// Splits on a single `|` that is not part of `||`, outside parentheses.
fn split_condition(s: &str) -> Result<(&str, Option<&str>), SyntaxError> {
    let mut depth = 0i32;
    let bytes = s.as_bytes();
    let mut found = None;
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'(' => depth += 1,
            b')' => depth -= 1,
            b'|' if depth == 0 => {
                if bytes.get(i + 1) == Some(&b'|') {
                    i += 2;
                    continue;
                }
                if found.is_some() {
                    return err(s, "more than one condition separator `|`");
                }
                found = Some(i);
            }
            _ => {}
        }
        i += 1;
    }
    Ok(match found {
        Some(i) => (&s[..i], Some(&s[i + 1..])),
        None => (s, None),
    })
}

fn call<'a>(s: &'a str, name: &str) -> Option<&'a str> {
    s.strip_prefix(name)?.trim_start().strip_prefix('(')?.strip_suffix(')')
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_alphabetic() || c == '_') && chars.all(|c| c.is_alphanumeric() || c == '_')
}

fn exposure_level(s: &str, whole: &str) -> Result<u8, SyntaxError> {
    match s.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => err(whole, format!("exposure level must be 0 or 1, got `{other}`")),
    }
}

fn weight<S: Scalar>(s: &str, whole: &str) -> Result<S, SyntaxError> {
    let s = s.trim();
    let parsed = match s.split_once('/') {
        Some((n, d)) => n.trim().parse::<f64>().ok().zip(d.trim().parse::<f64>().ok()).map(|(n, d)| n / d),
        None => s.parse::<f64>().ok(),
    };
    match parsed {
        Some(w) if w.is_finite() => Ok(S::from_f64_lossy(w)),
        _ => err(whole, format!("bad mixture weight `{s}`")),
    }
}

pub fn parse_spec<S: Scalar>(input: &str) -> Result<MediatorDistributionSpec<S>, SyntaxError> {
    let s = input.trim();
    for (name, potential) in [("pot", true), ("obs", false)] {
        if let Some(args) = call(s, name) {
            let (level, conditioning) = match args.split_once('|') {
                Some((a, c)) if c.trim() == "C" => (a, Conditioning::Covariates),
                Some((_, c)) => return err(input, format!("only `|C` conditioning is supported, got `|{}`", c.trim())),
                None => (args, Conditioning::None),
            };
            let exposure = exposure_level(level, input)?;
            return Ok(if potential {
                MediatorDistributionSpec::PotentialConditional { exposure, conditioning }
            } else {
                MediatorDistributionSpec::ObservedConditional { exposure, conditioning }
            });
        }
    }
    if let Some(v) = call(s, "point") {
        let v = v.trim();
        if v.is_empty() {
            return err(input, "point() needs a value");
        }
        return Ok(MediatorDistributionSpec::PointMass(Value::parse_token(v)));
    }
    if let Some(body) = call(s, "mix") {
        let mut parts = Vec::new();
        for term in split_top(body, "+")? {
            let (w, spec) = split_top(term, "*")?
                .split_first()
                .map(|(w, rest)| (*w, rest.join("*")))
                .filter(|(_, rest)| !rest.is_empty())
                .ok_or_else(|| SyntaxError {
                    input: input.into(),
                    message: format!("mixture term `{}` is not `weight*spec`", term.trim()),
                })?;
            parts.push((weight(w, input)?, parse_spec(&spec)?));
        }
        return Ok(MediatorDistributionSpec::Mixture(parts));
    }
    err(input, "expected pot(..), obs(..), point(..) or mix(..)")
}

pub fn parse_world<S: Scalar>(input: &str) -> Result<WorldSpec<S>, SyntaxError> {
    let s = input.trim();
    let mut world = WorldSpec::natural();
    if s.is_empty() || s == "natural" {
        return Ok(world);
    }
    for part in split_top(s, ",")? {
        let part = part.trim();
        let (name, directive) = if let Some((name, spec)) = part.split_once('~') {
            (name.trim(), Directive::Draw(parse_spec(spec)?))
        } else if let Some((name, value)) = part.split_once('=') {
            let (name, value) = (name.trim(), value.trim());
            let directive = if let Some(level) = call(value, name) {
                Directive::PotentialUnder(exposure_level(level, input)?)
            } else if let Some(v) = call(value, "set") {
                Directive::Set(Value::parse_token(v.trim()))
            } else if value == "natural" {
                Directive::Natural
            } else if value.is_empty() {
                return err(input, format!("`{name}=` has no value"));
            } else {
                Directive::Set(Value::parse_token(value))
            };
            (name, directive)
        } else {
            return err(input, format!("`{part}` is not `NAME=value` or `NAME~spec`"));
        };
        if !is_ident(name) {
            return err(input, format!("bad variable name `{name}`"));
        }
        if world.directives.contains_key(name) {
            return err(input, format!("`{name}` assigned twice"));
        }
        world = world.with(name, directive);
    }
    Ok(world)
}

pub fn parse_condition(input: &str) -> Result<Option<Condition>, SyntaxError> {
    let s = input.trim();
    if s.is_empty() || s == "all" {
        return Ok(None);
    }
    let mut cond = Condition::new();
    for part in split_top(s, ",")? {
        let Some((name, value)) = part.split_once('=') else {
            return err(input, format!("`{}` is not `NAME=value`", part.trim()));
        };
        let (name, value) = (name.trim(), value.trim());
        if !is_ident(name) || value.is_empty() {
            return err(input, format!("`{}` is not `NAME=value`", part.trim()));
        }
        cond = cond.and(name, Value::parse_token(value));
    }
    Ok(Some(cond))
}

pub fn parse_contrast<S: Scalar>(input: &str) -> Result<EffectQuery<S>, SyntaxError> {
    let (worlds, cond) = split_condition(input)?;
    let sides = split_top(worlds, "||")?;
    let [left, right] = sides.as_slice() else {
        return err(input, "expected `left || right [| condition]`");
    };
    Ok(EffectQuery {
        left: parse_world(left)?,
        right: parse_world(right)?,
        condition: cond.map(parse_condition).transpose()?.flatten(),
        label: input.trim().to_string(),
    })
}

/// Renders a world in the syntax accepted by [`parse_world`].
pub fn world_to_string<S: Scalar>(world: &WorldSpec<S>) -> String {
    if world.directives.is_empty() {
        return "natural".into();
    }
    world
        .directives
        .iter()
        .map(|(name, d)| match d {
            Directive::Natural => format!("{name}=natural"),
            Directive::Set(v) => format!("{name}={v}"),
            Directive::PotentialUnder(a) => format!("{name}={name}({a})"),
            Directive::Draw(spec) => format!("{name}~{spec}"),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specs() {
        assert_eq!(
            parse_spec::<f64>("pot(0|C)").unwrap(),
            MediatorDistributionSpec::potential(0)
        );
        assert_eq!(
            parse_spec::<f64>(" obs( 1 ) ").unwrap(),
            MediatorDistributionSpec::ObservedConditional {
                exposure: 1,
                conditioning: Conditioning::None
            }
        );
        assert_eq!(
            parse_spec::<f64>("point(low)").unwrap(),
            MediatorDistributionSpec::point("low")
        );
        let mix = parse_spec::<f64>("mix(0.5*obs(0|C) + 1/2*obs(1|C))").unwrap();
        assert_eq!(
            mix,
            MediatorDistributionSpec::mixture(vec![
                (0.5, MediatorDistributionSpec::observed(0)),
                (0.5, MediatorDistributionSpec::observed(1)),
            ])
        );
        assert!(parse_spec::<f64>("pot(2)").is_err());
        assert!(parse_spec::<f64>("pot(0|L)").is_err());
        assert!(parse_spec::<f64>("uniform()").is_err());
    }

    #[test]
    fn spec_display_round_trips() {
        for text in ["pot(0|C)", "obs(1)", "point(3)", "mix(0.25*pot(0|C)+0.75*point(hi))"] {
            let spec = parse_spec::<f64>(text).unwrap();
            assert_eq!(spec.to_string(), text);
        }
    }

    #[test]
    fn worlds() {
        let w = parse_world::<f64>("A=1, M=M(0)").unwrap();
        assert_eq!(w.directives["A"], Directive::Set(Value::Int(1)));
        assert_eq!(w.directives["M"], Directive::PotentialUnder(0));
        let w = parse_world::<f64>("A=1, M~pot(0|C)").unwrap();
        assert!(w.has_draw());
        assert!(parse_world::<f64>("natural").unwrap().directives.is_empty());
        assert!(parse_world::<f64>("A=1, A=0").is_err());
        assert!(parse_world::<f64>("A").is_err());
    }

    #[test]
    fn contrasts() {
        let q = parse_contrast::<f64>("A=1, M~obs(0|C) || natural | A=1").unwrap();
        assert_eq!(q.left.directives.len(), 2);
        assert!(q.right.directives.is_empty());
        assert_eq!(q.condition, Some(Condition::new().and("A", 1i64)));
        let q = parse_contrast::<f64>("A=1 || A=0").unwrap();
        assert_eq!(q.condition, None);
        assert!(parse_contrast::<f64>("A=1").is_err());
        assert!(parse_contrast::<f64>("A=1 || A=0 || A=1").is_err());
    }

    #[test]
    fn world_rendering_round_trips() {
        let w = parse_world::<f64>("A=1, M~mix(0.5*pot(0|C)+0.5*pot(1|C))").unwrap();
        assert_eq!(parse_world::<f64>(&world_to_string(&w)).unwrap(), w);
    }
}
