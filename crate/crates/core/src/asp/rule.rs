//! Single-time-step indicator rules in four bias families.
//!
//! Text forms (one per family):
//!
//! ```text
//! class(strange, V0) :- magnitude(V0, M, T), at_least(M, five_to_ten), at_most(M, fifteen_to_twenty).
//! class(indoor, V0) :- operation_area(V0, A, T), at_most(A, small).
//! class(upwards, V0) :- angle(V0, S, T), within_arc(S, n, 1, 1).
//! class(out, V0) :- place(V0, 0, V, left, T).
//! ```
//!
//! `within_arc(S, anchor, cw, acw)` holds when `S` is at most `cw` ticks
//! clockwise or at most `acw` ticks anticlockwise of `anchor`.

use std::fmt;
use std::str::FromStr;

use crate::behaviour::{BehaviourStep, BucketScheme, Horiz, ObjectBehaviour, Sector, Vert, PLACEMENT_LEVELS};
use crate::error::{Error, Result};
use crate::token::{is_token, normalize_token};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bias {
    Magnitude,
    Angle,
    OperationArea,
    CellOccupancy,
}

impl Bias {
    pub const ALL: [Bias; 4] = [Bias::Magnitude, Bias::Angle, Bias::OperationArea, Bias::CellOccupancy];

    pub fn token(self) -> &'static str {
        match self {
            Bias::Magnitude => "magnitude",
            Bias::Angle => "angle",
            Bias::OperationArea => "operation_area",
            Bias::CellOccupancy => "cell_occupancy",
        }
    }

    pub fn from_token(s: &str) -> Option<Bias> {
        Self::ALL.into_iter().find(|b| b.token() == s)
    }
}

impl fmt::Display for Bias {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Inclusive bucket range; a missing side is unbounded.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Range {
    pub lower: Option<String>,
    pub upper: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Arc {
    pub anchor: Sector,
    pub clockwise: u8,
    pub anticlockwise: u8,
}

impl Arc {
    pub fn contains(&self, s: Sector) -> bool {
        let cw = (s.index() + 8 - self.anchor.index()) % 8;
        let acw = (self.anchor.index() + 8 - s.index()) % 8;
        cw <= self.clockwise as usize || acw <= self.anticlockwise as usize
    }
}

/// Largest combined reach; one more tick would cover every sector.
pub const MAX_ARC_REACH: usize = 6;

/// A placement-level condition; `None` components are free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellPattern {
    pub level: u8,
    pub vert: Option<Vert>,
    pub horiz: Option<Horiz>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleBody {
    Magnitude(Range),
    Angle(Arc),
    OperationArea(Range),
    CellOccupancy(CellPattern),
}

impl RuleBody {
    pub fn bias(&self) -> Bias {
        match self {
            RuleBody::Magnitude(_) => Bias::Magnitude,
            RuleBody::Angle(_) => Bias::Angle,
            RuleBody::OperationArea(_) => Bias::OperationArea,
            RuleBody::CellOccupancy(_) => Bias::CellOccupancy,
        }
    }

    /// Number of body conditions.
    pub fn literal_count(&self) -> usize {
        match self {
            RuleBody::Magnitude(r) | RuleBody::OperationArea(r) => {
                r.lower.is_some() as usize + r.upper.is_some() as usize
            }
            RuleBody::Angle(a) => 1 + (a.clockwise > 0) as usize + (a.anticlockwise > 0) as usize,
            RuleBody::CellOccupancy(c) => c.vert.is_some() as usize + c.horiz.is_some() as usize,
        }
    }

    /// Whether one time-step satisfies the body.
    pub fn holds_at(&self, step: &BehaviourStep, scheme: &BucketScheme) -> bool {
        match self {
            RuleBody::Magnitude(r) => {
                let fam = &scheme.magnitude;
                in_range(fam.index_of(step.magnitude.value()), r, fam)
            }
            RuleBody::OperationArea(r) => {
                let fam = &scheme.area;
                fam.position(&step.area).is_some_and(|i| in_range(i, r, fam))
            }
            RuleBody::Angle(a) => a.contains(step.sector),
            RuleBody::CellOccupancy(c) => {
                let (v, h) = step.placement.level(c.level as usize);
                c.vert.is_none_or(|x| x == v) && c.horiz.is_none_or(|x| x == h)
            }
        }
    }

    fn validate(&self, scheme: &BucketScheme) -> std::result::Result<(), String> {
        if self.literal_count() == 0 {
            return Err("rule has no body conditions".into());
        }
        match self {
            RuleBody::Magnitude(r) => check_range(r, &scheme.magnitude),
            RuleBody::OperationArea(r) => check_range(r, &scheme.area),
            RuleBody::Angle(a) => {
                if a.clockwise as usize + a.anticlockwise as usize > MAX_ARC_REACH {
                    Err("arc must span less than the full circle".into())
                } else {
                    Ok(())
                }
            }
            RuleBody::CellOccupancy(c) => {
                if (c.level as usize) < PLACEMENT_LEVELS {
                    Ok(())
                } else {
                    Err(format!("placement level {} out of range", c.level))
                }
            }
        }
    }
}

fn in_range(i: usize, r: &Range, fam: &crate::behaviour::BucketFamily) -> bool {
    let lo = r.lower.as_deref().map_or(Some(0), |n| fam.position(n));
    let hi = r.upper.as_deref().map_or(Some(usize::MAX), |n| fam.position(n));
    matches!((lo, hi), (Some(lo), Some(hi)) if lo <= i && i <= hi)
}

fn check_range(r: &Range, fam: &crate::behaviour::BucketFamily) -> std::result::Result<(), String> {
    let pos = |n: &Option<String>| -> std::result::Result<Option<usize>, String> {
        match n {
            None => Ok(None),
            Some(n) => fam.position(n).map(Some).ok_or_else(|| format!("unknown bucket `{n}`")),
        }
    };
    if let (Some(lo), Some(hi)) = (pos(&r.lower)?, pos(&r.upper)?) {
        if lo > hi {
            return Err("empty range".into());
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndicatorRule {
    /// Adverb or antonym token the rule concludes.
    pub head: String,
    pub body: RuleBody,
}

impl IndicatorRule {
    pub fn new(head: impl Into<String>, body: RuleBody) -> Self {
        IndicatorRule {
            head: head.into(),
            body,
        }
    }

    pub fn bias(&self) -> Bias {
        self.body.bias()
    }

    pub fn validate(&self, scheme: &BucketScheme) -> Result<()> {
        self.body
            .validate(scheme)
            .map_err(|m| Error::Config(format!("rule `{self}`: {m}")))
    }
}

/// True iff some time-step of `b` satisfies the rule body.
pub fn rule_fires(rule: &IndicatorRule, b: &ObjectBehaviour, scheme: &BucketScheme) -> bool {
    b.steps.iter().any(|s| rule.body.holds_at(s, scheme))
}

/// Text of a rule with no body, `class(head, V0).`
pub fn bodyless_text(head: &str) -> String {
    format!("class({head}, V0).")
}

fn range_text(f: &mut fmt::Formatter<'_>, var: &str, r: &Range) -> fmt::Result {
    if let Some(lo) = &r.lower {
        write!(f, ", at_least({var}, {lo})")?;
    }
    if let Some(hi) = &r.upper {
        write!(f, ", at_most({var}, {hi})")?;
    }
    Ok(())
}

impl fmt::Display for IndicatorRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "class({}, V0) :- ", self.head)?;
        match &self.body {
            RuleBody::Magnitude(r) => {
                f.write_str("magnitude(V0, M, T)")?;
                range_text(f, "M", r)?;
            }
            RuleBody::OperationArea(r) => {
                f.write_str("operation_area(V0, A, T)")?;
                range_text(f, "A", r)?;
            }
            RuleBody::Angle(a) => {
                if a.clockwise == 0 && a.anticlockwise == 0 {
                    write!(f, "angle(V0, {}, T)", a.anchor)?;
                } else {
                    write!(
                        f,
                        "angle(V0, S, T), within_arc(S, {}, {}, {})",
                        a.anchor, a.clockwise, a.anticlockwise
                    )?;
                }
            }
            RuleBody::CellOccupancy(c) => {
                write!(
                    f,
                    "place(V0, {}, {}, {}, T)",
                    c.level,
                    c.vert.map_or("V", Vert::token),
                    c.horiz.map_or("H", Horiz::token)
                )?;
            }
        }
        f.write_str(".")
    }
}

fn split_args(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).collect()
}

/// Split `name(a, b), other(c)` into `[(name, [a, b]), (other, [c])]`.
fn literals(body: &str) -> std::result::Result<Vec<(&str, Vec<&str>)>, String> {
    let mut out = Vec::new();
    let mut rest = body.trim();
    while !rest.is_empty() {
        let open = rest.find('(').ok_or_else(|| format!("expected a literal at `{rest}`"))?;
        let close = rest[open..].find(')').ok_or("missing `)`")? + open;
        out.push((rest[..open].trim(), split_args(&rest[open + 1..close])));
        rest = rest[close + 1..].trim_start();
        if let Some(r) = rest.strip_prefix(',') {
            rest = r.trim_start();
        } else if !rest.is_empty() {
            return Err(format!("unexpected `{rest}`"));
        }
    }
    Ok(out)
}

fn parse_range(lits: &[(&str, Vec<&str>)], var: &str) -> std::result::Result<Range, String> {
    let mut r = Range {
        lower: None,
        upper: None,
    };
    for (name, args) in lits {
        let slot = match *name {
            "at_least" => &mut r.lower,
            "at_most" => &mut r.upper,
            other => return Err(format!("unexpected literal `{other}`")),
        };
        if args.len() != 2 || args[0] != var || !is_token(&normalize_token(args[1])) {
            return Err(format!("malformed `{name}` literal"));
        }
        *slot = Some(normalize_token(args[1]));
    }
    Ok(r)
}

impl FromStr for IndicatorRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let err = |m: String| Error::Config(format!("rule `{s}`: {m}"));
        let text = s.trim().strip_suffix('.').ok_or_else(|| err("missing `.`".into()))?;
        let (head, body) = text.split_once(":-").ok_or_else(|| err("missing `:-`".into()))?;
        let head_lits = literals(head).map_err(err)?;
        let head = match head_lits.as_slice() {
            [("class", args)] if args.len() == 2 && args[1] == "V0" => normalize_token(args[0]),
            _ => return Err(err("head must be `class(<label>, V0)`".into())),
        };
        let lits = literals(body).map_err(err)?;
        let (first, rest) = lits.split_first().ok_or_else(|| err("empty body".into()))?;
        let body = match (first.0, first.1.as_slice()) {
            ("magnitude", ["V0", "M", "T"]) => RuleBody::Magnitude(parse_range(rest, "M").map_err(err)?),
            ("operation_area", ["V0", "A", "T"]) => RuleBody::OperationArea(parse_range(rest, "A").map_err(err)?),
            ("angle", ["V0", sector, "T"]) if *sector != "S" => {
                if !rest.is_empty() {
                    return Err(err("unexpected literals after angle".into()));
                }
                let anchor = Sector::from_token(sector).ok_or_else(|| err(format!("unknown sector `{sector}`")))?;
                RuleBody::Angle(Arc {
                    anchor,
                    clockwise: 0,
                    anticlockwise: 0,
                })
            }
            ("angle", ["V0", "S", "T"]) => match rest {
                [("within_arc", args)] if args.len() == 4 && args[0] == "S" => {
                    let anchor = Sector::from_token(args[1]).ok_or_else(|| err(format!("unknown sector `{}`", args[1])))?;
                    let n = |x: &str| x.parse::<u8>().map_err(|_| err(format!("bad reach `{x}`")));
                    RuleBody::Angle(Arc {
                        anchor,
                        clockwise: n(args[2])?,
                        anticlockwise: n(args[3])?,
                    })
                }
                _ => return Err(err("expected `within_arc(S, anchor, cw, acw)`".into())),
            },
            ("place", ["V0", level, v, h, "T"]) => {
                if !rest.is_empty() {
                    return Err(err("unexpected literals after place".into()));
                }
                let level = level.parse::<u8>().map_err(|_| err(format!("bad level `{level}`")))?;
                let vert = match *v {
                    "V" => None,
                    t => Some(Vert::from_token(t).ok_or_else(|| err(format!("bad vertical `{t}`")))?),
                };
                let horiz = match *h {
                    "H" => None,
                    t => Some(Horiz::from_token(t).ok_or_else(|| err(format!("bad horizontal `{t}`")))?),
                };
                RuleBody::CellOccupancy(CellPattern { level, vert, horiz })
            }
            (name, _) => return Err(err(format!("unrecognized body literal `{name}`"))),
        };
        let rule = IndicatorRule { head, body };
        if rule.body.literal_count() == 0 {
            return Err(err("rule has no body conditions".into()));
        }
        Ok(rule)
    }
}
