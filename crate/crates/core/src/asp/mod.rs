//! The ground fact language for object behaviours.
//!
//! A program file looks like
//!
//! ```text
//! % clip: c0001
//! % action: dance
//! % labels: slowly
//! % background
//! opposite(left, right).
//! less_than(very_small, small, 1).
//! % behaviour
//! detected(person, 1).
//! magnitude(person, 18.3, 1).
//! angle(person, n, 1).
//! operation_area(person, small, 1).
//! movement_in_place(person, medium, 1).
//! place(person, 0, top, left, 1).
//! ```
//!
//! Parsing accepts hyphenated tokens (`very-small`), `%` comments anywhere,
//! and keeps unknown predicates and rules in [`AspProgram::extras`].

mod background;
mod parse;
mod rule;

use std::collections::BTreeMap;
use std::fmt;

pub use background::generate_background;
pub use parse::parse_program;
pub use rule::{bodyless_text, rule_fires, Arc, MAX_ARC_REACH, Bias, CellPattern, IndicatorRule, Range, RuleBody};

use crate::behaviour::{BehaviourStep, ObjectBehaviour, Placement, Sector, Tenths, PLACEMENT_LEVELS};
use crate::behaviour::{Horiz, Vert};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Sym(String),
    Int(i64),
    Dec(Tenths),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Sym(s) => f.write_str(s),
            Term::Int(i) => write!(f, "{i}"),
            Term::Dec(t) => write!(f, "{t}"),
        }
    }
}

impl Term {
    pub fn sym(s: impl Into<String>) -> Term {
        Term::Sym(s.into())
    }
    fn as_sym(&self) -> Option<&str> {
        match self {
            Term::Sym(s) => Some(s),
            _ => None,
        }
    }
    fn as_int(&self) -> Option<i64> {
        match self {
            Term::Int(i) => Some(*i),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Predicate {
    Detected,
    Magnitude,
    Angle,
    OperationArea,
    MovementInPlace,
    Place,
    Opposite,
    LessThan,
    Clockwise,
    Anticlockwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ArgKind {
    Sym,
    Int,
    Number,
}

impl Predicate {
    pub const ALL: [Predicate; 10] = [
        Predicate::Detected,
        Predicate::Magnitude,
        Predicate::Angle,
        Predicate::OperationArea,
        Predicate::MovementInPlace,
        Predicate::Place,
        Predicate::Opposite,
        Predicate::LessThan,
        Predicate::Clockwise,
        Predicate::Anticlockwise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Predicate::Detected => "detected",
            Predicate::Magnitude => "magnitude",
            Predicate::Angle => "angle",
            Predicate::OperationArea => "operation_area",
            Predicate::MovementInPlace => "movement_in_place",
            Predicate::Place => "place",
            Predicate::Opposite => "opposite",
            Predicate::LessThan => "less_than",
            Predicate::Clockwise => "clockwise",
            Predicate::Anticlockwise => "anticlockwise",
        }
    }

    pub fn from_name(name: &str) -> Option<Predicate> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    fn signature(self) -> &'static [ArgKind] {
        use ArgKind::*;
        match self {
            Predicate::Detected => &[Sym, Int],
            Predicate::Magnitude => &[Sym, Number, Int],
            Predicate::Angle | Predicate::OperationArea | Predicate::MovementInPlace => &[Sym, Sym, Int],
            Predicate::Place => &[Sym, Int, Sym, Sym, Int],
            Predicate::Opposite => &[Sym, Sym],
            Predicate::LessThan | Predicate::Clockwise | Predicate::Anticlockwise => &[Sym, Sym, Int],
        }
    }

    pub fn arity(self) -> usize {
        self.signature().len()
    }

    pub fn is_background(self) -> bool {
        matches!(
            self,
            Predicate::Opposite | Predicate::LessThan | Predicate::Clockwise | Predicate::Anticlockwise
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fact {
    pub predicate: Predicate,
    pub args: Vec<Term>,
}

impl Fact {
    /// Build a fact, checking arity and argument kinds. Integer magnitudes
    /// are widened to one-decimal values.
    pub fn new(predicate: Predicate, args: Vec<Term>) -> std::result::Result<Fact, String> {
        let sig = predicate.signature();
        if args.len() != sig.len() {
            return Err(format!(
                "{}/{} given {} arguments",
                predicate.name(),
                sig.len(),
                args.len()
            ));
        }
        let mut out = Vec::with_capacity(args.len());
        for (i, (arg, kind)) in args.into_iter().zip(sig).enumerate() {
            let arg = match (kind, arg) {
                (ArgKind::Sym, t @ Term::Sym(_)) => t,
                (ArgKind::Int, t @ Term::Int(_)) => t,
                (ArgKind::Number, Term::Int(v)) if v >= 0 => Term::Dec(Tenths(v as u32 * 10)),
                (ArgKind::Number, t @ Term::Dec(_)) => t,
                (kind, t) => {
                    let want = match kind {
                        ArgKind::Sym => "a symbol",
                        ArgKind::Int => "an integer",
                        ArgKind::Number => "a non-negative number",
                    };
                    return Err(format!(
                        "{} argument {} must be {want}, got `{t}`",
                        predicate.name(),
                        i + 1
                    ));
                }
            };
            out.push(arg);
        }
        Ok(Fact { predicate, args: out })
    }

    fn of(predicate: Predicate, args: Vec<Term>) -> Fact {
        Fact::new(predicate, args).expect("well-formed fact")
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.predicate.name())?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(").")
    }
}

/// A statement the parser does not model: an unknown predicate or a rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Extra {
    pub line: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AspProgram {
    pub clip_id: String,
    pub action: Option<String>,
    /// Adverb-type labels of the source clip (e.g. `slowly`).
    pub adverb_labels: Vec<String>,
    pub background: Vec<Fact>,
    pub facts: Vec<Fact>,
    pub extras: Vec<Extra>,
}

/// Behaviour facts of one object: detected, magnitude, angle, areas and the
/// three placement levels for each time-step, in that order.
pub fn behaviour_facts(b: &ObjectBehaviour) -> Vec<Fact> {
    let obj = || Term::sym(&b.object_label);
    let mut out = Vec::with_capacity(b.steps.len() * 8);
    for s in &b.steps {
        let t = Term::Int(s.time_step as i64);
        out.push(Fact::of(Predicate::Detected, vec![obj(), t.clone()]));
        out.push(Fact::of(Predicate::Magnitude, vec![obj(), Term::Dec(s.magnitude), t.clone()]));
        out.push(Fact::of(Predicate::Angle, vec![obj(), Term::sym(s.sector.token()), t.clone()]));
        out.push(Fact::of(Predicate::OperationArea, vec![obj(), Term::sym(&s.area), t.clone()]));
        out.push(Fact::of(Predicate::MovementInPlace, vec![obj(), Term::sym(&s.movement), t.clone()]));
        for (level, (v, h)) in s.placement.0.iter().enumerate() {
            out.push(Fact::of(
                Predicate::Place,
                vec![obj(), Term::Int(level as i64), Term::sym(v.token()), Term::sym(h.token()), t.clone()],
            ));
        }
    }
    out
}

impl AspProgram {
    pub fn from_behaviours(
        clip_id: &str,
        action: Option<&str>,
        adverb_labels: &[String],
        behaviours: &[ObjectBehaviour],
        background: Vec<Fact>,
    ) -> AspProgram {
        AspProgram {
            clip_id: clip_id.to_string(),
            action: action.map(str::to_string),
            adverb_labels: adverb_labels.to_vec(),
            background,
            facts: behaviours.iter().flat_map(behaviour_facts).collect(),
            extras: Vec::new(),
        }
    }

    /// Rebuild per-object behaviours from the behaviour facts, in order of
    /// first appearance. Objects labelled `unknown` are skipped.
    pub fn behaviours(&self) -> Result<Vec<ObjectBehaviour>> {
        #[derive(Default)]
        struct Partial {
            detected: bool,
            magnitude: Option<Tenths>,
            sector: Option<Sector>,
            area: Option<String>,
            movement: Option<String>,
            place: [Option<(Vert, Horiz)>; PLACEMENT_LEVELS],
        }
        let mut order: Vec<String> = Vec::new();
        let mut steps: BTreeMap<(String, i64), Partial> = BTreeMap::new();
        let bad = |f: &Fact, why: &str| Error::Config(format!("clip {}: `{f}`: {why}", self.clip_id));
        for f in &self.facts {
            let obj = f.args[0].as_sym().expect("typed").to_string();
            if obj == crate::obs::UNKNOWN_LABEL {
                continue;
            }
            let t = f.args.last().and_then(Term::as_int).expect("typed");
            if !order.contains(&obj) {
                order.push(obj.clone());
            }
            let p = steps.entry((obj, t)).or_default();
            match f.predicate {
                Predicate::Detected => p.detected = true,
                Predicate::Magnitude => {
                    if let Term::Dec(m) = f.args[1] {
                        p.magnitude = Some(m);
                    }
                }
                Predicate::Angle => {
                    let s = f.args[1].as_sym().unwrap();
                    p.sector = Some(Sector::from_token(s).ok_or_else(|| bad(f, "unknown sector"))?);
                }
                Predicate::OperationArea => p.area = f.args[1].as_sym().map(str::to_string),
                Predicate::MovementInPlace => p.movement = f.args[1].as_sym().map(str::to_string),
                Predicate::Place => {
                    let level = f.args[1].as_int().unwrap();
                    let v = Vert::from_token(f.args[2].as_sym().unwrap()).ok_or_else(|| bad(f, "unknown vertical"))?;
                    let h = Horiz::from_token(f.args[3].as_sym().unwrap()).ok_or_else(|| bad(f, "unknown horizontal"))?;
                    let slot = usize::try_from(level)
                        .ok()
                        .and_then(|l| p.place.get_mut(l))
                        .ok_or_else(|| bad(f, "placement level out of range"))?;
                    *slot = Some((v, h));
                }
                _ => {}
            }
        }
        let mut out = Vec::new();
        for obj in order {
            let mut b = ObjectBehaviour {
                clip_id: self.clip_id.clone(),
                object_label: obj.clone(),
                steps: Vec::new(),
            };
            for ((o, t), p) in steps.range((obj.clone(), i64::MIN)..=(obj.clone(), i64::MAX)) {
                let missing = |what: &str| {
                    Error::Config(format!("clip {}: object `{o}` step {t} lacks {what}", self.clip_id))
                };
                if !p.detected {
                    return Err(missing("detected/2"));
                }
                let mut levels = [(Vert::Top, Horiz::Left); PLACEMENT_LEVELS];
                for (l, slot) in p.place.iter().enumerate() {
                    levels[l] = slot.ok_or_else(|| missing("place/5"))?;
                }
                b.steps.push(BehaviourStep {
                    time_step: u32::try_from(*t).map_err(|_| missing("a valid time-step"))?,
                    magnitude: p.magnitude.ok_or_else(|| missing("magnitude/3"))?,
                    sector: p.sector.ok_or_else(|| missing("angle/3"))?,
                    area: p.area.clone().ok_or_else(|| missing("operation_area/3"))?,
                    movement: p.movement.clone().ok_or_else(|| missing("movement_in_place/3"))?,
                    placement: Placement(levels),
                });
            }
            out.push(b);
        }
        Ok(out)
    }
}

/// Render a program: header comments, background facts, behaviour facts.
pub fn emit_program(program: &AspProgram) -> String {
    let mut out = String::new();
    out.push_str(&format!("% clip: {}\n", program.clip_id));
    if let Some(a) = &program.action {
        out.push_str(&format!("% action: {a}\n"));
    }
    if !program.adverb_labels.is_empty() {
        out.push_str(&format!("% labels: {}\n", program.adverb_labels.join(" ")));
    }
    out.push_str("% background\n");
    for f in &program.background {
        out.push_str(&format!("{f}\n"));
    }
    out.push_str("% behaviour\n");
    for f in &program.facts {
        out.push_str(&format!("{f}\n"));
    }
    if !program.extras.is_empty() {
        out.push_str("% extras\n");
        for e in &program.extras {
            out.push_str(&e.text);
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behaviour::BucketScheme;
    use proptest::prelude::*;

    pub(crate) fn person() -> ObjectBehaviour {
        ObjectBehaviour {
            clip_id: "c1".into(),
            object_label: "person".into(),
            steps: vec![
                BehaviourStep {
                    time_step: 1,
                    magnitude: Tenths(183),
                    sector: Sector::N,
                    area: "small".into(),
                    movement: "medium".into(),
                    placement: Placement::of_point(0.3, 0.2),
                },
                BehaviourStep {
                    time_step: 2,
                    magnitude: Tenths(70),
                    sector: Sector::Ne,
                    area: "medium".into(),
                    movement: "small".into(),
                    placement: Placement::of_point(0.7, 0.6),
                },
            ],
        }
    }

    #[test]
    fn detected_line() {
        let text = emit_program(&AspProgram::from_behaviours("c1", None, &[], &[person()], vec![]));
        assert!(text.lines().any(|l| l == "detected(person, 2)."));
        assert!(text.lines().any(|l| l == "magnitude(person, 18.3, 1)."));
        assert!(text.lines().any(|l| l == "place(person, 0, top, left, 1)."));
    }

    #[test]
    fn empty_behaviours_give_background_only() {
        let bg = generate_background(&BucketScheme::default());
        let p = AspProgram::from_behaviours("c", None, &[], &[], bg.clone());
        assert!(p.facts.is_empty());
        let back = parse_program(&emit_program(&p)).unwrap();
        assert_eq!(back.background, bg);
        assert!(back.facts.is_empty());
    }

    #[test]
    fn behaviours_roundtrip_through_text() {
        let p = AspProgram::from_behaviours(
            "c1",
            Some("run"),
            &["quickly".to_string()],
            &[person()],
            generate_background(&BucketScheme::default()),
        );
        let back = parse_program(&emit_program(&p)).unwrap();
        assert_eq!(back, p);
        assert_eq!(back.behaviours().unwrap(), vec![person()]);
    }

    #[test]
    fn incomplete_step_rejected() {
        let p = parse_program("% clip: x\ndetected(cat, 1).\nmagnitude(cat, 2.0, 1).\n").unwrap();
        assert!(p.behaviours().is_err());
    }

    #[test]
    fn fact_typing() {
        assert!(Fact::new(Predicate::Detected, vec![Term::sym("a")]).is_err());
        assert!(Fact::new(Predicate::Detected, vec![Term::sym("a"), Term::sym("b")]).is_err());
        let m = Fact::new(Predicate::Magnitude, vec![Term::sym("a"), Term::Int(3), Term::Int(1)]).unwrap();
        assert_eq!(m.to_string(), "magnitude(a, 3.0, 1).");
    }

    fn arb_step() -> impl Strategy<Value = BehaviourStep> {
        let s = BucketScheme::default();
        let areas: Vec<String> = s.area.names().map(str::to_string).collect();
        let movs: Vec<String> = s.movement.names().map(str::to_string).collect();
        (0u32..700, 0usize..8, proptest::sample::select(areas), proptest::sample::select(movs), 0.0f64..1.0, 0.0f64..1.0)
            .prop_map(|(m, sec, area, movement, x, y)| BehaviourStep {
                time_step: 0,
                magnitude: Tenths(m),
                sector: Sector::from_index(sec),
                area,
                movement,
                placement: Placement::of_point(x, y),
            })
    }

    pub(crate) fn arb_behaviour() -> impl Strategy<Value = ObjectBehaviour> {
        (proptest::sample::select(vec!["person", "car", "dog", "traffic_light"]), proptest::collection::vec(arb_step(), 1..12))
            .prop_map(|(label, mut steps)| {
                for (i, s) in steps.iter_mut().enumerate() {
                    s.time_step = i as u32 + 1;
                }
                ObjectBehaviour {
                    clip_id: "clip_7".into(),
                    object_label: label.into(),
                    steps,
                }
            })
    }

    proptest! {
        #[test]
        fn parse_emit_roundtrip(bs in proptest::collection::vec(arb_behaviour(), 0..4)) {
            // one behaviour per label
            let mut seen = std::collections::BTreeSet::new();
            let bs: Vec<_> = bs.into_iter().filter(|b| seen.insert(b.object_label.clone())).collect();
            let p = AspProgram::from_behaviours("clip_7", Some("jump"), &["slowly".into()], &bs, vec![]);
            let back = parse_program(&emit_program(&p)).unwrap();
            prop_assert_eq!(&back, &p);
            prop_assert_eq!(back.behaviours().unwrap(), bs);
        }
    }
}
