use std::collections::HashSet;

use super::{Fact, Predicate, Term};
use crate::behaviour::{BucketScheme, Sector};

/// Longest clockwise/anticlockwise distance materialized.
pub const MAX_TICKS: usize = 8;

/// Ground background knowledge for a scheme.
///
/// * `opposite/2` for left/right and top/bottom in both directions;
/// * `less_than(a, b, d)` for every ordered pair of buckets within each
///   family, with `d` the number of steps between them;
/// * `clockwise(a, b, d)` / `anticlockwise(a, b, d)` for every sector and
///   every distance `1..=8`, the transitive closure capped at 8 ticks.
///
/// Facts shared between families (same names, same distance) appear once.
pub fn generate_background(scheme: &BucketScheme) -> Vec<Fact> {
    let mut out = Vec::new();
    for (a, b) in [("left", "right"), ("right", "left"), ("top", "bottom"), ("bottom", "top")] {
        out.push(Fact::of(Predicate::Opposite, vec![Term::sym(a), Term::sym(b)]));
    }
    let mut seen = HashSet::new();
    for family in scheme.families() {
        let names: Vec<&str> = family.names().collect();
        for i in 0..names.len() {
            for j in i + 1..names.len() {
                let f = Fact::of(
                    Predicate::LessThan,
                    vec![Term::sym(names[i]), Term::sym(names[j]), Term::Int((j - i) as i64)],
                );
                if seen.insert(f.clone()) {
                    out.push(f);
                }
            }
        }
    }
    for (pred, step) in [
        (Predicate::Clockwise, Sector::clockwise as fn(Sector, usize) -> Sector),
        (Predicate::Anticlockwise, Sector::anticlockwise),
    ] {
        for anchor in Sector::CLOCKWISE {
            for d in 1..=MAX_TICKS {
                out.push(Fact::of(
                    pred,
                    vec![
                        Term::sym(anchor.token()),
                        Term::sym(step(anchor, d).token()),
                        Term::Int(d as i64),
                    ],
                ));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn find(bg: &[Fact], s: &str) -> bool {
        bg.iter().any(|f| f.to_string() == s)
    }

    #[test]
    fn quoted_examples_present() {
        let bg = generate_background(&BucketScheme::default());
        assert!(find(&bg, "less_than(very_small, small, 1)."));
        assert!(find(&bg, "less_than(very_small, medium, 2)."));
        assert!(find(&bg, "clockwise(n, ne, 1)."));
        assert!(find(&bg, "clockwise(n, e, 2)."));
        assert!(find(&bg, "anticlockwise(n, nw, 1)."));
        assert!(find(&bg, "opposite(top, bottom)."));
    }

    #[test]
    fn sixty_four_clockwise_facts() {
        let bg = generate_background(&BucketScheme::default());
        let cw = bg.iter().filter(|f| f.predicate == Predicate::Clockwise).count();
        let acw = bg.iter().filter(|f| f.predicate == Predicate::Anticlockwise).count();
        assert_eq!((cw, acw), (64, 64));
    }

    // Oracle: start from the one-tick successor relation on a ring of 8
    // labels and close under composition, summing distances, up to 8.
    fn ring_closure(names: &[&str], forward: bool) -> HashSet<String> {
        let n = names.len();
        let succ = |i: usize| if forward { (i + 1) % n } else { (i + n - 1) % n };
        let mut rel: HashSet<(usize, usize, usize)> = (0..n).map(|i| (i, succ(i), 1)).collect();
        loop {
            let mut grown = rel.clone();
            for &(a, b, d) in &rel {
                for &(c, e, k) in &rel {
                    if b == c && d + k <= MAX_TICKS {
                        grown.insert((a, e, d + k));
                    }
                }
            }
            if grown.len() == rel.len() {
                break;
            }
            rel = grown;
        }
        let pred = if forward { "clockwise" } else { "anticlockwise" };
        rel.into_iter()
            .map(|(a, b, d)| format!("{pred}({}, {}, {d}).", names[a], names[b]))
            .collect()
    }

    #[test]
    fn ring_facts_match_closure_oracle() {
        let bg = generate_background(&BucketScheme::default());
        let names = ["n", "ne", "e", "se", "s", "sw", "w", "nw"];
        for (pred, forward) in [(Predicate::Clockwise, true), (Predicate::Anticlockwise, false)] {
            let got: HashSet<String> =
                bg.iter().filter(|f| f.predicate == pred).map(|f| f.to_string()).collect();
            assert_eq!(got, ring_closure(&names, forward));
        }
    }

    #[test]
    fn less_than_matches_chain_closure() {
        let scheme = BucketScheme::default();
        let bg = generate_background(&scheme);
        let got: HashSet<String> = bg
            .iter()
            .filter(|f| f.predicate == Predicate::LessThan)
            .map(|f| f.to_string())
            .collect();
        let mut want = HashSet::new();
        for fam in scheme.families() {
            let names: Vec<&str> = fam.names().collect();
            // distance-1 links, then transitive composition
            let mut rel: HashSet<(usize, usize, usize)> = (1..names.len()).map(|i| (i - 1, i, 1)).collect();
            loop {
                let mut grown = rel.clone();
                for &(a, b, d) in &rel {
                    for &(c, e, k) in &rel {
                        if b == c {
                            grown.insert((a, e, d + k));
                        }
                    }
                }
                if grown.len() == rel.len() {
                    break;
                }
                rel = grown;
            }
            want.extend(
                rel.into_iter()
                    .map(|(a, b, d)| format!("less_than({}, {}, {d}).", names[a], names[b])),
            );
        }
        assert_eq!(got, want);
    }

    #[test]
    fn no_duplicate_facts() {
        let bg = generate_background(&BucketScheme::default());
        let set: HashSet<_> = bg.iter().collect();
        assert_eq!(set.len(), bg.len());
    }
}
