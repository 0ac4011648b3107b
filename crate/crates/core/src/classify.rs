use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::pair::Pair;
use crate::svm::SvmModel;

#[derive(Debug, Clone, PartialEq)]
pub struct ClipPrediction {
    pub clip_id: String,
    /// `(object_label, predicted adverb?)` in input order.
    pub votes: Vec<(String, bool)>,
    pub positive: bool,
    pub tie: bool,
}

/// Majority over object votes; an exact tie goes to the adverb.
pub fn majority_vote(clip_id: &str, votes: Vec<(String, bool)>) -> Result<ClipPrediction> {
    if votes.is_empty() {
        return Err(Error::EmptyVotes(clip_id.to_string()));
    }
    let yes = votes.iter().filter(|(_, v)| *v).count();
    let no = votes.len() - yes;
    Ok(ClipPrediction {
        clip_id: clip_id.to_string(),
        votes,
        positive: yes >= no,
        tie: yes == no,
    })
}

/// A test clip's ground truth and the features of its objects.
#[derive(Debug, Clone)]
pub struct LabelledClip {
    pub clip_id: String,
    pub positive: bool,
    pub objects: Vec<FeatureVector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairScore {
    pub pair: Pair,
    pub clips: usize,
    pub clips_correct: usize,
    pub snippets: usize,
    pub snippets_correct: usize,
}

impl PairScore {
    pub fn empty(pair: Pair) -> Self {
        PairScore {
            pair,
            clips: 0,
            clips_correct: 0,
            snippets: 0,
            snippets_correct: 0,
        }
    }

    pub fn clip_accuracy(&self) -> Option<f64> {
        (self.clips > 0).then(|| self.clips_correct as f64 / self.clips as f64)
    }

    pub fn snippet_accuracy(&self) -> Option<f64> {
        (self.snippets > 0).then(|| self.snippets_correct as f64 / self.snippets as f64)
    }
}

/// Predict every object, vote per clip, and score against the truth.
pub fn score_pair(pair: &Pair, model: &SvmModel, clips: &[LabelledClip]) -> Result<(PairScore, Vec<ClipPrediction>)> {
    let mut score = PairScore::empty(pair.clone());
    let mut predictions = Vec::with_capacity(clips.len());
    for clip in clips {
        let mut votes = Vec::with_capacity(clip.objects.len());
        for f in &clip.objects {
            let p = model.predict(&f.values)?;
            score.snippets += 1;
            score.snippets_correct += (p == clip.positive) as usize;
            votes.push((f.object_label.clone(), p));
        }
        let pred = majority_vote(&clip.clip_id, votes)?;
        score.clips += 1;
        score.clips_correct += (pred.positive == clip.positive) as usize;
        predictions.push(pred);
    }
    Ok((score, predictions))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub scores: Vec<PairScore>,
    /// Configuration digest the report was produced under.
    pub fingerprint: String,
    /// Action tokens that had no embedding.
    pub missing_actions: Vec<String>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = xs.collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn pct(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |a| format!("{:.2}%", 100.0 * a))
}

fn frac(v: Option<f64>) -> String {
    v.map_or(String::new(), |a| format!("{a:.6}"))
}

impl EvalReport {
    /// Unweighted mean of clip accuracies over pairs with test clips.
    pub fn average_clip_accuracy(&self) -> Option<f64> {
        mean(self.scores.iter().filter_map(PairScore::clip_accuracy))
    }

    pub fn average_snippet_accuracy(&self) -> Option<f64> {
        mean(self.scores.iter().filter_map(PairScore::snippet_accuracy))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<28} {:>6} {:>9} {:>9} {:>12}",
            "pair", "clips", "clip_acc", "snippets", "snippet_acc"
        );
        for s in &self.scores {
            let _ = writeln!(
                out,
                "{:<28} {:>6} {:>9} {:>9} {:>12}",
                s.pair.to_string(),
                s.clips,
                pct(s.clip_accuracy()),
                s.snippets,
                pct(s.snippet_accuracy())
            );
        }
        let _ = writeln!(
            out,
            "{:<28} {:>6} {:>9} {:>9} {:>12}",
            "average",
            "",
            pct(self.average_clip_accuracy()),
            "",
            pct(self.average_snippet_accuracy())
        );
        let _ = writeln!(out, "fingerprint {}", self.fingerprint);
        if !self.missing_actions.is_empty() {
            let _ = writeln!(out, "actions without embedding: {}", self.missing_actions.join(" "));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("pair,clips,clip_accuracy,snippets,snippet_accuracy\n");
        for s in &self.scores {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                s.pair,
                s.clips,
                frac(s.clip_accuracy()),
                s.snippets,
                frac(s.snippet_accuracy())
            );
        }
        let _ = writeln!(
            out,
            "average,,{},,{}",
            frac(self.average_clip_accuracy()),
            frac(self.average_snippet_accuracy())
        );
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pair::default_pairs;

    fn votes(v: &[bool]) -> Vec<(String, bool)> {
        v.iter().enumerate().map(|(i, &b)| (format!("o{i}"), b)).collect()
    }

    #[test]
    fn vote_rules() {
        let p = majority_vote("c", votes(&[true, true, false])).unwrap();
        assert!(p.positive && !p.tie);
        let p = majority_vote("c", votes(&[false])).unwrap();
        assert!(!p.positive);
        let p = majority_vote("c", votes(&[true, false])).unwrap();
        assert!(p.positive && p.tie);
        assert!(matches!(majority_vote("c", vec![]), Err(Error::EmptyVotes(_))));
    }

    #[test]
    fn vote_is_order_invariant() {
        let base = [true, false, false, true, true, false, false];
        for r in 0..base.len() {
            let mut v = base.to_vec();
            v.rotate_left(r);
            v.reverse();
            assert!(!majority_vote("c", votes(&v)).unwrap().positive);
        }
    }

    fn report() -> EvalReport {
        let scores = default_pairs()
            .into_iter()
            .enumerate()
            .map(|(i, pair)| PairScore {
                pair,
                clips: if i == 10 { 0 } else { 10 },
                clips_correct: if i == 10 { 0 } else { i },
                snippets: if i == 10 { 0 } else { 20 },
                snippets_correct: if i == 10 { 0 } else { 2 * i },
            })
            .collect();
        EvalReport {
            scores,
            fingerprint: "abc".into(),
            missing_actions: vec![],
        }
    }

    #[test]
    fn average_is_mean_of_reported_rows() {
        let r = report();
        let rows: Vec<f64> = r.scores.iter().filter_map(PairScore::clip_accuracy).collect();
        assert_eq!(rows.len(), 10);
        let avg = r.average_clip_accuracy().unwrap();
        assert!((avg - rows.iter().sum::<f64>() / 10.0).abs() < 1e-9);
        assert!((avg - 0.45).abs() < 1e-9);
    }

    #[test]
    fn report_golden() {
        let r = report();
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + 11 + 1);
        assert_eq!(lines[1], "upwards/downwards,10,0.000000,20,0.000000");
        assert_eq!(lines[11], "off/on,0,,0,");
        assert_eq!(lines[12], "average,,0.450000,,0.450000");
        let text = r.to_text();
        assert_eq!(text.lines().count(), 1 + 11 + 1 + 1);
        assert!(text.contains("slowly/quickly"));
        assert!(text.lines().nth(12).unwrap().starts_with("average"));
        assert!(text.lines().nth(12).unwrap().contains("45.00%"));
    }
}
