//! Indicator rules for a four-object toy batch under each language bias.
//!
//! The `strange` objects move at magnitudes 7 and 18, the others at 3 and 25.

use adverb_reason::asp::Bias;
use adverb_reason::behaviour::{BehaviourStep, BucketScheme, ObjectBehaviour, Placement, Sector, Tenths};
use adverb_reason::induce::{induce_for_bias, Batch};
use adverb_reason::pair::Pair;

fn object(label: &str, magnitude: f64, x: f64, y: f64) -> ObjectBehaviour {
    ObjectBehaviour {
        clip_id: format!("toy_{label}"),
        object_label: label.into(),
        steps: vec![BehaviourStep {
            time_step: 1,
            magnitude: Tenths::from_f64(magnitude),
            sector: Sector::E,
            area: "small".into(),
            movement: "small".into(),
            placement: Placement::of_point(x, y),
        }],
    }
}

fn main() -> adverb_reason::Result<()> {
    let batch = Batch {
        pair: Pair::new("strange", "not_strange")?,
        positives: vec![object("person", 7.0, 0.3, 0.3), object("cat", 18.0, 0.6, 0.6)],
        negatives: vec![object("car", 3.0, 0.3, 0.6), object("plane", 25.0, 0.6, 0.3)],
        seed: 0,
    };
    let scheme = BucketScheme::default();
    for bias in Bias::ALL {
        let rules = induce_for_bias(&batch, bias, &scheme);
        println!("{bias}: {} rules", rules.len());
        for r in rules {
            println!("  {r}");
        }
    }
    Ok(())
}
