//! End-to-end run on a synthetic corpus whose adverb labels follow known rules.
//!
//! ```text
//! cargo run --example planted_pipeline -- [clips] [seed]
//! ```

use std::time::Instant;

use adverb_reason::pipeline::{run_pipeline, PipelineConfig};
use adverb_reason::synthetic;

fn main() -> adverb_reason::Result<()> {
    let mut args = std::env::args().skip(1);
    let clips: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(200);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);

    let root = tempfile::tempdir().expect("temp dir");
    let obs = root.path().join("obs");
    synthetic::planted(clips, seed).write(&obs)?;

    let start = Instant::now();
    let outcome = run_pipeline(&PipelineConfig::new(&obs, root.path().join("work"), seed))?;
    print!("{}", outcome.report.to_text());
    for rules in &outcome.rules {
        println!("{:<28} {:>5} rules", rules.pair.to_string(), rules.len());
    }
    println!("{} clips in {:.2?}", outcome.clips, start.elapsed());
    for (pair, _) in synthetic::planted_pairs() {
        let score = outcome.report.scores.iter().find(|s| s.pair == pair).expect("planted pair scored");
        println!("planted {pair}: {:.1}%", 100.0 * score.clip_accuracy().unwrap_or(0.0));
    }
    Ok(())
}
