//! Flat corpus and masked corpus for a synthetic clip set.
//!
//! ```text
//! cargo run --example mlm_corpus -- [clips] [seed]
//! ```

use adverb_reason::behaviour::{BucketScheme, DEFAULT_WINDOW};
use adverb_reason::flat::{corpus_text, flatten, mask_values, masked_corpus_text, Role};
use adverb_reason::pipeline::extract_dir;
use adverb_reason::synthetic;

fn main() -> adverb_reason::Result<()> {
    let mut args = std::env::args().skip(1);
    let clips: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(4);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);

    let dir = tempfile::tempdir().expect("temp dir");
    synthetic::planted(clips, seed).write(dir.path())?;
    let extracted = extract_dir(dir.path(), &BucketScheme::default(), DEFAULT_WINDOW)?;
    let flat: Vec<_> = extracted.iter().flat_map(|c| c.behaviours.iter().map(flatten)).collect();
    let masked = flat
        .iter()
        .map(|f| mask_values(f, 0.2, seed))
        .collect::<adverb_reason::Result<Vec<_>>>()?;

    print!("{}", corpus_text(&flat));
    print!("{}", masked_corpus_text(&masked));
    let values: usize = flat.iter().map(|f| f.roles.iter().filter(|r| **r == Role::Value).count()).sum();
    let hidden: usize = masked.iter().map(|m| m.targets.len()).sum();
    eprintln!("{hidden} of {values} value words masked");
    Ok(())
}
