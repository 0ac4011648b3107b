//! Write a synthetic observation directory for the command-line tool.
//!
//! ```text
//! cargo run --example synthetic_fixture -- out/obs planted 200 7
//! adverb-reason pipeline --obs-dir out/obs --work-dir out/work --seed 7
//! ```

use adverb_reason::synthetic;

fn main() -> adverb_reason::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(dir) = args.first() else {
        eprintln!("usage: synthetic_fixture <dir> [planted|inseparable] [clips] [seed]");
        std::process::exit(2);
    };
    let kind = args.get(1).map_or("planted", String::as_str);
    let clips = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(200);
    let seed = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(7);
    let fixture = match kind {
        "planted" => synthetic::planted(clips, seed),
        "inseparable" => synthetic::inseparable(clips, seed),
        other => {
            eprintln!("unknown fixture `{other}`");
            std::process::exit(2);
        }
    };
    fixture.write(dir)?;
    println!("{} clips written to {dir}", fixture.clips.len());
    Ok(())
}
