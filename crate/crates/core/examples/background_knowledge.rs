//! Background facts for the default bucket scheme and a custom one.

use adverb_reason::asp::generate_background;
use adverb_reason::behaviour::BucketScheme;

fn main() -> adverb_reason::Result<()> {
    let default = generate_background(&BucketScheme::default());
    println!("default scheme: {} facts", default.len());
    for f in default.iter().filter(|f| f.to_string().starts_with("clockwise(n,")) {
        println!("  {f}");
    }

    let coarse = BucketScheme::parse("area = tiny:0.05, modest:0.3, huge\nmovement = still:2, roaming\n")?;
    println!("coarse scheme: {} facts", generate_background(&coarse).len());
    for f in generate_background(&coarse).iter().filter(|f| f.to_string().starts_with("less_than(")).take(6) {
        println!("  {f}");
    }
    Ok(())
}
