//! Prompt to target boxes.
//!
//! cargo run --example plan_layout -- "a cat between a dog and a horse"

use layoutcal::layout::{layout_to_json, parse_layout, LayoutConfig, RelationVocabulary};

fn main() {
    let prompts: Vec<String> = match std::env::args().nth(1) {
        Some(p) => vec![p],
        None => [
            "a dog to the left of a cat",
            "a flower on the left and a bus on the right",
            "a cat between a dog and a horse",
            "a book on the upper-left and a tree on the upper-left",
            "a dog on",
        ]
        .map(String::from)
        .to_vec(),
    };
    let vocab = RelationVocabulary::from_env().expect("vocabulary override");
    for prompt in prompts {
        match parse_layout(&prompt, &vocab, &LayoutConfig::default()) {
            Ok(layout) => {
                println!("{prompt}");
                for (o, b) in layout.objects.iter().zip(&layout.boxes) {
                    println!("  {:<12} {b}", o.phrase);
                }
                println!("  {}", layout_to_json(&layout));
            }
            Err(e) => println!("{prompt}\n  {} ({})", e, e.kind()),
        }
    }
}
