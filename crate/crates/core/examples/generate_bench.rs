//! Writes the reference-shaped benchmark and checks the parser against it.
//!
//! cargo run --example generate_bench -- [seed]

use layoutcal::bench::{generate_benchmark, write_jsonl, BenchConfig};
use layoutcal::layout::{parse_layout, LayoutConfig, RelationVocabulary};

fn main() -> layoutcal::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let prompts = generate_benchmark(203, &BenchConfig::reference(seed))?;
    let vocab = RelationVocabulary::default();
    let mut recovered = 0;
    for p in &prompts {
        let layout = parse_layout(&p.text, &vocab, &LayoutConfig::default())?;
        let phrases: Vec<&str> = layout.objects.iter().map(|o| o.phrase.as_str()).collect();
        let terms: Vec<_> = (0..layout.objects.len()).filter_map(|i| layout.relations.superlative_of(i)).collect();
        if phrases == p.objects && terms == p.superlatives {
            recovered += 1;
        }
    }
    eprintln!("{} prompts, {recovered} parsed back to their gold relations", prompts.len());
    write_jsonl(&prompts[..5], std::io::stdout().lock())?;
    Ok(())
}
