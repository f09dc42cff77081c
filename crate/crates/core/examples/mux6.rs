//! Learns the 6-bit multiplexer with one system and prints its accuracy
//! curve and a few of the final rules.
//!
//! cargo run --release --example mux6 -- [seed]

use cfxcs::coordinator::{run_multitask, MetricsParams, MultitaskConfig};
use cfxcs::xcs::XcsParams;

fn main() -> cfxcs::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let bundle = run_multitask(&MultitaskConfig {
        tasks: vec!["mux:6".parse()?],
        iterations: 10_000,
        seed,
        xcs: XcsParams {
            population_size: 500,
            ..XcsParams::default()
        },
        features: Default::default(),
        coordinator: Default::default(),
        metrics: MetricsParams {
            sample_every: 1000,
            ..MetricsParams::default()
        },
    })?;
    for s in &bundle.accuracy {
        println!("{:>6} trials  accuracy {:.3}  rules {}", s.trials, s.accuracy, s.macro_classifiers);
    }
    let mut rules = bundle.populations[0].clone();
    rules.sort_by(|a, b| b.numerosity.cmp(&a.numerosity));
    println!("\nmost numerous rules:");
    for r in rules.iter().take(8) {
        println!("{:>3}x  {} -> {}  (prediction {:.0}, error {:.1})", r.numerosity, r.condition, r.action, r.prediction, r.error);
    }
    Ok(())
}
