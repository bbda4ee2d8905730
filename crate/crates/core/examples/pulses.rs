//! Sequences the synthetic pulse dataset and prints how well the ordering
//! matches the generating order.
//!
//! cargo run --release -p sequencer-core --example pulses -- [seed] [drift]

use std::time::Instant;

use sequencer_core::synth::{generate_pulse_dataset, ordering_correlation, orderings_agreement, PulseDatasetSpec};
use sequencer_core::{run, run_approx, ApproxConfig, SequencerConfig64};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);
    let mut spec = PulseDatasetSpec { seed, ..PulseDatasetSpec::default() };
    if let Some(d) = args.next() {
        spec.drift = d.parse()?;
    }
    let data = generate_pulse_dataset::<f64>(&spec)?;
    let config = SequencerConfig64 { diagnostics: true, ..SequencerConfig64::default() };
    let t0 = Instant::now();
    let result = run(&data.objects, &config)?;
    println!("elapsed {:.2?}", t0.elapsed());

    let rho = ordering_correlation(&result.ordering, &data.true_rank);
    println!("spearman {rho:.4}  eta_combined {:.3}", result.eta_combined());
    let mut scales = result.scales.clone();
    scales.sort_by(|a, b| b.eta.total_cmp(&a.eta));
    for s in &scales {
        let r = ordering_correlation(s.ordering.as_deref().unwrap_or_default(), &data.true_rank);
        println!("{:>6} l={} eta={:8.3} rho={:+.3}", s.metric, s.scale, s.eta, r);
    }

    let t0 = Instant::now();
    let approx = run_approx(&data.objects, &ApproxConfig::new(100, 0.2, seed), &config)?;
    println!(
        "approx elapsed {:.2?}  spearman vs truth {:.4}  vs full {:.4}",
        t0.elapsed(),
        ordering_correlation(&approx.ordering, &data.true_rank),
        orderings_agreement(&approx.ordering, &result.ordering)
    );
    Ok(())
}
