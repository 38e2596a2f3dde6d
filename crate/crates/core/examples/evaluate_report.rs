//! Scores All-mode and Oracle-mode removal on a small dataset and prints the
//! per-effect-count table, then round-trips the report through JSON.
//!
//! `cargo run --release --example evaluate_report -- [per_bucket]`

use rayon::prelude::*;
use remfx::dataset::{generate_example, ChainPlan, Split};
use remfx::evaluation::{evaluate_items, render_report, EvalItem, EvalReport, ReportFormat};
use remfx::orchestrator::{BackendRegistry, OrchestratorMode, Ordering};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let per_bucket: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(4);
    let items: Vec<EvalItem> = (0..6 * per_bucket)
        .into_par_iter()
        .map(|j| {
            let ex = generate_example(3, Split::Test, j, ChainPlan::Fixed((j % 6) as usize), 96_000)?;
            Ok(EvalItem::from_example(j, &ex))
        })
        .collect::<remfx::Result<_>>()?;

    let registry = BackendRegistry::oracle_where_possible();
    let oracle = evaluate_items(&items, &OrchestratorMode::oracle(Ordering::GroundTruth), &registry, None);
    print!("{}", render_report(&oracle, ReportFormat::Text)?);
    println!();
    let all = evaluate_items(&items, &OrchestratorMode::all(3), &BackendRegistry::all_identity(), None);
    print!("{}", render_report(&all, ReportFormat::Text)?);

    let json = oracle.to_json()?;
    assert_eq!(EvalReport::from_json(&json)?, oracle);
    println!("\nJSON report: {} bytes", json.len());
    Ok(())
}
