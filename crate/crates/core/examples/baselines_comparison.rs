//! A small benchmark of the density-ratio HMM against KDE and GMM emissions.

use drhmm::evaluation::{run_benchmark, BenchmarkConfig, Method};

fn main() -> drhmm::Result<()> {
    let config = BenchmarkConfig {
        sizes: vec![50, 250],
        runs: 3,
        test_length: 500,
        ..BenchmarkConfig::default()
    };
    let result = run_benchmark(&config)?;
    for failure in &result.failures {
        eprintln!("failed: {failure:?}");
    }
    println!("{:>8} {:>5} {:>10} {:>10} {:>12}", "method", "size", "smoothing", "filtering", "independent");
    for &size in &config.sizes {
        for method in Method::ALL {
            if let Some(cell) = result.cell(method, size) {
                println!(
                    "{:>8} {:>5} {:>10.3} {:>10.3} {:>12.3}",
                    method.name(),
                    size,
                    cell.smoothing.mean,
                    cell.filtering.mean,
                    cell.independent.mean
                );
            }
        }
    }
    Ok(())
}
