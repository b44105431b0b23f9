//! Runs a verification suite programmatically and prints the report as CSV.

use realweight::app::{run_suite, Config, OutputFormat, Suite};

fn main() -> realweight::Result<()> {
    let config = Config { family: vec![12.0], depth: 2, ..Config::default() };
    let report = run_suite(Suite::Composition, &config)?;
    print!("{}", report.render(OutputFormat::Csv)?);
    println!("passed: {}", report.passed);
    Ok(())
}
