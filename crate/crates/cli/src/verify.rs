//! The standalone verification suite: a pass/fail table over every campaign.

use std::io::Write;

use acl_core::verify::{run_all, CheckRow, GradientFault, VerifySizes};

use crate::CliError;

/// Runs the campaigns, prints the table to `out` and returns the rows with
/// the exit code (0 iff every row passes).
pub fn cmd_verify<W: Write>(
    seed: u64,
    sizes: &VerifySizes,
    fault: GradientFault,
    out: &mut W,
) -> Result<(Vec<CheckRow>, i32), CliError> {
    let rows = run_all(seed, sizes, fault)?;
    writeln!(out, "{:<34} {:>7} {:>12} {:>10}  result", "check", "cases", "worst", "limit")?;
    for r in &rows {
        let result = match (r.pass, r.is_vacuous()) {
            (true, true) => "PASS (vacuous)",
            (true, false) => "PASS",
            (false, _) => "FAIL",
        };
        writeln!(out, "{:<34} {:>7} {:>12.3e} {:>10.1e}  {result}", r.name, r.cases, r.worst, r.limit)?;
    }
    if rows.iter().any(CheckRow::is_vacuous) {
        writeln!(out, "warning: some campaigns ran zero cases and passed vacuously")?;
    }
    for r in rows.iter().filter(|r| !r.pass) {
        writeln!(out, "failure in `{}` (seed {seed}): {}", r.name, r.detail.as_deref().unwrap_or("limit exceeded"))?;
    }
    let code = if rows.iter().all(|r| r.pass) {
        crate::EXIT_OK
    } else {
        crate::EXIT_RUN_FAILURE
    };
    Ok((rows, code))
}

/// Campaign sizes with every count set to `n`.
pub fn uniform_sizes(n: usize) -> VerifySizes {
    VerifySizes {
        lemma1_pairs: n,
        lemma2_sets: n,
        lemma2_probes: n,
        markov_draws: n,
        stability_draws: n,
        gradient_probes: n,
    }
}
