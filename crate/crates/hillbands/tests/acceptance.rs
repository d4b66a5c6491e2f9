//! One line per acceptance criterion; the test fails if any criterion does.
//! The lines go straight to the stdout handle so they show up in the
//! `cargo test` log even when the test passes.

use std::io::Write;

use hillbands::verify::{run, CRITERIA};

#[test]
fn acceptance() {
    let results = run(&CRITERIA);
    let mut out = std::io::stdout().lock();
    for r in &results {
        writeln!(out, "{r}").unwrap();
    }
    out.flush().unwrap();
    let failed: Vec<u32> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    assert!(failed.is_empty(), "criteria failed: {failed:?}");
}
