//! Round-trip a data matrix through CSV and the EIGS binary format, then
//! drive the command line on it.
//!
//! ```bash
//! cargo run --release --example file_formats
//! ```

use eigenshrink::io::{read_matrix, write_matrix};
use eigenshrink::random::gaussian_matrix;
use eigenshrink::{cli, seed};

fn main() -> eigenshrink::Result<()> {
    let dir = tempfile::tempdir()?;
    let x = gaussian_matrix(8, 20, &mut seed::rng(5));
    let csv = dir.path().join("x.csv");
    let bin = dir.path().join("x.bin");
    write_matrix(&csv, &x)?;
    write_matrix(&bin, &x)?;
    assert_eq!(read_matrix(&csv, false)?, x);
    assert_eq!(read_matrix(&bin, false)?, x);
    println!("csv {} bytes, eigs {} bytes", std::fs::metadata(&csv)?.len(), std::fs::metadata(&bin)?.len());

    let out = dir.path().join("estimate.json");
    let code = cli::run([
        "eigenshrink",
        "estimate",
        "--input",
        bin.to_str().unwrap(),
        "--method",
        "cv",
        "--grid-step",
        "0.1",
        "--out",
        out.to_str().unwrap(),
    ]);
    println!("exit {code}\n{}", std::fs::read_to_string(&out)?.lines().take(12).collect::<Vec<_>>().join("\n"));
    Ok(())
}
