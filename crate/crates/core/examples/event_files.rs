//! Writes a synthetic sensor stream as CSV and as the binary format, reads
//! both back and checks they decode to the same events.
//!
//! `cargo run --example event_files -- DIR [COUNT]` keeps the files in DIR.

use evsoc::io::{read_events, synthetic_stream, write_events, EventFormat, ReadOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dir = args.next().map(std::path::PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let count: usize = args.next().map(|c| c.parse()).transpose()?.unwrap_or(10_000);
    std::fs::create_dir_all(&dir)?;

    let events = synthetic_stream(42, count, 128, 128, 10);
    let csv = dir.join("stream.csv");
    let bin = dir.join("stream.spke");
    write_events(&csv, EventFormat::Csv, &events, 128, 128)?;
    write_events(&bin, EventFormat::Binary, &events, 128, 128)?;

    let opts = ReadOptions::default();
    let from_csv = read_events(&csv, EventFormat::Csv, &opts)?;
    let from_bin = read_events(&bin, EventFormat::Binary, &opts)?;
    assert_eq!(from_csv, events);
    assert_eq!(from_bin, events);

    let span = events.last().map_or(0, |e| e.t);
    println!("{} events over {} us", events.len(), span);
    println!("{}: {} bytes", csv.display(), std::fs::metadata(&csv)?.len());
    println!("{}: {} bytes", bin.display(), std::fs::metadata(&bin)?.len());
    println!("csv and binary decode identically");
    Ok(())
}
