pub mod blimp;
pub mod correlate;
pub mod metrics;
pub mod parse;
pub mod pipeline;
pub mod sample;
pub mod tokenizer;

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

/// Line iterator over a text file; IO errors end the stream after
/// being reported once by the caller via collect.
pub fn read_lines(path: &Path) -> anyhow::Result<impl Iterator<Item = std::io::Result<String>>> {
    let file =
        File::open(path).map_err(|e| anyhow::anyhow!("open {}: {e}", path.display()))?;
    Ok(BufReader::new(file).lines())
}

/// Eagerly collect a file's lines.
pub fn collect_lines(path: &Path) -> anyhow::Result<Vec<String>> {
    read_lines(path)?
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| anyhow::anyhow!("read {}: {e}", path.display()))
}

/// Reservoir-sample `n` lines from a file in one streaming pass; only
/// the sample is ever held in memory.
pub fn sample_file_lines(path: &Path, n: usize, seed: u64) -> anyhow::Result<Vec<String>> {
    let mut io_error: Option<std::io::Error> = None;
    let lines = read_lines(path)?.map_while(|line| match line {
        Ok(line) => Some(line),
        Err(e) => {
            io_error = Some(e);
            None
        }
    });
    let sample = typometrics::corpus::sample_lines(lines, n, seed);
    match io_error {
        Some(e) => Err(anyhow::anyhow!("read {}: {e}", path.display())),
        None => Ok(sample),
    }
}

/// Write a file, creating parent directories first.
pub fn write_output(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, contents)
        .map_err(|e| anyhow::anyhow!("write {}: {e}", path.display()))
}
