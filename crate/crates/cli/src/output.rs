//! JSON and histogram helpers shared by the commands.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

/// Fixed-width histogram over `[lo, hi]`; values outside are clamped into
/// the edge bins and NaNs are dropped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(values: impl IntoIterator<Item = f64>, lo: f64, hi: f64, bins: usize) -> Self {
        let mut counts = vec![0u64; bins];
        let scale = bins as f64 / (hi - lo);
        for v in values.into_iter().filter(|v| !v.is_nan()) {
            let k = ((v - lo) * scale).floor().clamp(0.0, (bins - 1) as f64) as usize;
            counts[k] += 1;
        }
        Histogram { lo, hi, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Pretty JSON to `path`, or to stdout when `path` is `None`.
pub fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?);
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            serde_json::to_writer_pretty(&mut lock, value)?;
            writeln!(lock)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_clamps_and_counts() {
        let h = Histogram::new([0.0, 0.05, 0.5, 1.0, 7.0, -1.0, f64::NAN], 0.0, 1.0, 10);
        assert_eq!(h.total(), 6);
        assert_eq!(h.counts[0], 3);
        assert_eq!(h.counts[5], 1);
        assert_eq!(h.counts[9], 2);
    }
}
