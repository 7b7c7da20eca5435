use anyhow::{bail, Context, Result};

/// Parses `lo:hi:step` (inclusive of `hi` up to rounding) or a single value.
/// `lo > hi` gives an empty grid.
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |p: &str| -> Result<f64> {
        p.trim()
            .parse::<f64>()
            .with_context(|| format!("invalid number {p:?} in range {s:?}"))
    };
    match parts.as_slice() {
        [x] => Ok(vec![num(x)?]),
        [lo, hi, step] => {
            let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
            if !(step > 0.0) {
                bail!("range step must be positive, got {step}");
            }
            if lo > hi {
                return Ok(Vec::new());
            }
            let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            // round to the step's precision so printed grids stay clean
            Ok((0..count).map(|k| round12(lo + k as f64 * step)).collect())
        }
        _ => bail!("expected lo:hi:step or a single value, got {s:?}"),
    }
}

fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// Parses `lo:hi`.
pub fn parse_bracket(s: &str) -> Result<(f64, f64)> {
    let (lo, hi) = s
        .split_once(':')
        .with_context(|| format!("expected lo:hi, got {s:?}"))?;
    Ok((lo.trim().parse()?, hi.trim().parse()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("3.5:4.1:0.1").unwrap().len(), 7);
        assert_eq!(parse_range("3.5:4.1:0.1").unwrap()[6], 4.1);
        assert_eq!(parse_range("4.2").unwrap(), vec![4.2]);
        assert!(parse_range("4:3:0.1").unwrap().is_empty());
        assert!(parse_range("1:2:0").is_err());
        assert!(parse_range("1:2").is_err());
        assert_eq!(parse_bracket("4.1:4.4").unwrap(), (4.1, 4.4));
    }
}
