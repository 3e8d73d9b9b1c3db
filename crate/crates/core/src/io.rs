//! Output helpers shared by the CSV writers.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Format with `sig` significant digits like C's `%g`: trailing zeros are
/// dropped, and very large or small magnitudes use scientific notation.
pub fn fmt_sig(value: f64, sig: usize) -> String {
    if value == 0.0 || !value.is_finite() {
        return format!("{value}");
    }
    let sig = sig.max(1);
    // Round first so that e.g. 999999.7 picks the exponent of 1e6.
    let rounded: f64 = format!("{:.*e}", sig - 1, value).parse().unwrap_or(value);
    let exponent = rounded.abs().log10().floor() as i32;
    if (-5..sig as i32).contains(&exponent) {
        let decimals = (sig as i32 - 1 - exponent).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, value))
    } else {
        let s = format!("{:.*e}", sig - 1, value);
        let (mantissa, exp) = s.split_once('e').expect("scientific format");
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Write `path` through a temporary sibling that is renamed into place
/// once `body` succeeds, so readers never see a partial file.
pub fn write_atomic<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(0.962041, 6), "0.962041");
        assert_eq!(fmt_sig(264.3117, 6), "264.312");
        assert_eq!(fmt_sig(-371.04, 3), "-371");
        assert_eq!(fmt_sig(0.0, 6), "0");
        assert_eq!(fmt_sig(25.0, 6), "25");
        assert_eq!(fmt_sig(0.8, 6), "0.8");
        assert_eq!(fmt_sig(1.5e-9, 3), "1.5e-9");
        assert_eq!(fmt_sig(0.000226503, 6), "0.000226503");
        assert_eq!(fmt_sig(1234567.0, 6), "1.23457e6");
        assert_eq!(fmt_sig(999999.7, 6), "1e6");
    }

    #[test]
    fn atomic_write_replaces_and_cleans_up() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, |w| Ok(w.write_all(b"a\n")?)).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "a\n");
        let err = write_atomic(&path, |w| {
            w.write_all(b"partial")?;
            Err(Error::invalid("x", "boom"))
        });
        assert!(err.is_err());
        assert_eq!(fs::read_to_string(&path).unwrap(), "a\n");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
