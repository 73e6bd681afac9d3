use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use sha2::{Digest, Sha256};
use specmargin_core::PointSet;

/// Input bytes plus their content hash.
pub struct Input {
    pub bytes: Vec<u8>,
    pub digest: String,
}

pub fn read_input(path: &Path) -> Result<Input> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let digest = format!("sha256:{:x}", Sha256::digest(&bytes));
    Ok(Input { bytes, digest })
}

/// Parses a headerless CSV of coordinates, one point per row.
pub fn parse_points(bytes: &[u8]) -> Result<PointSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut dim = None;
    let mut coords = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            anyhow!("line {line}: {e}")
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let d = *dim.get_or_insert(record.len());
        if record.len() != d {
            bail!("line {line}: expected {d} fields, found {}", record.len());
        }
        for field in record.iter() {
            let v: f64 = field.parse().map_err(|_| anyhow!("line {line}: cannot parse {field:?} as a number"))?;
            if !v.is_finite() {
                bail!("line {line}: non-finite coordinate {field:?}");
            }
            coords.push(v);
        }
    }
    let d = dim.ok_or_else(|| anyhow!("input contains no points"))?;
    Ok(PointSet::new(d, coords)?)
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<String> {
    let path = dir.join(name);
    let mut f = fs::File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
    f.write_all(contents.as_bytes())?;
    Ok(name.to_string())
}

/// `index,label` rows; `None` is written as `-1`.
pub fn labels_csv(labels: impl IntoIterator<Item = Option<usize>>) -> String {
    let mut out = String::from("index,label\n");
    for (i, l) in labels.into_iter().enumerate() {
        match l {
            Some(l) => out.push_str(&format!("{i},{l}\n")),
            None => out.push_str(&format!("{i},-1\n")),
        }
    }
    out
}

/// `start:stop:count`, log-spaced and descending.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        bail!("grid must have the form start:stop:count, got {spec:?}");
    }
    let start: f64 = parts[0].trim().parse().map_err(|_| anyhow!("bad grid start {:?}", parts[0]))?;
    let stop: f64 = parts[1].trim().parse().map_err(|_| anyhow!("bad grid stop {:?}", parts[1]))?;
    let count: usize = parts[2].trim().parse().map_err(|_| anyhow!("bad grid count {:?}", parts[2]))?;
    if !(start.is_finite() && start > 0.0 && stop.is_finite() && stop > 0.0) {
        bail!("grid endpoints must be positive, got {start} and {stop}");
    }
    if count == 0 {
        bail!("grid count must be at least 1");
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    if stop >= start {
        bail!("grid must descend: stop {stop} is not below start {start}");
    }
    let (a, b) = (start.ln(), stop.ln());
    Ok((0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_points_and_reports_lines() {
        let p = parse_points(b"0,1\n2,3\n\n4,5\n").unwrap();
        assert_eq!((p.len(), p.dim()), (3, 2));
        let e = parse_points(b"0,1\n2,x\n").unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
        let e = parse_points(b"0,1\n2,3\n4\n").unwrap_err().to_string();
        assert!(e.contains("line 3"), "{e}");
    }

    #[test]
    fn grid_endpoints() {
        let g = parse_grid("1:0.001:4").unwrap();
        assert_eq!(g.len(), 4);
        assert!((g[1] - 0.1).abs() < 1e-12 && (g[3] - 0.001).abs() < 1e-15);
        assert_eq!(parse_grid("0.5:0.1:1").unwrap(), vec![0.5]);
        assert!(parse_grid("0.1:1:5").is_err());
        assert!(parse_grid("0:1:5").is_err());
    }

    #[test]
    fn float_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 6.02214076e23] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
