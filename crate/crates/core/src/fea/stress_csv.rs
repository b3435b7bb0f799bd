use std::io::Write;
use std::path::Path;

use super::{FeaError, StressTensorField, SymTensor};

const HEADER: &str = "node,sxx,syy,szz,sxy,sxz,syz";

/// Parses a per-node stress table. Every node in `0..node_count` must
/// appear exactly once.
pub fn parse_stress_csv(text: &str, node_count: usize) -> Result<StressTensorField, FeaError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim().replace(' ', "") == HEADER => {}
        Some((i, _)) => {
            return Err(FeaError::Csv {
                line: i + 1,
                message: format!("expected header `{HEADER}`"),
            })
        }
        None => {
            return Err(FeaError::Csv {
                line: 1,
                message: "empty file".into(),
            })
        }
    }
    let mut tensors: Vec<Option<SymTensor>> = vec![None; node_count];
    for (i, line) in lines {
        let err = |message: String| FeaError::Csv { line: i + 1, message };
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 7 {
            return Err(err(format!("expected 7 columns, found {}", cols.len())));
        }
        let node: usize = cols[0]
            .parse()
            .map_err(|_| err(format!("bad node index {:?}", cols[0])))?;
        if node >= node_count {
            return Err(err(format!("node {node} out of range ({node_count} nodes)")));
        }
        let mut s = [0.0; 6];
        for k in 0..6 {
            s[k] = cols[k + 1]
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| err(format!("bad value {:?}", cols[k + 1])))?;
        }
        if tensors[node].replace(SymTensor(s)).is_some() {
            return Err(err(format!("node {node} listed twice")));
        }
    }
    let missing: Vec<usize> = (0..node_count).filter(|&v| tensors[v].is_none()).collect();
    if !missing.is_empty() {
        return Err(FeaError::Csv {
            line: 0,
            message: format!("{} nodes have no stress (first: {})", missing.len(), missing[0]),
        });
    }
    Ok(StressTensorField {
        tensors: tensors.into_iter().map(Option::unwrap).collect(),
    })
}

pub fn read_stress_csv(path: &Path, node_count: usize) -> Result<StressTensorField, FeaError> {
    parse_stress_csv(&std::fs::read_to_string(path)?, node_count)
}

pub fn write_stress_csv(field: &StressTensorField, path: &Path) -> Result<(), FeaError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{HEADER}")?;
    for (i, t) in field.tensors.iter().enumerate() {
        let [a, b, c, d, e, f] = t.0;
        writeln!(out, "{i},{a:e},{b:e},{c:e},{d:e},{e:e},{f:e}")?;
    }
    out.flush()?;
    Ok(())
}
