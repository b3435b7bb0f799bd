use std::io::Write;
use std::path::Path;

use super::{CriticalMask, TangentFlow};

/// Per-vertex debug table with one vector triple per given flow stage.
pub fn write_flow_csv(flows: &[&TangentFlow], mask: Option<&CriticalMask>, path: &Path) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut header = String::from("vertex");
    for f in flows {
        let tag = match f.stage {
            super::FlowStage::ProjectedOrthogonal => "orth",
            super::FlowStage::Rectified => "rect",
            super::FlowStage::Preprocessed => "pre",
        };
        header.push_str(&format!(",{tag}_x,{tag}_y,{tag}_z,{tag}_valid"));
    }
    header.push_str(",critical");
    writeln!(out, "{header}")?;
    let n = flows.first().map_or(0, |f| f.len());
    for v in 0..n {
        write!(out, "{v}")?;
        for f in flows {
            let x = f.vectors[v];
            write!(out, ",{},{},{},{}", x.x, x.y, x.z, f.valid[v] as u8)?;
        }
        match mask {
            Some(m) => writeln!(out, ",{}", m.critical[v] as u8)?,
            None => writeln!(out, ",")?,
        }
    }
    out.flush()
}
