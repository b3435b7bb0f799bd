use std::io::Write;
use std::path::Path;

use super::Slice;
use crate::meshcore::io::write_obj;
use crate::meshcore::MeshError;

pub fn write_slice_obj(slice: &Slice, path: &Path) -> Result<(), MeshError> {
    write_obj(&slice.surface, path)
}

/// Per-vertex sidecar: position, normal, principal values, maximum
/// principal direction and critical flag (empty when unclassified).
pub fn write_slice_csv(slice: &Slice, path: &Path) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "vertex,x,y,z,nx,ny,nz,s1,s2,s3,d1x,d1y,d1z,critical")?;
    for (i, p) in slice.surface.vertices.iter().enumerate() {
        let n = slice.normals[i];
        let ps = &slice.principal[i];
        let d = ps.d1();
        let crit = match &slice.critical {
            Some(c) => (c[i] as u8).to_string(),
            None => String::new(),
        };
        writeln!(
            out,
            "{i},{},{},{},{},{},{},{:e},{:e},{:e},{},{},{},{crit}",
            p.x, p.y, p.z, n.x, n.y, n.z, ps.values[0], ps.values[1], ps.values[2], d.x, d.y, d.z
        )?;
    }
    out.flush()
}
