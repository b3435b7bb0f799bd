//! Named subsets of a tet mesh boundary, written as short strings:
//! `xmin`, `xmax`, `ymin`, `ymax`, `zmin`, `zmax`, `marker:N` or
//! `nodes:i,j,k`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::TetMesh;

/// Relative tolerance (fraction of the bounding-box diagonal) for the
/// axis-extreme selectors.
const EXTREME_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Selector {
    /// Boundary nodes on the minimum (`max = false`) or maximum plane of an axis.
    Extreme { axis: usize, max: bool },
    /// Nodes carrying the given marker.
    Marker(i32),
    /// Explicit node indices.
    Nodes(Vec<usize>),
}

impl FromStr for Selector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("marker:") {
            return rest
                .trim()
                .parse()
                .map(Selector::Marker)
                .map_err(|_| format!("bad marker in selector {s:?}"));
        }
        if let Some(rest) = s.strip_prefix("nodes:") {
            let nodes = rest
                .split(',')
                .map(|t| t.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| format!("bad node list in selector {s:?}"))?;
            if nodes.is_empty() {
                return Err("empty node list".into());
            }
            return Ok(Selector::Nodes(nodes));
        }
        let axis = match s.chars().next() {
            Some('x') => 0,
            Some('y') => 1,
            Some('z') => 2,
            _ => return Err(format!("unknown selector {s:?}")),
        };
        match &s[1..] {
            "min" => Ok(Selector::Extreme { axis, max: false }),
            "max" => Ok(Selector::Extreme { axis, max: true }),
            _ => Err(format!("unknown selector {s:?}")),
        }
    }
}

impl TryFrom<String> for Selector {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Selector> for String {
    fn from(s: Selector) -> String {
        s.to_string()
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selector::Extreme { axis, max } => {
                write!(f, "{}{}", ['x', 'y', 'z'][*axis], if *max { "max" } else { "min" })
            }
            Selector::Marker(m) => write!(f, "marker:{m}"),
            Selector::Nodes(n) => {
                let parts: Vec<String> = n.iter().map(|v| v.to_string()).collect();
                write!(f, "nodes:{}", parts.join(","))
            }
        }
    }
}

impl Selector {
    /// Per-node membership mask. Out-of-range explicit nodes are ignored
    /// here; [`Selector::validate`] reports them.
    pub fn mask(&self, mesh: &TetMesh) -> Vec<bool> {
        let n = mesh.vertices.len();
        match self {
            Selector::Extreme { axis, max } => {
                let (lo, hi) = mesh.bounding_box();
                let tol = EXTREME_TOL * (hi - lo).norm();
                let target = if *max { hi[*axis] } else { lo[*axis] };
                let on = mesh.boundary_nodes();
                (0..n)
                    .map(|v| on[v] && (mesh.vertices[v][*axis] - target).abs() <= tol)
                    .collect()
            }
            Selector::Marker(m) => match &mesh.markers {
                Some(mk) => mk.iter().map(|k| k == m).collect(),
                None => vec![false; n],
            },
            Selector::Nodes(list) => {
                let mut mask = vec![false; n];
                for &v in list {
                    if v < n {
                        mask[v] = true;
                    }
                }
                mask
            }
        }
    }

    /// Checks that the selector can match anything on `mesh`.
    pub fn validate(&self, mesh: &TetMesh) -> Result<(), String> {
        match self {
            Selector::Marker(_) if mesh.markers.is_none() => {
                return Err(format!("selector {self} needs node markers, but the mesh has none"))
            }
            Selector::Nodes(list) => {
                if let Some(v) = list.iter().find(|&&v| v >= mesh.vertices.len()) {
                    return Err(format!(
                        "selector {self} names node {v}, but the mesh has {} nodes",
                        mesh.vertices.len()
                    ));
                }
            }
            _ => {}
        }
        if !self.mask(mesh).iter().any(|&b| b) {
            return Err(format!("selector {self} matches no nodes"));
        }
        Ok(())
    }

    /// Sorted matching node indices.
    pub fn nodes(&self, mesh: &TetMesh) -> Vec<usize> {
        self.mask(mesh)
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    /// Boundary faces whose three nodes all match.
    pub fn faces(&self, mesh: &TetMesh) -> Vec<usize> {
        let mask = self.mask(mesh);
        mesh.boundary_faces
            .iter()
            .enumerate()
            .filter_map(|(i, f)| f.iter().all(|&v| mask[v]).then_some(i))
            .collect()
    }
}
