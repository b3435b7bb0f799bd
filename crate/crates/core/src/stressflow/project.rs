use super::{FlowStage, TangentFlow};
use crate::slicing::Slice;

/// Projects the maximum principal direction `f` onto each vertex's tangent
/// plane (`u = f − (f·n)n`) and turns it a quarter turn about the normal
/// (`f⊥ = u × n / ‖u × n‖`). Vertices with `‖u‖ ≤ 1e-8‖f‖` are invalid.
pub fn project_orthogonal(slice: &Slice) -> TangentFlow {
    let mut vectors = Vec::with_capacity(slice.vertex_count());
    let mut valid = Vec::with_capacity(slice.vertex_count());
    for (p, n) in slice.principal.iter().zip(&slice.normals) {
        let f = p.d1();
        let u = f - n * (f.dot(n) / n.dot(n));
        let c = u.cross(n);
        if u.norm() <= 1e-8 * f.norm() || !(c.norm() > 0.0) {
            vectors.push(crate::meshcore::Vec3::zeros());
            valid.push(false);
        } else {
            vectors.push(c / c.norm());
            valid.push(true);
        }
    }
    TangentFlow {
        stage: FlowStage::ProjectedOrthogonal,
        vectors,
        valid,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fea::SymTensor;
    use crate::meshcore::{shapes, Vec3};

    fn slice_with(f: Vec3) -> Slice {
        let m = shapes::planar_grid(1.0, 1.0, 1, 1);
        let t = SymTensor::from_matrix(&(f * f.transpose()));
        Slice::from_surface(m, vec![t; 4], 0, 0.0).unwrap()
    }

    #[test]
    fn quarter_turn() {
        let flow = project_orthogonal(&slice_with(Vec3::x()));
        assert!(flow.valid.iter().all(|&v| v));
        assert!((flow.vectors[0] - Vec3::new(0.0, -1.0, 0.0)).norm() < 1e-15);
        let flow = project_orthogonal(&slice_with(Vec3::new(1.0, 0.0, 1.0).normalize()));
        assert!((flow.vectors[0] - Vec3::new(0.0, -1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn normal_stress_is_invalid() {
        let flow = project_orthogonal(&slice_with(Vec3::z()));
        assert!(flow.valid.iter().all(|&v| !v));
    }
}
