//! Structural similarity in Ångström: optimal rigid superposition (Kabsch),
//! coordinate RMSD after superposition, and distance RMSD.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::model::{ModelKind, Structure};

pub type Point = [f64; 3];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("point sets differ in size ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("cannot superpose empty point sets")]
    Empty,
    #[error("cannot compare a {0} structure with a {1} structure")]
    ModelMismatch(ModelKind, ModelKind),
}

/// A proper rigid motion `p ↦ R p + t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidMotion {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidMotion {
    pub fn identity() -> Self {
        RigidMotion { rotation: Matrix3::identity(), translation: Vector3::zeros() }
    }

    pub fn apply(&self, p: Point) -> Point {
        let q = self.rotation * Vector3::from(p) + self.translation;
        [q.x, q.y, q.z]
    }

    /// Largest entry of `RᵀR - I`.
    pub fn orthonormality_error(&self) -> f64 {
        (self.rotation.transpose() * self.rotation - Matrix3::identity()).abs().max()
    }

    pub fn determinant(&self) -> f64 {
        self.rotation.determinant()
    }
}

fn centroid(points: &[Point]) -> Vector3<f64> {
    let sum = points.iter().fold(Vector3::zeros(), |acc, p| acc + Vector3::from(*p));
    sum / points.len() as f64
}

/// The rotation and translation minimizing `Σ |R pᵢ + t − qᵢ|²` over proper
/// rotations.
pub fn kabsch(p: &[Point], q: &[Point]) -> Result<RigidMotion, MetricError> {
    if p.len() != q.len() {
        return Err(MetricError::LengthMismatch(p.len(), q.len()));
    }
    if p.is_empty() {
        return Err(MetricError::Empty);
    }
    let (cp, cq) = (centroid(p), centroid(q));
    let mut h = Matrix3::zeros();
    for (a, b) in p.iter().zip(q) {
        h += (Vector3::from(*a) - cp) * (Vector3::from(*b) - cq).transpose();
    }
    let svd = h.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    let v = v_t.transpose();
    // flip the direction of the smallest singular value if needed
    let d = (v * u.transpose()).determinant().signum();
    let (smallest, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("three singular values");
    let mut diag = Vector3::repeat(1.0);
    if d < 0.0 {
        diag[smallest] = -1.0;
    }
    let rotation = v * Matrix3::from_diagonal(&diag) * u.transpose();
    let translation = cq - rotation * cp;
    Ok(RigidMotion { rotation, translation })
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Root mean square deviation of point sets after superposing `p` onto `q`.
pub fn superposed_rmsd(p: &[Point], q: &[Point]) -> Result<f64, MetricError> {
    let m = kabsch(p, q)?;
    let sum: f64 = p.iter().zip(q).map(|(a, b)| dist(m.apply(*a), *b).powi(2)).sum();
    Ok((sum / p.len() as f64).sqrt())
}

struct AngstromView {
    backbone: Vec<Point>,
    sidechain: Option<Vec<Point>>,
}

fn view(s: &Structure) -> AngstromView {
    let lattice = s.lattice();
    let conv = |v: &[crate::lattice::Coord]| v.iter().map(|&c| lattice.to_angstrom(c)).collect::<Vec<_>>();
    match s {
        Structure::Backbone(b) => AngstromView { backbone: conv(b.coords()), sidechain: None },
        Structure::SideChain(sc) => AngstromView { backbone: conv(sc.backbone()), sidechain: Some(conv(sc.sidechain())) },
    }
}

fn compatible(a: &Structure, b: &Structure) -> Result<(), MetricError> {
    if a.kind() != b.kind() {
        return Err(MetricError::ModelMismatch(a.kind(), b.kind()));
    }
    if a.len() != b.len() {
        return Err(MetricError::LengthMismatch(a.len(), b.len()));
    }
    Ok(())
}

/// Coordinate RMSD in Å after superposing `a` onto `b` over all represented
/// points (backbone and side chains jointly in the side-chain model).
pub fn crmsd(a: &Structure, b: &Structure) -> Result<f64, MetricError> {
    compatible(a, b)?;
    let (va, vb) = (view(a), view(b));
    crmsd_points(&va.backbone, va.sidechain.as_deref(), &vb.backbone, vb.sidechain.as_deref())
}

/// [`crmsd`] on explicit Å coordinates, which need not lie on a lattice.
pub fn crmsd_points(
    a_backbone: &[Point],
    a_sidechain: Option<&[Point]>,
    b_backbone: &[Point],
    b_sidechain: Option<&[Point]>,
) -> Result<f64, MetricError> {
    check_points(a_backbone, a_sidechain, b_backbone, b_sidechain)?;
    let mut p = a_backbone.to_vec();
    let mut q = b_backbone.to_vec();
    p.extend(a_sidechain.into_iter().flatten());
    q.extend(b_sidechain.into_iter().flatten());
    superposed_rmsd(&p, &q)
}

/// Distance RMSD in Å:
/// `sqrt( (Σ_{i<j} (Δ bb_ij² + Δ sc_ij²) + Σ_i Δ bs_i²) / n² )` where the
/// Δ terms compare intra-structure distances; the backbone model keeps only
/// the backbone pair terms.
pub fn drmsd(a: &Structure, b: &Structure) -> Result<f64, MetricError> {
    compatible(a, b)?;
    let (va, vb) = (view(a), view(b));
    drmsd_points(&va.backbone, va.sidechain.as_deref(), &vb.backbone, vb.sidechain.as_deref())
}

/// [`drmsd`] on explicit Å coordinates.
pub fn drmsd_points(
    a_backbone: &[Point],
    a_sidechain: Option<&[Point]>,
    b_backbone: &[Point],
    b_sidechain: Option<&[Point]>,
) -> Result<f64, MetricError> {
    check_points(a_backbone, a_sidechain, b_backbone, b_sidechain)?;
    let n = a_backbone.len();
    let pair_sum = |x: &[Point], y: &[Point]| {
        let mut s = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                s += (dist(x[i], x[j]) - dist(y[i], y[j])).powi(2);
            }
        }
        s
    };
    let mut sum = pair_sum(a_backbone, b_backbone);
    if let (Some(sa), Some(sb)) = (a_sidechain, b_sidechain) {
        sum += pair_sum(sa, sb);
        for i in 0..n {
            sum += (dist(a_backbone[i], sa[i]) - dist(b_backbone[i], sb[i])).powi(2);
        }
    }
    Ok((sum / (n * n) as f64).sqrt())
}

fn check_points(
    a_backbone: &[Point],
    a_sidechain: Option<&[Point]>,
    b_backbone: &[Point],
    b_sidechain: Option<&[Point]>,
) -> Result<(), MetricError> {
    let kind = |s: Option<&[Point]>| if s.is_some() { ModelKind::SideChain } else { ModelKind::Backbone };
    if a_sidechain.is_some() != b_sidechain.is_some() {
        return Err(MetricError::ModelMismatch(kind(a_sidechain), kind(b_sidechain)));
    }
    let n = a_backbone.len();
    for len in [b_backbone.len(), a_sidechain.map_or(n, <[_]>::len), b_sidechain.map_or(n, <[_]>::len)] {
        if len != n {
            return Err(MetricError::LengthMismatch(n, len));
        }
    }
    if n == 0 {
        return Err(MetricError::Empty);
    }
    Ok(())
}
