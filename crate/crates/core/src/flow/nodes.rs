//! Geometry of a node polygon read through its trigonometric interpolant,
//! without building the fine tables of a full `ClosedCurve`.

use crate::geometry::{curvature_from, resample_spectrum, spectrum, Vec3};

pub(crate) struct NodeGeometry {
    pub tangent: Vec<Vec3>,
    pub curvature: Vec<Vec3>,
    /// Arclength from node 0.
    pub arclength: Vec<f64>,
    pub length: f64,
}

fn flatten(points: &[Vec3]) -> Vec<f64> {
    points.iter().flat_map(|p| [p.x, p.y, p.z]).collect()
}

fn derivatives(nodes: &[Vec3], len: usize, orders: &[i32]) -> Vec<Vec<Vec3>> {
    let coeffs = spectrum(&flatten(nodes), 3);
    orders
        .iter()
        .map(|&p| {
            let comps: Vec<Vec<f64>> = coeffs.iter().map(|c| resample_spectrum(c, p, len)).collect();
            (0..len).map(|i| Vec3::new(comps[0][i], comps[1][i], comps[2][i])).collect()
        })
        .collect()
}

impl NodeGeometry {
    pub fn new(nodes: &[Vec3]) -> Self {
        let n = nodes.len();
        let d = derivatives(nodes, n, &[1, 2]);
        let speed: Vec<f64> = d[0].iter().map(|v| v.norm()).collect();
        let tangent = d[0].iter().map(|v| v.normalize()).collect();
        let curvature = d[0].iter().zip(&d[1]).map(|(a, b)| curvature_from(*a, *b)).collect();
        let mut spec = spectrum(&speed, 1);
        let length = spec[0][0].re;
        spec[0][0] = 0.0.into();
        let cum = resample_spectrum(&spec[0], -1, n);
        let arclength = (0..n).map(|i| length * i as f64 / n as f64 + cum[i] - cum[0]).collect();
        NodeGeometry { tangent, curvature, arclength, length }
    }

    /// Arclength gaps `s_{i+1} − s_i`, periodic.
    pub fn spacing(&self) -> Vec<f64> {
        let n = self.arclength.len();
        (0..n)
            .map(|i| if i + 1 < n { self.arclength[i + 1] - self.arclength[i] } else { self.length - self.arclength[i] })
            .collect()
    }
}

/// Reach-style estimate `min(1/max|H|, d/2)` on an upsampled grid, with `d`
/// the smallest locally minimal distance between non-adjacent samples.
pub(crate) fn reach_estimate(nodes: &[Vec3]) -> f64 {
    let m = (4 * nodes.len()).max(256);
    let d = derivatives(nodes, m, &[0, 1, 2]);
    let pts = &d[0];
    let kmax = d[1].iter().zip(&d[2]).map(|(a, b)| curvature_from(*a, *b).norm()).fold(0.0, f64::max);
    let dist = |i: usize, j: usize| (pts[i % m] - pts[j % m]).norm();
    let mut best = f64::INFINITY;
    for i in 0..m {
        for j in (i + 1)..m {
            let dij = dist(i, j);
            if dij >= best {
                continue;
            }
            let is_min = [(m - 1, m - 1), (m - 1, 0), (m - 1, 1), (0, m - 1), (0, 1), (1, m - 1), (1, 0), (1, 1)]
                .iter()
                .all(|&(a, b)| dist(i + a, j + b) >= dij);
            if is_min {
                best = dij;
            }
        }
    }
    let curv = if kmax > 0.0 { 1.0 / kmax } else { f64::INFINITY };
    curv.min(0.5 * best)
}
