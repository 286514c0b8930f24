use super::{ClosedCurve, Vec3};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// On-disk curve document: `{"nodes": [[x, y, z], ...], "closed": true}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CurveFile {
    pub nodes: Vec<[f64; 3]>,
    pub closed: bool,
}

impl CurveFile {
    pub fn from_curve(curve: &ClosedCurve) -> Self {
        CurveFile { nodes: curve.nodes().iter().map(|p| [p.x, p.y, p.z]).collect(), closed: true }
    }

    pub fn into_curve(self) -> Result<ClosedCurve> {
        if !self.closed {
            return Err(Error::invalid("only closed curves are supported"));
        }
        ClosedCurve::from_nodes(self.nodes.iter().map(|p| Vec3::new(p[0], p[1], p[2])).collect()).map_err(|e| match e {
            Error::DegenerateCurve(m) => Error::invalid(format!("degenerate curve: {m}")),
            other => other,
        })
    }
}

pub fn read_curve(path: &Path) -> Result<ClosedCurve> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    let doc: CurveFile =
        serde_json::from_str(&text).map_err(|e| Error::invalid(format!("malformed curve file {}: {e}", path.display())))?;
    doc.into_curve()
}

pub fn write_curve(path: &Path, curve: &ClosedCurve) -> Result<()> {
    let text = serde_json::to_string_pretty(&CurveFile::from_curve(curve)).expect("curve serializes");
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.display().to_string(), source })
}
