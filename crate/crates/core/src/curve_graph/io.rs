//! JSON/CSV file formats for drawings, cameras and edge maps.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Matrix3x4;
use serde::{Deserialize, Serialize};

use super::{CameraView, CurveDrawing, CurveFragment, EdgeElement, Endpoint, Node};
use crate::error::{Error, Result};
use crate::geom::{Point2, Point3};

#[derive(Serialize, Deserialize)]
struct FragmentFile {
    id: u64,
    #[serde(default)]
    closed: bool,
    points: Vec<[f64; 3]>,
}

#[derive(Serialize, Deserialize)]
struct NodeFile {
    point: [f64; 3],
    incident: Vec<Endpoint>,
}

#[derive(Serialize, Deserialize)]
struct DrawingFile {
    fragments: Vec<FragmentFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nodes: Option<Vec<NodeFile>>,
}

fn to_point(a: [f64; 3]) -> Point3 {
    Point3::new(a[0], a[1], a[2])
}

fn from_point(p: &Point3) -> [f64; 3] {
    [p.x, p.y, p.z]
}

/// Parses drawing JSON. Nodes are validated when present and rebuilt otherwise.
pub fn parse_drawing(text: &str, path: &Path) -> Result<CurveDrawing> {
    let file: DrawingFile = serde_json::from_str(text).map_err(|e| Error::json(path, e))?;
    let fragments: Vec<CurveFragment> = file
        .fragments
        .into_iter()
        .map(|f| CurveFragment::new(f.id, f.points.into_iter().map(to_point).collect(), f.closed))
        .collect();
    for f in &fragments {
        f.validate()?;
    }
    let drawing = match file.nodes {
        Some(nodes) => CurveDrawing {
            fragments,
            nodes: nodes
                .into_iter()
                .map(|n| Node {
                    point: to_point(n.point),
                    incident: n.incident,
                })
                .collect(),
        },
        None => CurveDrawing::from_fragments(fragments),
    };
    drawing.validate()?;
    Ok(drawing)
}

pub fn load_drawing(path: impl AsRef<Path>) -> Result<CurveDrawing> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_drawing(&text, path)
}

pub fn drawing_to_json(drawing: &CurveDrawing) -> String {
    let file = DrawingFile {
        fragments: drawing
            .fragments
            .iter()
            .map(|f| FragmentFile {
                id: f.id,
                closed: f.closed,
                points: f.points.iter().map(from_point).collect(),
            })
            .collect(),
        nodes: Some(
            drawing
                .nodes
                .iter()
                .map(|n| NodeFile {
                    point: from_point(&n.point),
                    incident: n.incident.clone(),
                })
                .collect(),
        ),
    };
    serde_json::to_string(&file).expect("drawing serializes")
}

pub fn save_drawing(path: impl AsRef<Path>, drawing: &CurveDrawing) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, drawing_to_json(drawing)).map_err(|e| Error::io(path, e))
}

#[derive(Serialize, Deserialize)]
struct ViewFile {
    id: u64,
    #[serde(rename = "P")]
    p: [[f64; 4]; 3],
    width: u32,
    height: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edges_path: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct CamerasFile {
    views: Vec<ViewFile>,
}

/// Loads `cameras.json`; each view's `edges_path` is resolved against the file's directory.
pub fn load_cameras(path: impl AsRef<Path>) -> Result<Vec<CameraView>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: CamerasFile = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    file.views
        .into_iter()
        .map(|v| {
            let p = Matrix3x4::from_fn(|r, c| v.p[r][c]);
            let edges = match &v.edges_path {
                Some(rel) => load_edges_csv(base.join(rel))?,
                None => Vec::new(),
            };
            CameraView::new(v.id, p, v.width, v.height, edges)
        })
        .collect()
}

/// Writes `cameras.json` at `path` plus one `edges_<id>.csv` per view next to it.
pub fn save_cameras(path: impl AsRef<Path>, views: &[CameraView]) -> Result<()> {
    let path = path.as_ref();
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut files = Vec::with_capacity(views.len());
    for v in views {
        let name = format!("edges_{}.csv", v.id);
        save_edges_csv(base.join(&name), &v.edges)?;
        files.push(ViewFile {
            id: v.id,
            p: [0, 1, 2].map(|r| [0, 1, 2, 3].map(|c| v.projection[(r, c)])),
            width: v.width,
            height: v.height,
            edges_path: Some(name),
        });
    }
    let text = serde_json::to_string_pretty(&CamerasFile { views: files }).expect("cameras serialize");
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Serialize, Deserialize)]
struct EdgeRow {
    x: f64,
    y: f64,
    theta: f64,
    strength: f64,
}

pub fn load_edges_csv(path: impl AsRef<Path>) -> Result<Vec<EdgeElement>> {
    let path: PathBuf = path.as_ref().to_path_buf();
    let mut reader = csv::Reader::from_path(&path).map_err(|e| csv_error(&path, e))?;
    let mut out = Vec::new();
    for row in reader.deserialize::<EdgeRow>() {
        let row = row.map_err(|e| csv_error(&path, e))?;
        out.push(EdgeElement::new(Point2::new(row.x, row.y), row.theta, row.strength));
    }
    Ok(out)
}

pub fn save_edges_csv(path: impl AsRef<Path>, edges: &[EdgeElement]) -> Result<()> {
    let path: PathBuf = path.as_ref().to_path_buf();
    let mut writer = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    for e in edges {
        writer
            .serialize(EdgeRow {
                x: e.position.x,
                y: e.position.y,
                theta: e.orientation,
                strength: e.strength,
            })
            .map_err(|err| csv_error(&path, err))?;
    }
    if edges.is_empty() {
        writer
            .write_record(["x", "y", "theta", "strength"])
            .map_err(|err| csv_error(&path, err))?;
    }
    writer.flush().map_err(|e| Error::io(&path, e))
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    let line = err.position().map(|p| p.line() as usize).unwrap_or(0);
    match err.into_kind() {
        csv::ErrorKind::Io(e) => Error::io(path, e),
        kind => Error::Parse {
            path: path.to_path_buf(),
            line,
            column: 0,
            message: format!("{kind:?}"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_field_reports_line() {
        let text = "{\n  \"fragments\": [\n    {\"id\": 1, \"pts\": []}\n  ]\n}";
        match parse_drawing(text, Path::new("bad.json")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn one_point_fragment_names_id() {
        let text = r#"{"fragments":[{"id":17,"closed":false,"points":[[0,0,0]]}]}"#;
        match parse_drawing(text, Path::new("x.json")) {
            Err(Error::InvalidFragment { id, .. }) => assert_eq!(id, 17),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn l_shape_file() {
        let text = r#"{"fragments":[
            {"id":0,"closed":false,"points":[[0,0,0],[0.5,0,0],[1,0,0]]},
            {"id":1,"closed":false,"points":[[1,0,0],[1,0.5,0],[1,1,0]]}]}"#;
        let d = parse_drawing(text, Path::new("l.json")).unwrap();
        assert_eq!(d.fragments.len(), 2);
        assert_eq!(d.nodes.len(), 1);
        assert_eq!(d.nodes[0].degree(), 2);
    }

    #[test]
    fn bad_node_reference_is_rejected() {
        let text = r#"{"fragments":[{"id":0,"points":[[0,0,0],[1,0,0]]}],
            "nodes":[{"point":[0,0,0],"incident":[{"fragment":5,"end":"start"}]}]}"#;
        assert!(matches!(
            parse_drawing(text, Path::new("n.json")),
            Err(Error::InvalidDrawing(_))
        ));
    }
}
