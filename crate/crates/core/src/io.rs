//! File formats: mesh JSON, Matrix Market, block index sidecars, reports and eigenvector CSV.
//!
//! Every real is written with 17 significant digits so files round-trip exactly
//! and identical inputs produce identical bytes.

use std::fs;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembly::AssembledSystem;
use crate::mesh::{self, Element, Mesh, MeshError, MeshKind, Point2};

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// JSON formatter writing floats as `{:.16e}`.
struct FullPrecision;

impl serde_json::ser::Formatter for FullPrecision {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{:.16e}", f64::from(value))
    }
}

/// Serializes `value` as JSON with full-precision floats. Non-finite floats become `null`.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String, IoError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), IoError> {
    Ok(fs::write(path, to_json(value)?)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshFile {
    pub kind: String,
    pub nodes: Vec<[f64; 2]>,
    pub elements: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Vec<usize>>,
}

impl MeshFile {
    pub fn from_mesh(m: &Mesh) -> Self {
        MeshFile {
            kind: match m.kind() {
                MeshKind::Triangular => "tri".into(),
                MeshKind::Quadrilateral => "quad".into(),
            },
            nodes: m.nodes().iter().map(|p| [p.x, p.y]).collect(),
            elements: m.elements().iter().map(|e| e.nodes.clone()).collect(),
            boundary: mesh::boundary_partition(m).ok().map(|p| p.boundary),
        }
    }

    /// Builds and validates the mesh; a stored boundary must match the recomputed one.
    pub fn to_mesh(&self) -> Result<Mesh, IoError> {
        let (kind, arity) = match self.kind.as_str() {
            "tri" => (MeshKind::Triangular, 3),
            "quad" => (MeshKind::Quadrilateral, 4),
            other => return Err(IoError::Format(format!("unknown mesh kind {other:?}"))),
        };
        let nodes = self.nodes.iter().map(|&[x, y]| Point2::new(x, y)).collect();
        let mut elements = Vec::with_capacity(self.elements.len());
        for (e, nodes) in self.elements.iter().enumerate() {
            if nodes.len() != arity {
                return Err(MeshError::Arity {
                    element: e,
                    expected: arity,
                    found: nodes.len(),
                }
                .into());
            }
            elements.push(match kind {
                MeshKind::Triangular => Element::tri(nodes[0], nodes[1], nodes[2]),
                MeshKind::Quadrilateral => Element::quad(nodes[0], nodes[1], nodes[2], nodes[3]),
            });
        }
        let m = Mesh::new_valid(kind, nodes, elements)?;
        if let Some(stored) = &self.boundary {
            let mut stored = stored.clone();
            stored.sort_unstable();
            if stored != mesh::boundary_partition(&m)?.boundary {
                return Err(IoError::Format(
                    "stored boundary differs from the mesh boundary".into(),
                ));
            }
        }
        Ok(m)
    }
}

pub fn mesh_to_json(m: &Mesh) -> Result<String, IoError> {
    to_json(&MeshFile::from_mesh(m))
}

pub fn mesh_from_json(text: &str) -> Result<Mesh, IoError> {
    serde_json::from_str::<MeshFile>(text)?.to_mesh()
}

pub fn read_mesh(path: &Path) -> Result<Mesh, IoError> {
    mesh_from_json(&fs::read_to_string(path)?)
}

pub fn write_mesh(path: &Path, m: &Mesh) -> Result<(), IoError> {
    Ok(fs::write(path, mesh_to_json(m)?)?)
}

/// Matrix Market coordinate output of the nonzero entries, 1-based.
pub fn write_matrix_market<W: Write>(mut w: W, mat: &DMatrix<f64>) -> Result<(), IoError> {
    let (r, c) = mat.shape();
    let mut entries = Vec::new();
    for j in 0..c {
        for i in 0..r {
            let v = mat[(i, j)];
            if v != 0.0 {
                entries.push((i, j, v));
            }
        }
    }
    entries.sort_by_key(|&(i, j, _)| (i, j));
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{r} {c} {}", entries.len())?;
    for (i, j, v) in entries {
        writeln!(w, "{} {} {v:.16e}", i + 1, j + 1)?;
    }
    Ok(())
}

pub fn read_matrix_market<R: Read>(r: R) -> Result<DMatrix<f64>, IoError> {
    let mut lines = BufReader::new(r).lines();
    let header = lines
        .next()
        .ok_or_else(|| IoError::Format("empty Matrix Market file".into()))??;
    let fields: Vec<String> = header
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if fields.len() < 5
        || fields[0] != "%%matrixmarket"
        || fields[1] != "matrix"
        || fields[2] != "coordinate"
    {
        return Err(IoError::Format(format!(
            "unsupported Matrix Market header {header:?}"
        )));
    }
    if fields[3] != "real" {
        return Err(IoError::Format(format!(
            "unsupported field type {}",
            fields[3]
        )));
    }
    let symmetric = match fields[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(IoError::Format(format!("unsupported symmetry {other}"))),
    };
    let mut body =
        lines.filter(|l| !matches!(l, Ok(s) if s.trim().is_empty() || s.starts_with('%')));
    let size = body
        .next()
        .ok_or_else(|| IoError::Format("missing size line".into()))??;
    let dims: Vec<usize> = parse_fields(&size)?;
    let [rows, cols, nnz] = dims[..] else {
        return Err(IoError::Format(format!("bad size line {size:?}")));
    };
    let mut mat = DMatrix::zeros(rows, cols);
    let mut count = 0;
    for line in body {
        let line = line?;
        let mut it = line.split_whitespace();
        let (Some(i), Some(j), Some(v), None) = (it.next(), it.next(), it.next(), it.next()) else {
            return Err(IoError::Format(format!("bad entry line {line:?}")));
        };
        let parse_index = |s: &str, bound: usize| match s.parse::<usize>() {
            Ok(k) if (1..=bound).contains(&k) => Ok(k - 1),
            _ => Err(IoError::Format(format!(
                "index {s} out of range in {line:?}"
            ))),
        };
        let (i, j) = (parse_index(i, rows)?, parse_index(j, cols)?);
        let v: f64 = v
            .parse()
            .map_err(|_| IoError::Format(format!("bad value in {line:?}")))?;
        mat[(i, j)] += v;
        if symmetric && i != j {
            mat[(j, i)] += v;
        }
        count += 1;
    }
    if count != nnz {
        return Err(IoError::Format(format!(
            "expected {nnz} entries, found {count}"
        )));
    }
    Ok(mat)
}

fn parse_fields(line: &str) -> Result<Vec<usize>, IoError> {
    line.split_whitespace()
        .map(|s| {
            s.parse()
                .map_err(|_| IoError::Format(format!("bad integer {s:?}")))
        })
        .collect()
}

/// Index maps that accompany block exports.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockIndex {
    pub interior: Vec<usize>,
    pub boundary: Vec<usize>,
}

/// Writes `A.mtx`, `M.mtx`, the eight blocks `A_II.mtx` ... `M_BB.mtx` and `blocks.json` into `dir`.
pub fn export_system(dir: &Path, sys: &AssembledSystem) -> Result<Vec<String>, IoError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: String, mat: &DMatrix<f64>| -> Result<(), IoError> {
        let file = fs::File::create(dir.join(&name))?;
        write_matrix_market(io::BufWriter::new(file), mat)?;
        written.push(name);
        Ok(())
    };
    put("A.mtx".into(), &sys.a)?;
    put("M.mtx".into(), &sys.m)?;
    for (tag, blocks) in [("A", &sys.a_blocks), ("M", &sys.m_blocks)] {
        for (part, mat) in [
            ("II", &blocks.ii),
            ("IB", &blocks.ib),
            ("BI", &blocks.bi),
            ("BB", &blocks.bb),
        ] {
            put(format!("{tag}_{part}.mtx"), mat)?;
        }
    }
    let index = BlockIndex {
        interior: sys.partition.interior.clone(),
        boundary: sys.partition.boundary.clone(),
    };
    write_json(&dir.join("blocks.json"), &index)?;
    written.push("blocks.json".into());
    Ok(written)
}

#[derive(Serialize)]
struct CsvRow {
    node: usize,
    x: f64,
    y: f64,
    value: f64,
}

/// Nodal values as CSV with columns `node,x,y,value`.
pub fn write_eigenvector_csv<W: Write>(
    w: W,
    m: &Mesh,
    values: &DVector<f64>,
) -> Result<(), IoError> {
    if values.len() != m.n_nodes() {
        return Err(IoError::Format(format!(
            "{} values for {} nodes",
            values.len(),
            m.n_nodes()
        )));
    }
    let mut out = csv::Writer::from_writer(w);
    for (node, (p, &value)) in m.nodes().iter().zip(values.iter()).enumerate() {
        out.serialize(CsvRow {
            node,
            x: p.x,
            y: p.y,
            value,
        })?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble;
    use crate::mesh::{gen_polygon_ring, gen_tensor_product};

    #[test]
    fn mesh_round_trip_is_exact() {
        let m = gen_polygon_ring(7, 3.0).unwrap();
        let text = mesh_to_json(&m).unwrap();
        assert!(text.contains("\"kind\":\"tri\""));
        let back = mesh_from_json(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(mesh_to_json(&back).unwrap(), text);
    }

    #[test]
    fn boundary_is_optional_but_checked() {
        let text = r#"{"kind":"quad","nodes":[[0,0],[1,0],[0,1],[1,1]],"elements":[[0,1,3,2]]}"#;
        assert_eq!(mesh_from_json(text).unwrap().n_elements(), 1);
        let wrong = r#"{"kind":"quad","nodes":[[0,0],[1,0],[0,1],[1,1]],"elements":[[0,1,3,2]],"boundary":[0,1]}"#;
        assert!(matches!(mesh_from_json(wrong), Err(IoError::Format(_))));
        let arity = r#"{"kind":"tri","nodes":[[0,0],[1,0],[0,1]],"elements":[[0,1]]}"#;
        assert!(matches!(
            mesh_from_json(arity),
            Err(IoError::Mesh(MeshError::Arity { .. }))
        ));
    }

    #[test]
    fn matrix_market_round_trip() {
        let sys = assemble(&gen_tensor_product(&[0.0, 0.5, 2.0], &[0.0, 1.0]).unwrap()).unwrap();
        for mat in [&sys.a, &sys.a_blocks.ib] {
            let mut buf = Vec::new();
            write_matrix_market(&mut buf, mat).unwrap();
            assert_eq!(&read_matrix_market(buf.as_slice()).unwrap(), mat);
        }
    }

    #[test]
    fn matrix_market_rejects_garbage() {
        assert!(read_matrix_market("hello\n1 1 0\n".as_bytes()).is_err());
        let short = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n";
        assert!(read_matrix_market(short.as_bytes()).is_err());
        let sym = "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n2 1 3.0\n";
        let m = read_matrix_market(sym.as_bytes()).unwrap();
        assert_eq!((m[(0, 1)], m[(1, 0)]), (3.0, 3.0));
    }

    #[test]
    fn csv_has_one_row_per_node() {
        let m = gen_tensor_product(&[0.0, 1.0], &[0.0, 1.0]).unwrap();
        let mut buf = Vec::new();
        write_eigenvector_csv(&mut buf, &m, &DVector::from_element(4, 0.5)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with("node,x,y,value\n0,0.0,0.0,0.5"));
    }
}
