//! Raw little-endian arrays with JSON sidecar headers.

use std::fs;
use std::path::{Path, PathBuf};

use dotreg::grid::{Grid, StaggeredTriple};
use ndarray::{Array3, ArrayD, IxDyn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    F64,
    C128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub shape: Vec<usize>,
    pub dtype: Dtype,
    pub order: String,
    pub role: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArrayData {
    Real(ArrayD<f64>),
    Complex(ArrayD<Complex64>),
}

impl ArrayData {
    pub fn shape(&self) -> &[usize] {
        match self {
            Self::Real(a) => a.shape(),
            Self::Complex(a) => a.shape(),
        }
    }

    pub fn dtype(&self) -> Dtype {
        match self {
            Self::Real(_) => Dtype::F64,
            Self::Complex(_) => Dtype::C128,
        }
    }
}

/// `stem.bin` and `stem.json` for an artifact path given with or without extension.
pub fn paths(path: &Path) -> (PathBuf, PathBuf) {
    (path.with_extension("bin"), path.with_extension("json"))
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    Ok(())
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    create_parent(path)?;
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_array(path: &Path, role: &str, data: &ArrayData) -> Result<()> {
    let (bin, json) = paths(path);
    create_parent(&bin)?;
    let mut bytes = Vec::new();
    match data {
        ArrayData::Real(a) => {
            bytes.reserve(8 * a.len());
            for v in a.iter() {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        ArrayData::Complex(a) => {
            bytes.reserve(16 * a.len());
            for z in a.iter() {
                bytes.extend_from_slice(&z.re.to_le_bytes());
                bytes.extend_from_slice(&z.im.to_le_bytes());
            }
        }
    }
    fs::write(&bin, bytes).map_err(|e| CliError::io(&bin, e))?;
    let header = Header {
        shape: data.shape().to_vec(),
        dtype: data.dtype(),
        order: "C".into(),
        role: role.into(),
    };
    write_json(&json, &header)
}

pub fn read_header(path: &Path) -> Result<Header> {
    let (_, json) = paths(path);
    let text = fs::read_to_string(&json).map_err(|e| CliError::io(&json, e))?;
    let header: Header = serde_json::from_str(&text).map_err(|e| CliError::artifact(&json, e.to_string()))?;
    if header.order != "C" {
        return Err(CliError::artifact(&json, format!("unsupported order {:?}", header.order)));
    }
    Ok(header)
}

pub fn read_array(path: &Path) -> Result<(Header, ArrayData)> {
    let header = read_header(path)?;
    let (bin, _) = paths(path);
    let bytes = fs::read(&bin).map_err(|e| CliError::io(&bin, e))?;
    let n: usize = header.shape.iter().product();
    let width = match header.dtype {
        Dtype::F64 => 8,
        Dtype::C128 => 16,
    };
    if bytes.len() != n * width {
        return Err(CliError::artifact(
            &bin,
            format!("expected {} bytes for shape {:?}, found {}", n * width, header.shape, bytes.len()),
        ));
    }
    let word = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8-byte chunk"));
    let shape = IxDyn(&header.shape);
    let data = match header.dtype {
        Dtype::F64 => ArrayData::Real(
            ArrayD::from_shape_vec(shape, bytes.chunks_exact(8).map(word).collect()).expect("length checked"),
        ),
        Dtype::C128 => ArrayData::Complex(
            ArrayD::from_shape_vec(
                shape,
                bytes.chunks_exact(16).map(|c| Complex64::new(word(&c[..8]), word(&c[8..]))).collect(),
            )
            .expect("length checked"),
        ),
    };
    Ok((header, data))
}

/// A real array of the given shape.
pub fn read_real(path: &Path, shape: &[usize]) -> Result<ArrayD<f64>> {
    match read_array(path)? {
        (_, ArrayData::Real(a)) if a.shape() == shape => Ok(a),
        (h, _) => Err(CliError::artifact(
            path,
            format!("expected f64 array of shape {shape:?}, found {:?} of shape {:?}", h.dtype, h.shape),
        )),
    }
}

const TRIPLE_PARTS: [&str; 4] = ["rho", "mx", "my", "mu"];

pub fn write_triple(dir: &Path, u: &StaggeredTriple<f64>) -> Result<()> {
    for (name, part) in TRIPLE_PARTS.iter().zip(u.parts()) {
        write_array(&dir.join(name), name, &ArrayData::Real(part.clone().into_dyn()))?;
    }
    Ok(())
}

pub fn read_triple(dir: &Path, g: &Grid<f64>) -> Result<StaggeredTriple<f64>> {
    let shapes = [g.rho_shape(), g.mx_shape(), g.my_shape(), g.cell_shape()];
    let mut parts = Vec::with_capacity(4);
    for (name, shape) in TRIPLE_PARTS.iter().zip(shapes) {
        let a = read_real(&dir.join(name), &shape)?;
        parts.push(a.into_dimensionality::<ndarray::Ix3>().expect("rank checked"));
    }
    let mu: Array3<f64> = parts.pop().expect("four parts");
    let my = parts.pop().expect("four parts");
    let mx = parts.pop().expect("four parts");
    let rho = parts.pop().expect("four parts");
    Ok(StaggeredTriple { rho, mx, my, mu })
}

pub fn exists(path: &Path) -> bool {
    let (bin, json) = paths(path);
    bin.is_file() && json.is_file()
}
