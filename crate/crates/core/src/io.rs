//! CSV export and import of node clouds and fields.
//!
//! Values are written with 17 significant digits, so reading a file back gives
//! bitwise the same numbers.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::geometry::DomainDiscretization;
use crate::Point;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}, line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("field has {actual} rows, domain has {expected} nodes")]
    FieldLength { expected: usize, actual: usize },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn coord_header(prefix: &str, d: usize) -> Vec<String> {
    (0..d).map(|k| format!("{prefix}_{k}")).collect()
}

fn write_row<W: Write>(out: &mut W, values: impl IntoIterator<Item = String>) -> io::Result<()> {
    let line: Vec<String> = values.into_iter().collect();
    writeln!(out, "{}", line.join(","))
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Node table with header `x_0,...,x_{d-1},type`.
pub fn write_nodes<const D: usize, W: Write>(domain: &DomainDiscretization<D>, mut out: W) -> io::Result<()> {
    let mut header = coord_header("x", D);
    header.push("type".into());
    write_row(&mut out, header)?;
    for (p, t) in domain.positions().iter().zip(domain.types()) {
        write_row(&mut out, p.iter().map(|x| num(*x)).chain([t.to_string()]))?;
    }
    out.flush()
}

/// Normals of boundary nodes with header `index,n_0,...,n_{d-1}`.
pub fn write_normals<const D: usize, W: Write>(domain: &DomainDiscretization<D>, mut out: W) -> io::Result<()> {
    let mut header = vec!["index".to_string()];
    header.extend(coord_header("n", D));
    write_row(&mut out, header)?;
    for i in 0..domain.size() {
        if let Some(n) = domain.normal(i) {
            write_row(&mut out, [i.to_string()].into_iter().chain(n.iter().map(|x| num(*x))))?;
        }
    }
    out.flush()
}

/// Sibling file receiving the normals of `nodes_path`: `nodes.csv` gives
/// `nodes.normals.csv`.
pub fn normals_path(nodes_path: &Path) -> PathBuf {
    let stem = nodes_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    nodes_path.with_file_name(format!("{stem}.normals.csv"))
}

/// Writes the node table to `path` and the normals to [`normals_path`]`(path)`.
pub fn write_nodes_csv<const D: usize>(domain: &DomainDiscretization<D>, path: &Path) -> Result<(), IoError> {
    write_nodes(domain, create(path)?).map_err(io_err(path))?;
    let np = normals_path(path);
    write_normals(domain, create(&np)?).map_err(io_err(&np))
}

/// A field over the nodes of a domain: one or more values per node.
#[derive(Clone, Copy, Debug)]
pub enum Field<'a, const D: usize> {
    Scalar(&'a [f64]),
    Vector(&'a [Point<D>]),
}

impl<const D: usize> Field<'_, D> {
    fn len(&self) -> usize {
        match self {
            Field::Scalar(u) => u.len(),
            Field::Vector(u) => u.len(),
        }
    }

    fn components(&self) -> usize {
        match self {
            Field::Scalar(_) => 1,
            Field::Vector(_) => D,
        }
    }

    fn row(&self, i: usize) -> Vec<f64> {
        match self {
            Field::Scalar(u) => vec![u[i]],
            Field::Vector(u) => u[i].iter().copied().collect(),
        }
    }
}

impl<'a, const D: usize> From<&'a [f64]> for Field<'a, D> {
    fn from(u: &'a [f64]) -> Self {
        Field::Scalar(u)
    }
}

impl<'a, const D: usize> From<&'a [Point<D>]> for Field<'a, D> {
    fn from(u: &'a [Point<D>]) -> Self {
        Field::Vector(u)
    }
}

/// Field table with header `x_0,...,x_{d-1},type,u_0,...`.
pub fn write_field<const D: usize, W: Write>(
    domain: &DomainDiscretization<D>,
    field: Field<'_, D>,
    mut out: W,
) -> Result<(), IoError> {
    if field.len() != domain.size() {
        return Err(IoError::FieldLength {
            expected: domain.size(),
            actual: field.len(),
        });
    }
    let inner = |out: &mut W| -> io::Result<()> {
        let mut header = coord_header("x", D);
        header.push("type".into());
        header.extend(coord_header("u", field.components()));
        write_row(out, header)?;
        for i in 0..domain.size() {
            let row = domain
                .pos(i)
                .iter()
                .map(|x| num(*x))
                .chain([domain.type_of(i).to_string()])
                .chain(field.row(i).into_iter().map(num));
            write_row(out, row)?;
        }
        out.flush()
    };
    inner(&mut out).map_err(io_err(Path::new("<writer>")))
}

pub fn write_field_csv<'a, const D: usize>(
    domain: &DomainDiscretization<D>,
    field: impl Into<Field<'a, D>>,
    path: &Path,
) -> Result<(), IoError> {
    let out = create(path)?;
    write_field(domain, field.into(), out).map_err(|e| match e {
        IoError::Io { source, .. } => IoError::Io {
            path: path.to_path_buf(),
            source,
        },
        e => e,
    })
}

/// Contents of a field file.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldTable<const D: usize> {
    pub positions: Vec<Point<D>>,
    pub types: Vec<i32>,
    /// `values[i]` holds the field components at node `i`.
    pub values: Vec<Vec<f64>>,
}

impl<const D: usize> FieldTable<D> {
    /// First component at every node.
    pub fn scalar(&self) -> Vec<f64> {
        self.values.iter().map(|v| v[0]).collect()
    }

    /// The first `D` components at every node as vectors, if present.
    pub fn vector(&self) -> Option<Vec<Point<D>>> {
        self.values
            .iter()
            .map(|v| (v.len() >= D).then(|| Point::<D>::from_fn(|k, _| v[k])))
            .collect()
    }
}

/// Reads a file written by [`write_field_csv`].
pub fn read_field_csv<const D: usize>(path: &Path) -> Result<FieldTable<D>, IoError> {
    let file = File::open(path).map_err(io_err(path))?;
    let parse_err = |line: usize, message: String| IoError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = BufReader::new(file).lines();
    let header = match lines.next() {
        Some(h) => h.map_err(io_err(path))?,
        None => return Err(parse_err(1, "empty file".into())),
    };
    let cols: Vec<&str> = header.trim().split(',').collect();
    let mut expected = coord_header("x", D);
    expected.push("type".into());
    if cols.len() <= D + 1 || cols[..=D] != expected[..] {
        return Err(parse_err(
            1,
            format!("expected header starting with {}", expected.join(",")),
        ));
    }
    let ncomp = cols.len() - D - 1;
    if cols[D + 1..] != coord_header("u", ncomp)[..] {
        return Err(parse_err(1, "value columns must be u_0,u_1,...".into()));
    }
    let mut table = FieldTable {
        positions: Vec::new(),
        types: Vec::new(),
        values: Vec::new(),
    };
    for (k, line) in lines.enumerate() {
        let lineno = k + 2;
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.trim().split(',').collect();
        if parts.len() != cols.len() {
            return Err(parse_err(
                lineno,
                format!("expected {} columns, found {}", cols.len(), parts.len()),
            ));
        }
        let float = |s: &str| s.parse::<f64>().map_err(|e| parse_err(lineno, format!("{s:?}: {e}")));
        let mut p = Point::<D>::zeros();
        for a in 0..D {
            p[a] = float(parts[a])?;
        }
        let t = parts[D]
            .parse::<i32>()
            .map_err(|e| parse_err(lineno, format!("type {:?}: {e}", parts[D])))?;
        let v = parts[D + 1..].iter().map(|s| float(s)).collect::<Result<Vec<_>, _>>()?;
        table.positions.push(p);
        table.types.push(t);
        table.values.push(v);
    }
    Ok(table)
}
