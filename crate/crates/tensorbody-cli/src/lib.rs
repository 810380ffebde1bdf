//! File formats and the reproduction suite behind the `tensorbody` binary.
//!
//! Bodies travel as small JSON documents ([`BodyFile`]) holding one concrete
//! representation: generator rows, facet normals, or an ellipsoid shape
//! matrix. serde_json prints shortest-round-trip decimals, so writing a body
//! and reading it back reproduces every coordinate bit for bit.

pub mod checks;

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use tensorbody::body::{Body, BodyRep};
use tensorbody::linalg::TensorShape;
use tensorbody::Ellipsoid;

/// Flat-file form of a body.
///
/// `kind` selects how `data` is read: `"vpoly"` rows are generators (the body
/// is the convex hull of `±row`), `"hpoly"` rows are functionals (`|<row,x>|
/// <= 1`), `"ellipsoid"` rows stack a symmetric positive definite matrix `M`
/// with the body `{x : x^T M x <= 1}`. `tensor_shape`, when present, tags the
/// ambient space as a tensor product with the given slot dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodyFile {
    pub kind: String,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensor_shape: Option<Vec<usize>>,
    pub data: Vec<Vec<f64>>,
}

impl BodyFile {
    /// Validate the invariants that make the file meaningful and build the
    /// body it describes.
    pub fn into_body(&self) -> Result<Body> {
        if self.dim == 0 {
            bail!("dim must be positive");
        }
        for (i, row) in self.data.iter().enumerate() {
            if row.len() != self.dim {
                bail!(
                    "data row {} has {} entries, expected dim = {}",
                    i,
                    row.len(),
                    self.dim
                );
            }
            if row.iter().any(|v| !v.is_finite()) {
                bail!("data row {} contains a non-finite entry", i);
            }
        }
        let body = match self.kind.as_str() {
            "vpoly" => {
                let gens: Vec<DVector<f64>> = self
                    .data
                    .iter()
                    .map(|r| DVector::from_column_slice(r))
                    .collect();
                Body::from_generators(gens)?
            }
            "hpoly" => {
                let normals: Vec<DVector<f64>> = self
                    .data
                    .iter()
                    .map(|r| DVector::from_column_slice(r))
                    .collect();
                Body::from_normals(normals)?
            }
            "ellipsoid" => {
                if self.data.len() != self.dim {
                    bail!(
                        "shape_matrix has {} rows, expected dim = {}",
                        self.data.len(),
                        self.dim
                    );
                }
                let m = DMatrix::from_fn(self.dim, self.dim, |i, j| self.data[i][j]);
                let skew = (&m - m.transpose()).amax();
                if skew > 1e-12 {
                    bail!("shape_matrix is not symmetric (max skew {})", skew);
                }
                Body::from_shape_matrix(m)?
            }
            other => bail!("unknown body kind {:?}", other),
        };
        match &self.tensor_shape {
            None => Ok(body),
            Some(dims) => {
                let prod: usize = dims.iter().product();
                if prod != self.dim {
                    bail!(
                        "tensor_shape {:?} spans dimension {}, expected dim = {}",
                        dims,
                        prod,
                        self.dim
                    );
                }
                let shape = TensorShape::new(dims.clone())?;
                Ok(body.with_shape(shape)?)
            }
        }
    }

    /// Flatten a body back to a file. Composite bodies are materialised when
    /// an exact concrete form exists (polytopal composites become their
    /// vertex form); anything genuinely curved-but-not-an-ellipsoid has no
    /// flat representation and is refused.
    pub fn from_body(body: &Body) -> Result<BodyFile> {
        let tensor_shape = body.shape().map(|s| s.dims().to_vec());
        let dim = body.dim();
        let (kind, data): (&str, Vec<Vec<f64>>) = match body.rep() {
            BodyRep::VPoly(v) => ("vpoly", rows_of(v.generators())),
            BodyRep::HPoly(h) => ("hpoly", rows_of(h.normals())),
            BodyRep::Ellipsoid(e) => ("ellipsoid", matrix_rows(e.shape_matrix())),
            _ if body.is_polytopal() => ("vpoly", rows_of(body.as_vpoly()?.generators())),
            _ => bail!(
                "this body has no exact flat representation: it is neither \
                 polytopal nor a single ellipsoid"
            ),
        };
        Ok(BodyFile {
            kind: kind.to_string(),
            dim,
            tensor_shape,
            data,
        })
    }

    /// Like [`BodyFile::from_body`] for a bare ellipsoid.
    pub fn from_ellipsoid(e: &Ellipsoid, shape: Option<&TensorShape>) -> BodyFile {
        BodyFile {
            kind: "ellipsoid".to_string(),
            dim: e.dim(),
            tensor_shape: shape.map(|s| s.dims().to_vec()),
            data: matrix_rows(e.shape_matrix()),
        }
    }
}

fn rows_of(vs: &[DVector<f64>]) -> Vec<Vec<f64>> {
    vs.iter().map(|v| v.iter().copied().collect()).collect()
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

/// Read a body file from disk.
pub fn read_body(path: &Path) -> Result<Body> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading body file {}", path.display()))?;
    let file: BodyFile = serde_json::from_str(&text)
        .with_context(|| format!("parsing body file {}", path.display()))?;
    file.into_body()
        .with_context(|| format!("validating body file {}", path.display()))
}

/// Write a body to disk in flat-file form.
pub fn write_body(path: &Path, body: &Body) -> Result<()> {
    let file = BodyFile::from_body(body)?;
    write_file(path, &file)
}

/// Write an already-flattened file to disk.
pub fn write_file(path: &Path, file: &BodyFile) -> Result<()> {
    let mut text = serde_json::to_string_pretty(file)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing body file {}", path.display()))?;
    Ok(())
}

/// Parse a shape literal such as `2x2` or `2x3x2`.
pub fn parse_shape(text: &str) -> Result<TensorShape> {
    let dims: Vec<usize> = text
        .split('x')
        .map(|tok| {
            tok.trim()
                .parse::<usize>()
                .with_context(|| format!("bad shape component {:?} in {:?}", tok, text))
        })
        .collect::<Result<_>>()?;
    Ok(TensorShape::new(dims)?)
}

/// Parse a comma-separated coordinate vector.
pub fn parse_point(text: &str) -> Result<DVector<f64>> {
    let vals: Vec<f64> = text
        .split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .with_context(|| format!("bad coordinate {:?} in {:?}", tok, text))
        })
        .collect::<Result<_>>()?;
    if vals.is_empty() {
        bail!("empty coordinate list");
    }
    Ok(DVector::from_vec(vals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tensorbody::body::LpKind;

    #[test]
    fn body_files_round_trip_exactly() {
        let bodies = [
            Body::lp_ball(LpKind::One, 3).unwrap(),
            Body::lp_ball(LpKind::Inf, 2).unwrap(),
            Body::random_polytope(3, 7, 11).unwrap(),
            Body::ball(4)
                .with_shape(TensorShape::new(vec![2, 2]).unwrap())
                .unwrap(),
        ];
        for body in &bodies {
            let file = BodyFile::from_body(body).unwrap();
            let text = serde_json::to_string(&file).unwrap();
            let back: BodyFile = serde_json::from_str(&text).unwrap();
            assert_eq!(file, back);
            let rebuilt = back.into_body().unwrap();
            assert_eq!(rebuilt.dim(), body.dim());
            assert_eq!(
                rebuilt.shape().map(|s| s.dims().to_vec()),
                body.shape().map(|s| s.dims().to_vec())
            );
        }
    }

    #[test]
    fn invalid_files_are_refused() {
        let ragged = BodyFile {
            kind: "vpoly".into(),
            dim: 2,
            tensor_shape: None,
            data: vec![vec![1.0, 0.0], vec![1.0]],
        };
        assert!(ragged.into_body().is_err());

        let skewed = BodyFile {
            kind: "ellipsoid".into(),
            dim: 2,
            tensor_shape: None,
            data: vec![vec![1.0, 0.5], vec![0.3, 1.0]],
        };
        assert!(skewed.into_body().is_err());

        let mismatched = BodyFile {
            kind: "vpoly".into(),
            dim: 4,
            tensor_shape: Some(vec![2, 3]),
            data: vec![vec![1.0, 0.0, 0.0, 0.0]],
        };
        assert!(mismatched.into_body().is_err());
    }

    #[test]
    fn shape_and_point_literals_parse() {
        assert_eq!(parse_shape("2x3").unwrap().dims(), &[2, 3]);
        assert!(parse_shape("2x").is_err());
        assert_eq!(
            parse_point("1, -0.5,2e-3").unwrap().as_slice(),
            &[1.0, -0.5, 2e-3]
        );
        assert!(parse_point("1,abc").is_err());
    }
}
