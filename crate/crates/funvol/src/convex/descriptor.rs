//! JSON descriptors for convex functions: tagged variants with plain
//! nested-array matrices, validated on deserialization.

use super::{ConvexFunction, GridFunction, RadialProfile, Shape};
use crate::error::{Error, Result};
use crate::geometry::{Polytope, PolytopeDescriptor, Subspace};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConvexFunctionDescriptor {
    Quadratic {
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        c: f64,
    },
    SmoothRadial {
        dim: usize,
        profile: RadialProfile,
    },
    ConeBall {
        slope: f64,
        radius: f64,
        center: Vec<f64>,
    },
    SupportPlusIndicator {
        p: PolytopeDescriptor,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        q: Option<PolytopeDescriptor>,
    },
    PiecewiseLinearSum {
        anchors: Vec<f64>,
    },
    EpiSum {
        operands: Vec<ConvexFunctionDescriptor>,
    },
    Sum {
        items: Vec<ConvexFunctionDescriptor>,
    },
    Max {
        items: Vec<ConvexFunctionDescriptor>,
    },
    Min {
        items: Vec<ConvexFunctionDescriptor>,
    },
    GridSampled {
        lo: Vec<f64>,
        hi: Vec<f64>,
        shape: Vec<usize>,
        values: Vec<f64>,
    },
    Embedded {
        frame: Vec<Vec<f64>>,
        inner: Box<ConvexFunctionDescriptor>,
    },
    Cylinder {
        frame: Vec<Vec<f64>>,
        inner: Box<ConvexFunctionDescriptor>,
    },
    Projection {
        frame: Vec<Vec<f64>>,
        inner: Box<ConvexFunctionDescriptor>,
    },
    Affine {
        inner: Box<ConvexFunctionDescriptor>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rotation: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        translation: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        linear: Option<Vec<f64>>,
        offset: f64,
    },
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Err(Error::Descriptor("matrix needs at least one row".into()));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Descriptor("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

impl From<ConvexFunction> for ConvexFunctionDescriptor {
    fn from(u: ConvexFunction) -> Self {
        descriptor_of(&u)
    }
}

fn descriptor_of(u: &ConvexFunction) -> ConvexFunctionDescriptor {
    match u.shape() {
        Shape::Quadratic { a, b, c } => ConvexFunctionDescriptor::Quadratic {
            a: matrix_to_rows(a),
            b: b.iter().copied().collect(),
            c: *c,
        },
        Shape::SmoothRadial { profile } => ConvexFunctionDescriptor::SmoothRadial {
            dim: u.dim(),
            profile: profile.clone(),
        },
        Shape::ConeBall {
            slope,
            radius,
            center,
        } => ConvexFunctionDescriptor::ConeBall {
            slope: *slope,
            radius: *radius,
            center: center.iter().copied().collect(),
        },
        Shape::SupportPlusIndicator { p, q } => ConvexFunctionDescriptor::SupportPlusIndicator {
            p: p.clone().into(),
            q: q.clone().map(Into::into),
        },
        Shape::PiecewiseLinearSum { anchors } => ConvexFunctionDescriptor::PiecewiseLinearSum {
            anchors: anchors.iter().copied().collect(),
        },
        Shape::EpiSum { operands } => ConvexFunctionDescriptor::EpiSum {
            operands: operands.iter().map(descriptor_of).collect(),
        },
        Shape::SumOf { items } => ConvexFunctionDescriptor::Sum {
            items: items.iter().map(descriptor_of).collect(),
        },
        Shape::MaxOf { items } => ConvexFunctionDescriptor::Max {
            items: items.iter().map(descriptor_of).collect(),
        },
        Shape::MinOf { items } => ConvexFunctionDescriptor::Min {
            items: items.iter().map(descriptor_of).collect(),
        },
        Shape::GridSampled { grid } => ConvexFunctionDescriptor::GridSampled {
            lo: grid.lo.clone(),
            hi: grid.hi.clone(),
            shape: grid.shape.clone(),
            values: grid.values.clone(),
        },
        Shape::Embedded { subspace, inner } => ConvexFunctionDescriptor::Embedded {
            frame: matrix_to_rows(subspace.frame()),
            inner: Box::new(descriptor_of(inner)),
        },
        Shape::Cylinder { subspace, inner } => ConvexFunctionDescriptor::Cylinder {
            frame: matrix_to_rows(subspace.frame()),
            inner: Box::new(descriptor_of(inner)),
        },
        Shape::Projection { inner, frame } => ConvexFunctionDescriptor::Projection {
            frame: matrix_to_rows(frame.frame()),
            inner: Box::new(descriptor_of(inner)),
        },
        Shape::Affine {
            inner,
            rotation,
            translation,
            linear,
            offset,
        } => ConvexFunctionDescriptor::Affine {
            inner: Box::new(descriptor_of(inner)),
            rotation: rotation.as_ref().map(matrix_to_rows),
            translation: translation.as_ref().map(|t| t.iter().copied().collect()),
            linear: linear.as_ref().map(|l| l.iter().copied().collect()),
            offset: *offset,
        },
    }
}

impl TryFrom<ConvexFunctionDescriptor> for ConvexFunction {
    type Error = Error;

    fn try_from(d: ConvexFunctionDescriptor) -> Result<Self> {
        match d {
            ConvexFunctionDescriptor::Quadratic { a, b, c } => {
                ConvexFunction::quadratic(rows_to_matrix(&a)?, DVector::from_vec(b), c)
            }
            ConvexFunctionDescriptor::SmoothRadial { dim, profile } => {
                ConvexFunction::smooth_radial(dim, profile)
            }
            ConvexFunctionDescriptor::ConeBall {
                slope,
                radius,
                center,
            } => ConvexFunction::cone_ball(slope, radius, DVector::from_vec(center)),
            ConvexFunctionDescriptor::SupportPlusIndicator { p, q } => {
                let p: Polytope = p.try_into()?;
                let q: Option<Polytope> = q.map(TryInto::try_into).transpose()?;
                ConvexFunction::support_plus_indicator(p, q)
            }
            ConvexFunctionDescriptor::PiecewiseLinearSum { anchors } => {
                Ok(ConvexFunction::pl_sum(DVector::from_vec(anchors)))
            }
            ConvexFunctionDescriptor::EpiSum { operands } => {
                let ops = operands
                    .into_iter()
                    .map(ConvexFunction::try_from)
                    .collect::<Result<Vec<_>>>()?;
                let dim = same_dims(&ops)?;
                Ok(ConvexFunction::from_shape(dim, Shape::EpiSum { operands: ops }))
            }
            ConvexFunctionDescriptor::Sum { items } => {
                let items = items
                    .into_iter()
                    .map(ConvexFunction::try_from)
                    .collect::<Result<Vec<_>>>()?;
                let dim = same_dims(&items)?;
                Ok(ConvexFunction::from_shape(dim, Shape::SumOf { items }))
            }
            ConvexFunctionDescriptor::Max { items } => {
                let items = items
                    .into_iter()
                    .map(ConvexFunction::try_from)
                    .collect::<Result<Vec<_>>>()?;
                let dim = same_dims(&items)?;
                Ok(ConvexFunction::from_shape(dim, Shape::MaxOf { items }))
            }
            ConvexFunctionDescriptor::Min { items } => {
                let items = items
                    .into_iter()
                    .map(ConvexFunction::try_from)
                    .collect::<Result<Vec<_>>>()?;
                let dim = same_dims(&items)?;
                Ok(ConvexFunction::from_shape(dim, Shape::MinOf { items }))
            }
            ConvexFunctionDescriptor::GridSampled {
                lo,
                hi,
                shape,
                values,
            } => {
                let expected: usize = shape.iter().product();
                if values.len() != expected {
                    return Err(Error::Descriptor(format!(
                        "grid values length {} does not match shape product {expected}",
                        values.len()
                    )));
                }
                ConvexFunction::grid_sampled(GridFunction {
                    lo,
                    hi,
                    shape,
                    values,
                })
            }
            ConvexFunctionDescriptor::Embedded { frame, inner } => {
                let subspace = Subspace::new(rows_to_matrix(&frame)?)?;
                ConvexFunction::embedded(subspace, (*inner).try_into()?)
            }
            ConvexFunctionDescriptor::Cylinder { frame, inner } => {
                let subspace = Subspace::new(rows_to_matrix(&frame)?)?;
                ConvexFunction::cylinder(subspace, (*inner).try_into()?)
            }
            ConvexFunctionDescriptor::Projection { frame, inner } => {
                let subspace = Subspace::new(rows_to_matrix(&frame)?)?;
                let inner: ConvexFunction = (*inner).try_into()?;
                inner.project(&subspace)
            }
            ConvexFunctionDescriptor::Affine {
                inner,
                rotation,
                translation,
                linear,
                offset,
            } => {
                let inner: ConvexFunction = (*inner).try_into()?;
                let dim = inner.dim();
                let rotation = rotation.map(|r| rows_to_matrix(&r)).transpose()?;
                if let Some(r) = &rotation {
                    if r.nrows() != dim || r.ncols() != dim {
                        return Err(Error::Dimension {
                            expected: dim,
                            got: r.nrows(),
                        });
                    }
                }
                Ok(ConvexFunction::from_shape(
                    dim,
                    Shape::Affine {
                        inner: Box::new(inner),
                        rotation,
                        translation: translation.map(DVector::from_vec),
                        linear: linear.map(DVector::from_vec),
                        offset,
                    },
                ))
            }
        }
    }
}

fn same_dims(items: &[ConvexFunction]) -> Result<usize> {
    let dim = items
        .first()
        .ok_or_else(|| Error::Descriptor("composite needs at least one member".into()))?
        .dim();
    if items.iter().any(|u| u.dim() != dim) {
        return Err(Error::Dimension {
            expected: dim,
            got: items.iter().map(|u| u.dim()).find(|d| *d != dim).unwrap(),
        });
    }
    Ok(dim)
}

impl Serialize for ConvexFunction {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        descriptor_of(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ConvexFunction {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let d = ConvexFunctionDescriptor::deserialize(deserializer)?;
        ConvexFunction::try_from(d).map_err(serde::de::Error::custom)
    }
}
