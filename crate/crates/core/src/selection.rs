//! Point selections: lasso polygons, explicit index lists and set algebra.

use serde::{Deserialize, Serialize};

use crate::data::PointTable;
use crate::error::{Error, Result};
use crate::index::{Extent, SpatialIndex};

/// Sorted, deduplicated row indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct SelectionSet(Vec<u32>);

impl SelectionSet {
    pub fn empty() -> Self {
        SelectionSet(Vec::new())
    }

    /// Wraps indices that are already strictly increasing.
    pub fn from_sorted(indices: Vec<u32>) -> Result<Self> {
        if let Some(w) = indices.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Invariant(format!(
                "selection not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        Ok(SelectionSet(indices))
    }

    /// Sorts and deduplicates arbitrary indices.
    pub fn from_unsorted(mut indices: Vec<u32>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        SelectionSet(indices)
    }

    pub fn indices(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, row: u32) -> bool {
        self.0.binary_search(&row).is_ok()
    }

    /// Checks that every index addresses a row of a table with `row_count`
    /// rows.
    pub fn validate_for(&self, row_count: usize) -> Result<()> {
        match self.0.last() {
            Some(&last) if last as usize >= row_count => Err(Error::OutOfRange {
                index: last as i64,
                row_count,
            }),
            _ => Ok(()),
        }
    }

    pub fn into_vec(self) -> Vec<u32> {
        self.0
    }
}

impl TryFrom<Vec<u32>> for SelectionSet {
    type Error = Error;

    fn try_from(v: Vec<u32>) -> Result<Self> {
        SelectionSet::from_sorted(v)
    }
}

impl From<SelectionSet> for Vec<u32> {
    fn from(s: SelectionSet) -> Self {
        s.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombineMode {
    Union,
    Intersection,
    Difference,
}

/// Closed freehand polygon in data space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoPolygon {
    vertices: Vec<(f64, f64)>,
}

impl LassoPolygon {
    pub fn new(vertices: Vec<(f64, f64)>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidPolygon(format!(
                "need at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if let Some(i) = vertices
            .iter()
            .position(|(x, y)| !x.is_finite() || !y.is_finite())
        {
            return Err(Error::InvalidPolygon(format!("vertex {i} is not finite")));
        }
        Ok(LassoPolygon { vertices })
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    pub fn bounding_extent(&self) -> Extent {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self.vertices.iter().copied().unzip();
        Extent::bounding(&xs, &ys).expect("polygon has vertices")
    }

    /// Even-odd test against a rightward horizontal ray. An edge counts when
    /// exactly one endpoint lies strictly above the ray, which makes vertex
    /// hits count once.
    pub fn contains(&self, px: f64, py: f64) -> bool {
        let v = &self.vertices;
        let mut inside = false;
        let mut j = v.len() - 1;
        for i in 0..v.len() {
            let (xi, yi) = v[i];
            let (xj, yj) = v[j];
            if (yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi {
                inside = !inside;
            }
            j = i;
        }
        inside
    }
}

/// Points inside `poly` under the even-odd rule. Candidates come from the
/// index's extent query over the polygon's bounding box.
pub fn lasso_select(index: &SpatialIndex, table: &PointTable, poly: &LassoPolygon) -> SelectionSet {
    let (xs, ys) = (table.x(), table.y());
    let hits: Vec<u32> = index
        .query_extent(&poly.bounding_extent())
        .into_iter()
        .filter(|&row| poly.contains(xs[row as usize], ys[row as usize]))
        .collect();
    SelectionSet(hits)
}

/// Validates caller-supplied indices against the table and normalizes them.
pub fn query_select(table: &PointTable, raw_indices: &[i64]) -> Result<SelectionSet> {
    let row_count = table.row_count();
    let mut out = Vec::with_capacity(raw_indices.len());
    for &i in raw_indices {
        if i < 0 || i as u64 >= row_count as u64 {
            return Err(Error::OutOfRange {
                index: i,
                row_count,
            });
        }
        out.push(i as u32);
    }
    Ok(SelectionSet::from_unsorted(out))
}

pub fn combine(a: &SelectionSet, b: &SelectionSet, mode: CombineMode) -> SelectionSet {
    let (a, b) = (&a.0, &b.0);
    let mut out = Vec::with_capacity(match mode {
        CombineMode::Union => a.len() + b.len(),
        CombineMode::Intersection => a.len().min(b.len()),
        CombineMode::Difference => a.len(),
    });
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                if mode != CombineMode::Intersection {
                    out.push(a[i]);
                }
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                if mode == CombineMode::Union {
                    out.push(b[j]);
                }
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                if mode != CombineMode::Difference {
                    out.push(a[i]);
                }
                i += 1;
                j += 1;
            }
        }
    }
    if mode != CombineMode::Intersection {
        out.extend_from_slice(&a[i..]);
    }
    if mode == CombineMode::Union {
        out.extend_from_slice(&b[j..]);
    }
    SelectionSet(out)
}
