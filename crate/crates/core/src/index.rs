//! Quadtree over point positions.
//!
//! Nodes split their extent at the midpoint of each axis. Ownership uses
//! half-open intervals (`[min, mid)` and `[mid, max)`), except that the
//! root's max edges are closed, so every point lands in exactly one leaf.
//! Queries use closed containment on all edges.
//!
//! Each node stores its subtree point count, so [`SpatialIndex::count_extent`]
//! only descends into nodes that straddle the query boundary.

use serde::{Deserialize, Serialize};

use crate::data::PointTable;
use crate::error::{Error, Result};

pub const DEFAULT_LEAF_CAPACITY: usize = 64;
pub const MAX_DEPTH: u32 = 32;

/// Axis-aligned data-space rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extent {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Extent {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let e = Extent {
            x_min,
            x_max,
            y_min,
            y_max,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::InvalidExtent(format!("non-finite bound in {self:?}")));
        }
        if self.x_min > self.x_max || self.y_min > self.y_max {
            return Err(Error::InvalidExtent(format!("min exceeds max in {self:?}")));
        }
        Ok(())
    }

    /// Bounding box of a point set, or `None` when empty.
    pub fn bounding(xs: &[f64], ys: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let mut e = Extent {
            x_min: f64::INFINITY,
            x_max: f64::NEG_INFINITY,
            y_min: f64::INFINITY,
            y_max: f64::NEG_INFINITY,
        };
        for (&x, &y) in xs.iter().zip(ys) {
            e.x_min = e.x_min.min(x);
            e.x_max = e.x_max.max(x);
            e.y_min = e.y_min.min(y);
            e.y_max = e.y_max.max(y);
        }
        Some(e)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn center(&self) -> (f64, f64) {
        (
            self.x_min + 0.5 * self.width(),
            self.y_min + 0.5 * self.height(),
        )
    }

    /// Closed containment.
    #[inline]
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    pub fn contains_extent(&self, other: &Extent) -> bool {
        other.x_min >= self.x_min
            && other.x_max <= self.x_max
            && other.y_min >= self.y_min
            && other.y_max <= self.y_max
    }

    pub fn intersects(&self, other: &Extent) -> bool {
        self.x_min <= other.x_max
            && other.x_min <= self.x_max
            && self.y_min <= other.y_max
            && other.y_min <= self.y_max
    }

    /// Squared distance from a point to the rectangle (zero inside).
    fn distance_sq(&self, x: f64, y: f64) -> f64 {
        let dx = (self.x_min - x).max(0.0).max(x - self.x_max);
        let dy = (self.y_min - y).max(0.0).max(y - self.y_max);
        dx * dx + dy * dy
    }
}

#[derive(Debug, Clone)]
enum NodeKind {
    /// Range into the index's permuted point arrays.
    Leaf { start: u32, end: u32 },
    Internal { children: [u32; 4] },
}

#[derive(Debug, Clone)]
struct Node {
    extent: Extent,
    count: u32,
    kind: NodeKind,
}

/// Read-only quadtree over a table's coordinates.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    nodes: Vec<Node>,
    leaf_capacity: usize,
    /// Row indices grouped by leaf; every node's points are contiguous.
    rows: Vec<u32>,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl SpatialIndex {
    pub fn build(table: &PointTable) -> Self {
        Self::with_leaf_capacity(table, DEFAULT_LEAF_CAPACITY)
    }

    pub fn with_leaf_capacity(table: &PointTable, leaf_capacity: usize) -> Self {
        let leaf_capacity = leaf_capacity.max(1);
        let n = table.row_count();
        assert!(n <= u32::MAX as usize, "row count exceeds u32 range");
        let mut index = SpatialIndex {
            nodes: Vec::new(),
            leaf_capacity,
            rows: (0..n as u32).collect(),
            xs: table.x().to_vec(),
            ys: table.y().to_vec(),
        };
        let root_extent = Extent::bounding(table.x(), table.y()).unwrap_or(Extent {
            x_min: 0.0,
            x_max: 0.0,
            y_min: 0.0,
            y_max: 0.0,
        });
        index.build_node(root_extent, 0, n, 0);
        index
    }

    fn build_node(&mut self, extent: Extent, start: usize, end: usize, depth: u32) -> u32 {
        let id = self.nodes.len() as u32;
        let count = (end - start) as u32;
        if end - start <= self.leaf_capacity || depth >= MAX_DEPTH {
            self.nodes.push(Node {
                extent,
                count,
                kind: NodeKind::Leaf {
                    start: start as u32,
                    end: end as u32,
                },
            });
            return id;
        }
        self.nodes.push(Node {
            extent,
            count,
            kind: NodeKind::Internal { children: [0; 4] },
        });

        let (mx, my) = extent.center();
        // Quadrant order: SW, SE, NW, NE.
        let split_y = self.partition(start, end, |_, y| y < my);
        let split_sw = self.partition(start, split_y, |x, _| x < mx);
        let split_nw = self.partition(split_y, end, |x, _| x < mx);

        let quads = [
            (Extent { x_max: mx, y_max: my, ..extent }, start, split_sw),
            (Extent { x_min: mx, y_max: my, ..extent }, split_sw, split_y),
            (Extent { x_max: mx, y_min: my, ..extent }, split_y, split_nw),
            (Extent { x_min: mx, y_min: my, ..extent }, split_nw, end),
        ];
        let mut children = [0u32; 4];
        for (slot, (child_extent, s, e)) in children.iter_mut().zip(quads) {
            *slot = self.build_node(child_extent, s, e, depth + 1);
        }
        self.nodes[id as usize].kind = NodeKind::Internal { children };
        id
    }

    /// In-place partition of `start..end`; returns the first
    /// index whose point fails `pred`.
    fn partition(&mut self, start: usize, end: usize, pred: impl Fn(f64, f64) -> bool) -> usize {
        let mut lo = start;
        let mut hi = end;
        while lo < hi {
            if pred(self.xs[lo], self.ys[lo]) {
                lo += 1;
            } else {
                hi -= 1;
                self.rows.swap(lo, hi);
                self.xs.swap(lo, hi);
                self.ys.swap(lo, hi);
            }
        }
        lo
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn leaf_capacity(&self) -> usize {
        self.leaf_capacity
    }

    /// Bounding extent of the indexed points.
    pub fn root_extent(&self) -> Extent {
        self.nodes[0].extent
    }

    /// Row indices of points inside `e` (closed on all edges), ascending.
    pub fn query_extent(&self, e: &Extent) -> Vec<u32> {
        let mut out = Vec::new();
        if self.is_empty() {
            return out;
        }
        if e.contains_extent(&self.root_extent()) {
            return (0..self.rows.len() as u32).collect();
        }
        let mut stack = vec![0u32];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id as usize];
            if node.count == 0 || !node.extent.intersects(e) {
                continue;
            }
            let (start, end) = match node.kind {
                NodeKind::Internal { children } => {
                    if e.contains_extent(&node.extent) {
                        let (s, t) = self.span(id);
                        out.extend_from_slice(&self.rows[s..t]);
                    } else {
                        stack.extend_from_slice(&children);
                    }
                    continue;
                }
                NodeKind::Leaf { start, end } => (start as usize, end as usize),
            };
            if e.contains_extent(&node.extent) {
                out.extend_from_slice(&self.rows[start..end]);
            } else {
                for i in start..end {
                    if e.contains(self.xs[i], self.ys[i]) {
                        out.push(self.rows[i]);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Number of points inside `e`; equal to `query_extent(e).len()`.
    pub fn count_extent(&self, e: &Extent) -> usize {
        if self.is_empty() {
            return 0;
        }
        let mut total = 0usize;
        let mut stack = vec![0u32];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id as usize];
            if node.count == 0 || !node.extent.intersects(e) {
                continue;
            }
            if e.contains_extent(&node.extent) {
                total += node.count as usize;
                continue;
            }
            match node.kind {
                NodeKind::Internal { children } => stack.extend_from_slice(&children),
                NodeKind::Leaf { start, end } => {
                    total += (start as usize..end as usize)
                        .filter(|&i| e.contains(self.xs[i], self.ys[i]))
                        .count();
                }
            }
        }
        total
    }

    /// Euclidean-nearest point within `max_dist` of `(x, y)`. Ties go to the
    /// smallest row index.
    pub fn pick_nearest(&self, x: f64, y: f64, max_dist: f64) -> Option<u32> {
        if self.is_empty() || !(max_dist > 0.0) || !x.is_finite() || !y.is_finite() {
            return None;
        }
        let limit = max_dist * max_dist;
        let mut best: Option<(f64, u32)> = None;
        let mut stack = vec![0u32];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id as usize];
            if node.count == 0 {
                continue;
            }
            let bound = best.map_or(limit, |(d, _)| d);
            if node.extent.distance_sq(x, y) > bound {
                continue;
            }
            match node.kind {
                NodeKind::Internal { children } => {
                    // Push farthest first so the nearest child is visited next.
                    let mut order = children.map(|c| (self.nodes[c as usize].extent.distance_sq(x, y), c));
                    order.sort_by(|a, b| b.0.total_cmp(&a.0));
                    stack.extend(order.iter().map(|&(_, c)| c));
                }
                NodeKind::Leaf { start, end } => {
                    for i in start as usize..end as usize {
                        let dx = self.xs[i] - x;
                        let dy = self.ys[i] - y;
                        let d = dx * dx + dy * dy;
                        if d > limit {
                            continue;
                        }
                        let row = self.rows[i];
                        let better = match best {
                            None => true,
                            Some((bd, br)) => d < bd || (d == bd && row < br),
                        };
                        if better {
                            best = Some((d, row));
                        }
                    }
                }
            }
        }
        best.map(|(_, row)| row)
    }

    /// Contiguous range of `rows` covered by a node.
    fn span(&self, id: u32) -> (usize, usize) {
        let mut first = id;
        let mut last = id;
        loop {
            match self.nodes[first as usize].kind {
                NodeKind::Leaf { start, .. } => {
                    let s = start as usize;
                    loop {
                        match self.nodes[last as usize].kind {
                            NodeKind::Leaf { end, .. } => return (s, end as usize),
                            NodeKind::Internal { children } => last = children[3],
                        }
                    }
                }
                NodeKind::Internal { children } => first = children[0],
            }
        }
    }

    /// Walks the tree checking structural invariants; returns a description
    /// of the first violation found.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let mut seen = vec![false; self.rows.len()];
        self.check_node(0, [true, true], &mut seen)?;
        if let Some(row) = seen.iter().position(|s| !s) {
            return Err(format!("row {row} not owned by any leaf"));
        }
        if self.nodes[0].count as usize != self.rows.len() {
            return Err("root count differs from row count".into());
        }
        Ok(())
    }

    /// `closed_max` flags whether this node's x/y max edges are closed.
    fn check_node(&self, id: u32, closed_max: [bool; 2], seen: &mut [bool]) -> std::result::Result<u32, String> {
        let node = &self.nodes[id as usize];
        match node.kind {
            NodeKind::Leaf { start, end } => {
                if end - start != node.count {
                    return Err(format!("leaf {id} count mismatch"));
                }
                let e = node.extent;
                for i in start as usize..end as usize {
                    let (x, y) = (self.xs[i], self.ys[i]);
                    let in_x = x >= e.x_min && (x < e.x_max || (closed_max[0] && x == e.x_max));
                    let in_y = y >= e.y_min && (y < e.y_max || (closed_max[1] && y == e.y_max));
                    if !in_x || !in_y {
                        return Err(format!("point ({x}, {y}) outside leaf {id} extent {e:?}"));
                    }
                    let row = self.rows[i] as usize;
                    if seen[row] {
                        return Err(format!("row {row} owned twice"));
                    }
                    seen[row] = true;
                }
                Ok(node.count)
            }
            NodeKind::Internal { children } => {
                let (mx, my) = node.extent.center();
                let e = node.extent;
                let expected = [
                    Extent { x_max: mx, y_max: my, ..e },
                    Extent { x_min: mx, y_max: my, ..e },
                    Extent { x_max: mx, y_min: my, ..e },
                    Extent { x_min: mx, y_min: my, ..e },
                ];
                let mut sum = 0;
                for (q, &c) in children.iter().enumerate() {
                    if self.nodes[c as usize].extent != expected[q] {
                        return Err(format!("child {c} of {id} does not tile its parent"));
                    }
                    let child_closed = [
                        closed_max[0] && q % 2 == 1,
                        closed_max[1] && q >= 2,
                    ];
                    sum += self.check_node(c, child_closed, seen)?;
                }
                if sum != node.count {
                    return Err(format!("node {id} count {} != children sum {sum}", node.count));
                }
                Ok(sum)
            }
        }
    }

    /// Point counts of the root's four children (SW, SE, NW, NE), or `None`
    /// when the root is a leaf.
    pub fn root_child_counts(&self) -> Option<[u32; 4]> {
        match self.nodes.first()?.kind {
            NodeKind::Internal { children } => Some(children.map(|c| self.nodes[c as usize].count)),
            NodeKind::Leaf { .. } => None,
        }
    }

    pub fn root_count(&self) -> usize {
        self.nodes[0].count as usize
    }
}
