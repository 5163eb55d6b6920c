//! Cameras, density-adaptive opacity and the compose-group state machine.

use serde::{Deserialize, Serialize};

use crate::data::PointTable;
use crate::error::{Error, Result};
use crate::index::Extent;
use crate::selection::SelectionSet;

pub const DEFAULT_ZOOM_PADDING: f64 = 0.1;

/// Smallest nonzero 8-bit alpha.
pub const MIN_ALPHA: f64 = 1.0 / 255.0;

/// Data-space field of view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Extent", into = "Extent")]
pub struct Camera {
    extent: Extent,
}

impl Camera {
    pub fn new(extent: Extent) -> Result<Self> {
        extent.validate()?;
        if !(extent.width() > 0.0 && extent.height() > 0.0) {
            return Err(Error::InvalidExtent(format!(
                "camera needs positive spans, got {extent:?}"
            )));
        }
        Ok(Camera { extent })
    }

    pub fn extent(&self) -> &Extent {
        &self.extent
    }
}

impl TryFrom<Extent> for Camera {
    type Error = Error;

    fn try_from(e: Extent) -> Result<Self> {
        Camera::new(e)
    }
}

impl From<Camera> for Extent {
    fn from(c: Camera) -> Self {
        c.extent
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ViewportPx {
    width_px: u32,
    height_px: u32,
}

impl ViewportPx {
    pub fn new(width_px: u32, height_px: u32) -> Result<Self> {
        if width_px == 0 || height_px == 0 {
            return Err(Error::Config(format!(
                "viewport must be at least 1x1, got {width_px}x{height_px}"
            )));
        }
        Ok(ViewportPx {
            width_px,
            height_px,
        })
    }

    pub fn width(&self) -> u32 {
        self.width_px
    }

    pub fn height(&self) -> u32 {
        self.height_px
    }

    pub fn aspect(&self) -> f64 {
        self.width_px as f64 / self.height_px as f64
    }
}

/// Point alpha for the current field of view.
///
/// The overdraw factor `rho = N * s^2 / (W * H)` estimates how many square
/// point footprints cover each pixel. Alpha is 1 while `rho <= 1` and
/// `1 / rho` beyond that, floored at the smallest nonzero 8-bit alpha.
pub fn dynamic_opacity(visible_count: usize, point_size_px: f64, vp: ViewportPx) -> f64 {
    let area = vp.width_px as f64 * vp.height_px as f64;
    let rho = visible_count as f64 * point_size_px * point_size_px / area;
    if rho <= 1.0 {
        1.0
    } else {
        rho.recip().max(MIN_ALPHA)
    }
}

/// Camera that frames the selected points at the viewport's aspect ratio.
///
/// Zero-width selection spans become 10% of the data span on that axis (or
/// 1.0 when the data is flat too); each side is then padded by `padding`
/// times the span, and finally the shorter axis is widened symmetrically to
/// match the viewport aspect.
pub fn fit_camera_to_points(
    table: &PointTable,
    sel: &SelectionSet,
    vp: ViewportPx,
    padding: f64,
) -> Result<Camera> {
    if sel.is_empty() {
        return Err(Error::EmptySelection);
    }
    if !(padding >= 0.0 && padding.is_finite()) {
        return Err(Error::Config(format!("padding must be >= 0, got {padding}")));
    }
    sel.validate_for(table.row_count())?;
    let (xs, ys) = (table.x(), table.y());
    let mut bbox = Extent {
        x_min: f64::INFINITY,
        x_max: f64::NEG_INFINITY,
        y_min: f64::INFINITY,
        y_max: f64::NEG_INFINITY,
    };
    for &row in sel.indices() {
        let (x, y) = (xs[row as usize], ys[row as usize]);
        bbox.x_min = bbox.x_min.min(x);
        bbox.x_max = bbox.x_max.max(x);
        bbox.y_min = bbox.y_min.min(y);
        bbox.y_max = bbox.y_max.max(y);
    }
    let data = Extent::bounding(xs, ys).expect("selection is nonempty");

    let (cx, cy) = bbox.center();
    let mut w = bbox.width();
    let mut h = bbox.height();
    if w == 0.0 {
        w = if data.width() > 0.0 { 0.1 * data.width() } else { 1.0 };
    }
    if h == 0.0 {
        h = if data.height() > 0.0 { 0.1 * data.height() } else { 1.0 };
    }
    let (mut x_min, mut x_max) = (cx - w / 2.0, cx + w / 2.0);
    let (mut y_min, mut y_max) = (cy - h / 2.0, cy + h / 2.0);
    if bbox.width() > 0.0 {
        (x_min, x_max) = (bbox.x_min, bbox.x_max);
    }
    if bbox.height() > 0.0 {
        (y_min, y_max) = (bbox.y_min, bbox.y_max);
    }
    x_min -= padding * w;
    x_max += padding * w;
    y_min -= padding * h;
    y_max += padding * h;

    let target = vp.aspect();
    let (pw, ph) = (x_max - x_min, y_max - y_min);
    if pw / ph < target {
        let grow = (ph * target - pw) / 2.0;
        x_min -= grow;
        x_max += grow;
    } else if pw / ph > target {
        let grow = (pw / target - ph) / 2.0;
        y_min -= grow;
        y_max += grow;
    }
    Camera::new(Extent {
        x_min,
        x_max,
        y_min,
        y_max,
    })
}

/// Camera framing the whole table at the viewport's aspect ratio, used as a
/// view's initial camera.
pub fn full_data_camera(table: &PointTable, vp: ViewportPx) -> Camera {
    let all = SelectionSet::from_sorted((0..table.row_count() as u32).collect())
        .expect("ascending range");
    match fit_camera_to_points(table, &all, vp, 0.0) {
        Ok(cam) => cam,
        Err(_) => Camera::new(Extent {
            x_min: -0.5 * vp.aspect(),
            x_max: 0.5 * vp.aspect(),
            y_min: -0.5,
            y_max: 0.5,
        })
        .expect("unit camera"),
    }
}

pub type ViewId = String;

#[derive(Debug, Clone, PartialEq)]
pub struct ViewState {
    pub id: ViewId,
    pub viewport: ViewportPx,
    pub camera: Camera,
    pub selection: SelectionSet,
    pub hover: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SyncFlags {
    #[serde(default)]
    pub sync_selection: bool,
    #[serde(default)]
    pub sync_hover: bool,
    #[serde(default)]
    pub sync_view: bool,
    #[serde(default)]
    pub zoom_on_selection: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EventKind {
    Selection { selection: SelectionSet },
    Camera { camera: Camera },
    Hover { row: Option<u32> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewEvent {
    pub origin: ViewId,
    pub kind: EventKind,
}

/// A state change to deliver to one view.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Delta {
    Selection { selection: SelectionSet },
    Camera { camera: Camera },
    Hover { row: Option<u32> },
}

/// Views plus their synchronization flags.
#[derive(Debug, Clone, PartialEq)]
pub struct ComposeGroup {
    views: Vec<ViewState>,
    flags: SyncFlags,
    padding: f64,
}

impl ComposeGroup {
    /// Every view starts framing the whole table with an empty selection.
    pub fn new(table: &PointTable, views: Vec<(ViewId, ViewportPx)>, flags: SyncFlags) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::Config("a compose group needs at least one view".into()));
        }
        for (i, (id, _)) in views.iter().enumerate() {
            if views[..i].iter().any(|(other, _)| other == id) {
                return Err(Error::Config(format!("duplicate view id `{id}`")));
            }
        }
        let shared = full_data_camera(table, views[0].1);
        let views = views
            .into_iter()
            .map(|(id, viewport)| ViewState {
                camera: if flags.sync_view {
                    shared
                } else {
                    full_data_camera(table, viewport)
                },
                id,
                viewport,
                selection: SelectionSet::empty(),
                hover: None,
            })
            .collect();
        Ok(ComposeGroup {
            views,
            flags,
            padding: DEFAULT_ZOOM_PADDING,
        })
    }

    pub fn with_padding(mut self, padding: f64) -> Self {
        self.padding = padding;
        self
    }

    pub fn flags(&self) -> SyncFlags {
        self.flags
    }

    pub fn views(&self) -> &[ViewState] {
        &self.views
    }

    pub fn view(&self, id: &str) -> Option<&ViewState> {
        self.views.iter().find(|v| v.id == id)
    }

    pub fn view_ids(&self) -> impl Iterator<Item = &str> {
        self.views.iter().map(|v| v.id.as_str())
    }

    fn position(&self, id: &str) -> Result<usize> {
        self.views
            .iter()
            .position(|v| v.id == id)
            .ok_or_else(|| Error::UnknownView(id.to_owned()))
    }

    /// Applies one event, returning the new group and the deltas each
    /// affected view must receive. The group itself is not modified.
    pub fn apply_event(&self, table: &PointTable, ev: &ViewEvent) -> Result<(ComposeGroup, Vec<(ViewId, Delta)>)> {
        let origin = self.position(&ev.origin)?;
        let mut next = self.clone();
        let mut deltas = Vec::new();
        match &ev.kind {
            EventKind::Selection { selection } => {
                selection.validate_for(table.row_count())?;
                let targets = next.targets(origin, self.flags.sync_selection);
                for &i in &targets {
                    next.views[i].selection = selection.clone();
                    if i != origin {
                        deltas.push((
                            next.views[i].id.clone(),
                            Delta::Selection {
                                selection: selection.clone(),
                            },
                        ));
                    }
                }
                if self.flags.zoom_on_selection && !selection.is_empty() {
                    let refit = if self.flags.sync_view {
                        // Synced cameras must stay identical, so fit once
                        // against the origin's viewport and share it.
                        let cam = fit_camera_to_points(table, selection, next.views[origin].viewport, self.padding)?;
                        (0..next.views.len()).map(|i| (i, cam)).collect::<Vec<_>>()
                    } else {
                        targets
                            .iter()
                            .map(|&i| {
                                fit_camera_to_points(table, selection, next.views[i].viewport, self.padding)
                                    .map(|cam| (i, cam))
                            })
                            .collect::<Result<Vec<_>>>()?
                    };
                    for (i, cam) in refit {
                        next.views[i].camera = cam;
                        deltas.push((next.views[i].id.clone(), Delta::Camera { camera: cam }));
                    }
                }
            }
            EventKind::Camera { camera } => {
                for i in next.targets(origin, self.flags.sync_view) {
                    next.views[i].camera = *camera;
                    if i != origin {
                        deltas.push((next.views[i].id.clone(), Delta::Camera { camera: *camera }));
                    }
                }
            }
            EventKind::Hover { row } => {
                if let Some(r) = row {
                    if *r as usize >= table.row_count() {
                        return Err(Error::OutOfRange {
                            index: *r as i64,
                            row_count: table.row_count(),
                        });
                    }
                }
                for i in next.targets(origin, self.flags.sync_hover) {
                    next.views[i].hover = *row;
                    if i != origin {
                        deltas.push((next.views[i].id.clone(), Delta::Hover { row: *row }));
                    }
                }
            }
        }
        Ok((next, deltas))
    }

    fn targets(&self, origin: usize, synced: bool) -> Vec<usize> {
        if synced {
            (0..self.views.len()).collect()
        } else {
            vec![origin]
        }
    }

    /// Checks the equal-state invariants implied by the sync flags.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let first = &self.views[0];
        for v in &self.views[1..] {
            if self.flags.sync_selection && v.selection != first.selection {
                return Err(format!("selection of `{}` differs from `{}`", v.id, first.id));
            }
            if self.flags.sync_view && v.camera != first.camera {
                return Err(format!("camera of `{}` differs from `{}`", v.id, first.id));
            }
            if self.flags.sync_hover && v.hover != first.hover {
                return Err(format!("hover of `{}` differs from `{}`", v.id, first.id));
            }
        }
        Ok(())
    }
}
