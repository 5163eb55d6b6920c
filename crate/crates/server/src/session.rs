//! Transport-agnostic session state machine.
//!
//! A [`Session`] owns one dataset, its index, a compose group, per-view
//! encodings and the registry of connected clients. [`Session::handle_message`]
//! consumes one inbound message and returns the messages to deliver, so the
//! whole protocol can be driven without sockets.
//!
//! Binary frames carry no addressing, so every frame is announced by a text
//! record whose body has a `"frame"` field; the frame follows immediately on
//! the same connection. Clients announce inbound frames the same way
//! (`"frame": true`).

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{mpsc, Arc};

use msc_core::encoding::{EncodingRequest, Encodings};
use msc_core::selection::{combine, lasso_select, query_select, CombineMode, LassoPolygon};
use msc_core::view::{ComposeGroup, Delta, EventKind, SyncFlags, ViewEvent, ViewId, ViewportPx};
use msc_core::wire::{
    decode_camera, decode_selection, encode_camera, encode_points_chunk, encode_selection, peek_frame_type,
    ControlMessage, ControlType, FrameType,
};
use msc_core::{Camera, Column, Error, PointTable, Result, SelectionSet, SpatialIndex};
use serde::Deserialize;
use serde_json::{json, Value};

pub type ClientId = u64;

/// Bins used for the tooltip histograms in `dataset_info`.
pub const TOOLTIP_HISTOGRAM_BINS: usize = 16;

/// One transport message.
#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Text(String),
    Binary(Vec<u8>),
}

impl Message {
    pub fn control(&self) -> Option<ControlMessage> {
        match self {
            Message::Text(t) => ControlMessage::parse(t).ok(),
            Message::Binary(_) => None,
        }
    }
}

/// A selection change reported to programmatic observers.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionChange {
    pub view: ViewId,
    pub selection: SelectionSet,
}

#[derive(Debug)]
struct Pending {
    frame: FrameType,
    view: ViewId,
    mode: Option<CombineMode>,
}

#[derive(Debug, Default)]
struct Client {
    views: BTreeSet<ViewId>,
    pending: Option<Pending>,
}

pub struct Session {
    id: String,
    table: Arc<PointTable>,
    index: Arc<SpatialIndex>,
    group: ComposeGroup,
    encodings: BTreeMap<ViewId, Encodings>,
    clients: BTreeMap<ClientId, Client>,
    observers: Vec<mpsc::Sender<SelectionChange>>,
    columns_info: Value,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HelloBody {
    #[serde(default)]
    views: Option<Vec<ViewId>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SelectionBody {
    #[serde(default)]
    mode: Option<CombineMode>,
    #[serde(default)]
    indices: Option<Vec<i64>>,
    #[serde(default)]
    lasso: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    frame: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ViewBody {
    #[serde(default)]
    camera: Option<Camera>,
    #[serde(default)]
    frame: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HoverBody {
    #[serde(default)]
    row: Option<u32>,
    #[serde(default)]
    point: Option<(f64, f64)>,
    #[serde(default)]
    radius: Option<f64>,
}

fn body<T: for<'de> Deserialize<'de>>(v: &Value) -> Result<T> {
    let v = if v.is_null() { json!({}) } else { v.clone() };
    serde_json::from_value(v).map_err(|e| Error::Protocol(format!("malformed body: {e}")))
}

impl Session {
    pub fn new(
        id: impl Into<String>,
        table: Arc<PointTable>,
        views: Vec<(ViewId, ViewportPx)>,
        flags: SyncFlags,
        encodings: Encodings,
    ) -> Result<Self> {
        let index = Arc::new(SpatialIndex::build(&table));
        Session::with_index(id, table, index, views, flags, encodings)
    }

    pub fn with_index(
        id: impl Into<String>,
        table: Arc<PointTable>,
        index: Arc<SpatialIndex>,
        views: Vec<(ViewId, ViewportPx)>,
        flags: SyncFlags,
        encodings: Encodings,
    ) -> Result<Self> {
        let group = ComposeGroup::new(&table, views, flags)?;
        let encodings = group.view_ids().map(|id| (id.to_owned(), encodings.clone())).collect();
        let columns_info = describe_columns(&table)?;
        Ok(Session {
            id: id.into(),
            table,
            index,
            group,
            encodings,
            clients: BTreeMap::new(),
            observers: Vec::new(),
            columns_info,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn table(&self) -> &Arc<PointTable> {
        &self.table
    }

    pub fn index(&self) -> &Arc<SpatialIndex> {
        &self.index
    }

    pub fn group(&self) -> &ComposeGroup {
        &self.group
    }

    pub fn encodings(&self, view: &str) -> Result<&Encodings> {
        self.encodings.get(view).ok_or_else(|| Error::UnknownView(view.to_owned()))
    }

    pub fn selection(&self, view: &str) -> Result<&SelectionSet> {
        Ok(&self.view_state(view)?.selection)
    }

    /// Views a client subscribed to, if it has said hello.
    pub fn subscriptions(&self, client: ClientId) -> Option<Vec<&str>> {
        self.clients.get(&client).map(|c| c.views.iter().map(String::as_str).collect())
    }

    pub fn client_count(&self) -> usize {
        self.clients.len()
    }

    pub fn disconnect(&mut self, client: ClientId) {
        self.clients.remove(&client);
    }

    /// Registers a programmatic selection observer. Dropped receivers are
    /// pruned on the next change.
    pub fn observe_selection(&mut self) -> mpsc::Receiver<SelectionChange> {
        let (tx, rx) = mpsc::channel();
        self.observers.push(tx);
        rx
    }

    /// Programmatic selection, delivered to every subscribed client.
    pub fn set_selection(&mut self, view: &str, selection: SelectionSet) -> Result<Vec<(ClientId, Message)>> {
        let ev = ViewEvent {
            origin: view.to_owned(),
            kind: EventKind::Selection { selection },
        };
        self.apply(None, ev)
    }

    /// Programmatic selection by raw row indices.
    pub fn query_select(&mut self, view: &str, raw: &[i64]) -> Result<Vec<(ClientId, Message)>> {
        let sel = query_select(&self.table, raw)?;
        self.set_selection(view, sel)
    }

    /// Handles one inbound message. Failures produce a single error record
    /// addressed to `client`; session state is left untouched.
    pub fn handle_message(&mut self, client: ClientId, msg: Message) -> Vec<(ClientId, Message)> {
        let result = match msg {
            Message::Text(text) => match ControlMessage::parse(&text) {
                Ok(m) => {
                    let view = m.view.clone();
                    self.handle_control(client, m).map_err(|e| (view, e))
                }
                Err(e) => Err((None, e)),
            },
            Message::Binary(frame) => self.handle_frame(client, &frame).map_err(|e| (None, e)),
        };
        match result {
            Ok(out) => out,
            Err((view, e)) => {
                if let Some(c) = self.clients.get_mut(&client) {
                    c.pending = None;
                }
                vec![(client, Message::Text(ControlMessage::error(self.id.clone(), view, e.to_string()).to_text()))]
            }
        }
    }

    fn handle_control(&mut self, client: ClientId, m: ControlMessage) -> Result<Vec<(ClientId, Message)>> {
        if m.session != self.id {
            return Err(Error::Protocol(format!("unknown session `{}`", m.session)));
        }
        if m.kind == ControlType::Hello {
            return self.hello(client, &m);
        }
        let state = self
            .clients
            .get(&client)
            .ok_or_else(|| Error::Protocol("send hello before other messages".into()))?;
        if state.pending.is_some() {
            return Err(Error::Protocol("expected the announced binary frame".into()));
        }
        match m.kind {
            ControlType::SelectionUpdate => {
                let view = self.required_view(&m)?;
                let b: SelectionBody = body(&m.body)?;
                let sources = b.indices.is_some() as u8 + b.lasso.is_some() as u8 + b.frame as u8;
                if sources != 1 {
                    return Err(Error::Protocol(
                        "selection_update needs exactly one of `indices`, `lasso`, `frame`".into(),
                    ));
                }
                if b.frame {
                    self.set_pending(client, FrameType::Selection, view, b.mode);
                    return Ok(Vec::new());
                }
                let sel = match (b.indices, b.lasso) {
                    (Some(raw), _) => query_select(&self.table, &raw)?,
                    (_, Some(verts)) => lasso_select(&self.index, &self.table, &LassoPolygon::new(verts)?),
                    _ => unreachable!(),
                };
                self.select(client, view, sel, b.mode)
            }
            ControlType::ViewUpdate => {
                let view = self.required_view(&m)?;
                let b: ViewBody = body(&m.body)?;
                match (b.camera, b.frame) {
                    (Some(camera), false) => self.apply(
                        Some(client),
                        ViewEvent {
                            origin: view,
                            kind: EventKind::Camera { camera },
                        },
                    ),
                    (None, true) => {
                        self.set_pending(client, FrameType::Camera, view, None);
                        Ok(Vec::new())
                    }
                    _ => Err(Error::Protocol("view_update needs exactly one of `camera`, `frame`".into())),
                }
            }
            ControlType::HoverUpdate => {
                let view = self.required_view(&m)?;
                let b: HoverBody = body(&m.body)?;
                match (b.row, b.point) {
                    (row, None) => self.apply(
                        Some(client),
                        ViewEvent {
                            origin: view,
                            kind: EventKind::Hover { row },
                        },
                    ),
                    (None, Some((x, y))) => {
                        let radius = b.radius.unwrap_or(f64::INFINITY);
                        if !(x.is_finite() && y.is_finite()) || !(radius > 0.0) {
                            return Err(Error::Protocol("hover pick needs a finite point and positive radius".into()));
                        }
                        let row = self.index.pick_nearest(x, y, radius);
                        let mut out = self.apply(
                            Some(client),
                            ViewEvent {
                                origin: view.clone(),
                                kind: EventKind::Hover { row },
                            },
                        )?;
                        // The picker needs the resolved row for its tooltip.
                        out.insert(
                            0,
                            (
                                client,
                                self.text(
                                    ControlType::HoverUpdate,
                                    &view,
                                    json!({ "views": [view.clone()], "origin": view, "row": row, "picked": true }),
                                ),
                            ),
                        );
                        Ok(out)
                    }
                    _ => Err(Error::Protocol("hover_update takes `row` or `point`, not both".into())),
                }
            }
            ControlType::SetEncoding => self.set_encoding(&m),
            ControlType::DatasetInfo | ControlType::Error | ControlType::Hello => Err(Error::Protocol(format!(
                "clients may not send `{}`",
                serde_json::to_value(m.kind).unwrap().as_str().unwrap_or("?")
            ))),
        }
    }

    fn handle_frame(&mut self, client: ClientId, frame: &[u8]) -> Result<Vec<(ClientId, Message)>> {
        let state = self
            .clients
            .get_mut(&client)
            .ok_or_else(|| Error::Protocol("send hello before other messages".into()))?;
        let pending = state
            .pending
            .take()
            .ok_or_else(|| Error::Protocol("binary frame without a preceding announcement".into()))?;
        let kind = peek_frame_type(frame)?;
        if kind != pending.frame {
            return Err(Error::Protocol(format!(
                "announced a {:?} frame, got {:?}",
                pending.frame, kind
            )));
        }
        match kind {
            FrameType::Selection => {
                let sel = decode_selection(frame)?;
                sel.validate_for(self.table.row_count())?;
                self.select(client, pending.view, sel, pending.mode)
            }
            FrameType::Camera => {
                let camera = decode_camera(frame)?;
                self.apply(
                    Some(client),
                    ViewEvent {
                        origin: pending.view,
                        kind: EventKind::Camera { camera },
                    },
                )
            }
            FrameType::PointsChunk => Err(Error::Protocol("clients may not upload points".into())),
        }
    }

    fn set_pending(&mut self, client: ClientId, frame: FrameType, view: ViewId, mode: Option<CombineMode>) {
        if let Some(c) = self.clients.get_mut(&client) {
            c.pending = Some(Pending { frame, view, mode });
        }
    }

    fn select(
        &mut self,
        client: ClientId,
        view: ViewId,
        sel: SelectionSet,
        mode: Option<CombineMode>,
    ) -> Result<Vec<(ClientId, Message)>> {
        let selection = match mode {
            None => sel,
            Some(mode) => combine(&self.view_state(&view)?.selection, &sel, mode),
        };
        self.apply(
            Some(client),
            ViewEvent {
                origin: view,
                kind: EventKind::Selection { selection },
            },
        )
    }

    fn required_view(&self, m: &ControlMessage) -> Result<ViewId> {
        let view = m
            .view
            .clone()
            .ok_or_else(|| Error::Protocol("message needs a `view`".into()))?;
        self.view_state(&view)?;
        Ok(view)
    }

    fn view_state(&self, view: &str) -> Result<&msc_core::view::ViewState> {
        self.group.view(view).ok_or_else(|| Error::UnknownView(view.to_owned()))
    }

    fn text(&self, kind: ControlType, view: &str, body: Value) -> Message {
        Message::Text(ControlMessage::new(kind, self.id.clone(), Some(view.to_owned()), body).to_text())
    }

    fn hello(&mut self, client: ClientId, m: &ControlMessage) -> Result<Vec<(ClientId, Message)>> {
        let b: HelloBody = body(&m.body)?;
        let views: BTreeSet<ViewId> = match b.views {
            Some(v) if v.is_empty() => return Err(Error::Protocol("subscribe to at least one view".into())),
            Some(v) => v,
            None => self.group.view_ids().map(str::to_owned).collect(),
        }
        .into_iter()
        .collect();
        for v in &views {
            self.view_state(v)?;
        }

        let aux: Vec<&str> = self
            .table
            .columns()
            .map(|(n, _)| n)
            .filter(|n| *n != self.table.x_name() && *n != self.table.y_name())
            .collect();
        let chunk = encode_points_chunk(&self.table, None, &aux)?;
        let mut encodings = serde_json::Map::new();
        for (id, enc) in &self.encodings {
            encodings.insert(id.clone(), self.encoding_json(enc)?);
        }
        let view_list: Vec<Value> = self
            .group
            .views()
            .iter()
            .map(|v| {
                json!({
                    "id": v.id,
                    "width": v.viewport.width(),
                    "height": v.viewport.height(),
                    "camera": v.camera,
                    "visible_count": self.index.count_extent(v.camera.extent()),
                    "hover": v.hover,
                    "selection_count": v.selection.len(),
                })
            })
            .collect();
        let info = ControlMessage::new(
            ControlType::DatasetInfo,
            self.id.clone(),
            None,
            json!({
                "row_count": self.table.row_count(),
                "x": self.table.x_name(),
                "y": self.table.y_name(),
                "columns": self.columns_info,
                "views": view_list,
                "subscribed": views,
                "flags": self.group.flags(),
                "encodings": encodings,
                "chunk_columns": aux,
                "frame": "points",
            }),
        );
        let mut out = vec![(client, Message::Text(info.to_text())), (client, Message::Binary(chunk))];
        for v in &views {
            let sel = &self.view_state(v)?.selection;
            if !sel.is_empty() {
                out.push((
                    client,
                    self.text(
                        ControlType::SelectionUpdate,
                        v,
                        json!({ "views": [v], "origin": v, "count": sel.len(), "frame": "selection" }),
                    ),
                ));
                out.push((client, Message::Binary(encode_selection(sel))));
            }
        }
        self.clients.insert(client, Client { views, pending: None });
        Ok(out)
    }

    fn encoding_json(&self, enc: &Encodings) -> Result<Value> {
        let legend: Vec<Value> = enc
            .color
            .legend(&self.table)?
            .into_iter()
            .map(|(label, color)| json!([label, color]))
            .collect();
        let mut v = serde_json::to_value(enc).map_err(|e| Error::Invariant(e.to_string()))?;
        v["legend"] = Value::Array(legend);
        Ok(v)
    }

    fn set_encoding(&mut self, m: &ControlMessage) -> Result<Vec<(ClientId, Message)>> {
        let req: EncodingRequest = body(&m.body)?;
        let targets: Vec<ViewId> = match &m.view {
            Some(v) => {
                self.view_state(v)?;
                vec![v.clone()]
            }
            None => self.group.view_ids().map(str::to_owned).collect(),
        };
        let mut updated = Vec::with_capacity(targets.len());
        let mut channel = None;
        for v in &targets {
            let mut enc = self.encodings[v].clone();
            channel = Some(req.apply(&self.table, &mut enc)?);
            updated.push((v.clone(), enc));
        }
        let mut out = Vec::new();
        for (v, enc) in updated {
            let body = json!({ "channel": channel, "encodings": self.encoding_json(&enc)? });
            let msg = self.text(ControlType::SetEncoding, &v, body);
            for (&c, state) in &self.clients {
                if state.views.contains(&v) {
                    out.push((c, msg.clone()));
                }
            }
            self.encodings.insert(v, enc);
        }
        Ok(out)
    }

    /// Applies `ev`, commits the new group and builds the fan-out. `sender`
    /// never gets its own event echoed for the origin view.
    fn apply(&mut self, sender: Option<ClientId>, ev: ViewEvent) -> Result<Vec<(ClientId, Message)>> {
        let (next, deltas) = self.group.apply_event(&self.table, &ev)?;
        let origin_delta = match &ev.kind {
            EventKind::Selection { selection } => Delta::Selection {
                selection: selection.clone(),
            },
            EventKind::Camera { camera } => Delta::Camera { camera: *camera },
            EventKind::Hover { row } => Delta::Hover { row: *row },
        };
        let mut updates: Vec<(ViewId, Delta, bool)> = vec![(ev.origin.clone(), origin_delta, true)];
        updates.extend(deltas.into_iter().map(|(v, d)| (v, d, false)));

        let mut changed_selections = Vec::new();
        for (v, d, _) in &updates {
            if let Delta::Selection { selection } = d {
                if self.group.view(v).map(|s| &s.selection) != Some(selection) {
                    changed_selections.push(SelectionChange {
                        view: v.clone(),
                        selection: selection.clone(),
                    });
                }
            }
        }
        self.group = next;

        let mut out = Vec::new();
        for (&client, state) in &self.clients {
            // Identical deltas for several views go out as one message.
            let mut grouped: Vec<(&Delta, Vec<&str>)> = Vec::new();
            for (v, d, echo) in &updates {
                if !state.views.contains(v) || (*echo && Some(client) == sender) {
                    continue;
                }
                match grouped.iter_mut().find(|(g, _)| *g == d) {
                    Some((_, views)) => views.push(v),
                    None => grouped.push((d, vec![v])),
                }
            }
            for (d, views) in grouped {
                out.extend(self.delta_messages(&ev.origin, d, &views).into_iter().map(|m| (client, m)));
            }
        }

        self.observers
            .retain(|tx| changed_selections.iter().all(|c| tx.send(c.clone()).is_ok()));
        Ok(out)
    }

    fn delta_messages(&self, origin: &str, d: &Delta, views: &[&str]) -> Vec<Message> {
        match d {
            Delta::Selection { selection } => vec![
                self.text(
                    ControlType::SelectionUpdate,
                    origin,
                    json!({ "views": views, "origin": origin, "count": selection.len(), "frame": "selection" }),
                ),
                Message::Binary(encode_selection(selection)),
            ],
            Delta::Camera { camera } => vec![
                self.text(
                    ControlType::ViewUpdate,
                    origin,
                    json!({
                        "views": views,
                        "origin": origin,
                        "camera": camera,
                        "visible_count": self.index.count_extent(camera.extent()),
                        "frame": "camera",
                    }),
                ),
                Message::Binary(encode_camera(camera)),
            ],
            Delta::Hover { row } => vec![self.text(
                ControlType::HoverUpdate,
                origin,
                json!({ "views": views, "origin": origin, "row": row }),
            )],
        }
    }
}

/// Column descriptions for `dataset_info`, including the tooltip
/// distributions.
fn describe_columns(table: &PointTable) -> Result<Value> {
    let mut cols = Vec::new();
    for (name, col) in table.columns() {
        let mut c = json!({
            "name": name,
            "kind": table.infer_channel_kind(name)?,
            "stats": col.stats(),
        });
        match col {
            Column::Categorical(cat) => {
                c["labels"] = json!(cat.labels());
                c["frequencies"] = json!(table.category_frequencies(name)?);
            }
            Column::Real(_) => {
                let s = col.stats();
                c["histogram"] = json!({
                    "min": s.min,
                    "max": s.max,
                    "counts": table.histogram(name, TOOLTIP_HISTOGRAM_BINS)?,
                });
            }
        }
        cols.push(c);
    }
    Ok(Value::Array(cols))
}
