//! HTTP surface: the `/ws` socket endpoint, a session listing, and static
//! files for the browser bundle.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::ws::{Message as WsMessage, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::{Html, IntoResponse};
use axum::routing::get;
use axum::{Json, Router};
use futures_util::{SinkExt, StreamExt};
use msc_core::wire::{ControlMessage, ControlType};
use tokio::net::TcpListener;
use tokio::sync::mpsc;
use tower_http::services::{ServeDir, ServeFile};

use crate::hub::{Hub, SessionHandle};
use crate::session::Message;

const PLACEHOLDER_INDEX: &str = "<!doctype html>\n<html><head><meta charset=\"utf-8\"><title>msc</title></head>\n<body><p>No frontend bundle configured. Connect a client to <code>/ws</code>.</p></body></html>\n";

/// Builds the router. With `assets`, unknown paths fall back to
/// `assets/index.html` so client-side routes resolve.
pub fn router(hub: Arc<Hub>, assets: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/ws", get(ws_upgrade))
        .route("/api/sessions", get(list_sessions))
        .with_state(hub);
    match assets {
        Some(dir) => {
            let index = dir.join("index.html");
            api.fallback_service(ServeDir::new(dir).fallback(ServeFile::new(index)))
        }
        None => api.fallback(|| async { Html(PLACEHOLDER_INDEX) }),
    }
}

/// Serves `router` on `listener` until the process exits.
pub async fn serve(listener: TcpListener, router: Router) -> std::io::Result<()> {
    axum::serve(listener, router.into_make_service_with_connect_info::<SocketAddr>()).await
}

async fn list_sessions(State(hub): State<Arc<Hub>>) -> Json<Vec<String>> {
    Json(hub.session_ids())
}

async fn ws_upgrade(State(hub): State<Arc<Hub>>, ws: WebSocketUpgrade) -> impl IntoResponse {
    ws.on_upgrade(move |socket| connection(hub, socket))
}

async fn connection(hub: Arc<Hub>, socket: WebSocket) {
    let client = hub.next_client_id();
    let (mut sink, mut stream) = socket.split();
    let (tx, mut rx) = mpsc::unbounded_channel::<Message>();
    let writer = tokio::spawn(async move {
        while let Some(msg) = rx.recv().await {
            let ws = match msg {
                Message::Text(t) => WsMessage::Text(t.into()),
                Message::Binary(b) => WsMessage::Binary(b.into()),
            };
            if sink.send(ws).await.is_err() {
                break;
            }
        }
        let _ = sink.close().await;
    });

    let mut bound: Option<Arc<SessionHandle>> = None;
    while let Some(Ok(ws)) = stream.next().await {
        let msg = match ws {
            WsMessage::Text(t) => Message::Text(t.to_string()),
            WsMessage::Binary(b) => Message::Binary(b.to_vec()),
            WsMessage::Close(_) => break,
            _ => continue,
        };
        if bound.is_none() {
            match bind(&hub, &msg) {
                Ok(handle) => {
                    handle.attach(client, tx.clone()).await;
                    bound = Some(handle);
                }
                Err(reply) => {
                    let _ = tx.send(Message::Text(reply.to_text()));
                    continue;
                }
            }
        }
        if let Some(handle) = &bound {
            handle.dispatch(client, msg).await;
        }
    }
    if let Some(handle) = bound {
        handle.detach(client).await;
    }
    drop(tx);
    let _ = writer.await;
}

/// The first message on a connection must be a `hello` naming a session.
fn bind(hub: &Hub, msg: &Message) -> Result<Arc<SessionHandle>, ControlMessage> {
    let control = match msg {
        Message::Text(t) => ControlMessage::parse(t).map_err(|e| ControlMessage::error("", None, e.to_string()))?,
        Message::Binary(_) => return Err(ControlMessage::error("", None, "send hello before binary frames")),
    };
    if control.kind != ControlType::Hello {
        return Err(ControlMessage::error(control.session, control.view, "send hello before other messages"));
    }
    hub.session(&control.session).ok_or_else(|| {
        ControlMessage::error(control.session.clone(), None, format!("unknown session `{}`", control.session))
    })
}
