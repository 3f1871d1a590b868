//! HTTP side: `/ws` for the protocol, static UI assets everywhere else.

use std::path::PathBuf;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use tokio::net::TcpListener;
use tower_http::services::ServeDir;

use crate::live::LiveHandle;
use crate::protocol::{decode_inbound, encode_ack, encode_error, encode_frame, encode_hello, peek_seq, ProtocolError};

pub const DEFAULT_PORT: u16 = 8700;

pub fn router(handle: LiveHandle, static_dir: Option<PathBuf>) -> Router {
    let app = Router::new().route("/ws", get(upgrade)).with_state(handle);
    match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

pub async fn serve(listener: TcpListener, handle: LiveHandle, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    axum::serve(listener, router(handle, static_dir)).await
}

async fn upgrade(ws: WebSocketUpgrade, State(handle): State<LiveHandle>) -> Response {
    ws.on_upgrade(move |socket| connection(socket, handle))
}

/// Keeps the client count up for the lifetime of a connection.
struct Connected(LiveHandle);

impl Connected {
    fn new(handle: LiveHandle) -> Self {
        handle.clients.send_modify(|n| *n += 1);
        Connected(handle)
    }
}

impl Drop for Connected {
    fn drop(&mut self) {
        self.0.clients.send_modify(|n| *n -= 1);
    }
}

/// Outbound seq counter of one connection.
struct Outbox {
    seq: u64,
}

impl Outbox {
    fn next(&mut self) -> u64 {
        let s = self.seq;
        self.seq += 1;
        s
    }
}

async fn connection(socket: WebSocket, handle: LiveHandle) {
    let (mut tx, mut rx) = socket.split();
    let mut out = Outbox { seq: 0 };
    let mut frames = handle.subscribe();
    frames.mark_changed();
    if tx.send(text(encode_hello(out.next(), &handle.hello()))).await.is_err() {
        return;
    }
    let _connected = Connected::new(handle.clone());
    let mut last_in: Option<u64> = None;
    let mut last_tick = f64::NEG_INFINITY;

    loop {
        tokio::select! {
            changed = frames.changed() => {
                if changed.is_err() {
                    break;
                }
                let frame = frames.borrow_and_update().clone();
                if let Some(f) = frame.filter(|f| f.tick > last_tick) {
                    last_tick = f.tick;
                    if tx.send(text(encode_frame(out.next(), &f))).await.is_err() {
                        break;
                    }
                }
            }
            msg = rx.next() => {
                let reply = match msg {
                    Some(Ok(Message::Text(t))) => accept(&handle, t.as_str(), &mut last_in, &mut out),
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => continue,
                };
                if tx.send(text(reply)).await.is_err() {
                    break;
                }
            }
        }
    }
}

fn accept(handle: &LiveHandle, msg: &str, last_in: &mut Option<u64>, out: &mut Outbox) -> String {
    // any message with a readable seq uses it up, even if it is rejected
    let seq = peek_seq(msg);
    if let (Some(got), Some(last)) = (seq, *last_in) {
        if got <= last {
            return encode_error(out.next(), seq, &ProtocolError::StaleSeq { got, last }.to_string());
        }
    }
    if seq.is_some() {
        *last_in = seq;
    }
    match decode_inbound(msg) {
        Ok((seq, input)) => match handle.submit(input) {
            Ok(()) => encode_ack(out.next(), seq, handle.clock()),
            Err(message) => encode_error(out.next(), Some(seq), &message),
        },
        Err(e) => {
            tracing::debug!("rejected client message: {e}");
            encode_error(out.next(), seq, &e.to_string())
        }
    }
}

fn text(s: String) -> Message {
    Message::Text(s.into())
}
