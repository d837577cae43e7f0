//! WebSocket transport: one JSON request per text frame, replies and trace
//! events pushed back as text frames.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use tokio::net::TcpListener;
use tokio::sync::mpsc;

use crate::{trace_frame, Frame, Gateway, Outcome};

pub const GATEWAY_PATH: &str = "/gateway";

const TRACE_POLL: Duration = Duration::from_millis(100);

pub fn router(gateway: Arc<Gateway>) -> Router {
    Router::new().route(GATEWAY_PATH, get(upgrade)).with_state(gateway)
}

/// Serves `gateway` on `listener` until the task is dropped.
pub async fn serve(listener: TcpListener, gateway: Arc<Gateway>) -> std::io::Result<()> {
    axum::serve(listener, router(gateway)).await
}

/// Binds `addr` and serves in the background on the current runtime.
pub async fn spawn(addr: SocketAddr, gateway: Arc<Gateway>) -> std::io::Result<(SocketAddr, tokio::task::JoinHandle<()>)> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    let task = tokio::spawn(async move {
        if let Err(e) = serve(listener, gateway).await {
            log::error!("gateway server stopped: {e}");
        }
    });
    Ok((local, task))
}

async fn upgrade(ws: WebSocketUpgrade, State(gateway): State<Arc<Gateway>>) -> Response {
    ws.on_upgrade(move |socket| connection(socket, gateway))
}

async fn connection(socket: WebSocket, gateway: Arc<Gateway>) {
    let (mut sink, mut stream) = socket.split();
    let (tx, mut rx) = mpsc::unbounded_channel::<Frame>();
    let closed = Arc::new(AtomicBool::new(false));

    let writer = tokio::spawn(async move {
        while let Some(frame) = rx.recv().await {
            if sink.send(Message::Text(frame.to_json().into())).await.is_err() {
                break;
            }
        }
    });

    while let Some(Ok(message)) = stream.next().await {
        let text = match message {
            Message::Text(t) => t.to_string(),
            Message::Close(_) => break,
            _ => continue,
        };
        let gateway = gateway.clone();
        let tx = tx.clone();
        let closed = closed.clone();
        // Requests may block on engine work or replies, so each runs on the
        // blocking pool and later frames keep being read meanwhile.
        tokio::task::spawn_blocking(move || {
            let mut emit = |frame: Frame| {
                let _ = tx.send(frame);
            };
            if let Outcome::Trace(sub) = gateway.handle_text(&text, &mut emit) {
                while !closed.load(Ordering::SeqCst) {
                    if let Some(item) = sub.next_timeout(TRACE_POLL) {
                        if tx.send(trace_frame(&item)).is_err() {
                            break;
                        }
                    }
                }
            }
        });
    }
    closed.store(true, Ordering::SeqCst);
    drop(tx);
    writer.abort();
}
