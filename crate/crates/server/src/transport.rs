//! TCP listener serving NDJSON and WebSocket clients on the same port.
//!
//! A connection whose first byte is `G` (an HTTP `GET`) is upgraded to a
//! WebSocket; anything else is treated as newline-delimited JSON.

use std::net::SocketAddr;
use std::sync::Arc;

use futures_util::{SinkExt, StreamExt};
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::mpsc;
use tokio_tungstenite::tungstenite::Message;

use crate::hub::Hub;
use crate::wire::{Event, SessionId};

pub const DEFAULT_PORT: u16 = 7214;
pub const PORT_ENV: &str = "RWSCOPE_PORT";

/// Port from `RWSCOPE_PORT`, or [`DEFAULT_PORT`] when unset or invalid.
pub fn port_from_env() -> u16 {
    std::env::var(PORT_ENV)
        .ok()
        .and_then(|p| p.trim().parse().ok())
        .unwrap_or(DEFAULT_PORT)
}

/// Accepts connections forever.
pub async fn serve(listener: TcpListener, hub: Arc<Hub>) -> std::io::Result<()> {
    loop {
        let (stream, _) = listener.accept().await?;
        let hub = hub.clone();
        tokio::spawn(async move {
            let _ = connection(stream, hub).await;
        });
    }
}

/// Binds `addr` and serves on a background task. Returns the bound address,
/// so port 0 can be used.
pub async fn spawn(addr: SocketAddr, hub: Arc<Hub>) -> std::io::Result<SocketAddr> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    tokio::spawn(serve(listener, hub));
    Ok(local)
}

async fn connection(stream: TcpStream, hub: Arc<Hub>) -> std::io::Result<()> {
    stream.set_nodelay(true)?;
    let mut first = [0u8; 1];
    if stream.peek(&mut first).await? == 0 {
        return Ok(());
    }
    let (tx, rx) = mpsc::unbounded_channel();
    let mut owned = Vec::new();
    let result = if first[0] == b'G' {
        websocket(stream, &hub, tx, rx, &mut owned).await
    } else {
        ndjson(stream, &hub, tx, rx, &mut owned).await
    };
    for id in owned {
        hub.teardown(id);
    }
    result
}

async fn ndjson(
    stream: TcpStream,
    hub: &Hub,
    tx: mpsc::UnboundedSender<Event>,
    mut rx: mpsc::UnboundedReceiver<Event>,
    owned: &mut Vec<SessionId>,
) -> std::io::Result<()> {
    let (read, mut write) = stream.into_split();
    let writer = tokio::spawn(async move {
        while let Some(ev) = rx.recv().await {
            let mut line = ev.to_json();
            line.push('\n');
            if write.write_all(line.as_bytes()).await.is_err() {
                break;
            }
        }
    });
    let mut lines = BufReader::new(read).lines();
    while let Some(line) = lines.next_line().await? {
        if line.trim().is_empty() {
            continue;
        }
        owned.extend(hub.handle_line(&line, &tx));
    }
    drop(tx);
    writer.abort();
    Ok(())
}

async fn websocket(
    stream: TcpStream,
    hub: &Hub,
    tx: mpsc::UnboundedSender<Event>,
    mut rx: mpsc::UnboundedReceiver<Event>,
    owned: &mut Vec<SessionId>,
) -> std::io::Result<()> {
    let ws = tokio_tungstenite::accept_async(stream)
        .await
        .map_err(std::io::Error::other)?;
    let (mut sink, mut source) = ws.split();
    let writer = tokio::spawn(async move {
        while let Some(ev) = rx.recv().await {
            if sink.send(Message::text(ev.to_json())).await.is_err() {
                break;
            }
        }
    });
    while let Some(frame) = source.next().await {
        match frame {
            Ok(Message::Text(text)) => owned.extend(hub.handle_line(text.as_str(), &tx)),
            Ok(Message::Close(_)) | Err(_) => break,
            Ok(_) => {}
        }
    }
    drop(tx);
    writer.abort();
    Ok(())
}
