#![allow(dead_code)]

use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpStream};
use std::sync::Arc;
use std::time::Duration;

use rwscope_core::tracing::Answer;
use rwscope_server::{ConfigPatch, Event, Hub, Request, WireMessage, WireQuestion};

pub fn fixture(name: &str) -> String {
    let path = format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

/// Runs a server on an ephemeral port in a background runtime.
pub fn spawn_server() -> (SocketAddr, Arc<Hub>) {
    let hub = Hub::new();
    let (tx, rx) = std::sync::mpsc::channel();
    let h = hub.clone();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let addr = rwscope_server::spawn("127.0.0.1:0".parse().unwrap(), h)
                .await
                .unwrap();
            tx.send(addr).unwrap();
            std::future::pending::<()>().await;
        });
    });
    (rx.recv().unwrap(), hub)
}

/// Blocking NDJSON client.
pub struct Client {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

#[derive(Debug, Default)]
pub struct Transcript {
    pub events: Vec<Event>,
    pub traces: Vec<WireMessage>,
    pub questions: Vec<WireQuestion>,
    pub result: Option<(String, usize, bool)>,
    pub error: Option<String>,
}

impl Client {
    pub fn connect(addr: SocketAddr) -> Client {
        let stream = TcpStream::connect(addr).unwrap();
        stream
            .set_read_timeout(Some(Duration::from_secs(20)))
            .unwrap();
        Client {
            reader: BufReader::new(stream.try_clone().unwrap()),
            writer: stream,
        }
    }

    pub fn send(&mut self, req: &Request) {
        self.send_raw(&serde_json::to_string(req).unwrap());
    }

    pub fn send_raw(&mut self, line: &str) {
        self.writer.write_all(line.as_bytes()).unwrap();
        self.writer.write_all(b"\n").unwrap();
    }

    pub fn next(&mut self) -> Event {
        let mut line = String::new();
        let n = self.reader.read_line(&mut line).expect("event within timeout");
        assert!(n > 0, "server closed the connection");
        serde_json::from_str(&line).unwrap_or_else(|e| panic!("{line}: {e}"))
    }

    pub fn start(&mut self, ruleset: &str, config: ConfigPatch) -> u64 {
        self.send(&Request::start(ruleset, Some(config)));
        match self.next() {
            Event::Ack { session, .. } => session,
            other => panic!("expected ack, got {other:?}"),
        }
    }

    /// Sends `reduce` and answers every question with `reply` until the
    /// run ends.
    pub fn reduce(
        &mut self,
        session: u64,
        term: &str,
        mut reply: impl FnMut(&WireQuestion) -> Answer,
    ) -> Transcript {
        self.send(&Request::reduce(session, term));
        let mut t = Transcript::default();
        loop {
            let ev = self.next();
            t.events.push(ev.clone());
            match ev {
                Event::Trace { msg, .. } => t.traces.push(msg),
                Event::Question { question, .. } => {
                    let a = reply(&question);
                    self.send(&Request::answer(session, question.id, a));
                    t.questions.push(question);
                }
                Event::Result {
                    final_term,
                    steps,
                    exhausted,
                    ..
                } => {
                    t.result = Some((final_term, steps, exhausted));
                    return t;
                }
                Event::Error { reason, .. } => {
                    t.error = Some(reason);
                    return t;
                }
                Event::Ack { .. } => {}
            }
        }
    }
}

/// Replies from a fixed script.
pub fn scripted(answers: &[Answer]) -> impl FnMut(&WireQuestion) -> Answer + '_ {
    let mut it = answers.iter();
    move |_| *it.next().expect("script ran out of answers")
}

pub fn defaults(q: &WireQuestion) -> Answer {
    q.kind.default_answer()
}
