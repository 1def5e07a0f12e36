mod common;

use std::io::ErrorKind;
use std::time::{Duration, Instant};

use common::{defaults, fixture, scripted, spawn_server, Client};
use rwscope_core::tracing::{Answer, MessageKind, Mode, QuestionKind};
use rwscope_server::{BreakpointSpec, ConfigPatch, Event, Op, Request, RunState};

const SUM_TERM: &str = "nonzero(plus(s(zero),s(s(zero))))";

fn full_batch() -> ConfigPatch {
    ConfigPatch {
        mode: Some(Mode::Full),
        interactive: Some(false),
        ..ConfigPatch::default()
    }
}

fn thm(name: &str) -> BreakpointSpec {
    BreakpointSpec::Thm(name.to_string())
}

fn wait_idle(hub: &rwscope_server::Hub, session: u64) {
    let deadline = Instant::now() + Duration::from_secs(10);
    while hub.session(session).unwrap().state() != RunState::Idle {
        assert!(Instant::now() < deadline, "session never went idle");
        std::thread::sleep(Duration::from_millis(5));
    }
}

#[test]
fn full_run_streams_the_trace_then_the_result() {
    let (addr, hub) = spawn_server();
    let mut c = Client::connect(addr);
    let s = c.start(&fixture("simple_nat.rules"), full_batch());
    let t = c.reduce(s, SUM_TERM, defaults);
    assert_eq!(t.result, Some(("true".to_string(), 3, false)));
    let ids: Vec<u64> = t.traces.iter().map(|m| m.id).collect();
    assert_eq!(ids, (1..=11).collect::<Vec<_>>());
    assert_eq!(t.traces[1].text, "ceq1: nonzero(plus(s(zero), s(s(zero)))) => true if nonzero(s(zero)), nonzero(s(s(zero)))");
    assert_eq!(t.traces[1].parent, Some(1));
    assert!(matches!(t.events.last(), Some(Event::Result { .. })));

    // what went over the wire is exactly what the engine kept
    let log = hub.session(s).unwrap().log();
    let logged: Vec<(u64, Option<u64>, String)> = log
        .iter()
        .map(|m| (m.id.0, m.parent.map(|p| p.0), m.text()))
        .collect();
    let sent: Vec<(u64, Option<u64>, String)> = t
        .traces
        .iter()
        .map(|m| (m.id, m.parent, m.text.clone()))
        .collect();
    assert_eq!(logged, sent);
}

#[test]
fn disabled_mode_sends_only_the_result() {
    let (addr, _) = spawn_server();
    let mut c = Client::connect(addr);
    let s = c.start(
        &fixture("simple_nat.rules"),
        ConfigPatch {
            mode: Some(Mode::Disabled),
            ..ConfigPatch::default()
        },
    );
    let t = c.reduce(s, SUM_TERM, defaults);
    assert_eq!(t.events.len(), 1);
    assert_eq!(t.result, Some(("true".to_string(), 3, false)));
}

#[test]
fn rule_breakpoint_asks_once() {
    let (addr, _) = spawn_server();
    let mut c = Client::connect(addr);
    let s = c.start(
        &fixture("simple_nat.rules"),
        ConfigPatch {
            add_breakpoints: vec![thm("ceq1")],
            ..ConfigPatch::default()
        },
    );
    let t = c.reduce(s, SUM_TERM, defaults);
    assert_eq!(t.questions.len(), 1);
    let q = &t.questions[0];
    assert_eq!(q.kind, QuestionKind::Apply);
    assert_eq!(q.answers, [Answer::Continue, Answer::Skip]);
    assert!(q.text.starts_with("apply ceq1: "));
    assert_eq!(t.result.unwrap().0, "true");
}

#[test]
fn start_errors_and_ids() {
    let (addr, _) = spawn_server();
    let mut c = Client::connect(addr);
    c.send(&Request::start("broken: f(X => a\n", None));
    match c.next() {
        Event::Error { session, reason } => {
            assert_eq!(session, None);
            assert!(reason.contains("line 1"), "{reason}");
        }
        other => panic!("{other:?}"),
    }
    let a = c.start(&fixture("simple_nat.rules"), ConfigPatch::default());
    let b = c.start(&fixture("simple_nat.rules"), ConfigPatch::default());
    assert_ne!(a, b);

    c.send_raw("{not json");
    assert!(matches!(c.next(), Event::Error { .. }));
    c.send(&Request::reduce(999, "zero"));
    match c.next() {
        Event::Error { session, reason } => {
            assert_eq!(session, Some(999));
            assert!(reason.contains("unknown session"));
        }
        other => panic!("{other:?}"),
    }
    c.send(&Request::reduce(a, "nonzero(plus(zero"));
    assert!(matches!(c.next(), Event::Error { reason, .. } if reason.contains("invalid term")));
    c.send(&Request::reduce(a, "s(zero, zero)"));
    assert!(matches!(c.next(), Event::Error { reason, .. } if reason.contains("arity")));
    c.send(&Request::configure(
        a,
        ConfigPatch {
            add_breakpoints: vec![BreakpointSpec::Term("f(".into())],
            ..ConfigPatch::default()
        },
    ));
    assert!(matches!(c.next(), Event::Error { reason, .. } if reason.contains("invalid breakpoint")));
}

#[test]
fn answers_are_checked() {
    let (addr, _) = spawn_server();
    let mut c = Client::connect(addr);
    let s = c.start(
        &fixture("simple_nat.rules"),
        ConfigPatch {
            add_breakpoints: vec![thm("ceq1")],
            ..ConfigPatch::default()
        },
    );
    c.send(&Request::reduce(s, SUM_TERM));
    let q = loop {
        match c.next() {
            Event::Question { question, .. } => break question,
            Event::Trace { .. } => {}
            other => panic!("{other:?}"),
        }
    };
    c.send(&Request::answer(s, q.id + 100, Answer::Continue));
    assert!(matches!(c.next(), Event::Error { reason, .. } if reason.contains("no pending question")));
    c.send(&Request::answer(s, q.id, Answer::Redo));
    assert!(matches!(c.next(), Event::Error { reason, .. } if reason.contains("not a valid reply")));
    c.send(&Request::reduce(s, SUM_TERM));
    assert!(matches!(c.next(), Event::Error { reason, .. } if reason.contains("busy")));
    c.send(&Request::answer(s, q.id, Answer::Continue));
    assert_eq!(c.next(), Event::Ack { session: s, op: Op::Answer });
    loop {
        match c.next() {
            Event::Result { final_term, .. } => {
                assert_eq!(final_term, "true");
                break;
            }
            Event::Trace { .. } => {}
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn skip_moves_to_the_next_candidate() {
    let (addr, _) = spawn_server();
    let mut c = Client::connect(addr);
    let s = c.start(
        &fixture("overlap.rules"),
        ConfigPatch {
            add_breakpoints: vec![BreakpointSpec::Term("pick(X)".into())],
            ..ConfigPatch::default()
        },
    );
    let t = c.reduce(s, "pick(a)", scripted(&[Answer::Skip, Answer::Continue]));
    assert_eq!(t.result.unwrap().0, "right");
    assert!(t.traces.iter().any(|m| m.kind == MessageKind::Log && m.text == "skipped"));
}

#[test]
fn redo_repeats_the_apply_question() {
    let (addr, _) = spawn_server();
    let mut c = Client::connect(addr);
    let s = c.start(
        &fixture("nested_failure.rules"),
        ConfigPatch {
            add_breakpoints: vec![thm("outer")],
            ..ConfigPatch::default()
        },
    );
    let t = c.reduce(
        s,
        "top(a)",
        scripted(&[Answer::Continue, Answer::Redo, Answer::Continue, Answer::Accept]),
    );
    let kinds: Vec<QuestionKind> = t.questions.iter().map(|q| q.kind).collect();
    assert_eq!(
        kinds,
        [QuestionKind::Apply, QuestionKind::Failed, QuestionKind::Apply, QuestionKind::Failed]
    );
    assert_eq!(t.questions[0].text, t.questions[2].text);
    let ignore = t
        .traces
        .iter()
        .find(|m| m.kind == MessageKind::Ignore)
        .expect("ignore event");
    assert_eq!(ignore.text, format!("obsolete: #{}", t.questions[0].id));
    // the ignore event comes before the repeated question
    let pos_ignore = t.events.iter().position(|e| matches!(e, Event::Trace { msg, .. } if msg.kind == MessageKind::Ignore)).unwrap();
    let pos_second = t
        .events
        .iter()
        .position(|e| matches!(e, Event::Question { question, .. } if question.id == t.questions[2].id))
        .unwrap();
    assert!(pos_ignore < pos_second);
    assert_eq!(t.result.unwrap().0, "top(a)");
}

#[test]
fn configure_mid_run_changes_later_decisions() {
    let (addr, _) = spawn_server();
    let mut c = Client::connect(addr);
    let s = c.start(
        &fixture("simple_nat.rules"),
        ConfigPatch {
            add_breakpoints: vec![thm("ceq1")],
            interactive: Some(true),
            ..ConfigPatch::default()
        },
    );
    c.send(&Request::reduce(s, SUM_TERM));
    let q = loop {
        if let Event::Question { question, .. } = c.next() {
            break question;
        }
    };
    c.send(&Request::configure(
        s,
        ConfigPatch {
            mode: Some(Mode::Full),
            interactive: Some(false),
            ..ConfigPatch::default()
        },
    ));
    assert_eq!(c.next(), Event::Ack { session: s, op: Op::Configure });
    c.send(&Request::answer(s, q.id, Answer::Continue));
    let mut traces = Vec::new();
    loop {
        match c.next() {
            Event::Trace { msg, .. } => traces.push(msg),
            Event::Result { final_term, .. } => {
                assert_eq!(final_term, "true");
                break;
            }
            Event::Ack { .. } => {}
            other => panic!("{other:?}"),
        }
    }
    // everything after the question is kept now: 2 x (invoke, apply, hint, hint) + hint
    assert_eq!(traces.len(), 9);
}

#[test]
fn term_breakpoint_added_by_configure() {
    let (addr, _) = spawn_server();
    let mut c = Client::connect(addr);
    let s = c.start(&fixture("simple_nat.rules"), ConfigPatch::default());
    let t = c.reduce(s, SUM_TERM, defaults);
    assert!(t.questions.is_empty());
    c.send(&Request::configure(
        s,
        ConfigPatch {
            add_breakpoints: vec![BreakpointSpec::Term("nonzero(?X)".into())],
            ..ConfigPatch::default()
        },
    ));
    assert!(matches!(c.next(), Event::Ack { .. }));
    let t = c.reduce(s, SUM_TERM, defaults);
    assert_eq!(t.questions.len(), 3);
    c.send(&Request::configure(
        s,
        ConfigPatch {
            remove_breakpoints: vec![BreakpointSpec::Term("nonzero(?X)".into())],
            ..ConfigPatch::default()
        },
    ));
    assert!(matches!(c.next(), Event::Ack { .. }));
    // answered questions come from memory anyway, and without breakpoints
    // nothing is even considered
    let t = c.reduce(s, SUM_TERM, defaults);
    assert!(t.questions.is_empty());
    assert!(t.traces.is_empty());
}

#[test]
fn memory_is_shared_and_can_be_cleared() {
    let (addr, hub) = spawn_server();
    let patch = ConfigPatch {
        add_breakpoints: vec![thm("ceq1")],
        ..ConfigPatch::default()
    };
    let mut c = Client::connect(addr);
    let s = c.start(&fixture("simple_nat.rules"), patch.clone());
    assert_eq!(c.reduce(s, SUM_TERM, defaults).questions.len(), 1);
    assert_eq!(c.reduce(s, SUM_TERM, defaults).questions.len(), 0);

    // another connection, another session, same memory
    let mut d = Client::connect(addr);
    let s2 = d.start(&fixture("simple_nat.rules"), patch.clone());
    assert_eq!(d.reduce(s2, SUM_TERM, defaults).questions.len(), 0);

    d.send(&Request::configure(
        s2,
        ConfigPatch {
            clear_memory: true,
            ..ConfigPatch::default()
        },
    ));
    assert!(matches!(d.next(), Event::Ack { .. }));
    assert!(hub.memory().is_empty());
    assert_eq!(d.reduce(s2, SUM_TERM, defaults).questions.len(), 1);

    d.send(&Request::configure(
        s2,
        ConfigPatch {
            memory_enabled: Some(false),
            ..ConfigPatch::default()
        },
    ));
    assert!(matches!(d.next(), Event::Ack { .. }));
    assert_eq!(d.reduce(s2, SUM_TERM, defaults).questions.len(), 1);
}

#[test]
fn cancel_withdraws_the_question() {
    let (addr, hub) = spawn_server();
    let mut c = Client::connect(addr);
    let s = c.start(
        &fixture("simple_nat.rules"),
        ConfigPatch {
            add_breakpoints: vec![thm("ceq1")],
            ..ConfigPatch::default()
        },
    );
    c.send(&Request::cancel(s));
    assert_eq!(c.next(), Event::Ack { session: s, op: Op::Cancel });

    c.send(&Request::reduce(s, SUM_TERM));
    let q = loop {
        if let Event::Question { question, .. } = c.next() {
            break question;
        }
    };
    c.send(&Request::cancel(s));
    let mut saw_ack = false;
    let mut saw_cancelled = false;
    while !(saw_ack && saw_cancelled) {
        match c.next() {
            Event::Ack { op: Op::Cancel, .. } => saw_ack = true,
            Event::Error { reason, .. } => {
                assert_eq!(reason, "cancelled");
                saw_cancelled = true;
            }
            other => panic!("{other:?}"),
        }
    }
    wait_idle(&hub, s);
    c.send(&Request::answer(s, q.id, Answer::Continue));
    assert!(matches!(c.next(), Event::Error { .. }));
    // the session is usable again
    let t = c.reduce(s, SUM_TERM, defaults);
    assert_eq!(t.result.unwrap().0, "true");
}

#[test]
fn cancel_stops_a_long_run() {
    let (addr, hub) = spawn_server();
    let mut c = Client::connect(addr);
    let s = c.start(
        &fixture("loop.rules"),
        ConfigPatch {
            max_steps: Some(usize::MAX),
            mode: Some(Mode::Disabled),
            ..ConfigPatch::default()
        },
    );
    c.send(&Request::reduce(s, "f(a)"));
    std::thread::sleep(Duration::from_millis(50));
    assert_eq!(hub.session(s).unwrap().state(), RunState::Running);
    c.send(&Request::cancel(s));
    let mut done = false;
    while !done {
        match c.next() {
            Event::Ack { .. } => {}
            Event::Error { reason, .. } => {
                assert_eq!(reason, "cancelled");
                done = true;
            }
            other => panic!("{other:?}"),
        }
    }
    wait_idle(&hub, s);
}

#[test]
fn budget_exhaustion_is_reported_in_the_result() {
    let (addr, _) = spawn_server();
    let mut c = Client::connect(addr);
    let s = c.start(
        &fixture("loop.rules"),
        ConfigPatch {
            max_steps: Some(50),
            ..ConfigPatch::default()
        },
    );
    let t = c.reduce(s, "f(a)", defaults);
    assert_eq!(t.result, Some(("f(a)".to_string(), 50, true)));
}

#[test]
fn sessions_block_independently() {
    let (addr, _) = spawn_server();
    let patch = ConfigPatch {
        add_breakpoints: vec![thm("eq2")],
        memory_enabled: Some(false),
        ..ConfigPatch::default()
    };
    let mut a = Client::connect(addr);
    let mut b = Client::connect(addr);
    let sa = a.start(&fixture("simple_nat.rules"), patch.clone());
    let sb = b.start(&fixture("simple_nat.rules"), patch);
    a.send(&Request::reduce(sa, SUM_TERM));
    while !matches!(a.next(), Event::Question { .. }) {}
    // a is parked on its question while b runs to completion
    let t = b.reduce(sb, SUM_TERM, defaults);
    assert_eq!(t.questions.len(), 2);
    assert_eq!(t.result.unwrap().0, "true");
}

#[test]
fn parallel_session_keeps_ids_ordered() {
    let (addr, _) = spawn_server();
    let mut c = Client::connect(addr);
    let s = c.start(
        &fixture("simple_nat.rules"),
        ConfigPatch {
            parallel: Some(true),
            mode: Some(Mode::Full),
            ..ConfigPatch::default()
        },
    );
    let t = c.reduce(
        s,
        "nonzero(plus(plus(s(a), s(b)), plus(s(c), s(d))))",
        defaults,
    );
    assert_eq!(t.result.unwrap().0, "true");
    let ids: Vec<u64> = t.traces.iter().map(|m| m.id).collect();
    assert!(ids.windows(2).all(|w| w[0] < w[1]));
    let qids: Vec<u64> = t.questions.iter().map(|q| q.id).collect();
    assert!(qids.windows(2).all(|w| w[0] < w[1]));
    for m in &t.traces {
        if let Some(p) = m.parent {
            assert!(ids.contains(&p));
        }
    }
}

#[test]
fn ids_continue_across_reduces() {
    let (addr, _) = spawn_server();
    let mut c = Client::connect(addr);
    let s = c.start(&fixture("simple_nat.rules"), full_batch());
    let first = c.reduce(s, SUM_TERM, defaults);
    let second = c.reduce(s, SUM_TERM, defaults);
    assert_eq!(first.traces.last().unwrap().id + 1, second.traces[0].id);
}

#[test]
fn websocket_speaks_the_same_protocol() {
    use rwscope_server::wire::Request as R;
    use tokio_tungstenite::tungstenite::{client, Message};

    let (addr, _) = spawn_server();
    let stream = std::net::TcpStream::connect(addr).unwrap();
    stream.set_read_timeout(Some(Duration::from_secs(20))).unwrap();
    let (mut ws, _) = client(format!("ws://{addr}/"), stream).unwrap();

    let send = |ws: &mut tokio_tungstenite::tungstenite::WebSocket<std::net::TcpStream>, r: &R| {
        ws.send(Message::text(serde_json::to_string(r).unwrap())).unwrap();
    };
    let read = |ws: &mut tokio_tungstenite::tungstenite::WebSocket<std::net::TcpStream>| loop {
        match ws.read() {
            Ok(Message::Text(t)) => return serde_json::from_str::<Event>(t.as_str()).unwrap(),
            Ok(_) => {}
            Err(e) if matches!(&e, tokio_tungstenite::tungstenite::Error::Io(io) if io.kind() == ErrorKind::WouldBlock) => {
                panic!("timed out")
            }
            Err(e) => panic!("{e}"),
        }
    };
    send(&mut ws, &R::start(&fixture("simple_nat.rules"), Some(full_batch())));
    let s = match read(&mut ws) {
        Event::Ack { session, .. } => session,
        other => panic!("{other:?}"),
    };
    send(&mut ws, &R::reduce(s, SUM_TERM));
    let mut traces = 0;
    loop {
        match read(&mut ws) {
            Event::Trace { .. } => traces += 1,
            Event::Result { final_term, steps, .. } => {
                assert_eq!(final_term, "true");
                assert_eq!(steps, 3);
                break;
            }
            other => panic!("{other:?}"),
        }
    }
    assert_eq!(traces, 11);
}
