//! Sessions and request handling, independent of the transport.

use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};

use tokio::sync::mpsc::UnboundedSender;

use rwscope_core::rewriter::{normalize, EngineError, Limits};
use rwscope_core::tracing::{
    shared, Answer, Breakpoint, Frontend, MemoryStore, MsgId, Payload, Question, QuestionKind,
    SharedConfig, TraceConfig, TraceMessage, Tracer,
};
use rwscope_core::{parse_ruleset, parse_term, RuleSet};

use crate::wire::{
    BreakpointSpec, ConfigPatch, Event, Op, Request, SessionId, WireMessage, WireQuestion,
};

pub type EventTx = UnboundedSender<Event>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunState {
    Idle,
    Running,
    Awaiting {
        question: u64,
        kind: QuestionKind,
        reply: Option<Answer>,
    },
}

struct EngineSettings {
    limits: Limits,
    parallel: bool,
}

pub struct Session {
    id: SessionId,
    rules: Arc<RuleSet>,
    config: SharedConfig,
    engine: Mutex<EngineSettings>,
    run: Mutex<RunState>,
    wake: Condvar,
    cancelled: AtomicBool,
    out: Mutex<EventTx>,
    next_id: AtomicU64,
    log: Mutex<Vec<TraceMessage>>,
    ignored: Mutex<HashSet<MsgId>>,
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

impl Session {
    pub fn id(&self) -> SessionId {
        self.id
    }

    pub fn state(&self) -> RunState {
        *lock(&self.run)
    }

    /// Every trace message sent for this session so far.
    pub fn log(&self) -> Vec<TraceMessage> {
        lock(&self.log).clone()
    }

    fn send(&self, ev: Event) {
        // a closed connection just drops events
        let _ = lock(&self.out).send(ev);
    }
}

/// The engine side of a session: forwards messages and blocks on questions
/// until the client answers or cancels.
struct SessionFrontend {
    session: Arc<Session>,
}

impl Frontend for SessionFrontend {
    fn message(&self, msg: &TraceMessage) {
        let s = &self.session;
        let obsolete = {
            let mut ignored = lock(&s.ignored);
            if let Payload::Ignore { target } = msg.payload {
                ignored.insert(target);
            }
            msg.parent.is_some_and(|p| ignored.contains(&p))
        };
        if obsolete {
            lock(&s.ignored).insert(msg.id);
        }
        lock(&s.log).push(msg.clone());
        s.send(Event::Trace {
            session: s.id,
            msg: WireMessage {
                id: msg.id.0,
                parent: msg.parent.map(|p| p.0),
                kind: msg.kind(),
                depth: msg.depth,
                text: msg.text(),
                obsolete,
            },
        });
    }

    fn ask(&self, question: &Question) -> Result<Answer, EngineError> {
        let s = &self.session;
        let mut run = lock(&s.run);
        if s.cancelled.load(Ordering::SeqCst) {
            return Err(EngineError::Cancelled);
        }
        *run = RunState::Awaiting {
            question: question.id.0,
            kind: question.kind,
            reply: None,
        };
        s.send(Event::Question {
            session: s.id,
            question: WireQuestion {
                id: question.id.0,
                kind: question.kind,
                text: question.text(),
                answers: question.allowed().to_vec(),
            },
        });
        loop {
            if s.cancelled.load(Ordering::SeqCst) {
                *run = RunState::Running;
                return Err(EngineError::Cancelled);
            }
            if let RunState::Awaiting {
                reply: Some(answer),
                ..
            } = *run
            {
                *run = RunState::Running;
                return Ok(answer);
            }
            run = s.wake.wait(run).unwrap_or_else(|e| e.into_inner());
        }
    }

    fn is_cancelled(&self) -> bool {
        self.session.cancelled.load(Ordering::SeqCst)
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum HubError {
    #[error("malformed request: {0}")]
    Malformed(String),
    #[error("missing field `{0}`")]
    Missing(&'static str),
    #[error("unknown session {0}")]
    UnknownSession(SessionId),
    #[error("invalid ruleset: {0}")]
    Ruleset(String),
    #[error("invalid term: {0}")]
    Term(String),
    #[error("invalid breakpoint: {0}")]
    Breakpoint(String),
    #[error("session {0} is busy")]
    Busy(SessionId),
    #[error("no pending question {0}")]
    NoSuchQuestion(u64),
    #[error("`{answer}` is not a valid reply to a {kind} question")]
    BadAnswer { answer: Answer, kind: &'static str },
}

/// All sessions of one server, sharing one answer memory.
pub struct Hub {
    sessions: Mutex<HashMap<SessionId, Arc<Session>>>,
    memory: Arc<MemoryStore>,
    next_session: AtomicU64,
}

impl Default for Hub {
    fn default() -> Self {
        Hub::with_memory(Arc::new(MemoryStore::new()))
    }
}

impl Hub {
    pub fn new() -> Arc<Hub> {
        Arc::new(Hub::default())
    }

    pub fn with_memory(memory: Arc<MemoryStore>) -> Hub {
        Hub {
            sessions: Mutex::new(HashMap::new()),
            memory,
            next_session: AtomicU64::new(1),
        }
    }

    pub fn memory(&self) -> &Arc<MemoryStore> {
        &self.memory
    }

    pub fn session(&self, id: SessionId) -> Option<Arc<Session>> {
        lock(&self.sessions).get(&id).cloned()
    }

    /// Parses and handles one request line. Returns the id of a session the
    /// line created, so the transport can tear it down with the connection.
    pub fn handle_line(&self, line: &str, out: &EventTx) -> Option<SessionId> {
        match serde_json::from_str::<Request>(line) {
            Ok(req) => self.handle(req, out),
            Err(e) => {
                let _ = out.send(Event::error(None, HubError::Malformed(e.to_string()).to_string()));
                None
            }
        }
    }

    pub fn handle(&self, req: Request, out: &EventTx) -> Option<SessionId> {
        let session = req.session;
        match self.dispatch(req, out) {
            Ok(created) => created,
            Err(e) => {
                let _ = out.send(Event::error(session, e.to_string()));
                None
            }
        }
    }

    fn dispatch(&self, req: Request, out: &EventTx) -> Result<Option<SessionId>, HubError> {
        let op = req.op.ok_or(HubError::Missing("op"))?;
        if op == Op::Start {
            let id = self.start(req.ruleset.as_deref().unwrap_or(""), req.config, out)?;
            return Ok(Some(id));
        }
        let id = req.session.ok_or(HubError::Missing("session"))?;
        let session = self.session(id).ok_or(HubError::UnknownSession(id))?;
        match op {
            Op::Start => unreachable!(),
            Op::Reduce => {
                let term = req.term.ok_or(HubError::Missing("term"))?;
                self.reduce(&session, &term, out)?;
            }
            Op::Answer => {
                let q = req.question_id.ok_or(HubError::Missing("question_id"))?;
                let a = req.answer.ok_or(HubError::Missing("answer"))?;
                self.answer(&session, q, a, Some(out))?;
            }
            Op::Configure => {
                let patch = req.config.ok_or(HubError::Missing("config"))?;
                self.configure(&session, &patch)?;
                let _ = out.send(Event::Ack { session: id, op });
            }
            Op::Cancel => {
                self.cancel(&session, Some(out));
            }
        }
        Ok(None)
    }

    pub fn start(
        &self,
        ruleset: &str,
        config: Option<ConfigPatch>,
        out: &EventTx,
    ) -> Result<SessionId, HubError> {
        let rules = parse_ruleset(ruleset).map_err(|e| HubError::Ruleset(e.to_string()))?;
        let id = self.next_session.fetch_add(1, Ordering::SeqCst);
        let session = Arc::new(Session {
            id,
            rules: Arc::new(rules),
            config: shared(TraceConfig::default()),
            engine: Mutex::new(EngineSettings {
                limits: Limits::default(),
                parallel: false,
            }),
            run: Mutex::new(RunState::Idle),
            wake: Condvar::new(),
            cancelled: AtomicBool::new(false),
            out: Mutex::new(out.clone()),
            next_id: AtomicU64::new(1),
            log: Mutex::new(Vec::new()),
            ignored: Mutex::new(HashSet::new()),
        });
        if let Some(patch) = &config {
            self.configure(&session, patch)?;
        }
        lock(&self.sessions).insert(id, session);
        let _ = out.send(Event::Ack {
            session: id,
            op: Op::Start,
        });
        Ok(id)
    }

    /// Starts a run on its own thread. Events follow on `out`, ending with
    /// `result` (or `error` when the run is cancelled or misanswered).
    pub fn reduce(&self, session: &Arc<Session>, term: &str, out: &EventTx) -> Result<(), HubError> {
        let t = parse_term(term).map_err(|e| HubError::Term(e.to_string()))?;
        session
            .rules
            .check_term(&t)
            .map_err(|e| HubError::Term(e.to_string()))?;
        {
            let mut run = lock(&session.run);
            if *run != RunState::Idle {
                return Err(HubError::Busy(session.id));
            }
            session.cancelled.store(false, Ordering::SeqCst);
            *run = RunState::Running;
        }
        *lock(&session.out) = out.clone();
        let (limits, parallel) = {
            let e = lock(&session.engine);
            (e.limits, e.parallel)
        };
        let tracer = Tracer::new(
            session.id,
            session.config.clone(),
            self.memory.clone(),
            SessionFrontend {
                session: session.clone(),
            },
        )
        .starting_at(session.next_id.load(Ordering::SeqCst));
        let session = session.clone();
        std::thread::spawn(move || {
            let result = normalize(&t, &session.rules, &tracer, limits, parallel);
            session.next_id.store(tracer.next_id(), Ordering::SeqCst);
            *lock(&session.run) = RunState::Idle;
            let ev = match result {
                Ok(r) => Event::Result {
                    session: session.id,
                    final_term: r.term.to_string(),
                    steps: r.steps,
                    exhausted: r.exhausted,
                },
                Err(e) => Event::error(Some(session.id), e.to_string()),
            };
            session.send(ev);
        });
        Ok(())
    }

    /// Delivers a reply to the pending question. The acknowledgement, if
    /// requested, is queued before the engine resumes, so it precedes the
    /// events the reply causes.
    pub fn answer(
        &self,
        session: &Session,
        question: u64,
        answer: Answer,
        ack: Option<&EventTx>,
    ) -> Result<(), HubError> {
        let mut run = lock(&session.run);
        match &mut *run {
            RunState::Awaiting {
                question: q,
                kind,
                reply,
            } if *q == question && reply.is_none() => {
                if !kind.allowed().contains(&answer) {
                    return Err(HubError::BadAnswer {
                        answer,
                        kind: kind.as_str(),
                    });
                }
                *reply = Some(answer);
                if let Some(out) = ack {
                    let _ = out.send(Event::Ack {
                        session: session.id,
                        op: Op::Answer,
                    });
                }
                session.wake.notify_all();
                Ok(())
            }
            _ => Err(HubError::NoSuchQuestion(question)),
        }
    }

    pub fn configure(&self, session: &Session, patch: &ConfigPatch) -> Result<(), HubError> {
        let parse = |spec: &BreakpointSpec| match spec {
            BreakpointSpec::Term(p) => Breakpoint::term(p),
            BreakpointSpec::Thm(n) => Breakpoint::rule(n),
        }
        .map_err(|e| HubError::Breakpoint(e.to_string()));
        let add = patch.add_breakpoints.iter().map(parse).collect::<Result<Vec<_>, _>>()?;
        let remove = patch
            .remove_breakpoints
            .iter()
            .map(parse)
            .collect::<Result<Vec<_>, _>>()?;
        {
            let mut cfg = session.config.write().unwrap_or_else(|e| e.into_inner());
            if let Some(m) = patch.mode {
                cfg.mode = m;
            }
            if let Some(i) = patch.interactive {
                cfg.interactive = i;
            }
            if let Some(a) = patch.auto_reply {
                cfg.auto_reply = a;
            }
            if let Some(m) = patch.memory_enabled {
                cfg.memory_enabled = m;
            }
            for bp in add {
                cfg.add_breakpoint(bp);
            }
            for bp in &remove {
                cfg.remove_breakpoint(bp);
            }
        }
        {
            let mut e = lock(&session.engine);
            if let Some(n) = patch.max_steps {
                e.limits.max_steps = n;
            }
            if let Some(p) = patch.parallel {
                e.parallel = p;
            }
        }
        if patch.clear_memory {
            self.memory.clear();
        }
        Ok(())
    }

    /// Aborts a running or waiting reduce. Idempotent. The acknowledgement
    /// precedes the run's final `cancelled` error.
    pub fn cancel(&self, session: &Session, ack: Option<&EventTx>) {
        let run = lock(&session.run);
        if let Some(out) = ack {
            let _ = out.send(Event::Ack {
                session: session.id,
                op: Op::Cancel,
            });
        }
        if *run != RunState::Idle {
            session.cancelled.store(true, Ordering::SeqCst);
            session.wake.notify_all();
        }
    }

    /// Cancels and forgets a session.
    pub fn teardown(&self, id: SessionId) {
        if let Some(s) = lock(&self.sessions).remove(&id) {
            self.cancel(&s, None);
            self.memory.forget_session(id);
        }
    }
}
