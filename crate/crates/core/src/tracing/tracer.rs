use std::collections::VecDeque;
use std::sync::{Arc, Mutex, MutexGuard};

use super::config::{Mode, SharedConfig, TraceConfig};
use super::filter::{accept_other, canonical_key, filter_apply, triggers_step, FilterDecision};
use super::memory::{MemoryStore, SessionId};
use super::message::{
    Answer, ApplyInfo, HintOutcome, MsgId, Payload, Question, QuestionKind, TraceMessage,
};
use crate::rewriter::{ApplyOutcome, ApplyStep, EngineError, Hint, HookSink};
use crate::term::Term;

/// The user-facing end of a tracer: it sees accepted messages and answers
/// displayed questions.
pub trait Frontend: Send + Sync {
    fn message(&self, _msg: &TraceMessage) {}

    fn ask(&self, question: &Question) -> Result<Answer, EngineError>;

    fn is_cancelled(&self) -> bool {
        false
    }
}

impl<F: Frontend + ?Sized> Frontend for Arc<F> {
    fn message(&self, msg: &TraceMessage) {
        (**self).message(msg)
    }

    fn ask(&self, question: &Question) -> Result<Answer, EngineError> {
        (**self).ask(question)
    }

    fn is_cancelled(&self) -> bool {
        (**self).is_cancelled()
    }
}

/// Answers every question with its default reply.
#[derive(Default, Clone, Copy)]
pub struct DefaultFrontend;

impl Frontend for DefaultFrontend {
    fn ask(&self, question: &Question) -> Result<Answer, EngineError> {
        Ok(question.kind.default_answer())
    }
}

/// Replays a fixed list of answers and records the questions it was asked.
/// Running out of answers cancels the run.
#[derive(Default)]
pub struct ScriptedFrontend {
    answers: Mutex<VecDeque<Answer>>,
    asked: Mutex<Vec<Question>>,
}

impl ScriptedFrontend {
    pub fn new(answers: impl IntoIterator<Item = Answer>) -> Self {
        ScriptedFrontend {
            answers: Mutex::new(answers.into_iter().collect()),
            asked: Mutex::new(Vec::new()),
        }
    }

    pub fn asked(&self) -> Vec<Question> {
        self.asked.lock().unwrap().clone()
    }

    pub fn remaining(&self) -> usize {
        self.answers.lock().unwrap().len()
    }
}

impl Frontend for ScriptedFrontend {
    fn ask(&self, question: &Question) -> Result<Answer, EngineError> {
        self.asked.lock().unwrap().push(question.clone());
        self.answers
            .lock()
            .unwrap()
            .pop_front()
            .ok_or(EngineError::Cancelled)
    }
}

/// Counts of the decisions taken for `apply` messages, plus failed-step
/// questions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FilterStats {
    pub discarded: usize,
    pub logged: usize,
    pub from_memory: usize,
    pub auto_replied: usize,
    pub displayed: usize,
    pub failed_questions: usize,
}

impl FilterStats {
    pub fn questions(&self) -> usize {
        self.displayed + self.failed_questions
    }
}

struct Node {
    parent: Option<MsgId>,
    /// Nearest accepted message among this node and its ancestors.
    anchor: Option<MsgId>,
    accepted: bool,
}

struct State {
    first_id: u64,
    nodes: Vec<Node>,
    log: Vec<TraceMessage>,
    stats: FilterStats,
}

impl State {
    fn next_id(&self) -> MsgId {
        MsgId(self.first_id + self.nodes.len() as u64)
    }

    fn node(&self, id: MsgId) -> Option<&Node> {
        id.0.checked_sub(self.first_id)
            .and_then(|i| self.nodes.get(i as usize))
    }

    fn anchor(&self, parent: Option<MsgId>) -> Option<MsgId> {
        parent.and_then(|p| self.node(p)).and_then(|n| n.anchor)
    }

    fn accepted(&self, id: MsgId) -> bool {
        self.node(id).is_some_and(|n| n.accepted)
    }

    fn alloc(&mut self, parent: Option<MsgId>, accepted: bool) -> MsgId {
        let id = self.next_id();
        let anchor = if accepted {
            Some(id)
        } else {
            self.anchor(parent)
        };
        self.nodes.push(Node {
            parent,
            anchor,
            accepted,
        });
        id
    }

    fn parent_of(&self, id: MsgId) -> Option<MsgId> {
        self.node(id).and_then(|n| n.parent)
    }

    fn logged(&self, id: MsgId) -> Option<&TraceMessage> {
        self.log
            .binary_search_by_key(&id, |m| m.id)
            .ok()
            .map(|i| &self.log[i])
    }
}

/// A [`HookSink`] that turns hook calls into trace messages, filters them,
/// consults the memory and forwards questions to a [`Frontend`].
///
/// All hook calls are serialized, so message ids are assigned, emitted and
/// answered in a single global order even when conditions are solved in
/// parallel. Discarded messages still consume an id; the parent of a kept
/// message is its nearest kept ancestor.
pub struct Tracer<F: Frontend> {
    session: SessionId,
    config: SharedConfig,
    memory: Arc<MemoryStore>,
    frontend: F,
    state: Mutex<State>,
}

impl<F: Frontend> Tracer<F> {
    pub fn new(
        session: SessionId,
        config: SharedConfig,
        memory: Arc<MemoryStore>,
        frontend: F,
    ) -> Self {
        Tracer {
            session,
            config,
            memory,
            frontend,
            state: Mutex::new(State {
                first_id: 1,
                nodes: Vec::new(),
                log: Vec::new(),
                stats: FilterStats::default(),
            }),
        }
    }

    /// Starts numbering at `first`, so ids stay unique across several runs
    /// of one session.
    pub fn starting_at(self, first: u64) -> Self {
        self.lock().first_id = first.max(1);
        self
    }

    /// A tracer with its own config, memory and a [`DefaultFrontend`].
    pub fn standalone(config: TraceConfig) -> Tracer<DefaultFrontend> {
        Tracer::new(
            0,
            super::config::shared(config),
            Arc::new(MemoryStore::new()),
            DefaultFrontend,
        )
    }

    fn lock(&self) -> MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn config(&self) -> TraceConfig {
        self.config
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .clone()
    }

    fn mode(&self) -> Mode {
        self.config.read().unwrap_or_else(|e| e.into_inner()).mode
    }

    pub fn frontend(&self) -> &F {
        &self.frontend
    }

    pub fn stats(&self) -> FilterStats {
        self.lock().stats
    }

    /// First id not handed out yet.
    pub fn next_id(&self) -> u64 {
        self.lock().next_id().0
    }

    fn emit(&self, state: &mut State, msg: TraceMessage) {
        self.frontend.message(&msg);
        state.log.push(msg);
    }

    fn ask(&self, question: &Question) -> Result<Answer, EngineError> {
        let answer = self.frontend.ask(question)?;
        if question.allowed().contains(&answer) {
            Ok(answer)
        } else {
            Err(EngineError::Protocol(format!(
                "`{answer}` is not a valid reply to {} question {}",
                question.kind.as_str(),
                question.id
            )))
        }
    }

    fn failed_question(&self, state: &mut State, apply: MsgId) -> Result<Answer, EngineError> {
        let info: ApplyInfo = match state.logged(apply).and_then(|m| m.apply_info()) {
            Some(info) => info.clone(),
            None => {
                return Err(EngineError::Protocol(format!(
                    "no displayed step {apply} to report a failure for"
                )))
            }
        };
        state.stats.failed_questions += 1;
        let cfg = self.config();
        if cfg.auto_reply {
            return Ok(QuestionKind::Failed.default_answer());
        }
        let hint_id = MsgId(state.next_id().0 - 1);
        self.ask(&Question::new(hint_id, QuestionKind::Failed, &info))
    }

    fn redo(&self, state: &mut State, apply: MsgId) {
        let parent = state.parent_of(apply);
        let accepted = state.accepted(apply);
        let anchor = state.anchor(parent);
        let id = state.alloc(parent, accepted);
        if accepted {
            let depth = state.logged(apply).map_or(0, |m| m.depth);
            let msg = TraceMessage {
                id,
                parent: anchor,
                depth,
                payload: Payload::Ignore { target: apply },
            };
            self.emit(state, msg);
        }
        self.memory
            .invalidate_subtree(self.session, apply, |m| state.parent_of(m));
    }
}

impl<F: Frontend> HookSink for Tracer<F> {
    fn invoke(&self, term: &Term, parent: Option<MsgId>, depth: usize) -> MsgId {
        let mut state = self.lock();
        if self.mode() == Mode::Disabled {
            return state.alloc(parent, false);
        }
        let msg = TraceMessage {
            id: state.next_id(),
            parent: state.anchor(parent),
            depth,
            payload: Payload::Invoke { term: term.clone() },
        };
        let parent_accepted = parent.is_some_and(|p| state.accepted(p));
        let accepted = accept_other(&msg, &self.config(), parent_accepted);
        let id = state.alloc(parent, accepted);
        if accepted {
            self.emit(&mut state, msg);
        }
        id
    }

    fn apply(
        &self,
        step: &ApplyStep<'_>,
        parent: MsgId,
        depth: usize,
    ) -> Result<ApplyOutcome, EngineError> {
        if self.frontend.is_cancelled() {
            return Err(EngineError::Cancelled);
        }
        let mut state = self.lock();
        if self.mode() == Mode::Disabled {
            state.stats.discarded += 1;
            let id = state.alloc(Some(parent), false);
            return Ok(ApplyOutcome {
                id,
                answer: Answer::Continue,
                interactive: false,
            });
        }
        let cfg = self.config();
        let bps = triggers_step(&step.rule.name, step.redex, &cfg.breakpoints);
        if cfg.mode == Mode::Normal && bps.is_empty() {
            // what filter_apply would decide, without building the message
            state.stats.discarded += 1;
            let id = state.alloc(Some(parent), false);
            return Ok(ApplyOutcome {
                id,
                answer: Answer::Continue,
                interactive: false,
            });
        }
        let msg = TraceMessage {
            id: state.next_id(),
            parent: state.anchor(Some(parent)),
            depth,
            payload: Payload::Apply(Box::new(ApplyInfo::new(
                step.rule, step.subst, step.redex, bps,
            ))),
        };
        let decision = filter_apply(&msg, &cfg, &self.memory);
        let id = state.alloc(Some(parent), decision.is_accepted());
        let (answer, interactive) = match decision {
            FilterDecision::Discard => {
                state.stats.discarded += 1;
                return Ok(ApplyOutcome {
                    id,
                    answer: Answer::Continue,
                    interactive: false,
                });
            }
            FilterDecision::LogOnly(a) => {
                state.stats.logged += 1;
                (a, false)
            }
            FilterDecision::AutoReply(a) => {
                state.stats.auto_replied += 1;
                (a, false)
            }
            FilterDecision::AnswerFromMemory(a) => {
                state.stats.from_memory += 1;
                let q = Question::new(id, QuestionKind::Apply, msg.apply_info().unwrap());
                self.memory.associate(self.session, id, &canonical_key(&q));
                (a, false)
            }
            FilterDecision::Display(q) => {
                state.stats.displayed += 1;
                self.emit(&mut state, msg);
                let answer = self.ask(&q)?;
                if cfg.memory_enabled {
                    self.memory
                        .record_at(self.session, id, &canonical_key(&q), answer);
                }
                return Ok(ApplyOutcome {
                    id,
                    answer,
                    interactive: true,
                });
            }
        };
        self.emit(&mut state, msg);
        Ok(ApplyOutcome {
            id,
            answer,
            interactive,
        })
    }

    fn hint(
        &self,
        hint: Hint<'_>,
        parent: MsgId,
        depth: usize,
        interactive: bool,
    ) -> Result<Option<Answer>, EngineError> {
        let mut state = self.lock();
        let mode = self.mode();
        let accepted = match mode {
            Mode::Disabled => false,
            Mode::Full => true,
            Mode::Normal => state.accepted(parent),
        };
        let anchor = state.anchor(Some(parent));
        let id = state.alloc(Some(parent), accepted);
        if accepted {
            let outcome = match hint {
                Hint::Success(t) => HintOutcome::Success(t.clone()),
                Hint::Failed => HintOutcome::Failed,
            };
            let msg = TraceMessage {
                id,
                parent: anchor,
                depth,
                payload: Payload::Hint(outcome),
            };
            self.emit(&mut state, msg);
        }
        if !(interactive && matches!(hint, Hint::Failed)) {
            return Ok(None);
        }
        let answer = self.failed_question(&mut state, parent)?;
        if answer == Answer::Redo {
            self.redo(&mut state, parent);
        }
        Ok(Some(answer))
    }

    fn log(&self, text: &str, parent: Option<MsgId>, depth: usize) {
        let mut state = self.lock();
        let accepted = match self.mode() {
            Mode::Disabled => false,
            Mode::Full => true,
            Mode::Normal => parent.is_none_or(|p| state.accepted(p)),
        };
        let anchor = state.anchor(parent);
        let id = state.alloc(parent, accepted);
        if accepted {
            let msg = TraceMessage {
                id,
                parent: anchor,
                depth,
                payload: Payload::Log {
                    text: text.to_string(),
                },
            };
            self.emit(&mut state, msg);
        }
    }

    fn messages(&self) -> Vec<TraceMessage> {
        self.lock().log.clone()
    }
}
