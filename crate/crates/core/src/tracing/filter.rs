//! The message filter: which messages are kept, and how `apply` messages
//! are answered.
//!
//! For `apply` messages the decision runs through these stages, in order:
//!
//! 1. `disabled` discards everything; `normal` discards a step unless it
//!    triggers a breakpoint; `full` accepts everything.
//! 2. An accepted step in non-interactive tracing is only logged and gets the
//!    default answer.
//! 3. An interactive step whose question is in the memory is answered from it.
//! 4. With auto-reply on, the default answer is used; otherwise the question
//!    is displayed.

use super::config::{Breakpoint, Mode, TraceConfig};
use super::memory::MemoryStore;
use super::message::{Answer, Payload, Question, QuestionKind, TraceMessage};
use crate::term::{match_term, Term};

/// Breakpoints a step with this rule name and redex triggers.
pub fn triggers_step(rule: &str, redex: &Term, bps: &[Breakpoint]) -> Vec<Breakpoint> {
    bps.iter()
        .filter(|bp| match bp {
            Breakpoint::TermPattern(p) => match_term(p, redex).is_some(),
            Breakpoint::RuleName(n) => n.as_str() == rule,
        })
        .cloned()
        .collect()
}

/// Breakpoints triggered by an `apply` message; empty for other kinds.
pub fn triggers(msg: &TraceMessage, bps: &[Breakpoint]) -> Vec<Breakpoint> {
    match &msg.payload {
        Payload::Apply(info) => triggers_step(&info.rule, &info.redex, bps),
        _ => Vec::new(),
    }
}

/// Whether an invoked term triggers a term breakpoint.
pub fn term_triggers(term: &Term, bps: &[Breakpoint]) -> bool {
    bps.iter().any(|bp| match bp {
        Breakpoint::TermPattern(p) => match_term(p, term).is_some(),
        Breakpoint::RuleName(_) => false,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FilterDecision {
    Discard,
    LogOnly(Answer),
    AnswerFromMemory(Answer),
    AutoReply(Answer),
    Display(Question),
}

impl FilterDecision {
    pub fn is_accepted(&self) -> bool {
        !matches!(self, FilterDecision::Discard)
    }
}

/// Decides what happens to an `apply` message. Pure in `(msg, cfg, memory
/// contents)`.
///
/// # Panics
///
/// If `msg` is not an `apply` message.
pub fn filter_apply(msg: &TraceMessage, cfg: &TraceConfig, mem: &MemoryStore) -> FilterDecision {
    let info = msg
        .apply_info()
        .expect("filter_apply called on a non-apply message");
    let accepted = match cfg.mode {
        Mode::Disabled => false,
        Mode::Full => true,
        Mode::Normal => !triggers(msg, &cfg.breakpoints).is_empty(),
    };
    if !accepted {
        return FilterDecision::Discard;
    }
    let default = QuestionKind::Apply.default_answer();
    if !cfg.interactive {
        return FilterDecision::LogOnly(default);
    }
    let question = Question::new(msg.id, QuestionKind::Apply, info);
    if cfg.memory_enabled {
        if let Some(answer) = mem.lookup(&canonical_key(&question)) {
            return FilterDecision::AnswerFromMemory(answer);
        }
    }
    if cfg.auto_reply {
        return FilterDecision::AutoReply(default);
    }
    FilterDecision::Display(question)
}

/// Acceptance for everything except `apply`: `full` keeps all, `disabled`
/// none, and `normal` keeps a message when its parent was kept (`invoke`
/// messages instead need a term breakpoint on the invoked term).
pub fn accept_other(msg: &TraceMessage, cfg: &TraceConfig, parent_accepted: bool) -> bool {
    match cfg.mode {
        Mode::Disabled => false,
        Mode::Full => true,
        Mode::Normal => match &msg.payload {
            Payload::Invoke { term } => term_triggers(term, &cfg.breakpoints),
            Payload::Apply(_) => !triggers(msg, &cfg.breakpoints).is_empty(),
            _ => parent_accepted || msg.parent.is_none(),
        },
    }
}

/// Memo key of a question: its kind, the rule name, the printed instantiated
/// rule and the printed redex. Ids, depth and breakpoints are left out, so the
/// key is stable across runs and sessions.
pub fn canonical_key(q: &Question) -> String {
    format!(
        "{} {}: {} @ {}",
        q.kind.as_str(),
        q.rule,
        q.equation,
        q.redex
    )
}
