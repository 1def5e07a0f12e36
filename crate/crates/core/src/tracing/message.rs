use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::Breakpoint;
use crate::rules::{format_equation, RewriteRule};
use crate::term::{substitute, Name, Substitution, Term};

/// Identifier of a trace message, unique and increasing within a session.
#[derive(
    Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct MsgId(pub u64);

impl fmt::Display for MsgId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MessageKind {
    Invoke,
    Apply,
    Hint,
    Ignore,
    Log,
}

impl MessageKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MessageKind::Invoke => "invoke",
            MessageKind::Apply => "apply",
            MessageKind::Hint => "hint",
            MessageKind::Ignore => "ignore",
            MessageKind::Log => "log",
        }
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything a question about one rewrite step shows: the instantiated
/// rule, the redex, the matcher and the breakpoints it triggered.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApplyInfo {
    pub rule: Name,
    pub lhs: Term,
    pub rhs: Term,
    pub conditions: Vec<Term>,
    pub redex: Term,
    pub substitution: Substitution,
    pub breakpoints: Vec<Breakpoint>,
}

impl ApplyInfo {
    pub fn new(
        rule: &RewriteRule,
        subst: &Substitution,
        redex: &Term,
        breakpoints: Vec<Breakpoint>,
    ) -> Self {
        ApplyInfo {
            rule: rule.name.clone(),
            lhs: substitute(subst, &rule.lhs),
            rhs: substitute(subst, &rule.rhs),
            conditions: rule.conditions.iter().map(|c| substitute(subst, c)).collect(),
            redex: redex.clone(),
            substitution: subst.clone(),
            breakpoints,
        }
    }

    /// `lhs => rhs if ...` with all variables instantiated.
    pub fn equation(&self) -> String {
        format_equation(&self.lhs, &self.rhs, &self.conditions)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HintOutcome {
    Success(Term),
    Failed,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Payload {
    Invoke { term: Term },
    Apply(Box<ApplyInfo>),
    Hint(HintOutcome),
    Ignore { target: MsgId },
    Log { text: String },
}

/// One node of the trace forest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceMessage {
    pub id: MsgId,
    pub parent: Option<MsgId>,
    /// Condition-recursion depth of the step that produced the message.
    pub depth: usize,
    pub payload: Payload,
}

impl TraceMessage {
    pub fn kind(&self) -> MessageKind {
        match self.payload {
            Payload::Invoke { .. } => MessageKind::Invoke,
            Payload::Apply(_) => MessageKind::Apply,
            Payload::Hint(_) => MessageKind::Hint,
            Payload::Ignore { .. } => MessageKind::Ignore,
            Payload::Log { .. } => MessageKind::Log,
        }
    }

    pub fn apply_info(&self) -> Option<&ApplyInfo> {
        match &self.payload {
            Payload::Apply(info) => Some(info),
            _ => None,
        }
    }

    /// Human-readable one-line rendering, used by dumps, keyword filtering and
    /// the wire protocol.
    pub fn text(&self) -> String {
        match &self.payload {
            Payload::Invoke { term } => term.to_string(),
            Payload::Apply(info) => format!("{}: {}", info.rule, info.equation()),
            Payload::Hint(HintOutcome::Success(t)) => format!("success: {t}"),
            Payload::Hint(HintOutcome::Failed) => "failed".to_string(),
            Payload::Ignore { target } => format!("obsolete: {target}"),
            Payload::Log { text } => text.clone(),
        }
    }
}

/// A reply to a question.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Answer {
    Continue,
    Skip,
    Redo,
    Accept,
}

impl Answer {
    pub fn as_str(self) -> &'static str {
        match self {
            Answer::Continue => "continue",
            Answer::Skip => "skip",
            Answer::Redo => "redo",
            Answer::Accept => "accept",
        }
    }

    pub fn letter(self) -> char {
        self.as_str().chars().next().unwrap()
    }

    pub fn from_letter(c: char) -> Option<Answer> {
        [Answer::Continue, Answer::Skip, Answer::Redo, Answer::Accept]
            .into_iter()
            .find(|a| a.letter() == c.to_ascii_lowercase())
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Answer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "continue" => Ok(Answer::Continue),
            "skip" => Ok(Answer::Skip),
            "redo" => Ok(Answer::Redo),
            "accept" => Ok(Answer::Accept),
            other => Err(format!("unknown answer `{other}`")),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuestionKind {
    /// Asked before a rule is tried.
    Apply,
    /// Asked after an interactive step failed.
    Failed,
}

impl QuestionKind {
    pub fn allowed(self) -> &'static [Answer] {
        match self {
            QuestionKind::Apply => &[Answer::Continue, Answer::Skip],
            QuestionKind::Failed => &[Answer::Redo, Answer::Accept],
        }
    }

    /// The reply that leaves the rewriting exactly as if tracing were off.
    pub fn default_answer(self) -> Answer {
        match self {
            QuestionKind::Apply => Answer::Continue,
            QuestionKind::Failed => Answer::Accept,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            QuestionKind::Apply => "apply",
            QuestionKind::Failed => "failed",
        }
    }
}

/// An interactive message awaiting an [`Answer`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Question {
    /// Id of the message the question wraps.
    pub id: MsgId,
    pub kind: QuestionKind,
    pub rule: Name,
    pub equation: String,
    pub redex: Term,
    pub breakpoints: Vec<Breakpoint>,
}

impl Question {
    pub fn new(id: MsgId, kind: QuestionKind, info: &ApplyInfo) -> Self {
        Question {
            id,
            kind,
            rule: info.rule.clone(),
            equation: info.equation(),
            redex: info.redex.clone(),
            breakpoints: info.breakpoints.clone(),
        }
    }

    pub fn allowed(&self) -> &'static [Answer] {
        self.kind.allowed()
    }

    /// Display text: the canonical key plus the triggered breakpoints.
    pub fn text(&self) -> String {
        let mut s = super::canonical_key(self);
        if !self.breakpoints.is_empty() {
            s.push_str("\n  breakpoints: ");
            let bps: Vec<String> = self.breakpoints.iter().map(|b| b.to_string()).collect();
            s.push_str(&bps.join(", "));
        }
        s
    }
}
