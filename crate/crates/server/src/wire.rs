//! JSON wire format. One object per line (or per WebSocket text frame).

use serde::{Deserialize, Serialize};

use rwscope_core::tracing::{Answer, MessageKind, Mode, QuestionKind};

pub type SessionId = u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Op {
    Start,
    Reduce,
    Answer,
    Configure,
    Cancel,
}

/// Client to server.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub op: Option<Op>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session: Option<SessionId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub term: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question_id: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<Answer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<ConfigPatch>,
    /// Ruleset text for `start`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ruleset: Option<String>,
}

impl Request {
    pub fn new(op: Op) -> Self {
        Request {
            op: Some(op),
            ..Request::default()
        }
    }

    pub fn start(ruleset: &str, config: Option<ConfigPatch>) -> Self {
        Request {
            ruleset: Some(ruleset.to_string()),
            config,
            ..Request::new(Op::Start)
        }
    }

    pub fn reduce(session: SessionId, term: &str) -> Self {
        Request {
            session: Some(session),
            term: Some(term.to_string()),
            ..Request::new(Op::Reduce)
        }
    }

    pub fn answer(session: SessionId, question_id: u64, answer: Answer) -> Self {
        Request {
            session: Some(session),
            question_id: Some(question_id),
            answer: Some(answer),
            ..Request::new(Op::Answer)
        }
    }

    pub fn configure(session: SessionId, config: ConfigPatch) -> Self {
        Request {
            session: Some(session),
            config: Some(config),
            ..Request::new(Op::Configure)
        }
    }

    pub fn cancel(session: SessionId) -> Self {
        Request {
            session: Some(session),
            ..Request::new(Op::Cancel)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BreakpointSpec {
    Term(String),
    Thm(String),
}

/// Partial update of a session's tracing and engine settings.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigPatch {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interactive: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auto_reply: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory_enabled: Option<bool>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub clear_memory: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub add_breakpoints: Vec<BreakpointSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub remove_breakpoints: Vec<BreakpointSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallel: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireMessage {
    pub id: u64,
    pub parent: Option<u64>,
    pub kind: MessageKind,
    pub depth: usize,
    pub text: String,
    pub obsolete: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireQuestion {
    pub id: u64,
    pub kind: QuestionKind,
    pub text: String,
    pub answers: Vec<Answer>,
}

/// Server to client.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "ev", rename_all = "lowercase")]
pub enum Event {
    Trace {
        session: SessionId,
        msg: WireMessage,
    },
    Question {
        session: SessionId,
        question: WireQuestion,
    },
    Result {
        session: SessionId,
        #[serde(rename = "final")]
        final_term: String,
        steps: usize,
        exhausted: bool,
    },
    Error {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        session: Option<SessionId>,
        reason: String,
    },
    /// Confirms `start`, `answer`, `configure` and `cancel`.
    Ack { session: SessionId, op: Op },
}

impl Event {
    pub fn session(&self) -> Option<SessionId> {
        match self {
            Event::Trace { session, .. }
            | Event::Question { session, .. }
            | Event::Result { session, .. }
            | Event::Ack { session, .. } => Some(*session),
            Event::Error { session, .. } => *session,
        }
    }

    pub fn error(session: Option<SessionId>, reason: impl Into<String>) -> Self {
        Event::Error {
            session,
            reason: reason.into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("events always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn event_field_names() {
        let ev = Event::Result {
            session: 3,
            final_term: "true".into(),
            steps: 3,
            exhausted: false,
        };
        assert_eq!(
            serde_json::to_value(&ev).unwrap(),
            json!({"ev": "result", "session": 3, "final": "true", "steps": 3, "exhausted": false})
        );
        let ev = Event::Trace {
            session: 1,
            msg: WireMessage {
                id: 4,
                parent: None,
                kind: MessageKind::Invoke,
                depth: 0,
                text: "f(a)".into(),
                obsolete: false,
            },
        };
        assert_eq!(
            serde_json::to_value(&ev).unwrap(),
            json!({"ev": "trace", "session": 1, "msg": {"id": 4, "parent": null, "kind": "invoke", "depth": 0, "text": "f(a)", "obsolete": false}})
        );
        let ev = Event::error(None, "bad");
        assert_eq!(serde_json::to_value(&ev).unwrap(), json!({"ev": "error", "reason": "bad"}));
        let ev = Event::Question {
            session: 2,
            question: WireQuestion {
                id: 9,
                kind: QuestionKind::Failed,
                text: "t".into(),
                answers: vec![Answer::Redo, Answer::Accept],
            },
        };
        assert_eq!(
            serde_json::to_value(&ev).unwrap(),
            json!({"ev": "question", "session": 2, "question": {"id": 9, "kind": "failed", "text": "t", "answers": ["redo", "accept"]}})
        );
    }

    #[test]
    fn requests_parse() {
        let r: Request = serde_json::from_str(
            r#"{"op":"configure","session":1,"config":{"mode":"full","add_breakpoints":[{"term":"nonzero(?X)"},{"thm":"eq2"}],"clear_memory":true}}"#,
        )
        .unwrap();
        assert_eq!(r.op, Some(Op::Configure));
        let c = r.config.unwrap();
        assert_eq!(c.mode, Some(Mode::Full));
        assert!(c.clear_memory);
        assert_eq!(
            c.add_breakpoints,
            [BreakpointSpec::Term("nonzero(?X)".into()), BreakpointSpec::Thm("eq2".into())]
        );
        let r: Request =
            serde_json::from_str(r#"{"op":"answer","session":1,"question_id":5,"answer":"skip"}"#)
                .unwrap();
        assert_eq!(r, Request::answer(1, 5, Answer::Skip));
        assert!(serde_json::from_str::<Request>(r#"{"op":"configure","config":{"bogus":1}}"#).is_err());
    }

    #[test]
    fn events_round_trip() {
        let ev = Event::Ack {
            session: 4,
            op: Op::Cancel,
        };
        let back: Event = serde_json::from_str(&ev.to_json()).unwrap();
        assert_eq!(back, ev);
    }
}
