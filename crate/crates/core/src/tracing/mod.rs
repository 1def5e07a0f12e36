//! Trace messages, filtering, answer memory and the trace forest.

mod config;
mod filter;
mod forest;
mod memory;
mod message;
mod tracer;

pub use config::{shared, Breakpoint, Mode, SharedConfig, TraceConfig};
pub use filter::{
    accept_other, canonical_key, filter_apply, term_triggers, triggers, triggers_step,
    FilterDecision,
};
pub use forest::{build_forest, dump, filter_forest, flatten, ForestError, TraceNode};
pub use memory::{MemoryStore, SessionId};
pub use message::{
    Answer, ApplyInfo, HintOutcome, MessageKind, MsgId, Payload, Question, QuestionKind,
    TraceMessage,
};
pub use tracer::{DefaultFrontend, FilterStats, Frontend, ScriptedFrontend, Tracer};
