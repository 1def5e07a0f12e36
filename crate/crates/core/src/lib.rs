//! Conditional term rewriting with a hook-instrumented simplifier and an
//! interactive, filterable trace.
//!
//! ```
//! use rwscope_core::{normalize_plain, parse_ruleset, parse_term, Limits};
//!
//! let rules = parse_ruleset("eq2: nonzero(s(N)) => true\n").unwrap();
//! let r = normalize_plain(&parse_term("nonzero(s(zero))").unwrap(), &rules, Limits::default());
//! assert_eq!(r.term.to_string(), "true");
//! assert_eq!(r.steps, 1);
//! ```

pub mod batch;
#[cfg(feature = "gen")]
pub mod gen;
pub mod par;
pub mod rewriter;
pub mod rules;
pub mod term;
pub mod tracing;

pub use rewriter::{
    normalize, normalize_plain, Engine, EngineError, HookSink, Limits, NormalizeResult, NullSink,
    DEFAULT_MAX_DEPTH, DEFAULT_MAX_STEPS,
};
pub use rules::{parse_ruleset, RewriteRule, RuleError, RuleSet};
pub use term::{match_term, parse_term, substitute, Name, ParseError, Substitution, Term};
pub use tracing::{Answer, Breakpoint, Mode, TraceConfig, TraceMessage, Tracer};
