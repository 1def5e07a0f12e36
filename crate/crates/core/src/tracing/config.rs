use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::term::{parse_term, Name, ParseError, Term};

/// Verbosity mode.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// No trace messages at all.
    Disabled,
    /// Messages are produced but only those triggering a breakpoint are kept.
    #[default]
    Normal,
    /// Every message is kept.
    Full,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "disabled" => Ok(Mode::Disabled),
            "normal" => Ok(Mode::Normal),
            "full" => Ok(Mode::Full),
            other => Err(format!(
                "unknown mode `{other}` (expected disabled, normal or full)"
            )),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Disabled => "disabled",
            Mode::Normal => "normal",
            Mode::Full => "full",
        })
    }
}

/// Intercepts a step by its redex (root match against a pattern) or by the
/// name of the rule being used.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Breakpoint {
    TermPattern(Term),
    RuleName(Name),
}

impl Breakpoint {
    pub fn term(pattern: &str) -> Result<Breakpoint, ParseError> {
        parse_term(pattern).map(Breakpoint::TermPattern)
    }

    pub fn rule(name: &str) -> Result<Breakpoint, ParseError> {
        let valid = name.starts_with(|c: char| c.is_ascii_lowercase())
            && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if valid {
            Ok(Breakpoint::RuleName(Name::new(name)))
        } else {
            Err(ParseError::at(1, 1, format!("invalid rule name `{name}`")))
        }
    }
}

impl fmt::Display for Breakpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Breakpoint::TermPattern(t) => write!(f, "break_term {t}"),
            Breakpoint::RuleName(n) => write!(f, "break_thm {n}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceConfig {
    pub mode: Mode,
    /// Present accepted steps as questions rather than only logging them.
    pub interactive: bool,
    /// Answer every remaining question with its default reply.
    pub auto_reply: bool,
    pub breakpoints: Vec<Breakpoint>,
    pub memory_enabled: bool,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            mode: Mode::Normal,
            interactive: true,
            auto_reply: false,
            breakpoints: Vec::new(),
            memory_enabled: true,
        }
    }
}

impl TraceConfig {
    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_interactive(mut self, interactive: bool) -> Self {
        self.interactive = interactive;
        self
    }

    pub fn with_auto_reply(mut self, auto_reply: bool) -> Self {
        self.auto_reply = auto_reply;
        self
    }

    pub fn with_breakpoint(mut self, bp: Breakpoint) -> Self {
        self.add_breakpoint(bp);
        self
    }

    /// Adds `bp` unless an identical breakpoint is already set.
    pub fn add_breakpoint(&mut self, bp: Breakpoint) {
        if !self.breakpoints.contains(&bp) {
            self.breakpoints.push(bp);
        }
    }

    pub fn remove_breakpoint(&mut self, bp: &Breakpoint) -> bool {
        let before = self.breakpoints.len();
        self.breakpoints.retain(|b| b != bp);
        before != self.breakpoints.len()
    }
}

/// Configuration shared between a running engine and whoever steers it, so
/// settings can change mid-run.
pub type SharedConfig = Arc<RwLock<TraceConfig>>;

pub fn shared(config: TraceConfig) -> SharedConfig {
    Arc::new(RwLock::new(config))
}
