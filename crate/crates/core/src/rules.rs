//! Rewrite rules, ruleset files and root-position candidate lookup.
//!
//! A ruleset file holds one declaration per line:
//!
//! ```text
//! # comment
//! ceq1: nonzero(plus(N, M)) => true if nonzero(N), nonzero(M)
//! eq2:  nonzero(s(N)) => true
//! ```
//!
//! Declaration order is rule priority.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

use crate::term::{match_term, Lexer, Name, ParseError, Substitution, Term, TermParser, TokenKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("syntax error at {0}")]
    Syntax(#[from] ParseError),
    #[error("line {line}: duplicate rule name `{name}`")]
    DuplicateName { name: String, line: usize },
    #[error("line {line}: symbol `{symbol}` used with arity {found}, but it was declared with arity {expected}")]
    Arity {
        symbol: String,
        expected: usize,
        found: usize,
        line: usize,
    },
    #[error("rule {rule}: extra variable {var} (not bound by the left-hand side)")]
    ExtraVariable { rule: String, var: String },
    #[error("rule {rule}: left-hand side must not be a bare variable")]
    VariableLhs { rule: String },
    #[error("symbol `{symbol}` has arity {expected} in the ruleset but is used with arity {found}")]
    TermArity {
        symbol: String,
        expected: usize,
        found: usize,
    },
}

/// A named directed equation `lhs => rhs` guarded by an ordered list of
/// conditions, each of which must rewrite to `true`.
#[derive(Clone, PartialEq, Eq)]
pub struct RewriteRule {
    pub name: Name,
    pub lhs: Term,
    pub rhs: Term,
    pub conditions: Vec<Term>,
}

impl RewriteRule {
    pub fn new(name: &str, lhs: Term, rhs: Term, conditions: Vec<Term>) -> Self {
        RewriteRule {
            name: Name::new(name),
            lhs,
            rhs,
            conditions,
        }
    }

    pub fn is_conditional(&self) -> bool {
        !self.conditions.is_empty()
    }

    fn check_executable(&self) -> Result<(), RuleError> {
        if self.lhs.is_var() {
            return Err(RuleError::VariableLhs {
                rule: self.name.to_string(),
            });
        }
        let bound = self.lhs.vars();
        for t in std::iter::once(&self.rhs).chain(&self.conditions) {
            if let Some(v) = t.vars().into_iter().find(|v| !bound.contains(v)) {
                return Err(RuleError::ExtraVariable {
                    rule: self.name.to_string(),
                    var: Term::Var(v).to_string(),
                });
            }
        }
        Ok(())
    }
}

/// Formats `lhs => rhs if c1, c2` with the given (possibly instantiated) parts.
pub fn format_equation(lhs: &Term, rhs: &Term, conditions: &[Term]) -> String {
    let mut s = format!("{lhs} => {rhs}");
    for (i, c) in conditions.iter().enumerate() {
        s.push_str(if i == 0 { " if " } else { ", " });
        s.push_str(&c.to_string());
    }
    s
}

impl fmt::Display for RewriteRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {}",
            self.name,
            format_equation(&self.lhs, &self.rhs, &self.conditions)
        )
    }
}

impl fmt::Debug for RewriteRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// An ordered, validated collection of rules with a fixed signature and a
/// head-symbol index.
#[derive(Clone, Debug, Default)]
pub struct RuleSet {
    rules: Vec<RewriteRule>,
    signature: BTreeMap<Name, usize>,
    head_index: HashMap<Name, Vec<usize>>,
}

impl RuleSet {
    /// Validates and indexes `rules`, keeping their order.
    pub fn new(rules: Vec<RewriteRule>) -> Result<Self, RuleError> {
        let mut rs = RuleSet::default();
        for rule in rules {
            rs.push(rule, 0)?;
        }
        Ok(rs)
    }

    fn push(&mut self, rule: RewriteRule, line: usize) -> Result<(), RuleError> {
        if self.rules.iter().any(|r| r.name == rule.name) {
            return Err(RuleError::DuplicateName {
                name: rule.name.to_string(),
                line,
            });
        }
        rule.check_executable()?;
        let mut err = None;
        for t in [&rule.lhs, &rule.rhs].into_iter().chain(&rule.conditions) {
            t.for_each_symbol(&mut |sym, arity| {
                if err.is_some() {
                    return;
                }
                match self.signature.get(sym) {
                    Some(&expected) if expected != arity => {
                        err = Some(RuleError::Arity {
                            symbol: sym.to_string(),
                            expected,
                            found: arity,
                            line,
                        })
                    }
                    Some(_) => {}
                    None => {
                        self.signature.insert(sym.clone(), arity);
                    }
                }
            });
        }
        if let Some(e) = err {
            return Err(e);
        }
        let (head, _) = rule.lhs.head().expect("checked: lhs is an application");
        self.head_index
            .entry(head.clone())
            .or_default()
            .push(self.rules.len());
        self.rules.push(rule);
        Ok(())
    }

    pub fn rules(&self) -> &[RewriteRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&RewriteRule> {
        self.rules.iter().find(|r| r.name.as_str() == name)
    }

    pub fn signature(&self) -> &BTreeMap<Name, usize> {
        &self.signature
    }

    /// Positions (declaration indices) of the rules whose lhs head is `symbol`.
    pub fn rules_for_head(&self, symbol: &str) -> &[usize] {
        self.head_index.get(symbol).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Every rule whose lhs matches `redex` at the root, with its matcher, in
    /// declaration order.
    pub fn candidates(&self, redex: &Term) -> Vec<(&RewriteRule, Substitution)> {
        let Some((head, _)) = redex.head() else {
            return Vec::new();
        };
        self.rules_for_head(head)
            .iter()
            .filter_map(|&i| {
                let rule = &self.rules[i];
                match_term(&rule.lhs, redex).map(|s| (rule, s))
            })
            .collect()
    }

    /// Whether any rule matches at the root. Cheaper than `candidates`.
    pub fn has_candidate(&self, redex: &Term) -> bool {
        let Some((head, _)) = redex.head() else {
            return false;
        };
        self.rules_for_head(head)
            .iter()
            .any(|&i| match_term(&self.rules[i].lhs, redex).is_some())
    }

    /// Checks that every symbol of `t` known to the signature is used with its
    /// declared arity, and that unknown symbols are used consistently.
    pub fn check_term(&self, t: &Term) -> Result<(), RuleError> {
        let mut local: HashMap<Name, usize> = HashMap::new();
        let mut err = None;
        t.for_each_symbol(&mut |sym, arity| {
            if err.is_some() {
                return;
            }
            let expected = self
                .signature
                .get(sym)
                .copied()
                .unwrap_or_else(|| *local.entry(sym.clone()).or_insert(arity));
            if expected != arity {
                err = Some(RuleError::TermArity {
                    symbol: sym.to_string(),
                    expected,
                    found: arity,
                });
            }
        });
        err.map_or(Ok(()), Err)
    }
}

/// Parses a ruleset file.
pub fn parse_ruleset(text: &str) -> Result<RuleSet, RuleError> {
    let mut rs = RuleSet::default();
    let mut fresh = 0;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let tokens = Lexer::tokenize(line, lineno)?;
        if tokens.len() == 1 {
            continue;
        }
        let mut p = TermParser::new(&tokens, &mut fresh);
        let name = match p.bump().kind {
            TokenKind::Symbol(s) => s,
            _ => {
                let t = &tokens[0];
                return Err(ParseError::at(t.line, t.column, "expected a rule name").into());
            }
        };
        p.expect(TokenKind::Colon, "`:` after the rule name")?;
        let lhs = p.term()?;
        p.expect(TokenKind::Arrow, "`=>`")?;
        let rhs = p.term()?;
        let mut conditions = Vec::new();
        match &p.peek().kind {
            TokenKind::Eof => {}
            TokenKind::Symbol(kw) if kw == "if" => {
                p.bump();
                conditions.push(p.term()?);
                while p.peek().kind == TokenKind::Comma {
                    p.bump();
                    conditions.push(p.term()?);
                }
                if p.peek().kind != TokenKind::Eof {
                    return Err(p.unexpected("`,` or end of line").into());
                }
            }
            _ => return Err(p.unexpected("`if` or end of line").into()),
        }
        rs.push(RewriteRule::new(&name, lhs, rhs, conditions), lineno)?;
    }
    Ok(rs)
}
