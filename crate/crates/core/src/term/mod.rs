//! First-order terms, substitutions and one-way matching.
//!
//! A [`Term`] is either a variable or a symbol applied to an ordered list of
//! arguments; constants are zero-argument applications. Terms double as
//! patterns: the left-hand side of a rule and a term breakpoint are both just
//! terms whose variables get bound by [`match_term`].

mod parse;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

pub(crate) use parse::{Lexer, TermParser, TokenKind};
pub use parse::{parse_term, ParseError};

/// An interned-by-sharing identifier used for symbols and variables.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name(Arc<str>);

impl Name {
    pub fn new(s: &str) -> Self {
        Name(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Deref for Name {
    type Target = str;

    fn deref(&self) -> &str {
        &self.0
    }
}

impl std::borrow::Borrow<str> for Name {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Self {
        Name::new(s)
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

/// A first-order term.
///
/// Arguments live behind an `Arc` so cloning a term is cheap and subterms are
/// shared between a redex and its contractum.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Var(Name),
    App(Name, Arc<[Term]>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Name::new(name))
    }

    pub fn constant(symbol: &str) -> Term {
        Term::App(Name::new(symbol), Arc::from(Vec::new()))
    }

    pub fn app(symbol: &str, args: Vec<Term>) -> Term {
        Term::App(Name::new(symbol), Arc::from(args))
    }

    /// The distinguished truth constant conditions must rewrite to.
    pub fn truth() -> Term {
        Term::constant("true")
    }

    pub fn is_truth(&self) -> bool {
        matches!(self, Term::App(f, args) if args.is_empty() && f.as_str() == "true")
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    /// Head symbol and arity, `None` for variables.
    pub fn head(&self) -> Option<(&Name, usize)> {
        match self {
            Term::Var(_) => None,
            Term::App(f, args) => Some((f, args.len())),
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Var(_) => &[],
            Term::App(_, args) => args,
        }
    }

    /// Variables in order of first occurrence (left to right).
    pub fn vars(&self) -> Vec<Name> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut Vec<Name>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    /// Visit every symbol occurrence with its arity.
    pub fn for_each_symbol<F: FnMut(&Name, usize)>(&self, f: &mut F) {
        if let Term::App(sym, args) = self {
            f(sym, args.len());
            for a in args.iter() {
                a.for_each_symbol(f);
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }

    /// All subterms in pre-order, the term itself first.
    pub fn subterms(&self) -> Vec<&Term> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            out.push(t);
            stack.extend(t.args().iter().rev());
        }
        out
    }

    fn write_to(&self, out: &mut String) {
        match self {
            Term::Var(v) => write_var(v, out),
            Term::App(f, args) => {
                out.push_str(f);
                if !args.is_empty() {
                    out.push('(');
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            out.push_str(", ");
                        }
                        a.write_to(out);
                    }
                    out.push(')');
                }
            }
        }
    }
}

fn write_var(v: &Name, out: &mut String) {
    match v.chars().next() {
        Some(c) if c.is_ascii_uppercase() => out.push_str(v),
        // fresh wildcard variables
        Some('_') => out.push('_'),
        _ => {
            out.push('?');
            out.push_str(v);
        }
    }
}

/// Canonical printed form. Deterministic and re-parseable for every term
/// that does not contain wildcard variables.
pub fn print_term(t: &Term) -> String {
    let mut out = String::new();
    t.write_to(&mut out);
    out
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_term(self))
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_term(self))
    }
}

/// Finite map from variable names to terms.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Substitution(BTreeMap<Name, Term>);

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, var: &str) -> Option<&Term> {
        self.0.get(var)
    }

    pub fn insert(&mut self, var: Name, t: Term) -> Option<Term> {
        self.0.insert(var, t)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &Term)> {
        self.0.iter()
    }

    pub fn apply(&self, t: &Term) -> Term {
        substitute(self, t)
    }
}

impl FromIterator<(Name, Term)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (Name, Term)>>(iter: I) -> Self {
        Substitution(iter.into_iter().collect())
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, t)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            let mut name = String::new();
            write_var(v, &mut name);
            write!(f, "{name} -> {t}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Homomorphically replaces every variable in the domain of `subst`.
/// Subterms without domain variables are shared, not copied.
pub fn substitute(subst: &Substitution, t: &Term) -> Term {
    if subst.is_empty() {
        return t.clone();
    }
    substitute_inner(subst, t).unwrap_or_else(|| t.clone())
}

// `None` means "unchanged".
fn substitute_inner(subst: &Substitution, t: &Term) -> Option<Term> {
    match t {
        Term::Var(v) => subst.get(v).cloned(),
        Term::App(f, args) => {
            let mut changed: Option<Vec<Term>> = None;
            for (i, a) in args.iter().enumerate() {
                if let Some(new) = substitute_inner(subst, a) {
                    changed
                        .get_or_insert_with(|| args[..i].to_vec())
                        .push(new);
                } else if let Some(v) = changed.as_mut() {
                    v.push(a.clone());
                }
            }
            changed.map(|v| Term::App(f.clone(), Arc::from(v)))
        }
    }
}

/// One-way first-order matching: finds σ with `substitute(σ, pattern) == subject`.
///
/// Variables of `subject` are rigid and are never bound. Repeated pattern
/// variables must be bound to structurally equal subterms.
pub fn match_term(pattern: &Term, subject: &Term) -> Option<Substitution> {
    let mut subst = Substitution::new();
    match_into(pattern, subject, &mut subst).then_some(subst)
}

/// Extends `subst` in place; on failure `subst` may hold partial bindings.
pub fn match_into(pattern: &Term, subject: &Term, subst: &mut Substitution) -> bool {
    match (pattern, subject) {
        (Term::Var(v), _) => match subst.get(v) {
            Some(bound) => bound == subject,
            None => {
                subst.insert(v.clone(), subject.clone());
                true
            }
        },
        (Term::App(f, ps), Term::App(g, ss)) => {
            f == g
                && ps.len() == ss.len()
                && ps.iter().zip(ss.iter()).all(|(p, s)| match_into(p, s, subst))
        }
        (Term::App(..), Term::Var(_)) => false,
    }
}
