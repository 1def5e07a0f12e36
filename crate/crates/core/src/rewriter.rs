//! Leftmost-innermost conditional rewriting, instrumented with hooks.
//!
//! Arguments are normalized left to right before the root. At the root the
//! candidate rules are tried in declaration order; the first whose conditions
//! all reduce to `true` fires and the result is normalized again. Every step
//! is reported to a [`HookSink`], which can veto it, and can ask to redo a
//! failed attempt from the state captured just before it.

use std::sync::atomic::{AtomicUsize, Ordering};

use thiserror::Error;

use crate::par;
use crate::rules::{RewriteRule, RuleSet};
use crate::term::{substitute, Name, Substitution, Term};
use crate::tracing::{Answer, MsgId, TraceMessage};

pub const DEFAULT_MAX_STEPS: usize = 10_000;
pub const DEFAULT_MAX_DEPTH: usize = 200;

const STACK_RED_ZONE: usize = 128 * 1024;
const STACK_CHUNK: usize = 4 * 1024 * 1024;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("cancelled")]
    Cancelled,
    #[error("protocol error: {0}")]
    Protocol(String),
}

/// One candidate step, as shown to the sink before conditions are solved.
pub struct ApplyStep<'a> {
    pub rule: &'a RewriteRule,
    pub subst: &'a Substitution,
    pub redex: &'a Term,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ApplyOutcome {
    pub id: MsgId,
    /// `Continue` or `Skip`.
    pub answer: Answer,
    /// Whether a user actually saw the step. Only such steps may be redone.
    pub interactive: bool,
}

#[derive(Clone, Copy, Debug)]
pub enum Hint<'a> {
    Success(&'a Term),
    Failed,
}

/// Receiver of the engine's hook calls.
///
/// `invoke` opens a normalization (the whole term or one condition),
/// `apply` announces a candidate step, `hint` closes either of them and `log`
/// carries free text. Parents are always ids previously returned by the sink.
pub trait HookSink: Sync {
    fn invoke(&self, term: &Term, parent: Option<MsgId>, depth: usize) -> MsgId;

    fn apply(
        &self,
        step: &ApplyStep<'_>,
        parent: MsgId,
        depth: usize,
    ) -> Result<ApplyOutcome, EngineError>;

    /// For a failed interactive step the reply is `Redo` or `Accept`; in all
    /// other cases `None`.
    fn hint(
        &self,
        hint: Hint<'_>,
        parent: MsgId,
        depth: usize,
        interactive: bool,
    ) -> Result<Option<Answer>, EngineError>;

    fn log(&self, text: &str, parent: Option<MsgId>, depth: usize);

    /// Messages kept so far.
    fn messages(&self) -> Vec<TraceMessage> {
        Vec::new()
    }
}

/// A sink that keeps nothing and never interferes.
#[derive(Default)]
pub struct NullSink {
    next: AtomicUsize,
}

impl HookSink for NullSink {
    fn invoke(&self, _term: &Term, _parent: Option<MsgId>, _depth: usize) -> MsgId {
        MsgId(self.next.fetch_add(1, Ordering::Relaxed) as u64 + 1)
    }

    fn apply(
        &self,
        _step: &ApplyStep<'_>,
        _parent: MsgId,
        _depth: usize,
    ) -> Result<ApplyOutcome, EngineError> {
        Ok(ApplyOutcome {
            id: MsgId(self.next.fetch_add(1, Ordering::Relaxed) as u64 + 1),
            answer: Answer::Continue,
            interactive: false,
        })
    }

    fn hint(
        &self,
        _hint: Hint<'_>,
        _parent: MsgId,
        _depth: usize,
        _interactive: bool,
    ) -> Result<Option<Answer>, EngineError> {
        self.next.fetch_add(1, Ordering::Relaxed);
        Ok(None)
    }

    fn log(&self, _text: &str, _parent: Option<MsgId>, _depth: usize) {
        self.next.fetch_add(1, Ordering::Relaxed);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Budget of successful rewrite steps.
    pub max_steps: usize,
    /// Maximum nesting of condition solving.
    pub max_depth: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_steps: DEFAULT_MAX_STEPS,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

impl Limits {
    pub fn steps(max_steps: usize) -> Self {
        Limits {
            max_steps,
            ..Limits::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalizeResult {
    /// The normal form, or the partially rewritten term when exhausted.
    pub term: Term,
    pub steps: usize,
    pub exhausted: bool,
    pub messages: Vec<TraceMessage>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleOutcome {
    Applied(Term),
    Failed,
    Skipped,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConditionOutcome {
    AllSolved,
    /// Index of the first condition that did not reduce to `true`.
    FirstFailure(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FailureAction {
    Retry,
    AcceptFailure,
}

/// Why a normalization stopped early.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Interrupt {
    /// The step budget ran out; carries the term as rewritten so far.
    Exhausted(Term),
    Halted(EngineError),
}

impl From<EngineError> for Interrupt {
    fn from(e: EngineError) -> Self {
        Interrupt::Halted(e)
    }
}

/// State captured before a rule attempt, so a redo can start over from it.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub apply: MsgId,
    pub rule: Name,
    pub redex: Term,
    /// Steps committed when the attempt started.
    pub steps: usize,
}

pub struct Engine<'a, S: HookSink + ?Sized> {
    rules: &'a RuleSet,
    sink: &'a S,
    limits: Limits,
    parallel: bool,
    used: AtomicUsize,
}

impl<'a, S: HookSink + ?Sized> Engine<'a, S> {
    pub fn new(rules: &'a RuleSet, sink: &'a S) -> Self {
        Engine {
            rules,
            sink,
            limits: Limits::default(),
            parallel: false,
            used: AtomicUsize::new(0),
        }
    }

    pub fn with_limits(mut self, limits: Limits) -> Self {
        self.limits = limits;
        self
    }

    /// Solve the conditions of one step concurrently. Has no effect without
    /// the `parallel` feature.
    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn steps(&self) -> usize {
        self.used.load(Ordering::SeqCst)
    }

    pub fn normalize(&self, t: &Term) -> Result<NormalizeResult, EngineError> {
        self.used.store(0, Ordering::SeqCst);
        let root = self.sink.invoke(t, None, 0);
        let mut tally = 0;
        let (term, exhausted) = match self.normalize_term(t, root, 0, &mut tally) {
            Ok(nf) => (nf, false),
            Err(Interrupt::Exhausted(partial)) => (partial, true),
            Err(Interrupt::Halted(e)) => return Err(e),
        };
        Ok(NormalizeResult {
            term,
            steps: self.steps(),
            exhausted,
            messages: self.sink.messages(),
        })
    }

    /// Normalizes `t` below the open invocation `invoke`. Steps committed
    /// along the way are added to `tally`.
    pub fn normalize_term(
        &self,
        t: &Term,
        invoke: MsgId,
        depth: usize,
        tally: &mut usize,
    ) -> Result<Term, Interrupt> {
        stacker::maybe_grow(STACK_RED_ZONE, STACK_CHUNK, || {
            self.normalize_inner(t, invoke, depth, tally)
        })
    }

    fn normalize_inner(
        &self,
        t: &Term,
        invoke: MsgId,
        depth: usize,
        tally: &mut usize,
    ) -> Result<Term, Interrupt> {
        let mut current = t.clone();
        loop {
            let (f, args) = match &current {
                Term::Var(_) => return Ok(current),
                Term::App(f, args) => (f.clone(), args.clone()),
            };
            let mut rebuilt: Option<Vec<Term>> = None;
            for (i, a) in args.iter().enumerate() {
                match self.normalize_term(a, invoke, depth, tally) {
                    Ok(n) => {
                        if rebuilt.is_some() || n != *a {
                            rebuilt
                                .get_or_insert_with(|| args[..i].to_vec())
                                .push(n);
                        }
                    }
                    Err(Interrupt::Exhausted(partial)) => {
                        let mut v = rebuilt.unwrap_or_else(|| args[..i].to_vec());
                        v.push(partial);
                        v.extend(args[i + 1..].iter().cloned());
                        return Err(Interrupt::Exhausted(Term::App(f, v.into())));
                    }
                    Err(e) => return Err(e),
                }
            }
            if let Some(v) = rebuilt {
                current = Term::App(f, v.into());
            }

            let mut rewritten = None;
            for (rule, subst) in self.rules.candidates(&current) {
                match self.try_rule(rule, &subst, &current, invoke, depth, tally) {
                    Ok(RuleOutcome::Applied(r)) => {
                        rewritten = Some(r);
                        break;
                    }
                    Ok(_) => {}
                    Err(Interrupt::Exhausted(_)) => return Err(Interrupt::Exhausted(current)),
                    Err(e) => return Err(e),
                }
            }
            match rewritten {
                Some(r) => current = r,
                None => return Ok(current),
            }
        }
    }

    /// Tries one candidate step on `redex`, redoing it as long as the sink
    /// asks for it.
    pub fn try_rule(
        &self,
        rule: &RewriteRule,
        subst: &Substitution,
        redex: &Term,
        invoke: MsgId,
        depth: usize,
        tally: &mut usize,
    ) -> Result<RuleOutcome, Interrupt> {
        loop {
            let step = ApplyStep { rule, subst, redex };
            let outcome = self.sink.apply(&step, invoke, depth)?;
            let checkpoint = Checkpoint {
                apply: outcome.id,
                rule: rule.name.clone(),
                redex: redex.clone(),
                steps: self.steps(),
            };
            match outcome.answer {
                Answer::Continue => {}
                Answer::Skip => {
                    self.sink.log("skipped", Some(outcome.id), depth);
                    return Ok(RuleOutcome::Skipped);
                }
                other => {
                    return Err(EngineError::Protocol(format!(
                        "`{other}` is not a reply to an apply question"
                    ))
                    .into())
                }
            }

            let mut attempt = 0;
            let solved = self.solve_conditions(rule, subst, outcome.id, depth, &mut attempt);
            let solved = match solved {
                Ok(s) => s,
                Err(e) => {
                    *tally += attempt;
                    return Err(e);
                }
            };
            match solved {
                ConditionOutcome::AllSolved => {
                    if !self.reserve_step() {
                        *tally += attempt;
                        self.sink.log(
                            &format!("step budget of {} exhausted", self.limits.max_steps),
                            Some(outcome.id),
                            depth,
                        );
                        return Err(Interrupt::Exhausted(redex.clone()));
                    }
                    *tally += attempt + 1;
                    let result = substitute(subst, &rule.rhs);
                    self.sink
                        .hint(Hint::Success(&result), outcome.id, depth, false)?;
                    return Ok(RuleOutcome::Applied(result));
                }
                ConditionOutcome::FirstFailure(_) => {
                    match self.handle_failure(&checkpoint, outcome.interactive, depth)? {
                        FailureAction::Retry => {
                            self.restore(&checkpoint, attempt);
                        }
                        FailureAction::AcceptFailure => {
                            *tally += attempt;
                            return Ok(RuleOutcome::Failed);
                        }
                    }
                }
            }
        }
    }

    /// Instantiates and solves the conditions of `rule`. A condition holds
    /// when it normalizes to exactly `true`.
    pub fn solve_conditions(
        &self,
        rule: &RewriteRule,
        subst: &Substitution,
        apply: MsgId,
        depth: usize,
        tally: &mut usize,
    ) -> Result<ConditionOutcome, Interrupt> {
        if rule.conditions.is_empty() {
            return Ok(ConditionOutcome::AllSolved);
        }
        let depth = depth + 1;
        if depth > self.limits.max_depth {
            self.sink.log(
                &format!("condition depth limit of {} reached", self.limits.max_depth),
                Some(apply),
                depth,
            );
            return Err(Interrupt::Exhausted(Term::truth()));
        }
        let conds: Vec<Term> = rule.conditions.iter().map(|c| substitute(subst, c)).collect();

        if self.parallel && conds.len() > 1 {
            let results = par::map(&conds, true, |c| {
                let mut local = 0;
                let r = self.solve_one(c, apply, depth, &mut local);
                (r, local)
            });
            let mut first_failure = None;
            let mut first_error = None;
            for (i, (r, local)) in results.into_iter().enumerate() {
                *tally += local;
                match r {
                    Ok(true) => {}
                    Ok(false) => {
                        first_failure.get_or_insert(i);
                    }
                    Err(e) => {
                        first_error.get_or_insert(e);
                    }
                }
            }
            if let Some(e) = first_error {
                return Err(e);
            }
            return Ok(match first_failure {
                Some(i) => ConditionOutcome::FirstFailure(i),
                None => ConditionOutcome::AllSolved,
            });
        }

        for (i, c) in conds.iter().enumerate() {
            if !self.solve_one(c, apply, depth, tally)? {
                return Ok(ConditionOutcome::FirstFailure(i));
            }
        }
        Ok(ConditionOutcome::AllSolved)
    }

    fn solve_one(
        &self,
        cond: &Term,
        apply: MsgId,
        depth: usize,
        tally: &mut usize,
    ) -> Result<bool, Interrupt> {
        let id = self.sink.invoke(cond, Some(apply), depth);
        let nf = self.normalize_term(cond, id, depth, tally)?;
        let solved = nf.is_truth();
        let hint = if solved {
            Hint::Success(&nf)
        } else {
            Hint::Failed
        };
        self.sink.hint(hint, id, depth, false)?;
        Ok(solved)
    }

    /// Reports a failed attempt and asks the sink whether to redo it. Only an
    /// interactive step can be redone; the reply to any other is ignored.
    pub fn handle_failure(
        &self,
        checkpoint: &Checkpoint,
        interactive: bool,
        depth: usize,
    ) -> Result<FailureAction, Interrupt> {
        match self
            .sink
            .hint(Hint::Failed, checkpoint.apply, depth, interactive)?
        {
            None | Some(Answer::Accept) => Ok(FailureAction::AcceptFailure),
            Some(Answer::Redo) if interactive => Ok(FailureAction::Retry),
            Some(Answer::Redo) => Err(EngineError::Protocol(format!(
                "redo requested for step {}, which was not interactive",
                checkpoint.apply
            ))
            .into()),
            Some(other) => Err(EngineError::Protocol(format!(
                "`{other}` is not a reply to a failed step"
            ))
            .into()),
        }
    }

    /// Gives back the steps committed by a discarded attempt.
    fn restore(&self, checkpoint: &Checkpoint, attempt: usize) {
        debug_assert!(self.steps() >= checkpoint.steps.min(attempt));
        self.used.fetch_sub(attempt, Ordering::SeqCst);
    }

    fn reserve_step(&self) -> bool {
        let max = self.limits.max_steps;
        self.used
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| {
                (n < max).then_some(n + 1)
            })
            .is_ok()
    }
}

/// Normalizes `t` with a fresh engine.
pub fn normalize<S: HookSink + ?Sized>(
    t: &Term,
    rules: &RuleSet,
    sink: &S,
    limits: Limits,
    parallel: bool,
) -> Result<NormalizeResult, EngineError> {
    Engine::new(rules, sink)
        .with_limits(limits)
        .with_parallel(parallel)
        .normalize(t)
}

/// Normalizes `t` without any tracing.
pub fn normalize_plain(t: &Term, rules: &RuleSet, limits: Limits) -> NormalizeResult {
    normalize(t, rules, &NullSink::default(), limits, false)
        .expect("a null sink never halts the engine")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::parse_ruleset;
    use crate::term::parse_term;

    const NAT: &str = "ceq1: nonzero(plus(N, M)) => true if nonzero(N), nonzero(M)\neq2: nonzero(s(N)) => true\n";

    fn nf(rules: &str, t: &str, max: usize) -> NormalizeResult {
        normalize_plain(
            &parse_term(t).unwrap(),
            &parse_ruleset(rules).unwrap(),
            Limits::steps(max),
        )
    }

    #[test]
    fn conditional_step() {
        let r = nf(NAT, "nonzero(plus(s(zero), s(s(zero))))", 100);
        assert_eq!(r.term.to_string(), "true");
        assert_eq!(r.steps, 3);
        assert!(!r.exhausted);
    }

    #[test]
    fn unsolved_condition_leaves_term() {
        let r = nf(NAT, "nonzero(plus(zero, s(zero)))", 100);
        assert_eq!(r.term.to_string(), "nonzero(plus(zero, s(zero)))");
        assert_eq!(r.steps, 0);
    }

    #[test]
    fn innermost_first() {
        let rules = "a: f(X) => g(X)\nb: h => k\nc: g(k) => done\n";
        let r = nf(rules, "f(h)", 100);
        assert_eq!(r.term.to_string(), "done");
        assert_eq!(r.steps, 3);
    }

    #[test]
    fn first_declared_rule_wins() {
        let r = nf("one: f(X) => a\ntwo: f(X) => b\n", "f(c)", 100);
        assert_eq!(r.term.to_string(), "a");
    }

    #[test]
    fn budget_is_exact() {
        let r = nf("loop: f(X) => f(X)\n", "f(a)", 5);
        assert!(r.exhausted);
        assert_eq!(r.steps, 5);
        assert_eq!(r.term.to_string(), "f(a)");
        let r = nf("loop: f(X) => f(X)\n", "f(a)", 0);
        assert!(r.exhausted);
        assert_eq!(r.steps, 0);
    }

    #[test]
    fn partial_term_keeps_finished_arguments() {
        let rules = "a: h => k\nloop: f(X) => f(X)\n";
        let r = nf(rules, "g(h, f(a), h)", 4);
        assert!(r.exhausted);
        assert_eq!(r.term.to_string(), "g(k, f(a), h)");
    }

    #[test]
    fn deep_condition_chain_hits_depth_limit() {
        let rules = "r: p(X) => true if p(X)\n";
        let r = normalize_plain(
            &parse_term("p(a)").unwrap(),
            &parse_ruleset(rules).unwrap(),
            Limits {
                max_steps: 100,
                max_depth: 20,
            },
        );
        assert!(r.exhausted);
        assert_eq!(r.steps, 0);
    }

    #[test]
    fn parallel_agrees_on_conditions() {
        let rs = parse_ruleset(NAT).unwrap();
        let t = parse_term("nonzero(plus(plus(s(a), s(b)), s(zero)))").unwrap();
        let seq = normalize(&t, &rs, &NullSink::default(), Limits::default(), false).unwrap();
        let par = normalize(&t, &rs, &NullSink::default(), Limits::default(), true).unwrap();
        assert_eq!(seq.term, par.term);
        assert_eq!(seq.steps, par.steps);
    }

    #[test]
    fn deep_terms_do_not_overflow() {
        let mut t = Term::constant("zero");
        for _ in 0..3_000 {
            t = Term::app("s", vec![t]);
        }
        let r = normalize_plain(
            &t,
            &parse_ruleset("z: s(zero) => zero\n").unwrap(),
            Limits::steps(10_000),
        );
        assert_eq!(r.term.to_string(), "zero");
        assert_eq!(r.steps, 3_000);
    }
}
