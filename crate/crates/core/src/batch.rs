//! Reducing many independent terms at once.

use std::sync::Arc;

use crate::par;
use crate::rewriter::{normalize, EngineError, Limits};
use crate::rules::RuleSet;
use crate::term::Term;
use crate::tracing::{FilterStats, MemoryStore, TraceConfig, Tracer, DefaultFrontend};

#[derive(Clone)]
pub struct Job {
    pub rules: Arc<RuleSet>,
    pub term: Term,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BatchOutcome {
    pub term: Term,
    pub steps: usize,
    pub exhausted: bool,
    pub messages: usize,
    pub stats: FilterStats,
}

/// Reduces every job under `config`, each with its own tracer and memory and
/// default answers. Jobs run on the rayon pool when `parallel` is set.
pub fn reduce_all(
    jobs: &[Job],
    config: &TraceConfig,
    limits: Limits,
    parallel: bool,
) -> Vec<Result<BatchOutcome, EngineError>> {
    par::map(jobs, parallel, |job| {
        let tracer = Tracer::new(
            0,
            crate::tracing::shared(config.clone()),
            Arc::new(MemoryStore::new()),
            DefaultFrontend,
        );
        let r = normalize(&job.term, &job.rules, &tracer, limits, false)?;
        Ok(BatchOutcome {
            term: r.term,
            steps: r.steps,
            exhausted: r.exhausted,
            messages: r.messages.len(),
            stats: tracer.stats(),
        })
    })
}
