use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;

use super::{generate_variants, GenerationLog, PromptTemplate, Provider, TokenBucket};
use crate::error::{Error, Result};
use crate::model::{Profile, QueryVariant, Topic};

/// Maps `f` over `items` on up to `workers` threads and hands results to `sink`
/// on the calling thread in input order, whatever order they finish in.
/// A sink error stops further work and is returned.
pub fn parallel_ordered<T, R, F, S>(items: &[T], workers: usize, f: F, mut sink: S) -> Result<()>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
    S: FnMut(usize, R) -> Result<()>,
{
    let workers = workers.clamp(1, items.len().max(1));
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    std::thread::scope(|scope| {
        let (tx, rx) = mpsc::channel::<(usize, R)>();
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, stop, f) = (&next, &stop, &f);
            scope.spawn(move || loop {
                if stop.load(Ordering::Relaxed) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                if tx.send((i, f(&items[i]))).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        let mut pending = BTreeMap::new();
        let mut expected = 0;
        for (i, r) in rx {
            pending.insert(i, r);
            while let Some(r) = pending.remove(&expected) {
                if let Err(e) = sink(expected, r) {
                    stop.store(true, Ordering::Relaxed);
                    return Err(e);
                }
                expected += 1;
            }
        }
        Ok(())
    })
}

pub struct SweepOptions<'a> {
    pub workers: usize,
    pub max_retries: usize,
    pub rate_limit: Option<&'a TokenBucket>,
}

impl Default for SweepOptions<'_> {
    fn default() -> Self {
        SweepOptions {
            workers: 4,
            max_retries: 3,
            rate_limit: None,
        }
    }
}

#[derive(Debug)]
pub struct SweepFailure {
    pub topic_id: String,
    pub profile_id: String,
    pub error: Error,
}

#[derive(Debug, Default)]
pub struct SweepSummary {
    pub completed: usize,
    pub failures: Vec<SweepFailure>,
}

/// Generates every (topic, profile) pair. Successful pairs reach `on_success` in
/// pair order so logs written from it are deterministic; failed pairs are
/// collected and do not stop the sweep.
pub fn run_sweep<S>(
    provider: &dyn Provider,
    template: &PromptTemplate,
    pairs: &[(Topic, Profile)],
    options: &SweepOptions<'_>,
    mut on_success: S,
) -> Result<SweepSummary>
where
    S: FnMut(Vec<QueryVariant>, GenerationLog) -> Result<()>,
{
    let mut summary = SweepSummary::default();
    let work = |(topic, profile): &(Topic, Profile)| {
        if let Some(bucket) = options.rate_limit {
            bucket.acquire();
        }
        generate_variants(provider, topic, profile, template, options.max_retries)
    };
    parallel_ordered(pairs, options.workers, work, |i, outcome| {
        match outcome {
            Ok((variants, log)) => {
                on_success(variants, log)?;
                summary.completed += 1;
            }
            Err(error) => {
                let (topic, profile) = &pairs[i];
                log::error!(
                    "generation failed for {}/{}: {error}",
                    topic.topic_id,
                    profile.profile_id
                );
                summary.failures.push(SweepFailure {
                    topic_id: topic.topic_id.clone(),
                    profile_id: profile.profile_id.clone(),
                    error,
                });
            }
        }
        Ok(())
    })?;
    Ok(summary)
}
