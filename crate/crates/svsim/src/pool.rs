use rayon::prelude::*;
use svsim_core::exec::{Executor, ThreadPolicy};

/// Executor backed by a dedicated rayon pool of `policy.num_threads` threads.
pub struct Pool {
    pool: rayon::ThreadPool,
    policy: ThreadPolicy,
}

impl Pool {
    pub fn new(policy: ThreadPolicy) -> Self {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(policy.num_threads)
            .thread_name(|i| format!("svsim-worker-{i}"))
            .build()
            .expect("failed to start thread pool");
        Self { pool, policy }
    }
}

impl Executor for Pool {
    fn policy(&self) -> ThreadPolicy {
        self.policy
    }

    fn run<T, F>(&self, tasks: Vec<T>, f: F)
    where
        T: Send,
        F: Fn(T) + Sync + Send,
    {
        if self.policy.num_threads <= 1 || tasks.len() <= 1 {
            tasks.into_iter().for_each(f);
        } else {
            self.pool.install(|| tasks.into_par_iter().for_each(f));
        }
    }
}
