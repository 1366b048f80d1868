//! Thread policy and the executor abstraction the kernels fan out over.

/// Which loop of the kernel nest is split across threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ParallelLevel {
    /// Split the group (outer) loop.
    Outer,
    /// Split the pair (inner) loop inside each group.
    Inner,
    /// Pick per gate: `Outer` when the outer loop has at least as many
    /// iterations as there are threads, else `Inner`.
    #[default]
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ThreadPolicy {
    pub num_threads: usize,
    pub parallel_level: ParallelLevel,
}

impl Default for ThreadPolicy {
    fn default() -> Self {
        Self::serial()
    }
}

impl ThreadPolicy {
    pub const fn serial() -> Self {
        Self {
            num_threads: 1,
            parallel_level: ParallelLevel::Auto,
        }
    }

    pub fn new(num_threads: usize, parallel_level: ParallelLevel) -> Self {
        Self {
            num_threads: num_threads.max(1),
            parallel_level,
        }
    }

    /// Resolve `Auto` for a loop nest whose outer loop runs `outer_iters` times.
    pub fn resolve(&self, outer_iters: usize) -> ParallelLevel {
        match self.parallel_level {
            ParallelLevel::Auto if outer_iters >= self.num_threads => ParallelLevel::Outer,
            ParallelLevel::Auto => ParallelLevel::Inner,
            level => level,
        }
    }
}

/// Runs a batch of independent tasks, possibly concurrently.
///
/// Tasks handed to one `run` call always touch disjoint memory, so any
/// execution order yields the same result.
pub trait Executor: Sync {
    fn policy(&self) -> ThreadPolicy;

    fn run<T, F>(&self, tasks: alloc::vec::Vec<T>, f: F)
    where
        T: Send,
        F: Fn(T) + Sync + Send;
}

/// Runs every task on the calling thread, in order.
#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

impl Executor for Serial {
    fn policy(&self) -> ThreadPolicy {
        ThreadPolicy::serial()
    }

    fn run<T, F>(&self, tasks: alloc::vec::Vec<T>, f: F)
    where
        T: Send,
        F: Fn(T) + Sync + Send,
    {
        tasks.into_iter().for_each(f);
    }
}

/// Partitions work as if `policy` had that many threads but runs the tasks
/// serially in reverse order. Exercises the partitioning logic without
/// needing a thread pool.
#[derive(Debug, Clone, Copy)]
pub struct Shuffled(pub ThreadPolicy);

impl Executor for Shuffled {
    fn policy(&self) -> ThreadPolicy {
        self.0
    }

    fn run<T, F>(&self, tasks: alloc::vec::Vec<T>, f: F)
    where
        T: Send,
        F: Fn(T) + Sync + Send,
    {
        tasks.into_iter().rev().for_each(f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auto_resolution() {
        let p = ThreadPolicy::new(8, ParallelLevel::Auto);
        assert_eq!(p.resolve(16), ParallelLevel::Outer);
        assert_eq!(p.resolve(8), ParallelLevel::Outer);
        assert_eq!(p.resolve(7), ParallelLevel::Inner);
        let forced = ThreadPolicy::new(8, ParallelLevel::Inner);
        assert_eq!(forced.resolve(1 << 20), ParallelLevel::Inner);
        assert_eq!(ThreadPolicy::new(0, ParallelLevel::Outer).num_threads, 1);
    }
}
