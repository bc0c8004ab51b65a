use std::num::NonZeroUsize;
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use bosewalk_core::{Complex64, Executor, Sequential, Stopwatch};

/// Runs chunks on a fixed number of scoped worker threads.
///
/// Every chunk is computed independently of the others, so results do not
/// depend on the thread count.
#[derive(Clone, Copy, Debug)]
pub struct Threaded {
    threads: NonZeroUsize,
}

impl Threaded {
    pub fn new(threads: usize) -> Self {
        Self { threads: NonZeroUsize::new(threads).unwrap_or(NonZeroUsize::MIN) }
    }

    /// One thread per available core.
    pub fn available() -> Self {
        Self { threads: thread::available_parallelism().unwrap_or(NonZeroUsize::MIN) }
    }

    pub fn threads(&self) -> usize {
        self.threads.get()
    }
}

impl Executor for Threaded {
    fn fill_chunks(&self, out: &mut [Complex64], chunk_len: usize, job: &(dyn Fn(usize, &mut [Complex64]) + Sync)) {
        let chunk_len = chunk_len.max(1);
        let workers = self.threads.get().min(out.len().div_ceil(chunk_len));
        if workers <= 1 {
            return Sequential.fill_chunks(out, chunk_len, job);
        }
        let queue = Mutex::new(out.chunks_mut(chunk_len).enumerate());
        thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let next = queue.lock().unwrap_or_else(|e| e.into_inner()).next();
                    let Some((i, chunk)) = next else { break };
                    job(i * chunk_len, chunk);
                });
            }
        });
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct WallClock {
    started: Option<Instant>,
}

impl Stopwatch for WallClock {
    fn start(&mut self) {
        self.started = Some(Instant::now());
    }

    fn elapsed(&self) -> Option<Duration> {
        self.started.map(|t| t.elapsed())
    }
}
