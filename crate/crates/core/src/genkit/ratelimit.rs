use std::sync::Mutex;
use std::time::{Duration, Instant};

/// Token bucket shared by provider workers; `acquire` blocks until a token is free.
#[derive(Debug)]
pub struct TokenBucket {
    capacity: f64,
    per_second: f64,
    state: Mutex<(f64, Instant)>,
}

impl TokenBucket {
    /// A bucket that starts full and refills at `per_second` tokens per second.
    pub fn new(capacity: usize, per_second: f64) -> Self {
        assert!(
            capacity >= 1 && per_second > 0.0,
            "token bucket needs capacity >= 1 and a positive rate"
        );
        TokenBucket {
            capacity: capacity as f64,
            per_second,
            state: Mutex::new((capacity as f64, Instant::now())),
        }
    }

    /// Takes a token if one is available, otherwise reports how long to wait.
    fn try_take(&self, now: Instant) -> Result<(), Duration> {
        let mut guard = self.state.lock().expect("token bucket lock");
        let (tokens, last) = &mut *guard;
        let elapsed = now.saturating_duration_since(*last).as_secs_f64();
        *tokens = (*tokens + elapsed * self.per_second).min(self.capacity);
        *last = now;
        if *tokens >= 1.0 {
            *tokens -= 1.0;
            Ok(())
        } else {
            Err(Duration::from_secs_f64((1.0 - *tokens) / self.per_second))
        }
    }

    pub fn acquire(&self) {
        while let Err(wait) = self.try_take(Instant::now()) {
            std::thread::sleep(wait);
        }
    }
}
