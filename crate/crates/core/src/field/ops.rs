//! Field-operation counter used to check multiplication budgets.
//!
//! Counting is compiled in with debug assertions or the `op-count` feature
//! and is a no-op otherwise. Counts are per thread.

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounts {
    pub mul: u64,
    pub inv: u64,
}

#[cfg(any(debug_assertions, feature = "op-count"))]
mod imp {
    use super::OpCounts;
    use std::cell::Cell;

    thread_local! {
        static COUNTS: Cell<OpCounts> = const { Cell::new(OpCounts { mul: 0, inv: 0 }) };
    }

    pub const ENABLED: bool = true;

    #[inline]
    pub fn record_mul() {
        COUNTS.with(|c| {
            let mut v = c.get();
            v.mul += 1;
            c.set(v);
        });
    }

    #[inline]
    pub fn record_inv() {
        COUNTS.with(|c| {
            let mut v = c.get();
            v.inv += 1;
            c.set(v);
        });
    }

    pub fn snapshot() -> OpCounts {
        COUNTS.with(|c| c.get())
    }

    pub fn reset() {
        COUNTS.with(|c| c.set(OpCounts::default()));
    }
}

#[cfg(not(any(debug_assertions, feature = "op-count")))]
mod imp {
    use super::OpCounts;

    pub const ENABLED: bool = false;

    #[inline(always)]
    pub fn record_mul() {}

    #[inline(always)]
    pub fn record_inv() {}

    pub fn snapshot() -> OpCounts {
        OpCounts::default()
    }

    pub fn reset() {}
}

pub(crate) use imp::{record_inv, record_mul};
pub use imp::{reset, snapshot};

/// Whether counts are being collected in this build.
pub fn enabled() -> bool {
    imp::ENABLED
}

/// Runs `f` and returns the operations it performed on this thread.
pub fn measure<T>(f: impl FnOnce() -> T) -> (T, OpCounts) {
    let before = snapshot();
    let out = f();
    let after = snapshot();
    (
        out,
        OpCounts {
            mul: after.mul - before.mul,
            inv: after.inv - before.inv,
        },
    )
}

impl std::ops::Add for OpCounts {
    type Output = OpCounts;

    fn add(self, rhs: OpCounts) -> OpCounts {
        OpCounts {
            mul: self.mul + rhs.mul,
            inv: self.inv + rhs.inv,
        }
    }
}
