//! Real-multiplication accounting.
//!
//! Every arithmetic helper in [`crate::numerics::ops`] bumps a thread-local
//! tally. A [`CountScope`] snapshots the tally when opened, so the number of
//! multiplications performed inside it is a simple difference. Scopes nest;
//! an inner scope's work is also visible to every enclosing scope.
//!
//! Cost model: complex x complex = 4, complex x real = 2, real x real = 1.
//! Divisions are charged like the multiplication they replace.

use std::cell::{Cell, RefCell};
use std::marker::PhantomData;

use crate::error::{Error, Result};

thread_local! {
    static TALLY: Cell<u64> = const { Cell::new(0) };
    static LABELS: RefCell<Vec<String>> = const { RefCell::new(Vec::new()) };
}

#[inline(always)]
pub fn add_real_mults(n: u64) {
    TALLY.with(|t| t.set(t.get().wrapping_add(n)));
}

/// Raw thread-local tally; only differences are meaningful.
#[inline]
pub fn current_tally() -> u64 {
    TALLY.with(Cell::get)
}

/// Closed counting scope.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpCounter {
    pub label: String,
    pub real_mults: u64,
}

/// An open counting scope. Not `Send`: the tally it watches is per thread.
#[derive(Debug)]
pub struct CountScope {
    label: String,
    start: u64,
    _thread_bound: PhantomData<*const ()>,
}

/// Opens a counting scope on the current thread.
///
/// Nesting is allowed, but re-opening a label that is already active on this
/// thread is a usage error.
pub fn counted_context(label: &str) -> Result<CountScope> {
    LABELS.with(|labels| {
        let mut labels = labels.borrow_mut();
        if labels.iter().any(|l| l == label) {
            return Err(Error::Usage(format!(
                "counting scope '{label}' is already open on this thread"
            )));
        }
        labels.push(label.to_string());
        Ok(())
    })?;
    Ok(CountScope {
        label: label.to_string(),
        start: current_tally(),
        _thread_bound: PhantomData,
    })
}

impl CountScope {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn real_mults(&self) -> u64 {
        current_tally().wrapping_sub(self.start)
    }

    pub fn finish(self) -> OpCounter {
        OpCounter {
            label: self.label.clone(),
            real_mults: self.real_mults(),
        }
    }
}

impl Drop for CountScope {
    fn drop(&mut self) {
        LABELS.with(|labels| {
            let mut labels = labels.borrow_mut();
            if let Some(pos) = labels.iter().rposition(|l| *l == self.label) {
                labels.remove(pos);
            }
        });
    }
}
