//! Persistent particle paths.
//!
//! A path is a singly linked list of `(state, carry)` nodes that shares its
//! prefix with every descendant, so cloning a path on resampling is O(1).

use std::fmt;
use std::sync::Arc;

struct Node<S, C> {
    state: S,
    carry: C,
    time: usize,
    parent: Option<Arc<Node<S, C>>>,
}

impl<S, C> Drop for Node<S, C> {
    // Unlink iteratively so long chains do not overflow the stack.
    fn drop(&mut self) {
        let mut next = self.parent.take();
        while let Some(node) = next {
            match Arc::try_unwrap(node) {
                Ok(mut inner) => next = inner.parent.take(),
                Err(_) => break,
            }
        }
    }
}

/// A path `x_{0:t}` together with the model carry after every state.
pub struct Trajectory<S, C> {
    head: Option<Arc<Node<S, C>>>,
}

impl<S, C> Clone for Trajectory<S, C> {
    fn clone(&self) -> Self {
        Trajectory {
            head: self.head.clone(),
        }
    }
}

impl<S, C> Default for Trajectory<S, C> {
    fn default() -> Self {
        Trajectory { head: None }
    }
}

impl<S: fmt::Debug, C> fmt::Debug for Trajectory<S, C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.iter_rev().map(|(s, _)| s)).finish()
    }
}

impl<S, C> Trajectory<S, C> {
    pub fn empty() -> Self {
        Trajectory { head: None }
    }

    /// Number of states held, i.e. `t + 1` for a path ending at `t`.
    pub fn len(&self) -> usize {
        self.head.as_ref().map_or(0, |n| n.time + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.head.is_none()
    }

    pub fn push(&self, state: S, carry: C) -> Self {
        let time = self.len();
        Trajectory {
            head: Some(Arc::new(Node {
                state,
                carry,
                time,
                parent: self.head.clone(),
            })),
        }
    }

    pub fn last_state(&self) -> Option<&S> {
        self.head.as_ref().map(|n| &n.state)
    }

    pub fn last_carry(&self) -> Option<&C> {
        self.head.as_ref().map(|n| &n.carry)
    }

    fn node_at(&self, time: usize) -> Option<&Arc<Node<S, C>>> {
        let mut cur = self.head.as_ref()?;
        if time > cur.time {
            return None;
        }
        while cur.time > time {
            cur = cur.parent.as_ref()?;
        }
        Some(cur)
    }

    pub fn state_at(&self, time: usize) -> Option<&S> {
        self.node_at(time).map(|n| &n.state)
    }

    pub fn carry_at(&self, time: usize) -> Option<&C> {
        self.node_at(time).map(|n| &n.carry)
    }

    /// The prefix holding the first `len` states.
    pub fn truncated(&self, len: usize) -> Self {
        if len == 0 {
            return Trajectory::empty();
        }
        Trajectory {
            head: self.node_at(len - 1).cloned(),
        }
    }

    /// Iterate `(state, carry)` from the newest node backwards.
    pub fn iter_rev(&self) -> impl Iterator<Item = (&S, &C)> {
        let mut cur = self.head.as_deref();
        std::iter::from_fn(move || {
            let node = cur?;
            cur = node.parent.as_deref();
            Some((&node.state, &node.carry))
        })
    }

    /// True when both paths share the same newest node.
    pub fn same_head(&self, other: &Self) -> bool {
        match (&self.head, &other.head) {
            (Some(a), Some(b)) => Arc::ptr_eq(a, b),
            (None, None) => true,
            _ => false,
        }
    }
}

impl<S: Clone, C> Trajectory<S, C> {
    /// States `x_0..x_t` in time order.
    pub fn states(&self) -> Vec<S> {
        let mut v: Vec<S> = self.iter_rev().map(|(s, _)| s.clone()).collect();
        v.reverse();
        v
    }

    /// States from `from` (inclusive) to the end, in time order.
    pub fn states_from(&self, from: usize) -> Vec<S> {
        let n = self.len();
        let mut v: Vec<S> = self
            .iter_rev()
            .take(n.saturating_sub(from))
            .map(|(s, _)| s.clone())
            .collect();
        v.reverse();
        v
    }
}

impl<S, C: Clone> Trajectory<S, C> {
    /// Carries from `from` (inclusive) to the end, in time order.
    pub fn carries_from(&self, from: usize) -> Vec<C> {
        let n = self.len();
        let mut v: Vec<C> = self
            .iter_rev()
            .take(n.saturating_sub(from))
            .map(|(_, c)| c.clone())
            .collect();
        v.reverse();
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_and_read_back() {
        let p: Trajectory<u8, ()> = Trajectory::empty();
        let p = p.push(1, ()).push(2, ()).push(3, ());
        assert_eq!(p.len(), 3);
        assert_eq!(p.states(), vec![1, 2, 3]);
        assert_eq!(p.state_at(0), Some(&1));
        assert_eq!(p.state_at(3), None);
        assert_eq!(p.truncated(2).states(), vec![1, 2]);
        assert_eq!(p.states_from(1), vec![2, 3]);
        assert!(p.truncated(0).is_empty());
    }

    #[test]
    fn shared_prefix() {
        let base: Trajectory<u32, ()> = Trajectory::empty().push(0, ());
        let a = base.push(1, ());
        let b = base.push(2, ());
        assert!(a.truncated(1).same_head(&b.truncated(1)));
        assert!(!a.same_head(&b));
    }

    #[test]
    fn long_chain_drops_without_overflow() {
        let mut p: Trajectory<u64, ()> = Trajectory::empty();
        for i in 0..1_000_000 {
            p = p.push(i, ());
        }
        assert_eq!(p.len(), 1_000_000);
        drop(p);
    }
}
