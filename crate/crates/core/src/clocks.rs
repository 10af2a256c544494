//! Timestamp families and their update rules.
//!
//! Three clocks are modelled side by side:
//!
//! * [`SnapshotStamp`], a single logical tick per process. It is advanced by a
//!   configurable increment before an event is announced and merged with a
//!   plain `max` on receipt (no post-merge increment unless
//!   [`ClockParams::tick_after_merge`] is set).
//! * [`VectorStamp`], the classical n-slot vector clock.
//! * [`PhysicalStamp`], simulated wall time in microseconds.
//!
//! Logical ticks are generic over any unsigned primitive integer so the same
//! rules can run on `u32` for compact traces or `u64` (the crate-level
//! aliases) for everything else. Overflow is a hard fault, never a wrap.

use std::cmp::Ordering;
use std::fmt;
use std::hash::Hash;

use num_traits::{PrimInt, Unsigned};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Unsigned integer usable as a logical tick.
pub trait Tick:
    PrimInt + Unsigned + Hash + fmt::Debug + fmt::Display + Default + Send + Sync + 'static
{
}

impl<T> Tick for T where
    T: PrimInt + Unsigned + Hash + fmt::Debug + fmt::Display + Default + Send + Sync + 'static
{
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClockError {
    #[error("owner index {owner} out of range for a {len}-slot vector clock")]
    OwnerOutOfRange { owner: usize, len: usize },
    #[error("vector clock length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("malformed interval: lo must precede hi")]
    MalformedInterval,
    #[error("clock increment must be positive")]
    ZeroIncrement,
}

/// Increment policy shared by the logical clocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockParams {
    /// Amount added on every local tick; always at least 1.
    pub d: u64,
    /// Apply an extra `d` after a snapshot merge (classical Lamport receive rule).
    /// Off by default.
    #[serde(default)]
    pub tick_after_merge: bool,
}

impl Default for ClockParams {
    fn default() -> Self {
        Self {
            d: 1,
            tick_after_merge: false,
        }
    }
}

impl ClockParams {
    pub fn with_increment(d: u64) -> Result<Self, ClockError> {
        if d == 0 {
            return Err(ClockError::ZeroIncrement);
        }
        Ok(Self {
            d,
            tick_after_merge: false,
        })
    }

    fn increment<T: Tick>(&self) -> T {
        assert!(self.d > 0, "clock increment must be positive");
        T::from(self.d).expect("clock increment does not fit the tick type")
    }
}

fn add_or_fault<T: Tick>(value: T, d: T) -> T {
    value
        .checked_add(&d)
        .expect("logical clock overflow")
}

/// Scalar logical clock value.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct SnapshotStamp<T = u64> {
    pub tick: T,
}

impl<T: Tick> SnapshotStamp<T> {
    pub fn new(tick: T) -> Self {
        Self { tick }
    }

    pub fn zero() -> Self {
        Self { tick: T::zero() }
    }

    /// Local advance: `tick + d`.
    #[must_use]
    pub fn ticked(self, params: &ClockParams) -> Self {
        Self {
            tick: add_or_fault(self.tick, params.increment()),
        }
    }

    /// Receive rule: the larger of the two ticks, nothing added.
    #[must_use]
    pub fn merged(self, incoming: Self) -> Self {
        Self {
            tick: self.tick.max(incoming.tick),
        }
    }

    /// [`merged`](Self::merged), followed by a tick when the params ask for it.
    #[must_use]
    pub fn merged_with(self, incoming: Self, params: &ClockParams) -> Self {
        let merged = self.merged(incoming);
        if params.tick_after_merge {
            merged.ticked(params)
        } else {
            merged
        }
    }

    /// The stamp one increment later, used as an exclusive interval bound.
    #[must_use]
    pub fn successor(self, params: &ClockParams) -> Self {
        self.ticked(params)
    }
}

impl<T: Tick> fmt::Display for SnapshotStamp<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tick)
    }
}

/// Applies the local tick rule and returns the new stamp.
pub fn snapshot_tick<T: Tick>(clock: SnapshotStamp<T>, params: &ClockParams) -> SnapshotStamp<T> {
    clock.ticked(params)
}

/// Applies the receive rule and returns the new stamp.
pub fn snapshot_merge<T: Tick>(
    local: SnapshotStamp<T>,
    incoming: SnapshotStamp<T>,
) -> SnapshotStamp<T> {
    local.merged(incoming)
}

/// n-slot vector clock. Slot `i` counts the events of process `i` known here.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VectorStamp<T = u64> {
    slots: Vec<T>,
}

impl<T: Tick> VectorStamp<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            slots: vec![T::zero(); n],
        }
    }

    pub fn from_slots(slots: Vec<T>) -> Self {
        Self { slots }
    }

    pub fn slots(&self) -> &[T] {
        &self.slots
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn tick_in_place(&mut self, owner: usize, params: &ClockParams) -> Result<(), ClockError> {
        let len = self.slots.len();
        let slot = self
            .slots
            .get_mut(owner)
            .ok_or(ClockError::OwnerOutOfRange { owner, len })?;
        *slot = add_or_fault(*slot, params.increment());
        Ok(())
    }

    /// Slot-wise max with `incoming`, leaving every slot otherwise untouched.
    pub fn join_in_place(&mut self, incoming: &Self) -> Result<(), ClockError> {
        if self.slots.len() != incoming.slots.len() {
            return Err(ClockError::LengthMismatch {
                left: self.slots.len(),
                right: incoming.slots.len(),
            });
        }
        for (mine, theirs) in self.slots.iter_mut().zip(&incoming.slots) {
            if *theirs > *mine {
                *mine = *theirs;
            }
        }
        Ok(())
    }

    pub fn ticked(&self, owner: usize, params: &ClockParams) -> Result<Self, ClockError> {
        let mut next = self.clone();
        next.tick_in_place(owner, params)?;
        Ok(next)
    }

    /// Receive rule: slot-wise max, then tick the owner slot.
    pub fn merged(
        &self,
        incoming: &Self,
        owner: usize,
        params: &ClockParams,
    ) -> Result<Self, ClockError> {
        let mut next = self.clone();
        next.join_in_place(incoming)?;
        next.tick_in_place(owner, params)?;
        Ok(next)
    }

    /// Strict causal precedence: `self <= other` slot-wise and the two differ.
    ///
    /// Vectors of different lengths are never ordered.
    pub fn happened_before(&self, other: &Self) -> bool {
        if self.slots.len() != other.slots.len() {
            return false;
        }
        let mut strict = false;
        for (a, b) in self.slots.iter().zip(&other.slots) {
            match a.cmp(b) {
                Ordering::Greater => return false,
                Ordering::Less => strict = true,
                Ordering::Equal => {}
            }
        }
        strict
    }
}

impl<T: Tick> PartialOrd for VectorStamp<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        if self.slots.len() != other.slots.len() {
            return None;
        }
        let mut less = false;
        let mut greater = false;
        for (a, b) in self.slots.iter().zip(&other.slots) {
            match a.cmp(b) {
                Ordering::Less => less = true,
                Ordering::Greater => greater = true,
                Ordering::Equal => {}
            }
        }
        match (less, greater) {
            (false, false) => Some(Ordering::Equal),
            (true, false) => Some(Ordering::Less),
            (false, true) => Some(Ordering::Greater),
            (true, true) => None,
        }
    }
}

pub fn vector_tick<T: Tick>(
    clock: &VectorStamp<T>,
    owner: usize,
    params: &ClockParams,
) -> Result<VectorStamp<T>, ClockError> {
    clock.ticked(owner, params)
}

pub fn vector_merge<T: Tick>(
    local: &VectorStamp<T>,
    incoming: &VectorStamp<T>,
    owner: usize,
    params: &ClockParams,
) -> Result<VectorStamp<T>, ClockError> {
    local.merged(incoming, owner, params)
}

/// Simulated wall time, microseconds since the start of a trace.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct PhysicalStamp {
    pub micros: u64,
}

impl PhysicalStamp {
    pub fn new(micros: u64) -> Self {
        Self { micros }
    }
}

/// Number of machine words a stamp occupies when piggybacked on a message.
pub trait ClockPayload {
    fn words(&self) -> usize;
}

impl<T: Tick> ClockPayload for SnapshotStamp<T> {
    fn words(&self) -> usize {
        1
    }
}

impl<T: Tick> ClockPayload for VectorStamp<T> {
    fn words(&self) -> usize {
        self.slots.len()
    }
}

impl ClockPayload for PhysicalStamp {
    fn words(&self) -> usize {
        1
    }
}

/// Stamp kinds that can bound an [`Interval`].
pub trait IntervalStamp: Clone {
    /// Whether `[lo, hi)` is a legal interval for this stamp kind.
    fn well_formed(lo: &Self, hi: &Self) -> bool;

    /// Every stamp of `a` lies at or before every stamp of `b`, with at
    /// least one strict inequality.
    fn precedes(a: &Interval<Self>, b: &Interval<Self>) -> bool;
}

impl<T: Tick> IntervalStamp for SnapshotStamp<T> {
    fn well_formed(lo: &Self, hi: &Self) -> bool {
        lo < hi
    }

    // Half-open: the last stamp of `a` is hi - 1, so hi <= b.lo suffices.
    fn precedes(a: &Interval<Self>, b: &Interval<Self>) -> bool {
        a.hi <= b.lo
    }
}

impl IntervalStamp for PhysicalStamp {
    fn well_formed(lo: &Self, hi: &Self) -> bool {
        lo < hi
    }

    fn precedes(a: &Interval<Self>, b: &Interval<Self>) -> bool {
        a.hi <= b.lo
    }
}

impl<T: Tick> IntervalStamp for VectorStamp<T> {
    fn well_formed(lo: &Self, hi: &Self) -> bool {
        lo.len() == hi.len() && matches!(lo.partial_cmp(hi), Some(Ordering::Less | Ordering::Equal))
    }

    fn precedes(a: &Interval<Self>, b: &Interval<Self>) -> bool {
        a.hi.happened_before(&b.lo)
    }
}

/// An event's stamp interval: `lo` at its start, `hi` bounding its end.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval<S> {
    pub lo: S,
    pub hi: S,
}

impl<S: IntervalStamp> Interval<S> {
    pub fn new(lo: S, hi: S) -> Result<Self, ClockError> {
        if S::well_formed(&lo, &hi) {
            Ok(Self { lo, hi })
        } else {
            Err(ClockError::MalformedInterval)
        }
    }

    pub fn is_well_formed(&self) -> bool {
        S::well_formed(&self.lo, &self.hi)
    }
}

impl<T: Tick> Interval<SnapshotStamp<T>> {
    /// Whether `x` lies in `[lo, hi)`.
    pub fn contains(&self, x: SnapshotStamp<T>) -> bool {
        self.lo <= x && x < self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IntervalOrder {
    Before,
    After,
    Concurrent,
}

/// Orders two intervals of the same stamp kind, or reports them concurrent.
pub fn interval_compare<S: IntervalStamp>(a: &Interval<S>, b: &Interval<S>) -> IntervalOrder {
    if S::precedes(a, b) {
        IntervalOrder::Before
    } else if S::precedes(b, a) {
        IntervalOrder::After
    } else {
        IntervalOrder::Concurrent
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn snap(t: u64) -> SnapshotStamp {
        SnapshotStamp::new(t)
    }

    fn scalar(lo: u64, hi: u64) -> Interval<SnapshotStamp> {
        Interval::new(snap(lo), snap(hi)).unwrap()
    }

    fn vs(slots: &[u64]) -> VectorStamp {
        VectorStamp::from_slots(slots.to_vec())
    }

    #[test]
    fn snapshot_tick_examples() {
        let one = ClockParams::default();
        assert_eq!(snapshot_tick(snap(5), &one), snap(6));
        assert_eq!(snapshot_tick(snap(0), &one), snap(1));
        let three = ClockParams::with_increment(3).unwrap();
        assert_eq!(snapshot_tick(snap(7), &three), snap(10));
    }

    #[test]
    fn fresh_clock_is_zero() {
        assert_eq!(SnapshotStamp::<u64>::default(), snap(0));
        assert_eq!(SnapshotStamp::<u32>::zero().tick, 0u32);
    }

    #[test]
    fn snapshot_merge_examples() {
        assert_eq!(snapshot_merge(snap(7), snap(10)), snap(10));
        assert_eq!(snapshot_merge(snap(10), snap(7)), snap(10));
        assert_eq!(snapshot_merge(snap(4), snap(4)), snap(4));
    }

    #[test]
    fn merge_tick_flag_adds_increment() {
        let params = ClockParams {
            d: 1,
            tick_after_merge: true,
        };
        assert_eq!(snap(7).merged_with(snap(10), &params), snap(11));
        assert_eq!(snap(7).merged_with(snap(10), &ClockParams::default()), snap(10));
    }

    #[test]
    fn zero_increment_rejected() {
        assert_eq!(ClockParams::with_increment(0), Err(ClockError::ZeroIncrement));
    }

    #[test]
    #[should_panic(expected = "overflow")]
    fn overflow_is_a_hard_fault() {
        let _ = SnapshotStamp::new(u8::MAX).ticked(&ClockParams::default());
    }

    #[test]
    fn narrow_tick_types_follow_the_same_rules() {
        let p = ClockParams::with_increment(2).unwrap();
        let s = SnapshotStamp::new(3u16).ticked(&p).merged(SnapshotStamp::new(4));
        assert_eq!(s.tick, 5u16);
        let v = VectorStamp::from_slots(vec![1u32, 0]).merged(&VectorStamp::from_slots(vec![0, 2]), 0, &ClockParams::default());
        assert_eq!(v.unwrap().slots(), &[2u32, 2]);
    }

    #[test]
    fn vector_tick_examples() {
        let one = ClockParams::default();
        assert_eq!(vector_tick(&vs(&[0, 0, 0]), 1, &one).unwrap(), vs(&[0, 1, 0]));
        assert_eq!(vector_tick(&vs(&[2, 5, 1]), 0, &one).unwrap(), vs(&[3, 5, 1]));
        let two = ClockParams::with_increment(2).unwrap();
        assert_eq!(vector_tick(&vs(&[2, 5, 1]), 2, &two).unwrap(), vs(&[2, 5, 3]));
    }

    #[test]
    fn vector_tick_rejects_bad_owner() {
        let err = vector_tick(&vs(&[0, 0]), 2, &ClockParams::default()).unwrap_err();
        assert_eq!(err, ClockError::OwnerOutOfRange { owner: 2, len: 2 });
    }

    #[test]
    fn vector_merge_examples() {
        let one = ClockParams::default();
        assert_eq!(vector_merge(&vs(&[1, 0]), &vs(&[0, 2]), 0, &one).unwrap(), vs(&[2, 2]));
        assert_eq!(vector_merge(&vs(&[3, 3]), &vs(&[3, 3]), 1, &one).unwrap(), vs(&[3, 4]));
        assert_eq!(
            vector_merge(&vs(&[0, 0, 5]), &vs(&[4, 0, 0]), 2, &one).unwrap(),
            vs(&[4, 0, 6])
        );
    }

    #[test]
    fn vector_merge_rejects_length_mismatch() {
        let err = vector_merge(&vs(&[1, 0]), &vs(&[0, 2, 0]), 0, &ClockParams::default());
        assert_eq!(err, Err(ClockError::LengthMismatch { left: 2, right: 3 }));
    }

    #[test]
    fn interval_compare_examples() {
        assert_eq!(interval_compare(&scalar(1, 3), &scalar(5, 9)), IntervalOrder::Before);
        assert_eq!(interval_compare(&scalar(1, 6), &scalar(4, 9)), IntervalOrder::Concurrent);
        assert_eq!(interval_compare(&scalar(2, 4), &scalar(2, 4)), IntervalOrder::Concurrent);
        // touching half-open intervals are ordered
        assert_eq!(interval_compare(&scalar(1, 3), &scalar(3, 4)), IntervalOrder::Before);
    }

    #[test]
    fn malformed_scalar_interval_rejected() {
        assert_eq!(
            Interval::new(snap(4), snap(4)),
            Err(ClockError::MalformedInterval)
        );
    }

    #[test]
    fn vector_interval_order() {
        let a = Interval::new(vs(&[1, 0]), vs(&[2, 0])).unwrap();
        let b = Interval::new(vs(&[2, 1]), vs(&[2, 3])).unwrap();
        let c = Interval::new(vs(&[0, 1]), vs(&[0, 2])).unwrap();
        assert_eq!(interval_compare(&a, &b), IntervalOrder::Before);
        assert_eq!(interval_compare(&b, &a), IntervalOrder::After);
        assert_eq!(interval_compare(&a, &c), IntervalOrder::Concurrent);
        // lo == hi is allowed for vectors
        assert!(Interval::new(vs(&[1, 1]), vs(&[1, 1])).is_ok());
        assert!(Interval::new(vs(&[2, 1]), vs(&[1, 1])).is_err());
    }

    #[test]
    fn payload_words() {
        assert_eq!(snap(9).words(), 1);
        assert_eq!(PhysicalStamp::new(3).words(), 1);
        assert_eq!(VectorStamp::<u64>::zeros(20).words(), 20);
    }

    fn arb_scalar() -> impl Strategy<Value = Interval<SnapshotStamp>> {
        (0u64..50, 1u64..20).prop_map(|(lo, len)| scalar(lo, lo + len))
    }

    fn arb_vector_interval(n: usize) -> impl Strategy<Value = Interval<VectorStamp>> {
        (
            prop::collection::vec(0u64..6, n),
            prop::collection::vec(0u64..4, n),
        )
            .prop_map(|(lo, grow)| {
                let hi: Vec<u64> = lo.iter().zip(&grow).map(|(a, g)| a + g).collect();
                Interval::new(vs(&lo), vs(&hi)).unwrap()
            })
    }

    fn flip(o: IntervalOrder) -> IntervalOrder {
        match o {
            IntervalOrder::Before => IntervalOrder::After,
            IntervalOrder::After => IntervalOrder::Before,
            IntervalOrder::Concurrent => IntervalOrder::Concurrent,
        }
    }

    proptest! {
        #[test]
        fn scalar_compare_is_antisymmetric(a in arb_scalar(), b in arb_scalar()) {
            prop_assert_eq!(interval_compare(&a, &b), flip(interval_compare(&b, &a)));
        }

        #[test]
        fn vector_compare_is_antisymmetric(a in arb_vector_interval(3), b in arb_vector_interval(3)) {
            prop_assert_eq!(interval_compare(&a, &b), flip(interval_compare(&b, &a)));
        }

        #[test]
        fn scalar_compare_matches_stamp_sets(a in arb_scalar(), b in arb_scalar()) {
            // ordered intervals share no stamp: every stamp of a lies below every stamp of b
            let a_pts: Vec<u64> = (a.lo.tick..a.hi.tick).collect();
            let b_pts: Vec<u64> = (b.lo.tick..b.hi.tick).collect();
            let le = |xs: &[u64], ys: &[u64]| xs.iter().all(|x| ys.iter().all(|y| x < y));
            let expected = if le(&a_pts, &b_pts) {
                IntervalOrder::Before
            } else if le(&b_pts, &a_pts) {
                IntervalOrder::After
            } else {
                IntervalOrder::Concurrent
            };
            prop_assert_eq!(interval_compare(&a, &b), expected);
        }

        #[test]
        fn snapshot_updates_are_monotone(
            ops in prop::collection::vec((any::<bool>(), 0u64..100), 1..40),
            d in 1u64..4,
        ) {
            let params = ClockParams::with_increment(d).unwrap();
            let mut clock = SnapshotStamp::<u64>::zero();
            for (is_tick, incoming) in ops {
                let next = if is_tick {
                    clock.ticked(&params)
                } else {
                    clock.merged(snap(incoming))
                };
                prop_assert!(next >= clock);
                if is_tick {
                    prop_assert!(next > clock);
                }
                clock = next;
            }
        }

        #[test]
        fn vector_join_is_order_independent(
            incoming in prop::collection::vec(prop::collection::vec(0u64..10, 4), 1..6),
            seed in any::<u64>(),
        ) {
            let mut forward = VectorStamp::<u64>::zeros(4);
            for v in &incoming {
                forward.join_in_place(&vs(v)).unwrap();
            }
            let mut shuffled = incoming.clone();
            // deterministic permutation from the seed
            let len = shuffled.len();
            for i in (1..len).rev() {
                let j = (seed.wrapping_mul(6364136223846793005).wrapping_add(i as u64) % (i as u64 + 1)) as usize;
                shuffled.swap(i, j);
            }
            let mut backward = VectorStamp::<u64>::zeros(4);
            for v in shuffled.iter().rev() {
                backward.join_in_place(&vs(v)).unwrap();
            }
            prop_assert_eq!(forward, backward);
        }

        #[test]
        fn vector_slots_never_decrease(
            steps in prop::collection::vec((0usize..3, prop::collection::vec(0u64..8, 3)), 1..20),
        ) {
            let params = ClockParams::default();
            let mut clock = VectorStamp::<u64>::zeros(3);
            for (owner, other) in steps {
                let next = clock.merged(&vs(&other), owner, &params).unwrap();
                prop_assert!(clock.happened_before(&next));
                clock = next;
            }
        }
    }
}
