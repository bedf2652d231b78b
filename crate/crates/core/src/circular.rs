//! Bounded frame store with independent read and write pointers.
//!
//! Frames vary in length, newly written frames overwrite the slot at the
//! write pointer (resizing it), and a full buffer evicts its oldest unread
//! frame rather than ever rejecting the writer. Sequential reads consume at
//! the read pointer; random access by frame index or timestamp does not
//! consume.
//!
//! # Concurrency
//!
//! [`CircularBuffer`] is a plain value. [`SharedCircularBuffer`] wraps it for
//! the one-producer/one-consumer case: every operation acquires a short
//! internal spin lock, mutates, and releases, so a writer call always
//! completes regardless of reader state and vice versa — neither side can
//! block the other indefinitely, and a reader never observes a partially
//! written frame. More than one concurrent producer or consumer per buffer is
//! outside the contract.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cell::UnsafeCell;
use core::sync::atomic::{AtomicBool, Ordering};

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum BufferError {
    #[error("no stored frame")]
    Empty,
    #[error("frame {index} is not stored (evicted or not yet written)")]
    NotStored { index: u64 },
    #[error("no stored frame at or before timestamp {timestamp}")]
    NoFrameAtOrBefore { timestamp: i64 },
}

/// One stored frame: a monotonically increasing sequence number, a
/// presentation timestamp in ticks, and the frame bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub index: u64,
    pub timestamp: i64,
    pub data: Vec<u8>,
}

impl Frame {
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Addresses a stored frame for non-consuming random access.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameSelector {
    /// Exact sequence number.
    Index(u64),
    /// The stored frame with the greatest timestamp at or before this one.
    Timestamp(i64),
}

/// Occupancy counters sampled from a buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct BufferStats {
    pub capacity_frames: usize,
    pub stored: usize,
    pub frames_written: u64,
    pub frames_evicted: u64,
}

#[derive(Debug)]
pub struct CircularBuffer {
    capacity: usize,
    slots: Vec<Option<Frame>>,
    read_ptr: usize,
    write_ptr: usize,
    stored: usize,
    next_index: u64,
    evictions: u64,
}

impl CircularBuffer {
    /// Creates a buffer holding up to `capacity_frames` frames.
    ///
    /// `capacity_frames` must be at least 1; capacity checks for
    /// configuration inputs belong to the caller.
    pub fn new(capacity_frames: usize) -> CircularBuffer {
        assert!(capacity_frames >= 1, "circular buffer capacity must be >= 1");
        let mut slots = Vec::with_capacity(capacity_frames);
        slots.resize_with(capacity_frames, || None);
        CircularBuffer {
            capacity: capacity_frames,
            slots,
            read_ptr: 0,
            write_ptr: 0,
            stored: 0,
            next_index: 0,
            evictions: 0,
        }
    }

    pub fn capacity_frames(&self) -> usize {
        self.capacity
    }

    pub fn stored(&self) -> usize {
        self.stored
    }

    pub fn evictions(&self) -> u64 {
        self.evictions
    }

    /// Sequence number the next write will receive.
    pub fn next_index(&self) -> u64 {
        self.next_index
    }

    pub fn stats(&self) -> BufferStats {
        BufferStats {
            capacity_frames: self.capacity,
            stored: self.stored,
            frames_written: self.next_index,
            frames_evicted: self.evictions,
        }
    }

    /// Stores a frame at the write pointer and returns its sequence number.
    ///
    /// The slot is resized to the incoming data. A full buffer evicts the
    /// oldest unread frame and moves the read pointer past it; the writer is
    /// never rejected.
    pub fn write_frame(&mut self, data: Vec<u8>, timestamp: i64) -> u64 {
        let index = self.next_index;
        self.next_index += 1;
        let frame = Frame { index, timestamp, data };
        if self.stored == self.capacity {
            // Full: write pointer sits on the oldest frame; overwriting it
            // is the eviction.
            debug_assert_eq!(self.write_ptr, self.read_ptr);
            self.slots[self.write_ptr] = Some(frame);
            self.write_ptr = (self.write_ptr + 1) % self.capacity;
            self.read_ptr = self.write_ptr;
            self.evictions += 1;
        } else {
            self.slots[self.write_ptr] = Some(frame);
            self.write_ptr = (self.write_ptr + 1) % self.capacity;
            self.stored += 1;
        }
        index
    }

    /// Consumes and returns the frame at the read pointer.
    pub fn read_frame(&mut self) -> Result<Frame, BufferError> {
        if self.stored == 0 {
            return Err(BufferError::Empty);
        }
        let frame = self.slots[self.read_ptr].take().expect("stored slot must hold a frame");
        self.read_ptr = (self.read_ptr + 1) % self.capacity;
        self.stored -= 1;
        Ok(frame)
    }

    /// Returns a copy of a stored frame without moving the read pointer.
    pub fn read_frame_at(&self, selector: FrameSelector) -> Result<Frame, BufferError> {
        match selector {
            FrameSelector::Index(index) => self
                .iter_stored()
                .find(|f| f.index == index)
                .cloned()
                .ok_or(BufferError::NotStored { index }),
            FrameSelector::Timestamp(timestamp) => self
                .iter_stored()
                .filter(|f| f.timestamp <= timestamp)
                .max_by_key(|f| (f.timestamp, f.index))
                .cloned()
                .ok_or(BufferError::NoFrameAtOrBefore { timestamp }),
        }
    }

    /// Stored frames in read order (oldest first).
    pub fn iter_stored(&self) -> impl Iterator<Item = &Frame> {
        (0..self.stored).map(move |k| {
            self.slots[(self.read_ptr + k) % self.capacity]
                .as_ref()
                .expect("stored slot must hold a frame")
        })
    }
}

struct SpinGuard<'a> {
    owner: &'a SharedCircularBuffer,
}

impl core::ops::Deref for SpinGuard<'_> {
    type Target = CircularBuffer;

    fn deref(&self) -> &CircularBuffer {
        // SAFETY: the lock flag grants exclusive access while the guard lives.
        unsafe { &*self.owner.cell.get() }
    }
}

impl core::ops::DerefMut for SpinGuard<'_> {
    fn deref_mut(&mut self) -> &mut CircularBuffer {
        // SAFETY: as above.
        unsafe { &mut *self.owner.cell.get() }
    }
}

impl Drop for SpinGuard<'_> {
    fn drop(&mut self) {
        self.owner.lock.store(false, Ordering::Release);
    }
}

/// A [`CircularBuffer`] shareable between one producer and one consumer
/// thread. See the module docs for the concurrency contract.
pub struct SharedCircularBuffer {
    lock: AtomicBool,
    cell: UnsafeCell<CircularBuffer>,
}

// SAFETY: all access to the inner buffer goes through the spin lock.
unsafe impl Send for SharedCircularBuffer {}
unsafe impl Sync for SharedCircularBuffer {}

impl SharedCircularBuffer {
    pub fn new(capacity_frames: usize) -> Arc<SharedCircularBuffer> {
        Arc::new(SharedCircularBuffer {
            lock: AtomicBool::new(false),
            cell: UnsafeCell::new(CircularBuffer::new(capacity_frames)),
        })
    }

    fn lock(&self) -> SpinGuard<'_> {
        while self
            .lock
            .compare_exchange_weak(false, true, Ordering::Acquire, Ordering::Relaxed)
            .is_err()
        {
            core::hint::spin_loop();
        }
        SpinGuard { owner: self }
    }

    pub fn write_frame(&self, data: Vec<u8>, timestamp: i64) -> u64 {
        self.lock().write_frame(data, timestamp)
    }

    pub fn read_frame(&self) -> Result<Frame, BufferError> {
        self.lock().read_frame()
    }

    pub fn read_frame_at(&self, selector: FrameSelector) -> Result<Frame, BufferError> {
        self.lock().read_frame_at(selector)
    }

    pub fn stats(&self) -> BufferStats {
        self.lock().stats()
    }
}

impl core::fmt::Debug for SharedCircularBuffer {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let stats = self.stats();
        f.debug_struct("SharedCircularBuffer")
            .field("capacity_frames", &stats.capacity_frames)
            .field("stored", &stats.stored)
            .finish()
    }
}
