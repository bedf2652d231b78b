//! Discrete-event simulation of the program-stream System Target Decoder.
//!
//! Bytes of each elementary stream arrive on a schedule into a per-stream
//! input buffer of size `B_n`; access unit `j` is decoded (its bytes leave
//! the buffer atomically) at `td_n(j)`, and each decoded access unit emits
//! exactly one presentation unit at `tp_n(k)` equal to the unit's pts.
//! Occupancy is sampled at every arrival and decode event — it is piecewise
//! constant in between, so this is lossless.
//!
//! Non-conformance never raises an error: the trace's verdict reports
//! `OVERFLOW` when an arrival would push occupancy past the buffer size and
//! `UNDERFLOW` when a decode is scheduled before the unit's last byte has
//! arrived.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::Serialize;

use crate::stream::ToyStream;

/// Byte arrival schedule for one elementary stream: `(byte index, tick)`
/// pairs with strictly increasing indices and non-decreasing times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrivalSchedule {
    pub stream_id: u32,
    pub entries: Vec<(u64, i64)>,
}

impl ArrivalSchedule {
    /// Arrival time of the last byte at or before `byte_index`, if covered.
    fn arrival_of(&self, byte_index: u64) -> Option<i64> {
        self.entries
            .get(byte_index as usize)
            .filter(|(i, _)| *i == byte_index)
            .map(|(_, t)| *t)
    }
}

/// Transfer rate expressed as `bytes` per `per_ticks` ticks, kept rational so
/// schedules stay exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ByteRate {
    pub bytes: u64,
    pub per_ticks: u64,
}

impl ByteRate {
    pub fn per_tick(bytes: u64) -> ByteRate {
        ByteRate { bytes, per_ticks: 1 }
    }
}

/// Builds the schedule `t(i) = start + floor(i / rate)` over every byte of
/// the stream's serialized units.
pub fn constant_rate_schedule(stream: &ToyStream, rate: ByteRate, start: i64) -> ArrivalSchedule {
    assert!(rate.bytes > 0 && rate.per_ticks > 0, "byte rate must be positive");
    let total = stream.elementary_size() as u64;
    let entries = (0..total)
        .map(|i| (i, start + (i.saturating_mul(rate.per_ticks) / rate.bytes) as i64))
        .collect();
    ArrivalSchedule { stream_id: stream.stream_id, entries }
}

/// Per-simulation configuration. `buffer_size_bytes` is the input buffer
/// budget applied to every stream; `explicit_td` optionally pins decode times
/// per access unit for a stream (otherwise `td` is the unit's last-byte
/// arrival plus `decode_delay`).
#[derive(Debug, Clone)]
pub struct StdConfig {
    pub buffer_size_bytes: u64,
    pub decode_delay: i64,
    pub explicit_td: alloc::collections::BTreeMap<u32, Vec<i64>>,
}

impl StdConfig {
    pub fn new(buffer_size_bytes: u64, decode_delay: i64) -> StdConfig {
        StdConfig {
            buffer_size_bytes,
            decode_delay,
            explicit_td: alloc::collections::BTreeMap::new(),
        }
    }

    pub fn with_explicit_td(mut self, stream_id: u32, td: Vec<i64>) -> StdConfig {
        self.explicit_td.insert(stream_id, td);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Conformant,
    Overflow,
    Underflow,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::Conformant => "CONFORMANT",
            Verdict::Overflow => "OVERFLOW",
            Verdict::Underflow => "UNDERFLOW",
        };
        f.write_str(s)
    }
}

/// Decode event: access unit `j` decoded at `td` by `decoder_id`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DecodeRecord {
    pub j: usize,
    pub td: i64,
    pub decoder_id: u32,
}

/// Presentation event: presentation unit `k`, sourced from access unit `j`,
/// presented at `tp`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PresentRecord {
    pub k: usize,
    pub j: usize,
    pub tp: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StreamTrace {
    pub stream_id: u32,
    pub decode_events: Vec<DecodeRecord>,
    pub presentation_events: Vec<PresentRecord>,
    /// `(tick, bytes)` occupancy after each arrival or decode event.
    pub occupancy_samples: Vec<(i64, u64)>,
    /// Coalesced byte arrivals `(tick, bytes arriving at that tick)`.
    pub arrivals: Vec<(i64, u64)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StdTrace {
    pub streams: Vec<StreamTrace>,
    pub verdict: Verdict,
    /// Human-readable description of the first violation, when any.
    pub violation: Option<String>,
}

impl StdTrace {
    /// Line-delimited event export:
    /// `EVENT kind=... stream=<n> time=<ticks> ...` plus a final
    /// `VERDICT <verdict>` line.
    pub fn event_log(&self) -> String {
        // kind order breaks ties at equal times: arrivals enter the buffer
        // before decodes remove from it, presents are downstream.
        #[derive(PartialEq, Eq, PartialOrd, Ord)]
        enum Kind {
            Arrival = 0,
            Decode = 1,
            Present = 2,
        }
        let mut events: Vec<(i64, u32, Kind, usize, u64)> = Vec::new();
        for s in &self.streams {
            for &(t, b) in &s.arrivals {
                events.push((t, s.stream_id, Kind::Arrival, 0, b));
            }
            for d in &s.decode_events {
                events.push((d.td, s.stream_id, Kind::Decode, d.j, 0));
            }
            for p in &s.presentation_events {
                events.push((p.tp, s.stream_id, Kind::Present, p.k, 0));
            }
        }
        events.sort_by(|a, b| (a.0, a.1, &a.2, a.3).cmp(&(b.0, b.1, &b.2, b.3)));
        let mut out = String::new();
        for (t, stream, kind, idx, bytes) in events {
            match kind {
                Kind::Arrival => {
                    out += &format!("EVENT kind=arrival stream={} time={} bytes={}\n", stream, t, bytes)
                }
                Kind::Decode => {
                    out += &format!("EVENT kind=decode stream={} time={} j={}\n", stream, t, idx)
                }
                Kind::Present => {
                    out += &format!("EVENT kind=present stream={} time={} k={}\n", stream, t, idx)
                }
            }
        }
        out += &format!("VERDICT {}\n", self.verdict);
        out
    }
}

/// Runs the target-decoder model over one or more streams, each with its own
/// input buffer. `schedules[i]` must cover every byte of `streams[i]`'s
/// serialized units.
pub fn simulate_std(streams: &[ToyStream], schedules: &[ArrivalSchedule], config: &StdConfig) -> StdTrace {
    assert_eq!(streams.len(), schedules.len(), "one schedule per stream");
    assert!(config.buffer_size_bytes > 0, "buffer size must be positive");
    let mut trace = StdTrace {
        streams: Vec::with_capacity(streams.len()),
        verdict: Verdict::Conformant,
        violation: None,
    };
    for (stream, schedule) in streams.iter().zip(schedules) {
        assert_eq!(stream.stream_id, schedule.stream_id, "schedule/stream mismatch");
        let total = stream.elementary_size() as u64;
        assert!(
            schedule.entries.len() as u64 == total
                && schedule.entries.iter().enumerate().all(|(i, (b, _))| *b == i as u64),
            "schedule must cover bytes 0..{} of stream {}",
            total,
            stream.stream_id
        );
        let (stream_trace, violation) = simulate_one(stream, schedule, config);
        if trace.verdict == Verdict::Conformant {
            if let Some((verdict, detail)) = violation {
                trace.verdict = verdict;
                trace.violation = Some(detail);
            }
        }
        trace.streams.push(stream_trace);
    }
    trace
}

fn simulate_one(
    stream: &ToyStream,
    schedule: &ArrivalSchedule,
    config: &StdConfig,
) -> (StreamTrace, Option<(Verdict, String)>) {
    // Coalesce per-byte arrivals by tick; occupancy is sampled per tick.
    let mut arrivals: Vec<(i64, u64)> = Vec::new();
    for &(_, t) in &schedule.entries {
        match arrivals.last_mut() {
            Some((last_t, n)) if *last_t == t => *n += 1,
            _ => arrivals.push((t, 1)),
        }
    }

    // Unit boundaries in the elementary stream and their decode times.
    let explicit = config.explicit_td.get(&stream.stream_id);
    let mut decodes: Vec<(i64, usize, u64, i64)> = Vec::new(); // (td, j, bytes, last_arrival)
    let mut offset = 0u64;
    for (j, unit) in stream.units.iter().enumerate() {
        let size = unit.wire_size() as u64;
        let last_byte = offset + size - 1;
        let last_arrival = schedule
            .arrival_of(last_byte)
            .expect("schedule covers all bytes");
        let td = match explicit.and_then(|v| v.get(j)) {
            Some(&t) => t,
            None => last_arrival + config.decode_delay,
        };
        decodes.push((td, j, size, last_arrival));
        offset += size;
    }

    let mut out = StreamTrace {
        stream_id: stream.stream_id,
        decode_events: Vec::new(),
        presentation_events: Vec::new(),
        occupancy_samples: Vec::new(),
        arrivals: arrivals.clone(),
    };

    // Merge arrival and decode events chronologically; at equal ticks,
    // arrivals land before decodes remove.
    let mut occupancy = 0u64;
    let mut ai = 0usize;
    let mut di = 0usize;
    let mut decode_order: Vec<usize> = (0..decodes.len()).collect();
    decode_order.sort_by_key(|&j| (decodes[j].0, j));
    let mut violation: Option<(Verdict, String)> = None;
    while ai < arrivals.len() || di < decode_order.len() {
        let next_arrival = arrivals.get(ai).map(|&(t, _)| t);
        let next_decode = decode_order.get(di).map(|&j| decodes[j].0);
        let take_arrival = match (next_arrival, next_decode) {
            (Some(a), Some(d)) => a <= d,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => break,
        };
        if take_arrival {
            let (t, n) = arrivals[ai];
            ai += 1;
            occupancy += n;
            out.occupancy_samples.push((t, occupancy));
            if occupancy > config.buffer_size_bytes {
                violation = Some((
                    Verdict::Overflow,
                    format!(
                        "stream {}: occupancy {} exceeds buffer size {} at t={}",
                        stream.stream_id, occupancy, config.buffer_size_bytes, t
                    ),
                ));
                break;
            }
        } else {
            let j = decode_order[di];
            di += 1;
            let (td, unit_j, size, last_arrival) = decodes[j];
            if td < last_arrival {
                violation = Some((
                    Verdict::Underflow,
                    format!(
                        "stream {}: unit {} decoded at t={} before its last byte arrives at t={}",
                        stream.stream_id, unit_j, td, last_arrival
                    ),
                ));
                break;
            }
            occupancy -= size;
            out.decode_events.push(DecodeRecord {
                j: unit_j,
                td,
                decoder_id: stream.stream_id,
            });
            out.occupancy_samples.push((td, occupancy));
        }
    }

    // One presentation unit per decoded access unit, at the unit's pts,
    // numbered in presentation order.
    let mut presents: Vec<(i64, usize)> = out
        .decode_events
        .iter()
        .map(|d| (stream.units[d.j].pts, d.j))
        .collect();
    presents.sort_by_key(|&(tp, j)| (tp, j));
    out.presentation_events = presents
        .into_iter()
        .enumerate()
        .map(|(k, (tp, j))| PresentRecord { k, j, tp })
        .collect();

    (out, violation)
}

/// A violated rule of the conventional decoding model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleViolation {
    /// Rule i: a stream's decode events reference more than one decoder.
    MultipleDecoders { stream_id: u32 },
    /// Rule ii: decode and presentation event counts differ.
    CountMismatch { stream_id: u32, decoded: usize, presented: usize },
    /// Rule iii: a presentation time differs from its source unit's pts.
    TimestampMismatch { stream_id: u32, k: usize, expected: i64, actual: i64 },
}

/// Checks the conventional-model rules against a trace: (i) one decoder per
/// elementary stream, (ii) one presentation unit per decoded access unit,
/// (iii) every `tp` equals the source unit's pts. Returns the empty list iff
/// all hold.
pub fn check_cdm_rules(trace: &StdTrace, streams: &[ToyStream]) -> Vec<RuleViolation> {
    let mut violations = Vec::new();
    for stream_trace in &trace.streams {
        let stream = streams.iter().find(|s| s.stream_id == stream_trace.stream_id);
        let first_decoder = stream_trace.decode_events.first().map(|d| d.decoder_id);
        if let Some(first) = first_decoder {
            if stream_trace.decode_events.iter().any(|d| d.decoder_id != first) {
                violations.push(RuleViolation::MultipleDecoders {
                    stream_id: stream_trace.stream_id,
                });
            }
        }
        if stream_trace.decode_events.len() != stream_trace.presentation_events.len() {
            violations.push(RuleViolation::CountMismatch {
                stream_id: stream_trace.stream_id,
                decoded: stream_trace.decode_events.len(),
                presented: stream_trace.presentation_events.len(),
            });
        }
        if let Some(stream) = stream {
            for p in &stream_trace.presentation_events {
                let expected = stream.units.get(p.j).map(|u| u.pts);
                if expected != Some(p.tp) {
                    violations.push(RuleViolation::TimestampMismatch {
                        stream_id: stream_trace.stream_id,
                        k: p.k,
                        expected: expected.unwrap_or(i64::MIN),
                        actual: p.tp,
                    });
                }
            }
        }
    }
    violations
}
