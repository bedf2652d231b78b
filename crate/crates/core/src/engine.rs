//! The video decoding engine abstraction: aggregate capability accounting,
//! decoder instance lifecycle, dynamic parameters, and time-locked instance
//! groups over simulated decoding of toy streams.
//!
//! The engine is the single logical owner of all instance state; callers
//! serialize their access (route through one thread or an external queue).
//! Decoded pictures leave exclusively through per-instance circular buffers,
//! which carry their own producer/consumer contract.
//!
//! # Group time lock
//!
//! Instances in a group never run ahead of the slowest member by more than
//! the group's POC tolerance. Each [`Engine::step`] computes, per group, the
//! minimum target POC any member could reach this step; every member then
//! decodes up to its own rate but never past `min_target + tolerance`. After
//! every step, max-minus-min progress within a group is bounded by the
//! tolerance, and a member that exhausts its stream pins the group at its
//! final POC plus the tolerance.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::circular::SharedCircularBuffer;
use crate::decode::{decode_picture, picture_refs, CropWindow, PictureRef};
use crate::stream::{CodecProfile, ToyStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InstanceId(pub u32);

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupId(pub u32);

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum VdiError {
    #[error("codec profile {0} is not supported by this engine")]
    UnknownCodecProfile(&'static str),
    #[error("insufficient capacity: {0}")]
    InsufficientCapacity(String),
    #[error("unknown group {0}")]
    UnknownGroup(GroupId),
    #[error("unknown instance {0}")]
    UnknownInstance(InstanceId),
    #[error("picture {width}x{height} exceeds engine maximum {max_width}x{max_height}")]
    OversizedPicture { width: u16, height: u16, max_width: u16, max_height: u16 },
    #[error("operation not allowed in state {0}")]
    InvalidState(&'static str),
    #[error("output buffer capacity must be at least one frame")]
    ZeroCapacity,
    #[error("unknown parameter {0}")]
    UnknownParameter(String),
    #[error("crop window ({0}, {1}, {2}, {3}) outside decoded picture bounds")]
    CropOutOfBounds(u16, u16, u16, u16),
    #[error("instance has no configured output buffer")]
    NoOutputBuffer,
    #[error("stream profile {stream} does not match instance profile {instance}")]
    ProfileMismatch { stream: &'static str, instance: &'static str },
}

/// Exact luma-sample rate as a reduced rational `samples / tick`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplesPerTick {
    pub num: u64,
    pub den: u64,
}

impl SamplesPerTick {
    pub fn new(samples_per_sec: u64, tick_rate: u32) -> SamplesPerTick {
        let g = gcd(samples_per_sec, tick_rate as u64);
        if g == 0 {
            return SamplesPerTick { num: 0, den: 1 };
        }
        SamplesPerTick { num: samples_per_sec / g, den: tick_rate as u64 / g }
    }
}

impl PartialOrd for SamplesPerTick {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SamplesPerTick {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        ((self.num as u128) * other.den as u128).cmp(&((other.num as u128) * self.den as u128))
    }
}

impl fmt::Display for SamplesPerTick {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Static capability envelope of the decoding platform.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct EngineEnvelope {
    pub max_instances: u32,
    /// Aggregate luma sample budget, in samples per second.
    pub sample_budget_per_sec: u64,
    pub max_width: u16,
    pub max_height: u16,
    pub tick_rate: u32,
    /// Profiles the platform decodes; both toy profiles by default.
    #[serde(default = "EngineEnvelope::default_profiles")]
    pub profiles: Vec<String>,
}

impl EngineEnvelope {
    fn default_profiles() -> Vec<String> {
        alloc::vec![String::from("TOY_BASE"), String::from("TOY_TILED")]
    }

    /// A 3840x2160@60 envelope with two instance slots.
    pub fn uhd_two_slot(tick_rate: u32) -> EngineEnvelope {
        EngineEnvelope {
            max_instances: 2,
            sample_budget_per_sec: 3840 * 2160 * 60,
            max_width: 3840,
            max_height: 2160,
            tick_rate,
            profiles: Self::default_profiles(),
        }
    }

    fn supports(&self, profile: CodecProfile) -> bool {
        self.profiles.iter().any(|p| p == profile.name())
    }
}

/// Instantaneous capability snapshot: static maxima plus what is left after
/// current admissions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapabilityReport {
    pub codec_profile: CodecProfile,
    pub max_instances: u32,
    pub max_aggregate_samples_per_tick: SamplesPerTick,
    pub max_width: u16,
    pub max_height: u16,
    pub available_instances: u32,
    pub available_samples_per_tick: SamplesPerTick,
}

/// What a caller asks of a new decoding instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstanceRequirements {
    pub width: u16,
    pub height: u16,
    /// Frames per second the instance must sustain.
    pub frame_rate: u32,
    pub codec_profile: CodecProfile,
}

impl InstanceRequirements {
    pub fn samples_per_sec(&self) -> u64 {
        self.width as u64 * self.height as u64 * self.frame_rate as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceState {
    Configured,
    Running,
    Stopped,
}

impl InstanceState {
    fn name(self) -> &'static str {
        match self {
            InstanceState::Configured => "CONFIGURED",
            InstanceState::Running => "RUNNING",
            InstanceState::Stopped => "STOPPED",
        }
    }
}

/// Dynamic per-instance parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParameterValue {
    CropWindow(CropWindow),
}

#[derive(Debug)]
pub struct DecoderInstance {
    pub id: InstanceId,
    pub requirements: InstanceRequirements,
    pub state: InstanceState,
    pub group: Option<GroupId>,
    /// Highest POC decoded so far; -1 before the first picture.
    pub progress_poc: i64,
    /// Pictures decoded per step in the simulation.
    pub decode_rate: u32,
    pub pictures_decoded: u64,
    /// Steps in which the group gate held this instance below its rate.
    pub stall_steps: u64,
    crop: Option<CropWindow>,
    buffer: Option<Arc<SharedCircularBuffer>>,
    pixel_format_tag: Option<String>,
    stream: Option<ToyStream>,
    pictures: Vec<PictureRef>,
    cursor: usize,
}

impl DecoderInstance {
    pub fn output_buffer(&self) -> Option<&Arc<SharedCircularBuffer>> {
        self.buffer.as_ref()
    }

    pub fn pixel_format_tag(&self) -> Option<&str> {
        self.pixel_format_tag.as_deref()
    }

    fn exhausted(&self) -> bool {
        self.cursor >= self.pictures.len()
    }

    /// POC this instance would reach this step if unconstrained.
    fn target_poc(&self) -> i64 {
        if self.stream.is_none() || self.exhausted() {
            return self.progress_poc;
        }
        let last = (self.cursor + self.decode_rate.max(1) as usize).min(self.pictures.len()) - 1;
        self.pictures[last].poc as i64
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceGroup {
    pub group_id: GroupId,
    pub member_ids: BTreeSet<InstanceId>,
    pub skew_tolerance_pocs: u32,
}

/// One decoded picture event from [`Engine::step`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecodeEvent {
    pub instance: InstanceId,
    pub poc: u32,
    pub time: i64,
    pub group: Option<GroupId>,
}

impl DecodeEvent {
    pub fn log_line(&self) -> String {
        match self.group {
            Some(g) => format!("DECODE instance={} poc={} t={} group={}", self.instance, self.poc, self.time, g),
            None => format!("DECODE instance={} poc={} t={} group=-", self.instance, self.poc, self.time),
        }
    }
}

/// Output buffer properties passed to [`Engine::set_config`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputBufferProps {
    pub capacity_frames: usize,
    pub pixel_format_tag: String,
}

#[derive(Debug)]
pub struct Engine {
    envelope: EngineEnvelope,
    instances: BTreeMap<InstanceId, DecoderInstance>,
    groups: BTreeMap<GroupId, InstanceGroup>,
    next_instance: u32,
    next_group: u32,
    admitted_samples_per_sec: u64,
    now: i64,
}

impl Engine {
    pub fn new(envelope: EngineEnvelope) -> Engine {
        Engine {
            envelope,
            instances: BTreeMap::new(),
            groups: BTreeMap::new(),
            next_instance: 0,
            next_group: 0,
            admitted_samples_per_sec: 0,
            now: 0,
        }
    }

    pub fn envelope(&self) -> &EngineEnvelope {
        &self.envelope
    }

    pub fn now(&self) -> i64 {
        self.now
    }

    pub fn instance(&self, id: InstanceId) -> Option<&DecoderInstance> {
        self.instances.get(&id)
    }

    pub fn instances(&self) -> impl Iterator<Item = &DecoderInstance> {
        self.instances.values()
    }

    pub fn group(&self, id: GroupId) -> Option<&InstanceGroup> {
        self.groups.get(&id)
    }

    /// Instantaneous aggregate capabilities for a codec profile: the static
    /// envelope minus the sample rates and slots of current admissions.
    pub fn query_current_aggregate_capabilities(
        &self,
        codec_profile: CodecProfile,
    ) -> Result<CapabilityReport, VdiError> {
        if !self.envelope.supports(codec_profile) {
            return Err(VdiError::UnknownCodecProfile(codec_profile.name()));
        }
        let tick_rate = self.envelope.tick_rate;
        Ok(CapabilityReport {
            codec_profile,
            max_instances: self.envelope.max_instances,
            max_aggregate_samples_per_tick: SamplesPerTick::new(
                self.envelope.sample_budget_per_sec,
                tick_rate,
            ),
            max_width: self.envelope.max_width,
            max_height: self.envelope.max_height,
            available_instances: self.envelope.max_instances - self.instances.len() as u32,
            available_samples_per_tick: SamplesPerTick::new(
                self.envelope.sample_budget_per_sec - self.admitted_samples_per_sec,
                tick_rate,
            ),
        })
    }

    /// Admits a new decoding instance, optionally joining it to a group.
    /// Capability accounting is decremented on success.
    pub fn get_instance(
        &mut self,
        requirements: InstanceRequirements,
        group: Option<GroupId>,
    ) -> Result<InstanceId, VdiError> {
        if !self.envelope.supports(requirements.codec_profile) {
            return Err(VdiError::UnknownCodecProfile(requirements.codec_profile.name()));
        }
        if let Some(gid) = group {
            if !self.groups.contains_key(&gid) {
                return Err(VdiError::UnknownGroup(gid));
            }
        }
        if requirements.width > self.envelope.max_width
            || requirements.height > self.envelope.max_height
        {
            return Err(VdiError::OversizedPicture {
                width: requirements.width,
                height: requirements.height,
                max_width: self.envelope.max_width,
                max_height: self.envelope.max_height,
            });
        }
        if self.instances.len() as u32 >= self.envelope.max_instances {
            return Err(VdiError::InsufficientCapacity(format!(
                "all {} instance slots in use",
                self.envelope.max_instances
            )));
        }
        let rate = requirements.samples_per_sec();
        let available = self.envelope.sample_budget_per_sec - self.admitted_samples_per_sec;
        if rate > available {
            return Err(VdiError::InsufficientCapacity(format!(
                "sample budget exhausted: need {}/s, {}/s available",
                rate, available
            )));
        }
        let id = InstanceId(self.next_instance);
        self.next_instance += 1;
        self.admitted_samples_per_sec += rate;
        if let Some(gid) = group {
            self.groups.get_mut(&gid).expect("checked above").member_ids.insert(id);
        }
        self.instances.insert(
            id,
            DecoderInstance {
                id,
                requirements,
                state: InstanceState::Configured,
                group,
                progress_poc: -1,
                decode_rate: 1,
                pictures_decoded: 0,
                stall_steps: 0,
                crop: None,
                buffer: None,
                pixel_format_tag: None,
                stream: None,
                pictures: Vec::new(),
                cursor: 0,
            },
        );
        Ok(id)
    }

    /// Tears an instance down, releasing its sample budget and slot.
    pub fn release_instance(&mut self, id: InstanceId) -> Result<(), VdiError> {
        let instance = self.instances.remove(&id).ok_or(VdiError::UnknownInstance(id))?;
        self.admitted_samples_per_sec -= instance.requirements.samples_per_sec();
        if let Some(gid) = instance.group {
            if let Some(group) = self.groups.get_mut(&gid) {
                group.member_ids.remove(&id);
            }
        }
        Ok(())
    }

    /// Binds the instance to a fresh circular buffer with the given
    /// properties. Allowed while CONFIGURED or STOPPED.
    pub fn set_config(&mut self, id: InstanceId, props: OutputBufferProps) -> Result<(), VdiError> {
        let instance = self.instances.get_mut(&id).ok_or(VdiError::UnknownInstance(id))?;
        if instance.state == InstanceState::Running {
            return Err(VdiError::InvalidState(instance.state.name()));
        }
        if props.capacity_frames == 0 {
            return Err(VdiError::ZeroCapacity);
        }
        instance.buffer = Some(SharedCircularBuffer::new(props.capacity_frames));
        instance.pixel_format_tag = Some(props.pixel_format_tag);
        Ok(())
    }

    /// Reads a dynamic parameter; `None` if it was never set.
    pub fn get_parameter(&self, id: InstanceId, key: &str) -> Result<Option<ParameterValue>, VdiError> {
        let instance = self.instances.get(&id).ok_or(VdiError::UnknownInstance(id))?;
        match key {
            "crop_window" => Ok(instance.crop.map(ParameterValue::CropWindow)),
            other => Err(VdiError::UnknownParameter(other.into())),
        }
    }

    /// Sets a dynamic parameter; takes effect for subsequently decoded
    /// pictures only. Allowed in any state.
    pub fn set_parameter(
        &mut self,
        id: InstanceId,
        key: &str,
        value: ParameterValue,
    ) -> Result<(), VdiError> {
        let instance = self.instances.get_mut(&id).ok_or(VdiError::UnknownInstance(id))?;
        match (key, value) {
            ("crop_window", ParameterValue::CropWindow(crop)) => {
                let (x, y, w, h) = crop;
                let req = instance.requirements;
                if w == 0
                    || h == 0
                    || x as u32 + w as u32 > req.width as u32
                    || y as u32 + h as u32 > req.height as u32
                {
                    return Err(VdiError::CropOutOfBounds(x, y, w, h));
                }
                instance.crop = Some(crop);
                Ok(())
            }
            (other, _) => Err(VdiError::UnknownParameter(other.into())),
        }
    }

    /// Registers an empty group with a POC skew tolerance.
    pub fn create_group(&mut self, skew_tolerance_pocs: u32) -> GroupId {
        let id = GroupId(self.next_group);
        self.next_group += 1;
        self.groups.insert(
            id,
            InstanceGroup {
                group_id: id,
                member_ids: BTreeSet::new(),
                skew_tolerance_pocs,
            },
        );
        id
    }

    /// Simulated decode speed for an instance, in pictures per step.
    pub fn set_decode_rate(&mut self, id: InstanceId, pictures_per_step: u32) -> Result<(), VdiError> {
        assert!(pictures_per_step > 0, "decode rate must be positive");
        let instance = self.instances.get_mut(&id).ok_or(VdiError::UnknownInstance(id))?;
        instance.decode_rate = pictures_per_step;
        Ok(())
    }

    /// Queues a stream on a configured instance and starts it running.
    pub fn submit_stream(&mut self, id: InstanceId, stream: ToyStream) -> Result<(), VdiError> {
        let instance = self.instances.get_mut(&id).ok_or(VdiError::UnknownInstance(id))?;
        if instance.state == InstanceState::Running {
            return Err(VdiError::InvalidState(instance.state.name()));
        }
        if instance.buffer.is_none() {
            return Err(VdiError::NoOutputBuffer);
        }
        if stream.codec_profile != instance.requirements.codec_profile {
            return Err(VdiError::ProfileMismatch {
                stream: stream.codec_profile.name(),
                instance: instance.requirements.codec_profile.name(),
            });
        }
        instance.pictures = picture_refs(&stream);
        instance.stream = Some(stream);
        instance.cursor = 0;
        instance.state = InstanceState::Running;
        Ok(())
    }

    /// Advances simulated time by `ticks` and lets every RUNNING instance
    /// decode up to its per-step rate, subject to its group's time lock.
    /// Decoded pictures are written to the instance's circular buffer with
    /// the picture's pts as frame timestamp.
    pub fn step(&mut self, ticks: u64) -> Vec<DecodeEvent> {
        self.now += ticks as i64;
        // Group gate: ceiling POC per group from the slowest member's target.
        let mut gate: BTreeMap<GroupId, i64> = BTreeMap::new();
        for (gid, group) in &self.groups {
            let mut min_target: Option<i64> = None;
            for member in &group.member_ids {
                let instance = &self.instances[member];
                if instance.stream.is_none() {
                    continue;
                }
                let target = instance.target_poc();
                min_target = Some(min_target.map_or(target, |t| t.min(target)));
            }
            if let Some(t) = min_target {
                gate.insert(*gid, t.saturating_add(group.skew_tolerance_pocs as i64));
            }
        }
        let mut events = Vec::new();
        for (id, instance) in self.instances.iter_mut() {
            if instance.state != InstanceState::Running {
                continue;
            }
            let ceiling = instance
                .group
                .and_then(|g| gate.get(&g).copied())
                .unwrap_or(i64::MAX);
            let stream = instance.stream.as_ref().expect("running instance has a stream");
            let mut decoded = 0u32;
            while decoded < instance.decode_rate && instance.cursor < instance.pictures.len() {
                let picture = &instance.pictures[instance.cursor];
                if picture.poc as i64 > ceiling {
                    break;
                }
                let decoded_picture = decode_picture(stream, picture, instance.crop);
                let buffer = instance.buffer.as_ref().expect("running instance has a buffer");
                buffer.write_frame(decoded_picture.to_frame_bytes(), decoded_picture.pts);
                instance.progress_poc = instance.progress_poc.max(picture.poc as i64);
                events.push(DecodeEvent {
                    instance: *id,
                    poc: picture.poc,
                    time: self.now,
                    group: instance.group,
                });
                instance.cursor += 1;
                instance.pictures_decoded += 1;
                decoded += 1;
            }
            if instance.exhausted() {
                instance.state = InstanceState::Stopped;
            } else if decoded < instance.decode_rate {
                instance.stall_steps += 1;
            }
        }
        events
    }

    /// True while any instance still has pictures to decode.
    pub fn any_running(&self) -> bool {
        self.instances.values().any(|i| i.state == InstanceState::Running)
    }
}
