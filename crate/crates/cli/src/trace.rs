//! Binary slot traces.
//!
//! All integers and floats are little-endian. Layout:
//!
//! ```text
//! header  magic "PHOPTRC\0" | version u16 | M u32 | K u64 | tau_u u32 | tau_p u32 | seed u64
//! frame   frame u64 | n_active u32 | active u32 * n | beta f64 * n | n_slots u32 | slot * n_slots
//! slot    slot u32 | n_detected u32 | detected * n_detected | sinr f64 * n_active
//! detected  pilot u32 | sum_power f64 | estimate_energy f64 | mrc_re f64 | mrc_im f64
//! ```
//!
//! Frames follow the header until end of file.

use std::io::{self, Read, Write};

use pilothop_core::protocol_sim::{FrameReport, SlotOutcome};

pub const MAGIC: [u8; 8] = *b"PHOPTRC\0";
pub const VERSION: u16 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceHeader {
    pub m: u32,
    pub k: u64,
    pub tau_u: u32,
    pub tau_p: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectedPilot {
    pub pilot: u32,
    pub sum_power: f64,
    pub estimate_energy: f64,
    pub mrc: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub slot: u32,
    pub detected: Vec<DetectedPilot>,
    pub sinr: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub frame: u64,
    pub active: Vec<u32>,
    pub betas: Vec<f64>,
    pub slots: Vec<SlotRecord>,
}

impl FrameRecord {
    /// Record of a simulated frame. The report must carry a trace.
    pub fn from_report(r: &FrameReport) -> Option<Self> {
        let trace = r.trace.as_ref()?;
        Some(Self {
            frame: r.frame,
            active: r.active.iter().map(|&d| d as u32).collect(),
            betas: r.betas.clone(),
            slots: trace.iter().map(slot_record).collect(),
        })
    }
}

fn slot_record(s: &SlotOutcome) -> SlotRecord {
    SlotRecord {
        slot: s.slot as u32,
        detected: (0..s.detected.len())
            .map(|i| DetectedPilot {
                pilot: s.detected[i] as u32,
                sum_power: s.sum_power[i],
                estimate_energy: s.estimate_energy[i],
                mrc: (s.mrc[i].re, s.mrc[i].im),
            })
            .collect(),
        sinr: s.sinr.clone(),
    }
}

fn len32(n: usize) -> io::Result<[u8; 4]> {
    u32::try_from(n)
        .map(u32::to_le_bytes)
        .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "count exceeds u32"))
}

pub fn write_header<W: Write>(w: &mut W, h: &TraceHeader) -> io::Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&h.m.to_le_bytes())?;
    w.write_all(&h.k.to_le_bytes())?;
    w.write_all(&h.tau_u.to_le_bytes())?;
    w.write_all(&h.tau_p.to_le_bytes())?;
    w.write_all(&h.seed.to_le_bytes())
}

pub fn write_frame<W: Write>(w: &mut W, f: &FrameRecord) -> io::Result<()> {
    w.write_all(&f.frame.to_le_bytes())?;
    w.write_all(&len32(f.active.len())?)?;
    for a in &f.active {
        w.write_all(&a.to_le_bytes())?;
    }
    for b in &f.betas {
        w.write_all(&b.to_le_bytes())?;
    }
    w.write_all(&len32(f.slots.len())?)?;
    for s in &f.slots {
        w.write_all(&s.slot.to_le_bytes())?;
        w.write_all(&len32(s.detected.len())?)?;
        for d in &s.detected {
            w.write_all(&d.pilot.to_le_bytes())?;
            for x in [d.sum_power, d.estimate_energy, d.mrc.0, d.mrc.1] {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        for x in &s.sinr {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

fn take<const N: usize, R: Read>(r: &mut R) -> io::Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

fn u32_<R: Read>(r: &mut R) -> io::Result<u32> {
    Ok(u32::from_le_bytes(take(r)?))
}

fn u64_<R: Read>(r: &mut R) -> io::Result<u64> {
    Ok(u64::from_le_bytes(take(r)?))
}

fn f64_<R: Read>(r: &mut R) -> io::Result<f64> {
    Ok(f64::from_le_bytes(take(r)?))
}

/// Reads a whole trace.
pub fn read_trace(bytes: &[u8]) -> io::Result<(TraceHeader, Vec<FrameRecord>)> {
    let bad = |msg: &str| io::Error::new(io::ErrorKind::InvalidData, msg.to_string());
    let mut r = bytes;
    if take::<8, _>(&mut r)? != MAGIC {
        return Err(bad("not a trace file"));
    }
    let version = u16::from_le_bytes(take(&mut r)?);
    if version != VERSION {
        return Err(bad("unsupported trace version"));
    }
    let header = TraceHeader {
        m: u32_(&mut r)?,
        k: u64_(&mut r)?,
        tau_u: u32_(&mut r)?,
        tau_p: u32_(&mut r)?,
        seed: u64_(&mut r)?,
    };
    let mut frames = Vec::new();
    while !r.is_empty() {
        let frame = u64_(&mut r)?;
        let n = u32_(&mut r)? as usize;
        let active = (0..n)
            .map(|_| u32_(&mut r))
            .collect::<io::Result<Vec<_>>>()?;
        let betas = (0..n)
            .map(|_| f64_(&mut r))
            .collect::<io::Result<Vec<_>>>()?;
        let n_slots = u32_(&mut r)? as usize;
        let mut slots = Vec::with_capacity(n_slots);
        for _ in 0..n_slots {
            let slot = u32_(&mut r)?;
            let n_det = u32_(&mut r)? as usize;
            let mut detected = Vec::with_capacity(n_det);
            for _ in 0..n_det {
                detected.push(DetectedPilot {
                    pilot: u32_(&mut r)?,
                    sum_power: f64_(&mut r)?,
                    estimate_energy: f64_(&mut r)?,
                    mrc: (f64_(&mut r)?, f64_(&mut r)?),
                });
            }
            let sinr = (0..n)
                .map(|_| f64_(&mut r))
                .collect::<io::Result<Vec<_>>>()?;
            slots.push(SlotRecord {
                slot,
                detected,
                sinr,
            });
        }
        frames.push(FrameRecord {
            frame,
            active,
            betas,
            slots,
        });
    }
    Ok((header, frames))
}
