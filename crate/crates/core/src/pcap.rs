// SPDX-License-Identifier: Apache-2.0
//! Classic libpcap file format, Ethernet link type only.

use std::io::{self, Write};

use thiserror::Error;

use crate::time::SimTime;

pub const MAGIC_USEC: u32 = 0xa1b2_c3d4;
pub const MAGIC_NSEC: u32 = 0xa1b2_3c4d;
pub const LINKTYPE_ETHERNET: u32 = 1;
pub const SNAPLEN: u32 = 65_535;
pub const GLOBAL_HEADER_LEN: usize = 24;
pub const RECORD_HEADER_LEN: usize = 16;

#[derive(Debug, Error)]
pub enum PcapError {
    #[error("not a pcap file")]
    NotPcap,
    #[error("unsupported link type {0}")]
    UnsupportedLinktype(u32),
    #[error("record {index} is truncated")]
    TruncatedRecord { index: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PcapRecord {
    pub timestamp: SimTime,
    pub orig_len: u32,
    pub data: Vec<u8>,
}

/// Streams records into `w`. Timestamps are truncated to microseconds.
pub struct PcapWriter<W: Write> {
    w: W,
}

impl<W: Write> PcapWriter<W> {
    pub fn new(mut w: W) -> io::Result<Self> {
        w.write_all(&MAGIC_USEC.to_le_bytes())?;
        w.write_all(&2u16.to_le_bytes())?;
        w.write_all(&4u16.to_le_bytes())?;
        w.write_all(&0i32.to_le_bytes())?; // thiszone
        w.write_all(&0u32.to_le_bytes())?; // sigfigs
        w.write_all(&SNAPLEN.to_le_bytes())?;
        w.write_all(&LINKTYPE_ETHERNET.to_le_bytes())?;
        Ok(PcapWriter { w })
    }

    pub fn write_record(&mut self, t: SimTime, frame: &[u8]) -> io::Result<()> {
        let secs = u32::try_from(t.whole_secs())
            .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "timestamp beyond 32-bit seconds"))?;
        let len = frame.len() as u32;
        let incl = len.min(SNAPLEN);
        self.w.write_all(&secs.to_le_bytes())?;
        self.w.write_all(&t.subsec_micros().to_le_bytes())?;
        self.w.write_all(&incl.to_le_bytes())?;
        self.w.write_all(&len.to_le_bytes())?;
        self.w.write_all(&frame[..incl as usize])
    }

    pub fn into_inner(self) -> W {
        self.w
    }
}

pub fn pcap_bytes<'a>(records: impl IntoIterator<Item = (SimTime, &'a [u8])>) -> Vec<u8> {
    let mut w = PcapWriter::new(Vec::new()).expect("writing to a Vec cannot fail");
    for (t, f) in records {
        w.write_record(t, f).expect("writing to a Vec cannot fail");
    }
    w.into_inner()
}

/// Parses a whole capture held in memory. Either byte order and the
/// nanosecond-resolution magic are accepted.
pub fn read_pcap(bytes: &[u8]) -> Result<Vec<PcapRecord>, PcapError> {
    if bytes.len() < GLOBAL_HEADER_LEN {
        return Err(PcapError::NotPcap);
    }
    let magic_le = u32::from_le_bytes(bytes[0..4].try_into().unwrap());
    let magic_be = u32::from_be_bytes(bytes[0..4].try_into().unwrap());
    let (le, nanos) = match (magic_le, magic_be) {
        (MAGIC_USEC, _) => (true, false),
        (MAGIC_NSEC, _) => (true, true),
        (_, MAGIC_USEC) => (false, false),
        (_, MAGIC_NSEC) => (false, true),
        _ => return Err(PcapError::NotPcap),
    };
    let rd = |b: &[u8]| {
        let a: [u8; 4] = b.try_into().unwrap();
        if le { u32::from_le_bytes(a) } else { u32::from_be_bytes(a) }
    };
    let linktype = rd(&bytes[20..24]);
    if linktype != LINKTYPE_ETHERNET {
        return Err(PcapError::UnsupportedLinktype(linktype));
    }
    let mut out = Vec::new();
    let mut off = GLOBAL_HEADER_LEN;
    while off < bytes.len() {
        let index = out.len();
        if bytes.len() - off < RECORD_HEADER_LEN {
            return Err(PcapError::TruncatedRecord { index });
        }
        let h = &bytes[off..off + RECORD_HEADER_LEN];
        let sec = u64::from(rd(&h[0..4]));
        let frac = u64::from(rd(&h[4..8]));
        let incl = rd(&h[8..12]) as usize;
        let orig_len = rd(&h[12..16]);
        off += RECORD_HEADER_LEN;
        if bytes.len() - off < incl {
            return Err(PcapError::TruncatedRecord { index });
        }
        let frac_ps = if nanos { frac * 1_000 } else { frac * 1_000_000 };
        out.push(PcapRecord {
            timestamp: SimTime::from_secs(sec) + SimTime::from_picos(frac_ps),
            orig_len,
            data: bytes[off..off + incl].to_vec(),
        });
        off += incl;
    }
    Ok(out)
}
