//! `EVT1` event container.
//!
//! Layout (little-endian): magic `EVT1`; width `u16`; height `u16`;
//! count `u64`; t_begin `u64`; t_end `u64`; then `count` 16-byte records
//! of t `u64` (µs), x `u16`, y `u16`, p `i8`, three zero pad bytes.

use std::path::Path;

use super::{write_file, FormatError, Reader};
use crate::events::{Event, EventStream};

pub const MAGIC: &[u8; 4] = b"EVT1";
pub const HEADER_LEN: usize = 32;
pub const RECORD_LEN: usize = 16;

pub fn encode(stream: &EventStream) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + RECORD_LEN * stream.events.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&stream.width.to_le_bytes());
    out.extend_from_slice(&stream.height.to_le_bytes());
    out.extend_from_slice(&(stream.events.len() as u64).to_le_bytes());
    out.extend_from_slice(&stream.t_begin.to_le_bytes());
    out.extend_from_slice(&stream.t_end.to_le_bytes());
    for e in &stream.events {
        out.extend_from_slice(&e.t.to_le_bytes());
        out.extend_from_slice(&e.x.to_le_bytes());
        out.extend_from_slice(&e.y.to_le_bytes());
        out.extend_from_slice(&e.p.to_le_bytes());
        out.extend_from_slice(&[0u8; 3]);
    }
    out
}

/// Decodes and validates a stream: record bounds, polarity, ordering and
/// the time span are checked, with the byte offset of the first offender.
pub fn decode(bytes: &[u8]) -> Result<EventStream, FormatError> {
    let mut r = Reader::new(bytes);
    r.magic(MAGIC)?;
    let width = r.u16()?;
    let height = r.u16()?;
    let count_at = r.offset();
    let count = r.u64()?;
    let t_begin = r.u64()?;
    let t_end = r.u64()?;
    if t_end < t_begin {
        return Err(FormatError::invalid(24, format!("t_end {t_end} < t_begin {t_begin}")));
    }
    let expected = (count as u128) * RECORD_LEN as u128;
    if expected != r.remaining() as u128 {
        return Err(FormatError::invalid(
            count_at,
            format!(
                "header declares {count} events ({expected} bytes) but {} bytes follow",
                r.remaining()
            ),
        ));
    }
    let mut events = Vec::with_capacity(count as usize);
    let mut last_t = t_begin;
    for _ in 0..count {
        let at = r.offset();
        let t = r.u64()?;
        let x = r.u16()?;
        let y = r.u16()?;
        let p = r.i8()?;
        r.take(3)?;
        if x >= width || y >= height {
            return Err(FormatError::invalid(at, format!("event ({x}, {y}) outside {width}x{height}")));
        }
        if p != 1 && p != -1 {
            return Err(FormatError::invalid(at + 12, format!("polarity {p} is not +1/-1")));
        }
        if t < last_t || t > t_end {
            return Err(FormatError::invalid(
                at,
                format!("timestamp {t} out of order or outside [{t_begin}, {t_end}]"),
            ));
        }
        last_t = t;
        events.push(Event { t, x, y, p });
    }
    r.finish()?;
    Ok(EventStream {
        width,
        height,
        t_begin,
        t_end,
        events,
    })
}

pub fn write(path: impl AsRef<Path>, stream: &EventStream) -> Result<(), FormatError> {
    write_file(path.as_ref(), &encode(stream))
}

pub fn read(path: impl AsRef<Path>) -> Result<EventStream, FormatError> {
    decode(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stream() -> EventStream {
        EventStream {
            width: 4,
            height: 3,
            t_begin: 10,
            t_end: 100,
            events: vec![
                Event { t: 10, x: 0, y: 0, p: 1 },
                Event { t: 50, x: 3, y: 2, p: -1 },
            ],
        }
    }

    #[test]
    fn header_layout() {
        let bytes = encode(&stream());
        assert_eq!(&bytes[..4], b"EVT1");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 4);
        assert_eq!(u64::from_le_bytes(bytes[8..16].try_into().unwrap()), 2);
        assert_eq!(bytes.len(), HEADER_LEN + 2 * RECORD_LEN);
        // Second record: p at byte 12 of the record.
        assert_eq!(bytes[HEADER_LEN + RECORD_LEN + 12] as i8, -1);
    }

    #[test]
    fn corrupt_inputs_report_offsets() {
        let mut bytes = encode(&stream());
        bytes[0] = b'X';
        assert!(matches!(decode(&bytes), Err(FormatError::BadMagic { .. })));

        let mut bytes = encode(&stream());
        bytes.truncate(bytes.len() - 1);
        match decode(&bytes) {
            Err(FormatError::Invalid { offset, .. }) => assert_eq!(offset, 8),
            other => panic!("{other:?}"),
        }

        let mut bytes = encode(&stream());
        bytes[HEADER_LEN + RECORD_LEN + 8] = 9; // x = 9 >= width
        match decode(&bytes) {
            Err(FormatError::Invalid { offset, .. }) => assert_eq!(offset, HEADER_LEN + RECORD_LEN),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(raw in prop::collection::vec((0u64..1000, 0u16..64, 0u16..48, any::<bool>()), 0..200)) {
            let mut events: Vec<Event> = raw
                .into_iter()
                .map(|(t, x, y, pos)| Event { t, x, y, p: if pos { 1 } else { -1 } })
                .collect();
            events.sort_by_key(|e| (e.t, e.y, e.x));
            let s = EventStream { width: 64, height: 48, t_begin: 0, t_end: 1000, events };
            let bytes = encode(&s);
            let back = decode(&bytes).unwrap();
            prop_assert_eq!(&back, &s);
            prop_assert_eq!(encode(&back), bytes);
        }
    }
}
