//! Compact binary persistence for shadow logs.
//!
//! Each shot stores only its snapshot's canonical index, bit-packed at
//! `ceil(log2(2 d^2))` bits per record (17 bits at d = 256), so the payload
//! is `m * bits` plus fixed framing and is independent of the observable and
//! of the measured state's structure.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic "DDBSHDW1" (8 bytes) | dim u32 | count u64 | bits_per_record u8
//! | payload: count records, LSB-first within each byte
//! ```
//!
//! Shot indices are positional: record `i` deserializes with
//! `shot_index = i`.

use crate::ensemble::{snapshot_count, SnapshotId};
use crate::error::{Error, Result};
use crate::estimator::ShotRecord;

const MAGIC: &[u8; 8] = b"DDBSHDW1";
const HEADER_LEN: usize = 8 + 4 + 8 + 1;

/// Bits needed per record: `ceil(log2(2 d^2))`.
pub fn shadow_bits_per_record(dim: usize) -> u8 {
    let bound = 2 * (dim as u64) * (dim as u64);
    u64::BITS as u8 - (bound - 1).leading_zeros() as u8
}

/// Packs a shadow log into the binary layout above.
///
/// The log must be nonempty and every snapshot valid for `dim`.
pub fn serialize_shadow(log: &[ShotRecord], dim: usize) -> Result<Vec<u8>> {
    crate::check_dim(dim)?;
    if log.is_empty() {
        return Err(Error::Precondition(
            "shadow log is empty; nothing to serialize".into(),
        ));
    }
    let bits = shadow_bits_per_record(dim) as usize;
    let payload_len = (log.len() * bits).div_ceil(8);
    let mut out = Vec::with_capacity(HEADER_LEN + payload_len);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&(log.len() as u64).to_le_bytes());
    out.push(bits as u8);
    out.resize(HEADER_LEN + payload_len, 0);

    for (i, record) in log.iter().enumerate() {
        let index = record.snapshot.canonical_index(dim).map_err(|_| {
            Error::ShadowFraming {
                record: i as u64,
                message: format!("snapshot {:?} invalid at dim {dim}", record.snapshot),
            }
        })? as u64;
        let mut bit_pos = i * bits;
        for b in 0..bits {
            if (index >> b) & 1 == 1 {
                out[HEADER_LEN + bit_pos / 8] |= 1 << (bit_pos % 8);
            }
            bit_pos += 1;
        }
    }
    Ok(out)
}

/// Unpacks a binary shadow log; returns the dimension and the records with
/// positional shot indices.
pub fn deserialize_shadow(bytes: &[u8]) -> Result<(usize, Vec<ShotRecord>)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::ShadowFraming {
            record: 0,
            message: format!("truncated header: {} bytes", bytes.len()),
        });
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::ShadowFraming {
            record: 0,
            message: "bad magic".into(),
        });
    }
    let dim = u32::from_le_bytes(bytes[8..12].try_into().expect("sliced to width")) as usize;
    crate::check_dim(dim).map_err(|_| Error::ShadowFraming {
        record: 0,
        message: format!("dimension {dim} out of range"),
    })?;
    let count = u64::from_le_bytes(bytes[12..20].try_into().expect("sliced to width")) as usize;
    let bits = bytes[20] as usize;
    if bits != shadow_bits_per_record(dim) as usize {
        return Err(Error::ShadowFraming {
            record: 0,
            message: format!(
                "bits per record {bits} does not match dimension {dim} (expected {})",
                shadow_bits_per_record(dim)
            ),
        });
    }
    if count == 0 {
        return Err(Error::ShadowFraming {
            record: 0,
            message: "record count is zero".into(),
        });
    }
    let expected_len = HEADER_LEN + (count * bits).div_ceil(8);
    if bytes.len() != expected_len {
        return Err(Error::ShadowFraming {
            record: 0,
            message: format!("payload length {} != expected {expected_len}", bytes.len()),
        });
    }

    let payload = &bytes[HEADER_LEN..];
    let max_index = snapshot_count(dim) as u64;
    let mut log = Vec::with_capacity(count);
    for i in 0..count {
        let mut index = 0u64;
        let mut bit_pos = i * bits;
        for b in 0..bits {
            if (payload[bit_pos / 8] >> (bit_pos % 8)) & 1 == 1 {
                index |= 1 << b;
            }
            bit_pos += 1;
        }
        if index >= max_index {
            return Err(Error::ShadowFraming {
                record: i as u64,
                message: format!("canonical index {index} out of range (< {max_index})"),
            });
        }
        log.push(ShotRecord {
            snapshot: SnapshotId::from_canonical_index(dim, index as usize)
                .expect("index checked above"),
            shot_index: i as u64,
        });
    }
    Ok((dim, log))
}

/// CSV rendering of a shadow log: `shot_index,kind,i,j` with an empty `j`
/// column for computational snapshots.
pub fn shadow_csv(log: &[ShotRecord]) -> String {
    let mut out = String::from("shot_index,kind,i,j\n");
    for record in log {
        let (i, j) = record.snapshot.indices();
        let j_text = j.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{}\n",
            record.shot_index,
            record.snapshot.kind_label(),
            i,
            j_text
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{build_ensemble, enumerate_snapshots};
    use crate::estimator::ShotSampler;
    use crate::linalg::{hs_random_mixed, RandomStream};

    fn sample_log(dim: usize, count: usize, seed: u64) -> Vec<ShotRecord> {
        let mut rng = RandomStream::new(seed, 0);
        let rho = hs_random_mixed::<f64>(dim, &mut rng).unwrap();
        let ens = build_ensemble(dim).unwrap();
        let sampler = ShotSampler::new(&rho, &ens).unwrap();
        (0..count)
            .map(|i| ShotRecord {
                snapshot: sampler.sample(&mut rng),
                shot_index: i as u64,
            })
            .collect()
    }

    #[test]
    fn round_trip_is_lossless() {
        for d in [2usize, 3, 5, 16] {
            let log = sample_log(d, 777, 50 + d as u64);
            let bytes = serialize_shadow(&log, d).unwrap();
            let (dim, back) = deserialize_shadow(&bytes).unwrap();
            assert_eq!(dim, d);
            assert_eq!(back, log);
        }
    }

    #[test]
    fn every_snapshot_round_trips() {
        let d = 6usize;
        let log: Vec<ShotRecord> = enumerate_snapshots(d)
            .unwrap()
            .into_iter()
            .enumerate()
            .map(|(i, snapshot)| ShotRecord {
                snapshot,
                shot_index: i as u64,
            })
            .collect();
        let bytes = serialize_shadow(&log, d).unwrap();
        let (_, back) = deserialize_shadow(&bytes).unwrap();
        assert_eq!(back, log);
    }

    #[test]
    fn bit_width_matches_the_snapshot_count() {
        assert_eq!(shadow_bits_per_record(2), 3); // 2d^2 = 8
        assert_eq!(shadow_bits_per_record(3), 5); // 18
        assert_eq!(shadow_bits_per_record(16), 9); // 512
        assert_eq!(shadow_bits_per_record(256), 17); // 131072 = 2^17
        for d in 2usize..70 {
            let bits = shadow_bits_per_record(d) as u32;
            assert!(snapshot_count(d) as u64 <= 1u64 << bits);
            assert!((2 * d * d) as u64 > (1u64 << bits) / 2);
        }
    }

    #[test]
    fn payload_size_accounting() {
        let d = 256usize;
        let m = 1000usize;
        let log = sample_log(d, m, 9);
        let bytes = serialize_shadow(&log, d).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + (m * 17).div_ceil(8));
    }

    #[test]
    fn empty_log_is_rejected() {
        assert!(matches!(
            serialize_shadow(&[], 4),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn corrupt_streams_report_framing_errors() {
        let log = sample_log(4, 50, 10);
        let bytes = serialize_shadow(&log, 4).unwrap();

        let mut bad_magic = bytes.clone();
        bad_magic[0] ^= 0xff;
        assert!(matches!(
            deserialize_shadow(&bad_magic),
            Err(Error::ShadowFraming { .. })
        ));

        let truncated = &bytes[..bytes.len() - 1];
        assert!(deserialize_shadow(truncated).is_err());

        let mut extended = bytes.clone();
        extended.push(0);
        assert!(deserialize_shadow(&extended).is_err());

        let mut bad_bits = bytes.clone();
        bad_bits[20] = 40;
        assert!(deserialize_shadow(&bad_bits).is_err());

        assert!(deserialize_shadow(&bytes[..10]).is_err());
    }

    #[test]
    fn out_of_range_record_is_localized() {
        let d = 3usize; // snapshot_count = 15, bits = 5, indices 15..31 invalid
        let log = sample_log(d, 8, 11);
        let mut bytes = serialize_shadow(&log, d).unwrap();
        // Overwrite record 5 (bits 25..30) with the invalid index 31.
        for bit in 25..30 {
            bytes[HEADER_LEN + bit / 8] |= 1 << (bit % 8);
        }
        match deserialize_shadow(&bytes) {
            Err(Error::ShadowFraming { record, .. }) => assert_eq!(record, 5),
            other => panic!("expected a framing error at record 5, got {other:?}"),
        }
    }

    #[test]
    fn csv_layout() {
        let log = [
            ShotRecord {
                snapshot: SnapshotId::Comp(2),
                shot_index: 0,
            },
            ShotRecord {
                snapshot: SnapshotId::ImagMinus(1, 3),
                shot_index: 1,
            },
        ];
        let csv = shadow_csv(&log);
        assert_eq!(csv, "shot_index,kind,i,j\n0,comp,2,\n1,imag_minus,1,3\n");
    }

    #[test]
    fn size_is_independent_of_state_structure() {
        let pure_log = {
            let mut rng = RandomStream::new(70, 0);
            let rho = crate::linalg::haar_random_pure::<f64>(5, &mut rng).unwrap();
            let ens = build_ensemble(5).unwrap();
            let sampler = ShotSampler::new(&rho, &ens).unwrap();
            (0..500)
                .map(|i| ShotRecord {
                    snapshot: sampler.sample(&mut rng),
                    shot_index: i as u64,
                })
                .collect::<Vec<_>>()
        };
        let mixed_log = sample_log(5, 500, 71);
        assert_eq!(
            serialize_shadow(&pure_log, 5).unwrap().len(),
            serialize_shadow(&mixed_log, 5).unwrap().len()
        );
    }
}
