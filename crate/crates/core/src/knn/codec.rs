//! Binary snapshot of an [`ArmState`], used to cache finished runs.
//!
//! ```text
//! "SNPA" | version u32 | id_len u32 | id bytes | metric u8 | classes u32
//!        | n_train u64 | n_consumed u64 | finished u8 | n_test u64
//!        | n_test * (distance f64, train_index u64)
//!        | n_curve u64 | n_curve * (n_consumed u64, err_1nn f64, ber_estimate f64)
//!        | has_order u8 | [n_train * u64]
//! ```

use std::sync::Arc;

use super::arm::{ArmState, CurvePoint, Nearest};
use super::KnnError;
use crate::datamodel::Metric;

pub const ARM_STATE_MAGIC: &[u8; 4] = b"SNPA";
const VERSION: u32 = 1;
const NO_NEIGHBOUR: u64 = u64::MAX;

pub fn encode_arm_state(state: &ArmState) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + state.nearest.len() * 16 + state.curve.len() * 24);
    out.extend_from_slice(ARM_STATE_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let id = state.transformation_id.as_bytes();
    out.extend_from_slice(&(id.len() as u32).to_le_bytes());
    out.extend_from_slice(id);
    out.push(match state.metric {
        Metric::Euclidean => 0,
        Metric::CosineDissimilarity => 1,
    });
    out.extend_from_slice(&state.classes.to_le_bytes());
    out.extend_from_slice(&(state.n_train as u64).to_le_bytes());
    out.extend_from_slice(&(state.n_consumed as u64).to_le_bytes());
    out.push(u8::from(state.finished));
    out.extend_from_slice(&(state.nearest.len() as u64).to_le_bytes());
    for nn in &state.nearest {
        out.extend_from_slice(&nn.distance.to_le_bytes());
        let idx = if nn.train_index == usize::MAX {
            NO_NEIGHBOUR
        } else {
            nn.train_index as u64
        };
        out.extend_from_slice(&idx.to_le_bytes());
    }
    out.extend_from_slice(&(state.curve.len() as u64).to_le_bytes());
    for p in &state.curve {
        out.extend_from_slice(&(p.n_consumed as u64).to_le_bytes());
        out.extend_from_slice(&p.err_1nn.to_le_bytes());
        out.extend_from_slice(&p.ber_estimate.to_le_bytes());
    }
    match &state.order {
        None => out.push(0),
        Some(order) => {
            out.push(1);
            for &i in order.iter() {
                out.extend_from_slice(&(i as u64).to_le_bytes());
            }
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], KnnError> {
        if self.bytes.len() - self.pos < n {
            return Err(KnnError::CorruptState("unexpected end of data".into()));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, KnnError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, KnnError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u64(&mut self) -> Result<u64, KnnError> {
        let mut buf = [0u8; 8];
        buf.copy_from_slice(self.take(8)?);
        Ok(u64::from_le_bytes(buf))
    }

    fn f64(&mut self) -> Result<f64, KnnError> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn count(&mut self, item_size: usize) -> Result<usize, KnnError> {
        let n = self.u64()?;
        let remaining = (self.bytes.len() - self.pos) as u64;
        if n.checked_mul(item_size as u64).is_none_or(|b| b > remaining) {
            return Err(KnnError::CorruptState(format!("count {n} exceeds remaining data")));
        }
        Ok(n as usize)
    }
}

fn corrupt(msg: &str) -> KnnError {
    KnnError::CorruptState(msg.to_string())
}

/// Decodes and validates a snapshot written by [`encode_arm_state`].
pub fn decode_arm_state(bytes: &[u8]) -> Result<ArmState, KnnError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != ARM_STATE_MAGIC {
        return Err(corrupt("bad magic"));
    }
    if r.u32()? != VERSION {
        return Err(corrupt("unsupported version"));
    }
    let id_len = r.u32()? as usize;
    let id = std::str::from_utf8(r.take(id_len)?)
        .map_err(|_| corrupt("transformation id is not utf-8"))?
        .to_string();
    let metric = match r.u8()? {
        0 => Metric::Euclidean,
        1 => Metric::CosineDissimilarity,
        _ => return Err(corrupt("unknown metric tag")),
    };
    let classes = r.u32()?;
    let n_train = usize::try_from(r.u64()?).map_err(|_| corrupt("n_train too large"))?;
    let n_consumed = usize::try_from(r.u64()?).map_err(|_| corrupt("n_consumed too large"))?;
    let finished = match r.u8()? {
        0 => false,
        1 => true,
        _ => return Err(corrupt("bad finished flag")),
    };
    let n_test = r.count(16)?;
    let mut nearest = Vec::with_capacity(n_test);
    for _ in 0..n_test {
        let distance = r.f64()?;
        let idx = r.u64()?;
        let train_index = if idx == NO_NEIGHBOUR {
            usize::MAX
        } else {
            usize::try_from(idx).map_err(|_| corrupt("train index too large"))?
        };
        nearest.push(Nearest { distance, train_index });
    }
    let n_curve = r.count(24)?;
    let mut curve = Vec::with_capacity(n_curve);
    for _ in 0..n_curve {
        let n = usize::try_from(r.u64()?).map_err(|_| corrupt("curve count too large"))?;
        curve.push(CurvePoint {
            n_consumed: n,
            err_1nn: r.f64()?,
            ber_estimate: r.f64()?,
        });
    }
    let order = match r.u8()? {
        0 => None,
        1 => {
            if (bytes.len() - r.pos) as u64 != n_train as u64 * 8 {
                return Err(corrupt("stream order length mismatch"));
            }
            let mut order = Vec::with_capacity(n_train);
            for _ in 0..n_train {
                order.push(usize::try_from(r.u64()?).map_err(|_| corrupt("order index too large"))?);
            }
            Some(Arc::<[usize]>::from(order))
        }
        _ => return Err(corrupt("bad order flag")),
    };
    if r.pos != bytes.len() {
        return Err(corrupt("trailing bytes"));
    }

    let mut state = ArmState::new(id, metric, classes, n_train, n_test)?;
    if n_consumed > n_train || finished != (n_consumed == n_train) {
        return Err(corrupt("inconsistent progress counters"));
    }
    for nn in &nearest {
        let valid = if n_consumed == 0 {
            nn.train_index == usize::MAX
        } else {
            nn.train_index < n_train && !nn.distance.is_nan()
        };
        if !valid {
            return Err(corrupt("nearest neighbour out of range"));
        }
    }
    if curve.windows(2).any(|w| w[0].n_consumed >= w[1].n_consumed)
        || curve.last().is_some_and(|p| p.n_consumed != n_consumed)
        || curve
            .iter()
            .any(|p| !(0.0..=1.0).contains(&p.err_1nn) || !(0.0..=1.0).contains(&p.ber_estimate))
    {
        return Err(corrupt("curve is inconsistent"));
    }
    if let Some(order) = order {
        state = state.with_order(order)?;
    }
    state.n_consumed = n_consumed;
    state.finished = finished;
    state.nearest = nearest;
    state.curve = curve;
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::EmbeddingMatrix;

    #[test]
    fn snapshot_round_trip() {
        let train = EmbeddingMatrix::new("t", 4, 2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        let test = EmbeddingMatrix::new("t", 2, 2, vec![0.9, 0.1, 0.1, 0.8]).unwrap();
        let mut arm = ArmState::new("raw", Metric::CosineDissimilarity, 2, 4, 2)
            .unwrap()
            .with_order(Arc::from(vec![3usize, 1, 0, 2]))
            .unwrap();
        arm.pull(&train, &test, &[0, 1, 0, 1], &[1, 0], 3).unwrap();
        let bytes = encode_arm_state(&arm);
        assert_eq!(decode_arm_state(&bytes).unwrap(), arm);
        assert!(decode_arm_state(&bytes[..bytes.len() - 1]).is_err());
        let fresh = ArmState::new("x", Metric::Euclidean, 3, 5, 1).unwrap();
        assert_eq!(decode_arm_state(&encode_arm_state(&fresh)).unwrap(), fresh);
    }
}
