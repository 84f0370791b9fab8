use rand::Rng;

use super::{sample_cue, ProtocolKind};
use crate::error::Result;
use crate::rdm::PartitionSpec;
use crate::spin::{pauli_x, pauli_y, Mat2};

/// One draw of correlated local unitaries on the interval, in local site order.
///
/// `base` holds the underlying CUE samples `U_k`; the experiment lists hold
/// the gates actually applied (`U_k σʸ`, `U_k*`, identity, …).
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryPattern {
    pub kind: ProtocolKind,
    pub base: Vec<Mat2>,
    pub experiment_1: Vec<Mat2>,
    pub experiment_2: Option<Vec<Mat2>>,
}

impl UnitaryPattern {
    pub fn experiments(&self) -> Vec<&[Mat2]> {
        let mut v = vec![self.experiment_1.as_slice()];
        if let Some(e2) = &self.experiment_2 {
            v.push(e2.as_slice());
        }
        v
    }
}

fn conj(m: &Mat2) -> Mat2 {
    m.map(|z| z.conj())
}

/// Draws a pattern of `kind` on `partition`.
///
/// - R: `U_k = U_{L−1−k}` (mirror pairs share a sample).
/// - T: `(U σʸ on I₁, U on I₂)` then `(U* on I₁, U on I₂)`.
/// - D₂: `(U σˣ, 1, U)` then `(U, 1, U)` on `(I₁, I₂, I₃)`.
/// - KB: `(U σʸ, 1, U)` then `(U*, 1, U)`.
/// - purity: independent `U_k` on every site.
pub fn build_pattern<R: Rng + ?Sized>(
    kind: ProtocolKind,
    partition: &PartitionSpec,
    rng: &mut R,
) -> Result<UnitaryPattern> {
    kind.check_partition(partition)?;
    let len = partition.interval_len();
    let id = Mat2::identity();
    let pattern = match kind {
        ProtocolKind::Reflection => {
            let half: Vec<Mat2> = (0..len / 2).map(|_| sample_cue(rng)).collect();
            let base: Vec<Mat2> = (0..len).map(|k| half[k.min(len - 1 - k)]).collect();
            UnitaryPattern {
                kind,
                experiment_1: base.clone(),
                base,
                experiment_2: None,
            }
        }
        ProtocolKind::Purity => {
            let base: Vec<Mat2> = (0..len).map(|_| sample_cue(rng)).collect();
            UnitaryPattern {
                kind,
                experiment_1: base.clone(),
                base,
                experiment_2: None,
            }
        }
        ProtocolKind::TimeReversal => {
            let n1 = partition.segment_len(0);
            let base: Vec<Mat2> = (0..len).map(|_| sample_cue(rng)).collect();
            let e1 = base
                .iter()
                .enumerate()
                .map(|(k, u)| if k < n1 { u * pauli_y() } else { *u })
                .collect();
            let e2 = base
                .iter()
                .enumerate()
                .map(|(k, u)| if k < n1 { conj(u) } else { *u })
                .collect();
            UnitaryPattern {
                kind,
                base,
                experiment_1: e1,
                experiment_2: Some(e2),
            }
        }
        ProtocolKind::D2 | ProtocolKind::KleinBottle => {
            let i1 = partition.local_bits(0);
            let i2 = partition.local_bits(1);
            let base: Vec<Mat2> = (0..len)
                .map(|k| if i2.contains(&k) { id } else { sample_cue(rng) })
                .collect();
            let twist = if kind == ProtocolKind::D2 { pauli_x() } else { pauli_y() };
            let e1 = base
                .iter()
                .enumerate()
                .map(|(k, u)| if i1.contains(&k) { u * twist } else { *u })
                .collect();
            let e2 = base
                .iter()
                .enumerate()
                .map(|(k, u)| {
                    if i1.contains(&k) && kind == ProtocolKind::KleinBottle {
                        conj(u)
                    } else {
                        *u
                    }
                })
                .collect();
            UnitaryPattern {
                kind,
                base,
                experiment_1: e1,
                experiment_2: Some(e2),
            }
        }
    };
    Ok(pattern)
}
