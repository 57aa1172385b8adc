//! Classical distillation glue shared by the protocol runners: error
//! correction toward a reference key, then privacy amplification with one
//! published Toeplitz seed for everyone.

use std::collections::BTreeMap;

use crate::channel::Party;
use crate::postprocess::{error_correct, privacy_amplify, toeplitz_hash, ToeplitzSeed};
use crate::protocol::ProtocolError;
use crate::rng::Prng;

pub fn hamming_distance(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

pub(crate) struct Distilled {
    pub finals: BTreeMap<Party, Vec<bool>>,
    pub leaked: usize,
    pub seed: ToeplitzSeed,
}

/// Correct every follower key toward the reference, then hash all of them
/// with the same published seed. The output length charges the estimated
/// error rate, the leaked parity bits, and the security margin against the
/// reference key's length.
pub(crate) fn distill_keys(
    reference: (Party, &[bool]),
    followers: &[(Party, &[bool])],
    qber: f64,
    block: usize,
    security_param: usize,
    rng: &mut Prng,
) -> Result<Distilled, ProtocolError> {
    let (ref_party, ref_key) = reference;
    if ref_key.is_empty() {
        let mut finals = BTreeMap::new();
        finals.insert(ref_party, Vec::new());
        for (p, _) in followers {
            finals.insert(*p, Vec::new());
        }
        return Ok(Distilled {
            finals,
            leaked: 0,
            seed: ToeplitzSeed { bits: Vec::new() },
        });
    }
    // Short keys cap the block size so single-block parity still applies.
    let block = block.min(ref_key.len()).max(1);
    let mut leaked = 0usize;
    let mut corrected: Vec<(Party, Vec<bool>)> = Vec::new();
    for (party, key) in followers {
        let res = error_correct(ref_key, key, block, rng)?;
        leaked += res.leaked;
        corrected.push((*party, res.key_b));
    }
    let (final_ref, seed) = privacy_amplify(ref_key, leaked, qber, security_param, rng)?;
    let out_len = final_ref.len();
    let mut finals = BTreeMap::new();
    for (party, key) in corrected {
        finals.insert(party, toeplitz_hash(&seed, &key, out_len));
    }
    finals.insert(ref_party, final_ref);
    Ok(Distilled {
        finals,
        leaked,
        seed,
    })
}
