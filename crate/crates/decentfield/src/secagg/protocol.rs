use super::codec::FixedPointCodec;
use super::field::FieldElement;
use super::Error;
use crate::tensorgrad::ParamVector;

/// A fixed-point vector under an additive mask. Individually it decodes to
/// field noise; summed over the complete user set the masks cancel and the
/// total decodes to the true aggregate.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskedVector {
    pub elems: Vec<FieldElement>,
    pub round: u32,
    pub sender: u32,
}

fn mask_values(
    values: &[f64],
    mask: &[FieldElement],
    codec: &FixedPointCodec,
    round: u32,
    sender: u32,
) -> Result<MaskedVector, Error> {
    if values.len() != mask.len() {
        return Err(Error::LengthMismatch { expected: values.len(), sender, got: mask.len() });
    }
    let mut elems = codec.encode(values)?;
    for (e, m) in elems.iter_mut().zip(mask) {
        *e = e.add(*m);
    }
    Ok(MaskedVector { elems, round, sender })
}

/// Obfuscates a weight upload: the user pre-scales by its own aggregation
/// weight, so the server's sum is already the weighted average.
pub fn send_wts(
    weights: &ParamVector,
    alpha: f64,
    codec: &FixedPointCodec,
    mask: &[FieldElement],
    round: u32,
    sender: u32,
) -> Result<MaskedVector, Error> {
    let scaled: Vec<f64> = weights.data().iter().map(|w| alpha * w).collect();
    mask_values(&scaled, mask, codec, round, sender)
}

/// Obfuscates a gradient upload; identical to `send_wts` with unit weight.
pub fn send_grads(
    grads: &[f64],
    codec: &FixedPointCodec,
    mask: &[FieldElement],
    round: u32,
    sender: u32,
) -> Result<MaskedVector, Error> {
    mask_values(grads, mask, codec, round, sender)
}

/// Sums the masked uploads of a complete round and decodes the aggregate.
/// Requires exactly one message from every sender `0..expected_users`, all
/// tagged with the same round and length.
pub fn secure_sum(
    masked: &[MaskedVector],
    expected_users: u32,
    codec: &FixedPointCodec,
) -> Result<Vec<f64>, Error> {
    if masked.len() != expected_users as usize {
        return Err(Error::IncompleteUserSet(format!(
            "{} uploads for {expected_users} users",
            masked.len()
        )));
    }
    let mut seen = vec![false; expected_users as usize];
    let round = masked[0].round;
    let d = masked[0].elems.len();
    for mv in masked {
        if mv.round != round {
            return Err(Error::RoundMismatch { expected: round, sender: mv.sender, got: mv.round });
        }
        if mv.elems.len() != d {
            return Err(Error::LengthMismatch {
                expected: d,
                sender: mv.sender,
                got: mv.elems.len(),
            });
        }
        let Some(slot) = seen.get_mut(mv.sender as usize) else {
            return Err(Error::IncompleteUserSet(format!("unknown sender {}", mv.sender)));
        };
        if *slot {
            return Err(Error::IncompleteUserSet(format!("duplicate sender {}", mv.sender)));
        }
        *slot = true;
    }
    let mut total = vec![FieldElement::ZERO; d];
    for mv in masked {
        for (t, e) in mv.elems.iter().enumerate() {
            total[t] = total[t].add(*e);
        }
    }
    Ok(codec.decode(&total))
}

/// Length-1 instance of the vector protocol, used to publish scalar sums
/// (for example the aggregation-weight normalizer) without revealing any
/// single user's term.
pub fn secure_scalar_sum(
    values: &[f64],
    masks: &[Vec<FieldElement>],
    codec: &FixedPointCodec,
    round: u32,
) -> Result<f64, Error> {
    let masked: Vec<MaskedVector> = values
        .iter()
        .zip(masks)
        .enumerate()
        .map(|(k, (v, m))| mask_values(&[*v], m, codec, round, k as u32))
        .collect::<Result<_, _>>()?;
    Ok(secure_sum(&masked, values.len() as u32, codec)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::secagg::mask::{derive_mask, PairwiseSeeds};
    use crate::tensorgrad::LayerShape;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn codec() -> FixedPointCodec {
        FixedPointCodec::default()
    }

    fn masks_for(k: u32, d: usize, seed: u64) -> Vec<Vec<FieldElement>> {
        let seeds = PairwiseSeeds::generate(k, &mut StdRng::seed_from_u64(seed));
        (0..k).map(|u| derive_mask(&seeds, u, d).unwrap()).collect()
    }

    fn pv(data: Vec<f64>) -> ParamVector {
        let n = data.len() as u32;
        ParamVector::new(data, vec![LayerShape::new(n, 1, false)]).unwrap()
    }

    #[test]
    fn zero_alpha_leaves_only_the_mask() {
        let w = pv(vec![1.0, -2.0, 3.0]);
        let mask = masks_for(2, 3, 0).remove(0);
        let mv = send_wts(&w, 0.0, &codec(), &mask, 0, 0).unwrap();
        assert_eq!(mv.elems, mask);
    }

    #[test]
    fn unmasked_unit_alpha_is_plain_encoding() {
        let w = pv(vec![0.25, -0.75]);
        let zero_mask = vec![FieldElement::ZERO; 2];
        let mv = send_wts(&w, 1.0, &codec(), &zero_mask, 0, 0).unwrap();
        assert_eq!(mv.elems, codec().encode(w.data()).unwrap());
    }

    #[test]
    fn two_user_weighted_sum_recovers_shared_vector() {
        let c = codec();
        let w = pv(vec![0.5, -1.25, 2.0, 0.0]);
        let masks = masks_for(2, 4, 7);
        let uploads = vec![
            send_wts(&w, 0.5, &c, &masks[0], 3, 0).unwrap(),
            send_wts(&w, 0.5, &c, &masks[1], 3, 1).unwrap(),
        ];
        let sum = secure_sum(&uploads, 2, &c).unwrap();
        for (got, want) in sum.iter().zip(w.data()) {
            assert!((got - want).abs() <= c.sum_tolerance(2));
        }
    }

    #[test]
    fn eight_user_sum_matches_plaintext_oracle() {
        let c = codec();
        let k = 8u32;
        let d = 512;
        let mut rng = StdRng::seed_from_u64(13);
        let masks = masks_for(k, d, 14);
        let mut plain = vec![0.0; d];
        let mut uploads = Vec::new();
        for user in 0..k {
            let alpha: f64 = rng.gen_range(0.0..1.0);
            let g: Vec<f64> = (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect();
            for (p, v) in plain.iter_mut().zip(&g) {
                *p += alpha * v;
            }
            uploads.push(send_wts(&pv(g), alpha, &c, &masks[user as usize], 0, user).unwrap());
        }
        let sum = secure_sum(&uploads, k, &c).unwrap();
        let worst =
            sum.iter().zip(&plain).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst <= c.sum_tolerance(k), "worst error {worst}");
    }

    #[test]
    fn single_user_sum_is_exact_fixed_point() {
        let c = codec();
        let g = pv(vec![1.0, -0.5, 0.125]);
        let mask = vec![FieldElement::ZERO; 3];
        let upload = send_wts(&g, 0.75, &c, &mask, 0, 0).unwrap();
        let sum = secure_sum(&[upload], 1, &c).unwrap();
        for (got, want) in sum.iter().zip(g.data()) {
            assert!((got - 0.75 * want).abs() <= c.sum_tolerance(1));
        }
    }

    #[test]
    fn all_zero_uploads_sum_to_zero() {
        let c = codec();
        let masks = masks_for(4, 8, 21);
        let uploads: Vec<_> = (0..4)
            .map(|u| send_grads(&[0.0; 8], &c, &masks[u as usize], 0, u).unwrap())
            .collect();
        assert_eq!(secure_sum(&uploads, 4, &c).unwrap(), vec![0.0; 8]);
    }

    #[test]
    fn gradient_masks_cancel_against_plaintext() {
        let c = codec();
        let k = 5u32;
        let d = 64;
        let mut rng = StdRng::seed_from_u64(31);
        let masks = masks_for(k, d, 32);
        let mut plain = vec![0.0; d];
        let mut uploads = Vec::new();
        for user in 0..k {
            let g: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            for (p, v) in plain.iter_mut().zip(&g) {
                *p += v;
            }
            uploads.push(send_grads(&g, &c, &masks[user as usize], 2, user).unwrap());
        }
        let sum = secure_sum(&uploads, k, &c).unwrap();
        for (got, want) in sum.iter().zip(&plain) {
            assert!((got - want).abs() <= c.sum_tolerance(k));
        }
    }

    #[test]
    fn round_mismatch_is_rejected() {
        let c = codec();
        let masks = masks_for(2, 2, 40);
        let uploads = vec![
            send_grads(&[1.0, 2.0], &c, &masks[0], 1, 0).unwrap(),
            send_grads(&[3.0, 4.0], &c, &masks[1], 2, 1).unwrap(),
        ];
        assert!(matches!(
            secure_sum(&uploads, 2, &c).unwrap_err(),
            Error::RoundMismatch { sender: 1, .. }
        ));
    }

    #[test]
    fn missing_and_duplicate_senders_are_rejected() {
        let c = codec();
        let masks = masks_for(3, 2, 41);
        let mk = |sender: u32| send_grads(&[0.5, 0.5], &c, &masks[sender as usize], 0, sender);
        let short = vec![mk(0).unwrap(), mk(1).unwrap()];
        assert!(matches!(secure_sum(&short, 3, &c).unwrap_err(), Error::IncompleteUserSet(_)));
        let dup = vec![mk(0).unwrap(), mk(1).unwrap(), mk(1).unwrap()];
        assert!(matches!(secure_sum(&dup, 3, &c).unwrap_err(), Error::IncompleteUserSet(_)));
    }

    #[test]
    fn scalar_sum_examples() {
        let c = codec();
        let masks = masks_for(2, 1, 50);
        let got = secure_scalar_sum(&[0.3, 0.7], &masks, &c, 0).unwrap();
        assert!((got - 1.0).abs() <= 0.5f64.powi(23));
        let zeros = secure_scalar_sum(&[0.0, 0.0], &masks, &c, 0).unwrap();
        assert_eq!(zeros, 0.0);
    }

    #[test]
    fn scalar_sum_matches_plaintext_for_eight_users() {
        let c = codec();
        let mut rng = StdRng::seed_from_u64(51);
        let values: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let masks = masks_for(8, 1, 52);
        let got = secure_scalar_sum(&values, &masks, &c, 0).unwrap();
        let want: f64 = values.iter().sum();
        assert!((got - want).abs() <= c.sum_tolerance(8));
    }

    #[test]
    fn server_view_depends_only_on_the_sum() {
        // Two executions with different per-user plaintexts but equal sums
        // (dyadic values, so encoding is exact) and the same seeds produce
        // identical decoded outputs.
        let c = codec();
        let masks = masks_for(2, 3, 60);
        let run = |a: &[f64], b: &[f64]| {
            let uploads = vec![
                send_grads(a, &c, &masks[0], 0, 0).unwrap(),
                send_grads(b, &c, &masks[1], 0, 1).unwrap(),
            ];
            secure_sum(&uploads, 2, &c).unwrap()
        };
        let first = run(&[1.0, 2.0, -0.5], &[0.25, -1.0, 0.75]);
        let second = run(&[0.5, 3.0, 0.125], &[0.75, -2.0, 0.125]);
        assert_eq!(first, second);
    }
}
