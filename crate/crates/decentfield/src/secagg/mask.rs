use rand::Rng;

use super::field::{FieldElement, MODULUS};
use super::Error;

/// One SplitMix64 output step. Exact constants of the reference construction;
/// the mask stream at element `t` under seed `s` is `splitmix64(s + t) mod q`.
#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn prg(seed: u64, t: u64) -> FieldElement {
    FieldElement::from_u64(splitmix64(seed.wrapping_add(t)))
}

/// Symmetric seeds `s_ij = s_ji` for every unordered user pair, established by
/// the trusted simulator setup. Real deployments would run key agreement
/// instead.
#[derive(Clone, Debug)]
pub struct PairwiseSeeds {
    n_users: u32,
    /// Triangular layout: seed of pair `(i, j)`, `i < j`, at `tri_index(i, j)`.
    seeds: Vec<u64>,
}

impl PairwiseSeeds {
    pub fn generate<R: Rng>(n_users: u32, rng: &mut R) -> Self {
        let pairs = n_users as usize * (n_users as usize).saturating_sub(1) / 2;
        Self { n_users, seeds: (0..pairs).map(|_| rng.gen()).collect() }
    }

    pub fn n_users(&self) -> u32 {
        self.n_users
    }

    fn tri_index(&self, i: u32, j: u32) -> usize {
        debug_assert!(i < j && j < self.n_users);
        let n = self.n_users as usize;
        let (i, j) = (i as usize, j as usize);
        // Row i starts after all previous rows' tails.
        i * n - i * (i + 1) / 2 + (j - i - 1)
    }

    /// Seed shared by the unordered pair `{a, b}`.
    pub fn seed(&self, a: u32, b: u32) -> Result<u64, Error> {
        if a == b || a >= self.n_users || b >= self.n_users {
            return Err(Error::MissingSeed { user: a.max(b) });
        }
        let (i, j) = if a < b { (a, b) } else { (b, a) };
        Ok(self.seeds[self.tri_index(i, j)])
    }
}

/// User `k`'s additive mask of length `d`:
/// `mask_k[t] = sum_{j>k} PRG(s_kj, t) - sum_{j<k} PRG(s_jk, t) (mod q)`.
/// Summed over the complete user set the masks cancel exactly.
pub fn derive_mask(seeds: &PairwiseSeeds, k: u32, d: usize) -> Result<Vec<FieldElement>, Error> {
    if k >= seeds.n_users() {
        return Err(Error::MissingSeed { user: k });
    }
    let mut mask = vec![FieldElement::ZERO; d];
    for j in 0..seeds.n_users() {
        if j == k {
            continue;
        }
        let s = seeds.seed(k, j)?;
        if j > k {
            for (t, m) in mask.iter_mut().enumerate() {
                *m = m.add(prg(s, t as u64));
            }
        } else {
            for (t, m) in mask.iter_mut().enumerate() {
                *m = m.sub(prg(s, t as u64));
            }
        }
    }
    Ok(mask)
}
