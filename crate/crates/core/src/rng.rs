//! Counter-based random numbers.
//!
//! Every value is a pure function of a 64-bit key and a lattice coordinate,
//! so noise can be regenerated site by site in any order and on any thread.
//! Mixing uses the SplitMix64 finalizer, which is a bijection on `u64`.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const COORD_MUL: u64 = 0xD1B5_4A32_D192_ED03;

/// Which white-noise stream a seed is derived for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Stream {
    /// The primary noise `W`.
    W,
    /// The independent resampling noise `W'`.
    WPrime,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::W => 0,
            Stream::WPrime => 1,
        }
    }
}

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the noise key for one replicate and stream.
///
/// For a fixed master seed the map `(replicate, stream) -> seed` is injective
/// for `replicate < 2^63`: the counter `2 * replicate + tag` is injective, adding
/// an odd multiple of it is injective mod 2^64 and `mix64` is a bijection.
pub fn derive_seed(master: u64, replicate: u64, stream: Stream) -> u64 {
    let counter = replicate.wrapping_mul(2).wrapping_add(stream.tag());
    mix64(mix64(master ^ 0x5851_F42D_4C95_7F2D).wrapping_add(counter.wrapping_mul(GOLDEN)))
}

/// Independent master seed for a numbered sub-experiment (e.g. one box size).
pub fn sub_seed(master: u64, tag: u64) -> u64 {
    mix64(mix64(master ^ 0x3C6E_F372_FE94_F82B).wrapping_add(mix64(tag.wrapping_add(GOLDEN))))
}

#[inline]
fn site_hash(key: u64, coords: &[i64]) -> u64 {
    let mut h = mix64(key);
    for &c in coords {
        h = mix64(h ^ (c as u64).wrapping_mul(COORD_MUL).wrapping_add(GOLDEN));
    }
    h
}

#[inline]
fn unit_open(bits: u64) -> f64 {
    // 53 random bits mapped into (0, 1).
    ((bits >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw on (0, 1) attached to `(key, coords, lane)`.
#[inline]
pub fn uniform_at(key: u64, coords: &[i64], lane: u64) -> f64 {
    let h = site_hash(key, coords);
    unit_open(mix64(h ^ lane.wrapping_mul(GOLDEN)))
}

/// Standard normal draw attached to a lattice site (Box-Muller, cosine branch).
#[inline]
pub fn normal_at(key: u64, coords: &[i64]) -> f64 {
    let h = site_hash(key, coords);
    let u1 = unit_open(mix64(h ^ 0x2545_F491_4F6C_DD1D));
    let u2 = unit_open(mix64(h ^ 0x6A09_E667_F3BC_C909));
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Sequential generator over the same mixing function, for sampling
/// auxiliary quantities (null distributions, random masks).
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: i64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        Self { key, counter: 0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        let h = site_hash(self.key, &[self.counter]);
        self.counter += 1;
        h
    }

    pub fn next_f64(&mut self) -> f64 {
        unit_open(self.next_u64())
    }

    pub fn next_normal(&mut self) -> f64 {
        let v = normal_at(self.key, &[self.counter]);
        self.counter += 1;
        v
    }
}
