//! Portable pseudo-random numbers for instance generation.
//!
//! Reproducibility across implementations and platforms matters more here than
//! raw quality, so the whole pipeline is pinned down:
//!
//! * State setup: the four 64-bit words of state are the first four outputs of
//!   SplitMix64 run on the user seed.
//! * Raw stream: xoshiro256++ (Blackman/Vigna), `rotl(s0 + s3, 23) + s0` output.
//! * Uniforms: the top 53 bits of a raw draw, times 2^-53, giving [0, 1).
//! * Normals: Box-Muller. Each pair consumes exactly two raw draws, u1 then u2,
//!   with u1 mapped into (0, 1] as `(bits >> 11) + 1) * 2^-53` so the log is
//!   finite; the second member of the pair is returned by the following call.
//!
//! Any implementation following those four rules reproduces our instances
//! bit for bit.

const TWO_NEG53: f64 = 1.0 / (1u64 << 53) as f64;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// xoshiro256++ generator with SplitMix64 seeding and a Box-Muller spare slot.
#[derive(Debug, Clone)]
pub struct Rng {
    s: [u64; 4],
    spare_normal: Option<f64>,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let s = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Rng { s, spare_normal: None }
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[0]
            .wrapping_add(s[3])
            .rotate_left(23)
            .wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform on [0, 1) with 53-bit resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * TWO_NEG53
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        if let Some(v) = self.spare_normal.take() {
            return v;
        }
        // u1 lands in (0,1] so ln(u1) is finite.
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * TWO_NEG53;
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }
}
