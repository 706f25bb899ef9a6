//! Counter-based random number generation (Philox4x32-10).
//!
//! Every draw is a pure function of (key, counter), so streams keyed by
//! (seed, sample index) are reproducible and independent of evaluation order;
//! parallel consumers never share state.

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

/// One Philox4x32-10 block: four 32-bit outputs from a 128-bit counter and a
/// 64-bit key.
pub fn philox4x32(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(PHILOX_W0);
            k[1] = k[1].wrapping_add(PHILOX_W1);
        }
        let p0 = (PHILOX_M0 as u64).wrapping_mul(c[0] as u64);
        let p1 = (PHILOX_M1 as u64).wrapping_mul(c[2] as u64);
        let (hi0, lo0) = ((p0 >> 32) as u32, p0 as u32);
        let (hi1, lo1) = ((p1 >> 32) as u32, p1 as u32);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

/// Stateless stream of f64/normal draws addressed by (seed, stream, counter).
///
/// `stream` identifies an independent substream (e.g. a Grassmannian sample
/// index); the internal counter advances through the stream's draws.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: [u32; 2],
    stream: u64,
    counter: u64,
    buffer: [u32; 4],
    buffered: usize,
}

impl CounterRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        CounterRng {
            key: [(seed & 0xFFFF_FFFF) as u32, (seed >> 32) as u32],
            stream,
            counter: 0,
            buffer: [0; 4],
            buffered: 0,
        }
    }

    fn next_block(&mut self) {
        let ctr = [
            (self.counter & 0xFFFF_FFFF) as u32,
            (self.counter >> 32) as u32,
            (self.stream & 0xFFFF_FFFF) as u32,
            (self.stream >> 32) as u32,
        ];
        self.buffer = philox4x32(ctr, self.key);
        self.counter = self.counter.wrapping_add(1);
        self.buffered = 4;
    }

    pub fn next_u32(&mut self) -> u32 {
        if self.buffered == 0 {
            self.next_block();
        }
        let v = self.buffer[4 - self.buffered];
        self.buffered -= 1;
        v
    }

    pub fn next_u64(&mut self) -> u64 {
        let hi = self.next_u32() as u64;
        let lo = self.next_u32() as u64;
        (hi << 32) | lo
    }

    /// Uniform in the open interval (0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (((self.next_u64() >> 11) as f64) + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller (deterministic, pair-at-a-time).
    pub fn next_normal_pair(&mut self) -> (f64, f64) {
        let u1 = self.next_f64();
        let u2 = self.next_f64();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        (radius * angle.cos(), radius * angle.sin())
    }

    pub fn fill_normals(&mut self, out: &mut [f64]) {
        let mut i = 0;
        while i + 1 < out.len() {
            let (a, b) = self.next_normal_pair();
            out[i] = a;
            out[i + 1] = b;
            i += 2;
        }
        if i < out.len() {
            out[i] = self.next_normal_pair().0;
        }
    }

    /// Uniform in [lo, hi).
    pub fn next_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}
