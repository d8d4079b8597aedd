use ndarray::Array2;
use ndarray_linalg::QR;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{ComplexMatrix, C64};

/// A reproducible random stream identified by `(master_seed, stream_index)`.
///
/// Streams with the same pair produce identical draws regardless of which thread or
/// in which order they are consumed; different indices are independent ChaCha streams.
#[derive(Clone, Debug)]
pub struct RngStream {
    master_seed: u64,
    stream_index: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_index);
        RngStream {
            master_seed,
            stream_index,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// A fresh stream sharing the master seed.
    pub fn substream(&self, index: u64) -> RngStream {
        RngStream::new(self.master_seed, index)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Draw a Haar-random unitary of size `dim` (circular unitary ensemble).
///
/// QR-factorises a Ginibre matrix and multiplies each column of `Q` by the phase of the
/// matching diagonal entry of `R`, which removes the bias of the plain QR output.
pub fn sample_cue<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let z = Array2::from_shape_simple_fn((dim, dim), || {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * scale, im * scale)
    });
    let (mut q, r) = z.qr().expect("QR of a Gaussian matrix cannot fail");
    for j in 0..dim {
        let rjj = r[[j, j]];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        q.column_mut(j).mapv_inplace(|v| v * phase);
    }
    q
}
