use crate::error::{Error, Result};
use crate::numerics::Tensor;

/// Half-width of the context window used by the weakly supervised models.
pub const DEFAULT_HALF_WIDTH: usize = 12;

/// Frames `t−T..=t+T` of a sequence, with indices clamped to the ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContextWindow {
    pub half_width: usize,
}

impl Default for ContextWindow {
    fn default() -> Self {
        ContextWindow {
            half_width: DEFAULT_HALF_WIDTH,
        }
    }
}

impl ContextWindow {
    pub fn new(half_width: usize) -> Self {
        ContextWindow { half_width }
    }

    /// Number of frames in a window, `2T + 1`.
    pub fn span(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn width(&self, frame_dim: usize) -> usize {
        self.span() * frame_dim
    }

    /// Appends the window centred on `t` to `out`.
    pub fn extend_into(&self, seq: &Tensor, t: usize, out: &mut Vec<f64>) {
        let last = seq.rows() as isize - 1;
        let h = self.half_width as isize;
        for s in (t as isize - h)..=(t as isize + h) {
            out.extend_from_slice(seq.row(s.clamp(0, last) as usize));
        }
    }

    pub fn assemble(&self, seq: &Tensor, t: usize) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.width(seq.cols()));
        self.extend_into(seq, t, &mut v);
        v
    }

    /// One window per entry of `centers`, as rows of a matrix.
    pub fn batch(&self, seq: &Tensor, centers: &[usize]) -> Result<Tensor> {
        if centers.iter().any(|&t| t >= seq.rows()) {
            return Err(Error::shape(format!(
                "window centre out of range for {} frames",
                seq.rows()
            )));
        }
        let mut data = Vec::with_capacity(centers.len() * self.width(seq.cols()));
        for &t in centers {
            self.extend_into(seq, t, &mut data);
        }
        Tensor::matrix(centers.len(), self.width(seq.cols()), data)
    }

    /// Windows for every frame of `seq`.
    pub fn all(&self, seq: &Tensor) -> Tensor {
        let centers: Vec<usize> = (0..seq.rows()).collect();
        self.batch(seq, &centers).expect("centres in range")
    }
}
