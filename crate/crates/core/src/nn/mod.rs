//! Small convolutional networks with hand-written backpropagation.
//!
//! Networks are generic over [`Scalar`] so training runs in `f32` while
//! gradient checks run in `f64`.

mod adam;
mod checkpoint;
mod network;
mod spec;

pub use adam::{apply_gradients, clip_global_norm, AdamState, CLIP_NORM};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use network::{ForwardCache, Gradients, Network, QNetwork};
pub use spec::{build_network_spec, Head, LayerSpec, NetworkSpec};

use num_traits::Float;

pub trait Scalar: Float + Default + Send + Sync + std::fmt::Debug + std::iter::Sum + 'static {
    fn of(v: f64) -> Self;
    fn f64(self) -> f64;
}

impl Scalar for f32 {
    fn of(v: f64) -> Self {
        v as f32
    }
    fn f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn of(v: f64) -> Self {
        v
    }
    fn f64(self) -> f64 {
        self
    }
}
