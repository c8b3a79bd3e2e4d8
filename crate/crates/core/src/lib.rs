//! Asymptotic sets of networks of coupled complex quadratic maps.
//!
//! Every node iterates `z_j -> (sum_k g_jk A_jk z_k)^2 + c_j`. The crate renders
//! the parameter-plane (equi-M, node-wise M) and dynamic-plane (uni-J) slices
//! of the network Mandelbrot and Julia sets, counts connected components of the
//! resulting rasters, sweeps the real one-dimensional maps that govern single
//! nodes, and partitions families of configurations into spectral and
//! asymptotic classes.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` deliberately rejects NaN

pub mod bifurcation;
pub mod cli;
pub mod ensemble;
pub mod error;
pub mod escape;
pub mod families;
pub mod netcore;
pub mod raster;
pub mod topology;

pub use error::{Error, Result};
pub use netcore::{Complex, MultiState, Network, OrbitRecord};
pub use raster::{BinaryRaster, EscapeRaster, GridSpec};

/// Runs `f` on a rayon pool capped at `threads` workers (`None` uses the global pool).
///
/// Results do not depend on the worker count; every raster pixel is computed independently.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool =
                rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build().map_err(|e| Error::Runtime(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
