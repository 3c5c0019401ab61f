//! Attention tensors and the check/locate math.

mod check;
mod format;
mod locate;
mod map;
mod merge;
mod resample;

pub use check::{check_discrepancy, inside_fraction, ObjectCheck, Verdict, DEFAULT_THRESHOLD};
pub use format::{TensorFile, MAGIC};
pub use locate::{locate_region, tie_tolerance, SummedAreaTable};
pub(crate) use locate::check_window;
pub use map::{to_pixel_region, AttnMap, AttnStack, Grid, MapKind, PixelRegion};
pub use merge::{layered_merge, layered_merge_token, temporal_merge};
pub use resample::bilinear;
