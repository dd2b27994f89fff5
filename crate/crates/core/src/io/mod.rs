//! File formats: grid container, landscape bundles, snapshots, CSV series
//! and key=value records, plus raster conversions.

pub mod bundle;
pub mod gridfile;
pub mod series;
pub mod snapshot;
pub mod terrain;
pub mod text;

pub use bundle::{
    read_bundle, read_bundle_with, read_schedule, write_bundle, write_schedule, LandscapeBundle,
};
pub use gridfile::{read_bool_grid, read_grid, read_real_grid, write_grid, GridData};
pub use series::{render_series_csv, write_series_csv};
pub use snapshot::{encode_snapshot, write_snapshot};
pub use terrain::{pad_nonburnable, slope_from_altitude, wind_from_uv, SlopeSign};
pub use text::{read_params, write_params, KeyValues};
