//! Functional and timing simulator of an event-driven vision SoC: a DVS
//! pre-processor, a star-topology router, nine spiking convolution cores and
//! a readout block.

pub mod config;
pub mod conv;
pub mod event;
pub mod io;
pub mod oracle;
pub mod preproc;
pub mod readout;
pub mod router;
pub mod sim;

pub use config::{load_network, parse_network_description, LayerConfig, NetworkConfig};
pub use event::{FeatureEvent, PixelEvent, Port};
