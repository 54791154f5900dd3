//! Parameterized BIP coordination models.
//!
//! A model is an architecture diagram: component types with their labelled
//! transition systems, and connector motifs relating their ports. This crate
//! parses the `.bip` text form ([`dsl`]), validates it ([`model`]), computes
//! interaction semantics ([`connector`], [`logic`], [`diagram`]), encodes
//! diagrams into Require/Accept macros ([`encoder`]) and executes
//! instantiated systems ([`engine`]).

pub mod connector;
pub mod diagram;
pub mod dsl;
pub mod encoder;
pub mod engine;
pub mod logic;
pub mod model;

pub use diagram::Binding;
pub use dsl::{parse_model, serialize_model, ParseError};
pub use model::{ArchitectureDiagram, Configuration, Connector, Interaction, PortInstance, PortTypeRef, Typing};

/// Example models shipped with the crate, as `(file name, source)`.
pub mod bundled {
    pub const STAR: &str = include_str!("../models/star.bip");
    pub const TRIGGER_PAIR: &str = include_str!("../models/trigger_pair.bip");
    pub const MATCHING: &str = include_str!("../models/matching.bip");
    pub const COMPLETE: &str = include_str!("../models/complete.bip");
    pub const SWITCHABLE_ROUTES: &str = include_str!("../models/switchable_routes.bip");
    pub const MUTEX: &str = include_str!("../models/mutex.bip");
    pub const BROKEN: &str = include_str!("../models/broken.bip");

    pub const ALL: &[(&str, &str)] = &[
        ("star.bip", STAR),
        ("trigger_pair.bip", TRIGGER_PAIR),
        ("matching.bip", MATCHING),
        ("complete.bip", COMPLETE),
        ("switchable_routes.bip", SWITCHABLE_ROUTES),
        ("mutex.bip", MUTEX),
        ("broken.bip", BROKEN),
    ];
}
