//! Scene files, SVG rendering and invariant-check reports on top of
//! `hb_core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod render;
pub mod scene;

pub use checks::{run_checks, Entry, Report, Suite};
pub use render::{render_bend_steps, render_svg, RenderError, RenderKind};
pub use scene::{parse_scene, serialize_scene, Built, Scene, SceneError, SchemaError, SCHEMA_VERSION};
