//! The bundled convex-quadrangle example.

use crate::context::{AttributeSet, FormalContext};
use crate::io::parse_cxt;

pub const QUADRANGLES_CXT: &str = include_str!("../fixtures/quadrangles.cxt");
pub const TENTATIVE_ERRORS_CXT: &str = include_str!("../fixtures/tentative_errors.cxt");

/// Twelve convex quadrangles described by seven attributes.
pub fn quadrangles() -> FormalContext {
    parse_cxt(QUADRANGLES_CXT).expect("bundled fixture parses")
}

/// Four tentatively erroneous quadrangles over the same attributes.
pub fn tentative_errors() -> FormalContext {
    parse_cxt(TENTATIVE_ERRORS_CXT).expect("bundled fixture parses")
}

/// Intent of one of the tentative errors (`Case1`..`Case4`).
pub fn case(name: &str) -> AttributeSet {
    let cases = tentative_errors();
    let id = cases
        .object_index(name)
        .unwrap_or_else(|| panic!("no tentative error named `{name}`"));
    cases.row(id).clone()
}
