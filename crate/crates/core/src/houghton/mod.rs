//! Houghton groups: permutations of `m` disjoint rays that are eventually
//! translations on each ray.

pub mod h2;
pub mod hm;

pub use h2::{H2Element, H2Label, Houghton2};
pub use hm::{HmElement, HmLabel, HmWitness, HoughtonM};
