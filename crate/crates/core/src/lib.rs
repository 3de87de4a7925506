pub mod polyalg;
pub mod netpoly;
pub mod dynamics;
pub mod jetflow;
pub mod eventmap;
pub mod uncert;
pub mod harness;
