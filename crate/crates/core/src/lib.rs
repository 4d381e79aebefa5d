pub mod linalg;
pub mod sdp;
pub mod quantum;
pub mod jm;
pub mod constructions;
pub mod spectra;
pub mod regions;
pub mod selftest;
