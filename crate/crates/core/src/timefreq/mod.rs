//! Tiles and tri-tiles, wave packets, vectorized sizes and energies, the
//! greedy decrement algorithms and the model sum with its level bound.
//!
//! Everything here runs in double precision.

pub mod algorithms;
pub mod packets;
pub mod tiles;
pub mod vectorized;

pub use algorithms::*;
pub use packets::{make_wave_packet, packet_spectrum, PacketBank, WavePacket};
pub use tiles::{build_tritile_cover, sparse_split, GridCertificate, Tile, TileCollection, TriTile};
pub use vectorized::{strongly_disjoint, vectorize, VecMode, VectorizedSet};
