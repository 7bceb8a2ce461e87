//! Batch compiler for a MATLAB-like vector DSL targeting a distributed
//! two-level-control CGRA fabric (a DRRA compute array coupled with a DiMArch
//! scratchpad array), plus a cycle-accurate behavioral simulator and a
//! sequential reference interpreter used as the correctness oracle.
//!
//! The pipeline lowers source through three graph IRs:
//!
//! 1. [`ir1`] — control address dataflow graph: address generation is made
//!    explicit as affine address functions, data hazards are recorded and
//!    classified as strong/weak/fake.
//! 2. [`ir2`] — instruction dependency graph: resource-centric fabric
//!    instructions (DPU/REFI/SRAM/RACCU/SWB/ROUTE/LOOP/BRANCH) with
//!    temporal-relation edges.
//! 3. [`ir3`] — hierarchical phase graph: instructions decomposed into
//!    fetch/activate/end phases with `[m,n]` timing edges and resource
//!    occupation tables, scheduled leaf-by-leaf and synchronized by WAIT
//!    insertion.
//!
//! The crate is a library plus a `drrac` binary with `compile`, `simulate`
//! and `verify` subcommands.

pub mod affine;
pub mod cli;
pub mod diag;
pub mod expr;
pub mod fabric;
pub mod frontend;
pub mod interp;
pub mod ir1;
pub mod ir2;
pub mod ir3;
pub mod isa;
pub mod par;
pub mod pipeline;
pub mod sim;

pub use fabric::{CellCoord, FabricSpec, Storage};
