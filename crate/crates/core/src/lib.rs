// SPDX-License-Identifier: Apache-2.0
//! Transistor-level simulation of conventional and series-stacked 6T SRAM
//! columns.
pub mod bench;
pub mod builders;
pub mod cli;
pub mod device;
pub mod export;
pub mod linalg;
pub mod netlist;
pub mod power;
pub mod sim;
