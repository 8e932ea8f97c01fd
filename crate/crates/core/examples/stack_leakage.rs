// SPDX-License-Identifier: Apache-2.0
//! Subthreshold leakage of series stacks of off transistors.

use stacksim::device::{stack_leakage, MosParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let card = MosParams::default_nmos();
    let single = stack_leakage(&card, 1, 1.2)?.leakage;
    for n in 1..=4 {
        let s = stack_leakage(&card, n, 1.2)?;
        println!(
            "{n} device(s): {:.4e} A  ({:.3} of single)  internal nodes {:?}",
            s.leakage,
            s.leakage / single,
            s.mid_nodes
        );
    }
    Ok(())
}
