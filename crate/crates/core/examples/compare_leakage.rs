// SPDX-License-Identifier: Apache-2.0
//! Hold-mode leakage per stored bit: two conventional cells against one
//! stacked pair.

use stacksim::builders::CellConfig;
use stacksim::power::compare_leakage;
use stacksim::sim::SolverConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let hold = 1e-6;
    let solver = SolverConfig::default().with_timing(1e-9, hold);
    let report = compare_leakage(&CellConfig::default(), 1, &solver, hold)?;
    for a in [&report.conventional, &report.proposed] {
        println!("{}:", a.architecture.name());
        for s in &a.supplies {
            println!("  {} at {} V: {:.4e} A, {:.4e} W", s.source, s.supply_v, s.mean_current_a, s.power_w);
        }
        println!("  total {:.4e} W, {:.4e} W per bit", a.leakage_power_w, a.leakage_per_bit_w);
    }
    println!("ratio {:.4}, savings {:.2}%", report.ratio, report.savings_percent);
    Ok(())
}
