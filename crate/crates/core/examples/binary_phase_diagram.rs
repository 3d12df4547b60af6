// Closed-form phases of the type-enumeration bound for a binary symmetric source.

use swexp::tce_binary::{self, Region};
use swexp::{gallager, JointSource};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let p = 0.1;
    let s_grid: Vec<f64> = (0..=40).map(|i| 0.2 * i as f64).collect();
    let r_grid: Vec<f64> = (0..=40).map(|i| std::f64::consts::LN_2 * i as f64 / 40.0).collect();
    let diagram = tce_binary::phase_diagram(p, &s_grid, &r_grid)?;
    for region in Region::ALL {
        let count = diagram.points.iter().filter(|pt| pt.region == region).count();
        println!("region {region} ({:?}): {count} grid points", region.phase());
    }
    let gap = diagram.continuity.iter().map(|c| c.gap()).fold(0.0, f64::max);
    println!("largest jump across a region boundary: {gap:.3e}");

    let src = JointSource::bss(p)?;
    for &t in &[-0.1, 0.0, 0.1] {
        let gf = gallager::e1(&src, 0.5, t);
        let tce = tce_binary::e1_prime_binary(p, 0.5, t)?;
        println!("R = 0.5, T = {t}: E1 = {:.6}, type-enumeration E1 = {:.6}", gf.value, tce.value);
    }

    let mut script = Vec::new();
    diagram.write_points_csv(&mut script)?;
    println!("phase.csv is {} bytes", script.len());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
