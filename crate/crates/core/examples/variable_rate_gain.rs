// Letter-dependent binning rates on a source with a skewed X-marginal.

use swexp::{gallager, variable_rate, JointSource};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let src = JointSource::from_pmf(vec![vec![0.56, 0.14], vec![0.06, 0.24]])?;
    let rate = 0.6;
    println!("P(x) = {:?}", src.marginal_x());
    for &s in &[0.25, 0.5, 0.75] {
        let w = variable_rate::optimal_rates(&src, s, rate)?;
        println!(
            "s = {s}: rates = {:?}, interior = {}, D(P||Q) = {:.6}",
            w.rates,
            w.interior,
            variable_rate::rate_improvement(&src, s)
        );
    }
    for &t in &[0.0, 0.05] {
        let fixed = gallager::e1(&src, rate, t);
        let var = variable_rate::e1_tilde(&src, rate, t)?;
        println!("T = {t}: E1 = {:.6}, variable-rate E1 = {:.6}", fixed.value, var.value);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
