// Monte Carlo simulation of the threshold decoder, checked against exact
// probabilities and fitted to an exponent.

use swexp::simulator::{self, exact_oracle, empirical_exponent, RatePoint, SimConfig};
use swexp::{gallager, JointSource};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let src = JointSource::bss(0.1)?;

    let small = SimConfig::new(src.clone(), 4, 0.5, 0.0, 200_000, 7);
    let exact = exact_oracle(&small)?;
    let batch = simulator::run_trials(&small)?;
    println!("n = 4: simulated e1 = {:.4}, exact e1 = {:.4}", batch.e1_rate(), exact.e1);

    let mut points = Vec::new();
    simulator::write_csv_header(std::io::stdout())?;
    for n in [6, 8, 10, 12] {
        let cfg = SimConfig::new(src.clone(), n, 0.5, 0.0, 50_000, 11);
        let b = simulator::run_trials(&cfg)?;
        simulator::write_csv_row(std::io::stdout(), &cfg, &b)?;
        points.push(RatePoint { n, rate: b.e1_rate(), trials: Some(b.trials) });
    }
    let fit = empirical_exponent(&points)?;
    println!(
        "fitted slope {:.4} +/- {:.4}; E1 lower bound {:.4}",
        fit.slope,
        fit.ci_half_width,
        gallager::e1(&src, 0.5, 0.0).value
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
