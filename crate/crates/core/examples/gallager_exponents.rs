// Fixed-rate erasure/list exponents for a binary symmetric source.

use swexp::gallager;
use swexp::JointSource;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let src = JointSource::bss(0.1)?;
    println!("H(X|Y) = {:.6} nats", src.conditional_entropy());
    println!("{:>6} {:>6} {:>10} {:>10} {:>6} {:>6}", "R", "T", "E1", "E2", "rho", "s");
    for &rate in &[0.4, 0.5, 0.6] {
        for &t in &[-0.05, 0.0, 0.05] {
            let e1 = gallager::e1(&src, rate, t);
            let e2 = gallager::e2(&src, rate, t);
            println!(
                "{rate:>6.2} {t:>6.2} {:>10.6} {:>10.6} {:>6.3} {:>6.3}",
                e1.value,
                e2.value,
                e1.rho().unwrap_or(f64::NAN),
                e1.s()
            );
        }
    }
    for &t in &[0.0, 0.05] {
        println!("R_min(T={t}) = {:.6}", gallager::r_min(&src, t));
    }
    println!("T_max(R=0.5) = {:.6}", gallager::t_max(&src, 0.5));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
