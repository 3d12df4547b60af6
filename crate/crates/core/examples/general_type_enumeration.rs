// Type-enumeration bound for a ternary source read from JSON.

use swexp::{gallager, tce_general, Argmax, JointSource};

const SOURCE: &str = r#"{
  "alphabet_x": ["a", "b", "c"],
  "alphabet_y": ["0", "1"],
  "pmf": [[0.40, 0.05], [0.05, 0.30], [0.05, 0.15]]
}"#;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let src = JointSource::from_json_str(SOURCE)?;
    for &(rate, t) in &[(0.9, 0.0), (0.9, 0.1), (1.0, -0.1)] {
        let gf = gallager::e1(&src, rate, t);
        let tce = tce_general::e1_prime_general(&src, rate, t)?;
        println!("R = {rate}, T = {t}: E1 = {:.6}, type-enumeration E1 = {:.6}", gf.value, tce.value);
        if let Argmax::General { s, minimizers } = &tce.argmax {
            for m in minimizers {
                println!("  s = {s:.4}, minimizing P'(y) = {:?}", m.py_prime);
            }
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
