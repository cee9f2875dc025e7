use muskat_core::experiments::*;
use muskat_core::stepper::StepperConfig;
fn main() {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(64);
    let alpha: f64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(0.0);
    let stepper = StepperConfig { t_end: 2.0, rtol: 1e-5, ..Default::default() };
    let t0 = std::time::Instant::now();
    let rep = theorem_suite(alpha, n, stepper).unwrap();
    for c in &rep.checks {
        match &c.conclusion {
            Some(r) => println!("[{}] {} / {}: {} ({})", if r.passed {"PASS"} else {"FAIL"}, c.name, c.scenario, r.passed, r.details),
            None => println!("[GATE] {} / {}: hypothesis not met", c.name, c.scenario),
        }
    }
    println!("all_passed = {}, elapsed {:?}", rep.all_passed(), t0.elapsed());
}
