use muskat_core::experiments::*;
use muskat_core::stepper::StepperConfig;
fn main() {
    let tau = 2.0 * std::f64::consts::PI;
    let stepper = StepperConfig { t_end: 2.0, rtol: 1e-5, ..Default::default() };
    for (name, sigma) in [("g22", 0.22_f64), ("g30", 0.30), ("g40", 0.40)] {
        let s = Scenario {
            name: name.into(),
            initial_data: InitialData::Gaussian { amp: 0.1, sigma, center: (tau/2.0, tau/2.0) },
            grid: muskat_core::GridSpec::square(128, tau).unwrap(),
            alpha: 0.25,
            stepper,
        };
        let art = run_scenario(&s, &ScenarioRunOptions::default()).unwrap();
        let margins: Vec<f64> = art.records.iter().map(|r| r.rec.support_margin).collect();
        println!("{name} sigma={sigma}: margins t0={:.3} mid={:.3} end={:.3}, gated_records={}",
            margins[0], margins[margins.len()/2], margins[margins.len()-1],
            margins.iter().filter(|m| **m >= 0.25).count());
    }
}
