//! The few-cycle pulse and the rotation angle β(t_i).
//!
//! Run with: cargo run --example pulse_beta -- [e0] [omega]
//!
//! Prints the field, the magnetic field, β and the simple-man drift
//! `−q∫E dt` across the pulse, with the Keldysh parameter for hydrogen.

use strongfield::LaserPulse;

fn main() -> strongfield::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<f64>().expect("number"));
    let e0 = args.next().unwrap_or(0.095);
    let omega = args.next().unwrap_or(0.057);
    let pulse = LaserPulse::new(e0, omega)?;
    let (lo, hi) = pulse.peak_half_cycle();
    println!("E0 = {e0}  ω = {omega}  duration = {:.3}  t_peak = {:.3}", pulse.duration(), pulse.t_peak());
    println!("peak half-cycle [{lo:.3}, {hi:.3}]  Keldysh γ (I_p = 0.5) = {:.3}", pulse.keldysh(0.5));
    println!("{:>9} {:>12} {:>12} {:>12} {:>12}", "t", "E", "B_y", "β", "drift");
    let n = 24;
    for k in 0..=n {
        let t = pulse.t_end() * k as f64 / n as f64;
        println!(
            "{t:9.3} {:+12.5e} {:+12.5e} {:+12.5e} {:+12.5e}",
            pulse.electric_field(t),
            pulse.magnetic_field(t),
            pulse.beta(t),
            pulse.field_drift(t)
        );
    }
    Ok(())
}
