//! Text version of the intensity / interaction-time regime diagram.

use dressed_ion::model::{regime_classify, AtomicSystem, Region};

fn main() -> dressed_ion::Result<()> {
    let atom = AtomicSystem::helium();
    let durations = [1.0, 10.0, 30.0, 73.0, 300.0, 1e3, 1e4, 1e5, 1e6];
    print!("{:>10}", "I \\ dt");
    for d in durations {
        print!("{d:>8.0e}");
    }
    println!();
    for exp in [10.0, 11.0, 12.0, 13.0, 14.0, 15.0, 16.0] {
        let i = 10f64.powf(exp);
        print!("{i:>10.0e}");
        for d in durations {
            let r = regime_classify(i, d, &atom)?;
            let code = match r.region {
                Region::RegionI => "I",
                Region::RegionII => "II",
                Region::RegionIII => "III",
                Region::RegionIV => "IV",
            };
            let mark = if r.entangling { "*" } else if r.boundary { "?" } else { "" };
            print!("{:>8}", format!("{code}{mark}"));
        }
        println!();
    }
    println!("* entangling, ? boundary (dressed for less than two Rabi periods)");
    for i in [1.25e13, 3.35e12, 6.25e11] {
        let r = regime_classify(i, 73.0, &atom)?;
        println!("{i:.3e} W/cm2, 73 fs: T_R = {:.1} fs, entangling = {}, boundary = {}", r.rabi_period, r.entangling, r.boundary);
    }
    Ok(())
}
