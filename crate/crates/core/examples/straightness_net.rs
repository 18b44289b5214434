//! Calibrate the corner bank on a training split and classify the test split.

use rayon::prelude::*;
use spatial_bench::kernelnet::{calibrate_threshold, corner_bank, straightness_response, threshold_relu, BROKEN, STRAIGHT};
use spatial_bench::tasks::{gen_straightness, render_entry, Split, Task, TaskConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bank = corner_bank();
    println!("{} kernels, {} weights", bank.kernels.len(), bank.parameter_count());
    let k = &bank.kernels[0];
    println!("{}:", k.id);
    for row in k.cells {
        println!("  {row:?}");
    }

    let mut cfg = TaskConfig::new(Task::Straightness, 11);
    cfg.count_per_class = 200;
    cfg.test_count_per_class = 200;
    let m = gen_straightness(&cfg)?;

    let responses = |split: Split| -> Vec<(u8, u8)> {
        let items: Vec<_> = m.split(split).collect();
        items
            .par_iter()
            .map(|e| {
                let img = render_entry(e).expect("stored scenes render");
                (straightness_response(&img, &bank).expect("one object"), e.label)
            })
            .collect()
    };

    let cal = calibrate_threshold(&responses(Split::Train));
    println!("calibrated threshold {} ({}/{} train items)", cal.threshold, cal.correct, cal.total);
    for (t, c) in &cal.sweep {
        println!("  cutoff {t}: {c}");
    }

    let test = responses(Split::Test);
    let correct = test
        .iter()
        .filter(|&&(r, label)| {
            let pred = if threshold_relu(r, cal.threshold) > 0 { BROKEN } else { STRAIGHT };
            pred == label
        })
        .count();
    println!("test accuracy {correct}/{}", test.len());
    Ok(())
}
