//! Run both nets on their test splits, score the predictions and print the
//! report next to the published reference numbers.

use spatial_bench::eval::{published_reference, render_report, score, PredictionSet, ReportFormat, PUBLISHED_CLASSIFIERS};
use spatial_bench::kernelnet::{classify_straightness, corner_bank, ConvexityNet};
use spatial_bench::tasks::{generate, render_entry, ColorMode, Split, SplitPolicy, Task, TaskConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bank = corner_bank();
    let net = ConvexityNet::default();
    let mut report = None;

    for task in [Task::Convexity, Task::Straightness] {
        let mut cfg = TaskConfig::new(task, 3);
        cfg.policy = SplitPolicy::SizeExtrapolation;
        cfg.count_per_class = 1;
        cfg.test_count_per_class = 100;
        let m = generate(&cfg, 0)?;

        let name = if task == Task::Convexity { "convexity-net" } else { "straightness-net" };
        let mut preds = PredictionSet::new(name);
        for e in m.split(Split::Test) {
            let img = render_entry(e)?;
            let label = match task {
                Task::Convexity => net.classify(&img)?,
                _ => classify_straightness(&img, &bank)?,
            };
            preds.entries.push((e.id.clone(), label));
        }
        // the CSV interface shared with external classifiers
        let csv = preds.to_csv();
        let preds = PredictionSet::from_csv(csv.as_bytes(), name)?;

        let r = score(&m, &preds)?;
        match &mut report {
            None => report = Some(r),
            Some(all) => all.merge(&r),
        }

        let refs: Vec<String> = PUBLISHED_CLASSIFIERS
            .iter()
            .map(|c| match published_reference(task, ColorMode::TwoColor, cfg.policy, c) {
                Some(p) => format!("{c} {}.{}%", p / 10, p % 10),
                None => format!("{c} n/a"),
            })
            .collect();
        println!("{task} published: {}", refs.join(", "));
    }

    println!();
    print!("{}", render_report(&report.unwrap_or_default(), ReportFormat::Markdown));
    Ok(())
}
