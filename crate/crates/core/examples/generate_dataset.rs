//! Generate a small front/back dataset and write it to disk.
//!
//! `cargo run --example generate_dataset -- [OUT_DIR]`

use std::path::PathBuf;

use spatial_bench::tasks::{generate, write_dataset, ColorMode, Split, Task, TaskConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("spatial-bench-front-back"));

    let mut cfg = TaskConfig::new(Task::FrontBack, 7);
    cfg.color_mode = ColorMode::ThreeColor;
    cfg.count_per_class = 50;
    cfg.test_count_per_class = 20;

    let manifest = generate(&cfg, 0)?;
    write_dataset(&manifest, &out, true, 0)?;

    for split in [Split::Train, Split::Test] {
        println!(
            "{split}: {} label 0, {} label 1",
            manifest.count(split, 0),
            manifest.count(split, 1)
        );
    }
    let first = &manifest.entries[0];
    println!("first item {} -> {} (label {}, {})", first.id, first.path, first.label, first.label_meaning);
    println!("wrote {}", out.display());
    Ok(())
}
