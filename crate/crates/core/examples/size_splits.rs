//! Print the train and test size ranges of every split policy.

use spatial_bench::tasks::{make_size_splits, SplitPolicy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = (20.0, 50.0);
    println!("base range [{}, {}] px", base.0, base.1);
    for policy in SplitPolicy::ALL {
        let s = make_size_splits(base, policy)?;
        println!(
            "{:<20} train {:<24} test {:<24} disjoint: {}",
            policy.as_str(),
            s.train.to_string(),
            s.test.to_string(),
            !s.train.overlaps(&s.test)
        );
    }
    Ok(())
}
