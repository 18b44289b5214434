//! Classify convex and non-convex shapes with the disk-response net and
//! check that the decision survives a ×2 rescale.

use spatial_bench::geometry::Point;
use spatial_bench::kernelnet::ConvexityNet;
use spatial_bench::raster::rasterize_scene;
use spatial_bench::tasks::{gen_convexity, render_entry, Split, Task, TaskConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = ConvexityNet::default();
    println!(
        "disk radius {}, reference radius {}, delta {}",
        net.radius, net.inner_radius, net.delta
    );

    let mut cfg = TaskConfig::new(Task::Convexity, 5);
    cfg.count_per_class = 1;
    cfg.test_count_per_class = 150;
    let m = gen_convexity(&cfg)?;

    let (mut correct, mut stable, mut total) = (0, 0, 0);
    for e in m.split(Split::Test) {
        let img = render_entry(e)?;
        let pred = net.classify(&img)?;
        let mut big = e.scene.clone();
        big.objects[0].shape = big.objects[0].shape.scaled(2.0, Point::default());
        let pred2 = net.classify(&rasterize_scene(&big, 2 * e.canvas[0], 2 * e.canvas[1])?)?;
        if total < 4 {
            println!(
                "{}: {:?}, boundary max {:.3}, predicted {pred}, label {}",
                e.id,
                e.shape_kind,
                net.boundary_max(&img)?,
                e.label
            );
        }
        correct += (pred == e.label) as usize;
        stable += (pred == pred2) as usize;
        total += 1;
    }
    println!("accuracy {correct}/{total}, same label at x2 scale {stable}/{total}");
    Ok(())
}
