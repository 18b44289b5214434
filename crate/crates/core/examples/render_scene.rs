//! Build a two-object scene by hand, rasterize it and inspect the occlusion.
//!
//! `cargo run --example render_scene -- [OUT.pgm]`

use std::f64::consts::PI;
use std::fs::File;
use std::io::BufWriter;

use spatial_bench::geometry::{gen_shape, pair_relation, Point, ShapeKind, ShapeParams, ShapeSpec};
use spatial_bench::imageio::write_pgm;
use spatial_bench::raster::{rasterize_scene, render_object_solo, Color, Scene, SceneObject};
use spatial_bench::rng::Rng;
use spatial_bench::tasks::{oracle_label, Task};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = ShapeParams::default();
    let mut rng = Rng::new(1);
    let square = gen_shape(
        &ShapeSpec {
            kind: ShapeKind::RegularPolygon,
            sides: 4,
            size: 40.0,
            rotation: PI / 4.0,
            center: Point::new(95.0, 112.0),
        },
        &params,
        &mut rng,
    )?;
    let triangle = gen_shape(
        &ShapeSpec {
            kind: ShapeKind::RegularPolygon,
            sides: 3,
            size: 35.0,
            rotation: 0.0,
            center: Point::new(130.0, 112.0),
        },
        &params,
        &mut rng,
    )?;

    let rel = pair_relation(&square, &triangle, 3.0);
    println!(
        "centroid dx {:.1}, disjoint {}, overlap {:.3} of the smaller",
        rel.centroid_dx, rel.disjoint, rel.overlap_fraction_of_smaller
    );

    let mut scene = Scene::empty(Task::FrontBack, Color::Black);
    scene.objects.push(SceneObject { shape: square, color: Color::White, z: 1 });
    scene.objects.push(SceneObject { shape: triangle, color: Color::Grey, z: 0 });
    scene.label = oracle_label(&scene)?;
    println!("label {}: {}", scene.label, Task::FrontBack.label_meaning());

    let img = rasterize_scene(&scene, 224, 224)?;
    for (i, o) in scene.objects.iter().enumerate() {
        let solo = render_object_solo(&scene, i, 224, 224)?;
        println!(
            "object {i} ({:?}): {} px alone, {} px visible",
            o.color,
            solo.count_level(o.color.level()),
            img.count_level(o.color.level())
        );
    }

    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| std::env::temp_dir().join("scene.pgm").display().to_string());
    write_pgm(&img, BufWriter::new(File::create(&path)?))?;
    println!("wrote {path}");
    Ok(())
}
