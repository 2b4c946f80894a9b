//! Convolve a synthetic image with an edge kernel using the three RNN
//! receptive fields and write the results as PGM files.

use ndarray::{array, Array2};
use rnnkit::conv::{
    conv2d, conv_cluster, conv_single, conv_twin, inverted_relu_conv, prepare_kernel, ActivationParams, Image, Scheme,
};
use rnnkit::io::image::write_pgm;

fn main() -> rnnkit::Result<()> {
    let n = 48;
    let c = n as f64 / 2.0;
    let pixels = Array2::from_shape_fn((n, n), |(i, j)| {
        let r = ((i as f64 - c).powi(2) + (j as f64 - c).powi(2)).sqrt();
        if r < n as f64 / 3.0 {
            0.9
        } else {
            0.1 + 0.3 * j as f64 / n as f64
        }
    });
    let image = Image::new(pixels)?;
    let sobel = array![[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
    let dir = std::env::temp_dir().join("rnnkit-conv");
    std::fs::create_dir_all(&dir)?;

    let single = prepare_kernel(sobel.view(), Scheme::Single)?;
    let out = conv_single(&image, &single, ActivationParams::default(), false)?;
    let clamped = out.clamped.iter().filter(|&&b| b).count();
    write_pgm(&dir.join("single.pgm"), &out.output)?;
    println!("single: {clamped} of {} outputs clamped", out.output.len());

    let twin = prepare_kernel(sobel.view(), Scheme::Twin)?;
    let out = conv_twin(&image, &twin)?;
    let gap = (&out.output - &out.constructive).mapv(f64::abs).fold(0.0f64, |a, &b| a.max(b));
    write_pgm(&dir.join("twin.pgm"), &out.output)?;
    println!("twin: closed vs constructive form max gap {gap:.1e}");

    let cluster = prepare_kernel(sobel.view(), Scheme::Cluster)?;
    let out = conv_cluster(&image, &cluster)?;
    let relu = inverted_relu_conv(&image, &cluster)?;
    let err = (&out.output - &relu).mapv(f64::abs).fold(0.0f64, |a, &b| a.max(b));
    write_pgm(&dir.join("cluster.pgm"), &out.output)?;
    println!("cluster: max |O - (1 - relu(conv))| = {err:.2e}");

    let plain = conv2d(image.pixels(), sobel.view())?;
    write_pgm(&dir.join("linear.pgm"), &plain)?;
    println!("wrote single, twin, cluster and linear responses to {}", dir.display());
    Ok(())
}
