//! The `eval` subcommand: score an estimated decomposition against ground
//! truth and print one metrics row.

use videorain::metrics;

use crate::video::load_video;
use crate::EvalArgs;

pub fn run(args: EvalArgs) -> anyhow::Result<()> {
    let estimate = load_video(&args.estimate)?;
    let truth = load_video(&args.truth)?;
    let rain = match (&args.rain_estimate, &args.rain_truth) {
        (Some(est), Some(tru)) => Some((load_video(est)?, load_video(tru)?)),
        _ => None,
    };
    let report = metrics::evaluate(
        &estimate,
        &truth,
        rain.as_ref().map(|(est, tru)| (est, tru)),
    )?;

    println!("psnr_b,ssim_b,ssim_r,res_b");
    println!(
        "{},{:.6},{},{:.6}",
        format_psnr(report.psnr_b),
        report.ssim_b,
        report.ssim_r.map(|v| format!("{v:.6}")).unwrap_or_default(),
        report.res_b
    );
    Ok(())
}

fn format_psnr(value: f64) -> String {
    if value.is_infinite() {
        "inf".to_string()
    } else {
        format!("{value:.6}")
    }
}
