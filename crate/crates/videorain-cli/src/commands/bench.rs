//! The `bench` subcommand: run the {45, 60} degree x {light, heavy} grid on
//! clean clips and report rainy-baseline vs derained quality.

use std::time::Instant;

use videorain::solver::SolverConfig;
use videorain::synth::{self, RainSynthConfig};
use videorain::{metrics, VideoTensor};

use crate::{BenchArgs, Density};

const GRID: [(f64, Density); 4] = [
    (45.0, Density::Light),
    (45.0, Density::Heavy),
    (60.0, Density::Light),
    (60.0, Density::Heavy),
];

pub fn run(args: BenchArgs) -> anyhow::Result<()> {
    let mut improvements: Vec<(String, f64)> = Vec::new();
    for input in &args.input {
        let clean = crate::video::load_video(input)?;
        let (m, n, t) = clean.shape();
        println!("clip={input} ({m}x{n}x{t})");
        println!(
            "cell,angle_deg,density,theta_est,rainy_psnr,rainy_ssim,\
             derained_psnr,derained_ssim,ssim_r,res_b,seconds"
        );
        for (angle, density) in GRID {
            let row = run_cell(&clean, angle, density, &args)?;
            println!(
                "{},{angle},{density},{:.2},{},{:.4},{},{:.4},{:.4},{:.3},{:.2}",
                cell_name(angle, density),
                row.theta_est,
                format_psnr(row.rainy_psnr),
                row.rainy_ssim,
                format_psnr(row.derained_psnr),
                row.derained_ssim,
                row.ssim_r,
                row.res_b,
                row.seconds
            );
            improvements.push((
                format!("{input}:{}", cell_name(angle, density)),
                row.derained_psnr - row.rainy_psnr,
            ));
        }
        println!();
    }

    println!("psnr_improvement_db");
    for (label, delta) in &improvements {
        println!("{label},{delta:+.3}");
    }
    let mean = improvements.iter().map(|(_, d)| d).sum::<f64>() / improvements.len() as f64;
    println!("mean,{mean:+.3}");
    Ok(())
}

struct CellRow {
    theta_est: f64,
    rainy_psnr: f64,
    rainy_ssim: f64,
    derained_psnr: f64,
    derained_ssim: f64,
    ssim_r: f64,
    res_b: f64,
    seconds: f64,
}

fn run_cell(
    clean: &VideoTensor,
    angle: f64,
    density: Density,
    args: &BenchArgs,
) -> anyhow::Result<CellRow> {
    let synth_config = match density {
        Density::Light => RainSynthConfig::light(angle, args.seed),
        Density::Heavy => RainSynthConfig::heavy(angle, args.seed),
    };
    let (observed, rain_true) = synth::synthesize(clean, &synth_config)?;

    let mut config = match density {
        Density::Light => SolverConfig::light_rain(),
        Density::Heavy => SolverConfig::heavy_rain(),
    };
    if let Some(tol) = args.tol {
        config.tol = tol;
    }
    if let Some(max_iters) = args.max_iters {
        config.max_outer = max_iters;
    }

    let started = Instant::now();
    let result = videorain::solver::derain(&observed, &config)?;
    let seconds = started.elapsed().as_secs_f64();

    let report =
        metrics::evaluate(&result.background, clean, Some((&result.rain, &rain_true)))?;
    Ok(CellRow {
        theta_est: result.theta_used.degrees(),
        rainy_psnr: metrics::psnr(&observed, clean)?,
        rainy_ssim: metrics::ssim(&observed, clean)?,
        derained_psnr: report.psnr_b,
        derained_ssim: report.ssim_b,
        ssim_r: report.ssim_r.expect("rain pair was supplied"),
        res_b: report.res_b,
        seconds,
    })
}

fn cell_name(angle: f64, density: Density) -> String {
    format!("{angle:.0}deg-{density}")
}

fn format_psnr(value: f64) -> String {
    if value.is_infinite() {
        "inf".to_string()
    } else {
        format!("{value:.3}")
    }
}
