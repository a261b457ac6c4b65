mod args;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use erysegm_core::pipeline::{
    artifact, run_align, run_histogram, run_pipeline, run_segment, run_synth, PipelineError,
};

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("erysegm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Pipeline(args) => {
            let config = args.resolve()?;
            let report = run_pipeline(&config)?;
            let a = &report.alignment;
            let s = &report.segmentation.threshold;
            println!("inliers       {}/{}", a.inlier_count, a.match_count);
            println!("mse           {:.3} -> {:.3}", a.mse_pre, a.mse_post);
            println!("tau           {:.4} (mu {:.4}, sigma {:.4}, k {})", s.tau, s.mu, s.sigma, s.k);
            println!("mask_pixels   {} of {} ({:.4})", s.mask_pixels, s.domain_pixels, s.mask_area_fraction);
            println!("report        {}", config.out_dir.join(artifact::REPORT).display());
        }
        Command::Align(args) => {
            let config = args.resolve()?;
            let a = run_align(&config)?;
            println!("inliers       {}/{}", a.inlier_count, a.match_count);
            println!("rmse          {:.4}", a.reprojection_rmse);
            println!("mse           {:.3} -> {:.3}", a.mse_pre, a.mse_post);
            println!("aligned       {}", config.out_dir.join(artifact::ALIGNED).display());
        }
        Command::Segment(args) => {
            let config = args.resolve()?;
            let s = run_segment(&config)?.threshold;
            println!("tau           {:.4}", s.tau);
            println!("mask_pixels   {} of {}", s.mask_pixels, s.domain_pixels);
        }
        Command::Synth(args) => {
            let config = args.resolve()?;
            let out = run_synth(&config)?;
            println!("reference     {}", out.reference.display());
            println!("labelmask     {}", out.labelmask.display());
            println!("class_map     {}", out.class_map.display());
        }
        Command::Histogram(args) => {
            let (delta_map, config) = args.resolve()?;
            let s = run_histogram(&delta_map, &config.segment_params(), &config.out_dir)?;
            println!("tau           {:.4}", s.tau);
            println!("mask_pixels   {} of {}", s.mask_pixels, s.domain_pixels);
        }
    }
    Ok(())
}
