mod config;

use std::process::ExitCode;

use clap::Parser;
use seqlam_core::adaptivity::{adaptive_loop, AdaptiveConfig, StepRecord};
use seqlam_core::export::{write_fit_report, StudyWriter};
use seqlam_core::optimizer::OptimizerConfig;
use seqlam_core::scenario::{builtin_scenario, ScenarioOverrides, SCENARIO_NAMES};
use seqlam_core::study::uniform_study;

use config::{Cli, Mode, RunConfig};

fn print_row(r: &StepRecord) {
    println!(
        "{:>4} {:>8} {:>8} {:>20.12e} {:>12.4e} {:>10.6} {:>5} {:>9.1}",
        r.step,
        r.cells,
        r.dofs,
        r.compliance,
        r.estimate,
        r.volume,
        r.iterations,
        r.wall.as_secs_f64() * 1e3
    );
}

fn run(config: &RunConfig) -> Result<(), Box<dyn std::error::Error>> {
    if !SCENARIO_NAMES.contains(&config.scenario.as_str()) {
        return Err(format!("unknown scenario `{}` (expected one of {})", config.scenario, SCENARIO_NAMES.join(", ")).into());
    }
    let overrides = ScenarioOverrides {
        lame_lambda: config.lame_lambda,
        lame_mu: config.lame_mu,
        load: config.load,
        volume_fraction: config.volume,
    };
    let scenario = builtin_scenario(&config.scenario, &overrides)?;
    let prefix = match config.mode {
        Mode::Uniform => format!("{}_uniform", scenario.name),
        Mode::Adaptive => format!("{}_adaptive", scenario.name),
    };
    let mut writer = StudyWriter::new(&config.out_dir, &prefix, scenario.material)?;
    println!("{:>4} {:>8} {:>8} {:>20} {:>12} {:>10} {:>5} {:>9}", "step", "elements", "dofs", "J_h", "estimate", "volume", "iter", "wall_ms");
    let mut observe = |out: &seqlam_core::adaptivity::StepOutput| {
        print_row(out.record);
        writer.observe(out)
    };
    match config.mode {
        Mode::Uniform => {
            let study = uniform_study(&scenario, &config.levels.levels(), &OptimizerConfig::new(scenario.target_volume()), &mut observe)?;
            writer.finish(study.fit.as_ref())?;
            if let Some(fit) = &study.fit {
                println!();
                write_fit_report(&mut std::io::stdout().lock(), fit)?;
            }
        }
        Mode::Adaptive => {
            let mut adaptive = AdaptiveConfig::new(&scenario, config.steps);
            adaptive.fraction = config.fraction;
            adaptive_loop(&scenario, config.initial_level, &adaptive, &mut observe)?;
            writer.finish(None)?;
        }
    }
    println!("\nwrote {} files to {}", writer.files().len(), config.out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match RunConfig::resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
