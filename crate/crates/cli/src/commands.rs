use std::fs;
use std::path::{Path, PathBuf};

use evsynth_core::eval::{intensity_histogram, stream_distance};
use evsynth_core::evsnet::{self, read_checkpoint};
use evsynth_core::io::{read_events, read_fseq, write_events, write_fseq};
use evsynth_core::luminance::log_diff_sequence;
use evsynth_core::scenegen::{add_render_noise, gen_scene};
use evsynth_core::train::{make_dataset, train};
use evsynth_core::{dense_to_sparse, events, refsim, sparse_to_dense, EventList};
use log::info;

use crate::config::RunConfig;
use crate::{CliError, Command};

pub fn dispatch(cmd: &Command, cfg: &RunConfig) -> Result<(), CliError> {
    info!("resolved config:\n{cfg}");
    match cmd {
        Command::Gen { out, noisy, .. } => cmd_gen(out, *noisy, cfg),
        Command::Simulate { input, out, .. } => cmd_simulate(input, out, cfg),
        Command::Train { out, .. } => cmd_train(out, cfg),
        Command::Infer { input, checkpoint, out, .. } => cmd_infer(input, checkpoint, out, cfg),
        Command::Eval { a, b, out, .. } => cmd_eval(a, b, out, cfg),
        Command::Hist { input, out, .. } => cmd_hist(input, out, cfg),
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    Ok(())
}

/// Directory that receives `run.cfg` for a file output.
fn parent_of(file: &Path) -> PathBuf {
    match file.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn echo_config(dir: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    ensure_dir(dir)?;
    fs::write(dir.join("run.cfg"), cfg.to_string())?;
    Ok(())
}

pub fn cmd_gen(out: &Path, noisy: bool, cfg: &RunConfig) -> Result<(), CliError> {
    ensure_dir(out)?;
    let clean = gen_scene(&cfg.scene()?)?;
    write_fseq(out.join("clean.fseq"), &clean)?;
    if noisy {
        write_fseq(out.join("noisy.fseq"), &add_render_noise(&clean, &cfg.noise()?)?)?;
    }
    echo_config(out, cfg)
}

pub fn cmd_simulate(input: &Path, out: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    let frames = read_fseq(input)?;
    let x = log_diff_sequence(&frames, &cfg.luminance()?)?;
    let s = refsim::simulate(&x, &cfg.refsim()?)?;
    let e = dense_to_sparse(&s);
    info!("simulate: {} events over {}x{}x{}", e.len(), s.width(), s.height(), s.ticks());
    echo_config(&parent_of(out), cfg)?;
    write_events(out, &e)?;
    Ok(())
}

pub fn cmd_train(out: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    ensure_dir(out)?;
    echo_config(out, cfg)?;
    let data = make_dataset(&cfg.train_scenes()?, &cfg.noise()?, &cfg.refsim()?, &cfg.luminance()?)?;
    let mut t_cfg = cfg.train()?;
    t_cfg.checkpoint = Some(out.join("model.evsn"));
    let (_, history) = train(&data, &cfg.net()?, &t_cfg)?;
    history.write_csv(fs::File::create(out.join("history.csv"))?)?;
    if let Some(last) = history.epochs.last() {
        info!("train: final train loss {:.6}, holdout {:?}", last.train_loss, last.holdout_loss);
    }
    Ok(())
}

pub fn cmd_infer(input: &Path, checkpoint: &Path, out: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    let params = read_checkpoint(checkpoint)?;
    let frames = read_fseq(input)?;
    let x = log_diff_sequence(&frames, &cfg.luminance()?)?;
    let s = evsnet::infer_stream(&x, &params, cfg.infer_init()?)?;
    let e = dense_to_sparse(&s);
    info!("infer: {} events", e.len());
    echo_config(&parent_of(out), cfg)?;
    write_events(out, &e)?;
    Ok(())
}

fn ticks_needed(e: &EventList, fps: f64) -> usize {
    e.events().iter().map(|ev| events::micros_to_tick(ev.t_us, fps) as usize + 1).max().unwrap_or(1)
}

pub fn cmd_eval(a: &Path, b: &Path, out: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    let dims = cfg.event_dims()?;
    let (ea, eb) = (read_events(a, dims)?, read_events(b, dims)?);
    let fps: f64 = cfg.get("eval.fps")?;
    let ticks = match cfg.duration("eval.duration")? {
        Some(d) => (d * fps).round() as usize,
        None => ticks_needed(&ea, fps).max(ticks_needed(&eb, fps)),
    };
    let report = stream_distance(&sparse_to_dense(&ea, fps, ticks)?, &sparse_to_dense(&eb, fps, ticks)?)?;
    ensure_dir(out)?;
    report.write_csv(fs::File::create(out.join("distance.csv"))?)?;
    let (bin_fps, buckets): (f64, usize) = (cfg.get("hist.bin_fps")?, cfg.get("hist.buckets")?);
    let duration = Some(ticks as f64 / fps);
    for (name, e) in [("hist_a.csv", &ea), ("hist_b.csv", &eb)] {
        intensity_histogram(e, bin_fps, buckets, duration)?.write_csv(fs::File::create(out.join(name))?)?;
    }
    info!("eval: mean emd {:.6}, count ratio {:.4}", report.mean_emd, report.count_ratio);
    echo_config(out, cfg)
}

pub fn cmd_hist(input: &Path, out: &Path, cfg: &RunConfig) -> Result<(), CliError> {
    let e = read_events(input, cfg.event_dims()?)?;
    let h = intensity_histogram(&e, cfg.get("hist.bin_fps")?, cfg.get("hist.buckets")?, cfg.duration("hist.duration")?)?;
    echo_config(&parent_of(out), cfg)?;
    h.write_csv(fs::File::create(out)?)?;
    Ok(())
}
