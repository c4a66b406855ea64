use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use cascade_infer::cascade_infer;
use eval_harness::{
    evaluate, noise_sweep, train_stack, write_noise_csv, write_sweep_csv, EvalReport, SweepCfg,
    TrainedStack, REFERENCE_DT500,
};
use event_core::{bin_events, read_events};
use models::{load_windows, train_ofpd, train_ofs, WindowSet};
use sim_cam::{read_manifest, write_dataset, DatasetManifest, Split};

use crate::config::{EvalGates, RunConfig};
use crate::overlay;

/// Copies the run config next to a command's outputs so every artifact
/// directory records how it was produced.
fn stash_config(cfg: &RunConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let dst = dir.join("config.ini");
    if let (Ok(a), Ok(b)) = (cfg.source.canonicalize(), dst.canonicalize()) {
        if a == b {
            return Ok(());
        }
    }
    fs::copy(&cfg.source, &dst)
        .with_context(|| format!("cannot copy config into {}", dir.display()))?;
    Ok(())
}

fn open_manifest(cfg: &RunConfig) -> Result<(DatasetManifest, PathBuf)> {
    let path = cfg.dataset_dir.join("manifest.ini");
    let manifest = read_manifest(&path).with_context(|| {
        format!(
            "no dataset manifest at {} — run `toffe gen` first",
            path.display()
        )
    })?;
    Ok((manifest, path))
}

fn load_split(
    cfg: &RunConfig,
    manifest: &DatasetManifest,
    path: &Path,
    split: Split,
    dt_us: u64,
) -> Result<WindowSet> {
    let stride = match split {
        Split::Train => cfg.windows.train_stride,
        Split::Test => cfg.windows.eval_stride,
    };
    Ok(load_windows(
        manifest,
        path,
        split,
        dt_us,
        cfg.windows.bins_per_window,
        stride,
    )?)
}

fn load_stack(cfg: &RunConfig, bins: usize, height: usize, width: usize) -> Result<TrainedStack> {
    TrainedStack::load(&cfg.checkpoint_dir, bins, height, width).with_context(|| {
        format!(
            "checkpoints missing or unreadable in {} — run `toffe train-ofs` and `toffe train-ofpd`",
            cfg.checkpoint_dir.display()
        )
    })
}

fn sweep_cfg(cfg: &RunConfig) -> SweepCfg {
    SweepCfg {
        bins_per_window: cfg.windows.bins_per_window,
        train_stride: cfg.windows.train_stride,
        eval_stride: cfg.windows.eval_stride,
        ofs: cfg.ofs.clone(),
        ofpd: cfg.ofpd.clone(),
        cascade: cfg.cascade,
    }
}

pub fn gen(cfg: &RunConfig) -> Result<()> {
    let started = Instant::now();
    let manifest = write_dataset(&cfg.dataset, &cfg.dataset_dir)?;
    stash_config(cfg, &cfg.dataset_dir)?;
    let train = manifest.split(Split::Train).count();
    let test = manifest.split(Split::Test).count();
    let events: u64 = manifest.sequences.iter().map(|e| e.event_count).sum();
    println!(
        "wrote {} sequences ({train} train, {test} test), {events} events to {} in {:.1}s",
        manifest.sequences.len(),
        cfg.dataset_dir.display(),
        started.elapsed().as_secs_f64()
    );
    Ok(())
}

pub fn train_ofs_cmd(cfg: &RunConfig, only_bin: Option<usize>) -> Result<()> {
    let (manifest, path) = open_manifest(cfg)?;
    let n_bins = manifest.bins.len();
    if let Some(k) = only_bin {
        if k == 0 || k > n_bins {
            bail!("--bin {k} outside this dataset's bins 1..={n_bins}");
        }
    }
    let windows = load_split(cfg, &manifest, &path, Split::Train, cfg.windows.dt_us)?;
    println!(
        "{} training windows at dt {} us",
        windows.samples.len(),
        cfg.windows.dt_us
    );

    fs::create_dir_all(&cfg.checkpoint_dir)?;
    let selection: Vec<usize> = only_bin.map_or_else(|| (1..=n_bins).collect(), |k| vec![k]);
    for k in selection {
        let started = Instant::now();
        let (model, report) = train_ofs(&windows, k, &cfg.ofs)?;
        model.save(&cfg.checkpoint_dir.join(format!("ofs-bin{k}.ckpt")))?;
        let curve = File::create(cfg.checkpoint_dir.join(format!("ofs-bin{k}-loss.csv")))?;
        report.write_csv(BufWriter::new(curve))?;
        println!(
            "bin {k}: final loss {:.6}, v_th {:.4}, lambda {:.4} ({:.1}s)",
            report.final_loss(),
            model.v_th(),
            model.lambda(),
            started.elapsed().as_secs_f64()
        );
    }
    stash_config(cfg, &cfg.checkpoint_dir)
}

pub fn train_ofpd_cmd(cfg: &RunConfig) -> Result<()> {
    let (manifest, path) = open_manifest(cfg)?;
    let windows = load_split(cfg, &manifest, &path, Split::Train, cfg.windows.dt_us)?;
    println!(
        "{} training windows at dt {} us",
        windows.samples.len(),
        cfg.windows.dt_us
    );

    let started = Instant::now();
    let (model, report) = train_ofpd(&windows, &cfg.ofpd)?;
    fs::create_dir_all(&cfg.checkpoint_dir)?;
    model.save(&cfg.checkpoint_dir.join("ofpd.ckpt"))?;
    let curve = File::create(cfg.checkpoint_dir.join("ofpd-loss.csv"))?;
    report.write_csv(BufWriter::new(curve))?;
    println!(
        "final loss {:.6} over {} epochs ({:.1}s)",
        report.final_loss(),
        report.losses.len(),
        started.elapsed().as_secs_f64()
    );
    stash_config(cfg, &cfg.checkpoint_dir)
}

pub fn eval_cmd(cfg: &RunConfig) -> Result<()> {
    let (manifest, path) = open_manifest(cfg)?;
    let stack = load_stack(
        cfg,
        manifest.bins.len(),
        manifest.height as usize,
        manifest.width as usize,
    )?;
    let windows = load_split(cfg, &manifest, &path, Split::Test, cfg.windows.dt_us)?;
    let report = evaluate(&windows, &stack, &manifest.bins, &cfg.cascade)?;
    print!("{}", report.render());

    fs::create_dir_all(&cfg.report_dir)?;
    let out = File::create(cfg.report_dir.join("eval.csv"))?;
    report.write_csv(BufWriter::new(out))?;
    stash_config(cfg, &cfg.report_dir)?;
    check_gates(&cfg.gates, &report)
}

fn check_gates(gates: &EvalGates, report: &EvalReport) -> Result<()> {
    let mut violations = Vec::new();
    if let Some(min) = gates.min_accuracy {
        if report.accuracy() < min {
            violations.push(format!("accuracy {:.3} < {min}", report.accuracy()));
        }
    }
    let error_gates = [
        (gates.max_pix_e, "pixE", report.errors.map(|e| e.pix_e)),
        (gates.max_dir_e, "dirE", report.errors.map(|e| e.dir_e)),
        (gates.max_speed_e, "speedE", report.errors.map(|e| e.speed_e)),
    ];
    for (gate, name, got) in error_gates {
        match (gate, got) {
            (Some(max), Some(v)) if v > max => violations.push(format!("{name} {v:.3} > {max}")),
            (Some(_), None) => violations.push(format!("{name} gated but nothing detected")),
            _ => {}
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        bail!("thresholds violated: {}", violations.join("; "));
    }
}

pub fn infer_cmd(cfg: &RunConfig) -> Result<()> {
    let events_path = cfg
        .infer_events
        .as_ref()
        .context("`toffe infer` needs an event file: set [infer] events in the config")?;
    let (header, events) = read_events(events_path)
        .with_context(|| format!("cannot read events from {}", events_path.display()))?;
    let (h, w) = (header.height as usize, header.width as usize);
    let bins = &cfg.dataset.bins;
    let stack = load_stack(cfg, bins.len(), h, w)?;

    let overlays = cfg.report_dir.join("overlays");
    fs::create_dir_all(&overlays)?;
    let mut csv = String::from("t_us,bin,support,cx_px,cy_px,dir_rad,speed\n");
    let (mut n_windows, mut n_flows) = (0usize, 0usize);
    let dt = cfg.windows.dt_us;
    let last_t = events.last().map_or(0, |e| e.t);

    let mut t0 = 0;
    while t0 <= last_t && !events.is_empty() {
        let volume = bin_events(&events, t0, dt, cfg.windows.bins_per_window, h, w)?;
        if volume.total() > 0 {
            n_windows += 1;
            let out = cascade_infer(&volume, &stack.separators, &stack.ofpd, bins, &cfg.cascade)?;
            for flow in &out.flows {
                let _ = writeln!(
                    csv,
                    "{t0},{},{},{},{},{},{}",
                    flow.bin, flow.support, flow.pose_px.0, flow.pose_px.1, flow.dir_rad, flow.speed
                );
                n_flows += 1;
            }
            overlay::render(&volume, &out.flows, &out.trace.claimed)
                .save(overlays.join(format!("w{t0:08}.png")))?;
        }
        t0 += dt;
    }

    fs::write(cfg.report_dir.join("flows.csv"), csv)?;
    stash_config(cfg, &cfg.report_dir)?;
    println!(
        "{n_flows} flows over {n_windows} windows -> {}",
        cfg.report_dir.join("flows.csv").display()
    );
    Ok(())
}

pub fn sweep_cmd(cfg: &RunConfig) -> Result<()> {
    let (manifest, path) = open_manifest(cfg)?;
    let scfg = sweep_cfg(cfg);
    let n_bins = manifest.bins.len();

    let mut rows: Vec<EvalReport> = Vec::new();
    let mut noise_stack: Option<TrainedStack> = None;
    for &dt in &cfg.sweep.dts_us {
        let started = Instant::now();
        let train = load_split(cfg, &manifest, &path, Split::Train, dt)?;
        let (stack, _) = train_stack(&train, n_bins, &cfg.ofs, &cfg.ofpd)?;
        let test = load_split(cfg, &manifest, &path, Split::Test, dt)?;
        let report = evaluate(&test, &stack, &manifest.bins, &cfg.cascade)?;
        println!(
            "dt {dt} us: accuracy {:.1}%, {} windows ({:.1}s)",
            100.0 * report.accuracy(),
            report.windows,
            started.elapsed().as_secs_f64()
        );
        rows.push(report);
        if dt == cfg.windows.dt_us {
            noise_stack = Some(stack);
        }
    }

    println!("\n{:>8} {:>8} {:>8} {:>8} {:>8}", "dt_us", "acc%", "pixE", "dirE", "speedE");
    for r in &rows {
        match &r.errors {
            Some(e) => println!(
                "{:>8} {:>8.1} {:>8.3} {:>8.3} {:>8.3}",
                r.dt_us,
                100.0 * r.accuracy(),
                e.pix_e,
                e.dir_e,
                e.speed_e
            ),
            None => println!("{:>8} {:>8.1} {:>8} {:>8} {:>8}", r.dt_us, 0.0, "-", "-", "-"),
        }
    }
    println!(
        "{:>8} {:>8} {:>8.3} {:>8.3} {:>8.3}  (reference: TOFFE @ dt500, 640x480)",
        500, "-", REFERENCE_DT500.pix_e, REFERENCE_DT500.dir_e, REFERENCE_DT500.speed_e
    );

    fs::create_dir_all(&cfg.report_dir)?;
    let out = File::create(cfg.report_dir.join("sweep.csv"))?;
    write_sweep_csv(BufWriter::new(out), &rows)?;

    if !cfg.sweep.noise_rates_hz.is_empty() {
        let stack = match noise_stack {
            Some(s) => s,
            None => {
                let train = load_split(cfg, &manifest, &path, Split::Train, cfg.windows.dt_us)?;
                train_stack(&train, n_bins, &cfg.ofs, &cfg.ofpd)?.0
            }
        };
        let noise_rows = noise_sweep(
            &manifest,
            &path,
            &stack,
            cfg.windows.dt_us,
            &cfg.sweep.noise_rates_hz,
            cfg.sweep.noise_seed,
            &scfg,
        )?;
        println!("\n{:>10} {:>8} {:>10}", "noise_hz", "acc%", "spikes/win");
        for r in &noise_rows {
            println!(
                "{:>10} {:>8.1} {:>10.1}",
                r.noise_rate_hz,
                100.0 * r.accuracy(),
                r.mean_spikes
            );
        }
        let out = File::create(cfg.report_dir.join("noise.csv"))?;
        write_noise_csv(BufWriter::new(out), &noise_rows)?;
    }

    stash_config(cfg, &cfg.report_dir)
}
