use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use latentedit_cli::config::{AttrArg, InvertSection, SweepParam, SweepSection, WeightsSection};
use latentedit_cli::JobConfig;
use latentedit_core::adapters::toy::{face_image, toy_models, ToyGeneratorConfig};
use latentedit_core::io::save_image;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_latentedit"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn toy_input(dir: &Path, name: &str) -> PathBuf {
    let models = toy_models();
    let img = face_image(&models, &ToyGeneratorConfig::default()).unwrap();
    let path = dir.join(name);
    save_image(&path, &img).unwrap();
    path
}

/// A short toy job so CLI tests stay fast.
fn short_job(dir: &Path, inputs: Vec<PathBuf>) -> PathBuf {
    let mut job = JobConfig {
        inputs,
        output_dir: dir.join("out"),
        ..JobConfig::default()
    };
    job.edit.attributes = vec!["region_mean_up".parse().unwrap()];
    job.optim.warmup_iters = Some(20);
    job.optim.latent_iters = Some(20);
    job.optim.noise_iters = Some(10);
    job.optim.mean_latent_samples = Some(50);
    let path = dir.join("job.toml");
    std::fs::write(&path, job.to_toml().unwrap()).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn edit_smoke_writes_full_output_set() {
    let dir = tempfile::tempdir().unwrap();
    let input = toy_input(dir.path(), "face.png");
    let job = short_job(dir.path(), vec![input]);
    let o = run(&["edit", "--config", job.to_str().unwrap(), "--dump-frames", "10"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    for f in [
        "face/edited.png",
        "face/generated.png",
        "face/mask_skin.png",
        "face/mask_target.png",
        "face/mask_target_generated.png",
        "face/mask_blend.png",
        "face/loss_trace.txt",
        "face/latent.ckpt",
        "face/frames/warmup_00000.png",
        "face/frames/latent_00010.png",
        "summary.csv",
    ] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let trace = std::fs::read_to_string(out.join("face/loss_trace.txt")).unwrap();
    let first = trace.lines().next().unwrap();
    assert_eq!(first.split('\t').count(), 4);
    assert!(first.starts_with("warmup\t0\tL_M\t"));
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.starts_with("image,attribute,target,before,after"));
    assert!(summary.lines().nth(1).unwrap().starts_with("face,region_mean_up,present,"));
    let leftovers: Vec<_> = std::fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with(".staging"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn flags_override_config_and_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let input = toy_input(dir.path(), "face.png");
    let job = short_job(dir.path(), vec![input]);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let o = run(&[
            "edit",
            "--config",
            job.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "5",
            "--attr",
            "region_glow=present",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let a = std::fs::read(out_a.join("face/edited.png")).unwrap();
    let b = std::fs::read(out_b.join("face/edited.png")).unwrap();
    assert_eq!(a, b);
    let summary = std::fs::read_to_string(out_a.join("summary.csv")).unwrap();
    assert!(summary.contains("region_glow"));
    assert!(!summary.contains("region_mean_up"));
}

#[test]
fn parallel_jobs_match_sequential() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = vec![toy_input(dir.path(), "one.png"), toy_input(dir.path(), "two.png")];
    let job = short_job(dir.path(), inputs);
    let seq = dir.path().join("seq");
    let par = dir.path().join("par");
    for (out, jobs) in [(&seq, "1"), (&par, "2")] {
        let o = run(&["edit", "--config", job.to_str().unwrap(), "--out", out.to_str().unwrap(), "--jobs", jobs]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for name in ["one", "two"] {
        let a = std::fs::read(seq.join(name).join("latent.ckpt")).unwrap();
        let b = std::fs::read(par.join(name).join("latent.ckpt")).unwrap();
        assert_eq!(a, b);
    }
    // Derived seeds differ per input, so the noise does too.
    let one = std::fs::read(seq.join("one/latent.ckpt")).unwrap();
    let two = std::fs::read(seq.join("two/latent.ckpt")).unwrap();
    assert_ne!(one, two);
}

#[test]
fn unknown_attribute_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = toy_input(dir.path(), "face.png");
    let job = short_job(dir.path(), vec![input]);
    let o = run(&["edit", "--config", job.to_str().unwrap(), "--attr", "no_such_attribute"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("no_such_attribute"));
    assert!(!dir.path().join("out/face").exists());
}

#[test]
fn missing_attributes_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let input = toy_input(dir.path(), "face.png");
    let o = run(&["edit", "--input", input.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("edit.attributes"), "{}", stderr(&o));
}

#[test]
fn unwritable_output_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = toy_input(dir.path(), "face.png");
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    let o = run(&[
        "edit",
        "--input",
        input.to_str().unwrap(),
        "--attr",
        "region_mean_up",
        "--out",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn missing_input_is_io_error_and_unknown_adapter_is_load_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = run(&[
        "edit",
        "--input",
        dir.path().join("nope.png").to_str().unwrap(),
        "--attr",
        "region_mean_up",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));

    let mut job = JobConfig {
        inputs: vec![toy_input(dir.path(), "face.png")],
        output_dir: out,
        ..JobConfig::default()
    };
    job.edit.attributes = vec!["region_mean_up".parse().unwrap()];
    job.models.generator.name = "stylegan2".into();
    let path = dir.path().join("job.toml");
    std::fs::write(&path, job.to_toml().unwrap()).unwrap();
    let o = run(&["edit", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn sweep_writes_summary_and_rejects_empty_values() {
    let dir = tempfile::tempdir().unwrap();
    let input = toy_input(dir.path(), "face.png");
    let job = short_job(dir.path(), vec![input]);
    let o = run(&["sweep", "--config", job.to_str().unwrap(), "--param", "epsilon", "--values", "0.1,0.0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    assert!(out.join("face/epsilon_0.1/edited.png").exists());
    assert!(out.join("face/epsilon_0/edited.png").exists());
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(summary.starts_with("image,parameter,value,attribute,classifier"));

    let o = run(&["sweep", "--config", job.to_str().unwrap(), "--param", "epsilon"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = run(&["sweep", "--config", job.to_str().unwrap(), "--param", "alpha", "--values", "1.5"]);
    assert_eq!(o.status.code(), Some(2), "alpha sweep without size weight: {}", stderr(&o));
}

#[test]
fn invert_emits_metric_rows() {
    let dir = tempfile::tempdir().unwrap();
    let input = toy_input(dir.path(), "face.png");
    let job = short_job(dir.path(), vec![input]);
    let o = run(&["invert", "--config", job.to_str().unwrap(), "--region", "skin_only", "--iterations", "30"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = dir.path().join("out");
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines[0], "image,mse,psnr_db,ssim,perceptual");
    assert!(lines[1].starts_with("face,"));
    assert!(lines[2].starts_with("mean,"));
    assert!(out.join("face/inverted.png").exists());
    assert!(out.join("face/mask.png").exists());
}

#[test]
fn config_roundtrip_is_identical() {
    let mut job = JobConfig {
        inputs: vec!["a.png".into(), "b.png".into()],
        output_dir: "results".into(),
        jobs: 3,
        ..JobConfig::default()
    };
    job.edit.attributes = vec![
        "region_mean_up".parse::<AttrArg>().unwrap(),
        "region_glow=absent".parse().unwrap(),
    ];
    job.edit.epsilon = Some(0.1);
    job.edit.alpha = Some(1.5);
    job.optim.seed = Some(42);
    job.optim.lr_latent = Some(0.02);
    job.optim.weights = Some(WeightsSection {
        lambda_p: Some(100.0),
        ..WeightsSection::default()
    });
    job.export.frames = Some(25);
    job.export.variants = true;
    job.models.classifier.checkpoint = Some("weights/classifier.bin".into());
    job.sweep = Some(SweepSection {
        parameter: SweepParam::Alpha,
        values: vec![0.5, 1.0, 1.5],
    });
    job.invert = Some(InvertSection::default());
    let text = job.to_toml().unwrap();
    let back = JobConfig::from_toml(&text).unwrap();
    assert_eq!(back, job);
    assert_eq!(back.to_toml().unwrap(), text);
    assert_eq!(back.edit_spec().unwrap(), job.edit_spec().unwrap());
    assert_eq!(back.optim_config().unwrap(), job.optim_config().unwrap());
}
