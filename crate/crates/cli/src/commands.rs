use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use latentedit_core::adapters::registry::AdapterRegistry;
use latentedit_core::checkpoint::{latent_noise_arrays, write_arrays};
use latentedit_core::compositor::blend_variants;
use latentedit_core::io::{load_image, save_image, save_mask};
use latentedit_core::latent::{LatentCode, NoiseStack};
use latentedit_core::metrics::MetricTable;
use latentedit_core::objectives::portion;
use latentedit_core::optimizer::{self, format_trace, EditObserver, EditResult, Stage};
use latentedit_core::{EditSpec, Image, LossReport, ModelSet, OptimConfig};

use crate::config::{JobConfig, SweepParam};
use crate::error::CliError;

/// One input image with its output directory name and derived seed.
struct Task {
    index: usize,
    path: PathBuf,
    name: String,
}

fn tasks(job: &JobConfig) -> Vec<Task> {
    let mut seen = BTreeSet::new();
    job.inputs
        .iter()
        .enumerate()
        .map(|(index, path)| {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| format!("input{index}"));
            let name = if seen.insert(stem.clone()) {
                stem
            } else {
                format!("{stem}_{index}")
            };
            Task {
                index,
                path: path.clone(),
                name,
            }
        })
        .collect()
}

/// Runs `f` over `items` on up to `jobs` threads; results keep input order
/// and the first error (in input order) wins.
fn parallel_map<T: Sync, R: Send>(
    items: &[T],
    jobs: usize,
    f: impl Fn(&T) -> Result<R, CliError> + Sync,
) -> Result<Vec<R>, CliError> {
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<R, CliError>>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, items.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                *slots[i].lock().expect("result slot") = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().expect("result slot").expect("every item processed"))
        .collect()
}

fn prepare(job: &JobConfig) -> Result<(ModelSet, EditSpec, OptimConfig), CliError> {
    job.validate()?;
    let spec = job.edit_spec()?;
    let cfg = job.optim_config()?;
    let models = AdapterRegistry::with_builtin().load(&job.models)?;
    fs::create_dir_all(&job.output_dir).map_err(|e| CliError::io(&job.output_dir, e))?;
    Ok((models, spec, cfg))
}

fn load_input(models: &ModelSet, path: &Path) -> Result<Image, CliError> {
    let (h, w) = models.generator.info().output_size;
    Ok(load_image(path, Some((h, w)))?)
}

/// A scratch directory inside the output directory, moved into place only
/// once every file of the set has been written.
struct Staging {
    dir: tempfile::TempDir,
}

impl Staging {
    fn new(parent: &Path) -> Result<Self, CliError> {
        let dir = tempfile::Builder::new()
            .prefix(".staging-")
            .tempdir_in(parent)
            .map_err(|e| CliError::io(parent, e))?;
        Ok(Self { dir })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        let p = self.path(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&p, contents).map_err(|e| CliError::io(&p, e))
    }

    fn commit(self, dest: &Path) -> Result<(), CliError> {
        if dest.exists() {
            fs::remove_dir_all(dest).map_err(|e| CliError::io(dest, e))?;
        }
        let tmp = self.dir.keep();
        fs::rename(&tmp, dest).map_err(|e| {
            let _ = fs::remove_dir_all(&tmp);
            CliError::io(dest, e)
        })
    }
}

fn write_file_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let parent = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(parent).map_err(|e| CliError::io(parent, e))?;
    std::io::Write::write_all(&mut tmp, contents.as_bytes()).map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Saves renders every N iterations into the staging directory.
struct FrameDump<'a> {
    staging: &'a Staging,
    error: Option<CliError>,
}

impl EditObserver for FrameDump<'_> {
    fn on_frame(&mut self, stage: Stage, iteration: usize, image: &Image) {
        if self.error.is_some() {
            return;
        }
        let dir = self.staging.path("frames");
        let r = fs::create_dir_all(&dir)
            .map_err(|e| CliError::io(&dir, e))
            .and_then(|_| Ok(save_image(&dir.join(format!("{stage}_{iteration:05}.png")), image)?));
        if let Err(e) = r {
            self.error = Some(e);
        }
    }

    fn on_iteration(&mut self, stage: Stage, iteration: usize, report: &LossReport) {
        log::trace!("{stage} {iteration} total {:.6e}", report.total);
    }

    fn on_stage_end(&mut self, stage: Stage, _w: &LatentCode, _n: &NoiseStack) {
        log::debug!("{stage} stage finished");
    }
}

fn run_one(
    job: &JobConfig,
    models: &ModelSet,
    input: &Image,
    spec: &EditSpec,
    cfg: &OptimConfig,
    staging: &Staging,
) -> Result<EditResult, CliError> {
    let mut dump = FrameDump { staging, error: None };
    let result = optimizer::run_edit_observed(models, input, spec, cfg, &mut dump)?;
    if let Some(e) = dump.error {
        return Err(e);
    }
    save_image(&staging.path("edited.png"), &result.image_out)?;
    save_image(&staging.path("generated.png"), &result.image_gen)?;
    if job.export.masks {
        save_mask(&staging.path("mask_skin.png"), &result.masks.skin)?;
        save_mask(&staging.path("mask_target.png"), &result.masks.target)?;
        save_mask(&staging.path("mask_target_generated.png"), &result.target_gen)?;
        save_mask(&staging.path("mask_blend.png"), &result.blend_mask)?;
    }
    if job.export.variants {
        let dir = staging.path("variants");
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        for (name, img) in blend_variants(&result.image_gen, input, &result.masks, &result.target_gen)? {
            save_image(&dir.join(format!("{name}.png")), &img)?;
        }
    }
    if job.export.trace {
        staging.write("loss_trace.txt", format_trace(&result.trace).as_bytes())?;
    }
    if job.export.checkpoint {
        let mut buf = Vec::new();
        write_arrays(&mut buf, &latent_noise_arrays(&result.w_final, &result.n_final))
            .map_err(|e| CliError::io(staging.path("latent.ckpt"), e))?;
        staging.write("latent.ckpt", &buf)?;
    }
    Ok(result)
}

fn with_seed(cfg: &OptimConfig, index: usize) -> OptimConfig {
    OptimConfig {
        seed: cfg.seed.wrapping_add(index as u64),
        ..cfg.clone()
    }
}

/// Classifier outputs for the edited attributes.
fn attribute_probs(models: &ModelSet, spec: &EditSpec, image: &Image) -> Result<Vec<f64>, CliError> {
    let all = models.classifier.classify(image)?;
    spec.attributes
        .iter()
        .map(|a| {
            models
                .classifier
                .attribute_index(&a.name)
                .map(|i| all[i])
                .ok_or_else(|| latentedit_core::Error::UnknownAttribute(a.name.clone()).into())
        })
        .collect()
}

pub fn cmd_edit(job: &JobConfig) -> Result<(), CliError> {
    let (models, spec, cfg) = prepare(job)?;
    let tasks = tasks(job);
    let rows = parallel_map(&tasks, job.jobs, |t| {
        let input = load_input(&models, &t.path)?;
        let staging = Staging::new(&job.output_dir)?;
        let result = run_one(job, &models, &input, &spec, &with_seed(&cfg, t.index), &staging)?;
        staging.commit(&job.output_dir.join(&t.name))?;
        let before = attribute_probs(&models, &spec, &input)?;
        let after = attribute_probs(&models, &spec, &result.image_out)?;
        let mut rows = String::new();
        for (k, a) in spec.attributes.iter().enumerate() {
            let _ = writeln!(
                rows,
                "{},{},{},{:.6},{:.6},{:.6},{:.6}",
                t.name,
                a.name,
                if a.present { "present" } else { "absent" },
                before[k],
                after[k],
                portion(&result.masks.target),
                portion(&result.target_gen)
            );
        }
        log::info!("{}: done", t.name);
        Ok(rows)
    })?;
    let mut csv = String::from("image,attribute,target,before,after,portion_in,portion_generated\n");
    rows.iter().for_each(|r| csv.push_str(r));
    write_file_atomic(&job.output_dir.join("summary.csv"), &csv)
}

pub fn cmd_sweep(job: &JobConfig) -> Result<(), CliError> {
    let sweep = job
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep: missing parameter and values".into()))?;
    if sweep.values.is_empty() {
        return Err(CliError::Config("sweep.values: at least one value is required".into()));
    }
    let base = job.edit_spec()?;
    let specs: Vec<EditSpec> = sweep
        .values
        .iter()
        .map(|&v| {
            let s = match sweep.parameter {
                SweepParam::Epsilon => base.clone().with_epsilon(v),
                SweepParam::Alpha => base.clone().with_alpha(v),
            };
            s.validate().map_err(|e| CliError::Config(format!("sweep.values: {e}")))?;
            Ok(s)
        })
        .collect::<Result<_, CliError>>()?;
    let (models, _, cfg) = prepare(job)?;
    if sweep.parameter == SweepParam::Alpha && cfg.weights.lambda_p <= 0.0 {
        return Err(CliError::Config(
            "optim.weights.lambda_p: an alpha sweep needs a positive size weight".into(),
        ));
    }
    let param = match sweep.parameter {
        SweepParam::Epsilon => "epsilon",
        SweepParam::Alpha => "alpha",
    };
    let tasks = tasks(job);
    let rows = parallel_map(&tasks, job.jobs, |t| {
        let input = load_input(&models, &t.path)?;
        let staging = Staging::new(&job.output_dir)?;
        let cfg = with_seed(&cfg, t.index);
        let mut rows = String::new();
        for (value, spec) in sweep.values.iter().zip(&specs) {
            let sub = Staging::new(staging.dir.path())?;
            let result = run_one(job, &models, &input, spec, &cfg, &sub)?;
            sub.commit(&staging.path(&format!("{param}_{value}")))?;
            let after = attribute_probs(&models, spec, &result.image_out)?;
            for (a, p) in spec.attributes.iter().zip(after) {
                let _ = writeln!(
                    rows,
                    "{},{param},{value},{},{p:.6},{:.6},{:.6}",
                    t.name,
                    a.name,
                    portion(&result.masks.target),
                    portion(&result.target_gen)
                );
            }
        }
        staging.commit(&job.output_dir.join(&t.name))?;
        Ok(rows)
    })?;
    let mut csv = String::from("image,parameter,value,attribute,classifier,portion_in,portion_generated\n");
    rows.iter().for_each(|r| csv.push_str(r));
    write_file_atomic(&job.output_dir.join("summary.csv"), &csv)
}

pub fn cmd_invert(job: &JobConfig) -> Result<(), CliError> {
    let inv = job.invert.clone().unwrap_or_default();
    if job.inputs.is_empty() {
        return Err(CliError::Config("inputs: at least one input image is required".into()));
    }
    if job.jobs == 0 {
        return Err(CliError::Config("jobs: must be >= 1".into()));
    }
    let cfg = job.optim_config()?;
    let models = AdapterRegistry::with_builtin().load(&job.models)?;
    fs::create_dir_all(&job.output_dir).map_err(|e| CliError::io(&job.output_dir, e))?;
    let tasks = tasks(job);
    let reports = parallel_map(&tasks, job.jobs, |t| {
        let input = load_input(&models, &t.path)?;
        let staging = Staging::new(&job.output_dir)?;
        let r = optimizer::invert(&models, &input, inv.region, inv.iterations, &with_seed(&cfg, t.index))?;
        save_image(&staging.path("inverted.png"), &r.image_out)?;
        save_image(&staging.path("generated.png"), &r.image_gen)?;
        save_mask(&staging.path("mask.png"), &r.mask)?;
        if job.export.trace {
            staging.write("loss_trace.txt", format_trace(&r.trace).as_bytes())?;
        }
        staging.commit(&job.output_dir.join(&t.name))?;
        Ok((t.name.clone(), r.metrics))
    })?;
    let mut table = MetricTable::default();
    for (name, m) in reports {
        table.push(name, m);
    }
    write_file_atomic(&job.output_dir.join("metrics.csv"), &table.to_csv())
}
