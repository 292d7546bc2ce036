use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_json::json;
use treecut_core::eval::{
    covering_vs_annotations_with, ods_ois_eval, pri, vi_vs_annotations, write_metric_csv,
    CoveringDirection,
};
use treecut_core::model::prior_log_prob;
use treecut_core::tuning::{
    cross_scale_grid_search, grid_search, grid_search_threshold, scale_split, ParamGrid, Scale,
    TrainSet, TuningImage, SKIPPED,
};
use treecut_core::{
    build_tree_agglomerative, cut_to_segmentation, export_tree, import_tree, region_loglik_table,
    threshold_tree, AnnotationSet, CutConfig, Image, LikelihoodConfig, MetricReport, ModelParams,
    PosteriorTables, RegionTree, Segmentation, SuperpixelMap,
};

use crate::args::{Command, LikelihoodKind, SegmentMode};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{self, csv_field, write_file};

pub fn dispatch(cfg: &RunConfig, command: &Command) -> CliResult<()> {
    io::ensure_dir(&cfg.out_dir)?;
    let name = command.name();
    let resolved = cfg.to_json();
    println!("resolved config: {resolved}");
    write_file(&cfg.out_path(&format!("{name}.config.json")), resolved + "\n")?;
    match command {
        Command::Tree(_) => tree(cfg),
        Command::Segment(_) => segment(cfg),
        Command::Sample(_) => sample(cfg),
        Command::Eval(_) => eval(cfg),
        Command::Tune(_) => tune(cfg),
    }
}

fn tree(cfg: &RunConfig) -> CliResult<()> {
    let image = cfg.image.as_deref().map(io::read_image).transpose()?;
    let sp = match (&cfg.superpixels, &image) {
        (Some(src), Some(img)) => Some(io::superpixels(src, img, cfg.seed)?),
        (Some(_), None) => return Err(CliError::usage("--superpixels needs --image")),
        (None, _) => None,
    };
    let tree = match (&cfg.import, &sp, &image) {
        (Some(path), _, _) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            import_tree(&text).map_err(|e| CliError::from(e).in_file(path))?
        }
        (None, Some(sp), Some(img)) => build_tree_agglomerative(img, sp)?,
        _ => {
            return Err(CliError::usage(
                "tree needs --image and --superpixels, or --import",
            ))
        }
    };
    if let Some(sp) = &sp {
        check_leaves(&tree, sp)?;
        write_file(&cfg.out_path("superpixels.pgm"), sp.encode_pgm()?)?;
    }
    write_file(&cfg.out_path("tree.json"), export_tree(&tree))?;
    println!("nodes: {}", tree.len());
    println!("leaves: {}", tree.num_leaves());
    println!("superpixels: {}", tree.num_superpixels());
    Ok(())
}

fn check_leaves(tree: &RegionTree, sp: &SuperpixelMap) -> CliResult<()> {
    if tree.num_superpixels() != sp.count() {
        return Err(CliError::data(format!(
            "tree covers {} superpixels but the map has {}",
            tree.num_superpixels(),
            sp.count()
        )));
    }
    Ok(())
}

struct Problem {
    image: Image,
    tree: RegionTree,
    sp: SuperpixelMap,
    params: ModelParams,
    logliks: Vec<f64>,
}

fn load_problem(cfg: &RunConfig) -> CliResult<Problem> {
    let image = io::read_image(RunConfig::require(&cfg.image, "image")?)?;
    let tree = io::read_tree(RunConfig::require(&cfg.tree, "tree")?)?;
    let sp = io::superpixels(
        RunConfig::require(&cfg.superpixels, "superpixels")?,
        &image,
        cfg.seed,
    )?;
    check_leaves(&tree, &sp)?;
    let params = ModelParams::global(&tree, cfg.p)?;
    let logliks = match cfg.likelihood {
        LikelihoodKind::Gaussian => {
            let lc = LikelihoodConfig::gaussian(cfg.lambda, cfg.epsilon)?;
            region_loglik_table(&tree, &image, &sp, None, &lc)?
        }
        LikelihoodKind::GroundTruth => {
            let gt = io::read_segmentation(RunConfig::require(&cfg.ground_truth, "ground-truth")?)?;
            let lc = LikelihoodConfig::ground_truth(cfg.lambda)?;
            region_loglik_table(&tree, &image, &sp, Some(&gt), &lc)?
        }
    };
    Ok(Problem {
        image,
        tree,
        sp,
        params,
        logliks,
    })
}

impl Problem {
    /// `ln p(c) + Σ_{i∈c} ln p(Y_i)`.
    fn log_joint(&self, cut: &CutConfig) -> CliResult<f64> {
        let prior = prior_log_prob(&self.tree, &self.params, cut)?;
        Ok(prior + cut.active().iter().map(|&i| self.logliks[i]).sum::<f64>())
    }
}

fn segment(cfg: &RunConfig) -> CliResult<()> {
    let problem = load_problem(cfg)?;
    let (cut, score, label) = match cfg.mode {
        SegmentMode::Map => {
            let tables = PosteriorTables::compute(&problem.tree, &problem.params, &problem.logliks)?;
            let (cut, score) = tables.map_cut(&problem.tree);
            (cut, score, "log_p_star")
        }
        SegmentMode::Threshold => {
            let k = *RunConfig::require(&cfg.k, "k")?;
            let cut = threshold_tree(&problem.tree, k)?;
            let score = problem.log_joint(&cut)?;
            (cut, score, "log_joint")
        }
    };
    let seg = cut_to_segmentation(&cut, &problem.tree, &problem.sp)?;
    write_file(&cfg.out_path("segmentation.pgm"), seg.encode_pgm()?)?;
    io::write_render(&cfg.out_path("render.ppm"), &problem.image, &seg)?;
    write_file(&cfg.out_path("cut.json"), cut.to_json() + "\n")?;
    println!("regions: {}", seg.num_regions());
    println!("{label}: {score}");
    Ok(())
}

fn sample(cfg: &RunConfig) -> CliResult<()> {
    let problem = load_problem(cfg)?;
    let tables = PosteriorTables::compute(&problem.tree, &problem.params, &problem.logliks)?;
    let evidence = tables.log_evidence();
    let cuts = tables.sample_cuts(&problem.tree, cfg.samples, cfg.seed);
    let mut csv = String::from("sample,regions,log_posterior\n");
    for (i, cut) in cuts.iter().enumerate() {
        let seg = cut_to_segmentation(cut, &problem.tree, &problem.sp)?;
        write_file(&cfg.out_path(&format!("sample_{i:04}.pgm")), seg.encode_pgm()?)?;
        let log_post = problem.log_joint(cut)? - evidence;
        let _ = writeln!(csv, "{i},{},{log_post}", seg.num_regions());
    }
    write_file(&cfg.out_path("samples.csv"), csv)?;
    println!("samples: {}", cuts.len());
    println!("log_evidence: {evidence}");
    Ok(())
}

fn report(s: &Segmentation, gts: &AnnotationSet, direction: CoveringDirection) -> CliResult<MetricReport> {
    Ok(MetricReport {
        covering: covering_vs_annotations_with(s, gts, direction)?,
        pri: pri(s, gts)?,
        vi: vi_vs_annotations(s, gts)?,
    })
}

fn mean_report(reports: &[MetricReport]) -> MetricReport {
    let n = reports.len() as f64;
    MetricReport {
        covering: reports.iter().map(|r| r.covering).sum::<f64>() / n,
        pri: reports.iter().map(|r| r.pri).sum::<f64>() / n,
        vi: reports.iter().map(|r| r.vi).sum::<f64>() / n,
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalManifest {
    params: Vec<serde_json::Value>,
    images: Vec<EvalManifestImage>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalManifestImage {
    id: String,
    annotations: Vec<PathBuf>,
    segmentations: Vec<PathBuf>,
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn eval(cfg: &RunConfig) -> CliResult<()> {
    if let Some(manifest) = &cfg.manifest {
        return eval_manifest(cfg, manifest);
    }
    let seg_path = RunConfig::require(&cfg.segmentation, "segmentation")?;
    let id = cfg.id.clone().unwrap_or_else(|| {
        seg_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let seg = io::read_segmentation(seg_path)?;
    let gts = io::read_annotations(&id, &cfg.annotations)?;
    let r = report(&seg, &gts, cfg.covering_direction)?;
    let csv = write_metric_csv([(id.as_str(), "-", &r), ("mean", "-", &r)]);
    write_file(&cfg.out_path("eval.csv"), csv)?;
    println!("covering: {}", r.covering);
    println!("pri: {}", r.pri);
    println!("vi: {}", r.vi);
    Ok(())
}

fn eval_manifest(cfg: &RunConfig, manifest: &Path) -> CliResult<()> {
    let doc: EvalManifest = read_json(manifest)?;
    let base = io::manifest_dir(manifest);
    if doc.images.is_empty() || doc.params.is_empty() {
        return Err(CliError::data("manifest needs at least one image and one param"));
    }
    let params: Vec<String> = doc
        .params
        .iter()
        .map(|v| match v {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        })
        .collect();
    let mut table: Vec<Vec<MetricReport>> = Vec::with_capacity(doc.images.len());
    for img in &doc.images {
        if img.segmentations.len() != params.len() {
            return Err(CliError::data(format!(
                "image {}: {} segmentations for {} params",
                img.id,
                img.segmentations.len(),
                params.len()
            )));
        }
        let ann: Vec<PathBuf> = img.annotations.iter().map(|p| io::relative_to(&base, p)).collect();
        let gts = io::read_annotations(&img.id, &ann)?;
        let row = img
            .segmentations
            .iter()
            .map(|p| report(&io::read_segmentation(&io::relative_to(&base, p))?, &gts, cfg.covering_direction))
            .collect::<CliResult<Vec<_>>>()?;
        table.push(row);
    }
    let means: Vec<MetricReport> = (0..params.len())
        .map(|j| mean_report(&table.iter().map(|row| row[j]).collect::<Vec<_>>()))
        .collect();
    let mut rows = Vec::new();
    for (img, row) in doc.images.iter().zip(&table) {
        for (param, r) in params.iter().zip(row) {
            rows.push((img.id.as_str(), param.as_str(), r));
        }
    }
    for (param, r) in params.iter().zip(&means) {
        rows.push(("mean", param.as_str(), r));
    }
    write_file(&cfg.out_path("eval.csv"), write_metric_csv(rows))?;

    let summary = ods_ois_eval(&table, cfg.metric)?;
    let doc = json!({
        "metric": cfg.metric.name(),
        "ods": summary.ods,
        "ods_param": params[summary.best_param],
        "ois": summary.ois,
    });
    let text = serde_json::to_string_pretty(&doc)? + "\n";
    write_file(&cfg.out_path("eval_summary.json"), text)?;
    println!("ods: {} (param {})", summary.ods, params[summary.best_param]);
    println!("ois: {}", summary.ois);
    Ok(())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TuneEntry {
    image: PathBuf,
    tree: PathBuf,
    superpixels: String,
    annotations: Vec<PathBuf>,
    #[serde(default)]
    id: Option<String>,
}

fn load_tuning_images(cfg: &RunConfig, manifest: &Path) -> CliResult<Vec<TuningImage>> {
    let entries: Vec<TuneEntry> = read_json(manifest)?;
    if entries.is_empty() {
        return Err(CliError::data(format!("{}: no images", manifest.display())));
    }
    let base = io::manifest_dir(manifest);
    let mut seen = std::collections::HashSet::new();
    let mut images = Vec::with_capacity(entries.len());
    for e in entries {
        let image_path = io::relative_to(&base, &e.image);
        let id = e.id.clone().unwrap_or_else(|| {
            image_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default()
        });
        if !seen.insert(id.clone()) {
            return Err(CliError::data(format!("duplicate image id {id:?}")));
        }
        let image = io::read_image(&image_path)?;
        let tree = io::read_tree(&io::relative_to(&base, &e.tree))?;
        let source = if e.superpixels.starts_with("grid:") || e.superpixels.starts_with("slic:") {
            e.superpixels.clone()
        } else {
            io::relative_to(&base, Path::new(&e.superpixels))
                .to_string_lossy()
                .into_owned()
        };
        let sp = io::superpixels(&source, &image, cfg.seed)?;
        check_leaves(&tree, &sp)?;
        let ann: Vec<PathBuf> = e.annotations.iter().map(|p| io::relative_to(&base, p)).collect();
        let gts = io::read_annotations(&id, &ann)?;
        images.push(TuningImage::new(&image, tree, sp, gts, cfg.epsilon)?);
    }
    Ok(images)
}

fn tune_grid(cfg: &RunConfig) -> CliResult<ParamGrid> {
    let p = cfg.p_grid.clone().unwrap_or_else(ParamGrid::default_p_values);
    let lambda = match cfg.fixed_lambda {
        Some(l) => vec![l],
        None => cfg
            .lambda_grid
            .clone()
            .unwrap_or_else(ParamGrid::default_lambda_values),
    };
    Ok(ParamGrid::new(p, lambda, None)?)
}

fn tune(cfg: &RunConfig) -> CliResult<()> {
    let manifest = RunConfig::require(&cfg.manifest, "manifest")?;
    let grid = tune_grid(cfg)?;
    let images = load_tuning_images(cfg, manifest)?;
    println!("images: {}", images.len());
    println!("grid points: {}", grid.len());

    if cfg.scale_split {
        tune_scale_split(cfg, &images, &grid)?;
    } else {
        let result = grid_search(&images, &grid, cfg.metric)?;
        write_file(&cfg.out_path("tune.json"), result.summary_json())?;
        write_file(&cfg.out_path("tune.csv"), result.to_csv(&images))?;
        println!("best_p: {}", result.best_p);
        println!("best_lambda: {}", result.best_lambda);
        println!("{}: {}", cfg.metric.name(), result.score);
    }

    if cfg.baseline {
        let k = cfg.k_grid.clone().unwrap_or_else(ParamGrid::default_k_values);
        let result = grid_search_threshold(&images, &k, cfg.metric)?;
        let doc = json!({
            "best_k": result.best_k,
            "score": result.score,
        });
        write_file(
            &cfg.out_path("threshold.json"),
            serde_json::to_string_pretty(&doc)? + "\n",
        )?;
        let mut csv = String::from("image_id,k,covering,pri,vi\n");
        for point in &result.evaluations {
            for (img, r) in images.iter().zip(&point.reports) {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{}",
                    csv_field(&img.id),
                    point.k,
                    r.covering,
                    r.pri,
                    r.vi
                );
            }
        }
        write_file(&cfg.out_path("threshold.csv"), csv)?;
        println!("baseline best_k: {}", result.best_k);
        println!("baseline {}: {}", cfg.metric.name(), result.score);
    }
    Ok(())
}

fn tune_scale_split(cfg: &RunConfig, images: &[TuningImage], grid: &ParamGrid) -> CliResult<()> {
    let annotations: Vec<AnnotationSet> = images.iter().map(|i| i.annotations.clone()).collect();
    let split = scale_split(&annotations);
    write_file(
        &cfg.out_path("scale_split.json"),
        serde_json::to_string_pretty(&split)? + "\n",
    )?;
    for scale in Scale::ALL {
        println!("bucket {}: {} images", scale.name(), split.get(scale).len());
    }
    let matrix = cross_scale_grid_search(images, &split, grid, cfg.metric)?;
    write_file(&cfg.out_path("cross_scale.csv"), matrix.to_csv())?;

    let cell = |v: Option<f64>| v.map_or(json!(SKIPPED), |v| json!(v));
    let mut rows = Vec::new();
    for row in &matrix.rows {
        let name = row.train.name();
        match &row.model {
            Some(m) => {
                println!(
                    "train {name}: best_p {} best_lambda {} score {}",
                    m.best_p, m.best_lambda, m.score
                );
                rows.push(json!({
                    "train": name,
                    "best_p": m.best_p,
                    "best_lambda": m.best_lambda,
                    "train_score": m.score,
                    "test": {
                        "coarse": cell(row.scores[0]),
                        "medium": cell(row.scores[1]),
                        "fine": cell(row.scores[2]),
                    },
                }));
            }
            None => {
                println!("train {name}: {SKIPPED} (no training images)");
                rows.push(json!({ "train": name, "skipped": true }));
            }
        }
    }
    let doc = json!({ "metric": cfg.metric.name(), "rows": rows });
    write_file(
        &cfg.out_path("cross_scale.json"),
        serde_json::to_string_pretty(&doc)? + "\n",
    )?;
    if let Some(all) = &matrix.row(TrainSet::All).model {
        write_file(&cfg.out_path("tune.json"), all.summary_json())?;
    }
    Ok(())
}
