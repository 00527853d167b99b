use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use axtnn::complib::{write_atomic, Library, LibraryConfig};
use axtnn::moo::{self, AssignmentScorer, NsgaConfig, ParetoPoint};
use axtnn::netlist::Netlist;
use axtnn::tech::{CellLibrary, ConverterKind, GateKind, InterfaceCostTable};
use axtnn::tnn::{self, ComponentAssignment, Dataset, Evaluator, ExactComponents, TnnModel, TrainConfig};
use axtnn::varsim::{self, VariationConfig, VariationReport};
use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

/// Artifact layout of a run directory.
pub struct RunDir {
    pub root: PathBuf,
}

impl RunDir {
    pub fn new(root: &Path) -> Self {
        Self { root: root.to_path_buf() }
    }

    pub fn model(&self, k: u32) -> PathBuf {
        self.root.join("models").join(format!("k{k}.json"))
    }

    pub fn model_info(&self, k: u32) -> PathBuf {
        self.root.join("models").join(format!("k{k}.train.json"))
    }

    pub fn exact_gnl(&self, k: u32) -> PathBuf {
        self.root.join("exact").join(format!("k{k}.gnl"))
    }

    pub fn exact_json(&self, k: u32) -> PathBuf {
        self.root.join("exact").join(format!("k{k}.json"))
    }

    pub fn library(&self) -> PathBuf {
        self.root.join("library")
    }

    pub fn fronts(&self) -> PathBuf {
        self.root.join("fronts")
    }

    pub fn variation(&self) -> PathBuf {
        self.root.join("variation")
    }
}

fn require(path: &Path, command: &str) -> Result<()> {
    if !path.exists() {
        bail!("{} is missing; run `axtnn {command}` first", path.display());
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    tnn::ingest_csv(&cfg.dataset, &cfg.label, cfg.stage_seed("split"))
        .with_context(|| format!("loading dataset {}", cfg.dataset.display()))
}

fn load_model(dir: &RunDir, k: u32) -> Result<TnnModel> {
    let p = dir.model(k);
    require(&p, "train")?;
    TnnModel::load(&p).with_context(|| format!("loading {}", p.display()))
}

fn load_library(dir: &RunDir, tech: &CellLibrary) -> Result<Library> {
    require(&dir.library().join("manifest.json"), "build-library")?;
    Library::load(&dir.library(), tech).context("loading component library")
}

fn test_codes(data: &Dataset, k: u32) -> (Vec<Vec<u8>>, Vec<usize>) {
    data.quantized(&data.test, k)
}

#[derive(Serialize, Deserialize)]
pub struct TrainInfo {
    pub k: u32,
    pub hidden: usize,
    pub validation_accuracy: f64,
    pub test_accuracy: f64,
    /// Best validation accuracy per hidden size tried.
    pub grid: Vec<(usize, f64)>,
}

pub fn train(cfg: &RunConfig, force: bool) -> Result<()> {
    let dir = RunDir::new(&cfg.out);
    let data = load_dataset(cfg)?;
    let mut sizes = cfg.hidden.clone();
    sizes.sort_unstable();
    sizes.dedup();
    for &k in &cfg.ks {
        if dir.model(k).exists() && !force {
            info!("k={k}: model present, skipping (use --force to retrain)");
            continue;
        }
        let runs = sizes
            .par_iter()
            .map(|&m| {
                let tc = TrainConfig { seed: cfg.stage_seed(&format!("train/k{k}/m{m}")), ..cfg.train.clone() };
                let (model, traces) = tnn::train(&data, k, m, &tc)?;
                let val = traces.iter().map(|t| t.validation_accuracy).fold(0.0, f64::max);
                Ok((m, val, model))
            })
            .collect::<axtnn::Result<Vec<_>>>()?;
        let best = runs.iter().map(|r| r.1).fold(0.0, f64::max);
        let (m, val, model) = runs.iter().find(|r| r.1 >= best - cfg.hidden_tolerance).unwrap();
        let (x, y) = test_codes(&data, k);
        let test_accuracy = tnn::accuracy(model, None, &x, &y)?;
        info!("k={k}: m={m}, validation {val:.4}, test {test_accuracy:.4}");
        std::fs::create_dir_all(dir.model(k).parent().unwrap())?;
        let mut text = serde_json::to_string_pretty(model)?;
        text.push('\n');
        write_atomic(&dir.model(k), text.as_bytes())?;
        let grid = runs.iter().map(|r| (r.0, r.1)).collect();
        write_json(&dir.model_info(k), &TrainInfo { k, hidden: *m, validation_accuracy: *val, test_accuracy, grid })?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExactSummary {
    pub k: u32,
    pub features: usize,
    pub hidden: usize,
    pub classes: usize,
    pub test_accuracy: f64,
    pub margin: i64,
    pub inputs: usize,
    pub gates: usize,
    pub area: f64,
    pub power: f64,
    pub interface: ConverterKind,
    pub interface_area: f64,
    pub interface_power: f64,
    pub total_area: f64,
    pub total_power: f64,
    pub histogram: BTreeMap<GateKind, usize>,
}

fn exact_netlist(model: &TnnModel, cfg: &RunConfig) -> Result<Netlist> {
    let exact = ExactComponents::for_model(model, cfg.library.style)?;
    Ok(moo::assemble_assignment(model, &ComponentAssignment::exact(model), &exact)?)
}

pub fn gen_exact(cfg: &RunConfig, force: bool) -> Result<()> {
    let dir = RunDir::new(&cfg.out);
    let tech = cfg.tech()?;
    let table = cfg.interface_table()?;
    let data = load_dataset(cfg)?;
    for &k in &cfg.ks {
        let model = load_model(&dir, k)?;
        if dir.exact_json(k).exists() && dir.exact_gnl(k).exists() && !force {
            info!("k={k}: exact netlist present, skipping");
            continue;
        }
        let net = exact_netlist(&model, cfg)?;
        let (x, y) = test_codes(&data, k);
        let test_accuracy = tnn::accuracy(&model, None, &x, &y)?;
        let margin = if model.classes() >= 2 { tnn::confidence_margin(&model, None, &x)? } else { 0 };
        let summary = exact_summary(&model, &net, test_accuracy, margin, &tech, &table)?;
        write_text(&dir.exact_gnl(k), &net.to_gnl())?;
        write_json(&dir.exact_json(k), &summary)?;
        info!("k={k}: exact classifier {} gates, area {:.3} mm², test accuracy {test_accuracy:.4}", summary.gates, summary.area);
    }
    Ok(())
}

fn exact_summary(
    model: &TnnModel,
    net: &Netlist,
    test_accuracy: f64,
    margin: i64,
    tech: &CellLibrary,
    table: &InterfaceCostTable,
) -> Result<ExactSummary> {
    let area = net.area(tech)?;
    let p = ParetoPoint::new(
        String::new(),
        model.k,
        model.features(),
        test_accuracy,
        test_accuracy,
        area,
        ComponentAssignment::exact(model),
        table,
        tech,
    )?;
    Ok(ExactSummary {
        k: model.k,
        features: model.features(),
        hidden: model.hidden_size(),
        classes: model.classes(),
        test_accuracy,
        margin,
        inputs: net.num_inputs(),
        gates: net.gates().len(),
        area,
        power: p.classifier_power,
        interface: p.interface,
        interface_area: p.interface_area,
        interface_power: p.interface_power,
        total_area: p.total_area,
        total_power: p.total_power,
        histogram: net.gate_histogram(),
    })
}

pub fn build_library(cfg: &RunConfig, force: bool) -> Result<()> {
    let dir = RunDir::new(&cfg.out);
    let tech = cfg.tech()?;
    let models = cfg.ks.iter().map(|&k| load_model(&dir, k)).collect::<Result<Vec<_>>>()?;
    let mut keys: Vec<_> = models.iter().flat_map(Library::keys_for_model).collect();
    keys.sort();
    keys.dedup();
    let manifest = dir.library().join("manifest.json");
    let mut lib = if manifest.exists() && !force { load_library(&dir, &tech)? } else { Library::default() };
    let missing: Vec<_> = keys.iter().copied().filter(|k| lib.components(k).is_none()).collect();
    if missing.is_empty() {
        info!("library already covers all {} keys, skipping", keys.len());
        return Ok(());
    }
    info!("building {} component keys", missing.len());
    let lc = LibraryConfig { seed: cfg.stage_seed("library"), ..cfg.library.clone() };
    let (built, log) = Library::build(&missing, &lc, &tech)?;
    for (key, why) in &log.refused {
        log::warn!("{key} refused: {why}");
    }
    lib.merge(built);
    std::fs::create_dir_all(dir.library())?;
    lib.save(&dir.library())?;
    write_json(&dir.library().join("build_log.json"), &log)?;
    info!("library holds {} components over {} keys", lib.len(), lib.entries.len());
    Ok(())
}

fn front_paths(dir: &RunDir, name: &str) -> (PathBuf, PathBuf, PathBuf) {
    let f = dir.fronts();
    (f.join(format!("{name}.csv")), f.join(format!("{name}.json")), f.join(format!("{name}.svg")))
}

fn write_front(dir: &RunDir, name: &str, points: &[ParetoPoint], title: &str) -> Result<()> {
    std::fs::create_dir_all(dir.fronts())?;
    let (csv, json, svg) = front_paths(dir, name);
    moo::write_front_csv(&csv, points)?;
    write_json(&json, &points)?;
    write_text(&svg, &moo::front_svg(points, title))?;
    Ok(())
}

pub fn optimize(cfg: &RunConfig, force: bool) -> Result<()> {
    let dir = RunDir::new(&cfg.out);
    let tech = cfg.tech()?;
    let table = cfg.interface_table()?;
    let data = load_dataset(cfg)?;
    let mut lib: Option<Library> = None;
    let mut all = Vec::new();
    for &k in &cfg.ks {
        let name = format!("k{k}");
        let (_, json, _) = front_paths(&dir, &name);
        if json.exists() && !force {
            info!("k={k}: front present, skipping");
            all.extend(read_json::<Vec<ParetoPoint>>(&json)?);
            continue;
        }
        let model = load_model(&dir, k)?;
        if lib.is_none() {
            lib = Some(load_library(&dir, &tech)?);
        }
        let lib = lib.as_ref().unwrap();
        lib.check_covers(&model).context("run `axtnn build-library` for the current models")?;
        let eval_idx = moo::eval_slice(&data.train, cfg.nsga.eval_fraction);
        let (ex, ey) = data.quantized(&eval_idx, k);
        let scorer = AssignmentScorer::new(&model, lib, &tech, ex, ey)?;
        let nc = NsgaConfig { seed: cfg.stage_seed(&format!("nsga/k{k}")), ..cfg.nsga.clone() };
        let front = moo::nsga2(&scorer, &nc)?;
        let (tx, ty) = test_codes(&data, k);
        let ev = Evaluator::new(&model, tx, ty)?;
        let points = front
            .iter()
            .enumerate()
            .map(|(i, ind)| {
                let a = ComponentAssignment::from_genes(&model, &ind.genes);
                let acc = ev.accuracy(&a, lib)?;
                Ok(ParetoPoint::new(format!("k{k}-{i}"), k, model.features(), acc, ind.accuracy, ind.area, a, &table, &tech)?)
            })
            .collect::<Result<Vec<_>>>()?;
        info!("k={k}: front of {} designs", points.len());
        write_front(&dir, &name, &points, &format!("k={k} accuracy/area front"))?;
        all.extend(points);
    }
    let system = moo::system_pareto(&all);
    info!("system front: {} designs", system.len());
    write_front(&dir, "system", &system, "system accuracy/area front")
}

fn find_point(dir: &RunDir, id: &str) -> Result<ParetoPoint> {
    let (_, json, _) = front_paths(dir, "system");
    require(&json, "optimize")?;
    let k: u32 = id
        .strip_prefix('k')
        .and_then(|r| r.split('-').next())
        .and_then(|s| s.parse().ok())
        .with_context(|| format!("design id `{id}` is not of the form k<bits>-<index>"))?;
    let (_, per_k, _) = front_paths(dir, &format!("k{k}"));
    for path in [json, per_k] {
        if path.exists() {
            if let Some(p) = read_json::<Vec<ParetoPoint>>(&path)?.into_iter().find(|p| p.id == id) {
                return Ok(p);
            }
        }
    }
    bail!("design `{id}` not found in the optimization fronts")
}

pub fn variation(cfg: &RunConfig, point: Option<&str>, force: bool) -> Result<()> {
    let dir = RunDir::new(&cfg.out);
    let tech = cfg.tech()?;
    let data = load_dataset(cfg)?;
    let mut targets: Vec<(String, u32, Option<ComponentAssignment>)> =
        cfg.ks.iter().map(|&k| (format!("k{k}-exact"), k, None)).collect();
    if let Some(id) = point {
        let p = find_point(&dir, id)?;
        targets.push((p.id.clone(), p.k, Some(p.assignment)));
    }
    let lib = if point.is_some() { Some(load_library(&dir, &tech)?) } else { None };
    std::fs::create_dir_all(dir.variation())?;
    let features: Vec<Vec<f64>> = data.test.iter().map(|&r| data.features[r].clone()).collect();
    let labels: Vec<usize> = data.test.iter().map(|&r| data.labels[r]).collect();
    let mut series = Vec::new();
    let mut recomputed = false;
    for (name, k, assignment) in targets {
        let json = dir.variation().join(format!("{name}.json"));
        let csv = dir.variation().join(format!("{name}.csv"));
        let report: VariationReport = if json.exists() && csv.exists() && !force {
            info!("{name}: variation report present, skipping");
            let mut r: VariationReport = read_json(&json)?;
            if r.accuracies.is_empty() {
                r.accuracies = read_accuracies(&csv)?;
            }
            r
        } else {
            let model = load_model(&dir, k)?;
            let vc = VariationConfig { seed: cfg.stage_seed(&format!("variation/k{k}")), ..cfg.variation.clone() };
            let src = assignment.as_ref().map(|a| (a, lib.as_ref().unwrap() as &dyn tnn::ComponentSource));
            let r = varsim::mc_accuracy(&model, src, &features, &labels, &vc)?;
            r.write_csv(&csv)?;
            r.write_summary_json(&json)?;
            recomputed = true;
            info!(
                "{name}: nominal {:.4}, mean {:.4}, std {:.4}, min {:.4}, max {:.4}",
                r.nominal_accuracy, r.mean, r.std, r.min, r.max
            );
            r
        };
        series.push((name, report.accuracies));
    }
    let svg = dir.variation().join("variation.svg");
    if recomputed || !svg.exists() {
        write_text(&svg, &varsim::boxplot_svg(&series, "test accuracy under variation"))?;
    }
    Ok(())
}

fn read_accuracies(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    r.records().map(|rec| Ok(rec?.get(1).context("malformed variation CSV")?.parse()?)).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportRow {
    pub design: String,
    pub k: u32,
    pub interface: ConverterKind,
    pub accuracy: f64,
    pub accuracy_loss: f64,
    pub classifier_area: f64,
    pub interface_area: f64,
    pub total_area: f64,
    pub total_power: f64,
    pub margin: i64,
}

pub fn report(cfg: &RunConfig) -> Result<Vec<ReportRow>> {
    let dir = RunDir::new(&cfg.out);
    let tech = cfg.tech()?;
    let data = load_dataset(cfg)?;
    let mut rows = Vec::new();
    let mut exact_acc = BTreeMap::new();
    for &k in &cfg.ks {
        require(&dir.exact_json(k), "gen-exact")?;
        let s: ExactSummary = read_json(&dir.exact_json(k))?;
        exact_acc.insert(k, s.test_accuracy);
        rows.push(ReportRow {
            design: format!("k{k}-exact"),
            k,
            interface: s.interface,
            accuracy: s.test_accuracy,
            accuracy_loss: 0.0,
            classifier_area: s.area,
            interface_area: s.interface_area,
            total_area: s.total_area,
            total_power: s.total_power,
            margin: s.margin,
        });
    }
    let (_, system, _) = front_paths(&dir, "system");
    if system.exists() {
        let lib = load_library(&dir, &tech)?;
        let points: Vec<ParetoPoint> = read_json(&system)?;
        for p in points.iter().filter(|p| exact_acc.contains_key(&p.k)) {
            let model = load_model(&dir, p.k)?;
            let (x, _) = test_codes(&data, p.k);
            let margin = if model.classes() >= 2 {
                tnn::confidence_margin(&model, Some((&p.assignment, &lib)), &x)?
            } else {
                0
            };
            rows.push(ReportRow {
                design: p.id.clone(),
                k: p.k,
                interface: p.interface,
                accuracy: p.accuracy,
                accuracy_loss: exact_acc[&p.k] - p.accuracy,
                classifier_area: p.classifier_area,
                interface_area: p.interface_area,
                total_area: p.total_area,
                total_power: p.total_power,
                margin,
            });
        }
    }
    write_json(&dir.root.join("report.json"), &rows)?;
    let mut w = csv::Writer::from_path(dir.root.join("report.csv"))?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    let table = render_table(&rows);
    write_text(&dir.root.join("report.md"), &table)?;
    print!("{table}");
    Ok(rows)
}

pub fn render_table(rows: &[ReportRow]) -> String {
    let mut s = String::from(
        "| design | k | interface | accuracy (%) | loss (pp) | classifier area (mm²) | interface area (mm²) | total area (mm²) | total power (mW) | margin |\n\
         |---|---|---|---|---|---|---|---|---|---|\n",
    );
    for r in rows {
        s.push_str(&format!(
            "| {} | {} | {} | {:.2} | {:.2} | {:.3} | {:.3} | {:.3} | {:.3} | {} |\n",
            r.design,
            r.k,
            r.interface,
            100.0 * r.accuracy,
            100.0 * r.accuracy_loss,
            r.classifier_area,
            r.interface_area,
            r.total_area,
            r.total_power,
            r.margin
        ));
    }
    s
}
