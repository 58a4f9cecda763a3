use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::Resolved;
use crate::data::{load_folder, LabeledDataset, Standardization};
use crate::error::{Error, Result};
use crate::model::{Checkpoint, Mode, Model};
use crate::similarity::{class_prototypes, reference_report, SimilarityReport};
use crate::train::{ablate, evaluate, Trainer};
use crate::viz::{parse_hex, render_choropleth, ColorScale, RegionMap};

pub(super) fn dispatch(name: &str, resolved: &Resolved, usage: &dyn Fn() -> String) -> Result<()> {
    let cfg = &resolved.config;
    let out = cfg.out_dir();
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let echo = serde_json::to_string_pretty(cfg)? + "\n";
    write(&out.join("run-config.json"), echo.as_bytes())?;
    let ctx = Ctx {
        resolved,
        out,
        usage,
    };
    match name {
        "train" => ctx.train(),
        "eval" => ctx.eval(),
        "ablate" => ctx.ablate(),
        "extract" => ctx.extract(),
        "compare" => ctx.compare(),
        "synth" => ctx.synth(),
        "render" => ctx.render(),
        other => unreachable!("unknown subcommand {other}"),
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

struct Ctx<'a> {
    resolved: &'a Resolved,
    out: PathBuf,
    usage: &'a dyn Fn() -> String,
}

impl Ctx<'_> {
    fn cfg(&self) -> &super::RunConfig {
        &self.resolved.config
    }

    fn require<'v>(&self, value: &'v Option<String>, flag: &str) -> Result<&'v str> {
        value
            .as_deref()
            .ok_or_else(|| Error::Config(format!("missing --{flag}\n{}", (self.usage)())))
    }

    /// The full dataset from `--data` or `--synth`, resized to the model input.
    fn dataset(&self) -> Result<LabeledDataset> {
        let cfg = self.cfg();
        match (&cfg.data, cfg.synth_spec()?) {
            (Some(_), Some(_)) => Err(Error::Config(
                "pass either --data or --synth, not both".into(),
            )),
            (Some(root), None) => {
                let load = load_folder(root, Some(cfg.input_size()?))?;
                for s in &load.skipped {
                    eprintln!("skipped {}: {}", s.path.display(), s.reason);
                }
                Ok(load.dataset)
            }
            (None, Some(spec)) => {
                let ds = spec.generate()?;
                if (spec.size, spec.size) != cfg.input_size()? {
                    return Err(Error::Config(format!(
                        "synthetic images are {0}x{0} but the model input is {1:?}",
                        spec.size,
                        cfg.input_size()?
                    )));
                }
                Ok(ds)
            }
            (None, None) => Err(Error::Config(format!(
                "no dataset: pass --data <root> or --synth KEY=VALUE...\n{}",
                (self.usage)()
            ))),
        }
    }

    fn split(&self, ds: &LabeledDataset) -> Result<(LabeledDataset, LabeledDataset)> {
        ds.split(self.cfg().train_fraction, self.cfg().seed)
    }

    fn select(&self, ds: LabeledDataset, default: &str) -> Result<LabeledDataset> {
        match self.cfg().split.as_deref().unwrap_or(default) {
            "all" => Ok(ds),
            "train" => Ok(self.split(&ds)?.0),
            _ => Ok(self.split(&ds)?.1),
        }
    }

    fn trainer(&self, standardization: Standardization) -> Trainer {
        let cfg = self.cfg();
        Trainer {
            config: cfg.train_config(),
            standardization,
            augment: cfg.augment.then(|| cfg.augment_spec()),
            checkpoint: None,
            workers: Some(cfg.workers),
        }
    }

    fn train(&self) -> Result<()> {
        let cfg = self.cfg();
        let ds = self.dataset()?;
        let (train, test) = self.split(&ds)?;
        let stats = Standardization::compute(&train)?;
        stats.save(self.out.join("stats.json"))?;
        let mut model = Model::build(cfg.model_config(ds.num_classes(), cfg.scheme)?, cfg.seed)?;
        let mut trainer = self.trainer(stats);
        let ckpt = self.out.join("model.ckpt");
        trainer.checkpoint = Some(ckpt.clone());
        let history = trainer.train(&mut model, &train, &test)?;
        history.write_csv(self.out.join("history.csv"))?;
        let best = history.best().expect("at least one epoch");
        println!(
            "trained {} epochs on {} images; best test accuracy {:.4} at epoch {} -> {}",
            history.len(),
            train.len(),
            best.test_acc,
            best.epoch,
            ckpt.display()
        );
        Ok(())
    }

    fn ablate(&self) -> Result<()> {
        let cfg = self.cfg();
        let schemes = cfg.scheme_list()?;
        let ds = self.dataset()?;
        let (train, test) = self.split(&ds)?;
        let stats = Standardization::compute(&train)?;
        stats.save(self.out.join("stats.json"))?;
        let base = cfg.model_config(ds.num_classes(), cfg.scheme)?;
        let mut trainer = self.trainer(stats);
        let mut report = crate::train::AblationReport::default();
        for scheme in schemes {
            trainer.checkpoint = Some(self.out.join(format!("scheme-{scheme}.ckpt")));
            let part = ablate(&base, &trainer, &train, &test, &[scheme], cfg.seed)?;
            part.entries[0]
                .history
                .write_csv(self.out.join(format!("history-{scheme}.csv")))?;
            report.entries.extend(part.entries);
        }
        report.write_csv(self.out.join("ablation.csv"))?;
        print!("{}", report.to_csv());
        Ok(())
    }

    /// Loads `--checkpoint` for `num_classes`, rejecting explicit model flags
    /// that disagree with the stored configuration.
    fn load_model(&self, ds: &LabeledDataset) -> Result<(Model, Standardization)> {
        let cfg = self.cfg();
        let path = self.require(&cfg.checkpoint, "checkpoint")?;
        let ckpt = Checkpoint::read(path)?;
        let stored = ckpt.config().clone();
        let explicit = |k: &str| self.resolved.explicit.contains(k);
        let mismatch =
            |what: String| Err(Error::ShapeMismatch(format!("checkpoint {path}: {what}")));
        if explicit("scheme") && cfg.scheme != stored.se_scheme {
            return mismatch(format!(
                "stored scheme {}, requested {}",
                stored.se_scheme, cfg.scheme
            ));
        }
        if explicit("model") && cfg.model != stored.scale {
            return mismatch(format!(
                "stored scale {}, requested {}",
                stored.scale, cfg.model
            ));
        }
        if stored.num_classes != ds.num_classes() {
            return mismatch(format!(
                "trained for {} classes, dataset has {}",
                stored.num_classes,
                ds.num_classes()
            ));
        }
        if Some(stored.input_size) != ds.image_size() {
            return mismatch(format!(
                "input size {:?}, dataset images are {:?}",
                stored.input_size,
                ds.image_size().unwrap_or_default()
            ));
        }
        let mut model = Model::build(stored, 0)?;
        model.load_weights(&ckpt)?;
        model.set_mode(Mode::Inference);
        let stats = ckpt
            .standardization()
            .cloned()
            .unwrap_or_else(Standardization::identity);
        Ok((model, stats))
    }

    /// Dataset for checkpoint commands, resized to the stored input size.
    fn checkpoint_dataset(&self) -> Result<LabeledDataset> {
        let cfg = self.cfg();
        if cfg.data.is_some() && !self.resolved.explicit.contains("image_size") {
            if let Some(path) = &cfg.checkpoint {
                let (h, w) = Checkpoint::read(path)?.config().input_size;
                let load = load_folder(cfg.data.as_deref().expect("checked"), Some((h, w)))?;
                return Ok(load.dataset);
            }
        }
        self.dataset()
    }

    fn eval(&self) -> Result<()> {
        let ds = self.checkpoint_dataset()?;
        let (mut model, stats) = self.load_model(&ds)?;
        let mut subset = self.select(ds, "test")?;
        stats.apply_dataset(&mut subset);
        let acc = evaluate(&mut model, &subset, self.cfg().batch_size)?;
        let body = serde_json::json!({ "accuracy": acc, "items": subset.len() });
        write(
            &self.out.join("eval.json"),
            (serde_json::to_string_pretty(&body)? + "\n").as_bytes(),
        )?;
        println!("accuracy {acc:.4} on {} images", subset.len());
        Ok(())
    }

    /// Features `[N, D]` of the selected split plus its labels.
    fn features(&self, default_split: &str) -> Result<(LabeledDataset, crate::tensor::Tensor)> {
        let ds = self.checkpoint_dataset()?;
        let (model, stats) = self.load_model(&ds)?;
        let mut subset = self.select(ds, default_split)?;
        stats.apply_dataset(&mut subset);
        let mut rows = Vec::with_capacity(subset.len() * model.feature_dim());
        let indices: Vec<usize> = (0..subset.len()).collect();
        for chunk in indices.chunks(self.cfg().batch_size) {
            let (batch, _) = subset.batch(chunk)?;
            rows.extend_from_slice(model.extract_features(&batch)?.data());
        }
        let features = crate::tensor::Tensor::new(&[subset.len(), model.feature_dim()], rows)?;
        Ok((subset, features))
    }

    fn extract(&self) -> Result<()> {
        let (ds, features) = self.features("all")?;
        let d = features.shape()[1];
        let mut csv = String::from("source,class");
        for j in 0..d {
            let _ = write!(csv, ",f{j}");
        }
        csv.push('\n');
        for (item, row) in ds.items().iter().zip(features.data().chunks(d)) {
            let _ = write!(csv, "{},{}", item.source, ds.class_names()[item.label]);
            for v in row {
                let _ = write!(csv, ",{v}");
            }
            csv.push('\n');
        }
        write(&self.out.join("features.csv"), csv.as_bytes())?;
        let protos = class_prototypes(&features, &ds.labels(), ds.class_names())?;
        write(
            &self.out.join("prototypes.json"),
            (serde_json::to_string_pretty(&protos)? + "\n").as_bytes(),
        )?;
        println!(
            "{} feature vectors of dimension {d}, {} prototypes",
            ds.len(),
            protos.len()
        );
        Ok(())
    }

    fn compare(&self) -> Result<()> {
        let cfg = self.cfg();
        let reference = self.require(&cfg.reference, "reference")?.to_string();
        let (ds, features) = self.features("all")?;
        ds.label_of(&reference)?;
        let protos = class_prototypes(&features, &ds.labels(), ds.class_names())?;
        let report = reference_report(&protos, &reference, cfg.normalize)?;
        report.write_csv(self.out.join("report.csv"))?;
        print!("{}", report.to_csv());
        if let Some(map) = &cfg.map {
            self.render_maps(&report, &RegionMap::load(map)?)?;
        }
        Ok(())
    }

    fn render_maps(&self, report: &SimilarityReport, map: &RegionMap) -> Result<()> {
        let cfg = self.cfg();
        let (low, high) = (parse_hex(&cfg.low)?, parse_hex(&cfg.high)?);
        for metric in cfg.metrics()? {
            let mut scale = ColorScale::default_for(metric, report);
            if let Some(domain) = cfg.domain_range()? {
                scale = ColorScale::new(metric, domain, low, high)?;
            }
            scale.low = low;
            scale.high = high;
            let svg = render_choropleth(report, map, &scale)?;
            let path = self.out.join(format!("choropleth-{metric}.svg"));
            write(&path, svg.as_bytes())?;
            println!("wrote {}", path.display());
        }
        Ok(())
    }

    fn synth(&self) -> Result<()> {
        let cfg = self.cfg();
        let spec = cfg.synth_spec()?.ok_or_else(|| {
            Error::Config(format!(
                "synth needs --synth KEY=VALUE...\n{}",
                (self.usage)()
            ))
        })?;
        let ds = spec.write_tree(&self.out)?;
        write(
            &self.out.join("synth-spec.json"),
            (serde_json::to_string_pretty(&spec)? + "\n").as_bytes(),
        )?;
        println!(
            "wrote {} images in {} classes to {}",
            ds.len(),
            ds.num_classes(),
            self.out.display()
        );
        Ok(())
    }

    fn render(&self) -> Result<()> {
        let cfg = self.cfg();
        let report = SimilarityReport::read_csv(self.require(&cfg.report, "report")?)?;
        let map = RegionMap::load(self.require(&cfg.map, "map")?)?;
        self.render_maps(&report, &map)
    }
}
