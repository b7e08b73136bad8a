use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::ExitCode;

use accesslens::annotation_qa::{parse_submissions, run_qa, truth_from_dictionary, DesignTruth, QaRun, Rule};
use accesslens::catalog::{classifier_agreement, classify_design, Dictionary};
use accesslens::dataset::{validate_file, Dataset, SplitManifest};
use accesslens::detector::load_detections;
use accesslens::evaluation::{evaluate, render_class_table, render_summary_table, EvalParams, EvaluationReport};
use accesslens::recommender::suggestions_for_class;
use accesslens::taxonomy::{export_taxonomy, parse_ic, Category, InaccessibilityClass};
use accesslens_server::{Catalog, ServiceConfig};
use anyhow::{bail, Context};
use serde::Serialize;

use crate::{ClassifyArgs, Command, DictCommand, EvalArgs, QaArgs, SplitArgs};

fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn run(command: Command, cfg: &ServiceConfig) -> anyhow::Result<ExitCode> {
    match command {
        Command::Stats { annotations, json } => {
            let stats = Dataset::load(&annotations)?.stats();
            if json {
                print_json(&stats)?;
            } else {
                print!("{}", stats.render_table());
            }
        }
        Command::Validate { annotations, json } => {
            let report = validate_file(&annotations)?;
            if json {
                print_json(&report)?;
            } else if report.valid {
                println!(
                    "{}: valid ({} images, {} annotations)",
                    annotations.display(),
                    report.images,
                    report.annotations
                );
            } else {
                println!("{}: {} issue(s)", annotations.display(), report.issues.len());
                for issue in &report.issues {
                    println!("  {issue}");
                }
            }
            if !report.valid {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Split(args) => split(&args)?,
        Command::Eval(args) => eval(&args)?,
        Command::Classify(args) => classify(&args, cfg)?,
        Command::Recommend { class, category, json } => recommend(&class, category.as_deref(), json, cfg)?,
        Command::Qa(args) => return qa(&args, cfg),
        Command::Serve => {
            cfg.validate()?;
            accesslens_server::run(cfg)?;
        }
        Command::Taxonomy => print_json(&export_taxonomy())?,
        Command::Dict {
            command: DictCommand::Validate { path, json },
        } => {
            let dict = match path.as_ref().or(cfg.dictionary.as_ref()) {
                Some(p) => Dictionary::load(p).with_context(|| format!("loading {}", p.display()))?,
                None => Dictionary::bundled(),
            };
            let report = dict.report();
            if json {
                print_json(&report)?;
            } else {
                println!("version      {}", report.version);
                println!("designs      {}", report.designs);
                println!("objects      {} ({} with designs)", report.objects, report.objects_with_designs);
                for (c, n) in &report.designs_per_category {
                    println!("  {:<11}{n}", c.as_str());
                }
                let a = report.classifier_agreement;
                println!(
                    "classifier   {}/{} designs agree ({:.1}%)",
                    a.agreeing,
                    a.designs,
                    100.0 * a.ratio
                );
                for w in &report.warnings {
                    println!("warning: {w}");
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn split(args: &SplitArgs) -> anyhow::Result<()> {
    let ds = Dataset::load(&args.annotations)?;
    let (train, val) = ds.split(args.train_fraction, args.seed)?;
    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let (train_file, val_file) = ("train.json", "val.json");
    train.save(args.out_dir.join(train_file))?;
    val.save(args.out_dir.join(val_file))?;
    let manifest = SplitManifest {
        source: args.annotations.display().to_string(),
        seed: args.seed,
        train_fraction: args.train_fraction,
        train_file: train_file.into(),
        validation_file: val_file.into(),
        train_images: train.images().len(),
        validation_images: val.images().len(),
    };
    write_file(
        &args.out_dir.join("split.json"),
        &(serde_json::to_string_pretty(&manifest)? + "\n"),
    )?;
    println!(
        "train {} images, validation {} images -> {}",
        manifest.train_images,
        manifest.validation_images,
        args.out_dir.display()
    );
    Ok(())
}

fn eval_one(gt: &Path, dets: &Path, params: EvalParams) -> anyhow::Result<EvaluationReport> {
    let ds = Dataset::load(gt).with_context(|| format!("loading {}", gt.display()))?;
    let dets = load_detections(dets).with_context(|| format!("loading {}", dets.display()))?;
    Ok(evaluate(&ds, &dets, params)?)
}

fn eval(args: &EvalArgs) -> anyhow::Result<()> {
    let params = EvalParams {
        max_detections: args.max_detections,
    };
    let mut runs = vec![(args.label.clone(), eval_one(&args.ground_truth, &args.detections, params)?)];
    for c in args.compare.chunks(3) {
        let [label, gt, dets] = c else {
            bail!("--compare takes LABEL GT DETECTIONS");
        };
        runs.push((label.clone(), eval_one(Path::new(gt), Path::new(dets), params)?));
    }

    let json = if runs.len() == 1 {
        runs[0].1.to_json()
    } else {
        let map: serde_json::Map<String, serde_json::Value> = runs
            .iter()
            .map(|(l, r)| Ok((l.clone(), serde_json::to_value(r)?)))
            .collect::<anyhow::Result<_>>()?;
        serde_json::to_string_pretty(&map)?
    };
    if let Some(p) = &args.json_out {
        write_file(p, &(json.clone() + "\n"))?;
    }
    if args.json {
        println!("{json}");
    } else {
        let cols: Vec<(&str, &EvaluationReport)> = runs.iter().map(|(l, r)| (l.as_str(), r)).collect();
        print!("{}\n{}", render_class_table(&cols), render_summary_table(&cols));
    }
    Ok(())
}

fn classify(args: &ClassifyArgs, cfg: &ServiceConfig) -> anyhow::Result<()> {
    if args.dictionary {
        let catalog = Catalog::from_config(cfg)?;
        let dict = &catalog.dictionary;
        let agreement = classifier_agreement(dict);
        if args.json {
            return print_json(&agreement);
        }
        for d in dict.designs() {
            let got = classify_design(&d.title, "", &d.tags).categories();
            if got != d.categories() {
                let names = |s: &std::collections::BTreeSet<Category>| {
                    s.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(",")
                };
                println!("{}  {:<40} stored {} got {}", d.design_id, d.title, names(&d.categories()), names(&got));
            }
        }
        println!(
            "agreement {}/{} ({:.1}%)",
            agreement.agreeing,
            agreement.designs,
            100.0 * agreement.ratio
        );
        return Ok(());
    }
    let Some(title) = &args.title else {
        bail!("give a title, or --dictionary");
    };
    let c = classify_design(title, &args.description, &args.tags);
    if args.json {
        return print_json(&c);
    }
    if c.is_unclassified() {
        println!("unclassified");
    }
    for l in &c.labels {
        println!("{:<22}{}", l.label.token(), l.evidence.join(", "));
    }
    Ok(())
}

fn recommend(class: &str, category: Option<&str>, json: bool, cfg: &ServiceConfig) -> anyhow::Result<()> {
    let ic = match class.trim().parse::<u32>() {
        Ok(id) => InaccessibilityClass::from_id(id)?,
        Err(_) => parse_ic(class)?,
    };
    let filter = category.map(str::parse::<Category>).transpose()?;
    let catalog = Catalog::from_config(cfg)?;
    let grouped = suggestions_for_class(ic, &catalog.dictionary, &catalog.mapping)?;
    let categories: Vec<Category> = Category::ALL.into_iter().filter(|c| filter.is_none_or(|f| f == *c)).collect();
    if json {
        let out: serde_json::Map<String, serde_json::Value> = categories
            .iter()
            .map(|c| Ok((c.as_str().to_string(), serde_json::to_value(grouped.group(*c))?)))
            .collect::<anyhow::Result<_>>()?;
        return print_json(&out);
    }
    let objects = catalog.mapping.objects_for(ic).unwrap_or_default().join(", ");
    println!("{} ({objects})", ic.name());
    for c in categories {
        let designs = grouped.group(c);
        println!("{} ({})", c.as_str(), designs.len());
        for d in designs {
            let labels: Vec<String> = d.labels.iter().map(|l| l.token()).collect();
            println!("  {:<12}{:<44}{:<22}{}", d.design_id, d.title, labels.join(","), d.source_url);
        }
    }
    Ok(())
}

fn render_qa(run: &QaRun) -> String {
    let mut out = String::new();
    let rejected: usize = run.rejected_by_rule.values().sum();
    let _ = writeln!(out, "{:<24}{}", "submissions", run.verdicts.len());
    let _ = writeln!(out, "{:<24}{}", "accepted", run.verdicts.len() - rejected);
    let _ = writeln!(out, "{:<24}{}", "rejected", rejected);
    for rule in [Rule::IdenticalIncorrect, Rule::JunkCustomLabel, Rule::FastIncorrect, Rule::OverQuota] {
        let n = run.rejected_by_rule.get(&rule).copied().unwrap_or(0);
        let name = serde_json::to_value(rule).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        let _ = writeln!(out, "  {name:<22}{n}");
    }
    match &run.accuracy {
        Some(a) => {
            let _ = writeln!(
                out,
                "{:<24}{}/{} = {}",
                "accuracy",
                a.correct_count,
                a.valid_count,
                a.percent()
            );
        }
        None => {
            let _ = writeln!(out, "{:<24}n/a", "accuracy");
        }
    }
    let pending = run.consolidated.values().filter(|c| c.needs_reannotation()).count();
    let _ = writeln!(out, "{:<24}{}", "designs to re-annotate", pending);
    out
}

fn qa(args: &QaArgs, cfg: &ServiceConfig) -> anyhow::Result<ExitCode> {
    let text = fs::read_to_string(&args.submissions).with_context(|| format!("reading {}", args.submissions.display()))?;
    let submissions = parse_submissions(&text)?;
    let truth: HashMap<String, DesignTruth> = match &args.truth {
        Some(p) => {
            let t = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&t).with_context(|| format!("parsing {}", p.display()))?
        }
        None => truth_from_dictionary(&Catalog::from_config(cfg)?.dictionary),
    };
    let mut qa_cfg = cfg.qa.clone();
    if let Some(s) = args.fast_seconds {
        qa_cfg.fast_seconds = s;
    }
    if let Some(q) = args.hit_quota {
        qa_cfg.hit_quota = q;
    }
    let run = run_qa(&submissions, &truth, &qa_cfg)?;
    if args.json {
        print_json(&run)?;
    } else {
        print!("{}", render_qa(&run));
    }
    Ok(ExitCode::SUCCESS)
}

