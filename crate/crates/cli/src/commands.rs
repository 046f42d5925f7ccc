use std::fs::File;
use std::io::{self, BufReader, Write};
use std::path::Path;

use semrec_core::cf::{train_als, train_bpr, LatentFactorModel};
use semrec_core::dataset::{dataset_stats, load_interactions_path, IngestConfig, InteractionSet};
use semrec_core::evaluation::{cross_validate, EvalConfig};
use semrec_core::hybrid::{rank_user, Algorithm, RankedList};
use semrec_core::ontology::{compute_ic, parse_obo_path, AnnotationCounts, IcMode, Ontology};
use semrec_core::semantic::{CacheProvenance, SimilarityCache, UserProfile};
use semrec_core::{Error, Result};
use serde_json::json;

use crate::output::{write_file, Staged};
use crate::{
    BuildCacheArgs, CfChoice, Command, DataArgs, EvaluateArgs, IcChoice, OntologyArgs, RecommendArgs,
    RecommendFormat, StatsArgs, StatsFormat, TrainArgs,
};

pub fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::Stats(args) => stats(args),
        Command::BuildCache(args) => build_cache(args),
        Command::Train(args) => train(args),
        Command::Recommend(args) => recommend(args),
        Command::Evaluate(args) => evaluate(args),
    }
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} {} does not exist", path.display())))
    }
}

fn load_ratings(args: &DataArgs) -> Result<InteractionSet> {
    require_file(&args.ratings, "ratings file")?;
    let cfg = IngestConfig {
        delimiter: args.delimiter,
    };
    load_interactions_path(&args.ratings, &cfg)
}

/// Checks flags and paths of the ontology options without reading
/// anything. Returns whether an ontology was given.
fn check_ontology(args: &OntologyArgs, needed: bool) -> Result<bool> {
    let Some(obo) = &args.obo else {
        if needed {
            return Err(Error::Config("this algorithm selection needs --obo".into()));
        }
        return Ok(false);
    };
    require_file(obo, "ontology")?;
    if args.ic == IcChoice::Extrinsic {
        let Some(annotations) = &args.annotations else {
            return Err(Error::Config("--ic extrinsic needs --annotations".into()));
        };
        require_file(annotations, "annotation file")?;
    }
    Ok(true)
}

fn load_ontology(args: &OntologyArgs, delimiter: char) -> Result<Ontology> {
    let obo = args.obo.as_deref().expect("checked by check_ontology");
    let graph = parse_obo_path(obo)?;
    let mode = match (args.ic, &args.annotations) {
        (IcChoice::Extrinsic, Some(path)) => {
            IcMode::Extrinsic(AnnotationCounts::load(BufReader::new(File::open(path)?), delimiter)?)
        }
        _ => IcMode::Intrinsic,
    };
    let onto = compute_ic(graph, &mode)?;
    log::info!(
        "ontology: {} terms, {} is_a edges, IC {}",
        onto.graph().len(),
        onto.graph().num_edges(),
        onto.ic_kind()
    );
    Ok(onto)
}

fn similarities(
    args: &OntologyArgs,
    cache: Option<&Path>,
    ds: &InteractionSet,
    onto: &Ontology,
) -> Result<SimilarityCache> {
    match cache {
        Some(path) => {
            let expected = CacheProvenance::new(onto, args.metric, args.shared_ic);
            SimilarityCache::load(BufReader::new(File::open(path)?), &expected, ds.items())
        }
        None => SimilarityCache::build(ds.items(), onto, args.metric, args.shared_ic),
    }
}

fn stats(args: &StatsArgs) -> Result<()> {
    let ds = load_ratings(&args.data)?;
    let summary = dataset_stats(&ds);
    let mut out = io::stdout().lock();
    match args.format {
        StatsFormat::Table => write!(out, "{summary}")?,
        StatsFormat::Json => {
            serde_json::to_writer_pretty(&mut out, &summary).map_err(io::Error::from)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

fn build_cache(args: &BuildCacheArgs) -> Result<()> {
    check_ontology(&args.ontology, true)?;
    let ds = load_ratings(&args.data)?;
    let onto = load_ontology(&args.ontology, args.data.delimiter)?;
    let cache = SimilarityCache::build(ds.items(), &onto, args.ontology.metric, args.ontology.shared_ic)?;
    write_file(&args.out, |w| cache.save(w))?;
    eprintln!(
        "wrote {} similarities for {} items to {}",
        cache.num_pairs(),
        cache.num_items(),
        args.out.display()
    );
    Ok(())
}

fn train(args: &TrainArgs) -> Result<()> {
    let ds = load_ratings(&args.data)?;
    let model = match args.algorithm {
        CfChoice::Als => train_als(&ds, &args.als.config(args.seed))?,
        CfChoice::Bpr => train_bpr(&ds, &args.bpr.config(args.seed))?,
    };
    write_file(&args.out, |w| model.save(w))?;
    eprintln!(
        "wrote {:?} model ({} users, {} items, {} factors) to {}",
        model.algorithm(),
        model.num_users(),
        model.num_items(),
        model.factors(),
        args.out.display()
    );
    Ok(())
}

fn recommend(args: &RecommendArgs) -> Result<()> {
    let algorithm = args.algorithm;
    if algorithm.cf().is_some() && args.model.is_none() {
        return Err(Error::Config(format!("{algorithm} needs --model")));
    }
    if let Some(path) = &args.model {
        require_file(path, "model")?;
    }
    if let Some(path) = &args.cache {
        require_file(path, "cache")?;
    }
    let has_onto = check_ontology(&args.ontology, algorithm.uses_onto())?;

    let ds = load_ratings(&args.data)?;
    let user = ds
        .users()
        .index_of(&args.user)
        .ok_or_else(|| Error::Lookup(format!("unknown user {:?}", args.user)))?;

    let model = match &args.model {
        Some(path) if algorithm.cf().is_some() => {
            let m = LatentFactorModel::load(BufReader::new(File::open(path)?))?;
            if m.num_users() != ds.num_users() || m.num_items() != ds.num_items() {
                return Err(Error::Validation(format!(
                    "model covers {} users and {} items, the ratings file has {} and {}",
                    m.num_users(),
                    m.num_items(),
                    ds.num_users(),
                    ds.num_items()
                )));
            }
            Some(m)
        }
        _ => None,
    };
    let cache = if algorithm.uses_onto() && has_onto {
        let onto = load_ontology(&args.ontology, args.data.delimiter)?;
        Some(similarities(&args.ontology, args.cache.as_deref(), &ds, &onto)?)
    } else {
        None
    };

    let rated = &ds.by_user()[user];
    let profile = UserProfile::from_ratings(user, rated, args.ranking.weighting);
    let candidates: Vec<usize> = (0..ds.num_items()).filter(|&i| !profile.contains(i)).collect();
    let mut ranked = rank_user(
        &profile,
        &candidates,
        algorithm,
        args.ranking.fusion,
        model.as_ref(),
        cache.as_ref().map(|c| c as _),
    )?;
    if let Some(top) = args.top {
        ranked.entries.truncate(top);
    }

    match &args.out {
        Some(path) => write_file(path, |w| write_ranking(w, &ds, &ranked, args.format)),
        None => write_ranking(&mut io::stdout().lock(), &ds, &ranked, args.format),
    }
}

fn write_ranking(out: &mut dyn Write, ds: &InteractionSet, ranked: &RankedList, format: RecommendFormat) -> Result<()> {
    match format {
        RecommendFormat::Tsv => {
            writeln!(out, "rank\titem\tfs\ts_cf\ts_cb")?;
            for (pos, e) in ranked.entries.iter().enumerate() {
                let s_cf = e.s_cf.map_or_else(String::new, |s| s.to_string());
                writeln!(
                    out,
                    "{}\t{}\t{}\t{s_cf}\t{}",
                    pos + 1,
                    ds.items().id(e.item),
                    e.fs,
                    e.s_cb
                )?;
            }
        }
        RecommendFormat::Json => {
            let rows: Vec<_> = ranked
                .entries
                .iter()
                .enumerate()
                .map(|(pos, e)| {
                    json!({
                        "rank": pos + 1,
                        "item": ds.items().id(e.item),
                        "fs": e.fs,
                        "s_cf": e.s_cf,
                        "s_cb": e.s_cb,
                    })
                })
                .collect();
            serde_json::to_writer_pretty(&mut *out, &rows).map_err(io::Error::from)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

fn parse_algorithms(list: &str) -> Result<Vec<Algorithm>> {
    let algs = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect::<Result<Vec<Algorithm>>>()?;
    if algs.is_empty() {
        return Err(Error::Config("--algorithms is empty".into()));
    }
    Ok(algs)
}

fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let cfg = EvalConfig {
        algorithms: parse_algorithms(&args.algorithms)?,
        als: args.als.config(args.seed),
        bpr: args.bpr.config(args.seed),
        fusion: args.ranking.fusion,
        weighting: args.ranking.weighting,
        k_max: args.k_max,
    };
    cfg.validate()?;
    if args.folds < 2 {
        return Err(Error::Config(format!("--folds must be at least 2, got {}", args.folds)));
    }
    if let Some(path) = &args.cache {
        require_file(path, "cache")?;
    }
    let has_onto = check_ontology(&args.ontology, cfg.needs_onto())?;

    let ds = load_ratings(&args.data)?;
    let (onto, cache) = if cfg.needs_onto() {
        let onto = load_ontology(&args.ontology, args.data.delimiter)?;
        let cache = similarities(&args.ontology, args.cache.as_deref(), &ds, &onto)?;
        (Some(onto), Some(cache))
    } else {
        (None, None)
    };
    let report = cross_validate(&ds, &cfg, args.folds, args.seed, cache.as_ref().map(|c| c as _))?;

    let ontology = match (&onto, has_onto) {
        (Some(onto), _) => json!({
            "obo": args.ontology.obo,
            "checksum": onto.graph().checksum(),
            "ic": onto.ic_kind().to_string(),
            "metric": args.ontology.metric.to_string(),
            "shared_ic": args.ontology.shared_ic.to_string(),
            "cache": args.cache,
        }),
        _ => serde_json::Value::Null,
    };
    let manifest = json!({
        "tool": concat!("semrec ", env!("CARGO_PKG_VERSION")),
        "command": "evaluate",
        "ratings": args.data.ratings,
        "delimiter": args.data.delimiter.to_string(),
        "dataset": dataset_stats(&ds),
        "seed": args.seed,
        "folds": args.folds,
        "k_max": cfg.k_max,
        "algorithms": cfg.algorithm_set(),
        "fusion": cfg.fusion.to_string(),
        "weighting": cfg.weighting.to_string(),
        "als": cfg.als,
        "bpr": cfg.bpr,
        "ontology": ontology,
        "fold_results": report.fold_summaries(),
    });

    let mut staged = Staged::default();
    staged.write(&args.out_dir.join("folds.csv"), |w| report.write_fold_table(w))?;
    staged.write(&args.out_dir.join("aggregate.csv"), |w| report.write_aggregate_table(w))?;
    staged.write(&args.out_dir.join("manifest.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &manifest).map_err(io::Error::from)?;
        writeln!(w)?;
        Ok(())
    })?;
    staged.commit()?;
    eprintln!("wrote evaluation report to {}", args.out_dir.display());
    Ok(())
}
