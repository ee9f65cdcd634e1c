use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use petal_core::certificate::{self, orourke_certificate};
use petal_core::io::{PrismatoidDocument, RunReport, Scene, Viewport};
use petal_core::model::Band;
use petal_core::overlap::check_overlap;
use petal_core::petal::{develop, ChoiceSpace, PetalChoice};
use petal_core::search::{search, Objective, SearchConfig};
use petal_core::tall::{lemma_report, tall_report};
use petal_core::{instances, Point2, Prismatoid, TolerancePolicy};
use rayon::prelude::*;

/// Petal unfoldings of prismatoids.
///
/// Exit status: 0 for a positive verdict, 1 for a negative one, 2 for
/// invalid input.
#[derive(Parser)]
#[command(name = "petal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Input {
    /// Prismatoid JSON file; a bundled fixture name such as `pc.json` also works.
    file: PathBuf,
    /// Relative tolerance for sign decisions.
    #[arg(long, default_value_t = 1e-9)]
    eps: f64,
    /// Evaluate straight-line predicates exactly on the decimal inputs.
    #[arg(long)]
    exact: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the input and report side-face obtuseness.
    Validate(Input),
    /// Report the band of side faces and the fans.
    Band(Input),
    /// Count petal choices, optionally listing or sampling them.
    Enumerate {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        list: bool,
        /// Print this many uniformly sampled choices.
        #[arg(long, requires = "seed")]
        sample: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Develop petal unfoldings and check them for overlap.
    Unfold {
        #[command(flatten)]
        input: Input,
        #[arg(long, conflicts_with = "all", required_unless_present = "all")]
        choice: Option<String>,
        #[arg(long)]
        all: bool,
    },
    /// Validity, obtuseness, certificate, tallness and overlap in one report.
    Check(Input),
    /// Emit the wedge and diamond at a base vertex.
    Regions {
        #[command(flatten)]
        input: Input,
        /// 1-based base vertex.
        #[arg(long = "i")]
        i: usize,
    },
    /// Check that no wedge meets a B-triangle or another diamond.
    Certificate(Input),
    /// Evaluate the tallness bound.
    Tall {
        #[command(flatten)]
        input: Input,
        /// Also check the three supporting inequalities.
        #[arg(long)]
        lemmas: bool,
    },
    /// Descend towards a cyclic base while keeping the certificate failing.
    Search {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ObjectiveArg::Cyclic)]
        objective: ObjectiveArg,
        #[arg(long)]
        symmetry_lock: bool,
        #[arg(long, default_value_t = 10_000)]
        max_iters: usize,
        /// Write the resulting prismatoid document here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw a layout and/or regions as SVG.
    Render {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        svg: PathBuf,
        /// Petal choice to draw; the first choice when omitted and no regions are given.
        #[arg(long)]
        choice: Option<String>,
        /// 1-based base vertices whose wedges to draw.
        #[arg(long, value_delimiter = ',')]
        wedges: Vec<usize>,
        /// 1-based base vertices whose diamonds to draw.
        #[arg(long, value_delimiter = ',')]
        diamonds: Vec<usize>,
        /// Also draw the quarter-plane at this 1-based base vertex.
        #[arg(long)]
        quarter: Option<usize>,
        /// `xmin,ymin,xmax,ymax`.
        #[arg(long, value_delimiter = ',', num_args = 4)]
        viewport: Vec<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Cyclic,
}

fn policy(input: &Input) -> Result<TolerancePolicy> {
    let mut p = TolerancePolicy::default().with_eps_predicate(input.eps);
    if input.exact {
        p = p.exact();
    }
    if !p.is_valid() {
        anyhow::bail!("tolerances must be positive");
    }
    Ok(p)
}

fn read_document(path: &Path) -> Result<(String, PrismatoidDocument)> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            match instances::ALL.iter().find(|(name, _)| *name == stem) {
                Some((_, json)) if !path.exists() => json.to_string(),
                _ => return Err(anyhow::Error::new(e).context(format!("reading {}", path.display()))),
            }
        }
    };
    let doc = PrismatoidDocument::from_json(&text)?;
    let name = doc
        .name
        .clone()
        .unwrap_or_else(|| path.file_stem().and_then(|s| s.to_str()).unwrap_or("input").to_string());
    Ok((name, doc))
}

struct Loaded {
    name: String,
    p: Prismatoid,
    band: Band,
    policy: TolerancePolicy,
}

fn load(input: &Input) -> Result<Loaded> {
    let policy = policy(input)?;
    let (name, doc) = read_document(&input.file)?;
    let p = doc.to_prismatoid(&policy)?;
    let band = Band::build(&p, &policy)?;
    Ok(Loaded { name, p, band, policy })
}

fn parse_choice(spec: &str, space: &ChoiceSpace) -> Result<PetalChoice> {
    let c: PetalChoice = spec.parse()?;
    space.check(&c)?;
    Ok(c)
}

fn report(command: &str, name: &str) -> RunReport {
    RunReport { command: command.into(), instance: Some(name.into()), ..Default::default() }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn print(r: &RunReport) {
    println!("{}", serde_json::to_string_pretty(r).expect("report serializes"));
}

fn verdict(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

/// Overlap-free check of every petal layout, in parallel; returns the
/// overlapping choices in enumeration order.
fn overlapping_choices(l: &Loaded) -> Result<(u128, Vec<(PetalChoice, String)>)> {
    let space = ChoiceSpace::new(&l.band);
    let count = space.count();
    let total = u64::try_from(count).context("too many petal choices")?;
    let hits = (0..total)
        .into_par_iter()
        .map(|k| {
            let c = space.nth(k as u128).expect("index below count");
            let layout = develop(&l.p, &l.band, &c, &l.policy)?;
            let r = check_overlap(&layout, &l.policy);
            Ok(r.witnesses.first().map(|w| (c, format!("{} overlaps {} near {}", w.faces.0, w.faces.1, w.point))))
        })
        .collect::<Result<Vec<_>, petal_core::petal::PetalError>>()?;
    Ok((count, hits.into_iter().flatten().collect()))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Validate(input) => {
            let t = Instant::now();
            let l = load(&input)?;
            let nb = l.band.nonobtuse_report(&l.p, petal_core::model::default_obtuse_eps(&l.policy), &l.policy);
            let mut r = report("validate", &l.name);
            r.verdicts.valid = Some(true);
            r.verdicts.nonobtuse = Some(nb.nonobtuse);
            r.counts.insert("n".into(), l.p.n() as u128);
            r.counts.insert("m".into(), l.p.m() as u128);
            r.witnesses = nb.violations.iter().map(|v| format!("{} at {}: {:.4} deg", v.face, v.corner, v.angle.to_degrees())).collect();
            r.details = json!({ "z": l.p.z, "maxFaceAngleDeg": l.band.max_face_angle(&l.p).to_degrees() });
            r.timings.insert("total".into(), ms(t));
            print(&r);
            Ok(ExitCode::SUCCESS)
        }
        Command::Band(input) => {
            let l = load(&input)?;
            let mut r = report("band", &l.name);
            r.verdicts.valid = Some(true);
            let angles = l.band.face_angles(&l.p);
            let faces: Vec<_> = l
                .band
                .faces
                .iter()
                .zip(&angles)
                .map(|(f, a)| {
                    json!({
                        "face": f.id().to_string(),
                        "vertices": l.band.face_vertices(f).map(|v| v.to_string()),
                        "anglesDeg": a.map(f64::to_degrees),
                    })
                })
                .collect();
            let b_count = l.band.faces.iter().filter(|f| matches!(f, petal_core::model::SideFace::BTriangle { .. })).count();
            r.counts.insert("bTriangles".into(), b_count as u128);
            r.counts.insert("aTriangles".into(), (l.band.faces.len() - b_count) as u128);
            r.details = json!({
                "faces": faces,
                "fanSizes": l.band.fan_sizes(),
                "maxFaceAngleDeg": l.band.max_face_angle(&l.p).to_degrees(),
            });
            print(&r);
            Ok(ExitCode::SUCCESS)
        }
        Command::Enumerate { input, list, sample, seed } => {
            let l = load(&input)?;
            let space = ChoiceSpace::new(&l.band);
            if list {
                for c in space.iter() {
                    println!("{c}");
                }
                return Ok(ExitCode::SUCCESS);
            }
            if let Some(k) = sample {
                use rand::SeedableRng;
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.expect("clap requires --seed"));
                for _ in 0..k {
                    println!("{}", space.sample(&mut rng));
                }
                return Ok(ExitCode::SUCCESS);
            }
            let mut r = report("enumerate", &l.name);
            r.counts.insert("choices".into(), space.count());
            r.details = json!({ "fanSizes": l.band.fan_sizes(), "m": l.p.m() });
            print(&r);
            Ok(ExitCode::SUCCESS)
        }
        Command::Unfold { input, choice, all } => {
            let t = Instant::now();
            let l = load(&input)?;
            let space = ChoiceSpace::new(&l.band);
            let mut r = report("unfold", &l.name);
            let overlapping = if all {
                let (count, hits) = overlapping_choices(&l)?;
                r.counts.insert("layouts".into(), count);
                r.counts.insert("overlapping".into(), hits.len() as u128);
                r.witnesses = hits.iter().map(|(c, w)| format!("{c}: {w}")).collect();
                !hits.is_empty()
            } else {
                let c = parse_choice(choice.as_deref().expect("clap requires one"), &space)?;
                let layout = develop(&l.p, &l.band, &c, &l.policy)?;
                let o = check_overlap(&layout, &l.policy);
                r.counts.insert("layouts".into(), 1);
                r.counts.insert("overlapping".into(), o.overlapping as u128);
                r.witnesses = o.witnesses.iter().map(|w| format!("{} overlaps {} near {}", w.faces.0, w.faces.1, w.point)).collect();
                r.details = json!({ "choice": c.to_string(), "layout": layout, "overlap": o });
                o.overlapping
            };
            r.verdicts.overlaps = Some(overlapping);
            r.timings.insert("total".into(), ms(t));
            print(&r);
            Ok(verdict(!overlapping))
        }
        Command::Check(input) => {
            let t = Instant::now();
            let l = load(&input)?;
            let mut r = report("check", &l.name);
            r.verdicts.valid = Some(true);
            let nb = l.band.nonobtuse_report(&l.p, petal_core::model::default_obtuse_eps(&l.policy), &l.policy);
            r.verdicts.nonobtuse = Some(nb.nonobtuse);
            match orourke_certificate(&l.p, &l.band, &l.policy) {
                Ok(c) => {
                    r.verdicts.certificate = Some(c.holds);
                    r.witnesses.extend(c.witness().map(|w| format!("certificate: {w}")));
                }
                Err(e) => r.witnesses.push(format!("certificate: {e}")),
            }
            let tr = tall_report(&l.p);
            r.verdicts.tall = Some(tr.is_tall);
            let (count, hits) = overlapping_choices(&l)?;
            r.counts.insert("layouts".into(), count);
            r.counts.insert("overlapping".into(), hits.len() as u128);
            r.witnesses.extend(hits.iter().map(|(c, w)| format!("{c}: {w}")));
            r.verdicts.overlaps = Some(!hits.is_empty());
            r.details = json!({ "bound": tr.bound, "z": tr.z });
            r.timings.insert("total".into(), ms(t));
            print(&r);
            Ok(verdict(hits.is_empty()))
        }
        Command::Regions { input, i } => {
            let l = load(&input)?;
            if i == 0 || i > l.p.n() {
                anyhow::bail!("--i must be between 1 and {}", l.p.n());
            }
            let fr = certificate::frames(&l.p, &l.band, &l.policy)?;
            let f = fr[i - 1];
            let mut r = report("regions", &l.name);
            r.details = json!({
                "frame": f,
                "thetaDeg": f.theta.to_degrees(),
                "wedge": f.wedge(),
                "diamond": f.diamond(),
                "rays": f.rays(),
                "perpendicularRays": f.perpendicular_rays(),
            });
            print(&r);
            Ok(ExitCode::SUCCESS)
        }
        Command::Certificate(input) => {
            let t = Instant::now();
            let l = load(&input)?;
            let c = orourke_certificate(&l.p, &l.band, &l.policy)?;
            let mut r = report("certificate", &l.name);
            r.verdicts.certificate = Some(c.holds);
            r.witnesses = c.failures.iter().map(ToString::to_string).collect();
            r.details = json!({
                "witness": c.witness().map(ToString::to_string),
                "maxPenetrationAngleDeg": c.max_penetration_angle.to_degrees(),
                "failures": c.failures,
            });
            r.timings.insert("total".into(), ms(t));
            print(&r);
            if let Some(w) = c.witness() {
                eprintln!("certificate fails: {w}");
            }
            Ok(verdict(c.holds))
        }
        Command::Tall { input, lemmas } => {
            let l = load(&input)?;
            let tr = tall_report(&l.p);
            let mut r = report("tall", &l.name);
            r.verdicts.tall = Some(tr.is_tall);
            let mut ok = tr.is_tall;
            let mut details = serde_json::to_value(&tr)?;
            if lemmas {
                let lr = lemma_report(&l.p, &l.band, &l.policy)?;
                ok &= lr.all_hold;
                details["lemmas"] = serde_json::to_value(&lr)?;
            }
            for w in &tr.warnings {
                eprintln!("warning: {w}");
            }
            r.details = details;
            print(&r);
            Ok(verdict(ok))
        }
        Command::Search { input, seed, objective, symmetry_lock, max_iters, out } => {
            let t = Instant::now();
            let l = load(&input)?;
            let cfg = SearchConfig {
                seed,
                max_iters,
                symmetry_lock,
                objective: match objective {
                    ObjectiveArg::Cyclic => Objective::CyclicBase,
                },
                ..Default::default()
            };
            let res = search(&l.p, &cfg)?;
            let mut r = report("search", &l.name);
            r.verdicts.nonobtuse = Some(res.constraints_satisfied);
            r.verdicts.certificate = Some(!res.certificate_fails);
            r.counts.insert("iterations".into(), res.iterations as u128);
            r.witnesses.extend(res.witness.clone());
            r.details = json!({
                "objectiveValue": res.objective_value,
                "objectiveDeg": res.objective_value.to_degrees(),
                "penetrationAngleDeg": res.penetration_angle.to_degrees(),
                "stopReason": res.stop_reason,
                "trace": res.trace,
                "result": PrismatoidDocument::from_prismatoid(&res.prismatoid, Some(format!("{}-search", l.name)), None),
            });
            r.timings.insert("total".into(), ms(t));
            if let Some(path) = out {
                let doc = PrismatoidDocument::from_prismatoid(
                    &res.prismatoid,
                    Some(format!("{}-search", l.name)),
                    Some(format!("search from {} with seed {seed}", l.name)),
                );
                std::fs::write(&path, doc.to_json()).with_context(|| format!("writing {}", path.display()))?;
            }
            print(&r);
            Ok(verdict(res.constraints_satisfied && res.certificate_fails))
        }
        Command::Render { input, svg, choice, wedges, diamonds, quarter, viewport } => {
            let l = load(&input)?;
            let space = ChoiceSpace::new(&l.band);
            let has_regions = !(wedges.is_empty() && diamonds.is_empty() && quarter.is_none());
            let mut scene = Scene::default();
            if choice.is_some() || !has_regions {
                let c = match &choice {
                    Some(s) => parse_choice(s, &space)?,
                    None => space.nth(0).expect("at least one choice"),
                };
                scene = Scene::from_layout(&develop(&l.p, &l.band, &c, &l.policy)?);
            }
            let n = l.p.n();
            let check = |k: usize| {
                if k == 0 || k > n {
                    Err(anyhow::anyhow!("base vertex {k} out of range 1..={n}"))
                } else {
                    Ok(k - 1)
                }
            };
            if has_regions {
                let fr = certificate::frames(&l.p, &l.band, &l.policy)?;
                for k in wedges {
                    scene = scene.with_region(format!("V_{k}"), fr[check(k)?].wedge());
                }
                for k in diamonds {
                    scene = scene.with_region(format!("D_{k}"), fr[check(k)?].diamond());
                }
                if let Some(k) = quarter {
                    let i = check(k)?;
                    let b = l.p.base_xy();
                    let (e1, e2) = (b[(i + 1) % n] - b[i], b[(i + n - 1) % n] - b[i]);
                    let s = petal_core::region::ConvexRegion::new(vec![
                        petal_core::region::HalfPlane::behind(b[i], -e1)?,
                        petal_core::region::HalfPlane::behind(b[i], -e2)?,
                    ]);
                    scene = scene.with_region(format!("S_{k}"), s.into());
                }
            }
            if !viewport.is_empty() {
                scene.viewport = Some(Viewport { min: Point2::new(viewport[0], viewport[1]), max: Point2::new(viewport[2], viewport[3]) });
            } else if has_regions && scene.faces.is_empty() {
                let pts: Vec<Point2> = l.p.base_xy().into_iter().chain(certificate::frames(&l.p, &l.band, &l.policy)?.iter().flat_map(|f| [f.aj, f.ak])).collect();
                scene.viewport = Viewport::around(pts, 0.5);
            }
            let text = scene.to_svg()?;
            std::fs::write(&svg, text).with_context(|| format!("writing {}", svg.display()))?;
            let mut r = report("render", &l.name);
            r.counts.insert("faces".into(), scene.faces.len() as u128);
            r.counts.insert("regions".into(), scene.regions.len() as u128);
            print(&r);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
