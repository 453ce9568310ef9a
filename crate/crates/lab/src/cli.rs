//! Command-line interface of the `dirichlet` binary.
//!
//! Exit codes: 0 when every checked property holds, 1 when one is violated,
//! 2 for unreadable or invalid input, 3 when a domain computation did not
//! converge.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use dirichlet_core::bisector::{is_singular_tuple, SingularityOptions};
use dirichlet_core::complexes::ComplexSpec;
use dirichlet_core::complexify::{primary_parasitic, saturate, secondary_parasitic, FixedPoint, ParasiticOptions};
use dirichlet_core::domain::{compute_domain, simplicity_check, DomainOptions};
use dirichlet_core::error::{GeomError, Result};
use dirichlet_core::group::{class_k_audit, GroupPresentation, GroupSpec};
use dirichlet_core::isometry::{classify, make_loxodromic, Isometry};
use dirichlet_core::lorentz::{from_klein, Vector};
use serde::Serialize;
use serde_json::json;

use crate::cyclic::{cyclic_simplicity_experiment, glide_domain_verify, GlideSetup};
use crate::example1::{example1_scan, Example1Config};
use crate::example2::example2_verify;
use crate::genericity::{genericity_scan, GenericityConfig};
use crate::plot::{domain_svg, Plane, Side};
use crate::report::{DomainReport, Report};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VIOLATED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "dirichlet", version, about = "Dirichlet domains of discrete groups of hyperbolic isometries")]
pub struct Cli {
    /// Numerical tolerance for classification and equality checks.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Also write the JSON report to this file.
    #[arg(long, global = true)]
    pub json_out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify every generator and audit elliptic elements.
    Classify {
        group: PathBuf,
        #[arg(long, default_value_t = 3)]
        len_max: usize,
    },
    /// Compute the Dirichlet domain at a base point.
    Domain {
        group: PathBuf,
        /// Klein coordinates, comma separated.
        #[arg(long)]
        base: String,
        #[arg(long, default_value_t = 12)]
        len_max: usize,
    },
    /// Count bisectors through codimension-2 faces and vertices.
    Simplicity {
        group: PathBuf,
        #[arg(long)]
        base: String,
        #[arg(long, default_value_t = 12)]
        len_max: usize,
    },
    /// Random test of whether a tuple of bisector maps is singular.
    Singular {
        group: PathBuf,
        /// Comma-separated words such as `a^-1,a^2,a*b`.
        #[arg(long)]
        triple: String,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// Scan for points where three bisectors of a cyclic group share a geodesic.
    Example1 {
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
    },
    /// Boost and half-turn: triple intersections on the domain boundary.
    Example2 {
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value = "0,0.45,0.1")]
        base: String,
    },
    /// Simplicity of the domain of a cyclic group along the `x1` axis.
    Cyclic {
        /// Multiplier `e^l` of the translation length `l`.
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 0.0)]
        angle: f64,
        /// Use the glide reflection in `x3 = 0` instead of a rotation.
        #[arg(long)]
        glide: bool,
        #[arg(long, default_value = "0.1,0.3,0.1")]
        base: String,
    },
    /// Ranks of random non-cyclic triples and positions of Cartan fixed points.
    Genericity {
        group: PathBuf,
        #[arg(long, default_value_t = 100)]
        triples: usize,
        #[arg(long, default_value_t = 10)]
        points: usize,
        #[arg(long, default_value_t = 3)]
        len_max: usize,
    },
    /// Primary and secondary parasitic intersections of a complex.
    Parasitic { complex: PathBuf },
    /// Render a domain report as SVG.
    Plot {
        report: PathBuf,
        /// Section plane such as `x3=0`; required in dimension 3.
        #[arg(long)]
        plane: Option<String>,
        #[arg(short = 'o', long = "out")]
        out: Option<PathBuf>,
    },
}

/// Outcome of a command: JSON text (or SVG) and the exit code.
pub struct Outcome {
    pub output: String,
    pub code: i32,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| GeomError::InvalidInput(format!("{}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read(path)?).map_err(|e| GeomError::InvalidInput(format!("{}: {e}", path.display())))
}

pub fn load_group(path: &Path, tol: f64) -> Result<GroupPresentation> {
    parse_json::<GroupSpec>(path)?.into_presentation(tol)
}

pub fn parse_klein(s: &str) -> Result<Vector> {
    let xs: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| GeomError::InvalidInput(format!("bad coordinate {t:?}"))))
        .collect::<Result<_>>()?;
    from_klein(&Vector::from_vec(xs))
}

fn base_point(s: &str, dim: usize) -> Result<Vector> {
    let x = parse_klein(s)?;
    if x.len() != dim + 1 {
        return Err(GeomError::DimensionMismatch { expected: dim, found: x.len() - 1 });
    }
    Ok(x)
}

/// Product of `label` and `label^k` factors joined by `*`.
pub fn parse_word(g: &GroupPresentation, word: &str) -> Result<Isometry> {
    let mut out = Isometry::identity(g.dim);
    let word = word.trim();
    if word == "1" {
        return Ok(out);
    }
    for factor in word.split('*') {
        let (label, power) = match factor.split_once('^') {
            Some((l, p)) => (l.trim(), p.trim().parse::<i64>().map_err(|_| GeomError::InvalidInput(format!("bad exponent in {factor:?}")))?),
            None => (factor.trim(), 1),
        };
        let gen = g
            .generators
            .iter()
            .find(|x| x.label == label)
            .ok_or_else(|| GeomError::InvalidInput(format!("unknown generator {label:?}")))?;
        out = out.compose(&gen.isometry.power(power));
    }
    Ok(out)
}

fn report<T: Serialize>(kind: &str, pass: bool, body: T, code: i32) -> Outcome {
    Outcome { output: Report::new(kind, pass, body).to_json(), code }
}

fn domain_options(len_max: usize) -> DomainOptions {
    DomainOptions { len_max, ..DomainOptions::default() }
}

fn converged_code(converged: bool, pass: bool) -> i32 {
    match (converged, pass) {
        (false, _) => EXIT_NOT_CONVERGED,
        (true, true) => EXIT_PASS,
        (true, false) => EXIT_VIOLATED,
    }
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    let tol = cli.tol;
    match &cli.command {
        Command::Classify { group, len_max } => {
            let g = load_group(group, tol)?;
            let classes: Vec<_> = g
                .generators
                .iter()
                .map(|x| json!({"label": x.label, "classification": classify(&x.isometry, tol)}))
                .collect();
            let audit = class_k_audit(&g, *len_max, tol)?;
            Ok(report("classify", true, json!({"generators": classes, "class_k": audit}), EXIT_PASS))
        }
        Command::Domain { group, base, len_max } => {
            let g = load_group(group, tol)?;
            let x = base_point(base, g.dim)?;
            let d = compute_domain(&g, &x, &domain_options(*len_max))?;
            let code = converged_code(d.converged, true);
            Ok(report("domain", d.converged, DomainReport::new(&d), code))
        }
        Command::Simplicity { group, base, len_max } => {
            let g = load_group(group, tol)?;
            let x = base_point(base, g.dim)?;
            let d = compute_domain(&g, &x, &domain_options(*len_max))?;
            let s = simplicity_check(&d);
            let pass = s.simple;
            let findings: Vec<_> = s.codim2.iter().filter(|f| f.bisector_count != 2).cloned().collect();
            let body = json!({"converged": d.converged, "report": s, "findings": findings});
            Ok(report("simplicity", pass, body, converged_code(d.converged, pass)))
        }
        Command::Singular { group, triple, trials } => {
            let g = load_group(group, tol)?;
            let words: Vec<&str> = triple.split(',').collect();
            let elems: Vec<Isometry> = words.iter().map(|w| parse_word(&g, w)).collect::<Result<_>>()?;
            let refs: Vec<&Isometry> = elems.iter().collect();
            let opts = SingularityOptions { trials: *trials, seed: cli.seed, ..SingularityOptions::default() };
            let verdict = is_singular_tuple(&refs, &opts)?;
            Ok(report("singular", true, json!({"tuple": words, "verdict": verdict}), EXIT_PASS))
        }
        Command::Example1 { lambda, budget } => {
            let cfg = Example1Config::new(*lambda, *budget, cli.seed)?;
            let r = example1_scan(&cfg)?;
            let pass = r.pass();
            Ok(report("example1", pass, r, if pass { EXIT_PASS } else { EXIT_VIOLATED }))
        }
        Command::Example2 { t, base } => {
            let x = base_point(base, 3)?;
            let r = example2_verify(*t, &x, tol)?;
            let pass = r.pass();
            Ok(report("example2", pass, r, if pass { EXIT_PASS } else { EXIT_VIOLATED }))
        }
        Command::Cyclic { lambda, angle, glide, base } => {
            if !(*lambda > 1.0) {
                return Err(GeomError::InvalidInput("lambda must exceed 1".into()));
            }
            let x = base_point(base, 3)?;
            let length = lambda.ln();
            if *glide {
                let setup = GlideSetup::new(length, Isometry::identity(3))?;
                let r = match glide_domain_verify(&setup.glide, &x, &DomainOptions::default()) {
                    Err(GeomError::NotConverged(n)) => {
                        return Ok(report("glide", false, json!({"not_converged_at": n}), EXIT_NOT_CONVERGED))
                    }
                    other => other?,
                };
                let pass = r.pass(tol);
                return Ok(report("glide", pass, r, if pass { EXIT_PASS } else { EXIT_VIOLATED }));
            }
            let ep = Vector::from_column_slice(&[1.0, 1.0, 0.0, 0.0]);
            let em = Vector::from_column_slice(&[1.0, -1.0, 0.0, 0.0]);
            let a = make_loxodromic(&ep, &em, length, *angle)?;
            let r = cyclic_simplicity_experiment(&a, &x, &DomainOptions::default())?;
            let code = converged_code(r.converged, r.simple);
            Ok(report("cyclic", r.simple, r, code))
        }
        Command::Genericity { group, triples, points, len_max } => {
            let g = load_group(group, tol)?;
            let cfg = GenericityConfig { max_len: *len_max, triples: *triples, points: *points, seed: cli.seed, ..GenericityConfig::default() };
            let r = genericity_scan(&g, &cfg)?;
            let pass = r.pass();
            Ok(report("genericity", pass, r, if pass { EXIT_PASS } else { EXIT_VIOLATED }))
        }
        Command::Parasitic { complex } => {
            let spec: ComplexSpec = parse_json(complex)?;
            let cartan: Vec<(usize, FixedPoint)> =
                spec.cartan_points()?.into_iter().map(|(f, p)| (f, FixedPoint::Exact(p))).collect();
            let cx = spec.into_complex()?;
            let primary = saturate(&primary_parasitic(&cx, &ParasiticOptions::default())?, &cx)?;
            let secondary = saturate(&secondary_parasitic(&cx, &cartan)?, &cx)?;
            let body = json!({
                "faces": cx.faces().len(),
                "primary": primary.iter().map(|r| r.to_json(&cx)).collect::<Vec<_>>(),
                "secondary": secondary.iter().map(|r| r.to_json(&cx)).collect::<Vec<_>>(),
            });
            Ok(report("parasitic", true, body, EXIT_PASS))
        }
        Command::Plot { report: path, plane, out } => {
            let r: Report<DomainReport> = parse_json(path)?;
            let s = &r.body.summary;
            let plane = match plane {
                Some(p) => Some(p.parse::<Plane>()?),
                None if s.dim == 3 => Some(Plane { axis: 3, value: s.base[3] / s.base[0] }),
                None => None,
            };
            let sides: Vec<Side> =
                s.contributors.iter().map(|c| Side { label: c.word.clone(), normal: c.normal.clone() }).collect();
            let svg = domain_svg(s.dim, &s.base, &sides, plane)?;
            if let Some(o) = out {
                std::fs::write(o, &svg).map_err(|e| GeomError::InvalidInput(format!("{}: {e}", o.display())))?;
                return Ok(Outcome { output: String::new(), code: EXIT_PASS });
            }
            Ok(Outcome { output: svg, code: EXIT_PASS })
        }
    }
}

/// Runs the parsed command, prints its output and returns the exit code.
pub fn run(cli: Cli) -> i32 {
    match execute(&cli) {
        Ok(o) => {
            if !o.output.is_empty() {
                println!("{}", o.output.trim_end());
            }
            if let (Some(path), false) = (&cli.json_out, matches!(cli.command, Command::Plot { .. })) {
                if let Err(e) = std::fs::write(path, o.output.trim_end().to_string() + "\n") {
                    eprintln!("error: {}: {e}", path.display());
                    return EXIT_INPUT;
                }
            }
            o.code
        }
        Err(GeomError::NotConverged(n)) => {
            eprintln!("error: not converged after word length {n}");
            EXIT_NOT_CONVERGED
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn group_file(dir: &Path, name: &str, g: &GroupPresentation) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, serde_json::to_string(&g.to_spec()).unwrap()).unwrap();
        p
    }

    fn cli(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("dirichlet").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn words() {
        let g = fixtures::schottky_pair().unwrap();
        let w = parse_word(&g, "a^-1*b*a").unwrap();
        let a = &g.generators[0].isometry;
        let b = &g.generators[1].isometry;
        assert!(w.distance(&a.inverse().compose(b).compose(a)) < 1e-9);
        assert!(parse_word(&g, "c").is_err());
        assert!(parse_word(&g, "a^x").is_err());
    }

    #[test]
    fn exit_codes() {
        let dir = std::env::temp_dir().join(format!("dirichlet-cli-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let ex2 = group_file(&dir, "ex2.json", &crate::example2::example2_group(1.0).unwrap());
        let ex2s = ex2.to_str().unwrap();
        assert_eq!(execute(&cli(&["simplicity", ex2s, "--base", "0,0.45,0.1"])).unwrap().code, EXIT_VIOLATED);
        assert_eq!(execute(&cli(&["domain", ex2s, "--base", "0,0.45,0.1", "--len-max", "1"])).unwrap().code, EXIT_NOT_CONVERGED);
        assert!(execute(&cli(&["domain", ex2s, "--base", "0,2,0"])).is_err());

        let report = dir.join("domain.json");
        let c = cli(&["--json-out", report.to_str().unwrap(), "domain", ex2s, "--base", "0,0.45,0.1"]);
        assert_eq!(run(c), EXIT_PASS);
        let svg = dir.join("d.svg");
        let c = cli(&["plot", report.to_str().unwrap(), "-o", svg.to_str().unwrap()]);
        assert_eq!(run(c), EXIT_PASS);
        assert!(std::fs::read_to_string(&svg).unwrap().contains("<path"));

        let bad = dir.join("bad.json");
        std::fs::write(&bad, serde_json::to_string(&fixtures::axiom2_violation()).unwrap()).unwrap();
        assert_eq!(run(cli(&["parasitic", bad.to_str().unwrap()])), EXIT_INPUT);
        std::fs::remove_dir_all(&dir).ok();
    }
}
