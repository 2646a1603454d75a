use std::collections::HashMap;
use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aoi_core::export::{relation_table, ExportOptions, Outcome, ResultDocument};
use aoi_core::induction::{trace_characteristic, trace_classification};
use aoi_core::rules::Form;
use aoi_core::sqlgen::{gen_schema, task_scripts};
use aoi_core::validate::validate;
use aoi_core::value::Decimal;
use aoi_core::{sql, Database, Dataset, Error, LearningTask, Mode, Relation};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "aoi", version, about = "Attribute-oriented induction over CSV tables and concept hierarchies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn characteristic or classification rules for a task.
    Induce {
        #[command(flatten)]
        task: TaskArgs,
        #[arg(long, value_enum, default_value = "table")]
        output: Output,
        #[arg(long, value_enum, default_value = "quantitative")]
        form: FormArg,
        /// Render rules with logic symbols instead of ASCII words.
        #[arg(long)]
        unicode: bool,
    },
    /// Write the SQL for every stage of a task, plus the schema DDL.
    Gensql {
        #[command(flatten)]
        task: TaskArgs,
        /// Write schema.sql and one file per stage here instead of stdout.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run SQL statements against the CSV tables of a data directory.
    Runsql {
        /// Script to run; reads standard input when absent.
        file: Option<PathBuf>,
        #[arg(long, env = "AOI_DATA_DIR")]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "table")]
        output: SqlOutput,
    },
    /// Check every stage of a task against its generated SQL.
    Validate {
        #[command(flatten)]
        task: TaskArgs,
    },
}

#[derive(Args)]
struct TaskArgs {
    /// Directory holding the fact table CSV and hierarchy_<attr>.csv files.
    #[arg(long, env = "AOI_DATA_DIR")]
    data: PathBuf,
    /// Task JSON file.
    #[arg(long)]
    task: PathBuf,
    /// Start level for an attribute, e.g. birthplace=city. Repeatable.
    #[arg(long = "level", value_name = "ATTR=LEVEL", value_parser = pair)]
    levels: Vec<(String, String)>,
    #[arg(long)]
    attr_threshold: Option<usize>,
    #[arg(long)]
    rel_threshold: Option<usize>,
    #[arg(long)]
    no_simplify: bool,
    /// Leave out overlapping tuples whose d-weight is below this percentage.
    #[arg(long, value_name = "PCT")]
    drop_overlaps: Option<f64>,
    /// Hierarchy file for an attribute, overriding discovery. Repeatable.
    #[arg(long = "hierarchy", value_name = "ATTR=PATH", value_parser = pair)]
    hierarchies: Vec<(String, String)>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Output {
    Table,
    Json,
    Rules,
}

#[derive(Clone, Copy, ValueEnum)]
enum SqlOutput {
    Table,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormArg {
    Qualitative,
    Quantitative,
}

fn pair(s: &str) -> Result<(String, String), String> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() && !v.trim().is_empty() => {
            Ok((k.trim().to_owned(), v.trim().to_owned()))
        }
        _ => Err(format!("expected NAME=VALUE, got {s:?}")),
    }
}

/// Failures, each mapped to the exit code scripts rely on.
enum Failure {
    Mismatch,
    Input(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let message = e.to_string().replace('\n', " ");
        match root(&e) {
            Error::Emit(_) | Error::Generation(_) => Failure::Internal(message),
            _ => Failure::Input(message),
        }
    }
}

fn root(e: &Error) -> &Error {
    match e {
        Error::InFile { source, .. } => root(source),
        other => other,
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::Input(format!("{}: {e}", path.display()))
}

impl TaskArgs {
    fn load(&self) -> Result<(Dataset, LearningTask), Failure> {
        let text = fs::read_to_string(&self.task).map_err(|e| io_failure(&self.task, e))?;
        let mut task = LearningTask::from_json(&text)
            .map_err(|e| e.in_file(self.task.display().to_string()))?;
        for (attr, level) in &self.levels {
            task = task.with_level(attr, level);
        }
        if let Some(n) = self.attr_threshold {
            task.attr_threshold = n;
        }
        if let Some(n) = self.rel_threshold {
            task.rel_threshold = Some(n);
        }
        if self.no_simplify {
            task.simplify = Some(false);
        }
        if let Some(p) = self.drop_overlaps {
            task.drop_overlaps = Some(p);
        }
        task.validate()?;
        let explicit: Vec<(String, PathBuf)> = self
            .hierarchies
            .iter()
            .map(|(a, p)| (a.clone(), PathBuf::from(p)))
            .collect();
        let ds = Dataset::load_dir(&self.data, &task.fact, &explicit)?;
        Ok((ds, task))
    }
}

fn induce(args: &TaskArgs, output: Output, form: FormArg, unicode: bool) -> Result<String, Failure> {
    let (ds, task) = args.load()?;
    let outcome = match task.mode {
        Mode::Characteristic => {
            let trace = trace_characteristic(&ds.db, &ds.trees, &task)?;
            Outcome::Characteristic {
                relation: trace.result().clone(),
                head: trace.concept,
            }
        }
        Mode::Classification => {
            let trace = trace_classification(&ds.db, &ds.trees, &task)?;
            Outcome::Classification {
                head: trace.result.classes[0].0.clone(),
                classified: trace.result,
            }
        }
    };
    let drop_overlaps = match task.drop_overlaps {
        Some(p) => Some(
            p.to_string()
                .parse::<Decimal>()
                .map_err(|e| Failure::Input(format!("drop_overlaps: {e}")))?,
        ),
        None => None,
    };
    let opts = ExportOptions {
        form: match form {
            FormArg::Qualitative => Form::Qualitative,
            FormArg::Quantitative => Form::Quantitative,
        },
        unicode,
        drop_overlaps,
    };
    let doc = ResultDocument::build(&outcome, &opts)?;
    Ok(match output {
        Output::Table => doc.table_text(),
        Output::Json => doc.to_json()?,
        Output::Rules => doc.rules_text(),
    })
}

fn gensql(args: &TaskArgs, out_dir: Option<&Path>) -> Result<String, Failure> {
    let (ds, task) = args.load()?;
    let schema: String = gen_schema(&ds.db, &task.fact, &ds.trees)?
        .into_iter()
        .map(|d| d.text)
        .collect::<Vec<_>>()
        .join("\n");
    let scripts = task_scripts(&ds.db, &ds.trees, &task)?;
    match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
            let write = |name: &str, text: &str| {
                let path = dir.join(name);
                fs::write(&path, text).map_err(|e| io_failure(&path, e))
            };
            write("schema.sql", &schema)?;
            let mut listing = String::from("schema.sql\n");
            for (i, (label, script)) in scripts.iter().enumerate() {
                match script {
                    Ok(s) => {
                        let name = format!("{:02}-{label}.sql", i + 1);
                        write(&name, &s.text)?;
                        listing.push_str(&name);
                        listing.push('\n');
                    }
                    Err(why) => eprintln!("aoi: skipped {label}: {why}"),
                }
            }
            Ok(listing)
        }
        None => {
            let mut out = format!("-- schema\n{schema}");
            for (label, script) in &scripts {
                match script {
                    Ok(s) => out.push_str(&format!("\n-- {label}\n{}", s.text)),
                    Err(why) => out.push_str(&format!("\n-- {label}: skipped, {why}\n")),
                }
            }
            Ok(out)
        }
    }
}

/// Every `*.csv` in `dir` as a table named after its file stem.
fn load_tables(dir: &Path) -> Result<Database, Failure> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_failure(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
        .collect();
    paths.sort();
    let mut db = Database::new();
    for path in paths {
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_owned();
        let file = fs::File::open(&path).map_err(|e| io_failure(&path, e))?;
        db.load_csv(&name, file, &HashMap::new())
            .map_err(|e| e.in_file(path.display().to_string()))?;
    }
    Ok(db)
}

fn relation_json(rel: &Relation) -> serde_json::Value {
    let columns: Vec<&str> = rel.schema().names().collect();
    let rows: Vec<Vec<String>> = rel
        .tuples()
        .iter()
        .map(|t| t.iter().map(ToString::to_string).collect())
        .collect();
    serde_json::json!({ "columns": columns, "rows": rows })
}

fn runsql(file: Option<&Path>, data: &Path, output: SqlOutput) -> Result<String, Failure> {
    let text = match file {
        Some(path) => fs::read_to_string(path).map_err(|e| io_failure(path, e))?,
        None => {
            let mut buf = String::new();
            io::stdin()
                .read_to_string(&mut buf)
                .map_err(|e| Failure::Input(format!("stdin: {e}")))?;
            buf
        }
    };
    let mut db = load_tables(data)?;
    let results = sql::run_script(&text, &mut db)?;
    Ok(match output {
        SqlOutput::Table => results
            .iter()
            .map(relation_table)
            .collect::<Vec<_>>()
            .join("\n"),
        SqlOutput::Json => {
            let all: Vec<serde_json::Value> = results.iter().map(relation_json).collect();
            serde_json::to_string_pretty(&all).map_err(|e| Failure::Internal(e.to_string()))? + "\n"
        }
    })
}

fn run_validate(args: &TaskArgs) -> Result<String, (String, Failure)> {
    let (ds, task) = args.load().map_err(|f| (String::new(), f))?;
    let report = validate(&ds.db, &ds.trees, &task).map_err(|e| (String::new(), e.into()))?;
    let text = report.render();
    if report.passed() {
        Ok(text)
    } else {
        Err((text, Failure::Mismatch))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Induce {
            task,
            output,
            form,
            unicode,
        } => induce(task, *output, *form, *unicode).map_err(|f| (String::new(), f)),
        Command::Gensql { task, out_dir } => gensql(task, out_dir.as_deref()).map_err(|f| (String::new(), f)),
        Command::Runsql { file, data, output } => {
            runsql(file.as_deref(), data, *output).map_err(|f| (String::new(), f))
        }
        Command::Validate { task } => run_validate(task),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err((text, failure)) => {
            print!("{text}");
            match failure {
                Failure::Mismatch => ExitCode::from(1),
                Failure::Input(msg) => {
                    eprintln!("aoi: error: {msg}");
                    ExitCode::from(2)
                }
                Failure::Internal(msg) => {
                    eprintln!("aoi: internal error: {msg}");
                    ExitCode::from(3)
                }
            }
        }
    }
}
