//! Model-free stand-in for the reference synthesizer.
//!
//! Usage: `erysegm-stub-adapter [--stub] <request-manifest>`
//!
//! The "synthesize" task copies the input to `reference.png`; "parse_face"
//! labels every pixel as skin. The response manifest is written last, by
//! rename, so a reader never sees it before the files it names.
//!
//! Exit codes: 1 invalid request, 3 io failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use erysegm_core::imaging::{encode_gray_png, encode_png, load_image};
use erysegm_core::pipeline::{SynthRequest, MANIFEST_VERSION, RESPONSE_FILE};
use erysegm_core::ClassMap;
use serde_json::{json, Map, Value};

const REFERENCE: &str = "reference.png";
const LABELMASK: &str = "labelmask.png";
const CLASS_MAP: &str = "class_map.json";

enum Failure {
    Request(String),
    Io(String),
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).filter(|a| a != "--stub").collect();
    let [manifest] = args.as_slice() else {
        eprintln!("usage: erysegm-stub-adapter [--stub] <request-manifest>");
        return ExitCode::from(1);
    };
    match run(Path::new(manifest)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Request(msg)) => {
            eprintln!("invalid request: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("io error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(manifest: &Path) -> Result<(), Failure> {
    let started = Instant::now();
    let text = std::fs::read_to_string(manifest).map_err(|e| Failure::Io(format!("{}: {e}", manifest.display())))?;
    let request: SynthRequest =
        serde_json::from_str(&text).map_err(|e| Failure::Request(format!("{}: {e}", manifest.display())))?;
    request.validate().map_err(Failure::Request)?;

    let out = &request.out_dir;
    std::fs::create_dir_all(out).map_err(|e| Failure::Io(format!("{}: {e}", out.display())))?;
    let input = load_image(&request.input).map_err(|e| Failure::Io(e.to_string()))?;
    let (w, h) = input.dimensions();

    let mut response = Map::new();
    response.insert("version".into(), json!(MANIFEST_VERSION));
    for task in &request.tasks {
        match task.as_str() {
            "synthesize" => {
                encode_png(&input, out.join(REFERENCE)).map_err(|e| Failure::Io(e.to_string()))?;
                response.insert("reference".into(), json!(REFERENCE));
            }
            "parse_face" => {
                let table = ClassMap::face_parsing();
                let skin = table.id("skin").expect("bundled table names skin");
                let labels = vec![skin; w as usize * h as usize];
                encode_gray_png(w, h, &labels, out.join(LABELMASK)).map_err(|e| Failure::Io(e.to_string()))?;
                let classes = serde_json::to_string_pretty(&table).expect("class map serializes");
                write(&out.join(CLASS_MAP), &classes)?;
                response.insert("labelmask".into(), json!(LABELMASK));
                response.insert("class_map".into(), json!(CLASS_MAP));
            }
            other => return Err(Failure::Request(format!("unknown task {other:?}"))),
        }
    }
    response.insert(
        "model_ids".into(),
        json!({ "stub": concat!("erysegm-stub-adapter ", env!("CARGO_PKG_VERSION")) }),
    );
    response.insert("elapsed_s".into(), json!(started.elapsed().as_secs_f64()));

    let text = serde_json::to_string_pretty(&Value::Object(response)).expect("response serializes");
    let tmp: PathBuf = out.join(format!("{RESPONSE_FILE}.tmp"));
    write(&tmp, &text)?;
    std::fs::rename(&tmp, out.join(RESPONSE_FILE)).map_err(|e| Failure::Io(format!("{}: {e}", tmp.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, format!("{text}\n")).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}
