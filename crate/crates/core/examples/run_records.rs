//! Parse a run configuration and write a content-addressed record through the CLI entry point.
use roughsing::io::parse_config;

fn main() -> roughsing::Result<()> {
    let text = r#"{
        "grid": {"n": 2, "M": 64, "L": 4},
        "Omega": {"type": "harmonic", "m": 2},
        "weights": [{"type": "power", "alpha": 0.5}],
        "seed": 7
    }"#;
    let cfg = parse_config(text)?;
    println!("config hash {}", cfg.hash());
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("run.json");
    std::fs::write(&path, text)?;
    let code = roughsing::cli::run([
        "roughsing".as_ref(),
        "weights".as_ref(),
        "--config".as_ref(),
        path.as_os_str(),
        "--out".as_ref(),
        dir.path().as_os_str(),
    ]);
    println!("exit code {code}");
    for run in std::fs::read_dir(dir.path().join("runs"))? {
        let run = run?.path();
        println!("{}", run.file_name().unwrap_or_default().to_string_lossy());
        for entry in std::fs::read_dir(&run)? {
            println!("  {}", entry?.file_name().to_string_lossy());
        }
    }
    Ok(())
}
