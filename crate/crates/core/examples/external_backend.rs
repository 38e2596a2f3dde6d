//! Plugs an external removal program into the orchestrator. The program is
//! called as `program input.wav output.wav` with the effect name in
//! `REMFX_EFFECT`; here a shell script that attenuates by half stands in for a
//! neural remover.
//!
//! `cargo run --example external_backend` (needs `sh` and `python3`)

use std::fs;

use remfx::orchestrator::{compose_and_run, load_registry, OrchestratorMode};
use remfx::source::{synthesize_source, SourceFamily, SourceSpec};

const SCRIPT: &str = r#"#!/bin/sh
echo "removing $REMFX_EFFECT" >&2
exec python3 - "$1" "$2" <<'PY'
import struct, sys
data = bytearray(open(sys.argv[1], "rb").read())
# Float32 samples follow the 44-byte header this library writes.
n = (len(data) - 44) // 4
samples = struct.unpack_from("<%df" % n, data, 44)
struct.pack_into("<%df" % n, data, 44, *(0.5 * s for s in samples))
open(sys.argv[2], "wb").write(data)
PY
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let script = dir.path().join("halve.sh");
    fs::write(&script, SCRIPT)?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        fs::set_permissions(&script, fs::Permissions::from_mode(0o755))?;
    }
    // Relative program paths resolve against the config file's directory.
    let config = dir.path().join("backends.json");
    fs::write(
        &config,
        r#"{
  "DST": {"flavor": "identity"},
  "DRC": {"flavor": "identity"},
  "RVB": {"flavor": "external", "command": ["./halve.sh"]},
  "CHS": {"flavor": "identity"},
  "DLY": {"flavor": "identity"}
}"#,
    )?;
    let registry = load_registry(&config)?;

    let clip = synthesize_source(&SourceSpec::synthetic(SourceFamily::DrumHit, 2), 48_000)?;
    let out = compose_and_run(&clip, &OrchestratorMode::all(7), &registry, None, None);
    match out {
        Ok(c) => println!("applied {:?}; peak {:.3} -> {:.3}", c.applied, clip.peak(), c.output.peak()),
        Err(e) => println!("removal failed: {e}"),
    }
    Ok(())
}
