//! Exercises the GPU probe against stand-in executables. Kept as a single
//! test so the stub scripts never race each other.

use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};

use energy_usage_core::meter::{GpuProbe, PowerSource};

fn stub(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, format!("#!/bin/sh\n{body}\n")).unwrap();
    std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
    path
}

#[test]
fn gpu_probe_against_stub_utilities() {
    let dir = tempfile::tempdir().unwrap();

    let two_gpus = stub(
        dir.path(),
        "two",
        r#"[ "$1" = "--query-gpu=power.draw" ] && [ "$2" = "--format=csv,noheader,nounits" ] || exit 9
printf '45.2\n30.1\n'"#,
    );
    let probe = GpuProbe::with_program(&two_gpus);
    let watts = probe.read().unwrap();
    assert!((watts - 75.3).abs() < 1e-9, "{watts}");
    let sample = probe.read_sample(0.1).unwrap();
    assert_eq!(sample.source, PowerSource::Gpu);

    let garbage = stub(dir.path(), "garbage", "echo 'No devices were found'");
    assert_eq!(GpuProbe::with_program(&garbage).read(), None);

    let failing = stub(dir.path(), "failing", "echo 12.0; exit 3");
    assert_eq!(GpuProbe::with_program(&failing).read(), None);

    assert_eq!(
        GpuProbe::with_program(dir.path().join("absent")).read(),
        None
    );
}
