use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pyrafuse::io::gridfile::read_grid;
use pyrafuse::io::segy::{encode_segy, SampleFormat};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pyrafuse"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

struct Work {
    dir: tempfile::TempDir,
}

impl Work {
    fn new(model: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("model.txt"), model).unwrap();
        Work { dir }
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).to_string_lossy().into_owned()
    }

    fn data(&self, name: &str) -> Vec<f64> {
        read_grid(Path::new(&self.path(name))).unwrap().data
    }
}

const SECTION: &str = "nt=96\nnx=40\nsnr_db=12\nseed=3\n\
    event=plane,0.06,1.0,0.4,0.0\nevent=plane,0.2,-0.9,-0.3,0.0\nfault=20,2\n";

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

#[test]
fn pipeline_matches_manual_composition() {
    let w = Work::new(SECTION);
    ok(&["synth", "--spec", &w.path("model.txt"), "--out-dir", &w.path("syn")]);
    let data = w.path("syn/data.grid");
    for fusion in [["--fuse", "median"], ["--fuse", "mean"]] {
        ok(&["pipeline", "--in", &data, "--out", &w.path("auto.grid"), "--scales", "3", fusion[0], fusion[1]]);

        ok(&["pyramid", "--in", &data, "--out-dir", &w.path("pyr"), "--scales", "3"]);
        let mut fuse_args: Vec<String> = vec!["fuse".into()];
        let mut masks = Vec::new();
        for i in 0..3 {
            let level = w.path(&format!("pyr/level_{i}.grid"));
            let a = w.path(&format!("a{i}.grid"));
            let q = w.path(&format!("q{i}.grid"));
            ok(&["attr", "--in", &level, "--out", &a, "--quality-out", &q]);
            let r = w.path(&format!("r{i}.grid"));
            let rq = w.path(&format!("rq{i}.grid"));
            ok(&["resize", "--in", &a, "--quality", &q, "--quality-out", &rq, "--rows", "96", "--cols", "40", "--out", &r]);
            fuse_args.push(r);
            masks.push(rq);
        }
        fuse_args.extend(["--quality".into()]);
        fuse_args.extend(masks);
        fuse_args.extend(["--out".into(), w.path("manual.grid"), fusion[0].into(), fusion[1].into()]);
        let refs: Vec<&str> = fuse_args.iter().map(String::as_str).collect();
        ok(&refs);

        assert_eq!(bits(&w.data("auto.grid")), bits(&w.data("manual.grid")), "{fusion:?}");
    }
}

#[test]
fn single_scale_pipeline_equals_attr() {
    let w = Work::new(SECTION);
    ok(&["synth", "--spec", &w.path("model.txt"), "--out-dir", &w.path("syn")]);
    let data = w.path("syn/data.grid");
    for attr in ["dip", "dip-angle"] {
        ok(&["pipeline", "--in", &data, "--out", &w.path("k1.grid"), "--scales", "1", "--attr", attr]);
        ok(&["attr", "--in", &data, "--out", &w.path("one.grid"), "--attr", attr]);
        assert_eq!(bits(&w.data("k1.grid")), bits(&w.data("one.grid")), "{attr}");
    }
}

#[test]
fn seeded_runs_are_byte_identical_across_thread_counts() {
    let w = Work::new(SECTION);
    let mut outputs = Vec::new();
    for (run, threads) in [("a", "1"), ("b", "4")] {
        let dir = w.path(run);
        let out = bin()
            .env("PYRAFUSE_THREADS", threads)
            .args(["synth", "--spec", &w.path("model.txt"), "--out-dir", &dir])
            .output()
            .unwrap();
        assert!(out.status.success());
        let fused = w.path(&format!("{run}.grid"));
        let out = bin()
            .env("PYRAFUSE_THREADS", threads)
            .args(["pipeline", "--in", &format!("{dir}/data.grid"), "--out", &fused])
            .output()
            .unwrap();
        assert!(out.status.success());
        outputs.push((
            std::fs::read(format!("{dir}/data.grid")).unwrap(),
            std::fs::read(&fused).unwrap(),
        ));
    }
    assert!(outputs[0] == outputs[1]);
}

#[test]
fn synth_writes_truth_and_provenance() {
    let w = Work::new(SECTION);
    ok(&["synth", "--spec", &w.path("model.txt"), "--out-dir", &w.path("syn")]);
    for name in ["data", "truth_dip_p", "support"] {
        assert!(PathBuf::from(w.path(&format!("syn/{name}.grid"))).exists(), "{name}");
    }
    assert!(!PathBuf::from(w.path("syn/truth_dip_q.grid")).exists());
    let info = ok(&["info", "--in", &w.path("syn/data.grid")]);
    let text = String::from_utf8(info.stdout).unwrap();
    assert!(text.contains("dims: 96 x 40"), "{text}");
    assert!(text.contains("meta.noise_rng: ChaCha8Rng/StandardNormal"), "{text}");
    assert!(text.contains("meta.seed: 3"), "{text}");
}

#[test]
fn volume_curvature_and_preview() {
    let w = Work::new(
        "nt=80\nnx=17\nny=15\nevent=quadratic,0.1,1.0,1e-4,-5e-5\nevent=quadratic,0.2,-1.0,1e-4,-5e-5\n",
    );
    ok(&["synth", "--spec", &w.path("model.txt"), "--out-dir", &w.path("syn")]);
    let data = w.path("syn/data.grid");
    let info = String::from_utf8(ok(&["info", "--in", &data]).stdout).unwrap();
    assert!(info.contains("dims: 80 x 17 x 15"), "{info}");

    // curvature needs the time slice
    assert_eq!(run(&["attr", "--in", &data, "--out", &w.path("k.grid"), "--attr", "kpos"]).status.code(), Some(2));
    ok(&["pipeline", "--in", &data, "--out", &w.path("k.grid"), "--attr", "kpos", "--time-index", "25", "--scales", "2"]);
    let k = read_grid(Path::new(&w.path("k.grid"))).unwrap();
    assert_eq!((k.header.rows, k.header.cols), (17, 15));
    assert_eq!(k.header.kind.tag(), "most-positive-curvature");

    ok(&["export-pgm", "--in", &w.path("k.grid"), "--out", &w.path("k.pgm")]);
    let pgm = std::fs::read(w.path("k.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5 15 17 255\n"));
    assert_eq!(pgm.len(), "P5 15 17 255\n".len() + 17 * 15);
    ok(&["export-pgm", "--in", &data, "--time-index", "10", "--out", &w.path("slice.pgm")]);
}

#[test]
fn section_curvature_is_a_data_error() {
    let w = Work::new(SECTION);
    ok(&["synth", "--spec", &w.path("model.txt"), "--out-dir", &w.path("syn")]);
    let out = run(&["attr", "--in", &w.path("syn/data.grid"), "--out", &w.path("k.grid"), "--attr", "kneg"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("volume"));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["pipeline", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&[]).status.code(), Some(1));
    let w = Work::new(SECTION);
    std::fs::write(w.path("junk.grid"), b"magic=NOPE\n\n").unwrap();
    let out = run(&["info", "--in", &w.path("junk.grid")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("NOPE"));
    let out = run(&["info", "--in", &w.path("missing.grid")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn too_many_scales_names_the_limit() {
    let w = Work::new(SECTION);
    ok(&["synth", "--spec", &w.path("model.txt"), "--out-dir", &w.path("syn")]);
    let out = run(&["pipeline", "--in", &w.path("syn/data.grid"), "--out", &w.path("x.grid"), "--scales", "9"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("at most"), "{err}");
}

#[test]
fn weighted_and_rank_fusion_options() {
    let w = Work::new(SECTION);
    ok(&["synth", "--spec", &w.path("model.txt"), "--out-dir", &w.path("syn")]);
    let data = w.path("syn/data.grid");
    ok(&["pipeline", "--in", &data, "--out", &w.path("w.grid"), "--scales", "2", "--fuse", "wmean", "--weights", "1,0"]);
    ok(&["pipeline", "--in", &data, "--out", &w.path("m.grid"), "--scales", "1"]);
    // all weight on scale 0 with masks applied reproduces scale 0 where it is valid
    let wm = w.data("w.grid");
    let single = w.data("m.grid");
    let same = wm.iter().zip(&single).filter(|(a, b)| a == b).count();
    assert!(same as f64 > 0.95 * single.len() as f64);
    ok(&["pipeline", "--in", &data, "--out", &w.path("r.grid"), "--scales", "3", "--fuse", "rank", "--rank", "2"]);
    let out = run(&["pipeline", "--in", &data, "--out", &w.path("r.grid"), "--scales", "3", "--fuse", "rank", "--rank", "3"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["pipeline", "--in", &data, "--out", &w.path("r.grid"), "--scales", "2", "--fuse", "wmean", "--weights", "1,2,3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn segy_import_round_trip() {
    let w = Work::new("");
    let mut traces = Vec::new();
    for il in 0..3 {
        for xl in 0..4 {
            traces.push((il + 1, xl + 10, (0..16).map(|t| (t as f32 * 0.25 - il as f32) * (xl as f32 + 1.0)).collect()));
        }
    }
    for (format, name) in [(SampleFormat::Ibm, "ibm"), (SampleFormat::Ieee, "ieee")] {
        let bytes = encode_segy(&traces, 4000, format).unwrap();
        let src = w.path(&format!("{name}.sgy"));
        std::fs::write(&src, bytes).unwrap();
        ok(&["segy-import", "--in", &src, "--out", &w.path("vol.grid"), "--dx", "12.5"]);
        let doc = read_grid(Path::new(&w.path("vol.grid"))).unwrap();
        let vol = doc.to_volume().unwrap();
        assert_eq!(vol.dims(), (16, 4, 3));
        assert_eq!(vol.intervals().1, 12.5);
        for (il, xl, samples) in &traces {
            for (t, &v) in samples.iter().enumerate() {
                let got = vol.get(t, (*xl - 10) as usize, (*il - 1) as usize);
                assert!((got - v as f64).abs() <= 1e-6 * v.abs().max(1.0) as f64);
            }
        }
        ok(&["segy-import", "--in", &src, "--out", &w.path("sec.grid"), "--max-traces", "3"]);
        let sec = read_grid(Path::new(&w.path("sec.grid"))).unwrap().to_section().unwrap();
        assert_eq!(sec.grid.dims(), (16, 3));
    }
}
