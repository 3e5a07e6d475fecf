use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nimbus::spectral::GammaModel;
use nimbus::{read_raster, write_raster, BandRaster, MultiBandImage};
use tempfile::TempDir;

fn nimbus(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nimbus")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn value(text: &str, key: &str) -> f64 {
    let prefix = format!("{key} = ");
    text.lines()
        .find_map(|l| l.strip_prefix(prefix.as_str()))
        .unwrap_or_else(|| panic!("{key} missing in\n{text}"))
        .parse()
        .unwrap()
}

fn ramp(w: usize, h: usize, bands: usize, scale: f64) -> MultiBandImage {
    MultiBandImage::new(
        (0..bands)
            .map(|b| {
                BandRaster::from_fn(w, h, None, |x, y| {
                    scale * ((x * 7 + y * 13 + b * 5) % 97) as f64 / 97.0
                })
                .unwrap()
            })
            .collect(),
    )
    .unwrap()
}

fn save(dir: &Path, name: &str, img: &MultiBandImage) -> PathBuf {
    let path = dir.join(name);
    write_raster(img, &path).unwrap();
    path
}

#[test]
fn calibrate_writes_toa_and_validates() {
    let tmp = TempDir::new().unwrap();
    let dn = save(tmp.path(), "dn.ras", &ramp(8, 8, 2, 1000.0));
    let out = tmp.path().join("toa.ras");
    let r = nimbus(&[
        "calibrate", "--in", p(&dn), "--out", p(&out), "--gain", "2e-5", "--offset", "-0.1", "--sun-elev", "45",
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let toa = read_raster(&out).unwrap();
    let src = read_raster(&dn).unwrap();
    let expected = (2e-5 * f64::from(src.band(1).get(3, 4)) - 0.1) / 45f64.to_radians().sin();
    assert!((f64::from(toa.band(1).get(3, 4)) - expected).abs() < 1e-6);

    let missing = nimbus(&["calibrate", "--in", p(&dn), "--out", p(&out), "--offset", "0", "--sun-elev", "45"]);
    assert_eq!(code(&missing), 2);
    let flat_sun = nimbus(&[
        "calibrate", "--in", p(&dn), "--out", p(&out), "--gain", "1", "--offset", "0", "--sun-elev", "0",
    ]);
    assert_eq!(code(&flat_sun), 4);
    let absent = nimbus(&[
        "calibrate", "--in", "/nonexistent/x.ras", "--out", p(&out), "--gain", "1", "--offset", "0", "--sun-elev", "30",
    ]);
    assert_eq!(code(&absent), 3);
}

#[test]
fn prepare_tiles_cleans_and_indexes() {
    let tmp = TempDir::new().unwrap();
    let input = tmp.path().join("in");
    fs::create_dir(&input).unwrap();
    save(&input, "scene.ras", &ramp(1024, 1024, 1, 0.5));
    let out = tmp.path().join("out");
    let r = nimbus(&["prepare", "--in-dir", p(&input), "--out-dir", p(&out)]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let count = value(&stdout(&r), "patches") as usize;
    assert!(count > 0 && count <= 25);
    let index = fs::read_to_string(out.join("index.tsv")).unwrap();
    assert_eq!(index.lines().filter(|l| !l.starts_with('#')).count(), count);
    let first = read_raster(out.join("scene_p0_0.ras")).unwrap();
    assert_eq!((first.width(), first.height()), (512, 512));
    assert!(first.band(0).max() <= 1.0 && first.band(0).min() >= -1.0);

    let raw = tmp.path().join("raw");
    let r = nimbus(&["prepare", "--in-dir", p(&input), "--out-dir", p(&raw), "--no-normalize"]);
    assert_eq!(code(&r), 0);
    let raw_first = read_raster(raw.join("scene_p0_0.ras")).unwrap();
    let src = read_raster(input.join("scene.ras")).unwrap();
    assert_eq!(raw_first.band(0).get(10, 3), src.band(0).get(10, 3));

    let empty = tmp.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let out_empty = tmp.path().join("out_empty");
    let r = nimbus(&["prepare", "--in-dir", p(&empty), "--out-dir", p(&out_empty)]);
    assert_eq!(code(&r), 0);
    assert!(String::from_utf8_lossy(&r.stderr).contains("warning"));
    let index = fs::read_to_string(out_empty.join("index.tsv")).unwrap();
    assert_eq!(index.lines().filter(|l| !l.starts_with('#')).count(), 0);
}

#[test]
fn collect_and_fit_recover_coefficient() {
    let tmp = TempDir::new().unwrap();
    let profile = nimbus::SensorProfile::landsat89();
    let model = GammaModel::default();
    let cirrus = BandRaster::from_fn(50, 40, Some(1.375), |x, y| 0.001 + 0.2 * (x + 50 * y) as f64 / 2000.0).unwrap();
    let field = nimbus::spatial::CloudField::new(cirrus.clone(), 1.375).unwrap();
    let bands = nimbus::estimate_cloud(&field, &profile, &model).unwrap();
    let bands_path = save(tmp.path(), "bands.ras", &bands);
    let cirrus_path = save(tmp.path(), "cirrus.ras", &MultiBandImage::single(cirrus));
    let csv = tmp.path().join("samples.csv");
    let r = nimbus(&["collect-samples", "--bands", p(&bands_path), "--cirrus", p(&cirrus_path), "--out", p(&csv)]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(value(&stdout(&r), "samples") as usize, 5 * 2000);

    let r = nimbus(&["fit-lsgf", "--samples", p(&csv)]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let text = stdout(&r);
    assert!(text.contains("aggregator = mean"));
    assert!((value(&text, "coefficient") + 0.14).abs() < 1e-3);
    assert!(value(&text, "r_squared_mean") > 0.999);

    let report = tmp.path().join("fit.txt");
    let r = nimbus(&["fit-lsgf", "--samples", p(&csv), "--bins", "40", "--aggregator", "median", "--out", p(&report)]);
    assert_eq!(code(&r), 0);
    let text = fs::read_to_string(&report).unwrap();
    assert!(text.contains("aggregator = median") && text.contains("bin_count = 40"));

    let bad = nimbus(&["fit-lsgf", "--samples", p(&csv), "--aggregator", "max"]);
    assert_eq!(code(&bad), 2);

    let single = tmp.path().join("single.csv");
    fs::write(&single, "c_r,gamma\n0.05,0.42\n0.05,0.41\n").unwrap();
    assert_eq!(code(&nimbus(&["fit-lsgf", "--samples", p(&single)])), 4);
}

#[test]
fn synth_is_deterministic_per_profile() {
    let tmp = TempDir::new().unwrap();
    let ground = save(tmp.path(), "ground.ras", &ramp(64, 48, 5, 0.3));
    let run = |dir: &str, extra: &[&str]| {
        let out = tmp.path().join(dir);
        let mut args = vec!["synth", "--seed", "42", "--ground", p(&ground), "--out-dir", p(&out)];
        args.extend_from_slice(extra);
        let r = nimbus(&args);
        assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
        (out, stdout(&r))
    };
    let (a, line_a) = run("a", &["--augment", "rot90"]);
    let (b, line_b) = run("b", &["--augment", "rot90"]);
    assert_eq!(line_a, line_b);
    for f in ["cirrus.ras", "cloud.ras", "ground.ras", "cloudy.ras"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let cloudy = read_raster(a.join("cloudy.ras")).unwrap();
    assert_eq!((cloudy.width(), cloudy.height(), cloudy.band_count()), (48, 64, 5));

    let out = tmp.path().join("gf");
    let r = nimbus(&[
        "synth", "--profile", "gaofen2", "--seed", "7", "--width", "32", "--height", "16", "--out-dir", p(&out),
    ]);
    assert_eq!(code(&r), 0);
    let cloud = read_raster(out.join("cloud.ras")).unwrap();
    assert_eq!((cloud.band_count(), cloud.width(), cloud.height()), (4, 32, 16));

    assert_eq!(code(&nimbus(&["synth", "--profile", "modis", "--seed", "1", "--out-dir", p(&out)])), 2);
    assert_eq!(code(&nimbus(&["synth", "--out-dir", p(&out)])), 2);
}

#[test]
fn build_dataset_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let grounds = tmp.path().join("grounds");
    fs::create_dir(&grounds).unwrap();
    for k in 0..3 {
        save(&grounds, &format!("g{k}.ras"), &ramp(32, 32, 5, 0.1 * (k + 1) as f64));
    }
    let build = |dir: &str| {
        let out = tmp.path().join(dir);
        let r = nimbus(&["build-dataset", "--grounds", p(&grounds), "--n", "10", "--seed", "9", "--out-dir", p(&out)]);
        assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
        out
    };
    let (a, b) = (build("a"), build("b"));
    let manifest = fs::read_to_string(a.join("manifest.tsv")).unwrap();
    assert_eq!(manifest, fs::read_to_string(b.join("manifest.tsv")).unwrap());
    assert_eq!(manifest.lines().filter(|l| !l.starts_with('#')).count(), 10);
    for sub in ["ground", "cirrus", "cloud", "cloudy"] {
        for i in 0..10 {
            let f = format!("{sub}/{i:06}.ras");
            assert_eq!(fs::read(a.join(&f)).unwrap(), fs::read(b.join(&f)).unwrap(), "{f}");
        }
    }

    let empty = tmp.path().join("none");
    fs::create_dir(&empty).unwrap();
    let r = nimbus(&["build-dataset", "--grounds", p(&empty), "--n", "3", "--seed", "1", "--out-dir", p(&tmp.path().join("c"))]);
    assert_eq!(code(&r), 2);
}

#[test]
fn correct_round_trips_synth_output() {
    let tmp = TempDir::new().unwrap();
    let ground = save(tmp.path(), "ground.ras", &ramp(40, 40, 5, 0.4));
    let synth_dir = tmp.path().join("s");
    let r = nimbus(&[
        "synth", "--seed", "3", "--ground", p(&ground), "--no-parallax", "--out-dir", p(&synth_dir),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let out = tmp.path().join("corrected.ras");
    let report = tmp.path().join("report.txt");
    let r = nimbus(&[
        "correct",
        "--cloudy",
        p(&synth_dir.join("cloudy.ras")),
        "--cirrus",
        p(&synth_dir.join("cirrus.ras")),
        "--out",
        p(&out),
        "--report",
        p(&report),
        "--reference",
        p(&ground),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    assert!(value(&stdout(&r), "rmse_vs_reference") < 1e-6);
    assert!(fs::read_to_string(&report).unwrap().contains("rmse_vs_reference"));

    // no cirrus: output equals input
    let zero = save(tmp.path(), "zero.ras", &MultiBandImage::single(BandRaster::filled(40, 40, None, 0.0).unwrap()));
    let same = tmp.path().join("same.ras");
    let r = nimbus(&["correct", "--cloudy", p(&ground), "--cirrus", p(&zero), "--out", p(&same)]);
    assert_eq!(code(&r), 0);
    assert_eq!(read_raster(&same).unwrap(), read_raster(&ground).unwrap());

    let small = save(tmp.path(), "small.ras", &MultiBandImage::single(BandRaster::filled(20, 40, None, 0.0).unwrap()));
    let r = nimbus(&["correct", "--cloudy", p(&ground), "--cirrus", p(&small), "--out", p(&same)]);
    assert_eq!(code(&r), 4);
}

#[test]
fn evaluate_reports_metrics() {
    let tmp = TempDir::new().unwrap();
    let a = save(tmp.path(), "a.ras", &ramp(32, 32, 3, 0.8));
    let b = save(tmp.path(), "b.ras", &ramp(32, 32, 3, 0.7));
    let csv = tmp.path().join("m.csv");

    let r = nimbus(&["evaluate", "--a", p(&a), "--b", p(&a), "--overlap", "--csv", p(&csv)]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let text = stdout(&r);
    assert!(text.contains("psnr = inf"));
    assert!((value(&text, "ssim") - 1.0).abs() < 1e-12);
    assert_eq!(value(&text, "rmse"), 0.0);
    assert_eq!(value(&text, "overlap"), 1.0);

    let r = nimbus(&["evaluate", "--a", p(&a), "--b", p(&b), "--csv", p(&csv), "--per-band-cc"]);
    assert_eq!(code(&r), 0);
    let text = stdout(&r);
    assert!(value(&text, "psnr").is_finite());
    assert!(text.contains("cc_per_band"));
    let rows = fs::read_to_string(&csv).unwrap();
    assert_eq!(rows.lines().next().unwrap(), "name,psnr,ssim,cc,sam,rmse");
    assert_eq!(rows.lines().count(), 3);

    let one = save(tmp.path(), "one.ras", &ramp(32, 32, 1, 0.8));
    assert_eq!(code(&nimbus(&["evaluate", "--a", p(&a), "--b", p(&one)])), 4);
}

#[test]
fn config_file_overrides_defaults() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("nimbus.ini");
    fs::write(&cfg, "[profile.tri]\nbands = b:0.48 g:0.56 r:0.66\n").unwrap();
    let out = tmp.path().join("o");
    let r = nimbus(&[
        "--config", p(&cfg), "synth", "--profile", "tri", "--seed", "1", "--width", "16", "--height", "16", "--out-dir", p(&out),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(read_raster(out.join("cloud.ras")).unwrap().band_count(), 3);

    fs::write(&cfg, "[gamma]\ncoefficient = nope\n").unwrap();
    let r = nimbus(&["--config", p(&cfg), "synth", "--seed", "1", "--out-dir", p(&out)]);
    assert_eq!(code(&r), 4);
}
