//! Persistence: binary field snapshots, `key=value` run configurations,
//! energy-record CSV and audit reports. Files are written atomically.
//!
//! Snapshot layout (all little-endian):
//!
//! | offset | size | content                                  |
//! |--------|------|------------------------------------------|
//! | 0      | 8    | magic `QRNSFLD1`                         |
//! | 8      | 4    | `n` (u32)                                |
//! | 12     | 4    | component count (u32, always 3)          |
//! | 16     | 8    | time (f64)                               |
//! | 24     | 1    | mode (0 classical, 1 quasi_relativistic) |
//! | 25     | 8    | `c` (f64)                                |
//! | 33     | 8    | `alpha` (f64)                            |
//! | 41     | ...  | coefficients as `(re, im)` f64 pairs     |
//!
//! Coefficients are stored component-major, each component in the flat
//! FFT order of [`Lattice`](crate::lattice::Lattice).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex;

use crate::diagnostics::{AuditResult, EnergyRecord};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::lattice::Lattice;
use crate::ops::{ConvectionMode, ModelParams};
use crate::scalar::Real;
use crate::timestepper::{ForcingSpec, InitialSpec, SimConfig};

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"QRNSFLD1";
pub const SNAPSHOT_HEADER_LEN: usize = 41;
/// Hermitian defect above which a snapshot read carries a warning.
pub const HERMITIAN_WARN: f64 = 1e-12;

pub const RECORDS_HEADER: &str =
    "t,dt,l2_sq,h1_semi_sq,h2_sq,b_uuu,f_l2_sq,f_vdual_sq,work,max_speed";
pub const AUDIT_HEADER: &str = "audit,pass,margin,bound,observed";

/// Writes `bytes` to a temporary file beside `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::param("path", format!("{} has no file name", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        name.to_string_lossy(),
        std::process::id()
    ));
    fs::write(&tmp, bytes)?;
    if let Err(e) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotMeta {
    pub time: f64,
    pub mode: ConvectionMode,
    pub c: f64,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub field: SpectralField<f64>,
    pub meta: SnapshotMeta,
    /// Set when the coefficients are not Hermitian to within [`HERMITIAN_WARN`].
    pub warning: Option<String>,
}

pub fn encode_snapshot<T: Real>(field: &SpectralField<T>, meta: &SnapshotMeta) -> Vec<u8> {
    let lat = field.lattice();
    let mut out = Vec::with_capacity(SNAPSHOT_HEADER_LEN + 3 * lat.len() * 16);
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.extend_from_slice(&(lat.n() as u32).to_le_bytes());
    out.extend_from_slice(&3u32.to_le_bytes());
    out.extend_from_slice(&meta.time.to_le_bytes());
    out.push(meta.mode.flag());
    out.extend_from_slice(&meta.c.to_le_bytes());
    out.extend_from_slice(&meta.alpha.to_le_bytes());
    for comp in field.components() {
        for z in comp {
            out.extend_from_slice(&z.re.as_f64().to_le_bytes());
            out.extend_from_slice(&z.im.as_f64().to_le_bytes());
        }
    }
    out
}

fn f64_at(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap())
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

/// Parses snapshot bytes; `path` only labels errors.
pub fn decode_snapshot(bytes: &[u8], path: &Path) -> Result<Snapshot> {
    let bad = |message: String| Error::Snapshot {
        path: path.to_path_buf(),
        message,
    };
    if bytes.len() < 8 {
        return Err(Error::Truncated {
            expected: SNAPSHOT_HEADER_LEN as u64,
            actual: bytes.len() as u64,
        });
    }
    if &bytes[..8] != SNAPSHOT_MAGIC {
        return Err(Error::BadMagic {
            found: bytes[..8].try_into().unwrap(),
        });
    }
    if bytes.len() < SNAPSHOT_HEADER_LEN {
        return Err(Error::Truncated {
            expected: SNAPSHOT_HEADER_LEN as u64,
            actual: bytes.len() as u64,
        });
    }
    let n = u32_at(bytes, 8) as usize;
    let lat = Lattice::new(n).map_err(|e| bad(e.to_string()))?;
    let comps = u32_at(bytes, 12);
    if comps != 3 {
        return Err(bad(format!("component count {comps}, expected 3")));
    }
    let time = f64_at(bytes, 16);
    let mode = ConvectionMode::from_flag(bytes[24])
        .ok_or_else(|| bad(format!("unknown mode flag {}", bytes[24])))?;
    let meta = SnapshotMeta {
        time,
        mode,
        c: f64_at(bytes, 25),
        alpha: f64_at(bytes, 33),
    };
    let expected = (SNAPSHOT_HEADER_LEN + 3 * lat.len() * 16) as u64;
    let actual = bytes.len() as u64;
    if actual < expected {
        return Err(Error::Truncated { expected, actual });
    }
    if actual > expected {
        return Err(bad(format!(
            "size mismatch: expected {expected} bytes, found {actual}"
        )));
    }
    let mut at = SNAPSHOT_HEADER_LEN;
    let components = std::array::from_fn(|_| {
        (0..lat.len())
            .map(|_| {
                let z = Complex::new(f64_at(bytes, at), f64_at(bytes, at + 8));
                at += 16;
                z
            })
            .collect()
    });
    let field = SpectralField::from_components(lat, components);
    if !field.is_finite() {
        return Err(bad("non-finite coefficient".into()));
    }
    let defect = field.hermitian_defect();
    let warning = (defect > HERMITIAN_WARN)
        .then(|| format!("Hermitian symmetry defect {defect:e} exceeds {HERMITIAN_WARN:e}"));
    Ok(Snapshot {
        field,
        meta,
        warning,
    })
}

pub fn write_snapshot<T: Real>(
    field: &SpectralField<T>,
    meta: &SnapshotMeta,
    path: &Path,
) -> Result<()> {
    write_atomic(path, &encode_snapshot(field, meta))
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let bytes = fs::read(path).map_err(|e| Error::Snapshot {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    decode_snapshot(&bytes, path)
}

fn cfg_err(line: Option<usize>, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

/// Raw `key = value` entries with their line numbers.
struct Entries {
    map: HashMap<String, (usize, String)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap().trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| {
                cfg_err(Some(line), format!("expected key=value, got `{content}`"))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !KNOWN_KEYS.contains(&key) {
                return Err(cfg_err(Some(line), format!("unknown key `{key}`")));
            }
            if let Some((first, _)) = map.insert(key.to_string(), (line, value.to_string())) {
                return Err(cfg_err(
                    Some(line),
                    format!("duplicate key `{key}` (first on line {first})"),
                ));
            }
        }
        Ok(Entries { map })
    }

    fn raw(&self, key: &str) -> Option<&(usize, String)> {
        self.map.get(key)
    }

    fn get<V: std::str::FromStr>(&self, key: &str) -> Result<Option<(usize, V)>> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<V>()
                .map(|p| Some((*line, p)))
                .map_err(|_| cfg_err(Some(*line), format!("cannot parse `{v}` for `{key}`"))),
        }
    }

    fn require<V: std::str::FromStr>(&self, key: &str) -> Result<(usize, V)> {
        self.get(key)?
            .ok_or_else(|| cfg_err(None, format!("missing required key `{key}`")))
    }

    fn real(&self, key: &str, ok: impl Fn(f64) -> bool, rule: &str) -> Result<f64> {
        let (line, v) = self.require::<f64>(key)?;
        if !ok(v) {
            return Err(cfg_err(
                Some(line),
                format!("`{key}` = {v} out of range: {rule}"),
            ));
        }
        Ok(v)
    }

    /// Rejects keys of a prefix that the chosen kind does not use.
    fn only(&self, prefix: &str, kind: &str, allowed: &[&str]) -> Result<()> {
        for (key, (line, _)) in &self.map {
            if let Some(rest) = key.strip_prefix(prefix) {
                if rest != "kind" && !allowed.contains(&rest) {
                    return Err(cfg_err(
                        Some(*line),
                        format!("`{key}` does not apply to {prefix}kind={kind}"),
                    ));
                }
            }
        }
        Ok(())
    }
}

const KNOWN_KEYS: &[&str] = &[
    "n",
    "alpha",
    "c",
    "mode",
    "t_end",
    "cfl_safety",
    "dt_max",
    "record_every",
    "seed",
    "initial.kind",
    "initial.amplitude",
    "initial.energy",
    "initial.peak_wavenumber",
    "initial.seed",
    "initial.path",
    "forcing.kind",
    "forcing.path",
    "forcing.energy_rate",
    "forcing.peak_wavenumber",
    "forcing.seed",
    "forcing.refresh_interval",
];

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

fn non_negative(v: f64) -> bool {
    v.is_finite() && v >= 0.0
}

/// Parses a run configuration. Relative paths are kept as written.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    let e = Entries::parse(text)?;
    let (n_line, n) = e.require::<usize>("n")?;
    Lattice::new(n).map_err(|err| cfg_err(Some(n_line), err.to_string()))?;
    let alpha = e.real("alpha", positive, "must be > 0")?;
    let c = e.real("c", positive, "must be > 0")?;
    let (mode_line, mode_raw) = e.require::<String>("mode")?;
    let mode = mode_raw
        .parse::<ConvectionMode>()
        .map_err(|m| cfg_err(Some(mode_line), m))?;
    let t_end = e.real("t_end", non_negative, "must be >= 0")?;
    let cfl_safety = e.real("cfl_safety", |v| v > 0.0 && v <= 1.0, "must lie in (0, 1]")?;
    let dt_max = e.real("dt_max", positive, "must be > 0")?;
    let (re_line, record_every) = e.require::<u64>("record_every")?;
    if record_every == 0 {
        return Err(cfg_err(Some(re_line), "`record_every` must be at least 1"));
    }
    let (_, seed) = e.require::<u64>("seed")?;

    let spectrum = |prefix: &str, energy_key: &str| -> Result<(f64, f64, u64)> {
        let energy = e.real(
            &format!("{prefix}{energy_key}"),
            non_negative,
            "must be >= 0",
        )?;
        let kp = e.real(
            &format!("{prefix}peak_wavenumber"),
            |v| v.is_finite() && v >= 1.0,
            "must be >= 1",
        )?;
        let s = e
            .get::<u64>(&format!("{prefix}seed"))?
            .map_or(seed, |(_, s)| s);
        Ok((energy, kp, s))
    };

    let (kind_line, kind) = e.require::<String>("initial.kind")?;
    let initial = match kind.as_str() {
        "taylor_green" => {
            e.only("initial.", &kind, &["amplitude"])?;
            InitialSpec::TaylorGreen {
                amplitude: e.real("initial.amplitude", f64::is_finite, "must be finite")?,
            }
        }
        "random_solenoidal" => {
            e.only("initial.", &kind, &["energy", "peak_wavenumber", "seed"])?;
            let (energy, peak_wavenumber, seed) = spectrum("initial.", "energy")?;
            InitialSpec::RandomSolenoidal {
                energy,
                peak_wavenumber,
                seed,
            }
        }
        "from_snapshot" => {
            e.only("initial.", &kind, &["path"])?;
            InitialSpec::FromSnapshot {
                path: PathBuf::from(e.require::<String>("initial.path")?.1),
            }
        }
        other => {
            return Err(cfg_err(
                Some(kind_line),
                format!("unknown initial.kind `{other}`; expected one of {{taylor_green, random_solenoidal, from_snapshot}}"),
            ))
        }
    };

    let forcing = match e.get::<String>("forcing.kind")? {
        None => {
            e.only("forcing.", "zero", &[])?;
            ForcingSpec::Zero
        }
        Some((line, kind)) => match kind.as_str() {
            "zero" => {
                e.only("forcing.", &kind, &[])?;
                ForcingSpec::Zero
            }
            "steady" => {
                e.only("forcing.", &kind, &["path"])?;
                ForcingSpec::SteadyFile {
                    path: PathBuf::from(e.require::<String>("forcing.path")?.1),
                }
            }
            "random_solenoidal_in_time" => {
                e.only("forcing.", &kind, &["energy_rate", "peak_wavenumber", "seed", "refresh_interval"])?;
                let (energy_rate, peak_wavenumber, seed) = spectrum("forcing.", "energy_rate")?;
                ForcingSpec::RandomSolenoidalInTime {
                    energy_rate,
                    peak_wavenumber,
                    seed,
                    refresh_interval: e.real("forcing.refresh_interval", positive, "must be > 0")?,
                }
            }
            other => {
                return Err(cfg_err(
                    Some(line),
                    format!("unknown forcing.kind `{other}`; expected one of {{zero, steady, random_solenoidal_in_time}}"),
                ))
            }
        },
    };

    Ok(SimConfig {
        n,
        params: ModelParams { alpha, c },
        mode,
        t_end,
        cfl_safety,
        dt_max,
        initial,
        forcing,
        record_every,
        seed,
    })
}

/// Reads a configuration file, resolving relative snapshot paths against its directory.
pub fn load_config(path: &Path) -> Result<SimConfig> {
    let text = fs::read_to_string(path)?;
    let mut cfg = parse_config(&text)?;
    let base = path.parent().unwrap_or(Path::new(""));
    let resolve = |p: &mut PathBuf| {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    };
    if let InitialSpec::FromSnapshot { path } = &mut cfg.initial {
        resolve(path);
    }
    if let ForcingSpec::SteadyFile { path } = &mut cfg.forcing {
        resolve(path);
    }
    Ok(cfg)
}

/// Renders a configuration in the format [`parse_config`] reads. An inline
/// steady forcing field has no file form and is rejected.
pub fn format_config(cfg: &SimConfig) -> Result<String> {
    let mut s = String::new();
    let _ = writeln!(s, "n={}", cfg.n);
    let _ = writeln!(s, "alpha={:?}", cfg.params.alpha);
    let _ = writeln!(s, "c={:?}", cfg.params.c);
    let _ = writeln!(s, "mode={}", cfg.mode);
    let _ = writeln!(s, "t_end={:?}", cfg.t_end);
    let _ = writeln!(s, "cfl_safety={:?}", cfg.cfl_safety);
    let _ = writeln!(s, "dt_max={:?}", cfg.dt_max);
    let _ = writeln!(s, "record_every={}", cfg.record_every);
    let _ = writeln!(s, "seed={}", cfg.seed);
    match &cfg.initial {
        InitialSpec::TaylorGreen { amplitude } => {
            let _ = writeln!(
                s,
                "initial.kind=taylor_green\ninitial.amplitude={amplitude:?}"
            );
        }
        InitialSpec::RandomSolenoidal {
            energy,
            peak_wavenumber,
            seed,
        } => {
            let _ = writeln!(
                s,
                "initial.kind=random_solenoidal\ninitial.energy={energy:?}\ninitial.peak_wavenumber={peak_wavenumber:?}\ninitial.seed={seed}"
            );
        }
        InitialSpec::FromSnapshot { path } => {
            let _ = writeln!(
                s,
                "initial.kind=from_snapshot\ninitial.path={}",
                path.display()
            );
        }
    }
    match &cfg.forcing {
        ForcingSpec::Zero => {
            let _ = writeln!(s, "forcing.kind=zero");
        }
        ForcingSpec::SteadyFile { path } => {
            let _ = writeln!(s, "forcing.kind=steady\nforcing.path={}", path.display());
        }
        ForcingSpec::Steady(_) => {
            return Err(Error::param(
                "forcing",
                "inline steady forcing has no config-file form",
            ));
        }
        ForcingSpec::RandomSolenoidalInTime {
            energy_rate,
            peak_wavenumber,
            seed,
            refresh_interval,
        } => {
            let _ = writeln!(
                s,
                "forcing.kind=random_solenoidal_in_time\nforcing.energy_rate={energy_rate:?}\nforcing.peak_wavenumber={peak_wavenumber:?}\nforcing.seed={seed}\nforcing.refresh_interval={refresh_interval:?}"
            );
        }
    }
    Ok(s)
}

/// CSV text of energy records, 17 significant digits per value.
pub fn format_records(records: &[EnergyRecord]) -> String {
    let mut s = String::with_capacity(RECORDS_HEADER.len() + 1 + records.len() * 240);
    s.push_str(RECORDS_HEADER);
    s.push('\n');
    for r in records {
        for (i, v) in r.values().iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "{v:.16e}");
        }
        s.push('\n');
    }
    s
}

pub fn parse_records(text: &str) -> Result<Vec<EnergyRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end_matches('\r') == RECORDS_HEADER => {}
        Some(h) => {
            return Err(Error::Records {
                line: 1,
                message: format!("unexpected header `{h}`"),
            })
        }
        None => {
            return Err(Error::Records {
                line: 1,
                message: "empty file".into(),
            })
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(Error::Records {
                line: line_no,
                message: format!("expected 10 fields, found {}", fields.len()),
            });
        }
        let mut v = [0.0; 10];
        for (slot, f) in v.iter_mut().zip(&fields) {
            *slot = f.trim().parse().map_err(|_| Error::Records {
                line: line_no,
                message: format!("cannot parse `{f}`"),
            })?;
        }
        out.push(EnergyRecord::from_values(v));
    }
    Ok(out)
}

pub fn write_records(records: &[EnergyRecord], path: &Path) -> Result<()> {
    write_atomic(path, format_records(records).as_bytes())
}

pub fn read_records(path: &Path) -> Result<Vec<EnergyRecord>> {
    parse_records(&fs::read_to_string(path)?)
}

/// Audit report CSV with columns `audit,pass,margin,bound,observed`.
pub fn format_audits(results: &[AuditResult]) -> String {
    let mut s = String::from(AUDIT_HEADER);
    s.push('\n');
    for r in results {
        let _ = writeln!(
            s,
            "{},{},{:.16e},{:.16e},{:.16e}",
            r.audit,
            if r.pass { "PASS" } else { "FAIL" },
            r.margin,
            r.bound,
            r.observed
        );
    }
    s
}

/// Human-readable audit summary.
pub fn format_summary(results: &[AuditResult]) -> String {
    let mut s = String::new();
    for r in results {
        let _ = writeln!(
            s,
            "{:<22} {}  observed={:.6e} bound={:.6e} margin={:.6e}",
            r.audit,
            if r.pass { "PASS" } else { "FAIL" },
            r.observed,
            r.bound,
            r.margin
        );
    }
    let failed = results.iter().filter(|r| !r.pass).count();
    let _ = writeln!(s, "{} audits, {} failed", results.len(), failed);
    s
}
